//! Exact total variation and agreement of small AND protocols.
use polarcomm::builders::{build_and_chain, AndModelParams};
use polarcomm::protocol::{plan_protocol, FdPolicy, PlanSizing, ProfileChoice};
use polarcomm::verification::{exact_outcome, exact_q_tv, Side, TvScope};

fn main() -> polarcomm::Result<()> {
    let model = build_and_chain(&AndModelParams::linear(0.5, 0.5, 2))?;
    let sizings = [
        ("threshold beta=0.3", PlanSizing::Threshold { beta: 0.3 }),
        ("fixed delta=1e-3", PlanSizing::FixedThreshold { delta: 1e-3 }),
        ("transmit all", PlanSizing::TransmitAll),
    ];
    for (label, sizing) in sizings {
        for n in [2, 4] {
            let plans = plan_protocol(&model, n, &sizing, &ProfileChoice::Exact)?;
            let tx = exact_q_tv(&model, &plans, n, Side::Tx, TvScope::FullChain, FdPolicy::Sample)?;
            let rx = exact_q_tv(&model, &plans, n, Side::Rx, TvScope::FullChain, FdPolicy::Sample)?;
            let out = exact_outcome(&model, &plans, n, FdPolicy::Sample)?;
            println!("{label:20} N={n}: TV tx {tx:.4} rx {rx:.4}, agreement {:.4}", out.agreement);
        }
    }
    Ok(())
}
