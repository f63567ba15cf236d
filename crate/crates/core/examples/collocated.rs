//! Collocated network: two sources broadcast, the sink computes their AND.
use polarcomm::builders::build_collocated_chain;
use polarcomm::protocol::{plan_protocol, FdPolicy, PlanSizing, ProfileChoice};
use polarcomm::verification::simulate;

fn main() -> polarcomm::Result<()> {
    let model = build_collocated_chain(&[0.5, 0.5])?;
    for n in [16, 64, 256] {
        let plans = plan_protocol(
            &model,
            n,
            &PlanSizing::TheoryPlusMargin { margin: 0.05 },
            &ProfileChoice::Auto { samples: 2000, seed: 1 },
        )?;
        let stats = simulate(&model, &plans, n, 200, 2, FdPolicy::Sample)?;
        let dirs: Vec<&str> = plans.iter().map(|p| p.direction.as_str()).collect();
        for f in &stats.functions {
            println!(
                "N={n:4} {dirs:?} rates {:?} {}: block error {:.3} +- {:.3}, symbol error {:.4}",
                stats.mean_rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
                f.name,
                f.block_error,
                f.block_error_stderr,
                f.symbol_error
            );
        }
    }
    Ok(())
}
