//! One two-terminal AND execution at N = 64 with its transcript and outputs.
use polarcomm::builders::{build_and_chain, AndModelParams};
use polarcomm::protocol::{plan_protocol, run_trial, FdPolicy, PlanSizing, ProfileChoice};

fn main() -> polarcomm::Result<()> {
    let model = build_and_chain(&AndModelParams::linear(0.5, 0.5, 2))?;
    let n = 64;
    let plans = plan_protocol(
        &model,
        n,
        &PlanSizing::TheoryPlusMargin { margin: 0.05 },
        &ProfileChoice::MonteCarlo { samples: 2000, seed: 1 },
    )?;
    for p in &plans {
        println!(
            "round {} {}: |F_r| {} |F_d| {} |I| {} |I'| {}  rate {:.3} (theory {:.3})",
            p.round + 1,
            p.direction,
            p.partition.f_r.len(),
            p.partition.f_d.len(),
            p.partition.i.len(),
            p.partition.i_prime.len(),
            p.partition.rate(),
            p.theoretical_rate
        );
    }
    let (sources, result) = run_trial(&model, &plans, n, 1, 0, FdPolicy::Sample)?;
    println!("{}", serde_json::to_string_pretty(&result.transcript)?);
    println!("agreement per round: {:?}", result.agreement);
    let truth: Vec<usize> = sources[0].iter().zip(&sources[1]).map(|(x, y)| x & y).collect();
    for out in &result.outputs {
        let wrong = out.values.iter().zip(&truth).filter(|(v, &t)| **v != Some(t as u32)).count();
        println!("{} ({:?}): {wrong} of {n} symbols wrong or erased", out.name, out.role);
    }
    Ok(())
}
