//! Exact and Monte Carlo reliability profiles, and the partition built from them.
use polarcomm::builders::build_bsc_chain;
use polarcomm::model::Conditioning;
use polarcomm::reliability::{build_partition, profile_exact, profile_monte_carlo, PartitionPolicy};

fn main() -> polarcomm::Result<()> {
    let model = build_bsc_chain(0.11, 0.2)?;
    let n = 8;
    let mut profiles = Vec::new();
    for cond in [Conditioning::None, Conditioning::Transmitter, Conditioning::Receiver] {
        let ch = model.channel(0, cond)?;
        let exact = profile_exact(&ch, cond, n)?;
        let mc = profile_monte_carlo(&ch, cond, n, 20_000, 1)?;
        println!("{cond:?}");
        for k in 0..n {
            println!("  i={k}  exact {:.4}  mc {:.4} +- {:.4}", exact.z[k], mc.z[k], mc.stderr[k]);
        }
        profiles.push(exact);
    }
    let policy = PartitionPolicy::threshold_for(n, 0.3);
    let part = build_partition(&profiles[0], &profiles[1], &profiles[2], &policy)?;
    println!("{policy:?}");
    println!("{}", serde_json::to_string(&part)?);
    Ok(())
}
