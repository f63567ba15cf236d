//! Closed-form rates: AND sum-rates and the BSC test channel.
use polarcomm::builders::{bsc_rate, build_bsc_chain, sum_rates};

fn main() -> polarcomm::Result<()> {
    println!("   p    q   R_sum,inf   R_sum,2 (A first)");
    for (p, q) in [(0.5, 0.5), (0.2, 0.8), (0.8, 0.2), (0.9, 0.9)] {
        let s = sum_rates(p, q)?;
        println!("{p:4} {q:4}   {:.6}    {:.6}", s.r_sum_infinity, s.r_sum_two_round_a);
    }
    let m = build_bsc_chain(0.11, 0.2)?;
    println!("BSC I(X;U|Y) = {:.6} (model {:.6})", bsc_rate(0.11, 0.2), m.theoretical_rate(0)?);
    Ok(())
}
