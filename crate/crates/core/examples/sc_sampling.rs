//! Successive-cancellation conditionals and sequential sampling for the first
//! AND round, seen from terminal A.
use polarcomm::builders::{build_and_chain, AndModelParams};
use polarcomm::model::Conditioning;
use polarcomm::rng::{stream, Domain};
use polarcomm::sc::{chain_probability, sample_sequential, sc_conditional, SampleRule};

fn main() -> polarcomm::Result<()> {
    let model = build_and_chain(&AndModelParams::linear(0.5, 0.5, 2))?;
    let ch = model.channel(0, Conditioning::Transmitter)?;
    let x = [1, 0, 1, 1];

    let mut prefix = Vec::new();
    for i in 0..4 {
        let c = sc_conditional(&ch, &x, &prefix)?;
        println!("P(V{} = 1 | prefix {prefix:?}, x) = {:.4}", i + 1, c.pair[1]);
        prefix.push((c.pair[1] > 0.5) as u8);
    }

    let policy = [
        SampleRule::UniformHalf,
        SampleRule::PriorConditional,
        SampleRule::ObservationConditional,
        SampleRule::ObservationConditional,
    ];
    let (v, diag) = sample_sequential(
        &ch,
        &x,
        &policy,
        &mut stream(7, Domain::Shared, 0),
        &mut stream(7, Domain::Private, 0),
    )?;
    println!(
        "sampled v = {:?}, probability {:.4}, null events {}",
        v.bits(),
        chain_probability(&ch, &x, &policy, v.bits())?,
        diag.null_events
    );
    Ok(())
}
