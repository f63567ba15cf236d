use polarcomm::builders::{build_and_chain, build_bsc_chain, AndModelParams};
use polarcomm::model::Conditioning;
use polarcomm::reliability::{profile_exact, profile_monte_carlo};
use polarcomm::sc::SymbolChannel;

fn check(ch: &SymbolChannel, c: Conditioning, n: usize, samples: usize) {
    let exact = profile_exact(ch, c, n).unwrap();
    let mc = profile_monte_carlo(ch, c, n, samples, 9).unwrap();
    for k in 0..n {
        let tol = 3.0 * mc.stderr[k] + 1e-12;
        assert!((mc.z[k] - exact.z[k]).abs() <= tol, "index {k}: {} vs {}", mc.z[k], exact.z[k]);
    }
}

#[test]
fn monte_carlo_brackets_exact() {
    let and = build_and_chain(&AndModelParams::linear(0.4, 0.6, 2)).unwrap();
    let bsc = build_bsc_chain(0.11, 0.2).unwrap();
    for m in [&and, &bsc] {
        for c in [Conditioning::None, Conditioning::Transmitter, Conditioning::Receiver] {
            check(&m.channel(m.rounds() - 1, c).unwrap(), c, 8, 20_000);
        }
    }
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let ch = build_bsc_chain(0.11, 0.2).unwrap().channel(0, Conditioning::Receiver).unwrap();
    let a = profile_monte_carlo(&ch, Conditioning::Receiver, 64, 300, 5).unwrap();
    let b = profile_monte_carlo(&ch, Conditioning::Receiver, 64, 300, 5).unwrap();
    let c = profile_monte_carlo(&ch, Conditioning::Receiver, 64, 300, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.z, c.z);
}

#[test]
fn worker_count_does_not_change_estimates() {
    let ch = build_bsc_chain(0.11, 0.2).unwrap().channel(0, Conditioning::Transmitter).unwrap();
    let run = |k| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| profile_monte_carlo(&ch, Conditioning::Transmitter, 128, 500, 1).unwrap())
    };
    assert_eq!(run(1), run(4));
}
