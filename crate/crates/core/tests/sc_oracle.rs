mod common;

use polarcomm::builders::{build_and_chain, build_bsc_chain, AndModelParams};
use polarcomm::model::Conditioning;
use polarcomm::rng::{stream, Domain};
use polarcomm::sc::{chain_probability, path_conditionals, sample_sequential, sc_conditional, SampleRule, SymbolChannel};

fn channels(p: f64, q: f64) -> Vec<SymbolChannel> {
    let and = build_and_chain(&AndModelParams::linear(p, q, 2)).unwrap();
    let bsc = build_bsc_chain(0.11, 0.2).unwrap();
    let mut out = Vec::new();
    for m in [&and, &bsc] {
        for r in 0..m.rounds() {
            for c in [Conditioning::None, Conditioning::Transmitter, Conditioning::Receiver] {
                out.push(m.channel(r, c).unwrap());
            }
        }
    }
    out
}

/// Largest deviation of `sc_conditional` from brute-force marginalization over
/// every observation block and prefix.
fn max_deviation(ch: &SymbolChannel, n: usize) -> f64 {
    let table = common::encode_table(n);
    let mut worst: f64 = 0.0;
    for (obs, _) in common::obs_blocks(ch, n) {
        let pairs = common::prefix_pairs(&common::v_law_with(&table, ch, &obs), n);
        for (i, level) in pairs.iter().enumerate() {
            for (px, joint) in level.iter().enumerate() {
                let prefix = common::bits_of(px, i);
                let got = sc_conditional(ch, &obs, &prefix).unwrap();
                let s = joint[0] + joint[1];
                if s == 0.0 {
                    assert!(got.null);
                    assert_eq!(got.pair, [0.5, 0.5]);
                } else {
                    assert!(!got.null);
                    worst = worst.max((got.pair[1] - joint[1] / s).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn conditionals_match_marginalization() {
    let mut worst: f64 = 0.0;
    for ch in channels(0.5, 0.5) {
        for n in [2usize, 4, 8] {
            worst = worst.max(max_deviation(&ch, n));
        }
    }
    for ch in channels(0.3, 0.7) {
        for n in [2usize, 4] {
            worst = worst.max(max_deviation(&ch, n));
        }
    }
    assert!(worst <= 1e-10, "max abs diff {worst}");
}

#[test]
fn path_conditionals_agree_with_single_queries() {
    let ch = &channels(0.5, 0.5)[4];
    let obs = [1, 0, 2, 1, 0, 0, 3, 1].map(|o| o % ch.obs_size());
    let v = [0, 1, 1, 0, 1, 0, 0, 1];
    let all = path_conditionals(ch, &obs, &v).unwrap();
    for i in 0..8 {
        let one = sc_conditional(ch, &obs, &v[..i]).unwrap();
        if !one.null {
            assert!((all[i][1] - one.pair[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn chain_probability_sums_to_one_and_matches_sampling() {
    let ch = build_bsc_chain(0.11, 0.2).unwrap().channel(0, Conditioning::Transmitter).unwrap();
    let policy = [
        SampleRule::UniformHalf,
        SampleRule::PriorConditional,
        SampleRule::ObservationConditional,
        SampleRule::ObservationConditional,
    ];
    let obs = [0, 1, 1, 0];
    let probs: Vec<f64> = (0..16)
        .map(|x| chain_probability(&ch, &obs, &policy, &common::bits_of(x, 4)).unwrap())
        .collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let draws = 40_000;
    let mut counts = [0usize; 16];
    for s in 0..draws {
        let (v, _) = sample_sequential(
            &ch,
            &obs,
            &policy,
            &mut stream(3, Domain::Shared, s),
            &mut stream(3, Domain::Private, s),
        )
        .unwrap();
        counts[v.bits().iter().fold(0, |a, &b| 2 * a + b as usize)] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let f = *c as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((f - p).abs() <= 4.0 * se + 1e-9, "freq {f} prob {p}");
    }
}

#[test]
fn observation_conditional_sampling_reproduces_the_block_law() {
    let ch = build_and_chain(&AndModelParams::linear(0.5, 0.5, 2))
        .unwrap()
        .channel(0, Conditioning::Transmitter)
        .unwrap();
    let obs = [1, 0, 1, 1];
    let policy = [SampleRule::ObservationConditional; 4];
    let law = common::v_law(&ch, &obs);
    let total: f64 = law.iter().map(|(_, w)| w).sum();
    for (v, w) in law {
        let p = chain_probability(&ch, &obs, &policy, &v).unwrap();
        // several u may share no v since G is bijective; each v appears once
        assert!((p - w / total).abs() < 1e-12);
    }
}
