mod common;

use polarcomm::builders::{build_and_chain, build_bsc_chain, build_collocated_chain, AndModelParams};
use polarcomm::model::{AuxChainModel, Conditioning};
use polarcomm::protocol::{plan_protocol, PlanSizing, ProfileChoice};
use polarcomm::reliability::{
    build_partition, profile_exact, IndexPartition, PartitionPolicy, ProfileMethod, RateTargets, ReliabilityProfile,
};
use proptest::prelude::*;

fn models() -> Vec<AuxChainModel> {
    vec![
        build_and_chain(&AndModelParams::linear(0.5, 0.5, 2)).unwrap(),
        build_and_chain(&AndModelParams::linear(0.3, 0.6, 4)).unwrap(),
        build_bsc_chain(0.11, 0.2).unwrap(),
        build_collocated_chain(&[0.5, 0.5]).unwrap(),
    ]
}

fn sizings() -> Vec<PlanSizing> {
    vec![
        PlanSizing::Threshold { beta: 0.3 },
        PlanSizing::Threshold { beta: 0.45 },
        PlanSizing::FixedThreshold { delta: 1e-3 },
        PlanSizing::FixedThreshold { delta: 0.2 },
        PlanSizing::TheoryPlusMargin { margin: 0.0 },
        PlanSizing::TheoryPlusMargin { margin: 0.1 },
        PlanSizing::TransmitAll,
    ]
}

fn assert_partition(p: &IndexPartition) {
    p.check().unwrap();
    let mut all: Vec<usize> = p.f_r.iter().chain(&p.f_d).chain(&p.i).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..p.n).collect::<Vec<_>>());
    assert!(p.i_prime.iter().all(|k| p.i.contains(k)));
}

#[test]
fn every_plan_is_a_partition() {
    for m in models() {
        // the four-round chain has large observation alphabets late on
        let ns: &[usize] = if m.rounds() > 2 { &[2, 4] } else { &[2, 4, 8] };
        for &n in ns {
            for s in sizings() {
                for plan in plan_protocol(&m, n, &s, &ProfileChoice::Exact).unwrap() {
                    assert_partition(&plan.partition);
                }
            }
        }
    }
}

#[test]
fn exact_profiles_are_ordered_by_conditioning() {
    // More side information never raises a reliability: Z(.|tx) <= Z(.|rx) <= Z(.)
    let mut violations = 0;
    for m in models() {
        for r in 0..m.rounds() {
            for n in [2usize, 4, 8] {
                let z = |c| profile_exact(&m.channel(r, c).unwrap(), c, n).unwrap().z;
                let (zu, zt, zr) = (z(Conditioning::None), z(Conditioning::Transmitter), z(Conditioning::Receiver));
                for k in 0..n {
                    if zt[k] > zr[k] + 1e-12 || zr[k] > zu[k] + 1e-12 {
                        violations += 1;
                    }
                }
                for delta in [1e-3, 0.05, 0.2, 0.4] {
                    let lo = |zz: &[f64]| (0..n).filter(|&k| zz[k] <= delta).collect::<Vec<_>>();
                    let hi = |zz: &[f64]| (0..n).filter(|&k| zz[k] >= 1.0 - delta).collect::<Vec<_>>();
                    let (l_rx, l_tx) = (lo(&zr), lo(&zt));
                    violations += l_rx.iter().filter(|k| !l_tx.contains(k)).count();
                    let (h_tx, h_rx) = (hi(&zt), hi(&zr));
                    violations += h_tx.iter().filter(|k| !h_rx.contains(k)).count();
                    let l_u = lo(&zu);
                    violations += l_u.iter().filter(|k| !l_rx.contains(k)).count();
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn exact_profiles_match_brute_force() {
    for m in models().iter().take(3) {
        let ch = m.channel(0, Conditioning::Receiver).unwrap();
        for n in [2usize, 4] {
            let fast = profile_exact(&ch, Conditioning::Receiver, n).unwrap().z;
            let slow = common::brute_z(&ch, n);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }
}

fn sorted_profile(n: usize, z: Vec<f64>) -> ReliabilityProfile {
    ReliabilityProfile {
        n,
        conditioning: Conditioning::None,
        method: ProfileMethod::Exact,
        z,
        stderr: vec![0.0; n],
    }
}

fn ordered_triple(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), n).prop_map(|v| {
        let mut zu = Vec::new();
        let mut zt = Vec::new();
        let mut zr = Vec::new();
        for (a, b, c) in v {
            let mut s = [a, b, c];
            s.sort_by(f64::total_cmp);
            zt.push(s[0]);
            zr.push(s[1]);
            zu.push(s[2]);
        }
        (zu, zt, zr)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_profiles_at_1024_give_partitions(
        (zu, zt, zr) in ordered_triple(1024),
        delta in 1e-6f64..0.49,
        fd in 0.0f64..0.5,
        fr in 0.0f64..0.5,
        msg in 0.0f64..1.0,
    ) {
        let n = 1024;
        let (zu, zt, zr) = (sorted_profile(n, zu), sorted_profile(n, zt), sorted_profile(n, zr));
        let p = build_partition(&zu, &zt, &zr, &PartitionPolicy::Threshold { delta }).unwrap();
        assert_partition(&p);
        let msg = msg.min(1.0 - fd - fr);
        let targets = RateTargets { frozen_deterministic: fd, frozen_random: fr, message: msg };
        let p = build_partition(&zu, &zt, &zr, &PartitionPolicy::TargetRate(targets)).unwrap();
        assert_partition(&p);
        let (cd, cr, cm) = targets.counts(n);
        prop_assert_eq!(p.f_d.len(), cd);
        prop_assert_eq!(p.f_r.len(), cr);
        prop_assert_eq!(p.i_prime.len(), cm.min(n - cd - cr));
    }
}

#[test]
fn partition_json_round_trips() {
    let plans = plan_protocol(&models()[0], 8, &PlanSizing::Threshold { beta: 0.3 }, &ProfileChoice::Exact).unwrap();
    let text = serde_json::to_string(&plans[1].partition).unwrap();
    let back: IndexPartition = serde_json::from_str(&text).unwrap();
    assert_eq!(back, plans[1].partition);
    assert!(text.contains("\"I_prime\""));
}
