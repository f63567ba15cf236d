//! Per-index reliabilities `Z(V_i | V_1..V_{i-1}, obs)` and the round partition
//! `F_r / F_d / I / I'` built from them.
//!
//! * `F_d`: nearly deterministic given the prefix alone; both sides draw these
//!   from the prefix-only conditional.
//! * `F_r`: nearly uniform even given the transmitter's observation; both
//!   sides draw these from common randomness.
//! * `I`: everything else, drawn by the transmitter from its observation.
//! * `I'`: the part of `I` the receiver cannot reconstruct from its own
//!   observation; sent over the link.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::exact::{block_joint, for_each_obs_block, transform_map, PrefixTable, EXHAUSTIVE_CAP};
use crate::model::Conditioning;
use crate::rng::{stream, Domain};
use crate::sc::{Pair, ScTree, SymbolChannel};
use crate::transform::{log2_exact, transform_in_place};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityProfile {
    #[serde(rename = "N")]
    pub n: usize,
    pub conditioning: Conditioning,
    pub method: ProfileMethod,
    pub z: Vec<f64>,
    /// Standard errors of the Monte Carlo means; zeros for exact profiles.
    pub stderr: Vec<f64>,
}

#[inline]
fn bhattacharyya_pair(p: Pair) -> f64 {
    2.0 * (p[0] * p[1]).sqrt()
}

/// Exact profile by enumerating every observation block and every input block.
pub fn profile_exact(ch: &SymbolChannel, conditioning: Conditioning, n: usize) -> Result<ReliabilityProfile> {
    log2_exact(n)?;
    if n > EXHAUSTIVE_CAP {
        return Err(usage(format!(
            "exact profiles are limited to N <= {EXHAUSTIVE_CAP}; use the Monte Carlo profiler for N = {n}"
        )));
    }
    let map = transform_map(n)?;
    let mut z = vec![0.0; n];
    for_each_obs_block(ch, n, |obs, _| {
        let table = PrefixTable::new(block_joint(ch, obs, &map));
        for (i, zi) in z.iter_mut().enumerate() {
            *zi += (0..1usize << i)
                .map(|k| bhattacharyya_pair(table.joint_pair(i, k)))
                .sum::<f64>();
        }
    });
    Ok(ReliabilityProfile {
        n,
        conditioning,
        method: ProfileMethod::Exact,
        z: z.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        stderr: vec![0.0; n],
    })
}

/// Samples per work unit of the Monte Carlo profiler. Fixed so the summation
/// order does not depend on the number of worker threads.
const MC_CHUNK: usize = 64;

/// Unbiased estimate of every `Z(V_i | V_1..V_{i-1}, obs)` from `samples`
/// draws of `(u, o)`; sample `s` uses its own stream derived from `seed`.
pub fn profile_monte_carlo(
    ch: &SymbolChannel,
    conditioning: Conditioning,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ReliabilityProfile> {
    log2_exact(n)?;
    if samples == 0 {
        return Err(usage("Monte Carlo profile needs at least one sample"));
    }
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(MC_CHUNK)
        .map(|s| (s, (s + MC_CHUNK).min(samples)))
        .collect();
    let partial: Vec<(Vec<f64>, Vec<f64>)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut tree = ScTree::new(n, 1).expect("power of two");
            let mut u = vec![0u8; n];
            let mut obs = vec![0usize; n];
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            for s in lo..hi {
                let mut rng = stream(seed, Domain::Profile, s as u64);
                for j in 0..n {
                    let (bit, o) = ch.sample(&mut rng);
                    u[j] = bit;
                    obs[j] = o;
                }
                transform_in_place(&mut u);
                let v = &u;
                tree.load(0, |j| ch.pair(obs[j]));
                tree.walk(&mut |i, pairs| {
                    let zi = bhattacharyya_pair(pairs[0]);
                    sum[i] += zi;
                    sq[i] += zi * zi;
                    Some(v[i])
                });
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in partial {
        for i in 0..n {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let m = samples as f64;
    let z: Vec<f64> = sum.iter().map(|s| (s / m).clamp(0.0, 1.0)).collect();
    let stderr = sum
        .iter()
        .zip(&sq)
        .map(|(s, q)| {
            if samples < 2 {
                return 0.0;
            }
            let mean = s / m;
            let var = ((q - m * mean * mean) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        })
        .collect();
    Ok(ReliabilityProfile {
        n,
        conditioning,
        method: ProfileMethod::MonteCarlo { samples, seed },
        z,
        stderr,
    })
}

/// Class sizes for rank-based partitions, as fractions of `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTargets {
    /// `|F_d| / N`.
    pub frozen_deterministic: f64,
    /// `|F_r| / N`.
    pub frozen_random: f64,
    /// `|I'| / N`, the message rate.
    pub message: f64,
}

impl RateTargets {
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let c = |f: f64| ((f * n as f64).round().max(0.0) as usize).min(n);
        (c(self.frozen_deterministic), c(self.frozen_random), c(self.message))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionPolicy {
    /// Membership by `z <= delta` / `z >= 1 - delta`.
    Threshold { delta: f64 },
    /// Membership by rank, with class sizes fixed in advance.
    TargetRate(RateTargets),
}

/// Default exponent of the threshold `delta_N = 2^(-N^beta)`.
pub const DEFAULT_BETA: f64 = 0.3;

impl PartitionPolicy {
    pub fn threshold_for(n: usize, beta: f64) -> Self {
        PartitionPolicy::Threshold {
            delta: 2f64.powf(-(n as f64).powf(beta)),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            PartitionPolicy::Threshold { delta } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(usage(format!("threshold {delta} outside (0, 1/2)")));
                }
            }
            PartitionPolicy::TargetRate(t) => {
                let parts = [t.frozen_deterministic, t.frozen_random, t.message];
                if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
                    return Err(usage("target fractions must lie in [0, 1]"));
                }
                if parts.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return Err(usage("target fractions sum above 1"));
                }
            }
        }
        Ok(())
    }
}

/// One round's split of `[N]` (0-based indices, each list ascending).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexPartition {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "F_r")]
    pub f_r: Vec<usize>,
    #[serde(rename = "F_d")]
    pub f_d: Vec<usize>,
    #[serde(rename = "I")]
    pub i: Vec<usize>,
    #[serde(rename = "I_prime")]
    pub i_prime: Vec<usize>,
}

/// Role of a single index within a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexClass {
    FrozenRandom,
    FrozenDeterministic,
    /// In `I'`: sampled by the transmitter and sent.
    Sent,
    /// In `I \ I'`: sampled by the transmitter, reconstructed by the receiver.
    Local,
}

impl IndexPartition {
    /// Everything in `I = I'`: the transmitter samples from its observation and
    /// sends every bit.
    pub fn transmit_all(n: usize) -> Self {
        IndexPartition {
            n,
            f_r: Vec::new(),
            f_d: Vec::new(),
            i: (0..n).collect(),
            i_prime: (0..n).collect(),
        }
    }

    pub fn classes(&self) -> Vec<IndexClass> {
        let mut c = vec![IndexClass::Local; self.n];
        for &k in &self.f_r {
            c[k] = IndexClass::FrozenRandom;
        }
        for &k in &self.f_d {
            c[k] = IndexClass::FrozenDeterministic;
        }
        for &k in &self.i_prime {
            c[k] = IndexClass::Sent;
        }
        c
    }

    pub fn rate(&self) -> f64 {
        self.i_prime.len() as f64 / self.n as f64
    }

    /// Disjoint cover of `[N]` by `F_r, F_d, I` with `I' ⊆ I`.
    pub fn check(&self) -> Result<()> {
        let mut seen = vec![0u8; self.n];
        for &k in self.f_r.iter().chain(&self.f_d).chain(&self.i) {
            if k >= self.n {
                return Err(usage(format!("index {k} outside [0, {})", self.n)));
            }
            seen[k] += 1;
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(usage("F_r, F_d and I do not partition [N]"));
        }
        let mut in_i = vec![false; self.n];
        for &k in &self.i {
            in_i[k] = true;
        }
        if self.i_prime.iter().any(|&k| k >= self.n || !in_i[k]) {
            return Err(usage("I' is not a subset of I"));
        }
        let mut sorted = self.i_prime.clone();
        sorted.dedup();
        if sorted.len() != self.i_prime.len() {
            return Err(usage("I' repeats an index"));
        }
        Ok(())
    }
}

fn ascending(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Build the partition of one round from the three profiles.
///
/// Threshold mode: `F_d = {z_uncond <= d}`, `F_r = {not F_d, z_tx >= 1 - d}`,
/// `I` the rest, `I' = I \ {z_rx <= d}`. Target-rate mode ranks instead:
/// the lowest `z_uncond` go to `F_d`, then the highest `z_tx` to `F_r`, and
/// the highest `z_rx` within `I` form `I'`. Ties break toward lower indices.
pub fn build_partition(
    z_uncond: &ReliabilityProfile,
    z_tx: &ReliabilityProfile,
    z_rx: &ReliabilityProfile,
    policy: &PartitionPolicy,
) -> Result<IndexPartition> {
    let n = z_uncond.n;
    if [z_tx, z_rx].iter().any(|p| p.n != n || p.z.len() != n) || z_uncond.z.len() != n {
        return Err(usage("profiles disagree on N"));
    }
    policy.check()?;
    let (zu, zt, zr) = (&z_uncond.z, &z_tx.z, &z_rx.z);
    let part = match *policy {
        PartitionPolicy::Threshold { delta } => {
            let f_d: Vec<usize> = (0..n).filter(|&k| zu[k] <= delta).collect();
            let f_r: Vec<usize> = (0..n).filter(|&k| zu[k] > delta && zt[k] >= 1.0 - delta).collect();
            let i: Vec<usize> = (0..n).filter(|&k| zu[k] > delta && zt[k] < 1.0 - delta).collect();
            let i_prime = i.iter().copied().filter(|&k| zr[k] > delta).collect();
            IndexPartition { n, f_r, f_d, i, i_prime }
        }
        PartitionPolicy::TargetRate(t) => {
            let (n_d, n_r, n_msg) = t.counts(n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| zu[a].total_cmp(&zu[b]).then(a.cmp(&b)));
            let (f_d, rest) = order.split_at(n_d.min(n));
            let mut rest = rest.to_vec();
            rest.sort_by(|&a, &b| zt[b].total_cmp(&zt[a]).then(a.cmp(&b)));
            let n_r = n_r.min(rest.len());
            let (f_r, i) = rest.split_at(n_r);
            let mut i = i.to_vec();
            i.sort_by(|&a, &b| zr[b].total_cmp(&zr[a]).then(a.cmp(&b)));
            let i_prime = i[..n_msg.min(i.len())].to_vec();
            IndexPartition {
                n,
                f_r: ascending(f_r.to_vec()),
                f_d: ascending(f_d.to_vec()),
                i: ascending(i),
                i_prime: ascending(i_prime),
            }
        }
    };
    part.check()?;
    Ok(part)
}
