//! Brute-force blocklength-`N` tables for small `N`.
//!
//! Everything here enumerates all `2^N` input blocks explicitly and never goes
//! through the SC tree, so it serves as an independent reference for it.

use crate::error::{usage, Result};
use crate::sc::{Pair, SymbolChannel};
use crate::transform::apply_transform;
use crate::transform::BitBlock;

/// Largest blocklength accepted by the exhaustive routines.
pub const EXHAUSTIVE_CAP: usize = 8;

/// Blocks are indexed as integers with the first bit most significant.
pub fn block_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | b as usize)
}

pub fn index_block(idx: usize, n: usize) -> Vec<u8> {
    (0..n).map(|j| ((idx >> (n - 1 - j)) & 1) as u8).collect()
}

/// `map[u] = u G_N` on block indices.
pub fn transform_map(n: usize) -> Result<Vec<usize>> {
    if !n.is_power_of_two() || n > 16 {
        return Err(usage(format!("transform map needs a power of two up to 16, got {n}")));
    }
    Ok((0..1usize << n)
        .map(|u| {
            let b = BitBlock::new(index_block(u, n)).expect("power-of-two length");
            block_index(apply_transform(&b).bits())
        })
        .collect())
}

/// `out[v] = P(v, o)` for one observation block (`v = u G_N`).
pub fn block_joint(ch: &SymbolChannel, obs: &[usize], map: &[usize]) -> Vec<f64> {
    let n = obs.len();
    let mut by_u = vec![1.0];
    for &o in obs {
        let p = ch.pair(o);
        by_u = by_u.iter().flat_map(|&w| [w * p[0], w * p[1]]).collect();
    }
    let mut by_v = vec![0.0; 1 << n];
    for (u, w) in by_u.into_iter().enumerate() {
        by_v[map[u]] = w;
    }
    by_v
}

/// Prefix marginals of a block table: `level[i][k] = P(v_1..v_i = k, o)`.
pub struct PrefixTable {
    levels: Vec<Vec<f64>>,
}

impl PrefixTable {
    pub fn new(by_v: Vec<f64>) -> Self {
        let n = by_v.len().trailing_zeros() as usize;
        let mut levels = vec![Vec::new(); n + 1];
        levels[n] = by_v;
        for i in (0..n).rev() {
            let next = &levels[i + 1];
            levels[i] = next.chunks(2).map(|c| c[0] + c[1]).collect();
        }
        PrefixTable { levels }
    }

    pub fn n(&self) -> usize {
        self.levels.len() - 1
    }

    /// Unnormalized `[P(prefix, 0, o), P(prefix, 1, o)]` for the index after `prefix`.
    pub fn joint_pair(&self, len: usize, prefix: usize) -> Pair {
        let l = &self.levels[len + 1];
        [l[2 * prefix], l[2 * prefix + 1]]
    }

    /// Normalized conditional; `None` if the prefix has probability zero.
    pub fn conditional(&self, len: usize, prefix: usize) -> Option<Pair> {
        let p = self.joint_pair(len, prefix);
        let s = p[0] + p[1];
        (s > 0.0).then(|| [p[0] / s, p[1] / s])
    }

    pub fn total(&self) -> f64 {
        self.levels[0][0]
    }
}

/// Visit every observation block whose symbols all have positive probability,
/// together with `P(o)`.
pub fn for_each_obs_block(ch: &SymbolChannel, n: usize, mut f: impl FnMut(&[usize], f64)) {
    let marg = ch.obs_marginal();
    let support: Vec<usize> = (0..marg.len()).filter(|&o| marg[o] > 0.0).collect();
    let mut obs = vec![0usize; n];
    let mut pos = vec![0usize; n];
    if n == 0 || support.is_empty() {
        return;
    }
    loop {
        let mut p = 1.0;
        for j in 0..n {
            obs[j] = support[pos[j]];
            p *= marg[obs[j]];
        }
        f(&obs, p);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < support.len() {
                break;
            }
            pos[k] = 0;
        }
    }
}
