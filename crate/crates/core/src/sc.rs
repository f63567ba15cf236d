//! Successive-cancellation conditionals for nonuniform binary inputs.
//!
//! The blocklength-`N` law is `P(v, o) = prod_j P(u_j, o_j) * 1(u G_N = v)`
//! with `(u_j, o_j)` i.i.d. from a [`SymbolChannel`]. The tree below computes
//! `P(v_i | v_1..v_{i-1}, o)` for each `i` in `O(N log N)` per pass. Each node
//! keeps a normalized probability pair; an all-zero pair marks a prefix of
//! probability zero and propagates unchanged to the leaves.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::pmf::{JointPmf, NORMALIZATION_TOL};
use crate::transform::{log2_exact, reverse_bits, BitBlock};

/// `[P(bit = 0 ...), P(bit = 1 ...)]`.
pub type Pair = [f64; 2];

const UNIFORM: Pair = [0.5, 0.5];

/// Per-symbol joint `P(u, o)` of a binary input `u` and a finite observation `o`.
///
/// Observations over several variables are flattened with the first variable
/// varying fastest: `o = o_0 + s_0 * (o_1 + s_1 * (...))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolChannel {
    table: Vec<Pair>,
}

impl SymbolChannel {
    /// `table[o] = [P(u=0, o), P(u=1, o)]`.
    pub fn new(table: Vec<Pair>) -> Result<Self> {
        if table.is_empty() {
            return Err(usage("symbol channel with an empty observation alphabet"));
        }
        let total: f64 = table.iter().map(|p| p[0] + p[1]).sum();
        if table.iter().flatten().any(|m| !(m.is_finite() && *m >= 0.0))
            || (total - 1.0).abs() > NORMALIZATION_TOL
        {
            return Err(usage("symbol channel table is not a probability distribution"));
        }
        Ok(SymbolChannel { table })
    }

    /// Slice `P(target, obs_vars)` out of a joint table. `target` must be binary.
    pub fn from_joint(joint: &JointPmf, target: &str, obs_vars: &[&str]) -> Result<Self> {
        if joint.size_of(target)? != 2 {
            return Err(usage(format!("{target} is not binary")));
        }
        // marginal is row-major; list observation variables last-first so the
        // first one ends up fastest-varying
        let mut names = vec![target];
        names.extend(obs_vars.iter().rev());
        let m = joint.marginal(&names)?;
        let k = m.mass().len() / 2;
        let table = (0..k).map(|o| [m.mass()[o], m.mass()[k + o]]).collect();
        SymbolChannel::new(table)
    }

    pub fn obs_size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[Pair] {
        &self.table
    }

    pub fn pair(&self, obs: usize) -> Pair {
        self.table[obs]
    }

    /// The same input with the observation discarded.
    pub fn prior(&self) -> SymbolChannel {
        let p1: f64 = self.table.iter().map(|p| p[1]).sum();
        SymbolChannel {
            table: vec![[1.0 - p1, p1]],
        }
    }

    /// `P(o)`.
    pub fn obs_marginal(&self) -> Vec<f64> {
        self.table.iter().map(|p| p[0] + p[1]).collect()
    }

    /// Draw one `(u, o)` pair.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u8, usize) {
        let mut r = rng.gen::<f64>();
        for (o, p) in self.table.iter().enumerate() {
            for u in 0..2 {
                if r < p[u] {
                    return (u as u8, o);
                }
                r -= p[u];
            }
        }
        // rounding slack: fall back to the last positive cell
        let (o, p) = self
            .table
            .iter()
            .enumerate()
            .rev()
            .find(|(_, p)| p[0] + p[1] > 0.0)
            .expect("channel has positive mass");
        ((p[1] > 0.0) as u8, o)
    }

    fn check_obs(&self, obs: &[usize]) -> Result<()> {
        log2_exact(obs.len())?;
        if let Some(o) = obs.iter().find(|&&o| o >= self.table.len()) {
            return Err(usage(format!(
                "observation symbol {o} outside alphabet of size {}",
                self.table.len()
            )));
        }
        Ok(())
    }
}

/// How one index of `v` is produced during sequential sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleRule {
    /// Fair coin from the shared stream.
    UniformHalf,
    /// Sample `P(v_i | v_1..v_{i-1})`, ignoring the observation.
    PriorConditional,
    /// Most likely value of `P(v_i | v_1..v_{i-1})` (ties go to 0).
    PriorArgmax,
    /// Sample `P(v_i | v_1..v_{i-1}, o)`.
    ObservationConditional,
    /// Copy a known bit.
    Pinned(u8),
}

/// One rule per index of the block.
pub type SamplingPolicy = Vec<SampleRule>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScDiagnostics {
    /// Conditionals evaluated on a zero-probability prefix.
    pub null_events: usize,
}

/// Result of [`sc_conditional`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditional {
    pub pair: Pair,
    /// The prefix has probability zero; `pair` is then uniform.
    pub null: bool,
}

#[inline]
fn normalize(p: Pair) -> Pair {
    let s = p[0] + p[1];
    if s > 0.0 {
        [p[0] / s, p[1] / s]
    } else {
        [0.0, 0.0]
    }
}

/// Reusable buffers for the SC tree over several channels sharing one path.
pub(crate) struct ScTree {
    n: usize,
    levels: u32,
    probs: Vec<Vec<Pair>>,
    partial: Vec<u8>,
    v: Vec<u8>,
    scratch: Vec<Pair>,
}

impl ScTree {
    pub(crate) fn new(n: usize, channels: usize) -> Result<Self> {
        let levels = log2_exact(n)?;
        Ok(ScTree {
            n,
            levels,
            probs: vec![vec![[0.0; 2]; 2 * n]; channels],
            partial: vec![0; 2 * n],
            v: vec![0; n],
            scratch: vec![[0.0; 2]; channels],
        })
    }

    /// Load leaf pairs for channel `c`; `leaf(j)` is the pair at block position `j`.
    pub(crate) fn load(&mut self, c: usize, leaf: impl Fn(usize) -> Pair) {
        let n = self.n;
        for k in 0..n {
            self.probs[c][n + k] = normalize(leaf(reverse_bits(k, self.levels)));
        }
    }

    pub(crate) fn v(&self) -> &[u8] {
        &self.v
    }

    /// Walk all indices in order. `decide(i, pairs)` returns the bit taken at
    /// `i`, or `None` to stop early. Returns `false` if stopped.
    pub(crate) fn walk(&mut self, decide: &mut dyn FnMut(usize, &[Pair]) -> Option<u8>) -> bool {
        let n = self.n;
        self.node(n, 0, decide)
    }

    fn node(
        &mut self,
        len: usize,
        offset: usize,
        decide: &mut dyn FnMut(usize, &[Pair]) -> Option<u8>,
    ) -> bool {
        if len == 1 {
            for (s, p) in self.scratch.iter_mut().zip(&self.probs) {
                *s = p[1];
            }
            let Some(bit) = decide(offset, &self.scratch) else {
                return false;
            };
            self.v[offset] = bit;
            self.partial[1] = bit;
            return true;
        }
        let half = len / 2;
        for p in self.probs.iter_mut() {
            let (lo, hi) = p.split_at_mut(len);
            let (l, r) = hi[..len].split_at(half);
            for k in 0..half {
                let (a, b) = (l[k], r[k]);
                lo[half + k] = normalize([a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[0]]);
            }
        }
        if !self.node(half, offset, decide) {
            return false;
        }
        self.partial.copy_within(half..len, len);
        for p in self.probs.iter_mut() {
            let (lo, hi) = p.split_at_mut(len);
            let (l, r) = hi[..len].split_at(half);
            for k in 0..half {
                let c = self.partial[len + k] as usize;
                lo[half + k] = normalize([l[k][c] * r[k][0], l[k][c ^ 1] * r[k][1]]);
            }
        }
        if !self.node(half, offset + half, decide) {
            return false;
        }
        for k in 0..half {
            let c2 = self.partial[half + k];
            self.partial[len + k] ^= c2;
            self.partial[len + half + k] = c2;
        }
        true
    }
}

/// Replace a null pair by the uniform one, counting the event.
#[inline]
fn resolve(pair: Pair, diag: &mut ScDiagnostics) -> Pair {
    if pair[0] + pair[1] > 0.0 {
        pair
    } else {
        diag.null_events += 1;
        UNIFORM
    }
}

/// `P(V_i = . | V_1..V_{i-1} = prefix, O = obs)` with `i = prefix.len() + 1`.
pub fn sc_conditional(ch: &SymbolChannel, obs: &[usize], prefix: &[u8]) -> Result<Conditional> {
    ch.check_obs(obs)?;
    if prefix.len() >= obs.len() {
        return Err(usage("prefix must be shorter than the block"));
    }
    let mut tree = ScTree::new(obs.len(), 1)?;
    tree.load(0, |j| ch.pair(obs[j]));
    let target = prefix.len();
    let mut out = UNIFORM;
    tree.walk(&mut |i, pairs| {
        if i == target {
            out = pairs[0];
            None
        } else {
            Some(prefix[i])
        }
    });
    let null = out[0] + out[1] <= 0.0;
    Ok(Conditional {
        pair: if null { UNIFORM } else { out },
        null,
    })
}

/// Conditionals `P(V_i | v_1..v_{i-1}, o)` along the path `v`, one per index.
pub fn path_conditionals(ch: &SymbolChannel, obs: &[usize], v: &[u8]) -> Result<Vec<Pair>> {
    ch.check_obs(obs)?;
    if v.len() != obs.len() {
        return Err(usage("path and observation lengths differ"));
    }
    let mut tree = ScTree::new(obs.len(), 1)?;
    tree.load(0, |j| ch.pair(obs[j]));
    let mut out = Vec::with_capacity(v.len());
    tree.walk(&mut |i, pairs| {
        out.push(pairs[0]);
        Some(v[i])
    });
    Ok(out)
}

fn check_policy(policy: &[SampleRule], n: usize) -> Result<()> {
    if policy.len() != n {
        return Err(usage(format!(
            "policy covers {} indices, block has {n}",
            policy.len()
        )));
    }
    if policy.iter().any(|r| matches!(r, SampleRule::Pinned(b) if *b > 1)) {
        return Err(usage("pinned bits must be 0 or 1"));
    }
    Ok(())
}

fn two_channel_tree(ch: &SymbolChannel, obs: &[usize]) -> Result<ScTree> {
    let mut tree = ScTree::new(obs.len(), 2)?;
    let prior = ch.prior().pair(0);
    tree.load(0, |_| prior);
    tree.load(1, |j| ch.pair(obs[j]));
    Ok(tree)
}

/// Draw `v` index by index under `policy`.
///
/// `shared` feeds the [`SampleRule::UniformHalf`] indices and nothing else, so
/// two parties holding the same shared stream and the same policy layout draw
/// identical bits there. Every other random choice uses `private`.
pub fn sample_sequential<S: Rng + ?Sized, P: Rng + ?Sized>(
    ch: &SymbolChannel,
    obs: &[usize],
    policy: &[SampleRule],
    shared: &mut S,
    private: &mut P,
) -> Result<(BitBlock, ScDiagnostics)> {
    ch.check_obs(obs)?;
    check_policy(policy, obs.len())?;
    let mut tree = two_channel_tree(ch, obs)?;
    let mut diag = ScDiagnostics::default();
    tree.walk(&mut |i, pairs| {
        let bit = match policy[i] {
            SampleRule::UniformHalf => shared.gen::<bool>() as u8,
            SampleRule::PriorConditional => {
                let p = resolve(pairs[0], &mut diag);
                (private.gen::<f64>() < p[1]) as u8
            }
            SampleRule::PriorArgmax => {
                let p = resolve(pairs[0], &mut diag);
                (p[1] > p[0]) as u8
            }
            SampleRule::ObservationConditional => {
                let p = resolve(pairs[1], &mut diag);
                (private.gen::<f64>() < p[1]) as u8
            }
            SampleRule::Pinned(b) => b,
        };
        Some(bit)
    });
    Ok((BitBlock::new(tree.v().to_vec())?, diag))
}

/// Probability that [`sample_sequential`] outputs `v`, counting the shared
/// coin flips as part of the randomness.
pub fn chain_probability(
    ch: &SymbolChannel,
    obs: &[usize],
    policy: &[SampleRule],
    v: &[u8],
) -> Result<f64> {
    ch.check_obs(obs)?;
    check_policy(policy, obs.len())?;
    if v.len() != obs.len() {
        return Err(usage("block and observation lengths differ"));
    }
    let mut tree = two_channel_tree(ch, obs)?;
    let mut diag = ScDiagnostics::default();
    let mut prob = 1.0;
    tree.walk(&mut |i, pairs| {
        let bit = v[i];
        let f = match policy[i] {
            SampleRule::UniformHalf => 0.5,
            SampleRule::PriorConditional => resolve(pairs[0], &mut diag)[bit as usize],
            SampleRule::PriorArgmax => {
                let p = resolve(pairs[0], &mut diag);
                ((p[1] > p[0]) as u8 == bit) as u8 as f64
            }
            SampleRule::ObservationConditional => resolve(pairs[1], &mut diag)[bit as usize],
            SampleRule::Pinned(b) => (b == bit) as u8 as f64,
        };
        prob *= f;
        if prob == 0.0 {
            None
        } else {
            Some(bit)
        }
    });
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn and_slice() -> SymbolChannel {
        // U ~ X ^ Y-like slice: U given a ternary observation
        SymbolChannel::new(vec![[0.3, 0.0], [0.1, 0.2], [0.05, 0.35]]).unwrap()
    }

    #[test]
    fn n1_base_case_is_the_symbol_conditional() {
        let ch = and_slice();
        for o in 0..3 {
            let c = sc_conditional(&ch, &[o], &[]).unwrap();
            let p = ch.pair(o);
            let s = p[0] + p[1];
            assert!((c.pair[0] - p[0] / s).abs() < 1e-15);
            assert!((c.pair[1] - p[1] / s).abs() < 1e-15);
        }
    }

    #[test]
    fn pinned_everywhere_returns_pins() {
        let ch = and_slice();
        let pins = [1u8, 0, 1, 1];
        let policy: Vec<_> = pins.iter().map(|&b| SampleRule::Pinned(b)).collect();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let (v, _) = sample_sequential(&ch, &[0, 1, 2, 1], &policy, &mut r1, &mut r2).unwrap();
        assert_eq!(v.bits(), &pins);
        assert_eq!(chain_probability(&ch, &[0, 1, 2, 1], &policy, &pins).unwrap(), 1.0);
    }

    #[test]
    fn uniform_half_probability() {
        let ch = and_slice();
        let policy = vec![SampleRule::UniformHalf; 8];
        let p = chain_probability(&ch, &[0; 8], &policy, &[1, 0, 0, 1, 1, 1, 0, 0]).unwrap();
        assert_eq!(p, 2f64.powi(-8));
    }

    #[test]
    fn sampling_is_reproducible() {
        let ch = and_slice();
        let policy = vec![SampleRule::ObservationConditional; 16];
        let obs: Vec<usize> = (0..16).map(|j| j % 3).collect();
        let run = || {
            let mut s = ChaCha8Rng::seed_from_u64(7);
            let mut p = ChaCha8Rng::seed_from_u64(8);
            sample_sequential(&ch, &obs, &policy, &mut s, &mut p).unwrap().0
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn null_prefix_is_flagged() {
        // U = 0 always: any prefix containing a one has probability zero
        let ch = SymbolChannel::new(vec![[1.0, 0.0]]).unwrap();
        let c = sc_conditional(&ch, &[0, 0], &[1]).unwrap();
        assert!(c.null);
        assert_eq!(c.pair, [0.5, 0.5]);
        let policy = vec![SampleRule::Pinned(1), SampleRule::ObservationConditional];
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let (_, d) = sample_sequential(&ch, &[0, 0], &policy, &mut r1, &mut r2).unwrap();
        assert_eq!(d.null_events, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ch = and_slice();
        assert!(sc_conditional(&ch, &[0, 1, 2], &[]).is_err());
        assert!(sc_conditional(&ch, &[0, 3], &[]).is_err());
        assert!(sc_conditional(&ch, &[0, 1], &[0, 1]).is_err());
        assert!(chain_probability(&ch, &[0, 1], &[SampleRule::UniformHalf], &[0, 1]).is_err());
    }

    #[test]
    fn channel_from_joint_flattens_first_variable_fastest() {
        use crate::pmf::{JointPmf, Variable};
        let j = JointPmf::from_fn(
            vec![Variable::new("A", 2), Variable::new("B", 3), Variable::new("U", 2)],
            |v| (1 + v[0] + 2 * v[1] + 6 * v[2]) as f64 / 78.0,
        )
        .unwrap();
        let ch = SymbolChannel::from_joint(&j, "U", &["A", "B"]).unwrap();
        assert_eq!(ch.obs_size(), 6);
        // o = a + 2 b
        for a in 0..2 {
            for b in 0..3 {
                let o = a + 2 * b;
                assert!((ch.pair(o)[1] - j.prob(&[a, b, 1])).abs() < 1e-15);
                assert!((ch.pair(o)[0] - j.prob(&[a, b, 0])).abs() < 1e-15);
            }
        }
    }
}
