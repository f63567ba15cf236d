//! Numerical checks of the protocol: the exact small-`N` oracle (total
//! variation to the ideal law, agreement, function errors) and Monte Carlo
//! estimates of the same quantities at any `N`.
//!
//! The oracle enumerates every source block and every input block with
//! brute-force prefix tables; it never calls the SC tree.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::exact::{block_joint, index_block, transform_map, PrefixTable, EXHAUSTIVE_CAP};
use crate::model::{AuxChainModel, FunctionRole, Network};
use crate::protocol::{compute_function, run_trial, FdPolicy, FunctionOutput, RoundPlan};
use crate::sc::{SampleRule, SymbolChannel};
use crate::transform::{log2_exact, BitBlock};

/// Largest `N` for the exact agreement and end-to-end computations.
pub const AGREEMENT_CAP: usize = 4;

/// Whose copy of each round's sequence is compared with the ideal law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The transmitter's copy of every round.
    Tx,
    /// The receiver's copy of every round: the other terminal, or the sink of
    /// a collocated network.
    Rx,
}

impl Side {
    fn terminal(self, model: &AuxChainModel, round: usize) -> usize {
        let tx = model.transmitters[round];
        match (self, model.network) {
            (Side::Tx, _) => tx,
            (Side::Rx, Network::TwoTerminal) => 1 - tx,
            (Side::Rx, Network::Collocated) => model.sources.len(),
        }
    }
}

/// Joint law of all terminals' histories for one source block, keyed by
/// `key[r * T + j]` = index of terminal `j`'s `u^{r+1}` (first bit most
/// significant).
type HistoryLaw = BTreeMap<Vec<usize>, f64>;

const UNIFORM: [f64; 2] = [0.5, 0.5];

/// Every `v` with positive probability under `policy`, with that probability.
fn enumerate_policy(policy: &[SampleRule], obs: &PrefixTable, prior: &PrefixTable) -> Vec<(usize, f64)> {
    fn go(
        i: usize,
        prefix: usize,
        w: f64,
        policy: &[SampleRule],
        obs: &PrefixTable,
        prior: &PrefixTable,
        out: &mut Vec<(usize, f64)>,
    ) {
        if i == policy.len() {
            out.push((prefix, w));
            return;
        }
        for bit in 0..2usize {
            let f = match policy[i] {
                SampleRule::UniformHalf => 0.5,
                SampleRule::PriorConditional => prior.conditional(i, prefix).unwrap_or(UNIFORM)[bit],
                SampleRule::PriorArgmax => {
                    let p = prior.conditional(i, prefix).unwrap_or(UNIFORM);
                    ((p[1] > p[0]) as usize == bit) as u8 as f64
                }
                SampleRule::ObservationConditional => obs.conditional(i, prefix).unwrap_or(UNIFORM)[bit],
                SampleRule::Pinned(b) => (b as usize == bit) as u8 as f64,
            };
            if f > 0.0 {
                go(i + 1, prefix << 1 | bit, w * f, policy, obs, prior, out);
            }
        }
    }
    let mut out = Vec::new();
    go(0, 0, 1.0, policy, obs, prior, &mut out);
    out
}

#[inline]
fn bit_at(idx: usize, n: usize, k: usize) -> usize {
    (idx >> (n - 1 - k)) & 1
}

struct Oracle<'a> {
    model: &'a AuxChainModel,
    plans: &'a [RoundPlan],
    n: usize,
    fd: FdPolicy,
    map: Vec<usize>,
    terminals: usize,
}

impl<'a> Oracle<'a> {
    fn new(model: &'a AuxChainModel, plans: &'a [RoundPlan], n: usize, fd: FdPolicy, cap: usize) -> Result<Self> {
        log2_exact(n)?;
        if n > cap {
            return Err(usage(format!("exact verification is limited to N <= {cap}; use Monte Carlo for N = {n}")));
        }
        if plans.len() != model.rounds() || plans.iter().any(|p| p.n() != n) {
            return Err(usage("plans do not match the model and N"));
        }
        Ok(Oracle {
            model,
            plans,
            n,
            fd,
            map: transform_map(n)?,
            terminals: model.terminal_count(),
        })
    }

    fn obs_block(&self, round: usize, terminal: usize, src: &[Vec<usize>], key: &[usize]) -> Result<Vec<usize>> {
        let mut obs = vec![0usize; self.n];
        let mut stride = 1;
        for var in self.model.terminal_conditioning(round, terminal) {
            let size = self.model.joint.size_of(var)?;
            match self.model.aux.iter().position(|a| a == var) {
                Some(r) => {
                    let u = key[r * self.terminals + terminal];
                    for (k, o) in obs.iter_mut().enumerate() {
                        *o += bit_at(u, self.n, k) * stride;
                    }
                }
                None => {
                    for (o, &v) in obs.iter_mut().zip(&src[terminal]) {
                        *o += v * stride;
                    }
                }
            }
            stride *= size;
        }
        Ok(obs)
    }

    fn tables(&self, ch: &SymbolChannel, obs: &[usize]) -> (PrefixTable, PrefixTable) {
        let prior = ch.prior();
        let zeros = vec![0usize; self.n];
        (
            PrefixTable::new(block_joint(ch, obs, &self.map)),
            PrefixTable::new(block_joint(&prior, &zeros, &self.map)),
        )
    }

    /// Law of all histories after the first `rounds` rounds, given `src`.
    fn histories(&self, src: &[Vec<usize>], rounds: usize) -> Result<HistoryLaw> {
        let mut law: HistoryLaw = BTreeMap::new();
        law.insert(Vec::new(), 1.0);
        for plan in &self.plans[..rounds] {
            let r = plan.round;
            let tx = plan.transmitter;
            let tx_policy = plan.tx_policy(self.fd);
            let classes = plan.partition.classes();
            let mut next: HistoryLaw = BTreeMap::new();
            for (key, q) in &law {
                let (obs_t, prior_t) = self.tables(&plan.tx_channel, &self.obs_block(r, tx, src, key)?);
                for (v_tx, q_tx) in enumerate_policy(&tx_policy, &obs_t, &prior_t) {
                    // receivers see the same common coins and the message
                    let message: Vec<u8> = plan
                        .partition
                        .i_prime
                        .iter()
                        .map(|&k| bit_at(v_tx, self.n, k) as u8)
                        .collect();
                    let mut rx_policy = plan.rx_policy(self.fd, &message)?;
                    for (k, c) in classes.iter().enumerate() {
                        if *c == crate::reliability::IndexClass::FrozenRandom {
                            rx_policy[k] = SampleRule::Pinned(bit_at(v_tx, self.n, k) as u8);
                        }
                    }
                    let mut combos: Vec<(Vec<usize>, f64)> = vec![(vec![0; self.terminals], q * q_tx)];
                    for j in 0..self.terminals {
                        if j == tx {
                            for c in combos.iter_mut() {
                                c.0[j] = self.map[v_tx];
                            }
                            continue;
                        }
                        let (obs_r, prior_r) = self.tables(&plan.rx_channel, &self.obs_block(r, j, src, key)?);
                        let outcomes = enumerate_policy(&rx_policy, &obs_r, &prior_r);
                        combos = combos
                            .into_iter()
                            .flat_map(|(c, w)| {
                                outcomes.iter().map(move |&(v, p)| {
                                    let mut c = c.clone();
                                    c[j] = v;
                                    (c, w * p)
                                })
                            })
                            .collect();
                        for c in combos.iter_mut() {
                            c.0[j] = self.map[c.0[j]];
                        }
                    }
                    for (round_u, w) in combos {
                        let mut k = key.clone();
                        k.extend(round_u);
                        *next.entry(k).or_insert(0.0) += w;
                    }
                }
            }
            law = next;
        }
        Ok(law)
    }

    /// `P(src, u^{1..rounds})` under the ideal law, `own[r]` the index of `u^{r+1}`.
    fn ideal(&self, src: &[Vec<usize>], own: &[usize], marg: &crate::pmf::JointPmf) -> f64 {
        let rounds = own.len();
        let mut values = vec![0usize; src.len() + rounds];
        (0..self.n)
            .map(|k| {
                for (s, block) in src.iter().enumerate() {
                    values[s] = block[k];
                }
                for r in 0..rounds {
                    values[src.len() + r] = bit_at(own[r], self.n, k);
                }
                marg.prob(&values)
            })
            .product()
    }

    /// Visit all source blocks with positive probability, in parallel, and
    /// return the per-block results in enumeration order.
    fn over_sources<T: Send>(&self, f: impl Fn(&[Vec<usize>], f64) -> Result<T> + Sync) -> Result<Vec<T>> {
        let names: Vec<&str> = self.model.sources.iter().map(String::as_str).collect();
        let marg = self.model.joint.marginal(&names)?;
        let sizes = marg.sizes();
        let support: Vec<usize> = (0..marg.mass().len()).filter(|&i| marg.mass()[i] > 0.0).collect();
        let count = support.len().checked_pow(self.n as u32).ok_or_else(|| usage("too many source blocks"))?;
        (0..count)
            .into_par_iter()
            .map(|mut idx| {
                let mut src = vec![vec![0usize; self.n]; sizes.len()];
                let mut p = 1.0;
                for k in (0..self.n).rev() {
                    let mut flat = support[idx % support.len()];
                    idx /= support.len();
                    p *= marg.mass()[flat];
                    for s in (0..sizes.len()).rev() {
                        src[s][k] = flat % sizes[s];
                        flat /= sizes[s];
                    }
                }
                f(&src, p)
            })
            .collect()
    }

    fn history_marginal(&self, rounds: usize) -> Result<crate::pmf::JointPmf> {
        let names: Vec<&str> = self
            .model
            .sources
            .iter()
            .chain(&self.model.aux[..rounds])
            .map(String::as_str)
            .collect();
        self.model.joint.marginal(&names)
    }
}

/// Which rounds the total variation covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvScope {
    FullChain,
    /// The first `k` rounds only.
    FirstRounds(usize),
}

/// `sum |Q - P|` over `(sources, u^{1..k})` of one side's reconstruction,
/// where `Q` is induced by the protocol and `P` is the ideal per-symbol law.
pub fn exact_q_tv(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    side: Side,
    scope: TvScope,
    fd: FdPolicy,
) -> Result<f64> {
    let oracle = Oracle::new(model, plans, n, fd, EXHAUSTIVE_CAP)?;
    let rounds = match scope {
        TvScope::FullChain => model.rounds(),
        TvScope::FirstRounds(k) if k <= model.rounds() => k,
        TvScope::FirstRounds(k) => return Err(usage(format!("model has fewer than {k} rounds"))),
    };
    let owners: Vec<usize> = (0..rounds).map(|r| side.terminal(model, r)).collect();
    let marg = oracle.history_marginal(rounds)?;
    let parts = oracle.over_sources(|src, p_src| {
        let law = oracle.histories(src, rounds)?;
        let mut side_law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (key, q) in law {
            let own: Vec<usize> = (0..rounds).map(|r| key[r * oracle.terminals + owners[r]]).collect();
            *side_law.entry(own).or_insert(0.0) += q;
        }
        // sum over all histories = sum over supp Q of (|Q-P| - P) + sum of P
        let mut acc = p_src;
        for (own, q) in side_law {
            let p = oracle.ideal(src, &own, &marg);
            let q = q * p_src;
            acc += (q - p).abs() - p;
        }
        Ok(acc)
    })?;
    Ok(parts.iter().sum::<f64>().clamp(0.0, 2.0))
}

/// Exact end-to-end quantities at `N <= 4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactOutcome {
    /// `Pr{all terminals hold identical u^1..u^t}`.
    pub agreement: f64,
    pub functions: Vec<FunctionErrorStats>,
    /// Probability that two function outputs differ on a symbol where
    /// neither is erased.
    pub nonerased_disagreement: f64,
}

/// Enumerate both terminals' randomness exactly.
pub fn exact_outcome(model: &AuxChainModel, plans: &[RoundPlan], n: usize, fd: FdPolicy) -> Result<ExactOutcome> {
    let oracle = Oracle::new(model, plans, n, fd, AGREEMENT_CAP)?;
    let t = model.rounds();
    let src_names: Vec<&str> = model.sources.iter().map(String::as_str).collect();
    let src_sizes = model.sizes_of(&src_names)?;
    let parts = oracle.over_sources(|src, p_src| {
        let law = oracle.histories(src, t)?;
        let mut agree = 0.0;
        let mut tallies = vec![Tally::default(); model.functions.len()];
        let mut disagree = 0.0;
        for (key, q) in law {
            let w = q * p_src;
            let same = (0..t).all(|r| {
                let row = &key[r * oracle.terminals..(r + 1) * oracle.terminals];
                row.iter().all(|&u| u == row[0])
            });
            if same {
                agree += w;
            }
            let outputs = decode_all(model, src, &key, oracle.terminals, n)?;
            for (tally, out) in tallies.iter_mut().zip(&outputs) {
                tally.add(&score(model, out, src, &src_sizes)?, n, w);
            }
            if nonerased_conflict(&outputs) {
                disagree += w;
            }
        }
        Ok((agree, tallies, disagree))
    })?;
    let mut agreement = 0.0;
    let mut tallies = vec![Tally::default(); model.functions.len()];
    let mut disagreement = 0.0;
    for (a, t, d) in parts {
        agreement += a;
        disagreement += d;
        for (acc, x) in tallies.iter_mut().zip(t) {
            acc.merge(&x);
        }
    }
    Ok(ExactOutcome {
        agreement: agreement.clamp(0.0, 1.0),
        functions: model
            .functions
            .iter()
            .zip(tallies)
            .map(|(f, t)| t.finish(&f.name, f.role, None))
            .collect(),
        nonerased_disagreement: disagreement.clamp(0.0, 1.0),
    })
}

fn decode_all(
    model: &AuxChainModel,
    src: &[Vec<usize>],
    key: &[usize],
    terminals: usize,
    n: usize,
) -> Result<Vec<FunctionOutput>> {
    model
        .functions
        .iter()
        .map(|f| {
            let j = match f.role {
                FunctionRole::Terminal(j) => j,
                FunctionRole::Sink => model.sink().ok_or_else(|| usage("model has no sink"))?,
            };
            let u: Vec<BitBlock> = (0..model.rounds())
                .map(|r| BitBlock::new(index_block(key[r * terminals + j], n)))
                .collect::<Result<_>>()?;
            Ok(FunctionOutput {
                name: f.name.clone(),
                role: f.role,
                values: compute_function(model, f.role, src.get(j).map(Vec::as_slice), &u)?,
            })
        })
        .collect()
}

/// Per-symbol comparison of one output with the true function values.
struct Score {
    wrong: usize,
    erased: usize,
}

fn score(model: &AuxChainModel, out: &FunctionOutput, src: &[Vec<usize>], sizes: &[usize]) -> Result<Score> {
    let spec = model
        .function(out.role)
        .ok_or_else(|| usage(format!("no function for {:?}", out.role)))?;
    let mut s = Score { wrong: 0, erased: 0 };
    let mut tuple = vec![0usize; src.len()];
    for (k, v) in out.values.iter().enumerate() {
        for (t, block) in tuple.iter_mut().zip(src) {
            *t = block[k];
        }
        match v {
            None => {
                s.erased += 1;
                s.wrong += 1;
            }
            Some(z) if Some(*z) != spec.target.lookup(sizes, &tuple) => s.wrong += 1,
            Some(_) => {}
        }
    }
    Ok(s)
}

fn nonerased_conflict(outputs: &[FunctionOutput]) -> bool {
    outputs.iter().enumerate().any(|(a, oa)| {
        outputs[a + 1..].iter().any(|ob| {
            oa.values
                .iter()
                .zip(&ob.values)
                .any(|(x, y)| matches!((x, y), (Some(x), Some(y)) if x != y))
        })
    })
}

/// Weighted error counters for one function.
#[derive(Clone, Debug, Default)]
struct Tally {
    weight: f64,
    block: f64,
    block_sq: f64,
    symbol: f64,
    erasure: f64,
    erased_blocks: f64,
}

impl Tally {
    fn add(&mut self, s: &Score, n: usize, w: f64) {
        self.weight += w;
        let b = (s.wrong > 0) as u8 as f64;
        self.block += w * b;
        self.block_sq += w * b * b;
        self.symbol += w * s.wrong as f64 / n as f64;
        self.erasure += w * s.erased as f64 / n as f64;
        self.erased_blocks += w * (s.erased > 0) as u8 as f64;
    }

    fn merge(&mut self, o: &Tally) {
        self.weight += o.weight;
        self.block += o.block;
        self.block_sq += o.block_sq;
        self.symbol += o.symbol;
        self.erasure += o.erasure;
        self.erased_blocks += o.erased_blocks;
    }

    fn finish(&self, name: &str, role: FunctionRole, trials: Option<usize>) -> FunctionErrorStats {
        let norm = |x: f64| if self.weight > 0.0 { (x / self.weight).clamp(0.0, 1.0) } else { 0.0 };
        let block_error = norm(self.block);
        FunctionErrorStats {
            name: name.to_string(),
            role,
            block_error,
            block_error_stderr: trials.map_or(0.0, |m| binomial_stderr(block_error, m)),
            symbol_error: norm(self.symbol),
            erasure: norm(self.erasure),
            erased_block_rate: norm(self.erased_blocks),
        }
    }
}

fn binomial_stderr(p: f64, trials: usize) -> f64 {
    if trials < 2 {
        0.0
    } else {
        (p * (1.0 - p) / trials as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionErrorStats {
    pub name: String,
    pub role: FunctionRole,
    /// Probability that some symbol is wrong or erased.
    pub block_error: f64,
    pub block_error_stderr: f64,
    /// Fraction of symbols wrong or erased.
    pub symbol_error: f64,
    /// Fraction of symbols erased.
    pub erasure: f64,
    /// Probability that some symbol is erased.
    pub erased_block_rate: f64,
}

/// Estimate with its standard error (zero for exact values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Monte Carlo summary of `trials` independent protocol executions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationStats {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub agreement: Estimate,
    /// Per-round agreement rates.
    pub round_agreement: Vec<f64>,
    pub functions: Vec<FunctionErrorStats>,
    /// Fraction of trials where two outputs differ on a non-erased symbol.
    pub nonerased_disagreement: Estimate,
    pub null_events: usize,
    /// Fraction of trials with at least one null-prefix event.
    pub anomaly_rate: f64,
    pub mean_rates: Vec<f64>,
}

/// Trials run in chunks of this size; results are merged in trial order.
const TRIAL_CHUNK: usize = 16;

pub fn simulate(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    trials: usize,
    seed: u64,
    fd: FdPolicy,
) -> Result<SimulationStats> {
    if trials == 0 {
        return Err(usage("at least one trial required"));
    }
    let t = model.rounds();
    let src_names: Vec<&str> = model.sources.iter().map(String::as_str).collect();
    let src_sizes = model.sizes_of(&src_names)?;
    #[derive(Clone, Default)]
    struct Acc {
        agreed: usize,
        round_agreed: Vec<usize>,
        tallies: Vec<Tally>,
        conflicts: usize,
        null_events: usize,
        anomalous: usize,
        rates: Vec<f64>,
    }
    let fresh = || Acc {
        round_agreed: vec![0; t],
        tallies: vec![Tally::default(); model.functions.len()],
        rates: vec![0.0; t],
        ..Acc::default()
    };
    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(TRIAL_CHUNK)
        .map(|s| (s, (s + TRIAL_CHUNK).min(trials)))
        .collect();
    let partial = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = fresh();
            for k in lo..hi {
                let (src, res) = run_trial(model, plans, n, seed, k as u64, fd)?;
                acc.agreed += res.agreed() as usize;
                for (c, &a) in acc.round_agreed.iter_mut().zip(&res.agreement) {
                    *c += a as usize;
                }
                for (tally, out) in acc.tallies.iter_mut().zip(&res.outputs) {
                    tally.add(&score(model, out, &src, &src_sizes)?, n, 1.0);
                }
                acc.conflicts += nonerased_conflict(&res.outputs) as usize;
                acc.null_events += res.anomalies.null_events;
                acc.anomalous += (res.anomalies.null_events > 0) as usize;
                for (r, &x) in acc.rates.iter_mut().zip(&res.transcript.rates) {
                    *r += x;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<Acc>>>()?;
    let mut total = fresh();
    for a in partial {
        total.agreed += a.agreed;
        total.conflicts += a.conflicts;
        total.null_events += a.null_events;
        total.anomalous += a.anomalous;
        for (x, y) in total.round_agreed.iter_mut().zip(&a.round_agreed) {
            *x += y;
        }
        for (x, y) in total.tallies.iter_mut().zip(&a.tallies) {
            x.merge(y);
        }
        for (x, y) in total.rates.iter_mut().zip(&a.rates) {
            *x += y;
        }
    }
    let m = trials as f64;
    let agreement = total.agreed as f64 / m;
    let conflict = total.conflicts as f64 / m;
    Ok(SimulationStats {
        n,
        trials,
        seed,
        agreement: Estimate {
            value: agreement,
            stderr: binomial_stderr(agreement, trials),
        },
        round_agreement: total.round_agreed.iter().map(|&c| c as f64 / m).collect(),
        functions: model
            .functions
            .iter()
            .zip(&total.tallies)
            .map(|(f, t)| t.finish(&f.name, f.role, Some(trials)))
            .collect(),
        nonerased_disagreement: Estimate {
            value: conflict,
            stderr: binomial_stderr(conflict, trials),
        },
        null_events: total.null_events,
        anomaly_rate: total.anomalous as f64 / m,
        mean_rates: total.rates.iter().map(|r| r / m).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// `Pr{u_A^{1:t} = u_B^{1:t}}`, exactly (`N <= 4`) or by simulation.
pub fn agreement_probability(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    mode: VerifyMode,
    fd: FdPolicy,
) -> Result<Estimate> {
    match mode {
        VerifyMode::Exact => Ok(Estimate {
            value: exact_outcome(model, plans, n, fd)?.agreement,
            stderr: 0.0,
        }),
        VerifyMode::MonteCarlo { trials, seed } => Ok(simulate(model, plans, n, trials, seed, fd)?.agreement),
    }
}

/// Block, symbol and erasure rates of every function in the model.
pub fn function_error_rate(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    trials: usize,
    seed: u64,
    fd: FdPolicy,
) -> Result<Vec<FunctionErrorStats>> {
    Ok(simulate(model, plans, n, trials, seed, fd)?.functions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRow {
    /// 1-based.
    pub round: usize,
    pub measured: f64,
    pub theory: f64,
}

/// `|I'| / N` of every round next to the model's closed-form rate.
pub fn measured_rates(plans: &[RoundPlan]) -> Vec<RateRow> {
    plans
        .iter()
        .map(|p| RateRow {
            round: p.round + 1,
            measured: p.partition.rate(),
            theory: p.theoretical_rate,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvValues {
    pub tx: f64,
    pub rx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: VerifyMode,
    pub fd_policy: FdPolicy,
    /// Full-chain total variation of each side; exact mode only.
    pub tv: Option<TvValues>,
    pub agreement_probability: Estimate,
    pub rates: Vec<RateRow>,
    pub functions: Vec<FunctionErrorStats>,
    pub nonerased_disagreement: Estimate,
    /// Fraction of trials with a null-prefix event; zero in exact mode.
    pub anomaly_rate: f64,
}

pub fn verify(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    mode: VerifyMode,
    fd: FdPolicy,
) -> Result<VerificationReport> {
    let rates = measured_rates(plans);
    match mode {
        VerifyMode::Exact => {
            let out = exact_outcome(model, plans, n, fd)?;
            let tv = |side| exact_q_tv(model, plans, n, side, TvScope::FullChain, fd);
            Ok(VerificationReport {
                n,
                mode,
                fd_policy: fd,
                tv: Some(TvValues {
                    tx: tv(Side::Tx)?,
                    rx: tv(Side::Rx)?,
                }),
                agreement_probability: Estimate {
                    value: out.agreement,
                    stderr: 0.0,
                },
                rates,
                functions: out.functions,
                nonerased_disagreement: Estimate {
                    value: out.nonerased_disagreement,
                    stderr: 0.0,
                },
                anomaly_rate: 0.0,
            })
        }
        VerifyMode::MonteCarlo { trials, seed } => {
            let s = simulate(model, plans, n, trials, seed, fd)?;
            Ok(VerificationReport {
                n,
                mode,
                fd_policy: fd,
                tv: None,
                agreement_probability: s.agreement,
                rates,
                functions: s.functions,
                nonerased_disagreement: s.nonerased_disagreement,
                anomaly_rate: s.anomaly_rate,
            })
        }
    }
}

/// One long-format CSV row: `model,N,round,metric,value,stderr`.
/// Round 0 marks whole-protocol metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub round: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

impl VerificationReport {
    pub fn csv_rows(&self, model: &str) -> Vec<CsvRow> {
        let row = |round, metric: String, value, stderr| CsvRow {
            model: model.to_string(),
            n: self.n,
            round,
            metric,
            value,
            stderr,
        };
        let mut rows = Vec::new();
        for r in &self.rates {
            rows.push(row(r.round, "measured_rate".into(), r.measured, 0.0));
            rows.push(row(r.round, "theory_rate".into(), r.theory, 0.0));
            rows.push(row(r.round, "rate_gap".into(), (r.measured - r.theory).abs(), 0.0));
        }
        if let Some(tv) = self.tv {
            rows.push(row(0, "tv_tx".into(), tv.tx, 0.0));
            rows.push(row(0, "tv_rx".into(), tv.rx, 0.0));
        }
        let a = self.agreement_probability;
        rows.push(row(0, "agreement".into(), a.value, a.stderr));
        for f in &self.functions {
            rows.push(row(0, format!("block_error_{}", f.name), f.block_error, f.block_error_stderr));
            rows.push(row(0, format!("symbol_error_{}", f.name), f.symbol_error, 0.0));
            rows.push(row(0, format!("erasure_{}", f.name), f.erasure, 0.0));
        }
        let d = self.nonerased_disagreement;
        rows.push(row(0, "nonerased_disagreement".into(), d.value, d.stderr));
        rows
    }
}
