//! The interactive protocol: per-round plans, sequential sampling at the
//! transmitter, reconstruction at the receivers and the final function
//! evaluation.
//!
//! Randomness layout, given [`ProtocolSeeds`]:
//! * round `r` reads its common coins from `stream(shared, Shared, r)`; every
//!   party starts that stream afresh, so `F_r` bits coincide across parties;
//! * terminal `j` owns `stream(private, Private, j)` for the whole execution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::model::{AuxChainModel, Conditioning, FunctionRole, Network, MARKOV_TOL};
use crate::reliability::{
    build_partition, profile_exact, profile_monte_carlo, IndexClass, IndexPartition, PartitionPolicy,
    RateTargets, ReliabilityProfile,
};
use crate::rng::{mix, stream, Domain};
use crate::sc::{sample_sequential, SampleRule, SymbolChannel};
use crate::transform::{apply_transform, log2_exact, BitBlock};
use crate::exact::EXHAUSTIVE_CAP;

/// How the receiver and transmitter draw `F_d` bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdPolicy {
    /// Sample from the prefix-only conditional.
    #[default]
    Sample,
    /// Take its most likely value.
    Argmax,
}

impl FdPolicy {
    fn rule(self) -> SampleRule {
        match self {
            FdPolicy::Sample => SampleRule::PriorConditional,
            FdPolicy::Argmax => SampleRule::PriorArgmax,
        }
    }
}

/// How a round's partition is sized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSizing {
    /// Threshold partition with `delta = 2^(-N^beta)`.
    Threshold { beta: f64 },
    /// Threshold partition with a fixed `delta`.
    FixedThreshold { delta: f64 },
    /// Rank partition with class sizes `1 - H(U) - margin`, `H(U|tx) - margin`
    /// and `rate + margin` (fractions of `N`, clipped to `[0, 1]`).
    TheoryPlusMargin { margin: f64 },
    /// No frozen indices; every bit is sampled from the transmitter's
    /// observation and sent.
    TransmitAll,
}

/// Where reliabilities come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
    /// Exact up to the enumeration cap, Monte Carlo above it.
    Auto { samples: usize, seed: u64 },
}

/// The three profiles a partition is built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundProfiles {
    pub uncond: ReliabilityProfile,
    pub tx: ReliabilityProfile,
    pub rx: ReliabilityProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundPlan {
    /// 0-based.
    pub round: usize,
    pub transmitter: usize,
    pub receivers: Vec<usize>,
    pub direction: String,
    pub partition: IndexPartition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<RoundProfiles>,
    pub theoretical_rate: f64,
    #[serde(skip)]
    pub tx_channel: SymbolChannel,
    #[serde(skip)]
    pub rx_channel: SymbolChannel,
}

impl RoundPlan {
    pub fn n(&self) -> usize {
        self.partition.n
    }

    pub fn tx_policy(&self, fd: FdPolicy) -> Vec<SampleRule> {
        self.partition
            .classes()
            .into_iter()
            .map(|c| match c {
                IndexClass::FrozenRandom => SampleRule::UniformHalf,
                IndexClass::FrozenDeterministic => fd.rule(),
                IndexClass::Sent | IndexClass::Local => SampleRule::ObservationConditional,
            })
            .collect()
    }

    /// Receiver rules with the message bits pinned; `message` follows the
    /// ascending order of `I'`.
    pub fn rx_policy(&self, fd: FdPolicy, message: &[u8]) -> Result<Vec<SampleRule>> {
        if message.len() != self.partition.i_prime.len() {
            return Err(usage("message length differs from |I'|"));
        }
        let mut policy: Vec<SampleRule> = self
            .partition
            .classes()
            .into_iter()
            .map(|c| match c {
                IndexClass::FrozenRandom => SampleRule::UniformHalf,
                IndexClass::FrozenDeterministic => fd.rule(),
                IndexClass::Sent | IndexClass::Local => SampleRule::ObservationConditional,
            })
            .collect();
        for (&k, &b) in self.partition.i_prime.iter().zip(message) {
            policy[k] = SampleRule::Pinned(b);
        }
        Ok(policy)
    }
}

/// Display name of a terminal.
pub fn terminal_name(model: &AuxChainModel, terminal: usize) -> String {
    match model.network {
        Network::TwoTerminal => ["A", "B"][terminal].to_string(),
        Network::Collocated if Some(terminal) == model.sink() => "sink".to_string(),
        Network::Collocated => format!("T{}", terminal + 1),
    }
}

fn direction(model: &AuxChainModel, round: usize) -> String {
    let tx = model.transmitters[round];
    match model.network {
        Network::TwoTerminal => format!("{}->{}", terminal_name(model, tx), terminal_name(model, 1 - tx)),
        Network::Collocated => format!("{}->all", terminal_name(model, tx)),
    }
}

fn profile(
    ch: &SymbolChannel,
    cond: Conditioning,
    n: usize,
    choice: &ProfileChoice,
    stream_index: u64,
) -> Result<ReliabilityProfile> {
    match *choice {
        ProfileChoice::Exact => profile_exact(ch, cond, n),
        ProfileChoice::Auto { .. } if n <= EXHAUSTIVE_CAP => profile_exact(ch, cond, n),
        ProfileChoice::MonteCarlo { samples, seed } | ProfileChoice::Auto { samples, seed } => {
            profile_monte_carlo(ch, cond, n, samples, mix(seed, stream_index))
        }
    }
}

/// Profiles of one round, conditioned as its direction dictates.
pub fn round_profiles(
    model: &AuxChainModel,
    round: usize,
    n: usize,
    choice: &ProfileChoice,
) -> Result<RoundProfiles> {
    let base = 3 * round as u64;
    let get = |cond: Conditioning, k: u64| profile(&model.channel(round, cond)?, cond, n, choice, base + k);
    Ok(RoundProfiles {
        uncond: get(Conditioning::None, 0)?,
        tx: get(Conditioning::Transmitter, 1)?,
        rx: get(Conditioning::Receiver, 2)?,
    })
}

fn margin_targets(model: &AuxChainModel, round: usize, margin: f64) -> Result<RateTargets> {
    let (h, h_tx, _) = model.round_entropies(round)?;
    let rate = model.theoretical_rate(round)?;
    let fd = (1.0 - h - margin).clamp(0.0, 1.0);
    let fr = (h_tx - margin).clamp(0.0, 1.0 - fd);
    let msg = (rate + margin).clamp(0.0, 1.0 - fd - fr);
    Ok(RateTargets {
        frozen_deterministic: fd,
        frozen_random: fr,
        message: msg,
    })
}

/// One plan per round. The model must pass validation.
pub fn plan_protocol(
    model: &AuxChainModel,
    n: usize,
    sizing: &PlanSizing,
    profiles: &ProfileChoice,
) -> Result<Vec<RoundPlan>> {
    log2_exact(n)?;
    model.validate(MARKOV_TOL)?;
    (0..model.rounds())
        .map(|round| {
            let (partition, profs) = match *sizing {
                PlanSizing::TransmitAll => (IndexPartition::transmit_all(n), None),
                _ => {
                    let p = round_profiles(model, round, n, profiles)?;
                    let policy = match *sizing {
                        PlanSizing::Threshold { beta } => PartitionPolicy::threshold_for(n, beta),
                        PlanSizing::FixedThreshold { delta } => PartitionPolicy::Threshold { delta },
                        PlanSizing::TheoryPlusMargin { margin } => {
                            PartitionPolicy::TargetRate(margin_targets(model, round, margin)?)
                        }
                        PlanSizing::TransmitAll => unreachable!(),
                    };
                    (build_partition(&p.uncond, &p.tx, &p.rx, &policy)?, Some(p))
                }
            };
            Ok(RoundPlan {
                round,
                transmitter: model.transmitters[round],
                receivers: model.receivers(round),
                direction: direction(model, round),
                partition,
                profiles: profs,
                theoretical_rate: model.theoretical_rate(round)?,
                tx_channel: model.channel(round, Conditioning::Transmitter)?,
                rx_channel: model.channel(round, Conditioning::Receiver)?,
            })
        })
        .collect()
}

/// Per-execution state of one terminal.
#[derive(Clone, Debug)]
pub struct TerminalState {
    pub terminal: usize,
    /// Own source block; `None` for the sink.
    pub source: Option<Vec<usize>>,
    /// Own copies of `u^1, u^2, ...` so far.
    pub u: Vec<BitBlock>,
    private: ChaCha8Rng,
}

impl TerminalState {
    pub fn new(terminal: usize, source: Option<Vec<usize>>, private_seed: u64) -> Self {
        TerminalState {
            terminal,
            source,
            u: Vec::new(),
            private: stream(private_seed, Domain::Private, terminal as u64),
        }
    }
}

/// Flatten a terminal's observation in `round` (first variable fastest).
pub fn observation_block(
    model: &AuxChainModel,
    round: usize,
    state: &TerminalState,
    n: usize,
) -> Result<Vec<usize>> {
    let vars = model.terminal_conditioning(round, state.terminal);
    let mut obs = vec![0usize; n];
    let mut stride = 1;
    for var in vars {
        let size = model.joint.size_of(var)?;
        let values: Vec<usize> = if let Some(r) = model.aux.iter().position(|a| a == var) {
            let u = state
                .u
                .get(r)
                .ok_or_else(|| usage(format!("terminal {} lacks u{}", state.terminal, r + 1)))?;
            u.bits().iter().map(|&b| b as usize).collect()
        } else {
            state
                .source
                .clone()
                .ok_or_else(|| usage(format!("terminal {} has no source", state.terminal)))?
        };
        if values.len() != n {
            return Err(usage("observation block length differs from N"));
        }
        for (o, v) in obs.iter_mut().zip(values) {
            *o += v * stride;
        }
        stride *= size;
    }
    Ok(obs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundMessage {
    pub direction: String,
    pub bits: usize,
    /// Message bits, first bit in the most significant position, zero padded.
    pub message_hex: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub rounds: Vec<RoundMessage>,
    pub total_bits: usize,
    /// Bits per source symbol, per round.
    pub rates: Vec<f64>,
}

pub fn pack_bits(bits: &[u8]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | b << (7 - k)))
        .collect();
    hex::encode(bytes)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomalies {
    /// Conditionals evaluated on zero-probability prefixes, all parties.
    pub null_events: usize,
}

/// Result of [`run_round`].
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub message: Vec<u8>,
    pub null_events: usize,
}

/// Run one round: the transmitter samples and sends `v` on `I'`, each
/// receiver reconstructs; everyone appends its own `u = v G_N`.
pub fn run_round(
    model: &AuxChainModel,
    plan: &RoundPlan,
    tx: &mut TerminalState,
    rxs: &mut [&mut TerminalState],
    shared_seed: u64,
    fd: FdPolicy,
) -> Result<RoundOutcome> {
    let n = plan.n();
    let round = plan.round;
    if tx.terminal != plan.transmitter {
        return Err(usage("transmitter does not match the plan"));
    }
    let obs = observation_block(model, round, tx, n)?;
    let mut shared = stream(shared_seed, Domain::Shared, round as u64);
    let (v, diag) = sample_sequential(&plan.tx_channel, &obs, &plan.tx_policy(fd), &mut shared, &mut tx.private)?;
    let message: Vec<u8> = plan.partition.i_prime.iter().map(|&k| v.bits()[k]).collect();
    let mut null_events = diag.null_events;
    let rx_policy = plan.rx_policy(fd, &message)?;
    for rx in rxs.iter_mut() {
        let obs = observation_block(model, round, rx, n)?;
        let mut shared = stream(shared_seed, Domain::Shared, round as u64);
        let (v_rx, diag) = sample_sequential(&plan.rx_channel, &obs, &rx_policy, &mut shared, &mut rx.private)?;
        null_events += diag.null_events;
        rx.u.push(apply_transform(&v_rx));
    }
    tx.u.push(apply_transform(&v));
    Ok(RoundOutcome { message, null_events })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSeeds {
    pub shared: u64,
    pub private: u64,
}

impl ProtocolSeeds {
    /// Independent seeds for trial `k` of an experiment seeded with `seed`.
    pub fn for_trial(seed: u64, k: u64) -> Self {
        ProtocolSeeds {
            shared: mix(seed, 2 * k),
            private: mix(seed, 2 * k + 1),
        }
    }
}

/// Decoded function values, `None` where the argument tuple is impossible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionOutput {
    pub name: String,
    pub role: FunctionRole,
    pub values: Vec<Option<u32>>,
}

impl FunctionOutput {
    pub fn erasures(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub n: usize,
    /// `u[j][r]`: terminal `j`'s copy of `u^{r+1}`.
    pub u: Vec<Vec<BitBlock>>,
    /// Round `r` agreed iff every terminal holds the same `u^{r+1}`.
    pub agreement: Vec<bool>,
    pub transcript: Transcript,
    pub outputs: Vec<FunctionOutput>,
    pub anomalies: Anomalies,
}

impl ProtocolResult {
    pub fn agreed(&self) -> bool {
        self.agreement.iter().all(|&a| a)
    }
}

/// Evaluate `role`'s function symbol by symbol from its own source block (if
/// any) and its copies of `u^1..u^t`.
pub fn compute_function(
    model: &AuxChainModel,
    role: FunctionRole,
    source: Option<&[usize]>,
    u: &[BitBlock],
) -> Result<Vec<Option<u32>>> {
    let spec = model
        .function(role)
        .ok_or_else(|| usage(format!("model has no function for {role:?}")))?;
    if u.len() != model.rounds() {
        return Err(usage("one block per round required"));
    }
    let args = model.decoder_args(role)?;
    let sizes = model.sizes_of(&args)?;
    let has_source = matches!(role, FunctionRole::Terminal(_));
    let n = match (has_source, source, u.first()) {
        (true, Some(s), _) => s.len(),
        (true, None, _) => return Err(usage("a terminal function needs the source block")),
        (false, _, Some(b)) => b.len(),
        (false, _, None) => return Err(usage("a sink function needs at least one round")),
    };
    if u.iter().any(|b| b.len() != n) {
        return Err(usage("blocks differ in length"));
    }
    let mut tuple = vec![0usize; args.len()];
    Ok((0..n)
        .map(|k| {
            let mut a = 0;
            if let Some(s) = source.filter(|_| has_source) {
                tuple[0] = s[k];
                a = 1;
            }
            for (r, b) in u.iter().enumerate() {
                tuple[a + r] = b.bits()[k] as usize;
            }
            spec.decoder.lookup(&sizes, &tuple)
        })
        .collect())
}

fn check_plans(model: &AuxChainModel, plans: &[RoundPlan], n: usize) -> Result<()> {
    if plans.len() != model.rounds() {
        return Err(usage(format!("{} plans for {} rounds", plans.len(), model.rounds())));
    }
    for (r, p) in plans.iter().enumerate() {
        if p.round != r || p.transmitter != model.transmitters[r] || p.n() != n {
            return Err(usage(format!("plan {} does not match the model or N", r + 1)));
        }
        p.partition.check()?;
    }
    Ok(())
}

fn execute(
    model: &AuxChainModel,
    sources: &[Vec<usize>],
    plans: &[RoundPlan],
    seeds: ProtocolSeeds,
    fd: FdPolicy,
) -> Result<ProtocolResult> {
    let n = sources
        .first()
        .map(Vec::len)
        .ok_or_else(|| usage("no source blocks"))?;
    log2_exact(n)?;
    if sources.len() != model.sources.len() || sources.iter().any(|s| s.len() != n) {
        return Err(usage("one source block of length N per source required"));
    }
    for (s, name) in sources.iter().zip(&model.sources) {
        let size = model.joint.size_of(name)?;
        if s.iter().any(|&v| v >= size) {
            return Err(usage(format!("source {name} has a symbol outside its alphabet")));
        }
    }
    check_plans(model, plans, n)?;
    let mut states: Vec<TerminalState> = (0..model.terminal_count())
        .map(|j| TerminalState::new(j, sources.get(j).cloned(), seeds.private))
        .collect();
    let mut rounds = Vec::new();
    let mut agreement = Vec::new();
    let mut anomalies = Anomalies::default();
    for plan in plans {
        let tx_idx = plan.transmitter;
        let (before, rest) = states.split_at_mut(tx_idx);
        let (tx, after) = rest.split_first_mut().expect("transmitter exists");
        let mut rxs: Vec<&mut TerminalState> = before.iter_mut().chain(after.iter_mut()).collect();
        let out = run_round(model, plan, tx, &mut rxs, seeds.shared, fd)?;
        anomalies.null_events += out.null_events;
        let r = plan.round;
        agreement.push(states.iter().all(|s| s.u[r] == states[0].u[r]));
        rounds.push(RoundMessage {
            direction: plan.direction.clone(),
            bits: out.message.len(),
            message_hex: pack_bits(&out.message),
        });
    }
    let rates: Vec<f64> = rounds.iter().map(|m| m.bits as f64 / n as f64).collect();
    let transcript = Transcript {
        total_bits: rounds.iter().map(|m| m.bits).sum(),
        rounds,
        rates,
    };
    let mut outputs = Vec::new();
    for f in &model.functions {
        let state = match f.role {
            FunctionRole::Terminal(j) => &states[j],
            FunctionRole::Sink => &states[model.sink().ok_or_else(|| usage("model has no sink"))?],
        };
        if model.rounds() == 0 && f.role == FunctionRole::Sink {
            return Err(Error::Model("a sink cannot decode without rounds".into()));
        }
        outputs.push(FunctionOutput {
            name: f.name.clone(),
            role: f.role,
            values: compute_function(model, f.role, state.source.as_deref(), &state.u)?,
        });
    }
    Ok(ProtocolResult {
        n,
        u: states.into_iter().map(|s| s.u).collect(),
        agreement,
        transcript,
        outputs,
        anomalies,
    })
}

/// Two-terminal execution over source blocks `x` (terminal A) and `y` (terminal B).
pub fn run_two_terminal(
    model: &AuxChainModel,
    x: &[usize],
    y: &[usize],
    plans: &[RoundPlan],
    seeds: ProtocolSeeds,
    fd: FdPolicy,
) -> Result<ProtocolResult> {
    if model.network != Network::TwoTerminal {
        return Err(usage("run_two_terminal needs a two-terminal model"));
    }
    execute(model, &[x.to_vec(), y.to_vec()], plans, seeds, fd)
}

/// Collocated execution; `sources[j]` is terminal `j`'s block.
pub fn run_collocated(
    model: &AuxChainModel,
    sources: &[Vec<usize>],
    plans: &[RoundPlan],
    seeds: ProtocolSeeds,
    fd: FdPolicy,
) -> Result<ProtocolResult> {
    if model.network != Network::Collocated {
        return Err(usage("run_collocated needs a collocated model"));
    }
    execute(model, sources, plans, seeds, fd)
}

/// Draw i.i.d. source blocks from the model's source marginal.
pub fn sample_sources<R: Rng + ?Sized>(model: &AuxChainModel, n: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let names: Vec<&str> = model.sources.iter().map(String::as_str).collect();
    let marg = model.joint.marginal(&names)?;
    let sizes = marg.sizes();
    let mass = marg.mass();
    let mut blocks = vec![vec![0usize; n]; names.len()];
    for k in 0..n {
        let mut r = rng.gen::<f64>();
        let mut flat = mass.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        for (i, &m) in mass.iter().enumerate() {
            if r < m {
                flat = i;
                break;
            }
            r -= m;
        }
        for j in (0..sizes.len()).rev() {
            blocks[j][k] = flat % sizes[j];
            flat /= sizes[j];
        }
    }
    Ok(blocks)
}

/// One simulated trial: sources from `stream(seed, Source, k)`, protocol seeds
/// from [`ProtocolSeeds::for_trial`].
pub fn run_trial(
    model: &AuxChainModel,
    plans: &[RoundPlan],
    n: usize,
    seed: u64,
    k: u64,
    fd: FdPolicy,
) -> Result<(Vec<Vec<usize>>, ProtocolResult)> {
    let sources = sample_sources(model, n, &mut stream(seed, Domain::Source, k))?;
    let result = execute(model, &sources, plans, ProtocolSeeds::for_trial(seed, k), fd)?;
    Ok((sources, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_and_chain, build_collocated_chain, AndModelParams};
    use crate::pmf::{JointPmf, Variable};

    fn and2() -> AuxChainModel {
        build_and_chain(&AndModelParams::linear(0.5, 0.5, 2)).unwrap()
    }

    fn seeds() -> ProtocolSeeds {
        ProtocolSeeds { shared: 7, private: 11 }
    }

    #[test]
    fn and_chain_plans_alternate() {
        let plans = plan_protocol(&and2(), 4, &PlanSizing::Threshold { beta: 0.3 }, &ProfileChoice::Exact).unwrap();
        assert_eq!(plans.len(), 2);
        assert_eq!(plans[0].direction, "A->B");
        assert_eq!(plans[1].direction, "B->A");
    }

    #[test]
    fn independent_aux_sends_nothing() {
        let joint = JointPmf::from_fn(
            vec![Variable::new("X", 2), Variable::new("Y", 2), Variable::new("U1", 2)],
            |_| 0.125,
        )
        .unwrap();
        let m = AuxChainModel::two_terminal(joint, "X", "Y", &["U1"]).unwrap();
        let plans = plan_protocol(&m, 4, &PlanSizing::FixedThreshold { delta: 0.01 }, &ProfileChoice::Exact).unwrap();
        assert!(plans[0].partition.i.is_empty());
        assert_eq!(plans[0].partition.f_r.len(), 4);
    }

    #[test]
    fn collocated_broadcast_order() {
        let m = build_collocated_chain(&[0.5, 0.5]).unwrap();
        let plans = plan_protocol(&m, 4, &PlanSizing::TransmitAll, &ProfileChoice::Exact).unwrap();
        assert_eq!(plans.iter().map(|p| p.transmitter).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(plans[1].receivers, vec![0, 2]);
    }

    #[test]
    fn transmit_all_computes_and_exactly() {
        let m = and2();
        let plans = plan_protocol(&m, 8, &PlanSizing::TransmitAll, &ProfileChoice::Exact).unwrap();
        let x = vec![0, 1, 1, 0, 1, 1, 0, 1];
        let y = vec![1, 1, 0, 0, 1, 0, 1, 1];
        let r = run_two_terminal(&m, &x, &y, &plans, seeds(), FdPolicy::Sample).unwrap();
        assert!(r.agreed());
        let truth: Vec<Option<u32>> = x.iter().zip(&y).map(|(a, b)| Some((a & b) as u32)).collect();
        for out in &r.outputs {
            assert_eq!(out.values, truth);
        }
        assert_eq!(r.transcript.total_bits, 16);
        assert_eq!(r.transcript.rates, vec![1.0, 1.0]);
    }

    #[test]
    fn collocated_transmit_all_sink_gets_and() {
        let m = build_collocated_chain(&[0.5, 0.5]).unwrap();
        let plans = plan_protocol(&m, 4, &PlanSizing::TransmitAll, &ProfileChoice::Exact).unwrap();
        let src = vec![vec![1, 1, 0, 1], vec![1, 0, 1, 1]];
        let r = run_collocated(&m, &src, &plans, seeds(), FdPolicy::Sample).unwrap();
        assert_eq!(r.outputs[0].values, vec![Some(1), Some(0), Some(0), Some(1)]);
        assert!(r.agreed());
    }

    #[test]
    fn compute_function_erases_impossible_tuples() {
        let m = and2();
        let u = |b: Vec<u8>| BitBlock::new(b).unwrap();
        let out = compute_function(
            &m,
            FunctionRole::Terminal(0),
            Some(&[1, 0, 0, 1]),
            &[u(vec![1, 0, 1, 1]), u(vec![1, 0, 0, 0])],
        )
        .unwrap();
        assert_eq!(out, vec![Some(1), Some(0), None, Some(0)]);
    }

    #[test]
    fn zero_round_model_uses_own_source() {
        let joint = JointPmf::from_fn(vec![Variable::new("X", 2), Variable::new("Y", 2)], |_| 0.25).unwrap();
        let m = AuxChainModel::two_terminal(joint, "X", "Y", &[])
            .unwrap()
            .with_function("not_x", FunctionRole::Terminal(0), |v| 1 - v[0] as u32)
            .unwrap();
        let r = run_two_terminal(&m, &[0, 1], &[1, 1], &[], seeds(), FdPolicy::Sample).unwrap();
        assert!(r.transcript.rounds.is_empty());
        assert_eq!(r.outputs[0].values, vec![Some(1), Some(0)]);
    }

    #[test]
    fn runs_are_reproducible() {
        let m = and2();
        let plans = plan_protocol(&m, 8, &PlanSizing::Threshold { beta: 0.3 }, &ProfileChoice::Exact).unwrap();
        let a = run_trial(&m, &plans, 8, 5, 3, FdPolicy::Sample).unwrap().1;
        let b = run_trial(&m, &plans, 8, 5, 3, FdPolicy::Sample).unwrap().1;
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.u, b.u);
    }

    #[test]
    fn hex_packing() {
        assert_eq!(pack_bits(&[1, 0, 1]), "a0");
        assert_eq!(pack_bits(&[]), "");
        assert_eq!(pack_bits(&[0, 0, 0, 0, 0, 0, 0, 1, 1]), "0180");
    }
}
