//! Per-symbol auxiliary-variable chains: the joint law of the sources and the
//! auxiliary variables, who transmits in each round, the Markov conditions the
//! chain must satisfy and the function tables evaluated at the end.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::pmf::{for_each_assignment, JointPmf};
use crate::sc::SymbolChannel;

/// Markov-violation tolerance used when a model is validated on construction.
pub const MARKOV_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    /// Terminals A and B alternate, A first.
    TwoTerminal,
    /// `m` source terminals broadcast round-robin; a sink listens.
    Collocated,
}

/// Which observation the reliabilities of a round are conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    None,
    Transmitter,
    Receiver,
}

/// The chain `a -> b -> c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovSpec {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

impl MarkovSpec {
    pub fn new(a: &[&str], b: &[&str], c: &[&str]) -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        MarkovSpec {
            a: own(a),
            b: own(b),
            c: own(c),
        }
    }

    pub fn violation(&self, joint: &JointPmf) -> Result<f64> {
        joint.markov_violation(&strs(&self.a), &strs(&self.b), &strs(&self.c))
    }
}

impl std::fmt::Display for MarkovSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> ({}) -> {}", self.a.join(","), self.b.join(","), self.c.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub chain: MarkovSpec,
    pub violation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub tol: f64,
    pub chains: Vec<ChainCheck>,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.chains.iter().all(|c| c.pass)
    }

    pub fn max_violation(&self) -> f64 {
        self.chains.iter().map(|c| c.violation).fold(0.0, f64::max)
    }
}

/// Check every chain of `specs` against `joint`.
pub fn validate_markov(joint: &JointPmf, specs: &[MarkovSpec], tol: f64) -> Result<MarkovReport> {
    let chains = specs
        .iter()
        .map(|s| {
            let violation = s.violation(joint)?;
            Ok(ChainCheck {
                chain: s.clone(),
                violation,
                pass: violation <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarkovReport { tol, chains })
}

/// Who evaluates a function: a terminal (by index) or the collocated sink.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionRole {
    Terminal(usize),
    Sink,
}

/// Dense table over the product alphabet of `args` (row-major, last fastest).
/// `None` marks argument tuples the model never produces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionTable {
    pub args: Vec<String>,
    pub values: Vec<Option<u32>>,
}

impl FunctionTable {
    pub fn lookup(&self, sizes: &[usize], values: &[usize]) -> Option<u32> {
        let mut flat = 0;
        for (v, s) in values.iter().zip(sizes) {
            flat = flat * s + v;
        }
        self.values.get(flat).copied().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    pub role: FunctionRole,
    /// The function of the sources being computed.
    pub target: FunctionTable,
    /// The same value read off the role's own observation and the auxiliary
    /// sequences.
    pub decoder: FunctionTable,
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Per-symbol joint `P(sources, U^1..U^t)` plus the protocol metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxChainModel {
    pub joint: JointPmf,
    pub network: Network,
    /// Source variable observed by terminal `j`.
    pub sources: Vec<String>,
    /// `U^1..U^t`, all binary.
    pub aux: Vec<String>,
    /// Transmitting terminal of each round.
    pub transmitters: Vec<usize>,
    pub markov_specs: Vec<MarkovSpec>,
    pub functions: Vec<FunctionSpec>,
}

impl AuxChainModel {
    /// Two-terminal chain over `(x, y, aux...)`; requires
    /// `U^i -> (X, U^{<i}) -> Y` for odd rounds and the mirror image for even ones.
    pub fn two_terminal(joint: JointPmf, x: &str, y: &str, aux: &[&str]) -> Result<Self> {
        let transmitters = (0..aux.len()).map(|r| r % 2).collect();
        let mut markov_specs = Vec::new();
        for r in 0..aux.len() {
            let (own, other) = if r % 2 == 0 { (x, y) } else { (y, x) };
            let mut given = vec![own];
            given.extend_from_slice(&aux[..r]);
            markov_specs.push(MarkovSpec::new(&[aux[r]], &given, &[other]));
        }
        let model = AuxChainModel {
            joint,
            network: Network::TwoTerminal,
            sources: vec![x.to_string(), y.to_string()],
            aux: aux.iter().map(|s| s.to_string()).collect(),
            transmitters,
            markov_specs,
            functions: Vec::new(),
        };
        model.check_shape()?;
        Ok(model)
    }

    /// Collocated network over independent `sources`; terminal `(i-1) mod m + 1`
    /// broadcasts in round `i` and `U^i -> (U^{<i}, X^j) -> X^{-j}` must hold.
    pub fn collocated(joint: JointPmf, sources: &[&str], aux: &[&str]) -> Result<Self> {
        let m = sources.len();
        if m == 0 {
            return Err(usage("collocated network without sources"));
        }
        let transmitters: Vec<usize> = (0..aux.len()).map(|r| r % m).collect();
        let mut markov_specs = Vec::new();
        for (r, &j) in transmitters.iter().enumerate() {
            let others: Vec<&str> = (0..m).filter(|&k| k != j).map(|k| sources[k]).collect();
            if others.is_empty() {
                continue;
            }
            let mut given: Vec<&str> = aux[..r].to_vec();
            given.push(sources[j]);
            markov_specs.push(MarkovSpec::new(&[aux[r]], &given, &others));
        }
        let model = AuxChainModel {
            joint,
            network: Network::Collocated,
            sources: sources.iter().map(|s| s.to_string()).collect(),
            aux: aux.iter().map(|s| s.to_string()).collect(),
            transmitters,
            markov_specs,
            functions: Vec::new(),
        };
        model.check_shape()?;
        Ok(model)
    }

    /// Attach a function of the sources, deriving its decoder table from the joint.
    pub fn with_function(
        mut self,
        name: &str,
        role: FunctionRole,
        f: impl Fn(&[usize]) -> u32,
    ) -> Result<Self> {
        let src = strs(&self.sources);
        let sizes = self.sizes_of(&src)?;
        let mut values = Vec::new();
        for_each_assignment(&sizes, |v| values.push(Some(f(v))));
        let target = FunctionTable {
            args: self.sources.clone(),
            values,
        };
        let decoder = self.derive_decoder(role, &target)?;
        self.functions.push(FunctionSpec {
            name: name.to_string(),
            role,
            target,
            decoder,
        });
        Ok(self)
    }

    pub fn rounds(&self) -> usize {
        self.aux.len()
    }

    /// Terminals including the sink (collocated networks put it last).
    pub fn terminal_count(&self) -> usize {
        match self.network {
            Network::TwoTerminal => 2,
            Network::Collocated => self.sources.len() + 1,
        }
    }

    /// Source observed by `terminal`, `None` for the sink.
    pub fn observed_source(&self, terminal: usize) -> Option<&str> {
        self.sources.get(terminal).map(String::as_str)
    }

    pub fn sink(&self) -> Option<usize> {
        match self.network {
            Network::TwoTerminal => None,
            Network::Collocated => Some(self.sources.len()),
        }
    }

    pub fn sizes_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.joint.size_of(n)).collect()
    }

    /// Terminals receiving in `round`.
    pub fn receivers(&self, round: usize) -> Vec<usize> {
        let tx = self.transmitters[round];
        (0..self.terminal_count()).filter(|&k| k != tx).collect()
    }

    /// Variables a party conditions on in `round`.
    pub fn conditioning_vars(&self, round: usize, cond: Conditioning) -> Vec<&str> {
        let history = self.aux[..round].iter().map(String::as_str);
        let tx = self.transmitters[round];
        match (cond, self.network) {
            (Conditioning::None, _) => Vec::new(),
            (Conditioning::Transmitter, _) => {
                std::iter::once(self.sources[tx].as_str()).chain(history).collect()
            }
            (Conditioning::Receiver, Network::TwoTerminal) => {
                std::iter::once(self.sources[1 - tx].as_str()).chain(history).collect()
            }
            (Conditioning::Receiver, Network::Collocated) => history.collect(),
        }
    }

    /// Per-symbol slice of `U^round` against the chosen conditioning.
    pub fn channel(&self, round: usize, cond: Conditioning) -> Result<SymbolChannel> {
        if round >= self.rounds() {
            return Err(usage(format!("round {round} out of range")));
        }
        SymbolChannel::from_joint(&self.joint, &self.aux[round], &self.conditioning_vars(round, cond))
    }

    /// Observation variables of `terminal` when it acts as `cond` in `round`:
    /// its own source (if it conditions on one) followed by `U^{<round}`.
    pub fn terminal_conditioning(&self, round: usize, terminal: usize) -> Vec<&str> {
        let history = self.aux[..round].iter().map(String::as_str);
        match self.network {
            Network::TwoTerminal => std::iter::once(self.sources[terminal].as_str()).chain(history).collect(),
            Network::Collocated if terminal == self.transmitters[round] => {
                std::iter::once(self.sources[terminal].as_str()).chain(history).collect()
            }
            Network::Collocated => history.collect(),
        }
    }

    /// Closed-form rate of `round`:
    /// `I(X_tx; U^i | X_rx, U^{<i})` for two terminals, `I(X^j; U^i | U^{<i})` collocated.
    pub fn theoretical_rate(&self, round: usize) -> Result<f64> {
        let tx = self.transmitters[round];
        let mut given: Vec<&str> = self.aux[..round].iter().map(String::as_str).collect();
        if self.network == Network::TwoTerminal {
            given.push(&self.sources[1 - tx]);
        }
        self.joint
            .mutual_information(&[&self.sources[tx]], &[&self.aux[round]], &given)
    }

    /// `H(U^round)`, `H(U^round | transmitter obs)`, `H(U^round | receiver obs)`.
    pub fn round_entropies(&self, round: usize) -> Result<(f64, f64, f64)> {
        let u = self.aux[round].as_str();
        let h = self.joint.entropy_bits(&[u])?;
        let tx = self
            .joint
            .conditional_entropy(&[u], &self.conditioning_vars(round, Conditioning::Transmitter))?;
        let rx = self
            .joint
            .conditional_entropy(&[u], &self.conditioning_vars(round, Conditioning::Receiver))?;
        Ok((h, tx, rx))
    }

    pub fn validate_markov(&self, tol: f64) -> Result<MarkovReport> {
        validate_markov(&self.joint, &self.markov_specs, tol)
    }

    /// Arguments of the decoder table for `role`.
    pub fn decoder_args(&self, role: FunctionRole) -> Result<Vec<&str>> {
        let mut args = Vec::new();
        match role {
            FunctionRole::Terminal(j) => {
                args.push(
                    self.sources
                        .get(j)
                        .ok_or_else(|| usage(format!("terminal {j} has no source")))?
                        .as_str(),
                );
            }
            FunctionRole::Sink => {
                if self.network != Network::Collocated {
                    return Err(usage("only collocated networks have a sink"));
                }
            }
        }
        args.extend(self.aux.iter().map(String::as_str));
        Ok(args)
    }

    fn derive_decoder(&self, role: FunctionRole, target: &FunctionTable) -> Result<FunctionTable> {
        let args = self.decoder_args(role)?;
        let arg_idx = args
            .iter()
            .map(|a| self.joint.index_of(a))
            .collect::<Result<Vec<_>>>()?;
        let src_idx = self
            .sources
            .iter()
            .map(|a| self.joint.index_of(a))
            .collect::<Result<Vec<_>>>()?;
        let sizes = self.joint.sizes();
        let src_sizes: Vec<usize> = src_idx.iter().map(|&i| sizes[i]).collect();
        let arg_sizes: Vec<usize> = arg_idx.iter().map(|&i| sizes[i]).collect();
        let mut values: Vec<Option<u32>> = vec![None; arg_sizes.iter().product()];
        let mut conflict = false;
        self.joint.for_each(|v, m| {
            if m <= 0.0 {
                return;
            }
            let sv: Vec<usize> = src_idx.iter().map(|&i| v[i]).collect();
            let av: Vec<usize> = arg_idx.iter().map(|&i| v[i]).collect();
            let z = target.lookup(&src_sizes, &sv);
            let flat = av.iter().zip(&arg_sizes).fold(0, |acc, (x, s)| acc * s + x);
            match (values[flat], z) {
                (None, Some(z)) => values[flat] = Some(z),
                (Some(prev), Some(z)) if prev == z => {}
                _ => conflict = true,
            }
        });
        if conflict {
            return Err(Error::Model(format!(
                "function is not determined by ({}) under the model",
                args.join(",")
            )));
        }
        Ok(FunctionTable {
            args: args.iter().map(|s| s.to_string()).collect(),
            values,
        })
    }

    fn check_shape(&self) -> Result<()> {
        for s in self.sources.iter().chain(&self.aux) {
            self.joint.index_of(s).map_err(|_| Error::Model(format!("unknown variable {s}")))?;
        }
        for u in &self.aux {
            if self.joint.size_of(u)? != 2 {
                return Err(Error::Model(format!("auxiliary variable {u} is not binary")));
            }
        }
        if self.transmitters.len() != self.aux.len() {
            return Err(Error::Model("one transmitter per round required".into()));
        }
        let m = self.sources.len();
        let expected = |r: usize| match self.network {
            Network::TwoTerminal => r % 2,
            Network::Collocated => r % m,
        };
        if self.network == Network::TwoTerminal && m != 2 {
            return Err(Error::Model("two-terminal models need exactly two sources".into()));
        }
        if let Some(r) = (0..self.aux.len()).find(|&r| self.transmitters[r] != expected(r)) {
            return Err(Error::Model(format!("round {} has the wrong transmitter", r + 1)));
        }
        Ok(())
    }

    /// Full validation: shape, Markov chains, source independence (collocated),
    /// and that every decoder table reproduces its target on the support.
    pub fn validate(&self, tol: f64) -> Result<MarkovReport> {
        self.check_shape()?;
        let report = self.validate_markov(tol)?;
        if !report.passed() {
            let bad: Vec<String> = report
                .chains
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{} (violation {:.3e})", c.chain, c.violation))
                .collect();
            return Err(Error::Model(format!("Markov chain check failed: {}", bad.join("; "))));
        }
        if self.network == Network::Collocated && self.sources.len() > 1 {
            let src = strs(&self.sources);
            let joint = self.joint.marginal(&src)?;
            let marginals = src
                .iter()
                .map(|s| self.joint.marginal(&[s]))
                .collect::<Result<Vec<_>>>()?;
            let mut worst: f64 = 0.0;
            joint.for_each(|v, m| {
                let prod: f64 = v.iter().zip(&marginals).map(|(x, p)| p.mass()[*x]).product();
                worst = worst.max((m - prod).abs());
            });
            if worst > tol {
                return Err(Error::Model(format!("sources are not independent (gap {worst:.3e})")));
            }
        }
        for f in &self.functions {
            let derived = self.derive_decoder(f.role, &f.target)?;
            if derived.args != f.decoder.args {
                return Err(Error::Model(format!("decoder of {} has wrong arguments", f.name)));
            }
            // stored entries must agree wherever the model has support
            for (d, s) in derived.values.iter().zip(&f.decoder.values) {
                if d.is_some() && d != s {
                    return Err(Error::Model(format!("decoder of {} disagrees with the model", f.name)));
                }
            }
        }
        Ok(report)
    }

    pub fn function(&self, role: FunctionRole) -> Option<&FunctionSpec> {
        self.functions.iter().find(|f| f.role == role)
    }
}
