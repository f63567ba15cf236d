//! Experiment runner behind the `polarcomm` binary.
//!
//! A run reads one flat TOML config ([`ExperimentConfig`]), executes one
//! [`Command`] and writes JSON/CSV artifacts into an output directory. Output
//! depends only on the config and the seed: worker count, wall time and host
//! never enter a file. If a command fails, every file it wrote is removed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::builders::{build_and_chain, build_bsc_chain, build_collocated_chain, sum_rates, AndModelParams};
use crate::error::{Error, Result};
use crate::model::{AuxChainModel, Conditioning, MARKOV_TOL};
use crate::protocol::{plan_protocol, run_trial, FdPolicy, PlanSizing, ProfileChoice, RoundPlan};
use crate::reliability::DEFAULT_BETA;
use crate::rng::mix;
use crate::transform::log2_exact;
use crate::verification::{simulate, verify, CsvRow, VerifyMode, AGREEMENT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    And,
    Bsc,
    Collocated,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    TargetRate,
    Threshold,
    FixedThreshold,
    TransmitAll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyModeName {
    Auto,
    Exact,
    MonteCarlo,
}

/// Flat experiment configuration. Every key is optional; see [`schema`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub model_file: String,
    pub label: String,
    pub p: f64,
    pub q: f64,
    pub t: usize,
    pub alpha_noise: f64,
    pub epsilon: f64,
    pub source_p: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub partition: PartitionMode,
    pub beta: f64,
    pub delta: f64,
    pub margin: f64,
    pub profile: ProfileMode,
    pub profile_samples: usize,
    pub seed: u64,
    pub trials: usize,
    pub fd_policy: FdPolicy,
    pub verify_mode: VerifyModeName,
    pub workers: usize,
    pub max_anomaly_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSource::And,
            model_file: String::new(),
            label: String::new(),
            p: 0.5,
            q: 0.5,
            t: 2,
            alpha_noise: 0.11,
            epsilon: 0.2,
            source_p: vec![0.5, 0.5],
            n: vec![4],
            partition: PartitionMode::TargetRate,
            beta: DEFAULT_BETA,
            delta: 1e-3,
            margin: 0.05,
            profile: ProfileMode::Auto,
            profile_samples: 2000,
            seed: 1,
            trials: 200,
            fd_policy: FdPolicy::Sample,
            verify_mode: VerifyModeName::Auto,
            workers: 0,
            max_anomaly_rate: 1.0,
        }
    }
}

const SCHEMA: &[(&str, &str, &str)] = &[
    ("model", "string", "and | bsc | collocated | file"),
    ("model_file", "string", "AuxChainModel JSON, used when model = \"file\"; relative to the config"),
    ("label", "string", "model column of CSV output; empty means the model name"),
    ("p", "float", "and: P(X = 1), in (0, 1)"),
    ("q", "float", "and: P(Y = 1), in (0, 1)"),
    ("t", "integer", "and: number of rounds, even and >= 2 (linear curve, even partition)"),
    ("alpha_noise", "float", "bsc: U1 = X xor Ber(alpha_noise), in (0, 1/2]"),
    ("epsilon", "float", "bsc: Y = X xor Ber(epsilon), in (0, 1/2]"),
    ("source_p", "float array", "collocated: P(X^j = 1) per source terminal, at least two"),
    ("N", "integer array", "blocklengths, powers of two"),
    ("partition", "string", "target_rate | threshold | fixed_threshold | transmit_all"),
    ("beta", "float", "threshold: delta_N = 2^(-N^beta)"),
    ("delta", "float", "fixed_threshold: delta, in (0, 1/2)"),
    ("margin", "float", "target_rate: bits per symbol added to each round's rate"),
    ("profile", "string", "auto (exact for N <= 8) | exact | monte_carlo"),
    ("profile_samples", "integer", "Monte Carlo reliability samples"),
    ("seed", "integer", "master seed for profiles, sources, common and private randomness"),
    ("trials", "integer", "protocol executions per N for simulate, verify and sweep"),
    ("fd_policy", "string", "sample | argmax: how F_d bits are drawn"),
    ("verify_mode", "string", "auto (exact for N <= 4) | exact | monte_carlo"),
    ("workers", "integer", "worker threads, 0 for all cores; never changes output"),
    ("max_anomaly_rate", "float", "fail with exit code 3 when more trials than this fraction hit a null prefix"),
];

/// JSON description of every config key with its default.
pub fn schema() -> serde_json::Value {
    let defaults = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
    let keys: Vec<serde_json::Value> = SCHEMA
        .iter()
        .map(|(k, ty, doc)| json!({"key": k, "type": ty, "default": defaults[*k], "doc": doc}))
        .collect();
    json!({"format": "flat TOML", "keys": keys})
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        if cfg.model == ModelSource::File {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.model_file = base.join(&cfg.model_file).to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n.is_empty() {
            return bad("N must list at least one blocklength".into());
        }
        for &n in &self.n {
            if log2_exact(n).is_err() {
                return bad(format!("N = {n} is not a power of two"));
            }
        }
        if self.profile_samples == 0 {
            return bad("profile_samples must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_anomaly_rate) {
            return bad("max_anomaly_rate must lie in [0, 1]".into());
        }
        if !(self.margin >= 0.0 && self.margin <= 1.0) {
            return bad("margin must lie in [0, 1]".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)".into());
        }
        if self.model == ModelSource::File && self.model_file.is_empty() {
            return bad("model = \"file\" needs model_file".into());
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        if !self.label.is_empty() {
            return self.label.clone();
        }
        match self.model {
            ModelSource::And => "and",
            ModelSource::Bsc => "bsc",
            ModelSource::Collocated => "collocated",
            ModelSource::File => "file",
        }
        .to_string()
    }

    pub fn build_model(&self) -> Result<AuxChainModel> {
        let model = match self.model {
            ModelSource::And => build_and_chain(&AndModelParams::linear(self.p, self.q, self.t))?,
            ModelSource::Bsc => build_bsc_chain(self.alpha_noise, self.epsilon)?,
            ModelSource::Collocated => build_collocated_chain(&self.source_p)?,
            ModelSource::File => {
                let text = fs::read_to_string(&self.model_file)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", self.model_file)))?;
                let m: AuxChainModel =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad model file: {e}")))?;
                m.validate(MARKOV_TOL)?;
                m
            }
        };
        Ok(model)
    }

    pub fn sizing(&self) -> PlanSizing {
        match self.partition {
            PartitionMode::TargetRate => PlanSizing::TheoryPlusMargin { margin: self.margin },
            PartitionMode::Threshold => PlanSizing::Threshold { beta: self.beta },
            PartitionMode::FixedThreshold => PlanSizing::FixedThreshold { delta: self.delta },
            PartitionMode::TransmitAll => PlanSizing::TransmitAll,
        }
    }

    pub fn profile_choice(&self) -> ProfileChoice {
        let samples = self.profile_samples;
        let seed = mix(self.seed, 0x70f);
        match self.profile {
            ProfileMode::Auto => ProfileChoice::Auto { samples, seed },
            ProfileMode::Exact => ProfileChoice::Exact,
            ProfileMode::MonteCarlo => ProfileChoice::MonteCarlo { samples, seed },
        }
    }

    pub fn verify_mode(&self, n: usize) -> Result<VerifyMode> {
        let mc = || {
            if self.trials == 0 {
                Err(Error::Config("Monte Carlo verification needs trials > 0".into()))
            } else {
                Ok(VerifyMode::MonteCarlo {
                    trials: self.trials,
                    seed: self.seed,
                })
            }
        };
        match self.verify_mode {
            VerifyModeName::Exact => Ok(VerifyMode::Exact),
            VerifyModeName::MonteCarlo => mc(),
            VerifyModeName::Auto if n <= AGREEMENT_CAP => Ok(VerifyMode::Exact),
            VerifyModeName::Auto => mc(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Profile,
    Plan,
    Simulate,
    Verify,
    Rates,
    Sweep,
}

/// Files written by one run, removed again if the run fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        fs::write(&path, bytes)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, rows: &[CsvRow]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        if rows.is_empty() {
            w.write_record(["model", "N", "round", "metric", "value", "stderr"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.write(name, &bytes)
    }

    fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn plans_for(cfg: &ExperimentConfig, model: &AuxChainModel, n: usize) -> Result<Vec<RoundPlan>> {
    plan_protocol(model, n, &cfg.sizing(), &cfg.profile_choice())
}

fn check_anomalies(cfg: &ExperimentConfig, n: usize, rate: f64) -> Result<()> {
    if rate > cfg.max_anomaly_rate {
        return Err(Error::Anomaly(format!(
            "N = {n}: {rate} of trials hit a null prefix, limit {}",
            cfg.max_anomaly_rate
        )));
    }
    Ok(())
}

fn rate_rows(label: &str, n: usize, plans: &[RoundPlan]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for p in plans {
        let row = |metric: &str, value: f64| CsvRow {
            model: label.to_string(),
            n,
            round: p.round + 1,
            metric: metric.to_string(),
            value,
            stderr: 0.0,
        };
        let measured = p.partition.rate();
        rows.push(row("measured_rate", measured));
        rows.push(row("theory_rate", p.theoretical_rate));
        rows.push(row("rate_gap", (measured - p.theoretical_rate).abs()));
    }
    rows
}

fn execute(cfg: &ExperimentConfig, command: Command, out: &mut Outputs) -> Result<()> {
    let model = cfg.build_model()?;
    let label = cfg.label();
    match command {
        Command::Profile => {
            for &n in &cfg.n {
                for r in 0..model.rounds() {
                    let p = crate::protocol::round_profiles(&model, r, n, &cfg.profile_choice())?;
                    for (cond, prof) in [
                        (Conditioning::None, &p.uncond),
                        (Conditioning::Transmitter, &p.tx),
                        (Conditioning::Receiver, &p.rx),
                    ] {
                        let tag = serde_json::to_value(cond)?;
                        let tag = tag.as_str().unwrap_or("unknown");
                        out.json(&format!("profile_N{n}_r{}_{tag}.json", r + 1), prof)?;
                    }
                }
            }
        }
        Command::Plan => {
            for &n in &cfg.n {
                let plans = plans_for(cfg, &model, n)?;
                for p in &plans {
                    out.json(&format!("partition_N{n}_r{}.json", p.round + 1), &p.partition)?;
                }
                out.json(&format!("plan_N{n}.json"), &plans)?;
            }
        }
        Command::Simulate => {
            if cfg.trials == 0 {
                return Err(Error::Config("simulate needs trials > 0".into()));
            }
            for &n in &cfg.n {
                let plans = plans_for(cfg, &model, n)?;
                let stats = simulate(&model, &plans, n, cfg.trials, cfg.seed, cfg.fd_policy)?;
                check_anomalies(cfg, n, stats.anomaly_rate)?;
                let (_, first) = run_trial(&model, &plans, n, cfg.seed, 0, cfg.fd_policy)?;
                out.json(&format!("simulate_N{n}.json"), &stats)?;
                out.json(&format!("transcript_N{n}.json"), &first.transcript)?;
            }
        }
        Command::Verify => {
            let mut rows = Vec::new();
            for &n in &cfg.n {
                let plans = plans_for(cfg, &model, n)?;
                let report = verify(&model, &plans, n, cfg.verify_mode(n)?, cfg.fd_policy)?;
                check_anomalies(cfg, n, report.anomaly_rate)?;
                rows.extend(report.csv_rows(&label));
                out.json(&format!("report_N{n}.json"), &report)?;
            }
            out.csv("report.csv", &rows)?;
        }
        Command::Rates => {
            let mut rows = Vec::new();
            let mut per_round = Vec::new();
            let row = |round: usize, metric: &str, value: f64| CsvRow {
                model: label.clone(),
                n: 0,
                round,
                metric: metric.to_string(),
                value,
                stderr: 0.0,
            };
            let mut total = 0.0;
            for r in 0..model.rounds() {
                let rate = model.theoretical_rate(r)?;
                let (h, h_tx, h_rx) = model.round_entropies(r)?;
                total += rate;
                rows.push(row(r + 1, "theory_rate", rate));
                per_round.push(json!({
                    "round": r + 1,
                    "direction": crate::protocol::terminal_name(&model, model.transmitters[r]),
                    "rate": rate,
                    "H_U": h,
                    "H_U_given_tx": h_tx,
                    "H_U_given_rx": h_rx,
                }));
            }
            rows.push(row(0, "sum_rate", total));
            let mut doc = json!({"model": label, "rounds": per_round, "sum_rate": total});
            if cfg.model == ModelSource::And {
                let s = sum_rates(cfg.p, cfg.q)?;
                rows.push(row(0, "r_sum_infinity", s.r_sum_infinity));
                rows.push(row(0, "r_sum_two_round_a", s.r_sum_two_round_a));
                doc["sum_rates"] = serde_json::to_value(s)?;
            }
            out.json("rates.json", &doc)?;
            out.csv("rates.csv", &rows)?;
        }
        Command::Sweep => {
            let mut rows = Vec::new();
            for &n in &cfg.n {
                let plans = plans_for(cfg, &model, n)?;
                rows.extend(rate_rows(&label, n, &plans));
                if cfg.trials > 0 {
                    let stats = simulate(&model, &plans, n, cfg.trials, cfg.seed, cfg.fd_policy)?;
                    check_anomalies(cfg, n, stats.anomaly_rate)?;
                    let row = |metric: String, value: f64, stderr: f64| CsvRow {
                        model: label.clone(),
                        n,
                        round: 0,
                        metric,
                        value,
                        stderr,
                    };
                    rows.push(row("agreement".into(), stats.agreement.value, stats.agreement.stderr));
                    for f in &stats.functions {
                        rows.push(row(format!("block_error_{}", f.name), f.block_error, f.block_error_stderr));
                        rows.push(row(format!("symbol_error_{}", f.name), f.symbol_error, 0.0));
                    }
                }
            }
            out.csv("sweep.csv", &rows)?;
        }
    }
    Ok(())
}

/// Run `command` and write its artifacts under `out_dir`. Returns the files
/// written; on error nothing written by this call is left behind.
pub fn run_experiment(cfg: &ExperimentConfig, command: Command, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.check()?;
    let mut out = Outputs::new(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)));
    let result = pool.and_then(|pool| pool.install(|| execute(cfg, command, &mut out)));
    match result {
        Ok(()) => Ok(out.files),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// Machine-readable error record.
pub fn error_record(err: &Error) -> serde_json::Value {
    json!({"error": {"kind": err.kind(), "message": err.to_string(), "exit_code": err.exit_code()}})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = toml::to_string(&ExperimentConfig::default()).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::default());
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn schema_lists_every_key() {
        let defaults = serde_json::to_value(ExperimentConfig::default()).unwrap();
        let keys: Vec<&str> = SCHEMA.iter().map(|k| k.0).collect();
        assert_eq!(keys.len(), defaults.as_object().unwrap().len());
        for k in defaults.as_object().unwrap().keys() {
            assert!(keys.contains(&k.as_str()), "{k} missing from schema");
        }
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in ["N = [3]", "nonsense = 1", "model = \"file\"", "N = []", "partition = \"bogus\""] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn failed_runs_leave_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let cfg = ExperimentConfig {
            p: 1.5,
            ..ExperimentConfig::default()
        };
        let err = run_experiment(&cfg, Command::Plan, &out).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
    }

    #[test]
    fn model_file_is_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let model = build_and_chain(&AndModelParams::linear(0.4, 0.5, 2)).unwrap();
        fs::write(dir.path().join("m.json"), serde_json::to_string(&model).unwrap()).unwrap();
        let cfg_path = dir.path().join("c.toml");
        fs::write(&cfg_path, "model = \"file\"\nmodel_file = \"m.json\"\nN = [4]\nprofile = \"exact\"\n").unwrap();
        let cfg = ExperimentConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.build_model().unwrap(), model);
        let files = run_experiment(&cfg, Command::Plan, &dir.path().join("out")).unwrap();
        assert_eq!(files.len(), 3);
    }

    #[test]
    fn anomaly_threshold_maps_to_exit_code_three() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            n: vec![64],
            trials: 20,
            max_anomaly_rate: 0.0,
            ..ExperimentConfig::default()
        };
        let err = run_experiment(&cfg, Command::Simulate, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
