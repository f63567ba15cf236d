//! Ready-made auxiliary chains.
//!
//! * [`build_and_chain`]: the two-terminal AND function, with auxiliary
//!   variables given by nested rectangles under a staircase curve in the unit
//!   square.
//! * [`build_bsc_chain`]: a one-round binary-symmetric test chain with a
//!   nontrivial rate, used for rate-convergence experiments.
//! * [`build_collocated_chain`]: the AND of `m` independent bits computed at a
//!   collocated sink by a running conjunction.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::model::{AuxChainModel, FunctionRole, MARKOV_TOL};
use crate::pmf::{bin_conv, h2, JointPmf, Variable};

/// Piecewise-linear nondecreasing curve `s -> (alpha(s), beta(s))` and a
/// partition `0 = s_0 < ... < s_{t/2} = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// Breakpoints `(s, alpha(s))`.
    pub alpha: Vec<(f64, f64)>,
    /// Breakpoints `(s, beta(s))`.
    pub beta: Vec<(f64, f64)>,
    pub partition: Vec<f64>,
}

fn eval_pwl(points: &[(f64, f64)], s: f64) -> f64 {
    for w in points.windows(2) {
        let ((s0, v0), (s1, v1)) = (w[0], w[1]);
        if s <= s1 {
            return v0 + (v1 - v0) * (s - s0) / (s1 - s0);
        }
    }
    points.last().map(|p| p.1).unwrap_or(0.0)
}

fn check_pwl(name: &str, points: &[(f64, f64)], end: f64) -> Result<()> {
    if points.len() < 2 {
        return Err(usage(format!("{name} needs at least two breakpoints")));
    }
    if points[0] != (0.0, 0.0) {
        return Err(usage(format!("{name} must start at (0, 0)")));
    }
    let last = points[points.len() - 1];
    if last.0 != 1.0 || (last.1 - end).abs() > 1e-15 {
        return Err(usage(format!("{name} must end at (1, {end})")));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(usage(format!("{name} breakpoints must be strictly increasing")));
        }
        if w[1].1 < w[0].1 {
            return Err(usage(format!("{name} must be nondecreasing")));
        }
    }
    Ok(())
}

impl CurveSpec {
    /// Straight segment from `(0,0)` to `(1-p, 1-q)` with an even partition into
    /// `t/2` pieces.
    pub fn linear(p: f64, q: f64, t: usize) -> Self {
        let k = (t / 2).max(1);
        CurveSpec {
            alpha: vec![(0.0, 0.0), (1.0, 1.0 - p)],
            beta: vec![(0.0, 0.0), (1.0, 1.0 - q)],
            partition: (0..=k).map(|i| i as f64 / k as f64).collect(),
        }
    }

    pub fn alpha_at(&self, s: f64) -> f64 {
        eval_pwl(&self.alpha, s)
    }

    pub fn beta_at(&self, s: f64) -> f64 {
        eval_pwl(&self.beta, s)
    }

    fn check(&self, p: f64, q: f64, t: usize) -> Result<()> {
        check_pwl("alpha", &self.alpha, 1.0 - p)?;
        check_pwl("beta", &self.beta, 1.0 - q)?;
        if self.partition.len() != t / 2 + 1 {
            return Err(usage(format!("partition needs {} points for t = {t}", t / 2 + 1)));
        }
        if self.partition[0] != 0.0 || *self.partition.last().unwrap_or(&0.0) != 1.0 {
            return Err(usage("partition must run from 0 to 1"));
        }
        if self.partition.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("partition must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AndModelParams {
    pub p: f64,
    pub q: f64,
    pub t: usize,
    pub curve: CurveSpec,
}

impl AndModelParams {
    pub fn linear(p: f64, q: f64, t: usize) -> Self {
        AndModelParams {
            p,
            q,
            t,
            curve: CurveSpec::linear(p, q, t),
        }
    }
}

fn aux_names(t: usize) -> Vec<String> {
    (1..=t).map(|i| format!("U{i}")).collect()
}

/// Two-terminal AND chain: `X ~ Ber(p)`, `Y ~ Ber(q)` independent, both
/// terminals compute `X AND Y`.
pub fn build_and_chain(params: &AndModelParams) -> Result<AuxChainModel> {
    let AndModelParams { p, q, t, ref curve } = *params;
    if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
        return Err(usage("p and q must lie in (0, 1)"));
    }
    if t < 2 || t % 2 != 0 {
        return Err(usage("t must be even and at least 2"));
    }
    curve.check(p, q, t)?;

    let a: Vec<f64> = curve.partition.iter().map(|&s| curve.alpha_at(s)).collect();
    let b: Vec<f64> = curve.partition.iter().map(|&s| curve.beta_at(s)).collect();
    let cuts = |extra: f64, values: &[f64]| {
        let mut c: Vec<f64> = [0.0, 1.0, extra].iter().chain(values).copied().collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    };
    let xs = cuts(1.0 - p, &a);
    let ys = cuts(1.0 - q, &b);

    let names = aux_names(t);
    let mut vars = vec![Variable::new("X", 2), Variable::new("Y", 2)];
    vars.extend(names.iter().map(|n| Variable::new(n, 2)));
    let mut mass = vec![0.0; 1 << (t + 2)];
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let area = (wx[1] - wx[0]) * (wy[1] - wy[0]);
            if area <= 0.0 {
                continue;
            }
            // indicators of closed rectangles: evaluate at the cell midpoint
            let (mx, my) = ((wx[0] + wx[1]) / 2.0, (wy[0] + wy[1]) / 2.0);
            let mut flat = ((mx >= 1.0 - p) as usize) << 1 | (my >= 1.0 - q) as usize;
            for i in 1..=t / 2 {
                let odd = mx >= a[i] && my >= b[i - 1];
                let even = mx >= a[i] && my >= b[i];
                flat = flat << 2 | (odd as usize) << 1 | even as usize;
            }
            mass[flat] += area;
        }
    }
    let joint = JointPmf::new(vars, mass)?;
    let aux: Vec<&str> = names.iter().map(String::as_str).collect();
    let model = AuxChainModel::two_terminal(joint, "X", "Y", &aux)?
        .with_function("f_A", FunctionRole::Terminal(0), |v| (v[0] & v[1]) as u32)?
        .with_function("f_B", FunctionRole::Terminal(1), |v| (v[0] & v[1]) as u32)?;
    model.validate(MARKOV_TOL)?;
    Ok(model)
}

/// `X ~ Ber(1/2)`, `U1 = X xor Ber(alpha_noise)`, `Y = X xor Ber(epsilon)`.
///
/// Not an interactive-computation example: a single round whose rate
/// `I(X;U1|Y) = h2(alpha * epsilon) - h2(alpha)` is strictly between 0 and 1.
pub fn build_bsc_chain(alpha_noise: f64, epsilon: f64) -> Result<AuxChainModel> {
    let ok = |v: f64| v > 0.0 && v <= 0.5;
    if !ok(alpha_noise) || !ok(epsilon) {
        return Err(usage("alpha_noise and epsilon must lie in (0, 1/2]"));
    }
    let flip = |a: usize, b: usize, e: f64| if a == b { 1.0 - e } else { e };
    let joint = JointPmf::from_fn(
        vec![Variable::new("X", 2), Variable::new("Y", 2), Variable::new("U1", 2)],
        |v| 0.5 * flip(v[0], v[1], epsilon) * flip(v[0], v[2], alpha_noise),
    )?;
    let model = AuxChainModel::two_terminal(joint, "X", "Y", &["U1"])?;
    model.validate(MARKOV_TOL)?;
    Ok(model)
}

/// Closed form of the BSC chain's round-1 rate.
pub fn bsc_rate(alpha_noise: f64, epsilon: f64) -> f64 {
    h2(bin_conv(alpha_noise, epsilon)) - h2(alpha_noise)
}

/// `m` independent sources `X^j ~ Ber(p_j)`, `U^1 = X^1`,
/// `U^i = X^i AND U^{i-1}`; the sink computes `AND_j X^j = U^m`.
pub fn build_collocated_chain(source_p: &[f64]) -> Result<AuxChainModel> {
    let m = source_p.len();
    if m < 2 {
        return Err(usage("a collocated chain needs at least two sources"));
    }
    if source_p.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(usage("source probabilities must lie in [0, 1]"));
    }
    let sources: Vec<String> = (1..=m).map(|j| format!("X{j}")).collect();
    let names = aux_names(m);
    let vars: Vec<Variable> = sources
        .iter()
        .chain(&names)
        .map(|n| Variable::new(n, 2))
        .collect();
    let joint = JointPmf::from_fn(vars, |v| {
        let (x, u) = v.split_at(m);
        let mut run = 1usize;
        for j in 0..m {
            run &= x[j];
            if u[j] != run {
                return 0.0;
            }
        }
        x.iter()
            .zip(source_p)
            .map(|(&b, &p)| if b == 1 { p } else { 1.0 - p })
            .product()
    })?;
    let src: Vec<&str> = sources.iter().map(String::as_str).collect();
    let aux: Vec<&str> = names.iter().map(String::as_str).collect();
    let model = AuxChainModel::collocated(joint, &src, &aux)?
        .with_function("f", FunctionRole::Sink, |v| v.iter().fold(1, |a, &b| a & b as u32))?;
    model.validate(MARKOV_TOL)?;
    Ok(model)
}

/// Minimum AND sum-rates: many rounds versus two rounds with A first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRates {
    pub r_sum_infinity: f64,
    pub r_sum_two_round_a: f64,
}

pub fn sum_rates(p: f64, q: f64) -> Result<SumRates> {
    if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
        return Err(usage("p and q must lie in (0, 1)"));
    }
    let two = h2(p) + p * h2(q);
    Ok(SumRates {
        r_sum_infinity: two + p * q.log2() + p * (1.0 - q) * std::f64::consts::LOG2_E,
        r_sum_two_round_a: two,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Conditioning;

    #[test]
    fn t2_and_chain_is_x_then_and() {
        let m = build_and_chain(&AndModelParams::linear(0.3, 0.6, 2)).unwrap();
        m.joint.for_each(|v, mass| {
            if mass > 0.0 {
                assert_eq!(v[2], v[0]);
                assert_eq!(v[3], v[0] & v[1]);
            }
        });
        let pu2 = m.joint.marginal(&["U2"]).unwrap().mass()[1];
        assert!((pu2 - 0.3 * 0.6).abs() < 1e-12);
        assert!(m.validate_markov(1e-15).unwrap().max_violation() < 1e-15);
    }

    #[test]
    fn t4_linear_curve_satisfies_chain_and_function_conditions() {
        let m = build_and_chain(&AndModelParams::linear(0.5, 0.5, 4)).unwrap();
        assert!(m.validate_markov(1e-12).unwrap().passed());
        let h_a = m
            .joint
            .conditional_entropy(&["U4"], &["X", "U1", "U2", "U3"])
            .unwrap();
        assert!(h_a >= 0.0);
        // f_A = X AND Y is a function of (X, U^{1:4})
        let f = m.function(FunctionRole::Terminal(0)).unwrap();
        assert!(f.decoder.values.iter().any(Option::is_some));
    }

    #[test]
    fn invalid_curves_are_rejected() {
        let mut params = AndModelParams::linear(0.5, 0.5, 2);
        params.curve.alpha = vec![(0.0, 0.0), (1.0, 0.4)];
        assert!(build_and_chain(&params).is_err());
        let mut params = AndModelParams::linear(0.5, 0.5, 4);
        params.curve.partition = vec![0.0, 0.5, 0.5];
        assert!(build_and_chain(&params).is_err());
        assert!(build_and_chain(&AndModelParams::linear(0.5, 0.5, 3)).is_err());
    }

    #[test]
    fn bsc_chain_rates() {
        assert!(build_bsc_chain(0.5, 0.2).unwrap().theoretical_rate(0).unwrap() < 1e-12);
        assert!(build_bsc_chain(0.0, 0.2).is_err());
        assert!(build_bsc_chain(0.2, 0.6).is_err());
        let m = build_bsc_chain(0.11, 0.5).unwrap();
        assert!((m.theoretical_rate(0).unwrap() - (1.0 - h2(0.11))).abs() < 1e-12);
    }

    #[test]
    fn collocated_chain_rates() {
        let m = build_collocated_chain(&[0.5, 0.3]).unwrap();
        assert!((m.theoretical_rate(0).unwrap() - h2(0.5)).abs() < 1e-12);
        assert!((m.theoretical_rate(1).unwrap() - 0.5 * h2(0.3)).abs() < 1e-12);
        assert_eq!(m.conditioning_vars(1, Conditioning::Receiver), vec!["U1"]);
        let degenerate = build_collocated_chain(&[1.0, 0.3]).unwrap();
        assert!((degenerate.theoretical_rate(1).unwrap() - h2(0.3)).abs() < 1e-12);
    }

    #[test]
    fn sum_rate_examples() {
        let s = sum_rates(0.5, 0.5).unwrap();
        assert_eq!(s.r_sum_two_round_a, 1.5);
        assert!((s.r_sum_infinity - (1.0 + 0.25 * std::f64::consts::LOG2_E)).abs() < 1e-15);
        assert!(sum_rates(0.0, 0.5).is_err());
        assert!(sum_rates(0.5, 1.0).is_err());
    }
}
