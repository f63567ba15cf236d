//! Finite-alphabet probability tables and the information measures built on them.
//!
//! Joint tables are dense and row-major (the last variable varies fastest).
//! Every constructor checks that the masses are nonnegative and sum to one
//! within [`NORMALIZATION_TOL`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Tolerance on total mass for every table built by this module.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Binary entropy in bits, `h2(0) = h2(1) = 0`.
pub fn h2(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

/// `-p log2 p` with the convention `0 log 0 = 0`.
pub(crate) fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Binary convolution `a(1-b) + b(1-a)`.
pub fn bin_conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

fn check_mass(mass: &[f64]) -> Result<()> {
    if let Some(bad) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(usage(format!("probability mass {bad} is negative or not finite")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(usage(format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

/// A distribution on `{0, .., alphabet_size-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    mass: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(mass: Vec<f64>) -> Result<Self> {
        Pmf::new(mass)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.mass
    }
}

impl Pmf {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(usage("empty alphabet"));
        }
        check_mass(&mass)?;
        Ok(Pmf { mass })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(usage(format!("Bernoulli parameter {p} outside [0,1]")));
        }
        Pmf::new(vec![1.0 - p, p])
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(usage("empty alphabet"));
        }
        Pmf::new(vec![1.0 / size as f64; size])
    }

    pub fn alphabet_size(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn entropy_bits(&self) -> f64 {
        self.mass.iter().copied().map(plogp).sum()
    }

    /// View as a one-variable joint table.
    pub fn into_joint(self, name: &str) -> JointPmf {
        let size = self.mass.len();
        JointPmf {
            variables: vec![Variable::new(name, size)],
            mass: self.mass,
        }
    }
}

/// A named finite random variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: &str, size: usize) -> Self {
        Variable {
            name: name.to_string(),
            size,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJointPmf {
    variables: Vec<Variable>,
    mass: Vec<f64>,
}

impl TryFrom<RawJointPmf> for JointPmf {
    type Error = Error;

    fn try_from(raw: RawJointPmf) -> Result<Self> {
        JointPmf::new(raw.variables, raw.mass)
    }
}

/// Dense joint distribution over an ordered list of named variables.
///
/// Serialized as `{"variables": [{"name", "size"}...], "mass": [...]}` with
/// `mass` flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJointPmf")]
pub struct JointPmf {
    variables: Vec<Variable>,
    mass: Vec<f64>,
}

impl JointPmf {
    pub fn new(variables: Vec<Variable>, mass: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &variables {
            if v.size == 0 {
                return Err(usage(format!("variable {} has an empty alphabet", v.name)));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(usage(format!("duplicate variable {}", v.name)));
            }
        }
        let len: usize = variables.iter().map(|v| v.size).product();
        if mass.len() != len {
            return Err(usage(format!(
                "mass table has {} entries, alphabet product is {len}",
                mass.len()
            )));
        }
        check_mass(&mass)?;
        Ok(JointPmf { variables, mass })
    }

    /// Tabulate `f` over the product alphabet; the values must form a PMF.
    pub fn from_fn(variables: Vec<Variable>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let sizes: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let mut mass = Vec::with_capacity(sizes.iter().product());
        for_each_assignment(&sizes, |values| mass.push(f(values)));
        JointPmf::new(variables, mass)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.size).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| usage(format!("unknown variable {name}")))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.variables[self.index_of(name)?].size)
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let unique: HashSet<_> = idx.iter().collect();
        if unique.len() != idx.len() {
            return Err(usage(format!("variable list {names:?} repeats a variable")));
        }
        Ok(idx)
    }

    /// Probability of one full assignment (values in variable order).
    pub fn prob(&self, values: &[usize]) -> f64 {
        debug_assert_eq!(values.len(), self.variables.len());
        let mut flat = 0;
        for (v, var) in values.iter().zip(&self.variables) {
            flat = flat * var.size + v;
        }
        self.mass[flat]
    }

    /// Iterate `(values, mass)` over the whole table in storage order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut k = 0;
        for_each_assignment(&self.sizes(), |values| {
            f(values, self.mass[k]);
            k += 1;
        });
    }

    /// Marginal on `names`, with variables in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointPmf> {
        let idx = self.indices(names)?;
        let out_vars: Vec<Variable> = idx.iter().map(|&i| self.variables[i].clone()).collect();
        let mut stride = vec![0usize; self.variables.len()];
        let mut s = 1;
        for &i in idx.iter().rev() {
            stride[i] = s;
            s *= self.variables[i].size;
        }
        let mut out = vec![0.0; s];
        self.for_each(|values, m| {
            let t: usize = values.iter().zip(&stride).map(|(v, st)| v * st).sum();
            out[t] += m;
        });
        Ok(JointPmf {
            variables: out_vars,
            mass: out,
        })
    }

    /// Shannon entropy (bits) of the marginal on `over`.
    pub fn entropy_bits(&self, over: &[&str]) -> Result<f64> {
        if over.is_empty() {
            return Err(usage("entropy over an empty variable subset"));
        }
        Ok(self.marginal(over)?.mass.iter().copied().map(plogp).sum())
    }

    fn entropy_or_zero(&self, over: &[&str]) -> Result<f64> {
        if over.is_empty() {
            Ok(0.0)
        } else {
            self.entropy_bits(over)
        }
    }

    /// `H(of | given)` in bits.
    pub fn conditional_entropy(&self, of: &[&str], given: &[&str]) -> Result<f64> {
        let joint: Vec<&str> = of.iter().chain(given).copied().collect();
        Ok(self.entropy_bits(&joint)? - self.entropy_or_zero(given)?)
    }

    /// `I(a; b | given)` in bits, clamped at zero.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(usage("mutual information needs nonempty a and b"));
        }
        let all: Vec<&str> = a.iter().chain(b).chain(given).copied().collect();
        // rejects overlaps between the three subsets
        self.indices(&all)?;
        let ag: Vec<&str> = a.iter().chain(given).copied().collect();
        let bg: Vec<&str> = b.iter().chain(given).copied().collect();
        let i = self.entropy_bits(&ag)? + self.entropy_bits(&bg)?
            - self.entropy_bits(&all)?
            - self.entropy_or_zero(given)?;
        Ok(i.max(0.0))
    }

    /// Bhattacharyya parameter `Z(T|V) = 2 sum_v sqrt(P(0,v) P(1,v))`.
    pub fn bhattacharyya(&self, t_var: &str, v_vars: &[&str]) -> Result<f64> {
        if self.size_of(t_var)? != 2 {
            return Err(usage(format!("{t_var} is not binary")));
        }
        let mut names = vec![t_var];
        names.extend_from_slice(v_vars);
        let m = self.marginal(&names)?;
        let half = m.mass.len() / 2;
        let z: f64 = (0..half)
            .map(|v| (m.mass[v] * m.mass[half + v]).sqrt())
            .sum::<f64>()
            * 2.0;
        Ok(z.clamp(0.0, 1.0))
    }

    /// Unnormalized L1 distance `sum |p - q|`, in `[0, 2]`.
    pub fn tv_distance(&self, other: &JointPmf) -> Result<f64> {
        if self.variables != other.variables {
            return Err(usage("tv_distance between tables of different shape"));
        }
        Ok(self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(p, q)| (p - q).abs())
            .sum())
    }

    /// Largest `P(b) |P(a,c|b) - P(a|b) P(c|b)|` over all `(a, b, c)`.
    ///
    /// Zero iff `a -> b -> c` is a Markov chain. The lists may share variables.
    pub fn markov_violation(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let mut unique: Vec<&str> = Vec::new();
        for n in a.iter().chain(b).chain(c) {
            if !unique.contains(n) {
                unique.push(n);
            }
        }
        let m = self.marginal(&unique)?;
        let pos = |names: &[&str]| -> Vec<usize> {
            names
                .iter()
                .map(|n| unique.iter().position(|u| u == n).unwrap_or(0))
                .collect()
        };
        let (pa, pb, pc) = (pos(a), pos(b), pos(c));
        let sizes = m.sizes();
        let extent = |p: &[usize]| p.iter().map(|&i| sizes[i]).product::<usize>();
        let (na, nb, nc) = (extent(&pa), extent(&pb), extent(&pc));
        let flat = |p: &[usize], values: &[usize]| p.iter().fold(0, |acc, &i| acc * sizes[i] + values[i]);
        let mut table = vec![0.0; na * nb * nc];
        m.for_each(|values, mass| {
            table[(flat(&pa, values) * nb + flat(&pb, values)) * nc + flat(&pc, values)] += mass;
        });
        let at = |ia: usize, ib: usize, ic: usize| table[(ia * nb + ib) * nc + ic];
        let mut worst: f64 = 0.0;
        for ib in 0..nb {
            let pab: Vec<f64> = (0..na).map(|ia| (0..nc).map(|ic| at(ia, ib, ic)).sum()).collect();
            let pbc: Vec<f64> = (0..nc).map(|ic| (0..na).map(|ia| at(ia, ib, ic)).sum()).collect();
            let p_b: f64 = pab.iter().sum();
            if p_b <= 0.0 {
                continue;
            }
            for (ia, p_ab) in pab.iter().enumerate() {
                for (ic, p_bc) in pbc.iter().enumerate() {
                    worst = worst.max((at(ia, ib, ic) - p_ab * p_bc / p_b).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Visit every assignment of a product alphabet in row-major order.
pub(crate) fn for_each_assignment(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.iter().any(|&s| s == 0) {
        return;
    }
    let mut values = vec![0usize; sizes.len()];
    loop {
        f(&values);
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            values[k] += 1;
            if values[k] < sizes[k] {
                break;
            }
            values[k] = 0;
        }
    }
}
