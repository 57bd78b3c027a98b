//! F-function calculus on ℤ: decay functions `F(x) = e^{-h(x)} (1+x)^{-β}`
//! with `h(x) = R x^b`, convolution constants, and F-norms of interactions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::quad;
use crate::tensor;

/// Parameters of `F_β(x) = e^{-R x^b} (1+x)^{-β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSpec {
    pub beta: f64,
    pub r: f64,
    pub b: f64,
}

impl FSpec {
    pub fn new(beta: f64, r: f64, b: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!("R must be finite and >= 0, got {r}")));
        }
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("b must lie in (0, 1], got {b}")));
        }
        Ok(Self { beta, r, b })
    }

    /// Pure power law, `h = 0`.
    pub fn power_law(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, 1.0)
    }

    /// Same `h`, different exponent (e.g. `F_{β-2}`).
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.r, self.b)
    }

    pub fn h(&self, x: f64) -> f64 {
        if self.r == 0.0 || x <= 0.0 {
            0.0
        } else {
            self.r * x.powf(self.b)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (-self.h(x)).exp() * (1.0 + x).powf(-self.beta)
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        -self.h(x) - self.beta * (1.0 + x).ln()
    }

    /// Upper estimate of `Σ_{k ≥ from} F(k)`; `None` when divergent.
    pub fn tail_sum(&self, from: u64) -> Option<f64> {
        if self.beta <= 1.0 && self.r == 0.0 {
            return None;
        }
        let cut = from.max(2000);
        let head: f64 = (from..cut).map(|k| self.eval(k as f64)).sum();
        // F is convex and decreasing: the trapezoid rule overestimates the remainder
        let x = cut as f64;
        let tail = quad::semi_infinite(|y| self.eval(y), x, 64.0, 1e-14).ok()? + 0.5 * self.eval(x);
        Some(head + tail)
    }
}

/// `F_β(x)` at a non-negative integer distance.
pub fn f_eval(spec: &FSpec, x: u64) -> f64 {
    spec.eval(x as f64)
}

/// Result of [`convolution_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionEstimate {
    /// Upper estimate of `sup_{x,y} Σ_z F(|x−z|)F(|z−y|)/F(|x−y|)`.
    pub value: f64,
    pub truncation_radius: u64,
    /// Estimate at half the radius.
    pub half_radius_value: f64,
    /// The estimate moved by less than 1e-6 (relative) over the last doubling.
    pub stabilized: bool,
    /// Distance attaining the maximum over `D ≤ radius`.
    pub witness_distance: u64,
    /// `lim_{D→∞}` of the normalised convolution.
    pub asymptotic_limit: f64,
}

const CONV_ZMAX: usize = 100_000;

/// `Σ_z F(|z|)F(|z−D|) / F(D)` for each `D ≤ radius`, with `|z| ≤ Z_max`
/// summed exactly and the remainder bounded by an integral.
fn normalised_convolutions(spec: &FSpec, radius: usize) -> Result<Vec<f64>> {
    let table: Vec<f64> = (0..=CONV_ZMAX + radius).map(|k| spec.eval(k as f64)).collect();
    let zmax = CONV_ZMAX as i64;
    let mut out = Vec::with_capacity(radius + 1);
    for d in 0..=radius {
        let di = d as i64;
        let mut acc = 0.0;
        for z in -zmax..=zmax {
            acc += table[z.unsigned_abs() as usize] * table[(z - di).unsigned_abs() as usize];
        }
        // |z| > Z_max: each term is at most F(|z| − D)^2
        let from = (CONV_ZMAX - d - 1) as f64;
        let tail = 2.0 * quad::semi_infinite(|x| spec.eval(x).powi(2), from, 64.0, 1e-12)?;
        out.push((acc + tail) / table[d]);
    }
    Ok(out)
}

fn asymptotic_limit(spec: &FSpec) -> Result<f64> {
    let divergent = || Error::DivergentSum { beta: spec.beta, r: spec.r };
    if spec.r == 0.0 || spec.b < 1.0 {
        let s = spec.tail_sum(1).ok_or_else(divergent)?;
        Ok(2.0 * (1.0 + 2.0 * s))
    } else {
        // b = 1: e^{-h} factorises exactly, only one side keeps its exponential
        let pl = FSpec::power_law(spec.beta)?;
        let a = pl.tail_sum(0).ok_or_else(divergent)?;
        let two_r = FSpec::new(spec.beta, 2.0 * spec.r, 1.0)?;
        let e = two_r.tail_sum(1).ok_or_else(divergent)?;
        Ok(2.0 * (a + e))
    }
}

/// Numerical upper estimate of the convolution constant over `|x−y| ≤ radius`.
pub fn convolution_constant(spec: &FSpec, truncation_radius: u64) -> Result<ConvolutionEstimate> {
    if spec.beta <= 1.0 && (spec.r == 0.0 || spec.b == 1.0) {
        return Err(Error::DivergentSum { beta: spec.beta, r: spec.r });
    }
    if truncation_radius < 100 {
        return Err(Error::InvalidParameter(format!(
            "truncation radius must be >= 100, got {truncation_radius}"
        )));
    }
    let radius = truncation_radius as usize;
    let vals = normalised_convolutions(spec, radius)?;
    let limit = asymptotic_limit(spec)?;
    let running_max = |upto: usize| {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (d, &v) in vals.iter().enumerate().take(upto + 1) {
            if v > best.1 {
                best = (d, v);
            }
        }
        best
    };
    let (witness, full) = running_max(radius);
    let (_, half) = running_max(radius / 2);
    let value = full.max(limit);
    let half_value = half.max(limit);
    let stabilized = (value - half_value).abs() <= 1e-6 * value;
    if !stabilized {
        return Err(Error::NotConverged(format!(
            "convolution estimate moved from {half_value} to {value} between radius {} and {radius}",
            radius / 2
        )));
    }
    Ok(ConvolutionEstimate {
        value,
        truncation_radius,
        half_radius_value: half_value,
        stabilized,
        witness_distance: witness as u64,
        asymptotic_limit: limit,
    })
}

/// Radius used by [`convolution_constant_cached`].
pub const DEFAULT_CONV_RADIUS: u64 = 200;

/// [`convolution_constant`] at [`DEFAULT_CONV_RADIUS`], memoised per spec.
pub fn convolution_constant_cached(spec: &FSpec) -> Result<ConvolutionEstimate> {
    static CACHE: OnceLock<Mutex<BTreeMap<[u64; 3], ConvolutionEstimate>>> = OnceLock::new();
    let key = [spec.beta.to_bits(), spec.r.to_bits(), spec.b.to_bits()];
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(v) = cache.lock().ok().and_then(|m| m.get(&key).cloned()) {
        return Ok(v);
    }
    let est = convolution_constant(spec, DEFAULT_CONV_RADIUS)?;
    if let Ok(mut m) = cache.lock() {
        m.insert(key, est.clone());
    }
    Ok(est)
}

/// Time (or path-parameter) dependence of one component of a term.
#[derive(Clone)]
pub enum Schedule {
    Constant,
    /// `Σ_k c_k s^k`.
    Polynomial(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant => write!(f, "Constant"),
            Schedule::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Schedule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Schedule {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Schedule::Constant => 1.0,
            Schedule::Polynomial(cs) => cs.iter().rev().fold(0.0, |acc, &k| acc * s + k),
            Schedule::Custom(f) => f(s),
        }
    }

    /// Closed-form derivative where available.
    pub fn derivative(&self, s: f64) -> Option<f64> {
        match self {
            Schedule::Constant => Some(0.0),
            Schedule::Polynomial(cs) => Some(
                cs.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &ck)| acc * s + k as f64 * ck),
            ),
            Schedule::Custom(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Schedule::Constant => true,
            Schedule::Polynomial(cs) => cs.iter().skip(1).all(|&x| x == 0.0),
            Schedule::Custom(_) => false,
        }
    }
}

/// `schedule(s) · matrix`.
#[derive(Debug, Clone)]
pub struct Component {
    pub schedule: Schedule,
    pub matrix: CMat,
}

impl Component {
    pub fn constant(matrix: CMat) -> Self {
        Self { schedule: Schedule::Constant, matrix }
    }
}

/// Operator-valued function `s ↦ Φ(X, s)` for one support `X`.
#[derive(Debug, Clone)]
pub struct Term {
    pub support: Vec<i64>,
    pub components: Vec<Component>,
}

const FD_STEP: f64 = 1e-5;

impl Term {
    pub fn at(&self, s: f64) -> CMat {
        let n = self.components[0].matrix.nrows();
        let mut out = linalg::zeros(n);
        for comp in &self.components {
            out += linalg::scale(&comp.matrix, c(comp.schedule.value(s), 0.0));
        }
        out
    }

    /// `∂_s Φ(X, s)`; central differences at steps 1e-5 and 2e-5 for custom
    /// schedules, which must agree to 1e-4 relative.
    pub fn derivative_at(&self, s: f64) -> Result<CMat> {
        let n = self.components[0].matrix.nrows();
        let mut out = linalg::zeros(n);
        for comp in &self.components {
            let dv = match comp.schedule.derivative(s) {
                Some(v) => v,
                None => {
                    let f = |h: f64| (comp.schedule.value(s + h) - comp.schedule.value(s - h)) / (2.0 * h);
                    let (d1, d2) = (f(FD_STEP), f(2.0 * FD_STEP));
                    let gap = (d1 - d2).abs() / d1.abs().max(d2.abs()).max(1e-8);
                    if gap > 1e-4 || !d1.is_finite() {
                        return Err(Error::NonSmooth { support: self.support.clone(), gap });
                    }
                    d1
                }
            };
            out += linalg::scale(&comp.matrix, c(dv, 0.0));
        }
        Ok(out)
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().all(|c| c.schedule.is_constant())
    }

    pub fn diam(&self) -> u64 {
        (self.support[self.support.len() - 1] - self.support[0]) as u64
    }

    pub fn min_site(&self) -> i64 {
        self.support[0]
    }

    pub fn max_site(&self) -> i64 {
        self.support[self.support.len() - 1]
    }
}

/// Uniform grid of `n` points on `[0, 1]` (`[0]` when `n == 1`).
pub fn unit_grid(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// Finite interaction: support (sorted site list) ↦ term.
#[derive(Debug, Clone)]
pub struct Interaction {
    onsite_dim: usize,
    terms: BTreeMap<Vec<i64>, Term>,
}

/// Which half-chains [`Interaction::restrict`] keeps; the cut is the bond (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restriction {
    Left,
    Right,
    Decoupled,
}

impl Interaction {
    pub fn new(onsite_dim: usize) -> Result<Self> {
        if onsite_dim < 2 {
            return Err(Error::InvalidParameter(format!("onsite dimension must be >= 2, got {onsite_dim}")));
        }
        Ok(Self { onsite_dim, terms: BTreeMap::new() })
    }

    pub fn onsite_dim(&self) -> usize {
        self.onsite_dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }

    pub fn term(&self, support: &[i64]) -> Option<&Term> {
        self.terms.get(support)
    }

    /// Adds a component to the term on `support`, validating Hermiticity and
    /// that every listed site carries a nontrivial tensor factor.
    pub fn insert(&mut self, support: &[i64], component: Component) -> Result<()> {
        let mut sup = support.to_vec();
        sup.sort_unstable();
        sup.dedup();
        if sup.is_empty() || sup.len() != support.len() {
            return Err(Error::InvalidParameter(format!("support {support:?} must be a non-empty set of distinct sites")));
        }
        let dim = self.onsite_dim.pow(sup.len() as u32);
        let m = &component.matrix;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::OnsiteDimMismatch { expected: dim, got: m.nrows() });
        }
        let scale = linalg::max_abs(m).max(1.0);
        let herm = linalg::hermiticity_defect(m);
        if herm > 1e-12 * scale {
            return Err(Error::NotHermitian(herm));
        }
        // only the first component of a term fixes its support
        if !self.terms.contains_key(&sup) {
            let order = support_order(support, &sup);
            for (p, &site) in sup.iter().enumerate() {
                let pos = order[p];
                if tensor::acts_trivially_on(m, self.onsite_dim, sup.len(), pos, 1e-12 * scale) {
                    return Err(Error::SupportMismatch { support: sup.clone(), site });
                }
            }
        }
        let matrix = reorder_to_sorted(m, self.onsite_dim, support, &sup);
        let comp = Component { schedule: component.schedule, matrix };
        self.terms
            .entry(sup.clone())
            .or_insert_with(|| Term { support: sup, components: Vec::new() })
            .components
            .push(comp);
        Ok(())
    }

    /// Convenience for a time-independent term.
    pub fn add(&mut self, support: &[i64], matrix: CMat) -> Result<()> {
        self.insert(support, Component::constant(matrix))
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.values().all(Term::is_constant)
    }

    /// Sites touched by some term, as `(min, max)`.
    pub fn extent(&self) -> Option<(i64, i64)> {
        let lo = self.terms.values().map(Term::min_site).min()?;
        let hi = self.terms.values().map(Term::max_site).max()?;
        Some((lo, hi))
    }

    pub fn restrict(&self, mode: Restriction) -> Interaction {
        let keep = |t: &Term| match mode {
            Restriction::Left => t.max_site() <= 0,
            Restriction::Right => t.min_site() >= 1,
            Restriction::Decoupled => t.max_site() <= 0 || t.min_site() >= 1,
        };
        self.filter(keep)
    }

    /// Terms with support inside `[a, b]`.
    pub fn within(&self, a: i64, b: i64) -> Interaction {
        self.filter(|t| t.min_site() >= a && t.max_site() <= b)
    }

    pub fn filter(&self, keep: impl Fn(&Term) -> bool) -> Interaction {
        Interaction {
            onsite_dim: self.onsite_dim,
            terms: self.terms.iter().filter(|(_, t)| keep(t)).map(|(k, t)| (k.clone(), t.clone())).collect(),
        }
    }

    /// `(1−s) self + s other`.
    pub fn interpolate(&self, other: &Interaction) -> Result<Interaction> {
        if self.onsite_dim != other.onsite_dim {
            return Err(Error::OnsiteDimMismatch { expected: self.onsite_dim, got: other.onsite_dim });
        }
        let mut out = Interaction::new(self.onsite_dim)?;
        let weight = |w: Vec<f64>, sched: &Schedule| -> Schedule {
            match sched {
                Schedule::Constant => Schedule::Polynomial(w),
                Schedule::Polynomial(cs) => Schedule::Polynomial(poly_mul(&w, cs)),
                Schedule::Custom(f) => {
                    let f = f.clone();
                    Schedule::Custom(Arc::new(move |s| (w[0] + w[1] * s) * f(s)))
                }
            }
        };
        for (w, src) in [(vec![1.0, -1.0], self), (vec![0.0, 1.0], other)] {
            for t in src.terms() {
                for comp in &t.components {
                    let entry = out
                        .terms
                        .entry(t.support.clone())
                        .or_insert_with(|| Term { support: t.support.clone(), components: Vec::new() });
                    entry.components.push(Component { schedule: weight(w.clone(), &comp.schedule), matrix: comp.matrix.clone() });
                }
            }
        }
        Ok(out)
    }

    /// Freezes the path at parameter `s`.
    pub fn at(&self, s: f64) -> Interaction {
        Interaction {
            onsite_dim: self.onsite_dim,
            terms: self
                .terms
                .iter()
                .map(|(k, t)| (k.clone(), Term { support: k.clone(), components: vec![Component::constant(t.at(s))] }))
                .collect(),
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `order[p]` = position in `given` of the p-th smallest site.
fn support_order(given: &[i64], sorted: &[i64]) -> Vec<usize> {
    sorted.iter().map(|s| given.iter().position(|g| g == s).unwrap_or(0)).collect()
}

fn reorder_to_sorted(m: &CMat, d: usize, given: &[i64], sorted: &[i64]) -> CMat {
    if given == sorted {
        return m.clone();
    }
    // factor k of `m` sits on site given[k]; place it at its sorted position
    let positions: Vec<usize> = given.iter().map(|g| sorted.iter().position(|s| s == g).unwrap_or(0)).collect();
    tensor::embed_positions(m, d, given.len(), &positions)
}

/// Translation-invariant generator: each cell is instantiated at every shift
/// that fits inside a volume.
#[derive(Debug, Clone)]
pub struct InteractionTemplate {
    pub onsite_dim: usize,
    pub cells: Vec<(Vec<i64>, Vec<Component>)>,
}

impl InteractionTemplate {
    pub fn new(onsite_dim: usize) -> Self {
        Self { onsite_dim, cells: Vec::new() }
    }

    pub fn push(&mut self, offsets: Vec<i64>, components: Vec<Component>) {
        self.cells.push((offsets, components));
    }

    pub fn instantiate(&self, a: i64, b: i64) -> Result<Interaction> {
        let mut out = Interaction::new(self.onsite_dim)?;
        for (offsets, comps) in &self.cells {
            let lo = *offsets.iter().min().ok_or_else(|| Error::InvalidParameter("empty template cell".into()))?;
            let hi = *offsets.iter().max().unwrap_or(&lo);
            for x in (a - lo)..=(b - hi) {
                let sup: Vec<i64> = offsets.iter().map(|o| o + x).collect();
                for comp in comps {
                    out.insert(&sup, comp.clone())?;
                }
            }
        }
        Ok(out)
    }
}

/// Result of [`f_norm`].
#[derive(Debug, Clone, PartialEq)]
pub struct FNormReport {
    pub value: f64,
    pub witness_pair: Option<(i64, i64)>,
    /// Largest term diameter present.
    pub truncation_radius: u64,
}

fn weighted_pair_sup(phi: &Interaction, spec: &FSpec, weight: impl Fn(&Term) -> Result<f64>) -> Result<FNormReport> {
    let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    let mut radius = 0;
    for t in phi.terms() {
        let w = weight(t)?;
        radius = radius.max(t.diam());
        for (i, &x) in t.support.iter().enumerate() {
            for &y in &t.support[i..] {
                *acc.entry((x, y)).or_insert(0.0) += w;
            }
        }
    }
    let mut best = FNormReport { value: 0.0, witness_pair: None, truncation_radius: radius };
    for (&(x, y), &s) in &acc {
        let v = s / f_eval(spec, (y - x) as u64);
        if best.witness_pair.is_none() || v > best.value {
            best.value = v;
            best.witness_pair = Some((x, y));
        }
    }
    Ok(best)
}

fn sup_over_grid(t: &Term, grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if t.is_constant() {
        return f(0.0);
    }
    let mut best: f64 = 0.0;
    for &s in grid {
        best = best.max(f(s)?);
    }
    Ok(best)
}

fn refined(t_samples: usize) -> Vec<f64> {
    // the doubled grid contains the original one, so refinement only raises the sup
    unit_grid(2 * t_samples.max(1) - 1)
}

/// `sup_{x,y} Σ_{Z ∋ x,y} sup_t ‖Φ(Z,t)‖ / F(|x−y|)`, `t` on a uniform grid.
pub fn f_norm(phi: &Interaction, spec: &FSpec, t_samples: usize) -> Result<FNormReport> {
    if t_samples == 0 {
        return Err(Error::InvalidParameter("t_samples must be >= 1".into()));
    }
    let grid = refined(t_samples);
    weighted_pair_sup(phi, spec, |t| sup_over_grid(t, &grid, |s| Ok(linalg::op_norm(&t.at(s)))))
}

/// `sup_{x,y} Σ_{Z ∋ x,y} sup_s (‖Φ(Z,s)‖ + |Z| ‖Φ'(Z,s)‖) / F(|x−y|)`.
pub fn derivative_f_norm(phi: &Interaction, spec: &FSpec, s_samples: usize) -> Result<f64> {
    if s_samples == 0 {
        return Err(Error::InvalidParameter("s_samples must be >= 1".into()));
    }
    let grid = refined(s_samples);
    let rep = weighted_pair_sup(phi, spec, |t| {
        let n = t.support.len() as f64;
        sup_over_grid(t, &grid, |s| Ok(linalg::op_norm(&t.at(s)) + n * linalg::op_norm(&t.derivative_at(s)?)))
    })?;
    Ok(rep.value)
}

/// `F(k)` for `k = 0..=n`.
pub fn f_table(spec: &FSpec, n: usize) -> Vec<f64> {
    (0..=n).map(|k| spec.eval(k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, kron, pauli_x, pauli_z};
    use proptest::prelude::*;

    fn zz() -> CMat {
        kron(&pauli_z(), &pauli_z())
    }

    #[test]
    fn f_eval_examples() {
        let p4 = FSpec::power_law(4.0).unwrap();
        assert_eq!(f_eval(&p4, 0), 1.0);
        assert!((f_eval(&p4, 1) - 0.0625).abs() < 1e-16);
        let e = FSpec::new(0.0, 1.0, 1.0).unwrap();
        assert!((f_eval(&e, 2) - (-2f64).exp()).abs() < 1e-16);
        assert!(FSpec::new(1.0, 0.0, 0.0).is_err());
        assert!(FSpec::new(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn ising_chain_norm_is_sixteen_j() {
        let j = -0.7;
        let mut phi = Interaction::new(2).unwrap();
        for x in 0..10 {
            phi.add(&[x, x + 1], linalg::scale(&zz(), c(j, 0.0))).unwrap();
        }
        let rep = f_norm(&phi, &FSpec::power_law(4.0).unwrap(), 33).unwrap();
        assert!((rep.value - 16.0 * j.abs()).abs() < 1e-12);
        let (x, y) = rep.witness_pair.unwrap();
        assert_eq!(y - x, 1);
        assert_eq!(rep.truncation_radius, 1);
    }

    #[test]
    fn single_site_norm_and_empty() {
        let mut phi = Interaction::new(2).unwrap();
        let spec = FSpec::power_law(4.0).unwrap();
        let empty = f_norm(&phi, &spec, 1).unwrap();
        assert_eq!(empty.value, 0.0);
        assert!(empty.witness_pair.is_none());
        phi.add(&[0], pauli_z()).unwrap();
        assert!((f_norm(&phi, &spec, 1).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_norm_of_linear_field() {
        let mut phi = Interaction::new(2).unwrap();
        phi.insert(&[0], Component { schedule: Schedule::Polynomial(vec![0.0, 1.0]), matrix: pauli_z() }).unwrap();
        let spec = FSpec::power_law(4.0).unwrap();
        assert!((derivative_f_norm(&phi, &spec, 33).unwrap() - 2.0).abs() < 1e-12);

        let mut custom = Interaction::new(2).unwrap();
        custom.insert(&[0], Component { schedule: Schedule::Custom(Arc::new(|s| s)), matrix: pauli_z() }).unwrap();
        assert!((derivative_f_norm(&custom, &spec, 33).unwrap() - 2.0).abs() < 1e-8);

        let mut rough = Interaction::new(2).unwrap();
        rough
            .insert(&[0], Component { schedule: Schedule::Custom(Arc::new(|s: f64| (s - 0.5).abs())), matrix: pauli_z() })
            .unwrap();
        assert!(matches!(derivative_f_norm(&rough, &spec, 3), Err(Error::NonSmooth { .. })));
    }

    #[test]
    fn derivative_norm_of_constant_family_equals_f_norm() {
        let mut phi = Interaction::new(2).unwrap();
        for x in -3..3 {
            phi.add(&[x, x + 1], zz()).unwrap();
            phi.add(&[x], linalg::scale(&pauli_x(), c(0.3, 0.0))).unwrap();
        }
        let spec = FSpec::power_law(3.0).unwrap();
        let a = f_norm(&phi, &spec, 5).unwrap().value;
        let b = derivative_f_norm(&phi, &spec, 5).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn interpolated_family_matches_enumeration() {
        let mut p0 = Interaction::new(2).unwrap();
        let mut p1 = Interaction::new(2).unwrap();
        for x in 0..4 {
            p0.add(&[x, x + 1], zz()).unwrap();
            p1.add(&[x], linalg::scale(&pauli_x(), c(2.0, 0.0))).unwrap();
        }
        let fam = p0.interpolate(&p1).unwrap();
        let spec = FSpec::power_law(4.0).unwrap();
        let v = derivative_f_norm(&fam, &spec, 33).unwrap();
        // bond: sup (1-s) + 2·1 = 3 at s=0, weight 16 at distance one
        // site x carries 2s + 1·2 plus the bonds' diagonal contributions
        let mut oracle: f64 = 0.0;
        for k in 0..65 {
            let s = k as f64 / 64.0;
            let bond = (1.0 - s) + 2.0;
            let site = 2.0 * s + 2.0;
            oracle = oracle.max(bond * 16.0);
            oracle = oracle.max(site);
        }
        // diagonal (x,x) on interior sites: two bonds plus the field term, each sup'd separately
        oracle = oracle.max(3.0 + 3.0 + 4.0);
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn rejects_bad_terms() {
        let mut phi = Interaction::new(2).unwrap();
        let nonherm = crate::linalg::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(phi.add(&[0], nonherm), Err(Error::NotHermitian(_))));
        let trivial = kron(&pauli_z(), &identity(2));
        assert!(matches!(phi.add(&[0, 1], trivial), Err(Error::SupportMismatch { site: 1, .. })));
        assert!(matches!(phi.add(&[0, 1], pauli_z()), Err(Error::OnsiteDimMismatch { .. })));
        assert!(Interaction::new(1).is_err());
    }

    #[test]
    fn unsorted_support_is_reordered() {
        let mut phi = Interaction::new(2).unwrap();
        phi.add(&[3, 1], kron(&pauli_x(), &pauli_z())).unwrap();
        let t = phi.term(&[1, 3]).unwrap();
        assert!(linalg::max_abs_diff(&t.at(0.0), &kron(&pauli_z(), &pauli_x())) < 1e-15);
    }

    #[test]
    fn restriction_cases() {
        let mut phi = Interaction::new(2).unwrap();
        for x in -2..2 {
            phi.add(&[x, x + 1], zz()).unwrap();
        }
        phi.add(&[-1, 0, 1], kron(&pauli_z(), &zz())).unwrap();
        let dec = phi.restrict(Restriction::Decoupled);
        assert_eq!(dec.len(), phi.len() - 2);
        assert!(dec.term(&[0, 1]).is_none());
        assert!(dec.term(&[-1, 0, 1]).is_none());
        let left = phi.restrict(Restriction::Left);
        let right = phi.restrict(Restriction::Right);
        assert!(left.term(&[-1, 0, 1]).is_none() && right.term(&[-1, 0, 1]).is_none());
        assert_eq!(left.len() + right.len(), dec.len());
        assert_eq!(dec.restrict(Restriction::Decoupled).len(), dec.len());

        let mut nocross = Interaction::new(2).unwrap();
        nocross.add(&[-3, -2], zz()).unwrap();
        nocross.add(&[4], pauli_z()).unwrap();
        assert_eq!(nocross.restrict(Restriction::Decoupled).len(), 2);
    }

    #[test]
    fn template_instantiation() {
        let mut tpl = InteractionTemplate::new(2);
        tpl.push(vec![0, 1], vec![Component::constant(zz())]);
        tpl.push(vec![0], vec![Component::constant(pauli_x())]);
        let phi = tpl.instantiate(-2, 2).unwrap();
        assert_eq!(phi.len(), 4 + 5);
        assert_eq!(phi.extent(), Some((-2, 2)));
    }

    #[test]
    fn convolution_constant_values() {
        // frozen from an independent float sum over |z| ≤ 1e5
        let c4 = convolution_constant(&FSpec::power_law(4.0).unwrap(), 100).unwrap();
        assert!(c4.stabilized && c4.value >= 1.0);
        assert_eq!(c4.witness_distance, 4);
        assert!((c4.value - 2.468_802_221_569).abs() < 1e-9, "{}", c4.value);
        // direct oracle at the witness distance
        let f = |k: i64| (1.0 + k.abs() as f64).powi(-4);
        let direct: f64 = (-100_000i64..=100_000).map(|z| f(z) * f(z - 4)).sum::<f64>() / f(4);
        assert!((direct - c4.value).abs() < 1e-10);

        let stretched = convolution_constant(&FSpec::new(4.0, 1.0, 0.5).unwrap(), 100).unwrap();
        assert!(stretched.value <= c4.value);

        let c2 = convolution_constant(&FSpec::power_law(2.0).unwrap(), 100).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((c2.value - 2.0 * (2.0 * zeta2 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn convolution_constant_errors() {
        assert!(matches!(
            convolution_constant(&FSpec::power_law(1.0).unwrap(), 100),
            Err(Error::DivergentSum { .. })
        ));
        assert!(matches!(
            convolution_constant(&FSpec::power_law(4.0).unwrap(), 50),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn convolution_inequality_holds_up_to_200() {
        let spec = FSpec::power_law(3.0).unwrap();
        let est = convolution_constant(&spec, 200).unwrap();
        let table = f_table(&spec, 20_500);
        for d in 0..=200i64 {
            let s: f64 = (-10_000i64..=10_000).map(|z| table[z.unsigned_abs() as usize] * table[(z - d).unsigned_abs() as usize]).sum();
            assert!(s <= est.value * table[d as usize], "violation at distance {d}");
        }
    }

    proptest! {
        #[test]
        fn h_is_subadditive(x in 0.0f64..1e6, y in 0.0f64..1e6, r in 0.0f64..3.0, b in 0.05f64..=1.0) {
            let s = FSpec::new(2.0, r, b).unwrap();
            prop_assert!(s.h(x + y) <= s.h(x) + s.h(y) + 1e-12 * (1.0 + s.h(x + y)));
        }

        #[test]
        fn f_is_positive_and_non_increasing(k in 0u64..100_000, beta in 0.0f64..10.0, r in 0.0f64..2.0, b in 0.05f64..=1.0) {
            let s = FSpec::new(beta, r, b).unwrap();
            let (a, bb) = (f_eval(&s, k), f_eval(&s, k + 1));
            prop_assert!(bb <= a);
            prop_assert!(a > 0.0 || s.ln_eval(k as f64).is_finite());
        }

        #[test]
        fn f_norm_dominates_every_term(js in proptest::collection::vec(-2.0f64..2.0, 1..6), hx in -1.0f64..1.0) {
            let spec = FSpec::power_law(2.5).unwrap();
            let mut phi = Interaction::new(2).unwrap();
            for (k, &j) in js.iter().enumerate() {
                if j != 0.0 {
                    phi.add(&[0, k as i64 + 1], linalg::scale(&zz(), c(j, 0.0))).unwrap();
                }
            }
            if hx != 0.0 {
                phi.insert(&[0], Component { schedule: Schedule::Polynomial(vec![0.0, hx]), matrix: pauli_x() }).unwrap();
            }
            let rep = f_norm(&phi, &spec, 9).unwrap();
            for t in phi.terms() {
                for s in unit_grid(9) {
                    prop_assert!(linalg::op_norm(&t.at(s)) <= rep.value * f_eval(&spec, t.diam()) * (1.0 + 1e-12));
                }
            }
        }
    }
}
