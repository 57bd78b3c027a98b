//! The weight `W_γ` and its tail integral `I_γ`.
//!
//! `w_γ(t) = c_γ ∏_{n≥1} sinc²(a_n t)` with `a_n = a_1 / (n ln² n)` for
//! `n ≥ 2` and `a_1 = γ / (2(1 + S))`, `S = Σ_{n≥2} 1/(n ln² n)`. Its
//! Fourier transform is supported in `[−γ, γ]`, so `W_γ(t) = ∫_t^∞ w_γ`
//! (odd extension) satisfies `−2∫_0^∞ W_γ(t) sin(Et) dt = −1/E` for
//! `|E| ≥ γ`. Everything is tabulated once for `γ = 1`; `W_γ(t) = W_1(γt)`
//! and `I_γ(t) = I_1(γt)/γ`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quad;

/// `Σ_{n≥2} 1/(n ln² n)`.
pub const LOG_SQUARED_SUM: f64 = 2.109_742_801_236_891_7;

/// Threshold of the envelope formula for `I_γ`.
pub const ENVELOPE_THRESHOLD: f64 = 36058.0;

const EXACT_FACTORS: usize = 1 << 15;
const SERIES_SWITCH: f64 = 0.05;
const PANEL: f64 = 1.0 / 16.0;
const TABLE_END: f64 = 512.0;
const GL_ORDER: usize = 8;

struct UnitTable {
    a: Vec<f64>,
    // suffix sums of a_n^2, a_n^4, a_n^6 from index k (including the tail past the array)
    s2: Vec<f64>,
    s4: Vec<f64>,
    s6: Vec<f64>,
    ln_norm: f64,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
    bary: Vec<f64>,
    w_end: Vec<f64>,
    i_end: Vec<f64>,
    // W_1 at the Gauss nodes of every panel, row-major by panel
    w_nodes: Vec<f64>,
    l1: f64,
    l1_t: f64,
}

impl UnitTable {
    fn panels(&self) -> usize {
        self.w_end.len() - 1
    }

    /// `ln` of the unnormalised density at `t ≥ 0`.
    fn ln_density_raw(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut prod = 1.0;
        let mut k = 0;
        while k < self.a.len() {
            let x = self.a[k] * t;
            if x < SERIES_SWITCH {
                break;
            }
            let s = x.sin() / x;
            prod *= s * s;
            if prod < 1e-200 {
                acc += prod.ln();
                prod = 1.0;
            }
            k += 1;
        }
        let t2 = t * t;
        acc + prod.ln() - t2 / 3.0 * self.s2[k] - t2 * t2 / 90.0 * self.s4[k] - 2.0 * t2 * t2 * t2 / 2835.0 * self.s6[k]
    }

    fn ln_density(&self, t: f64) -> f64 {
        self.ln_density_raw(t) + self.ln_norm
    }

    fn density(&self, t: f64) -> f64 {
        self.ln_density(t).exp()
    }

    fn gauss(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.gl_x.iter().zip(&self.gl_w).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }

    /// `W_1(t)` for `t ≥ 0`.
    fn w(&self, t: f64) -> f64 {
        if t >= TABLE_END {
            return self.ln_tail(t, 0).map(f64::exp).unwrap_or(0.0);
        }
        let k = ((t / PANEL) as usize).min(self.panels() - 1);
        let hi = (k + 1) as f64 * PANEL;
        self.w_end[k + 1] + self.gauss(t, hi, |r| self.density(r))
    }

    /// `I_1(t)` for `t ≥ 0`.
    fn i(&self, t: f64) -> f64 {
        if t >= TABLE_END {
            return self.ln_tail(t, 1).map(f64::exp).unwrap_or(0.0);
        }
        let k = ((t / PANEL) as usize).min(self.panels() - 1);
        let hi = (k + 1) as f64 * PANEL;
        // GL8 integrates the degree-7 node interpolant of W exactly
        self.i_end[k + 1] + self.gauss(t, hi, |r| self.w_interp(k, r))
    }
    /// Barycentric interpolant of `W` through the Gauss nodes of panel `k`.
    fn w_interp(&self, k: usize, r: f64) -> f64 {
        let x = 2.0 * (r - k as f64 * PANEL) / PANEL - 1.0;
        let vals = &self.w_nodes[k * GL_ORDER..(k + 1) * GL_ORDER];
        let (mut num, mut den) = (0.0, 0.0);
        for ((xj, bj), wj) in self.gl_x.iter().zip(&self.bary).zip(vals) {
            let d = x - xj;
            if d == 0.0 {
                return *wj;
            }
            let c = bj / d;
            num += c * wj;
            den += c;
        }
        num / den
    }

    fn ln_i(&self, t: f64) -> Result<f64> {
        if t >= TABLE_END {
            self.ln_tail(t, 1)
        } else {
            Ok(self.i(t).ln())
        }
    }

    /// `ln ∫_t^∞ (r − t)^moment w_1(r) dr` on unit panels, accumulated in the
    /// log domain; stops once 32 consecutive panels sit 40 e-folds below the
    /// running total.
    fn ln_tail(&self, t: f64, moment: i32) -> Result<f64> {
        self.ln_tail_with(t, moment, |r| self.ln_density(r))
    }

    fn ln_tail_with(&self, t: f64, moment: i32, ln_f: impl Fn(f64) -> f64) -> Result<f64> {
        let width = 1.0;
        let mut total = f64::NEG_INFINITY;
        let mut quiet = 0;
        for p in 0..2_000_000usize {
            let lo = t + p as f64 * width;
            let half = 0.5 * width;
            let mut panel_max = f64::NEG_INFINITY;
            let mut terms = [0.0; GL_ORDER];
            for (j, (x, w)) in self.gl_x.iter().zip(&self.gl_w).enumerate() {
                let r = lo + half * (1.0 + x);
                let mut v = (w * half).ln() + ln_f(r);
                if moment > 0 {
                    v += moment as f64 * (r - t).ln();
                }
                terms[j] = v;
                panel_max = panel_max.max(v);
            }
            if panel_max > f64::NEG_INFINITY {
                let s: f64 = terms.iter().map(|v| (v - panel_max).exp()).sum();
                total = log_add(total, panel_max + s.ln());
            }
            if panel_max < total - 40.0 {
                quiet += 1;
                if quiet >= 32 {
                    return Ok(total);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::QuadratureFailure(format!("weight tail from {t} did not settle")))
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn factors() -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let a1 = 1.0 / (2.0 * (1.0 + LOG_SQUARED_SUM));
    let a_n = |n: f64| a1 / (n * n.ln().powi(2));
    let mut a = Vec::with_capacity(EXACT_FACTORS);
    a.push(a1);
    for n in 2..=EXACT_FACTORS {
        a.push(a_n(n as f64));
    }
    // tail of Σ a_n^{2k} past the array, summed directly then bounded by an integral
    let far = 1usize << 22;
    let (mut t2, mut t4, mut t6) = (0.0, 0.0, 0.0);
    for n in ((EXACT_FACTORS + 1)..=far).rev() {
        let x = a_n(n as f64);
        let x2 = x * x;
        t2 += x2;
        t4 += x2 * x2;
        t6 += x2 * x2 * x2;
    }
    let m = far as f64;
    t2 += a1 * a1 / (m * m.ln().powi(4));
    let mut s2 = vec![0.0; a.len() + 1];
    let mut s4 = vec![0.0; a.len() + 1];
    let mut s6 = vec![0.0; a.len() + 1];
    s2[a.len()] = t2;
    s4[a.len()] = t4;
    s6[a.len()] = t6;
    for k in (0..a.len()).rev() {
        let x2 = a[k] * a[k];
        s2[k] = s2[k + 1] + x2;
        s4[k] = s4[k + 1] + x2 * x2;
        s6[k] = s6[k + 1] + x2 * x2 * x2;
    }
    (a, s2, s4, s6)
}

fn build_table() -> Result<UnitTable> {
    let (a, s2, s4, s6) = factors();
    let (gl_x, gl_w) = quad::gauss_legendre(GL_ORDER);
    let bary = (0..GL_ORDER)
        .map(|j| 1.0 / (0..GL_ORDER).filter(|&m| m != j).map(|m| gl_x[j] - gl_x[m]).product::<f64>())
        .collect();
    let panels = (TABLE_END / PANEL).round() as usize;
    let mut tab = UnitTable {
        a,
        s2,
        s4,
        s6,
        ln_norm: 0.0,
        gl_x,
        gl_w,
        bary,
        w_end: vec![0.0; panels + 1],
        i_end: vec![0.0; panels + 1],
        w_nodes: vec![0.0; panels * GL_ORDER],
        l1: 0.0,
        l1_t: 0.0,
    };

    // normalisation: ∫_0^∞ w = 1/2
    let mut half_mass = tab.ln_tail_with(TABLE_END, 0, |r| tab.ln_density_raw(r))?.exp();
    for k in (0..panels).rev() {
        let lo = k as f64 * PANEL;
        half_mass += tab.gauss(lo, lo + PANEL, |r| tab.ln_density_raw(r).exp());
    }
    tab.ln_norm = -(2.0 * half_mass).ln();

    tab.w_end[panels] = tab.ln_tail(TABLE_END, 0)?.exp();
    tab.i_end[panels] = tab.ln_tail(TABLE_END, 1)?.exp();
    let nodes: Vec<f64> = tab.gl_x.clone();
    for k in (0..panels).rev() {
        let lo = k as f64 * PANEL;
        let hi = lo + PANEL;
        let w_hi = tab.w_end[k + 1];
        let mut w_here = [0.0; GL_ORDER];
        for (j, x) in nodes.iter().enumerate() {
            let r = lo + 0.5 * PANEL * (1.0 + x);
            w_here[j] = w_hi + tab.gauss(r, hi, |u| tab.density(u));
        }
        tab.w_end[k] = w_hi + tab.gauss(lo, hi, |u| tab.density(u));
        let panel_i: f64 = tab.gl_w.iter().zip(&w_here).map(|(g, w)| g * w).sum::<f64>() * 0.5 * PANEL;
        tab.i_end[k] = tab.i_end[k + 1] + panel_i;
        tab.w_nodes[k * GL_ORDER..(k + 1) * GL_ORDER].copy_from_slice(&w_here);
    }

    let rtol = 1e-10;
    let (l1, _) = quad::adaptive(|t| tab.w(t), 0.0, TABLE_END, rtol, 0.0)?;
    let (l1_t, _) = quad::adaptive(|t| t * tab.w(t), 0.0, TABLE_END, rtol, 0.0)?;
    // ∫_T^∞ t W(t) dt = T I(T) + ∫_T^∞ (r − T)² w(r) dr / 2
    let tail_t = TABLE_END * tab.i_end[panels] + 0.5 * tab.ln_tail(TABLE_END, 2)?.exp();
    tab.l1 = 2.0 * (l1 + tab.i_end[panels]);
    tab.l1_t = 2.0 * (l1_t + tail_t);
    Ok(tab)
}

static UNIT: OnceLock<std::result::Result<Arc<UnitTable>, String>> = OnceLock::new();

fn unit() -> Result<Arc<UnitTable>> {
    UNIT.get_or_init(|| build_table().map(Arc::new).map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::QuadratureFailure)
}

/// `W_γ` with its three norms. Cheap to clone.
#[derive(Clone)]
pub struct WeightFunction {
    pub gamma: f64,
    /// `‖W_γ‖_{L¹}`.
    pub l1_norm: f64,
    /// `‖W_γ‖_{L∞} = W_γ(0⁺) = 1/2`.
    pub linf_norm: f64,
    /// `‖t W_γ(t)‖_{L¹}`.
    pub l1_t_norm: f64,
    table: Arc<UnitTable>,
}

impl std::fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightFunction")
            .field("gamma", &self.gamma)
            .field("l1_norm", &self.l1_norm)
            .field("linf_norm", &self.linf_norm)
            .field("l1_t_norm", &self.l1_t_norm)
            .finish()
    }
}

pub fn weight_function(gamma: f64) -> Result<WeightFunction> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let table = unit()?;
    Ok(WeightFunction {
        gamma,
        l1_norm: table.l1 / gamma,
        linf_norm: 0.5,
        l1_t_norm: table.l1_t / (gamma * gamma),
        table,
    })
}

impl WeightFunction {
    /// `W_γ(t)`, odd in `t`.
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let v = self.table.w(self.gamma * t.abs());
        if t < 0.0 {
            -v
        } else {
            v
        }
    }

    /// The density `−W_γ'(t) = γ w_1(γt)`, even in `t`.
    pub fn density(&self, t: f64) -> f64 {
        self.gamma * self.table.density(self.gamma * t)
    }

    /// `I_γ(t) = ∫_t^∞ W_γ`, `t ≥ 0`.
    pub fn i_gamma(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!("I_gamma needs t >= 0, got {t}")));
        }
        Ok(self.table.i(self.gamma * t) / self.gamma)
    }

    /// `ln I_γ(t)`; stays finite far past the range of `f64`.
    pub fn ln_i_gamma(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!("I_gamma needs t >= 0, got {t}")));
        }
        Ok(self.table.ln_i(self.gamma * t)? - self.gamma.ln())
    }

    /// `2∫_0^T W_γ(t) sin(ωt) dt` by the cached Gauss nodes.
    pub fn sine_integral(&self, omega: f64, t_trunc: f64) -> f64 {
        let nodes = NodeSet::new(self, t_trunc);
        nodes.sine(omega / self.gamma) / self.gamma
    }

    /// `Ŵ_γ(E) = −2∫_0^∞ W_γ(t) sin(Et) dt`; equals `−1/E` for `|E| ≥ γ`.
    pub fn transform(&self, e: f64) -> f64 {
        -self.sine_integral(e, TABLE_END / self.gamma)
    }

    /// Smallest `T` (to bisection precision) with `I_γ(T) ≤ tol`.
    pub fn truncation_for(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("truncation tolerance must be positive".into()));
        }
        if self.i_gamma(0.0)? <= tol {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = TABLE_END / self.gamma;
        if self.i_gamma(hi)? > tol {
            return Err(Error::QuadratureFailure(format!("I_gamma stays above {tol} on the tabulated range")));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.i_gamma(mid)? > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Upper bound on `∫_t^∞ I_γ(u) u^p du` for `p ≥ 0`, via
    /// `∫_t^∞ I_γ(u) u^p du ≤ ∫_t^∞ w_γ(r) (r − t)² r^p / 2 dr` (equality at `p = 0`).
    pub fn i_gamma_moment_tail(&self, t: f64, p: f64) -> Result<f64> {
        if t < 0.0 || p < 0.0 {
            return Err(Error::InvalidParameter(format!("moment tail needs t, p >= 0, got {t}, {p}")));
        }
        let g = self.gamma;
        let tab = &self.table;
        let ln = tab.ln_tail_with(g * t, 2, |r| tab.ln_density(r) + p * r.ln())?;
        Ok((ln - std::f64::consts::LN_2).exp() / g.powf(2.0 + p))
    }

    /// Default cutoff: `I_γ(T) ≤ 1e-8 / ‖∂_s H‖`.
    pub fn default_truncation(&self, dh_norm: f64) -> Result<f64> {
        if dh_norm == 0.0 {
            return Ok(0.0);
        }
        self.truncation_for(1e-8 / dh_norm)
    }

    pub(crate) fn nodes(&self, t_trunc: f64) -> NodeSet {
        NodeSet::new(self, t_trunc)
    }
}

/// `ln` of `130 e² γ⁹ t¹⁰ exp(−(2/7) γt / ln²(γt))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IGammaEnvelope {
    pub ln_value: f64,
    /// False for `t ≤ 36058`, where the formula carries no guarantee.
    pub applicable: bool,
}

impl IGammaEnvelope {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

pub fn i_gamma_envelope(gamma: f64, t: f64) -> Result<IGammaEnvelope> {
    if !(gamma > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("envelope needs gamma, t > 0, got {gamma}, {t}")));
    }
    let gt = gamma * t;
    let ln_value = 130f64.ln() + 2.0 + 9.0 * gamma.ln() + 10.0 * t.ln() - (2.0 / 7.0) * gt / gt.ln().powi(2);
    Ok(IGammaEnvelope { ln_value, applicable: t > ENVELOPE_THRESHOLD })
}

/// `ln I_γ(t)` next to the envelope; `BoundViolation` if the envelope applies and fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IGammaCheck {
    pub ln_i: f64,
    pub envelope: IGammaEnvelope,
}

pub fn check_i_gamma(w: &WeightFunction, t: f64) -> Result<IGammaCheck> {
    let ln_i = w.ln_i_gamma(t)?;
    let envelope = i_gamma_envelope(w.gamma, t)?;
    if envelope.applicable && ln_i > envelope.ln_value {
        return Err(Error::BoundViolation {
            measured: ln_i,
            bound: envelope.ln_value,
            context: format!("ln I_gamma({t})"),
        });
    }
    Ok(IGammaCheck { ln_i, envelope })
}

/// Gauss nodes of `[0, γT]` in unit time with `g_j W_1(t_j)` attached.
pub(crate) struct NodeSet {
    full_panels: usize,
    rel: Vec<f64>,
    weighted: Vec<f64>,
    // partial last panel, listed explicitly
    extra: Vec<(f64, f64)>,
}

impl NodeSet {
    fn new(w: &WeightFunction, t_trunc: f64) -> Self {
        let tab = &w.table;
        let t1 = (w.gamma * t_trunc.max(0.0)).min(TABLE_END);
        let full_panels = ((t1 / PANEL).floor() as usize).min(tab.panels());
        let rel: Vec<f64> = tab.gl_x.iter().map(|x| 0.5 * PANEL * (1.0 + x)).collect();
        let mut weighted = Vec::with_capacity(full_panels * GL_ORDER);
        for k in 0..full_panels {
            for j in 0..GL_ORDER {
                weighted.push(tab.gl_w[j] * 0.5 * PANEL * tab.w_nodes[k * GL_ORDER + j]);
            }
        }
        let lo = full_panels as f64 * PANEL;
        let mut extra = Vec::new();
        if t1 > lo {
            let half = 0.5 * (t1 - lo);
            for (x, g) in tab.gl_x.iter().zip(&tab.gl_w) {
                let r = lo + half * (1.0 + x);
                extra.push((r, g * half * tab.w(r)));
            }
        }
        Self { full_panels, rel, weighted, extra }
    }

    /// `2∫_0^{T_1} W_1(t) sin(ωt) dt` in unit time.
    pub(crate) fn sine(&self, omega: f64) -> f64 {
        let cs: Vec<f64> = self.rel.iter().map(|r| (omega * r).cos()).collect();
        let sn: Vec<f64> = self.rel.iter().map(|r| (omega * r).sin()).collect();
        let (step_s, step_c) = (omega * PANEL).sin_cos();
        let mut acc = 0.0;
        let (mut s, mut c) = (0.0, 1.0);
        for k in 0..self.full_panels {
            if k % 64 == 0 {
                (s, c) = (omega * k as f64 * PANEL).sin_cos();
            }
            let wk = &self.weighted[k * GL_ORDER..(k + 1) * GL_ORDER];
            let mut part = 0.0;
            for j in 0..GL_ORDER {
                part += wk[j] * (s * cs[j] + c * sn[j]);
            }
            acc += part;
            (s, c) = (s * step_c + c * step_s, c * step_c - s * step_s);
        }
        for (r, g) in &self.extra {
            acc += g * (omega * r).sin();
        }
        2.0 * acc
    }
}
