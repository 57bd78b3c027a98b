//! Decay envelopes `Ω₁`, `Ω₂`, `Q` for the generator-splitting estimates.

use statrs::function::gamma::{gamma, gamma_ur};

use super::weight::WeightFunction;
use crate::error::{Error, Result};
use crate::fnorm::FSpec;
use crate::lrcert::LRConstants;

const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
const MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightNorms {
    pub l1: f64,
    pub linf: f64,
    pub l1_t: f64,
}

/// Every symbol entering `Ω₁`, `Ω₂`, `Q`.
#[derive(Debug, Clone)]
pub struct EnvelopeParams {
    pub kappa: f64,
    pub nu: f64,
    pub gamma: f64,
    pub r: f64,
    pub b: f64,
    /// `‖Ψ‖_F`.
    pub psi_f_norm: f64,
    pub w_norms: WeightNorms,
    weight: WeightFunction,
}

impl EnvelopeParams {
    pub fn new(kappa: f64, nu: f64, r: f64, b: f64, psi_f_norm: f64, weight: WeightFunction) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("nu", nu), ("R", r), ("b", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(psi_f_norm >= 0.0) {
            return Err(Error::InvalidParameter(format!("psi F-norm must be >= 0, got {psi_f_norm}")));
        }
        Ok(Self {
            kappa,
            nu,
            gamma: weight.gamma,
            r,
            b,
            psi_f_norm,
            w_norms: WeightNorms { l1: weight.l1_norm, linf: weight.linf_norm, l1_t: weight.l1_t_norm },
            weight,
        })
    }

    pub fn from_lr(k: &LRConstants, spec: &FSpec, weight: WeightFunction) -> Result<Self> {
        Self::new(k.kappa, k.nu, spec.r, spec.b, k.f_norm, weight)
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 1.0) {
        return Err(Error::InvalidParameter(format!("envelope argument must be >= 1, got {x}")));
    }
    Ok(())
}

/// `Ω₁(x) = 4 I_γ(R x^b / 2ν) + ζ(2)² (10‖W t‖₁ + 2κ‖W‖_∞/ν) ‖Ψ‖_F e^{−R x^b / 2ν}`.
pub fn omega1(x: f64, p: &EnvelopeParams) -> Result<f64> {
    check_x(x)?;
    let arg = p.r * x.powf(p.b) / (2.0 * p.nu);
    let coef = ZETA2 * ZETA2 * (10.0 * p.w_norms.l1_t + 2.0 * p.kappa * p.w_norms.linf / p.nu);
    Ok(4.0 * p.weight.i_gamma(arg)? + coef * p.psi_f_norm * (-arg).exp())
}

/// Exponents in the `max{‖Ψ‖^a, ‖Ψ‖^b}` coefficient of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QPowers {
    /// `max{‖Ψ‖¹, ‖Ψ‖²}`, as in the displayed definition.
    Displayed,
    /// `max{‖Ψ‖², ‖Ψ‖³}`, as in the body of the estimate.
    ProofBody,
}

/// Prefactor of the `I_γ` series in `Ω₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Omega2Prefactor {
    /// `6x`.
    Displayed,
    /// `6‖Ψ‖_F x`.
    WithPsi,
}

/// `Q(y) = ζ(2)⁴ (12κ‖Ψ‖_F‖W‖_∞/ν + 10 max{…}‖W|t|‖₁) e^{−(R/2)(y/4)^b}`.
pub fn q_envelope(y: f64, p: &EnvelopeParams, powers: QPowers) -> f64 {
    q_coefficient(p, powers) * (-0.5 * p.r * (y / 4.0).powf(p.b)).exp()
}

fn q_coefficient(p: &EnvelopeParams, powers: QPowers) -> f64 {
    let f = p.psi_f_norm;
    let mx = match powers {
        QPowers::Displayed => f.max(f * f),
        QPowers::ProofBody => (f * f).max(f * f * f),
    };
    ZETA2.powi(4) * (12.0 * p.kappa * f * p.w_norms.linf / p.nu + 10.0 * mx * p.w_norms.l1_t)
}

/// A truncated series `Σ_{m ≥ m0} f(m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub first: u64,
    /// Number of summed terms.
    pub terms: usize,
    pub partial: f64,
    /// Integral-comparison bound on the dropped terms.
    pub tail_bound: f64,
}

impl SeriesSum {
    pub fn value(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

/// Sums a non-increasing series from `m0` until a term drops below
/// `1e-16 · partial` or, at power-of-two checkpoints, the integral bound
/// `∫_M^∞ f` on the rest drops below `1e-13 · partial`.
fn decreasing_series(
    m0: u64,
    f: impl Fn(f64) -> Result<f64>,
    tail: impl Fn(f64) -> Result<f64>,
) -> Result<SeriesSum> {
    let mut partial = 0.0;
    for k in 0..MAX_TERMS {
        let m = (m0 + k as u64) as f64;
        let v = f(m)?;
        partial += v;
        if v <= 1e-16 * partial {
            return Ok(SeriesSum { first: m0, terms: k + 1, partial, tail_bound: tail(m)? });
        }
        if (k + 1).is_power_of_two() && k >= 63 {
            let rest = tail(m)?;
            if rest <= 1e-13 * partial {
                return Ok(SeriesSum { first: m0, terms: k + 1, partial, tail_bound: rest });
            }
        }
    }
    Err(Error::DivergentEnvelope(format!("series from {m0} not settled within {MAX_TERMS} terms")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega2 {
    pub value: f64,
    pub i_series: SeriesSum,
    pub q_series: SeriesSum,
}

/// `Ω₂(x) = 6·c·x Σ_{m ≥ x} I_γ((R/2)(m/4)^b) + Σ_{m ≥ x} Q(m)`.
pub fn omega2(x: f64, p: &EnvelopeParams, prefactor: Omega2Prefactor, powers: QPowers) -> Result<Omega2> {
    check_x(x)?;
    let m0 = x.ceil() as u64;
    let arg = |m: f64| 0.5 * p.r * (m / 4.0).powf(p.b);
    let i_series = decreasing_series(
        m0,
        |m| p.weight.i_gamma(arg(m)),
        // ∫_M^∞ I_γ(g(y)) dy with u = g(y): (4/b)(2/R)^{1/b} ∫_{g(M)}^∞ I_γ(u) u^{1/b − 1} du
        |m| {
            let s = 1.0 / p.b;
            Ok(4.0 * s * (2.0 / p.r).powf(s) * p.weight.i_gamma_moment_tail(arg(m), s - 1.0)?)
        },
    )?;
    let qc = q_coefficient(p, powers);
    // ∫_M^∞ e^{−(R/2)(y/4)^b} dy = (4/b)(2/R)^{1/b} Γ(1/b, (R/2)(M/4)^b)
    let q_tail = |m: f64| {
        let s = 1.0 / p.b;
        Ok(qc * 4.0 * s * (2.0 / p.r).powf(s) * gamma(s) * gamma_ur(s, arg(m)))
    };
    let q_series = if qc == 0.0 {
        SeriesSum { first: m0, terms: 0, partial: 0.0, tail_bound: 0.0 }
    } else {
        decreasing_series(m0, |m| Ok(q_envelope(m, p, powers)), q_tail)?
    };
    let c = match prefactor {
        Omega2Prefactor::Displayed => 1.0,
        Omega2Prefactor::WithPsi => p.psi_f_norm,
    };
    Ok(Omega2 { value: 6.0 * c * x * i_series.value() + q_series.value(), i_series, q_series })
}

/// `2(3NΩ₁(N) + Ω₂(N))‖Φ'‖_F`, displayed variants.
pub fn generator_split_envelope(n: f64, p: &EnvelopeParams, deriv_f_norm: f64) -> Result<f64> {
    let o1 = omega1(n, p)?;
    let o2 = omega2(n, p, Omega2Prefactor::Displayed, QPowers::Displayed)?.value;
    Ok(2.0 * (3.0 * n * o1 + o2) * deriv_f_norm)
}
