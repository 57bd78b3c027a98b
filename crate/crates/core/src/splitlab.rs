//! Split-property mechanics at desk scale: truncation and decoupling
//! defects, the expectation-based quasi-equivalence probe, and uniform
//! correlation decay.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{self, LocalOperator, Volume};
use crate::error::{Error, Result};
use crate::fnorm::{self, FSpec, Interaction, Restriction};
use crate::linalg::{self, c, c64, CMat};
use crate::lrcert::{self, LRConstants};
use crate::tensor;

/// Defect measured against its envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Defect {
    pub defect: f64,
    pub envelope: f64,
}

impl Defect {
    pub fn holds(&self) -> bool {
        self.defect <= self.envelope * (1.0 + 1e-9) + 1e-12
    }

    fn checked(self, context: String) -> Result<Self> {
        if self.holds() {
            Ok(self)
        } else {
            Err(Error::BoundViolation { measured: self.defect, bound: self.envelope, context })
        }
    }
}

/// A family of defects indexed by `n`.
#[derive(Debug, Clone, Serialize)]
pub struct DefectCurve {
    pub parameter: Vec<i64>,
    pub defect: Vec<f64>,
    pub envelope: Vec<f64>,
}

/// Norm of a large non-Hermitian matrix.
fn big_norm(m: &CMat) -> f64 {
    if m.nrows() <= 256 {
        linalg::op_norm(m)
    } else {
        linalg::op_norm_krylov(m)
    }
}

/// Constants with the `h = 0` norm, which is what the split estimates use.
fn constants_h0(phi: &Interaction, spec: &FSpec) -> Result<(LRConstants, f64)> {
    if spec.beta <= 2.0 {
        return Err(Error::BetaTooSmall { beta: spec.beta, min: 2.0 });
    }
    let p = FSpec::power_law(spec.beta)?;
    let norm = fnorm::f_norm(phi, &p, 33)?.value;
    Ok((lrcert::lr_constants(&p, norm)?, norm))
}

/// `2 κ ‖A‖ (e^{ν|t|} − 1) F_{β−2}(n)`.
pub fn truncation_envelope(k: &LRConstants, norm_a: f64, n: i64, t: f64) -> Result<f64> {
    let f = FSpec::power_law(k.beta - 2.0)?;
    Ok(2.0 * k.kappa * norm_a * k.growth(t) * fnorm::f_eval(&f, n as u64))
}

/// `δ = min(1, (β−2)/2)`.
pub fn delta(beta: f64) -> f64 {
    (0.5 * (beta - 2.0)).min(1.0)
}

/// Time integral of the `C_I` and `C_II` bounds:
/// `3κ‖Φ‖‖A‖ n F_{β−2}(n) ((e^{ν|t|}−1)/ν − |t|) + 8/((β−2−δ/2)δ) ‖A‖‖Φ‖ F_{β−2−δ/2}(n) |t|`.
pub fn decoupling_envelope(k: &LRConstants, phi_norm: f64, norm_a: f64, n: i64, t: f64) -> Result<f64> {
    let beta = k.beta;
    let dl = delta(beta);
    let ta = t.abs();
    let f2 = fnorm::f_eval(&FSpec::power_law(beta - 2.0)?, n as u64);
    let f2d = fnorm::f_eval(&FSpec::power_law(beta - 2.0 - dl / 2.0)?, n as u64);
    let growth_integral = if k.nu > 0.0 { k.growth(t) / k.nu - ta } else { 0.0 };
    let c_i = 3.0 * k.kappa * phi_norm * norm_a * n as f64 * f2 * growth_integral;
    let c_ii = 8.0 / ((beta - 2.0 - dl / 2.0) * dl) * norm_a * phi_norm * f2d * ta;
    Ok(c_i + c_ii)
}

/// Keep set `An(n, 2(n+r)) ∩ Λ`.
pub fn keep_set(n: i64, r: i64, volume: Volume) -> Result<Vec<i64>> {
    Ok(chain::annulus(n, 2 * (n + r))?.into_iter().filter(|&x| volume.contains(x)).collect())
}

/// Shared propagators for a sweep over `n` at fixed `t`.
pub struct SplitDynamics {
    pub volume: Volume,
    pub onsite_dim: usize,
    pub t: f64,
    u: CMat,
    /// `U U∪*`; `None` until requested.
    w: Option<CMat>,
}

impl SplitDynamics {
    /// Full dynamics only (enough for truncation defects).
    pub fn new(phi: &Interaction, volume: Volume, t: f64) -> Result<Self> {
        let u = chain::propagator(&phi.within(volume.a, volume.b), volume, t)?;
        Ok(Self { volume, onsite_dim: phi.onsite_dim(), t, u, w: None })
    }

    /// Also prepares `W = U U∪*` for decoupling defects.
    pub fn with_decoupled(phi: &Interaction, volume: Volume, t: f64) -> Result<Self> {
        let mut s = Self::new(phi, volume, t)?;
        if !(volume.contains(0) && volume.contains(1)) {
            return Err(Error::BadGeometry("volume must contain the bond (0, 1)".into()));
        }
        let inside = phi.within(volume.a, volume.b);
        let d = s.onsite_dim;
        let left = Volume::new(volume.a, 0)?;
        let right = Volume::new(1, volume.b)?;
        let ul = chain::propagator(&inside.restrict(Restriction::Left), left, t)?;
        let ur = chain::propagator(&inside.restrict(Restriction::Right), right, t)?;
        // U∪ = U_L ⊗ U_R acting on U* column by column gives U∪ U*; its adjoint is W
        let lpos: Vec<usize> = (0..left.nsites()).collect();
        let rpos: Vec<usize> = (left.nsites()..volume.nsites()).collect();
        let u_adj = s.u.adjoint().to_owned();
        let step = tensor::apply_local_columns(&ul, d, volume.nsites(), &lpos, &u_adj);
        let uu = tensor::apply_local_columns(&ur, d, volume.nsites(), &rpos, &step);
        s.w = Some(uu.adjoint().to_owned());
        Ok(s)
    }

    /// `τ_t(A)` as a volume matrix.
    pub fn evolve(&self, a: &LocalOperator) -> Result<CMat> {
        let pos = self.positions(a)?;
        let au = tensor::apply_local_columns(&a.matrix, self.onsite_dim, self.volume.nsites(), &pos, &self.u);
        Ok(self.u.adjoint() * au)
    }

    fn positions(&self, a: &LocalOperator) -> Result<Vec<usize>> {
        if a.support.iter().any(|&x| !self.volume.contains(x)) {
            return Err(Error::SupportOutsideVolume { support: a.support.clone(), a: self.volume.a, b: self.volume.b });
        }
        Ok(a.support.iter().map(|&x| self.volume.position(x)).collect())
    }

    /// `‖τ_t(A) − τ∪_t(A)‖ = ‖[A, W]‖`.
    pub fn decoupling_norm(&self, a: &LocalOperator) -> Result<f64> {
        let w = self.w.as_ref().ok_or_else(|| Error::InvalidParameter("decoupled dynamics not prepared".into()))?;
        let pos = self.positions(a)?;
        Ok(big_norm(&tensor::commutator_with_local(w, &a.matrix, self.onsite_dim, self.volume.nsites(), &pos)))
    }
}

/// `‖τ_t(A) − 𝔼_{n,r}(τ_t(A))‖` against `2κ‖A‖(e^{ν|t|}−1)F_{β−2}(n)`.
pub fn truncation_defect(
    phi: &Interaction,
    spec: &FSpec,
    dynamics: &SplitDynamics,
    a: &LocalOperator,
    n: i64,
    r: i64,
) -> Result<Defect> {
    let ann = chain::annulus(2 * n, 2 * n + r)?;
    if a.support.iter().any(|x| !ann.contains(x)) {
        return Err(Error::BadGeometry(format!("supp A = {:?} is not inside An({}, {})", a.support, 2 * n, 2 * n + r)));
    }
    let (k, _) = constants_h0(&phi.within(dynamics.volume.a, dynamics.volume.b), spec)?;
    let envelope = truncation_envelope(&k, a.norm(), n, dynamics.t)?;
    if dynamics.t == 0.0 {
        return Ok(Defect { defect: 0.0, envelope });
    }
    let keep = keep_set(n, r, dynamics.volume)?;
    let tau = dynamics.evolve(a)?;
    let cond = chain::conditional_expectation(&tau, dynamics.volume, &keep, dynamics.onsite_dim)?;
    let defect = big_norm(&(&tau - &cond));
    Defect { defect, envelope }.checked(format!("truncation n={n} r={r} t={}", dynamics.t))
}

/// `‖τ_t(A) − τ∪_t(A)‖` against the time-integrated `C_I`/`C_II` bounds.
pub fn decoupling_defect(phi: &Interaction, spec: &FSpec, dynamics: &SplitDynamics, a: &LocalOperator, n: i64) -> Result<Defect> {
    let v = dynamics.volume;
    if !(v.contains(-2 * n) && v.contains(2 * n - 1)) {
        return Err(Error::BadGeometry(format!("volume [{}, {}] does not cover the cut region for n = {n}", v.a, v.b)));
    }
    let (k, norm) = constants_h0(&phi.within(v.a, v.b), spec)?;
    let envelope = decoupling_envelope(&k, norm, a.norm(), n, dynamics.t)?;
    if dynamics.t == 0.0 {
        return Ok(Defect { defect: 0.0, envelope });
    }
    let defect = dynamics.decoupling_norm(a)?;
    Defect { defect, envelope }.checked(format!("decoupling n={n} t={}", dynamics.t))
}

/// State on a volume, as a density matrix.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub volume: Volume,
    pub onsite_dim: usize,
    pub rho: CMat,
}

impl ChainState {
    pub fn pure(volume: Volume, onsite_dim: usize, psi: &[c64]) -> Result<Self> {
        let n = psi.len();
        if n != volume.dim(onsite_dim)? {
            return Err(Error::DimensionMismatch(n, volume.dim(onsite_dim)?));
        }
        let rho = CMat::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        Ok(Self { volume, onsite_dim, rho })
    }

    pub fn mixed(volume: Volume, onsite_dim: usize, rho: CMat) -> Result<Self> {
        let dim = volume.dim(onsite_dim)?;
        if rho.nrows() != dim {
            return Err(Error::DimensionMismatch(rho.nrows(), dim));
        }
        let tr = linalg::trace(&rho);
        if (tr - c(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidParameter(format!("density matrix has trace {tr}")));
        }
        Ok(Self { volume, onsite_dim, rho })
    }

    /// Reduced density matrix on `sites` (ascending).
    pub fn reduced(&self, sites: &[i64]) -> CMat {
        let n = self.volume.nsites();
        let keep: Vec<usize> = sites.iter().map(|&x| self.volume.position(x)).collect();
        let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
        tensor::partial_trace(&self.rho, self.onsite_dim, n, &traced)
    }

    /// `ρ|_{≤0} ⊗ ρ|_{≥1}`.
    pub fn split_product(&self) -> Result<ChainState> {
        let left: Vec<i64> = self.volume.sites().filter(|&x| x <= 0).collect();
        let right: Vec<i64> = self.volume.sites().filter(|&x| x >= 1).collect();
        if left.is_empty() || right.is_empty() {
            return Err(Error::BadGeometry("volume does not straddle the cut".into()));
        }
        let rho = linalg::kron(&self.reduced(&left), &self.reduced(&right));
        Ok(ChainState { volume: self.volume, onsite_dim: self.onsite_dim, rho })
    }
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> Result<f64> {
    Ok(linalg::hermitian_eigen(&linalg::hermitian_part(m))?.values.iter().map(|v| v.abs()).sum())
}

/// `max_B |ω(B) − φ(B)| / ‖B‖` over sampled `B` supported outside `x_eps`:
/// random Hermitian `B` plus every one- and two-site Pauli string.
pub fn quasi_equivalence_probe(
    omega: &ChainState,
    phi: &ChainState,
    x_eps: &[i64],
    observable_samples: usize,
    seed: u64,
) -> Result<f64> {
    if omega.volume != phi.volume || omega.onsite_dim != phi.onsite_dim {
        return Err(Error::BadGeometry("states live on different volumes".into()));
    }
    let outside: Vec<i64> = omega.volume.sites().filter(|x| !x_eps.contains(x)).collect();
    if outside.is_empty() {
        return Ok(0.0);
    }
    let diff = omega.reduced(&outside) - phi.reduced(&outside);
    let d = omega.onsite_dim;
    let k = outside.len();
    let mut best: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..observable_samples {
        let b = linalg::random_hermitian(diff.nrows(), &mut rng);
        let val = linalg::trace(&(&diff * &b)).norm() / linalg::op_norm(&b);
        best = best.max(val);
    }
    let basis = local_basis(d);
    for i in 0..k {
        for p in &basis {
            let b = tensor::embed_positions(p, d, k, &[i]);
            best = best.max(linalg::trace(&(&diff * &b)).norm() / linalg::op_norm(p));
        }
        for j in (i + 1)..k {
            for p in &basis {
                for q in &basis {
                    let b = tensor::embed_positions(&linalg::kron(p, q), d, k, &[i, j]);
                    best = best.max(linalg::trace(&(&diff * &b)).norm() / (linalg::op_norm(p) * linalg::op_norm(q)));
                }
            }
        }
    }
    Ok(best)
}

/// Traceless Hermitian onsite basis: Paulis for `d = 2`, generalised
/// Gell-Mann matrices otherwise.
fn local_basis(d: usize) -> Vec<CMat> {
    if d == 2 {
        return (1..=3).map(linalg::pauli).collect();
    }
    let mut out = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = linalg::zeros(d);
            s[(j, k)] = c(1.0, 0.0);
            s[(k, j)] = c(1.0, 0.0);
            out.push(s);
            let mut a = linalg::zeros(d);
            a[(j, k)] = c(0.0, -1.0);
            a[(k, j)] = c(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = linalg::zeros(d);
        for j in 0..l {
            m[(j, j)] = c(norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// Result of [`correlation_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCheck {
    pub distance: u64,
    pub connected: f64,
    /// `μ(F) ‖A‖‖B‖ e^{−u h(d)}` with `μ` evaluated at this distance.
    pub envelope: f64,
    /// `10 F_{β−2}(distance to the boundary)`.
    pub allowance: f64,
    pub gap: f64,
}

impl CorrelationCheck {
    pub fn holds(&self) -> bool {
        self.connected <= self.envelope + self.allowance
    }
}

/// `μ(F) = 1 + κ/π + sqrt((2ν+γ)/(πγ h(d)))` and `u = γ/(2ν+γ)`.
pub fn correlation_envelope(k: &LRConstants, spec: &FSpec, gamma: f64, dist: u64, norm_a: f64, norm_b: f64) -> Result<f64> {
    let h = spec.h(dist as f64);
    if h <= 0.0 {
        return Err(Error::InvalidParameter("correlation envelope needs h(d) > 0 (R > 0)".into()));
    }
    let pi = std::f64::consts::PI;
    let mu = 1.0 + k.kappa / pi + ((2.0 * k.nu + gamma) / (pi * gamma * h)).sqrt();
    let u = gamma / (2.0 * k.nu + gamma);
    Ok(mu * norm_a * norm_b * (-u * h).exp())
}

/// Ground state of `H_Λ` (Lanczos) with its spectral gap.
pub struct GroundState {
    pub volume: Volume,
    pub onsite_dim: usize,
    pub psi: Vec<c64>,
    pub gap: f64,
}

impl GroundState {
    pub fn new(phi: &Interaction, volume: Volume, gamma: f64) -> Result<Self> {
        let sum = chain::LocalSum::new(phi, volume, 0.0)?;
        let res = sum.lowest(2, 1e-11)?;
        let gap = res.values[1] - res.values[0];
        if gap < gamma {
            return Err(Error::DegenerateSplit { probe: gamma });
        }
        Ok(Self { volume, onsite_dim: phi.onsite_dim(), psi: res.vectors[0].clone(), gap })
    }

    pub fn expect(&self, op: &LocalOperator) -> Result<c64> {
        chain::local_expectation(&self.psi, op, self.volume)
    }

    /// `|ω(AB) − ω(A)ω(B)|` for disjointly supported `A`, `B`.
    pub fn connected(&self, a: &LocalOperator, b: &LocalOperator) -> Result<f64> {
        let mut sup = a.support.clone();
        sup.extend(&b.support);
        let ab = LocalOperator::new(sup, linalg::kron(&a.matrix, &b.matrix), a.onsite_dim)?;
        Ok((self.expect(&ab)? - self.expect(a)? * self.expect(b)?).norm())
    }
}

/// Connected correlator against the uniform-decay envelope plus the
/// declared finite-size allowance.
pub fn correlation_decay_check(
    phi: &Interaction,
    spec: &FSpec,
    state: &GroundState,
    gamma: f64,
    a: &LocalOperator,
    b: &LocalOperator,
) -> Result<CorrelationCheck> {
    let xa = *a.support.last().ok_or_else(|| Error::BadGeometry("empty support".into()))?;
    let yb = b.support[0];
    if xa >= yb {
        return Err(Error::BadGeometry("need max supp A < min supp B".into()));
    }
    if state.gap < gamma {
        return Err(Error::DegenerateSplit { probe: gamma });
    }
    let v = state.volume;
    let norm = fnorm::f_norm(&phi.within(v.a, v.b), spec, 33)?.value;
    let k = lrcert::lr_constants(spec, norm)?;
    let dist = (yb - xa) as u64;
    let envelope = correlation_envelope(&k, spec, gamma, dist, a.norm(), b.norm())?;
    let edge = (a.support[0] - v.a).min(v.b - b.support[b.support.len() - 1]).max(0) as u64;
    let allowance = 10.0 * fnorm::f_eval(&spec.with_beta(spec.beta - 2.0)?, edge);
    let connected = state.connected(a, b)?;
    Ok(CorrelationCheck { distance: dist, connected, envelope, allowance, gap: state.gap })
}
