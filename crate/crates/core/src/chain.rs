//! Finite-volume operators: embeddings, Hamiltonians, Heisenberg dynamics,
//! conditional expectations and spectra.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fnorm::Interaction;
use crate::linalg::{self, c, c64, CMat, HermitianEigen};
use crate::tensor;

/// Default ceiling on the total Hilbert-space dimension of a volume.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

/// Dimension ceiling, overridable through `SPINCERT_MAX_DIM`.
pub fn max_dim() -> usize {
    static CEIL: OnceLock<usize> = OnceLock::new();
    *CEIL.get_or_init(|| {
        std::env::var("SPINCERT_MAX_DIM")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

/// The interval `[a, b] ∩ ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Volume {
    pub a: i64,
    pub b: i64,
}

impl Volume {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a > b {
            return Err(Error::BadGeometry(format!("empty volume [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn nsites(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.a..=self.b
    }

    pub fn contains(&self, x: i64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn position(&self, x: i64) -> usize {
        (x - self.a) as usize
    }

    /// `d^{|Λ|}`, checked against the ceiling.
    pub fn dim(&self, d: usize) -> Result<usize> {
        let ceiling = max_dim();
        let mut dim: usize = 1;
        for _ in 0..self.nsites() {
            dim = dim.saturating_mul(d);
        }
        if dim > ceiling {
            return Err(Error::VolumeTooLarge { dim, ceiling });
        }
        Ok(dim)
    }

    fn check_support(&self, support: &[i64]) -> Result<()> {
        if support.iter().any(|&x| !self.contains(x)) {
            return Err(Error::SupportOutsideVolume { support: support.to_vec(), a: self.a, b: self.b });
        }
        Ok(())
    }
}

/// Matrix acting on the sorted site set `support`.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub support: Vec<i64>,
    pub matrix: CMat,
    pub onsite_dim: usize,
}

impl LocalOperator {
    pub fn new(support: Vec<i64>, matrix: CMat, onsite_dim: usize) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("support {support:?} must be strictly increasing")));
        }
        let dim = onsite_dim.pow(support.len() as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::OnsiteDimMismatch { expected: dim, got: matrix.nrows() });
        }
        Ok(Self { support, matrix, onsite_dim })
    }

    /// Operator on a whole volume.
    pub fn on_volume(volume: Volume, matrix: CMat, onsite_dim: usize) -> Result<Self> {
        Self::new(volume.sites().collect(), matrix, onsite_dim)
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }
}

/// `op ⊗ 𝟙` on `volume`, factors in ascending site order.
pub fn embed(op: &LocalOperator, volume: Volume) -> Result<CMat> {
    volume.check_support(&op.support)?;
    volume.dim(op.onsite_dim)?;
    let pos: Vec<usize> = op.support.iter().map(|&x| volume.position(x)).collect();
    Ok(tensor::embed_positions(&op.matrix, op.onsite_dim, volume.nsites(), &pos))
}

/// `H_Λ(t) = Σ_{Z ⊂ Λ} Φ(Z, t)`.
pub fn assemble_hamiltonian(phi: &Interaction, volume: Volume, t: f64) -> Result<CMat> {
    let d = phi.onsite_dim();
    let dim = volume.dim(d)?;
    let mut h = linalg::zeros(dim);
    for term in phi.terms() {
        if term.min_site() < volume.a || term.max_site() > volume.b {
            continue;
        }
        let pos: Vec<usize> = term.support.iter().map(|&x| volume.position(x)).collect();
        h += tensor::embed_positions(&term.at(t), d, volume.nsites(), &pos);
    }
    Ok(h)
}

/// Matrix-free `H_Λ(t)` acting on state vectors.
#[derive(Debug, Clone)]
pub struct LocalSum {
    pub onsite_dim: usize,
    pub nsites: usize,
    pub terms: Vec<(Vec<usize>, CMat)>,
}

impl LocalSum {
    pub fn new(phi: &Interaction, volume: Volume, t: f64) -> Result<Self> {
        let d = phi.onsite_dim();
        volume.dim(d)?;
        let terms = phi
            .terms()
            .filter(|term| term.min_site() >= volume.a && term.max_site() <= volume.b)
            .map(|term| (term.support.iter().map(|&x| volume.position(x)).collect(), term.at(t)))
            .collect();
        Ok(Self { onsite_dim: d, nsites: volume.nsites(), terms })
    }

    pub fn dim(&self) -> usize {
        self.onsite_dim.pow(self.nsites as u32)
    }

    pub fn apply(&self, v: &[c64], out: &mut [c64]) {
        out.iter_mut().for_each(|x| *x = c(0.0, 0.0));
        for (pos, m) in &self.terms {
            tensor::apply_local(m, self.onsite_dim, self.nsites, pos, v, out);
        }
    }

    /// Lowest `nev` eigenpairs by Lanczos.
    pub fn lowest(&self, nev: usize, tol: f64) -> Result<linalg::LanczosResult> {
        let n = self.dim();
        linalg::lanczos(|v, o| self.apply(v, o), n, nev, linalg::Which::Smallest, tol, n.min(600))
    }
}

/// Propagator `U(t)` solving `i dU/dt = H(t) U`, `U(0) = 𝟙`.
pub fn propagator(phi: &Interaction, volume: Volume, t: f64) -> Result<CMat> {
    if t == 0.0 {
        return Ok(linalg::identity(volume.dim(phi.onsite_dim())?));
    }
    if phi.is_time_independent() {
        let h = assemble_hamiltonian(phi, volume, 0.0)?;
        return Ok(linalg::hermitian_eigen(&h)?.propagator(t));
    }
    time_ordered_exp(|s| assemble_hamiltonian(phi, volume, s), 0.0, t, 1e-9)
}

const MAGNUS_MAX_STEPS: usize = 1 << 14;

fn magnus2(h_at: &impl Fn(f64) -> Result<CMat>, t0: f64, t1: f64, steps: usize) -> Result<CMat> {
    let dt = (t1 - t0) / steps as f64;
    let mut u: Option<CMat> = None;
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * dt;
        let step = linalg::expm_hermitian(&h_at(mid)?, dt)?;
        u = Some(match u {
            None => step,
            Some(prev) => &step * &prev,
        });
    }
    u.ok_or_else(|| Error::InvalidParameter("zero Magnus steps".into()))
}

/// Time-ordered `T exp(−i ∫_{t0}^{t1} H)` by midpoint Magnus with Richardson
/// extrapolation; the step count doubles until successive extrapolants agree
/// to `tol` in operator norm.
pub fn time_ordered_exp(h_at: impl Fn(f64) -> Result<CMat>, t0: f64, t1: f64, tol: f64) -> Result<CMat> {
    if t0 == t1 {
        let n = h_at(t0)?.nrows();
        return Ok(linalg::identity(n));
    }
    let scale = linalg::op_norm(&h_at(0.5 * (t0 + t1))?).max(1.0);
    let mut steps = ((t1 - t0).abs() * scale).ceil().max(4.0) as usize;
    let mut coarse = magnus2(&h_at, t0, t1, steps)?;
    let mut prev_extrap: Option<CMat> = None;
    while steps <= MAGNUS_MAX_STEPS {
        let fine = magnus2(&h_at, t0, t1, 2 * steps)?;
        // midpoint Magnus is symmetric, so the error expands in even powers of the step
        let extrap = linalg::scale(&(linalg::scale(&fine, c(4.0, 0.0)) - &coarse), c(1.0 / 3.0, 0.0));
        if let Some(p) = &prev_extrap {
            if linalg::op_norm(&(&extrap - p)) < tol {
                let u = linalg::polar_unitary(&extrap)?;
                if linalg::unitarity_defect(&u) > 1e-10 {
                    return Err(Error::NotConverged("propagator lost unitarity".into()));
                }
                return Ok(u);
            }
        }
        prev_extrap = Some(extrap);
        coarse = fine;
        steps *= 2;
    }
    Err(Error::NotConverged(format!(
        "Magnus integration on [{t0}, {t1}] did not reach {tol:e} within {MAGNUS_MAX_STEPS} steps"
    )))
}

/// `τ_t(A) = U(t)* A U(t)` on the whole volume.
pub fn heisenberg_evolve(phi: &Interaction, volume: Volume, a: &LocalOperator, t: f64) -> Result<LocalOperator> {
    let u = propagator(phi, volume, t)?;
    let full = embed(a, volume)?;
    LocalOperator::on_volume(volume, conjugate_by(&u, &full), a.onsite_dim)
}

/// `U* A U`.
pub fn conjugate_by(u: &CMat, a: &CMat) -> CMat {
    u.adjoint() * a * u
}

/// Normalised partial trace of a volume operator over `volume ∖ keep`,
/// re-embedded as the identity on the traced sites.
pub fn conditional_expectation(a: &CMat, volume: Volume, keep: &[i64], onsite_dim: usize) -> Result<CMat> {
    volume.check_support(keep)?;
    let n = volume.nsites();
    if a.nrows() != volume.dim(onsite_dim)? {
        return Err(Error::DimensionMismatch(a.nrows(), onsite_dim.pow(n as u32)));
    }
    let kept: Vec<usize> = keep.iter().map(|&x| volume.position(x)).collect();
    let traced: Vec<usize> = (0..n).filter(|p| !kept.contains(p)).collect();
    if traced.is_empty() {
        return Ok(a.clone());
    }
    let red = tensor::partial_trace(a, onsite_dim, n, &traced);
    let norm = 1.0 / (onsite_dim.pow(traced.len() as u32) as f64);
    let mut kept_sorted = kept;
    kept_sorted.sort_unstable();
    Ok(tensor::embed_positions(&linalg::scale(&red, c(norm, 0.0)), onsite_dim, n, &kept_sorted))
}

/// `‖AB − BA‖`.
pub fn commutator_norm(a: &CMat, b: &CMat) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(linalg::op_norm(&linalg::commutator(a, b)))
}

/// Separation of the spectrum into a lowest cluster `sp₋` and the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSplit {
    /// Number of eigenvalues in `sp₋`.
    pub lower_count: usize,
    pub sp_minus_diam: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    pub gap_split: Option<GapSplit>,
}

impl SpectralData {
    pub fn ground_vector(&self) -> Vec<c64> {
        self.eigenvectors.col_as_slice(0).to_vec()
    }

    /// Projector onto `sp₋`.
    pub fn lower_projector(&self) -> CMat {
        let k = self.gap_split.map(|g| g.lower_count).unwrap_or(1);
        let v = self.eigenvectors.subcols(0, k);
        v * v.adjoint()
    }
}

/// First separation of at least `gamma_probe` above the lowest eigenvalue.
pub fn find_gap(eigenvalues: &[f64], gamma_probe: f64) -> Result<GapSplit> {
    for k in 0..eigenvalues.len().saturating_sub(1) {
        let gap = eigenvalues[k + 1] - eigenvalues[k];
        if gap >= gamma_probe {
            return Ok(GapSplit { lower_count: k + 1, sp_minus_diam: eigenvalues[k] - eigenvalues[0], gap });
        }
    }
    Err(Error::DegenerateSplit { probe: gamma_probe })
}

/// Full spectral decomposition with the gap split above the lowest cluster.
pub fn ground_state(h: &CMat, gamma_probe: f64) -> Result<SpectralData> {
    let defect = linalg::hermiticity_defect(h);
    if defect > 1e-12 * linalg::max_abs(h).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let HermitianEigen { values, vectors } = linalg::hermitian_eigen(h)?;
    let split = find_gap(&values, gamma_probe)?;
    Ok(SpectralData { eigenvalues: values, eigenvectors: vectors, gap_split: Some(split) })
}

/// `An(m, n) = [−n, −m] ∪ [m, n]`.
pub fn annulus(m: i64, n: i64) -> Result<Vec<i64>> {
    if m <= 0 || m >= n {
        return Err(Error::BadOrder { m, n });
    }
    Ok((-n..=-m).chain(m..=n).collect())
}

/// Expectation `⟨ψ, A ψ⟩` of a volume operator.
pub fn expectation(psi: &[c64], a: &CMat) -> c64 {
    let mut tmp = vec![c(0.0, 0.0); psi.len()];
    linalg::matvec(a, psi, &mut tmp);
    linalg::inner(psi, &tmp)
}

/// `⟨ψ, A ψ⟩` for a local operator without forming the volume matrix.
pub fn local_expectation(psi: &[c64], op: &LocalOperator, volume: Volume) -> Result<c64> {
    volume.check_support(&op.support)?;
    let pos: Vec<usize> = op.support.iter().map(|&x| volume.position(x)).collect();
    let mut tmp = vec![c(0.0, 0.0); psi.len()];
    tensor::apply_local(&op.matrix, op.onsite_dim, volume.nsites(), &pos, psi, &mut tmp);
    Ok(linalg::inner(psi, &tmp))
}
