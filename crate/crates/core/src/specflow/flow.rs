//! The generator `D_Λ(s) = ∫ W_γ(t) τ_t(∂_s H_Λ(s)) dt` and its flow.
//!
//! In the eigenbasis of `H_Λ(s)` the truncated time integral is diagonal in
//! frequency: `⟨m|D|n⟩ = ⟨m|∂_s H|n⟩ · i κ(E_m − E_n)` with
//! `κ(ω) = 2∫_0^T W_γ(t) sin(ωt) dt`. `κ` is evaluated once on Gauss nodes
//! and interpolated piecewise in Chebyshev form over `ω`.

use faer::Mat;
use rayon::prelude::*;

use super::envelope::{self, EnvelopeParams};
use super::weight::{NodeSet, WeightFunction};
use crate::chain::{self, GapSplit, Volume};
use crate::error::{Error, Result};
use crate::fnorm::{Interaction, InteractionTemplate, Restriction};
use crate::linalg::{self, c, CMat};
use crate::splitlab::DefectCurve;
use crate::tensor;

const CHEB_N: usize = 25;
// frequency width of one interpolation cell times T_1 / 2
const CELL_BANDWIDTH: f64 = 4.0;

/// `κ(ω) = 2∫_0^T W_γ(t) sin(ωt) dt` on `|ω| ≤ omega_max`, piecewise Chebyshev.
pub struct SineKernel {
    pub gamma: f64,
    pub t_trunc: f64,
    pub omega_max: f64,
    delta: f64,
    cells: Vec<[f64; CHEB_N]>,
    nodes: NodeSet,
}

impl SineKernel {
    pub fn new(w: &WeightFunction, t_trunc: f64, omega_max: f64) -> Self {
        let nodes = w.nodes(t_trunc);
        let t1 = (w.gamma * t_trunc).max(1.0);
        let delta = 2.0 * CELL_BANDWIDTH / t1;
        let w_max = (omega_max / w.gamma).max(0.0);
        let ncells = (w_max / delta).ceil() as usize + 1;
        let xs: Vec<f64> = (0..CHEB_N)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / CHEB_N as f64).cos())
            .collect();
        let cells: Vec<[f64; CHEB_N]> = (0..ncells)
            .into_par_iter()
            .map(|cell| {
                let mid = (cell as f64 + 0.5) * delta;
                let f: Vec<f64> = xs.iter().map(|x| nodes.sine(mid + 0.5 * delta * x)).collect();
                let mut coef = [0.0; CHEB_N];
                for (k, ck) in coef.iter_mut().enumerate() {
                    let s: f64 = f
                        .iter()
                        .enumerate()
                        .map(|(j, fj)| {
                            fj * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / CHEB_N as f64).cos()
                        })
                        .sum();
                    *ck = 2.0 * s / CHEB_N as f64;
                }
                coef[0] *= 0.5;
                coef
            })
            .collect();
        Self { gamma: w.gamma, t_trunc, omega_max, delta, cells, nodes }
    }

    /// `κ(ω)`; odd in `ω`. Outside the tabulated range the node sum is used directly.
    pub fn eval(&self, omega: f64) -> f64 {
        let x1 = omega.abs() / self.gamma;
        let cell = (x1 / self.delta) as usize;
        let v = if cell < self.cells.len() {
            let mid = (cell as f64 + 0.5) * self.delta;
            let x = (x1 - mid) / (0.5 * self.delta);
            clenshaw(&self.cells[cell], x)
        } else {
            self.nodes.sine(x1)
        } / self.gamma;
        if omega < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `κ(ω)` straight from the Gauss nodes.
    pub fn eval_direct(&self, omega: f64) -> f64 {
        let v = self.nodes.sine(omega.abs() / self.gamma) / self.gamma;
        if omega < 0.0 {
            -v
        } else {
            v
        }
    }
}

fn clenshaw(coef: &[f64; CHEB_N], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in coef.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coef[0]
}

/// `∂_s H_Λ(s)`.
pub fn derivative_hamiltonian(phi: &Interaction, volume: Volume, s: f64) -> Result<CMat> {
    let d = phi.onsite_dim();
    let dim = volume.dim(d)?;
    let mut h = linalg::zeros(dim);
    for term in phi.terms() {
        if term.is_constant() || term.min_site() < volume.a || term.max_site() > volume.b {
            continue;
        }
        let pos: Vec<usize> = term.support.iter().map(|&x| volume.position(x)).collect();
        h += tensor::embed_positions(&term.derivative_at(s)?, d, volume.nsites(), &pos);
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub matrix: CMat,
    pub s: f64,
    pub t_trunc: f64,
    pub dh_norm: f64,
    /// `2‖∂_s H‖ I_γ(T)`.
    pub tail_error: f64,
    pub hermiticity_defect: f64,
    /// Split of `sp(H_Λ(s))` at the first gap `≥ γ`; `None` flags a failed gap hypothesis.
    pub gap: Option<GapSplit>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

fn spread(values: &[f64]) -> f64 {
    values.last().copied().unwrap_or(0.0) - values.first().copied().unwrap_or(0.0)
}

/// `D_Λ(s)` by quadrature over `[−T, T]`.
pub fn hastings_generator(
    phi: &Interaction,
    volume: Volume,
    s: f64,
    w: &WeightFunction,
    t_trunc: f64,
) -> Result<Generator> {
    let h = chain::assemble_hamiltonian(phi, volume, s)?;
    let eig = linalg::hermitian_eigen(&h)?;
    let kernel = SineKernel::new(w, t_trunc, spread(&eig.values));
    generator_from_parts(phi, volume, s, w, &kernel, eig)
}

/// As [`hastings_generator`] with a prebuilt kernel.
pub fn generator_with_kernel(
    phi: &Interaction,
    volume: Volume,
    s: f64,
    w: &WeightFunction,
    kernel: &SineKernel,
) -> Result<Generator> {
    let h = chain::assemble_hamiltonian(phi, volume, s)?;
    let eig = linalg::hermitian_eigen(&h)?;
    generator_from_parts(phi, volume, s, w, kernel, eig)
}

fn generator_from_parts(
    phi: &Interaction,
    volume: Volume,
    s: f64,
    w: &WeightFunction,
    kernel: &SineKernel,
    eig: linalg::HermitianEigen,
) -> Result<Generator> {
    let dh = derivative_hamiltonian(phi, volume, s)?;
    let dh_norm = linalg::op_norm(&dh);
    let n = dh.nrows();
    let gap = chain::find_gap(&eig.values, w.gamma).ok();
    let tail_error = 2.0 * dh_norm * w.i_gamma(kernel.t_trunc)?;
    if dh_norm == 0.0 {
        return Ok(Generator {
            matrix: linalg::zeros(n),
            s,
            t_trunc: kernel.t_trunc,
            dh_norm,
            tail_error,
            hermiticity_defect: 0.0,
            gap,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        });
    }
    let e = &eig.values;
    let kmat = Mat::<f64>::from_fn(n, n, |i, j| if i == j { 0.0 } else { kernel.eval(e[i] - e[j]) });
    let real = linalg::is_real(&dh) && linalg::is_real(&eig.vectors);
    // D = i V (X ∘ κ) V*, with X = V* ∂H V
    let (matrix, hermiticity_defect) = if real {
        let v = Mat::<f64>::from_fn(n, n, |i, j| eig.vectors[(i, j)].re);
        let dr = Mat::<f64>::from_fn(n, n, |i, j| dh[(i, j)].re);
        let x = v.transpose() * &dr * &v;
        let m = Mat::<f64>::from_fn(n, n, |i, j| x[(i, j)] * kmat[(i, j)]);
        let a = &v * &m * v.transpose();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((a[(i, j)] + a[(j, i)]).abs());
            }
        }
        (Mat::from_fn(n, n, |i, j| c(0.0, 0.5 * (a[(i, j)] - a[(j, i)]))), defect)
    } else {
        let v = &eig.vectors;
        let x = v.adjoint() * &dh * v;
        let m = Mat::from_fn(n, n, |i, j| x[(i, j)] * c(0.0, kmat[(i, j)]));
        let d = v * &m * v.adjoint();
        let defect = linalg::hermiticity_defect(&d);
        (linalg::hermitian_part(&d), defect)
    };
    if hermiticity_defect > 1e-10 * dh_norm.max(1.0) / w.gamma {
        return Err(Error::NotHermitian(hermiticity_defect));
    }
    Ok(Generator {
        matrix,
        s,
        t_trunc: kernel.t_trunc,
        dh_norm,
        tail_error,
        hermiticity_defect,
        gap,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// `None` picks `T` with `I_γ(T) ≤ 1e-8 / max_s ‖∂_s H‖`.
    pub t_trunc: Option<f64>,
    /// Magnus steps per grid interval.
    pub substeps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { t_trunc: None, substeps: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub s_grid: Vec<f64>,
    pub unitaries: Vec<CMat>,
    /// `1 − Tr(P(s) U(s) P(0) U(s)*) / rank P(0)`.
    pub fidelity_defects: Vec<f64>,
    pub rank: usize,
    pub t_trunc: f64,
    pub tail_error: f64,
    pub max_hermiticity_defect: f64,
    pub max_unitarity_defect: f64,
    /// Grid points where no gap `≥ γ` above the ground cluster was found.
    pub gap_warnings: Vec<f64>,
}

impl FlowResult {
    pub fn max_fidelity_defect(&self) -> f64 {
        self.fidelity_defects.iter().fold(0.0, |a, &b| a.max(b))
    }
}

fn check_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("s grid must start at 0".into()));
    }
    if s_grid.windows(2).any(|p| p[1] <= p[0]) || s_grid.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(Error::InvalidParameter("s grid must be ascending inside [0, 1]".into()));
    }
    Ok(())
}

/// Solves `dU/ds = i D(s) U`, `U(0) = 𝟙`, by midpoint Magnus steps with a
/// polar re-projection after each step.
pub fn spectral_flow_unitary(
    phi: &Interaction,
    volume: Volume,
    s_grid: &[f64],
    w: &WeightFunction,
    opts: FlowOptions,
) -> Result<FlowResult> {
    check_grid(s_grid)?;
    if opts.substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    let mut spectra = Vec::with_capacity(s_grid.len());
    let mut max_spread = 0.0f64;
    let mut dh_max = 0.0f64;
    for &s in s_grid {
        let h = chain::assemble_hamiltonian(phi, volume, s)?;
        let eig = linalg::hermitian_eigen(&h)?;
        max_spread = max_spread.max(spread(&eig.values));
        dh_max = dh_max.max(linalg::op_norm(&derivative_hamiltonian(phi, volume, s)?));
        spectra.push(eig);
    }
    let t_trunc = match opts.t_trunc {
        Some(t) => t,
        None => w.default_truncation(dh_max)?,
    };
    let kernel = SineKernel::new(w, t_trunc, 1.25 * max_spread + w.gamma);
    let split0 = chain::find_gap(&spectra[0].values, w.gamma)?;
    let rank = split0.lower_count;
    let n = spectra[0].values.len();
    let v0 = spectra[0].vectors.subcols(0, rank).to_owned();

    let mut u = linalg::identity(n);
    let mut unitaries = vec![u.clone()];
    let mut fidelity_defects = vec![0.0];
    let mut gap_warnings = Vec::new();
    let mut tail_error = 0.0f64;
    let mut max_herm = 0.0f64;
    let mut max_unit = 0.0f64;
    for (k, pair) in s_grid.windows(2).enumerate() {
        let ds = (pair[1] - pair[0]) / opts.substeps as f64;
        for step in 0..opts.substeps {
            let mid = pair[0] + (step as f64 + 0.5) * ds;
            let g = generator_with_kernel(phi, volume, mid, w, &kernel)?;
            if g.gap.is_none() {
                gap_warnings.push(mid);
            }
            tail_error = tail_error.max(g.tail_error);
            max_herm = max_herm.max(g.hermiticity_defect);
            let step_u = linalg::expm_hermitian(&g.matrix, -ds)?;
            u = linalg::polar_unitary(&(&step_u * &u))?;
        }
        max_unit = max_unit.max(linalg::unitarity_defect(&u));
        let vs = spectra[k + 1].vectors.subcols(0, rank);
        let q = vs.adjoint() * &u * &v0;
        let overlap = linalg::fro_norm(&q).powi(2);
        fidelity_defects.push((1.0 - overlap / rank as f64).max(0.0));
        unitaries.push(u.clone());
    }
    if max_unit > 1e-10 {
        return Err(Error::NotConverged(format!("flow unitarity drifted to {max_unit:.3e}")));
    }
    Ok(FlowResult {
        s_grid: s_grid.to_vec(),
        unitaries,
        fidelity_defects,
        rank,
        t_trunc,
        tail_error,
        max_hermiticity_defect: max_herm,
        max_unitarity_defect: max_unit,
        gap_warnings,
    })
}

/// `g_n(s) = D_{[−n,n]}(s) − D^∪_{[−n,n]}(s)`, with `D^∪` generated by the
/// family cut at the bond `(0, 1)`.
pub fn split_generator(
    template: &InteractionTemplate,
    n: usize,
    s: f64,
    w: &WeightFunction,
    t_trunc: f64,
) -> Result<CMat> {
    let n = n as i64;
    let volume = Volume::new(-n, n)?;
    volume.dim(template.onsite_dim)?;
    let phi = template.instantiate(-n, n)?;
    let dec = phi.restrict(Restriction::Decoupled);
    let h = chain::assemble_hamiltonian(&phi, volume, s)?;
    let hd = chain::assemble_hamiltonian(&dec, volume, s)?;
    let e = linalg::hermitian_eigen(&h)?;
    let ed = linalg::hermitian_eigen(&hd)?;
    let kernel = SineKernel::new(w, t_trunc, spread(&e.values).max(spread(&ed.values)));
    let d = generator_from_parts(&phi, volume, s, w, &kernel, e)?;
    let dd = generator_from_parts(&dec, volume, s, w, &kernel, ed)?;
    Ok(&d.matrix - &dd.matrix)
}

#[derive(Debug, Clone)]
pub struct SplitGeneratorReport {
    /// `‖g_{n+1} − g_n‖` against `n`, with `2(3nΩ₁(n) + Ω₂(n))‖Φ'‖_F`.
    pub curve: DefectCurve,
    /// `‖g_n‖` for every requested `n`.
    pub g_norms: Vec<f64>,
    pub t_trunc: f64,
}

/// Successive differences of `g_n(s)` over consecutive `n_values`.
pub fn generator_split_defect(
    template: &InteractionTemplate,
    s: f64,
    n_values: &[usize],
    w: &WeightFunction,
    t_trunc: f64,
    params: &EnvelopeParams,
    deriv_f_norm: f64,
) -> Result<SplitGeneratorReport> {
    if n_values.windows(2).any(|p| p[1] != p[0] + 1) || n_values.first().is_none_or(|&n| n == 0) {
        return Err(Error::InvalidParameter("n values must be consecutive positive integers".into()));
    }
    let d = template.onsite_dim;
    for &n in n_values {
        Volume::new(-(n as i64), n as i64)?.dim(d)?;
    }
    let gs: Vec<CMat> = n_values.iter().map(|&n| split_generator(template, n, s, w, t_trunc)).collect::<Result<_>>()?;
    let g_norms = gs.iter().map(linalg::op_norm).collect();
    let pad = linalg::identity(d);
    let mut curve = DefectCurve { parameter: Vec::new(), defect: Vec::new(), envelope: Vec::new() };
    for (k, pair) in gs.windows(2).enumerate() {
        let n = n_values[k];
        let lifted = linalg::kron(&linalg::kron(&pad, &pair[0]), &pad);
        curve.parameter.push(n as i64);
        curve.defect.push(linalg::op_norm(&(&pair[1] - &lifted)));
        curve.envelope.push(envelope::generator_split_envelope(n as f64, params, deriv_f_norm)?);
    }
    Ok(SplitGeneratorReport { curve, g_norms, t_trunc })
}
