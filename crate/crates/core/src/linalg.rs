//! Dense complex linear algebra on top of `faer`: Pauli and spin matrices,
//! Kronecker products, operator norms, Hermitian eigendecompositions,
//! unitary propagators and a Lanczos solver for the large-dimension paths.

use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

/// Above this dimension operator norms use a Krylov iteration instead of a
/// full singular value decomposition.
pub const DENSE_NORM_LIMIT: usize = 1 << 10;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    Mat::zeros(n, n)
}

pub fn from_rows(rows: &[&[c64]]) -> CMat {
    let n = rows.len();
    Mat::from_fn(n, rows[0].len(), |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    Mat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j], 0.0))
}

pub fn pauli_x() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> CMat {
    from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn pauli_z() -> CMat {
    from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// `[1, X, Y, Z]` for a given index in `0..4`.
pub fn pauli(k: usize) -> CMat {
    match k {
        0 => identity(2),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Spin operators `(Sx, Sy, Sz)` for spin `(d-1)/2` in the basis
/// `m = s, s-1, ..., -s`.
pub fn spin_matrices(d: usize) -> (CMat, CMat, CMat) {
    let s = (d as f64 - 1.0) / 2.0;
    let m = |i: usize| s - i as f64;
    let mut sp = zeros(d);
    for i in 1..d {
        // <m+1| S+ |m> with |m> = basis i, |m+1> = basis i-1
        let mi = m(i);
        sp[(i - 1, i)] = c((s * (s + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint().to_owned();
    let sx = scale(&(&sp + &sm), c(0.5, 0.0));
    let sy = scale(&(&sp - &sm), c(0.0, -0.5));
    let sz = Mat::from_fn(d, d, |i, j| if i == j { c(m(i), 0.0) } else { c(0.0, 0.0) });
    (sx, sy, sz)
}

pub fn scale(m: &CMat, s: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_all(factors: &[CMat]) -> CMat {
    let mut out = identity(1);
    for f in factors {
        out = kron(&out, f);
    }
    out
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

/// Largest entry of `M - M*`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

pub fn is_real(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    scale(&(m + m.adjoint()), c(0.5, 0.0))
}

/// Operator norm (largest singular value). Dense decomposition up to
/// [`DENSE_NORM_LIMIT`], Lanczos on `M* M` above.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() <= DENSE_NORM_LIMIT && m.ncols() <= DENSE_NORM_LIMIT {
        op_norm_dense(m)
    } else {
        op_norm_krylov(m)
    }
}

/// Largest singular value via full SVD (Hermitian inputs use the cheaper
/// eigenvalue route).
pub fn op_norm_dense(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == m.ncols() && hermiticity_defect(m) == 0.0 {
        return match m.self_adjoint_eigenvalues(Side::Lower) {
            Ok(ev) => ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
            Err(_) => op_norm_svd(m),
        };
    }
    op_norm_svd(m)
}

pub fn op_norm_svd(m: &CMat) -> f64 {
    match m.singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => op_norm_power(m, 1e-12, 100_000).unwrap_or(f64::NAN),
    }
}

fn deterministic_start(n: usize) -> Vec<c64> {
    // fixed pseudo-random start so that results are reproducible
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let b = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        v.push(c(a, b));
    }
    normalize(&mut v);
    v
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [c64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn matvec(m: &CMat, v: &[c64], out: &mut [c64]) {
    out.iter_mut().for_each(|x| *x = c(0.0, 0.0));
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == c(0.0, 0.0) {
            continue;
        }
        let col = m.col_as_slice(j);
        for (o, a) in out.iter_mut().zip(col) {
            *o += a * vj;
        }
    }
}

pub fn adjoint_matvec(m: &CMat, v: &[c64], out: &mut [c64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = inner(m.col_as_slice(j), v);
    }
}

/// Plain power iteration on `M* M`; the Rayleigh quotient is returned once
/// successive estimates agree to `tol` (relative).
pub fn op_norm_power(m: &CMat, tol: f64, max_iter: usize) -> Result<f64> {
    let (r, n) = (m.nrows(), m.ncols());
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = deterministic_start(n);
    let mut w = vec![c(0.0, 0.0); r];
    let mut prev = 0.0f64;
    for _ in 0..max_iter {
        matvec(m, &v, &mut w);
        let sigma = vec_norm(&w);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        adjoint_matvec(m, &w, &mut v);
        normalize(&mut v);
        if (sigma - prev).abs() <= tol * sigma {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::NotConverged(format!(
        "power iteration did not reach relative tolerance {tol:.1e} in {max_iter} iterations"
    )))
}

/// Largest singular value via Lanczos on the Gram operator `M* M`.
pub fn op_norm_krylov(m: &CMat) -> f64 {
    let n = m.ncols();
    let r = m.nrows();
    let apply = |x: &[c64], y: &mut [c64]| {
        let mut t = vec![c(0.0, 0.0); r];
        matvec(m, x, &mut t);
        adjoint_matvec(m, &t, y);
    };
    match lanczos(apply, n, 1, Which::Largest, 1e-13, 300) {
        Ok(res) => res.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => op_norm_power(m, 1e-12, 10_000).unwrap_or(f64::NAN),
    }
}

/// Operator norm of a Hermitian operator applied matrix-free.
pub fn hermitian_norm_krylov(apply: impl Fn(&[c64], &mut [c64]), n: usize) -> Result<f64> {
    let lo = lanczos(&apply, n, 1, Which::Smallest, 1e-13, 300)?;
    let hi = lanczos(&apply, n, 1, Which::Largest, 1e-13, 300)?;
    Ok(lo.values[0].abs().max(hi.values.last().unwrap().abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    /// Converged Ritz values, ascending (lowest `nev` for `Smallest`,
    /// highest `nev` for `Largest`).
    pub values: Vec<f64>,
    /// Ritz vectors matching `values`.
    pub vectors: Vec<Vec<c64>>,
    pub residuals: Vec<f64>,
    pub steps: usize,
}

/// Lanczos with full reorthogonalisation for a Hermitian operator.
pub fn lanczos(
    apply: impl Fn(&[c64], &mut [c64]),
    n: usize,
    nev: usize,
    which: Which,
    tol: f64,
    max_steps: usize,
) -> Result<LanczosResult> {
    let max_steps = max_steps.min(n);
    let nev = nev.min(n).max(1);
    let mut basis: Vec<Vec<c64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = deterministic_start(n);
    let mut w = vec![c(0.0, 0.0); n];
    let mut last: Option<(Vec<f64>, Mat<f64>)> = None;
    for k in 0..max_steps {
        apply(&q, &mut w);
        let a = inner(&q, &w).re;
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= qi * a;
        }
        if let Some(prev) = basis.last() {
            let b = *beta.last().unwrap();
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= pi * b;
            }
        }
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= bi * proj;
                }
            }
        }
        let b = vec_norm(&w);
        let m = alpha.len();
        let exhausted = b <= 1e-14 * alpha.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        if m >= nev && (m % 4 == 0 || exhausted || k + 1 == max_steps) {
            let t = Mat::<f64>::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = t
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Linalg(format!("{e:?}")))?;
            let vals: Vec<f64> = (0..m).map(|i| eig.S().column_vector()[i]).collect();
            let vecs = eig.U().to_owned();
            let scale = vals.iter().fold(1e-300f64, |s, x| s.max(x.abs()));
            let idx: Vec<usize> = match which {
                Which::Smallest => (0..nev).collect(),
                Which::Largest => (m - nev..m).collect(),
            };
            let converged = exhausted
                || idx.iter().all(|&i| (b * vecs[(m - 1, i)]).abs() <= tol * scale);
            last = Some((vals, vecs));
            if converged {
                break;
            }
        }
        if exhausted {
            break;
        }
        q = w.iter().map(|x| x / b).collect();
        beta.push(b);
    }
    let (vals, vecs) = last.ok_or_else(|| Error::NotConverged("lanczos produced no Ritz pairs".into()))?;
    let m = vals.len();
    let idx: Vec<usize> = match which {
        Which::Smallest => (0..nev).collect(),
        Which::Largest => (m - nev..m).collect(),
    };
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    let mut residuals = Vec::new();
    let mut hv = vec![c(0.0, 0.0); n];
    for &i in &idx {
        let mut v = vec![c(0.0, 0.0); n];
        for (k, bk) in basis.iter().enumerate().take(m) {
            let coef = vecs[(k, i)];
            for (vi, x) in v.iter_mut().zip(bk) {
                *vi += x * coef;
            }
        }
        normalize(&mut v);
        apply(&v, &mut hv);
        let rq = inner(&v, &hv).re;
        let res: f64 = hv.iter().zip(&v).map(|(h, x)| (h - x * rq).norm_sqr()).sum::<f64>().sqrt();
        values.push(vals[i]);
        vectors.push(v);
        residuals.push(res);
    }
    Ok(LanczosResult { values, vectors, residuals, steps: m })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending. Real
/// symmetric inputs take the (roughly twice as fast) real solver.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(h: &CMat) -> Result<HermitianEigen> {
    let n = h.nrows();
    if is_real(h) {
        let hr = Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)].re);
        let eig = hr
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let values = (0..n).map(|i| eig.S().column_vector()[i]).collect();
        let u = eig.U();
        let vectors = Mat::from_fn(n, n, |i, j| c(u[(i, j)], 0.0));
        return Ok(HermitianEigen { values, vectors });
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let values = (0..n).map(|i| eig.S().column_vector()[i].re).collect();
    Ok(HermitianEigen { values, vectors: eig.U().to_owned() })
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> c64) -> CMat {
        let n = self.values.len();
        let phases: Vec<c64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * phases[j]);
        &scaled * self.vectors.adjoint()
    }

    /// `e^{-i t H}`.
    pub fn propagator(&self, t: f64) -> CMat {
        self.apply_fn(|x| c64::from_polar(1.0, -x * t))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

/// `e^{-i t H}` for Hermitian `H`.
pub fn expm_hermitian(h: &CMat, t: f64) -> Result<CMat> {
    Ok(hermitian_eigen(h)?.propagator(t))
}

/// Nearest unitary (polar factor `U V*` of the SVD).
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    let svd = m.svd().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    Ok(svd.U() * svd.V().adjoint())
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn ginibre(n: usize, rng: &mut impl Rng) -> CMat {
    Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase fix on
/// the diagonal of R).
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(n, rng);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<c64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        })
        .collect();
    Mat::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// Random Hermitian matrix (GUE-like) normalised to unit operator norm.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(n, rng);
    let h = hermitian_part(&g);
    let norm = op_norm_dense(&h);
    scale(&h, c(1.0 / norm, 0.0))
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.norm_l2()
}


/// Single-threaded dense kernels, so results do not depend on the thread pool size.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
