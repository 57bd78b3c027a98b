//! Time reversal and the Z₂-index of translation-invariant matrix product states.
//!
//! Transfer maps act on `D × D` bond matrices through column-major
//! vectorisation, `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use faer::Mat;

use crate::chain::LocalOperator;
use crate::error::{Error, Result};
use crate::fnorm::{unit_grid, Interaction};
use crate::linalg::{self, c, c64, CMat};

/// `Ξ(A) = V Ā V*` sitewise, with `V = V₀^{⊗|X|}`.
#[derive(Debug, Clone)]
pub struct TimeReversal {
    pub onsite_unitary: CMat,
}

impl TimeReversal {
    pub fn new(v0: CMat) -> Result<Self> {
        if v0.nrows() != v0.ncols() || v0.nrows() == 0 {
            return Err(Error::DimensionMismatch(v0.nrows(), v0.ncols()));
        }
        let defect = linalg::unitarity_defect(&v0);
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!("V0 is not unitary (defect {defect:.3e})")));
        }
        Ok(Self { onsite_unitary: v0 })
    }

    /// Entrywise complex conjugation (`V₀ = 𝟙`).
    pub fn conjugation(d: usize) -> Self {
        Self { onsite_unitary: linalg::identity(d) }
    }

    /// `V₀ = e^{iπS^y}` for spin `(d−1)/2`.
    pub fn spin_flip(d: usize) -> Result<Self> {
        let (_, sy, _) = linalg::spin_matrices(d);
        Self::new(linalg::expm_hermitian(&sy, -std::f64::consts::PI)?)
    }

    pub fn onsite_dim(&self) -> usize {
        self.onsite_unitary.nrows()
    }

    /// `±1` with `V₀ V̄₀ = ±𝟙`, or `None` when the action is not involutive.
    pub fn square_sign(&self) -> Option<i8> {
        let v = &self.onsite_unitary;
        let m = v * v.conjugate();
        let id = linalg::identity(v.nrows());
        if linalg::max_abs_diff(&m, &id) < 1e-12 {
            Some(1)
        } else if linalg::max_abs_diff(&m, &linalg::scale(&id, c(-1.0, 0.0))) < 1e-12 {
            Some(-1)
        } else {
            None
        }
    }

    /// The action on stacked chains, `V₀ ⊗ V₀'`.
    pub fn stack(&self, other: &TimeReversal) -> TimeReversal {
        TimeReversal { onsite_unitary: linalg::kron(&self.onsite_unitary, &other.onsite_unitary) }
    }

    fn on_sites(&self, n: usize) -> CMat {
        let mut v = linalg::identity(1);
        for _ in 0..n {
            v = linalg::kron(&v, &self.onsite_unitary);
        }
        v
    }

    /// `V Ā V*` on the full support of `m`, which must be `d^n × d^n`.
    pub fn apply_matrix(&self, m: &CMat) -> Result<CMat> {
        let d = self.onsite_dim();
        let mut n = 0;
        let mut dim = 1;
        while dim < m.nrows() {
            dim *= d;
            n += 1;
        }
        if dim != m.nrows() || m.nrows() != m.ncols() {
            return Err(Error::OnsiteDimMismatch { expected: d, got: m.nrows() });
        }
        let v = self.on_sites(n);
        Ok(&v * m.conjugate() * v.adjoint())
    }

    pub fn apply(&self, a: &LocalOperator) -> Result<LocalOperator> {
        if a.onsite_dim != self.onsite_dim() {
            return Err(Error::OnsiteDimMismatch { expected: self.onsite_dim(), got: a.onsite_dim });
        }
        LocalOperator::new(a.support.clone(), self.apply_matrix(&a.matrix)?, a.onsite_dim)
    }

    /// `‖Ξ(A) − A‖`.
    pub fn invariance_defect(&self, a: &LocalOperator) -> Result<f64> {
        Ok(linalg::op_norm(&(&self.apply(a)?.matrix - &a.matrix)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub worst_defect: f64,
}

/// `max_{X, t} ‖Ξ(Φ(X, t)) − Φ(X, t)‖` on a uniform `t` grid; invariant iff `≤ 1e-10`.
pub fn check_interaction_invariance(xi: &TimeReversal, phi: &Interaction, t_samples: usize) -> Result<InvarianceReport> {
    if phi.onsite_dim() != xi.onsite_dim() {
        return Err(Error::OnsiteDimMismatch { expected: xi.onsite_dim(), got: phi.onsite_dim() });
    }
    let grid = unit_grid(t_samples.max(1));
    let mut worst = 0.0f64;
    for term in phi.terms() {
        for &t in &grid {
            let m = term.at(t);
            worst = worst.max(linalg::op_norm(&(&xi.apply_matrix(&m)? - &m)));
        }
    }
    Ok(InvarianceReport { invariant: worst <= 1e-10, worst_defect: worst })
}

/// Site tensors `A^i`, `i = 0..d`, each `D × D`.
#[derive(Debug, Clone)]
pub struct MpsTensor {
    pub tensors: Vec<CMat>,
    /// Set by [`MpsTensor::canonical`]: the transfer map has a simple top eigenvalue.
    pub injective: bool,
}

fn transfer_matrix(a: &[CMat], b: &[CMat]) -> CMat {
    // X ↦ Σ_i A^i X B^{i*}
    let dd = a[0].nrows() * b[0].nrows();
    let mut m = linalg::zeros(dd);
    for (ai, bi) in a.iter().zip(b) {
        m += linalg::kron(&bi.conjugate().to_owned(), ai);
    }
    m
}

fn unvec(u: &[c64], rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |i, j| u[i + rows * j])
}

struct TopEigen {
    value: c64,
    second_modulus: f64,
    vector: Vec<c64>,
}

fn top_eigen(m: &CMat) -> Result<TopEigen> {
    let eig = m.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].norm().total_cmp(&s[i].norm()));
    let k = order[0];
    let vector = (0..n).map(|i| eig.U()[(i, k)]).collect();
    Ok(TopEigen { value: s[k], second_modulus: order.get(1).map(|&j| s[j].norm()).unwrap_or(0.0), vector })
}

fn hermitian_power(m: &CMat, p: f64) -> Result<CMat> {
    let e = linalg::hermitian_eigen(m)?;
    Ok(e.apply_fn(|x| c(x.max(0.0).powf(p), 0.0)))
}

impl MpsTensor {
    pub fn new(tensors: Vec<CMat>) -> Result<Self> {
        let Some(first) = tensors.first() else {
            return Err(Error::InvalidParameter("MPS needs at least one tensor".into()));
        };
        let dbond = first.nrows();
        if dbond == 0 || tensors.iter().any(|a| a.nrows() != dbond || a.ncols() != dbond) {
            return Err(Error::DimensionMismatch(dbond, tensors.iter().map(|a| a.ncols()).find(|&n| n != dbond).unwrap_or(0)));
        }
        Ok(Self { tensors, injective: false })
    }

    pub fn physical_dim(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_dim(&self) -> usize {
        self.tensors[0].nrows()
    }

    /// `A^{+1} = √(2/3)σ⁺`, `A^0 = −√(1/3)σ^z`, `A^{−1} = −√(2/3)σ⁻`, in the basis `m = 1, 0, −1`.
    pub fn aklt() -> Self {
        let sp = linalg::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let sm = linalg::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let a = (2.0f64 / 3.0).sqrt();
        let b = (1.0f64 / 3.0).sqrt();
        Self {
            tensors: vec![
                linalg::scale(&sp, c(a, 0.0)),
                linalg::scale(&linalg::pauli_z(), c(-b, 0.0)),
                linalg::scale(&sm, c(-a, 0.0)),
            ],
            injective: false,
        }
    }

    /// `D = 1` product state with on-site vector `psi`.
    pub fn product(psi: &[c64]) -> Result<Self> {
        Self::new(psi.iter().map(|&z| Mat::from_fn(1, 1, |_, _| z)).collect())
    }

    /// `A^{(i,k)} = A^i ⊗ B^k`.
    pub fn stack(&self, other: &MpsTensor) -> MpsTensor {
        let mut tensors = Vec::with_capacity(self.physical_dim() * other.physical_dim());
        for a in &self.tensors {
            for b in &other.tensors {
                tensors.push(linalg::kron(a, b));
            }
        }
        MpsTensor { tensors, injective: false }
    }

    /// `A^i ↦ e^{iφ} U A^i U*`.
    pub fn gauge(&self, u: &CMat, phase: f64) -> MpsTensor {
        let z = c64::from_polar(1.0, phase);
        MpsTensor {
            tensors: self.tensors.iter().map(|a| linalg::scale(&(u * a * u.adjoint()), z)).collect(),
            injective: self.injective,
        }
    }

    /// Right-canonical form `Σ_i A^i A^{i*} = 𝟙` with transfer spectral radius 1.
    pub fn canonical(&self) -> Result<MpsTensor> {
        let m = transfer_matrix(&self.tensors, &self.tensors);
        let top = top_eigen(&m)?;
        let lam = top.value.norm();
        if !(lam > 0.0) || top.second_modulus > lam * (1.0 - 1e-8) {
            return Err(Error::NotInjective(format!(
                "transfer spectrum |λ1| = {lam:.6e}, |λ2| = {:.6e}",
                top.second_modulus
            )));
        }
        let dbond = self.bond_dim();
        let mut r = unvec(&top.vector, dbond, dbond);
        let tr = linalg::trace(&r);
        r = linalg::scale(&r, tr.conj() / tr.norm());
        let r = linalg::hermitian_part(&r);
        let ev = linalg::hermitian_eigen(&r)?;
        if ev.values[0] <= 1e-12 * ev.values[dbond - 1] {
            return Err(Error::NotInjective("right fixed point is not positive definite".into()));
        }
        let half = hermitian_power(&r, 0.5)?;
        let inv_half = hermitian_power(&r, -0.5)?;
        let s = c(1.0 / lam.sqrt(), 0.0);
        let tensors = self.tensors.iter().map(|a| linalg::scale(&(&inv_half * a * &half), s)).collect();
        Ok(MpsTensor { tensors, injective: true })
    }

    /// `‖Σ_i A^i A^{i*} − 𝟙‖_max`.
    pub fn right_canonical_defect(&self) -> f64 {
        let mut s = linalg::zeros(self.bond_dim());
        for a in &self.tensors {
            s += a * a.adjoint();
        }
        linalg::max_abs_diff(&s, &linalg::identity(self.bond_dim()))
    }

    /// `Ã^i = Σ_j (V₀)_{ij} conj(A^j)`.
    pub fn time_reversed(&self, xi: &TimeReversal) -> Result<MpsTensor> {
        let d = self.physical_dim();
        if xi.onsite_dim() != d {
            return Err(Error::OnsiteDimMismatch { expected: d, got: xi.onsite_dim() });
        }
        let v = &xi.onsite_unitary;
        let tensors = (0..d)
            .map(|i| {
                let mut acc = linalg::zeros(self.bond_dim());
                for j in 0..d {
                    acc += linalg::scale(&self.tensors[j].conjugate().to_owned(), v[(i, j)]);
                }
                acc
            })
            .collect();
        Ok(MpsTensor { tensors, injective: self.injective })
    }
}

#[derive(Debug, Clone)]
pub struct TrIndex {
    /// `±1`.
    pub index: i8,
    /// Phase in `Ã^i = e^{iθ} V A^i V*`.
    pub theta: f64,
    pub witness: CMat,
    /// `max_i ‖Ã^i − e^{iθ} V A^i V*‖`.
    pub residual: f64,
    /// `‖V V̄ − index · 𝟙‖_max`.
    pub sign_defect: f64,
    /// `|μ|` of the mixed transfer map (1 for an invariant state).
    pub overlap: f64,
}

/// Sign of `V V̄` for the bond unitary implementing time reversal.
pub fn mps_tr_index(mps: &MpsTensor, xi: &TimeReversal) -> Result<TrIndex> {
    let a = mps.canonical()?;
    let at = a.time_reversed(xi)?;
    let top = top_eigen(&transfer_matrix(&at.tensors, &a.tensors))?;
    let overlap = top.value.norm();
    if (overlap - 1.0).abs() > 1e-8 {
        return Err(Error::NotInvariant((overlap - 1.0).abs()));
    }
    let dbond = a.bond_dim();
    let x = unvec(&top.vector, dbond, dbond);
    let v = linalg::polar_unitary(&x)?;
    let theta = top.value.arg();
    let z = c64::from_polar(1.0, theta);
    let mut residual = 0.0f64;
    for (ti, ai) in at.tensors.iter().zip(&a.tensors) {
        let rhs = linalg::scale(&(&v * ai * v.adjoint()), z);
        residual = residual.max(linalg::op_norm(&(ti - &rhs)));
    }
    if residual > 1e-8 {
        return Err(Error::NotInvariant(residual));
    }
    let vv = &v * v.conjugate();
    let id = linalg::identity(dbond);
    let plus = linalg::max_abs_diff(&vv, &id);
    let minus = linalg::max_abs_diff(&vv, &linalg::scale(&id, c(-1.0, 0.0)));
    let (index, sign_defect) = if plus <= minus { (1, plus) } else { (-1, minus) };
    if sign_defect > 1e-6 {
        return Err(Error::AmbiguousWitness(sign_defect));
    }
    Ok(TrIndex { index, theta, witness: v, residual, sign_defect, overlap })
}

/// Half-chain Schmidt spectrum grouped by multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    /// Squared Schmidt values, descending.
    pub spectrum: Vec<f64>,
    /// `(value, multiplicity)` groups at relative tolerance `1e-8`.
    pub groups: Vec<(f64, usize)>,
}

impl DegeneracyReport {
    pub fn all_even(&self) -> bool {
        self.groups.iter().all(|(_, m)| m % 2 == 0)
    }
}

/// Eigenvalues of the left fixed point of the right-canonical transfer map.
pub fn entanglement_degeneracy_probe(mps: &MpsTensor) -> Result<DegeneracyReport> {
    let a = mps.canonical()?;
    let dbond = a.bond_dim();
    // X ↦ Σ_i A^{i*} X A^i
    let adj: Vec<CMat> = a.tensors.iter().map(|t| t.adjoint().to_owned()).collect();
    let top = top_eigen(&transfer_matrix(&adj, &adj))?;
    let l = linalg::hermitian_part(&{
        let x = unvec(&top.vector, dbond, dbond);
        let tr = linalg::trace(&x);
        linalg::scale(&x, tr.conj() / (tr.norm() * tr.norm()))
    });
    let mut spectrum = linalg::hermitian_eigen(&l)?.values;
    spectrum.reverse();
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &x in &spectrum {
        match groups.last_mut() {
            Some((v, m)) if (x - *v).abs() <= 1e-8 * v.abs().max(x.abs()) => *m += 1,
            _ => groups.push((x, 1)),
        }
    }
    Ok(DegeneracyReport { spectrum, groups })
}
