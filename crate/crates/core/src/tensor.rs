//! Index arithmetic for operators on `nsites` tensor factors of dimension
//! `d`. Position 0 is the most significant digit, i.e. factors are ordered
//! by ascending site index.

use faer::Mat;

use crate::linalg::{c, c64, CMat};

fn strides(d: usize, nsites: usize) -> Vec<usize> {
    let mut s = vec![1usize; nsites];
    for k in (0..nsites.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * d;
    }
    s
}

/// Splits a full index into (index over `positions`, index over the rest).
struct Splitter {
    d: usize,
    pos_strides: Vec<usize>,
    rest_strides: Vec<usize>,
}

impl Splitter {
    fn new(d: usize, nsites: usize, positions: &[usize]) -> Self {
        let full = strides(d, nsites);
        let rest: Vec<usize> = (0..nsites).filter(|p| !positions.contains(p)).collect();
        Self {
            d,
            pos_strides: positions.iter().map(|&p| full[p]).collect(),
            rest_strides: rest.iter().map(|&p| full[p]).collect(),
        }
    }

    /// Full index from (local, rest) digit values.
    fn join(&self, local: usize, rest: usize) -> usize {
        let mut idx = 0;
        let mut l = local;
        for s in self.pos_strides.iter().rev() {
            idx += (l % self.d) * s;
            l /= self.d;
        }
        let mut r = rest;
        for s in self.rest_strides.iter().rev() {
            idx += (r % self.d) * s;
            r /= self.d;
        }
        idx
    }
}

/// `m` (acting on `positions`, in the listed order) tensored with the
/// identity on all other positions.
pub fn embed_positions(m: &CMat, d: usize, nsites: usize, positions: &[usize]) -> CMat {
    let dim = d.pow(nsites as u32);
    let local = d.pow(positions.len() as u32);
    let rest = dim / local;
    let sp = Splitter::new(d, nsites, positions);
    let mut out = Mat::<c64>::zeros(dim, dim);
    for r in 0..rest {
        let idx: Vec<usize> = (0..local).map(|l| sp.join(l, r)).collect();
        for (j, &cj) in idx.iter().enumerate() {
            for (i, &ri) in idx.iter().enumerate() {
                let v = m[(i, j)];
                if v != c(0.0, 0.0) {
                    out[(ri, cj)] = v;
                }
            }
        }
    }
    out
}

/// Partial trace over `traced` positions (unnormalised). The result acts on
/// the remaining positions in ascending order.
pub fn partial_trace(m: &CMat, d: usize, nsites: usize, traced: &[usize]) -> CMat {
    let keep: Vec<usize> = (0..nsites).filter(|p| !traced.contains(p)).collect();
    let kd = d.pow(keep.len() as u32);
    let td = d.pow(traced.len() as u32);
    // `keep` positions play the role of the local block here
    let sp = Splitter::new(d, nsites, &keep);
    let mut out = Mat::<c64>::zeros(kd, kd);
    for j in 0..kd {
        for i in 0..kd {
            let mut acc = c(0.0, 0.0);
            for t in 0..td {
                acc += m[(sp.join(i, t), sp.join(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `out = (m on positions) v` for a state vector on `nsites` factors.
pub fn apply_local(m: &CMat, d: usize, nsites: usize, positions: &[usize], v: &[c64], out: &mut [c64]) {
    let dim = d.pow(nsites as u32);
    let local = d.pow(positions.len() as u32);
    let rest = dim / local;
    let sp = Splitter::new(d, nsites, positions);
    let mut idx = vec![0usize; local];
    for r in 0..rest {
        for (l, slot) in idx.iter_mut().enumerate() {
            *slot = sp.join(l, r);
        }
        for (i, &ri) in idx.iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (j, &cj) in idx.iter().enumerate() {
                acc += m[(i, j)] * v[cj];
            }
            out[ri] += acc;
        }
    }
}

/// `(m on positions) · rhs` for a full-volume matrix `rhs`, column by column.
pub fn apply_local_columns(m: &CMat, d: usize, nsites: usize, positions: &[usize], rhs: &CMat) -> CMat {
    let mut out = Mat::<c64>::zeros(rhs.nrows(), rhs.ncols());
    for j in 0..rhs.ncols() {
        apply_local(m, d, nsites, positions, rhs.col_as_slice(j), out.col_as_slice_mut(j));
    }
    out
}

/// `[M, m on positions]` without forming the embedded local factor.
pub fn commutator_with_local(big: &CMat, m: &CMat, d: usize, nsites: usize, positions: &[usize]) -> CMat {
    let left = apply_local_columns(m, d, nsites, positions, big);
    // M·B = (B†·M†)†
    let big_adj = big.adjoint().to_owned();
    let m_adj = m.adjoint().to_owned();
    let right = apply_local_columns(&m_adj, d, nsites, positions, &big_adj).adjoint().to_owned();
    right - left
}

/// Reduced density matrix of a pure state on the `keep` positions.
pub fn reduced_density(psi: &[c64], d: usize, nsites: usize, keep: &[usize]) -> CMat {
    let kd = d.pow(keep.len() as u32);
    let dim = d.pow(nsites as u32);
    let rest = dim / kd;
    let sp = Splitter::new(d, nsites, keep);
    let mut out = Mat::<c64>::zeros(kd, kd);
    for r in 0..rest {
        let amps: Vec<c64> = (0..kd).map(|l| psi[sp.join(l, r)]).collect();
        for j in 0..kd {
            let aj = amps[j].conj();
            for i in 0..kd {
                out[(i, j)] += amps[i] * aj;
            }
        }
    }
    out
}

/// Does `m` act as the identity on position `p` (i.e. equal its own
/// normalised partial trace over `p`, re-embedded)?
pub fn acts_trivially_on(m: &CMat, d: usize, nsites: usize, p: usize, tol: f64) -> bool {
    let reduced = partial_trace(m, d, nsites, &[p]);
    let scaled = crate::linalg::scale(&reduced, c(1.0 / d as f64, 0.0));
    let keep: Vec<usize> = (0..nsites).filter(|&q| q != p).collect();
    let back = embed_positions(&scaled, d, nsites, &keep);
    crate::linalg::max_abs_diff(&back, m) <= tol
}
