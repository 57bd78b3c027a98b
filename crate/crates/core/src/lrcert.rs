//! Support-independent Lieb-Robinson constants and brute-force certification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{self, Volume};
use crate::error::{Error, Result};
use crate::fnorm::{self, FSpec, Interaction};
use crate::linalg::{self, CMat};
use crate::tensor;

/// `κ(β) = 16 / (C_β (β/2 − 1)²)` and `ν = 2 ‖Φ‖ C_β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LRConstants {
    pub kappa: f64,
    pub nu: f64,
    pub beta: f64,
    pub c_beta: f64,
    pub f_norm: f64,
}

impl LRConstants {
    /// `e^{ν|t|} − 1`.
    pub fn growth(&self, t: f64) -> f64 {
        (self.nu * t.abs()).exp_m1()
    }
}

/// Constants from an explicit convolution constant.
pub fn lr_constants_with(beta: f64, f_norm: f64, c_beta: f64) -> Result<LRConstants> {
    if beta <= 2.0 {
        return Err(Error::BetaTooSmall { beta, min: 2.0 });
    }
    if !(f_norm >= 0.0 && c_beta >= 1.0) {
        return Err(Error::InvalidParameter(format!("need f_norm >= 0 and C >= 1, got {f_norm}, {c_beta}")));
    }
    let half = beta / 2.0 - 1.0;
    Ok(LRConstants { kappa: 16.0 / (c_beta * half * half), nu: 2.0 * f_norm * c_beta, beta, c_beta, f_norm })
}

/// Constants using the numerically estimated convolution constant of `spec`.
pub fn lr_constants(spec: &FSpec, f_norm: f64) -> Result<LRConstants> {
    if spec.beta <= 2.0 {
        return Err(Error::BetaTooSmall { beta: spec.beta, min: 2.0 });
    }
    let c = fnorm::convolution_constant_cached(spec)?;
    lr_constants_with(spec.beta, f_norm, c.value)
}

fn shifted(spec: &FSpec) -> Result<FSpec> {
    spec.with_beta(spec.beta - 2.0)
}

/// Right side of the annulus bound, `κ‖A‖‖B‖(e^{ν|t|}−1) F_{β−2}(min{p,c})`.
#[allow(clippy::too_many_arguments)]
pub fn lr_bound_annulus(
    k: &LRConstants,
    spec: &FSpec,
    n: i64,
    m: i64,
    c: i64,
    p: i64,
    t: f64,
    norm_a: f64,
    norm_b: f64,
) -> Result<f64> {
    if c >= m || m >= n || c < 0 || p < 0 || m <= 0 {
        return Err(Error::BadGeometry(format!("need 0 <= c < m < n and p >= 0 (n={n}, m={m}, c={c}, p={p})")));
    }
    let f = fnorm::f_eval(&shifted(spec)?, p.min(c) as u64);
    Ok(k.kappa * norm_a * norm_b * k.growth(t) * f)
}

/// Right side of the disjoint-support bound, `κ‖A‖‖B‖(e^{ν|t|}−1) F_{β−2}(dist)`.
pub fn lr_bound_disjoint(k: &LRConstants, spec: &FSpec, dist: u64, t: f64, norm_a: f64, norm_b: f64) -> Result<f64> {
    if dist == 0 {
        return Err(Error::BadGeometry("disjoint supports need distance >= 1".into()));
    }
    let f = fnorm::f_eval(&shifted(spec)?, dist);
    Ok(k.kappa * norm_a * norm_b * k.growth(t) * f)
}

/// Support configuration of one certification cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    /// `A` on `An(m, n)`, `B` on `Λ ∖ An(m − c, n + p)`.
    Annulus { m: i64, n: i64, c: i64, p: i64 },
    /// `A` on `x`, `B` on `y`, `max x < min y`.
    Disjoint { x: Vec<i64>, y: Vec<i64> },
}

impl Geometry {
    pub fn label(&self) -> String {
        match self {
            Geometry::Annulus { m, n, c, p } => format!("annulus(m={m};n={n};c={c};p={p})"),
            Geometry::Disjoint { x, y } => format!("disjoint(x={}..{};y={}..{})", x[0], x[x.len() - 1], y[0], y[y.len() - 1]),
        }
    }

    /// `min{p, c}` or `d(X, Y)`.
    pub fn separation(&self) -> u64 {
        match self {
            Geometry::Annulus { c, p, .. } => (*p.min(c)) as u64,
            Geometry::Disjoint { x, y } => (y[0] - x[x.len() - 1]) as u64,
        }
    }

    /// Supports of `A` and `B` inside `volume`.
    pub fn supports(&self, volume: Volume) -> Result<(Vec<i64>, Vec<i64>)> {
        match self {
            Geometry::Annulus { m, n, c, p } => {
                let a = chain::annulus(*m, *n)?;
                if !(volume.contains(-n - p) && volume.contains(n + p)) {
                    return Err(Error::BadGeometry(format!(
                        "[-{0}, {0}] is not inside [{1}, {2}]",
                        n + p,
                        volume.a,
                        volume.b
                    )));
                }
                let outer = chain::annulus(m - c, n + p)?;
                let b: Vec<i64> = volume.sites().filter(|x| !outer.contains(x)).collect();
                if b.is_empty() {
                    return Err(Error::BadGeometry("no room for B".into()));
                }
                Ok((a, b))
            }
            Geometry::Disjoint { x, y } => {
                let ok = !x.is_empty()
                    && !y.is_empty()
                    && x.windows(2).all(|w| w[0] < w[1])
                    && y.windows(2).all(|w| w[0] < w[1])
                    && x[x.len() - 1] < y[0]
                    && volume.contains(x[0])
                    && volume.contains(y[y.len() - 1]);
                if !ok {
                    return Err(Error::BadGeometry(format!("bad disjoint supports {x:?}, {y:?}")));
                }
                Ok((x.clone(), y.clone()))
            }
        }
    }

    pub fn bound(&self, k: &LRConstants, spec: &FSpec, t: f64, norm_a: f64, norm_b: f64) -> Result<f64> {
        match self {
            Geometry::Annulus { m, n, c, p } => lr_bound_annulus(k, spec, *n, *m, *c, *p, t, norm_a, norm_b),
            Geometry::Disjoint { .. } => lr_bound_disjoint(k, spec, self.separation(), t, norm_a, norm_b),
        }
    }
}

/// One brute-force sample against its bound.
#[derive(Debug, Clone, Serialize)]
pub struct LRCertificate {
    pub geometry: String,
    pub volume: (i64, i64),
    pub t: f64,
    pub observable: String,
    pub separation: u64,
    pub support_a: usize,
    pub bound: f64,
    pub measured: f64,
    pub ratio: f64,
    pub seed: u64,
}

/// SplitMix64 step: decorrelated per-cell seeds from one campaign seed.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Observable family for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Haar(usize),
    /// Pauli strings `(a, b)`: same Pauli on every site of each support.
    Pauli(usize, usize),
}

impl Observable {
    fn label(&self) -> String {
        const P: [&str; 4] = ["I", "X", "Y", "Z"];
        match self {
            Observable::Haar(k) => format!("haar{k}"),
            Observable::Pauli(a, b) => format!("pauli{}{}", P[*a], P[*b]),
        }
    }
}

/// Deterministic worst-case candidates added to every cell.
pub const PAULI_CANDIDATES: [(usize, usize); 3] = [(3, 1), (1, 3), (2, 3)];

fn pauli_string(k: usize, sites: usize) -> CMat {
    let mut out = linalg::identity(1);
    for _ in 0..sites {
        out = linalg::kron(&out, &linalg::pauli(k));
    }
    out
}

/// `‖[U* A U, B]‖` for local `A`, `B` on `volume`.
pub fn evolved_commutator_norm(u: &CMat, a: &CMat, pos_a: &[usize], b: &CMat, pos_b: &[usize], d: usize, nsites: usize) -> f64 {
    let au = tensor::apply_local_columns(a, d, nsites, pos_a, u);
    let tau = u.adjoint() * au;
    let comm = tensor::commutator_with_local(&tau, b, d, nsites, pos_b);
    if comm.nrows() <= 256 {
        linalg::op_norm(&comm)
    } else {
        linalg::op_norm_krylov(&comm)
    }
}

/// Certification request.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub spec: FSpec,
    pub volume: Volume,
    pub geometries: Vec<Geometry>,
    pub times: Vec<f64>,
    /// Haar samples per (geometry, t); Pauli candidates are always added.
    pub samples: usize,
    pub seed: u64,
}

/// Runs every (geometry, t, observable) cell; fails fast on any violation.
pub fn certify_lr(phi: &Interaction, campaign: &Campaign) -> Result<(LRConstants, Vec<LRCertificate>)> {
    let spec = &campaign.spec;
    let volume = campaign.volume;
    let d = phi.onsite_dim();
    let restricted = phi.within(volume.a, volume.b);
    let fn_rep = fnorm::f_norm(&restricted, spec, 33)?;
    let k = lr_constants(spec, fn_rep.value)?;
    let nsites = volume.nsites();
    volume.dim(d)?;

    let supports: Vec<(Vec<usize>, Vec<usize>)> = campaign
        .geometries
        .iter()
        .map(|g| {
            let (a, b) = g.supports(volume)?;
            Ok((
                a.iter().map(|&x| volume.position(x)).collect(),
                b.iter().map(|&x| volume.position(x)).collect(),
            ))
        })
        .collect::<Result<_>>()?;

    let props: Vec<CMat> = if restricted.is_time_independent() {
        let h = chain::assemble_hamiltonian(&restricted, volume, 0.0)?;
        let eig = linalg::hermitian_eigen(&h)?;
        campaign.times.par_iter().map(|&t| eig.propagator(t)).collect()
    } else {
        campaign.times.par_iter().map(|&t| chain::propagator(&restricted, volume, t)).collect::<Result<_>>()?
    };

    let mut observables: Vec<Observable> = (0..campaign.samples).map(Observable::Haar).collect();
    observables.extend(PAULI_CANDIDATES.iter().map(|&(a, b)| Observable::Pauli(a, b)));

    let mut cells = Vec::new();
    for (gi, _) in campaign.geometries.iter().enumerate() {
        for ti in 0..campaign.times.len() {
            for &obs in &observables {
                cells.push((gi, ti, obs));
            }
        }
    }

    let certs = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(gi, ti, obs))| {
            let geom = &campaign.geometries[gi];
            let (pa, pb) = &supports[gi];
            let t = campaign.times[ti];
            let seed = cell_seed(campaign.seed, idx as u64);
            let (a, b) = match obs {
                Observable::Haar(_) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let a = linalg::haar_unitary(d.pow(pa.len() as u32), &mut rng);
                    let b = linalg::haar_unitary(d.pow(pb.len() as u32), &mut rng);
                    (a, b)
                }
                Observable::Pauli(x, y) if d == 2 => (pauli_string(x, pa.len()), pauli_string(y, pb.len())),
                Observable::Pauli(..) => {
                    // spin-1: fall back to seeded Haar unitaries
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (linalg::haar_unitary(d.pow(pa.len() as u32), &mut rng), linalg::haar_unitary(d.pow(pb.len() as u32), &mut rng))
                }
            };
            let measured = evolved_commutator_norm(&props[ti], &a, pa, &b, pb, d, nsites);
            let bound = geom.bound(&k, spec, t, 1.0, 1.0)?;
            if measured > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::BoundViolation {
                    measured,
                    bound,
                    context: format!("{} t={t} {}", geom.label(), obs.label()),
                });
            }
            let ratio = if bound > 0.0 { measured / bound } else { 0.0 };
            Ok(LRCertificate {
                geometry: geom.label(),
                volume: (volume.a, volume.b),
                t,
                observable: obs.label(),
                separation: geom.separation(),
                support_a: pa.len(),
                bound,
                measured,
                ratio,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((k, certs))
}

/// Aggregate view of a certificate list.
#[derive(Debug, Clone, Serialize)]
pub struct LRSummary {
    pub cells: usize,
    pub max_ratio: f64,
    pub violations: usize,
}

pub fn summarize(certs: &[LRCertificate]) -> LRSummary {
    LRSummary {
        cells: certs.len(),
        max_ratio: certs.iter().map(|c| c.ratio).fold(0.0, f64::max),
        violations: certs.iter().filter(|c| c.measured > c.bound * (1.0 + 1e-9) + 1e-12).count(),
    }
}
