//! Named model families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fnorm::{Component, Interaction, InteractionTemplate, Schedule};
use crate::linalg::{self, c, kron, CMat};

fn scaled(m: &CMat, s: f64) -> CMat {
    linalg::scale(m, c(s, 0.0))
}

/// `−J σ^z σ^z − h σ^x`, nearest neighbour.
pub fn tfim(j: f64, h: f64) -> InteractionTemplate {
    let z = linalg::pauli_z();
    let mut tpl = InteractionTemplate::new(2);
    if j != 0.0 {
        tpl.push(vec![0, 1], vec![Component::constant(scaled(&kron(&z, &z), -j))]);
    }
    if h != 0.0 {
        tpl.push(vec![0], vec![Component::constant(scaled(&linalg::pauli_x(), -h))]);
    }
    tpl
}

/// TFIM whose field follows `h(s) = h0 + h1 s`.
pub fn tfim_path(j: f64, h0: f64, h1: f64) -> InteractionTemplate {
    let z = linalg::pauli_z();
    let mut tpl = InteractionTemplate::new(2);
    tpl.push(vec![0, 1], vec![Component::constant(scaled(&kron(&z, &z), -j))]);
    tpl.push(
        vec![0],
        vec![Component { schedule: Schedule::Polynomial(vec![-h0, -h1]), matrix: linalg::pauli_x() }],
    );
    tpl
}

/// `J (σ^x σ^x + σ^y σ^y + σ^z σ^z)`, nearest neighbour.
pub fn heisenberg(j: f64) -> InteractionTemplate {
    let mut bond = linalg::zeros(4);
    for k in 1..=3 {
        let p = linalg::pauli(k);
        bond += kron(&p, &p);
    }
    let mut tpl = InteractionTemplate::new(2);
    tpl.push(vec![0, 1], vec![Component::constant(scaled(&bond, j))]);
    tpl
}

/// Spin-1 AKLT bond `S·S + (S·S)²/3`.
pub fn aklt_bond() -> CMat {
    let (sx, sy, sz) = linalg::spin_matrices(3);
    let ss = kron(&sx, &sx) + kron(&sy, &sy) + kron(&sz, &sz);
    let sq = &ss * &ss;
    ss + scaled(&sq, 1.0 / 3.0)
}

pub fn aklt() -> InteractionTemplate {
    let mut tpl = InteractionTemplate::new(3);
    tpl.push(vec![0, 1], vec![Component::constant(aklt_bond())]);
    tpl
}

/// `Σ_{1 ≤ r ≤ range} J (1+r)^{−α} σ^z σ^z − h σ^x`.
pub fn power_law_ising(j: f64, alpha: f64, h: f64, range: i64) -> InteractionTemplate {
    let z = linalg::pauli_z();
    let mut tpl = InteractionTemplate::new(2);
    for r in 1..=range {
        let coeff = j * (1.0 + r as f64).powf(-alpha);
        tpl.push(vec![0, r], vec![Component::constant(scaled(&kron(&z, &z), coeff))]);
    }
    if h != 0.0 {
        tpl.push(vec![0], vec![Component::constant(scaled(&linalg::pauli_x(), -h))]);
    }
    tpl
}

/// Random two-site Pauli couplings `c_{xy} (1+|x−y|)^{−α} P^a_x P^b_y` on
/// every pair in `[a, b]` plus random single-site fields; coefficients are
/// uniform in `[−1, 1]`.
pub fn random_power_law(a: i64, b: i64, alpha: f64, seed: u64) -> Result<Interaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = Interaction::new(2)?;
    for x in a..=b {
        let mut field = linalg::zeros(2);
        for k in 1..=3 {
            field += scaled(&linalg::pauli(k), rng.random_range(-1.0..1.0));
        }
        phi.add(&[x], field)?;
        for y in (x + 1)..=b {
            let r = (y - x) as f64;
            let p = rng.random_range(1..=3usize);
            let q = rng.random_range(1..=3usize);
            let coeff: f64 = rng.random_range(-1.0..1.0) * (1.0 + r).powf(-alpha);
            let op = kron(&linalg::pauli(p), &linalg::pauli(q));
            phi.add(&[x, y], scaled(&op, coeff))?;
        }
    }
    Ok(phi)
}

/// Same as [`random_power_law`] but each coupling carries a different
/// smooth time profile `1 + ε sin(ω t + φ)`.
pub fn random_power_law_driven(a: i64, b: i64, alpha: f64, seed: u64, eps: f64) -> Result<Interaction> {
    let base = random_power_law(a, b, alpha, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut phi = Interaction::new(2)?;
    for t in base.terms() {
        let omega: f64 = rng.random_range(0.5..2.0);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let sched = Schedule::Custom(std::sync::Arc::new(move |s: f64| 1.0 + eps * (omega * s + phase).sin()));
        phi.insert(&t.support, Component { schedule: sched, matrix: t.at(0.0) })?;
    }
    Ok(phi)
}
