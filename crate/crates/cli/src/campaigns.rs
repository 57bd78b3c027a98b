//! One function per subcommand. Each resolves its parameters, runs, and
//! returns CSV tables plus a JSON summary.

use chaincert::chain::{LocalOperator, Volume};
use chaincert::fnorm::{self, FSpec};
use chaincert::linalg::{pauli_x, pauli_z};
use chaincert::lrcert::{self, Campaign, Geometry};
use chaincert::specflow::{self, EnvelopeParams, FlowOptions, Omega2Prefactor, QPowers};
use chaincert::splitlab::{self, GroundState, SplitDynamics};
use chaincert::{z2, Error, Result};
use serde_json::json;

use crate::params::Params;

pub struct Outcome {
    /// `(file name, CSV contents)`.
    pub tables: Vec<(String, String)>,
    pub summary: serde_json::Value,
    /// A bound violation found after all rows were recorded.
    pub violation: Option<Error>,
}

pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self { w }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.w.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

fn f(x: f64) -> String {
    format!("{x:e}")
}

fn sp(p: &mut Params, beta: f64, r: f64, b: f64) -> Result<FSpec> {
    FSpec::new(p.f64("beta", beta)?, p.f64("R", r)?, p.f64("b", b)?)
}

pub fn fnorm(p: &mut Params, seed: u64) -> Result<Outcome> {
    let model = p.model("tfim", seed)?;
    let vol = p.volume(10)?;
    let spec = sp(p, 4.0, 0.0, 1.0)?;
    let samples = p.usize("t_samples", 33)?;
    let phi = model.instantiate(vol.a, vol.b)?;
    let rep = fnorm::f_norm(&phi, &spec, samples)?;
    let deriv = fnorm::derivative_f_norm(&phi, &spec, samples)?;
    let k = lrcert::lr_constants(&spec, rep.value)?;
    let (wx, wy) = rep.witness_pair.unwrap_or((0, 0));
    let mut t = Table::new(&["quantity", "value"]);
    for (name, v) in [
        ("f_norm", f(rep.value)),
        ("derivative_f_norm", f(deriv)),
        ("witness_x", wx.to_string()),
        ("witness_y", wy.to_string()),
        ("truncation_radius", rep.truncation_radius.to_string()),
        ("kappa", f(k.kappa)),
        ("nu", f(k.nu)),
        ("c_beta", f(k.c_beta)),
    ] {
        t.row(&[name.to_string(), v]);
    }
    Ok(Outcome {
        tables: vec![("fnorm.csv".into(), t.finish())],
        summary: json!({
            "f_norm": rep.value,
            "derivative_f_norm": deriv,
            "witness_pair": rep.witness_pair,
            "truncation_radius": rep.truncation_radius,
            "kappa": k.kappa,
            "nu": k.nu,
            "c_beta": k.c_beta,
        }),
        violation: None,
    })
}

/// Single-site pairs from the left edge, two-site blocks at every gap, and
/// every annulus `(m, n, c, p)` with `[−n−p, n+p] ⊆ volume`.
pub fn default_geometries(v: Volume) -> Vec<Geometry> {
    let mut out: Vec<Geometry> = ((v.a + 1)..=v.b).map(|y| Geometry::Disjoint { x: vec![v.a], y: vec![y] }).collect();
    let m = v.a + 1;
    for g in 1.. {
        if m + g + 1 > v.b {
            break;
        }
        out.push(Geometry::Disjoint { x: vec![m - 1, m], y: vec![m + g, m + g + 1] });
    }
    let reach = (-v.a).min(v.b);
    for n in 3..reach {
        for mm in 2..n {
            for c in 1..mm {
                for pp in 1..=(reach - n) {
                    out.push(Geometry::Annulus { m: mm, n, c, p: pp });
                }
            }
        }
    }
    out
}

pub fn lr_certify(p: &mut Params, seed: u64) -> Result<Outcome> {
    let model = p.model("tfim", seed)?;
    let vol = p.volume(10)?;
    let spec = sp(p, 4.0, 0.0, 1.0)?;
    let times = p.f64_list("times", &[0.25, 0.5, 1.0])?;
    let samples = p.usize("samples", 4)?;
    let phi = model.instantiate(vol.a, vol.b)?;
    let campaign = Campaign { spec, volume: vol, geometries: default_geometries(vol), times, samples, seed };
    let (k, certs) = lrcert::certify_lr(&phi, &campaign)?;
    let mut t = Table::new(&["geometry", "t", "observable", "separation", "support_a", "bound", "measured", "ratio", "seed"]);
    for c in &certs {
        t.row(&[
            c.geometry.clone(),
            f(c.t),
            c.observable.clone(),
            c.separation.to_string(),
            c.support_a.to_string(),
            f(c.bound),
            f(c.measured),
            f(c.ratio),
            c.seed.to_string(),
        ]);
    }
    let s = lrcert::summarize(&certs);
    Ok(Outcome {
        tables: vec![("lr_certify.csv".into(), t.finish())],
        summary: json!({ "cells": s.cells, "max_ratio": s.max_ratio, "violations": s.violations, "kappa": k.kappa, "nu": k.nu }),
        violation: None,
    })
}

pub fn split_defects(p: &mut Params, seed: u64) -> Result<Outcome> {
    let model = p.model("tfim", seed)?;
    let vol = p.volume(12)?;
    let spec = sp(p, 4.0, 0.0, 1.0)?;
    let ns = p.usize_list("n", &[1, 2, 3])?;
    let times = p.f64_list("times", &[0.0, 0.5, 1.0])?;
    let r = p.i64("r", 1)?;
    let phi = model.instantiate(vol.a, vol.b)?;
    let d = phi.onsite_dim();
    let mut t = Table::new(&["kind", "n", "t", "defect", "envelope", "ratio"]);
    let mut worst: f64 = 0.0;
    for &time in &times {
        let dynamics = SplitDynamics::with_decoupled(&phi, vol, time)?;
        for &n in &ns {
            let n = n as i64;
            let site = -2 * n;
            let ax = LocalOperator::new(vec![site], if d == 2 { pauli_x() } else { spin_x(d) }, d)?;
            let az = LocalOperator::new(vec![site], if d == 2 { pauli_z() } else { spin_z(d) }, d)?;
            let rows = [
                ("truncation", splitlab::truncation_defect(&phi, &spec, &dynamics, &ax, n, r)?),
                ("decoupling", splitlab::decoupling_defect(&phi, &spec, &dynamics, &az, n)?),
            ];
            for (kind, def) in rows {
                let ratio = if def.envelope > 0.0 { def.defect / def.envelope } else { 0.0 };
                worst = worst.max(ratio);
                t.row(&[kind.into(), n.to_string(), f(time), f(def.defect), f(def.envelope), f(ratio)]);
            }
        }
    }
    Ok(Outcome {
        tables: vec![("split_defects.csv".into(), t.finish())],
        summary: json!({ "max_ratio": worst, "rows": 2 * ns.len() * times.len() }),
        violation: None,
    })
}

fn spin_x(d: usize) -> chaincert::linalg::CMat {
    chaincert::linalg::spin_matrices(d).0
}

fn spin_z(d: usize) -> chaincert::linalg::CMat {
    chaincert::linalg::spin_matrices(d).2
}

pub fn corr_decay(p: &mut Params, seed: u64) -> Result<Outcome> {
    let model = p.model_with("tfim", &[("h", 2.0)], seed)?;
    let vol = p.volume(12)?;
    let spec = sp(p, 4.0, 1.0, 0.5)?;
    let gamma = p.f64("gamma", 1.0)?;
    let phi = model.instantiate(vol.a, vol.b)?;
    let d = phi.onsite_dim();
    let gs = GroundState::new(&phi, vol, gamma)?;
    let op = |x: i64| LocalOperator::new(vec![x], if d == 2 { pauli_z() } else { spin_z(d) }, d);
    let mut t = Table::new(&["x", "y", "distance", "connected", "envelope", "allowance", "holds"]);
    let mut violation = None;
    let mut max_connected: f64 = 0.0;
    for x in vol.sites() {
        for y in (x + 1)..=vol.b {
            let chk = splitlab::correlation_decay_check(&phi, &spec, &gs, gamma, &op(x)?, &op(y)?)?;
            max_connected = max_connected.max(chk.connected);
            if !chk.holds() && violation.is_none() {
                violation = Some(Error::BoundViolation {
                    measured: chk.connected,
                    bound: chk.envelope + chk.allowance,
                    context: format!("connected correlator at ({x}, {y})"),
                });
            }
            t.row(&[
                x.to_string(),
                y.to_string(),
                chk.distance.to_string(),
                f(chk.connected),
                f(chk.envelope),
                f(chk.allowance),
                u8::from(chk.holds()).to_string(),
            ]);
        }
    }
    Ok(Outcome {
        tables: vec![("corr_decay.csv".into(), t.finish())],
        summary: json!({ "gap": gs.gap, "max_connected": max_connected, "all_hold": violation.is_none() }),
        violation,
    })
}

pub fn flow(p: &mut Params, seed: u64) -> Result<Outcome> {
    let model = p.model("tfim_path", seed)?;
    let vol = p.volume(6)?;
    let gamma = p.f64("gamma", 1.5)?;
    let points = p.usize("grid_points", 11)?;
    let substeps = p.usize("substeps", 8)?;
    let s_split = p.f64("s_split", 0.5)?;
    let split_default: &[usize] = if model.template().is_some() { &[2, 3, 4] } else { &[] };
    let split_n = p.usize_list("split_n", split_default)?;
    let env_spec = FSpec::new(4.0, p.f64("R", 1.0)?, p.f64("b", 1.0)?)?;

    let w = specflow::weight_function(gamma)?;
    let phi = model.instantiate(vol.a, vol.b)?;
    let grid = fnorm::unit_grid(points.max(2));
    let opts = FlowOptions { substeps, ..FlowOptions::default() };
    let res = specflow::spectral_flow_unitary(&phi, vol, &grid, &w, opts)?;
    let mut ft = Table::new(&["s", "fidelity_defect"]);
    for (s, defect) in res.s_grid.iter().zip(&res.fidelity_defects) {
        ft.row(&[f(*s), f(*defect)]);
    }
    let mut tables = vec![("flow.csv".to_string(), ft.finish())];
    let mut split_summary = serde_json::Value::Null;
    if !split_n.is_empty() {
        let tpl = model
            .template()
            .ok_or_else(|| Error::Config("split_n needs a translation-invariant model".into()))?;
        let nmax = *split_n.iter().max().unwrap_or(&1) as i64;
        let big = tpl.instantiate(-nmax - 1, nmax + 1)?;
        let fnorm_s = fnorm::f_norm(&big.at(s_split), &env_spec, 1)?.value;
        let k = lrcert::lr_constants(&env_spec, fnorm_s)?;
        let params = EnvelopeParams::new(k.kappa, k.nu, env_spec.r, env_spec.b, fnorm_s, w.clone())?;
        let deriv = fnorm::derivative_f_norm(&big, &env_spec, 3)?;
        let dh = chaincert::linalg::op_norm(&specflow::derivative_hamiltonian(
            &tpl.instantiate(-nmax, nmax)?,
            Volume::new(-nmax, nmax)?,
            s_split,
        )?);
        let t_trunc = w.default_truncation(dh.max(1.0))?;
        let rep = specflow::generator_split_defect(tpl, s_split, &split_n, &w, t_trunc, &params, deriv)?;
        let mut st = Table::new(&["n", "defect", "envelope"]);
        for ((n, d), e) in rep.curve.parameter.iter().zip(&rep.curve.defect).zip(&rep.curve.envelope) {
            st.row(&[n.to_string(), f(*d), f(*e)]);
        }
        tables.push(("flow_split.csv".to_string(), st.finish()));
        split_summary = json!({
            "n": split_n,
            "g_norms": rep.g_norms,
            "defects": rep.curve.defect,
            "envelopes": rep.curve.envelope,
            "t_trunc": rep.t_trunc,
            "strictly_decreasing": rep.curve.defect.windows(2).all(|p| p[1] < p[0]),
        });
    }
    Ok(Outcome {
        tables,
        summary: json!({
            "rank": res.rank,
            "t_trunc": res.t_trunc,
            "tail_error": res.tail_error,
            "max_fidelity_defect": res.max_fidelity_defect(),
            "max_hermiticity_defect": res.max_hermiticity_defect,
            "max_unitarity_defect": res.max_unitarity_defect,
            "gap_warnings": res.gap_warnings,
            "split": split_summary,
        }),
        violation: None,
    })
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0] || (p[0] == 0.0 && p[1] == 0.0))
}

pub fn envelopes(p: &mut Params, _seed: u64) -> Result<Outcome> {
    let gamma = p.f64("gamma", 1.0)?;
    let spec = sp(p, 4.0, 1.0, 1.0)?;
    let psi = p.f64("psi_f_norm", 1.0)?;
    let x_min = p.i64("x_min", 1)?;
    let x_max = p.i64("x_max", 64)?;
    let t_env = p.f64_list("t_env", &[4e4, 6e4, 1e5])?;
    if x_min < 1 || x_max < x_min {
        return Err(Error::Config(format!("bad x range {x_min}..{x_max}")));
    }
    let k = lrcert::lr_constants(&spec, psi)?;
    let w = specflow::weight_function(gamma)?;
    let params = EnvelopeParams::new(k.kappa, k.nu, spec.r, spec.b, psi, w.clone())?;
    let mut t = Table::new(&["x", "omega1", "omega2", "q", "i_gamma"]);
    let (mut o1s, mut o2s, mut qs) = (Vec::new(), Vec::new(), Vec::new());
    for x in x_min..=x_max {
        let xf = x as f64;
        let o1 = specflow::omega1(xf, &params)?;
        let o2 = specflow::omega2(xf, &params, Omega2Prefactor::Displayed, QPowers::Displayed)?.value;
        let q = specflow::q_envelope(xf, &params, QPowers::Displayed);
        t.row(&[x.to_string(), f(o1), f(o2), f(q), f(w.i_gamma(xf)?)]);
        o1s.push(o1);
        o2s.push(o2);
        qs.push(q);
    }
    let mut it = Table::new(&["t", "ln_i_gamma", "ln_envelope", "applicable"]);
    for &tt in &t_env {
        let env = specflow::i_gamma_envelope(gamma, tt)?;
        it.row(&[f(tt), f(w.ln_i_gamma(tt)?), f(env.ln_value), u8::from(env.applicable).to_string()]);
    }
    Ok(Outcome {
        tables: vec![("envelopes.csv".into(), t.finish()), ("i_gamma.csv".into(), it.finish())],
        summary: json!({
            "kappa": k.kappa,
            "nu": k.nu,
            "omega1_decreasing": decreasing(&o1s),
            "omega2_decreasing": decreasing(&o2s),
            "q_decreasing": decreasing(&qs),
        }),
        violation: None,
    })
}

pub fn z2(p: &mut Params, _seed: u64) -> Result<Outcome> {
    let (mps, xi) = p.mps()?;
    let idx = z2::mps_tr_index(&mps, &xi)?;
    let deg = z2::entanglement_degeneracy_probe(&mps)?;
    let mut t = Table::new(&["k", "schmidt_sq"]);
    for (k, v) in deg.spectrum.iter().enumerate() {
        t.row(&[k.to_string(), f(*v)]);
    }
    Ok(Outcome {
        tables: vec![("z2.csv".into(), t.finish())],
        summary: json!({
            "index": idx.index,
            "theta": idx.theta,
            "residual": idx.residual,
            "sign_defect": idx.sign_defect,
            "overlap": idx.overlap,
            "degeneracy": deg.groups.iter().map(|(v, m)| json!({ "value": v, "multiplicity": m })).collect::<Vec<_>>(),
            "all_even": deg.all_even(),
        }),
        violation: None,
    })
}
