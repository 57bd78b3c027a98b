//! Models and MPS tensors from TOML.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.
//!
//! ```toml
//! [model]
//! builtin = "tfim"        # tfim | tfim_path | heisenberg | aklt | power_law_ising | random_power_law
//! j = 1.0
//! h = 1.0
//!
//! # or an explicit translation-invariant template
//! [model]
//! onsite_dim = 2
//! [[model.terms]]
//! offsets = [0, 1]
//! matrix = [[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], ...]
//! schedule = [1.0, 0.5]   # optional: coefficients of a polynomial in s
//!
//! [mps]
//! builtin = "aklt"        # aklt | product, or `tensors = [matrix, ...]`
//! time_reversal = "spin_flip"   # spin_flip | conjugation | explicit matrix
//! ```

use toml::{Table, Value};

use crate::builtins;
use crate::error::{Error, Result};
use crate::fnorm::{Component, Interaction, InteractionTemplate, Schedule};
use crate::linalg::{c, c64, CMat};
use crate::z2::{MpsTensor, TimeReversal};

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn get_f64(t: &Table, key: &str) -> Result<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(x)) => Ok(Some(*x)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(v) => Err(bad(format!("`{key}` must be a number, got {v}"))),
    }
}

pub fn get_i64(t: &Table, key: &str) -> Result<Option<i64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) => Ok(Some(*i)),
        Some(v) => Err(bad(format!("`{key}` must be an integer, got {v}"))),
    }
}

pub fn get_str<'a>(t: &'a Table, key: &str) -> Result<Option<&'a str>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(v) => Err(bad(format!("`{key}` must be a string, got {v}"))),
    }
}

fn num(v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(format!("expected a number, got {v}"))),
    }
}

/// `[re, im]`, or a bare real number.
pub fn parse_complex(v: &Value) -> Result<c64> {
    match v {
        Value::Array(p) if p.len() == 2 => Ok(c(num(&p[0])?, num(&p[1])?)),
        Value::Array(_) => Err(bad(format!("complex entries are [re, im] pairs, got {v}"))),
        _ => Ok(c(num(v)?, 0.0)),
    }
}

pub fn parse_vector(v: &Value) -> Result<Vec<c64>> {
    v.as_array().ok_or_else(|| bad("expected an array of complex numbers"))?.iter().map(parse_complex).collect()
}

/// Square matrix from a list of rows.
pub fn parse_matrix(v: &Value) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| bad("a matrix is a list of rows"))?;
    let parsed: Vec<Vec<c64>> = rows.iter().map(parse_vector).collect::<Result<_>>()?;
    let n = parsed.len();
    if n == 0 || parsed.iter().any(|r| r.len() != n) {
        return Err(bad(format!("matrix must be square and non-empty, got {n} rows")));
    }
    Ok(CMat::from_fn(n, n, |i, j| parsed[i][j]))
}

/// A model family, instantiated on an interval on demand.
#[derive(Debug, Clone)]
pub enum Model {
    Template(InteractionTemplate),
    /// Random couplings on every pair of the interval; not translation invariant.
    RandomPowerLaw { alpha: f64, seed: u64 },
}

impl Model {
    pub fn onsite_dim(&self) -> usize {
        match self {
            Model::Template(t) => t.onsite_dim,
            Model::RandomPowerLaw { .. } => 2,
        }
    }

    pub fn instantiate(&self, a: i64, b: i64) -> Result<Interaction> {
        match self {
            Model::Template(t) => t.instantiate(a, b),
            Model::RandomPowerLaw { alpha, seed } => builtins::random_power_law(a, b, *alpha, *seed),
        }
    }

    pub fn template(&self) -> Option<&InteractionTemplate> {
        match self {
            Model::Template(t) => Some(t),
            Model::RandomPowerLaw { .. } => None,
        }
    }
}

/// Reads a `[model]` table. `seed` feeds random built-ins that carry no seed of their own.
pub fn model_from_table(t: &Table, seed: u64) -> Result<Model> {
    let f = |key: &str, default: f64| -> Result<f64> { Ok(get_f64(t, key)?.unwrap_or(default)) };
    if let Some(name) = get_str(t, "builtin")? {
        if t.contains_key("terms") {
            return Err(bad("`builtin` and `terms` are exclusive"));
        }
        return Ok(match name {
            "tfim" => Model::Template(builtins::tfim(f("j", 1.0)?, f("h", 1.0)?)),
            "tfim_path" => Model::Template(builtins::tfim_path(f("j", 1.0)?, f("h0", 2.0)?, f("h1", 1.0)?)),
            "heisenberg" => Model::Template(builtins::heisenberg(f("j", 1.0)?)),
            "aklt" => Model::Template(builtins::aklt()),
            "power_law_ising" => Model::Template(builtins::power_law_ising(
                f("j", 1.0)?,
                f("alpha", 6.0)?,
                f("h", 1.0)?,
                get_i64(t, "range")?.unwrap_or(4),
            )),
            "random_power_law" => Model::RandomPowerLaw {
                alpha: f("alpha", 6.0)?,
                seed: get_i64(t, "seed")?.map(|s| s as u64).unwrap_or(seed),
            },
            other => return Err(bad(format!("unknown built-in model `{other}`"))),
        });
    }
    let d = get_i64(t, "onsite_dim")?.ok_or_else(|| bad("[model] needs `builtin` or `onsite_dim` with `terms`"))?;
    if d < 2 {
        return Err(bad(format!("onsite_dim must be >= 2, got {d}")));
    }
    let d = d as usize;
    let terms = t.get("terms").and_then(Value::as_array).ok_or_else(|| bad("[model] needs a `terms` array"))?;
    let mut tpl = InteractionTemplate::new(d);
    for term in terms {
        let term = term.as_table().ok_or_else(|| bad("each term is a table"))?;
        let offsets: Vec<i64> = term
            .get("offsets")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("term needs `offsets`"))?
            .iter()
            .map(|v| v.as_integer().ok_or_else(|| bad("offsets are integers")))
            .collect::<Result<_>>()?;
        if offsets.is_empty() || offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(format!("offsets must be strictly increasing, got {offsets:?}")));
        }
        let matrix = parse_matrix(term.get("matrix").ok_or_else(|| bad("term needs `matrix`"))?)?;
        let expected = d.pow(offsets.len() as u32);
        if matrix.nrows() != expected {
            return Err(bad(format!("matrix on {offsets:?} must be {expected}x{expected}, got {}", matrix.nrows())));
        }
        let schedule = match term.get("schedule") {
            None => Schedule::Constant,
            Some(v) => Schedule::Polynomial(
                v.as_array().ok_or_else(|| bad("schedule is a coefficient list"))?.iter().map(num).collect::<Result<_>>()?,
            ),
        };
        tpl.push(offsets, vec![Component { schedule, matrix }]);
    }
    Ok(Model::Template(tpl))
}

/// Reads an `[mps]` table: the tensors and the on-site time reversal.
pub fn mps_from_table(t: &Table) -> Result<(MpsTensor, TimeReversal)> {
    let (mps, default_tr) = match get_str(t, "builtin")? {
        Some("aklt") => (MpsTensor::aklt(), "spin_flip"),
        Some("product") => {
            let psi = match t.get("vector") {
                Some(v) => parse_vector(v)?,
                None => vec![c(1.0, 0.0), c(0.0, 0.0)],
            };
            (MpsTensor::product(&psi)?, "conjugation")
        }
        Some(other) => return Err(bad(format!("unknown built-in MPS `{other}`"))),
        None => {
            let tensors = t
                .get("tensors")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("[mps] needs `builtin` or `tensors`"))?
                .iter()
                .map(parse_matrix)
                .collect::<Result<Vec<_>>>()?;
            (MpsTensor::new(tensors)?, "conjugation")
        }
    };
    let d = mps.physical_dim();
    let xi = match t.get("time_reversal") {
        None => named_tr(default_tr, d)?,
        Some(Value::String(s)) => named_tr(s, d)?,
        Some(v) => TimeReversal::new(parse_matrix(v)?)?,
    };
    if xi.onsite_dim() != d {
        return Err(Error::OnsiteDimMismatch { expected: d, got: xi.onsite_dim() });
    }
    Ok((mps, xi))
}

fn named_tr(name: &str, d: usize) -> Result<TimeReversal> {
    match name {
        "spin_flip" => TimeReversal::spin_flip(d),
        "conjugation" => Ok(TimeReversal::conjugation(d)),
        other => Err(bad(format!("unknown time reversal `{other}`"))),
    }
}
