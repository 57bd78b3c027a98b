//! Quadrature rules: Gauss-Legendre panels, adaptive Gauss-Kronrod, and
//! semi-infinite integrals by geometrically growing panels.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed Gauss-Legendre rule mapped to arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    /// Nodes and weights on `[a, b]`.
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.panel(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) on a finite interval. Returns the
/// integral and the accumulated error estimate.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<(f64, f64)> {
    let mut stack = vec![(a, b, gk15(&f, a, b))];
    let mut total = 0.0;
    let mut err = 0.0;
    let mut done: Vec<(f64, f64)> = Vec::new();
    let mut evals = 0usize;
    while let Some((lo, hi, (val, e))) = stack.pop() {
        let whole: f64 = done.iter().map(|x| x.0).sum::<f64>() + val;
        if e <= (rtol * whole.abs()).max(atol) * ((hi - lo) / (b - a)).max(1e-3) || hi - lo < 1e-12 * (b - a).abs() {
            done.push((val, e));
            continue;
        }
        evals += 1;
        if evals > 200_000 {
            return Err(Error::QuadratureFailure(format!(
                "adaptive rule exceeded its subdivision budget on [{a}, {b}]"
            )));
        }
        let m = 0.5 * (lo + hi);
        stack.push((lo, m, gk15(&f, lo, m)));
        stack.push((m, hi, gk15(&f, m, hi)));
    }
    // fixed-order summation keeps the result independent of stack history
    done.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    for (v, e) in done {
        total += v;
        err += e;
    }
    Ok((total, err))
}

/// `\int_a^\infty f` for a non-negative, eventually decreasing integrand,
/// integrated on panels `[a, a+w], [a+w, a+3w], ...` of doubling width until
/// a panel contributes less than `rtol` of the running total.
pub fn semi_infinite(f: impl Fn(f64) -> f64, a: f64, first_width: f64, rtol: f64) -> Result<f64> {
    let rule = GaussRule::new(20);
    let mut total = 0.0;
    let mut lo = a;
    let mut width = first_width;
    for _ in 0..400 {
        let hi = lo + width;
        let sub = 8;
        let mut part = 0.0;
        for k in 0..sub {
            let x0 = lo + width * k as f64 / sub as f64;
            let x1 = lo + width * (k + 1) as f64 / sub as f64;
            part += rule.integrate(x0, x1, &f);
        }
        total += part;
        if part.abs() <= rtol * total.abs() || (total == 0.0 && part == 0.0 && lo > a + 64.0 * first_width) {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    Err(Error::QuadratureFailure(format!("semi-infinite integral from {a} did not settle")))
}
