//! Quadrature rules, adaptive integration with divergence classification,
//! and the Gamma/Beta special functions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A real number or the token `DIVERGENT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Divergent,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(*v),
            Extended::Divergent => None,
        }
    }

    pub fn add(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Divergent,
        }
    }

    pub fn scale(self, k: f64) -> Extended {
        match self {
            Extended::Finite(a) => Extended::Finite(k * a),
            Extended::Divergent => Extended::Divergent,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Divergent => write!(f, "DIVERGENT"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Divergent => s.serialize_str("DIVERGENT"),
        }
    }
}

/// A Lebesgue exponent in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Exponent::Finite(q) => Some(*q),
            Exponent::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite exponent.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(q: f64) -> Exponent {
        if q.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(q)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Exponent::Infinite),
            other => other
                .parse::<f64>()
                .map(Exponent::from_f64)
                .map_err(|_| Error::InvalidArgument(format!("cannot parse exponent {s:?}"))),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(q) => s.serialize_f64(*q),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(Exponent::Finite(q)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Integrate `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

/// Gauss–Legendre rule with `order` nodes on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return invalid("Gauss-Legendre order must be at least 1");
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, order })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule used by the adaptive integrator and by radial quadratures.
pub(crate) fn cached_rule(order: usize) -> &'static QuadratureRule {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=32).map(|n| gauss_legendre(n).unwrap()).collect());
    &rules[order - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: Extended,
    pub abs_error_estimate: Option<f64>,
    pub evaluations: usize,
}

impl IntegralResult {
    pub fn finite(&self) -> Option<f64> {
        self.value.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub tol: f64,
    pub divergence_cap: f64,
    pub max_depth: usize,
    pub order: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, divergence_cap: 1e12, max_depth: 60, order: 15 }
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;

/// Levels of non-shrinking endpoint panels after which growth counts as divergence.
const GROWTH_RUN: usize = 6;
const FLAT_RUN: usize = 30;
const FLAT_RUN_AT_RESOLUTION: usize = 6;
const NOISE_ZONE: f64 = 1e-9;
/// Hard cap on integrand evaluations per call.
const MAX_EVALUATIONS: usize = 2_000_000;

/// Integrate `f` over `[a, b]` to absolute accuracy `tol`.
///
/// Each half of the interval is mapped by `s = e + (m - e) v^2` with `e` the
/// endpoint, which turns algebraic endpoint singularities into milder ones,
/// and then bisected adaptively. Endpoint panels whose estimates stop
/// shrinking under bisection, or partial sums beyond the cap, give `DIVERGENT`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegralResult> {
    adaptive_integrate_with(f, a, b, &AdaptiveOptions { tol, ..Default::default() })
}

pub fn adaptive_integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
) -> Result<IntegralResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return invalid(format!("integration bounds must satisfy a < b, got [{a}, {b}]"));
    }
    if !(opts.tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let m = 0.5 * (a + b);
    let mut evaluations = 0;
    let mut total: f64 = 0.0;
    let mut err = 0.0;
    for e in [a, b] {
        match integrate_half(&f, e, m, a, b, opts, total.abs(), &mut evaluations)? {
            Half::Finite { value, error } => {
                total += value;
                err += error;
            }
            Half::Divergent => {
                return Ok(IntegralResult { value: Extended::Divergent, abs_error_estimate: None, evaluations })
            }
        }
    }
    Ok(IntegralResult { value: Extended::Finite(total), abs_error_estimate: Some(err), evaluations })
}

enum Half {
    Finite { value: f64, error: f64 },
    Divergent,
}

struct Panel {
    lo: f64,
    hi: f64,
    est: f64,
    depth: usize,
}

#[allow(clippy::too_many_arguments)]
fn integrate_half<F: Fn(f64) -> f64>(
    f: &F,
    e: f64,
    m: f64,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
    carried: f64,
    evaluations: &mut usize,
) -> Result<Half> {
    let rule = cached_rule(opts.order);
    let span = m - e;
    let jac = 2.0 * span.abs();
    let vmin = 0.5 * (1.0 + rule.nodes[0]);
    let eval = |v: f64, evaluations: &mut usize| -> Result<f64> {
        let s = e + span * v * v;
        if s <= a || s >= b {
            return Ok(0.0);
        }
        *evaluations += 1;
        if *evaluations > MAX_EVALUATIONS {
            return Err(Error::Evaluation(format!("no convergence after {MAX_EVALUATIONS} integrand evaluations")));
        }
        let fs = f(s);
        if !fs.is_finite() {
            return Err(Error::Evaluation(format!("integrand is {fs} at interior point {s}")));
        }
        Ok(fs * jac * v)
    };
    let panel = |lo: f64, hi: f64, evaluations: &mut usize| -> Result<f64> {
        let mut acc = 0.0;
        for (v, w) in rule.mapped(lo, hi) {
            acc += w * eval(v, evaluations)?;
        }
        Ok(acc)
    };

    let tol = 0.5 * opts.tol;
    let mut total: f64 = 0.0;
    let mut err = 0.0;
    let mut growth_run = 0;
    let mut flat_run = 0;
    let root = panel(0.0, 1.0, evaluations)?;
    let mut stack = vec![Panel { lo: 0.0, hi: 1.0, est: root, depth: 0 }];
    while let Some(p) = stack.pop() {
        let mid = 0.5 * (p.lo + p.hi);
        let left = panel(p.lo, mid, evaluations)?;
        let right = panel(mid, p.hi, evaluations)?;
        let both = left + right;
        let diff = (both - p.est).abs();
        let at_endpoint = p.lo == 0.0;
        // Close to a nonzero endpoint `e`, `s - e` carries rounding noise of
        // relative size `eps |e| / |s - e|`; panel ratios stop being meaningful.
        let noise_zone = span.abs() * p.hi * p.hi < NOISE_ZONE * e.abs();
        let mut unresolved = false;
        if at_endpoint {
            if p.est != 0.0 && !noise_zone {
                let ratio = left.abs() / p.est.abs();
                growth_run = if ratio > 1.0 + 1e-9 { growth_run + 1 } else { 0 };
                flat_run = if ratio >= 1.0 - 1e-9 { flat_run + 1 } else { 0 };
            }
            if growth_run >= GROWTH_RUN || flat_run >= FLAT_RUN {
                return Ok(Half::Divergent);
            }
            // Would the next bisection put nodes onto the endpoint itself?
            let next_v = vmin * 0.5 * (mid - p.lo);
            unresolved = e + span * next_v * next_v == e;
            if unresolved && diff > tol * (p.hi - p.lo) && (flat_run >= FLAT_RUN_AT_RESOLUTION || growth_run > 0) {
                return Ok(Half::Divergent);
            }
        }
        if (carried + total.abs() + left.abs() + right.abs()) > opts.divergence_cap {
            return Ok(Half::Divergent);
        }
        let rel_noise = if p.lo > 0.0 { f64::EPSILON * e.abs() / (span.abs() * p.lo * p.lo) } else { 0.0 };
        let local_tol = (tol * (p.hi - p.lo)).max((1e-13 + 16.0 * rel_noise) * both.abs());
        if diff <= local_tol || p.depth >= opts.max_depth || unresolved || (noise_zone && !at_endpoint) {
            total += both;
            err += diff;
        } else {
            stack.push(Panel { lo: mid, hi: p.hi, est: right, depth: p.depth + 1 });
            stack.push(Panel { lo: p.lo, hi: mid, est: left, depth: p.depth + 1 });
        }
    }
    Ok(Half::Finite { value: total, error: err })
}

/// Integrate to a relative accuracy `rel` (plus a tiny absolute floor).
pub fn integrate_relative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> Result<f64> {
    let rough = cached_rule(20).integrate(a, b, &f).abs();
    let tol = (rel * rough).max(1e-300);
    let res = adaptive_integrate(&f, a, b, tol)?;
    res.finite()
        .ok_or_else(|| Error::Evaluation(format!("integral over [{a}, {b}] classified as divergent")))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `Gamma(x)` for real `x` away from the non-positive integers.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let xm = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(xm + 0.5) * (-t).exp() * acc
}

/// Euler Beta function; `DIVERGENT` when `y <= 0`.
pub fn beta_fn(x: f64, y: f64) -> Result<Extended> {
    if !(x > 0.0) {
        return invalid(format!("beta_fn requires x > 0, got {x}"));
    }
    if !(y > 0.0) {
        return Ok(Extended::Divergent);
    }
    Ok(Extended::Finite((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()))
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface measure of the unit sphere `S^{d-1}` in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Solve a symmetric tridiagonal system in place (diagonal `diag`, off-diagonal
/// `off`, `off[i]` couples `i` and `i + 1`). Returns `None` when a pivot is not
/// positive, i.e. the matrix is not positive definite.
pub(crate) fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    d[0] = diag[0];
    if !(d[0] > 0.0) {
        return None;
    }
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        if !(d[i] > 0.0) || !d[i].is_finite() {
            return None;
        }
    }
    let mut y = rhs.to_vec();
    for i in 1..n {
        y[i] -= l[i - 1] * y[i - 1];
    }
    for i in 0..n {
        y[i] /= d[i];
    }
    for i in (0..n.saturating_sub(1)).rev() {
        y[i] -= l[i] * y[i + 1];
    }
    Some(y)
}
