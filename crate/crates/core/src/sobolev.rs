//! Admissible exponent pairs, Sobolev and Lebesgue norms of radial profiles
//! over Randers spaces, a descent estimate of the local embedding constant
//! and the Beta-function verdicts for the Funk model.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modelspace::SpaceForm;
use crate::numerics::{beta_fn, cached_rule, unit_sphere_area, Exponent, Extended};
use crate::randers::RandersStructure;
use crate::rearrange::RadialProfile;

/// Exponent regime of a `d`-admissible pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Sobolev: `1 < p < d`, `p < q < pd/(d-p)`.
    S,
    /// Moser–Trudinger: `p = d`, `p < q < inf`.
    MT,
    /// Morrey: `p > d`, `q = inf`.
    M,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::S => "S",
            Regime::MT => "MT",
            Regime::M => "M",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub p: f64,
    pub q: Exponent,
    pub d: usize,
    pub regime: Regime,
}

impl AdmissiblePair {
    /// `pd/(d-p)` in the Sobolev regime, infinite otherwise.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.p, self.d)
    }
}

/// Why `(p, q, d)` is not admissible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub p: f64,
    pub q: Exponent,
    pub d: usize,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p, q, d) = ({}, {}, {}) is not admissible: {}", self.p, self.q, self.d, self.reason)
    }
}

fn critical_exponent(p: f64, d: usize) -> f64 {
    let d = d as f64;
    if p < d {
        p * d / (d - p)
    } else {
        f64::INFINITY
    }
}

pub fn classify_pair(p: f64, q: Exponent, d: usize) -> std::result::Result<AdmissiblePair, Rejection> {
    let reject = |reason: String| Err(Rejection { p, q, d, reason });
    if d == 0 {
        return reject("dimension must be positive".into());
    }
    if !(p > 1.0) || !p.is_finite() {
        return reject("p must be a finite number above 1".into());
    }
    let df = d as f64;
    let regime = if p < df {
        let star = critical_exponent(p, d);
        match q {
            Exponent::Finite(q) if p < q && q < star => Regime::S,
            _ => return reject(format!("p < d requires p < q < p* = {star}")),
        }
    } else if p == df {
        match q {
            Exponent::Finite(q) if q > p && q.is_finite() => Regime::MT,
            _ => return reject("p = d requires p < q < inf".into()),
        }
    } else {
        match q {
            Exponent::Infinite => Regime::M,
            _ => return reject("p > d requires q = inf".into()),
        }
    };
    Ok(AdmissiblePair { p, q, d, regime })
}

/// Norms of a radial profile; all values are norms, not `p`-th powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevNorms {
    pub p: f64,
    /// `(int F*(x, Du)^p + |u|^p dV_F)^{1/p}`.
    pub w1p_finsler: f64,
    /// `(int |grad u|^p + |u|^p dv_g)^{1/p}`.
    pub w1p_riemann: f64,
    /// `||u||_{L^q(dV_F)}` for each requested `q`.
    pub lq: Vec<(Exponent, f64)>,
    pub linf: f64,
}

/// Lower and upper constants with `lower ||u||^p_g <= ||u||^p_F <= upper ||u||^p_g`
/// when `a = sup |beta|_g`.
pub fn norm_sandwich(d: usize, a: f64, p: f64) -> (f64, f64) {
    let lower = (1.0 - a * a).powf((d as f64 + 1.0) / 2.0) / (1.0 + a).powf(p);
    let upper = (1.0 - a).powf(-p);
    (lower, upper)
}

pub fn sobolev_norms(u: &RadialProfile, f: &RandersStructure, p: f64, qs: &[Exponent]) -> Result<SobolevNorms> {
    if !(p >= 1.0) {
        return invalid("p must be at least 1");
    }
    if f.base() != u.space() {
        return invalid("profile and Randers structure live on different spaces");
    }
    if let Some(q) = qs.iter().find(|q| !(q.as_f64() > 0.0)) {
        return invalid(format!("Lebesgue exponent {q} must be positive"));
    }
    let space = f.base();
    let rule = cached_rule(8);
    let slopes = u.slopes();
    let (grid, values) = (u.grid(), u.values());
    let mut wf = 0.0;
    let mut wg = 0.0;
    let mut lq = vec![0.0; qs.len()];
    for (i, &s) in slopes.iter().enumerate() {
        let (r0, r1) = (grid[i], grid[i + 1]);
        let (u0, u1) = (values[i], values[i + 1]);
        for (r, w) in rule.mapped(r0, r1) {
            let area = space.sphere_area(r) * w;
            let dens = f.radial_density(r);
            let v = (u0 + (u1 - u0) * (r - r0) / (r1 - r0)).abs();
            let vp = v.powf(p);
            wf += (f.radial_co_norm(r, s).powf(p) + vp) * dens * area;
            wg += (s.abs().powf(p) + vp) * area;
            for (acc, q) in lq.iter_mut().zip(qs) {
                if let Exponent::Finite(q) = q {
                    *acc += v.powf(*q) * dens * area;
                }
            }
        }
    }
    let linf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lq = qs
        .iter()
        .zip(lq)
        .map(|(q, acc)| match q {
            Exponent::Finite(q) => (Exponent::Finite(*q), acc.powf(1.0 / q)),
            Exponent::Infinite => (Exponent::Infinite, linf),
        })
        .collect();
    Ok(SobolevNorms { p, w1p_finsler: wf.powf(1.0 / p), w1p_riemann: wg.powf(1.0 / p), lq, linf })
}

/// Result of the Rayleigh-quotient descent for `S(y, rho)^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingEstimate {
    pub y: Vec<f64>,
    pub rho: f64,
    pub p: f64,
    pub q: Exponent,
    /// Smallest quotient found: an upper bound on the radial infimum.
    pub estimate: f64,
    pub seeds: usize,
    pub best_seed: usize,
}

pub const EMBEDDING_SEEDS: usize = 20;
const EMBEDDING_NODES: usize = 48;
const EMBEDDING_ITERS: usize = 400;

/// Discretised `log Q(u) = (1/p) log W(u) - log L(u)` on the centred ball.
struct Rayleigh {
    p: f64,
    q: Exponent,
    h: f64,
    cell_vol: Vec<f64>,
    /// per cell: (tau, weight * area) at the quadrature nodes
    nodes: Vec<Vec<(f64, f64)>>,
}

impl Rayleigh {
    fn new(space: &SpaceForm, rho: f64, p: f64, q: Exponent, n: usize) -> Self {
        let h = rho / n as f64;
        let rule = cached_rule(6);
        let mut cell_vol = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let r0 = i as f64 * h;
            cell_vol.push(space.shell_volume(r0, r0 + h));
            nodes.push(rule.mapped(r0, r0 + h).map(|(r, w)| ((r - r0) / h, w * space.sphere_area(r))).collect());
        }
        Rayleigh { p, q, h, cell_vol, nodes }
    }

    /// `(sum |u|^e w, gradient)` over the quadrature nodes.
    fn power_integral(&self, u: &[f64], e: f64, grad: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for (i, cell) in self.nodes.iter().enumerate() {
            for &(tau, w) in cell {
                let v = u[i] * (1.0 - tau) + u[i + 1] * tau;
                let a = v.abs();
                acc += a.powf(e) * w;
                let dv = e * a.powf(e - 1.0) * v.signum() * w;
                grad[i] += dv * (1.0 - tau);
                grad[i + 1] += dv * tau;
            }
        }
        acc
    }

    /// `log Q` and its gradient with respect to `z`, where `u = exp(z)`.
    fn eval(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let u: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let n = u.len();
        let p = self.p;
        let mut gw = vec![0.0; n];
        let mut w = 0.0;
        for i in 0..n - 1 {
            let s = (u[i + 1] - u[i]) / self.h;
            w += s.abs().powf(p) * self.cell_vol[i];
            let ds = p * s.abs().powf(p - 1.0) * s.signum() * self.cell_vol[i] / self.h;
            gw[i + 1] += ds;
            gw[i] -= ds;
        }
        w += self.power_integral(&u, p, &mut gw);
        let mut gl = vec![0.0; n];
        let log_l = match self.q {
            Exponent::Finite(q) => {
                let l = self.power_integral(&u, q, &mut gl);
                for g in gl.iter_mut() {
                    *g /= q * l;
                }
                l.ln() / q
            }
            Exponent::Infinite => {
                let (k, m) = u.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
                gl[k] = 1.0 / m;
                m.ln()
            }
        };
        for j in 0..n {
            grad[j] = u[j] * (gw[j] / (p * w) - gl[j]);
        }
        w.ln() / p - log_l
    }
}

fn seed_profile(k: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64);
    let amp = 0.05 * (k / 5) as f64;
    (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let base = match k % 5 {
                0 => 0.0,
                1 => (1.05 - x).ln(),
                2 => -1.5 * x,
                3 => (1.0 + 0.5 * (std::f64::consts::PI * x).cos()).ln(),
                _ => -3.0 * x * x,
            };
            base + amp * (rng.gen::<f64>() - 0.5)
        })
        .collect()
}

/// Estimate of `S(y, rho)^{-1}`: the smallest radial Rayleigh quotient
/// `||u||_{W^{1,p}(B(y, rho))} / ||u||_{L^q(B(y, rho))}` found by descent
/// from [`EMBEDDING_SEEDS`] deterministic seeds.
///
/// Model spaces are homogeneous, so the ball about `y` is isometric to the
/// ball about the origin and the quotient is evaluated there; `y` is
/// validated and recorded.
pub fn embedding_constant(space: &SpaceForm, y: &[f64], rho: f64, pair: &AdmissiblePair) -> Result<EmbeddingEstimate> {
    space.check_point(y)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid("rho must be positive");
    }
    if pair.d != space.dim() {
        return invalid("pair dimension differs from the space dimension");
    }
    let n = EMBEDDING_NODES;
    let problem = Rayleigh::new(space, rho, pair.p, pair.q, n);
    let mut best = (f64::INFINITY, 0);
    let mut grad = vec![0.0; n + 1];
    let mut trial_grad = vec![0.0; n + 1];
    for k in 0..EMBEDDING_SEEDS {
        let mut z = seed_profile(k, n);
        let mut f = problem.eval(&z, &mut grad);
        let mut step = 1.0;
        for _ in 0..EMBEDDING_ITERS {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 < 1e-24 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                let ft = problem.eval(&trial, &mut trial_grad);
                if ft.is_finite() && ft <= f - 1e-4 * step * g2 {
                    z = trial;
                    f = ft;
                    std::mem::swap(&mut grad, &mut trial_grad);
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if f < best.0 {
            best = (f, k);
        }
    }
    Ok(EmbeddingEstimate {
        y: y.to_vec(),
        rho,
        p: pair.p,
        q: pair.q,
        estimate: best.0.exp(),
        seeds: EMBEDDING_SEEDS,
        best_seed: best.1,
    })
}

/// Embedding estimates over many centres, in input order.
pub fn embedding_sweep(
    space: &SpaceForm,
    centers: &[Vec<f64>],
    rho: f64,
    pair: &AdmissiblePair,
) -> Result<Vec<EmbeddingEstimate>> {
    centers.par_iter().map(|y| embedding_constant(space, y, rho, pair)).collect()
}

/// Finite/infinite verdict for the Funk test function `u = |x| (1 - |x|)^{-1/t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunkVerdict {
    pub d: usize,
    pub p: f64,
    pub q: Exponent,
    /// `None` when the pair was not classified.
    pub regime: Option<Regime>,
    pub t: f64,
    pub w_norm_bound: Extended,
    pub lq_norm: Extended,
    pub embedding_fails: bool,
}

/// Parameter `t` of the test function: `(p + q)/2` for S and MT, `p^2/d` for M.
pub fn funk_parameter(pair: &AdmissiblePair) -> f64 {
    match pair.regime {
        Regime::S | Regime::MT => 0.5 * (pair.p + pair.q.as_f64()),
        Regime::M => pair.p * pair.p / pair.d as f64,
    }
}

/// Beta-function verdict for arbitrary `(d, p, q, t)`.
///
/// `w_norm_bound = |S^{d-1}| [B(d, 1 - p/t) + B(p + d, 1 - p/t)]` bounds the
/// `p`-th power of the `W^{1,p}_F` norm; `lq_norm = |S^{d-1}| B(q + d, 1 - q/t)`
/// is the `q`-th power of the `L^q` norm and is `DIVERGENT` for `q = inf`.
pub fn funk_beta_verdict(d: usize, p: f64, q: Exponent, t: f64) -> Result<FunkVerdict> {
    if d < 2 {
        return invalid("the Funk model needs d >= 2");
    }
    if !(p > 1.0) || !(t > 0.0) || !t.is_finite() {
        return invalid("need p > 1 and a finite t > 0");
    }
    let area = unit_sphere_area(d);
    let df = d as f64;
    let e = 1.0 - p / t;
    let w_norm_bound = beta_fn(df, e)?.add(beta_fn(p + df, e)?).scale(area);
    let lq_norm = match q {
        Exponent::Finite(q) => {
            if !(q > 0.0) {
                return invalid("q must be positive");
            }
            beta_fn(q + df, 1.0 - q / t)?.scale(area)
        }
        Exponent::Infinite => Extended::Divergent,
    };
    let embedding_fails = w_norm_bound.is_finite() && !lq_norm.is_finite();
    Ok(FunkVerdict { d, p, q, regime: None, t, w_norm_bound, lq_norm, embedding_fails })
}

pub fn funk_counterexample(d: usize, pair: &AdmissiblePair) -> Result<FunkVerdict> {
    if pair.d != d {
        return invalid("pair dimension differs from d");
    }
    let t = funk_parameter(pair);
    let mut v = funk_beta_verdict(d, pair.p, pair.q, t)?;
    v.regime = Some(pair.regime);
    Ok(v)
}

/// Verdicts for many pairs in parallel, in input order.
pub fn funk_sweep(pairs: &[AdmissiblePair]) -> Result<Vec<FunkVerdict>> {
    pairs.par_iter().map(|pair| funk_counterexample(pair.d, pair)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randers::BetaProfile;
    use std::f64::consts::PI;

    fn fin(q: f64) -> Exponent {
        Exponent::Finite(q)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pair(2.0, fin(4.0), 3).unwrap().regime, Regime::S);
        assert_eq!(classify_pair(3.0, fin(5.0), 3).unwrap().regime, Regime::MT);
        assert!(classify_pair(2.0, fin(8.0), 3).is_err());
        assert!(classify_pair(2.0, fin(6.0), 3).is_err());
        assert_eq!(classify_pair(4.0, Exponent::Infinite, 3).unwrap().regime, Regime::M);
        assert!(classify_pair(4.0, fin(9.0), 3).is_err());
        assert!(classify_pair(3.0, Exponent::Infinite, 3).is_err());
        assert!(classify_pair(1.0, fin(1.5), 3).is_err());
        assert_eq!(classify_pair(2.0, fin(4.0), 3).unwrap().critical_exponent(), 6.0);
    }

    #[test]
    fn tent_norms_by_hand() {
        // u = 1 - r on the unit disc: int |u'|^2 = pi, int u^2 = pi/6
        let e2 = SpaceForm::euclidean(2).unwrap();
        let u = RadialProfile::sample(e2, 1.0, 64, |r| 1.0 - r).unwrap();
        let f = RandersStructure::riemannian(e2);
        let n = sobolev_norms(&u, &f, 2.0, &[fin(2.0), Exponent::Infinite]).unwrap();
        assert!((n.w1p_riemann - (7.0 * PI / 6.0).sqrt()).abs() < 1e-13);
        assert_eq!(n.w1p_finsler, n.w1p_riemann);
        assert!((n.lq[0].1 - (PI / 6.0).sqrt()).abs() < 1e-13);
        assert_eq!(n.lq[1].1, 1.0);
    }

    #[test]
    fn sandwich_holds() {
        let h3 = SpaceForm::hyperbolic(3, -1.0).unwrap();
        let f = RandersStructure::new(h3, BetaProfile::Gaussian { amplitude: 0.6, width: 0.7 }, 0.6).unwrap();
        let u = RadialProfile::sample(h3, 2.0, 200, |r| (2.0 - r) * (1.0 + r).sin()).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let n = sobolev_norms(&u, &f, p, &[]).unwrap();
            let (lo, hi) = norm_sandwich(3, f.beta_sup(), p);
            let (nf, ng) = (n.w1p_finsler.powf(p), n.w1p_riemann.powf(p));
            assert!(lo * ng <= nf && nf <= hi * ng, "{lo} {nf} {ng} {hi}");
            assert!(nf != ng);
        }
    }

    #[test]
    fn embedding_positive_and_homogeneous() {
        let e2 = SpaceForm::euclidean(2).unwrap();
        let pair = classify_pair(3.0, Exponent::Infinite, 2).unwrap();
        let a = embedding_constant(&e2, &[0.0, 0.0], 1.0, &pair).unwrap();
        let b = embedding_constant(&e2, &[5.0, -3.0], 1.0, &pair).unwrap();
        assert!(a.estimate > 0.0);
        assert!((a.estimate / b.estimate - 1.0).abs() < 0.01);
        // the constant function gives Vol^{1/p}
        assert!(a.estimate <= PI.powf(1.0 / 3.0) * (1.0 + 1e-9));
        let h2 = SpaceForm::hyperbolic(2, -1.0).unwrap();
        let sub = classify_pair(1.5, fin(3.0), 2).unwrap();
        let e = embedding_constant(&h2, &[0.5, 0.0], 0.8, &sub).unwrap();
        assert!(e.estimate > 0.0 && e.estimate.is_finite());
    }

    #[test]
    fn funk_examples() {
        let b = beta_fn(3.0, 1.0 / 3.0).unwrap().value().unwrap();
        assert!((b - 27.0 / 14.0).abs() < 1e-10);
        let pair = classify_pair(2.0, fin(4.0), 3).unwrap();
        let v = funk_counterexample(3, &pair).unwrap();
        assert_eq!(v.t, 3.0);
        assert!(v.w_norm_bound.is_finite());
        assert_eq!(v.lq_norm, Extended::Divergent);
        assert!(v.embedding_fails);
        let m = classify_pair(3.0, Exponent::Infinite, 2).unwrap();
        let v = funk_counterexample(2, &m).unwrap();
        assert_eq!(v.t, 4.5);
        assert!(v.w_norm_bound.is_finite() && v.embedding_fails);
        // large t: every Beta argument regular
        for t in [10.0, 100.0, 1e4] {
            let v = funk_beta_verdict(3, 2.0, fin(4.0), t).unwrap();
            assert!(v.w_norm_bound.is_finite() && v.lq_norm.is_finite() && !v.embedding_fails);
        }
    }
}
