//! Constant-curvature model spaces: Euclidean `R^d` and the Poincaré ball of
//! curvature `c < 0`, realised as the unit ball with conformal factor
//! `2 / (sqrt(-c) (1 - |x|^2))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{adaptive_integrate, cached_rule, integrate_relative, unit_ball_volume, unit_sphere_area};

pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Model {
    Euclidean,
    PoincareBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFormRepr", into = "SpaceFormRepr")]
pub struct SpaceForm {
    dim: usize,
    curvature: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFormRepr {
    dim: usize,
    curvature: f64,
}

impl TryFrom<SpaceFormRepr> for SpaceForm {
    type Error = Error;
    fn try_from(r: SpaceFormRepr) -> Result<Self> {
        SpaceForm::new(r.dim, r.curvature)
    }
}

impl From<SpaceForm> for SpaceFormRepr {
    fn from(s: SpaceForm) -> Self {
        SpaceFormRepr { dim: s.dim, curvature: s.curvature }
    }
}

impl SpaceForm {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        if dim < 2 {
            return invalid(format!("dimension must be at least 2, got {dim}"));
        }
        if !(curvature <= 0.0) || !curvature.is_finite() {
            return invalid(format!("curvature must be finite and <= 0, got {curvature}"));
        }
        Ok(SpaceForm { dim, curvature })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, 0.0)
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Result<Self> {
        if !(curvature < 0.0) {
            return invalid(format!("hyperbolic curvature must be negative, got {curvature}"));
        }
        Self::new(dim, curvature)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn model(&self) -> Model {
        if self.curvature == 0.0 {
            Model::Euclidean
        } else {
            Model::PoincareBall
        }
    }

    /// `sqrt(-c)`; zero in the flat case.
    pub fn kappa(&self) -> f64 {
        (-self.curvature).sqrt()
    }

    pub fn origin(&self) -> Point {
        vec![0.0; self.dim]
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return invalid(format!("point has {} coordinates, expected {}", x.len(), self.dim));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("point has non-finite coordinates");
        }
        if self.model() == Model::PoincareBall && norm2(x) >= 1.0 {
            return invalid(format!("point with |x| = {} lies outside the Poincaré ball", norm(x)));
        }
        Ok(())
    }

    /// Conformal factor `lambda(x)` with `g = lambda^2 |dx|^2`.
    pub fn conformal_factor(&self, x: &[f64]) -> f64 {
        match self.model() {
            Model::Euclidean => 1.0,
            Model::PoincareBall => 2.0 / (self.kappa() * one_minus_norm2(x)),
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match self.model() {
            Model::Euclidean => dist(x, y),
            Model::PoincareBall => {
                let num = dist2(x, y);
                let den = one_minus_norm2(x) * one_minus_norm2(y);
                2.0 * (num / (num + den)).sqrt().atanh() / self.kappa()
            }
        })
    }

    /// Geodesic distance from the origin.
    pub fn radius_of(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.radius_from_chart(norm(x)))
    }

    /// Geodesic distance from the origin of a chart point with Euclidean norm `r`.
    pub fn radius_from_chart(&self, r: f64) -> f64 {
        match self.model() {
            Model::Euclidean => r,
            Model::PoincareBall => 2.0 * r.atanh() / self.kappa(),
        }
    }

    /// Euclidean chart norm of a point at geodesic distance `t` from the origin.
    pub fn chart_radius(&self, t: f64) -> f64 {
        match self.model() {
            Model::Euclidean => t,
            Model::PoincareBall => (0.5 * self.kappa() * t).tanh(),
        }
    }

    /// The point at geodesic distance `t` from the origin along `direction`.
    pub fn point_on_ray(&self, direction: &[f64], t: f64) -> Result<Point> {
        let n = norm(direction);
        if direction.len() != self.dim || !(n > 0.0) {
            return invalid("ray direction must be a non-zero vector of the ambient dimension");
        }
        let r = self.chart_radius(t);
        Ok(direction.iter().map(|v| v / n * r).collect())
    }

    /// Euclidean chart separation that already forces geodesic separation `2 rho`.
    pub fn safe_chart_separation(&self, rho: f64) -> f64 {
        match self.model() {
            Model::Euclidean => 2.0 * rho,
            // lambda >= 2 / kappa, so geodesic length >= (2 / kappa) * chart length
            Model::PoincareBall => self.kappa() * rho,
        }
    }

    /// Area of the geodesic sphere of radius `t`: `d omega_d s_c(t)^{d-1}`.
    pub fn sphere_area(&self, t: f64) -> f64 {
        unit_sphere_area(self.dim) * s_c_unchecked(self.curvature, t).powi(self.dim as i32 - 1)
    }

    /// Volume of the geodesic shell `t_a <= d(0, x) <= t_b`.
    pub fn shell_volume(&self, ta: f64, tb: f64) -> f64 {
        match self.model() {
            Model::Euclidean => {
                let d = self.dim as i32;
                unit_ball_volume(self.dim) * (tb.powi(d) - ta.powi(d))
            }
            Model::PoincareBall => {
                // composite GL8 with panels of width <= 1/4 in units of 1/kappa
                let n = ((tb - ta) * self.kappa() * 4.0).ceil().max(1.0) as usize;
                let h = (tb - ta) / n as f64;
                (0..n)
                    .map(|i| {
                        let a = ta + i as f64 * h;
                        cached_rule(8).integrate(a, a + h, |t| self.sphere_area(t))
                    })
                    .sum()
            }
        }
    }

    pub fn exp_log(&self, base: &[f64]) -> Result<ExpLogMaps> {
        self.check_point(base)?;
        Ok(ExpLogMaps { space: *self, base: base.to_vec() })
    }

    /// Volume of the geodesic ball `B(center, rho)`.
    ///
    /// Euclidean: `omega_d rho^d`. Poincaré ball: the geodesic ball is a
    /// Euclidean ball in the chart; its volume is the integral of `lambda^d`
    /// over that chart ball, computed in polar coordinates about the chart
    /// centre (two nested quadratures).
    pub fn ball_volume(&self, center: &[f64], rho: f64) -> Result<f64> {
        self.check_point(center)?;
        if !(rho > 0.0) {
            return invalid("ball radius must be positive");
        }
        let d = self.dim;
        if self.model() == Model::Euclidean {
            return Ok(unit_ball_volume(d) * rho.powi(d as i32));
        }
        let k = self.kappa();
        let c_norm = norm(center);
        let big_d = 2.0 * c_norm.atanh();
        let rho1 = k * rho;
        let t1 = (0.5 * (big_d - rho1)).tanh();
        let t2 = (0.5 * (big_d + rho1)).tanh();
        if 1.0 - t2 < 1e-12 {
            return Err(Error::Evaluation(format!("ball of radius {rho} reaches the chart boundary in double precision")));
        }
        let ce = 0.5 * (t1 + t2);
        let re = 0.5 * (t2 - t1);
        let lam_scale = 2.0 / k;
        let density = |r: f64, cos_phi: f64| {
            let s2 = ce * ce + r * r + 2.0 * r * ce * cos_phi;
            (lam_scale / (1.0 - s2)).powi(d as i32)
        };
        let sphere_low = if d == 2 { 2.0 } else { unit_sphere_area(d - 1) };
        let inner = |phi: f64| -> f64 {
            let cp = phi.cos();
            let sp = phi.sin();
            let w = if d == 2 { 1.0 } else { sp.powi(d as i32 - 2) };
            match integrate_relative(|r| density(r, cp) * r.powi(d as i32 - 1), 0.0, re, 1e-13) {
                Ok(v) => v * w,
                Err(_) => f64::NAN,
            }
        };
        let outer = integrate_relative(inner, 0.0, PI, 1e-12)?;
        Ok(sphere_low * outer)
    }
}

/// Mutually inverse exponential and logarithm maps at a base point.
///
/// Tangent vectors are expressed in a `g`-orthonormal frame aligned with the
/// chart axes, so their Euclidean length is their Riemannian length.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpLogMaps {
    space: SpaceForm,
    base: Point,
}

impl ExpLogMaps {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn exp(&self, v: &[f64]) -> Result<Point> {
        if v.len() != self.space.dim {
            return invalid("tangent vector has the wrong dimension");
        }
        match self.space.model() {
            Model::Euclidean => Ok(self.base.iter().zip(v).map(|(b, w)| b + w).collect()),
            Model::PoincareBall => {
                let k = self.space.kappa();
                let n = norm(v);
                if n == 0.0 {
                    return Ok(self.base.clone());
                }
                let scale = (0.5 * k * n).tanh() / n;
                let step: Vec<f64> = v.iter().map(|w| w * scale).collect();
                let y = mobius_add(&self.base, &step);
                self.space.check_point(&y)?;
                Ok(y)
            }
        }
    }

    pub fn log(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.space.check_point(y)?;
        match self.space.model() {
            Model::Euclidean => Ok(y.iter().zip(&self.base).map(|(a, b)| a - b).collect()),
            Model::PoincareBall => {
                let k = self.space.kappa();
                let neg: Vec<f64> = self.base.iter().map(|b| -b).collect();
                let w = mobius_add(&neg, y);
                let n = norm(&w);
                if n == 0.0 {
                    return Ok(vec![0.0; w.len()]);
                }
                // 1 - |(-p) + y|^2 from the Moebius identity, which avoids the
                // cancellation in 1 - n^2 near the boundary
                let p2 = norm2(&self.base);
                let y2 = norm2(y);
                let one_minus = (1.0 - p2) * (1.0 - y2) / (1.0 - 2.0 * dot(&self.base, y) + p2 * y2);
                let atanh = n.ln_1p() - 0.5 * one_minus.ln();
                let scale = 2.0 * atanh / (k * n);
                Ok(w.iter().map(|c| c * scale).collect())
            }
        }
    }
}

/// Möbius addition in the unit ball.
pub fn mobius_add(x: &[f64], y: &[f64]) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = norm2(x);
    let y2 = norm2(y);
    let den = 1.0 + 2.0 * xy + x2 * y2;
    let a = (1.0 + 2.0 * xy + y2) / den;
    let b = (1.0 - x2) / den;
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

/// `s_c(t)`: `t` in the flat case, `sinh(sqrt(-c) t) / sqrt(-c)` otherwise.
pub fn s_c(c: f64, t: f64) -> Result<f64> {
    if c > 0.0 || !c.is_finite() {
        return invalid(format!("s_c requires c <= 0, got {c}"));
    }
    if !(t >= 0.0) {
        return invalid(format!("s_c requires t >= 0, got {t}"));
    }
    Ok(s_c_unchecked(c, t))
}

pub(crate) fn s_c_unchecked(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        t
    } else {
        let k = (-c).sqrt();
        (k * t).sinh() / k
    }
}

/// `V_{c,d}(rho) = d omega_d int_0^rho s_c(t)^{d-1} dt`.
pub fn comparison_volume(c: f64, d: usize, rho: f64) -> Result<f64> {
    if d < 2 {
        return invalid("comparison_volume requires d >= 2");
    }
    if !(rho > 0.0) {
        return invalid("comparison_volume requires rho > 0");
    }
    if c > 0.0 {
        return invalid("comparison_volume requires c <= 0");
    }
    if c == 0.0 {
        return Ok(unit_ball_volume(d) * rho.powi(d as i32));
    }
    let e = d as i32 - 1;
    let integral = integrate_relative(|t| s_c_unchecked(c, t).powi(e), 0.0, rho, 1e-14)?;
    Ok(unit_sphere_area(d) * integral)
}

pub fn geodesic_distance(space: &SpaceForm, x: &[f64], y: &[f64]) -> Result<f64> {
    space.distance(x, y)
}

pub fn exp_log_maps(space: &SpaceForm, base: &[f64]) -> Result<ExpLogMaps> {
    space.exp_log(base)
}

/// Croke's isoperimetric constant `C(d)`.
pub fn croke_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return invalid("croke_constant requires d >= 2");
    }
    if d == 2 {
        return Ok(1.0);
    }
    let df = d as f64;
    let ex = df / (df - 2.0);
    let res = adaptive_integrate(|t: f64| t.cos().powf(ex) * t.sin().powi(d as i32 - 2), 0.0, PI / 2.0, 1e-14)?;
    let integral = res
        .finite()
        .ok_or_else(|| Error::Evaluation("Croke integral classified as divergent".into()))?;
    let area_d = unit_sphere_area(d);
    let area_dm1 = unit_sphere_area(d - 1);
    Ok(area_d.powf(1.0 - 1.0 / df) * (area_dm1 * integral).powf(2.0 / df - 1.0))
}

/// `Vol(B(x, rho)) / V_{c,d}(rho)` at the space's own curvature.
pub fn bishop_gromov_ratio(space: &SpaceForm, x: &[f64], rho: f64) -> Result<f64> {
    bishop_gromov_ratio_against(space, x, rho, space.curvature())
}

/// `Vol(B(x, rho)) / V_{c_ref,d}(rho)` against a chosen comparison curvature.
pub fn bishop_gromov_ratio_against(space: &SpaceForm, x: &[f64], rho: f64, c_ref: f64) -> Result<f64> {
    let vol = space.ball_volume(x, rho)?;
    Ok(vol / comparison_volume(c_ref, space.dim(), rho)?)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm2(x).sqrt()
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).sqrt()
}

fn one_minus_norm2(x: &[f64]) -> f64 {
    let n = norm(x);
    (1.0 - n) * (1.0 + n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ball_point(rng: &mut ChaCha8Rng, d: usize, rmax: f64) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v).max(1e-12);
        let r = rng.gen_range(0.0..rmax);
        v.iter().map(|c| c / n * r).collect()
    }

    #[test]
    fn s_c_examples() {
        assert_eq!(s_c(0.0, 3.5).unwrap(), 3.5);
        assert_eq!(s_c(-1.0, 0.0).unwrap(), 0.0);
        assert!((s_c(-4.0, 1.0).unwrap() - 2f64.sinh() / 2.0).abs() < 1e-15);
        assert!(s_c(1.0, 1.0).is_err());
    }

    #[test]
    fn comparison_volume_examples() {
        assert!((comparison_volume(0.0, 2, 1.0).unwrap() - PI).abs() < 1e-14);
        let v = comparison_volume(-1.0, 2, 2.0).unwrap();
        assert!((v - 2.0 * PI * (2f64.cosh() - 1.0)).abs() < 1e-11);
        // d = 3, c = -1: 4 pi int sinh^2 = pi (sinh(2 rho) - 2 rho)
        let v = comparison_volume(-1.0, 3, 1.5).unwrap();
        assert!((v - PI * (3f64.sinh() - 3.0)).abs() < 1e-11);
    }

    #[test]
    fn comparison_volume_monotone() {
        let mut prev = 0.0;
        for k in 1..20 {
            let v = comparison_volume(-1.0, 3, 0.25 * k as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let a = comparison_volume(-0.5, 3, 1.0).unwrap();
        let b = comparison_volume(-1.0, 3, 1.0).unwrap();
        let c = comparison_volume(0.0, 3, 1.0).unwrap();
        assert!(c < a && a < b);
    }

    #[test]
    fn distance_examples() {
        let e = SpaceForm::euclidean(2).unwrap();
        assert_eq!(e.distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let h = SpaceForm::hyperbolic(2, -1.0).unwrap();
        for r in [0.1, 0.5, 0.9, 0.99] {
            let d = h.distance(&[0.0, 0.0], &[r, 0.0]).unwrap();
            // oracle: integrate the conformal factor along the radial segment
            let oracle = adaptive_integrate(|s| 2.0 / (1.0 - s * s), 0.0, r, 1e-13).unwrap().finite().unwrap();
            assert!((d - oracle).abs() < 1e-10, "r={r}");
            assert!((d - 2.0 * r.atanh()).abs() < 1e-12);
        }
        assert_eq!(h.distance(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert!(h.distance(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn curvature_rescaling() {
        let h = SpaceForm::hyperbolic(3, -4.0).unwrap();
        let d = h.distance(&[0.0; 3], &[0.5, 0.0, 0.0]).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-14);
    }

    /// RK4 integration of the geodesic equation of `g = lambda^2 |dx|^2` with
    /// `lambda = 2 / (1 - |x|^2)`.
    fn shoot(x0: &[f64], v_coord: &[f64], steps: usize) -> Vec<f64> {
        let d = x0.len();
        let rhs = |x: &[f64], v: &[f64]| -> Vec<f64> {
            let s = 1.0 - norm2(x);
            let grad: Vec<f64> = x.iter().map(|c| 2.0 * c / s).collect();
            let gv = dot(&grad, v);
            let vv = norm2(v);
            (0..d).map(|i| -2.0 * gv * v[i] + vv * grad[i]).collect()
        };
        let mut x = x0.to_vec();
        let mut v = v_coord.to_vec();
        let h = 1.0 / steps as f64;
        for _ in 0..steps {
            let k1x = v.clone();
            let k1v = rhs(&x, &v);
            let x2: Vec<f64> = (0..d).map(|i| x[i] + 0.5 * h * k1x[i]).collect();
            let v2: Vec<f64> = (0..d).map(|i| v[i] + 0.5 * h * k1v[i]).collect();
            let k2v = rhs(&x2, &v2);
            let x3: Vec<f64> = (0..d).map(|i| x[i] + 0.5 * h * v2[i]).collect();
            let v3: Vec<f64> = (0..d).map(|i| v[i] + 0.5 * h * k2v[i]).collect();
            let k3v = rhs(&x3, &v3);
            let x4: Vec<f64> = (0..d).map(|i| x[i] + h * v3[i]).collect();
            let v4: Vec<f64> = (0..d).map(|i| v[i] + h * k3v[i]).collect();
            let k4v = rhs(&x4, &v4);
            for i in 0..d {
                x[i] += h / 6.0 * (k1x[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
                v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            }
        }
        x
    }

    #[test]
    fn exp_matches_geodesic_shooting() {
        let h = SpaceForm::hyperbolic(2, -1.0).unwrap();
        let maps = h.exp_log(&[0.0, 0.0]).unwrap();
        let v = [1.2, -0.7];
        let y = maps.exp(&v).unwrap();
        let n = norm(&v);
        assert!((y[0] - (n / 2.0).tanh() * v[0] / n).abs() < 1e-15);
        // coordinate velocity = orthonormal components / lambda(0) = v / 2
        let shot = shoot(&[0.0, 0.0], &[v[0] / 2.0, v[1] / 2.0], 4000);
        assert!(dist(&shot, &y) < 1e-9, "{shot:?} vs {y:?}");
        // off-origin base
        let base = [0.3, -0.4];
        let maps = h.exp_log(&base).unwrap();
        let v = [0.5, 0.9];
        let lam = h.conformal_factor(&base);
        let shot = shoot(&base, &[v[0] / lam, v[1] / lam], 4000);
        assert!(dist(&shot, &maps.exp(&v).unwrap()) < 1e-9);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in [SpaceForm::euclidean(3).unwrap(), SpaceForm::hyperbolic(3, -1.0).unwrap(), SpaceForm::hyperbolic(2, -2.5).unwrap()] {
            for _ in 0..100 {
                let d = space.dim();
                let base = random_ball_point(&mut rng, d, 0.9);
                let v: Vec<f64> = random_ball_point(&mut rng, d, 10.0);
                let maps = space.exp_log(&base).unwrap();
                let y = maps.exp(&v).unwrap();
                let back = maps.log(&y).unwrap();
                let err = dist(&back, &v);
                assert!(err < 1e-9, "round trip error {err}");
                let dgy = space.distance(&base, &y).unwrap();
                assert!((norm(&back) - dgy).abs() < 1e-9);
            }
        }
        let e = SpaceForm::euclidean(2).unwrap();
        assert_eq!(e.exp_log(&[1.0, 2.0]).unwrap().exp(&[0.5, 0.5]).unwrap(), vec![1.5, 2.5]);
        let h = SpaceForm::hyperbolic(2, -1.0).unwrap();
        assert_eq!(h.exp_log(&[0.2, 0.1]).unwrap().exp(&[0.0, 0.0]).unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn croke_examples() {
        assert_eq!(croke_constant(2).unwrap(), 1.0);
        let c3 = croke_constant(3).unwrap();
        let oracle = (4.0 * PI).powf(2.0 / 3.0) * (PI / 2.0).powf(-1.0 / 3.0);
        assert!((c3 - oracle).abs() < 1e-12);
        assert!((c3 - 4.65).abs() < 0.01);
        let c4 = croke_constant(4).unwrap();
        let oracle4 = (2.0 * PI * PI).powf(0.75) * (4.0 * PI * (PI / 16.0)).powf(-0.5);
        assert!((c4 - oracle4).abs() < 1e-11);
        // sharp in dimension four: equals the Euclidean isoperimetric constant
        assert!((c4 - 4.0 * unit_ball_volume(4).powf(0.25)).abs() < 1e-11);
    }

    #[test]
    fn ball_volume_homogeneous_and_bishop_gromov() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 3] {
            let h = SpaceForm::hyperbolic(d, -1.0).unwrap();
            let v0 = comparison_volume(-1.0, d, 0.8).unwrap();
            for _ in 0..5 {
                let x = random_ball_point(&mut rng, d, 0.8);
                let v = h.ball_volume(&x, 0.8).unwrap();
                assert!((v / v0 - 1.0).abs() < 1e-9, "d={d} {v} vs {v0}");
            }
            let r1 = bishop_gromov_ratio_against(&h, &h.origin(), 1.0, 0.0).unwrap();
            let r2 = bishop_gromov_ratio_against(&h, &h.origin(), 2.0, 0.0).unwrap();
            assert!(r1 <= r2);
        }
        let e = SpaceForm::euclidean(3).unwrap();
        assert!((bishop_gromov_ratio(&e, &[1.0, 2.0, 3.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
