//! Randers metrics `F(x, y) = sqrt(g_x(y, y)) + beta_x(y)` over a space form,
//! and the Funk metric on the unit ball.
//!
//! The 1-form is radial: `beta = b(r) dr` with `r` the geodesic distance to
//! the origin. Such a form is exact (`beta = d(B(r))` with `B' = b`), so the
//! Finsler distance is `d_g(x, y) + B(r(y)) - B(r(x))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modelspace::{dot, norm, norm2, SpaceForm};

/// Radial profile `b(r)` of the 1-form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaProfile {
    Zero,
    Constant { value: f64 },
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude * tanh(r / scale)`.
    Saturating { amplitude: f64, scale: f64 },
}

impl BetaProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BetaProfile::Zero => true,
            BetaProfile::Constant { value } => value.is_finite(),
            BetaProfile::Gaussian { amplitude, width } => amplitude.is_finite() && *width > 0.0 && width.is_finite(),
            BetaProfile::Saturating { amplitude, scale } => amplitude.is_finite() && *scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid beta profile parameters: {self:?}"))
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            BetaProfile::Zero => 0.0,
            BetaProfile::Constant { value } => value,
            BetaProfile::Gaussian { amplitude, width } => amplitude * (-(r / width).powi(2)).exp(),
            BetaProfile::Saturating { amplitude, scale } => amplitude * (r / scale).tanh(),
        }
    }

    /// `B(r) = int_0^r b`.
    pub fn primitive(&self, r: f64) -> f64 {
        match *self {
            BetaProfile::Zero => 0.0,
            BetaProfile::Constant { value } => value * r,
            BetaProfile::Gaussian { amplitude, width } => {
                amplitude * width * std::f64::consts::PI.sqrt() / 2.0 * libm::erf(r / width)
            }
            BetaProfile::Saturating { amplitude, scale } => {
                let x = (r / scale).abs();
                amplitude * scale * (x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2)
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            BetaProfile::Zero => 0.0,
            BetaProfile::Constant { value } => value.abs(),
            BetaProfile::Gaussian { amplitude, .. } => amplitude.abs(),
            BetaProfile::Saturating { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// Pointwise data of a Randers metric: `g`, `g^{-1}` (row-major) and `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRanders {
    pub dim: usize,
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LocalRanders {
    fn quad(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let d = a.len();
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += m[i * d + j] * b[j];
            }
            acc += a[i] * row;
        }
        acc
    }

    fn sharp(&self, alpha: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.g_inv[i * d + j] * alpha[j]).sum()).collect()
    }

    pub fn g_norm(&self, y: &[f64]) -> f64 {
        Self::quad(&self.g, y, y).max(0.0).sqrt()
    }

    pub fn co_norm(&self, alpha: &[f64]) -> f64 {
        Self::quad(&self.g_inv, alpha, alpha).max(0.0).sqrt()
    }

    pub fn beta_norm(&self) -> f64 {
        self.co_norm(&self.beta)
    }

    pub fn norm(&self, y: &[f64]) -> f64 {
        self.g_norm(y) + dot(&self.beta, y)
    }

    fn polar_parts(&self, alpha: &[f64]) -> Result<(f64, f64, f64)> {
        let n2 = Self::quad(&self.g_inv, &self.beta, &self.beta);
        if n2 >= 1.0 {
            return Err(Error::DegenerateMetric { beta_norm: n2.sqrt() });
        }
        let b = Self::quad(&self.g_inv, alpha, &self.beta);
        let a = Self::quad(&self.g_inv, alpha, alpha).max(0.0);
        Ok((a, b, n2))
    }

    /// `F*(x, alpha) = (sqrt(B^2 + (1 - n^2) A) - B) / (1 - n^2)` with
    /// `A = |alpha|^2`, `B = <alpha, beta>`, `n = |beta|` (all dual norms).
    pub fn polar(&self, alpha: &[f64]) -> Result<f64> {
        let (a, b, n2) = self.polar_parts(alpha)?;
        let s = (b * b + (1.0 - n2) * a).sqrt();
        if b > 0.0 {
            // rationalised to avoid cancellation
            Ok(if s + b > 0.0 { a / (s + b) } else { 0.0 })
        } else {
            Ok((s - b) / (1.0 - n2))
        }
    }

    /// Legendre transform `J*(x, alpha)`, the derivative of `F*^2 / 2` in `alpha`.
    pub fn legendre(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        let (a, b, n2) = self.polar_parts(alpha)?;
        if a == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        let fstar = self.polar(alpha)?;
        let s = (b * b + (1.0 - n2) * a).sqrt();
        let a_sharp = self.sharp(alpha);
        let b_sharp = self.sharp(&self.beta);
        Ok((0..self.dim)
            .map(|i| fstar * ((b * b_sharp[i] + (1.0 - n2) * a_sharp[i]) / s - b_sharp[i]) / (1.0 - n2))
            .collect())
    }
}

/// A Finsler structure of Randers type on a chart of `R^d`.
pub trait Finsler {
    fn dim(&self) -> usize;
    fn local(&self, x: &[f64]) -> Result<LocalRanders>;
    /// `d_F(base, x)`.
    fn distance(&self, base: &[f64], x: &[f64]) -> Result<f64>;
    fn global_reversibility(&self) -> f64;
    fn global_uniformity(&self) -> f64;

    fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(self.dim(), y)?;
        Ok(self.local(x)?.norm(y))
    }

    fn polar(&self, x: &[f64], alpha: &[f64]) -> Result<f64> {
        check_len(self.dim(), alpha)?;
        self.local(x)?.polar(alpha)
    }
}

fn check_len(d: usize, v: &[f64]) -> Result<()> {
    if v.len() != d {
        return invalid(format!("vector has {} components, expected {d}", v.len()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RandersRepr", into = "RandersRepr")]
pub struct RandersStructure {
    base: SpaceForm,
    beta_profile: BetaProfile,
    beta_sup: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandersRepr {
    dim: usize,
    curvature: f64,
    beta_profile: BetaProfile,
    beta_sup: f64,
}

impl TryFrom<RandersRepr> for RandersStructure {
    type Error = Error;
    fn try_from(r: RandersRepr) -> Result<Self> {
        RandersStructure::new(SpaceForm::new(r.dim, r.curvature)?, r.beta_profile, r.beta_sup)
    }
}

impl From<RandersStructure> for RandersRepr {
    fn from(s: RandersStructure) -> Self {
        RandersRepr { dim: s.base.dim(), curvature: s.base.curvature(), beta_profile: s.beta_profile, beta_sup: s.beta_sup }
    }
}

/// Radii on which sampled suprema of `|b|` are taken.
fn sample_radii() -> impl Iterator<Item = f64> {
    (0..=4000).map(|i| i as f64 * 0.0125)
}

impl RandersStructure {
    pub fn new(base: SpaceForm, beta_profile: BetaProfile, beta_sup: f64) -> Result<Self> {
        beta_profile.validate()?;
        if !(0.0..1.0).contains(&beta_sup) {
            return invalid(format!("beta_sup must lie in [0, 1), got {beta_sup}"));
        }
        if beta_profile.sup_abs() > beta_sup {
            return invalid(format!(
                "beta profile reaches |b| = {} above the declared beta_sup = {beta_sup}",
                beta_profile.sup_abs()
            ));
        }
        Ok(RandersStructure { base, beta_profile, beta_sup })
    }

    /// The Riemannian structure `beta = 0`.
    pub fn riemannian(base: SpaceForm) -> Self {
        RandersStructure { base, beta_profile: BetaProfile::Zero, beta_sup: 0.0 }
    }

    pub fn base(&self) -> &SpaceForm {
        &self.base
    }

    pub fn beta_profile(&self) -> &BetaProfile {
        &self.beta_profile
    }

    /// The declared bound `a = sup |beta|_g`.
    pub fn beta_sup(&self) -> f64 {
        self.beta_sup
    }

    pub fn sampled_beta_sup(&self) -> f64 {
        sample_radii().map(|r| self.beta_profile.value(r).abs()).fold(0.0, f64::max)
    }

    /// `b(r)`.
    pub fn radial_beta(&self, r: f64) -> f64 {
        self.beta_profile.value(r)
    }

    /// `F*(x, s dr)` at geodesic radius `r`: `|s| / (1 + sign(s) b(r))`.
    pub fn radial_co_norm(&self, r: f64, slope: f64) -> f64 {
        let b = self.beta_profile.value(r);
        if slope >= 0.0 {
            slope / (1.0 + b)
        } else {
            -slope / (1.0 - b)
        }
    }

    /// `(1 - b(r)^2)^{(d+1)/2}`.
    pub fn radial_density(&self, r: f64) -> f64 {
        let b = self.beta_profile.value(r);
        (1.0 - b * b).powf((self.base.dim() as f64 + 1.0) / 2.0)
    }

    /// `d_F(origin, x)` for a point at geodesic radius `r`.
    pub fn finsler_radius(&self, r: f64) -> f64 {
        r + self.beta_profile.primitive(r)
    }

    /// Inverse of [`finsler_radius`](Self::finsler_radius) (strictly increasing).
    pub fn inverse_finsler_radius(&self, rf: f64) -> f64 {
        if rf <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = rf / (1.0 - self.beta_sup);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.finsler_radius(mid) < rf {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

impl Finsler for RandersStructure {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn local(&self, x: &[f64]) -> Result<LocalRanders> {
        self.base.check_point(x)?;
        let d = self.dim();
        let lam = self.base.conformal_factor(x);
        let mut g = vec![0.0; d * d];
        let mut g_inv = vec![0.0; d * d];
        for i in 0..d {
            g[i * d + i] = lam * lam;
            g_inv[i * d + i] = 1.0 / (lam * lam);
        }
        let n = norm(x);
        let beta = if n == 0.0 {
            vec![0.0; d]
        } else {
            let b = self.beta_profile.value(self.base.radius_from_chart(n));
            // dr = lambda * x / |x| in chart components
            x.iter().map(|c| b * lam * c / n).collect()
        };
        Ok(LocalRanders { dim: d, g, g_inv, beta })
    }

    fn distance(&self, base: &[f64], x: &[f64]) -> Result<f64> {
        let dg = self.base.distance(base, x)?;
        let rb = self.base.radius_of(base)?;
        let rx = self.base.radius_of(x)?;
        Ok(dg + self.beta_profile.primitive(rx) - self.beta_profile.primitive(rb))
    }

    fn global_reversibility(&self) -> f64 {
        let a = self.sampled_beta_sup();
        (1.0 + a) / (1.0 - a)
    }

    fn global_uniformity(&self) -> f64 {
        let a = self.sampled_beta_sup();
        ((1.0 - a) / (1.0 + a)).powi(2)
    }
}

/// The Funk metric on the open unit ball of `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunkModel {
    dim: usize,
}

impl FunkModel {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return invalid("Funk model requires d >= 2");
        }
        Ok(FunkModel { dim })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        check_len(self.dim, x)?;
        if norm2(x) >= 1.0 || x.iter().any(|c| !c.is_finite()) {
            return invalid(format!("point with |x| = {} lies outside the unit ball", norm(x)));
        }
        Ok(())
    }
}

impl Finsler for FunkModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn local(&self, x: &[f64]) -> Result<LocalRanders> {
        self.check(x)?;
        let d = self.dim;
        let s = norm2(x);
        let mut g = vec![0.0; d * d];
        let mut g_inv = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                g[i * d + j] = (delta + x[i] * x[j] / (1.0 - s)) / (1.0 - s);
                g_inv[i * d + j] = (1.0 - s) * (delta - x[i] * x[j]);
            }
        }
        let beta = x.iter().map(|c| c / (1.0 - s)).collect();
        Ok(LocalRanders { dim: d, g, g_inv, beta })
    }

    fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        check_len(self.dim, y)?;
        let x2 = norm2(x);
        let y2 = norm2(y);
        let xy = dot(x, y);
        Ok(((y2 - (x2 * y2 - xy * xy)).max(0.0).sqrt() + xy) / (1.0 - x2))
    }

    /// Closed form `F*(x, alpha) = |alpha| - <alpha, x>`.
    fn polar(&self, x: &[f64], alpha: &[f64]) -> Result<f64> {
        self.check(x)?;
        check_len(self.dim, alpha)?;
        Ok(norm(alpha) - dot(alpha, x))
    }

    /// `ln(|z - x| / |z - y|)` with `z` the boundary point hit by the ray from
    /// `x` through `y`.
    fn distance(&self, base: &[f64], x: &[f64]) -> Result<f64> {
        self.check(base)?;
        self.check(x)?;
        let u: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
        let uu = norm2(&u);
        if uu == 0.0 {
            return Ok(0.0);
        }
        let xu = dot(base, &u);
        let disc = xu * xu + uu * (1.0 - norm2(base));
        let t = (-xu + disc.sqrt()) / uu;
        // t - 1 computed from the other root to limit cancellation
        let c = (norm2(base) - 1.0) / uu;
        let t_other = c / t;
        let tm1 = (t - 1.0).max(0.0);
        let tm1 = if tm1 < 1e-3 {
            // t is the larger root of t^2 + 2 xu/uu t + c; (t-1)(t'-1) = 1 + 2xu/uu + c
            let p = 1.0 + 2.0 * xu / uu + c;
            p / (t_other - 1.0)
        } else {
            tm1
        };
        Ok((t / tm1).ln())
    }

    fn global_reversibility(&self) -> f64 {
        f64::INFINITY
    }

    fn global_uniformity(&self) -> f64 {
        0.0
    }
}

/// `d_F(0, x) = -ln(1 - |x|)` in the Funk model.
pub fn funk_distance(d: usize, x: &[f64]) -> Result<f64> {
    let m = FunkModel::new(d)?;
    m.check(x)?;
    Ok(-(-norm(x)).ln_1p())
}

pub fn finsler_norm(f: &dyn Finsler, x: &[f64], y: &[f64]) -> Result<f64> {
    f.norm(x, y)
}

pub fn polar_transform(f: &dyn Finsler, x: &[f64], alpha: &[f64]) -> Result<f64> {
    f.polar(x, alpha)
}

pub fn beta_norm(f: &dyn Finsler, x: &[f64]) -> Result<f64> {
    Ok(f.local(x)?.beta_norm())
}

/// `(1 + |beta|) / (1 - |beta|)` at `x`.
pub fn reversibility(f: &dyn Finsler, x: &[f64]) -> Result<f64> {
    let n = beta_norm(f, x)?;
    Ok((1.0 + n) / (1.0 - n))
}

/// `((1 - |beta|) / (1 + |beta|))^2` at `x`.
pub fn uniformity(f: &dyn Finsler, x: &[f64]) -> Result<f64> {
    let n = beta_norm(f, x)?;
    Ok(((1.0 - n) / (1.0 + n)).powi(2))
}

/// Factor `(1 - |beta|^2)^{(d+1)/2}` multiplying `dv_g`.
pub fn volume_density(f: &dyn Finsler, x: &[f64]) -> Result<f64> {
    let n = beta_norm(f, x)?;
    if n >= 1.0 {
        return Err(Error::DegenerateMetric { beta_norm: n });
    }
    Ok((1.0 - n * n).powf((f.dim() as f64 + 1.0) / 2.0))
}

/// `nabla_F u(x) = J*(x, du)`; zero for `du = 0`.
pub fn finsler_gradient(f: &dyn Finsler, x: &[f64], du: &[f64]) -> Result<Vec<f64>> {
    check_len(f.dim(), du)?;
    f.local(x)?.legendre(du)
}

/// `|F*(x, D d_F(base, x)) - 1|` with a central-difference differential.
pub fn eikonal_residual(f: &dyn Finsler, base: &[f64], x: &[f64]) -> Result<f64> {
    check_len(f.dim(), x)?;
    if base == x {
        return invalid("eikonal residual undefined at the base point");
    }
    let h = 1e-5 * norm(x).max(1.0);
    let mut diff = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f.distance(base, &xp)?;
        xp[i] = x[i] - h;
        let fm = f.distance(base, &xp)?;
        xp[i] = x[i];
        diff[i] = (fp - fm) / (2.0 * h);
    }
    Ok((f.polar(x, &diff)? - 1.0).abs())
}
