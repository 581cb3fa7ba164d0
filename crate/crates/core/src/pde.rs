//! The radial quasilinear problem `-Delta_{F,p} u = lambda alpha(x) h(u)` on a
//! Randers perturbation of hyperbolic space: discrete energy, its gradient,
//! the McKean and coercivity constants, the Bonanno parameters and a
//! multi-start critical point search.
//!
//! Profiles are piecewise linear in the geodesic radius with `u = 0` at the
//! cutoff `R_max`. The gradient term uses the cell midpoint for `beta` and the
//! volume density; the zeroth-order terms use trapezoidal weights with the
//! exact area factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modelspace::{Model, SpaceForm};
use crate::numerics::{integrate_relative, solve_spd_tridiagonal};
use crate::randers::{BetaProfile, RandersStructure};
use crate::rearrange::RadialProfile;

/// Radial weight `alpha` as a function of `d_F(x_0, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaProfile {
    /// `amplitude * exp(-(s / width)^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude * exp(-rate * s)`; integrable when `rate > (d - 1) kappa`.
    Exponential { amplitude: f64, rate: f64 },
}

impl AlphaProfile {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            AlphaProfile::Gaussian { amplitude, width } => amplitude * (-(s / width).powi(2)).exp(),
            AlphaProfile::Exponential { amplitude, rate } => amplitude * (-rate * s).exp(),
        }
    }

    fn validate(&self, d: usize, kappa: f64) -> Result<()> {
        match *self {
            AlphaProfile::Gaussian { amplitude, width } => {
                if !(amplitude > 0.0 && width > 0.0) || !amplitude.is_finite() || !width.is_finite() {
                    return invalid("gaussian alpha needs amplitude > 0 and width > 0");
                }
            }
            AlphaProfile::Exponential { amplitude, rate } => {
                if !(amplitude > 0.0) || !amplitude.is_finite() {
                    return invalid("exponential alpha needs amplitude > 0");
                }
                // d_F >= (1 - a) r only gives integrability for rate (1 - a) > (d - 1) kappa;
                // the check below is the Riemannian threshold, the structure check follows
                if !(rate > (d as f64 - 1.0) * kappa) {
                    return invalid(format!("exponential alpha needs rate > (d - 1) kappa = {}", (d as f64 - 1.0) * kappa));
                }
            }
        }
        Ok(())
    }
}

/// Reference nonlinearity `h(s) = s_+^{q-1}` for `s <= 1`, `s^{w-1}` for `s > 1`.
///
/// `H(s) = s_+^q / q` on `s <= 1` and `1/q + (s^w - 1)/w` above, so (A1)
/// holds with `s_0 = 1`, (A2) with `C = 1` and (A3) with `lim H/s^q = 1/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nonlinearity {
    pub w: f64,
    pub q: f64,
}

impl Nonlinearity {
    pub fn new(w: f64, q: f64, p: f64) -> Result<Self> {
        if !(w > 1.0 && w < p) {
            return invalid(format!("need 1 < w < p, got w = {w}, p = {p}"));
        }
        if !(q > p) || !q.is_finite() {
            return invalid(format!("need q > p, got q = {q}, p = {p}"));
        }
        Ok(Nonlinearity { w, q })
    }

    /// Default `(w, q) = (1.5, p + 1)`.
    pub fn reference(p: f64) -> Result<Self> {
        Self::new(1.5, p + 1.0, p)
    }

    pub fn h(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 1.0 {
            s.powf(self.q - 1.0)
        } else {
            s.powf(self.w - 1.0)
        }
    }

    pub fn dh(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 1.0 {
            (self.q - 1.0) * s.powf(self.q - 2.0)
        } else {
            (self.w - 1.0) * s.powf(self.w - 2.0)
        }
    }

    /// `H(s) = int_0^s h`.
    pub fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 1.0 {
            s.powf(self.q) / self.q
        } else {
            1.0 / self.q + (s.powf(self.w) - 1.0) / self.w
        }
    }

    pub fn s0(&self) -> f64 {
        1.0
    }

    pub fn growth_constant(&self) -> f64 {
        1.0
    }

    /// `H(s) > 0` on a grid of `(0, s_0]`.
    pub fn check_a1(&self) -> Result<()> {
        for i in 1..=1000 {
            let s = self.s0() * i as f64 / 1000.0;
            if !(self.primitive(s) > 0.0) {
                return Err(Error::Validation(format!("(A1) fails: H({s}) <= 0")));
            }
        }
        Ok(())
    }

    /// `|h(s)| <= C (1 + |s|^{w-1})` on a grid over `[-100, 100]`.
    pub fn check_a2(&self) -> Result<()> {
        let c = self.growth_constant();
        for i in 0..=20_000 {
            let s = -100.0 + i as f64 * 0.01;
            if self.h(s).abs() > c * (1.0 + s.abs().powf(self.w - 1.0)) * (1.0 + 1e-12) {
                return Err(Error::Validation(format!("(A2) fails at s = {s}")));
            }
        }
        Ok(())
    }

    /// `sup H(s)/|s|^q` over a geometric grid of `0 < |s| < s1` down to 1e-8:
    /// the constant `C_1` of (A3).
    pub fn a3_constant(&self, s1: f64) -> Result<f64> {
        let mut sup = 0.0f64;
        let mut s = s1;
        while s >= 1e-8 {
            for x in [s, -s] {
                let v = self.primitive(x) / x.abs().powf(self.q);
                if !v.is_finite() {
                    return Err(Error::Validation(format!("(A3) fails at s = {x}")));
                }
                sup = sup.max(v);
            }
            s *= 0.9;
        }
        Ok(sup)
    }

    /// `C_2 = max(C_1, C (1 + s1^{w-1}) / s1^{q-1})`, so `H(s) <= C_2 |s|^q` on the line.
    pub fn c2(&self, s1: f64) -> Result<f64> {
        let c1 = self.a3_constant(s1)?;
        Ok(c1.max(self.growth_constant() * (1.0 + s1.powf(self.w - 1.0)) / s1.powf(self.q - 1.0)))
    }
}

/// Problem data. The base is hyperbolic with curvature `-kappa^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PdeSpec", into = "PdeSpec")]
pub struct PdeProblem {
    p: f64,
    lambda: f64,
    alpha: AlphaProfile,
    randers: RandersStructure,
    nonlinearity: Nonlinearity,
    cells: usize,
    r_max: f64,
}

/// Serialized form of [`PdeProblem`]; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeSpec {
    pub dim: usize,
    pub p: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub alpha: AlphaProfile,
    pub beta_profile: BetaProfile,
    pub beta_sup: f64,
    pub nonlinearity: Option<Nonlinearity>,
    pub cells: usize,
    pub r_max: Option<f64>,
}

impl Default for PdeSpec {
    fn default() -> Self {
        PdeSpec {
            dim: 2,
            p: 3.0,
            kappa: 1.0,
            lambda: 0.0,
            alpha: AlphaProfile::Gaussian { amplitude: 1.0, width: 1.0 },
            beta_profile: BetaProfile::Zero,
            beta_sup: 0.0,
            nonlinearity: None,
            cells: 2048,
            r_max: None,
        }
    }
}

impl TryFrom<PdeSpec> for PdeProblem {
    type Error = Error;
    fn try_from(s: PdeSpec) -> Result<Self> {
        if !(s.kappa > 0.0) || !s.kappa.is_finite() {
            return invalid("kappa must be positive");
        }
        let base = SpaceForm::hyperbolic(s.dim, -s.kappa * s.kappa)?;
        let randers = RandersStructure::new(base, s.beta_profile, s.beta_sup)?;
        let nl = match s.nonlinearity {
            Some(n) => Nonlinearity::new(n.w, n.q, s.p)?,
            None => Nonlinearity::reference(s.p)?,
        };
        PdeProblem::new(s.p, s.lambda, s.alpha, randers, nl, s.cells, s.r_max.unwrap_or(12.0 / s.kappa))
    }
}

impl From<PdeProblem> for PdeSpec {
    fn from(p: PdeProblem) -> Self {
        PdeSpec {
            dim: p.randers.base().dim(),
            p: p.p,
            kappa: p.kappa(),
            lambda: p.lambda,
            alpha: p.alpha,
            beta_profile: p.randers.beta_profile().clone(),
            beta_sup: p.randers.beta_sup(),
            nonlinearity: Some(p.nonlinearity),
            cells: p.cells,
            r_max: Some(p.r_max),
        }
    }
}

impl PdeProblem {
    pub fn new(
        p: f64,
        lambda: f64,
        alpha: AlphaProfile,
        randers: RandersStructure,
        nonlinearity: Nonlinearity,
        cells: usize,
        r_max: f64,
    ) -> Result<Self> {
        let base = *randers.base();
        if base.model() != Model::PoincareBall {
            return invalid("the PDE problem lives on a hyperbolic base");
        }
        let d = base.dim();
        if !(p > d as f64) || !p.is_finite() {
            return invalid(format!("the PDE problem needs p > d = {d}, got {p}"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return invalid("lambda must be non-negative");
        }
        if cells < 4 || !(r_max > 0.0) || !r_max.is_finite() {
            return invalid("need at least 4 cells and r_max > 0");
        }
        alpha.validate(d, base.kappa())?;
        if let AlphaProfile::Exponential { rate, .. } = alpha {
            if !(rate * (1.0 - randers.beta_sup()) > (d as f64 - 1.0) * base.kappa()) {
                return invalid("exponential alpha is not integrable against the Randers volume");
            }
        }
        Nonlinearity::new(nonlinearity.w, nonlinearity.q, p)?;
        Ok(PdeProblem { p, lambda, alpha, randers, nonlinearity, cells, r_max })
    }

    /// The reference problem: `d = 2`, `p = 3`, `kappa = 1`, Gaussian `alpha`,
    /// `N = 2048`, `R_max = 12`.
    pub fn reference(randers: RandersStructure) -> Result<Self> {
        let p = 3.0;
        let r_max = 12.0 / randers_kappa(&randers);
        Self::new(
            p,
            0.0,
            AlphaProfile::Gaussian { amplitude: 1.0, width: 1.0 },
            randers,
            Nonlinearity::reference(p)?,
            2048,
            r_max,
        )
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut c = self.clone();
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return invalid("lambda must be non-negative");
        }
        c.lambda = lambda;
        Ok(c)
    }

    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        Self::new(self.p, self.lambda, self.alpha.clone(), self.randers.clone(), self.nonlinearity, cells, self.r_max)
    }

    pub fn alpha(&self) -> &AlphaProfile {
        &self.alpha
    }

    pub fn randers(&self) -> &RandersStructure {
        &self.randers
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn dim(&self) -> usize {
        self.randers.base().dim()
    }

    pub fn kappa(&self) -> f64 {
        randers_kappa(&self.randers)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Uniform grid on `[0, R_max]`.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.r_max * i as f64 / self.cells as f64).collect()
    }

    pub fn profile(&self, values: Vec<f64>) -> Result<RadialProfile> {
        RadialProfile::new(self.grid(), values, self.randers.clone())
    }
}

fn randers_kappa(r: &RandersStructure) -> f64 {
    (-r.base().curvature()).sqrt()
}

/// Weights of the discrete energy on a fixed grid.
struct Disc {
    p: f64,
    h: Vec<f64>,
    /// `beta` at cell midpoints
    b_mid: Vec<f64>,
    /// `dens(mid) * shell volume`
    vol_f: Vec<f64>,
    vol_g: Vec<f64>,
    /// trapezoidal `alpha * dens * area` node weights
    alpha_mass: Vec<f64>,
    mass_f: Vec<f64>,
    mass_g: Vec<f64>,
}

impl Disc {
    fn new(problem: &PdeProblem, grid: &[f64]) -> Self {
        let f = &problem.randers;
        let space = f.base();
        let n = grid.len() - 1;
        let h: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
        let mut b_mid = Vec::with_capacity(n);
        let mut vol_f = Vec::with_capacity(n);
        let mut vol_g = Vec::with_capacity(n);
        for i in 0..n {
            let mid = 0.5 * (grid[i] + grid[i + 1]);
            let v = space.shell_volume(grid[i], grid[i + 1]);
            b_mid.push(f.radial_beta(mid));
            vol_g.push(v);
            vol_f.push(v * f.radial_density(mid));
        }
        let mut mass_g = vec![0.0; n + 1];
        for k in 0..=n {
            let left = if k > 0 { h[k - 1] } else { 0.0 };
            let right = if k < n { h[k] } else { 0.0 };
            mass_g[k] = 0.5 * (left + right) * space.sphere_area(grid[k]);
        }
        let mass_f: Vec<f64> = mass_g.iter().zip(grid).map(|(m, &r)| m * f.radial_density(r)).collect();
        let alpha_mass =
            mass_f.iter().zip(grid).map(|(m, &r)| m * problem.alpha.value(f.finsler_radius(r))).collect();
        Disc { p: problem.p, h, b_mid, vol_f, vol_g, alpha_mass, mass_f, mass_g }
    }

    fn cells(&self) -> usize {
        self.h.len()
    }

    /// `c^p` with `F*(x, s dr) = c |s|`.
    fn cstar_p(&self, i: usize, s: f64) -> f64 {
        let b = self.b_mid[i];
        let c = if s >= 0.0 { 1.0 / (1.0 + b) } else { 1.0 / (1.0 - b) };
        c.powf(self.p)
    }

    fn phi(&self, u: &[f64]) -> f64 {
        let p = self.p;
        (0..self.cells())
            .map(|i| {
                let s = (u[i + 1] - u[i]) / self.h[i];
                self.vol_f[i] * self.cstar_p(i, s) * s.abs().powf(p)
            })
            .sum::<f64>()
            / p
    }

    fn j(&self, u: &[f64], nl: &Nonlinearity) -> f64 {
        u.iter().zip(&self.alpha_mass).map(|(&v, m)| m * nl.primitive(v)).sum()
    }

    /// `E`, and the gradient of `Phi - lambda J` into `grad`.
    fn energy_grad(&self, u: &[f64], nl: &Nonlinearity, lambda: f64, grad: &mut [f64]) -> (f64, f64) {
        let p = self.p;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut phi = 0.0;
        for i in 0..self.cells() {
            let s = (u[i + 1] - u[i]) / self.h[i];
            let cp = self.cstar_p(i, s);
            let a = s.abs();
            phi += self.vol_f[i] * cp * a.powf(p);
            let ds = self.vol_f[i] * cp * a.powf(p - 1.0) * s.signum() / self.h[i];
            grad[i + 1] += ds;
            grad[i] -= ds;
        }
        phi /= p;
        let mut j = 0.0;
        for (k, &v) in u.iter().enumerate() {
            j += self.alpha_mass[k] * nl.primitive(v);
            grad[k] -= lambda * self.alpha_mass[k] * nl.h(v);
        }
        (phi, j)
    }

    /// Tridiagonal Hessian of `Phi - lambda J`: (diagonal, super-diagonal).
    fn hessian(&self, u: &[f64], nl: &Nonlinearity, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let n = self.cells();
        let mut diag = vec![0.0; n + 1];
        let mut off = vec![0.0; n];
        for i in 0..n {
            let s = (u[i + 1] - u[i]) / self.h[i];
            let k = self.vol_f[i] * self.cstar_p(i, s) * (p - 1.0) * s.abs().powf(p - 2.0) / (self.h[i] * self.h[i]);
            diag[i] += k;
            diag[i + 1] += k;
            off[i] = -k;
        }
        for (k, &v) in u.iter().enumerate() {
            diag[k] -= lambda * self.alpha_mass[k] * nl.dh(v);
        }
        (diag, off)
    }

    /// `||u||^p` in `W^{1,p}_g`.
    fn w1p_g_pow(&self, u: &[f64]) -> f64 {
        let p = self.p;
        let grad: f64 = (0..self.cells()).map(|i| self.vol_g[i] * ((u[i + 1] - u[i]) / self.h[i]).abs().powf(p)).sum();
        grad + u.iter().zip(&self.mass_g).map(|(v, m)| m * v.abs().powf(p)).sum::<f64>()
    }
}

/// Newton-type direction `-(H + mu D)^{-1} g`, raising the shift `mu` from
/// `mu0` by factors of 10 until the matrix is positive definite. Rows in
/// `fixed` are decoupled. Returns the direction and the shift used.
fn descent_direction(
    mut diag: Vec<f64>,
    mut off: Vec<f64>,
    scale: &[f64],
    grad: &[f64],
    fixed: &[usize],
    mu0: f64,
) -> (Vec<f64>, f64) {
    let n = diag.len();
    for &k in fixed {
        diag[k] = 1.0;
        if k > 0 {
            off[k - 1] = 0.0;
        }
        if k < n - 1 {
            off[k] = 0.0;
        }
    }
    let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
    for &k in fixed {
        rhs[k] = 0.0;
    }
    let mut mu = mu0;
    loop {
        let shifted: Vec<f64> = diag.iter().zip(scale).map(|(a, s)| a + mu * s).collect();
        if let Some(x) = solve_spd_tridiagonal(&shifted, &off, &rhs) {
            return (x, mu);
        }
        mu = if mu == 0.0 { 1e-10 } else { mu * 10.0 };
        if mu > 1e30 {
            // steepest descent in the scale metric
            return (rhs.iter().zip(scale).map(|(r, s)| r / s).collect(), mu);
        }
    }
}

fn shift_scale(diag: &[f64], mass: &[f64]) -> Vec<f64> {
    let mean = mass.iter().sum::<f64>() / mass.len() as f64;
    diag.iter().zip(mass).map(|(a, m)| a.abs() + m + 1e-12 * mean).collect()
}

fn check_grid(problem: &PdeProblem, u: &RadialProfile) -> Result<()> {
    if u.space() != problem.randers.base() {
        return invalid("profile lives on a different space than the problem");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyValues {
    pub phi: f64,
    pub j: f64,
    pub e: f64,
}

/// `Phi = (1/p) int F*^p(x, Du) dV_F`, `J = int alpha H(u) dV_F`, `E = Phi - lambda J`
/// on the profile's own grid.
pub fn energy(problem: &PdeProblem, u: &RadialProfile) -> Result<EnergyValues> {
    check_grid(problem, u)?;
    let disc = Disc::new(problem, u.grid());
    let phi = disc.phi(u.values());
    let j = disc.j(u.values(), &problem.nonlinearity);
    Ok(EnergyValues { phi, j, e: phi - problem.lambda * j })
}

/// Gradient of the discrete `E_lambda` with respect to every nodal value.
pub fn energy_gradient(problem: &PdeProblem, u: &RadialProfile) -> Result<Vec<f64>> {
    check_grid(problem, u)?;
    let disc = Disc::new(problem, u.grid());
    let mut g = vec![0.0; u.grid().len()];
    disc.energy_grad(u.values(), &problem.nonlinearity, problem.lambda, &mut g);
    Ok(g)
}

/// `u_{s0,R,r}`: `s0` on `B_F(r)`, linear in `d_F` down to 0 on `B_F(R) \ B_F(r)`.
pub fn test_function(s0: f64, big_r: f64, r: f64, f: &RandersStructure, grid: &[f64]) -> Result<RadialProfile> {
    let a = f.beta_sup();
    if !(s0 > 0.0) || !s0.is_finite() {
        return invalid("s0 must be positive");
    }
    if !(r > 0.0 && r < big_r * (1.0 - a) / (1.0 + a)) {
        return invalid(format!("need 0 < r < R (1 - a)/(1 + a) = {}", big_r * (1.0 - a) / (1.0 + a)));
    }
    let values = grid
        .iter()
        .map(|&rg| {
            let df = f.finsler_radius(rg);
            if df <= r {
                s0
            } else if df < big_r {
                s0 * (big_r - df) / (big_r - r)
            } else {
                0.0
            }
        })
        .collect();
    RadialProfile::new(grid.to_vec(), values, f.clone())
}

/// `Vol_F(B_F(x_0, s))`.
pub fn finsler_ball_volume(f: &RandersStructure, s: f64) -> Result<f64> {
    let rg = f.inverse_finsler_radius(s);
    let space = f.base();
    integrate_relative(|r| space.sphere_area(r) * f.radial_density(r), 0.0, rg, 1e-12)
}

/// `((d - 1) kappa / p)^p`.
pub fn mckean_bound(d: usize, kappa: f64, p: f64) -> Result<f64> {
    if !(kappa > 0.0) || !(p > 1.0) || d < 2 {
        return invalid("need kappa > 0, p > 1, d >= 2");
    }
    Ok(((d as f64 - 1.0) * kappa / p).powf(p))
}

/// `c(d, a, p, kappa) = (1 - a^2)^{(d+1)/2} / (1 + a)^p * (d-1)^p kappa^p / (p^p + (d-1)^p kappa^p)`.
pub fn coercivity_constant(d: usize, a: f64, p: f64, kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return invalid("need a in [0, 1)");
    }
    mckean_bound(d, kappa, p)?;
    let m = ((d as f64 - 1.0) * kappa).powf(p);
    Ok((1.0 - a * a).powf((d as f64 + 1.0) / 2.0) / (1.0 + a).powf(p) * m / (p.powf(p) + m))
}

/// Measured `c_inf = sup ||u||_inf / ||u||_{W^{1,p}_g}` on the problem grid,
/// over profiles peaking at a handful of radii.
pub fn sup_embedding_constant(problem: &PdeProblem) -> f64 {
    let grid = problem.grid();
    let disc = Disc::new(problem, &grid);
    let n = problem.cells;
    let peaks: Vec<usize> = [0.0, 0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|r| ((r / problem.r_max) * n as f64).round() as usize)
        .filter(|&k| k < n)
        .collect();
    peaks.iter().map(|&k| 1.0 / min_w1p_with_peak(&disc, k).powf(1.0 / problem.p)).fold(0.0, f64::max)
}

/// `min ||u||^p_{W^{1,p}_g}` subject to `u_k = 1`, `u_N = 0` (convex, Newton).
fn min_w1p_with_peak(disc: &Disc, k: usize) -> f64 {
    let p = disc.p;
    let n = disc.cells();
    let mut u: Vec<f64> = (0..=n).map(|i| if i == k { 1.0 } else { (-((i as f64 - k as f64).abs()) / 8.0).exp() }).collect();
    u[n] = 0.0;
    let fixed = [k, n];
    let mut f = disc.w1p_g_pow(&u);
    for _ in 0..200 {
        let mut g = vec![0.0; n + 1];
        let mut diag = vec![0.0; n + 1];
        let mut off = vec![0.0; n];
        for i in 0..n {
            let s = (u[i + 1] - u[i]) / disc.h[i];
            let ds = disc.vol_g[i] * p * s.abs().powf(p - 1.0) * s.signum() / disc.h[i];
            g[i + 1] += ds;
            g[i] -= ds;
            let kk = disc.vol_g[i] * p * (p - 1.0) * s.abs().powf(p - 2.0) / (disc.h[i] * disc.h[i]);
            diag[i] += kk;
            diag[i + 1] += kk;
            off[i] = -kk;
        }
        for (i, &v) in u.iter().enumerate() {
            g[i] += disc.mass_g[i] * p * v.abs().powf(p - 1.0) * v.signum();
            diag[i] += disc.mass_g[i] * p * (p - 1.0) * v.abs().powf(p - 2.0);
        }
        g[k] = 0.0;
        g[n] = 0.0;
        let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-13 * (1.0 + f) {
            break;
        }
        let scale = shift_scale(&diag, &disc.mass_g);
        let (d, _) = descent_direction(diag, off, &scale, &g, &fixed, 0.0);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-16 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = disc.w1p_g_pow(&trial);
            if ft <= f + 1e-4 * t * slope {
                moved = ft < f;
                u = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    f
}

/// Outcome of the Bonanno parameter selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BonannoParameters {
    pub rho0: f64,
    pub a_bar: f64,
    /// Right end of the parameter interval `[0, a_bar]`.
    pub interval_end: f64,
    /// `zeta = 1 + rho0` in `a_bar = zeta rho0 (rho0 J(u1)/Phi(u1) - sup)^{-1}`.
    pub zeta: f64,
    pub phi_u1: f64,
    pub j_u1: f64,
    /// Analytic bound on `sup{J : Phi <= rho0}` used for the selection.
    pub sup_bound: f64,
    /// Projected-ascent estimate of the same supremum.
    pub sup_measured: f64,
    /// `a_bar` with the measured supremum in place of the bound.
    pub a_bar_measured: f64,
    pub coercivity: f64,
    pub c_inf: f64,
    pub c2: f64,
    pub alpha_l1: f64,
}

impl BonannoParameters {
    /// `rho0 < Phi(u1)` and `sup/rho0 < J(u1)/Phi(u1)` with the bound.
    pub fn hypotheses_hold(&self) -> bool {
        self.rho0 > 0.0 && self.rho0 < self.phi_u1 && self.sup_bound / self.rho0 < self.j_u1 / self.phi_u1
    }
}

/// Constants of the analytic supremum bound `J <= K rho^{q/p}`.
struct SupBound {
    c: f64,
    c_inf: f64,
    c2: f64,
    alpha_l1: f64,
    p: f64,
    q: f64,
}

impl SupBound {
    fn new(problem: &PdeProblem, disc: &Disc) -> Result<Self> {
        let c = coercivity_constant(problem.dim(), problem.randers.beta_sup(), problem.p, problem.kappa())?;
        let c_inf = sup_embedding_constant(problem);
        let c2 = problem.nonlinearity.c2(1.0)?;
        let alpha_l1 = disc.alpha_mass.iter().sum();
        Ok(SupBound { c, c_inf, c2, alpha_l1, p: problem.p, q: problem.nonlinearity.q })
    }

    /// `C_2 ||alpha||_1 c_inf^q (p rho / c)^{q/p}`.
    fn at(&self, rho: f64) -> f64 {
        self.c2 * self.alpha_l1 * self.c_inf.powf(self.q) * (self.p * rho / self.c).powf(self.q / self.p)
    }

    /// `C_2 ||alpha||_1 c_inf^q ||u||^q_{W^{1,p}_g}`.
    fn for_norm(&self, w_norm: f64) -> f64 {
        self.c2 * self.alpha_l1 * self.c_inf.powf(self.q) * w_norm.powf(self.q)
    }
}

/// Picks `rho0` on `rho_sweep` satisfying `rho0 < c ||u1||^p_g <= p Phi(u1)`,
/// `rho0 < Phi(u1)` and `bound(rho0)/rho0 < J(u1)/Phi(u1)`, maximizing `a_bar`.
pub fn bonanno_parameters(problem: &PdeProblem, s0: f64, big_r: f64, r: f64, rho_sweep: &[f64]) -> Result<BonannoParameters> {
    let grid = problem.grid();
    let disc = Disc::new(problem, &grid);
    let u1 = test_function(s0, big_r, r, &problem.randers, &grid)?;
    let phi1 = disc.phi(u1.values());
    let j1 = disc.j(u1.values(), &problem.nonlinearity);
    if !(j1 > 0.0) || !(phi1 > 0.0) {
        return Err(Error::SweepFailure(format!("test function has J = {j1}, Phi = {phi1}")));
    }
    let bound = SupBound::new(problem, &disc)?;
    let ratio = j1 / phi1;
    let cap = (bound.c * disc.w1p_g_pow(u1.values())).min(phi1);
    let mut best: Option<(f64, f64)> = None;
    for &rho in rho_sweep {
        if !(rho > 0.0) || !(rho < cap) {
            continue;
        }
        let gap = ratio - bound.at(rho) / rho;
        if gap > 0.0 {
            let a_bar = (1.0 + rho) / gap;
            if best.is_none_or(|(_, b)| a_bar > b) {
                best = Some((rho, a_bar));
            }
        }
    }
    let (rho0, a_bar) = best.ok_or_else(|| {
        Error::SweepFailure("no rho on the sweep satisfies both strict inequalities; extend the grid toward 0".into())
    })?;
    let sup_measured = sup_j_estimate(problem, rho0, SUP_SEEDS)?.sup;
    let gap_measured = ratio - sup_measured / rho0;
    Ok(BonannoParameters {
        rho0,
        a_bar,
        interval_end: a_bar,
        zeta: 1.0 + rho0,
        phi_u1: phi1,
        j_u1: j1,
        sup_bound: bound.at(rho0),
        sup_measured,
        a_bar_measured: if gap_measured > 0.0 { (1.0 + rho0) / gap_measured } else { f64::INFINITY },
        coercivity: bound.c,
        c_inf: bound.c_inf,
        c2: bound.c2,
        alpha_l1: bound.alpha_l1,
    })
}

pub const SUP_SEEDS: usize = 20;

/// Projected-ascent estimate of `sup{J(u) : Phi(u) <= rho}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupEstimate {
    pub rho: f64,
    pub sup: f64,
    /// Every accepted iterate as `(J, ||u||_{W^{1,p}_g})`.
    #[serde(skip)]
    pub candidates: Vec<(f64, f64)>,
    /// The analytic bound at `rho`.
    pub bound: f64,
}

/// Ascent on `J` over `{Phi = rho, u >= 0}` (`Phi` is positively
/// `p`-homogeneous, so the projection is a clamp followed by a rescale).
pub fn sup_j_estimate(problem: &PdeProblem, rho: f64, seeds: usize) -> Result<SupEstimate> {
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid("rho must be positive");
    }
    let grid = problem.grid();
    let disc = Disc::new(problem, &grid);
    let nl = &problem.nonlinearity;
    let n = problem.cells;
    let p = problem.p;
    let project = |v: &[f64]| -> Option<Vec<f64>> {
        let mut w: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
        w[n] = 0.0;
        let ph = disc.phi(&w);
        if !(ph > 0.0) {
            return None;
        }
        let k = (rho / ph).powf(1.0 / p);
        Some(w.iter().map(|x| x * k).collect())
    };
    let mut candidates = Vec::new();
    let mut sup = 0.0f64;
    for s in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb0_0000 + s as u64);
        let width = 0.25 * 1.25f64.powi(s as i32);
        let center = if s % 3 == 0 { 0.0 } else { 0.1 * s as f64 };
        let seed: Vec<f64> = grid
            .iter()
            .map(|&r| (-((r - center) / width).powi(2)).exp() * (1.0 + 0.2 * (rng.gen::<f64>() - 0.5)))
            .collect();
        let Some(mut u) = project(&seed) else { continue };
        let mut j = disc.j(&u, nl);
        candidates.push((j, disc.w1p_g_pow(&u).powf(1.0 / p)));
        let mut step = 1.0;
        let mut g = vec![0.0; n + 1];
        for _ in 0..60 {
            // gradient of J, preconditioned by the Hessian of Phi
            disc.energy_grad(&u, nl, 1.0, &mut g);
            let mut gj = vec![0.0; n + 1];
            for k in 0..=n {
                gj[k] = disc.alpha_mass[k] * nl.h(u[k]);
            }
            let (diag, off) = disc.hessian(&u, nl, 0.0);
            let scale = shift_scale(&diag, &disc.mass_f);
            let neg: Vec<f64> = gj.iter().map(|x| -x).collect();
            let (dir, _) = descent_direction(diag, off, &scale, &neg, &[n], 0.0);
            let mut improved = false;
            while step > 1e-12 {
                let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                if let Some(t) = project(&trial) {
                    let jt = disc.j(&t, nl);
                    if jt > j {
                        u = t;
                        j = jt;
                        candidates.push((j, disc.w1p_g_pow(&u).powf(1.0 / p)));
                        step *= 2.0;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        sup = sup.max(j);
    }
    let bound = SupBound::new(problem, &disc)?.at(rho);
    Ok(SupEstimate { rho, sup, candidates, bound })
}

/// `J <= C_2 ||alpha||_1 c_inf^q ||u||^q_{W^{1,p}_g}` for a candidate with the given norm.
pub fn sup_norm_bound(problem: &PdeProblem, w_norm: f64) -> Result<f64> {
    let grid = problem.grid();
    let disc = Disc::new(problem, &grid);
    Ok(SupBound::new(problem, &disc)?.for_norm(w_norm))
}

/// Per-start result of the descent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: usize,
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    /// Energy after every accepted step, starting with the initial value.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointReport {
    pub lambda: f64,
    pub profiles: Vec<RadialProfile>,
    pub energies: Vec<f64>,
    pub gradient_norms: Vec<f64>,
    /// `distinct[i][j]`: L-infinity distance above the separation threshold.
    pub distinct: Vec<Vec<bool>>,
    pub threshold: f64,
    pub starts: Vec<StartOutcome>,
}

impl CriticalPointReport {
    pub fn nontrivial(&self) -> usize {
        self.profiles.iter().filter(|u| linf(u.values(), &[]) > self.threshold).count()
    }
}

pub const MAX_DESCENT_ITERS: usize = 400;

/// Stopping rule: `||grad E|| < 1e-8 (1 + |E|)`.
pub fn converged(energy: f64, gradient_norm: f64) -> bool {
    gradient_norm < 1e-8 * (1.0 + energy.abs())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max |a - b|`, with a missing `b` read as zero.
fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().enumerate().map(|(i, x)| (x - b.get(i).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max)
}

/// Damped Newton descent on `E_lambda` with `u_N = 0` fixed.
fn descend(disc: &Disc, nl: &Nonlinearity, lambda: f64, mut u: Vec<f64>, start: usize) -> (Vec<f64>, StartOutcome) {
    let n = disc.cells();
    u[n] = 0.0;
    let mut g = vec![0.0; n + 1];
    let eval = |u: &[f64], g: &mut [f64]| {
        let (phi, j) = disc.energy_grad(u, nl, lambda, g);
        g[n] = 0.0;
        phi - lambda * j
    };
    let mut e = eval(&u, &mut g);
    let mut trace = vec![e];
    let mut iterations = 0;
    let mut gn = norm2(&g);
    let mut scratch = vec![0.0; n + 1];
    // Levenberg–Marquardt control of the shift: the p-Laplacian Hessian
    // degenerates where the slope vanishes, so undamped Newton steps overshoot
    let mut mu = 0.0;
    while !converged(e, gn) && iterations < MAX_DESCENT_ITERS {
        iterations += 1;
        let (diag, off) = disc.hessian(&u, nl, lambda);
        let scale = shift_scale(&diag, &disc.mass_f);
        let (d, mu_used) = descent_direction(diag, off, &scale, &g, &[n], mu);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-20 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let et = eval(&trial, &mut scratch);
            // near a minimum the predicted decrease falls below the rounding
            // of E itself; there a reduction of the gradient norm decides
            let flat = (et - e).abs() <= 1e-13 * (1.0 + e.abs()) && norm2(&scratch) < gn;
            if et <= e + 1e-4 * t * slope || flat {
                u = trial;
                e = et;
                std::mem::swap(&mut g, &mut scratch);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if mu_used > 1e20 {
                break;
            }
            mu = (mu_used * 100.0).max(1e-6);
            continue;
        }
        mu = if t == 1.0 { mu_used * 0.1 } else { (mu_used / t).max(1e-6) };
        if mu < 1e-12 {
            mu = 0.0;
        }
        trace.push(e);
        gn = norm2(&g);
    }
    let outcome =
        StartOutcome { start, converged: converged(e, gn), iterations, energy: e, gradient_norm: gn, energy_trace: trace };
    (u, outcome)
}

/// Deterministic start `k`: amplitude times a Gaussian bump.
pub fn start_profile(grid: &[f64], k: usize) -> Vec<f64> {
    const AMPS: [f64; 8] = [0.05, 0.3, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let amp = AMPS[k % AMPS.len()] * 1.5f64.powi((k / AMPS.len()) as i32);
    let width = if k % 2 == 0 { 1.0 } else { 2.5 };
    let mut v: Vec<f64> = grid.iter().map(|&r| amp * (-(r / width).powi(2)).exp()).collect();
    *v.last_mut().unwrap() = 0.0;
    v
}

/// Critical points of `E_lambda` for each `lambda`, from `starts >= 8` descents.
pub fn multi_start_solve(problem: &PdeProblem, lambdas: &[f64], starts: usize) -> Result<Vec<CriticalPointReport>> {
    if starts < 8 {
        return invalid("multi-start search needs at least 8 starts");
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return invalid("lambda values must be non-negative");
    }
    let grid = problem.grid();
    let disc = Disc::new(problem, &grid);
    let nl = problem.nonlinearity;
    let threshold = 1e-4 * nl.s0();
    lambdas
        .par_iter()
        .map(|&lambda| {
            let runs: Vec<(Vec<f64>, StartOutcome)> =
                (0..starts).into_par_iter().map(|k| descend(&disc, &nl, lambda, start_profile(&grid, k), k)).collect();
            // cluster converged runs, lowest energy first
            let mut order: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].1.converged).collect();
            order.sort_by(|&a, &b| runs[a].1.energy.total_cmp(&runs[b].1.energy).then(a.cmp(&b)));
            let mut reps: Vec<(Vec<f64>, f64, f64)> = Vec::new();
            for i in order {
                let (u, o) = &runs[i];
                if reps.iter().all(|(v, _, _)| linf(u, v) > threshold) {
                    reps.push((u.clone(), o.energy, o.gradient_norm));
                }
            }
            if nl.h(0.0) == 0.0 && reps.iter().all(|(v, _, _)| linf(v, &[]) > threshold) {
                let zero = vec![0.0; grid.len()];
                let mut g = vec![0.0; grid.len()];
                disc.energy_grad(&zero, &nl, lambda, &mut g);
                g[problem.cells] = 0.0;
                reps.push((zero, 0.0, norm2(&g)));
            }
            let distinct = reps.iter().map(|(a, _, _)| reps.iter().map(|(b, _, _)| linf(a, b) > threshold).collect()).collect();
            let profiles = reps.iter().map(|(v, _, _)| problem.profile(v.clone())).collect::<Result<Vec<_>>>()?;
            Ok(CriticalPointReport {
                lambda,
                profiles,
                energies: reps.iter().map(|r| r.1).collect(),
                gradient_norms: reps.iter().map(|r| r.2).collect(),
                distinct,
                threshold,
                starts: runs.into_iter().map(|(_, o)| o).collect(),
            })
        })
        .collect()
}

/// A critical point re-examined on the doubled grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementCheck {
    /// Gradient norm of the interpolated profile on the doubled grid.
    pub interpolated_gradient: f64,
    /// Gradient norm after a warm-started descent on the doubled grid.
    pub resolved_gradient: f64,
    pub resolved_energy: f64,
    /// `max |u_fine - u_coarse|` at the coarse nodes.
    pub shift: f64,
}

/// Interpolates `u` onto the doubled grid, evaluates the gradient there and
/// re-solves from it.
pub fn refinement_check(problem: &PdeProblem, u: &RadialProfile) -> Result<RefinementCheck> {
    check_grid(problem, u)?;
    let fine = problem.with_cells(2 * u.cells())?;
    let grid = fine.grid();
    let disc = Disc::new(&fine, &grid);
    let mut v: Vec<f64> = grid.iter().map(|&r| u.value_at(r)).collect();
    *v.last_mut().unwrap() = 0.0;
    let mut g = vec![0.0; grid.len()];
    disc.energy_grad(&v, &fine.nonlinearity, fine.lambda, &mut g);
    *g.last_mut().unwrap() = 0.0;
    let interpolated_gradient = norm2(&g);
    let (w, out) = descend(&disc, &fine.nonlinearity, fine.lambda, v, 0);
    let shift = u.values().iter().enumerate().map(|(i, x)| (x - w[2 * i]).abs()).fold(0.0, f64::max);
    Ok(RefinementCheck { interpolated_gradient, resolved_gradient: out.gradient_norm, resolved_energy: out.energy, shift })
}

/// `E_lambda(t u)` for each `t`.
pub fn energy_along_ray(problem: &PdeProblem, u: &RadialProfile, ts: &[f64]) -> Result<Vec<f64>> {
    check_grid(problem, u)?;
    let disc = Disc::new(problem, u.grid());
    Ok(ts
        .iter()
        .map(|&t| {
            let v: Vec<f64> = u.values().iter().map(|x| t * x).collect();
            disc.phi(&v) - problem.lambda * disc.j(&v, &problem.nonlinearity)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2() -> SpaceForm {
        SpaceForm::hyperbolic(2, -1.0).unwrap()
    }

    fn small(beta: bool, cells: usize) -> PdeProblem {
        let f = if beta {
            RandersStructure::new(h2(), BetaProfile::Gaussian { amplitude: 0.3, width: 1.5 }, 0.3).unwrap()
        } else {
            RandersStructure::riemannian(h2())
        };
        PdeProblem::reference(f).unwrap().with_cells(cells).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(mckean_bound(3, 1.0, 2.0).unwrap(), 1.0);
        assert!((coercivity_constant(3, 0.0, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let c = coercivity_constant(3, i as f64 / 100.0, 2.0, 1.0).unwrap();
            assert!(c < prev && c > 0.0);
            prev = c;
        }
        assert!(coercivity_constant(3, 1.0 - 1e-9, 2.0, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn nonlinearity_hypotheses() {
        let nl = Nonlinearity::reference(3.0).unwrap();
        nl.check_a1().unwrap();
        nl.check_a2().unwrap();
        assert!((nl.a3_constant(1.0).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(nl.c2(1.0).unwrap(), 2.0);
        // H' = h
        for s in [0.3, 0.9, 1.7, 5.0] {
            let fd = (nl.primitive(s + 1e-6) - nl.primitive(s - 1e-6)) / 2e-6;
            assert!((fd - nl.h(s)).abs() < 1e-8);
        }
        assert!(Nonlinearity::new(3.5, 4.0, 3.0).is_err());
        assert!(Nonlinearity::new(1.5, 2.5, 3.0).is_err());
    }

    #[test]
    fn zero_and_riemannian_energy() {
        let pr = small(false, 64).with_lambda(0.7).unwrap();
        let zero = pr.profile(vec![0.0; 65]).unwrap();
        let e = energy(&pr, &zero).unwrap();
        assert_eq!((e.phi, e.j), (0.0, 0.0));
        assert!(energy_gradient(&pr, &zero).unwrap().iter().all(|g| *g == 0.0));
        let pr0 = pr.with_lambda(0.0).unwrap();
        let u = pr0.profile(pr0.grid().iter().map(|r| (1.0 - r / 12.0) * (1.0 + r.cos())).collect()).unwrap();
        let e = energy(&pr0, &u).unwrap();
        let g: f64 = u
            .slopes()
            .iter()
            .enumerate()
            .map(|(i, s)| s.abs().powi(3) * h2().shell_volume(u.grid()[i], u.grid()[i + 1]))
            .sum();
        assert!((e.e - g / 3.0).abs() < 1e-12 * g);
        // p-homogeneity of grad Phi for beta = 0
        let gu = energy_gradient(&pr0, &u).unwrap();
        let u2 = pr0.profile(u.values().iter().map(|x| 2.0 * x).collect()).unwrap();
        let g2 = energy_gradient(&pr0, &u2).unwrap();
        let a: f64 = g2.iter().zip(u2.values()).map(|(x, y)| x * y).sum();
        let b: f64 = gu.iter().zip(u.values()).map(|(x, y)| x * y).sum();
        assert!((a - 8.0 * b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..10 {
            let pr = small(case % 2 == 1, 48).with_lambda(0.5 + case as f64).unwrap();
            let vals: Vec<f64> = pr.grid().iter().map(|&r| (2.0 + rng.gen::<f64>()) * (-r / 3.0).exp() + 0.1 * rng.gen::<f64>()).collect();
            let u = pr.profile(vals.clone()).unwrap();
            let g = energy_gradient(&pr, &u).unwrap();
            for _ in 0..10 {
                let k = rng.gen_range(1..48);
                let eps = 1e-5 * vals[k].abs().max(1.0);
                let mut a = vals.clone();
                a[k] += eps;
                let mut b = vals.clone();
                b[k] -= eps;
                let ea = energy(&pr, &pr.profile(a).unwrap()).unwrap().e;
                let eb = energy(&pr, &pr.profile(b).unwrap()).unwrap().e;
                let fd = (ea - eb) / (2.0 * eps);
                assert!((fd - g[k]).abs() < 1e-6 * g[k].abs(), "case {case} k {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn test_function_shape_and_bounds() {
        let pr = small(true, 1024);
        let f = pr.randers();
        let grid = pr.grid();
        assert!(test_function(1.0, 2.0, 1.5, f, &grid).is_err());
        let u = test_function(1.0, 3.0, 1.0, f, &grid).unwrap();
        assert_eq!(u.values()[0], 1.0);
        let mid = f.inverse_finsler_radius(2.0);
        assert!((u.value_at(mid) - 0.5).abs() < 1e-3);
        let e = energy(&pr, &u).unwrap();
        let a = f.beta_sup();
        let rf = (1.0 + a) / (1.0 - a);
        let vol_r = finsler_ball_volume(f, 1.0).unwrap();
        let vol_big = finsler_ball_volume(f, 3.0).unwrap();
        let slope = (1.0f64 / 2.0).powi(3);
        let grad_int = 3.0 * e.phi;
        assert!(slope / rf.powi(3) * (vol_big - vol_r) <= grad_int);
        assert!(grad_int <= slope * rf.powi(3) * vol_big);
        // J(u) >= H(s0) alpha_R Vol_F(B_F(r))
        let alpha_r = pr.alpha().value(3.0);
        assert!(e.j >= pr.nonlinearity().primitive(1.0) * alpha_r * vol_r);
    }

    #[test]
    fn lambda_zero_has_only_the_trivial_point() {
        let pr = small(false, 256);
        let rep = multi_start_solve(&pr, &[0.0], 8).unwrap();
        assert_eq!(rep[0].profiles.len(), 1);
        assert!(linf(rep[0].profiles[0].values(), &[]) <= rep[0].threshold);
        for s in &rep[0].starts {
            assert!(s.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
