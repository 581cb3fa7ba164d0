//! Radial profiles, level-set volumes and the Euclidean rearrangement
//! `u*` of a radial function on a model-space ball, with the norm
//! preservation and Pólya–Szegő checks.
//!
//! Profiles are piecewise linear in the geodesic radius. Level-set volumes
//! of a piecewise linear profile are exact unions of shells, so the
//! distribution function is evaluated without sampling error.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modelspace::{croke_constant, SpaceForm};
use crate::numerics::{cached_rule, unit_ball_volume, Exponent};
use crate::randers::RandersStructure;

/// Geometry a profile lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Ambient {
    Space(SpaceForm),
    Randers(RandersStructure),
}

impl Ambient {
    pub fn space(&self) -> &SpaceForm {
        match self {
            Ambient::Space(s) => s,
            Ambient::Randers(r) => r.base(),
        }
    }
}

impl From<SpaceForm> for Ambient {
    fn from(s: SpaceForm) -> Self {
        Ambient::Space(s)
    }
}

impl From<RandersStructure> for Ambient {
    fn from(r: RandersStructure) -> Self {
        Ambient::Randers(r)
    }
}

/// `r -> u(r)` on a grid `0 = r_0 < ... < r_N` of geodesic radii, linear
/// between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
    ambient: Ambient,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, ambient: impl Into<Ambient>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return invalid("a profile needs at least two nodes and one value per node");
        }
        if grid[0] != 0.0 {
            return invalid("profile grids start at r = 0");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.iter().all(|r| r.is_finite()) {
            return invalid("profile grid must be strictly increasing and finite");
        }
        if !values.iter().all(|v| v.is_finite()) {
            return invalid("profile values must be finite");
        }
        Ok(RadialProfile { grid, values, ambient: ambient.into() })
    }

    /// Uniform grid of `n` cells on `[0, r_max]`, values from `f`.
    pub fn sample(ambient: impl Into<Ambient>, r_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || !(r_max > 0.0) {
            return invalid("sampling needs n >= 1 cells and r_max > 0");
        }
        let grid: Vec<f64> = (0..=n).map(|i| r_max * i as f64 / n as f64).collect();
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values, ambient)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn space(&self) -> &SpaceForm {
        self.ambient.space()
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.ambient.clone())
    }

    /// Linear interpolation; 0 beyond the last node (up to rounding of `r_max`).
    pub fn value_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.values[0];
        }
        let r_max = self.r_max();
        if r > r_max {
            return if r <= r_max * (1.0 + 1e-12) { self.values[self.values.len() - 1] } else { 0.0 };
        }
        let i = match self.grid.binary_search_by(|g| g.total_cmp(&r)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let t = (r - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Slope of the profile on each cell.
    pub fn slopes(&self) -> Vec<f64> {
        self.grid.windows(2).zip(self.values.windows(2)).map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0])).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `Vol({u > t_i})` for decreasing levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetTable {
    pub levels: Vec<f64>,
    pub volumes: Vec<f64>,
}

/// Volume of `{r in cell i : u(r) > t}`.
fn cell_superlevel_volume(space: &SpaceForm, u: &RadialProfile, i: usize, t: f64) -> f64 {
    let (r0, r1) = (u.grid[i], u.grid[i + 1]);
    let (u0, u1) = (u.values[i], u.values[i + 1]);
    let (lo, hi) = (u0.min(u1), u0.max(u1));
    if t >= hi {
        return 0.0;
    }
    if t < lo {
        return space.shell_volume(r0, r1);
    }
    let rs = (r0 + (t - u0) / (u1 - u0) * (r1 - r0)).clamp(r0, r1);
    if u1 > u0 {
        space.shell_volume(rs, r1)
    } else {
        space.shell_volume(r0, rs)
    }
}

/// `Vol_g({u > t})` for each level, by exact shell volumes.
pub fn level_volumes(u: &RadialProfile, levels: &[f64]) -> LevelSetTable {
    let space = u.space();
    let mut levels = levels.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    let volumes = levels.iter().map(|&t| (0..u.cells()).map(|i| cell_superlevel_volume(space, u, i, t)).sum()).collect();
    LevelSetTable { levels, volumes }
}

/// Sweep state of the distribution function `mu(t) = Vol({u > t})` on one
/// open interval between consecutive node values.
struct Distribution<'a> {
    u: &'a RadialProfile,
    space: &'a SpaceForm,
    full: f64,
    active: Vec<usize>,
}

impl Distribution<'_> {
    fn mu(&self, t: f64) -> f64 {
        self.full + self.active.iter().map(|&i| cell_superlevel_volume(self.space, self.u, i, t)).sum::<f64>()
    }
}

/// The Euclidean rearrangement `u*` on `B_e(0, R)` with `omega_d R^d = Vol_g(ball)`.
///
/// The output grid is `rho_k = (V(r_k) / omega_d)^{1/d}` and
/// `u*(rho_k) = sup{t : mu(t) > V(r_k)}`.
pub fn euclidean_rearrangement(u: &RadialProfile) -> Result<RadialProfile> {
    if u.values.iter().any(|&v| v < 0.0) {
        return invalid("rearrangement requires u >= 0");
    }
    let space = *u.space();
    let d = space.dim();
    let omega = unit_ball_volume(d);
    let n = u.cells();
    let mut cum = vec![0.0; n + 1];
    let mut cell_vol = vec![0.0; n];
    for i in 0..n {
        cell_vol[i] = space.shell_volume(u.grid[i], u.grid[i + 1]);
        cum[i + 1] = cum[i] + cell_vol[i];
    }
    let rho_grid: Vec<f64> = cum.iter().map(|v| (v / omega).powf(1.0 / d as f64)).collect();

    // distinct node values, descending
    let mut taus: Vec<f64> = u.values.clone();
    taus.sort_by(|a, b| b.total_cmp(a));
    taus.dedup();
    let idx_of = |v: f64| taus.binary_search_by(|t| v.total_cmp(t)).expect("node value present");
    let mut enter_full: Vec<Vec<usize>> = vec![Vec::new(); taus.len()];
    let mut enter_partial: Vec<Vec<usize>> = vec![Vec::new(); taus.len()];
    for i in 0..n {
        let (a, b) = (u.values[i], u.values[i + 1]);
        let (lo, hi) = (idx_of(a.min(b)), idx_of(a.max(b)));
        // larger values have smaller indices: the cell is partial from
        // its max downward and full below its min
        enter_full[lo].push(i);
        if lo != hi {
            enter_partial[hi].push(i);
        }
    }

    let mut out = vec![0.0; n + 1];
    let mut k = 0;
    let mut dist = Distribution { u, space: &space, full: 0.0, active: Vec::new() };
    let m = taus.len();
    for j in 0..m {
        // configuration on the interval (tau_{j+1}, tau_j)
        for &i in &enter_full[j] {
            dist.full += cell_vol[i];
        }
        if !enter_full[j].is_empty() {
            let leaving: std::collections::HashSet<usize> = enter_full[j].iter().copied().collect();
            dist.active.retain(|i| !leaving.contains(i));
        }
        dist.active.extend(enter_partial[j].iter().copied());
        let tau = taus[j];
        let q_j = dist.mu(tau);
        let next = if j + 1 < m { Some(taus[j + 1]) } else { None };
        let p_next = next.map(|t| dist.mu(t));
        while k <= n {
            let w = cum[k];
            // W in [P_j, Q_j): plateau at tau (W < P_j only through rounding)
            if w < q_j {
                out[k] = tau;
            } else if let (Some(tn), Some(pn)) = (next, p_next) {
                if w >= pn {
                    break;
                }
                // mu is continuous and decreasing on (tn, tau)
                let (mut lo, mut hi) = (tn, tau);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if dist.mu(mid) > w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out[k] = lo;
            } else {
                out[k] = tau;
            }
            k += 1;
        }
    }
    while k <= n {
        out[k] = taus[m - 1];
        k += 1;
    }
    // exact monotonicity
    for k in 1..=n {
        if out[k] > out[k - 1] {
            out[k] = out[k - 1];
        }
    }
    out[0] = u.max_value();
    let eu = SpaceForm::euclidean(d)?;
    // rounding may produce repeated radii for empty cells
    dedup_grid(rho_grid, out, eu)
}

fn dedup_grid(grid: Vec<f64>, values: Vec<f64>, space: SpaceForm) -> Result<RadialProfile> {
    let mut g = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(values.len());
    for (r, x) in grid.into_iter().zip(values) {
        if g.last().is_some_and(|&l: &f64| r <= l) {
            continue;
        }
        g.push(r);
        v.push(x);
    }
    RadialProfile::new(g, v, space)
}

/// `Vol_g` of the profile's ball.
pub fn ball_volume(u: &RadialProfile) -> f64 {
    u.space().shell_volume(0.0, u.r_max())
}

/// `R` with `omega_d R^d = Vol_g(ball)`.
pub fn rearrangement_radius(u: &RadialProfile) -> f64 {
    let d = u.space().dim();
    (ball_volume(u) / unit_ball_volume(d)).powf(1.0 / d as f64)
}

/// `||u||_{L^q}` of a profile over its ball (Gauss–Legendre per cell).
pub fn lq_norm(u: &RadialProfile, q: Exponent) -> f64 {
    match q {
        Exponent::Infinite => u.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(q) => {
            let space = u.space();
            let rule = cached_rule(8);
            let mut acc = 0.0;
            for i in 0..u.cells() {
                let (r0, r1) = (u.grid[i], u.grid[i + 1]);
                let (u0, u1) = (u.values[i], u.values[i + 1]);
                acc += rule.integrate(r0, r1, |r| {
                    let v = u0 + (u1 - u0) * (r - r0) / (r1 - r0);
                    v.abs().powf(q) * space.sphere_area(r)
                });
            }
            acc.powf(1.0 / q)
        }
    }
}

/// `(int |u'|^p dV)^{1/p}` with the model volume element.
pub fn gradient_lp_norm(u: &RadialProfile, p: f64) -> f64 {
    let space = u.space();
    let slopes = u.slopes();
    let mut acc = 0.0;
    for (i, s) in slopes.iter().enumerate() {
        if *s != 0.0 {
            acc += s.abs().powf(p) * space.shell_volume(u.grid[i], u.grid[i + 1]);
        }
    }
    acc.powf(1.0 / p)
}

/// `| ||u||_q - ||u*||_q | / ||u||_q`.
pub fn norm_preservation_check(u: &RadialProfile, u_star: &RadialProfile, q: Exponent) -> f64 {
    let a = lq_norm(u, q);
    let b = lq_norm(u_star, q);
    if a == 0.0 {
        return b;
    }
    (a - b).abs() / a
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyaSzego {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack allowed in the Pólya–Szegő comparison.
pub const POLYA_SZEGO_TOL: f64 = 1e-6;

/// `||grad u||_p >= C(d) / (d omega_d^{1/d}) ||grad u*||_p`.
pub fn polya_szego_check(u: &RadialProfile, u_star: &RadialProfile, p: f64) -> Result<PolyaSzego> {
    if !(p > 1.0) {
        return invalid("Pólya–Szegő needs p > 1");
    }
    let d = u.space().dim();
    let constant = croke_constant(d)? / (d as f64 * unit_ball_volume(d).powf(1.0 / d as f64));
    let lhs = gradient_lp_norm(u, p);
    let rhs = constant * gradient_lp_norm(u_star, p);
    Ok(PolyaSzego { lhs, rhs, holds: lhs >= rhs - POLYA_SZEGO_TOL * rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_relative;
    use std::f64::consts::PI;

    fn e(d: usize) -> SpaceForm {
        SpaceForm::euclidean(d).unwrap()
    }
    fn h(d: usize) -> SpaceForm {
        SpaceForm::hyperbolic(d, -1.0).unwrap()
    }

    fn tent(space: SpaceForm, r_max: f64, n: usize) -> RadialProfile {
        RadialProfile::sample(space, r_max, n, |r| (1.0 - r / r_max).max(0.0)).unwrap()
    }

    #[test]
    fn level_volume_examples() {
        let plateau =
            RadialProfile::new(vec![0.0, 1.0, 1.0 + 1e-12, 2.0], vec![1.0, 1.0, 0.0, 0.0], e(2)).unwrap();
        let t = level_volumes(&plateau, &[0.5]);
        assert!((t.volumes[0] - PI).abs() < 1e-10);
        let u = tent(e(3), 1.0, 50);
        let t = level_volumes(&u, &[0.2, 0.7, 0.9]);
        assert_eq!(t.levels, vec![0.9, 0.7, 0.2]);
        for (lvl, v) in t.levels.iter().zip(&t.volumes) {
            let exact = unit_ball_volume(3) * (1.0 - lvl).powi(3);
            assert!((v - exact).abs() < 1e-13, "{lvl}: {v} vs {exact}");
        }
        let plateau =
            RadialProfile::new(vec![0.0, 1.0, 1.0 + 1e-12, 3.0], vec![1.0, 1.0, 0.0, 0.0], h(2)).unwrap();
        let v = level_volumes(&plateau, &[0.5]).volumes[0];
        assert!((v - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-9);
        let zero = RadialProfile::sample(e(2), 1.0, 4, |_| 0.0).unwrap();
        assert_eq!(level_volumes(&zero, &[0.5]).volumes, vec![0.0]);
    }

    #[test]
    fn rearrangement_fixed_point_and_top() {
        let u = tent(e(2), 1.0, 200);
        let s = euclidean_rearrangement(&u).unwrap();
        for (r, v) in s.grid().iter().zip(s.values()) {
            assert!((v - u.value_at(*r)).abs() < 1e-12);
        }
        assert_eq!(s.max_value(), u.max_value());
    }

    #[test]
    fn hyperbolic_tent_radius() {
        let u = tent(h(2), 1.0, 400);
        let s = euclidean_rearrangement(&u).unwrap();
        let expect = (2.0 * (1f64.cosh() - 1.0)).sqrt();
        assert!((s.r_max() - expect).abs() < 1e-12);
        assert!((rearrangement_radius(&u) - expect).abs() < 1e-12);
        assert!(s.values().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bump_is_equimeasurable() {
        // non-monotone: a ring-shaped bump with a plateau
        let u = RadialProfile::sample(h(3), 2.0, 2000, |r| {
            if (0.8..=1.0).contains(&r) {
                1.0
            } else {
                (1.0 - (r - 0.9).abs() * 1.5).max(0.0)
            }
        })
        .unwrap();
        let s = euclidean_rearrangement(&u).unwrap();
        let levels: Vec<f64> = (1..=50).map(|i| i as f64 / 51.0).collect();
        let a = level_volumes(&u, &levels);
        let b = level_volumes(&s, &levels);
        let max_cell = (0..u.cells()).map(|i| u.space().shell_volume(u.grid()[i], u.grid()[i + 1])).fold(0.0, f64::max);
        for (va, vb) in a.volumes.iter().zip(&b.volumes) {
            assert!((va - vb).abs() <= 2.0 * max_cell, "{va} vs {vb}");
        }
        assert!(s.values().windows(2).all(|w| w[1] <= w[0]));
        let again = euclidean_rearrangement(&s).unwrap();
        for (r, v) in again.grid().iter().zip(again.values()) {
            assert!((v - s.value_at(*r)).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_preservation_examples() {
        let u = RadialProfile::sample(e(2), 1.0, 10_000, |r| (PI * r).sin()).unwrap();
        let s = euclidean_rearrangement(&u).unwrap();
        assert_eq!(norm_preservation_check(&u, &s, Exponent::Infinite), 0.0);
        assert!(norm_preservation_check(&u, &s, Exponent::Finite(2.0)) < 1e-3);
        // independent oracle for the source norm
        let exact = integrate_relative(|r| (PI * r).sin().powi(2) * 2.0 * PI * r, 0.0, 1.0, 1e-12).unwrap().sqrt();
        assert!((lq_norm(&u, Exponent::Finite(2.0)) - exact).abs() < 1e-6);
        let u = tent(h(2), 1.5, 10_000);
        let s = euclidean_rearrangement(&u).unwrap();
        assert!(norm_preservation_check(&u, &s, Exponent::Finite(1.0)) < 1e-3);
        let exact = integrate_relative(|r| (1.0 - r / 1.5) * 2.0 * PI * r.sinh(), 0.0, 1.5, 1e-12).unwrap();
        assert!((lq_norm(&u, Exponent::Finite(1.0)) - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn polya_szego_examples() {
        let u = tent(e(2), 1.0, 500);
        let s = euclidean_rearrangement(&u).unwrap();
        let ps = polya_szego_check(&u, &s, 2.0).unwrap();
        assert!(ps.holds && ps.lhs > ps.rhs);
        assert!((ps.rhs / ps.lhs - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-9);
        let c = RadialProfile::sample(e(2), 1.0, 10, |_| 0.7).unwrap();
        let cs = euclidean_rearrangement(&c).unwrap();
        let ps = polya_szego_check(&c, &cs, 2.0).unwrap();
        assert_eq!((ps.lhs, ps.rhs), (0.0, 0.0));
        for d in [2, 3] {
            for k in 0..20 {
                let width = 0.3 + 0.1 * k as f64;
                let u = RadialProfile::sample(h(d), 3.0, 1000, |r| (1.0 - r / width).max(0.0)).unwrap();
                let s = euclidean_rearrangement(&u).unwrap();
                assert!(polya_szego_check(&u, &s, 1.5 + 0.1 * k as f64).unwrap().holds);
            }
        }
    }

    #[test]
    fn rejects_negative() {
        let u = RadialProfile::sample(e(2), 1.0, 4, |r| r - 0.5).unwrap();
        assert!(euclidean_rearrangement(&u).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.0], vec![1.0, 1.0], e(2)).is_err());
        assert!(RadialProfile::new(vec![0.1, 1.0], vec![1.0, 1.0], e(2)).is_err());
    }
}
