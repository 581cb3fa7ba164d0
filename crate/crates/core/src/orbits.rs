//! Orbits of isometric group actions: ball packings on orbits, expansion
//! profiles, orbit diameters, the tangent-space packing bound and the orbit
//! Hausdorff measures used by the linear-growth hypothesis.
//!
//! Orbits of the rotation actions are products of round spheres (one per
//! block). Packings are built per sphere factor; a product of per-factor
//! packings is again a packing because the product distance dominates every
//! factor distance.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modelspace::{dist, dot, norm, Model, Point, SpaceForm};
use crate::numerics::{integrate_relative, unit_ball_volume, unit_sphere_area};

/// Sample size used for orbit diameters.
pub const DIAMETER_SAMPLES: usize = 10_000;
/// Number of ray directions used by [`coercivity_probe`].
pub const PROBE_DIRECTIONS: usize = 64;
/// Above this many centers the disjointness check switches to a spatial hash.
const PAIRWISE_LIMIT: usize = 3000;
/// Candidate cap for greedy packing on spheres of dimension >= 2.
const SPHERE_CANDIDATE_CAP: usize = 50_000;
const DISJOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum GroupAction {
    /// `O(d)` fixing the origin.
    FullRotation,
    /// `O(d_1) x ... x O(d_k)` acting blockwise on Euclidean space.
    ProductRotation { blocks: Vec<usize> },
    /// `SO(2)` acting on unimodular positive-definite 2x2 matrices.
    MatrixConjugation,
}

impl GroupAction {
    pub fn product(blocks: &[usize]) -> Result<Self> {
        validate_blocks(blocks)?;
        Ok(GroupAction::ProductRotation { blocks: blocks.to_vec() })
    }

    fn check(&self, space: Option<&SpaceForm>, y: &[f64]) -> Result<()> {
        match self {
            GroupAction::FullRotation => {
                if let Some(s) = space {
                    s.check_point(y)?;
                } else if y.len() < 2 {
                    return invalid("rotation orbits need a point of dimension >= 2");
                }
            }
            GroupAction::ProductRotation { blocks } => {
                validate_blocks(blocks)?;
                if blocks.iter().sum::<usize>() != y.len() {
                    return invalid(format!("block dimensions {blocks:?} do not sum to the point dimension {}", y.len()));
                }
                if let Some(s) = space {
                    if s.model() != Model::Euclidean {
                        return invalid("product rotations are only supported on Euclidean space");
                    }
                    s.check_point(y)?;
                }
            }
            GroupAction::MatrixConjugation => {
                MatrixPoint::from_slice(y)?;
            }
        }
        Ok(())
    }
}

fn validate_blocks(blocks: &[usize]) -> Result<()> {
    if blocks.is_empty() || blocks.iter().any(|&b| b < 2) {
        return invalid(format!("product rotation blocks must be non-empty with every block >= 2, got {blocks:?}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PackingMethod {
    Greedy,
    AngularExact,
}

impl std::fmt::Display for PackingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PackingMethod::Greedy => "GREEDY",
            PackingMethod::AngularExact => "ANGULAR_EXACT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingReport {
    pub y: Point,
    pub rho: f64,
    pub count: usize,
    pub centers: Vec<Point>,
    pub method: PackingMethod,
    pub fixed_point: bool,
}

/// `[[a, b], [b, c]]` with `a, c > 0` and `ac - b^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MatrixPoint {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0) || !b.is_finite() || !a.is_finite() || !c.is_finite() {
            return invalid(format!("matrix [[{a}, {b}], [{b}, {c}]] is not positive definite"));
        }
        let det = a * c - b * b;
        if (det - 1.0).abs() > 1e-10 * (1.0 + a * c) {
            return invalid(format!("matrix determinant is {det}, expected 1"));
        }
        Ok(MatrixPoint { a, b, c })
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        match y {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => invalid("a matrix point is given by its entries (a, b, c)"),
        }
    }

    pub fn identity() -> Self {
        MatrixPoint { a: 1.0, b: 0.0, c: 1.0 }
    }

    pub fn diag(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0, 1.0 / lambda)
    }

    /// `exp(S)` for the traceless symmetric `S = [[u, v], [v, -u]]`.
    pub fn exp_traceless(u: f64, v: f64) -> Self {
        let s = u.hypot(v);
        let (ch, shs) = if s == 0.0 { (1.0, 1.0) } else { (s.cosh(), s.sinh() / s) };
        MatrixPoint { a: ch + shs * u, b: shs * v, c: ch - shs * u }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.a, self.b, self.c]
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.a * self.a + 2.0 * self.b * self.b + self.c * self.c).sqrt()
    }

    /// Eigenvalues `lambda_1 >= lambda_2`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.a + self.c);
        let disc = (0.25 * (self.a - self.c).powi(2) + self.b * self.b).sqrt();
        let l1 = half_tr + disc;
        // det = 1 gives the small eigenvalue without cancellation
        (l1, (self.a * self.c - self.b * self.b) / l1)
    }

    /// `sigma X sigma^T` for the rotation `sigma` by angle `theta`.
    pub fn conjugate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (a, b, d) = (self.a, self.b, self.c);
        MatrixPoint {
            a: c * c * a - 2.0 * s * c * b + s * s * d,
            b: s * c * (a - d) + (c * c - s * s) * b,
            c: s * s * a + 2.0 * s * c * b + c * c * d,
        }
    }

    /// `X xi(theta)` as a row-major 2x2 matrix.
    pub fn right_rotate(&self, theta: f64) -> [f64; 4] {
        let (s, c) = theta.sin_cos();
        [self.a * c + self.b * s, -self.a * s + self.b * c, self.b * c + self.c * s, -self.b * s + self.c * c]
    }

    /// Affine-invariant distance `sqrt(sum ln^2 mu_i)`, `mu_i` the eigenvalues of `X^{-1} Y`.
    pub fn distance(&self, other: &MatrixPoint) -> f64 {
        // X^{-1} = [[c, -b], [-b, a]] since det X = 1
        let tr = self.c * other.a - 2.0 * self.b * other.b + self.a * other.c;
        // mu + 1/mu = tr with det(X^{-1} Y) = 1
        let half = 0.5 * tr.max(2.0);
        let mu = half + (half * half - 1.0).max(0.0).sqrt();
        std::f64::consts::SQRT_2 * mu.ln()
    }

    /// Distance to the identity.
    pub fn d_p(&self) -> f64 {
        let (l1, l2) = self.eigenvalues();
        l1.ln().hypot(l2.ln())
    }

    pub fn is_identity(&self) -> bool {
        self.b == 0.0 && self.a == 1.0 && self.c == 1.0
    }
}

/// Deterministic orbit samples: uniform angles on circles, product grids of
/// sphere samples for product actions.
pub fn orbit_sample(action: &GroupAction, y: &[f64], n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return invalid("orbit sample size must be positive");
    }
    action.check(None, y)?;
    match action {
        GroupAction::MatrixConjugation => {
            let m = MatrixPoint::from_slice(y)?;
            Ok((0..n).map(|k| m.conjugate(2.0 * PI * k as f64 / n as f64).to_vec()).collect())
        }
        GroupAction::FullRotation => {
            let f = Factor::new(y);
            Ok(f.sample(n).into_iter().map(|p| p.to_vec()).collect())
        }
        GroupAction::ProductRotation { blocks } => {
            let factors = factors_of(blocks, y);
            let moving = factors.iter().filter(|f| f.radius > 0.0).count().max(1);
            let per = (n as f64).powf(1.0 / moving as f64).ceil() as usize;
            let samples: Vec<Vec<Vec<f64>>> =
                factors.iter().map(|f| if f.radius > 0.0 { f.sample(per.max(1)) } else { vec![f.embed_unit_zero()] }).collect();
            let mut out = Vec::with_capacity(n);
            product_for_each(&samples, y.len(), &mut |p| {
                if out.len() < n {
                    out.push(p.to_vec());
                }
                out.len() < n
            });
            Ok(out)
        }
    }
}

/// One round-sphere factor of a rotation orbit: block `offset..offset + k`,
/// chart radius `radius`, unit direction `dir` of the block of `y`.
#[derive(Debug, Clone)]
struct Factor {
    k: usize,
    radius: f64,
    dir: Vec<f64>,
}

impl Factor {
    fn new(block: &[f64]) -> Self {
        let r = norm(block);
        let dir = if r > 0.0 {
            block.iter().map(|v| v / r).collect()
        } else {
            let mut e = vec![0.0; block.len()];
            e[0] = 1.0;
            e
        };
        Factor { k: block.len(), radius: r, dir }
    }

    fn embed_unit_zero(&self) -> Vec<f64> {
        vec![0.0; self.k]
    }

    /// Map a canonical unit vector (north pole `e_1`) into the block,
    /// sending `e_1` to `dir`.
    fn place(&self, u: &[f64]) -> Vec<f64> {
        if self.k == 2 {
            // rotation, so angles keep their orientation
            let (c, s) = (self.dir[0], self.dir[1]);
            return vec![self.radius * (c * u[0] - s * u[1]), self.radius * (s * u[0] + c * u[1])];
        }
        // Householder reflection swapping e_1 and dir
        let mut v = self.dir.clone();
        v[0] -= 1.0;
        let vv = dot(&v, &v);
        if vv < 1e-30 {
            return u.iter().map(|c| c * self.radius).collect();
        }
        let proj = 2.0 * dot(&v, u) / vv;
        u.iter().zip(&v).map(|(a, b)| self.radius * (a - proj * b)).collect()
    }

    fn sample(&self, n: usize) -> Vec<Vec<f64>> {
        if self.radius == 0.0 {
            return vec![vec![0.0; self.k]; n];
        }
        sphere_points(self.k, n).iter().map(|u| self.place(u)).collect()
    }
}

fn factors_of(blocks: &[usize], y: &[f64]) -> Vec<Factor> {
    let mut off = 0;
    blocks
        .iter()
        .map(|&k| {
            let f = Factor::new(&y[off..off + k]);
            off += k;
            f
        })
        .collect()
}

/// Deterministic points on the unit sphere `S^{k-1}`, `e_1` first and, for
/// `n >= 2`, `-e_1` second.
fn sphere_points(k: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    if k == 2 {
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            out.push(vec![th.cos(), th.sin()]);
        }
        if n >= 2 {
            // make sure the antipode is present
            let j = n / 2;
            let th = 2.0 * PI * j as f64 / n as f64;
            if (th - PI).abs() > 0.0 {
                out[1] = vec![-1.0, 0.0];
            } else {
                out.swap(1, j);
            }
        }
        return out;
    }
    let mut e = vec![0.0; k];
    e[0] = 1.0;
    out.push(e.clone());
    if n >= 2 {
        e[0] = -1.0;
        out.push(e);
    }
    let rest = n.saturating_sub(2);
    if k == 3 {
        // Fibonacci lattice with its axis along e_1
        let golden = PI * (3.0 - 5f64.sqrt());
        for i in 0..rest {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / rest as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            out.push(vec![z, r * th.cos(), r * th.sin()]);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64);
        for _ in 0..rest {
            let mut g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&g);
            g.iter_mut().for_each(|c| *c /= n);
            out.push(g);
        }
    }
    out
}

/// Iterate over the cartesian product of per-factor point lists, assembling
/// full points. The callback returns `false` to stop.
fn product_for_each(samples: &[Vec<Vec<f64>>], dim: usize, f: &mut dyn FnMut(&[f64]) -> bool) {
    let mut idx = vec![0usize; samples.len()];
    let mut p = vec![0.0; dim];
    if samples.iter().any(|s| s.is_empty()) {
        return;
    }
    loop {
        let mut off = 0;
        for (s, &i) in samples.iter().zip(&idx) {
            let q = &s[i];
            p[off..off + q.len()].copy_from_slice(q);
            off += q.len();
        }
        if !f(&p) {
            return;
        }
        let mut j = samples.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < samples[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Geodesic distance between two points of a centered sphere of chart radius
/// `r` whose chord is `chord`.
fn sphere_chord_distance(space: &SpaceForm, r: f64, chord: f64) -> f64 {
    match space.model() {
        Model::Euclidean => chord,
        Model::PoincareBall => {
            let num = chord * chord;
            let den = (1.0 - r * r).powi(2);
            2.0 * (num / (num + den)).sqrt().atanh() / space.kappa()
        }
    }
}

/// Greedy packing on a circle parametrised by angle in `[0, period)`, with
/// `dist(delta)` the distance between parameters `delta` apart. Walks at an
/// intrinsic step of at most `rho / 20`, bisects onto the first admissible
/// angle and finally checks the wrap-around gap to the first center.
fn circle_greedy(raw_dist: &dyn Fn(f64) -> f64, period: f64, rho: f64) -> Vec<f64> {
    // evaluate every gap through its representative in [0, period / 2] so that
    // the same pair of centers always gets the same rounded distance
    let dist_of = |delta: f64| {
        let d = delta.rem_euclid(period);
        if d <= 0.5 * period {
            raw_dist(d)
        } else {
            raw_dist(period - d)
        }
    };
    let target = 2.0 * rho;
    let h = 1e-7 * period;
    let speed = dist_of(h) / h;
    let mut angles = vec![0.0];
    if !(speed > 0.0) || dist_of(0.5 * period) < target {
        return angles;
    }
    let step = (rho / 20.0) / speed;
    let mut last = 0.0;
    let mut theta = 0.0;
    loop {
        let next = theta + step;
        if next >= period {
            break;
        }
        if dist_of(next - last) >= target {
            let (mut lo, mut hi) = (theta, next);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dist_of(mid - last) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            // gap to the first center, at angle 0
            if dist_of(hi) < target {
                break;
            }
            angles.push(hi);
            last = hi;
            theta = hi;
        } else {
            theta = next;
        }
    }
    angles
}

/// Greedy packing on `S^{k-1}` of chart radius `r` over a deterministic
/// candidate set. Returns canonical unit vectors (`e_1` first).
fn sphere_greedy(space: &SpaceForm, k: usize, r: f64, rho: f64) -> Vec<Vec<f64>> {
    let target = 2.0 * rho;
    if sphere_chord_distance(space, r, 2.0 * r) < target {
        return vec![sphere_points(k, 1).remove(0)];
    }
    // smallest chord (in units of the unit sphere) with distance >= 2 rho
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sphere_chord_distance(space, r, r * mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c_star = hi;
    // intrinsic step rho / 20 relative to the sphere's intrinsic radius
    let intrinsic_r = sphere_chord_distance(space, r, 1e-9 * r) / 1e-9;
    let step = (rho / 20.0) / intrinsic_r;
    let want = unit_sphere_area(k) / step.powi(k as i32 - 1);
    let n = (want.ceil() as usize).clamp(2000, SPHERE_CANDIDATE_CAP);
    let candidates = sphere_points(k, n);
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let key = |u: &[f64]| -> Vec<i64> { u.iter().map(|c| (c / c_star).floor() as i64).collect() };
    for u in candidates {
        let kk = key(&u);
        let mut ok = true;
        for_each_neighbor(&kk, &mut |nb| {
            if let Some(list) = grid.get(nb) {
                for &j in list {
                    let chord = dist(&u, &accepted[j]);
                    if chord < c_star || sphere_chord_distance(space, r, r * chord) < target {
                        ok = false;
                        return false;
                    }
                }
            }
            true
        });
        if ok {
            grid.entry(kk).or_default().push(accepted.len());
            accepted.push(u);
        }
    }
    accepted
}

fn for_each_neighbor(key: &[i64], f: &mut dyn FnMut(&[i64]) -> bool) {
    let m = key.len();
    let total = 3usize.pow(m as u32);
    let mut nb = key.to_vec();
    for code in 0..total {
        let mut c = code;
        for i in 0..m {
            nb[i] = key[i] + (c % 3) as i64 - 1;
            c /= 3;
        }
        if !f(&nb) {
            return;
        }
    }
}

/// Packing centers of one factor as canonical unit vectors (or angles for circles).
enum FactorPacking {
    Point,
    Circle(Vec<f64>),
    Sphere(Vec<Vec<f64>>),
}

impl FactorPacking {
    fn count(&self) -> usize {
        match self {
            FactorPacking::Point => 1,
            FactorPacking::Circle(a) => a.len(),
            FactorPacking::Sphere(s) => s.len(),
        }
    }
}

fn pack_factor(space: &SpaceForm, f: &Factor, rho: f64) -> FactorPacking {
    if f.radius == 0.0 {
        return FactorPacking::Point;
    }
    if f.k == 2 {
        let r = f.radius;
        let dist_of = |delta: f64| sphere_chord_distance(space, r, 2.0 * r * (0.5 * delta).sin().abs());
        FactorPacking::Circle(circle_greedy(&dist_of, 2.0 * PI, rho))
    } else {
        FactorPacking::Sphere(sphere_greedy(space, f.k, f.radius, rho))
    }
}

fn factor_points(f: &Factor, p: &FactorPacking) -> Vec<Vec<f64>> {
    match p {
        FactorPacking::Point => vec![vec![0.0; f.k]],
        FactorPacking::Circle(angles) => angles.iter().map(|a| f.place(&[a.cos(), a.sin()])).collect(),
        FactorPacking::Sphere(units) => units.iter().map(|u| f.place(u)).collect(),
    }
}

/// Exact half-angle sine `s` for the circle `|y| = const` in the plane:
/// neighbouring centers at angle `2 asin(s)` are exactly `2 rho` apart.
fn angular_exact_sine(space: &SpaceForm, r_chart: f64, rho: f64) -> f64 {
    match space.model() {
        Model::Euclidean => rho / r_chart,
        Model::PoincareBall => (1.0 - r_chart * r_chart) * (space.kappa() * rho).sinh() / (2.0 * r_chart),
    }
}

fn angular_exact_count(s: f64) -> usize {
    if s >= 1.0 {
        1
    } else {
        ((PI / s.asin()).floor() as usize).max(1)
    }
}

fn uses_angular_exact(action: &GroupAction, space: &SpaceForm) -> bool {
    matches!(action, GroupAction::FullRotation) && space.dim() == 2
}

/// `m(y, rho)` estimate with verified disjoint centers; ANGULAR_EXACT for
/// planar full rotations, GREEDY otherwise.
pub fn packing_count(action: &GroupAction, space: &SpaceForm, y: &[f64], rho: f64) -> Result<PackingReport> {
    let method = if uses_angular_exact(action, space) { PackingMethod::AngularExact } else { PackingMethod::Greedy };
    packing_count_with(action, space, y, rho, method)
}

pub fn packing_count_with(
    action: &GroupAction,
    space: &SpaceForm,
    y: &[f64],
    rho: f64,
    method: PackingMethod,
) -> Result<PackingReport> {
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid("packing radius must be positive");
    }
    if action != &GroupAction::MatrixConjugation {
        action.check(Some(space), y)?;
    } else {
        action.check(None, y)?;
    }
    if method == PackingMethod::AngularExact && !uses_angular_exact(action, space) {
        return invalid("ANGULAR_EXACT packing is only available for full rotations in dimension 2");
    }
    let report = |centers: Vec<Point>, fixed_point: bool| PackingReport {
        y: y.to_vec(),
        rho,
        count: centers.len(),
        centers,
        method,
        fixed_point,
    };
    match action {
        GroupAction::MatrixConjugation => {
            let m = MatrixPoint::from_slice(y)?;
            let fixed = m.conjugate(0.5 * PI).distance(&m) == 0.0 || m.is_identity();
            if fixed {
                return Ok(report(vec![m.to_vec()], true));
            }
            let dist_of = |delta: f64| m.distance(&m.conjugate(delta));
            let angles = circle_greedy(&dist_of, PI, rho);
            let centers: Vec<Point> = angles.iter().map(|&a| m.conjugate(a).to_vec()).collect();
            verify_matrix_disjoint(&centers, rho)?;
            Ok(report(centers, false))
        }
        _ => {
            let blocks = match action {
                GroupAction::ProductRotation { blocks } => blocks.clone(),
                _ => vec![y.len()],
            };
            let factors = factors_of(&blocks, y);
            if factors.iter().all(|f| f.radius == 0.0) {
                return Ok(report(vec![y.to_vec()], true));
            }
            let centers = if method == PackingMethod::AngularExact {
                let f = &factors[0];
                let s = angular_exact_sine(space, f.radius, rho);
                let count = angular_exact_count(s);
                let step = 2.0 * s.min(1.0).asin();
                (0..count).map(|j| f.place(&[(j as f64 * step).cos(), (j as f64 * step).sin()])).collect()
            } else {
                let per: Vec<Vec<Vec<f64>>> =
                    factors.iter().map(|f| factor_points(f, &pack_factor(space, f, rho))).collect();
                let mut centers = Vec::new();
                product_for_each(&per, y.len(), &mut |p| {
                    centers.push(p.to_vec());
                    true
                });
                centers
            };
            verify_disjoint(space, &centers, rho)?;
            Ok(report(centers, false))
        }
    }
}

/// Packing count without materialising centers (products of factor counts).
pub fn packing_count_only(action: &GroupAction, space: &SpaceForm, y: &[f64], rho: f64) -> Result<(usize, PackingMethod)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid("packing radius must be positive");
    }
    match action {
        GroupAction::MatrixConjugation => {
            let r = packing_count(action, space, y, rho)?;
            Ok((r.count, r.method))
        }
        _ => {
            action.check(Some(space), y)?;
            if uses_angular_exact(action, space) {
                let r = norm(y);
                if r == 0.0 {
                    return Ok((1, PackingMethod::AngularExact));
                }
                return Ok((angular_exact_count(angular_exact_sine(space, r, rho)), PackingMethod::AngularExact));
            }
            let blocks = match action {
                GroupAction::ProductRotation { blocks } => blocks.clone(),
                _ => vec![y.len()],
            };
            let count = factors_of(&blocks, y).iter().map(|f| pack_factor(space, f, rho).count()).product();
            Ok((count, PackingMethod::Greedy))
        }
    }
}

fn disjoint_threshold(rho: f64) -> f64 {
    2.0 * rho - DISJOINT_TOL * (2.0 * rho).max(1.0)
}

/// Check `d(c_i, c_j) >= 2 rho` for all pairs (up to `1e-12`).
pub fn verify_disjoint(space: &SpaceForm, centers: &[Point], rho: f64) -> Result<()> {
    let thr = disjoint_threshold(rho);
    let fail = |i: usize, j: usize, d: f64| {
        Err(Error::Validation(format!("packing centers {i} and {j} are only {d} apart (need {})", 2.0 * rho)))
    };
    if centers.len() <= PAIRWISE_LIMIT {
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d = space.distance(&centers[i], &centers[j])?;
                if d < thr {
                    return fail(i, j, d);
                }
            }
        }
        return Ok(());
    }
    // Points more than `sep` apart in the chart are certainly far enough, so
    // only pairs in neighbouring hash cells need the exact distance. Hash on
    // the (at most three) coordinates with the largest spread.
    let sep = space.safe_chart_separation(rho);
    let dim = centers[0].len();
    let mut spread: Vec<(f64, usize)> = (0..dim)
        .map(|k| {
            let (lo, hi) = centers.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c[k]), h.max(c[k])));
            (hi - lo, k)
        })
        .collect();
    spread.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let axes: Vec<usize> = spread.iter().take(3).map(|s| s.1).collect();
    let key = |c: &[f64]| -> Vec<i64> { axes.iter().map(|&k| (c[k] / sep).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, c) in centers.iter().enumerate() {
        grid.entry(key(c)).or_default().push(i);
    }
    for (i, c) in centers.iter().enumerate() {
        let mut bad = None;
        for_each_neighbor(&key(c), &mut |nb| {
            if let Some(list) = grid.get(nb) {
                for &j in list {
                    if j > i {
                        match space.distance(c, &centers[j]) {
                            Ok(d) if d >= thr => {}
                            Ok(d) => {
                                bad = Some((j, d));
                                return false;
                            }
                            Err(_) => {
                                bad = Some((j, f64::NAN));
                                return false;
                            }
                        }
                    }
                }
            }
            true
        });
        if let Some((j, d)) = bad {
            return fail(i, j, d);
        }
    }
    Ok(())
}

fn verify_matrix_disjoint(centers: &[Point], rho: f64) -> Result<()> {
    let thr = disjoint_threshold(rho);
    let pts: Vec<MatrixPoint> = centers.iter().map(|c| MatrixPoint { a: c[0], b: c[1], c: c[2] }).collect();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].distance(&pts[j]);
            if d < thr {
                return Err(Error::Validation(format!("matrix packing centers {i} and {j} are only {d} apart")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub distance: f64,
    pub rho: f64,
    pub count: usize,
    pub method: PackingMethod,
}

/// Unit direction of the fixed ray used by [`expansion_profile`]: `e_1` for
/// full rotations, the normalised sum of each block's first axis for products.
pub fn expansion_direction(action: &GroupAction, dim: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; dim];
    match action {
        GroupAction::FullRotation => v[0] = 1.0,
        GroupAction::ProductRotation { blocks } => {
            validate_blocks(blocks)?;
            if blocks.iter().sum::<usize>() != dim {
                return invalid("block dimensions do not sum to the ambient dimension");
            }
            let w = 1.0 / (blocks.len() as f64).sqrt();
            let mut off = 0;
            for &b in blocks {
                v[off] = w;
                off += b;
            }
        }
        GroupAction::MatrixConjugation => return invalid("expansion profiles use a rotation action on a space form"),
    }
    Ok(v)
}

/// One packing count per geodesic radius along the fixed ray.
pub fn expansion_profile(action: &GroupAction, space: &SpaceForm, rho: f64, radii: &[f64]) -> Result<Vec<ExpansionRow>> {
    if radii.is_empty() {
        return invalid("radii list is empty");
    }
    if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return invalid("radii must be finite and non-negative");
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return invalid("radii must be non-decreasing");
    }
    let dir = expansion_direction(action, space.dim())?;
    radii
        .par_iter()
        .map(|&t| {
            let y = space.point_on_ray(&dir, t)?;
            let (count, method) = packing_count_only(action, space, &y, rho)?;
            Ok(ExpansionRow { distance: t, rho, count, method })
        })
        .collect()
}

/// `max_j d(y, xi_j y)` over a deterministic grid of [`DIAMETER_SAMPLES`]
/// group elements (the action is transitive on the orbit).
pub fn orbit_diameter(action: &GroupAction, space: &SpaceForm, y: &[f64]) -> Result<f64> {
    match action {
        GroupAction::MatrixConjugation => {
            let m = MatrixPoint::from_slice(y)?;
            Ok((0..DIAMETER_SAMPLES)
                .map(|k| m.distance(&m.conjugate(PI * k as f64 / DIAMETER_SAMPLES as f64)))
                .fold(0.0, f64::max))
        }
        _ => {
            action.check(Some(space), y)?;
            let pts = orbit_sample(action, y, DIAMETER_SAMPLES)?;
            let mut best: f64 = 0.0;
            for p in &pts {
                best = best.max(space.distance(y, p)?);
            }
            Ok(best)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub t: f64,
    pub search_radius: f64,
    pub samples: usize,
    pub min_diameter: f64,
    /// Some sampled `x` far from the fixed point has orbit diameter `<= t`.
    pub found_small_orbit: bool,
}

impl CoercivityReport {
    /// No evidence against boundedness of `{x : diam O(x) <= t}`.
    pub fn bounded(&self) -> bool {
        !self.found_small_orbit
    }
}

/// Probe `{x : diam O(x) <= t}` at distances `R/2, 3R/4, R` from the fixed point.
pub fn coercivity_probe(action: &GroupAction, space: &SpaceForm, t: f64, search_radius: f64) -> Result<CoercivityReport> {
    if !(t > 0.0) || !(search_radius > 0.0) {
        return invalid("coercivity probe needs t > 0 and a positive search radius");
    }
    let radii = [0.5 * search_radius, 0.75 * search_radius, search_radius];
    let mut points: Vec<Vec<f64>> = Vec::new();
    match action {
        GroupAction::MatrixConjugation => {
            for &r in &radii {
                // d_P(I, exp S) = sqrt(2) |S eigenvalue|
                let s = r / std::f64::consts::SQRT_2;
                for j in 0..PROBE_DIRECTIONS {
                    let phi = 2.0 * PI * j as f64 / PROBE_DIRECTIONS as f64;
                    points.push(MatrixPoint::exp_traceless(s * phi.cos(), s * phi.sin()).to_vec());
                }
            }
        }
        _ => {
            let d = space.dim();
            let mut dirs = sphere_points(d, PROBE_DIRECTIONS);
            if let GroupAction::ProductRotation { .. } = action {
                dirs.push(expansion_direction(action, d)?);
            }
            for &r in &radii {
                for u in &dirs {
                    points.push(space.point_on_ray(u, r)?);
                }
            }
        }
    }
    let diams: Vec<f64> = points.par_iter().map(|p| orbit_diameter(action, space, p)).collect::<Result<_>>()?;
    let min_diameter = diams.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport { t, search_radius, samples: points.len(), min_diameter, found_small_orbit: min_diameter <= t })
}

/// Largest `n` with `t >= t_n = max_{i<j<=n} rho / sin(alpha_ij / 2)`.
///
/// `angles` lists `alpha_ij` in the order `a12, a13, a23, a14, a24, a34, ...`;
/// only complete prefixes count.
pub fn tangent_packing_lower_bound(angles: &[f64], rho: f64, t: f64) -> Result<usize> {
    if angles.is_empty() {
        return invalid("angle list is empty");
    }
    if let Some(a) = angles.iter().find(|a| !(**a > 0.0 && **a <= PI)) {
        return invalid(format!("angles must lie in (0, pi], got {a}"));
    }
    if !(rho > 0.0) || !(t > 0.0) {
        return invalid("rho and t must be positive");
    }
    let mut n = 1;
    let mut t_n: f64 = 0.0;
    let mut idx = 0;
    loop {
        // stage n + 1 adds the angles a_{i, n+1}, i = 1..n
        if idx + n > angles.len() {
            break;
        }
        for a in &angles[idx..idx + n] {
            t_n = t_n.max(rho / (0.5 * a).sin());
        }
        idx += n;
        if t < t_n {
            break;
        }
        n += 1;
    }
    Ok(n)
}

/// Pairwise angles (in the triangular order) of planar rays at the given polar angles.
pub fn planar_ray_angles(directions: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 1..directions.len() {
        for i in 0..j {
            let mut a = (directions[j] - directions[i]).rem_euclid(2.0 * PI);
            if a > PI {
                a = 2.0 * PI - a;
            }
            out.push(a);
        }
    }
    out
}

/// Cap-covering estimate `|S^{d-1}| / |cap(2 rho / t)|`.
pub fn spherical_cap_count(d: usize, rho: f64, t: f64) -> Result<f64> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    if !(rho > 0.0) || !(t > rho) {
        return invalid(format!("spherical cap estimate needs t > rho > 0, got rho = {rho}, t = {t}"));
    }
    let theta = (2.0 * rho / t).min(PI);
    let cap = if d == 2 {
        2.0 * theta
    } else {
        let k = d as i32 - 2;
        (d as f64 - 1.0) * unit_ball_volume(d - 1) * integrate_relative(|p| p.sin().powi(k), 0.0, theta, 1e-13)?
    };
    Ok(unit_sphere_area(d) / cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSpheresReport {
    pub measure: f64,
    pub lower_bound: f64,
    pub m_g: f64,
}

/// `min sum z_i^{d_i - 1}` over the simplex `sum z_i = 1, z_i >= 0`.
///
/// The objective is separable and convex, so the minimiser equalises the
/// marginal costs `(d_i - 1) z_i^{d_i - 2}` (water filling); the common level
/// is found by bisection. Linear terms (`d_i = 2`) are evaluated as
/// `1 - sum(non-linear z_i)` so that the all-circle case is exactly 1.
pub fn product_spheres_m_g(blocks: &[usize]) -> Result<f64> {
    validate_blocks(blocks)?;
    let nonlinear: Vec<f64> = blocks.iter().filter(|&&d| d > 2).map(|&d| d as f64 - 1.0).collect();
    let has_linear = nonlinear.len() < blocks.len();
    let z_of = |mu: f64, e: f64| (mu / e).powf(1.0 / (e - 1.0));
    let total = |mu: f64| nonlinear.iter().map(|&e| z_of(mu, e)).sum::<f64>();
    let value = |mu: f64| nonlinear.iter().map(|&e| z_of(mu, e).powf(e)).sum::<f64>();
    if nonlinear.is_empty() {
        return Ok(1.0);
    }
    if has_linear && total(1.0) <= 1.0 {
        return Ok((1.0 - total(1.0)) + value(1.0));
    }
    let (mut lo, mut hi) = (0.0, if has_linear { 1.0 } else { nonlinear.iter().cloned().fold(0.0, f64::max) });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    // renormalise the tiny bisection residual onto the simplex
    let s = total(mu);
    Ok(nonlinear.iter().map(|&e| (z_of(mu, e) / s).powf(e)).sum())
}

/// Orbit measure `sum_i |S^{d_i - 1}| |y_i|^{d_i - 1}` of a product of rotation
/// groups (the sum form), with `m_G` and the linear bound `2 pi m_G |y|`.
pub fn orbit_hausdorff_product_spheres(blocks: &[usize], y: &[f64]) -> Result<ProductSpheresReport> {
    validate_blocks(blocks)?;
    if blocks.iter().sum::<usize>() != y.len() {
        return invalid("block dimensions do not sum to the point dimension");
    }
    let mut off = 0;
    let mut measure = 0.0;
    let mut any = false;
    for &k in blocks {
        let r = norm(&y[off..off + k]);
        any |= r > 0.0;
        measure += unit_sphere_area(k) * r.powi(k as i32 - 1);
        off += k;
    }
    if !any {
        return invalid("every block of y is zero");
    }
    let m_g = product_spheres_m_g(blocks)?;
    Ok(ProductSpheresReport { measure, lower_bound: 2.0 * PI * m_g * norm(y), m_g })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixHausdorffReport {
    pub length: f64,
    pub d_p: f64,
    pub kappa_check: bool,
}

/// Length `2 pi |X|_F` of the orbit curve `theta -> X xi(theta)` and the
/// distance `d_P(I, X)`; `kappa_check` is `length >= pi d_P`.
pub fn orbit_hausdorff_matrix(y: &MatrixPoint) -> Result<MatrixHausdorffReport> {
    let y = MatrixPoint::new(y.a, y.b, y.c)?;
    let length = 2.0 * PI * y.frobenius_norm();
    let d_p = y.d_p();
    Ok(MatrixHausdorffReport { length, d_p, kappa_check: length >= PI * d_p })
}

/// Length of `theta -> X xi(theta)` in the Frobenius norm by quadrature of the speed.
pub fn matrix_curve_length(y: &MatrixPoint) -> Result<f64> {
    let speed = |th: f64| {
        // derivative of X xi(theta) by central difference of the exact curve
        let h = 1e-5;
        let p = y.right_rotate(th + h);
        let m = y.right_rotate(th - h);
        p.iter().zip(&m).map(|(a, b)| ((a - b) / (2.0 * h)).powi(2)).sum::<f64>().sqrt()
    };
    integrate_relative(speed, 0.0, 2.0 * PI, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn e2() -> SpaceForm {
        SpaceForm::euclidean(2).unwrap()
    }

    #[test]
    fn orbit_sample_examples() {
        let pts = orbit_sample(&GroupAction::FullRotation, &[0.0, 0.0], 5).unwrap();
        assert!(pts.iter().all(|p| p == &vec![0.0, 0.0]));
        let pts = orbit_sample(&GroupAction::FullRotation, &[5.0, 0.0], 4).unwrap();
        let expect = [[5.0, 0.0], [0.0, 5.0], [-5.0, 0.0], [0.0, -5.0]];
        for e in expect {
            assert!(pts.iter().any(|p| dist(p, &e) < 1e-12), "{pts:?}");
        }
        let pts = orbit_sample(&GroupAction::MatrixConjugation, &[1.0, 0.0, 1.0], 7).unwrap();
        for p in pts {
            assert!(dist(&p, &[1.0, 0.0, 1.0]) < 1e-15);
        }
        let m = MatrixPoint::new(2.0, 1.0, 1.0).unwrap();
        for p in orbit_sample(&GroupAction::MatrixConjugation, &m.to_vec(), 9).unwrap() {
            assert!(MatrixPoint::from_slice(&p).is_ok());
        }
        let prod = GroupAction::product(&[2, 3]).unwrap();
        let y = [1.0, 1.0, 0.0, 2.0, 0.0];
        let pts = orbit_sample(&prod, &y, 50).unwrap();
        assert_eq!(pts.len(), 50);
        for p in pts {
            assert!((norm(&p[..2]) - 2f64.sqrt()).abs() < 1e-12);
            assert!((norm(&p[2..]) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn angular_exact_example() {
        let r = packing_count(&GroupAction::FullRotation, &e2(), &[100.0, 0.0], 1.0).unwrap();
        assert_eq!(r.method, PackingMethod::AngularExact);
        assert_eq!(r.count, 314);
        assert_eq!(r.count, (2.0 * PI / (2.0 * (0.01f64).asin())).floor() as usize);
        assert_eq!(r.centers.len(), r.count);
        // exhaustive pairwise certificate
        for i in 0..r.count {
            for j in i + 1..r.count {
                assert!(dist(&r.centers[i], &r.centers[j]) >= 2.0 - 1e-12);
            }
        }
    }

    #[test]
    fn fixed_points_give_one() {
        let h = SpaceForm::hyperbolic(3, -1.0).unwrap();
        let r = packing_count(&GroupAction::FullRotation, &h, &[0.0; 3], 0.3).unwrap();
        assert_eq!((r.count, r.fixed_point), (1, true));
        let prod = GroupAction::product(&[2, 2]).unwrap();
        let r = packing_count(&prod, &SpaceForm::euclidean(4).unwrap(), &[0.0; 4], 1.0).unwrap();
        assert_eq!((r.count, r.fixed_point), (1, true));
        let r = packing_count(&GroupAction::MatrixConjugation, &e2(), &[1.0, 0.0, 1.0], 0.1).unwrap();
        assert_eq!((r.count, r.fixed_point), (1, true));
    }

    #[test]
    fn greedy_versus_exact_planar() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = SpaceForm::hyperbolic(2, -1.0).unwrap();
        for i in 0..50 {
            let (space, y, rho) = if i % 2 == 0 {
                (e2(), rng.gen_range(1.0..200.0), rng.gen_range(0.1..3.0))
            } else {
                (h, rng.gen_range(0.3..0.99), rng.gen_range(0.05..1.0))
            };
            let exact = packing_count(&GroupAction::FullRotation, &space, &[y, 0.0], rho).unwrap().count;
            let greedy =
                packing_count_with(&GroupAction::FullRotation, &space, &[y, 0.0], rho, PackingMethod::Greedy).unwrap().count;
            assert!(greedy + 1 >= exact && greedy <= exact, "y={y} rho={rho}: greedy {greedy} exact {exact}");
        }
    }

    #[test]
    fn isometry_invariance() {
        let space = SpaceForm::hyperbolic(2, -1.0).unwrap();
        let y = [0.7, 0.0];
        let base = packing_count_with(&GroupAction::FullRotation, &space, &y, 0.2, PackingMethod::Greedy).unwrap().count;
        for p in orbit_sample(&GroupAction::FullRotation, &y, 7).unwrap() {
            let c = packing_count_with(&GroupAction::FullRotation, &space, &p, 0.2, PackingMethod::Greedy).unwrap();
            assert_eq!(c.count, base);
            assert!(dist(&c.centers[0], &p) < 1e-12);
        }
        let e3 = SpaceForm::euclidean(3).unwrap();
        let y = [3.0, 0.0, 0.0];
        let base = packing_count(&GroupAction::FullRotation, &e3, &y, 1.0).unwrap().count;
        assert!(base > 10);
        for p in orbit_sample(&GroupAction::FullRotation, &y, 5).unwrap().into_iter().skip(2) {
            assert_eq!(packing_count(&GroupAction::FullRotation, &e3, &p, 1.0).unwrap().count, base);
        }
    }

    #[test]
    fn product_and_sphere_packings_are_disjoint() {
        let e4 = SpaceForm::euclidean(4).unwrap();
        let prod = GroupAction::product(&[2, 2]).unwrap();
        let r = packing_count(&prod, &e4, &[3.0, 0.0, 0.0, 5.0], 1.0).unwrap();
        assert_eq!(r.count, r.centers.len());
        assert!(r.count > 50);
        let (c, _) = packing_count_only(&prod, &e4, &[3.0, 0.0, 0.0, 5.0], 1.0).unwrap();
        assert_eq!(c, r.count);
        let h3 = SpaceForm::hyperbolic(3, -1.0).unwrap();
        let r = packing_count(&GroupAction::FullRotation, &h3, &[0.0, 0.8, 0.0], 0.5).unwrap();
        assert!(r.count > 5);
        verify_disjoint(&h3, &r.centers, 0.5).unwrap();
        assert!(verify_disjoint(&e2(), &[vec![0.0, 0.0], vec![1.0, 0.0]], 0.5).is_ok());
        assert!(verify_disjoint(&e2(), &[vec![0.0, 0.0], vec![1.0 - 1e-9, 0.0]], 0.5).is_err());
    }

    #[test]
    fn matrix_packing_and_diameter() {
        let m = MatrixPoint::diag(3.0).unwrap();
        let r = packing_count(&GroupAction::MatrixConjugation, &e2(), &m.to_vec(), 0.2).unwrap();
        assert!(r.count > 3);
        let diam = orbit_diameter(&GroupAction::MatrixConjugation, &e2(), &m.to_vec()).unwrap();
        // rotating by pi/2 swaps the eigenvalues: distance sqrt(2) ln(9)
        assert!((diam - 2f64.sqrt() * 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn expansion_examples() {
        let radii: Vec<f64> = (0..8).map(|i| 10.0 * 10f64.powf(i as f64 * 2.0 / 7.0)).collect();
        let rows = expansion_profile(&GroupAction::FullRotation, &e2(), 1.0, &radii).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].count > w[0].count);
        }
        let last = rows.last().unwrap();
        assert!((last.count as f64 / (PI * last.distance) - 1.0).abs() < 0.1);
        let rows = expansion_profile(&GroupAction::FullRotation, &e2(), 1.0, &[7.0, 7.0, 7.0]).unwrap();
        assert!(rows.iter().all(|r| r.count == rows[0].count));
        let prod = GroupAction::product(&[2, 2]).unwrap();
        let e4 = SpaceForm::euclidean(4).unwrap();
        let rows = expansion_profile(&prod, &e4, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
        assert!(rows[0].count < rows[1].count && rows[1].count < rows[2].count);
        assert!(expansion_profile(&prod, &e4, 1.0, &[]).is_err());
        assert!(expansion_profile(&prod, &e4, 1.0, &[3.0, 1.0]).is_err());
    }

    #[test]
    fn diameters() {
        let d = orbit_diameter(&GroupAction::FullRotation, &e2(), &[3.0, 0.0]).unwrap();
        assert!((d - 6.0).abs() < 1e-12);
        let d = orbit_diameter(&GroupAction::FullRotation, &e2(), &[0.0, 0.0]).unwrap();
        assert_eq!(d, 0.0);
        let e4 = SpaceForm::euclidean(4).unwrap();
        let prod = GroupAction::product(&[2, 2]).unwrap();
        for r in [1.0, 2.5] {
            let y = [r, 0.0, 0.0, 0.0];
            let d = orbit_diameter(&prod, &e4, &y).unwrap();
            // exhaustive pairwise oracle on a 10^4 sample
            let pts = orbit_sample(&prod, &y, 10_000).unwrap();
            let mut best: f64 = 0.0;
            for i in (0..pts.len()).step_by(7) {
                for j in 0..pts.len() {
                    best = best.max(dist(&pts[i], &pts[j]));
                }
            }
            assert!((d - 2.0 * r).abs() < 1e-12 && (best - 2.0 * r).abs() < 1e-12);
        }
        let h = SpaceForm::hyperbolic(3, -1.0).unwrap();
        let d = orbit_diameter(&GroupAction::FullRotation, &h, &[0.0, 0.5, 0.0]).unwrap();
        assert!((d - 2.0 * h.radius_of(&[0.0, 0.5, 0.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn coercivity() {
        let r = coercivity_probe(&GroupAction::FullRotation, &e2(), 5.0, 20.0).unwrap();
        assert!(r.bounded() && (r.min_diameter - 20.0).abs() < 1e-9);
        let r = coercivity_probe(&GroupAction::FullRotation, &e2(), 50.0, 20.0).unwrap();
        assert!(!r.bounded());
        let r = coercivity_probe(&GroupAction::MatrixConjugation, &e2(), 0.5, 4.0).unwrap();
        assert!(r.bounded());
    }

    #[test]
    fn tangent_bound_examples() {
        let angles = vec![PI / 2.0; 6];
        assert_eq!(tangent_packing_lower_bound(&angles, 1.0, 2.0).unwrap(), 4);
        assert_eq!(tangent_packing_lower_bound(&angles, 1.0, 1.0).unwrap(), 1);
        // incomplete stage is ignored
        assert_eq!(tangent_packing_lower_bound(&angles[..5], 1.0, 2.0).unwrap(), 3);
        assert!(tangent_packing_lower_bound(&[0.5, 0.0], 1.0, 2.0).is_err());
        assert!(tangent_packing_lower_bound(&[], 1.0, 2.0).is_err());
        let dirs: Vec<f64> = (0..40).map(|k| 2.0 * PI * ((k as f64 * 0.618_033_988_75) % 1.0)).collect();
        let angles = planar_ray_angles(&dirs);
        let mut prev = 0;
        let mut t = 1.0;
        for _ in 0..12 {
            let b = tangent_packing_lower_bound(&angles, 1.0, t).unwrap();
            assert!(b >= prev);
            prev = b;
            t *= 2.0;
        }
        assert!(prev > 10);
    }

    #[test]
    fn spherical_caps() {
        let base: Vec<f64> =
            [10.0, 100.0, 1000.0].iter().map(|t| spherical_cap_count(3, 1.0, *t).unwrap() * (1.0 / t).sin().powi(2)).collect();
        for v in &base {
            assert!((v / base[0] - 1.0).abs() < 0.05);
        }
        for t in [5.0, 50.0, 500.0] {
            let est = spherical_cap_count(2, 1.0, t).unwrap();
            let exact = angular_exact_count(1.0 / t) as f64;
            assert!(est / exact >= 0.5 && est / exact <= 2.0, "{est} {exact}");
        }
        assert!(spherical_cap_count(3, 1.0, 1e6).unwrap() > spherical_cap_count(3, 1.0, 1e3).unwrap());
        assert!(spherical_cap_count(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn product_spheres_examples() {
        let r = orbit_hausdorff_product_spheres(&[2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((r.measure - 4.0 * PI).abs() < 1e-14);
        assert_eq!(r.m_g, 1.0);
        assert!((r.lower_bound - 2.0 * PI * 2f64.sqrt()).abs() < 1e-13);
        assert!(r.measure >= r.lower_bound);
        assert!(orbit_hausdorff_product_spheres(&[2, 2], &[0.0; 4]).is_err());
    }

    /// Grid search over the simplex as an independent oracle for m_G.
    fn grid_m_g(blocks: &[usize], n: usize) -> f64 {
        let k = blocks.len();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; k - 1];
        loop {
            let used: usize = idx.iter().sum();
            if used <= n {
                let mut z: Vec<f64> = idx.iter().map(|&i| i as f64 / n as f64).collect();
                z.push((n - used) as f64 / n as f64);
                let v: f64 = z.iter().zip(blocks).map(|(z, &d)| z.powi(d as i32 - 1)).sum();
                best = best.min(v);
            }
            let mut j = 0;
            loop {
                if j == k - 1 {
                    return best;
                }
                idx[j] += 1;
                if idx[j] <= n {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    #[test]
    fn m_g_matches_grid_search() {
        for blocks in [vec![2, 2], vec![2, 3], vec![3, 3], vec![2, 4, 3], vec![3, 5], vec![4, 4, 4], vec![6, 2]] {
            let m = product_spheres_m_g(&blocks).unwrap();
            let g = grid_m_g(&blocks, 400);
            assert!(m <= g + 1e-12, "{blocks:?}: {m} vs grid {g}");
            assert!(g - m < 1e-3, "{blocks:?}: {m} vs grid {g}");
        }
        assert_eq!(product_spheres_m_g(&[2, 2, 2]).unwrap(), 1.0);
        // two 3-blocks: z = 1/2 each, value 1/2
        assert!((product_spheres_m_g(&[3, 3]).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn matrix_examples() {
        let r = orbit_hausdorff_matrix(&MatrixPoint::identity()).unwrap();
        assert!((r.length - 2.0 * PI * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(r.d_p, 0.0);
        assert!(r.kappa_check);
        let m = MatrixPoint::diag(2.0).unwrap();
        let r = orbit_hausdorff_matrix(&m).unwrap();
        assert!((r.length - 2.0 * PI * 4.25f64.sqrt()).abs() < 1e-13);
        assert!((r.d_p - 2f64.sqrt() * 2f64.ln()).abs() < 1e-14);
        assert!((matrix_curve_length(&m).unwrap() - r.length).abs() < 1e-6);
        for i in 0..=60 {
            let l = 10f64.powf(i as f64 / 10.0);
            assert!(orbit_hausdorff_matrix(&MatrixPoint::diag(l).unwrap()).unwrap().kappa_check);
        }
        assert!(MatrixPoint::new(1.0, 0.5, 1.0).is_err());
        assert!(MatrixPoint::new(-1.0, 0.0, -1.0).is_err());
        let m = MatrixPoint::new(2.0, 1.0, 1.0).unwrap();
        assert!((m.distance(&MatrixPoint::identity()) - m.d_p()).abs() < 1e-13);
    }
}
