//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! The lines are written straight to the process stdout so they show up in
//! `cargo test` logs without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randers_lab::cli::{generated_profile, ProfileKind};
use randers_lab::modelspace::{bishop_gromov_ratio, comparison_volume, SpaceForm};
use randers_lab::numerics::{beta_fn, Exponent, Extended};
use randers_lab::orbits::{
    matrix_curve_length, orbit_hausdorff_matrix, orbit_hausdorff_product_spheres, packing_count_only,
    planar_ray_angles, product_spheres_m_g, tangent_packing_lower_bound, GroupAction, MatrixPoint,
};
use randers_lab::pde::{
    bonanno_parameters, coercivity_constant, energy, energy_along_ray, energy_gradient, mckean_bound,
    multi_start_solve, refinement_check, PdeProblem,
};
use randers_lab::randers::{eikonal_residual, BetaProfile, FunkModel, RandersStructure};
use randers_lab::rearrange::{euclidean_rearrangement, norm_preservation_check, polya_szego_check};
use randers_lab::sobolev::{classify_pair, funk_beta_verdict};

const BETA_TOL: f64 = 1e-10;
const FUNK_BUDGET: Duration = Duration::from_secs(1);
const EIKONAL_TOL: f64 = 1e-6;
const EIKONAL_BUDGET: Duration = Duration::from_secs(5);
const EXPANSION_REL: f64 = 0.10;
const EXPANSION_FACTOR: f64 = 2.0;
const EXPANSION_BUDGET: Duration = Duration::from_secs(30);
const LENGTH_TOL: f64 = 1e-6;
const NORM_TOL: f64 = 1e-3;
const IDEMPOTENCE_TOL: f64 = 1e-9;
const BISHOP_GROMOV_TOL: f64 = 1e-9;
const GRADIENT_FD_TOL: f64 = 1e-6;
const REFINED_GRADIENT_TOL: f64 = 1e-6;
const SUITE_BUDGET: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn report(n: usize, o: &Outcome, elapsed: Duration) {
    let line =
        format!("criterion {n}: {} ({:.2} s) {}\n", if o.pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64(), o.detail);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn funk_counterexample() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut bad = Vec::new();
    for d in [2usize, 3, 4] {
        let mut pairs: Vec<(f64, Exponent, f64)> =
            [(2.0, 4.0), (1.5, 2.5)].iter().map(|&(p, q)| (p, Exponent::Finite(q), 0.5 * (p + q))).collect();
        let p = d as f64 + 1.0;
        pairs.push((p, Exponent::Infinite, p * p / d as f64));
        for (p, q, t) in pairs {
            cases += 1;
            let v = funk_beta_verdict(d, p, q, t).unwrap();
            if !(v.w_norm_bound.is_finite() && v.lq_norm == Extended::Divergent && v.embedding_fails) {
                bad.push(format!("d={d} p={p} q={q}"));
            }
        }
    }
    let b = beta_fn(3.0, 1.0 / 3.0).unwrap().value().unwrap();
    let beta_ok = (b - 27.0 / 14.0).abs() < BETA_TOL;
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && beta_ok && elapsed < FUNK_BUDGET,
        format!("{cases} cases, failures {bad:?}, |B(3,1/3) - 27/14| = {:.1e}", (b - 27.0 / 14.0).abs()),
    )
}

fn eikonal_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        let f = FunkModel::new(d).unwrap();
        let origin = vec![0.0; d];
        for _ in 0..1000 {
            let r = rng.gen_range(0.05..0.95);
            let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v *= r / n);
            worst = worst.max(eikonal_residual(&f, &origin, &x).unwrap());
        }
    }
    outcome(worst < EIKONAL_TOL && start.elapsed() < EIKONAL_BUDGET, format!("max residual {worst:.2e} over 2000 points"))
}

fn expansion_asymptotics() -> Outcome {
    let start = Instant::now();
    let e2 = SpaceForm::euclidean(2).unwrap();
    let mut worst_euclid: f64 = 0.0;
    for k in 0..=20 {
        let t = 100.0 * 100f64.powf(k as f64 / 20.0);
        let (count, _) = packing_count_only(&GroupAction::FullRotation, &e2, &[t, 0.0], 1.0).unwrap();
        worst_euclid = worst_euclid.max((count as f64 / (PI * t) - 1.0).abs());
    }
    let h2 = SpaceForm::hyperbolic(2, -1.0).unwrap();
    let rho = 1.0;
    let mut values = Vec::new();
    let mut counts = Vec::new();
    let mut quanta = Vec::new();
    for k in 0..=30 {
        let s = 0.9 + 0.099 * k as f64 / 30.0;
        let (count, _) = packing_count_only(&GroupAction::FullRotation, &h2, &[s, 0.0], rho).unwrap();
        let unit = rho * (1.0 - s * s) / s;
        values.push(count as f64 * unit);
        counts.push(count);
        quanta.push(unit);
    }
    let in_band = values.iter().all(|v| *v >= PI / EXPANSION_FACTOR && *v <= PI * EXPANSION_FACTOR);
    // the count is an integer: the normalised value can only be monotone up to one ball
    let monotone = counts.windows(2).all(|w| w[1] >= w[0])
        && values.windows(2).zip(&quanta[1..]).all(|(w, q)| w[1] >= w[0] - q);
    outcome(
        worst_euclid < EXPANSION_REL && in_band && monotone && start.elapsed() < EXPANSION_BUDGET,
        format!(
            "euclid max |m/(pi|y|) - 1| = {worst_euclid:.3}; ball values in [{:.3}, {:.3}] (pi = {PI:.3}), monotone {monotone}",
            values[0],
            values[values.len() - 1]
        ),
    )
}

/// Directions at multiples of the golden angle: every prefix is well spread.
fn golden_directions(n: usize) -> Vec<f64> {
    let g = PI * (3.0 - 5f64.sqrt());
    (0..n).map(|k| (k as f64 * g).rem_euclid(2.0 * PI)).collect()
}

fn tangent_lower_bound() -> Outcome {
    let angles = planar_ray_angles(&golden_directions(64));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut pairs = 0;
    for k in 0..50 {
        let d = if k < 40 { 2 } else { 3 };
        let space = SpaceForm::euclidean(d).unwrap();
        let rho = rng.gen_range(0.2..2.0);
        let t = rho * 10f64.powf(rng.gen_range(0.0..if d == 2 { 2.5 } else { 1.0 }));
        let mut y = vec![0.0; d];
        y[0] = t;
        let (count, _) = packing_count_only(&GroupAction::FullRotation, &space, &y, rho).unwrap();
        let bound = tangent_packing_lower_bound(&angles, rho, t).unwrap();
        pairs += 1;
        if count < bound {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations on {pairs} (t, rho) pairs"))
}

/// `min sum z_i^{d_i - 1}` over the simplex by brute force on a grid (two blocks).
fn brute_m_g(d1: usize, d2: usize) -> f64 {
    (0..=200_000)
        .map(|k| {
            let z = k as f64 / 200_000.0;
            z.powi(d1 as i32 - 1) + (1.0 - z).powi(d2 as i32 - 1)
        })
        .fold(f64::INFINITY, f64::min)
}

fn hypothesis_h() -> Outcome {
    let mut worst_len: f64 = 0.0;
    let mut below = 0;
    for k in 0..=24 {
        let l = 10f64.powf(6.0 * k as f64 / 24.0);
        let y = MatrixPoint::diag(l).unwrap();
        let rep = orbit_hausdorff_matrix(&y).unwrap();
        let numeric = matrix_curve_length(&y).unwrap();
        worst_len = worst_len.max((rep.length - numeric).abs() / rep.length.max(1.0));
        if rep.length < PI * rep.d_p {
            below += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let block_sets: [&[usize]; 4] = [&[2, 2], &[2, 3], &[3, 3], &[2, 2, 4]];
    let mut product_fail = 0;
    for i in 0..100 {
        let blocks = block_sets[i % block_sets.len()];
        let dim: usize = blocks.iter().sum();
        let mut y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = 10f64.powf(rng.gen_range(0.0..2.0));
        y.iter_mut().for_each(|v| *v *= target / n);
        let rep = orbit_hausdorff_product_spheres(blocks, &y).unwrap();
        if rep.measure < 2.0 * PI * rep.m_g * target {
            product_fail += 1;
        }
    }
    let circles = product_spheres_m_g(&[2, 2, 2]).unwrap();
    let m23 = product_spheres_m_g(&[2, 3]).unwrap();
    let m_g_ok = circles == 1.0 && (m23 - brute_m_g(2, 3)).abs() < 1e-8;
    outcome(
        worst_len < LENGTH_TOL && below == 0 && product_fail == 0 && m_g_ok,
        format!(
            "matrix length error {worst_len:.1e}, {below} below pi d_P; product: {product_fail}/100 below bound, m_G(circles) = {circles}, m_G(2,3) = {m23:.6}"
        ),
    )
}

fn rearrangement() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_norm: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    for k in 0..20u64 {
        let d = 2 + (k as usize / 2) % 2;
        let space = if k % 2 == 0 { SpaceForm::euclidean(d).unwrap() } else { SpaceForm::hyperbolic(d, -1.0).unwrap() };
        let kind = [ProfileKind::Random, ProfileKind::Random, ProfileKind::Bump, ProfileKind::Tent][k as usize % 4];
        let u = generated_profile(&space, kind, 2.0, 300, k).unwrap();
        let star = euclidean_rearrangement(&u).unwrap();
        for q in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinite] {
            let e = norm_preservation_check(&u, &star, q);
            worst_norm = worst_norm.max(e);
            if !(e < NORM_TOL) {
                failures.push(format!("profile {k}: L^{q} error {e:.2e}"));
            }
        }
        for p in [2.0, 3.0] {
            let ps = polya_szego_check(&u, &star, p).unwrap();
            if !ps.holds {
                failures.push(format!("profile {k}: Polya-Szego p={p} {} > {}", ps.lhs, ps.rhs));
            }
        }
        let again = euclidean_rearrangement(&star).unwrap();
        let idem = star.grid().iter().zip(star.values()).map(|(&r, &v)| (again.value_at(r) - v).abs()).fold(0.0, f64::max);
        worst_idem = worst_idem.max(idem);
        if !(idem < IDEMPOTENCE_TOL) {
            failures.push(format!("profile {k}: idempotence {idem:.2e}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("20 profiles, worst norm error {worst_norm:.1e}, worst idempotence {worst_idem:.1e} {failures:?}"),
    )
}

fn volume_comparison() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sandwich_fail = 0;
    let rhos: Vec<f64> = (0..12).map(|k| 0.05 * 1.5f64.powi(k)).collect();
    for d in [2usize, 3, 4] {
        for c in [0.0, -0.5, -1.0, -2.0] {
            let space = SpaceForm::new(d, c).unwrap();
            let mut off = vec![0.0; d];
            off[0] = if c == 0.0 { 3.0 } else { 0.6 };
            for &rho in &rhos {
                for x in [space.origin(), off.clone()] {
                    worst = worst.max((bishop_gromov_ratio(&space, &x, rho).unwrap() - 1.0).abs());
                }
                // c_lo <= curvature <= c_hi; the more negative bound gives the larger ball
                let vol = space.ball_volume(&off, rho).unwrap();
                let (c_lo, c_hi) = (c - 0.75, (c + 0.25).min(0.0));
                let lower = comparison_volume(c_hi, d, rho).unwrap();
                let upper = comparison_volume(c_lo, d, rho).unwrap();
                if !(lower <= vol * (1.0 + 1e-12) && vol <= upper * (1.0 + 1e-12)) {
                    sandwich_fail += 1;
                }
            }
        }
    }
    outcome(
        worst < BISHOP_GROMOV_TOL && sandwich_fail == 0,
        format!("max |ratio - 1| = {worst:.1e}, {sandwich_fail} sandwich violations"),
    )
}

fn reference_problem(beta: bool) -> PdeProblem {
    let h2 = SpaceForm::hyperbolic(2, -1.0).unwrap();
    let f = if beta {
        RandersStructure::new(h2, BetaProfile::Gaussian { amplitude: 0.3, width: 1.5 }, 0.3).unwrap()
    } else {
        RandersStructure::riemannian(h2)
    };
    PdeProblem::reference(f).unwrap()
}

fn pde_module() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // gradient against central differences
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_fd: f64 = 0.0;
    for case in 0..100 {
        let pr = reference_problem(case % 2 == 1).with_cells(64).unwrap().with_lambda(rng.gen_range(0.0..40.0)).unwrap();
        // profiles bounded away from zero: a difference quotient of the total
        // energy cannot resolve components many orders below it
        let amp = 10f64.powf(rng.gen_range(-1.0..1.3));
        let decay = rng.gen_range(0.5..4.0);
        let floor = rng.gen_range(0.05..0.5);
        let vals: Vec<f64> = pr
            .grid()
            .iter()
            .map(|&r| amp * (floor + (-r / decay).exp()) * (1.0 + 0.2 * rng.gen::<f64>()) * (1.0 - r / pr.r_max()))
            .collect();
        let u = pr.profile(vals.clone()).unwrap();
        let g = energy_gradient(&pr, &u).unwrap();
        let k = rng.gen_range(0..64);
        let central = |eps: f64| {
            let (mut a, mut b) = (vals.clone(), vals.clone());
            a[k] += eps;
            b[k] -= eps;
            let ea = energy(&pr, &pr.profile(a).unwrap()).unwrap().e;
            let eb = energy(&pr, &pr.profile(b).unwrap()).unwrap().e;
            (ea - eb) / (2.0 * eps)
        };
        // Richardson step on the central quotient removes the O(eps^2) term
        let eps = 1e-4 * vals[k].abs().max(1e-2);
        let fd = (4.0 * central(0.5 * eps) - central(eps)) / 3.0;
        worst_fd = worst_fd.max((fd - g[k]).abs() / g[k].abs().max(1e-300));
    }
    pass &= worst_fd < GRADIENT_FD_TOL;
    notes.push(format!("fd rel err {worst_fd:.1e}"));

    // closed forms against direct evaluation
    let m = mckean_bound(3, 1.0, 2.0).unwrap();
    let c = coercivity_constant(3, 0.0, 2.0, 1.0).unwrap();
    let mut formula_ok = m == 1.0 && (c - 0.5).abs() < 1e-15;
    for _ in 0..20 {
        let (d, a, p, kappa) = (rng.gen_range(2..6usize), rng.gen_range(0.0..0.9f64), rng.gen_range(1.2..5.0f64), rng.gen_range(0.2..3.0f64));
        let df = d as f64;
        let direct_m = ((df - 1.0) * kappa / p).powf(p);
        let direct_c = (1.0 - a * a).powf((df + 1.0) / 2.0) / (1.0 + a).powf(p) * direct_m / (1.0 + direct_m);
        formula_ok &= (mckean_bound(d, kappa, p).unwrap() - direct_m).abs() <= 1e-12 * direct_m;
        formula_ok &= (coercivity_constant(d, a, p, kappa).unwrap() - direct_c).abs() <= 1e-12 * direct_c;
    }
    pass &= formula_ok;
    notes.push(format!("McKean {m}, c {c}"));

    let sweep: Vec<f64> = (0..=120).map(|k| 10f64.powf(-30.0 + 0.25 * k as f64)).collect();
    let mut found = false;
    for beta in [false, true] {
        let pr = reference_problem(beta);
        let b = bonanno_parameters(&pr, 1.0, 3.0, 1.0, &sweep).unwrap();
        let strict = b.rho0 < b.phi_u1 && b.sup_bound / b.rho0 < b.j_u1 / b.phi_u1 && b.a_bar > 0.0;
        pass &= strict && b.hypotheses_hold();
        notes.push(format!("beta={beta}: rho0 {:.2e} a_bar {:.3}", b.rho0, b.a_bar));

        // coercivity along 10 rays at the right end of the interval
        let top = pr.with_lambda(b.a_bar).unwrap();
        let ts: Vec<f64> = (0..12).map(|k| 2f64.powi(k)).collect();
        let mut rays_ok = true;
        for k in 0..10 {
            let (w, amp) = (rng.gen_range(0.3..4.0), rng.gen_range(0.1..3.0));
            let off = rng.gen_range(0.0..3.0);
            let u = top
                .profile(top.grid().iter().map(|&r| amp * (-((r - off) / w).powi(2)).exp() * (1.0 - r / top.r_max())).collect())
                .unwrap();
            let e = energy_along_ray(&top, &u, &ts).unwrap();
            let tail_increasing = e[6..].windows(2).all(|x| x[1] > x[0]);
            rays_ok &= tail_increasing && e[11] > 1e3 * e[0].abs().max(1.0);
            let _ = k;
        }
        pass &= rays_ok;
        notes.push(format!("coercive rays {rays_ok}"));

        let reports = multi_start_solve(&pr, &[0.25 * b.a_bar, 0.5 * b.a_bar], 8).unwrap();
        for rep in &reports {
            let at = pr.with_lambda(rep.lambda).unwrap();
            let refined: Vec<f64> = rep.profiles.iter().map(|u| refinement_check(&at, u).unwrap().resolved_gradient).collect();
            let has_zero = rep.profiles.iter().any(|u| u.max_value() == 0.0);
            let ok = rep.profiles.len() >= 2
                && rep.nontrivial() >= 1
                && has_zero
                && rep.distinct[0][1]
                && refined.iter().all(|g| *g < REFINED_GRADIENT_TOL);
            found |= ok;
            notes.push(format!("lambda {:.2}: {} points, refined {:?}", rep.lambda, rep.profiles.len(), refined
                .iter()
                .map(|g| format!("{g:.1e}"))
                .collect::<Vec<_>>()));
        }
    }
    pass &= found;
    outcome(pass, notes.join("; "))
}

/// CLI runs compared against the stored goldens, twice.
pub const GOLDEN_CASES: &[(&str, &[&str])] = &[
    ("packing_euclid.csv", &["packing", "--space", "euclid", "--dim", "2", "--rho", "1", "--radii", "10:1000:log"]),
    ("expansion_ball.csv", &["expansion", "--space", "hyperbolic", "--rho", "0.5", "--radii", "1:6:lin:6"]),
    ("funk_d3.csv", &["funk", "--dim", "3", "--p", "2", "--q", "4"]),
    ("funk_morrey.csv", &["funk", "--dim", "2", "--p", "3", "--q", "inf"]),
    ("hausdorff_matrix.csv", &["hausdorff", "--lambdas", "1:1e6:log:7"]),
    ("hausdorff_product.json", &["hausdorff", "--kind", "product", "--blocks", "2,3", "--samples", "5", "--seed", "3", "--format", "json"]),
    ("rearrange_random.csv", &["rearrange", "--cells", "200", "--seed", "11"]),
    ("rearrange_ball.csv", &["rearrange", "--space", "hyperbolic", "--dim", "3", "--profile", "bump", "--cells", "100"]),
    ("embedding.csv", &["embedding", "--radii", "0,2"]),
    ("pde.csv", &["pde", "--cells", "256", "--lambdas", "8", "--refine"]),
];

fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_randers-lab")).args(args).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for (name, args) in GOLDEN_CASES {
        let a = run_cli(args);
        let b = run_cli(args);
        let golden = std::fs::read(golden_dir().join(name)).unwrap_or_default();
        if a != b || a != golden {
            mismatches.push(*name);
        }
    }
    outcome(mismatches.is_empty(), format!("{} golden files, mismatches {mismatches:?}", GOLDEN_CASES.len()))
}

#[test]
fn acceptance() {
    let suite = Instant::now();
    let criteria: [fn() -> Outcome; 9] = [
        funk_counterexample,
        eikonal_identity,
        expansion_asymptotics,
        tangent_lower_bound,
        hypothesis_h,
        rearrangement,
        volume_comparison,
        pde_module,
        determinism,
    ];
    let mut failed = Vec::new();
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = c();
        if i == 7 && suite.elapsed() > SUITE_BUDGET {
            o.pass = false;
            o.detail.push_str("; over the suite budget");
        }
        report(i + 1, &o, start.elapsed());
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(suite.elapsed() < SUITE_BUDGET, "acceptance suite took {:?}", suite.elapsed());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
#[ignore = "rewrites tests/golden from the current binary"]
fn regenerate_goldens() {
    std::fs::create_dir_all(golden_dir()).unwrap();
    for (name, args) in GOLDEN_CASES {
        std::fs::write(golden_dir().join(name), run_cli(args)).unwrap();
    }
}

#[test]
fn funk_pairs_regimes() {
    // the d = 4 Sobolev-type pairs of the grid are outside the admissible set
    assert!(classify_pair(2.0, Exponent::Finite(4.0), 3).is_ok());
    assert!(classify_pair(1.5, Exponent::Finite(2.5), 4).is_err());
}
