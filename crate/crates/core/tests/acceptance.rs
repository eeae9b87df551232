//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`). Tolerances
//! are pinned here, not configurable.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use kolmo::barrier::{self, Barrier, GridConfig};
use kolmo::criterion::{self, CriterionParams};
use kolmo::domain::{Cylinder, Domain, Shape};
use kolmo::harness::{self, ExpectedVerdict};
use kolmo::kernel::FundamentalSolution;
use kolmo::operator::{GroupPoint, OuOperator};
use kolmo::rng::stream;
use kolmo::solver::{self, SolverConfig};
use kolmo::stats::Accumulator;

fn report(criterion: usize, name: &str, passed: bool, detail: &str, started: Instant) {
    println!(
        "acceptance {:>2}: {} - {} ({}) [{:.1?}]",
        criterion,
        if passed { "PASS" } else { "FAIL" },
        name,
        detail,
        started.elapsed()
    );
}

fn suite_operators() -> Vec<(String, OuOperator)> {
    vec![
        ("heat2".into(), OuOperator::heat(2)),
        ("heat3".into(), OuOperator::heat(3)),
        ("kolmogorov".into(), OuOperator::kolmogorov()),
        ("p21".into(), OuOperator::p21()),
    ]
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

#[test]
fn acceptance_01_group_structure_exactness() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (_, op) in suite_operators() {
        let n = op.dim();
        let q = op.homogeneous_dimension().space;
        let c1 = op.covariance(1.0).unwrap();
        let exps = op.signature().exponents();
        let mut rng = stream(101, &[n as u64, q as u64]);
        for _ in 0..100 {
            // one-parameter flow group
            let s: f64 = rng.random_range(-2.0..2.0);
            let u: f64 = rng.random_range(-2.0..2.0);
            let lhs = op.exp_minus_b(s + u);
            let rhs = op.exp_minus_b(s) * op.exp_minus_b(u);
            worst = worst.max((&lhs - &rhs).abs().max() / rhs.abs().max().max(1.0));

            // group axioms
            let rand_point = |rng: &mut rand_chacha::ChaCha8Rng| {
                GroupPoint::new(
                    DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-2.0..2.0))),
                    rng.random_range(-1.5..1.5),
                )
            };
            let a = rand_point(&mut rng);
            let b = rand_point(&mut rng);
            let c = rand_point(&mut rng);
            let assoc_l = op.compose(&op.compose(&a, &b), &c);
            let assoc_r = op.compose(&a, &op.compose(&b, &c));
            let scale = assoc_r.x.abs().max().max(1.0);
            worst = worst.max((assoc_l.x - &assoc_r.x).abs().max() / scale);
            worst = worst.max((assoc_l.t - assoc_r.t).abs());
            let inv = op.invert(&a);
            let e = op.compose(&a, &inv);
            worst = worst.max(e.x.abs().max()).max(e.t.abs());

            // dilation determinant
            let lam: f64 = rng.random_range(0.2..4.0);
            let det: f64 = exps.iter().map(|&e| lam.powi(e as i32)).product();
            worst = worst.max(rel_err(det, lam.powi(q as i32)));

            // covariance scaling identity
            let t: f64 = rng.random_range(0.05..20.0);
            let ct = op.covariance(t).unwrap();
            let root = t.sqrt();
            let mut scaled = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    scaled[(i, j)] =
                        c1[(i, j)] * root.powi(exps[i] as i32) * root.powi(exps[j] as i32);
                }
            }
            worst = worst.max((&ct - &scaled).abs().max() / ct.abs().max());
        }
    }
    let passed = worst <= 1e-10 && started.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        "group and structure exactness",
        passed,
        &format!("worst relative error {worst:.3e}"),
        started,
    );
    assert!(passed, "worst relative error {worst:.3e}");
}

#[test]
fn acceptance_02_closed_form_oracles() {
    let started = Instant::now();
    let op = OuOperator::kolmogorov();
    let mut worst: f64 = 0.0;
    let mut rng = stream(102, &[]);
    for _ in 0..100 {
        let t: f64 = rng.random_range(0.05..10.0);
        let c = op.covariance(t).unwrap();
        worst = worst.max(rel_err(c[(0, 0)], t));
        worst = worst.max(rel_err(c[(0, 1)], -t * t / 2.0));
        worst = worst.max(rel_err(c[(1, 1)], t * t * t / 3.0));
    }

    let fs = FundamentalSolution::new(OuOperator::heat(2)).unwrap();
    for _ in 0..100 {
        let x: DVector<f64> = DVector::from_column_slice(&[
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        let t: f64 = rng.random_range(0.05..4.0);
        let expect =
            (4.0 * std::f64::consts::PI * t).powi(-1) * (-x.norm_squared() / (4.0 * t)).exp();
        worst = worst.max(rel_err(fs.eval(&x, t), expect));
    }
    let passed = worst <= 1e-12 && started.elapsed().as_secs_f64() < 1.0;
    report(
        2,
        "closed-form covariance and heat kernel",
        passed,
        &format!("worst relative error {worst:.3e}"),
        started,
    );
    assert!(passed, "worst relative error {worst:.3e}");
}

#[test]
fn acceptance_03_kernel_correctness() {
    let started = Instant::now();
    let mut detail = String::new();
    let mut passed = true;

    // homogeneity to 1e-10
    let mut worst_hom: f64 = 0.0;
    for (_, op) in suite_operators() {
        let fs = FundamentalSolution::new(op).unwrap();
        let q = fs.homogeneous_dim();
        let n = fs.operator().dim();
        let mut rng = stream(103, &[q as u64]);
        for _ in 0..100 {
            let x = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.5..1.5)));
            let t: f64 = rng.random_range(0.2..2.0);
            let lam: f64 = rng.random_range(0.1..10.0);
            let z = GroupPoint::new(x, t);
            let zl = fs.operator().dilate(lam, &z);
            let lhs = fs.eval(&zl.x, zl.t);
            let rhs = lam.powi(-(q as i32)) * fs.eval(&z.x, z.t);
            if rhs > 1e-280 {
                worst_hom = worst_hom.max(rel_err(lhs, rhs));
            }
        }
    }
    passed &= worst_hom <= 1e-10;
    detail.push_str(&format!("homogeneity {worst_hom:.2e}"));

    // spatial normalization within 1e-3 by quadrature
    let mut worst_mass: f64 = 0.0;
    for op in [OuOperator::heat(2), OuOperator::kolmogorov()] {
        let fs = FundamentalSolution::new(op).unwrap();
        for t in [0.25, 1.0, 4.0] {
            let mass = common::kernel_mass_quadrature(&fs, t, 96);
            worst_mass = worst_mass.max((mass - 1.0).abs());
        }
    }
    passed &= worst_mass <= 1e-3;
    detail.push_str(&format!(", mass defect {worst_mass:.2e}"));

    // residual decays at second order at 20 randomized smooth points;
    // the flipped drift sign must not decay
    let fs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
    let mut rng = stream(1033, &[]);
    let mut checked = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut flipped_ok = true;
    while checked < 20 {
        let z = GroupPoint::from_slice(
            &[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
            rng.random_range(0.5..2.0),
        );
        let scaled = fs.operator().dilate_space(1.0 / z.t.sqrt(), &z.x);
        if fs.norm_sq(&scaled) < 2.0 {
            continue;
        }
        checked += 1;
        let h1 = 1e-2;
        let h2 = 5e-3;
        let r1 = fs.pde_residual(&z, h1).unwrap();
        let r2 = fs.pde_residual(&z, h2).unwrap();
        let scale = fs.eval(&z.x, z.t).max(1e-12);
        if r2 > 1e-13 * scale {
            // O(h^2) halving of h divides the residual by about 4
            worst_ratio = worst_ratio.max(r2 / r1);
        }
        let w1 = fs.pde_residual_with_drift(&z, h1, -1.0).unwrap();
        let w2 = fs.pde_residual_with_drift(&z, h2, -1.0).unwrap();
        // flipped sign converges to a positive limit, no quadratic decay
        if w2 < 1e-6 * scale || w2 < 0.3 * w1 {
            flipped_ok = false;
        }
    }
    passed &= worst_ratio <= 0.35 && flipped_ok;
    detail.push_str(&format!(
        ", residual halving ratio {worst_ratio:.3} (expect ~0.25), sign control {flipped_ok}"
    ));

    passed &= started.elapsed().as_secs_f64() < 30.0;
    report(3, "fundamental solution correctness", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn acceptance_04_sampler_fidelity() {
    let started = Instant::now();
    let fs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
    let x = DVector::from_column_slice(&[1.0, 0.0]);
    let draws = 100_000usize;

    let one = fs.transition_kernel(1.0).unwrap();
    let mean_expect = &one.mean_map * &x; // exp(B) x = (1, 1)
    let cov_expect = fs.operator().flow_gramian(1.0, 1.0).unwrap() * 2.0;

    let mut rng = stream(104, &[]);
    let mut acc = [Accumulator::default(), Accumulator::default()];
    let mut cross = Accumulator::default();
    let mut samples = Vec::with_capacity(draws);
    for _ in 0..draws {
        let y = one.step(&x, &mut rng);
        acc[0].push(y[0]);
        acc[1].push(y[1]);
        samples.push(y);
    }
    let m0 = acc[0].mean();
    let m1 = acc[1].mean();
    for y in &samples {
        cross.push((y[0] - m0) * (y[1] - m1));
    }

    let mut passed = true;
    let mut detail = String::new();
    for i in 0..2 {
        let dev = (acc[i].mean() - mean_expect[i]).abs();
        let tol = 3.0 * acc[i].stderr();
        passed &= dev <= tol;
        detail.push_str(&format!("mean{i} dev {dev:.2e} (3se {tol:.2e}); "));
    }
    // covariance entries within three standard errors
    let n = draws as f64;
    let entries = [
        (acc[0].variance(), cov_expect[(0, 0)], (2.0f64).sqrt() * cov_expect[(0, 0)]),
        (acc[1].variance(), cov_expect[(1, 1)], (2.0f64).sqrt() * cov_expect[(1, 1)]),
        (
            cross.mean(),
            cov_expect[(0, 1)],
            (cov_expect[(0, 0)] * cov_expect[(1, 1)] + cov_expect[(0, 1)].powi(2)).sqrt(),
        ),
    ];
    for (got, want, sd) in entries {
        let dev = (got - want).abs();
        let tol = 3.0 * sd / n.sqrt();
        passed &= dev <= tol;
        detail.push_str(&format!("cov dev {dev:.2e} (3se {tol:.2e}); "));
    }

    // two half steps match one full step in first and second moments
    let half = fs.transition_kernel(0.5).unwrap();
    let mut acc2 = [Accumulator::default(), Accumulator::default()];
    let mut rng2 = stream(1044, &[]);
    for _ in 0..draws {
        let mid = half.step(&x, &mut rng2);
        let y = half.step(&mid, &mut rng2);
        acc2[0].push(y[0]);
        acc2[1].push(y[1]);
    }
    for i in 0..2 {
        let dev = (acc2[i].mean() - acc[i].mean()).abs();
        let tol = 3.0 * (acc[i].stderr() + acc2[i].stderr());
        passed &= dev <= tol;
        let vdev = (acc2[i].variance() - acc[i].variance()).abs();
        let vtol = 3.0 * (2.0f64).sqrt() * (acc[i].variance() + acc2[i].variance()) / n.sqrt();
        passed &= vdev <= vtol;
        detail.push_str(&format!("chain{i} mean dev {dev:.2e}, var dev {vdev:.2e}; "));
    }

    passed &= started.elapsed().as_secs_f64() < 30.0;
    report(4, "transition sampler fidelity", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn acceptance_05_complement_measure_estimator() {
    let started = Instant::now();
    let mut passed = true;
    let mut detail = String::new();
    let params = CriterionParams {
        mu: 0.5,
        kmax: 10,
        samples_per_k: 100_000,
        seed: 505,
    };

    // full-space closed form for k in {1, 3, 5} on both operators
    for op in [OuOperator::heat(2), OuOperator::kolmogorov()] {
        let fs = FundamentalSolution::new(op).unwrap();
        let n = fs.operator().dim();
        let empty = Domain::new(Shape::Empty { dim: n }, "empty").unwrap();
        let x0 = DVector::zeros(n);
        for k in [1usize, 3, 5] {
            let est = criterion::complement_measure(&fs, &empty, &x0, &params, k).unwrap();
            let closed = criterion::full_space_measure(&fs, params.mu, k);
            let dev = (est.value - closed).abs();
            let tol = 3.0 * est.stderr + 1e-12 * closed;
            passed &= dev <= tol;
            if k == 1 {
                detail.push_str(&format!("full-space n={n} dev {:.2e} (tol {:.2e}); ", dev, tol));
            }
        }
    }

    // the full space as domain has empty complement: exactly zero
    let fs2 = FundamentalSolution::new(OuOperator::heat(2)).unwrap();
    let full = Domain::new(Shape::Full { dim: 2 }, "full").unwrap();
    let zero =
        criterion::complement_measure(&fs2, &full, &DVector::zeros(2), &params, 3).unwrap();
    passed &= zero.value == 0.0 && zero.stderr == 0.0;
    detail.push_str(&format!("full-domain value {:.1e}; ", zero.value));

    // nested-domain monotonicity under a common seed
    let small = Domain::new(Shape::ball(&[0.0, 0.0], 0.5), "small").unwrap();
    let big = Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "big").unwrap();
    let x0 = DVector::from_column_slice(&[0.5, 0.0]);
    for k in 1..=6 {
        let a = criterion::complement_measure(&fs2, &small, &x0, &params, k).unwrap();
        let b = criterion::complement_measure(&fs2, &big, &x0, &params, k).unwrap();
        passed &= a.value >= b.value - 3.0 * (a.stderr + b.stderr);
    }
    detail.push_str("nested monotone; ");

    // scaling bound on every computed k, exterior-ball domain
    let kfs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
    let ball = Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "ball").unwrap();
    let bx0 = DVector::from_column_slice(&[1.0, 0.0]);
    let bound = criterion::bound_check(&kfs, &ball, &bx0, &params).unwrap();
    passed &= bound.all_within_bound && bound.tail_decreasing;
    detail.push_str(&format!(
        "bound ok {} tail decreasing {}",
        bound.all_within_bound, bound.tail_decreasing
    ));

    passed &= started.elapsed().as_secs_f64() < 300.0;
    report(5, "complement measure estimator", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn acceptance_06_dirichlet_solver_oracles() {
    let started = Instant::now();
    let mut passed = true;
    let mut detail = String::new();
    let cfg = SolverConfig {
        dt_base: 5e-4,
        dt_min: 1e-8,
        max_steps: 400_000,
        paths: 10_000,
        seed: 606,
        shrink_factor: 0.5,
    };

    // constants are reproduced exactly
    let kfs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
    let box2 = Domain::new(Shape::cube(-1.0, 1.0, 2), "box").unwrap();
    let c = solver::solve_stationary(
        &kfs,
        &box2,
        &|_: &[f64]| 7.25,
        &DVector::from_column_slice(&[0.1, 0.6]),
        &cfg,
    )
    .unwrap();
    passed &= c.value == 7.25 && c.stderr == 0.0;
    detail.push_str("constants exact; ");

    // the first coordinate is a martingale of the degenerate diffusion
    let x_start = DVector::from_column_slice(&[0.3, -0.2]);
    let est = solver::solve_stationary(&kfs, &box2, &|x: &[f64]| x[0], &x_start, &cfg).unwrap();
    let dev = (est.value - 0.3).abs();
    let tol = 3.0 * est.stderr;
    passed &= dev <= tol && est.reliable;
    detail.push_str(&format!("coordinate dev {dev:.2e} (3se {tol:.2e}); "));

    // plane harmonic oracle on an annulus
    let hfs = FundamentalSolution::new(OuOperator::heat(2)).unwrap();
    let annulus = Domain::new(
        Shape::Intersect {
            children: vec![
                Shape::ball(&[0.0, 0.0], 2.0),
                Shape::Complement {
                    children: vec![Shape::ball(&[0.0, 0.0], 0.5)],
                },
            ],
        },
        "annulus",
    )
    .unwrap();
    let log_phi = |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt().ln();
    let xa = DVector::from_column_slice(&[1.1, 0.3]);
    let est = solver::solve_stationary(&hfs, &annulus, &log_phi, &xa, &cfg).unwrap();
    let want = log_phi(xa.as_slice());
    let dev = (est.value - want).abs();
    let tol = 3.0 * est.stderr + 1e-3;
    passed &= dev <= tol;
    detail.push_str(&format!("log-harmonic dev {dev:.2e} (tol {tol:.2e}); "));

    // caloric polynomial oracle in the cylinder
    let cyl = Cylinder::new(Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "ball").unwrap(), 0.0, 1.0)
        .unwrap();
    let caloric = |x: &[f64], t: f64| x[0] * x[0] + 2.0 * t;
    let xc = DVector::from_column_slice(&[0.2, -0.3]);
    let est = solver::solve_evolution(&hfs, &cyl, &caloric, &xc, 0.6, &cfg).unwrap();
    let want = 0.2f64 * 0.2 + 2.0 * 0.6;
    let dev = (est.value - want).abs();
    let tol = 3.0 * est.stderr + 1e-3;
    passed &= dev <= tol;
    detail.push_str(&format!("caloric dev {dev:.2e} (tol {tol:.2e}); "));

    // maximum principle with localization slack
    let phi = |x: &[f64]| x[0].sin() + 0.5 * x[1];
    let est = solver::solve_stationary(
        &hfs,
        &Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "ball").unwrap(),
        &phi,
        &DVector::from_column_slice(&[0.1, 0.2]),
        &cfg,
    )
    .unwrap();
    let lo = -(1.0f64.sin()) - 0.5 - 1e-2;
    let hi = 1.0f64.sin() + 0.5 + 1e-2;
    passed &= est.value >= lo && est.value <= hi;
    detail.push_str("range respected");

    passed &= started.elapsed().as_secs_f64() < 300.0;
    report(6, "Dirichlet solver oracles", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn acceptance_07_monotonicity_in_time() {
    let started = Instant::now();
    let cfg = SolverConfig {
        dt_base: 5e-4,
        dt_min: 1e-8,
        max_steps: 400_000,
        paths: 3_000,
        seed: 707,
        shrink_factor: 0.5,
    };
    let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.09).collect();

    // heat cylinder with an exponential-decay profile, maximum on the bottom
    let hfs = FundamentalSolution::new(OuOperator::heat(2)).unwrap();
    let ball = Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "ball").unwrap();
    let cyl1 = Cylinder::new(ball, 0.0, 1.0).unwrap();
    let data1 = |_x: &[f64], t: f64| (-t).exp();
    let r1 = solver::monotone_solution_test(
        &hfs,
        &cyl1,
        &data1,
        &DVector::from_column_slice(&[0.0, 0.0]),
        &grid,
        &cfg,
    )
    .unwrap();

    // degenerate operator on a box cylinder with the step-decreasing barrier
    // data: ceiling up to delta, the barrier after
    let kfs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
    let box2 = Domain::new(Shape::cube(-1.0, 1.0, 2), "box").unwrap();
    let cyl2 = Cylinder::new(box2.clone(), 0.0, 1.0).unwrap();
    let b = Barrier::for_operator(kfs.operator(), DVector::zeros(2), box2.clone()).unwrap();
    let ceiling = barrier::numeric_sup(&box2, |x| b.eval(x), 65, 7).unwrap();
    let hat = barrier::step_decreasing_data(move |x: &[f64]| b.eval(x), ceiling, 0.05);
    let r2 = solver::monotone_solution_test(
        &kfs,
        &cyl2,
        &hat,
        &DVector::from_column_slice(&[0.2, 0.1]),
        &grid,
        &cfg,
    )
    .unwrap();

    let passed =
        r1.passed && r2.passed && started.elapsed().as_secs_f64() < 600.0;
    report(
        7,
        "solution monotone in time",
        passed,
        &format!(
            "heat violations {:?}, degenerate violations {:?}",
            r1.violations, r2.violations
        ),
        started,
    );
    assert!(passed, "{:?} / {:?}", r1, r2);
}

#[test]
fn acceptance_08_barrier_verification() {
    let started = Instant::now();
    let mut passed = true;
    let mut detail = String::new();
    let grid = GridConfig {
        per_axis: 64,
        random_samples: 10_000,
        seed: 808,
    };
    for (name, op) in suite_operators() {
        let n = op.dim();
        let region = Domain::new(Shape::cube(-1.0, 1.0, n), "box").unwrap();
        let b = Barrier::for_operator(&op, DVector::zeros(n), region).unwrap();
        let r = barrier::verify_strict_superharmonicity(&b, &op, &grid).unwrap();
        passed &= r.passed;
        detail.push_str(&format!("{name} min {:.3e}; ", r.min_value));
    }
    // negative control: a tiny slope fails where the drift term can
    // dominate the diffusion trace (unit box for the planar operator, a
    // wider box for the three-dimensional one)
    for (op, half_width) in [(OuOperator::kolmogorov(), 1.0), (OuOperator::p21(), 2.0)] {
        let n = op.dim();
        let region = Domain::new(Shape::cube(-half_width, half_width, n), "box").unwrap();
        let b = Barrier::for_operator(&op, DVector::zeros(n), region)
            .unwrap()
            .with_lambda(1e-3);
        let r = barrier::verify_strict_superharmonicity(&b, &op, &grid).unwrap();
        passed &= !r.passed;
    }
    detail.push_str("tiny-slope control fails as expected");
    passed &= started.elapsed().as_secs_f64() < 60.0;
    report(8, "barrier construction", passed, &detail, started);
    assert!(passed, "{detail}");
}

#[test]
fn acceptance_09_equivalence_suite() {
    let started = Instant::now();
    let specs = harness::gold_suite(4_000, 20_000, 10, 909);
    let table = harness::run_suite(&specs).unwrap();
    let sufficiency = harness::check_sufficiency(&table);

    let agree = table.all_agree();
    let forbidden = table.forbidden_count();
    let mismatches = table.expectation_mismatches().len();
    // the known-verdict heat cases must commit, not abstain
    let committed = table
        .rows
        .iter()
        .filter(|r| r.expected != ExpectedVerdict::Unknown)
        .all(|r| r.probes_agree == Some(true));

    for r in &table.rows {
        println!(
            "    {}: x0 {:?} stationary {:?} evolution {:?} criterion {:?}",
            r.case, r.x0, r.stationary, r.evolution, r.criterion
        );
    }

    let passed = agree
        && forbidden == 0
        && mismatches == 0
        && committed
        && sufficiency.passed
        && started.elapsed().as_secs_f64() < 1800.0;
    report(
        9,
        "lateral/base equivalence",
        passed,
        &format!(
            "agree {agree}, forbidden {forbidden}, expectation mismatches {mismatches}, committed {committed}"
        ),
        started,
    );
    assert!(passed);
}

#[test]
fn acceptance_10_determinism_across_worker_counts() {
    let started = Instant::now();
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();

    // representatives of criteria 5 through 9, serialized and byte-compared
    let run_all = || -> String {
        let mut out = String::new();

        let kfs = FundamentalSolution::new(OuOperator::kolmogorov()).unwrap();
        let ball = Domain::new(Shape::ball(&[0.0, 0.0], 1.0), "ball").unwrap();
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let params = CriterionParams {
            mu: 0.5,
            kmax: 5,
            samples_per_k: 20_000,
            seed: 42,
        };
        let crit = criterion::evaluate(&kfs, &ball, &x0, &params).unwrap();
        out.push_str(&serde_json::to_string(&crit).unwrap());

        let cfg = SolverConfig {
            dt_base: 1e-3,
            dt_min: 1e-7,
            max_steps: 200_000,
            paths: 2_000,
            seed: 42,
            shrink_factor: 0.5,
        };
        let box2 = Domain::new(Shape::cube(-1.0, 1.0, 2), "box").unwrap();
        let est = solver::solve_stationary(
            &kfs,
            &box2,
            &|x: &[f64]| x[0],
            &DVector::from_column_slice(&[0.2, 0.0]),
            &cfg,
        )
        .unwrap();
        out.push_str(&serde_json::to_string(&est).unwrap());

        let hfs = FundamentalSolution::new(OuOperator::heat(2)).unwrap();
        let cyl = Cylinder::new(ball.clone(), 0.0, 1.0).unwrap();
        let grid = [0.2, 0.4, 0.6, 0.8];
        let mono = solver::monotone_solution_test(
            &hfs,
            &cyl,
            &|_x: &[f64], t: f64| (-t).exp(),
            &DVector::from_column_slice(&[0.0, 0.0]),
            &grid,
            &cfg,
        )
        .unwrap();
        out.push_str(&serde_json::to_string(&mono).unwrap());

        let b = Barrier::for_operator(kfs.operator(), DVector::zeros(2), box2).unwrap();
        let verify = barrier::verify_strict_superharmonicity(
            &b,
            kfs.operator(),
            &GridConfig {
                per_axis: 24,
                random_samples: 2_000,
                seed: 42,
            },
        )
        .unwrap();
        out.push_str(&serde_json::to_string(&verify).unwrap());

        let mut specs = harness::gold_suite(600, 4_000, 4, 42);
        specs.truncate(2);
        let table = harness::run_suite(&specs).unwrap();
        out.push_str(&serde_json::to_string(&table).unwrap());
        out
    };

    let a = pool1.install(run_all);
    let b = pool4.install(run_all);
    let passed = a == b;
    report(
        10,
        "determinism across worker counts",
        passed,
        &format!("payload bytes {} identical {}", a.len(), passed),
        started,
    );
    assert!(passed);
}
