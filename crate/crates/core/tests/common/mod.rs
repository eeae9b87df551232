#![allow(dead_code)]

//! Shared oracles for the integration suites. Everything here is an
//! independent route to the quantities under test and must stay free of the
//! implementation paths it checks.

use nalgebra::DVector;
use rand::Rng;

use kolmo::domain::Domain;
use kolmo::kernel::FundamentalSolution;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// recurrence-evaluated polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-product quadrature of the kernel's spatial integral at fixed t,
/// over a per-axis box of +-8 marginal standard deviations.
pub fn kernel_mass_quadrature(fs: &FundamentalSolution, t: f64, per_axis: usize) -> f64 {
    let n = fs.operator().dim();
    let cov = fs.operator().flow_gramian(t, -1.0).unwrap() * 2.0;
    let half: Vec<f64> = (0..n).map(|i| 8.0 * cov[(i, i)].sqrt()).collect();
    let (nodes, weights) = gauss_legendre(per_axis);

    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    let mut x = DVector::zeros(n);
    'grid: loop {
        let mut w = 1.0;
        for i in 0..n {
            x[i] = half[i] * nodes[idx[i]];
            w *= half[i] * weights[idx[i]];
        }
        total += w * fs.eval(&x, t);
        let mut i = 0;
        loop {
            if i == n {
                break 'grid;
            }
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
    total
}

/// Brute-force rejection estimate of the level-k complement measure for
/// drift-free operators, sampled over the un-substituted region: tau uniform
/// in (0, R_k], y uniform in the bounding box of the widest section. The
/// section condition and the membership test are evaluated directly.
pub fn rejection_measure_drift_free(
    fs: &FundamentalSolution,
    domain: &Domain,
    x0: &DVector<f64>,
    mu: f64,
    k: usize,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let op = fs.operator();
    assert!(op.drift_matrix().abs().max() == 0.0, "oracle assumes B = 0");
    let n = op.dim();
    let q = fs.homogeneous_dim() as f64;
    let rk = kolmo::criterion::level_radius(fs, mu, k);
    // max over tau of 2 Q tau log(R/tau) is at tau = R/e
    let r_max = (2.0 * q * rk / std::f64::consts::E).sqrt();
    let vol_box = rk * (2.0 * r_max).powi(n as i32);

    let mut rng = kolmo::rng::stream(seed, &[0xB0]);
    let mut hits = 0u64;
    for _ in 0..samples {
        let tau: f64 = rng.random_range(0.0..rk);
        if tau == 0.0 {
            continue;
        }
        let y = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-r_max..r_max)));
        // |D_{1/sqrt tau} y|_C^2 = |y|^2 / tau for the drift-free isotropic case
        if y.norm_squared() / tau >= 2.0 * q * (rk / tau).ln() {
            continue;
        }
        let w = x0 - &y; // E(tau) = I
        if !domain.contains(w.as_slice()) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let est = vol_box * p;
    let se = vol_box * (p * (1.0 - p) / samples as f64).sqrt();
    (est, se)
}
