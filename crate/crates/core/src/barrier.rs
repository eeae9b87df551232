//! Constructive strictly-superharmonic witness: a smooth function vanishing
//! at one point, positive elsewhere, with `L0 h > 0` on a bounded working
//! set once the slope parameter is large enough; plus the time-independent
//! cylinder lift and the step-decreasing boundary data built from it.
//!
//! The scalar profile is `e(s) = exp(sqrt(1 + s^2)) - exp(1)`, whose second
//! derivative is bounded below by exp(phi)/(2 sqrt 2); that lower bound is
//! what drives the slope selection.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{KolmoError, Result};
use crate::operator::OuOperator;
use crate::rng::{label, stream};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Scalar profile e(s) and its derivatives.
pub fn profile(s: f64) -> f64 {
    ((1.0 + s * s).sqrt()).exp() - 1.0f64.exp()
}

pub fn profile_d1(s: f64) -> f64 {
    let phi = (1.0 + s * s).sqrt();
    phi.exp() * (s / phi)
}

pub fn profile_d2(s: f64) -> f64 {
    let u = 1.0 + s * s;
    let phi = u.sqrt();
    // phi'^2 + phi'' = s^2/u + u^(-3/2) >= 1/(2 sqrt 2)
    phi.exp() * (s * s / u + u.powf(-1.5))
}

/// Smallest slope, with a factor-two safety margin, making
/// `lambda^2 (alpha/(2 sqrt 2) - beta/lambda) - 2 beta lambda > 0`:
/// `lambda = 12 sqrt(2) beta / alpha`, or 1 when the drift bound is zero.
pub fn select_lambda(alpha_coef: f64, beta_coef: f64) -> Result<f64> {
    if alpha_coef <= 0.0 {
        return Err(KolmoError::domain("alpha coefficient must be positive"));
    }
    if beta_coef < 0.0 {
        return Err(KolmoError::domain("beta coefficient must be nonnegative"));
    }
    if beta_coef == 0.0 {
        Ok(1.0)
    } else {
        Ok(2.0 * 6.0 * SQRT2 * beta_coef / alpha_coef)
    }
}

/// Upper bound for sup over the working set of `sum_j |(Bx)_j|`.
///
/// The function is convex in x, so its maximum over a box sits at a vertex;
/// enumerating the bounding-box vertices over-estimates the supremum over
/// the set itself, which only makes the selected slope larger and the
/// inequality easier.
pub fn drift_bound(op: &OuOperator, region: &Domain) -> Result<f64> {
    let bb = region.bounding_box();
    if !bb.is_bounded() {
        return Err(KolmoError::structural("working set must be bounded"));
    }
    let n = region.dim();
    if n != op.dim() {
        return Err(KolmoError::structural("operator/region dimension mismatch"));
    }
    if n > 24 {
        return Err(KolmoError::structural("vertex enumeration capped at 24 dims"));
    }
    let mut best: f64 = 0.0;
    for mask in 0..(1usize << n) {
        let v = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                if mask >> i & 1 == 1 {
                    bb.hi[i]
                } else {
                    bb.lo[i]
                }
            }),
        );
        let bx = op.drift(&v);
        best = best.max(bx.iter().map(|t| t.abs()).sum());
    }
    Ok(best)
}

/// The witness: vanishes at `center`, strictly positive elsewhere.
#[derive(Clone, Debug)]
pub struct Barrier {
    pub center: DVector<f64>,
    pub lambda: f64,
    pub alpha_coef: f64,
    pub beta_coef: f64,
    pub region: Domain,
}

impl Barrier {
    /// Build for an operator over a bounded working set, selecting the slope
    /// from the operator's diffusion floor and drift bound.
    pub fn for_operator(op: &OuOperator, center: DVector<f64>, region: Domain) -> Result<Self> {
        let alpha_coef = op.diffusion()[(0, 0)];
        let beta_coef = drift_bound(op, &region)?;
        let lambda = select_lambda(alpha_coef, beta_coef)?;
        Ok(Barrier {
            center,
            lambda,
            alpha_coef,
            beta_coef,
            region,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// h(x) = e(lambda (x - center)_1) + sum_{j >= 2} (x - center)_j^2.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let w1 = x[0] - self.center[0];
        let mut v = profile(self.lambda * w1);
        for j in 1..x.len() {
            let wj = x[j] - self.center[j];
            v += wj * wj;
        }
        v
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let n = x.len();
        let mut g = DVector::zeros(n);
        g[0] = self.lambda * profile_d1(self.lambda * (x[0] - self.center[0]));
        for j in 1..n {
            g[j] = 2.0 * (x[j] - self.center[j]);
        }
        g
    }

    /// L0 h at x, closed form: the Hessian of h is diagonal with entries
    /// (lambda^2 e'', 2, ..., 2).
    pub fn apply_operator(&self, op: &OuOperator, x: &[f64]) -> f64 {
        let a = op.diffusion();
        let w1 = x[0] - self.center[0];
        let mut v = a[(0, 0)] * self.lambda * self.lambda * profile_d2(self.lambda * w1);
        for j in 1..x.len() {
            v += 2.0 * a[(j, j)];
        }
        let bx = op.drift(&DVector::from_column_slice(x));
        v += bx[0] * self.lambda * profile_d1(self.lambda * w1);
        for j in 1..x.len() {
            v += bx[j] * 2.0 * (x[j] - self.center[j]);
        }
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub per_axis: usize,
    pub random_samples: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            per_axis: 64,
            random_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierVerifyReport {
    pub lambda: f64,
    pub alpha_coef: f64,
    pub beta_coef: f64,
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub points_checked: u64,
    pub nonpositive_count: u64,
    pub passed: bool,
}

/// Dense evaluation of L0 h over the working set: grid over the bounding box
/// intersected with the set, plus random interior samples. Evidence, not
/// proof; the report carries the minimum and where it occurred.
pub fn verify_strict_superharmonicity(
    barrier: &Barrier,
    op: &OuOperator,
    grid: &GridConfig,
) -> Result<BarrierVerifyReport> {
    let bb = barrier.region.bounding_box().clone();
    if !bb.is_bounded() {
        return Err(KolmoError::structural("working set must be bounded"));
    }
    let n = barrier.region.dim();
    // keep the grid at desk scale for higher dimensions
    let per_axis = if (grid.per_axis as f64).powi(n as i32) > 3.0e5 {
        (3.0e5f64.powf(1.0 / n as f64)).floor().max(2.0) as usize
    } else {
        grid.per_axis
    };

    let mut min_value = f64::INFINITY;
    let mut argmin = vec![0.0; n];
    let mut checked = 0u64;
    let mut nonpositive = 0u64;

    let mut consider = |x: &[f64], min_value: &mut f64, argmin: &mut Vec<f64>| {
        let v = barrier.apply_operator(op, x);
        checked += 1;
        if v <= 0.0 {
            nonpositive += 1;
        }
        if v < *min_value {
            *min_value = v;
            argmin.copy_from_slice(x);
        }
    };

    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    'grid: loop {
        for i in 0..n {
            let f = if per_axis == 1 {
                0.5
            } else {
                idx[i] as f64 / (per_axis - 1) as f64
            };
            x[i] = bb.lo[i] + f * (bb.hi[i] - bb.lo[i]);
        }
        if barrier.region.contains(&x) {
            consider(&x, &mut min_value, &mut argmin);
        }
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

    let mut rng = stream(grid.seed, &[label("barrier-grid")]);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < grid.random_samples && attempts < grid.random_samples * 50 {
        attempts += 1;
        for i in 0..n {
            x[i] = rand::Rng::random_range(&mut rng, bb.lo[i]..bb.hi[i]);
        }
        if barrier.region.contains(&x) {
            accepted += 1;
            consider(&x, &mut min_value, &mut argmin);
        }
    }

    if checked == 0 {
        return Err(KolmoError::numerical("no sample points landed in the working set"));
    }

    Ok(BarrierVerifyReport {
        lambda: barrier.lambda,
        alpha_coef: barrier.alpha_coef,
        beta_coef: barrier.beta_coef,
        passed: min_value > 0.0,
        min_value,
        argmin,
        points_checked: checked,
        nonpositive_count: nonpositive,
    })
}

/// Time-independent lift of a stationary function to the cylinder.
pub fn lift_to_cylinder<F>(phi: F) -> impl Fn(&[f64], f64) -> f64 + Sync
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    move |x, _t| phi(x)
}

/// Numerical supremum of `h` over the closure of the domain: bounding-box
/// grid; a point counts when it, or its slight pull toward the box center
/// (which recovers boundary and corner points of the closure), lies in the
/// set. Evidence-grade, like the rest of the grid checks.
pub fn numeric_sup<F>(domain: &Domain, h: F, per_axis: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let bb = domain.bounding_box().clone();
    if !bb.is_bounded() {
        return Err(KolmoError::structural("sup needs a bounded domain"));
    }
    let n = domain.dim();
    let center = bb.center();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    let mut pulled = vec![0.0f64; n];
    'grid: loop {
        for i in 0..n {
            let f = if per_axis == 1 {
                0.5
            } else {
                idx[i] as f64 / (per_axis - 1) as f64
            };
            x[i] = bb.lo[i] + f * (bb.hi[i] - bb.lo[i]);
        }
        let mut hit = domain.contains(&x);
        if !hit {
            for pull in [1e-9, 1e-6, 1e-3] {
                for i in 0..n {
                    pulled[i] = x[i] + (center[i] - x[i]) * pull;
                }
                if domain.contains(&pulled) {
                    hit = true;
                    break;
                }
            }
        }
        if hit {
            best = best.max(h(&x));
        }
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
    let mut rng = stream(seed, &[label("sup")]);
    for _ in 0..20_000 {
        for i in 0..n {
            x[i] = rand::Rng::random_range(&mut rng, bb.lo[i]..bb.hi[i]);
        }
        if domain.contains(&x) {
            best = best.max(h(&x));
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(KolmoError::numerical("no points of the domain sampled"))
    }
}

/// Boundary data equal to `ceiling` up to time `delta` and to `h(x)` after:
/// decreasing in t with the maximum attained on the bottom slice whenever
/// `ceiling >= sup h`.
pub fn step_decreasing_data<F>(
    h: F,
    ceiling: f64,
    delta: f64,
) -> impl Fn(&[f64], f64) -> f64 + Sync
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    move |x, t| if t <= delta { ceiling } else { h(x) }
}
