//! The explicit fundamental solution of `L = div(A grad) + <Bx, grad> - d_t`
//! on the homogeneous group, its anisotropic norm, a finite-difference
//! residual check, and the exact Gaussian transition sampler of the
//! associated diffusion.
//!
//! For t > 0 the kernel is the Gaussian density in x with covariance 2 C(t):
//!
//! ```text
//! gamma(x, t) = c_Q * t^(-Q/2) * exp(-|D_{1/sqrt t}(x)|_C^2 / 4),
//! c_Q = (4 pi)^(-N/2) det C(1)^(-1/2).
//! ```
//!
//! The exponent -Q/2 is forced by dilation homogeneity of degree -Q together
//! with det C(t) = det C(1) * t^Q; it also makes gamma integrate to one in x.
//!
//! Drift convention: the diffusion the Dirichlet solvers simulate has
//! generator equal to the spatial part of `L`, i.e. drift `+Bx`, so a
//! transition over dt has mean `exp(dt B) x` and covariance `2 M(dt)` with
//! `M(dt) = integral_0^dt exp(uB) A exp(uB)^T du`. Its density is the kernel
//! evaluated on the group difference: `y -> gamma(x - E(dt) y, dt)`. This is
//! pinned by `transition_density_identity` in the tests and by the residual
//! check, whose sign-flipped variant must fail.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KolmoError, Result};
use crate::operator::{GroupPoint, OuOperator};

/// Eigenvalue clipping floor for near-semidefinite sampling covariances,
/// relative to the largest eigenvalue. Anything below the negative of this
/// is treated as a factorization failure.
const COV_CLIP_REL: f64 = 1e-12;

/// The kernel context: operator plus everything derived from C(1).
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    op: OuOperator,
    c1: DMatrix<f64>,
    c1_inv: DMatrix<f64>,
    det_c1: f64,
    norm_const: f64,
    q: u32,
}

/// Precomputed one-step transition: `x -> mean_map * x + noise_factor * z`
/// with standard normal z.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    pub dt: f64,
    pub mean_map: DMatrix<f64>,
    pub noise_factor: DMatrix<f64>,
}

impl TransitionKernel {
    pub fn step<R: Rng>(&self, x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let n = x.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.mean_map * x + &self.noise_factor * z
    }
}

/// Symmetric square root by eigendecomposition, clipping tiny negative
/// eigenvalues; errors out when the matrix is genuinely indefinite.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.amax();
    let floor = -COV_CLIP_REL * max_eig.max(f64::MIN_POSITIVE);
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(KolmoError::numerical(format!(
                "covariance factorization failed: eigenvalue {v:.3e} below {floor:.3e}"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let mut out = eig.eigenvectors.clone();
    for (j, s) in vals.iter().enumerate() {
        out.column_mut(j).scale_mut(*s);
    }
    Ok(out)
}

impl FundamentalSolution {
    pub fn new(op: OuOperator) -> Result<Self> {
        let n = op.dim();
        let c1 = op.covariance(1.0)?;
        let chol = c1.clone().cholesky().ok_or_else(|| {
            KolmoError::numerical("C(1) is not positive definite; operator invalid".to_string())
        })?;
        let det_c1 = chol.determinant();
        let c1_inv = chol.inverse();
        let norm_const =
            (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) / det_c1.sqrt();
        let q = op.homogeneous_dimension().space;
        Ok(FundamentalSolution {
            op,
            c1,
            c1_inv,
            det_c1,
            norm_const,
            q,
        })
    }

    pub fn operator(&self) -> &OuOperator {
        &self.op
    }

    pub fn covariance_at_one(&self) -> &DMatrix<f64> {
        &self.c1
    }

    pub fn det_c1(&self) -> f64 {
        self.det_c1
    }

    /// The normalization constant c_Q.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn homogeneous_dim(&self) -> u32 {
        self.q
    }

    /// Squared anisotropic norm |y|_C^2 = <C(1)^{-1} y, y>.
    pub fn norm_sq(&self, y: &DVector<f64>) -> f64 {
        (&self.c1_inv * y).dot(y)
    }

    /// Kernel value; 0 for t <= 0 by the support convention.
    pub fn eval(&self, x: &DVector<f64>, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let scaled = self.op.dilate_space(1.0 / t.sqrt(), x);
        self.norm_const * t.powf(-(self.q as f64) / 2.0) * (-0.25 * self.norm_sq(&scaled)).exp()
    }

    /// log of the kernel; -inf on the vanishing half.
    pub fn log_eval(&self, x: &DVector<f64>, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let scaled = self.op.dilate_space(1.0 / t.sqrt(), x);
        self.norm_const.ln() - 0.5 * self.q as f64 * t.ln() - 0.25 * self.norm_sq(&scaled)
    }

    /// Two-point kernel on the group difference; vanishes unless z0 is
    /// strictly later than z.
    pub fn eval_pair(&self, z0: &GroupPoint, z: &GroupPoint) -> f64 {
        let d = self.op.difference(z0, z);
        self.eval(&d.x, d.t)
    }

    /// |L gamma| at z by central differences with step h, using the
    /// operator's own drift orientation.
    pub fn pde_residual(&self, z: &GroupPoint, h: f64) -> Result<f64> {
        self.pde_residual_with_drift(z, h, 1.0)
    }

    /// Residual with the drift term scaled by `drift_sign`; the flipped sign
    /// serves as a negative control.
    ///
    /// Points too close to the pole are refused: finite differences are
    /// meaningless where the kernel is not resolved.
    pub fn pde_residual_with_drift(&self, z: &GroupPoint, h: f64, drift_sign: f64) -> Result<f64> {
        if h <= 0.0 {
            return Err(KolmoError::domain("finite-difference step must be > 0"));
        }
        if z.t <= 0.0 {
            return Err(KolmoError::domain("residual check needs t > 0"));
        }
        if z.t < 10.0 * h {
            return Err(KolmoError::domain(format!(
                "t = {} too close to the support edge for step {h}",
                z.t
            )));
        }
        let scaled = self.op.dilate_space(1.0 / z.t.sqrt(), &z.x);
        if self.norm_sq(&scaled) < 1.0 {
            return Err(KolmoError::domain(
                "point too close to the kernel pole for finite differences",
            ));
        }

        let n = self.op.dim();
        let f0 = self.eval(&z.x, z.t);
        let a = self.op.diffusion();

        let shift = |x: &DVector<f64>, i: usize, d: f64| {
            let mut y = x.clone();
            y[i] += d;
            y
        };

        // second derivatives
        let mut second = 0.0;
        for i in 0..n {
            for j in 0..n {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                let dij = if i == j {
                    let fp = self.eval(&shift(&z.x, i, h), z.t);
                    let fm = self.eval(&shift(&z.x, i, -h), z.t);
                    (fp - 2.0 * f0 + fm) / (h * h)
                } else {
                    let fpp = self.eval(&shift(&shift(&z.x, i, h), j, h), z.t);
                    let fpm = self.eval(&shift(&shift(&z.x, i, h), j, -h), z.t);
                    let fmp = self.eval(&shift(&shift(&z.x, i, -h), j, h), z.t);
                    let fmm = self.eval(&shift(&shift(&z.x, i, -h), j, -h), z.t);
                    (fpp - fpm - fmp + fmm) / (4.0 * h * h)
                };
                second += aij * dij;
            }
        }

        // drift term <Bx, grad>
        let bx = self.op.drift(&z.x);
        let mut first = 0.0;
        for i in 0..n {
            if bx[i] == 0.0 {
                continue;
            }
            let fp = self.eval(&shift(&z.x, i, h), z.t);
            let fm = self.eval(&shift(&z.x, i, -h), z.t);
            first += bx[i] * (fp - fm) / (2.0 * h);
        }

        // time derivative
        let ft_p = self.eval(&z.x, z.t + h);
        let ft_m = self.eval(&z.x, z.t - h);
        let dt = (ft_p - ft_m) / (2.0 * h);

        Ok((second + drift_sign * first - dt).abs())
    }

    /// Forward transition map over dt: mean exp(dt B) x, covariance 2 M(dt).
    pub fn transition_kernel(&self, dt: f64) -> Result<TransitionKernel> {
        if dt <= 0.0 {
            return Err(KolmoError::domain(format!(
                "transition step must be > 0, got {dt}"
            )));
        }
        let mean_map = self.op.exp_minus_b(-dt); // exp(+dt B)
        let cov = self.op.flow_gramian(dt, 1.0)? * 2.0;
        let noise_factor = symmetric_sqrt(&cov)?;
        Ok(TransitionKernel {
            dt,
            mean_map,
            noise_factor,
        })
    }

    /// One exact draw of the diffusion started at x over time dt.
    pub fn sample_transition<R: Rng>(
        &self,
        x: &DVector<f64>,
        dt: f64,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        Ok(self.transition_kernel(dt)?.step(x, rng))
    }

    /// Density of `sample_transition(x, dt)` at y, expressed through the
    /// kernel on the group difference.
    pub fn transition_density(&self, x: &DVector<f64>, dt: f64, y: &DVector<f64>) -> f64 {
        let arg = x - self.op.exp_minus_b(dt) * y;
        self.eval(&arg, dt)
    }
}
