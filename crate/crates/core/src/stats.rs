//! Small statistics helpers shared by the Monte Carlo modules.

/// Two-sided 95% normal quantile used for all reported confidence intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Online mean/variance accumulator (Welford).
///
/// Combination is deterministic when applied in a fixed order, which the
/// callers guarantee by reducing over batch indices.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let delta = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n > 0 {
            (self.variance() / self.n as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Least-squares slope of `y` against `x`; `None` if degenerate.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Gamma function at integer or half-integer arguments, exact recurrences.
///
/// Arguments arising here are n/2 + 1 for a space dimension n, so this is all
/// the closed-form volume constants need.
pub fn gamma_half_int(twice: u64) -> f64 {
    // gamma(twice / 2)
    assert!(twice >= 1, "gamma argument must be positive");
    if twice.is_multiple_of(2) {
        let m = twice / 2; // gamma(m) = (m-1)!
        (1..m).map(|i| i as f64).product()
    } else {
        // gamma(1/2 + j) = (2j)! sqrt(pi) / (4^j j!)
        let j = (twice - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 0..j {
            v *= 0.5 + i as f64;
        }
        v
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half_int(n as u64 + 2)
}
