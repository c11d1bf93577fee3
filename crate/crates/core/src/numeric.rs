//! Log-domain accumulation and small numeric helpers shared by the engines.

/// Streaming log-sum-exp accumulator.
///
/// Tracks a running maximum and a sum rescaled to it, so `value()` returns
/// `ln(sum_i exp(x_i))` without overflow for arbitrarily large magnitudes.
/// Results depend on insertion order only through float rounding, so a fixed
/// chunking plus an in-order `merge` gives bit-identical totals regardless of
/// how many worker threads produced the chunks.
#[derive(Clone, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    /// Adds a term `exp(x)` to the accumulated sum.
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            // Rescale the old sum to the new maximum. exp(max - x) is 0 on
            // the first insertion (max = -inf), which is what we want.
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Folds another accumulator into this one.
    pub fn merge(&mut self, other: &LogSumExp) {
        if other.sum == 0.0 {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    /// `ln(sum_i exp(x_i))`; negative infinity if nothing was added.
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// `ln C(m, j)` via the log-gamma function; exact enough for m up to 10^6
/// (relative error a few ulp, far below every tolerance used downstream).
pub fn log_binomial(m: u64, j: u64) -> f64 {
    debug_assert!(j <= m);
    if j == 0 || j == m {
        return 0.0;
    }
    let m = m as f64;
    let j = j as f64;
    libm::lgamma(m + 1.0) - libm::lgamma(j + 1.0) - libm::lgamma(m - j + 1.0)
}

/// Standard logistic function, evaluated tail-stably.
pub fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Poisson(lambda) pmf for j = 0..=upper, computed by the stable recurrence
/// `p_{j+1} = p_j * lambda / (j+1)`.
pub fn poisson_pmf(lambda: f64, upper: usize) -> Vec<f64> {
    debug_assert!(lambda >= 0.0);
    let mut pmf = Vec::with_capacity(upper + 1);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for j in 0..upper {
        p *= lambda / (j as f64 + 1.0);
        pmf.push(p);
    }
    pmf
}
