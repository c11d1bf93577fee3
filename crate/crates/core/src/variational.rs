//! Mean-field (variational) analysis of the undirected edge + p-star model:
//! the Bernoulli entropy, the scalar fixed point, the variational value
//! L_n = sup_x { a b1 x + a b2 x^p - I(x)/2 }, rigorous (up-to-constants)
//! gap bounds for the mean-field approximation of (log Z)/n^2, and the
//! independent-edge baseline.
//!
//! The core functions take plain scalars (beta1, beta2, p, alpha); the
//! `*_model` wrappers extract those from a [`ModelSpec`] at a given n
//! (which also makes per-statistic schedules work: the products
//! alpha*beta_p are all that matter).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::StatShape;
use crate::model::{Flavor, ModelSpec};
use crate::numeric::logistic;

/// `I(x) = x ln x + (1-x) ln(1-x)` with the `0 ln 0 := 0` convention.
pub fn entropy_i(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("entropy needs x in [0,1], got {x}")));
    }
    let a = if x == 0.0 { 0.0 } else { x * x.ln() };
    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * (1.0 - x).ln() };
    Ok(a + b)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FixedPoint {
    /// Optimal edge probability x* = sigma(u*).
    pub x_star: f64,
    /// u* = ln(x*/(1-x*)).
    pub log_odds: f64,
    /// Defect of the log-odds equation at the returned point.
    pub residual: f64,
}

fn check_scalar_inputs(beta1: f64, beta2: f64, p: u32, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if p < 2 {
        return Err(Error::InvalidInput("star order p must be >= 2".into()));
    }
    if beta1 > 0.0 || beta2 > 0.0 || !beta1.is_finite() || !beta2.is_finite() {
        return Err(Error::Domain(
            "fixed point requires beta1 <= 0 and beta2 <= 0 (uniqueness)".into(),
        ));
    }
    Ok(())
}

/// Solve the stationarity condition
/// `u = 2 a b1 + 2 a b2 p sigma(u)^(p-1)` for its unique root.
///
/// The left side is the identity and the right side is nonincreasing in u
/// (b2 <= 0), so the root is unique; it lies in
/// `u ∈ [2a(b1 + b2 p), 2 a b1]`. The bisection runs in the shifted
/// coordinate `w = u - 2 a b1 ∈ [2 a b2 p, 0]`: when `|a b1|` is large,
/// forming `u - 2 a b1` directly would lose every significant digit, and
/// the residual could never meet its 1e-12 budget.
pub fn solve_fixed_point(beta1: f64, beta2: f64, p: u32, alpha: f64) -> Result<FixedPoint> {
    check_scalar_inputs(beta1, beta2, p, alpha)?;
    let b1 = alpha * beta1;
    let b2 = alpha * beta2;
    if b2 == 0.0 {
        let u = 2.0 * b1;
        return Ok(FixedPoint { x_star: logistic(u), log_odds: u, residual: 0.0 });
    }
    let g = |w: f64| w - 2.0 * b2 * p as f64 * logistic(2.0 * b1 + w).powi(p as i32 - 1);
    let mut lo = 2.0 * b2 * p as f64;
    let mut hi = 0.0;
    let mut best_w = 0.5 * (lo + hi);
    let mut best_g = g(best_w);
    for _ in 0..500 {
        if best_g.abs() < 1e-13 {
            break;
        }
        if best_g <= 0.0 {
            lo = best_w;
        } else {
            hi = best_w;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            // the bracket has collapsed to adjacent floats; keep the better end
            let (gl, gh) = (g(lo), g(hi));
            let (w, gw) = if gl.abs() <= gh.abs() { (lo, gl) } else { (hi, gh) };
            best_w = w;
            best_g = gw;
            break;
        }
        best_w = mid;
        best_g = g(mid);
    }
    if best_g.abs() > 1e-12 {
        return Err(Error::NonConvergence(format!(
            "fixed-point residual {best_g:e} above 1e-12"
        )));
    }
    let u = 2.0 * b1 + best_w;
    Ok(FixedPoint { x_star: logistic(u), log_odds: u, residual: best_g })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VariationalResult {
    pub x_star: f64,
    pub log_odds: f64,
    #[serde(rename = "L_n")]
    pub l_n: f64,
    /// L_n / e^(2 a b1), the quantity with the sparse limit 1/2.
    #[serde(rename = "ratio_Ln")]
    pub ratio_ln: f64,
    pub residual: f64,
}

/// Evaluate `L_n = sup_x [ a b1 x + a b2 x^p - I(x)/2 ]` at the fixed point.
///
/// At the stationary point the b1 term can be eliminated:
/// `L_n = a b2 (1-p) x^p - ln(1-x)/2`. For x below 1e-8 that reduced form
/// is evaluated through the series `-ln(1-x) = x (1 + x/2 + x^2/3 + ...)`,
/// which keeps both L_n and the normalized ratio fully accurate even when
/// x* is at the 1e-300 scale; otherwise the objective is evaluated
/// directly.
pub fn variational_value(beta1: f64, beta2: f64, p: u32, alpha: f64) -> Result<VariationalResult> {
    let fp = solve_fixed_point(beta1, beta2, p, alpha)?;
    let b1 = alpha * beta1;
    let b2 = alpha * beta2;
    let x = fp.x_star;
    let u = fp.log_odds;
    let w = u - 2.0 * b1;
    let pf = p as f64;

    let (l_n, ratio_ln) = if x < 1e-8 {
        let q = 1.0 + x / 2.0 + x * x / 3.0;
        let inner = b2 * (1.0 - pf) * x.powi(p as i32 - 1) + q / 2.0;
        let l_n = x * inner;
        // x e^(-2 b1) = e^(u - 2 b1) / (1 + e^u) = e^w / (1 + e^u)
        let t1 = w.exp() / (1.0 + u.exp());
        (l_n, t1 * inner)
    } else {
        let l_n = b1 * x + b2 * x.powi(p as i32) - entropy_i(x)? / 2.0;
        (l_n, l_n / (2.0 * b1).exp())
    };

    Ok(VariationalResult {
        x_star: x,
        log_odds: u,
        l_n,
        ratio_ln,
        residual: fp.residual,
    })
}

/// Extract (beta1, beta2, p) with alpha = 1 absorbed into the effective
/// parameters of an edge + p-star model at size n.
pub fn mean_field_scalars(m: &ModelSpec, n: f64) -> Result<(f64, f64, u32)> {
    if m.flavor != Flavor::UndirectedSubgraphs {
        return Err(Error::InvalidInput(
            "mean-field analysis needs an undirected model".into(),
        ));
    }
    m.require_edge_first()?;
    if m.k() > 2 {
        return Err(Error::InvalidInput(
            "mean-field analysis covers edge plus at most one p-star term".into(),
        ));
    }
    let betas = m.effective_params(n)?;
    if m.k() == 1 {
        return Ok((betas[0], 0.0, 2));
    }
    let p = match m.statistics[1].shape() {
        StatShape::Star(p) if p >= 2 => p,
        _ => {
            return Err(Error::InvalidInput(
                "second statistic must be a p-star with p >= 2".into(),
            ))
        }
    };
    Ok((betas[0], betas[1], p))
}

/// [`solve_fixed_point`] with parameters taken from a model at size n.
pub fn solve_fixed_point_model(m: &ModelSpec, n: f64) -> Result<FixedPoint> {
    let (b1, b2, p) = mean_field_scalars(m, n)?;
    solve_fixed_point(b1, b2, p, 1.0)
}

/// [`variational_value`] with parameters taken from a model at size n.
pub fn variational_value_model(m: &ModelSpec, n: f64) -> Result<VariationalResult> {
    let (b1, b2, p) = mean_field_scalars(m, n)?;
    variational_value(b1, b2, p, 1.0)
}

/// Constants in the mean-field gap bounds. The true constants are not
/// known; results carry them so readers can rescale.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundParams {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { c: 1.0, big_c: 1.0 }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.big_c > 0.0) {
            return Err(Error::InvalidInput("bound constants must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapBounds {
    /// Lower bound on (log Z)/n^2 - L_n: `-c B / n`.
    pub lower_gap: f64,
    /// Upper bound: `C B^(8/5) n^(-1/5) (ln n)^(1/5) (1 + ln B / ln n)
    /// + C B^2 n^(-1/2)`.
    pub upper_gap: f64,
}

/// Two-sided bound (up to the unspecified constants in `params`) on the
/// mean-field approximation error of the normalized log partition, as a
/// function of the total interaction strength `B = sum_p |beta_p^(n)|`.
/// `n` is real-valued so the bound can be charted continuously; engines
/// only ever evaluate it at integers.
pub fn mean_field_gap_bounds(b_total: f64, n: f64, params: BoundParams) -> Result<GapBounds> {
    params.validate()?;
    if !(b_total > 0.0) || !b_total.is_finite() {
        return Err(Error::InvalidInput("gap bounds need B > 0".into()));
    }
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::InvalidInput("gap bounds need n > 1".into()));
    }
    let ln_n = n.ln();
    let main = params.big_c
        * b_total.powf(1.6)
        * n.powf(-0.2)
        * ln_n.powf(0.2)
        * (1.0 + b_total.ln() / ln_n);
    let tail = params.big_c * b_total * b_total / n.sqrt();
    Ok(GapBounds {
        lower_gap: -params.c * b_total / n,
        upper_gap: main + tail,
    })
}

/// Total interaction strength `B = sum_p |beta_p^(n)|` of a model at size n.
pub fn total_interaction(m: &ModelSpec, n: f64) -> Result<f64> {
    Ok(m.effective_params(n)?.iter().map(|b| b.abs()).sum())
}

/// Per-pair log-partition value of the independent-edge (Bernoulli)
/// baseline with matching edge weight: `-ln(1 - e^(2 a b1)) / 2`.
/// Requires `e^(2 a b1) < 1`. Its ratio to `e^(2 a b1)/2` tends to 1 deep
/// in the sparse regime, which makes it the natural comparison column for
/// the normalized log partition.
pub fn independent_edge_log_partition(alpha: f64, beta1: f64) -> Result<f64> {
    let e2 = 2.0 * alpha * beta1;
    if !(e2 < 0.0) {
        return Err(Error::Domain(
            "independent-edge baseline needs e^(2 alpha beta1) < 1".into(),
        ));
    }
    Ok(-0.5 * (-e2.exp()).ln_1p())
}
