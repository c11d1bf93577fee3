//! Model specification: statistics, base parameters, divergence schedules,
//! and the Hamiltonian they induce, plus regime diagnostics.
//!
//! A model assigns weight `exp(n^2 * sum_p beta_p^(n) * t_p(G))` to a graph,
//! where `beta_p^(n) = beta_p * alpha_{n,p}` and `t_p` is the statistic's
//! density. Schedules evaluate at real-valued n so diagnostics can probe
//! non-integer points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    directed_star_density, statistic_density, GraphState, Statistic,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "undirected-subgraphs")]
    UndirectedSubgraphs,
    #[serde(rename = "directed-stars")]
    DirectedStars,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Constant,
    Log,
    Power,
    Linear,
    Table,
}

/// Divergence schedule alpha_n. The optional `per_term` list overrides the
/// base schedule statistic-by-statistic (generalized scaling); entries there
/// may not nest further.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSchedule {
    pub kind: ScheduleKind,
    #[serde(default = "one")]
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_term: Option<Vec<ParamSchedule>>,
}

fn one() -> f64 {
    1.0
}

impl ParamSchedule {
    pub fn constant(c: f64) -> Self {
        ParamSchedule { kind: ScheduleKind::Constant, coeff: c, exponent: None, table: None, per_term: None }
    }

    pub fn log(c: f64) -> Self {
        ParamSchedule { kind: ScheduleKind::Log, coeff: c, exponent: None, table: None, per_term: None }
    }

    pub fn power(c: f64, gamma: f64) -> Self {
        ParamSchedule { kind: ScheduleKind::Power, coeff: c, exponent: Some(gamma), table: None, per_term: None }
    }

    pub fn linear(c: f64) -> Self {
        ParamSchedule { kind: ScheduleKind::Linear, coeff: c, exponent: None, table: None, per_term: None }
    }

    fn validate_base(&self) -> Result<()> {
        match self.kind {
            ScheduleKind::Table => {
                let table = self
                    .table
                    .as_deref()
                    .filter(|t| !t.is_empty())
                    .ok_or_else(|| Error::InvalidModel("table schedule needs entries".into()))?;
                for &(n, a) in table {
                    if !(n >= 2.0) {
                        return Err(Error::InvalidModel(format!("table key n = {n} below 2")));
                    }
                    if !(a > 0.0) {
                        return Err(Error::InvalidModel(format!("table value {a} not positive")));
                    }
                }
            }
            kind => {
                if !(self.coeff > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "schedule coefficient {} must be positive",
                        self.coeff
                    )));
                }
                if kind == ScheduleKind::Power {
                    let g = self.exponent.ok_or_else(|| {
                        Error::InvalidModel("power schedule needs an exponent".into())
                    })?;
                    if !(g > 0.0 && g < 1.0) {
                        return Err(Error::InvalidModel(format!(
                            "power exponent {g} outside (0,1)"
                        )));
                    }
                } else if self.exponent.is_some() {
                    return Err(Error::InvalidModel(
                        "exponent is only meaningful for the power kind".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_base()?;
        if let Some(per) = &self.per_term {
            for s in per {
                if s.per_term.is_some() {
                    return Err(Error::InvalidModel("per_term schedules cannot nest".into()));
                }
                s.validate_base()?;
            }
        }
        Ok(())
    }

    /// Base schedule value at (real-valued) n.
    pub fn alpha(&self, n: f64) -> Result<f64> {
        if !(n >= 2.0) {
            return Err(Error::InvalidInput(format!("schedules require n >= 2, got {n}")));
        }
        Ok(match self.kind {
            ScheduleKind::Constant => self.coeff,
            ScheduleKind::Log => self.coeff * n.ln(),
            ScheduleKind::Power => self.coeff * n.powf(self.exponent.unwrap()),
            ScheduleKind::Linear => self.coeff * n,
            ScheduleKind::Table => self
                .table
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .find(|&&(key, _)| key == n)
                .map(|&(_, a)| a)
                .ok_or(Error::TableMiss(n))?,
        })
    }

    /// Schedule value for statistic index `term`, honoring `per_term`.
    pub fn alpha_for_term(&self, term: usize, n: f64) -> Result<f64> {
        match &self.per_term {
            None => self.alpha(n),
            Some(per) => per
                .get(term)
                .ok_or_else(|| {
                    Error::InvalidModel(format!("no per-term schedule for statistic {term}"))
                })?
                .alpha(n),
        }
    }
}

fn default_true() -> bool {
    true
}

/// Full model specification, the unit every engine consumes. Parse from the
/// TOML config form with [`ModelSpec::from_toml_str`]; `statistics` entries
/// use the `star:p` / `subgraph:v;i-j,...` text form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub flavor: Flavor,
    pub statistics: Vec<Statistic>,
    pub beta: Vec<f64>,
    pub schedule: ParamSchedule,
    #[serde(default = "default_true")]
    pub allow_diagonal: bool,
}

impl ModelSpec {
    pub fn new(
        flavor: Flavor,
        statistics: Vec<Statistic>,
        beta: Vec<f64>,
        schedule: ParamSchedule,
    ) -> Result<Self> {
        let m = ModelSpec { flavor, statistics, beta, schedule, allow_diagonal: true };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.statistics.is_empty() {
            return Err(Error::InvalidModel("at least one statistic required".into()));
        }
        if self.statistics.len() != self.beta.len() {
            return Err(Error::InvalidModel(format!(
                "{} statistics but {} beta entries",
                self.statistics.len(),
                self.beta.len()
            )));
        }
        if self.flavor == Flavor::DirectedStars {
            for s in &self.statistics {
                if s.star_order().is_none() {
                    return Err(Error::InvalidModel(
                        "directed-stars models admit only star statistics".into(),
                    ));
                }
            }
        }
        self.schedule.validate()?;
        if let Some(per) = &self.schedule.per_term {
            if per.len() != self.statistics.len() {
                return Err(Error::InvalidModel(format!(
                    "{} per-term schedules for {} statistics",
                    per.len(),
                    self.statistics.len()
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let m: ModelSpec = toml::from_str(s)
            .map_err(|e| Error::InvalidModel(format!("config parse failed: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn k(&self) -> usize {
        self.statistics.len()
    }

    pub fn all_beta_negative(&self) -> bool {
        self.beta.iter().all(|&b| b < 0.0)
    }

    /// Effective parameters `beta_p * alpha_{n,p}` at real-valued n.
    pub fn effective_params(&self, n: f64) -> Result<Vec<f64>> {
        (0..self.k())
            .map(|p| Ok(self.beta[p] * self.schedule.alpha_for_term(p, n)?))
            .collect()
    }

    /// Effective edge-term parameter `beta_1 * alpha_{n,1}`.
    pub fn effective_beta1(&self, n: f64) -> Result<f64> {
        Ok(self.beta[0] * self.schedule.alpha_for_term(0, n)?)
    }

    /// The limit-theorem entry points all require the first statistic to be
    /// the single edge (undirected) or the 1-star (directed).
    pub fn require_edge_first(&self) -> Result<()> {
        if self.statistics[0] != Statistic::Star(1) {
            return Err(Error::InvalidModel(
                "the first statistic must be star:1 for this operation".into(),
            ));
        }
        Ok(())
    }
}

/// `n^2 * sum_p beta_p^(n) * density_p(G)`, by construction.
pub fn hamiltonian(m: &ModelSpec, g: &GraphState) -> Result<f64> {
    match (m.flavor, g) {
        (Flavor::UndirectedSubgraphs, GraphState::Undirected(g)) => {
            let n = g.n();
            let betas = m.effective_params(n as f64)?;
            let mut h = 0.0;
            for (stat, &b) in m.statistics.iter().zip(&betas) {
                h += b * statistic_density(stat, g);
            }
            Ok(h * (n as f64) * (n as f64))
        }
        (Flavor::DirectedStars, GraphState::Directed(x)) => {
            let n = x.n();
            let betas = m.effective_params(n as f64)?;
            let mut h = 0.0;
            for (stat, &b) in m.statistics.iter().zip(&betas) {
                let p = stat.star_order().expect("validated directed stats");
                h += b * directed_star_density(p, x);
            }
            Ok(h * (n as f64) * (n as f64))
        }
        _ => Err(Error::InvalidInput(
            "graph flavor does not match the model flavor".into(),
        )),
    }
}

/// Scaling diagnostics at one n. Pure reporting; nothing here gates any
/// computation.
#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub n: u64,
    pub alpha_n: f64,
    /// (n^2 e^(2 alpha_n beta_1), alpha_n / n)
    pub sparse_undirected: (f64, f64),
    /// (n e^(alpha_n beta_1), alpha_n / n)
    pub sparse_directed: (f64, f64),
    /// n e^(alpha_n beta_1)
    pub lambda_estimate: f64,
    /// (alpha_n / n, ln 2 / |beta_1|)
    pub fast_directed: (f64, f64),
    pub all_beta_negative: bool,
}

pub fn regime_report(m: &ModelSpec, n: u64) -> Result<RegimeReport> {
    if n < 2 {
        return Err(Error::InvalidInput("regime report needs n >= 2".into()));
    }
    let nf = n as f64;
    let alpha_n = m.schedule.alpha_for_term(0, nf)?;
    let eb1 = m.effective_beta1(nf)?;
    let lambda = nf * eb1.exp();
    Ok(RegimeReport {
        n,
        alpha_n,
        sparse_undirected: (nf * nf * (2.0 * eb1).exp(), alpha_n / nf),
        sparse_directed: (lambda, alpha_n / nf),
        lambda_estimate: lambda,
        fast_directed: (alpha_n / nf, std::f64::consts::LN_2 / m.beta[0].abs()),
        all_beta_negative: m.all_beta_negative(),
    })
}

/// Hypothesis-trend flags along a grid: do the limit quantities move the way
/// each regime requires? Diagnostics only.
#[derive(Clone, Debug, Serialize)]
pub struct RegimeTrend {
    pub rows: Vec<RegimeReport>,
    /// all beta < 0, n^2 e^(2 alpha_n beta_1) and alpha_n/n non-increasing
    pub sparse_undirected_ok: bool,
    /// all beta < 0, n e^(alpha_n beta_1) and alpha_n/n non-increasing
    pub sparse_directed_ok: bool,
    /// n e^(alpha_n beta_1) varies by less than 1% of its final value
    pub lambda_regime_ok: bool,
    /// alpha_n/n > ln 2 / |beta_1| at every grid point
    pub fast_regime_ok: bool,
}

pub fn regime_trend(m: &ModelSpec, n_grid: &[u64]) -> Result<RegimeTrend> {
    validate_grid(n_grid)?;
    let rows: Vec<RegimeReport> =
        n_grid.iter().map(|&n| regime_report(m, n)).collect::<Result<_>>()?;
    let neg = m.all_beta_negative();
    let non_increasing = |f: fn(&RegimeReport) -> f64| -> bool {
        rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]))
    };
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_estimate).collect();
    let lambda_last = *lambdas.last().unwrap();
    let spread = lambdas.iter().cloned().fold(f64::MIN, f64::max)
        - lambdas.iter().cloned().fold(f64::MAX, f64::min);
    Ok(RegimeTrend {
        sparse_undirected_ok: neg
            && non_increasing(|r| r.sparse_undirected.0)
            && non_increasing(|r| r.sparse_undirected.1),
        sparse_directed_ok: neg
            && non_increasing(|r| r.sparse_directed.0)
            && non_increasing(|r| r.sparse_directed.1),
        lambda_regime_ok: neg && lambda_last > 0.0 && spread < 0.01 * lambda_last,
        fast_regime_ok: neg && rows.iter().all(|r| r.fast_directed.0 > r.fast_directed.1),
        rows,
    })
}

pub(crate) fn validate_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::InvalidInput("n grid must be nonempty".into()));
    }
    if n_grid[0] < 2 {
        return Err(Error::InvalidInput("n grid entries must be at least 2".into()));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("n grid must be strictly increasing".into()));
    }
    Ok(())
}
