//! Numerical laboratory for sparse exponential random graph models.
//!
//! The crate exposes four engines over a shared model description
//! ([`ModelSpec`]):
//!
//! * [`exact`] — partition functions and edge marginals by exhaustive
//!   enumeration (undirected, small n), a rowwise product formula
//!   (directed, any n), and a brute-force directed cross-check;
//! * [`variational`] — the scalar mean-field fixed point, the variational
//!   log-partition value, two-sided gap bounds, and the independent-edge
//!   baseline;
//! * [`sampler`] — a heat-bath chain for undirected models and a direct
//!   row sampler for directed ones, both deterministic given a seed;
//! * [`sweep`] — limit-statement sweeps along an n-grid with fixed CSV
//!   columns and a JSON mirror.
//!
//! Graph primitives (bitmask graphs, subgraph patterns, homomorphism
//! densities) live in [`graph`]; parameter schedules and regime
//! diagnostics in [`model`].

pub mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod numeric;
pub mod sampler;
pub mod sweep;
pub mod variational;

pub use error::{Error, Result};
pub use exact::{
    directed_bruteforce_exact, directed_rowwise_exact, sandwich_bounds,
    undirected_default_cap, undirected_exact, undirected_exact_with_cap,
    undirected_gibbs_law, ExactResult, Method, SandwichBounds,
    DIRECTED_BRUTEFORCE_CAP, UNDIRECTED_HARD_CAP,
};
pub use graph::{
    directed_star_density, edge_flip_delta, hom_count, hom_density,
    star_density_undirected, statistic_density, weighted_hom_density,
    DirectedGraph, GraphState, StatShape, Statistic, SubgraphSpec,
    UndirectedGraph,
};
pub use model::{
    regime_report, regime_trend, Flavor, ModelSpec, ParamSchedule, RegimeReport,
    RegimeTrend, ScheduleKind,
};
pub use sampler::{
    estimate_directed_edge, run_chain, DirectSample, DirectedSampler,
    GlauberChain, McmcOptions, McmcSample, SampleEstimate,
};
pub use sweep::{
    poisson_tv, run_sweep, sweep_directed_joint, sweep_directed_logz,
    sweep_directed_mean, sweep_fast, sweep_poisson, sweep_undirected_joint,
    sweep_undirected_logz, sweep_undirected_mean, SweepMethod, SweepOptions,
    SweepReport, SweepRow, TheoremId, CSV_HEADER,
};
pub use variational::{
    independent_edge_log_partition, mean_field_gap_bounds, solve_fixed_point,
    solve_fixed_point_model, total_interaction, variational_value,
    variational_value_model, BoundParams, FixedPoint, GapBounds,
    VariationalResult,
};
