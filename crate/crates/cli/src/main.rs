//! `sergm` — command-line front end for the sparse random-graph laboratory.
//!
//! Subcommands: `exact`, `variational`, `sample`, `sweep`, `regimes`.
//! Exit codes: 0 success, 1 configuration error, 2 resource cap exceeded,
//! 3 numerical non-convergence.
//!
//! Output files embed the tool version, a canonical echo of the model
//! config, the seed, the thread count, and the method used. Wall-clock
//! time goes to stderr only, so identical config + seed produce
//! byte-identical files.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sergm_core::{
    directed_rowwise_exact, estimate_directed_edge, mean_field_gap_bounds,
    regime_trend, run_chain, run_sweep, total_interaction,
    undirected_exact_with_cap, variational_value_model, BoundParams, Error,
    Flavor, McmcOptions, ModelSpec, SampleEstimate, SweepMethod, SweepOptions,
    SweepReport, TheoremId,
};

#[derive(Parser)]
#[command(
    name = "sergm",
    version,
    about = "Numerical laboratory for sparse exponential random graph models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact partition function and marginals (enumeration or rowwise)
    Exact(ExactArgs),
    /// Scalar mean-field fixed point, L_n, and gap bounds
    Variational(VariationalArgs),
    /// Monte Carlo estimates (heat-bath chain or direct row sampler)
    Sample(SampleArgs),
    /// Limit-statement sweep along an n-grid (CSV + JSON)
    Sweep(SweepArgs),
    /// Regime diagnostics along an n-grid
    Regimes(RegimesArgs),
}

#[derive(Args)]
struct Common {
    /// Model config file (TOML)
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Output path; stdout when omitted (sweep appends .csv/.json)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overwrite an existing output file
    #[arg(long)]
    force: bool,
    /// RNG seed for sampling commands
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the parallel engines (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: Common,
    /// Number of vertices
    #[arg(long)]
    n: u64,
    /// Raise the undirected enumeration cap (hard ceiling applies)
    #[arg(long, value_name = "N")]
    cap: Option<u32>,
}

#[derive(Args)]
struct VariationalArgs {
    #[command(flatten)]
    common: Common,
    /// Number of vertices the schedule is evaluated at
    #[arg(long)]
    n: u64,
    /// Unspecified lower-gap constant
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    /// Unspecified upper-gap constant
    #[arg(long = "C", default_value_t = 1.0)]
    big_c: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Number of vertices
    #[arg(long)]
    n: u64,
    /// Burn-in steps per chain (undirected chain only)
    #[arg(long, default_value_t = 20_000)]
    burn_in: u64,
    /// Recorded samples (per chain for the undirected chain)
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Steps between recorded samples (undirected chain only)
    #[arg(long, default_value_t = 2)]
    thin: u64,
    /// Independent chains (undirected chain only)
    #[arg(long, default_value_t = 1)]
    chains: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Limit statement to sweep (UND_MEAN, UND_JOINT, UND_LOGZ, DIR_MEAN,
    /// DIR_JOINT, DIR_LOGZ, DIR_POISSON, DIR_FAST)
    #[arg(long)]
    theorem: String,
    /// Comma-separated strictly increasing n values
    #[arg(long = "n-grid", value_delimiter = ',', required = true)]
    n_grid: Vec<u64>,
    /// Observation method for undirected marginal sweeps
    #[arg(long, default_value = "auto")]
    method: String,
    /// Raise the undirected enumeration cap (hard ceiling applies)
    #[arg(long, value_name = "N")]
    cap: Option<u32>,
    /// Burn-in steps per chain when sampling
    #[arg(long, default_value_t = 20_000)]
    burn_in: u64,
    /// Recorded samples per chain when sampling
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Steps between recorded samples when sampling
    #[arg(long, default_value_t = 2)]
    thin: u64,
    /// Independent chains when sampling
    #[arg(long, default_value_t = 1)]
    chains: u64,
}

#[derive(Args)]
struct RegimesArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated strictly increasing n values
    #[arg(long = "n-grid", value_delimiter = ',', required = true)]
    n_grid: Vec<u64>,
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    seed: u64,
    threads: usize,
    method: String,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: Meta,
    model_echo: &'a ModelSpec,
    #[serde(flatten)]
    payload: T,
}

enum CliError {
    Core(Error),
    Config(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::CapExceeded { .. }) => 2,
            CliError::Core(Error::NonConvergence(_)) => 3,
            _ => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(s) => s.clone(),
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let usage_ok =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            // clap uses exit code 2 for usage errors; here 2 means
            // "resource cap", so usage problems map to 1
            return if usage_ok { 0 } else { 1 };
        }
    };
    let start = Instant::now();
    let outcome = dispatch(cli);
    eprintln!("wall-clock: {:.3}s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Variational(a) => cmd_variational(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Regimes(a) => cmd_regimes(a),
    }
}

fn setup(common: &Common) -> Result<ModelSpec, CliError> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let text = std::fs::read_to_string(&common.model).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", common.model.display()))
    })?;
    Ok(ModelSpec::from_toml_str(&text)?)
}

fn meta(common: &Common, method: impl Into<String>) -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        seed: common.seed,
        threads: rayon::current_num_threads(),
        method: method.into(),
    }
}

fn check_overwrite(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn write_or_print(
    out: &Option<PathBuf>,
    force: bool,
    content: &str,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            check_overwrite(path, force)?;
            std::fs::write(path, content).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", path.display()))
            })
        }
        None => {
            print_ignoring_epipe(content);
            Ok(())
        }
    }
}

/// Plain `print!` panics when the consumer closes the pipe early
/// (`sergm ... | head`); treat that as a normal end of output.
fn print_ignoring_epipe(content: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(content.as_bytes());
}

fn json_doc<T: Serialize>(doc: &Document<T>) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable document");
    s.push('\n');
    s
}

fn cmd_exact(a: ExactArgs) -> Result<(), CliError> {
    let m = setup(&a.common)?;
    let result = match m.flavor {
        Flavor::UndirectedSubgraphs => {
            let n = u32::try_from(a.n).map_err(|_| {
                CliError::Config(format!("n = {} is far beyond the enumeration cap", a.n))
            })?;
            undirected_exact_with_cap(&m, n, a.cap)?
        }
        Flavor::DirectedStars => directed_rowwise_exact(&m, a.n)?,
    };
    let method = serde_json::to_value(result.method)
        .expect("method serializes")
        .as_str()
        .expect("method is a string")
        .to_string();
    let doc = Document {
        meta: meta(&a.common, method),
        model_echo: &m,
        payload: serde_json::json!({ "exact": result }),
    };
    write_or_print(&a.common.out, a.common.force, &json_doc(&doc))
}

fn cmd_variational(a: VariationalArgs) -> Result<(), CliError> {
    let m = setup(&a.common)?;
    let nf = a.n as f64;
    let v = variational_value_model(&m, nf)?;
    let b_total = total_interaction(&m, nf)?;
    let params = BoundParams { c: a.c, big_c: a.big_c };
    let bounds = mean_field_gap_bounds(b_total, nf, params)?;
    let doc = Document {
        meta: meta(&a.common, "variational"),
        model_echo: &m,
        payload: serde_json::json!({
            "variational": v,
            "bounds": {
                "lower_gap": bounds.lower_gap,
                "upper_gap": bounds.upper_gap,
                "c": params.c,
                "C": params.big_c,
                "total_interaction": b_total,
            },
            "n": a.n,
        }),
    };
    write_or_print(&a.common.out, a.common.force, &json_doc(&doc))
}

#[derive(Serialize)]
struct SamplePayload {
    sample: SampleBody,
}

#[derive(Serialize)]
struct SampleBody {
    edge: SampleEstimate,
    joint: SampleEstimate,
    budgets: serde_json::Value,
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let m = setup(&a.common)?;
    let (body, method) = match m.flavor {
        Flavor::UndirectedSubgraphs => {
            let n = u32::try_from(a.n)
                .map_err(|_| CliError::Config(format!("n = {} too large", a.n)))?;
            let opts = McmcOptions {
                burn_in: a.burn_in,
                samples: a.samples,
                thin: a.thin,
                chains: a.chains,
                seed: a.common.seed,
            };
            let est = run_chain(&m, n, &opts)?;
            (
                SampleBody {
                    edge: est.edge,
                    joint: est.joint,
                    budgets: serde_json::json!({
                        "burn_in": opts.burn_in,
                        "samples": est.samples,
                        "thin": opts.thin,
                        "chains": est.chains,
                    }),
                },
                "mcmc",
            )
        }
        Flavor::DirectedStars => {
            let est = estimate_directed_edge(&m, a.n, a.samples, a.common.seed)?;
            (
                SampleBody {
                    edge: est.edge,
                    joint: est.joint,
                    budgets: serde_json::json!({ "samples": est.samples }),
                },
                "direct",
            )
        }
    };
    let doc = Document {
        meta: meta(&a.common, method),
        model_echo: &m,
        payload: SamplePayload { sample: body },
    };
    write_or_print(&a.common.out, a.common.force, &json_doc(&doc))
}

#[derive(Serialize)]
struct SweepPayload {
    sweep: SweepReport,
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let m = setup(&a.common)?;
    let id: TheoremId = a.theorem.parse()?;
    let method: SweepMethod = a.method.parse()?;
    let opts = SweepOptions {
        method,
        mcmc: McmcOptions {
            burn_in: a.burn_in,
            samples: a.samples,
            thin: a.thin,
            chains: a.chains,
            seed: a.common.seed,
        },
        cap_override: a.cap,
    };
    let report = run_sweep(id, &m, &a.n_grid, &opts)?;
    let csv = report.to_csv();
    let doc = Document {
        meta: meta(&a.common, a.method.clone()),
        model_echo: &m,
        payload: SweepPayload { sweep: report },
    };
    match &a.common.out {
        Some(base) => {
            let csv_path = with_suffix(base, "csv");
            let json_path = with_suffix(base, "json");
            check_overwrite(&csv_path, a.common.force)?;
            check_overwrite(&json_path, a.common.force)?;
            std::fs::write(&csv_path, &csv).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", csv_path.display()))
            })?;
            std::fs::write(&json_path, json_doc(&doc)).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", json_path.display()))
            })?;
            Ok(())
        }
        None => {
            print_ignoring_epipe(&csv);
            Ok(())
        }
    }
}

/// `base` -> `base.csv` (appends rather than replaces any existing
/// extension, so `--out runs/sweep1` gives `runs/sweep1.csv`).
fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_regimes(a: RegimesArgs) -> Result<(), CliError> {
    let m = setup(&a.common)?;
    let trend = regime_trend(&m, &a.n_grid)?;
    let mut table = String::new();
    table.push_str(
        "n         alpha_n       n^2 e^(2ab1)  n e^(ab1)     lambda        a_n/n         ln2/|b1|      beta<0\n",
    );
    for r in &trend.rows {
        table.push_str(&format!(
            "{:<9} {:<13.6e} {:<13.6e} {:<13.6e} {:<13.6e} {:<13.6e} {:<13.6e} {}\n",
            r.n,
            r.alpha_n,
            r.sparse_undirected.0,
            r.sparse_directed.0,
            r.lambda_estimate,
            r.fast_directed.0,
            r.fast_directed.1,
            r.all_beta_negative,
        ));
    }
    table.push_str(&format!(
        "flags: sparse_undirected_ok={} sparse_directed_ok={} lambda_regime_ok={} fast_regime_ok={}\n",
        trend.sparse_undirected_ok,
        trend.sparse_directed_ok,
        trend.lambda_regime_ok,
        trend.fast_regime_ok,
    ));
    match &a.common.out {
        Some(path) => {
            check_overwrite(path, a.common.force)?;
            let doc = Document {
                meta: meta(&a.common, "regimes"),
                model_echo: &m,
                payload: serde_json::json!({ "regimes": trend }),
            };
            std::fs::write(path, json_doc(&doc)).map_err(|e| {
                CliError::Config(format!("cannot write {}: {e}", path.display()))
            })?;
            print_ignoring_epipe(&table);
            Ok(())
        }
        None => {
            print_ignoring_epipe(&table);
            Ok(())
        }
    }
}
