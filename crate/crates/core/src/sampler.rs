//! Samplers: a single-site heat-bath chain for undirected models (exact
//! stationary law = the Gibbs measure) and a direct iid sampler for
//! directed star models built on the exact row out-degree law.
//!
//! All randomness flows through `ChaCha12Rng` seeded from a user seed, with
//! the stream id carrying the chain index, so every estimate is reproducible
//! bit for bit regardless of thread count or platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::directed_rowwise_exact;
use crate::graph::{undirected_flip_deltas, DirectedGraph, Statistic, UndirectedGraph};
use crate::model::{Flavor, ModelSpec};
use crate::numeric::logistic;

/// Point estimate with a standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Single-site heat-bath dynamics on the Gibbs measure: pick a uniform
/// pair, then resample its edge from the exact conditional
/// `P(on | rest) = sigma(H(on) - H(off))`.
pub struct GlauberChain {
    g: UndirectedGraph,
    stats: Vec<Statistic>,
    /// n^2 beta_p^(n), the Hamiltonian weight of each density
    coeffs: Vec<f64>,
    pairs: u64,
    rng: ChaCha12Rng,
}

impl GlauberChain {
    /// Start a chain from the empty graph. `stream` separates independent
    /// chains sharing one seed.
    pub fn new(m: &ModelSpec, n: u32, seed: u64, stream: u64) -> Result<Self> {
        if m.flavor != Flavor::UndirectedSubgraphs {
            return Err(Error::InvalidInput("heat-bath chain needs an undirected model".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput("heat-bath chain needs n >= 2".into()));
        }
        let nf = n as f64;
        let coeffs: Vec<f64> =
            m.effective_params(nf)?.iter().map(|b| b * nf * nf).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(GlauberChain {
            g: UndirectedGraph::empty(n),
            stats: m.statistics.clone(),
            coeffs,
            pairs: (n as u64) * (n as u64 - 1) / 2,
            rng,
        })
    }

    pub fn state(&self) -> &UndirectedGraph {
        &self.g
    }

    /// Replace the current state (for stationarity checks from arbitrary
    /// starting points).
    pub fn set_state(&mut self, g: UndirectedGraph) -> Result<()> {
        if g.n() != self.g.n() {
            return Err(Error::InvalidInput("state has the wrong vertex count".into()));
        }
        self.g = g;
        Ok(())
    }

    /// Exact conditional probability that pair `pos` is on given the rest
    /// of the current state.
    pub fn on_probability(&self, pos: u64) -> Result<f64> {
        let deltas = undirected_flip_deltas(&self.g, &self.stats, pos)?;
        let toggle: f64 = deltas.iter().zip(&self.coeffs).map(|(d, c)| c * d).sum();
        let (i, j) = UndirectedGraph::pair_of_index(self.g.n(), pos);
        let delta_on = if self.g.has_edge(i, j) { -toggle } else { toggle };
        Ok(logistic(delta_on))
    }

    /// One heat-bath update. Always consumes the same amount of randomness
    /// so trajectories with equal seeds stay aligned.
    pub fn step(&mut self) -> Result<()> {
        let pos = self.rng.gen_range(0..self.pairs);
        let p_on = self.on_probability(pos)?;
        let on = self.rng.gen_bool(p_on);
        let (i, j) = UndirectedGraph::pair_of_index(self.g.n(), pos);
        self.g.set_edge(i, j, on);
        Ok(())
    }
}

/// Budget for a heat-bath run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McmcOptions {
    pub burn_in: u64,
    pub samples: u64,
    /// steps between recorded samples (>= 1)
    pub thin: u64,
    pub chains: u64,
    pub seed: u64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions { burn_in: 20_000, samples: 200_000, thin: 2, chains: 1, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct McmcSample {
    pub edge: SampleEstimate,
    pub joint: SampleEstimate,
    pub samples: u64,
    pub chains: u64,
}

/// Estimate `P(X_12 = 1)` and `P(X_12 = X_13 = 1)` by heat-bath sampling.
///
/// The mean uses every recorded sample; the standard error comes from batch
/// means, `min(30, samples)` equal batches per chain (the tail that does
/// not fill a batch still feeds the mean). With fewer than two batches the
/// standard error is reported as 0.
pub fn run_chain(m: &ModelSpec, n: u32, opts: &McmcOptions) -> Result<McmcSample> {
    if opts.samples == 0 || opts.chains == 0 {
        return Err(Error::InvalidInput("need at least one sample and one chain".into()));
    }
    if opts.thin == 0 {
        return Err(Error::InvalidInput("thin must be >= 1".into()));
    }
    let mut edge_sum = 0.0;
    let mut joint_sum = 0.0;
    let mut edge_batches: Vec<f64> = Vec::new();
    let mut joint_batches: Vec<f64> = Vec::new();

    for chain in 0..opts.chains {
        let mut ch = GlauberChain::new(m, n, opts.seed, chain)?;
        for _ in 0..opts.burn_in {
            ch.step()?;
        }
        let nb = opts.samples.min(30);
        let bs = opts.samples / nb;
        let mut acc_e = 0.0;
        let mut acc_j = 0.0;
        let mut in_batch = 0u64;
        let mut done_batches = 0u64;
        for _ in 0..opts.samples {
            for _ in 0..opts.thin {
                ch.step()?;
            }
            let g = ch.state();
            let e = if g.has_edge(0, 1) { 1.0 } else { 0.0 };
            let j = if n >= 3 && g.has_edge(0, 1) && g.has_edge(0, 2) { 1.0 } else { 0.0 };
            edge_sum += e;
            joint_sum += j;
            if done_batches < nb {
                acc_e += e;
                acc_j += j;
                in_batch += 1;
                if in_batch == bs {
                    edge_batches.push(acc_e / bs as f64);
                    joint_batches.push(acc_j / bs as f64);
                    acc_e = 0.0;
                    acc_j = 0.0;
                    in_batch = 0;
                    done_batches += 1;
                }
            }
        }
    }

    let total = (opts.samples * opts.chains) as f64;
    let stderr_of = |batches: &[f64]| -> f64 {
        let l = batches.len();
        if l < 2 {
            return 0.0;
        }
        let m = batches.iter().sum::<f64>() / l as f64;
        let var =
            batches.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / (l as f64 - 1.0);
        (var / l as f64).sqrt()
    };
    Ok(McmcSample {
        edge: SampleEstimate { mean: edge_sum / total, stderr: stderr_of(&edge_batches) },
        joint: SampleEstimate { mean: joint_sum / total, stderr: stderr_of(&joint_batches) },
        samples: opts.samples,
        chains: opts.chains,
    })
}

/// Direct (iid) sampler for directed star models: each row independently
/// draws an out-degree from the exact row law, then places that many
/// out-edges uniformly at random among its allowed columns.
pub struct DirectedSampler {
    n: u64,
    allow_diagonal: bool,
    /// cumulative out-degree law
    cdf: Vec<f64>,
    rng: ChaCha12Rng,
    /// persistent selection scratch for row 0 (the estimate fast path)
    row0_cols: Vec<u32>,
    /// the two smallest allowed columns of row 0: the marginal pair used by
    /// the exact engines (frozen here because the scratch gets permuted)
    targets: (Option<u32>, Option<u32>),
}

impl DirectedSampler {
    pub fn new(m: &ModelSpec, n: u64, seed: u64) -> Result<Self> {
        if m.flavor != Flavor::DirectedStars {
            return Err(Error::InvalidInput("direct sampler needs a directed-stars model".into()));
        }
        let law = directed_rowwise_exact(m, n)?
            .degree_law
            .expect("rowwise engine always returns the degree law");
        let mut cdf = Vec::with_capacity(law.len());
        let mut acc = 0.0;
        for p in &law {
            acc += p;
            cdf.push(acc);
        }
        let row0_cols: Vec<u32> = (0..n as u32)
            .filter(|&j| m.allow_diagonal || j != 0)
            .collect();
        let targets = (row0_cols.first().copied(), row0_cols.get(1).copied());
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(DirectedSampler {
            n,
            allow_diagonal: m.allow_diagonal,
            cdf,
            rng,
            row0_cols,
            targets,
        })
    }

    fn draw_degree(&mut self) -> usize {
        let u: f64 = self.rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1)
    }

    /// Partial Fisher-Yates: select `k` distinct entries into the front of
    /// `cols`. Uniformity over k-subsets holds from any starting
    /// arrangement, so the scratch never needs restoring.
    fn select_k(rng: &mut ChaCha12Rng, cols: &mut [u32], k: usize) {
        for t in 0..k {
            let pick = rng.gen_range(t..cols.len());
            cols.swap(t, pick);
        }
    }

    /// One full adjacency matrix (O(n^2); intended for small to moderate n).
    pub fn sample_graph(&mut self) -> Result<DirectedGraph> {
        let n = self.n as u32;
        let mut g = DirectedGraph::empty(n, self.allow_diagonal);
        let mut cols: Vec<u32> = Vec::with_capacity(self.n as usize);
        for i in 0..n {
            cols.clear();
            cols.extend((0..n).filter(|&j| self.allow_diagonal || j != i));
            let k = self.draw_degree().min(cols.len());
            Self::select_k(&mut self.rng, &mut cols, k);
            for &j in &cols[..k] {
                g.set(i, j, true)?;
            }
        }
        Ok(g)
    }

    /// Indicators (first-column present, first-two-columns present) for one
    /// fresh row-0 draw; the marginal pair matches the exact engines.
    pub fn sample_row0_indicators(&mut self) -> (bool, bool) {
        let k = self.draw_degree().min(self.row0_cols.len());
        let (c1, c2) = match self.targets {
            (Some(a), b) => (a, b),
            (None, _) => return (false, false),
        };
        // select, then membership-scan the chosen prefix
        Self::select_k(&mut self.rng, &mut self.row0_cols, k);
        let mut has1 = false;
        let mut has2 = false;
        for &c in &self.row0_cols[..k] {
            has1 |= c == c1;
            has2 |= Some(c) == c2;
        }
        (has1, has1 && has2)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DirectSample {
    pub edge: SampleEstimate,
    pub joint: SampleEstimate,
    pub samples: u64,
}

/// Monte Carlo estimate of the directed edge and joint probabilities from
/// iid row draws; standard errors are the usual binomial ones.
pub fn estimate_directed_edge(
    m: &ModelSpec,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<DirectSample> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut s = DirectedSampler::new(m, n, seed)?;
    let mut ce = 0u64;
    let mut cj = 0u64;
    for _ in 0..samples {
        let (e, j) = s.sample_row0_indicators();
        ce += e as u64;
        cj += j as u64;
    }
    let nf = samples as f64;
    let binom = |c: u64| -> SampleEstimate {
        let p = c as f64 / nf;
        SampleEstimate { mean: p, stderr: (p * (1.0 - p) / nf).sqrt() }
    };
    Ok(DirectSample { edge: binom(ce), joint: binom(cj), samples })
}
