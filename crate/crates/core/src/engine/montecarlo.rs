//! Batches of runs with sampled initial states, aggregated per variant.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{run, EngineError, RunMetrics, SimConfig};
use crate::adversary::FaultModel;
use crate::graph::Graph;
use crate::protocol::RelayModel;
use crate::scalar::Scalar;

/// An algorithm variant: overrides applied to a base configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hops: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relay: Option<RelayModel>,
}

impl Variant {
    pub fn apply<T: Scalar>(&self, base: &SimConfig<T>) -> SimConfig<T> {
        let mut cfg = base.clone();
        if let Some(l) = self.hops {
            cfg.hops = l;
        }
        if let Some(r) = self.relay {
            cfg.relay = r;
        }
        cfg
    }
}

/// One line of the aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub variant: String,
    pub runs: usize,
    pub mean_events: f64,
    pub mean_transmissions: f64,
    /// Fraction of runs whose final spread is within the convergence threshold.
    pub consensus_rate: f64,
    pub mean_final_spread: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("at least one run is required")]
    NoRuns,
    #[error("variant {variant:?}, run {run} (seed {seed}): {source}")]
    Run {
        variant: String,
        run: usize,
        seed: u64,
        #[source]
        source: EngineError,
    },
}

/// Seed of run `run` in a batch seeded with `base`.
pub fn derive_seed(base: u64, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(1 + run as u64);
    rng.next_u64()
}

/// `n` states drawn uniformly from `[lo, hi]`, determined by `seed`.
pub fn sample_initial_states<T: Scalar>(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..n).map(|_| T::of(rng.gen_range(lo..=hi))).collect()
}

/// Run every variant `runs` times. Run `r` uses the same sampled initial
/// states and seed for all variants. Per-run metrics come back in
/// `(variant, run)` order alongside the aggregates.
#[allow(clippy::type_complexity)]
pub fn monte_carlo<T: Scalar>(
    g: &Graph,
    fm: &FaultModel<T>,
    base: &SimConfig<T>,
    variants: &[Variant],
    runs: usize,
    range: (f64, f64),
) -> Result<(Vec<Aggregate>, Vec<Vec<RunMetrics<T>>>), MonteCarloError> {
    if runs == 0 {
        return Err(MonteCarloError::NoRuns);
    }
    let n_normal = g.all().difference(fm.adversary_set()).len();
    let jobs: Vec<(usize, usize)> = (0..variants.len()).flat_map(|v| (0..runs).map(move |r| (v, r))).collect();
    let results: Vec<Result<RunMetrics<T>, MonteCarloError>> = jobs
        .par_iter()
        .map(|&(v, r)| {
            let seed = derive_seed(base.seed, r);
            let mut cfg = variants[v].apply(base);
            cfg.seed = seed;
            let x0 = sample_initial_states::<T>(seed, n_normal, range.0, range.1);
            run(g, fm, &x0, &cfg).map_err(|source| MonteCarloError::Run {
                variant: variants[v].name.clone(),
                run: r,
                seed,
                source,
            })
        })
        .collect();
    let mut per_variant: Vec<Vec<RunMetrics<T>>> = vec![Vec::with_capacity(runs); variants.len()];
    for ((v, _), res) in jobs.iter().zip(results) {
        per_variant[*v].push(res?);
    }
    let aggregates = variants
        .iter()
        .zip(&per_variant)
        .map(|(variant, ms)| {
            let eps = variant.apply(base).convergence_threshold();
            let k = ms.len() as f64;
            Aggregate {
                variant: variant.name.clone(),
                runs: ms.len(),
                mean_events: ms.iter().map(|m| m.mean_events).sum::<f64>() / k,
                mean_transmissions: ms.iter().map(|m| m.mean_transmissions).sum::<f64>() / k,
                consensus_rate: ms.iter().filter(|m| m.final_spread <= eps).count() as f64 / k,
                mean_final_spread: ms.iter().map(|m| m.final_spread.to_f64().unwrap_or(f64::NAN)).sum::<f64>() / k,
            }
        })
        .collect();
    Ok((aggregates, per_variant))
}
