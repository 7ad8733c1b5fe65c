use super::{run_episode, EpisodeConfig, HarnessError, Metrics, Outcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    fn of(values: &[f64]) -> MetricStats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MetricStats {
            mean,
            sd: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub timeouts: usize,
    pub metrics: BTreeMap<String, MetricStats>,
}

impl Summary {
    pub fn from_metrics(all: &[Metrics], timeouts: usize) -> Summary {
        let metrics = Metrics::NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let vals: Vec<f64> = all.iter().map(|m| m.values()[i]).collect();
                (name.to_string(), MetricStats::of(&vals))
            })
            .collect();
        Summary {
            n: all.len(),
            timeouts,
            metrics,
        }
    }

    pub fn get(&self, metric: &str) -> Option<&MetricStats> {
        self.metrics.get(metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub seeds: Vec<u64>,
    pub episodes: Vec<Metrics>,
    pub outcomes: Vec<Outcome>,
    pub summary: Summary,
}

/// Runs `n` episodes with seeds `base.seed + i * seed_stride`, in parallel.
/// Results are returned in seed order.
pub fn run_batch(base: &EpisodeConfig, n: usize, seed_stride: u64) -> Result<BatchResult, HarnessError> {
    if n == 0 {
        return Err(HarnessError::TooFewEpisodes { need: 1, got: 0 });
    }
    let seeds: Vec<u64> = (0..n as u64)
        .map(|i| base.seed.wrapping_add(i.wrapping_mul(seed_stride)))
        .collect();
    let runs: Vec<(Metrics, Outcome)> = seeds
        .par_iter()
        .map(|&seed| {
            let ep = run_episode(&EpisodeConfig {
                seed,
                ..base.clone()
            })?;
            Ok((ep.metrics, ep.outcome))
        })
        .collect::<Result<_, HarnessError>>()?;
    let (episodes, outcomes): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let timeouts = outcomes.iter().filter(|o| **o == Outcome::TimedOut).count();
    let summary = Summary::from_metrics(&episodes, timeouts);
    Ok(BatchResult {
        seeds,
        episodes,
        outcomes,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// mean(a) - mean(b).
    pub mean_diff: f64,
    pub welch_t: f64,
    pub dof: f64,
}

/// Welch's t and Welch-Satterthwaite degrees of freedom, per metric.
/// The summaries' SDs are used as given. When both SDs are zero the
/// statistic is infinite (or zero for equal means) and the dof falls back
/// to `n_a + n_b - 2`.
pub fn compare_conditions(a: &Summary, b: &Summary) -> Result<BTreeMap<String, Comparison>, HarnessError> {
    for s in [a, b] {
        if s.n < 2 {
            return Err(HarnessError::TooFewEpisodes { need: 2, got: s.n });
        }
    }
    let (na, nb) = (a.n as f64, b.n as f64);
    let mut out = BTreeMap::new();
    for (name, sa) in &a.metrics {
        let Some(sb) = b.metrics.get(name) else {
            continue;
        };
        let diff = sa.mean - sb.mean;
        let (va, vb) = (sa.sd.powi(2) / na, sb.sd.powi(2) / nb);
        let se = (va + vb).sqrt();
        let welch_t = if diff == 0.0 { 0.0 } else { diff / se };
        let denom = va.powi(2) / (na - 1.0) + vb.powi(2) / (nb - 1.0);
        let dof = if denom > 0.0 {
            (va + vb).powi(2) / denom
        } else {
            na + nb - 2.0
        };
        out.insert(
            name.clone(),
            Comparison {
                mean_diff: diff,
                welch_t,
                dof,
            },
        );
    }
    Ok(out)
}
