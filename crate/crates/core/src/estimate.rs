use serde::{Deserialize, Serialize};

/// A Monte-Carlo quantity with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub replicas: u64,
    /// Replicas that hit a cap and carry no value.
    pub censored: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            replicas: 0,
            censored: 0,
        }
    }

    /// Proportion of `successes` in `trials` with binomial standard error.
    pub fn proportion(successes: u64, trials: u64) -> Self {
        let n = trials.max(1) as f64;
        let p = successes as f64 / n;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            replicas: trials,
            censored: 0,
        }
    }

    /// Sample mean with the iid standard error.
    pub fn mean(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr: (var / n).sqrt(),
            replicas: samples.len() as u64,
            censored: 0,
        }
    }

    /// Mean of a correlated series with a batch-means standard error.
    pub fn batch_means(series: &[f64], batches: usize) -> Self {
        let batches = batches.clamp(2, series.len().max(2));
        let size = series.len() / batches;
        if size == 0 {
            return Self::mean(series);
        }
        let means: Vec<f64> = series
            .chunks_exact(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let mut e = Self::mean(&means);
        e.value = series.iter().sum::<f64>() / series.len() as f64;
        e.replicas = series.len() as u64;
        e
    }
}
