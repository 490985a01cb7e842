//! Multi-seed experiments, learning-curve aggregation, normalized-return
//! tables and belief-reconstruction exports.

mod beliefs;
pub mod checks;
mod experiment;
mod summary;

pub use beliefs::{belief_comparison, export_belief_comparison, kl_divergence, BeliefComparison, BeliefFrame};
pub use experiment::{run_experiment, ExistingRuns, ExperimentReport, ExperimentSpec, Manifest, ManifestRun, DONE_FILE, MANIFEST_FILE};
pub use summary::{collect_runs, read_run, summarize, summarize_dir, ResultRow, ResultTable, RunResult, FINAL_WINDOW};

use crate::trainer::TrainError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("SARSOP and random references coincide ({0}); normalization is undefined")]
    DegenerateNormalization(f64),
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("run directory {0} holds an unfinished run; pass resume or overwrite")]
    PartialRun(PathBuf),
    #[error("{0} has no completed run")]
    MissingRun(PathBuf),
    #[error("checkpoint has no belief head (variant {0})")]
    NotBgn(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Element `i` is the mean of the last `min(i + 1, window)` values.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &series[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// `(raw − random) / (sarsop − random)`: 1 at the SARSOP return, 0 at the
/// random agent's.
pub fn normalized_return(raw: f64, sarsop: f64, random: f64) -> Result<f64, BenchError> {
    let denom = sarsop - random;
    if denom == 0.0 || !denom.is_finite() {
        return Err(BenchError::DegenerateNormalization(sarsop));
    }
    Ok((raw - random) / denom)
}

/// Published mean raw returns for one classic domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceReturns {
    pub domain: &'static str,
    /// `(variant, mean return)` for the five learning agents.
    pub agents: [(&'static str, f64); 5],
    pub sarsop: f64,
    pub random: f64,
}

/// Reference raw returns, averaged over 10 seeds.
pub const REFERENCE_RETURNS: [ReferenceReturns; 4] = [
    ReferenceReturns {
        domain: "hallway",
        agents: [("ah-ch", 0.50), ("ah-ch+bgn", 0.54), ("ah-cs", 0.46), ("ab-cb", 0.53), ("ah-cb", 0.48)],
        sarsop: 0.53,
        random: 0.05,
    },
    ReferenceReturns {
        domain: "hallway-2",
        agents: [("ah-ch", 0.1), ("ah-ch+bgn", 0.35), ("ah-cs", 0.26), ("ab-cb", 0.36), ("ah-cb", 0.29)],
        sarsop: 0.35,
        random: 0.03,
    },
    ReferenceReturns {
        domain: "rocksample-4-4",
        agents: [("ah-ch", 7.79), ("ah-ch+bgn", 14.14), ("ah-cs", 6.73), ("ab-cb", 13.94), ("ah-cb", 6.1)],
        sarsop: 17.75,
        random: -62.0,
    },
    ReferenceReturns {
        domain: "rocksample-5-5",
        agents: [("ah-ch", 6.23), ("ah-ch+bgn", 14.71), ("ah-cs", 6.52), ("ab-cb", 15.22), ("ah-cb", 6.53)],
        sarsop: 19.2,
        random: -61.0,
    },
];

pub fn reference_returns(domain: &str) -> Option<&'static ReferenceReturns> {
    REFERENCE_RETURNS.iter().find(|r| r.domain == domain)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[0.0, 1.0], 2), vec![0.0, 0.5]);
        assert_eq!(moving_average(&[3.0, 1.0, 4.0], 1), vec![3.0, 1.0, 4.0]);
        assert_eq!(moving_average(&[2.0; 5], 3), vec![2.0; 5]);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn normalization_endpoints_and_errors() {
        assert_eq!(normalized_return(0.53, 0.53, 0.05).unwrap(), 1.0);
        assert_eq!(normalized_return(0.05, 0.53, 0.05).unwrap(), 0.0);
        assert!((normalized_return(0.1, 0.35, 0.03).unwrap() - 0.21875).abs() < 1e-12);
        assert!(matches!(normalized_return(1.0, 0.2, 0.2), Err(BenchError::DegenerateNormalization(_))));
    }

    #[test]
    fn reference_lookup() {
        let h = reference_returns("hallway").unwrap();
        assert_eq!((h.sarsop, h.random), (0.53, 0.05));
        assert!(reference_returns("topplate").is_none());
    }

    #[test]
    fn single_value_has_zero_std() {
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
