use super::{io_err, mean_std, normalized_return, reference_returns, BenchError, Manifest, DONE_FILE, MANIFEST_FILE};
use crate::trainer::{TrainConfig, TrainingLog, CONFIG_FILE, LOG_FILE};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Episodes averaged per seed for the final-policy metric.
pub const FINAL_WINDOW: usize = 100;

/// Final-policy performance of one finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub dir: PathBuf,
    pub domain: String,
    pub variant: String,
    pub seed: u64,
    /// Mean discounted return of the last [`FINAL_WINDOW`] episodes.
    pub final_return: f64,
    pub final_success: f64,
    pub episodes: usize,
    pub env_steps: u64,
}

/// Reads a run directory's config and log.
pub fn read_run(dir: &Path) -> Result<RunResult, BenchError> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&cfg_path).map_err(io_err(&cfg_path))?;
    let config: TrainConfig = serde_json::from_str(&text).map_err(|e| BenchError::Format {
        path: cfg_path.clone(),
        message: e.to_string(),
    })?;
    let log = TrainingLog::read(&dir.join(LOG_FILE))?;
    let episodes: Vec<_> = log.episodes().collect();
    if episodes.is_empty() {
        return Err(BenchError::MissingRun(dir.to_path_buf()));
    }
    let tail = &episodes[episodes.len().saturating_sub(FINAL_WINDOW)..];
    let n = tail.len() as f64;
    Ok(RunResult {
        dir: dir.to_path_buf(),
        domain: config.domain,
        variant: config.variant.to_string(),
        seed: config.seed,
        final_return: tail.iter().map(|e| e.ret).sum::<f64>() / n,
        final_success: tail.iter().filter(|e| e.success).count() as f64 / n,
        episodes: episodes.len(),
        env_steps: episodes.last().map_or(0, |e| e.env_steps),
    })
}

/// Finished runs below `root` (directories holding a done marker), plus
/// directories with a log but no marker.
pub fn collect_runs(root: &Path) -> Result<(Vec<RunResult>, Vec<PathBuf>), BenchError> {
    let mut done = Vec::new();
    let mut unfinished = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join(LOG_FILE).exists() {
            if dir.join(DONE_FILE).exists() {
                done.push(read_run(&dir)?);
            } else {
                unfinished.push(dir.clone());
            }
        }
        let entries = std::fs::read_dir(&dir).map_err(io_err(&dir))?;
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            if entry.file_type().map_err(io_err(&dir))?.is_dir() {
                stack.push(entry.path());
            }
        }
    }
    done.sort_by(|a, b| a.dir.cmp(&b.dir));
    unfinished.sort();
    Ok((done, unfinished))
}

/// One (domain, variant) cell aggregated over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub domain: String,
    pub variant: String,
    pub seeds: Vec<u64>,
    pub return_mean: f64,
    pub return_std: f64,
    pub success_mean: f64,
    pub success_std: f64,
    /// Normalized against the bundled SARSOP and random references, for
    /// domains that have them.
    pub normalized: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// Cells or runs that were expected but not finished.
    pub missing: Vec<String>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "domain,variant,seeds,return_mean,return_std,success_mean,success_std,normalized_mean,normalized_std\n",
        );
        for r in &self.rows {
            let (nm, ns) = r.normalized.map_or((String::new(), String::new()), |(m, s)| (m.to_string(), s.to_string()));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{nm},{ns}",
                r.domain,
                r.variant,
                r.seeds.len(),
                r.return_mean,
                r.return_std,
                r.success_mean,
                r.success_std
            );
        }
        s
    }
}

/// Mean ± std over seeds of each run's final-policy metric.
pub fn summarize(runs: &[RunResult]) -> ResultTable {
    let mut cells: BTreeMap<(String, String), Vec<&RunResult>> = BTreeMap::new();
    for r in runs {
        cells.entry((r.domain.clone(), r.variant.clone())).or_default().push(r);
    }
    let rows = cells
        .into_iter()
        .map(|((domain, variant), runs)| {
            let returns: Vec<f64> = runs.iter().map(|r| r.final_return).collect();
            let success: Vec<f64> = runs.iter().map(|r| r.final_success).collect();
            let (return_mean, return_std) = mean_std(&returns);
            let (success_mean, success_std) = mean_std(&success);
            let normalized = reference_returns(&domain).and_then(|rf| {
                let norm: Result<Vec<f64>, _> = returns.iter().map(|&x| normalized_return(x, rf.sarsop, rf.random)).collect();
                norm.ok().map(|v| mean_std(&v))
            });
            ResultRow {
                seeds: runs.iter().map(|r| r.seed).collect(),
                domain,
                variant,
                return_mean,
                return_std,
                success_mean,
                success_std,
                normalized,
            }
        })
        .collect();
    ResultTable { rows, missing: Vec::new() }
}

/// Summarizes every finished run under `root`, reporting runs listed in
/// any manifest below it that have not finished.
pub fn summarize_dir(root: &Path) -> Result<ResultTable, BenchError> {
    let (runs, unfinished) = collect_runs(root)?;
    let mut table = summarize(&runs);
    let mut missing: Vec<String> = unfinished.iter().map(|d| format!("{} (unfinished)", d.display())).collect();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.exists() {
            let m = Manifest::read(&manifest)?;
            for run in &m.runs {
                let d = dir.join(&run.dir);
                if !d.join(DONE_FILE).exists() && !unfinished.contains(&d) {
                    missing.push(format!("{} {} seed {} (not started)", m.spec.domain, run.variant, run.seed));
                }
            }
        }
        for entry in std::fs::read_dir(&dir).map_err(io_err(&dir))?.flatten() {
            if entry.path().is_dir() {
                stack.push(entry.path());
            }
        }
    }
    missing.sort();
    table.missing = missing;
    Ok(table)
}
