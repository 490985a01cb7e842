use super::{LossTerms, TrainError};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// Environment steps over all workers when the episode ended.
    pub env_steps: u64,
    /// Discounted return.
    #[serde(rename = "return")]
    pub ret: f64,
    pub success: bool,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub update: u64,
    pub env_steps: u64,
    #[serde(flatten)]
    pub losses: LossTerms,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    pub beta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogRecord {
    Episode(EpisodeRecord),
    Update(UpdateRecord),
}

impl LogRecord {
    /// One JSON line without the trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }
}

/// Episode and update records in emission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn episodes(&self) -> impl Iterator<Item = &EpisodeRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Episode(e) => Some(e),
            _ => None,
        })
    }

    pub fn updates(&self) -> impl Iterator<Item = &UpdateRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Update(u) => Some(u),
            _ => None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(w, "{}", r.to_json_line())?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn from_reader<R: BufRead>(r: R) -> Result<Self, TrainError> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| TrainError::Log(format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| TrainError::Log(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        Ok(TrainingLog { records })
    }

    pub fn read(path: &Path) -> Result<Self, TrainError> {
        let f = std::fs::File::open(path).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(BufReader::new(f))
    }
}
