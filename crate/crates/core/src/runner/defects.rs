//! Append-only defect log. Each line is a full [`DefectRecord`]; a later
//! line with the same id supersedes earlier ones.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::batch::BatchReport;
use super::exec::{timestamp, TestResult, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefectStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectRecord {
    pub defect_id: String,
    pub case_id: String,
    pub opened_at: String,
    pub summary: String,
    pub step_index: usize,
    pub expected: String,
    pub actual: String,
    pub status: DefectStatus,
    pub closed_by_batch: Option<String>,
    pub last_seen_batch: String,
    pub occurrences: u32,
}

impl DefectRecord {
    fn matches(&self, r: &TestResult) -> bool {
        r.failed_step.as_ref().is_some_and(|f| {
            self.case_id == r.case_id
                && self.step_index == f.index
                && self.expected == f.expected
                && self.actual == f.actual
        })
    }
}

#[derive(Debug, Clone)]
pub struct DefectStore {
    path: PathBuf,
    current: BTreeMap<String, DefectRecord>,
}

impl DefectStore {
    /// Loads the log at `path`; a missing file is an empty store.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut current = BTreeMap::new();
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: DefectRecord = serde_json::from_str(line).map_err(|e| {
                        io::Error::new(
                            io::ErrorKind::InvalidData,
                            format!("{}:{}: {e}", path.display(), i + 1),
                        )
                    })?;
                    current.insert(rec.defect_id.clone(), rec);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(DefectStore { path, current })
    }

    /// Latest version of every defect, by id.
    pub fn records(&self) -> impl Iterator<Item = &DefectRecord> {
        self.current.values()
    }

    pub fn open_defects(&self) -> impl Iterator<Item = &DefectRecord> {
        self.records().filter(|d| d.status == DefectStatus::Open)
    }

    fn next_id(&self) -> String {
        let n = self
            .current
            .keys()
            .filter_map(|k| k.strip_prefix("D-")?.parse::<u32>().ok())
            .max()
            .unwrap_or(0);
        format!("D-{:04}", n + 1)
    }

    /// Updates caused by one result: a failure opens a defect or touches the
    /// open one with the same signature; a pass closes the case's open
    /// defects. Errors leave defects alone.
    pub fn track_result(
        &mut self,
        result: &TestResult,
        batch_id: &str,
        now: DateTime<Utc>,
    ) -> Vec<DefectRecord> {
        let mut changed = Vec::new();
        match result.verdict {
            Verdict::Fail => {
                let f = result
                    .failed_step
                    .as_ref()
                    .expect("Fail carries a failed step");
                let existing = self
                    .current
                    .values_mut()
                    .find(|d| d.status == DefectStatus::Open && d.matches(result));
                let rec = match existing {
                    Some(d) => {
                        d.occurrences += 1;
                        d.last_seen_batch = batch_id.to_string();
                        d.clone()
                    }
                    None => {
                        let d = DefectRecord {
                            defect_id: self.next_id(),
                            case_id: result.case_id.clone(),
                            opened_at: timestamp(now),
                            summary: format!(
                                "step {} '{}': expected {}, got {}",
                                f.index, f.step, f.expected, f.actual
                            ),
                            step_index: f.index,
                            expected: f.expected.clone(),
                            actual: f.actual.clone(),
                            status: DefectStatus::Open,
                            closed_by_batch: None,
                            last_seen_batch: batch_id.to_string(),
                            occurrences: 1,
                        };
                        self.current.insert(d.defect_id.clone(), d.clone());
                        d
                    }
                };
                changed.push(rec);
            }
            Verdict::Pass => {
                for d in self.current.values_mut() {
                    if d.status == DefectStatus::Open && d.case_id == result.case_id {
                        d.status = DefectStatus::Closed;
                        d.closed_by_batch = Some(batch_id.to_string());
                        changed.push(d.clone());
                    }
                }
            }
            Verdict::Error => {}
        }
        changed
    }

    /// Tracks every result of `batch` and appends the changes to the log.
    pub fn track(
        &mut self,
        batch: &BatchReport,
        now: DateTime<Utc>,
    ) -> io::Result<Vec<DefectRecord>> {
        let mut changed = Vec::new();
        for r in &batch.results {
            changed.extend(self.track_result(r, &batch.batch_id, now));
        }
        if !changed.is_empty() {
            if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)?;
            for d in &changed {
                writeln!(
                    f,
                    "{}",
                    serde_json::to_string(d).expect("defect serializes")
                )?;
            }
        }
        Ok(changed)
    }
}
