use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dsl::Diagnostics;
use crate::engine::Engine;
use crate::station::{StationError, StationModel};
use crate::trace::{Status, TestUnitTree, TraceError};

use super::exec::{run_case, timestamp, TestResult, Verdict};
use super::script::{parse_test_script, TestCase};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path}:\n{diags}")]
    Script { path: PathBuf, diags: Diagnostics },
    #[error("{path}: file declares case {found}, expected {expected}")]
    CaseId {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

fn read(path: &Path) -> Result<String, SuiteError> {
    fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A test-unit tree together with its parsed case scripts.
#[derive(Debug, Clone)]
pub struct Suite {
    /// Directory that relative paths in the tree resolve against.
    pub root: PathBuf,
    pub tree: TestUnitTree,
    pub cases: BTreeMap<String, TestCase>,
}

impl Suite {
    /// Reads `suite.json` and every `<case_dir>/<id>.tc` it names.
    pub fn load(suite_json: impl AsRef<Path>) -> Result<Suite, SuiteError> {
        let path = suite_json.as_ref();
        let tree = TestUnitTree::from_json(&read(path)?)?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut cases = BTreeMap::new();
        for id in &tree.cases {
            let file = root.join(&tree.case_dir).join(format!("{id}.tc"));
            let case = parse_test_script(&read(&file)?).map_err(|diags| SuiteError::Script {
                path: file.clone(),
                diags,
            })?;
            if &case.id != id {
                return Err(SuiteError::CaseId {
                    path: file,
                    expected: id.clone(),
                    found: case.id,
                });
            }
            cases.insert(id.clone(), case);
        }
        Ok(Suite { root, tree, cases })
    }

    pub fn station_dir(&self, build: &str) -> Option<PathBuf> {
        self.tree.build(build).map(|b| self.root.join(&b.station))
    }

    /// Every build id, in file order.
    pub fn all_builds(&self) -> Vec<String> {
        self.tree.builds.iter().map(|b| b.id.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub batch_id: String,
    /// Used for every build instead of the build's own station.
    pub station: Option<Arc<StationModel>>,
    /// Recorded in the report.
    pub seed: Option<u64>,
    pub clock: fn() -> DateTime<Utc>,
}

impl BatchOptions {
    pub fn new(batch_id: impl Into<String>) -> Self {
        BatchOptions {
            batch_id: batch_id.into(),
            station: None,
            seed: None,
            clock: Utc::now,
        }
    }

    /// Batch id derived from the wall clock, e.g. `20261016T093015123Z`.
    pub fn timestamped(now: DateTime<Utc>) -> Self {
        Self::new(now.format("%Y%m%dT%H%M%S%3fZ").to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
}

impl Totals {
    pub fn count(&self) -> usize {
        self.pass + self.fail + self.error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub batch_id: String,
    pub selection: Vec<String>,
    pub seed: Option<u64>,
    /// In execution order.
    pub results: Vec<TestResult>,
    pub totals: Totals,
    pub wall_elapsed_ms: u64,
    pub sim_elapsed_ms: u64,
    pub mean_sim_per_case_ms: f64,
}

impl BatchReport {
    /// Totals and timing derived from `results`.
    pub fn new(
        batch_id: String,
        selection: Vec<String>,
        seed: Option<u64>,
        results: Vec<TestResult>,
        wall_elapsed_ms: u64,
    ) -> Self {
        let mut totals = Totals::default();
        for r in &results {
            match r.verdict {
                Verdict::Pass => totals.pass += 1,
                Verdict::Fail => totals.fail += 1,
                Verdict::Error => totals.error += 1,
            }
        }
        let sim_elapsed_ms: u64 = results.iter().map(|r| r.sim_duration_ms).sum();
        let mean_sim_per_case_ms = if results.is_empty() {
            0.0
        } else {
            sim_elapsed_ms as f64 / results.len() as f64
        };
        BatchReport {
            batch_id,
            selection,
            seed,
            results,
            totals,
            wall_elapsed_ms,
            sim_elapsed_ms,
            mean_sim_per_case_ms,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.totals.pass == self.results.len()
    }

    pub fn case_statuses(&self) -> BTreeMap<String, Status> {
        self.results
            .iter()
            .map(|r| {
                let s = match r.verdict {
                    Verdict::Pass => Status::Pass,
                    Verdict::Fail => Status::Fail,
                    Verdict::Error => Status::Error,
                };
                (r.case_id.clone(), s)
            })
            .collect()
    }

    /// One result per line.
    pub fn results_jsonl(&self) -> String {
        self.results
            .iter()
            .map(|r| serde_json::to_string(r).expect("results serialize") + "\n")
            .collect()
    }

    /// Writes `<batch>.jsonl`, `<batch>.batch.json` and `report.txt`.
    pub fn write(&self, out_dir: &Path) -> io::Result<()> {
        fs::create_dir_all(out_dir)?;
        fs::write(
            out_dir.join(format!("{}.jsonl", self.batch_id)),
            self.results_jsonl(),
        )?;
        let summary = serde_json::to_string_pretty(self).expect("report serializes") + "\n";
        fs::write(
            out_dir.join(format!("{}.batch.json", self.batch_id)),
            summary,
        )?;
        fs::write(
            out_dir.join("report.txt"),
            render_report(self, ReportFormat::Text),
        )
    }

    pub fn read_results(path: &Path) -> io::Result<Vec<TestResult>> {
        fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(io::Error::other))
            .collect()
    }
}

/// Runs the cases under `selection` (build, run or case ids) in tree order.
/// Each case starts from a reset engine; the first station that fails to
/// load ends the batch, and every case not yet run is reported as Error.
pub fn run_batch(
    suite: &Suite,
    selection: &[String],
    opts: &BatchOptions,
) -> Result<BatchReport, SuiteError> {
    let ids = suite.tree.select(selection)?;
    let started = Instant::now();
    let mut engines: BTreeMap<PathBuf, Engine> = BTreeMap::new();
    let mut results = Vec::with_capacity(ids.len());
    let mut aborted: Option<String> = None;
    for id in ids {
        let case = &suite.cases[id];
        let now = (opts.clock)();
        if let Some(why) = &aborted {
            results.push(error_result(case, now, format!("skipped: {why}")));
            continue;
        }
        let key = match &opts.station {
            Some(_) => PathBuf::new(),
            None => suite
                .tree
                .build_of_case(id)
                .map(|b| suite.root.join(&b.station))
                .expect("validated tree"),
        };
        if !engines.contains_key(&key) {
            match load_engine(&key, opts) {
                Ok(e) => {
                    engines.insert(key.clone(), e);
                }
                Err(why) => {
                    results.push(error_result(case, now, why.clone()));
                    aborted = Some(why);
                    continue;
                }
            }
        }
        let engine = engines.get_mut(&key).expect("inserted above");
        let result = run_case(case, engine, now);
        log::debug!("{} {}", result.case_id, result.verdict.as_str());
        results.push(result);
    }
    let wall = started.elapsed().as_millis() as u64;
    Ok(BatchReport::new(
        opts.batch_id.clone(),
        selection.to_vec(),
        opts.seed,
        results,
        wall,
    ))
}

fn load_engine(dir: &Path, opts: &BatchOptions) -> Result<Engine, String> {
    let station =
        match &opts.station {
            Some(s) => Arc::clone(s),
            None => Arc::new(StationModel::load_dir(dir).map_err(|e: StationError| {
                format!("station {} failed to load: {e}", dir.display())
            })?),
        };
    Engine::load(station)
        .map(|e| e.with_seed(opts.seed.unwrap_or(0)))
        .map_err(|e| format!("station {} failed to load: {e}", dir.display()))
}

fn error_result(case: &TestCase, now: DateTime<Utc>, message: String) -> TestResult {
    TestResult {
        case_id: case.id.clone(),
        title: case.title.clone(),
        verdict: Verdict::Error,
        started_at: timestamp(now),
        sim_duration_ms: 0,
        failed_step: None,
        message: Some(message),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    /// The results as JSON lines followed by one summary line.
    Records,
}

pub fn render_report(batch: &BatchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Records => {
            let mut out = batch.results_jsonl();
            let summary = serde_json::json!({
                "batch_id": batch.batch_id,
                "totals": batch.totals,
                "sim_elapsed_ms": batch.sim_elapsed_ms,
                "wall_elapsed_ms": batch.wall_elapsed_ms,
                "mean_sim_per_case_ms": batch.mean_sim_per_case_ms,
            });
            out.push_str(&summary.to_string());
            out.push('\n');
            out
        }
        ReportFormat::Text => render_text(batch),
    }
}

fn render_text(batch: &BatchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "batch {}", batch.batch_id);
    let _ = writeln!(out, "selection: {}", batch.selection.join(" "));
    if let Some(seed) = batch.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    let id_w = batch
        .results
        .iter()
        .map(|r| r.case_id.len())
        .max()
        .unwrap_or(0)
        .max(4);
    let _ = writeln!(
        out,
        "{:<id_w$}  {:<7}  {:<24}  {:>8}  TITLE",
        "CASE", "VERDICT", "STARTED", "SIM_MS"
    );
    for r in &batch.results {
        let _ = writeln!(
            out,
            "{:<id_w$}  {:<7}  {:<24}  {:>8}  {}",
            r.case_id,
            r.verdict.as_str(),
            r.started_at,
            r.sim_duration_ms,
            r.title
        );
        if let Some(f) = &r.failed_step {
            let _ = writeln!(
                out,
                "{:id_w$}    step {}: {} (expected {}, got {})",
                "", f.index, f.step, f.expected, f.actual
            );
        }
        if let Some(m) = &r.message {
            let _ = writeln!(out, "{:id_w$}    {m}", "");
        }
    }
    let t = batch.totals;
    let _ = writeln!(
        out,
        "totals: {} cases, pass {}, fail {}, error {}",
        t.count(),
        t.pass,
        t.fail,
        t.error
    );
    let _ = writeln!(
        out,
        "sim elapsed {} ms, mean {:.3} ms/case; wall elapsed {} ms",
        batch.sim_elapsed_ms, batch.mean_sim_per_case_ms, batch.wall_elapsed_ms
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: &str, verdict: Verdict, sim: u64) -> TestResult {
        TestResult {
            case_id: id.into(),
            title: "t".into(),
            verdict,
            started_at: timestamp(DateTime::UNIX_EPOCH),
            sim_duration_ms: sim,
            failed_step: None,
            message: None,
        }
    }

    #[test]
    fn accounting() {
        let b = BatchReport::new(
            "b".into(),
            vec![],
            None,
            vec![
                result("a", Verdict::Pass, 10),
                result("b", Verdict::Fail, 20),
                result("c", Verdict::Error, 40),
            ],
            5,
        );
        assert_eq!(
            b.totals,
            Totals {
                pass: 1,
                fail: 1,
                error: 1
            }
        );
        assert_eq!(b.sim_elapsed_ms, 70);
        assert_eq!(b.mean_sim_per_case_ms, 70.0 / 3.0);
        assert!(!b.all_passed());
        assert_eq!(b.case_statuses()["b"], Status::Fail);
    }

    #[test]
    fn empty_batch_report() {
        let b = BatchReport::new("empty".into(), vec![], None, vec![], 0);
        assert!(b.all_passed());
        let text = render_report(&b, ReportFormat::Text);
        assert!(text.starts_with("batch empty\n"));
        assert!(text.contains("totals: 0 cases, pass 0, fail 0, error 0"));
        assert_eq!(text, render_report(&b, ReportFormat::Text));
        let rec = render_report(&b, ReportFormat::Records);
        assert_eq!(rec.lines().count(), 1);
    }

    #[test]
    fn batch_id_from_clock() {
        let t = DateTime::parse_from_rfc3339("2026-10-16T09:30:15.123Z")
            .unwrap()
            .with_timezone(&Utc);
        assert_eq!(BatchOptions::timestamped(t).batch_id, "20261016T093015123Z");
    }
}
