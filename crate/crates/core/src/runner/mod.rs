//! Test scripts, case and batch execution, defect tracking and reports.

mod batch;
mod defects;
mod exec;
mod script;

pub use batch::{
    render_report, run_batch, BatchOptions, BatchReport, ReportFormat, Suite, SuiteError, Totals,
};
pub use defects::{DefectRecord, DefectStatus, DefectStore};
pub use exec::{run_case, timestamp, FailedStep, TestResult, Verdict};
pub use script::{parse_test_script, TestCase, TestStep};
