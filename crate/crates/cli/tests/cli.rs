use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn artts(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artts"))
        .arg("--workspace")
        .arg(ws)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &to.join(e.file_name()));
        } else {
            fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    }
}

/// A scratch workspace holding copies of the suite and the station.
fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&root().join("suite"), &tmp.path().join("suite"));
    copy_dir(&root().join("stations"), &tmp.path().join("stations"));
    tmp
}

#[test]
fn usage_errors_exit_2() {
    let ws = root();
    assert_eq!(artts(&ws, &["bogus"]).status.code(), Some(2));
    assert_eq!(artts(&ws, &["run"]).status.code(), Some(2));
    assert_eq!(
        artts(&ws, &["run", "--suite", "suite/suite.json", "--frobnicate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        artts(&ws, &["coverage", "--level", "most"]).status.code(),
        Some(2)
    );
    let o = artts(
        &ws,
        &[
            "run",
            "--suite",
            "suite/suite.json",
            "--out",
            "/dev/null/x",
            "NOPE",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(artts(&ws, &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_files_exit_3() {
    let ws = root();
    assert_eq!(
        artts(&ws, &["lint", "--station", "no/such/dir"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        artts(&ws, &["run", "--suite", "no/suite.json"])
            .status
            .code(),
        Some(3)
    );
    let o = artts(
        &ws,
        &[
            "coverage",
            "--requirements",
            "nope.txt",
            "--links",
            "suite/links.txt",
            "--suite",
            "suite/suite.json",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.txt"));
}

#[test]
fn lint_reports_broken_programs() {
    let tmp = workspace();
    let ws = tmp.path();
    let o = artts(ws, &["lint", "--station", "stations/station-a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rung = ws.join("stations/station-a/chain_b.rung");
    let src = fs::read_to_string(&rung).unwrap();
    fs::write(
        &rung,
        src.replace("rung NX_SEARCH_2 := ", "rung NX_SEARCH_2 := NOPE AND "),
    )
    .unwrap();
    let o = artts(ws, &["lint", "--station", "stations/station-a"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("undeclared point NOPE"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn unlinked_requirement_fails_coverage() {
    let tmp = workspace();
    let ws = tmp.path();
    let links = ws.join("suite/links.txt");
    let text = fs::read_to_string(&links).unwrap();
    fs::write(&links, text.replace("DR-1.2.3 -> ", "# DR-1.2.3 -> ")).unwrap();
    let args = [
        "coverage",
        "--requirements",
        "suite/requirements.txt",
        "--links",
        "suite/links.txt",
        "--suite",
        "suite/suite.json",
    ];
    let o = artts(ws, &args);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("uncovered DR-1.2.3\n"), "{out}");
    assert!(out
        .lines()
        .any(|l| l.starts_with("high") && l.ends_with("100.0%")));
    // a level that is still complete passes
    let mut high = args.to_vec();
    high.extend(["--level", "high"]);
    assert_eq!(artts(ws, &high).status.code(), Some(0));
}

#[test]
fn failing_case_exits_1_and_opens_a_defect() {
    let tmp = workspace();
    let ws = tmp.path();
    let case = ws.join("suite/cases/TC-031.tc");
    let src = fs::read_to_string(&case).unwrap();
    fs::write(
        &case,
        src.replace("expect SECURED_LED == 1", "expect SECURED_LED == 0"),
    )
    .unwrap();
    let o = artts(
        ws,
        &[
            "run",
            "--suite",
            "suite/suite.json",
            "--out",
            "out",
            "--seed",
            "42",
            "TR-3",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let report = stdout(&o);
    assert!(
        report.contains("totals: 12 cases, pass 11, fail 1, error 0"),
        "{report}"
    );
    let defects = fs::read_to_string(ws.join("out/defects.jsonl")).unwrap();
    assert_eq!(defects.lines().count(), 1);
    assert!(defects.contains("\"TC-031\"") && defects.contains("D-0001"));
    let summary = fs::read_dir(ws.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_str().unwrap().ends_with(".batch.json"))
        .unwrap();
    let batch: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(batch["seed"], 42);
    assert_eq!(batch["selection"], serde_json::json!(["TR-3"]));

    // report re-renders the stored batch and adds the hierarchy
    let o = artts(
        ws,
        &[
            "report",
            "--results",
            summary.to_str().unwrap(),
            "--requirements",
            "suite/requirements.txt",
            "--links",
            "suite/links.txt",
            "--suite",
            "suite/suite.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("TC-031  Fail"), "{out}");
    assert!(out.contains("TR-3=Fail"), "{out}");
}

#[test]
fn records_format_is_one_json_object_per_line() {
    let tmp = workspace();
    let o = artts(
        tmp.path(),
        &[
            "run",
            "--suite",
            "suite/suite.json",
            "--format",
            "records",
            "TR-1",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 13);
    assert!(tmp.path().join("results/report.txt").exists());
}

#[test]
fn serve_reports_bind_failure() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let o = artts(
        &root(),
        &[
            "serve",
            "--station",
            "stations/station-a",
            "--listen",
            &addr,
            "--no-bridge",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
}
