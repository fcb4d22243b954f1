use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use artts_core::bus::{self, Bus, ServeOptions, Server};
use artts_core::dsl::Severity;
use artts_core::engine::Engine;
use artts_core::runner::{
    render_report, run_batch, BatchOptions, BatchReport, DefectStore, ReportFormat, Suite,
    TestResult,
};
use artts_core::station::{StationError, StationModel};
use artts_core::trace::{
    build_matrices, coverage, load_links, load_requirements, roll_up, HierarchyReport, Level,
    Matrices, RequirementSet, TestUnitTree,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Exit statuses; part of the command-line contract.
const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ENV: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "artts",
    version,
    about = "Automated real-time test platform for a dual-chain PLC interlock"
)]
struct Cli {
    /// Root that relative paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    workspace: PathBuf,

    /// Recorded in batch reports.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    High,
    Intermediate,
    Detail,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Records,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Records => ReportFormat::Records,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Stepped,
    Realtime,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Parse and lint a station's chain programs.
    Lint {
        #[arg(long)]
        station: PathBuf,
    },
    /// Run test cases and write results, report and defects.
    Run {
        #[arg(long)]
        suite: PathBuf,
        /// Use this station for every build instead of the builds' own.
        #[arg(long)]
        station: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Defect log; defaults to defects.jsonl in the output directory.
        #[arg(long)]
        defects: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Builds, runs or cases to run; all builds when omitted.
        ids: Vec<String>,
    },
    /// Requirement coverage by the test-unit tree.
    Coverage {
        #[arg(long)]
        requirements: PathBuf,
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        level: LevelArg,
        /// Results file (.jsonl) for the passing column.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Serve the station over the bus protocol and the browser bridge.
    Serve {
        #[arg(long)]
        station: PathBuf,
        #[arg(long, default_value_t = format!("127.0.0.1:{}", bus::DEFAULT_TCP_PORT))]
        listen: String,
        #[arg(long, default_value_t = format!("127.0.0.1:{}", bus::DEFAULT_BRIDGE_PORT))]
        bridge: String,
        #[arg(long, conflicts_with = "bridge")]
        no_bridge: bool,
        #[arg(long, value_enum, default_value = "stepped")]
        mode: ModeArg,
        /// Static files served on the bridge port.
        #[arg(long)]
        hmi_dir: Option<PathBuf>,
    },
    /// Render a stored batch (.batch.json or .jsonl), optionally with the
    /// requirement hierarchy.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, requires_all = ["links", "suite"])]
        requirements: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        suite: Option<PathBuf>,
    },
}

/// A failed command: its exit status and what to print on stderr.
struct Failure(u8, String);

fn env_err(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_ENV, e.to_string())
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("artts: {msg}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let ws = |p: &Path| cli.workspace.join(p);
    match &cli.verb {
        Verb::Lint { station } => lint(&ws(station)),
        Verb::Run {
            suite,
            station,
            out,
            defects,
            format,
            ids,
        } => {
            let out = ws(out);
            let defects = defects
                .as_deref()
                .map(ws)
                .unwrap_or_else(|| out.join("defects.jsonl"));
            run(
                &ws(suite),
                station.as_deref().map(ws).as_deref(),
                &out,
                &defects,
                (*format).into(),
                ids,
                cli.seed,
            )
        }
        Verb::Coverage {
            requirements,
            links,
            suite,
            level,
            results,
        } => coverage_cmd(
            &ws(requirements),
            &ws(links),
            &ws(suite),
            *level,
            results.as_deref().map(ws).as_deref(),
        ),
        Verb::Serve {
            station,
            listen,
            bridge,
            no_bridge,
            mode,
            hmi_dir,
        } => {
            let mode = match mode {
                ModeArg::Stepped => bus::Mode::Stepped,
                ModeArg::Realtime => bus::Mode::Realtime,
            };
            let opts = ServeOptions {
                listen: listen.clone(),
                bridge: (!no_bridge).then(|| bridge.clone()),
                hmi_dir: hmi_dir.as_deref().map(ws),
                ..ServeOptions::default()
            };
            serve(&ws(station), mode, &opts)
        }
        Verb::Report {
            results,
            format,
            requirements,
            links,
            suite,
        } => {
            let trace = requirements.as_ref().map(|r| {
                (
                    ws(r),
                    ws(links.as_ref().expect("clap requires links")),
                    ws(suite.as_ref().expect("clap requires suite")),
                )
            });
            report(&ws(results), (*format).into(), trace)
        }
    }
}

fn lint(dir: &Path) -> Outcome {
    let station = match StationModel::load_dir(dir) {
        Ok(s) => s,
        Err(StationError::Io { path, source }) => return Err(env_err(format!("{path}: {source}"))),
        Err(e) => {
            println!("{}: {e}", dir.display());
            return Ok(EXIT_FAIL);
        }
    };
    let mut errors = 0;
    for (chain, d) in station.lint() {
        if d.severity == Severity::Error {
            errors += 1;
        }
        println!("chain {chain}: {d}");
    }
    if let Err(e) = Engine::load(station) {
        println!("{}: {e}", dir.display());
        errors += 1;
    }
    if errors == 0 {
        println!("{}: ok", dir.display());
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FAIL)
    }
}

fn run(
    suite_path: &Path,
    station: Option<&Path>,
    out: &Path,
    defects: &Path,
    format: ReportFormat,
    ids: &[String],
    seed: Option<u64>,
) -> Outcome {
    let suite = Suite::load(suite_path).map_err(env_err)?;
    let mut opts = BatchOptions::timestamped(chrono::Utc::now());
    opts.seed = seed;
    if let Some(dir) = station {
        let model =
            StationModel::load_dir(dir).map_err(|e| env_err(format!("{}: {e}", dir.display())))?;
        Engine::load(model.clone()).map_err(|e| env_err(format!("{}: {e}", dir.display())))?;
        opts.station = Some(Arc::new(model));
    }
    let selection = if ids.is_empty() {
        suite.all_builds()
    } else {
        ids.to_vec()
    };
    let batch =
        run_batch(&suite, &selection, &opts).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    batch
        .write(out)
        .map_err(|e| env_err(format!("{}: {e}", out.display())))?;
    let mut store =
        DefectStore::open(defects).map_err(|e| env_err(format!("{}: {e}", defects.display())))?;
    let changed = store
        .track(&batch, chrono::Utc::now())
        .map_err(|e| env_err(format!("{}: {e}", defects.display())))?;
    print!("{}", render_report(&batch, format));
    for d in changed {
        log::info!("defect {} {:?} {}", d.defect_id, d.status, d.summary);
    }
    if batch.totals.error > 0 {
        if let Some(r) = batch.results.iter().find(|r| r.message.is_some()) {
            eprintln!(
                "artts: {}: {}",
                r.case_id,
                r.message.as_deref().unwrap_or("")
            );
        }
    }
    Ok(if batch.all_passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| env_err(format!("{}: {e}", path.display())))
}

fn at(p: &Path) -> impl Fn(artts_core::trace::TraceError) -> Failure + '_ {
    move |e| env_err(format!("{}: {e}", p.display()))
}

fn load_trace(
    reqs: &Path,
    links: &Path,
    suite: &Path,
) -> Result<(RequirementSet, TestUnitTree, Matrices), Failure> {
    let r = load_requirements(&read(reqs)?).map_err(at(reqs))?;
    let l = load_links(&read(links)?).map_err(at(links))?;
    let t = TestUnitTree::from_json(&read(suite)?).map_err(at(suite))?;
    let m = build_matrices(&r, &t, &l).map_err(at(links))?;
    Ok((r, t, m))
}

fn read_results(path: &Path) -> Result<Vec<TestResult>, Failure> {
    BatchReport::read_results(path).map_err(|e| env_err(format!("{}: {e}", path.display())))
}

fn coverage_cmd(
    reqs: &Path,
    links: &Path,
    suite: &Path,
    level: LevelArg,
    results: Option<&Path>,
) -> Outcome {
    let (r, t, m) = load_trace(reqs, links, suite)?;
    let units = match results {
        Some(p) => {
            let statuses: BTreeMap<_, _> =
                BatchReport::new(String::new(), vec![], None, read_results(p)?, 0).case_statuses();
            Some(roll_up(&t, &statuses))
        }
        None => None,
    };
    let levels: Vec<Level> = match level {
        LevelArg::High => vec![Level::High],
        LevelArg::Intermediate => vec![Level::Intermediate],
        LevelArg::Detail => vec![Level::Detail],
        LevelArg::All => Level::ALL.to_vec(),
    };
    let mut full = true;
    for l in levels {
        let c = coverage(&r, &m, l, units.as_ref());
        println!("{c}");
        full &= c.is_full();
    }
    Ok(if full { EXIT_OK } else { EXIT_FAIL })
}

fn serve(dir: &Path, mode: bus::Mode, opts: &ServeOptions) -> Outcome {
    let station =
        StationModel::load_dir(dir).map_err(|e| env_err(format!("{}: {e}", dir.display())))?;
    let engine = Engine::load(station).map_err(|e| env_err(format!("{}: {e}", dir.display())))?;
    let server =
        Server::start(Bus::new(engine, mode), opts).map_err(|e| env_err(format!("bind: {e}")))?;
    eprintln!("artts: bus on {} ({mode})", server.tcp_addr());
    if let Some(b) = server.bridge_addr() {
        eprintln!("artts: bridge on ws://{b}/");
    }
    server.wait();
    Ok(EXIT_OK)
}

fn report(
    results: &Path,
    format: ReportFormat,
    trace: Option<(PathBuf, PathBuf, PathBuf)>,
) -> Outcome {
    let name = results.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let batch = if let Some(id) = name.strip_suffix(".batch.json") {
        let text = read(results)?;
        let b: BatchReport = serde_json::from_str(&text)
            .map_err(|e| env_err(format!("{}: {e}", results.display())))?;
        debug_assert_eq!(b.batch_id, id);
        b
    } else {
        let id = name.strip_suffix(".jsonl").unwrap_or(name).to_string();
        BatchReport::new(id, vec![], None, read_results(results)?, 0)
    };
    print!("{}", render_report(&batch, format));
    if let Some((r, l, s)) = trace {
        let (reqs, tree, m) = load_trace(&r, &l, &s)?;
        let units = roll_up(&tree, &batch.case_statuses());
        println!();
        print!("{}", HierarchyReport::new(&reqs, &m, units));
    }
    Ok(EXIT_OK)
}
