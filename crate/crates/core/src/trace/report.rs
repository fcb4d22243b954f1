use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Level, Matrices, RequirementSet, TestUnitTree};

/// Outcome of a test unit. Cases are Pass, Fail, Error or NotRun; runs and
/// builds roll up from their members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
    NotRun,
    /// A run with no cases or a build with no runs.
    Empty,
    /// Some members not run, none failed.
    Incomplete,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "Pass",
            Status::Fail => "Fail",
            Status::Error => "Error",
            Status::NotRun => "NotRun",
            Status::Empty => "Empty",
            Status::Incomplete => "Incomplete",
        }
    }

    fn combine(members: impl IntoIterator<Item = Status>) -> Status {
        let mut any = false;
        let mut all_pass = true;
        for s in members {
            any = true;
            match s {
                Status::Pass => {}
                Status::Fail | Status::Error | Status::Empty => return Status::Fail,
                Status::NotRun | Status::Incomplete => all_pass = false,
            }
        }
        match (any, all_pass) {
            (false, _) => Status::Empty,
            (true, true) => Status::Pass,
            (true, false) => Status::Incomplete,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Status of every unit in a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitStatus {
    pub builds: BTreeMap<String, Status>,
    pub runs: BTreeMap<String, Status>,
    pub cases: BTreeMap<String, Status>,
}

impl UnitStatus {
    pub fn get(&self, id: &str) -> Option<Status> {
        self.builds
            .get(id)
            .or_else(|| self.runs.get(id))
            .or_else(|| self.cases.get(id))
            .copied()
    }
}

/// Propagates case outcomes up the tree. A run passes iff all its cases
/// pass, a build iff all its runs pass; an empty run counts against its build.
pub fn roll_up(tree: &TestUnitTree, case_results: &BTreeMap<String, Status>) -> UnitStatus {
    let cases: BTreeMap<String, Status> = tree
        .cases
        .iter()
        .map(|c| {
            (
                c.clone(),
                case_results.get(c).copied().unwrap_or(Status::NotRun),
            )
        })
        .collect();
    let runs: BTreeMap<String, Status> = tree
        .runs
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                Status::combine(r.cases.iter().map(|c| cases[c])),
            )
        })
        .collect();
    let builds = tree
        .builds
        .iter()
        .map(|b| {
            (
                b.id.clone(),
                Status::combine(b.runs.iter().map(|r| runs[r])),
            )
        })
        .collect();
    UnitStatus {
        builds,
        runs,
        cases,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub level: Level,
    pub total: usize,
    pub covered: usize,
    /// `None` when no results were supplied.
    pub covered_and_passing: Option<usize>,
    pub uncovered_ids: Vec<String>,
}

impl CoverageReport {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            self.covered as f64 * 100.0 / self.total as f64
        }
    }

    pub fn is_full(&self) -> bool {
        self.covered == self.total
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let passing = match self.covered_and_passing {
            Some(n) => n.to_string(),
            None => "n/a".into(),
        };
        write!(
            f,
            "{:<12} total {:>4}  covered {:>4}  passing {:>4}  {:>6.1}%",
            self.level.as_str(),
            self.total,
            self.covered,
            passing,
            self.percent()
        )?;
        for id in &self.uncovered_ids {
            write!(f, "\n  uncovered {id}")?;
        }
        Ok(())
    }
}

pub fn coverage(
    reqs: &RequirementSet,
    matrices: &Matrices,
    level: Level,
    results: Option<&UnitStatus>,
) -> CoverageReport {
    let m = matrices.level(level);
    let by_req = m.by_requirement();
    let mut covered = 0;
    let mut passing = 0;
    let mut uncovered_ids = Vec::new();
    let mut total = 0;
    for r in reqs.at_level(level) {
        total += 1;
        match by_req.get(r.id.as_str()) {
            Some(units) => {
                covered += 1;
                if let Some(st) = results {
                    if units.iter().any(|u| st.get(u) == Some(Status::Pass)) {
                        passing += 1;
                    }
                }
            }
            None => uncovered_ids.push(r.id.clone()),
        }
    }
    CoverageReport {
        level,
        total,
        covered,
        covered_and_passing: results.map(|_| passing),
        uncovered_ids,
    }
}

/// A requirement with the statuses of its linked units and its children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementStatus {
    pub id: String,
    pub level: Level,
    pub units: Vec<(String, Status)>,
    pub children: Vec<RequirementStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HierarchyReport {
    pub requirements: Vec<RequirementStatus>,
    pub units: UnitStatus,
}

impl HierarchyReport {
    pub fn new(reqs: &RequirementSet, matrices: &Matrices, units: UnitStatus) -> Self {
        fn node(
            id: &str,
            reqs: &RequirementSet,
            matrices: &Matrices,
            units: &UnitStatus,
        ) -> RequirementStatus {
            let r = reqs.get(id).expect("id from set");
            RequirementStatus {
                id: r.id.clone(),
                level: r.level,
                units: matrices
                    .level(r.level)
                    .units_of(id)
                    .into_iter()
                    .map(|u| (u.to_string(), units.get(u).unwrap_or(Status::NotRun)))
                    .collect(),
                children: reqs
                    .children(id)
                    .map(|c| node(&c.id, reqs, matrices, units))
                    .collect(),
            }
        }
        HierarchyReport {
            requirements: reqs
                .at_level(Level::High)
                .map(|r| node(&r.id, reqs, matrices, &units))
                .collect(),
            units,
        }
    }
}

impl fmt::Display for HierarchyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn walk(f: &mut fmt::Formatter<'_>, r: &RequirementStatus, depth: usize) -> fmt::Result {
            let units: Vec<String> = r.units.iter().map(|(u, s)| format!("{u}={s}")).collect();
            let units = if units.is_empty() {
                "(unlinked)".to_string()
            } else {
                units.join(" ")
            };
            writeln!(f, "{:indent$}{:<14} {units}", "", r.id, indent = depth * 2)?;
            r.children.iter().try_for_each(|c| walk(f, c, depth + 1))
        }
        self.requirements.iter().try_for_each(|r| walk(f, r, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{build_matrices, load_links, load_requirements};

    fn fixture() -> (RequirementSet, TestUnitTree) {
        let reqs = load_requirements(
            "HR-1|high||h\nIR-1|intermediate|HR-1|i\nIR-2|intermediate|HR-1|i2\n\
             DR-1|detail|IR-1|d\nDR-2|detail|IR-1|d2\nDR-3|detail|IR-2|d3\n",
        )
        .unwrap();
        let tree = TestUnitTree::from_json(
            r#"{"builds":[{"id":"B-1","name":"b","station":"s","runs":["TR-1","TR-2"]},
                          {"id":"B-2","name":"b2","station":"s","runs":["TR-3"]}],
                "runs":[{"id":"TR-1","name":"r","cases":["TC-1","TC-2"]},
                        {"id":"TR-2","name":"r2","cases":["TC-3"]},
                        {"id":"TR-3","name":"empty","cases":[]}],
                "cases":["TC-1","TC-2","TC-3"]}"#,
        )
        .unwrap();
        (reqs, tree)
    }

    fn pass_all(tree: &TestUnitTree) -> BTreeMap<String, Status> {
        tree.cases
            .iter()
            .map(|c| (c.clone(), Status::Pass))
            .collect()
    }

    #[test]
    fn roll_up_propagation() {
        let (_, tree) = fixture();
        let mut results = pass_all(&tree);
        let st = roll_up(&tree, &results);
        assert_eq!(st.builds["B-1"], Status::Pass);
        assert_eq!(st.runs["TR-3"], Status::Empty);
        assert_eq!(st.builds["B-2"], Status::Fail, "empty run is not a pass");

        results.insert("TC-3".into(), Status::Fail);
        let st = roll_up(&tree, &results);
        assert_eq!(st.runs["TR-2"], Status::Fail);
        assert_eq!(st.runs["TR-1"], Status::Pass);
        assert_eq!(st.builds["B-1"], Status::Fail);

        results.remove("TC-3");
        let st = roll_up(&tree, &results);
        assert_eq!(st.cases["TC-3"], Status::NotRun);
        assert_eq!(st.builds["B-1"], Status::Incomplete);
    }

    #[test]
    fn coverage_counts() {
        let (reqs, tree) = fixture();
        let links = load_links("DR-1 -> TC-1\nDR-2 -> TC-2\nDR-3 -> TC-3\n").unwrap();
        let m = build_matrices(&reqs, &tree, &links).unwrap();
        let c = coverage(&reqs, &m, Level::Detail, None);
        assert_eq!((c.total, c.covered, c.covered_and_passing), (3, 3, None));
        assert!(c.is_full());

        let mut results = pass_all(&tree);
        results.insert("TC-2".into(), Status::Fail);
        let st = roll_up(&tree, &results);
        let c = coverage(&reqs, &m, Level::Detail, Some(&st));
        assert_eq!(c.covered_and_passing, Some(2));

        let fewer = &links[..2];
        let m = build_matrices(&reqs, &tree, fewer).unwrap();
        let c = coverage(&reqs, &m, Level::Detail, None);
        assert_eq!(c.covered, 2);
        assert_eq!(c.uncovered_ids, vec!["DR-3"]);
        assert!(c.to_string().contains("uncovered DR-3"));
        assert!((c.percent() - 200.0 / 3.0).abs() < 1e-9);

        let c = coverage(&reqs, &m, Level::High, None);
        assert_eq!((c.total, c.covered), (1, 0));
    }

    #[test]
    fn hierarchy_report_nests() {
        let (reqs, tree) = fixture();
        let links = load_links("HR-1 -> B-1\nIR-1 -> TR-1\nDR-1 -> TC-1\n").unwrap();
        let m = build_matrices(&reqs, &tree, &links).unwrap();
        let h = HierarchyReport::new(&reqs, &m, roll_up(&tree, &pass_all(&tree)));
        assert_eq!(h.requirements.len(), 1);
        assert_eq!(
            h.requirements[0].units,
            vec![("B-1".to_string(), Status::Pass)]
        );
        assert_eq!(h.requirements[0].children.len(), 2);
        let text = h.to_string();
        assert!(text.contains("    DR-1           TC-1=Pass"), "{text}");
        assert!(text.contains("DR-2           (unlinked)"), "{text}");
        assert_eq!(text, h.to_string());
    }
}
