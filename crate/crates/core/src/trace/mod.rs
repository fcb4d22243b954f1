//! Requirement hierarchy, test-unit tree and validation matrices.
//!
//! Requirements come in three levels, each validated by its own kind of test
//! unit: High by builds, Intermediate by test runs, Detail by test cases.
//! Links are kept in one flat list and split into a matrix per level.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use report::{
    coverage, roll_up, CoverageReport, HierarchyReport, RequirementStatus, Status, UnitStatus,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("{id}: dangling parent {parent}")]
    DanglingParent { id: String, parent: String },
    #[error("{id}: level/parent mismatch ({level} under {parent})")]
    LevelMismatch {
        id: String,
        level: Level,
        parent: String,
    },
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("cross-level link {req} -> {unit} ({level} requirement, {kind})")]
    CrossLevel {
        req: String,
        unit: String,
        level: Level,
        kind: UnitKind,
    },
    #[error("suite: {0}")]
    Tree(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Intermediate,
    Detail,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::High, Level::Intermediate, Level::Detail];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Intermediate => "intermediate",
            Level::Detail => "detail",
        }
    }

    /// Kind of test unit that validates requirements of this level.
    pub fn unit_kind(self) -> UnitKind {
        match self {
            Level::High => UnitKind::Build,
            Level::Intermediate => UnitKind::Run,
            Level::Detail => UnitKind::Case,
        }
    }

    fn parent_level(self) -> Option<Level> {
        match self {
            Level::High => None,
            Level::Intermediate => Some(Level::High),
            Level::Detail => Some(Level::Intermediate),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown level {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Build,
    Run,
    Case,
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Build => "build",
            UnitKind::Run => "test run",
            UnitKind::Case => "test case",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub level: Level,
    pub parent: Option<String>,
    pub text: String,
}

/// Requirements in file order, hierarchy checked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequirementSet {
    reqs: Vec<Requirement>,
    index: BTreeMap<String, usize>,
}

impl RequirementSet {
    pub fn new(reqs: Vec<Requirement>) -> Result<Self, TraceError> {
        let mut index = BTreeMap::new();
        for (i, r) in reqs.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(TraceError::DuplicateId(r.id.clone()));
            }
        }
        for r in &reqs {
            let parent = match (&r.parent, r.level.parent_level()) {
                (None, None) => continue,
                (Some(p), _) => p,
                (None, Some(_)) => {
                    return Err(TraceError::LevelMismatch {
                        id: r.id.clone(),
                        level: r.level,
                        parent: "nothing".into(),
                    })
                }
            };
            let Some(&pi) = index.get(parent) else {
                return Err(TraceError::DanglingParent {
                    id: r.id.clone(),
                    parent: parent.clone(),
                });
            };
            if r.level.parent_level() != Some(reqs[pi].level) {
                return Err(TraceError::LevelMismatch {
                    id: r.id.clone(),
                    level: r.level,
                    parent: parent.clone(),
                });
            }
        }
        Ok(RequirementSet { reqs, index })
    }

    pub fn get(&self, id: &str) -> Option<&Requirement> {
        self.index.get(id).map(|&i| &self.reqs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Requirement> {
        self.reqs.iter()
    }

    pub fn at_level(&self, level: Level) -> impl Iterator<Item = &Requirement> {
        self.reqs.iter().filter(move |r| r.level == level)
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Requirement> {
        self.reqs
            .iter()
            .filter(move |r| r.parent.as_deref() == Some(id))
    }

    pub fn len(&self) -> usize {
        self.reqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reqs.is_empty()
    }
}

/// Lines that carry records: comments (`#`) and blank lines dropped.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn check_id(line: usize, id: &str) -> Result<(), TraceError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_'));
    if ok {
        Ok(())
    } else {
        Err(TraceError::Parse {
            line,
            message: format!("bad id {id:?}"),
        })
    }
}

/// Parses `id|level|parent|text` records.
pub fn load_requirements(text: &str) -> Result<RequirementSet, TraceError> {
    let mut reqs = Vec::new();
    for (line, rec) in records(text) {
        let fields: Vec<&str> = rec.splitn(4, '|').map(str::trim).collect();
        let [id, level, parent, text] = fields[..] else {
            return Err(TraceError::Parse {
                line,
                message: "expected id|level|parent|text".into(),
            });
        };
        check_id(line, id)?;
        let level = level
            .parse::<Level>()
            .map_err(|message| TraceError::Parse { line, message })?;
        let parent = if parent.is_empty() {
            None
        } else {
            check_id(line, parent)?;
            Some(parent.to_string())
        };
        reqs.push(Requirement {
            id: id.to_string(),
            level,
            parent,
            text: text.to_string(),
        });
    }
    RequirementSet::new(reqs)
}

pub fn write_requirements(set: &RequirementSet) -> String {
    let mut out = String::new();
    for r in set.iter() {
        out.push_str(&format!(
            "{}|{}|{}|{}\n",
            r.id,
            r.level,
            r.parent.as_deref().unwrap_or(""),
            r.text
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub req: String,
    pub unit: String,
}

/// Parses `REQ -> UNIT` records.
pub fn load_links(text: &str) -> Result<Vec<Link>, TraceError> {
    records(text)
        .map(|(line, rec)| {
            let (req, unit) = rec.split_once("->").ok_or_else(|| TraceError::Parse {
                line,
                message: "expected REQ -> UNIT".into(),
            })?;
            let (req, unit) = (req.trim(), unit.trim());
            check_id(line, req)?;
            check_id(line, unit)?;
            Ok(Link {
                req: req.to_string(),
                unit: unit.to_string(),
            })
        })
        .collect()
}

pub fn write_links(links: &[Link]) -> String {
    links
        .iter()
        .map(|l| format!("{} -> {}\n", l.req, l.unit))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Build {
    pub id: String,
    pub name: String,
    /// Station directory, relative to the suite file.
    pub station: String,
    pub runs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRun {
    pub id: String,
    pub name: String,
    pub cases: Vec<String>,
}

/// Builds, test runs and test cases, as stored in `suite.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestUnitTree {
    pub builds: Vec<Build>,
    pub runs: Vec<TestRun>,
    pub cases: Vec<String>,
    /// Directory of `<case id>.tc` scripts, relative to the suite file.
    #[serde(default = "default_case_dir")]
    pub case_dir: String,
}

fn default_case_dir() -> String {
    "cases".into()
}

impl TestUnitTree {
    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let tree: TestUnitTree =
            serde_json::from_str(text).map_err(|e| TraceError::Tree(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    /// Every run in exactly one build, every case in exactly one run, ids
    /// unique across all units.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut seen = BTreeSet::new();
        let ids = self
            .builds
            .iter()
            .map(|b| &b.id)
            .chain(self.runs.iter().map(|r| &r.id))
            .chain(&self.cases);
        for id in ids {
            if !seen.insert(id) {
                return Err(TraceError::DuplicateId(id.clone()));
            }
        }
        let runs: BTreeSet<&String> = self.runs.iter().map(|r| &r.id).collect();
        let cases: BTreeSet<&String> = self.cases.iter().collect();
        let mut owner = BTreeMap::new();
        for b in &self.builds {
            for r in &b.runs {
                if !runs.contains(r) {
                    return Err(TraceError::Tree(format!(
                        "build {} lists unknown run {r}",
                        b.id
                    )));
                }
                if let Some(prev) = owner.insert(r, &b.id) {
                    return Err(TraceError::Tree(format!(
                        "run {r} belongs to builds {prev} and {}",
                        b.id
                    )));
                }
            }
        }
        if let Some(r) = runs.iter().find(|r| !owner.contains_key(*r)) {
            return Err(TraceError::Tree(format!("run {r} belongs to no build")));
        }
        let mut owner = BTreeMap::new();
        for r in &self.runs {
            for c in &r.cases {
                if !cases.contains(c) {
                    return Err(TraceError::Tree(format!(
                        "run {} lists unknown case {c}",
                        r.id
                    )));
                }
                if let Some(prev) = owner.insert(c, &r.id) {
                    return Err(TraceError::Tree(format!(
                        "case {c} belongs to runs {prev} and {}",
                        r.id
                    )));
                }
            }
        }
        if let Some(c) = cases.iter().find(|c| !owner.contains_key(*c)) {
            return Err(TraceError::Tree(format!("case {c} belongs to no run")));
        }
        Ok(())
    }

    pub fn kind_of(&self, id: &str) -> Option<UnitKind> {
        if self.builds.iter().any(|b| b.id == id) {
            Some(UnitKind::Build)
        } else if self.runs.iter().any(|r| r.id == id) {
            Some(UnitKind::Run)
        } else if self.cases.iter().any(|c| c == id) {
            Some(UnitKind::Case)
        } else {
            None
        }
    }

    pub fn build(&self, id: &str) -> Option<&Build> {
        self.builds.iter().find(|b| b.id == id)
    }

    pub fn run(&self, id: &str) -> Option<&TestRun> {
        self.runs.iter().find(|r| r.id == id)
    }

    /// Builds in file order, runs in build order, cases in run order.
    pub fn case_order(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for b in &self.builds {
            for r in &b.runs {
                if let Some(run) = self.run(r) {
                    out.extend(run.cases.iter().map(String::as_str));
                }
            }
        }
        out
    }

    /// Cases under the given builds, runs or cases, in tree order.
    pub fn select(&self, ids: &[String]) -> Result<Vec<&str>, TraceError> {
        let mut wanted = BTreeSet::new();
        for id in ids {
            match self.kind_of(id) {
                Some(UnitKind::Build) => {
                    for r in &self.build(id).expect("kind checked").runs {
                        wanted.extend(self.run(r).into_iter().flat_map(|r| r.cases.iter()));
                    }
                }
                Some(UnitKind::Run) => {
                    wanted.extend(self.run(id).expect("kind checked").cases.iter());
                }
                Some(UnitKind::Case) => {
                    wanted.insert(id);
                }
                None => return Err(TraceError::UnknownId(id.clone())),
            }
        }
        Ok(self
            .case_order()
            .into_iter()
            .filter(|c| wanted.iter().any(|w| w.as_str() == *c))
            .collect())
    }

    /// The build that owns a case.
    pub fn build_of_case(&self, case: &str) -> Option<&Build> {
        let run = self
            .runs
            .iter()
            .find(|r| r.cases.iter().any(|c| c == case))?;
        self.builds.iter().find(|b| b.runs.contains(&run.id))
    }
}

/// Links between requirements of one level and units of the matching kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationMatrix {
    pub level: Level,
    pub links: BTreeSet<(String, String)>,
}

impl ValidationMatrix {
    pub fn units_of(&self, req: &str) -> Vec<&str> {
        self.links
            .iter()
            .filter(|(r, _)| r == req)
            .map(|(_, u)| u.as_str())
            .collect()
    }

    /// Requirement → units view.
    pub fn by_requirement(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (r, u) in &self.links {
            out.entry(r).or_default().insert(u);
        }
        out
    }

    /// Unit → requirements view.
    pub fn by_unit(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (r, u) in &self.links {
            out.entry(u).or_default().insert(r);
        }
        out
    }
}

/// The three matrices, High/Build, Intermediate/Run, Detail/Case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrices(pub [ValidationMatrix; 3]);

impl Matrices {
    pub fn level(&self, level: Level) -> &ValidationMatrix {
        &self.0[level as usize]
    }
}

pub fn build_matrices(
    reqs: &RequirementSet,
    tree: &TestUnitTree,
    links: &[Link],
) -> Result<Matrices, TraceError> {
    let mut m = Level::ALL.map(|level| ValidationMatrix {
        level,
        links: BTreeSet::new(),
    });
    for l in links {
        let req = reqs
            .get(&l.req)
            .ok_or_else(|| TraceError::UnknownId(l.req.clone()))?;
        let kind = tree
            .kind_of(&l.unit)
            .ok_or_else(|| TraceError::UnknownId(l.unit.clone()))?;
        if kind != req.level.unit_kind() {
            return Err(TraceError::CrossLevel {
                req: l.req.clone(),
                unit: l.unit.clone(),
                level: req.level,
                kind,
            });
        }
        m[req.level as usize]
            .links
            .insert((l.req.clone(), l.unit.clone()));
    }
    Ok(Matrices(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# sample
HR-1|high||Access control
IR-1.1|intermediate|HR-1|Search
IR-1.2|intermediate|HR-1|Secure
DR-1.1.1|detail|IR-1.1|first button
DR-1.1.2|detail|IR-1.1|second button
DR-1.2.1|detail|IR-1.2|key
DR-1.2.2|detail|IR-1.2|beam | with a pipe
";

    #[test]
    fn loads_three_levels() {
        let set = load_requirements(SMALL).unwrap();
        assert_eq!(set.len(), 7);
        for level in Level::ALL {
            assert!(set.at_level(level).count() > 0);
        }
        assert_eq!(set.get("DR-1.2.2").unwrap().text, "beam | with a pipe");
        assert_eq!(set.children("IR-1.1").count(), 2);
        let again = load_requirements(&write_requirements(&set)).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn hierarchy_errors() {
        let e = load_requirements("HR-1|high||a\nDR-1|detail|HR-1|b\n").unwrap_err();
        assert!(e.to_string().contains("level/parent mismatch"), "{e}");
        let e = load_requirements("HR-1|high||a\nHR-1|high||b\n").unwrap_err();
        assert_eq!(e, TraceError::DuplicateId("HR-1".into()));
        let e = load_requirements("IR-1|intermediate|HR-9|a\n").unwrap_err();
        assert!(matches!(e, TraceError::DanglingParent { .. }));
        let e = load_requirements("IR-1|intermediate||a\n").unwrap_err();
        assert!(matches!(e, TraceError::LevelMismatch { .. }));
        let e = load_requirements("HR-1|top||a\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 1, .. }));
        assert!(load_requirements("").unwrap().is_empty());
    }

    fn tree() -> TestUnitTree {
        TestUnitTree::from_json(
            r#"{"builds":[{"id":"B-1","name":"b","station":"s","runs":["TR-1"]}],
                "runs":[{"id":"TR-1","name":"r","cases":["TC-001","TC-002"]}],
                "cases":["TC-001","TC-002"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn matrices_split_by_level() {
        let set = load_requirements(SMALL).unwrap();
        let links = load_links("DR-1.1.1 -> TC-001\nHR-1 -> B-1\n# c\nIR-1.1 -> TR-1\n").unwrap();
        let m = build_matrices(&set, &tree(), &links).unwrap();
        assert_eq!(m.level(Level::Detail).links.len(), 1);
        assert_eq!(m.level(Level::High).links.len(), 1);
        assert_eq!(
            m.level(Level::Intermediate).units_of("IR-1.1"),
            vec!["TR-1"]
        );

        let bad = load_links("HR-1 -> TC-001").unwrap();
        let e = build_matrices(&set, &tree(), &bad).unwrap_err();
        assert!(e.to_string().starts_with("cross-level link"), "{e}");
        let bad = load_links("DR-9 -> TC-001").unwrap();
        assert_eq!(
            build_matrices(&set, &tree(), &bad).unwrap_err(),
            TraceError::UnknownId("DR-9".into())
        );
        assert!(load_links("DR-1 TC-1").is_err());
    }

    #[test]
    fn tree_validation() {
        let t = tree();
        assert_eq!(t.case_order(), vec!["TC-001", "TC-002"]);
        assert_eq!(t.select(&["TC-002".into()]).unwrap(), vec!["TC-002"]);
        assert_eq!(t.select(&["B-1".into()]).unwrap().len(), 2);
        assert!(t.select(&["nope".into()]).is_err());
        assert_eq!(t.build_of_case("TC-002").unwrap().id, "B-1");

        let mut orphan = t.clone();
        orphan.cases.push("TC-003".into());
        assert!(orphan.validate().is_err());
        let mut twice = t.clone();
        twice.runs.push(TestRun {
            id: "TR-2".into(),
            name: "r2".into(),
            cases: vec!["TC-001".into()],
        });
        twice.builds[0].runs.push("TR-2".into());
        assert!(twice.validate().is_err());
    }
}
