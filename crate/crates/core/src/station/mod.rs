//! Station description: point map, redundant contacts, panels, and the two
//! chain programs.
//!
//! On disk a station is a directory holding `station.json`, `chain_a.state`
//! and `chain_b.rung`.

pub mod explore;
mod reference;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::lint::ChainPoints;
use crate::dsl::{
    lint_program, parse_rung_program, parse_state_program, Diagnostic, Diagnostics, PointName,
    ProgramRef, RungProgram, StateProgram,
};

pub use explore::{explore_reachable, Alphabet, ExploreOptions, ReachabilityReport, Violation};
pub use reference::{
    build_reference_station, REFERENCE_CHAIN_A, REFERENCE_CHAIN_B, REFERENCE_STATION_JSON,
};

pub const DEFAULT_SCAN_PERIOD_MS: u32 = 10;
pub const DEFAULT_DISCREPANCY_WINDOW: u32 = 5;

/// Permit points every station must define.
pub const PERMIT_A: &str = "SHUTTER_PERMIT_A";
pub const PERMIT_B: &str = "SHUTTER_PERMIT_B";
pub const PERMIT: &str = "SHUTTER_PERMIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

/// One of the two redundant logic channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chain {
    A,
    B,
}

impl Chain {
    pub const BOTH: [Chain; 2] = [Chain::A, Chain::B];

    pub fn index(self) -> usize {
        match self {
            Chain::A => 0,
            Chain::B => 1,
        }
    }

    pub fn parse(s: &str) -> Option<Chain> {
        match s {
            "A" => Some(Chain::A),
            "B" => Some(Chain::B),
            _ => None,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chain::A => "A",
            Chain::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Affinity {
    A,
    B,
    Both,
}

impl Affinity {
    pub fn includes(self, chain: Chain) -> bool {
        matches!(
            (self, chain),
            (Affinity::Both, _) | (Affinity::A, Chain::A) | (Affinity::B, Chain::B)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoPoint {
    pub name: PointName,
    pub direction: Direction,
    pub chain: Affinity,
    #[serde(default, with = "bit", skip_serializing_if = "is_false")]
    pub initial: bool,
    /// For combined outputs (`chain: Both`): the Chain A and Chain B points
    /// the combiner votes over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combine: Option<(PointName, PointName)>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

mod bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            n => Err(serde::de::Error::custom(format!(
                "bit must be 0 or 1, got {n}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PanelKind {
    UserPanel,
    DoorPanel,
    SystemController,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WidgetKind {
    Switch,
    MomentaryButton,
    KeySwitch,
    Led,
    Beacon,
}

impl WidgetKind {
    pub fn binds_input(self) -> bool {
        matches!(
            self,
            WidgetKind::Switch | WidgetKind::MomentaryButton | WidgetKind::KeySwitch
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widget {
    pub kind: WidgetKind,
    pub point: PointName,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub panel: PanelKind,
    pub widgets: Vec<Widget>,
}

/// Contents of `station.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationConfig {
    pub name: String,
    #[serde(default = "default_period")]
    pub scan_period_ms: u32,
    #[serde(default = "default_window")]
    pub discrepancy_window_scans: u32,
    pub points: Vec<IoPoint>,
    #[serde(default)]
    pub redundant_pairs: Vec<(PointName, PointName)>,
    /// Inputs that latch `ESTOP_LATCH` on both chains while asserted.
    #[serde(default)]
    pub estop_inputs: Vec<PointName>,
    /// Outputs the engine drives from each chain's fault register.
    #[serde(default)]
    pub fault_indicators: FaultIndicators,
    #[serde(default)]
    pub panels: Vec<PanelSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultIndicators {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<PointName>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<PointName>,
}

impl FaultIndicators {
    pub fn get(&self, chain: Chain) -> Option<&PointName> {
        match chain {
            Chain::A => self.a.as_ref(),
            Chain::B => self.b.as_ref(),
        }
    }
}

fn default_period() -> u32 {
    DEFAULT_SCAN_PERIOD_MS
}

fn default_window() -> u32 {
    DEFAULT_DISCREPANCY_WINDOW
}

#[derive(Debug, thiserror::Error)]
pub enum StationError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid station.json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid station: {0}")]
    Invalid(String),
    #[error("chain {chain} program does not parse:\n{diagnostics}")]
    Program {
        chain: Chain,
        diagnostics: Diagnostics,
    },
}

/// A validated station with both chain programs parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationModel {
    pub config: StationConfig,
    pub chain_a_source: String,
    pub chain_b_source: String,
    pub chain_a: StateProgram,
    pub chain_b: RungProgram,
}

impl StationModel {
    pub fn new(
        config: StationConfig,
        chain_a_source: impl Into<String>,
        chain_b_source: impl Into<String>,
    ) -> Result<Self, StationError> {
        let chain_a_source = chain_a_source.into();
        let chain_b_source = chain_b_source.into();
        validate_config(&config)?;
        let chain_a =
            parse_state_program(&chain_a_source).map_err(|diagnostics| StationError::Program {
                chain: Chain::A,
                diagnostics,
            })?;
        let chain_b =
            parse_rung_program(&chain_b_source).map_err(|diagnostics| StationError::Program {
                chain: Chain::B,
                diagnostics,
            })?;
        Ok(StationModel {
            config,
            chain_a_source,
            chain_b_source,
            chain_a,
            chain_b,
        })
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, StationError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| StationError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let config: StationConfig = serde_json::from_str(&read("station.json")?)?;
        StationModel::new(config, read("chain_a.state")?, read("chain_b.rung")?)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), StationError> {
        let dir = dir.as_ref();
        let io = |path: &Path, source| StationError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut json = serde_json::to_string_pretty(&self.config)?;
        json.push('\n');
        for (name, body) in [
            ("station.json", json.as_str()),
            ("chain_a.state", self.chain_a_source.as_str()),
            ("chain_b.rung", self.chain_b_source.as_str()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn points(&self) -> &[IoPoint] {
        &self.config.points
    }

    pub fn point(&self, name: &str) -> Option<&IoPoint> {
        self.config.points.iter().find(|p| p.name.as_str() == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &IoPoint> {
        self.config
            .points
            .iter()
            .filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &IoPoint> {
        self.config
            .points
            .iter()
            .filter(|p| p.direction == Direction::Output)
    }

    pub fn panels(&self) -> &[PanelSpec] {
        &self.config.panels
    }

    /// Points a chain program is expected to read and drive.
    pub fn chain_points(&self, chain: Chain) -> ChainPoints {
        let indicator = self.config.fault_indicators.get(chain);
        ChainPoints {
            inputs: self
                .inputs()
                .filter(|p| p.chain.includes(chain))
                .map(|p| p.name.clone())
                .collect(),
            outputs: self
                .outputs()
                .filter(|p| {
                    p.chain != Affinity::Both
                        && p.chain.includes(chain)
                        && Some(&p.name) != indicator
                })
                .map(|p| p.name.clone())
                .collect(),
        }
    }

    /// Lint warnings for both chain programs, prefixed by chain.
    pub fn lint(&self) -> Vec<(Chain, Diagnostic)> {
        let a = lint_program(
            ProgramRef::State(&self.chain_a),
            &self.chain_points(Chain::A),
        );
        let b = lint_program(
            ProgramRef::Rung(&self.chain_b),
            &self.chain_points(Chain::B),
        );
        a.into_iter()
            .map(|d| (Chain::A, d))
            .chain(b.into_iter().map(|d| (Chain::B, d)))
            .collect()
    }

    /// Replaces one chain's source, reparsing it.
    pub fn with_chain_source(&self, chain: Chain, source: &str) -> Result<Self, StationError> {
        let (a, b) = match chain {
            Chain::A => (source, self.chain_b_source.as_str()),
            Chain::B => (self.chain_a_source.as_str(), source),
        };
        StationModel::new(self.config.clone(), a, b)
    }
}

fn validate_config(config: &StationConfig) -> Result<(), StationError> {
    let invalid = |msg: String| Err(StationError::Invalid(msg));
    if config.scan_period_ms == 0 {
        return invalid("scan_period_ms must be positive".into());
    }
    if config.discrepancy_window_scans == 0 {
        return invalid("discrepancy_window_scans must be positive".into());
    }
    let mut seen = BTreeSet::new();
    for p in &config.points {
        if !seen.insert(&p.name) {
            return invalid(format!("duplicate point {}", p.name));
        }
    }
    let find = |n: &PointName| config.points.iter().find(|p| &p.name == n);
    let input = |n: &PointName, what: &str| match find(n) {
        Some(p) if p.direction == Direction::Input => Ok(()),
        Some(_) => Err(StationError::Invalid(format!("{what} {n} is not an input"))),
        None => Err(StationError::Invalid(format!("{what} {n} is not a point"))),
    };
    for (x, y) in &config.redundant_pairs {
        input(x, "redundant pair member")?;
        input(y, "redundant pair member")?;
    }
    for e in &config.estop_inputs {
        input(e, "e-stop input")?;
    }
    for chain in Chain::BOTH {
        if let Some(n) = config.fault_indicators.get(chain) {
            match find(n) {
                Some(p) if p.direction == Direction::Output && p.chain == affinity(chain) => {}
                _ => {
                    return invalid(format!(
                        "fault indicator {n} must be a chain {chain} output"
                    ))
                }
            }
        }
    }
    for p in &config.points {
        match (p.direction, p.chain, &p.combine) {
            (Direction::Output, Affinity::Both, Some((a, b))) => {
                for (src, chain) in [(a, Chain::A), (b, Chain::B)] {
                    match find(src) {
                        Some(s)
                            if s.direction == Direction::Output && s.chain == affinity(chain) => {}
                        _ => {
                            return invalid(format!(
                            "combined point {} must vote over a chain {chain} output, not {src}",
                            p.name
                        ))
                        }
                    }
                }
            }
            (Direction::Output, Affinity::Both, None) => {
                return invalid(format!("combined point {} has no combine sources", p.name))
            }
            (_, _, Some(_)) => {
                return invalid(format!(
                    "only combined outputs may declare combine: {}",
                    p.name
                ))
            }
            (Direction::Output, _, None) if p.initial => {
                return invalid(format!("output {} cannot have an initial value", p.name))
            }
            _ => {}
        }
    }
    for (name, affinity) in [
        (PERMIT_A, Affinity::A),
        (PERMIT_B, Affinity::B),
        (PERMIT, Affinity::Both),
    ] {
        match config.points.iter().find(|p| p.name.as_str() == name) {
            Some(p) if p.direction == Direction::Output && p.chain == affinity => {}
            _ => return invalid(format!("station must define output {name} ({affinity:?})")),
        }
    }
    for panel in &config.panels {
        for w in &panel.widgets {
            let Some(p) = find(&w.point) else {
                return invalid(format!(
                    "widget {:?} binds unknown point {}",
                    w.label, w.point
                ));
            };
            let want = if w.kind.binds_input() {
                Direction::Input
            } else {
                Direction::Output
            };
            if p.direction != want {
                return invalid(format!(
                    "{:?} widget {:?} must bind an {:?} point, {} is an {:?}",
                    w.kind, w.label, want, p.name, p.direction
                ));
            }
        }
    }
    Ok(())
}

fn affinity(chain: Chain) -> Affinity {
    match chain {
        Chain::A => Affinity::A,
        Chain::B => Affinity::B,
    }
}
