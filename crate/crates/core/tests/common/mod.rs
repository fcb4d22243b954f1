#![allow(dead_code)]

pub mod failsafe;
pub mod golden;
pub mod oracle;
pub mod transcript;

use std::path::PathBuf;

use artts_core::dsl::PointName;
use artts_core::station::{Affinity, Direction, IoPoint, StationConfig, StationModel};

pub fn pn(s: &str) -> PointName {
    PointName::new(s).unwrap()
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn point(name: &str, direction: Direction, chain: Affinity) -> IoPoint {
    IoPoint {
        name: pn(name),
        direction,
        chain,
        initial: false,
        combine: None,
    }
}

/// A station with the given inputs, an inert Chain A and `chain_b` as its
/// ladder program. Chain B coils are internal; read them with `Engine::coil`.
pub fn station_with_chain_b(inputs: &[String], chain_b: &str) -> StationModel {
    let mut points: Vec<IoPoint> = inputs
        .iter()
        .map(|n| point(n, Direction::Input, Affinity::Both))
        .collect();
    points.push(point("SHUTTER_PERMIT_A", Direction::Output, Affinity::A));
    points.push(point("SHUTTER_PERMIT_B", Direction::Output, Affinity::B));
    points.push(IoPoint {
        combine: Some((pn("SHUTTER_PERMIT_A"), pn("SHUTTER_PERMIT_B"))),
        ..point("SHUTTER_PERMIT", Direction::Output, Affinity::Both)
    });
    let config = StationConfig {
        name: "oracle".into(),
        scan_period_ms: 10,
        discrepancy_window_scans: 5,
        points,
        redundant_pairs: vec![],
        estop_inputs: vec![],
        fault_indicators: Default::default(),
        panels: vec![],
    };
    StationModel::new(config, "task IDLE_TASK\n  state IDLE initial\n", chain_b).unwrap()
}
