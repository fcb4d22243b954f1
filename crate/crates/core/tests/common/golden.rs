//! Scan-by-scan traces of the reference station for the golden fixtures.

use std::fmt::Write as _;

use artts_core::engine::Engine;
use artts_core::station::build_reference_station;

const SECURE: [&[&str]; 5] = [
    &["DOOR_CLOSED_1", "DOOR_CLOSED_2"],
    &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_1"],
    &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_2"],
    &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SECURE_KEY"],
    &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SECURE_KEY", "BEAM_REQ"],
];

/// Runs one scan per entry of `inputs_on`, starting from reset, and renders
/// the reset boundary plus every scan record.
pub fn trace(inputs_on: &[&[&str]]) -> String {
    let mut e = Engine::load(build_reference_station()).unwrap();
    let mut out = String::new();
    let names = |v: &[_]| {
        v.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "# inputs: {}", names(e.input_names())).unwrap();
    writeln!(out, "# outputs: {}", names(e.output_names())).unwrap();
    writeln!(out, "{}", e.record().canonical()).unwrap();
    for on in inputs_on {
        for n in e.input_names().to_vec() {
            e.write_point(n.as_str(), on.contains(&n.as_str())).unwrap();
        }
        writeln!(out, "{}", e.step().canonical()).unwrap();
    }
    out
}

/// (fixture name, input vector per scan).
pub fn scenarios() -> Vec<(&'static str, Vec<&'static [&'static str]>)> {
    let mut secure = SECURE.to_vec();
    secure.extend([SECURE[4]; 2]);
    let mut trip = SECURE.to_vec();
    trip.push(SECURE[4]);
    // both doors open together: a clean trip, no discrepancy
    trip.extend([&["SECURE_KEY", "BEAM_REQ"][..]; 3]);
    vec![
        ("reset", vec![&[][..]; 4]),
        ("secure", secure),
        ("trip", trip),
    ]
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    super::repo_root()
        .join("crates/core/tests/fixtures/traces")
        .join(format!("{name}.trace"))
}
