//! Replay of the protocol transcript fixture against an in-process bus.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use artts_core::bus::{Bus, Mode};
use artts_core::engine::Engine;
use artts_core::station::build_reference_station;

pub fn fixture_path() -> std::path::PathBuf {
    super::repo_root().join("crates/core/tests/fixtures/bus/transcript.txt")
}

/// Expands `{C*N}` into N copies of C.
pub fn expand(line: &str) -> String {
    let Some(start) = line.find('{') else {
        return line.to_string();
    };
    let end = line[start..].find('}').unwrap() + start;
    let (c, n) = line[start + 1..end].split_once('*').unwrap();
    format!(
        "{}{}{}",
        &line[..start],
        c.repeat(n.parse().unwrap()),
        &line[end + 1..]
    )
}

pub fn replay(fixture: &str) -> String {
    let mut bus = Bus::new(
        Engine::load(build_reference_station()).unwrap(),
        Mode::Stepped,
    );
    let mut clients = BTreeMap::new();
    let mut out = String::new();
    for line in fixture.lines() {
        if line.starts_with('#') {
            writeln!(out, "{line}").unwrap();
            continue;
        }
        let Some((n, cmd)) = line.split_once("> ") else {
            continue;
        };
        let id = *clients
            .entry(n.to_string())
            .or_insert_with(|| bus.connect());
        writeln!(out, "{line}").unwrap();
        for (to, resp) in bus.handle_line(id, &expand(cmd)) {
            let name = clients.iter().find(|(_, &c)| c == to).unwrap().0;
            writeln!(out, "{name}< {resp}").unwrap();
        }
    }
    out
}

/// (client, command, that client's replies) for every command line.
pub fn blocks(fixture: &str) -> Vec<(String, String, Vec<String>)> {
    let mut out: Vec<(String, String, Vec<String>)> = Vec::new();
    for line in fixture.lines().filter(|l| !l.starts_with('#')) {
        if let Some((n, cmd)) = line.split_once("> ") {
            out.push((n.into(), cmd.into(), vec![]));
        } else if let Some((n, resp)) = line.split_once("< ") {
            let b = out.last_mut().unwrap();
            if b.0 == n {
                b.2.push(resp.into());
            }
        }
    }
    out
}
