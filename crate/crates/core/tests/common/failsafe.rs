//! Randomized single-disturbance trials on the reference station.

use artts_core::engine::{Engine, FaultCode};
use artts_core::station::{build_reference_station, Chain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INPUTS: [&str; 9] = [
    "DOOR_CLOSED_1",
    "DOOR_CLOSED_2",
    "ESTOP_USER",
    "ESTOP_DOOR",
    "SEARCH_BTN_1",
    "SEARCH_BTN_2",
    "SECURE_KEY",
    "BEAM_REQ",
    "RESET_BTN",
];

/// Probability that each input is on in a random scan: doors mostly closed,
/// e-stops rare.
const BIAS: [f64; 9] = [0.9, 0.9, 0.02, 0.02, 0.3, 0.3, 0.6, 0.6, 0.1];

pub fn random_inputs(rng: &mut impl Rng) -> Vec<(&'static str, bool)> {
    let doors = rng.gen_bool(BIAS[0]);
    INPUTS
        .iter()
        .zip(BIAS)
        .enumerate()
        .map(|(i, (&n, p))| (n, if i < 2 { doors } else { rng.gen_bool(p) }))
        .collect()
}

pub fn apply(e: &mut Engine, inputs: &[(&str, bool)]) {
    for &(n, v) in inputs {
        e.write_point(n, v).unwrap();
    }
}

pub fn drive_to_beam(e: &mut Engine) {
    let seq: [&[&str]; 5] = [
        &["DOOR_CLOSED_1", "DOOR_CLOSED_2"],
        &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_1"],
        &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_2"],
        &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SECURE_KEY"],
        &["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SECURE_KEY", "BEAM_REQ"],
    ];
    for on in seq {
        for n in INPUTS {
            e.write_point(n, on.contains(&n)).unwrap();
        }
        e.step();
    }
}

/// Random state reached by a random walk, often through the full sequence.
pub fn random_setup(e: &mut Engine, rng: &mut impl Rng) {
    e.reset();
    if rng.gen_bool(0.7) {
        drive_to_beam(e);
        // a few scans of stable beam, or a random detour
        if rng.gen_bool(0.5) {
            for _ in 0..rng.gen_range(0..5) {
                e.step();
            }
            return;
        }
    }
    for _ in 0..rng.gen_range(0..40) {
        let inputs = random_inputs(rng);
        apply(e, &inputs);
        e.step();
    }
}

pub fn combined_outputs(e: &Engine) -> Vec<(String, bool)> {
    e.station()
        .points()
        .iter()
        .filter(|p| p.combine.is_some())
        .map(|p| (p.name.to_string(), e.read_point(p.name.as_str()).unwrap()))
        .collect()
}

pub struct TrialStats {
    pub trials: usize,
    /// Trials whose setup ended with the combined permit on.
    pub permitted_before: usize,
}

/// From a random reachable state, applies one fault injection or one contact
/// disagreement and checks that every combined output is off two scans
/// later.
pub fn disturbance_trials(seed: u64, trials: usize) -> Result<TrialStats, String> {
    let mut e = Engine::load(build_reference_station()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = &FaultCode::ALL[1..];
    let mut permitted_before = 0;
    for trial in 0..trials {
        random_setup(&mut e, &mut rng);
        if e.read_point("SHUTTER_PERMIT").unwrap() {
            permitted_before += 1;
        }
        let what = if rng.gen_bool(0.5) {
            let chain = if rng.gen_bool(0.5) {
                Chain::A
            } else {
                Chain::B
            };
            let code = codes[rng.gen_range(0..codes.len())];
            e.inject_fault(chain, code).unwrap();
            format!("fault {chain} {code}")
        } else {
            let contact = if rng.gen_bool(0.5) {
                "DOOR_CLOSED_1"
            } else {
                "DOOR_CLOSED_2"
            };
            let other = if contact == "DOOR_CLOSED_1" {
                "DOOR_CLOSED_2"
            } else {
                "DOOR_CLOSED_1"
            };
            let v = e.read_point(other).unwrap();
            e.write_point(contact, !v).unwrap();
            format!("{contact} disagrees")
        };
        for _ in 0..2 {
            e.step();
        }
        if let Some((name, _)) = combined_outputs(&e).into_iter().find(|(_, v)| *v) {
            return Err(format!(
                "trial {trial}: {name} still on two scans after {what}"
            ));
        }
    }
    Ok(TrialStats {
        trials,
        permitted_before,
    })
}
