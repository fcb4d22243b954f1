//! Randomized fail-safe and chain-agreement checks on the reference station.

mod common;

use artts_core::engine::{Engine, FaultCode};
use artts_core::station::{build_reference_station, Chain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::failsafe::{apply, disturbance_trials, drive_to_beam, random_inputs};

#[test]
fn single_disturbances_drop_every_combined_output() {
    let stats = disturbance_trials(0x5afe, 2000).unwrap();
    assert!(
        stats.permitted_before * 4 > stats.trials,
        "only {} trials started from beam",
        stats.permitted_before
    );
}

#[test]
fn chains_agree_without_faults() {
    let mut e = Engine::load(build_reference_station()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    let pairs = [
        ("SHUTTER_PERMIT_A", "SHUTTER_PERMIT_B"),
        ("SEARCH_LED_A", "SEARCH_LED_B"),
        ("SECURED_LED_A", "SECURED_LED_B"),
    ];
    let mut long_holds = 0;
    for trial in 0..300 {
        e.reset();
        if rng.gen_bool(0.5) {
            drive_to_beam(&mut e);
        }
        let mut scan = 0;
        while scan < 400 {
            let mut inputs = random_inputs(&mut rng);
            // no e-stops and agreeing contacts: faults are not under test here
            inputs[2].1 = false;
            inputs[3].1 = false;
            apply(&mut e, &inputs);
            // sometimes hold still long enough for the search window to run out
            let hold = if rng.gen_bool(0.02) {
                long_holds += 1;
                rng.gen_range(2990..3010)
            } else {
                1
            };
            for _ in 0..hold {
                e.step();
                for (a, b) in pairs {
                    assert_eq!(
                        e.read_point(a).unwrap(),
                        e.read_point(b).unwrap(),
                        "trial {trial} scan {scan}: {a} != {b} ({:?})",
                        e.task_states()
                    );
                }
            }
            scan += 1;
        }
        assert_eq!(e.fault(Chain::A).code(), FaultCode::NoFault);
    }
    assert!(long_holds > 100);
}

#[test]
fn search_window_expiry_agrees() {
    let mut e = Engine::load(build_reference_station()).unwrap();
    for n in ["DOOR_CLOSED_1", "DOOR_CLOSED_2", "SEARCH_BTN_1"] {
        e.write_point(n, true).unwrap();
    }
    e.step();
    e.write_point("SEARCH_BTN_1", false).unwrap();
    let mut scans = 1;
    while e.read_point("SEARCH_LED_A").unwrap() {
        assert!(e.read_point("SEARCH_LED_B").unwrap());
        e.step();
        scans += 1;
    }
    assert!(!e.read_point("SEARCH_LED_B").unwrap());
    // entered SEARCH_1 on scan 1, window is 30 s of 10 ms scans
    assert_eq!(scans, 1 + 3000);
}
