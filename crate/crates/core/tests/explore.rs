use std::time::{Duration, Instant};

use artts_core::station::{build_reference_station, explore_reachable, ExploreOptions};

#[test]
fn reference_station_is_safe() {
    let station = build_reference_station();
    let opts = ExploreOptions::exhaustive(&station);
    let started = Instant::now();
    let report = explore_reachable(&station, &opts).unwrap();
    let took = started.elapsed();
    println!("{report}");
    println!("took {took:?}");
    assert!(report.is_complete(), "{report}");
    assert_eq!(report.violation_count, 0, "{report}");
    assert!(took < Duration::from_secs(120));
    // the sequence can actually reach the permit
    assert!(report
        .outputs_reached
        .iter()
        .any(|p| p.as_str() == "SHUTTER_PERMIT"));
    let states: Vec<String> = report
        .task_states
        .iter()
        .map(|(_, s)| s.to_string())
        .collect();
    for s in [
        "IDLE",
        "SEARCH_1",
        "SEARCH_2",
        "SECURED",
        "BEAM_PERMIT",
        "TRIPPED",
    ] {
        assert!(states.iter().any(|x| x == s), "{s} unreachable");
    }
}
