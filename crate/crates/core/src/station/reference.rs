//! The shipped Station A.

use super::{StationConfig, StationModel};

pub const REFERENCE_STATION_JSON: &str =
    include_str!("../../../../stations/station-a/station.json");
pub const REFERENCE_CHAIN_A: &str = include_str!("../../../../stations/station-a/chain_a.state");
pub const REFERENCE_CHAIN_B: &str = include_str!("../../../../stations/station-a/chain_b.rung");

/// Builds Station A: nine inputs wired to both chains, per-chain permit,
/// search, secured and fault outputs, four voted outputs, three panels.
pub fn build_reference_station() -> StationModel {
    let config: StationConfig =
        serde_json::from_str(REFERENCE_STATION_JSON).expect("shipped station.json is valid");
    StationModel::new(config, REFERENCE_CHAIN_A, REFERENCE_CHAIN_B)
        .expect("shipped station programs are valid")
}
