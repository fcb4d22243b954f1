use std::fmt::Write as _;

use serde::Serialize;

use crate::dsl::PointName;

use super::FaultRegister;

/// Audit entry for one scan, taken at the scan boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanRecord {
    pub seq: u64,
    pub time_ms: u64,
    /// Latched inputs, in point-map order of the input points.
    pub inputs: Vec<bool>,
    /// Committed outputs, in point-map order of the output points.
    pub outputs: Vec<bool>,
    /// Chain A then Chain B.
    pub faults: [FaultRegister; 2],
    /// `(task, state)` for every Chain A task.
    pub active_states: Vec<(PointName, PointName)>,
}

impl ScanRecord {
    /// Tab-separated `seq time_ms inputs_hex outputs_hex faultA faultB
    /// TASK=STATE…`. Bit `i` of each hex field is the `i`th point of that
    /// direction in map order; digits are most-significant first.
    pub fn canonical(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.time_ms,
            bits_hex(&self.inputs),
            bits_hex(&self.outputs),
            self.faults[0],
            self.faults[1]
        );
        for (task, state) in &self.active_states {
            let _ = write!(line, "\t{task}={state}");
        }
        line
    }
}

/// Hex rendering of a bit vector, `ceil(n/4)` digits wide.
pub fn bits_hex(bits: &[bool]) -> String {
    let digits = bits.len().div_ceil(4).max(1);
    let mut out = String::with_capacity(digits);
    for d in (0..digits).rev() {
        let mut nibble = 0u8;
        for b in 0..4 {
            if bits.get(d * 4 + b).copied().unwrap_or(false) {
                nibble |= 1 << b;
            }
        }
        out.push(
            char::from_digit(u32::from(nibble), 16)
                .unwrap()
                .to_ascii_uppercase(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_bit_order() {
        assert_eq!(bits_hex(&[]), "0");
        assert_eq!(bits_hex(&[true]), "1");
        assert_eq!(bits_hex(&[false, false, false, false, true]), "10");
        let mut nine = vec![false; 9];
        nine[8] = true;
        nine[0] = true;
        assert_eq!(bits_hex(&nine), "101");
        assert_eq!(bits_hex(&[true; 8]), "FF");
    }
}
