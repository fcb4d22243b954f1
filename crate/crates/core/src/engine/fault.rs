use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultCode {
    NoFault,
    /// Redundant input contacts disagreed for longer than the window.
    Discrepancy,
    Watchdog,
    EstopLatch,
    SearchTimeout,
    /// The chain program failed to evaluate.
    ProgramHalt,
}

impl FaultCode {
    pub const ALL: [FaultCode; 6] = [
        FaultCode::NoFault,
        FaultCode::Discrepancy,
        FaultCode::Watchdog,
        FaultCode::EstopLatch,
        FaultCode::SearchTimeout,
        FaultCode::ProgramHalt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultCode::NoFault => "NO_FAULT",
            FaultCode::Discrepancy => "DISCREPANCY",
            FaultCode::Watchdog => "WATCHDOG",
            FaultCode::EstopLatch => "ESTOP_LATCH",
            FaultCode::SearchTimeout => "SEARCH_TIMEOUT",
            FaultCode::ProgramHalt => "PROGRAM_HALT",
        }
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fault code {0:?}")]
pub struct UnknownFaultCode(pub String);

impl FromStr for FaultCode {
    type Err = UnknownFaultCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownFaultCode(s.to_string()))
    }
}

/// Per-chain latched fault. Once set it stays until an explicit reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FaultRegister {
    code: Option<FaultCode>,
    latched_at_ms: Option<u64>,
}

impl FaultRegister {
    pub fn code(&self) -> FaultCode {
        self.code.unwrap_or(FaultCode::NoFault)
    }

    pub fn latched_at_ms(&self) -> Option<u64> {
        self.latched_at_ms
    }

    pub fn is_faulted(&self) -> bool {
        self.code.is_some()
    }

    /// Latches `code` unless a fault is already held; the first fault wins.
    pub(crate) fn latch(&mut self, code: FaultCode, at_ms: u64) {
        debug_assert_ne!(code, FaultCode::NoFault);
        if self.code.is_none() {
            self.code = Some(code);
            self.latched_at_ms = Some(at_ms);
        }
    }

    pub(crate) fn clear(&mut self) {
        *self = FaultRegister::default();
    }
}

impl fmt::Display for FaultRegister {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.code, self.latched_at_ms) {
            (Some(c), Some(t)) => write!(f, "{c}@{t}"),
            _ => f.write_str(FaultCode::NoFault.as_str()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latch_is_sticky_and_first_wins() {
        let mut r = FaultRegister::default();
        assert_eq!(r.code(), FaultCode::NoFault);
        assert_eq!(r.latched_at_ms(), None);
        r.latch(FaultCode::Watchdog, 30);
        r.latch(FaultCode::Discrepancy, 40);
        assert_eq!(r.code(), FaultCode::Watchdog);
        assert_eq!(r.latched_at_ms(), Some(30));
        assert_eq!(r.to_string(), "WATCHDOG@30");
        r.clear();
        assert_eq!(r.to_string(), "NO_FAULT");
    }

    #[test]
    fn names_parse() {
        for c in FaultCode::ALL {
            assert_eq!(c.as_str().parse::<FaultCode>().unwrap(), c);
        }
        assert!("BOGUS".parse::<FaultCode>().is_err());
    }
}
