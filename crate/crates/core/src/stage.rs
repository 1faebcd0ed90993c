//! Stage vocabulary shared across the crate.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Epoch-level sleep stage. Non-REM collapses all depth levels into one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Awake,
    Rem,
    NonRem,
}

impl Stage {
    /// Index in the transition-count target ordering (Awake, REM, non-REM).
    pub fn target_index(self) -> usize {
        match self {
            Stage::Awake => 0,
            Stage::Rem => 1,
            Stage::NonRem => 2,
        }
    }

    pub fn from_target_index(idx: usize) -> Option<Stage> {
        match idx {
            0 => Some(Stage::Awake),
            1 => Some(Stage::Rem),
            2 => Some(Stage::NonRem),
            _ => None,
        }
    }

    /// Single-letter code used in the epochs CSV schema.
    pub fn code(self) -> char {
        match self {
            Stage::Awake => 'A',
            Stage::Rem => 'R',
            Stage::NonRem => 'N',
        }
    }

    pub fn from_code(code: &str) -> Option<Stage> {
        match code {
            "A" => Some(Stage::Awake),
            "R" => Some(Stage::Rem),
            "N" => Some(Stage::NonRem),
            _ => None,
        }
    }

    pub fn as_sleep(self) -> Option<SleepStage> {
        match self {
            Stage::Rem => Some(SleepStage::Rem),
            Stage::NonRem => Some(SleepStage::NonRem),
            Stage::Awake => None,
        }
    }

    pub fn is_sleep(self) -> bool {
        self != Stage::Awake
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Sleep stage proper (REM or non-REM); events only occur while asleep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SleepStage {
    Rem,
    NonRem,
}

/// Number of sleep stages events/transitions are indexed by.
pub const N_SLEEP_STAGES: usize = 2;
/// Number of transition targets (Awake, REM, non-REM).
pub const N_TARGETS: usize = 3;

impl SleepStage {
    pub const ALL: [SleepStage; 2] = [SleepStage::Rem, SleepStage::NonRem];

    /// Index into per-sleep-stage arrays (REM = 0, non-REM = 1).
    pub fn index(self) -> usize {
        match self {
            SleepStage::Rem => 0,
            SleepStage::NonRem => 1,
        }
    }

    pub fn from_index(idx: usize) -> Option<SleepStage> {
        match idx {
            0 => Some(SleepStage::Rem),
            1 => Some(SleepStage::NonRem),
            _ => None,
        }
    }

    pub fn as_stage(self) -> Stage {
        match self {
            SleepStage::Rem => Stage::Rem,
            SleepStage::NonRem => Stage::NonRem,
        }
    }

    pub fn code(self) -> char {
        self.as_stage().code()
    }

    pub fn from_code(code: &str) -> Option<SleepStage> {
        Stage::from_code(code).and_then(Stage::as_sleep)
    }
}

impl fmt::Display for SleepStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}
