//! Patient-night data model and reduction to sufficient statistics.
//!
//! A night is a sequence of 30-second epochs, each scored Awake, REM, or
//! non-REM, together with scored apnea/hypopnea events (start, duration,
//! stage). The model never needs the raw sequence: per patient it consumes
//! event-conditional transition counts and per-stage event counts/exposures.

mod parse;
mod stats;

pub use parse::{parse_records, serialize_records, ParseOutcome};
pub use stats::{derive_sufficient_stats, epoch_event_indicator};

use crate::stage::{SleepStage, Stage, N_SLEEP_STAGES, N_TARGETS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Scoring window length; fixed by the recording protocol.
pub const EPOCH_LEN_SEC: f64 = 30.0;
/// Minimum scorable event duration.
pub const MIN_EVENT_DURATION_SEC: f64 = 10.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file} line {line}: {msg}")]
    MalformedRow { file: String, line: u64, msg: String },
    #[error("{file} line {line}: unknown stage code {code:?}")]
    UnknownStage { file: String, line: u64, code: String },
    #[error("patient {patient_id}: {msg}")]
    InvalidRecord { patient_id: String, msg: String },
    #[error("patient {patient_id}: event at {at_sec}s overlaps the previous event")]
    OverlappingEvents { patient_id: String, at_sec: f64 },
    #[error(
        "patient {patient_id}: event starting at {start_sec}s is labeled {labeled} but starts \
         in an epoch scored {scored}"
    )]
    EventStageMismatch {
        patient_id: String,
        start_sec: f64,
        labeled: String,
        scored: String,
    },
    #[error("events reference unknown patient {patient_id}")]
    UnknownPatient { patient_id: String },
}

/// Why a patient was excluded from the analysis cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionReason {
    /// Never entered REM sleep during the recording.
    NoRemSleep,
    /// Never entered non-REM sleep during the recording.
    NoNonRemSleep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exclusion {
    pub patient_id: String,
    pub reason: ExclusionReason,
}

/// A scored apnea/hypopnea event. `stage` is the sleep stage of the epoch
/// containing the event's start; an event keeps that label even if the stage
/// changes while it is ongoing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub start_sec: f64,
    pub duration_sec: f64,
    pub stage: SleepStage,
}

impl EventInterval {
    pub fn end_sec(&self) -> f64 {
        self.start_sec + self.duration_sec
    }
}

/// One patient-night: epoch-indexed stage sequence plus scored events.
///
/// Construction validates the structural invariants (event containment,
/// minimum duration, non-overlap, start-epoch stage agreement). Whether the
/// patient qualifies for the analysis cohort (at least one REM and one
/// non-REM epoch) is a separate check, [`SleepRecord::cohort_exclusion`],
/// applied at ingest: degenerate nights can legitimately exist as data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleepRecord {
    patient_id: String,
    stages: Vec<Stage>,
    events: Vec<EventInterval>,
}

impl SleepRecord {
    pub fn new(
        patient_id: impl Into<String>,
        stages: Vec<Stage>,
        mut events: Vec<EventInterval>,
    ) -> Result<SleepRecord, DataError> {
        let patient_id = patient_id.into();
        if stages.is_empty() {
            return Err(DataError::InvalidRecord {
                patient_id,
                msg: "empty stage sequence".into(),
            });
        }
        let span = stages.len() as f64 * EPOCH_LEN_SEC;
        events.sort_by(|a, b| a.start_sec.total_cmp(&b.start_sec));
        let mut prev_end = f64::NEG_INFINITY;
        for ev in &events {
            if !ev.start_sec.is_finite() || !ev.duration_sec.is_finite() {
                return Err(DataError::InvalidRecord {
                    patient_id,
                    msg: "non-finite event time".into(),
                });
            }
            if ev.duration_sec < MIN_EVENT_DURATION_SEC {
                return Err(DataError::InvalidRecord {
                    patient_id,
                    msg: format!(
                        "event at {}s lasts {}s, below the {}s minimum",
                        ev.start_sec, ev.duration_sec, MIN_EVENT_DURATION_SEC
                    ),
                });
            }
            if ev.start_sec < 0.0 || ev.end_sec() > span {
                return Err(DataError::InvalidRecord {
                    patient_id,
                    msg: format!(
                        "event [{}, {})s lies outside the {}s recording span",
                        ev.start_sec,
                        ev.end_sec(),
                        span
                    ),
                });
            }
            if ev.start_sec < prev_end {
                return Err(DataError::OverlappingEvents {
                    patient_id,
                    at_sec: ev.start_sec,
                });
            }
            prev_end = ev.end_sec();
            let epoch = (ev.start_sec / EPOCH_LEN_SEC) as usize;
            let scored = stages[epoch.min(stages.len() - 1)];
            if scored.as_sleep() != Some(ev.stage) {
                return Err(DataError::EventStageMismatch {
                    patient_id,
                    start_sec: ev.start_sec,
                    labeled: ev.stage.to_string(),
                    scored: scored.to_string(),
                });
            }
        }
        Ok(SleepRecord {
            patient_id,
            stages,
            events,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn events(&self) -> &[EventInterval] {
        &self.events
    }

    /// Number of scored epochs.
    pub fn n_epochs(&self) -> usize {
        self.stages.len()
    }

    pub fn epoch_len_sec(&self) -> f64 {
        EPOCH_LEN_SEC
    }

    /// Epoch window `[start, end)` in seconds from recording start.
    pub fn epoch_window(&self, epoch: usize) -> (f64, f64) {
        let a = epoch as f64 * EPOCH_LEN_SEC;
        (a, a + EPOCH_LEN_SEC)
    }

    /// Cohort check: patients who never entered REM (or non-REM) sleep are
    /// excluded from analysis rather than treated as malformed data.
    pub fn cohort_exclusion(&self) -> Option<ExclusionReason> {
        if !self.stages.iter().any(|s| *s == Stage::Rem) {
            Some(ExclusionReason::NoRemSleep)
        } else if !self.stages.iter().any(|s| *s == Stage::NonRem) {
            Some(ExclusionReason::NoNonRemSleep)
        } else {
            None
        }
    }

    pub fn epochs_in_stage(&self, stage: Stage) -> usize {
        self.stages.iter().filter(|s| **s == stage).count()
    }

    pub fn events_in_stage(&self, stage: SleepStage) -> usize {
        self.events.iter().filter(|e| e.stage == stage).count()
    }

    /// Hours spent in `stage` (epoch count times 30 seconds).
    pub fn hours_in_stage(&self, stage: Stage) -> f64 {
        self.epochs_in_stage(stage) as f64 * EPOCH_LEN_SEC / 3600.0
    }

    /// Stage-specific apnea-hypopnea index: events labeled `stage` per hour
    /// spent in it. `None` when the patient has no epochs in the stage.
    pub fn stage_ahi(&self, stage: SleepStage) -> Option<f64> {
        let hours = self.hours_in_stage(stage.as_stage());
        (hours > 0.0).then(|| self.events_in_stage(stage) as f64 / hours)
    }
}

/// Event-conditional transition counts for one patient.
///
/// `counts[h][k_o][k_n]` is the number of non-final epochs the patient spent
/// in sleep stage `k_o` with event status `h` followed by stage `k_n`
/// (targets ordered Awake, REM, non-REM). `at_risk[h][k_o]` is the matching
/// row total.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub counts: [[[u64; N_TARGETS]; N_SLEEP_STAGES]; 2],
    pub at_risk: [[u64; N_SLEEP_STAGES]; 2],
}

impl TransitionStats {
    /// Multinomial closure: each count row sums to its at-risk total.
    pub fn is_consistent(&self) -> bool {
        (0..2).all(|h| {
            (0..N_SLEEP_STAGES).all(|k| {
                self.counts[h][k].iter().sum::<u64>() == self.at_risk[h][k]
            })
        })
    }

    /// Total at-risk epochs (non-final epochs spent asleep).
    pub fn total_at_risk(&self) -> u64 {
        self.at_risk.iter().flatten().sum()
    }
}

/// Per-stage event counts and event-free exposure for one patient.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub event_count: [u64; N_SLEEP_STAGES],
    /// Seconds spent in each sleep stage excluding time inside events.
    pub exposure_sec: [f64; N_SLEEP_STAGES],
}

/// Sufficient statistics for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientStats {
    pub patient_id: String,
    pub transitions: TransitionStats,
    pub events: EventStats,
}

/// Sufficient statistics for a cohort, one entry per patient.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    entries: Vec<PatientStats>,
}

impl SufficientStats {
    pub fn new(entries: Vec<PatientStats>) -> SufficientStats {
        SufficientStats { entries }
    }

    pub fn n_patients(&self) -> usize {
        self.entries.len()
    }

    pub fn patients(&self) -> &[PatientStats] {
        &self.entries
    }

    pub fn patient_ids(&self) -> Vec<String> {
        self.entries.iter().map(|p| p.patient_id.clone()).collect()
    }

    pub fn index_of(&self, patient_id: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.patient_id == patient_id)
    }

    /// JSON view keyed by patient id with fields `c`, `n`, `v`, `t`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<&str, serde_json::Value> = self
            .entries
            .iter()
            .map(|p| {
                (
                    p.patient_id.as_str(),
                    serde_json::json!({
                        "c": p.transitions.counts,
                        "n": p.transitions.at_risk,
                        "v": p.events.event_count,
                        "t": p.events.exposure_sec,
                    }),
                )
            })
            .collect();
        serde_json::to_value(map).expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<SufficientStats, serde_json::Error> {
        #[derive(Deserialize)]
        struct Entry {
            c: [[[u64; N_TARGETS]; N_SLEEP_STAGES]; 2],
            n: [[u64; N_SLEEP_STAGES]; 2],
            v: [u64; N_SLEEP_STAGES],
            t: [f64; N_SLEEP_STAGES],
        }
        let map: BTreeMap<String, Entry> = serde_json::from_value(value.clone())?;
        Ok(SufficientStats {
            entries: map
                .into_iter()
                .map(|(patient_id, e)| PatientStats {
                    patient_id,
                    transitions: TransitionStats {
                        counts: e.c,
                        at_risk: e.n,
                    },
                    events: EventStats {
                        event_count: e.v,
                        exposure_sec: e.t,
                    },
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stages(s: &str) -> Vec<Stage> {
        s.split(',').map(|c| Stage::from_code(c).unwrap()).collect()
    }

    #[test]
    fn minimal_record_is_valid() {
        let rec = SleepRecord::new("p1", stages("N,N,R"), vec![]).unwrap();
        assert_eq!(rec.n_epochs(), 3);
        assert!(rec.events().is_empty());
        assert!(rec.cohort_exclusion().is_none());
    }

    #[test]
    fn event_contained_in_nonrem_epoch_is_accepted() {
        let rec = SleepRecord::new(
            "p1",
            stages("N,N,R"),
            vec![EventInterval {
                start_sec: 45.0,
                duration_sec: 10.0,
                stage: SleepStage::NonRem,
            }],
        )
        .unwrap();
        assert_eq!(rec.events()[0].stage, SleepStage::NonRem);
    }

    #[test]
    fn no_rem_patient_is_cohort_excluded_not_malformed() {
        let rec = SleepRecord::new("p1", stages("N,N,N"), vec![]).unwrap();
        assert_eq!(rec.cohort_exclusion(), Some(ExclusionReason::NoRemSleep));
        let rec = SleepRecord::new("p1", stages("R,R"), vec![]).unwrap();
        assert_eq!(rec.cohort_exclusion(), Some(ExclusionReason::NoNonRemSleep));
    }

    #[test]
    fn geometry_violations_are_rejected() {
        // too short
        assert!(SleepRecord::new(
            "p",
            stages("N,R"),
            vec![EventInterval {
                start_sec: 0.0,
                duration_sec: 9.0,
                stage: SleepStage::NonRem
            }]
        )
        .is_err());
        // outside span
        assert!(SleepRecord::new(
            "p",
            stages("N,R"),
            vec![EventInterval {
                start_sec: 55.0,
                duration_sec: 10.0,
                stage: SleepStage::Rem
            }]
        )
        .is_err());
        // overlapping
        assert!(matches!(
            SleepRecord::new(
                "p",
                stages("N,N,R"),
                vec![
                    EventInterval {
                        start_sec: 0.0,
                        duration_sec: 20.0,
                        stage: SleepStage::NonRem
                    },
                    EventInterval {
                        start_sec: 15.0,
                        duration_sec: 10.0,
                        stage: SleepStage::NonRem
                    }
                ]
            ),
            Err(DataError::OverlappingEvents { .. })
        ));
        // event in awake epoch
        assert!(matches!(
            SleepRecord::new(
                "p",
                stages("A,N,R"),
                vec![EventInterval {
                    start_sec: 5.0,
                    duration_sec: 10.0,
                    stage: SleepStage::NonRem
                }]
            ),
            Err(DataError::EventStageMismatch { .. })
        ));
        // stage label disagrees with the scored epoch
        assert!(SleepRecord::new(
            "p",
            stages("N,R"),
            vec![EventInterval {
                start_sec: 0.0,
                duration_sec: 10.0,
                stage: SleepStage::Rem
            }]
        )
        .is_err());
    }

    #[test]
    fn stats_json_round_trips() {
        let stats = SufficientStats::new(vec![PatientStats {
            patient_id: "p1".into(),
            transitions: TransitionStats {
                counts: [[[1, 2, 3], [0, 0, 0]], [[0, 1, 0], [4, 0, 1]]],
                at_risk: [[6, 0], [1, 5]],
            },
            events: EventStats {
                event_count: [2, 7],
                exposure_sec: [100.0, 350.5],
            },
        }]);
        let json = stats.to_json();
        let back = SufficientStats::from_json(&json).unwrap();
        assert_eq!(stats, back);
    }
}
