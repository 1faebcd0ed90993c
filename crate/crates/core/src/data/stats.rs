//! Reduction of records to the sufficient statistics of the model.

use super::{EventStats, PatientStats, SleepRecord, SufficientStats, TransitionStats, EPOCH_LEN_SEC};
use crate::stage::SleepStage;

/// Per-epoch event indicator: entry `j` is 1 iff some event interval
/// intersects the half-open window `[30j, 30(j+1))`. Awake epochs are always
/// 0 — events are only modeled during sleep.
pub fn epoch_event_indicator(record: &SleepRecord) -> Vec<bool> {
    let mut flags = vec![false; record.n_epochs()];
    for ev in record.events() {
        let first = (ev.start_sec / EPOCH_LEN_SEC).floor() as usize;
        // end is exclusive: an event ending exactly on a boundary does not
        // touch the next epoch
        let last = ((ev.end_sec() / EPOCH_LEN_SEC).ceil() as usize).min(record.n_epochs());
        for flag in flags.iter_mut().take(last).skip(first) {
            *flag = true;
        }
    }
    for (flag, stage) in flags.iter_mut().zip(record.stages()) {
        if !stage.is_sleep() {
            *flag = false;
        }
    }
    flags
}

/// Seconds of `[a, b)` covered by `[c, d)`.
fn overlap_sec(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

fn reduce_record(record: &SleepRecord) -> PatientStats {
    let indicator = epoch_event_indicator(record);
    let stages = record.stages();

    let mut transitions = TransitionStats::default();
    for j in 0..stages.len().saturating_sub(1) {
        if let Some(k_o) = stages[j].as_sleep() {
            let h = indicator[j] as usize;
            transitions.counts[h][k_o.index()][stages[j + 1].target_index()] += 1;
            transitions.at_risk[h][k_o.index()] += 1;
        }
    }

    let mut events = EventStats::default();
    for ev in record.events() {
        events.event_count[ev.stage.index()] += 1;
    }
    // Exposure: time spent in each sleep stage minus the in-stage portion of
    // every event. Deductions follow the stage of the epoch the overlap falls
    // in, not the event's label, so an event spilling across a stage change
    // reduces the exposure of the stage it spills into.
    for k in SleepStage::ALL {
        events.exposure_sec[k.index()] =
            record.epochs_in_stage(k.as_stage()) as f64 * EPOCH_LEN_SEC;
    }
    for ev in record.events() {
        let first = (ev.start_sec / EPOCH_LEN_SEC).floor() as usize;
        let last = ((ev.end_sec() / EPOCH_LEN_SEC).ceil() as usize).min(stages.len());
        for j in first..last {
            if let Some(k) = stages[j].as_sleep() {
                let (a, b) = record.epoch_window(j);
                events.exposure_sec[k.index()] -= overlap_sec(a, b, ev.start_sec, ev.end_sec());
            }
        }
    }

    PatientStats {
        patient_id: record.patient_id().to_string(),
        transitions,
        events,
    }
}

/// Reduce a cohort of records to per-patient sufficient statistics, in input
/// order. Pure per patient, so records can be reduced independently.
pub fn derive_sufficient_stats(records: &[SleepRecord]) -> SufficientStats {
    SufficientStats::new(records.iter().map(reduce_record).collect())
}
