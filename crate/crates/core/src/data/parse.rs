//! CSV ingest and serialization of patient-night records.
//!
//! Schemas:
//! - `epochs.csv`: header `patient_id,epoch,stage`, stage in {A,R,N}; rows
//!   sorted by (patient_id, epoch); epoch 0-based and contiguous per patient.
//! - `events.csv`: header `patient_id,start_sec,duration_sec,stage`, stage in
//!   {R,N}.
//!
//! Canonical output order (what [`serialize_records`] writes) is patients by
//! id and events by start time; canonical files round-trip byte-exactly.

use super::{DataError, EventInterval, Exclusion, SleepRecord};
use crate::stage::{SleepStage, Stage};
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// Result of ingesting a cohort: validated records plus the patients dropped
/// by the cohort rule (never entered REM or non-REM sleep).
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub records: Vec<SleepRecord>,
    pub exclusions: Vec<Exclusion>,
}

fn malformed(file: &str, line: u64, msg: impl Into<String>) -> DataError {
    DataError::MalformedRow {
        file: file.into(),
        line,
        msg: msg.into(),
    }
}

fn reader_for(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn check_header(
    reader: &mut csv::Reader<impl Read>,
    file: &str,
    expected: &[&str],
) -> Result<(), DataError> {
    let headers = reader
        .headers()
        .map_err(|e| malformed(file, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(malformed(
            file,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Parse epoch and event streams into validated records.
///
/// Structural problems (bad rows, overlapping events, events in Awake
/// epochs, unknown stage codes) are hard errors with the offending line.
/// Patients who never entered REM or non-REM sleep parse cleanly but are
/// returned as exclusions instead of records.
pub fn parse_records(
    epoch_input: impl Read,
    event_input: impl Read,
) -> Result<ParseOutcome, DataError> {
    const EPOCHS: &str = "epochs.csv";
    const EVENTS: &str = "events.csv";

    let mut epoch_reader = reader_for(epoch_input);
    check_header(&mut epoch_reader, EPOCHS, &["patient_id", "epoch", "stage"])?;

    // (patient_id, stages) in file order; the sort requirement makes this
    // sorted by patient id
    let mut patients: Vec<(String, Vec<Stage>)> = Vec::new();
    let mut seen_last: Option<String> = None;
    for row in epoch_reader.records() {
        let row = row.map_err(|e| malformed(EPOCHS, 0, e.to_string()))?;
        let line = row_line(&row);
        if row.len() != 3 {
            return Err(malformed(EPOCHS, line, format!("expected 3 fields, found {}", row.len())));
        }
        let patient_id = row[0].to_string();
        let epoch: usize = row[1]
            .parse()
            .map_err(|_| malformed(EPOCHS, line, format!("bad epoch index {:?}", &row[1])))?;
        let stage = Stage::from_code(&row[2]).ok_or_else(|| DataError::UnknownStage {
            file: EPOCHS.into(),
            line,
            code: row[2].to_string(),
        })?;

        let start_new = match &seen_last {
            None => true,
            Some(last) => {
                if *last > patient_id {
                    return Err(malformed(
                        EPOCHS,
                        line,
                        format!("rows not sorted by patient_id: {last:?} before {patient_id:?}"),
                    ));
                }
                *last != patient_id
            }
        };
        if start_new {
            if patients.iter().any(|(id, _)| *id == patient_id) {
                return Err(malformed(
                    EPOCHS,
                    line,
                    format!("patient {patient_id:?} appears in two separate blocks"),
                ));
            }
            patients.push((patient_id.clone(), Vec::new()));
            seen_last = Some(patient_id);
        }
        let stages = &mut patients.last_mut().expect("just pushed").1;
        if epoch != stages.len() {
            return Err(malformed(
                EPOCHS,
                line,
                format!("epoch {epoch} out of order; expected {}", stages.len()),
            ));
        }
        stages.push(stage);
    }

    let mut event_reader = reader_for(event_input);
    check_header(
        &mut event_reader,
        EVENTS,
        &["patient_id", "start_sec", "duration_sec", "stage"],
    )?;
    let mut events_by_patient: BTreeMap<String, Vec<EventInterval>> = BTreeMap::new();
    for row in event_reader.records() {
        let row = row.map_err(|e| malformed(EVENTS, 0, e.to_string()))?;
        let line = row_line(&row);
        if row.len() != 4 {
            return Err(malformed(EVENTS, line, format!("expected 4 fields, found {}", row.len())));
        }
        let patient_id = row[0].to_string();
        if !patients.iter().any(|(id, _)| *id == patient_id) {
            return Err(DataError::UnknownPatient { patient_id });
        }
        let start_sec: f64 = row[1]
            .parse()
            .map_err(|_| malformed(EVENTS, line, format!("bad start_sec {:?}", &row[1])))?;
        let duration_sec: f64 = row[2]
            .parse()
            .map_err(|_| malformed(EVENTS, line, format!("bad duration_sec {:?}", &row[2])))?;
        let stage = SleepStage::from_code(&row[3]).ok_or_else(|| DataError::UnknownStage {
            file: EVENTS.into(),
            line,
            code: row[3].to_string(),
        })?;
        events_by_patient.entry(patient_id).or_default().push(EventInterval {
            start_sec,
            duration_sec,
            stage,
        });
    }

    let mut records = Vec::with_capacity(patients.len());
    let mut exclusions = Vec::new();
    for (patient_id, stages) in patients {
        let events = events_by_patient.remove(&patient_id).unwrap_or_default();
        let record = SleepRecord::new(patient_id, stages, events)?;
        match record.cohort_exclusion() {
            Some(reason) => exclusions.push(Exclusion {
                patient_id: record.patient_id().to_string(),
                reason,
            }),
            None => records.push(record),
        }
    }
    Ok(ParseOutcome { records, exclusions })
}

/// Write records in canonical CSV form (patients sorted by id, events by
/// start time). Fails on duplicate patient ids.
pub fn serialize_records(
    records: &[SleepRecord],
    epoch_output: impl Write,
    event_output: impl Write,
) -> Result<(), DataError> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].patient_id().cmp(records[b].patient_id()));
    for pair in order.windows(2) {
        if records[pair[0]].patient_id() == records[pair[1]].patient_id() {
            return Err(DataError::InvalidRecord {
                patient_id: records[pair[0]].patient_id().to_string(),
                msg: "duplicate patient id".into(),
            });
        }
    }

    let mut epochs = csv::Writer::from_writer(epoch_output);
    epochs
        .write_record(["patient_id", "epoch", "stage"])
        .map_err(io_error)?;
    for &i in &order {
        let rec = &records[i];
        for (j, stage) in rec.stages().iter().enumerate() {
            epochs
                .write_record([rec.patient_id(), &j.to_string(), &stage.to_string()])
                .map_err(io_error)?;
        }
    }
    epochs.flush().map_err(|e| io_error(csv::Error::from(e)))?;

    let mut events = csv::Writer::from_writer(event_output);
    events
        .write_record(["patient_id", "start_sec", "duration_sec", "stage"])
        .map_err(io_error)?;
    for &i in &order {
        let rec = &records[i];
        for ev in rec.events() {
            events
                .write_record([
                    rec.patient_id(),
                    &ev.start_sec.to_string(),
                    &ev.duration_sec.to_string(),
                    &ev.stage.to_string(),
                ])
                .map_err(io_error)?;
        }
    }
    events.flush().map_err(|e| io_error(csv::Error::from(e)))?;
    Ok(())
}

fn io_error(e: csv::Error) -> DataError {
    DataError::MalformedRow {
        file: "<output>".into(),
        line: 0,
        msg: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ExclusionReason;

    const EPOCHS_OK: &str = "patient_id,epoch,stage\np1,0,N\np1,1,N\np1,2,R\np2,0,R\np2,1,N\n";
    const EVENTS_EMPTY: &str = "patient_id,start_sec,duration_sec,stage\n";

    #[test]
    fn parses_minimal_cohort() {
        let out = parse_records(EPOCHS_OK.as_bytes(), EVENTS_EMPTY.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.exclusions.is_empty());
        assert_eq!(out.records[0].patient_id(), "p1");
        assert_eq!(out.records[0].n_epochs(), 3);
    }

    #[test]
    fn event_is_attached_and_validated() {
        let events = "patient_id,start_sec,duration_sec,stage\np1,45,10,N\n";
        let out = parse_records(EPOCHS_OK.as_bytes(), events.as_bytes()).unwrap();
        assert_eq!(out.records[0].events().len(), 1);
        assert_eq!(out.records[0].events()[0].stage, SleepStage::NonRem);
    }

    #[test]
    fn all_nonrem_patient_is_excluded_with_diagnostic() {
        let epochs = "patient_id,epoch,stage\np1,0,N\np1,1,N\np2,0,N\np2,1,R\n";
        let out = parse_records(epochs.as_bytes(), EVENTS_EMPTY.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.exclusions.len(), 1);
        assert_eq!(out.exclusions[0].patient_id, "p1");
        assert_eq!(out.exclusions[0].reason, ExclusionReason::NoRemSleep);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let epochs = "patient_id,epoch,stage\np1,0,N\np1,x,R\n";
        let err = parse_records(epochs.as_bytes(), EVENTS_EMPTY.as_bytes()).unwrap_err();
        match err {
            DataError::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }

        let epochs = "patient_id,epoch,stage\np1,0,Q\n";
        let err = parse_records(epochs.as_bytes(), EVENTS_EMPTY.as_bytes()).unwrap_err();
        match err {
            DataError::UnknownStage { line, code, .. } => {
                assert_eq!(line, 2);
                assert_eq!(code, "Q");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unsorted_or_gapped_epochs_are_rejected() {
        let unsorted = "patient_id,epoch,stage\np2,0,R\np1,0,N\n";
        assert!(parse_records(unsorted.as_bytes(), EVENTS_EMPTY.as_bytes()).is_err());
        let gapped = "patient_id,epoch,stage\np1,0,N\np1,2,R\n";
        assert!(parse_records(gapped.as_bytes(), EVENTS_EMPTY.as_bytes()).is_err());
    }

    #[test]
    fn event_in_awake_epoch_is_an_error() {
        let epochs = "patient_id,epoch,stage\np1,0,A\np1,1,R\np1,2,N\n";
        let events = "patient_id,start_sec,duration_sec,stage\np1,5,10,N\n";
        let err = parse_records(epochs.as_bytes(), events.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::EventStageMismatch { .. }));
    }

    #[test]
    fn overlapping_events_are_an_error() {
        let events = "patient_id,start_sec,duration_sec,stage\np1,0,20,N\np1,10,15,N\n";
        let err = parse_records(EPOCHS_OK.as_bytes(), events.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::OverlappingEvents { .. }));
    }

    #[test]
    fn unknown_patient_event_is_an_error() {
        let events = "patient_id,start_sec,duration_sec,stage\npX,0,10,N\n";
        let err = parse_records(EPOCHS_OK.as_bytes(), events.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::UnknownPatient { .. }));
    }

    #[test]
    fn canonical_round_trip_is_byte_exact() {
        let epochs = "patient_id,epoch,stage\np1,0,N\np1,1,N\np1,2,R\np2,0,R\np2,1,N\n";
        let events =
            "patient_id,start_sec,duration_sec,stage\np1,12.5,10.25,N\np1,40,11,N\np2,3,10,R\n";
        let out = parse_records(epochs.as_bytes(), events.as_bytes()).unwrap();
        let mut epochs_out = Vec::new();
        let mut events_out = Vec::new();
        serialize_records(&out.records, &mut epochs_out, &mut events_out).unwrap();
        assert_eq!(String::from_utf8(epochs_out).unwrap(), epochs);
        assert_eq!(String::from_utf8(events_out).unwrap(), events);
    }
}
