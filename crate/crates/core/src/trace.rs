//! Run traces: one row per processed event, streamed to CSV or JSON Lines.
//!
//! CSV columns, in order:
//!
//! | column            | meaning                                                  |
//! |-------------------|----------------------------------------------------------|
//! | `time_s`          | coordinate time of the event, seconds                    |
//! | `event_kind`      | `tick`, `transmit`, `arrival` or `oracle`                |
//! | `node_id`         | node whose reading the row reports                       |
//! | `reading_cycles`  | that node's reading at the event                         |
//! | `count`, `phase`  | the reading split as count and phase in `(-1/2, 1/2]`    |
//! | `channel`         | `src->dst` for transmit and arrival rows                 |
//! | `payload`         | numeral string carried by the signal or oracle injection |
//! | `accepted`        | arrival/oracle rows: whether the writing window admitted it |
//! | `rate_correction` | node's commanded fractional rate correction after the event |
//! | `residual_s`      | Einstein residual computed at this arrival, seconds      |
//!
//! Empty cells mean "not applicable". The JSON form writes one object per
//! line with the same field names.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Tick,
    Transmit,
    Arrival,
    Oracle,
}

/// Column names of the CSV trace, in order.
pub const TRACE_COLUMNS: [&str; 11] = [
    "time_s",
    "event_kind",
    "node_id",
    "reading_cycles",
    "count",
    "phase",
    "channel",
    "payload",
    "accepted",
    "rate_correction",
    "residual_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_s: f64,
    pub event_kind: EventKind,
    pub node_id: String,
    pub reading_cycles: f64,
    pub count: i64,
    pub phase: f64,
    pub channel: Option<String>,
    pub payload: Option<String>,
    pub accepted: Option<bool>,
    pub rate_correction: f64,
    pub residual_s: Option<f64>,
}

/// Static facts about the run that analyses need alongside the rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub nominal_rate: f64,
    pub horizon_cycles: f64,
    pub horizon_s: f64,
    pub etas: BTreeMap<String, f64>,
    pub channels: Vec<ChannelMeta>,
    pub sagnac_loop: Option<LoopGeometry>,
    /// Channels report "locked" only when lock is reached by this many cycles.
    pub lock_deadline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub name: String,
    pub src: String,
    pub dst: String,
    /// Phase target, if the channel aims at one.
    pub phi0: Option<f64>,
    pub steered: bool,
}

/// Rotating ring on which a Sagnac loop is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopGeometry {
    pub nodes: Vec<String>,
    pub radius: f64,
    pub angular_rate: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(meta: TraceMeta) -> Self {
        Self { meta, rows: Vec::new() }
    }

    pub fn arrivals(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| r.event_kind == EventKind::Arrival)
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.event_kind == kind)
    }
}

/// Destination for rows as the engine produces them.
pub trait TraceSink {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError>;

    fn finish(&mut self) -> Result<(), TraceError> {
        Ok(())
    }
}

impl TraceSink for Trace {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        self.rows.push(row.clone());
        Ok(())
    }
}

impl TraceSink for Vec<TraceRow> {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        self.push(row.clone());
        Ok(())
    }
}

/// Forwards every row to two sinks.
pub struct Tee<'a> {
    pub first: &'a mut dyn TraceSink,
    pub second: &'a mut dyn TraceSink,
}

impl TraceSink for Tee<'_> {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        self.first.record(row)?;
        self.second.record(row)
    }

    fn finish(&mut self) -> Result<(), TraceError> {
        self.first.finish()?;
        self.second.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Json => "jsonl",
        }
    }
}

pub struct CsvTraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvTraceWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(w),
        }
    }
}

impl<W: Write> TraceSink for CsvTraceWriter<W> {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        self.inner.serialize(row)?;
        Ok(())
    }

    fn finish(&mut self) -> Result<(), TraceError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub struct JsonTraceWriter<W: Write> {
    inner: W,
}

impl<W: Write> JsonTraceWriter<W> {
    pub fn new(w: W) -> Self {
        Self { inner: w }
    }
}

impl<W: Write> TraceSink for JsonTraceWriter<W> {
    fn record(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        serde_json::to_writer(&mut self.inner, row)?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    fn finish(&mut self) -> Result<(), TraceError> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Boxed writer for the requested format.
pub fn writer_for<'w, W: Write + 'w>(format: TraceFormat, w: W) -> Box<dyn TraceSink + 'w> {
    match format {
        TraceFormat::Csv => Box::new(CsvTraceWriter::new(w)),
        TraceFormat::Json => Box::new(JsonTraceWriter::new(w)),
    }
}

pub fn read_csv_rows<R: std::io::Read>(r: R) -> Result<Vec<TraceRow>, TraceError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn read_json_rows<R: BufRead>(r: R) -> Result<Vec<TraceRow>, TraceError> {
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TraceRow> {
        vec![
            TraceRow {
                time_s: 1.0,
                event_kind: EventKind::Tick,
                node_id: "A".into(),
                reading_cycles: 1.0,
                count: 1,
                phase: 0.0,
                channel: None,
                payload: None,
                accepted: None,
                rate_correction: -0.001,
                residual_s: None,
            },
            TraceRow {
                time_s: 1.3000000000000003,
                event_kind: EventKind::Arrival,
                node_id: "B".into(),
                reading_cycles: 1.3000000000000003,
                count: 1,
                phase: 0.30000000000000027,
                channel: Some("A->B".into()),
                payload: Some("1;0;0.3;0.0000001".into()),
                accepted: Some(true),
                rate_correction: 0.0,
                residual_s: Some(-2.5e-9),
            },
        ]
    }

    #[test]
    fn csv_header_and_round_trip() {
        let mut buf = Vec::new();
        {
            let mut w = CsvTraceWriter::new(&mut buf);
            for r in sample() {
                w.record(&r).unwrap();
            }
            w.finish().unwrap();
        }
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(read_csv_rows(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn json_round_trip() {
        let mut buf = Vec::new();
        {
            let mut w = JsonTraceWriter::new(&mut buf);
            for r in sample() {
                w.record(&r).unwrap();
            }
        }
        assert_eq!(read_json_rows(&buf[..]).unwrap(), sample());
        let first: serde_json::Value =
            serde_json::from_str(std::str::from_utf8(&buf).unwrap().lines().next().unwrap()).unwrap();
        let keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        let mut expected: Vec<_> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
        expected.sort();
        let mut keys_sorted = keys;
        keys_sorted.sort();
        assert_eq!(keys_sorted, expected);
    }
}
