//! A live clock bound to a worldline, with its controller and record memory.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clock::{split_reading, ClockError};
use crate::{ClockReading, ClockState, ControllerState, Worldline};

/// Default capacity of a node's record memory.
pub const DEFAULT_RECORD_CAPACITY: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Where a record came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecordSource {
    Node(NodeId),
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub source: RecordSource,
    pub payload: String,
    pub tx_reading: Option<ClockReading>,
    pub rx_reading: ClockReading,
}

/// Bounded ring of the most recent records.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMemory {
    capacity: usize,
    records: VecDeque<Record>,
    total: u64,
}

impl RecordMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "record memory needs a positive capacity");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity.min(4096)),
            total: 0,
        }
    }

    pub fn push(&mut self, record: Record) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
        self.total += 1;
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records ever written, including those since evicted.
    pub fn total_written(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = &Record> {
        self.records.iter()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.back()
    }
}

#[derive(Debug, Clone)]
pub struct LiveClockNode {
    pub id: NodeId,
    pub worldline: Worldline,
    /// Clock state as of `anchor_t`.
    pub clock: ClockState,
    /// Coordinate time at which `clock.reading` was last set.
    pub anchor_t: f64,
    /// Proper-rate factor for this worldline (1 unless relativistic).
    pub kinematic_factor: f64,
    pub controller: ControllerState,
    pub memory: RecordMemory,
    pub(crate) next_sequence: u64,
}

impl LiveClockNode {
    pub fn new(id: NodeId, worldline: Worldline, clock: ClockState, controller: ControllerState) -> Self {
        Self {
            id,
            worldline,
            clock,
            anchor_t: 0.0,
            kinematic_factor: 1.0,
            controller,
            memory: RecordMemory::new(DEFAULT_RECORD_CAPACITY),
            next_sequence: 0,
        }
    }

    pub fn with_memory(mut self, memory: RecordMemory) -> Self {
        self.memory = memory;
        self
    }

    /// Reading at coordinate time `t`, interpolated on the current rate
    /// segment. Valid up to the next tick.
    pub fn reading_at(&self, t: f64) -> Result<f64, ClockError> {
        self.clock.reading_after(t - self.anchor_t, self.kinematic_factor)
    }

    pub fn split_at(&self, t: f64) -> Result<ClockReading, ClockError> {
        split_reading(self.reading_at(t)?)
    }

    /// Coordinate time of the next integer reading on the current segment.
    pub fn next_tick_time(&self) -> Result<(i64, f64), ClockError> {
        let next = self.clock.next_tick();
        let dt = self.clock.time_until(next, self.kinematic_factor)?;
        Ok((next as i64, self.anchor_t + dt))
    }

    /// Moves the anchor to a tick at `t`, landing exactly on `count`.
    pub fn land_on_tick(&mut self, count: i64, t: f64) {
        self.clock.land_on_tick(count);
        self.anchor_t = t;
    }

    /// Sequence numbers handed out so far.
    pub fn sequences_issued(&self) -> u64 {
        self.next_sequence
    }
}
