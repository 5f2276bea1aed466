//! Channels as directed edges, numeral-bearing signals and the phase gate
//! at reception.
//!
//! A signal that reaches its receiver outside the writing window is lost.
//! It is not queued or retried; only the channel's drop counter records it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{in_writing_phase, ClockError, ReadingPair};
use crate::node::{LiveClockNode, NodeId, Record, RecordSource};
use crate::ClockReading;

/// Consecutive drops (or accepts) that flip a channel's status.
pub const DEFAULT_STATUS_WINDOW: u32 = 8;
/// Largest phase at which a reading still counts as an integer reading.
pub const TRANSMIT_PHASE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("routing error: no channel {src} -> {dst}")]
    Routing { src: NodeId, dst: NodeId },
    #[error("duplicate channel {src} -> {dst}")]
    DuplicateChannel { src: NodeId, dst: NodeId },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("malformed payload {payload:?}: {reason}")]
    Payload { payload: String, reason: String },
    #[error(transparent)]
    Clock(#[from] ClockError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub source: NodeId,
    pub dest: NodeId,
    pub payload: String,
    pub tx_reading: ClockReading,
    pub emit_t: f64,
    /// Set by the engine once the arrival has been solved.
    pub arrival_t: Option<f64>,
    pub sequence: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelStatus {
    Acquiring,
    Locked,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub pair: ReadingPair<f64>,
    pub rx_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub src: NodeId,
    pub dst: NodeId,
    pub log: Vec<LogEntry>,
    pub aiming_phase: f64,
    pub status: ChannelStatus,
    pub transmitted: u64,
    pub accepted: u64,
    pub dropped: u64,
    status_window: u32,
    run_accepts: u32,
    run_drops: u32,
}

impl Channel {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Self {
            src,
            dst,
            log: Vec::new(),
            aiming_phase: 0.0,
            status: ChannelStatus::Acquiring,
            transmitted: 0,
            accepted: 0,
            dropped: 0,
            status_window: DEFAULT_STATUS_WINDOW,
            run_accepts: 0,
            run_drops: 0,
        }
    }

    pub fn with_aiming_phase(mut self, phi0: f64) -> Self {
        self.aiming_phase = phi0;
        self
    }

    pub fn with_status_window(mut self, w: u32) -> Self {
        self.status_window = w.max(1);
        self
    }

    pub fn name(&self) -> String {
        channel_name(&self.src, &self.dst)
    }

    /// Logged (tx, rx) reading pairs in reception order.
    pub fn pairs(&self) -> Vec<ReadingPair<f64>> {
        self.log.iter().map(|e| e.pair).collect()
    }

    fn note_accept(&mut self) {
        self.accepted += 1;
        self.run_drops = 0;
        self.run_accepts += 1;
        if self.run_accepts >= self.status_window {
            self.status = ChannelStatus::Locked;
        }
    }

    fn note_drop(&mut self) {
        self.dropped += 1;
        self.run_accepts = 0;
        self.run_drops += 1;
        if self.run_drops >= self.status_window && self.status == ChannelStatus::Locked {
            self.status = ChannelStatus::Lost;
        }
    }
}

pub fn channel_name(src: &NodeId, dst: &NodeId) -> String {
    format!("{src}->{dst}")
}

/// Nodes and the directed channels between them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkGraph {
    nodes: BTreeSet<NodeId>,
    channels: Vec<Channel>,
    index: BTreeMap<(NodeId, NodeId), usize>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId) -> bool {
        self.nodes.insert(id)
    }

    pub fn add_channel(&mut self, channel: Channel) -> Result<usize, NetworkError> {
        for end in [&channel.src, &channel.dst] {
            if !self.nodes.contains(end) {
                return Err(NetworkError::UnknownNode(end.clone()));
            }
        }
        if channel.src == channel.dst {
            return Err(NetworkError::SelfLoop(channel.src));
        }
        let key = (channel.src.clone(), channel.dst.clone());
        if self.index.contains_key(&key) {
            return Err(NetworkError::DuplicateChannel { src: key.0, dst: key.1 });
        }
        let idx = self.channels.len();
        self.channels.push(channel);
        self.index.insert(key, idx);
        Ok(idx)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, idx: usize) -> &Channel {
        &self.channels[idx]
    }

    pub fn channel_mut(&mut self, idx: usize) -> &mut Channel {
        &mut self.channels[idx]
    }

    pub fn channel_index(&self, a: &NodeId, b: &NodeId) -> Option<usize> {
        self.index.get(&(a.clone(), b.clone())).copied()
    }

    /// Looks up the channel from `a` to `b`. Direction matters.
    pub fn channel_between(&self, a: &NodeId, b: &NodeId) -> Option<&Channel> {
        self.channel_index(a, b).map(|i| &self.channels[i])
    }

    pub fn channel_between_mut(&mut self, a: &NodeId, b: &NodeId) -> Option<&mut Channel> {
        self.channel_index(a, b).map(move |i| &mut self.channels[i])
    }
}

/// Stamps a signal from `node` on `channel` at coordinate time `now_t`.
///
/// The node must be at an integer reading.
pub fn transmit(
    node: &mut LiveClockNode,
    channel: &mut Channel,
    payload: impl Into<String>,
    now_t: f64,
) -> Result<Signal, NetworkError> {
    if channel.src != node.id {
        return Err(NetworkError::Routing {
            src: node.id.clone(),
            dst: channel.dst.clone(),
        });
    }
    let tx = node.split_at(now_t)?;
    if tx.phase.abs() > TRANSMIT_PHASE_TOLERANCE {
        return Err(NetworkError::Scheduling(format!(
            "{} asked to transmit at reading {} which is not an integer reading",
            node.id,
            tx.value()
        )));
    }
    let sequence = node.next_sequence;
    node.next_sequence += 1;
    channel.transmitted += 1;
    Ok(Signal {
        source: node.id.clone(),
        dest: channel.dst.clone(),
        payload: payload.into(),
        tx_reading: tx,
        emit_t: now_t,
        arrival_t: None,
        sequence,
    })
}

/// Outcome of the phase gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reception {
    Accepted(ClockReading),
    Dropped(ClockReading),
}

impl Reception {
    pub fn reading(&self) -> ClockReading {
        match *self {
            Reception::Accepted(r) | Reception::Dropped(r) => r,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, Reception::Accepted(_))
    }
}

/// Applies the writing-window gate to `signal` arriving at `node` at `now_t`.
///
/// On acceptance the reading pair is logged on the channel and the payload
/// is written into the node's record memory.
pub fn receive(
    graph: &mut NetworkGraph,
    node: &mut LiveClockNode,
    signal: &Signal,
    now_t: f64,
) -> Result<Reception, NetworkError> {
    if let Some(t) = signal.arrival_t {
        if (t - now_t).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(NetworkError::Scheduling(format!(
                "signal due at {t} delivered at {now_t}"
            )));
        }
    }
    let channel = graph
        .channel_between_mut(&signal.source, &node.id)
        .ok_or_else(|| NetworkError::Routing {
            src: signal.source.clone(),
            dst: node.id.clone(),
        })?;
    let rx = node.split_at(now_t)?;
    if in_writing_phase(&rx, node.clock.eta)? {
        channel.log.push(LogEntry {
            pair: ReadingPair {
                tx: signal.tx_reading,
                rx,
            },
            rx_t: now_t,
        });
        channel.note_accept();
        node.memory.push(Record {
            source: RecordSource::Node(signal.source.clone()),
            payload: signal.payload.clone(),
            tx_reading: Some(signal.tx_reading),
            rx_reading: rx,
        });
        Ok(Reception::Accepted(rx))
    } else {
        channel.note_drop();
        Ok(Reception::Dropped(rx))
    }
}

/// Numerals carried on timing channels.
///
/// Encoded as four `;`-separated decimal fields, empty when absent:
/// `count;echo_tx;echo_rx;residual`.
///
/// * `count`: the sender's integer reading at transmission.
/// * `echo_tx`, `echo_rx`: the receiver's earlier transmit reading and the
///   sender's reading when that signal arrived (a reply to a probe).
/// * `residual`: the Einstein residual of the receiver relative to the
///   sender, in the sender's cycles, from the last completed exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingPayload {
    pub count: i64,
    pub echo: Option<(f64, f64)>,
    pub residual: Option<f64>,
}

impl TimingPayload {
    pub fn plain(count: i64) -> Self {
        Self {
            count,
            echo: None,
            residual: None,
        }
    }

    pub fn encode(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{};{};{};{}",
            self.count,
            opt(self.echo.map(|e| e.0)),
            opt(self.echo.map(|e| e.1)),
            opt(self.residual)
        )
    }

    pub fn decode(payload: &str) -> Result<Self, NetworkError> {
        let bad = |reason: &str| NetworkError::Payload {
            payload: payload.to_owned(),
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = payload.split(';').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let count = fields[0].parse::<i64>().map_err(|_| bad("count is not an integer"))?;
        let num = |s: &str| -> Result<Option<f64>, NetworkError> {
            if s.is_empty() {
                return Ok(None);
            }
            let v: f64 = s.parse().map_err(|_| bad("field is not a decimal numeral"))?;
            if v.is_finite() {
                Ok(Some(v))
            } else {
                Err(bad("field is not finite"))
            }
        };
        let echo = match (num(fields[1])?, num(fields[2])?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("echo needs both readings")),
        };
        Ok(Self {
            count,
            echo,
            residual: num(fields[3])?,
        })
    }
}

impl fmt::Display for TimingPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}
