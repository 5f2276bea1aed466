//! Static and post-run analyses: lattice feasibility of zero-phase channels,
//! Euler bricks, lock metrics, Einstein residual statistics and Sagnac loop
//! asymmetry.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::split_reading;
use crate::control::phase_deviation;
use crate::trace::{Trace, TraceRow};
use crate::ClockReading;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("incomplete loop: no residuals for exchanges initiated by {initiator} toward {subject}")]
    IncompleteLoop { initiator: String, subject: String },
    #[error("loop needs at least three nodes, got {0}")]
    LoopTooShort(usize),
    #[error("report I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("report CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Integer lattice points and the edges that must carry zero-phase channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityInput {
    pub vertices: Vec<[i64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

impl FeasibilityInput {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let mut seen = BTreeSet::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.iter().any(|c| c.unsigned_abs() > 1 << 40) {
                return Err(AnalysisError::InvalidGeometry(format!(
                    "vertex {i} coordinates exceed 2^40"
                )));
            }
            if !seen.insert(*v) {
                return Err(AnalysisError::InvalidGeometry(format!("vertex {i} {v:?} is repeated")));
            }
        }
        for (k, &[a, b]) in self.edges.iter().enumerate() {
            if a >= self.vertices.len() || b >= self.vertices.len() {
                return Err(AnalysisError::InvalidGeometry(format!(
                    "edge {k} ({a}, {b}) references a missing vertex"
                )));
            }
            if a == b {
                return Err(AnalysisError::InvalidGeometry(format!("edge {k} is a self-loop")));
            }
        }
        Ok(())
    }

    /// Axis-aligned box with the given edge lengths: its 12 edges, plus the
    /// 12 face diagonals when `face_diagonals` is set.
    pub fn brick(a: i64, b: i64, c: i64, face_diagonals: bool) -> Self {
        let vertices: Vec<[i64; 3]> = (0..8)
            .map(|m| [(m & 1) as i64 * a, ((m >> 1) & 1) as i64 * b, ((m >> 2) & 1) as i64 * c])
            .collect();
        let mut edges = Vec::new();
        for i in 0..8usize {
            for j in i + 1..8 {
                let differing = (i ^ j).count_ones();
                if differing == 1 || (face_diagonals && differing == 2) {
                    edges.push([i, j]);
                }
            }
        }
        Self { vertices, edges }
    }

    /// Parses a geometry file:
    ///
    /// ```toml
    /// vertices = [[0, 0, 0], [3, 4, 0]]
    /// edges = [[0, 1]]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, AnalysisError> {
        let g: Self = toml::from_str(text).map_err(|e| AnalysisError::InvalidGeometry(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn unit_cube(face_diagonals: bool) -> Self {
        Self::brick(1, 1, 1, face_diagonals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Feasibility {
    /// Every required length is an integer; `tick_period` is the largest
    /// common divisor of those lengths, in lattice units.
    Feasible { tick_period: u64 },
    /// `witness` is an edge whose length is irrational.
    Infeasible { witness: [usize; 2], squared_length: u128 },
}

fn squared_distance(a: [i64; 3], b: [i64; 3]) -> u128 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| {
            let d = (*x as i128 - *y as i128).unsigned_abs();
            d * d
        })
        .sum()
}

fn exact_sqrt(n: u128) -> Option<u128> {
    let r = n.isqrt();
    (r * r == n).then_some(r)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Whether all required edges can carry zero-phase channels under one common
/// tick period. Exact: only integer arithmetic.
pub fn stripes_feasible(input: &FeasibilityInput) -> Result<Feasibility, AnalysisError> {
    input.validate()?;
    let mut period = 0u64;
    for &[a, b] in &input.edges {
        let sq = squared_distance(input.vertices[a], input.vertices[b]);
        match exact_sqrt(sq) {
            Some(len) => period = gcd(period, len as u64),
            None => {
                return Ok(Feasibility::Infeasible {
                    witness: [a, b],
                    squared_length: sq,
                })
            }
        }
    }
    Ok(Feasibility::Feasible { tick_period: period })
}

/// Smallest box (by longest, then middle, then shortest edge) with integer
/// edges no longer than `limit` and all three face diagonals integral.
pub fn find_euler_brick(limit: u64) -> Option<(u64, u64, u64)> {
    let sq = |x: u64| (x as u128) * (x as u128);
    for c in 1..=limit {
        for b in 1..=c {
            if exact_sqrt(sq(b) + sq(c)).is_none() {
                continue;
            }
            for a in 1..=b {
                if exact_sqrt(sq(a) + sq(b)).is_some() && exact_sqrt(sq(a) + sq(c)).is_some() {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

/// Face diagonals of a box, if all three are integral: `(ab, bc, ac)`.
pub fn face_diagonals(a: u64, b: u64, c: u64) -> Option<(u64, u64, u64)> {
    let d = |x: u64, y: u64| exact_sqrt((x as u128).pow(2) + (y as u128).pow(2)).map(|v| v as u64);
    Some((d(a, b)?, d(b, c)?, d(a, c)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SagnacResult {
    /// Sum around the loop of co-rotating minus counter-rotating mean
    /// residuals, seconds.
    pub measured: f64,
    /// `4 pi R^2 Omega / c^2`, seconds.
    pub predicted: f64,
}

impl SagnacResult {
    pub fn ratio(&self) -> f64 {
        self.measured / self.predicted
    }
}

fn residuals_from(trace: &Trace, initiator: &str, subject: &str) -> Vec<f64> {
    let channel = format!("{subject}->{initiator}");
    trace
        .arrivals()
        .filter(|r| r.node_id == initiator && r.channel.as_deref() == Some(channel.as_str()))
        .filter_map(|r| r.residual_s)
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Loop asymmetry of Einstein residuals around `loop_nodes`, traversed in
/// the given order.
pub fn sagnac_asymmetry(
    trace: &Trace,
    loop_nodes: &[String],
    angular_rate: f64,
    radius: f64,
    c: f64,
) -> Result<SagnacResult, AnalysisError> {
    if loop_nodes.len() < 3 {
        return Err(AnalysisError::LoopTooShort(loop_nodes.len()));
    }
    let mut measured = 0.0;
    for (a, b) in loop_nodes.iter().zip(loop_nodes.iter().cycle().skip(1)) {
        let co = residuals_from(trace, a, b);
        let counter = residuals_from(trace, b, a);
        for (xs, i, s) in [(&co, a, b), (&counter, b, a)] {
            if xs.is_empty() {
                return Err(AnalysisError::IncompleteLoop {
                    initiator: i.clone(),
                    subject: s.clone(),
                });
            }
        }
        measured += mean(&co) - mean(&counter);
    }
    let predicted = 4.0 * std::f64::consts::PI * radius * radius * angular_rate / (c * c);
    Ok(SagnacResult { measured, predicted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: String,
    pub phi0: f64,
    pub receptions: u64,
    pub accepted: u64,
    pub dropped: u64,
    pub drop_rate: f64,
    /// First receiver cycle after which every reception was accepted.
    /// `None` when the run ended on a drop or nothing arrived.
    pub lock_time: Option<f64>,
    /// Lock reached by the report's deadline.
    pub locked: bool,
    /// Largest `|phase - phi0|` over receptions after lock.
    pub post_lock_max_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// Node that computed the residuals.
    pub initiator: String,
    /// Node whose reading the residuals are about.
    pub subject: String,
    pub exchanges: u64,
    pub mean_residual_s: f64,
    pub max_abs_residual_s: f64,
    /// Largest `|residual|` over the second half of the exchanges.
    pub settled_max_abs_residual_s: f64,
    pub last_residual_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub horizon_cycles: f64,
    pub lock_deadline: f64,
    pub channels: Vec<ChannelReport>,
    pub pairs: Vec<PairReport>,
    pub sagnac: Option<SagnacResult>,
}

fn channel_report(
    name: &str,
    phi0: f64,
    eta_ok: impl Fn(&TraceRow) -> bool,
    rows: &[&TraceRow],
    deadline: f64,
) -> ChannelReport {
    let receptions = rows.len() as u64;
    let accepted = rows.iter().filter(|r| eta_ok(r)).count() as u64;
    let dropped = receptions - accepted;
    let last_drop = rows.iter().rposition(|r| !eta_ok(r));
    let lock_time = match (rows.last(), last_drop) {
        (None, _) => None,
        (Some(_), None) => Some(0.0),
        (Some(_), Some(k)) if k + 1 == rows.len() => None,
        (Some(_), Some(k)) => Some((rows[k].count + 1) as f64),
    };
    let after = last_drop.map_or(0, |k| k + 1);
    let post_lock_max_deviation = lock_time.map(|_| {
        rows[after..]
            .iter()
            .map(|r| {
                let rx = ClockReading {
                    count: r.count,
                    phase: r.phase,
                };
                phase_deviation(&rx, phi0).abs()
            })
            .fold(0.0, f64::max)
    });
    ChannelReport {
        channel: name.to_owned(),
        phi0,
        receptions,
        accepted,
        dropped,
        drop_rate: if receptions > 0 {
            dropped as f64 / receptions as f64
        } else {
            0.0
        },
        lock_time,
        locked: lock_time.is_some_and(|t| t <= deadline),
        post_lock_max_deviation,
    }
}

/// Per-channel lock metrics, per-pair residual statistics and, when the
/// trace describes a rotating loop, the Sagnac asymmetry.
pub fn sync_report(trace: &Trace) -> SyncReport {
    let mut by_channel: BTreeMap<&str, Vec<&TraceRow>> = BTreeMap::new();
    let mut residuals: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in trace.arrivals() {
        let Some(ch) = r.channel.as_deref() else { continue };
        by_channel.entry(ch).or_default().push(r);
        if let Some(res) = r.residual_s {
            let subject = ch.split("->").next().unwrap_or(ch);
            residuals.entry((r.node_id.as_str(), subject)).or_default().push(res);
        }
    }
    let deadline = trace.meta.lock_deadline;
    let mut channels = Vec::new();
    let names: Vec<(String, Option<f64>)> = if trace.meta.channels.is_empty() {
        by_channel.keys().map(|k| (k.to_string(), None)).collect()
    } else {
        trace.meta.channels.iter().map(|c| (c.name.clone(), c.phi0)).collect()
    };
    for (name, phi0) in names {
        let rows = by_channel.get(name.as_str()).cloned().unwrap_or_default();
        channels.push(channel_report(
            &name,
            phi0.unwrap_or(0.0),
            |r| r.accepted == Some(true),
            &rows,
            deadline,
        ));
    }
    let pairs = residuals
        .into_iter()
        .map(|((initiator, subject), xs)| {
            let abs_max = |s: &[f64]| s.iter().map(|x| x.abs()).fold(0.0, f64::max);
            PairReport {
                initiator: initiator.to_owned(),
                subject: subject.to_owned(),
                exchanges: xs.len() as u64,
                mean_residual_s: mean(&xs),
                max_abs_residual_s: abs_max(&xs),
                settled_max_abs_residual_s: abs_max(&xs[xs.len() / 2..]),
                last_residual_s: *xs.last().expect("non-empty"),
            }
        })
        .collect();
    let sagnac = trace
        .meta
        .sagnac_loop
        .as_ref()
        .and_then(|g| sagnac_asymmetry(trace, &g.nodes, g.angular_rate, g.radius, g.c).ok());
    SyncReport {
        horizon_cycles: trace.meta.horizon_cycles,
        lock_deadline: deadline,
        channels,
        pairs,
        sagnac,
    }
}

/// Independent re-application of the writing-window rule to a recorded
/// arrival: `|phase| < (1 - eta)/2`.
pub fn admitted_by_window(row: &TraceRow, eta: f64) -> bool {
    let phase = split_reading(row.reading_cycles).map_or(row.phase, |r| r.phase);
    phase.abs() < (1.0 - eta) / 2.0
}

impl SyncReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelReport> {
        self.channels.iter().find(|c| c.channel == name)
    }

    pub fn pair(&self, initiator: &str, subject: &str) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.initiator == initiator && p.subject == subject)
    }

    pub fn to_json(&self) -> Result<String, AnalysisError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat `section,name,metric,value` table; absent values are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AnalysisError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["section", "name", "metric", "value"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.write_record(["run", "", "horizon_cycles", &self.horizon_cycles.to_string()])?;
        out.write_record(["run", "", "lock_deadline", &self.lock_deadline.to_string()])?;
        for c in &self.channels {
            let name = c.channel.as_str();
            for (metric, value) in [
                ("phi0", c.phi0.to_string()),
                ("receptions", c.receptions.to_string()),
                ("accepted", c.accepted.to_string()),
                ("dropped", c.dropped.to_string()),
                ("drop_rate", c.drop_rate.to_string()),
                ("lock_time", opt(c.lock_time)),
                ("locked", c.locked.to_string()),
                ("post_lock_max_deviation", opt(c.post_lock_max_deviation)),
            ] {
                out.write_record(["channel", name, metric, &value])?;
            }
        }
        for p in &self.pairs {
            let name = format!("{}:{}", p.initiator, p.subject);
            for (metric, value) in [
                ("exchanges", p.exchanges.to_string()),
                ("mean_residual_s", p.mean_residual_s.to_string()),
                ("max_abs_residual_s", p.max_abs_residual_s.to_string()),
                ("settled_max_abs_residual_s", p.settled_max_abs_residual_s.to_string()),
                ("last_residual_s", p.last_residual_s.to_string()),
            ] {
                out.write_record(["pair", &name, metric, &value])?;
            }
        }
        if let Some(s) = &self.sagnac {
            out.write_record(["sagnac", "", "measured_s", &s.measured.to_string()])?;
            out.write_record(["sagnac", "", "predicted_s", &s.predicted.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
