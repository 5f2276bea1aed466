//! Scenario files: TOML, versioned by `schema_version`.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! horizon = 200.0          # cycles of the nominal period
//! nominal_rate = 1.0       # cycles per second
//!
//! [propagation]
//! c = 1.0
//!
//! [[nodes]]
//! id = "A"
//! eta = 0.5
//! worldline = { kind = "static", position = [0.0, 0.0, 0.0] }
//!
//! [[nodes]]
//! id = "B"
//! eta = 0.5
//! worldline = { kind = "static", position = [1.0, 0.0, 0.0] }
//!
//! [[channels]]
//! src = "A"
//! dst = "B"
//! aim = { kind = "phase", phi0 = 0.0 }
//! ```
//!
//! Parsing reports a syntax error with its line number, or every semantic
//! problem found, not just the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{writing_half_width, DEFAULT_CORRECTION_BOUND};
use crate::control::{AimKind, AimingPoint, DEFAULT_KI, DEFAULT_KP};
use crate::network::DEFAULT_STATUS_WINDOW;
use crate::node::DEFAULT_RECORD_CAPACITY;
use crate::spacetime::{Vec3, SPEED_OF_LIGHT};
use crate::{PropagationModel, Worldline};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} validation error(s):\n{}", .0.len(), render_errors(.0))]
    Invalid(Vec<ValidationError>),
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

fn render_errors(errs: &[ValidationError]) -> String {
    errs.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Dotted path of the offending field, e.g. `nodes[1].eta`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_c() -> f64 {
    SPEED_OF_LIGHT
}
fn default_metric() -> String {
    "flat".into()
}
fn default_capacity() -> usize {
    DEFAULT_RECORD_CAPACITY
}
fn default_status_window() -> u32 {
    DEFAULT_STATUS_WINDOW
}
fn default_correction_bound() -> f64 {
    DEFAULT_CORRECTION_BOUND
}
fn default_kp() -> f64 {
    DEFAULT_KP
}
fn default_ki() -> f64 {
    DEFAULT_KI
}
fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Master seed, expanded into per-node drift streams.
    #[serde(default)]
    pub seed: u64,
    /// Run length in cycles of the nominal period.
    pub horizon: f64,
    /// Nominal cycles per second; defines the cycle period used for unit
    /// conversions and node rates left unset.
    #[serde(default = "default_one")]
    pub nominal_rate: f64,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub oracles: Vec<OracleInjection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factor: Option<f64>,
    #[serde(default)]
    pub relativistic_rates: bool,
    /// `flat` or `conformally_flat`. Anything else is rejected.
    #[serde(default = "default_metric")]
    pub metric: String,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            c: SPEED_OF_LIGHT,
            conformal_factor: None,
            relativistic_rates: false,
            metric: default_metric(),
        }
    }
}

impl PropagationConfig {
    pub fn model(&self) -> PropagationModel {
        PropagationModel {
            c: self.c,
            conformal_factor: self.conformal_factor,
            relativistic_rates: self.relativistic_rates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Process arrivals before ticks at equal times, so a tick's steering
    /// sees a signal landing on that same instant.
    #[serde(default = "default_true")]
    pub arrivals_before_ticks: bool,
    #[serde(default = "default_capacity")]
    pub record_capacity: usize,
    /// Consecutive drops before a locked channel is declared lost (and
    /// accepts before it is locked again).
    #[serde(default = "default_status_window")]
    pub status_window: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            arrivals_before_ticks: true,
            record_capacity: DEFAULT_RECORD_CAPACITY,
            status_window: DEFAULT_STATUS_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Nodes of a rotating ring, in the order the loop is traversed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sagnac_loop: Option<Vec<String>>,
    /// Cycle by which a channel must have locked to be reported locked.
    /// Defaults to half the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock_deadline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    pub eta: f64,
    /// Nominal cycles per second; defaults to the scenario's `nominal_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default)]
    pub initial_reading: f64,
    #[serde(default = "default_correction_bound")]
    pub correction_bound: f64,
    pub worldline: Worldline,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub transmit: TransmitSchedule,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default)]
    pub white_fm_sigma: f64,
    #[serde(default)]
    pub rw_fm_sigma: f64,
    /// Explicit stream seed; otherwise derived from the master seed and id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_kp")]
    pub kp: f64,
    #[serde(default = "default_ki")]
    pub ki: f64,
    /// Bound on one increment; defaults to the node's correction bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_bound: Option<f64>,
    /// Anti-windup bound; defaults to `correction_bound / ki`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral_bound: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            kp: DEFAULT_KP,
            ki: DEFAULT_KI,
            command_bound: None,
            integral_bound: None,
        }
    }
}

/// Transmit on every outgoing channel at integer readings `n` with
/// `n mod every == offset`. `every = 0` silences the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitSchedule {
    #[serde(default = "default_every")]
    pub every: u32,
    #[serde(default)]
    pub offset: u32,
}

fn default_every() -> u32 {
    1
}

impl Default for TransmitSchedule {
    fn default() -> Self {
        Self { every: 1, offset: 0 }
    }
}

impl TransmitSchedule {
    pub fn fires_at(&self, count: i64) -> bool {
        self.every > 0 && count.rem_euclid(self.every as i64) == self.offset as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub src: String,
    pub dst: String,
    /// Carry timing numerals (echoes and Einstein residuals).
    #[serde(default, skip_serializing_if = "is_false")]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aim: Option<AimKind<f64>>,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default = "default_one")]
    pub weight: f64,
    /// Echo timeout in cycles; defaults to four nominal round trips.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_timeout: Option<f64>,
}

impl ChannelConfig {
    pub fn new(src: &str, dst: &str) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            timing: false,
            aim: None,
            tolerance: 0.0,
            weight: 1.0,
            echo_timeout: None,
        }
    }

    pub fn aiming_point(&self) -> Option<AimingPoint<f64>> {
        self.aim.map(|kind| AimingPoint {
            kind,
            tolerance: self.tolerance,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleInjection {
    pub node: String,
    /// Coordinate time, seconds.
    pub at: f64,
    pub numeral: String,
}

impl Scenario {
    /// Horizon in coordinate seconds.
    pub fn horizon_seconds(&self) -> f64 {
        self.horizon / self.nominal_rate
    }

    pub fn node_rate(&self, node: &NodeConfig) -> f64 {
        node.rate.unwrap_or(self.nominal_rate)
    }

    pub fn node(&self, id: &str) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Drift seed for a node: explicit, or derived from the master seed and
    /// the node id so that adding nodes leaves other streams untouched.
    pub fn node_seed(&self, node: &NodeConfig) -> u64 {
        node.drift.seed.unwrap_or_else(|| derive_seed(self.seed, &node.id))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            ScenarioError::Syntax {
                line,
                column,
                message: e.message().to_owned(),
            }
        })?;
        scenario.validate().map_err(ScenarioError::Invalid)?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Serialize(e.to_string()))
    }

    /// Checks every invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errs = Vec::new();
        let mut err = |field: String, message: String| errs.push(ValidationError { field, message });

        if self.schema_version != SCHEMA_VERSION {
            err(
                "schema_version".into(),
                format!(
                    "unsupported schema version {} (this build reads version {SCHEMA_VERSION})",
                    self.schema_version
                ),
            );
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            err(
                "horizon".into(),
                format!("must be a positive number of cycles, got {}", self.horizon),
            );
        }
        if !(self.nominal_rate > 0.0) || !self.nominal_rate.is_finite() {
            err(
                "nominal_rate".into(),
                format!("must be positive, got {}", self.nominal_rate),
            );
        }

        let p = &self.propagation;
        if !(p.c > 0.0) || !p.c.is_finite() {
            err("propagation.c".into(), format!("must be positive, got {}", p.c));
        }
        if let Some(k) = p.conformal_factor {
            if !(k > 0.0) || !k.is_finite() {
                err(
                    "propagation.conformal_factor".into(),
                    format!("must be positive, got {k}"),
                );
            }
        }
        match p.metric.as_str() {
            "flat" => {}
            "conformally_flat" => {
                if p.conformal_factor.is_none() {
                    err(
                        "propagation.conformal_factor".into(),
                        "required when metric = \"conformally_flat\"".into(),
                    );
                }
            }
            other => err(
                "propagation.metric".into(),
                format!(
                    "metric {other:?} is not supported: only \"flat\" and \"conformally_flat\" \
                     propagation is implemented; generic curved metrics admit no global \
                     signalling grid and are not approximated"
                ),
            ),
        }
        let c_eff = p.model().effective_speed();

        if self.engine.record_capacity == 0 {
            err("engine.record_capacity".into(), "must be at least 1".into());
        }
        if self.engine.status_window == 0 {
            err("engine.status_window".into(), "must be at least 1".into());
        }

        let mut ids = BTreeSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let f = |name: &str| format!("nodes[{i}].{name}");
            if n.id.is_empty() {
                err(f("id"), "must not be empty".into());
            } else if !ids.insert(n.id.as_str()) {
                err(f("id"), format!("duplicate node id {:?}", n.id));
            }
            if n.id.contains("->") || n.id.contains(',') || n.id.contains(';') {
                err(f("id"), "must not contain \"->\", ',' or ';'".into());
            }
            if !(n.eta > 0.0 && n.eta < 1.0) {
                err(f("eta"), format!("must lie strictly inside (0, 1), got {}", n.eta));
            }
            if let Some(r) = n.rate {
                if !(r > 0.0) || !r.is_finite() {
                    err(f("rate"), format!("must be positive, got {r}"));
                }
            }
            if !n.initial_reading.is_finite() {
                err(f("initial_reading"), "must be finite".into());
            }
            if !(n.correction_bound >= 0.0 && n.correction_bound < 1.0) {
                err(
                    f("correction_bound"),
                    format!("must lie in [0, 1), got {}", n.correction_bound),
                );
            }
            if !(n.drift.white_fm_sigma >= 0.0) {
                err(f("drift.white_fm_sigma"), "must be non-negative".into());
            }
            if !(n.drift.rw_fm_sigma >= 0.0) {
                err(f("drift.rw_fm_sigma"), "must be non-negative".into());
            }
            let ctl = &n.controller;
            if !(ctl.kp >= 0.0) || !(ctl.ki >= 0.0) {
                err(f("controller"), "gains must be non-negative".into());
            }
            if ctl.command_bound.is_some_and(|b| !(b >= 0.0)) {
                err(f("controller.command_bound"), "must be non-negative".into());
            }
            if ctl.integral_bound.is_some_and(|b| !(b >= 0.0)) {
                err(f("controller.integral_bound"), "must be non-negative".into());
            }
            if n.transmit.every > 0 && n.transmit.offset >= n.transmit.every {
                err(f("transmit.offset"), "must be smaller than transmit.every".into());
            }
            validate_worldline(&n.worldline, c_eff, &f("worldline"), &mut err);
        }

        let etas: BTreeMap<&str, f64> = self.nodes.iter().map(|n| (n.id.as_str(), n.eta)).collect();
        let mut pairs = BTreeSet::new();
        for (i, ch) in self.channels.iter().enumerate() {
            let f = |name: &str| format!("channels[{i}].{name}");
            for (end, id) in [("src", &ch.src), ("dst", &ch.dst)] {
                if !etas.contains_key(id.as_str()) {
                    err(f(end), format!("unknown node {id:?}"));
                }
            }
            if ch.src == ch.dst {
                err(f("dst"), "self-loops are not allowed".into());
            }
            if !pairs.insert((ch.src.as_str(), ch.dst.as_str())) {
                err(f("dst"), format!("duplicate channel {} -> {}", ch.src, ch.dst));
            }
            if !(ch.weight >= 0.0) || !ch.weight.is_finite() {
                err(f("weight"), format!("must be non-negative, got {}", ch.weight));
            }
            if !(ch.tolerance >= 0.0) {
                err(f("tolerance"), "must be non-negative".into());
            }
            if ch.echo_timeout.is_some_and(|t| !(t > 0.0)) {
                err(f("echo_timeout"), "must be positive".into());
            }
            let reverse = self.channels.iter().find(|r| r.src == ch.dst && r.dst == ch.src);
            match ch.aim {
                Some(AimKind::Phase { phi0 }) => {
                    if let Some(&eta) = etas.get(ch.dst.as_str()) {
                        if let Ok(w) = writing_half_width(eta) {
                            if !(phi0.abs() < w) {
                                err(
                                    f("aim.phi0"),
                                    format!(
                                        "phase target {phi0} is outside the writing window |phi| < {w} of {}",
                                        ch.dst
                                    ),
                                );
                            }
                        }
                    }
                }
                Some(AimKind::Echo { delta0 }) => {
                    if !(delta0 > 0.0) {
                        err(
                            f("aim.delta0"),
                            format!("echo count target must be positive, got {delta0}"),
                        );
                    }
                    if !reverse.is_some_and(|r| r.timing && ch.timing) {
                        err(f("aim"), "echo aiming needs timing channels in both directions".into());
                    }
                }
                Some(AimKind::Einstein) if !reverse.is_some_and(|r| r.timing && ch.timing) => {
                    err(
                        f("aim"),
                        "Einstein aiming needs timing channels in both directions".into(),
                    );
                }
                Some(AimKind::Einstein) => {}
                None => {}
            }
        }

        let horizon_s = self.horizon_seconds();
        for (i, o) in self.oracles.iter().enumerate() {
            let f = |name: &str| format!("oracles[{i}].{name}");
            if !etas.contains_key(o.node.as_str()) {
                err(f("node"), format!("unknown node {:?}", o.node));
            }
            if !(o.at >= 0.0 && o.at <= horizon_s) {
                err(f("at"), format!("must lie within [0, {horizon_s}] s, got {}", o.at));
            }
            if o.numeral.is_empty() || !is_decimal_numeral(&o.numeral) {
                err(f("numeral"), format!("{:?} is not a decimal numeral", o.numeral));
            }
        }

        if let Some(lp) = &self.analysis.sagnac_loop {
            if lp.len() < 3 {
                err("analysis.sagnac_loop".into(), "needs at least three nodes".into());
            }
            let mut ring: Option<(Vec3<f64>, f64, f64)> = None;
            for (k, id) in lp.iter().enumerate() {
                let field = format!("analysis.sagnac_loop[{k}]");
                match self.node(id) {
                    None => err(field, format!("unknown node {id:?}")),
                    Some(n) => match n.worldline {
                        Worldline::Circular {
                            center,
                            radius,
                            angular_rate,
                            ..
                        } => {
                            let g = (center, radius, angular_rate);
                            match ring {
                                None => ring = Some(g),
                                Some(r) if r != g => {
                                    err(field, format!("{id} is not on the same ring as the loop's first node"))
                                }
                                _ => {}
                            }
                        }
                        _ => err(field, format!("{id} is not on a circular worldline")),
                    },
                }
            }
            for (k, w) in lp.iter().zip(lp.iter().cycle().skip(1)).enumerate() {
                for (a, b) in [(w.0, w.1), (w.1, w.0)] {
                    let both_timing = self.channels.iter().any(|c| c.src == *a && c.dst == *b && c.timing);
                    if !both_timing {
                        err(
                            format!("analysis.sagnac_loop[{k}]"),
                            format!("needs a timing channel {a} -> {b}"),
                        );
                    }
                }
            }
        }
        if let Some(d) = self.analysis.lock_deadline {
            if !(d >= 0.0) {
                err("analysis.lock_deadline".into(), "must be non-negative".into());
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

fn validate_worldline(w: &Worldline, c_eff: f64, field: &str, err: &mut impl FnMut(String, String)) {
    let finite = |v: &Vec3<f64>| v.x.is_finite() && v.y.is_finite() && v.z.is_finite();
    match w {
        Worldline::Static { position } => {
            if !finite(position) {
                err(field.into(), "position must be finite".into());
            }
        }
        Worldline::UniformVelocity { origin, velocity } => {
            if !finite(origin) || !finite(velocity) {
                err(field.into(), "origin and velocity must be finite".into());
            }
        }
        Worldline::Circular {
            center,
            radius,
            angular_rate,
            initial_angle,
        } => {
            if !finite(center) || !radius.is_finite() || !angular_rate.is_finite() || !initial_angle.is_finite() {
                err(field.into(), "ring parameters must be finite".into());
            }
            if !(*radius > 0.0) {
                err(format!("{field}.radius"), format!("must be positive, got {radius}"));
            }
        }
    }
    let speed = w.max_speed();
    if c_eff.is_finite() && !(speed < c_eff) {
        err(
            field.into(),
            format!("speed {speed} m/s is not below the signal speed {c_eff} m/s"),
        );
    }
}

fn is_decimal_numeral(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// SplitMix64 finalizer over the master seed mixed with an FNV-1a hash of
/// the node id.
pub fn derive_seed(master: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}

/// Ready-made scenarios used by the test suites and documentation.
pub mod presets {
    use super::*;

    pub fn static_node(id: &str, eta: f64, x: f64) -> NodeConfig {
        NodeConfig {
            id: id.into(),
            eta,
            rate: None,
            initial_reading: 0.0,
            correction_bound: DEFAULT_CORRECTION_BOUND,
            worldline: Worldline::fixed(x, 0.0, 0.0),
            drift: DriftConfig::default(),
            controller: ControllerConfig::default(),
            transmit: TransmitSchedule::default(),
        }
    }

    /// Two static nodes on the x axis, `delay_cycles` apart at unit rate and
    /// c = 1, with plain channels both ways.
    pub fn static_pair(eta: f64, delay_cycles: f64, horizon: f64) -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            horizon,
            nominal_rate: 1.0,
            propagation: PropagationConfig {
                c: 1.0,
                ..PropagationConfig::default()
            },
            engine: EngineConfig::default(),
            analysis: AnalysisConfig::default(),
            nodes: vec![static_node("A", eta, 0.0), static_node("B", eta, delay_cycles)],
            channels: vec![ChannelConfig::new("A", "B"), ChannelConfig::new("B", "A")],
            oracles: Vec::new(),
        }
    }

    /// `n` ideal clocks equally spaced on a ring of radius `radius` turning
    /// at `angular_rate`, exchanging timing numerals with both neighbours.
    ///
    /// The nominal rate is chosen so the one-way chord delay is one cycle,
    /// which puts receptions at phase ~0.
    pub fn rotating_ring(n: usize, radius: f64, angular_rate: f64, c: f64, horizon: f64) -> Scenario {
        let chord = 2.0 * radius * (std::f64::consts::PI / n as f64).sin();
        let nominal_rate = c / chord;
        let nodes: Vec<NodeConfig> = (0..n)
            .map(|k| NodeConfig {
                id: format!("R{k:02}"),
                eta: 0.5,
                rate: None,
                initial_reading: 0.0,
                correction_bound: DEFAULT_CORRECTION_BOUND,
                worldline: Worldline::Circular {
                    center: Vec3::zero(),
                    radius,
                    angular_rate,
                    initial_angle: 2.0 * std::f64::consts::PI * k as f64 / n as f64,
                },
                drift: DriftConfig::default(),
                controller: ControllerConfig::default(),
                transmit: TransmitSchedule::default(),
            })
            .collect();
        let mut channels = Vec::new();
        for k in 0..n {
            let a = &nodes[k].id;
            let b = &nodes[(k + 1) % n].id;
            for (s, d) in [(a, b), (b, a)] {
                let mut ch = ChannelConfig::new(s, d);
                ch.timing = true;
                ch.aim = Some(AimKind::Phase { phi0: 0.0 });
                ch.weight = 0.0;
                channels.push(ch);
            }
        }
        Scenario {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            horizon,
            nominal_rate,
            propagation: PropagationConfig {
                c,
                ..PropagationConfig::default()
            },
            engine: EngineConfig::default(),
            analysis: AnalysisConfig {
                sagnac_loop: Some(nodes.iter().map(|n| n.id.clone()).collect()),
                lock_deadline: None,
            },
            nodes,
            channels,
            oracles: Vec::new(),
        }
    }
}
