//! Per-sample pursuit detection for both the slope and the correlation method.
//!
//! Each target owns one window per axis pairing the (smoothed) gaze
//! coordinate with the target coordinate. A target's threshold condition
//! holds when both axes pass; it is selected once the condition has held
//! for `min_duration` consecutive samples. A selection clears every window
//! and drops the next `skip_samples` gaze samples.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DetectorError};
use crate::stats::{AxisWindowStats, RegressionResult};
use crate::trajectory::{Point, TargetId};

/// Timestamped gaze (or pointer-proxy) position in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
}

impl GazeSample {
    pub fn new(t_ms: f64, x: f64, y: f64) -> Self {
        Self { t_ms, x, y }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Timestamp in seconds, the unit trajectories are evaluated in.
    pub fn t_s(&self) -> f64 {
        self.t_ms / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Correlation,
    Slope,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Correlation => "correlation",
            Method::Slope => "slope",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "correlation" | "corr" => Ok(Method::Correlation),
            "slope" => Ok(Method::Slope),
            other => Err(format!(
                "unknown method {other:?} (expected slope or correlation)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Correlation must reach at least this value.
    AtLeast(f64),
    /// Slope must lie in `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

impl Threshold {
    pub fn accepts(&self, value: f64) -> bool {
        match *self {
            Threshold::AtLeast(min) => value >= min,
            Threshold::Interval { lo, hi } => (lo..=hi).contains(&value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub method: Method,
    /// Pairs per axis window.
    pub window_size: usize,
    /// Moving-average length in samples; 0 disables smoothing.
    pub smoothing: usize,
    /// Consecutive passing samples required for a selection.
    pub min_duration: usize,
    pub threshold: Threshold,
    /// Gaze samples dropped after a selection.
    pub skip_samples: usize,
    pub sample_rate_hz: f64,
}

impl DetectorConfig {
    pub fn correlation_defaults() -> Self {
        Self {
            method: Method::Correlation,
            window_size: 30,
            smoothing: 0,
            min_duration: 20,
            threshold: Threshold::AtLeast(0.8),
            skip_samples: 30,
            sample_rate_hz: 60.0,
        }
    }

    pub fn slope_defaults() -> Self {
        Self {
            method: Method::Slope,
            window_size: 30,
            smoothing: 20,
            min_duration: 15,
            threshold: Threshold::Interval { lo: 0.77, hi: 1.3 },
            skip_samples: 30,
            sample_rate_hz: 60.0,
        }
    }

    pub fn defaults_for(method: Method) -> Self {
        match method {
            Method::Correlation => Self::correlation_defaults(),
            Method::Slope => Self::slope_defaults(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_size < 2 {
            return Err(ConfigError::WindowTooSmall(self.window_size));
        }
        if self.min_duration == 0 {
            return Err(ConfigError::ZeroMinDuration);
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(ConfigError::SampleRate(self.sample_rate_hz));
        }
        match (self.method, self.threshold) {
            (Method::Correlation, Threshold::AtLeast(min)) => {
                if !(min > 0.0 && min <= 1.0) {
                    return Err(ConfigError::CorrelationThreshold(min));
                }
            }
            (Method::Slope, Threshold::Interval { lo, hi }) => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(ConfigError::SlopeInterval { lo, hi });
                }
            }
            (method, _) => return Err(ConfigError::ThresholdKind(method.as_str())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub target: TargetId,
    pub t_ms: f64,
    /// Index of the triggering sample among all samples ingested since the
    /// detector was created or last reset, skipped ones included.
    pub sample: u64,
    pub method: Method,
}

/// Per-axis values for one target on one sample. Index 0 is x, 1 is y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetReadout {
    pub id: TargetId,
    pub slope: [Option<f64>; 2],
    pub correlation: [Option<f64>; 2],
    pub condition: [bool; 2],
    pub consecutive: usize,
    pub progress: f64,
}

impl TargetReadout {
    fn idle(id: TargetId) -> Self {
        Self {
            id,
            ..Self::default()
        }
    }

    pub fn condition_both(&self) -> bool {
        self.condition[0] && self.condition[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub t_ms: f64,
    pub sample: u64,
    pub targets: Vec<TargetReadout>,
    pub events: Vec<DetectionEvent>,
    /// More than one target fired on this sample.
    pub ambiguous: bool,
    /// The sample fell into the post-selection skip and was discarded.
    pub skipping: bool,
}

/// Moving average over the last `len` points, updated in constant time.
#[derive(Debug, Clone)]
struct MovingAverage {
    len: usize,
    history: VecDeque<Point>,
    sum: Point,
    pushes: u64,
}

impl MovingAverage {
    fn new(len: usize) -> Self {
        Self {
            len,
            history: VecDeque::with_capacity(len),
            sum: Point::default(),
            pushes: 0,
        }
    }

    /// Adds a point and returns the mean of the retained history.
    fn push(&mut self, p: Point) -> Point {
        if self.len == 0 {
            return p;
        }
        if self.history.len() == self.len {
            if let Some(old) = self.history.pop_front() {
                self.sum.x -= old.x;
                self.sum.y -= old.y;
            }
        }
        self.history.push_back(p);
        self.sum.x += p.x;
        self.sum.y += p.y;
        self.pushes += 1;
        if self.pushes.is_multiple_of(crate::stats::REFRESH_INTERVAL) {
            self.sum = self.history.iter().fold(Point::default(), |acc, q| {
                Point::new(acc.x + q.x, acc.y + q.y)
            });
        }
        let n = self.history.len() as f64;
        Point::new(self.sum.x / n, self.sum.y / n)
    }

    fn clear(&mut self) {
        self.history.clear();
        self.sum = Point::default();
    }
}

#[derive(Debug, Clone)]
struct TargetChannel {
    id: TargetId,
    x: AxisWindowStats,
    y: AxisWindowStats,
    /// Same filter as the gaze path so both signals carry the same delay.
    smoother: MovingAverage,
    consecutive: usize,
}

impl TargetChannel {
    fn clear(&mut self) {
        self.x.reset();
        self.y.reset();
        self.smoother.clear();
        self.consecutive = 0;
    }
}

pub struct Detector {
    config: DetectorConfig,
    channels: Vec<TargetChannel>,
    index: HashMap<TargetId, usize>,
    gaze_smoother: MovingAverage,
    skip_remaining: usize,
    last_t_ms: Option<f64>,
    samples_seen: u64,
    // reused per ingest to keep the hot path allocation-free
    seen: Vec<bool>,
}

impl Detector {
    pub fn new(
        config: DetectorConfig,
        ids: impl IntoIterator<Item = TargetId>,
    ) -> Result<Self, DetectorError> {
        config.validate()?;
        let mut channels = Vec::new();
        let mut index = HashMap::new();
        for id in ids {
            if index.insert(id, channels.len()).is_some() {
                return Err(DetectorError::LayoutMismatch(format!("duplicate id {id}")));
            }
            channels.push(TargetChannel {
                id,
                x: AxisWindowStats::new(config.window_size),
                y: AxisWindowStats::new(config.window_size),
                smoother: MovingAverage::new(config.smoothing),
                consecutive: 0,
            });
        }
        let seen = vec![false; channels.len()];
        Ok(Self {
            config,
            channels,
            index,
            gaze_smoother: MovingAverage::new(config.smoothing),
            skip_remaining: 0,
            last_t_ms: None,
            samples_seen: 0,
            seen,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn target_ids(&self) -> impl Iterator<Item = TargetId> + '_ {
        self.channels.iter().map(|c| c.id)
    }

    pub fn is_skipping(&self) -> bool {
        self.skip_remaining > 0
    }

    /// Current fill progress per target, in `[0, 1]`.
    pub fn progress(&self) -> Vec<(TargetId, f64)> {
        self.channels
            .iter()
            .map(|c| (c.id, progress_of(&self.config, c.consecutive)))
            .collect()
    }

    /// Clears windows, smoothing history, counters, skip countdown and the
    /// timestamp ordering guard.
    pub fn reset(&mut self) {
        self.clear_buffers();
        self.skip_remaining = 0;
        self.last_t_ms = None;
        self.samples_seen = 0;
    }

    fn clear_buffers(&mut self) {
        self.gaze_smoother.clear();
        for channel in &mut self.channels {
            channel.clear();
        }
    }

    /// Feeds one gaze sample together with every target's position at the
    /// sample's timestamp.
    pub fn ingest(
        &mut self,
        gaze: GazeSample,
        targets: &[(TargetId, Point)],
    ) -> Result<FrameOutput, DetectorError> {
        self.check_input(&gaze, targets)?;
        self.last_t_ms = Some(gaze.t_ms);
        let sample = self.samples_seen;
        self.samples_seen += 1;

        if self.skip_remaining > 0 {
            self.skip_remaining -= 1;
            return Ok(FrameOutput {
                t_ms: gaze.t_ms,
                sample,
                targets: self
                    .channels
                    .iter()
                    .map(|c| TargetReadout::idle(c.id))
                    .collect(),
                events: Vec::new(),
                ambiguous: false,
                skipping: true,
            });
        }

        let config = self.config;
        let effective = self.gaze_smoother.push(gaze.point());
        let mut readouts = vec![TargetReadout::default(); self.channels.len()];
        let mut events = Vec::new();
        for &(id, position) in targets {
            let slot = self.index[&id];
            let channel = &mut self.channels[slot];
            let target = channel.smoother.push(position);
            channel.x.push(effective.x, target.x)?;
            channel.y.push(effective.y, target.y)?;

            let axes = [channel.x.evaluate(), channel.y.evaluate()];
            let condition = axes.map(|r| axis_condition(&config, &r));
            if condition[0] && condition[1] {
                channel.consecutive += 1;
            } else {
                channel.consecutive = 0;
            }
            if channel.consecutive == config.min_duration {
                events.push(DetectionEvent {
                    target: id,
                    t_ms: gaze.t_ms,
                    sample,
                    method: config.method,
                });
            }
            let consecutive = channel.consecutive;
            readouts[slot] = TargetReadout {
                id,
                slope: axes.map(|r| r.slope),
                correlation: axes.map(|r| r.correlation),
                condition,
                consecutive,
                progress: progress_of(&config, consecutive),
            };
        }

        if !events.is_empty() {
            self.clear_buffers();
            self.skip_remaining = self.config.skip_samples;
        }
        Ok(FrameOutput {
            t_ms: gaze.t_ms,
            sample,
            targets: readouts,
            ambiguous: events.len() > 1,
            events,
            skipping: false,
        })
    }

    fn check_input(
        &mut self,
        gaze: &GazeSample,
        targets: &[(TargetId, Point)],
    ) -> Result<(), DetectorError> {
        if !gaze.t_ms.is_finite() {
            return Err(DetectorError::InvalidSample);
        }
        if let Some(previous_ms) = self.last_t_ms {
            if gaze.t_ms <= previous_ms {
                return Err(DetectorError::Ordering {
                    t_ms: gaze.t_ms,
                    previous_ms,
                });
            }
        }
        if !gaze.point().is_finite() || targets.iter().any(|(_, p)| !p.is_finite()) {
            return Err(DetectorError::InvalidSample);
        }
        if targets.len() != self.channels.len() {
            return Err(DetectorError::LayoutMismatch(format!(
                "expected {} targets, got {}",
                self.channels.len(),
                targets.len()
            )));
        }
        self.seen.iter_mut().for_each(|s| *s = false);
        for (id, _) in targets {
            match self.index.get(id) {
                Some(&slot) if !self.seen[slot] => self.seen[slot] = true,
                Some(_) => return Err(DetectorError::LayoutMismatch(format!("duplicate id {id}"))),
                None => return Err(DetectorError::LayoutMismatch(format!("unknown id {id}"))),
            }
        }
        Ok(())
    }
}

fn axis_condition(config: &DetectorConfig, result: &RegressionResult) -> bool {
    let metric = match config.method {
        Method::Correlation => result.correlation,
        Method::Slope => result.slope,
    };
    metric.is_some_and(|m| config.threshold.accepts(m))
}

fn progress_of(config: &DetectorConfig, consecutive: usize) -> f64 {
    (consecutive as f64 / config.min_duration as f64).min(1.0)
}
