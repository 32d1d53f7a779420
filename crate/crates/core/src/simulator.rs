//! Deterministic synthetic gaze and scenario execution.
//!
//! A scenario pairs a layout with a pursuit schedule and a gaze model. The
//! generated stream is replayed through one fresh detector per config, and
//! the resulting events are scored against the schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detector::{DetectionEvent, Detector, DetectorConfig, GazeSample, Method};
use crate::error::{DetectorError, ScenarioError};
use crate::trajectory::{Layout, Point, TargetId, DEFAULT_SCREEN_PX, ROTATION_PERIOD_S};

/// How reported gaze relates to the pursued target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeModel {
    /// Fraction of the trajectory radius the eye covers; 1.0 tracks exactly.
    pub pursuit_gain: f64,
    pub latency_ms: f64,
    /// Standard deviation of isotropic white noise, px.
    pub noise_sigma_px: f64,
    /// Per-axis calibration scale about the layout centre.
    pub scale: (f64, f64),
    /// Per-axis calibration offset, px.
    pub offset: (f64, f64),
}

impl Default for GazeModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl GazeModel {
    pub fn ideal() -> Self {
        Self {
            pursuit_gain: 1.0,
            latency_ms: 0.0,
            noise_sigma_px: 0.0,
            scale: (1.0, 1.0),
            offset: (0.0, 0.0),
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            self.pursuit_gain,
            self.latency_ms,
            self.noise_sigma_px,
            self.scale.0,
            self.scale.1,
            self.offset.0,
            self.offset.1,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ScenarioError::Invalid(
                "gaze model values must be finite".into(),
            ));
        }
        if self.latency_ms < 0.0 {
            return Err(ScenarioError::Invalid(
                "latency must be non-negative".into(),
            ));
        }
        if self.noise_sigma_px < 0.0 {
            return Err(ScenarioError::Invalid(
                "noise sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One schedule entry; `target == None` means the user is not pursuing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitInterval {
    pub target: Option<TargetId>,
    pub start_s: f64,
    pub end_s: f64,
}

impl PursuitInterval {
    fn contains(&self, t_s: f64) -> bool {
        self.start_s <= t_s && t_s < self.end_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: Layout,
    pub schedule: Vec<PursuitInterval>,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub gaze_model: GazeModel,
    pub seed: u64,
}

impl Scenario {
    /// Noise-free pursuit of `target` for the whole duration.
    pub fn ideal_pursuit(layout: Layout, target: TargetId, duration_s: f64) -> Self {
        Self {
            layout,
            schedule: vec![PursuitInterval {
                target: Some(target),
                start_s: 0.0,
                end_s: duration_s,
            }],
            duration_s,
            sample_rate_hz: 60.0,
            gaze_model: GazeModel::ideal(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        self.gaze_model.validate()?;
        let mut sorted = self.schedule.clone();
        sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for interval in &sorted {
            validate_interval(interval, self.duration_s, &self.layout)?;
        }
        if let Some(pair) = sorted.windows(2).find(|w| w[1].start_s < w[0].end_s) {
            return Err(ScenarioError::Invalid(format!(
                "pursuit intervals [{}, {}) and [{}, {}) overlap",
                pair[0].start_s, pair[0].end_s, pair[1].start_s, pair[1].end_s
            )));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Timestamp of sample `i` in milliseconds.
    pub fn sample_time_ms(&self, i: usize) -> f64 {
        i as f64 * 1000.0 / self.sample_rate_hz
    }

    /// Target pursued at `t_s`, if any.
    pub fn pursued_at(&self, t_s: f64) -> Option<TargetId> {
        self.schedule
            .iter()
            .find(|iv| iv.contains(t_s))
            .and_then(|iv| iv.target)
    }

    /// Origin for gain and calibration scaling.
    fn scaling_origin(&self) -> Point {
        self.layout
            .targets()
            .first()
            .map(|t| t.trajectory.center())
            .unwrap_or(Point::new(
                DEFAULT_SCREEN_PX.0 / 2.0,
                DEFAULT_SCREEN_PX.1 / 2.0,
            ))
    }
}

pub(crate) fn validate_interval(
    interval: &PursuitInterval,
    duration_s: f64,
    layout: &Layout,
) -> Result<(), ScenarioError> {
    let PursuitInterval {
        target,
        start_s,
        end_s,
    } = *interval;
    if !(start_s.is_finite() && end_s.is_finite() && 0.0 <= start_s && start_s < end_s) {
        return Err(ScenarioError::Invalid(format!(
            "pursuit interval [{start_s}, {end_s}) is empty or negative"
        )));
    }
    if end_s > duration_s {
        return Err(ScenarioError::Invalid(format!(
            "pursuit interval ends at {end_s} s, after the scenario duration {duration_s} s"
        )));
    }
    if let Some(id) = target {
        if layout.get(id).is_none() {
            return Err(ScenarioError::Invalid(format!("unknown target id {id}")));
        }
    }
    Ok(())
}

/// Synthesizes the reported gaze stream for `scenario`.
///
/// The stream is a pure function of the scenario, seed included.
pub fn generate_gaze(scenario: &Scenario) -> Vec<GazeSample> {
    let model = &scenario.gaze_model;
    let origin = scenario.scaling_origin();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise = (model.noise_sigma_px > 0.0)
        .then(|| Normal::new(0.0, model.noise_sigma_px).expect("sigma is finite and positive"));

    let mut held = origin;
    (0..scenario.sample_count())
        .map(|i| {
            let t_ms = scenario.sample_time_ms(i);
            let t_s = t_ms / 1000.0;
            if let Some(target) = scenario
                .pursued_at(t_s)
                .and_then(|id| scenario.layout.get(id))
            {
                let traj = &target.trajectory;
                let center = traj.center();
                let p = traj.position_at(t_s - model.latency_ms / 1000.0);
                held = Point::new(
                    scale_about(center.x, p.x, model.pursuit_gain),
                    scale_about(center.y, p.y, model.pursuit_gain),
                );
            }
            let mut x = scale_about(origin.x, held.x, model.scale.0) + model.offset.0;
            let mut y = scale_about(origin.y, held.y, model.scale.1) + model.offset.1;
            if let Some(normal) = &noise {
                x += normal.sample(&mut rng);
                y += normal.sample(&mut rng);
            }
            GazeSample::new(t_ms, x, y)
        })
        .collect()
}

/// Exact for a unit factor, so an identity model reproduces positions bit
/// for bit.
fn scale_about(origin: f64, value: f64, factor: f64) -> f64 {
    if factor == 1.0 {
        value
    } else {
        origin + factor * (value - origin)
    }
}

/// One row per sample per target of the detector's internal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t_s: f64,
    pub target: TargetId,
    pub slope: [Option<f64>; 2],
    pub correlation: [Option<f64>; 2],
    pub condition: [bool; 2],
    pub consecutive: usize,
    pub event: bool,
}

impl TraceRow {
    pub fn condition_both(&self) -> bool {
        self.condition[0] && self.condition[1]
    }
}

/// Events and trace of one detector over one gaze stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub events: Vec<DetectionEvent>,
    pub trace: Vec<TraceRow>,
}

/// Feeds `samples` through a fresh detector, evaluating every target at
/// each sample's own timestamp. `with_trace = false` skips trace rows.
pub fn replay(
    layout: &Layout,
    samples: &[GazeSample],
    config: DetectorConfig,
    with_trace: bool,
) -> Result<Replay, DetectorError> {
    let mut detector = Detector::new(config, layout.ids())?;
    let mut events = Vec::new();
    let mut trace = Vec::new();
    for sample in samples {
        let frame = detector.ingest(*sample, &layout.positions_at(sample.t_s()))?;
        if with_trace {
            trace.extend(frame.targets.iter().map(|r| TraceRow {
                t_s: sample.t_s(),
                target: r.id,
                slope: r.slope,
                correlation: r.correlation,
                condition: r.condition,
                consecutive: r.consecutive,
                event: frame.events.iter().any(|e| e.target == r.id),
            }));
        }
        events.extend(frame.events);
    }
    Ok(Replay { events, trace })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetMetrics {
    pub id: TargetId,
    pub true_positives: usize,
    /// Samples from pursuit onset (or from the sample after the previous
    /// selection within the same interval) up to and including the event.
    pub tp_latencies: Vec<u64>,
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub config: DetectorConfig,
    pub events: Vec<DetectionEvent>,
    /// Parallel to `events`: the latency of true positives, `None` for
    /// false positives.
    pub event_latency: Vec<Option<u64>>,
    pub targets: Vec<TargetMetrics>,
    pub trace: Vec<TraceRow>,
}

impl MethodRun {
    pub fn method(&self) -> Method {
        self.config.method
    }

    pub fn false_positives(&self) -> usize {
        self.targets.iter().map(|t| t.false_positives).sum()
    }

    pub fn true_positives(&self) -> usize {
        self.targets.iter().map(|t| t.true_positives).sum()
    }

    pub fn target(&self, id: TargetId) -> Option<&TargetMetrics> {
        self.targets.iter().find(|t| t.id == id)
    }

    /// Latency of the first true positive, if any.
    pub fn first_latency(&self) -> Option<u64> {
        self.event_latency.iter().flatten().next().copied()
    }

    /// Events on targets that were not being pursued.
    pub fn false_positive_events(&self) -> impl Iterator<Item = &DetectionEvent> {
        self.events
            .iter()
            .zip(&self.event_latency)
            .filter(|(_, latency)| latency.is_none())
            .map(|(e, _)| e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetrics {
    pub runs: Vec<MethodRun>,
}

impl ScenarioMetrics {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method() == method)
    }
}

/// Replays the scenario's gaze stream through a fresh detector per config.
pub fn run_scenario(
    scenario: &Scenario,
    configs: &[DetectorConfig],
) -> Result<ScenarioMetrics, ScenarioError> {
    run_scenario_with(scenario, configs, true)
}

pub fn run_scenario_with(
    scenario: &Scenario,
    configs: &[DetectorConfig],
    with_trace: bool,
) -> Result<ScenarioMetrics, ScenarioError> {
    scenario.validate()?;
    let samples = generate_gaze(scenario);
    let runs = configs
        .iter()
        .map(|&config| {
            let Replay { events, trace } = replay(&scenario.layout, &samples, config, with_trace)?;
            let (targets, event_latency) = score(scenario, &samples, &events);
            Ok(MethodRun {
                config,
                events,
                event_latency,
                targets,
                trace,
            })
        })
        .collect::<Result<Vec<_>, DetectorError>>()?;
    Ok(ScenarioMetrics { runs })
}

fn score(
    scenario: &Scenario,
    samples: &[GazeSample],
    events: &[DetectionEvent],
) -> (Vec<TargetMetrics>, Vec<Option<u64>>) {
    let mut metrics: Vec<TargetMetrics> = scenario
        .layout
        .ids()
        .map(|id| TargetMetrics {
            id,
            ..Default::default()
        })
        .collect();
    // first sample index at or after each interval's start
    let onsets: Vec<u64> = scenario
        .schedule
        .iter()
        .map(|iv| {
            samples
                .iter()
                .position(|s| s.t_s() >= iv.start_s)
                .unwrap_or(samples.len()) as u64
        })
        .collect();
    let mut armed_from = onsets;
    let mut event_latency = Vec::with_capacity(events.len());

    for event in events {
        let t_s = event.t_ms / 1000.0;
        let interval = scenario.schedule.iter().position(|iv| iv.contains(t_s));
        let slot = metrics
            .iter()
            .position(|m| m.id == event.target)
            .expect("detector only reports layout targets");
        match interval {
            Some(k) if scenario.schedule[k].target == Some(event.target) => {
                let latency = event.sample + 1 - armed_from[k];
                metrics[slot].true_positives += 1;
                metrics[slot].tp_latencies.push(latency);
                armed_from[k] = event.sample + 1;
                event_latency.push(Some(latency));
            }
            _ => {
                metrics[slot].false_positives += 1;
                event_latency.push(None);
            }
        }
    }
    (metrics, event_latency)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub targets: usize,
    pub method: Method,
    pub scenarios: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    /// Scenarios in which the pursued target was never selected.
    pub missed: usize,
    /// Statistics of the first true-positive latency per scenario, samples.
    pub latency_mean: Option<f64>,
    pub latency_min: Option<u64>,
    pub latency_max: Option<u64>,
}

/// For each target count and repetition, pursues every selectable target of
/// the dial layout in turn for one rotation and aggregates per method.
pub fn sweep(
    target_counts: &[usize],
    configs: &[DetectorConfig],
    gaze_model: GazeModel,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, ScenarioError> {
    let mut rows = Vec::new();
    for &count in target_counts {
        let layout = Layout::dialplate(count, DEFAULT_SCREEN_PX)?;
        let mut cells: Vec<SweepRow> = configs
            .iter()
            .map(|c| SweepRow {
                targets: count,
                method: c.method,
                scenarios: 0,
                true_positives: 0,
                false_positives: 0,
                missed: 0,
                latency_mean: None,
                latency_min: None,
                latency_max: None,
            })
            .collect();
        let mut latencies: Vec<Vec<u64>> = vec![Vec::new(); configs.len()];

        for rep in 0..repetitions {
            for pursued in 0..count {
                let mut scenario = Scenario::ideal_pursuit(
                    layout.clone(),
                    TargetId(pursued as u32),
                    ROTATION_PERIOD_S,
                );
                scenario.gaze_model = gaze_model;
                scenario.seed = mix_seed(seed, count as u64, rep as u64, pursued as u64);
                let metrics = run_scenario_with(&scenario, configs, false)?;
                for (k, run) in metrics.runs.iter().enumerate() {
                    let cell = &mut cells[k];
                    cell.scenarios += 1;
                    cell.true_positives += run.true_positives();
                    cell.false_positives += run.false_positives();
                    let pursued_metrics = run.target(TargetId(pursued as u32));
                    match pursued_metrics.and_then(|m| m.tp_latencies.first()) {
                        Some(&latency) => latencies[k].push(latency),
                        None => cell.missed += 1,
                    }
                }
            }
        }
        for (cell, lat) in cells.iter_mut().zip(&latencies) {
            if !lat.is_empty() {
                cell.latency_mean = Some(lat.iter().sum::<u64>() as f64 / lat.len() as f64);
                cell.latency_min = lat.iter().min().copied();
                cell.latency_max = lat.iter().max().copied();
            }
        }
        rows.extend(cells);
    }
    Ok(rows)
}

/// SplitMix64 finalizer over the cell coordinates.
fn mix_seed(seed: u64, count: u64, rep: u64, pursued: u64) -> u64 {
    let mut z = seed
        ^ count.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ rep.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ pursued.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dial(n: usize) -> Layout {
        Layout::dialplate(n, DEFAULT_SCREEN_PX).unwrap()
    }

    #[test]
    fn identity_model_reproduces_trajectory() {
        let scenario = Scenario::ideal_pursuit(dial(8), TargetId(0), 2.5);
        let traj = scenario.layout.targets()[0].trajectory;
        let samples = generate_gaze(&scenario);
        assert_eq!(samples.len(), 150);
        for s in &samples {
            let p = traj.position_at(s.t_s());
            assert_eq!((s.x, s.y), (p.x, p.y));
        }
    }

    #[test]
    fn fixation_before_first_pursuit_holds_center() {
        let mut scenario = Scenario::ideal_pursuit(dial(6), TargetId(1), 2.0);
        scenario.schedule[0].start_s = 1.0;
        let samples = generate_gaze(&scenario);
        assert!(samples[..60].iter().all(|s| (s.x, s.y) == (960.0, 540.0)));
        assert!(samples[60..].iter().all(|s| (s.x, s.y) != (960.0, 540.0)));
    }

    #[test]
    fn none_interval_holds_last_position() {
        let mut scenario = Scenario::ideal_pursuit(dial(6), TargetId(1), 2.0);
        scenario.schedule = vec![
            PursuitInterval {
                target: Some(TargetId(1)),
                start_s: 0.0,
                end_s: 1.0,
            },
            PursuitInterval {
                target: None,
                start_s: 1.0,
                end_s: 2.0,
            },
        ];
        let samples = generate_gaze(&scenario);
        let last = samples[59];
        assert!(samples[60..].iter().all(|s| (s.x, s.y) == (last.x, last.y)));
    }

    #[test]
    fn noise_is_seeded() {
        let mut scenario = Scenario::ideal_pursuit(dial(6), TargetId(1), 1.0);
        scenario.gaze_model.noise_sigma_px = 3.0;
        scenario.seed = 11;
        let a = generate_gaze(&scenario);
        let b = generate_gaze(&scenario);
        assert_eq!(a, b);
        scenario.seed = 12;
        assert_ne!(a, generate_gaze(&scenario));
    }

    #[test]
    fn calibration_is_affine_about_center() {
        let mut scenario = Scenario::ideal_pursuit(dial(6), TargetId(0), 0.5);
        scenario.gaze_model.scale = (1.1, 0.9);
        scenario.gaze_model.offset = (50.0, -30.0);
        let traj = scenario.layout.targets()[0].trajectory;
        for s in generate_gaze(&scenario) {
            let p = traj.position_at(s.t_s());
            assert!((s.x - (960.0 + 1.1 * (p.x - 960.0) + 50.0)).abs() < 1e-9);
            assert!((s.y - (540.0 + 0.9 * (p.y - 540.0) - 30.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn latency_and_gain() {
        let mut scenario = Scenario::ideal_pursuit(dial(6), TargetId(0), 0.5);
        scenario.gaze_model.latency_ms = 100.0;
        scenario.gaze_model.pursuit_gain = 0.5;
        let traj = scenario.layout.targets()[0].trajectory;
        for s in generate_gaze(&scenario) {
            let p = traj.position_at(s.t_s() - 0.1);
            assert!((s.x - (960.0 + 0.5 * (p.x - 960.0))).abs() < 1e-9);
            assert!((s.y - (540.0 + 0.5 * (p.y - 540.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_catches_bad_schedules() {
        let base = Scenario::ideal_pursuit(dial(6), TargetId(0), 2.0);
        let mut s = base.clone();
        s.schedule.push(PursuitInterval {
            target: None,
            start_s: 1.5,
            end_s: 2.0,
        });
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.schedule[0].end_s = 3.0;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.schedule[0].target = Some(TargetId(42));
        assert!(s.validate().is_err());
        let mut s = base;
        s.gaze_model.noise_sigma_px = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn six_targets_both_methods_clean() {
        let configs = [
            DetectorConfig::correlation_defaults(),
            DetectorConfig::slope_defaults(),
        ];
        for pursued in 0..6 {
            let scenario = Scenario::ideal_pursuit(dial(6), TargetId(pursued), 2.5);
            let metrics = run_scenario(&scenario, &configs).unwrap();
            for run in &metrics.runs {
                assert_eq!(
                    run.false_positives(),
                    0,
                    "{} pursuing {pursued}",
                    run.method()
                );
                assert!(run.target(TargetId(pursued)).unwrap().true_positives >= 1);
            }
        }
    }

    #[test]
    fn offset_leaves_events_unchanged() {
        let configs = [
            DetectorConfig::correlation_defaults(),
            DetectorConfig::slope_defaults(),
        ];
        let mut scenario = Scenario::ideal_pursuit(dial(20), TargetId(3), 5.0);
        let reference = run_scenario(&scenario, &configs).unwrap();
        scenario.gaze_model.offset = (50.0, -30.0);
        let shifted = run_scenario(&scenario, &configs).unwrap();
        for (a, b) in reference.runs.iter().zip(&shifted.runs) {
            let key = |r: &MethodRun| {
                r.events
                    .iter()
                    .map(|e| (e.target, e.sample))
                    .collect::<Vec<_>>()
            };
            assert_eq!(key(a), key(b));
        }
    }

    #[test]
    fn scale_inside_band_still_fires() {
        let mut scenario = Scenario::ideal_pursuit(dial(20), TargetId(3), 2.5);
        scenario.gaze_model.scale = (1.1, 1.1);
        let metrics = run_scenario(&scenario, &[DetectorConfig::slope_defaults()]).unwrap();
        let run = &metrics.runs[0];
        assert_eq!(run.events.first().map(|e| e.target), Some(TargetId(3)));
        assert_eq!(run.false_positives(), 0);
        let full = run
            .trace
            .iter()
            .find(|r| r.target == TargetId(3) && r.slope[0].is_some())
            .unwrap();
        assert!((full.slope[0].unwrap() - 1.0 / 1.1).abs() < 1e-9);
    }

    #[test]
    fn sweep_is_deterministic() {
        let configs = [DetectorConfig::slope_defaults()];
        let mut model = GazeModel::ideal();
        model.noise_sigma_px = 2.0;
        let a = sweep(&[6, 8], &configs, model, 2, 5).unwrap();
        let b = sweep(&[6, 8], &configs, model, 2, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].scenarios, 12);
    }
}
