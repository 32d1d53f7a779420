//! TOML scenario files.
//!
//! ```toml
//! duration_s = 5.0
//! sample_rate_hz = 60.0      # optional, default 60
//! seed = 7                   # optional, default 0
//!
//! [layout]
//! targets = 20               # dial layout with 20 selectable targets
//! screen = [1920.0, 1080.0]  # optional
//!
//! # Alternatively, list targets explicitly instead of `targets = N`:
//! # [[layout.target]]
//! # id = 0
//! # label = "0"              # 0-9, A-N or CANCEL
//! # center = [960.0, 540.0]
//! # radius = 130.0
//! # period_s = 2.5
//! # direction = "cw"         # or "ccw"
//! # phase = 0.0              # rad
//!
//! [gaze]                     # optional, defaults to ideal tracking
//! gain = 1.0
//! latency_ms = 0.0
//! noise_px = 0.0
//! scale = [1.0, 1.0]
//! offset = [0.0, 0.0]
//!
//! [[pursuit]]                # repeat as needed; omit `target` for fixation
//! target = 3
//! start_s = 0.0
//! end_s = 5.0
//! ```
//!
//! Every error carries the line number of the offending entry.

use serde::Deserialize;
use toml::Spanned;

use crate::error::ScenarioError;
use crate::simulator::{validate_interval, GazeModel, PursuitInterval, Scenario};
use crate::trajectory::{
    CircularTrajectory, Direction, Label, Layout, Point, TargetId, TargetSpec, DEFAULT_SCREEN_PX,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    duration_s: Spanned<f64>,
    #[serde(default = "default_rate")]
    sample_rate_hz: Spanned<f64>,
    #[serde(default)]
    seed: u64,
    layout: Spanned<LayoutSection>,
    #[serde(default)]
    gaze: Option<Spanned<GazeSection>>,
    #[serde(default)]
    pursuit: Vec<Spanned<PursuitEntry>>,
}

fn default_rate() -> Spanned<f64> {
    Spanned::new(0..0, 60.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutSection {
    targets: Option<usize>,
    screen: Option<[f64; 2]>,
    #[serde(default)]
    target: Vec<Spanned<TargetEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetEntry {
    id: u32,
    label: String,
    center: [f64; 2],
    radius: f64,
    period_s: f64,
    direction: String,
    #[serde(default)]
    phase: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GazeSection {
    #[serde(default = "one")]
    gain: f64,
    #[serde(default)]
    latency_ms: f64,
    #[serde(default)]
    noise_px: f64,
    #[serde(default = "unit_scale")]
    scale: [f64; 2],
    #[serde(default)]
    offset: [f64; 2],
}

fn one() -> f64 {
    1.0
}

fn unit_scale() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PursuitEntry {
    target: Option<u32>,
    start_s: f64,
    end_s: f64,
}

/// 1-based line of a byte offset.
fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn at<T>(source: &str, spanned: &Spanned<T>, message: impl ToString) -> ScenarioError {
    ScenarioError::Parse {
        line: line_of(source, spanned.span().start),
        message: message.to_string(),
    }
}

pub fn parse_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| ScenarioError::Parse {
        line: e.span().map_or(1, |s| line_of(source, s.start)),
        message: e.message().trim().to_owned(),
    })?;

    let layout = build_layout(source, &file.layout)?;
    let duration_s = *file.duration_s.get_ref();
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(at(source, &file.duration_s, "duration_s must be positive"));
    }
    let sample_rate_hz = *file.sample_rate_hz.get_ref();
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(at(
            source,
            &file.sample_rate_hz,
            "sample_rate_hz must be positive",
        ));
    }

    let gaze_model = match &file.gaze {
        None => GazeModel::ideal(),
        Some(section) => {
            let g = section.get_ref();
            GazeModel {
                pursuit_gain: g.gain,
                latency_ms: g.latency_ms,
                noise_sigma_px: g.noise_px,
                scale: (g.scale[0], g.scale[1]),
                offset: (g.offset[0], g.offset[1]),
            }
        }
    };

    let mut schedule = Vec::with_capacity(file.pursuit.len());
    for entry in &file.pursuit {
        let e = entry.get_ref();
        let interval = PursuitInterval {
            target: e.target.map(TargetId),
            start_s: e.start_s,
            end_s: e.end_s,
        };
        validate_interval(&interval, duration_s, &layout).map_err(|err| at(source, entry, err))?;
        if let Some(prior) = schedule.iter().position(|p: &PursuitInterval| {
            p.start_s < interval.end_s && interval.start_s < p.end_s
        }) {
            return Err(at(
                source,
                entry,
                format!(
                    "pursuit interval overlaps pursuit entry {} (line {})",
                    prior + 1,
                    line_of(source, file.pursuit[prior].span().start)
                ),
            ));
        }
        schedule.push(interval);
    }

    let scenario = Scenario {
        layout,
        schedule,
        duration_s,
        sample_rate_hz,
        gaze_model,
        seed: file.seed,
    };
    if let Err(err) = scenario.validate() {
        let span = file.gaze.as_ref().map_or(0..0, |g| g.span());
        return Err(ScenarioError::Parse {
            line: line_of(source, span.start),
            message: err.to_string(),
        });
    }
    Ok(scenario)
}

fn build_layout(source: &str, section: &Spanned<LayoutSection>) -> Result<Layout, ScenarioError> {
    let s = section.get_ref();
    let screen = s.screen.map_or(DEFAULT_SCREEN_PX, |[w, h]| (w, h));
    match (s.targets, s.target.is_empty()) {
        (Some(count), true) => Layout::dialplate(count, screen).map_err(|e| at(source, section, e)),
        (None, false) => {
            let mut targets = Vec::with_capacity(s.target.len());
            for entry in &s.target {
                let e = entry.get_ref();
                let direction = match e.direction.to_ascii_lowercase().as_str() {
                    "cw" | "clockwise" => Direction::Clockwise,
                    "ccw" | "counterclockwise" | "counter-clockwise" => Direction::CounterClockwise,
                    other => return Err(at(source, entry, format!("unknown direction {other:?}"))),
                };
                let trajectory = CircularTrajectory::with_period(
                    Point::new(e.center[0], e.center[1]),
                    e.radius,
                    e.period_s,
                    direction,
                    e.phase,
                )
                .map_err(|err| at(source, entry, err))?;
                let label = Label::parse(&e.label).map_err(|err| at(source, entry, err))?;
                targets.push(TargetSpec {
                    id: TargetId(e.id),
                    label,
                    trajectory,
                });
            }
            Layout::new(targets).map_err(|e| at(source, section, e))
        }
        _ => Err(at(
            source,
            section,
            "layout needs either `targets = N` or a list of [[layout.target]] entries",
        )),
    }
}
