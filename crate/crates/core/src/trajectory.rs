//! Circular target motion and the dial layout used for symbol entry.
//!
//! Screen coordinates: x grows to the right, y grows downward. A positive
//! angular velocity therefore moves a target clockwise on screen.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;

pub const SELECTABLE_RADIUS_PX: f64 = 130.0;
pub const CANCEL_RADIUS_PX: f64 = 80.0;
pub const ROTATION_PERIOD_S: f64 = 2.5;
pub const TARGET_DISPLAY_RADIUS_PX: f64 = 20.0;
pub const PX_PER_DEGREE: f64 = 50.0;
/// Target speeds (deg/s) that reliably elicit smooth pursuit.
pub const PURSUIT_SPEED_BAND_DEG_S: (f64, f64) = (5.0, 20.0);
pub const DEFAULT_SCREEN_PX: (f64, f64) = (1920.0, 1080.0);

/// Supported numbers of selectable targets.
pub const SUPPORTED_COUNTS: [usize; 10] = [6, 8, 10, 12, 14, 16, 18, 20, 22, 24];

const SYMBOLS: &str = "0123456789ABCDEFGHIJKLMN";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Clockwise,
    CounterClockwise,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Clockwise => "cw",
            Direction::CounterClockwise => "ccw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularTrajectory {
    center: Point,
    radius: f64,
    angular_velocity: f64,
    phase: f64,
}

impl CircularTrajectory {
    /// `angular_velocity` is in rad/s, positive for clockwise motion. The
    /// phase is wrapped into `[0, 2π)`.
    pub fn new(
        center: Point,
        radius: f64,
        angular_velocity: f64,
        phase: f64,
    ) -> Result<Self, LayoutError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LayoutError::Trajectory(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !center.is_finite() || !angular_velocity.is_finite() || !phase.is_finite() {
            return Err(LayoutError::Trajectory("non-finite parameter".into()));
        }
        Ok(Self {
            center,
            radius,
            angular_velocity,
            phase: phase.rem_euclid(TAU),
        })
    }

    /// Builds a trajectory from its period and turning direction.
    pub fn with_period(
        center: Point,
        radius: f64,
        period_s: f64,
        direction: Direction,
        phase: f64,
    ) -> Result<Self, LayoutError> {
        if !(period_s.is_finite() && period_s > 0.0) {
            return Err(LayoutError::Trajectory(format!(
                "period must be positive, got {period_s}"
            )));
        }
        let speed = TAU / period_s;
        let omega = match direction {
            Direction::Clockwise => speed,
            Direction::CounterClockwise => -speed,
        };
        Self::new(center, radius, omega, phase)
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn angular_velocity(&self) -> f64 {
        self.angular_velocity
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Seconds per revolution; infinite for a stationary target.
    pub fn period(&self) -> f64 {
        TAU / self.angular_velocity.abs()
    }

    pub fn direction(&self) -> Direction {
        if self.angular_velocity < 0.0 {
            Direction::CounterClockwise
        } else {
            Direction::Clockwise
        }
    }

    pub fn position_at(&self, t_s: f64) -> Point {
        let angle = self.phase + self.angular_velocity * t_s;
        Point {
            x: self.center.x + self.radius * angle.cos(),
            y: self.center.y + self.radius * angle.sin(),
        }
    }

    /// Tangential speed in visual degrees per second.
    pub fn speed_deg_per_s(&self) -> f64 {
        self.radius * self.angular_velocity.abs() / PX_PER_DEGREE
    }

    pub fn in_pursuit_band(&self) -> bool {
        let speed = self.speed_deg_per_s();
        let (lo, hi) = PURSUIT_SPEED_BAND_DEG_S;
        (lo..=hi).contains(&speed)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TargetId(pub u32);

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// What selecting a target means to the entry task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Symbol(char),
    Cancel,
}

impl Label {
    /// The `index`-th entry symbol: digits first, then letters A to N.
    pub fn nth_symbol(index: usize) -> Option<Label> {
        SYMBOLS.chars().nth(index).map(Label::Symbol)
    }

    pub fn parse(text: &str) -> Result<Label, LayoutError> {
        if text.eq_ignore_ascii_case("cancel") {
            return Ok(Label::Cancel);
        }
        let mut chars = text.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if SYMBOLS.contains(c.to_ascii_uppercase()) => {
                Ok(Label::Symbol(c.to_ascii_uppercase()))
            }
            _ => Err(LayoutError::UnknownLabel(text.to_owned())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Symbol(c) => write!(f, "{c}"),
            Label::Cancel => f.write_str("CANCEL"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub id: TargetId,
    pub label: Label,
    pub trajectory: CircularTrajectory,
}

/// A validated set of targets with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    targets: Vec<TargetSpec>,
    display_radius: f64,
}

impl Layout {
    pub fn new(targets: Vec<TargetSpec>) -> Result<Self, LayoutError> {
        if targets.is_empty() {
            return Err(LayoutError::Empty);
        }
        let mut ids: Vec<TargetId> = targets.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if let Some(pair) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(LayoutError::DuplicateId(pair[0]));
        }
        for target in &targets {
            warn_if_outside_pursuit_band(target);
        }
        Ok(Self {
            targets,
            display_radius: TARGET_DISPLAY_RADIUS_PX,
        })
    }

    /// The symbol-entry dial: `num_selectable` clockwise targets evenly
    /// phased on the 130 px circle plus one counter-clockwise cancel target
    /// on the 80 px circle, all centred on the screen.
    ///
    /// The cancel target moves at about 4°/s, below the usual pursuit band;
    /// that is the intended apparatus geometry, so it is not warned about.
    pub fn dialplate(num_selectable: usize, screen: (f64, f64)) -> Result<Self, LayoutError> {
        if !SUPPORTED_COUNTS.contains(&num_selectable) {
            return Err(LayoutError::UnsupportedCount(num_selectable));
        }
        let center = Point::new(screen.0 / 2.0, screen.1 / 2.0);
        let spacing = TAU / num_selectable as f64;
        let mut targets = Vec::with_capacity(num_selectable + 1);
        for k in 0..num_selectable {
            let trajectory = CircularTrajectory::with_period(
                center,
                SELECTABLE_RADIUS_PX,
                ROTATION_PERIOD_S,
                Direction::Clockwise,
                k as f64 * spacing,
            )?;
            let target = TargetSpec {
                id: TargetId(k as u32),
                label: Label::nth_symbol(k).expect("at most 24 selectable targets"),
                trajectory,
            };
            warn_if_outside_pursuit_band(&target);
            targets.push(target);
        }
        targets.push(TargetSpec {
            id: TargetId(num_selectable as u32),
            label: Label::Cancel,
            trajectory: CircularTrajectory::with_period(
                center,
                CANCEL_RADIUS_PX,
                ROTATION_PERIOD_S,
                Direction::CounterClockwise,
                0.0,
            )?,
        });
        Ok(Self {
            targets,
            display_radius: TARGET_DISPLAY_RADIUS_PX,
        })
    }

    pub fn targets(&self) -> &[TargetSpec] {
        &self.targets
    }

    pub fn ids(&self) -> impl Iterator<Item = TargetId> + '_ {
        self.targets.iter().map(|t| t.id)
    }

    pub fn get(&self, id: TargetId) -> Option<&TargetSpec> {
        self.targets.iter().find(|t| t.id == id)
    }

    pub fn find_label(&self, label: Label) -> Option<&TargetSpec> {
        self.targets.iter().find(|t| t.label == label)
    }

    /// Rendered radius of each target disc, px.
    pub fn display_radius(&self) -> f64 {
        self.display_radius
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Positions of every target at `t_s`, in layout order.
    pub fn positions_at(&self, t_s: f64) -> Vec<(TargetId, Point)> {
        self.targets
            .iter()
            .map(|t| (t.id, t.trajectory.position_at(t_s)))
            .collect()
    }
}

fn warn_if_outside_pursuit_band(target: &TargetSpec) {
    if !target.trajectory.in_pursuit_band() {
        tracing::warn!(
            id = target.id.0,
            speed_deg_s = target.trajectory.speed_deg_per_s(),
            "target speed outside the smooth pursuit band"
        );
    }
}
