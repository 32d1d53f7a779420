//! Sliding-window bivariate statistics over (gaze, target) coordinate pairs.
//!
//! All quantities come from five running sums, so adding a sample and
//! evicting the oldest one costs the same no matter how large the window is.
//! `x` is always the gaze coordinate and `y` the matching target coordinate.

use std::collections::VecDeque;

use crate::error::InvalidSample;

/// Denominators below this magnitude (px²) leave a quantity undefined.
pub const DENOMINATOR_EPSILON: f64 = 1e-9;

/// Pushes between full recomputations of the running sums from the buffer.
pub const REFRESH_INTERVAL: u64 = 10_000;

/// Running sums over the buffered pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sums {
    pub x: f64,
    pub y: f64,
    pub xy: f64,
    pub xx: f64,
    pub yy: f64,
}

impl Sums {
    fn add(&mut self, x: f64, y: f64) {
        self.x += x;
        self.y += y;
        self.xy += x * y;
        self.xx += x * x;
        self.yy += y * y;
    }

    fn sub(&mut self, x: f64, y: f64) {
        self.x -= x;
        self.y -= y;
        self.xy -= x * y;
        self.xx -= x * x;
        self.yy -= y * y;
    }
}

/// Regression of target on gaze plus Pearson correlation for one window.
///
/// `None` marks an undefined quantity: the window is not yet full or the
/// relevant variance term vanished.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegressionResult {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub correlation: Option<f64>,
}

/// Fixed-capacity FIFO of (gaze, target) pairs with constant-time updates.
#[derive(Debug, Clone)]
pub struct AxisWindowStats {
    capacity: usize,
    buffer: VecDeque<(f64, f64)>,
    sums: Sums,
    pushes_since_refresh: u64,
}

impl AxisWindowStats {
    /// Creates an empty window holding at most `capacity` pairs.
    ///
    /// # Panics
    ///
    /// Panics if `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            buffer: VecDeque::with_capacity(capacity),
            sums: Sums::default(),
            pushes_since_refresh: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn sums(&self) -> Sums {
        self.sums
    }

    /// Buffered pairs, oldest first.
    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.buffer.iter().copied()
    }

    /// Appends a pair, evicting the oldest one when the window is full.
    ///
    /// Non-finite coordinates are rejected and leave the window untouched.
    pub fn push(&mut self, gaze: f64, target: f64) -> Result<(), InvalidSample> {
        if !gaze.is_finite() || !target.is_finite() {
            return Err(InvalidSample { gaze, target });
        }
        if self.buffer.len() == self.capacity {
            if let Some((old_x, old_y)) = self.buffer.pop_front() {
                self.sums.sub(old_x, old_y);
            }
        }
        self.buffer.push_back((gaze, target));
        self.sums.add(gaze, target);

        self.pushes_since_refresh += 1;
        if self.pushes_since_refresh >= REFRESH_INTERVAL {
            self.refresh();
        }
        Ok(())
    }

    /// Rebuilds the running sums from the buffer contents.
    fn refresh(&mut self) {
        let mut sums = Sums::default();
        for &(x, y) in &self.buffer {
            sums.add(x, y);
        }
        self.sums = sums;
        self.pushes_since_refresh = 0;
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.sums = Sums::default();
        self.pushes_since_refresh = 0;
    }

    /// Slope, intercept and correlation of the current window.
    pub fn evaluate(&self) -> RegressionResult {
        if !self.is_full() {
            return RegressionResult::default();
        }
        evaluate_sums(self.buffer.len(), &self.sums)
    }
}

/// Closed-form slope, intercept and correlation from raw sums over `n` pairs.
pub fn evaluate_sums(n: usize, sums: &Sums) -> RegressionResult {
    let n = n as f64;
    let numerator = n * sums.xy - sums.x * sums.y;
    let gaze_spread = n * sums.xx - sums.x * sums.x;
    let target_spread = n * sums.yy - sums.y * sums.y;

    let mut result = RegressionResult::default();
    if gaze_spread.abs() >= DENOMINATOR_EPSILON {
        let slope = numerator / gaze_spread;
        result.slope = Some(slope);
        result.intercept = Some((sums.y - slope * sums.x) / n);
        // A negative spread is rounding noise around zero variance.
        if gaze_spread > 0.0 && target_spread >= DENOMINATOR_EPSILON {
            let r = numerator / (gaze_spread.sqrt() * target_spread.sqrt());
            result.correlation = Some(r);
        }
    }
    result
}
