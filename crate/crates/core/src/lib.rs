//! Smooth pursuit detection by sliding-window regression slope and Pearson
//! correlation, with circular target trajectories, a deterministic gaze
//! simulator and scenario files.

pub mod config;
pub mod detector;
pub mod error;
pub mod scenario;
pub mod simulator;
pub mod stats;
pub mod trajectory;

pub use config::ConfigFile;
pub use detector::{
    DetectionEvent, Detector, DetectorConfig, FrameOutput, GazeSample, Method, TargetReadout,
    Threshold,
};
pub use error::{ConfigError, DetectorError, InvalidSample, LayoutError, ScenarioError};
pub use scenario::parse_scenario;
pub use simulator::{
    generate_gaze, replay, run_scenario, sweep, GazeModel, MethodRun, PursuitInterval, Replay,
    Scenario, ScenarioMetrics, SweepRow, TraceRow,
};
pub use stats::{AxisWindowStats, RegressionResult};
pub use trajectory::{CircularTrajectory, Direction, Label, Layout, Point, TargetId, TargetSpec};
