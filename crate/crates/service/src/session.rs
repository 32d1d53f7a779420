//! Session state machine: one dial layout, one detector, and the
//! symbol-entry task driven by detections.

use pursuit_core::trajectory::DEFAULT_SCREEN_PX;
use pursuit_core::{Detector, DetectorConfig, Label, Layout, Method, TargetId};

use crate::protocol::{ClientMessage, FrameTarget, LayoutEntry, ServerMessage};

pub const TASK_TIMEOUT_MS: f64 = 90_000.0;
pub const TASK_LENGTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
struct Task {
    symbols: Vec<Label>,
    started_ms: f64,
    errors: usize,
}

struct Active {
    layout: Layout,
    detector: Detector,
    method: Method,
    epoch: u64,
    buffer: Vec<Label>,
    task: Option<Task>,
}

pub struct Session {
    id: u64,
    active: Option<Active>,
}

impl Session {
    pub fn new(id: u64) -> Self {
        Self { id, active: None }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn is_started(&self) -> bool {
        self.active.is_some()
    }

    /// Accepted symbols, oldest first.
    pub fn buffer(&self) -> &[Label] {
        self.active.as_ref().map_or(&[], |a| &a.buffer)
    }

    pub fn buffer_string(&self) -> String {
        self.buffer().iter().map(Label::to_string).collect()
    }

    pub fn has_task(&self) -> bool {
        self.active.as_ref().is_some_and(|a| a.task.is_some())
    }

    /// Cancel selections made during the current task.
    pub fn task_errors(&self) -> Option<usize> {
        self.active.as_ref()?.task.as_ref().map(|t| t.errors)
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.active.as_ref().map(|a| &a.layout)
    }

    pub fn epoch(&self) -> Option<u64> {
        self.active.as_ref().map(|a| a.epoch)
    }

    /// Parses and handles one protocol line. Malformed input yields an
    /// error message and leaves the session untouched.
    pub fn handle_line(&mut self, line: &str, wall_clock_ms: u64) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(line) {
            Ok(message) => self.handle_message(message, wall_clock_ms),
            Err(e) => vec![ServerMessage::error(format!("protocol violation: {e}"))],
        }
    }

    /// `wall_clock_ms` becomes the epoch when the message is a start.
    pub fn handle_message(
        &mut self,
        message: ClientMessage,
        wall_clock_ms: u64,
    ) -> Vec<ServerMessage> {
        match message {
            ClientMessage::Start {
                targets,
                method,
                task,
            } => self.start(targets, method, task.as_deref(), wall_clock_ms),
            ClientMessage::Gaze { t, x, y } => match self.active.as_mut() {
                Some(active) => active.gaze(t, x, y),
                None => vec![ServerMessage::error("no active session: send start first")],
            },
            ClientMessage::Stop => {
                if self.active.take().is_none() {
                    vec![ServerMessage::error("no active session to stop")]
                } else {
                    Vec::new()
                }
            }
        }
    }

    fn start(
        &mut self,
        targets: usize,
        method: Method,
        task: Option<&str>,
        wall_clock_ms: u64,
    ) -> Vec<ServerMessage> {
        let layout = match Layout::dialplate(targets, DEFAULT_SCREEN_PX) {
            Ok(layout) => layout,
            Err(e) => return vec![ServerMessage::error(e.to_string())],
        };
        let task = match task.map(|text| parse_task(text, &layout)).transpose() {
            Ok(task) => task,
            Err(message) => return vec![ServerMessage::error(message)],
        };
        let detector = match Detector::new(DetectorConfig::defaults_for(method), layout.ids()) {
            Ok(d) => d,
            Err(e) => return vec![ServerMessage::error(e.to_string())],
        };
        let entries = layout_entries(&layout);
        self.active = Some(Active {
            layout,
            detector,
            method,
            epoch: wall_clock_ms,
            buffer: Vec::new(),
            task: task.map(|symbols| Task {
                symbols,
                started_ms: 0.0,
                errors: 0,
            }),
        });
        vec![ServerMessage::Started {
            epoch: wall_clock_ms,
            layout: entries,
        }]
    }

    /// Target positions at `now_ms` (since epoch) with current progress.
    pub fn tick(&self, now_ms: f64) -> Option<ServerMessage> {
        let active = self.active.as_ref()?;
        let progress = active.detector.progress();
        Some(active.frame(now_ms, |id| {
            progress
                .iter()
                .find(|(p, _)| *p == id)
                .map_or(0.0, |&(_, v)| v)
        }))
    }

    /// Fails the running task once `now_ms` (since epoch) passes its deadline.
    pub fn poll_deadline(&mut self, now_ms: f64) -> Option<ServerMessage> {
        self.active.as_mut()?.check_deadline(now_ms)
    }

    pub fn method(&self) -> Option<Method> {
        self.active.as_ref().map(|a| a.method)
    }
}

impl Active {
    fn gaze(&mut self, t: f64, x: f64, y: f64) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        if let Some(failed) = self.check_deadline(t) {
            out.push(failed);
        }
        let positions = self.layout.positions_at(t / 1000.0);
        let frame = match self
            .detector
            .ingest(pursuit_core::GazeSample::new(t, x, y), &positions)
        {
            Ok(frame) => frame,
            Err(e) => {
                out.push(ServerMessage::error(e.to_string()));
                return out;
            }
        };
        out.push(self.frame(t, |id| {
            frame
                .targets
                .iter()
                .find(|r| r.id == id)
                .map_or(0.0, |r| r.progress)
        }));
        for event in &frame.events {
            out.extend(self.select(event.target, t));
        }
        out
    }

    fn frame(&self, t: f64, progress: impl Fn(TargetId) -> f64) -> ServerMessage {
        ServerMessage::Frame {
            t,
            targets: self
                .layout
                .targets()
                .iter()
                .map(|spec| {
                    let p = spec.trajectory.position_at(t / 1000.0);
                    FrameTarget {
                        id: spec.id.0,
                        x: p.x,
                        y: p.y,
                        progress: progress(spec.id),
                    }
                })
                .collect(),
        }
    }

    fn select(&mut self, id: TargetId, t: f64) -> Vec<ServerMessage> {
        let Some(spec) = self.layout.get(id) else {
            return Vec::new();
        };
        let label = spec.label;
        let correct = self.task.as_ref().map(|task| match label {
            Label::Cancel => false,
            symbol => task.symbols.get(self.buffer.len()) == Some(&symbol),
        });
        match label {
            Label::Cancel => {
                self.buffer.pop();
                if let Some(task) = self.task.as_mut() {
                    task.errors += 1;
                }
            }
            symbol => self.buffer.push(symbol),
        }
        let mut out = vec![ServerMessage::Detected {
            id: id.0,
            label: label.to_string(),
            t,
            correct,
        }];
        if let Some(task) = &self.task {
            if self.buffer == task.symbols {
                out.push(ServerMessage::TaskDone {
                    t,
                    elapsed_ms: t - task.started_ms,
                    errors: task.errors,
                });
                self.task = None;
            }
        }
        out
    }

    fn check_deadline(&mut self, now_ms: f64) -> Option<ServerMessage> {
        let task = self.task.as_ref()?;
        if now_ms - task.started_ms >= TASK_TIMEOUT_MS {
            self.task = None;
            return Some(ServerMessage::TaskFailed {
                t: now_ms,
                reason: format!("timeout after {} s", TASK_TIMEOUT_MS / 1000.0),
            });
        }
        None
    }
}

fn parse_task(text: &str, layout: &Layout) -> Result<Vec<Label>, String> {
    let symbols: Vec<Label> = text
        .chars()
        .map(|c| Label::parse(&c.to_string()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if symbols.len() != TASK_LENGTH {
        return Err(format!(
            "task must have {TASK_LENGTH} symbols, got {:?}",
            text
        ));
    }
    if let Some(missing) = symbols.iter().find(|s| layout.find_label(**s).is_none()) {
        return Err(format!("task symbol {missing} is not on this layout"));
    }
    Ok(symbols)
}

fn layout_entries(layout: &Layout) -> Vec<LayoutEntry> {
    layout
        .targets()
        .iter()
        .map(|spec| {
            let traj = &spec.trajectory;
            LayoutEntry {
                id: spec.id.0,
                label: spec.label.to_string(),
                radius: traj.radius(),
                period: traj.period() * 1000.0,
                phase: traj.phase(),
                direction: traj.direction().as_str().to_owned(),
                center: [traj.center().x, traj.center().y],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn started(targets: usize, method: Method, task: Option<&str>) -> Session {
        let mut session = Session::new(1);
        let out = session.handle_message(
            ClientMessage::Start {
                targets,
                method,
                task: task.map(str::to_owned),
            },
            1_000,
        );
        assert!(matches!(
            out[0],
            ServerMessage::Started { epoch: 1_000, .. }
        ));
        session
    }

    #[test]
    fn start_reports_layout() {
        let mut session = Session::new(7);
        let out = session.handle_line(r#"{"type":"start","targets":6,"method":"slope"}"#, 5);
        let ServerMessage::Started { epoch, layout } = &out[0] else {
            panic!("{out:?}");
        };
        assert_eq!(*epoch, 5);
        assert_eq!(layout.len(), 7);
        assert_eq!(layout[6].label, "CANCEL");
        assert_eq!(layout[6].direction, "ccw");
        assert_eq!(layout[0].direction, "cw");
        assert!((layout[0].period - 2500.0).abs() < 1e-9);
        assert_eq!(layout[0].center, [960.0, 540.0]);
    }

    #[test]
    fn rejects_bad_start() {
        let mut session = Session::new(1);
        for line in [
            r#"{"type":"start","targets":7,"method":"slope"}"#,
            r#"{"type":"start","targets":6,"method":"slope","task":"47"}"#,
            r#"{"type":"start","targets":6,"method":"slope","task":"4789"}"#,
            r#"{"type":"start","targets":6,"method":"slope","task":"4?11"}"#,
            "not json",
        ] {
            let out = session.handle_line(line, 0);
            assert!(
                matches!(out[..], [ServerMessage::Error { .. }]),
                "{line}: {out:?}"
            );
            assert!(!session.is_started());
        }
    }

    #[test]
    fn gaze_before_start_rejected() {
        let mut session = Session::new(1);
        let out = session.handle_line(r#"{"type":"gaze","t":0,"x":1,"y":1}"#, 0);
        assert!(matches!(out[..], [ServerMessage::Error { .. }]));
        let out = session.handle_line(r#"{"type":"stop"}"#, 0);
        assert!(matches!(out[..], [ServerMessage::Error { .. }]));
    }

    #[test]
    fn protocol_violation_preserves_session() {
        let mut session = started(6, Method::Slope, None);
        session.handle_line(r#"{"type":"gaze","t":10,"x":1,"y":1}"#, 0);
        let out = session.handle_line(r#"{"type":"gaze","t":5,"x":1,"y":1}"#, 0);
        assert!(matches!(out.last(), Some(ServerMessage::Error { .. })));
        let out = session.handle_line(r#"{"type":"gaze","x":1}"#, 0);
        assert!(matches!(out[..], [ServerMessage::Error { .. }]));
        assert!(session.is_started());
        let out = session.handle_line(r#"{"type":"gaze","t":20,"x":1,"y":1}"#, 0);
        assert!(matches!(out[..], [ServerMessage::Frame { .. }]));
    }

    #[test]
    fn tick_positions_match_trajectories() {
        let session = started(8, Method::Correlation, None);
        let Some(ServerMessage::Frame { t, targets }) = session.tick(1234.0) else {
            panic!();
        };
        assert_eq!(t, 1234.0);
        let layout = session.layout().unwrap();
        for (target, spec) in targets.iter().zip(layout.targets()) {
            let p = spec.trajectory.position_at(1.234);
            assert!((target.x - p.x).abs() < 1e-6 && (target.y - p.y).abs() < 1e-6);
            assert_eq!(target.progress, 0.0);
        }
    }

    #[test]
    fn idle_task_times_out() {
        let mut session = started(6, Method::Slope, Some("0123"));
        assert_eq!(session.poll_deadline(89_999.0), None);
        assert!(matches!(
            session.poll_deadline(90_000.0),
            Some(ServerMessage::TaskFailed { .. })
        ));
        assert!(!session.has_task());
        assert_eq!(session.poll_deadline(200_000.0), None);
    }

    #[test]
    fn late_gaze_fails_task_first() {
        let mut session = started(6, Method::Slope, Some("0123"));
        let out = session.handle_line(r#"{"type":"gaze","t":95000,"x":1,"y":1}"#, 0);
        assert!(matches!(out[0], ServerMessage::TaskFailed { .. }));
        assert!(matches!(out[1], ServerMessage::Frame { .. }));
    }

    #[test]
    fn stop_ends_session() {
        let mut session = started(6, Method::Slope, None);
        assert!(session.handle_line(r#"{"type":"stop"}"#, 0).is_empty());
        assert!(!session.is_started());
    }
}
