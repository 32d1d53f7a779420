//! Wire messages. One JSON object per line, UTF-8, tagged by `type`.
//! Times are milliseconds, lengths are pixels, angles are radians.

use serde::{Deserialize, Serialize};

use pursuit_core::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Start {
        targets: usize,
        method: Method,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<String>,
    },
    /// `t` is milliseconds since the session epoch.
    Gaze {
        t: f64,
        x: f64,
        y: f64,
    },
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub id: u32,
    pub label: String,
    pub radius: f64,
    /// Milliseconds per revolution.
    pub period: f64,
    pub phase: f64,
    /// `"cw"` or `"ccw"`.
    pub direction: String,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTarget {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Started {
        /// Wall-clock Unix time of the session epoch, ms.
        epoch: u64,
        layout: Vec<LayoutEntry>,
    },
    Frame {
        t: f64,
        targets: Vec<FrameTarget>,
    },
    Detected {
        id: u32,
        label: String,
        t: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correct: Option<bool>,
    },
    TaskDone {
        t: f64,
        elapsed_ms: f64,
        errors: usize,
    },
    TaskFailed {
        t: f64,
        reason: String,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error {
            message: message.into(),
        }
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("server messages always serialize");
        line.push('\n');
        line
    }
}
