//! Interactive session service over newline-delimited JSON.
//!
//! A client starts a session with a dial layout and detection method,
//! streams gaze samples, and receives animation frames, selections and
//! task outcomes. See [`protocol`] for the message schema.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, FrameTarget, LayoutEntry, ServerMessage};
pub use server::Server;
pub use session::{Session, TASK_LENGTH, TASK_TIMEOUT_MS};
