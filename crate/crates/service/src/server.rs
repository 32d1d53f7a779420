//! TCP transport: one thread and one session per connection.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crate::protocol::ServerMessage;
use crate::session::Session;

/// How often an idle connection checks its task deadline.
const DEADLINE_POLL: Duration = Duration::from_millis(250);

pub struct Server {
    listener: TcpListener,
    next_id: Arc<AtomicU64>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            next_id: Arc::new(AtomicU64::new(1)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    tracing::warn!(error = %e, "accept failed");
                    continue;
                }
            };
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                tracing::info!(session = id, ?peer, "session opened");
                if let Err(e) = serve_connection(stream, Session::new(id)) {
                    tracing::warn!(session = id, error = %e, "session ended with error");
                }
                tracing::info!(session = id, "session closed");
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> JoinHandle<io::Result<()>> {
        thread::spawn(move || self.run())
    }
}

fn wall_clock_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn send(stream: &mut TcpStream, messages: &[ServerMessage]) -> io::Result<()> {
    for message in messages {
        stream.write_all(message.to_line().as_bytes())?;
    }
    stream.flush()
}

fn serve_connection(stream: TcpStream, mut session: Session) -> io::Result<()> {
    stream.set_read_timeout(Some(DEADLINE_POLL))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    loop {
        match reader.read_line(&mut line) {
            Ok(0) => return Ok(()),
            Ok(_) => {
                let text = line.trim();
                if !text.is_empty() {
                    let replies = session.handle_line(text, wall_clock_ms());
                    send(&mut writer, &replies)?;
                }
                line.clear();
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                // partial lines stay buffered in `line` until the newline arrives
                if let Some(epoch) = session.epoch() {
                    let now = wall_clock_ms().saturating_sub(epoch) as f64;
                    if let Some(failed) = session.poll_deadline(now) {
                        send(&mut writer, &[failed])?;
                    }
                }
            }
            Err(e) if e.kind() == ErrorKind::InvalidData => {
                send(
                    &mut writer,
                    &[ServerMessage::error("input is not valid UTF-8")],
                )?;
                line.clear();
            }
            Err(e) => return Err(e),
        }
    }
}
