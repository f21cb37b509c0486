//! TCP listener running one [`handle_session`] per connection.

use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use super::session::{handle_session, Runtime, SessionConfig, SessionSummary};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
}

struct Live {
    stream: TcpStream,
    handle: JoinHandle<SessionSummary>,
}

pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
    sessions: Arc<Mutex<Vec<Live>>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn is_stopping(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    /// Stops accepting, closes the read side of every session so each one
    /// finishes its queued turns, and waits for them. Returns one summary
    /// per session served.
    pub fn shutdown(mut self) -> Vec<SessionSummary> {
        self.stop_accepting();
        let live = std::mem::take(&mut *self.sessions.lock().expect("session list poisoned"));
        for s in &live {
            let _ = s.stream.shutdown(Shutdown::Read);
        }
        let mut out: Vec<SessionSummary> = live
            .into_iter()
            .filter_map(|s| {
                let summary = s.handle.join().ok();
                let _ = s.stream.shutdown(Shutdown::Both);
                summary
            })
            .collect();
        out.sort_by_key(|s| session_number(&s.session_id));
        out
    }

    fn stop_accepting(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        let mut wake = self.local_addr;
        if wake.ip().is_unspecified() {
            wake.set_ip(if wake.is_ipv4() {
                [127, 0, 0, 1].into()
            } else {
                std::net::Ipv6Addr::LOCALHOST.into()
            });
        }
        let _ = TcpStream::connect(wake);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_accepting();
    }
}

fn session_number(id: &str) -> u64 {
    id.trim_start_matches('s').parse().unwrap_or(u64::MAX)
}

/// Binds `addr` and serves sessions on a background thread.
pub fn serve(addr: impl ToSocketAddrs + std::fmt::Debug, runtime: Runtime, cfg: SessionConfig) -> Result<ServerHandle, ServeError> {
    let shown = format!("{addr:?}").trim_matches('"').to_string();
    let listener = TcpListener::bind(&addr).map_err(|source| ServeError::Bind {
        addr: shown.clone(),
        source,
    })?;
    let local_addr = listener.local_addr().map_err(|source| ServeError::Bind { addr: shown, source })?;
    let stop = Arc::new(AtomicBool::new(false));
    let sessions: Arc<Mutex<Vec<Live>>> = Arc::default();
    let cfg = Arc::new(cfg);
    let accept = {
        let (stop, sessions) = (stop.clone(), sessions.clone());
        thread::spawn(move || {
            let counter = AtomicU64::new(0);
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let stream = match conn {
                    Ok(s) => s,
                    Err(e) => {
                        tracing::warn!(error = %e, "accept failed");
                        continue;
                    }
                };
                let _ = stream.set_nodelay(true);
                let (Ok(read_half), Ok(write_half), Ok(keep)) = (stream.try_clone(), stream.try_clone(), stream.try_clone()) else {
                    tracing::warn!("cannot clone connection handle");
                    continue;
                };
                let id = format!("s{}", counter.fetch_add(1, Ordering::Relaxed) + 1);
                tracing::info!(session = %id, peer = ?stream.peer_addr().ok(), "session opened");
                let (runtime, cfg) = (runtime.clone(), cfg.clone());
                let handle = thread::spawn(move || {
                    let summary = handle_session(read_half, write_half, &id, runtime, cfg);
                    let _ = stream.shutdown(Shutdown::Both);
                    tracing::info!(session = %id, turns = summary.turns, "session closed");
                    summary
                });
                sessions.lock().expect("session list poisoned").push(Live { stream: keep, handle });
            }
        })
    };
    Ok(ServerHandle {
        local_addr,
        stop,
        accept: Some(accept),
        sessions,
    })
}
