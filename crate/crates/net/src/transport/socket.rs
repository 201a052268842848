//! TCP backend for multi-process (or multi-thread) runs.
//!
//! Each node listens on its own address. Frames on the wire are
//! `length u32 LE | body`, where the body is `sender node id u32 LE | payload`.
//! Outbound connections are opened lazily with a bounded, fixed-backoff retry.

use std::collections::HashMap;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::Duration;

use super::channel::{open_in, Channel, ChannelId, Pattern};
use super::{Endpoint, TransportError};

/// Largest frame body accepted from a peer.
pub const MAX_FRAME: usize = 1 << 30;

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 50,
            backoff: Duration::from_millis(20),
        }
    }
}

pub fn write_frame(w: &mut impl Write, from: u32, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(4 + payload.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&from.to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Read one frame; `Ok(None)` on clean end of stream.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<(u32, Vec<u8>)>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_le_bytes(len) as usize;
    if !(4..=MAX_FRAME).contains(&len) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("bad frame length {len}"),
        ));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let from = u32::from_le_bytes(body[..4].try_into().unwrap());
    body.drain(..4);
    Ok(Some((from, body)))
}

type Directory = Arc<RwLock<HashMap<u32, (Endpoint, SocketAddr)>>>;

/// Shared registry of bound nodes and channels for one run.
#[derive(Clone, Default)]
pub struct SocketBackend {
    directory: Directory,
    channels: Arc<Mutex<Vec<Channel>>>,
    retry: RetryPolicy,
}

impl SocketBackend {
    pub fn new() -> Self {
        SocketBackend::default()
    }

    pub fn with_retry(retry: RetryPolicy) -> Self {
        SocketBackend {
            retry,
            ..SocketBackend::default()
        }
    }

    /// Bind a node at `addr` (`host:port`; port 0 picks a free port).
    pub fn bind(&self, endpoint: Endpoint, addr: &str) -> Result<SocketNode, TransportError> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| TransportError::Failure(format!("cannot resolve {addr}")))?;
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        {
            let mut dir = self.directory.write().unwrap();
            if dir.contains_key(&endpoint.node_id) {
                return Err(TransportError::DuplicateEndpoint(endpoint.node_id));
            }
            dir.insert(endpoint.node_id, (endpoint, local));
        }
        let (tx, rx) = mpsc::channel();
        let shutdown = Arc::new(AtomicBool::new(false));
        spawn_acceptor(listener, tx, shutdown.clone());
        Ok(SocketNode {
            endpoint,
            local_addr: local,
            directory: self.directory.clone(),
            inbox: rx,
            outbound: Mutex::new(HashMap::new()),
            shutdown,
            retry: self.retry,
        })
    }

    /// Register a node that lives in another process.
    pub fn add_remote(&self, endpoint: Endpoint, addr: &str) -> Result<(), TransportError> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| TransportError::Failure(format!("cannot resolve {addr}")))?;
        self.directory
            .write()
            .unwrap()
            .insert(endpoint.node_id, (endpoint, addr));
        Ok(())
    }

    fn known(&self, node: u32) -> Result<(), TransportError> {
        if self.directory.read().unwrap().contains_key(&node) {
            Ok(())
        } else {
            Err(TransportError::UnknownEndpoint(node))
        }
    }

    pub fn declare_channel(&self, pattern: Pattern, from: Endpoint) -> Result<ChannelId, TransportError> {
        self.known(from.node_id)?;
        Ok(open_in(&mut self.channels.lock().unwrap(), pattern, from.node_id))
    }

    pub fn open_channel(
        &self,
        pattern: Pattern,
        from: Endpoint,
        to: Endpoint,
    ) -> Result<ChannelId, TransportError> {
        self.known(to.node_id)?;
        let id = self.declare_channel(pattern, from)?;
        self.channels.lock().unwrap()[id].attach(to.node_id);
        Ok(id)
    }

    /// Send `payload` from `node` on channel `id`; returns the number of
    /// frames written.
    pub fn channel_send(&self, node: &SocketNode, id: ChannelId, payload: &[u8]) -> Result<usize, TransportError> {
        let targets = {
            let mut channels = self.channels.lock().unwrap();
            let ch = channels
                .get_mut(id)
                .ok_or(TransportError::UnknownChannel(id))?;
            if ch.source() != node.endpoint.node_id {
                return Err(TransportError::Failure(format!(
                    "node {} is not the source of channel {id}",
                    node.endpoint.node_id
                )));
            }
            ch.route()
        };
        for to in &targets {
            node.send(*to, payload)?;
        }
        Ok(targets.len())
    }
}

fn spawn_acceptor(listener: TcpListener, tx: Sender<(u32, Vec<u8>)>, shutdown: Arc<AtomicBool>) {
    thread::spawn(move || {
        for stream in listener.incoming() {
            if shutdown.load(Ordering::Acquire) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let tx = tx.clone();
            let _ = stream.set_nodelay(true);
            thread::spawn(move || {
                let mut reader = BufReader::with_capacity(1 << 16, stream);
                loop {
                    match read_frame(&mut reader) {
                        Ok(Some(frame)) => {
                            if tx.send(frame).is_err() {
                                break;
                            }
                        }
                        Ok(None) => break,
                        Err(e) => {
                            log::warn!("dropping connection: {e}");
                            break;
                        }
                    }
                }
            });
        }
    });
}

/// One bound node: an inbox fed by its listener plus lazily opened outbound
/// connections.
pub struct SocketNode {
    endpoint: Endpoint,
    local_addr: SocketAddr,
    directory: Directory,
    inbox: Receiver<(u32, Vec<u8>)>,
    outbound: Mutex<HashMap<u32, BufWriter<TcpStream>>>,
    shutdown: Arc<AtomicBool>,
    retry: RetryPolicy,
}

impl SocketNode {
    pub fn endpoint(&self) -> Endpoint {
        self.endpoint
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    fn connect(&self, to: u32) -> Result<BufWriter<TcpStream>, TransportError> {
        let addr = self
            .directory
            .read()
            .unwrap()
            .get(&to)
            .map(|(_, a)| *a)
            .ok_or(TransportError::UnknownEndpoint(to))?;
        let mut last = None;
        for _ in 0..self.retry.attempts.max(1) {
            match TcpStream::connect(addr) {
                Ok(s) => {
                    let _ = s.set_nodelay(true);
                    return Ok(BufWriter::with_capacity(1 << 16, s));
                }
                Err(e) => {
                    last = Some(e);
                    thread::sleep(self.retry.backoff);
                }
            }
        }
        Err(TransportError::Failure(format!(
            "connect to node {to} at {addr}: {}",
            last.map(|e| e.to_string()).unwrap_or_default()
        )))
    }

    /// Send one frame to `to`. Frames to one peer arrive in send order.
    pub fn send(&self, to: u32, payload: &[u8]) -> Result<(), TransportError> {
        let mut out = self.outbound.lock().unwrap();
        let stream = match out.entry(to) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(self.connect(to)?),
        };
        if let Err(e) = write_frame(stream, self.endpoint.node_id, payload) {
            out.remove(&to);
            return Err(TransportError::Failure(format!("send to node {to}: {e}")));
        }
        Ok(())
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Result<Option<(u32, Vec<u8>)>, TransportError> {
        match self.inbox.recv_timeout(timeout) {
            Ok(frame) => Ok(Some(frame)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(TransportError::Failure("listener stopped".into()))
            }
        }
    }

    pub fn try_recv(&self) -> Option<(u32, Vec<u8>)> {
        self.inbox.try_recv().ok()
    }
}

impl Drop for SocketNode {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Release);
        // wake the acceptor so it notices the flag
        let _ = TcpStream::connect_timeout(&self.local_addr, Duration::from_millis(100));
        self.directory.write().unwrap().remove(&self.endpoint.node_id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_layout() {
        let mut buf = Vec::new();
        write_frame(&mut buf, 7, b"abc").unwrap();
        assert_eq!(&buf[..4], &7u32.to_le_bytes());
        assert_eq!(&buf[4..8], &7u32.to_le_bytes());
        assert_eq!(&buf[8..], b"abc");
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap(), Some((7, b"abc".to_vec())));
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }

    #[test]
    fn rejects_short_length() {
        let buf = 2u32.to_le_bytes();
        assert!(read_frame(&mut &buf[..]).is_err());
    }

    #[test]
    fn point_to_point() {
        let backend = SocketBackend::new();
        let a = backend.bind(Endpoint::new(0, 0), "127.0.0.1:0").unwrap();
        let b = backend.bind(Endpoint::new(1, 0), "127.0.0.1:0").unwrap();
        for i in 0..10u8 {
            a.send(1, &[i]).unwrap();
        }
        for i in 0..10u8 {
            let (from, body) = b.recv_timeout(Duration::from_secs(5)).unwrap().unwrap();
            assert_eq!((from, body), (0, vec![i]));
        }
        assert!(matches!(a.send(9, b"x"), Err(TransportError::UnknownEndpoint(9))));
    }

    #[test]
    fn unreachable_peer_fails_after_retries() {
        let backend = SocketBackend::with_retry(RetryPolicy {
            attempts: 2,
            backoff: Duration::from_millis(1),
        });
        let a = backend.bind(Endpoint::new(0, 0), "127.0.0.1:0").unwrap();
        // grab a free port then close it
        let dead = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
        backend.add_remote(Endpoint::new(1, 1), &dead.to_string()).unwrap();
        assert!(matches!(a.send(1, b"x"), Err(TransportError::Failure(_))));
    }
}
