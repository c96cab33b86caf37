//! Message links: an in-process loopback pipe for deterministic sessions
//! and stream sockets for multi-process deployments.

use std::collections::VecDeque;
use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::protocol::{encode_message, Decoder, TimestampGuard, WireMessage};
use crate::TeleopError;

/// A bidirectional, framed message link.
pub trait Link: Send {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TeleopError>;
    /// Next received message, without blocking.
    fn try_recv(&mut self) -> Result<Option<WireMessage>, TeleopError>;
}

type Pipe = Arc<Mutex<VecDeque<u8>>>;

/// One end of an in-memory byte pipe. Messages are encoded to bytes on send
/// and decoded (with timestamp checking) on receive, exactly as on a socket.
#[derive(Debug)]
pub struct LoopbackLink {
    tx: Pipe,
    rx: Pipe,
    decoder: Decoder,
    guard: TimestampGuard,
}

/// Two connected loopback ends.
pub fn loopback_pair() -> (LoopbackLink, LoopbackLink) {
    let a: Pipe = Arc::default();
    let b: Pipe = Arc::default();
    let end = |tx: &Pipe, rx: &Pipe| LoopbackLink {
        tx: tx.clone(),
        rx: rx.clone(),
        decoder: Decoder::new(),
        guard: TimestampGuard::new(),
    };
    (end(&a, &b), end(&b, &a))
}

impl Link for LoopbackLink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TeleopError> {
        let bytes = encode_message(msg)?;
        self.tx.lock().expect("loopback pipe poisoned").extend(bytes);
        Ok(())
    }

    fn try_recv(&mut self) -> Result<Option<WireMessage>, TeleopError> {
        {
            let mut rx = self.rx.lock().expect("loopback pipe poisoned");
            let (a, b) = rx.as_slices();
            self.decoder.push(a);
            self.decoder.push(b);
            rx.clear();
        }
        match self.decoder.next_message()? {
            Some(msg) => {
                self.guard.check(&msg)?;
                Ok(Some(msg))
            }
            None => Ok(None),
        }
    }
}

/// Non-blocking framed link over a TCP stream.
#[derive(Debug)]
pub struct TcpLink {
    stream: TcpStream,
    decoder: Decoder,
    guard: TimestampGuard,
    closed: bool,
}

/// Time allowed for a single connection attempt.
pub const CONNECT_TIMEOUT: Duration = Duration::from_millis(200);

pub fn resolve(endpoint: &str) -> Result<SocketAddr, TeleopError> {
    endpoint
        .to_socket_addrs()
        .map_err(|e| TeleopError::Endpoint(format!("{endpoint}: {e}")))?
        .next()
        .ok_or_else(|| TeleopError::Endpoint(format!("{endpoint}: no address")))
}

impl TcpLink {
    pub fn connect(addr: &SocketAddr) -> Result<Self, TeleopError> {
        let stream = TcpStream::connect_timeout(addr, CONNECT_TIMEOUT)?;
        Self::from_stream(stream)
    }

    pub fn from_stream(stream: TcpStream) -> Result<Self, TeleopError> {
        stream.set_nodelay(true)?;
        stream.set_nonblocking(true)?;
        Ok(Self {
            stream,
            decoder: Decoder::new(),
            guard: TimestampGuard::new(),
            closed: false,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn try_clone_stream(&self) -> Result<TcpStream, TeleopError> {
        Ok(self.stream.try_clone()?)
    }
}

/// Writes all of `bytes` to a non-blocking socket, waiting briefly when its
/// buffer is full. Gives up after `budget`.
pub(crate) fn write_all_nonblocking(stream: &mut TcpStream, mut bytes: &[u8], budget: Duration) -> std::io::Result<()> {
    let deadline = Instant::now() + budget;
    while !bytes.is_empty() {
        match stream.write(bytes) {
            Ok(0) => return Err(ErrorKind::WriteZero.into()),
            Ok(n) => bytes = &bytes[n..],
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if Instant::now() > deadline {
                    return Err(ErrorKind::TimedOut.into());
                }
                std::thread::sleep(Duration::from_micros(100));
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

impl Link for TcpLink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TeleopError> {
        let bytes = encode_message(msg)?;
        write_all_nonblocking(&mut self.stream, &bytes, Duration::from_millis(50)).map_err(|e| {
            self.closed = true;
            TeleopError::Io(e)
        })
    }

    fn try_recv(&mut self) -> Result<Option<WireMessage>, TeleopError> {
        let mut buf = [0u8; 4096];
        loop {
            if let Some(msg) = self.decoder.next_message()? {
                self.guard.check(&msg)?;
                return Ok(Some(msg));
            }
            if self.closed {
                return Ok(None);
            }
            match self.stream.read(&mut buf) {
                Ok(0) => {
                    self.closed = true;
                    return Ok(None);
                }
                Ok(n) => self.decoder.push(&buf[..n]),
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(None),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => {
                    self.closed = true;
                    return Err(TeleopError::Io(e));
                }
            }
        }
    }
}

/// Reconnect delays: doubling from 0.1 s, capped at 2 s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    current: Duration,
}

pub const BACKOFF_MIN: Duration = Duration::from_millis(100);
pub const BACKOFF_MAX: Duration = Duration::from_secs(2);

impl Default for Backoff {
    fn default() -> Self {
        Self { current: BACKOFF_MIN }
    }
}

impl Backoff {
    /// Delay before the next attempt; advances the schedule.
    pub fn next_delay(&mut self) -> Duration {
        let d = self.current;
        self.current = (self.current * 2).min(BACKOFF_MAX);
        d
    }

    pub fn reset(&mut self) {
        self.current = BACKOFF_MIN;
    }
}
