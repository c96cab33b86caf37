//! Browser bridge of the controller node: static assets over HTTP and a
//! websocket at `/ws` carrying the same binary frames as the socket links
//! (one protocol frame per binary websocket message).

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::mpsc::{channel, TryRecvError};
use std::thread::JoinHandle;
use std::time::Duration;

use tungstenite::protocol::Role as WsRole;
use tungstenite::{Message, WebSocket};

use crate::node::{Hub, PeerKind};
use crate::protocol::{Decoder, TimestampGuard};
use crate::TeleopError;

/// Websocket path.
pub const WS_PATH: &str = "/ws";
/// Largest accepted HTTP request head.
const MAX_HEAD: usize = 16 * 1024;

/// Served at `/` when no asset directory is configured.
pub const PLACEHOLDER_PAGE: &str = r#"<!doctype html>
<html>
<head><meta charset="utf-8"><title>NuExo console</title></head>
<body>
<h1>NuExo controller</h1>
<p>No console assets are installed. The websocket bridge is live at <code>/ws</code>.</p>
<p id="status">connecting…</p>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`);
ws.binaryType = "arraybuffer";
let frames = 0;
ws.onopen = () => { document.getElementById("status").textContent = "connected"; };
ws.onclose = () => { document.getElementById("status").textContent = "disconnected"; };
ws.onmessage = () => { frames += 1; document.getElementById("status").textContent = `connected, ${frames} frames`; };
</script>
</body>
</html>
"#;

/// Binds `addr` and serves console clients until the hub stops. Returns the
/// acceptor thread and the bound address (port 0 picks a free port).
pub(crate) fn spawn(hub: Hub, addr: SocketAddr, assets: Option<PathBuf>) -> Result<(JoinHandle<()>, SocketAddr), TeleopError> {
    let listener = TcpListener::bind(addr)?;
    let bound = listener.local_addr()?;
    listener.set_nonblocking(true)?;
    let handle = std::thread::spawn(move || {
        let mut workers = Vec::new();
        while !hub.stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let _ = stream.set_nonblocking(false);
                    let (h, a) = (hub.clone(), assets.clone());
                    workers.push(std::thread::spawn(move || {
                        let _ = serve(h, stream, a.as_deref());
                    }));
                }
                Err(_) => std::thread::sleep(Duration::from_millis(5)),
            }
        }
        for w in workers {
            let _ = w.join();
        }
    });
    Ok((handle, bound))
}

#[derive(Debug, Default)]
struct RequestHead {
    method: String,
    path: String,
    upgrade: bool,
    key: Option<String>,
}

fn read_head(stream: &TcpStream) -> std::io::Result<RequestHead> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    // One byte at a time so nothing past the head is consumed.
    let mut reader = BufReader::with_capacity(1, stream);
    let mut head = RequestHead::default();
    let mut total = 0;
    let mut first = true;
    loop {
        let mut line = String::new();
        let n = reader.read_line(&mut line)?;
        total += n;
        if n == 0 || total > MAX_HEAD {
            return Err(ErrorKind::InvalidData.into());
        }
        let line = line.trim_end();
        if line.is_empty() {
            return Ok(head);
        }
        if first {
            let mut parts = line.split_whitespace();
            head.method = parts.next().unwrap_or_default().to_string();
            head.path = parts.next().unwrap_or_default().to_string();
            first = false;
        } else if let Some((name, value)) = line.split_once(':') {
            let (name, value) = (name.trim().to_ascii_lowercase(), value.trim());
            match name.as_str() {
                "upgrade" => head.upgrade = value.eq_ignore_ascii_case("websocket"),
                "sec-websocket-key" => head.key = Some(value.to_string()),
                _ => {}
            }
        }
    }
}

fn respond(mut stream: &TcpStream, status: &str, content_type: &str, body: &[u8]) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(body)?;
    stream.flush()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "wasm" => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Maps a request path onto a file under `root`, refusing anything that
/// would leave it.
fn asset_path(root: &Path, request: &str) -> Option<PathBuf> {
    let rel = request.split(['?', '#']).next().unwrap_or("/").trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

fn serve(hub: Hub, stream: TcpStream, assets: Option<&Path>) -> std::io::Result<()> {
    let head = read_head(&stream)?;
    let path = head.path.split('?').next().unwrap_or("").to_string();
    if path == WS_PATH && head.upgrade {
        let Some(key) = head.key else {
            return respond(&stream, "400 Bad Request", "text/plain", b"missing websocket key");
        };
        let accept = tungstenite::handshake::derive_accept_key(key.as_bytes());
        write!(
            &stream,
            "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: {accept}\r\n\r\n"
        )?;
        return bridge(hub, stream);
    }
    if head.method != "GET" {
        return respond(&stream, "405 Method Not Allowed", "text/plain", b"method not allowed");
    }
    match assets {
        None if path == "/" || path == "/index.html" => {
            respond(&stream, "200 OK", "text/html; charset=utf-8", PLACEHOLDER_PAGE.as_bytes())
        }
        None => respond(&stream, "404 Not Found", "text/plain", b"not found"),
        Some(root) => match asset_path(root, &path).and_then(|p| std::fs::read(&p).ok().map(|b| (p, b))) {
            Some((p, body)) => respond(&stream, "200 OK", content_type(&p), &body),
            None => respond(&stream, "404 Not Found", "text/plain", b"not found"),
        },
    }
}

/// Relays frames between one websocket client and the controller.
fn bridge(hub: Hub, stream: TcpStream) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_millis(2)))?;
    let mut ws = WebSocket::from_raw_socket(stream, WsRole::Server, None);
    let (tx, rx) = channel::<Vec<u8>>();
    let id = hub.register(PeerKind::Console, tx);
    let mut decoder = Decoder::new();
    let mut guard = TimestampGuard::new();
    'session: while !hub.stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Binary(bytes)) => {
                if !hub.ingest(id, &mut decoder, &mut guard, &bytes) {
                    break;
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
        loop {
            match rx.try_recv() {
                Ok(bytes) => {
                    if ws.send(Message::binary(bytes)).is_err() {
                        break 'session;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => break 'session,
            }
        }
    }
    hub.unregister(id);
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}
