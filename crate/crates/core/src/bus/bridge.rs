//! Browser endpoint: websocket upgrade to a bus session, otherwise static
//! files from the HMI directory.

use std::fs;
use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::mpsc::TryRecvError;
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use super::server::{overflow_line, Hub, Msg};

const MAX_HEAD: usize = 16 * 1024;
const POLL: Duration = Duration::from_millis(5);

/// Bytes already read from the socket, replayed ahead of it.
struct Replay {
    head: io::Cursor<Vec<u8>>,
    inner: TcpStream,
}

impl Read for Replay {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.head.read(buf)?;
        if n > 0 {
            return Ok(n);
        }
        self.inner.read(buf)
    }
}

impl Write for Replay {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.inner.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

struct Request {
    method: String,
    path: String,
    upgrade: bool,
}

fn read_head(s: &mut TcpStream) -> io::Result<(Vec<u8>, usize)> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 2048];
    loop {
        if let Some(i) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            return Ok((buf, i + 4));
        }
        if buf.len() > MAX_HEAD {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "request head too large",
            ));
        }
        let n = s.read(&mut chunk)?;
        if n == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        buf.extend_from_slice(&chunk[..n]);
    }
}

fn parse_head(head: &[u8]) -> Option<Request> {
    let text = std::str::from_utf8(head).ok()?;
    let mut lines = text.split("\r\n");
    let mut first = lines.next()?.split(' ');
    let method = first.next()?.to_string();
    let path = first.next()?.to_string();
    let upgrade = lines.any(|l| {
        l.split_once(':').is_some_and(|(k, v)| {
            k.trim().eq_ignore_ascii_case("upgrade") && v.trim().eq_ignore_ascii_case("websocket")
        })
    });
    Some(Request {
        method,
        path,
        upgrade,
    })
}

pub(crate) fn serve(mut stream: TcpStream, hub: &Hub, hmi_dir: Option<&Path>) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(10)));
    let Ok((buf, _)) = read_head(&mut stream) else {
        return;
    };
    let Some(req) = parse_head(&buf) else {
        let _ = respond(
            &mut stream,
            "400 Bad Request",
            "text/plain",
            b"bad request\n",
            true,
        );
        return;
    };
    if req.upgrade {
        let replay = Replay {
            head: io::Cursor::new(buf),
            inner: stream,
        };
        match tungstenite::accept(replay) {
            Ok(ws) => websocket_session(ws, hub),
            Err(e) => log::warn!("websocket upgrade failed: {e}"),
        }
    } else {
        let _ = static_file(&mut stream, &req, hmi_dir);
    }
}

fn respond(
    s: &mut TcpStream,
    status: &str,
    ctype: &str,
    body: &[u8],
    with_body: bool,
) -> io::Result<()> {
    write!(
        s,
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    if with_body {
        s.write_all(body)?;
    }
    s.flush()
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "map" | "txt" => "text/plain; charset=utf-8",
        "wasm" => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Maps a request path onto `root`, refusing anything that leaves it.
pub(crate) fn resolve(root: &Path, url_path: &str) -> Option<PathBuf> {
    let path = url_path.split(['?', '#']).next().unwrap_or("");
    let mut out = root.to_path_buf();
    for c in Path::new(path.trim_start_matches('/')).components() {
        match c {
            Component::Normal(seg) => out.push(seg),
            Component::CurDir => {}
            _ => return None,
        }
    }
    if out.is_dir() {
        out.push("index.html");
    }
    Some(out)
}

fn static_file(s: &mut TcpStream, req: &Request, root: Option<&Path>) -> io::Result<()> {
    let head = req.method == "HEAD";
    if req.method != "GET" && !head {
        return respond(
            s,
            "405 Method Not Allowed",
            "text/plain",
            b"method not allowed\n",
            true,
        );
    }
    let file = root.and_then(|r| resolve(r, &req.path));
    match file.map(|f| (fs::read(&f), f)) {
        Some((Ok(body), f)) => respond(s, "200 OK", content_type(&f), &body, !head),
        _ => respond(s, "404 Not Found", "text/plain", b"not found\n", !head),
    }
}

fn websocket_session(mut ws: WebSocket<Replay>, hub: &Hub) {
    let Some(session) = hub.connect() else { return };
    let id = session.id;
    let _ = ws.get_mut().inner.set_read_timeout(Some(POLL));
    'session: loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                let text = text.strip_suffix('\n').unwrap_or(&text);
                for line in text.split('\n') {
                    if !hub.line(id, line.strip_suffix('\r').unwrap_or(line)) {
                        break 'session;
                    }
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(_) => break,
        }
        loop {
            match session.rx.try_recv() {
                Ok(line) => {
                    if ws.write(Message::text(line)).is_err() {
                        break 'session;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    if session.overflow.load(Ordering::SeqCst) {
                        let _ = ws.write(Message::text(overflow_line()));
                    }
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    break 'session;
                }
            }
        }
        match ws.flush() {
            Ok(()) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(_) => break,
        }
    }
    hub.send(Msg::Disconnect(id));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_stay_inside_the_root() {
        let root = Path::new("/srv/hmi");
        assert_eq!(resolve(root, "/app.js?v=1"), Some(root.join("app.js")));
        assert_eq!(resolve(root, "/a/./b.css"), Some(root.join("a/b.css")));
        assert_eq!(resolve(root, "/../etc/passwd"), None);
        assert_eq!(resolve(root, "/a/../../x"), None);
    }

    #[test]
    fn upgrade_header_detection() {
        let r = parse_head(b"GET /bus HTTP/1.1\r\nHost: x\r\nUpgrade: WebSocket\r\n\r\n").unwrap();
        assert!(r.upgrade);
        assert_eq!(r.path, "/bus");
        let r = parse_head(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
        assert!(!r.upgrade);
    }
}
