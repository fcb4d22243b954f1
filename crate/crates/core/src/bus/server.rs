use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::bridge;
use super::protocol::{Bus, BusError, ClientId, Mode, Outbox, MAX_LINE};

pub const DEFAULT_TCP_PORT: u16 = 7502;
pub const DEFAULT_BRIDGE_PORT: u16 = 7503;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub listen: String,
    /// Websocket bridge and static HMI endpoint; `None` disables it.
    pub bridge: Option<String>,
    /// Directory served over HTTP on the bridge port.
    pub hmi_dir: Option<PathBuf>,
    /// Lines queued per client before it counts as a slow subscriber.
    pub client_buffer: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            listen: format!("127.0.0.1:{DEFAULT_TCP_PORT}"),
            bridge: Some(format!("127.0.0.1:{DEFAULT_BRIDGE_PORT}")),
            hmi_dir: None,
            client_buffer: 1 << 16,
        }
    }
}

pub(crate) enum Msg {
    Connect {
        tx: SyncSender<String>,
        overflow: Arc<AtomicBool>,
        reply: Sender<ClientId>,
    },
    Line(ClientId, String),
    TooLong(ClientId),
    Disconnect(ClientId),
    Stop,
}

/// Connection to the executor, shared by every transport.
#[derive(Clone)]
pub(crate) struct Hub {
    tx: Sender<Msg>,
    buffer: usize,
}

pub(crate) struct Session {
    pub id: ClientId,
    pub rx: Receiver<String>,
    pub overflow: Arc<AtomicBool>,
}

impl Hub {
    pub fn connect(&self) -> Option<Session> {
        let (tx, rx) = mpsc::sync_channel(self.buffer);
        let overflow = Arc::new(AtomicBool::new(false));
        let (reply, id) = mpsc::channel();
        self.tx
            .send(Msg::Connect {
                tx,
                overflow: Arc::clone(&overflow),
                reply,
            })
            .ok()?;
        Some(Session {
            id: id.recv().ok()?,
            rx,
            overflow,
        })
    }

    pub fn send(&self, msg: Msg) -> bool {
        self.tx.send(msg).is_ok()
    }

    /// Forwards one received line, applying the length cap.
    pub fn line(&self, id: ClientId, line: &str) -> bool {
        if line.len() > MAX_LINE {
            self.send(Msg::TooLong(id))
        } else {
            self.send(Msg::Line(id, line.to_string()))
        }
    }
}

pub(crate) fn overflow_line() -> String {
    BusError::new(super::ErrCode::Cap, "subscriber buffer overflow").to_string()
}

/// A running bus server. Dropping it leaves the threads running; call
/// [`Server::shutdown`] or [`Server::wait`].
pub struct Server {
    tcp_addr: SocketAddr,
    bridge_addr: Option<SocketAddr>,
    stop: Arc<AtomicBool>,
    hub: Hub,
    threads: Vec<JoinHandle<()>>,
}

fn bind(addr: &str) -> io::Result<TcpListener> {
    let addrs: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
    let l = TcpListener::bind(&addrs[..])?;
    l.set_nonblocking(true)?;
    Ok(l)
}

impl Server {
    /// Binds both endpoints and starts serving `bus`.
    pub fn start(bus: Bus, opts: &ServeOptions) -> io::Result<Server> {
        let tcp = bind(&opts.listen)?;
        let bridge_listener = opts.bridge.as_deref().map(bind).transpose()?;
        let tcp_addr = tcp.local_addr()?;
        let bridge_addr = bridge_listener
            .as_ref()
            .map(TcpListener::local_addr)
            .transpose()?;
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        let hub = Hub {
            tx,
            buffer: opts.client_buffer.max(1),
        };
        let mut threads = vec![thread::spawn(move || executor(bus, rx))];
        {
            let hub = hub.clone();
            let stop = Arc::clone(&stop);
            threads.push(thread::spawn(move || {
                accept_loop(&tcp, &stop, |s| {
                    let hub = hub.clone();
                    thread::spawn(move || serve_tcp(s, &hub));
                })
            }));
        }
        if let Some(l) = bridge_listener {
            let hub = hub.clone();
            let stop = Arc::clone(&stop);
            let dir = opts.hmi_dir.clone();
            threads.push(thread::spawn(move || {
                accept_loop(&l, &stop, |s| {
                    let hub = hub.clone();
                    let dir = dir.clone();
                    thread::spawn(move || bridge::serve(s, &hub, dir.as_deref()));
                })
            }));
        }
        log::info!("bus listening on {tcp_addr}, bridge {bridge_addr:?}");
        Ok(Server {
            tcp_addr,
            bridge_addr,
            stop,
            hub,
            threads,
        })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn bridge_addr(&self) -> Option<SocketAddr> {
        self.bridge_addr
    }

    /// Stops accepting, disconnects every client and joins the server threads.
    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        self.hub.send(Msg::Stop);
        for t in self.threads {
            let _ = t.join();
        }
    }

    /// Blocks for the life of the server.
    pub fn wait(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }
}

fn accept_loop(l: &TcpListener, stop: &AtomicBool, mut spawn: impl FnMut(TcpStream)) {
    while !stop.load(Ordering::SeqCst) {
        match l.accept() {
            Ok((s, peer)) => {
                log::debug!("connection from {peer}");
                if s.set_nonblocking(false)
                    .and_then(|()| s.set_nodelay(true))
                    .is_ok()
                {
                    spawn(s);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(50));
            }
        }
    }
}

struct Client {
    tx: SyncSender<String>,
    overflow: Arc<AtomicBool>,
}

fn executor(mut bus: Bus, rx: Receiver<Msg>) {
    let mut clients: HashMap<ClientId, Client> = HashMap::new();
    let period = Duration::from_millis(u64::from(bus.engine().scan_period_ms()));
    let mut deadline = Instant::now() + period;
    loop {
        let msg = if bus.mode() == Mode::Realtime {
            let now = Instant::now();
            if now >= deadline {
                let out = bus.tick();
                dispatch(&mut bus, &mut clients, out);
                deadline += period;
                // best effort: after a long stall, resume pacing from now
                if deadline + Duration::from_secs(1) < now {
                    deadline = now + period;
                }
                continue;
            }
            match rx.recv_timeout(deadline - now) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => break,
            }
        } else {
            match rx.recv() {
                Ok(m) => m,
                Err(_) => break,
            }
        };
        match msg {
            Msg::Connect {
                tx,
                overflow,
                reply,
            } => {
                let id = bus.connect();
                clients.insert(id, Client { tx, overflow });
                let _ = reply.send(id);
            }
            Msg::Line(id, line) => {
                if !clients.contains_key(&id) {
                    continue;
                }
                let was = bus.mode();
                let out = bus.handle_line(id, &line);
                dispatch(&mut bus, &mut clients, out);
                if was == Mode::Stepped && bus.mode() == Mode::Realtime {
                    deadline = Instant::now() + period;
                }
            }
            Msg::TooLong(id) => {
                if clients.contains_key(&id) {
                    let out = vec![(id, BusError::line_too_long().to_string())];
                    dispatch(&mut bus, &mut clients, out);
                }
            }
            Msg::Disconnect(id) => {
                clients.remove(&id);
                bus.disconnect(id);
            }
            Msg::Stop => break,
        }
    }
}

fn dispatch(bus: &mut Bus, clients: &mut HashMap<ClientId, Client>, out: Outbox) {
    for (id, line) in out {
        let Some(c) = clients.get(&id) else { continue };
        match c.tx.try_send(line) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => {
                log::warn!("client {id} is not keeping up; disconnecting");
                c.overflow.store(true, Ordering::SeqCst);
                clients.remove(&id);
                bus.disconnect(id);
            }
            Err(TrySendError::Disconnected(_)) => {
                clients.remove(&id);
                bus.disconnect(id);
            }
        }
    }
}

fn serve_tcp(stream: TcpStream, hub: &Hub) {
    let Some(session) = hub.connect() else { return };
    let Ok(write_half) = stream.try_clone() else {
        return;
    };
    let id = session.id;
    let writer = thread::spawn(move || write_tcp(write_half, session));
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    loop {
        match read_capped_line(&mut reader, &mut buf) {
            Ok(Some(true)) => {
                let line = String::from_utf8_lossy(&buf);
                if !hub.line(id, &line) {
                    break;
                }
            }
            Ok(Some(false)) => {
                if !hub.send(Msg::TooLong(id)) {
                    break;
                }
            }
            Ok(None) | Err(_) => break,
        }
    }
    hub.send(Msg::Disconnect(id));
    let _ = writer.join();
}

/// Reads one LF-terminated line into `buf` without the LF (or CRLF).
/// `Some(false)` means the line exceeded the cap and was discarded; `None`
/// is end of stream.
fn read_capped_line(r: &mut impl BufRead, buf: &mut Vec<u8>) -> io::Result<Option<bool>> {
    buf.clear();
    let n = r
        .by_ref()
        .take(MAX_LINE as u64 + 2)
        .read_until(b'\n', buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        return Ok(Some(buf.len() <= MAX_LINE));
    }
    if buf.len() <= MAX_LINE {
        // unterminated final line
        return Ok(Some(true));
    }
    // skip the rest of the oversized line
    loop {
        let chunk = r.fill_buf()?;
        if chunk.is_empty() {
            return Ok(Some(false));
        }
        if let Some(i) = chunk.iter().position(|&b| b == b'\n') {
            r.consume(i + 1);
            return Ok(Some(false));
        }
        let len = chunk.len();
        r.consume(len);
    }
}

fn write_tcp(stream: TcpStream, session: Session) {
    let mut w = BufWriter::new(&stream);
    let mut ok = true;
    while let Ok(line) = session.rx.recv() {
        ok = writeln!(w, "{line}").is_ok();
        // batch whatever is already queued into one flush
        while ok {
            match session.rx.try_recv() {
                Ok(line) => ok = writeln!(w, "{line}").is_ok(),
                Err(_) => break,
            }
        }
        if !ok || w.flush().is_err() {
            ok = false;
            break;
        }
    }
    if ok && session.overflow.load(Ordering::SeqCst) {
        let _ = writeln!(w, "{}", overflow_line());
        let _ = w.flush();
    }
    drop(w);
    let _ = stream.shutdown(Shutdown::Both);
}
