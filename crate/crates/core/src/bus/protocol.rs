use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::{Engine, FaultCode};
use crate::station::{Chain, Direction};

/// Longest accepted command line, excluding the LF.
pub const MAX_LINE: usize = 1024;
/// Upper bound on scans a single STEP or RUN may request.
pub const MAX_SCANS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Stepped,
    Realtime,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Stepped => "stepped",
            Mode::Realtime => "realtime",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "stepped" => Some(Mode::Stepped),
            "realtime" => Some(Mode::Realtime),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Read(String),
    Write(String, bool),
    Step(u64),
    Run(u64),
    Snapshot,
    Fault(Chain, FaultCode),
    ResetFaults,
    Reset,
    Sub(Vec<String>),
    Mode(Mode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrCode {
    UnknownCmd,
    UnknownPoint,
    NotInput,
    BadValue,
    Mode,
    Cap,
}

impl ErrCode {
    pub const ALL: [ErrCode; 6] = [
        ErrCode::UnknownCmd,
        ErrCode::UnknownPoint,
        ErrCode::NotInput,
        ErrCode::BadValue,
        ErrCode::Mode,
        ErrCode::Cap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrCode::UnknownCmd => "unknown-cmd",
            ErrCode::UnknownPoint => "unknown-point",
            ErrCode::NotInput => "not-input",
            ErrCode::BadValue => "bad-value",
            ErrCode::Mode => "mode",
            ErrCode::Cap => "cap",
        }
    }
}

/// A protocol error; renders as `ERR code "message"`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("ERR {} {}", .code.as_str(), quote(.message))]
pub struct BusError {
    pub code: ErrCode,
    pub message: String,
}

impl BusError {
    pub fn new(code: ErrCode, message: impl Into<String>) -> Self {
        BusError {
            code,
            message: message.into(),
        }
    }

    pub fn line_too_long() -> Self {
        BusError::new(ErrCode::Cap, "line too long")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            c if c.is_ascii_graphic() || c == ' ' => out.push(c),
            _ => out.push('?'),
        }
    }
    out.push('"');
    out
}

fn bad(msg: impl Into<String>) -> BusError {
    BusError::new(ErrCode::BadValue, msg)
}

fn uint(s: &str) -> Result<u64, BusError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(format!("{s} is not an unsigned integer")));
    }
    s.parse().map_err(|_| bad(format!("{s} is out of range")))
}

fn arity(verb: &str, args: &[&str], n: usize, usage: &str) -> Result<(), BusError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(bad(format!("usage: {verb}{usage}")))
    }
}

impl Command {
    /// Parses one line without its LF. Arguments are separated by single
    /// spaces.
    pub fn parse(line: &str) -> Result<Command, BusError> {
        if line.len() > MAX_LINE {
            return Err(BusError::line_too_long());
        }
        let mut parts = line.split(' ');
        let verb = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let cmd = match verb {
            "READ" => {
                arity(verb, &args, 1, " <point>")?;
                Command::Read(args[0].into())
            }
            "WRITE" => {
                arity(verb, &args, 2, " <point> 0|1")?;
                let v = match args[1] {
                    "0" => false,
                    "1" => true,
                    v => return Err(bad(format!("{v} is not 0 or 1"))),
                };
                Command::Write(args[0].into(), v)
            }
            "STEP" => {
                arity(verb, &args, 1, " <scans>")?;
                Command::Step(uint(args[0])?)
            }
            "RUN" => {
                arity(verb, &args, 1, " <ms>")?;
                Command::Run(uint(args[0])?)
            }
            "SNAPSHOT" => {
                arity(verb, &args, 0, "")?;
                Command::Snapshot
            }
            "FAULT" => {
                arity(verb, &args, 2, " A|B <code>")?;
                let chain = Chain::parse(args[0])
                    .ok_or_else(|| bad(format!("{} is not A or B", args[0])))?;
                let code: FaultCode = args[1]
                    .parse()
                    .map_err(|_| bad(format!("{} is not a fault code", args[1])))?;
                Command::Fault(chain, code)
            }
            "RESETF" => {
                arity(verb, &args, 0, "")?;
                Command::ResetFaults
            }
            "RESET" => {
                arity(verb, &args, 0, "")?;
                Command::Reset
            }
            "SUB" => {
                arity(verb, &args, 1, " <point>[,<point>...]")?;
                Command::Sub(args[0].split(',').map(String::from).collect())
            }
            "MODE" => {
                arity(verb, &args, 1, " stepped|realtime")?;
                let m = Mode::parse(args[0])
                    .ok_or_else(|| bad(format!("{} is not stepped or realtime", args[0])))?;
                Command::Mode(m)
            }
            "" => return Err(BusError::new(ErrCode::UnknownCmd, "empty command")),
            v => {
                return Err(BusError::new(
                    ErrCode::UnknownCmd,
                    format!("unknown command {v}"),
                ))
            }
        };
        Ok(cmd)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Read(p) => write!(f, "READ {p}"),
            Command::Write(p, v) => write!(f, "WRITE {p} {}", u8::from(*v)),
            Command::Step(n) => write!(f, "STEP {n}"),
            Command::Run(ms) => write!(f, "RUN {ms}"),
            Command::Snapshot => f.write_str("SNAPSHOT"),
            Command::Fault(c, code) => write!(f, "FAULT {c} {code}"),
            Command::ResetFaults => f.write_str("RESETF"),
            Command::Reset => f.write_str("RESET"),
            Command::Sub(ps) => write!(f, "SUB {}", ps.join(",")),
            Command::Mode(m) => write!(f, "MODE {m}"),
        }
    }
}

pub type ClientId = u64;

/// Lines produced by one bus operation, in send order, each addressed to one
/// client. Lines carry no LF.
pub type Outbox = Vec<(ClientId, String)>;

/// The protocol state machine: one engine, its clients and their
/// subscriptions. Transport-free; the server feeds it lines in arrival order.
#[derive(Debug)]
pub struct Bus {
    engine: Engine,
    mode: Mode,
    next_client: ClientId,
    subs: BTreeMap<ClientId, BTreeSet<usize>>,
    /// Value of every point, by map order, at the last change check.
    last: Vec<bool>,
}

impl Bus {
    pub fn new(engine: Engine, mode: Mode) -> Self {
        let last = point_values(&engine);
        Bus {
            engine,
            mode,
            next_client: 1,
            subs: BTreeMap::new(),
            last,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn connect(&mut self) -> ClientId {
        let id = self.next_client;
        self.next_client += 1;
        self.subs.insert(id, BTreeSet::new());
        id
    }

    pub fn disconnect(&mut self, client: ClientId) {
        self.subs.remove(&client);
    }

    pub fn clients(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.subs.keys().copied()
    }

    /// Handles one command line from `client`. The requester's response is
    /// the last of its lines in the outbox; events caused by the command to
    /// any subscriber precede it.
    pub fn handle_line(&mut self, client: ClientId, line: &str) -> Outbox {
        let mut out = Outbox::new();
        let resp = Command::parse(line).and_then(|cmd| self.apply(client, cmd, &mut out));
        match resp {
            Ok(lines) => out.extend(lines.into_iter().map(|l| (client, l))),
            Err(e) => out.push((client, e.to_string())),
        }
        out
    }

    /// One free-running scan, for realtime mode.
    pub fn tick(&mut self) -> Outbox {
        let mut out = Outbox::new();
        self.engine.scan();
        self.emit_changes(&mut out);
        out
    }

    fn point_index(&self, name: &str) -> Result<usize, BusError> {
        self.engine
            .station()
            .points()
            .iter()
            .position(|p| p.name.as_str() == name)
            .ok_or_else(|| {
                BusError::new(
                    ErrCode::UnknownPoint,
                    format!("{name} is not a station point"),
                )
            })
    }

    fn check_scans(&self, n: u64) -> Result<(), BusError> {
        if self.mode == Mode::Realtime {
            return Err(BusError::new(
                ErrCode::Mode,
                "stepped commands rejected in realtime",
            ));
        }
        if n > MAX_SCANS {
            return Err(BusError::new(
                ErrCode::Cap,
                format!("at most {MAX_SCANS} scans per command"),
            ));
        }
        Ok(())
    }

    fn apply(
        &mut self,
        client: ClientId,
        cmd: Command,
        out: &mut Outbox,
    ) -> Result<Vec<String>, BusError> {
        let ok = |payload: Option<String>| match payload {
            Some(p) => vec![format!("OK {p}")],
            None => vec!["OK".to_string()],
        };
        match cmd {
            Command::Read(p) => {
                self.point_index(&p)?;
                let v = self.engine.read_point(&p).expect("point checked");
                Ok(ok(Some(u8::from(v).to_string())))
            }
            Command::Write(p, v) => {
                let i = self.point_index(&p)?;
                if self.engine.station().points()[i].direction == Direction::Output {
                    return Err(BusError::new(
                        ErrCode::NotInput,
                        format!("{p} is an output"),
                    ));
                }
                self.engine.write_point(&p, v).expect("input checked");
                Ok(ok(None))
            }
            Command::Step(n) => {
                self.check_scans(n)?;
                self.scans(n, out);
                Ok(ok(Some(self.engine.time_ms().to_string())))
            }
            Command::Run(ms) => {
                let period = u64::from(self.engine.scan_period_ms());
                if ms % period != 0 {
                    return Err(bad(format!(
                        "{ms} is not a multiple of the {period}ms scan period"
                    )));
                }
                self.check_scans(ms / period)?;
                self.scans(ms / period, out);
                Ok(ok(Some(self.engine.time_ms().to_string())))
            }
            Command::Snapshot => {
                let mut lines = vec!["OK".to_string()];
                for (name, v) in self.engine.image().values {
                    lines.push(format!("{name} {}", u8::from(v)));
                }
                lines.push(".".into());
                Ok(lines)
            }
            Command::Fault(chain, code) => {
                if code == FaultCode::NoFault {
                    return Err(bad("cannot inject NO_FAULT; use RESETF"));
                }
                self.engine.inject_fault(chain, code).expect("code checked");
                Ok(ok(None))
            }
            Command::ResetFaults => {
                self.engine.reset_faults();
                Ok(ok(None))
            }
            Command::Reset => {
                self.engine.reset();
                self.emit_changes(out);
                Ok(ok(None))
            }
            Command::Sub(points) => {
                let idx = points
                    .iter()
                    .map(|p| self.point_index(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let set = self.subs.entry(client).or_default();
                set.extend(idx);
                Ok(ok(Some(set.len().to_string())))
            }
            Command::Mode(m) => {
                self.mode = m;
                Ok(ok(None))
            }
        }
    }

    fn scans(&mut self, n: u64, out: &mut Outbox) {
        for _ in 0..n {
            self.engine.scan();
            self.emit_changes(out);
        }
    }

    /// EVT lines for every point that changed since the last check, in
    /// point-map order, to each of its subscribers.
    fn emit_changes(&mut self, out: &mut Outbox) {
        let now = point_values(&self.engine);
        let t = self.engine.time_ms();
        let names = self.engine.station().points();
        for (i, (&old, &new)) in self.last.iter().zip(&now).enumerate() {
            if old == new {
                continue;
            }
            for (&c, set) in &self.subs {
                if set.contains(&i) {
                    out.push((c, format!("EVT {t} {} {}", names[i].name, u8::from(new))));
                }
            }
        }
        self.last = now;
    }
}

fn point_values(engine: &Engine) -> Vec<bool> {
    engine.image().values.into_iter().map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::station::build_reference_station;

    fn bus() -> (Bus, ClientId) {
        let mut b = Bus::new(
            Engine::load(build_reference_station()).unwrap(),
            Mode::Stepped,
        );
        let c = b.connect();
        (b, c)
    }

    fn say(b: &mut Bus, c: ClientId, line: &str) -> Vec<String> {
        b.handle_line(c, line).into_iter().map(|(_, l)| l).collect()
    }

    #[test]
    fn parse_and_print_agree() {
        for line in [
            "READ DOOR_CLOSED_1",
            "WRITE BEAM_REQ 1",
            "STEP 3",
            "RUN 100",
            "SNAPSHOT",
            "FAULT B WATCHDOG",
            "RESETF",
            "RESET",
            "SUB A,B,C",
            "MODE realtime",
        ] {
            assert_eq!(Command::parse(line).unwrap().to_string(), line);
        }
    }

    #[test]
    fn malformed_lines() {
        let code = |l: &str| Command::parse(l).unwrap_err().code;
        assert_eq!(code("read X"), ErrCode::UnknownCmd);
        assert_eq!(code(""), ErrCode::UnknownCmd);
        assert_eq!(code("READ"), ErrCode::BadValue);
        assert_eq!(code("READ  X"), ErrCode::BadValue);
        assert_eq!(code("WRITE X 2"), ErrCode::BadValue);
        assert_eq!(code("STEP -1"), ErrCode::BadValue);
        assert_eq!(code("STEP +1"), ErrCode::BadValue);
        assert_eq!(code("STEP 99999999999999999999999"), ErrCode::BadValue);
        assert_eq!(code("FAULT C WATCHDOG"), ErrCode::BadValue);
        assert_eq!(code("FAULT A BOOM"), ErrCode::BadValue);
        assert_eq!(code("MODE fast"), ErrCode::BadValue);
        assert_eq!(code(&"X".repeat(MAX_LINE + 1)), ErrCode::Cap);
    }

    #[test]
    fn error_rendering_quotes() {
        let e = BusError::new(ErrCode::BadValue, "a \"b\" \\ c\n");
        assert_eq!(e.to_string(), r#"ERR bad-value "a \"b\" \\ c?""#);
    }

    #[test]
    fn write_then_step_echoes() {
        let (mut b, c) = bus();
        assert_eq!(say(&mut b, c, "READ SHUTTER_PERMIT"), ["OK 0"]);
        assert_eq!(say(&mut b, c, "WRITE SEARCH_BTN_1 1"), ["OK"]);
        assert_eq!(say(&mut b, c, "READ SEARCH_BTN_1"), ["OK 0"]);
        assert_eq!(say(&mut b, c, "STEP 1"), ["OK 10"]);
        assert_eq!(say(&mut b, c, "READ SEARCH_BTN_1"), ["OK 1"]);
    }

    #[test]
    fn events_go_only_to_subscribers() {
        let (mut b, c1) = bus();
        let c2 = b.connect();
        assert_eq!(say(&mut b, c2, "SUB DOOR_CLOSED_1,DOOR_CLOSED_2"), ["OK 2"]);
        assert_eq!(say(&mut b, c2, "SUB DOOR_CLOSED_1"), ["OK 2"]);
        say(&mut b, c1, "WRITE DOOR_CLOSED_1 1");
        say(&mut b, c1, "WRITE DOOR_CLOSED_2 1");
        let out = b.handle_line(c1, "STEP 2");
        assert_eq!(
            out,
            vec![
                (c2, "EVT 10 DOOR_CLOSED_1 1".to_string()),
                (c2, "EVT 10 DOOR_CLOSED_2 1".to_string()),
                (c1, "OK 20".to_string()),
            ]
        );
        b.disconnect(c2);
        say(&mut b, c1, "WRITE DOOR_CLOSED_1 0");
        assert_eq!(b.handle_line(c1, "STEP 1").len(), 1);
    }

    #[test]
    fn realtime_rejects_stepping_but_ticks() {
        let (mut b, c) = bus();
        assert_eq!(say(&mut b, c, "MODE realtime"), ["OK"]);
        assert_eq!(
            say(&mut b, c, "STEP 1"),
            [r#"ERR mode "stepped commands rejected in realtime""#]
        );
        assert_eq!(
            say(&mut b, c, "RUN 10")[0],
            r#"ERR mode "stepped commands rejected in realtime""#
        );
        b.tick();
        assert_eq!(b.engine().seq(), 1);
    }

    #[test]
    fn step_cap() {
        let (mut b, c) = bus();
        let r = say(&mut b, c, &format!("STEP {}", MAX_SCANS + 1));
        assert!(r[0].starts_with("ERR cap "), "{r:?}");
        assert_eq!(b.engine().seq(), 0);
    }
}
