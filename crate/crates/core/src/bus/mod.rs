//! Line-oriented register protocol over TCP, plus a websocket bridge that
//! carries the same lines one per text message.

mod bridge;
mod protocol;
mod server;

pub use protocol::{Bus, BusError, ClientId, Command, ErrCode, Mode, Outbox, MAX_LINE, MAX_SCANS};
pub use server::{ServeOptions, Server, DEFAULT_BRIDGE_PORT, DEFAULT_TCP_PORT};
