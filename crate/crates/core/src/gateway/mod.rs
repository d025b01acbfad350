//! Live sessions: a human (or any client) drives the simulation over a
//! socket while the coach's cues and the vehicle state stream back.

mod protocol;
mod server;
mod session;

pub use protocol::{ClientMessage, ServerMessage, StatePayload};
pub use server::{ServeError, ServeOptions, Server};
pub use session::{LiveSession, LIVE_DRIVER};
