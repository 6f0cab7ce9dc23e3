//! Session service: streams the simulated world to a client and runs the
//! sorting and staircase tasks against live input.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{AnswerPayload, BodyState, ClientMessage, ServerMessage, StaircaseInfo, TaskName, PROTOCOL_VERSION};
pub use server::{persist, router, run_session, serve, ServerConfig};
pub use session::{apply_overrides, Pacing, Session, SessionConfig, DEFAULT_REFERENCES};
