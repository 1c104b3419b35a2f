//! Serves memtrace debug sessions over HTTP with a push channel, and as a
//! terminal REPL.

pub mod cli;
pub mod http;
pub mod render;
pub mod session;

pub use session::{Action, CreateRequest, Session, SessionError, SessionManager, StepPayload, Timeline};
