//! L2 session service: bridges the runner to a live operator console over line-delimited JSON on TCP.

mod client;
pub mod protocol;
mod server;
mod session;

pub use client::{ClientLog, ScriptedClient};
pub use protocol::{Body, Direction, SessionMessage};
pub use server::{serve_l2, ServeOptions, ServeReport, SessionOutcome};
pub use session::{awareness_questions, Connection, LiveSession, Timing, Transcript};

use crate::runner::RunError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Run(#[from] RunError),
}
