//! Transport for the schemes: a deterministic in-memory channel with
//! adversarial hooks, a threaded TCP client/server, a line-oriented
//! transcript log, and file persistence for the registration databases.
//!
//! The in-memory and socket paths share the frame format and the scheme
//! step functions, so for identical inputs (clock, ephemerals, database)
//! they produce byte-identical frames.

pub mod channel;
pub mod clock;
pub mod db;
pub mod frame;
pub mod session;
pub mod sock;
pub mod transcript;

pub use channel::{Action, ChannelScript};
pub use clock::{Clock, ManualClock, SystemClock};
pub use db::LabDb;
pub use frame::{Frame, MSG_ALERT, MSG_ERROR};
pub use session::{
    register_user, replay_session, run_session, Direction, Outcome, Party, ReplayOutcome,
    ServerEnv, SessionConfig, SessionRun, UserAccount,
};
pub use sock::{connect, open_alert, seal_alert, serve, ClientError, ClientSession, ServerHandle};
