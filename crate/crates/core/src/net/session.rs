//! In-memory session driver: runs one full exchange between a user and a
//! server through a scripted channel, with injected clock and RNGs, and
//! records everything needed to replay or attack the session afterwards.

use super::channel::ChannelScript;
use super::clock::Clock;
use super::db::LabDb;
use super::frame::Frame;
use crate::adversary::{LeakedEphemerals, SessionTranscript};
use crate::bench::PartyCounts;
use crate::ecc::{random_scalar, CurveParams, Scalar};
use crate::prims::Tally;
use crate::schemes::enhanced::{self, EnhancedEnrollment, EnhancedM1};
use crate::schemes::sureshkumar::{self, SureshM1};
use crate::schemes::zhang::{self, ZhangM1, ZhangM2, ZhangM3};
use crate::schemes::{
    Credentials, Ctx, KeyConfirm, ProtocolError, SchemeId, ServerChallenge, ServerKeys,
    SessionKey,
};
use rand::RngCore;
use std::fmt;

/// Which side of the exchange an event belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Party {
    User,
    Server,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::User => "user",
            Party::Server => "server",
        })
    }
}

/// Direction a frame travelled.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    UserToServer,
    ServerToUser,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::UserToServer => "U>S",
            Direction::ServerToUser => "S>U",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "U>S" => Some(Direction::UserToServer),
            "S>U" => Some(Direction::ServerToUser),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a session ended.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Outcome {
    KeysAgree { user_key: SessionKey, server_key: SessionKey },
    /// `by` is the party that raised the error. A dropped frame surfaces
    /// as `TransportClosed` raised by the party that was waiting for it.
    Rejected { error: ProtocolError, by: Party },
}

impl Outcome {
    pub fn is_agreement(&self) -> bool {
        matches!(self, Outcome::KeysAgree { .. })
    }
}

/// The user's long-term material: credentials, plus the enrollment
/// artifact the hardened scheme hands back at registration.
#[derive(Clone, Debug)]
pub struct UserAccount {
    pub creds: Credentials,
    pub enrollment: Option<EnhancedEnrollment>,
}

/// Server-side long-term state: keypair, registration tables, realm.
#[derive(Debug, Clone)]
pub struct ServerEnv {
    pub keys: ServerKeys,
    pub db: LabDb,
    pub realm: Vec<u8>,
}

/// Transport-independent session parameters.
#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub curve: CurveParams,
    pub window_ms: u64,
}

impl SessionConfig {
    pub fn toy() -> Self {
        SessionConfig { curve: CurveParams::toy17().clone(), window_ms: 5000 }
    }
}

/// Registers `creds` for `scheme` in the server's tables and returns the
/// account the user holds afterwards. Registration is assumed to run over
/// a private channel; its operations are not part of any login tally.
pub fn register_user(
    cfg: &SessionConfig,
    scheme: SchemeId,
    creds: &Credentials,
    env: &mut ServerEnv,
    rng: &mut dyn RngCore,
) -> Result<UserAccount, ProtocolError> {
    let tally = Tally::new();
    let ctx = Ctx::new(&cfg.curve, cfg.window_ms, &tally);
    let enrollment = match scheme {
        SchemeId::Sureshkumar => {
            sureshkumar::register(creds, &env.keys, &mut env.db.suresh, &ctx)?;
            None
        }
        SchemeId::Zhang => {
            zhang::register(creds, &env.keys, &mut env.db.zhang, &ctx)?;
            None
        }
        SchemeId::Enhanced => {
            let salt = random_scalar(rng, &cfg.curve);
            let (_, enrollment) =
                enhanced::register(creds, &env.keys, salt, &mut env.db.enhanced, &ctx)?;
            Some(enrollment)
        }
    };
    Ok(UserAccount { creds: creds.clone(), enrollment })
}

/// Everything one driven session leaves behind.
#[derive(Clone, Debug)]
pub struct SessionRun {
    pub scheme: SchemeId,
    pub outcome: Outcome,
    /// Frames as actually delivered across the channel, in order.
    pub frames: Vec<(Direction, Frame)>,
    pub user_ephemeral: Scalar,
    pub server_ephemeral: Scalar,
    pub user_ops: PartyCounts,
    pub server_ops: PartyCounts,
}

impl SessionRun {
    fn payload_of(&self, msg_index: u8) -> Option<Vec<u8>> {
        self.frames
            .iter()
            .find(|(_, f)| f.msg_index == msg_index)
            .map(|(_, f)| f.payload.clone())
    }

    /// The eavesdropper's view of this session: the three public frames
    /// plus whichever ephemerals the caller decides leaked. `None` until
    /// all three messages crossed the wire.
    pub fn record_transcript(
        &self,
        cfg: &SessionConfig,
        env: &ServerEnv,
        leak_user: bool,
        leak_server: bool,
    ) -> Option<SessionTranscript> {
        let m1 = self.payload_of(1)?;
        let m2 = self.payload_of(2)?;
        let m3 = self.payload_of(3)?;
        Some(SessionTranscript {
            scheme: self.scheme,
            curve: cfg.curve.clone(),
            server_public: env.keys.public().clone(),
            realm: if self.scheme == SchemeId::Zhang { env.realm.clone() } else { Vec::new() },
            m1,
            m2,
            m3,
            leaked: LeakedEphemerals {
                user_scalar: leak_user.then(|| self.user_ephemeral.clone()),
                server_scalar: leak_server.then(|| self.server_ephemeral.clone()),
            },
        })
    }
}

struct Run {
    frames: Vec<(Direction, Frame)>,
    script: ChannelScript,
}

enum Step {
    Delivered(Frame),
    Lost(Party),
}

impl Run {
    /// Sends one frame through the script. A dropped frame is charged to
    /// the party left waiting for it.
    fn send(&mut self, direction: Direction, frame: Frame, clock: &dyn Clock) -> Step {
        match self.script.apply(frame, clock) {
            Some(delivered) => {
                self.frames.push((direction, delivered.clone()));
                Step::Delivered(delivered)
            }
            None => Step::Lost(match direction {
                Direction::UserToServer => Party::Server,
                Direction::ServerToUser => Party::User,
            }),
        }
    }
}

macro_rules! deliver {
    ($run:expr, $dir:expr, $frame:expr, $clock:expr) => {
        match $run.send($dir, $frame, $clock) {
            Step::Delivered(f) => f,
            Step::Lost(party) => {
                return (Outcome::Rejected { error: ProtocolError::TransportClosed, by: party },
                        std::mem::take(&mut $run.frames));
            }
        }
    };
}

macro_rules! step {
    ($party:expr, $run:expr, $result:expr) => {
        match $result {
            Ok(v) => v,
            Err(e) => {
                return (Outcome::Rejected { error: e, by: $party },
                        std::mem::take(&mut $run.frames));
            }
        }
    };
}

/// Drives one full exchange for `scheme` between `account` and `env`
/// through the scripted channel. The user and server draw ephemerals from
/// separate RNGs so either side can be made deterministic independently.
pub fn run_session(
    cfg: &SessionConfig,
    scheme: SchemeId,
    account: &UserAccount,
    env: &mut ServerEnv,
    script: ChannelScript,
    clock: &dyn Clock,
    user_rng: &mut dyn RngCore,
    server_rng: &mut dyn RngCore,
) -> SessionRun {
    let user_tally = Tally::new();
    let server_tally = Tally::new();
    let r_u = random_scalar(user_rng, &cfg.curve);
    let r_s = random_scalar(server_rng, &cfg.curve);

    let (outcome, frames) = drive(
        cfg,
        scheme,
        account,
        env,
        script,
        clock,
        r_u.clone(),
        r_s.clone(),
        &user_tally,
        &server_tally,
    );

    SessionRun {
        scheme,
        outcome,
        frames,
        user_ephemeral: r_u,
        server_ephemeral: r_s,
        user_ops: PartyCounts {
            point_mults: user_tally.point_mults(),
            hashes: user_tally.hashes(),
        },
        server_ops: PartyCounts {
            point_mults: server_tally.point_mults(),
            hashes: server_tally.hashes(),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn drive(
    cfg: &SessionConfig,
    scheme: SchemeId,
    account: &UserAccount,
    env: &mut ServerEnv,
    script: ChannelScript,
    clock: &dyn Clock,
    r_u: Scalar,
    r_s: Scalar,
    user_tally: &Tally,
    server_tally: &Tally,
) -> (Outcome, Vec<(Direction, Frame)>) {
    let curve = &cfg.curve;
    let uc = Ctx::new(curve, cfg.window_ms, user_tally);
    let sc = Ctx::new(curve, cfg.window_ms, server_tally);
    let mut run = Run { frames: Vec::new(), script };

    match scheme {
        SchemeId::Sureshkumar => {
            let t_u = clock.now();
            let (m1, ustate) = step!(
                Party::User,
                run,
                sureshkumar::user_start(&account.creds, env.keys.public(), t_u, r_u, &uc)
            );
            let f1 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 1, m1.encode(curve)), clock);

            let m1 = step!(Party::Server, run, SureshM1::decode(&f1.payload, curve));
            let now = clock.now();
            let (m2, sstate) = step!(
                Party::Server,
                run,
                sureshkumar::server_respond(&m1, &mut env.db.suresh, &env.keys, now, now, r_s, &sc)
            );
            let f2 = deliver!(run, Direction::ServerToUser, Frame::new(scheme, 2, m2.encode(curve)), clock);

            let m2 = step!(Party::User, run, ServerChallenge::decode(&f2.payload, curve));
            let now = clock.now();
            let (m3, user_key) =
                step!(Party::User, run, sureshkumar::user_finish(&m2, &ustate, now, &uc));
            let f3 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 3, m3.encode()), clock);

            let m3 = step!(Party::Server, run, KeyConfirm::decode(&f3.payload));
            let server_key =
                step!(Party::Server, run, sureshkumar::server_confirm(&m3, &sstate, &sc));
            (Outcome::KeysAgree { user_key, server_key }, run.frames)
        }
        SchemeId::Zhang => {
            let (m1, ustate) = step!(
                Party::User,
                run,
                zhang::user_start(&account.creds, env.keys.public(), r_u, &uc)
            );
            let f1 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 1, m1.encode(curve)), clock);

            let m1 = step!(Party::Server, run, ZhangM1::decode(&f1.payload, curve));
            let (m2, sstate) = step!(
                Party::Server,
                run,
                zhang::server_challenge(&m1, &env.keys, &env.realm, r_s, &sc)
            );
            let f2 = deliver!(run, Direction::ServerToUser, Frame::new(scheme, 2, m2.encode(curve)), clock);

            let m2 = step!(Party::User, run, ZhangM2::decode(&f2.payload, curve));
            let (m3, user_key) = step!(Party::User, run, zhang::user_finish(&m2, &ustate, &uc));
            let f3 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 3, m3.encode()), clock);

            let m3 = step!(Party::Server, run, ZhangM3::decode(&f3.payload));
            let server_key = step!(
                Party::Server,
                run,
                zhang::server_verify(&m3, &sstate, &env.db.zhang, &env.keys, &sc)
            );
            (Outcome::KeysAgree { user_key, server_key }, run.frames)
        }
        SchemeId::Enhanced => {
            let enrollment = match &account.enrollment {
                Some(e) => e,
                None => {
                    return (
                        Outcome::Rejected {
                            error: ProtocolError::InvalidCredentials(
                                "account holds no enrollment for the hardened scheme",
                            ),
                            by: Party::User,
                        },
                        run.frames,
                    )
                }
            };
            let t_u = clock.now();
            let (m1, ustate) = step!(
                Party::User,
                run,
                enhanced::user_start(&account.creds, enrollment, env.keys.public(), t_u, r_u, &uc)
            );
            let f1 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 1, m1.encode(curve)), clock);

            let m1 = step!(Party::Server, run, EnhancedM1::decode(&f1.payload, curve));
            let now = clock.now();
            let (m2, sstate) = step!(
                Party::Server,
                run,
                enhanced::server_respond(&m1, &mut env.db.enhanced, &env.keys, now, now, r_s, &sc)
            );
            let f2 = deliver!(run, Direction::ServerToUser, Frame::new(scheme, 2, m2.encode(curve)), clock);

            let m2 = step!(Party::User, run, ServerChallenge::decode(&f2.payload, curve));
            let now = clock.now();
            let (m3, user_key) =
                step!(Party::User, run, enhanced::user_finish(&m2, &ustate, now, &uc));
            let f3 = deliver!(run, Direction::UserToServer, Frame::new(scheme, 3, m3.encode()), clock);

            let m3 = step!(Party::Server, run, KeyConfirm::decode(&f3.payload));
            let server_key =
                step!(Party::Server, run, enhanced::server_confirm(&m3, &sstate, &sc));
            (Outcome::KeysAgree { user_key, server_key }, run.frames)
        }
    }
}

/// How a re-injected session ended on the server side.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ReplayOutcome {
    /// The server ran to completion and derived a key: the recorded
    /// session was accepted a second time.
    Accepted { server_key: SessionKey },
    Rejected { error: ProtocolError },
}

/// Feeds the user-to-server frames of a recorded session to a server,
/// without any live user. This is the replay attack: whether it lands
/// depends entirely on what freshness state the scheme gives the server.
/// A scheme whose exchange is deterministic given the server's randomness
/// accepts the stale session wholesale; timestamped schemes refuse it at
/// the first message once the window has moved (or the replay cache is
/// warm).
pub fn replay_session(
    cfg: &SessionConfig,
    recorded: &SessionRun,
    env: &mut ServerEnv,
    clock: &dyn Clock,
    server_rng: &mut dyn RngCore,
) -> ReplayOutcome {
    let curve = &cfg.curve;
    let tally = Tally::new();
    let sc = Ctx::new(curve, cfg.window_ms, &tally);
    let r_s = random_scalar(server_rng, curve);

    let m1_bytes = match recorded.frames.iter().find(|(d, f)| {
        *d == Direction::UserToServer && f.msg_index == 1
    }) {
        Some((_, f)) => f.payload.clone(),
        None => {
            return ReplayOutcome::Rejected {
                error: ProtocolError::Malformed("recorded session has no first message".into()),
            }
        }
    };
    let m3_bytes = recorded
        .frames
        .iter()
        .find(|(d, f)| *d == Direction::UserToServer && f.msg_index == 3)
        .map(|(_, f)| f.payload.clone());

    macro_rules! try_step {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => return ReplayOutcome::Rejected { error: e },
            }
        };
    }
    let m3_bytes = match m3_bytes {
        Some(b) => b,
        None => {
            return ReplayOutcome::Rejected {
                error: ProtocolError::Malformed("recorded session has no final message".into()),
            }
        }
    };

    match recorded.scheme {
        SchemeId::Sureshkumar => {
            let m1 = try_step!(SureshM1::decode(&m1_bytes, curve));
            let now = clock.now();
            let (_, sstate) = try_step!(sureshkumar::server_respond(
                &m1,
                &mut env.db.suresh,
                &env.keys,
                now,
                now,
                r_s,
                &sc
            ));
            let m3 = try_step!(KeyConfirm::decode(&m3_bytes));
            let server_key = try_step!(sureshkumar::server_confirm(&m3, &sstate, &sc));
            ReplayOutcome::Accepted { server_key }
        }
        SchemeId::Zhang => {
            let m1 = try_step!(ZhangM1::decode(&m1_bytes, curve));
            let (_, sstate) =
                try_step!(zhang::server_challenge(&m1, &env.keys, &env.realm, r_s, &sc));
            let m3 = try_step!(ZhangM3::decode(&m3_bytes));
            let server_key =
                try_step!(zhang::server_verify(&m3, &sstate, &env.db.zhang, &env.keys, &sc));
            ReplayOutcome::Accepted { server_key }
        }
        SchemeId::Enhanced => {
            let m1 = try_step!(EnhancedM1::decode(&m1_bytes, curve));
            let now = clock.now();
            let (_, sstate) = try_step!(enhanced::server_respond(
                &m1,
                &mut env.db.enhanced,
                &env.keys,
                now,
                now,
                r_s,
                &sc
            ));
            let m3 = try_step!(KeyConfirm::decode(&m3_bytes));
            let server_key = try_step!(enhanced::server_confirm(&m3, &sstate, &sc));
            ReplayOutcome::Accepted { server_key }
        }
    }
}
