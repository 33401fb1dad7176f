//! Line-oriented capture log for sessions.
//!
//! One file holds the public parameters in a header line plus any number
//! of sessions, one frame per line:
//!
//! ```text
//! # handshake-log scheme=zhang curve=TOY-17 window_ms=5000 server_pub=<hex> realm=<hex>
//! 1 U>S <frame hex>
//! 1 S>U <frame hex>
//! 1 U>S <frame hex>
//! 2 U>S <frame hex>
//! ```
//!
//! Session ids are monotonic within the file. The header pins everything a
//! later reader needs to rebuild an attackable transcript except the curve
//! parameters themselves, which the reader resolves from the recorded
//! profile name.

use super::frame::Frame;
use super::session::{Direction, ServerEnv, SessionConfig};
use crate::adversary::{LeakedEphemerals, SessionTranscript};
use crate::ecc::CurveParams;
use crate::prims::{decode_point, encode_point};
use crate::schemes::SchemeId;
use std::fs;
use std::io;
use std::path::Path;

const HEADER_TAG: &str = "# handshake-log";

/// The public parameters a log file pins in its header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogMeta {
    pub scheme: SchemeId,
    pub curve_name: String,
    pub window_ms: u64,
    /// Encoded server public point.
    pub server_public: Vec<u8>,
    pub realm: Vec<u8>,
}

impl LogMeta {
    pub fn for_env(scheme: SchemeId, cfg: &SessionConfig, env: &ServerEnv) -> Self {
        LogMeta {
            scheme,
            curve_name: cfg.curve.profile_name.clone(),
            window_ms: cfg.window_ms,
            server_public: encode_point(env.keys.public(), &cfg.curve),
            realm: env.realm.clone(),
        }
    }

    fn header_line(&self) -> String {
        format!(
            "{HEADER_TAG} scheme={} curve={} window_ms={} server_pub={} realm={}",
            self.scheme,
            self.curve_name,
            self.window_ms,
            hex::encode(&self.server_public),
            hex::encode(&self.realm)
        )
    }

    fn parse_header(line: &str) -> io::Result<Self> {
        let rest = line
            .strip_prefix(HEADER_TAG)
            .ok_or_else(|| bad_data("missing log header"))?;
        let mut scheme = None;
        let mut curve_name = None;
        let mut window_ms = None;
        let mut server_public = None;
        let mut realm = None;
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad_data(format!("bad header field: {field}")))?;
            match key {
                "scheme" => {
                    scheme = Some(
                        SchemeId::parse(value)
                            .ok_or_else(|| bad_data(format!("unknown scheme {value}")))?,
                    )
                }
                "curve" => curve_name = Some(value.to_string()),
                "window_ms" => {
                    window_ms =
                        Some(value.parse().map_err(|e| bad_data(format!("window_ms: {e}")))?)
                }
                "server_pub" => {
                    server_public =
                        Some(hex::decode(value).map_err(|e| bad_data(format!("server_pub: {e}")))?)
                }
                "realm" => {
                    realm = Some(hex::decode(value).map_err(|e| bad_data(format!("realm: {e}")))?)
                }
                other => return Err(bad_data(format!("unknown header field {other}"))),
            }
        }
        Ok(LogMeta {
            scheme: scheme.ok_or_else(|| bad_data("header missing scheme"))?,
            curve_name: curve_name.ok_or_else(|| bad_data("header missing curve"))?,
            window_ms: window_ms.ok_or_else(|| bad_data("header missing window_ms"))?,
            server_public: server_public.ok_or_else(|| bad_data("header missing server_pub"))?,
            realm: realm.ok_or_else(|| bad_data("header missing realm"))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoggedSession {
    pub id: u64,
    pub frames: Vec<(Direction, Frame)>,
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Appends one session's frames under the next session id. Creates the
/// file with a header on first use; afterwards the header must match.
pub fn append_session(
    path: &Path,
    meta: &LogMeta,
    frames: &[(Direction, Frame)],
) -> io::Result<u64> {
    let (existing_meta, sessions) = match fs::metadata(path) {
        Ok(_) => {
            let (m, s) = read_log(path)?;
            (Some(m), s)
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => (None, Vec::new()),
        Err(e) => return Err(e),
    };
    if let Some(existing) = existing_meta {
        if existing != *meta {
            return Err(bad_data(
                "log file was started under different parameters; use a fresh path",
            ));
        }
    }
    let next_id = sessions.iter().map(|s| s.id).max().unwrap_or(0) + 1;

    let mut out = String::new();
    if sessions.is_empty() {
        out.push_str(&meta.header_line());
        out.push('\n');
    }
    for (direction, frame) in frames {
        out.push_str(&format!("{next_id} {} {}\n", direction.label(), hex::encode(frame.encode())));
    }

    use std::io::Write;
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(out.as_bytes())?;
    Ok(next_id)
}

/// Reads the whole log back: header plus sessions grouped by id, in file
/// order.
pub fn read_log(path: &Path) -> io::Result<(LogMeta, Vec<LoggedSession>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad_data("empty log file"))?;
    let meta = LogMeta::parse_header(header)?;

    let mut sessions: Vec<LoggedSession> = Vec::new();
    for line in lines {
        let mut parts = line.splitn(3, ' ');
        let (id, dir, frame_hex) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(bad_data(format!("bad log line: {line}"))),
        };
        let id: u64 = id.parse().map_err(|e| bad_data(format!("session id: {e}")))?;
        let direction =
            Direction::parse(dir).ok_or_else(|| bad_data(format!("bad direction {dir}")))?;
        let bytes = hex::decode(frame_hex).map_err(|e| bad_data(format!("frame hex: {e}")))?;
        let frame = Frame::decode(&bytes).map_err(|e| bad_data(e.to_string()))?;
        match sessions.last_mut() {
            Some(s) if s.id == id => s.frames.push((direction, frame)),
            _ => sessions.push(LoggedSession { id, frames: vec![(direction, frame)] }),
        }
    }
    Ok((meta, sessions))
}

/// Rebuilds an attackable transcript from one logged session. The caller
/// resolves the curve named in the header and supplies whatever ephemerals
/// leaked.
pub fn to_transcript(
    meta: &LogMeta,
    session: &LoggedSession,
    curve: &CurveParams,
    leaked: LeakedEphemerals,
) -> io::Result<SessionTranscript> {
    if curve.profile_name != meta.curve_name {
        return Err(bad_data(format!(
            "log was recorded on curve {}, given {}",
            meta.curve_name, curve.profile_name
        )));
    }
    let server_public =
        decode_point(&meta.server_public, curve).map_err(|e| bad_data(e.to_string()))?;
    let payload = |idx: u8| {
        session
            .frames
            .iter()
            .find(|(_, f)| f.msg_index == idx)
            .map(|(_, f)| f.payload.clone())
            .ok_or_else(|| bad_data(format!("session {} has no message {idx}", session.id)))
    };
    Ok(SessionTranscript {
        scheme: meta.scheme,
        curve: curve.clone(),
        server_public,
        realm: meta.realm.clone(),
        m1: payload(1)?,
        m2: payload(2)?,
        m3: payload(3)?,
        leaked,
    })
}
