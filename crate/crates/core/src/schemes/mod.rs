//! The three authentication and key-establishment schemes as pure step
//! functions, plus the protocol vocabulary they share: credentials, server
//! keys, errors, session keys, the per-party instrumented context, and the
//! replay cache used by the timestamped schemes.
//!
//! Step functions never touch a clock or an RNG themselves; timestamps and
//! ephemeral scalars are arguments, which keeps every run replayable.

pub mod enhanced;
pub mod sureshkumar;
pub mod zhang;

use crate::ecc::{random_scalar, CurveParams, EccError, Point, Scalar};
use crate::prims::{
    check_freshness, encode_point, hash, Digest, Reader, Tally, Timestamp,
};
use rand::Rng;
use std::collections::HashSet;
use std::fmt;

/// Wire identifiers for the implemented schemes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SchemeId {
    Sureshkumar,
    Zhang,
    Enhanced,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::Sureshkumar, SchemeId::Zhang, SchemeId::Enhanced];

    pub fn wire_id(self) -> u8 {
        match self {
            SchemeId::Sureshkumar => 1,
            SchemeId::Zhang => 2,
            SchemeId::Enhanced => 3,
        }
    }

    pub fn from_wire_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(SchemeId::Sureshkumar),
            2 => Some(SchemeId::Zhang),
            3 => Some(SchemeId::Enhanced),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Sureshkumar => "sureshkumar",
            SchemeId::Zhang => "zhang",
            SchemeId::Enhanced => "enhanced",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sureshkumar" => Some(SchemeId::Sureshkumar),
            "zhang" => Some(SchemeId::Zhang),
            "enhanced" => Some(SchemeId::Enhanced),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that can go wrong during registration or a handshake.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("timestamp outside the freshness window")]
    StaleTimestamp,
    #[error("no registration record for this user")]
    UnknownUser,
    #[error("authentication value mismatch")]
    AuthFailure,
    #[error("login message replayed inside the freshness window")]
    ReplayDetected,
    #[error("user is already registered")]
    DuplicateUser,
    #[error("received point is invalid for this protocol")]
    InvalidPoint,
    #[error("invalid credentials: {0}")]
    InvalidCredentials(&'static str),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("peer closed the channel before the handshake finished")]
    TransportClosed,
}

impl ProtocolError {
    /// One-byte code used in wire error frames.
    pub fn wire_code(&self) -> u8 {
        match self {
            ProtocolError::StaleTimestamp => 1,
            ProtocolError::UnknownUser => 2,
            ProtocolError::AuthFailure => 3,
            ProtocolError::ReplayDetected => 4,
            ProtocolError::DuplicateUser => 5,
            ProtocolError::InvalidPoint => 6,
            ProtocolError::InvalidCredentials(_) => 7,
            ProtocolError::Malformed(_) => 8,
            ProtocolError::TransportClosed => 9,
        }
    }

    pub fn from_wire_code(code: u8) -> Self {
        match code {
            1 => ProtocolError::StaleTimestamp,
            2 => ProtocolError::UnknownUser,
            3 => ProtocolError::AuthFailure,
            4 => ProtocolError::ReplayDetected,
            5 => ProtocolError::DuplicateUser,
            6 => ProtocolError::InvalidPoint,
            7 => ProtocolError::InvalidCredentials("rejected by peer"),
            9 => ProtocolError::TransportClosed,
            _ => ProtocolError::Malformed(format!("peer error code {code}")),
        }
    }
}

impl From<EccError> for ProtocolError {
    fn from(e: EccError) -> Self {
        match e {
            EccError::PointNotOnCurve(_) | EccError::InvalidEncoding(_) => {
                ProtocolError::InvalidPoint
            }
            other => ProtocolError::Malformed(other.to_string()),
        }
    }
}

/// A user's long-term identity and password, both non-empty byte strings.
/// Identities must not end in a zero byte: zero is the XOR padding byte, so
/// a trailing zero could not survive the unblinding on the server side.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Credentials {
    id: Vec<u8>,
    pw: Vec<u8>,
}

impl Credentials {
    pub fn new(id: impl Into<Vec<u8>>, pw: impl Into<Vec<u8>>) -> Result<Self, ProtocolError> {
        let id = id.into();
        let pw = pw.into();
        if id.is_empty() {
            return Err(ProtocolError::InvalidCredentials("identity must be non-empty"));
        }
        if pw.is_empty() {
            return Err(ProtocolError::InvalidCredentials("password must be non-empty"));
        }
        if id.last() == Some(&0) {
            return Err(ProtocolError::InvalidCredentials(
                "identity must not end in a zero byte",
            ));
        }
        Ok(Credentials { id, pw })
    }

    pub fn id(&self) -> &[u8] {
        &self.id
    }

    pub fn pw(&self) -> &[u8] {
        &self.pw
    }
}

/// The server's static key pair: private scalar and published point.
#[derive(Clone, Debug)]
pub struct ServerKeys {
    private: Scalar,
    public: Point,
}

impl ServerKeys {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, curve: &CurveParams) -> Self {
        let private = random_scalar(rng, curve);
        let public = curve
            .scalar_mult(&private, &curve.base)
            .expect("base point is on the curve");
        ServerKeys { private, public }
    }

    pub fn from_private(private: Scalar, curve: &CurveParams) -> Result<Self, ProtocolError> {
        if private.is_zero() {
            return Err(ProtocolError::InvalidCredentials("server key must be nonzero"));
        }
        let public = curve.scalar_mult(&private, &curve.base)?;
        Ok(ServerKeys { private, public })
    }

    pub fn private(&self) -> &Scalar {
        &self.private
    }

    pub fn public(&self) -> &Point {
        &self.public
    }
}

/// The established session key, a digest of the scheme's key material.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SessionKey(Digest);

impl SessionKey {
    pub fn from_digest(d: Digest) -> Self {
        SessionKey(d)
    }

    pub fn digest(&self) -> &Digest {
        &self.0
    }

    /// Short printable commitment to the key: the first eight bytes of its
    /// hash, hex-encoded. Safe to log, unlike the key itself.
    pub fn fingerprint(&self) -> String {
        hex::encode(&hash(&[self.0.as_bytes()]).as_bytes()[..8])
    }
}

/// Per-party execution context: curve, freshness window, and the operation
/// tally everything expensive is routed through.
pub struct Ctx<'a> {
    pub curve: &'a CurveParams,
    pub window_ms: u64,
    tally: &'a Tally,
}

impl<'a> Ctx<'a> {
    pub fn new(curve: &'a CurveParams, window_ms: u64, tally: &'a Tally) -> Self {
        Ctx { curve, window_ms, tally }
    }

    /// Counted hash invocation.
    pub fn hash(&self, parts: &[&[u8]]) -> Digest {
        self.tally.bump_hash();
        hash(parts)
    }

    /// Counted scalar multiplication.
    pub fn mul(&self, k: &Scalar, p: &Point) -> Result<Point, ProtocolError> {
        self.tally.bump_point_mult();
        Ok(self.curve.scalar_mult(k, p)?)
    }

    /// Counted multiplication of the curve's base point.
    pub fn mul_base(&self, k: &Scalar) -> Result<Point, ProtocolError> {
        let base = self.curve.base.clone();
        self.mul(k, &base)
    }

    pub fn fresh(&self, t_received: Timestamp, t_now: Timestamp) -> bool {
        check_freshness(t_received, t_now, self.window_ms)
    }

    pub fn point_bytes(&self, p: &Point) -> Vec<u8> {
        encode_point(p, self.curve)
    }
}

/// Cache of (ephemeral point, timestamp) pairs already accepted inside the
/// freshness window. A second arrival of the same pair is a replay; entries
/// fall out of the cache once the window has moved past them, because the
/// timestamp check alone rejects them from then on.
#[derive(Debug, Default, Clone)]
pub struct ReplayCache {
    seen: HashSet<(Vec<u8>, u64)>,
}

impl ReplayCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false - and leaves the cache unchanged - if the pair was
    /// already recorded; otherwise records it and prunes expired entries.
    pub fn check_and_record(
        &mut self,
        point_bytes: &[u8],
        t_received: Timestamp,
        t_now: Timestamp,
        window_ms: u64,
    ) -> bool {
        self.seen.retain(|(_, t)| t_now.millis().abs_diff(*t) <= window_ms);
        self.seen.insert((point_bytes.to_vec(), t_received.millis()))
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Second message of the timestamped schemes: the server's ephemeral point,
/// its authenticator, and its timestamp.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ServerChallenge {
    pub server_point: Point,
    pub server_auth: Digest,
    pub server_ts: Timestamp,
}

impl ServerChallenge {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = encode_point(&self.server_point, curve);
        out.extend_from_slice(self.server_auth.as_bytes());
        out.extend_from_slice(&self.server_ts.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let point = r.take(1 + 2 * curve.coord_width()).map_err(ProtocolError::Malformed)?;
        let server_point = crate::prims::decode_point(point, curve)?;
        let auth = r.take(crate::prims::DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let server_auth = Digest::from_slice(auth).expect("fixed digest width");
        let server_ts = r.take_timestamp().map_err(ProtocolError::Malformed)?;
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(ServerChallenge { server_point, server_auth, server_ts })
    }
}

/// Third message of the timestamped schemes: the user's key confirmation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KeyConfirm {
    pub confirm: Digest,
}

impl KeyConfirm {
    pub fn encode(&self) -> Vec<u8> {
        self.confirm.to_vec()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let confirm = r.take(crate::prims::DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let confirm = Digest::from_slice(confirm).expect("fixed digest width");
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(KeyConfirm { confirm })
    }
}
