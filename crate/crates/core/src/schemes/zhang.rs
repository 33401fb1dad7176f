//! Nonce-only ECDH login scheme with a realm challenge.
//!
//! No message carries a timestamp: liveness rests entirely on the ephemeral
//! points. Registration stores a verifier blinded under the server key,
//! indexed by the plaintext identity; login blinds the identity under a
//! hash of both DH points, and the server defers the lookup until the final
//! message, when it can unblind the identity itself.

use super::{Credentials, Ctx, ProtocolError, ServerKeys, SessionKey};
use crate::ecc::{CurveParams, Point, Scalar};
use crate::prims::{
    decode_point, encode_point, encode_scalar, put_var, strip_padding, xor, Digest, Reader,
    DIGEST_LEN,
};
use std::collections::BTreeMap;

/// Server-side registration record, indexed by the plaintext identity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZhangRecord {
    pub user_id: Vec<u8>,
    /// h(id || server key) XOR h(id || pw).
    pub blinded_verifier: Vec<u8>,
}

#[derive(Debug, Default, Clone)]
pub struct ZhangDb {
    records: BTreeMap<Vec<u8>, ZhangRecord>,
}

impl ZhangDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ZhangRecord) -> Result<(), ProtocolError> {
        if self.records.contains_key(&record.user_id) {
            return Err(ProtocolError::DuplicateUser);
        }
        self.records.insert(record.user_id.clone(), record);
        Ok(())
    }

    pub fn get(&self, user_id: &[u8]) -> Option<&ZhangRecord> {
        self.records.get(user_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ZhangRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// First message: blinded identity and the user's ephemeral point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZhangM1 {
    pub masked_id: Vec<u8>,
    pub user_point: Point,
}

impl ZhangM1 {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = Vec::new();
        put_var(&mut out, &self.masked_id);
        out.extend_from_slice(&encode_point(&self.user_point, curve));
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let masked_id = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
        let point = r.take(1 + 2 * curve.coord_width()).map_err(ProtocolError::Malformed)?;
        let user_point = decode_point(point, curve)?;
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(ZhangM1 { masked_id, user_point })
    }
}

/// Second message: the server's realm, ephemeral point, and authenticator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZhangM2 {
    pub realm: Vec<u8>,
    pub server_point: Point,
    pub server_auth: Digest,
}

impl ZhangM2 {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = Vec::new();
        put_var(&mut out, &self.realm);
        out.extend_from_slice(&encode_point(&self.server_point, curve));
        out.extend_from_slice(self.server_auth.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let realm = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
        let point = r.take(1 + 2 * curve.coord_width()).map_err(ProtocolError::Malformed)?;
        let server_point = decode_point(point, curve)?;
        let auth = r.take(DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let server_auth = Digest::from_slice(auth).expect("fixed digest width");
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(ZhangM2 { realm, server_point, server_auth })
    }
}

/// Third message: the echoed realm and the user's authenticator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZhangM3 {
    pub realm: Vec<u8>,
    pub user_auth: Digest,
}

impl ZhangM3 {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_var(&mut out, &self.realm);
        out.extend_from_slice(self.user_auth.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let realm = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
        let auth = r.take(DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let user_auth = Digest::from_slice(auth).expect("fixed digest width");
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(ZhangM3 { realm, user_auth })
    }
}

pub struct ZhangUserState {
    creds: Credentials,
    ephemeral: Scalar,
    static_dh: Point,
    user_point: Point,
}

#[derive(Debug)]
pub struct ZhangServerState {
    static_dh: Point,
    ephemeral_dh: Point,
    server_point: Point,
    user_point: Point,
    masked_id: Vec<u8>,
    realm: Vec<u8>,
}

/// Registers the user. The identity travels in the clear to the server
/// during this phase (a private channel is assumed) and is stored verbatim
/// as the lookup key.
pub fn register(
    creds: &Credentials,
    server: &ServerKeys,
    db: &mut ZhangDb,
    ctx: &Ctx,
) -> Result<ZhangRecord, ProtocolError> {
    let key_blind = ctx.hash(&[creds.id(), &encode_scalar(server.private(), ctx.curve)]);
    let cred_hash = ctx.hash(&[creds.id(), creds.pw()]);
    let record = ZhangRecord {
        user_id: creds.id().to_vec(),
        blinded_verifier: xor(key_blind.as_bytes(), cred_hash.as_bytes()),
    };
    db.insert(record.clone())?;
    Ok(record)
}

/// Builds m1: the identity blinded under h(user point || static DH point).
pub fn user_start(
    creds: &Credentials,
    server_public: &Point,
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(ZhangM1, ZhangUserState), ProtocolError> {
    assert!(!ephemeral.is_zero(), "login ephemeral must be nonzero");
    let user_point = ctx.mul_base(&ephemeral)?;
    let static_dh = ctx.mul(&ephemeral, server_public)?;
    let mask = ctx.hash(&[&ctx.point_bytes(&user_point), &ctx.point_bytes(&static_dh)]);
    let masked_id = xor(creds.id(), mask.as_bytes());
    let m1 = ZhangM1 { masked_id, user_point: user_point.clone() };
    let state = ZhangUserState { creds: creds.clone(), ephemeral, static_dh, user_point };
    Ok((m1, state))
}

/// Answers m1 with the realm challenge. The identity lookup is deferred to
/// `server_verify`; only the point itself is validated here.
pub fn server_challenge(
    m1: &ZhangM1,
    server: &ServerKeys,
    realm: &[u8],
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(ZhangM2, ZhangServerState), ProtocolError> {
    if m1.user_point.is_infinity() || !ctx.curve.is_on_curve(&m1.user_point) {
        return Err(ProtocolError::InvalidPoint);
    }
    let static_dh = ctx.mul(server.private(), &m1.user_point)?;
    let server_point = ctx.mul_base(&ephemeral)?;
    let ephemeral_dh = ctx.mul(&ephemeral, &m1.user_point)?;
    let server_auth = ctx.hash(&[
        &ctx.point_bytes(&static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        &ctx.point_bytes(&server_point),
        &ctx.point_bytes(&m1.user_point),
    ]);
    let m2 = ZhangM2 { realm: realm.to_vec(), server_point: server_point.clone(), server_auth };
    let state = ZhangServerState {
        static_dh,
        ephemeral_dh,
        server_point,
        user_point: m1.user_point.clone(),
        masked_id: m1.masked_id.clone(),
        realm: realm.to_vec(),
    };
    Ok((m2, state))
}

/// Verifies the server authenticator, derives the session key, and answers
/// the realm challenge.
pub fn user_finish(
    m2: &ZhangM2,
    state: &ZhangUserState,
    ctx: &Ctx,
) -> Result<(ZhangM3, SessionKey), ProtocolError> {
    if m2.server_point.is_infinity() || !ctx.curve.is_on_curve(&m2.server_point) {
        return Err(ProtocolError::InvalidPoint);
    }
    let ephemeral_dh = ctx.mul(&state.ephemeral, &m2.server_point)?;
    let expected_auth = ctx.hash(&[
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        &ctx.point_bytes(&m2.server_point),
        &ctx.point_bytes(&state.user_point),
    ]);
    if expected_auth != m2.server_auth {
        return Err(ProtocolError::AuthFailure);
    }
    let session_key = SessionKey::from_digest(ctx.hash(&[
        state.creds.id(),
        &ctx.point_bytes(&ephemeral_dh),
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&state.user_point),
        &ctx.point_bytes(&m2.server_point),
    ]));
    let cred_hash = ctx.hash(&[state.creds.id(), state.creds.pw()]);
    let user_auth = ctx.hash(&[
        &m2.realm,
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        &ctx.point_bytes(&m2.server_point),
        &ctx.point_bytes(&state.user_point),
        cred_hash.as_bytes(),
    ]);
    let m3 = ZhangM3 { realm: m2.realm.clone(), user_auth };
    Ok((m3, session_key))
}

/// Unblinds the identity, checks the echoed realm and the user
/// authenticator, and derives the session key.
pub fn server_verify(
    m3: &ZhangM3,
    state: &ZhangServerState,
    db: &ZhangDb,
    server: &ServerKeys,
    ctx: &Ctx,
) -> Result<SessionKey, ProtocolError> {
    // The realm the user answered must be the realm this server issued.
    if m3.realm != state.realm {
        return Err(ProtocolError::AuthFailure);
    }
    let mask = ctx.hash(&[
        &ctx.point_bytes(&state.user_point),
        &ctx.point_bytes(&state.static_dh),
    ]);
    let unblinded = xor(&state.masked_id, mask.as_bytes());
    // The XOR convention zero-pads identities shorter than a digest.
    let user_id = strip_padding(&unblinded);
    let record = db.get(user_id).ok_or(ProtocolError::UnknownUser)?;
    let key_blind = ctx.hash(&[user_id, &encode_scalar(server.private(), ctx.curve)]);
    let cred_hash = xor(&record.blinded_verifier, key_blind.as_bytes());
    let expected_auth = ctx.hash(&[
        &state.realm,
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&state.ephemeral_dh),
        &ctx.point_bytes(&state.server_point),
        &ctx.point_bytes(&state.user_point),
        &cred_hash,
    ]);
    if expected_auth != m3.user_auth {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(SessionKey::from_digest(ctx.hash(&[
        user_id,
        &ctx.point_bytes(&state.ephemeral_dh),
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&state.user_point),
        &ctx.point_bytes(&state.server_point),
    ])))
}
