//! Hardened variant of the timestamped scheme: ephemeral-leakage-resistant
//! login and a credential-free registration database.
//!
//! Two changes drive both properties. First, login blinds the credential
//! hash h(id || pw) instead of the identity hash, so a leaked login
//! ephemeral reduces an offline attacker to guessing identity and password
//! jointly. Second, the database indexes records by h(h(id || pw) || 0x01)
//! and stores the identity hash only under a per-user blinding salt, so the
//! file never contains the identity, the password, or h(id) in the clear.
//!
//! The user keeps the identity hash computed at registration (the
//! `EnhancedEnrollment`); login reuses it rather than recomputing it.

use super::{
    Credentials, Ctx, KeyConfirm, ProtocolError, ReplayCache, ServerChallenge, ServerKeys,
    SessionKey,
};
use crate::ecc::{CurveParams, Point, Scalar};
use crate::prims::{
    decode_point, encode_scalar, put_var, xor, Digest, Reader, Timestamp, DIGEST_LEN,
    INDEX_SUFFIX,
};
use std::collections::BTreeMap;

/// Server-side registration record.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnhancedRecord {
    /// h(h(id || pw) || 0x01): the lookup key.
    pub index_key: Digest,
    /// h(id) XOR h(server key || salt) XOR h(id || pw).
    pub blinded_verifier: Vec<u8>,
    /// Per-user blinding salt drawn by the server at registration.
    pub blind_salt: Scalar,
}

#[derive(Debug, Default, Clone)]
pub struct EnhancedDb {
    records: BTreeMap<Digest, EnhancedRecord>,
    pub replay: ReplayCache,
}

impl EnhancedDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: EnhancedRecord) -> Result<(), ProtocolError> {
        if self.records.contains_key(&record.index_key) {
            return Err(ProtocolError::DuplicateUser);
        }
        self.records.insert(record.index_key, record);
        Ok(())
    }

    pub fn get(&self, index_key: &Digest) -> Option<&EnhancedRecord> {
        self.records.get(index_key)
    }

    pub fn records(&self) -> impl Iterator<Item = &EnhancedRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// What the user walks away from registration with: the identity hash it
/// sent, reused at every login instead of being recomputed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnhancedEnrollment {
    pub id_hash: Digest,
}

/// First message: ephemeral point, blinded credential hash, authenticator,
/// and the user's timestamp. The identity hash is never transmitted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnhancedM1 {
    pub user_point: Point,
    pub masked_cred: Vec<u8>,
    pub user_auth: Digest,
    pub user_ts: Timestamp,
}

impl EnhancedM1 {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = crate::prims::encode_point(&self.user_point, curve);
        put_var(&mut out, &self.masked_cred);
        out.extend_from_slice(self.user_auth.as_bytes());
        out.extend_from_slice(&self.user_ts.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let point = r.take(1 + 2 * curve.coord_width()).map_err(ProtocolError::Malformed)?;
        let user_point = decode_point(point, curve)?;
        let masked_cred = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
        let auth = r.take(DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let user_auth = Digest::from_slice(auth).expect("fixed digest width");
        let user_ts = r.take_timestamp().map_err(ProtocolError::Malformed)?;
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(EnhancedM1 { user_point, masked_cred, user_auth, user_ts })
    }
}

pub struct EnhancedUserState {
    ephemeral: Scalar,
    static_dh: Point,
    cred_hash: Digest,
    id_hash: Digest,
    user_auth: Digest,
    user_ts: Timestamp,
}

#[derive(Debug)]
pub struct EnhancedServerState {
    session_key: SessionKey,
    user_auth: Digest,
    server_auth: Digest,
    user_ts: Timestamp,
    server_ts: Timestamp,
}

/// Registers the user: the registration request carries h(id) and
/// h(id || pw); the server draws a per-user salt, blinds the identity hash,
/// and indexes the record by h(h(id || pw) || 0x01). Returns the record and
/// the enrollment artifact the user retains.
pub fn register(
    creds: &Credentials,
    server: &ServerKeys,
    blind_salt: Scalar,
    db: &mut EnhancedDb,
    ctx: &Ctx,
) -> Result<(EnhancedRecord, EnhancedEnrollment), ProtocolError> {
    let id_hash = ctx.hash(&[creds.id()]);
    let cred_hash = ctx.hash(&[creds.id(), creds.pw()]);
    let index_key = ctx.hash(&[cred_hash.as_bytes(), &INDEX_SUFFIX]);
    let salt_blind = ctx.hash(&[
        &encode_scalar(server.private(), ctx.curve),
        &encode_scalar(&blind_salt, ctx.curve),
    ]);
    let blinded_verifier = xor(
        &xor(id_hash.as_bytes(), salt_blind.as_bytes()),
        cred_hash.as_bytes(),
    );
    let record = EnhancedRecord { index_key, blinded_verifier, blind_salt };
    db.insert(record.clone())?;
    Ok((record, EnhancedEnrollment { id_hash }))
}

/// Builds m1: the credential hash blinded under h(static DH point), plus a
/// timestamped authenticator over it.
pub fn user_start(
    creds: &Credentials,
    enrollment: &EnhancedEnrollment,
    server_public: &Point,
    user_ts: Timestamp,
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(EnhancedM1, EnhancedUserState), ProtocolError> {
    assert!(!ephemeral.is_zero(), "login ephemeral must be nonzero");
    let user_point = ctx.mul_base(&ephemeral)?;
    let static_dh = ctx.mul(&ephemeral, server_public)?;
    let cred_hash = ctx.hash(&[creds.id(), creds.pw()]);
    let dh_mask = ctx.hash(&[&ctx.point_bytes(&static_dh)]);
    let masked_cred = xor(cred_hash.as_bytes(), dh_mask.as_bytes());
    let user_auth = ctx.hash(&[
        cred_hash.as_bytes(),
        &ctx.point_bytes(&static_dh),
        &user_ts.to_be_bytes(),
    ]);
    let m1 = EnhancedM1 { user_point, masked_cred, user_auth, user_ts };
    let state = EnhancedUserState {
        ephemeral,
        static_dh,
        cred_hash,
        id_hash: enrollment.id_hash,
        user_auth,
        user_ts,
    };
    Ok((m1, state))
}

/// Processes m1. The authenticator depends only on values recoverable from
/// the message, so it is checked *before* the database lookup; a failure
/// therefore cannot reveal whether the user exists.
pub fn server_respond(
    m1: &EnhancedM1,
    db: &mut EnhancedDb,
    server: &ServerKeys,
    now: Timestamp,
    server_ts: Timestamp,
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(ServerChallenge, EnhancedServerState), ProtocolError> {
    if !ctx.fresh(m1.user_ts, now) {
        return Err(ProtocolError::StaleTimestamp);
    }
    if m1.user_point.is_infinity() || !ctx.curve.is_on_curve(&m1.user_point) {
        return Err(ProtocolError::InvalidPoint);
    }
    if m1.masked_cred.len() != DIGEST_LEN {
        return Err(ProtocolError::Malformed("blinded credential has wrong width".into()));
    }
    let static_dh = ctx.mul(server.private(), &m1.user_point)?;
    let dh_mask = ctx.hash(&[&ctx.point_bytes(&static_dh)]);
    let cred_hash = Digest::from_slice(&xor(&m1.masked_cred, dh_mask.as_bytes()))
        .expect("xor of two digest-width strings");
    let expected_auth = ctx.hash(&[
        cred_hash.as_bytes(),
        &ctx.point_bytes(&static_dh),
        &m1.user_ts.to_be_bytes(),
    ]);
    if expected_auth != m1.user_auth {
        return Err(ProtocolError::AuthFailure);
    }
    let index_key = ctx.hash(&[cred_hash.as_bytes(), &INDEX_SUFFIX]);
    let record = db.get(&index_key).cloned().ok_or(ProtocolError::UnknownUser)?;
    let salt_blind = ctx.hash(&[
        &encode_scalar(server.private(), ctx.curve),
        &encode_scalar(&record.blind_salt, ctx.curve),
    ]);
    let id_hash = Digest::from_slice(&xor(
        &xor(&record.blinded_verifier, salt_blind.as_bytes()),
        cred_hash.as_bytes(),
    ))
    .expect("xor of digest-width strings");
    let point_bytes = ctx.point_bytes(&m1.user_point);
    if !db.replay.check_and_record(&point_bytes, m1.user_ts, now, ctx.window_ms) {
        return Err(ProtocolError::ReplayDetected);
    }
    let server_point = ctx.mul_base(&ephemeral)?;
    let ephemeral_dh = ctx.mul(&ephemeral, &m1.user_point)?;
    let server_auth = ctx.hash(&[
        id_hash.as_bytes(),
        cred_hash.as_bytes(),
        &ctx.point_bytes(&server_point),
        &ctx.point_bytes(&ephemeral_dh),
        &server_ts.to_be_bytes(),
    ]);
    let session_key = SessionKey::from_digest(ctx.hash(&[
        &ctx.point_bytes(&static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        cred_hash.as_bytes(),
        id_hash.as_bytes(),
    ]));
    let m2 = ServerChallenge { server_point, server_auth, server_ts };
    let state = EnhancedServerState {
        session_key,
        user_auth: m1.user_auth,
        server_auth,
        user_ts: m1.user_ts,
        server_ts,
    };
    Ok((m2, state))
}

/// Verifies the server challenge, derives the session key, and builds the
/// confirmation, which binds both timestamps.
pub fn user_finish(
    m2: &ServerChallenge,
    state: &EnhancedUserState,
    now: Timestamp,
    ctx: &Ctx,
) -> Result<(KeyConfirm, SessionKey), ProtocolError> {
    if !ctx.fresh(m2.server_ts, now) {
        return Err(ProtocolError::StaleTimestamp);
    }
    if m2.server_point.is_infinity() || !ctx.curve.is_on_curve(&m2.server_point) {
        return Err(ProtocolError::InvalidPoint);
    }
    let ephemeral_dh = ctx.mul(&state.ephemeral, &m2.server_point)?;
    let expected_auth = ctx.hash(&[
        state.id_hash.as_bytes(),
        state.cred_hash.as_bytes(),
        &ctx.point_bytes(&m2.server_point),
        &ctx.point_bytes(&ephemeral_dh),
        &m2.server_ts.to_be_bytes(),
    ]);
    if expected_auth != m2.server_auth {
        return Err(ProtocolError::AuthFailure);
    }
    let session_key = SessionKey::from_digest(ctx.hash(&[
        &ctx.point_bytes(&state.static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        state.cred_hash.as_bytes(),
        state.id_hash.as_bytes(),
    ]));
    let confirm = ctx.hash(&[
        state.user_auth.as_bytes(),
        m2.server_auth.as_bytes(),
        session_key.digest().as_bytes(),
        &state.user_ts.to_be_bytes(),
        &m2.server_ts.to_be_bytes(),
    ]);
    Ok((KeyConfirm { confirm }, session_key))
}

/// Final server-side check of the confirmation and its timestamp binding.
pub fn server_confirm(
    m3: &KeyConfirm,
    state: &EnhancedServerState,
    ctx: &Ctx,
) -> Result<SessionKey, ProtocolError> {
    let expected = ctx.hash(&[
        state.user_auth.as_bytes(),
        state.server_auth.as_bytes(),
        state.session_key.digest().as_bytes(),
        &state.user_ts.to_be_bytes(),
        &state.server_ts.to_be_bytes(),
    ]);
    if expected != m3.confirm {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(state.session_key)
}
