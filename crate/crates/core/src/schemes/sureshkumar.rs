//! Timestamped ECDH login scheme with a hashed-identity index.
//!
//! Registration stores a verifier blinded under the server's static key,
//! indexed by the hash of the identity. Login is three messages: the user
//! blinds their identity hash under a static DH mask and authenticates with
//! a timestamped hash; the server answers with its own ephemeral point and
//! authenticator; the user confirms the derived key.

use super::{
    Credentials, Ctx, KeyConfirm, ProtocolError, ReplayCache, ServerChallenge, ServerKeys,
    SessionKey,
};
use crate::ecc::{Point, Scalar};
use crate::prims::{
    decode_point, encode_scalar, put_var, xor, Digest, Reader, Timestamp, DIGEST_LEN,
};
use std::collections::BTreeMap;

/// Server-side registration record, indexed by the identity hash.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SureshRecord {
    /// h(id): the lookup key.
    pub id_hash: Digest,
    /// h(id || pw) blinded under h(id_hash || server private key).
    pub blinded_verifier: Vec<u8>,
    /// id XOR pw, kept because registration stores it; login never reads it.
    pub id_pw_mask: Vec<u8>,
}

/// Registration table plus the replay cache for accepted login points.
#[derive(Debug, Default, Clone)]
pub struct SureshDb {
    records: BTreeMap<Digest, SureshRecord>,
    pub replay: ReplayCache,
}

impl SureshDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: SureshRecord) -> Result<(), ProtocolError> {
        if self.records.contains_key(&record.id_hash) {
            return Err(ProtocolError::DuplicateUser);
        }
        self.records.insert(record.id_hash, record);
        Ok(())
    }

    pub fn get(&self, id_hash: &Digest) -> Option<&SureshRecord> {
        self.records.get(id_hash)
    }

    pub fn records(&self) -> impl Iterator<Item = &SureshRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// First message: ephemeral point, blinded identity hash, authenticator,
/// and the user's timestamp.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SureshM1 {
    pub user_point: Point,
    pub masked_id: Vec<u8>,
    pub user_auth: Digest,
    pub user_ts: Timestamp,
}

impl SureshM1 {
    pub fn encode(&self, curve: &crate::ecc::CurveParams) -> Vec<u8> {
        let mut out = crate::prims::encode_point(&self.user_point, curve);
        put_var(&mut out, &self.masked_id);
        out.extend_from_slice(self.user_auth.as_bytes());
        out.extend_from_slice(&self.user_ts.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8], curve: &crate::ecc::CurveParams) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let point = r.take(1 + 2 * curve.coord_width()).map_err(ProtocolError::Malformed)?;
        let user_point = decode_point(point, curve)?;
        let masked_id = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
        let auth = r.take(DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        let user_auth = Digest::from_slice(auth).expect("fixed digest width");
        let user_ts = r.take_timestamp().map_err(ProtocolError::Malformed)?;
        r.finish().map_err(ProtocolError::Malformed)?;
        Ok(SureshM1 { user_point, masked_id, user_auth, user_ts })
    }
}

/// What the user holds between sending m1 and receiving m2.
pub struct SureshUserState {
    ephemeral: Scalar,
    static_dh: Point,
    cred_hash: Digest,
    user_auth: Digest,
}

/// What the server holds between sending m2 and receiving the confirmation.
#[derive(Debug)]
pub struct SureshServerState {
    session_key: SessionKey,
    user_auth: Digest,
    server_auth: Digest,
}

/// Registers the user and returns the stored record.
pub fn register(
    creds: &Credentials,
    server: &ServerKeys,
    db: &mut SureshDb,
    ctx: &Ctx,
) -> Result<SureshRecord, ProtocolError> {
    let id_hash = ctx.hash(&[creds.id()]);
    let cred_hash = ctx.hash(&[creds.id(), creds.pw()]);
    let blind = ctx.hash(&[id_hash.as_bytes(), &encode_scalar(server.private(), ctx.curve)]);
    let record = SureshRecord {
        id_hash,
        blinded_verifier: xor(blind.as_bytes(), cred_hash.as_bytes()),
        id_pw_mask: xor(creds.id(), creds.pw()),
    };
    db.insert(record.clone())?;
    Ok(record)
}

/// Builds m1. The ephemeral scalar must be nonzero (as drawn by
/// `random_scalar`); the caller keeps the returned state for `user_finish`.
pub fn user_start(
    creds: &Credentials,
    server_public: &Point,
    user_ts: Timestamp,
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(SureshM1, SureshUserState), ProtocolError> {
    assert!(!ephemeral.is_zero(), "login ephemeral must be nonzero");
    let user_point = ctx.mul_base(&ephemeral)?;
    let static_dh = ctx.mul(&ephemeral, server_public)?;
    let id_hash = ctx.hash(&[creds.id()]);
    let cred_hash = ctx.hash(&[creds.id(), creds.pw()]);
    let dh_mask = ctx.hash(&[&ctx.point_bytes(&static_dh)]);
    let masked_id = xor(id_hash.as_bytes(), dh_mask.as_bytes());
    let user_auth = ctx.hash(&[
        cred_hash.as_bytes(),
        &ctx.point_bytes(&static_dh),
        &user_ts.to_be_bytes(),
    ]);
    let m1 = SureshM1 { user_point, masked_id, user_auth, user_ts };
    let state = SureshUserState { ephemeral, static_dh, cred_hash, user_auth };
    Ok((m1, state))
}

/// Processes m1 and builds the server challenge. Checks run in order:
/// freshness, identity lookup, authenticator, replay.
pub fn server_respond(
    m1: &SureshM1,
    db: &mut SureshDb,
    server: &ServerKeys,
    now: Timestamp,
    server_ts: Timestamp,
    ephemeral: Scalar,
    ctx: &Ctx,
) -> Result<(ServerChallenge, SureshServerState), ProtocolError> {
    if !ctx.fresh(m1.user_ts, now) {
        return Err(ProtocolError::StaleTimestamp);
    }
    if m1.user_point.is_infinity() || !ctx.curve.is_on_curve(&m1.user_point) {
        return Err(ProtocolError::InvalidPoint);
    }
    if m1.masked_id.len() != DIGEST_LEN {
        return Err(ProtocolError::Malformed("blinded identity has wrong width".into()));
    }
    let static_dh = ctx.mul(server.private(), &m1.user_point)?;
    let dh_mask = ctx.hash(&[&ctx.point_bytes(&static_dh)]);
    let id_hash = Digest::from_slice(&xor(&m1.masked_id, dh_mask.as_bytes()))
        .expect("xor of two digest-width strings");
    let record = db.get(&id_hash).ok_or(ProtocolError::UnknownUser)?;
    let blind = ctx.hash(&[id_hash.as_bytes(), &encode_scalar(server.private(), ctx.curve)]);
    let cred_hash = xor(&record.blinded_verifier, blind.as_bytes());
    let expected_auth = ctx.hash(&[
        &cred_hash,
        &ctx.point_bytes(&static_dh),
        &m1.user_ts.to_be_bytes(),
    ]);
    if expected_auth != m1.user_auth {
        return Err(ProtocolError::AuthFailure);
    }
    let point_bytes = ctx.point_bytes(&m1.user_point);
    if !db.replay.check_and_record(&point_bytes, m1.user_ts, now, ctx.window_ms) {
        return Err(ProtocolError::ReplayDetected);
    }
    let server_point = ctx.mul_base(&ephemeral)?;
    let ephemeral_dh = ctx.mul(&ephemeral, &m1.user_point)?;
    let server_auth = ctx.hash(&[
        &cred_hash,
        &ctx.point_bytes(&server_point),
        &ctx.point_bytes(&ephemeral_dh),
        &server_ts.to_be_bytes(),
    ]);
    let session_key = SessionKey::from_digest(ctx.hash(&[
        &ctx.point_bytes(&static_dh),
        &ctx.point_bytes(&ephemeral_dh),
        &cred_hash,
    ]));
    let m2 = ServerChallenge { server_point, server_auth, server_ts };
    let state = SureshServerState { session_key, user_auth: m1.user_auth, server_auth };
    Ok((m2, state))
}

/// Verifies the server challenge, derives the session key, and builds the
/// confirmation message.
pub fn user_finish(
    m2: &ServerChallenge,
    state: &SureshUserState,
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
    ]));
    let confirm = ctx.hash(&[
        state.user_auth.as_bytes(),
        m2.server_auth.as_bytes(),
        session_key.digest().as_bytes(),
    ]);
    Ok((KeyConfirm { confirm }, session_key))
}

/// Final server-side check of the user's key confirmation.
pub fn server_confirm(
    m3: &KeyConfirm,
    state: &SureshServerState,
    ctx: &Ctx,
) -> Result<SessionKey, ProtocolError> {
    let expected = ctx.hash(&[
        state.user_auth.as_bytes(),
        state.server_auth.as_bytes(),
        state.session_key.digest().as_bytes(),
    ]);
    if expected != m3.confirm {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(state.session_key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecc::{random_scalar, CurveParams};
    use crate::prims::{encode_point, hash, Tally};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    struct Fixture {
        curve: &'static CurveParams,
        keys: ServerKeys,
        creds: Credentials,
        db: SureshDb,
        rng: StdRng,
    }

    fn fixture() -> Fixture {
        let curve = CurveParams::toy17();
        let mut rng = StdRng::seed_from_u64(42);
        let keys = ServerKeys::generate(&mut rng, curve);
        Fixture {
            curve,
            keys,
            creds: Credentials::new("alice", "correct horse").unwrap(),
            db: SureshDb::new(),
            rng,
        }
    }

    fn ctx<'a>(curve: &'a CurveParams, tally: &'a Tally) -> Ctx<'a> {
        Ctx::new(curve, 5000, tally)
    }

    #[test]
    fn registration_record_matches_hand_composition() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        let record = register(&f.creds, &f.keys, &mut f.db, &c).unwrap();

        // Recompute every field from the primitives directly.
        let id_hash = hash(&[f.creds.id()]);
        let cred_hash = hash(&[f.creds.id(), f.creds.pw()]);
        let blind = hash(&[id_hash.as_bytes(), &encode_scalar(f.keys.private(), f.curve)]);
        assert_eq!(record.id_hash, id_hash);
        assert_eq!(record.blinded_verifier, xor(blind.as_bytes(), cred_hash.as_bytes()));
        assert_eq!(record.id_pw_mask, xor(f.creds.id(), f.creds.pw()));

        // Unblinding the verifier with the same mask recovers the
        // credential hash.
        assert_eq!(
            xor(&record.blinded_verifier, blind.as_bytes()),
            cred_hash.as_bytes().to_vec()
        );
    }

    #[test]
    fn duplicate_registration_is_rejected() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        assert_eq!(
            register(&f.creds, &f.keys, &mut f.db, &c),
            Err(ProtocolError::DuplicateUser)
        );
    }

    fn honest_run(f: &mut Fixture) -> (SessionKey, SessionKey) {
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(1_000_000);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, ustate) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        let (m2, sstate) =
            server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap();
        let (m3, user_key) = user_finish(&m2, &ustate, t0, &c).unwrap();
        let server_key = server_confirm(&m3, &sstate, &c).unwrap();
        (user_key, server_key)
    }

    #[test]
    fn honest_session_agrees_on_the_key() {
        let mut f = fixture();
        let (user_key, server_key) = honest_run(&mut f);
        assert_eq!(user_key, server_key);
    }

    #[test]
    fn m1_fields_relate_as_specified() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(5_000);
        let r_u = Scalar::from_u64(7, f.curve).unwrap();
        let (m1, _) = user_start(&f.creds, f.keys.public(), t0, r_u.clone(), &c).unwrap();

        assert_eq!(m1.user_point, f.curve.scalar_mult(&r_u, &f.curve.base).unwrap());
        // Unmasking with h(r_u * Q_s) recovers h(id).
        let dh = f.curve.scalar_mult(&r_u, f.keys.public()).unwrap();
        let mask = hash(&[&encode_point(&dh, f.curve)]);
        assert_eq!(
            xor(&m1.masked_id, mask.as_bytes()),
            hash(&[f.creds.id()]).as_bytes().to_vec()
        );
        // Same ephemeral and timestamp reproduce the same message.
        let (again, _) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        assert_eq!(m1, again);
    }

    #[test]
    fn stale_user_timestamp_is_rejected() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(1_000_000);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, _) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        let late = Timestamp::from_millis(1_005_001);
        assert_eq!(
            server_respond(&m1, &mut f.db, &f.keys, late, late, r_s, &c).unwrap_err(),
            ProtocolError::StaleTimestamp
        );
        // Exactly on the boundary is still fresh.
        let edge = Timestamp::from_millis(1_005_000);
        let r_s = random_scalar(&mut f.rng, f.curve);
        assert!(server_respond(&m1, &mut f.db, &f.keys, edge, edge, r_s, &c).is_ok());
    }

    #[test]
    fn unknown_user_and_bad_password_fail_differently() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(1_000);

        // Never-registered identity: the recovered index misses.
        let ghost = Credentials::new("mallory", "pw").unwrap();
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, _) = user_start(&ghost, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        assert_eq!(
            server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap_err(),
            ProtocolError::UnknownUser
        );

        // Right identity, wrong password: index hits, authenticator fails.
        let wrong = Credentials::new("alice", "wrong").unwrap();
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, _) = user_start(&wrong, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        assert_eq!(
            server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap_err(),
            ProtocolError::AuthFailure
        );
    }

    #[test]
    fn replayed_m1_inside_the_window_is_rejected() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(1_000_000);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, _) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        assert_eq!(
            server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap_err(),
            ProtocolError::ReplayDetected
        );
    }

    #[test]
    fn tampered_challenge_fails_at_the_user() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let t0 = Timestamp::from_millis(1_000_000);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, ustate) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        let (m2, _) = server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &c).unwrap();

        let mut bad_auth = m2.clone();
        let mut bytes = *bad_auth.server_auth.as_bytes();
        bytes[0] ^= 1;
        bad_auth.server_auth = Digest::from_bytes(bytes);
        assert_eq!(
            user_finish(&bad_auth, &ustate, t0, &c).unwrap_err(),
            ProtocolError::AuthFailure
        );

        let mut stale = m2;
        stale.server_ts = Timestamp::from_millis(900_000);
        assert_eq!(
            user_finish(&stale, &ustate, t0, &c).unwrap_err(),
            ProtocolError::StaleTimestamp
        );
    }

    #[test]
    fn confirmation_from_another_session_is_rejected() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        register(&f.creds, &f.keys, &mut f.db, &c).unwrap();
        let run = |f: &mut Fixture, t: Timestamp, c: &Ctx| {
            let r_u = random_scalar(&mut f.rng, f.curve);
            let (m1, ustate) = user_start(&f.creds, f.keys.public(), t, r_u, c).unwrap();
            let r_s = random_scalar(&mut f.rng, f.curve);
            let (m2, sstate) = server_respond(&m1, &mut f.db, &f.keys, t, t, r_s, c).unwrap();
            let (m3, _) = user_finish(&m2, &ustate, t, c).unwrap();
            (m3, sstate)
        };
        let (m3_first, _) = run(&mut f, Timestamp::from_millis(1_000), &c);
        let (_, sstate_second) = run(&mut f, Timestamp::from_millis(2_000), &c);
        assert_eq!(
            server_confirm(&m3_first, &sstate_second, &c).unwrap_err(),
            ProtocolError::AuthFailure
        );
    }

    #[test]
    fn per_side_operation_counts() {
        let mut f = fixture();
        let reg_tally = Tally::new();
        register(&f.creds, &f.keys, &mut f.db, &ctx(f.curve, &reg_tally)).unwrap();

        let user_tally = Tally::new();
        let server_tally = Tally::new();
        let uc = ctx(f.curve, &user_tally);
        let sc = ctx(f.curve, &server_tally);
        let t0 = Timestamp::from_millis(77_000);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, ustate) = user_start(&f.creds, f.keys.public(), t0, r_u, &uc).unwrap();
        let r_s = random_scalar(&mut f.rng, f.curve);
        let (m2, sstate) = server_respond(&m1, &mut f.db, &f.keys, t0, t0, r_s, &sc).unwrap();
        let (m3, _) = user_finish(&m2, &ustate, t0, &uc).unwrap();
        server_confirm(&m3, &sstate, &sc).unwrap();

        assert_eq!(user_tally.point_mults(), 3);
        assert_eq!(server_tally.point_mults(), 3);
        assert_eq!(user_tally.hashes(), 7);
        assert_eq!(server_tally.hashes(), 6);
    }

    #[test]
    fn m1_codec_round_trips() {
        let mut f = fixture();
        let tally = Tally::new();
        let c = ctx(f.curve, &tally);
        let t0 = Timestamp::from_millis(123_456);
        let r_u = random_scalar(&mut f.rng, f.curve);
        let (m1, _) = user_start(&f.creds, f.keys.public(), t0, r_u, &c).unwrap();
        let bytes = m1.encode(f.curve);
        assert_eq!(SureshM1::decode(&bytes, f.curve).unwrap(), m1);
        // Truncation and trailing garbage both fail.
        assert!(SureshM1::decode(&bytes[..bytes.len() - 1], f.curve).is_err());
        let mut extended = bytes;
        extended.push(0);
        assert!(SureshM1::decode(&extended, f.curve).is_err());
    }
}
