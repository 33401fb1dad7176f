//! Offline attacker toolkit: transcript capture plus the dictionary attacks
//! an eavesdropper can mount once a session's login ephemeral leaks.
//!
//! Every attack takes only public transcript data and the leaked scalar;
//! none of the signatures accept a server key or a registration database.
//! The contrast between the three schemes is the shape of the verifier the
//! transcript offers:
//!
//! * timestamped/hashed-identity login: the blinded identity unmasks to
//!   h(id), an identity-only verifier, and the authenticator then verifies
//!   passwords one at a time. Two cheap additive scans.
//! * realm-challenge login: the identity unmasks directly (no guessing at
//!   all); the final authenticator verifies passwords.
//! * hardened login: the only recoverable value is h(id || pw), so the one
//!   available verifier is joint. Nothing in this module can confirm an
//!   identity for that scheme without simultaneously confirming a password.

use crate::ecc::{CurveParams, Point, Scalar};
use crate::prims::{encode_point, hash, strip_padding, xor};
use crate::schemes::enhanced::EnhancedM1;
use crate::schemes::sureshkumar::SureshM1;
use crate::schemes::zhang::{ZhangM1, ZhangM2, ZhangM3};
use crate::schemes::SchemeId;
use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error("transcript is from {got}, expected {expected}")]
    SchemeMismatch { expected: SchemeId, got: SchemeId },
    #[error("leaked scalar does not reproduce the transcript's login point")]
    EphemeralMismatch,
    #[error("no transcript matches the leaked scalar")]
    NoMatch,
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("expected a {expected} dictionary, got {got}")]
    WrongDictionaryKind { expected: DictionaryKind, got: DictionaryKind },
}

/// Everything an eavesdropper holds after watching one session, plus any
/// ephemerals that leaked out of band.
#[derive(Clone, Debug)]
pub struct SessionTranscript {
    pub scheme: SchemeId,
    pub curve: CurveParams,
    pub server_public: Point,
    /// Realm observed in the exchange; empty for schemes without one.
    pub realm: Vec<u8>,
    pub m1: Vec<u8>,
    pub m2: Vec<u8>,
    pub m3: Vec<u8>,
    pub leaked: LeakedEphemerals,
}

/// Per-session scalars that leaked. The attacks here use only the user-side
/// scalar; the server-side slot exists so captures can record either leak.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LeakedEphemerals {
    pub user_scalar: Option<Scalar>,
    pub server_scalar: Option<Scalar>,
}

impl SessionTranscript {
    /// The user's login point, decoded from m1 under this transcript's
    /// scheme.
    pub fn user_point(&self) -> Result<Point, AttackError> {
        let point = match self.scheme {
            SchemeId::Sureshkumar => {
                SureshM1::decode(&self.m1, &self.curve).map(|m| m.user_point)
            }
            SchemeId::Zhang => ZhangM1::decode(&self.m1, &self.curve).map(|m| m.user_point),
            SchemeId::Enhanced => {
                EnhancedM1::decode(&self.m1, &self.curve).map(|m| m.user_point)
            }
        };
        point.map_err(|e| AttackError::Malformed(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DictionaryKind {
    Identity,
    Password,
}

impl fmt::Display for DictionaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictionaryKind::Identity => "identity",
            DictionaryKind::Password => "password",
        })
    }
}

/// Ordered, duplicate-free guess list. Scan order is list order, and all
/// attacks stop at the first match, so results are deterministic.
#[derive(Clone, Debug)]
pub struct Dictionary {
    kind: DictionaryKind,
    entries: Vec<Vec<u8>>,
}

impl Dictionary {
    pub fn new(
        kind: DictionaryKind,
        entries: impl IntoIterator<Item = impl Into<Vec<u8>>>,
    ) -> Result<Self, AttackError> {
        let mut seen = std::collections::HashSet::new();
        let entries: Vec<Vec<u8>> = entries
            .into_iter()
            .map(Into::into)
            .filter(|e| seen.insert(e.clone()))
            .collect();
        if entries.is_empty() {
            return Err(AttackError::EmptyDictionary);
        }
        Ok(Dictionary { kind, entries })
    }

    /// Loads one UTF-8 entry per line, skipping blank lines.
    pub fn from_file(kind: DictionaryKind, path: &std::path::Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Dictionary::new(kind, text.lines().filter(|l| !l.is_empty()))
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Outcome of one attack run. `guesses_tried` counts candidate credentials
/// (or candidate pairs) taken from the dictionaries; `oracle_checks` counts
/// evaluations of the transcript-derived verifier predicate.
#[derive(Clone, Debug)]
pub struct AttackReport {
    pub success: bool,
    pub recovered_id: Option<Vec<u8>>,
    pub recovered_pw: Option<Vec<u8>>,
    pub guesses_tried: u64,
    pub oracle_checks: u64,
    pub wall_time: Duration,
}

impl AttackReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("success = {}\n", self.success));
        out.push_str(&format!(
            "recovered_id = {}\n",
            self.recovered_id.as_deref().map(render_bytes).unwrap_or_else(|| "-".into())
        ));
        out.push_str(&format!(
            "recovered_pw = {}\n",
            self.recovered_pw.as_deref().map(render_bytes).unwrap_or_else(|| "-".into())
        ));
        out.push_str(&format!("guesses_tried = {}\n", self.guesses_tried));
        out.push_str(&format!("oracle_checks = {}\n", self.oracle_checks));
        out.push_str(&format!("wall_time_ms = {:.3}\n", self.wall_time.as_secs_f64() * 1e3));
        out
    }
}

fn render_bytes(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) if s.chars().all(|c| !c.is_control()) => s.to_string(),
        _ => format!("hex:{}", hex::encode(bytes)),
    }
}

/// Finds the session a leaked scalar belongs to by recomputing the login
/// point and scanning for it.
pub fn match_session<'a>(
    transcripts: &'a [SessionTranscript],
    user_scalar: &Scalar,
) -> Result<&'a SessionTranscript, AttackError> {
    for t in transcripts {
        let candidate = t
            .curve
            .scalar_mult(user_scalar, &t.curve.base)
            .map_err(|e| AttackError::Malformed(e.to_string()))?;
        if t.user_point()? == candidate {
            return Ok(t);
        }
    }
    Err(AttackError::NoMatch)
}

fn require_scheme(t: &SessionTranscript, expected: SchemeId) -> Result<(), AttackError> {
    if t.scheme != expected {
        return Err(AttackError::SchemeMismatch { expected, got: t.scheme });
    }
    Ok(())
}

fn require_ephemeral(t: &SessionTranscript, user_scalar: &Scalar) -> Result<(), AttackError> {
    let candidate = t
        .curve
        .scalar_mult(user_scalar, &t.curve.base)
        .map_err(|e| AttackError::Malformed(e.to_string()))?;
    if t.user_point()? != candidate {
        return Err(AttackError::EphemeralMismatch);
    }
    Ok(())
}

fn require_kind(dict: &Dictionary, expected: DictionaryKind) -> Result<(), AttackError> {
    if dict.kind() != expected {
        return Err(AttackError::WrongDictionaryKind { expected, got: dict.kind() });
    }
    Ok(())
}

/// Timestamped-scheme attack: unmask h(id) with the leaked DH secret, scan
/// identities against it, then scan passwords against the authenticator.
///
/// A missing entry is not an error; the report simply comes back with
/// `success = false` and whatever half was recovered.
pub fn attack_sureshkumar(
    t: &SessionTranscript,
    user_scalar: &Scalar,
    id_dict: &Dictionary,
    pw_dict: &Dictionary,
) -> Result<AttackReport, AttackError> {
    require_scheme(t, SchemeId::Sureshkumar)?;
    require_ephemeral(t, user_scalar)?;
    require_kind(id_dict, DictionaryKind::Identity)?;
    require_kind(pw_dict, DictionaryKind::Password)?;
    let start = Instant::now();
    let m1 = SureshM1::decode(&t.m1, &t.curve).map_err(|e| AttackError::Malformed(e.to_string()))?;

    let static_dh = t
        .curve
        .scalar_mult(user_scalar, &t.server_public)
        .map_err(|e| AttackError::Malformed(e.to_string()))?;
    let dh_bytes = encode_point(&static_dh, &t.curve);
    let dh_mask = hash(&[&dh_bytes]);
    let id_hash_target = xor(&m1.masked_id, dh_mask.as_bytes());

    let mut guesses = 0u64;
    let mut checks = 0u64;

    let mut recovered_id = None;
    for id in id_dict.entries() {
        guesses += 1;
        checks += 1;
        if hash(&[id]).as_bytes() == id_hash_target.as_slice() {
            recovered_id = Some(id.clone());
            break;
        }
    }

    let mut recovered_pw = None;
    if let Some(id) = &recovered_id {
        for pw in pw_dict.entries() {
            guesses += 1;
            checks += 1;
            let cred_hash = hash(&[id, pw]);
            let auth = hash(&[cred_hash.as_bytes(), &dh_bytes, &m1.user_ts.to_be_bytes()]);
            if auth == m1.user_auth {
                recovered_pw = Some(pw.clone());
                break;
            }
        }
    }

    Ok(AttackReport {
        success: recovered_id.is_some() && recovered_pw.is_some(),
        recovered_id,
        recovered_pw,
        guesses_tried: guesses,
        oracle_checks: checks,
        wall_time: start.elapsed(),
    })
}

/// Realm-challenge-scheme attack: the identity unmasks directly from m1
/// (zero guesses), and the m3 authenticator then verifies password guesses.
pub fn attack_zhang(
    t: &SessionTranscript,
    user_scalar: &Scalar,
    pw_dict: &Dictionary,
) -> Result<AttackReport, AttackError> {
    require_scheme(t, SchemeId::Zhang)?;
    require_ephemeral(t, user_scalar)?;
    require_kind(pw_dict, DictionaryKind::Password)?;
    let start = Instant::now();
    let m1 = ZhangM1::decode(&t.m1, &t.curve).map_err(|e| AttackError::Malformed(e.to_string()))?;
    let m2 = ZhangM2::decode(&t.m2, &t.curve).map_err(|e| AttackError::Malformed(e.to_string()))?;
    let m3 = ZhangM3::decode(&t.m3).map_err(|e| AttackError::Malformed(e.to_string()))?;

    let user_bytes = encode_point(&m1.user_point, &t.curve);
    let static_dh = t
        .curve
        .scalar_mult(user_scalar, &t.server_public)
        .map_err(|e| AttackError::Malformed(e.to_string()))?;
    let static_bytes = encode_point(&static_dh, &t.curve);
    let ephemeral_dh = t
        .curve
        .scalar_mult(user_scalar, &m2.server_point)
        .map_err(|e| AttackError::Malformed(e.to_string()))?;
    let ephemeral_bytes = encode_point(&ephemeral_dh, &t.curve);
    let server_bytes = encode_point(&m2.server_point, &t.curve);

    let mask = hash(&[&user_bytes, &static_bytes]);
    let recovered_id = strip_padding(&xor(&m1.masked_id, mask.as_bytes())).to_vec();

    let mut guesses = 0u64;
    let mut checks = 0u64;
    let mut recovered_pw = None;
    for pw in pw_dict.entries() {
        guesses += 1;
        checks += 1;
        let cred_hash = hash(&[&recovered_id, pw]);
        let auth = hash(&[
            &m2.realm,
            &static_bytes,
            &ephemeral_bytes,
            &server_bytes,
            &user_bytes,
            cred_hash.as_bytes(),
        ]);
        if auth == m3.user_auth {
            recovered_pw = Some(pw.clone());
            break;
        }
    }

    Ok(AttackReport {
        success: recovered_pw.is_some(),
        recovered_id: Some(recovered_id),
        recovered_pw,
        guesses_tried: guesses,
        oracle_checks: checks,
        wall_time: start.elapsed(),
    })
}

/// Hardened-scheme attack. The transcript yields h(id || pw) and nothing
/// finer-grained, so the only possible scan is over identity-password
/// pairs; the report never carries an identity without the password that
/// verified alongside it.
pub fn attack_enhanced_joint(
    t: &SessionTranscript,
    user_scalar: &Scalar,
    id_dict: &Dictionary,
    pw_dict: &Dictionary,
) -> Result<AttackReport, AttackError> {
    require_scheme(t, SchemeId::Enhanced)?;
    require_ephemeral(t, user_scalar)?;
    require_kind(id_dict, DictionaryKind::Identity)?;
    require_kind(pw_dict, DictionaryKind::Password)?;
    let start = Instant::now();
    let m1 =
        EnhancedM1::decode(&t.m1, &t.curve).map_err(|e| AttackError::Malformed(e.to_string()))?;

    let static_dh = t
        .curve
        .scalar_mult(user_scalar, &t.server_public)
        .map_err(|e| AttackError::Malformed(e.to_string()))?;
    let dh_mask = hash(&[&encode_point(&static_dh, &t.curve)]);
    let cred_hash_target = xor(&m1.masked_cred, dh_mask.as_bytes());

    let mut guesses = 0u64;
    let mut checks = 0u64;
    let mut recovered = None;
    'outer: for id in id_dict.entries() {
        for pw in pw_dict.entries() {
            guesses += 1;
            checks += 1;
            if hash(&[id, pw]).as_bytes() == cred_hash_target.as_slice() {
                recovered = Some((id.clone(), pw.clone()));
                break 'outer;
            }
        }
    }

    let (recovered_id, recovered_pw) = match recovered {
        Some((id, pw)) => (Some(id), Some(pw)),
        None => (None, None),
    };
    Ok(AttackReport {
        success: recovered_id.is_some(),
        recovered_id,
        recovered_pw,
        guesses_tried: guesses,
        oracle_checks: checks,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prims::{Tally, Timestamp};
    use crate::schemes::{enhanced, sureshkumar, zhang, Credentials, Ctx, ServerKeys};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const WINDOW: u64 = 5000;

    fn ids(entries: &[&str]) -> Dictionary {
        Dictionary::new(DictionaryKind::Identity, entries.iter().copied()).unwrap()
    }

    fn pws(entries: &[&str]) -> Dictionary {
        Dictionary::new(DictionaryKind::Password, entries.iter().copied()).unwrap()
    }

    /// Records one honest session per scheme and hands back the transcript
    /// with the user's ephemeral scalar.
    fn record(scheme: SchemeId, creds: &Credentials, seed: u64) -> (SessionTranscript, Scalar) {
        let curve = CurveParams::toy17();
        let mut rng = StdRng::seed_from_u64(seed);
        let keys = ServerKeys::generate(&mut rng, curve);
        let tally = Tally::new();
        let c = Ctx::new(curve, WINDOW, &tally);
        let t0 = Timestamp::from_millis(1_000_000);
        let r_u = crate::ecc::random_scalar(&mut rng, curve);
        let r_s = crate::ecc::random_scalar(&mut rng, curve);
        let realm: &[u8] = b"clinic.example";

        let (m1, m2, m3) = match scheme {
            SchemeId::Sureshkumar => {
                let mut db = sureshkumar::SureshDb::new();
                sureshkumar::register(creds, &keys, &mut db, &c).unwrap();
                let (m1, ustate) =
                    sureshkumar::user_start(creds, keys.public(), t0, r_u.clone(), &c).unwrap();
                let (m2, sstate) =
                    sureshkumar::server_respond(&m1, &mut db, &keys, t0, t0, r_s, &c).unwrap();
                let (m3, _) = sureshkumar::user_finish(&m2, &ustate, t0, &c).unwrap();
                sureshkumar::server_confirm(&m3, &sstate, &c).unwrap();
                (m1.encode(curve), m2.encode(curve), m3.encode())
            }
            SchemeId::Zhang => {
                let mut db = zhang::ZhangDb::new();
                zhang::register(creds, &keys, &mut db, &c).unwrap();
                let (m1, ustate) =
                    zhang::user_start(creds, keys.public(), r_u.clone(), &c).unwrap();
                let (m2, sstate) = zhang::server_challenge(&m1, &keys, realm, r_s, &c).unwrap();
                let (m3, _) = zhang::user_finish(&m2, &ustate, &c).unwrap();
                zhang::server_verify(&m3, &sstate, &db, &keys, &c).unwrap();
                (m1.encode(curve), m2.encode(curve), m3.encode())
            }
            SchemeId::Enhanced => {
                let mut db = enhanced::EnhancedDb::new();
                let salt = crate::ecc::random_scalar(&mut rng, curve);
                let (_, enrollment) =
                    enhanced::register(creds, &keys, salt, &mut db, &c).unwrap();
                let (m1, ustate) =
                    enhanced::user_start(creds, &enrollment, keys.public(), t0, r_u.clone(), &c)
                        .unwrap();
                let (m2, sstate) =
                    enhanced::server_respond(&m1, &mut db, &keys, t0, t0, r_s, &c).unwrap();
                let (m3, _) = enhanced::user_finish(&m2, &ustate, t0, &c).unwrap();
                enhanced::server_confirm(&m3, &sstate, &c).unwrap();
                (m1.encode(curve), m2.encode(curve), m3.encode())
            }
        };

        let transcript = SessionTranscript {
            scheme,
            curve: curve.clone(),
            server_public: keys.public().clone(),
            realm: if scheme == SchemeId::Zhang { realm.to_vec() } else { Vec::new() },
            m1,
            m2,
            m3,
            leaked: LeakedEphemerals { user_scalar: Some(r_u.clone()), server_scalar: None },
        };
        (transcript, r_u)
    }

    #[test]
    fn dictionary_rejects_empty_and_deduplicates() {
        assert_eq!(
            Dictionary::new(DictionaryKind::Identity, Vec::<Vec<u8>>::new()).unwrap_err(),
            AttackError::EmptyDictionary
        );
        let d = ids(&["a", "b", "a", "c", "b"]);
        assert_eq!(d.entries(), &[b"a".to_vec(), b"b".to_vec(), b"c".to_vec()]);
    }

    #[test]
    fn dictionary_loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pw.txt");
        std::fs::write(&path, "first\n\nsecond\nfirst\n").unwrap();
        let d = Dictionary::from_file(DictionaryKind::Password, &path).unwrap();
        assert_eq!(d.entries(), &[b"first".to_vec(), b"second".to_vec()]);
    }

    #[test]
    fn match_session_finds_the_leaking_session() {
        let creds_a = Credentials::new("alice", "pw-a").unwrap();
        let creds_b = Credentials::new("bob", "pw-b").unwrap();
        let (t_a, r_a) = record(SchemeId::Sureshkumar, &creds_a, 7);
        let (t_b, r_b) = record(SchemeId::Sureshkumar, &creds_b, 8);
        let transcripts = vec![t_a, t_b];
        // The two sessions use distinct ephemerals (different seeds); if a
        // collision ever occurred the assertion below would catch it.
        assert_ne!(r_a, r_b);
        let found = match_session(&transcripts, &r_b).unwrap();
        assert_eq!(found.m1, transcripts[1].m1);
        let found = match_session(&transcripts, &r_a).unwrap();
        assert_eq!(found.m1, transcripts[0].m1);

        // A scalar from an unrecorded session matches nothing. The group
        // has 18 nonzero scalars and only two are in use.
        let curve = CurveParams::toy17();
        let probe = (1..19u64)
            .map(|k| Scalar::from_u64(k, curve).unwrap())
            .find(|s| {
                let p = curve.scalar_mult(s, &curve.base).unwrap();
                transcripts.iter().all(|t| t.user_point().unwrap() != p)
            })
            .expect("19 points, 2 used");
        assert_eq!(match_session(&transcripts, &probe).unwrap_err(), AttackError::NoMatch);
    }

    #[test]
    fn timestamped_scheme_attack_recovers_both_credentials() {
        let creds = Credentials::new("alice", "hunter2").unwrap();
        let (t, r_u) = record(SchemeId::Sureshkumar, &creds, 11);
        let id_dict = ids(&["zoe", "yann", "alice", "xena"]);
        let pw_dict = pws(&["123456", "letmein", "hunter2", "qwerty"]);
        let report = attack_sureshkumar(&t, &r_u, &id_dict, &pw_dict).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_id.as_deref(), Some(b"alice".as_slice()));
        assert_eq!(report.recovered_pw.as_deref(), Some(b"hunter2".as_slice()));
        // First-match scan order: 3 identity checks, then 3 password checks.
        assert_eq!(report.guesses_tried, 6);
        assert_eq!(report.oracle_checks, 6);
    }

    #[test]
    fn timestamped_scheme_attack_reports_partial_recovery() {
        let creds = Credentials::new("alice", "hunter2").unwrap();
        let (t, r_u) = record(SchemeId::Sureshkumar, &creds, 12);
        let report = attack_sureshkumar(
            &t,
            &r_u,
            &ids(&["alice"]),
            &pws(&["wrong", "also-wrong"]),
        )
        .unwrap();
        assert!(!report.success);
        assert_eq!(report.recovered_id.as_deref(), Some(b"alice".as_slice()));
        assert_eq!(report.recovered_pw, None);

        // Identity missing entirely: the password oracle is never usable.
        let report =
            attack_sureshkumar(&t, &r_u, &ids(&["bob"]), &pws(&["hunter2"])).unwrap();
        assert!(!report.success);
        assert_eq!(report.recovered_id, None);
        assert_eq!(report.recovered_pw, None);
        assert_eq!(report.guesses_tried, 1);
    }

    #[test]
    fn realm_scheme_attack_needs_no_identity_guesses() {
        let creds = Credentials::new("bob", "open sesame").unwrap();
        let (t, r_u) = record(SchemeId::Zhang, &creds, 21);
        let pw_dict = pws(&["aaaa", "open sesame", "bbbb"]);
        let report = attack_zhang(&t, &r_u, &pw_dict).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_id.as_deref(), Some(b"bob".as_slice()));
        assert_eq!(report.recovered_pw.as_deref(), Some(b"open sesame".as_slice()));
        assert_eq!(report.guesses_tried, 2);

        // Even with no password hit, the identity still falls out.
        let report = attack_zhang(&t, &r_u, &pws(&["nope"])).unwrap();
        assert!(!report.success);
        assert_eq!(report.recovered_id.as_deref(), Some(b"bob".as_slice()));
    }

    #[test]
    fn hardened_scheme_attack_only_works_jointly() {
        let creds = Credentials::new("carol", "hunter2").unwrap();
        let (t, r_u) = record(SchemeId::Enhanced, &creds, 31);

        let report = attack_enhanced_joint(
            &t,
            &r_u,
            &ids(&["alice", "carol"]),
            &pws(&["wrong", "hunter2"]),
        )
        .unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_id.as_deref(), Some(b"carol".as_slice()));
        assert_eq!(report.recovered_pw.as_deref(), Some(b"hunter2".as_slice()));
        // Pair scan: both passwords for "alice", then both for "carol".
        assert_eq!(report.guesses_tried, 4);

        // True identity present but password absent: the joint predicate
        // never fires, and no identity is reported either.
        let report = attack_enhanced_joint(
            &t,
            &r_u,
            &ids(&["alice", "carol"]),
            &pws(&["wrong", "worse"]),
        )
        .unwrap();
        assert!(!report.success);
        assert_eq!(report.recovered_id, None);
        assert_eq!(report.recovered_pw, None);
        assert_eq!(report.oracle_checks, 4);
    }

    #[test]
    fn joint_scan_cost_dwarfs_the_additive_scan() {
        let creds = Credentials::new("user-99", "pw-99").unwrap();
        let (t_suresh, r_suresh) = record(SchemeId::Sureshkumar, &creds, 41);
        let (t_enh, r_enh) = record(SchemeId::Enhanced, &creds, 42);

        let id_entries: Vec<String> = (0..100).map(|i| format!("user-{i}")).collect();
        let pw_entries: Vec<String> = (0..100).map(|i| format!("pw-{i}")).collect();
        let id_dict = Dictionary::new(DictionaryKind::Identity, id_entries).unwrap();
        let pw_dict = Dictionary::new(DictionaryKind::Password, pw_entries).unwrap();

        let additive = attack_sureshkumar(&t_suresh, &r_suresh, &id_dict, &pw_dict).unwrap();
        let joint = attack_enhanced_joint(&t_enh, &r_enh, &id_dict, &pw_dict).unwrap();
        assert!(additive.success);
        assert!(joint.success);
        assert_eq!(additive.oracle_checks, 200);
        assert_eq!(joint.oracle_checks, 10_000);
    }

    #[test]
    fn preconditions_are_enforced() {
        let creds = Credentials::new("alice", "pw").unwrap();
        let (t, r_u) = record(SchemeId::Zhang, &creds, 51);
        let id_dict = ids(&["alice"]);
        let pw_dict = pws(&["pw"]);

        assert!(matches!(
            attack_sureshkumar(&t, &r_u, &id_dict, &pw_dict).unwrap_err(),
            AttackError::SchemeMismatch { .. }
        ));
        assert!(matches!(
            attack_zhang(&t, &r_u, &id_dict).unwrap_err(),
            AttackError::WrongDictionaryKind { .. }
        ));

        // A scalar that does not explain the observed login point.
        let curve = CurveParams::toy17();
        let wrong = (1..19u64)
            .map(|k| Scalar::from_u64(k, curve).unwrap())
            .find(|s| {
                curve.scalar_mult(s, &curve.base).unwrap() != t.user_point().unwrap()
            })
            .unwrap();
        assert_eq!(
            attack_zhang(&t, &wrong, &pw_dict).unwrap_err(),
            AttackError::EphemeralMismatch
        );
    }

    #[test]
    fn successful_reports_reverify_against_the_transcript() {
        // Soundness spot check across randomized credentials: whenever an
        // attack claims success, recomputing the captured verifier from the
        // recovered credentials reproduces it.
        let mut rng = StdRng::seed_from_u64(61);
        for trial in 0..5 {
            let id = format!("user{}", rng.gen_range(0..1000));
            let pw = format!("pw{}", rng.gen_range(0..1000));
            let creds = Credentials::new(id.as_str(), pw.as_str()).unwrap();
            let (t, r_u) = record(SchemeId::Sureshkumar, &creds, 100 + trial);
            let report = attack_sureshkumar(
                &t,
                &r_u,
                &ids(&[id.as_str()]),
                &pws(&[pw.as_str()]),
            )
            .unwrap();
            assert!(report.success);

            let m1 = SureshM1::decode(&t.m1, &t.curve).unwrap();
            let static_dh = t.curve.scalar_mult(&r_u, &t.server_public).unwrap();
            let cred_hash = hash(&[
                report.recovered_id.as_deref().unwrap(),
                report.recovered_pw.as_deref().unwrap(),
            ]);
            let auth = hash(&[
                cred_hash.as_bytes(),
                &encode_point(&static_dh, &t.curve),
                &m1.user_ts.to_be_bytes(),
            ]);
            assert_eq!(auth, m1.user_auth);
        }
    }
}
