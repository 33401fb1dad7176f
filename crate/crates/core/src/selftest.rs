//! Built-in sanity suite over the exhaustively checkable curve. Every check
//! is cheap enough to run on every invocation of `selftest`, and together
//! they cover the invariants the rest of the lab leans on: group structure,
//! encodings, freshness handling, and one honest handshake per scheme.

use crate::ecc::{CurveParams, Point, Scalar};
use crate::net::{
    register_user, run_session, ChannelScript, LabDb, ManualClock, ServerEnv, SessionConfig,
};
use crate::prims::{check_freshness, decode_point, encode_point, hash, Timestamp};
use crate::schemes::{Credentials, ReplayCache, SchemeId, ServerKeys};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Runs every check. Returns one human-readable line per passing check, or
/// the first failure.
pub fn run() -> Result<Vec<String>, String> {
    let mut lines = Vec::new();
    let curve = CurveParams::toy17();

    curve
        .validate_exhaustive()
        .map_err(|e| format!("exhaustive curve validation: {e}"))?;
    lines.push(format!(
        "ok: curve {} survives exhaustive enumeration",
        curve.profile_name
    ));

    // The base point generates a group of the declared order: n compositions
    // of the group law return to the identity, and no earlier multiple does.
    let mut acc = Point::Infinity;
    let mut multiples = Vec::new();
    for step in 1..=19u64 {
        acc = curve
            .point_add(&acc, &curve.base)
            .map_err(|e| format!("group law failed at multiple {step}: {e}"))?;
        if step < 19 && acc.is_infinity() {
            return Err(format!("base point order divides {step}, expected 19"));
        }
        multiples.push(acc.clone());
    }
    if !acc.is_infinity() {
        return Err("19 * base != identity".to_string());
    }
    lines.push("ok: base point has order 19 exactly".to_string());

    // Double-and-add agrees with the repeated-addition ladder everywhere.
    for (k, expected) in multiples.iter().enumerate() {
        let got = curve
            .scalar_mult(&scalar(curve, (k + 1) as u64 % 19), &curve.base)
            .map_err(|e| format!("scalar_mult({}) failed: {e}", k + 1))?;
        let expected = if k + 1 == 19 { &Point::Infinity } else { expected };
        if got != *expected {
            return Err(format!("scalar_mult({}) disagrees with repeated addition", k + 1));
        }
    }
    lines.push("ok: scalar multiplication matches repeated addition for all k".to_string());

    // Point codec round-trips every element of the group.
    for p in multiples.iter().take(18).chain([Point::Infinity].iter()) {
        let restored = decode_point(&encode_point(p, curve), curve)
            .map_err(|e| format!("point codec broke on {p:?}: {e}"))?;
        if restored != *p {
            return Err(format!("point codec round trip changed {p:?}"));
        }
    }
    lines.push("ok: point encoding round-trips all 19 group elements".to_string());

    let digest = hash(&[&encode_point(&curve.base, curve)]).to_hex();
    let expected = "1af0986aea3a9032d4d05747f6974dce3c2dc3048f37cbc366c0dd81b9c3a57d";
    if digest != expected {
        return Err(format!("base-point digest drifted: {digest}"));
    }
    lines.push("ok: canonical hash of the base point matches its pinned digest".to_string());

    // Discrete logs are recoverable by scan, so the attack oracles that
    // assume a brute-forceable group are honest on this profile.
    for k in 1..19u64 {
        let target = curve.scalar_mult(&scalar(curve, k), &curve.base).unwrap();
        let found = (1..19u64).find(|&c| {
            curve.scalar_mult(&scalar(curve, c), &curve.base).unwrap() == target
        });
        if found != Some(k) {
            return Err(format!("discrete log scan recovered {found:?} for k={k}"));
        }
    }
    lines.push("ok: discrete logs recoverable by exhaustive scan".to_string());

    let t = Timestamp::from_millis(10_000);
    let window = 5000;
    if !check_freshness(t, Timestamp::from_millis(15_000), window)
        || check_freshness(t, Timestamp::from_millis(15_001), window)
        || !check_freshness(t, Timestamp::from_millis(5_000), window)
    {
        return Err("freshness window boundary misbehaves".to_string());
    }
    lines.push("ok: freshness window accepts its boundary and nothing beyond".to_string());

    let mut cache = ReplayCache::new();
    let point_bytes = encode_point(&curve.base, curve);
    let now = Timestamp::from_millis(20_000);
    let t_in_window = Timestamp::from_millis(18_000);
    if !cache.check_and_record(&point_bytes, t_in_window, now, window) {
        return Err("replay cache rejected a first sighting".to_string());
    }
    if cache.check_and_record(&point_bytes, t_in_window, now, window) {
        return Err("replay cache accepted a duplicate".to_string());
    }
    lines.push("ok: replay cache rejects a repeated (point, timestamp) pair".to_string());

    for scheme in SchemeId::ALL {
        let cfg = SessionConfig::toy();
        let mut rng = StdRng::seed_from_u64(71);
        let keys = ServerKeys::generate(&mut rng, &cfg.curve);
        let mut env = ServerEnv { keys, db: LabDb::new(), realm: b"selftest.example".to_vec() };
        let creds = Credentials::new("selftest-user", "selftest-pw")
            .map_err(|e| format!("credentials: {e}"))?;
        let account = register_user(&cfg, scheme, &creds, &mut env, &mut rng)
            .map_err(|e| format!("{scheme}: registration failed: {e}"))?;
        let clock = ManualClock::new(1_000_000);
        let run = run_session(
            &cfg,
            scheme,
            &account,
            &mut env,
            ChannelScript::honest(),
            &clock,
            &mut StdRng::seed_from_u64(72),
            &mut StdRng::seed_from_u64(73),
        );
        if !run.outcome.is_agreement() {
            return Err(format!("{scheme}: honest session rejected: {:?}", run.outcome));
        }
        lines.push(format!("ok: {scheme} honest handshake agrees on a key"));
    }

    Ok(lines)
}

fn scalar(curve: &CurveParams, k: u64) -> Scalar {
    Scalar::from_u64(k, curve).expect("k < 19")
}
