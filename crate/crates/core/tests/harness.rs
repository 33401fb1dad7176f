//! Cross-cutting transport checks: determinism of the in-memory harness,
//! byte-identity between the in-memory and socket paths, and exhaustive
//! single-byte tamper rejection.

use rand::rngs::StdRng;
use rand::SeedableRng;
use siplab_core::net::{
    connect, register_user, run_session, serve, Action, ChannelScript, Clock, LabDb, ManualClock,
    Outcome, ServerEnv, SessionConfig, SessionRun, UserAccount,
};
use siplab_core::schemes::{Credentials, SchemeId, ServerKeys};
use std::sync::Arc;

const CLOCK_START: u64 = 50_000_000;

fn fixture(scheme: SchemeId) -> (SessionConfig, UserAccount, ServerEnv) {
    let cfg = SessionConfig::toy();
    let mut rng = StdRng::seed_from_u64(9_090);
    let keys = ServerKeys::generate(&mut rng, &cfg.curve);
    let mut env = ServerEnv { keys, db: LabDb::new(), realm: b"ward.example".to_vec() };
    let creds = Credentials::new("nurse-7", "eleven bright coins").unwrap();
    let account = register_user(&cfg, scheme, &creds, &mut env, &mut rng).unwrap();
    (cfg, account, env)
}

fn honest_run(
    cfg: &SessionConfig,
    scheme: SchemeId,
    account: &UserAccount,
    env: &mut ServerEnv,
    script: ChannelScript,
    user_seed: u64,
    server_seed: u64,
) -> SessionRun {
    let clock = ManualClock::new(CLOCK_START);
    run_session(
        cfg,
        scheme,
        account,
        env,
        script,
        &clock,
        &mut StdRng::seed_from_u64(user_seed),
        &mut StdRng::seed_from_u64(server_seed),
    )
}

#[test]
fn fixed_seeds_reproduce_identical_frames() {
    for scheme in SchemeId::ALL {
        let (cfg, account, env) = fixture(scheme);
        let mut env_a = env.clone();
        let mut env_b = env;
        let a = honest_run(&cfg, scheme, &account, &mut env_a, ChannelScript::honest(), 1, 2);
        let b = honest_run(&cfg, scheme, &account, &mut env_b, ChannelScript::honest(), 1, 2);
        assert!(a.outcome.is_agreement());
        assert_eq!(a.outcome, b.outcome, "{scheme}");
        let bytes = |run: &SessionRun| -> Vec<Vec<u8>> {
            run.frames.iter().map(|(_, f)| f.encode()).collect()
        };
        assert_eq!(bytes(&a), bytes(&b), "{scheme}");
    }
}

#[test]
fn socket_and_memory_paths_emit_identical_bytes() {
    for scheme in SchemeId::ALL {
        let (cfg, account, env) = fixture(scheme);
        let mut memory_env = env.clone();

        let memory = honest_run(
            &cfg,
            scheme,
            &account,
            &mut memory_env,
            ChannelScript::honest(),
            31,
            32,
        );
        assert!(memory.outcome.is_agreement(), "{scheme}");

        let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(CLOCK_START));
        let handle = serve(
            "127.0.0.1:0",
            scheme,
            cfg.clone(),
            env,
            Arc::clone(&clock),
            StdRng::seed_from_u64(32),
        )
        .unwrap();
        let socket = connect(
            &handle.addr().to_string(),
            scheme,
            &cfg,
            &account,
            memory_env.keys.public(),
            &*clock,
            &mut StdRng::seed_from_u64(31),
            None,
        )
        .unwrap();
        handle.shutdown();

        let memory_frames: Vec<_> =
            memory.frames.iter().map(|(d, f)| (*d, f.encode())).collect();
        let socket_frames: Vec<_> =
            socket.frames.iter().map(|(d, f)| (*d, f.encode())).collect();
        assert_eq!(memory_frames, socket_frames, "{scheme}");

        if let Outcome::KeysAgree { user_key, .. } = memory.outcome {
            assert_eq!(user_key, socket.key, "{scheme}: transports disagree on the key");
        }
    }
}

/// Every byte of every message, in every scheme, must be covered by some
/// integrity check: flipping it has to sink the session.
#[test]
fn any_single_byte_tamper_is_rejected() {
    for scheme in SchemeId::ALL {
        // One honest run to learn each message's length.
        let (cfg, account, env) = fixture(scheme);
        let mut probe_env = env.clone();
        let probe =
            honest_run(&cfg, scheme, &account, &mut probe_env, ChannelScript::honest(), 7, 8);
        assert!(probe.outcome.is_agreement());
        let lengths: Vec<usize> = probe.frames.iter().map(|(_, f)| f.payload.len()).collect();
        assert_eq!(lengths.len(), 3);

        for (msg_pos, len) in lengths.iter().enumerate() {
            for offset in 0..*len {
                let mut actions = vec![Action::Deliver; msg_pos];
                actions.push(Action::Tamper { offset, mask: 0xff });
                let mut run_env = env.clone();
                let run = honest_run(
                    &cfg,
                    scheme,
                    &account,
                    &mut run_env,
                    ChannelScript::new(actions),
                    7,
                    8,
                );
                assert!(
                    !run.outcome.is_agreement(),
                    "{scheme}: flipping byte {offset} of message {} went unnoticed",
                    msg_pos + 1
                );
            }
        }
    }
}

/// A flipped low bit is a subtler corruption than 0xff; spot-check that the
/// checks catch it at both ends of each message.
#[test]
fn single_bit_tampers_at_message_edges_are_rejected() {
    for scheme in SchemeId::ALL {
        let (cfg, account, env) = fixture(scheme);
        let mut probe_env = env.clone();
        let probe =
            honest_run(&cfg, scheme, &account, &mut probe_env, ChannelScript::honest(), 7, 8);
        let lengths: Vec<usize> = probe.frames.iter().map(|(_, f)| f.payload.len()).collect();

        for (msg_pos, len) in lengths.iter().enumerate() {
            for offset in [0, len - 1] {
                let mut actions = vec![Action::Deliver; msg_pos];
                actions.push(Action::Tamper { offset, mask: 0x01 });
                let mut run_env = env.clone();
                let run = honest_run(
                    &cfg,
                    scheme,
                    &account,
                    &mut run_env,
                    ChannelScript::new(actions),
                    7,
                    8,
                );
                assert!(
                    !run.outcome.is_agreement(),
                    "{scheme}: low-bit flip at byte {offset} of message {} went unnoticed",
                    msg_pos + 1
                );
            }
        }
    }
}
