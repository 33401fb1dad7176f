//! `siplab`: drive the authentication schemes from the command line.
//!
//! One binary, seven subcommands: `register` and `login` work against the
//! on-disk registration database; `serve` and `connect` run the same
//! handshakes over TCP; `attack` mounts the ephemeral-leakage attacks on a
//! recorded transcript; `bench` prints the operation-count table; and
//! `selftest` runs the exhaustive small-curve invariant suite.
//!
//! Exit codes: 0 on success, 1 when a handshake or attack fails at the
//! protocol level, 2 on usage or configuration errors.

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::SeedableRng;
use siplab_core::adversary::{
    attack_enhanced_joint, attack_sureshkumar, attack_zhang, Dictionary, DictionaryKind,
    LeakedEphemerals,
};
use siplab_core::bench::{full_report, static_table};
use siplab_core::config::Config;
use siplab_core::net::db::{load_server_keys, load_server_public, save_server_keys};
use siplab_core::net::transcript::{append_session, read_log, to_transcript, LogMeta};
use siplab_core::net::{
    connect, register_user, run_session, serve, ChannelScript, ClientError, Clock, LabDb,
    Outcome, ServerEnv, SessionConfig, SystemClock, UserAccount,
};
use siplab_core::prims::{decode_scalar, encode_scalar, hash};
use siplab_core::schemes::enhanced::EnhancedEnrollment;
use siplab_core::schemes::{Credentials, SchemeId, ServerKeys};
use siplab_core::selftest;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "siplab",
    about = "Protocol laboratory for ECC-based SIP authentication schemes",
    version
)]
struct Cli {
    /// Configuration file (flat key = value). Flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Curve profile: TOY-17, STD-256, or custom (from the config file).
    #[arg(long, global = true)]
    curve: Option<String>,

    /// Directory holding the registration tables and server keys.
    #[arg(long, global = true, value_name = "DIR")]
    db: Option<PathBuf>,

    /// Freshness window in milliseconds.
    #[arg(long, global = true)]
    window_ms: Option<u64>,

    /// Realm the server announces (zhang scheme).
    #[arg(long, global = true)]
    realm: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SchemeArg {
    /// Scheme: sureshkumar, zhang, or enhanced.
    #[arg(long)]
    scheme: String,
}

#[derive(Subcommand)]
enum Command {
    /// Register a user in the database directory, creating server keys on
    /// first use.
    Register {
        #[command(flatten)]
        scheme: SchemeArg,
        #[arg(long)]
        id: String,
        #[arg(long)]
        pw: String,
    },
    /// Run one in-memory handshake against the stored database.
    Login {
        #[command(flatten)]
        scheme: SchemeArg,
        #[arg(long)]
        id: String,
        #[arg(long)]
        pw: String,
        /// Append the session's frames to the transcript log.
        #[arg(long)]
        record: bool,
        /// Print the session's ephemeral scalars, simulating their leakage.
        #[arg(long)]
        leak_ephemerals: bool,
        /// Seed for both parties' randomness (user takes seed, server seed+1).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve handshakes over TCP until interrupted.
    Serve {
        #[command(flatten)]
        scheme: SchemeArg,
        /// Listen address, overriding bind_addr from the config.
        #[arg(long)]
        bind: Option<String>,
        /// Stop after this many milliseconds and print the session log.
        #[arg(long)]
        duration_ms: Option<u64>,
    },
    /// Handshake against a running server and send one encrypted alert.
    Connect {
        #[command(flatten)]
        scheme: SchemeArg,
        #[arg(long)]
        id: String,
        #[arg(long)]
        pw: String,
        /// Server address, overriding bind_addr from the config.
        #[arg(long)]
        addr: Option<String>,
        /// Alert text to send under the session key.
        #[arg(long, default_value = "patient alert: check ward 3")]
        alert: String,
    },
    /// Attack a recorded session using a leaked user ephemeral.
    Attack {
        #[command(flatten)]
        scheme: SchemeArg,
        /// Transcript log, overriding transcript_path from the config.
        #[arg(long, value_name = "FILE")]
        transcript: Option<PathBuf>,
        /// Session id inside the log. Defaults to the most recent session.
        #[arg(long)]
        session: Option<u64>,
        /// The leaked user-side ephemeral scalar, hex.
        #[arg(long, value_name = "HEX")]
        leak_ru: String,
        /// Identity dictionary, one candidate per line.
        #[arg(long, value_name = "FILE")]
        id_dict: Option<PathBuf>,
        /// Password dictionary, one candidate per line.
        #[arg(long, value_name = "FILE")]
        pw_dict: Option<PathBuf>,
    },
    /// Print the per-scheme operation counts and estimated runtimes.
    Bench {
        /// Also measure real handshakes, this many iterations per scheme.
        #[arg(long)]
        iterations: Option<u32>,
        /// Emit CSV instead of the aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// Run the built-in invariant suite on the exhaustively checked curve.
    Selftest,
}

/// Failures after argument parsing. Usage problems exit 2, protocol-level
/// rejections exit 1.
enum Failure {
    Usage(String),
    Rejected(String),
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Usage(msg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(curve) = &cli.curve {
        config.curve = curve.clone();
    }
    if let Some(db) = &cli.db {
        config.db_path = db.clone();
    }
    if let Some(ms) = cli.window_ms {
        if ms == 0 {
            return Err(Failure::Usage("--window-ms must be positive".into()));
        }
        config.freshness_window_ms = ms;
    }
    if let Some(realm) = &cli.realm {
        config.realm = realm.clone();
    }

    match cli.command {
        Command::Register { scheme, id, pw } => cmd_register(&config, &scheme.scheme, &id, &pw),
        Command::Login { scheme, id, pw, record, leak_ephemerals, seed } => {
            cmd_login(&config, &scheme.scheme, &id, &pw, record, leak_ephemerals, seed)
        }
        Command::Serve { scheme, bind, duration_ms } => {
            cmd_serve(&config, &scheme.scheme, bind.as_deref(), duration_ms)
        }
        Command::Connect { scheme, id, pw, addr, alert } => {
            cmd_connect(&config, &scheme.scheme, &id, &pw, addr.as_deref(), &alert)
        }
        Command::Attack { scheme, transcript, session, leak_ru, id_dict, pw_dict } => cmd_attack(
            &config,
            &scheme.scheme,
            transcript.as_deref(),
            session,
            &leak_ru,
            id_dict.as_deref(),
            pw_dict.as_deref(),
        ),
        Command::Bench { iterations, csv } => cmd_bench(&config, iterations, csv),
        Command::Selftest => cmd_selftest(),
    }
}

fn parse_scheme(name: &str) -> Result<SchemeId, Failure> {
    SchemeId::parse(name).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown scheme {name:?}; expected sureshkumar, zhang, or enhanced"
        ))
    })
}

fn credentials(id: &str, pw: &str) -> Result<Credentials, Failure> {
    Credentials::new(id, pw).map_err(|e| Failure::Usage(e.to_string()))
}

/// Loads the server environment from the database directory, creating the
/// directory and a fresh keypair on first use when `create` is set.
fn load_env(config: &Config, cfg: &SessionConfig, create: bool) -> Result<ServerEnv, Failure> {
    let dir = &config.db_path;
    let keys = match load_server_keys(dir, &cfg.curve) {
        Ok(keys) => keys,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && create => {
            let keys = ServerKeys::generate(&mut StdRng::from_entropy(), &cfg.curve);
            save_server_keys(dir, &keys, &cfg.curve)
                .map_err(|e| Failure::Usage(format!("writing server keys: {e}")))?;
            keys
        }
        Err(e) => {
            return Err(Failure::Usage(format!(
                "server keys in {}: {e} (run `register` first)",
                dir.display()
            )))
        }
    };
    let db = LabDb::load_dir(dir, &cfg.curve)
        .map_err(|e| Failure::Usage(format!("database in {}: {e}", dir.display())))?;
    Ok(ServerEnv { keys, db, realm: config.realm.clone().into_bytes() })
}

/// The account as the user's device holds it. The enhanced scheme's
/// enrollment artifact is the identity hash handed over at registration;
/// it is recomputed here rather than stored client-side.
fn account_for(scheme: SchemeId, creds: Credentials) -> UserAccount {
    let enrollment = (scheme == SchemeId::Enhanced)
        .then(|| EnhancedEnrollment { id_hash: hash(&[creds.id()]) });
    UserAccount { creds, enrollment }
}

fn cmd_register(config: &Config, scheme: &str, id: &str, pw: &str) -> Result<(), Failure> {
    let scheme = parse_scheme(scheme)?;
    let cfg = config.session_config()?;
    let creds = credentials(id, pw)?;
    let mut env = load_env(config, &cfg, true)?;
    register_user(&cfg, scheme, &creds, &mut env, &mut StdRng::from_entropy())
        .map_err(|e| Failure::Rejected(format!("registration rejected: {e}")))?;
    env.db
        .save_dir(&config.db_path, &cfg.curve)
        .map_err(|e| Failure::Usage(format!("writing database: {e}")))?;
    println!("registered {id} for {scheme} in {}", config.db_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_login(
    config: &Config,
    scheme: &str,
    id: &str,
    pw: &str,
    record: bool,
    leak_ephemerals: bool,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let scheme = parse_scheme(scheme)?;
    let cfg = config.session_config()?;
    let mut env = load_env(config, &cfg, false)?;
    let account = account_for(scheme, credentials(id, pw)?);

    let (mut user_rng, mut server_rng) = match seed {
        Some(s) => (StdRng::seed_from_u64(s), StdRng::seed_from_u64(s.wrapping_add(1))),
        None => (StdRng::from_entropy(), StdRng::from_entropy()),
    };
    let run = run_session(
        &cfg,
        scheme,
        &account,
        &mut env,
        ChannelScript::honest(),
        &SystemClock,
        &mut user_rng,
        &mut server_rng,
    );

    if record {
        let meta = LogMeta::for_env(scheme, &cfg, &env);
        let id = append_session(&config.transcript_path, &meta, &run.frames)
            .map_err(|e| Failure::Usage(format!("writing transcript: {e}")))?;
        println!("recorded session {id} in {}", config.transcript_path.display());
    }
    if leak_ephemerals {
        println!("leaked r_u = {}", hex::encode(encode_scalar(&run.user_ephemeral, &cfg.curve)));
        println!("leaked r_s = {}", hex::encode(encode_scalar(&run.server_ephemeral, &cfg.curve)));
    }

    match run.outcome {
        Outcome::KeysAgree { user_key, server_key } => {
            debug_assert_eq!(user_key, server_key);
            println!("keys agree, fingerprint {}", user_key.fingerprint());
            Ok(())
        }
        Outcome::Rejected { error, by } => {
            Err(Failure::Rejected(format!("rejected by {by:?}: {error}")))
        }
    }
}

fn cmd_serve(
    config: &Config,
    scheme: &str,
    bind: Option<&str>,
    duration_ms: Option<u64>,
) -> Result<(), Failure> {
    let scheme = parse_scheme(scheme)?;
    let cfg = config.session_config()?;
    let env = load_env(config, &cfg, false)?;
    let bind = bind.unwrap_or(&config.bind_addr);
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let handle = serve(bind, scheme, cfg, env, clock, StdRng::from_entropy())
        .map_err(|e| Failure::Usage(format!("cannot bind {bind}: {e}")))?;
    println!("listening on {} for {scheme}", handle.addr());

    match duration_ms {
        Some(ms) => thread::sleep(Duration::from_millis(ms)),
        None => loop {
            thread::sleep(Duration::from_secs(3600));
        },
    }
    for line in handle.shutdown() {
        println!("{line}");
    }
    Ok(())
}

fn cmd_connect(
    config: &Config,
    scheme: &str,
    id: &str,
    pw: &str,
    addr: Option<&str>,
    alert: &str,
) -> Result<(), Failure> {
    let scheme = parse_scheme(scheme)?;
    let cfg = config.session_config()?;
    let server_public = load_server_public(&config.db_path, &cfg.curve).map_err(|e| {
        Failure::Usage(format!(
            "server public key in {}: {e} (run `register` first)",
            config.db_path.display()
        ))
    })?;
    let account = account_for(scheme, credentials(id, pw)?);
    let addr = addr.unwrap_or(&config.bind_addr);

    let session = connect(
        addr,
        scheme,
        &cfg,
        &account,
        &server_public,
        &SystemClock,
        &mut StdRng::from_entropy(),
        Some(alert.as_bytes()),
    )
    .map_err(|e| match e {
        ClientError::Protocol(p) => Failure::Rejected(format!("server rejected the session: {p}")),
        ClientError::Io(io) => Failure::Rejected(format!("transport to {addr}: {io}")),
    })?;
    println!("keys agree, fingerprint {}", session.key.fingerprint());
    println!("sent encrypted alert ({} bytes)", alert.len());
    Ok(())
}

fn load_dict(kind: DictionaryKind, path: Option<&Path>, flag: &str) -> Result<Dictionary, Failure> {
    let path = path.ok_or_else(|| Failure::Usage(format!("this attack needs {flag}")))?;
    Dictionary::from_file(kind, path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_attack(
    config: &Config,
    scheme: &str,
    transcript: Option<&Path>,
    session: Option<u64>,
    leak_ru: &str,
    id_dict: Option<&Path>,
    pw_dict: Option<&Path>,
) -> Result<(), Failure> {
    let scheme = parse_scheme(scheme)?;
    let path = transcript.unwrap_or(&config.transcript_path);
    let (meta, sessions) = read_log(path)
        .map_err(|e| Failure::Usage(format!("transcript {}: {e}", path.display())))?;
    let logged = match session {
        Some(id) => sessions
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Failure::Usage(format!("no session {id} in {}", path.display())))?,
        None => sessions
            .last()
            .ok_or_else(|| Failure::Usage(format!("{} holds no sessions", path.display())))?,
    };

    let curve = resolve_log_curve(config, &meta.curve_name)?;
    let ru_bytes = hex::decode(leak_ru)
        .map_err(|e| Failure::Usage(format!("--leak-ru is not hex: {e}")))?;
    let r_u = decode_scalar(&ru_bytes, &curve)
        .map_err(|e| Failure::Usage(format!("--leak-ru: {e}")))?;

    let leaked = LeakedEphemerals { user_scalar: Some(r_u.clone()), server_scalar: None };
    let t = to_transcript(&meta, logged, &curve, leaked)
        .map_err(|e| Failure::Usage(format!("transcript {}: {e}", path.display())))?;

    let report = match scheme {
        SchemeId::Sureshkumar => {
            let ids = load_dict(DictionaryKind::Identity, id_dict, "--id-dict")?;
            let pws = load_dict(DictionaryKind::Password, pw_dict, "--pw-dict")?;
            attack_sureshkumar(&t, &r_u, &ids, &pws)
        }
        SchemeId::Zhang => {
            let pws = load_dict(DictionaryKind::Password, pw_dict, "--pw-dict")?;
            attack_zhang(&t, &r_u, &pws)
        }
        SchemeId::Enhanced => {
            let ids = load_dict(DictionaryKind::Identity, id_dict, "--id-dict")?;
            let pws = load_dict(DictionaryKind::Password, pw_dict, "--pw-dict")?;
            attack_enhanced_joint(&t, &r_u, &ids, &pws)
        }
    }
    .map_err(|e| Failure::Usage(format!("attack preconditions: {e}")))?;

    print!("{}", report.render());
    if report.success {
        Ok(())
    } else {
        Err(Failure::Rejected("attack failed: credentials not recovered".into()))
    }
}

/// Resolves the curve a transcript names, honoring a custom profile from
/// the config file when the names line up.
fn resolve_log_curve(
    config: &Config,
    name: &str,
) -> Result<siplab_core::ecc::CurveParams, Failure> {
    if let Some(builtin) = siplab_core::ecc::CurveParams::builtin(name) {
        return Ok(builtin.clone());
    }
    let configured = config.resolve_curve()?;
    if configured.profile_name == name {
        return Ok(configured);
    }
    Err(Failure::Usage(format!(
        "transcript was recorded on curve {name:?}, which is neither built in nor the configured profile"
    )))
}

fn cmd_bench(config: &Config, iterations: Option<u32>, csv: bool) -> Result<(), Failure> {
    let model = config.cost_model()?;
    let curve = config.resolve_curve()?;
    let mut rng = StdRng::from_entropy();
    let report = match iterations {
        Some(n) if n > 0 => full_report(&model, &curve, n, &mut rng),
        Some(_) => return Err(Failure::Usage("--iterations must be positive".into())),
        None => static_table(&model, &mut rng),
    };
    if csv {
        print!("{}", report.render_csv());
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

fn cmd_selftest() -> Result<(), Failure> {
    match selftest::run() {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            println!("selftest passed");
            Ok(())
        }
        Err(msg) => Err(Failure::Rejected(format!("selftest failed: {msg}"))),
    }
}
