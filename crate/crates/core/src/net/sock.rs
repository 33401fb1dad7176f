//! Threaded TCP transport: a server accepting concurrent sessions and a
//! client that performs one handshake and optionally sends an encrypted
//! alert under the established key.
//!
//! Frames on the socket are identical to the in-memory harness frames. A
//! protocol rejection is answered with a one-byte error frame (coarse code
//! only) before the connection closes.

use super::clock::Clock;
use super::frame::{Frame, MSG_ALERT};
use super::session::{Direction, ServerEnv, SessionConfig, UserAccount};
use crate::ecc::{random_scalar, Point, Scalar};
use crate::prims::{hash, put_var, Reader, Tally, DIGEST_LEN};
use crate::schemes::enhanced::{self, EnhancedM1};
use crate::schemes::sureshkumar::{self, SureshM1};
use crate::schemes::zhang::{self, ZhangM1, ZhangM2, ZhangM3};
use crate::schemes::{Ctx, KeyConfirm, ProtocolError, SchemeId, ServerChallenge, SessionKey};
use rand::rngs::StdRng;
use rand::RngCore;
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

/// How long either end waits on a read before giving up on the peer.
const READ_TIMEOUT: Duration = Duration::from_secs(5);
/// Accept-loop poll interval while waiting for connections or shutdown.
const ACCEPT_POLL: Duration = Duration::from_millis(5);

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Protocol(#[from] ProtocolError),
}

/// A running server. Dropping the handle signals shutdown; `shutdown()`
/// waits for the accept loop and all connection threads to finish.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
    logs: Arc<Mutex<Vec<String>>>,
    env: Arc<Mutex<ServerEnv>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Snapshot of the connection log so far.
    pub fn logs(&self) -> Vec<String> {
        self.logs.lock().expect("log lock").clone()
    }

    /// The server's shared state; lets the owner persist the registration
    /// tables after the server stops.
    pub fn env(&self) -> Arc<Mutex<ServerEnv>> {
        Arc::clone(&self.env)
    }

    /// Stops accepting, waits for in-flight sessions, returns the full log.
    pub fn shutdown(mut self) -> Vec<String> {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
        self.logs()
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `bind_addr` and serves `scheme` handshakes until shut down. Each
/// connection runs on its own thread; the registration tables sit behind a
/// single lock, held only while a scheme step touches them.
pub fn serve(
    bind_addr: &str,
    scheme: SchemeId,
    cfg: SessionConfig,
    env: ServerEnv,
    clock: Arc<dyn Clock>,
    rng: StdRng,
) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(bind_addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;

    let stop = Arc::new(AtomicBool::new(false));
    let logs = Arc::new(Mutex::new(Vec::new()));
    let env = Arc::new(Mutex::new(env));
    let rng = Arc::new(Mutex::new(rng));
    let next_conn = Arc::new(AtomicU64::new(1));

    let accept_thread = {
        let stop = Arc::clone(&stop);
        let logs = Arc::clone(&logs);
        let env = Arc::clone(&env);
        let rng = Arc::clone(&rng);
        let next_conn = Arc::clone(&next_conn);
        thread::spawn(move || {
            let mut workers: Vec<JoinHandle<()>> = Vec::new();
            while !stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let conn_id = next_conn.fetch_add(1, Ordering::SeqCst);
                        let cfg = cfg.clone();
                        let logs = Arc::clone(&logs);
                        let env = Arc::clone(&env);
                        let rng = Arc::clone(&rng);
                        let clock = Arc::clone(&clock);
                        workers.push(thread::spawn(move || {
                            handle_connection(stream, conn_id, scheme, &cfg, &env, &*clock, &rng, &logs);
                        }));
                    }
                    Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                        thread::sleep(ACCEPT_POLL);
                    }
                    Err(_) => break,
                }
            }
            for w in workers {
                let _ = w.join();
            }
        })
    };

    Ok(ServerHandle { addr, stop, accept_thread: Some(accept_thread), logs, env })
}

fn log_line(logs: &Mutex<Vec<String>>, line: String) {
    logs.lock().expect("log lock").push(line);
}

/// Runs the server side of one connection: handshake, then an optional
/// encrypted alert, then close.
#[allow(clippy::too_many_arguments)]
fn handle_connection(
    mut stream: TcpStream,
    conn_id: u64,
    scheme: SchemeId,
    cfg: &SessionConfig,
    env: &Mutex<ServerEnv>,
    clock: &dyn Clock,
    rng: &Mutex<StdRng>,
    logs: &Mutex<Vec<String>>,
) {
    let _ = stream.set_read_timeout(Some(READ_TIMEOUT));
    let _ = stream.set_nodelay(true);

    match serve_handshake(&mut stream, conn_id, scheme, cfg, env, clock, rng, logs) {
        Ok(Some(key)) => {
            // Handshake done; wait for one optional alert before closing.
            match Frame::read_from(&mut stream) {
                Ok(Some(frame)) if frame.msg_index == MSG_ALERT => {
                    match open_alert(&key, &frame.payload) {
                        Ok(plaintext) => log_line(
                            logs,
                            format!(
                                "conn {conn_id}: alert {}",
                                String::from_utf8_lossy(&plaintext)
                            ),
                        ),
                        Err(e) => log_line(logs, format!("conn {conn_id}: bad alert: {e}")),
                    }
                }
                Ok(Some(frame)) => {
                    log_line(logs, format!(
                        "conn {conn_id}: unexpected message {} after handshake",
                        frame.msg_index
                    ));
                }
                Ok(None) => {}
                Err(_) => {}
            }
        }
        Ok(None) => {}
        Err(e) => log_line(logs, format!("conn {conn_id}: transport error: {e}")),
    }
}

/// The handshake proper. `Ok(Some(key))` on success, `Ok(None)` when the
/// session was rejected (the error frame has already been sent).
#[allow(clippy::too_many_arguments)]
fn serve_handshake(
    stream: &mut TcpStream,
    conn_id: u64,
    scheme: SchemeId,
    cfg: &SessionConfig,
    env: &Mutex<ServerEnv>,
    clock: &dyn Clock,
    rng: &Mutex<StdRng>,
    logs: &Mutex<Vec<String>>,
) -> io::Result<Option<SessionKey>> {
    let tally = Tally::new();
    let sc = Ctx::new(&cfg.curve, cfg.window_ms, &tally);

    let reject = |stream: &mut TcpStream, err: ProtocolError| -> io::Result<Option<SessionKey>> {
        log_line(logs, format!("conn {conn_id}: rejected: {err}"));
        Frame::error(scheme, &err).write_to(stream)?;
        Ok(None)
    };

    let f1 = match Frame::read_from(stream)? {
        Some(f) => f,
        None => {
            log_line(logs, format!("conn {conn_id}: closed before hello"));
            return Ok(None);
        }
    };
    if f1.scheme() != Some(scheme) || f1.msg_index != 1 {
        return reject(stream, ProtocolError::Malformed("expected the first message".into()));
    }

    let r_s = random_scalar(&mut *rng.lock().expect("rng lock"), &cfg.curve);

    macro_rules! try_proto {
        ($stream:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => return reject($stream, e.into()),
            }
        };
    }

    let key = match scheme {
        SchemeId::Sureshkumar => {
            let m1 = try_proto!(stream, SureshM1::decode(&f1.payload, &cfg.curve));
            let now = clock.now();
            let (m2, sstate) = {
                let mut guard = env.lock().expect("env lock");
                let guard = &mut *guard;
                try_proto!(
                    stream,
                    sureshkumar::server_respond(
                        &m1,
                        &mut guard.db.suresh,
                        &guard.keys,
                        now,
                        now,
                        r_s,
                        &sc
                    )
                )
            };
            Frame::new(scheme, 2, m2.encode(&cfg.curve)).write_to(stream)?;

            let f3 = match Frame::read_from(stream)? {
                Some(f) if f.msg_index == 3 => f,
                Some(_) | None => {
                    return reject(stream, ProtocolError::TransportClosed);
                }
            };
            let m3 = try_proto!(stream, KeyConfirm::decode(&f3.payload));
            try_proto!(stream, sureshkumar::server_confirm(&m3, &sstate, &sc))
        }
        SchemeId::Zhang => {
            let m1 = try_proto!(stream, ZhangM1::decode(&f1.payload, &cfg.curve));
            let (m2, sstate) = {
                let guard = env.lock().expect("env lock");
                let realm = guard.realm.clone();
                try_proto!(
                    stream,
                    zhang::server_challenge(&m1, &guard.keys, &realm, r_s, &sc)
                )
            };
            Frame::new(scheme, 2, m2.encode(&cfg.curve)).write_to(stream)?;

            let f3 = match Frame::read_from(stream)? {
                Some(f) if f.msg_index == 3 => f,
                Some(_) | None => {
                    return reject(stream, ProtocolError::TransportClosed);
                }
            };
            let m3 = try_proto!(stream, ZhangM3::decode(&f3.payload));
            let guard = env.lock().expect("env lock");
            try_proto!(stream, zhang::server_verify(&m3, &sstate, &guard.db.zhang, &guard.keys, &sc))
        }
        SchemeId::Enhanced => {
            let m1 = try_proto!(stream, EnhancedM1::decode(&f1.payload, &cfg.curve));
            let now = clock.now();
            let (m2, sstate) = {
                let mut guard = env.lock().expect("env lock");
                let guard = &mut *guard;
                try_proto!(
                    stream,
                    enhanced::server_respond(
                        &m1,
                        &mut guard.db.enhanced,
                        &guard.keys,
                        now,
                        now,
                        r_s,
                        &sc
                    )
                )
            };
            Frame::new(scheme, 2, m2.encode(&cfg.curve)).write_to(stream)?;

            let f3 = match Frame::read_from(stream)? {
                Some(f) if f.msg_index == 3 => f,
                Some(_) | None => {
                    return reject(stream, ProtocolError::TransportClosed);
                }
            };
            let m3 = try_proto!(stream, KeyConfirm::decode(&f3.payload));
            try_proto!(stream, enhanced::server_confirm(&m3, &sstate, &sc))
        }
    };

    log_line(logs, format!("conn {conn_id}: {scheme} key {}", key.fingerprint()));
    Ok(Some(key))
}

/// One completed client handshake.
#[derive(Debug)]
pub struct ClientSession {
    pub key: SessionKey,
    pub frames: Vec<(Direction, Frame)>,
    pub user_ephemeral: Scalar,
}

/// Performs the handshake against a listening server and, if `alert` is
/// given, sends it encrypted under the established key.
#[allow(clippy::too_many_arguments)]
pub fn connect(
    addr: &str,
    scheme: SchemeId,
    cfg: &SessionConfig,
    account: &UserAccount,
    server_public: &Point,
    clock: &dyn Clock,
    rng: &mut dyn RngCore,
    alert: Option<&[u8]>,
) -> Result<ClientSession, ClientError> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    stream.set_nodelay(true)?;

    let curve = &cfg.curve;
    let tally = Tally::new();
    let uc = Ctx::new(curve, cfg.window_ms, &tally);
    let r_u = random_scalar(rng, curve);
    let mut frames = Vec::new();

    enum UserHalf {
        Suresh(sureshkumar::SureshUserState),
        Zhang(zhang::ZhangUserState),
        Enhanced(enhanced::EnhancedUserState),
    }

    let (m1_payload, half) = match scheme {
        SchemeId::Sureshkumar => {
            let (m1, state) = sureshkumar::user_start(
                &account.creds,
                server_public,
                clock.now(),
                r_u.clone(),
                &uc,
            )?;
            (m1.encode(curve), UserHalf::Suresh(state))
        }
        SchemeId::Zhang => {
            let (m1, state) =
                zhang::user_start(&account.creds, server_public, r_u.clone(), &uc)?;
            (m1.encode(curve), UserHalf::Zhang(state))
        }
        SchemeId::Enhanced => {
            let enrollment = account.enrollment.as_ref().ok_or(
                ProtocolError::InvalidCredentials(
                    "account holds no enrollment for the hardened scheme",
                ),
            )?;
            let (m1, state) = enhanced::user_start(
                &account.creds,
                enrollment,
                server_public,
                clock.now(),
                r_u.clone(),
                &uc,
            )?;
            (m1.encode(curve), UserHalf::Enhanced(state))
        }
    };

    let f1 = Frame::new(scheme, 1, m1_payload);
    f1.write_to(&mut stream)?;
    frames.push((Direction::UserToServer, f1));

    let f2 = Frame::read_from(&mut stream)?.ok_or(ProtocolError::TransportClosed)?;
    if let Some(err) = f2.as_error() {
        return Err(err.into());
    }
    if f2.msg_index != 2 {
        return Err(ProtocolError::Malformed("expected the server challenge".into()).into());
    }
    frames.push((Direction::ServerToUser, f2.clone()));

    let (m3_payload, key) = match half {
        UserHalf::Suresh(state) => {
            let m2 = ServerChallenge::decode(&f2.payload, curve)?;
            let (m3, key) = sureshkumar::user_finish(&m2, &state, clock.now(), &uc)?;
            (m3.encode(), key)
        }
        UserHalf::Zhang(state) => {
            let m2 = ZhangM2::decode(&f2.payload, curve)?;
            let (m3, key) = zhang::user_finish(&m2, &state, &uc)?;
            (m3.encode(), key)
        }
        UserHalf::Enhanced(state) => {
            let m2 = ServerChallenge::decode(&f2.payload, curve)?;
            let (m3, key) = enhanced::user_finish(&m2, &state, clock.now(), &uc)?;
            (m3.encode(), key)
        }
    };

    let f3 = Frame::new(scheme, 3, m3_payload);
    f3.write_to(&mut stream)?;
    frames.push((Direction::UserToServer, f3));

    if let Some(plaintext) = alert {
        let sealed = seal_alert(&key, plaintext);
        Frame::new(scheme, MSG_ALERT, sealed).write_to(&mut stream)?;
    }

    Ok(ClientSession { key, frames, user_ephemeral: r_u })
}

/// Encrypts and authenticates a short message under the session key:
/// a hash-counter keystream under h(key || "enc"), then a tag under
/// h(key || "mac") over the ciphertext.
pub fn seal_alert(key: &SessionKey, plaintext: &[u8]) -> Vec<u8> {
    let enc_key = hash(&[key.digest().as_bytes(), b"enc"]);
    let mac_key = hash(&[key.digest().as_bytes(), b"mac"]);

    let mut ciphertext = Vec::with_capacity(plaintext.len());
    for (block_index, chunk) in plaintext.chunks(DIGEST_LEN).enumerate() {
        let block = hash(&[enc_key.as_bytes(), &(block_index as u32).to_be_bytes()]);
        for (byte, pad) in chunk.iter().zip(block.as_bytes()) {
            ciphertext.push(byte ^ pad);
        }
    }
    let tag = hash(&[mac_key.as_bytes(), &ciphertext]);

    let mut sealed = Vec::with_capacity(4 + ciphertext.len() + DIGEST_LEN);
    put_var(&mut sealed, &ciphertext);
    sealed.extend_from_slice(tag.as_bytes());
    sealed
}

/// Verifies the tag, then strips the keystream. Tag first: nothing is
/// decrypted unless the ciphertext authenticates.
pub fn open_alert(key: &SessionKey, sealed: &[u8]) -> Result<Vec<u8>, ProtocolError> {
    let mut r = Reader::new(sealed);
    let ciphertext = r.take_var().map_err(ProtocolError::Malformed)?.to_vec();
    let tag = r.take(DIGEST_LEN).map_err(ProtocolError::Malformed)?.to_vec();
    r.finish().map_err(ProtocolError::Malformed)?;

    let mac_key = hash(&[key.digest().as_bytes(), b"mac"]);
    let expected = hash(&[mac_key.as_bytes(), &ciphertext]);
    if expected.as_bytes() != tag.as_slice() {
        return Err(ProtocolError::AuthFailure);
    }

    let enc_key = hash(&[key.digest().as_bytes(), b"enc"]);
    let mut plaintext = Vec::with_capacity(ciphertext.len());
    for (block_index, chunk) in ciphertext.chunks(DIGEST_LEN).enumerate() {
        let block = hash(&[enc_key.as_bytes(), &(block_index as u32).to_be_bytes()]);
        for (byte, pad) in chunk.iter().zip(block.as_bytes()) {
            plaintext.push(byte ^ pad);
        }
    }
    Ok(plaintext)
}
