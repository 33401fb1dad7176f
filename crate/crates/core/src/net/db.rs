//! File persistence for the registration databases and the server keypair.
//!
//! Each scheme's table serializes to its own line-oriented file: one record
//! per line, hex-encoded fields separated by single spaces, lookup key
//! first. Replay caches are runtime state and are not persisted.

use crate::ecc::CurveParams;
use crate::prims::{decode_point, decode_scalar, encode_point, encode_scalar, Digest};
use crate::schemes::enhanced::{EnhancedDb, EnhancedRecord};
use crate::schemes::sureshkumar::{SureshDb, SureshRecord};
use crate::schemes::zhang::{ZhangDb, ZhangRecord};
use crate::schemes::ServerKeys;
use std::fs;
use std::io;
use std::path::Path;

const SURESH_FILE: &str = "sureshkumar.db";
const ZHANG_FILE: &str = "zhang.db";
const ENHANCED_FILE: &str = "enhanced.db";
const SERVER_KEY_FILE: &str = "server.key";
const SERVER_PUB_FILE: &str = "server.pub";

/// All three registration tables, persisted together under one directory.
#[derive(Debug, Default, Clone)]
pub struct LabDb {
    pub suresh: SureshDb,
    pub zhang: ZhangDb,
    pub enhanced: EnhancedDb,
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn read_lines(path: &Path) -> io::Result<Vec<String>> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

fn fields<const N: usize>(line: &str, file: &str) -> io::Result<[Vec<u8>; N]> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != N {
        return Err(bad_data(format!(
            "{file}: expected {N} fields per record, found {}",
            parts.len()
        )));
    }
    let mut out: [Vec<u8>; N] = std::array::from_fn(|_| Vec::new());
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = hex::decode(part).map_err(|e| bad_data(format!("{file}: {e}")))?;
    }
    Ok(out)
}

fn digest_field(bytes: Vec<u8>, file: &str) -> io::Result<Digest> {
    Digest::from_slice(&bytes)
        .ok_or_else(|| bad_data(format!("{file}: key field is not a digest")))
}

impl LabDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads whichever table files exist under `dir`; missing files load
    /// as empty tables.
    pub fn load_dir(dir: &Path, curve: &CurveParams) -> io::Result<Self> {
        let mut db = LabDb::new();

        for line in read_lines(&dir.join(SURESH_FILE))? {
            let [key, verifier, mask] = fields::<3>(&line, SURESH_FILE)?;
            let record = SureshRecord {
                id_hash: digest_field(key, SURESH_FILE)?,
                blinded_verifier: verifier,
                id_pw_mask: mask,
            };
            db.suresh
                .insert(record)
                .map_err(|e| bad_data(format!("{SURESH_FILE}: {e}")))?;
        }

        for line in read_lines(&dir.join(ZHANG_FILE))? {
            let [user_id, verifier] = fields::<2>(&line, ZHANG_FILE)?;
            db.zhang
                .insert(ZhangRecord { user_id, blinded_verifier: verifier })
                .map_err(|e| bad_data(format!("{ZHANG_FILE}: {e}")))?;
        }

        for line in read_lines(&dir.join(ENHANCED_FILE))? {
            let [key, verifier, salt] = fields::<3>(&line, ENHANCED_FILE)?;
            let blind_salt = decode_scalar(&salt, curve)
                .map_err(|e| bad_data(format!("{ENHANCED_FILE}: {e}")))?;
            let record = EnhancedRecord {
                index_key: digest_field(key, ENHANCED_FILE)?,
                blinded_verifier: verifier,
                blind_salt,
            };
            db.enhanced
                .insert(record)
                .map_err(|e| bad_data(format!("{ENHANCED_FILE}: {e}")))?;
        }

        Ok(db)
    }

    /// Writes all three table files under `dir`, creating it if needed.
    pub fn save_dir(&self, dir: &Path, curve: &CurveParams) -> io::Result<()> {
        fs::create_dir_all(dir)?;

        let mut out = String::new();
        for r in self.suresh.records() {
            out.push_str(&format!(
                "{} {} {}\n",
                hex::encode(r.id_hash.as_bytes()),
                hex::encode(&r.blinded_verifier),
                hex::encode(&r.id_pw_mask)
            ));
        }
        fs::write(dir.join(SURESH_FILE), out)?;

        let mut out = String::new();
        for r in self.zhang.records() {
            out.push_str(&format!(
                "{} {}\n",
                hex::encode(&r.user_id),
                hex::encode(&r.blinded_verifier)
            ));
        }
        fs::write(dir.join(ZHANG_FILE), out)?;

        let mut out = String::new();
        for r in self.enhanced.records() {
            out.push_str(&format!(
                "{} {} {}\n",
                hex::encode(r.index_key.as_bytes()),
                hex::encode(&r.blinded_verifier),
                hex::encode(encode_scalar(&r.blind_salt, curve))
            ));
        }
        fs::write(dir.join(ENHANCED_FILE), out)?;

        Ok(())
    }
}

/// Saves the server keypair next to the databases: private scalar and
/// public point, hex, one per file.
pub fn save_server_keys(dir: &Path, keys: &ServerKeys, curve: &CurveParams) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join(SERVER_KEY_FILE),
        format!("{}\n", hex::encode(encode_scalar(keys.private(), curve))),
    )?;
    fs::write(
        dir.join(SERVER_PUB_FILE),
        format!("{}\n", hex::encode(encode_point(keys.public(), curve))),
    )
}

pub fn load_server_keys(dir: &Path, curve: &CurveParams) -> io::Result<ServerKeys> {
    let text = fs::read_to_string(dir.join(SERVER_KEY_FILE))?;
    let bytes = hex::decode(text.trim()).map_err(|e| bad_data(format!("{SERVER_KEY_FILE}: {e}")))?;
    let private = decode_scalar(&bytes, curve)
        .map_err(|e| bad_data(format!("{SERVER_KEY_FILE}: {e}")))?;
    ServerKeys::from_private(private, curve).map_err(|e| bad_data(format!("{SERVER_KEY_FILE}: {e}")))
}

/// Loads just the public half, which is all a client machine holds.
pub fn load_server_public(
    dir: &Path,
    curve: &CurveParams,
) -> io::Result<crate::ecc::Point> {
    let text = fs::read_to_string(dir.join(SERVER_PUB_FILE))?;
    let bytes = hex::decode(text.trim()).map_err(|e| bad_data(format!("{SERVER_PUB_FILE}: {e}")))?;
    decode_point(&bytes, curve).map_err(|e| bad_data(format!("{SERVER_PUB_FILE}: {e}")))
}
