//! Flat `key = value` configuration file, shared by every CLI subcommand.
//!
//! Unknown keys are errors: a typo in a curve parameter should stop the
//! run, not silently fall back to a default. Values stay as written in the
//! file; typed accessors (`resolve_curve`, `cost_model`) do the parsing.

use crate::bench::{CostModel, DEFAULT_HASH_SECONDS, DEFAULT_POINT_MULT_SECONDS};
use crate::ecc::{CurveParams, Point};
use crate::net::SessionConfig;
use num_bigint::BigUint;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct Config {
    /// Curve profile name: a built-in (`TOY-17`, `STD-256`) or `custom`.
    pub curve: String,
    /// Hash algorithm name. Only `sha256` is wired in.
    pub hash: String,
    pub freshness_window_ms: u64,
    pub realm: String,
    /// Directory holding the registration tables and server keys.
    pub db_path: PathBuf,
    /// Handshake capture log, appended to by `login --record`.
    pub transcript_path: PathBuf,
    pub point_mult_seconds: f64,
    pub hash_seconds: f64,
    pub bind_addr: String,
    custom: CustomCurve,
}

/// Raw integers for a `curve = custom` profile, decimal or 0x-hex.
#[derive(Clone, Debug, Default)]
struct CustomCurve {
    name: Option<String>,
    q: Option<BigUint>,
    a: Option<BigUint>,
    b: Option<BigUint>,
    px: Option<BigUint>,
    py: Option<BigUint>,
    n: Option<BigUint>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            curve: "TOY-17".to_string(),
            hash: "sha256".to_string(),
            freshness_window_ms: 5000,
            realm: "hospital.example".to_string(),
            db_path: PathBuf::from("siplab-db"),
            transcript_path: PathBuf::from("transcript.log"),
            point_mult_seconds: DEFAULT_POINT_MULT_SECONDS,
            hash_seconds: DEFAULT_HASH_SECONDS,
            bind_addr: "127.0.0.1:5060".to_string(),
            custom: CustomCurve::default(),
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut config = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value, got {line:?}", idx + 1))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", idx + 1))?;
        }
        Ok(config)
    }

    /// Applies one key/value pair. Also the hook for flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "curve" => self.curve = value.to_string(),
            "hash" => {
                if !value.eq_ignore_ascii_case("sha256") {
                    return Err(format!("hash {value:?} not supported, only sha256"));
                }
                self.hash = "sha256".to_string();
            }
            "freshness_window_ms" => {
                let ms: u64 = value
                    .parse()
                    .map_err(|e| format!("freshness_window_ms {value:?}: {e}"))?;
                if ms == 0 {
                    return Err("freshness_window_ms must be positive".to_string());
                }
                self.freshness_window_ms = ms;
            }
            "realm" => self.realm = value.to_string(),
            "db_path" => self.db_path = PathBuf::from(value),
            "transcript_path" => self.transcript_path = PathBuf::from(value),
            "point_mult_seconds" => self.point_mult_seconds = parse_seconds(key, value)?,
            "hash_seconds" => self.hash_seconds = parse_seconds(key, value)?,
            "bind_addr" => self.bind_addr = value.to_string(),
            "curve_name" => self.custom.name = Some(value.to_string()),
            "curve_q" => self.custom.q = Some(parse_uint(key, value)?),
            "curve_a" => self.custom.a = Some(parse_uint(key, value)?),
            "curve_b" => self.custom.b = Some(parse_uint(key, value)?),
            "curve_px" => self.custom.px = Some(parse_uint(key, value)?),
            "curve_py" => self.custom.py = Some(parse_uint(key, value)?),
            "curve_n" => self.custom.n = Some(parse_uint(key, value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Materializes the configured curve profile, validating it.
    pub fn resolve_curve(&self) -> Result<CurveParams, String> {
        if self.curve.eq_ignore_ascii_case("custom") {
            let take = |field: &Option<BigUint>, name: &str| {
                field.clone().ok_or_else(|| format!("curve = custom requires {name}"))
            };
            let q = take(&self.custom.q, "curve_q")?;
            let a = take(&self.custom.a, "curve_a")?;
            let b = take(&self.custom.b, "curve_b")?;
            let base = Point::Affine {
                x: take(&self.custom.px, "curve_px")?,
                y: take(&self.custom.py, "curve_py")?,
            };
            let n = take(&self.custom.n, "curve_n")?;
            let name = self.custom.name.clone().unwrap_or_else(|| "custom".to_string());
            return CurveParams::new(q, a, b, base, n, &name)
                .map_err(|e| format!("custom curve rejected: {e}"));
        }
        CurveParams::builtin(&self.curve)
            .cloned()
            .ok_or_else(|| format!("unknown curve profile {:?}", self.curve))
    }

    pub fn cost_model(&self) -> Result<CostModel, String> {
        CostModel::new(self.point_mult_seconds, self.hash_seconds)
    }

    /// Curve plus freshness window, the bundle the session layer wants.
    pub fn session_config(&self) -> Result<SessionConfig, String> {
        Ok(SessionConfig { curve: self.resolve_curve()?, window_ms: self.freshness_window_ms })
    }
}

fn parse_seconds(key: &str, value: &str) -> Result<f64, String> {
    let s: f64 = value.parse().map_err(|e| format!("{key} {value:?}: {e}"))?;
    if !s.is_finite() || s <= 0.0 {
        return Err(format!("{key} must be a positive number, got {value}"));
    }
    Ok(s)
}

/// Decimal, or hex with a 0x prefix.
fn parse_uint(key: &str, value: &str) -> Result<BigUint, String> {
    let parsed = if let Some(hex) = value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
        BigUint::parse_bytes(hex.as_bytes(), 16)
    } else {
        BigUint::parse_bytes(value.as_bytes(), 10)
    };
    parsed.ok_or_else(|| format!("{key} {value:?} is not a decimal or 0x-hex integer"))
}
