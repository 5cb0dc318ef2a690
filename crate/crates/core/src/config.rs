//! JSON configuration documents.
//!
//! All keys are optional; missing keys take the defaults below and unknown
//! keys are rejected.
//!
//! ```json
//! {
//!   "input_state": {"alpha_re": 0.70710678, "alpha_im": 0, "beta_re": 0.70710678, "beta_im": 0},
//!   "fiber_length_m": 10000,
//!   "wavelength_nm": 1550,
//!   "noise": {"sigma_dphi": 0.1, "mean_segment_m": 10, "spread": 0.5},
//!   "sequence": "XY4",
//!   "num_waveplates": 1000,
//!   "waveplate": {"profile": "tanh", "a": 8, "width": 2},
//!   "error_mode": {"calibrated_kappa": 0.07853981633974483},
//!   "realizations": 500,
//!   "master_seed": 1
//! }
//! ```
//!
//! `noise` takes exactly one of `sigma_dn` / `sigma_dphi`; `error_mode` takes
//! exactly one of `direct_epsilon` / `calibrated_kappa`. Profiles are
//! `gaussian` (`x0`, `sigma`, `width`), `rectangular` (`width`), `tanh` (`a`)
//! and `ideal`.

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::polarization::{PureState, RotationAxis};
use crate::schedule::SequenceKind;
use crate::waveplate::{ErrorMode, RefractiveIndexProfile, WaveplateSpec, REFERENCE_KAPPA};

pub const DEFAULT_FIBER_LENGTH_M: f64 = 10_000.0;
pub const DEFAULT_WAVELENGTH_NM: f64 = 1550.0;
pub const DEFAULT_REALIZATIONS: usize = 500;
pub const DEFAULT_NUM_WAVEPLATES: usize = 1000;
pub const DEFAULT_SIGMA_DPHI: f64 = 0.1;
pub const DEFAULT_MEAN_SEGMENT_M: f64 = 10.0;
pub const DEFAULT_SPREAD: f64 = 0.5;
pub const DEFAULT_MASTER_SEED: u64 = 1;
pub const DEFAULT_PROFILE_WIDTH: f64 = 2.0;
pub const DEFAULT_GAUSSIAN_X0: f64 = 1.0;
pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 1.8;
pub const DEFAULT_TANH_A: f64 = 8.0;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    input_state: Option<RawState>,
    fiber_length_m: Option<f64>,
    wavelength_nm: Option<f64>,
    noise: Option<RawNoise>,
    sequence: Option<String>,
    num_waveplates: Option<i64>,
    waveplate: Option<RawWaveplate>,
    error_mode: Option<RawErrorMode>,
    realizations: Option<i64>,
    master_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    alpha_re: Option<f64>,
    alpha_im: Option<f64>,
    beta_re: Option<f64>,
    beta_im: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma_dn: Option<f64>,
    sigma_dphi: Option<f64>,
    mean_segment_m: Option<f64>,
    spread: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaveplate {
    profile: Option<String>,
    x0: Option<f64>,
    sigma: Option<f64>,
    a: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawErrorMode {
    direct_epsilon: Option<f64>,
    calibrated_kappa: Option<f64>,
}

fn invalid(key: &str, constraint: impl Into<String>) -> Error {
    Error::ConfigValidation {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidArgument(msg) => invalid(key, msg),
        other => other,
    })
}

/// Parses a JSON document into a validated configuration.
pub fn parse_config(document: &str) -> Result<SimConfig> {
    parse_config_with_overrides(document, &[])
}

/// Parses a document, then applies `key=value` overrides (dotted keys, JSON values;
/// anything that is not valid JSON is taken as a string).
pub fn parse_config_with_overrides(document: &str, overrides: &[String]) -> Result<SimConfig> {
    let mut value = parse_document(document)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    config_from_value(value)
}

fn parse_document(document: &str) -> Result<Value> {
    let value: Value = if document.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(document).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?
    };
    if !value.is_object() {
        return Err(Error::ConfigParse {
            line: 1,
            column: 1,
            message: "configuration must be a JSON object".into(),
        });
    }
    Ok(value)
}

/// Keys that exclude each other; setting one through an override drops the other.
const EXCLUSIVE: [(&str, &str); 2] = [
    ("noise.sigma_dn", "noise.sigma_dphi"),
    ("error_mode.direct_epsilon", "error_mode.calibrated_kappa"),
];

/// Applies one `dotted.key=value` override to a raw document.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(assignment, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(invalid(assignment, "override key is empty"));
    }
    let value = serde_json::from_str::<Value>(raw.trim())
        .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    for (a, b) in EXCLUSIVE {
        let other = if key == a {
            Some(b)
        } else if key == b {
            Some(a)
        } else {
            None
        };
        if let Some(other) = other {
            let (parent, leaf) = other.split_once('.').unwrap();
            if let Some(Value::Object(m)) = doc.get_mut(parent) {
                m.remove(leaf);
            }
        }
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| invalid(key, "cannot descend into a non-object"))?;
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    cur.as_object_mut()
        .ok_or_else(|| invalid(key, "cannot descend into a non-object"))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn config_from_value(value: Value) -> Result<SimConfig> {
    let raw: RawConfig =
        serde_json::from_value(value).map_err(|e| invalid("<document>", e.to_string()))?;

    let input_state = match raw.input_state {
        None => PureState::plus(),
        Some(s) => {
            let alpha = Complex64::new(s.alpha_re.unwrap_or(0.0), s.alpha_im.unwrap_or(0.0));
            let beta = Complex64::new(s.beta_re.unwrap_or(0.0), s.beta_im.unwrap_or(0.0));
            keyed("input_state", PureState::normalized(alpha, beta))?
        }
    };

    let fiber_length = raw.fiber_length_m.unwrap_or(DEFAULT_FIBER_LENGTH_M);
    if !(fiber_length.is_finite() && fiber_length > 0.0) {
        return Err(invalid(
            "fiber_length_m",
            format!("must be > 0, got {fiber_length}"),
        ));
    }

    let wavelength_nm = raw.wavelength_nm.unwrap_or(DEFAULT_WAVELENGTH_NM);
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(invalid(
            "wavelength_nm",
            format!("must be > 0, got {wavelength_nm}"),
        ));
    }
    let wavelength = wavelength_nm / 1e9;

    let rn = raw.noise.unwrap_or_default();
    let mean = rn.mean_segment_m.unwrap_or(DEFAULT_MEAN_SEGMENT_M);
    let spread = rn.spread.unwrap_or(DEFAULT_SPREAD);
    if !(mean.is_finite() && mean > 0.0) {
        return Err(invalid(
            "noise.mean_segment_m",
            format!("must be > 0, got {mean}"),
        ));
    }
    if !(0.0..1.0).contains(&spread) {
        return Err(invalid(
            "noise.spread",
            format!("must be in [0, 1), got {spread}"),
        ));
    }
    let noise = match (rn.sigma_dn, rn.sigma_dphi) {
        (Some(_), Some(_)) => {
            return Err(invalid("noise", "give only one of sigma_dn and sigma_dphi"));
        }
        (Some(dn), None) => keyed(
            "noise.sigma_dn",
            NoiseParams::new(dn, mean, spread, wavelength),
        )?,
        (None, dphi) => keyed(
            "noise.sigma_dphi",
            NoiseParams::from_sigma_dphi(
                dphi.unwrap_or(DEFAULT_SIGMA_DPHI),
                mean,
                spread,
                wavelength,
            ),
        )?,
    };

    let sequence = match raw.sequence {
        None => SequenceKind::Xy4,
        Some(s) => keyed("sequence", s.parse())?,
    };
    let num_waveplates = match raw.num_waveplates {
        None if sequence == SequenceKind::FreeEvolution => 0,
        None => DEFAULT_NUM_WAVEPLATES,
        Some(n) if n < 0 => {
            return Err(invalid("num_waveplates", format!("must be >= 0, got {n}")))
        }
        Some(n) => n as usize,
    };
    keyed("num_waveplates", sequence.check_count(num_waveplates))?;

    let rw = raw.waveplate.unwrap_or_default();
    let width = rw.width.unwrap_or(DEFAULT_PROFILE_WIDTH);
    let profile = match rw
        .profile
        .as_deref()
        .unwrap_or("tanh")
        .to_ascii_lowercase()
        .as_str()
    {
        "gaussian" => RefractiveIndexProfile::Gaussian {
            x0: rw.x0.unwrap_or(DEFAULT_GAUSSIAN_X0),
            sigma: rw.sigma.unwrap_or(DEFAULT_GAUSSIAN_SIGMA),
        },
        "rectangular" => RefractiveIndexProfile::Rectangular,
        "tanh" => RefractiveIndexProfile::Tanh {
            a: rw.a.unwrap_or(DEFAULT_TANH_A),
        },
        "ideal" => RefractiveIndexProfile::Ideal,
        other => {
            return Err(invalid(
                "waveplate.profile",
                format!(
                    "unknown profile `{other}` (expected gaussian, rectangular, tanh or ideal)"
                ),
            ))
        }
    };
    let re = raw.error_mode.unwrap_or_default();
    let error_mode = match (re.direct_epsilon, re.calibrated_kappa) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "error_mode",
                "give only one of direct_epsilon and calibrated_kappa",
            ));
        }
        (Some(epsilon), None) => ErrorMode::Direct { epsilon },
        (None, kappa) => ErrorMode::Calibrated {
            kappa: kappa.unwrap_or(REFERENCE_KAPPA),
        },
    };
    let waveplate = WaveplateSpec {
        axis: RotationAxis::X,
        profile,
        width,
        error_mode,
    };
    keyed("waveplate", waveplate.validate())?;

    let realizations = match raw.realizations {
        None => DEFAULT_REALIZATIONS,
        Some(n) if n < 1 => return Err(invalid("realizations", format!("must be >= 1, got {n}"))),
        Some(n) => n as usize,
    };

    let config = SimConfig {
        input_state,
        fiber_length,
        noise,
        sequence,
        num_waveplates,
        waveplate,
        realizations,
        master_seed: raw.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
    };
    keyed("<config>", config.validate())?;
    Ok(config)
}

/// Wavelength in nm whose division by 1e9 gives back exactly `meters`.
fn wavelength_to_nm(meters: f64) -> f64 {
    let guess = meters * 1e9;
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..8 {
        if lo / 1e9 == meters {
            return lo;
        }
        if hi / 1e9 == meters {
            return hi;
        }
        lo = lo.next_down();
        hi = hi.next_up();
    }
    guess
}

/// The document form of a configuration; `parse_config` inverts it exactly.
pub fn config_to_value(config: &SimConfig) -> Value {
    let s = &config.input_state;
    let mut waveplate = Map::new();
    waveplate.insert("profile".into(), json!(config.waveplate.profile.name()));
    match config.waveplate.profile {
        RefractiveIndexProfile::Gaussian { x0, sigma } => {
            waveplate.insert("x0".into(), json!(x0));
            waveplate.insert("sigma".into(), json!(sigma));
        }
        RefractiveIndexProfile::Tanh { a } => {
            waveplate.insert("a".into(), json!(a));
        }
        _ => {}
    }
    waveplate.insert("width".into(), json!(config.waveplate.width));
    let error_mode = match config.waveplate.error_mode {
        ErrorMode::Direct { epsilon } => json!({ "direct_epsilon": epsilon }),
        ErrorMode::Calibrated { kappa } => json!({ "calibrated_kappa": kappa }),
    };
    json!({
        "input_state": {
            "alpha_re": s.alpha().re,
            "alpha_im": s.alpha().im,
            "beta_re": s.beta().re,
            "beta_im": s.beta().im,
        },
        "fiber_length_m": config.fiber_length,
        "wavelength_nm": wavelength_to_nm(config.noise.wavelength),
        "noise": {
            "sigma_dn": config.noise.sigma_dn,
            "mean_segment_m": config.noise.mean_segment_length,
            "spread": config.noise.segment_length_spread,
        },
        "sequence": config.sequence.name(),
        "num_waveplates": config.num_waveplates,
        "waveplate": Value::Object(waveplate),
        "error_mode": error_mode,
        "realizations": config.realizations,
        "master_seed": config.master_seed,
    })
}

pub fn serialize_config(config: &SimConfig) -> String {
    serde_json::to_string_pretty(&config_to_value(config)).expect("config values are plain JSON")
}
