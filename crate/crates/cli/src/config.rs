//! Run configuration: a flat `section.key = value` file.
//!
//! ```text
//! # trap
//! fiber.radius_m = 2e-7
//! fiber.trap_power_W = 0.02
//! packet.m0 = 468
//! ```
//!
//! Every key is optional; absent keys take the defaults below. Unknown keys
//! are rejected with their full path.

use std::fmt::Write as _;
use std::path::Path;

use nanorbit_core::consts::POLARIZABILITY_AU;
use nanorbit_core::dispersion::TrapParams;
use nanorbit_core::materials::{default_cesium, AtomSpec, FiberSpec};
use nanorbit_core::potentials::{DEFAULT_POINTS, DEFAULT_SPAN, MIN_POINTS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberConfig {
    pub radius_m: f64,
    pub trap_wavelength_m: f64,
    #[serde(rename = "trap_power_W")]
    pub trap_power_w: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            radius_m: 200e-9,
            trap_wavelength_m: 1064e-9,
            trap_power_w: 20e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomConfig {
    pub mass_kg: f64,
    /// Polarizability at 1064 nm in SI units, C·m²/V.
    pub alpha_si_1064: f64,
    #[serde(rename = "c3_J_m3")]
    pub c3_j_m3: f64,
    pub probe_wavelength_m: f64,
}

impl Default for AtomConfig {
    fn default() -> Self {
        let cs = default_cesium();
        Self {
            mass_kg: cs.mass,
            alpha_si_1064: cs.alpha_1064,
            c3_j_m3: cs.c3,
            probe_wavelength_m: cs.probe_wavelength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    pub m0: i64,
    pub delta_m: f64,
    pub m_min: i64,
    pub m_max: i64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self {
            m0: 468,
            delta_m: 6.0,
            m_min: 446,
            m_max: 510,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub grid_points: usize,
    /// Radial extent beyond the fiber surface.
    pub r_span_m: f64,
    pub m_scan_min: i64,
    pub m_scan_max: i64,
    /// Relative half-width of the autocorrelation search around `T_rev`.
    pub revival_search: f64,
    pub peak_threshold: f64,
    pub polar_radial_nodes: usize,
    pub polar_azimuthal_nodes: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_POINTS,
            r_span_m: DEFAULT_SPAN,
            m_scan_min: 400,
            m_scan_max: 560,
            revival_search: 0.1,
            peak_threshold: 0.5,
            polar_radial_nodes: 200,
            polar_azimuthal_nodes: 360,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// End of the trace; 0 selects `1.15 T_rev`.
    pub t_max_s: f64,
    /// Sample step; 0 selects `T_osc / 40`.
    pub dt_s: f64,
    pub axis_angle_rad: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            t_max_s: 0.0,
            dt_s: 0.0,
            axis_angle_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Snapshot times; empty selects `0, T_rev/8, T_rev/4, T_rev/2, T_rev`.
    pub times_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "nanorbit-out".into(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub fiber: FiberConfig,
    pub atom: AtomConfig,
    pub packet: PacketConfig,
    pub numerics: NumericsConfig,
    pub probe: ProbeConfig,
    pub evolve: EvolveConfig,
    pub output: OutputConfig,
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Rejects keys that are not part of the schema, reporting the full path.
fn check_keys(table: &toml::Table) -> Result<(), PipelineError> {
    let defaults = toml::Table::try_from(Config::default()).expect("defaults serialize");
    for (section, value) in table {
        let Some(known) = defaults.get(section).and_then(|v| v.as_table()) else {
            return Err(config_error(section.clone(), "unknown section"));
        };
        let Some(keys) = value.as_table() else {
            return Err(config_error(section.clone(), "expected `section.key = value` entries"));
        };
        for key in keys.keys() {
            if !known.contains_key(key) {
                return Err(config_error(format!("{section}.{key}"), "unknown key"));
            }
        }
    }
    Ok(())
}

/// Floats in shortest round-trip exponent form, other values as TOML.
fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => format!("{f:e}"),
        toml::Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(render).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_error("<file>", e.message().to_string()))?;
        check_keys(&table)?;
        for (section, value) in &table {
            let keys = value.as_table().expect("checked above");
            for (key, v) in keys {
                let path = format!("{section}.{key}");
                let mut one = toml::Table::new();
                let mut inner = toml::Table::new();
                inner.insert(key.clone(), v.clone());
                one.insert(section.clone(), toml::Value::Table(inner));
                toml::Value::Table(one)
                    .try_into::<Config>()
                    .map_err(|e| config_error(path, e.message().to_string()))?;
            }
        }
        let config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e| config_error("<file>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Flat `section.key = value` lines for every setting.
    pub fn serialize(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes");
        let mut out = String::new();
        for (section, value) in &table {
            for (key, v) in value.as_table().expect("sections are tables") {
                let _ = writeln!(out, "{section}.{key} = {}", render(v));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(key, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(key, format!("must be non-negative, got {v}")))
            }
        };
        positive("fiber.radius_m", self.fiber.radius_m)?;
        positive("fiber.trap_wavelength_m", self.fiber.trap_wavelength_m)?;
        positive("fiber.trap_power_W", self.fiber.trap_power_w)?;
        positive("atom.mass_kg", self.atom.mass_kg)?;
        positive("atom.alpha_si_1064", self.atom.alpha_si_1064)?;
        positive("atom.c3_J_m3", self.atom.c3_j_m3)?;
        positive("atom.probe_wavelength_m", self.atom.probe_wavelength_m)?;
        positive("packet.delta_m", self.packet.delta_m)?;
        let p = &self.packet;
        if !(p.m_min <= p.m0 && p.m0 <= p.m_max && p.m_max - p.m_min >= 2) {
            return Err(config_error("packet.m_min", "need m_min <= m0 <= m_max and at least three states"));
        }
        let n = &self.numerics;
        if n.grid_points < MIN_POINTS {
            return Err(config_error("numerics.grid_points", format!("must be at least {MIN_POINTS}")));
        }
        positive("numerics.r_span_m", n.r_span_m)?;
        if !(1 <= n.m_scan_min && n.m_scan_min <= n.m_scan_max && n.m_scan_max <= 2000) {
            return Err(config_error("numerics.m_scan_min", "scan range must lie within [1, 2000]"));
        }
        if !(n.m_scan_min < p.m_min && p.m_max < n.m_scan_max) {
            return Err(config_error("numerics.m_scan_min", "scan range must enclose the packet window"));
        }
        if !(n.revival_search > 0.0 && n.revival_search < 0.5) {
            return Err(config_error("numerics.revival_search", "must lie in (0, 0.5)"));
        }
        if !(n.peak_threshold > 0.0 && n.peak_threshold < 1.0) {
            return Err(config_error("numerics.peak_threshold", "must lie in (0, 1)"));
        }
        if n.polar_radial_nodes < 2 || n.polar_azimuthal_nodes < 4 {
            return Err(config_error("numerics.polar_radial_nodes", "polar grid too small"));
        }
        non_negative("probe.t_max_s", self.probe.t_max_s)?;
        non_negative("probe.dt_s", self.probe.dt_s)?;
        if !self.probe.axis_angle_rad.is_finite() {
            return Err(config_error("probe.axis_angle_rad", "must be finite"));
        }
        for (i, &t) in self.evolve.times_s.iter().enumerate() {
            non_negative(&format!("evolve.times_s[{i}]"), t)?;
        }
        if self.output.directory.is_empty() {
            return Err(config_error("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn atom(&self) -> AtomSpec {
        AtomSpec {
            mass: self.atom.mass_kg,
            alpha_1064: self.atom.alpha_si_1064,
            c3: self.atom.c3_j_m3,
            probe_wavelength: self.atom.probe_wavelength_m,
        }
    }

    pub fn fiber(&self) -> FiberSpec {
        FiberSpec {
            radius: self.fiber.radius_m,
            index_clad: 1.0,
        }
    }

    pub fn trap_params(&self) -> TrapParams {
        TrapParams {
            fiber: self.fiber(),
            atom: self.atom(),
            trap_wavelength: self.fiber.trap_wavelength_m,
            trap_power: self.fiber.trap_power_w,
            r_span: self.numerics.r_span_m,
            grid_points: self.numerics.grid_points,
        }
    }

    /// SHA-256 over the settings that determine the dispersion table.
    pub fn dispersion_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            fiber: &'a FiberConfig,
            atom: &'a AtomConfig,
            numerics: &'a NumericsConfig,
        }
        let key = Key {
            fiber: &self.fiber,
            atom: &self.atom,
            numerics: &self.numerics,
        };
        let bytes = serde_json::to_vec(&key).expect("config serializes");
        Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Polarizability in atomic units, for display.
    pub fn alpha_au(&self) -> f64 {
        self.atom.alpha_si_1064 / POLARIZABILITY_AU
    }
}
