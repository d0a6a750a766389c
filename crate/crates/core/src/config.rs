//! Run configuration: a TOML file of named sections, parsed section by section
//! so that every problem in the file is reported at once.
//!
//! ```toml
//! [geometry]
//! layout = "band"
//! band_lo = 0.25
//! band_hi = 0.75
//!
//! [time]
//! dt = 0.01
//! t_end = 0.5
//! ```
//!
//! Only `geometry.layout`, `time.dt` and `time.t_end` are required.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::fem::{CoefficientTensor, Sym2, DEFAULT_TOL};
use crate::geometry::{cells_per_axis, CellGeometrySpec, Layout};
use crate::ionic::IonicParams;
use crate::scenario::{InitialData, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub layout: Layout,
    #[serde(default = "quarter")]
    pub band_lo: f64,
    #[serde(default = "three_quarters")]
    pub band_hi: f64,
    #[serde(default = "quarter")]
    pub island_lo: f64,
    #[serde(default = "three_quarters")]
    pub island_hi: f64,
}

fn quarter() -> f64 {
    0.25
}

fn three_quarters() -> f64 {
    0.75
}

impl GeometryConfig {
    pub fn spec(&self) -> CellGeometrySpec {
        match self.layout {
            Layout::Band => CellGeometrySpec::band(self.band_lo, self.band_hi),
            Layout::FullCell => CellGeometrySpec::full_cell(),
            Layout::LaminateX => CellGeometrySpec::laminate_x(),
            Layout::Island => CellGeometrySpec::island(self.band_lo, self.band_hi, self.island_lo, self.island_hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Elements per axis of the reference cell for the cell problems.
    pub reference_n: usize,
    pub macro_n: usize,
    /// Elements per axis of each cell in the tiled micro grid.
    pub n_per_cell: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { reference_n: 32, macro_n: 64, n_per_cell: 8 }
    }
}

/// Microscopic conductivities as `[m11, m12, m22]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicroConfig {
    pub eps: Vec<f64>,
    pub m_i: [f64; 3],
    pub m_e: [f64; 3],
    /// Scalar conductivities left and right of `x = 1/2` for the laminate layout.
    pub laminate: [f64; 2],
}

impl Default for MicroConfig {
    fn default() -> Self {
        Self { eps: vec![0.5, 0.25, 0.125], m_i: [1.0, 0.0, 1.0], m_e: [1.0, 0.0, 1.0], laminate: [1.0, 4.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorMode {
    #[default]
    Computed,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TensorConfig {
    pub mode: TensorMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i1: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i2: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<[f64; 3]>,
    /// Isotropic diffusion added to the macroscopic tensors.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between field snapshots; 0 writes only the initial and final state.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourcesConfig {
    pub i1: Source,
    pub i2: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    pub cell: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: DEFAULT_TOL, cell: crate::cell_problems::CELL_TOL, identity: crate::unfolding::IDENTITY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub ionic_range: [f64; 2],
    pub ionic_samples: usize,
    pub unfolding_eps: Vec<f64>,
    pub unfolding_resolutions: Vec<usize>,
    pub seed: u64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            ionic_range: [-3.0, 3.0],
            ionic_samples: 1000,
            unfolding_eps: vec![0.5, 0.25, 0.125],
            unfolding_resolutions: vec![4, 8],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: GeometryConfig,
    pub grid: GridConfig,
    pub micro: MicroConfig,
    pub tensors: TensorConfig,
    pub ionic: IonicParams,
    pub time: TimeConfig,
    pub initial: InitialData,
    pub sources: SourcesConfig,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
    pub checks: ChecksConfig,
}

/// One problem in a config file, with the key paths it concerns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub keys: Vec<String>,
    pub message: String,
}

impl Violation {
    fn new(keys: &[&str], message: impl Into<String>) -> Self {
        Self { keys: keys.iter().map(|k| k.to_string()).collect(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.keys.join(", "), self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} config violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const SECTIONS: [&str; 11] =
    ["geometry", "grid", "micro", "tensors", "ionic", "time", "initial", "sources", "output", "tolerances", "checks"];

pub fn parse_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        violations: vec![Violation::new(&[], format!("cannot read {}: {e}", path.display()))],
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SimConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError { violations: vec![Violation::new(&[], e.message().to_string())] })?;
    let mut violations = Vec::new();
    for key in table.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            violations.push(Violation::new(&[key], "unknown section"));
        }
    }

    let geometry = section::<GeometryConfig>(&table, "geometry", true, &mut violations);
    let grid = section::<GridConfig>(&table, "grid", false, &mut violations);
    let micro = section::<MicroConfig>(&table, "micro", false, &mut violations);
    let tensors = section::<TensorConfig>(&table, "tensors", false, &mut violations);
    let ionic = section::<IonicParams>(&table, "ionic", false, &mut violations);
    let time = section::<TimeConfig>(&table, "time", true, &mut violations);
    let initial = section::<InitialData>(&table, "initial", false, &mut violations);
    let sources = section::<SourcesConfig>(&table, "sources", false, &mut violations);
    let output = section::<OutputConfig>(&table, "output", false, &mut violations);
    let tolerances = section::<Tolerances>(&table, "tolerances", false, &mut violations);
    let checks = section::<ChecksConfig>(&table, "checks", false, &mut violations);

    let cfg = match (geometry, grid, micro, tensors, ionic, time, initial, sources, output, tolerances, checks) {
        (Some(geometry), Some(grid), Some(micro), Some(tensors), Some(ionic), Some(time), Some(initial), Some(sources), Some(output), Some(tolerances), Some(checks)) => {
            SimConfig { geometry, grid, micro, tensors, ionic, time, initial, sources, output, tolerances, checks }
        }
        _ => return Err(ConfigError { violations }),
    };
    violations.extend(cfg.violations());
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { violations })
    }
}

/// Deserializes one section; a missing optional section takes its defaults.
fn section<T: DeserializeOwned>(table: &toml::Table, name: &str, required: bool, out: &mut Vec<Violation>) -> Option<T> {
    let value = match table.get(name) {
        Some(v) => v.clone(),
        None if required => {
            out.push(Violation::new(&[name], "missing required section"));
            return None;
        }
        None => toml::Value::Table(toml::Table::new()),
    };
    match value.try_into::<T>() {
        Ok(v) => Some(v),
        Err(e) => {
            out.push(Violation::new(&[name], e.message().trim().to_string()));
            None
        }
    }
}

fn sym(v: [f64; 3]) -> Sym2 {
    Sym2::new(v[0], v[1], v[2])
}

impl SimConfig {
    pub fn spec(&self) -> CellGeometrySpec {
        self.geometry.spec()
    }

    pub fn m_i(&self) -> Sym2 {
        sym(self.micro.m_i)
    }

    pub fn m_e(&self) -> Sym2 {
        sym(self.micro.m_e)
    }

    /// Explicit macroscopic tensors, if configured.
    pub fn explicit_tensors(&self) -> Option<[Sym2; 3]> {
        match (self.tensors.mode, self.tensors.i1, self.tensors.i2, self.tensors.e) {
            (TensorMode::Explicit, Some(a), Some(b), Some(c)) => Some([sym(a), sym(b), sym(c)]),
            _ => None,
        }
    }

    /// Effective config as TOML; parses back to an identical value.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Cross-field consistency rules.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let spec = self.spec();
        if let Err(e) = spec.validate() {
            let keys: &[&str] = match self.geometry.layout {
                Layout::Island if self.geometry.band_lo < self.geometry.band_hi => {
                    &["geometry.island_lo", "geometry.island_hi"]
                }
                _ => &["geometry.band_lo", "geometry.band_hi"],
            };
            out.push(Violation::new(keys, e.to_string()));
        } else {
            for (key, n) in [("grid.reference_n", self.grid.reference_n), ("grid.n_per_cell", self.grid.n_per_cell)] {
                if n < 4 {
                    out.push(Violation::new(&[key], format!("must be at least 4, got {n}")));
                } else if let Err(e) = spec.check_alignment(n) {
                    out.push(Violation::new(&[key], e.to_string()));
                }
            }
        }
        if self.grid.macro_n < 2 {
            out.push(Violation::new(&["grid.macro_n"], format!("must be at least 2, got {}", self.grid.macro_n)));
        }

        if self.micro.eps.is_empty() {
            out.push(Violation::new(&["micro.eps"], "needs at least one value"));
        }
        for (i, &eps) in self.micro.eps.iter().enumerate() {
            if cells_per_axis(eps).is_err() {
                out.push(Violation::new(&[&format!("micro.eps[{i}]")], format!("eps={eps} is not 1/N for an integer N")));
            }
        }
        for (key, m) in [("micro.m_i", self.micro.m_i), ("micro.m_e", self.micro.m_e)] {
            if let Err(e) = CoefficientTensor::constant(sym(m)) {
                out.push(Violation::new(&[key], e.to_string()));
            }
        }
        if !self.micro.laminate.iter().all(|c| *c > 0.0 && c.is_finite()) {
            out.push(Violation::new(&["micro.laminate"], "conductivities must be positive"));
        }

        if self.tensors.mode == TensorMode::Explicit {
            for (key, m) in [("tensors.i1", self.tensors.i1), ("tensors.i2", self.tensors.i2), ("tensors.e", self.tensors.e)] {
                match m {
                    None => out.push(Violation::new(&[key], "required when tensors.mode = \"explicit\"")),
                    Some(m) => {
                        if let Err(e) = CoefficientTensor::semidefinite(sym(m)) {
                            out.push(Violation::new(&[key], e.to_string()));
                        }
                    }
                }
            }
        }
        if !(self.tensors.delta >= 0.0 && self.tensors.delta.is_finite()) {
            out.push(Violation::new(&["tensors.delta"], format!("must be non-negative, got {}", self.tensors.delta)));
        }

        for (key, msg) in self.ionic.violations() {
            out.push(Violation::new(&[&format!("ionic.{key}")], msg));
        }

        let (dt, t_end) = (self.time.dt, self.time.t_end);
        if !(dt > 0.0 && dt.is_finite()) {
            out.push(Violation::new(&["time.dt"], format!("must be positive, got {dt}")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            out.push(Violation::new(&["time.t_end"], format!("must be positive, got {t_end}")));
        }
        if dt > 0.0 && t_end > 0.0 {
            let n = (t_end / dt).round();
            if n < 1.0 || (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
                out.push(Violation::new(&["time.dt", "time.t_end"], format!("dt={dt} does not divide t_end={t_end}")));
            }
        }

        let profiles = [
            ("initial.v1", &self.initial.v1),
            ("initial.v2", &self.initial.v2),
            ("initial.w1", &self.initial.w1),
            ("initial.w2", &self.initial.w2),
            ("sources.i1.profile", &self.sources.i1.profile),
            ("sources.i2.profile", &self.sources.i2.profile),
        ];
        for (prefix, p) in profiles {
            for (key, msg) in p.violations() {
                out.push(Violation::new(&[&format!("{prefix}.{key}")], msg));
            }
        }
        for (key, s) in [("sources.i1", &self.sources.i1), ("sources.i2", &self.sources.i2)] {
            if !(s.t_on <= s.t_off) {
                out.push(Violation::new(&[&format!("{key}.t_on"), &format!("{key}.t_off")], "t_on must not exceed t_off"));
            }
        }

        if self.output.dir.is_empty() {
            out.push(Violation::new(&["output.dir"], "must not be empty"));
        }
        for (key, v) in [
            ("tolerances.solver", self.tolerances.solver),
            ("tolerances.cell", self.tolerances.cell),
            ("tolerances.identity", self.tolerances.identity),
        ] {
            if !(v > 0.0 && v < 1.0) {
                out.push(Violation::new(&[key], format!("must lie in (0, 1), got {v}")));
            }
        }

        let [lo, hi] = self.checks.ionic_range;
        if !(lo < hi) {
            out.push(Violation::new(&["checks.ionic_range"], format!("needs lo < hi, got [{lo}, {hi}]")));
        }
        if self.checks.ionic_samples < 2 {
            out.push(Violation::new(&["checks.ionic_samples"], "needs at least 2 samples"));
        }
        for (i, &eps) in self.checks.unfolding_eps.iter().enumerate() {
            if cells_per_axis(eps).is_err() {
                out.push(Violation::new(
                    &[&format!("checks.unfolding_eps[{i}]")],
                    format!("eps={eps} is not 1/N for an integer N"),
                ));
            }
        }
        for (i, &n) in self.checks.unfolding_resolutions.iter().enumerate() {
            if n < 4 || n % 4 != 0 {
                out.push(Violation::new(
                    &[&format!("checks.unfolding_resolutions[{i}]")],
                    format!("must be a positive multiple of 4, got {n}"),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[geometry]\nlayout = \"band\"\n\n[time]\ndt = 0.01\nt_end = 0.5\n";

    fn keys(err: &ConfigError) -> Vec<String> {
        err.violations.iter().flat_map(|v| v.keys.clone()).collect()
    }

    #[test]
    fn minimal_config_round_trips() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.ionic, IonicParams::default());
        assert_eq!(parse_config_str(&cfg.echo()).unwrap(), cfg);
    }

    #[test]
    fn bad_eps_is_named() {
        let text = format!("{MINIMAL}\n[micro]\neps = [0.5, 0.3]\n");
        let err = parse_config_str(&text).unwrap_err();
        assert_eq!(keys(&err), ["micro.eps[1]"]);
    }

    #[test]
    fn inverted_band_names_both_keys() {
        let text = "[geometry]\nlayout = \"band\"\nband_lo = 0.75\nband_hi = 0.25\n[time]\ndt = 0.01\nt_end = 0.5\n";
        let err = parse_config_str(text).unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(keys(&err), ["geometry.band_lo", "geometry.band_hi"]);
    }

    #[test]
    fn all_violations_are_collected() {
        let text = "[geometry]\nlayout = \"hexagon\"\n[grid]\nmacro_n = \"big\"\n[bogus]\nx = 1\n";
        let err = parse_config_str(text).unwrap_err();
        let k = keys(&err);
        for want in ["bogus", "geometry", "grid", "time"] {
            assert!(k.iter().any(|x| x == want), "{want} missing from {k:?}");
        }
    }

    #[test]
    fn cross_field_rules() {
        let text = "[geometry]\nlayout = \"band\"\nband_lo = 0.3\n[time]\ndt = 0.03\nt_end = 0.5\n\
                    [tensors]\nmode = \"explicit\"\ni1 = [1.0, 0.0, -1.0]\n";
        let k = keys(&parse_config_str(text).unwrap_err());
        for want in ["grid.reference_n", "grid.n_per_cell", "time.dt", "time.t_end", "tensors.i1", "tensors.i2", "tensors.e"] {
            assert!(k.iter().any(|x| x == want), "{want} missing from {k:?}");
        }
    }
}
