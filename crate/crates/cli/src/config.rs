//! TOML run configuration.

use std::path::{Path, PathBuf};

use resonance_core::charts::ChartPoint;
use resonance_core::invariants::{BracketTable, TABLE_NAMES};
use resonance_core::model::{IntegralValues, ModelParams};
use resonance_core::verify::CRITERIA;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelSection>,
    pub verify: Option<VerifySection>,
    pub integrate: Option<IntegrateSection>,
    pub reduce: Option<ReduceSection>,
    pub nf_table: Option<NfTableSection>,
    pub equilibria: Option<EquilibriaSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "one")]
    pub omega: f64,
    pub epsilon: f64,
    pub beta: f64,
    #[serde(default = "half")]
    pub gamma: f64,
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.omega, self.epsilon, self.beta, self.gamma)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub criteria: Vec<u8>,
    /// Pair of bracket-table names whose entry gets its sign flipped.
    pub fault: Option<[String; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Reduced,
    Normalized,
}

/// Start on the reduced surface given by its integrals, height and azimuth.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceStart {
    pub n: f64,
    pub xi: f64,
    pub l: f64,
    pub k: f64,
    #[serde(default)]
    pub angle: f64,
}

impl SurfaceStart {
    pub fn integrals(&self) -> IntegralValues {
        IntegralValues::new(self.n, self.xi, self.l)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateSection {
    pub mode: Mode,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "one_u8")]
    pub order: u8,
    pub initial: Option<ChartPoint>,
    pub surface: Option<SurfaceStart>,
    /// Normalized mode: also run the direct flow and write averaged `(g, G)` side by side.
    #[serde(default)]
    pub compare: bool,
    #[serde(default = "default_checks")]
    pub checks: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    pub states: Vec<ChartPoint>,
    #[serde(default = "default_samples")]
    pub surface_points: usize,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfTableSection {
    pub beta: Grid,
    #[serde(default = "unit_grid")]
    pub L: Grid,
    pub G: Grid,
    pub U1: Grid,
    pub U3: Grid,
    #[serde(default = "half")]
    pub gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaSection {
    pub alpha: Grid,
    pub w: Grid,
    pub z: Grid,
    #[serde(default)]
    pub json: bool,
}

/// Either an explicit list or `n` equally spaced points from `start` to `stop`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, n: usize },
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, String> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, n } => match n {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(format!("grid `{name}` is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("grid `{name}` has non-finite values"));
        }
        Ok(v)
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn one_u8() -> u8 {
    1
}
fn default_samples() -> usize {
    101
}
fn default_tol() -> f64 {
    1e-12
}
fn default_checks() -> usize {
    4
}
fn unit_grid() -> Grid {
    Grid::List(vec![1.0])
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn model(&self) -> Result<ModelParams, String> {
        let m = self.model.as_ref().ok_or("missing [model] section")?.params();
        m.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

/// Criteria to run and the bracket entry to flip.
pub type VerifyPlan = (Vec<u8>, Option<(usize, usize)>);

impl VerifySection {
    pub fn validate(&self) -> Result<VerifyPlan, String> {
        if let Some(c) = self.criteria.iter().find(|c| !CRITERIA.contains(c)) {
            return Err(format!("unknown criterion {c}"));
        }
        let fault = match &self.fault {
            None => None,
            Some([a, b]) => {
                let idx = |s: &str| {
                    TABLE_NAMES
                        .iter()
                        .position(|n| *n == s)
                        .ok_or(format!("unknown bracket name `{s}`, expected one of {TABLE_NAMES:?}"))
                };
                let (i, j) = (idx(a)?, idx(b)?);
                if i == j {
                    return Err("fault must name two different functions".into());
                }
                // flipping an identically zero entry cannot be detected
                if BracketTable::default().entry(i, j, &[1.1, 1.3, 1.7, 1.9, 2.3, 2.9]) == 0.0 {
                    return Err(format!("bracket {{{a}, {b}}} vanishes identically; pick a nonzero entry"));
                }
                Some((i, j))
            }
        };
        Ok((self.criteria.clone(), fault))
    }
}

impl IntegrateSection {
    pub fn times(&self) -> Result<Vec<f64>, String> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(format!("t_end must be > 0, got {}", self.t_end));
        }
        if self.samples < 2 {
            return Err("samples must be at least 2".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        let n = self.samples - 1;
        Ok((0..=n).map(|i| self.t_end * i as f64 / n as f64).collect())
    }
}
