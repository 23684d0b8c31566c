//! Declarative experiment description read by `shiftbt compare`.
//!
//! ```toml
//! system = "beam"          # bundle directory, relative to this file
//! example = "beam-x0"      # optional: replace X0 (beam-x0 | cdplayer-x0)
//! z0 = [10.0, -1.0]
//! alpha = "optimize"       # heur-fro | heur-spec | sample | optimize | number
//! betas = [1.0, "heur"]
//! step = 0.1
//! horizon = 2000.0         # optional, derived from the slowest decay otherwise
//! smoothing = 101          # odd moving-average window for trajectory files
//!
//! [input]
//! breakpoints = [0.0, 500.0, 1000.0]
//! values = [[0.0], [1.0], [0.0]]
//!
//! [[methods]]
//! method = "jshift"
//! order = 30
//!
//! [[methods]]
//! method = "sshift"
//! orders = [15, 15]
//!
//! [sweep]                  # optional c_u(α) curve of the joint decaying-shift method
//! order = 30
//! beta = 1.0
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;
use shiftbt::bounds::Orders;
use shiftbt::harness::{AlphaMode, BetaSpec, ExampleKind, MethodSpec};
use shiftbt::params::{DEFAULT_JMAX, DEFAULT_JMIN};
use shiftbt::rom::Method;
use shiftbt::PiecewiseConstantInput;

use crate::error::CliError;
use crate::spec;

pub const DEFAULT_HORIZON_CAP: f64 = 1e5;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberOrName {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputTable {
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub method: String,
    pub order: Option<usize>,
    pub orders: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub order: usize,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "jmin")]
    pub jmin: i32,
    #[serde(default = "jmax")]
    pub jmax: i32,
    #[serde(default = "sweep_points")]
    pub points: usize,
}

fn one() -> f64 {
    1.0
}
fn jmin() -> i32 {
    DEFAULT_JMIN
}
fn jmax() -> i32 {
    DEFAULT_JMAX
}
fn sweep_points() -> usize {
    241
}
fn smoothing() -> usize {
    1
}
fn horizon_cap() -> f64 {
    DEFAULT_HORIZON_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub system: PathBuf,
    pub example: Option<String>,
    #[serde(default)]
    pub z0: Vec<f64>,
    pub alpha: Option<NumberOrName>,
    #[serde(default)]
    pub betas: Vec<NumberOrName>,
    pub step: f64,
    pub horizon: Option<f64>,
    #[serde(default = "horizon_cap")]
    pub horizon_cap: f64,
    #[serde(default = "smoothing")]
    pub smoothing: usize,
    pub input: Option<InputTable>,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
    pub sweep: Option<SweepEntry>,
}

impl CompareConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: CompareConfig =
            toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        if cfg.system.is_relative() {
            cfg.system = path.parent().unwrap_or(Path::new(".")).join(&cfg.system);
        }
        Ok(cfg)
    }

    pub fn example(&self) -> Result<Option<ExampleKind>, CliError> {
        match self.example.as_deref() {
            None => Ok(None),
            Some("beam-x0") => Ok(Some(ExampleKind::BeamX0)),
            Some("cdplayer-x0") => Ok(Some(ExampleKind::CdPlayerX0)),
            Some(other) => Err(CliError::Usage(format!("unknown example '{other}'"))),
        }
    }

    pub fn alpha_mode(&self) -> Result<AlphaMode, CliError> {
        match &self.alpha {
            None => Ok(AlphaMode::default()),
            Some(NumberOrName::Number(a)) => spec::alpha(&a.to_string()),
            Some(NumberOrName::Name(s)) => spec::alpha(s),
        }
    }

    pub fn beta_specs(&self) -> Result<Vec<BetaSpec>, CliError> {
        self.betas
            .iter()
            .map(|b| match b {
                NumberOrName::Number(v) => spec::betas(&v.to_string()).map(|mut v| v.remove(0)),
                NumberOrName::Name(s) => spec::betas(s).and_then(|v| {
                    if v.len() == 1 {
                        Ok(v[0])
                    } else {
                        Err(CliError::Usage(format!("bad beta '{s}'")))
                    }
                }),
            })
            .collect()
    }

    pub fn method_specs(&self) -> Result<Vec<MethodSpec>, CliError> {
        self.methods
            .iter()
            .map(|e| {
                let method: Method = e.method.parse()?;
                let orders = match (method.is_separate(), e.order, e.orders) {
                    (false, Some(r), None) => Orders::Joint(r),
                    (true, None, Some([k, l])) => Orders::Separate { k, l },
                    _ => {
                        return Err(CliError::Usage(format!(
                            "{method}: give `order = r` for joint methods or `orders = [k, l]` for separate ones"
                        )))
                    }
                };
                Ok(MethodSpec { method, orders })
            })
            .collect()
    }

    pub fn input_signal(&self, m: usize) -> Result<PiecewiseConstantInput, CliError> {
        match &self.input {
            None => Ok(PiecewiseConstantInput::zero(m)),
            Some(t) => {
                let values = t.values.iter().map(|v| DVector::from_vec(v.clone())).collect();
                let u = PiecewiseConstantInput::new(t.breakpoints.clone(), values)
                    .map_err(|e| CliError::Usage(format!("input: {e}")))?;
                if u.dim() != m {
                    return Err(CliError::Usage(format!("input has {} channels, system has {m}", u.dim())));
                }
                Ok(u)
            }
        }
    }

    pub fn z0_vector(&self, q: usize) -> Result<DVector<f64>, CliError> {
        if self.z0.is_empty() {
            return Ok(DVector::zeros(q));
        }
        if self.z0.len() != q {
            return Err(CliError::Usage(format!("z0 has length {}, system has q = {q}", self.z0.len())));
        }
        Ok(DVector::from_vec(self.z0.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
system = "sys"
z0 = [1.0, 2.0]
alpha = 0.5
betas = [1.0, "heur"]
step = 0.1
[input]
breakpoints = [0.0, 1.0]
values = [[1.0], [0.0]]
[[methods]]
method = "jshift"
order = 3
[[methods]]
method = "btbt"
orders = [2, 1]
"#;

    #[test]
    fn parses_sample() {
        let cfg: CompareConfig = toml::from_str(SAMPLE).unwrap();
        assert_eq!(cfg.alpha_mode().unwrap(), AlphaMode::Fixed(0.5));
        assert_eq!(cfg.beta_specs().unwrap(), vec![BetaSpec::Value(1.0), BetaSpec::Heuristic]);
        let methods = cfg.method_specs().unwrap();
        assert_eq!(methods[1], MethodSpec { method: Method::BtBt, orders: Orders::Separate { k: 2, l: 1 } });
        assert_eq!(cfg.input_signal(1).unwrap().l2_norm().unwrap(), 1.0);
        assert!(cfg.input_signal(2).is_err());
        assert_eq!(cfg.z0_vector(2).unwrap().as_slice(), &[1.0, 2.0]);
        assert_eq!(cfg.smoothing, 1);
    }

    #[test]
    fn rejects_bad_entries() {
        let mut cfg: CompareConfig = toml::from_str(SAMPLE).unwrap();
        cfg.methods[0].orders = Some([1, 1]);
        assert!(cfg.method_specs().is_err());
        assert!(toml::from_str::<CompareConfig>("system = \"x\"\nstep = 1.0\nunknown = 1\n").is_err());
    }
}
