//! Run configuration: a strict JSON schema, rejected on any unknown key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use soliton_core::field::Grid;
use soliton_core::limit::{prepare_ladder, Norm, DEFAULT_LADDER};
use soliton_core::params::{generate, SolitonParams, TailRule};

use crate::suite::Suite;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub kappas: KappaSpec,
    #[serde(default)]
    pub norming: NormingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KappaSpec {
    Explicit(Vec<f64>),
    Geometric { base: f64, ratio: f64, count: usize },
    Reciprocal { scale: f64, power: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum NormingSpec {
    Explicit(Vec<f64>),
    Rule(NormingRuleName),
}

impl Default for NormingSpec {
    fn default() -> Self {
        NormingSpec::Rule(NormingRuleName::MatchKappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormingRuleName {
    #[serde(rename = "c=kappa")]
    MatchKappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_values: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
}

/// Per-suite pass thresholds. See `soliton-lab explain <suite>` for what each one bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub field: f64,
    pub kdv: f64,
    pub spectrum: f64,
    pub scatter: f64,
    pub invariants: f64,
    pub converge: f64,
    pub mfunction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            field: 1e-9,
            kdv: 1e-6,
            spectrum: 1e-4,
            scatter: 1e-6,
            invariants: 1e-6,
            converge: 1.0,
            mfunction: 1e-12,
        }
    }
}

/// Numerical knobs of the individual suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Truncation order; defaults to every stored parameter.
    pub n: Option<usize>,
    pub spectrum_h: f64,
    pub scatter_du: f64,
    pub scatter_window_tol: f64,
    pub k_grid: Vec<f64>,
    pub invariants_du: f64,
    pub ladder: Vec<usize>,
    /// Points per side of the square `Re z in [-5, 4], Im z in (0, 5]` sampled by `mfunction`.
    pub mfunction_side: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            n: None,
            spectrum_h: 5e-3,
            scatter_du: 1e-3,
            scatter_window_tol: 1e-10,
            k_grid: vec![0.5, 1.0, 2.0, 4.0],
            invariants_du: 1e-2,
            ladder: DEFAULT_LADDER.to_vec(),
            mfunction_side: 10,
        }
    }
}

impl ParamsSpec {
    pub fn build(&self) -> Result<SolitonParams, ConfigError> {
        let (rule, count) = match &self.kappas {
            KappaSpec::Explicit(k) => (None, k.len()),
            KappaSpec::Geometric { base, ratio, count } => (
                Some(TailRule::Geometric {
                    ratio: *ratio,
                    base: *base,
                }),
                *count,
            ),
            KappaSpec::Reciprocal { scale, power, count } => (
                Some(TailRule::Reciprocal {
                    power: *power,
                    scale: *scale,
                }),
                *count,
            ),
        };
        let params = match (rule, &self.kappas, &self.norming) {
            (Some(rule), _, NormingSpec::Rule(_)) => generate(rule, count),
            (Some(rule), _, NormingSpec::Explicit(c)) => {
                generate(rule, count).and_then(|p| SolitonParams::explicit(p.kappas().to_vec(), c.clone()))
            }
            (None, KappaSpec::Explicit(k), NormingSpec::Rule(_)) => SolitonParams::explicit_matched(k.clone()),
            (None, KappaSpec::Explicit(k), NormingSpec::Explicit(c)) => SolitonParams::explicit(k.clone(), c.clone()),
            (None, _, _) => unreachable!("only explicit kappas lack a rule"),
        };
        params.map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        Grid::uniform(self.t_values.clone(), self.x_min, self.x_max, self.nx)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.suites.is_empty() {
            return invalid("suites must not be empty");
        }
        for (i, s) in self.suites.iter().enumerate() {
            if self.suites[..i].contains(s) {
                return invalid(format!("suite {s} listed twice"));
            }
        }
        let g = &self.grid;
        if g.nx < 2 {
            return invalid("grid.nx must be at least 2");
        }
        if !(g.x_min < g.x_max) {
            return invalid("grid.x_min must be below grid.x_max");
        }
        if g.t_values.is_empty() {
            return invalid("grid.t_values must not be empty");
        }
        let tol = &self.tolerances;
        let tols = [
            tol.field,
            tol.kdv,
            tol.spectrum,
            tol.scatter,
            tol.invariants,
            tol.converge,
            tol.mfunction,
        ];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return invalid("tolerances must be positive");
        }
        let o = &self.options;
        if !(o.spectrum_h > 0.0 && o.scatter_du > 0.0 && o.scatter_window_tol > 0.0 && o.invariants_du > 0.0) {
            return invalid("spacings and window tolerances must be positive");
        }
        if o.k_grid.iter().any(|k| !(*k > 0.0)) {
            return invalid("k_grid entries must be positive");
        }
        if o.ladder.is_empty() || o.ladder.windows(2).any(|w| w[1] < w[0]) {
            return invalid("ladder must be nonempty and nondecreasing");
        }
        if o.mfunction_side == 0 {
            return invalid("mfunction_side must be positive");
        }
        let params = self.params.build()?;
        if let Some(n) = o.n {
            if n > params.len() {
                return invalid(format!(
                    "options.n = {n} exceeds the {} stored parameters",
                    params.len()
                ));
            }
        }
        self.grid.build()?;
        if self.suites.contains(&Suite::Converge) {
            prepare_ladder(&params, &o.ladder, &[Norm::L1, Norm::L2, Norm::Linf])
                .map_err(|e| ConfigError::Invalid(format!("converge ladder: {e}")))?;
        }
        Ok(())
    }

    /// Truncation order used by every suite except `converge`.
    pub fn order(&self, params: &SolitonParams) -> usize {
        self.options.n.unwrap_or(params.len())
    }
}
