//! Run configuration: a versioned JSON schema describing one surface
//! construction end to end (case, ambient, grids, free functions as
//! expression strings, sign choices, tolerances, pipeline switches).
//!
//! Validation happens up front: required keys per case are checked and
//! every referenced expression is parsed before any stage runs, so
//! config typos fail with the offending key and location.

use crate::constructors::SignChoice;
use crate::expr::Expr;
use crate::field::{CoordKind, FieldError, Grid};
use crate::invariants::{AmbientSpec, Family, FieldName};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Grid(#[from] FieldError),
}

fn schema_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    CaseI,
    CaseIi,
    FlatNormal,
    OneLift,
    Lorentzian,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::CaseI => "case_i",
            Case::CaseIi => "case_ii",
            Case::FlatNormal => "flat_normal",
            Case::OneLift => "one_lift",
            Case::Lorentzian => "lorentzian",
        }
    }

    fn from_name(name: &str) -> Option<Case> {
        Some(match name {
            "case_i" => Case::CaseI,
            "case_ii" => Case::CaseIi,
            "flat_normal" => Case::FlatNormal,
            "one_lift" => Case::OneLift,
            "lorentzian" => Case::Lorentzian,
            _ => return None,
        })
    }

    pub fn family(self) -> Family {
        match self {
            Case::Lorentzian => Family::Lorentzian,
            _ => Family::Neutral,
        }
    }

    /// Two-variable function keys required in `functions`, beyond any
    /// solver-produced fields.
    fn required_functions(self, has_solve: bool) -> &'static [&'static str] {
        match (self, has_solve) {
            (Case::CaseI, _) => &["lambda", "gamma", "p_plus", "p_minus"],
            (Case::CaseIi, _) => &["lambda", "gamma", "phi", "psi"],
            (Case::FlatNormal, false) => &["lambda", "p_plus"],
            (Case::FlatNormal, true) => &["p_plus"],
            (Case::OneLift, false) => &["f1", "f2", "p_tilde_minus"],
            (Case::OneLift, true) => &["p_tilde_minus"],
            (Case::Lorentzian, _) => &["lambda", "gamma", "c_eps"],
        }
    }

    /// Keys whose expressions are one-variable free functions (declared
    /// in `x`); the rest are fields over the coordinates.
    fn one_variable_keys(self) -> &'static [&'static str] {
        match self {
            Case::CaseI => &["p_plus", "p_minus"],
            Case::CaseIi => &["phi", "psi"],
            Case::Lorentzian => &["c_eps"],
            _ => &[],
        }
    }

    /// Keys that must be declared in `(u, v)` alone because the builder
    /// differentiates them symbolically in that chart.
    fn uv_only_keys(self) -> &'static [&'static str] {
        match self {
            Case::CaseI | Case::CaseIi | Case::Lorentzian => &["gamma"],
            _ => &[],
        }
    }

    fn variables_for(self, key: &str) -> &'static [&'static str] {
        if self.one_variable_keys().contains(&key) {
            &["x"]
        } else if self.uv_only_keys().contains(&key) {
            &["u", "v"]
        } else {
            &["u", "v", "s", "t"]
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientConfig {
    pub family: Family,
    pub l0: f64,
}

impl AmbientConfig {
    pub fn spec(&self) -> AmbientSpec {
        AmbientSpec {
            family: self.family,
            l0: self.l0,
        }
    }
}

fn default_n() -> usize {
    129
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UvGridConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default = "default_n")]
    pub n_u: usize,
    #[serde(default = "default_n")]
    pub n_v: usize,
}

impl UvGridConfig {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(
            CoordKind::Uv,
            self.u_min,
            self.u_max,
            self.v_min,
            self.v_max,
            self.n_u,
            self.n_v,
        )?)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StGridConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_n")]
    pub n_s: usize,
    #[serde(default = "default_n")]
    pub n_t: usize,
}

impl StGridConfig {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(
            CoordKind::St,
            self.s_min,
            self.s_max,
            self.t_min,
            self.t_max,
            self.n_s,
            self.n_t,
        )?)
    }
}

/// Boundary pair for a Goursat problem: data along `t = t0` as a
/// function of `s`, and along `s = s0` as a function of `t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub on_t0: String,
    pub on_s0: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: StGridConfig,
    /// scalar problem (`flat_normal` and the `solve` subcommand)
    #[serde(default)]
    pub boundary: Option<BoundaryConfig>,
    /// system problem (`one_lift`)
    #[serde(default)]
    pub boundary_f1: Option<BoundaryConfig>,
    #[serde(default)]
    pub boundary_f2: Option<BoundaryConfig>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// classification / residual-gate tolerance; `None` means `10 h^2`
    /// scaled by field magnitude
    pub verdict: Option<f64>,
    /// builder precondition tolerance
    pub precondition: Option<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSwitches {
    #[serde(default = "default_true")]
    pub integrate_frame: bool,
    #[serde(default = "default_true")]
    pub export: bool,
    #[serde(default)]
    pub reproject: bool,
}

impl Default for PipelineSwitches {
    fn default() -> Self {
        PipelineSwitches {
            integrate_frame: true,
            export: true,
            reproject: false,
        }
    }
}

/// Negative-control hook: add a constant offset to one fundamental field
/// after the build, to demonstrate that the residual gates catch it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub field: FieldName,
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub case: String,
    pub ambient: AmbientConfig,
    #[serde(default)]
    pub grid: Option<UvGridConfig>,
    #[serde(default)]
    pub signs: SignChoice,
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
    #[serde(default)]
    pub constant_c: f64,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub pipeline: PipelineSwitches,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn case(&self) -> Result<Case, ConfigError> {
        Case::from_name(&self.case).ok_or_else(|| {
            schema_err(
                "case",
                format!(
                    "unknown case `{}`; expected one of case_i, case_ii, flat_normal, one_lift, lorentzian",
                    self.case
                ),
            )
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let case = self.case()?;
        if self.ambient.family != case.family() {
            return Err(schema_err(
                "ambient.family",
                format!(
                    "case `{}` requires the {:?} family",
                    case.name(),
                    case.family()
                ),
            ));
        }
        if !self.ambient.l0.is_finite() {
            return Err(schema_err("ambient.l0", "must be finite"));
        }

        let has_solve = self.solve.is_some();
        for key in case.required_functions(has_solve) {
            if !self.functions.contains_key(*key) {
                return Err(schema_err(
                    &format!("functions.{key}"),
                    format!("required for case `{}`", case.name()),
                ));
            }
        }
        for (key, text) in &self.functions {
            Expr::parse(text, case.variables_for(key)).map_err(|e| {
                schema_err(&format!("functions.{key}"), format!("does not parse: {e}"))
            })?;
        }

        if let Some(solve) = &self.solve {
            match case {
                Case::FlatNormal => {
                    if solve.boundary.is_none() {
                        return Err(schema_err(
                            "solve.boundary",
                            "flat_normal with a solve block needs scalar boundary data",
                        ));
                    }
                }
                Case::OneLift => {
                    if solve.boundary_f1.is_none() || solve.boundary_f2.is_none() {
                        return Err(schema_err(
                            "solve.boundary_f1",
                            "one_lift with a solve block needs boundary data for f1 and f2",
                        ));
                    }
                }
                other => {
                    return Err(schema_err(
                        "solve",
                        format!("case `{}` does not take a solve block", other.name()),
                    ))
                }
            }
            for (name, b) in [
                ("boundary", &solve.boundary),
                ("boundary_f1", &solve.boundary_f1),
                ("boundary_f2", &solve.boundary_f2),
            ] {
                if let Some(b) = b {
                    Expr::parse(&b.on_t0, &["s"]).map_err(|e| {
                        schema_err(
                            &format!("solve.{name}.on_t0"),
                            format!("does not parse: {e}"),
                        )
                    })?;
                    Expr::parse(&b.on_s0, &["t"]).map_err(|e| {
                        schema_err(
                            &format!("solve.{name}.on_s0"),
                            format!("does not parse: {e}"),
                        )
                    })?;
                }
            }
        } else if self.grid.is_none() {
            return Err(schema_err("grid", "required when there is no solve block"));
        }

        if let Some(p) = &self.perturbation {
            if !p.amount.is_finite() {
                return Err(schema_err("perturbation.amount", "must be finite"));
            }
        }
        Ok(())
    }

    /// Parsed expression for a functions key. Call only for keys whose
    /// presence [`Self::validate`] has established.
    pub fn function(&self, case: Case, key: &str) -> Result<Expr, ConfigError> {
        let text = self
            .functions
            .get(key)
            .ok_or_else(|| schema_err(&format!("functions.{key}"), "missing"))?;
        Expr::parse(text, case.variables_for(key))
            .map_err(|e| schema_err(&format!("functions.{key}"), format!("does not parse: {e}")))
    }
}
