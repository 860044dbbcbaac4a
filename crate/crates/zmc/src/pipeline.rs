//! Batch front door: configuration in, classification report and
//! artifacts out. The stages are solver (optional), builder, residuals,
//! classification, expectations, frame integration (optional), export.
//!
//! The exit verdict is deliberate: a run passes when every residual gate
//! holds at the configured tolerance *and* the classification matches
//! the profile its case promises (a flat-normal surface must report
//! `K != L0`, a one-lift surface must have exactly one degenerate lift,
//! and so on). The perturbation hook breaks a field after the build so
//! negative controls exercise the same gates.

use crate::config::{Case, ConfigError, RunConfig, SolveConfig};
use crate::constructors::{
    build_case_i, build_case_ii, build_flat_normal, build_lorentzian, build_one_lift, BuildError,
};
use crate::expr::Expr;
use crate::field::{inscribed_uv_grid, FieldError, Grid, ScalarField};
use crate::frame::{
    export_immersion, frame_residuals, integrate_frame_with, FrameError, FrameResidualSummary,
    InitialFrame, IntegrateOptions,
};
use crate::invariants::{
    classify, default_tolerance, paraholomorphy_residual, quartic_q, ClassificationReport, Family,
    FundamentalData, InvariantsError, LiftStatus, QStatus,
};
use crate::pde::{GoursatScalar, GoursatSystem, PdeError};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config stage: {0}")]
    Config(#[from] ConfigError),
    #[error("solver stage: {0}")]
    Pde(#[from] PdeError),
    #[error("sampling stage: {0}")]
    Field(#[from] FieldError),
    #[error("builder stage: {0}")]
    Build(#[from] BuildError),
    #[error("invariants stage: {0}")]
    Invariants(#[from] InvariantsError),
    #[error("frame stage: {0}")]
    Frame(#[from] FrameError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("the solve subcommand needs a solve block in the config")]
    MissingSolve,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// full pipeline with frame integration and export
    Run,
    /// build and residual gates only
    Check,
    /// build and classification report only, no gating
    Classify,
    /// PDE solve only, emitting the solved fields as CSV
    Solve,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSummary {
    pub tolerance: f64,
    pub gauss_max: f64,
    pub codazzi_max: f64,
    pub codazzi_each: [f64; 4],
    pub ricci_max: f64,
    pub compatibility_max: f64,
    pub paraholomorphy_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub timestamp: u64,
    pub case: String,
    pub config: RunConfig,
    pub grid: Grid,
    pub residuals: ResidualSummary,
    pub classification: ClassificationReport,
    pub expectations: Vec<Expectation>,
    pub frame: Option<FrameResidualSummary>,
    pub failures: Vec<String>,
    pub pass: bool,
}

#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub report: Option<Report>,
    pub artifacts: Vec<PathBuf>,
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Margin used when deriving a `(u,v)` grid inscribed in a solver's
/// characteristic rectangle; keeps interpolation stencils interior.
const INSCRIBE_MARGIN: f64 = 0.05;

fn solved_scalar(config: &RunConfig, solve: &SolveConfig) -> Result<ScalarField, PipelineError> {
    let st = solve.grid.grid()?;
    let b = solve.boundary.as_ref().expect("validated");
    let on_t0 = Expr::parse(&b.on_t0, &["s"]).expect("validated");
    let on_s0 = Expr::parse(&b.on_s0, &["t"]).expect("validated");
    let prob = GoursatScalar::new(
        st,
        config.ambient.l0,
        config.signs.eps.value(),
        on_t0,
        on_s0,
    );
    Ok(prob.solve()?)
}

fn solved_system(
    config: &RunConfig,
    solve: &SolveConfig,
) -> Result<(ScalarField, ScalarField), PipelineError> {
    let st = solve.grid.grid()?;
    let b1 = solve.boundary_f1.as_ref().expect("validated");
    let b2 = solve.boundary_f2.as_ref().expect("validated");
    let prob = GoursatSystem::new(
        st,
        config.ambient.l0,
        config.signs.eps.value(),
        Expr::parse(&b1.on_t0, &["s"]).expect("validated"),
        Expr::parse(&b1.on_s0, &["t"]).expect("validated"),
        Expr::parse(&b2.on_t0, &["s"]).expect("validated"),
        Expr::parse(&b2.on_s0, &["t"]).expect("validated"),
    );
    Ok(prob.solve()?)
}

fn data_grid(config: &RunConfig, st: Option<Grid>) -> Result<Grid, PipelineError> {
    if let Some(g) = &config.grid {
        return Ok(g.grid()?);
    }
    let st = st.expect("validate() guarantees a grid or a solve block");
    Ok(inscribed_uv_grid(&st, st.n1, st.n2, INSCRIBE_MARGIN))
}

fn build_data(config: &RunConfig, case: Case) -> Result<FundamentalData, PipelineError> {
    let ambient = config.ambient.spec();
    let tol = config.tolerances.precondition;
    let data = match case {
        Case::CaseI => {
            let grid = data_grid(config, None)?;
            let lambda = ScalarField::sample(&config.function(case, "lambda")?, grid)?;
            build_case_i(
                ambient,
                &lambda,
                &config.function(case, "gamma")?,
                &config.function(case, "p_plus")?,
                &config.function(case, "p_minus")?,
                config.signs.eps,
                tol,
            )?
        }
        Case::CaseIi => {
            let grid = data_grid(config, None)?;
            let lambda = ScalarField::sample(&config.function(case, "lambda")?, grid)?;
            build_case_ii(
                ambient,
                &lambda,
                &config.function(case, "gamma")?,
                &config.function(case, "phi")?,
                &config.function(case, "psi")?,
                config.signs.eps,
                tol,
            )?
        }
        Case::FlatNormal => {
            let (grid, lambda) = match &config.solve {
                Some(solve) => {
                    let lam_st = solved_scalar(config, solve)?;
                    let grid = data_grid(config, Some(*lam_st.grid()))?;
                    (grid, lam_st.resample_to(grid)?)
                }
                None => {
                    let grid = data_grid(config, None)?;
                    let lam = ScalarField::sample(&config.function(case, "lambda")?, grid)?;
                    (grid, lam)
                }
            };
            let p_plus = ScalarField::sample(&config.function(case, "p_plus")?, grid)?;
            build_flat_normal(
                ambient,
                &lambda,
                &p_plus,
                config.constant_c,
                config.signs,
                tol,
            )?
        }
        Case::OneLift => {
            let (grid, f1, f2) = match &config.solve {
                Some(solve) => {
                    let (f1_st, f2_st) = solved_system(config, solve)?;
                    let grid = data_grid(config, Some(*f1_st.grid()))?;
                    (grid, f1_st.resample_to(grid)?, f2_st.resample_to(grid)?)
                }
                None => {
                    let grid = data_grid(config, None)?;
                    (
                        grid,
                        ScalarField::sample(&config.function(case, "f1")?, grid)?,
                        ScalarField::sample(&config.function(case, "f2")?, grid)?,
                    )
                }
            };
            let gauge = ScalarField::sample(&config.function(case, "p_tilde_minus")?, grid)?;
            build_one_lift(ambient, &f1, &f2, &gauge, config.signs, tol)?
        }
        Case::Lorentzian => {
            let grid = data_grid(config, None)?;
            let lambda = ScalarField::sample(&config.function(case, "lambda")?, grid)?;
            build_lorentzian(
                ambient,
                &lambda,
                &config.function(case, "gamma")?,
                &config.function(case, "c_eps")?,
                config.signs.eps,
                tol,
            )?
        }
    };
    Ok(match &config.perturbation {
        Some(p) => data.perturbed(p.field, p.amount),
        None => data,
    })
}

fn case_expectations(case: Case, report: &ClassificationReport) -> Vec<Expectation> {
    let mut out = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        out.push(Expectation {
            name: name.to_string(),
            pass,
            detail,
        })
    };
    let q = report.q_status;
    let lift = |l: &Option<crate::invariants::LiftVerdict>| l.as_ref().map(|v| v.status);
    match case {
        Case::CaseI | Case::CaseIi => {
            push(
                "k_equals_l0",
                report.k_equals_l0.pass,
                format!("max |K - L0| = {}", report.k_equals_l0.max_deviation),
            );
            push(
                "normal_flat",
                report.normal_flat.pass,
                format!("max |R_perp| = {}", report.normal_flat.max_deviation),
            );
            push(
                "q_zero_or_null",
                matches!(q, Some(QStatus::Zero | QStatus::NullNonzero)),
                format!("q_status = {q:?}"),
            );
            push(
                "lift_plus_zero_or_lightlike",
                lift(&report.lift_plus) == Some(LiftStatus::ZeroOrLightlike),
                format!("{:?}", report.lift_plus),
            );
            push(
                "lift_minus_zero_or_lightlike",
                lift(&report.lift_minus) == Some(LiftStatus::ZeroOrLightlike),
                format!("{:?}", report.lift_minus),
            );
        }
        Case::FlatNormal => {
            push(
                "normal_flat",
                report.normal_flat.pass,
                format!("max |R_perp| = {}", report.normal_flat.max_deviation),
            );
            push(
                "k_differs_from_l0",
                !report.k_equals_l0.pass,
                format!("max |K - L0| = {}", report.k_equals_l0.max_deviation),
            );
            push(
                "q_non_null",
                q == Some(QStatus::NonNull),
                format!("q_status = {q:?}"),
            );
            push(
                "lift_plus_not",
                lift(&report.lift_plus) == Some(LiftStatus::Not),
                format!("{:?}", report.lift_plus),
            );
            push(
                "lift_minus_not",
                lift(&report.lift_minus) == Some(LiftStatus::Not),
                format!("{:?}", report.lift_minus),
            );
        }
        Case::OneLift => {
            push(
                "q_null_nonzero",
                q == Some(QStatus::NullNonzero),
                format!("q_status = {q:?}"),
            );
            push(
                "lift_minus_zero_or_lightlike",
                lift(&report.lift_minus) == Some(LiftStatus::ZeroOrLightlike),
                format!("{:?}", report.lift_minus),
            );
            push(
                "lift_plus_not",
                lift(&report.lift_plus) == Some(LiftStatus::Not),
                format!("{:?}", report.lift_plus),
            );
            push(
                "k_differs_from_l0",
                !report.k_equals_l0.pass,
                format!("max |K - L0| = {}", report.k_equals_l0.max_deviation),
            );
            push(
                "normal_not_flat",
                !report.normal_flat.pass,
                format!("max |R_perp| = {}", report.normal_flat.max_deviation),
            );
        }
        Case::Lorentzian => {
            push(
                "k_equals_l0",
                report.k_equals_l0.pass,
                format!("max |K - L0| = {}", report.k_equals_l0.max_deviation),
            );
            push(
                "normal_flat",
                report.normal_flat.pass,
                format!("max |R_perp| = {}", report.normal_flat.max_deviation),
            );
        }
    }
    out
}

fn write_field_csv(field: &ScalarField, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, field.to_csv()).map_err(io_err(path))
}

/// Run one configuration through the requested pipeline mode, writing
/// artifacts under `out_dir`. The outcome's `pass` drives the process
/// exit status: true only when every gate and expectation holds.
pub fn run_pipeline(
    config: &RunConfig,
    mode: Mode,
    out_dir: &Path,
) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let case = config.case()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut artifacts = Vec::new();

    if mode == Mode::Solve {
        let solve = config.solve.as_ref().ok_or(PipelineError::MissingSolve)?;
        match case {
            Case::OneLift => {
                let (f1, f2) = solved_system(config, solve)?;
                for (f, name) in [(f1, "f1.csv"), (f2, "f2.csv")] {
                    let path = out_dir.join(name);
                    write_field_csv(&f, &path)?;
                    artifacts.push(path);
                }
            }
            _ => {
                let lam = solved_scalar(config, solve)?;
                let path = out_dir.join("lambda.csv");
                write_field_csv(&lam, &path)?;
                artifacts.push(path);
            }
        }
        return Ok(Outcome {
            pass: true,
            report: None,
            artifacts,
        });
    }

    let data = build_data(config, case)?;
    let tolerance = config
        .tolerances
        .verdict
        .unwrap_or_else(|| default_tolerance(&data));
    let classification = classify(&data, Some(tolerance));

    let paraholomorphy_max = if data.ambient.family == Family::Neutral {
        Some(paraholomorphy_residual(&quartic_q(&data)?).max_abs())
    } else {
        None
    };
    let rm = &classification.residual_maxima;
    let residuals = ResidualSummary {
        tolerance,
        gauss_max: rm.gauss,
        codazzi_max: rm.codazzi.into_iter().fold(0.0f64, f64::max),
        codazzi_each: rm.codazzi,
        ricci_max: rm.ricci,
        compatibility_max: rm.compatibility,
        paraholomorphy_max,
    };

    let mut failures: Vec<String> = Vec::new();
    for (name, value) in [
        ("gauss", residuals.gauss_max),
        ("codazzi", residuals.codazzi_max),
        ("ricci", residuals.ricci_max),
        ("compatibility", residuals.compatibility_max),
    ] {
        if value > tolerance {
            failures.push(name.to_string());
        }
    }
    if let Some(p) = residuals.paraholomorphy_max {
        if p > tolerance {
            failures.push("paraholomorphy".to_string());
        }
    }

    let expectations = if mode == Mode::Check {
        Vec::new()
    } else {
        let ex = case_expectations(case, &classification);
        for e in &ex {
            if !e.pass {
                failures.push(e.name.clone());
            }
        }
        ex
    };

    let frame_summary = if mode == Mode::Run && config.pipeline.integrate_frame {
        let options = IntegrateOptions {
            reproject: config.pipeline.reproject,
        };
        let ff = integrate_frame_with(&data, InitialFrame::Canonical, options)?;
        let res = frame_residuals(&ff, &data)?;
        if config.pipeline.export {
            let csv_path = out_dir.join("immersion.csv");
            let sidecar_path = out_dir.join("immersion.meta.json");
            export_immersion(
                &ff,
                Some(&res),
                Some(&config.signs),
                &csv_path,
                &sidecar_path,
            )?;
            artifacts.push(csv_path);
            artifacts.push(sidecar_path);
        }
        Some(res.summary())
    } else {
        None
    };

    // classification-only mode reports but does not gate
    let pass = mode == Mode::Classify || failures.is_empty();
    let report = Report {
        schema_version: crate::config::SCHEMA_VERSION,
        timestamp: timestamp(),
        case: case.name().to_string(),
        config: config.clone(),
        grid: *data.grid(),
        residuals,
        classification,
        expectations,
        frame: frame_summary,
        failures,
        pass,
    };
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, json).map_err(io_err(&report_path))?;
    artifacts.push(report_path);

    Ok(Outcome {
        pass,
        report: Some(report),
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn case_i_liouville_config(n: usize) -> String {
        format!(
            r#"{{
              "schema_version": 1,
              "case": "case_i",
              "ambient": {{"family": "neutral", "l0": 1.0}},
              "grid": {{"u_min": 0.0, "u_max": 1.0, "v_min": 1.0, "v_max": 2.0, "n_u": {n}, "n_v": {n}}},
              "functions": {{
                "lambda": "-ln(v)",
                "gamma": "0.2*u*v",
                "p_plus": "1",
                "p_minus": "1"
              }},
              "pipeline": {{"integrate_frame": false, "export": false}}
            }}"#
        )
    }

    #[test]
    fn case_i_run_passes() {
        let cfg = RunConfig::from_str(&case_i_liouville_config(65)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_pipeline(&cfg, Mode::Run, dir.path()).unwrap();
        assert!(outcome.pass, "{:?}", outcome.report.unwrap().failures);
        let report = outcome.report.unwrap();
        assert!(report.residuals.gauss_max <= report.residuals.tolerance);
        assert!(report.classification.k_equals_l0.pass);
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn perturbation_hook_fails_the_run() {
        let text = case_i_liouville_config(65).replace(
            "\"pipeline\"",
            "\"perturbation\": {\"field\": \"alpha1\", \"amount\": 0.1}, \"pipeline\"",
        );
        let cfg = RunConfig::from_str(&text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_pipeline(&cfg, Mode::Run, dir.path()).unwrap();
        assert!(!outcome.pass);
        let report = outcome.report.unwrap();
        assert!(
            report
                .failures
                .iter()
                .any(|f| f == "gauss" || f == "codazzi" || f == "compatibility"),
            "failures: {:?}",
            report.failures
        );
    }

    #[test]
    fn reports_are_deterministic_modulo_timestamp() {
        let cfg = RunConfig::from_str(&case_i_liouville_config(33)).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_pipeline(&cfg, Mode::Run, d1.path()).unwrap();
        run_pipeline(&cfg, Mode::Run, d2.path()).unwrap();
        let strip = |p: &Path| {
            let mut v: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(p.join("report.json")).unwrap())
                    .unwrap();
            v["timestamp"] = 0.into();
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(d1.path()), strip(d2.path()));
    }

    #[test]
    fn solve_mode_emits_csv() {
        let text = r#"{
          "schema_version": 1,
          "case": "flat_normal",
          "ambient": {"family": "neutral", "l0": 1.0},
          "signs": {"eps": 1},
          "functions": {"p_plus": "s*t"},
          "solve": {
            "grid": {"s_min": 0.0, "s_max": 1.0, "t_min": 0.0, "t_max": 1.0, "n_s": 33, "n_t": 33},
            "boundary": {"on_t0": "0", "on_s0": "0"}
          }
        }"#;
        let cfg = RunConfig::from_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_pipeline(&cfg, Mode::Solve, dir.path()).unwrap();
        assert!(outcome.pass);
        let csv = std::fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
        assert!(csv.starts_with("s,t,value"));
        assert_eq!(csv.lines().count(), 33 * 33 + 1);
    }

    #[test]
    fn flat_normal_solved_lambda_passes() {
        let text = r#"{
          "schema_version": 1,
          "case": "flat_normal",
          "ambient": {"family": "neutral", "l0": 1.0},
          "signs": {"eps": 1},
          "functions": {"p_plus": "s*t"},
          "constant_c": 0.3,
          "solve": {
            "grid": {"s_min": 0.0, "s_max": 1.0, "t_min": 0.0, "t_max": 1.0, "n_s": 65, "n_t": 65},
            "boundary": {"on_t0": "0", "on_s0": "0"}
          },
          "pipeline": {"integrate_frame": false, "export": false}
        }"#;
        let cfg = RunConfig::from_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_pipeline(&cfg, Mode::Run, dir.path()).unwrap();
        let report = outcome.report.unwrap();
        assert!(outcome.pass, "failures: {:?}", report.failures);
        assert!(report.classification.normal_flat.pass);
        assert!(!report.classification.k_equals_l0.pass);
    }

    #[test]
    fn check_mode_gates_residuals_only() {
        let cfg = RunConfig::from_str(&case_i_liouville_config(33)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_pipeline(&cfg, Mode::Check, dir.path()).unwrap();
        assert!(outcome.pass);
        assert!(outcome.report.unwrap().expectations.is_empty());
    }
}
