//! Mode orchestration: build the model from a validated config, generate
//! paths, run diagnostics and write the artifacts.

use std::path::Path;

use idpath::diagnostics::{
    check_assumptions, empirical_cf, normality_test, tail_exponent, theoretical_cf, AssumptionOptions, DiagError,
    DiagnosticsReport,
};
use idpath::simulator::{component_seed, path_rng, refinement_warnings, Component, PathGenerator, RefinementField};
use idpath::{Kernel, LevyRepresentation, SamplePath, SimError, TruncationParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::output;

/// Smallest batch on which the statistical diagnostics are run.
pub const MIN_STAT_PATHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct RunError {
    pub code: String,
    pub message: String,
    pub details: Vec<String>,
}

impl RunError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            details: Vec::new(),
        }
    }
}

impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<DiagError> for RunError {
    fn from(e: DiagError) -> Self {
        let code = match &e {
            DiagError::Sim(s) => s.code(),
            DiagError::Kernel(_) => "KERNEL_ERROR",
            DiagError::Rep(_) => "REPRESENTATION_ERROR",
            DiagError::TooFewSamples { .. } => "TOO_FEW_PATHS",
            DiagError::Singular(_) => "ASSUMPTION_3A",
            DiagError::NotOnGrid(_) | DiagError::Parameter(_) => "DIAGNOSTIC_ERROR",
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::new("IO_ERROR", e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub schema: &'static str,
    pub mode: Mode,
    pub rep_id: String,
    pub kernel_id: String,
    pub n_paths: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfRow {
    pub y: f64,
    pub empirical: [f64; 2],
    pub theoretical: [f64; 2],
    pub distance: f64,
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfComparison {
    pub t: f64,
    pub rows: Vec<CfRow>,
    pub sup_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub schema: &'static str,
    pub rep_id: String,
    pub kernel_id: String,
    pub m: f64,
    pub n_paths: usize,
    pub cf: CfComparison,
    /// `4/√n + 10⁻³`.
    pub tolerance: f64,
    pub pass: bool,
}

/// What a successful run produced, besides the files.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub paths: Vec<SamplePath>,
    pub summary: Vec<output::SummaryRow>,
    pub report: Option<DiagnosticsReport>,
    pub validation: Option<ValidationReport>,
    pub warnings: Vec<String>,
}

struct Model {
    rep: LevyRepresentation,
    kernel: Kernel,
    trunc: TruncationParams,
}

fn build(config: &ExperimentConfig) -> Result<Model, RunError> {
    let rep = config
        .rep
        .build()
        .map_err(|e| RunError::new("REPRESENTATION_ERROR", e.to_string()))?;
    let mut kernel = config
        .kernel
        .build(config.horizon())
        .map_err(|e| RunError::new("KERNEL_ERROR", e.to_string()))?;
    if let Some(tol) = config.quadrature_tol {
        kernel = kernel.with_quadrature_tol(tol);
    }
    let trunc = TruncationParams::new(config.trunc.m, config.trunc.window)?;
    Ok(Model { rep, kernel, trunc })
}

fn principal(model: &Model, config: &ExperimentConfig, n: usize) -> Result<Vec<SamplePath>, RunError> {
    let gen = PathGenerator::principal(&model.rep, &model.kernel, &model.trunc, &config.grid)?;
    Ok(gen.sample_batch(config.seed, Component::Principal, n))
}

fn q_band(model: &Model, config: &ExperimentConfig, n: usize) -> Result<Vec<SamplePath>, RunError> {
    let gen = PathGenerator::q_band(
        &model.rep,
        &model.kernel,
        model.trunc.m,
        config.upper(),
        model.trunc.window,
        &config.grid,
    )?;
    Ok(gen.sample_batch(config.seed, Component::QBand, n))
}

fn r_band(model: &Model, config: &ExperimentConfig, n: usize) -> Result<Vec<SamplePath>, RunError> {
    let band = config
        .band
        .as_ref()
        .ok_or_else(|| RunError::new("CONFIG_INVALID", "rband needs a band section"))?;
    let gen = PathGenerator::r_band(
        &model.rep,
        &model.kernel,
        model.trunc.m,
        band.inner,
        band.outer,
        &config.grid,
    )?;
    Ok(gen.sample_batch(config.seed, Component::RBand, n))
}

/// Principal paths plus `σ_m G` on the same grid.
fn refined(model: &Model, config: &ExperimentConfig) -> Result<Vec<SamplePath>, RunError> {
    let sigma_sq = model
        .rep
        .residual_covariance(model.trunc.m)
        .map_err(|e| RunError::new("REPRESENTATION_ERROR", e.to_string()))?;
    let field = RefinementField::new(
        &model.kernel,
        &sigma_sq,
        model.trunc.window,
        &config.grid,
        config.refine.resolution,
    )?;
    let mut paths = principal(model, config, config.n_paths)?;
    let cs = component_seed(config.seed, Component::Refinement);
    paths.par_iter_mut().enumerate().for_each(|(i, p)| {
        let g = field.sample(&mut path_rng(cs, i as u64));
        for (row, gr) in p.values.iter_mut().zip(&g.values) {
            row.iter_mut().zip(gr).for_each(|(v, x)| *v += x);
        }
        p.meta.refined = true;
    });
    Ok(paths)
}

/// Empirical against theoretical CF of the principal term at time `t`
/// along the first coordinate axis.
pub fn compare_cf(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    trunc: &TruncationParams,
    paths: &[SamplePath],
    t: f64,
    y_grid: &[f64],
) -> Result<CfComparison, DiagError> {
    let ys: Vec<Vec<f64>> = y_grid
        .iter()
        .map(|&y| {
            let mut v = vec![0.0; rep.dim()];
            v[0] = y;
            v
        })
        .collect();
    let emp = empirical_cf(paths, t, &ys)?;
    let rows = ys
        .iter()
        .zip(&emp)
        .map(|(y, e)| {
            let th = theoretical_cf(rep, kernel, trunc.m, &trunc.window, t, y)?;
            Ok(CfRow {
                y: y[0],
                empirical: [e.re, e.im],
                theoretical: [th.value.re, th.value.im],
                distance: (e - th.value).norm(),
                quadrature_error: th.error,
            })
        })
        .collect::<Result<Vec<_>, DiagError>>()?;
    let sup_distance = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    Ok(CfComparison { t, rows, sup_distance })
}

/// Up to three well-spread positive grid times.
fn normality_times(grid: &[f64]) -> Vec<f64> {
    let positive: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0).collect();
    let n = positive.len();
    let mut picks: Vec<f64> = [n / 3, (2 * n) / 3, n.saturating_sub(1)]
        .iter()
        .filter_map(|&i| positive.get(i).copied())
        .collect();
    picks.dedup();
    picks
}

fn diagnose(
    model: &Model,
    config: &ExperimentConfig,
    paths: &[SamplePath],
    warnings: &mut Vec<String>,
) -> Result<DiagnosticsReport, RunError> {
    let d = &config.diagnostics;
    let options = AssumptionOptions {
        n_marks: d.n_marks,
        seed: component_seed(config.seed, Component::Diagnostics),
        ..AssumptionOptions::default()
    };
    let mut report = check_assumptions(&model.rep, &model.kernel, &d.m_grid, &d.kappa_grid, &options)?;
    if config.n_paths < MIN_STAT_PATHS {
        warnings.push(format!(
            "n_paths < {MIN_STAT_PATHS}: statistical diagnostics (CF distance, normality, tail index) skipped"
        ));
        return Ok(report);
    }
    let t_end = *paths[0].grid.last().unwrap();
    report.cf_distance =
        Some(compare_cf(&model.rep, &model.kernel, &model.trunc, paths, t_end, &d.y_grid)?.sup_distance);

    let cov = |m: f64| {
        model
            .rep
            .residual_covariance(m)
            .map_err(|e| RunError::new("REPRESENTATION_ERROR", e.to_string()))
    };
    let band_cov = cov(model.trunc.m)? - cov(config.upper())?;
    let q = q_band(model, config, config.n_paths)?;
    match normality_test(
        &q,
        &band_cov,
        &model.kernel,
        &model.trunc.window,
        &normality_times(&q[0].grid),
    ) {
        Ok(res) => report.normality_p = Some(res.min_p()),
        Err(DiagError::Singular(what)) => {
            warnings.push(format!("normality test skipped: {what} is singular"));
        }
        Err(e) => return Err(e.into()),
    }

    if config.band.is_some() {
        let sups: Vec<f64> = r_band(model, config, config.n_paths)?
            .iter()
            .map(|p| p.sup_norm())
            .collect();
        report.tail_alpha_hat = Some(tail_exponent(&sups, d.top_fraction)?);
    }
    Ok(report)
}

/// Runs `config` and writes all artifacts into `config.output.dir`.
///
/// The directory gets `config.json`, `run.json`, the paths and summary
/// files and, depending on the mode, `report.json` or `validation.json`.
pub fn run(config: &ExperimentConfig, parse_warnings: &[String]) -> Result<RunOutcome, RunError> {
    let mut warnings = parse_warnings.to_vec();
    let model = build(config)?;
    let mut report = None;
    let mut validation = None;
    let paths = match config.mode {
        Mode::Simulate => principal(&model, config, config.n_paths)?,
        Mode::Qband => q_band(&model, config, config.n_paths)?,
        Mode::Rband => r_band(&model, config, config.n_paths)?,
        Mode::Refine => {
            warnings.extend(refinement_warnings(&model.rep).into_iter().map(String::from));
            refined(&model, config)?
        }
        Mode::Diagnose => {
            let paths = principal(&model, config, config.n_paths)?;
            report = Some(diagnose(&model, config, &paths, &mut warnings)?);
            paths
        }
        Mode::Validate => {
            if config.n_paths < MIN_STAT_PATHS {
                return Err(RunError::new(
                    "TOO_FEW_PATHS",
                    format!("validate needs at least {MIN_STAT_PATHS} paths, got {}", config.n_paths),
                ));
            }
            let paths = principal(&model, config, config.n_paths)?;
            let t_end = *paths[0].grid.last().unwrap();
            let cf = compare_cf(
                &model.rep,
                &model.kernel,
                &model.trunc,
                &paths,
                t_end,
                &config.diagnostics.y_grid,
            )?;
            let tolerance = 4.0 / (config.n_paths as f64).sqrt() + 1e-3;
            validation = Some(ValidationReport {
                schema: output::VALIDATION_SCHEMA,
                rep_id: model.rep.id(),
                kernel_id: model.kernel.id(),
                m: model.trunc.m,
                n_paths: config.n_paths,
                pass: cf.sup_distance <= tolerance,
                cf,
                tolerance,
            });
            paths
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)?;
    let stale = dir.join("error.json");
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    let summary = output::summarize(&paths);
    write_all(dir, config, &paths, &summary, &warnings, &model)?;
    if let Some(r) = &report {
        output::write_named_json(dir, "report.json", r)?;
    }
    if let Some(v) = &validation {
        output::write_named_json(dir, "validation.json", v)?;
    }
    Ok(RunOutcome {
        paths,
        summary,
        report,
        validation,
        warnings,
    })
}

fn write_all(
    dir: &Path,
    config: &ExperimentConfig,
    paths: &[SamplePath],
    summary: &[output::SummaryRow],
    warnings: &[String],
    model: &Model,
) -> Result<(), RunError> {
    std::fs::write(dir.join("config.json"), config.emit())?;
    output::write_paths(dir, paths, config.output.format)?;
    output::write_summary(dir, summary, config.output.format)?;
    output::write_named_json(
        dir,
        "run.json",
        &RunRecord {
            schema: output::RUN_SCHEMA,
            mode: config.mode,
            rep_id: model.rep.id(),
            kernel_id: model.kernel.id(),
            n_paths: config.n_paths,
            seed: config.seed,
            warnings: warnings.to_vec(),
        },
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normality_times_spread() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(normality_times(&grid), vec![0.4, 0.7, 1.0]);
        assert_eq!(normality_times(&[0.0, 1.0]), vec![1.0]);
    }
}
