//! Mode dispatch: assembles the configured problem and fills a [`RunReport`]
//! with the CSV rows and invariant-check results for each mode.

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use krein_core::basis::{build_basis, BasisSpec, DomainSpec};
use krein_core::bounds::{
    bound_constant_numeric, krein_constant, laptev_constant, unit_ball_volume, BoundParams,
};
use krein_core::fmt_sig12;
use krein_core::forms::{dump_matrix, AssembledForms};
use krein_core::spectra::{
    counting_curve, default_lambda_grid, friedrichs_spectrum, geometric_grid,
    krein_positive_spectrum, oracle_1d_krein, oracle_1d_krein_m2, SpectrumResult,
};
use thiserror::Error;

use crate::config::{LambdaGridSpec, Mode, RunConfig};
use crate::report::{CheckResult, RunReport};
use crate::verify;

#[derive(Error, Debug)]
pub enum RunError {
    /// Precondition failures discovered after parsing (empty basis, bad
    /// mode/domain combinations); exit code 1.
    #[error("invalid configuration: {0}")]
    Invalid(String),
    /// Factorization or convergence failures; exit code 2.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub fn run(cfg: &RunConfig, mode: Mode) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(mode.name(), cfg.echo.clone());
    match mode {
        Mode::Spectrum => run_spectrum(cfg, &mut report)?,
        Mode::Count => run_count(cfg, &mut report)?,
        Mode::BoundTable => run_bound_table(cfg, &mut report)?,
        Mode::Oracle => run_oracle(cfg, &mut report)?,
        Mode::Verify => verify::run_verify(cfg, &mut report)?,
    }
    Ok(report)
}

pub(crate) fn assemble_from_config(cfg: &RunConfig) -> Result<AssembledForms, RunError> {
    let spec = BasisSpec {
        degree: cfg.degree,
        cells_per_axis: cfg.cells,
        order: cfg.order,
    };
    let basis = build_basis(&cfg.domain, &spec).map_err(|e| RunError::Invalid(e.to_string()))?;
    AssembledForms::assemble(cfg.domain.clone(), basis, cfg.order)
        .map_err(|e| RunError::Invalid(e.to_string()))
}

pub(crate) fn bound_params(cfg: &RunConfig) -> BoundParams {
    BoundParams::new(cfg.domain.dimension(), cfg.order, cfg.domain.volume())
}

fn resolve_grid(cfg: &RunConfig, krein: &SpectrumResult) -> Vec<f64> {
    match &cfg.lambda_grid {
        LambdaGridSpec::Default { ratio } => default_lambda_grid(&krein.eigenvalues, *ratio),
        LambdaGridSpec::Range { min, max, ratio } => geometric_grid(*min, *max, *ratio),
        LambdaGridSpec::Explicit(list) => list.clone(),
    }
}

fn run_spectrum(cfg: &RunConfig, report: &mut RunReport) -> Result<(), RunError> {
    let t0 = Instant::now();
    let forms = assemble_from_config(cfg)?;
    report
        .timings_ms
        .insert("assemble".into(), t0.elapsed().as_secs_f64() * 1e3);

    let t1 = Instant::now();
    let krein = krein_positive_spectrum(&forms).map_err(|e| RunError::Numerical(e.to_string()))?;
    let fried = friedrichs_spectrum(&forms).map_err(|e| RunError::Numerical(e.to_string()))?;
    report
        .timings_ms
        .insert("solve".into(), t1.elapsed().as_secs_f64() * 1e3);

    report.columns = vec!["j".into(), "krein_lambda".into(), "friedrichs_mu".into()];
    for j in 0..forms.trial_dim() {
        report.rows.push(vec![
            (j + 1).to_string(),
            fmt_sig12(krein.eigenvalues[j]),
            fmt_sig12(fried.eigenvalues[j]),
        ]);
    }

    let positive = krein.eigenvalues.iter().all(|&v| v > 0.0);
    report.checks.push(CheckResult::new(
        "spectra-positive",
        positive,
        format!("smallest discrete eigenvalue {:.6e}", krein.eigenvalues[0]),
    ));
    let ordered = krein
        .eigenvalues
        .iter()
        .zip(&fried.eigenvalues)
        .all(|(l, m)| *m <= l * (1.0 + 1e-9));
    report.checks.push(CheckResult::new(
        "friedrichs-krein-ordering",
        ordered,
        "friedrichs values below buckling values indexwise",
    ));

    if let Some(prefix) = &cfg.dump {
        for (tag, mat) in [
            ("a", &forms.a_mat),
            ("b", &forms.b_mat),
            ("mass", &forms.mass_mat),
        ] {
            let path = format!("{prefix}_{tag}.txt");
            let file = File::create(&path).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            let mut w = BufWriter::new(file);
            dump_matrix(mat, &mut w).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
        }
    }
    Ok(())
}

fn run_count(cfg: &RunConfig, report: &mut RunReport) -> Result<(), RunError> {
    let t0 = Instant::now();
    let forms = assemble_from_config(cfg)?;
    report
        .timings_ms
        .insert("assemble".into(), t0.elapsed().as_secs_f64() * 1e3);

    let t1 = Instant::now();
    let krein = krein_positive_spectrum(&forms).map_err(|e| RunError::Numerical(e.to_string()))?;
    let grid = resolve_grid(cfg, &krein);
    let params = bound_params(cfg);
    let curve = counting_curve(&forms, &grid, &params, true)
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    report
        .timings_ms
        .insert("count".into(), t1.elapsed().as_secs_f64() * 1e3);

    report.columns = vec![
        "lambda".into(),
        "count".into(),
        "krein_bound".into(),
        "weyl".into(),
        "friedrichs_count".into(),
    ];
    let fr = curve.friedrichs_counts.as_ref().expect("requested");
    for i in 0..curve.lambdas.len() {
        report.rows.push(vec![
            fmt_sig12(curve.lambdas[i]),
            curve.counts[i].to_string(),
            fmt_sig12(curve.bound_values[i]),
            fmt_sig12(curve.weyl_values[i]),
            fr[i].to_string(),
        ]);
    }

    let violations = curve.bound_violations();
    let flagged = curve.on_eigenvalue.iter().filter(|&&f| f).count();
    report.checks.push(CheckResult::new(
        "counting-bound-certified",
        violations.is_empty(),
        format!(
            "counts within the certified bound at all {} grid points ({} flagged on-eigenvalue); violations at {:?}",
            grid.len(),
            flagged,
            violations
        ),
    ));
    report.checks.push(CheckResult::new(
        "count-monotonicity",
        curve.counts.windows(2).all(|w| w[0] <= w[1]),
        "counts nondecreasing along the grid",
    ));
    let dominated = fr.iter().zip(&curve.counts).all(|(f, c)| f >= c);
    report.checks.push(CheckResult::new(
        "friedrichs-count-dominates",
        dominated,
        "friedrichs counts at or above buckling counts pointwise",
    ));
    Ok(())
}

fn run_bound_table(cfg: &RunConfig, report: &mut RunReport) -> Result<(), RunError> {
    let t0 = Instant::now();
    report.columns = vec![
        "n".into(),
        "m".into(),
        "v_n".into(),
        "krein_const".into(),
        "laptev_const".into(),
        "numeric_const".into(),
        "alpha_star".into(),
    ];
    let mut superior = true;
    let mut identity = true;
    let mut worst_rel: f64 = 0.0;
    for n in cfg.n_range.0..=cfg.n_range.1 {
        for m in cfg.m_range.0..=cfg.m_range.1 {
            let kc = krein_constant(n, m);
            let lc = laptev_constant(n, m);
            let numeric =
                bound_constant_numeric(n, m).map_err(|e| RunError::Numerical(e.to_string()))?;
            superior &= kc < lc;
            let rel = (numeric.value / kc - 1.0).abs();
            worst_rel = worst_rel.max(rel);
            identity &= rel <= 1e-6;
            report.rows.push(vec![
                n.to_string(),
                m.to_string(),
                fmt_sig12(unit_ball_volume(n)),
                fmt_sig12(kc),
                fmt_sig12(lc),
                fmt_sig12(numeric.value),
                fmt_sig12(numeric.alpha_star),
            ]);
        }
    }
    report
        .timings_ms
        .insert("table".into(), t0.elapsed().as_secs_f64() * 1e3);
    report.checks.push(CheckResult::new(
        "bound-superiority",
        superior,
        "buckling-route constant strictly below the classical one in every row",
    ));
    report.checks.push(CheckResult::new(
        "constant-identity",
        identity,
        format!("worst quadrature-vs-closed-form relative gap {worst_rel:.3e}"),
    ));
    Ok(())
}

fn run_oracle(cfg: &RunConfig, report: &mut RunReport) -> Result<(), RunError> {
    let (a, b) = match &cfg.domain {
        DomainSpec::Interval { a, b } => (*a, *b),
        _ => {
            return Err(RunError::Invalid(
                "oracle mode requires a 1D interval domain".into(),
            ))
        }
    };
    let t0 = Instant::now();
    let (values, root_power) = match cfg.order {
        1 => (
            oracle_1d_krein(a, b, cfg.oracle_count)
                .map_err(|e| RunError::Numerical(e.to_string()))?,
            2.0,
        ),
        2 => (
            oracle_1d_krein_m2(a, b, cfg.oracle_count)
                .map_err(|e| RunError::Numerical(e.to_string()))?,
            4.0,
        ),
        m => {
            return Err(RunError::Invalid(format!(
                "oracle mode supports m = 1 and m = 2, got m = {m}"
            )))
        }
    };
    report
        .timings_ms
        .insert("oracle".into(), t0.elapsed().as_secs_f64() * 1e3);
    report.columns = vec!["j".into(), "k".into(), "lambda".into()];
    for (j, &lambda) in values.iter().enumerate() {
        report.rows.push(vec![
            (j + 1).to_string(),
            fmt_sig12(lambda.powf(1.0 / root_power)),
            fmt_sig12(lambda),
        ]);
    }
    Ok(())
}
