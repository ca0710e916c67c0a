use std::time::Instant;

use rayon::prelude::*;

use super::report::Deviation;
use super::{ExperimentConfig, HarnessError, PredictionEntry, PredictionReport, ReportRow};
use crate::asymptotics::{predict, FormulaId};
use crate::exact::best_constant_error;
use crate::kernel::KernelSpec;
use crate::psi::PsiSequence;

/// Computes one row. Failures are recorded in the row rather than returned.
pub fn compute_row(
    psi: &PsiSequence,
    beta: f64,
    n: u64,
    tol: f64,
    formulas: &[FormulaId],
) -> ReportRow {
    let start = Instant::now();
    let estimate =
        KernelSpec::new(psi.clone(), beta, n).and_then(|spec| best_constant_error(&spec, tol));
    let (estimate, error) = match estimate {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let predictions = formulas
        .iter()
        .map(|&id| match predict(id, psi, n, tol) {
            Ok(p) => PredictionEntry {
                formula_id: id,
                dev: estimate.as_ref().map(|e| Deviation::compute(&e.e_n, &p)),
                prediction: Some(p),
                error: None,
            },
            Err(e) => PredictionEntry {
                formula_id: id,
                prediction: None,
                dev: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    ReportRow {
        family: psi.name().to_string(),
        beta,
        n,
        sandwich_holds: estimate.as_ref().map(ReportRow::check_sandwich),
        estimate,
        error,
        predictions,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the sweep without writing the output file.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PredictionReport, HarnessError> {
    config.validate()?;
    let psi = config.psi();
    let ns = config.n_range.values().expect("validated range");
    let cells: Vec<(f64, u64)> = config
        .betas()
        .into_iter()
        .flat_map(|b| ns.iter().map(move |&n| (b, n)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.pool_size())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    // Indexed collect keeps the (β, n) order regardless of scheduling.
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(b, n)| compute_row(&psi, b, n, config.tol, &config.formulas))
            .collect()
    });
    Ok(PredictionReport {
        config: config.clone(),
        rows,
    })
}

/// Runs the sweep and writes the report to the configured output.
pub fn run_sweep(config: &ExperimentConfig) -> Result<PredictionReport, HarnessError> {
    let report = run_experiment(config)?;
    report.write_to(&config.output.path, config.output.format)?;
    Ok(report)
}
