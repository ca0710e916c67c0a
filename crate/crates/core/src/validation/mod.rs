//! Built-in acceptance suite and the dense-grid oracle it compares against.
//!
//! Every criterion returns a [`CriterionResult`] carrying its verdict, a one
//! line summary and the raw numbers it looked at; the numbers are what the
//! determinism criterion compares across thread counts.

mod criteria;
pub mod oracle;

use std::time::Instant;

pub use criteria::{oracle_specs, witness_polynomials, CRITERIA};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub values: Vec<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} ({:.2} s of {} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

pub(crate) struct Outcome {
    pub passed: bool,
    pub detail: String,
    pub values: Vec<f64>,
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget_seconds: f64,
    run: fn() -> Outcome,
}

impl Criterion {
    /// Runs the check; exceeding the time budget fails it.
    pub fn run(&self) -> CriterionResult {
        let start = Instant::now();
        let out = (self.run)();
        let seconds = start.elapsed().as_secs_f64();
        let in_time = seconds < self.budget_seconds;
        let mut detail = out.detail;
        if !in_time {
            detail.push_str("; over time budget");
        }
        CriterionResult {
            id: self.id,
            name: self.name,
            passed: out.passed && in_time,
            detail,
            seconds,
            budget_seconds: self.budget_seconds,
            values: out.values,
        }
    }
}

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Runs every criterion inside a pool of `threads` workers (0 = automatic).
pub fn run_all(threads: usize) -> Vec<CriterionResult> {
    run_selected(threads, &CRITERIA.iter().map(|c| c.id).collect::<Vec<_>>())
}

pub fn run_selected(threads: usize, ids: &[u8]) -> Vec<CriterionResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| {
        ids.iter()
            .filter_map(|&id| criterion(id))
            .map(|c| c.run())
            .collect()
    })
}
