//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;

use fourier_width::validation;

fn main() -> ExitCode {
    let results = validation::run_all(0);
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
