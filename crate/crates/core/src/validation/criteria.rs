use std::f64::consts::{LN_2, PI};

use super::oracle::{grid_oracle, ORACLE_POINTS};
use super::{Criterion, Outcome};
use crate::asymptotics::{predict_t1, FormulaId};
use crate::exact::{best_constant_error, witness_lower_bound, ErrorEstimate, TrigPolynomial};
use crate::harness::{
    run_experiment, ExperimentConfig, FamilySpec, NRange, OutputFormat, OutputSpec, Threads,
};
use crate::kernel::KernelSpec;
use crate::psi::{characteristics, CustomTable, PsiFamily, PsiSequence};
use crate::series::{geometric_tail, moment_tail_sum, tail_sum, weighted_tail_sum, CertifiedValue};

const HARMONIC_TOL: f64 = 1e-10;
const GEOMETRIC_REL: f64 = 1e-12;
const DEV_MAX: f64 = 10.0;
const DEV_GROWTH: f64 = 2.0;
const RATIO_N_BOUND: f64 = 10.0;
const ENVELOPE_C: f64 = 5.0;
const WITNESS_SLACK: f64 = 1e-9;

/// Tolerances handed to the certified search. The log-log family converges
/// so slowly that a tight tolerance costs tens of thousands of terms.
const TIGHT: f64 = 1e-10;
const LOGLOG_TOL: f64 = 1e-3;

pub static CRITERIA: [Criterion; 10] = [
    Criterion {
        id: 1,
        name: "single-harmonic exactness",
        budget_seconds: 1.0,
        run: single_harmonic,
    },
    Criterion {
        id: 2,
        name: "geometric closed forms",
        budget_seconds: 1.0,
        run: geometric_closed_forms,
    },
    Criterion {
        id: 3,
        name: "sandwich invariant",
        budget_seconds: 30.0,
        run: sandwich,
    },
    Criterion {
        id: 4,
        name: "tail-sum main term remainder",
        budget_seconds: 30.0,
        run: t1_remainder,
    },
    Criterion {
        id: 5,
        name: "Poisson ratio convergence",
        budget_seconds: 10.0,
        run: poisson_ratio,
    },
    Criterion {
        id: 6,
        name: "generalized Poisson r<1 envelope",
        budget_seconds: 120.0,
        run: slow_poisson_envelope,
    },
    Criterion {
        id: 7,
        name: "decay-characteristic main term",
        budget_seconds: 120.0,
        run: t2_families,
    },
    Criterion {
        id: 8,
        name: "dense-grid oracle equivalence",
        budget_seconds: 60.0,
        run: oracle_equivalence,
    },
    Criterion {
        id: 9,
        name: "witness soundness",
        budget_seconds: 60.0,
        run: witness_soundness,
    },
    Criterion {
        id: 10,
        name: "thread-count determinism",
        budget_seconds: 60.0,
        run: determinism,
    },
];

fn geometric() -> PsiSequence {
    PsiSequence::geometric(0.5).expect("q = 1/2")
}

fn poisson(alpha: f64, r: f64) -> PsiSequence {
    PsiSequence::generalized_poisson(alpha, r).expect("valid parameters")
}

fn builtin(f: PsiFamily) -> PsiSequence {
    PsiSequence::new(f).expect("built-in family")
}

fn tol_for(psi: &PsiSequence) -> f64 {
    match psi.family() {
        PsiFamily::LogLogPower => LOGLOG_TOL,
        _ => TIGHT,
    }
}

fn estimate(psi: &PsiSequence, beta: f64, n: u64, tol: f64) -> Result<ErrorEstimate, String> {
    KernelSpec::new(psi.clone(), beta, n)
        .and_then(|s| best_constant_error(&s, tol))
        .map_err(|e| format!("{} beta={beta} n={n}: {e}", psi.name()))
}

fn fail(msg: String) -> Outcome {
    Outcome {
        passed: false,
        detail: msg,
        values: Vec::new(),
    }
}

fn single_harmonic() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for n in [1, 3, 10] {
        let psi = PsiSequence::single_harmonic(n).expect("harmonic");
        for beta in [0.0, 1.0, 2.0, 3.0, 0.7] {
            match estimate(&psi, beta, n, 1e-12) {
                Ok(e) => {
                    let v = e.e_n.absolute();
                    worst = worst.max((v - 1.0 / PI).abs() + e.e_n.absolute_radius());
                    values.push(v);
                }
                Err(m) => return fail(m),
            }
        }
    }
    Outcome {
        passed: worst <= HARMONIC_TOL,
        detail: format!("max |e_n - 1/pi| + radius = {worst:.3e} (limit {HARMONIC_TOL:e})"),
        values,
    }
}

fn geometric_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    let rel = |a: &CertifiedValue, b: f64| ((a.absolute() - b) / b).abs();
    for q in [0.1, 0.5, 0.9] {
        let psi = PsiSequence::geometric(q).expect("q in (0,1)");
        for n in [1u64, 5, 20] {
            let (t, w) = geometric_tail(q, n).expect("closed form");
            let (t1, w1) = geometric_tail(q, n + 1).expect("closed form");
            // Σ_{k≥1} k q^{k+n} = Σ_{j>n} j q^j − n Σ_{j>n} q^j
            let shifted = w1 - n as f64 * t1;
            let sums = (
                tail_sum(&psi, n, 1e-13),
                weighted_tail_sum(&psi, n, 1e-13),
                moment_tail_sum(&psi, n, 1, 1e-13),
            );
            let (Ok(ts), Ok(ws), Ok(ms)) = sums else {
                return fail(format!("tail sums failed for q={q} n={n}"));
            };
            for (got, want) in [(ts, t), (ws, shifted), (ms, w)] {
                worst = worst.max(rel(&got, want));
                values.push(got.absolute());
            }
        }
    }
    Outcome {
        passed: worst <= GEOMETRIC_REL,
        detail: format!("max relative gap {worst:.3e} (limit {GEOMETRIC_REL:e})"),
        values,
    }
}

fn sandwich() -> Outcome {
    let families = [
        geometric(),
        poisson(1.0, 2.0),
        builtin(PsiFamily::LogLogPower),
    ];
    let mut rows = 0;
    let mut bad = Vec::new();
    let mut values = Vec::new();
    for psi in &families {
        for beta in [0.0, 1.0, 2.0, 3.0] {
            for n in 4..=16 {
                let e = match estimate(psi, beta, n, tol_for(psi)) {
                    Ok(e) => e,
                    Err(m) => {
                        bad.push(m);
                        continue;
                    }
                };
                rows += 1;
                let s = e.e_n.log_scale;
                let lo = e.lower_sandwich.rescaled(s);
                let hi = e.upper_sandwich.rescaled(s);
                let w = e.witness_value.rescaled(s);
                let ok = lo.lower() <= e.e_n.upper()
                    && e.e_n.lower() <= hi.upper()
                    && w.lower() <= hi.upper();
                if !ok {
                    bad.push(format!("{} beta={beta} n={n}", psi.name()));
                }
                values.extend([e.e_n.value, lo.value, hi.value, w.value]);
            }
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{rows}/{rows} rows ordered")
        } else {
            format!("{} failures, first: {}", bad.len(), bad[0])
        },
        values,
    }
}

fn t1_remainder() -> Outcome {
    let psi = geometric();
    let mut worst = Vec::new();
    let mut values = Vec::new();
    for beta in [0.0, 1.0] {
        let mut early: f64 = 0.0;
        let mut late: f64 = 0.0;
        for n in 4..=20u64 {
            let e = match estimate(&psi, beta, n, TIGHT) {
                Ok(e) => e,
                Err(m) => return fail(m),
            };
            let p = match predict_t1(&psi, n, TIGHT) {
                Ok(p) => p,
                Err(err) => return fail(err.to_string()),
            };
            let dev = crate::harness::Deviation::compute(&e.e_n, &p);
            let d = match dev {
                crate::harness::Deviation::Normalized(d) if d.is_finite() => d,
                other => return fail(format!("beta={beta} n={n}: dev {other:?}")),
            };
            values.push(d);
            if n <= 12 {
                early = early.max(d);
            } else {
                late = late.max(d);
            }
        }
        worst.push((beta, early, late));
    }
    let passed = worst
        .iter()
        .all(|&(_, e, l)| e.max(l) <= DEV_MAX && l <= DEV_GROWTH * e);
    let detail = worst
        .iter()
        .map(|(b, e, l)| format!("beta={b}: max dev n<=12 {e:.4}, n>=13 {l:.4}"))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        passed,
        detail,
        values,
    }
}

fn poisson_ratio() -> Outcome {
    let q: f64 = 0.5;
    let psi = geometric();
    let mut gaps = Vec::new();
    for n in 5..=20u64 {
        let e = match estimate(&psi, 0.0, n, TIGHT) {
            Ok(e) => e,
            Err(m) => return fail(m),
        };
        let ln_ratio = e.e_n.ln_abs() + (PI * (1.0 - q)).ln() - n as f64 * q.ln();
        gaps.push((n, ln_ratio.exp_m1().abs()));
    }
    let first = gaps[0].1;
    let last = gaps.last().unwrap().1;
    let scaled = gaps.iter().map(|&(n, g)| g * n as f64).fold(0.0, f64::max);
    Outcome {
        passed: last < first && scaled <= RATIO_N_BOUND,
        detail: format!(
            "|ratio-1| {first:.3e} at n=5, {last:.3e} at n=20; max n|ratio-1| {scaled:.4}"
        ),
        values: gaps.iter().map(|g| g.1).collect(),
    }
}

fn slow_poisson_envelope() -> Outcome {
    let (alpha, r) = (1.0, 0.5);
    let psi = poisson(alpha, r);
    let mut worst = Vec::new();
    let mut passed = true;
    for n in [64u64, 128, 256] {
        let e = match estimate(&psi, 0.0, n, 1e-6) {
            Ok(e) => e,
            Err(m) => return fail(m),
        };
        let nf = n as f64;
        let ln = e.e_n.ln_abs() + (PI * alpha * r).ln() + (r - 1.0) * nf.ln() + alpha * nf.powf(r);
        let gap = ln.exp_m1().abs();
        let bound = ENVELOPE_C * (nf.powf(-r) + nf.powf(r - 1.0));
        passed &= gap <= bound;
        worst.push((n, gap, bound));
    }
    Outcome {
        passed,
        detail: worst
            .iter()
            .map(|(n, g, b)| format!("n={n}: {g:.4} <= {b:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        values: worst.iter().map(|w| w.1).collect(),
    }
}

fn t2_families() -> Outcome {
    let families = [
        builtin(PsiFamily::LogLogPower),
        builtin(PsiFamily::ExpLogSquared),
        builtin(PsiFamily::ExpOverLog),
    ];
    let mut parts = Vec::new();
    let mut values = Vec::new();
    let mut passed = true;
    for psi in &families {
        let prof = characteristics(psi).expect("differentiable");
        for n in [100u64, 1000] {
            let nf = n as f64;
            let tol = if matches!(psi.family(), PsiFamily::LogLogPower) {
                LOGLOG_TOL
            } else {
                1e-6
            };
            let e = match estimate(psi, 0.0, n, tol) {
                Ok(e) => e,
                Err(m) => return fail(m),
            };
            let (Ok(lam), Ok(al), Ok(eps)) =
                (prof.lambda_at(nf), prof.alpha_at(nf), prof.epsilon_n(nf))
            else {
                return fail(format!("{} characteristics at n={n}", psi.name()));
            };
            let ln = e.e_n.ln_abs() + PI.ln() - psi.ln_value_at(n) - lam.ln();
            let gap = ln.exp_m1().abs();
            let bound = ENVELOPE_C * (1.0 / lam + al + eps);
            passed &= gap <= bound;
            values.push(gap);
            parts.push(format!("{} n={n}: {gap:.4} <= {bound:.4}", psi.name()));
        }
    }
    Outcome {
        passed,
        detail: parts.join(", "),
        values,
    }
}

/// Specs spanning every family, shared by the oracle and witness checks.
pub fn oracle_specs() -> Vec<(PsiSequence, f64, u64)> {
    let table =
        CustomTable::from_entries([(3, 1.0), (4, 0.6), (6, 0.35), (9, 0.2)]).expect("table");
    vec![
        (geometric(), 0.0, 5),
        (poisson(1.0, 2.0), 1.0, 4),
        (poisson(1.0, 0.5), 0.5, 16),
        (builtin(PsiFamily::ExpLogSquared), 0.0, 10),
        (builtin(PsiFamily::ExpOverLog), 1.5, 10),
        (builtin(PsiFamily::LogLogPower), 0.0, 8),
        (PsiSequence::custom(table).expect("custom"), 0.3, 3),
    ]
}

fn oracle_equivalence() -> Outcome {
    let mut parts = Vec::new();
    let mut values = Vec::new();
    let mut agree = 0;
    let specs = oracle_specs();
    for (psi, beta, n) in &specs {
        let tol = tol_for(psi);
        let e = match estimate(psi, *beta, *n, tol) {
            Ok(e) => e,
            Err(m) => return fail(m),
        };
        let spec = KernelSpec::new(psi.clone(), *beta, *n).expect("valid spec");
        let o = match grid_oracle(&spec, ORACLE_POINTS, tol) {
            Ok(o) => o,
            Err(err) => return fail(format!("oracle {}: {err}", psi.name())),
        };
        let s = e.e_n.log_scale;
        let ov = o.e_n.rescaled(s);
        let gap = (ov.value - e.e_n.value).abs();
        let allowed = ov.radius + e.e_n.radius;
        if gap <= allowed {
            agree += 1;
        }
        values.extend([e.e_n.value, ov.value]);
        parts.push(format!(
            "{} n={n} K={}: gap/allowed {:.2}",
            psi.name(),
            o.last_index,
            gap / allowed
        ));
    }
    Outcome {
        passed: agree == specs.len() && agree >= 5,
        detail: format!("{agree}/{} agree; {}", specs.len(), parts.join(", ")),
        values,
    }
}

/// The three admissible test functions used at index `n`.
pub fn witness_polynomials(n: u64) -> [TrigPolynomial; 3] {
    let n = n as usize;
    let mut pair = TrigPolynomial::cosine(n + 1, -1.0 / 8.0);
    pair.cos[n - 1] = 1.0 / 8.0;
    [
        TrigPolynomial::cosine(n, 0.25),
        pair,
        TrigPolynomial::fejer_difference(2 * n, PI / n as f64),
    ]
}

fn witness_soundness() -> Outcome {
    let mut count = 0;
    let mut bad = Vec::new();
    let mut tightest: f64 = 0.0;
    let mut values = Vec::new();
    for (psi, beta, n) in oracle_specs() {
        let tol = tol_for(&psi);
        let e = match estimate(&psi, beta, n, tol) {
            Ok(e) => e,
            Err(m) => return fail(m),
        };
        let spec = KernelSpec::new(psi.clone(), beta, n).expect("valid spec");
        for (i, phi) in witness_polynomials(n).iter().enumerate() {
            let w = match witness_lower_bound(&spec, phi, tol) {
                Ok(w) => w,
                Err(err) => return fail(format!("{} phi{i}: {err}", psi.name())),
            };
            count += 1;
            if w.absolute() > e.e_n.absolute() + WITNESS_SLACK {
                bad.push(format!("{} n={n} phi{i}", psi.name()));
            }
            if e.e_n.value > 0.0 {
                tightest = tightest.max(w.rescaled(e.e_n.log_scale).value / e.e_n.value);
            }
            values.push(w.value);
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{count}/{count} witnesses below e_n; largest witness/e_n {tightest:.4}")
        } else {
            format!("{} exceed e_n, first {}", bad.len(), bad[0])
        },
        values,
    }
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        family: FamilySpec::gen_poisson(LN_2, 1.0),
        beta_list: vec![0.0, 1.0],
        n_range: NRange {
            start: 4,
            stop: 12,
            step: None,
            factor: None,
        },
        tol: TIGHT,
        formulas: vec![FormulaId::T1, FormulaId::C2],
        output: OutputSpec {
            path: "unused.csv".into(),
            format: OutputFormat::Csv,
        },
        threads: Threads::Auto,
    }
}

fn numeric_fingerprint(threads: usize) -> Result<(Vec<u64>, Vec<u8>), String> {
    let results = super::run_selected(threads, &[1, 2, 4, 5, 9]);
    let bits = results
        .iter()
        .flat_map(|r| r.values.iter().map(|v| v.to_bits()))
        .collect();
    let mut cfg = sweep_config();
    cfg.threads = if threads == 0 {
        Threads::Auto
    } else {
        Threads::Count(threads)
    };
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| e.to_string())?;
    Ok((bits, csv))
}

fn determinism() -> Outcome {
    let (one, auto) = match (numeric_fingerprint(1), numeric_fingerprint(0)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(m), _) | (_, Err(m)) => return fail(m),
    };
    let passed = one == auto;
    Outcome {
        passed,
        detail: format!(
            "{} criterion values and {} sweep CSV bytes {} between 1 and auto threads",
            one.0.len(),
            one.1.len(),
            if passed { "identical" } else { "differ" }
        ),
        values: Vec::new(),
    }
}
