//! Main terms and remainder scales of the asymptotic formulas for `E_n`.
//!
//! Every formula has the shape `E_n = main + O(1) · scale`. The hidden
//! constant is unknown, so a [`Prediction`] is the pair `(main, scale)` and
//! never a value with an error bar. Both are carried as natural logs as well,
//! since the generalized Poisson main terms underflow quickly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::{
    characteristics, check_admissibility, CharacteristicProfile, PsiFamily, PsiSequence,
};
use crate::series::{moment_tail_sum, tail_sum, weighted_tail_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaId {
    T1,
    C1,
    C01,
    C2,
    C00,
    T2,
    C3,
    C4,
    C5,
}

impl FormulaId {
    pub const ALL: [FormulaId; 9] = [
        FormulaId::T1,
        FormulaId::C1,
        FormulaId::C01,
        FormulaId::C2,
        FormulaId::C00,
        FormulaId::T2,
        FormulaId::C3,
        FormulaId::C4,
        FormulaId::C5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::T1 => "t1",
            FormulaId::C1 => "c1",
            FormulaId::C01 => "c01",
            FormulaId::C2 => "c2",
            FormulaId::C00 => "c00",
            FormulaId::T2 => "t2",
            FormulaId::C3 => "c3",
            FormulaId::C4 => "c4",
            FormulaId::C5 => "c5",
        }
    }

    /// `Err` with the reason when the formula does not apply to `family`.
    pub fn check_family(self, family: &PsiFamily) -> std::result::Result<(), String> {
        let ok = match (self, family) {
            (FormulaId::T1 | FormulaId::C1, _) => true,
            (FormulaId::C2, PsiFamily::GeneralizedPoisson { r, .. }) => *r == 1.0,
            (FormulaId::C01, PsiFamily::GeneralizedPoisson { r, .. }) => *r > 1.0,
            (FormulaId::C00, PsiFamily::GeneralizedPoisson { r, .. }) => *r > 0.0 && *r < 1.0,
            (FormulaId::T2, f) => !matches!(f, PsiFamily::Custom(_)),
            (FormulaId::C3, PsiFamily::LogLogPower) => true,
            (FormulaId::C4, PsiFamily::ExpLogSquared) => true,
            (FormulaId::C5, PsiFamily::ExpOverLog) => true,
            _ => false,
        };
        if ok {
            return Ok(());
        }
        let need = match self {
            FormulaId::C2 => "gen_poisson with r = 1",
            FormulaId::C01 => "gen_poisson with r > 1",
            FormulaId::C00 => "gen_poisson with 0 < r < 1",
            FormulaId::T2 => "a family with a derivative",
            FormulaId::C3 => "loglog_power",
            FormulaId::C4 => "exp_log_squared",
            FormulaId::C5 => "exp_over_log",
            FormulaId::T1 | FormulaId::C1 => unreachable!(),
        };
        Err(format!(
            "formula {} needs {need}, got {}",
            self.as_str(),
            family.name()
        ))
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown formula id {s:?}")))
    }
}

/// Right-hand side of one asymptotic formula at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub main_term: f64,
    pub remainder_scale: f64,
    #[serde(with = "crate::lnserde")]
    pub log_main: f64,
    #[serde(with = "crate::lnserde")]
    pub log_remainder: f64,
    /// Relative uncertainty of `main_term` and `remainder_scale` from the
    /// certified sums behind them; 0 for closed forms.
    pub relative_radius: f64,
    pub formula_id: FormulaId,
    pub validity_notes: Vec<String>,
}

impl Prediction {
    fn from_logs(formula_id: FormulaId, log_main: f64, log_remainder: f64) -> Self {
        Prediction {
            main_term: log_main.exp(),
            remainder_scale: log_remainder.exp(),
            log_main,
            log_remainder,
            relative_radius: 0.0,
            formula_id,
            validity_notes: Vec::new(),
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.validity_notes.push(s.into());
        self
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DomainError(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Main `(1/π)Σ_{k≥n} ψ(k)`, scale `(1/n)Σ_{k≥1} kψ(k+n)`.
pub fn predict_t1(psi: &PsiSequence, n: u64, tol: f64) -> Result<Prediction> {
    check_n(n)?;
    let t = tail_sum(psi, n, tol)?;
    let w = weighted_tail_sum(psi, n, tol)?;
    let mut p = Prediction::from_logs(
        FormulaId::T1,
        t.ln_abs() - PI.ln(),
        w.ln_abs() - (n as f64).ln(),
    );
    p.relative_radius = rel(t.radius, t.value).max(rel(w.radius, w.value));
    Ok(p)
}

fn rel(radius: f64, value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        radius / value.abs()
    }
}

/// Main `ψ(n)/π`, scale `(1/n)Σ_{k>n} kψ(k)`.
pub fn predict_c1(psi: &PsiSequence, n: u64, tol: f64) -> Result<Prediction> {
    check_n(n)?;
    let w = moment_tail_sum(psi, n + 1, 1, tol)?;
    let mut p = Prediction::from_logs(
        FormulaId::C1,
        psi.ln_value_at(n) - PI.ln(),
        w.ln_abs() - (n as f64).ln(),
    );
    p.relative_radius = rel(w.radius, w.value);
    let report = check_admissibility(psi, 1000);
    if !report.d0 {
        p = p.note(format!(
            "d0 condition fails for {}: successive ratios do not tend to 0",
            psi.name()
        ));
    }
    Ok(p)
}

/// `ψ(k) = e^{−αk^r}`, `r > 1`: main `e^{−αn^r}/π`, scale
/// `e^{−αn^r} e^{−αrn^{r−1}} (1 + 1/(αr(n+1)^{r−1}))`.
pub fn predict_c01(alpha: f64, r: f64, n: u64) -> Result<Prediction> {
    check_alpha(alpha)?;
    check_n(n)?;
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::DomainError(format!("c01 needs r > 1, got {r}")));
    }
    let (nf, n1) = (n as f64, n as f64 + 1.0);
    let d = alpha * r * n1.powf(r);
    if d <= 2.0 {
        return Err(Error::DomainError(format!(
            "c01 needs alpha r (n+1)^r > 2, got {d}"
        )));
    }
    let head = -alpha * nf.powf(r);
    let factor = 1.0 + 1.0 / (alpha * r * n1.powf(r - 1.0));
    Ok(Prediction::from_logs(
        FormulaId::C01,
        head - PI.ln(),
        head - alpha * r * nf.powf(r - 1.0) + factor.ln(),
    ))
}

/// Poisson kernel `q = e^{−α}`: main `q^n/(π(1−q))`, scale
/// `q^{n+1}/(n(1−q)²)`.
pub fn predict_c2(alpha: f64, n: u64) -> Result<Prediction> {
    check_alpha(alpha)?;
    check_n(n)?;
    let ln_one_minus_q = (-(-alpha).exp_m1()).ln();
    let nf = n as f64;
    Ok(Prediction::from_logs(
        FormulaId::C2,
        -alpha * nf - PI.ln() - ln_one_minus_q,
        -alpha * (nf + 1.0) - nf.ln() - 2.0 * ln_one_minus_q,
    ))
}

/// `0 < r < 1`: main `e^{−αn^r} n^{1−r}/(παr)`, scale
/// `main · (n^{−r} + n^{r−1})`.
pub fn predict_c00(alpha: f64, r: f64, n: u64) -> Result<Prediction> {
    check_alpha(alpha)?;
    check_n(n)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::DomainError(format!("c00 needs 0 < r < 1, got {r}")));
    }
    let nf = n as f64;
    let log_main = -alpha * nf.powf(r) + (1.0 - r) * nf.ln() - (PI * alpha * r).ln();
    let env = nf.powf(-r) + nf.powf(r - 1.0);
    Ok(Prediction::from_logs(
        FormulaId::C00,
        log_main,
        log_main + env.ln(),
    ))
}

/// Main `ψ(n)λ(n)/π`, scale `ψ(n)λ(n)(1/λ(n) + α(n) + ε_n)`.
pub fn predict_t2(
    psi: &PsiSequence,
    profile: &CharacteristicProfile,
    n: u64,
) -> Result<Prediction> {
    check_n(n)?;
    let nf = n as f64;
    let lambda = profile.lambda_at(nf)?;
    let alpha = profile.alpha_at(nf)?;
    let eps = profile.epsilon_n(nf)?;
    let base = psi.ln_value_at(n) + lambda.ln();
    let mut p = Prediction::from_logs(
        FormulaId::T2,
        base - PI.ln(),
        base + (1.0 / lambda + alpha + eps).ln(),
    );
    let (alpha_down, lambda_up) = profile.monotonicity_on(nf)?;
    if !alpha_down {
        p = p.note(format!("alpha(t) is not decreasing on [{n}, {}]", 10 * n));
    }
    if !lambda_up {
        p = p.note(format!("lambda(t) is not increasing on [{n}, {}]", 10 * n));
    }
    Ok(p)
}

fn family_psi(family: PsiFamily, n: u64, min_n: u64, id: FormulaId) -> Result<PsiSequence> {
    check_n(n)?;
    if n < min_n {
        return Err(Error::DomainError(format!(
            "{id} needs n >= {min_n}, got {n}"
        )));
    }
    PsiSequence::new(family)
}

/// `loglog_power`: main `ψ(n) n/(π ln ln(n+2))`, scale `ψ(n)`.
pub fn predict_c3(n: u64) -> Result<Prediction> {
    let psi = family_psi(PsiFamily::LogLogPower, n, 1, FormulaId::C3)?;
    let l = psi.ln_value_at(n);
    let nf = n as f64;
    Ok(Prediction::from_logs(
        FormulaId::C3,
        l + nf.ln() - PI.ln() - (nf + 2.0).ln().ln().ln(),
        l,
    ))
}

/// `exp_log_squared`: main `ψ(n) n/(2π ln n)`, scale `ψ(n)`.
pub fn predict_c4(n: u64) -> Result<Prediction> {
    let psi = family_psi(PsiFamily::ExpLogSquared, n, 2, FormulaId::C4)?;
    let l = psi.ln_value_at(n);
    let nf = n as f64;
    Ok(Prediction::from_logs(
        FormulaId::C4,
        l + nf.ln() - (2.0 * PI * nf.ln()).ln(),
        l,
    ))
}

/// `exp_over_log`: main `ψ(n) ln(n+1)/π`, scale `ψ(n)`.
pub fn predict_c5(n: u64) -> Result<Prediction> {
    let psi = family_psi(PsiFamily::ExpOverLog, n, 2, FormulaId::C5)?;
    let l = psi.ln_value_at(n);
    let nf = n as f64;
    Ok(Prediction::from_logs(
        FormulaId::C5,
        l + (nf + 1.0).ln().ln() - PI.ln(),
        l,
    ))
}

/// Dispatches on `id` after checking that it applies to `psi`.
pub fn predict(id: FormulaId, psi: &PsiSequence, n: u64, tol: f64) -> Result<Prediction> {
    id.check_family(psi.family())
        .map_err(Error::InvalidParameter)?;
    let poisson = || match *psi.family() {
        PsiFamily::GeneralizedPoisson { alpha, r } => (alpha, r),
        _ => unreachable!("checked above"),
    };
    match id {
        FormulaId::T1 => predict_t1(psi, n, tol),
        FormulaId::C1 => predict_c1(psi, n, tol),
        FormulaId::C01 => {
            let (a, r) = poisson();
            predict_c01(a, r, n)
        }
        FormulaId::C2 => predict_c2(poisson().0, n),
        FormulaId::C00 => {
            let (a, r) = poisson();
            predict_c00(a, r, n)
        }
        FormulaId::T2 => predict_t2(psi, &characteristics(psi)?, n),
        FormulaId::C3 => predict_c3(n),
        FormulaId::C4 => predict_c4(n),
        FormulaId::C5 => predict_c5(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn c2_examples() {
        let p = predict_c2(LN_2, 3).unwrap();
        assert_relative_eq!(p.main_term, 1.0 / (4.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(p.remainder_scale, 1.0 / 12.0, max_relative = 1e-14);
        assert!(predict_c2(700.0, 3).unwrap().main_term == 0.0);
        assert!(predict_c2(700.0, 3).unwrap().log_main.is_finite());
        assert!(matches!(predict_c2(0.0, 3), Err(Error::DomainError(_))));
    }

    #[test]
    fn c2_equals_t1_on_geometric() {
        let psi = PsiSequence::geometric(0.5).unwrap();
        for n in [1u64, 3, 10, 25] {
            let a = predict_c2(LN_2, n).unwrap();
            let b = predict_t1(&psi, n, 1e-13).unwrap();
            let slack = b.relative_radius + 1e-14;
            assert!((a.main_term / b.main_term - 1.0).abs() <= slack);
            assert!((a.remainder_scale / b.remainder_scale - 1.0).abs() <= slack);
        }
    }

    #[test]
    fn t1_single_harmonic_and_zero_tail() {
        let psi = PsiSequence::single_harmonic(4).unwrap();
        let p = predict_t1(&psi, 4, 1e-12).unwrap();
        assert_relative_eq!(p.main_term, 1.0 / PI, max_relative = 1e-15);
        assert_eq!(p.remainder_scale, 0.0);
        let p = predict_t1(&psi, 5, 1e-12).unwrap();
        assert_eq!((p.main_term, p.remainder_scale), (0.0, 0.0));
        assert_eq!(p.log_main, f64::NEG_INFINITY);
    }

    #[test]
    fn c1_examples() {
        let psi = PsiSequence::generalized_poisson(1.0, 2.0).unwrap();
        let p = predict_c1(&psi, 4, 1e-12).unwrap();
        assert_relative_eq!(p.main_term, (-16f64).exp() / PI, max_relative = 1e-14);
        let direct: f64 = (5..40u64)
            .map(|k| k as f64 * (-((k * k) as f64)).exp())
            .sum::<f64>()
            / 4.0;
        assert_relative_eq!(p.remainder_scale, direct, max_relative = 1e-12);
        assert!(p.validity_notes.is_empty());
        let q = PsiSequence::geometric(0.5).unwrap();
        assert!(!predict_c1(&q, 4, 1e-12).unwrap().validity_notes.is_empty());
    }

    #[test]
    fn c01_examples() {
        let p = predict_c01(1.0, 2.0, 3).unwrap();
        assert_relative_eq!(p.main_term, (-9f64).exp() / PI, max_relative = 1e-14);
        assert_relative_eq!(
            p.remainder_scale / p.main_term,
            PI * (-6f64).exp() * (1.0 + 1.0 / 8.0),
            max_relative = 1e-14
        );
        assert!(matches!(
            predict_c01(1e-3, 1.01, 1),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            predict_c01(1.0, 1.0, 3),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn c00_examples() {
        let p = predict_c00(1.0, 0.5, 100).unwrap();
        assert_relative_eq!(
            p.main_term,
            20.0 * (-10f64).exp() / PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(p.remainder_scale / p.main_term, 0.2, max_relative = 1e-14);
    }

    #[test]
    fn c00_main_tracks_tail_sum() {
        let psi = PsiSequence::generalized_poisson(1.0, 0.5).unwrap();
        let n = 10_000u64;
        let t = predict_t1(&psi, n, 1e-10).unwrap();
        let c = predict_c00(1.0, 0.5, n).unwrap();
        let env = 2.0 / (n as f64).sqrt();
        assert!(((t.log_main - c.log_main).exp() - 1.0).abs() <= 3.0 * env);
    }

    #[test]
    fn t2_matches_corollary_mains() {
        let f4 = PsiSequence::new(PsiFamily::ExpLogSquared).unwrap();
        let prof = characteristics(&f4).unwrap();
        for n in [10u64, 1000] {
            let a = predict_t2(&f4, &prof, n).unwrap();
            let b = predict_c4(n).unwrap();
            assert_relative_eq!(a.log_main, b.log_main, max_relative = 1e-13);
        }
        for family in [PsiFamily::LogLogPower, PsiFamily::ExpOverLog] {
            let psi = PsiSequence::new(family).unwrap();
            let prof = characteristics(&psi).unwrap();
            let mut gaps = Vec::new();
            for n in [100u64, 1000, 10_000] {
                let t2 = predict_t2(&psi, &prof, n).unwrap();
                let c = predict(
                    if psi.name() == "loglog_power" {
                        FormulaId::C3
                    } else {
                        FormulaId::C5
                    },
                    &psi,
                    n,
                    1e-8,
                )
                .unwrap();
                gaps.push(((t2.log_main - c.log_main).exp() - 1.0).abs());
            }
            assert!(gaps[2] < gaps[0], "{gaps:?}");
        }
    }

    #[test]
    fn c4_c5_examples() {
        let n = E.powi(4).round() as u64;
        let p = predict_c4(n).unwrap();
        let psi = PsiSequence::new(PsiFamily::ExpLogSquared).unwrap();
        let expected = psi.value_at(n) * n as f64 / (2.0 * PI * (n as f64).ln());
        assert_relative_eq!(p.main_term, expected, max_relative = 1e-13);
        let p = predict_c5(100).unwrap();
        assert_relative_eq!(
            p.remainder_scale / p.main_term,
            PI / 101f64.ln(),
            max_relative = 1e-13
        );
        assert!(matches!(predict_c4(1), Err(Error::DomainError(_))));
    }

    #[test]
    fn formula_family_mismatch() {
        let psi = PsiSequence::new(PsiFamily::LogLogPower).unwrap();
        assert!(matches!(
            predict(FormulaId::C2, &psi, 5, 1e-8),
            Err(Error::InvalidParameter(_))
        ));
        let tab = PsiSequence::single_harmonic(3).unwrap();
        assert!(FormulaId::T2.check_family(tab.family()).is_err());
        assert!(FormulaId::T1.check_family(tab.family()).is_ok());
        assert_eq!("c00".parse::<FormulaId>().unwrap(), FormulaId::C00);
        assert!("c6".parse::<FormulaId>().is_err());
    }
}
