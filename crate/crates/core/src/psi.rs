//! Coefficient families `ψ(k)` of the convolution kernels.
//!
//! Every built-in family carries closed forms for `ψ(t)`, `ψ′(t)` and the decay
//! characteristics `λ(t) = ψ(t)/|ψ′(t)|`, `α(t) = λ(t)/t`. Values are computed
//! in the log domain first (`ln ψ`) and exponentiated last, so callers that
//! need ratios of exponentially small coefficients never see an underflow.

use std::f64::consts::E;
use std::fmt;

use crate::error::{Error, Result};

/// Largest index a custom table may use.
pub const MAX_CUSTOM_SUPPORT: u64 = 100_000_000;

/// Canonical family names used by the configuration files and the CLI.
pub const FAMILY_NAMES: [&str; 5] = [
    "gen_poisson",
    "loglog_power",
    "exp_log_squared",
    "exp_over_log",
    "custom",
];

/// A ψ-family tag with its parameters.
#[derive(Clone, PartialEq)]
pub enum PsiFamily {
    /// `ψ(k) = e^{−α k^r}`; `r = 1` is the classical Poisson kernel with `q = e^{−α}`.
    GeneralizedPoisson { alpha: f64, r: f64 },
    /// `ψ(k) = (k+2)^{−ln ln(k+2)}`.
    LogLogPower,
    /// `ψ(k) = e^{−ln² k}`.
    ExpLogSquared,
    /// `ψ(k) = e^{−(k+1)/ln(k+1)}`.
    ExpOverLog,
    /// Finitely supported table, `ψ(k) = 0` past the last entry.
    Custom(CustomTable),
}

impl fmt::Debug for PsiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiFamily::GeneralizedPoisson { alpha, r } => {
                write!(f, "GeneralizedPoisson {{ alpha: {alpha}, r: {r} }}")
            }
            PsiFamily::LogLogPower => f.write_str("LogLogPower"),
            PsiFamily::ExpLogSquared => f.write_str("ExpLogSquared"),
            PsiFamily::ExpOverLog => f.write_str("ExpOverLog"),
            PsiFamily::Custom(t) => write!(f, "Custom({} entries)", t.nonzero_count()),
        }
    }
}

impl PsiFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PsiFamily::GeneralizedPoisson { .. } => "gen_poisson",
            PsiFamily::LogLogPower => "loglog_power",
            PsiFamily::ExpLogSquared => "exp_log_squared",
            PsiFamily::ExpOverLog => "exp_over_log",
            PsiFamily::Custom(_) => "custom",
        }
    }
}

/// Dense coefficient table indexed from `k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable {
    values: Vec<f64>,
}

impl CustomTable {
    /// Builds a table from `(k, ψ(k))` pairs. Unlisted indices are zero.
    pub fn from_entries<I: IntoIterator<Item = (u64, f64)>>(entries: I) -> Result<Self> {
        let mut values: Vec<f64> = Vec::new();
        for (k, v) in entries {
            if k == 0 {
                return Err(Error::InvalidParameter(
                    "custom table indices start at k = 1".into(),
                ));
            }
            if k > MAX_CUSTOM_SUPPORT {
                return Err(Error::InvalidParameter(format!(
                    "custom table index {k} exceeds {MAX_CUSTOM_SUPPORT}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "custom table entry ψ({k}) = {v} must be finite and nonnegative"
                )));
            }
            let idx = (k - 1) as usize;
            if values.len() <= idx {
                values.resize(idx + 1, 0.0);
            }
            values[idx] = v;
        }
        while values.last() == Some(&0.0) {
            values.pop();
        }
        Ok(CustomTable { values })
    }

    /// Tabulates a closed-form callback on `1..=support_end`.
    pub fn from_fn(support_end: u64, f: impl Fn(u64) -> f64) -> Result<Self> {
        Self::from_entries((1..=support_end).map(|k| (k, f(k))))
    }

    pub fn get(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.values.get((k - 1) as usize).copied().unwrap_or(0.0)
    }

    /// Last index with a nonzero coefficient, or 0 for the empty table.
    pub fn support_end(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, v)| (i as u64 + 1, *v))
    }
}

/// A ψ-sequence together with its continuous extension.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSequence {
    family: PsiFamily,
}

/// Builds a [`PsiSequence`], validating the family parameters.
pub fn make_psi(family: PsiFamily) -> Result<PsiSequence> {
    PsiSequence::new(family)
}

impl PsiSequence {
    pub fn new(family: PsiFamily) -> Result<Self> {
        if let PsiFamily::GeneralizedPoisson { alpha, r } = family {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gen_poisson requires alpha > 0, got {alpha}"
                )));
            }
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gen_poisson requires r > 0, got {r}"
                )));
            }
        }
        Ok(PsiSequence { family })
    }

    pub fn generalized_poisson(alpha: f64, r: f64) -> Result<Self> {
        Self::new(PsiFamily::GeneralizedPoisson { alpha, r })
    }

    /// Classical Poisson coefficients `q^k`, `0 < q < 1`.
    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0, 1), got {q}"
            )));
        }
        Self::generalized_poisson(-q.ln(), 1.0)
    }

    /// `ψ(n) = 1` and zero elsewhere.
    pub fn single_harmonic(n: u64) -> Result<Self> {
        Self::custom(CustomTable::from_entries([(n, 1.0)])?)
    }

    pub fn custom(table: CustomTable) -> Result<Self> {
        Self::new(PsiFamily::Custom(table))
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(self.family, PsiFamily::Custom(_))
    }

    /// `Some(K)` when `ψ(k) = 0` for every `k > K`.
    pub fn support_end(&self) -> Option<u64> {
        match &self.family {
            PsiFamily::Custom(t) => Some(t.support_end()),
            _ => None,
        }
    }

    /// `ln ψ(k)`, `-inf` for a zero coefficient.
    pub fn ln_value_at(&self, k: u64) -> f64 {
        match &self.family {
            PsiFamily::Custom(t) => t.get(k).ln(),
            _ if k == 0 => f64::NEG_INFINITY,
            _ => ln_closed_form(&self.family, k as f64),
        }
    }

    /// `ψ(k)`; exponentially small values below the normal range read as 0.
    pub fn value_at(&self, k: u64) -> f64 {
        match &self.family {
            PsiFamily::Custom(t) => t.get(k),
            _ => {
                let l = self.ln_value_at(k);
                if l < f64::MIN_POSITIVE.ln() {
                    0.0
                } else {
                    l.exp()
                }
            }
        }
    }

    /// True when `ψ(k) > 0` but lies below the smallest positive normal double.
    pub fn is_underflow(&self, k: u64) -> bool {
        let l = self.ln_value_at(k);
        l.is_finite() && l < f64::MIN_POSITIVE.ln()
    }

    /// Continuous extension `ψ(t)`, `t ≥ 1`. Custom tables interpolate linearly.
    pub fn continuous_value(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        match &self.family {
            PsiFamily::Custom(tab) => {
                let k = t.floor();
                let frac = t - k;
                let k = k as u64;
                Ok(tab.get(k) * (1.0 - frac) + tab.get(k + 1) * frac)
            }
            f => Ok(ln_closed_form(f, t).exp()),
        }
    }

    /// `ln ψ(t)` for built-in families.
    pub fn ln_continuous_value(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        match &self.family {
            PsiFamily::Custom(_) => Ok(self.continuous_value(t)?.ln()),
            f => Ok(ln_closed_form(f, t)),
        }
    }

    /// `ψ′(t)`; custom tables have none.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let psi = match &self.family {
            PsiFamily::Custom(_) => {
                return Err(Error::NotDifferentiable(
                    "custom tables carry no derivative".into(),
                ))
            }
            f => ln_closed_form(f, t).exp(),
        };
        Ok(-psi * self.log_decay_rate(t))
    }

    /// `|ψ′(t)|/ψ(t)`, i.e. `1/λ(t)`, for built-ins.
    fn log_decay_rate(&self, t: f64) -> f64 {
        match self.family {
            PsiFamily::GeneralizedPoisson { alpha, r } => alpha * r * t.powf(r - 1.0),
            PsiFamily::LogLogPower => ((t + 2.0).ln().ln() + 1.0) / (t + 2.0),
            PsiFamily::ExpLogSquared => 2.0 * t.ln() / t,
            PsiFamily::ExpOverLog => {
                let l = (t + 1.0).ln();
                (l - 1.0) / (l * l)
            }
            PsiFamily::Custom(_) => f64::NAN,
        }
    }

    /// Smallest `t` from which the wired derivative is nonpositive.
    pub fn decreasing_from(&self) -> f64 {
        match self.family {
            PsiFamily::ExpOverLog => E - 1.0,
            _ => 1.0,
        }
    }

    /// `α(t) = ψ(t)/(t|ψ′(t)|)` without domain checks; `None` where undefined.
    fn raw_alpha(&self, t: f64) -> Option<f64> {
        if !self.has_derivative() {
            return None;
        }
        let rate = self.log_decay_rate(t);
        (rate > 0.0 && rate.is_finite()).then(|| 1.0 / (t * rate))
    }

    /// Index from which `α(t)` is nonincreasing (and `ψ` decreasing).
    fn monotone_alpha_from(&self) -> u64 {
        match self.family {
            PsiFamily::ExpLogSquared => 2,
            // α decreases once ln(t+1) ≥ 2
            PsiFamily::ExpOverLog => 7,
            _ => 1,
        }
    }

    /// Upper bound on `ln Σ_{k>after} k^m ψ(k)`, or `None` when no bound is
    /// available at this index yet. `-inf` means the tail is exactly zero.
    ///
    /// Built-ins use the power envelope `ψ(t) ≤ ψ(K)(K/t)^{1/α(K)}`, valid on
    /// `[K, ∞)` while `α` is nonincreasing, which integrates to
    /// `ψ(K) K^{m+1} α(K) / (1 − (m+1)α(K))`. For `gen_poisson` with `r ≥ 1`
    /// the geometric-ratio bound is also tried and the smaller one kept.
    pub fn ln_moment_tail_bound(&self, m: u32, after: u64) -> Option<f64> {
        if let PsiFamily::Custom(t) = &self.family {
            return (after >= t.support_end()).then_some(f64::NEG_INFINITY);
        }
        if after < self.monotone_alpha_from() {
            return None;
        }
        let k = after as f64;
        let mf = m as f64;
        let mut best: Option<f64> = None;
        if let Some(a) = self.raw_alpha(k) {
            let c = (mf + 1.0) * a;
            if c < 1.0 {
                let lpsi = self.ln_value_at(after);
                let b = lpsi + (mf + 1.0) * k.ln() + a.ln() - (-c).ln_1p();
                best = Some(b + bound_margin(lpsi));
            }
        }
        if let PsiFamily::GeneralizedPoisson { alpha, r } = self.family {
            if r >= 1.0 {
                let k1 = k + 1.0;
                let ln_rho = mf * (1.0 / k1).ln_1p() - alpha * r * k1.powf(r - 1.0);
                if ln_rho < 0.0 {
                    let lpsi = self.ln_value_at(after + 1);
                    let b = mf * k1.ln() + lpsi - (-ln_rho.exp_m1()).ln();
                    let b = b + bound_margin(lpsi);
                    best = Some(best.map_or(b, |x| x.min(b)));
                }
            }
        }
        best
    }
}

fn bound_margin(ln_psi: f64) -> f64 {
    1e-10 + 8.0 * f64::EPSILON * ln_psi.abs()
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 1.0) {
        return Err(Error::DomainError(format!(
            "ψ(t) is defined for t ≥ 1, got {t}"
        )));
    }
    Ok(())
}

fn ln_closed_form(family: &PsiFamily, t: f64) -> f64 {
    match *family {
        PsiFamily::GeneralizedPoisson { alpha, r } => -alpha * t.powf(r),
        PsiFamily::LogLogPower => {
            let l = (t + 2.0).ln();
            -l * l.ln()
        }
        PsiFamily::ExpLogSquared => {
            let l = t.ln();
            -l * l
        }
        PsiFamily::ExpOverLog => -(t + 1.0) / (t + 1.0).ln(),
        PsiFamily::Custom(_) => unreachable!("custom tables have no closed form"),
    }
}

/// One piece of numeric or analytic support for an admissibility flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub flag: &'static str,
    /// Index range that was probed, inclusive.
    pub range: (u64, u64),
    pub argument: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `Σ ψ(k) < ∞`.
    pub summable: bool,
    /// `Σ k ψ(k) < ∞`.
    pub k_summable: bool,
    /// `ψ(k) > 0` and `ψ(k+1)/ψ(k) → 0`.
    pub d0: bool,
    /// `(k, ψ(k+1)/ψ(k))` samples, computed in the log domain.
    pub ratio_samples: Vec<(u64, f64)>,
    pub evidence: Vec<Evidence>,
    /// True when every flag rests on a closed-form argument rather than
    /// numeric probing.
    pub analytic: bool,
}

/// The limit in the superexponential-decay condition is taken as `k → ∞`.
pub const D0_INTERPRETATION: &str =
    "D0 ratio limit read as k -> infinity (the printed k -> 0 admits no other consistent reading)";

/// Checks summability and the D₀ condition. Never fails.
pub fn check_admissibility(psi: &PsiSequence, probe_depth: u64) -> AdmissibilityReport {
    let depth = probe_depth.max(10);
    let mut evidence = Vec::new();
    if probe_depth < 10 {
        evidence.push(Evidence {
            flag: "probe",
            range: (1, depth),
            argument: format!("probe depth {probe_depth} raised to the minimum of 10"),
        });
    }

    let mut probes = Vec::new();
    let mut k = 10u64;
    while k <= depth {
        probes.push(k);
        k = k.saturating_mul(10);
    }
    if probes.last() != Some(&depth) {
        probes.push(depth);
    }
    let ratio_samples: Vec<(u64, f64)> = probes
        .iter()
        .map(|&k| {
            let d = psi.ln_value_at(k + 1) - psi.ln_value_at(k);
            (k, if d.is_nan() { 0.0 } else { d.exp() })
        })
        .collect();

    let (summable, k_summable, d0, analytic) = match psi.family() {
        PsiFamily::GeneralizedPoisson { alpha, r } => {
            evidence.push(Evidence {
                flag: "summable",
                range: (1, u64::MAX),
                argument: format!(
                    "e^(-{alpha} k^{r}) decays faster than any power of k; Σ ψ and Σ kψ converge"
                ),
            });
            let d0 = *r > 1.0;
            evidence.push(Evidence {
                flag: "d0",
                range: (1, u64::MAX),
                argument: if d0 {
                    format!(
                        "ratio e^(-α((k+1)^r - k^r)) <= e^(-α r k^(r-1)) -> 0 since r = {r} > 1"
                    )
                } else {
                    format!("ratio e^(-α((k+1)^r - k^r)) >= e^(-α r) > 0 since r = {r} <= 1")
                },
            });
            (true, true, d0, true)
        }
        PsiFamily::LogLogPower | PsiFamily::ExpLogSquared | PsiFamily::ExpOverLog => {
            evidence.push(Evidence {
                flag: "summable",
                range: (1, u64::MAX),
                argument: "local power exponent 1/α(t) grows without bound, so k^m ψ(k) is \
                           eventually below k^(-2) for every m"
                    .into(),
            });
            evidence.push(Evidence {
                flag: "d0",
                range: (probes[0], depth),
                argument: format!(
                    "ln ψ(k+1) - ln ψ(k) -> 0, so the ratio tends to 1; sampled ratios {:?}",
                    ratio_samples
                ),
            });
            (true, true, false, true)
        }
        PsiFamily::Custom(t) => {
            let end = t.support_end();
            evidence.push(Evidence {
                flag: "summable",
                range: (1, end),
                argument: format!("finite support: ψ(k) = 0 for k > {end}"),
            });
            evidence.push(Evidence {
                flag: "d0",
                range: (1, end + 1),
                argument: "ψ(k) = 0 past the table end, so ψ(k) > 0 fails".into(),
            });
            (true, true, false, false)
        }
    };
    evidence.push(Evidence {
        flag: "d0",
        range: (1, u64::MAX),
        argument: D0_INTERPRETATION.into(),
    });

    AdmissibilityReport {
        summable,
        k_summable,
        d0,
        ratio_samples,
        evidence,
        analytic,
    }
}

/// Decay characteristics `λ`, `α`, `λ′` of a differentiable family.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicProfile {
    family: PsiFamily,
}

/// Builds the characteristic profile; custom tables are rejected.
pub fn characteristics(psi: &PsiSequence) -> Result<CharacteristicProfile> {
    if !psi.has_derivative() {
        return Err(Error::NotDifferentiable(
            "characteristics need a closed-form derivative; custom tables have none".into(),
        ));
    }
    Ok(CharacteristicProfile {
        family: psi.family().clone(),
    })
}

impl CharacteristicProfile {
    fn check_domain(&self, t: f64) -> Result<()> {
        let ok = t.is_finite()
            && t >= 1.0
            && match self.family {
                PsiFamily::LogLogPower => t + 2.0 > E,
                PsiFamily::ExpLogSquared => t > 1.0,
                PsiFamily::ExpOverLog => (t + 1.0).ln() > 1.0,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainError(format!(
                "characteristics of {} undefined at t = {t}",
                self.family.name()
            )))
        }
    }

    /// `λ(t) = ψ(t)/|ψ′(t)|`.
    pub fn lambda_at(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            PsiFamily::GeneralizedPoisson { alpha, r } => t.powf(1.0 - r) / (alpha * r),
            PsiFamily::LogLogPower => (t + 2.0) / ((t + 2.0).ln().ln() + 1.0),
            PsiFamily::ExpLogSquared => t / (2.0 * t.ln()),
            PsiFamily::ExpOverLog => {
                let l = (t + 1.0).ln();
                l * l / (l - 1.0)
            }
            PsiFamily::Custom(_) => unreachable!(),
        })
    }

    /// `α(t) = λ(t)/t`.
    pub fn alpha_at(&self, t: f64) -> Result<f64> {
        Ok(match self.family {
            PsiFamily::ExpLogSquared => {
                self.check_domain(t)?;
                1.0 / (2.0 * t.ln())
            }
            _ => self.lambda_at(t)? / t,
        })
    }

    pub fn lambda_prime_at(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            PsiFamily::GeneralizedPoisson { alpha, r } => (1.0 - r) * t.powf(-r) / (alpha * r),
            PsiFamily::LogLogPower => {
                let l = (t + 2.0).ln();
                let u1 = l.ln() + 1.0;
                (u1 - 1.0 / l) / (u1 * u1)
            }
            PsiFamily::ExpLogSquared => {
                let l = t.ln();
                (l - 1.0) / (2.0 * l * l)
            }
            PsiFamily::ExpOverLog => {
                let l1 = (t + 1.0).ln() - 1.0;
                1.0 / (t + 1.0) - 1.0 / ((t + 1.0) * l1 * l1)
            }
            PsiFamily::Custom(_) => unreachable!(),
        })
    }

    /// `ε_n = sup_{t≥n} |λ′(t)|`.
    ///
    /// `|λ′|` is eventually decreasing for every built-in family, so the sup is
    /// either `|λ′(n)|` or an interior maximum, which is bracketed on a
    /// geometric grid over `[n, 10n]` and refined by golden-section search.
    pub fn epsilon_n(&self, n: f64) -> Result<f64> {
        const SAMPLES: usize = 64;
        let f = |t: f64| self.lambda_prime_at(t).map(f64::abs);
        let at_n = f(n)?;
        let ratio = 10f64.powf(1.0 / SAMPLES as f64);
        let ts: Vec<f64> = (0..=SAMPLES).map(|i| n * ratio.powi(i as i32)).collect();
        let vals = ts.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        let (imax, &vmax) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if imax == 0 || imax == SAMPLES {
            return Ok(at_n.max(vmax));
        }
        let (mut a, mut b) = (ts[imax - 1], ts[imax + 1]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c)? > f(d)? {
                b = d;
            } else {
                a = c;
            }
            if b - a <= 1e-12 * b {
                break;
            }
        }
        Ok(at_n.max(vmax).max(f(0.5 * (a + b))?))
    }

    /// Whether `α` decreases and `λ` increases on a geometric grid over `[n, 10n]`.
    pub fn monotonicity_on(&self, n: f64) -> Result<(bool, bool)> {
        let ts: Vec<f64> = (0..=32).map(|i| n * 10f64.powf(i as f64 / 32.0)).collect();
        let alphas = ts
            .iter()
            .map(|&t| self.alpha_at(t))
            .collect::<Result<Vec<_>>>()?;
        let lambdas = ts
            .iter()
            .map(|&t| self.lambda_at(t))
            .collect::<Result<Vec<_>>>()?;
        let alpha_down = alphas.windows(2).all(|w| w[1] <= w[0]);
        let lambda_up = lambdas.windows(2).all(|w| w[1] >= w[0]);
        Ok((alpha_down, lambda_up))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn builtins() -> Vec<PsiSequence> {
        vec![
            PsiSequence::generalized_poisson(1.0, 2.0).unwrap(),
            PsiSequence::generalized_poisson(1.0, 0.5).unwrap(),
            PsiSequence::generalized_poisson(LN_2, 1.0).unwrap(),
            PsiSequence::new(PsiFamily::LogLogPower).unwrap(),
            PsiSequence::new(PsiFamily::ExpLogSquared).unwrap(),
            PsiSequence::new(PsiFamily::ExpOverLog).unwrap(),
        ]
    }

    #[test]
    fn poisson_half_at_three() {
        let psi = PsiSequence::generalized_poisson(LN_2, 1.0).unwrap();
        assert_relative_eq!(psi.value_at(3), 0.125, max_relative = 1e-15);
    }

    #[test]
    fn loglog_at_one_matches_direct_power() {
        let psi = PsiSequence::new(PsiFamily::LogLogPower).unwrap();
        // 3^{-ln ln 3}, 40-digit evaluation
        assert_relative_eq!(
            psi.value_at(1),
            0.901_836_445_949_007_8,
            max_relative = 1e-15
        );
        let alt = (-(3f64).ln() * (3f64).ln().ln()).exp();
        assert_relative_eq!(psi.value_at(1), alt, max_relative = 1e-15);
    }

    #[test]
    fn exp_log_squared_derivative_closed_form() {
        let psi = PsiSequence::new(PsiFamily::ExpLogSquared).unwrap();
        for t in [1.5, 3.0, 10.0, 250.0] {
            let l: f64 = f64::ln(t);
            let expected = -(2.0 * l / t) * (-l * l).exp();
            assert_relative_eq!(psi.derivative(t).unwrap(), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            PsiSequence::generalized_poisson(0.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            PsiSequence::generalized_poisson(1.0, -2.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CustomTable::from_entries([(3, -1.0)]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CustomTable::from_entries([(0, 1.0)]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn continuous_matches_integers_exactly() {
        for psi in builtins() {
            for k in [1u64, 2, 5, 17, 100, 1000] {
                assert_eq!(psi.continuous_value(k as f64).unwrap(), psi.value_at(k));
            }
        }
    }

    #[test]
    fn derivative_is_nonpositive_past_threshold() {
        for psi in builtins() {
            let t0 = psi.decreasing_from();
            for i in 0..200 {
                let t = t0 + 0.37 * i as f64;
                assert!(
                    psi.derivative(t.max(1.0)).unwrap() <= 0.0,
                    "{:?} at {t}",
                    psi
                );
            }
        }
    }

    #[test]
    fn finite_difference_consistency() {
        let h = 1e-4;
        for psi in builtins() {
            let mut t = 2.0;
            while t <= 1e6 {
                let f0 = psi.continuous_value(t).unwrap();
                let f1 = psi.continuous_value(t + h).unwrap();
                let d = psi.derivative(t).unwrap();
                // C = 1 dominates |ψ''|/2 for every built-in on [2, ∞)
                assert!((f1 - f0 - h * d).abs() <= h * h + 1e-15, "{:?} at {t}", psi);
                t *= 1.7;
            }
        }
    }

    #[test]
    fn underflow_is_flagged() {
        let psi = PsiSequence::generalized_poisson(1.0, 2.0).unwrap();
        assert!(!psi.is_underflow(26));
        assert!(psi.is_underflow(28));
        assert_eq!(psi.value_at(40), 0.0);
        assert_eq!(psi.ln_value_at(40), -1600.0);
    }

    #[test]
    fn admissibility_poisson() {
        let r2 = PsiSequence::generalized_poisson(1.0, 2.0).unwrap();
        let rep = check_admissibility(&r2, 100);
        assert!(rep.summable && rep.k_summable && rep.d0);
        let r1 = PsiSequence::generalized_poisson(1.0, 1.0).unwrap();
        let rep = check_admissibility(&r1, 100);
        assert!(rep.summable && !rep.d0);
        for (_, ratio) in &rep.ratio_samples {
            assert_relative_eq!(*ratio, (-1f64).exp(), max_relative = 1e-12);
        }
        assert!(rep.evidence.iter().any(|e| e.argument == D0_INTERPRETATION));
    }

    #[test]
    fn admissibility_exp_over_log_ratio_tends_to_one() {
        let psi = PsiSequence::new(PsiFamily::ExpOverLog).unwrap();
        let rep = check_admissibility(&psi, 100_000);
        assert!(!rep.d0);
        let get = |k: u64| rep.ratio_samples.iter().find(|s| s.0 == k).unwrap().1;
        // mpmath: 0.883569205172679, 0.907752054617019, 0.923749512007569
        assert_relative_eq!(get(1000), 0.883_569_205_172_679, max_relative = 1e-9);
        assert_relative_eq!(get(10_000), 0.907_752_054_617_019, max_relative = 1e-9);
        assert_relative_eq!(get(100_000), 0.923_749_512_007_569, max_relative = 1e-9);
        assert!(get(1000) < get(10_000) && get(10_000) < get(100_000));
    }

    #[test]
    fn admissibility_custom_is_evidence_only() {
        let psi = PsiSequence::single_harmonic(5).unwrap();
        let rep = check_admissibility(&psi, 3);
        assert!(rep.summable && !rep.d0 && !rep.analytic);
        assert!(rep.evidence.iter().any(|e| e.flag == "probe"));
    }

    #[test]
    fn characteristics_closed_forms() {
        let p = characteristics(&PsiSequence::new(PsiFamily::ExpLogSquared).unwrap()).unwrap();
        let e2 = E * E;
        assert_relative_eq!(p.lambda_at(e2).unwrap(), e2 / 4.0, max_relative = 1e-15);
        assert_relative_eq!(p.alpha_at(e2).unwrap(), 0.25, max_relative = 1e-15);

        let p = characteristics(&PsiSequence::new(PsiFamily::ExpOverLog).unwrap()).unwrap();
        let l = 101f64.ln();
        assert_relative_eq!(
            p.lambda_at(100.0).unwrap(),
            l * l / (l - 1.0),
            max_relative = 1e-15
        );

        let p = characteristics(&PsiSequence::new(PsiFamily::LogLogPower).unwrap()).unwrap();
        for t in [10.0, 100.0, 1e3, 1e5] {
            let bound = 1.0 / (t + 2.0f64).ln().ln();
            assert!(p.lambda_prime_at(t).unwrap() <= bound);
        }
    }

    #[test]
    fn characteristics_reject_custom_and_out_of_domain() {
        let psi = PsiSequence::single_harmonic(3).unwrap();
        assert!(matches!(
            characteristics(&psi),
            Err(Error::NotDifferentiable(_))
        ));
        let p = characteristics(&PsiSequence::new(PsiFamily::ExpOverLog).unwrap()).unwrap();
        assert!(matches!(p.lambda_at(1.5), Err(Error::DomainError(_))));
        let p = characteristics(&PsiSequence::new(PsiFamily::ExpLogSquared).unwrap()).unwrap();
        assert!(matches!(p.lambda_at(1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn alpha_times_t_is_lambda() {
        for psi in builtins() {
            let p = characteristics(&psi).unwrap();
            for t in [3.0, 7.5, 40.0, 1e4] {
                assert_relative_eq!(
                    p.alpha_at(t).unwrap() * t,
                    p.lambda_at(t).unwrap(),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn lambda_prime_matches_central_difference() {
        let p = characteristics(&PsiSequence::new(PsiFamily::ExpLogSquared).unwrap()).unwrap();
        let mut t = 10.0;
        while t <= 1e4 {
            let h = 1e-3 * t;
            let fd = (p.lambda_at(t + h).unwrap() - p.lambda_at(t - h).unwrap()) / (2.0 * h);
            assert!((fd - p.lambda_prime_at(t).unwrap()).abs() < 1e-6, "t = {t}");
            t *= 1.3;
        }
        for psi in builtins() {
            let p = characteristics(&psi).unwrap();
            for t in [12.0, 90.0, 2500.0] {
                let h = 1e-4 * t;
                let fd = (p.lambda_at(t + h).unwrap() - p.lambda_at(t - h).unwrap()) / (2.0 * h);
                assert!((fd - p.lambda_prime_at(t).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn epsilon_n_is_boundary_value_for_monotone_families() {
        let p = characteristics(&PsiSequence::new(PsiFamily::ExpLogSquared).unwrap()).unwrap();
        assert_relative_eq!(
            p.epsilon_n(1000.0).unwrap(),
            p.lambda_prime_at(1000.0).unwrap(),
            max_relative = 1e-14
        );
        let p = characteristics(&PsiSequence::geometric(0.5).unwrap()).unwrap();
        assert_eq!(p.epsilon_n(5.0).unwrap(), 0.0);
    }

    #[test]
    fn epsilon_n_finds_interior_maximum() {
        // |λ′| for loglog_power peaks between 4 and 10
        let p = characteristics(&PsiSequence::new(PsiFamily::LogLogPower).unwrap()).unwrap();
        let eps = p.epsilon_n(2.0).unwrap();
        let brute = (0..=20_000)
            .map(|i| p.lambda_prime_at(2.0 + i as f64 * 1e-3).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(eps >= brute - 1e-12);
        assert!(eps > p.lambda_prime_at(2.0).unwrap().abs());
    }

    #[test]
    fn tail_bound_dominates_partial_sums() {
        for psi in builtins() {
            for m in 0..=2u32 {
                for after in [10u64, 40, 200] {
                    let Some(lb) = psi.ln_moment_tail_bound(m, after) else {
                        continue;
                    };
                    let scale = psi.ln_value_at(after);
                    let s: f64 = (after + 1..after + 200_000)
                        .map(|k| (k as f64).powi(m as i32) * (psi.ln_value_at(k) - scale).exp())
                        .sum();
                    assert!(s <= (lb - scale).exp(), "{:?} m={m} K={after}", psi);
                }
            }
        }
    }

    #[test]
    fn geometric_tail_bound_is_exact_for_poisson() {
        let psi = PsiSequence::geometric(0.5).unwrap();
        let lb = psi.ln_moment_tail_bound(0, 10).unwrap();
        // Σ_{k>10} 2^{-k} = 2^{-10}
        assert_relative_eq!(lb.exp(), 2f64.powi(-10), max_relative = 1e-9);
    }
}
