//! Certified summation of nonnegative coefficient tails.
//!
//! Sums are accumulated relative to a reference coefficient, so a tail whose
//! terms are all far below the double range still has an ordinary mantissa.
//! The reference is carried along as [`CertifiedValue::log_scale`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::PsiSequence;

/// Hard cap on summed terms.
pub const MAX_TERMS: u64 = 100_000_000;

const CHECK_EVERY: u64 = 16;

/// A value with a rigorous enclosure radius.
///
/// The represented quantity is `value · e^{log_scale}` with error at most
/// `radius · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub radius: f64,
    pub terms_used: u64,
    #[serde(default)]
    pub log_scale: f64,
}

impl CertifiedValue {
    pub fn new(value: f64, radius: f64, terms_used: u64) -> Self {
        Self::scaled(value, radius, terms_used, 0.0)
    }

    pub fn scaled(value: f64, radius: f64, terms_used: u64, log_scale: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius {radius}");
        CertifiedValue {
            value,
            radius,
            terms_used,
            log_scale,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 0)
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    /// `value · e^{log_scale}`; reads 0 when that underflows.
    pub fn absolute(&self) -> f64 {
        self.value * self.log_scale.exp()
    }

    pub fn absolute_radius(&self) -> f64 {
        self.radius * self.log_scale.exp()
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.radius) * self.log_scale.exp()
    }

    pub fn upper(&self) -> f64 {
        (self.value + self.radius) * self.log_scale.exp()
    }

    /// `ln |value · e^{log_scale}|`, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.value.abs().ln() + self.log_scale
    }

    /// Same quantity expressed against another reference scale.
    pub fn rescaled(&self, log_scale: f64) -> Self {
        let f = (self.log_scale - log_scale).exp();
        CertifiedValue {
            value: self.value * f,
            radius: self.radius * f,
            terms_used: self.terms_used,
            log_scale,
        }
    }

    /// Whether `x` (in absolute units) lies in the enclosure, with `slack`
    /// added on each side in the same units.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (x - self.absolute()).abs() <= self.absolute_radius() + slack
    }

    pub fn mul(&self, c: f64) -> Self {
        CertifiedValue {
            value: self.value * c,
            radius: self.radius * c.abs(),
            ..*self
        }
    }
}

/// Neumaier's variant of Kahan summation, plus the running sum of magnitudes
/// needed for a rounding allowance.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// Bound on the accumulation error, ignoring errors in the terms.
    pub fn rounding_bound(&self) -> f64 {
        2.0 * f64::EPSILON * (self.value().abs() + self.abs * f64::EPSILON * 64.0)
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Reference `ln ψ` for a tail starting at `from`: `ln ψ(from)` when that
/// coefficient is nonzero, otherwise the largest coefficient further out.
/// `None` when the tail is identically zero.
pub fn reference_log_scale(psi: &PsiSequence, from: u64) -> Option<f64> {
    let l = psi.ln_value_at(from);
    if l.is_finite() {
        return Some(l);
    }
    let end = psi.support_end()?;
    (from..=end)
        .map(|k| psi.ln_value_at(k))
        .filter(|l| l.is_finite())
        .max_by(f64::total_cmp)
}

/// Smallest index `K ≥ from` such that the certified bound on
/// `Σ_{k>K} k^m ψ(k)` falls below `budget · e^{log_scale}`, along with that
/// bound in scaled units. Used to size truncated kernels.
pub fn truncation_index(
    psi: &PsiSequence,
    from: u64,
    moment: u32,
    log_scale: f64,
    budget: f64,
) -> Result<(u64, f64)> {
    if let Some(end) = psi.support_end() {
        return Ok((end.max(from), 0.0));
    }
    let mut k = from;
    loop {
        if let Some(lb) = psi.ln_moment_tail_bound(moment, k) {
            let b = (lb - log_scale).exp();
            if b <= budget {
                return Ok((k, b));
            }
        }
        if k - from >= MAX_TERMS {
            return Err(Error::tol(
                budget,
                format!("tail of {} needs more than {MAX_TERMS} terms", psi.name()),
            ));
        }
        // a coarse doubling search keeps this cheap for slowly decaying tails
        k += CHECK_EVERY.max((k - from) / 64);
    }
}

/// Sums `Σ_{k≥from} w(k) ψ(k)` where `0 ≤ w(k) ≤ k^moment`, stopping once the
/// certified remainder is below `tol` times the running sum.
fn certified_sum(
    psi: &PsiSequence,
    from: u64,
    moment: u32,
    weight: impl Fn(u64) -> f64,
    tol: f64,
) -> Result<CertifiedValue> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let Some(scale) = reference_log_scale(psi, from) else {
        return Ok(CertifiedValue::zero());
    };
    let mut acc = CompensatedSum::new();
    // propagated error of ln ψ(k) − ln ψ(from) through exp
    let mut term_err = 0.0;
    let end = psi.support_end();
    let mut k = from;
    let tail_bound = loop {
        let l = psi.ln_value_at(k);
        if l.is_finite() {
            let term = weight(k) * (l - scale).exp();
            acc.add(term);
            if l != scale {
                term_err += term * 2.0 * f64::EPSILON * (l.abs() + scale.abs());
            }
        }
        let count = k - from + 1;
        if end == Some(k) || end.is_some_and(|e| e < from) {
            break 0.0;
        }
        if end.is_none() && count.is_multiple_of(CHECK_EVERY) {
            if let Some(lb) = psi.ln_moment_tail_bound(moment, k) {
                let b = (lb - scale).exp();
                if b <= tol * acc.value() {
                    break b;
                }
            }
        }
        if count >= MAX_TERMS {
            return Err(Error::tol(
                tol,
                format!("tail of {} needs more than {MAX_TERMS} terms", psi.name()),
            ));
        }
        k += 1;
    };
    let value = acc.value();
    let rounding = acc.rounding_bound() + acc.abs_sum() * 4.0 * f64::EPSILON + term_err;
    let radius = tail_bound + rounding;
    if rounding > tol * value && rounding > 0.0 {
        return Err(Error::tol(
            tol,
            format!(
                "rounding allowance {:.3e} exceeds the requested relative tolerance",
                rounding / value
            ),
        ));
    }
    Ok(CertifiedValue::scaled(value, radius, k - from + 1, scale))
}

/// `Σ_{k≥n} ψ(k)` with `radius ≤ tol · value`.
pub fn tail_sum(psi: &PsiSequence, n: u64, tol: f64) -> Result<CertifiedValue> {
    check_n(n)?;
    certified_sum(psi, n, 0, |_| 1.0, tol)
}

/// `Σ_{k≥1} k ψ(k+n)` with `radius ≤ tol · value`.
pub fn weighted_tail_sum(psi: &PsiSequence, n: u64, tol: f64) -> Result<CertifiedValue> {
    check_n(n)?;
    certified_sum(psi, n + 1, 1, |k| (k - n) as f64, tol)
}

/// `Σ_{k≥n} k^m ψ(k)` with `radius ≤ tol · value`.
pub fn moment_tail_sum(psi: &PsiSequence, n: u64, m: u32, tol: f64) -> Result<CertifiedValue> {
    check_n(n)?;
    certified_sum(psi, n, m, |k| (k as f64).powi(m as i32), tol)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

/// Closed forms `(Σ_{k≥n} q^k, Σ_{k≥n} k q^k)`.
pub fn geometric_tail(q: f64, n: u64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError(format!("q must lie in (0, 1), got {q}")));
    }
    let qn = (n as f64 * q.ln()).exp();
    let p = 1.0 - q;
    let tail = qn / p;
    let weighted = (n as f64 * qn * p + qn * q) / (p * p);
    Ok((tail, weighted))
}

/// Logarithm of the explicit bound on `(1/n) Σ_{k>n} k e^{−αk^r}` for `r > 1`:
///
/// ```text
/// (1/n)[(n+1)e^{−α(n+1)^r} + e^{−α(n+1)^r}(n+1)^{2−r}/(αr) · (1 + 2/(αr(n+1)^r − 2))]
/// ```
pub fn ln_poisson_tail_bound_r_gt_1(alpha: f64, r: f64, n: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(r > 1.0 && r.is_finite()) || n == 0 {
        return Err(Error::DomainError(format!(
            "bound needs alpha > 0, r > 1, n >= 1; got alpha = {alpha}, r = {r}, n = {n}"
        )));
    }
    let n1 = n as f64 + 1.0;
    let d = alpha * r * n1.powf(r);
    if d <= 2.0 {
        return Err(Error::DomainError(format!(
            "alpha r (n+1)^r = {d} must exceed 2"
        )));
    }
    let head = -alpha * n1.powf(r);
    let inner = n1 + n1.powf(2.0 - r) / (alpha * r) * (1.0 + 2.0 / (d - 2.0));
    Ok(head + inner.ln() - (n as f64).ln())
}

pub fn poisson_tail_bound_r_gt_1(alpha: f64, r: f64, n: u64) -> Result<f64> {
    ln_poisson_tail_bound_r_gt_1(alpha, r, n).map(f64::exp)
}
