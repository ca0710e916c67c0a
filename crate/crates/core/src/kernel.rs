//! The tail kernel `Ψ_{β,n}(t) = Σ_{k≥n} ψ(k) cos(kt − βπ/2)`, its
//! derivative, and the envelope pair `g`, `h` with
//! `Ψ_{β,n}(t) = g(t) cos(nt − βπ/2) + h(t) sin(nt − βπ/2)`.
//!
//! Values come back in units of `e^{log_scale}` where `log_scale` is the
//! reference coefficient chosen by [`reference_log_scale`]; tolerances are
//! relative to the tail sum `Σ_{k≥n} ψ(k)`, which bounds `|Ψ_{β,n}|`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::PsiSequence;
use crate::series::{
    moment_tail_sum, reference_log_scale, tail_sum, truncation_index, CertifiedValue,
};
use crate::trig::TrigSeries;

/// Precision used when the tail sum only serves as a scale.
const SCALE_TOL: f64 = 1e-3;

/// The triple `(ψ, β, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub psi: PsiSequence,
    pub beta: f64,
    pub n: u64,
}

impl KernelSpec {
    pub fn new(psi: PsiSequence, beta: f64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite, got {beta}"
            )));
        }
        Ok(KernelSpec { psi, beta, n })
    }

    /// `β` reduced modulo 4 into `(−2, 2]`.
    pub fn reduced_beta(&self) -> f64 {
        let b = self.beta.rem_euclid(4.0);
        if b > 2.0 {
            b - 4.0
        } else {
            b
        }
    }

    /// `e^{−iβπ/2}`, exact for integer `β`.
    pub fn rotation(&self) -> Complex64 {
        let b = self.reduced_beta();
        if b.fract() == 0.0 {
            match b as i64 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            }
        } else {
            Complex64::cis(-b * FRAC_PI_2)
        }
    }

    /// Reference `ln ψ` for this tail; `None` when the tail vanishes.
    pub fn log_scale(&self) -> Option<f64> {
        reference_log_scale(&self.psi, self.n)
    }

    /// Lower bound on `Σ_{k≥n} ψ(k)` in scaled units.
    fn tail_floor(&self, scale: f64) -> Result<f64> {
        let t = tail_sum(&self.psi, self.n, SCALE_TOL)?.rescaled(scale);
        Ok(t.value - t.radius)
    }

    /// Truncated kernel whose truncation bound is at most `tol` times the
    /// tail sum. A vanishing tail gives the zero series.
    pub fn series(&self, tol: f64) -> Result<TrigSeries> {
        check_tol(tol)?;
        let Some(scale) = self.log_scale() else {
            return Ok(TrigSeries::zero());
        };
        let budget = tol * self.tail_floor(scale)?;
        let (k_max, bound) = truncation_index(&self.psi, self.n, 0, scale, budget)?;
        let (coeffs, err) = scaled_coefficients(&self.psi, self.n, k_max, scale, self.rotation());
        Ok(TrigSeries::new(self.n, coeffs, scale, bound + err))
    }
}

/// `rot · ψ(k)/e^{scale}` for `k = from..=to`, with a bound on the summed
/// error that rounding of `ln ψ(k) − scale` puts into them.
fn scaled_coefficients(
    psi: &PsiSequence,
    from: u64,
    to: u64,
    scale: f64,
    rot: Complex64,
) -> (Vec<Complex64>, f64) {
    let mut err = 0.0;
    let coeffs = (from..=to)
        .map(|k| {
            let l = psi.ln_value_at(k);
            let v = (l - scale).exp();
            if l != scale && l.is_finite() {
                err += v * 2.0 * f64::EPSILON * (l.abs() + scale.abs());
            }
            rot * v
        })
        .collect();
    (coeffs, err * (1.0 + 1e-10))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// `Ψ_{β,n}(t)`, radius at most `tol · Σ_{k≥n} ψ(k)` plus rounding.
pub fn eval_kernel(spec: &KernelSpec, t: f64, tol: f64) -> Result<CertifiedValue> {
    let s = spec.series(tol)?;
    let (v, _) = s.eval(t);
    let (rv, _) = s.eval_allowance();
    Ok(CertifiedValue::scaled(
        v,
        s.truncation() + rv,
        s.coeffs().len() as u64,
        s.log_scale(),
    ))
}

/// `Ψ′_{β,n}(t) = −Σ_{k≥n} kψ(k) sin(kt − βπ/2)`, radius at most
/// `tol · Σ_{k≥n} kψ(k)` plus rounding.
pub fn eval_kernel_derivative(spec: &KernelSpec, t: f64, tol: f64) -> Result<CertifiedValue> {
    check_tol(tol)?;
    let Some(scale) = spec.log_scale() else {
        return Ok(CertifiedValue::zero());
    };
    let l = moment_tail_sum(&spec.psi, spec.n, 1, SCALE_TOL)?.rescaled(scale);
    let (k_max, bound) = truncation_index(&spec.psi, spec.n, 1, scale, tol * (l.value - l.radius))?;
    let (coeffs, err) = scaled_coefficients(&spec.psi, spec.n, k_max, scale, spec.rotation());
    let s = TrigSeries::new(spec.n, coeffs, scale, bound);
    let (_, d) = s.eval(t);
    let (_, rd) = s.eval_allowance();
    // coefficient errors enter the derivative weighted by k ≤ k_max
    let radius = bound + rd + err * k_max as f64;
    Ok(CertifiedValue::scaled(
        d,
        radius,
        s.coeffs().len() as u64,
        scale,
    ))
}

/// `Σ_{k≥n} kψ(k)`, which bounds `|Ψ′_{β,n}|`.
pub fn lipschitz_constant(spec: &KernelSpec) -> Result<CertifiedValue> {
    moment_tail_sum(&spec.psi, spec.n, 1, 1e-12)
}

/// Envelope pair at one point.
///
/// `g`, `h`, `amplitude` and `radius` are in units of `e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub amplitude: f64,
    /// `arg(g + ih)` in `(−π, π]`.
    pub phase: f64,
    /// Bound on the error of each of `g` and `h`.
    pub radius: f64,
    pub log_scale: f64,
}

/// `g(t) = Σ_{k≥0} ψ(k+n) cos kt`, `h(t) = −Σ_{k≥0} ψ(k+n) sin kt`.
pub fn envelope(spec: &KernelSpec, t: f64, tol: f64) -> Result<EnvelopeSample> {
    Ok(EnvelopeEvaluator::new(spec, tol)?.at(t))
}

/// Shares one truncation across many envelope evaluations.
#[derive(Debug, Clone)]
pub struct EnvelopeEvaluator {
    series: TrigSeries,
}

impl EnvelopeEvaluator {
    pub fn new(spec: &KernelSpec, tol: f64) -> Result<Self> {
        let s = spec.series(tol)?;
        // drop the rotation and shift frequencies down by n
        let rot = spec.rotation().conj();
        let coeffs = s.coeffs().iter().map(|c| c * rot).collect();
        Ok(EnvelopeEvaluator {
            series: TrigSeries::new(0, coeffs, s.log_scale(), s.truncation()),
        })
    }

    pub fn at(&self, t: f64) -> EnvelopeSample {
        let (z, _) = self.series.sums(-t);
        let (rv, _) = self.series.eval_allowance();
        let (g, h) = if self.series.is_zero() {
            (0.0, 0.0)
        } else {
            (z.re, z.im)
        };
        EnvelopeSample {
            t: t.rem_euclid(TAU),
            g,
            h,
            amplitude: g.hypot(h),
            phase: h.atan2(g),
            radius: self.series.truncation() + rv,
            log_scale: self.series.log_scale(),
        }
    }

    /// The truncated series `Σ_{k≥0} ψ(k+n) e^{ikt}`.
    pub fn series(&self) -> &TrigSeries {
        &self.series
    }
}
