//! Exact class error `E_n = (1/π) inf_λ ‖Ψ_{β,n} − λ‖_C`.
//!
//! The best constant approximation of a continuous periodic function is its
//! midrange, so `E_n = (max Ψ − min Ψ)/(2π)`. Around it sit the two sandwich
//! bounds `(1/2π)‖Ψ(·+π/n) − Ψ‖_C ≤ E_n ≤ (1/π)‖Ψ‖_C` and two lower-bound
//! witnesses: the value at the phase-matched point `t₀`, and the norm of the
//! convolution of `Ψ` with an explicit test polynomial.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{EnvelopeEvaluator, KernelSpec};
use crate::series::{weighted_tail_sum, CertifiedValue};
use crate::trig::{certified_max, certified_min, Extremum, SearchOptions, TrigSeries};

const T0_DAMPING: f64 = 0.5;
const T0_MAX_ITER: u32 = 200;
const T0_THRESHOLD: f64 = 1e-12;

/// Certified maximum and minimum of `Ψ_{β,n}` over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaResult {
    pub max_value: CertifiedValue,
    pub min_value: CertifiedValue,
    pub argmax: f64,
    pub argmin: f64,
    pub grid_points: u64,
    pub refinement_iterations: u64,
}

impl ExtremaResult {
    fn from_pair(mx: &Extremum, mn: &Extremum, s: &TrigSeries) -> Self {
        let terms = s.coeffs().len() as u64;
        ExtremaResult {
            max_value: CertifiedValue::scaled(mx.value, mx.radius, terms, s.log_scale()),
            min_value: CertifiedValue::scaled(mn.value, mn.radius, terms, s.log_scale()),
            argmax: mx.at,
            argmin: mn.at,
            grid_points: mx.grid_points.max(mn.grid_points),
            refinement_iterations: mx.evaluations + mn.evaluations,
        }
    }
}

/// Everything known about `E_n` for one kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub e_n: CertifiedValue,
    /// `(1/π)‖Ψ_{β,n}‖_C`.
    pub upper_sandwich: CertifiedValue,
    /// `(1/2π)‖Ψ_{β,n}(·+π/n) − Ψ_{β,n}‖_C`.
    pub lower_sandwich: CertifiedValue,
    pub witness_t0: f64,
    /// `(1/π)|Ψ_{β,n}(t₀)|`.
    pub witness_value: CertifiedValue,
    pub witness_converged: bool,
    pub witness_residual: f64,
    /// `t₀` when the phase is read at `t = 0` instead of self-consistently.
    pub witness_t0_phase_at_zero: f64,
    pub witness_value_phase_at_zero: CertifiedValue,
    pub extrema: ExtremaResult,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// Lower bound on `Σ_{k≥n} ψ(k)` in units of the spec's scale.
fn tail_floor(spec: &KernelSpec, scale: f64) -> Result<f64> {
    let t = crate::series::tail_sum(&spec.psi, spec.n, 1e-3)?.rescaled(scale);
    Ok(t.value - t.radius)
}

/// Certified extrema with radii at most `tol · Σ_{k≥n} ψ(k)`.
pub fn certified_extrema(spec: &KernelSpec, tol: f64) -> Result<ExtremaResult> {
    certified_extrema_with(spec, tol, &SearchOptions::default())
}

pub fn certified_extrema_with(
    spec: &KernelSpec,
    tol: f64,
    opts: &SearchOptions,
) -> Result<ExtremaResult> {
    check_tol(tol)?;
    let s = spec.series(0.5 * tol)?;
    let target = match spec.log_scale() {
        Some(scale) => tol * tail_floor(spec, scale)?,
        None => 1.0,
    };
    let mx = certified_max(&s, target, opts)?;
    let mn = certified_min(&s, target, opts)?;
    Ok(ExtremaResult::from_pair(&mx, &mn, &s))
}

/// Series of `Ψ_{β,n}(t + π/n) − Ψ_{β,n}(t)`.
fn shifted_difference(spec: &KernelSpec, s: &TrigSeries) -> TrigSeries {
    let two_n = 2 * spec.n;
    s.map(
        |k, c| {
            // e^{ikπ/n} with the angle reduced exactly
            let phase = Complex64::cis((k % two_n) as f64 * PI / spec.n as f64);
            c * (phase - 1.0)
        },
        2.0 * s.truncation(),
    )
}

/// Half the sup-norm of the half-period shifted difference, radius at most
/// `tol · Σ_{k≥n} ψ(k)`.
pub fn shift_lower_bound(spec: &KernelSpec, tol: f64) -> Result<CertifiedValue> {
    check_tol(tol)?;
    let Some(scale) = spec.log_scale() else {
        return Ok(CertifiedValue::zero());
    };
    let s = spec.series(0.25 * tol)?;
    let target = 2.0 * tol * tail_floor(spec, scale)?;
    half_sup_norm_of_difference(spec, &s, target, &SearchOptions::default())
}

fn half_sup_norm_of_difference(
    spec: &KernelSpec,
    s: &TrigSeries,
    target: f64,
    opts: &SearchOptions,
) -> Result<CertifiedValue> {
    let d = shifted_difference(spec, s);
    let mx = certified_max(&d, target, opts)?;
    let mn = certified_min(&d, target, opts)?;
    Ok(sup_norm(&mx, &mn, &d).mul(0.5))
}

fn sup_norm(mx: &Extremum, mn: &Extremum, s: &TrigSeries) -> CertifiedValue {
    let v = mx.value.abs().max(mn.value.abs());
    let r = mx.radius.max(mn.radius);
    CertifiedValue::scaled(v, r, s.coeffs().len() as u64, s.log_scale())
}

/// Phase-matched lower-bound point and its value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T0Witness {
    pub t0: f64,
    /// `Ψ_{β,n}(t₀)`.
    pub value: CertifiedValue,
    pub converged: bool,
    pub iterations: u32,
    /// `|F(t₀) − t₀|` at the last iterate.
    pub residual: f64,
    /// `βπ/(2n)`, the point obtained by reading the phase at `t = 0`.
    pub t0_phase_at_zero: f64,
    pub value_phase_at_zero: CertifiedValue,
    /// `g(0) = Σ_{k≥n} ψ(k)`.
    pub g0: CertifiedValue,
    /// `Σ_{k≥1} kψ(k+n)`, a bound on `|g′|`.
    pub weighted_tail: CertifiedValue,
}

impl T0Witness {
    /// `g(0) − |t₀| · sup|g′|` in the units of `value`; by the mean value
    /// theorem `|Ψ(t₀)| = |g(t₀) + ih(t₀)| ≥ |g(t₀)|` is at least this.
    pub fn mvt_lower_bound(&self) -> f64 {
        let g0 = self.g0.rescaled(self.value.log_scale);
        let w = self.weighted_tail.rescaled(self.value.log_scale);
        g0.value - g0.radius - self.t0.abs() * (w.value + w.radius)
    }
}

/// Solves `t = (βπ/2 + arg(g(t) + ih(t)))/n` by damped iteration from `βπ/(2n)`.
///
/// Failure to converge is reported through `converged` and `residual`; the
/// last iterate still gives a valid lower bound.
pub fn t0_witness(spec: &KernelSpec, tol: f64) -> Result<T0Witness> {
    check_tol(tol)?;
    let s = spec.series(tol)?;
    t0_from_series(spec, &s, tol)
}

fn t0_from_series(spec: &KernelSpec, s: &TrigSeries, tol: f64) -> Result<T0Witness> {
    let n = spec.n as f64;
    let shift = spec.reduced_beta() * FRAC_PI_2;
    let start = shift / n;
    let (rv, _) = s.eval_allowance();
    let value_at = |t: f64| {
        CertifiedValue::scaled(
            s.eval(t).0,
            s.truncation() + rv,
            s.coeffs().len() as u64,
            s.log_scale(),
        )
    };
    let Some(_) = spec.log_scale() else {
        let z = CertifiedValue::zero();
        return Ok(T0Witness {
            t0: start,
            value: z,
            converged: true,
            iterations: 0,
            residual: 0.0,
            t0_phase_at_zero: start,
            value_phase_at_zero: z,
            g0: z,
            weighted_tail: z,
        });
    };
    let env = EnvelopeEvaluator::new(spec, tol)?;
    let mut t = start;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < T0_MAX_ITER {
        let e = env.at(t);
        let r = (shift + e.phase) / n - t;
        residual = r.abs();
        iterations += 1;
        if residual <= T0_THRESHOLD {
            break;
        }
        t += T0_DAMPING * r;
    }
    let g0 = env.at(0.0);
    Ok(T0Witness {
        t0: t,
        value: value_at(t),
        converged: residual <= T0_THRESHOLD,
        iterations,
        residual,
        t0_phase_at_zero: start,
        value_phase_at_zero: value_at(start),
        g0: CertifiedValue::scaled(g0.g, g0.radius, s.coeffs().len() as u64, g0.log_scale),
        weighted_tail: weighted_tail_sum(&spec.psi, spec.n, 1e-3)?,
    })
}

/// `E_n` with radius at most `tol · Σ_{k≥n} ψ(k)`, plus sandwich bounds and
/// the `t₀` witness.
pub fn best_constant_error(spec: &KernelSpec, tol: f64) -> Result<ErrorEstimate> {
    best_constant_error_with(spec, tol, &SearchOptions::default())
}

pub fn best_constant_error_with(
    spec: &KernelSpec,
    tol: f64,
    opts: &SearchOptions,
) -> Result<ErrorEstimate> {
    check_tol(tol)?;
    let s = spec.series(0.25 * PI * tol)?;
    let target = match spec.log_scale() {
        Some(scale) => 0.5 * PI * tol * tail_floor(spec, scale)?,
        None => 1.0,
    };
    let mx = certified_max(&s, target, opts)?;
    let mn = certified_min(&s, target, opts)?;
    let terms = s.coeffs().len() as u64;
    let ls = s.log_scale();
    let e_n = CertifiedValue::scaled(
        (mx.value - mn.value) / TAU,
        (mx.radius + mn.radius) / TAU,
        terms,
        ls,
    );
    let upper = sup_norm(&mx, &mn, &s).mul(1.0 / PI);
    let lower = half_sup_norm_of_difference(spec, &s, 2.0 * target, opts)?.mul(1.0 / PI);
    let w = t0_from_series(spec, &s, tol)?;
    let witness = |v: CertifiedValue| CertifiedValue {
        value: v.value.abs() / PI,
        radius: v.radius / PI,
        ..v
    };
    Ok(ErrorEstimate {
        e_n,
        upper_sandwich: upper,
        lower_sandwich: lower,
        witness_t0: w.t0,
        witness_value: witness(w.value),
        witness_converged: w.converged,
        witness_residual: w.residual,
        witness_t0_phase_at_zero: w.t0_phase_at_zero,
        witness_value_phase_at_zero: witness(w.value_phase_at_zero),
        extrema: ExtremaResult::from_pair(&mx, &mn, &s),
    })
}

/// Real trigonometric polynomial
/// `φ(t) = a₀ + Σ_{m=1}^{M} (a_m cos mt + b_m sin mt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub a0: f64,
    /// `cos[m-1] = a_m`.
    pub cos: Vec<f64>,
    /// `sin[m-1] = b_m`.
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        TrigPolynomial { a0, cos, sin }
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vec::new(), Vec::new())
    }

    /// `amp · cos(m t)`.
    pub fn cosine(m: usize, amp: f64) -> Self {
        let mut cos = vec![0.0; m];
        cos[m - 1] = amp;
        Self::new(0.0, cos, Vec::new())
    }

    /// `amp · sin(m t)`.
    pub fn sine(m: usize, amp: f64) -> Self {
        let mut sin = vec![0.0; m];
        sin[m - 1] = amp;
        Self::new(0.0, Vec::new(), sin)
    }

    /// `(F_M(t) − F_M(t − s))/2` for the Fejér kernel normalized to unit
    /// integral; its `L₁` norm is at most 1 because `F_M ≥ 0`.
    pub fn fejer_difference(m: usize, s: f64) -> Self {
        let (cos, sin) = (1..=m)
            .map(|j| {
                let w = 1.0 - j as f64 / (m as f64 + 1.0);
                let x = j as f64 * s;
                (w / PI * (1.0 - x.cos()) / 2.0, -w / PI * x.sin() / 2.0)
            })
            .unzip();
        Self::new(0.0, cos, sin)
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|x| *x != 0.0).map_or(0, |i| i + 1);
        last(&self.cos).max(last(&self.sin))
    }

    /// `(a_m, b_m)`, zero past the stored length.
    pub fn coeff(&self, m: usize) -> (f64, f64) {
        if m == 0 {
            return (self.a0, 0.0);
        }
        (
            self.cos.get(m - 1).copied().unwrap_or(0.0),
            self.sin.get(m - 1).copied().unwrap_or(0.0),
        )
    }

    pub fn eval(&self, t: f64) -> f64 {
        (1..=self.degree()).fold(self.a0, |acc, m| {
            let (a, b) = self.coeff(m);
            let (sn, cs) = (m as f64 * t).sin_cos();
            acc + a * cs + b * sn
        })
    }

    /// Antiderivative without the `a₀ t` term.
    fn periodic_primitive(&self, t: f64) -> f64 {
        (1..=self.degree()).fold(0.0, |acc, m| {
            let (a, b) = self.coeff(m);
            let (sn, cs) = (m as f64 * t).sin_cos();
            acc + (a * sn - b * cs) / m as f64
        })
    }

    /// `∫_0^{2π} |φ(t)| dt`, integrating the primitive exactly between the
    /// sign changes found on a grid of `max(2^16, 64M)` points.
    pub fn l1_norm(&self) -> f64 {
        let deg = self.degree();
        if deg == 0 {
            return TAU * self.a0.abs();
        }
        let n = (1usize << 16).max(64 * deg);
        let h = TAU / n as f64;
        let vals: Vec<f64> = (0..=n).map(|j| self.eval(j as f64 * h)).collect();
        let mut roots = Vec::new();
        for j in 0..n {
            let (fa, fb) = (vals[j], vals[j + 1]);
            if fa == 0.0 {
                roots.push(j as f64 * h);
            } else if fa * fb < 0.0 {
                let (mut a, mut b) = (j as f64 * h, (j + 1) as f64 * h);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if (self.eval(m) > 0.0) == (fa > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        let integral = |a: f64, b: f64| {
            (self.periodic_primitive(b) - self.periodic_primitive(a) + self.a0 * (b - a)).abs()
        };
        if roots.is_empty() {
            return integral(0.0, TAU);
        }
        let mut total = 0.0;
        for w in roots.windows(2) {
            total += integral(w[0], w[1]);
        }
        total + integral(*roots.last().unwrap(), roots[0] + TAU)
    }
}

/// `‖(1/π) ∫ Ψ_{β,n}(· − t) φ(t) dt‖_C`, a lower bound on `E_n` for every
/// admissible `φ` (zero mean, `‖φ‖₁ ≤ 1`). Radius at most
/// `tol · Σ_{k≥n} ψ(k)`.
pub fn witness_lower_bound(
    spec: &KernelSpec,
    phi: &TrigPolynomial,
    tol: f64,
) -> Result<CertifiedValue> {
    check_tol(tol)?;
    let scale_coeffs = phi.cos.iter().chain(&phi.sin).map(|x| x.abs()).sum::<f64>();
    if phi.a0.abs() > 1e-15 * (1.0 + scale_coeffs) {
        return Err(Error::NotAdmissible(format!("mean {} is not zero", phi.a0)));
    }
    let norm = phi.l1_norm();
    if norm > 1.0 + 1e-9 {
        return Err(Error::NotAdmissible(format!("L1 norm {norm} exceeds 1")));
    }
    let Some(scale) = spec.log_scale() else {
        return Ok(CertifiedValue::zero());
    };
    let s = spec.series(0.25 * tol)?;
    let deg = phi.degree() as u64;
    let k_max = s.last();
    // frequencies beyond the truncation still meet φ's coefficients
    let beyond = (k_max + 1..=deg)
        .map(|k| {
            let (a, b) = phi.coeff(k as usize);
            a.hypot(b)
        })
        .fold(0.0, f64::max);
    let upto = k_max.min(deg);
    let coeffs: Vec<Complex64> = if upto < s.first() {
        Vec::new()
    } else {
        (s.first()..=upto)
            .map(|k| {
                let (a, b) = phi.coeff(k as usize);
                s.coeffs()[(k - s.first()) as usize] * Complex64::new(a, -b)
            })
            .collect()
    };
    let conv = TrigSeries::new(s.first(), coeffs, s.log_scale(), s.truncation() * beyond);
    let target = tol * tail_floor(spec, scale)?;
    let opts = SearchOptions::default();
    let mx = certified_max(&conv, target, &opts)?;
    let mn = certified_min(&conv, target, &opts)?;
    Ok(sup_norm(&mx, &mn, &conv))
}
