//! Brute-force reference for `e_n`: the kernel sampled on a uniform grid.
//!
//! Shares nothing with the certified search beyond the coefficient values
//! and the family's analytic tail bounds. Each sample is a complex Horner
//! evaluation of `Σ c_k z^k`; the grid maximum misses the true maximum by at
//! most `Lδ/2` with `L = Σ kψ(k)` and `δ` the spacing.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::series::CertifiedValue;

pub const ORACLE_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// `(max − min)/(2π)`, scaled by `e^{log_scale}`.
    pub e_n: CertifiedValue,
    pub max: f64,
    pub min: f64,
    pub last_index: u64,
}

/// `K` with `Σ_{k>K} ψ(k) ≤ budget` in scaled units, that tail, and the
/// first-moment tail past `K`.
fn cutoff(spec: &KernelSpec, scale: f64, budget: f64) -> Result<(u64, f64, f64)> {
    let psi = &spec.psi;
    if let Some(end) = psi.support_end() {
        return Ok((end.max(spec.n), 0.0, 0.0));
    }
    let mut k = spec.n;
    loop {
        if let (Some(b0), Some(b1)) = (
            psi.ln_moment_tail_bound(0, k),
            psi.ln_moment_tail_bound(1, k),
        ) {
            if b0 - scale <= budget.ln() {
                return Ok((k, (b0 - scale).exp(), (b1 - scale).exp()));
            }
        }
        if k > 50_000_000 {
            return Err(Error::tol(budget, "oracle cutoff beyond 5e7 terms"));
        }
        k = k + k / 8 + 8;
    }
}

/// Grid estimate of `e_n` with `points` samples; `tol` is the truncation
/// budget relative to `ψ(n)` (or the largest coefficient).
pub fn grid_oracle(spec: &KernelSpec, points: usize, tol: f64) -> Result<OracleResult> {
    let psi = &spec.psi;
    let n = spec.n;
    let end = psi.support_end();
    let scale = match end {
        Some(e) => (n..=e.max(n))
            .map(|k| psi.ln_value_at(k))
            .fold(f64::NEG_INFINITY, f64::max),
        None => psi.ln_value_at(n),
    };
    if scale == f64::NEG_INFINITY {
        return Ok(OracleResult {
            e_n: CertifiedValue::zero(),
            max: 0.0,
            min: 0.0,
            last_index: n,
        });
    }
    let (k_max, trunc, trunc1) = cutoff(spec, scale, tol)?;
    let c: Vec<f64> = (n..=k_max)
        .map(|k| (psi.ln_value_at(k) - scale).exp())
        .collect();
    let lip: f64 = c.iter().zip(n..).map(|(v, k)| v * k as f64).sum::<f64>() + trunc1;
    let abs_sum: f64 = c.iter().sum();

    let rot = Complex64::cis(-spec.beta.rem_euclid(4.0) * PI / 2.0);
    let lead = |j: usize| {
        let a = TAU * ((n as u128 * j as u128) % points as u128) as f64 / points as f64;
        rot * Complex64::cis(a)
    };
    // Four interleaved Horner chains per pass; a single chain is latency bound.
    const LANES: usize = 4;
    let eval_block = |j0: usize| -> (f64, f64) {
        let js: [usize; LANES] = std::array::from_fn(|i| (j0 + i).min(points - 1));
        let z: [Complex64; LANES] = js.map(|j| Complex64::cis(TAU * j as f64 / points as f64));
        let mut acc = [Complex64::new(0.0, 0.0); LANES];
        for &v in c.iter().rev() {
            for i in 0..LANES {
                acc[i] = acc[i] * z[i] + v;
            }
        }
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..LANES {
            let v = (lead(js[i]) * acc[i]).re;
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (hi, lo)
    };
    let (max, min) = (0..points.div_ceil(LANES))
        .into_par_iter()
        .map(|b| eval_block(b * LANES))
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY),
            |a, b| (a.0.max(b.0), a.1.min(b.1)),
        );
    // the sample point cis(t) itself is off by ~eps, moving term k by ~k eps
    let rounding = 8.0 * (c.len() as f64 + 4.0) * f64::EPSILON * abs_sum + 4.0 * f64::EPSILON * lip;
    let discretization = lip * PI / points as f64;
    let per_extremum = discretization + trunc + rounding;
    Ok(OracleResult {
        e_n: CertifiedValue::scaled(
            (max - min) / TAU,
            2.0 * per_extremum / TAU,
            c.len() as u64,
            scale,
        ),
        max,
        min,
        last_index: k_max,
    })
}
