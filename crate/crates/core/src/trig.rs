//! Real trigonometric series `f(t) = Re Σ_k c_k e^{ikt}` with certified
//! pointwise evaluation and certified global extrema.
//!
//! Extrema are found in two phases. An FFT grid gives values and derivatives
//! at `N` equispaced points; every grid cell then gets an upper bound from the
//! two-sided Taylor estimate with `M₂ = Σ k²|c_k|` (or the Lipschitz estimate
//! with `L = Σ k|c_k|` when smaller). Cells whose bound can still beat the
//! best known value by more than the requested gap are bisected best-first
//! until none remain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::CompensatedSum;

const BLOCK: usize = 32;
const MIN_GRID: usize = 4096;
const MAX_GRID: usize = 1 << 20;
const DEFAULT_MAX_EVALUATIONS: u64 = 200_000;

/// Truncated trigonometric series in units of `e^{log_scale}`.
///
/// `truncation` bounds, uniformly in `t`, the distance from the truncated
/// sum to the function it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    first: u64,
    coeffs: Vec<Complex64>,
    log_scale: f64,
    truncation: f64,
    norms: [f64; 3],
}

impl TrigSeries {
    /// Coefficients `coeffs[j]` belong to frequency `first + j`.
    pub fn new(first: u64, coeffs: Vec<Complex64>, log_scale: f64, truncation: f64) -> Self {
        let mut norms = [0.0; 3];
        for (j, c) in coeffs.iter().enumerate() {
            let k = (first + j as u64) as f64;
            let a = c.norm();
            norms[0] += a;
            norms[1] += k * a;
            norms[2] += k * k * a;
        }
        // the sums themselves are rounded; keep them upper bounds
        for x in &mut norms {
            *x *= 1.0 + 1e-12;
        }
        TrigSeries {
            first,
            coeffs,
            log_scale,
            truncation,
            norms,
        }
    }

    pub fn zero() -> Self {
        Self::new(1, Vec::new(), 0.0, 0.0)
    }

    pub fn first(&self) -> u64 {
        self.first
    }

    /// Highest frequency carried, or `first - 1` when empty.
    pub fn last(&self) -> u64 {
        (self.first + self.coeffs.len() as u64).saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// `Σ k^m |c_k|` for `m ∈ {0, 1, 2}`, rounded up.
    pub fn abs_moment(&self, m: usize) -> f64 {
        self.norms[m]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// New series with `c_k ↦ f(k, c_k)` and the given truncation bound.
    pub fn map(&self, f: impl Fn(u64, Complex64) -> Complex64, truncation: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| f(self.first + j as u64, *c))
            .collect();
        Self::new(self.first, coeffs, self.log_scale, truncation)
    }

    pub fn negated(&self) -> Self {
        self.map(|_, c| -c, self.truncation)
    }

    /// `(Σ c_k e^{ikt}, Σ k c_k e^{ikt})` of the truncated series.
    pub fn sums(&self, t: f64) -> (Complex64, Complex64) {
        let t = t.rem_euclid(TAU);
        let step = Complex64::cis(t);
        let mut acc = [CompensatedSum::new(); 4];
        for (b, chunk) in self.coeffs.chunks(BLOCK).enumerate() {
            let k0 = self.first + (b * BLOCK) as u64;
            let mut z = Complex64::cis(k0 as f64 * t);
            let (mut v, mut w) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (i, c) in chunk.iter().enumerate() {
                let cz = c * z;
                v += cz;
                w += cz * (k0 + i as u64) as f64;
                z *= step;
            }
            acc[0].add(v.re);
            acc[1].add(v.im);
            acc[2].add(w.re);
            acc[3].add(w.im);
        }
        let v = acc.map(|a| a.value());
        (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
    }

    /// Value and derivative of the truncated series at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (s, ks) = self.sums(t);
        (s.re, -ks.im)
    }

    /// Rounding allowances of [`TrigSeries::eval`] for value and derivative.
    pub fn eval_allowance(&self) -> (f64, f64) {
        let e = f64::EPSILON;
        (
            e * (8.0 * self.norms[1] + 200.0 * self.norms[0]),
            e * (8.0 * self.norms[2] + 200.0 * self.norms[1]),
        )
    }

    /// Values and derivatives at `origin + 2πj/N`, `j = 0..N`, with their
    /// rounding allowances.
    fn grid(&self, n: usize, origin: f64) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut b = vec![zero; n];
        let mut bd = vec![zero; n];
        let step = Complex64::cis(origin.rem_euclid(TAU));
        for (blk, chunk) in self.coeffs.chunks(BLOCK).enumerate() {
            let k0 = self.first + (blk * BLOCK) as u64;
            let mut z = Complex64::cis(k0 as f64 * origin.rem_euclid(TAU));
            for (i, c) in chunk.iter().enumerate() {
                let k = k0 + i as u64;
                let idx = (k % n as u64) as usize;
                let cz = c * z;
                b[idx] += cz;
                bd[idx] += Complex64::new(0.0, k as f64) * cz;
                z *= step;
            }
        }
        let l2 = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (nb, nbd) = (l2(&b), l2(&bd));
        let fft = FftPlanner::new().plan_fft_inverse(n);
        fft.process(&mut b);
        fft.process(&mut bd);
        let lg = (n as f64).log2();
        let fft_factor = f64::EPSILON * (5.0 * lg + 10.0) * (n as f64).sqrt() * (1.0 + 1e-12);
        let (av, ad) = self.eval_allowance();
        (
            b.iter().map(|c| c.re).collect(),
            bd.iter().map(|c| c.re).collect(),
            av + fft_factor * nb,
            ad + fft_factor * nbd,
        )
    }
}

/// One certified extremum of a [`TrigSeries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// Midpoint of the enclosure, in the series' scaled units.
    pub value: f64,
    /// Half-width of the enclosure including the truncation bound.
    pub radius: f64,
    /// Best point found, in `[origin, origin + 2π)`.
    pub at: f64,
    pub grid_points: u64,
    /// Direct evaluations spent after the grid phase.
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Left end of the search window `[origin, origin + 2π)`.
    pub origin: f64,
    /// Grid size; `None` picks `max(4096, 64·first, 2·last)` rounded up to a
    /// power of two.
    pub grid_points: Option<usize>,
    pub max_evaluations: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            origin: 0.0,
            grid_points: None,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    upper: f64,
    a: f64,
    w: f64,
    fa: f64,
    fb: f64,
    da: f64,
    db: f64,
    /// Endpoint data came from direct evaluation rather than the FFT grid.
    direct: bool,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Upper bound of a function on `[a, a+w]` from endpoint values and slopes,
/// given `|f″| ≤ m2` and `|f′| ≤ lip`.
fn cell_upper(fa: f64, fb: f64, da: f64, db: f64, w: f64, lip: f64, m2: f64) -> f64 {
    let lip_bound = 0.5 * (fa + fb + lip * w);
    let pa = |s: f64| fa + da * s + 0.5 * m2 * s * s;
    let pb = |s: f64| fb + db * (s - w) + 0.5 * m2 * (w - s) * (w - s);
    let mut u = fa.min(pb(0.0)).max(fb.min(pa(w)));
    // pa - pb is affine in s
    let c0 = fa - fb + db * w - 0.5 * m2 * w * w;
    let c1 = da - db + m2 * w;
    if c1 != 0.0 {
        let s = -c0 / c1;
        if s > 0.0 && s < w {
            u = u.max(pa(s));
        }
    }
    u.min(lip_bound)
}

fn default_grid(s: &TrigSeries) -> usize {
    let want = (MIN_GRID as u64)
        .max(64 * s.first())
        .max(2 * s.last() + 2)
        .min(MAX_GRID as u64);
    (want as usize).next_power_of_two()
}

/// Certified maximum of `s` over one period.
///
/// `target` is the largest acceptable radius, truncation included.
pub fn certified_max(s: &TrigSeries, target: f64, opts: &SearchOptions) -> Result<Extremum> {
    let origin = opts.origin;
    let slack = target - s.truncation();
    if slack.is_nan() || slack <= 0.0 {
        return Err(Error::tol(
            target,
            format!("truncation bound {:.3e} leaves no room", s.truncation()),
        ));
    }
    if s.is_zero() {
        return Ok(Extremum {
            value: 0.0,
            radius: s.truncation(),
            at: origin,
            grid_points: 0,
            evaluations: 0,
        });
    }
    let (rv, rd) = s.eval_allowance();
    let gap = 2.0 * slack;
    let n = opts.grid_points.unwrap_or_else(|| default_grid(s)).max(8);
    let (vals, ders, gv, gd) = s.grid(n, origin);
    let (av, ad) = (gv.max(rv), gd.max(rd));
    if gap <= 8.0 * rv {
        return Err(Error::tol(
            target,
            format!("rounding allowance {av:.3e} is comparable to the requested radius"),
        ));
    }
    let (lip, m2) = (s.abs_moment(1), s.abs_moment(2));
    let w = TAU / n as f64;
    let at_index = |j: usize| origin + w * j as f64;

    let jbest = (0..n)
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(j.cmp(&i)))
        .expect("grid is nonempty");
    let mut lower = vals[jbest] - av;
    let mut best_t = at_index(jbest);
    let mut evaluations = 0u64;

    // derivative-sign bisection inside the best grid cell
    let next = (jbest + 1) % n;
    let prev = (jbest + n - 1) % n;
    let bracket = if ders[jbest] > 0.0 && ders[next] < 0.0 {
        Some((at_index(jbest), at_index(jbest) + w))
    } else if ders[jbest] < 0.0 && ders[prev] > 0.0 {
        Some((at_index(jbest) - w, at_index(jbest)))
    } else {
        None
    };
    if let Some((mut a, mut b)) = bracket {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let (f, d) = s.eval(m);
            evaluations += 1;
            if f - rv > lower {
                lower = f - rv;
                best_t = m;
            }
            if d > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
    }

    let bound = |fa: f64, fb: f64, da: f64, db: f64, w: f64, direct: bool| {
        let (ev, ed) = if direct { (rv, rd) } else { (av, ad) };
        cell_upper(fa, fb, da, db, w, lip, m2) + ev + ed * w
    };
    let mut heap = BinaryHeap::new();
    let mut dropped = f64::NEG_INFINITY;
    for j in 0..n {
        let k = (j + 1) % n;
        let upper = bound(vals[j], vals[k], ders[j], ders[k], w, false);
        let cell = Cell {
            upper,
            a: at_index(j),
            w,
            fa: vals[j],
            fb: vals[k],
            da: ders[j],
            db: ders[k],
            direct: false,
        };
        if upper > lower + gap {
            heap.push(cell);
        } else {
            dropped = dropped.max(upper);
        }
    }

    let upper = loop {
        let Some(mut cell) = heap.pop() else {
            break dropped;
        };
        if cell.upper <= lower + gap {
            break dropped.max(cell.upper);
        }
        if !cell.direct {
            // grid values carry the larger FFT allowance; redo them directly
            let (fa, da) = s.eval(cell.a);
            let (fb, db) = s.eval(cell.a + cell.w);
            evaluations += 2;
            for (f, t) in [(fa, cell.a), (fb, cell.a + cell.w)] {
                if f - rv > lower {
                    lower = f - rv;
                    best_t = t;
                }
            }
            cell = Cell {
                upper: bound(fa, fb, da, db, cell.w, true),
                fa,
                fb,
                da,
                db,
                direct: true,
                ..cell
            };
            if cell.upper > lower + gap {
                heap.push(cell);
            } else {
                dropped = dropped.max(cell.upper);
            }
            continue;
        }
        if evaluations >= opts.max_evaluations {
            return Err(Error::tol(
                target,
                format!(
                    "{} evaluations left a gap of {:.3e}",
                    evaluations,
                    cell.upper - lower
                ),
            ));
        }
        let hw = 0.5 * cell.w;
        let m = cell.a + hw;
        if hw < 1e-15 {
            return Err(Error::tol(target, "cells shrank below double resolution"));
        }
        let (fm, dm) = s.eval(m);
        evaluations += 1;
        if fm - rv > lower {
            lower = fm - rv;
            best_t = m;
        }
        for child in [
            Cell {
                upper: bound(cell.fa, fm, cell.da, dm, hw, true),
                a: cell.a,
                w: hw,
                fa: cell.fa,
                fb: fm,
                da: cell.da,
                db: dm,
                direct: true,
            },
            Cell {
                upper: bound(fm, cell.fb, dm, cell.db, hw, true),
                a: m,
                w: hw,
                fa: fm,
                fb: cell.fb,
                da: dm,
                db: cell.db,
                direct: true,
            },
        ] {
            if child.upper > lower + gap {
                heap.push(child);
            } else {
                dropped = dropped.max(child.upper);
            }
        }
    };
    let upper = upper.max(lower);
    Ok(Extremum {
        value: 0.5 * (upper + lower),
        radius: 0.5 * (upper - lower) + s.truncation(),
        at: origin + (best_t - origin).rem_euclid(TAU),
        grid_points: n as u64,
        evaluations,
    })
}

/// Certified minimum, via the maximum of `-s`.
pub fn certified_min(s: &TrigSeries, target: f64, opts: &SearchOptions) -> Result<Extremum> {
    let e = certified_max(&s.negated(), target, opts)?;
    Ok(Extremum {
        value: -e.value,
        ..e
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn real(first: u64, cs: &[f64]) -> TrigSeries {
        TrigSeries::new(
            first,
            cs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            0.0,
            0.0,
        )
    }

    #[test]
    fn eval_matches_direct_cosines() {
        let s = TrigSeries::new(
            3,
            vec![
                Complex64::new(0.5, -0.25),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 2.0),
            ],
            0.0,
            0.0,
        );
        for t in [0.0, 0.3, 2.0, 5.9, -1.0, 100.0] {
            let direct: f64 = s
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| (c * Complex64::cis((3 + j) as f64 * t)).re)
                .sum();
            let deriv: f64 = s
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    (c * Complex64::new(0.0, (3 + j) as f64) * Complex64::cis((3 + j) as f64 * t))
                        .re
                })
                .sum();
            let (f, d) = s.eval(t);
            assert!((f - direct).abs() < 1e-13);
            assert!((d - deriv).abs() < 1e-12);
        }
    }

    #[test]
    fn long_series_stays_accurate() {
        // Σ_{k≥1} 2^{-k} cos(kt) = (cos(t)/2 - 1/4)/(5/4 - cos t)
        let cs: Vec<f64> = (1..200).map(|k| 0.5f64.powi(k)).collect();
        let s = real(1, &cs);
        for t in [0.1f64, 1.0, 3.0] {
            let closed = (0.5 * t.cos() - 0.25) / (1.25 - t.cos());
            assert!((s.eval(t).0 - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_matches_direct() {
        let cs: Vec<f64> = (0..300).map(|k| 1.0 / (1.0 + k as f64).powi(2)).collect();
        let s = real(5, &cs);
        let (v, d, av, ad) = s.grid(256, -PI);
        for j in [0usize, 17, 128, 255] {
            let t = -PI + TAU * j as f64 / 256.0;
            let (f, fd) = s.eval(t);
            assert!((v[j] - f).abs() <= av + 1e-15);
            assert!((d[j] - fd).abs() <= ad + 1e-12);
        }
    }

    #[test]
    fn single_cosine_extrema() {
        let s = real(7, &[1.0]);
        let opts = SearchOptions::default();
        let mx = certified_max(&s, 1e-12, &opts).unwrap();
        assert!((mx.value - 1.0).abs() <= mx.radius);
        assert!(mx.radius <= 1e-12);
        let mn = certified_min(&s, 1e-12, &opts).unwrap();
        assert!((mn.value + 1.0).abs() <= mn.radius);
        assert!(
            ((mn.at * 7.0) - PI).rem_euclid(TAU) < 1e-6
                || ((mn.at * 7.0) - PI).rem_euclid(TAU) > TAU - 1e-6
        );
    }

    #[test]
    fn zero_series_is_exact() {
        let s = TrigSeries::zero();
        let e = certified_max(&s, 1e-12, &SearchOptions::default()).unwrap();
        assert_eq!((e.value, e.radius), (0.0, 0.0));
    }

    #[test]
    fn poisson_kernel_minimum_at_pi() {
        // Σ_{k≥1} 2^{-k} cos kt has max 1 at 0 and min -1/3 at π
        let cs: Vec<f64> = (1..120).map(|k| 0.5f64.powi(k)).collect();
        let s = real(1, &cs);
        let opts = SearchOptions::default();
        let mx = certified_max(&s, 1e-11, &opts).unwrap();
        let mn = certified_min(&s, 1e-11, &opts).unwrap();
        assert!((mx.value - 1.0).abs() <= mx.radius + 1e-15);
        assert!((mn.value + 1.0 / 3.0).abs() <= mn.radius + 1e-15);
        assert_relative_eq!(mn.at, PI, epsilon = 1e-4);
    }

    #[test]
    fn window_origin_does_not_change_extrema() {
        let cs: Vec<Complex64> = (0..40)
            .map(|k| Complex64::from_polar(0.8f64.powi(k), 0.3 * k as f64))
            .collect();
        let s = TrigSeries::new(3, cs, 0.0, 0.0);
        let a = certified_max(&s, 1e-10, &SearchOptions::default()).unwrap();
        let b = certified_max(
            &s,
            1e-10,
            &SearchOptions {
                origin: -PI,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert!((a.value - b.value).abs() <= a.radius + b.radius);
        assert!(b.at >= -PI && b.at < PI);
    }

    #[test]
    fn evaluation_cap_reports_tol_unreachable() {
        let cs: Vec<f64> = (1..60).map(|k| 0.9f64.powi(k)).collect();
        let s = real(1, &cs);
        let opts = SearchOptions {
            max_evaluations: 1,
            grid_points: Some(16),
            ..SearchOptions::default()
        };
        assert!(matches!(
            certified_max(&s, 1e-12, &opts),
            Err(Error::TolUnreachable { .. })
        ));
    }

    #[test]
    fn cell_bound_dominates_quadratic() {
        // f(t) = -(t-0.3)^2 on [0, 1]: max 0 at 0.3; f'' = -2
        let f = |t: f64| -(t - 0.3) * (t - 0.3);
        let d = |t: f64| -2.0 * (t - 0.3);
        let u = cell_upper(f(0.0), f(1.0), d(0.0), d(1.0), 1.0, 2.0, 2.0);
        assert!(u >= 0.0);
        assert!(u <= 0.5);
    }
}
