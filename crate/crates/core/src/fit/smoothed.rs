//! Smoothed L1 cost on the hat basis.
//!
//! With `sign(e)` replaced by `tanh(k e)`, the pointwise cost `|e|` becomes
//! `log(cosh(k e)) / k`. For coefficients `v` and error `e = f - v` the cost,
//! gradient and Hessian are
//!
//! ```text
//! C(v)     = sum_i int_{I_i} log cosh(k e) / k
//! g_j(v)   = -int tanh(k e) phi_j
//! H_jl(v)  =  int k sech^2(k e) phi_j phi_l
//! ```
//!
//! Each subinterval only touches the two hats living on it, so `H` is
//! tridiagonal and `g_j` depends on `v_{j-1}, v_j, v_{j+1}` only.

use std::f64::consts::LN_2;

use crate::analysis::ZERO_SAMPLES;
use crate::error::{Error, Result};
use crate::model::{Partition, TargetFunction};
use crate::parallel;
use crate::quadrature::{bracketed_root, Simpson};
use crate::tridiag::Tridiagonal;

/// Dips of the error within this many `1/k` of zero get their own breakpoint.
const TRANSITION_WIDTHS: f64 = 20.0;
/// Points per subinterval where the rounding noise of `f` is probed.
const NOISE_PROBES: usize = 5;
/// Consecutive second differences taken at each probe; rounding is sporadic
/// and a single one often sees none.
const NOISE_RUN: usize = 8;
/// Relative accuracy of the Hessian entries; they only steer the Newton step.
const HESSIAN_REL_TOL: f64 = 1e-7;
/// Relative accuracy of the first pass that sets the Hessian's scale.
const HESSIAN_ROUGH_TOL: f64 = 1e-3;
/// Absolute floor on the Hessian accuracy, per unit length.
const HESSIAN_ABS_TOL: f64 = 1e-9;

/// Minimizer of a unimodal `g` on `[a, b]` by golden-section search, with its value.
fn golden_min<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    let stop = xtol.max(1e-10 * (b - a));
    while b - a > stop && c < d {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

#[inline]
fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

#[inline]
fn sech2(y: f64) -> f64 {
    let e = (-2.0 * y.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Smoothed L1 objective for a fixed target, partition and sharpness `k`.
#[derive(Debug, Clone)]
pub struct SmoothedL1<'a> {
    f: &'a TargetFunction,
    partition: &'a Partition,
    k: f64,
    quad_tol: f64,
}

impl<'a> SmoothedL1<'a> {
    /// `quad_tol` is the absolute quadrature tolerance for the cost and each
    /// gradient entry over the whole domain.
    pub fn new(f: &'a TargetFunction, partition: &'a Partition, k: f64, quad_tol: f64) -> Self {
        Self {
            f,
            partition,
            k,
            quad_tol,
        }
    }

    pub fn sharpness(&self) -> f64 {
        self.k
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        let expected = self.partition.knots().len();
        if v.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: v.len(),
            });
        }
        Ok(())
    }

    fn segment_error(&self, seg: usize, v: &[f64]) -> impl Fn(f64) -> f64 + '_ {
        let (lo, hi) = self.partition.subinterval(seg);
        let (ylo, yhi) = (v[seg - 1], v[seg]);
        let h = hi - lo;
        let f = self.f;
        move |x| {
            let t = (x - lo) / h;
            f.value(x) - ((1.0 - t) * ylo + t * yhi)
        }
    }

    /// Points splitting `[lo, hi]` where the smoothed integrands have narrow
    /// features: every sign change of `err`, plus the extremum of any dip that
    /// comes within a few `1/k` of zero between samples without crossing.
    /// Quadrature pieces then have the `sech^2` spike at an end, where the
    /// first samples see it.
    fn breakpoints<E: Fn(f64) -> f64>(&self, err: &E, lo: f64, hi: f64) -> Vec<f64> {
        let m = ZERO_SAMPLES;
        let step = (hi - lo) / m as f64;
        let xtol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let band = TRANSITION_WIDTHS / self.k;
        let mut pts = vec![lo];
        let mut x0 = lo;
        let mut g0 = err(lo);
        for j in 1..=m {
            let x1 = if j == m { hi } else { lo + step * j as f64 };
            let g1 = err(x1);
            if g0 != 0.0 && g1 != 0.0 && g0.signum() != g1.signum() {
                pts.push(bracketed_root(err, x0, x1, g0, g1, xtol));
            } else if g0 != 0.0 && g1 != 0.0 {
                // Between samples err leaves its chord by at most |f''| step^2 / 8.
                let curv = [x0, 0.5 * (x0 + x1), x1]
                    .iter()
                    .map(|&x| self.f.second_derivative(x).abs())
                    .fold(0.0, f64::max);
                let reach = 2.0 * curv * step * step / 8.0;
                if g0.abs().min(g1.abs()) <= reach + band {
                    let sign = g0.signum();
                    let (xm, em) = golden_min(|x| sign * err(x), x0, x1, xtol);
                    if em < 0.0 {
                        pts.push(bracketed_root(err, x0, xm, g0, sign * em, xtol));
                        pts.push(bracketed_root(err, xm, x1, sign * em, g1, xtol));
                    } else if em <= band && xm > x0 && xm < x1 {
                        pts.push(xm);
                    }
                }
            } else if g1 == 0.0 && j < m {
                pts.push(x1);
            }
            x0 = x1;
            g0 = g1;
        }
        pts.push(hi);
        pts.retain(|&x| x >= lo && x <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Absolute rounding noise in `f - line` on subinterval `seg`.
    ///
    /// At least a couple of ulps of the values involved; functions that lose
    /// more (a sine of a large phase, a polynomial with cancellation) show it
    /// as jitter in a second difference taken a few ulps wide, where the
    /// smooth part of `f` contributes nothing.
    fn value_noise(&self, seg: usize, v: &[f64]) -> f64 {
        let (lo, hi) = self.partition.subinterval(seg);
        let f = self.f;
        let mut scale = v[seg - 1].abs().max(v[seg].abs());
        let mut jitter = 0.0f64;
        for i in 0..NOISE_PROBES {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / NOISE_PROBES as f64;
            let d = 16.0 * f64::EPSILON * x.abs().max(hi - lo);
            let fs: Vec<f64> = (0..NOISE_RUN + 2).map(|j| f.value(x + d * j as f64)).collect();
            for w in fs.windows(3) {
                let j = (w[0] - 2.0 * w[1] + w[2]).abs();
                if j.is_finite() {
                    jitter = jitter.max(j);
                }
            }
            if fs[0].is_finite() {
                scale = scale.max(fs[0].abs());
            }
        }
        (f64::EPSILON * scale).max(jitter)
    }

    /// Rounding in `f - line` is amplified by `k` inside `tanh`; asking the
    /// quadrature for more than this on one subinterval only chases noise.
    fn noise_floor(&self, seg: usize, v: &[f64]) -> f64 {
        let (lo, hi) = self.partition.subinterval(seg);
        2.0 * self.k * self.value_noise(seg, v) * (hi - lo)
    }

    /// `[cost, g_lo, g_hi]` contributions of subinterval `seg` (1-based).
    fn segment_cost_gradient(&self, seg: usize, v: &[f64]) -> Result<[f64; 3]> {
        let (lo, hi) = self.partition.subinterval(seg);
        let h = hi - lo;
        let k = self.k;
        let err = self.segment_error(seg, v);
        let pts = self.breakpoints(&err, lo, hi);
        let seg_tol = (self.quad_tol / self.partition.segments() as f64).max(self.noise_floor(seg, v));
        let mut out = [0.0; 3];
        for w in pts.windows(2) {
            let quad = Simpson {
                abs_tol: seg_tol * (w[1] - w[0]) / h,
                rel_tol: 0.0,
                ..Simpson::default()
            };
            let part = quad.integrate_vec(
                |x| {
                    let e = k * err(x);
                    let t = (x - lo) / h;
                    let s = e.tanh();
                    [log_cosh(e) / k, -s * (1.0 - t), -s * t]
                },
                w[0],
                w[1],
            )?;
            for c in 0..3 {
                out[c] += part[c];
            }
        }
        Ok(out)
    }

    /// `[H_ll, H_lh, H_hh]` contributions of subinterval `seg`.
    fn segment_hessian(&self, seg: usize, v: &[f64]) -> Result<[f64; 3]> {
        let (lo, hi) = self.partition.subinterval(seg);
        let h = hi - lo;
        let k = self.k;
        let err = self.segment_error(seg, v);
        let pts = self.breakpoints(&err, lo, hi);
        // Rounding in `k (f - line)`.
        let dy = 2.0 * k * self.value_noise(seg, v);
        let integrand = |x: f64| {
            let t = (x - lo) / h;
            let y = k * err(x);
            let s = k * sech2(y);
            // d(k sech^2 y)/dy = -2 k sech^2 y tanh y
            let noise = 2.0 * s * y.tanh().abs() * dy + k * dy * dy;
            let basis = [(1.0 - t) * (1.0 - t), (1.0 - t) * t, t * t];
            (basis.map(|b| s * b), basis.map(|b| noise * b))
        };
        let pass = |abs_tol: f64, rel_tol: f64| -> Result<[f64; 3]> {
            let mut out = [0.0; 3];
            for w in pts.windows(2) {
                let quad = Simpson {
                    abs_tol: abs_tol * (w[1] - w[0]) / h,
                    rel_tol,
                    ..Simpson::default()
                };
                let part = quad.integrate_noisy(integrand, w[0], w[1])?;
                for c in 0..3 {
                    out[c] += part[c];
                }
            }
            Ok(out)
        };
        // Simpson's relative target applies to a coarse first estimate, which
        // a sech^2 spike at a zero of the error inflates by orders of
        // magnitude. A rough pass supplies the scale for the real one.
        let floor = HESSIAN_ABS_TOL * h;
        let rough = pass(floor, HESSIAN_ROUGH_TOL)?;
        let scale = rough[0].abs().max(rough[2].abs());
        pass(floor.max(HESSIAN_REL_TOL * scale), 0.0)
    }

    /// Smoothed cost and its gradient.
    pub fn cost_gradient(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(v)?;
        let n = self.partition.segments();
        let parts = parallel::try_map_indexed(n, |j| self.segment_cost_gradient(j + 1, v))?;
        let mut cost = 0.0;
        let mut grad = vec![0.0; n + 1];
        for (j, p) in parts.iter().enumerate() {
            cost += p[0];
            grad[j] += p[1];
            grad[j + 1] += p[2];
        }
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost);
        }
        Ok((cost, grad))
    }

    pub fn cost(&self, v: &[f64]) -> Result<f64> {
        Ok(self.cost_gradient(v)?.0)
    }

    pub fn gradient(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.cost_gradient(v)?.1)
    }

    /// Tridiagonal Hessian of the smoothed cost.
    pub fn hessian(&self, v: &[f64]) -> Result<Tridiagonal> {
        self.check(v)?;
        let n = self.partition.segments();
        let parts = parallel::try_map_indexed(n, |j| self.segment_hessian(j + 1, v))?;
        let mut diag = vec![0.0; n + 1];
        let mut off = vec![0.0; n];
        for (j, p) in parts.iter().enumerate() {
            diag[j] += p[0];
            off[j] += p[1];
            diag[j + 1] += p[2];
        }
        Ok(Tridiagonal::symmetric(diag, off))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;
    use approx::assert_relative_eq;

    #[test]
    fn smoothing_helpers() {
        assert_eq!(log_cosh(0.0), 0.0);
        assert_relative_eq!(log_cosh(1.3), 1.3f64.cosh().ln(), epsilon = 1e-15);
        assert_relative_eq!(log_cosh(-800.0), 800.0 - LN_2, epsilon = 1e-12);
        assert_relative_eq!(sech2(0.7), 1.0 / 0.7f64.cosh().powi(2), epsilon = 1e-15);
        assert_eq!(sech2(1e6), 0.0);
    }

    #[test]
    fn hessian_is_symmetric_positive() {
        let f = TargetFunction::new(Interval::new(0.0, 1.0).unwrap(), |x: f64| x.sin() * 3.0);
        let p = Partition::uniform(0.0, 1.0, 5).unwrap();
        let v: Vec<f64> = p.knots().iter().map(|&x| 3.0 * x.sin() + 0.01).collect();
        let obj = SmoothedL1::new(&f, &p, 50.0, 1e-13);
        let h = obj.hessian(&v).unwrap();
        assert_eq!(h.lower, h.upper);
        assert!(h.diag.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let f = TargetFunction::new(Interval::new(0.0, 1.0).unwrap(), |x| x);
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let obj = SmoothedL1::new(&f, &p, 10.0, 1e-12);
        assert!(obj.cost(&[0.0, 1.0]).is_err());
    }
}
