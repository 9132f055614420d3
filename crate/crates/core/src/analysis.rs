//! L1 distances, asymptotic error bounds, budget planning and partition gain.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::model::{Interval, PolygonalFunction, TargetFunction};
use crate::parallel;
use crate::quadrature::{sign_changes, Simpson};

/// Samples per segment used to locate sign changes of `f - line`.
pub const ZERO_SAMPLES: usize = 16;
/// Absolute part of the L1 measurement tolerance, over the whole domain.
pub const L1_ABS_TOL: f64 = 1e-12;
/// Relative part of the L1 measurement tolerance (kept an order below the advertised 1e-9).
pub const L1_REL_TOL: f64 = 1e-10;
/// Initial panels for the curvature integrals in the bounds.
pub const CURVATURE_PANELS: usize = 4096;

/// Abscissae splitting `[lo, hi]` where `f - line` changes sign, endpoints included.
pub(crate) fn segment_breakpoints<E>(err: E, lo: f64, hi: f64) -> Vec<f64>
where
    E: Fn(f64) -> f64,
{
    let mut pts = Vec::with_capacity(4);
    pts.push(lo);
    pts.extend(sign_changes(err, lo, hi, ZERO_SAMPLES));
    pts.push(hi);
    pts
}

/// `int_lo^hi |f(x) - line(x)| dx` where the line joins `(lo, y_lo)` and `(hi, y_hi)`.
pub fn segment_l1_error(f: &TargetFunction, lo: f64, hi: f64, y_lo: f64, y_hi: f64, quad: &Simpson) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    let h = hi - lo;
    let err = |x: f64| {
        let t = (x - lo) / h;
        f.value(x) - ((1.0 - t) * y_lo + t * y_hi)
    };
    let pts = segment_breakpoints(err, lo, hi);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let piece_quad = Simpson {
            abs_tol: quad.abs_tol * (w[1] - w[0]) / h,
            ..*quad
        };
        total += piece_quad.integrate(|x| err(x).abs(), w[0], w[1])?;
    }
    Ok(total)
}

fn measurement_quad(segments: usize) -> Simpson {
    Simpson::with_tolerances(L1_ABS_TOL / segments as f64, L1_REL_TOL)
}

/// L1 distance of `f` from `g` on each subinterval of `g`'s partition.
pub fn per_interval_errors(f: &TargetFunction, g: &PolygonalFunction) -> Result<Vec<f64>> {
    let p = g.partition();
    let n = p.segments();
    let quad = measurement_quad(n);
    let v = g.ordinates();
    parallel::try_map_indexed(n, |j| {
        let (lo, hi) = p.subinterval(j + 1);
        segment_l1_error(f, lo, hi, v[j], v[j + 1], &quad)
    })
}

/// `||f - g||_{L1}` over the domain of `g`.
pub fn l1_distance(f: &TargetFunction, g: &PolygonalFunction) -> Result<f64> {
    Ok(per_interval_errors(f, g)?.iter().sum())
}

/// Which approximant and partition a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    UniformInterpolant,
    OptimizedInterpolant,
    UniformBestL1,
    OptimizedBestL1,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::UniformInterpolant,
        BoundKind::OptimizedInterpolant,
        BoundKind::UniformBestL1,
        BoundKind::OptimizedBestL1,
    ];

    pub fn is_best_l1(self) -> bool {
        matches!(self, BoundKind::UniformBestL1 | BoundKind::OptimizedBestL1)
    }

    pub fn is_optimized(self) -> bool {
        matches!(self, BoundKind::OptimizedInterpolant | BoundKind::OptimizedBestL1)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::UniformInterpolant => "uniform_interpolant",
            BoundKind::OptimizedInterpolant => "optimized_interpolant",
            BoundKind::UniformBestL1 => "uniform_best_l1",
            BoundKind::OptimizedBestL1 => "optimized_best_l1",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ratio between best-L1 and interpolant errors on a short segment with constant `f''`.
pub const BEST_L1_FACTOR: f64 = 3.0 / 8.0;

/// Approximate L1 error bound for `N` segments on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    pub value: f64,
    pub kind: BoundKind,
    pub segments: usize,
    pub interval: Interval,
}

/// Noise in `v^(1/3)` when `v >= 0` carries absolute noise `noise`.
pub(crate) fn cbrt_noise(v: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        0.0
    } else if v == 0.0 {
        noise.cbrt()
    } else {
        noise.cbrt().min(noise / (3.0 * v.powf(2.0 / 3.0)))
    }
}

/// `int_a^b |f''|` and `int_a^b |f''|^(1/3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureIntegrals {
    pub abs_second: f64,
    pub cbrt_second: f64,
    /// Every sample taken by the quadrature had the same `|s|`.
    pub constant: bool,
}

impl CurvatureIntegrals {
    /// Integrals of `s(x)` and `s(x)^(1/3)` for a nonnegative curvature measure `s`.
    pub fn of<S>(s: S, a: f64, b: f64) -> Result<Self>
    where
        S: Fn(f64) -> f64 + Sync,
    {
        Self::of_noisy(|x| (s(x), 0.0), a, b)
    }

    /// As [`CurvatureIntegrals::of`] for a measure returned with an absolute noise bound.
    pub fn of_noisy<S>(s: S, a: f64, b: f64) -> Result<Self>
    where
        S: Fn(f64) -> (f64, f64) + Sync,
    {
        Interval::new(a, b)?;
        let n = CURVATURE_PANELS;
        let step = (b - a) / n as f64;
        let quad = Simpson {
            abs_tol: 1e-300,
            rel_tol: 1e-11,
            panels: 1,
            max_depth: 60,
            min_depth: 1,
        };
        let reference = s(a).0.abs();
        let varied = AtomicBool::new(false);
        let parts = parallel::try_map_indexed(n, |i| {
            let lo = a + step * i as f64;
            let hi = if i + 1 == n { b } else { a + step * (i + 1) as f64 };
            quad.integrate_noisy(
                |x| {
                    let (v, noise) = s(x);
                    let v = v.abs();
                    if v != reference {
                        varied.store(true, Ordering::Relaxed);
                    }
                    ([v, v.cbrt()], [noise, cbrt_noise(v, noise)])
                },
                lo,
                hi,
            )
        })?;
        let (abs_second, cbrt_second) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[0], acc.1 + p[1]));
        Ok(Self {
            abs_second,
            cbrt_second,
            constant: !varied.into_inner(),
        })
    }

    pub fn for_target(f: &TargetFunction, a: f64, b: f64) -> Result<Self> {
        let probe = f
            .checked_second_derivative(a)
            .and_then(|_| f.checked_second_derivative(b));
        probe?;
        Self::of_noisy(|x| f.second_derivative_with_noise(x), a, b).map_err(|e| match e {
            Error::NonFinite { x, .. } => Error::NonFinite { what: "f''", x },
            other => other,
        })
    }

    /// `(b - a)^2 int|f''| / (12 N^2)`.
    pub fn uniform_interpolant(&self, a: f64, b: f64, segments: usize) -> f64 {
        let n = segments as f64;
        (b - a).powi(2) * self.abs_second / (12.0 * n * n)
    }

    /// `(int |f''|^(1/3))^3 / (12 N^2)`.
    pub fn optimized_interpolant(&self, segments: usize) -> f64 {
        let n = segments as f64;
        self.cbrt_second.powi(3) / (12.0 * n * n)
    }

    pub fn bound(&self, kind: BoundKind, a: f64, b: f64, segments: usize) -> f64 {
        let base = if kind.is_optimized() {
            self.optimized_interpolant(segments)
        } else {
            self.uniform_interpolant(a, b, segments)
        };
        if kind.is_best_l1() {
            BEST_L1_FACTOR * base
        } else {
            base
        }
    }

    /// Real-valued `N` at which the bound of `kind` equals `tol`.
    pub fn segments_for(&self, kind: BoundKind, a: f64, b: f64, tol: f64) -> f64 {
        let interp = if kind.is_optimized() {
            (self.cbrt_second.powi(3) / (12.0 * tol)).sqrt()
        } else {
            ((b - a).powi(2) * self.abs_second / (12.0 * tol)).sqrt()
        };
        if kind.is_best_l1() {
            interp * BEST_L1_FACTOR.sqrt()
        } else {
            interp
        }
    }

    /// Uniform bound over optimized bound; independent of `N`.
    ///
    /// Exactly 1 for constant `|f''|`, where both bounds coincide.
    pub fn gain(&self, a: f64, b: f64) -> Result<f64> {
        let den = self.cbrt_second.powi(3);
        if !(den > 0.0) {
            return Err(Error::LinearFunction { lo: a, hi: b });
        }
        if self.constant {
            return Ok(1.0);
        }
        Ok((b - a).powi(2) * self.abs_second / den)
    }
}

fn check_segments(segments: usize) -> Result<()> {
    if segments == 0 {
        Err(Error::ZeroSegments)
    } else {
        Ok(())
    }
}

/// Bound of the given kind for `f` with `N` segments on `[a, b]`.
pub fn bound(f: &TargetFunction, a: f64, b: f64, segments: usize, kind: BoundKind) -> Result<BoundEstimate> {
    check_segments(segments)?;
    let interval = Interval::new(a, b)?;
    let ci = CurvatureIntegrals::for_target(f, a, b)?;
    Ok(BoundEstimate {
        value: ci.bound(kind, a, b, segments),
        kind,
        segments,
        interval,
    })
}

/// `((b - a)^2 / (12 N^2)) int_a^b |f''|`.
pub fn bound_uniform_interpolant(f: &TargetFunction, a: f64, b: f64, segments: usize) -> Result<BoundEstimate> {
    bound(f, a, b, segments, BoundKind::UniformInterpolant)
}

/// `(1 / (12 N^2)) (int_a^b |f''|^(1/3))^3`.
pub fn bound_optimized_interpolant(f: &TargetFunction, a: f64, b: f64, segments: usize) -> Result<BoundEstimate> {
    bound(f, a, b, segments, BoundKind::OptimizedInterpolant)
}

/// Smallest `N` whose bound of `kind` does not exceed `tol`.
///
/// The real-valued `N` is computed from the bound formula and rounded up;
/// best-L1 kinds scale the interpolant value by `sqrt(3/8)` before rounding.
/// A linear `f` needs a single segment.
pub fn min_segments_for_tolerance(f: &TargetFunction, a: f64, b: f64, tol: f64, kind: BoundKind) -> Result<usize> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    Interval::new(a, b)?;
    let ci = CurvatureIntegrals::for_target(f, a, b)?;
    Ok(ceil_segments(ci.segments_for(kind, a, b, tol)))
}

/// `ceil(x)`, at least 1, ignoring an excess over an integer that is pure rounding noise.
pub(crate) fn ceil_segments(x: f64) -> usize {
    if !(x > 0.0) {
        return 1;
    }
    let mut n = x.ceil();
    if n > 1.0 && (n - 1.0) >= x * (1.0 - 1e-12) {
        n -= 1.0;
    }
    (n as usize).max(1)
}

/// Estimated gain of the error-equalized partition over the uniform one.
pub fn partition_gain(f: &TargetFunction, a: f64, b: f64) -> Result<f64> {
    CurvatureIntegrals::for_target(f, a, b)?.gain(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{from_samples, Partition};
    use approx::assert_relative_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn square() -> TargetFunction {
        TargetFunction::with_second_derivative(unit(), |x| x * x, |_| 2.0)
    }

    fn cube() -> TargetFunction {
        TargetFunction::with_second_derivative(unit(), |x| x * x * x, |x| 6.0 * x)
    }

    fn line() -> TargetFunction {
        TargetFunction::with_second_derivative(unit(), |x| 2.0 * x - 1.0, |_| 0.0)
    }

    #[test]
    fn interpolant_of_square() {
        let p = Partition::uniform(0.0, 1.0, 1).unwrap();
        let pi = from_samples(&p, &square()).unwrap();
        assert_relative_eq!(l1_distance(&square(), &pi).unwrap(), 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_line_against_square() {
        let p = Partition::uniform(0.0, 1.0, 1).unwrap();
        let g = PolygonalFunction::new(p, vec![-3.0 / 16.0, 13.0 / 16.0]).unwrap();
        assert_relative_eq!(l1_distance(&square(), &g).unwrap(), 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn polygonal_target_has_zero_distance() {
        let p = Partition::new(vec![0.0, 0.3, 0.35, 1.0]).unwrap();
        let g = PolygonalFunction::new(p.clone(), vec![1.0, -2.0, 0.5, 0.25]).unwrap();
        let d = l1_distance(&g.to_target(), &g).unwrap();
        assert!(d.abs() <= 1e-12);
    }

    #[test]
    fn per_interval_sum_and_symmetry() {
        let p = Partition::uniform(0.0, 1.0, 8).unwrap();
        let pi = from_samples(&p, &square()).unwrap();
        let e = per_interval_errors(&square(), &pi).unwrap();
        let first = e[0];
        for v in &e {
            assert_relative_eq!(*v, first, max_relative = 1e-9);
        }
        let total: f64 = e.iter().sum();
        assert_relative_eq!(total, l1_distance(&square(), &pi).unwrap(), epsilon = 1e-10);
        assert_relative_eq!(total, 2.0 / (12.0 * 64.0), epsilon = 1e-13);
    }

    #[test]
    fn bound_examples_for_square() {
        let u = bound_uniform_interpolant(&square(), 0.0, 1.0, 1).unwrap();
        let o = bound_optimized_interpolant(&square(), 0.0, 1.0, 1).unwrap();
        assert_relative_eq!(u.value, 1.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(o.value, 1.0 / 6.0, epsilon = 1e-12);
        let l = bound(&square(), 0.0, 1.0, 1, BoundKind::UniformBestL1).unwrap();
        assert_relative_eq!(l.value, 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn bounds_vanish_for_linear() {
        for kind in BoundKind::ALL {
            assert_eq!(bound(&line(), 0.0, 1.0, 7, kind).unwrap().value, 0.0);
            assert_eq!(min_segments_for_tolerance(&line(), 0.0, 1.0, 1e-9, kind).unwrap(), 1);
        }
        assert!(partition_gain(&line(), 0.0, 1.0).is_err());
    }

    #[test]
    fn planner_for_square_hits_one() {
        let n = min_segments_for_tolerance(&square(), 0.0, 1.0, 1.0 / 6.0, BoundKind::UniformInterpolant).unwrap();
        assert_eq!(n, 1);
        let n2 =
            min_segments_for_tolerance(&square(), 0.0, 1.0, 1.0 / 24.0 * 0.99, BoundKind::UniformInterpolant).unwrap();
        assert_eq!(n2, 3);
    }

    #[test]
    fn planner_rejects_bad_tolerance() {
        assert!(min_segments_for_tolerance(&square(), 0.0, 1.0, 0.0, BoundKind::UniformInterpolant).is_err());
        assert!(min_segments_for_tolerance(&square(), 0.0, 1.0, f64::NAN, BoundKind::UniformInterpolant).is_err());
    }

    #[test]
    fn gain_examples() {
        assert_eq!(partition_gain(&square(), 0.0, 1.0).unwrap(), 1.0);
        // int 6x = 3, int (6x)^(1/3) = 6^(1/3) * 3/4
        let expected = 3.0 / (6.0 * 0.75f64.powi(3));
        assert_relative_eq!(partition_gain(&cube(), 0.0, 1.0).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn non_finite_curvature_is_an_error() {
        let bad = TargetFunction::with_second_derivative(unit(), |x| x, |x| 1.0 / (x - 0.5));
        assert!(matches!(
            bound_uniform_interpolant(&bad, 0.0, 1.0, 3),
            Err(Error::NonFinite { what: "f''", .. })
        ));
    }

    #[test]
    fn ceil_ignores_rounding_noise() {
        assert_eq!(ceil_segments(1.0 + 1e-15), 1);
        assert_eq!(ceil_segments(253.878), 254);
        assert_eq!(ceil_segments(0.2), 1);
        assert_eq!(ceil_segments(2.0), 2);
    }
}
