//! Uniform and error-equalized partitions.
//!
//! The error-equalized partition places knots at the preimages of `i / N`
//! under the cumulative knot distribution
//!
//! ```text
//! F(x) = int_a^x |f''(t)|^(1/3) dt / int_a^b |f''(t)|^(1/3) dt
//! ```
//!
//! so that, for large `N`, every subinterval contributes about the same L1
//! error. `F` is tabulated once on a dense grid; each knot is then found by
//! bracketing on the table and bisecting on the exact running integral.

use std::sync::Arc;

use crate::analysis::cbrt_noise;
use crate::error::{Error, Result};
use crate::model::{Interval, Partition, TargetFunction};
use crate::parallel;
use crate::quadrature::Simpson;

/// Panels of the tabulation grid for `F`.
pub const DISTRIBUTION_PANELS: usize = 4096;
/// Relative accuracy of the tabulated integrals.
pub const DISTRIBUTION_REL_TOL: f64 = 1e-10;
/// Bisection stops once the bracket is narrower than this fraction of `b - a`.
pub const INVERSION_TOL: f64 = 1e-12;
/// Smallest admissible knot spacing, as a fraction of `b - a`.
pub const MIN_SPACING: f64 = 1e-12;

/// `N` equal subintervals of `[a, b]`.
pub fn uniform_partition(a: f64, b: f64, segments: usize) -> Result<Partition> {
    Partition::uniform(a, b, segments)
}

/// Unnormalized local knot density `|f''(x)|^(1/3)`.
pub fn knot_density(f: &TargetFunction, x: f64) -> Result<f64> {
    Ok(f.checked_second_derivative(x)?.abs().cbrt())
}

/// Density value and its absolute noise bound.
type Density = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Tabulated cumulative knot distribution `F` on `[a, b]`.
#[derive(Clone)]
pub struct KnotDistribution {
    domain: Interval,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
    normalizer: f64,
    density: Density,
    quad: Simpson,
}

impl std::fmt::Debug for KnotDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnotDistribution")
            .field("domain", &self.domain)
            .field("panels", &(self.grid.len() - 1))
            .field("normalizer", &self.normalizer)
            .finish()
    }
}

impl KnotDistribution {
    /// Tabulates `F` for an arbitrary nonnegative density.
    ///
    /// Returns [`Error::LinearFunction`] when the density integrates to zero.
    pub fn from_density<D>(density: D, a: f64, b: f64) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_noisy_density(move |x| (density(x), 0.0), a, b)
    }

    /// As [`KnotDistribution::from_density`] for a density returned with an
    /// absolute noise bound, such as one built from a numeric `f''`.
    pub fn from_noisy_density<D>(density: D, a: f64, b: f64) -> Result<Self>
    where
        D: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    {
        let domain = Interval::new(a, b)?;
        let density: Density = Arc::new(density);
        let n = DISTRIBUTION_PANELS;
        let step = (b - a) / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| if i == n { b } else { a + step * i as f64 }).collect();

        // Coarse composite Simpson sum sets the absolute scale for the adaptive pass.
        let checked = |x: f64| -> Result<f64> {
            let d = density(x).0;
            if d.is_finite() && d >= 0.0 {
                Ok(d)
            } else {
                Err(Error::NonFinite {
                    what: "knot density",
                    x,
                })
            }
        };
        let coarse: f64 = parallel::try_map_indexed(n, |i| -> Result<f64> {
            let (lo, hi) = (grid[i], grid[i + 1]);
            Ok((hi - lo) / 6.0 * (checked(lo)? + 4.0 * checked(0.5 * (lo + hi))? + checked(hi)?))
        })?
        .into_iter()
        .sum();

        let abs_tol = (DISTRIBUTION_REL_TOL * 0.1 * coarse).max(f64::MIN_POSITIVE);
        let quad = Simpson {
            abs_tol: abs_tol / n as f64,
            rel_tol: 0.0,
            panels: 1,
            max_depth: 60,
            min_depth: 1,
        };
        let pieces = parallel::try_map_indexed(n, |i| {
            let d = &density;
            quad.integrate_noisy(
                |x| {
                    let (v, n) = d(x);
                    ([v], [n])
                },
                grid[i],
                grid[i + 1],
            )
            .map(|[v]| v)
        })?;

        let mut cumulative = Vec::with_capacity(n + 1);
        let mut running = 0.0;
        cumulative.push(0.0);
        for p in &pieces {
            running += p;
            cumulative.push(running);
        }
        let normalizer = running;
        if !(normalizer > 0.0) {
            return Err(Error::LinearFunction { lo: a, hi: b });
        }
        cumulative.iter_mut().for_each(|c| *c /= normalizer);
        cumulative[n] = 1.0;

        Ok(Self {
            domain,
            grid,
            cumulative,
            normalizer,
            density,
            quad: Simpson {
                abs_tol: 1e-3 * abs_tol / n as f64,
                ..quad
            },
        })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `int_a^b density`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Tabulated `F` at the grid abscissae; starts at 0 and ends at 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `F(x)` for `x` in the domain.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.domain.check(x)?;
        let n = self.grid.len() - 1;
        let step = self.domain.width() / n as f64;
        let mut j = (((x - self.domain.lo()) / step).floor() as usize).min(n - 1);
        while j > 0 && self.grid[j] > x {
            j -= 1;
        }
        while j + 1 < n && self.grid[j + 1] <= x {
            j += 1;
        }
        self.cdf_in_panel(j, x)
    }

    fn cdf_in_panel(&self, j: usize, x: f64) -> Result<f64> {
        let d = &self.density;
        let [partial] = self.quad.integrate_noisy(
            |t| {
                let (v, n) = d(t);
                ([v], [n])
            },
            self.grid[j],
            x,
        )?;
        Ok(self.cumulative[j] + partial / self.normalizer)
    }

    /// Smallest `x` with `F(x) >= t` (the left edge when `t` hits a plateau of `F`).
    pub fn quantile(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.domain.lo(), self.domain.hi());
        if t <= 0.0 {
            return Ok(a);
        }
        if t >= 1.0 {
            return Ok(b);
        }
        // First grid point whose tabulated F reaches t; the root lies in the panel to its left.
        let m = self.cumulative.partition_point(|&c| c < t).max(1);
        let j = m - 1;
        let mut lo = self.grid[j];
        let mut hi = self.grid[m];
        let xtol = INVERSION_TOL * (b - a);
        while hi - lo > xtol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf_in_panel(j, mid)? >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Cumulative knot distribution for `f` on `[a, b]`.
pub fn build_distribution(f: &TargetFunction, a: f64, b: f64) -> Result<KnotDistribution> {
    let g = f.clone();
    KnotDistribution::from_noisy_density(
        move |x| {
            let (v, noise) = g.second_derivative_with_noise(x);
            let v = v.abs();
            (v.cbrt(), cbrt_noise(v, noise))
        },
        a,
        b,
    )
}

/// Error-equalized partition of `[a, b]` into `N` subintervals for `f`.
pub fn optimized_partition(f: &TargetFunction, a: f64, b: f64, segments: usize) -> Result<Partition> {
    let dist = build_distribution(f, a, b)?;
    partition_from_distribution(&dist, segments)
}

/// Knots at the preimages of `i / N` under `dist`.
pub fn partition_from_distribution(dist: &KnotDistribution, segments: usize) -> Result<Partition> {
    if segments == 0 {
        return Err(Error::ZeroSegments);
    }
    let (a, b) = (dist.domain().lo(), dist.domain().hi());
    let n = segments;
    let interior = parallel::try_map_indexed(n.saturating_sub(1), |i| dist.quantile((i + 1) as f64 / n as f64))?;

    let mut knots = Vec::with_capacity(n + 1);
    knots.push(a);
    knots.extend(interior);
    knots.push(b);

    enforce_min_spacing(&mut knots, MIN_SPACING * (b - a));
    Partition::new(knots)
}

/// Pushes interior knots right so consecutive knots are at least `gap` apart.
fn enforce_min_spacing(knots: &mut [f64], gap: f64) {
    let n = knots.len() - 1;
    for i in 1..n {
        if knots[i] - knots[i - 1] < gap {
            knots[i] = knots[i - 1] + gap;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn uniform_examples() {
        assert_eq!(
            uniform_partition(0.0, 4.0, 4).unwrap().knots(),
            &[0.0, 1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(uniform_partition(0.0, 1.0, 1).unwrap().knots(), &[0.0, 1.0]);
        let p = uniform_partition(-2.0, 2.0, 8).unwrap();
        assert_eq!(p.knots().len(), 9);
        assert!(p.widths().all(|h| h == 0.5));
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(knot_density(&square(), 0.3).unwrap(), 2f64.cbrt(), epsilon = 1e-15);
        assert_relative_eq!(
            knot_density(&cube(), 1.0).unwrap(),
            1.817_120_592_832_139_6,
            epsilon = 1e-15
        );
        let line = TargetFunction::with_second_derivative(unit(), |x| 3.0 * x, |_| 0.0);
        assert_eq!(knot_density(&line, 0.5).unwrap(), 0.0);
        let bad = TargetFunction::with_second_derivative(unit(), |x| x, |_| f64::NAN);
        assert!(knot_density(&bad, 0.5).is_err());
    }

    #[test]
    fn linear_function_is_signalled() {
        let line = TargetFunction::with_second_derivative(unit(), |x| 3.0 * x + 1.0, |_| 0.0);
        assert_eq!(
            build_distribution(&line, 0.0, 1.0).unwrap_err(),
            Error::LinearFunction { lo: 0.0, hi: 1.0 }
        );
        assert!(optimized_partition(&line, 0.0, 1.0, 4).is_err());
        let numeric = TargetFunction::new(unit(), |x| 3.0 * x + 1.0);
        assert!(matches!(
            build_distribution(&numeric, 0.0, 1.0),
            Err(Error::LinearFunction { .. })
        ));
    }

    #[test]
    fn constant_curvature_gives_linear_cdf() {
        let d = build_distribution(&square(), 0.0, 1.0).unwrap();
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.999, 1.0] {
            assert_relative_eq!(d.cdf(x).unwrap(), x, epsilon = 1e-12);
        }
        assert_eq!(d.cumulative()[0], 0.0);
        assert_eq!(*d.cumulative().last().unwrap(), 1.0);
    }

    #[test]
    fn cubic_cdf_matches_closed_form() {
        let d = build_distribution(&cube(), 0.0, 1.0).unwrap();
        assert_relative_eq!(d.normalizer(), 6f64.cbrt() * 0.75, epsilon = 1e-10);
        for &x in &[0.01, 0.2, 0.5, 0.8] {
            assert_relative_eq!(d.cdf(x).unwrap(), x.powf(4.0 / 3.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_partition_is_uniform() {
        let p = optimized_partition(&square(), 0.0, 1.0, 4).unwrap();
        for (k, e) in p.knots().iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((k - e).abs() < 1e-11, "{k} vs {e}");
        }
    }

    #[test]
    fn cubic_partition_inverts_closed_form() {
        let p = optimized_partition(&cube(), 0.0, 1.0, 4).unwrap();
        let expected = [
            0.0,
            0.353_553_390_593_273_8,
            0.594_603_557_501_360_5,
            0.805_927_448_867_656_4,
            1.0,
        ];
        for (k, e) in p.knots().iter().zip(expected) {
            assert!((k - e).abs() < 1e-10, "{k} vs {e}");
        }
    }

    #[test]
    fn plateau_takes_left_edge() {
        // Density vanishes on [0.25, 0.75]; F = 1/2 on that whole stretch.
        let dens = |x: f64| if (0.25..=0.75).contains(&x) { 0.0 } else { 1.0 };
        let d = KnotDistribution::from_density(dens, 0.0, 1.0).unwrap();
        let x = d.quantile(0.5).unwrap();
        assert!((x - 0.25).abs() < 1e-9, "{x}");
        let p = partition_from_distribution(&d, 2).unwrap();
        assert!((p.knots()[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn spacing_guard_keeps_knots_increasing() {
        let mut knots = vec![0.0, 0.5, 0.5, 0.5, 1.0];
        enforce_min_spacing(&mut knots, 1e-12);
        assert!(knots.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(knots[1], 0.5);
        assert_eq!(knots[3], 0.5 + 2e-12);
    }

    #[test]
    fn cdf_rejects_out_of_domain() {
        let d = build_distribution(&square(), 0.0, 1.0).unwrap();
        assert!(d.cdf(1.5).is_err());
    }
}
