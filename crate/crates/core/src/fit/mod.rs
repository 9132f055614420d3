//! Interpolant, best L2 and best L1 polygonal approximants on a fixed partition.

mod segment;
mod smoothed;

pub use segment::{best_l1_segment, SegmentFit};
pub use smoothed::SmoothedL1;

use crate::analysis::l1_distance;
use crate::error::{Error, Result};
use crate::model::{from_samples, Partition, PolygonalFunction, TargetFunction};
use crate::parallel;
use crate::quadrature::Simpson;
use crate::tridiag::Tridiagonal;

/// Controls for [`best_l1_fit`].
///
/// Sharpness values are multipliers of `N / (b - a)`, so the width of the
/// smoothed sign tracks the subinterval size. The fit runs one Newton stage
/// for every schedule entry below `smoothing_k` and a final stage at
/// `smoothing_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub smoothing_k: f64,
    pub k_schedule: Vec<f64>,
    pub param_tol: f64,
    pub cost_tol: f64,
    pub max_newton_iters: usize,
    pub quadrature_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            smoothing_k: 1e5,
            k_schedule: vec![1e2, 1e3, 1e4, 1e5],
            param_tol: 1e-16,
            cost_tol: 1e-10,
            max_newton_iters: 50,
            quadrature_tol: 1e-12,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.smoothing_k) {
            return Err(Error::InvalidOptions("smoothing_k must be positive"));
        }
        if !self.k_schedule.iter().all(|&k| positive(k)) {
            return Err(Error::InvalidOptions("k_schedule entries must be positive"));
        }
        if self.k_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOptions("k_schedule must be strictly increasing"));
        }
        if !positive(self.param_tol) || !positive(self.cost_tol) || !positive(self.quadrature_tol) {
            return Err(Error::InvalidOptions("tolerances must be positive"));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidOptions("max_newton_iters must be at least 1"));
        }
        Ok(())
    }

    /// Sharpness multipliers actually used, in order.
    pub fn stages(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .k_schedule
            .iter()
            .copied()
            .filter(|&k| k < self.smoothing_k)
            .collect();
        s.push(self.smoothing_k);
        s
    }
}

/// Diagnostics from [`best_l1_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Newton iterations over all stages.
    pub iterations: usize,
    /// True (unsmoothed) L1 distance of the result.
    pub final_cost: f64,
    /// Infinity norm of the smoothed gradient at the result, last stage.
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// Cost-and-gradient evaluations over all stages.
    pub function_evals: usize,
    pub stage_evals: Vec<usize>,
    /// Absolute sharpness of each stage.
    pub stage_k: Vec<f64>,
}

/// The polygonal interpolant: ordinates are the samples of `f` at the knots.
pub fn interpolant(f: &TargetFunction, p: &Partition) -> Result<PolygonalFunction> {
    from_samples(p, f)
}

/// Orthogonal projection of `f` onto the hat basis of `p`.
pub fn l2_projection(f: &TargetFunction, p: &Partition) -> Result<PolygonalFunction> {
    let n = p.segments();
    let loads = parallel::try_map_indexed(n, |j| {
        let (lo, hi) = p.subinterval(j + 1);
        let h = hi - lo;
        let quad = Simpson::with_tolerances(1e-15 * h, 1e-13);
        quad.integrate_vec(
            |x| {
                let t = (x - lo) / h;
                let fx = f.value(x);
                [fx * (1.0 - t), fx * t]
            },
            lo,
            hi,
        )
    })?;
    let mut rhs = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n];
    for (j, (load, h)) in loads.iter().zip(p.widths()).enumerate() {
        rhs[j] += load[0];
        rhs[j + 1] += load[1];
        diag[j] += h / 3.0;
        diag[j + 1] += h / 3.0;
        off[j] = h / 6.0;
    }
    let gram = Tridiagonal::symmetric(diag, off);
    let c = gram.solve(&rhs)?;
    PolygonalFunction::new(p.clone(), c)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct StageOutcome {
    iterations: usize,
    evals: usize,
    gradient_norm: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Damped Newton on one smoothed cost, in place.
fn newton_stage(obj: &SmoothedL1<'_>, v: &mut Vec<f64>, opts: &FitOptions) -> Result<StageOutcome> {
    // Cost values carry quadrature error of about this size.
    let noise = 4.0 * opts.quadrature_tol;
    let (mut cost, mut grad) = obj.cost_gradient(v)?;
    let mut evals = 1;
    let mut iterations = 0;
    while iterations < opts.max_newton_iters {
        if inf_norm(&grad) <= opts.cost_tol {
            break;
        }
        iterations += 1;
        let hess = obj.hessian(v)?;
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let scale = hess.norm_inf().max(f64::MIN_POSITIVE);
        let mut lambda = 1e-12 * scale;
        let step = loop {
            match hess.shifted(lambda).solve_with_floor(&neg, 0.0) {
                Ok(d) if d.iter().all(|x| x.is_finite()) && dot(&d, &grad) < 0.0 => break Some(d),
                _ => {}
            }
            lambda *= 2.0;
            if lambda > 1e12 * scale {
                break None;
            }
        };
        let Some(d) = step else { break };
        let slope = dot(&d, &grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = v.iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
            let (c, g) = obj.cost_gradient(&trial)?;
            evals += 1;
            // Below the cost's resolution only a smaller gradient counts as progress;
            // accepting noise-level increases alone lets the iteration cycle.
            let resolved = c <= cost + ARMIJO * t * slope;
            let within_noise = c <= cost + noise && inf_norm(&g) < inf_norm(&grad);
            if resolved || within_noise {
                accepted = Some((trial, c, g));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, c, g)) = accepted else { break };
        let moved = t * inf_norm(&d);
        let decrease = cost - c;
        *v = trial;
        cost = c;
        grad = g;
        if moved <= opts.param_tol * (1.0 + inf_norm(v)) {
            break;
        }
        // A non-improving step that still leaves a large gradient means the
        // cost is below quadrature resolution; further steps only chase noise.
        if decrease.abs() <= opts.cost_tol * 1e-6 && inf_norm(&grad) > opts.cost_tol && decrease <= 0.0 {
            break;
        }
    }
    Ok(StageOutcome {
        iterations,
        evals,
        gradient_norm: inf_norm(&grad),
    })
}

/// Best L1 polygonal approximation of `f` on `p`.
///
/// Starts from the L2 projection and minimizes the smoothed cost for an
/// increasing sequence of sharpness values, each stage warm-started from the
/// last. `converged` reports whether the last stage reached a smoothed
/// gradient with infinity norm at most `cost_tol`. When it did not, the best
/// iterate found is still returned.
pub fn best_l1_fit(f: &TargetFunction, p: &Partition, opts: &FitOptions) -> Result<(PolygonalFunction, FitReport)> {
    opts.validate()?;
    let (a, b) = (p.domain().lo(), p.domain().hi());
    let density = p.segments() as f64 / (b - a);
    let start = l2_projection(f, p)?;
    let (_, mut v) = start.into_parts();
    let mut report = FitReport {
        iterations: 0,
        final_cost: 0.0,
        final_gradient_norm: f64::INFINITY,
        converged: false,
        function_evals: 0,
        stage_evals: Vec::new(),
        stage_k: Vec::new(),
    };
    for m in opts.stages() {
        let k = m * density;
        let obj = SmoothedL1::new(f, p, k, opts.quadrature_tol);
        let out = newton_stage(&obj, &mut v, opts)?;
        report.iterations += out.iterations;
        report.function_evals += out.evals;
        report.stage_evals.push(out.evals);
        report.stage_k.push(k);
        report.final_gradient_norm = out.gradient_norm;
    }
    report.converged = report.final_gradient_norm <= opts.cost_tol;
    let fit = PolygonalFunction::new(p.clone(), v)?;
    report.final_cost = l1_distance(f, &fit)?;
    if !report.final_cost.is_finite() {
        return Err(Error::NonFiniteCost);
    }
    Ok((fit, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::gaussian;
    use crate::model::Interval;
    use approx::assert_relative_eq;

    fn square() -> TargetFunction {
        TargetFunction::with_second_derivative(Interval::new(0.0, 1.0).unwrap(), |x| x * x, |_| 2.0)
    }

    #[test]
    fn projection_of_square_single_segment() {
        let p = Partition::uniform(0.0, 1.0, 1).unwrap();
        let g = l2_projection(&square(), &p).unwrap();
        assert_relative_eq!(g.ordinates()[0], -1.0 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(g.ordinates()[1], 5.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn projection_reproduces_polygonal_and_constants() {
        let p = Partition::new(vec![0.0, 0.3, 0.45, 1.0, 2.0]).unwrap();
        let g = PolygonalFunction::new(p.clone(), vec![1.0, -2.0, 0.5, 0.5, 3.0]).unwrap();
        let c = l2_projection(&g.to_target(), &p).unwrap();
        for (x, y) in c.ordinates().iter().zip(g.ordinates()) {
            assert!((x - y).abs() < 1e-10);
        }
        let k = TargetFunction::new(Interval::new(0.0, 2.0).unwrap(), |_| 4.25);
        let c = l2_projection(&k, &p).unwrap();
        assert!(c.ordinates().iter().all(|&y| (y - 4.25).abs() < 1e-12));
    }

    #[test]
    fn best_l1_square_single_segment() {
        let p = Partition::uniform(0.0, 1.0, 1).unwrap();
        let (g, rep) = best_l1_fit(&square(), &p, &FitOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert_relative_eq!(g.ordinates()[0], -3.0 / 16.0, epsilon = 1e-8);
        assert_relative_eq!(g.ordinates()[1], 13.0 / 16.0, epsilon = 1e-8);
        assert_relative_eq!(rep.final_cost, 1.0 / 16.0, epsilon = 1e-9);
    }

    #[test]
    fn best_l1_of_polygonal_is_itself() {
        let p = Partition::new(vec![0.0, 0.5, 0.7, 1.0]).unwrap();
        let g = PolygonalFunction::new(p.clone(), vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        let (fit, rep) = best_l1_fit(&g.to_target(), &p, &FitOptions::default()).unwrap();
        for (x, y) in fit.ordinates().iter().zip(g.ordinates()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(rep.final_cost < 1e-10);
    }

    #[test]
    fn best_l1_beats_interpolant_on_gaussian() {
        let f = gaussian(0.0, 4.0).unwrap();
        let p = Partition::uniform(0.0, 4.0, 31).unwrap();
        let (fit, rep) = best_l1_fit(&f, &p, &FitOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        let e_int = l1_distance(&f, &interpolant(&f, &p).unwrap()).unwrap();
        let e_l2 = l1_distance(&f, &l2_projection(&f, &p).unwrap()).unwrap();
        assert!(rep.final_cost < e_l2 && e_l2 < e_int);
        assert_relative_eq!(l1_distance(&f, &fit).unwrap(), rep.final_cost);
    }

    #[test]
    fn options_validation() {
        let mut o = FitOptions::default();
        assert!(o.validate().is_ok());
        o.k_schedule = vec![1e3, 1e2];
        assert!(o.validate().is_err());
        o = FitOptions {
            cost_tol: 0.0,
            ..FitOptions::default()
        };
        assert!(o.validate().is_err());
        o = FitOptions {
            smoothing_k: 5e3,
            ..FitOptions::default()
        };
        assert_eq!(o.stages(), vec![1e2, 1e3, 5e3]);
    }
}
