//! Domain types: intervals, partitions, polygonal functions and target functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Relative tolerance (in units of `b - a`) under which a partition counts as uniform.
pub const UNIFORM_TOLERANCE: f64 = 1e-12;

/// Ordered knots `x_0 < x_1 < ... < x_N` splitting `[x_0, x_N]` into `N` subintervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    knots: Vec<f64>,
    uniform: bool,
}

impl Partition {
    /// Builds a partition from explicit knots; needs at least two strictly increasing finite values.
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::ZeroSegments);
        }
        if let Some(index) = knots.iter().position(|k| !k.is_finite()) {
            return Err(Error::NotStrictlyIncreasing { index });
        }
        if let Some(i) = knots.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::NotStrictlyIncreasing { index: i + 1 });
        }
        let uniform = detect_uniform(&knots);
        Ok(Self { knots, uniform })
    }

    /// `N` equal subintervals of `[a, b]`: `x_i = a + i (b - a) / N`.
    pub fn uniform(a: f64, b: f64, segments: usize) -> Result<Self> {
        let domain = Interval::new(a, b)?;
        if segments == 0 {
            return Err(Error::ZeroSegments);
        }
        let n = segments as f64;
        let mut knots: Vec<f64> = (0..=segments).map(|i| a + i as f64 * (b - a) / n).collect();
        knots[segments] = domain.hi();
        Ok(Self { knots, uniform: true })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of subintervals `N`.
    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.knots[0],
            hi: self.knots[self.knots.len() - 1],
        }
    }

    /// Subinterval `I_i = [x_{i-1}, x_i]` for `i` in `1..=N`.
    pub fn subinterval(&self, i: usize) -> (f64, f64) {
        (self.knots[i - 1], self.knots[i])
    }

    /// Lengths `h_i = x_i - x_{i-1}`.
    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.windows(2).map(|w| w[1] - w[0])
    }
}

fn detect_uniform(knots: &[f64]) -> bool {
    let n = knots.len() - 1;
    let (a, b) = (knots[0], knots[n]);
    let h = (b - a) / n as f64;
    let tol = UNIFORM_TOLERANCE * (b - a);
    knots.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol)
}

/// Value at `x` of the nodal hat function `phi_i` of partition `p`.
///
/// `phi_0` and `phi_N` are half hats. Errors if `i > N` or `x` lies outside the partition.
pub fn hat_basis(p: &Partition, i: usize, x: f64) -> Result<f64> {
    let n = p.segments();
    if i > n {
        return Err(Error::IndexOutOfRange { index: i, max: n });
    }
    p.domain().check(x)?;
    let k = p.knots();
    let xi = k[i];
    if x == xi {
        return Ok(1.0);
    }
    if x < xi {
        if i == 0 || x < k[i - 1] {
            return Ok(0.0);
        }
        Ok((x - k[i - 1]) / (xi - k[i - 1]))
    } else {
        if i == n || x > k[i + 1] {
            return Ok(0.0);
        }
        Ok((k[i + 1] - x) / (k[i + 1] - xi))
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a [`TargetFunction`] provides `f''`.
#[derive(Clone)]
pub enum SecondDerivative {
    Analytic(RealFn),
    /// Central second difference with step `max(1e-5, 1e-5 |x|)`, stencil shifted inward at the ends.
    Numeric,
}

impl fmt::Debug for SecondDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytic(_) => f.write_str("Analytic"),
            Self::Numeric => f.write_str("Numeric"),
        }
    }
}

/// A univariate function `f` on `[a, b]` together with its second derivative.
#[derive(Clone)]
pub struct TargetFunction {
    eval: RealFn,
    second: SecondDerivative,
    domain: Interval,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("domain", &self.domain)
            .field("second", &self.second)
            .finish_non_exhaustive()
    }
}

impl TargetFunction {
    /// Target with a numeric second derivative.
    pub fn new<F>(domain: Interval, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            second: SecondDerivative::Numeric,
            domain,
        }
    }

    /// Target with an analytic second derivative.
    pub fn with_second_derivative<F, G>(domain: Interval, f: F, f2: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            second: SecondDerivative::Analytic(Arc::new(f2)),
            domain,
        }
    }

    /// Same function restricted (or extended) to another domain.
    pub fn on(&self, domain: Interval) -> Self {
        Self { domain, ..self.clone() }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn has_analytic_second_derivative(&self) -> bool {
        matches!(self.second, SecondDerivative::Analytic(_))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.second_derivative_with_noise(x).0
    }

    /// `f''(x)` together with a bound on its rounding noise. The bound is
    /// zero for an analytic `f''`.
    pub fn second_derivative_with_noise(&self, x: f64) -> (f64, f64) {
        match &self.second {
            SecondDerivative::Analytic(g) => (g(x), 0.0),
            SecondDerivative::Numeric => self.numeric_second_derivative(x),
        }
    }

    fn numeric_second_derivative(&self, x: f64) -> (f64, f64) {
        let (a, b) = (self.domain.lo(), self.domain.hi());
        let delta = 1e-5f64.max(1e-5 * x.abs()).min(0.25 * (b - a));
        let c = x.clamp(a + delta, b - delta);
        let f = &self.eval;
        let (up, mid, down) = (f(c + delta), f(c), f(c - delta));
        let d2 = (up - 2.0 * mid + down) / (delta * delta);
        // Differences below the rounding floor of the stencil are indistinguishable from zero.
        let floor = 8.0 * f64::EPSILON * (up.abs() + 2.0 * mid.abs() + down.abs()) / (delta * delta);
        if d2.abs() <= floor {
            (0.0, floor)
        } else {
            (d2, floor)
        }
    }

    /// `f(x)`, or an error naming `x` if the value is not finite.
    pub fn checked_value(&self, x: f64) -> Result<f64> {
        let v = self.value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: "f", x })
        }
    }

    pub fn checked_second_derivative(&self, x: f64) -> Result<f64> {
        let v = self.second_derivative(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: "f''", x })
        }
    }
}

/// Several scalar targets on one shared domain.
#[derive(Debug, Clone)]
pub struct VectorTargetFunction {
    components: Vec<TargetFunction>,
}

impl VectorTargetFunction {
    pub fn new(components: Vec<TargetFunction>) -> Result<Self> {
        let first = components.first().ok_or(Error::ComponentMismatch)?.domain();
        if components.iter().any(|c| c.domain() != first) {
            return Err(Error::ComponentMismatch);
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[TargetFunction] {
        &self.components
    }

    pub fn domain(&self) -> Interval {
        self.components[0].domain()
    }
}

/// Continuous piecewise-linear function `v(x) = sum_i v_i phi_i(x)` on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalFunction {
    partition: Partition,
    ordinates: Vec<f64>,
}

impl PolygonalFunction {
    pub fn new(partition: Partition, ordinates: Vec<f64>) -> Result<Self> {
        let expected = partition.knots().len();
        if ordinates.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: ordinates.len(),
            });
        }
        Ok(Self { partition, ordinates })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn into_parts(self) -> (Partition, Vec<f64>) {
        (self.partition, self.ordinates)
    }

    /// Value on subinterval `i` (1-based), extended linearly beyond its ends.
    #[inline]
    pub fn segment_value(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = self.partition.subinterval(i);
        let t = (x - x0) / (x1 - x0);
        (1.0 - t) * self.ordinates[i - 1] + t * self.ordinates[i]
    }

    /// Value at `x`, located by binary search. `x` outside the domain is clamped.
    pub fn value(&self, x: f64) -> f64 {
        let k = self.partition.knots();
        let n = self.partition.segments();
        let i = k.partition_point(|&kn| kn <= x).clamp(1, n);
        let xc = x.clamp(k[0], k[n]);
        self.segment_value(i, xc)
    }

    /// Wraps this polygonal function as a target; its second derivative is zero between knots.
    pub fn to_target(&self) -> TargetFunction {
        let me = self.clone();
        TargetFunction::with_second_derivative(self.partition.domain(), move |x| me.value(x), |_| 0.0)
    }
}

/// Polygonal interpolant `pi_T f`: ordinates are `f` sampled at the knots.
pub fn from_samples(p: &Partition, f: &TargetFunction) -> Result<PolygonalFunction> {
    let ordinates = p
        .knots()
        .iter()
        .map(|&x| f.checked_value(x))
        .collect::<Result<Vec<_>>>()?;
    PolygonalFunction::new(p.clone(), ordinates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn hat_examples() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(hat_basis(&p, 1, 0.5).unwrap(), 1.0);
        assert_eq!(hat_basis(&p, 1, 0.0).unwrap(), 0.0);
        assert_eq!(hat_basis(&p, 1, 0.25).unwrap(), 0.5);
        assert_eq!(hat_basis(&p, 0, 0.0).unwrap(), 1.0);
        assert_eq!(hat_basis(&p, 2, 1.0).unwrap(), 1.0);
        assert_eq!(hat_basis(&p, 0, 0.75).unwrap(), 0.0);
    }

    #[test]
    fn hat_errors() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(hat_basis(&p, 3, 0.5), Err(Error::IndexOutOfRange { index: 3, max: 2 }));
        assert!(matches!(hat_basis(&p, 1, 1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0.0]).is_err());
        assert_eq!(
            Partition::new(vec![0.0, 1.0, 1.0]),
            Err(Error::NotStrictlyIncreasing { index: 2 })
        );
        assert!(Partition::new(vec![0.0, f64::NAN]).is_err());
        assert_eq!(
            Partition::uniform(1.0, 1.0, 3),
            Err(Error::InvalidInterval { lo: 1.0, hi: 1.0 })
        );
        assert_eq!(Partition::uniform(0.0, 1.0, 0), Err(Error::ZeroSegments));
    }

    #[test]
    fn uniform_detection() {
        assert!(Partition::new(vec![0.0, 0.5, 1.0]).unwrap().is_uniform());
        assert!(!Partition::new(vec![0.0, 0.4, 1.0]).unwrap().is_uniform());
        let p = Partition::uniform(-2.0, 2.0, 8).unwrap();
        assert_eq!(p.knots().len(), 9);
        assert!(Partition::new(p.knots().to_vec()).unwrap().is_uniform());
    }

    #[test]
    fn samples_of_quadratic() {
        let f = TargetFunction::with_second_derivative(unit(), |x| x * x, |_| 2.0);
        let p = Partition::uniform(0.0, 1.0, 1).unwrap();
        assert_eq!(from_samples(&p, &f).unwrap().ordinates(), &[0.0, 1.0]);
    }

    #[test]
    fn samples_of_gaussian() {
        let g = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = TargetFunction::new(Interval::new(0.0, 4.0).unwrap(), g);
        let p = Partition::uniform(0.0, 4.0, 4).unwrap();
        let v = from_samples(&p, &f).unwrap();
        for (i, y) in v.ordinates().iter().enumerate() {
            assert_eq!(*y, g(i as f64));
        }
    }

    #[test]
    fn non_finite_sample_is_an_error() {
        let f = TargetFunction::new(unit(), |x| 1.0 / x);
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        assert!(matches!(from_samples(&p, &f), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn numeric_second_derivative() {
        let f = TargetFunction::new(Interval::new(0.0, 2.0).unwrap(), |x| x * x * x);
        for &x in &[0.0, 0.3, 1.0, 2.0] {
            assert_relative_eq!(f.second_derivative(x), 6.0 * x, epsilon = 1e-3);
            let (v, noise) = f.second_derivative_with_noise(x);
            assert!(noise > 0.0 && noise < 1e-3);
            assert!((v - 6.0 * x).abs() <= 1e-3);
        }
        assert!(!f.has_analytic_second_derivative());
        let g = TargetFunction::with_second_derivative(unit(), |x| x * x, |_| 2.0);
        assert_eq!(g.second_derivative_with_noise(0.4), (2.0, 0.0));
    }

    #[test]
    fn vector_target_requires_shared_domain() {
        let a = TargetFunction::new(unit(), |x| x);
        let b = TargetFunction::new(Interval::new(0.0, 2.0).unwrap(), |x| x);
        assert!(VectorTargetFunction::new(vec![a.clone(), b]).is_err());
        assert!(VectorTargetFunction::new(vec![]).is_err());
        assert!(VectorTargetFunction::new(vec![a.clone(), a]).is_ok());
    }

    fn arb_partition() -> impl Strategy<Value = Partition> {
        prop::collection::vec(0.01f64..1.0, 1..30).prop_map(|steps| {
            let mut x = -1.0;
            let mut knots = vec![x];
            for s in steps {
                x += s;
                knots.push(x);
            }
            Partition::new(knots).unwrap()
        })
    }

    proptest! {
        #[test]
        fn partition_of_unity(p in arb_partition(), t in 0.0f64..=1.0) {
            let d = p.domain();
            let x = d.lo() + t * d.width();
            let sum: f64 = (0..=p.segments()).map(|i| hat_basis(&p, i, x).unwrap()).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn hat_locality(p in arb_partition(), t in 0.0f64..=1.0, pick in 0usize..1000) {
            let d = p.domain();
            let x = d.lo() + t * d.width();
            let i = pick % (p.segments() + 1);
            let k = p.knots();
            let lo = if i == 0 { k[0] } else { k[i - 1] };
            let hi = if i == p.segments() { k[i] } else { k[i + 1] };
            if x < lo || x > hi {
                prop_assert_eq!(hat_basis(&p, i, x).unwrap(), 0.0);
            }
        }

        #[test]
        fn sampling_reproduces_polygonal(p in arb_partition(), seed in 0u64..1000) {
            let ords: Vec<f64> = (0..p.knots().len()).map(|i| ((i as u64 * 7 + seed) as f64).sin()).collect();
            let g = PolygonalFunction::new(p.clone(), ords.clone()).unwrap();
            let back = from_samples(&p, &g.to_target()).unwrap();
            prop_assert_eq!(back.ordinates(), &ords[..]);
        }
    }
}
