//! Evaluation of polygonal functions.
//!
//! On a uniform partition the subinterval index is `1 + floor(N (x - x0) / L)`,
//! a constant-time computation. Otherwise the index comes from a binary search
//! over the knots. Subintervals are right-open, with `x = x_N` mapped to the
//! last one.

use std::hint::black_box;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::PolygonalFunction;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    UniformDirect,
    BinarySearch,
}

/// What to do with `x` outside `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OutOfDomain {
    #[default]
    Error,
    Clamp,
}

#[derive(Debug, Clone)]
pub struct Evaluator {
    source: PolygonalFunction,
    mode: EvalMode,
    out_of_domain: OutOfDomain,
    // cached for the direct index map
    x0: f64,
    xn: f64,
    scale: f64,
}

impl Evaluator {
    /// Picks the direct index map when the partition is uniform.
    pub fn new(source: PolygonalFunction) -> Self {
        let mode = if source.partition().is_uniform() {
            EvalMode::UniformDirect
        } else {
            EvalMode::BinarySearch
        };
        Self::with_mode(source, mode).expect("mode chosen from the partition")
    }

    pub fn with_mode(source: PolygonalFunction, mode: EvalMode) -> Result<Self> {
        if mode == EvalMode::UniformDirect && !source.partition().is_uniform() {
            return Err(Error::InvalidOptions("uniform_direct requires a uniform partition"));
        }
        let k = source.partition().knots();
        let (x0, xn) = (k[0], k[k.len() - 1]);
        let scale = source.partition().segments() as f64 / (xn - x0);
        Ok(Self {
            source,
            mode,
            out_of_domain: OutOfDomain::Error,
            x0,
            xn,
            scale,
        })
    }

    pub fn out_of_domain(mut self, policy: OutOfDomain) -> Self {
        self.out_of_domain = policy;
        self
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn source(&self) -> &PolygonalFunction {
        &self.source
    }

    fn admit(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NonFinite { what: "x", x });
        }
        if x >= self.x0 && x <= self.xn {
            return Ok(x);
        }
        match self.out_of_domain {
            OutOfDomain::Clamp => Ok(x.clamp(self.x0, self.xn)),
            OutOfDomain::Error => Err(Error::OutOfDomain {
                x,
                lo: self.x0,
                hi: self.xn,
            }),
        }
    }

    #[inline]
    fn index_of(&self, x: f64) -> usize {
        let knots = self.source.partition().knots();
        let n = knots.len() - 1;
        match self.mode {
            EvalMode::BinarySearch => knots.partition_point(|&k| k <= x).clamp(1, n),
            EvalMode::UniformDirect => {
                let guess = 1 + ((x - self.x0) * self.scale) as usize;
                let mut i = guess.min(n);
                // The stored knots may sit a few ulps off the ideal grid.
                while i > 1 && x < knots[i - 1] {
                    i -= 1;
                }
                while i < n && x >= knots[i] {
                    i += 1;
                }
                i
            }
        }
    }

    /// Index `i` (1-based) of the subinterval `[x_{i-1}, x_i)` containing `x`.
    pub fn segment_index(&self, x: f64) -> Result<usize> {
        let x = self.admit(x)?;
        Ok(self.index_of(x))
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let x = self.admit(x)?;
        Ok(self.source.segment_value(self.index_of(x), x))
    }

    /// Elementwise [`evaluate`](Self::evaluate); fails on the first bad input.
    pub fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        parallel::map_slice(xs, |&x| self.evaluate(x)).into_iter().collect()
    }
}

/// Timing summary from [`bench()`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub n_evals: usize,
    pub repetitions: usize,
    pub mean_ns: f64,
    pub min_ns: f64,
    /// Sum of all outputs of one pass; depends only on the model and the seed.
    pub checksum: f64,
}

pub const MIN_BENCH_EVALS: usize = 100_000;
pub const BENCH_REPETITIONS: usize = 7;

/// Times scalar evaluation at `n_evals` pseudo-random points in the domain.
///
/// Inputs are generated up front from `seed`. One warm-up pass precedes
/// [`BENCH_REPETITIONS`] timed passes; times are per evaluation. `n_evals`
/// below [`MIN_BENCH_EVALS`] is raised to it.
pub fn bench(e: &Evaluator, n_evals: usize, seed: u64) -> BenchStats {
    let n = n_evals.max(MIN_BENCH_EVALS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (e.x0, e.xn);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let pass = |xs: &[f64]| {
        let mut acc = 0.0;
        for &x in xs {
            acc += e.evaluate(black_box(x)).unwrap_or(0.0);
        }
        black_box(acc)
    };
    let checksum = pass(&xs);
    let mut times = Vec::with_capacity(BENCH_REPETITIONS);
    for _ in 0..BENCH_REPETITIONS {
        let t0 = Instant::now();
        let s = pass(&xs);
        times.push(t0.elapsed().as_nanos() as f64 / n as f64);
        debug_assert_eq!(s.to_bits(), checksum.to_bits());
    }
    BenchStats {
        n_evals: n,
        repetitions: BENCH_REPETITIONS,
        mean_ns: times.iter().sum::<f64>() / times.len() as f64,
        min_ns: times.iter().copied().fold(f64::INFINITY, f64::min),
        checksum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Partition;

    fn tent() -> PolygonalFunction {
        PolygonalFunction::new(Partition::uniform(0.0, 1.0, 2).unwrap(), vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn linear_scan(knots: &[f64], x: f64) -> usize {
        let n = knots.len() - 1;
        (1..=n).find(|&i| knots[i - 1] <= x && x < knots[i]).unwrap_or(n)
    }

    #[test]
    fn tent_values() {
        let e = Evaluator::new(tent());
        assert_eq!(e.mode(), EvalMode::UniformDirect);
        assert_eq!(e.evaluate(0.25).unwrap(), 0.5);
        assert_eq!(e.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(e.evaluate(1.0).unwrap(), 0.0);
        assert_eq!(e.segment_index(0.5).unwrap(), 2);
        assert_eq!(e.segment_index(1.0).unwrap(), 2);
    }

    #[test]
    fn out_of_domain_policy() {
        let e = Evaluator::new(tent());
        assert!(matches!(e.evaluate(1.5), Err(Error::OutOfDomain { .. })));
        assert!(e.evaluate(f64::NAN).is_err());
        let c = e.out_of_domain(OutOfDomain::Clamp);
        assert_eq!(c.evaluate(-3.0).unwrap(), 0.0);
        assert_eq!(c.evaluate(0.5 + 1e9).unwrap(), 0.0);
        assert!(c.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn direct_mode_needs_uniform() {
        let p = Partition::new(vec![0.0, 0.1, 1.0]).unwrap();
        let g = PolygonalFunction::new(p, vec![0.0; 3]).unwrap();
        assert!(Evaluator::with_mode(g.clone(), EvalMode::UniformDirect).is_err());
        assert_eq!(Evaluator::new(g).mode(), EvalMode::BinarySearch);
    }

    #[test]
    fn index_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(1..60usize);
            let mut knots: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-3.0..5.0)).collect();
            knots.push(-3.0);
            knots.push(5.0);
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            let ord = vec![0.0; knots.len()];
            let e = Evaluator::new(PolygonalFunction::new(Partition::new(knots.clone()).unwrap(), ord).unwrap());
            for _ in 0..50 {
                let x = rng.random_range(-3.0..=5.0);
                assert_eq!(e.segment_index(x).unwrap(), linear_scan(&knots, x));
            }
            for &k in &knots {
                assert_eq!(e.segment_index(k).unwrap(), linear_scan(&knots, k));
            }
        }
    }

    #[test]
    fn modes_agree_and_knots_are_exact() {
        let p = Partition::uniform(-1.3, 2.9, 97).unwrap();
        let ord: Vec<f64> = p.knots().iter().map(|x| (3.0 * x).sin()).collect();
        let g = PolygonalFunction::new(p.clone(), ord.clone()).unwrap();
        let d = Evaluator::with_mode(g.clone(), EvalMode::UniformDirect).unwrap();
        let b = Evaluator::with_mode(g, EvalMode::BinarySearch).unwrap();
        for (x, y) in p.knots().iter().zip(&ord) {
            assert_eq!(d.evaluate(*x).unwrap(), *y);
            assert_eq!(b.evaluate(*x).unwrap(), *y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = rng.random_range(-1.3..=2.9);
            assert_eq!(d.evaluate(x).unwrap().to_bits(), b.evaluate(x).unwrap().to_bits());
        }
    }

    #[test]
    fn batch_matches_scalar() {
        let e = Evaluator::new(tent());
        assert!(e.evaluate_batch(&[]).unwrap().is_empty());
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let ys = e.evaluate_batch(&xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(*y, e.evaluate(*x).unwrap());
        }
        assert!(e.evaluate_batch(&[0.5, 2.0]).is_err());
    }

    #[test]
    fn bench_checksum_is_reproducible() {
        let e = Evaluator::new(tent());
        let a = bench(&e, 10, 42);
        let b = bench(&e, 10, 42);
        assert_eq!(a.n_evals, MIN_BENCH_EVALS);
        assert_eq!(a.checksum.to_bits(), b.checksum.to_bits());
        assert!(a.min_ns <= a.mean_ns);
    }
}
