//! Adaptive Simpson quadrature and the bracketed root finder used to split
//! integrands at sign changes.
//!
//! Every integral in the crate goes through [`Simpson`]: the knot
//! distribution, the L2 load vector, the smoothed L1 cost and its derivatives,
//! and the measured L1 distances. The vector-valued entry point integrates
//! several integrands sharing the same abscissae in one pass.

use std::cell::Cell;

use crate::error::{Error, Result};

/// Panels narrower than this, relative to the magnitude of the integration limits, are not split.
const WIDTH_FLOOR: f64 = 8.0 * f64::EPSILON;

/// Integrand evaluations allowed per integral. A non-integrable singularity,
/// or noise that never settles, would otherwise split panels without end.
pub const MAX_EVALS: usize = 1_000_000;

/// Adaptive Simpson rule on a composite initial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simpson {
    /// Absolute error target over the whole interval.
    pub abs_tol: f64,
    /// Relative error target, applied to a coarse first estimate of the integral.
    pub rel_tol: f64,
    /// Number of equal initial panels.
    pub panels: usize,
    /// Maximum bisection depth below an initial panel.
    pub max_depth: u32,
    /// Minimum bisection depth; guards against accepting a coarse panel by coincidence.
    pub min_depth: u32,
}

impl Default for Simpson {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            panels: 1,
            max_depth: 60,
            min_depth: 2,
        }
    }
}

impl Simpson {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    pub fn min_depth(mut self, depth: u32) -> Self {
        self.min_depth = depth;
        self
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let [v] = self.integrate_vec(|x| [f(x)], a, b)?;
        Ok(v)
    }

    /// Integrates `M` integrands at once. Each component gets its own
    /// tolerance `max(abs_tol, rel_tol * |coarse estimate|)`.
    pub fn integrate_vec<const M: usize, F>(&self, f: F, a: f64, b: f64) -> Result<[f64; M]>
    where
        F: Fn(f64) -> [f64; M],
    {
        self.integrate_noisy(|x| (f(x), [0.0; M]), a, b)
    }

    /// Like [`Simpson::integrate_vec`] for integrands known only up to an
    /// absolute noise bound per sample. A panel whose Simpson correction is
    /// within the noise its samples carry is accepted; refining it further
    /// would only resolve the noise.
    pub fn integrate_noisy<const M: usize, F>(&self, f: F, a: f64, b: f64) -> Result<[f64; M]>
    where
        F: Fn(f64) -> ([f64; M], [f64; M]),
    {
        if a == b {
            return Ok([0.0; M]);
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::DegenerateInterval { lo: a, hi: b });
        }
        let evals = Cell::new(0usize);
        let eval = |x: f64| -> Result<Sample<M>> {
            evals.set(evals.get() + 1);
            if evals.get() > MAX_EVALS {
                return Err(Error::QuadratureNonConvergence { lo: a, hi: b });
            }
            let (v, noise) = f(x);
            if v.iter().all(|c| c.is_finite()) {
                Ok(Sample { v, noise })
            } else {
                Err(Error::NonFinite { what: "integrand", x })
            }
        };

        let n = self.panels.max(1);
        let width = (b - a) / n as f64;
        let node = |i: usize| if i == n { b } else { a + width * i as f64 };

        // Coarse pass: values at panel ends and midpoints, and the per-panel Simpson estimate.
        let mut ends = Vec::with_capacity(n + 1);
        for i in 0..=n {
            ends.push(eval(node(i))?);
        }
        let mut panels = Vec::with_capacity(n);
        let mut coarse = [0.0; M];
        for i in 0..n {
            let (lo, hi) = (node(i), node(i + 1));
            let mid = 0.5 * (lo + hi);
            let fm = eval(mid)?;
            let whole = simpson(hi - lo, &ends[i].v, &fm.v, &ends[i + 1].v);
            for c in 0..M {
                coarse[c] += whole[c];
            }
            panels.push((lo, mid, hi, fm, whole));
        }

        let mut tol = [0.0; M];
        for c in 0..M {
            tol[c] = self.abs_tol.max(self.rel_tol * coarse[c].abs());
        }

        let floor = WIDTH_FLOOR * a.abs().max(b.abs());
        let mut total = [0.0; M];
        for (i, (lo, mid, hi, fm, whole)) in panels.into_iter().enumerate() {
            let share = (hi - lo) / (b - a);
            let mut ptol = [0.0; M];
            for c in 0..M {
                ptol[c] = tol[c] * share;
            }
            let seg = Segment {
                a: lo,
                fa: ends[i],
                m: mid,
                fm,
                b: hi,
                fb: ends[i + 1],
                whole,
            };
            let v = self.recurse(&eval, seg, ptol, floor, 0)?;
            for c in 0..M {
                total[c] += v[c];
            }
        }
        Ok(total)
    }

    fn recurse<const M: usize, E>(
        &self,
        eval: &E,
        s: Segment<M>,
        tol: [f64; M],
        floor: f64,
        depth: u32,
    ) -> Result<[f64; M]>
    where
        E: Fn(f64) -> Result<Sample<M>>,
    {
        let lm = 0.5 * (s.a + s.m);
        let rm = 0.5 * (s.m + s.b);
        let flm = eval(lm)?;
        let frm = eval(rm)?;
        let left = simpson(s.m - s.a, &s.fa.v, &flm.v, &s.fm.v);
        let right = simpson(s.b - s.m, &s.fm.v, &frm.v, &s.fb.v);

        let mut within = true;
        let mut refined = [0.0; M];
        for c in 0..M {
            let delta = left[c] + right[c] - s.whole[c];
            refined[c] = left[c] + right[c] + delta / 15.0;
            // The correction is a combination of the five samples with weights summing to 2 (b - a).
            let noise = [s.fa, flm, s.fm, frm, s.fb]
                .iter()
                .fold(0.0f64, |m, p| m.max(p.noise[c]));
            let noise_floor = 2.0 * (s.b - s.a) * noise;
            if !(delta.abs() <= 15.0 * tol[c] || delta.abs() < noise_floor) {
                within = false;
            }
        }
        if within && depth >= self.min_depth {
            return Ok(refined);
        }
        // Panels at the resolution floor are accepted as they are. Next to a
        // cusp or a jump the estimate never meets a halved tolerance, but such
        // a panel contributes only O(floor) to the integral.
        let unsplittable = !(s.a < lm && lm < s.m && s.m < rm && rm < s.b) || s.b - s.a <= floor;
        if unsplittable {
            return Ok(refined);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNonConvergence { lo: s.a, hi: s.b });
        }

        let mut half = [0.0; M];
        for c in 0..M {
            half[c] = 0.5 * tol[c];
        }
        let l = self.recurse(
            eval,
            Segment {
                a: s.a,
                fa: s.fa,
                m: lm,
                fm: flm,
                b: s.m,
                fb: s.fm,
                whole: left,
            },
            half,
            floor,
            depth + 1,
        )?;
        let r = self.recurse(
            eval,
            Segment {
                a: s.m,
                fa: s.fm,
                m: rm,
                fm: frm,
                b: s.b,
                fb: s.fb,
                whole: right,
            },
            half,
            floor,
            depth + 1,
        )?;
        let mut out = [0.0; M];
        for c in 0..M {
            out[c] = l[c] + r[c];
        }
        Ok(out)
    }
}

#[derive(Clone, Copy)]
struct Sample<const M: usize> {
    v: [f64; M],
    noise: [f64; M],
}

struct Segment<const M: usize> {
    a: f64,
    fa: Sample<M>,
    m: f64,
    fm: Sample<M>,
    b: f64,
    fb: Sample<M>,
    whole: [f64; M],
}

#[inline]
fn simpson<const M: usize>(width: f64, fa: &[f64; M], fm: &[f64; M], fb: &[f64; M]) -> [f64; M] {
    let mut out = [0.0; M];
    for c in 0..M {
        out[c] = width / 6.0 * (fa[c] + 4.0 * fm[c] + fb[c]);
    }
    out
}

/// Finds a root of `g` in `[lo, hi]` given `g(lo)` and `g(hi)` of opposite sign.
///
/// Illinois-modified regula falsi with a bisection step whenever the bracket
/// fails to halve over two iterations.
pub fn bracketed_root<G>(g: G, mut lo: f64, mut hi: f64, mut glo: f64, mut ghi: f64, xtol: f64) -> f64
where
    G: Fn(f64) -> f64,
{
    if glo == 0.0 {
        return lo;
    }
    if ghi == 0.0 {
        return hi;
    }
    debug_assert!(glo.signum() != ghi.signum());
    let mut side = 0i8;
    let mut width_before = hi - lo;
    for iter in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mut x = (lo * ghi - hi * glo) / (ghi - glo);
        if iter % 2 == 1 {
            if hi - lo > 0.5 * width_before {
                x = 0.5 * (lo + hi);
            }
            width_before = hi - lo;
        }
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
            if !(x > lo && x < hi) {
                break;
            }
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx.signum() == glo.signum() {
            lo = x;
            glo = gx;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            ghi = gx;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    if glo.abs() < ghi.abs() {
        lo
    } else {
        hi
    }
}

/// Interior points of `(a, b)` where `g` changes sign, located by sampling
/// `samples` equal steps and refining each bracket. Sorted ascending.
pub fn sign_changes<G>(g: G, a: f64, b: f64, samples: usize) -> Vec<f64>
where
    G: Fn(f64) -> f64,
{
    let m = samples.max(1);
    let step = (b - a) / m as f64;
    let xtol = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut g0 = g(a);
    for j in 1..=m {
        let x1 = if j == m { b } else { a + step * j as f64 };
        let g1 = g(x1);
        if g0 != 0.0 && g1 != 0.0 && g0.signum() != g1.signum() {
            let r = bracketed_root(&g, x0, x1, g0, g1, xtol);
            if r > a && r < b {
                roots.push(r);
            }
        } else if g1 == 0.0 && j < m {
            roots.push(x1);
        }
        x0 = x1;
        g0 = g1;
    }
    roots.dedup();
    roots
}
