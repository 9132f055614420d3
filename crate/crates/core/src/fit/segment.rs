use crate::analysis::segment_l1_error;
use crate::error::{Error, Result};
use crate::model::TargetFunction;
use crate::quadrature::Simpson;

/// Best L1 line on a single interval, expressed as displacements from `f` at its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFit {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub min_error: f64,
}

impl SegmentFit {
    /// The two points where the optimal line crosses `f`.
    pub fn canonical_points(lo: f64, hi: f64) -> (f64, f64) {
        let h = hi - lo;
        (lo + 0.25 * h, lo + 0.75 * h)
    }
}

/// Best L1 linear approximation of `f` on `[lo, hi]`.
///
/// The line interpolates `f` at `lo + h/4` and `lo + 3h/4`, which is optimal
/// whenever `f` minus any line has at most two sign changes on the interval.
pub fn best_l1_segment(f: &TargetFunction, lo: f64, hi: f64) -> Result<SegmentFit> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    let (x1, x2) = SegmentFit::canonical_points(lo, hi);
    let f1 = f.checked_value(x1)?;
    let f2 = f.checked_value(x2)?;
    let y_lo = 0.5 * (3.0 * f1 - f2);
    let y_hi = 0.5 * (3.0 * f2 - f1);
    let delta_lo = y_lo - f.checked_value(lo)?;
    let delta_hi = y_hi - f.checked_value(hi)?;
    let quad = Simpson::with_tolerances(1e-14 * (hi - lo), 1e-12);
    let min_error = segment_l1_error(f, lo, hi, y_lo, y_hi, &quad)?;
    Ok(SegmentFit {
        delta_lo,
        delta_hi,
        min_error,
    })
}
