//! Vector-valued targets on one shared partition.
//!
//! The scalar machinery carries over with `|f''|` replaced by
//! `||f''||_1 = sum_j |f_j''|`. Fits are independent per component.

use crate::analysis::{cbrt_noise, l1_distance, BoundEstimate, BoundKind, CurvatureIntegrals};
use crate::error::{Error, Result};
use crate::fit::{self, FitOptions, FitReport};
use crate::model::{Interval, Partition, PolygonalFunction, VectorTargetFunction};
use crate::parallel;
use crate::partition::{partition_from_distribution, KnotDistribution};

/// `(sum_j |f_j''(x)|)^(1/3)`.
pub fn vector_knot_density(f: &VectorTargetFunction, x: f64) -> Result<f64> {
    let mut s = 0.0;
    for c in f.components() {
        s += c.checked_second_derivative(x)?.abs();
    }
    Ok(s.cbrt())
}

/// `sum_j |f_j''(x)|` and its noise bound.
fn curvature_norm(f: &VectorTargetFunction) -> impl Fn(f64) -> (f64, f64) + Send + Sync + 'static {
    let comps = f.components().to_vec();
    move |x| {
        comps.iter().fold((0.0, 0.0), |(s, n), c| {
            let (v, noise) = c.second_derivative_with_noise(x);
            (s + v.abs(), n + noise)
        })
    }
}

/// Cumulative knot distribution built from the vector density.
pub fn vector_distribution(f: &VectorTargetFunction) -> Result<KnotDistribution> {
    let d = f.domain();
    let norm = curvature_norm(f);
    KnotDistribution::from_noisy_density(
        move |x| {
            let (v, noise) = norm(x);
            (v.cbrt(), cbrt_noise(v, noise))
        },
        d.lo(),
        d.hi(),
    )
}

/// Error-equalized partition of the shared domain for all components jointly.
pub fn vector_optimized_partition(f: &VectorTargetFunction, segments: usize) -> Result<Partition> {
    partition_from_distribution(&vector_distribution(f)?, segments)
}

/// One polygonal function per component, all on the same partition.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPolygonal {
    partition: Partition,
    components: Vec<Vec<f64>>,
}

impl VectorPolygonal {
    pub fn new(components: Vec<PolygonalFunction>) -> Result<Self> {
        let first = components.first().ok_or(Error::ComponentMismatch)?;
        let partition = first.partition().clone();
        if components.iter().any(|c| c.partition() != &partition) {
            return Err(Error::ComponentMismatch);
        }
        let components = components.into_iter().map(|c| c.into_parts().1).collect();
        Ok(Self { partition, components })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, j: usize) -> PolygonalFunction {
        PolygonalFunction::new(self.partition.clone(), self.components[j].clone())
            .expect("lengths checked on construction")
    }

    pub fn components(&self) -> Vec<PolygonalFunction> {
        (0..self.len()).map(|j| self.component(j)).collect()
    }

    /// Values of all components at `x`.
    pub fn value(&self, x: f64) -> Vec<f64> {
        (0..self.len()).map(|j| self.component(j).value(x)).collect()
    }
}

fn check_shape(f: &VectorTargetFunction, g: &VectorPolygonal) -> Result<()> {
    if f.components().len() != g.len() || f.domain() != g.partition().domain() {
        return Err(Error::ComponentMismatch);
    }
    Ok(())
}

/// `sum_j ||f_j - g_j||_{L1}`.
pub fn vector_l1_distance(f: &VectorTargetFunction, g: &VectorPolygonal) -> Result<f64> {
    check_shape(f, g)?;
    let mut total = 0.0;
    for (fj, gj) in f.components().iter().zip(g.components()) {
        total += l1_distance(fj, &gj)?;
    }
    Ok(total)
}

pub fn vector_interpolant(f: &VectorTargetFunction, p: &Partition) -> Result<VectorPolygonal> {
    let comps = f
        .components()
        .iter()
        .map(|c| fit::interpolant(c, p))
        .collect::<Result<Vec<_>>>()?;
    VectorPolygonal::new(comps)
}

/// Independent best L1 fits of each component on `p`, run in parallel.
pub fn vector_best_l1_fit(
    f: &VectorTargetFunction,
    p: &Partition,
    opts: &FitOptions,
) -> Result<(VectorPolygonal, Vec<FitReport>)> {
    let fits = parallel::map_slice(f.components(), |c| fit::best_l1_fit(c, p, opts));
    let (comps, reports): (Vec<_>, Vec<_>) = fits.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok((VectorPolygonal::new(comps)?, reports))
}

/// Scalar bound formulas evaluated with `||f''||_1` in place of `|f''|`.
///
/// These are heuristic: the scalar derivation does not carry over line by
/// line, so treat the value as an estimate rather than a guarantee.
pub fn vector_bound(f: &VectorTargetFunction, segments: usize, kind: BoundKind) -> Result<BoundEstimate> {
    if segments == 0 {
        return Err(Error::ZeroSegments);
    }
    let d: Interval = f.domain();
    let ci = CurvatureIntegrals::of_noisy(curvature_norm(f), d.lo(), d.hi())?;
    Ok(BoundEstimate {
        value: ci.bound(kind, d.lo(), d.hi(), segments),
        kind,
        segments,
        interval: d,
    })
}
