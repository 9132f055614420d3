//! Reference target functions with analytic second derivatives.

use std::f64::consts::PI;

use crate::error::Result;
use crate::model::{Interval, TargetFunction};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density `exp(-x^2/2) / sqrt(2 pi)`; `f'' = (x^2 - 1) f`.
pub fn gaussian(a: f64, b: f64) -> Result<TargetFunction> {
    Ok(TargetFunction::with_second_derivative(
        Interval::new(a, b)?,
        |x| FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
        |x| (x * x - 1.0) * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
    ))
}

/// Linear chirp `sin(10 pi x^2)`.
pub fn chirp(a: f64, b: f64) -> Result<TargetFunction> {
    const W: f64 = 10.0 * PI;
    Ok(TargetFunction::with_second_derivative(
        Interval::new(a, b)?,
        |x| (W * x * x).sin(),
        |x| {
            let phase = W * x * x;
            2.0 * W * phase.cos() - 4.0 * W * W * x * x * phase.sin()
        },
    ))
}

/// Roots of the seventh-degree demonstration polynomial.
pub const POLY7_ROOTS: [f64; 7] = [-4.0, -3.0, -2.5, 0.0, 1.5, 2.0, 3.0];

/// `(x+4)(x+3)(x+2.5) x (x-1.5)(x-2)(x-3)`.
pub fn poly7(a: f64, b: f64) -> Result<TargetFunction> {
    let mut coeffs = vec![1.0];
    for r in POLY7_ROOTS {
        // multiply by (x - r)
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= r * c;
        }
        coeffs = next;
    }
    polynomial(coeffs, a, b)
}

/// Polynomial `sum_k c_k x^k` with coefficients in ascending order.
pub fn polynomial(coeffs: Vec<f64>, a: f64, b: f64) -> Result<TargetFunction> {
    let second: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(2)
        .map(|(k, c)| (k * (k - 1)) as f64 * c)
        .collect();
    Ok(TargetFunction::with_second_derivative(
        Interval::new(a, b)?,
        move |x| horner(&coeffs, x),
        move |x| horner(&second, x),
    ))
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn central(f: &TargetFunction, x: f64) -> f64 {
        let h = 1e-4;
        (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h)
    }

    #[test]
    fn analytic_second_derivatives_agree_with_differences() {
        let g = gaussian(0.0, 4.0).unwrap();
        let c = chirp(0.0, 1.0).unwrap();
        let p = poly7(-4.0, 3.0).unwrap();
        for &x in &[0.1, 0.5, 0.9] {
            assert_relative_eq!(g.second_derivative(x), central(&g, x), epsilon = 1e-6);
            assert_relative_eq!(
                c.second_derivative(x),
                central(&c, x),
                max_relative = 1e-5,
                epsilon = 1e-3
            );
            assert_relative_eq!(
                p.second_derivative(x),
                central(&p, x),
                max_relative = 1e-6,
                epsilon = 1e-4
            );
        }
    }

    #[test]
    fn poly7_vanishes_at_roots() {
        let p = poly7(-4.0, 3.0).unwrap();
        for r in POLY7_ROOTS {
            assert!(p.value(r).abs() < 1e-9);
        }
        assert_relative_eq!(p.value(1.0), -(5.0 * 4.0 * 3.5 * 1.0 * 0.5 * 1.0 * 2.0), epsilon = 1e-9);
    }
}
