//! Target functions named on the command line.
//!
//! `gaussian`, `chirp` and `poly7` carry analytic second derivatives.
//! `poly:c0,c1,...` is a polynomial with ascending coefficients, and
//! `expr:<expression in x>` uses the numeric second-derivative fallback.

use std::f64::consts;

use meval::{ContextProvider, Expr, FuncEvalError};
use polylin::{builtins, Interval, TargetFunction};

use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Gaussian,
    Chirp,
    Poly7,
    Polynomial(Vec<f64>),
    Expression(String),
}

impl FunctionSpec {
    pub fn parse(s: &str) -> Result<Self, Failure> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::config(format!("bad polynomial coefficients {rest:?}: {e}")))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Failure::config("polynomial coefficients must be finite"));
            }
            return Ok(Self::Polynomial(coeffs));
        }
        if let Some(rest) = s.strip_prefix("expr:") {
            return Ok(Self::Expression(rest.to_string()));
        }
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "chirp" => Ok(Self::Chirp),
            "poly7" => Ok(Self::Poly7),
            other => Err(Failure::config(format!(
                "unknown function {other:?}; expected gaussian, chirp, poly7, poly:c0,c1,... or expr:..."
            ))),
        }
    }

    /// Canonical text form; parses back to the same spec.
    pub fn to_spec_string(&self) -> String {
        match self {
            Self::Gaussian => "gaussian".into(),
            Self::Chirp => "chirp".into(),
            Self::Poly7 => "poly7".into(),
            Self::Polynomial(c) => format!(
                "poly:{}",
                c.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
            ),
            Self::Expression(e) => format!("expr:{e}"),
        }
    }

    pub fn default_interval(&self) -> Option<(f64, f64)> {
        match self {
            Self::Gaussian => Some((0.0, 4.0)),
            Self::Chirp => Some((0.0, 1.0)),
            Self::Poly7 => Some((-4.0, 3.0)),
            _ => None,
        }
    }

    pub fn build(&self, a: f64, b: f64) -> Result<TargetFunction, Failure> {
        let f = match self {
            Self::Gaussian => builtins::gaussian(a, b),
            Self::Chirp => builtins::chirp(a, b),
            Self::Poly7 => builtins::poly7(a, b),
            Self::Polynomial(c) => builtins::polynomial(c.clone(), a, b),
            Self::Expression(src) => return expression(src, a, b),
        };
        f.map_err(Failure::from)
    }
}

/// Constants and functions available inside `expr:`; unlike meval's own
/// context this one is `Send + Sync`, so parsed expressions can be
/// evaluated from worker threads.
struct Builtins;

impl ContextProvider for Builtins {
    fn get_var(&self, name: &str) -> Option<f64> {
        match name {
            "pi" => Some(consts::PI),
            "e" => Some(consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> Result<f64, FuncEvalError> {
        let unary: fn(f64) -> f64 = match name {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "tanh" => f64::tanh,
            "atan" => f64::atan,
            _ => return Err(FuncEvalError::UnknownFunction),
        };
        match args {
            [x] => Ok(unary(*x)),
            _ => Err(FuncEvalError::NumberArgs(1)),
        }
    }
}

fn expression(src: &str, a: f64, b: f64) -> Result<TargetFunction, Failure> {
    let expr: Expr = src
        .parse()
        .map_err(|e| Failure::config(format!("cannot parse expression {src:?}: {e}")))?;
    // Unknown names only surface on evaluation; probe once.
    expr.eval_with_context((("x", 0.5 * (a + b)), Builtins))
        .map_err(|e| Failure::config(format!("cannot evaluate expression {src:?}: {e}")))?;
    let domain = Interval::new(a, b)?;
    Ok(TargetFunction::new(domain, move |x| {
        expr.eval_with_context((("x", x), Builtins)).unwrap_or(f64::NAN)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in [
            "gaussian",
            "chirp",
            "poly7",
            "poly:1.0,-2.5,0.0,3.0",
            "expr:sin(x)^2 + 1",
        ] {
            let spec = FunctionSpec::parse(s).unwrap();
            assert_eq!(FunctionSpec::parse(&spec.to_spec_string()).unwrap(), spec);
        }
        assert!(FunctionSpec::parse("cosine").is_err());
        assert!(FunctionSpec::parse("poly:1,x").is_err());
    }

    #[test]
    fn expressions_evaluate() {
        let f = FunctionSpec::parse("expr:exp(-x^2/2)/sqrt(2*pi)")
            .unwrap()
            .build(0.0, 4.0)
            .unwrap();
        let g = builtins::gaussian(0.0, 4.0).unwrap();
        for x in [0.0, 0.7, 3.9] {
            assert!((f.value(x) - g.value(x)).abs() < 1e-15);
            assert!((f.second_derivative(x) - g.second_derivative(x)).abs() < 1e-4);
        }
        assert!(FunctionSpec::parse("expr:foo(x)").unwrap().build(0.0, 1.0).is_err());
        assert!(FunctionSpec::parse("expr:y + 1").unwrap().build(0.0, 1.0).is_err());
        assert!(FunctionSpec::parse("expr:(x").unwrap().build(0.0, 1.0).is_err());
    }

    #[test]
    fn expression_is_thread_safe() {
        fn assert_send_sync<T: Send + Sync>(_: &T) {}
        let f = FunctionSpec::parse("expr:x^3").unwrap().build(0.0, 1.0).unwrap();
        assert_send_sync(&f);
    }
}
