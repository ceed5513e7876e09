//! Declarative construction of coefficients from named families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::builtins::{Constant, Delayed, Integral, Nonlinearity, Pointwise, RunningSup, Scaled, Sum};
use super::{Coef, Mat};
use crate::error::{Error, Result};

fn identity() -> Nonlinearity {
    Nonlinearity::Identity
}

/// A coefficient family plus parameters, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefSpec {
    /// `A`
    Constant { value: Vec<Vec<f64>> },
    /// The `rows × cols` zero matrix.
    Zero { rows: usize, cols: usize },
    /// `A_{k,l}·g(x_k(t))`
    Pointwise { g: Nonlinearity, scale: Vec<Vec<f64>> },
    /// `A·outer(∫_0^t inner(x_c(s)) ds)`
    Integral {
        scale: Vec<Vec<f64>>,
        #[serde(default = "identity")]
        outer: Nonlinearity,
        #[serde(default = "identity")]
        inner: Nonlinearity,
        #[serde(default)]
        component: usize,
    },
    /// `A·g(x_c((t − lag) ∨ 0))`
    Delayed {
        scale: Vec<Vec<f64>>,
        g: Nonlinearity,
        lag: f64,
        #[serde(default)]
        component: usize,
    },
    /// `A·sup_{s ≤ t} |x(s)|^exponent`
    RunningSup { scale: Vec<Vec<f64>>, exponent: f64 },
    /// `factor·of`
    Scaled { factor: f64, of: Box<CoefSpec> },
    /// `Σ terms`
    Sum { terms: Vec<CoefSpec> },
}

/// Instantiates a spec; `horizon` is `T`, used only for declared constants.
pub fn build(spec: &CoefSpec, horizon: f64) -> Result<Coef> {
    Ok(match spec {
        CoefSpec::Constant { value } => Arc::new(Constant::new(Mat::from_rows(value)?)),
        CoefSpec::Zero { rows, cols } => {
            if *rows == 0 || *cols == 0 {
                return Err(Error::InvalidArgument("zero coefficient needs a positive shape".into()));
            }
            Arc::new(Constant::zero(*rows, *cols))
        }
        CoefSpec::Pointwise { g, scale } => Arc::new(Pointwise::new(Mat::from_rows(scale)?, *g)),
        CoefSpec::Integral { scale, outer, inner, component } => {
            Arc::new(Integral::new(Mat::from_rows(scale)?, *outer, *inner, *component, horizon))
        }
        CoefSpec::Delayed { scale, g, lag, component } => {
            if !(*lag > 0.0 && lag.is_finite()) {
                return Err(Error::out_of_range("lag", *lag, 0.0, f64::INFINITY));
            }
            Arc::new(Delayed::new(Mat::from_rows(scale)?, *g, *lag, *component))
        }
        CoefSpec::RunningSup { scale, exponent } => {
            if !(*exponent > 0.0 && *exponent <= 1.0) {
                return Err(Error::out_of_range("exponent", *exponent, 0.0, 1.0));
            }
            Arc::new(RunningSup::new(Mat::from_rows(scale)?, *exponent))
        }
        CoefSpec::Scaled { factor, of } => Arc::new(Scaled::new(*factor, build(of, horizon)?)),
        CoefSpec::Sum { terms } => Arc::new(Sum::new(
            terms.iter().map(|t| build(t, horizon)).collect::<Result<_>>()?,
        )?),
    })
}
