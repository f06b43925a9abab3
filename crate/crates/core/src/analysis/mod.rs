//! Weighted L2 geometry on an interval: quadrature, inner products, norms and
//! running integrals.

mod cumulative;
mod quadrature;

pub use cumulative::{CumulativeIntegral, Integrand};
pub use quadrature::{gk21, integrate, integrate_with, Panel, QuadOptions, DEFAULT_MAX_SUBDIVISIONS};


use crate::expr::Expression;
use crate::wronskian::SmoothMap;
use crate::{Error, Result};

pub const DEFAULT_QUAD_TOL: f64 = 1e-11;

/// Points used when sampling the weight for admissibility.
const WEIGHT_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not converge within {limit} subdivisions (error estimate {error:e})")]
    SubdivisionLimit { limit: usize, error: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
}

/// `ρ(f, g) = ∫_a^b f g w dx`.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    a: f64,
    b: f64,
    weight: Expression,
    quad_tol: f64,
    max_subdivisions: usize,
}

impl InnerProduct {
    pub fn new(a: f64, b: f64, weight: Expression, quad_tol: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidConfig(format!("interval [{a}, {b}] must be finite with a < b")));
        }
        if !(quad_tol > 0.0 && quad_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("quad_tol must be positive, got {quad_tol}")));
        }
        for i in 0..WEIGHT_SAMPLES {
            let x = if i + 1 == WEIGHT_SAMPLES {
                b
            } else {
                a + (b - a) * i as f64 / (WEIGHT_SAMPLES - 1) as f64
            };
            let w = weight
                .eval(x)
                .map_err(|_| Error::Quadrature(QuadratureError::NonFiniteIntegrand { x }))?;
            if w < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "weight '{weight}' is negative at x = {x}"
                )));
            }
        }
        Ok(Self {
            a,
            b,
            weight,
            quad_tol,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        })
    }

    /// Unit weight on `[a, b]`.
    pub fn lebesgue(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Expression::constant(1.0), DEFAULT_QUAD_TOL)
    }

    pub fn with_tol(&self, quad_tol: f64) -> Self {
        Self {
            quad_tol,
            ..self.clone()
        }
    }

    pub fn with_max_subdivisions(&self, max_subdivisions: usize) -> Self {
        Self {
            max_subdivisions,
            ..self.clone()
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn weight(&self) -> &Expression {
        &self.weight
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn options(&self) -> QuadOptions {
        QuadOptions {
            tol: self.quad_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    /// `∫_a^b f w dx`.
    pub fn integrate_weighted(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        integrate_with(
            |x| Ok(f(x)? * self.weight.eval(x)?),
            self.a,
            self.b,
            &self.options(),
        )
    }

    pub fn inner(&self, f: &dyn SmoothMap, g: &dyn SmoothMap) -> Result<f64> {
        self.integrate_weighted(|x| Ok(f.value(x)? * g.value(x)?))
    }

    /// Induced norm; inadmissible (effectively zero) functions are an error.
    pub fn norm(&self, f: &dyn SmoothMap) -> Result<f64> {
        let norm_sq = self.integrate_weighted(|x| {
            let v = f.value(x)?;
            Ok(v * v)
        })?;
        if norm_sq <= self.quad_tol * (self.b - self.a) {
            return Err(Error::ZeroNorm { norm_sq });
        }
        Ok(norm_sq.sqrt())
    }

    /// `‖f - g‖`, which may legitimately be zero.
    pub fn distance(&self, f: &dyn SmoothMap, g: &dyn SmoothMap) -> Result<f64> {
        let d2 = self.integrate_weighted(|x| {
            let d = f.value(x)? - g.value(x)?;
            Ok(d * d)
        })?;
        Ok(d2.max(0.0).sqrt())
    }
}
