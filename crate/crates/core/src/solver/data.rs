use serde::{Deserialize, Serialize};

use super::{FieldState, Grid1D, SolverError};
use crate::scalar::{lit, Real};

/// Compactly supported shape function on `[-B, B]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Zero,
    /// `exp(1/((x/B)^2 - 1))` inside the support
    Bump,
    /// `exp(-x^2/(2 sigma^2))` shifted down by its value at `|x| = B` and
    /// clipped there
    TruncatedGaussian { sigma: f64 },
}

impl Shape {
    pub fn eval(&self, x: f64, radius: f64) -> f64 {
        if x.abs() >= radius {
            return 0.0;
        }
        match *self {
            Shape::Zero => 0.0,
            Shape::Bump => {
                let r = x / radius;
                (1.0 / (r * r - 1.0)).exp()
            }
            Shape::TruncatedGaussian { sigma } => {
                let g = |y: f64| (-y * y / (2.0 * sigma * sigma)).exp();
                g(x) - g(radius)
            }
        }
    }

    /// Height subtracted by the truncation (zero for the other shapes).
    pub fn truncation_level(&self, radius: f64) -> f64 {
        match *self {
            Shape::TruncatedGaussian { sigma } => (-radius * radius / (2.0 * sigma * sigma)).exp(),
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentData {
    pub f: Shape,
    #[serde(default = "one")]
    pub f_amplitude: f64,
    pub g: Shape,
    #[serde(default = "one")]
    pub g_amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl ComponentData {
    /// `u(0) = bump`, `ut(0) = 0`.
    pub fn bump() -> Self {
        Self { f: Shape::Bump, f_amplitude: 1.0, g: Shape::Zero, g_amplitude: 1.0 }
    }

    pub fn zero() -> Self {
        Self { f: Shape::Zero, f_amplitude: 1.0, g: Shape::Zero, g_amplitude: 1.0 }
    }
}

/// `u_j(0) = eps f_j`, `ut_j(0) = eps g_j` with `f_j, g_j` supported in `[-B, B]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub epsilon: f64,
    pub support_radius: f64,
    pub components: Vec<ComponentData>,
}

impl CauchyData {
    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SolverError::Data(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.support_radius > 0.0) || !self.support_radius.is_finite() {
            return Err(SolverError::Data(format!(
                "support_radius must be positive, got {}",
                self.support_radius
            )));
        }
        if self.components.len() != n {
            return Err(SolverError::Dimension { expected: n, got: self.components.len() });
        }
        for c in &self.components {
            for s in [c.f, c.g] {
                if let Shape::TruncatedGaussian { sigma } = s {
                    if !(sigma > 0.0) {
                        return Err(SolverError::Data(format!("gaussian sigma must be positive, got {sigma}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sample<T: Real>(&self, grid: &Grid1D<T>) -> Result<FieldState<T>, SolverError> {
        let n = self.components.len();
        self.validate(n)?;
        let m = grid.points();
        let mut u = vec![T::zero(); n * m];
        let mut ut = vec![T::zero(); n * m];
        for (j, c) in self.components.iter().enumerate() {
            for i in 0..m {
                let x = crate::scalar::to_f64(grid.node(i));
                u[j * m + i] = lit(self.epsilon * c.f_amplitude * c.f.eval(x, self.support_radius));
                ut[j * m + i] = lit(self.epsilon * c.g_amplitude * c.g.eval(x, self.support_radius));
            }
        }
        FieldState::new(T::zero(), n, m, u, ut)
    }
}
