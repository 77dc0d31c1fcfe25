//! Hyperbolic coordinates `t + 2B = tau cosh z`, `x = tau sinh z`, the weight
//! `chi(z) = cosh(z)^-kappa`, and the complex amplitude
//! `alpha_j = e^{-i m_j tau} (v_j - (i/m_j) d_tau v_j)` with `u_j = chi v_j / sqrt(tau)`.

mod diagnostics;
mod extract;
mod ode;
mod probe;

pub use diagnostics::{
    energy_diagnostic, oscillatory_integral_check, slow_variation_check, slow_variation_series,
    SlowVariationReport,
};
pub use extract::{amplitude, extract_profile, reconstruction_residual, ProfileSource, ProfileTrajectory, Ray};
pub use ode::{integrate_profile_ode, lyapunov_series, OdeOptions};
pub use probe::{PointValues, ProbeRecorder};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("point (t = {t}, x = {x}) is outside the recorded run")]
    OutOfHorizon { t: f64, x: f64 },
    #[error("step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },
    #[error("sampling too coarse: spacing {spacing} exceeds {limit} for frequency {b}")]
    Resolution { spacing: f64, limit: f64, b: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// `chi(z) = cosh(z)^-kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightFunction<T> {
    kappa: T,
}

impl<T: Real> WeightFunction<T> {
    pub fn new(kappa: T) -> Result<Self, ProfileError> {
        if !(kappa >= T::one()) || !kappa.is_finite() {
            return Err(ProfileError::Chart(format!("kappa must be >= 1, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn chi(&self, z: T) -> T {
        z.cosh().powf(-self.kappa)
    }

    pub fn dchi(&self, z: T) -> T {
        -self.kappa * z.tanh() * self.chi(z)
    }

    /// Constant in `chi(z) <= C0 e^{-kappa |z|}`.
    pub fn c0(&self) -> T {
        lit::<T>(2.0).powf(self.kappa)
    }
}

impl<T: Real> Default for WeightFunction<T> {
    fn default() -> Self {
        Self { kappa: lit(2.0) }
    }
}

/// Hyperbolic chart attached to data supported in `[-B, B]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperbolicChart<T> {
    support_radius: T,
    tau0: T,
    z_max: T,
    z_count: usize,
    tau_ratio: T,
}

impl<T: Real> HyperbolicChart<T> {
    pub fn new(support_radius: T, tau0: T, z_max: T, z_count: usize) -> Result<Self, ProfileError> {
        if !(support_radius > T::zero()) {
            return Err(ProfileError::Chart(format!("support radius must be positive, got {support_radius}")));
        }
        if !(tau0 > T::one() + lit::<T>(2.0) * support_radius) {
            return Err(ProfileError::Chart(format!(
                "tau0 = {tau0} must exceed 1 + 2B = {}",
                T::one() + lit::<T>(2.0) * support_radius
            )));
        }
        if !(z_max >= T::zero()) || z_count == 0 {
            return Err(ProfileError::Chart("z grid must be non-empty with z_max >= 0".into()));
        }
        Ok(Self { support_radius, tau0, z_max, z_count, tau_ratio: lit(1.05) })
    }

    pub fn with_tau_ratio(mut self, ratio: T) -> Result<Self, ProfileError> {
        if !(ratio > T::one()) {
            return Err(ProfileError::Chart(format!("tau ratio must exceed 1, got {ratio}")));
        }
        self.tau_ratio = ratio;
        Ok(self)
    }

    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn tau0(&self) -> T {
        self.tau0
    }

    pub fn z_max(&self) -> T {
        self.z_max
    }

    pub fn tau_ratio(&self) -> T {
        self.tau_ratio
    }

    pub fn to_tx(&self, tau: T, z: T) -> (T, T) {
        (tau * z.cosh() - lit::<T>(2.0) * self.support_radius, tau * z.sinh())
    }

    pub fn from_tx(&self, t: T, x: T) -> Result<(T, T), ProfileError> {
        let s = t + lit::<T>(2.0) * self.support_radius;
        if !(x.abs() < s) {
            return Err(ProfileError::OutOfHorizon { t: to_f64(t), x: to_f64(x) });
        }
        Ok(((s * s - x * x).sqrt(), (x / s).atanh()))
    }

    pub fn z_nodes(&self) -> Vec<T> {
        if self.z_count == 1 {
            return vec![T::zero()];
        }
        let h = lit::<T>(2.0) * self.z_max / lit((self.z_count - 1) as f64);
        (0..self.z_count).map(|i| -self.z_max + h * lit(i as f64)).collect()
    }

    /// Geometric samples `tau0 r^n <= tau_max`.
    pub fn tau_samples(&self, tau_max: T) -> Vec<T> {
        let mut out = Vec::new();
        let mut tau = self.tau0;
        while tau <= tau_max * lit(1.0 + 1e-12) {
            out.push(tau);
            tau = tau * self.tau_ratio;
        }
        out
    }

    /// Largest `tau` reached on the ray `z` by time `t_final`.
    pub fn max_tau(&self, t_final: T, z: T) -> T {
        (t_final + lit::<T>(2.0) * self.support_radius) / z.cosh()
    }

    /// `(t, x)` for every `(tau, z)` pair, `tau`-major.
    pub fn queries(&self, taus: &[T], zs: &[T]) -> Vec<(T, T)> {
        taus.iter().flat_map(|&tau| zs.iter().map(move |&z| self.to_tx(tau, z))).collect()
    }
}
