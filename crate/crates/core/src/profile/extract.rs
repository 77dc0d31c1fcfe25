use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::{PointValues, ProfileError, WeightFunction};
use crate::scalar::{cis, lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    PdeExtracted,
    OdeIntegrated,
}

/// Amplitude samples along one ray `z = const`, `tau` increasing.
#[derive(Clone, Debug, Serialize)]
pub struct Ray<T> {
    pub z: T,
    pub taus: Vec<T>,
    pub alphas: Vec<Vec<Complex<T>>>,
    /// interpolated `u` at each sample (PDE-extracted rays only)
    #[serde(skip)]
    pub u: Option<Vec<Vec<T>>>,
}

impl<T: Real> Ray<T> {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// `|alpha|` at each sample.
    pub fn norms(&self) -> Vec<T> {
        self.alphas.iter().map(|a| crate::scalar::cnorm(a)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileTrajectory<T> {
    pub source: ProfileSource,
    pub kappa: T,
    pub masses: Vec<T>,
    pub rays: Vec<Ray<T>>,
}

/// `alpha_j` from `u_j, d_t u_j, d_x u_j` at chart point `(tau, z)`.
pub fn amplitude<T: Real>(mass: T, chi: T, tau: T, z: T, u: T, ut: T, ux: T) -> Complex<T> {
    let sq = tau.sqrt();
    let v = sq * u / chi;
    let v_tau = u / (lit::<T>(2.0) * sq * chi) + sq / chi * (z.cosh() * ut + z.sinh() * ux);
    cis(-mass * tau) * Complex::new(v, -v_tau / mass)
}

/// Builds one ray per `z` from point values laid out `tau`-major as produced
/// by [`HyperbolicChart::queries`].
pub fn extract_profile<T: Real>(
    values: &[PointValues<T>],
    taus: &[T],
    zs: &[T],
    weight: &WeightFunction<T>,
    masses: &[T],
) -> Result<ProfileTrajectory<T>, ProfileError> {
    if values.len() != taus.len() * zs.len() {
        return Err(ProfileError::Input(format!(
            "{} point values for a {}x{} chart grid",
            values.len(),
            taus.len(),
            zs.len()
        )));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ProfileError::Input("tau samples must increase strictly".into()));
    }
    let nz = zs.len();
    let rays = zs
        .par_iter()
        .enumerate()
        .map(|(zi, &z)| {
            let chi = weight.chi(z);
            let mut alphas = Vec::with_capacity(taus.len());
            let mut us = Vec::with_capacity(taus.len());
            for (ti, &tau) in taus.iter().enumerate() {
                let pv = &values[ti * nz + zi];
                alphas.push(
                    masses
                        .iter()
                        .enumerate()
                        .map(|(j, &m)| amplitude(m, chi, tau, z, pv.u[j], pv.ut[j], pv.ux[j]))
                        .collect(),
                );
                us.push(pv.u.clone());
            }
            Ray { z, taus: taus.to_vec(), alphas, u: Some(us) }
        })
        .collect();
    Ok(ProfileTrajectory {
        source: ProfileSource::PdeExtracted,
        kappa: weight.kappa(),
        masses: masses.to_vec(),
        rays,
    })
}

/// `max |chi/sqrt(tau) Re(alpha_j e^{i m_j tau}) - u_j|` over PDE-extracted samples.
pub fn reconstruction_residual<T: Real>(traj: &ProfileTrajectory<T>, weight: &WeightFunction<T>) -> T {
    let mut worst = T::zero();
    for ray in &traj.rays {
        let Some(us) = &ray.u else { continue };
        let chi = weight.chi(ray.z);
        for ((tau, alpha), u) in ray.taus.iter().zip(&ray.alphas).zip(us) {
            for (j, m) in traj.masses.iter().enumerate() {
                let rec = chi / tau.sqrt() * (alpha[j] * cis(*m * *tau)).re;
                worst = worst.max((rec - u[j]).abs());
            }
        }
    }
    worst
}
