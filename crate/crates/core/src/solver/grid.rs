use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use super::SolverError;
use crate::scalar::{cis, lit, Real};

/// Uniform periodic grid on `[-L, L)` with `M` nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D<T> {
    half_length: T,
    points: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(half_length: T, points: usize) -> Result<Self, SolverError> {
        if !(half_length > T::zero()) || !half_length.is_finite() {
            return Err(SolverError::Grid(format!("half_length must be positive, got {half_length}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(SolverError::Grid(format!("points must be a power of two >= 4, got {points}")));
        }
        Ok(Self { half_length, points })
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> T {
        lit::<T>(2.0) * self.half_length / lit(self.points as f64)
    }

    pub fn node(&self, i: usize) -> T {
        -self.half_length + self.dx() * lit(i as f64)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Angular wavenumber of FFT bin `idx`; the Nyquist bin maps to zero.
    pub fn wavenumber(&self, idx: usize) -> T {
        let m = self.points;
        let s = if idx < m / 2 {
            idx as f64
        } else if idx == m / 2 {
            0.0
        } else {
            idx as f64 - m as f64
        };
        T::PI() * lit(s) / self.half_length
    }
}

/// FFT plans and spectral operators on a grid. Spectra are unnormalized
/// forward transforms: `f(x_j) = (1/M) sum_k f_k e^{2 pi i jk/M}`.
pub struct Spectral<T: Real> {
    grid: Grid1D<T>,
    k: Vec<T>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    fwd2: Arc<dyn Fft<T>>,
    inv2: Arc<dyn Fft<T>>,
}

impl<T: Real> Clone for Spectral<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            k: self.k.clone(),
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            fwd2: Arc::clone(&self.fwd2),
            inv2: Arc::clone(&self.inv2),
        }
    }
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: Grid1D<T>) -> Self {
        let m = grid.points();
        let mut planner = FftPlanner::new();
        Self {
            grid,
            k: (0..m).map(|i| grid.wavenumber(i)).collect(),
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
            fwd2: planner.plan_fft_forward(2 * m),
            inv2: planner.plan_fft_inverse(2 * m),
        }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.k
    }

    pub fn forward(&self, f: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.fwd.process(&mut buf);
        buf[self.grid.points() / 2] = Complex::zero();
        buf
    }

    pub fn inverse(&self, spec: &[Complex<T>]) -> Vec<T> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let scale = T::one() / lit(self.grid.points() as f64);
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Inverse transform of two Hermitian spectra with a single complex FFT.
    pub fn inverse_pair(&self, a: &[Complex<T>], b: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
        let i = Complex::new(T::zero(), T::one());
        let mut buf: Vec<Complex<T>> = a.iter().zip(b).map(|(x, y)| *x + i * *y).collect();
        self.inv.process(&mut buf);
        let scale = T::one() / lit(self.grid.points() as f64);
        (buf.iter().map(|c| c.re * scale).collect(), buf.iter().map(|c| c.im * scale).collect())
    }

    /// `ik f_k`, exact derivative of the trigonometric interpolant.
    pub fn ddx_spectrum(&self, spec: &[Complex<T>]) -> Vec<Complex<T>> {
        spec.iter().zip(&self.k).map(|(c, k)| Complex::new(-c.im * *k, c.re * *k)).collect()
    }

    pub fn derivative(&self, f: &[T]) -> Vec<T> {
        self.inverse(&self.ddx_spectrum(&self.forward(f)))
    }

    pub fn second_derivative(&self, f: &[T]) -> Vec<T> {
        let spec: Vec<Complex<T>> =
            self.forward(f).iter().zip(&self.k).map(|(c, k)| -*c * (*k * *k)).collect();
        self.inverse(&spec)
    }

    pub(crate) fn padded_scratch_len(&self) -> usize {
        self.inv2.get_inplace_scratch_len().max(self.fwd2.get_inplace_scratch_len())
    }

    pub(crate) fn inverse_padded_inplace(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.inv2.process_with_scratch(buf, scratch);
    }

    pub(crate) fn forward_padded_inplace(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.fwd2.process_with_scratch(buf, scratch);
    }

    pub(crate) fn padded_index(&self, idx: usize) -> Option<usize> {
        let m = self.grid.points();
        if idx < m / 2 {
            Some(idx)
        } else if idx == m / 2 {
            None
        } else {
            Some(idx + m)
        }
    }

    /// Values on the `2M` grid of one or two spectra.
    #[cfg(test)]
    pub(crate) fn to_padded(&self, a: &[Complex<T>], b: Option<&[Complex<T>]>) -> (Vec<T>, Option<Vec<T>>) {
        let m = self.grid.points();
        let mut buf = vec![Complex::<T>::zero(); 2 * m];
        let i = Complex::new(T::zero(), T::one());
        for idx in 0..m {
            if let Some(p) = self.padded_index(idx) {
                buf[p] = match b {
                    Some(b) => a[idx] + i * b[idx],
                    None => a[idx],
                };
            }
        }
        self.inv2.process(&mut buf);
        let scale = T::one() / lit(m as f64);
        let re = buf.iter().map(|c| c.re * scale).collect();
        let im = b.map(|_| buf.iter().map(|c| c.im * scale).collect());
        (re, im)
    }

    /// Truncated spectra (in the `M`-grid normalization) of one or two real
    /// fields on the `2M` grid.
    #[cfg(test)]
    pub(crate) fn from_padded(&self, a: &[T], b: Option<&[T]>) -> (Vec<Complex<T>>, Option<Vec<Complex<T>>>) {
        let m = self.grid.points();
        let mut buf: Vec<Complex<T>> = match b {
            Some(b) => a.iter().zip(b).map(|(x, y)| Complex::new(*x, *y)).collect(),
            None => a.iter().map(|x| Complex::new(*x, T::zero())).collect(),
        };
        self.fwd2.process(&mut buf);
        let half = lit::<T>(0.5);
        let quarter = lit::<T>(0.25);
        let mut out_a = vec![Complex::zero(); m];
        let mut out_b = b.map(|_| vec![Complex::zero(); m]);
        for idx in 0..m {
            let Some(p) = self.padded_index(idx) else { continue };
            match out_b.as_mut() {
                None => out_a[idx] = buf[p] * half,
                Some(ob) => {
                    let zp = buf[p];
                    let zm = buf[(2 * m - p) % (2 * m)].conj();
                    out_a[idx] = (zp + zm) * quarter;
                    let d = (zp - zm) * quarter;
                    ob[idx] = Complex::new(d.im, -d.re);
                }
            }
        }
        (out_a, out_b)
    }
}

/// Evaluates trigonometric interpolants at an arbitrary point by summing
/// over the half spectrum.
pub struct PointBasis<T> {
    // e^{i k (x + L)} for the non-negative bins below Nyquist
    basis: Vec<Complex<T>>,
    k: Vec<T>,
    inv_m: T,
}

impl<T: Real> PointBasis<T> {
    pub fn new(spectral: &Spectral<T>, x: T) -> Self {
        let grid = spectral.grid();
        let half = grid.points() / 2;
        let shift = x + grid.half_length();
        let k1 = spectral.wavenumbers()[1];
        let step = cis(k1 * shift);
        let mut basis = Vec::with_capacity(half);
        let mut cur = Complex::new(T::one(), T::zero());
        for idx in 0..half {
            if idx % 64 == 0 {
                cur = cis(k1 * lit(idx as f64) * shift);
            }
            basis.push(cur);
            cur = cur * step;
        }
        Self {
            basis,
            k: spectral.wavenumbers()[..half].to_vec(),
            inv_m: T::one() / lit(grid.points() as f64),
        }
    }

    pub fn value(&self, spec: &[Complex<T>]) -> T {
        let mut acc = T::zero();
        for idx in 1..self.basis.len() {
            acc += (spec[idx] * self.basis[idx]).re;
        }
        (spec[0].re + acc + acc) * self.inv_m
    }

    pub fn derivative(&self, spec: &[Complex<T>]) -> T {
        let mut acc = T::zero();
        for idx in 1..self.basis.len() {
            acc -= (spec[idx] * self.basis[idx]).im * self.k[idx];
        }
        (acc + acc) * self.inv_m
    }
}
