use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use super::{PointValues, ProfileError, Ray, WeightFunction};
use crate::scalar::{cis, lit, to_f64, Real};

fn simpson_step<T: Real>(
    f: &dyn Fn(T) -> Complex<T>,
    a: T,
    b: T,
    fa: Complex<T>,
    fm: Complex<T>,
    fb: Complex<T>,
    whole: Complex<T>,
    tol: T,
    depth: u32,
) -> Complex<T> {
    let m = (a + b) * lit(0.5);
    let lm = (a + m) * lit(0.5);
    let rm = (m + b) * lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let sixth = lit::<T>(1.0 / 6.0);
    let left = (fa + flm * lit::<T>(4.0) + fm) * ((m - a) * sixth);
    let right = (fm + frm * lit::<T>(4.0) + fb) * ((b - m) * sixth);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= lit::<T>(15.0) * tol {
        return left + right + delta / lit::<T>(15.0);
    }
    let half_tol = tol * lit(0.5);
    simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> Complex<T>, a: T, b: T, tol: T) -> Complex<T> {
    let fa = f(a);
    let fb = f(b);
    let fm = f((a + b) * lit(0.5));
    let whole = (fa + fm * lit::<T>(4.0) + fb) * ((b - a) / lit(6.0));
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Finite-difference slopes for cubic Hermite interpolation on a
/// non-uniform grid (three-point formula inside, one-sided at the ends).
fn slopes<T: Real>(x: &[T], y: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = x.len();
    if n < 2 {
        return vec![Complex::zero(); n];
    }
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let mut d = vec![Complex::zero(); n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        d[i] = (y[i + 1] - y[i]) * (h0 / (h1 * (h0 + h1))) + (y[i] - y[i - 1]) * (h1 / (h0 * (h0 + h1)));
    }
    let endpoint = |i0: usize, i1: usize, i2: usize| {
        let h0 = x[i1] - x[i0];
        let h1 = x[i2] - x[i1];
        // quadratic through three points, differentiated at x[i0]
        (y[i1] - y[i0]) * ((h0 + h1) / (h0 * h1)) - (y[i2] - y[i0]) * (h0 / (h1 * (h0 + h1)))
    };
    d[0] = endpoint(0, 1, 2);
    // mirror for the last point
    let (a, b, c) = (n - 1, n - 2, n - 3);
    let h0 = x[a] - x[b];
    let h1 = x[b] - x[c];
    d[a] = (y[a] - y[b]) * ((lit::<T>(2.0) * h0 + h1) / (h0 * (h0 + h1)))
        - (y[b] - y[c]) * (h0 / (h1 * (h0 + h1)));
    d
}

/// Partial integrals `I(tau) = int_{tau_0}^{tau} prod_l alpha_{k_l}^{(beta_l)} e^{i b s} / s ds`
/// at every sample of the ray, with `alpha^{(+)} = alpha`, `alpha^{(-)} = conj(alpha)`.
/// The product is interpolated by cubic Hermite splines and each interval is
/// integrated adaptively.
pub fn oscillatory_integral_check<T: Real>(
    ray: &Ray<T>,
    k: [usize; 4],
    beta: [i8; 4],
    b: T,
) -> Result<Vec<Complex<T>>, ProfileError> {
    let n = ray.len();
    if n < 2 {
        return Err(ProfileError::Input("need at least two samples".into()));
    }
    if let Some(&bad) = k.iter().find(|&&kk| kk >= ray.alphas[0].len()) {
        return Err(ProfileError::Input(format!("component index {bad} out of range")));
    }
    let spacing = ray.taus.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max);
    if b != T::zero() {
        let limit = T::TAU() / (lit::<T>(32.0) * b.abs());
        if spacing > limit {
            return Err(ProfileError::Resolution {
                spacing: to_f64(spacing),
                limit: to_f64(limit),
                b: to_f64(b),
            });
        }
    }
    let q: Vec<Complex<T>> = ray
        .alphas
        .iter()
        .map(|a| {
            k.iter().zip(beta).fold(Complex::new(T::one(), T::zero()), |acc, (&kk, s)| {
                acc * if s < 0 { a[kk].conj() } else { a[kk] }
            })
        })
        .collect();
    let d = slopes(&ray.taus, &q);
    let scale = q.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let tol = (scale * lit(1e-13)).max(T::min_positive_value());
    let mut out = Vec::with_capacity(n);
    let mut acc = Complex::zero();
    out.push(acc);
    for i in 0..n - 1 {
        let (x0, x1) = (ray.taus[i], ray.taus[i + 1]);
        let h = x1 - x0;
        let (q0, q1, d0, d1) = (q[i], q[i + 1], d[i], d[i + 1]);
        let integrand = |s: T| -> Complex<T> {
            let th = (s - x0) / h;
            let th2 = th * th;
            let th3 = th2 * th;
            let two = lit::<T>(2.0);
            let three = lit::<T>(3.0);
            let val = q0 * (two * th3 - three * th2 + T::one())
                + d0 * (h * (th3 - two * th2 + th))
                + q1 * (three * th2 - two * th3)
                + d1 * (h * (th3 - th2));
            val * cis(b * s) / s
        };
        acc += adaptive_simpson(&integrand, x0, x1, tol * h);
        out.push(acc);
    }
    Ok(out)
}

/// `E_0(tau) = (1/2) sum_j int |d_tau v_j|^2 + |d_z v_j / tau|^2 + m_j^2 |v_j|^2 dz`
/// from point values on a `tau`-major chart grid with uniform `zs`.
pub fn energy_diagnostic<T: Real>(
    values: &[PointValues<T>],
    taus: &[T],
    zs: &[T],
    weight: &WeightFunction<T>,
    masses: &[T],
) -> Result<Vec<(T, T)>, ProfileError> {
    let nz = zs.len();
    if values.len() != taus.len() * nz || nz < 3 {
        return Err(ProfileError::Input("energy needs at least three z nodes and a full grid".into()));
    }
    let dz = zs[1] - zs[0];
    let half = lit::<T>(0.5);
    let mut out = Vec::with_capacity(taus.len());
    for (ti, &tau) in taus.iter().enumerate() {
        let sq = tau.sqrt();
        let mut total = T::zero();
        for (j, &m) in masses.iter().enumerate() {
            let mut v = vec![T::zero(); nz];
            let mut vt = vec![T::zero(); nz];
            for (zi, &z) in zs.iter().enumerate() {
                let pv = &values[ti * nz + zi];
                let chi = weight.chi(z);
                v[zi] = sq * pv.u[j] / chi;
                vt[zi] = pv.u[j] / (lit::<T>(2.0) * sq * chi) + sq / chi * (z.cosh() * pv.ut[j] + z.sinh() * pv.ux[j]);
            }
            let vz = |i: usize| -> T {
                if i == 0 {
                    (-lit::<T>(3.0) * v[0] + lit::<T>(4.0) * v[1] - v[2]) / (lit::<T>(2.0) * dz)
                } else if i == nz - 1 {
                    (lit::<T>(3.0) * v[i] - lit::<T>(4.0) * v[i - 1] + v[i - 2]) / (lit::<T>(2.0) * dz)
                } else {
                    (v[i + 1] - v[i - 1]) / (lit::<T>(2.0) * dz)
                }
            };
            for i in 0..nz {
                let g = vz(i) / tau;
                let density = (vt[i] * vt[i] + g * g + m * m * v[i] * v[i]) * half;
                let w = if i == 0 || i == nz - 1 { half } else { T::one() };
                total += density * w * dz;
            }
        }
        out.push((tau, total));
    }
    Ok(out)
}

/// `tau |Delta alpha / Delta tau| / eps` by centered differences at interior samples.
pub fn slow_variation_series<T: Real>(ray: &Ray<T>, epsilon: T) -> Result<Vec<(T, T)>, ProfileError> {
    let n = ray.len();
    if n < 3 {
        return Err(ProfileError::Input("slow variation needs at least three samples".into()));
    }
    Ok((1..n - 1)
        .map(|i| {
            let dtau = ray.taus[i + 1] - ray.taus[i - 1];
            let diff: T = ray.alphas[i + 1]
                .iter()
                .zip(&ray.alphas[i - 1])
                .map(|(a, b)| (*a - *b).norm_sqr())
                .sum::<T>()
                .sqrt();
            (ray.taus[i], ray.taus[i] * diff / dtau / epsilon)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SlowVariationReport<T> {
    pub sup: T,
    /// maximum of the normalized derivative in each log-uniform window
    pub window_maxima: Vec<T>,
    /// largest ratio between consecutive window maxima
    pub growth_ratio: T,
    pub threshold: T,
    pub bounded: bool,
}

/// Splits the `tau` range into `windows` log-uniform windows and checks that
/// the windowed maxima of `tau |d alpha/d tau| / eps` do not grow by more
/// than `threshold` from one window to the next.
pub fn slow_variation_check<T: Real>(
    ray: &Ray<T>,
    epsilon: T,
    windows: usize,
    threshold: T,
) -> Result<SlowVariationReport<T>, ProfileError> {
    if windows == 0 {
        return Err(ProfileError::Input("need at least one window".into()));
    }
    let series = slow_variation_series(ray, epsilon)?;
    let lo = series.first().expect("non-empty").0.ln();
    let hi = series.last().expect("non-empty").0.ln();
    let width = (hi - lo) / lit(windows as f64);
    let mut maxima = vec![T::zero(); windows];
    for (tau, q) in &series {
        let idx = if width > T::zero() {
            (to_f64((tau.ln() - lo) / width) as usize).min(windows - 1)
        } else {
            0
        };
        maxima[idx] = maxima[idx].max(*q);
    }
    let mut ratio = T::zero();
    for w in maxima.windows(2) {
        let r = if w[0] > T::zero() {
            w[1] / w[0]
        } else if w[1] > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        ratio = ratio.max(r);
    }
    let sup = maxima.iter().fold(T::zero(), |a, b| a.max(*b));
    Ok(SlowVariationReport { sup, window_maxima: maxima, growth_ratio: ratio, threshold, bounded: ratio <= threshold })
}
