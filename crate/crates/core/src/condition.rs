//! Sampled verification of `Im <AY, F^{c,red}(omega, Y)> <= -C w0^k |Y|^4`
//! and a derivative-free search for the Hermitian matrix `A`.
//!
//! The pairing is `<P, Q> = sum conj(P_k) Q_k` (conjugate-linear in the first
//! slot). With it the dissipative two-mass example evaluates to
//! `-w0^3 (3 m1^4 |Y1|^4 + 3 m2^4 |Y2|^4 + 4 m1^2 m2^2 |Y1|^2 |Y2|^2)` for
//! `A = diag(m1^2, m2^2)`; the other convention flips the sign of the mixed
//! term and does not reproduce that identity.
//!
//! A pass is "no violation found at the recorded resolution", not a proof.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduced::{HyperbolaPoint, ReducedSystem};
use crate::scalar::{cis, cnorm, lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },
    #[error("unsupported exponent k = {0}; expected 0, 1 or 3")]
    BadExponent(u32),
    #[error("invalid sampling specification: {0}")]
    BadSampling(String),
}

/// Positive definite Hermitian `N x N` matrix with cached extreme eigenvalues.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionMatrix<T> {
    n: usize,
    entries: Vec<Complex<T>>,
    lambda_min: T,
    lambda_max: T,
}

impl<T: Real> ConditionMatrix<T> {
    /// Row-major entries.
    pub fn new(n: usize, entries: Vec<Complex<T>>) -> Result<Self, ConditionError> {
        if entries.len() != n * n || n == 0 {
            return Err(ConditionError::Shape { rows: entries.len() / n.max(1), cols: n, n });
        }
        let scale = entries.iter().map(|e| e.norm()).fold(T::zero(), T::max);
        let mut defect = T::zero();
        for r in 0..n {
            for c in 0..n {
                let d = (entries[r * n + c] - entries[c * n + r].conj()).norm();
                defect = defect.max(d);
            }
        }
        if defect > lit::<T>(1e-12) * scale.max(T::one()) {
            return Err(ConditionError::NotHermitian { defect: to_f64(defect) });
        }
        let (lambda_min, lambda_max) = hermitian_extreme_eigenvalues(n, &entries);
        if !(lambda_min > T::zero()) {
            return Err(ConditionError::NotPositiveDefinite { lambda_min: to_f64(lambda_min) });
        }
        Ok(Self { n, entries, lambda_min, lambda_max })
    }

    pub fn diagonal(values: &[T]) -> Result<Self, ConditionError> {
        let n = values.len();
        let mut entries = vec![Complex::zero(); n * n];
        for (k, v) in values.iter().enumerate() {
            entries[k * n + k] = Complex::new(*v, T::zero());
        }
        Self::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n]).expect("identity is positive definite")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex<T> {
        self.entries[r * self.n + c]
    }

    pub fn lambda_min(&self) -> T {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> T {
        self.lambda_max
    }

    pub fn apply(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|r| {
                (0..self.n)
                    .map(|c| self.entries[r * self.n + c] * y[c])
                    .fold(Complex::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// `<Y, AY>`, real for Hermitian `A`.
    pub fn quadratic_form(&self, y: &[Complex<T>]) -> T {
        pairing(y, &self.apply(y)).re
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|e| *e * c).collect(),
            lambda_min: self.lambda_min * c,
            lambda_max: self.lambda_max * c,
        }
    }
}

/// `sum conj(p_k) q_k`.
pub fn pairing<T: Real>(p: &[Complex<T>], q: &[Complex<T>]) -> Complex<T> {
    p.iter()
        .zip(q)
        .map(|(a, b)| a.conj() * b)
        .fold(Complex::zero(), |acc, v| acc + v)
}

/// Extreme eigenvalues of a Hermitian matrix via cyclic Jacobi on the real
/// symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`, whose spectrum is that
/// of `A` with every eigenvalue doubled.
fn hermitian_extreme_eigenvalues<T: Real>(n: usize, a: &[Complex<T>]) -> (T, T) {
    let d = 2 * n;
    let mut m = vec![T::zero(); d * d];
    for r in 0..n {
        for c in 0..n {
            let e = a[r * n + c];
            m[r * d + c] = e.re;
            m[(r + n) * d + (c + n)] = e.re;
            m[r * d + (c + n)] = -e.im;
            m[(r + n) * d + c] = e.im;
        }
    }
    // symmetrize away the Hermitian defect
    for r in 0..d {
        for c in (r + 1)..d {
            let s = (m[r * d + c] + m[c * d + r]) * lit(0.5);
            m[r * d + c] = s;
            m[c * d + r] = s;
        }
    }
    for _sweep in 0..100 {
        let mut off = T::zero();
        for r in 0..d {
            for c in (r + 1)..d {
                off += m[r * d + c] * m[r * d + c];
            }
        }
        if off.sqrt() <= T::epsilon() * lit(1e-2) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..d {
                    let akp = m[k * d + p];
                    let akq = m[k * d + q];
                    m[k * d + p] = cs * akp - sn * akq;
                    m[k * d + q] = sn * akp + cs * akq;
                }
                for k in 0..d {
                    let apk = m[p * d + k];
                    let aqk = m[q * d + k];
                    m[p * d + k] = cs * apk - sn * aqk;
                    m[q * d + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let diag = (0..d).map(|k| m[k * d + k]);
    diag.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `Im <AY, F^{c,red}(omega, Y)>`.
pub fn condition_value<T: Real>(
    a: &ConditionMatrix<T>,
    sys: &ReducedSystem<T>,
    w: &HyperbolaPoint<T>,
    y: &[Complex<T>],
) -> T {
    pairing(&a.apply(y), &sys.eval_reduced(w, y)).im
}

/// Which structural condition a report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `Im <AY, F> <= 0`
    NonPositive,
    /// `Im <AY, F> <= -C w0 |Y|^4`
    StrictK1,
    /// `Im <AY, F> <= -C w0^3 |Y|^4`
    StrictK3,
}

impl ConditionKind {
    pub fn from_exponent(k: u32) -> Result<Self, ConditionError> {
        match k {
            0 => Ok(Self::NonPositive),
            1 => Ok(Self::StrictK1),
            3 => Ok(Self::StrictK3),
            other => Err(ConditionError::BadExponent(other)),
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Self::NonPositive => 0,
            Self::StrictK1 => 1,
            Self::StrictK3 => 3,
        }
    }
}

/// Resolution of a sampled check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingSpec {
    /// rapidities are sampled uniformly in `[-z_max, z_max]`
    pub z_max: f64,
    pub z_count: usize,
    /// low-discrepancy points on the unit sphere of `C^N`, on top of the
    /// coordinate/phase extreme points
    pub sphere_count: usize,
    /// number of best samples refined by local polish (0 disables it)
    pub polish_starts: usize,
    pub polish_budget: usize,
    /// tolerance for `<= 0` on the normalized ratio
    pub tolerance: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            z_max: 5.0,
            z_count: 21,
            sphere_count: 2000,
            polish_starts: 4,
            polish_budget: 4000,
            tolerance: 1e-9,
        }
    }
}

impl SamplingSpec {
    /// Cheaper resolution used inside the matrix search objective.
    pub fn coarse() -> Self {
        Self {
            z_max: 5.0,
            z_count: 5,
            sphere_count: 64,
            polish_starts: 0,
            polish_budget: 0,
            tolerance: 1e-9,
        }
    }

    fn validate(&self) -> Result<(), ConditionError> {
        if !(self.z_max >= 0.0) || !self.z_max.is_finite() {
            return Err(ConditionError::BadSampling(format!("z_max = {}", self.z_max)));
        }
        if self.z_count == 0 {
            return Err(ConditionError::BadSampling("z_count must be positive".into()));
        }
        Ok(())
    }

    fn z_nodes<T: Real>(&self) -> Vec<T> {
        if self.z_count == 1 {
            return vec![T::zero()];
        }
        (0..self.z_count)
            .map(|i| {
                lit::<T>(-self.z_max + 2.0 * self.z_max * i as f64 / (self.z_count - 1) as f64)
            })
            .collect()
    }
}

/// The sample with the largest normalized ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorstPoint<T> {
    pub z: T,
    /// unit vector
    pub y: Vec<Complex<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport<T> {
    pub kind: ConditionKind,
    /// `max condition_value / (w0^k |Y|^4)` over samples and polish
    pub worst_ratio: T,
    pub worst_point: WorstPoint<T>,
    pub samples_used: usize,
    pub z_count: usize,
    pub sphere_count: usize,
    pub z_max: f64,
    /// `-worst_ratio` for `k in {1, 3}`
    pub c_tilde: Option<T>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Normalized ratio `condition_value / (w0^k |Y|^4)` at one point.
pub fn condition_ratio<T: Real>(
    a: &ConditionMatrix<T>,
    sys: &ReducedSystem<T>,
    k: u32,
    z: T,
    y: &[Complex<T>],
) -> T {
    let w = HyperbolaPoint::new(z);
    let norm2 = y.iter().map(|c| c.norm_sqr()).sum::<T>();
    condition_value(a, sys, &w, y) / (w.w0().powi(k as i32) * norm2 * norm2)
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    inv = out;
    inv
}

/// Unit vector from moduli-squared on the simplex and phases.
fn sphere_point<T: Real>(simplex_coords: &[f64], phases: &[f64]) -> Vec<Complex<T>> {
    let n = phases.len();
    let mut cuts: Vec<f64> = simplex_coords.to_vec();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut prev = 0.0;
    let mut s = Vec::with_capacity(n);
    for c in cuts.iter().chain(std::iter::once(&1.0)) {
        s.push(c - prev);
        prev = *c;
    }
    s.iter()
        .zip(phases)
        .map(|(sk, ph)| cis(lit::<T>(2.0 * std::f64::consts::PI * ph)) * lit::<T>(sk.sqrt()))
        .collect()
}

/// Deterministic sample set: coordinate vectors, pairwise combinations with
/// phases in `{1, i, -1, -i}`, equal-modulus phase patterns (for `N <= 5`),
/// then a Halton sequence pushed onto the sphere.
pub fn sphere_samples<T: Real>(n: usize, count: usize) -> Vec<Vec<Complex<T>>> {
    let mut out = Vec::new();
    let quarter = |q: usize| -> Complex<T> {
        cis(lit::<T>(std::f64::consts::FRAC_PI_2 * q as f64))
    };
    let inv_sqrt2 = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    for k in 0..n {
        let mut y = vec![Complex::zero(); n];
        y[k] = Complex::new(T::one(), T::zero());
        out.push(y);
    }
    for k in 0..n {
        for l in (k + 1)..n {
            for q in 0..4 {
                let mut y = vec![Complex::zero(); n];
                y[k] = Complex::new(inv_sqrt2, T::zero());
                y[l] = quarter(q) * inv_sqrt2;
                out.push(y);
            }
        }
    }
    if (3..=5).contains(&n) {
        let amp = T::one() / lit::<T>((n as f64).sqrt());
        let total = 4usize.pow(n as u32 - 1);
        for code in 0..total {
            let mut y = vec![Complex::new(amp, T::zero()); n];
            let mut c = code;
            for yk in y.iter_mut().skip(1) {
                *yk = quarter(c % 4) * amp;
                c /= 4;
            }
            out.push(y);
        }
    }
    let dims = 2 * n - 1;
    let primes = first_primes(dims);
    for i in 1..=count as u64 {
        let h: Vec<f64> = primes.iter().map(|&p| radical_inverse(i, p)).collect();
        out.push(sphere_point(&h[..n - 1], &h[n - 1..]));
    }
    out
}

/// Local maximization of the ratio over moduli, phases and `z` by compass
/// search with step halving.
fn polish<T: Real>(
    a: &ConditionMatrix<T>,
    sys: &ReducedSystem<T>,
    k: u32,
    z_max: T,
    start_z: T,
    start_y: &[Complex<T>],
    budget: usize,
) -> (T, T, Vec<Complex<T>>) {
    let n = start_y.len();
    let mut x: Vec<T> = Vec::with_capacity(2 * n + 1);
    x.extend(start_y.iter().map(|c| c.norm()));
    x.extend(start_y.iter().map(|c| c.arg()));
    x.push(start_z);
    let build = |x: &[T]| -> (T, Vec<Complex<T>>) {
        let mut y: Vec<Complex<T>> = (0..n).map(|i| cis(x[n + i]) * x[i]).collect();
        let norm = cnorm(&y);
        if norm > T::zero() {
            for c in y.iter_mut() {
                *c = *c / norm;
            }
        }
        (x[2 * n].max(-z_max).min(z_max), y)
    };
    let eval = |x: &[T]| -> T {
        let (z, y) = build(x);
        if cnorm(&y) == T::zero() {
            return T::neg_infinity();
        }
        condition_ratio(a, sys, k, z, &y)
    };
    let mut best = eval(&x);
    let mut steps: Vec<T> = (0..2 * n + 1)
        .map(|i| lit(if i < n { 0.1 } else if i < 2 * n { 0.3 } else { 0.25 }))
        .collect();
    let mut used = 0usize;
    let floor = lit::<T>(1e-10);
    while used < budget && steps.iter().any(|s| *s > floor) {
        let mut improved = false;
        for i in 0..x.len() {
            if steps[i] <= floor {
                continue;
            }
            for dir in [T::one(), -T::one()] {
                let mut trial = x.clone();
                trial[i] += dir * steps[i];
                if i == 2 * n {
                    trial[i] = trial[i].max(-z_max).min(z_max);
                }
                let v = eval(&trial);
                used += 1;
                if v > best {
                    best = v;
                    x = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s = *s * lit(0.5);
            }
        }
    }
    let (z, y) = build(&x);
    // re-evaluate on the stored point so the report reproduces exactly
    (condition_ratio(a, sys, k, z, &y), z, y)
}

/// Samples the normalized ratio, polishes the worst candidates and reports.
pub fn check_condition<T: Real>(
    a: &ConditionMatrix<T>,
    sys: &ReducedSystem<T>,
    k: u32,
    spec: &SamplingSpec,
) -> Result<ConditionReport<T>, ConditionError> {
    let kind = ConditionKind::from_exponent(k)?;
    spec.validate()?;
    let n = sys.n_components();
    if a.n() != n {
        return Err(ConditionError::Shape { rows: a.n(), cols: a.n(), n });
    }
    // re-validate the invariants of A
    let a = ConditionMatrix::new(n, a.entries().to_vec())?;
    let zs: Vec<T> = spec.z_nodes();
    let ys = sphere_samples::<T>(n, spec.sphere_count);
    let total = zs.len() * ys.len();
    let ratios: Vec<T> = (0..total)
        .into_par_iter()
        .map(|idx| condition_ratio(&a, sys, k, zs[idx / ys.len()], &ys[idx % ys.len()]))
        .collect();
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&i, &j| {
        ratios[j]
            .partial_cmp(&ratios[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let best_idx = order[0];
    let mut worst = (ratios[best_idx], zs[best_idx / ys.len()], ys[best_idx % ys.len()].clone());
    let z_max = lit::<T>(spec.z_max);
    let starts: Vec<usize> = order.iter().take(spec.polish_starts).copied().collect();
    let polished: Vec<(T, T, Vec<Complex<T>>)> = starts
        .par_iter()
        .map(|&idx| {
            polish(
                &a,
                sys,
                k,
                z_max,
                zs[idx / ys.len()],
                &ys[idx % ys.len()],
                spec.polish_budget,
            )
        })
        .collect();
    for cand in polished {
        if cand.0 > worst.0 {
            worst = cand;
        }
    }
    let (worst_ratio, z, y) = worst;
    let tol = lit::<T>(spec.tolerance);
    let (c_tilde, pass) = if k == 0 {
        (None, worst_ratio <= tol)
    } else {
        (Some(-worst_ratio), -worst_ratio > tol)
    };
    Ok(ConditionReport {
        kind,
        worst_ratio,
        worst_point: WorstPoint { z, y },
        samples_used: total,
        z_count: zs.len(),
        sphere_count: ys.len(),
        z_max: spec.z_max,
        c_tilde,
        tolerance: spec.tolerance,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    /// Nelder-Mead iterations per restart, per parameter
    pub iterations_per_param: usize,
    /// resolution of the objective
    pub objective: SamplingSpec,
    /// resolution of the final verification
    pub verify: SamplingSpec,
    /// try diagonal matrices before general Hermitian ones
    pub diagonal_first: bool,
    pub diagonal_only: bool,
    /// `A = L L^H + floor * Id`
    pub floor: f64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            iterations_per_param: 300,
            objective: SamplingSpec::coarse(),
            verify: SamplingSpec::default(),
            diagonal_first: true,
            diagonal_only: false,
            floor: 1e-3,
            seed: 0x6b67_7265_73,
        }
    }
}

/// Result of [`search_matrix`]. Matrices are normalized to smallest eigenvalue 1.
#[derive(Clone, Debug)]
pub enum SearchOutcome<T> {
    /// the matrix passes the verification check
    Found { matrix: ConditionMatrix<T>, report: ConditionReport<T> },
    /// the optimizer settled on a matrix that still violates the condition;
    /// `report.worst_point` is a point with positive excess
    Counterexample { matrix: ConditionMatrix<T>, report: ConditionReport<T> },
    /// iteration budget exhausted while still improving
    NotConverged { matrix: ConditionMatrix<T>, report: ConditionReport<T> },
}

impl<T> SearchOutcome<T> {
    pub fn matrix(&self) -> &ConditionMatrix<T> {
        match self {
            Self::Found { matrix, .. }
            | Self::Counterexample { matrix, .. }
            | Self::NotConverged { matrix, .. } => matrix,
        }
    }

    pub fn report(&self) -> &ConditionReport<T> {
        match self {
            Self::Found { report, .. }
            | Self::Counterexample { report, .. }
            | Self::NotConverged { report, .. } => report,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Self::Found { .. })
    }
}

struct Objective<'a, T> {
    sys: &'a ReducedSystem<T>,
    k: u32,
    n: usize,
    diagonal: bool,
    floor: f64,
    zs: Vec<T>,
    ys: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Objective<'_, T> {
    fn dim(&self) -> usize {
        if self.diagonal {
            self.n
        } else {
            self.n * self.n
        }
    }

    fn matrix(&self, p: &[f64]) -> Option<ConditionMatrix<T>> {
        let n = self.n;
        // lower-triangular L with real diagonal
        let mut l = vec![Complex::<f64>::zero(); n * n];
        let mut idx = n;
        for r in 0..n {
            l[r * n + r] = Complex::new(p[r], 0.0);
            if !self.diagonal {
                for c in 0..r {
                    l[r * n + c] = Complex::new(p[idx], p[idx + 1]);
                    idx += 2;
                }
            }
        }
        let mut entries = vec![Complex::<T>::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut s = Complex::<f64>::zero();
                for q in 0..n {
                    s += l[r * n + q] * l[c * n + q].conj();
                }
                if r == c {
                    s += Complex::new(self.floor, 0.0);
                }
                entries[r * n + c] = Complex::new(lit(s.re), lit(s.im));
            }
        }
        let a = ConditionMatrix::new(n, entries).ok()?;
        let inv = T::one() / a.lambda_min();
        Some(a.scaled(inv))
    }

    fn value(&self, p: &[f64]) -> f64 {
        let Some(a) = self.matrix(p) else {
            return f64::INFINITY;
        };
        let per_z = self.ys.len();
        let worst = (0..self.zs.len() * per_z)
            .into_par_iter()
            .map(|i| condition_ratio(&a, self.sys, self.k, self.zs[i / per_z], &self.ys[i % per_z]))
            .reduce(|| T::neg_infinity(), T::max);
        to_f64(worst)
    }
}

struct NelderMeadResult {
    x: Vec<f64>,
    f: f64,
    converged: bool,
}

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_iter: usize,
) -> NelderMeadResult {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1e-8 { step * v[i].abs().max(0.1) } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[d] - values[0]).abs();
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 1e-15 * (1.0 + values[0].abs()) && diameter <= 1e-9 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|v| v[i]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    simplex[i] = best.iter().zip(&simplex[i]).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let (ibest, fbest) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    NelderMeadResult { x: simplex[ibest].clone(), f: fbest, converged }
}

/// Searches `A = L L^H + floor Id` minimizing the sampled worst ratio
/// normalized by the smallest eigenvalue of `A`.
pub fn search_matrix<T: Real>(
    sys: &ReducedSystem<T>,
    k: u32,
    options: &SearchOptions,
) -> Result<SearchOutcome<T>, ConditionError> {
    ConditionKind::from_exponent(k)?;
    options.objective.validate()?;
    options.verify.validate()?;
    let n = sys.n_components();
    let phases: Vec<bool> = if options.diagonal_only {
        vec![true]
    } else if options.diagonal_first {
        vec![true, false]
    } else {
        vec![false]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut last: Option<SearchOutcome<T>> = None;
    for diagonal in phases {
        let obj = Objective {
            sys,
            k,
            n,
            diagonal,
            floor: options.floor,
            zs: options.objective.z_nodes(),
            ys: sphere_samples(n, options.objective.sphere_count),
        };
        let dim = obj.dim();
        let f = |p: &[f64]| obj.value(p);
        let max_iter = options.iterations_per_param * dim;
        let mut start: Vec<f64> = vec![0.0; dim];
        for v in start.iter_mut().take(n) {
            *v = 1.0;
        }
        let mut best = nelder_mead(&f, &start, 0.5, max_iter);
        let mut converged = best.converged;
        for _ in 0..options.restarts {
            // alternate between polishing the incumbent and a fresh random start
            let restart_from_best = nelder_mead(&f, &best.x, 0.25, max_iter);
            let random_start: Vec<f64> = (0..dim)
                .map(|i| if i < n { rng.gen_range(0.2..3.0) } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let fresh = nelder_mead(&f, &random_start, 0.5, max_iter);
            let previous = best.f;
            for cand in [restart_from_best, fresh] {
                if cand.f < best.f {
                    best = cand;
                }
            }
            converged = best.converged || (previous - best.f).abs() <= 1e-6 * (1.0 + best.f.abs());
        }
        let matrix = obj.matrix(&best.x).expect("optimizer keeps A positive definite");
        let report = check_condition(&matrix, sys, k, &options.verify)?;
        let outcome = if report.pass {
            SearchOutcome::Found { matrix, report }
        } else if converged && report.worst_ratio > T::zero() {
            SearchOutcome::Counterexample { matrix, report }
        } else if converged && k > 0 {
            // strict condition fails only through the size of C-tilde
            SearchOutcome::Counterexample { matrix, report }
        } else {
            SearchOutcome::NotConverged { matrix, report }
        };
        if outcome.is_found() {
            return Ok(outcome);
        }
        last = Some(outcome);
    }
    Ok(last.expect("at least one search phase"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_hermitian_2x2() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let a = ConditionMatrix::<f64>::new(
            2,
            vec![
                Complex::new(2.0, 0.0),
                Complex::new(0.0, 1.0),
                Complex::new(0.0, -1.0),
                Complex::new(2.0, 0.0),
            ],
        )
        .unwrap();
        assert!((a.lambda_min() - 1.0).abs() < 1e-13);
        assert!((a.lambda_max() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian_and_indefinite() {
        let not_h = ConditionMatrix::new(
            2,
            vec![
                Complex::new(1.0, 0.0),
                Complex::new(0.5, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
            ],
        );
        assert!(matches!(not_h, Err(ConditionError::NotHermitian { .. })));
        let indef = ConditionMatrix::<f64>::diagonal(&[1.0, -2.0]);
        assert!(matches!(indef, Err(ConditionError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rayleigh_bounds_on_samples() {
        let a = ConditionMatrix::new(
            3,
            vec![
                Complex::new(4.0, 0.0),
                Complex::new(1.0, 0.5),
                Complex::new(0.0, 0.2),
                Complex::new(1.0, -0.5),
                Complex::new(3.0, 0.0),
                Complex::new(0.3, 0.0),
                Complex::new(0.0, -0.2),
                Complex::new(0.3, 0.0),
                Complex::new(2.0, 0.0),
            ],
        )
        .unwrap();
        for y in sphere_samples::<f64>(3, 200) {
            let q = a.quadratic_form(&y);
            assert!(q >= a.lambda_min() - 1e-12 && q <= a.lambda_max() + 1e-12);
        }
    }

    #[test]
    fn sphere_samples_are_unit() {
        for y in sphere_samples::<f64>(4, 100) {
            assert!((cnorm(&y) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_exponent_rejected() {
        assert_eq!(ConditionKind::from_exponent(2), Err(ConditionError::BadExponent(2)));
    }

    use crate::algebra::{CubicNonlinearity, CubicTerm, Factor, MassVector};

    fn system(masses: &[i64], terms: Vec<CubicTerm>) -> ReducedSystem<f64> {
        let f = CubicNonlinearity::new(masses.len(), terms).unwrap();
        ReducedSystem::new(MassVector::from_integers(masses).unwrap(), f).unwrap()
    }

    fn dissipative() -> ReducedSystem<f64> {
        let t = |target, a, b, c, coeff| {
            CubicTerm::new(target, [Factor::dt(a), Factor::dt(b), Factor::dt(c)], coeff)
        };
        system(
            &[1, 3],
            vec![
                t(0, 0, 0, 0, -1.0),
                t(0, 1, 1, 0, -1.0),
                t(0, 0, 0, 1, -1.0),
                t(1, 0, 0, 1, -1.0),
                t(1, 1, 1, 1, -1.0),
                t(1, 0, 0, 0, 1.0),
            ],
        )
    }

    fn four_wave(c: [f64; 4]) -> ReducedSystem<f64> {
        let u = Factor::u;
        let terms = vec![
            CubicTerm::new(0, [u(1), u(2), u(3)], c[0]),
            CubicTerm::new(1, [u(2), u(3), u(0)], c[1]),
            CubicTerm::new(2, [u(3), u(0), u(1)], c[2]),
            CubicTerm::new(3, [u(0), u(1), u(2)], c[3]),
        ];
        let terms = terms.into_iter().filter(|t| t.coeff != 0.0).collect();
        system(&[1, 2, 3, 6], terms)
    }

    #[test]
    fn two_mass_quadratic_form_vanishes() {
        let sys = system(
            &[1, 3],
            vec![
                CubicTerm::new(0, [Factor::u(0), Factor::u(0), Factor::u(1)], 1.0),
                CubicTerm::new(1, [Factor::u(0); 3], 1.0),
            ],
        );
        let a = ConditionMatrix::diagonal(&[1.0, 3.0]).unwrap();
        let r = check_condition(&a, &sys, 0, &SamplingSpec::default()).unwrap();
        assert!(r.pass);
        assert!(r.worst_ratio.abs() <= 1e-12, "{}", r.worst_ratio);
    }

    #[test]
    fn four_wave_form_vanishes() {
        let sys = four_wave([1.0; 4]);
        let a = ConditionMatrix::diagonal(&[1.0 / 3.0, 2.0 / 3.0, 1.0, 6.0]).unwrap();
        let r = check_condition(&a, &sys, 0, &SamplingSpec::default()).unwrap();
        assert!(r.pass);
        assert!(r.worst_ratio.abs() <= 1e-12, "{}", r.worst_ratio);
    }

    #[test]
    fn dissipative_explicit_quartic() {
        let sys = dissipative();
        let a = ConditionMatrix::diagonal(&[1.0, 9.0]).unwrap();
        for (z, y) in [(0.3, [Complex::new(0.6, 0.2), Complex::new(-0.1, 0.7)]), (-1.1, [Complex::new(0.0, 1.0), Complex::new(0.5, -0.5)])] {
            let (s, t) = (y[0].norm_sqr(), y[1].norm_sqr());
            let w0 = f64::cosh(z);
            let expected = -w0.powi(3) * (3.0 * s * s + 243.0 * t * t + 36.0 * s * t);
            let got = condition_value(&a, &sys, &HyperbolaPoint::new(z), &y);
            assert!((got - expected).abs() < 1e-12 * expected.abs(), "{got} {expected}");
        }
    }

    #[test]
    fn dissipative_strict_constant() {
        let sys = dissipative();
        let a = ConditionMatrix::diagonal(&[1.0, 9.0]).unwrap();
        let r = check_condition(&a, &sys, 3, &SamplingSpec::default()).unwrap();
        assert!(r.pass);
        assert!((r.c_tilde.unwrap() - 3.0).abs() < 1e-9, "{:?}", r.c_tilde);
    }

    #[test]
    fn search_finds_dissipative_matrix() {
        let sys = dissipative();
        let out = search_matrix(&sys, 3, &SearchOptions::default()).unwrap();
        assert!(out.is_found());
        assert!(out.report().c_tilde.unwrap() >= 2.9);
        assert!((out.matrix().lambda_min() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_coupling_four_wave_has_certificate() {
        let sys = four_wave([0.0, 0.0, 0.0, 1.0]);
        let out = search_matrix(&sys, 0, &SearchOptions::default()).unwrap();
        let SearchOutcome::Counterexample { matrix, report } = out else {
            panic!("expected a counterexample, got {:?}", out.report().worst_ratio);
        };
        let v = condition_value(&matrix, &sys, &HyperbolaPoint::new(report.worst_point.z), &report.worst_point.y);
        assert!(v > 0.0);
    }
}
