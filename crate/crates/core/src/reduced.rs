//! Reduced nonlinearity `F^{c,red}(omega, Y)` and the non-resonant remainder of
//! the profile equation.
//!
//! Every monomial `C (d^I u_a1)(d^J u_a2)(d^K u_a3)` is compiled once per sign
//! triple. Substituting `u_k -> 1`, `ut_k -> i w0 m_k`, `ux_k -> -i w1 m_k`
//! factor by factor gives
//!
//! ```text
//! C * i^(n_t + n_x) * (-1)^n_x * w0^n_t * w1^n_x * prod(m over differentiated factors)
//! ```
//!
//! so the `omega` dependence reduces to two integer powers and a power of `i`.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{
    resonance_table, CubicNonlinearity, CubicTerm, Derivative, MassVector, ResonanceTable,
    SignTriple,
};
use crate::scalar::{cis, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReducedError {
    #[error("nonlinearity has {nonlinearity} components but {masses} masses were given")]
    DimensionMismatch { masses: usize, nonlinearity: usize },
    #[error("({w0}, {w1}) is not on the upper unit hyperbola")]
    NotOnHyperbola { w0: f64, w1: f64 },
}

/// A point `(cosh z, sinh z)` of the upper unit hyperbola.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolaPoint<T> {
    z: T,
    w0: T,
    w1: T,
}

impl<T: Real> HyperbolaPoint<T> {
    pub fn new(z: T) -> Self {
        Self { z, w0: z.cosh(), w1: z.sinh() }
    }

    /// Accepts `(w0, w1)` when `w0 > 0` and `w0^2 - w1^2 = 1` to `1e-12` relative.
    pub fn from_omega(w0: T, w1: T) -> Result<Self, ReducedError> {
        let defect = (w0 * w0 - w1 * w1 - T::one()).abs();
        if w0 <= T::zero() || defect > lit::<T>(1e-12) * (w0 * w0) {
            return Err(ReducedError::NotOnHyperbola {
                w0: w0.to_f64().unwrap_or(f64::NAN),
                w1: w1.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { z: w1.asinh(), w0, w1 })
    }

    pub fn z(&self) -> T {
        self.z
    }
    pub fn w0(&self) -> T {
        self.w0
    }
    pub fn w1(&self) -> T {
        self.w1
    }
}

/// `C * i^p * (-1)^n_x * w0^n_t * w1^n_x * prod(m)` split into its parts.
#[derive(Clone, Copy, Debug)]
struct Substitution {
    real_scale: f64,
    ipow: u8,
    pow_w0: i32,
    pow_w1: i32,
}

fn substitution(term: &CubicTerm, masses: &[f64]) -> Substitution {
    let mut scale = term.coeff;
    let (mut n_t, mut n_x) = (0, 0);
    for fac in &term.factors {
        match fac.deriv {
            Derivative::None => {}
            Derivative::Dt => {
                n_t += 1;
                scale *= masses[fac.component];
            }
            Derivative::Dx => {
                n_x += 1;
                scale *= -masses[fac.component];
            }
        }
    }
    Substitution {
        real_scale: scale,
        ipow: ((n_t + n_x) % 4) as u8,
        pow_w0: n_t,
        pow_w1: n_x,
    }
}

fn ipow<T: Real>(p: u8) -> Complex<T> {
    match p % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

fn omega_factor<T: Real>(w: &HyperbolaPoint<T>, pow_w0: i32, pow_w1: i32) -> T {
    w.w0.powi(pow_w0) * w.w1.powi(pow_w1)
}

/// `Omega(z) = (1/8) F_{j,a}^{I,J,K}(1, i w0 m, -i w1 m)` for a single monomial.
pub fn omega_coefficient<T: Real>(
    term: &CubicTerm,
    masses: &MassVector,
    w: &HyperbolaPoint<T>,
) -> Complex<T> {
    let m: Vec<f64> = masses.to_real();
    let s = substitution(term, &m);
    ipow::<T>(s.ipow) * (lit::<T>(s.real_scale / 8.0) * omega_factor(w, s.pow_w0, s.pow_w1))
}

#[derive(Clone, Debug)]
struct CompiledMonomial<T> {
    target: usize,
    comps: [usize; 3],
    signs: SignTriple,
    /// `C (-1)^n_x prod(m) prod(s_l^{|I_l|})`
    scale: T,
    ipow: u8,
    pow_w0: i32,
    pow_w1: i32,
    /// `s . m_a - m_j`, zero on resonant monomials.
    detuning: T,
}

impl<T: Real> CompiledMonomial<T> {
    fn product(&self, y: &[Complex<T>]) -> Complex<T> {
        let mut p = Complex::new(self.scale, T::zero());
        for l in 0..3 {
            let c = y[self.comps[l]];
            p = p * if self.signs.conj(l) { c.conj() } else { c };
        }
        p
    }

    fn coefficient(&self, w: &HyperbolaPoint<T>) -> Complex<T> {
        ipow::<T>(self.ipow) * omega_factor(w, self.pow_w0, self.pow_w1)
    }
}

/// Masses, nonlinearity and resonance table bundled with the compiled
/// per-sign-triple monomials of both the resonant and non-resonant parts.
#[derive(Clone, Debug)]
pub struct ReducedSystem<T> {
    masses: MassVector,
    masses_real: Vec<T>,
    nonlinearity: CubicNonlinearity,
    table: ResonanceTable,
    resonant: Vec<CompiledMonomial<T>>,
    nonresonant: Vec<CompiledMonomial<T>>,
}

impl<T: Real> ReducedSystem<T> {
    pub fn new(masses: MassVector, nonlinearity: CubicNonlinearity) -> Result<Self, ReducedError> {
        if masses.len() != nonlinearity.n_components() {
            return Err(ReducedError::DimensionMismatch {
                masses: masses.len(),
                nonlinearity: nonlinearity.n_components(),
            });
        }
        let table = resonance_table(&masses);
        let m64: Vec<f64> = masses.to_real();
        let mut resonant = Vec::new();
        let mut nonresonant = Vec::new();
        for term in nonlinearity.terms() {
            let a = term.indices();
            let sub = substitution(term, &m64);
            let compile = |signs: SignTriple| {
                let mut scale = sub.real_scale;
                let mut phase = -m64[term.target];
                for l in 0..3 {
                    let s = f64::from(signs.sign(l));
                    if term.factors[l].deriv.order() == 1 {
                        scale *= s;
                    }
                    phase += s * m64[a[l]];
                }
                CompiledMonomial {
                    target: term.target,
                    comps: a,
                    signs,
                    scale: lit(scale),
                    ipow: sub.ipow,
                    pow_w0: sub.pow_w0,
                    pow_w1: sub.pow_w1,
                    detuning: lit(phase),
                }
            };
            for s in table.resonant(term.target, a) {
                let mut c = compile(s);
                c.detuning = T::zero();
                resonant.push(c);
            }
            for s in table.nonresonant(term.target, a) {
                nonresonant.push(compile(s));
            }
        }
        Ok(Self {
            masses_real: masses.to_real(),
            masses,
            nonlinearity,
            table,
            resonant,
            nonresonant,
        })
    }

    pub fn n_components(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &MassVector {
        &self.masses
    }

    pub fn masses_real(&self) -> &[T] {
        &self.masses_real
    }

    pub fn nonlinearity(&self) -> &CubicNonlinearity {
        &self.nonlinearity
    }

    pub fn table(&self) -> &ResonanceTable {
        &self.table
    }

    /// `F^{c,red}(omega, Y)`.
    pub fn eval_reduced(&self, w: &HyperbolaPoint<T>, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.n_components()];
        for mono in &self.resonant {
            out[mono.target] = out[mono.target] + mono.coefficient(w) * mono.product(y);
        }
        for (o, m) in out.iter_mut().zip(&self.masses_real) {
            *o = *o / *m;
        }
        out
    }

    /// Resonant part written with the `Omega` coefficients,
    /// `sum_a sum_{s in S} Omega s^{|I|} Y^(s)`. Equals `(m_j / 8) F_j^{c,red}`.
    pub fn resonant_omega_sum(&self, w: &HyperbolaPoint<T>, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let eighth = lit::<T>(0.125);
        let mut out = vec![Complex::zero(); self.n_components()];
        for mono in &self.resonant {
            out[mono.target] = out[mono.target] + mono.coefficient(w) * mono.product(y) * eighth;
        }
        out
    }

    /// Non-resonant term `S_j(tau, z)` of the profile equation evaluated with
    /// `Y` in place of the amplitude; `chi2` is `chi(z)^2`.
    pub fn nonresonant_term(
        &self,
        w: &HyperbolaPoint<T>,
        y: &[Complex<T>],
        tau: T,
        chi2: T,
    ) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.n_components()];
        for mono in &self.nonresonant {
            let phase = cis(mono.detuning * tau);
            out[mono.target] = out[mono.target] + mono.coefficient(w) * mono.product(y) * phase;
        }
        let eighth = lit::<T>(0.125);
        for (o, m) in out.iter_mut().zip(&self.masses_real) {
            // -(i chi2 / (m_j tau)) * (1/8) * sum
            let pref = Complex::new(T::zero(), -chi2 * eighth / (*m * tau));
            *o = pref * *o;
        }
        out
    }

    /// Symbolic listing of `F^{c,red}`, merged and sorted deterministically.
    pub fn symbolic(&self) -> Vec<SymbolicTerm> {
        let m64: Vec<f64> = self.masses.to_real();
        let mut terms: Vec<SymbolicTerm> = Vec::new();
        for mono in &self.resonant {
            let unit = ipow::<f64>(mono.ipow);
            let (value, imaginary) = if unit.im == 0.0 {
                (unit.re, false)
            } else {
                (unit.im, true)
            };
            let mut factors: Vec<(usize, bool)> =
                (0..3).map(|l| (mono.comps[l], mono.signs.conj(l))).collect();
            factors.sort();
            let coeff = value * mono.scale.to_f64().unwrap_or(f64::NAN) / m64[mono.target];
            let key = SymbolicTerm {
                target: mono.target,
                coeff,
                imaginary,
                pow_w0: mono.pow_w0,
                pow_w1: mono.pow_w1,
                factors,
            };
            match terms.iter_mut().find(|t| t.same_monomial(&key)) {
                Some(t) => t.coeff += key.coeff,
                None => terms.push(key),
            }
        }
        terms.retain(|t| t.coeff.abs() > 1e-300);
        terms.sort_by(|a, b| {
            (a.target, &a.factors, a.imaginary, a.pow_w0, a.pow_w1)
                .cmp(&(b.target, &b.factors, b.imaginary, b.pow_w0, b.pow_w1))
        });
        terms
    }
}

/// One merged monomial of `F_j^{c,red}`:
/// `coeff * (i if imaginary) * w0^pow_w0 * w1^pow_w1 * prod(Y_k or conj(Y_k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicTerm {
    pub target: usize,
    pub coeff: f64,
    pub imaginary: bool,
    pub pow_w0: i32,
    pub pow_w1: i32,
    /// `(component, conjugated)`, sorted.
    pub factors: Vec<(usize, bool)>,
}

impl SymbolicTerm {
    fn same_monomial(&self, other: &Self) -> bool {
        self.target == other.target
            && self.imaginary == other.imaginary
            && self.pow_w0 == other.pow_w0
            && self.pow_w1 == other.pow_w1
            && self.factors == other.factors
    }
}

impl fmt::Display for SymbolicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}^red += {:+}", self.target + 1, self.coeff)?;
        if self.imaginary {
            write!(f, "i")?;
        }
        if self.pow_w0 > 0 {
            write!(f, " w0^{}", self.pow_w0)?;
        }
        if self.pow_w1 > 0 {
            write!(f, " w1^{}", self.pow_w1)?;
        }
        for (k, conj) in &self.factors {
            if *conj {
                write!(f, " conj(Y{})", k + 1)?;
            } else {
                write!(f, " Y{}", k + 1)?;
            }
        }
        Ok(())
    }
}

/// Independent route to `F^{c,red}`: the resonant Fourier coefficient of
/// `theta -> F^c(Re(Y e^{i m theta}), -w0 Im(Y m e^{i m theta}), w1 Im(Y m e^{i m theta}))`,
/// computed by an exact discrete Fourier transform and scaled by `8 / m_j`.
///
/// With `q` the common denominator of the masses and `mu_k = q m_k`, the map is
/// a trigonometric polynomial in `e^{i theta / q}` of degree at most `3 mu_N`;
/// `24 mu_N q + 1` equispaced samples resolve it without aliasing.
pub fn reduced_oracle<T: Real>(
    sys: &ReducedSystem<T>,
    w: &HyperbolaPoint<T>,
    y: &[Complex<T>],
) -> Vec<Complex<T>> {
    let masses = sys.masses();
    let n = masses.len();
    let q = masses.common_denominator();
    let mu: Vec<i64> = masses
        .as_slice()
        .iter()
        .map(|m| (m * q).to_integer())
        .collect();
    let mu_max = *mu.iter().max().expect("non-empty");
    let samples = (24 * mu_max * q + 1) as usize;
    let two_pi = lit::<T>(2.0) * T::PI();
    let roots: Vec<Complex<T>> = (0..samples)
        .map(|s| cis(two_pi * lit::<T>(s as f64) / lit::<T>(samples as f64)))
        .collect();
    let m: &[T] = sys.masses_real();

    let mut u = vec![T::zero(); n];
    let mut ut = vec![T::zero(); n];
    let mut ux = vec![T::zero(); n];
    let mut acc = vec![Complex::<T>::zero(); n];
    for s in 0..samples {
        for k in 0..n {
            let idx = (mu[k] as usize * s) % samples;
            let ye = y[k] * roots[idx];
            u[k] = ye.re;
            ut[k] = -w.w0() * m[k] * ye.im;
            ux[k] = w.w1() * m[k] * ye.im;
        }
        let f = crate::algebra::eval_nonlinearity(sys.nonlinearity(), &u, &ut, &ux);
        for j in 0..n {
            let idx = (mu[j] as usize * s) % samples;
            acc[j] = acc[j] + roots[idx].conj() * f[j];
        }
    }
    let norm = lit::<T>(samples as f64);
    acc.iter()
        .zip(m)
        .map(|(a, mj)| *a / norm * (lit::<T>(8.0) / *mj))
        .collect()
}
