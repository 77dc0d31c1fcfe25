//! Exact masses, cubic nonlinearities and the mass-resonance structure.
//!
//! Masses are rationals so that the resonance relation
//! `m_j = s1 m_a1 + s2 m_a2 + s3 m_a3` is decided by exact equality. Component
//! indices are zero-based in the API and one-based in every textual form
//! (`u1`, `ut2`, ...).

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Real};

pub type Mass = Rational64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("no masses given")]
    Empty,
    #[error("mass {index} is {value}; masses must be strictly positive")]
    NonPositiveMass { index: usize, value: String },
    #[error("masses must be sorted non-decreasing (m{} = {} > m{} = {})", .index, .prev, .index + 1, .next)]
    Unsorted { index: usize, prev: String, next: String },
    #[error("cannot parse mass '{0}': floating-point masses are rejected, write it as an exact rational such as \"3/2\"")]
    FloatMass(String),
    #[error("cannot parse mass '{0}': expected an integer or \"p/q\"")]
    BadMass(String),
    #[error("component index {index} out of range for a {n}-component system")]
    ComponentOutOfRange { index: usize, n: usize },
    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),
    #[error("cannot parse factor '{0}': expected u<k>, ut<k> or ux<k> with k >= 1")]
    BadFactor(String),
}

/// Parses `"p"`, `"p/q"` (whitespace tolerated). Decimal notation is refused.
pub fn parse_mass(text: &str) -> Result<Mass, AlgebraError> {
    let s = text.trim();
    if s.contains(['.', 'e', 'E']) {
        return Err(AlgebraError::FloatMass(text.to_string()));
    }
    let bad = || AlgebraError::BadMass(text.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Mass::new(p, q))
        }
        None => s.parse::<i64>().map(Mass::from_integer).map_err(|_| bad()),
    }
}

pub fn format_mass(m: &Mass) -> String {
    if m.is_integer() {
        m.numer().to_string()
    } else {
        format!("{}/{}", m.numer(), m.denom())
    }
}

/// Positive masses `m_1 <= ... <= m_N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MassVector(Vec<Mass>);

impl MassVector {
    pub fn new(masses: Vec<Mass>) -> Result<Self, AlgebraError> {
        if masses.is_empty() {
            return Err(AlgebraError::Empty);
        }
        for (index, m) in masses.iter().enumerate() {
            if !m.is_positive() {
                return Err(AlgebraError::NonPositiveMass {
                    index: index + 1,
                    value: format_mass(m),
                });
            }
        }
        for (index, w) in masses.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(AlgebraError::Unsorted {
                    index: index + 1,
                    prev: format_mass(&w[0]),
                    next: format_mass(&w[1]),
                });
            }
        }
        Ok(Self(masses))
    }

    pub fn from_integers(masses: &[i64]) -> Result<Self, AlgebraError> {
        Self::new(masses.iter().map(|&m| Mass::from_integer(m)).collect())
    }

    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self, AlgebraError> {
        let masses = items
            .iter()
            .map(|s| parse_mass(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(masses)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> Mass {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[Mass] {
        &self.0
    }

    pub fn max(&self) -> Mass {
        *self.0.last().expect("non-empty")
    }

    /// Multiplies every mass by a positive rational.
    pub fn scaled(&self, r: Mass) -> Result<Self, AlgebraError> {
        Self::new(self.0.iter().map(|m| m * r).collect())
    }

    /// Least common denominator `q` such that every `q m_k` is an integer.
    pub fn common_denominator(&self) -> i64 {
        self.0.iter().fold(1i64, |q, m| num_integer_lcm(q, *m.denom()))
    }

    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.0
            .iter()
            .map(|m| lit(m.to_f64().expect("finite rational")))
            .collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_mass).collect()
    }
}

fn num_integer_lcm(a: i64, b: i64) -> i64 {
    fn gcd(mut a: i64, mut b: i64) -> i64 {
        while b != 0 {
            let r = a % b;
            a = b;
            b = r;
        }
        a.abs()
    }
    a / gcd(a, b) * b
}

/// Derivative applied to one factor of a cubic monomial (`|I| <= 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Derivative {
    None,
    Dt,
    Dx,
}

impl Derivative {
    pub fn order(self) -> u32 {
        match self {
            Derivative::None => 0,
            Derivative::Dt | Derivative::Dx => 1,
        }
    }
}

/// One factor `d^I u_k` of a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub component: usize,
    pub deriv: Derivative,
}

impl Factor {
    pub fn u(component: usize) -> Self {
        Self { component, deriv: Derivative::None }
    }
    pub fn dt(component: usize) -> Self {
        Self { component, deriv: Derivative::Dt }
    }
    pub fn dx(component: usize) -> Self {
        Self { component, deriv: Derivative::Dx }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.deriv {
            Derivative::None => "u",
            Derivative::Dt => "ut",
            Derivative::Dx => "ux",
        };
        write!(f, "{}{}", prefix, self.component + 1)
    }
}

impl FromStr for Factor {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || AlgebraError::BadFactor(s.to_string());
        let (deriv, rest) = if let Some(r) = t.strip_prefix("ut") {
            (Derivative::Dt, r)
        } else if let Some(r) = t.strip_prefix("ux") {
            (Derivative::Dx, r)
        } else if let Some(r) = t.strip_prefix('u') {
            (Derivative::None, r)
        } else {
            return Err(bad());
        };
        let k: usize = rest.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Factor { component: k - 1, deriv })
    }
}

/// `coeff * (d^I u_a1)(d^J u_a2)(d^K u_a3)` contributing to `F_target`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicTerm {
    pub target: usize,
    pub factors: [Factor; 3],
    pub coeff: f64,
}

impl CubicTerm {
    pub fn new(target: usize, factors: [Factor; 3], coeff: f64) -> Self {
        Self { target, factors, coeff }
    }

    /// Index triple `a = (a1, a2, a3)`.
    pub fn indices(&self) -> [usize; 3] {
        [
            self.factors[0].component,
            self.factors[1].component,
            self.factors[2].component,
        ]
    }

    fn key(&self) -> (usize, [Factor; 3]) {
        (self.target, self.factors)
    }
}

impl fmt::Display for CubicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "F{} += {} * {} {} {}",
            self.target + 1,
            self.coeff,
            self.factors[0],
            self.factors[1],
            self.factors[2]
        )
    }
}

/// Cubic part of the nonlinearity, kept in canonical form: factors sorted
/// within each monomial, duplicate monomials merged, zero terms dropped, terms
/// sorted by `(target, factors)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicNonlinearity {
    n: usize,
    terms: Vec<CubicTerm>,
}

impl CubicNonlinearity {
    pub fn new(n: usize, terms: Vec<CubicTerm>) -> Result<Self, AlgebraError> {
        for t in &terms {
            if !t.coeff.is_finite() {
                return Err(AlgebraError::NonFiniteCoefficient(t.coeff));
            }
            if t.target >= n {
                return Err(AlgebraError::ComponentOutOfRange { index: t.target + 1, n });
            }
            for fac in &t.factors {
                if fac.component >= n {
                    return Err(AlgebraError::ComponentOutOfRange {
                        index: fac.component + 1,
                        n,
                    });
                }
            }
        }
        Ok(Self { n, terms: canonicalize(terms) })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[CubicTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-runs canonicalization; the result equals `self`.
    pub fn canonicalized(&self) -> Self {
        Self { n: self.n, terms: canonicalize(self.terms.clone()) }
    }

    /// Set of `(component, derivative)` fields read by some term.
    pub fn used_fields(&self) -> Vec<Factor> {
        let mut v: Vec<Factor> = self.terms.iter().flat_map(|t| t.factors).collect();
        v.sort();
        v.dedup();
        v
    }
}

fn canonicalize(terms: Vec<CubicTerm>) -> Vec<CubicTerm> {
    let mut sorted: Vec<CubicTerm> = terms
        .into_iter()
        .map(|mut t| {
            t.factors.sort();
            t
        })
        .collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    let mut out: Vec<CubicTerm> = Vec::with_capacity(sorted.len());
    for t in sorted {
        match out.last_mut() {
            Some(last) if last.key() == t.key() => last.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out
}

/// Evaluates `F^c(u, ut, ux)` at one point.
pub fn eval_nonlinearity<T: Real>(f: &CubicNonlinearity, u: &[T], ut: &[T], ux: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); f.n_components()];
    for term in f.terms() {
        let mut prod: T = lit(term.coeff);
        for fac in &term.factors {
            prod *= match fac.deriv {
                Derivative::None => u[fac.component],
                Derivative::Dt => ut[fac.component],
                Derivative::Dx => ux[fac.component],
            };
        }
        out[term.target] += prod;
    }
    out
}

/// A sign triple `(s1, s2, s3)` in `{+1, -1}^3`, encoded as three bits
/// (bit `l` set means `s_l = -1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignTriple(u8);

impl SignTriple {
    pub fn from_signs(s: [i8; 3]) -> Self {
        let mut bits = 0u8;
        for (l, &v) in s.iter().enumerate() {
            assert!(v == 1 || v == -1, "signs must be +1 or -1");
            if v < 0 {
                bits |= 1 << l;
            }
        }
        Self(bits)
    }

    /// All eight triples, `(+,+,+)` first.
    pub fn all() -> impl Iterator<Item = SignTriple> {
        (0u8..8).map(SignTriple)
    }

    pub fn sign(self, l: usize) -> i8 {
        if self.0 & (1 << l) != 0 {
            -1
        } else {
            1
        }
    }

    pub fn signs(self) -> [i8; 3] {
        [self.sign(0), self.sign(1), self.sign(2)]
    }

    /// Whether factor `l` is conjugated (`s_l = -1`).
    pub fn conj(self, l: usize) -> bool {
        self.sign(l) < 0
    }

    fn bit(self) -> u8 {
        1 << self.0
    }
}

impl fmt::Display for SignTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |l| if self.sign(l) > 0 { '+' } else { '-' };
        write!(f, "({},{},{})", c(0), c(1), c(2))
    }
}

/// `S_j^a` for every `(j, a)`, stored as 8-bit masks over [`SignTriple`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResonanceTable {
    n: usize,
    masks: Vec<u8>,
}

impl ResonanceTable {
    fn slot(&self, j: usize, a: [usize; 3]) -> usize {
        let n = self.n;
        ((j * n + a[0]) * n + a[1]) * n + a[2]
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn resonant(&self, j: usize, a: [usize; 3]) -> Vec<SignTriple> {
        let mask = self.masks[self.slot(j, a)];
        SignTriple::all().filter(|s| mask & s.bit() != 0).collect()
    }

    /// `T_j^a`, the complement of `S_j^a`.
    pub fn nonresonant(&self, j: usize, a: [usize; 3]) -> Vec<SignTriple> {
        let mask = self.masks[self.slot(j, a)];
        SignTriple::all().filter(|s| mask & s.bit() == 0).collect()
    }

    pub fn is_resonant(&self, j: usize, a: [usize; 3]) -> bool {
        self.masks[self.slot(j, a)] != 0
    }

    /// `M_j`: all index triples with a non-empty resonant sign set.
    pub fn resonant_indices(&self, j: usize) -> Vec<[usize; 3]> {
        let n = self.n;
        let mut out = Vec::new();
        for a0 in 0..n {
            for a1 in 0..n {
                for a2 in 0..n {
                    let a = [a0, a1, a2];
                    if self.is_resonant(j, a) {
                        out.push(a);
                    }
                }
            }
        }
        out
    }
}

/// Exhaustive exact enumeration of `S_j^a` over all `j`, `a` and sign triples.
pub fn resonance_table(m: &MassVector) -> ResonanceTable {
    let n = m.len();
    let mut masks = vec![0u8; n * n * n * n];
    let mut slot = 0;
    for j in 0..n {
        for a0 in 0..n {
            for a1 in 0..n {
                for a2 in 0..n {
                    let a = [a0, a1, a2];
                    let mut mask = 0u8;
                    for s in SignTriple::all() {
                        let mut sum = Mass::zero();
                        for (l, &al) in a.iter().enumerate() {
                            sum += m.get(al) * Mass::from_integer(i64::from(s.sign(l)));
                        }
                        if sum == m.get(j) {
                            mask |= s.bit();
                        }
                    }
                    masks[slot] = mask;
                    slot += 1;
                }
            }
        }
    }
    ResonanceTable { n, masks }
}
