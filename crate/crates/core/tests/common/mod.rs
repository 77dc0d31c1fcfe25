#![allow(dead_code)]

use kgres::algebra::{CubicNonlinearity, CubicTerm, Derivative, Factor, Mass, MassVector};
use kgres::reduced::{HyperbolaPoint, ReducedSystem};
use num_complex::Complex;
use rand::Rng;

/// Size of the individual contributions: `sum |c| prod |weight_l Y_kl|`.
/// Relative errors are measured against this so that cancelling sums do not
/// turn round-off into a failure.
pub fn term_scale(sys: &ReducedSystem<f64>, w: &HyperbolaPoint<f64>, y: &[Complex<f64>]) -> f64 {
    let m = sys.masses_real();
    sys.nonlinearity()
        .terms()
        .iter()
        .map(|t| {
            t.coeff.abs()
                * t.factors
                    .iter()
                    .map(|f| {
                        let k = f.component;
                        let d = match f.deriv {
                            Derivative::None => 1.0,
                            Derivative::Dt => m[k] * w.w0(),
                            Derivative::Dx => m[k] * w.w1().abs(),
                        };
                        d * y[k].norm()
                    })
                    .product::<f64>()
        })
        .sum()
}

pub fn max_error(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn random_factor(rng: &mut impl Rng, n: usize) -> Factor {
    let k = rng.gen_range(0..n);
    match rng.gen_range(0..3) {
        0 => Factor::u(k),
        1 => Factor::dt(k),
        _ => Factor::dx(k),
    }
}

/// N <= 4 components, up to 6 terms, masses `p/q` with `q` in {1, 2, 4}.
pub fn random_system(rng: &mut impl Rng) -> ReducedSystem<f64> {
    let n = rng.gen_range(1..=4);
    let mut masses: Vec<Mass> = (0..n).map(|_| Mass::new(rng.gen_range(1..=12), [1, 2, 4][rng.gen_range(0..3)])).collect();
    masses.sort();
    let terms = (0..rng.gen_range(1..=6))
        .map(|_| {
            let f = [random_factor(rng, n), random_factor(rng, n), random_factor(rng, n)];
            CubicTerm::new(rng.gen_range(0..n), f, rng.gen_range(-2.0..2.0))
        })
        .collect();
    let f = CubicNonlinearity::new(n, terms).expect("valid system");
    ReducedSystem::new(MassVector::new(masses).expect("positive masses"), f).expect("reducible")
}

pub fn random_amplitude(rng: &mut impl Rng, n: usize) -> Vec<Complex<f64>> {
    (0..n).map(|_| Complex::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect()
}
