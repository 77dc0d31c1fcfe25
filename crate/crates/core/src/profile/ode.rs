use num_complex::Complex;
use num_traits::Zero;

use super::{ProfileError, Ray, WeightFunction};
use crate::condition::ConditionMatrix;
use crate::reduced::{HyperbolaPoint, ReducedSystem};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Debug)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rtol: lit(1e-9), atol: lit(1e-15), max_steps: 1_000_000 }
    }
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of `y' = f(s, y)` reporting the state
/// at each of `outputs` (increasing, all `>= s0`). Steps are clipped so
/// outputs are hit exactly.
fn dopri<T: Real>(
    f: &dyn Fn(T, &[Complex<T>]) -> Vec<Complex<T>>,
    s0: T,
    y0: &[Complex<T>],
    outputs: &[T],
    opts: &OdeOptions<T>,
) -> Result<Vec<Vec<Complex<T>>>, ProfileError> {
    let n = y0.len();
    let mut out = Vec::with_capacity(outputs.len());
    let mut s = s0;
    let mut y = y0.to_vec();
    let Some(&s_end) = outputs.last() else { return Ok(out) };
    let mut h = (s_end - s0).abs() * lit(1e-3);
    if h == T::zero() {
        h = lit(1e-3);
    }
    let mut k: Vec<Vec<Complex<T>>> = vec![f(s, &y); 1];
    let mut next_out = 0;
    let mut steps = 0usize;
    let tiny = s_end.abs().max(T::one()) * T::epsilon() * lit(16.0);
    while next_out < outputs.len() {
        while next_out < outputs.len() && (outputs[next_out] - s).abs() <= tiny {
            out.push(y.clone());
            next_out += 1;
        }
        if next_out == outputs.len() {
            break;
        }
        let target = outputs[next_out];
        let h_try = h.min(target - s);
        if h_try < tiny {
            return Err(ProfileError::StepUnderflow { tau: to_f64(s) });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(ProfileError::StepUnderflow { tau: to_f64(s) });
        }
        k.truncate(1);
        for stage in 1..7 {
            let mut ys = y.clone();
            for (prev, kp) in k.iter().enumerate() {
                let a = lit::<T>(A[stage][prev]);
                if a != T::zero() {
                    for i in 0..n {
                        ys[i] += kp[i] * (a * h_try);
                    }
                }
            }
            k.push(f(s + lit::<T>(C[stage]) * h_try, &ys));
        }
        // the seventh stage is evaluated at the fifth-order solution
        let mut y5 = y.clone();
        for (st, kp) in k.iter().enumerate().take(6) {
            let b = lit::<T>(A[6][st]);
            for i in 0..n {
                y5[i] += kp[i] * (b * h_try);
            }
        }
        let mut err = T::zero();
        for i in 0..n {
            let mut e = Complex::<T>::zero();
            for (st, kp) in k.iter().enumerate() {
                let b5 = if st < 6 { A[6][st] } else { 0.0 };
                e += kp[i] * lit::<T>(b5 - B4[st]);
            }
            let e = e.norm() * h_try;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            err += (e / sc) * (e / sc);
        }
        let err = (err / lit(n.max(1) as f64)).sqrt();
        if !err.is_finite() {
            h = h_try * lit(0.2);
            continue;
        }
        let fac = if err == T::zero() {
            lit(5.0)
        } else {
            (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
        };
        if err <= T::one() {
            s += h_try;
            if (target - s).abs() <= tiny {
                s = target;
            }
            y = y5;
            let last = k.pop().expect("seven stages");
            k = vec![last];
            // a step shortened to land on an output does not shrink the next one
            h = if h_try < h { h.max(h_try * fac) } else { h_try * fac };
        } else {
            h = h_try * fac.min(T::one());
        }
    }
    Ok(out)
}

/// Integrates `d alpha/d tau = -(i chi(z)^2/(8 tau)) F^{c,red}(omega(z), alpha) [+ S(tau)]`
/// from `alpha(tau0) = alpha0`, reporting at `taus`.
pub fn integrate_profile_ode<T: Real>(
    sys: &ReducedSystem<T>,
    weight: &WeightFunction<T>,
    z: T,
    alpha0: &[Complex<T>],
    tau0: T,
    taus: &[T],
    include_nonresonant: bool,
    opts: &OdeOptions<T>,
) -> Result<Ray<T>, ProfileError> {
    if alpha0.len() != sys.n_components() {
        return Err(ProfileError::Input(format!(
            "initial amplitude has {} components, system has {}",
            alpha0.len(),
            sys.n_components()
        )));
    }
    if !(tau0 > T::zero()) || taus.first().is_some_and(|t| *t < tau0) {
        return Err(ProfileError::Input("need 0 < tau0 <= first output".into()));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ProfileError::Input("output taus must increase strictly".into()));
    }
    let w = HyperbolaPoint::new(z);
    let chi = weight.chi(z);
    let chi2 = chi * chi;
    let eighth = lit::<T>(0.125);
    let rhs = |tau: T, a: &[Complex<T>]| -> Vec<Complex<T>> {
        let pref = Complex::new(T::zero(), -chi2 * eighth / tau);
        let mut d: Vec<Complex<T>> = sys.eval_reduced(&w, a).into_iter().map(|f| pref * f).collect();
        if include_nonresonant {
            for (di, si) in d.iter_mut().zip(sys.nonresonant_term(&w, a, tau, chi2)) {
                *di += si;
            }
        }
        d
    };
    let alphas = dopri(&rhs, tau0, alpha0, taus, opts)?;
    Ok(Ray { z, taus: taus.to_vec(), alphas, u: None })
}

/// `<alpha, A alpha>` along a ray.
pub fn lyapunov_series<T: Real>(ray: &Ray<T>, a: &ConditionMatrix<T>) -> Vec<T> {
    ray.alphas.iter().map(|al| a.quadratic_form(al)).collect()
}
