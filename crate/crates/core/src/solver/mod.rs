//! Pseudospectral method-of-lines solver for
//! `(d_t^2 - d_x^2 + m_j^2) u_j = F_j(u, d_t u, d_x u)` on a periodic box.
//!
//! The state is kept in Fourier space; time stepping is classical RK4 on
//! `(u, u_t)`. Cubic products are formed on a grid with `2M` points, which
//! removes all aliasing from triple products of band-limited fields.
//! Compactly supported data stay supported in `|x| <= t + B`, so the box
//! stands in for the line as long as `L > B + T`.

mod data;
mod grid;
mod io;
mod observe;

pub use data::{CauchyData, ComponentData, Shape};
pub use grid::{Grid1D, PointBasis, Spectral};
pub use io::{read_snapshot, write_snapshot, SNAPSHOT_HEADER_BYTES};
pub use observe::{ComponentNorms, EveryObserver, NormObserver, NormRow, StateObserver};

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{CubicNonlinearity, Derivative, Factor, MassVector};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("time step {dt:e} violates the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("box half-length {half_length} cannot contain the light cone up to t = {t_final} (need > {required})")]
    LightCone { half_length: f64, t_final: f64, required: f64 },
    #[error("time {t} with support radius {support} leaves the box of half-length {half_length}")]
    OutOfHorizon { t: f64, support: f64, half_length: f64 },
    #[error("invalid run parameter: {0}")]
    Parameter(String),
    #[error("non-finite value in the state")]
    NonFinite,
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed snapshot: {0}")]
    Format(String),
}

/// Physical fields at one time; `u` and `ut` are `N x M`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T> {
    t: T,
    n: usize,
    m: usize,
    u: Vec<T>,
    ut: Vec<T>,
}

impl<T: Real> FieldState<T> {
    pub fn new(t: T, n: usize, m: usize, u: Vec<T>, ut: Vec<T>) -> Result<Self, SolverError> {
        if u.len() != n * m || ut.len() != n * m {
            return Err(SolverError::Dimension { expected: n * m, got: u.len().min(ut.len()) });
        }
        if u.iter().chain(&ut).any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite);
        }
        Ok(Self { t, n, m, u, ut })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { t: T::zero(), n, m, u: vec![T::zero(); n * m], ut: vec![T::zero(); n * m] }
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.m
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn ut(&self) -> &[T] {
        &self.ut
    }

    pub fn u_component(&self, j: usize) -> &[T] {
        &self.u[j * self.m..(j + 1) * self.m]
    }

    pub fn ut_component(&self, j: usize) -> &[T] {
        &self.ut[j * self.m..(j + 1) * self.m]
    }

    pub fn sup(&self) -> T {
        self.u.iter().chain(&self.ut).fold(T::zero(), |a, v| a.max(v.abs()))
    }
}

/// `d_x u_j`, spectrally.
pub fn spatial_derivative<T: Real>(spectral: &Spectral<T>, state: &FieldState<T>, component: usize) -> Vec<T> {
    spectral.derivative(state.u_component(component))
}

/// Discrete `L^p` norm with grid spacing `dx`; `p = inf` is the max.
pub fn lp_norm<T: Real>(f: &[T], dx: T, p: f64) -> T {
    if p.is_infinite() {
        return f.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    }
    let pt = lit::<T>(p);
    (f.iter().map(|v| v.abs().powf(pt)).sum::<T>() * dx).powf(T::one() / pt)
}

/// Per-component `L^p` norms of `u`, `u_t` and `u_x` for each `p` in `ps`.
pub fn observe_norms<T: Real>(spectral: &Spectral<T>, state: &FieldState<T>, ps: &[f64]) -> Vec<ComponentNorms<T>> {
    let dx = spectral.grid().dx();
    (0..state.n_components())
        .map(|j| {
            let ux = spatial_derivative(spectral, state, j);
            ComponentNorms {
                u: ps.iter().map(|&p| lp_norm(state.u_component(j), dx, p)).collect(),
                ut: ps.iter().map(|&p| lp_norm(state.ut_component(j), dx, p)).collect(),
                ux: ps.iter().map(|&p| lp_norm(&ux, dx, p)).collect(),
            }
        })
        .collect()
}

/// `max |u|` over nodes with `|x| > t + B + 2 dx`.
pub fn light_cone_leakage<T: Real>(grid: &Grid1D<T>, state: &FieldState<T>, support: T) -> Result<T, SolverError> {
    let edge = state.t() + support + lit::<T>(2.0) * grid.dx();
    if edge >= grid.half_length() {
        return Err(SolverError::OutOfHorizon {
            t: to_f64(state.t()),
            support: to_f64(support),
            half_length: to_f64(grid.half_length()),
        });
    }
    let m = grid.points();
    let mut worst = T::zero();
    for i in 0..m {
        if grid.node(i).abs() > edge {
            for j in 0..state.n_components() {
                worst = worst.max(state.u()[j * m + i].abs());
            }
        }
    }
    Ok(worst)
}

/// `sum_j int (u_t^2 + u_x^2 + m_j^2 u^2)/2 dx`, conserved when `F = 0`.
pub fn linear_energy<T: Real>(spectral: &Spectral<T>, masses: &[T], state: &FieldState<T>) -> T {
    let dx = spectral.grid().dx();
    let half = lit::<T>(0.5);
    (0..state.n_components())
        .map(|j| {
            let ux = spatial_derivative(spectral, state, j);
            let m2 = masses[j] * masses[j];
            state
                .u_component(j)
                .iter()
                .zip(state.ut_component(j))
                .zip(&ux)
                .map(|((u, ut), ux)| (*ut * *ut + *ux * *ux + m2 * *u * *u) * half)
                .sum::<T>()
                * dx
        })
        .sum()
}

/// Which field a caller asks a [`Snapshot`] for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    U,
    Ut,
    Ux,
    Utt,
    Utx,
}

/// View of the solver state handed to observers. Physical fields are
/// computed on demand.
pub struct Snapshot<'a, T: Real> {
    pub step: usize,
    pub t: T,
    spectral: &'a Spectral<T>,
    n: usize,
    u_hat: &'a [Complex<T>],
    ut_hat: &'a [Complex<T>],
    utt_hat: &'a [Complex<T>],
}

impl<'a, T: Real> Snapshot<'a, T> {
    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn spectral(&self) -> &'a Spectral<T> {
        self.spectral
    }

    fn slice(&self, f: &'a [Complex<T>], j: usize) -> &'a [Complex<T>] {
        let m = self.spectral.grid().points();
        &f[j * m..(j + 1) * m]
    }

    /// Spectrum of `u_j`, `(u_t)_j` or `(u_tt)_j`; derived fields are built.
    pub fn spectrum(&self, field: Field, j: usize) -> Vec<Complex<T>> {
        match field {
            Field::U => self.slice(self.u_hat, j).to_vec(),
            Field::Ut => self.slice(self.ut_hat, j).to_vec(),
            Field::Utt => self.slice(self.utt_hat, j).to_vec(),
            Field::Ux => self.spectral.ddx_spectrum(self.slice(self.u_hat, j)),
            Field::Utx => self.spectral.ddx_spectrum(self.slice(self.ut_hat, j)),
        }
    }

    pub fn raw_spectrum(&self, field: Field, j: usize) -> &'a [Complex<T>] {
        match field {
            Field::U => self.slice(self.u_hat, j),
            Field::Ut => self.slice(self.ut_hat, j),
            Field::Utt => self.slice(self.utt_hat, j),
            Field::Ux | Field::Utx => panic!("derived fields have no stored spectrum"),
        }
    }

    pub fn physical(&self, field: Field, j: usize) -> Vec<T> {
        self.spectral.inverse(&self.spectrum(field, j))
    }

    pub fn state(&self) -> FieldState<T> {
        let m = self.spectral.grid().points();
        let mut u = Vec::with_capacity(self.n * m);
        let mut ut = Vec::with_capacity(self.n * m);
        for j in 0..self.n {
            let (a, b) = self.spectral.inverse_pair(self.slice(self.u_hat, j), self.slice(self.ut_hat, j));
            u.extend(a);
            ut.extend(b);
        }
        FieldState { t: self.t, n: self.n, m, u, ut }
    }
}

/// Collector invoked during a run.
pub trait Observer<T: Real> {
    /// Called once before the first step with the effective time step.
    fn start(&mut self, _dt: T, _steps: usize) {}
    fn wants(&self, step: usize, t: T, is_final: bool) -> bool;
    fn observe(&mut self, snapshot: &Snapshot<'_, T>);
}

#[derive(Clone, Debug)]
pub struct EvolveOptions<T> {
    /// `None` selects `0.25 min(dx, 1/m_N)`
    pub dt: Option<T>,
    pub t_final: T,
    pub cfl: T,
    /// blow-up ceiling as a multiple of the initial sup norm
    pub blowup_factor: T,
}

impl<T: Real> EvolveOptions<T> {
    pub fn new(t_final: T) -> Self {
        Self { dt: None, t_final, cfl: lit(0.5), blowup_factor: lit(1e3) }
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = Some(dt);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlowUpReason {
    NonFinite,
    Ceiling { sup: f64, ceiling: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowUp {
    pub t: f64,
    pub reason: BlowUpReason,
}

#[derive(Clone, Debug)]
pub struct RunRecord<T> {
    /// last finite state (the state before blow-up if one was flagged)
    pub final_state: FieldState<T>,
    pub dt: T,
    pub steps: usize,
    pub blow_up: Option<BlowUp>,
}

struct Work<T> {
    // padded physical values, two real fields per complex buffer
    fields: Vec<Vec<Complex<T>>>,
    targets: Vec<Vec<Complex<T>>>,
    scratch: Vec<Complex<T>>,
}

/// A system on a fixed grid: masses, nonlinearity and FFT plans.
pub struct Simulation<T: Real> {
    spectral: Spectral<T>,
    masses: Vec<T>,
    nonlinearity: CubicNonlinearity,
    fields: Vec<Factor>,
}

impl<T: Real> Simulation<T> {
    pub fn new(masses: &MassVector, nonlinearity: &CubicNonlinearity, grid: Grid1D<T>) -> Result<Self, SolverError> {
        if nonlinearity.n_components() != masses.len() {
            return Err(SolverError::Dimension { expected: masses.len(), got: nonlinearity.n_components() });
        }
        Ok(Self {
            spectral: Spectral::new(grid),
            masses: masses.to_real(),
            nonlinearity: nonlinearity.clone(),
            fields: nonlinearity.used_fields(),
        })
    }

    pub fn spectral(&self) -> &Spectral<T> {
        &self.spectral
    }

    pub fn grid(&self) -> &Grid1D<T> {
        self.spectral.grid()
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn n_components(&self) -> usize {
        self.masses.len()
    }

    pub fn default_dt(&self) -> T {
        let m_max = self.masses.iter().fold(T::zero(), |a, b| a.max(*b));
        lit::<T>(0.25) * self.grid().dx().min(T::one() / m_max)
    }

    pub fn cfl_limit(&self, cfl: T) -> T {
        let m_max = self.masses.iter().fold(T::zero(), |a, b| a.max(*b));
        cfl * self.grid().dx().min(T::one() / m_max)
    }

    fn spectra_of(&self, state: &FieldState<T>) -> Vec<Complex<T>> {
        let n = self.n_components();
        let m = self.grid().points();
        let mut y = Vec::with_capacity(2 * n * m);
        for j in 0..n {
            y.extend(self.spectral.forward(state.u_component(j)));
        }
        for j in 0..n {
            y.extend(self.spectral.forward(state.ut_component(j)));
        }
        y
    }

    fn work(&self) -> Work<T> {
        let m2 = 2 * self.grid().points();
        Work {
            fields: vec![vec![Complex::zero(); m2]; self.fields.len().div_ceil(2)],
            targets: vec![vec![Complex::zero(); m2]; self.n_components().div_ceil(2)],
            scratch: vec![Complex::zero(); self.spectral.padded_scratch_len()],
        }
    }

    /// Adds the truncated spectrum of `F(u, u_t, u_x)` to `out`.
    fn add_nonlinear(&self, y: &[Complex<T>], out: &mut [Complex<T>], work: &mut Work<T>) {
        if self.nonlinearity.is_zero() {
            return;
        }
        let n = self.n_components();
        let m = self.grid().points();
        let m2 = 2 * m;
        let k = self.spectral.wavenumbers();
        let inv_m = T::one() / lit(m as f64);
        let i_unit = Complex::new(T::zero(), T::one());
        // spectral value of a factor at bin idx, scaled to physical units
        let coeff = |fac: &Factor, idx: usize| -> Complex<T> {
            let c = fac.component;
            let v = match fac.deriv {
                Derivative::None => y[c * m + idx],
                Derivative::Dt => y[(n + c) * m + idx],
                Derivative::Dx => {
                    let z = y[c * m + idx];
                    Complex::new(-z.im * k[idx], z.re * k[idx])
                }
            };
            v * inv_m
        };
        for (p, pair) in self.fields.chunks(2).enumerate() {
            let buf = &mut work.fields[p];
            buf.iter_mut().for_each(|z| *z = Complex::zero());
            for idx in 0..m {
                if let Some(pi) = self.spectral.padded_index(idx) {
                    let mut v = coeff(&pair[0], idx);
                    if let Some(f) = pair.get(1) {
                        v += i_unit * coeff(f, idx);
                    }
                    buf[pi] = v;
                }
            }
            self.spectral.inverse_padded_inplace(buf, &mut work.scratch);
        }
        for buf in work.targets.iter_mut() {
            buf.iter_mut().for_each(|z| *z = Complex::zero());
        }
        let lookup = |fac: &Factor| self.fields.binary_search(fac).expect("field collected");
        let part = |buf: &[Complex<T>], odd: bool, i: usize| if odd { buf[i].im } else { buf[i].re };
        for term in self.nonlinearity.terms() {
            let [a, b, c] = term.factors.map(|f| lookup(&f));
            let w = lit::<T>(term.coeff);
            let (fa, fb, fc) = (&work.fields[a / 2], &work.fields[b / 2], &work.fields[c / 2]);
            let (oa, ob, oc) = (a % 2 == 1, b % 2 == 1, c % 2 == 1);
            let acc = &mut work.targets[term.target / 2];
            if term.target % 2 == 0 {
                for i in 0..m2 {
                    acc[i].re += w * part(fa, oa, i) * part(fb, ob, i) * part(fc, oc, i);
                }
            } else {
                for i in 0..m2 {
                    acc[i].im += w * part(fa, oa, i) * part(fb, ob, i) * part(fc, oc, i);
                }
            }
        }
        let nm = n * m;
        let quarter = lit::<T>(0.25);
        for (p, buf) in work.targets.iter_mut().enumerate() {
            self.spectral.forward_padded_inplace(buf, &mut work.scratch);
            let ja = 2 * p;
            let jb = 2 * p + 1;
            for idx in 0..m {
                let Some(pi) = self.spectral.padded_index(idx) else { continue };
                let zp = buf[pi];
                let zm = buf[(m2 - pi) % m2].conj();
                out[nm + ja * m + idx] += (zp + zm) * quarter;
                if jb < n {
                    let d = (zp - zm) * quarter;
                    out[nm + jb * m + idx] += Complex::new(d.im, -d.re);
                }
            }
        }
    }

    fn rhs(&self, y: &[Complex<T>], out: &mut [Complex<T>], work: &mut Work<T>) {
        let n = self.n_components();
        let m = self.grid().points();
        let nm = n * m;
        out[..nm].copy_from_slice(&y[nm..]);
        let k = self.spectral.wavenumbers();
        for j in 0..n {
            let m2 = self.masses[j] * self.masses[j];
            for i in 0..m {
                let idx = j * m + i;
                out[nm + idx] = -y[idx] * (k[i] * k[i] + m2);
            }
        }
        self.add_nonlinear(y, out, work);
    }

    /// Cheap upper bound `(1/M) sum (|Re f_k| + |Im f_k|)` of the sup norm per field, maxed.
    fn sup_bound(&self, y: &[Complex<T>]) -> T {
        let m = self.grid().points();
        let inv = T::one() / lit(m as f64);
        y.chunks(m)
            .map(|c| c.iter().map(|z| z.re.abs() + z.im.abs()).sum::<T>() * inv)
            .fold(T::zero(), |a, b| if b.is_nan() { b } else { a.max(b) })
    }

    pub fn initial_state(&self, data: &CauchyData) -> Result<FieldState<T>, SolverError> {
        data.validate(self.n_components())?;
        data.sample(self.grid())
    }

    /// Integrates from `initial` to `initial.t() + options.t_final`.
    pub fn evolve(
        &self,
        initial: &FieldState<T>,
        options: &EvolveOptions<T>,
        observers: &mut [&mut dyn Observer<T>],
    ) -> Result<RunRecord<T>, SolverError> {
        let n = self.n_components();
        let m = self.grid().points();
        if initial.n_components() != n || initial.points() != m {
            return Err(SolverError::Dimension { expected: n * m, got: initial.u().len() });
        }
        if !(options.t_final >= T::zero()) || !options.t_final.is_finite() {
            return Err(SolverError::Parameter(format!("t_final = {}", options.t_final)));
        }
        let limit = self.cfl_limit(options.cfl);
        let dt_req = options.dt.unwrap_or_else(|| self.default_dt());
        if !(dt_req > T::zero()) {
            return Err(SolverError::Parameter(format!("dt = {dt_req}")));
        }
        if dt_req > limit * lit(1.0 + 1e-12) {
            return Err(SolverError::Cfl { dt: to_f64(dt_req), limit: to_f64(limit) });
        }
        let steps = to_f64(options.t_final / dt_req - lit(1e-9)).ceil().max(0.0) as usize;
        let dt = if steps == 0 { dt_req } else { options.t_final / lit(steps as f64) };
        for o in observers.iter_mut() {
            o.start(dt, steps);
        }

        let ceiling = initial.sup() * options.blowup_factor;
        let t0 = initial.t();
        let nm = n * m;
        let mut y = self.spectra_of(initial);
        let mut k1 = vec![Complex::zero(); 2 * nm];
        let mut k2 = vec![Complex::zero(); 2 * nm];
        let mut k3 = vec![Complex::zero(); 2 * nm];
        let mut k4 = vec![Complex::zero(); 2 * nm];
        let mut tmp = vec![Complex::zero(); 2 * nm];
        let half_dt = dt * lit(0.5);
        let sixth = dt / lit(6.0);
        let two = lit::<T>(2.0);
        let mut work = self.work();
        let mut blow_up = None;
        let mut last_good = y.clone();
        let mut last_t = t0;

        for step in 0..=steps {
            let t = t0 + dt * lit(step as f64);
            let is_final = step == steps;
            self.rhs(&y, &mut k1, &mut work);
            let snapshot = Snapshot {
                step,
                t,
                spectral: &self.spectral,
                n,
                u_hat: &y[..nm],
                ut_hat: &y[nm..],
                utt_hat: &k1[nm..],
            };
            for o in observers.iter_mut() {
                if o.wants(step, t, is_final) {
                    o.observe(&snapshot);
                }
            }
            if is_final {
                break;
            }
            for i in 0..2 * nm {
                tmp[i] = y[i] + k1[i] * half_dt;
            }
            self.rhs(&tmp, &mut k2, &mut work);
            for i in 0..2 * nm {
                tmp[i] = y[i] + k2[i] * half_dt;
            }
            self.rhs(&tmp, &mut k3, &mut work);
            for i in 0..2 * nm {
                tmp[i] = y[i] + k3[i] * dt;
            }
            self.rhs(&tmp, &mut k4, &mut work);
            for i in 0..2 * nm {
                y[i] += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth;
            }

            let t_next = t + dt;
            let bound = self.sup_bound(&y);
            if !bound.is_finite() {
                blow_up = Some(BlowUp { t: to_f64(t_next), reason: BlowUpReason::NonFinite });
                break;
            }
            if ceiling > T::zero() && bound > ceiling {
                let sup = y
                    .chunks(m)
                    .map(|c| self.spectral.inverse(c).iter().fold(T::zero(), |a, v| a.max(v.abs())))
                    .fold(T::zero(), T::max);
                if sup > ceiling {
                    blow_up = Some(BlowUp {
                        t: to_f64(t_next),
                        reason: BlowUpReason::Ceiling { sup: to_f64(sup), ceiling: to_f64(ceiling) },
                    });
                    last_good = y.clone();
                    last_t = t_next;
                    break;
                }
            }
            last_good.copy_from_slice(&y);
            last_t = t_next;
        }
        let mut u = Vec::with_capacity(nm);
        let mut ut = Vec::with_capacity(nm);
        for j in 0..n {
            let (a, b) = self.spectral.inverse_pair(&last_good[j * m..(j + 1) * m], &last_good[nm + j * m..nm + (j + 1) * m]);
            u.extend(a);
            ut.extend(b);
        }
        let final_state = FieldState { t: last_t, n, m, u, ut };
        Ok(RunRecord { final_state, dt, steps, blow_up })
    }
}

/// Samples the data, checks the light-cone invariant `L > B + T` and runs.
pub fn evolve<T: Real>(
    masses: &MassVector,
    nonlinearity: &CubicNonlinearity,
    data: &CauchyData,
    grid: Grid1D<T>,
    options: &EvolveOptions<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<RunRecord<T>, SolverError> {
    let required = data.support_radius + to_f64(options.t_final);
    if to_f64(grid.half_length()) <= required {
        return Err(SolverError::LightCone {
            half_length: to_f64(grid.half_length()),
            t_final: to_f64(options.t_final),
            required,
        });
    }
    let sim = Simulation::new(masses, nonlinearity, grid)?;
    let initial = sim.initial_state(data)?;
    sim.evolve(&initial, options, observers)
}
