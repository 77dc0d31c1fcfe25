use std::fmt::Write as _;

use serde::Serialize;

use super::{lp_norm, Field, FieldState, Observer, Snapshot};
use crate::scalar::{to_f64, Real};

/// Norms of one component, indexed like the observer's `p` list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentNorms<T> {
    pub u: Vec<T>,
    pub ut: Vec<T>,
    pub ux: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow<T> {
    pub t: T,
    pub components: Vec<ComponentNorms<T>>,
}

fn stride_for<T: Real>(every: T, dt: T) -> usize {
    if !(every > T::zero()) {
        return 1;
    }
    (to_f64(every / dt).round() as usize).max(1)
}

/// Records `L^p` norms of `u`, `u_t`, `u_x` every `every` time units and at
/// the final time.
#[derive(Clone, Debug)]
pub struct NormObserver<T> {
    every: T,
    ps: Vec<f64>,
    stride: usize,
    pub rows: Vec<NormRow<T>>,
}

impl<T: Real> NormObserver<T> {
    pub fn new(every: T, ps: &[f64]) -> Self {
        Self { every, ps: ps.to_vec(), stride: 1, rows: Vec::new() }
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    /// `(t, ||u_j||_p)` series for one component and exponent index.
    pub fn series(&self, field: Field, component: usize, p_index: usize) -> Vec<(T, T)> {
        self.rows
            .iter()
            .map(|r| {
                let c = &r.components[component];
                let v = match field {
                    Field::U => c.u[p_index],
                    Field::Ut => c.ut[p_index],
                    Field::Ux => c.ux[p_index],
                    _ => panic!("norm series exist for u, u_t and u_x only"),
                };
                (r.t, v)
            })
            .collect()
    }

    pub fn p_label(p: f64) -> String {
        if p.is_infinite() {
            "Linf".to_string()
        } else {
            format!("L{p}")
        }
    }

    /// CSV with header `t,u1_L2,...,ut1_L2,...,ux1_L2,...` per component.
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.components.len());
        let mut out = String::from("t");
        for j in 1..=n {
            for name in ["u", "ut", "ux"] {
                for p in &self.ps {
                    let _ = write!(out, ",{name}{j}_{}", Self::p_label(*p));
                }
            }
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:.17e}", to_f64(r.t));
            for c in &r.components {
                for vals in [&c.u, &c.ut, &c.ux] {
                    for v in vals.iter() {
                        let _ = write!(out, ",{:.17e}", to_f64(*v));
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

impl<T: Real> Observer<T> for NormObserver<T> {
    fn start(&mut self, dt: T, _steps: usize) {
        self.stride = stride_for(self.every, dt);
    }

    fn wants(&self, step: usize, _t: T, is_final: bool) -> bool {
        is_final || step % self.stride == 0
    }

    fn observe(&mut self, s: &Snapshot<'_, T>) {
        let dx = s.spectral().grid().dx();
        let components = (0..s.n_components())
            .map(|j| {
                let u = s.physical(Field::U, j);
                let ut = s.physical(Field::Ut, j);
                let ux = s.physical(Field::Ux, j);
                ComponentNorms {
                    u: self.ps.iter().map(|&p| lp_norm(&u, dx, p)).collect(),
                    ut: self.ps.iter().map(|&p| lp_norm(&ut, dx, p)).collect(),
                    ux: self.ps.iter().map(|&p| lp_norm(&ux, dx, p)).collect(),
                }
            })
            .collect();
        self.rows.push(NormRow { t: s.t, components });
    }
}

/// Keeps full states at the steps nearest to the requested times.
#[derive(Clone, Debug, Default)]
pub struct StateObserver<T> {
    times: Vec<T>,
    steps: Vec<usize>,
    pub states: Vec<FieldState<T>>,
}

impl<T: Real> StateObserver<T> {
    pub fn new(times: &[T]) -> Self {
        Self { times: times.to_vec(), steps: Vec::new(), states: Vec::new() }
    }
}

impl<T: Real> Observer<T> for StateObserver<T> {
    fn start(&mut self, dt: T, steps: usize) {
        self.steps = self
            .times
            .iter()
            .map(|t| (to_f64(*t / dt).round().max(0.0) as usize).min(steps))
            .collect();
    }

    fn wants(&self, step: usize, _t: T, _is_final: bool) -> bool {
        self.steps.contains(&step)
    }

    fn observe(&mut self, s: &Snapshot<'_, T>) {
        self.states.push(s.state());
    }
}

/// Calls a closure every `every` time units and at the final time.
pub struct EveryObserver<T, F> {
    every: T,
    stride: usize,
    f: F,
}

impl<T: Real, F: FnMut(&Snapshot<'_, T>)> EveryObserver<T, F> {
    pub fn new(every: T, f: F) -> Self {
        Self { every, stride: 1, f }
    }
}

impl<T: Real, F: FnMut(&Snapshot<'_, T>)> Observer<T> for EveryObserver<T, F> {
    fn start(&mut self, dt: T, _steps: usize) {
        self.stride = stride_for(self.every, dt);
    }

    fn wants(&self, step: usize, _t: T, is_final: bool) -> bool {
        is_final || step % self.stride == 0
    }

    fn observe(&mut self, s: &Snapshot<'_, T>) {
        (self.f)(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{CubicNonlinearity, MassVector};
    use crate::scalar::lit;
    use crate::solver::{EvolveOptions, Grid1D, Simulation};

    #[test]
    fn stride_and_csv_layout() {
        let sim = Simulation::new(
            &MassVector::from_integers(&[1, 2]).unwrap(),
            &CubicNonlinearity::zero(2),
            Grid1D::new(10.0, 64).unwrap(),
        )
        .unwrap();
        let s = super::super::FieldState::zeros(2, 64);
        let mut norms = NormObserver::new(lit(0.5), &[2.0, f64::INFINITY]);
        let mut states = StateObserver::new(&[0.0, 1.0]);
        sim.evolve(&s, &EvolveOptions::new(2.0).with_dt(0.05), &mut [&mut norms, &mut states]).unwrap();
        assert_eq!(norms.rows.len(), 5);
        assert_eq!(states.states.len(), 2);
        assert!((states.states[1].t() - 1.0f64).abs() < 1e-12);
        let csv = norms.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + 2 * 3 * 2);
        assert!(header.starts_with("t,u1_L2,u1_Linf,ut1_L2"));
    }
}
