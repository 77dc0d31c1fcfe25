use super::ProfileError;
use crate::scalar::{lit, to_f64, Real};
use crate::solver::{Field, Observer, PointBasis, Snapshot};

/// Fields at one space-time point, per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValues<T> {
    pub u: Vec<T>,
    pub ut: Vec<T>,
    pub ux: Vec<T>,
}

// u, ut, ux, utt, utx per component
type Record<T> = Vec<[T; 5]>;

/// Records solution values at arbitrary `(t, x)` during a run. Times are
/// measured from the start of the run. Each point is evaluated spectrally at
/// the two bracketing steps and joined by cubic Hermite interpolation in
/// time, using `u_tt` and `u_tx` as the slopes of `u_t` and `u_x`.
pub struct ProbeRecorder<T> {
    queries: Vec<(T, T)>,
    dt: T,
    steps: usize,
    by_step: Vec<Vec<(usize, usize)>>,
    records: Vec<[Option<Record<T>>; 2]>,
    base_step: Vec<Option<usize>>,
}

impl<T: Real> ProbeRecorder<T> {
    pub fn new(queries: Vec<(T, T)>) -> Self {
        let q = queries.len();
        Self {
            queries,
            dt: T::one(),
            steps: 0,
            by_step: Vec::new(),
            records: (0..q).map(|_| [None, None]).collect(),
            base_step: vec![None; q],
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Interpolated values in query order.
    pub fn finish(self) -> Result<Vec<PointValues<T>>, ProfileError> {
        let dt = self.dt;
        let mut out = Vec::with_capacity(self.queries.len());
        for (qi, &(t, x)) in self.queries.iter().enumerate() {
            let oob = || ProfileError::OutOfHorizon { t: to_f64(t), x: to_f64(x) };
            let n = self.base_step[qi].ok_or_else(oob)?;
            let [Some(r0), Some(r1)] = &self.records[qi] else {
                return Err(oob());
            };
            let theta = if self.steps == 0 { T::zero() } else { (t - dt * lit(n as f64)) / dt };
            let th2 = theta * theta;
            let th3 = th2 * theta;
            let two = lit::<T>(2.0);
            let three = lit::<T>(3.0);
            let h00 = two * th3 - three * th2 + T::one();
            let h10 = th3 - two * th2 + theta;
            let h01 = three * th2 - two * th3;
            let h11 = th3 - th2;
            let herm = |p0: T, m0: T, p1: T, m1: T| h00 * p0 + h10 * dt * m0 + h01 * p1 + h11 * dt * m1;
            let nc = r0.len();
            let mut pv = PointValues { u: vec![T::zero(); nc], ut: vec![T::zero(); nc], ux: vec![T::zero(); nc] };
            for j in 0..nc {
                let (a, b) = (r0[j], r1[j]);
                pv.u[j] = herm(a[0], a[1], b[0], b[1]);
                pv.ut[j] = herm(a[1], a[3], b[1], b[3]);
                pv.ux[j] = herm(a[2], a[4], b[2], b[4]);
            }
            out.push(pv);
        }
        Ok(out)
    }
}

impl<T: Real> Observer<T> for ProbeRecorder<T> {
    fn start(&mut self, dt: T, steps: usize) {
        self.dt = dt;
        self.steps = steps;
        self.by_step = vec![Vec::new(); steps + 1];
        let t_end = dt * lit(steps as f64);
        let slack = dt * lit(1e-9);
        for (qi, &(t, _)) in self.queries.iter().enumerate() {
            if t < -slack || t > t_end + slack {
                continue;
            }
            let n = if steps == 0 {
                0
            } else {
                (to_f64(t / dt).floor().max(0.0) as usize).min(steps - 1)
            };
            self.base_step[qi] = Some(n);
            self.by_step[n].push((qi, 0));
            self.by_step[(n + 1).min(steps)].push((qi, 1));
        }
    }

    fn wants(&self, step: usize, _t: T, _is_final: bool) -> bool {
        self.by_step.get(step).is_some_and(|v| !v.is_empty())
    }

    fn observe(&mut self, s: &Snapshot<'_, T>) {
        let spectral = s.spectral();
        let half_length = spectral.grid().half_length();
        let list = std::mem::take(&mut self.by_step[s.step]);
        for &(qi, side) in &list {
            let x = self.queries[qi].1;
            if x.abs() >= half_length {
                continue;
            }
            let basis = PointBasis::new(spectral, x);
            let rec: Record<T> = (0..s.n_components())
                .map(|j| {
                    let u = s.raw_spectrum(Field::U, j);
                    let ut = s.raw_spectrum(Field::Ut, j);
                    let utt = s.raw_spectrum(Field::Utt, j);
                    [
                        basis.value(u),
                        basis.value(ut),
                        basis.derivative(u),
                        basis.value(utt),
                        basis.derivative(ut),
                    ]
                })
                .collect();
            self.records[qi][side] = Some(rec);
        }
    }
}
