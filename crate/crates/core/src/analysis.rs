//! Decay-rate estimation for norm time series.
//!
//! The model is `log y = c - a log t - gamma log log t`, fitted by linear
//! least squares on a late-time window.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{to_f64, Real};

/// Smallest admissible window start.
pub const MIN_WINDOW_START: f64 = 10.0;
/// Fewest samples a fit accepts.
pub const MIN_SAMPLES: usize = 20;
/// `t_max / t_min` below which the log-log exponent is not identifiable.
pub const GAMMA_IDENTIFIABLE_RATIO: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid window [{t_min}, {t_max}]: {reason}")]
    Window { t_min: f64, t_max: f64, reason: String },
    #[error("window holds {found} samples, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },
    #[error("series value {y} at t = {t} is not positive")]
    NonPositive { t: f64, y: f64 },
    #[error("least-squares design is rank deficient")]
    Degenerate,
}

/// Which exponents the fit estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    /// `Some(a)` pins the power-law exponent.
    pub fixed_a: Option<f64>,
    /// `Some(g)` pins the log-log exponent.
    pub fixed_gamma: Option<f64>,
}

impl DecayModel {
    /// Power law plus logarithmic correction, both free.
    pub fn full() -> Self {
        Self { fixed_a: None, fixed_gamma: None }
    }

    /// Pure power law (`gamma = 0`).
    pub fn power_law() -> Self {
        Self { fixed_a: None, fixed_gamma: Some(0.0) }
    }
}

impl Default for DecayModel {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub c: f64,
    pub a: f64,
    pub gamma: f64,
    /// root-mean-square residual of `log y`
    pub residual: f64,
    pub a_fixed: bool,
    pub gamma_fixed: bool,
    /// set when `gamma` was requested free but the window was too narrow
    pub gamma_degenerate: bool,
}

/// Default late-time window `[T/8, T]` with `T` the last sample time,
/// raised to [`MIN_WINDOW_START`] if needed.
pub fn default_window<T: Real>(series: &[(T, T)]) -> Option<(f64, f64)> {
    let t_end = to_f64(series.last()?.0);
    Some(((t_end / 8.0).max(MIN_WINDOW_START), t_end))
}

fn windowed<T: Real>(series: &[(T, T)], window: (f64, f64)) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let (t_min, t_max) = window;
    let bad = |reason: &str| AnalysisError::Window { t_min, t_max, reason: reason.into() };
    if !(t_min.is_finite() && t_max.is_finite()) || t_max <= t_min {
        return Err(bad("need finite t_min < t_max"));
    }
    if t_min < MIN_WINDOW_START {
        return Err(bad("window must start at t >= 10"));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .map(|&(t, y)| (to_f64(t), to_f64(y)))
        .filter(|&(t, _)| t >= t_min && t <= t_max)
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(AnalysisError::TooFewSamples { found: pts.len(), needed: MIN_SAMPLES });
    }
    Ok(pts)
}

fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, AnalysisError> {
    // column scaling keeps the log and log-log columns comparable
    let scales: Vec<f64> = design.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= smax * 1e-12 {
        return Err(AnalysisError::Degenerate);
    }
    let mut x = svd.solve(rhs, 0.0).map_err(|_| AnalysisError::Degenerate)?;
    for (j, s) in scales.iter().enumerate() {
        x[j] /= s;
    }
    Ok(x)
}

/// Fits `log y = c - a log t - gamma log log t` on `window` (default
/// `[T/8, T]`). A free `gamma` is pinned to 0 when `t_max/t_min < 10`.
pub fn fit_decay<T: Real>(
    series: &[(T, T)],
    window: Option<(f64, f64)>,
    model: DecayModel,
) -> Result<DecayFit, AnalysisError> {
    let window = match window {
        Some(w) => w,
        None => default_window(series).ok_or(AnalysisError::TooFewSamples { found: 0, needed: MIN_SAMPLES })?,
    };
    let pts = windowed(series, window)?;
    if let Some(&(t, y)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(AnalysisError::NonPositive { t, y });
    }
    let t_lo = pts.first().map(|p| p.0).unwrap_or(window.0);
    let t_hi = pts.last().map(|p| p.0).unwrap_or(window.1);
    let gamma_degenerate = model.fixed_gamma.is_none() && t_hi / t_lo < GAMMA_IDENTIFIABLE_RATIO;
    let fixed_gamma = model.fixed_gamma.or(if gamma_degenerate { Some(0.0) } else { None });

    let n = pts.len();
    let mut cols: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|_| 1.0)];
    if model.fixed_a.is_none() {
        cols.push(Box::new(|t: f64| -t.ln()));
    }
    if fixed_gamma.is_none() {
        cols.push(Box::new(|t: f64| -t.ln().ln()));
    }
    let design = DMatrix::from_fn(n, cols.len(), |i, j| cols[j](pts[i].0));
    let known = |t: f64| -> f64 {
        model.fixed_a.map_or(0.0, |a| -a * t.ln()) + fixed_gamma.map_or(0.0, |g| -g * t.ln().ln())
    };
    let rhs = DVector::from_iterator(n, pts.iter().map(|&(t, y)| y.ln() - known(t)));
    let x = least_squares(&design, &rhs)?;
    let mut idx = 1;
    let c = x[0];
    let a = model.fixed_a.unwrap_or_else(|| {
        idx += 1;
        x[idx - 1]
    });
    let gamma = fixed_gamma.unwrap_or_else(|| x[idx]);
    let residual = ((&design * &x - &rhs).norm_squared() / n as f64).sqrt();
    Ok(DecayFit {
        t_min: t_lo,
        t_max: t_hi,
        samples: n,
        c,
        a,
        gamma,
        residual,
        a_fixed: model.fixed_a.is_some(),
        gamma_fixed: fixed_gamma.is_some(),
        gamma_degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    /// slope of `t^{1/2} y` against `log t`
    pub slope: f64,
    pub intercept: f64,
    /// coefficient of determination; 0 when `t^{1/2} y` is constant
    pub r_squared: f64,
}

/// Regresses `t^{1/2} y` on `log t`. A positive slope with high `R^2` means
/// the series decays no faster than `t^{-1/2} log t`.
pub fn growth_correlation<T: Real>(
    series: &[(T, T)],
    window: Option<(f64, f64)>,
) -> Result<GrowthReport, AnalysisError> {
    let window = match window {
        Some(w) => w,
        None => default_window(series).ok_or(AnalysisError::TooFewSamples { found: 0, needed: MIN_SAMPLES })?,
    };
    let pts = windowed(series, window)?;
    if let Some(&(t, y)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(AnalysisError::NonPositive { t, y });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.0.sqrt() * p.1).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a series flat to round-off has no trend to correlate
    let r_squared = if syy > n * (1e-12 * my.abs()).powi(2) { sxy * sxy / (sxx * syy) } else { 0.0 };
    Ok(GrowthReport {
        t_min: pts[0].0,
        t_max: pts[pts.len() - 1].0,
        samples: pts.len(),
        slope,
        intercept,
        r_squared,
    })
}

/// Ordinary least-squares slope and `R^2` of `log y` against `log t` over
/// every sample with `t, y > 0`. No window restrictions apply.
pub fn log_log_slope<T: Real>(series: &[(T, T)]) -> Result<(f64, f64), AnalysisError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .map(|&(t, y)| (to_f64(t), to_f64(y)))
        .filter(|&(t, y)| t > 0.0 && y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(AnalysisError::TooFewSamples { found: pts.len(), needed: 3 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((sxy / sxx, r2))
}

/// Tolerance on the `L^p` exponent spread.
pub const LP_TOLERANCE: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpInterpolationReport {
    pub a2: f64,
    pub a4: f64,
    pub a_inf: f64,
    pub spread: f64,
    pub tolerance: f64,
    pub spread_ok: bool,
    pub a4_between: bool,
    pub pass: bool,
}

/// Fits pure power laws to the `L^2`, `L^4` and `L^inf` series and checks
/// `a(inf) - a(2) = 1/2` and `a(2) <= a(4) <= a(inf)`, both within `tolerance`.
pub fn lp_interpolation_check<T: Real>(
    l2: &[(T, T)],
    l4: &[(T, T)],
    linf: &[(T, T)],
    window: Option<(f64, f64)>,
    tolerance: f64,
) -> Result<LpInterpolationReport, AnalysisError> {
    let window = match window {
        Some(w) => w,
        None => default_window(linf).ok_or(AnalysisError::TooFewSamples { found: 0, needed: MIN_SAMPLES })?,
    };
    let a = |s: &[(T, T)]| fit_decay(s, Some(window), DecayModel::power_law()).map(|f| f.a);
    let (a2, a4, a_inf) = (a(l2)?, a(l4)?, a(linf)?);
    let spread = a_inf - a2;
    let spread_ok = (spread - 0.5).abs() <= tolerance;
    let (lo, hi) = (a2.min(a_inf), a2.max(a_inf));
    let a4_between = a4 >= lo - tolerance && a4 <= hi + tolerance;
    Ok(LpInterpolationReport {
        a2,
        a4,
        a_inf,
        spread,
        tolerance,
        spread_ok,
        a4_between,
        pass: spread_ok && a4_between,
    })
}
