//! TOML scenario configuration.

use std::path::{Path, PathBuf};

use kgres::algebra::{CubicNonlinearity, CubicTerm, Factor, MassVector};
use kgres::condition::{ConditionKind, SamplingSpec};
use kgres::solver::CauchyData;
use kgres::ConditionMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// rationals as `"p/q"` strings, non-decreasing
    pub masses: Vec<String>,
    #[serde(default)]
    pub terms: Vec<TermConfig>,
    pub data: CauchyData,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub fits: FitConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// `coeff * f1 * f2 * f3` added to `F_target`; components are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub target: usize,
    /// `"u2"`, `"ut1"`, `"ux3"`
    pub factors: Vec<String>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// periodic domain `[-L, L)`
    pub half_length: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    /// times at which binary snapshots are written
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_sample_every() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    /// row-major `[re, im]` pairs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<[f64; 2]>>>,
    /// 0 for the non-positive form, 1 or 3 for the strict forms
    #[serde(default)]
    pub exponent: u32,
    /// search for a matrix instead of (or after failing with) the given one
    #[serde(default)]
    pub search: bool,
    #[serde(default = "default_z_max")]
    pub z_max: f64,
    #[serde(default = "default_z_count")]
    pub z_count: usize,
    #[serde(default = "default_sphere_count")]
    pub sphere_count: usize,
    #[serde(default = "default_condition_tolerance")]
    pub tolerance: f64,
}

fn default_z_max() -> f64 {
    SamplingSpec::default().z_max
}
fn default_z_count() -> usize {
    SamplingSpec::default().z_count
}
fn default_sphere_count() -> usize {
    SamplingSpec::default().sphere_count
}
fn default_condition_tolerance() -> f64 {
    SamplingSpec::default().tolerance
}

impl ConditionConfig {
    pub fn diagonal(values: Vec<f64>, exponent: u32) -> Self {
        Self {
            diagonal: Some(values),
            entries: None,
            exponent,
            search: false,
            z_max: default_z_max(),
            z_count: default_z_count(),
            sphere_count: default_sphere_count(),
            tolerance: default_condition_tolerance(),
        }
    }

    pub fn sampling(&self) -> SamplingSpec {
        SamplingSpec {
            z_max: self.z_max,
            z_count: self.z_count,
            sphere_count: self.sphere_count,
            tolerance: self.tolerance,
            ..SamplingSpec::default()
        }
    }

    pub fn kind(&self) -> Result<ConditionKind, ConfigError> {
        ConditionKind::from_exponent(self.exponent).map_err(|e| field_error("condition.exponent", e.to_string()))
    }

    /// `None` when only a search was requested.
    pub fn matrix(&self, n: usize) -> Result<Option<ConditionMatrix>, ConfigError> {
        let entries = match (&self.diagonal, &self.entries) {
            (Some(_), Some(_)) => {
                return Err(field_error("condition", "give either `diagonal` or `entries`, not both"));
            }
            (None, None) => return Ok(None),
            (Some(d), None) => {
                if d.len() != n {
                    return Err(field_error("condition.diagonal", format!("expected {n} values, got {}", d.len())));
                }
                let mut e = vec![Complex::new(0.0, 0.0); n * n];
                for (k, v) in d.iter().enumerate() {
                    e[k * n + k] = Complex::new(*v, 0.0);
                }
                e
            }
            (None, Some(rows)) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(field_error("condition.entries", format!("expected a {n}x{n} matrix")));
                }
                rows.iter().flatten().map(|p| Complex::new(p[0], p[1])).collect()
            }
        };
        let field = if self.diagonal.is_some() { "condition.diagonal" } else { "condition.entries" };
        ConditionMatrix::new(n, entries).map(Some).map_err(|e| field_error(field, e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// defaults to `2 + 2B`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default = "default_profile_z_max")]
    pub z_max: f64,
    #[serde(default = "default_profile_z_count")]
    pub z_count: usize,
    #[serde(default = "default_tau_ratio")]
    pub tau_ratio: f64,
    /// compare the extracted ray at `z = 0` with the resonant-only profile ODE
    #[serde(default = "yes")]
    pub ode_compare: bool,
    /// length of the comparison window in decades of `tau`
    #[serde(default = "default_ode_decades")]
    pub ode_decades: f64,
    /// start of the comparison ray; defaults to `tau0`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode_tau0: Option<f64>,
    /// spacing of the comparison ray samples
    #[serde(default = "default_ode_step")]
    pub ode_step: f64,
}

fn default_kappa() -> f64 {
    2.0
}
fn default_profile_z_max() -> f64 {
    2.0
}
fn default_profile_z_count() -> usize {
    9
}
fn default_tau_ratio() -> f64 {
    1.05
}
fn default_ode_decades() -> f64 {
    1.0
}
fn default_ode_step() -> f64 {
    0.05
}
fn yes() -> bool {
    true
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            tau0: None,
            z_max: default_profile_z_max(),
            z_count: default_profile_z_count(),
            tau_ratio: default_tau_ratio(),
            ode_compare: true,
            ode_decades: default_ode_decades(),
            ode_tau0: None,
            ode_step: default_ode_step(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// defaults to `[T/8, T]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { enabled: true, window: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthCheck {
    /// 1-based
    pub component: usize,
    #[serde(default = "default_min_r2")]
    pub min_r_squared: f64,
}

fn default_min_r2() -> f64 {
    0.9
}

/// Pass/fail criteria evaluated after the run. Absent entries are not checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// band for the fitted `L^inf` exponent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_exponent: Option<[f64; 2]>,
    /// band for the fitted `L^2` exponent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_exponent: Option<[f64; 2]>,
    /// apply the exponent bands to `u_t` and `u_x` as well
    #[serde(default)]
    pub derivatives: bool,
    /// 1-based components the exponent bands apply to (default: all)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<usize>>,
    #[serde(default)]
    pub lp_interpolation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthCheck>,
    /// bound on `max / min` of `t^{1/2} ||u_j||_inf` over the fit window
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sqrt_t_spread: Option<f64>,
    /// upper bound on the fitted growth exponent of the profile energy
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_exponent: Option<f64>,
    /// bound on the relative gap between extracted and ODE profiles
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_ode_gap: Option<f64>,
    /// bound on the amplitude reconstruction residual relative to `||u||_inf`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<f64>,
}

/// Model inputs built from a validated config.
#[derive(Clone, Debug)]
pub struct ResolvedSystem {
    pub masses: MassVector,
    pub nonlinearity: CubicNonlinearity,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n_components(&self) -> usize {
        self.masses.len()
    }

    pub fn system(&self) -> Result<ResolvedSystem, ConfigError> {
        let n = self.masses.len();
        for (i, m) in self.masses.iter().enumerate() {
            let parsed = kgres::algebra::parse_mass(m).map_err(|e| field_error(format!("masses[{i}]"), e.to_string()))?;
            if parsed <= kgres::Mass::from_integer(0) {
                return Err(field_error(format!("masses[{i}]"), format!("mass must be positive, got {m}")));
            }
        }
        let masses = MassVector::parse(&self.masses).map_err(|e| field_error("masses", e.to_string()))?;
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            if t.target == 0 || t.target > n {
                return Err(field_error(format!("terms[{i}].target"), format!("must be in 1..={n}, got {}", t.target)));
            }
            if t.factors.len() != 3 {
                return Err(field_error(
                    format!("terms[{i}].factors"),
                    format!("a cubic term needs 3 factors, got {}", t.factors.len()),
                ));
            }
            let mut fs = [Factor::u(0); 3];
            for (k, text) in t.factors.iter().enumerate() {
                let f: Factor =
                    text.parse().map_err(|e: kgres::algebra::AlgebraError| field_error(format!("terms[{i}].factors[{k}]"), e.to_string()))?;
                if f.component >= n {
                    return Err(field_error(
                        format!("terms[{i}].factors[{k}]"),
                        format!("component {} exceeds N = {n}", f.component + 1),
                    ));
                }
                fs[k] = f;
            }
            if !t.coeff.is_finite() {
                return Err(field_error(format!("terms[{i}].coeff"), "must be finite"));
            }
            terms.push(CubicTerm::new(t.target - 1, fs, t.coeff));
        }
        let nonlinearity = CubicNonlinearity::new(n, terms).map_err(|e| field_error("terms", e.to_string()))?;
        Ok(ResolvedSystem { masses, nonlinearity })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(field_error("name", "must not be empty"));
        }
        let n = self.masses.len();
        if n == 0 {
            return Err(field_error("masses", "need at least one component"));
        }
        self.system()?;
        let d = &self.data;
        if !(d.epsilon > 0.0 && d.epsilon.is_finite()) {
            return Err(field_error("data.epsilon", format!("must be positive, got {}", d.epsilon)));
        }
        if !(d.support_radius > 0.0 && d.support_radius.is_finite()) {
            return Err(field_error("data.support_radius", format!("must be positive, got {}", d.support_radius)));
        }
        if d.components.len() != n {
            return Err(field_error("data.components", format!("expected {n} entries, got {}", d.components.len())));
        }
        d.validate(n).map_err(|e| field_error("data.components", e.to_string()))?;
        let g = &self.grid;
        if g.points < 4 || !g.points.is_power_of_two() {
            return Err(field_error("grid.points", format!("must be a power of two >= 4, got {}", g.points)));
        }
        if !(g.half_length > 0.0 && g.half_length.is_finite()) {
            return Err(field_error("grid.half_length", format!("must be positive, got {}", g.half_length)));
        }
        let t = &self.time;
        if !(t.t_final > 0.0 && t.t_final.is_finite()) {
            return Err(field_error("time.t_final", format!("must be positive, got {}", t.t_final)));
        }
        if g.half_length <= d.support_radius + t.t_final {
            return Err(field_error(
                "grid.half_length",
                format!(
                    "must exceed data.support_radius + time.t_final = {} to keep the light cone inside the domain",
                    d.support_radius + t.t_final
                ),
            ));
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(field_error("time.dt", format!("must be positive, got {dt}")));
            }
        }
        if !(t.sample_every > 0.0) {
            return Err(field_error("time.sample_every", format!("must be positive, got {}", t.sample_every)));
        }
        if let Some(s) = t.snapshots.iter().find(|s| !(**s >= 0.0 && **s <= t.t_final)) {
            return Err(field_error("time.snapshots", format!("{s} lies outside [0, t_final]")));
        }
        if let Some(c) = &self.condition {
            c.kind()?;
            let m = c.matrix(n)?;
            if m.is_none() && !c.search {
                return Err(field_error("condition", "give a matrix (`diagonal` or `entries`) or set `search = true`"));
            }
            if c.z_count == 0 {
                return Err(field_error("condition.z_count", "must be positive"));
            }
        }
        if let Some(p) = &self.profile {
            if !(p.kappa >= 1.0) {
                return Err(field_error("profile.kappa", format!("must be >= 1, got {}", p.kappa)));
            }
            let tau0 = self.tau0().expect("profile present");
            if !(tau0 > 1.0 + 2.0 * d.support_radius) {
                return Err(field_error(
                    "profile.tau0",
                    format!("must exceed 1 + 2B = {}, got {tau0}", 1.0 + 2.0 * d.support_radius),
                ));
            }
            if p.z_count == 0 || !(p.z_max >= 0.0) {
                return Err(field_error("profile.z_count", "z grid must be non-empty with z_max >= 0"));
            }
            if !(p.tau_ratio > 1.0) {
                return Err(field_error("profile.tau_ratio", format!("must exceed 1, got {}", p.tau_ratio)));
            }
            if p.ode_compare {
                if let Some(t) = p.ode_tau0 {
                    if !(t >= tau0) {
                        return Err(field_error("profile.ode_tau0", format!("must be >= tau0 = {tau0}, got {t}")));
                    }
                }
                if !(p.ode_step > 0.0) || !(p.ode_decades > 0.0) {
                    return Err(field_error("profile.ode_step", "step and decades must be positive"));
                }
                let start = p.ode_tau0.unwrap_or(tau0);
                let end = start * 10f64.powf(p.ode_decades);
                let reach = self.time.t_final + 2.0 * d.support_radius;
                if end > reach {
                    return Err(field_error(
                        "profile.ode_decades",
                        format!("comparison ray ends at tau = {end}, beyond the run (tau <= {reach} at z = 0)"),
                    ));
                }
            }
        }
        if let Some(w) = self.fits.window {
            if !(w[0] >= kgres::analysis::MIN_WINDOW_START && w[1] > w[0]) {
                return Err(field_error("fits.window", format!("need 10 <= t_min < t_max, got {w:?}")));
            }
        }
        if let Some(gc) = &self.checks.growth {
            if gc.component == 0 || gc.component > n {
                return Err(field_error("checks.growth.component", format!("must be in 1..={n}")));
            }
        }
        if let Some(cs) = &self.checks.components {
            if let Some(bad) = cs.iter().find(|&&c| c == 0 || c > n) {
                return Err(field_error("checks.components", format!("component {bad} out of range 1..={n}")));
            }
        }
        Ok(())
    }

    pub fn tau0(&self) -> Option<f64> {
        self.profile.as_ref().map(|p| p.tau0.unwrap_or(2.0 + 2.0 * self.data.support_radius))
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.fits.window {
            Some(w) => (w[0], w[1]),
            None => ((self.time.t_final / 8.0).max(kgres::analysis::MIN_WINDOW_START), self.time.t_final),
        }
    }

    /// Copy with every optional setting replaced by its effective value.
    pub fn resolved(&self, dt: f64, output: &Path) -> Self {
        let mut c = self.clone();
        c.time.dt = Some(dt);
        let w = self.fit_window();
        c.fits.window = Some([w.0, w.1]);
        if let Some(p) = c.profile.as_mut() {
            p.tau0 = self.tau0();
            if p.ode_compare {
                p.ode_tau0 = p.ode_tau0.or(p.tau0);
            }
        }
        if c.checks.components.is_none() {
            c.checks.components = Some((1..=self.n_components()).collect());
        }
        c.output = Some(output.to_path_buf());
        c
    }
}
