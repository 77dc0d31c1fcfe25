//! The scenario pipeline: condition check, solve, profile extraction, fits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kgres::analysis::{fit_decay, growth_correlation, log_log_slope, lp_interpolation_check, DecayFit, DecayModel};
use kgres::analysis::{GrowthReport, LpInterpolationReport, LP_TOLERANCE};
use kgres::condition::{check_condition, search_matrix, ConditionReport, SearchOptions, SearchOutcome};
use kgres::profile::{
    energy_diagnostic, extract_profile, integrate_profile_ode, lyapunov_series, reconstruction_residual,
    HyperbolicChart, OdeOptions, ProbeRecorder, ProfileTrajectory, WeightFunction,
};
use kgres::reduced::ReducedSystem;
use kgres::solver::{evolve, write_snapshot, EvolveOptions, Grid1D, NormObserver, Observer, StateObserver};
use kgres::ConditionMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::series::SeriesTable;

pub const SERIES_FILE: &str = "series.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const PROFILE_FILE: &str = "profile.csv";
pub const CONFIG_FILE: &str = "config.toml";

const NORM_PS: [f64; 3] = [2.0, 4.0, f64::INFINITY];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Effective {
    pub dt: f64,
    pub steps: usize,
    pub t_reached: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blow_up: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub scenario: String,
    /// the config with every default made explicit
    pub config: ScenarioConfig,
    /// SHA-256 of `"blob <len>\0" + config.toml`
    pub config_sha256: String,
    pub effective: Effective,
    pub stages: Vec<StageRecord>,
    pub files: Vec<String>,
    pub pass: bool,
}

/// JSON has no NaN; serde_json writes it as `null`, read it back as NaN.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn band(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), value, lower: Some(lower), upper: Some(upper), pass: value >= lower && value <= upper }
    }

    fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self { name: name.into(), value, lower: None, upper: Some(upper), pass: value <= upper }
    }

    fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self { name: name.into(), value, lower: Some(lower), upper: None, pass: value >= lower }
    }

    fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value: if pass { 1.0 } else { 0.0 }, lower: None, upper: None, pass }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitEntry {
    pub column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub exponent: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub given: Option<ConditionReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSummary {
    pub outcome: String,
    /// row-major `[re, im]`
    pub matrix: Vec<[f64; 2]>,
    pub report: ConditionReport<f64>,
}

impl SearchSummary {
    pub fn from_outcome(o: &SearchOutcome<f64>) -> Self {
        let outcome = match o {
            SearchOutcome::Found { .. } => "found",
            SearchOutcome::Counterexample { .. } => "counterexample",
            SearchOutcome::NotConverged { .. } => "not_converged",
        };
        Self {
            outcome: outcome.into(),
            matrix: o.matrix().entries().iter().map(|c| [c.re, c.im]).collect(),
            report: o.report().clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub tau0: f64,
    pub tau_max: f64,
    pub z_max: f64,
    pub z_count: usize,
    pub tau_count: usize,
    pub u_sup: f64,
    pub reconstruction_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_window: Option<[f64; 2]>,
    /// largest increase of `<alpha, A alpha>` along the ODE ray
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_increase: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blow_up: Option<String>,
    pub fit_window: [f64; 2],
    pub fits: Vec<FitEntry>,
    pub growth: Vec<(String, GrowthReport)>,
    pub lp_interpolation: Vec<(String, LpInterpolationReport)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub quiet: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub report: Report,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.manifest.pass
    }
}

/// Git-blob style SHA-256 of `text`.
pub fn blob_sha256(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Stages {
    records: Vec<StageRecord>,
    failed: bool,
    quiet: bool,
}

impl Stages {
    fn run<R>(&mut self, name: &str, enabled: bool, f: impl FnOnce() -> Result<R, String>) -> Option<R> {
        if !enabled || self.failed {
            let message = if self.failed { Some("earlier stage failed".to_string()) } else { None };
            self.records.push(StageRecord { name: name.into(), status: StageStatus::Skipped, message, seconds: 0.0 });
            return None;
        }
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        match out {
            Ok(v) => {
                if !self.quiet {
                    eprintln!("[{name}] done in {seconds:.1} s");
                }
                self.records.push(StageRecord { name: name.into(), status: StageStatus::Ok, message: None, seconds });
                Some(v)
            }
            Err(message) => {
                if !self.quiet {
                    eprintln!("[{name}] failed: {message}");
                }
                self.failed = true;
                self.records.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Failed,
                    message: Some(message),
                    seconds,
                });
                None
            }
        }
    }
}

fn condition_stage(cfg: &ScenarioConfig, sys: &ReducedSystem<f64>) -> Result<(ConditionSummary, Vec<Check>), String> {
    let c = cfg.condition.as_ref().expect("stage enabled only with a condition section");
    let n = cfg.n_components();
    let spec = c.sampling();
    let mut checks = Vec::new();
    let given = match c.matrix(n).map_err(|e| e.to_string())? {
        Some(a) => {
            let r = check_condition(&a, sys, c.exponent, &spec).map_err(|e| e.to_string())?;
            checks.push(Check {
                name: "condition.worst_ratio".into(),
                value: r.worst_ratio,
                lower: None,
                upper: Some(if c.exponent == 0 { c.tolerance } else { -c.tolerance }),
                pass: r.pass,
            });
            Some(r)
        }
        None => None,
    };
    let search = if c.search && !given.as_ref().is_some_and(|r| r.pass) {
        let opts = SearchOptions { verify: spec, ..SearchOptions::default() };
        let o = search_matrix(sys, c.exponent, &opts).map_err(|e| e.to_string())?;
        checks.push(Check::flag("condition.search_found", o.is_found()));
        Some(SearchSummary::from_outcome(&o))
    } else {
        None
    };
    Ok((ConditionSummary { exponent: c.exponent, given, search }, checks))
}

fn fit_stage(cfg: &ScenarioConfig, table: &SeriesTable, report: &mut Report) {
    let (t0, t1) = cfg.fit_window();
    let window = Some((t0, t1));
    report.fit_window = [t0, t1];
    let n = cfg.n_components();
    let checks_cfg = &cfg.checks;
    let components: Vec<usize> = checks_cfg.components.clone().unwrap_or_else(|| (1..=n).collect());
    let fields: &[&str] = if checks_cfg.derivatives { &["u", "ut", "ux"] } else { &["u"] };

    for j in 1..=n {
        for field in ["u", "ut", "ux"] {
            for p in NORM_PS {
                let column = format!("{field}{j}_{}", NormObserver::<f64>::p_label(p));
                let entry = match table.series(&column) {
                    Some(s) => match fit_decay(&s, window, DecayModel::power_law()) {
                        Ok(fit) => FitEntry { column, fit: Some(fit), error: None },
                        Err(e) => FitEntry { column, fit: None, error: Some(e.to_string()) },
                    },
                    None => FitEntry { column, fit: None, error: Some("column missing".into()) },
                };
                report.fits.push(entry);
            }
        }
    }
    let exponent = |column: &str| -> Option<f64> {
        report.fits.iter().find(|f| f.column == column).and_then(|f| f.fit.as_ref()).map(|f| f.a)
    };
    let mut checks = Vec::new();
    for &j in &components {
        for field in fields {
            if let Some([lo, hi]) = checks_cfg.sup_exponent {
                let col = format!("{field}{j}_Linf");
                checks.push(Check::band(format!("decay.{col}"), exponent(&col).unwrap_or(f64::NAN), lo, hi));
            }
            if let Some([lo, hi]) = checks_cfg.l2_exponent {
                let col = format!("{field}{j}_L2");
                checks.push(Check::band(format!("decay.{col}"), exponent(&col).unwrap_or(f64::NAN), lo, hi));
            }
        }
    }
    if checks_cfg.lp_interpolation {
        for &j in &components {
            let get = |p: &str| table.series(&format!("u{j}_{p}")).unwrap_or_default();
            let name = format!("u{j}");
            match lp_interpolation_check(&get("L2"), &get("L4"), &get("Linf"), window, LP_TOLERANCE) {
                Ok(r) => {
                    checks.push(Check::flag(format!("lp_interpolation.{name}"), r.pass));
                    report.lp_interpolation.push((name, r));
                }
                Err(_) => checks.push(Check::flag(format!("lp_interpolation.{name}"), false)),
            }
        }
    }
    for j in 1..=n {
        let col = format!("u{j}_Linf");
        if let Some(s) = table.series(&col) {
            if let Ok(g) = growth_correlation(&s, window) {
                report.growth.push((col, g));
            }
        }
    }
    if let Some(gc) = &checks_cfg.growth {
        let col = format!("u{}_Linf", gc.component);
        let g = report.growth.iter().find(|(c, _)| *c == col).map(|(_, g)| g.clone());
        let (slope, r2) = g.map_or((f64::NAN, f64::NAN), |g| (g.slope, g.r_squared));
        checks.push(Check::at_least(format!("growth.{col}.slope"), slope, 0.0));
        checks.push(Check::at_least(format!("growth.{col}.r_squared"), r2, gc.min_r_squared));
    }
    if let Some(bound) = checks_cfg.sqrt_t_spread {
        for &j in &components {
            let col = format!("u{j}_Linf");
            let scaled: Vec<f64> = table
                .series(&col)
                .unwrap_or_default()
                .into_iter()
                .filter(|(t, _)| *t >= t0 && *t <= t1)
                .map(|(t, y)| t.sqrt() * y)
                .collect();
            let hi = scaled.iter().copied().fold(f64::NAN, f64::max);
            let lo = scaled.iter().copied().fold(f64::NAN, f64::min);
            checks.push(Check::at_most(format!("sqrt_t_spread.{col}"), hi / lo, bound));
        }
    }
    report.checks.extend(checks);
}

struct ProfilePlan {
    chart: HyperbolicChart<f64>,
    weight: WeightFunction<f64>,
    taus: Vec<f64>,
    zs: Vec<f64>,
    /// dense samples of the `z = 0` comparison ray
    ode_taus: Vec<f64>,
}

fn profile_plan(cfg: &ScenarioConfig) -> Result<ProfilePlan, String> {
    let p = cfg.profile.as_ref().expect("profile section present");
    let tau0 = cfg.tau0().expect("profile section present");
    let chart = HyperbolicChart::new(cfg.data.support_radius, tau0, p.z_max, p.z_count)
        .and_then(|c| c.with_tau_ratio(p.tau_ratio))
        .map_err(|e| e.to_string())?;
    let weight = WeightFunction::new(p.kappa).map_err(|e| e.to_string())?;
    let taus = chart.tau_samples(chart.max_tau(cfg.time.t_final, p.z_max));
    if taus.len() < 3 {
        return Err(format!("fewer than three tau samples fit before t = {}", cfg.time.t_final));
    }
    let mut ode_taus = Vec::new();
    if p.ode_compare {
        let start = p.ode_tau0.unwrap_or(tau0);
        let end = start * 10f64.powf(p.ode_decades);
        let count = ((end - start) / p.ode_step).floor() as usize;
        ode_taus = (0..=count).map(|i| start + p.ode_step * i as f64).collect();
    }
    Ok(ProfilePlan { zs: chart.z_nodes(), chart, weight, taus, ode_taus })
}

fn profile_csv(traj: &ProfileTrajectory<f64>, a: Option<&ConditionMatrix>) -> String {
    let n = traj.masses.len();
    let mut out = String::from("tau,z");
    for j in 1..=n {
        let _ = write!(out, ",re_alpha{j},im_alpha{j}");
    }
    out.push_str(",abs_alpha");
    if a.is_some() {
        out.push_str(",lyapunov");
    }
    out.push('\n');
    for ray in &traj.rays {
        for (tau, alpha) in ray.taus.iter().zip(&ray.alphas) {
            let _ = write!(out, "{tau:.17e},{:.17e}", ray.z);
            for v in alpha {
                let _ = write!(out, ",{:.17e},{:.17e}", v.re, v.im);
            }
            let _ = write!(out, ",{:.17e}", kgres::scalar::cnorm(alpha));
            if let Some(a) = a {
                let _ = write!(out, ",{:.17e}", a.quadratic_form(alpha));
            }
            out.push('\n');
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn profile_stage(
    cfg: &ScenarioConfig,
    plan: &ProfilePlan,
    probe: ProbeRecorder<f64>,
    ray_probe: Option<ProbeRecorder<f64>>,
    sys: &ReducedSystem<f64>,
    matrix: Option<&ConditionMatrix>,
    dir: &Path,
    report: &mut Report,
) -> Result<(), String> {
    let p = cfg.profile.as_ref().expect("profile section present");
    let masses = sys.masses_real().to_vec();
    let values = probe.finish().map_err(|e| e.to_string())?;
    let traj = extract_profile(&values, &plan.taus, &plan.zs, &plan.weight, &masses).map_err(|e| e.to_string())?;
    let u_sup = values.iter().flat_map(|v| v.u.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let residual = reconstruction_residual(&traj, &plan.weight);
    write_file(&dir.join(PROFILE_FILE), profile_csv(&traj, matrix)).map_err(|e| e.to_string())?;

    let energy = energy_diagnostic(&values, &plan.taus, &plan.zs, &plan.weight, &masses).ok();
    let energy_fit = energy.as_ref().and_then(|e| log_log_slope(e).ok());

    let mut summary = ProfileSummary {
        tau0: plan.chart.tau0(),
        tau_max: *plan.taus.last().expect("non-empty"),
        z_max: p.z_max,
        z_count: plan.zs.len(),
        tau_count: plan.taus.len(),
        u_sup,
        reconstruction_residual: residual,
        energy_exponent: energy_fit.map(|f| f.0),
        energy_r_squared: energy_fit.map(|f| f.1),
        ode_gap: None,
        ode_window: None,
        lyapunov_increase: None,
    };
    if let Some(ray_probe) = ray_probe {
        let ray_values = ray_probe.finish().map_err(|e| e.to_string())?;
        let ray = extract_profile(&ray_values, &plan.ode_taus, &[0.0], &plan.weight, &masses)
            .map_err(|e| e.to_string())?
            .rays
            .remove(0);
        let ode = integrate_profile_ode(
            sys,
            &plan.weight,
            0.0,
            &ray.alphas[0],
            ray.taus[0],
            &ray.taus,
            false,
            &OdeOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let gap = ray
            .alphas
            .iter()
            .zip(&ode.alphas)
            .map(|(a, b)| {
                let diff: Vec<_> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                kgres::scalar::cnorm(&diff) / kgres::scalar::cnorm(a)
            })
            .fold(0.0f64, f64::max);
        summary.ode_gap = Some(gap);
        summary.ode_window = Some([ray.taus[0], *ray.taus.last().expect("non-empty ray")]);
        if let Some(a) = matrix {
            let l = lyapunov_series(&ode, a);
            let inc = l.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            summary.lyapunov_increase = Some(inc);
        }
    }
    let checks = &cfg.checks;
    if let Some(bound) = checks.reconstruction {
        report.checks.push(Check::at_most("profile.reconstruction", residual / u_sup.max(f64::MIN_POSITIVE), bound));
    }
    if let Some(bound) = checks.energy_exponent {
        report.checks.push(Check::at_most("profile.energy_exponent", summary.energy_exponent.unwrap_or(f64::NAN), bound));
    }
    if let Some(bound) = checks.profile_ode_gap {
        report.checks.push(Check::at_most("profile.ode_gap", summary.ode_gap.unwrap_or(f64::NAN), bound));
    }
    report.profile = Some(summary);
    Ok(())
}

fn finish(mut report: Report, stages: &Stages) -> Report {
    report.pass = !stages.failed && report.checks.iter().all(|c| c.pass);
    report
}

/// Runs `cfg` into `dir` (created if needed) and writes all artifacts.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let resolved_sys = cfg.system()?;
    let sys = ReducedSystem::new(resolved_sys.masses.clone(), resolved_sys.nonlinearity.clone())
        .map_err(|e| RunError::Input(e.to_string()))?;
    let matrix = match &cfg.condition {
        Some(c) => c.matrix(cfg.n_components())?,
        None => None,
    };
    let mut stages = Stages { records: Vec::new(), failed: false, quiet: opts.quiet };
    let mut report = Report { scenario: cfg.name.clone(), ..Report::default() };
    let mut files = Vec::new();

    if let Some((summary, checks)) = stages.run("condition", cfg.condition.is_some(), || condition_stage(cfg, &sys)) {
        report.condition = Some(summary);
        report.checks.extend(checks);
    }

    let plan = match &cfg.profile {
        Some(_) => match profile_plan(cfg) {
            Ok(p) => Some(p),
            Err(e) => return Err(RunError::Input(format!("profile: {e}"))),
        },
        None => None,
    };
    let mut probe = plan.as_ref().map(|p| ProbeRecorder::new(p.chart.queries(&p.taus, &p.zs)));
    let mut ray_probe = plan
        .as_ref()
        .filter(|p| !p.ode_taus.is_empty())
        .map(|p| ProbeRecorder::new(p.chart.queries(&p.ode_taus, &[0.0])));
    let mut effective = Effective::default();
    let mut table = None;
    let solved = stages.run("solve", true, || {
        let grid = Grid1D::new(cfg.grid.half_length, cfg.grid.points).map_err(|e| e.to_string())?;
        let mut options = EvolveOptions::new(cfg.time.t_final);
        options.dt = cfg.time.dt;
        let mut norms = NormObserver::new(cfg.time.sample_every, &NORM_PS);
        let mut states = StateObserver::new(&cfg.time.snapshots);
        let record = {
            let mut observers: Vec<&mut dyn Observer<f64>> = vec![&mut norms, &mut states];
            if let Some(p) = probe.as_mut() {
                observers.push(p);
            }
            if let Some(p) = ray_probe.as_mut() {
                observers.push(p);
            }
            evolve(&resolved_sys.masses, &resolved_sys.nonlinearity, &cfg.data, grid, &options, &mut observers)
                .map_err(|e| e.to_string())?
        };
        effective = Effective {
            dt: record.dt,
            steps: record.steps,
            t_reached: record.final_state.t(),
            blow_up: record.blow_up.as_ref().map(|b| format!("t = {}: {:?}", b.t, b.reason)),
        };
        let csv = norms.to_csv();
        write_file(&dir.join(SERIES_FILE), &csv).map_err(|e| e.to_string())?;
        files.push(SERIES_FILE.to_string());
        for s in &states.states {
            let name = format!("state_{:.3}.bin", s.t());
            let mut buf = Vec::new();
            write_snapshot(&mut buf, s, cfg.grid.half_length).map_err(|e| e.to_string())?;
            write_file(&dir.join(&name), buf).map_err(|e| e.to_string())?;
            files.push(name);
        }
        table = Some(SeriesTable::parse(&csv)?);
        match &record.blow_up {
            Some(b) => Err(format!("blow-up flagged at t = {}", b.t)),
            None => Ok(()),
        }
    });
    report.blow_up = effective.blow_up.clone();
    let _ = solved;

    let extract_enabled = plan.is_some();
    stages.run("extract", extract_enabled, || {
        let plan = plan.as_ref().expect("enabled with a plan");
        let probe = probe.take().expect("probe registered");
        profile_stage(cfg, plan, probe, ray_probe.take(), &sys, matrix.as_ref(), dir, &mut report)
    });
    if extract_enabled && !stages.failed {
        files.push(PROFILE_FILE.to_string());
    }

    stages.run("fit", cfg.fits.enabled, || {
        let table = table.as_ref().ok_or("no series available")?;
        fit_stage(cfg, table, &mut report);
        Ok(())
    });

    let report = finish(report, &stages);
    write_file(&dir.join(REPORT_FILE), serde_json::to_string_pretty(&report).expect("report serializes"))?;
    files.push(REPORT_FILE.to_string());

    let resolved = cfg.resolved(effective.dt, dir);
    let config_text = resolved.to_toml();
    write_file(&dir.join(CONFIG_FILE), &config_text)?;
    files.push(CONFIG_FILE.to_string());
    files.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        tool: format!("kgres {}", env!("CARGO_PKG_VERSION")),
        scenario: cfg.name.clone(),
        config_sha256: blob_sha256(&config_text),
        config: resolved,
        effective,
        stages: stages.records,
        files,
        pass: report.pass,
    };
    write_file(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(RunOutcome { dir: dir.to_path_buf(), manifest, report })
}

/// Recomputes fits and fit-based checks of an existing run directory,
/// optionally over a new window. Overwrites `report.json`.
pub fn refit(dir: &Path, window: Option<[f64; 2]>) -> Result<Report, RunError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_error(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| io_error(&manifest_path, e))?;
    let mut cfg = manifest.config;
    if window.is_some() {
        cfg.fits.window = window;
    }
    cfg.validate()?;
    let series_path = dir.join(SERIES_FILE);
    let csv = fs::read_to_string(&series_path).map_err(|e| io_error(&series_path, e))?;
    let table = SeriesTable::parse(&csv).map_err(|e| io_error(&series_path, e))?;
    let report_path = dir.join(REPORT_FILE);
    let previous: Report = fs::read_to_string(&report_path)
        .map_err(|e| io_error(&report_path, e))
        .and_then(|t| serde_json::from_str(&t).map_err(|e| io_error(&report_path, e)))?;
    let carried: Vec<Check> = previous
        .checks
        .into_iter()
        .filter(|c| c.name.starts_with("condition.") || c.name.starts_with("profile."))
        .collect();
    let mut report = Report {
        scenario: cfg.name.clone(),
        condition: previous.condition,
        blow_up: manifest.effective.blow_up.clone(),
        profile: previous.profile,
        checks: carried,
        ..Report::default()
    };
    fit_stage(&cfg, &table, &mut report);
    let stages_failed = manifest.stages.iter().any(|s| s.status == StageStatus::Failed);
    report.pass = !stages_failed && report.checks.iter().all(|c| c.pass);
    write_file(&report_path, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(report)
}
