//! Built-in scenarios: the model systems with fully specified data, grid and checks.

use kgres::solver::{CauchyData, ComponentData};

use crate::config::{
    ChecksConfig, ConditionConfig, FitConfig, GridConfig, GrowthCheck, ProfileConfig, ScenarioConfig, TermConfig,
    TimeConfig,
};

const EPSILON: f64 = 0.01;
const HALF_LENGTH: f64 = 600.0;
const POINTS: usize = 16384;
const T_FINAL: f64 = 400.0;
const FIT_WINDOW: [f64; 2] = [50.0, 400.0];

fn term(target: usize, factors: [&str; 3], coeff: f64) -> TermConfig {
    TermConfig { target, factors: factors.iter().map(|s| s.to_string()).collect(), coeff }
}

fn bump_data(n: usize) -> CauchyData {
    CauchyData { epsilon: EPSILON, support_radius: 1.0, components: vec![ComponentData::bump(); n] }
}

fn base(name: &str, description: &str, masses: &[&str], terms: Vec<TermConfig>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        description: description.into(),
        masses: masses.iter().map(|s| s.to_string()).collect(),
        terms,
        data: bump_data(masses.len()),
        grid: GridConfig { half_length: HALF_LENGTH, points: POINTS },
        time: TimeConfig { t_final: T_FINAL, dt: None, sample_every: 0.5, snapshots: vec![T_FINAL] },
        condition: None,
        profile: None,
        fits: FitConfig { enabled: true, window: Some(FIT_WINDOW) },
        checks: ChecksConfig::default(),
        output: None,
    }
}

fn decay_checks() -> ChecksConfig {
    ChecksConfig {
        sup_exponent: Some([0.4, 0.6]),
        l2_exponent: Some([-0.1, 0.1]),
        derivatives: true,
        lp_interpolation: true,
        ..ChecksConfig::default()
    }
}

/// `u1^2 u2`, `u1^3` with `m2 = 3 m1`.
pub fn coupled_pair() -> ScenarioConfig {
    let mut c = base(
        "coupled-pair",
        "two masses in 1:3 resonance coupled by u1^2 u2 and u1^3; the diagonal matrix diag(m1, m2) makes the form vanish",
        &["1", "3"],
        vec![term(1, ["u1", "u1", "u2"], 1.0), term(2, ["u1", "u1", "u1"], 1.0)],
    );
    c.condition = Some(ConditionConfig::diagonal(vec![1.0, 3.0], 0));
    // the chart stays a few support radii inside the cone over the whole run
    c.profile = Some(ProfileConfig {
        tau0: Some(20.0),
        z_max: 1.5,
        z_count: 61,
        ode_tau0: Some(20.0),
        ..ProfileConfig::default()
    });
    c.checks = ChecksConfig {
        energy_exponent: Some(0.4),
        reconstruction: Some(1e-6),
        profile_ode_gap: Some(0.15),
        ..decay_checks()
    };
    c
}

/// Four waves with `m4 = m1 + m2 + m3`, each driven by the product of the other three.
pub fn four_wave() -> ScenarioConfig {
    let mut c = base(
        "four-wave",
        "four masses with m4 = m1 + m2 + m3, F_j the product of the other three components",
        &["1", "2", "3", "6"],
        vec![
            term(1, ["u2", "u3", "u4"], 1.0),
            term(2, ["u3", "u4", "u1"], 1.0),
            term(3, ["u4", "u1", "u2"], 1.0),
            term(4, ["u1", "u2", "u3"], 1.0),
        ],
    );
    c.condition = Some(ConditionConfig::diagonal(vec![1.0 / 3.0, 2.0 / 3.0, 1.0, 6.0], 0));
    c.checks = decay_checks();
    c
}

/// `(d_t u1)^2 d_x u2`, `(d_t u2)^2 d_x u1` away from both resonant mass ratios.
pub fn derivative_pair() -> ScenarioConfig {
    let mut c = base(
        "derivative-pair",
        "derivative coupling with m1 != m2 and m2 != 3 m1; the solution stays of free size",
        &["1", "2"],
        vec![term(1, ["ut1", "ut1", "ux2"], 1.0), term(2, ["ut2", "ut2", "ux1"], 1.0)],
    );
    c.checks = ChecksConfig { sqrt_t_spread: Some(2.0), ..ChecksConfig::default() };
    c
}

/// A free field forcing a second field at three times its mass.
pub fn forced_resonant() -> ScenarioConfig {
    let mut c = base(
        "forced-resonant",
        "u1 free, u2 forced by u1^3 with m2 = 3 m1; u2 decays no faster than t^-1/2 log t",
        &["1", "3"],
        vec![term(2, ["u1", "u1", "u1"], 1.0)],
    );
    c.data.components[1] = ComponentData::zero();
    c.checks = ChecksConfig { growth: Some(GrowthCheck { component: 2, min_r_squared: 0.9 }), ..ChecksConfig::default() };
    c
}

/// `(u1^2 + u2^2) u_j` with equal masses.
pub fn equal_mass_cubic() -> ScenarioConfig {
    let mut c = base(
        "equal-mass-cubic",
        "equal masses with the rotation-invariant cubic (u1^2 + u2^2) u_j",
        &["1", "1"],
        vec![
            term(1, ["u1", "u1", "u1"], 1.0),
            term(1, ["u2", "u2", "u1"], 1.0),
            term(2, ["u1", "u1", "u2"], 1.0),
            term(2, ["u2", "u2", "u2"], 1.0),
        ],
    );
    c.checks = ChecksConfig { sup_exponent: Some([0.4, 0.6]), ..ChecksConfig::default() };
    c
}

/// `-((d_t u1)^2 + (d_t u2)^2) d_t u_j` with equal masses.
pub fn equal_mass_dissipative() -> ScenarioConfig {
    let mut c = base(
        "equal-mass-dissipative",
        "equal masses with the dissipative cubic -|u_t|^2 u_t",
        &["1", "1"],
        vec![
            term(1, ["ut1", "ut1", "ut1"], -1.0),
            term(1, ["ut2", "ut2", "ut1"], -1.0),
            term(2, ["ut1", "ut1", "ut2"], -1.0),
            term(2, ["ut2", "ut2", "ut2"], -1.0),
        ],
    );
    c.condition = Some(ConditionConfig::diagonal(vec![1.0, 1.0], 3));
    c.checks = ChecksConfig { sup_exponent: Some([0.4, 0.7]), ..ChecksConfig::default() };
    c
}

/// `-|u_t|^2 d_t u1 - (d_t u1)^2 d_t u2` and `-|u_t|^2 d_t u2 + (d_t u1)^3` with `m2 = 3 m1`.
pub fn dissipative_resonant() -> ScenarioConfig {
    let mut c = base(
        "dissipative-resonant",
        "1:3 resonant pair with dissipative derivative terms; strict condition with A = diag(m1^2, m2^2), k = 3",
        &["1", "3"],
        vec![
            term(1, ["ut1", "ut1", "ut1"], -1.0),
            term(1, ["ut2", "ut2", "ut1"], -1.0),
            term(1, ["ut1", "ut1", "ut2"], -1.0),
            term(2, ["ut1", "ut1", "ut2"], -1.0),
            term(2, ["ut2", "ut2", "ut2"], -1.0),
            term(2, ["ut1", "ut1", "ut1"], 1.0),
        ],
    );
    c.condition = Some(ConditionConfig::diagonal(vec![1.0, 9.0], 3));
    c.checks = ChecksConfig { sup_exponent: Some([0.4, 0.7]), ..ChecksConfig::default() };
    c
}

pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    vec![
        coupled_pair(),
        four_wave(),
        derivative_pair(),
        forced_resonant(),
        equal_mass_cubic(),
        equal_mass_dissipative(),
        dissipative_resonant(),
    ]
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_validate_and_round_trip() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 7);
        for s in all {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
            let again = ScenarioConfig::from_toml(&s.to_toml()).unwrap();
            assert_eq!(s, again);
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 7);
    }
}
