//! Preset experiments and a one-parameter sweep harness.
//!
//! Cross couplings in the presets are constant, `phi ≡ K1` and
//! `phi* ≡ K2`, and both intra-population kernels are the shifted Gaussian.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, DiagnosticsOptions, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Interpolation, Trajectory};
use crate::kernels::Kernel;
use crate::model::{InitialData, ModelParams, SystemState};

pub const DEFAULT_SEED: u64 = 7;
/// Grid nodes per delay interval in the presets.
pub const STEPS_PER_DELAY: usize = 50;
/// Horizon of the presets in units of the delay.
pub const HORIZON_DELAYS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3Left,
    Fig3Right,
    Custom,
}

impl ScenarioName {
    pub const PRESETS: [ScenarioName; 6] = [
        ScenarioName::Fig1a,
        ScenarioName::Fig1b,
        ScenarioName::Fig2a,
        ScenarioName::Fig2b,
        ScenarioName::Fig3Left,
        ScenarioName::Fig3Right,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Fig1a => "fig1a",
            ScenarioName::Fig1b => "fig1b",
            ScenarioName::Fig2a => "fig2a",
            ScenarioName::Fig2b => "fig2b",
            ScenarioName::Fig3Left => "fig3_left",
            ScenarioName::Fig3Right => "fig3_right",
            ScenarioName::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    /// Accepts both `fig3_left` and `fig3-left`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ScenarioName::PRESETS
            .iter()
            .chain(core::iter::once(&ScenarioName::Custom))
            .find(|n| n.as_str() == norm)
            .copied()
            .ok_or_else(|| Error::UnknownScenario(String::from(s)))
    }
}

/// How the initial opinions are produced. Histories are constant and
/// equal to the `t = 0` opinions.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Every coordinate drawn uniformly from the given range, X first and
    /// then Y, from a ChaCha8 stream seeded with the scenario seed.
    Uniform { x: (f64, f64), y: (f64, f64) },
    Explicit { x: Vec<Vec<f64>>, y: Vec<Vec<f64>> },
}

impl InitSpec {
    pub fn default_uniform() -> Self {
        InitSpec::Uniform { x: (0.0, 1.0), y: (2.0, 3.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    pub params: ModelParams,
    pub init: InitSpec,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub interpolation: Interpolation,
}

fn preset_params(name: ScenarioName) -> Result<(usize, usize, usize, usize, f64, f64, f64)> {
    // (N, M, k, h, K1, K2, tau)
    Ok(match name {
        ScenarioName::Fig1a => (50, 5, 1, 1, 30.0, 0.3, 1.0),
        ScenarioName::Fig1b => (50, 5, 1, 1, 1.0, 1.0, 1.0),
        ScenarioName::Fig2a => (5, 5, 4, 1, 0.3, 30.0, 1.0),
        ScenarioName::Fig2b => (5, 5, 4, 1, 1.0, 1.0, 1.0),
        ScenarioName::Fig3Left => (20, 20, 20, 20, 0.3, 0.0, 5.0),
        ScenarioName::Fig3Right => (20, 20, 4, 20, 30.0, 0.0, 5.0),
        ScenarioName::Custom => return Err(Error::UnknownScenario(String::from("custom has no preset"))),
    })
}

/// Preset with its default delay.
pub fn preset(name: ScenarioName) -> Result<Scenario> {
    let (n_x, n_y, k, h, k1, k2, tau) = preset_params(name)?;
    let params = ModelParams {
        n_x,
        n_y,
        leaders_x: k,
        leaders_y: h,
        tau,
        dim: 1,
        psi: Kernel::ShiftedGaussian,
        psi_star: Kernel::ShiftedGaussian,
        phi: Kernel::Constant(k1),
        phi_star: Kernel::Constant(k2),
    };
    Ok(Scenario {
        name,
        params,
        init: InitSpec::default_uniform(),
        t_end: HORIZON_DELAYS * tau,
        dt: tau / STEPS_PER_DELAY as f64,
        seed: DEFAULT_SEED,
        interpolation: Interpolation::default(),
    })
}

/// Looks a preset up by name.
pub fn preset_by_name(name: &str) -> Result<Scenario> {
    preset(name.parse()?)
}

fn constant_strength(k: &Kernel) -> Option<f64> {
    match k {
        Kernel::Constant(c) => Some(*c),
        _ => None,
    }
}

impl Scenario {
    /// Strength of `phi` when it is constant.
    pub fn k1(&self) -> Option<f64> {
        constant_strength(&self.params.phi)
    }

    /// Strength of `phi*` when it is constant.
    pub fn k2(&self) -> Option<f64> {
        constant_strength(&self.params.phi_star)
    }

    /// Changes the delay keeping the grid resolution and the horizon in
    /// units of the delay.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        let m = IntegratorConfig::new(self.dt, self.t_end).steps_per_delay(self.params.tau)?;
        let scale = tau / self.params.tau;
        self.params.tau = tau;
        self.dt = tau / m as f64;
        self.t_end *= scale;
        Ok(self)
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig { dt: self.dt, t_end: self.t_end, interpolation: self.interpolation }
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let p = &self.params;
        match &self.init {
            InitSpec::Explicit { x, y } => InitialData::from_opinions(p, x, y),
            InitSpec::Uniform { x, y } => {
                for &(lo, hi) in [x, y] {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::invalid(format!("invalid uniform range [{lo}, {hi}]")));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut draw = |n: usize, (lo, hi): (f64, f64)| -> Vec<Vec<f64>> {
                    (0..n)
                        .map(|_| (0..p.dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
                        .collect()
                };
                let xs = draw(p.n_x, *x);
                let ys = draw(p.n_y, *y);
                InitialData::from_opinions(p, &xs, &ys)
            }
        }
    }

    pub fn simulate(&self) -> Result<(InitialData, Trajectory)> {
        let init = self.initial_data()?;
        let traj = integrate(&self.params, &init, &self.integrator_config())?;
        Ok((init, traj))
    }
}

/// Integrates the scenario and runs every diagnostic check over all
/// windows the horizon covers.
pub fn run_scenario(s: &Scenario) -> Result<(Trajectory, DiagnosticsReport)> {
    let (init, traj) = s.simulate()?;
    let report = diagnostics::diagnose(&s.params, &init, &traj, &DiagnosticsOptions::default())?;
    Ok((traj, report))
}

/// Mean opinion over both populations.
pub fn mean_opinion(state: &SystemState) -> Vec<f64> {
    let dim = state.layout().dim;
    let mut mean = alloc::vec![0.0; dim];
    let mut count = 0usize;
    for p in state.points() {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
        count += 1;
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    mean
}

/// First grid time with global diameter below `eps`, or infinity.
pub fn time_to_threshold(traj: &Trajectory, eps: f64) -> f64 {
    (0..traj.node_count())
        .find(|&i| diagnostics::diameters(&traj.state(i)).d < eps)
        .map_or(f64::INFINITY, |i| traj.times()[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K1,
    K2,
    Tau,
    LeadersX,
    LeadersY,
    Seed,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::K1 => "K1",
            SweepAxis::K2 => "K2",
            SweepAxis::Tau => "tau",
            SweepAxis::LeadersX => "k",
            SweepAxis::LeadersY => "h",
            SweepAxis::Seed => "seed",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "K1" | "k1" => SweepAxis::K1,
            "K2" | "k2" => SweepAxis::K2,
            "tau" => SweepAxis::Tau,
            "k" => SweepAxis::LeadersX,
            "h" => SweepAxis::LeadersY,
            "seed" => SweepAxis::Seed,
            other => return Err(Error::invalid(format!("unknown sweep axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMetric {
    /// First grid time with diameter below the threshold.
    TimeToThreshold(f64),
    FinalDiameter,
    /// First coordinate of the mean opinion at the horizon.
    ConsensusValue,
}

impl SweepMetric {
    pub fn label(&self) -> String {
        match self {
            SweepMetric::TimeToThreshold(eps) => format!("time_to_threshold({eps})"),
            SweepMetric::FinalDiameter => String::from("final_diameter"),
            SweepMetric::ConsensusValue => String::from("consensus_value"),
        }
    }

    pub fn evaluate(&self, traj: &Trajectory) -> f64 {
        match self {
            SweepMetric::TimeToThreshold(eps) => time_to_threshold(traj, *eps),
            SweepMetric::FinalDiameter => diagnostics::diameters(&traj.last()).d,
            SweepMetric::ConsensusValue => mean_opinion(&traj.last())[0],
        }
    }
}

impl FromStr for SweepMetric {
    type Err = Error;

    /// `final_diameter`, `consensus_value`, `time_to_threshold(eps)` or
    /// `time_to_threshold:eps`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "final_diameter" => return Ok(SweepMetric::FinalDiameter),
            "consensus_value" => return Ok(SweepMetric::ConsensusValue),
            _ => {}
        }
        let arg = s
            .strip_prefix("time_to_threshold")
            .map(|r| r.trim_start_matches(['(', ':']).trim_end_matches(')'))
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))?;
        let eps: f64 = arg.trim().parse().map_err(|_| Error::invalid(format!("invalid threshold in `{s}`")))?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("threshold must be positive, got {eps}")));
        }
        Ok(SweepMetric::TimeToThreshold(eps))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub metric: SweepMetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metric: f64,
}

fn as_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 0.0 && libm::trunc(v) == v && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(format!("{} must be a non-negative integer, got {v}", axis.as_str())))
    }
}

/// Scenario with the swept parameter set to `value`.
pub fn apply_axis(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::K1 => s.params.phi = Kernel::constant(value)?,
        SweepAxis::K2 => s.params.phi_star = Kernel::constant(value)?,
        SweepAxis::Tau => s = s.with_tau(value)?,
        SweepAxis::LeadersX => s.params.leaders_x = as_count(axis, value)?,
        SweepAxis::LeadersY => s.params.leaders_y = as_count(axis, value)?,
        SweepAxis::Seed => s.seed = as_count(axis, value)? as u64,
    }
    if axis != SweepAxis::Seed {
        s.name = ScenarioName::Custom;
    }
    s.params.validate()?;
    Ok(s)
}

/// One run per value, in the given order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    spec.values
        .iter()
        .map(|&value| {
            let s = apply_axis(&spec.base, spec.axis, value)?;
            let (_, traj) = s.simulate()?;
            Ok(SweepRow { value, metric: spec.metric.evaluate(&traj) })
        })
        .collect()
}
