//! TOML run configuration.
//!
//! A configuration either names a preset in `scenario` and overrides some
//! of its fields, or spells out the whole model. Omitted integrator fields
//! default to `dt = tau/50` and `t_end = 40·tau`; omitted `init` defaults
//! to uniform draws, X in `[0, 1]` and Y in `[2, 3]`. Relative output
//! paths are resolved against the directory of the configuration file.
//!
//! ```toml
//! scenario = "fig1a"
//! seed = 11
//!
//! [model]
//! n_x = 50
//! n_y = 5
//! leaders_x = 1
//! leaders_y = 1
//! tau = 1.0
//! dim = 1
//!
//! [kernels]
//! psi = { kind = "shifted_gaussian" }
//! psi_star = { kind = "shifted_gaussian" }
//! phi = { kind = "constant", value = 30.0 }
//! phi_star = { kind = "radial_table", samples = [[0.0, 1.0], [2.0, 0.5]] }
//!
//! [integrator]
//! dt = 0.02
//! t_end = 40.0
//! interpolation = "cubic_hermite"
//!
//! [init]
//! kind = "uniform"
//! x_range = [0.0, 1.0]
//! y_range = [2.0, 3.0]
//!
//! [output]
//! csv = "run.csv"
//! svg = "run.svg"
//! ```

use std::path::{Path, PathBuf};

use hkd_core::scenarios::{self, InitSpec, Scenario, ScenarioName};
use hkd_core::{Interpolation, Kernel, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "HKD_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub kernels: KernelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSection>,
    #[serde(default, skip_serializing_if = "OutputSection::is_empty")]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaders_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaders_y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    ShiftedGaussian,
    Constant {
        value: f64,
    },
    /// `[radius, value]` pairs with increasing radii.
    RadialTable {
        samples: Vec<[f64; 2]>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        Ok(match self {
            KernelSpec::ShiftedGaussian => Kernel::ShiftedGaussian,
            KernelSpec::Constant { value } => Kernel::constant(*value)?,
            KernelSpec::RadialTable { samples } => Kernel::radial_table(samples.iter().map(|r| (r[0], r[1])).collect())?,
        })
    }

    pub fn from_kernel(k: &Kernel) -> Self {
        match k {
            Kernel::ShiftedGaussian => KernelSpec::ShiftedGaussian,
            Kernel::Constant(c) => KernelSpec::Constant { value: *c },
            Kernel::RadialTable(t) => KernelSpec::RadialTable { samples: t.samples().iter().map(|&(r, v)| [r, v]).collect() },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_star: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_star: Option<KernelSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationSpec {
    CubicHermite,
    Linear,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSection {
    Uniform { x_range: [f64; 2], y_range: [f64; 2] },
    /// One opinion vector per agent.
    Explicit { x: Vec<Vec<f64>>, y: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl OutputSection {
    fn is_empty(&self) -> bool {
        self.csv.is_none() && self.svg.is_none()
    }
}

fn required<T: Copy>(v: Option<T>, base: Option<T>, key: &str) -> Result<T> {
    v.or(base).ok_or_else(|| Error::config(format!("missing `{key}` (set it or name a preset in `scenario`)")))
}

fn kernel_or(spec: &Option<KernelSpec>, base: Option<&Kernel>, key: &str) -> Result<Kernel> {
    match (spec, base) {
        (Some(s), _) => s.build(),
        (None, Some(k)) => Ok(k.clone()),
        (None, None) => Err(Error::config(format!("missing `kernels.{key}`"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Fully explicit configuration reproducing `s`.
    pub fn from_scenario(s: &Scenario) -> Self {
        let p = &s.params;
        RunConfig {
            scenario: Some(s.name.as_str().to_string()),
            seed: Some(s.seed),
            model: ModelSection {
                n_x: Some(p.n_x),
                n_y: Some(p.n_y),
                leaders_x: Some(p.leaders_x),
                leaders_y: Some(p.leaders_y),
                tau: Some(p.tau),
                dim: Some(p.dim),
            },
            kernels: KernelSection {
                psi: Some(KernelSpec::from_kernel(&p.psi)),
                psi_star: Some(KernelSpec::from_kernel(&p.psi_star)),
                phi: Some(KernelSpec::from_kernel(&p.phi)),
                phi_star: Some(KernelSpec::from_kernel(&p.phi_star)),
            },
            integrator: IntegratorSection {
                dt: Some(s.dt),
                t_end: Some(s.t_end),
                interpolation: Some(match s.interpolation {
                    Interpolation::CubicHermite => InterpolationSpec::CubicHermite,
                    Interpolation::Linear => InterpolationSpec::Linear,
                }),
            },
            init: Some(match &s.init {
                InitSpec::Uniform { x, y } => InitSection::Uniform { x_range: [x.0, x.1], y_range: [y.0, y.1] },
                InitSpec::Explicit { x, y } => InitSection::Explicit { x: x.clone(), y: y.clone() },
            }),
            output: OutputSection::default(),
        }
    }

    /// Resolves the configuration into a runnable scenario. A seed given
    /// in `seed_override` wins over the configured one.
    pub fn to_scenario(&self, seed_override: Option<u64>) -> Result<Scenario> {
        let name = match &self.scenario {
            Some(n) => n.parse::<ScenarioName>()?,
            None => ScenarioName::Custom,
        };
        let base = match name {
            ScenarioName::Custom => None,
            n => Some(scenarios::preset(n)?),
        };
        let bp = base.as_ref().map(|b| &b.params);
        let m = &self.model;
        let tau = required(m.tau, bp.map(|p| p.tau), "model.tau")?;
        let params = ModelParams {
            n_x: required(m.n_x, bp.map(|p| p.n_x), "model.n_x")?,
            n_y: required(m.n_y, bp.map(|p| p.n_y), "model.n_y")?,
            leaders_x: required(m.leaders_x, bp.map(|p| p.leaders_x), "model.leaders_x")?,
            leaders_y: required(m.leaders_y, bp.map(|p| p.leaders_y), "model.leaders_y")?,
            tau,
            dim: m.dim.or(bp.map(|p| p.dim)).unwrap_or(1),
            psi: kernel_or(&self.kernels.psi, Some(bp.map_or(&Kernel::ShiftedGaussian, |p| &p.psi)), "psi")?,
            psi_star: kernel_or(
                &self.kernels.psi_star,
                Some(bp.map_or(&Kernel::ShiftedGaussian, |p| &p.psi_star)),
                "psi_star",
            )?,
            phi: kernel_or(&self.kernels.phi, bp.map(|p| &p.phi), "phi")?,
            phi_star: kernel_or(&self.kernels.phi_star, bp.map(|p| &p.phi_star), "phi_star")?,
        };
        params.validate()?;
        let init = match &self.init {
            Some(InitSection::Uniform { x_range, y_range }) => {
                InitSpec::Uniform { x: (x_range[0], x_range[1]), y: (y_range[0], y_range[1]) }
            }
            Some(InitSection::Explicit { x, y }) => InitSpec::Explicit { x: x.clone(), y: y.clone() },
            None => base.as_ref().map_or_else(InitSpec::default_uniform, |b| b.init.clone()),
        };
        let interpolation = match self.integrator.interpolation {
            Some(InterpolationSpec::Linear) => Interpolation::Linear,
            Some(InterpolationSpec::CubicHermite) => Interpolation::CubicHermite,
            None => Interpolation::default(),
        };
        let t_end = self.integrator.t_end.unwrap_or(scenarios::HORIZON_DELAYS * tau);
        let dt = self.integrator.dt.unwrap_or(tau / scenarios::STEPS_PER_DELAY as f64);
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::config(format!("integrator.t_end must be non-negative, got {t_end}")));
        }
        let scenario = Scenario {
            name,
            params,
            init,
            t_end,
            dt,
            seed: seed_override.or(self.seed).unwrap_or(scenarios::DEFAULT_SEED),
            interpolation,
        };
        scenario.integrator_config().steps_per_delay(tau)?;
        Ok(scenario)
    }
}

/// Parses the value of the seed override variable, if set.
pub fn parse_seed(value: Option<&str>) -> Result<Option<u64>> {
    value
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::config(format!("{SEED_ENV} must be a non-negative integer, got `{v}`")))
        })
        .transpose()
}
