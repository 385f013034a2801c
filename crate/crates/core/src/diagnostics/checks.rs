use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    available_windows, check_unit, compute_c0, diameter_series, gamma_1, positivity_shift, sigma,
    theory_constants, window_extrema, ContractionFactor, Diameters, TheoryConstants,
};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::linalg;
use crate::model::{InitialData, ModelParams};

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Largest violation found; non-positive values mean the bound holds
    /// with room to spare.
    pub worst: f64,
    /// Time at which `worst` occurred.
    pub at_time: f64,
    pub detail: String,
}

/// Default seed for the random check directions.
pub const CHECK_VECTOR_SEED: u64 = 0x5eed;

/// Canonical basis followed by eight seeded random unit vectors.
pub fn check_vectors(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < dim + 8 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = linalg::norm(&v);
        if (0.1..=1.0).contains(&n) {
            out.push(v.into_iter().map(|c| c / n).collect());
        }
    }
    out
}

/// Every projection stays within the projected extrema of the initial data.
pub fn check_hull_bounds(traj: &Trajectory, init: &InitialData, v: &[f64], tol: f64) -> Result<CheckReport> {
    let w0 = window_extrema(traj, init, 0, v)?;
    let mut worst = f64::NEG_INFINITY;
    let mut at_time = 0.0;
    for (t, values) in traj.nodes() {
        for p in values.chunks_exact(traj.layout.dim) {
            let s = linalg::dot(p, v);
            let excess = (w0.min - s).max(s - w0.max);
            if excess > worst {
                worst = excess;
                at_time = t;
            }
        }
    }
    Ok(CheckReport {
        name: format!("hull along {v:?}"),
        passed: worst <= tol,
        worst,
        at_time,
        detail: format!("initial range [{}, {}], tolerance {tol:e}", w0.min, w0.max),
    })
}

/// Every opinion norm stays at most `C0`.
pub fn check_c0_bound(traj: &Trajectory, init: &InitialData, tol: f64) -> CheckReport {
    let c0 = compute_c0(init, traj.tau);
    let mut worst = f64::NEG_INFINITY;
    let mut at_time = 0.0;
    for (t, values) in traj.nodes() {
        for p in values.chunks_exact(traj.layout.dim) {
            let excess = linalg::norm(p) - c0;
            if excess > worst {
                worst = excess;
                at_time = t;
            }
        }
    }
    CheckReport {
        name: String::from("norm bound"),
        passed: worst <= tol,
        worst,
        at_time,
        detail: format!("C0 = {c0}, tolerance {tol:e}"),
    }
}

/// Data of one window in the contraction check. Extrema are unshifted.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub diameter: f64,
    pub sigma: f64,
    pub gamma_1: ContractionFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub direction: Vec<f64>,
    pub shift: f64,
    pub windows: Vec<WindowReport>,
    pub tolerance: f64,
    pub check: CheckReport,
}

/// Window-by-window contraction `D_{n+1} ≤ (1 − Γ₁ₙ)·D_n` and monotonicity
/// of `D_n`, for `n` from 0 to `n_max − 1`.
pub fn check_contraction(
    traj: &Trajectory,
    init: &InitialData,
    params: &ModelParams,
    v: &[f64],
    n_max: usize,
) -> Result<ContractionReport> {
    check_unit(v, params.dim)?;
    let available = available_windows(traj);
    if n_max > available {
        return Err(Error::invalid(format!(
            "{n_max} windows requested but the trajectory covers {available}"
        )));
    }
    let tc = theory_constants(params, init, v)?;
    let mut windows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let w = window_extrema(traj, init, n, v)?;
        let diameter = w.diameter().max(0.0);
        let (s, _) = sigma(params.tau, tc.lambda, diameter, w.max + tc.shift);
        windows.push(WindowReport {
            n,
            min: w.min,
            max: w.max,
            diameter,
            sigma: s,
            gamma_1: gamma_1(params, tc.lambda, tc.gamma, s)?,
        });
    }
    let tolerance = 1e-8 * windows[0].diameter.max(1.0);
    let mut worst = f64::NEG_INFINITY;
    let mut at_time = 0.0;
    let mut failures: Vec<String> = Vec::new();
    for pair in windows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let t = 6.0 * b.n as f64 * params.tau;
        let contraction = b.diameter - (1.0 - a.gamma_1.value()) * a.diameter;
        let monotone = b.diameter - a.diameter;
        let excess = contraction.max(monotone);
        if excess > worst {
            worst = excess;
            at_time = t;
        }
        if excess > tolerance {
            failures.push(format!("D_{} = {} exceeds bound from D_{} = {}", b.n, b.diameter, a.n, a.diameter));
        }
        if a.diameter > 0.0 && !a.gamma_1.in_unit_interval() {
            failures.push(format!("contraction factor of window {} is not in (0, 1)", a.n));
        }
    }
    if windows.len() == 1 {
        worst = 0.0;
    }
    let detail = if failures.is_empty() {
        format!("{} window transitions, tolerance {tolerance:e}", n_max)
    } else {
        failures.join("; ")
    };
    Ok(ContractionReport {
        direction: v.to_vec(),
        shift: positivity_shift(tc.m0),
        windows,
        tolerance,
        check: CheckReport {
            name: format!("contraction along {v:?}"),
            passed: failures.is_empty(),
            worst,
            at_time,
            detail,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    /// Absolute tolerance of the hull and norm bounds.
    pub tol: f64,
    /// Windows to check; defaults to all windows covered by the run.
    pub windows: Option<usize>,
    /// Check directions; defaults to [`check_vectors`] with
    /// [`CHECK_VECTOR_SEED`].
    pub directions: Option<Vec<Vec<f64>>>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { tol: 1e-9, windows: None, directions: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub diameters: Vec<Diameters>,
    /// Constants along the first coordinate axis.
    pub constants: TheoryConstants,
    pub hull: Vec<CheckReport>,
    pub norm: CheckReport,
    pub contraction: Vec<ContractionReport>,
}

impl DiagnosticsReport {
    pub fn checks(&self) -> impl Iterator<Item = &CheckReport> {
        self.hull
            .iter()
            .chain(core::iter::once(&self.norm))
            .chain(self.contraction.iter().map(|c| &c.check))
    }

    pub fn passed(&self) -> bool {
        self.checks().all(|c| c.passed)
    }

    pub fn final_diameter(&self) -> f64 {
        self.diameters.last().map_or(0.0, |d| d.d)
    }
}

pub fn diagnose(
    params: &ModelParams,
    init: &InitialData,
    traj: &Trajectory,
    options: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    let dirs = match &options.directions {
        Some(d) => d.clone(),
        None => check_vectors(params.dim, CHECK_VECTOR_SEED),
    };
    let n_max = options.windows.unwrap_or_else(|| available_windows(traj));
    let mut e1 = vec![0.0; params.dim];
    e1[0] = 1.0;
    let constants = theory_constants(params, init, &e1)?;
    let mut hull = Vec::with_capacity(dirs.len());
    let mut contraction = Vec::with_capacity(dirs.len());
    for v in &dirs {
        hull.push(check_hull_bounds(traj, init, v, options.tol)?);
        contraction.push(check_contraction(traj, init, params, v, n_max)?);
    }
    Ok(DiagnosticsReport {
        diameters: diameter_series(traj),
        constants,
        hull,
        norm: check_c0_bound(traj, init, options.tol),
        contraction,
    })
}
