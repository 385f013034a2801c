//! Quantities used by the consensus analysis and checks of its bounds
//! against simulated trajectories.
//!
//! Extrema are taken along a unit vector `v`. Window `n ≥ 1` is
//! `I_n = [(6n − 1)·tau, 6n·tau]`: leaders contribute every grid node of
//! the window, followers only the right endpoint. Window 0 is the initial
//! data on `[−tau, 0]`.

mod checks;

pub use checks::{
    check_c0_bound, check_contraction, check_hull_bounds, check_vectors, diagnose, CheckReport,
    ContractionReport, DiagnosticsOptions, DiagnosticsReport, WindowReport,
};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::linalg;
use crate::model::{History, InitialData, ModelParams, SystemState};

/// Samples per history used when scanning sampled histories on `[−tau, 0]`.
const HISTORY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameters {
    pub d_x: f64,
    pub d_y: f64,
    /// `max |x_i − y_j|`
    pub d_cross: f64,
    /// Global diameter, the largest of the three.
    pub d: f64,
}

fn max_pairwise<'a>(a: impl Iterator<Item = &'a [f64]> + Clone, b: impl Iterator<Item = &'a [f64]> + Clone) -> f64 {
    let mut best = 0.0f64;
    for p in a {
        for q in b.clone() {
            best = best.max(linalg::distance(p, q));
        }
    }
    best
}

pub fn diameters(state: &SystemState) -> Diameters {
    let layout = state.layout();
    let xs = (0..layout.n_x).map(|i| state.x(i));
    let ys = (0..layout.n_y).map(|j| state.y(j));
    let d_x = max_pairwise(xs.clone(), xs.clone());
    let d_y = max_pairwise(ys.clone(), ys.clone());
    let d_cross = max_pairwise(xs, ys);
    Diameters { d_x, d_y, d_cross, d: d_x.max(d_y).max(d_cross) }
}

pub fn diameter_series(traj: &Trajectory) -> Vec<Diameters> {
    (0..traj.node_count()).map(|i| diameters(&traj.state(i))).collect()
}

/// Points probed when scanning a history on `[−tau, 0]`.
fn history_probe(h: &History, tau: f64) -> Vec<Vec<f64>> {
    let mut pts = h.extreme_candidates(tau);
    if let History::Sampled { .. } = h {
        for s in 0..=HISTORY_SAMPLES {
            let t = -tau + tau * s as f64 / HISTORY_SAMPLES as f64;
            pts.push(h.eval(t));
        }
    }
    pts
}

fn initial_probe(init: &InitialData, tau: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for h in init.x_history.iter().chain(&init.y_history) {
        pts.extend(history_probe(h, tau));
    }
    pts.extend(init.x_points.iter().cloned());
    pts.extend(init.y_points.iter().cloned());
    pts
}

/// Largest opinion norm in the initial data: leader histories over
/// `[−tau, 0]` and follower points at `t = 0`.
pub fn compute_c0(init: &InitialData, tau: f64) -> f64 {
    initial_probe(init, tau).iter().map(|p| linalg::norm(p)).fold(0.0, f64::max)
}

/// Lower bound of the kernels on the ball of radius `c0`. Coupling kernels
/// that cannot act (no leaders on one side, or identically zero) do not
/// enter the minimum.
pub fn kernel_lower_bound(params: &ModelParams, c0: f64) -> Result<f64> {
    let mut gamma = params.psi.inf_on_ball(c0)?.min(params.psi_star.inf_on_ball(c0)?);
    if params.phi_active() {
        gamma = gamma.min(params.phi.inf_on_ball(c0)?);
    }
    if params.phi_star_active() {
        gamma = gamma.min(params.phi_star.inf_on_ball(c0)?);
    }
    Ok(gamma)
}

pub(crate) fn check_unit(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::invalid(format!("direction has dimension {}, expected {dim}", v.len())));
    }
    let n = linalg::norm(v);
    if !((n - 1.0).abs() <= 1e-9) {
        return Err(Error::invalid(format!("direction must be a unit vector, |v| = {n}")));
    }
    Ok(())
}

/// Extrema of the projections along `v` over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowExtrema {
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

impl WindowExtrema {
    pub fn diameter(&self) -> f64 {
        self.max - self.min
    }
}

/// Projected extrema over window `n`.
pub fn window_extrema(traj: &Trajectory, init: &InitialData, n: usize, v: &[f64]) -> Result<WindowExtrema> {
    let layout = traj.layout;
    check_unit(v, layout.dim)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut visit = |p: &[f64]| {
        let s = linalg::dot(p, v);
        min = min.min(s);
        max = max.max(s);
    };
    if n == 0 {
        initial_probe(init, traj.tau).iter().for_each(|p| visit(p));
        return Ok(WindowExtrema { n, min, max });
    }
    let m = traj.steps_per_delay;
    let end = 6 * n * m;
    if end >= traj.node_count() {
        return Err(Error::OutOfRange {
            t: 6.0 * n as f64 * traj.tau,
            start: 0.0,
            end: traj.t_end(),
        });
    }
    let (k, h) = (init.x_history.len(), init.y_history.len());
    for node in end - m..=end {
        let state = traj.node(node);
        for i in 0..k {
            visit(&state[layout.x_range(i)]);
        }
        for j in 0..h {
            visit(&state[layout.y_range(j)]);
        }
    }
    let state = traj.node(end);
    for i in k..layout.n_x {
        visit(&state[layout.x_range(i)]);
    }
    for j in h..layout.n_y {
        visit(&state[layout.y_range(j)]);
    }
    Ok(WindowExtrema { n, min, max })
}

/// Number of complete windows `n ≥ 1` covered by the trajectory.
pub fn available_windows(traj: &Trajectory) -> usize {
    (traj.node_count() - 1) / (6 * traj.steps_per_delay)
}

/// Constants of the consensus estimate for one direction `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConstants {
    /// Largest kernel sup-norm.
    pub lambda: f64,
    /// Smallest kernel value on the `c0`-ball.
    pub gamma: f64,
    pub c0: f64,
    /// Projected extrema of the initial data, before the shift.
    pub m0: f64,
    pub big_m0: f64,
    /// Translation added to every projection so that the shifted minimum is
    /// at least 1.
    pub shift: f64,
    pub sigma: f64,
    /// The initial data is already at consensus along `v`; `sigma` is then
    /// set to `tau`.
    pub zero_diameter: bool,
}

/// Translation making the projected minimum at least one.
pub fn positivity_shift(m0: f64) -> f64 {
    if m0 < 1.0 {
        1.0 - m0
    } else {
        0.0
    }
}

/// `min{tau, D / (4·lambda·M0')}` with `M0'` the shifted initial maximum.
/// Returns `tau` and `true` when `D = 0`.
pub fn sigma(tau: f64, lambda: f64, diameter: f64, shifted_max0: f64) -> (f64, bool) {
    if diameter <= 0.0 {
        return (tau, true);
    }
    (tau.min(diameter / (4.0 * lambda * shifted_max0)), false)
}

pub fn theory_constants(params: &ModelParams, init: &InitialData, v: &[f64]) -> Result<TheoryConstants> {
    params.validate()?;
    init.validate(params)?;
    check_unit(v, params.dim)?;
    let lambda = params.lambda();
    let c0 = compute_c0(init, params.tau);
    let gamma = kernel_lower_bound(params, c0)?;
    let (mut m0, mut big_m0) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in initial_probe(init, params.tau) {
        let s = linalg::dot(&p, v);
        m0 = m0.min(s);
        big_m0 = big_m0.max(s);
    }
    let shift = positivity_shift(m0);
    let (sigma, zero_diameter) = sigma(params.tau, lambda, big_m0 - m0, big_m0 + shift);
    Ok(TheoryConstants { lambda, gamma, c0, m0, big_m0, shift, sigma, zero_diameter })
}

/// Guaranteed per-window contraction factor, stored as its natural
/// logarithm: for realistic delays and coupling strengths the factor is far
/// below the smallest positive `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionFactor {
    ln: f64,
}

impl ContractionFactor {
    pub fn ln(&self) -> f64 {
        self.ln
    }

    /// The factor itself; underflows to 0 when `ln < −745`.
    pub fn value(&self) -> f64 {
        libm::exp(self.ln)
    }

    pub fn log10(&self) -> f64 {
        self.ln / core::f64::consts::LN_10
    }

    /// Whether the factor lies in the open interval `(0, 1)`.
    pub fn in_unit_interval(&self) -> bool {
        self.ln.is_finite() && self.ln < 0.0
    }
}

/// `1/(8N⁴)·(Γ/Λ)⁴·e^{−6τΛ}·(1 − e^{−Λτ})³·(1 − e^{−Λσ})`, with `N` the size
/// of population X.
pub fn gamma_1(params: &ModelParams, lambda: f64, gamma: f64, sigma: f64) -> Result<ContractionFactor> {
    let tau = params.tau;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid(format!("gamma must be non-negative, got {gamma}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0 && sigma <= tau * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("sigma must lie in [0, tau], got {sigma}")));
    }
    let n = params.n_x as f64;
    let ln = -libm::log(8.0) - 4.0 * libm::log(n) + 4.0 * (libm::log(gamma) - libm::log(lambda))
        - 6.0 * tau * lambda
        + 3.0 * libm::log(-libm::expm1(-lambda * tau))
        + libm::log(-libm::expm1(-lambda * sigma));
    Ok(ContractionFactor { ln })
}
