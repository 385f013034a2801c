//! The coupled two-population system.
//!
//! Population X has `n_x` agents of which the first `leaders_x` are leaders;
//! population Y has `n_y` agents with `leaders_y` leaders. Inside each
//! population every agent is attracted to every other one, and X leaders are
//! additionally attracted to the Y leaders' opinions one delay `tau` in the
//! past (and vice versa). Leader rows are normalised by `n_x + leaders_y − 1`
//! (resp. `n_y + leaders_x − 1`), follower rows by `n_x − 1` (resp. `n_y − 1`).
//!
//! Indices in this module are zero-based: X leaders are `0..leaders_x`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg;

/// Shape of a flattened state vector: all X agents first, then all Y
/// agents, `dim` coordinates per agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_x: usize,
    pub n_y: usize,
    pub dim: usize,
}

impl Layout {
    pub fn agents(&self) -> usize {
        self.n_x + self.n_y
    }

    pub fn width(&self) -> usize {
        self.agents() * self.dim
    }

    pub fn x_range(&self, i: usize) -> Range<usize> {
        i * self.dim..(i + 1) * self.dim
    }

    pub fn y_range(&self, j: usize) -> Range<usize> {
        let base = (self.n_x + j) * self.dim;
        base..base + self.dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_x: usize,
    pub n_y: usize,
    pub leaders_x: usize,
    pub leaders_y: usize,
    pub tau: f64,
    pub dim: usize,
    pub psi: Kernel,
    pub psi_star: Kernel,
    pub phi: Kernel,
    pub phi_star: Kernel,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::invalid(format!(
                "both populations need at least two agents (got {} and {})",
                self.n_x, self.n_y
            )));
        }
        if self.leaders_x > self.n_x || self.leaders_y > self.n_y {
            return Err(Error::invalid(format!(
                "leader counts ({}, {}) exceed population sizes ({}, {})",
                self.leaders_x, self.leaders_y, self.n_x, self.n_y
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.dim == 0 {
            return Err(Error::invalid("opinion dimension must be at least 1"));
        }
        let lambda = self.lambda();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid("kernel sup-norms must be finite with a positive maximum"));
        }
        for (name, k) in [("psi", &self.psi), ("psi_star", &self.psi_star)] {
            if matches!(k, Kernel::Constant(c) if *c == 0.0) {
                return Err(Error::invalid(format!("intra-population kernel {name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout { n_x: self.n_x, n_y: self.n_y, dim: self.dim }
    }

    pub fn kernels(&self) -> [(&'static str, &Kernel); 4] {
        [
            ("psi", &self.psi),
            ("psi_star", &self.psi_star),
            ("phi", &self.phi),
            ("phi_star", &self.phi_star),
        ]
    }

    /// Largest sup-norm among the four kernels.
    pub fn lambda(&self) -> f64 {
        self.kernels().iter().map(|(_, k)| k.sup_norm()).fold(0.0, f64::max)
    }

    /// Normaliser of row `i` of population X.
    pub fn x_normalizer(&self, i: usize) -> f64 {
        if i < self.leaders_x {
            (self.n_x + self.leaders_y - 1) as f64
        } else {
            (self.n_x - 1) as f64
        }
    }

    /// Normaliser of row `j` of population Y.
    pub fn y_normalizer(&self, j: usize) -> f64 {
        if j < self.leaders_y {
            (self.n_y + self.leaders_x - 1) as f64
        } else {
            (self.n_y - 1) as f64
        }
    }

    /// Whether the X-side coupling `phi` can act at all.
    pub fn phi_active(&self) -> bool {
        self.leaders_x > 0 && self.leaders_y > 0 && self.phi.sup_norm() > 0.0
    }

    pub fn phi_star_active(&self) -> bool {
        self.leaders_x > 0 && self.leaders_y > 0 && self.phi_star.sup_norm() > 0.0
    }
}

/// Opinions of both populations at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    layout: Layout,
    values: Vec<f64>,
}

impl SystemState {
    pub fn new(t: f64, layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.width() {
            return Err(Error::invalid(format!(
                "state has {} values, layout needs {}",
                values.len(),
                layout.width()
            )));
        }
        if !linalg::all_finite(&values) {
            return Err(Error::invalid("state coordinates must be finite"));
        }
        Ok(SystemState { t, layout, values })
    }

    /// Builds a state from per-agent points.
    pub fn from_points(t: f64, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Self> {
        let dim = xs.first().or(ys.first()).map_or(0, Vec::len);
        if xs.iter().chain(ys).any(|p| p.len() != dim) {
            return Err(Error::invalid("all points must share one dimension"));
        }
        let layout = Layout { n_x: xs.len(), n_y: ys.len(), dim };
        let values = xs.iter().chain(ys).flatten().copied().collect();
        SystemState::new(t, layout, values)
    }

    pub(crate) fn from_parts(t: f64, layout: Layout, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), layout.width());
        SystemState { t, layout, values }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.values[self.layout.x_range(i)]
    }

    pub fn y(&self, j: usize) -> &[f64] {
        &self.values[self.layout.y_range(j)]
    }

    /// All `n_x + n_y` agents, X first.
    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.layout.dim)
    }
}

/// Prescribed opinion of one leader on `[−tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Constant(Vec<f64>),
    /// Linear interpolation through `(time, point)` samples. The samples must
    /// cover `[−tau, 0]`.
    Sampled { times: Vec<f64>, points: Vec<Vec<f64>> },
}

impl History {
    pub fn dim(&self) -> usize {
        match self {
            History::Constant(p) => p.len(),
            History::Sampled { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self, tau: f64, dim: usize) -> Result<()> {
        match self {
            History::Constant(p) => {
                if p.len() != dim || !linalg::all_finite(p) {
                    return Err(Error::invalid(format!(
                        "constant history must be a finite point of dimension {dim}"
                    )));
                }
            }
            History::Sampled { times, points } => {
                if times.len() < 2 || times.len() != points.len() {
                    return Err(Error::invalid(
                        "sampled history needs at least two samples and one point per time",
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || !linalg::all_finite(times) {
                    return Err(Error::invalid("sampled history times must be strictly increasing"));
                }
                let slack = 1e-12 * tau.max(1.0);
                if times[0] > -tau + slack || times[times.len() - 1] < -slack {
                    return Err(Error::invalid(format!(
                        "sampled history must cover [-{tau}, 0], covers [{}, {}]",
                        times[0],
                        times[times.len() - 1]
                    )));
                }
                if points.iter().any(|p| p.len() != dim || !linalg::all_finite(p)) {
                    return Err(Error::invalid(format!(
                        "sampled history points must be finite with dimension {dim}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the history value at `t` into `out`. Times outside the sampled
    /// range are clamped.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            History::Constant(p) => out.copy_from_slice(p),
            History::Sampled { times, points } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    out.copy_from_slice(&points[0]);
                    return;
                }
                if t >= times[last] {
                    out.copy_from_slice(&points[last]);
                    return;
                }
                let hi = times.partition_point(|&s| s <= t);
                let (ta, tb) = (times[hi - 1], times[hi]);
                let w = (t - ta) / (tb - ta);
                for ((o, a), b) in out.iter_mut().zip(&points[hi - 1]).zip(&points[hi]) {
                    *o = a + w * (b - a);
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Points where the history can attain an extremum of any linear or
    /// convex functional on `[−tau, 0]`: the sample points inside the window
    /// plus both ends.
    pub fn extreme_candidates(&self, tau: f64) -> Vec<Vec<f64>> {
        match self {
            History::Constant(p) => alloc::vec![p.clone()],
            History::Sampled { times, points } => {
                let mut out: Vec<Vec<f64>> = times
                    .iter()
                    .zip(points)
                    .filter(|(&t, _)| (-tau..=0.0).contains(&t))
                    .map(|(_, p)| p.clone())
                    .collect();
                out.push(self.eval(-tau));
                out.push(self.eval(0.0));
                out
            }
        }
    }
}

/// Initial conditions: a history on `[−tau, 0]` for every leader and a
/// point at `t = 0` for every follower.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub x_history: Vec<History>,
    pub x_points: Vec<Vec<f64>>,
    pub y_history: Vec<History>,
    pub y_points: Vec<Vec<f64>>,
}

impl InitialData {
    /// Constant histories equal to the given opinions at `t = 0`.
    pub fn from_opinions(params: &ModelParams, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Self> {
        if xs.len() != params.n_x || ys.len() != params.n_y {
            return Err(Error::invalid(format!(
                "expected {} + {} opinions, got {} + {}",
                params.n_x,
                params.n_y,
                xs.len(),
                ys.len()
            )));
        }
        let (xl, xf) = xs.split_at(params.leaders_x);
        let (yl, yf) = ys.split_at(params.leaders_y);
        let init = InitialData {
            x_history: xl.iter().cloned().map(History::Constant).collect(),
            x_points: xf.to_vec(),
            y_history: yl.iter().cloned().map(History::Constant).collect(),
            y_points: yf.to_vec(),
        };
        init.validate(params)?;
        Ok(init)
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let (k, h) = (params.leaders_x, params.leaders_y);
        if self.x_history.len() != k || self.x_points.len() != params.n_x - k {
            return Err(Error::invalid(format!(
                "population X needs {k} leader histories and {} follower points, got {} and {}",
                params.n_x - k,
                self.x_history.len(),
                self.x_points.len()
            )));
        }
        if self.y_history.len() != h || self.y_points.len() != params.n_y - h {
            return Err(Error::invalid(format!(
                "population Y needs {h} leader histories and {} follower points, got {} and {}",
                params.n_y - h,
                self.y_history.len(),
                self.y_points.len()
            )));
        }
        for hist in self.x_history.iter().chain(&self.y_history) {
            hist.validate(params.tau, params.dim)?;
        }
        for p in self.x_points.iter().chain(&self.y_points) {
            if p.len() != params.dim || !linalg::all_finite(p) {
                return Err(Error::invalid(format!(
                    "initial points must be finite with dimension {}",
                    params.dim
                )));
            }
        }
        Ok(())
    }

    /// Fills a full state vector for `t ∈ [−tau, 0]`: leaders follow their
    /// history, followers hold their `t = 0` point.
    pub fn state_into(&self, layout: Layout, t: f64, out: &mut [f64]) {
        let k = self.x_history.len();
        let h = self.y_history.len();
        for i in 0..layout.n_x {
            let slot = &mut out[layout.x_range(i)];
            if i < k {
                self.x_history[i].eval_into(t, slot);
            } else {
                slot.copy_from_slice(&self.x_points[i - k]);
            }
        }
        for j in 0..layout.n_y {
            let slot = &mut out[layout.y_range(j)];
            if j < h {
                self.y_history[j].eval_into(t, slot);
            } else {
                slot.copy_from_slice(&self.y_points[j - h]);
            }
        }
    }

    pub fn state_at(&self, layout: Layout, t: f64) -> SystemState {
        let mut values = alloc::vec![0.0; layout.width()];
        self.state_into(layout, t, &mut values);
        SystemState::from_parts(t, layout, values)
    }

    /// Every point at which an initial-data extremum can occur (see
    /// [`History::extreme_candidates`]).
    pub fn extreme_candidates(&self, tau: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for h in self.x_history.iter().chain(&self.y_history) {
            out.extend(h.extreme_candidates(tau));
        }
        out.extend(self.x_points.iter().cloned());
        out.extend(self.y_points.iter().cloned());
        out
    }
}

fn check_pair(n: usize, i: usize, j: usize, what: &str) -> Result<()> {
    if i == j {
        return Err(Error::invalid(format!("{what} is not defined on the diagonal (i = j = {i})")));
    }
    if i >= n || j >= n {
        return Err(Error::invalid(format!("{what} index ({i}, {j}) out of range 0..{n}")));
    }
    Ok(())
}

/// Weight of agent `j` in the equation of agent `i` of population X.
pub fn weight_a(params: &ModelParams, state: &SystemState, i: usize, j: usize) -> Result<f64> {
    check_pair(params.n_x, i, j, "a_ij")?;
    Ok(params.psi.evaluate(state.x(i), state.x(j))? / params.x_normalizer(i))
}

/// Weight of agent `j` in the equation of agent `i` of population Y.
pub fn weight_b(params: &ModelParams, state: &SystemState, i: usize, j: usize) -> Result<f64> {
    check_pair(params.n_y, i, j, "b_ij")?;
    Ok(params.psi_star.evaluate(state.y(i), state.y(j))? / params.y_normalizer(i))
}

/// Coupling of X leader `i` to the delayed opinion of Y leader `j`.
pub fn weight_eps(
    params: &ModelParams,
    state: &SystemState,
    delayed_y_j: &[f64],
    i: usize,
    j: usize,
) -> Result<f64> {
    if i >= params.leaders_x || j >= params.leaders_y {
        return Err(Error::invalid(format!(
            "eps_ij needs an X leader and a Y leader, got ({i}, {j}) with {} and {} leaders",
            params.leaders_x, params.leaders_y
        )));
    }
    let norm = (params.n_x + params.leaders_y - 1) as f64;
    Ok(params.phi.evaluate(state.x(i), delayed_y_j)? / norm)
}

/// Coupling of Y leader `i` to the delayed opinion of X leader `j`.
pub fn weight_eta(
    params: &ModelParams,
    state: &SystemState,
    delayed_x_j: &[f64],
    i: usize,
    j: usize,
) -> Result<f64> {
    if i >= params.leaders_y || j >= params.leaders_x {
        return Err(Error::invalid(format!(
            "eta_ij needs a Y leader and an X leader, got ({i}, {j}) with {} and {} leaders",
            params.leaders_y, params.leaders_x
        )));
    }
    let norm = (params.n_y + params.leaders_x - 1) as f64;
    Ok(params.phi_star.evaluate(state.y(i), delayed_x_j)? / norm)
}

/// Time derivative of every opinion, given the current state and the state
/// one delay earlier. Only the leader components of `delayed` are read.
pub fn rhs(params: &ModelParams, now: &SystemState, delayed: &SystemState) -> Result<Vec<f64>> {
    let layout = params.layout();
    if now.layout != layout || delayed.layout != layout {
        return Err(Error::invalid("state layout does not match the model parameters"));
    }
    let lag = now.t - delayed.t;
    if (lag - params.tau).abs() > 1e-9 * params.tau.max(now.t.abs()).max(1.0) {
        return Err(Error::invalid(format!(
            "delayed state is {lag} behind, the model delay is {}",
            params.tau
        )));
    }
    let mut out = alloc::vec![0.0; layout.width()];
    rhs_into(params, &now.values, &delayed.values, &mut out);
    Ok(out)
}

/// Unchecked core of [`rhs`] on flat vectors.
pub(crate) fn rhs_into(params: &ModelParams, now: &[f64], delayed: &[f64], out: &mut [f64]) {
    let layout = params.layout();
    out.fill(0.0);
    let dim = layout.dim;

    // intra-population sums; kernels are radial so each pair is evaluated once
    let intra = |kernel: &Kernel, range: &dyn Fn(usize) -> Range<usize>, n: usize, out: &mut [f64]| {
        for i in 0..n {
            for j in i + 1..n {
                let (ri, rj) = (range(i), range(j));
                let w = kernel.profile(linalg::distance(&now[ri.clone()], &now[rj.clone()]));
                for c in 0..dim {
                    let diff = now[rj.start + c] - now[ri.start + c];
                    out[ri.start + c] += w * diff;
                    out[rj.start + c] -= w * diff;
                }
            }
        }
    };
    intra(&params.psi, &|i| layout.x_range(i), layout.n_x, out);
    intra(&params.psi_star, &|j| layout.y_range(j), layout.n_y, out);

    // delayed cross-population sums over leaders
    let (k, h) = (params.leaders_x, params.leaders_y);
    for i in 0..k {
        let ri = layout.x_range(i);
        for j in 0..h {
            let rj = layout.y_range(j);
            let w = params.phi.profile(linalg::distance(&now[ri.clone()], &delayed[rj.clone()]));
            for c in 0..dim {
                out[ri.start + c] += w * (delayed[rj.start + c] - now[ri.start + c]);
            }
        }
    }
    for i in 0..h {
        let ri = layout.y_range(i);
        for j in 0..k {
            let rj = layout.x_range(j);
            let w = params.phi_star.profile(linalg::distance(&now[ri.clone()], &delayed[rj.clone()]));
            for c in 0..dim {
                out[ri.start + c] += w * (delayed[rj.start + c] - now[ri.start + c]);
            }
        }
    }

    for i in 0..layout.n_x {
        let norm = params.x_normalizer(i);
        out[layout.x_range(i)].iter_mut().for_each(|v| *v /= norm);
    }
    for j in 0..layout.n_y {
        let norm = params.y_normalizer(j);
        out[layout.y_range(j)].iter_mut().for_each(|v| *v /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(n_x: usize, n_y: usize, k: usize, h: usize, psi: Kernel, phi: Kernel) -> ModelParams {
        ModelParams {
            n_x,
            n_y,
            leaders_x: k,
            leaders_y: h,
            tau: 1.0,
            dim: 1,
            psi: psi.clone(),
            psi_star: psi,
            phi: phi.clone(),
            phi_star: phi,
        }
    }

    fn scalar_state(t: f64, xs: &[f64], ys: &[f64]) -> SystemState {
        let xs: Vec<_> = xs.iter().map(|&v| vec![v]).collect();
        let ys: Vec<_> = ys.iter().map(|&v| vec![v]).collect();
        SystemState::from_points(t, &xs, &ys).unwrap()
    }

    #[test]
    fn weight_a_examples() {
        let one = Kernel::Constant(1.0);
        let p = params(3, 2, 1, 1, one.clone(), one.clone());
        let s = scalar_state(0.0, &[0.0, 1.0, 2.0], &[0.0, 0.0]);
        assert_relative_eq!(weight_a(&p, &s, 0, 1).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(weight_a(&p, &s, 1, 2).unwrap(), 0.5);
        assert!(weight_a(&p, &s, 1, 1).is_err());

        let g = params(2, 2, 0, 0, Kernel::ShiftedGaussian, one);
        let s = scalar_state(0.0, &[0.0, 1.0], &[0.0, 0.0]);
        assert_eq!(weight_a(&g, &s, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn weight_b_examples() {
        let one = Kernel::Constant(1.0);
        let p = params(5, 5, 4, 1, one.clone(), one.clone());
        let s = scalar_state(0.0, &[0.0; 5], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(weight_b(&p, &s, 0, 1).unwrap(), 1.0 / 8.0);
        assert_relative_eq!(weight_b(&p, &s, 2, 0).unwrap(), 0.25);

        let c = params(2, 2, 0, 0, Kernel::Constant(0.7), one);
        let s = scalar_state(0.0, &[0.0, 1.0], &[0.0, 5.0]);
        assert_eq!(weight_b(&c, &s, 1, 0).unwrap(), 0.7);
    }

    #[test]
    fn weight_eps_examples() {
        let p = params(50, 5, 1, 1, Kernel::ShiftedGaussian, Kernel::Constant(30.0));
        let s = scalar_state(0.0, &[0.0; 50], &[1.0; 5]);
        assert_relative_eq!(weight_eps(&p, &s, &[2.0], 0, 0).unwrap(), 30.0 / 50.0);

        let off = params(50, 5, 1, 1, Kernel::ShiftedGaussian, Kernel::Constant(0.0));
        assert_eq!(weight_eps(&off, &s, &[2.0], 0, 0).unwrap(), 0.0);

        let fig3 = params(20, 20, 20, 20, Kernel::ShiftedGaussian, Kernel::Constant(0.3));
        let s = scalar_state(0.0, &[0.0; 20], &[1.0; 20]);
        assert_relative_eq!(weight_eps(&fig3, &s, &[1.0], 19, 19).unwrap(), 0.3 / 39.0);
        assert_relative_eq!(weight_eta(&fig3, &s, &[0.0], 3, 7).unwrap(), 0.3 / 39.0);

        assert!(weight_eps(&p, &s, &[0.0], 1, 0).is_err());
        assert!(weight_eta(&p, &s, &[0.0], 0, 1).is_err());
    }

    #[test]
    fn rhs_examples() {
        let one = Kernel::Constant(1.0);
        // consensus is a fixed point
        let p = params(3, 2, 1, 1, Kernel::ShiftedGaussian, Kernel::ShiftedGaussian);
        let s = scalar_state(1.0, &[0.4; 3], &[0.4; 2]);
        let d = scalar_state(0.0, &[0.4; 3], &[0.4; 2]);
        assert!(rhs(&p, &s, &d).unwrap().iter().all(|&v| v == 0.0));

        // two agents pulling on each other with unit weight
        let p = params(2, 2, 0, 0, one.clone(), one.clone());
        let s = scalar_state(1.0, &[0.0, 1.0], &[0.0, 0.0]);
        let d = scalar_state(0.0, &[0.0, 1.0], &[0.0, 0.0]);
        assert_eq!(&rhs(&p, &s, &d).unwrap()[..2], &[1.0, -1.0]);

        // leader of X sees the delayed Y leader: (3 - 0) / (N + h - 1) with N + h - 1 = 2
        let p = params(2, 2, 1, 1, one.clone(), one);
        let s = scalar_state(1.0, &[0.0, 0.0], &[0.0, 0.0]);
        let d = scalar_state(0.0, &[0.0, 0.0], &[3.0, 0.0]);
        let out = rhs(&p, &s, &d).unwrap();
        assert_eq!(out[0], 1.5);
        assert_eq!(out[1], 0.0);
    }

    #[test]
    fn rhs_checks_delay_and_layout() {
        let one = Kernel::Constant(1.0);
        let p = params(2, 2, 1, 1, one.clone(), one);
        let s = scalar_state(1.0, &[0.0, 0.0], &[0.0, 0.0]);
        let bad_t = scalar_state(0.5, &[0.0, 0.0], &[0.0, 0.0]);
        assert!(rhs(&p, &s, &bad_t).is_err());
        let bad_shape = scalar_state(0.0, &[0.0, 0.0, 0.0], &[0.0, 0.0]);
        assert!(rhs(&p, &s, &bad_shape).is_err());
    }

    #[test]
    fn params_validation() {
        let one = Kernel::Constant(1.0);
        let mut p = params(2, 2, 2, 2, one.clone(), Kernel::Constant(0.0));
        assert!(p.validate().is_ok());
        p.n_y = 1;
        assert!(p.validate().is_err());
        let mut p = params(2, 2, 3, 0, one.clone(), one.clone());
        assert!(p.validate().is_err());
        p.leaders_x = 0;
        p.tau = 0.0;
        assert!(p.validate().is_err());
        let p = params(2, 2, 0, 0, Kernel::Constant(0.0), one);
        assert!(p.validate().is_err());
    }

    #[test]
    fn sampled_history_interpolates() {
        let h = History::Sampled { times: vec![-2.0, 0.0], points: vec![vec![-2.0], vec![1.0]] };
        h.validate(2.0, 1).unwrap();
        assert_eq!(h.eval(-1.0), vec![-0.5]);
        assert_eq!(h.eval(0.0), vec![1.0]);
        assert!(h.validate(3.0, 1).is_err());
        assert!(h.validate(2.0, 2).is_err());
    }

    #[test]
    fn initial_data_shape_is_checked() {
        let p = params(3, 2, 1, 1, Kernel::ShiftedGaussian, Kernel::ShiftedGaussian);
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let ys = vec![vec![3.0], vec![4.0]];
        let init = InitialData::from_opinions(&p, &xs, &ys).unwrap();
        assert_eq!(init.x_history.len(), 1);
        assert_eq!(init.y_points, vec![vec![4.0]]);
        let s = init.state_at(p.layout(), -0.5);
        assert_eq!(s.values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(InitialData::from_opinions(&p, &xs[..2], &ys).is_err());
    }

    fn random_setup() -> impl Strategy<Value = (ModelParams, Vec<f64>, Vec<f64>, f64)> {
        (2usize..6, 2usize..5, 1usize..3).prop_flat_map(|(n_x, n_y, dim)| {
            (
                0..=n_x,
                0..=n_y,
                proptest::collection::vec(-3.0f64..3.0, (n_x + n_y) * dim),
                proptest::collection::vec(-3.0f64..3.0, (n_x + n_y) * dim),
                proptest::collection::vec(-1.0f64..1.0, dim),
                0.1f64..3.0,
            )
                .prop_map(move |(k, h, now, delayed, dir, phi)| {
                    let p = ModelParams {
                        n_x,
                        n_y,
                        leaders_x: k,
                        leaders_y: h,
                        tau: 1.0,
                        dim,
                        psi: Kernel::ShiftedGaussian,
                        psi_star: Kernel::Constant(0.8),
                        phi: Kernel::Constant(phi),
                        phi_star: Kernel::ShiftedGaussian,
                    };
                    let n = linalg::norm(&dir).max(1e-3);
                    let v: Vec<f64> = dir.iter().map(|x| x / n).collect();
                    (p, now, delayed, v[0])
                })
        })
    }

    proptest! {
        #[test]
        fn follower_drift_is_bounded_by_the_hull((p, now, delayed, _) in random_setup()) {
            let layout = p.layout();
            let mut out = vec![0.0; layout.width()];
            rhs_into(&p, &now, &delayed, &mut out);
            let lambda = p.lambda();
            for c in 0..layout.dim {
                // unit vector e_c and -e_c
                for sign in [1.0, -1.0] {
                    let proj = |i: usize| sign * now[layout.x_range(i).start + c];
                    let top = (0..layout.n_x).map(proj).fold(f64::MIN, f64::max);
                    for i in p.leaders_x..layout.n_x {
                        let drift = sign * out[layout.x_range(i).start + c];
                        prop_assert!(drift <= lambda * (top - proj(i)) + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn rhs_is_permutation_equivariant((p, now, delayed, _) in random_setup(), seed in 0u64..1000) {
            let layout = p.layout();
            let followers: Vec<usize> = (p.leaders_x..layout.n_x).collect();
            if followers.len() < 2 {
                return Ok(());
            }
            // rotate the followers of X by a seed-dependent offset
            let shift = 1 + (seed as usize) % (followers.len() - 1);
            let perm = |i: usize| if i < p.leaders_x { i } else {
                p.leaders_x + (i - p.leaders_x + shift) % followers.len()
            };
            let mut now_p = now.clone();
            let mut del_p = delayed.clone();
            for i in 0..layout.n_x {
                now_p[layout.x_range(perm(i))].copy_from_slice(&now[layout.x_range(i)]);
                del_p[layout.x_range(perm(i))].copy_from_slice(&delayed[layout.x_range(i)]);
            }
            let mut out = vec![0.0; layout.width()];
            let mut out_p = vec![0.0; layout.width()];
            rhs_into(&p, &now, &delayed, &mut out);
            rhs_into(&p, &now_p, &del_p, &mut out_p);
            for i in 0..layout.n_x {
                for (a, b) in out[layout.x_range(i)].iter().zip(&out_p[layout.x_range(perm(i))]) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
            for j in layout.n_x * layout.dim..layout.width() {
                prop_assert!((out[j] - out_p[j]).abs() <= 1e-12 * (1.0 + out[j].abs()));
            }
        }
    }
}
