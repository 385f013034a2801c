//! Fixed-step RK4 for constant-delay systems by the method of steps.
//!
//! The step `dt` must divide the delay exactly, so the delayed argument of
//! the first and last RK4 stage always falls on a stored node; only the two
//! midpoint stages read the dense history, which is a cubic Hermite
//! interpolant built from stored states and derivatives. Before `t = 0` the
//! history is read from the initial data directly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{self, InitialData, Layout, ModelParams, SystemState};

/// Magnitude above which a coordinate is treated as a blow-up.
pub const BLOW_UP_LIMIT: f64 = 1e12;

/// Relative tolerance on `tau / dt` being an integer.
const DIVISIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    CubicHermite,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub interpolation: Interpolation,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig { dt, t_end, interpolation: Interpolation::CubicHermite }
    }

    /// Number of steps per delay, `tau / dt`, after checking it is a positive
    /// integer.
    pub fn steps_per_delay(&self, tau: f64) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        let ratio = tau / self.dt;
        let m = libm::round(ratio);
        if m < 1.0 || (ratio - m).abs() > DIVISIBILITY_TOL * ratio {
            return Err(Error::invalid(format!(
                "dt = {} must divide tau = {tau} into a whole number of steps (tau/dt = {ratio})",
                self.dt
            )));
        }
        Ok(m as usize)
    }

    fn step_count(&self, dt: f64) -> usize {
        libm::ceil(self.t_end / dt - 1e-9) as usize
    }
}

/// A system `u'(t) = f(u(t), u(t − delay))` with prescribed values on
/// `[−delay, 0]`.
pub trait DelaySystem {
    fn layout(&self) -> Layout;

    fn delay(&self) -> f64;

    /// Writes the prescribed state at `t ∈ [−delay, 0]`.
    fn initial_state(&self, t: f64, out: &mut [f64]);

    fn derivative(&self, now: &[f64], delayed: &[f64], out: &mut [f64]);
}

struct TwoPopulation<'a> {
    params: &'a ModelParams,
    init: &'a InitialData,
}

impl DelaySystem for TwoPopulation<'_> {
    fn layout(&self) -> Layout {
        self.params.layout()
    }

    fn delay(&self) -> f64 {
        self.params.tau
    }

    fn initial_state(&self, t: f64, out: &mut [f64]) {
        self.init.state_into(self.params.layout(), t, out);
    }

    fn derivative(&self, now: &[f64], delayed: &[f64], out: &mut [f64]) {
        model::rhs_into(self.params, now, delayed, out);
    }
}

/// Dense record of the solution: every grid node with its state and
/// derivative, backed by the initial data before `t = 0`.
pub struct HistoryBuffer<'s, S: DelaySystem + ?Sized> {
    system: &'s S,
    dt: f64,
    steps_per_delay: usize,
    interpolation: Interpolation,
    width: usize,
    states: Vec<f64>,
    derivs: Vec<f64>,
}

impl<'s, S: DelaySystem + ?Sized> HistoryBuffer<'s, S> {
    /// Starts a buffer holding the single node `t = 0`.
    pub fn new(system: &'s S, config: &IntegratorConfig) -> Result<Self> {
        let steps_per_delay = config.steps_per_delay(system.delay())?;
        let width = system.layout().width();
        let mut buf = HistoryBuffer {
            system,
            dt: system.delay() / steps_per_delay as f64,
            steps_per_delay,
            interpolation: config.interpolation,
            width,
            states: Vec::new(),
            derivs: Vec::new(),
        };
        let mut start = vec![0.0; width];
        system.initial_state(0.0, &mut start);
        buf.push(&start);
        Ok(buf)
    }

    pub fn node_count(&self) -> usize {
        self.states.len() / self.width
    }

    pub fn current_time(&self) -> f64 {
        self.node_time(self.node_count() - 1)
    }

    fn node_time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.states[i * self.width..(i + 1) * self.width]
    }

    fn node_deriv(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.width..(i + 1) * self.width]
    }

    /// Appends a node and records its derivative. The delayed argument of
    /// a node is always a node (or initial data), never an interpolant.
    fn push(&mut self, state: &[f64]) {
        let i = self.node_count() as isize;
        let mut delayed = vec![0.0; self.width];
        self.lookup_into(i - self.steps_per_delay as isize, 0.0, &mut delayed);
        let mut deriv = vec![0.0; self.width];
        self.system.derivative(state, &delayed, &mut deriv);
        self.states.extend_from_slice(state);
        self.derivs.extend_from_slice(&deriv);
    }

    /// State at time `(node + theta)·dt` with `theta ∈ [0, 1)`. The caller
    /// guarantees the time is covered.
    fn lookup_into(&self, node: isize, theta: f64, out: &mut [f64]) {
        if node < 0 || (node == 0 && theta == 0.0) {
            self.system.initial_state((node as f64 + theta) * self.dt, out);
            return;
        }
        let i = node as usize;
        if theta == 0.0 {
            out.copy_from_slice(self.node(i));
            return;
        }
        let (a, b) = (self.node(i), self.node(i + 1));
        match self.interpolation {
            Interpolation::Linear => {
                for ((o, &ya), &yb) in out.iter_mut().zip(a).zip(b) {
                    *o = ya + theta * (yb - ya);
                }
            }
            Interpolation::CubicHermite => {
                let (fa, fb) = (self.node_deriv(i), self.node_deriv(i + 1));
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                let h = self.dt;
                for c in 0..self.width {
                    out[c] = h00 * a[c] + h10 * h * fa[c] + h01 * b[c] + h11 * h * fb[c];
                }
            }
        }
    }

    /// State at an arbitrary time in `[current − delay, current]`. Grid
    /// nodes are returned exactly.
    pub fn query_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let end = self.current_time();
        let start = end - self.system.delay();
        let slack = 1e-9 * self.dt;
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let s = t / self.dt;
        let mut node = libm::floor(s);
        let mut theta = s - node;
        if theta < 1e-9 {
            theta = 0.0;
        } else if theta > 1.0 - 1e-9 {
            node += 1.0;
            theta = 0.0;
        }
        let node = node as isize;
        if node >= self.node_count() as isize - 1 && theta > 0.0 {
            return Err(Error::OutOfRange { t, start, end });
        }
        if node < 0 && theta > 0.0 {
            // strictly inside the initial segment: evaluate the history at t itself
            self.system.initial_state(t, out);
            return Ok(());
        }
        self.lookup_into(node, theta, out);
        Ok(())
    }

    fn into_trajectory(self) -> Trajectory {
        let nodes = self.node_count();
        Trajectory {
            layout: self.system.layout(),
            tau: self.system.delay(),
            dt: self.dt,
            steps_per_delay: self.steps_per_delay,
            times: (0..nodes).map(|i| i as f64 * self.dt).collect(),
            values: self.states,
        }
    }
}

/// Solution sampled on the integration grid `t_i = i·dt`, `t_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub layout: Layout,
    pub tau: f64,
    pub dt: f64,
    pub steps_per_delay: usize,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    /// Assembles a trajectory from raw node data (e.g. when reading a file).
    pub fn from_nodes(layout: Layout, tau: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("a trajectory needs at least two nodes to fix its step"));
        }
        if values.len() != times.len() * layout.width() {
            return Err(Error::invalid(format!(
                "{} values do not form {} nodes of width {}",
                values.len(),
                times.len(),
                layout.width()
            )));
        }
        let dt = times[1] - times[0];
        let steps_per_delay = IntegratorConfig::new(dt, 1.0).steps_per_delay(tau)?;
        Ok(Trajectory { layout, tau, dt, steps_per_delay, times, values })
    }

    pub fn node_count(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let w = self.layout.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn state(&self, i: usize) -> SystemState {
        SystemState::from_parts(self.times[i], self.layout, self.node(i).to_vec())
    }

    pub fn last(&self) -> SystemState {
        self.state(self.node_count() - 1)
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.values.chunks_exact(self.layout.width()))
    }
}

/// Integrates any [`DelaySystem`] on `[0, t_end]`.
pub fn solve<S: DelaySystem + ?Sized>(system: &S, config: &IntegratorConfig) -> Result<Trajectory> {
    let mut buf = HistoryBuffer::new(system, config)?;
    let steps = config.step_count(buf.dt);
    advance(&mut buf, steps)?;
    Ok(buf.into_trajectory())
}

fn advance<S: DelaySystem + ?Sized>(buf: &mut HistoryBuffer<'_, S>, steps: usize) -> Result<()> {
    let system = buf.system;
    let width = buf.width;
    let m = buf.steps_per_delay as isize;
    let dt = buf.dt;

    let mut mid_delayed = vec![0.0; width];
    let mut end_delayed = vec![0.0; width];
    let mut stage = vec![0.0; width];
    let (mut k2, mut k3, mut k4) = (vec![0.0; width], vec![0.0; width], vec![0.0; width]);
    let mut next = vec![0.0; width];

    let first = buf.node_count() - 1;
    for i in first..first + steps {
        let base = i as isize - m;
        buf.lookup_into(base, 0.5, &mut mid_delayed);
        buf.lookup_into(base + 1, 0.0, &mut end_delayed);
        let y = buf.node(i);
        let k1 = buf.node_deriv(i);

        for c in 0..width {
            stage[c] = y[c] + 0.5 * dt * k1[c];
        }
        system.derivative(&stage, &mid_delayed, &mut k2);
        for c in 0..width {
            stage[c] = y[c] + 0.5 * dt * k2[c];
        }
        system.derivative(&stage, &mid_delayed, &mut k3);
        for c in 0..width {
            stage[c] = y[c] + dt * k3[c];
        }
        system.derivative(&stage, &end_delayed, &mut k4);
        for c in 0..width {
            next[c] = y[c] + dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }

        if next.iter().any(|v| !(v.abs() <= BLOW_UP_LIMIT)) {
            return Err(Error::BlowUp { t: (i + 1) as f64 * dt });
        }
        buf.push(&next);
    }
    Ok(())
}

/// Integrates the two-population model.
pub fn integrate(params: &ModelParams, init: &InitialData, config: &IntegratorConfig) -> Result<Trajectory> {
    params.validate()?;
    init.validate(params)?;
    solve(&TwoPopulation { params, init }, config)
}

/// Integrates the model and hands the resulting dense history to `f`, for
/// queries between grid nodes.
pub fn with_history<R>(
    params: &ModelParams,
    init: &InitialData,
    config: &IntegratorConfig,
    f: impl FnOnce(&HistoryBuffer<'_, dyn DelaySystem + '_>) -> R,
) -> Result<R> {
    params.validate()?;
    init.validate(params)?;
    let system = TwoPopulation { params, init };
    let system: &dyn DelaySystem = &system;
    let mut buf = HistoryBuffer::new(system, config)?;
    let steps = config.step_count(buf.dt);
    advance(&mut buf, steps)?;
    Ok(f(&buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::model::History;
    use approx::assert_relative_eq;

    /// `x'(t) = x(t − 1)`, `x ≡ 1` on `[−1, 0]`.
    struct DelayedGrowth;

    impl DelaySystem for DelayedGrowth {
        fn layout(&self) -> Layout {
            Layout { n_x: 1, n_y: 0, dim: 1 }
        }
        fn delay(&self) -> f64 {
            1.0
        }
        fn initial_state(&self, _t: f64, out: &mut [f64]) {
            out[0] = 1.0;
        }
        fn derivative(&self, _now: &[f64], delayed: &[f64], out: &mut [f64]) {
            out[0] = delayed[0];
        }
    }

    /// Buffer-testing system whose derivative is constant 1.
    struct Ramp;

    impl DelaySystem for Ramp {
        fn layout(&self) -> Layout {
            Layout { n_x: 1, n_y: 0, dim: 1 }
        }
        fn delay(&self) -> f64 {
            1.0
        }
        fn initial_state(&self, t: f64, out: &mut [f64]) {
            out[0] = t;
        }
        fn derivative(&self, _now: &[f64], _delayed: &[f64], out: &mut [f64]) {
            out[0] = 1.0;
        }
    }

    fn two_agents() -> (ModelParams, InitialData) {
        let p = ModelParams {
            n_x: 2,
            n_y: 2,
            leaders_x: 0,
            leaders_y: 0,
            tau: 1.0,
            dim: 1,
            psi: Kernel::Constant(1.0),
            psi_star: Kernel::Constant(1.0),
            phi: Kernel::Constant(1.0),
            phi_star: Kernel::Constant(1.0),
        };
        let init = InitialData::from_opinions(&p, &[vec![0.0], vec![1.0]], &[vec![0.0], vec![0.0]]).unwrap();
        (p, init)
    }

    #[test]
    fn config_requires_whole_steps_per_delay() {
        assert_eq!(IntegratorConfig::new(0.1, 1.0).steps_per_delay(1.0).unwrap(), 10);
        assert_eq!(IntegratorConfig::new(5.0 / 50.0, 1.0).steps_per_delay(5.0).unwrap(), 50);
        let err = IntegratorConfig::new(0.3, 1.0).steps_per_delay(1.0).unwrap_err();
        assert!(format!("{err}").contains("dt"));
        assert!(IntegratorConfig::new(2.0, 1.0).steps_per_delay(1.0).is_err());
        assert!(IntegratorConfig::new(-0.1, 1.0).steps_per_delay(1.0).is_err());
        assert!(IntegratorConfig::new(0.1, 0.0).steps_per_delay(1.0).is_err());
    }

    #[test]
    fn delayed_growth_matches_method_of_steps() {
        let traj = solve(&DelayedGrowth, &IntegratorConfig::new(0.01, 2.0)).unwrap();
        assert_eq!(traj.node_count(), 201);
        assert!((traj.node(100)[0] - 2.0).abs() < 1e-8);
        assert!((traj.node(200)[0] - 3.5).abs() < 1e-8);
    }

    #[test]
    fn hermite_reproduces_linear_data() {
        let cfg = IntegratorConfig::new(1.0, 1.0);
        let traj = solve(&Ramp, &cfg).unwrap();
        assert_eq!(traj.node(1), &[1.0]);
        let buf = {
            let mut b = HistoryBuffer::new(&Ramp, &cfg).unwrap();
            b.push(&[1.0]);
            b
        };
        let mut out = [0.0];
        buf.query_into(0.5, &mut out).unwrap();
        assert_eq!(out[0], 0.5);
        buf.query_into(1.0, &mut out).unwrap();
        assert_eq!(out[0], 1.0);
        buf.query_into(-0.0, &mut out).unwrap();
        assert_eq!(out[0], 0.0);
        assert!(matches!(buf.query_into(1.5, &mut out), Err(Error::OutOfRange { .. })));
        assert!(matches!(buf.query_into(-0.5, &mut out), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn query_returns_nodes_exactly_and_history_before_zero() {
        let (mut p, _) = two_agents();
        p.leaders_x = 1;
        p.leaders_y = 1;
        p.tau = 0.5;
        let init = InitialData {
            x_history: vec![History::Sampled { times: vec![-0.5, 0.0], points: vec![vec![-1.0], vec![0.0]] }],
            x_points: vec![vec![1.0]],
            y_history: vec![History::Constant(vec![0.25])],
            y_points: vec![vec![0.0]],
        };
        let cfg = IntegratorConfig::new(0.05, 0.3);
        let traj = integrate(&p, &init, &cfg).unwrap();
        with_history(&p, &init, &cfg, |buf| {
            let mut out = vec![0.0; 4];
            for i in 0..traj.node_count() {
                buf.query_into(traj.times()[i], &mut out).unwrap();
                assert_eq!(&out[..], traj.node(i));
            }
            buf.query_into(-0.1, &mut out).unwrap();
            assert_relative_eq!(out[0], -0.2, max_relative = 1e-12);
            assert_eq!(out[2], 0.25);
        })
        .unwrap();
    }

    #[test]
    fn linear_interpolation_option_runs() {
        let mut cfg = IntegratorConfig::new(0.01, 2.0);
        cfg.interpolation = Interpolation::Linear;
        let traj = solve(&DelayedGrowth, &cfg).unwrap();
        // linear data on [0, 1] is interpolated exactly
        assert!((traj.node(200)[0] - 3.5).abs() < 1e-8);
    }

    #[test]
    fn consensus_data_stays_bit_constant() {
        let (p, _) = two_agents();
        let init = InitialData::from_opinions(&p, &[vec![0.7], vec![0.7]], &[vec![0.7], vec![0.7]]).unwrap();
        let traj = integrate(&p, &init, &IntegratorConfig::new(0.1, 3.0)).unwrap();
        assert!(traj.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn difference_of_two_agents_decays_exponentially() {
        let (p, init) = two_agents();
        let traj = integrate(&p, &init, &IntegratorConfig::new(0.01, 2.0)).unwrap();
        for (i, t) in [(50, 0.5f64), (100, 1.0), (200, 2.0)] {
            let n = traj.node(i);
            let expected = -(-2.0 * t).exp();
            assert_relative_eq!(n[0] - n[1], expected, max_relative = 1e-8);
            assert_relative_eq!(n[0] + n[1], 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        struct Explosive;
        impl DelaySystem for Explosive {
            fn layout(&self) -> Layout {
                Layout { n_x: 1, n_y: 0, dim: 1 }
            }
            fn delay(&self) -> f64 {
                1.0
            }
            fn initial_state(&self, _t: f64, out: &mut [f64]) {
                out[0] = 1.0;
            }
            fn derivative(&self, now: &[f64], _d: &[f64], out: &mut [f64]) {
                out[0] = now[0] * now[0];
            }
        }
        let err = solve(&Explosive, &IntegratorConfig::new(0.1, 5.0)).unwrap_err();
        assert!(matches!(err, Error::BlowUp { t } if t > 0.5 && t <= 1.5));
    }

    #[test]
    fn runs_are_deterministic() {
        let (p, init) = two_agents();
        let cfg = IntegratorConfig::new(0.02, 1.0);
        assert_eq!(integrate(&p, &init, &cfg).unwrap(), integrate(&p, &init, &cfg).unwrap());
    }
}
