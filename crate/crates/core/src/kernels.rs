//! Radial influence kernels.
//!
//! Every kernel is a map `ℝ^d × ℝ^d → ℝ` of the form `(p, q) ↦ f(|p − q|)`
//! for a radial profile `f`. The model uses four of them: `psi` and
//! `psi_star` weight interactions inside each population, `phi` and
//! `phi_star` weight the delayed leader-to-leader coupling.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;

/// Number of grid nodes used before golden-section refinement.
const MIN_GRID_NODES: usize = 1024;
/// Absolute tolerance on the profile value for the refined minimum.
const PROFILE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Profile `r ↦ exp(−(r − 1)²)`, maximal at unit distance.
    ShiftedGaussian,
    /// Profile identically equal to `c ≥ 0`. A zero constant switches a
    /// coupling off.
    Constant(f64),
    /// Piecewise-linear profile through `(radius, value)` samples, clamped
    /// outside the sampled range.
    RadialTable(RadialTable),
}

/// Validated samples of a piecewise-linear radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    samples: Vec<(f64, f64)>,
}

impl RadialTable {
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    fn profile(&self, r: f64) -> f64 {
        let s = &self.samples;
        let (r0, v0) = s[0];
        if r <= r0 {
            return v0;
        }
        let (rl, vl) = s[s.len() - 1];
        if r >= rl {
            return vl;
        }
        // first sample with radius > r; always in 1..len
        let hi = s.partition_point(|&(ri, _)| ri <= r);
        let (ra, va) = s[hi - 1];
        let (rb, vb) = s[hi];
        let w = (r - ra) / (rb - ra);
        va + w * (vb - va)
    }
}

impl Kernel {
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::invalid(alloc::format!(
                "constant kernel value must be finite and non-negative, got {c}"
            )));
        }
        Ok(Kernel::Constant(c))
    }

    /// Builds a table kernel. Radii must be finite, non-negative and strictly
    /// increasing; values must be finite and strictly positive.
    pub fn radial_table(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("radial table needs at least one sample"));
        }
        for (i, &(r, v)) in samples.iter().enumerate() {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::invalid(alloc::format!(
                    "radial table radius #{i} must be finite and non-negative, got {r}"
                )));
            }
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(alloc::format!(
                    "radial table value #{i} must be finite and positive, got {v}"
                )));
            }
            if i > 0 && r <= samples[i - 1].0 {
                return Err(Error::invalid("radial table radii must be strictly increasing"));
            }
        }
        Ok(Kernel::RadialTable(RadialTable { samples }))
    }

    /// The radial profile at distance `r ≥ 0`.
    pub fn profile(&self, r: f64) -> f64 {
        match self {
            Kernel::ShiftedGaussian => {
                let s = r - 1.0;
                libm::exp(-s * s)
            }
            Kernel::Constant(c) => *c,
            Kernel::RadialTable(t) => t.profile(r),
        }
    }

    /// Kernel value for the pair `(p, q)`.
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        if p.len() != q.len() {
            return Err(Error::invalid(alloc::format!(
                "kernel arguments differ in dimension ({} vs {})",
                p.len(),
                q.len()
            )));
        }
        if !linalg::all_finite(p) || !linalg::all_finite(q) {
            return Err(Error::invalid("kernel arguments must be finite"));
        }
        Ok(self.profile(linalg::distance(p, q)))
    }

    /// `‖kernel‖_∞` over all argument pairs.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Kernel::ShiftedGaussian => 1.0,
            Kernel::Constant(c) => *c,
            Kernel::RadialTable(t) => t.samples.iter().map(|&(_, v)| v).fold(f64::MIN, f64::max),
        }
    }

    /// Minimum of the kernel over pairs with `|p|, |q| ≤ c0`, i.e. the
    /// minimum of the profile over `r ∈ [0, 2·c0]`.
    pub fn inf_on_ball(&self, c0: f64) -> Result<f64> {
        if !c0.is_finite() || c0 < 0.0 {
            return Err(Error::invalid(alloc::format!(
                "ball radius must be finite and non-negative, got {c0}"
            )));
        }
        let r_max = 2.0 * c0;
        let (radius, value) = match self {
            Kernel::Constant(c) => (0.0, *c),
            Kernel::RadialTable(t) => {
                // piecewise linear: the minimum sits on a breakpoint or an end
                let mut best = (0.0, t.profile(0.0));
                let candidates = t
                    .samples
                    .iter()
                    .map(|&(r, _)| r)
                    .filter(|&r| r <= r_max)
                    .chain(core::iter::once(r_max));
                for r in candidates {
                    let v = t.profile(r);
                    if v < best.1 {
                        best = (r, v);
                    }
                }
                best
            }
            Kernel::ShiftedGaussian => minimize_on_interval(|r| self.profile(r), 0.0, r_max),
        };
        if value <= 0.0 {
            return Err(Error::DegenerateKernel { radius });
        }
        Ok(value)
    }
}

/// Grid search followed by golden-section refinement around the best node.
/// Returns `(argmin, min)`.
pub(crate) fn minimize_on_interval(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let intervals = MIN_GRID_NODES;
    let h = (hi - lo) / intervals as f64;
    let node = |i: usize| if i == intervals { hi } else { lo + i as f64 * h };
    let mut best_i = 0;
    let mut best = (lo, f(lo));
    for i in 1..=intervals {
        let r = node(i);
        let v = f(r);
        if v < best.1 {
            best = (r, v);
            best_i = i;
        }
    }

    let mut a = node(best_i.saturating_sub(1));
    let mut b = node((best_i + 1).min(intervals));
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (fc - fd).abs() < PROFILE_TOL && (b - a) < 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    for (r, v) in [(c, fc), (d, fd), (a, f(a)), (b, f(b))] {
        if v < best.1 {
            best = (r, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Brute-force minimum over a very fine uniform grid.
    fn dense_min(k: &Kernel, c0: f64) -> f64 {
        let n = 200_000;
        (0..=n)
            .map(|i| k.profile(2.0 * c0 * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn evaluate_examples() {
        let g = Kernel::ShiftedGaussian;
        assert_relative_eq!(g.evaluate(&[0.3], &[0.3]).unwrap(), (-1.0f64).exp());
        assert_eq!(g.evaluate(&[0.0, 0.0], &[0.6, 0.8]).unwrap(), 1.0);
        assert_eq!(Kernel::Constant(0.3).evaluate(&[1.0], &[-7.0]).unwrap(), 0.3);
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        let g = Kernel::ShiftedGaussian;
        assert!(matches!(g.evaluate(&[f64::NAN], &[0.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(g.evaluate(&[0.0], &[f64::INFINITY]), Err(Error::InvalidArgument(_))));
        assert!(matches!(g.evaluate(&[0.0], &[0.0, 1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(Kernel::ShiftedGaussian.sup_norm(), 1.0);
        assert_eq!(Kernel::constant(30.0).unwrap().sup_norm(), 30.0);
        let t = Kernel::radial_table(alloc::vec![(0.0, 0.5), (1.0, 0.8)]).unwrap();
        assert_eq!(t.sup_norm(), 0.8);
    }

    #[test]
    fn inf_on_ball_examples() {
        assert_eq!(Kernel::Constant(0.3).inf_on_ball(5.0).unwrap(), 0.3);

        let g = Kernel::ShiftedGaussian;
        let small = g.inf_on_ball(0.25).unwrap();
        assert_relative_eq!(small, dense_min(&g, 0.25), max_relative = 1e-12);
        assert_relative_eq!(small, 0.36787944117144233, max_relative = 1e-12);

        let large = g.inf_on_ball(2.0).unwrap();
        assert_relative_eq!(large, dense_min(&g, 2.0), max_relative = 1e-12);
        assert_relative_eq!(large, 1.2340980408667956e-4, max_relative = 1e-12);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = Kernel::radial_table(alloc::vec![(0.5, 1.0), (1.5, 3.0)]).unwrap();
        assert_eq!(t.profile(0.0), 1.0);
        assert_eq!(t.profile(1.0), 2.0);
        assert_eq!(t.profile(9.0), 3.0);
        let dip = Kernel::radial_table(alloc::vec![(0.0, 1.0), (1.0, 0.2), (2.0, 0.9)]).unwrap();
        assert_eq!(dip.inf_on_ball(0.25).unwrap(), 1.0 - 0.8 * 0.5);
        assert_eq!(dip.inf_on_ball(3.0).unwrap(), 0.2);
    }

    #[test]
    fn constructors_validate() {
        assert!(Kernel::constant(-1.0).is_err());
        assert!(Kernel::constant(f64::NAN).is_err());
        assert!(Kernel::constant(0.0).is_ok());
        assert!(Kernel::radial_table(alloc::vec![]).is_err());
        assert!(Kernel::radial_table(alloc::vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(Kernel::radial_table(alloc::vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn degenerate_profiles_are_reported() {
        assert!(matches!(
            Kernel::Constant(0.0).inf_on_ball(1.0),
            Err(Error::DegenerateKernel { .. })
        ));
        // exp(-(2·30 - 1)^2) underflows
        assert!(matches!(
            Kernel::ShiftedGaussian.inf_on_ball(30.0),
            Err(Error::DegenerateKernel { .. })
        ));
        assert!(Kernel::ShiftedGaussian.inf_on_ball(-1.0).is_err());
    }

    fn any_kernel() -> impl Strategy<Value = Kernel> {
        prop_oneof![
            Just(Kernel::ShiftedGaussian),
            (0.01f64..10.0).prop_map(Kernel::Constant),
            proptest::collection::vec((0.01f64..1.0, 0.05f64..3.0), 1..6).prop_map(|steps| {
                let mut r = 0.0;
                let samples = steps
                    .into_iter()
                    .map(|(dr, v)| {
                        r += dr;
                        (r, v)
                    })
                    .collect();
                Kernel::radial_table(samples).unwrap()
            }),
        ]
    }

    fn point_in_ball(c0: f64) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 3).prop_map(move |v| {
            let n = linalg::norm(&v).max(1.0);
            v.iter().map(|x| x / n * c0).collect()
        })
    }

    proptest! {
        #[test]
        fn bounds_sandwich_evaluation(
            k in any_kernel(),
            (c0, p, q) in (0.1f64..5.0).prop_flat_map(|c0| (Just(c0), point_in_ball(c0), point_in_ball(c0))),
        ) {
            let v = k.evaluate(&p, &q).unwrap();
            prop_assert!(v > 0.0);
            prop_assert!(v <= k.sup_norm());
            prop_assert!(k.inf_on_ball(c0).unwrap() <= v + 1e-10);
            prop_assert_eq!(v, k.evaluate(&q, &p).unwrap());
        }

        #[test]
        fn inf_on_ball_is_monotone(k in any_kernel(), a in 0.0f64..4.0, b in 0.0f64..4.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(k.inf_on_ball(hi).unwrap() <= k.inf_on_ball(lo).unwrap() + 1e-10);
        }
    }
}
