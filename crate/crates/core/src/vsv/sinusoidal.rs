//! Coordinate descent that exactly minimizes a sinusoidal restriction of
//! the cost along one angle at a time.
//!
//! The product-state parameterization uses cos(theta), sin(theta) rather
//! than half angles, so overlap costs are degree-2 trigonometric in each
//! theta and degree-1 in each phi: the restriction is fit in the doubled
//! variable for thetas and in the plain variable for phis.

use crate::qstate::wrap_angle;
use crate::vsv::AnsatzAngles;

const THIRD_TURN: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

/// Which frequency the restriction has in the chosen coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleKind {
    /// cos/sin enter quadratically: period pi, fit in u = 2 theta.
    Theta,
    /// the phase enters linearly: period 2 pi.
    Phi,
}

/// Diagnostics of one sinusoidal fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalStepInfo {
    /// Costs evaluated at offsets 0, +2pi/3, -2pi/3 of the fit variable.
    pub evaluated: [f64; 3],
    /// Fit f(u0 + d) = c0 + a cos(d) + b sin(d).
    pub c0: f64,
    pub a: f64,
    pub b: f64,
    /// False when the fit amplitude was degenerate and the parameter was
    /// left unchanged.
    pub moved: bool,
    /// Fitted minimum value c0 - hypot(a, b).
    pub predicted_min: f64,
}

impl SinusoidalStepInfo {
    /// Fit evaluated at offset d of the fit variable.
    pub fn fitted_at(&self, d: f64) -> f64 {
        self.c0 + self.a * d.cos() + self.b * d.sin()
    }
}

/// Evaluate the cost at the current point and at +/-2pi/3 offsets of the
/// fit variable, fit the sinusoid through the three points, and move the
/// chosen parameter to the fitted minimizer. The cost closure is expected
/// to re-run the lower-level solve at every call.
pub fn coordinate_sinusoidal_step<F>(
    angles: &AnsatzAngles,
    param: usize,
    mut cost: F,
) -> (AnsatzAngles, SinusoidalStepInfo)
where
    F: FnMut(&AnsatzAngles) -> f64,
{
    let kind = angles.kind(param);
    // offset of the underlying angle that advances the fit variable by 2pi/3
    let angle_offset = match kind {
        AngleKind::Theta => THIRD_TURN / 2.0,
        AngleKind::Phi => THIRD_TURN,
    };
    let base = angles.get(param);

    let y1 = cost(angles);
    let mut plus = angles.clone();
    plus.set(param, wrap_angle(base + angle_offset));
    let y2 = cost(&plus);
    let mut minus = angles.clone();
    minus.set(param, wrap_angle(base - angle_offset));
    let y3 = cost(&minus);

    let c0 = (y1 + y2 + y3) / 3.0;
    let a = y1 - c0;
    let b = (y2 - y3) / 3.0f64.sqrt();
    let amplitude = a.hypot(b);

    let mut info = SinusoidalStepInfo {
        evaluated: [y1, y2, y3],
        c0,
        a,
        b,
        moved: false,
        predicted_min: c0 - amplitude,
    };

    if amplitude <= 1e-13 * c0.abs().max(1.0) {
        return (angles.clone(), info);
    }
    info.moved = true;

    // minimum of c0 + R cos(d - psi) sits at d = psi + pi
    let d_star = b.atan2(a) + std::f64::consts::PI;
    let angle_delta = match kind {
        AngleKind::Theta => d_star / 2.0,
        AngleKind::Phi => d_star,
    };
    let mut out = angles.clone();
    out.set(param, wrap_angle(base + angle_delta));
    (out, info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_cache, EvalMode};
    use crate::qstate::PureState;
    use crate::vsv::lower::lower_solve;
    use approx::assert_abs_diff_eq;

    fn hsd_cost(rho: &crate::qstate::DensityMatrix, angles: &AnsatzAngles) -> f64 {
        let cache = build_cache(rho, &angles.rows(), EvalMode::Exact).unwrap();
        lower_solve(&cache, 1e-10).value
    }

    #[test]
    fn constant_cost_leaves_parameter_unchanged() {
        let angles = AnsatzAngles::from_flat(1, 1, vec![0.7], vec![1.3]);
        let (next, info) = coordinate_sinusoidal_step(&angles, 0, |_| 2.5);
        assert!(!info.moved);
        assert_eq!(next.get(0), 0.7);
    }

    #[test]
    fn single_qubit_projector_minimizer_at_zero_mod_pi() {
        // rho = |0><0| with one component: cost 2 - 2 cos^2(theta) = 1 - cos(2 theta)
        let rho = PureState::basis(1, 0).density();
        let angles = AnsatzAngles::from_flat(1, 1, vec![1.1], vec![0.0]);
        let (next, info) =
            coordinate_sinusoidal_step(&angles, 0, |a| hsd_cost(&rho, a));
        assert!(info.moved);
        let theta = next.get(0);
        let dist_to_half_turn = (theta / std::f64::consts::PI).rem_euclid(1.0);
        let dist = dist_to_half_turn.min(1.0 - dist_to_half_turn);
        assert!(dist < 1e-9, "theta {theta} not a multiple of pi");
        assert_abs_diff_eq!(hsd_cost(&rho, &next), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_reproduces_evaluated_costs() {
        let rho = crate::random::random_mixed_state(2, &mut crate::random::rng_from_seed(5));
        let angles = AnsatzAngles::random_init(3, 2, &mut crate::random::rng_from_seed(6));
        for param in [0usize, 5, 7, 11] {
            let (_, info) = coordinate_sinusoidal_step(&angles, param, |a| hsd_cost(&rho, a));
            assert_abs_diff_eq!(info.fitted_at(0.0), info.evaluated[0], epsilon = 1e-9);
            assert_abs_diff_eq!(info.fitted_at(THIRD_TURN), info.evaluated[1], epsilon = 1e-9);
            assert_abs_diff_eq!(info.fitted_at(-THIRD_TURN), info.evaluated[2], epsilon = 1e-9);
        }
    }

    #[test]
    fn restriction_really_is_sinusoidal_for_fixed_p() {
        // with the lower level pinned to fixed p, the theta restriction is
        // exactly c0 + a cos(2t) + b sin(2t): check a fourth point
        let rho = crate::random::random_mixed_state(2, &mut crate::random::rng_from_seed(9));
        let angles = AnsatzAngles::random_init(2, 2, &mut crate::random::rng_from_seed(10));
        let p = [0.35, 0.65];
        let fixed_p_cost = |a: &AnsatzAngles| {
            let cache = build_cache(&rho, &a.rows(), EvalMode::Exact).unwrap();
            crate::ensemble::hsd_from_cache(&cache, &p).unwrap()
        };
        let (_, info) = coordinate_sinusoidal_step(&angles, 1, fixed_p_cost);
        let mut probe = angles.clone();
        let delta = 0.4321;
        probe.set(1, wrap_angle(angles.get(1) + delta));
        let actual = fixed_p_cost(&probe);
        assert_abs_diff_eq!(info.fitted_at(2.0 * delta), actual, epsilon = 1e-9);
    }
}
