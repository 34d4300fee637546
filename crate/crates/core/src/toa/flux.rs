use num_complex::Complex64;

use super::momentum_breakpoints;
use crate::error::{Result, ToaError};
use crate::numerics::{adaptive_over_points, QuadratureSpec};
use crate::wavefunc::{State, Superposition};

pub(super) fn check_applicable(state: &State) -> Result<()> {
    if state.has_mixed_momentum_signs() {
        return Err(ToaError::FluxInapplicable("mixed momentum signs".into()));
    }
    Ok(())
}

/// Probability current `(ħ/m) Im[Ψ* ∂xΨ]` at the detector.
pub(super) fn current(state: &State, t: f64) -> f64 {
    let u = state.units();
    let psi = state.amplitude(0.0, t);
    let dpsi = state.amplitude_dx(0.0, t);
    u.hbar / u.mass * (psi.conj() * dpsi).im
}

/// All-time integral of the current, `∫ sgn(p) |Ψ̃(p)|² dp`.
pub fn flux_normalization(line: &Superposition, quad: &QuadratureSpec) -> Result<f64> {
    let points = momentum_breakpoints(line, &[0.0]);
    let q = adaptive_over_points(
        |k| Complex64::new(k.signum() * line.momentum_amplitude(k, 0.0).norm_sqr(), 0.0),
        &points,
        quad,
    )
    .into_result()?;
    Ok(q.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{make_scenario_preset, FigureId};
    use crate::toa::{Evaluator, Method};
    use crate::units::{TimeGrid, UnitSystem};
    use crate::wavefunc::GaussianPacket;

    #[test]
    fn current_matches_continuity_equation() {
        // dJ/dx = -d|Ψ|²/dt, checked through the time derivative of the mass left of x
        let s = make_scenario_preset(FigureId::Fig5).unwrap().state;
        let State::Line(l) = &s else { panic!() };
        let (t, h) = (2.9, 2e-4);
        let tight = QuadratureSpec::new(1e-13, 1e-15, 2000).unwrap();
        let mass_left = |t: f64| {
            crate::numerics::integrate_adaptive(|x| Complex64::new(l.density(x, t), 0.0), -120.0, 0.0, &tight)
                .unwrap()
                .value
                .re
        };
        // fourth-order central difference
        let d = (mass_left(t - 2.0 * h) - 8.0 * mass_left(t - h) + 8.0 * mass_left(t + h)
            - mass_left(t + 2.0 * h))
            / (12.0 * h);
        let j = current(&s, t);
        assert!((-d - j).abs() < 1e-7 * j.abs(), "{} vs {j}", -d);
    }

    #[test]
    fn normalization_is_signed_momentum_probability() {
        let p = GaussianPacket::new(-10.0, 1.0, 1.0).unwrap();
        let l = Superposition::single(p, UnitSystem::natural());
        let n = flux_normalization(&l, &QuadratureSpec::default()).unwrap();
        assert!((n - statrs::function::erf::erf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn resting_packet_is_inapplicable() {
        let p = GaussianPacket::new(0.0, 0.0, 1.0).unwrap();
        let l = Superposition::single(p, UnitSystem::natural());
        let s = crate::scenario::Scenario::new("rest", l.into(), TimeGrid::new(0.0, 5.0, 11).unwrap())
            .unwrap();
        assert!(matches!(
            Evaluator::default().evaluate(&s, Method::Flux),
            Err(ToaError::FluxInapplicable(_))
        ));
        assert_eq!(current(&s.state, 1.3), 0.0);
    }

    #[test]
    fn counter_propagating_pair_is_inapplicable() {
        let s = make_scenario_preset(FigureId::Fig7).unwrap();
        let e = Evaluator::default().quantum_flux(&s).unwrap_err();
        assert_eq!(e.to_string(), "flux inapplicable: mixed momentum signs");
    }
}
