use num_complex::Complex64;
use std::f64::consts::PI;

use super::{momentum_breakpoints, Method};
use crate::error::{Result, ToaError};
use crate::numerics::{
    adaptive_over_points, integrate_halfline_momentum, leavens_half_integrals, leavens_kernel_combine,
    HalfLine, QuadratureSpec, TRUNCATION_WIDTHS,
};
use crate::wavefunc::{RingState, State, Superposition};

pub(super) fn require_line(state: &State, method: Method) -> Result<&Superposition> {
    match state {
        State::Line(l) => Ok(l),
        State::Ring(_) => Err(ToaError::UnsupportedState {
            method: method.to_string(),
            reason: "the position-space form is implemented for line states only".into(),
        }),
    }
}

/// `J± = ∫ over ±p > 0 of √|p| Ψ̃(p, t) dp`, packet by packet.
pub(crate) fn momentum_half_integrals(
    line: &Superposition,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    let u = &line.units;
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (j, sign) in out.iter_mut().zip([HalfLine::Plus, HalfLine::Minus]) {
        for p in &line.packets {
            *j += integrate_halfline_momentum(
                |k| p.momentum_amplitude(k, t, u) * k.abs().sqrt(),
                sign,
                p.p0,
                p.momentum_width(u),
                quad,
            )?;
        }
    }
    Ok((out[0], out[1]))
}

fn ring_half_sums(ring: &RingState, t: f64) -> (Complex64, Complex64) {
    let mut plus = Complex64::new(0.0, 0.0);
    let mut minus = Complex64::new(0.0, 0.0);
    for (p, c) in ring.mode_amplitudes(t) {
        if p > 0.0 {
            plus += c * p.sqrt();
        } else if p < 0.0 {
            minus += c * (-p).sqrt();
        }
    }
    (plus, minus)
}

/// `Π+(t) + Π-(t)` with the prefactor that makes the all-time integral equal
/// to the state norm.
pub(super) fn momentum_density(state: &State, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    match state {
        State::Line(line) => {
            let (jp, jm) = momentum_half_integrals(line, t, quad)?;
            let u = &line.units;
            Ok((jp.norm_sqr() + jm.norm_sqr()) / (2.0 * PI * u.mass * u.hbar))
        }
        State::Ring(ring) => {
            let (jp, jm) = ring_half_sums(ring, t);
            Ok((jp.norm_sqr() + jm.norm_sqr()) / ring.units.mass)
        }
    }
}

/// Singular position-space integrals `∫ (1 ± i sgn x) |x|^{-3/2} (Ψ(x,t) − Ψ(0,t)) dx`.
pub(crate) fn leavens_integrals(
    line: &Superposition,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    let psi0 = line.amplitude(0.0, t);
    let window = line.support_radius(t, TRUNCATION_WIDTHS);
    let centers: Vec<f64> = line.packets.iter().map(|p| p.center(t, &line.units)).collect();
    let (pos, neg) = leavens_half_integrals(|x| line.amplitude(x, t) - psi0, window, &centers, quad)?;
    Ok((
        leavens_kernel_combine(HalfLine::Plus, pos, neg),
        leavens_kernel_combine(HalfLine::Minus, pos, neg),
    ))
}

pub(super) fn leavens_density(line: &Superposition, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let (lp, lm) = leavens_integrals(line, t, quad)?;
    let u = &line.units;
    // J± = -(ħ/4) L±
    Ok(u.hbar * (lp.norm_sqr() + lm.norm_sqr()) / (32.0 * PI * u.mass))
}

/// All-time integral of the Kijowski density, `∫ |Ψ̃(p)|² dp`.
pub fn kijowski_normalization(line: &Superposition, quad: &QuadratureSpec) -> Result<f64> {
    let points = momentum_breakpoints(line, &[0.0]);
    let q = adaptive_over_points(
        |k| Complex64::new(line.momentum_amplitude(k, 0.0).norm_sqr(), 0.0),
        &points,
        quad,
    )
    .into_result()?;
    Ok(q.value.re)
}
