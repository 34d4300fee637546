//! Closed-form wavefunctions: free Gaussian packets on the line and Fourier
//! series on a ring.

mod line;
mod ring;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use line::{GaussianPacket, Superposition};
pub use ring::{build_ring_state, ring_coefficient, RingPacket, RingState};

use crate::units::UnitSystem;

/// A state that the arrival-time distributions can be evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum State {
    Line(Superposition),
    Ring(RingState),
}

impl State {
    pub fn units(&self) -> &UnitSystem {
        match self {
            State::Line(s) => &s.units,
            State::Ring(r) => &r.units,
        }
    }

    pub fn amplitude(&self, x: f64, t: f64) -> Complex64 {
        match self {
            State::Line(s) => s.amplitude(x, t),
            State::Ring(r) => r.amplitude(x, t),
        }
    }

    pub fn amplitude_dx(&self, x: f64, t: f64) -> Complex64 {
        match self {
            State::Line(s) => s.amplitude_dx(x, t),
            State::Ring(r) => r.amplitude_dx(x, t),
        }
    }

    /// State seen from a detector at `detector`, moved to the origin.
    pub fn detector_frame(&self, detector: f64) -> State {
        if detector == 0.0 {
            return self.clone();
        }
        match self {
            State::Line(s) => State::Line(s.translated(-detector)),
            State::Ring(r) => State::Ring(r.translated(-detector)),
        }
    }

    pub fn has_mixed_momentum_signs(&self) -> bool {
        match self {
            State::Line(s) => s.has_mixed_momentum_signs(),
            State::Ring(r) => r.has_mixed_momentum_signs(),
        }
    }
}

impl From<Superposition> for State {
    fn from(s: Superposition) -> Self {
        State::Line(s)
    }
}

impl From<RingState> for State {
    fn from(r: RingState) -> Self {
        State::Ring(r)
    }
}
