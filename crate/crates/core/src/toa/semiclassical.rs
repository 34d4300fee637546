use statrs::function::erf::erf;

use crate::error::{Result, ToaError};
use crate::units::{TimeGrid, UnitSystem};
use crate::wavefunc::{GaussianPacket, State};

/// Minimum ratio `|x0|/σ0` for a packet to count as localized far from the detector.
pub const MIN_DISTANCE_IN_WIDTHS: f64 = 5.0;

pub(super) fn require_single_packet(state: &State) -> Result<GaussianPacket> {
    let line = match state {
        State::Line(l) => l,
        State::Ring(_) => {
            return Err(ToaError::TrajectoryInterpretationRequired(
                "ring states have no single classical path to the detector".into(),
            ))
        }
    };
    let [p] = line.packets.as_slice() else {
        return Err(ToaError::TrajectoryInterpretationRequired(format!(
            "state is a superposition of {} packets",
            line.packets.len()
        )));
    };
    if p.x0.abs() < MIN_DISTANCE_IN_WIDTHS * p.sigma0 {
        return Err(ToaError::TrajectoryInterpretationRequired(format!(
            "packet starts {:e} from the detector, closer than {MIN_DISTANCE_IN_WIDTHS} widths",
            p.x0.abs()
        )));
    }
    Ok(*p)
}

pub(super) fn check_grid(grid: &TimeGrid) -> Result<()> {
    if grid.t_start < 0.0 {
        return Err(ToaError::invalid(
            "semiclassical distribution needs a grid with t >= 0",
        ));
    }
    Ok(())
}

/// `(mL/t²) |ψ̃(mL/t)|²` with `L = |x0|`, directed towards the detector.
/// The `t → 0+` limit is zero.
pub(super) fn density(p: &GaussianPacket, u: &UnitSystem, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let l = p.x0.abs();
    let k = -p.x0.signum() * u.mass * l / t;
    u.mass * l / (t * t) * p.momentum_amplitude(k, 0.0, u).norm_sqr()
}

/// Mass of the semiclassical density over `t > 0`: the probability of
/// momenta pointing from the packet towards the detector.
pub(super) fn normalization(p: &GaussianPacket, u: &UnitSystem) -> f64 {
    let towards = -p.x0.signum() * p.p0 * p.sigma0 / u.hbar;
    p.weight.norm_sqr() * 0.5 * (1.0 + erf(towards))
}
