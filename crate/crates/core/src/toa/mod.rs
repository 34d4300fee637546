//! Arrival-time distributions sampled on time grids.
//!
//! Every distribution is first evaluated up to a constant factor ("raw"),
//! then divided by a normalization constant chosen by the scenario's
//! [`NormalizationPolicy`].

mod clock;
mod diagnostics;
mod flux;
mod kijowski;
mod semiclassical;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, ToaError};
use crate::numerics::{integrate_time_grid, QuadratureSpec};
use crate::par::Exec;
use crate::scenario::Scenario;
use crate::units::{Interval, TimeGrid};
use crate::wavefunc::State;

pub use crate::scenario::NormalizationPolicy;
pub use clock::{clock_normalization, NormScanRow};
pub use diagnostics::{detect_backflow, fringe_visibility, BackflowInterval, BACKFLOW_THRESHOLD};
pub use flux::flux_normalization;
pub use kijowski::kijowski_normalization;

/// Normalization constants (probabilities) below this count as zero.
pub const VANISHING_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KijowskiMomentum,
    KijowskiLeavens,
    Flux,
    Semiclassical,
    QuantumClock,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::KijowskiMomentum,
        Method::KijowskiLeavens,
        Method::Flux,
        Method::Semiclassical,
        Method::QuantumClock,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::KijowskiMomentum => "kijowski",
            Method::KijowskiLeavens => "leavens",
            Method::Flux => "flux",
            Method::Semiclassical => "semiclassical",
            Method::QuantumClock => "clock",
        }
    }

    /// Whether the method always yields a non-negative density.
    pub fn is_positive(&self) -> bool {
        !matches!(self, Method::Flux)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ToaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kijowski" | "kijowski-momentum" | "k" => Ok(Method::KijowskiMomentum),
            "leavens" | "kijowski-leavens" => Ok(Method::KijowskiLeavens),
            "flux" | "f" => Ok(Method::Flux),
            "semiclassical" | "sc" => Ok(Method::Semiclassical),
            "clock" | "quantum-clock" | "c" => Ok(Method::QuantumClock),
            other => Err(ToaError::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Normalization applied to a curve. `window = None` means all times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub constant: f64,
    pub window: Option<Interval>,
    pub policy: NormalizationPolicy,
}

/// A distribution sampled on a grid, with its normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToaCurve {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub method: Method,
    pub normalization: Normalization,
    pub negativity_flag: bool,
}

impl ToaCurve {
    pub fn times(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("curves are never empty");
        self.grid.point(i)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Integral over the whole grid.
    pub fn integral(&self) -> Result<f64> {
        integrate_time_grid(&self.values, &self.grid)
    }

    /// Linear interpolation inside the grid span.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let g = &self.grid;
        if !(t >= g.t_start && t <= g.t_end) {
            return Err(ToaError::invalid(format!(
                "t = {t} outside the curve grid [{}, {}]",
                g.t_start, g.t_end
            )));
        }
        let s = (t - g.t_start) / g.step();
        let i = (s.floor() as usize).min(g.n_points - 2);
        let w = s - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Largest pointwise difference from `other` (same grid required).
    pub fn sup_distance(&self, other: &ToaCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(ToaError::invalid("curves live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Numerical settings shared by all distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub exec: Exec,
    pub quad: QuadratureSpec,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator {
            exec: Exec::default(),
            quad: QuadratureSpec::default(),
        }
    }
}

impl Evaluator {
    pub fn new(exec: Exec, quad: QuadratureSpec) -> Self {
        Evaluator { exec, quad }
    }

    pub fn evaluate(&self, scenario: &Scenario, method: Method) -> Result<ToaCurve> {
        match method {
            Method::KijowskiMomentum => self.kijowski_momentum(scenario),
            Method::KijowskiLeavens => self.kijowski_leavens(scenario),
            Method::Flux => self.quantum_flux(scenario),
            Method::Semiclassical => self.semiclassical(scenario),
            Method::QuantumClock => self.quantum_clock(scenario),
        }
    }

    /// Unnormalized values of `method` on `grid` for a state already in the
    /// detector frame.
    pub fn raw_values(&self, state: &State, grid: &TimeGrid, method: Method) -> Result<Vec<f64>> {
        let times = grid.points();
        match method {
            Method::KijowskiMomentum => {
                self.exec
                    .try_map(times.len(), |i| kijowski::momentum_density(state, times[i], &self.quad))
            }
            Method::KijowskiLeavens => {
                let line = kijowski::require_line(state, method)?;
                self.exec
                    .try_map(times.len(), |i| kijowski::leavens_density(line, times[i], &self.quad))
            }
            Method::Flux => {
                flux::check_applicable(state)?;
                Ok(self.exec.map(times.len(), |i| flux::current(state, times[i])))
            }
            Method::Semiclassical => {
                let packet = semiclassical::require_single_packet(state)?;
                semiclassical::check_grid(grid)?;
                Ok(self.exec.map(times.len(), |i| {
                    semiclassical::density(&packet, state.units(), times[i])
                }))
            }
            Method::QuantumClock => Ok(self.exec.map(times.len(), |i| clock::density(state, times[i]))),
        }
    }

    /// Unnormalized value of `method` at a single time.
    pub fn raw_value(&self, state: &State, t: f64, method: Method) -> Result<f64> {
        match method {
            Method::KijowskiMomentum => kijowski::momentum_density(state, t, &self.quad),
            Method::KijowskiLeavens => kijowski::leavens_density(kijowski::require_line(state, method)?, t, &self.quad),
            Method::Flux => {
                flux::check_applicable(state)?;
                Ok(flux::current(state, t))
            }
            Method::Semiclassical => {
                let packet = semiclassical::require_single_packet(state)?;
                if t < 0.0 {
                    return Err(ToaError::invalid("semiclassical distribution is defined for t >= 0 only"));
                }
                Ok(semiclassical::density(&packet, state.units(), t))
            }
            Method::QuantumClock => Ok(clock::density(state, t)),
        }
    }

    pub fn kijowski_momentum(&self, scenario: &Scenario) -> Result<ToaCurve> {
        self.finish(scenario, Method::KijowskiMomentum)
    }

    pub fn kijowski_leavens(&self, scenario: &Scenario) -> Result<ToaCurve> {
        self.finish(scenario, Method::KijowskiLeavens)
    }

    pub fn quantum_flux(&self, scenario: &Scenario) -> Result<ToaCurve> {
        self.finish(scenario, Method::Flux)
    }

    pub fn semiclassical(&self, scenario: &Scenario) -> Result<ToaCurve> {
        self.finish(scenario, Method::Semiclassical)
    }

    pub fn quantum_clock(&self, scenario: &Scenario) -> Result<ToaCurve> {
        self.finish(scenario, Method::QuantumClock)
    }

    /// `N_C(T)` and, where applicable, `N_F(T)` for each period `T`.
    pub fn normscan(&self, scenario: &Scenario, periods: &[f64]) -> Result<Vec<NormScanRow>> {
        clock::normscan(self, &scenario.detector_frame_state(), periods)
    }

    fn finish(&self, scenario: &Scenario, method: Method) -> Result<ToaCurve> {
        scenario.validate()?;
        let state = scenario.detector_frame_state();
        let grid = scenario.grid;
        let raw = self.raw_values(&state, &grid, method)?;
        let policy = scenario.normalization;
        let (constant, window) = match policy {
            NormalizationPolicy::Unnormalized => (1.0, None),
            NormalizationPolicy::PlotInterval => (
                integrate_time_grid(&raw, &grid)?,
                Some(Interval::new(grid.t_start, grid.t_end)?),
            ),
            NormalizationPolicy::FullWindow => self.full_window_constant(scenario, &state, method)?,
        };
        if policy != NormalizationPolicy::Unnormalized {
            // every constant except the clock's is a probability
            let floor = if method == Method::QuantumClock { 0.0 } else { VANISHING_PROBABILITY };
            let vanishing = !(constant.is_finite() && constant > floor)
                || raw.iter().all(|v| *v == 0.0);
            if vanishing {
                return Err(if method == Method::Flux {
                    ToaError::FluxInapplicable(format!(
                        "normalization N_F = {constant:e} is not positive"
                    ))
                } else {
                    ToaError::VanishingNormalization {
                        method: method.to_string(),
                    }
                });
            }
        }
        let values: Vec<f64> = raw.into_iter().map(|v| v / constant).collect();
        let negativity_flag = values.iter().any(|v| *v < BACKFLOW_THRESHOLD);
        Ok(ToaCurve {
            grid,
            values,
            method,
            normalization: Normalization {
                constant,
                window,
                policy,
            },
            negativity_flag,
        })
    }

    fn full_window_constant(
        &self,
        scenario: &Scenario,
        state: &State,
        method: Method,
    ) -> Result<(f64, Option<Interval>)> {
        if method == Method::QuantumClock {
            let w = scenario.normalization_window;
            return Ok((clock_normalization(state, w, &self.quad)?, Some(w)));
        }
        let State::Line(line) = state else {
            return Err(ToaError::UnsupportedState {
                method: format!("full-window normalization of {method}"),
                reason: "ring states recur forever; use plot-interval normalization".into(),
            });
        };
        let constant = match method {
            Method::KijowskiMomentum | Method::KijowskiLeavens => {
                kijowski_normalization(line, &self.quad)?
            }
            Method::Flux => flux_normalization(line, &self.quad)?,
            Method::Semiclassical => {
                semiclassical::normalization(&semiclassical::require_single_packet(state)?, &line.units)
            }
            Method::QuantumClock => unreachable!(),
        };
        Ok((constant, None))
    }
}

/// Momentum interval holding every packet of `line` out to the truncation
/// radius, with the packet centres as interior breakpoints.
pub(crate) fn momentum_breakpoints(line: &crate::wavefunc::Superposition, extra: &[f64]) -> Vec<f64> {
    let u = &line.units;
    let lo = line
        .packets
        .iter()
        .map(|p| p.p0 - crate::numerics::TRUNCATION_WIDTHS * p.momentum_width(u))
        .fold(f64::INFINITY, f64::min);
    let hi = line
        .packets
        .iter()
        .map(|p| p.p0 + crate::numerics::TRUNCATION_WIDTHS * p.momentum_width(u))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut points: Vec<f64> = vec![lo, hi];
    points.extend(line.packets.iter().map(|p| p.p0));
    points.extend(extra.iter().copied().filter(|p| *p > lo && *p < hi));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}
