//! Figure presets and the human-editable scenario file format.
//!
//! Scenario files are TOML. Every dimensional quantity is a string holding a
//! number and a unit, e.g. `x0 = "-10 l0"` or `radius = "443 um"`. Files
//! written by [`Scenario::to_toml`] use base units (`l0`, `t0`, `hbar/l0` in
//! natural mode; `m`, `s`, `kg*m/s`, `kg` in SI mode) with shortest
//! round-trip number formatting, so parsing them back is exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, ToaError};
use crate::units::{Interval, TimeGrid, UnitMode, UnitSystem, RB87_MASS};
use crate::wavefunc::{build_ring_state, GaussianPacket, RingState, State, Superposition};

/// Default quantum-clock regularization period in natural time units.
pub const DEFAULT_CLOCK_PERIOD: f64 = 100.0;
/// Default relative cutoff for ring mode coefficients.
pub const DEFAULT_TAIL_EPSILON: f64 = 1e-8;
/// Momentum separations swept by the `fig6` dataset, in `hbar/l0`.
pub const FIG6_DELTA_P: [f64; 3] = [5.0, 3.0, 1.0];

pub const FIG8_RADIUS: f64 = 443e-6;
pub const FIG8_SIGMA: f64 = 100e-6;
pub const FIG8_BIN_WIDTH: f64 = 0.1;

/// How a distribution is turned into a probability density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationPolicy {
    /// Clock: `[-T/2, T/2]`. Kijowski, flux, semiclassical: all times.
    FullWindow,
    /// Normalize on the sampled grid.
    PlotInterval,
    Unnormalized,
}

impl NormalizationPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormalizationPolicy::FullWindow => "full",
            NormalizationPolicy::PlotInterval => "plot",
            NormalizationPolicy::Unnormalized => "none",
        }
    }
}

impl fmt::Display for NormalizationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationPolicy {
    type Err = ToaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "full-window" => Ok(NormalizationPolicy::FullWindow),
            "plot" | "plot-interval" => Ok(NormalizationPolicy::PlotInterval),
            "none" | "unnormalized" => Ok(NormalizationPolicy::Unnormalized),
            other => Err(ToaError::invalid(format!("unknown normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8a,
    Fig8b,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8a,
        FigureId::Fig8b,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8a => "fig8a",
            FigureId::Fig8b => "fig8b",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = ToaError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == key)
            .ok_or(ToaError::UnknownPreset(s.to_string()))
    }
}

/// Everything needed to evaluate and normalize the distributions of one
/// physical setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub state: State,
    pub units: UnitSystem,
    pub grid: TimeGrid,
    pub detector_position: f64,
    pub normalization: NormalizationPolicy,
    /// Clock normalization window `[-T/2, T/2]` under `FullWindow`.
    pub normalization_window: Interval,
    /// Recommended histogram bin width, when the setup states one.
    pub bin_width: Option<f64>,
}

impl Scenario {
    /// Full-window scenario with the detector at the origin; the clock
    /// period defaults to 100 time units, widened when the grid needs it.
    pub fn new(name: impl Into<String>, state: State, grid: TimeGrid) -> Result<Self> {
        let units = *state.units();
        let s = Scenario {
            name: name.into(),
            state,
            units,
            grid,
            detector_position: 0.0,
            normalization: NormalizationPolicy::FullWindow,
            normalization_window: symmetric_window(
                DEFAULT_CLOCK_PERIOD.max(2.0 * grid.t_start.abs().max(grid.t_end.abs())),
            )?,
            bin_width: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.units.ensure_same(self.state.units())?;
        if !self.detector_position.is_finite() {
            return Err(ToaError::invalid("detector position must be finite"));
        }
        if let State::Ring(r) = &self.state {
            let half = 0.5 * r.circumference;
            if !(-half..half).contains(&self.detector_position) {
                return Err(ToaError::invalid(format!(
                    "detector position {:e} lies outside the ring period [-{half:e}, {half:e})",
                    self.detector_position
                )));
            }
        }
        if self.normalization == NormalizationPolicy::FullWindow
            && !self
                .normalization_window
                .covers(&Interval::new(self.grid.t_start, self.grid.t_end)?)
        {
            return Err(ToaError::invalid(format!(
                "normalization window [{}, {}] does not cover the grid [{}, {}]; use plot-interval normalization",
                self.normalization_window.start,
                self.normalization_window.end,
                self.grid.t_start,
                self.grid.t_end
            )));
        }
        if let Some(w) = self.bin_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(ToaError::invalid("bin width must be positive"));
            }
        }
        Ok(())
    }

    /// Regularization period `T` of the clock window.
    pub fn clock_period(&self) -> f64 {
        self.normalization_window.width()
    }

    pub fn with_clock_period(mut self, period: f64) -> Result<Self> {
        self.normalization_window = symmetric_window(period)?;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_normalization(mut self, policy: NormalizationPolicy) -> Result<Self> {
        self.normalization = policy;
        self.validate()?;
        Ok(self)
    }

    /// State translated so that the detector sits at the origin.
    pub fn detector_frame_state(&self) -> State {
        self.state.detector_frame(self.detector_position)
    }
}

fn symmetric_window(period: f64) -> Result<Interval> {
    if !(period.is_finite() && period > 0.0) {
        return Err(ToaError::invalid(format!("T must be positive, got {period}")));
    }
    Interval::new(-0.5 * period, 0.5 * period)
}

/// Initial position of a packet with momentum `p1` that reaches the origin
/// at the same classical time as the packet `(x0, p0)`.
pub fn overtaking_partner(x0: f64, p0: f64, p1: f64) -> Result<f64> {
    if p0 == 0.0 {
        return Err(ToaError::invalid("overtaking partner needs p0 != 0"));
    }
    if p1 == 0.0 || p0.signum() != p1.signum() {
        return Err(ToaError::invalid(
            "overtaking partner needs momenta of the same sign; build a counter-propagating state instead",
        ));
    }
    Ok(x0 * p1 / p0)
}

fn natural_pair(x0: f64, p0: f64, x1: f64, p1: f64) -> Result<State> {
    let packets = vec![
        GaussianPacket::new(x0, p0, 1.0)?,
        GaussianPacket::new(x1, p1, 1.0)?,
    ];
    Ok(Superposition::train(packets, UnitSystem::natural())?.into())
}

/// Two-packet overtaking state used by the `fig6` momentum-separation sweep.
pub fn fig6_state(delta_p: f64) -> Result<State> {
    let (x0, p0) = (-30.0, 10.0);
    let p1 = p0 + delta_p;
    natural_pair(x0, p0, overtaking_partner(x0, p0, p1)?, p1)
}

/// Two ring packets released from `-d/2` with mode numbers `n0`, `n1`.
pub fn ring_pair(n0: i64, n1: i64) -> Result<State> {
    let u = UnitSystem::rubidium87();
    let d = 2.0 * PI * FIG8_RADIUS;
    let p = |n: i64| n as f64 * u.hbar / FIG8_RADIUS;
    let a = build_ring_state(-d / 2.0, p(n0), FIG8_SIGMA, FIG8_RADIUS, u, DEFAULT_TAIL_EPSILON)?;
    let b = build_ring_state(-d / 2.0, p(n1), FIG8_SIGMA, FIG8_RADIUS, u, DEFAULT_TAIL_EPSILON)?;
    let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(RingState::superpose(vec![a, b], &[w, w])?.into())
}

pub fn make_scenario_preset(id: FigureId) -> Result<Scenario> {
    let single = || -> Result<State> {
        Ok(Superposition::single(GaussianPacket::new(-10.0, 7.0, 1.0)?, UnitSystem::natural()).into())
    };
    let line_grid = || TimeGrid::new(0.0, 8.0, 4001);
    let fig8 = |state: State| -> Result<Scenario> {
        let mut s = Scenario::new(id.as_str(), state, TimeGrid::new(0.0, 12.0, 12001)?)?;
        s.normalization = NormalizationPolicy::PlotInterval;
        s.normalization_window = Interval::new(0.0, 12.0)?;
        s.bin_width = Some(FIG8_BIN_WIDTH);
        s.validate()?;
        Ok(s)
    };
    match id {
        // the grid of fig2 holds the swept regularization periods T
        FigureId::Fig2 => Scenario::new(id.as_str(), single()?, TimeGrid::new(0.0, 20.0, 401)?),
        FigureId::Fig3 => Scenario::new(id.as_str(), single()?, TimeGrid::new(0.0, 5.0, 2001)?),
        FigureId::Fig4 => {
            let packets = (0..4)
                .map(|k| GaussianPacket::new(-10.0 - 8.0 * k as f64, 7.0 + 3.0 * k as f64, 1.0))
                .collect::<Result<Vec<_>>>()?;
            let state = Superposition::train(packets, UnitSystem::natural())?;
            Scenario::new(id.as_str(), state.into(), line_grid()?)
        }
        FigureId::Fig5 => {
            let x1 = overtaking_partner(-30.0, 10.0, 15.0)?;
            Scenario::new(id.as_str(), natural_pair(-30.0, 10.0, x1, 15.0)?, line_grid()?)
        }
        FigureId::Fig6 => Scenario::new(id.as_str(), fig6_state(FIG6_DELTA_P[0])?, line_grid()?),
        FigureId::Fig7 => {
            Scenario::new(id.as_str(), natural_pair(-30.0, 10.0, 45.0, -15.0)?, line_grid()?)
        }
        FigureId::Fig8a => fig8(ring_pair(450, 350)?),
        FigureId::Fig8b => fig8(ring_pair(450, -400)?),
    }
}

// ---------------------------------------------------------------------------
// quantities with units

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Time,
    Momentum,
    Mass,
    Frequency,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::Time => "time",
            Dim::Momentum => "momentum",
            Dim::Mass => "mass",
            Dim::Frequency => "frequency",
        }
    }

    fn base_unit(self, mode: UnitMode) -> &'static str {
        match (mode, self) {
            (UnitMode::Natural, Dim::Length) => "l0",
            (UnitMode::Natural, Dim::Time) => "t0",
            (UnitMode::Natural, Dim::Momentum) => "hbar/l0",
            (UnitMode::Natural, Dim::Mass) => "m",
            (UnitMode::Natural, Dim::Frequency) => "1/t0",
            (UnitMode::SI, Dim::Length) => "m",
            (UnitMode::SI, Dim::Time) => "s",
            (UnitMode::SI, Dim::Momentum) => "kg*m/s",
            (UnitMode::SI, Dim::Mass) => "kg",
            (UnitMode::SI, Dim::Frequency) => "rad/s",
        }
    }

    fn factor(self, mode: UnitMode, unit: &str) -> Option<f64> {
        let u = unit.replace('µ', "u").replace('ħ', "hbar");
        let f = match (mode, self) {
            (UnitMode::Natural, Dim::Length) => match u.as_str() {
                "l0" => 1.0,
                _ => return None,
            },
            (UnitMode::Natural, Dim::Time) => match u.as_str() {
                "t0" => 1.0,
                _ => return None,
            },
            (UnitMode::Natural, Dim::Momentum) => match u.as_str() {
                "hbar/l0" => 1.0,
                _ => return None,
            },
            (UnitMode::Natural, Dim::Mass) => match u.as_str() {
                "m" => 1.0,
                _ => return None,
            },
            (UnitMode::Natural, Dim::Frequency) => match u.as_str() {
                "1/t0" => 1.0,
                _ => return None,
            },
            (UnitMode::SI, Dim::Length) => match u.as_str() {
                "m" => 1.0,
                "mm" => 1e-3,
                "um" => 1e-6,
                "nm" => 1e-9,
                _ => return None,
            },
            (UnitMode::SI, Dim::Time) => match u.as_str() {
                "s" => 1.0,
                "ms" => 1e-3,
                "us" => 1e-6,
                _ => return None,
            },
            (UnitMode::SI, Dim::Momentum) => match u.as_str() {
                "kg*m/s" => 1.0,
                "kg*mm/s" => 1e-3,
                _ => return None,
            },
            (UnitMode::SI, Dim::Mass) => match u.as_str() {
                "kg" => 1.0,
                _ => return None,
            },
            (UnitMode::SI, Dim::Frequency) => match u.as_str() {
                "rad/s" | "1/s" => 1.0,
                _ => return None,
            },
        };
        Some(f)
    }
}

fn parse_quantity(text: &str, dim: Dim, mode: UnitMode, field: &str) -> Result<f64> {
    let mut parts = text.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(ToaError::invalid(format!(
            "`{field}` must look like \"<number> <unit>\", got \"{text}\""
        )));
    };
    let value: f64 = num
        .parse()
        .map_err(|_| ToaError::invalid(format!("`{field}`: cannot parse number \"{num}\"")))?;
    if !value.is_finite() {
        return Err(ToaError::invalid(format!("`{field}` must be finite")));
    }
    let factor = dim.factor(mode, unit).ok_or_else(|| {
        ToaError::UnitMismatch(format!(
            "`{field}`: \"{unit}\" is not a {} unit in {} mode (base unit {})",
            dim.name(),
            mode_name(mode),
            dim.base_unit(mode)
        ))
    })?;
    Ok(if factor == 1.0 { value } else { value * factor })
}

/// Shortest text that parses back to `v`, in exponent form outside
/// `[1e-4, 1e6)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v:?}")
    }
}

fn format_quantity(v: f64, dim: Dim, mode: UnitMode) -> String {
    format!("{} {}", format_number(v), dim.base_unit(mode))
}

fn mode_name(mode: UnitMode) -> &'static str {
    match mode {
        UnitMode::Natural => "natural",
        UnitMode::SI => "si",
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    units: UnitsFile,
    detector_position: String,
    normalization: String,
    normalization_window: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin_width: Option<String>,
    grid: GridFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    packets: Vec<PacketFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ring: Option<RingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsFile {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mass: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    start: String,
    end: String,
    points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketFile {
    x0: String,
    p0: String,
    sigma0: String,
    weight: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RingFile {
    radius: String,
    tail_epsilon: f64,
    packets: Vec<RingPacketFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RingPacketFile {
    xbar: String,
    pbar: String,
    sigma0: String,
    weight: [f64; 2],
}

impl Scenario {
    /// Serializes the scenario to the TOML file format in base units.
    pub fn to_toml(&self) -> Result<String> {
        let mode = self.units.mode;
        let q = |v: f64, d: Dim| format_quantity(v, d, mode);
        let units = UnitsFile {
            mode: mode_name(mode).to_string(),
            mass: (mode == UnitMode::SI).then(|| q(self.units.mass, Dim::Mass)),
            omega: self.units.omega.map(|w| q(w, Dim::Frequency)),
        };
        let (packets, ring) = match &self.state {
            State::Line(s) => (
                s.packets
                    .iter()
                    .map(|p| PacketFile {
                        x0: q(p.x0, Dim::Length),
                        p0: q(p.p0, Dim::Momentum),
                        sigma0: q(p.sigma0, Dim::Length),
                        weight: [p.weight.re, p.weight.im],
                    })
                    .collect(),
                None,
            ),
            State::Ring(r) => (
                Vec::new(),
                Some(RingFile {
                    radius: q(r.radius, Dim::Length),
                    tail_epsilon: r.tail_epsilon,
                    packets: r
                        .packets
                        .iter()
                        .map(|p| RingPacketFile {
                            xbar: q(p.xbar, Dim::Length),
                            pbar: q(p.pbar, Dim::Momentum),
                            sigma0: q(p.sigma0, Dim::Length),
                            weight: [p.weight.re, p.weight.im],
                        })
                        .collect(),
                }),
            ),
        };
        let file = ScenarioFile {
            name: self.name.clone(),
            units,
            detector_position: q(self.detector_position, Dim::Length),
            normalization: self.normalization.as_str().to_string(),
            normalization_window: [
                q(self.normalization_window.start, Dim::Time),
                q(self.normalization_window.end, Dim::Time),
            ],
            bin_width: self.bin_width.map(|w| q(w, Dim::Time)),
            grid: GridFile {
                start: q(self.grid.t_start, Dim::Time),
                end: q(self.grid.t_end, Dim::Time),
                points: self.grid.n_points,
            },
            packets,
            ring,
        };
        toml::to_string(&file).map_err(|e| ToaError::invalid(format!("cannot serialize scenario: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ToaError::invalid(format!("scenario file: {e}")))?;
        let mode = match file.units.mode.trim().to_ascii_lowercase().as_str() {
            "natural" => UnitMode::Natural,
            "si" => UnitMode::SI,
            other => return Err(ToaError::invalid(format!("unknown unit mode `{other}`"))),
        };
        let q = |text: &str, d: Dim, field: &str| parse_quantity(text, d, mode, field);
        let omega = file
            .units
            .omega
            .as_deref()
            .map(|w| q(w, Dim::Frequency, "units.omega"))
            .transpose()?;
        let units = match mode {
            UnitMode::Natural => {
                if file.units.mass.is_some() {
                    return Err(ToaError::invalid("natural units fix the mass to 1; remove units.mass"));
                }
                UnitSystem {
                    omega,
                    ..UnitSystem::natural()
                }
            }
            UnitMode::SI => {
                let mass = match file.units.mass.as_deref() {
                    Some(m) => q(m, Dim::Mass, "units.mass")?,
                    None => RB87_MASS,
                };
                UnitSystem::si(mass, omega)?
            }
        };
        let weight = |w: [f64; 2]| Complex64::new(w[0], w[1]);

        let state: State = match (file.packets.is_empty(), file.ring) {
            (false, None) => {
                let packets = file
                    .packets
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        GaussianPacket::weighted(
                            q(&p.x0, Dim::Length, &format!("packets[{i}].x0"))?,
                            q(&p.p0, Dim::Momentum, &format!("packets[{i}].p0"))?,
                            q(&p.sigma0, Dim::Length, &format!("packets[{i}].sigma0"))?,
                            weight(p.weight),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Superposition::new(packets, units)?.into()
            }
            (true, Some(ring)) => {
                let radius = q(&ring.radius, Dim::Length, "ring.radius")?;
                if ring.packets.is_empty() {
                    return Err(ToaError::invalid("ring.packets must not be empty"));
                }
                let mut states = Vec::new();
                let mut weights = Vec::new();
                for (i, p) in ring.packets.iter().enumerate() {
                    states.push(build_ring_state(
                        q(&p.xbar, Dim::Length, &format!("ring.packets[{i}].xbar"))?,
                        q(&p.pbar, Dim::Momentum, &format!("ring.packets[{i}].pbar"))?,
                        q(&p.sigma0, Dim::Length, &format!("ring.packets[{i}].sigma0"))?,
                        radius,
                        units,
                        ring.tail_epsilon,
                    )?);
                    weights.push(weight(p.weight));
                }
                RingState::superpose(states, &weights)?.into()
            }
            (true, None) => {
                return Err(ToaError::invalid("scenario needs either [[packets]] or a [ring] section"))
            }
            (false, Some(_)) => {
                return Err(ToaError::invalid("scenario cannot have both [[packets]] and [ring]"))
            }
        };

        let grid = TimeGrid::new(
            q(&file.grid.start, Dim::Time, "grid.start")?,
            q(&file.grid.end, Dim::Time, "grid.end")?,
            file.grid.points,
        )?;
        let s = Scenario {
            name: file.name,
            state,
            units,
            grid,
            detector_position: q(&file.detector_position, Dim::Length, "detector_position")?,
            normalization: file.normalization.parse()?,
            normalization_window: Interval::new(
                q(&file.normalization_window[0], Dim::Time, "normalization_window[0]")?,
                q(&file.normalization_window[1], Dim::Time, "normalization_window[1]")?,
            )?,
            bin_width: file
                .bin_width
                .as_deref()
                .map(|w| q(w, Dim::Time, "bin_width"))
                .transpose()?,
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(s: &Scenario) -> &Superposition {
        match &s.state {
            State::Line(l) => l,
            State::Ring(_) => panic!("expected a line state"),
        }
    }

    #[test]
    fn overtaking_examples() {
        assert_eq!(overtaking_partner(-30.0, 10.0, 15.0).unwrap(), -45.0);
        assert_eq!(overtaking_partner(-10.0, 7.0, 7.0).unwrap(), -10.0);
        assert_eq!(overtaking_partner(-10.0, 7.0, 14.0).unwrap(), -20.0);
        assert!(overtaking_partner(-10.0, 0.0, 1.0).is_err());
        assert!(overtaking_partner(-10.0, 7.0, -7.0).is_err());
    }

    #[test]
    fn fig3_preset_parameters() {
        let s = make_scenario_preset(FigureId::Fig3).unwrap();
        let p = &line(&s).packets;
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].x0, p[0].p0, p[0].sigma0), (-10.0, 7.0, 1.0));
        assert_eq!(s.grid, TimeGrid::new(0.0, 5.0, 2001).unwrap());
        assert_eq!(s.clock_period(), 100.0);
    }

    #[test]
    fn fig4_and_fig5_presets() {
        let s = make_scenario_preset(FigureId::Fig4).unwrap();
        let p = &line(&s).packets;
        let got: Vec<(f64, f64)> = p.iter().map(|p| (p.x0, p.p0)).collect();
        assert_eq!(got, vec![(-10.0, 7.0), (-18.0, 10.0), (-26.0, 13.0), (-34.0, 16.0)]);
        assert!(p.iter().all(|p| p.weight == Complex64::new(0.5, 0.0)));

        let s = make_scenario_preset(FigureId::Fig5).unwrap();
        let p = &line(&s).packets;
        assert_eq!((p[1].x0, p[1].p0), (-45.0, 15.0));

        let s = make_scenario_preset(FigureId::Fig7).unwrap();
        let p = &line(&s).packets;
        assert_eq!((p[1].x0, p[1].p0), (45.0, -15.0));
    }

    #[test]
    fn fig8_presets() {
        let s = make_scenario_preset(FigureId::Fig8a).unwrap();
        let State::Ring(r) = &s.state else { panic!() };
        assert_eq!(s.normalization, NormalizationPolicy::PlotInterval);
        assert_eq!(s.bin_width, Some(0.1));
        assert!((r.packets[0].xbar * 1e3 + 1.39).abs() < 0.005);
        assert!((r.packets[0].pbar * 1e3 / 1.07e-25 - 1.0).abs() < 0.005);
        assert!((r.packets[1].pbar * 1e3 / 0.83e-25 - 1.0).abs() < 0.005);

        let s = make_scenario_preset(FigureId::Fig8b).unwrap();
        let State::Ring(r) = &s.state else { panic!() };
        assert!(r.packets[1].pbar < 0.0);
        assert!(r.has_mixed_momentum_signs());
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(
            "fig9".parse::<FigureId>(),
            Err(ToaError::UnknownPreset("fig9".into()))
        );
        assert_eq!("FIG8A".parse::<FigureId>(), Ok(FigureId::Fig8a));
    }

    #[test]
    fn every_preset_round_trips() {
        for id in FigureId::ALL {
            let s = make_scenario_preset(id).unwrap();
            let text = s.to_toml().unwrap();
            let back = Scenario::from_toml(&text).unwrap();
            assert_eq!(back, s, "{id}");
        }
    }

    #[test]
    fn hand_written_file_with_prefixed_units() {
        let text = r#"
name = "ring test"
detector_position = "0 mm"
normalization = "plot"
normalization_window = ["0 s", "12 s"]
bin_width = "100 ms"

[units]
mode = "si"
mass = "1.44316060e-25 kg"

[grid]
start = "0 s"
end = "12 s"
points = 101

[ring]
radius = "443 um"
tail_epsilon = 1e-8

[[ring.packets]]
xbar = "-1.3917 mm"
pbar = "1.0712e-25 kg*mm/s"
sigma0 = "100 µm"
weight = [1.0, 0.0]
"#;
        let s = Scenario::from_toml(text).unwrap();
        let State::Ring(r) = &s.state else { panic!() };
        assert!((r.radius - 443e-6).abs() < 1e-18);
        assert!((r.packets[0].pbar - 1.0712e-28).abs() < 1e-40);
        assert!((s.bin_width.unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unit_errors_are_reported() {
        let s = make_scenario_preset(FigureId::Fig3).unwrap();
        let text = s.to_toml().unwrap().replace("\"-10.0 l0\"", "\"-10.0 mm\"");
        assert!(matches!(Scenario::from_toml(&text), Err(ToaError::UnitMismatch(_))));
        let text = s.to_toml().unwrap().replace("\"-10.0 l0\"", "\"-10.0\"");
        assert!(matches!(Scenario::from_toml(&text), Err(ToaError::InvalidInput(_))));
    }

    #[test]
    fn window_must_cover_grid_under_full_normalization() {
        let s = make_scenario_preset(FigureId::Fig3).unwrap();
        assert!(s.clone().with_clock_period(4.0).is_err());
        assert!(s
            .with_normalization(NormalizationPolicy::PlotInterval)
            .unwrap()
            .with_clock_period(4.0)
            .is_ok());
    }

    #[test]
    fn ring_detector_must_lie_in_period() {
        let mut s = make_scenario_preset(FigureId::Fig8a).unwrap();
        s.detector_position = 3e-3;
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn overtaking_pairs_share_classical_arrival(x0 in -100.0f64..-0.1, p0 in 0.1f64..50.0, p1 in 0.1f64..50.0) {
            let x1 = overtaking_partner(x0, p0, p1).unwrap();
            let (t0, t1) = ((x0 / p0).abs(), (x1 / p1).abs());
            prop_assert!((t0 - t1).abs() <= 4.0 * f64::EPSILON * t0);
        }

        #[test]
        fn line_scenarios_round_trip(
            packets in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 1e-3f64..10.0, -1.0f64..1.0, -1.0f64..1.0), 1..5),
            t1 in 0.1f64..1e3,
            n in 2usize..5000,
            xd in -10.0f64..10.0,
        ) {
            let packets = packets
                .into_iter()
                .map(|(x, p, s, a, b)| GaussianPacket::weighted(x, p, s, Complex64::new(a, b)).unwrap())
                .collect();
            let state = Superposition::new(packets, UnitSystem::natural()).unwrap();
            let mut s = Scenario::new("prop", state.into(), TimeGrid::new(0.0, t1, n).unwrap()).unwrap()
                .with_clock_period(2.0 * t1 + 1.0).unwrap();
            s.detector_position = xd;
            let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
