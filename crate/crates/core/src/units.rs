//! Unit systems and the uniform time lattice shared by all distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToaError};

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054571817e-34;
/// Mass of a rubidium-87 atom in kg.
pub const RB87_MASS: f64 = 1.44316060e-25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    Natural,
    #[serde(rename = "si")]
    SI,
}

/// Physical constants in force for a computation.
///
/// In natural mode `hbar = mass = 1` and lengths, times and energies are
/// measured in units of the harmonic-trap scales `l0 = sqrt(hbar/(m omega))`,
/// `t0 = 1/omega`, `E0 = hbar omega`. In SI mode the trap frequency is
/// optional; the derived scales exist only when it is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mode: UnitMode,
    pub hbar: f64,
    pub mass: f64,
    pub omega: Option<f64>,
}

impl UnitSystem {
    pub const fn natural() -> Self {
        UnitSystem {
            mode: UnitMode::Natural,
            hbar: 1.0,
            mass: 1.0,
            omega: None,
        }
    }

    pub fn si(mass: f64, omega: Option<f64>) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ToaError::invalid(format!("mass must be positive, got {mass}")));
        }
        if let Some(w) = omega {
            if !(w.is_finite() && w > 0.0) {
                return Err(ToaError::invalid(format!("omega must be positive, got {w}")));
            }
        }
        Ok(UnitSystem {
            mode: UnitMode::SI,
            hbar: HBAR_SI,
            mass,
            omega,
        })
    }

    /// SI units for a rubidium-87 atom without a reference trap frequency.
    pub fn rubidium87() -> Self {
        UnitSystem {
            mode: UnitMode::SI,
            hbar: HBAR_SI,
            mass: RB87_MASS,
            omega: None,
        }
    }

    pub fn length_scale(&self) -> Option<f64> {
        match self.mode {
            UnitMode::Natural => Some(1.0),
            UnitMode::SI => self.omega.map(|w| (self.hbar / (self.mass * w)).sqrt()),
        }
    }

    pub fn time_scale(&self) -> Option<f64> {
        match self.mode {
            UnitMode::Natural => Some(1.0),
            UnitMode::SI => self.omega.map(|w| 1.0 / w),
        }
    }

    pub fn energy_scale(&self) -> Option<f64> {
        match self.mode {
            UnitMode::Natural => Some(1.0),
            UnitMode::SI => self.omega.map(|w| self.hbar * w),
        }
    }

    pub fn ensure_same(&self, other: &UnitSystem) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(ToaError::UnitMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem::natural()
    }
}

/// Uniformly spaced sampling times `t_start, ..., t_end` (both inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_start >= t_end {
            return Err(ToaError::invalid(format!(
                "time grid needs t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        if n_points < 2 {
            return Err(ToaError::invalid("time grid needs at least 2 points"));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            n_points,
        })
    }

    /// Grid over `[a, b]` whose step does not exceed `max_step`.
    pub fn with_max_step(a: f64, b: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(ToaError::invalid("max_step must be positive"));
        }
        let cells = ((b - a) / max_step).ceil().max(2.0) as usize;
        // even cell count keeps Simpson's rule applicable
        let cells = cells + cells % 2;
        TimeGrid::new(a, b, cells + 1)
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    /// Same span, twice the resolution; every old point is kept.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

/// Closed time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start > end {
            return Err(ToaError::invalid(format!("bad interval [{start}, {end}]")));
        }
        Ok(Interval { start, end })
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn covers(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_scales_are_unity() {
        let u = UnitSystem::natural();
        assert_eq!(u.length_scale(), Some(1.0));
        assert_eq!(u.time_scale(), Some(1.0));
        assert_eq!(u.energy_scale(), Some(1.0));
    }

    #[test]
    fn si_length_scale_from_trap_frequency() {
        let omega = 2.0 * std::f64::consts::PI * 100.0;
        let u = UnitSystem::si(RB87_MASS, Some(omega)).unwrap();
        let l0 = u.length_scale().unwrap();
        assert!((l0 - (HBAR_SI / (RB87_MASS * omega)).sqrt()).abs() < 1e-20);
        assert!((u.time_scale().unwrap() * omega - 1.0).abs() < 1e-15);
        assert!(UnitSystem::rubidium87().length_scale().is_none());
    }

    #[test]
    fn mismatch_is_reported() {
        let a = UnitSystem::natural();
        let b = UnitSystem::rubidium87();
        assert!(matches!(a.ensure_same(&b), Err(ToaError::UnitMismatch(_))));
        assert!(a.ensure_same(&a).is_ok());
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = TimeGrid::new(0.0, 5.0, 2001).unwrap();
        let p = g.points();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2000], 5.0);
        assert!((g.step() - 0.0025).abs() < 1e-15);
        let r = g.refined();
        assert_eq!(r.n_points, 4001);
        assert_eq!(r.point(2 * 7), g.point(7));
    }

    #[test]
    fn max_step_grid_has_odd_point_count() {
        let g = TimeGrid::with_max_step(-1.0, 2.0, 0.07).unwrap();
        assert_eq!(g.n_points % 2, 1);
        assert!(g.step() <= 0.07);
    }
}
