use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, ToaError};
use crate::units::UnitSystem;

/// Freely evolving Gaussian wave packet on the line.
///
/// `sigma0` is the width parameter of `ψ(x, 0) ∝ exp(-(x - x0)²/(2σ0²))`, and
/// `weight` the coefficient of the packet inside a superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub x0: f64,
    pub p0: f64,
    pub sigma0: f64,
    pub weight: Complex64,
}

impl GaussianPacket {
    pub fn new(x0: f64, p0: f64, sigma0: f64) -> Result<Self> {
        GaussianPacket::weighted(x0, p0, sigma0, Complex64::new(1.0, 0.0))
    }

    pub fn weighted(x0: f64, p0: f64, sigma0: f64, weight: Complex64) -> Result<Self> {
        if !(x0.is_finite() && p0.is_finite()) {
            return Err(ToaError::invalid("packet position and momentum must be finite"));
        }
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(ToaError::invalid(format!("sigma0 must be positive, got {sigma0}")));
        }
        if !(weight.re.is_finite() && weight.im.is_finite()) {
            return Err(ToaError::invalid("packet weight must be finite"));
        }
        Ok(GaussianPacket {
            x0,
            p0,
            sigma0,
            weight,
        })
    }

    pub fn with_weight(self, weight: Complex64) -> Self {
        GaussianPacket { weight, ..self }
    }

    /// Complex width factor `σ0² (1 + i ħ t / (m σ0²))`.
    fn spread(&self, t: f64, u: &UnitSystem) -> Complex64 {
        let s2 = self.sigma0 * self.sigma0;
        Complex64::new(s2, u.hbar * t / u.mass)
    }

    /// Mean position at time `t`.
    pub fn center(&self, t: f64, u: &UnitSystem) -> f64 {
        self.x0 + self.p0 * t / u.mass
    }

    /// Width parameter `σ(t) = σ0 sqrt(1 + (ħ t / m σ0²)²)` of `|ψ|²`.
    pub fn width(&self, t: f64, u: &UnitSystem) -> f64 {
        let r = u.hbar * t / (u.mass * self.sigma0 * self.sigma0);
        self.sigma0 * (1.0 + r * r).sqrt()
    }

    /// Width of the momentum envelope, `ħ/σ0`.
    pub fn momentum_width(&self, u: &UnitSystem) -> f64 {
        u.hbar / self.sigma0
    }

    pub fn amplitude(&self, x: f64, t: f64, u: &UnitSystem) -> Complex64 {
        let m = u.mass;
        let prefactor =
            (PI.sqrt() * Complex64::new(self.sigma0, u.hbar * t / (m * self.sigma0))).powf(-0.5);
        let shift = x - self.x0 - self.p0 * t / m;
        let envelope = -(shift * shift) / (2.0 * self.spread(t, u));
        let phase = self.p0 / u.hbar * (x - self.x0 - self.p0 * t / (2.0 * m));
        self.weight * prefactor * (envelope + Complex64::new(0.0, phase)).exp()
    }

    /// `∂ψ/∂x = ψ · (i p0/ħ - (x - x0 - p0 t/m) / (σ0² (1 + i ħ t/(m σ0²))))`.
    pub fn amplitude_dx(&self, x: f64, t: f64, u: &UnitSystem) -> Complex64 {
        let shift = x - self.x0 - self.p0 * t / u.mass;
        let log_slope = Complex64::new(0.0, self.p0 / u.hbar) - shift / self.spread(t, u);
        self.amplitude(x, t, u) * log_slope
    }

    /// Momentum representation with the symmetric `(2πħ)^{-1/2}` Fourier
    /// convention, evolved freely to time `t`.
    pub fn momentum_amplitude(&self, k: f64, t: f64, u: &UnitSystem) -> Complex64 {
        let hbar = u.hbar;
        let norm = (self.sigma0 * self.sigma0 / (PI * hbar * hbar)).powf(0.25);
        let dk = k - self.p0;
        let envelope = -dk * dk * self.sigma0 * self.sigma0 / (2.0 * hbar * hbar);
        let phase = -k * self.x0 / hbar - t * k * k / (2.0 * u.mass * hbar);
        self.weight * norm * Complex64::new(envelope, phase).exp()
    }

    pub fn translated(self, dx: f64) -> Self {
        GaussianPacket {
            x0: self.x0 + dx,
            ..self
        }
    }
}

/// Coherent superposition of Gaussian packets sharing one unit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    pub packets: Vec<GaussianPacket>,
    pub units: UnitSystem,
}

impl Superposition {
    /// Superposition with the packets' own weights.
    pub fn new(packets: Vec<GaussianPacket>, units: UnitSystem) -> Result<Self> {
        if packets.is_empty() {
            return Err(ToaError::invalid("superposition needs at least one packet"));
        }
        Ok(Superposition { packets, units })
    }

    /// Equal-weight wave train: every packet gets weight `1/√n`.
    pub fn train(packets: Vec<GaussianPacket>, units: UnitSystem) -> Result<Self> {
        let n = packets.len() as f64;
        let w = Complex64::new(1.0 / n.sqrt(), 0.0);
        Superposition::new(packets.into_iter().map(|p| p.with_weight(w)).collect(), units)
    }

    pub fn single(packet: GaussianPacket, units: UnitSystem) -> Self {
        Superposition {
            packets: vec![packet],
            units,
        }
    }

    pub fn amplitude(&self, x: f64, t: f64) -> Complex64 {
        self.packets.iter().map(|p| p.amplitude(x, t, &self.units)).sum()
    }

    pub fn amplitude_dx(&self, x: f64, t: f64) -> Complex64 {
        self.packets.iter().map(|p| p.amplitude_dx(x, t, &self.units)).sum()
    }

    pub fn momentum_amplitude(&self, k: f64, t: f64) -> Complex64 {
        self.packets
            .iter()
            .map(|p| p.momentum_amplitude(k, t, &self.units))
            .sum()
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.amplitude(x, t).norm_sqr()
    }

    pub fn translated(&self, dx: f64) -> Self {
        Superposition {
            packets: self.packets.iter().map(|p| p.translated(dx)).collect(),
            units: self.units,
        }
    }

    /// Half-width in `x` around the origin that contains every packet at `t`
    /// out to `widths` envelope widths.
    pub fn support_radius(&self, t: f64, widths: f64) -> f64 {
        self.packets
            .iter()
            .map(|p| p.center(t, &self.units).abs() + widths * p.width(t, &self.units))
            .fold(0.0, f64::max)
    }

    /// Whether the packets travel in opposite directions (a packet at rest
    /// counts as both). The momentum tails of a single slow packet do not
    /// count; their effect shows up as backflow in the current instead.
    pub fn has_mixed_momentum_signs(&self) -> bool {
        let pos = self.packets.iter().any(|p| p.p0 >= 0.0);
        let neg = self.packets.iter().any(|p| p.p0 <= 0.0);
        pos && neg
    }
}
