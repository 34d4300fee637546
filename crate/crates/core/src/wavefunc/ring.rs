use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, ToaError};
use crate::units::UnitSystem;

/// One Gaussian packet on the ring, stored through its plane-wave coefficients
/// `a_n` for modes `n = mode_min, ..., mode_min + coefficients.len() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingPacket {
    pub xbar: f64,
    pub pbar: f64,
    pub sigma0: f64,
    pub weight: Complex64,
    pub mode_min: i64,
    pub coefficients: Vec<f64>,
}

impl RingPacket {
    pub fn mode_max(&self) -> i64 {
        self.mode_min + self.coefficients.len() as i64 - 1
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(i, &a)| (self.mode_min + i as i64, a))
    }
}

/// Superposition of Gaussian packets confined to a ring of radius `radius`
/// with periodic coordinate `x ∈ [-d/2, d/2)`, `d = 2πR`.
///
/// Mode `n` carries momentum `p_n = nħ/R` and energy `E_n = p_n²/(2m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    pub radius: f64,
    pub circumference: f64,
    pub units: UnitSystem,
    /// Relative cutoff used to select the retained modes of every packet.
    pub tail_epsilon: f64,
    pub packets: Vec<RingPacket>,
}

impl RingState {
    pub fn from_packets(
        radius: f64,
        units: UnitSystem,
        tail_epsilon: f64,
        packets: Vec<RingPacket>,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ToaError::invalid("ring radius must be positive"));
        }
        if packets.is_empty() {
            return Err(ToaError::invalid("ring state needs at least one packet"));
        }
        Ok(RingState {
            radius,
            circumference: 2.0 * PI * radius,
            units,
            tail_epsilon,
            packets,
        })
    }

    /// Combines single-packet states built on the same ring into one state,
    /// replacing each packet's weight by `weights[i]`.
    pub fn superpose(states: Vec<RingState>, weights: &[Complex64]) -> Result<Self> {
        if states.len() != weights.len() || states.is_empty() {
            return Err(ToaError::invalid("one weight per ring state is required"));
        }
        let radius = states[0].radius;
        let units = states[0].units;
        let tail_epsilon = states[0].tail_epsilon;
        let mut packets = Vec::new();
        for (s, w) in states.into_iter().zip(weights) {
            units.ensure_same(&s.units)?;
            if s.radius != radius {
                return Err(ToaError::invalid("ring states live on different rings"));
            }
            packets.extend(s.packets.into_iter().map(|p| RingPacket { weight: *w, ..p }));
        }
        RingState::from_packets(radius, units, tail_epsilon, packets)
    }

    pub fn mode_momentum(&self, n: i64) -> f64 {
        n as f64 * self.units.hbar / self.radius
    }

    /// Maps `x` into the canonical period `[-d/2, d/2)`.
    pub fn canonical(&self, x: f64) -> f64 {
        let d = self.circumference;
        let y = (x + 0.5 * d).rem_euclid(d) - 0.5 * d;
        if y >= 0.5 * d {
            y - d
        } else {
            y
        }
    }

    // phase rate per unit time of mode n, E_n/ħ = n² ħ/(2 m R²)
    fn energy_rate(&self) -> f64 {
        self.units.hbar / (2.0 * self.units.mass * self.radius * self.radius)
    }

    fn sum_modes(&self, x: f64, t: f64, derivative: bool) -> Complex64 {
        let x = self.canonical(x);
        let k = 1.0 / self.radius;
        let w = self.energy_rate();
        let mut total = Complex64::new(0.0, 0.0);
        for packet in &self.packets {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, a) in packet.modes() {
                let nf = n as f64;
                let phase = nf * k * (x - packet.xbar) - nf * nf * w * t;
                let mut term = Complex64::from_polar(a, phase);
                if derivative {
                    term *= Complex64::new(0.0, nf * k);
                }
                acc += term;
            }
            total += packet.weight * acc;
        }
        total
    }

    pub fn amplitude(&self, x: f64, t: f64) -> Complex64 {
        self.sum_modes(x, t, false)
    }

    pub fn amplitude_dx(&self, x: f64, t: f64) -> Complex64 {
        self.sum_modes(x, t, true)
    }

    /// Mode momenta with their time-dependent weights `c_n(t)` as seen from a
    /// detector at the origin, summed over packets.
    pub fn mode_amplitudes(&self, t: f64) -> Vec<(f64, Complex64)> {
        let k = 1.0 / self.radius;
        let w = self.energy_rate();
        let lo = self.packets.iter().map(|p| p.mode_min).min().unwrap_or(0);
        let hi = self.packets.iter().map(|p| p.mode_max()).max().unwrap_or(-1);
        let mut out: Vec<(f64, Complex64)> = (lo..=hi)
            .map(|n| (self.mode_momentum(n), Complex64::new(0.0, 0.0)))
            .collect();
        for packet in &self.packets {
            for (n, a) in packet.modes() {
                let nf = n as f64;
                let phase = -nf * k * packet.xbar - nf * nf * w * t;
                out[(n - lo) as usize].1 += packet.weight * Complex64::from_polar(a, phase);
            }
        }
        out
    }

    /// `d Σ|a_n|²` for each packet (unit for a normalized packet).
    pub fn packet_norms(&self) -> Vec<f64> {
        self.packets
            .iter()
            .map(|p| self.circumference * p.coefficients.iter().map(|a| a * a).sum::<f64>())
            .collect()
    }

    pub fn translated(&self, dx: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.packets {
            p.xbar = self.canonical(p.xbar + dx);
        }
        out
    }

    pub fn has_mixed_momentum_signs(&self) -> bool {
        let pos = self.packets.iter().any(|p| p.mode_max() > 0);
        let neg = self.packets.iter().any(|p| p.mode_min < 0);
        pos && neg
    }

    /// Largest mode energy spread `max |E_n - E_m|/ħ` over retained modes.
    pub fn max_frequency(&self) -> f64 {
        let w = self.energy_rate();
        let sq: Vec<f64> = self
            .packets
            .iter()
            .flat_map(|p| [p.mode_min, p.mode_max()])
            .map(|n| (n as f64) * (n as f64))
            .collect();
        let max = sq.iter().cloned().fold(0.0, f64::max);
        let min = self
            .packets
            .iter()
            .map(|p| {
                if p.mode_min <= 0 && p.mode_max() >= 0 {
                    0.0
                } else {
                    let a = p.mode_min.abs().min(p.mode_max().abs()) as f64;
                    a * a
                }
            })
            .fold(f64::INFINITY, f64::min);
        w * (max - min)
    }
}

/// Plane-wave coefficient of mode `n` for a packet of width `sigma0` centred
/// in momentum at `pbar` on a ring of circumference `d`.
pub fn ring_coefficient(p_n: f64, pbar: f64, sigma0: f64, d: f64, hbar: f64) -> f64 {
    let dp = p_n - pbar;
    (4.0 * PI * sigma0 * sigma0 / d.powi(4)).powf(0.25)
        * (-dp * dp * sigma0 * sigma0 / (2.0 * hbar * hbar)).exp()
}

/// Single unit-weight Gaussian packet on a ring of radius `radius`, keeping
/// every mode whose coefficient is at least `tail_epsilon` times the largest.
pub fn build_ring_state(
    xbar: f64,
    pbar: f64,
    sigma0: f64,
    radius: f64,
    units: UnitSystem,
    tail_epsilon: f64,
) -> Result<RingState> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ToaError::invalid("ring radius must be positive"));
    }
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(ToaError::invalid("sigma0 must be positive"));
    }
    if !(xbar.is_finite() && pbar.is_finite()) {
        return Err(ToaError::invalid("packet position and momentum must be finite"));
    }
    let d = 2.0 * PI * radius;
    if sigma0 >= d / 10.0 {
        return Err(ToaError::invalid(format!(
            "sigma0 = {sigma0:e} is too large for a ring of circumference {d:e} (needs sigma0 < d/10)"
        )));
    }
    if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
        return Err(ToaError::invalid("tail_epsilon must lie in (0, 1)"));
    }

    let hbar = units.hbar;
    let p_unit = hbar / radius;
    let coeff = |n: i64| ring_coefficient(n as f64 * p_unit, pbar, sigma0, d, hbar);
    let peak_mode = (pbar / p_unit).round() as i64;
    let peak = coeff(peak_mode);
    if !(peak > 0.0) {
        return Err(ToaError::invalid("empty mode range"));
    }
    let keep = |n: i64| coeff(n) >= tail_epsilon * peak;
    let mut lo = peak_mode;
    while keep(lo - 1) {
        lo -= 1;
    }
    let mut hi = peak_mode;
    while keep(hi + 1) {
        hi += 1;
    }
    let coefficients: Vec<f64> = (lo..=hi).map(coeff).collect();

    let canonical = {
        let y = (xbar + 0.5 * d).rem_euclid(d) - 0.5 * d;
        if y >= 0.5 * d {
            y - d
        } else {
            y
        }
    };
    RingState::from_packets(
        radius,
        units,
        tail_epsilon,
        vec![RingPacket {
            xbar: canonical,
            pbar,
            sigma0,
            weight: Complex64::new(1.0, 0.0),
            mode_min: lo,
            coefficients,
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::UnitSystem;

    const R: f64 = 443e-6;

    fn fig8_packet(n: i64) -> RingState {
        let u = UnitSystem::rubidium87();
        let d = 2.0 * PI * R;
        build_ring_state(-d / 2.0, n as f64 * u.hbar / R, 100e-6, R, u, 1e-8).unwrap()
    }

    #[test]
    fn coefficients_peak_at_requested_mode() {
        let s = fig8_packet(450);
        let p = &s.packets[0];
        let (n_max, _) = p
            .modes()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(n_max, 450);
        assert!(p.mode_min < 450 && p.mode_max() > 450);
    }

    #[test]
    fn periodic_normalization() {
        for n in [450, 350, -400] {
            let s = fig8_packet(n);
            assert!((s.packet_norms()[0] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_coefficients_for_resting_packet() {
        let s = build_ring_state(0.0, 0.0, 0.3, 5.0, UnitSystem::natural(), 1e-8).unwrap();
        let p = &s.packets[0];
        assert_eq!(p.mode_min, -p.mode_max());
        let n = p.coefficients.len();
        for i in 0..n {
            assert_eq!(p.coefficients[i], p.coefficients[n - 1 - i]);
        }
    }

    #[test]
    fn gaussian_reconstruction_at_center() {
        let s = fig8_packet(450);
        let x = s.packets[0].xbar;
        let d = s.amplitude(x, 0.0).norm_sqr();
        let exact = 1.0 / (PI.sqrt() * 100e-6);
        assert!((d / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn amplitude_is_periodic() {
        let s = fig8_packet(450);
        let d = s.circumference;
        for &(x, t) in &[(0.0, 1.3), (2e-4, 0.5), (-1.0e-3, 7.1)] {
            let a = s.amplitude(x, t);
            let b = s.amplitude(x + d, t);
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let s = fig8_packet(350);
        let (x, t, h) = (-2e-4, 1.9, 1e-9);
        let fd = (s.amplitude(x + h, t) - s.amplitude(x - h, t)) / (2.0 * h);
        let d = s.amplitude_dx(x, t);
        assert!((d - fd).norm() / d.norm() <= 1e-6);
    }

    #[test]
    fn too_wide_packet_rejected() {
        let u = UnitSystem::natural();
        assert!(build_ring_state(0.0, 0.0, 1.0, 1.0, u, 1e-8).is_err());
        assert!(build_ring_state(0.0, 0.0, 0.1, 1.0, u, 0.0).is_err());
    }

    #[test]
    fn mode_amplitudes_reproduce_origin_value() {
        let a = fig8_packet(450);
        let b = fig8_packet(-400);
        let w = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        let s = RingState::superpose(vec![a, b], &[w, w]).unwrap();
        let t = 2.2;
        let sum: Complex64 = s.mode_amplitudes(t).iter().map(|(_, c)| c).sum();
        assert!((sum - s.amplitude(0.0, t)).norm() < 1e-9 * s.amplitude(0.0, t).norm().max(1.0));
        assert!(s.has_mixed_momentum_signs());
    }

    #[test]
    fn mode_momentum_in_lab_units() {
        let s = fig8_packet(450);
        // kg mm / s
        let p = s.mode_momentum(450) * 1e3;
        assert!((p / 1.07e-25 - 1.0).abs() < 0.005);
        assert!((s.mode_momentum(350) * 1e3 / 0.83e-25 - 1.0).abs() < 0.005);
    }

    #[test]
    fn canonical_coordinates() {
        let s = fig8_packet(450);
        let d = s.circumference;
        assert_eq!(s.canonical(-d / 2.0), -d / 2.0);
        assert!((s.canonical(d / 2.0) + d / 2.0).abs() < 1e-18);
        assert!((s.canonical(0.75 * d) + 0.25 * d).abs() < 1e-15);
    }
}
