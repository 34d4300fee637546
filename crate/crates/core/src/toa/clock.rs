use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{flux, Evaluator};
use crate::error::{Result, ToaError};
use crate::numerics::{adaptive_over_points, QuadratureSpec};
use crate::units::Interval;
use crate::wavefunc::State;

/// Number of oscillation radians per quadrature panel on ring windows.
const RING_PANEL_RADIANS: f64 = 50.0;

/// One row of a regularization scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormScanRow {
    pub period: f64,
    pub n_clock: f64,
    /// `None` when the flux is inapplicable to the state.
    pub n_flux: Option<f64>,
}

/// `|Ψ(0, t)|²`.
pub(super) fn density(state: &State, t: f64) -> f64 {
    state.amplitude(0.0, t).norm_sqr()
}

/// Breakpoints inside `window` at which integrands over time change shape.
fn time_breakpoints(state: &State, window: Interval) -> Vec<f64> {
    let mut points = vec![window.start, window.end];
    match state {
        State::Line(line) => {
            let u = &line.units;
            for p in &line.packets {
                if p.p0 != 0.0 {
                    let tc = -p.x0 * u.mass / p.p0;
                    // the arrival region and a geometric ladder through the slow tail
                    let spread = p.sigma0 * u.mass / p.p0.abs();
                    for k in [-3.0, 0.0, 3.0] {
                        points.push(tc + k * spread);
                    }
                    let mut s = 2.0 * tc.abs().max(spread);
                    while s < window.width() {
                        points.push(s);
                        points.push(-s);
                        s *= 2.0;
                    }
                }
            }
            points.push(0.0);
        }
        State::Ring(ring) => {
            let w = ring.max_frequency();
            if w > 0.0 {
                let panel = RING_PANEL_RADIANS / w;
                let n = (window.width() / panel).ceil().min(1e6) as usize;
                let h = window.width() / n as f64;
                points.extend((1..n).map(|i| window.start + i as f64 * h));
            }
        }
    }
    points.retain(|t| window.contains(*t));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

fn time_integral<F>(f: F, state: &State, window: Interval, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if window.width() == 0.0 {
        return Ok(0.0);
    }
    let points = time_breakpoints(state, window);
    let q = adaptive_over_points(|t| Complex64::new(f(t), 0.0), &points, quad).into_result()?;
    Ok(q.value.re)
}

/// `N_C = ∫_window |Ψ(0, t)|² dt`.
pub fn clock_normalization(state: &State, window: Interval, quad: &QuadratureSpec) -> Result<f64> {
    time_integral(|t| density(state, t), state, window, quad)
}

pub(super) fn normscan(ev: &Evaluator, state: &State, periods: &[f64]) -> Result<Vec<NormScanRow>> {
    if let Some(bad) = periods.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(ToaError::invalid(format!("regularization period must be >= 0, got {bad}")));
    }
    let with_flux = flux::check_applicable(state).is_ok();
    ev.exec.try_map(periods.len(), |i| {
        let period = periods[i];
        let window = Interval::new(-0.5 * period, 0.5 * period)?;
        let n_clock = clock_normalization(state, window, &ev.quad)?;
        let n_flux = if with_flux {
            Some(time_integral(|t| flux::current(state, t), state, window, &ev.quad)?)
        } else {
            None
        };
        Ok(NormScanRow {
            period,
            n_clock,
            n_flux,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_time_grid;
    use crate::scenario::{make_scenario_preset, FigureId, Scenario};
    use crate::units::{TimeGrid, UnitSystem};
    use crate::wavefunc::{GaussianPacket, Superposition};
    use std::f64::consts::PI;

    fn single(x0: f64, p0: f64) -> State {
        Superposition::single(GaussianPacket::new(x0, p0, 1.0).unwrap(), UnitSystem::natural()).into()
    }

    #[test]
    fn resting_packet_has_closed_form_normalization() {
        let s = single(0.0, 0.0);
        for period in [1.0, 10.0, 100.0] {
            let n = clock_normalization(&s, Interval::new(-period / 2.0, period / 2.0).unwrap(), &QuadratureSpec::default())
                .unwrap();
            let exact = 2.0 / PI.sqrt() * (period / 2.0).asinh();
            assert!((n - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn adaptive_normalization_agrees_with_fine_grid_simpson() {
        let s = make_scenario_preset(FigureId::Fig5).unwrap().state;
        let w = Interval::new(-50.0, 50.0).unwrap();
        let a = clock_normalization(&s, w, &QuadratureSpec::default()).unwrap();
        let grid = TimeGrid::with_max_step(-50.0, 50.0, 2e-4).unwrap();
        let values: Vec<f64> = grid.points().iter().map(|&t| density(&s, t)).collect();
        let b = integrate_time_grid(&values, &grid).unwrap();
        assert!((a - b).abs() < 1e-8 * a, "{a} vs {b}");
    }

    #[test]
    fn logarithmic_growth_of_clock_normalization() {
        let ev = Evaluator::default();
        let periods = [1e3, 1e4, 1e5];
        let rows = normscan(&ev, &single(-10.0, 1.0), &periods).unwrap();
        let slope = (rows[2].n_clock - rows[0].n_clock) / (1e5f64.ln() - 1e3f64.ln());
        let expected = 2.0 * (-1.0f64).exp() / PI.sqrt();
        assert!((slope / expected - 1.0).abs() < 0.1, "{slope} vs {expected}");
        assert!(rows.windows(2).all(|r| r[1].n_clock > r[0].n_clock));
    }

    #[test]
    fn fig2_curve_rises_then_flattens() {
        let ev = Evaluator::default();
        let s = make_scenario_preset(FigureId::Fig2).unwrap();
        let periods = s.grid.points();
        let rows = ev.normscan(&s, &periods).unwrap();
        assert!(rows.windows(2).all(|r| r[1].n_clock >= r[0].n_clock));
        let at = |t: f64| rows.iter().find(|r| r.period >= t).unwrap().n_clock;
        assert!(at(5.0) > 0.95 * at(20.0));
        assert!(at(2.0) < 0.5 * at(20.0));
    }

    #[test]
    fn mirror_symmetric_pairs_share_the_clock_density_bitwise() {
        let a = make_scenario_preset(FigureId::Fig5).unwrap();
        let b = make_scenario_preset(FigureId::Fig7).unwrap();
        for t in [0.0, 1.7, 2.95, 3.0, 3.1, 7.9] {
            assert_eq!(density(&a.state, t), density(&b.state, t));
        }
        let ev = Evaluator::default();
        let ca = ev.quantum_clock(&a).unwrap();
        let cb = ev.quantum_clock(&b).unwrap();
        assert_eq!(ca.values, cb.values);
    }

    #[test]
    fn flux_scan_is_absent_for_counter_propagating_state() {
        let s: Scenario = make_scenario_preset(FigureId::Fig7).unwrap();
        let rows = Evaluator::default().normscan(&s, &[10.0]).unwrap();
        assert!(rows[0].n_flux.is_none());
    }
}
