use serde::{Deserialize, Serialize};

use super::{Method, ToaCurve};
use crate::error::{Result, ToaError};
use crate::units::Interval;

/// Values below this count as genuinely negative.
pub const BACKFLOW_THRESHOLD: f64 = -1e-12;

/// Maxima weaker than this fraction of the window peak are treated as noise
/// when deciding whether a minimum is a fringe.
const FRINGE_SIGNIFICANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackflowInterval {
    pub interval: Interval,
    pub min_value: f64,
}

/// Maximal runs of grid points where a flux curve is negative.
pub fn detect_backflow(curve: &ToaCurve) -> Result<Vec<BackflowInterval>> {
    if curve.method != Method::Flux {
        return Err(ToaError::WrongMethod {
            expected: Method::Flux.to_string(),
            got: curve.method.to_string(),
        });
    }
    let mut out = Vec::new();
    let mut run: Option<(usize, f64)> = None;
    let n = curve.values.len();
    for (i, &v) in curve.values.iter().enumerate() {
        if v < BACKFLOW_THRESHOLD {
            run = Some(match run {
                Some((start, m)) => (start, m.min(v)),
                None => (i, v),
            });
        }
        let ends = v >= BACKFLOW_THRESHOLD || i + 1 == n;
        if ends {
            if let Some((start, m)) = run.take() {
                let last = if v < BACKFLOW_THRESHOLD { i } else { i - 1 };
                out.push(BackflowInterval {
                    interval: Interval::new(curve.grid.point(start), curve.grid.point(last))?,
                    min_value: m,
                });
            }
        }
    }
    Ok(out)
}

/// Fringe visibility `(max - min)/(max + min)` over the interior extrema in
/// `window`; zero when no interior minimum lies between two significant maxima.
pub fn fringe_visibility(curve: &ToaCurve, window: Interval) -> Result<f64> {
    let g = &curve.grid;
    if window.start < g.t_start || window.end > g.t_end {
        return Err(ToaError::invalid("visibility window must lie inside the grid"));
    }
    let first = ((window.start - g.t_start) / g.step()).ceil() as usize;
    let last = (((window.end - g.t_start) / g.step()).floor() as usize).min(g.n_points - 1);
    if last < first || last - first + 1 < 5 {
        return Err(ToaError::invalid(format!(
            "visibility window [{}, {}] holds fewer than 5 grid points",
            window.start, window.end
        )));
    }
    let v = &curve.values[first..=last];
    if v.iter().any(|x| *x < 0.0) {
        return Err(ToaError::NegativeCurve);
    }

    let peak = v.iter().cloned().fold(0.0, f64::max);
    let floor = FRINGE_SIGNIFICANCE * peak;
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..v.len() - 1 {
        // plateaus count once, at their left edge
        let mut j = i;
        while j + 1 < v.len() - 1 && v[j + 1] == v[i] {
            j += 1;
        }
        if v[i - 1] < v[i] && v[j + 1] < v[i] && v[i] >= floor {
            maxima.push(i);
        } else if v[i - 1] > v[i] && v[j + 1] > v[i] {
            minima.push(i);
        }
    }
    let fringes: Vec<f64> = minima
        .iter()
        .filter(|&&m| maxima.iter().any(|&a| a < m) && maxima.iter().any(|&a| a > m))
        .map(|&m| v[m])
        .collect();
    if fringes.is_empty() {
        return Ok(0.0);
    }
    let hi = maxima.iter().map(|&i| v[i]).fold(0.0, f64::max);
    let lo = fringes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((hi - lo) / (hi + lo))
}
