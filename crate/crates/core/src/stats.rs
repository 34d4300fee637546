//! Click statistics: bin probabilities, the separation between two
//! candidate distributions, the sample-size bound, synthetic detector
//! clicks and the chi-square comparison.
//!
//! Clicks are drawn with ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`),
//! one uniform `f64` in `[0, 1)` per click, mapped through the
//! piecewise-linear CDF of the curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, ToaError};
use crate::numerics::integrate_time_grid;
use crate::par::Exec;
use crate::scenario::Scenario;
use crate::toa::{Evaluator, Method, ToaCurve, BACKFLOW_THRESHOLD};
use crate::units::{Interval, TimeGrid};

/// Smallest expected count per chi-square bin.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Histogram bin edges, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(ToaError::invalid("a bin specification needs at least 2 edges"));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ToaError::invalid("bin edges must be finite and strictly increasing"));
        }
        Ok(BinSpec { edges })
    }

    /// `n` equal bins over `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ToaError::invalid("need at least one bin"));
        }
        let g = TimeGrid::new(a, b, n + 1)?;
        BinSpec::new(g.points())
    }

    /// Bins of width close to `width` covering `[a, b]`.
    pub fn with_width(a: f64, b: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(ToaError::invalid("bin width must be positive"));
        }
        BinSpec::uniform(a, b, ((b - a) / width).round().max(1.0) as usize)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bin(&self, k: usize) -> Interval {
        Interval {
            start: self.edges[k],
            end: self.edges[k + 1],
        }
    }

    /// Index of the bin containing `t`; the last bin is closed on the right.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let n = self.edges.len();
        if !(t >= self.edges[0] && t <= self.edges[n - 1]) {
            return None;
        }
        let k = self.edges.partition_point(|e| *e <= t);
        Some(k.saturating_sub(1).min(n - 2))
    }
}

/// `∫_bin Π dt`: Simpson over the grid points inside the bin, with the
/// partial cells at the edges integrated on the linearly interpolated curve.
pub fn bin_probability(curve: &ToaCurve, bin: Interval) -> Result<f64> {
    let g = &curve.grid;
    if bin.start < g.t_start || bin.end > g.t_end {
        return Err(ToaError::invalid(format!(
            "bin [{}, {}] lies outside the curve grid [{}, {}]",
            bin.start, bin.end, g.t_start, g.t_end
        )));
    }
    if bin.width() == 0.0 {
        return Ok(0.0);
    }
    let h = g.step();
    let last = g.n_points - 1;
    let i0 = (((bin.start - g.t_start) / h).ceil() as usize).min(last);
    let i1 = (((bin.end - g.t_start) / h).floor() as usize).min(last);
    if i0 > i1 {
        // the bin sits inside a single cell
        let (a, b) = (curve.value_at(bin.start)?, curve.value_at(bin.end)?);
        return Ok(0.5 * (a + b) * bin.width());
    }
    let (t0, t1) = (g.point(i0), g.point(i1));
    let mut total = 0.0;
    if i1 > i0 {
        let sub = TimeGrid::new(t0, t1, i1 - i0 + 1)?;
        total += integrate_time_grid(&curve.values[i0..=i1], &sub)?;
    }
    if t0 > bin.start {
        total += 0.5 * (curve.value_at(bin.start)? + curve.values[i0]) * (t0 - bin.start);
    }
    if bin.end > t1 {
        total += 0.5 * (curve.values[i1] + curve.value_at(bin.end)?) * (bin.end - t1);
    }
    Ok(total)
}

/// `D = |∫_bin (Π1 - Π2) dt|`.
pub fn separation_d(c1: &ToaCurve, c2: &ToaCurve, bin: Interval) -> Result<f64> {
    Ok((bin_probability(c1, bin)? - bin_probability(c2, bin)?).abs())
}

/// Smallest integer strictly above `4 f (1 - f) / D²`.
pub fn min_samples(f: f64, d: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(ToaError::invalid(format!("bin probability {f} outside [0, 1]")));
    }
    if !(d > 0.0) {
        return Err(ToaError::Indistinguishable);
    }
    let bound = 4.0 * f * (1.0 - f) / (d * d);
    if !bound.is_finite() || bound >= u64::MAX as f64 {
        return Err(ToaError::invalid(format!("sample bound {bound:e} is not representable")));
    }
    // an exactly integral bound must not be met with equality; rounding in
    // f and D can leave it a few ulps below that integer
    let nearest = bound.round();
    let strict = if (bound - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest + 1.0
    } else {
        bound.floor() + 1.0
    };
    Ok(strict as u64)
}

/// The larger of the two bounds obtained with either candidate's `f`.
pub fn min_samples_pair(f1: f64, f2: f64, d: f64) -> Result<u64> {
    Ok(min_samples(f1, d)?.max(min_samples(f2, d)?))
}

/// Standard error `sqrt(f (1 - f) / N)` of a bin frequency.
pub fn bin_error(f: f64, n: u64) -> f64 {
    (f * (1.0 - f) / n as f64).sqrt()
}

/// Synthetic detector clicks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickSample {
    pub times: Vec<f64>,
    pub seed: u64,
    pub source: Method,
    pub grid: TimeGrid,
}

/// Cumulative trapezoid masses `C_0 = 0, ..., C_{n-1}` of a curve.
fn cumulative(curve: &ToaCurve) -> Result<Vec<f64>> {
    if curve.values.iter().any(|v| *v < BACKFLOW_THRESHOLD || !v.is_finite()) {
        return Err(ToaError::NegativeCurve);
    }
    let h = curve.grid.step();
    let mut c = Vec::with_capacity(curve.values.len());
    let mut acc = 0.0;
    c.push(0.0);
    for w in curve.values.windows(2) {
        acc += 0.5 * (w[0].max(0.0) + w[1].max(0.0)) * h;
        c.push(acc);
    }
    if !(acc > 0.0) {
        return Err(ToaError::invalid("curve has no mass to sample from"));
    }
    Ok(c)
}

fn draw(cdf: &[f64], grid: &TimeGrid, rng: &mut ChaCha8Rng) -> f64 {
    let total = cdf[cdf.len() - 1];
    let u = rng.random::<f64>() * total;
    // first cell whose right edge reaches u, skipping empty cells
    let k = cdf.partition_point(|c| *c <= u).clamp(1, cdf.len() - 1);
    let (lo, hi) = (cdf[k - 1], cdf[k]);
    let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
    let t0 = grid.point(k - 1);
    (t0 + frac * grid.step()).min(grid.t_end)
}

/// `n` click times drawn from `curve` by inverse-CDF sampling.
pub fn sample_clicks(curve: &ToaCurve, n: usize, seed: u64) -> Result<ClickSample> {
    if n == 0 {
        return Err(ToaError::invalid("need at least one click"));
    }
    let cdf = cumulative(curve)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = (0..n).map(|_| draw(&cdf, &curve.grid, &mut rng)).collect();
    Ok(ClickSample {
        times,
        seed,
        source: curve.method,
        grid: curve.grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareOutcome {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Edges of the bins actually used after merging.
    pub merged_edges: Vec<f64>,
}

/// Pearson chi-square test of `sample` against `candidate`, conditioned on
/// the clicks that fall inside the binned range. Bins are merged left to
/// right until every expected count reaches [`MIN_EXPECTED_COUNT`]; a short
/// remainder is merged into the last group.
pub fn chi_square_test(sample: &ClickSample, candidate: &ToaCurve, bins: &BinSpec) -> Result<ChiSquareOutcome> {
    if bins.len() < 2 {
        return Err(ToaError::invalid("chi-square test needs at least 2 bins (dof = 0 otherwise)"));
    }
    let probs = (0..bins.len())
        .map(|k| bin_probability(candidate, bins.bin(k)))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; bins.len()];
    for &t in &sample.times {
        if let Some(k) = bins.locate(t) {
            counts[k] += 1;
        }
    }
    let n_in: u64 = counts.iter().sum();
    let mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    if n_in == 0 || !(mass > 0.0) {
        return Err(ToaError::TooFewSamples("no clicks or no candidate mass inside the bins".into()));
    }

    // (expected, observed, right edge)
    let mut groups: Vec<(f64, u64, f64)> = Vec::new();
    let mut acc = (0.0, 0u64);
    for k in 0..bins.len() {
        acc.0 += n_in as f64 * probs[k].max(0.0) / mass;
        acc.1 += counts[k];
        if acc.0 >= MIN_EXPECTED_COUNT {
            groups.push((acc.0, acc.1, bins.edges()[k + 1]));
            acc = (0.0, 0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0 {
        match groups.last_mut() {
            Some(g) => {
                g.0 += acc.0;
                g.1 += acc.1;
                g.2 = bins.edges()[bins.len()];
            }
            None => groups.push((acc.0, acc.1, bins.edges()[bins.len()])),
        }
    }
    if groups.len() < 2 {
        return Err(ToaError::TooFewSamples(format!(
            "{n_in} clicks leave fewer than 2 bins with expected count >= {MIN_EXPECTED_COUNT}"
        )));
    }
    let chi2: f64 = groups
        .iter()
        .map(|(e, o, _)| {
            let d = *o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = groups.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| ToaError::invalid(e.to_string()))?;
    let mut merged_edges = vec![bins.edges()[0]];
    merged_edges.extend(groups.iter().map(|g| g.2));
    Ok(ChiSquareOutcome {
        chi2,
        dof,
        p_value: dist.sf(chi2),
        merged_edges,
    })
}

/// Monte Carlo rejection rate of the chi-square test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub source: Method,
    pub candidate: Method,
    pub n_samples: usize,
    pub seeds: Vec<u64>,
    pub n_bins: usize,
    pub alpha: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
}

/// Fraction of seeds for which clicks drawn from `source` reject `candidate`
/// at level `alpha`.
pub fn rejection_rate(
    source: &ToaCurve,
    candidate: &ToaCurve,
    bins: &BinSpec,
    n_samples: usize,
    seeds: &[u64],
    alpha: f64,
    exec: Exec,
) -> Result<PowerSummary> {
    if seeds.is_empty() {
        return Err(ToaError::invalid("need at least one seed"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ToaError::invalid("alpha must lie in (0, 1)"));
    }
    let p_values = exec.try_map(seeds.len(), |i| {
        let s = sample_clicks(source, n_samples, seeds[i])?;
        Ok::<f64, ToaError>(chi_square_test(&s, candidate, bins)?.p_value)
    })?;
    let rejections = p_values.iter().filter(|p| **p < alpha).count();
    Ok(PowerSummary {
        source: source.method,
        candidate: candidate.method,
        n_samples,
        seeds: seeds.to_vec(),
        n_bins: bins.len(),
        alpha,
        rejections,
        rejection_rate: rejections as f64 / seeds.len() as f64,
    })
}

/// Settings for the optional power study of a discrimination report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub n_samples: usize,
    pub n_seeds: usize,
    pub first_seed: u64,
    pub bin_width: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub scenario: String,
    pub methods: [Method; 2],
    pub bin: Interval,
    pub f_k: [f64; 2],
    pub d: f64,
    pub n_s_min: u64,
    /// Bin errors `sqrt(f (1 - f)/N)` at `N = n_s_min`.
    pub epsilon_k: [f64; 2],
    pub power: Option<PowerSummary>,
}

/// Separation of two methods in `bin`, the click count needed to resolve
/// it, and optionally how often a chi-square test on clicks drawn from the
/// first method rejects the second.
pub fn discriminate(
    ev: &Evaluator,
    scenario: &Scenario,
    methods: [Method; 2],
    bin: Interval,
    power: Option<PowerConfig>,
) -> Result<DiscriminationReport> {
    if methods[0] == methods[1] {
        return Err(ToaError::Indistinguishable);
    }
    let c1 = ev.evaluate(scenario, methods[0])?;
    let c2 = ev.evaluate(scenario, methods[1])?;
    let f1 = bin_probability(&c1, bin)?;
    let f2 = bin_probability(&c2, bin)?;
    let d = (f1 - f2).abs();
    let n_s_min = min_samples_pair(f1.clamp(0.0, 1.0), f2.clamp(0.0, 1.0), d)?;
    let power = match power {
        None => None,
        Some(cfg) => {
            let g = &scenario.grid;
            let bins = BinSpec::with_width(g.t_start, g.t_end, cfg.bin_width)?;
            let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.first_seed + i).collect();
            Some(rejection_rate(&c1, &c2, &bins, cfg.n_samples, &seeds, cfg.alpha, ev.exec)?)
        }
    };
    Ok(DiscriminationReport {
        scenario: scenario.name.clone(),
        methods,
        bin,
        f_k: [f1, f2],
        d,
        n_s_min,
        epsilon_k: [bin_error(f1, n_s_min), bin_error(f2, n_s_min)],
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{make_scenario_preset, FigureId, NormalizationPolicy};
    use crate::toa::Normalization;
    use proptest::prelude::*;

    fn curve(grid: TimeGrid, f: impl Fn(f64) -> f64) -> ToaCurve {
        ToaCurve {
            grid,
            values: grid.points().into_iter().map(f).collect(),
            method: Method::QuantumClock,
            normalization: Normalization {
                constant: 1.0,
                window: None,
                policy: NormalizationPolicy::Unnormalized,
            },
            negativity_flag: false,
        }
    }

    fn fig3_clock() -> ToaCurve {
        let s = make_scenario_preset(FigureId::Fig3).unwrap();
        Evaluator::default().quantum_clock(&s).unwrap()
    }

    #[test]
    fn min_samples_examples() {
        assert_eq!(min_samples(0.5, 0.1).unwrap(), 101);
        assert_eq!(min_samples(0.0, 0.3).unwrap(), 1);
        assert_eq!(min_samples(1.0, 0.3).unwrap(), 1);
        assert_eq!(min_samples(0.5, 0.0), Err(ToaError::Indistinguishable));
        assert!(min_samples(1.5, 0.1).is_err());
        assert_eq!(min_samples_pair(0.1, 0.5, 0.1).unwrap(), 101);
    }

    #[test]
    fn bin_probability_of_polynomial_density() {
        // 3t² on [0, 1]: exact masses from t³
        let c = curve(TimeGrid::new(0.0, 1.0, 101).unwrap(), |t| 3.0 * t * t);
        let whole = bin_probability(&c, Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!((whole - 1.0).abs() < 1e-14);
        let aligned = bin_probability(&c, Interval::new(0.2, 0.6).unwrap()).unwrap();
        assert!((aligned - (0.216 - 0.008)).abs() < 1e-13);
        let ragged = bin_probability(&c, Interval::new(0.2051, 0.6049).unwrap()).unwrap();
        let exact = 0.6049f64.powi(3) - 0.2051f64.powi(3);
        assert!((ragged - exact).abs() < 1e-5);
        let inside = bin_probability(&c, Interval::new(0.501, 0.509).unwrap()).unwrap();
        assert!((inside - (0.509f64.powi(3) - 0.501f64.powi(3))).abs() < 1e-6);
        assert_eq!(bin_probability(&c, Interval::new(0.3, 0.3).unwrap()).unwrap(), 0.0);
        assert!(bin_probability(&c, Interval::new(0.5, 1.5).unwrap()).is_err());
    }

    #[test]
    fn separation_of_identical_and_complementary_bins() {
        let c = fig3_clock();
        let full = Interval::new(0.0, 5.0).unwrap();
        assert_eq!(separation_d(&c, &c, Interval::new(1.0, 2.0).unwrap()).unwrap(), 0.0);
        let k = Evaluator::default()
            .kijowski_momentum(&make_scenario_preset(FigureId::Fig3).unwrap())
            .unwrap();
        assert!(separation_d(&c, &k, full).unwrap() <= 1e-4);
        assert!((bin_probability(&c, full).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_hot_bins() {
        let c = fig3_clock();
        let a = sample_clicks(&c, 1000, 7).unwrap();
        let b = sample_clicks(&c, 1000, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.times, sample_clicks(&c, 1000, 8).unwrap().times);

        let grid = TimeGrid::new(0.0, 1.0, 101).unwrap();
        let spike = curve(grid, |t| if (t - 0.5).abs() < 1e-9 { 100.0 } else { 0.0 });
        let s = sample_clicks(&spike, 5000, 1).unwrap();
        assert!(s.times.iter().all(|t| (0.49..=0.51).contains(t)));
    }

    #[test]
    fn negative_curves_cannot_be_sampled() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let c = curve(grid, |t| t - 0.3);
        assert_eq!(sample_clicks(&c, 10, 1), Err(ToaError::NegativeCurve));
    }

    #[test]
    fn sample_mean_matches_first_moment() {
        let c = fig3_clock();
        let n = 100_000;
        let s = sample_clicks(&c, n, 2024).unwrap();
        let mean = s.times.iter().sum::<f64>() / n as f64;
        let tvals: Vec<f64> = c.grid.points().iter().zip(&c.values).map(|(t, v)| t * v).collect();
        let t2vals: Vec<f64> = c.grid.points().iter().zip(&c.values).map(|(t, v)| t * t * v).collect();
        let mass = c.integral().unwrap();
        let m1 = integrate_time_grid(&tvals, &c.grid).unwrap() / mass;
        let m2 = integrate_time_grid(&t2vals, &c.grid).unwrap() / mass;
        let se = ((m2 - m1 * m1) / n as f64).sqrt();
        assert!((mean - m1).abs() < 3.0 * se, "{mean} vs {m1} ± {se}");
    }

    #[test]
    fn bin_frequencies_converge_to_bin_probabilities() {
        let c = fig3_clock();
        let n = 10_000;
        let s = sample_clicks(&c, n, 99).unwrap();
        let bins = BinSpec::uniform(0.8, 2.2, 14).unwrap();
        let mass = c.integral().unwrap();
        for k in 0..bins.len() {
            let f = bin_probability(&c, bins.bin(k)).unwrap() / mass;
            let hits = s.times.iter().filter(|t| bins.locate(**t) == Some(k)).count();
            let freq = hits as f64 / n as f64;
            assert!((freq - f).abs() <= 3.0 * bin_error(f, n as u64) + 1e-12, "bin {k}: {freq} vs {f}");
        }
    }

    #[test]
    fn chi_square_rules() {
        let c = fig3_clock();
        let s = sample_clicks(&c, 50, 3).unwrap();
        assert!(chi_square_test(&s, &c, &BinSpec::uniform(0.0, 5.0, 1).unwrap()).is_err());
        let tiny = sample_clicks(&c, 6, 3).unwrap();
        assert!(matches!(
            chi_square_test(&tiny, &c, &BinSpec::uniform(0.0, 5.0, 20).unwrap()),
            Err(ToaError::TooFewSamples(_))
        ));
        let big = sample_clicks(&c, 10_000, 3).unwrap();
        let out = chi_square_test(&big, &c, &BinSpec::uniform(0.0, 5.0, 20).unwrap()).unwrap();
        assert!(out.dof >= 2);
        assert!(out.p_value > 1e-4);
        assert_eq!(out.merged_edges.len(), out.dof + 2);
    }

    #[test]
    fn discrimination_of_identical_methods_is_impossible() {
        let s = make_scenario_preset(FigureId::Fig3).unwrap();
        let ev = Evaluator::default();
        let bin = Interval::new(1.0, 2.0).unwrap();
        assert_eq!(
            discriminate(&ev, &s, [Method::QuantumClock, Method::QuantumClock], bin, None),
            Err(ToaError::Indistinguishable)
        );
        let r = discriminate(&ev, &s, [Method::KijowskiMomentum, Method::Flux], bin, None).unwrap();
        assert!(r.n_s_min > 100_000, "{}", r.n_s_min);
    }

    proptest! {
        #[test]
        fn min_samples_is_monotone_in_d(f in 0.0f64..=1.0, d in 1e-3f64..1.0, k in 1.01f64..3.0) {
            prop_assert!(min_samples(f, d * k).unwrap() <= min_samples(f, d).unwrap());
        }

        #[test]
        fn min_samples_is_largest_at_half(f in 0.0f64..=1.0, d in 1e-3f64..1.0) {
            prop_assert!(min_samples(f, d).unwrap() <= min_samples(0.5, d).unwrap());
        }

        #[test]
        fn error_at_bound_resolves_half_separation(f in 0.01f64..0.99, d in 1e-3f64..0.5) {
            let n = min_samples(f, d).unwrap();
            let eps = bin_error(f, n);
            prop_assert!(eps < d / 2.0 + f64::EPSILON * d);
            if n > 1 {
                prop_assert!(bin_error(f, n - 1) >= d / 2.0 * (1.0 - 1e-9));
            }
        }

        #[test]
        fn bin_error_scales_as_inverse_root(f in 0.01f64..0.99, n in 1u64..100_000) {
            let ratio = bin_error(f, n) / bin_error(f, 4 * n);
            prop_assert!((ratio - 2.0).abs() < 1e-12);
        }
    }
}
