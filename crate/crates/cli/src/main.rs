//! `toa`: figure data, distribution tables, discrimination reports and
//! synthetic clicks on the command line.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toa_core::scenario::{fig6_state, format_number, make_scenario_preset, FigureId, NormalizationPolicy, Scenario, FIG6_DELTA_P};
use toa_core::stats::{discriminate, sample_clicks, PowerConfig};
use toa_core::toa::{Evaluator, Method, ToaCurve};
use toa_core::units::{Interval, TimeGrid};
use toa_core::ToaError;

use output::{Column, Format, Meta, Table};

#[derive(Parser, Debug)]
#[command(name = "toa", version, about = "Quantum time-of-arrival distributions for Gaussian wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate one or more distributions on a grid.
    Compute(ComputeArgs),
    /// Emit the dataset behind one of the preset figures.
    Figure(FigureArgs),
    /// Bin separation and sample-size bound for two methods.
    Discriminate(DiscriminateArgs),
    /// Draw synthetic detector clicks from a distribution.
    Sample(SampleArgs),
    /// Clock and flux normalization as a function of the period T.
    Normscan(NormscanArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Preset id (fig2 ... fig8b).
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario file in TOML.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Time grid as start:end:points.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<TimeGrid>,
    #[arg(long, value_enum)]
    normalization: Option<NormArg>,
    /// Clock regularization period.
    #[arg(long = "T")]
    period: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated methods: kijowski, leavens, flux, semiclassical, clock.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    /// Figure id (fig2 ... fig8b).
    figure: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct DiscriminateArgs {
    #[command(flatten)]
    common: Common,
    /// The two methods to compare.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Bin as start:end.
    #[arg(long, value_parser = parse_interval)]
    bin: Interval,
    /// Number of seeds in the chi-square power study; 0 skips it.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    /// First seed of the power study.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Clicks per simulated experiment.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Histogram bin width of the chi-square test; the scenario's own when absent.
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Source distribution.
    #[arg(long, default_value = "clock")]
    methods: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct NormscanArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated periods; the grid is used as the sweep otherwise.
    #[arg(long, value_delimiter = ',')]
    periods: Vec<f64>,
    /// Space the grid sweep logarithmically.
    #[arg(long)]
    log: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormArg {
    Full,
    Plot,
    None,
}

impl From<NormArg> for NormalizationPolicy {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Full => NormalizationPolicy::FullWindow,
            NormArg::Plot => NormalizationPolicy::PlotInterval,
            NormArg::None => NormalizationPolicy::Unnormalized,
        }
    }
}

fn parse_grid(s: &str) -> Result<TimeGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:end:points".into());
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("grid start: {e}"))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("grid end: {e}"))?;
    let n: usize = parts[2].trim().parse().map_err(|e| format!("grid points: {e}"))?;
    TimeGrid::new(a, b, n).map_err(|e| e.to_string())
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s.split_once(':').ok_or("expected start:end")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bin start: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bin end: {e}"))?;
    Interval::new(a, b).map_err(|e| e.to_string())
}

/// Failure carrying the context needed for the diagnostic line.
struct Failure {
    context: String,
    error: ToaError,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self.error {
            ToaError::InvalidInput(_) | ToaError::UnknownPreset(_) | ToaError::UnitMismatch(_) => 2,
            ToaError::FluxInapplicable(_)
            | ToaError::TrajectoryInterpretationRequired(_)
            | ToaError::UnsupportedState { .. }
            | ToaError::VanishingNormalization { .. }
            | ToaError::WrongMethod { .. } => 3,
            ToaError::NonConvergence { .. } | ToaError::WindowTooSmall { .. } => 4,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

trait Context<T> {
    fn ctx(self, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for toa_core::Result<T> {
    fn ctx(self, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|error| Failure {
            context: context(),
            error,
        })
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure {
        context: "toa".into(),
        error: ToaError::InvalidInput(msg.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.context, f.error);
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let ev = Evaluator::default();
    match cli.command {
        Command::Compute(a) => compute(&ev, a),
        Command::Figure(a) => figure(&ev, a),
        Command::Discriminate(a) => cmd_discriminate(&ev, a),
        Command::Sample(a) => cmd_sample(&ev, a),
        Command::Normscan(a) => normscan(&ev, a),
    }
}

fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    if names.is_empty() {
        return Err(invalid("at least one method is required"));
    }
    names
        .iter()
        .map(|n| n.trim().parse::<Method>().ctx(|| format!("method `{n}`")))
        .collect()
}

/// Scenario from `--preset` or `--scenario`, with the command-line overrides
/// applied. Returns the preset id when there is one.
fn load_scenario(c: &Common) -> CliResult<(Scenario, Option<FigureId>)> {
    let (mut s, preset) = match (&c.preset, &c.scenario) {
        (Some(p), None) => {
            let id: FigureId = p.parse().ctx(|| "preset".into())?;
            (make_scenario_preset(id).ctx(|| format!("preset {p}"))?, Some(id))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let s = Scenario::from_toml(&text).ctx(|| format!("scenario file {}", path.display()))?;
            (s, None)
        }
        _ => return Err(invalid("exactly one of --preset and --scenario is required")),
    };
    let name = s.name.clone();
    // the period first, so that a wider grid can still be covered by it
    if let Some(t) = c.period {
        s = s.with_clock_period(t).ctx(|| format!("scenario {name}"))?;
    }
    if let Some(n) = c.normalization {
        s.normalization = n.into();
    }
    if let Some(g) = c.grid {
        s.grid = g;
        if c.period.is_none() && s.normalization == NormalizationPolicy::FullWindow {
            let needed = 2.0 * g.t_start.abs().max(g.t_end.abs());
            if needed > s.clock_period() {
                s = s.with_clock_period(needed).ctx(|| format!("scenario {name}"))?;
            }
        }
    }
    s.validate().ctx(|| format!("scenario {name}"))?;
    Ok((s, preset))
}

fn evaluate(ev: &Evaluator, s: &Scenario, m: Method) -> CliResult<ToaCurve> {
    ev.evaluate(s, m).ctx(|| format!("scenario {}, method {}", s.name, m.as_str()))
}

fn curve_table(command: &str, s: &Scenario, preset: Option<FigureId>, curves: &[ToaCurve]) -> CliResult<Table> {
    let mut meta = Meta::for_scenario(command, s, preset).ctx(|| format!("scenario {}", s.name))?;
    for c in curves {
        meta.curve(c);
    }
    let mut columns = vec![Column::new("t", s.grid.points())];
    columns.extend(curves.iter().map(|c| Column::new(c.method.as_str(), c.values.clone())));
    Ok(Table::new(meta, columns))
}

fn compute(ev: &Evaluator, a: ComputeArgs) -> CliResult<()> {
    let methods = parse_methods(&a.methods)?;
    let (s, preset) = load_scenario(&a.common)?;
    let curves = methods
        .iter()
        .map(|m| evaluate(ev, &s, *m))
        .collect::<CliResult<Vec<_>>>()?;
    curve_table("compute", &s, preset, &curves)?.write(a.common.out.as_deref(), a.common.format)
}

/// Methods plotted in each figure.
fn figure_methods(id: FigureId) -> &'static [Method] {
    use Method::*;
    match id {
        FigureId::Fig2 => &[],
        FigureId::Fig3 => &[KijowskiMomentum, Flux, QuantumClock, Semiclassical],
        FigureId::Fig4 | FigureId::Fig5 => &[KijowskiMomentum, Flux, QuantumClock],
        FigureId::Fig6 => &[QuantumClock],
        FigureId::Fig7 | FigureId::Fig8a | FigureId::Fig8b => &[KijowskiMomentum, QuantumClock],
    }
}

fn figure(ev: &Evaluator, a: FigureArgs) -> CliResult<()> {
    let id: FigureId = a.figure.parse().ctx(|| "figure".into())?;
    let s = make_scenario_preset(id).ctx(|| format!("preset {}", id.as_str()))?;
    let table = match id {
        FigureId::Fig2 => {
            let periods = s.grid.points();
            let rows = ev.normscan(&s, &periods).ctx(|| "scenario fig2, normscan".into())?;
            normscan_table("figure", &s, Some(id), &rows)?
        }
        FigureId::Fig6 => {
            let mut meta = Meta::for_scenario("figure", &s, Some(id)).ctx(|| "scenario fig6".into())?;
            meta.push("delta_p_sweep", format_list(&FIG6_DELTA_P));
            let mut columns = vec![Column::new("t", s.grid.points())];
            for dp in FIG6_DELTA_P {
                let state = fig6_state(dp).ctx(|| format!("fig6 delta_p {dp}"))?;
                let sd = Scenario::new(format!("fig6_dp{dp}"), state, s.grid).ctx(|| format!("fig6 delta_p {dp}"))?;
                let c = evaluate(ev, &sd, Method::QuantumClock)?;
                meta.curve_named(&format!("clock_dp{dp}"), &c);
                columns.push(Column::new(&format!("clock_dp{dp}"), c.values));
            }
            Table::new(meta, columns)
        }
        _ => {
            let curves = figure_methods(id)
                .iter()
                .map(|m| evaluate(ev, &s, *m))
                .collect::<CliResult<Vec<_>>>()?;
            curve_table("figure", &s, Some(id), &curves)?
        }
    };
    table.write(a.out.as_deref(), a.format)
}

fn cmd_discriminate(ev: &Evaluator, a: DiscriminateArgs) -> CliResult<()> {
    let methods = parse_methods(&a.methods)?;
    if methods.len() != 2 {
        return Err(invalid("discriminate needs exactly two methods"));
    }
    let (s, preset) = load_scenario(&a.common)?;
    let power = if a.seeds == 0 {
        None
    } else {
        let bin_width = a.bin_width.or(s.bin_width).unwrap_or((s.grid.t_end - s.grid.t_start) / 20.0);
        Some(PowerConfig {
            n_samples: a.samples,
            n_seeds: a.seeds,
            first_seed: a.seed,
            bin_width,
            alpha: a.alpha,
        })
    };
    let pair = [methods[0], methods[1]];
    let report = discriminate(ev, &s, pair, a.bin, power)
        .ctx(|| format!("scenario {}, methods {},{}", s.name, pair[0].as_str(), pair[1].as_str()))?;
    let meta = Meta::for_scenario("discriminate", &s, preset).ctx(|| format!("scenario {}", s.name))?;
    output::write_report(&meta, &report, a.common.out.as_deref(), a.common.format)
}

fn cmd_sample(ev: &Evaluator, a: SampleArgs) -> CliResult<()> {
    let m = parse_methods(std::slice::from_ref(&a.methods))?[0];
    let (s, preset) = load_scenario(&a.common)?;
    let curve = evaluate(ev, &s, m)?;
    let clicks =
        sample_clicks(&curve, a.n, a.seed).ctx(|| format!("scenario {}, method {}", s.name, m.as_str()))?;
    let mut meta = Meta::for_scenario("sample", &s, preset).ctx(|| format!("scenario {}", s.name))?;
    meta.curve(&curve);
    meta.push("seed", a.seed.to_string());
    meta.push("rng", "ChaCha8Rng::seed_from_u64, one f64 in [0, 1) per click".into());
    meta.push("clicks", a.n.to_string());
    Table::new(meta, vec![Column::new("click_time", clicks.times)]).write(a.common.out.as_deref(), a.common.format)
}

fn normscan_table(
    command: &str,
    s: &Scenario,
    preset: Option<FigureId>,
    rows: &[toa_core::toa::NormScanRow],
) -> CliResult<Table> {
    let meta = Meta::for_scenario(command, s, preset).ctx(|| format!("scenario {}", s.name))?;
    let mut columns = vec![
        Column::new("T", rows.iter().map(|r| r.period).collect()),
        Column::new("n_clock", rows.iter().map(|r| r.n_clock).collect()),
    ];
    if rows.iter().all(|r| r.n_flux.is_some()) {
        columns.push(Column::new("n_flux", rows.iter().filter_map(|r| r.n_flux).collect()));
    }
    Ok(Table::new(meta, columns))
}

fn normscan(ev: &Evaluator, a: NormscanArgs) -> CliResult<()> {
    let (s, preset) = load_scenario(&a.common)?;
    let periods = if !a.periods.is_empty() {
        a.periods.clone()
    } else if a.log {
        let g = s.grid;
        if !(g.t_start > 0.0) {
            return Err(invalid("a logarithmic sweep needs a positive grid start"));
        }
        let lg = TimeGrid::new(g.t_start.ln(), g.t_end.ln(), g.n_points).ctx(|| "grid".into())?;
        lg.points().into_iter().map(f64::exp).collect()
    } else {
        s.grid.points()
    };
    let rows = ev.normscan(&s, &periods).ctx(|| format!("scenario {}, normscan", s.name))?;
    normscan_table("normscan", &s, preset, &rows)?.write(a.common.out.as_deref(), a.common.format)
}

fn format_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(",")
}
