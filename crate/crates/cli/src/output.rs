//! CSV and JSON writers.
//!
//! CSV files open with a block of `# key: value` lines, followed by the
//! scenario in TOML (each line prefixed with `# | `) and a header row.
//! Numbers use Rust's locale-free formatting, so the decimal separator is
//! always `.`, and every row ends with `\n`.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

use toa_core::scenario::{format_number, FigureId, Scenario};
use toa_core::stats::DiscriminationReport;
use toa_core::toa::ToaCurve;
use toa_core::units::UnitMode;

use crate::{invalid, CliResult};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Ordered metadata plus the scenario needed to rerun the computation.
pub struct Meta {
    entries: Vec<(String, String)>,
    scenario_toml: String,
}

impl Meta {
    pub fn for_scenario(command: &str, s: &Scenario, preset: Option<FigureId>) -> toa_core::Result<Self> {
        let u = &s.units;
        let units = match u.mode {
            UnitMode::Natural => "natural (hbar = m = 1; lengths l0, times t0)".to_string(),
            UnitMode::SI => format!("si (hbar = {} J s, m = {} kg; metres, seconds)", format_number(u.hbar), format_number(u.mass)),
        };
        let g = s.grid;
        let mut m = Meta {
            entries: Vec::new(),
            scenario_toml: s.to_toml()?,
        };
        m.push("generator", format!("toa {}", env!("CARGO_PKG_VERSION")));
        m.push("command", command.into());
        m.push("preset", preset.map_or("none", |p| p.as_str()).into());
        m.push("scenario", s.name.clone());
        m.push("units", units);
        m.push("normalization", s.normalization.as_str().into());
        m.push(
            "grid",
            format!("{}:{}:{}", format_number(g.t_start), format_number(g.t_end), g.n_points),
        );
        m.push("clock_period", format_number(s.clock_period()));
        m.push("detector_position", format_number(s.detector_position));
        if let Some(w) = s.bin_width {
            m.push("recommended_bin_width", format_number(w));
        }
        Ok(m)
    }

    pub fn push(&mut self, key: &str, value: String) {
        self.entries.push((key.to_string(), value));
    }

    pub fn curve(&mut self, c: &ToaCurve) {
        self.curve_named(c.method.as_str(), c);
    }

    pub fn curve_named(&mut self, name: &str, c: &ToaCurve) {
        let n = &c.normalization;
        self.push(&format!("{name}.normalization_constant"), format_number(n.constant));
        let window = match n.window {
            Some(w) => format!("{}:{}", format_number(w.start), format_number(w.end)),
            None => "all".into(),
        };
        self.push(&format!("{name}.normalization_window"), window);
        self.push(&format!("{name}.negative_values"), c.negativity_flag.to_string());
    }

    fn write_csv_header(&self, out: &mut String) {
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str("# scenario_toml:\n");
        for line in self.scenario_toml.lines() {
            out.push_str(format!("# | {line}").trim_end());
            out.push('\n');
        }
    }

    fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        map.insert("scenario_toml".into(), Value::String(self.scenario_toml.clone()));
        Value::Object(map)
    }
}

pub struct Column {
    name: String,
    values: Vec<f64>,
}

impl Column {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Column {
            name: name.to_string(),
            values,
        }
    }
}

pub struct Table {
    meta: Meta,
    columns: Vec<Column>,
}

impl Table {
    pub fn new(meta: Meta, columns: Vec<Column>) -> Self {
        debug_assert!(columns.windows(2).all(|w| w[0].values.len() == w[1].values.len()));
        Table { meta, columns }
    }

    fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => {
                let mut out = String::new();
                self.meta.write_csv_header(&mut out);
                let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
                out.push_str(&names.join(","));
                out.push('\n');
                let rows = self.columns.first().map_or(0, |c| c.values.len());
                for i in 0..rows {
                    let row: Vec<String> = self.columns.iter().map(|c| format_number(c.values[i])).collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                Ok(out)
            }
            Format::Json => {
                let columns: Vec<Value> = self
                    .columns
                    .iter()
                    .map(|c| json!({ "name": c.name, "values": c.values }))
                    .collect();
                to_json_text(&json!({ "meta": self.meta.to_json(), "columns": columns }))
            }
        }
    }

    pub fn write(&self, path: Option<&Path>, format: Format) -> CliResult<()> {
        emit(&self.render(format)?, path)
    }
}

fn to_json_text(v: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| invalid(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| invalid(format!("cannot write to standard output: {e}"))),
    }
}

/// Discrimination reports: `quantity,value` rows in CSV, the full report
/// object in JSON.
pub fn write_report(meta: &Meta, r: &DiscriminationReport, path: Option<&Path>, format: Format) -> CliResult<()> {
    let text = match format {
        Format::Json => to_json_text(&json!({ "meta": meta.to_json(), "report": r }))?,
        Format::Csv => {
            let mut out = String::new();
            meta.write_csv_header(&mut out);
            let [m1, m2] = r.methods.map(|m| m.as_str());
            let mut rows = vec![
                ("bin_start".to_string(), format_number(r.bin.start)),
                ("bin_end".to_string(), format_number(r.bin.end)),
                (format!("f_{m1}"), format_number(r.f_k[0])),
                (format!("f_{m2}"), format_number(r.f_k[1])),
                ("D".to_string(), format_number(r.d)),
                ("n_s_min".to_string(), r.n_s_min.to_string()),
                (format!("epsilon_{m1}"), format_number(r.epsilon_k[0])),
                (format!("epsilon_{m2}"), format_number(r.epsilon_k[1])),
            ];
            if let Some(p) = &r.power {
                rows.extend([
                    ("power_source".to_string(), p.source.as_str().to_string()),
                    ("power_candidate".to_string(), p.candidate.as_str().to_string()),
                    ("power_samples".to_string(), p.n_samples.to_string()),
                    ("power_seeds".to_string(), p.seeds.len().to_string()),
                    ("power_first_seed".to_string(), p.seeds[0].to_string()),
                    ("power_bins".to_string(), p.n_bins.to_string()),
                    ("power_alpha".to_string(), format_number(p.alpha)),
                    ("power_rejections".to_string(), p.rejections.to_string()),
                    ("power_rejection_rate".to_string(), format_number(p.rejection_rate)),
                ]);
            }
            out.push_str("quantity,value\n");
            for (k, v) in rows {
                out.push_str(&format!("{k},{v}\n"));
            }
            out
        }
    };
    emit(&text, path)
}
