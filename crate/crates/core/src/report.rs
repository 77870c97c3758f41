//! Tidy CSV rendering of reports: one row per metric.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analytic::EstimateReport;
use crate::error::{Error, Result};
use crate::metrics::{ErrorReport, Method};
use crate::montecarlo::MonteCarloReport;
use crate::multiplier::MultiplierConfig;

pub const CSV_HEADER: [&str; 8] = ["n", "t", "fix", "method", "metric", "value", "samples", "seed"];

/// Integers print exactly; everything else with 17 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// The `fix` column: `true`, `false`, or `accurate` for an unsplit chain.
pub fn fix_label(cfg: &MultiplierConfig) -> &'static str {
    match (cfg.segmented, cfg.fix_to_1) {
        (false, _) => "accurate",
        (true, true) => "true",
        (true, false) => "false",
    }
}

fn parse_fix(label: &str, n: u32, t: u32) -> Result<MultiplierConfig> {
    match label {
        "true" => MultiplierConfig::new(n, t, true),
        "false" => MultiplierConfig::new(n, t, false),
        "accurate" => MultiplierConfig::degenerate(n, t),
        other => Err(Error::Sweep(format!("unknown fix label {other:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub n: u32,
    pub t: u32,
    pub fix: String,
    pub method: String,
    pub metric: String,
    pub value: String,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

struct RowBuilder<'a> {
    cfg: &'a MultiplierConfig,
    method: Method,
    samples: Option<u64>,
    seed: Option<u64>,
    rows: Vec<Row>,
}

impl RowBuilder<'_> {
    fn push(&mut self, metric: impl Into<String>, value: String) {
        self.rows.push(Row {
            n: self.cfg.n,
            t: self.cfg.t,
            fix: fix_label(self.cfg).into(),
            method: self.method.as_str().into(),
            metric: metric.into(),
            value,
            samples: self.samples,
            seed: self.seed,
        });
    }

    fn num(&mut self, metric: impl Into<String>, v: f64) {
        self.push(metric, format_value(v));
    }
}

fn builder(cfg: &MultiplierConfig, method: Method, samples: Option<u64>, seed: Option<u64>) -> RowBuilder<'_> {
    RowBuilder { cfg, method, samples, seed, rows: Vec::new() }
}

pub fn error_report_rows(r: &ErrorReport) -> Vec<Row> {
    let mut b = builder(&r.config, r.method, Some(r.sample_count), r.seed);
    b.num("er", r.er);
    b.push("mae", r.mae.to_string());
    b.num("med_signed", r.med_signed);
    b.num("med_abs", r.med_abs);
    b.num("nmed", r.nmed);
    b.num("mred_conventional", r.mred_conventional);
    b.num("mred_global", r.mred_global);
    for (i, &p) in r.ber.iter().enumerate() {
        b.num(format!("ber_{i}"), p);
    }
    b.rows
}

pub fn monte_carlo_rows(r: &MonteCarloReport) -> Vec<Row> {
    let mut rows = error_report_rows(&r.report);
    let mut b = builder(&r.report.config, r.report.method, Some(r.report.sample_count), r.report.seed);
    for (name, iv) in [
        ("er", &r.er_interval),
        ("med_abs", &r.med_abs_interval),
        ("mred_conventional", &r.mred_conventional_interval),
    ] {
        b.num(format!("{name}_std_error"), iv.std_error);
        b.num(format!("{name}_lower"), iv.lower);
        b.num(format!("{name}_upper"), iv.upper);
    }
    b.push("sample_max_abs_ed", r.sample_max_abs_ed.to_string());
    rows.extend(b.rows);
    rows
}

pub fn estimate_rows(r: &EstimateReport) -> Vec<Row> {
    let mut b = builder(&r.config, r.method, None, None);
    b.num("er", r.er);
    if let Some(mae) = r.mae {
        b.push("mae", mae.to_string());
    }
    b.num("max_error_probability", r.max_error_probability);
    b.num("msp_event", r.msp_event);
    for &(bit, p) in &r.lsb_events {
        b.num(format!("lsb_event_{bit}"), p);
    }
    for (j, &p) in r.accumulation_er.iter().enumerate() {
        b.num(format!("accumulation_er_{j}"), p);
    }
    b.num("depth", r.depth as f64);
    b.rows
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Sweep(format!(
            "unexpected header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Sweep(format!("CSV: {e}"))
    }
}

/// Configuration named by a row.
pub fn row_config(row: &Row) -> Result<MultiplierConfig> {
    parse_fix(&row.fix, row.n, row.t)
}
