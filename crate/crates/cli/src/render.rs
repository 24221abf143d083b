//! Report documents and their JSON, CSV and plot-CSV renderings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::commands::{Report, RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Serialize)]
pub struct Document<'a> {
    pub schema_version: u32,
    pub generator: String,
    pub kind: &'static str,
    pub config: &'a RunConfig,
    pub report: &'a Report,
}

impl<'a> Document<'a> {
    pub fn new(config: &'a RunConfig, report: &'a Report) -> Self {
        Document {
            schema_version: SCHEMA_VERSION,
            generator: format!("geo {}", env!("CARGO_PKG_VERSION")),
            kind: report.kind(),
            config,
            report,
        }
    }
}

/// Header row plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// One-line description of the columns.
    pub description: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "NaN".into())
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn log10_cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v > 0.0 => num(v.log10()),
        _ => String::new(),
    }
}

/// Plot-ready table for the sweep-like report kinds.
pub fn emit_plot_data(report: &Report) -> CliResult<Table> {
    match report {
        Report::Gap(g) => Ok(Table {
            description: "n = copies; gap, f_col, f_seq = exact rationals as decimals".into(),
            columns: vec!["n".into(), "gap".into(), "f_col".into(), "f_seq".into()],
            rows: g
                .rows
                .iter()
                .map(|r| {
                    let d = geotax_core::gap::rational_to_f64;
                    vec![r.n_copies.to_string(), num(d(&r.gap)), num(d(&r.f_col)), num(d(&r.f_seq))]
                })
                .collect(),
        }),
        Report::Convergence(c) => Ok(Table {
            description: "log10 of step and of relative max-component errors; empty cells are exact zeros".into(),
            columns: vec!["log10_h".into(), "log10_metric_error".into(), "log10_cubic_error".into()],
            rows: c
                .rows
                .iter()
                .map(|r| vec![num(r.h.log10()), log10_cell(r.metric_error), log10_cell(r.cubic_error)])
                .collect(),
        }),
        Report::TriangleSweep(s) => Ok(Table {
            description: "skew-normal shape against mean of (1/3)Σx³ and its standard error".into(),
            columns: vec!["shape".into(), "mean_cubic_contribution".into(), "std_error".into()],
            rows: s
                .points
                .iter()
                .map(|p| {
                    let c = p.report.cubic_contribution;
                    vec![num(p.shape), num(c.mean), num(c.std_error)]
                })
                .collect(),
        }),
        other => Err(CliError::UnsupportedReportKind(other.kind().into())),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push(vec![prefix.into(), s.clone()]),
        Value::Null => out.push(vec![prefix.into(), String::new()]),
        other => out.push(vec![prefix.into(), other.to_string()]),
    }
}

/// CSV table: natural rows for the tabular kinds, `field,value` pairs for
/// the rest.
pub fn csv_table(report: &Report) -> CliResult<Table> {
    match report {
        Report::Gap(g) => Ok(Table {
            description: "exact rationals as p/q with decimal companions".into(),
            columns: ["n", "spin", "f_col", "f_seq", "gap", "gap_decimal", "special_cased"]
                .map(String::from)
                .to_vec(),
            rows: g
                .rows
                .iter()
                .map(|r| {
                    let f = geotax_core::gap::format_rational;
                    vec![
                        r.n_copies.to_string(),
                        f(&r.spin),
                        f(&r.f_col),
                        f(&r.f_seq),
                        f(&r.gap),
                        num(geotax_core::gap::rational_to_f64(&r.gap)),
                        r.special_cased.to_string(),
                    ]
                })
                .collect(),
        }),
        Report::Convergence(c) => Ok(Table {
            description: "relative max-component error against the closed-form oracles".into(),
            columns: vec!["h".into(), "metric_error".into(), "cubic_error".into()],
            rows: c
                .rows
                .iter()
                .map(|r| vec![num(r.h), opt(r.metric_error), opt(r.cubic_error)])
                .collect(),
        }),
        Report::TriangleSweep(s) => Ok(Table {
            description: "per-shape means and standard errors of the net log-return statistics".into(),
            columns: [
                "shape",
                "exact_mean",
                "exact_se",
                "quadratic_mean",
                "quadratic_se",
                "cubic_mean",
                "cubic_se",
                "cubic_contribution_mean",
                "cubic_contribution_se",
                "leg_skewness",
            ]
            .map(String::from)
            .to_vec(),
            rows: s
                .points
                .iter()
                .map(|p| {
                    let r = &p.report;
                    vec![
                        num(p.shape),
                        num(r.exact.mean),
                        num(r.exact.std_error),
                        num(r.quadratic_truncation.mean),
                        num(r.quadratic_truncation.std_error),
                        num(r.cubic_truncation.mean),
                        num(r.cubic_truncation.std_error),
                        num(r.cubic_contribution.mean),
                        num(r.cubic_contribution.std_error),
                        num(r.per_leg[0].skewness),
                    ]
                })
                .collect(),
        }),
        other => {
            let v = serde_json::to_value(other).map_err(|source| CliError::Json {
                context: "serializing report".into(),
                source,
            })?;
            let mut rows = Vec::new();
            flatten("", &v, &mut rows);
            Ok(Table {
                description: "report fields flattened to dotted paths".into(),
                columns: vec!["field".into(), "value".into()],
                rows,
            })
        }
    }
}

fn write_table(doc: &Document<'_>, table: &Table) -> CliResult<String> {
    let config = serde_json::to_string(doc.config).map_err(|source| CliError::Json {
        context: "serializing config".into(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        context: "buffering csv".into(),
        source: e.into_error(),
    })?;
    let body = String::from_utf8(bytes).expect("csv output is utf-8");
    Ok(format!(
        "# geo {} schema_version={} kind={}\n# columns: {}\n{CONFIG_PREFIX}{config}\n{body}",
        env!("CARGO_PKG_VERSION"),
        doc.schema_version,
        doc.kind,
        table.description,
    ))
}

/// Renders the document in the configured format.
pub fn render(doc: &Document<'_>) -> CliResult<String> {
    match doc.config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).map_err(|source| CliError::Json {
                context: "serializing report".into(),
                source,
            })?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => write_table(doc, &csv_table(doc.report)?),
        Format::PlotCsv => write_table(doc, &emit_plot_data(doc.report)?),
    }
}

/// Extracts the embedded config from a JSON or CSV report.
pub fn config_from_report(text: &str) -> CliResult<RunConfig> {
    let json_err = |source| CliError::Json {
        context: "reading embedded config".into(),
        source,
    };
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(json_err)?;
        let cfg = v
            .get("config")
            .ok_or_else(|| CliError::Usage("report has no config block".into()))?;
        return serde_json::from_value(cfg.clone()).map_err(json_err);
    }
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix(CONFIG_PREFIX))
        .ok_or_else(|| CliError::Usage("report has no config line".into()))?;
    serde_json::from_str(line).map_err(json_err)
}

/// Writes `content` to `path` via a temporary file in the same directory
/// and a rename.
pub fn write_atomic(path: &str, content: &str) -> CliResult<()> {
    let io = |context: String| move |source| CliError::Io { context, source };
    let target = Path::new(path);
    let dir = match target.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(format!("creating temporary file in {}", dir.display())))?;
    tmp.write_all(content.as_bytes()).map_err(io(format!("writing {path}")))?;
    tmp.as_file().sync_all().map_err(io(format!("syncing {path}")))?;
    tmp.persist(target).map_err(|e| CliError::Io {
        context: format!("renaming into {path}"),
        source: e.error,
    })?;
    Ok(())
}
