//! Trajectory tables: one row per time step, written as CSV (with a leading
//! `# key=value ...` metadata comment) or JSON.

use std::io::Write;
use std::path::Path;

use hamel_core::{Layout, QuasiFrame, Trajectory};
use nalgebra::DVector;
use serde::Deserialize;

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Ordered `key=value` pairs describing the run.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Solver diagnostics; JSON output only.
    pub diagnostics: Option<serde_json::Value>,
}

/// Column names of a trajectory table: `t`, the configuration, the free
/// quasi-velocities (and their rates and jerks for dynamic problems), the
/// multipliers and, if present, the control forces. Indices are 1-based and
/// slot-numbered for the free blocks.
pub fn columns(layout: Layout, frame: &QuasiFrame, controls: bool) -> Vec<String> {
    let n = frame.n();
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    let free = |prefix: &str| frame.free().iter().map(move |i| format!("{prefix}{}", i + 1)).collect::<Vec<_>>();
    cols.extend(free("u"));
    if layout == Layout::DynamicOc {
        cols.extend(free("a"));
        cols.extend(free("j"));
    }
    if layout != Layout::Mechanics {
        cols.extend((1..=frame.m()).map(|a| format!("mu{a}")));
    }
    if controls {
        cols.extend(free("Q"));
    }
    cols
}

impl Table {
    pub fn from_trajectory(
        meta: Vec<(String, String)>,
        frame: &QuasiFrame,
        trajectory: &Trajectory,
        controls: Option<&[DVector<f64>]>,
    ) -> Self {
        let columns = columns(trajectory.layout, frame, controls.is_some());
        let rows = trajectory
            .times
            .iter()
            .zip(&trajectory.states)
            .enumerate()
            .map(|(k, (t, s))| {
                let mut row = Vec::with_capacity(columns.len());
                row.push(*t);
                row.extend(s.iter());
                if let Some(c) = controls {
                    row.extend(c[k].iter());
                }
                row
            })
            .collect();
        Table {
            meta,
            columns,
            rows,
            diagnostics: None,
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// The state columns as a trajectory; `frame` must match the one the
    /// table was written with.
    pub fn to_trajectory(&self, layout: Layout, frame: &QuasiFrame) -> Result<Trajectory, CliError> {
        let expected = columns(layout, frame, false);
        let width = expected.len();
        if self.columns.len() < width || self.columns[..width] != expected[..] {
            return Err(CliError::config(format!(
                "columns {} do not start with the {layout} layout columns {}",
                self.columns.join(","),
                expected.join(",")
            )));
        }
        let mut times = Vec::with_capacity(self.rows.len());
        let mut states = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            times.push(row[0]);
            states.push(DVector::from_column_slice(&row[1..width]));
        }
        Trajectory::new(layout, frame.n(), frame.m(), times, states).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        let io = |e: &dyn std::fmt::Display| CliError::io("writing table", e);
        match format {
            Format::Csv => {
                let meta: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(out, "# {}", meta.join(" ")).map_err(|e| io(&e))?;
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns).map_err(|e| io(&e))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|x| x.to_string())).map_err(|e| io(&e))?;
                }
                w.flush().map_err(|e| io(&e))
            }
            Format::Json => {
                let meta: serde_json::Map<String, serde_json::Value> = self
                    .meta
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                let doc = serde_json::json!({
                    "meta": meta,
                    "columns": self.columns,
                    "rows": self.rows,
                    "diagnostics": self.diagnostics,
                });
                serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| io(&e))?;
                writeln!(out).map_err(|e| io(&e))
            }
        }
    }

    pub fn save(&self, path: &Path, format: Format) -> Result<(), CliError> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path.display(), e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(format, &mut w)?;
        w.flush().map_err(|e| CliError::io(path.display(), e))
    }

    pub fn read(text: &str, format: Format) -> Result<Self, CliError> {
        match format {
            Format::Csv => read_csv(text),
            Format::Json => {
                #[derive(Deserialize)]
                struct Doc {
                    meta: serde_json::Map<String, serde_json::Value>,
                    columns: Vec<String>,
                    rows: Vec<Vec<f64>>,
                    #[serde(default)]
                    diagnostics: Option<serde_json::Value>,
                }
                let doc: Doc = serde_json::from_str(text).map_err(|e| CliError::config(format!("json table: {e}")))?;
                let meta = doc
                    .meta
                    .into_iter()
                    .map(|(k, v)| {
                        let v = match v {
                            serde_json::Value::String(s) => s,
                            other => other.to_string(),
                        };
                        (k, v)
                    })
                    .collect();
                let table = Table {
                    meta,
                    columns: doc.columns,
                    rows: doc.rows,
                    diagnostics: doc.diagnostics.filter(|d| !d.is_null()),
                };
                table.check_widths()?;
                Ok(table)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::read(&text, Format::infer(Some(path)))
    }

    fn check_widths(&self) -> Result<(), CliError> {
        match self.rows.iter().position(|r| r.len() != self.columns.len()) {
            Some(k) => Err(CliError::config(format!(
                "row {}: {} values, expected {}",
                k + 1,
                self.rows[k].len(),
                self.columns.len()
            ))),
            None => Ok(()),
        }
    }
}

fn read_csv(text: &str) -> Result<Table, CliError> {
    let mut meta = Vec::new();
    for line in text.lines() {
        let Some(body) = line.strip_prefix('#') else { break };
        for pair in body.split_whitespace() {
            let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
            meta.push((k.to_string(), v.to_string()));
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let bad = |e: csv::Error| CliError::config(format!("csv table: {e}"));
    let columns: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(bad)?;
        let row = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::config(format!("csv table row {}: `{s}` is not a number", k + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let table = Table {
        meta,
        columns,
        rows,
        diagnostics: None,
    };
    table.check_widths()?;
    Ok(table)
}
