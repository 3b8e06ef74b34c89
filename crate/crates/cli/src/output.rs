//! On-disk artifacts. Every CSV starts with a `# schema` line; JSON files
//! carry a `schema` field. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use idpath::SamplePath;
use serde::Serialize;

use crate::config::Format;

pub const PATHS_SCHEMA: &str = "idpath-paths/1";
pub const SUMMARY_SCHEMA: &str = "idpath-summary/1";
pub const RUN_SCHEMA: &str = "idpath-run/1";
pub const VALIDATION_SCHEMA: &str = "idpath-validate/1";
pub const ERROR_SCHEMA: &str = "idpath-error/1";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRow {
    pub path_id: usize,
    pub t: f64,
    pub dim: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: f64,
    pub dim: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single path.
    pub var: f64,
}

/// Per grid time and coordinate mean and variance, summed in path order.
pub fn summarize(paths: &[SamplePath]) -> Vec<SummaryRow> {
    let Some(first) = paths.first() else {
        return Vec::new();
    };
    let n = paths.len() as f64;
    let mut rows = Vec::new();
    for (j, &t) in first.grid.iter().enumerate() {
        for d in 0..first.dim() {
            let mean = paths.iter().map(|p| p.values[j][d]).sum::<f64>() / n;
            let ss = paths.iter().map(|p| (p.values[j][d] - mean).powi(2)).sum::<f64>();
            let var = if paths.len() > 1 { ss / (n - 1.0) } else { 0.0 };
            rows.push(SummaryRow { t, dim: d, mean, var });
        }
    }
    rows
}

fn rows(paths: &[SamplePath]) -> impl Iterator<Item = PathRow> + '_ {
    paths.iter().enumerate().flat_map(|(id, p)| {
        p.grid.iter().zip(&p.values).flat_map(move |(&t, v)| {
            v.iter().enumerate().map(move |(dim, &value)| PathRow {
                path_id: id,
                t,
                dim,
                value,
            })
        })
    })
}

#[derive(Serialize)]
struct Table<'a, R: Serialize> {
    schema: &'a str,
    rows: &'a [R],
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// `paths.csv` or `paths.json` in `dir`.
pub fn write_paths(dir: &Path, paths: &[SamplePath], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = BufWriter::new(File::create(dir.join("paths.csv"))?);
            writeln!(w, "# {PATHS_SCHEMA}")?;
            writeln!(w, "path_id,t,dim,value")?;
            for r in rows(paths) {
                writeln!(w, "{},{},{},{}", r.path_id, fmt_f64(r.t), r.dim, fmt_f64(r.value))?;
            }
            w.flush()
        }
        Format::Json => {
            let all: Vec<PathRow> = rows(paths).collect();
            write_json(
                &dir.join("paths.json"),
                &Table {
                    schema: PATHS_SCHEMA,
                    rows: &all,
                },
            )
        }
    }
}

/// `summary.csv` or `summary.json` in `dir`.
pub fn write_summary(dir: &Path, summary: &[SummaryRow], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = BufWriter::new(File::create(dir.join("summary.csv"))?);
            writeln!(w, "# {SUMMARY_SCHEMA}")?;
            writeln!(w, "t,dim,mean,var")?;
            for r in summary {
                writeln!(w, "{},{},{},{}", fmt_f64(r.t), r.dim, fmt_f64(r.mean), fmt_f64(r.var))?;
            }
            w.flush()
        }
        Format::Json => write_json(
            &dir.join("summary.json"),
            &Table {
                schema: SUMMARY_SCHEMA,
                rows: summary,
            },
        ),
    }
}

pub fn write_named_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> io::Result<()> {
    write_json(&dir.join(name), value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorArtifact<'a> {
    pub schema: &'a str,
    pub code: &'a str,
    pub message: &'a str,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    pub details: &'a [String],
}

/// Writes `error.json`, creating `dir` if needed.
pub fn write_error(dir: &Path, code: &str, message: &str, details: &[String]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_json(
        &dir.join("error.json"),
        &ErrorArtifact {
            schema: ERROR_SCHEMA,
            code,
            message,
            details,
        },
    )
}
