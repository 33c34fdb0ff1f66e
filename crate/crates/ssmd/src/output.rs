//! Summary tables on disk.
//!
//! The CSV has the header `k,mean_f_avg,stderr_f_avg,mean_f_iter,mean_f_min,bound`
//! and one row per evaluated `k`. Reals are written in the shortest form that
//! parses back to the same value, so a table can be read and re-written
//! byte for byte. For gnuplot, use `set datafile separator ','` and plot
//! columns 1:2 (with `1:2:3` for error bars) and 1:6 for the bound.
//!
//! Next to `name.csv` sits `name.meta`, a `key = value` file holding the
//! canonical configuration followed by the constants behind the bound.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::experiment::McSummary;

pub const HEADER: [&str; 6] = ["k", "mean_f_avg", "stderr_f_avg", "mean_f_iter", "mean_f_min", "bound"];

/// One CSV data row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub k: usize,
    pub mean_f_avg: f64,
    pub stderr_f_avg: f64,
    pub mean_f_iter: f64,
    pub mean_f_min: f64,
    pub bound: f64,
}

pub fn rows(summary: &McSummary) -> Vec<Row> {
    (0..summary.len())
        .map(|i| Row {
            k: summary.k[i],
            mean_f_avg: summary.mean_f_avg[i],
            stderr_f_avg: summary.stderr_f_avg[i],
            mean_f_iter: summary.mean_f_iter[i],
            mean_f_min: summary.mean_f_min[i],
            bound: summary.bound[i],
        })
        .collect()
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_table<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            real(r.mean_f_avg),
            real(r.stderr_f_avg),
            real(r.mean_f_iter),
            real(r.mean_f_min),
            real(r.bound),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(input);
    if reader.headers()?.iter().ne(HEADER) {
        return Err(HarnessError::Table(format!("unexpected header {:?}", reader.headers()?)));
    }
    let bad = |what: &str, v: &str| HarnessError::Table(format!("cannot parse {what} `{v}`"));
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut reals = [0.0; 5];
        for (slot, field) in reals.iter_mut().zip(record.iter().skip(1)) {
            *slot = field.parse().map_err(|_| bad("real", field))?;
        }
        out.push(Row {
            k: record[0].parse().map_err(|_| bad("k", &record[0]))?,
            mean_f_avg: reals[0],
            stderr_f_avg: reals[1],
            mean_f_iter: reals[2],
            mean_f_min: reals[3],
            bound: reals[4],
        });
    }
    Ok(out)
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

pub fn metadata_text(summary: &McSummary) -> String {
    let m = &summary.metadata;
    let c = &m.constants;
    let mut text = m.config_text.clone();
    let mut line = |k: &str, v: String| text.push_str(&format!("{k} = {v}\n"));
    line("config_hash", m.config_hash.clone());
    if let Some(a) = m.a {
        line("a_used", real(a));
    }
    line("f_ref", m.f_ref.map_or("none".into(), real));
    line("mu_f", real(c.mu_f));
    line("mu_w", real(c.mu_w));
    line("d_w_sq", c.d_w_sq.map_or("none".into(), real));
    line("c_est", real(c.c));
    line("nu_est", real(c.nu));
    line("c_tilde_sq", real(c.c_tilde_sq));
    line("objective", m.eval_samples.map_or("closed_form".into(), |n| format!("sampled:{n}")));
    text
}

/// Writes the summary table to `path` and its metadata beside it.
pub fn emit_csv(summary: &McSummary, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_table(&rows(summary), &mut buf)?;
    fs::write(path, buf).map_err(|e| HarnessError::io(path, e))?;
    let meta = meta_path(path);
    fs::write(&meta, metadata_text(summary)).map_err(|e| HarnessError::io(meta, e))
}
