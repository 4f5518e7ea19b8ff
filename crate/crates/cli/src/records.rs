//! Output rows. Every file is written through `csv` or `serde_json`, both of
//! which print floats in shortest round-trip form.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use jostline::smatrix::ScatteringSet;
use jostline::transition::TransitionSet;
use jostline::{CMat, Medium, Side};
use serde::Serialize;

use crate::Format;

#[derive(Serialize)]
pub struct TransitionRow {
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
    pub method: &'static str,
}

#[derive(Serialize)]
pub struct MatrixRow {
    pub lambda: f64,
    pub block: &'static str,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
    pub method: &'static str,
}

#[derive(Serialize)]
pub struct ResidualRow {
    pub lambda: f64,
    pub check_name: String,
    pub residual: f64,
}

#[derive(Serialize)]
pub struct CheckRow {
    pub lambda: f64,
    pub check_name: String,
    pub residual: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct ChannelRow {
    pub side: Side,
    pub channel: usize,
    pub threshold: f64,
    pub open: bool,
    pub re_k: f64,
    pub im_k: f64,
}

/// One sweep node; `transmission[j]` and `reflection[j]` are the dressed
/// probabilities for a wave incident from the left in channel `j`, summed
/// over the open outgoing channels, and are absent when `j` is closed.
#[derive(Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub transmission: Vec<Option<f64>>,
    pub reflection: Vec<Option<f64>>,
    pub unitarity: f64,
}

fn entries<F: FnMut(&'static str, usize, usize, f64, f64)>(mats: &[(&'static str, &CMat<f64>)], mut f: F) {
    for (name, m) in mats {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                f(name, i, j, m[(i, j)].re, m[(i, j)].im);
            }
        }
    }
}

pub fn transition_rows(ts: &TransitionSet<f64>, method: &'static str) -> Vec<TransitionRow> {
    let mut out = Vec::new();
    entries(&ts.matrices(), |matrix, row, col, re, im| {
        out.push(TransitionRow {
            matrix,
            row,
            col,
            re,
            im,
            method,
        })
    });
    out
}

pub fn matrix_rows(ss: &ScatteringSet<f64>, method: &'static str) -> Vec<MatrixRow> {
    let lambda = ss.point.lambda.re;
    let mats = [
        ("t1", &ss.t1),
        ("r1", &ss.r1),
        ("t2", &ss.t2),
        ("r2", &ss.r2),
        ("t1_tilde", &ss.t1_tilde),
        ("r1_tilde", &ss.r1_tilde),
        ("t2_tilde", &ss.t2_tilde),
        ("r2_tilde", &ss.r2_tilde),
    ];
    let mut out = Vec::new();
    entries(&mats, |block, row, col, re, im| {
        out.push(MatrixRow {
            lambda,
            block,
            row,
            col,
            re,
            im,
            method,
        })
    });
    out
}

pub fn channel_rows(medium: &Medium<f64>, ss: &ScatteringSet<f64>) -> Vec<ChannelRow> {
    let mut out = Vec::new();
    for (side, k) in [(Side::Left, &ss.momenta.left), (Side::Right, &ss.momenta.right)] {
        for (s, th) in medium.basis(side).thresholds.iter().enumerate() {
            let open = ss
                .classification
                .as_ref()
                .map(|c| !c.is_closed(side, s))
                .unwrap_or(false);
            out.push(ChannelRow {
                side,
                channel: s,
                threshold: *th,
                open,
                re_k: k[s].re,
                im_k: k[s].im,
            });
        }
    }
    out
}

/// Writes rows as `<stem>.csv` or `<stem>.json` depending on the format.
pub fn write_rows<R: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[R]) -> Result<()> {
    match format {
        Format::Csv => write_csv(&dir.join(format!("{stem}.csv")), rows),
        Format::Json => write_json(&dir.join(format!("{stem}.json")), &rows),
    }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
