//! Output files: CSV tables and pretty JSON documents.
//!
//! Every float is written in its shortest form that parses back to the same
//! `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use phonon_tc_core::classical::ClassicalTrajectory;
use phonon_tc_core::master_eq::Trajectory;
use phonon_tc_core::observables::HusimiGrid;
use serde::Serialize;

use crate::failure::Failure;

/// Shortest round-trip text for `v`; exponent form outside [1e-4, 1e15).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<(), Failure>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let io = |e: csv::Error| Failure::io(path, e.into());
    let mut w = csv::Writer::from_writer(create(path)?);
    if !header.is_empty() {
        w.write_record(header).map_err(io)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|&v| num(v))).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

/// Header and numeric rows of a CSV file written by [`write_csv`].
pub fn read_csv(path: &Path, has_header: bool) -> Result<(Vec<String>, Vec<Vec<f64>>), Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(has_header).from_reader(file);
    let io = |e: csv::Error| Failure::io(path, e.into());
    let header = if has_header { r.headers().map_err(io)?.iter().map(String::from).collect() } else { Vec::new() };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Failure::Validation(format!("{}: bad number {s:?}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::io(path, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Failure::io(path, e))
}

/// `t_ms,Na[,rescaled_Na],purity,p0..pK`, with `rescaled_Na = (Ω₂/2π in MHz)²·N`.
pub fn write_trajectory(path: &Path, tr: &Trajectory, omega2_khz: Option<f64>) -> Result<(), Failure> {
    let k = tr.populations.first().map_or(0, Vec::len);
    let mut header = vec!["t_ms".to_string(), "Na".into()];
    if omega2_khz.is_some() {
        header.push("rescaled_Na".into());
    }
    header.push("purity".into());
    header.extend((0..k).map(|n| format!("p{n}")));
    let n = tr.real("N").ok_or_else(|| Failure::Validation("trajectory lacks the number operator".into()))?;
    let scale = omega2_khz.map(|w| (w / 1e3).powi(2));
    let rows = (0..tr.times.len()).map(|i| {
        let mut row = vec![tr.times[i], n[i]];
        if let Some(s) = scale {
            row.push(s * n[i]);
        }
        row.push(tr.purity[i]);
        if let Some(p) = tr.populations.get(i) {
            row.extend_from_slice(p);
        }
        row
    });
    write_csv(path, &header, rows)
}

/// `t_ms,re_alpha,im_alpha,abs2_alpha[,rescaled_abs2_alpha]`.
pub fn write_classical(path: &Path, tr: &ClassicalTrajectory, omega2_khz: Option<f64>) -> Result<(), Failure> {
    let mut header: Vec<String> = ["t_ms", "re_alpha", "im_alpha", "abs2_alpha"].iter().map(|s| s.to_string()).collect();
    if omega2_khz.is_some() {
        header.push("rescaled_abs2_alpha".into());
    }
    let scale = omega2_khz.map(|w| (w / 1e3).powi(2));
    let rows = tr.times.iter().zip(&tr.alphas).map(|(&t, a)| {
        let mut row = vec![t, a.re, a.im, a.norm_sqr()];
        if let Some(s) = scale {
            row.push(s * a.norm_sqr());
        }
        row
    });
    write_csv(path, &header, rows)
}

/// Headerless matrix: row `ip` holds Q(q_iq + i p_ip) for every `iq`.
pub fn write_husimi(path: &Path, grid: &HusimiGrid) -> Result<(), Failure> {
    let n = grid.spec.resolution;
    write_csv(path, &[], (0..n).map(|ip| (0..n).map(|iq| grid.at(iq, ip)).collect()))
}
