//! CSV and manifest writers. Floats use 17 significant digits; lines end in `\n`.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use crate::certificate::CertificateRow;
use crate::error::RunError;
use crate::spec::ExperimentSpec;
use crate::sweep::{Cell, SweepResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn axis_header(out: &mut String, name: &str, dims: usize) {
    for k in 1..=dims {
        write!(out, ",{name}_{k}").unwrap();
    }
}

fn cell_key(out: &mut String, sweep: &SweepResult, cell: &Cell, dims: usize) {
    let sc = &sweep.scenarios[cell.scenario];
    write!(out, "{},{}", cell.method, sc.grid_index).unwrap();
    for n in sc.grid.points_per_axis() {
        write!(out, ",{n}").unwrap();
    }
    for o in &sc.offsets {
        write!(out, ",{}", fmt_f64(*o)).unwrap();
    }
    write!(out, ",{}", fmt_f64(cell.lambda)).unwrap();
    for k in 0..dims {
        write!(out, ",{}", fmt_opt(cell.tau.as_ref().map(|t| t[k]))).unwrap();
    }
}

/// One row per `(cell, draw)`.
pub fn curves_csv(sweep: &SweepResult, dims: usize) -> String {
    let mut out = String::from("method,grid");
    axis_header(&mut out, "n", dims);
    axis_header(&mut out, "offset", dims);
    out.push_str(",lambda");
    axis_header(&mut out, "tau", dims);
    out.push_str(",draw,mmd,support_size,converged\n");
    for cell in &sweep.cells {
        for d in &cell.draws {
            cell_key(&mut out, sweep, cell, dims);
            writeln!(out, ",{},{},{},{}", d.draw, fmt_f64(d.mmd), d.support_size, d.converged).unwrap();
        }
    }
    out
}

/// One row per cell with mean, standard deviation and the argmin flag.
pub fn summary_csv(sweep: &SweepResult, dims: usize) -> String {
    let mut out = String::from("method,grid");
    axis_header(&mut out, "n", dims);
    axis_header(&mut out, "offset", dims);
    out.push_str(",lambda");
    axis_header(&mut out, "tau", dims);
    out.push_str(",draws,converged_draws,mean_mmd,std_mmd,argmin\n");
    for cell in &sweep.cells {
        let best = sweep.argmin(cell.scenario, cell.method).is_some_and(|b| std::ptr::eq(b, cell));
        cell_key(&mut out, sweep, cell, dims);
        let ok = cell.draws.iter().filter(|d| d.converged).count();
        writeln!(out, ",{},{ok},{},{},{best}", cell.draws.len(), fmt_f64(cell.mean()), fmt_f64(cell.std())).unwrap();
    }
    out
}

pub fn certificates_csv(rows: &[CertificateRow]) -> String {
    let mut out = String::from("method,grid,n,offset,tau,value,node_max,eps1,curvature,mu,nondegenerate\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.grid_index,
            r.points,
            fmt_f64(r.offset),
            fmt_opt(r.tau),
            fmt_f64(r.value),
            fmt_f64(r.node_max),
            fmt_opt(r.eps1),
            fmt_opt(r.curvature),
            fmt_opt(r.mu),
            r.nondegenerate
        )
        .unwrap();
    }
    out
}

pub fn manifest_json(spec: &ExperimentSpec, files: &[&str], not_converged_cells: usize) -> String {
    let seed = spec.sweep.as_ref().map(|s| s.seed);
    let value = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "files": files,
        "not_converged_cells": not_converged_cells,
        "spec": spec,
    });
    let mut s = serde_json::to_string_pretty(&value).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }
}
