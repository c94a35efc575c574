//! Certificate scans: SR-Lasso `f₀` per τ and the C-BP `IC_h` margin per grid.
//!
//! The C-BP certificate interpolates at the grid nodes nearest to the true spikes.

use rayon::prelude::*;
use srlasso::certificates::DEFAULT_SCAN_RESOLUTION;
use srlasso::{build_sr_design, cbp_certificate, SrCertificate};

use crate::error::{RunError, SpecError};
use crate::spec::{ExperimentSpec, Method};
use crate::sweep::scenarios;

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRow {
    pub method: Method,
    pub grid_index: usize,
    pub points: usize,
    pub offset_index: usize,
    pub offset: f64,
    /// SR-Lasso only.
    pub tau: Option<f64>,
    /// `max f₀` over the scan (SR-Lasso) or the `IC_h` margin (C-BP).
    pub value: f64,
    /// Largest value over off-support grid nodes.
    pub node_max: f64,
    /// SR-Lasso only: `max |f₀'|` on the support, `−max f₀''` near it, `1 − max f₀` away from it.
    pub eps1: Option<f64>,
    pub curvature: Option<f64>,
    pub mu: Option<f64>,
    pub nondegenerate: bool,
}

pub fn certificate_experiment(spec: &ExperimentSpec) -> Result<Vec<CertificateRow>, RunError> {
    let cs = spec.certificate.as_ref().ok_or_else(|| SpecError::Invalid {
        field: "certificate".into(),
        message: "section is required for certificate runs".into(),
    })?;
    let op = spec.build_operator()?;
    let scen = scenarios(spec, op.as_ref())?;
    let resolution = cs.scan_resolution.unwrap_or(DEFAULT_SCAN_RESOLUTION);

    let mut jobs: Vec<(usize, Option<f64>)> = Vec::new();
    for si in 0..scen.len() {
        for &t in &cs.taus {
            jobs.push((si, Some(t)));
        }
        if cs.cbp.unwrap_or(false) {
            jobs.push((si, None));
        }
    }
    jobs.par_iter()
        .map(|&(si, tau)| {
            let sc = &scen[si];
            let h = sc.grid.spacing(0);
            let base = |method, value, node_max, nondegenerate| CertificateRow {
                method,
                grid_index: sc.grid_index,
                points: sc.grid.len(),
                offset_index: sc.offset_index,
                offset: sc.offsets[0],
                tau,
                value,
                node_max,
                eps1: None,
                curvature: None,
                mu: None,
                nondegenerate,
            };
            match tau {
                Some(t) => {
                    let design = build_sr_design(op.clone(), &sc.grid, &[t])?;
                    let cert = SrCertificate::for_measure(&design, &sc.mu0)?;
                    let d = cert.diagnostics(cs.radius * h, resolution)?;
                    Ok(CertificateRow {
                        eps1: Some(d.eps1),
                        curvature: Some(d.curvature),
                        mu: Some(d.mu),
                        ..base(Method::Srlasso, d.scan_max, d.offsupport_node_max, !d.degenerate())
                    })
                }
                None => {
                    let support: Vec<f64> =
                        sc.mu0.atoms().iter().map(|a| sc.grid.node(sc.grid.nearest_node(&a.position).0)[0]).collect();
                    let cert = cbp_certificate(op.as_ref(), &support, &sc.grid)?;
                    Ok(base(Method::Cbp, cert.ich.margin, cert.ich.margin, cert.ich.holds))
                }
            }
        })
        .collect()
}
