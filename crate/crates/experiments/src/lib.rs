//! Experiment runner for SR-Lasso: noisy draws, λ/τ sweeps, certificate scans and
//! CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod noise;
pub mod output;
pub mod spec;
pub mod sweep;

use std::path::Path;

pub use certificate::{certificate_experiment, CertificateRow};
pub use error::{RunError, SpecError};
pub use noise::{add_noise, generate_noisy_data, noise_level};
pub use spec::{parse_spec, ExperimentSpec, Method};
pub use sweep::{run_sweep, Cell, DrawRecord, Scenario, SweepResult};

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub sweep: SweepResult,
    pub certificates: Option<Vec<CertificateRow>>,
    pub not_converged_cells: usize,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| RunError::Io { path: "<thread pool>".into(), source: std::io::Error::other(e) })
}

fn create_dir(out: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.display().to_string(), source })
}

/// Runs the sweeps (and certificate scans when configured) and writes
/// `curves.csv`, `summary.csv`, `certificates.csv` and `manifest.json` to `out`.
pub fn run(spec: &ExperimentSpec, out: &Path, threads: Option<usize>) -> Result<RunReport, RunError> {
    let (sweep, certificates) = pool(threads)?.install(|| -> Result<_, RunError> {
        let sweep = run_sweep(spec)?;
        let certs = match spec.certificate {
            Some(_) => Some(certificate_experiment(spec)?),
            None => None,
        };
        Ok((sweep, certs))
    })?;
    let dims = spec.dims();
    create_dir(out)?;
    let mut files = vec!["curves.csv", "summary.csv"];
    output::write_file(out, "curves.csv", &output::curves_csv(&sweep, dims))?;
    output::write_file(out, "summary.csv", &output::summary_csv(&sweep, dims))?;
    if let Some(rows) = &certificates {
        output::write_file(out, "certificates.csv", &output::certificates_csv(rows))?;
        files.push("certificates.csv");
    }
    let not_converged_cells = sweep.not_converged_cells();
    output::write_file(out, "manifest.json", &output::manifest_json(spec, &files, not_converged_cells))?;
    Ok(RunReport { sweep, certificates, not_converged_cells })
}

/// Runs only the certificate scans and writes `certificates.csv` and `manifest.json`.
pub fn run_certificates(
    spec: &ExperimentSpec,
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<CertificateRow>, RunError> {
    let rows = pool(threads)?.install(|| certificate_experiment(spec))?;
    create_dir(out)?;
    output::write_file(out, "certificates.csv", &output::certificates_csv(&rows))?;
    output::write_file(out, "manifest.json", &output::manifest_json(spec, &["certificates.csv"], 0))?;
    Ok(rows)
}
