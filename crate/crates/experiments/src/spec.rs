//! Experiment description files.
//!
//! A spec is a list of `key = value` lines grouped in sections:
//!
//! ```text
//! [operator]
//! kind = "fourier"          # fourier | gaussian | gauss_laplace | gauss_laplace_3d
//! fc = 3
//!
//! [grid]
//! points = [[10], [20]]     # one entry per grid configuration, nodes per axis
//!
//! [truth]
//! positions = [[0.3], [0.7]]
//! amplitudes = [2.0, 1.0]
//! directions = [[1.0], [-1.0]]
//! offsets = [[0.0], [0.2]]  # off-grid shifts in units of the grid spacing
//!
//! [noise]
//! rho_rel = 0.1
//! draws = 10
//!
//! [sweep]
//! methods = ["lasso", "srlasso"]
//! seed = 1
//! lambda_count = 20
//! tau_count = 20
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use srlasso::operators::SeparableOperator;
use srlasso::{
    fourier_lowpass_1d, gauss_laplace_3d, gauss_laplace_separable, gaussian_sampling_1d, uniform_samples, Atom,
    DiscreteMeasure, Grid, MeasurementOperator,
};

use crate::error::SpecError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Fourier,
    Gaussian,
    GaussLaplace,
    #[serde(rename = "gauss_laplace_3d")]
    GaussLaplace3d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// Cutoff frequency (fourier).
    pub fc: Option<usize>,
    /// Gaussian width (sampling operators).
    pub sigma: Option<f64>,
    /// Sample count per axis (sampling operators).
    pub samples: Option<Vec<usize>>,
    /// Lower end of the sample range per axis; defaults to 0.
    pub sample_lo: Option<Vec<f64>>,
    /// Upper end of the sample range per axis; defaults to 1.
    pub sample_hi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: Vec<Vec<usize>>,
    pub origin: Option<Vec<f64>>,
    /// Domain length per axis; defaults to 1.
    pub extent: Option<Vec<f64>>,
    /// Fixed spacing per axis; when set, the extent is `points * spacing`.
    pub spacing: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    /// Approximate atom positions; each is snapped to its nearest grid node.
    pub positions: Vec<Vec<f64>>,
    pub amplitudes: Vec<f64>,
    /// Per-atom, per-axis sign of the off-grid shift; defaults to all +1.
    pub directions: Option<Vec<Vec<f64>>>,
    /// Off-grid shifts in units of the grid spacing, one entry per scenario.
    pub offsets: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub rho_rel: f64,
    pub draws: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lasso,
    Srlasso,
    Cbp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Srlasso => "srlasso",
            Method::Cbp => "cbp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub seed: u64,
    pub lambda_count: usize,
    /// τ values per axis, uniform on `[0, tau_max]`.
    pub tau_count: usize,
    pub tau_max: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub taus: Vec<f64>,
    /// Neighborhood radius in units of the grid spacing.
    pub radius: f64,
    pub scan_resolution: Option<usize>,
    pub cbp: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub operator: OperatorSpec,
    pub grid: GridSpec,
    pub truth: TruthSpec,
    pub noise: Option<NoiseSpec>,
    pub sweep: Option<SweepSpec>,
    pub certificate: Option<CertificateSpec>,
}

fn field(name: &str, msg: impl Into<String>) -> SpecError {
    SpecError::Invalid { field: name.to_string(), message: msg.into() }
}

/// Parses and validates a spec.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let spec: ExperimentSpec = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        SpecError::Parse { line, message: e.message().to_string() }
    })?;
    spec.validate()?;
    Ok(spec)
}

impl ExperimentSpec {
    pub fn dims(&self) -> usize {
        match self.operator.kind {
            OperatorKind::Fourier | OperatorKind::Gaussian => 1,
            OperatorKind::GaussLaplace => 2,
            OperatorKind::GaussLaplace3d => 3,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let d = self.dims();
        self.build_operator()?;
        let g = &self.grid;
        if g.points.is_empty() {
            return Err(field("grid.points", "needs at least one grid configuration"));
        }
        for p in &g.points {
            if p.len() != d {
                return Err(field("grid.points", format!("each entry needs {d} values")));
            }
        }
        for (name, v) in [("grid.origin", &g.origin), ("grid.extent", &g.extent), ("grid.spacing", &g.spacing)] {
            if let Some(v) = v {
                if v.len() != d {
                    return Err(field(name, format!("needs {d} values")));
                }
            }
        }
        if g.extent.is_some() && g.spacing.is_some() {
            return Err(field("grid.spacing", "give either extent or spacing, not both"));
        }
        for i in 0..g.points.len() {
            self.grid(i)?;
        }
        let t = &self.truth;
        if t.positions.is_empty() {
            return Err(field("truth.positions", "needs at least one atom"));
        }
        if t.positions.iter().any(|p| p.len() != d) {
            return Err(field("truth.positions", format!("each entry needs {d} values")));
        }
        if t.amplitudes.len() != t.positions.len() {
            return Err(field("truth.amplitudes", "needs one value per position"));
        }
        if t.amplitudes.iter().any(|a| *a == 0.0 || !a.is_finite()) {
            return Err(field("truth.amplitudes", "amplitudes must be nonzero and finite"));
        }
        if let Some(dirs) = &t.directions {
            if dirs.len() != t.positions.len() || dirs.iter().any(|v| v.len() != d) {
                return Err(field("truth.directions", format!("needs one {d}-vector per position")));
            }
        }
        if t.offsets.is_empty() || t.offsets.iter().any(|o| o.len() != d) {
            return Err(field("truth.offsets", format!("needs at least one {d}-vector")));
        }
        if t.offsets.iter().flatten().any(|o| o.abs() > 0.5) {
            return Err(field("truth.offsets", "offsets must lie in [-0.5, 0.5]"));
        }
        for gi in 0..g.points.len() {
            for oi in 0..t.offsets.len() {
                self.truth_measure(gi, oi)?;
            }
        }
        if let Some(n) = &self.noise {
            if !(n.rho_rel >= 0.0) || !n.rho_rel.is_finite() {
                return Err(field("noise.rho_rel", "must be nonnegative"));
            }
            if n.draws < 1 {
                return Err(field("noise.draws", "must be at least 1"));
            }
        }
        if let Some(s) = &self.sweep {
            if self.noise.is_none() {
                return Err(field("noise", "a sweep needs a [noise] section"));
            }
            if s.methods.is_empty() {
                return Err(field("sweep.methods", "needs at least one method"));
            }
            if s.methods.contains(&Method::Srlasso) && !s.methods.contains(&Method::Lasso) {
                return Err(field("sweep.methods", "srlasso is tuned at the lasso optimum and needs lasso"));
            }
            if s.lambda_count < 2 {
                return Err(field("sweep.lambda_count", "must be at least 2"));
            }
            if s.methods.contains(&Method::Srlasso) && s.tau_count < 2 {
                return Err(field("sweep.tau_count", "must be at least 2"));
            }
            if let Some(tm) = s.tau_max {
                if !(tm > 0.0 && tm <= 2.0) {
                    return Err(field("sweep.tau_max", "must lie in (0, 2]"));
                }
            }
            if s.methods.contains(&Method::Cbp) && d != 1 {
                return Err(field("sweep.methods", "cbp supports one-dimensional operators only"));
            }
            if let Some(tol) = s.gap_tol {
                if !(tol > 0.0) {
                    return Err(field("sweep.gap_tol", "must be positive"));
                }
            }
            if s.max_iters == Some(0) {
                return Err(field("sweep.max_iters", "must be positive"));
            }
        }
        if let Some(c) = &self.certificate {
            if d != 1 {
                return Err(field("certificate", "certificate scans support one-dimensional operators only"));
            }
            if c.taus.is_empty() || c.taus.iter().any(|t| !(*t >= 0.0 && *t <= 2.0)) {
                return Err(field("certificate.taus", "needs values in [0, 2]"));
            }
            if !(c.radius > 0.0) {
                return Err(field("certificate.radius", "must be positive"));
            }
            if c.scan_resolution.is_some_and(|r| r < 100) {
                return Err(field("certificate.scan_resolution", "must be at least 100"));
            }
        }
        Ok(())
    }

    pub fn build_operator(&self) -> Result<Arc<dyn MeasurementOperator>, SpecError> {
        let o = &self.operator;
        let d = self.dims();
        let bad = |m: &str| field("operator", m.to_string());
        if o.kind == OperatorKind::Fourier {
            if o.sigma.is_some() || o.samples.is_some() || o.sample_lo.is_some() || o.sample_hi.is_some() {
                return Err(bad("fourier takes only fc"));
            }
            let fc = o.fc.ok_or_else(|| field("operator.fc", "required for fourier"))?;
            let op = fourier_lowpass_1d(fc).map_err(|e| field("operator.fc", e.to_string()))?;
            return Ok(Arc::new(op));
        }
        if o.fc.is_some() {
            return Err(field("operator.fc", "only used by fourier"));
        }
        let sigma = o.sigma.ok_or_else(|| field("operator.sigma", "required"))?;
        let counts = o.samples.clone().ok_or_else(|| field("operator.samples", "required"))?;
        if counts.len() != d {
            return Err(field("operator.samples", format!("needs {d} values")));
        }
        let lo = o.sample_lo.clone().unwrap_or(vec![0.0; d]);
        let hi = o.sample_hi.clone().unwrap_or(vec![1.0; d]);
        if lo.len() != d || hi.len() != d {
            return Err(bad("sample_lo and sample_hi need one value per axis"));
        }
        let s: Vec<Vec<f64>> = (0..d).map(|k| uniform_samples(counts[k], lo[k], hi[k])).collect();
        let op: Result<SeparableOperator, _> = match o.kind {
            OperatorKind::Gaussian => gaussian_sampling_1d(sigma, &s[0]),
            OperatorKind::GaussLaplace => gauss_laplace_separable(sigma, &s[0], &s[1]),
            OperatorKind::GaussLaplace3d => gauss_laplace_3d(sigma, &s[0], &s[1], &s[2]),
            OperatorKind::Fourier => unreachable!(),
        };
        Ok(Arc::new(op.map_err(|e| bad(&e.to_string()))?))
    }

    /// Grid configuration `i`.
    pub fn grid(&self, i: usize) -> Result<Grid, SpecError> {
        let g = &self.grid;
        let d = self.dims();
        let points = g.points[i].clone();
        let origin = g.origin.clone().unwrap_or(vec![0.0; d]);
        let extent = match (&g.extent, &g.spacing) {
            (_, Some(sp)) => points.iter().zip(sp).map(|(&n, &h)| n as f64 * h).collect(),
            (Some(e), None) => e.clone(),
            (None, None) => vec![1.0; d],
        };
        Grid::new(points, origin, extent).map_err(|e| field("grid", e.to_string()))
    }

    /// Ground truth for grid configuration `grid_index` and offset scenario `offset_index`.
    pub fn truth_measure(&self, grid_index: usize, offset_index: usize) -> Result<DiscreteMeasure, SpecError> {
        let grid = self.grid(grid_index)?;
        let t = &self.truth;
        let offsets = &t.offsets[offset_index];
        let atoms = t.positions.iter().enumerate().map(|(i, p)| {
            let (j, _) = grid.nearest_node(p);
            let node = grid.node(j);
            let pos = (0..node.len())
                .map(|k| {
                    let dir = t.directions.as_ref().map_or(1.0, |d| d[i][k]);
                    node[k] + dir * offsets[k] * grid.spacing(k)
                })
                .collect();
            Atom::new(pos, t.amplitudes[i])
        });
        DiscreteMeasure::new(grid.dims(), atoms.collect()).map_err(|e| field("truth", e.to_string()))
    }

    pub fn tau_max(&self) -> f64 {
        self.sweep.as_ref().and_then(|s| s.tau_max).unwrap_or(1.0)
    }
}
