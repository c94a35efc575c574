//! Grids, sparse measures, grouped coefficient vectors and solver settings.

use crate::error::{Error, Result};

/// Tolerance per coordinate under which two atom positions are identified.
pub const POSITION_TOL: f64 = 1e-12;

/// Uniform tensor grid. Node `j` on axis `k` sits at `origin[k] + j * spacing(k)`.
///
/// Flat node indices are row-major: axis 0 varies slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<usize>,
    origin: Vec<f64>,
    extent: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<usize>, origin: Vec<f64>, extent: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParam("grid needs at least one axis".into()));
        }
        if origin.len() != points.len() {
            return Err(Error::DimMismatch { expected: points.len(), found: origin.len() });
        }
        if extent.len() != points.len() {
            return Err(Error::DimMismatch { expected: points.len(), found: extent.len() });
        }
        if let Some(n) = points.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParam(format!("grid axis needs at least 2 points, got {n}")));
        }
        if extent.iter().chain(&origin).any(|v| !v.is_finite()) || extent.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParam("grid extent must be positive and finite".into()));
        }
        Ok(Self { points, origin, extent })
    }

    /// Grid on the unit cube `[0,1)^d`.
    pub fn unit(points: &[usize]) -> Result<Self> {
        let d = points.len();
        Self::new(points.to_vec(), vec![0.0; d], vec![1.0; d])
    }

    /// One-dimensional grid with `n` nodes on `[origin, origin + extent)`.
    pub fn line(n: usize, origin: f64, extent: f64) -> Result<Self> {
        Self::new(vec![n], vec![origin], vec![extent])
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dims()).map(|k| self.spacing(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of flat node `j`.
    pub fn multi_index(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for k in (0..self.dims()).rev() {
            idx[k] = j % self.points[k];
            j /= self.points[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node(&self, j: usize) -> Vec<f64> {
        self.multi_index(j).iter().enumerate().map(|(k, &i)| self.origin[k] + i as f64 * self.spacing(k)).collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// Nearest node to `x` and the offset `x - node`.
    pub fn nearest_node(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let idx: Vec<usize> = (0..self.dims())
            .map(|k| {
                let t = ((x[k] - self.origin[k]) / self.spacing(k)).round();
                t.clamp(0.0, (self.points[k] - 1) as f64) as usize
            })
            .collect();
        let j = self.flat_index(&idx);
        let node = self.node(j);
        let offset = x.iter().zip(&node).map(|(a, b)| a - b).collect();
        (j, offset)
    }
}

/// A Dirac mass `amplitude * δ_position`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub position: Vec<f64>,
    pub amplitude: f64,
}

impl Atom {
    pub fn new(position: Vec<f64>, amplitude: f64) -> Self {
        Self { position, amplitude }
    }
}

/// Finite signed combination of Dirac masses in `d` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dims: usize,
    atoms: Vec<Atom>,
}

fn same_position(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= POSITION_TOL)
}

impl DiscreteMeasure {
    pub fn new(dims: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParam("measure dimension must be positive".into()));
        }
        for (i, atom) in atoms.iter().enumerate() {
            if atom.position.len() != dims {
                return Err(Error::DimMismatch { expected: dims, found: atom.position.len() });
            }
            if atom.amplitude == 0.0 || !atom.amplitude.is_finite() {
                return Err(Error::InvalidParam(format!("atom {i} has zero or non-finite amplitude")));
            }
            if atom.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParam(format!("atom {i} has a non-finite position")));
            }
            if atoms[..i].iter().any(|b| same_position(&b.position, &atom.position)) {
                return Err(Error::InvalidParam(format!("atom {i} duplicates an earlier position")));
            }
        }
        Ok(Self { dims, atoms })
    }

    /// Builds a measure, summing amplitudes of coincident atoms and dropping atoms that cancel.
    pub fn merged(dims: usize, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut out: Vec<Atom> = Vec::new();
        for atom in atoms {
            if atom.position.len() != dims {
                return Err(Error::DimMismatch { expected: dims, found: atom.position.len() });
            }
            match out.iter_mut().find(|b| same_position(&b.position, &atom.position)) {
                Some(b) => b.amplitude += atom.amplitude,
                None => out.push(atom),
            }
        }
        out.retain(|a| a.amplitude != 0.0);
        Self::new(dims, out)
    }

    pub fn empty(dims: usize) -> Self {
        Self { dims, atoms: Vec::new() }
    }

    /// One-dimensional measure from `(position, amplitude)` pairs.
    pub fn from_pairs_1d(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(1, pairs.iter().map(|&(x, a)| Atom::new(vec![x], a)).collect())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Multiplies every amplitude by `c`; `c = 0` yields the empty measure.
    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::empty(self.dims);
        }
        let atoms = self.atoms.iter().map(|a| Atom::new(a.position.clone(), a.amplitude * c)).collect();
        Self { dims: self.dims, atoms }
    }
}

/// Coefficient vector split into `n_groups` consecutive groups of `group_size` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedVector {
    group_size: usize,
    data: Vec<f64>,
}

impl GroupedVector {
    pub fn new(group_size: usize, data: Vec<f64>) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::InvalidParam("group size must be positive".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(group_size) {
            return Err(Error::InvalidParam(format!(
                "data length {} is not a positive multiple of group size {group_size}",
                data.len()
            )));
        }
        Ok(Self { group_size, data })
    }

    pub fn zeros(group_size: usize, n_groups: usize) -> Self {
        Self { group_size, data: vec![0.0; group_size * n_groups] }
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn n_groups(&self) -> usize {
        self.data.len() / self.group_size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn group(&self, i: usize) -> &[f64] {
        &self.data[i * self.group_size..(i + 1) * self.group_size]
    }

    pub fn group_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.group_size..(i + 1) * self.group_size]
    }

    pub fn group_norm(&self, i: usize) -> f64 {
        norm(self.group(i))
    }

    pub fn group_norms(&self) -> Vec<f64> {
        (0..self.n_groups()).map(|i| self.group_norm(i)).collect()
    }

    pub fn mixed_norm(&self) -> f64 {
        (0..self.n_groups()).map(|i| self.group_norm(i)).sum()
    }

    /// Groups whose norm exceeds `support_tol` times the largest group norm.
    pub fn group_support(&self, support_tol: f64) -> Vec<usize> {
        let norms = self.group_norms();
        let max = norms.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        let thr = support_tol * max;
        (0..norms.len()).filter(|&i| norms[i] > thr).collect()
    }

    /// Groupwise normalization `z_i / |z_i|`.
    pub fn group_sign(&self) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..self.n_groups() {
            let n = self.group_norm(i);
            if n < 1e-14 {
                return Err(Error::ZeroGroup { group: i });
            }
            out.group_mut(i).iter_mut().for_each(|v| *v /= n);
        }
        Ok(out)
    }

    /// Vector made of the listed groups, in the given order.
    pub fn restrict(&self, groups: &[usize]) -> Result<Self> {
        let data: Vec<f64> = groups.iter().flat_map(|&i| self.group(i).iter().copied()).collect();
        Self::new(self.group_size, data)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { group_size: self.group_size, data: self.data.iter().map(|v| v * c).collect() }
    }
}

/// Free-function form of [`GroupedVector::group_support`].
pub fn group_support(z: &GroupedVector, support_tol: f64) -> Vec<usize> {
    z.group_support(support_tol)
}

/// Free-function form of [`GroupedVector::mixed_norm`].
pub fn mixed_norm(z: &GroupedVector) -> f64 {
    z.mixed_norm()
}

/// Free-function form of [`GroupedVector::group_sign`].
pub fn group_sign(z: &GroupedVector) -> Result<GroupedVector> {
    z.group_sign()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Settings for the group-Lasso solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    /// Relative group-norm threshold for the support.
    pub support_tol: f64,
    /// Constrain all coordinates to be nonnegative (group size 1 only).
    pub nonneg: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, max_iters: 200_000, gap_tol: 1e-9, support_tol: 1e-6, nonneg: false }
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Self {
        self.gap_tol = gap_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_support_tol(mut self, support_tol: f64) -> Self {
        self.support_tol = support_tol;
        self
    }

    pub fn with_nonneg(mut self, nonneg: bool) -> Self {
        self.nonneg = nonneg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParam(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParam(format!("gap_tol must be positive, got {}", self.gap_tol)));
        }
        if !(self.support_tol >= 0.0) {
            return Err(Error::InvalidParam(format!("support_tol must be nonnegative, got {}", self.support_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParam("max_iters must be positive".into()));
        }
        Ok(())
    }
}
