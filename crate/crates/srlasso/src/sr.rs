//! Super-resolved Lasso: group Lasso over `(a_j, b_j)` pairs built from a first-order
//! Taylor expansion of `φ` at the grid nodes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{whitening, MeasurementOperator};
use crate::solver::{solve_group_lasso, DesignMatrix, SolveResult};
use crate::types::{Atom, DiscreteMeasure, Grid, GroupedVector, SolverConfig};

/// Relative amplitude under which an active group has no usable position.
pub const PURE_SHIFT_TOL: f64 = 1e-12;

/// Design `Γ = [Φ_X, τΨ_X]` with one group `[φ(x_j), τ_k ψ_k(x_j)]` per node.
#[derive(Clone, Debug)]
pub struct SrDesign {
    operator: Arc<dyn MeasurementOperator>,
    grid: Grid,
    tau: Vec<f64>,
    matrix: DesignMatrix,
    metric_sqrt: Vec<DMatrix<f64>>,
    metric_inv_sqrt: Vec<DMatrix<f64>>,
}

impl SrDesign {
    pub fn operator(&self) -> &dyn MeasurementOperator {
        self.operator.as_ref()
    }

    pub fn operator_arc(&self) -> Arc<dyn MeasurementOperator> {
        Arc::clone(&self.operator)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn matrix(&self) -> &DesignMatrix {
        &self.matrix
    }

    pub fn group_size(&self) -> usize {
        1 + self.grid.dims()
    }

    /// `g_{x_j}^{1/2}` at node `j`; in 1-D its only entry is `‖φ'(x_j)‖`.
    pub fn metric_sqrt(&self, j: usize) -> &DMatrix<f64> {
        &self.metric_sqrt[j]
    }

    pub fn metric_inv_sqrt(&self, j: usize) -> &DMatrix<f64> {
        &self.metric_inv_sqrt[j]
    }

    /// `‖φ'(x_j)‖` for every node of a 1-D design.
    pub fn derivative_norms(&self) -> Vec<f64> {
        self.metric_sqrt.iter().map(|m| m[(0, 0)]).collect()
    }

    /// Coefficients `(a_j, b_j)` reproducing `a φ(x_j) + a ∇φ(x_j) t` in this design.
    ///
    /// Axes with `τ_k = 0` get `b_k = 0`.
    pub fn coefficients_for_shift(&self, j: usize, amplitude: f64, shift: &[f64]) -> Vec<f64> {
        let t = DVector::from_column_slice(shift);
        let w = &self.metric_sqrt[j] * t * amplitude;
        let mut out = vec![amplitude];
        out.extend(w.iter().zip(&self.tau).map(|(v, &tk)| if tk > 0.0 { v / tk } else { 0.0 }));
        out
    }
}

/// Builds the SR-Lasso design on `grid` with per-axis weights `tau`.
pub fn build_sr_design(op: Arc<dyn MeasurementOperator>, grid: &Grid, tau: &[f64]) -> Result<SrDesign> {
    let d = grid.dims();
    if op.dims() != d {
        return Err(Error::DimMismatch { expected: d, found: op.dims() });
    }
    if tau.len() != d {
        return Err(Error::DimMismatch { expected: d, found: tau.len() });
    }
    if let Some(t) = tau.iter().find(|t| !(0.0..=2.0).contains(*t)) {
        return Err(Error::InvalidParam(format!("tau must lie in [0, 2], got {t}")));
    }
    let q = 1 + d;
    let m = op.measurement_dim();
    let mut mat = DMatrix::zeros(m, q * grid.len());
    let mut metric_sqrt = Vec::with_capacity(grid.len());
    let mut metric_inv_sqrt = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let x = grid.node(j);
        let wh = whitening(op.as_ref(), &x)?;
        mat.set_column(q * j, &op.feature(&x));
        for (k, t) in tau.iter().enumerate() {
            mat.set_column(q * j + 1 + k, &(wh.columns.column(k) * *t));
        }
        metric_sqrt.push(wh.metric_sqrt);
        metric_inv_sqrt.push(wh.metric_inv_sqrt);
    }
    Ok(SrDesign {
        operator: op,
        grid: grid.clone(),
        tau: tau.to_vec(),
        matrix: DesignMatrix::new(mat, q)?,
        metric_sqrt,
        metric_inv_sqrt,
    })
}

pub fn solve_sr_lasso(design: &SrDesign, y: &DVector<f64>, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_group_lasso(&design.matrix, y, cfg)
}

/// Shift `t = g^{-1/2}(τ∘b)/a`, clamped per axis to `[−h_k/2, h_k/2]`.
///
/// Returns the shift and whether any axis was clamped.
pub fn recover_shift(
    a: f64,
    b: &[f64],
    tau: &[f64],
    metric_inv_sqrt: &DMatrix<f64>,
    spacing: &[f64],
) -> (Vec<f64>, bool) {
    let tb = DVector::from_iterator(b.len(), b.iter().zip(tau).map(|(bk, tk)| bk * tk));
    let t = metric_inv_sqrt * tb / a;
    let mut clamped = false;
    let shift = t
        .iter()
        .zip(spacing)
        .map(|(&v, &h)| {
            let c = v.clamp(-0.5 * h, 0.5 * h);
            if c != v {
                clamped = true;
            }
            c
        })
        .collect();
    (shift, clamped)
}

/// Off-grid measure read from an SR-Lasso solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub measure: DiscreteMeasure,
    /// Active groups whose shift hit the half-cell clamp.
    pub clamped: usize,
    /// Active groups discarded for having a vanishing amplitude.
    pub dropped: usize,
}

pub fn recover_measure(design: &SrDesign, z: &GroupedVector, support_tol: f64) -> Recovery {
    let grid = &design.grid;
    let spacing = grid.spacings();
    let active = z.group_support(support_tol);
    let max_a = active.iter().map(|&j| z.group(j)[0].abs()).fold(0.0, f64::max);
    let (mut clamped, mut dropped) = (0, 0);
    let mut atoms = Vec::new();
    for &j in &active {
        let g = z.group(j);
        let a = g[0];
        if max_a == 0.0 || a.abs() <= PURE_SHIFT_TOL * max_a {
            dropped += 1;
            continue;
        }
        let (t, c) = recover_shift(a, &g[1..], &design.tau, &design.metric_inv_sqrt[j], &spacing);
        clamped += usize::from(c);
        let pos = grid.node(j).iter().zip(&t).map(|(x, s)| x + s).collect();
        atoms.push(Atom::new(pos, a));
    }
    let measure = DiscreteMeasure::merged(grid.dims(), atoms).expect("positions share the grid dimension");
    Recovery { measure, clamped, dropped }
}

/// Plain Lasso design `Φ_X` (group size 1).
pub fn lasso_design(op: &dyn MeasurementOperator, grid: &Grid) -> Result<DesignMatrix> {
    if op.dims() != grid.dims() {
        return Err(Error::DimMismatch { expected: grid.dims(), found: op.dims() });
    }
    let mut mat = DMatrix::zeros(op.measurement_dim(), grid.len());
    for j in 0..grid.len() {
        mat.set_column(j, &op.feature(&grid.node(j)));
    }
    DesignMatrix::new(mat, 1)
}

/// On-grid measure carried by the active entries of a Lasso solution.
pub fn lasso_measure(grid: &Grid, z: &GroupedVector, support_tol: f64) -> DiscreteMeasure {
    let atoms = z.group_support(support_tol).into_iter().map(|j| Atom::new(grid.node(j), z.group(j)[0]));
    DiscreteMeasure::merged(grid.dims(), atoms).expect("positions share the grid dimension")
}

pub fn solve_lasso_baseline(
    op: &dyn MeasurementOperator,
    grid: &Grid,
    y: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<(SolveResult, DiscreteMeasure)> {
    let design = lasso_design(op, grid)?;
    let res = solve_group_lasso(&design, y, cfg)?;
    let mu = lasso_measure(grid, &res.z, cfg.support_tol);
    Ok((res, mu))
}

/// `‖Φμ₀ − Σ_j a_j(φ(x_j) + ∇φ(x_j) t_j)‖` for the nearest-node decomposition of `μ₀`.
pub fn taylor_remainder_bound(op: &dyn MeasurementOperator, grid: &Grid, mu0: &DiscreteMeasure) -> Result<f64> {
    if op.dims() != grid.dims() || mu0.dims() != grid.dims() {
        return Err(Error::DimMismatch { expected: grid.dims(), found: mu0.dims() });
    }
    let spacing = grid.spacings();
    let mut diff = DVector::zeros(op.measurement_dim());
    for atom in mu0.atoms() {
        let (j, t) = grid.nearest_node(&atom.position);
        if t.iter().zip(&spacing).any(|(tk, h)| tk.abs() > 0.5 * h * (1.0 + 1e-9)) {
            return Err(Error::OffGridTooFar { position: atom.position.clone() });
        }
        let x = grid.node(j);
        let lin = op.feature(&x) + op.dfeature(&x) * DVector::from_column_slice(&t);
        diff += (op.feature(&atom.position) - lin) * atom.amplitude;
    }
    Ok(diff.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{fourier_lowpass_1d, gauss_laplace_separable, gaussian_sampling_1d, uniform_samples};

    #[test]
    fn design_shapes() {
        let op = Arc::new(fourier_lowpass_1d(3).unwrap());
        let d = build_sr_design(op, &Grid::unit(&[10]).unwrap(), &[1.0]).unwrap();
        assert_eq!(d.matrix().rows(), 14);
        assert_eq!(d.matrix().matrix().ncols(), 20);
        assert_eq!(d.group_size(), 2);

        let micro = Arc::new(
            gauss_laplace_separable(0.1, &uniform_samples(20, 0.0, 1.0), &uniform_samples(3, 0.0, 1.0)).unwrap(),
        );
        let d2 = build_sr_design(micro, &Grid::unit(&[20, 5]).unwrap(), &[1.0, 1.0]).unwrap();
        assert_eq!(d2.group_size(), 3);
        assert_eq!(d2.matrix().n_groups(), 100);
        assert_eq!(d2.matrix().rows(), 60);
    }

    #[test]
    fn tau_zero_zeroes_derivative_columns() {
        let op = Arc::new(fourier_lowpass_1d(3).unwrap());
        let d = build_sr_design(op, &Grid::unit(&[10]).unwrap(), &[0.0]).unwrap();
        for j in 0..10 {
            assert_eq!(d.matrix().matrix().column(2 * j + 1).norm(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_tau() {
        let op = Arc::new(fourier_lowpass_1d(3).unwrap());
        let grid = Grid::unit(&[10]).unwrap();
        assert!(build_sr_design(op.clone(), &grid, &[2.5]).is_err());
        assert!(build_sr_design(op, &grid, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn shift_formula_and_clamp() {
        let id = DMatrix::from_element(1, 1, 0.1);
        let (t, c) = recover_shift(2.0, &[1.0], &[1.0], &id, &[0.2]);
        assert!((t[0] - 0.05).abs() < 1e-15 && !c);
        let one = DMatrix::from_element(1, 1, 1.0);
        let (t, c) = recover_shift(1.0, &[5.0], &[1.0], &one, &[0.2]);
        assert!((t[0] - 0.1).abs() < 1e-15 && c);
        let (t, _) = recover_shift(1.0, &[0.0], &[1.0], &one, &[0.2]);
        assert_eq!(t[0], 0.0);
    }

    #[test]
    fn recover_drops_pure_shift_groups() {
        let op = Arc::new(fourier_lowpass_1d(3).unwrap());
        let d = build_sr_design(op, &Grid::unit(&[10]).unwrap(), &[1.0]).unwrap();
        let mut z = GroupedVector::zeros(2, 10);
        z.group_mut(2).copy_from_slice(&[1.0, 0.0]);
        z.group_mut(5).copy_from_slice(&[0.0, 3.0]);
        let rec = recover_measure(&d, &z, 1e-6);
        assert_eq!(rec.dropped, 1);
        assert_eq!(rec.measure.len(), 1);
        assert!((rec.measure.atoms()[0].position[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn taylor_remainder_examples() {
        let s = 0.07;
        let op = gaussian_sampling_1d(s, &uniform_samples(100, 0.0, 2.0)).unwrap();
        let grid = Grid::line(29, 0.0, 29.0 * s).unwrap();
        let on = DiscreteMeasure::from_pairs_1d(&[(grid.node(10)[0], 1.0)]).unwrap();
        assert!(taylor_remainder_bound(&op, &grid, &on).unwrap() < 1e-12);
        let x = grid.node(10)[0];
        let at = |t: f64| {
            let mu = DiscreteMeasure::from_pairs_1d(&[(x + t, 1.0)]).unwrap();
            taylor_remainder_bound(&op, &grid, &mu).unwrap()
        };
        let ratio = at(0.2 * s) / at(0.1 * s);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        let half = at(0.5 * s);
        assert!(half > 0.0 && half.is_finite());
        let far = DiscreteMeasure::from_pairs_1d(&[(-1.0, 1.0)]).unwrap();
        assert!(matches!(taylor_remainder_bound(&op, &grid, &far), Err(Error::OffGridTooFar { .. })));
    }
}
