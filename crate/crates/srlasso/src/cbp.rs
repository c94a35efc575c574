//! Continuous basis pursuit through its nonnegative Lasso reformulation, and its
//! vanishing-derivative certificate `η_V`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, pinv_transpose_apply};
use crate::operators::MeasurementOperator;
use crate::solver::{solve_group_lasso, DesignMatrix, SolveResult};
use crate::types::{Atom, DiscreteMeasure, Grid, SolverConfig};

/// `A_h = [A + (h/2)B, A − (h/2)B]` with `A = Φ_X` and `B = Φ'_X` (unnormalized).
#[derive(Clone, Debug)]
pub struct CbpDesign {
    matrix: DesignMatrix,
    grid: Grid,
    h: f64,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl CbpDesign {
    pub fn matrix(&self) -> &DesignMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `Φ_X`.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `Φ'_X`.
    pub fn derivatives(&self) -> &DMatrix<f64> {
        &self.b
    }
}

pub fn build_cbp_design(op: &dyn MeasurementOperator, grid: &Grid) -> Result<CbpDesign> {
    if op.dims() != 1 || grid.dims() != 1 {
        return Err(Error::DimUnsupported { supported: 1, found: op.dims().max(grid.dims()) });
    }
    let n = grid.len();
    let h = grid.spacing(0);
    let m = op.measurement_dim();
    let mut a = DMatrix::zeros(m, n);
    let mut b = DMatrix::zeros(m, n);
    for j in 0..n {
        let x = grid.node(j);
        a.set_column(j, &op.feature(&x));
        b.set_column(j, &op.dfeature(&x).column(0));
    }
    let mut mat = DMatrix::zeros(m, 2 * n);
    mat.view_mut((0, 0), (m, n)).copy_from(&(&a + &b * (0.5 * h)));
    mat.view_mut((0, n), (m, n)).copy_from(&(&a - &b * (0.5 * h)));
    Ok(CbpDesign { matrix: DesignMatrix::new(mat, 1)?, grid: grid.clone(), h, a, b })
}

/// C-BP solution in both parameterizations.
#[derive(Clone, Debug)]
pub struct CbpSolution {
    pub r: Vec<f64>,
    pub l: Vec<f64>,
    /// `a = r + l`.
    pub a: Vec<f64>,
    /// `b = (h/2)(r − l)`.
    pub b: Vec<f64>,
    pub measure: DiscreteMeasure,
    pub result: SolveResult,
}

/// Maps `(r, l)` to `(a, b)` and the measure with atoms at `x_j + b_j/a_j`.
pub fn cbp_from_rl(
    design: &CbpDesign,
    r: &[f64],
    l: &[f64],
    support_tol: f64,
) -> (Vec<f64>, Vec<f64>, DiscreteMeasure) {
    let half = 0.5 * design.h;
    let a: Vec<f64> = r.iter().zip(l).map(|(x, y)| x + y).collect();
    let b: Vec<f64> = r.iter().zip(l).map(|(x, y)| half * (x - y)).collect();
    let max_a = a.iter().cloned().fold(0.0, f64::max);
    let atoms = (0..a.len())
        .filter(|&j| max_a > 0.0 && a[j] > support_tol * max_a)
        .map(|j| Atom::new(vec![design.grid.node(j)[0] + b[j] / a[j]], a[j]));
    let measure = DiscreteMeasure::merged(1, atoms).expect("one-dimensional atoms");
    (a, b, measure)
}

/// Solves the nonnegative Lasso over `(r, l)`; nonnegativity is enforced regardless of `cfg`.
pub fn solve_cbp(design: &CbpDesign, y: &DVector<f64>, cfg: &SolverConfig) -> Result<CbpSolution> {
    let cfg = cfg.clone().with_nonneg(true);
    let result = solve_group_lasso(&design.matrix, y, &cfg)?;
    let n = design.grid.len();
    let r = result.z.data()[..n].to_vec();
    let l = result.z.data()[n..].to_vec();
    let (a, b, measure) = cbp_from_rl(design, &r, &l, cfg.support_tol);
    Ok(CbpSolution { r, l, a, b, measure, result })
}

/// Outcome of the `IC_h` test.
#[derive(Clone, Debug, PartialEq)]
pub struct IchReport {
    /// `max_{j∉J} max(η_V(x_j) + (h/2)η_V'(x_j), η_V(x_j) − (h/2)η_V'(x_j))`.
    pub margin: f64,
    pub holds: bool,
    pub worst_node: Option<usize>,
}

/// `η_V = ⟨φ(·), p_V⟩` with `p_V = (Γ_xᵀ)†(1; 0)` and `Γ_x = [φ(x_i), φ'(x_i)]`.
#[derive(Clone, Debug)]
pub struct CbpCertificate<'a> {
    op: &'a dyn MeasurementOperator,
    pub p_v: DVector<f64>,
    pub support: Vec<f64>,
    pub ich: IchReport,
    fd_step: f64,
}

impl CbpCertificate<'_> {
    pub fn eta(&self, x: f64) -> f64 {
        self.op.feature(&[x]).dot(&self.p_v)
    }

    pub fn eta_d1(&self, x: f64) -> f64 {
        self.op.dfeature(&[x]).column(0).dot(&self.p_v)
    }

    pub fn eta_d2(&self, x: f64) -> f64 {
        self.op.d2feature(&[x])[0].column(0).dot(&self.p_v)
    }

    /// Central finite difference of `η_V''`.
    pub fn eta_d3(&self, x: f64) -> f64 {
        let e = self.fd_step;
        (self.eta_d2(x + e) - self.eta_d2(x - e)) / (2.0 * e)
    }
}

pub fn cbp_certificate<'a>(
    op: &'a dyn MeasurementOperator,
    support_positions: &[f64],
    grid: &Grid,
) -> Result<CbpCertificate<'a>> {
    if op.dims() != 1 || grid.dims() != 1 {
        return Err(Error::DimUnsupported { supported: 1, found: op.dims().max(grid.dims()) });
    }
    let n = support_positions.len();
    if n == 0 {
        return Err(Error::InvalidParam("support must not be empty".into()));
    }
    let m = op.measurement_dim();
    let mut gx = DMatrix::zeros(m, 2 * n);
    for (i, &x) in support_positions.iter().enumerate() {
        gx.set_column(i, &op.feature(&[x]));
        gx.set_column(n + i, &op.dfeature(&[x]).column(0));
    }
    let scaled = {
        let mut s = gx.clone();
        for c in 0..2 * n {
            let nc = s.column(c).norm();
            if nc > 0.0 {
                s.column_mut(c).scale_mut(1.0 / nc);
            }
        }
        s
    };
    let condition = condition_number(&scaled);
    if !(condition < crate::certificates::MAX_CONDITION) {
        return Err(Error::SingularGram { condition });
    }
    let rhs = DVector::from_iterator(2 * n, (0..2 * n).map(|i| if i < n { 1.0 } else { 0.0 }));
    let p_v = pinv_transpose_apply(&gx, &rhs);
    let mut cert = CbpCertificate {
        op,
        p_v,
        support: support_positions.to_vec(),
        ich: IchReport { margin: 0.0, holds: true, worst_node: None },
        fd_step: 1e-5 * grid.extent()[0],
    };
    let h = grid.spacing(0);
    let mut margin = f64::NEG_INFINITY;
    let mut worst = None;
    for j in 0..grid.len() {
        let x = grid.node(j)[0];
        if support_positions.iter().any(|s| (s - x).abs() <= 1e-9 * h) {
            continue;
        }
        let (e, d) = (cert.eta(x), cert.eta_d1(x));
        let v = (e + 0.5 * h * d).max(e - 0.5 * h * d);
        if v > margin {
            margin = v;
            worst = Some(j);
        }
    }
    let margin = if margin.is_finite() { margin } else { 0.0 };
    cert.ich = IchReport { margin, holds: margin < 1.0, worst_node: worst };
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{gauss_laplace_separable, gaussian_sampling_1d, uniform_samples};

    fn op() -> crate::operators::SeparableOperator {
        gaussian_sampling_1d(0.07, &uniform_samples(50, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn design_columns() {
        let op = op();
        let grid = Grid::unit(&[10]).unwrap();
        let d = build_cbp_design(&op, &grid).unwrap();
        assert_eq!(d.matrix().matrix().ncols(), 20);
        let m = d.matrix().matrix();
        for j in 0..10 {
            let diff = m.column(j) - m.column(10 + j);
            let expected = op.dfeature(&grid.node(j)).column(0) * d.h();
            let scale = expected.norm().max(1.0);
            assert!((diff - expected).norm() < 1e-12 * scale);
        }
        let micro = gauss_laplace_separable(0.1, &[0.0, 1.0], &[1.0]).unwrap();
        assert!(matches!(build_cbp_design(&micro, &Grid::unit(&[4, 4]).unwrap()), Err(Error::DimUnsupported { .. })));
    }

    #[test]
    fn change_of_variables() {
        let grid = Grid::line(5, 0.0, 1.0).unwrap();
        let d = build_cbp_design(&op(), &grid).unwrap();
        let mut r = vec![0.0; 5];
        let l = vec![0.0; 5];
        r[2] = 1.0;
        let (a, b, mu) = cbp_from_rl(&d, &r, &l, 1e-6);
        assert_eq!(a[2], 1.0);
        assert!((b[2] - 0.1).abs() < 1e-15);
        assert!((mu.atoms()[0].position[0] - (grid.node(2)[0] + 0.1)).abs() < 1e-15);
        let (_, _, empty) = cbp_from_rl(&d, &[0.0; 5], &[0.0; 5], 1e-6);
        assert!(empty.is_empty());
    }

    #[test]
    fn certificate_interpolates() {
        let op = op();
        let grid = Grid::unit(&[10]).unwrap();
        let cert = cbp_certificate(&op, &[0.3, 0.6], &grid).unwrap();
        for &x in &[0.3, 0.6] {
            assert!((cert.eta(x) - 1.0).abs() < 1e-8);
            assert!(cert.eta_d1(x).abs() < 1e-6);
        }
        assert!(matches!(cbp_certificate(&op, &[0.3, 0.3], &grid), Err(Error::SingularGram { .. })));
    }
}
