//! Group Lasso `min_z λ‖z‖_{1,2} + ½‖Γz − y‖²` by accelerated proximal gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::{norm, GroupedVector, SolverConfig};

/// Dense design matrix whose columns are split into groups of `group_size`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    group_size: usize,
}

impl DesignMatrix {
    pub fn new(matrix: DMatrix<f64>, group_size: usize) -> Result<Self> {
        if group_size == 0 || matrix.ncols() == 0 || !matrix.ncols().is_multiple_of(group_size) {
            return Err(Error::InvalidParam(format!(
                "column count {} is not a positive multiple of group size {group_size}",
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, group_size })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.matrix.ncols() / self.group_size
    }

    /// Columns of the listed groups, concatenated in order.
    pub fn select_groups(&self, groups: &[usize]) -> DMatrix<f64> {
        let q = self.group_size;
        let mut out = DMatrix::zeros(self.rows(), q * groups.len());
        for (slot, &g) in groups.iter().enumerate() {
            for c in 0..q {
                out.set_column(slot * q + c, &self.matrix.column(g * q + c));
            }
        }
        out
    }

    /// `Γᵀ v` split into groups.
    pub fn correlations(&self, v: &DVector<f64>) -> GroupedVector {
        let c = self.matrix.tr_mul(v);
        GroupedVector::new(self.group_size, c.as_slice().to_vec()).expect("valid shape")
    }

    pub fn apply(&self, z: &GroupedVector) -> DVector<f64> {
        &self.matrix * DVector::from_column_slice(z.data())
    }
}

/// Output of [`solve_group_lasso`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub z: GroupedVector,
    pub iterations: usize,
    /// Primal minus dual objective at `z`.
    pub final_gap: f64,
    pub kkt_residual: f64,
    /// `(y − Γz)/λ`.
    pub dual: DVector<f64>,
    pub objective: f64,
}

impl SolveResult {
    pub fn support(&self, support_tol: f64) -> Vec<usize> {
        self.z.group_support(support_tol)
    }
}

/// Proximal map of `t‖·‖₂`.
pub fn block_soft_threshold(v: &[f64], t: f64) -> Vec<f64> {
    let n = norm(v);
    if n <= t {
        return vec![0.0; v.len()];
    }
    let scale = 1.0 - t / n;
    v.iter().map(|x| x * scale).collect()
}

/// Largest singular value of `Γ` by power iteration on `ΓᵀΓ`.
pub fn operator_norm(gamma: &DMatrix<f64>) -> f64 {
    let n = gamma.ncols();
    if n == 0 || gamma.nrows() == 0 {
        return 0.0;
    }
    let mut v = DVector::from_iterator(n, (0..n).map(|i| 1.0 + (i as f64 * 0.754_877_666_246_692_8).fract()));
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..100_000 {
        let gv = gamma * &v;
        let next_est = gv.norm_squared();
        let w = gamma.tr_mul(&gv);
        let wn = w.norm();
        if wn == 0.0 {
            return next_est.sqrt();
        }
        v = w / wn;
        if (next_est - est).abs() <= 1e-13 * next_est {
            est = next_est;
            break;
        }
        est = next_est;
    }
    (gamma * &v).norm().max(est.sqrt())
}

/// Smallest `λ` for which `z = 0` is optimal: `max_i ‖Γ_iᵀ y‖`.
pub fn lambda_max(gamma: &DesignMatrix, y: &DVector<f64>) -> f64 {
    gamma.correlations(y).group_norms().into_iter().fold(0.0, f64::max)
}

/// `max_i ‖g_i + λ sign(z)_i‖` over active groups and `max_i (‖g_i‖ − λ)_+` over the rest, `g = Γᵀ(Γz − y)`.
pub fn kkt_residual(gamma: &DesignMatrix, y: &DVector<f64>, z: &GroupedVector, lambda: f64) -> f64 {
    let g = gamma.correlations(&(gamma.apply(z) - y));
    let mut res: f64 = 0.0;
    for i in 0..z.n_groups() {
        let zi = z.group(i);
        let gi = g.group(i);
        let nz = norm(zi);
        let r = if nz > 0.0 {
            let v: Vec<f64> = gi.iter().zip(zi).map(|(a, b)| a + lambda * b / nz).collect();
            norm(&v)
        } else {
            (norm(gi) - lambda).max(0.0)
        };
        res = res.max(r);
    }
    res
}

/// Optimality residual for `min λ Σ z_i + ½‖Γz − y‖²` subject to `z ≥ 0` (group size 1).
pub fn kkt_residual_nonneg(gamma: &DesignMatrix, y: &DVector<f64>, z: &GroupedVector, lambda: f64) -> f64 {
    let g = gamma.matrix().tr_mul(&(gamma.apply(z) - y));
    z.data()
        .iter()
        .zip(g.iter())
        .map(|(&zi, &gi)| if zi > 0.0 { (gi + lambda).abs() } else { (-gi - lambda).max(0.0) })
        .fold(0.0, f64::max)
}

/// `λ‖z‖_{1,2} + ½‖Γz − y‖²`.
pub fn objective(gamma: &DesignMatrix, y: &DVector<f64>, z: &GroupedVector, lambda: f64) -> f64 {
    lambda * z.mixed_norm() + 0.5 * (gamma.apply(z) - y).norm_squared()
}

struct GapInfo {
    gap: f64,
    primal: f64,
}

fn duality_gap(
    gamma: &DesignMatrix,
    y: &DVector<f64>,
    z: &[f64],
    residual: &DVector<f64>,
    lambda: f64,
    nonneg: bool,
) -> GapInfo {
    let q = gamma.group_size();
    let c = gamma.matrix().tr_mul(residual) / lambda;
    let scale = if nonneg {
        c.iter().cloned().fold(1.0, f64::max)
    } else {
        c.as_slice().chunks(q).map(norm).fold(1.0, f64::max)
    };
    let p = residual / (lambda * scale);
    let penalty: f64 = z.chunks(q).map(norm).sum();
    let primal = lambda * penalty + 0.5 * residual.norm_squared();
    let dual = lambda * y.dot(&p) - 0.5 * lambda * lambda * p.norm_squared();
    GapInfo { gap: primal - dual, primal }
}

fn prox(v: &mut [f64], t: f64, q: usize, nonneg: bool) {
    if nonneg {
        v.iter_mut().for_each(|x| *x = (*x - t).max(0.0));
    } else {
        for chunk in v.chunks_mut(q) {
            let shrunk = block_soft_threshold(chunk, t);
            chunk.copy_from_slice(&shrunk);
        }
    }
}

const GAP_CHECK_EVERY: usize = 10;

/// Solves the (optionally nonnegative) group Lasso from `z = 0`.
///
/// FISTA with fixed step, function-value restart, and a duality-gap stopping test
/// `gap ≤ gap_tol·(1 + |primal|)`.
pub fn solve_group_lasso(gamma: &DesignMatrix, y: &DVector<f64>, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if y.len() != gamma.rows() {
        return Err(Error::DimMismatch { expected: gamma.rows(), found: y.len() });
    }
    if cfg.nonneg && gamma.group_size() != 1 {
        return Err(Error::InvalidParam("nonnegative solves require group size 1".into()));
    }
    let q = gamma.group_size();
    let n = gamma.matrix().ncols();
    let lambda = cfg.lambda;
    let a = gamma.matrix();

    let finish = |z: Vec<f64>, iterations: usize, residual: &DVector<f64>, gap: f64| {
        let z = GroupedVector::new(q, z).expect("valid shape");
        let kkt =
            if cfg.nonneg { kkt_residual_nonneg(gamma, y, &z, lambda) } else { kkt_residual(gamma, y, &z, lambda) };
        let objective = lambda * z.mixed_norm() + 0.5 * residual.norm_squared();
        SolveResult { z, iterations, final_gap: gap, kkt_residual: kkt, dual: residual / lambda, objective }
    };

    let mut z = vec![0.0; n];
    let mut residual = y.clone();
    let info = duality_gap(gamma, y, &z, &residual, lambda, cfg.nonneg);
    if info.gap <= cfg.gap_tol * (1.0 + info.primal.abs()) {
        return Ok(finish(z, 0, &residual, info.gap));
    }
    let sigma = operator_norm(a) * (1.0 + 1e-6);
    if sigma == 0.0 {
        return Ok(finish(z, 0, &residual, info.gap));
    }
    let step = 1.0 / (sigma * sigma);

    let mut f_z = info.primal;
    let mut gz = DVector::zeros(y.len());
    let mut w = z.clone();
    let mut gw = gz.clone();
    let mut t = 1.0f64;
    let mut best = (z.clone(), residual.clone(), info.gap);

    for iter in 1..=cfg.max_iters {
        let grad = a.tr_mul(&(&gw - y));
        let mut z_new: Vec<f64> = w.iter().zip(grad.iter()).map(|(wi, gi)| wi - step * gi).collect();
        prox(&mut z_new, step * lambda, q, cfg.nonneg);
        let gz_new = a * DVector::from_column_slice(&z_new);
        let r_new = y - &gz_new;
        let pen: f64 = z_new.chunks(q).map(norm).sum();
        let f_new = lambda * pen + 0.5 * r_new.norm_squared();

        if f_new > f_z && t > 1.0 {
            t = 1.0;
            w.copy_from_slice(&z);
            gw.copy_from(&gz);
            continue;
        }

        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for i in 0..n {
            w[i] = z_new[i] + beta * (z_new[i] - z[i]);
        }
        gw = &gz_new + (&gz_new - &gz) * beta;
        t = t_new;
        z = z_new;
        gz = gz_new;
        residual = r_new;
        f_z = f_new;

        if iter % GAP_CHECK_EVERY == 0 || iter == cfg.max_iters {
            let info = duality_gap(gamma, y, &z, &residual, lambda, cfg.nonneg);
            if info.gap < best.2 {
                best = (z.clone(), residual.clone(), info.gap);
            }
            if info.gap <= cfg.gap_tol * (1.0 + info.primal.abs()) {
                return Ok(finish(z, iter, &residual, info.gap));
            }
        }
    }
    let (bz, br, bgap) = best;
    Err(Error::NotConverged { best: Box::new(finish(bz, cfg.max_iters, &br, bgap)) })
}
