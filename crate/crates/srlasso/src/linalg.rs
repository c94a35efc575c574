use nalgebra::{DMatrix, DVector, SVD};

/// Relative singular-value cutoff for pseudoinverses.
pub const PINV_RCOND: f64 = 1e-10;

/// Singular values of `a`, largest first.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Ratio of extreme singular values; infinite when the smallest vanishes.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// `(aᵀ)† s`: the minimal-norm `p` with `aᵀp = s` when solvable.
pub fn pinv_transpose_apply(a: &DMatrix<f64>, s: &DVector<f64>) -> DVector<f64> {
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let coeffs = &vt * s;
    let mut p = DVector::zeros(a.nrows());
    for k in 0..sv.len() {
        if sv[k] > PINV_RCOND * smax {
            p.axpy(coeffs[k] / sv[k], &u.column(k), 1.0);
        }
    }
    p
}
