//! Measurement operators `φ: ℝ^d → ℝ^M` with analytic derivatives.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::{dirichlet_kernel, TranslationInvariantKernel};
use crate::types::DiscreteMeasure;

/// Eigenvalue floor used when forming `g_x^{-1/2}`.
pub const METRIC_EIGEN_FLOOR: f64 = 1e-12;
/// Smallest admissible singular value of `∇φ(x)`.
pub const DERIVATIVE_RANK_TOL: f64 = 1e-10;

/// Feature map with first and second derivatives.
pub trait MeasurementOperator: Send + Sync + Debug {
    fn dims(&self) -> usize;

    fn measurement_dim(&self) -> usize;

    /// `φ(x)`.
    fn feature(&self, x: &[f64]) -> DVector<f64>;

    /// `∇φ(x)` as an `M × d` matrix; column `k` is `∂_k φ(x)`.
    fn dfeature(&self, x: &[f64]) -> DMatrix<f64>;

    /// Second derivatives: entry `k` is the `M × d` matrix with columns `∂_k ∂_l φ(x)`.
    fn d2feature(&self, x: &[f64]) -> Vec<DMatrix<f64>>;

    /// Third derivative of a one-dimensional map, when available.
    fn d3feature_1d(&self, _x: f64) -> Option<DVector<f64>> {
        None
    }

    /// Whether `‖φ(x)‖ = 1` for all `x`.
    fn is_normalized(&self) -> bool;

    /// Exact kernel `⟨φ(x), φ(x')⟩ = κ(x − x')`, when the operator is translation invariant.
    fn kernel(&self) -> Option<TranslationInvariantKernel> {
        None
    }
}

/// `Σ_j a_j φ(z_j)`.
pub fn forward(op: &dyn MeasurementOperator, mu: &DiscreteMeasure) -> Result<DVector<f64>> {
    if mu.dims() != op.dims() {
        return Err(Error::DimMismatch { expected: op.dims(), found: mu.dims() });
    }
    let mut y = DVector::zeros(op.measurement_dim());
    for atom in mu.atoms() {
        y.axpy(atom.amplitude, &op.feature(&atom.position), 1.0);
    }
    Ok(y)
}

/// `∇φ(x)` together with its metric `g_x = ∇φᵀ∇φ` and the symmetric roots of `g_x`.
#[derive(Clone, Debug)]
pub struct Whitening {
    /// `∇φ(x) g_x^{-1/2}`; orthonormal columns.
    pub columns: DMatrix<f64>,
    pub metric_sqrt: DMatrix<f64>,
    pub metric_inv_sqrt: DMatrix<f64>,
}

pub fn whitening(op: &dyn MeasurementOperator, x: &[f64]) -> Result<Whitening> {
    let jac = op.dfeature(x);
    let metric = jac.transpose() * &jac;
    let eig = SymmetricEigen::new(metric);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig.max(0.0).sqrt() > DERIVATIVE_RANK_TOL) {
        return Err(Error::DegenerateDerivative { position: x.to_vec() });
    }
    let floored = eig.eigenvalues.map(|l| l.max(METRIC_EIGEN_FLOOR));
    let v = &eig.eigenvectors;
    let metric_sqrt = v * DMatrix::from_diagonal(&floored.map(f64::sqrt)) * v.transpose();
    let metric_inv_sqrt = v * DMatrix::from_diagonal(&floored.map(|l| 1.0 / l.sqrt())) * v.transpose();
    Ok(Whitening { columns: jac * &metric_inv_sqrt, metric_sqrt, metric_inv_sqrt })
}

/// `ψ(x) = φ'(x)/‖φ'(x)‖` in 1-D, `∇φ(x) g_x^{-1/2}` in general.
pub fn normalized_derivative(op: &dyn MeasurementOperator, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(whitening(op, x)?.columns)
}

/// `M` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn uniform_samples(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Real-stacked Fourier coefficients `e^{−2πikx}/√(2fc+1)`, `|k| ≤ fc`.
#[derive(Clone, Debug)]
pub struct FourierLowpass {
    fc: usize,
}

pub fn fourier_lowpass_1d(fc: usize) -> Result<FourierLowpass> {
    if fc < 1 {
        return Err(Error::InvalidParam("cutoff frequency must be at least 1".into()));
    }
    Ok(FourierLowpass { fc })
}

impl FourierLowpass {
    pub fn cutoff(&self) -> usize {
        self.fc
    }

    fn eval(&self, x: f64, order: usize) -> DVector<f64> {
        let k_total = 2 * self.fc + 1;
        let scale = 1.0 / (k_total as f64).sqrt();
        let phase = order as f64 * PI / 2.0;
        let mut out = DVector::zeros(2 * k_total);
        for (i, k) in (-(self.fc as i64)..=self.fc as i64).enumerate() {
            let w = 2.0 * PI * k as f64;
            let amp = scale * w.powi(order as i32);
            let arg = w * x + phase;
            out[i] = if order == 0 || k != 0 { amp * arg.cos() } else { 0.0 };
            out[k_total + i] = if order == 0 || k != 0 { -amp * arg.sin() } else { 0.0 };
        }
        out
    }
}

impl MeasurementOperator for FourierLowpass {
    fn dims(&self) -> usize {
        1
    }

    fn measurement_dim(&self) -> usize {
        2 * (2 * self.fc + 1)
    }

    fn feature(&self, x: &[f64]) -> DVector<f64> {
        self.eval(x[0], 0)
    }

    fn dfeature(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.measurement_dim(), 1, self.eval(x[0], 1).as_slice())
    }

    fn d2feature(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::from_column_slice(self.measurement_dim(), 1, self.eval(x[0], 2).as_slice())]
    }

    fn d3feature_1d(&self, x: f64) -> Option<DVector<f64>> {
        Some(self.eval(x, 3))
    }

    fn is_normalized(&self) -> bool {
        true
    }

    fn kernel(&self) -> Option<TranslationInvariantKernel> {
        dirichlet_kernel(self.fc).ok()
    }
}

/// One axis of a separable sampling operator.
#[derive(Clone, Debug, PartialEq)]
pub enum AxisFactor {
    /// `exp(−(t − x)²/denominator)` at each sample `t`.
    Gaussian { samples: Vec<f64>, denominator: f64 },
    /// `exp(−r x)` at each sample `r`.
    Laplace { samples: Vec<f64> },
}

impl AxisFactor {
    fn len(&self) -> usize {
        match self {
            AxisFactor::Gaussian { samples, .. } | AxisFactor::Laplace { samples } => samples.len(),
        }
    }

    fn eval(&self, x: f64, order: usize) -> DVector<f64> {
        match self {
            AxisFactor::Gaussian { samples, denominator } => {
                let d = *denominator;
                DVector::from_iterator(
                    samples.len(),
                    samples.iter().map(|&t| {
                        let u = x - t;
                        let f = (-u * u / d).exp();
                        let poly = match order {
                            0 => 1.0,
                            1 => -2.0 * u / d,
                            2 => 4.0 * u * u / (d * d) - 2.0 / d,
                            3 => -8.0 * u.powi(3) / d.powi(3) + 12.0 * u / (d * d),
                            _ => unreachable!("derivative order above 3"),
                        };
                        poly * f
                    }),
                )
            }
            AxisFactor::Laplace { samples } => {
                DVector::from_iterator(samples.len(), samples.iter().map(|&r| (-r).powi(order as i32) * (-r * x).exp()))
            }
        }
    }
}

/// Tensor product of per-axis sampling factors, normalized pointwise to unit norm.
///
/// Measurement index is row-major over the axes (axis 0 slowest).
#[derive(Clone, Debug)]
pub struct SeparableOperator {
    axes: Vec<AxisFactor>,
}

impl SeparableOperator {
    pub fn new(axes: Vec<AxisFactor>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParam("operator needs at least one axis".into()));
        }
        for axis in &axes {
            if axis.len() == 0 {
                return Err(Error::InvalidParam("sample list must not be empty".into()));
            }
            match axis {
                AxisFactor::Gaussian { samples, denominator } => {
                    if !(*denominator > 0.0) || !denominator.is_finite() {
                        return Err(Error::InvalidParam("Gaussian width must be positive".into()));
                    }
                    if samples.iter().any(|t| !t.is_finite()) {
                        return Err(Error::InvalidParam("samples must be finite".into()));
                    }
                }
                AxisFactor::Laplace { samples } => {
                    if samples.iter().any(|t| !t.is_finite()) {
                        return Err(Error::InvalidParam("samples must be finite".into()));
                    }
                }
            }
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[AxisFactor] {
        &self.axes
    }

    /// Unnormalized tensor product with per-axis derivative orders.
    fn raw(&self, x: &[f64], orders: &[usize]) -> DVector<f64> {
        let mut out = DVector::from_element(1, 1.0);
        for (k, axis) in self.axes.iter().enumerate() {
            let f = axis.eval(x[k], orders[k]);
            let mut next = DVector::zeros(out.len() * f.len());
            for (i, a) in out.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    next[i * f.len() + j] = a * b;
                }
            }
            out = next;
        }
        out
    }

    fn raw_partial(&self, x: &[f64], axes: &[usize]) -> DVector<f64> {
        let mut orders = vec![0; self.axes.len()];
        for &k in axes {
            orders[k] += 1;
        }
        self.raw(x, &orders)
    }
}

/// Derivatives of `s = S^{-1/2}` from those of `S` (up to third order).
pub(crate) fn inv_sqrt_chain(s: f64, ds: &[f64]) -> [f64; 4] {
    let p = |e: f64| s.powf(e);
    let mut out = [p(-0.5), 0.0, 0.0, 0.0];
    if let Some(&d1) = ds.first() {
        out[1] = -0.5 * p(-1.5) * d1;
        if let Some(&d2) = ds.get(1) {
            out[2] = 0.75 * p(-2.5) * d1 * d1 - 0.5 * p(-1.5) * d2;
            if let Some(&d3) = ds.get(2) {
                out[3] = -15.0 / 8.0 * p(-3.5) * d1.powi(3) + 2.25 * p(-2.5) * d1 * d2 - 0.5 * p(-1.5) * d3;
            }
        }
    }
    out
}

impl MeasurementOperator for SeparableOperator {
    fn dims(&self) -> usize {
        self.axes.len()
    }

    fn measurement_dim(&self) -> usize {
        self.axes.iter().map(AxisFactor::len).product()
    }

    fn feature(&self, x: &[f64]) -> DVector<f64> {
        let g = self.raw_partial(x, &[]);
        let n = g.norm();
        g / n
    }

    fn dfeature(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dims();
        let g = self.raw_partial(x, &[]);
        let big_s = g.norm_squared();
        let s = big_s.powf(-0.5);
        let mut out = DMatrix::zeros(g.len(), d);
        for k in 0..d {
            let gk = self.raw_partial(x, &[k]);
            let sk = -0.5 * big_s.powf(-1.5) * 2.0 * g.dot(&gk);
            out.set_column(k, &(gk * s + &g * sk));
        }
        out
    }

    fn d2feature(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let d = self.dims();
        let g = self.raw_partial(x, &[]);
        let big_s = g.norm_squared();
        let grads: Vec<DVector<f64>> = (0..d).map(|k| self.raw_partial(x, &[k])).collect();
        let s = big_s.powf(-0.5);
        let s_k: Vec<f64> = grads.iter().map(|gk| -0.5 * big_s.powf(-1.5) * 2.0 * g.dot(gk)).collect();
        let big_s_k: Vec<f64> = grads.iter().map(|gk| 2.0 * g.dot(gk)).collect();
        (0..d)
            .map(|k| {
                let mut m = DMatrix::zeros(g.len(), d);
                for l in 0..d {
                    let hkl = self.raw_partial(x, &[k, l]);
                    let big_s_kl = 2.0 * (grads[k].dot(&grads[l]) + g.dot(&hkl));
                    let s_kl = 0.75 * big_s.powf(-2.5) * big_s_k[k] * big_s_k[l] - 0.5 * big_s.powf(-1.5) * big_s_kl;
                    let col = hkl * s + &grads[k] * s_k[l] + &grads[l] * s_k[k] + &g * s_kl;
                    m.set_column(l, &col);
                }
                m
            })
            .collect()
    }

    fn d3feature_1d(&self, x: f64) -> Option<DVector<f64>> {
        if self.dims() != 1 {
            return None;
        }
        let g: Vec<DVector<f64>> = (0..4).map(|o| self.raw(&[x], &[o])).collect();
        let big_s = [
            g[0].dot(&g[0]),
            2.0 * g[0].dot(&g[1]),
            2.0 * (g[1].dot(&g[1]) + g[0].dot(&g[2])),
            2.0 * (3.0 * g[1].dot(&g[2]) + g[0].dot(&g[3])),
        ];
        let s = inv_sqrt_chain(big_s[0], &big_s[1..]);
        Some(&g[3] * s[0] + &g[2] * (3.0 * s[1]) + &g[1] * (3.0 * s[2]) + &g[0] * s[3])
    }

    fn is_normalized(&self) -> bool {
        true
    }
}

/// Samples `exp(−(x − t_j)²/σ²)`, normalized per `x`.
pub fn gaussian_sampling_1d(sigma: f64, sample_points: &[f64]) -> Result<SeparableOperator> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    if sample_points.len() < 2 {
        return Err(Error::InvalidParam("need at least 2 sample points".into()));
    }
    SeparableOperator::new(vec![AxisFactor::Gaussian { samples: sample_points.to_vec(), denominator: sigma * sigma }])
}

/// Samples `exp(−(Ω_i − Ω)²/(2σ²)) exp(−R_j R)` on `(Ω, R)`, normalized per position.
pub fn gauss_laplace_separable(sigma: f64, omega_samples: &[f64], r_samples: &[f64]) -> Result<SeparableOperator> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    if omega_samples.is_empty() || r_samples.is_empty() {
        return Err(Error::InvalidParam("sample lists must not be empty".into()));
    }
    SeparableOperator::new(vec![
        AxisFactor::Gaussian { samples: omega_samples.to_vec(), denominator: 2.0 * sigma * sigma },
        AxisFactor::Laplace { samples: r_samples.to_vec() },
    ])
}

/// Three-dimensional variant: Gaussian blur in `(x₁, x₂)` and Laplace decay in depth.
pub fn gauss_laplace_3d(
    sigma: f64,
    x1_samples: &[f64],
    x2_samples: &[f64],
    depth_samples: &[f64],
) -> Result<SeparableOperator> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    if x1_samples.is_empty() || x2_samples.is_empty() || depth_samples.is_empty() {
        return Err(Error::InvalidParam("sample lists must not be empty".into()));
    }
    let denominator = 2.0 * sigma * sigma;
    SeparableOperator::new(vec![
        AxisFactor::Gaussian { samples: x1_samples.to_vec(), denominator },
        AxisFactor::Gaussian { samples: x2_samples.to_vec(), denominator },
        AxisFactor::Laplace { samples: depth_samples.to_vec() },
    ])
}
