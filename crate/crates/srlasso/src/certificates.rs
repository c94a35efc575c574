//! Dual certificates: minimal-norm precertificates, (IC) and nullspace checks, the
//! certificate function `f₀`, and the translation-invariant `η`/`K`/`G` analysis.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::TranslationInvariantKernel;
use crate::linalg::{condition_number, pinv_transpose_apply, singular_values};
use crate::operators::inv_sqrt_chain;
use crate::solver::DesignMatrix;
use crate::sr::SrDesign;
use crate::types::{norm, DiscreteMeasure, GroupedVector};

/// Largest condition number accepted for the `η` interpolation system.
pub const MAX_CONDITION: f64 = 1e10;
/// Default number of scan points per grid cell.
pub const DEFAULT_SCAN_RESOLUTION: usize = 200;

/// `p₀ = Γ_𝕀(Γ_𝕀ᵀΓ_𝕀)† s` with its support and sign.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub p0: DVector<f64>,
    pub support: Vec<usize>,
    /// Sign groups in the order of `support`.
    pub sign: GroupedVector,
}

pub fn minimal_norm_certificate(
    gamma: &DesignMatrix,
    support: &[usize],
    sign: &GroupedVector,
) -> Result<DualCertificate> {
    if support.is_empty() {
        return Err(Error::InvalidParam("support must not be empty".into()));
    }
    if sign.group_size() != gamma.group_size() || sign.n_groups() != support.len() {
        return Err(Error::DimMismatch { expected: support.len() * gamma.group_size(), found: sign.data().len() });
    }
    if let Some(&g) = support.iter().find(|&&g| g >= gamma.n_groups()) {
        return Err(Error::InvalidParam(format!("support index {g} out of range")));
    }
    let gi = gamma.select_groups(support);
    let p0 = pinv_transpose_apply(&gi, &DVector::from_column_slice(sign.data()));
    Ok(DualCertificate { p0, support: support.to_vec(), sign: sign.clone() })
}

/// Singular values of `a` padded with zeros to one per column, largest first.
pub fn column_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv = singular_values(a);
    sv.resize(a.ncols(), 0.0);
    sv
}

/// Sign on `support` read off a dual vector `p`: `s_i = Γ_iᵀp̂`, where `p̂` is the
/// closest point to `p` (Gauss–Newton, minimal-norm steps) with `‖Γ_iᵀp̂‖ = 1` on `support`.
pub fn solve_derived_sign(gamma: &DesignMatrix, support: &[usize], dual: &DVector<f64>) -> Result<GroupedVector> {
    if support.is_empty() {
        return Err(Error::InvalidParam("support must not be empty".into()));
    }
    if dual.len() != gamma.rows() {
        return Err(Error::DimMismatch { expected: gamma.rows(), found: dual.len() });
    }
    let blocks: Vec<DMatrix<f64>> = support.iter().map(|&g| gamma.select_groups(&[g])).collect();
    let mut p = dual.clone();
    for _ in 0..100 {
        let mut f = DVector::zeros(support.len());
        let mut jac = DMatrix::zeros(gamma.rows(), support.len());
        for (i, b) in blocks.iter().enumerate() {
            let c = b.transpose() * &p;
            f[i] = c.norm_squared() - 1.0;
            jac.set_column(i, &(b * c * 2.0));
        }
        if f.amax() < 1e-15 {
            break;
        }
        p -= pinv_transpose_apply(&jac, &f);
    }
    let q = gamma.group_size();
    let mut data = Vec::with_capacity(q * support.len());
    for b in &blocks {
        let c = b.transpose() * &p;
        let n = c.norm();
        if n < 1e-14 {
            return Err(Error::DegenerateSign);
        }
        data.extend(c.iter().map(|v| v / n));
    }
    GroupedVector::new(q, data)
}

/// Result of [`ic_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct IcReport {
    pub holds: bool,
    /// `max_{j∉𝕀} ‖Γ_jᵀp₀‖`, zero when every group is in the support.
    pub max_offsupport: f64,
    /// `max_{i∈𝕀} ‖Γ_iᵀp₀ − s_i‖`.
    pub interpolation_error: f64,
}

pub fn ic_check(cert: &DualCertificate, gamma: &DesignMatrix) -> IcReport {
    let corr = gamma.correlations(&cert.p0);
    let mut max_off: f64 = 0.0;
    for j in 0..gamma.n_groups() {
        if !cert.support.contains(&j) {
            max_off = max_off.max(corr.group_norm(j));
        }
    }
    let interp = cert
        .support
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let d: Vec<f64> = corr.group(i).iter().zip(cert.sign.group(slot)).map(|(a, b)| a - b).collect();
            norm(&d)
        })
        .fold(0.0, f64::max);
    IcReport { holds: max_off < 1.0 - 1e-9 && interp <= 1e-8, max_offsupport: max_off, interpolation_error: interp }
}

/// Result of [`nullspace_condition_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct NullspaceReport {
    pub holds: bool,
    pub smallest_sv: f64,
    pub largest_sv: f64,
}

/// Checks `ker Γ_𝕀 ∩ ker Q^⊥_{z*} = {0}` through the stacked map `v ↦ (Γ_𝕀 v, Q^⊥ v)`.
pub fn nullspace_condition_check(gamma_i: &DMatrix<f64>, z_star: &GroupedVector) -> Result<NullspaceReport> {
    let q = z_star.group_size();
    let m = z_star.data().len();
    if gamma_i.ncols() != m {
        return Err(Error::DimMismatch { expected: m, found: gamma_i.ncols() });
    }
    let u = z_star.group_sign()?;
    let mut stacked = DMatrix::zeros(gamma_i.nrows() + m, m);
    stacked.view_mut((0, 0), (gamma_i.nrows(), m)).copy_from(gamma_i);
    for g in 0..z_star.n_groups() {
        let ug = DVector::from_column_slice(u.group(g));
        let block = DMatrix::identity(q, q) - &ug * ug.transpose();
        stacked.view_mut((gamma_i.nrows() + g * q, g * q), (q, q)).copy_from(&block);
    }
    let sv = singular_values(&stacked);
    let largest = sv.first().copied().unwrap_or(0.0);
    let smallest = if sv.len() < m { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
    Ok(NullspaceReport { holds: smallest > 1e-8 * largest, smallest_sv: smallest, largest_sv: largest })
}

/// Minimal-norm certificate attached to an SR-Lasso design, with `f₀(x) = ‖γ(x)ᵀp₀‖²`.
#[derive(Clone, Debug)]
pub struct SrCertificate {
    design: SrDesign,
    cert: DualCertificate,
}

impl SrCertificate {
    pub fn new(design: &SrDesign, support: &[usize], sign: &GroupedVector) -> Result<Self> {
        let cert = minimal_norm_certificate(design.matrix(), support, sign)?;
        Ok(Self { design: design.clone(), cert })
    }

    /// Certificate whose sign comes from the nearest-node Taylor coefficients of `mu0`.
    pub fn for_measure(design: &SrDesign, mu0: &DiscreteMeasure) -> Result<Self> {
        let (support, sign) = taylor_sign(design, mu0)?;
        Self::new(design, &support, &sign)
    }

    pub fn certificate(&self) -> &DualCertificate {
        &self.cert
    }

    pub fn design(&self) -> &SrDesign {
        &self.design
    }

    pub fn support(&self) -> &[usize] {
        &self.cert.support
    }

    pub fn ic_check(&self) -> IcReport {
        ic_check(&self.cert, self.design.matrix())
    }

    /// `f₀(x)` in any dimension.
    pub fn f0(&self, x: &[f64]) -> Result<f64> {
        let op = self.design.operator();
        let p = &self.cert.p0;
        let eta = op.feature(x).dot(p);
        let w = crate::operators::normalized_derivative(op, x)?;
        let xi = w.tr_mul(p);
        Ok(eta * eta + xi.iter().zip(self.design.tau()).map(|(v, t)| t * t * v * v).sum::<f64>())
    }

    /// `(f₀, f₀', f₀'')` at `x` for a 1-D design.
    pub fn f0_jet_1d(&self, x: f64) -> Result<[f64; 3]> {
        let op = self.design.operator();
        if op.dims() != 1 {
            return Err(Error::DimUnsupported { supported: 1, found: op.dims() });
        }
        let d3 = op.d3feature_1d(x).ok_or_else(|| Error::InvalidParam("operator lacks a third derivative".into()))?;
        let d0 = op.feature(&[x]);
        let d1 = op.dfeature(&[x]).column(0).into_owned();
        let d2 = op.d2feature(&[x])[0].column(0).into_owned();
        let p = &self.cert.p0;
        let e = [d0.dot(p), d1.dot(p), d2.dot(p), d3.dot(p)];
        let big_p = [d1.dot(&d1), 2.0 * d1.dot(&d2), 2.0 * (d2.dot(&d2) + d1.dot(&d3))];
        if !(big_p[0].sqrt() > crate::operators::DERIVATIVE_RANK_TOL) {
            return Err(Error::DegenerateDerivative { position: vec![x] });
        }
        let s = inv_sqrt_chain(big_p[0], &big_p[1..]);
        let xi = [e[1] * s[0], e[2] * s[0] + e[1] * s[1], e[3] * s[0] + 2.0 * e[2] * s[1] + e[1] * s[2]];
        let t2 = self.design.tau()[0].powi(2);
        Ok([
            e[0] * e[0] + t2 * xi[0] * xi[0],
            2.0 * e[0] * e[1] + 2.0 * t2 * xi[0] * xi[1],
            2.0 * (e[1] * e[1] + e[0] * e[2]) + 2.0 * t2 * (xi[1] * xi[1] + xi[0] * xi[2]),
        ])
    }

    /// Quantitative non-degeneracy scan of a 1-D certificate.
    pub fn diagnostics(&self, r: f64, scan_resolution: usize) -> Result<CertificateDiagnostics> {
        certificate_diagnostics(self, r, scan_resolution)
    }
}

/// Support (sorted node indices) and unit sign groups induced by `mu0`'s nearest-node decomposition.
pub fn taylor_sign(design: &SrDesign, mu0: &DiscreteMeasure) -> Result<(Vec<usize>, GroupedVector)> {
    let grid = design.grid();
    if mu0.dims() != grid.dims() {
        return Err(Error::DimMismatch { expected: grid.dims(), found: mu0.dims() });
    }
    if mu0.is_empty() {
        return Err(Error::InvalidParam("measure has no atoms".into()));
    }
    let mut entries: Vec<(usize, Vec<f64>)> = Vec::new();
    for atom in mu0.atoms() {
        let (j, t) = grid.nearest_node(&atom.position);
        if entries.iter().any(|(k, _)| *k == j) {
            return Err(Error::InvalidParam(format!("two atoms share grid node {j}")));
        }
        entries.push((j, design.coefficients_for_shift(j, atom.amplitude, &t)));
    }
    entries.sort_by_key(|(j, _)| *j);
    let support = entries.iter().map(|(j, _)| *j).collect();
    let data = entries.into_iter().flat_map(|(_, c)| c).collect();
    let sign = GroupedVector::new(design.group_size(), data)?.group_sign()?;
    Ok((support, sign))
}

/// `f₀` (order 0, any dimension) or its derivatives (orders 1 and 2, 1-D only).
pub fn f0_eval(cert: &SrCertificate, x: &[f64], order: usize) -> Result<f64> {
    match order {
        0 => cert.f0(x),
        1 | 2 => Ok(cert.f0_jet_1d(x[0])?[order]),
        _ => Err(Error::InvalidParam(format!("derivative order {order} not supported"))),
    }
}

/// Scan summary of `f₀` near and away from the support nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateDiagnostics {
    /// `max_{i∈𝕀} |f₀'(x_i)|`.
    pub eps1: f64,
    /// `−max f₀''` over the `r`-neighborhoods of the support.
    pub curvature: f64,
    /// `1 − max f₀` outside the `r`-neighborhoods.
    pub mu: f64,
    pub r: f64,
    /// Off-support grid nodes with `f₀ ≥ 1`.
    pub degenerate_points: Vec<usize>,
    /// Largest `f₀` over off-support grid nodes.
    pub offsupport_node_max: f64,
    /// Largest `f₀` over the whole scan.
    pub scan_max: f64,
}

impl CertificateDiagnostics {
    /// (IC) on the grid: every off-support node has `f₀ < 1`.
    pub fn ic_holds(&self) -> bool {
        self.degenerate_points.is_empty()
    }

    /// Off-support nodes reach 1, or `f₀` reaches 1 away from the support.
    pub fn degenerate(&self) -> bool {
        !self.degenerate_points.is_empty() || self.mu <= 0.0
    }
}

pub fn certificate_diagnostics(cert: &SrCertificate, r: f64, scan_resolution: usize) -> Result<CertificateDiagnostics> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("radius must be positive, got {r}")));
    }
    if scan_resolution < 100 {
        return Err(Error::InvalidParam("scan resolution must be at least 100 points per cell".into()));
    }
    let grid = cert.design.grid();
    if grid.dims() != 1 {
        return Err(Error::DimUnsupported { supported: 1, found: grid.dims() });
    }
    let h = grid.spacing(0);
    let origin = grid.origin()[0];
    let support_x: Vec<f64> = cert.support().iter().map(|&j| grid.node(j)[0]).collect();

    let eps1 = support_x
        .iter()
        .map(|&x| cert.f0_jet_1d(x).map(|j| j[1].abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let total = grid.len() * scan_resolution;
    let jets = (0..=total)
        .into_par_iter()
        .map(|i| {
            let x = origin + h * i as f64 / scan_resolution as f64;
            cert.f0_jet_1d(x).map(|j| (x, j))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut near_max_d2 = f64::NEG_INFINITY;
    let mut far_max = f64::NEG_INFINITY;
    let mut scan_max = f64::NEG_INFINITY;
    for (x, jet) in &jets {
        scan_max = scan_max.max(jet[0]);
        if support_x.iter().any(|s| (x - s).abs() <= r) {
            near_max_d2 = near_max_d2.max(jet[2]);
        } else {
            far_max = far_max.max(jet[0]);
        }
    }
    for &s in &support_x {
        near_max_d2 = near_max_d2.max(cert.f0_jet_1d(s)?[2]);
    }

    let mut degenerate_points = Vec::new();
    let mut node_max = f64::NEG_INFINITY;
    for j in 0..grid.len() {
        if cert.support().contains(&j) {
            continue;
        }
        let v = cert.f0(&grid.node(j))?;
        node_max = node_max.max(v);
        if v >= 1.0 {
            degenerate_points.push(j);
        }
    }
    Ok(CertificateDiagnostics {
        eps1,
        curvature: -near_max_d2,
        mu: if far_max.is_finite() { 1.0 - far_max } else { 1.0 },
        r,
        degenerate_points,
        offsupport_node_max: if node_max.is_finite() { node_max } else { 0.0 },
        scan_max,
    })
}

/// Value with first and second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.value, c * self.d1, c * self.d2)
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Component `order` (0, 1 or 2).
    pub fn get(&self, order: usize) -> f64 {
        match order {
            0 => self.value,
            1 => self.d1,
            2 => self.d2,
            _ => panic!("jet order {order} out of range"),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )
    }
}

/// Jet of `κ̃_j` at `x`.
fn kernel_jet(kernel: &TranslationInvariantKernel, j: usize, x: f64) -> Jet {
    Jet::new(kernel.normalized(j, 0, x), kernel.normalized(j, 1, x), kernel.normalized(j, 2, x))
}

/// Coefficients of `η(x) = Σ_j u_j κ(x − x_j) + τ v_j κ̃₁(x_j − x)` interpolating `(s_a, s_b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaCertificate {
    pub kernel: TranslationInvariantKernel,
    pub positions: Vec<f64>,
    pub tau: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

/// The `2m × 2m` matrix `Υ = [[A, B], [Bᵀ, D]]` of inner products of `(φ, τψ)` at the support.
pub fn upsilon(kernel: &TranslationInvariantKernel, positions: &[f64], tau: f64) -> DMatrix<f64> {
    let m = positions.len();
    let mut ups = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let xi = positions[i];
            let xj = positions[j];
            ups[(i, j)] = kernel.kappa(xi - xj);
            ups[(i, m + j)] = tau * kernel.normalized(1, 0, xj - xi);
            ups[(m + i, j)] = tau * kernel.normalized(1, 0, xi - xj);
            ups[(m + i, m + j)] = -tau * tau * kernel.normalized(2, 0, xi - xj);
        }
    }
    ups
}

pub fn eta_coefficients(
    kernel: &TranslationInvariantKernel,
    positions: &[f64],
    s_a: &[f64],
    s_b: &[f64],
    tau: f64,
) -> Result<EtaCertificate> {
    let m = positions.len();
    if m == 0 {
        return Err(Error::InvalidParam("need at least one position".into()));
    }
    if s_a.len() != m || s_b.len() != m {
        return Err(Error::DimMismatch { expected: m, found: s_a.len().min(s_b.len()) });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("tau must be positive, got {tau}")));
    }
    let ups = upsilon(kernel, positions, tau);
    let condition = condition_number(&ups);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularGram { condition });
    }
    let rhs = DVector::from_iterator(2 * m, s_a.iter().chain(s_b).copied());
    let sol = ups.lu().solve(&rhs).ok_or(Error::SingularGram { condition })?;
    Ok(EtaCertificate {
        kernel: *kernel,
        positions: positions.to_vec(),
        tau,
        u: sol.rows(0, m).into_owned(),
        v: sol.rows(m, m).into_owned(),
    })
}

impl EtaCertificate {
    /// `η^{(order)}(x)` for `order ≤ 3`.
    pub fn eta(&self, x: f64, order: usize) -> f64 {
        let k = &self.kernel;
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.positions
            .iter()
            .enumerate()
            .map(|(j, &xj)| {
                self.u[j] * k.derivative(order, x - xj) + sign * self.tau * self.v[j] * k.normalized(1, order, xj - x)
            })
            .sum()
    }

    /// `f₀ = η² + τ²η'²/|κ''(0)|` and its derivatives up to order 2.
    pub fn f0(&self, x: f64, order: usize) -> f64 {
        let e = Jet::new(self.eta(x, 0), self.eta(x, 1), self.eta(x, 2));
        let de = Jet::new(self.eta(x, 1), self.eta(x, 2), self.eta(x, 3));
        let c = self.kernel.curvature_at_zero();
        (e.square() + de.square().scale(self.tau * self.tau / c)).get(order)
    }
}

/// `K₀, K₁, K₂` built from `κ̃₀, κ̃₁, κ̃₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KFunctions {
    pub kernel: TranslationInvariantKernel,
    pub tau: f64,
}

pub fn k_functions(kernel: &TranslationInvariantKernel, tau: f64) -> Result<KFunctions> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("tau must be positive, got {tau}")));
    }
    Ok(KFunctions { kernel: *kernel, tau })
}

impl KFunctions {
    /// `κ² + τ²κ̃₁²`.
    pub fn k0(&self, x: f64) -> Jet {
        let k0 = kernel_jet(&self.kernel, 0, x);
        let k1 = kernel_jet(&self.kernel, 1, x);
        k0.square() + k1.square().scale(self.tau * self.tau)
    }

    /// `κ̃₁(κ + τ²κ̃₂)`.
    pub fn k1(&self, x: f64) -> Jet {
        let k0 = kernel_jet(&self.kernel, 0, x);
        let k1 = kernel_jet(&self.kernel, 1, x);
        let k2 = kernel_jet(&self.kernel, 2, x);
        k1 * (k0 + k2.scale(self.tau * self.tau))
    }

    /// `τ^{−2}(κ̃₁² + τ²κ̃₂²)`.
    pub fn k2(&self, x: f64) -> Jet {
        let k1 = kernel_jet(&self.kernel, 1, x);
        let k2 = kernel_jet(&self.kernel, 2, x);
        k1.square().scale(1.0 / (self.tau * self.tau)) + k2.square()
    }
}

/// `G(x) = s_a²(K₀ − 2γK₁) + s_b²K₂` with `γ = s_b/(s_a τ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GFunction {
    pub k: KFunctions,
    pub s_a: f64,
    pub s_b: f64,
    pub gamma: f64,
}

pub fn g_function(kernel: &TranslationInvariantKernel, tau: f64, s_a: f64, s_b: f64) -> Result<GFunction> {
    if ((s_a * s_a + s_b * s_b) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParam("sign pair must have unit norm".into()));
    }
    if s_a.abs() < 1e-12 {
        return Err(Error::DegenerateSign);
    }
    let k = k_functions(kernel, tau)?;
    Ok(GFunction { k, s_a, s_b, gamma: s_b / (s_a * tau) })
}

impl GFunction {
    pub fn eval(&self, x: f64) -> Jet {
        let a2 = self.s_a * self.s_a;
        (self.k.k0(x) - self.k.k1(x).scale(2.0 * self.gamma)).scale(a2) + self.k.k2(x).scale(self.s_b * self.s_b)
    }

    /// `G(x) = g(x)² + τ²g'(x)²/|κ''(0)|` with `g = s_a κ − s_b τ^{−1} κ̃₁`.
    pub fn eval_from_g(&self, x: f64) -> f64 {
        let k = &self.k.kernel;
        let tau = self.k.tau;
        let g = self.s_a * k.kappa(x) - self.s_b / tau * k.normalized(1, 0, x);
        let dg = self.s_a * k.kappa1(x) - self.s_b / tau * k.normalized(1, 1, x);
        g * g + tau * tau * dg * dg / k.curvature_at_zero()
    }

    /// Closed form `G'(0) = (2/τ) s_a s_b |κ''(0)|^{1/2} (1 − τ²)`.
    pub fn d1_at_zero_formula(&self) -> f64 {
        let tau = self.k.tau;
        2.0 / tau * self.s_a * self.s_b * self.k.kernel.curvature_at_zero().sqrt() * (1.0 - tau * tau)
    }

    /// Closed form `G''(0) = 2κ''(0)(s_a²(1 − τ²) + s_b²(κ''''(0)/κ''(0)² − τ^{−2}))`.
    pub fn d2_at_zero_formula(&self) -> f64 {
        let k = &self.k.kernel;
        let tau = self.k.tau;
        let k2 = k.kappa2(0.0);
        let k4 = k.kappa4(0.0);
        2.0 * k2 * (self.s_a.powi(2) * (1.0 - tau * tau) + self.s_b.powi(2) * (k4 / (k2 * k2) - 1.0 / (tau * tau)))
    }
}

/// Worst-case tail sum `max_{ℓ≤4} Σ_{i=1}^{n} |κ̃_ℓ(iΔ/2)|` for minimum separation `Δ`.
pub fn delta_min(kernel: &TranslationInvariantKernel, positions: &[f64], n_terms: usize) -> Result<f64> {
    if positions.len() < 2 {
        return Err(Error::InvalidParam("need at least two positions".into()));
    }
    let mut sep = f64::INFINITY;
    for i in 0..positions.len() {
        for j in 0..i {
            sep = sep.min((positions[i] - positions[j]).abs());
        }
    }
    if !(sep > 0.0) {
        return Err(Error::InvalidParam("positions coincide".into()));
    }
    Ok(delta_for_separation(kernel, sep, n_terms))
}

/// [`delta_min`] for a given separation.
pub fn delta_for_separation(kernel: &TranslationInvariantKernel, separation: f64, n_terms: usize) -> f64 {
    (0..=4)
        .map(|l| (1..=n_terms).map(|i| kernel.normalized(l, 0, i as f64 * separation / 2.0).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Right-hand sides of the coefficient bounds
/// `‖u − s_a‖∞ ≤ δ/(1−2δ)(‖s_a‖∞ + ‖s_b‖∞/τ)` and `‖v − τ^{−2}s_b‖∞ ≤ δ/(1−2δ)(‖s_b‖∞/τ² + ‖s_a‖∞/τ)`.
pub fn coefficient_bounds(delta: f64, s_a: &[f64], s_b: &[f64], tau: f64) -> (f64, f64) {
    let a = s_a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b = s_b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = delta / (1.0 - 2.0 * delta);
    (c * (a + b / tau), c * (b / (tau * tau) + a / tau))
}

/// Margins of the curvature and far-field conditions on `K₀, K₁, K₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThmGReport {
    pub k0_curvature_at_zero: f64,
    pub k2_curvature_at_zero: f64,
    /// `min_{|x|≤r, ±γ} (K₀'' − 2γK₁'')(x)/K₀''(0)`, i.e. `1 − δ` for the first curvature bound.
    pub k0_curvature_ratio: f64,
    /// `min_{|x|≤r} K₂''(x)/K₂''(0)`.
    pub k2_curvature_ratio: f64,
    /// `max_{|x|≥r, ±γ} |K₀ − 2γK₁|`.
    pub far_k0_max: f64,
    /// `max_{|x|≥r} |K₂|`.
    pub far_k2_max: f64,
    pub k0_curvature_holds: bool,
    pub k2_curvature_holds: bool,
    pub far_k0_holds: bool,
    pub far_k2_holds: bool,
}

impl ThmGReport {
    pub fn holds(&self) -> bool {
        self.k0_curvature_holds && self.k2_curvature_holds && self.far_k0_holds && self.far_k2_holds
    }
}

/// Scans the curvature conditions on `[−r, r]` and the far-field conditions on
/// `r ≤ |x| ≤ 12 |κ''(0)|^{−1/2}` at `γ = ±gamma_bound`.
pub fn thm_g_condition_check(
    kernel: &TranslationInvariantKernel,
    tau: f64,
    gamma_bound: f64,
    r: f64,
    scan_resolution: usize,
) -> Result<ThmGReport> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParam(format!("tau must lie in (0, 1], got {tau}")));
    }
    if !(gamma_bound >= 0.0) || !(r > 0.0) || scan_resolution < 2 {
        return Err(Error::InvalidParam("gamma bound, radius or resolution out of range".into()));
    }
    let k = k_functions(kernel, tau)?;
    let k0c = k.k0(0.0).d2;
    let k2c = k.k2(0.0).d2;
    let gammas = [gamma_bound, -gamma_bound];

    let mut r0 = f64::INFINITY;
    let mut r2 = f64::INFINITY;
    for i in 0..=2 * scan_resolution {
        let x = -r + r * i as f64 / scan_resolution as f64;
        let (a, b) = (k.k0(x).d2, k.k1(x).d2);
        for g in gammas {
            r0 = r0.min((a - 2.0 * g * b) / k0c);
        }
        r2 = r2.min(k.k2(x).d2 / k2c);
    }

    let far_end = 12.0 * kernel.length_scale();
    let far_points = scan_resolution * ((far_end / r).ceil() as usize).max(1);
    let mut f0 = 0.0f64;
    let mut f2 = 0.0f64;
    for i in 0..=far_points {
        let x = r + (far_end - r) * i as f64 / far_points as f64;
        for s in [x, -x] {
            let (a, b) = (k.k0(s).value, k.k1(s).value);
            for g in gammas {
                f0 = f0.max((a - 2.0 * g * b).abs());
            }
            f2 = f2.max(k.k2(s).value.abs());
        }
    }
    Ok(ThmGReport {
        k0_curvature_at_zero: k0c,
        k2_curvature_at_zero: k2c,
        k0_curvature_ratio: r0,
        k2_curvature_ratio: r2,
        far_k0_max: f0,
        far_k2_max: f2,
        k0_curvature_holds: k0c < 0.0 && r0 > 0.0,
        k2_curvature_holds: k2c < 0.0 && r2 > 0.0,
        far_k0_holds: f0 < 1.0,
        far_k2_holds: f2 < 1.0,
    })
}

/// Closed forms of `K̂_j(u) = K_j(σu)` for the Gaussian kernel.
pub mod gaussian {
    /// `K̂₀(u) = (τ²u² + 1)e^{−u²}`.
    pub fn k0_hat(tau: f64, u: f64) -> f64 {
        (tau * tau * u * u + 1.0) * (-u * u).exp()
    }

    /// `K̂₁(u) = −u(τ²u² + 1 − τ²)e^{−u²}`.
    pub fn k1_hat(tau: f64, u: f64) -> f64 {
        let t2 = tau * tau;
        -u * (t2 * u * u + 1.0 - t2) * (-u * u).exp()
    }

    /// `K̂₂(u) = τ^{−2}(τ²(u² − 1)² + u²)e^{−u²}`.
    pub fn k2_hat(tau: f64, u: f64) -> f64 {
        let t2 = tau * tau;
        (t2 * (u * u - 1.0).powi(2) + u * u) * (-u * u).exp() / t2
    }

    /// `K̂₀''(u) = (4τ²u⁴ + (4 − 10τ²)u² − 2 + 2τ²)e^{−u²}`.
    pub fn k0_hat_d2(tau: f64, u: f64) -> f64 {
        let t2 = tau * tau;
        (4.0 * t2 * u.powi(4) + (4.0 - 10.0 * t2) * u * u - 2.0 + 2.0 * t2) * (-u * u).exp()
    }

    /// `K̂₁''(u) = −2u(2τ²u⁴ + (2 − 9τ²)u² + 6τ² − 3)e^{−u²}`.
    pub fn k1_hat_d2(tau: f64, u: f64) -> f64 {
        let t2 = tau * tau;
        -2.0 * u * (2.0 * t2 * u.powi(4) + (2.0 - 9.0 * t2) * u * u + 6.0 * t2 - 3.0) * (-u * u).exp()
    }

    /// `K̂₂''(u) = τ^{−2}(4τ²u⁶ + (4 − 26τ²)u⁴ + (36τ² − 10)u² − 6τ² + 2)e^{−u²}`.
    pub fn k2_hat_d2(tau: f64, u: f64) -> f64 {
        let t2 = tau * tau;
        (4.0 * t2 * u.powi(6) + (4.0 - 26.0 * t2) * u.powi(4) + (36.0 * t2 - 10.0) * u * u - 6.0 * t2 + 2.0)
            * (-u * u).exp()
            / t2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gaussian_kernel;

    #[test]
    fn orthonormal_support_certificate() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let gamma = DesignMatrix::new(a, 1).unwrap();
        let sign = GroupedVector::new(1, vec![1.0, -1.0]).unwrap();
        let cert = minimal_norm_certificate(&gamma, &[0, 2], &sign).unwrap();
        assert!((cert.p0.clone() - DVector::from_vec(vec![1.0, 0.0, -1.0])).norm() < 1e-14);
        let rep = ic_check(&cert, &gamma);
        assert!(rep.holds && rep.max_offsupport < 1e-14);
    }

    #[test]
    fn ic_check_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.8, 1.0]);
        let gamma = DesignMatrix::new(a, 1).unwrap();
        let cert = minimal_norm_certificate(&gamma, &[0, 1], &GroupedVector::new(1, vec![1.0, 1.0]).unwrap()).unwrap();
        let rep = ic_check(&cert, &gamma);
        assert!(rep.holds && rep.max_offsupport == 0.0);

        let dup = DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.8, 0.8]);
        let gamma = DesignMatrix::new(dup, 1).unwrap();
        let cert = minimal_norm_certificate(&gamma, &[0], &GroupedVector::new(1, vec![1.0]).unwrap()).unwrap();
        let rep = ic_check(&cert, &gamma);
        assert!((rep.max_offsupport - 1.0).abs() < 1e-12 && !rep.holds);
    }

    #[test]
    fn nullspace_examples() {
        let z = GroupedVector::new(2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let inj = DMatrix::from_fn(6, 4, |i, j| if i == j { 1.0 } else { 0.1 * (i + j) as f64 });
        assert!(nullspace_condition_check(&inj, &z).unwrap().holds);
        let zero = DMatrix::zeros(3, 4);
        let rep = nullspace_condition_check(&zero, &z).unwrap();
        assert!(!rep.holds && rep.smallest_sv < 1e-12);
        let bad = GroupedVector::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(nullspace_condition_check(&zero, &bad), Err(Error::ZeroGroup { .. })));
    }

    #[test]
    fn eta_single_spike() {
        let k = gaussian_kernel(0.1).unwrap();
        let e = eta_coefficients(&k, &[0.3], &[1.0], &[0.0], 0.8).unwrap();
        assert!((e.u[0] - 1.0).abs() < 1e-14 && e.v[0].abs() < 1e-14);
        assert!((e.f0(0.3, 0) - 1.0).abs() < 1e-14);
        assert!(matches!(
            eta_coefficients(&k, &[0.3, 0.3], &[1.0, 1.0], &[0.0, 0.0], 0.8),
            Err(Error::SingularGram { .. })
        ));
    }

    #[test]
    fn k_functions_at_zero() {
        for k in [gaussian_kernel(0.2).unwrap(), crate::kernel::dirichlet_kernel(3).unwrap()] {
            let kf = k_functions(&k, 0.7).unwrap();
            assert!((kf.k0(0.0).value - 1.0).abs() < 1e-12);
            assert!((kf.k2(0.0).value - 1.0).abs() < 1e-12);
            assert!(kf.k1(0.0).value.abs() < 1e-12);
        }
    }

    #[test]
    fn g_function_properties() {
        let k = gaussian_kernel(0.3).unwrap();
        let (sa, sb) = (0.8, 0.6);
        for tau in [0.6, 0.9, 1.0] {
            let g = g_function(&k, tau, sa, sb).unwrap();
            let j = g.eval(0.0);
            assert!((j.value - 1.0).abs() < 1e-12);
            assert!((j.d1 - g.d1_at_zero_formula()).abs() < 1e-10 * g.d1_at_zero_formula().abs().max(1.0));
            assert!((j.d2 - g.d2_at_zero_formula()).abs() < 1e-10 * j.d2.abs());
            for x in [-0.5, 0.1, 0.4] {
                assert!((g.eval(x).value - g.eval_from_g(x)).abs() < 1e-12);
            }
        }
        assert!(matches!(g_function(&k, 1.0, 0.0, 1.0), Err(Error::DegenerateSign)));
    }

    #[test]
    fn delta_min_decreases_with_separation() {
        let s = 0.07;
        let k = gaussian_kernel(s).unwrap();
        let d4 = delta_min(&k, &[0.0, 4.0 * s], 2).unwrap();
        let d6 = delta_min(&k, &[0.0, 6.0 * s], 2).unwrap();
        assert!(d6 < d4);
        assert!(delta_min(&k, &[0.0, 100.0], 2).unwrap() < 1e-12);
        assert!(delta_min(&k, &[0.1, 0.1], 2).is_err());
    }
}
