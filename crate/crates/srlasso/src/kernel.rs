//! Translation-invariant kernels `κ(x − x') = ⟨φ(x), φ(x')⟩`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Gaussian { sigma: f64 },
    Dirichlet { fc: usize },
}

/// Even kernel with `κ(0) = 1`, evaluated with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslationInvariantKernel {
    kind: Kind,
}

/// `κ(x) = exp(−x²/(2σ²))`.
pub fn gaussian_kernel(sigma: f64) -> Result<TranslationInvariantKernel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    Ok(TranslationInvariantKernel { kind: Kind::Gaussian { sigma } })
}

/// `κ(x) = Σ_{|k|≤fc} cos(2πkx) / (2fc+1)`, the kernel of the normalized Fourier lowpass map.
pub fn dirichlet_kernel(fc: usize) -> Result<TranslationInvariantKernel> {
    if fc < 1 {
        return Err(Error::InvalidParam("cutoff frequency must be at least 1".into()));
    }
    Ok(TranslationInvariantKernel { kind: Kind::Dirichlet { fc } })
}

/// Probabilists' Hermite polynomial `He_n(u)`.
pub(crate) fn hermite(n: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = u * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl TranslationInvariantKernel {
    pub fn kappa(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `κ^{(order)}(x)`.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        match self.kind {
            Kind::Gaussian { sigma } => {
                let u = x / sigma;
                let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * hermite(order, u) * (-0.5 * u * u).exp() / sigma.powi(order as i32)
            }
            Kind::Dirichlet { fc } => {
                let k_total = (2 * fc + 1) as f64;
                let phase = order as f64 * PI / 2.0;
                let mut s = if order == 0 { 1.0 } else { 0.0 };
                for k in 1..=fc {
                    let w = 2.0 * PI * k as f64;
                    s += 2.0 * w.powi(order as i32) * (w * x + phase).cos();
                }
                s / k_total
            }
        }
    }

    pub fn kappa1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }

    pub fn kappa2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }

    pub fn kappa3(&self, x: f64) -> f64 {
        self.derivative(3, x)
    }

    pub fn kappa4(&self, x: f64) -> f64 {
        self.derivative(4, x)
    }

    /// `|κ''(0)|`.
    pub fn curvature_at_zero(&self) -> f64 {
        self.derivative(2, 0.0).abs()
    }

    /// `d^n/dx^n κ̃_j(x)` with `κ̃_j = κ^{(j)} |κ''(0)|^{−j/2}`.
    pub fn normalized(&self, j: usize, n: usize, x: f64) -> f64 {
        self.derivative(j + n, x) * self.curvature_at_zero().powf(-(j as f64) / 2.0)
    }

    /// Length scale `|κ''(0)|^{−1/2}`.
    pub fn length_scale(&self) -> f64 {
        self.curvature_at_zero().powf(-0.5)
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.kind {
            Kind::Gaussian { sigma } => Some(sigma),
            Kind::Dirichlet { .. } => None,
        }
    }
}
