//! Maximum mean discrepancy between discrete measures.

use crate::error::{Error, Result};
use crate::operators::{forward, MeasurementOperator};
use crate::types::{Atom, DiscreteMeasure};

/// `k(x, y) = exp(−‖x − y‖₂)`.
pub fn laplace_kernel(x: &[f64], y: &[f64]) -> f64 {
    (-x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).exp()
}

/// Atoms of `μ − ν`, merged at coincident positions.
fn difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if mu.dims() != nu.dims() {
        return Err(Error::DimMismatch { expected: mu.dims(), found: nu.dims() });
    }
    let atoms =
        mu.atoms().iter().cloned().chain(nu.atoms().iter().map(|a| Atom::new(a.position.clone(), -a.amplitude)));
    DiscreteMeasure::merged(mu.dims(), atoms)
}

fn double_sum(xi: &DiscreteMeasure, k: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let atoms = xi.atoms();
    let mut total = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        total += a.amplitude * a.amplitude * k(&a.position, &a.position);
        for b in &atoms[..i] {
            total += 2.0 * a.amplitude * b.amplitude * k(&a.position, &b.position);
        }
    }
    total
}

/// `D(μ, ν) = ‖μ − ν‖_k²` with the Laplace kernel.
pub fn mmd_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(double_sum(&difference(mu, nu)?, laplace_kernel))
}

/// `(‖Φμ − Φμ₀‖², ‖μ − μ₀‖²_{k₀})` with `k₀(x, x') = ⟨φ(x), φ(x')⟩`, computed independently.
pub fn loss_kernel_mmd_identity_check(
    op: &dyn MeasurementOperator,
    mu: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
) -> Result<(f64, f64)> {
    let lhs = (forward(op, mu)? - forward(op, mu0)?).norm_squared();
    let rhs = double_sum(&difference(mu, mu0)?, |x, y| op.feature(x).dot(&op.feature(y)));
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fourier_lowpass_1d;

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_pairs_1d(pairs).unwrap()
    }

    #[test]
    fn examples() {
        let mu = m(&[(0.2, 1.5), (0.7, -0.4)]);
        assert_eq!(mmd_distance(&mu, &mu).unwrap(), 0.0);
        let d = mmd_distance(&m(&[(0.0, 1.0)]), &m(&[(1.0, 1.0)])).unwrap();
        assert!((d - (2.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((d - 1.2642411).abs() < 1e-7);
        let d = mmd_distance(&m(&[(0.0, 1.0)]), &m(&[(0.0, 2.0)])).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let two_d = DiscreteMeasure::new(2, vec![Atom::new(vec![0.0, 0.0], 1.0)]).unwrap();
        assert!(matches!(mmd_distance(&mu, &two_d), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn translation_invariant_single_atoms() {
        let op = fourier_lowpass_1d(3).unwrap();
        let k = crate::operators::MeasurementOperator::kernel(&op).unwrap();
        let (lhs, rhs) = loss_kernel_mmd_identity_check(&op, &m(&[(0.1, 1.0)]), &m(&[(0.35, 1.0)])).unwrap();
        let expected = 2.0 - 2.0 * k.kappa(0.1 - 0.35);
        assert!((lhs - expected).abs() < 1e-12 && (rhs - expected).abs() < 1e-12);
        let mu = m(&[(0.1, 1.0), (0.5, 2.0)]);
        let (lhs, rhs) = loss_kernel_mmd_identity_check(&op, &mu, &mu).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn monotone_in_separation() {
        let mut prev = -1.0;
        for i in 0..=30 {
            let t = 0.1 * i as f64;
            let d = if t == 0.0 { 0.0 } else { mmd_distance(&m(&[(0.0, 1.0)]), &m(&[(t, 1.0)])).unwrap() };
            assert!(d > prev);
            prev = d;
        }
    }
}
