//! Seeded measurement noise.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use srlasso::{forward, DiscreteMeasure, MeasurementOperator};

/// Noise standard deviation `rho_rel · ‖y₀‖ / √M`.
pub fn noise_level(y0: &DVector<f64>, rho_rel: f64) -> f64 {
    rho_rel * y0.norm() / (y0.len() as f64).sqrt()
}

/// `w` with i.i.d. `N(0, ρ²)` entries from the ChaCha8 stream `(seed, draw_index)`.
pub fn noise_vector(len: usize, rho: f64, seed: u64, draw_index: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw_index);
    DVector::from_fn(len, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        rho * g
    })
}

/// `y = Φμ₀ + w`.
pub fn generate_noisy_data(
    op: &dyn MeasurementOperator,
    mu0: &DiscreteMeasure,
    rho_rel: f64,
    seed: u64,
    draw_index: u64,
) -> srlasso::Result<DVector<f64>> {
    let y0 = forward(op, mu0)?;
    Ok(add_noise(&y0, rho_rel, seed, draw_index))
}

pub fn add_noise(y0: &DVector<f64>, rho_rel: f64, seed: u64, draw_index: u64) -> DVector<f64> {
    if rho_rel == 0.0 {
        return y0.clone();
    }
    y0 + noise_vector(y0.len(), noise_level(y0, rho_rel), seed, draw_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_level_is_exact() {
        let y0 = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(add_noise(&y0, 0.0, 7, 3), y0);
    }

    #[test]
    fn streams_are_keyed() {
        let a = noise_vector(5, 1.0, 1, 0);
        assert_eq!(a, noise_vector(5, 1.0, 1, 0));
        assert_ne!(a, noise_vector(5, 1.0, 1, 1));
        assert_ne!(a, noise_vector(5, 1.0, 2, 0));
    }
}
