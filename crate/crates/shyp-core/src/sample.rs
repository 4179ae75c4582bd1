//! Deterministic sampling of unit wave covectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::WaveCovector;

/// Draws `count` uniformly distributed unit covectors on the spatial
/// sphere from a seeded stream. The same `(n_space, count, seed)` always
/// produces the same sequence.
pub fn sample_unit_covectors(n_space: usize, count: usize, seed: u64) -> Vec<WaveCovector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..n_space).map(|_| normal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
        out.push(
            WaveCovector::from_spatial(&unit)
                .expect("nonzero by construction")
                .normalized(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_normalized() {
        let a = sample_unit_covectors(3, 10, 7);
        let b = sample_unit_covectors(3, 10, 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.components(), y.components());
            assert!((x.spatial_norm() - 1.0).abs() < 1e-12);
        }
        let c = sample_unit_covectors(3, 1, 8);
        assert_ne!(a[0].components(), c[0].components());
    }
}
