//! Seeded random sampling of points and algebra elements.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::element::AlgebraElement;
pub use crate::manifolds::random_element;
use crate::point::Point;
use crate::ParallelizedManifold;

/// Deterministic generator for a seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` uniformly distributed points.
pub fn random_points(pm: &ParallelizedManifold, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..count)
        .map(|_| pm.manifold().random_point(rng))
        .collect()
}

/// `count` elements with coefficients uniform in `[-scale, scale]`.
pub fn random_elements(
    dim: usize,
    count: usize,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<AlgebraElement> {
    (0..count)
        .map(|_| random_element(dim, scale, rng))
        .collect()
}

/// Haar-distributed rotation in `SO(dim)`.
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_samples() {
        let pm = ParallelizedManifold::from_key("sphere_circle4").unwrap();
        let a = random_points(&pm, 5, &mut seeded(42));
        let b = random_points(&pm, 5, &mut seeded(42));
        assert_eq!(a, b);
        let c = random_points(&pm, 5, &mut seeded(43));
        assert_ne!(a, c);
        let e = random_elements(5, 3, 0.5, &mut seeded(1));
        assert!(e.iter().all(|x| x.coeffs().amax() <= 0.5));
    }

    #[test]
    fn rotations_are_special_orthogonal() {
        let mut rng = seeded(3);
        for dim in [2, 3, 5] {
            let q = random_rotation(dim, &mut rng);
            assert!(crate::linalg::orthogonality_residual(&q) < 1e-12);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
