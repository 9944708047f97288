//! `S³` as the unit quaternions, with the right-invariant frame `X_i(q) = e_i q`.
//!
//! Ambient coordinates are `(w, x, y, z)` for `q = w + x i + y j + z k`.
//! Right-invariant fields satisfy `[X_a, X_b] = −X_{[a,b]}`, so the induced
//! bracket on the model space is the quaternion commutator
//! `[e_i, e_j] = 2 ε_ijk e_k`, constant over the manifold.

use nalgebra::{DMatrix, DVector};

use super::{Block, Manifold, ManifoldDescriptor, StructureFunctions};

#[derive(Debug, Clone)]
pub struct S3 {
    desc: ManifoldDescriptor,
}

impl Default for S3 {
    fn default() -> Self {
        Self::new()
    }
}

impl S3 {
    pub fn new() -> Self {
        Self {
            desc: ManifoldDescriptor::new("s3", vec![Block::Sphere { dim: 3 }]),
        }
    }
}

/// Hamilton product of `(w, x, y, z)` quaternions.
pub fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn as_quat(x: &DVector<f64>) -> [f64; 4] {
    [x[0], x[1], x[2], x[3]]
}

/// Levi-Civita symbol on `{0, 1, 2}`.
fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl Manifold for S3 {
    fn descriptor(&self) -> &ManifoldDescriptor {
        &self.desc
    }

    fn frame_on(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let q = as_quat(x);
        let mut f = DMatrix::zeros(4, 3);
        for i in 0..3 {
            let mut unit = [0.0; 4];
            unit[i + 1] = 1.0;
            let col = quat_mul(unit, q);
            for r in 0..4 {
                f[(r, i)] = col[r];
            }
        }
        f
    }

    fn structure_functions(&self, _x: &DVector<f64>) -> Option<StructureFunctions> {
        let mut c = StructureFunctions::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    c.set(i, j, k, -2.0 * epsilon(i, j, k));
                }
            }
        }
        Some(c)
    }

    /// `q(t) = exp(tξ) q` with `exp(v) = cos|v| + sin|v| v/|v|`.
    fn closed_form_flow(
        &self,
        xi: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> Option<DVector<f64>> {
        let v = xi * t;
        let angle = v.norm();
        let sinc = if angle < 1e-8 {
            1.0 - angle * angle / 6.0
        } else {
            angle.sin() / angle
        };
        let e = [angle.cos(), sinc * v[0], sinc * v[1], sinc * v[2]];
        Some(DVector::from_column_slice(&quat_mul(e, as_quat(x))))
    }

    fn closed_form_associator(
        &self,
        _x: &DVector<f64>,
        _direction: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        Some(DVector::zeros(3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_units() {
        let i = [0.0, 1.0, 0.0, 0.0];
        let j = [0.0, 0.0, 1.0, 0.0];
        let k = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(quat_mul(i, j), k);
        assert_eq!(quat_mul(j, i), [0.0, 0.0, 0.0, -1.0]);
        assert_eq!(quat_mul(i, i), [-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn frame_at_identity_is_imaginary_units() {
        let m = S3::new();
        let s = m
            .normalize_point(&DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]))
            .unwrap();
        let f = m.frame(&s);
        let expected =
            DMatrix::from_row_slice(4, 3, &[0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1.]);
        assert_eq!(f.matrix(), &expected);
    }

    #[test]
    fn frame_is_orthonormal() {
        let m = S3::new();
        let s = m
            .normalize_point(&DVector::from_column_slice(&[0.3, -0.2, 0.5, 0.7]))
            .unwrap();
        let f = m.frame(&s);
        let g = f.matrix().transpose() * f.matrix();
        assert!((g - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }
}
