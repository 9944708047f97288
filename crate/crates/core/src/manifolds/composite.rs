//! `S^m × N` for a parallelized `N` with frame `{T_A}`.
//!
//! The distinguished field `T = T_1` of `N` is absorbed into the sphere frame:
//! `f_i = M_i + x_i T`, and the frame of the product is
//! `{f_1, …, f_{m+1}, T_2, …, T_n}`. Closed-form brackets are available
//! whenever `N` provides its structure functions `D_AB^C`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::sphere_circle::sphere_structure;
use super::{
    write_sphere_projection, Block, Manifold, ManifoldDescriptor, SphereCircle, StructureFunctions,
};

#[derive(Debug, Clone)]
pub struct SphereProduct {
    m: usize,
    inner: Arc<dyn Manifold>,
    desc: ManifoldDescriptor,
}

impl SphereProduct {
    pub fn new(id: impl Into<Arc<str>>, m: usize, inner: Arc<dyn Manifold>) -> Self {
        assert!(m >= 1, "sphere dimension must be positive");
        let mut blocks = vec![Block::Sphere { dim: m }];
        blocks.extend_from_slice(&inner.descriptor().blocks);
        Self {
            m,
            inner,
            desc: ManifoldDescriptor::new(id, blocks),
        }
    }

    /// `S^m × S^n × S¹`, with `N = S^n × S¹` carrying its own sphere-circle frame.
    pub fn sphere_sphere_circle(m: usize, n: usize) -> Self {
        Self::new(
            format!("sphere_sphere_circle{m}_{n}"),
            m,
            Arc::new(SphereCircle::new(n)),
        )
    }

    pub fn sphere_dim(&self) -> usize {
        self.m
    }

    pub fn inner(&self) -> &Arc<dyn Manifold> {
        &self.inner
    }

    fn split<'a>(&self, x: &'a DVector<f64>) -> (&'a [f64], DVector<f64>) {
        let len = self.m + 1;
        (
            &x.as_slice()[..len],
            x.rows(len, x.len() - len).into_owned(),
        )
    }

    /// Frame index of the inner field `T_a` (`a ≥ 1`, zero-based).
    fn inner_index(&self, a: usize) -> usize {
        self.m + a
    }
}

impl Manifold for SphereProduct {
    fn descriptor(&self) -> &ManifoldDescriptor {
        &self.desc
    }

    fn frame_on(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let len = self.m + 1;
        let (xs, y) = self.split(x);
        let t = self.inner.frame_on(&y);
        let ni = self.inner.dim();
        let mut f = DMatrix::zeros(self.desc.ambient_dim, self.desc.intrinsic_dim);
        write_sphere_projection(&mut f, xs, 0, 0);
        for i in 0..len {
            for r in 0..t.nrows() {
                f[(len + r, i)] = xs[i] * t[(r, 0)];
            }
        }
        for a in 1..ni {
            for r in 0..t.nrows() {
                f[(len + r, self.inner_index(a))] = t[(r, a)];
            }
        }
        f
    }

    fn structure_functions(&self, x: &DVector<f64>) -> Option<StructureFunctions> {
        let len = self.m + 1;
        let (xs, y) = self.split(x);
        let d = self.inner.structure_functions(&y)?;
        let ni = self.inner.dim();
        let mut c = StructureFunctions::zeros(self.desc.intrinsic_dim);
        sphere_structure(xs, &mut c);

        // adds coef · T_target to [row, col], rewriting T_1 = Σ_j x_j f_j
        let emit =
            |c: &mut StructureFunctions, row: usize, col: usize, target: usize, coef: f64| {
                if coef == 0.0 {
                    return;
                }
                if target == 0 {
                    for (j, xj) in xs.iter().enumerate() {
                        c.add(row, col, j, coef * xj);
                    }
                } else {
                    c.add(row, col, self.inner_index(target), coef);
                }
            };

        for i in 0..len {
            for a in 1..ni {
                let col = self.inner_index(a);
                for target in 0..ni {
                    let coef = xs[i] * d.get(0, a, target);
                    emit(&mut c, i, col, target, coef);
                    emit(&mut c, col, i, target, -coef);
                }
            }
        }
        for a in 1..ni {
            for b in 1..ni {
                for target in 0..ni {
                    emit(
                        &mut c,
                        self.inner_index(a),
                        self.inner_index(b),
                        target,
                        d.get(a, b, target),
                    );
                }
            }
        }
        Some(c)
    }
}
