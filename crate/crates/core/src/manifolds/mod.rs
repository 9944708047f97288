//! Built-in parallelized manifolds and the interface they share.
//!
//! Every manifold is embedded in some `R^N` as a product of unit-sphere and
//! circle blocks. A trivialization is given by its frame `f_i = ρ(e_i)`,
//! evaluated in ambient components. Closed-form brackets, flows and
//! skew-associators are optional fast paths; the generic numerical routines
//! only need [`Manifold::frame_on`].

mod catalog;
mod composite;
mod s3;
mod sphere_circle;
mod torus;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{angle_diff, wrap_angle, Point};

pub use catalog::{catalog_keys, lookup};
pub use composite::SphereProduct;
pub use s3::{quat_mul, S3};
pub use sphere_circle::SphereCircle;
pub use torus::Torus;

/// One factor of the ambient coordinate layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    /// `S^dim ⊂ R^{dim+1}`.
    Sphere { dim: usize },
    /// One angle coordinate.
    Circle,
}

impl Block {
    pub fn len(&self) -> usize {
        match self {
            Block::Sphere { dim } => dim + 1,
            Block::Circle => 1,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Block::Sphere { dim } => *dim,
            Block::Circle => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldDescriptor {
    #[serde(serialize_with = "serialize_arc_str")]
    pub id: Arc<str>,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub blocks: Vec<Block>,
}

fn serialize_arc_str<S: serde::Serializer>(
    s: &Arc<str>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(s)
}

impl ManifoldDescriptor {
    pub fn new(id: impl Into<Arc<str>>, blocks: Vec<Block>) -> Self {
        let ambient_dim = blocks.iter().map(Block::len).sum();
        let intrinsic_dim = blocks.iter().map(Block::intrinsic_dim).sum();
        Self {
            id: id.into(),
            intrinsic_dim,
            ambient_dim,
            blocks,
        }
    }

    /// Iterates `(block, start offset)` pairs.
    pub fn block_offsets(&self) -> impl Iterator<Item = (Block, usize)> + '_ {
        self.blocks.iter().scan(0usize, |offset, b| {
            let start = *offset;
            *offset += b.len();
            Some((*b, start))
        })
    }
}

/// Frame-field brackets in the frame itself: `[f_i, f_j] = Σ_k c[i][j][k] f_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctions {
    dim: usize,
    c: Vec<f64>,
}

impl StructureFunctions {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            c: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.c[(i * self.dim + j) * self.dim + k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.c[(i * self.dim + j) * self.dim + k] += value;
    }

    /// Coefficients of `[f_i, f_j]` in the frame.
    pub fn bracket_coeffs(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim, (0..self.dim).map(|k| self.get(i, j, k)))
    }
}

/// The ambient matrix whose i-th column is `f_i(s) = ρ_s(e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMap {
    matrix: DMatrix<f64>,
}

impl FrameMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).into_owned()
    }

    /// `ρ_s(ξ)` in ambient components.
    pub fn apply(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.matrix * xi
    }

    pub fn smallest_singular_value(&self) -> f64 {
        crate::linalg::smallest_singular_value(&self.matrix)
    }
}

/// A parallelized manifold: an embedded manifold together with a global frame.
pub trait Manifold: Send + Sync + fmt::Debug {
    fn descriptor(&self) -> &ManifoldDescriptor;

    /// Frame at ambient coordinates whose sphere blocks are unit vectors.
    fn frame_on(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Closed-form structure functions of the frame at an on-manifold point.
    fn structure_functions(&self, _x: &DVector<f64>) -> Option<StructureFunctions> {
        None
    }

    /// Closed-form endpoint of the flow of `ρ(ξ)` for time `t`, before angle wrapping.
    fn closed_form_flow(
        &self,
        _xi: &DVector<f64>,
        _x: &DVector<f64>,
        _t: f64,
    ) -> Option<DVector<f64>> {
        None
    }

    /// Closed-form derivative of the bracket `b(u, v)` along `ρ(direction)`.
    fn closed_form_associator(
        &self,
        _x: &DVector<f64>,
        _direction: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        None
    }

    fn id(&self) -> &str {
        &self.descriptor().id
    }

    fn dim(&self) -> usize {
        self.descriptor().intrinsic_dim
    }

    fn ambient_dim(&self) -> usize {
        self.descriptor().ambient_dim
    }

    /// Radially projects every sphere block; angles are left untouched.
    fn project(&self, raw: &DVector<f64>) -> Result<DVector<f64>> {
        let desc = self.descriptor();
        if raw.len() != desc.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: desc.ambient_dim,
                found: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut out = raw.clone();
        for (index, (block, start)) in desc.block_offsets().enumerate() {
            if let Block::Sphere { dim } = block {
                let mut seg = out.rows_mut(start, dim + 1);
                let norm = seg.norm();
                if norm == 0.0 {
                    return Err(Error::ZeroSphereBlock { block: index });
                }
                if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                    seg /= norm;
                }
            }
        }
        Ok(out)
    }

    /// Projects sphere blocks to unit norm and wraps angles into `[0, 2π)`.
    fn normalize_point(&self, raw: &DVector<f64>) -> Result<Point> {
        let mut out = self.project(raw)?;
        for (block, start) in self.descriptor().block_offsets() {
            if block == Block::Circle {
                out[start] = wrap_angle(out[start]);
            }
        }
        Ok(Point::from_parts(out, self.descriptor().id.clone()))
    }

    /// Largest `| |x_b|² − 1 |` over sphere blocks.
    fn constraint_residual(&self, raw: &DVector<f64>) -> f64 {
        self.descriptor()
            .block_offsets()
            .filter_map(|(block, start)| match block {
                Block::Sphere { dim } => {
                    Some((raw.rows(start, dim + 1).norm_squared() - 1.0).abs())
                }
                Block::Circle => None,
            })
            .fold(0.0, f64::max)
    }

    /// Fails unless `s` belongs to this manifold and satisfies its constraints to `tol`.
    fn check_point(&self, s: &Point, tol: f64) -> Result<()> {
        if s.manifold_id() != self.id() {
            return Err(Error::ManifoldMismatch {
                expected: self.id().to_string(),
                found: s.manifold_id().to_string(),
            });
        }
        if s.ambient().len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: s.ambient().len(),
            });
        }
        let residual = self.constraint_residual(s.ambient());
        if residual > tol {
            return Err(Error::OffManifold { residual, tol });
        }
        Ok(())
    }

    /// Frame extended off the manifold by precomposition with radial projection.
    fn frame_extended(&self, raw: &DVector<f64>) -> DMatrix<f64> {
        match self.project(raw) {
            Ok(x) => self.frame_on(&x),
            Err(_) => self.frame_on(raw),
        }
    }

    fn frame(&self, s: &Point) -> FrameMap {
        FrameMap::new(self.frame_on(s.ambient()))
    }

    /// Exact `[f_i, f_j]` at `s` in ambient components, when structure functions are known.
    fn frame_bracket_closed(&self, i: usize, j: usize, s: &Point) -> Result<Option<DVector<f64>>> {
        let n = self.dim();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, dim: n });
            }
        }
        Ok(self
            .structure_functions(s.ambient())
            .map(|c| self.frame_on(s.ambient()) * c.bracket_coeffs(i, j)))
    }

    /// Ambient displacement `to − from`, with circle blocks taken along the shorter arc.
    fn displacement(&self, from: &DVector<f64>, to: &DVector<f64>) -> DVector<f64> {
        let mut d = to - from;
        for (block, start) in self.descriptor().block_offsets() {
            if block == Block::Circle {
                d[start] = angle_diff(from[start], to[start]);
            }
        }
        d
    }

    fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.displacement(p.ambient(), q.ambient()).norm()
    }

    /// Norm of the normal components of `v` at on-manifold `x` (zero iff tangent).
    fn normal_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.descriptor()
            .block_offsets()
            .filter_map(|(block, start)| match block {
                Block::Sphere { dim } => {
                    Some(x.rows(start, dim + 1).dot(&v.rows(start, dim + 1)).powi(2))
                }
                Block::Circle => None,
            })
            .fold(0.0, |acc, v| acc + v)
            .sqrt()
    }

    /// Uniformly distributed point (Haar measure on each block).
    fn random_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        let desc = self.descriptor();
        let mut raw = DVector::zeros(desc.ambient_dim);
        let angle = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
        for (block, start) in desc.block_offsets() {
            match block {
                Block::Sphere { dim } => loop {
                    for k in 0..=dim {
                        raw[start + k] = StandardNormal.sample(rng);
                    }
                    if raw.rows(start, dim + 1).norm() > 1e-3 {
                        break;
                    }
                },
                Block::Circle => raw[start] = angle.sample(rng),
            }
        }
        self.normalize_point(&raw)
            .expect("sampled blocks are nonzero")
    }
}

/// Sphere normal-projection columns `e_i − x_i x` written into `out` at `(row, col)`.
pub(crate) fn write_sphere_projection(out: &mut DMatrix<f64>, x: &[f64], row: usize, col: usize) {
    let len = x.len();
    for i in 0..len {
        for r in 0..len {
            let delta = if r == i { 1.0 } else { 0.0 };
            out[(row + r, col + i)] = delta - x[i] * x[r];
        }
    }
}

/// Uniform random algebra element with coefficients in `[-scale, scale]`.
pub fn random_element(
    dim: usize,
    scale: f64,
    rng: &mut dyn rand::RngCore,
) -> crate::AlgebraElement {
    crate::AlgebraElement::from(DVector::from_iterator(
        dim,
        (0..dim).map(|_| rng.random_range(-scale..=scale)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn all_test_manifolds() -> Vec<Arc<dyn Manifold>> {
        catalog_keys().iter().map(|k| lookup(k).unwrap()).collect()
    }

    #[test]
    fn descriptors_are_consistent() {
        for m in all_test_manifolds() {
            let d = m.descriptor();
            assert!(d.intrinsic_dim <= d.ambient_dim, "{}", d.id);
            assert_eq!(
                d.blocks.iter().map(Block::len).sum::<usize>(),
                d.ambient_dim
            );
        }
    }

    #[test]
    fn frame_tangent_and_full_rank_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in all_test_manifolds() {
            for _ in 0..2000 {
                let s = m.random_point(&mut rng);
                let f = m.frame(&s);
                assert_eq!(f.matrix().shape(), (m.ambient_dim(), m.dim()));
                for i in 0..m.dim() {
                    assert!(
                        m.normal_residual(s.ambient(), &f.column(i)) <= 1e-9,
                        "{}",
                        m.id()
                    );
                }
                assert!(f.smallest_singular_value() > 1e-9, "{}", m.id());
            }
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in all_test_manifolds() {
            for _ in 0..50 {
                let raw = DVector::from_fn(m.ambient_dim(), |_, _| rng.random_range(-8.0..8.0));
                let p = m.normalize_point(&raw).unwrap();
                let q = m.normalize_point(p.ambient()).unwrap();
                assert_eq!(p, q, "{}", m.id());
                assert!(m.constraint_residual(p.ambient()) <= 1e-10);
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let m = lookup("sphere_circle2").unwrap();
        let p = m
            .normalize_point(&DVector::from_column_slice(&[2.0, 0.0, 0.0, 7.0]))
            .unwrap();
        assert_eq!(p.as_slice()[..3], [1.0, 0.0, 0.0]);
        assert!((p.as_slice()[3] - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);

        let p = m
            .normalize_point(&DVector::from_column_slice(&[0.6, 0.8, 0.0, 0.0]))
            .unwrap();
        assert!((p.ambient() - DVector::from_column_slice(&[0.6, 0.8, 0.0, 0.0])).amax() < 1e-15);

        let err = m.normalize_point(&DVector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]));
        assert_eq!(err, Err(Error::ZeroSphereBlock { block: 0 }));

        let err = m.normalize_point(&DVector::from_column_slice(&[1.0, 0.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn check_point_rejects_foreign_and_off_manifold() {
        let m = lookup("sphere_circle2").unwrap();
        let t = lookup("torus2").unwrap();
        let p = t
            .normalize_point(&DVector::from_column_slice(&[0.1, 0.2]))
            .unwrap();
        assert!(matches!(
            m.check_point(&p, 1e-10),
            Err(Error::ManifoldMismatch { .. })
        ));
        let off = Point::from_parts(
            DVector::from_column_slice(&[1.1, 0.0, 0.0, 0.0]),
            m.descriptor().id.clone(),
        );
        assert!(matches!(
            m.check_point(&off, 1e-10),
            Err(Error::OffManifold { .. })
        ));
    }

    #[test]
    fn bracket_index_out_of_range() {
        let m = lookup("sphere_circle2").unwrap();
        let s = m
            .normalize_point(&DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(
            m.frame_bracket_closed(0, 3, &s),
            Err(Error::IndexOutOfRange { index: 3, dim: 3 })
        );
    }
}
