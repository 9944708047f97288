//! Numerics for parallelized manifolds.
//!
//! A parallelized manifold is a manifold `L` together with a fixed
//! trivialization `ρ: L × l → TL` of its tangent bundle. This crate
//! integrates the fundamental vector fields `ρ(ξ)`, builds the induced
//! product `ξ·s` and local loops `∘_s` on `l`, and evaluates the
//! point-dependent bracket, skew-associator, torsion and morphism identities
//! numerically, with closed forms for the built-in product-of-spheres
//! catalog.
//!
//! Everything hangs off [`ParallelizedManifold`], which pairs a catalog
//! [`Manifold`] with a [`Tolerances`] record.

pub mod algebra;
pub mod element;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod loops;
pub mod manifolds;
pub mod morphism;
pub mod ode;
pub mod point;
pub mod sampling;
pub mod tolerances;

use std::sync::Arc;

pub use element::{inner, AlgebraElement, InnerProduct};
pub use error::{Error, Result};
pub use manifolds::{catalog_keys, lookup, FrameMap, Manifold, ManifoldDescriptor};
pub use point::Point;
pub use tolerances::Tolerances;

/// A catalog manifold paired with the tolerances used for every computation on it.
#[derive(Debug, Clone)]
pub struct ParallelizedManifold {
    manifold: Arc<dyn Manifold>,
    tol: Tolerances,
    trust_radius: f64,
}

impl ParallelizedManifold {
    pub fn new(manifold: Arc<dyn Manifold>, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        Ok(Self {
            manifold,
            tol,
            trust_radius: loops::DEFAULT_TRUST_RADIUS,
        })
    }

    /// Looks up a catalog key with default tolerances.
    pub fn from_key(key: &str) -> Result<Self> {
        Self::new(lookup(key)?, Tolerances::default())
    }

    pub fn with_tolerances(&self, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        Ok(Self {
            tol,
            ..self.clone()
        })
    }

    /// Copy using `radius` as the bound on `‖ξ‖` for quotient solves.
    pub fn with_trust_radius(&self, radius: f64) -> Self {
        assert!(
            radius.is_finite() && radius > 0.0,
            "trust radius must be positive"
        );
        Self {
            trust_radius: radius,
            ..self.clone()
        }
    }

    pub fn trust_radius(&self) -> f64 {
        self.trust_radius
    }

    pub fn manifold(&self) -> &Arc<dyn Manifold> {
        &self.manifold
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn id(&self) -> &str {
        self.manifold.id()
    }

    /// Normalizes raw ambient coordinates onto the manifold.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        self.manifold
            .normalize_point(&nalgebra::DVector::from_column_slice(coords))
    }

    pub fn element(&self, coeffs: &[f64]) -> Result<AlgebraElement> {
        let e = AlgebraElement::from_slice(coeffs)?;
        e.check_dim(self.dim())?;
        Ok(e)
    }

    pub fn basis(&self, index: usize) -> AlgebraElement {
        AlgebraElement::basis(self.dim(), index)
    }

    pub fn frame(&self, s: &Point) -> Result<FrameMap> {
        self.check_point(s)?;
        Ok(self.manifold.frame(s))
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.manifold.distance(p, q)
    }

    pub(crate) fn check_point(&self, s: &Point) -> Result<()> {
        self.manifold.check_point(s, self.tol.point_tol)
    }

    pub(crate) fn check_element(&self, xi: &AlgebraElement) -> Result<()> {
        xi.check_dim(self.dim())
    }

    /// Wraps on-manifold ambient coordinates produced internally.
    pub(crate) fn renormalize(&self, raw: &nalgebra::DVector<f64>) -> Result<Point> {
        self.manifold.normalize_point(raw)
    }
}
