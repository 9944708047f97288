//! Compatible pairs `(h, h′)` and numerical checks of the morphism,
//! pseudoautomorphism and bracket-equivariance identities.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::orthogonality_residual;
use crate::manifolds::quat_mul;
use crate::point::{wrap_angle, Point};
use crate::ParallelizedManifold;

/// Orthogonality tolerance for [`sphere_automorphism`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Largest constraint violation accepted from a point map before normalization.
const IMAGE_TOL: f64 = 1e-8;

type PointMap = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Parameters of an `S^m × S¹` automorphism `(x, φ) ↦ (Rx, φ + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereParams {
    pub rotation: DMatrix<f64>,
    pub shift: f64,
}

/// A point map `h` on ambient coordinates together with a linear map `h′` on the algebra.
#[derive(Clone)]
pub struct CandidatePair {
    h: Arc<PointMap>,
    h_prime: DMatrix<f64>,
    params: Option<SphereParams>,
}

impl fmt::Debug for CandidatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CandidatePair")
            .field("h_prime", &self.h_prime)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl CandidatePair {
    pub fn new(
        h: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        h_prime: DMatrix<f64>,
    ) -> Self {
        Self {
            h: Arc::new(h),
            h_prime,
            params: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(|x| x.clone(), DMatrix::identity(dim, dim))
    }

    pub fn h_prime(&self) -> &DMatrix<f64> {
        &self.h_prime
    }

    pub fn sphere_params(&self) -> Option<&SphereParams> {
        self.params.as_ref()
    }

    pub fn apply_prime(&self, xi: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from(&self.h_prime * xi.coeffs())
    }

    /// `self ∘ other`: `h = h_self ∘ h_other`, `h′ = h′_self h′_other`.
    pub fn compose(&self, other: &CandidatePair) -> CandidatePair {
        let (outer, inner) = (self.h.clone(), other.h.clone());
        let params = match (&self.params, &other.params) {
            (Some(a), Some(b)) => Some(SphereParams {
                rotation: &a.rotation * &b.rotation,
                shift: wrap_angle(a.shift + b.shift),
            }),
            _ => None,
        };
        CandidatePair {
            h: Arc::new(move |x| outer(&inner(x))),
            h_prime: &self.h_prime * &other.h_prime,
            params,
        }
    }
}

/// `(x, φ) ↦ (Rx, φ + c)` with `h′ = R` on `S^m × S¹`; `R` must lie in `SO(m+1)`.
pub fn sphere_automorphism(m: usize, rotation: DMatrix<f64>, shift: f64) -> Result<CandidatePair> {
    if rotation.nrows() != m + 1 || rotation.ncols() != m + 1 {
        return Err(Error::DimensionMismatch {
            expected: m + 1,
            found: rotation.nrows().max(rotation.ncols()),
        });
    }
    if !shift.is_finite() || rotation.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let residual = orthogonality_residual(&rotation);
    if residual > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    let det = rotation.determinant();
    if det < 0.0 {
        return Err(Error::OrientationReversing { det });
    }
    let mut pair = linear_sphere_candidate(m, rotation.clone(), shift);
    pair.params = Some(SphereParams {
        rotation,
        shift: wrap_angle(shift),
    });
    Ok(pair)
}

/// `(x, φ) ↦ (Ax/|Ax|, φ + c)` with `h′ = A`, for any invertible `A`; no checks.
pub fn linear_sphere_candidate(m: usize, a: DMatrix<f64>, shift: f64) -> CandidatePair {
    let map = a.clone();
    CandidatePair::new(
        move |p| {
            let mut out = p.clone();
            let y = &map * p.rows(0, m + 1);
            let norm = y.norm();
            out.rows_mut(0, m + 1).copy_from(&(y / norm));
            out[m + 1] = p[m + 1] + shift;
            out
        },
        a,
    )
}

/// Translation `x ↦ x + c` of a torus, with `h′ = I`.
pub fn torus_translation(shift: &[f64]) -> CandidatePair {
    let c = DVector::from_column_slice(shift);
    CandidatePair::new(move |x| x + &c, DMatrix::identity(shift.len(), shift.len()))
}

/// Left multiplication `q ↦ aq` on `S³` for a unit quaternion `a`, with `h′ = Ad_a`.
pub fn s3_left_multiplication(a: [f64; 4]) -> Result<CandidatePair> {
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > ORTHOGONALITY_TOL {
        return Err(Error::OffManifold {
            residual: (norm - 1.0).abs(),
            tol: ORTHOGONALITY_TOL,
        });
    }
    let conj = [a[0], -a[1], -a[2], -a[3]];
    let ad = DMatrix::from_fn(3, 3, |r, c| {
        let mut e = [0.0; 4];
        e[c + 1] = 1.0;
        quat_mul(quat_mul(a, e), conj)[r + 1]
    });
    let h =
        move |q: &DVector<f64>| DVector::from_column_slice(&quat_mul(a, [q[0], q[1], q[2], q[3]]));
    Ok(CandidatePair::new(h, ad))
}

/// `(x, y, φ) ↦ (Rx, y, φ + c)` on `S^m × S^n × S¹`, with `h′ = R ⊕ I_n`.
pub fn sphere_product_automorphism(
    m: usize,
    n: usize,
    rotation: DMatrix<f64>,
    shift: f64,
) -> Result<CandidatePair> {
    let base = sphere_automorphism(m, rotation.clone(), shift)?;
    let mut h_prime = DMatrix::identity(m + 1 + n, m + 1 + n);
    h_prime
        .view_mut((0, 0), (m + 1, m + 1))
        .copy_from(&rotation);
    let h = move |p: &DVector<f64>| {
        let mut out = p.clone();
        out.rows_mut(0, m + 1)
            .copy_from(&(&rotation * p.rows(0, m + 1)));
        out[m + n + 2] += shift;
        out
    };
    Ok(CandidatePair {
        h: Arc::new(h),
        h_prime,
        params: base.params,
    })
}

impl ParallelizedManifold {
    /// `h(s)`, spot-checking that the image satisfies the constraints.
    pub fn apply_map(&self, pair: &CandidatePair, s: &Point) -> Result<Point> {
        self.check_point(s)?;
        let raw = (pair.h)(s.ambient());
        if raw.len() != self.manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.manifold.ambient_dim(),
                found: raw.len(),
            });
        }
        let residual = self.manifold.constraint_residual(&raw);
        if !residual.is_finite() || residual > IMAGE_TOL {
            return Err(Error::OffManifold {
                residual,
                tol: IMAGE_TOL,
            });
        }
        self.renormalize(&raw)
    }

    fn check_pair(&self, pair: &CandidatePair) -> Result<()> {
        let n = self.dim();
        if pair.h_prime.nrows() != n || pair.h_prime.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pair.h_prime.nrows(),
            });
        }
        Ok(())
    }

    /// Largest distance between `h(ξ·s)` and `h′(ξ)·h(s)` over the samples.
    pub fn morphism_residual(
        &self,
        pair: &CandidatePair,
        samples: &[(AlgebraElement, Point)],
    ) -> Result<f64> {
        self.check_pair(pair)?;
        let mut worst: f64 = 0.0;
        for (xi, s) in samples {
            let lhs = self.apply_map(pair, &self.product(xi, s)?)?;
            let rhs = self.product(&pair.apply_prime(xi), &self.apply_map(pair, s)?)?;
            worst = worst.max(self.distance(&lhs, &rhs));
        }
        Ok(worst)
    }

    /// Largest `‖h′(η∘_sξ) ∘_s A − h′(η) ∘_s (h′(ξ) ∘_s A)‖` over `(ξ, η)` samples.
    pub fn pseudoautomorphism_residual(
        &self,
        h_prime: &DMatrix<f64>,
        companion: &AlgebraElement,
        s: &Point,
        samples: &[(AlgebraElement, AlgebraElement)],
    ) -> Result<f64> {
        self.check_element(companion)?;
        let hp = |e: &AlgebraElement| AlgebraElement::from(h_prime * e.coeffs());
        let mut worst: f64 = 0.0;
        for (xi, eta) in samples {
            let lhs = self.local_product(&hp(&self.local_product(eta, xi, s)?), companion, s)?;
            let rhs =
                self.local_product(&hp(eta), &self.local_product(&hp(xi), companion, s)?, s)?;
            worst = worst.max((lhs.coeffs() - rhs.coeffs()).norm());
        }
        Ok(worst)
    }

    /// Companion `h(s)/s` of a pair at `s`.
    pub fn companion(&self, pair: &CandidatePair, s: &Point) -> Result<AlgebraElement> {
        Ok(self.right_quotient(&self.apply_map(pair, s)?, s)?.xi)
    }

    /// `‖h′([ξ,η]^(s)) − [h′ξ, h′η]^(h(s))‖`.
    pub fn bracket_equivariance_residual(
        &self,
        pair: &CandidatePair,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<f64> {
        self.check_pair(pair)?;
        let lhs = pair.apply_prime(&self.bracket(s, xi, eta)?);
        let rhs = self.bracket(
            &self.apply_map(pair, s)?,
            &pair.apply_prime(xi),
            &pair.apply_prime(eta),
        )?;
        Ok((lhs.coeffs() - rhs.coeffs()).norm())
    }

    /// Embedding coordinates `(h′, h(s))`, after confirming the morphism
    /// identity on `samples` to `tol`.
    pub fn automorphism_embedding(
        &self,
        pair: &CandidatePair,
        s: &Point,
        samples: &[(AlgebraElement, Point)],
        tol: f64,
    ) -> Result<(DMatrix<f64>, Point)> {
        let residual = self.morphism_residual(pair, samples)?;
        if residual > tol {
            return Err(Error::NotMorphism { residual });
        }
        Ok((pair.h_prime.clone(), self.apply_map(pair, s)?))
    }

    /// `h(p)` rebuilt from the embedding alone: factorize
    /// `p = ξ_1·(⋯(ξ_k·s))` and map it to `h′ξ_1·(⋯(h′ξ_k·h(s)))`.
    pub fn reconstruct_from_embedding(
        &self,
        h_prime: &DMatrix<f64>,
        image_of_s: &Point,
        s: &Point,
        p: &Point,
    ) -> Result<Point> {
        let steps = self.factorize(p, s, self.trust_radius)?;
        let mapped: Vec<_> = steps
            .iter()
            .map(|xi| AlgebraElement::from(h_prime * xi.coeffs()))
            .collect();
        self.reassemble(&mapped, image_of_s)
    }
}
