//! Pullback metric, torsion of the flat connection `∇ = ρ ∘ d ∘ ρ⁻¹`, and
//! retrivialization of the frame by a field of invertible maps `Q_s`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::element::{AlgebraElement, InnerProduct};
use crate::error::{Error, Result};
use crate::linalg::{checked_inverse, condition_number, smallest_singular_value, RANK_TOL};
use crate::manifolds::{Manifold, ManifoldDescriptor, StructureFunctions};
use crate::point::Point;
use crate::ParallelizedManifold;

type QFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Smooth family of invertible maps `Q_s ∈ GL(l)`, evaluated on ambient coordinates.
#[derive(Clone)]
pub struct QField {
    eval: Arc<QFn>,
    constant: Option<DMatrix<f64>>,
}

impl fmt::Debug for QField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.constant {
            Some(q) => f.debug_struct("QField").field("constant", q).finish(),
            None => f.write_str("QField(<fn>)"),
        }
    }
}

impl QField {
    pub fn new(eval: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            constant: None,
        }
    }

    pub fn constant(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                found: q.ncols(),
            });
        }
        let sigma_min = smallest_singular_value(&q);
        if sigma_min < RANK_TOL {
            return Err(Error::Singular { sigma_min });
        }
        let c = q.clone();
        Ok(Self {
            eval: Arc::new(move |_| c.clone()),
            constant: Some(q),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim)).expect("identity is invertible")
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    /// `Q_s`, failing if it is numerically singular.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let q = (self.eval)(x);
        let sigma_min = smallest_singular_value(&q);
        if !sigma_min.is_finite() || sigma_min < RANK_TOL {
            return Err(Error::Singular { sigma_min });
        }
        Ok(q)
    }

    /// Condition number of `Q_s`.
    pub fn condition(&self, x: &DVector<f64>) -> f64 {
        condition_number(&(self.eval)(x))
    }
}

/// A catalog manifold with frame `ρ̃_s = ρ_s ∘ Q_s`.
#[derive(Debug)]
pub struct Retrivialized {
    base: Arc<dyn Manifold>,
    q: QField,
    /// `Q` and `Q⁻¹` when the field is constant.
    fixed: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl Retrivialized {
    pub fn q(&self) -> &QField {
        &self.q
    }

    pub fn base(&self) -> &Arc<dyn Manifold> {
        &self.base
    }

    fn q_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.q.eval)(x)
    }
}

impl Manifold for Retrivialized {
    fn descriptor(&self) -> &ManifoldDescriptor {
        self.base.descriptor()
    }

    fn frame_on(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.base.frame_on(x) * self.q_at(x)
    }

    fn structure_functions(&self, x: &DVector<f64>) -> Option<StructureFunctions> {
        let (q, q_inv) = self.fixed.as_ref()?;
        let c = self.base.structure_functions(x)?;
        let n = c.dim();
        let mut out = StructureFunctions::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut raw = DVector::zeros(n);
                for a in 0..n {
                    for b in 0..n {
                        let w = q[(a, i)] * q[(b, j)];
                        if w != 0.0 {
                            raw += c.bracket_coeffs(a, b) * w;
                        }
                    }
                }
                let coeffs = q_inv * raw;
                for k in 0..n {
                    out.set(i, j, k, coeffs[k]);
                }
            }
        }
        Some(out)
    }

    fn closed_form_flow(
        &self,
        xi: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> Option<DVector<f64>> {
        let (q, _) = self.fixed.as_ref()?;
        self.base.closed_form_flow(&(q * xi), x, t)
    }

    fn closed_form_associator(
        &self,
        x: &DVector<f64>,
        direction: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        let (q, q_inv) = self.fixed.as_ref()?;
        self.base
            .closed_form_associator(x, &(q * direction), &(q * u), &(q * v))
            .map(|a| q_inv * a)
    }
}

impl ParallelizedManifold {
    /// `g_s(v, w) = ⟨ρ_s⁻¹v, ρ_s⁻¹w⟩` for tangent `v`, `w`.
    pub fn pullback_metric(
        &self,
        s: &Point,
        v: &DVector<f64>,
        w: &DVector<f64>,
        ip: &InnerProduct,
    ) -> Result<f64> {
        let a = self.maurer_cartan(s, v)?;
        let b = self.maurer_cartan(s, w)?;
        ip.inner(&a, &b)
    }

    /// `T(ρ(ξ), ρ(η))_s = ρ_s([ξ, η]^(s))`.
    pub fn torsion(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<DVector<f64>> {
        let b = self.bracket(s, xi, eta)?;
        Ok(self.manifold.frame_on(s.ambient()) * b.coeffs())
    }

    /// `⟨[ξ,η], γ⟩ + ⟨η, [ξ,γ]⟩`; zero for all arguments iff torsion is totally skew at `s`.
    pub fn skew_adjoint_residual(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        gamma: &AlgebraElement,
        ip: &InnerProduct,
    ) -> Result<f64> {
        let xe = self.bracket(s, xi, eta)?;
        let xg = self.bracket(s, xi, gamma)?;
        Ok(ip.inner(&xe, gamma)? + ip.inner(eta, &xg)?)
    }

    /// `(∇_{ρ(γ)} T)(ρ(ξ), ρ(η)) = ρ_s(a(ξ, η))` with the associator differentiated along `γ`.
    pub fn nabla_torsion(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        direction: &AlgebraElement,
    ) -> Result<DVector<f64>> {
        let a = self.skew_associator(s, direction, xi, eta)?;
        Ok(self.manifold.frame_on(s.ambient()) * a.coeffs())
    }

    /// New parallelization `ρ̃_s = ρ_s ∘ Q_s` on the same manifold and points.
    pub fn retrivialize(&self, q: QField) -> Result<ParallelizedManifold> {
        let n = self.dim();
        let fixed = match &q.constant {
            Some(m) => {
                if m.nrows() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m.nrows(),
                    });
                }
                Some((m.clone(), checked_inverse(m)?))
            }
            None => None,
        };
        let manifold = Retrivialized {
            base: self.manifold.clone(),
            q,
            fixed,
        };
        Ok(Self {
            manifold: Arc::new(manifold),
            ..self.clone()
        })
    }

    /// For a retrivialized manifold with base `base`: the largest component of
    /// `[ξ,η]^(ρ̃,s) − Q_s⁻¹[Q_sξ, Q_sη]^(ρ,s)`, with the left side from the
    /// generic finite-difference bracket of the new frame.
    ///
    /// Zero up to discretization error for constant `Q`; a varying `Q` adds
    /// derivative terms.
    pub fn bracket_law_residual(
        &self,
        base: &ParallelizedManifold,
        q: &QField,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<f64> {
        let qs = q.evaluate(s.ambient())?;
        let q_inv = checked_inverse(&qs)?;
        let lhs = self.bracket_fd(s, xi, eta)?;
        let qx = AlgebraElement::from(&qs * xi.coeffs());
        let qy = AlgebraElement::from(&qs * eta.coeffs());
        let rhs = q_inv * base.bracket(s, &qx, &qy)?.coeffs();
        Ok((lhs.coeffs() - rhs).amax())
    }

    /// Metricity of `∇` along the flow of `ρ(direction)` for the fields
    /// `X = ρ(f)` and `Y = ρ(g)`: `|Z g(X,Y) − g(∇_Z X, Y) − g(X, ∇_Z Y)|`,
    /// every derivative a central difference with step `fd_step_2`.
    pub fn metricity_residual(
        &self,
        s: &Point,
        direction: &AlgebraElement,
        f: &dyn Fn(&Point) -> DVector<f64>,
        g: &dyn Fn(&Point) -> DVector<f64>,
        ip: &InnerProduct,
    ) -> Result<f64> {
        self.check_element(direction)?;
        self.check_point(s)?;
        let h = self.tol.fd_step_2;
        let m = &self.manifold;
        let field = |p: &Point, c: &dyn Fn(&Point) -> DVector<f64>| m.frame_on(p.ambient()) * c(p);
        let at = |t: f64| {
            self.flow_unchecked(direction.coeffs(), s, t)
                .map(|r| r.endpoint)
        };
        let (plus, minus) = (at(h)?, at(-h)?);

        let metric =
            |p: &Point| -> Result<f64> { self.pullback_metric(p, &field(p, f), &field(p, g), ip) };
        let lhs = (metric(&plus)? - metric(&minus)?) / (2.0 * h);

        let cov = |c: &dyn Fn(&Point) -> DVector<f64>| -> Result<DVector<f64>> {
            let a = self.maurer_cartan(&plus, &field(&plus, c))?.into_coeffs();
            let b = self.maurer_cartan(&minus, &field(&minus, c))?.into_coeffs();
            Ok(m.frame_on(s.ambient()) * ((a - b) / (2.0 * h)))
        };
        let (x, y) = (field(s, f), field(s, g));
        let rhs = self.pullback_metric(s, &cov(f)?, &y, ip)?
            + self.pullback_metric(s, &x, &cov(g)?, ip)?;
        Ok((lhs - rhs).abs())
    }

    /// Largest `|g(ρ(ξ), ρ(ξ)) − ⟨ξ, ξ⟩|` at the points `Φ_{direction, t}(s)`.
    pub fn fundamental_norm_drift(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        direction: &AlgebraElement,
        times: &[f64],
        ip: &InnerProduct,
    ) -> Result<f64> {
        self.check_element(xi)?;
        let expected = ip.inner(xi, xi)?;
        let mut worst: f64 = 0.0;
        for &t in times {
            let p = self.flow(direction, s, t)?.endpoint;
            let v = self.fundamental_field(xi, &p)?;
            worst = worst.max((self.pullback_metric(&p, &v, &v, ip)? - expected).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::random_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sc2() -> ParallelizedManifold {
        ParallelizedManifold::from_key("sphere_circle2").unwrap()
    }

    fn rotation(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn pullback_of_fundamental_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ip = InnerProduct::new(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5],
        ))
        .unwrap();
        let pm = sc2();
        for _ in 0..10 {
            let s = pm.manifold().random_point(&mut rng);
            let xi = random_element(3, 1.0, &mut rng);
            let eta = random_element(3, 1.0, &mut rng);
            let v = pm.fundamental_field(&xi, &s).unwrap();
            let w = pm.fundamental_field(&eta, &s).unwrap();
            assert!(
                (pm.pullback_metric(&s, &v, &v, &ip).unwrap() - ip.inner(&xi, &xi).unwrap()).abs()
                    < 1e-12
            );
            // frame orthonormality: identity metric is the ambient one
            let g = pm
                .pullback_metric(&s, &v, &w, &InnerProduct::identity(3))
                .unwrap();
            assert!((g - v.dot(&w)).abs() < 1e-12);
        }
    }

    #[test]
    fn torsion_examples() {
        let pm = sc2();
        let s = pm.point(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let t = pm.torsion(&s, &pm.basis(0), &pm.basis(2)).unwrap();
        assert!((t - pm.fundamental_field(&pm.basis(0), &s).unwrap()).amax() < 1e-15);
        assert_eq!(
            pm.torsion(&s, &pm.basis(1), &pm.basis(1)).unwrap().amax(),
            0.0
        );
    }

    #[test]
    fn torsion_metric_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ip = InnerProduct::identity(5);
        let pm = ParallelizedManifold::from_key("sphere_sphere_circle2_2").unwrap();
        for _ in 0..5 {
            let s = pm.manifold().random_point(&mut rng);
            let [x, y, z] = [0, 1, 2].map(|_| random_element(5, 1.0, &mut rng));
            let t = pm.torsion(&s, &x, &y).unwrap();
            let zf = pm.fundamental_field(&z, &s).unwrap();
            let lhs = pm.pullback_metric(&s, &t, &zf, &ip).unwrap();
            let rhs = ip.inner(&pm.bracket(&s, &x, &y).unwrap(), &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn skew_adjointness() {
        let ip = InnerProduct::identity(3);
        let s3 = ParallelizedManifold::from_key("s3").unwrap();
        let s = s3.point(&[0.5, -0.5, 0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let [x, y, z] = [0, 1, 2].map(|_| random_element(3, 1.0, &mut rng));
        assert!(s3.skew_adjoint_residual(&s, &x, &y, &z, &ip).unwrap().abs() < 1e-14);

        let pm = sc2();
        let s = pm.point(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        // [e_1, e_3] = e_1 at the north pole, so the residual is ⟨e_1, e_1⟩ = 1
        let r = pm
            .skew_adjoint_residual(&s, &pm.basis(0), &pm.basis(0), &pm.basis(2), &ip)
            .unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nabla_torsion_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s3 = ParallelizedManifold::from_key("s3").unwrap();
        let s = s3.manifold().random_point(&mut rng);
        let [x, y, z] = [0, 1, 2].map(|_| random_element(3, 1.0, &mut rng));
        assert!(s3.nabla_torsion(&s, &x, &y, &z).unwrap().amax() < 1e-10);

        let pm = sc2();
        let s = pm.manifold().random_point(&mut rng);
        let nt = pm.nabla_torsion(&s, &x, &y, &z).unwrap();
        let closed = pm.skew_associator_closed(&s, &z, &x, &y).unwrap().unwrap();
        let expected = pm.fundamental_field(&closed, &s).unwrap();
        assert!(nt.amax() > 1e-3);
        assert!((nt - expected).amax() < 1e-5);
    }

    #[test]
    fn retrivialize_identity_and_scaling() {
        let pm = sc2();
        let s = pm.point(&[0.2, 0.4, -0.7, 0.3]).unwrap();
        let same = pm.retrivialize(QField::identity(3)).unwrap();
        assert_eq!(same.frame(&s).unwrap(), pm.frame(&s).unwrap());
        let (x, y) = (
            pm.element(&[0.3, 0.1, 0.4]).unwrap(),
            pm.element(&[-0.2, 0.8, 0.0]).unwrap(),
        );

        let q = QField::constant(DMatrix::identity(3, 3) * 2.0).unwrap();
        let scaled = pm.retrivialize(q.clone()).unwrap();
        let b = scaled.bracket(&s, &x, &y).unwrap();
        assert!((b.coeffs() - pm.bracket(&s, &x, &y).unwrap().coeffs() * 2.0).amax() < 1e-14);
        assert!(scaled.bracket_law_residual(&pm, &q, &s, &x, &y).unwrap() < 1e-7);
    }

    #[test]
    fn orthogonal_retrivialization_relabels_skew_adjointness() {
        let pm = sc2();
        let qm = rotation(0.7);
        let rt = pm
            .retrivialize(QField::constant(qm.clone()).unwrap())
            .unwrap();
        let ip = InnerProduct::identity(3);
        let s = pm.point(&[0.5, 0.1, 0.8, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let [x, y, z] = [0, 1, 2].map(|_| random_element(3, 1.0, &mut rng));
            let q = |e: &AlgebraElement| AlgebraElement::from(&qm * e.coeffs());
            let new = rt.skew_adjoint_residual(&s, &x, &y, &z, &ip).unwrap();
            let old = pm
                .skew_adjoint_residual(&s, &q(&x), &q(&y), &q(&z), &ip)
                .unwrap();
            assert!((new - old).abs() < 1e-12);
        }
    }

    #[test]
    fn varying_q_breaks_pointwise_law() {
        let pm = sc2();
        let q = QField::new(|x| DMatrix::identity(3, 3) * (2.0 + x[0]));
        let rt = pm.retrivialize(q.clone()).unwrap();
        let s = pm.point(&[0.3, 0.5, 0.6, 0.0]).unwrap();
        let r = rt
            .bracket_law_residual(&pm, &q, &s, &pm.basis(1), &pm.basis(2))
            .unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn singular_q_rejected() {
        assert!(matches!(
            QField::constant(DMatrix::zeros(3, 3)),
            Err(Error::Singular { .. })
        ));
        let q = QField::new(|_| DMatrix::zeros(3, 3));
        assert!(q.evaluate(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn metricity_and_constant_norm() {
        let pm = sc2();
        let ip = InnerProduct::identity(3);
        let s = pm.point(&[0.1, -0.3, 0.9, 0.4]).unwrap();
        let dir = pm.element(&[0.6, 0.2, -0.5]).unwrap();
        let f =
            |p: &Point| DVector::from_column_slice(&[p.as_slice()[0], 1.0, p.as_slice()[2] * 2.0]);
        let g = |p: &Point| DVector::from_column_slice(&[p.as_slice()[1].powi(2), -1.0, 0.5]);
        assert!(pm.metricity_residual(&s, &dir, &f, &g, &ip).unwrap() < 1e-4);
        let xi = pm.element(&[0.3, 0.3, 0.9]).unwrap();
        assert!(
            pm.fundamental_norm_drift(&s, &xi, &dir, &[0.5, 1.0, -2.0], &ip)
                .unwrap()
                < 1e-9
        );
    }
}
