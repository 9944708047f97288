//! `S^m × S¹` with the frame `f_i = ∂_{x_i} − x_i Σ_j x_j ∂_{x_j} + x_i ∂_φ`.
//!
//! Ambient coordinates are `(x_1, …, x_{m+1}, φ)`. The frame is orthonormal
//! for the product metric and satisfies `[f_i, f_j] = x_i f_j − x_j f_i`.

use nalgebra::{DMatrix, DVector};

use super::{write_sphere_projection, Block, Manifold, ManifoldDescriptor, StructureFunctions};

#[derive(Debug, Clone)]
pub struct SphereCircle {
    m: usize,
    desc: ManifoldDescriptor,
}

impl SphereCircle {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "sphere dimension must be positive");
        Self {
            m,
            desc: ManifoldDescriptor::new(
                format!("sphere_circle{m}"),
                vec![Block::Sphere { dim: m }, Block::Circle],
            ),
        }
    }

    pub fn sphere_dim(&self) -> usize {
        self.m
    }
}

/// `ln cosh a`, without overflow for large `|a|`.
pub(crate) fn ln_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Structure functions of the sphere-type frame: `c[i][j][k] = x_i δ_jk − x_j δ_ik`.
pub(crate) fn sphere_structure(x: &[f64], c: &mut StructureFunctions) {
    let len = x.len();
    for i in 0..len {
        for j in 0..len {
            c.add(i, j, j, x[i]);
            c.add(i, j, i, -x[j]);
        }
    }
}

/// Closed-form solution of `x' = ξ − ⟨ξ,x⟩x`, `φ' = ⟨ξ,x⟩` from `(x0, φ0)`.
///
/// Returns the new sphere point and the accumulated angle change.
pub(crate) fn sphere_flow(xi: &DVector<f64>, x0: &DVector<f64>, t: f64) -> (DVector<f64>, f64) {
    let speed = xi.norm();
    if speed == 0.0 || t == 0.0 {
        return (x0.clone(), 0.0);
    }
    let u = xi / speed;
    let tau = speed * t;
    let c = u.dot(x0);
    let perp = x0 - &u * c;
    let perp_norm = perp.norm();
    if perp_norm < 1e-300 || c.abs() >= 1.0 {
        // ξ parallel to x0: x stays fixed and φ advances at unit rate
        return (x0.clone(), c.signum() * tau);
    }
    let sigma = c.atanh();
    let x_tilde = perp / perp_norm;
    let arg = sigma + tau;
    let x = u * arg.tanh() + x_tilde * (1.0 / arg.cosh());
    let dphi = ln_cosh(arg) - ln_cosh(sigma);
    (x, dphi)
}

impl Manifold for SphereCircle {
    fn descriptor(&self) -> &ManifoldDescriptor {
        &self.desc
    }

    fn frame_on(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let len = self.m + 1;
        let mut f = DMatrix::zeros(len + 1, len);
        write_sphere_projection(&mut f, &x.as_slice()[..len], 0, 0);
        for i in 0..len {
            f[(len, i)] = x[i];
        }
        f
    }

    fn structure_functions(&self, x: &DVector<f64>) -> Option<StructureFunctions> {
        let len = self.m + 1;
        let mut c = StructureFunctions::zeros(len);
        sphere_structure(&x.as_slice()[..len], &mut c);
        Some(c)
    }

    fn closed_form_flow(
        &self,
        xi: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> Option<DVector<f64>> {
        let len = self.m + 1;
        let (xs, dphi) = sphere_flow(xi, &x.rows(0, len).into_owned(), t);
        let mut out = x.clone();
        out.rows_mut(0, len).copy_from(&xs);
        out[len] += dphi;
        Some(out)
    }

    /// `d_{ρ(w)} b(u, v) = u ⟨v, w − ⟨w,x⟩x⟩ − v ⟨u, w − ⟨w,x⟩x⟩` for direction `w`.
    fn closed_form_associator(
        &self,
        x: &DVector<f64>,
        direction: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        let xs = x.rows(0, self.m + 1);
        let dx = direction - xs * direction.dot(&xs);
        Some(u * v.dot(&dx) - v * u.dot(&dx))
    }
}
