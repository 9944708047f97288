//! The point-dependent bracket `b^(s)`, the Maurer–Cartan form, the skew-associator
//! `a^(s)`, and residual checks for the identities they satisfy.
//!
//! Associator conventions: [`AssociatorTensor`] stores `a[i][j][k]`, the derivative
//! of `b(e_j, e_k)` along `ρ(e_i)`. Every operation here names the derivative
//! direction explicitly.

use nalgebra::DVector;
use serde::Serialize;

use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::manifolds::Block;
use crate::point::Point;
use crate::ParallelizedManifold;

/// Largest normal component accepted for vectors passed as tangent.
pub const TANGENT_TOL: f64 = 1e-8;

/// Normal component above which a computed bracket is reported as not tangent.
const BRACKET_TANGENT_TOL: f64 = 1e-6;

/// `b[i][j]` = coefficients of `[e_i, e_j]^(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketTensor {
    dim: usize,
    data: Vec<f64>,
    basepoint: Point,
}

impl BracketTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basepoint(&self) -> &Point {
        &self.basepoint
    }

    /// Component `k` of `[e_i, e_j]`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn coeffs(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| self.get(i, j, k))
    }

    /// `[ξ, η]` by bilinear extension.
    pub fn apply(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let w = xi[i] * eta[j];
                if w != 0.0 {
                    for k in 0..n {
                        out[k] += w * self.get(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Largest `|b[i][j][k] + b[j][i][k]|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        nested(self.dim, &self.data)
    }
}

/// Where an associator tensor came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociatorSource {
    ClosedForm,
    FiniteDifference,
}

/// `a[i][j][k]` = derivative of `b(e_j, e_k)` along `ρ(e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociatorTensor {
    dim: usize,
    data: Vec<f64>,
    basepoint: Point,
    source: AssociatorSource,
}

impl AssociatorTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basepoint(&self) -> &Point {
        &self.basepoint
    }

    pub fn source(&self) -> AssociatorSource {
        self.source
    }

    /// Component `l` of the derivative of `b(e_j, e_k)` along `ρ(e_i)`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    /// Derivative of `b(u, v)` along `ρ(direction)`, by trilinear extension.
    pub fn apply(
        &self,
        direction: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if direction[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    let w = direction[i] * u[j] * v[k];
                    if w != 0.0 {
                        for l in 0..n {
                            out[l] += w * self.get(i, j, k, l);
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest `|a[i][j][k] + a[i][k][j]|` over components.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) + self.get(i, k, j, l)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Nested `[direction][arg1][arg2][component]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let n = self.dim;
        self.data
            .chunks(n * n * n)
            .map(|block| nested(n, block))
            .collect()
    }

    /// Residual families of the triple product `T(u; v, w)` = derivative of `b(v, w)` along `ρ(u)`.
    ///
    /// Over basis elements: skewness `T(u;v,w) + T(u;w,v)`, the cyclic sum
    /// `T(u;v,w) + T(v;w,u) + T(w;u,v)`, and the derivation property of
    /// `D = T(·; ξ, η)` acting on `T(u; v, γ)`.
    pub fn lts_residuals(&self) -> LtsResiduals {
        let n = self.dim;
        let e = |i: usize| DVector::<f64>::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
        let t = |u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>| self.apply(u, v, w);
        let mut skew: f64 = 0.0;
        let mut cyclic: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (u, v, w) = (e(i), e(j), e(k));
                    skew = skew.max((t(&u, &v, &w) + t(&u, &w, &v)).amax());
                    cyclic = cyclic.max((t(&u, &v, &w) + t(&v, &w, &u) + t(&w, &u, &v)).amax());
                }
            }
        }
        let mut derivation: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                let (xi, eta) = (e(p), e(q));
                let d = |w: &DVector<f64>| t(w, &xi, &eta);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let (u, v, g) = (e(i), e(j), e(k));
                            let r = d(&t(&u, &v, &g))
                                - t(&d(&u), &v, &g)
                                - t(&u, &d(&v), &g)
                                - t(&u, &v, &d(&g));
                            derivation = derivation.max(r.amax());
                        }
                    }
                }
            }
        }
        LtsResiduals {
            skew,
            cyclic,
            derivation,
        }
    }
}

/// Maximum component residuals of the three Lie-triple-system families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LtsResiduals {
    pub skew: f64,
    pub cyclic: f64,
    pub derivation: f64,
}

impl LtsResiduals {
    pub fn max(&self) -> f64 {
        self.skew.max(self.cyclic).max(self.derivation)
    }
}

fn nested(n: usize, data: &[f64]) -> Vec<Vec<Vec<f64>>> {
    data.chunks(n * n)
        .map(|row| row.chunks(n).map(<[f64]>::to_vec).collect())
        .collect()
}

impl ParallelizedManifold {
    /// `[ξ, η]^(s) = −ρ_s⁻¹([ρ(ξ), ρ(η)]|_s)`, from structure functions when known.
    pub fn bracket(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        Ok(AlgebraElement::from(self.bracket_raw(
            s,
            xi.coeffs(),
            eta.coeffs(),
        )?))
    }

    /// Bracket from the ambient commutator `(DY)X − (DX)Y` of projection-extended
    /// frame fields, using central differences, even when a closed form exists.
    pub fn bracket_fd(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        Ok(AlgebraElement::from(self.bracket_fd_raw(
            s,
            xi.coeffs(),
            eta.coeffs(),
        )?))
    }

    pub(crate) fn bracket_raw(
        &self,
        s: &Point,
        xi: &DVector<f64>,
        eta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self.manifold.structure_functions(s.ambient()) {
            Some(c) => {
                let n = self.dim();
                let mut out = DVector::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        let w = xi[i] * eta[j];
                        if w != 0.0 {
                            out -= c.bracket_coeffs(i, j) * w;
                        }
                    }
                }
                Ok(out)
            }
            None => self.bracket_fd_raw(s, xi, eta),
        }
    }

    fn bracket_fd_raw(
        &self,
        s: &Point,
        xi: &DVector<f64>,
        eta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let m = &self.manifold;
        let x = s.ambient();
        let h = self.tol.fd_step_1;
        let field = |y: &DVector<f64>, c: &DVector<f64>| m.frame_extended(y) * c;
        let big_x = field(x, xi);
        let big_y = field(x, eta);
        let dy_x = (field(&(x + &big_x * h), eta) - field(&(x - &big_x * h), eta)) / (2.0 * h);
        let dx_y = (field(&(x + &big_y * h), xi) - field(&(x - &big_y * h), xi)) / (2.0 * h);
        let commutator = dy_x - dx_y;
        let normal = m.normal_residual(x, &commutator);
        if normal > BRACKET_TANGENT_TOL {
            return Err(Error::NotTangent { residual: normal });
        }
        Ok(-least_squares(&m.frame_on(x), &commutator)?)
    }

    /// Full bracket tensor at `s`.
    pub fn bracket_tensor(&self, s: &Point) -> Result<BracketTensor> {
        self.check_point(s)?;
        let n = self.dim();
        let mut data = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let b = self.bracket_raw(s, &unit(n, i), &unit(n, j))?;
                data[(i * n + j) * n..(i * n + j + 1) * n].copy_from_slice(b.as_slice());
            }
        }
        Ok(BracketTensor {
            dim: n,
            data,
            basepoint: s.clone(),
        })
    }

    /// Mixed second difference at `0` of `(t₁ξ)∘_s(t₂η) − (t₂η)∘_s(t₁ξ)`.
    pub fn bracket_via_commutator(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        let h = self.tol.fd_step_2;
        let mut acc = DVector::zeros(self.dim());
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let (u, v) = (xi.scale(a * h), eta.scale(b * h));
            let diff = self.local_product(&u, &v, s)?.into_coeffs()
                - self.local_product(&v, &u, s)?.into_coeffs();
            acc += diff * (a * b);
        }
        Ok(AlgebraElement::from(acc / (4.0 * h * h)))
    }

    /// `θ_s(v) = ρ_s⁻¹(v)` for a tangent vector `v` at `s`.
    pub fn maurer_cartan(&self, s: &Point, v: &DVector<f64>) -> Result<AlgebraElement> {
        self.check_point(s)?;
        if v.len() != self.manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.manifold.ambient_dim(),
                found: v.len(),
            });
        }
        let normal = self.manifold.normal_residual(s.ambient(), v);
        if normal > TANGENT_TOL {
            return Err(Error::NotTangent { residual: normal });
        }
        Ok(AlgebraElement::from(least_squares(
            &self.manifold.frame_on(s.ambient()),
            v,
        )?))
    }

    /// `dθ(X, Y) − b(θ(X), θ(Y))` for `X = ρ(ξ)`, `Y = ρ(η)`.
    ///
    /// `X(θ(Y))` and `Y(θ(X))` are central differences along flows, and
    /// `θ([X, Y])` comes from the symmetrized flow commutator
    /// `Φ^Y_{−h} Φ^X_{−h} Φ^Y_h Φ^X_h (s) = s + h²[X, Y] + O(h⁴)`.
    pub fn structure_equation_residual(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        let h = self.tol.fd_step_2;
        let (x, y) = (xi.coeffs(), eta.coeffs());
        let x_theta_y = self.derivative_of_theta(s, x, y, h)?;
        let y_theta_x = self.derivative_of_theta(s, y, x, h)?;

        let m = &self.manifold;
        let mut disp = DVector::zeros(m.ambient_dim());
        for sign in [1.0, -1.0] {
            let step = sign * h;
            let mut q = s.clone();
            for (c, t) in [(x, step), (y, step), (x, -step), (y, -step)] {
                q = self.flow_unchecked(c, &q, t)?.endpoint;
            }
            disp += m.displacement(s.ambient(), q.ambient());
        }
        let commutator = disp / (2.0 * h * h);
        let theta_xy = least_squares(&m.frame_on(s.ambient()), &commutator)?;

        let d_theta = x_theta_y - y_theta_x - theta_xy;
        Ok(AlgebraElement::from(d_theta - self.bracket_raw(s, x, y)?))
    }

    /// Derivative of `θ(ρ(field))` along the flow of `ρ(direction)` at `s`.
    fn derivative_of_theta(
        &self,
        s: &Point,
        direction: &DVector<f64>,
        field: &DVector<f64>,
        h: f64,
    ) -> Result<DVector<f64>> {
        let m = &self.manifold;
        let theta_at = |t: f64| -> Result<DVector<f64>> {
            let p = self.flow_unchecked(direction, s, t)?.endpoint;
            let frame = m.frame_on(p.ambient());
            least_squares(&frame, &(&frame * field))
        };
        Ok((theta_at(h)? - theta_at(-h)?) / (2.0 * h))
    }

    /// Derivative of `b(ξ, η)` along `ρ(direction)`, by central differences of
    /// the bracket at basepoints moved along the `direction` flow.
    pub fn skew_associator(
        &self,
        s: &Point,
        direction: &AlgebraElement,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        self.check_element(direction)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        Ok(AlgebraElement::from(self.skew_associator_fd_raw(
            s,
            direction.coeffs(),
            xi.coeffs(),
            eta.coeffs(),
        )?))
    }

    fn skew_associator_fd_raw(
        &self,
        s: &Point,
        direction: &DVector<f64>,
        xi: &DVector<f64>,
        eta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let h = self.tol.fd_step_2;
        let plus = self.flow_unchecked(direction, s, h)?.endpoint;
        let minus = self.flow_unchecked(direction, s, -h)?.endpoint;
        Ok((self.bracket_raw(&plus, xi, eta)? - self.bracket_raw(&minus, xi, eta)?) / (2.0 * h))
    }

    /// Closed-form skew-associator with the same argument order as
    /// [`Self::skew_associator`], or `None` if the manifold has none.
    pub fn skew_associator_closed(
        &self,
        s: &Point,
        direction: &AlgebraElement,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<Option<AlgebraElement>> {
        self.check_point(s)?;
        self.check_element(direction)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        Ok(self
            .manifold
            .closed_form_associator(s.ambient(), direction.coeffs(), xi.coeffs(), eta.coeffs())
            .map(AlgebraElement::from))
    }

    /// Associator tensor at `s`, closed form when available unless `force_fd`.
    pub fn associator_tensor(&self, s: &Point, force_fd: bool) -> Result<AssociatorTensor> {
        self.check_point(s)?;
        let n = self.dim();
        let x = s.ambient();
        let closed = !force_fd && {
            let z = DVector::zeros(n);
            self.manifold
                .closed_form_associator(x, &z, &z, &z)
                .is_some()
        };
        let mut data = vec![0.0; n * n * n * n];
        for i in 0..n {
            let d = unit(n, i);
            // basepoints depend only on the direction
            let (plus, minus) = if closed {
                (None, None)
            } else {
                let h = self.tol.fd_step_2;
                (
                    Some(self.flow_unchecked(&d, s, h)?.endpoint),
                    Some(self.flow_unchecked(&d, s, -h)?.endpoint),
                )
            };
            for j in 0..n {
                for k in 0..n {
                    let (u, v) = (unit(n, j), unit(n, k));
                    let a = match (&plus, &minus) {
                        (Some(p), Some(q)) => {
                            (self.bracket_raw(p, &u, &v)? - self.bracket_raw(q, &u, &v)?)
                                / (2.0 * self.tol.fd_step_2)
                        }
                        _ => self
                            .manifold
                            .closed_form_associator(x, &d, &u, &v)
                            .expect("closed form present"),
                    };
                    let off = ((i * n + j) * n + k) * n;
                    data[off..off + n].copy_from_slice(a.as_slice());
                }
            }
        }
        let source = if closed {
            AssociatorSource::ClosedForm
        } else {
            AssociatorSource::FiniteDifference
        };
        Ok(AssociatorTensor {
            dim: n,
            data,
            basepoint: s.clone(),
            source,
        })
    }

    /// `[ξ, η, γ]^(s)`: mixed third difference at `0` of
    /// `(t₁ξ)∘_s((t₂η)∘_s(t₃γ)) − ((t₁ξ)∘_s(t₂η))∘_s(t₃γ)`.
    pub fn associator_bracket(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        gamma: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        for e in [xi, eta, gamma] {
            self.check_element(e)?;
        }
        let h = self.tol.fd_step_3;
        let mut acc = DVector::zeros(self.dim());
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                for c in [1.0, -1.0] {
                    let (u, v, w) = (xi.scale(a * h), eta.scale(b * h), gamma.scale(c * h));
                    let right = self.local_product(&u, &self.local_product(&v, &w, s)?, s)?;
                    let left = self.local_product(&self.local_product(&u, &v, s)?, &w, s)?;
                    acc += (right.into_coeffs() - left.into_coeffs()) * (a * b * c);
                }
            }
        }
        Ok(AlgebraElement::from(acc / (8.0 * h * h * h)))
    }

    /// Cyclic sum `[ξ,[η,γ]] + [η,[γ,ξ]] + [γ,[ξ,η]]` at `s`.
    pub fn jacobi_residual(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        gamma: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        self.check_point(s)?;
        for e in [xi, eta, gamma] {
            self.check_element(e)?;
        }
        let (x, y, z) = (xi.coeffs(), eta.coeffs(), gamma.coeffs());
        let b = |u: &DVector<f64>, v: &DVector<f64>| self.bracket_raw(s, u, v);
        Ok(AlgebraElement::from(
            b(x, &b(y, z)?)? + b(y, &b(z, x)?)? + b(z, &b(x, y)?)?,
        ))
    }

    /// Cyclic bracket sum minus the cyclic sum of skew-associators
    /// (`a` differentiated along the remaining argument); vanishes identically.
    pub fn generalized_jacobi_residual(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        gamma: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        let jacobi = self.jacobi_residual(s, xi, eta, gamma)?.into_coeffs();
        let (x, y, z) = (xi.coeffs(), eta.coeffs(), gamma.coeffs());
        let a = |d: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| -> Result<DVector<f64>> {
            match self.manifold.closed_form_associator(s.ambient(), d, u, v) {
                Some(r) => Ok(r),
                None => self.skew_associator_fd_raw(s, d, u, v),
            }
        };
        let cyclic = a(z, x, y)? + a(x, y, z)? + a(y, z, x)?;
        Ok(AlgebraElement::from(jacobi - cyclic))
    }

    /// Lie-triple-system residuals of the associator tensor at `s`.
    pub fn lts_residuals(&self, s: &Point, force_fd: bool) -> Result<LtsResiduals> {
        Ok(self.associator_tensor(s, force_fd)?.lts_residuals())
    }

    /// On `S^m × S¹`: `‖F([ξ,η]) − [F(ξ), F(η)]‖` for
    /// `F(ξ) = (ξ − ⟨ξ,x⟩x, ⟨ξ,x⟩)` into the semidirect sum with bracket
    /// `[(ξ,λ), (η,μ)] = (μξ − λη, 0)`.
    pub fn semidirect_homomorphism_residual(
        &self,
        s: &Point,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
    ) -> Result<f64> {
        self.check_point(s)?;
        self.check_element(xi)?;
        self.check_element(eta)?;
        let blocks = &self.manifold.descriptor().blocks;
        let m = match blocks.as_slice() {
            [Block::Sphere { dim }, Block::Circle] => *dim,
            _ => {
                return Err(Error::UnknownManifold(format!(
                    "{} is not a sphere-circle product",
                    self.id()
                )))
            }
        };
        let x = s.ambient().rows(0, m + 1).into_owned();
        let f = |v: &DVector<f64>| -> (DVector<f64>, f64) {
            let c = v.dot(&x);
            (v - &x * c, c)
        };
        let (fb, lb) = f(&self.bracket_raw(s, xi.coeffs(), eta.coeffs())?);
        let ((fx, lx), (fy, ly)) = (f(xi.coeffs()), f(eta.coeffs()));
        let rhs = fx * ly - fy * lx;
        Ok(((fb - rhs).norm_squared() + lb * lb).sqrt())
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::random_element;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sc2() -> ParallelizedManifold {
        ParallelizedManifold::from_key("sphere_circle2").unwrap()
    }

    fn e(pm: &ParallelizedManifold, i: usize) -> AlgebraElement {
        pm.basis(i)
    }

    #[test]
    fn bracket_examples_at_north_pole() {
        let pm = sc2();
        let s = pm.point(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let b = pm.bracket(&s, &e(&pm, 0), &e(&pm, 2)).unwrap();
        assert!((b.coeffs() - e(&pm, 0).coeffs()).amax() < 1e-15);
        assert!(pm.bracket(&s, &e(&pm, 0), &e(&pm, 1)).unwrap().norm() < 1e-15);
        let xi = pm.element(&[0.3, 0.1, -0.7]).unwrap();
        assert_eq!(pm.bracket(&s, &xi, &xi).unwrap().norm(), 0.0);
    }

    #[test]
    fn fd_bracket_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for key in crate::catalog_keys() {
            let pm = ParallelizedManifold::from_key(key).unwrap();
            for _ in 0..5 {
                let s = pm.manifold().random_point(&mut rng);
                let xi = random_element(pm.dim(), 1.0, &mut rng);
                let eta = random_element(pm.dim(), 1.0, &mut rng);
                let closed = pm.bracket(&s, &xi, &eta).unwrap();
                let fd = pm.bracket_fd(&s, &xi, &eta).unwrap();
                assert!((closed.coeffs() - fd.coeffs()).amax() < 1e-7, "{key}");
            }
        }
    }

    #[test]
    fn s3_bracket_is_constant_su2() {
        let pm = ParallelizedManifold::from_key("s3").unwrap();
        let s = pm.point(&[0.1, 0.7, -0.2, 0.4]).unwrap();
        let b = pm.bracket(&s, &e(&pm, 0), &e(&pm, 1)).unwrap();
        assert!((b.coeffs() - e(&pm, 2).coeffs() * 2.0).amax() < 1e-14);
    }

    #[test]
    fn commutator_bracket_on_torus_vanishes() {
        let pm = ParallelizedManifold::from_key("torus2").unwrap();
        let s = pm.point(&[1.0, 2.0]).unwrap();
        let b = pm
            .bracket_via_commutator(&s, &e(&pm, 0), &e(&pm, 1))
            .unwrap();
        assert!(b.norm() < 1e-8);
    }

    #[test]
    fn commutator_bracket_matches_on_sphere_circle() {
        let pm = sc2();
        let s = pm.point(&[0.3, -0.5, 0.8, 1.3]).unwrap();
        let xi = pm.element(&[0.4, -0.9, 0.2]).unwrap();
        let eta = pm.element(&[-0.1, 0.5, 0.6]).unwrap();
        let a = pm.bracket(&s, &xi, &eta).unwrap();
        let b = pm.bracket_via_commutator(&s, &xi, &eta).unwrap();
        assert!((a.coeffs() - b.coeffs()).amax() < 1e-4);
    }

    #[test]
    fn maurer_cartan_examples() {
        let pm = sc2();
        let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let v = DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        let th = pm.maurer_cartan(&s, &v).unwrap();
        assert!((th.coeffs() - e(&pm, 1).coeffs()).amax() < 1e-14);
        assert!(pm.maurer_cartan(&s, &DVector::zeros(4)).unwrap().is_zero());
        let normal = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            pm.maurer_cartan(&s, &normal),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn structure_equation_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for key in ["torus2", "sphere_circle2", "s3"] {
            let pm = ParallelizedManifold::from_key(key).unwrap();
            let s = pm.manifold().random_point(&mut rng);
            let xi = random_element(pm.dim(), 1.0, &mut rng);
            let eta = random_element(pm.dim(), 1.0, &mut rng);
            assert!(
                pm.structure_equation_residual(&s, &xi, &eta)
                    .unwrap()
                    .norm()
                    < 1e-4,
                "{key}"
            );
            assert!(
                pm.structure_equation_residual(&s, &xi, &xi).unwrap().norm() < 1e-6,
                "{key}"
            );
        }
    }

    #[test]
    fn associator_examples() {
        let pm = sc2();
        let s = pm.point(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let a = |d, u, v| {
            pm.skew_associator_closed(&s, &e(&pm, d), &e(&pm, u), &e(&pm, v))
                .unwrap()
                .unwrap()
        };
        assert!(a(0, 1, 2).norm() < 1e-15);
        assert!(a(2, 0, 1).norm() < 1e-15);
        assert!((a(0, 0, 1).coeffs() + e(&pm, 1).coeffs()).amax() < 1e-15);
    }

    #[test]
    fn fd_associator_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for key in ["sphere_circle2", "sphere_circle4"] {
            let pm = ParallelizedManifold::from_key(key).unwrap();
            let s = pm.manifold().random_point(&mut rng);
            let closed = pm.associator_tensor(&s, false).unwrap();
            let fd = pm.associator_tensor(&s, true).unwrap();
            assert_eq!(closed.source(), AssociatorSource::ClosedForm);
            assert_eq!(fd.source(), AssociatorSource::FiniteDifference);
            let d = random_element(pm.dim(), 1.0, &mut rng);
            let u = random_element(pm.dim(), 1.0, &mut rng);
            let v = random_element(pm.dim(), 1.0, &mut rng);
            let diff = closed.apply(d.coeffs(), u.coeffs(), v.coeffs())
                - fd.apply(d.coeffs(), u.coeffs(), v.coeffs());
            assert!(diff.amax() < 1e-5, "{key}: {diff}");
        }
    }

    #[test]
    fn associator_bracket_skew_part_matches() {
        let pm = sc2();
        let s = pm.point(&[0.6, 0.0, 0.8, 0.2]).unwrap();
        let xi = pm.element(&[1.0, 0.2, -0.3]).unwrap();
        let eta = pm.element(&[-0.4, 0.9, 0.1]).unwrap();
        let gamma = pm.element(&[0.3, 0.5, 0.7]).unwrap();
        let lhs = pm
            .associator_bracket(&s, &xi, &eta, &gamma)
            .unwrap()
            .into_coeffs()
            - pm.associator_bracket(&s, &eta, &xi, &gamma)
                .unwrap()
                .into_coeffs();
        let rhs = pm
            .skew_associator_closed(&s, &gamma, &xi, &eta)
            .unwrap()
            .unwrap();
        assert!((lhs - rhs.coeffs()).amax() < 1e-2);
    }

    #[test]
    fn sphere_circle_is_lie_and_lts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pm = sc2();
        for _ in 0..5 {
            let s = pm.manifold().random_point(&mut rng);
            let [x, y, z] = [0, 1, 2].map(|_| random_element(3, 1.0, &mut rng));
            assert!(pm.jacobi_residual(&s, &x, &y, &z).unwrap().norm() < 1e-12);
            assert!(pm.semidirect_homomorphism_residual(&s, &x, &y).unwrap() < 1e-12);
            assert!(pm.lts_residuals(&s, false).unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn literal_sign_variant_is_also_lts() {
        // δ-terms with the opposite sign: u⟨v,w⟩ − v⟨u,w⟩ replaced by its negative
        let pm = sc2();
        let s = pm.point(&[0.2, -0.6, 0.5, 0.0]).unwrap();
        let x = s.ambient().rows(0, 3).into_owned();
        let n = 3;
        let mut data = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (w, u, v) = (unit(n, i), unit(n, j), unit(n, k));
                    let b = &u * v.dot(&x) - &v * u.dot(&x);
                    let a = &v * u.dot(&w) - &u * v.dot(&w) - b * w.dot(&x);
                    let off = ((i * n + j) * n + k) * n;
                    data[off..off + n].copy_from_slice(a.as_slice());
                }
            }
        }
        let t = AssociatorTensor {
            dim: n,
            data,
            basepoint: s,
            source: AssociatorSource::ClosedForm,
        };
        assert!(t.lts_residuals().max() < 1e-12);
    }

    #[test]
    fn composite_generalized_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pm = ParallelizedManifold::from_key("sphere_sphere_circle2_2").unwrap();
        let s = pm.manifold().random_point(&mut rng);
        let [x, y, z] = [0, 1, 2].map(|_| random_element(5, 1.0, &mut rng));
        assert!(pm.jacobi_residual(&s, &x, &y, &z).unwrap().norm() > 1e-3);
        assert!(
            pm.generalized_jacobi_residual(&s, &x, &y, &z)
                .unwrap()
                .norm()
                < 1e-5
        );
    }

    #[test]
    fn non_sphere_circle_has_no_semidirect_map() {
        let pm = ParallelizedManifold::from_key("s3").unwrap();
        let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(pm
            .semidirect_homomorphism_residual(&s, &e(&pm, 0), &e(&pm, 1))
            .is_err());
    }

    proptest! {
        #[test]
        fn bracket_antisymmetric_and_bilinear(
            p in prop::array::uniform4(-1.0f64..1.0),
            u in prop::array::uniform3(-2.0f64..2.0),
            v in prop::array::uniform3(-2.0f64..2.0),
            w in prop::array::uniform3(-2.0f64..2.0),
            c in -3.0f64..3.0,
        ) {
            prop_assume!(p[..3].iter().map(|a| a * a).sum::<f64>() > 1e-3);
            let pm = sc2();
            let s = pm.point(&p).unwrap();
            let (u, v, w) = (pm.element(&u).unwrap(), pm.element(&v).unwrap(), pm.element(&w).unwrap());
            let b = |a: &AlgebraElement, b: &AlgebraElement| pm.bracket(&s, a, b).unwrap().into_coeffs();
            prop_assert!((b(&u, &v) + b(&v, &u)).amax() < 1e-10);
            let lin = b(&(&u + &(c * &w)), &v) - b(&u, &v) - b(&w, &v) * c;
            prop_assert!(lin.amax() < 1e-10);
            let t = pm.bracket_tensor(&s).unwrap();
            prop_assert!(t.antisymmetry_residual() < 1e-12);
        }
    }
}
