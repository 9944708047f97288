//! Right quotients, the local loop `∘_s` on the model space, and factorization of points into flow steps.

use nalgebra::{DMatrix, DVector};

use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::point::Point;
use crate::ParallelizedManifold;

/// Default bound on `‖ξ‖` accepted from a quotient solve.
pub const DEFAULT_TRUST_RADIUS: f64 = 0.5;

/// Maximum number of steps [`ParallelizedManifold::factorize`] may take.
pub const MAX_FACTOR_STEPS: usize = 10_000;

const JACOBIAN_REFRESH: usize = 5;
const FD_JACOBIAN_STEP: f64 = 1e-7;

/// Solution `ξ` of `ξ·s = p`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSolve {
    pub xi: AlgebraElement,
    pub iterations: usize,
    /// Ambient distance between `ξ·s` and `p`.
    pub residual: f64,
}

impl ParallelizedManifold {
    /// `p/s`: the `ξ` nearest `0` with `ξ·s = p`, bounded by the trust radius.
    pub fn right_quotient(&self, p: &Point, s: &Point) -> Result<QuotientSolve> {
        self.right_quotient_within(p, s, self.trust_radius)
    }

    /// [`Self::right_quotient`] with an explicit trust radius.
    ///
    /// Quasi-Newton on `ξ ↦ ξ·s − p` seeded at `ξ = 0` with the exact Jacobian
    /// `ρ_s` there, Broyden updates in between, and a forward-difference
    /// refresh every few iterations.
    pub fn right_quotient_within(
        &self,
        p: &Point,
        s: &Point,
        trust_radius: f64,
    ) -> Result<QuotientSolve> {
        self.check_point(p)?;
        self.check_point(s)?;
        let n = self.dim();
        let m = &self.manifold;
        let residual_at = |xi: &DVector<f64>| -> Result<DVector<f64>> {
            let q = self.product_raw(xi, s)?;
            Ok(m.displacement(p.ambient(), q.ambient()))
        };

        let mut xi = DVector::zeros(n);
        let mut r = m.displacement(p.ambient(), s.ambient());
        let mut res = r.norm();
        let mut jac = m.frame_on(s.ambient());
        let mut iterations = 0;
        let deep_tol = self.tol.newton_tol * 1e-3;

        while res > deep_tol && iterations < self.tol.newton_max_iter {
            iterations += 1;
            if iterations % JACOBIAN_REFRESH == 0 {
                jac = self.fd_jacobian(&xi, &r, &residual_at)?;
            }
            let step = least_squares(&jac, &(-&r))?;
            let mut alpha = 1.0;
            let (mut xi_new, mut r_new, mut res_new);
            loop {
                xi_new = &xi + &step * alpha;
                r_new = residual_at(&xi_new)?;
                res_new = r_new.norm();
                if res_new < res || alpha < 1e-3 {
                    break;
                }
                alpha *= 0.5;
            }
            if xi_new.norm() > 2.0 * trust_radius {
                return Err(Error::TrustRegion {
                    norm: xi_new.norm(),
                    radius: trust_radius,
                });
            }
            let dx = &xi_new - &xi;
            let dx2 = dx.norm_squared();
            if dx2 > 0.0 {
                let dr = &r_new - &r - &jac * &dx;
                jac += dr * dx.transpose() / dx2;
            }
            let improved = res_new < res;
            let stagnating = res_new > 0.5 * res;
            if improved {
                xi = xi_new;
                r = r_new;
                res = res_new;
            }
            if res <= self.tol.newton_tol && (stagnating || dx2.sqrt() < 1e-15) {
                break;
            }
            if !improved && alpha < 1e-3 && iterations % JACOBIAN_REFRESH != JACOBIAN_REFRESH - 1 {
                // force a fresh Jacobian on the next pass
                iterations = (iterations / JACOBIAN_REFRESH + 1) * JACOBIAN_REFRESH - 1;
            }
        }
        if res > self.tol.newton_tol {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
        if xi.norm() > trust_radius {
            return Err(Error::TrustRegion {
                norm: xi.norm(),
                radius: trust_radius,
            });
        }
        Ok(QuotientSolve {
            xi: AlgebraElement::from(xi),
            iterations,
            residual: res,
        })
    }

    fn fd_jacobian(
        &self,
        xi: &DVector<f64>,
        r: &DVector<f64>,
        residual_at: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
    ) -> Result<DMatrix<f64>> {
        let n = xi.len();
        let h = FD_JACOBIAN_STEP * xi.norm().max(1.0);
        let mut jac = DMatrix::zeros(r.len(), n);
        for j in 0..n {
            let mut shifted = xi.clone();
            shifted[j] += h;
            let col = (residual_at(&shifted)? - r) / h;
            jac.set_column(j, &col);
        }
        Ok(jac)
    }

    /// `η ∘_s ξ = (η·(ξ·s))/s`.
    pub fn local_product(
        &self,
        eta: &AlgebraElement,
        xi: &AlgebraElement,
        s: &Point,
    ) -> Result<AlgebraElement> {
        self.check_element(eta)?;
        self.check_element(xi)?;
        self.check_point(s)?;
        let p = self.product_raw(eta.coeffs(), &self.product_raw(xi.coeffs(), s)?)?;
        Ok(self.right_quotient(&p, s)?.xi)
    }

    /// Right quotient in the loop: `ξ /_s η = (ξ·s)/(η·s)`, so that `(ξ /_s η) ∘_s η = ξ`.
    pub fn right_quotient_s(
        &self,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        s: &Point,
    ) -> Result<AlgebraElement> {
        self.check_element(xi)?;
        self.check_element(eta)?;
        self.check_point(s)?;
        let p = self.product_raw(xi.coeffs(), s)?;
        let q = self.product_raw(eta.coeffs(), s)?;
        Ok(self.right_quotient(&p, &q)?.xi)
    }

    /// Left quotient in the loop: `ξ \_s η = (L_{−ξ}(η·s))/s`, so that `ξ ∘_s (ξ \_s η) = η`.
    pub fn left_quotient_s(
        &self,
        xi: &AlgebraElement,
        eta: &AlgebraElement,
        s: &Point,
    ) -> Result<AlgebraElement> {
        self.check_element(xi)?;
        self.check_element(eta)?;
        self.check_point(s)?;
        let q = self.product_raw(eta.coeffs(), s)?;
        let p = self.product_raw(&-xi.coeffs(), &q)?;
        Ok(self.right_quotient(&p, s)?.xi)
    }

    /// Writes `p = ξ_1·(ξ_2·(⋯(ξ_k·s)))`, returning `[ξ_1, …, ξ_k]` (`ξ_k` acts first).
    ///
    /// Greedy: each step aims at a waypoint on the projected ambient chord
    /// towards `p`, at most `trust_radius / 2` away, and solves one quotient.
    pub fn factorize(
        &self,
        p: &Point,
        s: &Point,
        trust_radius: f64,
    ) -> Result<Vec<AlgebraElement>> {
        self.check_point(p)?;
        self.check_point(s)?;
        let m = &self.manifold;
        let mut q = s.clone();
        let mut applied = Vec::new();
        loop {
            let d = m.displacement(q.ambient(), p.ambient());
            let dist = d.norm();
            if dist <= self.tol.newton_tol {
                break;
            }
            if applied.len() >= MAX_FACTOR_STEPS {
                return Err(Error::StepBudget {
                    steps: MAX_FACTOR_STEPS,
                });
            }
            let mut reach = trust_radius / 2.0;
            let solve = loop {
                let target = if dist <= reach {
                    p.clone()
                } else {
                    match m.normalize_point(&(q.ambient() + &d * (reach / dist))) {
                        Ok(t) => t,
                        Err(_) => {
                            reach *= 0.5;
                            continue;
                        }
                    }
                };
                match self.right_quotient_within(&target, &q, trust_radius) {
                    Ok(sol) => break sol,
                    Err(Error::TrustRegion { .. } | Error::NoConvergence { .. })
                        if reach > 1e-6 =>
                    {
                        reach *= 0.5
                    }
                    Err(e) => return Err(e),
                }
            };
            q = self.product_raw(solve.xi.coeffs(), &q)?;
            applied.push(solve.xi);
        }
        applied.reverse();
        Ok(applied)
    }

    /// Applies a factorization `[ξ_1, …, ξ_k]` to `s`, innermost (`ξ_k`) first.
    pub fn reassemble(&self, steps: &[AlgebraElement], s: &Point) -> Result<Point> {
        steps
            .iter()
            .rev()
            .try_fold(s.clone(), |q, xi| self.product(xi, &q))
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

    #[test]
    fn quotient_of_self_is_zero() {
        let pm = sc2();
        let s = pm.point(&[0.2, 0.3, 0.9, 1.0]).unwrap();
        let q = pm.right_quotient(&s, &s).unwrap();
        assert!(q.xi.is_zero());
        assert_eq!(q.iterations, 0);
    }

    #[test]
    fn quotient_inverts_worked_example() {
        let pm = sc2();
        let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pm
            .point(&[
                0.648_054_273_663_885_4,
                0.761_594_155_955_764_9,
                0.0,
                0.433_780_830_483_027_1,
            ])
            .unwrap();
        let q = pm.right_quotient_within(&p, &s, 2.0).unwrap();
        assert!((q.xi.coeffs() - DVector::from_column_slice(&[0.0, 1.0, 0.0])).amax() < 1e-9);
    }

    #[test]
    fn quotient_round_trips_on_every_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for key in crate::catalog_keys() {
            let pm = ParallelizedManifold::from_key(key).unwrap();
            for _ in 0..10 {
                let s = pm.manifold().random_point(&mut rng);
                let xi = random_element(pm.dim(), 0.25, &mut rng);
                let p = pm.product(&xi, &s).unwrap();
                let q = pm.right_quotient(&p, &s).unwrap();
                assert!(
                    (q.xi.coeffs() - xi.coeffs()).amax() < 1e-8,
                    "{key}: {:?} vs {:?}",
                    q.xi,
                    xi
                );
            }
        }
    }

    #[test]
    fn trust_region_violation() {
        let pm = sc2();
        let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pm
            .product(&pm.element(&[0.0, 1.0, 0.0]).unwrap(), &s)
            .unwrap();
        assert!(matches!(
            pm.right_quotient(&p, &s),
            Err(Error::TrustRegion { .. })
        ));
    }

    #[test]
    fn identity_and_power_associativity() {
        let pm = sc2();
        let s = pm.point(&[0.3, -0.4, 0.5, 2.0]).unwrap();
        let xi = pm.element(&[0.05, 0.08, -0.03]).unwrap();
        let zero = AlgebraElement::zero(3);
        assert!((pm.local_product(&zero, &xi, &s).unwrap().coeffs() - xi.coeffs()).amax() < 1e-10);
        assert!((pm.local_product(&xi, &zero, &s).unwrap().coeffs() - xi.coeffs()).amax() < 1e-10);
        let pq = pm
            .local_product(&xi.scale(0.3), &xi.scale(0.4), &s)
            .unwrap();
        assert!((pq.coeffs() - xi.scale(0.7).coeffs()).amax() < 1e-10);
    }

    #[test]
    fn loop_quotients() {
        let pm = sc2();
        let s = pm.point(&[0.3, -0.4, 0.5, 2.0]).unwrap();
        let xi = pm.element(&[0.05, 0.08, -0.03]).unwrap();
        let eta = pm.element(&[-0.06, 0.02, 0.09]).unwrap();
        assert!(
            (pm.right_quotient_s(&xi, &AlgebraElement::zero(3), &s)
                .unwrap()
                .coeffs()
                - xi.coeffs())
            .amax()
                < 1e-10
        );
        let prod = pm.local_product(&eta, &xi, &s).unwrap();
        let back = pm.right_quotient_s(&prod, &xi, &s).unwrap();
        assert!((back.coeffs() - eta.coeffs()).amax() < 1e-9);
        let prod = pm.local_product(&xi, &eta, &s).unwrap();
        let back = pm.left_quotient_s(&xi, &prod, &s).unwrap();
        assert!((back.coeffs() - eta.coeffs()).amax() < 1e-9);
    }

    #[test]
    fn factorize_trivial_and_single_step() {
        let pm = sc2();
        let s = pm.point(&[0.0, 0.0, 1.0, 0.5]).unwrap();
        assert!(pm.factorize(&s, &s, 0.5).unwrap().is_empty());
        let xi = pm.element(&[0.05, -0.1, 0.02]).unwrap();
        let p = pm.product(&xi, &s).unwrap();
        let steps = pm.factorize(&p, &s, 0.5).unwrap();
        assert_eq!(steps.len(), 1);
        assert!((steps[0].coeffs() - xi.coeffs()).amax() < 1e-8);
    }

    #[test]
    fn factorize_antipodal_angle() {
        let pm = sc2();
        let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pm.point(&[1.0, 0.0, 0.0, std::f64::consts::PI]).unwrap();
        let steps = pm.factorize(&p, &s, 0.5).unwrap();
        assert!(steps.len() >= 2);
        let q = pm.reassemble(&steps, &s).unwrap();
        assert!(pm.distance(&q, &p) < 1e-8);
    }
}
