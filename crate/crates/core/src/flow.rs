//! Integral curves of fundamental vector fields, the product `ξ·s`, and left translations.

use nalgebra::DVector;

use crate::element::AlgebraElement;
use crate::error::Result;
use crate::ode::{integrate, OdeOptions};
use crate::point::Point;
use crate::ParallelizedManifold;

const MAX_STEPS: usize = 1_000_000;

/// Endpoint `Φ_{ξ,t}(s)` of a flow, with integrator diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub endpoint: Point,
    /// Accepted integrator steps; zero for closed-form flows.
    pub steps_taken: usize,
    /// Largest constraint residual removed by projection after a step.
    pub max_constraint_drift: f64,
}

impl ParallelizedManifold {
    /// `ρ_s(ξ)` in ambient components.
    pub fn fundamental_field(&self, xi: &AlgebraElement, s: &Point) -> Result<DVector<f64>> {
        self.check_element(xi)?;
        self.check_point(s)?;
        Ok(self.manifold.frame_on(s.ambient()) * xi.coeffs())
    }

    /// Solves `p' = ρ(ξ)|_p`, `p(0) = s` up to time `t`, in closed form when the manifold has one.
    pub fn flow(&self, xi: &AlgebraElement, s: &Point, t: f64) -> Result<FlowResult> {
        self.check_element(xi)?;
        self.check_point(s)?;
        self.flow_unchecked(xi.coeffs(), s, t)
    }

    /// Always integrates numerically, even when a closed form exists.
    pub fn flow_numeric(&self, xi: &AlgebraElement, s: &Point, t: f64) -> Result<FlowResult> {
        self.check_element(xi)?;
        self.check_point(s)?;
        self.integrate_flow(xi.coeffs(), s, t)
    }

    /// Closed-form flow endpoint, or `None` if this manifold has none.
    pub fn closed_form_flow(
        &self,
        xi: &AlgebraElement,
        s: &Point,
        t: f64,
    ) -> Result<Option<Point>> {
        self.check_element(xi)?;
        self.check_point(s)?;
        self.manifold
            .closed_form_flow(xi.coeffs(), s.ambient(), t)
            .map(|raw| self.renormalize(&raw))
            .transpose()
    }

    /// `ξ·s = Φ_{ξ,1}(s)`.
    pub fn product(&self, xi: &AlgebraElement, s: &Point) -> Result<Point> {
        Ok(self.flow(xi, s, 1.0)?.endpoint)
    }

    /// `L_ξ(p) = ξ·p`.
    pub fn left_translate(&self, xi: &AlgebraElement, p: &Point) -> Result<Point> {
        self.product(xi, p)
    }

    /// `L_ξ^{-1} = L_{−ξ}`.
    pub fn left_translate_inverse(&self, xi: &AlgebraElement, p: &Point) -> Result<Point> {
        self.product(&-xi, p)
    }

    pub(crate) fn product_raw(&self, xi: &DVector<f64>, s: &Point) -> Result<Point> {
        Ok(self.flow_unchecked(xi, s, 1.0)?.endpoint)
    }

    pub(crate) fn flow_unchecked(
        &self,
        xi: &DVector<f64>,
        s: &Point,
        t: f64,
    ) -> Result<FlowResult> {
        if t == 0.0 || xi.iter().all(|&c| c == 0.0) {
            return Ok(FlowResult {
                endpoint: s.clone(),
                steps_taken: 0,
                max_constraint_drift: 0.0,
            });
        }
        match self.manifold.closed_form_flow(xi, s.ambient(), t) {
            Some(raw) => Ok(FlowResult {
                endpoint: self.renormalize(&raw)?,
                steps_taken: 0,
                max_constraint_drift: self.manifold.constraint_residual(&raw),
            }),
            None => self.integrate_flow(xi, s, t),
        }
    }

    fn integrate_flow(&self, xi: &DVector<f64>, s: &Point, t: f64) -> Result<FlowResult> {
        if t == 0.0 {
            return Ok(FlowResult {
                endpoint: s.clone(),
                steps_taken: 0,
                max_constraint_drift: 0.0,
            });
        }
        let m = &self.manifold;
        let opts = OdeOptions {
            rel_tol: self.tol.ode_rel_tol,
            abs_tol: self.tol.ode_abs_tol,
            initial_step: t.abs() / 16.0,
            max_steps: MAX_STEPS,
        };
        let out = integrate(
            |y| m.frame_extended(y) * xi,
            s.ambient(),
            t,
            &opts,
            |y| {
                let drift = m.constraint_residual(y);
                if let Ok(p) = m.project(y) {
                    *y = p;
                }
                drift
            },
        )?;
        Ok(FlowResult {
            endpoint: self.renormalize(&out.y)?,
            steps_taken: out.steps,
            max_constraint_drift: out.max_drift,
        })
    }
}
