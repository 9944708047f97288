use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric tolerances and finite-difference steps shared by every module.
///
/// Values are threaded explicitly through [`crate::ParallelizedManifold`];
/// nothing reads them from global state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub point_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
    /// Central-difference step for first derivatives.
    pub fd_step_1: f64,
    /// Step for second mixed differences.
    pub fd_step_2: f64,
    /// Step for third mixed differences.
    pub fd_step_3: f64,
    pub check_tol_analytic: f64,
    pub check_tol_fd2: f64,
    pub check_tol_fd3: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            point_tol: 1e-10,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            ode_rel_tol: 1e-10,
            ode_abs_tol: 1e-12,
            fd_step_1: 1e-5,
            fd_step_2: 1e-3,
            fd_step_3: 5e-2,
            check_tol_analytic: 1e-8,
            check_tol_fd2: 1e-4,
            check_tol_fd3: 1e-2,
        }
    }
}

impl Tolerances {
    /// Tighter solver and integrator settings; check thresholds unchanged.
    pub fn strict() -> Self {
        Self {
            newton_tol: 1e-12,
            ode_rel_tol: 1e-12,
            ode_abs_tol: 1e-14,
            ..Self::default()
        }
    }

    pub fn from_profile(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "strict" => Some(Self::strict()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("point_tol", self.point_tol),
            ("newton_tol", self.newton_tol),
            ("ode_rel_tol", self.ode_rel_tol),
            ("ode_abs_tol", self.ode_abs_tol),
            ("fd_step_1", self.fd_step_1),
            ("fd_step_2", self.fd_step_2),
            ("fd_step_3", self.fd_step_3),
            ("check_tol_analytic", self.check_tol_analytic),
            ("check_tol_fd2", self.check_tol_fd2),
            ("check_tol_fd3", self.check_tol_fd3),
        ];
        for (name, value) in reals {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidTolerance(
                "newton_max_iter must be positive".into(),
            ));
        }
        for (name, step) in [
            ("fd_step_1", self.fd_step_1),
            ("fd_step_2", self.fd_step_2),
            ("fd_step_3", self.fd_step_3),
        ] {
            if step >= 1.0 {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must be < 1, got {step}"
                )));
            }
        }
        Ok(())
    }
}
