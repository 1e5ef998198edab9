//! Conjugate gradient for symmetric positive-definite operators on planes.

use crate::error::{Error, Result};
use crate::image_core::{LinearSpace, Plane};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgConfig {
    pub max_iters: usize,
    /// Stop once `||M x - b|| <= rel_tol * ||M x0 - b||`.
    pub rel_tol: f64,
}

impl CgConfig {
    pub fn new(max_iters: usize, rel_tol: f64) -> Result<Self> {
        let cfg = Self { max_iters, rel_tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("cg max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cg rel_tol {} outside (0, 1)",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgReport {
    pub iterations_used: usize,
    pub final_rel_residual: f64,
    pub converged: bool,
    /// Residual norm before the first iteration and after each iteration.
    pub residual_norms: Vec<f64>,
}

/// Solve `M x = b` starting from the warm start `x0`.
///
/// Hitting the iteration cap is not an error; it is reported through
/// [`CgReport::converged`]. Non-finite arithmetic, or a non-positive curvature
/// `p^T M p`, means the operator is not SPD and yields [`Error::NonFinite`].
pub fn cg_solve<F>(apply_m: F, b: &Plane, x0: &Plane, cfg: &CgConfig) -> Result<(Plane, CgReport)>
where
    F: Fn(&Plane) -> Plane,
{
    cfg.validate()?;
    if !b.same_dims(x0) {
        return Err(Error::DimensionMismatch(format!(
            "cg right-hand side {:?} vs warm start {:?}",
            b.dims(),
            x0.dims()
        )));
    }

    let mut x = x0.clone();
    let mut r = b.sub(&apply_m(&x));
    let mut rs = r.dot(&r);
    if !rs.is_finite() {
        return Err(Error::NonFinite("cg initial residual"));
    }
    let r0 = rs.sqrt();
    let mut history = vec![r0];
    if r0 == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations_used: 0,
                final_rel_residual: 0.0,
                converged: true,
                residual_norms: history,
            },
        ));
    }

    let mut p = r.clone();
    let mut rel = 1.0;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let mp = apply_m(&p);
        let curvature = p.dot(&mp);
        if !curvature.is_finite() || curvature <= 0.0 {
            return Err(Error::NonFinite("cg curvature"));
        }
        let alpha = rs / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &mp);
        let rs_next = r.dot(&r);
        if !rs_next.is_finite() {
            return Err(Error::NonFinite("cg residual"));
        }
        iterations += 1;
        history.push(rs_next.sqrt());
        rel = rs_next.sqrt() / r0;
        if rel <= cfg.rel_tol {
            break;
        }
        let beta = rs_next / rs;
        rs = rs_next;
        p.scale(beta);
        p.axpy(1.0, &r);
    }

    Ok((
        x,
        CgReport {
            iterations_used: iterations,
            final_rel_residual: rel,
            converged: rel <= cfg.rel_tol,
            residual_norms: history,
        },
    ))
}
