//! Resolvent operators of the saddle-point splitting.
//!
//! The primal variable stacks the estimate `u` with one auxiliary plane `w_i`
//! per candidate; the dual stacks the TV dual field `p` with one plane `r_i`
//! per candidate. `G` is the reconstruction term plus `gamma * sum ||w_i||_1`,
//! `F*` is the indicator of the unit ball for `p` plus a linear term in `r_i`.

use rand::RngCore;

use crate::cg::{cg_solve, CgConfig, CgReport};
use crate::error::{Error, Result};
use crate::image_core::{LinearSpace, Plane, VectorField};
use crate::linops::{apply_a, apply_at, DegradationModel};

/// Primal stack `x = (u, w_1, ..., w_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalVars {
    pub u: Plane,
    pub w: Vec<Plane>,
}

/// Dual stack `y = (p, r_1, ..., r_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVars {
    pub p: VectorField,
    pub r: Vec<Plane>,
}

impl PrimalVars {
    pub fn zeros(width: usize, height: usize, n: usize) -> Self {
        Self {
            u: Plane::zeros(width, height),
            w: vec![Plane::zeros(width, height); n],
        }
    }

    pub fn candidates(&self) -> usize {
        self.w.len()
    }
}

impl DualVars {
    pub fn zeros(width: usize, height: usize, n: usize) -> Self {
        Self {
            p: VectorField::zeros(width, height),
            r: vec![Plane::zeros(width, height); n],
        }
    }

    pub fn candidates(&self) -> usize {
        self.r.len()
    }
}

impl LinearSpace for PrimalVars {
    fn dot(&self, other: &Self) -> f64 {
        self.u.dot(&other.u) + self.w.iter().zip(&other.w).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.u.axpy(alpha, &x.u);
        for (a, b) in self.w.iter_mut().zip(&x.w) {
            a.axpy(alpha, b);
        }
    }

    fn scale(&mut self, s: f64) {
        self.u.scale(s);
        self.w.iter_mut().for_each(|w| w.scale(s));
    }

    fn zeroed(&self) -> Self {
        Self {
            u: self.u.zeroed(),
            w: self.w.iter().map(Plane::zeroed).collect(),
        }
    }

    fn randomize(&mut self, rng: &mut dyn RngCore) {
        self.u.randomize(rng);
        self.w.iter_mut().for_each(|w| w.randomize(rng));
    }
}

impl LinearSpace for DualVars {
    fn dot(&self, other: &Self) -> f64 {
        self.p.dot(&other.p) + self.r.iter().zip(&other.r).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.p.axpy(alpha, &x.p);
        for (a, b) in self.r.iter_mut().zip(&x.r) {
            a.axpy(alpha, b);
        }
    }

    fn scale(&mut self, s: f64) {
        self.p.scale(s);
        self.r.iter_mut().for_each(|r| r.scale(s));
    }

    fn zeroed(&self) -> Self {
        Self {
            p: self.p.zeroed(),
            r: self.r.iter().map(Plane::zeroed).collect(),
        }
    }

    fn randomize(&mut self, rng: &mut dyn RngCore) {
        self.p.randomize(rng);
        self.r.iter_mut().for_each(|r| r.randomize(rng));
    }
}

/// Vectors whose norm is within this slack of 1 count as inside the ball, so
/// rounding in a previous projection cannot trigger a second rescale.
const BALL_SLACK: f64 = 1e-14;

/// Pointwise projection of a vector field onto the unit Euclidean ball.
pub fn project_unit_ball(p: &VectorField) -> VectorField {
    let mut out = p.clone();
    for (a, b) in out.px.data_mut().iter_mut().zip(out.py.data_mut()) {
        let norm = a.hypot(*b);
        if norm > 1.0 + BALL_SLACK {
            *a /= norm;
            *b /= norm;
        }
    }
    out
}

/// Resolvent of `sigma * F*`.
///
/// `p` is projected pixelwise onto the unit ball and each `r_i` is shifted by
/// `sigma * c_i`, where `c_i` is the coefficient of `r_i` in the linear part of
/// `-F*`. For the hallucination term that coefficient is `c_i = -H g_i`; the
/// solver precomputes it once.
pub fn prox_fstar(y_tilde: &DualVars, sigma: f64, coeffs: &[Plane]) -> Result<DualVars> {
    if coeffs.len() != y_tilde.candidates() {
        return Err(Error::DimensionMismatch(format!(
            "{} dual planes but {} coefficients",
            y_tilde.candidates(),
            coeffs.len()
        )));
    }
    let r = y_tilde
        .r
        .iter()
        .zip(coeffs)
        .map(|(r, c)| {
            let mut r = r.clone();
            r.axpy(sigma, c);
            r
        })
        .collect();
    Ok(DualVars {
        p: project_unit_ball(&y_tilde.p),
        r,
    })
}

/// Soft thresholding (the resolvent of `threshold * |.|`).
#[inline]
pub fn shrink(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// The reconstruction term `lambda * ||A u - f||^2` with `A^T f` cached.
#[derive(Clone, Debug)]
pub struct DataTerm {
    f: Plane,
    model: DegradationModel,
    lambda: f64,
    at_f: Plane,
}

impl DataTerm {
    pub fn new(f: Plane, model: DegradationModel, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda {lambda}")));
        }
        let at_f = apply_at(&f, &model)?;
        Ok(Self {
            f,
            model,
            lambda,
            at_f,
        })
    }

    pub fn f(&self) -> &Plane {
        &self.f
    }

    pub fn model(&self) -> &DegradationModel {
        &self.model
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `A^T A u`.
    pub fn normal_op(&self, u: &Plane) -> Plane {
        let au = apply_a(u, &self.model).expect("plane shape checked by caller");
        apply_at(&au, &self.model).expect("low-resolution shape from apply_a")
    }

    /// Coefficient of `A^T A` in the u-step system for step `tau`.
    ///
    /// The resolvent of `tau * lambda * ||A u - f||^2` solves
    /// `(I + 2 lambda tau A^T A) u = 2 lambda tau A^T f + u~`.
    pub fn system_weight(&self, tau: f64) -> f64 {
        2.0 * self.lambda * tau
    }

    /// Right-hand side `2 lambda tau A^T f + u~`.
    pub fn rhs(&self, u_tilde: &Plane, tau: f64) -> Plane {
        let mut b = u_tilde.clone();
        b.axpy(self.system_weight(tau), &self.at_f);
        b
    }

    /// Apply the u-step operator `I + 2 lambda tau A^T A`.
    pub fn system_op(&self, u: &Plane, tau: f64) -> Plane {
        let mut out = u.clone();
        out.axpy(self.system_weight(tau), &self.normal_op(u));
        out
    }
}

/// Resolvent of `tau * G`.
///
/// Each `w_i` is soft-thresholded at `tau * gamma`; `u` solves the linear
/// u-step system by conjugate gradients warm-started at `u_warm`.
pub fn prox_g(
    x_tilde: &PrimalVars,
    tau: f64,
    gamma: f64,
    data: &DataTerm,
    cg_cfg: &CgConfig,
    u_warm: &Plane,
) -> Result<(PrimalVars, CgReport)> {
    if !(tau > 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!("tau {tau}, gamma {gamma}")));
    }
    data.model().check_hr(&x_tilde.u)?;
    data.model().check_hr(u_warm)?;

    let threshold = tau * gamma;
    let w = x_tilde
        .w
        .iter()
        .map(|w| w.map(|v| shrink(v, threshold)))
        .collect();

    let b = data.rhs(&x_tilde.u, tau);
    let (u, report) = cg_solve(|v| data.system_op(v, tau), &b, u_warm, cg_cfg)?;
    Ok((PrimalVars { u, w }, report))
}
