//! First-order primal-dual solver for the hallucination energy
//!
//! ```text
//! E(u) = TV(u) + lambda ||A u - f||^2 + gamma sum_i ||H (u - g_i)||_1
//! ```
//!
//! written as `min_x max_y <K x, y> + G(x) - F*(y)` with
//! `K = [grad 0; H -I; H -I; ...]`, `x = (u, w_1..w_n)` and `y = (p, r_1..r_n)`.
//! Each iteration takes a primal resolvent step against the extrapolated dual,
//! then a dual resolvent step, then extrapolates the dual with `theta`.

use crate::cg::CgConfig;
use crate::error::{Error, Result};
use crate::image_core::{LinearSpace, Plane};
use crate::linops::{
    apply_a, div, estimate_op_norm, grad, highpass, highpass_adjoint, DegradationModel,
    GaussianKernel,
};
use crate::prox::{prox_fstar, prox_g, DataTerm, DualVars, PrimalVars};
use crate::resample::resize_plane;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the reconstruction term.
    pub lambda: f64,
    /// Weight of the hallucination term.
    pub gamma: f64,
    /// Dual extrapolation factor.
    pub theta: f64,
    pub max_outer_iters: usize,
    /// Stop once `||u^{n+1} - u^n|| / ||u^n||` drops to this value.
    pub rel_change_tol: f64,
    /// Steps satisfy `sqrt(tau * sigma) = 1 / (L (1 + step_margin))`.
    pub step_margin: f64,
    /// `sigma / tau`; 1 gives equal steps. Larger values let the candidate
    /// multipliers grow faster, which helps when `gamma` is large and the
    /// iterate is already close to the candidates.
    pub step_ratio: f64,
    pub power_iters: usize,
    pub seed: u64,
    pub cg: CgConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 5e4,
            gamma: 20.0,
            theta: 1.0,
            max_outer_iters: 400,
            rel_change_tol: 1e-5,
            step_margin: 0.01,
            step_ratio: 1.0,
            power_iters: 100,
            seed: 0,
            cg: CgConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda {}", self.lambda));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta {} outside [0, 1]", self.theta));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be >= 1".into());
        }
        if !(self.rel_change_tol >= 0.0) {
            return bad(format!("rel_change_tol {}", self.rel_change_tol));
        }
        if !(self.step_ratio.is_finite() && self.step_ratio > 0.0) {
            return bad(format!("step_ratio {}", self.step_ratio));
        }
        if !(self.step_margin > 0.0) {
            return bad(format!("step_margin {}", self.step_margin));
        }
        self.cg.validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveDiagnostics {
    /// Energy of `u^n` after each iteration.
    pub energy_trace: Vec<f64>,
    pub rel_change_trace: Vec<f64>,
    pub iterations_run: usize,
    pub cg_total_iters: usize,
    /// Estimated `||K||` (including the power-iteration safety factor).
    pub op_norm: f64,
    pub tau: f64,
    pub sigma: f64,
    /// `tau * sigma * L^2`; always below 1.
    pub step_product: f64,
    /// Whether the relative-change criterion stopped the loop.
    pub converged: bool,
}

impl SolveDiagnostics {
    pub fn final_energy(&self) -> Option<f64> {
        self.energy_trace.last().copied()
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.energy_trace.iter().copied().reduce(f64::min)
    }
}

fn check_problem(f: &Plane, g: &[Plane], model: &DegradationModel) -> Result<()> {
    model.check_lr(f)?;
    for gi in g {
        model.check_hr(gi)?;
    }
    Ok(())
}

/// Isotropic TV plus reconstruction plus L1 hallucination energy.
pub fn energy(
    u: &Plane,
    f: &Plane,
    g: &[Plane],
    model: &DegradationModel,
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    check_problem(f, g, model)?;
    model.check_hr(u)?;
    let tv = grad(u).norm_21();
    let residual = apply_a(u, model)?.sub(f);
    let data = lambda * residual.dot(&residual);
    let hall: f64 = g
        .iter()
        .map(|gi| highpass(&u.sub(gi), model.kernel()).abs_sum())
        .sum();
    Ok(tv + data + gamma * hall)
}

/// Energy evaluator with `H g_i` cached, for use inside the iteration.
struct CachedEnergy<'a> {
    data: &'a DataTerm,
    hg: &'a [Plane],
    gamma: f64,
}

impl CachedEnergy<'_> {
    fn eval(&self, u: &Plane) -> f64 {
        let model = self.data.model();
        let tv = grad(u).norm_21();
        let residual = apply_a(u, model).expect("hr shape").sub(self.data.f());
        let hu = highpass(u, model.kernel());
        let hall: f64 = self
            .hg
            .iter()
            .map(|hg| {
                hu.data()
                    .iter()
                    .zip(hg.data())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .sum();
        tv + self.data.lambda() * residual.dot(&residual) + self.gamma * hall
    }
}

/// `K x = (grad u, H u - w_1, ..., H u - w_n)`.
pub fn apply_k(x: &PrimalVars, kernel: &GaussianKernel) -> DualVars {
    let hu = highpass(&x.u, kernel);
    DualVars {
        p: grad(&x.u),
        r: x.w.iter().map(|w| hu.sub(w)).collect(),
    }
}

/// `K^T y = (-div p + sum_i H^T r_i, -r_1, ..., -r_n)`.
pub fn apply_kt(y: &DualVars, kernel: &GaussianKernel) -> PrimalVars {
    let mut u = div(&y.p);
    u.scale(-1.0);
    if !y.r.is_empty() {
        let mut sum = y.r[0].clone();
        for r in &y.r[1..] {
            sum.axpy(1.0, r);
        }
        u.axpy(1.0, &highpass_adjoint(&sum, kernel));
    }
    PrimalVars {
        u,
        w: y.r.iter().map(|r| r.scaled(-1.0)).collect(),
    }
}

/// Power-iteration estimate of `||K||` for an `hr_w x hr_h` grid with `n` candidates.
pub fn estimate_k_norm(
    hr_w: usize,
    hr_h: usize,
    n: usize,
    kernel: &GaussianKernel,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let template = PrimalVars::zeros(hr_w, hr_h, n);
    estimate_op_norm(
        &template,
        |x| apply_kt(&apply_k(x, kernel), kernel),
        iters,
        seed,
    )
}

/// Minimize the hallucination energy for a low-resolution plane `f` and
/// aligned high-resolution candidates `g`.
///
/// The primal estimate starts at the bicubic upsampling of `f`, each `w_i` at
/// `H (u - g_i)`, and the dual at zero.
pub fn solve(
    f: &Plane,
    g: &[Plane],
    model: &DegradationModel,
    cfg: &SolverConfig,
) -> Result<(Plane, SolveDiagnostics)> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(Error::InvalidConfig("at least one candidate is required".into()));
    }
    check_problem(f, g, model)?;

    let (w, h) = model.hr_dims();
    let n = g.len();
    let kernel = model.kernel();

    let op_norm = estimate_k_norm(w, h, n, kernel, cfg.power_iters, cfg.seed)?;
    let base = 1.0 / (op_norm * (1.0 + cfg.step_margin));
    let tau = base / cfg.step_ratio.sqrt();
    let sigma = base * cfg.step_ratio.sqrt();
    let step_product = tau * sigma * op_norm * op_norm;
    if step_product >= 1.0 {
        return Err(Error::StepSize(step_product));
    }

    let data = DataTerm::new(f.clone(), model.clone(), cfg.lambda)?;
    let hg: Vec<Plane> = g.iter().map(|gi| highpass(gi, kernel)).collect();
    let coeffs: Vec<Plane> = hg.iter().map(|p| p.scaled(-1.0)).collect();
    let objective = CachedEnergy {
        data: &data,
        hg: &hg,
        gamma: cfg.gamma,
    };

    let u0 = resize_plane(f, w, h);
    let hu0 = highpass(&u0, kernel);
    let mut x = PrimalVars {
        w: hg.iter().map(|hgi| hu0.sub(hgi)).collect(),
        u: u0,
    };
    let mut y = DualVars::zeros(w, h, n);
    let mut y_bar = y.clone();

    let mut diag = SolveDiagnostics {
        op_norm,
        tau,
        sigma,
        step_product,
        ..Default::default()
    };

    for _ in 0..cfg.max_outer_iters {
        let mut x_tilde = x.clone();
        x_tilde.axpy(-tau, &apply_kt(&y_bar, kernel));
        let (x_next, cg_report) = prox_g(&x_tilde, tau, cfg.gamma, &data, &cfg.cg, &x.u)?;
        diag.cg_total_iters += cg_report.iterations_used;

        let mut y_tilde = y.clone();
        y_tilde.axpy(sigma, &apply_k(&x_next, kernel));
        let y_next = prox_fstar(&y_tilde, sigma, &coeffs)?;

        y_bar = y_next.clone();
        y_bar.scale(1.0 + cfg.theta);
        y_bar.axpy(-cfg.theta, &y);

        if !x_next.u.is_finite() {
            return Err(Error::NonFinite("primal iterate"));
        }
        let change = x_next.u.sub(&x.u).norm();
        let base = x.u.norm();
        let rel_change = if base > 0.0 { change / base } else { change };

        x = x_next;
        y = y_next;
        diag.iterations_run += 1;
        diag.rel_change_trace.push(rel_change);
        diag.energy_trace.push(objective.eval(&x.u));

        if rel_change <= cfg.rel_change_tol {
            diag.converged = true;
            break;
        }
    }

    Ok((x.u, diag))
}
