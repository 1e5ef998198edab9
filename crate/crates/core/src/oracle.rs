//! Slow reference solver used to cross-check the primal-dual iteration.
//!
//! The TV and L1 terms are replaced by the smooth surrogate
//! `|v| ~ sqrt(v^2 + eps^2) - eps`, and the resulting differentiable energy is
//! minimized by plain gradient descent with a fixed step below the inverse
//! Lipschitz constant of its gradient. Only meant for tiny grids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image_core::{LinearSpace, Plane, VectorField};
use crate::linops::{
    apply_a, apply_at, div, estimate_op_norm, grad, highpass, highpass_adjoint, DegradationModel,
};
use crate::resample::resize_plane;
use crate::solver::{energy, solve, SolverConfig};
use crate::cg::CgConfig;

/// Largest grid side the oracle accepts.
pub const MAX_ORACLE_SIDE: usize = 16;

/// Consecutive energy increases tolerated before declaring divergence.
const DIVERGENCE_STREAK: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub huber_eps: f64,
    pub step: f64,
    pub iters: usize,
}

impl OracleConfig {
    /// Step `1 / (8/eps + 2 lambda ||A||^2 + n gamma ||H||^2 / eps)`.
    pub fn for_problem(
        model: &DegradationModel,
        n: usize,
        lambda: f64,
        gamma: f64,
        huber_eps: f64,
        iters: usize,
    ) -> Result<Self> {
        if !(huber_eps > 0.0) {
            return Err(Error::InvalidConfig(format!("huber_eps {huber_eps}")));
        }
        let (w, h) = model.hr_dims();
        let t = Plane::zeros(w, h);
        let a_norm = estimate_op_norm(
            &t,
            |u| apply_at(&apply_a(u, model).expect("hr"), model).expect("lr"),
            200,
            1,
        )?;
        let k = model.kernel();
        let h_norm = estimate_op_norm(&t, |u| highpass_adjoint(&highpass(u, k), k), 200, 2)?;
        let lipschitz = 8.0 / huber_eps
            + 2.0 * lambda * a_norm * a_norm
            + n as f64 * gamma * h_norm * h_norm / huber_eps;
        Ok(Self {
            huber_eps,
            step: 1.0 / lipschitz,
            iters,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.huber_eps > 0.0 && self.step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "oracle eps {} step {}",
                self.huber_eps, self.step
            )));
        }
        Ok(())
    }
}

/// Smoothed energy and its gradient at `u`.
pub fn smoothed_energy_and_grad(
    u: &Plane,
    f: &Plane,
    g: &[Plane],
    model: &DegradationModel,
    lambda: f64,
    gamma: f64,
    eps: f64,
) -> Result<(f64, Plane)> {
    model.check_hr(u)?;
    let eps2 = eps * eps;
    let k = model.kernel();

    let du = grad(u);
    let (w, h) = u.dims();
    let mut q = VectorField::zeros(w, h);
    let mut tv = 0.0;
    for i in 0..du.px.len() {
        let (a, b) = (du.px.data()[i], du.py.data()[i]);
        let s = (a * a + b * b + eps2).sqrt();
        tv += s - eps;
        q.px.data_mut()[i] = a / s;
        q.py.data_mut()[i] = b / s;
    }
    let mut gradient = div(&q);
    gradient.scale(-1.0);

    let residual = apply_a(u, model)?.sub(f);
    let data = lambda * residual.dot(&residual);
    gradient.axpy(2.0 * lambda, &apply_at(&residual, model)?);

    let mut hall = 0.0;
    let mut weights = Plane::zeros(w, h);
    for gi in g {
        model.check_hr(gi)?;
        let v = highpass(&u.sub(gi), k);
        for (acc, &vi) in weights.data_mut().iter_mut().zip(v.data()) {
            let s = (vi * vi + eps2).sqrt();
            hall += s - eps;
            *acc += vi / s;
        }
    }
    gradient.axpy(gamma, &highpass_adjoint(&weights, k));

    Ok((tv + data + gamma * hall, gradient))
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub u: Plane,
    /// Smoothed energy at the final iterate.
    pub smoothed_energy: f64,
    /// Smoothed energy sampled every `trace_stride` iterations, starting at iteration 0.
    pub smoothed_trace: Vec<f64>,
    pub trace_stride: usize,
}

/// Gradient descent on the smoothed energy, starting from the bicubic upsampling of `f`.
pub fn oracle_run(
    f: &Plane,
    g: &[Plane],
    model: &DegradationModel,
    lambda: f64,
    gamma: f64,
    cfg: &OracleConfig,
) -> Result<OracleRun> {
    cfg.validate()?;
    let (w, h) = model.hr_dims();
    if w > MAX_ORACLE_SIDE || h > MAX_ORACLE_SIDE {
        return Err(Error::InvalidConfig(format!(
            "oracle limited to {MAX_ORACLE_SIDE}x{MAX_ORACLE_SIDE}, got {w}x{h}"
        )));
    }
    model.check_lr(f)?;

    let trace_stride = (cfg.iters / 1000).max(1);
    let mut u = resize_plane(f, w, h);
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    let mut streak = 0;
    let mut current = 0.0;
    for it in 0..=cfg.iters {
        let (e, gradient) = smoothed_energy_and_grad(&u, f, g, model, lambda, gamma, cfg.huber_eps)?;
        if !e.is_finite() {
            return Err(Error::OracleDiverged(it));
        }
        if e > prev + 1e-12 * prev.abs() {
            streak += 1;
            if streak >= DIVERGENCE_STREAK {
                return Err(Error::OracleDiverged(it));
            }
        } else {
            streak = 0;
        }
        prev = e;
        current = e;
        if it % trace_stride == 0 {
            trace.push(e);
        }
        if it == cfg.iters {
            break;
        }
        u.axpy(-cfg.step, &gradient);
    }
    Ok(OracleRun {
        u,
        smoothed_energy: current,
        smoothed_trace: trace,
        trace_stride,
    })
}

/// Final iterate of [`oracle_run`].
pub fn oracle_solve(
    f: &Plane,
    g: &[Plane],
    model: &DegradationModel,
    lambda: f64,
    gamma: f64,
    cfg: &OracleConfig,
) -> Result<Plane> {
    oracle_run(f, g, model, lambda, gamma, cfg).map(|r| r.u)
}

/// A seeded random problem on a tiny grid.
#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub hr: Plane,
    pub f: Plane,
    pub g: Vec<Plane>,
    pub model: DegradationModel,
}

/// Random ground truth with a smooth trend, noisy low-resolution observation
/// and noisy candidates.
pub fn tiny_instance(size: usize, candidates: usize, scale: usize, seed: u64) -> Result<TinyInstance> {
    let model = DegradationModel::new(scale, size, size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = rand_distr::Uniform::new(0.0, 1.0).expect("valid range");
    let hr = Plane::from_fn(size, size, |x, y| {
        let trend = (x + y) as f64 / (2 * size) as f64;
        0.5 * trend + 0.5 * unit.sample(&mut rng)
    });
    let obs_noise = Normal::new(0.0, 0.02).expect("valid sigma");
    let mut f = apply_a(&hr, &model)?;
    for v in f.data_mut() {
        *v += obs_noise.sample(&mut rng);
    }
    let cand_noise = Normal::new(0.0, 0.05).expect("valid sigma");
    let g = (0..candidates)
        .map(|_| {
            let mut gi = hr.clone();
            for v in gi.data_mut() {
                *v += cand_noise.sample(&mut rng);
            }
            gi
        })
        .collect();
    Ok(TinyInstance { hr, f, g, model })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub energy_pd: f64,
    pub energy_oracle: f64,
    /// `|E_pd - E_oracle| / E_oracle`
    pub rel_gap: f64,
    pub pd_iterations: usize,
}

/// Solver settings for tiny cross-check instances: converge far past the
/// production defaults so the comparison measures the optimum, not the budget.
pub fn reference_pd_config(lambda: f64, gamma: f64, seed: u64) -> SolverConfig {
    SolverConfig {
        lambda,
        gamma,
        max_outer_iters: 20_000,
        rel_change_tol: 1e-12,
        power_iters: 300,
        seed,
        cg: CgConfig {
            max_iters: 200,
            rel_tol: 1e-12,
        },
        ..Default::default()
    }
}

/// Solve `inst` with both the primal-dual solver and the oracle and compare
/// exact (unsmoothed) energies.
pub fn compare_with_pd(
    inst: &TinyInstance,
    lambda: f64,
    gamma: f64,
    huber_eps: f64,
    oracle_iters: usize,
    seed: u64,
) -> Result<OracleComparison> {
    let pd_cfg = reference_pd_config(lambda, gamma, seed);
    let (u_pd, diag) = solve(&inst.f, &inst.g, &inst.model, &pd_cfg)?;
    let ocfg = OracleConfig::for_problem(&inst.model, inst.g.len(), lambda, gamma, huber_eps, oracle_iters)?;
    let u_or = oracle_solve(&inst.f, &inst.g, &inst.model, lambda, gamma, &ocfg)?;
    let energy_pd = energy(&u_pd, &inst.f, &inst.g, &inst.model, lambda, gamma)?;
    let energy_oracle = energy(&u_or, &inst.f, &inst.g, &inst.model, lambda, gamma)?;
    Ok(OracleComparison {
        energy_pd,
        energy_oracle,
        rel_gap: (energy_pd - energy_oracle).abs() / energy_oracle,
        pd_iterations: diag.iterations_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..3 {
            let inst = tiny_instance(6, 2, 2, 100 + trial).unwrap();
            let u = Plane::from_fn(6, 6, |_, _| rng.random_range(0.0..1.0));
            let (lambda, gamma, eps) = (10.0, 0.5, 1e-2);
            let (_, g) =
                smoothed_energy_and_grad(&u, &inst.f, &inst.g, &inst.model, lambda, gamma, eps)
                    .unwrap();
            let h = 1e-6;
            let mut max_rel: f64 = 0.0;
            for i in 0..u.len() {
                let mut up = u.clone();
                up.data_mut()[i] += h;
                let mut dn = u.clone();
                dn.data_mut()[i] -= h;
                let ep = smoothed_energy_and_grad(&up, &inst.f, &inst.g, &inst.model, lambda, gamma, eps)
                    .unwrap()
                    .0;
                let em = smoothed_energy_and_grad(&dn, &inst.f, &inst.g, &inst.model, lambda, gamma, eps)
                    .unwrap()
                    .0;
                let fd = (ep - em) / (2.0 * h);
                let scale = g.max_abs().max(1e-8);
                max_rel = max_rel.max((fd - g.data()[i]).abs() / scale);
            }
            assert!(max_rel <= 1e-5, "max relative error {max_rel}");
        }
    }

    #[test]
    fn zero_energy_instance() {
        let model = DegradationModel::new(4, 8, 8).unwrap();
        let u = Plane::filled(8, 8, 0.5);
        let f = apply_a(&u, &model).unwrap();
        let g = vec![u.clone(), u.clone()];
        let cfg = OracleConfig::for_problem(&model, 2, 10.0, 0.5, 1e-4, 100).unwrap();
        let out = oracle_solve(&f, &g, &model, 10.0, 0.5, &cfg).unwrap();
        assert!(energy(&out, &f, &g, &model, 10.0, 0.5).unwrap() <= 1e-8);
    }

    #[test]
    fn smoothed_energy_never_increases() {
        let inst = tiny_instance(8, 2, 4, 3).unwrap();
        let cfg = OracleConfig::for_problem(&inst.model, 2, 10.0, 0.5, 1e-3, 20_000).unwrap();
        let run = oracle_run(&inst.f, &inst.g, &inst.model, 10.0, 0.5, &cfg).unwrap();
        for pair in run.smoothed_trace.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn oversized_grid_rejected() {
        let model = DegradationModel::new(2, 32, 32).unwrap();
        let cfg = OracleConfig {
            huber_eps: 1e-3,
            step: 1e-3,
            iters: 10,
        };
        let err = oracle_solve(&Plane::zeros(16, 16), &[], &model, 1.0, 1.0, &cfg);
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn oversized_step_is_caught_as_divergence() {
        let inst = tiny_instance(8, 1, 2, 4).unwrap();
        let cfg = OracleConfig {
            huber_eps: 1e-2,
            step: 10.0,
            iters: 1000,
        };
        let err = oracle_solve(&inst.f, &inst.g, &inst.model, 10.0, 0.5, &cfg);
        assert!(matches!(err, Err(Error::OracleDiverged(_))));
    }
}
