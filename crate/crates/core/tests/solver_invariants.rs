//! Behavioral invariants of the primal-dual solver on tiny problems.

mod common;

use common::{dense_from_plane_map, random_plane, rng};
use convex_sr::image_core::{LinearSpace, Plane};
use convex_sr::linops::{apply_a, div, grad, DegradationModel, OP_NORM_SAFETY};
use convex_sr::oracle::tiny_instance;
use convex_sr::prox::project_unit_ball;
use convex_sr::solver::{energy, solve, SolverConfig};
use nalgebra::{DMatrix, DVector};

fn tiny_cfg(lambda: f64, gamma: f64, iters: usize) -> SolverConfig {
    SolverConfig {
        lambda,
        gamma,
        max_outer_iters: iters,
        rel_change_tol: 0.0,
        power_iters: 200,
        cg: convex_sr::cg::CgConfig::new(200, 1e-13).unwrap(),
        ..Default::default()
    }
}

/// TV plus reconstruction only, solved by a separate primal-dual loop with
/// `K = grad` and an exact dense Cholesky u-step.
fn tv_only_reference(f: &Plane, model: &DegradationModel, lambda: f64, iters: usize) -> Plane {
    let (w, h) = model.hr_dims();
    let a = dense_from_plane_map(w, h, |e| apply_a(e, model).unwrap().into_data());
    // ||grad||^2 <= 8 on any grid.
    let step = 1.0 / (8f64.sqrt() * 1.05);
    let c = 2.0 * lambda * step;
    let chol = (DMatrix::<f64>::identity(w * h, w * h) + a.transpose() * &a * c)
        .cholesky()
        .unwrap();
    let atf = a.transpose() * DVector::from_column_slice(f.data()) * c;

    let mut u = Plane::zeros(w, h);
    let mut p = grad(&u);
    let mut u_bar = u.clone();
    for _ in 0..iters {
        let mut q = grad(&u_bar);
        q.scale(step);
        q.axpy(1.0, &p);
        p = project_unit_ball(&q);
        let mut u_tilde = div(&p);
        u_tilde.scale(step);
        u_tilde.axpy(1.0, &u);
        let rhs = DVector::from_column_slice(u_tilde.data()) + &atf;
        let next = Plane::new(w, h, chol.solve(&rhs).as_slice().to_vec()).unwrap();
        u_bar = next.scaled(2.0).sub(&u);
        u = next;
    }
    u
}

#[test]
fn zero_gamma_matches_tv_only_solution() {
    for seed in 0..2 {
        let inst = tiny_instance(8, 2, 4, seed).unwrap();
        let lambda = 10.0;
        let (u, _) = solve(&inst.f, &inst.g, &inst.model, &tiny_cfg(lambda, 0.0, 20_000)).unwrap();
        let reference = tv_only_reference(&inst.f, &inst.model, lambda, 20_000);
        let e_pd = energy(&u, &inst.f, &inst.g, &inst.model, lambda, 0.0).unwrap();
        let e_ref = energy(&reference, &inst.f, &inst.g, &inst.model, lambda, 0.0).unwrap();
        assert!(
            (e_pd - e_ref).abs() <= 1e-6 * e_ref,
            "seed {seed}: {e_pd} vs {e_ref}"
        );
    }
}

#[test]
fn doubling_iterations_does_not_raise_energy() {
    let inst = tiny_instance(8, 2, 4, 3).unwrap();
    let (_, short) = solve(&inst.f, &inst.g, &inst.model, &tiny_cfg(10.0, 0.5, 3000)).unwrap();
    let (_, long) = solve(&inst.f, &inst.g, &inst.model, &tiny_cfg(10.0, 0.5, 6000)).unwrap();
    let (a, b) = (short.final_energy().unwrap(), long.final_energy().unwrap());
    assert!(b <= a * (1.0 + 1e-9), "{a} -> {b}");
}

#[test]
fn best_energy_is_monotone_in_the_budget() {
    let inst = tiny_instance(8, 3, 2, 4).unwrap();
    let mut last = f64::INFINITY;
    let mut traces = Vec::new();
    for iters in [5, 20, 80, 320] {
        let (_, d) = solve(&inst.f, &inst.g, &inst.model, &tiny_cfg(10.0, 0.5, iters)).unwrap();
        let best = d.best_energy().unwrap();
        assert!(best <= last);
        last = best;
        traces.push(d.energy_trace);
    }
    // A longer run replays the shorter one exactly before continuing.
    for pair in traces.windows(2) {
        assert_eq!(pair[0][..], pair[1][..pair[0].len()]);
    }
}

#[test]
fn step_contract_holds_for_every_solve() {
    for (size, n, scale) in [(8, 1, 2), (8, 2, 4), (12, 4, 4), (16, 3, 2)] {
        let inst = tiny_instance(size, n, scale, size as u64).unwrap();
        let (_, d) = solve(&inst.f, &inst.g, &inst.model, &tiny_cfg(5e4, 20.0, 10)).unwrap();
        assert!(d.step_product < 1.0);
        assert!((d.tau * d.sigma * d.op_norm * d.op_norm - d.step_product).abs() < 1e-12);
        assert!(d.op_norm > 1.0 && d.op_norm / OP_NORM_SAFETY < 8f64.sqrt() + 2.0 * (n as f64).sqrt());
    }
}

#[test]
fn solve_is_deterministic() {
    let inst = tiny_instance(12, 2, 4, 8).unwrap();
    let cfg = tiny_cfg(50.0, 1.0, 60);
    let (a, da) = solve(&inst.f, &inst.g, &inst.model, &cfg).unwrap();
    let (b, db) = solve(&inst.f, &inst.g, &inst.model, &cfg).unwrap();
    assert_eq!(a.data(), b.data());
    assert_eq!(da, db);
}

#[test]
fn candidates_pull_toward_their_detail() {
    // With the ground truth as the only candidate and an exact observation,
    // the solver should land closer to the truth than without hallucination.
    let model = DegradationModel::new(4, 16, 16).unwrap();
    let hr = random_plane(16, 16, &mut rng(21)).map(|v| 0.5 + 0.4 * v);
    let f = apply_a(&hr, &model).unwrap();
    let err = |gamma: f64| {
        let (u, _) = solve(&f, std::slice::from_ref(&hr), &model, &tiny_cfg(100.0, gamma, 500)).unwrap();
        u.sub(&hr).norm()
    };
    assert!(err(5.0) < 0.5 * err(0.0));
}
