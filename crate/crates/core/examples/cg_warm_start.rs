// The u-step of every outer iteration solves `(I + 2 lambda tau A^T A) u = b`.
// Consecutive right-hand sides are close, so a CG run started from the
// previous solution reaches a given accuracy with a far smaller budget. The
// stopping rule is relative to the starting residual, so this example fixes
// the budget and compares the error that remains.

use convex_sr::cg::{cg_solve, CgConfig};
use convex_sr::image_core::{LinearSpace, Plane};
use convex_sr::linops::DegradationModel;
use convex_sr::prox::DataTerm;

/// Errors after `budget` CG iterations from a cold and a warm start, per step.
pub fn warm_vs_cold(budget: usize) -> convex_sr::Result<Vec<(f64, f64)>> {
    let model = DegradationModel::new(4, 64, 64)?;
    let f = Plane::from_fn(16, 16, |x, y| 0.5 + 0.3 * ((x as f64) * 0.4).sin() * ((y as f64) * 0.3).cos());
    let data = DataTerm::new(f, model, 5e4)?;
    let tau = 0.2;
    let exact_cfg = CgConfig::new(500, 1e-14)?;
    let short = CgConfig::new(budget, 1e-14)?;

    let mut u_tilde = Plane::from_fn(64, 64, |x, y| ((x ^ y) % 7) as f64 / 7.0);
    let mut previous = Plane::zeros(64, 64);
    let mut rows = Vec::new();
    for _ in 0..5 {
        let b = data.rhs(&u_tilde, tau);
        let op = |v: &Plane| data.system_op(v, tau);
        let (exact, _) = cg_solve(op, &b, &previous, &exact_cfg)?;
        let (cold, _) = cg_solve(op, &b, &Plane::zeros(64, 64), &short)?;
        let (warm, _) = cg_solve(op, &b, &previous, &short)?;
        let err = |u: &Plane| u.sub(&exact).norm() / exact.norm();
        rows.push((err(&cold), err(&warm)));
        previous = exact;
        // A small change, as between two outer iterations.
        u_tilde = u_tilde.map(|v| 0.99 * v + 0.005);
    }
    Ok(rows)
}

pub fn run_example() -> convex_sr::Result<()> {
    let budget = 3;
    println!("relative error after {budget} CG iterations");
    println!("{:>5} {:>10} {:>10}", "step", "cold", "warm");
    for (step, (cold, warm)) in warm_vs_cold(budget)?.into_iter().enumerate() {
        println!("{step:>5} {cold:>10.2e} {warm:>10.2e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    run_example()
}
