// Cross-check the primal-dual solver against a slow, independent oracle
// (gradient descent on a smoothed version of the same energy) on a tiny
// random instance.
//
// ```text
// cargo run --release --example oracle_check [-- <oracle iterations>]
// ```

use convex_sr::oracle::{compare_with_pd, tiny_instance};

pub fn check(oracle_iters: usize) -> convex_sr::Result<f64> {
    let inst = tiny_instance(8, 2, 4, 0)?;
    let cmp = compare_with_pd(&inst, 10.0, 0.5, 1e-4, oracle_iters, 0)?;
    println!("primal-dual energy {:.9} after {} iterations", cmp.energy_pd, cmp.pd_iterations);
    println!("oracle energy      {:.9} after {oracle_iters} iterations", cmp.energy_oracle);
    println!("relative gap       {:.3e}", cmp.rel_gap);
    Ok(cmp.rel_gap)
}

pub fn run_example() -> convex_sr::Result<()> {
    check(200_000).map(|_| ())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    match std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        Some(iters) => check(iters).map(|_| ()),
        None => run_example(),
    }
}
