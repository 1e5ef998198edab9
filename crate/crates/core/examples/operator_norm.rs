// Power-iteration estimate of `||K||` and the step sizes it implies.
//
// The stacked operator is `K x = (grad u, H u - w_i)`. Its norm grows with
// the number of candidates, which is why the steps shrink as more
// candidates are added.

use convex_sr::linops::{make_kernel, OP_NORM_SAFETY};
use convex_sr::solver::estimate_k_norm;

pub fn run_example() -> convex_sr::Result<()> {
    let kernel = make_kernel(4)?;
    println!(
        "Gaussian kernel for x4: sigma {:.6}, radius {}",
        kernel.sigma(),
        kernel.radius()
    );
    println!("{:>10} {:>10} {:>12} {:>12}", "candidates", "L", "tau = sigma", "tau*sigma*L^2");
    for n in [0, 1, 2, 6, 12] {
        let l = estimate_k_norm(100, 100, n, &kernel, 100, 0)?;
        let step = 1.0 / (l * (1.0 + 0.01));
        println!("{n:>10} {l:>10.5} {step:>12.6} {:>12.6}", step * step * l * l);
    }
    println!("(L includes the {OP_NORM_SAFETY} safety factor)");
    Ok(())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    run_example()
}
