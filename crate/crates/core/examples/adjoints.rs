// Numerically verify that every operator in the model has the adjoint the
// solver assumes: `<L x, y> = <x, L^T y>` for random `x`, `y`.

use convex_sr::image_core::{LinearSpace, Plane, VectorField};
use convex_sr::linops::{apply_a, apply_at, blur, blur_adjoint, div, grad, highpass, highpass_adjoint, DegradationModel};
use convex_sr::prox::{DualVars, PrimalVars};
use convex_sr::solver::{apply_k, apply_kt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Plane {
    let mut p = Plane::zeros(w, h);
    p.randomize(rng);
    p
}

/// Largest `|<Lx,y> - <x,L^T y>|` relative to `|<Lx,y>|` for each operator.
pub fn adjoint_gaps(trials: u64) -> Vec<(&'static str, f64)> {
    let model = DegradationModel::new(4, 16, 12).unwrap();
    let k = model.kernel().clone();
    let mut out = vec![
        ("grad / -div", 0.0f64),
        ("blur", 0.0),
        ("A = D B", 0.0),
        ("high-pass", 0.0),
        ("stacked K", 0.0),
    ];
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let u = random(16, 12, &mut rng);
        let v = random(16, 12, &mut rng);
        let f = random(4, 3, &mut rng);
        let p = VectorField::new(random(16, 12, &mut rng), random(16, 12, &mut rng)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());

        let pairs = [
            rel(grad(&u).dot(&p), -u.dot(&div(&p))),
            rel(blur(&u, &k).dot(&v), u.dot(&blur_adjoint(&v, &k))),
            rel(apply_a(&u, &model).unwrap().dot(&f), u.dot(&apply_at(&f, &model).unwrap())),
            rel(highpass(&u, &k).dot(&v), u.dot(&highpass_adjoint(&v, &k))),
            {
                let mut x = PrimalVars::zeros(16, 12, 2);
                x.randomize(&mut rng);
                let mut y = DualVars::zeros(16, 12, 2);
                y.randomize(&mut rng);
                rel(apply_k(&x, &k).dot(&y), x.dot(&apply_kt(&y, &k)))
            },
        ];
        for (slot, gap) in out.iter_mut().zip(pairs) {
            slot.1 = slot.1.max(gap);
        }
    }
    out
}

pub fn run_example() -> convex_sr::Result<()> {
    for (name, gap) in adjoint_gaps(20) {
        println!("{name:<12} worst relative gap {gap:.2e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    run_example()
}
