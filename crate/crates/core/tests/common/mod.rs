#![allow(dead_code)]

use convex_sr::image_core::{LinearSpace, Plane, VectorField};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Plane {
    let mut p = Plane::zeros(w, h);
    p.randomize(rng);
    p
}

pub fn random_field(w: usize, h: usize, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::new(random_plane(w, h, rng), random_plane(w, h, rng)).unwrap()
}

/// Relative mismatch of `<a, b>` against `<c, d>`, normalized by the product of
/// the vector norms on the larger side so a near-zero inner product does not
/// blow the ratio up.
pub fn adjoint_gap(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Column-by-column dense matrix of a linear map from planes of `w x h`.
pub fn dense_from_plane_map(w: usize, h: usize, f: impl Fn(&Plane) -> Vec<f64>) -> DMatrix<f64> {
    let n = w * h;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = Plane::zeros(w, h);
        e.data_mut()[j] = 1.0;
        cols.push(f(&e));
    }
    let m = cols[0].len();
    DMatrix::from_fn(m, n, |i, j| cols[j][i])
}
