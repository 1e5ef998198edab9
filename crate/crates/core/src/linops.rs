//! Linear operators of the energy and their exact adjoints.
//!
//! Every operator here comes with a transpose that is the literal adjoint of
//! the discrete map, so `<T x, y> == <x, T^T y>` holds to rounding error.
//! Boundary handling:
//!
//! * gradient: forward differences, zero in the last column/row (Neumann);
//! * blur: separable Gaussian with replicate (clamp-to-edge) boundary;
//! * decimation: keeps the sample at offset `scale / 2` inside each block.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image_core::{LinearSpace, Plane, VectorField};

/// Multiplier applied to the power-iteration estimate of an operator norm.
pub const OP_NORM_SAFETY: f64 = 1.01;

/// Minimum number of power iterations accepted by [`estimate_op_norm`].
pub const MIN_POWER_ITERS: usize = 20;

/// Forward-difference gradient with Neumann boundary.
pub fn grad(u: &Plane) -> VectorField {
    let (w, h) = u.dims();
    let mut px = Plane::zeros(w, h);
    let mut py = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let c = u.at(x, y);
            if x + 1 < w {
                px[(x, y)] = u.at(x + 1, y) - c;
            }
            if y + 1 < h {
                py[(x, y)] = u.at(x, y + 1) - c;
            }
        }
    }
    VectorField { px, py }
}

/// Discrete divergence, the negative adjoint of [`grad`].
///
/// Written as the scatter form of the gradient's transpose, so entries of `p`
/// in the last column (x component) or last row (y component) are ignored,
/// exactly as the gradient never writes them.
pub fn div(p: &VectorField) -> Plane {
    let (w, h) = p.dims();
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                let v = p.px.at(x, y);
                out[(x, y)] += v;
                out[(x + 1, y)] -= v;
            }
            if y + 1 < h {
                let v = p.py.at(x, y);
                out[(x, y)] += v;
                out[(x, y + 1)] -= v;
            }
        }
    }
    out
}

/// Truncated, normalized 1D Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    taps: Vec<f64>,
}

impl GaussianKernel {
    /// Sampled Gaussian with radius `ceil(3 sigma)` (at least 1), normalized to unit sum.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("kernel sigma {sigma}")));
        }
        let radius = ((3.0 * sigma).ceil() as usize).max(1);
        Ok(Self::with_radius(sigma, radius))
    }

    /// Sampled Gaussian with an explicit radius, normalized to unit sum.
    pub fn with_radius(sigma: f64, radius: usize) -> Self {
        let r = radius as f64;
        let mut taps: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let t = i as f64 - r;
                (-t * t / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Self {
            sigma,
            radius,
            taps,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Anti-alias kernel for an integer scale factor: `sigma = sqrt(scale^2 - 1) / 4`.
pub fn make_kernel(scale: usize) -> Result<GaussianKernel> {
    if scale < 2 {
        return Err(Error::InvalidScale(scale));
    }
    let xi = scale as f64;
    GaussianKernel::from_sigma(0.25 * (xi * xi - 1.0).sqrt())
}

fn conv_rows(u: &Plane, taps: &[f64], r: isize) -> Plane {
    let (w, h) = u.dims();
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * u.at_clamped(x as isize + k as isize - r, y as isize);
            }
            out[(x, y)] = acc;
        }
    }
    out
}

fn conv_cols(u: &Plane, taps: &[f64], r: isize) -> Plane {
    let (w, h) = u.dims();
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * u.at_clamped(x as isize, y as isize + k as isize - r);
            }
            out[(x, y)] = acc;
        }
    }
    out
}

fn scatter_rows(v: &Plane, taps: &[f64], r: isize) -> Plane {
    let (w, h) = v.dims();
    let hi = w as isize - 1;
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let val = v.at(x, y);
            for (k, &t) in taps.iter().enumerate() {
                let src = (x as isize + k as isize - r).clamp(0, hi) as usize;
                out[(src, y)] += t * val;
            }
        }
    }
    out
}

fn scatter_cols(v: &Plane, taps: &[f64], r: isize) -> Plane {
    let (w, h) = v.dims();
    let hi = h as isize - 1;
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let val = v.at(x, y);
            for (k, &t) in taps.iter().enumerate() {
                let src = (y as isize + k as isize - r).clamp(0, hi) as usize;
                out[(x, src)] += t * val;
            }
        }
    }
    out
}

/// Separable Gaussian blur with replicate boundary.
pub fn blur(u: &Plane, k: &GaussianKernel) -> Plane {
    let r = k.radius as isize;
    conv_cols(&conv_rows(u, &k.taps, r), &k.taps, r)
}

/// Exact transpose of [`blur`]: each output sample scatters its weighted
/// contributions back to the (clamped) source pixels it gathered from.
pub fn blur_adjoint(v: &Plane, k: &GaussianKernel) -> Plane {
    let r = k.radius as isize;
    scatter_rows(&scatter_cols(v, &k.taps, r), &k.taps, r)
}

fn check_divisible(u: &Plane, scale: usize) -> Result<()> {
    if scale == 0 {
        return Err(Error::InvalidScale(scale));
    }
    let (w, h) = u.dims();
    if w % scale != 0 || h % scale != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{w}x{h} is not divisible by scale {scale}"
        )));
    }
    Ok(())
}

/// Decimation: keeps the pixel at offset `(scale/2, scale/2)` of each block.
pub fn downsample(u: &Plane, scale: usize) -> Result<Plane> {
    check_divisible(u, scale)?;
    let off = scale / 2;
    let (w, h) = (u.width() / scale, u.height() / scale);
    Ok(Plane::from_fn(w, h, |x, y| {
        u.at(x * scale + off, y * scale + off)
    }))
}

/// Zero insertion at the decimation offsets; transpose of [`downsample`].
pub fn downsample_adjoint(f: &Plane, scale: usize) -> Result<Plane> {
    if scale == 0 {
        return Err(Error::InvalidScale(scale));
    }
    let off = scale / 2;
    let mut out = Plane::zeros(f.width() * scale, f.height() * scale);
    for y in 0..f.height() {
        for x in 0..f.width() {
            out[(x * scale + off, y * scale + off)] = f.at(x, y);
        }
    }
    Ok(out)
}

/// Ties the blur `B`, the decimation `D` and the high-pass `H = I - B` to a
/// single integer scale factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DegradationModel {
    scale: usize,
    kernel: GaussianKernel,
    lr_width: usize,
    lr_height: usize,
    hr_width: usize,
    hr_height: usize,
}

impl DegradationModel {
    /// Model for a high-resolution grid of `hr_width x hr_height`.
    pub fn new(scale: usize, hr_width: usize, hr_height: usize) -> Result<Self> {
        let kernel = make_kernel(scale)?;
        if hr_width == 0 || hr_height == 0 || !hr_width.is_multiple_of(scale) || !hr_height.is_multiple_of(scale) {
            return Err(Error::DimensionMismatch(format!(
                "high-resolution size {hr_width}x{hr_height} is not divisible by scale {scale}"
            )));
        }
        Ok(Self {
            scale,
            kernel,
            lr_width: hr_width / scale,
            lr_height: hr_height / scale,
            hr_width,
            hr_height,
        })
    }

    /// Model whose low-resolution grid is `lr_width x lr_height`.
    pub fn from_lr(scale: usize, lr_width: usize, lr_height: usize) -> Result<Self> {
        Self::new(scale, lr_width * scale, lr_height * scale)
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn lr_dims(&self) -> (usize, usize) {
        (self.lr_width, self.lr_height)
    }

    pub fn hr_dims(&self) -> (usize, usize) {
        (self.hr_width, self.hr_height)
    }

    pub fn check_hr(&self, u: &Plane) -> Result<()> {
        if u.dims() != self.hr_dims() {
            return Err(Error::DimensionMismatch(format!(
                "expected high-resolution plane {:?}, got {:?}",
                self.hr_dims(),
                u.dims()
            )));
        }
        Ok(())
    }

    pub fn check_lr(&self, f: &Plane) -> Result<()> {
        if f.dims() != self.lr_dims() {
            return Err(Error::DimensionMismatch(format!(
                "expected low-resolution plane {:?}, got {:?}",
                self.lr_dims(),
                f.dims()
            )));
        }
        Ok(())
    }
}

/// `A u = D B u`.
pub fn apply_a(u: &Plane, m: &DegradationModel) -> Result<Plane> {
    m.check_hr(u)?;
    downsample(&blur(u, &m.kernel), m.scale)
}

/// `A^T f = B^T D^T f`.
pub fn apply_at(f: &Plane, m: &DegradationModel) -> Result<Plane> {
    m.check_lr(f)?;
    Ok(blur_adjoint(&downsample_adjoint(f, m.scale)?, &m.kernel))
}

/// `H u = u - B u`.
pub fn highpass(u: &Plane, k: &GaussianKernel) -> Plane {
    u.sub(&blur(u, k))
}

/// `H^T v = v - B^T v`.
pub fn highpass_adjoint(v: &Plane, k: &GaussianKernel) -> Plane {
    v.sub(&blur_adjoint(v, k))
}

/// Estimate `||K||` by power iteration on `K^T K`.
///
/// `template` fixes the shape of the iterate; its contents are ignored. The
/// start vector is drawn from a ChaCha stream seeded with `seed`. Returns the
/// square root of the largest Rayleigh quotient seen, times [`OP_NORM_SAFETY`].
pub fn estimate_op_norm<V, F>(template: &V, apply_ktk: F, iters: usize, seed: u64) -> Result<f64>
where
    V: LinearSpace,
    F: Fn(&V) -> V,
{
    if iters < MIN_POWER_ITERS {
        return Err(Error::InvalidConfig(format!(
            "power iteration needs at least {MIN_POWER_ITERS} iterations, got {iters}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = template.zeroed();
    let mut attempts = 0;
    let mut mx = loop {
        x.randomize(&mut rng);
        let n = x.norm();
        x.scale(1.0 / n);
        let mx = apply_ktk(&x);
        if mx.norm() > 0.0 {
            break mx;
        }
        attempts += 1;
        if attempts == 2 {
            return Err(Error::DegenerateOperator);
        }
    };

    let mut best: f64 = 0.0;
    for _ in 0..iters {
        let rq = x.dot(&mx);
        if !rq.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        best = best.max(rq);
        let n = mx.norm();
        if n == 0.0 {
            break;
        }
        x = mx;
        x.scale(1.0 / n);
        mx = apply_ktk(&x);
    }
    Ok(best.sqrt() * OP_NORM_SAFETY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_plane(w: usize, h: usize, rng: &mut dyn RngCore) -> Plane {
        let mut p = Plane::zeros(w, h);
        p.randomize(rng);
        p
    }

    fn rel_gap(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let g = grad(&Plane::filled(5, 4, 0.7));
        assert_eq!(g.px.max_abs(), 0.0);
        assert_eq!(g.py.max_abs(), 0.0);
    }

    #[test]
    fn grad_one_by_two() {
        let u = Plane::new(2, 1, vec![0.25, 1.0]).unwrap();
        let g = grad(&u);
        assert_eq!(g.px.data(), &[0.75, 0.0]);
        assert_eq!(g.py.data(), &[0.0, 0.0]);
    }

    #[test]
    fn div_of_zero_is_zero() {
        assert_eq!(div(&VectorField::zeros(3, 3)).max_abs(), 0.0);
    }

    #[test]
    fn div_of_constant_field_vanishes_in_interior() {
        let p = VectorField {
            px: Plane::filled(5, 5, 0.3),
            py: Plane::filled(5, 5, -1.1),
        };
        let d = div(&p);
        for y in 1..4 {
            for x in 1..4 {
                assert!(d.at(x, y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grad_div_adjoint_on_2x2_basis() {
        for i in 0..4 {
            let mut u = Plane::zeros(2, 2);
            u.data_mut()[i] = 1.0;
            for j in 0..8 {
                let mut p = VectorField::zeros(2, 2);
                if j < 4 {
                    p.px.data_mut()[j] = 1.0;
                } else {
                    p.py.data_mut()[j - 4] = 1.0;
                }
                assert_eq!(grad(&u).dot(&p), -u.dot(&div(&p)));
            }
        }
    }

    #[test]
    fn grad_div_adjoint_random() {
        let mut r = rng(1);
        for _ in 0..20 {
            let u = random_plane(5, 5, &mut r);
            let mut p = VectorField::zeros(5, 5);
            p.randomize(&mut r);
            assert!(rel_gap(grad(&u).dot(&p), -u.dot(&div(&p))) < 1e-12);
        }
    }

    #[test]
    fn gradient_norm_below_classical_bound() {
        let t = Plane::zeros(12, 9);
        let l = estimate_op_norm(&t, |u| div(&grad(u)).scaled(-1.0), 200, 3).unwrap();
        assert!(l / OP_NORM_SAFETY <= 8f64.sqrt());
        assert!(l > 2.5);
    }

    #[test]
    fn kernel_sigma_from_scale() {
        let k4 = make_kernel(4).unwrap();
        assert!((k4.sigma() - 0.968_245_836_551_854_2).abs() < 1e-12);
        assert_eq!(k4.radius(), 3);
        let k2 = make_kernel(2).unwrap();
        assert!((k2.sigma() - 0.433_012_701_892_219_3).abs() < 1e-12);
        assert_eq!(k2.radius(), 2);
        assert!(matches!(make_kernel(1), Err(Error::InvalidScale(1))));
        assert!(make_kernel(0).is_err());
    }

    #[test]
    fn kernel_taps_normalized_and_symmetric() {
        let mut prev = 0.0;
        for xi in 2..12 {
            let k = make_kernel(xi).unwrap();
            let s: f64 = k.taps().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let n = k.taps().len();
            assert_eq!(n, 2 * k.radius() + 1);
            for i in 0..n {
                assert_eq!(k.taps()[i], k.taps()[n - 1 - i]);
            }
            assert!(k.sigma() > prev);
            prev = k.sigma();
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let k = make_kernel(4).unwrap();
        let b = blur(&Plane::filled(7, 5, 0.42), &k);
        assert!(b.data().iter().all(|v| (v - 0.42).abs() < 1e-14));
    }

    #[test]
    fn blur_impulse_is_outer_product() {
        let k = make_kernel(4).unwrap();
        let n = 15;
        let c = n / 2;
        let mut u = Plane::zeros(n, n);
        u[(c, c)] = 1.0;
        let b = blur(&u, &k);
        let r = k.radius();
        for y in 0..n {
            for x in 0..n {
                let dx = x as isize - c as isize + r as isize;
                let dy = y as isize - c as isize + r as isize;
                let expected = if (0..=2 * r as isize).contains(&dx) && (0..=2 * r as isize).contains(&dy)
                {
                    k.taps()[dx as usize] * k.taps()[dy as usize]
                } else {
                    0.0
                };
                assert!((b.at(x, y) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blur_adjoint_random() {
        let mut r = rng(2);
        let k = make_kernel(4).unwrap();
        for _ in 0..20 {
            let u = random_plane(7, 7, &mut r);
            let v = random_plane(7, 7, &mut r);
            assert!(rel_gap(blur(&u, &k).dot(&v), u.dot(&blur_adjoint(&v, &k))) < 1e-12);
        }
    }

    #[test]
    fn downsample_picks_block_center() {
        let u = Plane::from_fn(4, 4, |x, y| (10 * y + x) as f64);
        let d = downsample(&u, 4).unwrap();
        assert_eq!(d.dims(), (1, 1));
        assert_eq!(d.at(0, 0), 22.0);
        assert!(downsample(&Plane::zeros(5, 4), 4).is_err());
    }

    #[test]
    fn decimation_of_zero_insertion_is_identity() {
        let mut r = rng(3);
        for scale in 2..6 {
            let f = random_plane(3, 4, &mut r);
            let up = downsample_adjoint(&f, scale).unwrap();
            assert_eq!(downsample(&up, scale).unwrap(), f);
        }
    }

    #[test]
    fn downsample_adjoint_exact() {
        let mut r = rng(4);
        for scale in 2..5 {
            let u = random_plane(4 * scale, 3 * scale, &mut r);
            let f = random_plane(4, 3, &mut r);
            let lhs = downsample(&u, scale).unwrap().dot(&f);
            let rhs = u.dot(&downsample_adjoint(&f, scale).unwrap());
            assert!(rel_gap(lhs, rhs) < 1e-15);
        }
    }

    #[test]
    fn degradation_preserves_constants() {
        let m = DegradationModel::new(4, 16, 12).unwrap();
        let f = apply_a(&Plane::filled(16, 12, 0.3), &m).unwrap();
        assert_eq!(f.dims(), (4, 3));
        assert!(f.data().iter().all(|v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn degradation_shape_errors() {
        assert!(DegradationModel::new(4, 10, 12).is_err());
        assert!(DegradationModel::new(1, 10, 10).is_err());
        let m = DegradationModel::new(2, 8, 8).unwrap();
        assert!(apply_a(&Plane::zeros(6, 8), &m).is_err());
        assert!(apply_at(&Plane::zeros(3, 4), &m).is_err());
    }

    #[test]
    fn degradation_adjoint_random() {
        let mut r = rng(5);
        let m = DegradationModel::new(4, 16, 12).unwrap();
        for _ in 0..20 {
            let u = random_plane(16, 12, &mut r);
            let f = random_plane(4, 3, &mut r);
            let lhs = apply_a(&u, &m).unwrap().dot(&f);
            let rhs = u.dot(&apply_at(&f, &m).unwrap());
            assert!(rel_gap(lhs, rhs) < 1e-12);
        }
    }

    #[test]
    fn highpass_kills_dc() {
        let k = make_kernel(4).unwrap();
        assert!(highpass(&Plane::filled(6, 6, 0.9), &k).max_abs() < 1e-14);
        let mut r = rng(6);
        let u = random_plane(6, 6, &mut r);
        let shifted = u.map(|v| v + 0.37);
        assert!(highpass(&u, &k).max_abs_diff(&highpass(&shifted, &k)) < 1e-14);
    }

    #[test]
    fn highpass_adjoint_random() {
        let mut r = rng(7);
        let k = make_kernel(3).unwrap();
        for _ in 0..20 {
            let u = random_plane(9, 6, &mut r);
            let v = random_plane(9, 6, &mut r);
            let lhs = highpass(&u, &k).dot(&v);
            let rhs = u.dot(&highpass_adjoint(&v, &k));
            assert!(rel_gap(lhs, rhs) < 1e-12);
        }
    }

    #[test]
    fn op_norm_of_scaled_identity() {
        let t = Plane::zeros(6, 6);
        let l1 = estimate_op_norm(&t, |x| x.clone(), 30, 0).unwrap();
        assert!((l1 - 1.01).abs() < 1e-3);
        let l2 = estimate_op_norm(&t, |x| x.scaled(4.0), 30, 0).unwrap();
        assert!((l2 - 2.02).abs() < 1e-3);
    }

    #[test]
    fn op_norm_is_deterministic_and_validates() {
        let t = Plane::zeros(8, 8);
        let k = make_kernel(2).unwrap();
        let op = |x: &Plane| highpass_adjoint(&highpass(x, &k), &k);
        let a = estimate_op_norm(&t, op, 40, 11).unwrap();
        let b = estimate_op_norm(&t, op, 40, 11).unwrap();
        assert_eq!(a, b);
        assert!(estimate_op_norm(&t, op, 5, 11).is_err());
        assert!(matches!(
            estimate_op_norm(&t, |x| x.zeroed(), 30, 0),
            Err(Error::DegenerateOperator)
        ));
    }
}
