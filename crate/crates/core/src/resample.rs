//! Catmull-Rom bicubic resampling (cubic convolution, `a = -0.5`).
//!
//! Sampling grids are center-aligned: output pixel `i` maps to input
//! coordinate `(i + 0.5) * in / out - 0.5`. Samples outside the image are
//! replicated from the nearest edge. Downscaling widens the kernel by the
//! scale ratio, the usual antialiasing convention of image-processing
//! toolboxes, so a 4x reduction averages over a 16-pixel footprint.

use crate::image_core::Plane;

const A: f64 = -0.5;

/// Cubic convolution kernel.
#[inline]
pub fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps and weights for each output position along one axis.
///
/// When shrinking, the kernel is stretched by the size ratio so it also acts
/// as the anti-alias prefilter, and the weights are renormalized to sum to 1.
/// When enlarging this reduces to plain four-tap cubic convolution.
fn axis_taps(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = n_in as f64 / n_out as f64;
    let stretch = ratio.max(1.0);
    let hi = n_in as isize - 1;
    (0..n_out)
        .map(|i| {
            let src = (i as f64 + 0.5) * ratio - 0.5;
            let lo = (src - 2.0 * stretch).floor() as isize;
            let top = (src + 2.0 * stretch).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = (lo..=top)
                .map(|j| {
                    let w = cubic_weight((src - j as f64) / stretch);
                    (j.clamp(0, hi) as usize, w)
                })
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Resize a plane to `out_w x out_h`, rows first.
pub fn resize_plane(u: &Plane, out_w: usize, out_h: usize) -> Plane {
    assert!(out_w > 0 && out_h > 0, "target dimensions must be positive");
    let (w, h) = u.dims();
    let xt = axis_taps(w, out_w);
    let yt = axis_taps(h, out_h);

    let rows = Plane::from_fn(out_w, h, |x, y| {
        xt[x].iter().map(|&(i, wt)| wt * u.at(i, y)).sum()
    });
    Plane::from_fn(out_w, out_h, |x, y| {
        yt[y].iter().map(|&(i, wt)| wt * rows.at(x, i)).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_interpolates() {
        assert_eq!(cubic_weight(0.0), 1.0);
        assert_eq!(cubic_weight(1.0), 0.0);
        assert_eq!(cubic_weight(2.0), 0.0);
        assert_eq!(cubic_weight(-2.5), 0.0);
        for i in 0..10 {
            let f = i as f64 / 10.0;
            let s: f64 = (-1..3).map(|k| cubic_weight(f - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_resize() {
        let u = Plane::from_fn(5, 4, |x, y| ((x * 7 + y * 3) % 5) as f64 / 4.0);
        assert!(resize_plane(&u, 5, 4).max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn constants_survive_any_resize() {
        let u = Plane::filled(6, 5, 0.37);
        for (w, h) in [(1, 1), (3, 2), (12, 10), (25, 7)] {
            let r = resize_plane(&u, w, h);
            assert!(r.data().iter().all(|v| (v - 0.37).abs() < 1e-14));
        }
    }

    #[test]
    fn shrink_uses_widened_kernel() {
        let u = Plane::from_fn(16, 1, |x, _| if x == 6 { 1.0 } else { 0.0 });
        let r = resize_plane(&u, 4, 1);
        // Output 1 sits at input 5.5 and sees the impulse through a kernel
        // stretched 4x, normalized over all of its taps.
        let total: f64 = (-3..=14).map(|j| cubic_weight((5.5 - j as f64) / 4.0)).sum();
        assert!((r.at(1, 0) - cubic_weight(0.125) / total).abs() < 1e-12);
        // Without the stretch output 0 (at 1.5) could not reach pixel 6.
        assert!(r.at(0, 0) != 0.0);
    }

    #[test]
    fn shrink_suppresses_fine_detail() {
        let u = Plane::from_fn(200, 8, |x, _| 0.5 + 0.5 * (x as f64 * 0.8 * std::f64::consts::PI).cos());
        let r = resize_plane(&u, 50, 2);
        for x in 2..48 {
            assert!((r.at(x, 0) - 0.5).abs() < 0.02, "x={x}: {}", r.at(x, 0));
        }
    }

    #[test]
    fn linear_ramp_reproduced_in_interior() {
        let u = Plane::from_fn(40, 40, |x, y| 0.01 * x as f64 - 0.02 * y as f64);
        let r = resize_plane(&u, 160, 160);
        // Output pixel i sits at input coordinate (i + 0.5) / 4 - 0.5.
        for y in 12..148 {
            for x in 12..148 {
                let sx = (x as f64 + 0.5) / 4.0 - 0.5;
                let sy = (y as f64 + 0.5) / 4.0 - 0.5;
                assert!((r.at(x, y) - (0.01 * sx - 0.02 * sy)).abs() < 1e-12);
            }
        }
    }
}
