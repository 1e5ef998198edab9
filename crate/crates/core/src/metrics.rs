//! PSNR and SSIM on `[0, 1]` images.
//!
//! Both inputs are clamped to `[0, 1]` first. PSNR uses a peak of 1 and the
//! MSE pooled over all pixels and channels; identical inputs give
//! `f64::INFINITY`. SSIM is the single-scale index with an 11x11 Gaussian
//! window (sigma 1.5), `K1 = 0.01`, `K2 = 0.03`, dynamic range 1, evaluated at
//! every fully covered window position and averaged, then averaged across
//! channels.

use crate::error::{Error, Result};
use crate::image_core::{MultiImage, Plane};
use crate::linops::GaussianKernel;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub channel_psnr_db: Vec<f64>,
    pub channel_ssim: Vec<f64>,
}

fn check_same(a: &MultiImage, b: &MultiImage) -> Result<()> {
    if a.dims() != b.dims() || a.channel_count() != b.channel_count() {
        return Err(Error::DimensionMismatch(format!(
            "{:?}x{} vs {:?}x{}",
            a.dims(),
            a.channel_count(),
            b.dims(),
            b.channel_count()
        )));
    }
    Ok(())
}

fn squared_error(a: &Plane, b: &Plane) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = x.clamp(0.0, 1.0) - y.clamp(0.0, 1.0);
            d * d
        })
        .sum()
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical inputs.
pub fn psnr(a: &MultiImage, b: &MultiImage) -> Result<f64> {
    check_same(a, b)?;
    let total: f64 = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(x, y)| squared_error(x, y))
        .sum();
    let count = (a.width() * a.height() * a.channel_count()) as f64;
    Ok(psnr_from_mse(total / count))
}

/// PSNR of a single plane pair.
pub fn psnr_plane(a: &Plane, b: &Plane) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(psnr_from_mse(squared_error(a, b) / a.len() as f64))
}

/// Normalized 2D SSIM window, row-major.
fn ssim_window() -> Vec<f64> {
    let k = GaussianKernel::with_radius(SSIM_SIGMA, SSIM_WINDOW / 2);
    let t = k.taps();
    let mut win = Vec::with_capacity(t.len() * t.len());
    for wy in t {
        for wx in t {
            win.push(wy * wx);
        }
    }
    win
}

/// SSIM of a single plane pair.
pub fn ssim_plane(a: &Plane, b: &Plane) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let a = a.clamped_unit();
    let b = b.clamped_unit();
    let win = ssim_window();
    let c1 = (K1 * 1.0) * (K1 * 1.0);
    let c2 = (K2 * 1.0) * (K2 * 1.0);

    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - SSIM_WINDOW {
        for x0 in 0..=w - SSIM_WINDOW {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let wt = win[dy * SSIM_WINDOW + dx];
                    let va = a.at(x0 + dx, y0 + dy);
                    let vb = b.at(x0 + dx, y0 + dy);
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            }
            let var_a = saa - ma * ma;
            let var_b = sbb - mb * mb;
            let cov = sab - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Mean SSIM over channels.
pub fn ssim(a: &MultiImage, b: &MultiImage) -> Result<f64> {
    check_same(a, b)?;
    let per = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(x, y)| ssim_plane(x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// PSNR and SSIM with per-channel breakdowns.
pub fn evaluate(a: &MultiImage, b: &MultiImage) -> Result<QualityReport> {
    check_same(a, b)?;
    let mut channel_psnr_db = Vec::new();
    let mut channel_ssim = Vec::new();
    for (x, y) in a.channels().iter().zip(b.channels()) {
        channel_psnr_db.push(psnr_plane(x, y)?);
        channel_ssim.push(ssim_plane(x, y)?);
    }
    Ok(QualityReport {
        psnr_db: psnr(a, b)?,
        ssim: channel_ssim.iter().sum::<f64>() / channel_ssim.len() as f64,
        channel_psnr_db,
        channel_ssim,
    })
}
