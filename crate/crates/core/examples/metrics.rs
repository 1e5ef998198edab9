// PSNR and SSIM of a bundled face against noisy and blurred copies of it.

use std::path::Path;

use convex_sr::image_core::MultiImage;
use convex_sr::linops::{blur, make_kernel};
use convex_sr::load_image;
use convex_sr::metrics::evaluate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> convex_sr::Result<()> {
    let face = load_image(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/faces/face_camera.png"))?;
    let same = evaluate(&face, &face)?;
    println!("identical:        psnr {} ssim {:.4}", same.psnr_db, same.ssim);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for sigma in [0.01, 0.05, 0.1] {
        let normal = Normal::new(0.0, sigma).unwrap();
        let noisy = MultiImage::new(
            face.channels()
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    for v in q.data_mut() {
                        *v += normal.sample(&mut rng);
                    }
                    q
                })
                .collect(),
        )?;
        let q = evaluate(&noisy, &face)?;
        println!("noise {sigma:<5}       psnr {:.3} ssim {:.4}", q.psnr_db, q.ssim);
    }
    for scale in [2, 4, 8] {
        let k = make_kernel(scale)?;
        let blurred = face.map_channels(|p| blur(p, &k))?;
        let q = evaluate(&blurred, &face)?;
        println!("blur for x{scale:<2}      psnr {:.3} ssim {:.4}", q.psnr_db, q.ssim);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    run_example()
}
