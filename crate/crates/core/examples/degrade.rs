// Bicubic x4 degradation of a bundled face, writing the low-resolution
// image and the bicubic baseline next to each other.
//
// ```text
// cargo run --example degrade [-- <out-dir>]
// ```

use std::path::{Path, PathBuf};

use convex_sr::metrics::evaluate;
use convex_sr::pipeline::degrade;
use convex_sr::{load_image, save_image};

pub fn degrade_face(out_dir: &Path) -> convex_sr::Result<(PathBuf, PathBuf)> {
    let face = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/faces/face_hopper.png");
    let hr = load_image(&face)?;
    let (lr, up) = degrade(&hr, 4)?;
    let lr_path = out_dir.join("hopper_lr.png");
    let up_path = out_dir.join("hopper_bicubic.png");
    save_image(&lr, &lr_path)?;
    save_image(&up, &up_path)?;

    let q = evaluate(&up, &hr)?;
    println!("{}x{} -> {}x{}", hr.width(), hr.height(), lr.width(), lr.height());
    println!("bicubic baseline: {:.3} dB, SSIM {:.4}", q.psnr_db, q.ssim);
    Ok((lr_path, up_path))
}

pub fn run_example() -> convex_sr::Result<()> {
    let dir = std::env::temp_dir().join("convex-sr-degrade");
    std::fs::create_dir_all(&dir).map_err(|e| convex_sr::Error::Write {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let (lr, up) = degrade_face(&dir)?;
    println!("wrote {} and {}", lr.display(), up.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => degrade_face(Path::new(&dir)).map(|_| ()),
        None => run_example(),
    }
}
