// Runs the full pipeline on the bundled 100x100 faces: bicubic x4
// degradation, six synthetic candidates (shift <= 2 px, noise 0.01), and the
// default solver settings. Prints quality against the bicubic baseline.
//
// ```text
// cargo run --release --example face_benchmark [-- <face.png> ...]
// ```

use std::path::{Path, PathBuf};

use convex_sr::metrics::evaluate;
use convex_sr::pipeline::{degrade, hallucinate, relative_lr_residual, synth_candidates};
use convex_sr::{load_image, SolverConfig};

fn bundled_faces() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/faces");
    let mut faces: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("bundled faces directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "png"))
        .collect();
    faces.sort();
    faces
}

pub fn benchmark(faces: &[PathBuf], cfg: &SolverConfig) -> convex_sr::Result<()> {

    println!(
        "{:<28} {:>9} {:>9} {:>8} {:>8} {:>9} {:>6}",
        "image", "psnr", "bicubic", "ssim", "bicubic", "residual", "iters"
    );
    for (i, path) in faces.iter().enumerate() {
        let hr = load_image(path)?;
        let (lr, up) = degrade(&hr, 4)?;
        let candidates = synth_candidates(&hr, 6, 2, 0.01, i as u64)?;
        let (result, diags) = hallucinate(&lr, &candidates, 4, cfg)?;
        let q = evaluate(&result, &hr)?;
        let b = evaluate(&up, &hr)?;
        let residual = relative_lr_residual(&result, &lr, 4)?;
        println!(
            "{:<28} {:>9.3} {:>9.3} {:>8.4} {:>8.4} {:>9.5} {:>6}",
            path.file_name().unwrap().to_string_lossy(),
            q.psnr_db,
            b.psnr_db,
            q.ssim,
            b.ssim,
            residual,
            diags[0].iterations_run
        );
    }
    Ok(())
}

pub fn run_example() -> convex_sr::Result<()> {
    benchmark(&bundled_faces(), &SolverConfig::default())
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if args.is_empty() {
        run_example()
    } else {
        benchmark(&args, &SolverConfig::default())
    }
}
