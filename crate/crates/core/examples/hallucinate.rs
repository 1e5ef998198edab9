// End-to-end hallucination of one face described as an experiment: the
// ground truth is degraded, six synthetic candidates are generated from it,
// and the result is written as a PNG.
//
// ```text
// cargo run --release --example hallucinate [-- <face.png> <out.png>]
// ```

use std::path::{Path, PathBuf};

use convex_sr::pipeline::{CandidateSource, ExperimentSpec, InputSource};
use convex_sr::SolverConfig;

pub fn hallucinate_face(face: PathBuf, output: PathBuf, iters: usize) -> convex_sr::Result<()> {
    let spec = ExperimentSpec {
        scale: 4,
        input: InputSource::GroundTruth(face),
        candidates: CandidateSource::Synthetic {
            count: 6,
            max_shift: 2,
            noise_sigma: 0.01,
            seed: 0,
        },
        output: output.clone(),
        solver: SolverConfig {
            max_outer_iters: iters,
            ..Default::default()
        },
    };
    let outcome = spec.run()?;
    let d = &outcome.diagnostics[0];
    println!(
        "{} iterations, {} CG steps, energy {:.2} -> {:.2}",
        d.iterations_run,
        d.cg_total_iters,
        d.energy_trace[0],
        d.final_energy().unwrap_or(f64::NAN)
    );
    println!("relative LR residual {:.5}", outcome.lr_residual);
    if let (Some(q), Some(b)) = (outcome.quality, outcome.baseline) {
        println!("result  {:.3} dB, SSIM {:.4}", q.psnr_db, q.ssim);
        println!("bicubic {:.3} dB, SSIM {:.4}", b.psnr_db, b.ssim);
    }
    println!("wrote {}", output.display());
    Ok(())
}

pub fn run_example() -> convex_sr::Result<()> {
    let face = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/faces/face_chelsea.png");
    hallucinate_face(face, std::env::temp_dir().join("convex-sr-chelsea.png"), 400)
}

#[allow(dead_code)]
fn main() -> convex_sr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [face, out] => hallucinate_face(face.into(), out.into(), 400),
        _ => run_example(),
    }
}
