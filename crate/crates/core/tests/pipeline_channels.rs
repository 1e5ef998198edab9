//! Color handling: channels are solved independently and in order.

mod common;

use common::{random_plane, rng};
use convex_sr::image_core::{MultiImage, Plane};
use convex_sr::pipeline::{degrade, hallucinate, relative_lr_residual, synth_candidates, CandidateSet};
use convex_sr::{load_image, save_image, SolverConfig};

fn small_cfg() -> SolverConfig {
    SolverConfig {
        max_outer_iters: 40,
        ..Default::default()
    }
}

fn color_image(seed: u64) -> MultiImage {
    let mut r = rng(seed);
    let planes: Vec<Plane> = (0..3)
        .map(|_| random_plane(16, 16, &mut r).map(|v| 0.5 + 0.3 * v))
        .collect();
    MultiImage::new(planes).unwrap()
}

fn single_channel_set(set: &CandidateSet, c: usize) -> CandidateSet {
    let images = set
        .images()
        .iter()
        .map(|im| MultiImage::gray(im.channel(c).clone()))
        .collect();
    CandidateSet::new(images, set.sources().to_vec()).unwrap()
}

#[test]
fn channels_match_separate_gray_solves() {
    let hr = color_image(1);
    let (lr, _) = degrade(&hr, 4).unwrap();
    let cands = synth_candidates(&hr, 3, 1, 0.01, 2).unwrap();
    let (joint, _) = hallucinate(&lr, &cands, 4, &small_cfg()).unwrap();
    for c in 0..3 {
        let gray_lr = MultiImage::gray(lr.channel(c).clone());
        let (alone, _) = hallucinate(&gray_lr, &single_channel_set(&cands, c), 4, &small_cfg()).unwrap();
        assert_eq!(joint.channel(c).data(), alone.channel(0).data());
    }
}

#[test]
fn permuting_channels_permutes_results() {
    let hr = color_image(3);
    let (lr, _) = degrade(&hr, 4).unwrap();
    let cands = synth_candidates(&hr, 2, 1, 0.01, 4).unwrap();
    let (out, _) = hallucinate(&lr, &cands, 4, &small_cfg()).unwrap();

    let perm = [2, 0, 1];
    let permute = |im: &MultiImage| {
        MultiImage::new(perm.iter().map(|&c| im.channel(c).clone()).collect()).unwrap()
    };
    let pcands = CandidateSet::new(
        cands.images().iter().map(permute).collect(),
        cands.sources().to_vec(),
    )
    .unwrap();
    let (pout, _) = hallucinate(&permute(&lr), &pcands, 4, &small_cfg()).unwrap();
    assert_eq!(pout, permute(&out));
}

#[test]
fn channel_count_mismatch_is_rejected() {
    let hr = color_image(5);
    let (lr, _) = degrade(&hr, 4).unwrap();
    let gray = MultiImage::gray(hr.channel(0).clone());
    let cands = synth_candidates(&gray, 2, 1, 0.0, 0).unwrap();
    assert!(hallucinate(&lr, &cands, 4, &small_cfg()).is_err());
}

#[test]
fn result_survives_a_png_round_trip() {
    let hr = color_image(6);
    let (lr, _) = degrade(&hr, 4).unwrap();
    let cands = synth_candidates(&hr, 2, 1, 0.01, 7).unwrap();
    let (out, _) = hallucinate(&lr, &cands, 4, &small_cfg()).unwrap();
    assert!(relative_lr_residual(&out, &lr, 4).unwrap() < 0.05);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.png");
    save_image(&out, &path).unwrap();
    let back = load_image(&path).unwrap();
    for (a, b) in back.channels().iter().zip(out.channels()) {
        assert!(a.max_abs_diff(&b.clamped_unit()) <= 0.5 / 255.0 + 1e-12);
    }
}
