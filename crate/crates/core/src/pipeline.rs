//! End-to-end orchestration: degradation, candidate handling and
//! channel-by-channel solving.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image_core::{load_image, save_image, MultiImage, Plane};
use crate::linops::{apply_a, DegradationModel};
use crate::metrics::{evaluate, QualityReport};
use crate::resample::resize_plane;
use crate::solver::{solve, SolveDiagnostics, SolverConfig};

/// Default number of candidates per input.
pub const DEFAULT_CANDIDATES: usize = 6;

/// Pre-aligned high-resolution candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    images: Vec<MultiImage>,
    sources: Vec<String>,
}

impl CandidateSet {
    pub fn new(images: Vec<MultiImage>, sources: Vec<String>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidConfig("candidate set is empty".into()));
        }
        if sources.len() != images.len() {
            return Err(Error::InvalidConfig(
                "one source label per candidate required".into(),
            ));
        }
        let dims = images[0].dims();
        let channels = images[0].channel_count();
        if images
            .iter()
            .any(|im| im.dims() != dims || im.channel_count() != channels)
        {
            return Err(Error::DimensionMismatch(
                "candidates differ in size or channel count".into(),
            ));
        }
        Ok(Self { images, sources })
    }

    /// Load candidates in the given order; the order fixes candidate indexing.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let images = paths.iter().map(load_image).collect::<Result<Vec<_>>>()?;
        let sources = paths
            .iter()
            .map(|p| p.as_ref().display().to_string())
            .collect();
        Self::new(images, sources)
    }

    pub fn images(&self) -> &[MultiImage] {
        &self.images
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }

    pub fn channel_count(&self) -> usize {
        self.images[0].channel_count()
    }

    /// Plane `c` of every candidate.
    pub fn channel(&self, c: usize) -> Vec<Plane> {
        self.images.iter().map(|im| im.channel(c).clone()).collect()
    }
}

/// Bicubic resize of every channel.
pub fn bicubic_resize(img: &MultiImage, out_w: usize, out_h: usize) -> Result<MultiImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidConfig(format!("target size {out_w}x{out_h}")));
    }
    img.map_channels(|p| resize_plane(p, out_w, out_h))
}

/// Bicubic down-sampling by `scale`, plus the bicubic up-sampling of the result
/// back to the original size (the baseline every result is compared against).
pub fn degrade(hr: &MultiImage, scale: usize) -> Result<(MultiImage, MultiImage)> {
    if scale < 2 {
        return Err(Error::InvalidScale(scale));
    }
    let (w, h) = hr.dims();
    if w % scale != 0 || h % scale != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{w}x{h} is not divisible by scale {scale}"
        )));
    }
    let lr = bicubic_resize(hr, w / scale, h / scale)?;
    let up = bicubic_resize(&lr, w, h)?;
    Ok((lr, up))
}

fn shift_plane(p: &Plane, dx: isize, dy: isize) -> Plane {
    Plane::from_fn(p.width(), p.height(), |x, y| {
        p.at_clamped(x as isize - dx, y as isize - dy)
    })
}

/// Synthetic stand-ins for aligned candidates: `k` copies of `hr`, each moved
/// by a random integer offset in `[-max_shift, max_shift]^2` (content moves by
/// `+offset`, edges replicated) with i.i.d. Gaussian noise added.
pub fn synth_candidates(
    hr: &MultiImage,
    k: usize,
    max_shift: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<CandidateSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one candidate".into()));
    }
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise sigma {noise_sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = max_shift as i64;
    let mut images = Vec::with_capacity(k);
    let mut sources = Vec::with_capacity(k);
    for i in 0..k {
        let dx = rng.random_range(-s..=s) as isize;
        let dy = rng.random_range(-s..=s) as isize;
        let channels = hr
            .channels()
            .iter()
            .map(|p| {
                let mut q = shift_plane(p, dx, dy);
                if noise_sigma > 0.0 {
                    for v in q.data_mut() {
                        *v += noise.sample(&mut rng);
                    }
                }
                q
            })
            .collect();
        images.push(MultiImage::new(channels)?);
        sources.push(format!("synthetic#{i} shift=({dx},{dy}) noise={noise_sigma}"));
    }
    CandidateSet::new(images, sources)
}

/// Run the solver independently on every channel and reassemble the result.
///
/// Channels are solved concurrently; each solve owns its state, so the result
/// does not depend on scheduling.
pub fn hallucinate(
    lr: &MultiImage,
    candidates: &CandidateSet,
    scale: usize,
    cfg: &SolverConfig,
) -> Result<(MultiImage, Vec<SolveDiagnostics>)> {
    if lr.channel_count() != candidates.channel_count() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channel(s), candidates have {}",
            lr.channel_count(),
            candidates.channel_count()
        )));
    }
    let model = DegradationModel::from_lr(scale, lr.width(), lr.height())?;
    if candidates.dims() != model.hr_dims() {
        return Err(Error::DimensionMismatch(format!(
            "candidates are {:?}, expected {:?} for scale {scale}",
            candidates.dims(),
            model.hr_dims()
        )));
    }

    let results: Vec<Result<(Plane, SolveDiagnostics)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..lr.channel_count())
            .map(|c| {
                let f = lr.channel(c);
                let g = candidates.channel(c);
                let model = &model;
                scope.spawn(move || solve(f, &g, model, cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("channel solver panicked"))
            .collect()
    });

    let mut planes = Vec::with_capacity(results.len());
    let mut diags = Vec::with_capacity(results.len());
    for r in results {
        let (u, d) = r?;
        planes.push(u);
        diags.push(d);
    }
    Ok((MultiImage::new(planes)?, diags))
}

/// `||A u - f|| / ||f||` pooled over channels, using the solver's own
/// degradation model.
pub fn relative_lr_residual(result: &MultiImage, lr: &MultiImage, scale: usize) -> Result<f64> {
    let model = DegradationModel::from_lr(scale, lr.width(), lr.height())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (u, f) in result.channels().iter().zip(lr.channels()) {
        let r = apply_a(u, &model)?.sub(f);
        num += r.data().iter().map(|v| v * v).sum::<f64>();
        den += f.data().iter().map(|v| v * v).sum::<f64>();
    }
    Ok((num / den).sqrt())
}

/// Where the low-resolution input comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    /// Degrade a ground-truth image first; quality is then measured against it.
    GroundTruth(PathBuf),
    /// Use a low-resolution image directly.
    LowRes(PathBuf),
}

/// Where the candidates come from.
#[derive(Clone, Debug, PartialEq)]
pub enum CandidateSource {
    Files(Vec<PathBuf>),
    /// Generated from the ground truth with [`synth_candidates`].
    Synthetic {
        count: usize,
        max_shift: usize,
        noise_sigma: f64,
        seed: u64,
    },
}

/// One hallucination run, fully described.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub scale: usize,
    pub input: InputSource,
    pub candidates: CandidateSource,
    pub output: PathBuf,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub result: MultiImage,
    pub lr: MultiImage,
    pub diagnostics: Vec<SolveDiagnostics>,
    pub lr_residual: f64,
    /// Quality of the result and of the bicubic baseline, when ground truth is known.
    pub quality: Option<QualityReport>,
    pub baseline: Option<QualityReport>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.candidates, CandidateSource::Synthetic { .. })
            && !matches!(self.input, InputSource::GroundTruth(_))
        {
            return Err(Error::InvalidConfig(
                "synthetic candidates require a ground-truth input".into(),
            ));
        }
        if let CandidateSource::Files(paths) = &self.candidates {
            if paths.is_empty() {
                return Err(Error::InvalidConfig("no candidate files given".into()));
            }
        }
        self.solver.validate()
    }

    pub fn run(&self) -> Result<ExperimentOutcome> {
        self.validate()?;
        let (lr, truth, baseline_up) = match &self.input {
            InputSource::GroundTruth(path) => {
                let hr = load_image(path)?;
                let (lr, up) = degrade(&hr, self.scale)?;
                (lr, Some(hr), Some(up))
            }
            InputSource::LowRes(path) => (load_image(path)?, None, None),
        };
        let candidates = match &self.candidates {
            CandidateSource::Files(paths) => CandidateSet::load(paths)?,
            CandidateSource::Synthetic {
                count,
                max_shift,
                noise_sigma,
                seed,
            } => synth_candidates(
                truth.as_ref().expect("validated"),
                *count,
                *max_shift,
                *noise_sigma,
                *seed,
            )?,
        };
        let (result, diagnostics) = hallucinate(&lr, &candidates, self.scale, &self.solver)?;
        save_image(&result, &self.output)?;
        let lr_residual = relative_lr_residual(&result, &lr, self.scale)?;
        let (quality, baseline) = match (&truth, &baseline_up) {
            (Some(hr), Some(up)) => (Some(evaluate(&result, hr)?), Some(evaluate(up, hr)?)),
            _ => (None, None),
        };
        Ok(ExperimentOutcome {
            result,
            lr,
            diagnostics,
            lr_residual,
            quality,
            baseline,
        })
    }
}
