//! Image containers and PNG interchange.
//!
//! All solver math operates on [`Plane`], a row-major single-channel field of
//! `f64` intensities nominally in `[0, 1]`. Values are allowed to leave that
//! range while optimizing; they are only clamped when written to disk.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Vector-space operations shared by planes and the stacked solver variables.
///
/// Power iteration and the adjoint checks are written against this trait so
/// they can run on a single plane or on a whole primal/dual stack.
pub trait LinearSpace: Clone {
    fn dot(&self, other: &Self) -> f64;

    /// `self += alpha * x`
    fn axpy(&mut self, alpha: f64, x: &Self);

    fn scale(&mut self, s: f64);

    /// A zero element of the same shape.
    fn zeroed(&self) -> Self;

    /// Overwrite with i.i.d. samples from `U(-1, 1)`.
    fn randomize(&mut self, rng: &mut dyn RngCore);

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Single-channel 2D scalar field, row-major.
#[derive(Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Plane {
    /// Build a plane from row-major samples. Rejects empty planes, length
    /// mismatches and non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidPlane(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidPlane(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlane("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Build a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Plane) -> bool {
        self.dims() == other.dims()
    }

    /// Sample at column `x`, row `y`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped into the plane (replicate boundary).
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally sized planes.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert!(self.same_dims(other), "plane dimension mismatch");
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Plane) -> Plane {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Plane) -> Plane {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scaled(&self, s: f64) -> Plane {
        self.map(|v| v * s)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// L1 norm.
    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert!(self.same_dims(other), "plane dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamped_unit(&self) -> Plane {
        self.map(|v| v.clamp(0.0, 1.0))
    }
}

impl Index<(usize, usize)> for Plane {
    type Output = f64;

    fn index(&self, (x, y): (usize, usize)) -> &f64 {
        &self.data[y * self.width + x]
    }
}

impl IndexMut<(usize, usize)> for Plane {
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }
}

impl LinearSpace for Plane {
    fn dot(&self, other: &Self) -> f64 {
        assert!(self.same_dims(other), "plane dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        assert!(self.same_dims(x), "plane dimension mismatch");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    fn zeroed(&self) -> Self {
        Plane::zeros(self.width, self.height)
    }

    fn randomize(&mut self, rng: &mut dyn RngCore) {
        for v in &mut self.data {
            *v = rng.random_range(-1.0..1.0);
        }
    }
}

/// Per-pixel 2-vector field, e.g. the discrete gradient of a plane.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub px: Plane,
    pub py: Plane,
}

impl VectorField {
    pub fn new(px: Plane, py: Plane) -> Result<Self> {
        if !px.same_dims(&py) {
            return Err(Error::DimensionMismatch(format!(
                "vector field components {:?} vs {:?}",
                px.dims(),
                py.dims()
            )));
        }
        Ok(Self { px, py })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            px: Plane::zeros(width, height),
            py: Plane::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.px.dims()
    }

    /// Sum over pixels of the Euclidean norm of each vector (isotropic L2,1 norm).
    pub fn norm_21(&self) -> f64 {
        self.px
            .data()
            .iter()
            .zip(self.py.data())
            .map(|(a, b)| a.hypot(*b))
            .sum()
    }
}

impl LinearSpace for VectorField {
    fn dot(&self, other: &Self) -> f64 {
        self.px.dot(&other.px) + self.py.dot(&other.py)
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.px.axpy(alpha, &x.px);
        self.py.axpy(alpha, &x.py);
    }

    fn scale(&mut self, s: f64) {
        self.px.scale(s);
        self.py.scale(s);
    }

    fn zeroed(&self) -> Self {
        Self {
            px: self.px.zeroed(),
            py: self.py.zeroed(),
        }
    }

    fn randomize(&mut self, rng: &mut dyn RngCore) {
        self.px.randomize(rng);
        self.py.randomize(rng);
    }
}

/// An image as an ordered list of equally sized channel planes.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiImage {
    channels: Vec<Plane>,
}

impl MultiImage {
    pub const MAX_CHANNELS: usize = 4;

    pub fn new(channels: Vec<Plane>) -> Result<Self> {
        if channels.is_empty() || channels.len() > Self::MAX_CHANNELS {
            return Err(Error::InvalidPlane(format!(
                "channel count {} outside 1..={}",
                channels.len(),
                Self::MAX_CHANNELS
            )));
        }
        let dims = channels[0].dims();
        if channels.iter().any(|c| c.dims() != dims) {
            return Err(Error::DimensionMismatch(
                "channels have differing dimensions".into(),
            ));
        }
        Ok(Self { channels })
    }

    pub fn gray(plane: Plane) -> Self {
        Self {
            channels: vec![plane],
        }
    }

    pub fn channels(&self) -> &[Plane] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &Plane {
        &self.channels[i]
    }

    pub fn into_channels(self) -> Vec<Plane> {
        self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn map_channels(&self, f: impl Fn(&Plane) -> Plane) -> Result<MultiImage> {
        MultiImage::new(self.channels.iter().map(f).collect())
    }
}

/// Load an 8- or 16-bit grayscale or RGB image, mapping samples linearly to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<MultiImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let decoded = image::ImageReader::open(path)
        .and_then(|r| r.with_guessed_format())
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .decode()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    from_dynamic(decoded, path)
}

fn from_dynamic(img: DynamicImage, path: &Path) -> Result<MultiImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let unsupported = |color: ColorType| Error::UnsupportedChannels {
        path: path.to_path_buf(),
        channels: color.channel_count() as usize,
        detail: format!("{color:?}"),
    };
    let (samples, channels, max): (Vec<f64>, usize, f64) = match img {
        DynamicImage::ImageLuma8(b) => (b.into_raw().into_iter().map(f64::from).collect(), 1, 255.0),
        DynamicImage::ImageRgb8(b) => (b.into_raw().into_iter().map(f64::from).collect(), 3, 255.0),
        DynamicImage::ImageLuma16(b) => {
            (b.into_raw().into_iter().map(f64::from).collect(), 1, 65535.0)
        }
        DynamicImage::ImageRgb16(b) => {
            (b.into_raw().into_iter().map(f64::from).collect(), 3, 65535.0)
        }
        other => return Err(unsupported(other.color())),
    };
    let planes = (0..channels)
        .map(|c| {
            let data = samples
                .iter()
                .skip(c)
                .step_by(channels)
                .map(|&v| v / max)
                .collect();
            Plane::new(w, h, data)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiImage::new(planes)
}

/// Clamp to `[0, 1]` and quantize with round-half-up to an 8-bit sample.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Write an 8-bit PNG. One channel is stored as grayscale, three as RGB.
pub fn save_image(img: &MultiImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = img.dims();
    let color = match img.channel_count() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        n => {
            return Err(Error::UnsupportedChannels {
                path: path.to_path_buf(),
                channels: n,
                detail: "only grayscale and RGB can be written".into(),
            })
        }
    };
    let n = img.channel_count();
    let mut buf = vec![0u8; w * h * n];
    for (c, plane) in img.channels().iter().enumerate() {
        for (i, &v) in plane.data().iter().enumerate() {
            buf[i * n + c] = quantize_u8(v);
        }
    }
    image::save_buffer_with_format(path, &buf, w as u32, h as u32, color, ImageFormat::Png).map_err(
        |e| Error::Write {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    )
}
