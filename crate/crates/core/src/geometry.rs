//! Trait-extraction geometry: in-plane rotation normalization from the eye
//! keypoints, rectangular crops, and rubber-sheet iris normalization.
//!
//! Coordinates are in pixels, `x` to the right and `y` down. Pixel `(i, j)`
//! has its center at `(i, j)`. Sampling is bilinear; a sample point outside
//! `[0, w-1] x [0, h-1]` reads as 0 and is marked invalid in the accompanying
//! mask.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Rotations smaller than this (radians) are treated as the identity.
pub const IDENTITY_ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point<T>) -> Point<T> {
        let half = T::from_f64_lossy(0.5);
        Point::new((self.x + other.x) * half, (self.y + other.y) * half)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates by `angle` about `center`.
    pub fn rotated(self, center: Point<T>, angle: T) -> Point<T> {
        let (s, c) = angle.sin_cos();
        let dx = self.x - center.x;
        let dy = self.y - center.y;
        Point::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
    }
}

/// Row-major single-channel image with intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> GrayImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("image dimensions must be positive".into()));
        }
        if width * height != data.len() {
            return Err(Error::Shape(format!(
                "{width}x{height} image needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image".into()));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(width: usize, height: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage {
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p.is_finite()
            && p.x >= T::zero()
            && p.y >= T::zero()
            && p.x <= T::from_usize(self.width - 1).unwrap_or_else(T::zero)
            && p.y <= T::from_usize(self.height - 1).unwrap_or_else(T::zero)
    }

    /// Bilinear sample; `None` outside the pixel-center hull.
    pub fn bilinear(&self, p: Point<T>) -> Option<T> {
        if !self.contains(p) {
            return None;
        }
        let x0 = p.x.floor().to_usize()?.min(self.width - 1);
        let y0 = p.y.floor().to_usize()?.min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = p.x - T::from_usize(x0)?;
        let fy = p.y - T::from_usize(y0)?;
        let one = T::one();
        let top = self.get(x0, y0) * (one - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (one - fx) + self.get(x1, y1) * fx;
        Some(top * (one - fy) + bottom * fy)
    }

    /// Columns `[x0, x0 + w)` of every row.
    fn columns(&self, x0: usize, w: usize) -> GrayImage<T> {
        GrayImage::from_fn(w, self.height, |x, y| self.get(x0 + x, y))
    }
}

/// Binary map, 1 = valid pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::Shape(format!(
                "{width}x{height} mask needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::Shape("mask entries must be 0 or 1".into()));
        }
        Ok(Mask {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, valid: bool) -> Self {
        Mask {
            width,
            height,
            data: vec![valid as u8; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    /// Fraction of valid entries; 0 for an empty mask.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let valid = self.data.iter().filter(|&&v| v == 1).count();
        valid as f64 / self.data.len() as f64
    }

    fn columns(&self, x0: usize, w: usize) -> Mask {
        let mut data = Vec::with_capacity(w * self.height);
        for y in 0..self.height {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Mask {
            width: w,
            height: self.height,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceKeypoints<T> {
    pub left_eye: Point<T>,
    pub right_eye: Point<T>,
    pub nose_center: Point<T>,
    pub left_eyebrow_center: Point<T>,
}

impl<T: Scalar> FaceKeypoints<T> {
    fn points(&self) -> [Point<T>; 4] {
        [
            self.left_eye,
            self.right_eye,
            self.nose_center,
            self.left_eyebrow_center,
        ]
    }

    fn map(&self, f: impl Fn(Point<T>) -> Point<T>) -> Self {
        FaceKeypoints {
            left_eye: f(self.left_eye),
            right_eye: f(self.right_eye),
            nose_center: f(self.nose_center),
            left_eyebrow_center: f(self.left_eyebrow_center),
        }
    }

    pub fn inter_eye_distance(&self) -> T {
        self.left_eye.distance(self.right_eye)
    }
}

/// Angle of the segment from `left_eye` to `right_eye`, `atan2(dy, dx)`.
pub fn rotation_angle<T: Scalar>(left_eye: Point<T>, right_eye: Point<T>) -> Result<T> {
    if !left_eye.is_finite() || !right_eye.is_finite() {
        return Err(Error::NonFinite("eye keypoints".into()));
    }
    if left_eye == right_eye {
        return Err(Error::DegenerateGeometry(
            "eye keypoints coincide; rotation undefined".into(),
        ));
    }
    Ok((right_eye.y - left_eye.y).atan2(right_eye.x - left_eye.x))
}

/// Resamples `image` rotated by `angle` about `center`. The returned mask
/// marks output pixels whose source point was inside the input.
pub fn rotate<T: Scalar>(image: &GrayImage<T>, center: Point<T>, angle: T) -> (GrayImage<T>, Mask) {
    let (w, h) = (image.width(), image.height());
    let mut valid = Vec::with_capacity(w * h);
    // Output pixel p reads input at center + R(-angle)(p - center).
    let inv = -angle;
    let out = GrayImage::from_fn(w, h, |x, y| {
        let p = Point::new(T::from_usize(x).unwrap(), T::from_usize(y).unwrap());
        match image.bilinear(p.rotated(center, inv)) {
            Some(v) => {
                valid.push(1);
                v
            }
            None => {
                valid.push(0);
                T::zero()
            }
        }
    });
    (
        out,
        Mask {
            width: w,
            height: h,
            data: valid,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationResult<T> {
    pub image: GrayImage<T>,
    pub keypoints: FaceKeypoints<T>,
    /// Valid-source mask of `image`; all ones for the identity case.
    pub mask: Mask,
    /// Angle removed from the input, radians.
    pub angle: T,
}

/// Rotates the face about the eye midpoint so that the eyes lie on a
/// horizontal line.
pub fn normalize_rotation<T: Scalar>(
    image: &GrayImage<T>,
    keypoints: &FaceKeypoints<T>,
) -> Result<RotationResult<T>> {
    let angle = rotation_angle(keypoints.left_eye, keypoints.right_eye)?;
    for p in keypoints.points() {
        if !image.contains(p) {
            return Err(Error::Geometry(format!(
                "keypoint ({}, {}) outside the {}x{} image",
                p.x,
                p.y,
                image.width(),
                image.height()
            )));
        }
    }
    if angle.to_f64_lossless().abs() < IDENTITY_ANGLE_EPS {
        return Ok(RotationResult {
            image: image.clone(),
            keypoints: *keypoints,
            mask: Mask::filled(image.width(), image.height(), true),
            angle,
        });
    }
    let center = keypoints.left_eye.midpoint(keypoints.right_eye);
    let (rotated, mask) = rotate(image, center, -angle);
    Ok(RotationResult {
        image: rotated,
        keypoints: keypoints.map(|p| p.rotated(center, -angle)),
        mask,
        angle,
    })
}

/// Crop window: `width x height` pixels centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSpec<T> {
    pub center: Point<T>,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crop<T> {
    pub image: GrayImage<T>,
    /// Fraction of the window that fell outside the source image.
    pub clipped_fraction: f64,
}

/// Cuts the window with top-left corner `round(center) - floor(size / 2)`.
/// Pixels outside the source are zero.
pub fn crop<T: Scalar>(image: &GrayImage<T>, spec: &CropSpec<T>) -> Result<Crop<T>> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Shape("crop size must be at least 1x1".into()));
    }
    if !spec.center.is_finite() {
        return Err(Error::NonFinite("crop center".into()));
    }
    let left = spec.center.x.round().to_i64().unwrap_or(i64::MIN / 2) - (spec.width / 2) as i64;
    let top = spec.center.y.round().to_i64().unwrap_or(i64::MIN / 2) - (spec.height / 2) as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let mut outside = 0usize;
    let out = GrayImage::from_fn(spec.width, spec.height, |x, y| {
        let sx = left + x as i64;
        let sy = top + y as i64;
        if (0..w).contains(&sx) && (0..h).contains(&sy) {
            image.get(sx as usize, sy as usize)
        } else {
            outside += 1;
            T::zero()
        }
    });
    let total = spec.width * spec.height;
    if outside == total {
        return Err(Error::Geometry("crop window lies entirely outside the image".into()));
    }
    Ok(Crop {
        image: out,
        clipped_fraction: outside as f64 / total as f64,
    })
}

/// Crop sizes as multiples of the inter-eye distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CropConfig {
    /// Side of the square window around the left eye.
    pub periocular: f64,
    /// Side of the square window around the nose center.
    pub nose: f64,
    pub eyebrow_width: f64,
    pub eyebrow_height: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig {
            periocular: 0.9,
            nose: 0.7,
            eyebrow_width: 0.9,
            eyebrow_height: 0.5,
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("periocular", self.periocular),
            ("nose", self.nose),
            ("eyebrow_width", self.eyebrow_width),
            ("eyebrow_height", self.eyebrow_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("crop scale `{name}` must be positive")));
            }
        }
        Ok(())
    }

    fn window<T: Scalar>(center: Point<T>, d: f64, sw: f64, sh: f64) -> CropSpec<T> {
        CropSpec {
            center,
            width: ((d * sw).round() as usize).max(1),
            height: ((d * sh).round() as usize).max(1),
        }
    }

    /// Periocular, nose and eyebrow windows for (rotation-normalized) keypoints.
    pub fn specs<T: Scalar>(&self, keypoints: &FaceKeypoints<T>) -> [CropSpec<T>; 3] {
        let d = keypoints.inter_eye_distance().to_f64_lossless();
        [
            Self::window(keypoints.left_eye, d, self.periocular, self.periocular),
            Self::window(keypoints.nose_center, d, self.nose, self.nose),
            Self::window(
                keypoints.left_eyebrow_center,
                d,
                self.eyebrow_width,
                self.eyebrow_height,
            ),
        ]
    }
}

/// Face image plus the periocular, nose and eyebrow crops.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitImages<T> {
    pub face: RotationResult<T>,
    pub periocular: Crop<T>,
    pub nose: Crop<T>,
    pub eyebrow: Crop<T>,
}

pub fn extract_traits<T: Scalar>(
    image: &GrayImage<T>,
    keypoints: &FaceKeypoints<T>,
    config: &CropConfig,
) -> Result<TraitImages<T>> {
    config.validate()?;
    let face = normalize_rotation(image, keypoints)?;
    let [peri, nose, brow] = config.specs(&face.keypoints);
    Ok(TraitImages {
        periocular: crop(&face.image, &peri)?,
        nose: crop(&face.image, &nose)?,
        eyebrow: crop(&face.image, &brow)?,
        face,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrisCircles<T> {
    pub pupil_center: Point<T>,
    pub pupil_radius: T,
    pub iris_center: Point<T>,
    pub iris_radius: T,
    /// Same shape as the source image, 1 = valid iris pixel.
    pub occlusion: Option<Mask>,
}

impl<T: Scalar> IrisCircles<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.pupil_center.is_finite()
            && self.iris_center.is_finite()
            && self.pupil_radius.is_finite()
            && self.iris_radius.is_finite())
        {
            return Err(Error::NonFinite("iris circles".into()));
        }
        if self.pupil_radius <= T::zero() {
            return Err(Error::Geometry("pupil radius must be positive".into()));
        }
        if self.pupil_radius >= self.iris_radius {
            return Err(Error::Geometry(format!(
                "pupil radius {} must be below iris radius {}",
                self.pupil_radius, self.iris_radius
            )));
        }
        Ok(())
    }
}

/// Rubber-sheet rectangle: rows run pupil→limbus, columns run around the iris.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris<T> {
    pub rect: GrayImage<T>,
    pub mask: Mask,
}

pub const DEFAULT_IRIS_ROWS: usize = 64;
pub const DEFAULT_IRIS_COLS: usize = 512;

/// Unwraps the annulus between the pupil and iris circles onto a
/// `rows x cols` grid.
///
/// Cell `(r, c)` samples `(1 - rho) * P(theta) + rho * I(theta)` with
/// `theta = 2 pi c / cols` and `rho = r / (rows - 1)`, where `P` and `I` are
/// points on the pupil and iris circles.
pub fn rubber_sheet<T: Scalar>(
    image: &GrayImage<T>,
    circles: &IrisCircles<T>,
    rows: usize,
    cols: usize,
) -> Result<NormalizedIris<T>> {
    rubber_sheet_with_offset(image, circles, rows, cols, 0.0)
}

/// [`rubber_sheet`] with the angular origin rotated by `theta0` radians.
pub fn rubber_sheet_with_offset<T: Scalar>(
    image: &GrayImage<T>,
    circles: &IrisCircles<T>,
    rows: usize,
    cols: usize,
    theta0: f64,
) -> Result<NormalizedIris<T>> {
    circles.validate()?;
    if rows < 2 || cols < 8 {
        return Err(Error::Shape(format!(
            "normalized iris must be at least 2x8, got {rows}x{cols}"
        )));
    }
    if let Some(m) = &circles.occlusion {
        if m.width() != image.width() || m.height() != image.height() {
            return Err(Error::Shape(format!(
                "occlusion mask {}x{} does not match image {}x{}",
                m.width(),
                m.height(),
                image.width(),
                image.height()
            )));
        }
    }
    let f = |v: f64| T::from_f64_lossy(v);
    let mut valid = Vec::with_capacity(rows * cols);
    let rect = GrayImage::from_fn(cols, rows, |c, r| {
        let theta = f(theta0 + 2.0 * PI * c as f64 / cols as f64);
        let rho = f(r as f64 / (rows - 1) as f64);
        let (s, co) = theta.sin_cos();
        let inner = Point::new(
            circles.pupil_center.x + circles.pupil_radius * co,
            circles.pupil_center.y + circles.pupil_radius * s,
        );
        let outer = Point::new(
            circles.iris_center.x + circles.iris_radius * co,
            circles.iris_center.y + circles.iris_radius * s,
        );
        let one = T::one();
        let p = Point::new(
            inner.x * (one - rho) + outer.x * rho,
            inner.y * (one - rho) + outer.y * rho,
        );
        match image.bilinear(p) {
            Some(v) => {
                let ok = circles.occlusion.as_ref().is_none_or(|m| {
                    // nearest pixel of the occlusion map
                    let x = p.x.round().to_usize().unwrap_or(0).min(m.width() - 1);
                    let y = p.y.round().to_usize().unwrap_or(0).min(m.height() - 1);
                    m.get(x, y)
                });
                valid.push(ok as u8);
                v
            }
            None => {
                valid.push(0);
                T::zero()
            }
        }
    });
    Ok(NormalizedIris {
        rect,
        mask: Mask {
            width: cols,
            height: rows,
            data: valid,
        },
    })
}

/// Four angular strips of a normalized iris with their valid-pixel ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisStrips<T> {
    pub rects: [GrayImage<T>; 4],
    pub masks: [Mask; 4],
    pub mask_ratios: [f64; 4],
}

/// Splits the rectangle into four equal column blocks.
pub fn split_subimages<T: Scalar>(norm: &NormalizedIris<T>) -> Result<IrisStrips<T>> {
    let cols = norm.rect.width();
    if cols % 4 != 0 {
        return Err(Error::Shape(format!(
            "normalized iris width {cols} is not divisible by 4"
        )));
    }
    if norm.mask.width() != cols || norm.mask.height() != norm.rect.height() {
        return Err(Error::Shape("iris rect and mask differ in size".into()));
    }
    let w = cols / 4;
    let rects = std::array::from_fn(|i| norm.rect.columns(i * w, w));
    let masks: [Mask; 4] = std::array::from_fn(|i| norm.mask.columns(i * w, w));
    let mask_ratios = std::array::from_fn(|i| masks[i].mean());
    Ok(IrisStrips {
        rects,
        masks,
        mask_ratios,
    })
}
