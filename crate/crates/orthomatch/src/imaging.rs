//! Raster image and depth-map containers, bilinear warping, gradients, and
//! back-projection.
//!
//! Images store row-major f64 samples in [0, 1] with 1 or 3 channels.
//! Depth maps store meters with a per-pixel validity mask. Files are 8-bit
//! PNG for images and 16-bit PNG in millimeters (0 = invalid) for depth.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{invert, GeometryError, Homography, Intrinsics, Vec3};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to decode {path}: {message}")]
    Decode { path: String, message: String },
    #[error("unsupported pixel format in {path}: {format}")]
    UnsupportedFormat { path: String, format: String },
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("invalid image data: {0}")]
    InvalidData(String),
    #[error("ROI contains no valid pixels{0}")]
    EmptyRoi(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Integer pixel rectangle, half-open: x in [x0, x1), y in [y0, y1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self, ImagingError> {
        if x1 <= x0 || y1 <= y0 {
            return Err(ImagingError::InvalidData(format!(
                "empty rectangle ({x0},{y0},{x1},{y1})"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Rect {
            x0: 0,
            y0: 0,
            x1: width,
            y1: height,
        }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<(), ImagingError> {
        if self.x1 > width || self.y1 > height {
            return Err(ImagingError::InvalidData(format!(
                "rectangle ({},{},{},{}) exceeds {width}x{height} bounds",
                self.x0, self.y0, self.x1, self.y1
            )));
        }
        Ok(())
    }
}

/// Row-major raster with values in [0, 1] and 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_data(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ImagingError> {
        if channels != 1 && channels != 3 {
            return Err(ImagingError::InvalidData(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(ImagingError::InvalidData(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ImagingError::InvalidData(
                "sample values must lie in [0, 1]".into(),
            ));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Build a 1-channel image from a function of (x, y); values are clamped
    /// to [0, 1].
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Image {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Bilinear sample of one channel. Returns `None` when any tap of the
    /// sample footprint falls outside the image. Samples landing exactly on
    /// a pixel grid line only need the taps they actually touch, so integer
    /// positions are valid everywhere including the last row and column.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> Option<f64> {
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let xi = x0 as isize;
        let yi = y0 as isize;
        let (w, h) = (self.width as isize, self.height as isize);

        let x_taps: &[(isize, f64)] = if fx == 0.0 {
            &[(xi, 1.0)]
        } else {
            &[(xi, 1.0 - fx), (xi + 1, fx)]
        };
        let y_taps: &[(isize, f64)] = if fy == 0.0 {
            &[(yi, 1.0)]
        } else {
            &[(yi, 1.0 - fy), (yi + 1, fy)]
        };

        let mut acc = 0.0;
        for &(ty, wy) in y_taps {
            if ty < 0 || ty >= h {
                return None;
            }
            for &(tx, wx) in x_taps {
                if tx < 0 || tx >= w {
                    return None;
                }
                acc += wy * wx * self.get(tx as usize, ty as usize, c);
            }
        }
        Some(acc)
    }

    /// Crop a rectangle (must be within bounds).
    pub fn crop(&self, rect: Rect) -> Result<Image, ImagingError> {
        rect.check_within(self.width, self.height)?;
        let mut data = Vec::with_capacity(rect.width() * rect.height() * self.channels);
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                for c in 0..self.channels {
                    data.push(self.get(x, y, c));
                }
            }
        }
        Ok(Image {
            width: rect.width(),
            height: rect.height(),
            channels: self.channels,
            data,
        })
    }
}

/// Depth in meters with a validity mask. Invalid pixels carry depth 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    pub fn from_data(
        width: usize,
        height: usize,
        depth: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, ImagingError> {
        if depth.len() != width * height || valid.len() != width * height {
            return Err(ImagingError::InvalidData(
                "depth/mask length does not match dimensions".into(),
            ));
        }
        for (d, &v) in depth.iter().zip(valid.iter()) {
            if v && !(d.is_finite() && *d > 0.0) {
                return Err(ImagingError::InvalidData(format!(
                    "valid depth must be finite and positive, got {d}"
                )));
            }
        }
        Ok(DepthMap {
            width,
            height,
            depth,
            valid,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Option<f64>) -> Self {
        let mut depth = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                match f(x, y) {
                    Some(d) if d.is_finite() && d > 0.0 => {
                        depth.push(d);
                        valid.push(true);
                    }
                    _ => {
                        depth.push(0.0);
                        valid.push(false);
                    }
                }
            }
        }
        DepthMap {
            width,
            height,
            depth,
            valid,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        if self.valid[y * self.width + x] {
            Some(self.depth[y * self.width + x])
        } else {
            None
        }
    }

    /// Depth at a subpixel position, via the nearest pixel.
    pub fn at_nearest(&self, x: f64, y: f64) -> Option<f64> {
        let xi = x.round();
        let yi = y.round();
        if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
            return None;
        }
        self.get(xi as usize, yi as usize)
    }
}

/// Result of warping an image: output raster plus a validity mask marking
/// pixels whose source sample footprint was fully in-bounds. Invalid pixels
/// are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub image: Image,
    pub validity: Vec<bool>,
}

/// Inverse-mapped bilinear warp: output pixel p samples the source at
/// `H⁻¹·p`.
pub fn warp(
    src: &Image,
    h: &Homography,
    out_width: usize,
    out_height: usize,
) -> Result<WarpResult, GeometryError> {
    let hinv = invert(h)?;
    let m = *hinv.matrix();
    let channels = src.channels;

    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..out_height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0.0; out_width * channels];
            let mut valid = vec![false; out_width];
            for x in 0..out_width {
                let q = m * Vec3::new(x as f64, y as f64, 1.0);
                if q.z.abs() < 1e-12 {
                    continue;
                }
                let sx = q.x / q.z;
                let sy = q.y / q.z;
                let mut ok = true;
                let mut vals = [0.0; 3];
                for (c, val) in vals.iter_mut().enumerate().take(channels) {
                    match src.sample_bilinear(sx, sy, c) {
                        Some(v) => *val = v.clamp(0.0, 1.0),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    for c in 0..channels {
                        row[x * channels + c] = vals[c];
                    }
                    valid[x] = true;
                }
            }
            (row, valid)
        })
        .collect();

    let mut data = Vec::with_capacity(out_width * out_height * channels);
    let mut validity = Vec::with_capacity(out_width * out_height);
    for (row, valid) in rows {
        data.extend(row);
        validity.extend(valid);
    }

    Ok(WarpResult {
        image: Image {
            width: out_width,
            height: out_height,
            channels,
            data,
        },
        validity,
    })
}

/// Luma conversion (0.299 R + 0.587 G + 0.114 B); identity on 1-channel
/// input.
pub fn grayscale(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let mut data = Vec::with_capacity(img.width * img.height);
    for px in img.data.chunks_exact(3) {
        data.push(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
    }
    Image {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

/// Central-difference gradients with replicated borders. Input must be
/// 1-channel; outputs share its dimensions.
pub fn gradients(img: &Image) -> (Image, Image) {
    assert_eq!(img.channels, 1, "gradients require a 1-channel image");
    let (w, h) = (img.width, img.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let xl = x.saturating_sub(1);
            let xr = (x + 1).min(w - 1);
            let yu = y.saturating_sub(1);
            let yd = (y + 1).min(h - 1);
            gx[y * w + x] = (img.get(xr, y, 0) - img.get(xl, y, 0)) / 2.0;
            gy[y * w + x] = (img.get(x, yd, 0) - img.get(x, yu, 0)) / 2.0;
        }
    }
    (
        Image {
            width: w,
            height: h,
            channels: 1,
            data: gx,
        },
        Image {
            width: w,
            height: h,
            channels: 1,
            data: gy,
        },
    )
}

/// Separable Gaussian blur with replicated borders (kernel radius 3σ).
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    assert_eq!(img.channels, 1, "gaussian_blur requires a 1-channel image");
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }

    let (w, h) = (img.width as isize, img.height as isize);
    let mut tmp = vec![0.0; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let xs = (x + i as isize - radius).clamp(0, w - 1);
                acc += k * img.data[(y * w + xs) as usize];
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let ys = (y + i as isize - radius).clamp(0, h - 1);
                acc += k * tmp[(ys * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    Image {
        width: img.width,
        height: img.height,
        channels: 1,
        data: out,
    }
}

/// Back-project the valid depth pixels of a rectangle to camera-frame 3D
/// points: `p = depth · K⁻¹ (u, v, 1)`.
pub fn backproject(
    depth: &DepthMap,
    k: &Intrinsics,
    roi: Rect,
) -> Result<Vec<Vec3>, ImagingError> {
    roi.check_within(depth.width, depth.height)?;
    let mut points = Vec::new();
    for v in roi.y0..roi.y1 {
        for u in roi.x0..roi.x1 {
            if let Some(d) = depth.get(u, v) {
                let ray = k.unproject(crate::geometry::Vec2::new(u as f64, v as f64));
                points.push(ray * d);
            }
        }
    }
    if points.is_empty() {
        return Err(ImagingError::EmptyRoi(String::new()));
    }
    Ok(points)
}

// PNG I/O. Images are 8-bit (gray or RGB); depth maps are 16-bit grayscale
// in millimeters with 0 marking invalid pixels.

pub fn load_image(path: &Path) -> Result<Image, ImagingError> {
    let decoded = image::open(path).map_err(|e| ImagingError::Decode {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        image::DynamicImage::ImageLuma8(buf) => {
            let data = buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            Ok(Image {
                width,
                height,
                channels: 1,
                data,
            })
        }
        image::DynamicImage::ImageRgb8(buf) => {
            let data = buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            Ok(Image {
                width,
                height,
                channels: 3,
                data,
            })
        }
        image::DynamicImage::ImageLumaA8(buf) => {
            let data = buf
                .into_raw()
                .chunks_exact(2)
                .map(|px| px[0] as f64 / 255.0)
                .collect();
            Ok(Image {
                width,
                height,
                channels: 1,
                data,
            })
        }
        image::DynamicImage::ImageRgba8(buf) => {
            let raw = buf.into_raw();
            let mut data = Vec::with_capacity(width * height * 3);
            for px in raw.chunks_exact(4) {
                data.push(px[0] as f64 / 255.0);
                data.push(px[1] as f64 / 255.0);
                data.push(px[2] as f64 / 255.0);
            }
            Ok(Image {
                width,
                height,
                channels: 3,
                data,
            })
        }
        other => Err(ImagingError::UnsupportedFormat {
            path: path.display().to_string(),
            format: format!("{:?}", other.color()),
        }),
    }
}

pub fn save_image(path: &Path, img: &Image) -> Result<(), ImagingError> {
    let to_u8 = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let result = if img.channels == 1 {
        let buf = image::GrayImage::from_raw(
            img.width as u32,
            img.height as u32,
            img.data.iter().map(|&v| to_u8(v)).collect(),
        )
        .expect("buffer size checked by construction");
        buf.save(path)
    } else {
        let buf = image::RgbImage::from_raw(
            img.width as u32,
            img.height as u32,
            img.data.iter().map(|&v| to_u8(v)).collect(),
        )
        .expect("buffer size checked by construction");
        buf.save(path)
    };
    result.map_err(|e| ImagingError::Decode {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_depth(path: &Path) -> Result<DepthMap, ImagingError> {
    let decoded = image::open(path).map_err(|e| ImagingError::Decode {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        image::DynamicImage::ImageLuma16(buf) => {
            let mut depth = Vec::with_capacity(width * height);
            let mut valid = Vec::with_capacity(width * height);
            for &mm in buf.as_raw() {
                if mm == 0 {
                    depth.push(0.0);
                    valid.push(false);
                } else {
                    depth.push(mm as f64 / 1000.0);
                    valid.push(true);
                }
            }
            Ok(DepthMap {
                width,
                height,
                depth,
                valid,
            })
        }
        other => Err(ImagingError::UnsupportedFormat {
            path: path.display().to_string(),
            format: format!("depth maps must be 16-bit grayscale, got {:?}", other.color()),
        }),
    }
}

pub fn save_depth(path: &Path, depth: &DepthMap) -> Result<(), ImagingError> {
    let mut raw = Vec::with_capacity(depth.width * depth.height);
    for i in 0..depth.depth.len() {
        if depth.valid[i] {
            let mm = (depth.depth[i] * 1000.0).round().clamp(1.0, 65535.0) as u16;
            raw.push(mm);
        } else {
            raw.push(0u16);
        }
    }
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        depth.width as u32,
        depth.height as u32,
        raw,
    )
    .expect("buffer size checked by construction");
    buf.save(path).map_err(|e| ImagingError::Decode {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pairing check used wherever an image and a depth map describe the same
/// view.
pub fn check_matching_dims(img: &Image, depth: &DepthMap) -> Result<(), ImagingError> {
    if img.width != depth.width || img.height != depth.height {
        return Err(ImagingError::DimensionMismatch {
            expected_w: img.width,
            expected_h: img.height,
            got_w: depth.width,
            got_h: depth.height,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_homography, Mat3, Vec2};

    fn gradient_card(n: usize) -> Image {
        Image::from_fn(n, n, |x, y| {
            0.5 + 0.3 * ((x as f64) / n as f64 - 0.5) + 0.2 * ((y as f64) / n as f64 - 0.5)
        })
    }

    #[test]
    fn warp_identity_is_bit_exact() {
        let img = gradient_card(32);
        let out = warp(&img, &Homography::identity(), 32, 32).unwrap();
        assert_eq!(out.image.data(), img.data());
        assert!(out.validity.iter().all(|&v| v));
    }

    #[test]
    fn warp_half_turn_round_trip() {
        let img = gradient_card(64);
        let h = rotation_homography(180.0, Vec2::new(31.5, 31.5));
        let once = warp(&img, &h, 64, 64).unwrap();
        let twice = warp(&once.image, &h, 64, 64).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for y in 8..56 {
            for x in 8..56 {
                total += (twice.image.get(x, y, 0) - img.get(x, y, 0)).abs();
                count += 1;
            }
        }
        assert!(total / count as f64 <= 2.0 / 255.0);
    }

    #[test]
    fn warp_scaling_doubles_covered_area() {
        let mut img = Image::zeros(128, 128, 1);
        for y in 14..114 {
            for x in 14..114 {
                img.set(x, y, 0, 1.0);
            }
        }
        let h = Homography::from_matrix(Mat3::new(
            2.0, 0.0, -28.0, 0.0, 2.0, -28.0, 0.0, 0.0, 1.0,
        ))
        .unwrap();
        let out = warp(&img, &h, 256, 256).unwrap();
        let white = out.image.data().iter().filter(|&&v| v > 0.5).count();
        let expected = 200.0 * 200.0;
        assert!(
            (white as f64 - expected).abs() < expected * 0.02,
            "white pixel count {white}"
        );
    }

    #[test]
    fn warp_preserves_range_and_marks_out_of_bounds() {
        let img = gradient_card(32);
        let h = Homography::from_matrix(Mat3::new(
            1.0, 0.0, -20.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        ))
        .unwrap();
        let out = warp(&img, &h, 32, 32).unwrap();
        for (i, &v) in out.image.data().iter().enumerate() {
            assert!((0.0..=1.0).contains(&v));
            if !out.validity[i] {
                assert_eq!(v, 0.0);
            }
        }
        // Columns ≥ 12 map back to x ≥ 32: out of bounds.
        assert!(!out.validity[15]);
        assert!(out.validity[0]);
    }

    #[test]
    fn grayscale_coefficients() {
        let mut img = Image::zeros(2, 1, 3);
        img.set(0, 0, 0, 1.0);
        img.set(0, 0, 1, 1.0);
        img.set(0, 0, 2, 1.0);
        img.set(1, 0, 1, 1.0);
        let g = grayscale(&img);
        assert!((g.get(0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((g.get(1, 0, 0) - 0.587).abs() < 1e-12);
    }

    #[test]
    fn grayscale_is_convex_combination() {
        let mut rng_state = 0x12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 33) as f64) / (u32::MAX as f64 / 2.0).floor()
        };
        let mut img = Image::zeros(16, 16, 3);
        for y in 0..16 {
            for x in 0..16 {
                for c in 0..3 {
                    img.set(x, y, c, next().clamp(0.0, 1.0));
                }
            }
        }
        let g = grayscale(&img);
        for y in 0..16 {
            for x in 0..16 {
                let (r, gg, b) = (img.get(x, y, 0), img.get(x, y, 1), img.get(x, y, 2));
                let lo = r.min(gg).min(b) - 1e-12;
                let hi = r.max(gg).max(b) + 1e-12;
                let v = g.get(x, y, 0);
                assert!(v >= lo && v <= hi);
            }
        }
    }

    #[test]
    fn gradients_of_constant_are_zero() {
        let img = Image::from_fn(16, 16, |_, _| 0.5);
        let (gx, gy) = gradients(&img);
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gy.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_of_ramp() {
        let w = 32;
        let img = Image::from_fn(w, 8, |x, _| x as f64 / w as f64);
        let (gx, gy) = gradients(&img);
        for y in 0..8 {
            for x in 1..w - 1 {
                assert!((gx.get(x, y, 0) - 1.0 / w as f64).abs() < 1e-12);
                assert_eq!(gy.get(x, y, 0), 0.0);
            }
        }
    }

    #[test]
    fn gradients_match_analytic_derivative_at_second_order() {
        for period in [32.0, 64.0] {
            let n = 256;
            let omega = 2.0 * std::f64::consts::PI / period;
            let img = Image::from_fn(n, 4, |x, _| 0.5 + 0.25 * (omega * x as f64).sin());
            let (gx, _) = gradients(&img);
            // Central difference error is f'''(x) h²/6 with h = 1.
            let bound = 1.2 * 0.25 * omega.powi(3) / 6.0;
            for x in 1..n - 1 {
                let analytic = 0.25 * omega * (omega * x as f64).cos();
                assert!(
                    (gx.get(x, 0, 0) - analytic).abs() < bound,
                    "period {period}, x {x}"
                );
            }
        }
    }

    #[test]
    fn backproject_direct_formula() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let depth = DepthMap::from_fn(8, 8, |x, y| {
            if x == 3 && y == 4 {
                Some(2.0)
            } else {
                None
            }
        });
        let pts = backproject(&depth, &k, Rect::full(8, 8)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0] - Vec3::new(6.0, 8.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn backproject_fronto_parallel_plane() {
        let k = Intrinsics::new(100.0, 100.0, 32.0, 32.0).unwrap();
        let depth = DepthMap::from_fn(64, 64, |_, _| Some(1.0));
        let pts = backproject(&depth, &k, Rect::full(64, 64)).unwrap();
        assert_eq!(pts.len(), 64 * 64);
        for p in &pts {
            assert!((p.z - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn backproject_tilted_plane_satisfies_plane_equation() {
        // Plane x + z = 3 in camera frame: for a ray r = K⁻¹(u,v,1),
        // depth λ satisfies λ (r.x + r.z) = 3.
        let k = Intrinsics::new(120.0, 120.0, 32.0, 32.0).unwrap();
        let depth = DepthMap::from_fn(64, 64, |u, v| {
            let r = k.unproject(Vec2::new(u as f64, v as f64));
            let denom = r.x + r.z;
            if denom > 0.1 {
                Some(3.0 / denom)
            } else {
                None
            }
        });
        let pts = backproject(&depth, &k, Rect::full(64, 64)).unwrap();
        assert!(!pts.is_empty());
        for p in &pts {
            assert!((p.x + p.z - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn backproject_reproject_round_trip() {
        let k = Intrinsics::new(420.0, 430.0, 31.5, 30.0).unwrap();
        let depth = DepthMap::from_fn(64, 64, |x, y| Some(1.0 + 0.01 * (x + 2 * y) as f64));
        let roi = Rect::new(5, 9, 20, 25).unwrap();
        let pts = backproject(&depth, &k, roi).unwrap();
        let mut i = 0;
        for v in roi.y0..roi.y1 {
            for u in roi.x0..roi.x1 {
                let px = k.project(pts[i]);
                assert!((px - Vec2::new(u as f64, v as f64)).norm() < 1e-9);
                i += 1;
            }
        }
    }

    #[test]
    fn backproject_empty_roi_errors() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let depth = DepthMap::from_fn(8, 8, |_, _| None);
        assert!(matches!(
            backproject(&depth, &k, Rect::full(8, 8)),
            Err(ImagingError::EmptyRoi(_))
        ));
    }

    #[test]
    fn png_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img_path = dir.path().join("img.png");
        let img = gradient_card(16);
        save_image(&img_path, &img).unwrap();
        let back = load_image(&img_path).unwrap();
        assert_eq!(back.width(), 16);
        for (a, b) in back.data().iter().zip(img.data().iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-9);
        }

        let depth_path = dir.path().join("depth.png");
        let depth = DepthMap::from_fn(8, 8, |x, _| if x == 0 { None } else { Some(x as f64 * 0.5) });
        save_depth(&depth_path, &depth).unwrap();
        let back = load_depth(&depth_path).unwrap();
        assert_eq!(back.get(0, 0), None);
        assert_eq!(back.get(2, 3), Some(1.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let img = gradient_card(16);
        let depth = DepthMap::from_fn(8, 8, |_, _| Some(1.0));
        assert!(matches!(
            check_matching_dims(&img, &depth),
            Err(ImagingError::DimensionMismatch { .. })
        ));
    }
}
