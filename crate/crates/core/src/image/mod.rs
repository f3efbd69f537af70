//! Image rasters, grayscale conversion, bilinear resizing and homomorphic
//! illumination filtering.

mod butterworth;
mod dft;
mod io;

pub use butterworth::{butterworth_homomorphic, filter_log_spectrum, ButterworthConfig};
pub use io::{load_color, save_gray_png, save_png};
pub(crate) use io::save_luma8 as io_save_luma8;

use crate::{Error, Result};

/// Side length every periocular crop is resized to before encoding.
pub const INPUT_SIZE: usize = 80;

/// Single-channel image with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "{}x{} image needs {} values, got {}",
                height,
                width,
                height * width,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidImage(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Quantizes to 8 bits by rounding `v * 255`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Three-channel 8-bit image, interleaved RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorImage {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width * Self::CHANNELS {
            return Err(Error::InvalidImage(format!(
                "{}x{}x3 image needs {} bytes, got {}",
                height,
                width,
                height * width * Self::CHANNELS,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * 3).collect();
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Planar `[0, 1]` representation (channel-major), as fed to the network.
    pub fn to_planar_unit(&self) -> Vec<f64> {
        let n = self.height * self.width;
        let mut out = vec![0.0; n * 3];
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[c * n + i] = f64::from(px[c]) / 255.0;
            }
        }
        out
    }

    /// Mirrors the image left to right.
    pub fn flip_horizontal(&self) -> ColorImage {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                data.extend_from_slice(&self.pixel(y, x));
            }
        }
        ColorImage {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// ITU-R BT.601 luma, scaled to `[0, 1]`.
pub fn to_gray(img: &ColorImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let l = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            (l / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        height: img.height,
        width: img.width,
        data,
    }
}

/// Images that can be bilinearly resampled.
pub trait Resize: Sized {
    fn resize_bilinear(&self, height: usize, width: usize) -> Result<Self>;
}

impl Resize for GrayImage {
    fn resize_bilinear(&self, height: usize, width: usize) -> Result<Self> {
        check_target(height, width)?;
        if (height, width) == (self.height, self.width) {
            return Ok(self.clone());
        }
        let data = resample(&self.data, self.height, self.width, 1, height, width)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        Ok(GrayImage {
            height,
            width,
            data,
        })
    }
}

impl Resize for ColorImage {
    fn resize_bilinear(&self, height: usize, width: usize) -> Result<Self> {
        check_target(height, width)?;
        if (height, width) == (self.height, self.width) {
            return Ok(self.clone());
        }
        let src: Vec<f64> = self.data.iter().map(|&v| f64::from(v)).collect();
        let data = resample(&src, self.height, self.width, 3, height, width)
            .into_iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        Ok(ColorImage {
            height,
            width,
            data,
        })
    }
}

/// Convenience wrapper over [`Resize::resize_bilinear`].
pub fn resize_bilinear<I: Resize>(img: &I, height: usize, width: usize) -> Result<I> {
    img.resize_bilinear(height, width)
}

fn check_target(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidConfig(format!(
            "resize target {height}x{width} must be non-empty"
        )));
    }
    Ok(())
}

/// Source coordinate for target index `d` under pixel-centre alignment,
/// clamped to the valid range. Returns the two taps and the weight of the
/// second one.
fn taps(d: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    let s = ((d as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(src - 1);
    (i0, i1, s - i0 as f64)
}

fn resample(
    src: &[f64],
    sh: usize,
    sw: usize,
    channels: usize,
    dh: usize,
    dw: usize,
) -> Vec<f64> {
    let xs: Vec<_> = (0..dw).map(|x| taps(x, sw, dw)).collect();
    let mut out = Vec::with_capacity(dh * dw * channels);
    for y in 0..dh {
        let (y0, y1, fy) = taps(y, sh, dh);
        for &(x0, x1, fx) in &xs {
            for c in 0..channels {
                let at = |yy: usize, xx: usize| src[(yy * sw + xx) * channels + c];
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    out
}
