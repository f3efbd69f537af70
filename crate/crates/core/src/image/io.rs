use super::{ColorImage, GrayImage};
use crate::{Error, Result};
use std::path::Path;

/// Loads a PNG or binary PPM (P6) image as 8-bit RGB.
pub fn load_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let img = ::image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_owned(),
            source,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    ColorImage::new(h as usize, w as usize, img.into_raw())
}

pub fn save_png(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ::image::save_buffer_with_format(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        ::image::ExtendedColorType::Rgb8,
        ::image::ImageFormat::Png,
    )
    .map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Writes `[0, 1]` intensities as an 8-bit grayscale PNG.
pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    save_luma8(&img.to_u8(), img.height(), img.width(), path)
}

pub(crate) fn save_luma8(data: &[u8], h: usize, w: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ::image::save_buffer_with_format(
        path,
        data,
        w as u32,
        h as u32,
        ::image::ExtendedColorType::L8,
        ::image::ImageFormat::Png,
    )
    .map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}
