//! End-to-end descriptor encoding: RGB crop to colourized OC-LBCP image.

use crate::image::{butterworth_homomorphic, to_gray, ButterworthConfig, ColorImage, Resize, INPUT_SIZE};
use crate::palette::{colorize, ColorPalette};
use crate::texture::{oclbcp_map, CodeMap, DEFAULT_LTP_THRESHOLD};
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub butterworth: ButterworthConfig,
    pub ltp_threshold: f64,
    pub input_size: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            butterworth: ButterworthConfig::default(),
            ltp_threshold: DEFAULT_LTP_THRESHOLD,
            input_size: INPUT_SIZE,
        }
    }
}

/// Both network inputs for one periocular crop.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub rgb: ColorImage,
    pub descriptor: ColorImage,
}

pub struct DescriptorEncoder<'p> {
    palette: &'p ColorPalette,
    config: EncoderConfig,
}

impl<'p> DescriptorEncoder<'p> {
    pub fn new(palette: &'p ColorPalette, config: EncoderConfig) -> Self {
        Self { palette, config }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// Gray, illumination filter, OC-LBCP codes. No resizing.
    pub fn code_map(&self, img: &ColorImage) -> Result<CodeMap> {
        let gray = to_gray(img);
        let filtered = butterworth_homomorphic(&gray, &self.config.butterworth)?;
        oclbcp_map(&filtered, self.config.ltp_threshold)
    }

    /// Colourized descriptor at the image's own size.
    pub fn encode(&self, img: &ColorImage) -> Result<ColorImage> {
        Ok(colorize(&self.code_map(img)?, self.palette))
    }

    /// Resizes to the network input size and encodes.
    pub fn prepare(&self, img: &ColorImage) -> Result<EncodedPair> {
        let s = self.config.input_size;
        let rgb = img.resize_bilinear(s, s)?;
        let descriptor = self.encode(&rgb)?;
        Ok(EncodedPair { rgb, descriptor })
    }

    pub fn prepare_all(&self, imgs: &[ColorImage]) -> Result<Vec<EncodedPair>> {
        crate::parallel::map(imgs, |img| self.prepare(img))
            .into_iter()
            .collect()
    }
}
