use super::dft::{dft2, frequency, C64};
use super::GrayImage;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Floor applied before taking logarithms so black pixels stay finite.
const LOG_FLOOR: f64 = 1e-6;

/// Homomorphic high-emphasis Butterworth filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButterworthConfig {
    pub order: u32,
    /// Normalized spatial frequency, in `(0, 0.5]`.
    pub cutoff: f64,
    /// Gain applied to high frequencies, `>= 1`.
    pub high_boost: f64,
    /// Gain applied at DC, in `[0, 1)`.
    pub low_gain: f64,
}

impl Default for ButterworthConfig {
    fn default() -> Self {
        Self {
            order: 2,
            cutoff: 0.05,
            high_boost: 1.5,
            low_gain: 0.5,
        }
    }
}

impl ButterworthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidConfig("butterworth order must be >= 1".into()));
        }
        if !(self.cutoff > 0.0 && self.cutoff <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "butterworth cutoff {} outside (0, 0.5]",
                self.cutoff
            )));
        }
        if !(self.high_boost >= 1.0) || !(0.0..1.0).contains(&self.low_gain) {
            return Err(Error::InvalidConfig(format!(
                "butterworth gains need high_boost >= 1 and low_gain in [0, 1), got {} / {}",
                self.high_boost, self.low_gain
            )));
        }
        Ok(())
    }

    /// Transfer function at radial frequency `radius`.
    pub fn transfer(&self, radius: f64) -> f64 {
        let ratio = (radius / self.cutoff).powi(2 * self.order as i32);
        self.low_gain + (self.high_boost - self.low_gain) * (1.0 - 1.0 / (1.0 + ratio))
    }
}

/// Multiplies the spectrum of a row-major real signal by the filter's
/// transfer function and returns the (real) result. Odd dimensions are
/// replicate-padded to even before transforming and cropped afterwards.
pub fn filter_log_spectrum(values: &[f64], h: usize, w: usize, cfg: &ButterworthConfig) -> Vec<f64> {
    let ph = h + h % 2;
    let pw = w + w % 2;
    let mut buf = Vec::with_capacity(ph * pw);
    for y in 0..ph {
        let sy = y.min(h - 1);
        for x in 0..pw {
            buf.push(C64::new(values[sy * w + x.min(w - 1)], 0.0));
        }
    }
    dft2(&mut buf, ph, pw, false);
    for ky in 0..ph {
        let fy = frequency(ky, ph);
        for kx in 0..pw {
            let fx = frequency(kx, pw);
            let g = cfg.transfer((fy * fy + fx * fx).sqrt());
            let v = &mut buf[ky * pw + kx];
            v.re *= g;
            v.im *= g;
        }
    }
    dft2(&mut buf, ph, pw, true);
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        out.extend(buf[y * pw..y * pw + w].iter().map(|c| c.re));
    }
    out
}

/// Homomorphic filtering: log, Butterworth high-emphasis in the frequency
/// domain, exp, then min-max rescale to `[0, 1]`.
///
/// Multiplicative illumination becomes an additive DC offset in the log
/// domain, which the final rescale removes, so `k * img` and `img` give the
/// same output for any `k > 0`. A flat result is returned as the input mean.
pub fn butterworth_homomorphic(img: &GrayImage, cfg: &ButterworthConfig) -> Result<GrayImage> {
    cfg.validate()?;
    if img.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("butterworth input"));
    }
    let (h, w) = (img.height(), img.width());
    if h == 0 || w == 0 {
        return Err(Error::InvalidImage("empty image".into()));
    }
    let logs: Vec<f64> = img.data().iter().map(|v| v.max(LOG_FLOOR).ln()).collect();
    let filtered: Vec<f64> = filter_log_spectrum(&logs, h, w, cfg)
        .into_iter()
        .map(f64::exp)
        .collect();

    let (lo, hi) = filtered
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite("butterworth filter"));
    }
    let data = if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        let mean = img.data().iter().sum::<f64>() / img.data().len() as f64;
        vec![mean; h * w]
    } else {
        filtered.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
    };
    GrayImage::new(h, w, data)
}
