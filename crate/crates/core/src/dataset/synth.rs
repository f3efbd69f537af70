use super::DatasetManifest;
use crate::image::{resize_bilinear, save_png, ColorImage, GrayImage, INPUT_SIZE};
use crate::model::Side;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub seed: u64,
    pub size: usize,
    /// Noise grid resolution before upsampling.
    pub grid: usize,
    pub max_shift: i64,
    pub brightness_jitter: f64,
    pub noise_std: f64,
}

impl SynthConfig {
    pub fn new(classes: usize, per_class: usize, seed: u64) -> Self {
        Self {
            classes,
            per_class,
            seed,
            size: INPUT_SIZE,
            grid: 8,
            max_shift: 4,
            brightness_jitter: 0.15,
            noise_std: 0.03,
        }
    }
}

/// Class-level appearance: smooth colour noise plus an elliptical arc.
#[derive(Debug, Clone)]
struct ClassPattern {
    base: [GrayImage; 3],
    center: (f64, f64),
    axes: (f64, f64),
    tilt: f64,
    arc: (f64, f64),
    thickness: f64,
    color: [f64; 3],
}

impl ClassPattern {
    fn sample(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let s = cfg.size as f64;
        let mut channel = || -> Result<GrayImage> {
            let mean: f64 = rng.random_range(0.25..0.75);
            let low = GrayImage::from_fn(cfg.grid, cfg.grid, |_, _| (mean + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0))?;
            resize_bilinear(&low, cfg.size, cfg.size)
        };
        let base = [channel()?, channel()?, channel()?];
        Ok(Self {
            base,
            center: (rng.random_range(0.35 * s..0.65 * s), rng.random_range(0.35 * s..0.65 * s)),
            axes: (rng.random_range(0.2 * s..0.4 * s), rng.random_range(0.1 * s..0.25 * s)),
            tilt: rng.random_range(-0.4..0.4),
            arc: (rng.random_range(0.0..2.0 * PI), rng.random_range(0.6 * PI..1.6 * PI)),
            thickness: rng.random_range(1.5..3.5),
            color: [rng.random(), rng.random(), rng.random()],
        })
    }

    fn on_arc(&self, y: f64, x: f64) -> bool {
        let (dy, dx) = (y - self.center.0, x - self.center.1);
        let (c, s) = (self.tilt.cos(), self.tilt.sin());
        let u = (c * dx + s * dy) / self.axes.0;
        let v = (-s * dx + c * dy) / self.axes.1;
        let r = (u * u + v * v).sqrt();
        if ((r - 1.0) * self.axes.1).abs() > self.thickness {
            return false;
        }
        let phi = (v.atan2(u) - self.arc.0).rem_euclid(2.0 * PI);
        phi <= self.arc.1
    }

    fn render(&self, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> ColorImage {
        let n = cfg.size;
        let shift = (
            rng.random_range(-cfg.max_shift..=cfg.max_shift),
            rng.random_range(-cfg.max_shift..=cfg.max_shift),
        );
        let gain = 1.0 + rng.random_range(-cfg.brightness_jitter..=cfg.brightness_jitter);
        let noise = Normal::new(0.0, cfg.noise_std).expect("finite std");
        let clamp = |v: i64| v.clamp(0, n as i64 - 1) as usize;
        let mut data = Vec::with_capacity(n * n * 3);
        for y in 0..n {
            for x in 0..n {
                let (sy, sx) = (clamp(y as i64 - shift.0), clamp(x as i64 - shift.1));
                let arc = self.on_arc(sy as f64, sx as f64);
                for c in 0..3 {
                    let v = if arc { self.color[c] } else { self.base[c].get(sy, sx) };
                    let v = (v * gain + noise.sample(rng)).clamp(0.0, 1.0);
                    data.push((v * 255.0).round() as u8);
                }
            }
        }
        ColorImage::new(n, n, data).expect("sized buffer")
    }
}

/// In-memory generation: `images[class][i]` is the `(left, right)` pair.
pub fn synth_images(cfg: &SynthConfig) -> Result<Vec<Vec<(ColorImage, ColorImage)>>> {
    if cfg.classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {}", cfg.classes)));
    }
    if cfg.per_class == 0 || cfg.size == 0 || cfg.grid == 0 {
        return Err(Error::InvalidConfig("per_class, size and grid must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.classes)
        .map(|_| {
            let pattern = ClassPattern::sample(cfg, &mut rng)?;
            Ok((0..cfg.per_class)
                .map(|_| {
                    let right = pattern.render(cfg, &mut rng);
                    let left = pattern.render(cfg, &mut rng).flip_horizontal();
                    (left, right)
                })
                .collect())
        })
        .collect()
}

/// Writes a synthetic dataset under `root` in the scan layout and returns
/// its manifest.
pub fn synth_generate(root: impl AsRef<Path>, cfg: &SynthConfig) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let classes = synth_images(cfg)?;
    let width = cfg.classes.to_string().len().max(3);
    for (c, images) in classes.iter().enumerate() {
        let subject = root.join(format!("s{c:0width$}"));
        for side in Side::BOTH {
            let dir = subject.join(side.as_str());
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (i, (left, right)) in images.iter().enumerate() {
                let img = if side == Side::Left { left } else { right };
                save_png(img, dir.join(format!("{i:03}.png")))?;
            }
        }
    }
    DatasetManifest::scan(root)
}
