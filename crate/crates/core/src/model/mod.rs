//! Dual-stream weight-sharing network with max/sum late fusion.
//!
//! The trunk (conv stack, flatten, projection to F) is registered once and
//! applied to both the RGB image and the colourized descriptor. The two
//! flatten projections F1, F2 are fused into `Z_max = max(F1, F2)` and
//! `Z_sum = F1 + F2`, each feeding its own FC → FC → C head.

mod config;
mod manifest;
mod train;

pub use config::{Arch, ModelConfig, Side};
pub use manifest::ModelManifest;
pub use train::{train, TrainExample, TrainReport};

use crate::image::ColorImage;
use crate::nn::{softmax_rows, Checkpoint, Graph, ParamId, ParamStore, Real, Tensor, Var};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::path::Path;

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Head {
    fc_a: Dense,
    fc_b: Dense,
    out: Dense,
}

/// Graph nodes of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardVars {
    pub f1: Option<Var>,
    pub f2: Option<Var>,
    pub z_max: Option<Var>,
    pub z_sum: Option<Var>,
    pub y_max: Var,
    pub y_sum: Option<Var>,
}

/// Softmax outputs of the heads for a single example.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    pub o_max: Vec<f64>,
    /// Absent for single-stream variants.
    pub o_sum: Option<Vec<f64>>,
}

impl HeadOutputs {
    /// `o = o_max + o_sum`.
    pub fn combined(&self) -> Vec<f64> {
        match &self.o_sum {
            Some(s) => self.o_max.iter().zip(s).map(|(a, b)| a + b).collect(),
            None => self.o_max.clone(),
        }
    }
}

/// Fusion-stage activations for a single example.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionFeatures {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub z_max: Vec<f64>,
    pub z_sum: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DualStreamModel<T> {
    config: ModelConfig,
    side: Side,
    store: ParamStore<T>,
    trunk: Vec<Dense>,
    projection: Dense,
    head_max: Head,
    head_sum: Option<Head>,
}

fn he_normal<T: Real>(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor<T> {
    let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| T::from_f64(dist.sample(rng))).collect())
        .expect("shape product")
}

impl<T: Real> DualStreamModel<T> {
    /// Fresh model with fan-in scaled normal weights and zero biases.
    pub fn new(config: ModelConfig, side: Side, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut dense = |store: &mut ParamStore<T>, name: &str, shape: &[usize], fan_in: usize| -> Result<Dense> {
            let w = store.register(&format!("{name}.w"), he_normal(&mut rng, shape, fan_in))?;
            let out = if shape.len() == 4 { shape[0] } else { shape[1] };
            let b = store.register(&format!("{name}.b"), Tensor::zeros(&[out]))?;
            Ok(Dense { w, b })
        };

        let k = config.kernel;
        let mut trunk = Vec::with_capacity(config.conv_channels.len());
        let mut c_in = config.in_channels;
        for (i, &c) in config.conv_channels.iter().enumerate() {
            trunk.push(dense(&mut store, &format!("conv{}", i + 1), &[c, c_in, k, k], c_in * k * k)?);
            c_in = c;
        }
        let fd = config.flatten_dim();
        let projection = dense(&mut store, "flatten_proj", &[fd, config.projection], fd)?;

        let (p, h, c) = (config.projection, config.hidden, config.classes);
        let mut head = |store: &mut ParamStore<T>, a: &str, b: &str, out: &str| -> Result<Head> {
            Ok(Head {
                fc_a: dense(store, a, &[p, h], p)?,
                fc_b: dense(store, b, &[h, h], h)?,
                out: dense(store, out, &[h, c], h)?,
            })
        };
        let head_max = head(&mut store, "fc1", "fc3", "out_max")?;
        let head_sum = if config.arch.is_dual() {
            Some(head(&mut store, "fc2", "fc4", "out_sum")?)
        } else {
            None
        };
        Ok(Self {
            config,
            side,
            store,
            trunk,
            projection,
            head_max,
            head_sum,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    /// Parameters used by the shared trunk (conv stack and projection).
    pub fn trunk_params(&self) -> Vec<ParamId> {
        self.trunk
            .iter()
            .chain(std::iter::once(&self.projection))
            .flat_map(|d| [d.w, d.b])
            .collect()
    }

    fn trunk_forward(&self, g: &mut Graph<'_, T>, x: Var) -> Result<Var> {
        let mut h = x;
        for (layer, &pool) in self.trunk.iter().zip(&self.config.pool_after) {
            let (w, b) = (g.param(layer.w), g.param(layer.b));
            let c = g.conv2d(h, w, b)?;
            h = g.relu(c);
            if pool {
                h = g.maxpool2(h)?;
            }
        }
        let flat = g.flatten(h)?;
        let (w, b) = (g.param(self.projection.w), g.param(self.projection.b));
        let f = g.linear(flat, w, b)?;
        Ok(g.relu(f))
    }

    fn head_forward(g: &mut Graph<'_, T>, head: &Head, z: Var) -> Result<Var> {
        let mut h = z;
        for d in [head.fc_a, head.fc_b] {
            let (w, b) = (g.param(d.w), g.param(d.b));
            let y = g.linear(h, w, b)?;
            h = g.relu(y);
        }
        let (w, b) = (g.param(head.out.w), g.param(head.out.b));
        g.linear(h, w, b)
    }

    /// Records the forward pass on `g`. Inputs are `N × 3 × S × S` tensors
    /// scaled to `[0, 1]`.
    pub fn forward_graph(&self, g: &mut Graph<'_, T>, rgb: Var, descriptor: Var) -> Result<ForwardVars> {
        let s = self.config.input_size;
        for v in [rgb, descriptor] {
            let shape = g.value(v).shape();
            if shape.len() != 4 || shape[1..] != [self.config.in_channels, s, s] {
                return Err(Error::Shape(format!(
                    "model expects N x {} x {s} x {s} input, got {shape:?}",
                    self.config.in_channels
                )));
            }
        }
        match self.config.arch {
            Arch::DualStream => {
                let f1 = self.trunk_forward(g, rgb)?;
                let f2 = self.trunk_forward(g, descriptor)?;
                let z_max = g.maximum(f1, f2)?;
                let z_sum = g.add(f1, f2)?;
                let y_max = Self::head_forward(g, &self.head_max, z_max)?;
                let head_sum = self.head_sum.as_ref().expect("dual model has a sum head");
                let y_sum = Self::head_forward(g, head_sum, z_sum)?;
                Ok(ForwardVars {
                    f1: Some(f1),
                    f2: Some(f2),
                    z_max: Some(z_max),
                    z_sum: Some(z_sum),
                    y_max,
                    y_sum: Some(y_sum),
                })
            }
            Arch::RgbOnly | Arch::DescriptorOnly => {
                let x = if self.config.arch == Arch::RgbOnly { rgb } else { descriptor };
                let f = self.trunk_forward(g, x)?;
                let y_max = Self::head_forward(g, &self.head_max, f)?;
                let (f1, f2) = if self.config.arch == Arch::RgbOnly {
                    (Some(f), None)
                } else {
                    (None, Some(f))
                };
                Ok(ForwardVars {
                    f1,
                    f2,
                    z_max: None,
                    z_sum: None,
                    y_max,
                    y_sum: None,
                })
            }
        }
    }

    /// Summed cross-entropy of both heads (just the one head for
    /// single-stream variants).
    pub fn total_loss(&self, g: &mut Graph<'_, T>, vars: &ForwardVars, labels: &Tensor<T>) -> Result<Var> {
        let l_max = g.softmax_cross_entropy(vars.y_max, labels)?;
        match vars.y_sum {
            Some(y_sum) => {
                let l_sum = g.softmax_cross_entropy(y_sum, labels)?;
                g.add(l_max, l_sum)
            }
            None => Ok(l_max),
        }
    }

    pub fn image_tensor(&self, img: &ColorImage) -> Result<Tensor<T>> {
        let s = self.config.input_size;
        if img.height() != s || img.width() != s {
            return Err(Error::Shape(format!(
                "model expects {s}x{s} images, got {}x{}",
                img.height(),
                img.width()
            )));
        }
        Tensor::from_f64(&[1, 3, s, s], &img.to_planar_unit())
    }

    /// Head softmax vectors for tensors already in network layout.
    pub fn forward_tensors(&self, rgb: &Tensor<T>, descriptor: &Tensor<T>) -> Result<HeadOutputs> {
        let mut g = Graph::new(&self.store);
        let (r, d) = (g.input(rgb.clone())?, g.input(descriptor.clone())?);
        let vars = self.forward_graph(&mut g, r, d)?;
        let probs = |v: Var| softmax_rows(g.value(v)).to_f64_vec();
        Ok(HeadOutputs {
            o_max: probs(vars.y_max),
            o_sum: vars.y_sum.map(probs),
        })
    }

    /// `(o_max, o_sum)` for one RGB image and its descriptor.
    pub fn forward(&self, rgb: &ColorImage, descriptor: &ColorImage) -> Result<HeadOutputs> {
        self.forward_tensors(&self.image_tensor(rgb)?, &self.image_tensor(descriptor)?)
    }

    /// `o = o_max + o_sum`.
    pub fn embed(&self, rgb: &ColorImage, descriptor: &ColorImage) -> Result<Vec<f64>> {
        Ok(self.forward(rgb, descriptor)?.combined())
    }

    /// [`embed`](Self::embed) over many pairs, in input order.
    pub fn embed_all(&self, pairs: &[(ColorImage, ColorImage)]) -> Result<Vec<Vec<f64>>> {
        crate::parallel::map(pairs, |(r, d)| self.embed(r, d)).into_iter().collect()
    }

    /// F1, F2 and the two fusion layers for a dual-stream model.
    pub fn fusion_features(&self, rgb: &Tensor<T>, descriptor: &Tensor<T>) -> Result<FusionFeatures> {
        if !self.config.arch.is_dual() {
            return Err(Error::InvalidConfig("fusion features need a dual-stream model".into()));
        }
        let mut g = Graph::new(&self.store);
        let (r, d) = (g.input(rgb.clone())?, g.input(descriptor.clone())?);
        let v = self.forward_graph(&mut g, r, d)?;
        let get = |v: Option<Var>| g.value(v.expect("dual")).to_f64_vec();
        Ok(FusionFeatures {
            f1: get(v.f1),
            f2: get(v.f2),
            z_max: get(v.z_max),
            z_sum: get(v.z_sum),
        })
    }

    /// Writes the checkpoint to `path` and the manifest next to it.
    pub fn save(&self, path: impl AsRef<Path>, manifest: &ModelManifest) -> Result<()> {
        let path = path.as_ref();
        Checkpoint::from_store(&self.store, true).save(path)?;
        manifest.save(ModelManifest::sidecar_path(path))
    }

    /// Rebuilds a model from a checkpoint and its manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, ModelManifest)> {
        let path = path.as_ref();
        let manifest = ModelManifest::load(ModelManifest::sidecar_path(path))?;
        let mut model = Self::new(manifest.model.clone(), manifest.side, 0)?;
        Checkpoint::load(path)?.restore_into(&mut model.store)?;
        Ok((model, manifest))
    }
}
