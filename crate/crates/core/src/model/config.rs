use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which ocular a model is trained on. Each side gets its own model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::InvalidConfig(format!("side must be left or right, got {s:?}"))),
        }
    }
}

/// Network topology. The single-stream variants exist for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    /// Shared trunk on RGB and descriptor, max and sum fusion, two heads.
    DualStream,
    /// Trunk and one head on the RGB image only.
    RgbOnly,
    /// Trunk and one head on the descriptor image only.
    DescriptorOnly,
}

impl Arch {
    pub fn is_dual(self) -> bool {
        self == Arch::DualStream
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Square input side length.
    pub input_size: usize,
    pub in_channels: usize,
    pub kernel: usize,
    /// Output channels of conv1..convN.
    pub conv_channels: Vec<usize>,
    /// Whether a 2×2 max pool follows each conv layer.
    pub pool_after: Vec<bool>,
    /// Width of the flatten projection F1/F2 (and of the fusion layers).
    pub projection: usize,
    /// Width of the two hidden FC layers in each head.
    pub hidden: usize,
    pub classes: usize,
}

const PAPER_POOLS: [bool; 8] = [true, true, false, true, false, true, false, false];

impl ModelConfig {
    /// Full-size layout: eight conv pairs up to 512 channels at 5×5,
    /// 12,800-wide flatten projected to 4,096, 4,096-wide heads.
    pub fn paper(classes: usize) -> Self {
        Self {
            arch: Arch::DualStream,
            input_size: 80,
            in_channels: 3,
            kernel: 2,
            conv_channels: vec![64, 128, 256, 256, 512, 512, 512, 512],
            pool_after: PAPER_POOLS.to_vec(),
            projection: 4096,
            hidden: 4096,
            classes,
        }
    }

    /// Same topology at widths a desktop CPU trains in seconds.
    pub fn desk(classes: usize) -> Self {
        Self {
            conv_channels: vec![8, 8, 16, 16, 16, 16, 32, 32],
            projection: 64,
            hidden: 64,
            ..Self::paper(classes)
        }
    }

    /// 8×8 input variant for exhaustive gradient checks. An 8×8 input only
    /// survives three halvings, so the pool after conv6 is dropped.
    pub fn miniature(classes: usize) -> Self {
        Self {
            input_size: 8,
            conv_channels: vec![2; 8],
            pool_after: vec![true, true, false, true, false, false, false, false],
            projection: 6,
            hidden: 5,
            ..Self::paper(classes)
        }
    }

    pub fn with_arch(mut self, arch: Arch) -> Self {
        self.arch = arch;
        self
    }

    /// Spatial side length after the conv stack.
    pub fn final_spatial(&self) -> usize {
        let pools = self.pool_after.iter().filter(|&&p| p).count();
        self.input_size >> pools
    }

    pub fn flatten_dim(&self) -> usize {
        let s = self.final_spatial();
        self.conv_channels.last().copied().unwrap_or(self.in_channels) * s * s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.conv_channels.is_empty() || self.conv_channels.len() != self.pool_after.len() {
            return bad("conv_channels and pool_after must be non-empty and equal length".into());
        }
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.kernel == 0 || self.projection == 0 || self.hidden == 0 || self.in_channels == 0 {
            return bad("layer widths must be positive".into());
        }
        if self.conv_channels.contains(&0) {
            return bad("conv channels must be positive".into());
        }
        let mut s = self.input_size;
        for (i, &p) in self.pool_after.iter().enumerate() {
            if p {
                if !s.is_multiple_of(2) || s == 0 {
                    return bad(format!("pool after conv{} sees odd size {s}", i + 1));
                }
                s /= 2;
            }
        }
        if s == 0 {
            return bad("input too small for the pooling stack".into());
        }
        Ok(())
    }

    /// Scalar parameter count, without allocating.
    pub fn param_count(&self) -> usize {
        let k2 = self.kernel * self.kernel;
        let mut n = 0;
        let mut c_in = self.in_channels;
        for &c in &self.conv_channels {
            n += c * c_in * k2 + c;
            c_in = c;
        }
        n += self.flatten_dim() * self.projection + self.projection;
        let head = self.projection * self.hidden
            + self.hidden
            + self.hidden * self.hidden
            + self.hidden
            + self.hidden * self.classes
            + self.classes;
        n + head * if self.arch.is_dual() { 2 } else { 1 }
    }
}
