//! LBP and LTP codes and their orthogonal combination into the OC-LBCP
//! code map.
//!
//! Neighbours are numbered clockwise from the top-left corner of the 3×3
//! window; neighbour `i` owns bit `i` of every code.

use crate::image::GrayImage;
use crate::{Error, Result};
use std::path::Path;

/// Default LTP dead-zone: 5 grey levels on the 8-bit scale.
pub const DEFAULT_LTP_THRESHOLD: f64 = 5.0 / 255.0;

/// `(dy, dx)` offsets of the eight neighbours, clockwise from top-left.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

const EVEN_BITS: u8 = 0b0101_0101;
const ODD_BITS: u8 = 0b1010_1010;

/// A 3×3 neighbourhood split into centre and clockwise ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: f64,
    pub neighbors: [f64; 8],
}

impl Window {
    pub fn new(center: f64, neighbors: [f64; 8]) -> Self {
        Self { center, neighbors }
    }

    /// Builds a window from a row-major 3×3 grid.
    pub fn from_grid(g: [[f64; 3]; 3]) -> Self {
        let neighbors = NEIGHBOR_OFFSETS.map(|(dy, dx)| g[(1 + dy) as usize][(1 + dx) as usize]);
        Self::new(g[1][1], neighbors)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.center), self.neighbors.map(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LbpCode(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LtpCodePair {
    pub positive: u8,
    pub negative: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrthogonalGroups {
    pub a1: u8,
    pub a2: u8,
    pub a3: u8,
    pub a4: u8,
}

impl OrthogonalGroups {
    pub fn as_array(&self) -> [u8; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    /// Largest group code as an unsigned integer.
    pub fn max(&self) -> u8 {
        self.a1.max(self.a2).max(self.a3).max(self.a4)
    }
}

/// Bit `i` is set iff neighbour `i >= center`.
pub fn lbp_code(w: &Window) -> LbpCode {
    let mut code = 0u8;
    for (i, &n) in w.neighbors.iter().enumerate() {
        if n >= w.center {
            code |= 1 << i;
        }
    }
    LbpCode(code)
}

/// Ternary code with dead zone `t`, split into positive and negative halves.
pub fn ltp_code(w: &Window, t: f64) -> LtpCodePair {
    let mut positive = 0u8;
    let mut negative = 0u8;
    for (i, &n) in w.neighbors.iter().enumerate() {
        if n >= w.center + t {
            positive |= 1 << i;
        } else if n <= w.center - t {
            negative |= 1 << i;
        }
    }
    LtpCodePair { positive, negative }
}

/// Crosses the even/odd neighbour subsets of the LTP halves with the
/// complementary subset of the LBP code.
pub fn orthogonal_combine(lbp: LbpCode, ltp: LtpCodePair) -> OrthogonalGroups {
    let LbpCode(b) = lbp;
    OrthogonalGroups {
        a1: (ltp.positive & EVEN_BITS) | (b & ODD_BITS),
        a2: (ltp.positive & ODD_BITS) | (b & EVEN_BITS),
        a3: (ltp.negative & EVEN_BITS) | (b & ODD_BITS),
        a4: (ltp.negative & ODD_BITS) | (b & EVEN_BITS),
    }
}

/// OC-LBCP code of a single window.
pub fn oclbcp_code(w: &Window, t: f64) -> u8 {
    orthogonal_combine(lbp_code(w), ltp_code(w, t)).max()
}

/// Per-pixel 8-bit code raster, same size as its source image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeMap {
    height: usize,
    width: usize,
    codes: Vec<u8>,
}

impl CodeMap {
    pub fn new(height: usize, width: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "code map {}x{} needs {} codes, got {}",
                height,
                width,
                height * width,
                codes.len()
            )));
        }
        Ok(Self {
            height,
            width,
            codes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::image::io_save_luma8(&self.codes, self.height, self.width, path)
    }
}

/// Window centred at `(y, x)` with replicate padding at the borders.
pub fn window_at(img: &GrayImage, y: usize, x: usize) -> Window {
    let (h, w) = (img.height() as isize, img.width() as isize);
    let at = |dy: isize, dx: isize| {
        let yy = (y as isize + dy).clamp(0, h - 1) as usize;
        let xx = (x as isize + dx).clamp(0, w - 1) as usize;
        img.get(yy, xx)
    };
    Window::new(img.get(y, x), NEIGHBOR_OFFSETS.map(|(dy, dx)| at(dy, dx)))
}

/// OC-LBCP code map: per pixel, the largest of the four orthogonal groups.
pub fn oclbcp_map(img: &GrayImage, t: f64) -> Result<CodeMap> {
    if img.height() < 3 || img.width() < 3 {
        return Err(Error::InvalidImage(format!(
            "OC-LBCP needs at least 3x3 pixels, got {}x{}",
            img.height(),
            img.width()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidConfig(format!("LTP threshold {t} must be >= 0")));
    }
    let (h, w) = (img.height(), img.width());
    let mut codes = vec![0u8; h * w];
    crate::parallel::for_each_chunk_mut(&mut codes, w, |y, row| {
        for (x, c) in row.iter_mut().enumerate() {
            *c = oclbcp_code(&window_at(img, y, x), t);
        }
    });
    CodeMap::new(h, w, codes)
}
