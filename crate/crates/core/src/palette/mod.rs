//! Colour palette for OC-LBCP codes: EMD distances between codes, a 3-D
//! classical MDS embedding, and the pair matrix `Δ(u, v) = ⌊m(u) + m(v)⌋`.

pub mod emd;
pub mod mds;

pub use emd::{build_distance_matrix, code_to_distribution, emd_circular, CodeDistanceMatrix};
pub use mds::{classical_mds, distance_correlation, Embedding};

use crate::image::ColorImage;
use crate::texture::CodeMap;
use crate::{Error, Result};
use emd::CODES;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"OCLB";
const VERSION: u32 = 1;
/// Colour palettes live in RGB, so the embedding is always 3-D.
pub const PALETTE_DIMS: usize = 3;
/// Each channel is mapped into `[0, HALF_RANGE]` so pairwise sums fit a byte.
const HALF_RANGE: f64 = 127.0;

/// 256-entry code embedding plus the `256 × 256 × 3` pair matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPalette {
    embedding: Vec<[f64; 3]>,
    pairs: Vec<u8>,
}

impl ColorPalette {
    /// Full build: distance matrix, MDS, pair matrix. Deterministic.
    pub fn build() -> Result<Self> {
        let d = build_distance_matrix();
        let emb = classical_mds(d.as_slice(), CODES, PALETTE_DIMS)?;
        Ok(Self::from_embedding(&emb))
    }

    pub fn from_embedding(emb: &Embedding) -> Self {
        assert_eq!(emb.n, CODES);
        assert_eq!(emb.dims, PALETTE_DIMS);
        let embedding: Vec<[f64; 3]> = (0..CODES)
            .map(|i| {
                let p = emb.point(i);
                [p[0], p[1], p[2]]
            })
            .collect();
        let pairs = build_pair_matrix(&embedding);
        Self { embedding, pairs }
    }

    pub fn embedding(&self) -> &[[f64; 3]] {
        &self.embedding
    }

    /// `Δ(u, v)`.
    pub fn pair(&self, u: u8, v: u8) -> [u8; 3] {
        let i = (usize::from(u) * CODES + usize::from(v)) * 3;
        [self.pairs[i], self.pairs[i + 1], self.pairs[i + 2]]
    }

    /// Per-code colour: the diagonal `Δ(c, c)`.
    pub fn color(&self, code: u8) -> [u8; 3] {
        self.pair(code, code)
    }

    pub fn pair_matrix(&self) -> &[u8] {
        &self.pairs
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + CODES * 24 + self.pairs.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for p in &self.embedding {
            for v in p {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.pairs);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let expected = 8 + CODES * 3 * 8 + CODES * CODES * 3;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "palette file has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("palette magic mismatch".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported palette version {version}")));
        }
        let mut vals = bytes[8..8 + CODES * 24]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let embedding = (0..CODES)
            .map(|_| [vals.next().unwrap(), vals.next().unwrap(), vals.next().unwrap()])
            .collect();
        Ok(Self {
            embedding,
            pairs: bytes[8 + CODES * 24..].to_vec(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Hex SHA-256 of the serialized palette.
    pub fn sha256(&self) -> String {
        hex_digest(&self.to_bytes())
    }

    /// 256 × `height` strip showing each code's colour.
    pub fn swatch(&self, height: usize) -> ColorImage {
        let mut data = Vec::with_capacity(height * CODES * 3);
        for _ in 0..height {
            for c in 0..=255u8 {
                data.extend_from_slice(&self.color(c));
            }
        }
        ColorImage::new(height, CODES, data).expect("swatch dimensions")
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Maps each channel affinely to `[0, 127]` and returns the per-code mapped
/// values. A flat channel maps to the midpoint.
fn normalize_channels(embedding: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in embedding {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    embedding
        .iter()
        .map(|p| {
            std::array::from_fn(|c| {
                let span = hi[c] - lo[c];
                if span > 0.0 {
                    (p[c] - lo[c]) / span * HALF_RANGE
                } else {
                    HALF_RANGE / 2.0
                }
            })
        })
        .collect()
}

/// `Δ(u, v) = ⌊m(u) + m(v)⌋` channelwise, row-major over `(u, v)`.
pub fn build_pair_matrix(embedding: &[[f64; 3]]) -> Vec<u8> {
    let m = normalize_channels(embedding);
    let n = m.len();
    let mut out = Vec::with_capacity(n * n * 3);
    for u in &m {
        for v in &m {
            for c in 0..3 {
                out.push((u[c] + v[c]).floor() as u8);
            }
        }
    }
    out
}

/// Renders a code map with the per-code palette colours.
pub fn colorize(codes: &CodeMap, palette: &ColorPalette) -> ColorImage {
    let mut data = Vec::with_capacity(codes.codes().len() * 3);
    for &c in codes.codes() {
        data.extend_from_slice(&palette.color(c));
    }
    ColorImage::new(codes.height(), codes.width(), data).expect("code map dimensions")
}
