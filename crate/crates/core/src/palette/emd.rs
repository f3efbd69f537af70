//! Earth Mover's Distance between circular 8-bin code histograms.

use crate::parallel;
use crate::{Error, Result};

pub const BINS: usize = 8;
pub const CODES: usize = 256;

pub type Distribution = [f64; BINS];

/// Unit mass spread evenly over the set bits of `code`. Code 0 has no set
/// bits and maps to the uniform distribution.
pub fn code_to_distribution(code: u8) -> Distribution {
    let ones = code.count_ones();
    if ones == 0 {
        return [1.0 / BINS as f64; BINS];
    }
    let w = 1.0 / f64::from(ones);
    std::array::from_fn(|i| if code >> i & 1 == 1 { w } else { 0.0 })
}

/// Circular hop count between bins `i` and `j`.
pub fn circular_ground_distance(i: usize, j: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(BINS - d)
}

fn check(p: &Distribution) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(s));
    }
    Ok(())
}

/// Exact EMD on the 8-bin circle.
///
/// With `D` the prefix sums of `p - q`, the circular cost is
/// `min_c Σ |D_i - c|`; the minimizer is a median of `D`, so scanning every
/// `c = D_k` (one per rotational cut point) is exact.
pub fn emd_circular(p: &Distribution, q: &Distribution) -> Result<f64> {
    check(p)?;
    check(q)?;
    Ok(emd_circular_unchecked(p, q))
}

pub(crate) fn emd_circular_unchecked(p: &Distribution, q: &Distribution) -> f64 {
    let mut prefix = [0.0; BINS];
    let mut acc = 0.0;
    for i in 0..BINS {
        acc += p[i] - q[i];
        prefix[i] = acc;
    }
    prefix
        .iter()
        .map(|&c| prefix.iter().map(|&d| (d - c).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Pairwise EMD between every pair of 8-bit codes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeDistanceMatrix {
    d: Vec<f64>,
}

impl CodeDistanceMatrix {
    pub fn get(&self, u: u8, v: u8) -> f64 {
        self.d[usize::from(u) * CODES + usize::from(v)]
    }

    /// Row-major `256 × 256` values.
    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }
}

pub fn build_distance_matrix() -> CodeDistanceMatrix {
    let dists: Vec<Distribution> = (0..=255u8).map(code_to_distribution).collect();
    let rows = parallel::map_range(CODES, |u| {
        (0..CODES)
            .map(|v| emd_circular_unchecked(&dists[u], &dists[v]))
            .collect::<Vec<_>>()
    });
    CodeDistanceMatrix {
        d: rows.concat(),
    }
}
