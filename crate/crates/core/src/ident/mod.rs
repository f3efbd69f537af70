//! Closed-set gallery/probe identification with left/right sum-rule fusion
//! and CMC evaluation.

mod cmc;
mod svg;

pub use cmc::{cmc_rates, CmcCurve};
pub use svg::cmc_svg;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// How a side comparison is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// `cos(g, p)`, best match has the highest fused score.
    #[default]
    Similarity,
    /// `1 − cos(g, p)`, best match has the lowest fused score.
    Dissimilarity,
}

/// Cosine similarity of two vectors.
pub fn side_score(g: &[f64], p: &[f64]) -> Result<f64> {
    if g.len() != p.len() {
        return Err(Error::Shape(format!("score vectors of length {} and {}", g.len(), p.len())));
    }
    let dot: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
    let ng = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    if ng == 0.0 || np == 0.0 {
        return Err(Error::Identification("cosine of a zero vector".into()));
    }
    let s = dot / (ng * np);
    if !s.is_finite() {
        return Err(Error::NonFinite("side score"));
    }
    Ok(s)
}

/// One enrolled subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub id: String,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

fn mean_vector(vs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vs.first().ok_or_else(|| Error::Identification("no gallery vectors".into()))?;
    let mut out = vec![0.0; first.len()];
    for v in vs {
        if v.len() != out.len() {
            return Err(Error::Shape("gallery vectors differ in length".into()));
        }
        out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
    }
    let n = vs.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

impl GalleryEntry {
    /// Enrols a subject from several images per side by averaging.
    pub fn from_images(id: impl Into<String>, left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            id: id.into(),
            left: mean_vector(left)?,
            right: mean_vector(right)?,
        })
    }
}

/// A query: one left and one right vector, with the true id when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub true_id: Option<String>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// `s(left) + s(right)` under `mode`.
pub fn fuse_lr(g: &GalleryEntry, p_left: &[f64], p_right: &[f64], mode: ScoreMode) -> Result<f64> {
    let s = |a: &[f64], b: &[f64]| -> Result<f64> {
        let c = side_score(a, b)?;
        Ok(match mode {
            ScoreMode::Similarity => c,
            ScoreMode::Dissimilarity => 1.0 - c,
        })
    };
    Ok(s(&g.left, p_left)? + s(&g.right, p_right)?)
}

/// Gallery subjects ordered best match first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub ranked: Vec<(String, f64)>,
}

impl Ranking {
    /// The decision δ.
    pub fn decision(&self) -> &str {
        &self.ranked[0].0
    }

    /// 1-based rank of `id`.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ranked.iter().position(|(g, _)| g == id).map(|i| i + 1)
    }
}

fn rank_scores(mut scored: Vec<(String, f64)>, mode: ScoreMode) -> Ranking {
    scored.sort_by(|a, b| {
        let by_score = match mode {
            ScoreMode::Similarity => b.1.total_cmp(&a.1),
            ScoreMode::Dissimilarity => a.1.total_cmp(&b.1),
        };
        match by_score {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        }
    });
    Ranking { ranked: scored }
}

/// Ranks every gallery subject against `probe`; ties go to the smaller id.
pub fn identify(gallery: &[GalleryEntry], probe: &Probe, mode: ScoreMode) -> Result<Ranking> {
    if gallery.is_empty() {
        return Err(Error::Identification("empty gallery".into()));
    }
    let scored = gallery
        .iter()
        .map(|g| Ok((g.id.clone(), fuse_lr(g, &probe.left, &probe.right, mode)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_scores(scored, mode))
}

/// Fused scores, one row per probe and one column per gallery subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub gallery_ids: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub mode: ScoreMode,
}

impl ScoreTable {
    pub fn compute(gallery: &[GalleryEntry], probes: &[Probe], mode: ScoreMode) -> Result<Self> {
        let scores = crate::parallel::map(probes, |p| {
            gallery.iter().map(|g| fuse_lr(g, &p.left, &p.right, mode)).collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gallery_ids: gallery.iter().map(|g| g.id.clone()).collect(),
            scores,
            mode,
        })
    }

    pub fn ranking(&self, probe: usize) -> Ranking {
        let scored = self.gallery_ids.iter().cloned().zip(self.scores[probe].iter().copied()).collect();
        rank_scores(scored, self.mode)
    }
}
