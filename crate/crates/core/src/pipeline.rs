//! Glue between the dataset layout, the encoder, the per-side models and
//! the identification protocol.

use crate::dataset::{DatasetManifest, Repetition};
use crate::encoder::{DescriptorEncoder, EncodedPair};
use crate::ident::{CmcCurve, GalleryEntry, Probe, ScoreMode};
use crate::image::ColorImage;
use crate::model::{DualStreamModel, ModelConfig, Side, TrainExample, TrainReport};
use crate::nn::{OptimizerConfig, Real};
use crate::{parallel, Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Encodes labelled images of one side into training examples.
pub fn training_examples(
    encoder: &DescriptorEncoder<'_>,
    images: &[(usize, ColorImage)],
    side: Side,
) -> Result<Vec<TrainExample>> {
    parallel::map(images, |(label, img)| {
        Ok(TrainExample {
            input: encoder.prepare(img)?,
            label: *label,
            side,
        })
    })
    .into_iter()
    .collect()
}

/// Trains one side on every image of `ids`, class `i` being `ids[i]`.
pub fn train_side<T: Real>(
    manifest: &DatasetManifest,
    ids: &[String],
    side: Side,
    encoder: &DescriptorEncoder<'_>,
    config: ModelConfig,
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<(DualStreamModel<T>, TrainReport)> {
    if ids.len() != config.classes {
        return Err(Error::InvalidConfig(format!(
            "{} training subjects for a {}-class model",
            ids.len(),
            config.classes
        )));
    }
    let images = manifest.labelled_images(ids, side)?;
    let examples = training_examples(encoder, &images, side)?;
    let mut model = DualStreamModel::new(config, side, seed)?;
    let report = crate::model::train(&mut model, &examples, opt, seed)?;
    Ok((model, report))
}

/// Head-sum vectors for every image of one side of `ids`, keyed by path.
pub fn embed_paths<T: Real>(
    manifest: &DatasetManifest,
    ids: &[String],
    model: &DualStreamModel<T>,
    encoder: &DescriptorEncoder<'_>,
) -> Result<BTreeMap<PathBuf, Vec<f64>>> {
    let mut paths = Vec::new();
    for id in ids {
        paths.extend(manifest.subject(id)?.side(model.side()).iter().cloned());
    }
    let vecs = parallel::map(&paths, |p| {
        let EncodedPair { rgb, descriptor } = encoder.prepare(&crate::image::load_color(p)?)?;
        model.embed(&rgb, &descriptor)
    });
    paths.into_iter().zip(vecs).map(|(p, v)| Ok((p, v?))).collect()
}

/// Gallery entries and probes of one repetition.
pub fn gallery_and_probes(
    manifest: &DatasetManifest,
    repetition: &Repetition,
    left: &BTreeMap<PathBuf, Vec<f64>>,
    right: &BTreeMap<PathBuf, Vec<f64>>,
) -> Result<(Vec<GalleryEntry>, Vec<Probe>)> {
    let lookup = |side: Side, p: &std::path::Path| -> Result<Vec<f64>> {
        let table = if side == Side::Left { left } else { right };
        table
            .get(p)
            .cloned()
            .ok_or_else(|| Error::Dataset(format!("no {side} embedding for {}", p.display())))
    };
    let mut gallery = Vec::new();
    let mut probes = Vec::new();
    for (id, part) in repetition {
        let subject = manifest.subject(id)?;
        let side_vecs = |side: Side| -> Result<Vec<Vec<f64>>> {
            part.gallery_paths(subject, side).into_iter().map(|p| lookup(side, p)).collect()
        };
        gallery.push(GalleryEntry::from_images(id.clone(), &side_vecs(Side::Left)?, &side_vecs(Side::Right)?)?);
        for &i in &part.probe {
            probes.push(Probe {
                true_id: Some(id.clone()),
                left: lookup(Side::Left, &subject.left[i])?,
                right: lookup(Side::Right, &subject.right[i])?,
            });
        }
    }
    Ok((gallery, probes))
}

/// CMC over all repetitions with a left and a right model.
pub fn evaluate<T: Real>(
    manifest: &DatasetManifest,
    repetitions: &[Repetition],
    left_model: &DualStreamModel<T>,
    right_model: &DualStreamModel<T>,
    encoder: &DescriptorEncoder<'_>,
    mode: ScoreMode,
) -> Result<CmcCurve> {
    if left_model.side() != Side::Left || right_model.side() != Side::Right {
        return Err(Error::InvalidConfig(format!(
            "expected a left and a right model, got {} and {}",
            left_model.side(),
            right_model.side()
        )));
    }
    let ids: Vec<String> = repetitions
        .iter()
        .flat_map(|r| r.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let left = embed_paths(manifest, &ids, left_model, encoder)?;
    let right = embed_paths(manifest, &ids, right_model, encoder)?;
    let runs = repetitions
        .iter()
        .map(|r| gallery_and_probes(manifest, r, &left, &right))
        .collect::<Result<Vec<_>>>()?;
    CmcCurve::evaluate(&runs, mode)
}
