//! Dataset layout, subject-level splits and gallery/probe partitions.
//!
//! On disk a dataset is `root/<subject>/{left,right}/*.png`. Images of one
//! subject are paired by sorted index: `left[i]` and `right[i]` form capture
//! pair `i`. Partitions assign pair indices; when one side has more images
//! than the other, the unpaired extras always go to the gallery.

mod synth;

pub use synth::{synth_generate, synth_images, SynthConfig};

use crate::image::{load_color, ColorImage};
use crate::model::Side;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectImages {
    pub id: String,
    pub left: Vec<PathBuf>,
    pub right: Vec<PathBuf>,
}

impl SubjectImages {
    pub fn side(&self, side: Side) -> &[PathBuf] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Number of left/right capture pairs.
    pub fn pair_count(&self) -> usize {
        self.left.len().min(self.right.len())
    }

    pub fn image_count(&self) -> usize {
        self.left.len() + self.right.len()
    }
}

/// Pair indices of one subject split into gallery and probe halves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub gallery: Vec<usize>,
    pub probe: Vec<usize>,
}

impl Partition {
    /// Seeded 50:50 split of `0..pairs`; the gallery gets the odd one out.
    pub fn random(pairs: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut idx: Vec<usize> = (0..pairs).collect();
        idx.shuffle(rng);
        let cut = pairs.div_ceil(2);
        let mut gallery = idx[..cut].to_vec();
        let mut probe = idx[cut..].to_vec();
        gallery.sort_unstable();
        probe.sort_unstable();
        Self { gallery, probe }
    }

    /// Gallery image paths of one side, including unpaired extras.
    pub fn gallery_paths<'s>(&self, subject: &'s SubjectImages, side: Side) -> Vec<&'s Path> {
        let imgs = subject.side(side);
        let mut out: Vec<&Path> = self.gallery.iter().map(|&i| imgs[i].as_path()).collect();
        out.extend(imgs[subject.pair_count()..].iter().map(PathBuf::as_path));
        out
    }
}

/// One repetition: a partition for every evaluated subject.
pub type Repetition = BTreeMap<String, Partition>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub repetitions: Vec<Repetition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_subject_count: usize,
    pub repetitions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub root: PathBuf,
    /// Seed of the recorded splits.
    pub seed: Option<u64>,
    /// Sorted by id.
    pub subjects: Vec<SubjectImages>,
    pub splits: Option<Splits>,
}

fn is_png(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

impl DatasetManifest {
    /// Builds a manifest from `(subject, side, path)` triples in any order.
    /// Subjects missing either side are dropped with a warning.
    pub fn from_entries(root: impl Into<PathBuf>, entries: impl IntoIterator<Item = (String, Side, PathBuf)>) -> Self {
        let mut by_subject: BTreeMap<String, (Vec<PathBuf>, Vec<PathBuf>)> = BTreeMap::new();
        for (id, side, path) in entries {
            let e = by_subject.entry(id).or_default();
            match side {
                Side::Left => e.0.push(path),
                Side::Right => e.1.push(path),
            }
        }
        let subjects = by_subject
            .into_iter()
            .filter_map(|(id, (mut left, mut right))| {
                if left.is_empty() || right.is_empty() {
                    log::warn!("subject {id} has no {} images, excluded", if left.is_empty() { "left" } else { "right" });
                    return None;
                }
                left.sort();
                right.sort();
                Some(SubjectImages { id, left, right })
            })
            .collect();
        Self {
            version: MANIFEST_VERSION,
            root: root.into(),
            seed: None,
            subjects,
            splits: None,
        }
    }

    /// Scans `root/<subject>/{left,right}/*.png`.
    pub fn scan(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let mut entries = Vec::new();
        for dir in read_dir_sorted(root)? {
            if !dir.is_dir() {
                continue;
            }
            let id = dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::Dataset(format!("non UTF-8 subject directory {}", dir.display())))?
                .to_owned();
            for side in Side::BOTH {
                let side_dir = dir.join(side.as_str());
                if !side_dir.is_dir() {
                    continue;
                }
                for path in read_dir_sorted(&side_dir)? {
                    if !is_png(&path) {
                        continue;
                    }
                    std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                    entries.push((id.clone(), side, path));
                }
            }
        }
        Ok(Self::from_entries(root, entries))
    }

    pub fn image_count(&self) -> usize {
        self.subjects.iter().map(SubjectImages::image_count).sum()
    }

    pub fn subject(&self, id: &str) -> Result<&SubjectImages> {
        self.subjects
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .map(|i| &self.subjects[i])
            .map_err(|_| Error::Dataset(format!("unknown subject {id:?}")))
    }

    pub fn subject_ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.id.clone()).collect()
    }

    /// Seeded subject-level train/test split plus per-repetition
    /// gallery/probe partitions of every test subject.
    pub fn make_splits(&self, cfg: &SplitConfig) -> Result<Self> {
        if cfg.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if cfg.train_subject_count >= self.subjects.len() {
            return Err(Error::Dataset(format!(
                "{} subjects cannot hold {} training subjects and a test set",
                self.subjects.len(),
                cfg.train_subject_count
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut ids = self.subject_ids();
        ids.shuffle(&mut rng);
        let mut train = ids[..cfg.train_subject_count].to_vec();
        let mut test = ids[cfg.train_subject_count..].to_vec();
        train.sort();
        test.sort();
        let repetitions = self.partition_subjects(&test, cfg.repetitions, &mut rng)?;
        Ok(Self {
            seed: Some(cfg.seed),
            splits: Some(Splits { train, test, repetitions }),
            ..self.clone()
        })
    }

    /// Gallery/probe partitions of `ids` for each repetition. Subjects are
    /// visited in the given order.
    pub fn partition_subjects(&self, ids: &[String], repetitions: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Repetition>> {
        let mut out = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let mut rep = Repetition::new();
            for id in ids {
                let s = self.subject(id)?;
                if s.pair_count() < 2 {
                    return Err(Error::Dataset(format!(
                        "subject {id} needs at least 2 image pairs for a gallery/probe split"
                    )));
                }
                rep.insert(id.clone(), Partition::random(s.pair_count(), rng));
            }
            out.push(rep);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest version {}", m.version)));
        }
        Ok(m)
    }

    /// All images of one side for the given subjects, labelled by position
    /// in `ids`.
    pub fn labelled_images(&self, ids: &[String], side: Side) -> Result<Vec<(usize, ColorImage)>> {
        let mut paths = Vec::new();
        for (label, id) in ids.iter().enumerate() {
            paths.extend(self.subject(id)?.side(side).iter().map(|p| (label, p.clone())));
        }
        crate::parallel::map(&paths, |(label, p)| Ok((*label, load_color(p)?)))
            .into_iter()
            .collect()
    }
}
