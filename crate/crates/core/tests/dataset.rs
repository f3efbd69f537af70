use oclbcp::dataset::{synth_generate, synth_images, DatasetManifest, SplitConfig, SynthConfig};
use oclbcp::image::{load_color, save_png, ColorImage};
use oclbcp::model::Side;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

fn layout(root: &std::path::Path, subjects: usize, per_side: usize) {
    let img = ColorImage::filled(4, 4, [1, 2, 3]);
    for s in 0..subjects {
        for side in ["left", "right"] {
            let dir = root.join(format!("subj{s}")).join(side);
            std::fs::create_dir_all(&dir).unwrap();
            for i in 0..per_side {
                save_png(&img, dir.join(format!("{i}.png"))).unwrap();
            }
        }
    }
}

fn listed(subjects: usize, per_side: usize) -> DatasetManifest {
    let mut e = vec![];
    for s in 0..subjects {
        for side in Side::BOTH {
            for i in 0..per_side {
                e.push((format!("s{s:02}"), side, PathBuf::from(format!("s{s:02}/{side}/{i}.png"))));
            }
        }
    }
    DatasetManifest::from_entries("root", e)
}

#[test]
fn scan_counts_and_empty_root() {
    let dir = tempfile::tempdir().unwrap();
    assert!(DatasetManifest::scan(dir.path()).unwrap().subjects.is_empty());
    layout(dir.path(), 3, 4);
    std::fs::write(dir.path().join("subj0/left/notes.txt"), "x").unwrap();
    let m = DatasetManifest::scan(dir.path()).unwrap();
    assert_eq!(m.subjects.len(), 3);
    assert_eq!(m.image_count(), 24);
    assert!(DatasetManifest::scan(dir.path().join("missing")).is_err());
}

#[test]
fn scan_excludes_one_sided_subjects() {
    let dir = tempfile::tempdir().unwrap();
    layout(dir.path(), 2, 2);
    std::fs::remove_dir_all(dir.path().join("subj1/right")).unwrap();
    let m = DatasetManifest::scan(dir.path()).unwrap();
    assert_eq!(m.subject_ids(), ["subj0"]);
}

#[test]
fn manifest_is_independent_of_enumeration_order() {
    let base = listed(6, 5);
    let mut entries = vec![];
    for s in &base.subjects {
        entries.extend(s.left.iter().map(|p| (s.id.clone(), Side::Left, p.clone())));
        entries.extend(s.right.iter().map(|p| (s.id.clone(), Side::Right, p.clone())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..5 {
        entries.shuffle(&mut rng);
        assert_eq!(DatasetManifest::from_entries("root", entries.clone()), base);
    }
}

#[test]
fn ten_subjects_six_train() {
    let m = listed(10, 6).make_splits(&SplitConfig { train_subject_count: 6, repetitions: 3, seed: 4 }).unwrap();
    let s = m.splits.as_ref().unwrap();
    assert_eq!((s.train.len(), s.test.len()), (6, 4));
    for rep in &s.repetitions {
        assert_eq!(rep.len(), 4);
        for p in rep.values() {
            assert_eq!((p.gallery.len(), p.probe.len()), (3, 3));
            assert!(p.gallery.iter().all(|g| !p.probe.contains(g)));
        }
    }
    assert_eq!(m.seed, Some(4));
}

#[test]
fn split_invariants_over_100_seeds() {
    let m = listed(12, 7);
    for seed in 0..100 {
        let cfg = SplitConfig { train_subject_count: 5, repetitions: 3, seed };
        let a = m.make_splits(&cfg).unwrap();
        assert_eq!(a, m.make_splits(&cfg).unwrap());
        let s = a.splits.unwrap();
        let train: BTreeSet<_> = s.train.iter().collect();
        let test: BTreeSet<_> = s.test.iter().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), 12);
        for rep in &s.repetitions {
            assert_eq!(rep.keys().collect::<BTreeSet<_>>(), test);
            for p in rep.values() {
                let mut all: Vec<_> = p.gallery.iter().chain(&p.probe).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..7).collect::<Vec<_>>());
                assert_eq!(p.gallery.len(), 4);
                assert_eq!(p.probe.len(), 3);
            }
        }
    }
}

#[test]
fn gallery_membership_is_fair_over_seeds() {
    let m = listed(3, 8);
    let mut hits: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let seeds = 100;
    for seed in 0..seeds {
        let s = m.make_splits(&SplitConfig { train_subject_count: 0, repetitions: 1, seed }).unwrap().splits.unwrap();
        for (id, p) in &s.repetitions[0] {
            for &g in &p.gallery {
                *hits.entry((id.clone(), g)).or_default() += 1;
            }
        }
    }
    // binomial(100, 0.5): mean 50, sd 5
    for subject in m.subject_ids() {
        for i in 0..8 {
            let h = *hits.get(&(subject.clone(), i)).unwrap_or(&0) as f64;
            assert!((h - 50.0).abs() <= 15.0, "{subject}/{i} in gallery {h} times");
        }
    }
}

#[test]
fn manifest_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = listed(4, 2).make_splits(&SplitConfig { train_subject_count: 2, repetitions: 2, seed: 1 }).unwrap();
    let path = dir.path().join("m.json");
    m.save(&path).unwrap();
    assert_eq!(DatasetManifest::load(&path).unwrap(), m);
    let text = std::fs::read_to_string(&path).unwrap();
    for key in ["\"version\"", "\"root\"", "\"subjects\"", "\"splits\"", "\"seed\""] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn synth_writes_the_expected_layout_deterministically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = SynthConfig::new(5, 8, 42);
    let ma = synth_generate(a.path(), &cfg).unwrap();
    synth_generate(b.path(), &cfg).unwrap();
    assert_eq!(ma.subjects.len(), 5);
    assert_eq!(ma.image_count(), 80);
    for s in &ma.subjects {
        for p in s.left.iter().chain(&s.right) {
            let rel = p.strip_prefix(a.path()).unwrap();
            assert_eq!(std::fs::read(p).unwrap(), std::fs::read(b.path().join(rel)).unwrap());
            let img = load_color(p).unwrap();
            assert_eq!((img.height(), img.width()), (80, 80));
        }
    }
    assert!(synth_images(&SynthConfig::new(1, 3, 0)).is_err());
}

fn mean_abs_diff(a: &ColorImage, b: &ColorImage) -> f64 {
    a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum::<f64>() / a.data().len() as f64
}

#[test]
fn synthetic_classes_are_separable() {
    let imgs = synth_images(&SynthConfig::new(6, 6, 3)).unwrap();
    let flat: Vec<(usize, &ColorImage)> = imgs
        .iter()
        .enumerate()
        .flat_map(|(c, v)| v.iter().map(move |(_, r)| (c, r)))
        .collect();
    let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
    for i in 0..flat.len() {
        for j in i + 1..flat.len() {
            let d = mean_abs_diff(flat[i].1, flat[j].1);
            if flat[i].0 == flat[j].0 {
                within += d;
                nw += 1;
            } else {
                between += d;
                nb += 1;
            }
        }
    }
    let (within, between) = (within / nw as f64, between / nb as f64);
    assert!(within < between, "within {within} between {between}");
}

#[test]
fn left_images_are_mirrored_right_style() {
    let mut cfg = SynthConfig::new(2, 1, 9);
    cfg.max_shift = 0;
    cfg.brightness_jitter = 0.0;
    cfg.noise_std = 0.0;
    let imgs = synth_images(&cfg).unwrap();
    for class in &imgs {
        let (l, r) = &class[0];
        assert_eq!(&l.flip_horizontal(), r);
    }
}
