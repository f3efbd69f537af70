use oclbcp::ident::{cmc_rates, fuse_lr, identify, side_score, CmcCurve, GalleryEntry, Probe, ScoreMode, ScoreTable};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn entry(id: &str, left: Vec<f64>, right: Vec<f64>) -> GalleryEntry {
    GalleryEntry { id: id.into(), left, right }
}

fn probe(id: &str, left: Vec<f64>, right: Vec<f64>) -> Probe {
    Probe {
        true_id: Some(id.into()),
        left,
        right,
    }
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.01..2.0)).collect()
}

#[test]
fn side_score_examples() {
    let g = [0.7, 0.3];
    let p = [0.3, 0.7];
    let dot = 0.7 * 0.3 + 0.3 * 0.7;
    let oracle = dot / (0.7f64.powi(2) + 0.3f64.powi(2));
    assert!((side_score(&g, &p).unwrap() - oracle).abs() < 1e-12);
    assert!((side_score(&g, &p).unwrap() - 0.7241).abs() < 1e-4);
    assert!((side_score(&g, &g).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fuse_lr_examples() {
    let a = vec![0.2, 0.5, 1.3];
    let g = entry("a", a.clone(), a.clone());
    assert!((fuse_lr(&g, &a, &a, ScoreMode::Similarity).unwrap() - 2.0).abs() < 1e-12);
    let g = entry("a", one_hot(2, 0), one_hot(2, 0));
    assert!((fuse_lr(&g, &one_hot(2, 0), &one_hot(2, 1), ScoreMode::Similarity).unwrap() - 1.0).abs() < 1e-12);
    assert!((fuse_lr(&g, &one_hot(2, 0), &one_hot(2, 1), ScoreMode::Dissimilarity).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fuse_lr_composes_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (gl, gr, pl, pr) = (rand_vec(&mut rng, 6), rand_vec(&mut rng, 6), rand_vec(&mut rng, 6), rand_vec(&mut rng, 6));
        let fused = fuse_lr(&entry("x", gl.clone(), gr.clone()), &pl, &pr, ScoreMode::Similarity).unwrap();
        let parts = side_score(&gl, &pl).unwrap() + side_score(&gr, &pr).unwrap();
        assert!((fused - parts).abs() < 1e-12);
        let swapped = fuse_lr(&entry("x", pl, pr), &gl, &gr, ScoreMode::Similarity).unwrap();
        assert!((fused - swapped).abs() < 1e-12);
    }
}

#[test]
fn single_subject_gallery_always_ranks_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = [entry("only", rand_vec(&mut rng, 4), rand_vec(&mut rng, 4))];
    for _ in 0..10 {
        let p = probe("only", rand_vec(&mut rng, 4), rand_vec(&mut rng, 4));
        assert_eq!(identify(&g, &p, ScoreMode::Similarity).unwrap().decision(), "only");
    }
}

#[test]
fn ranking_matches_brute_force_sort() {
    // five subjects along a fan of directions: probe near subject 2 makes
    // the ranking fall off by angular distance
    let angle = |t: f64| vec![t.cos(), t.sin()];
    let gallery: Vec<_> = (0..5).map(|i| entry(&format!("s{i}"), angle(0.3 * i as f64), angle(0.25 * i as f64))).collect();
    let p = probe("s2", angle(0.62), angle(0.49));
    let r = identify(&gallery, &p, ScoreMode::Similarity).unwrap();

    let mut oracle: Vec<(f64, String)> = gallery
        .iter()
        .map(|g| {
            // all vectors are unit length, so the dot product is the cosine
            let cl = g.left[0] * p.left[0] + g.left[1] * p.left[1];
            let cr = g.right[0] * p.right[0] + g.right[1] * p.right[1];
            (cl + cr, g.id.clone())
        })
        .collect();
    oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    let got: Vec<&str> = r.ranked.iter().map(|(id, _)| id.as_str()).collect();
    let want: Vec<&str> = oracle.iter().map(|(_, id)| id.as_str()).collect();
    assert_eq!(got, want);
    assert_eq!(got[0], "s2");
}

#[test]
fn decisions_survive_uniform_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let gallery: Vec<_> = (0..6).map(|i| entry(&format!("s{i}"), rand_vec(&mut rng, 5), rand_vec(&mut rng, 5))).collect();
        let p = probe("s0", rand_vec(&mut rng, 5), rand_vec(&mut rng, 5));
        let k: f64 = rng.random_range(0.1..10.0);
        let scaled: Vec<_> = gallery
            .iter()
            .map(|g| entry(&g.id, g.left.iter().map(|v| v * k).collect(), g.right.iter().map(|v| v * k).collect()))
            .collect();
        let a = identify(&gallery, &p, ScoreMode::Similarity).unwrap();
        let b = identify(&scaled, &p, ScoreMode::Similarity).unwrap();
        assert_eq!(a.decision(), b.decision());
    }
}

#[test]
fn both_score_modes_decide_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let gallery: Vec<_> = (0..8).map(|i| entry(&format!("s{i}"), rand_vec(&mut rng, 4), rand_vec(&mut rng, 4))).collect();
        let p = probe("s0", rand_vec(&mut rng, 4), rand_vec(&mut rng, 4));
        let a = identify(&gallery, &p, ScoreMode::Similarity).unwrap();
        let b = identify(&gallery, &p, ScoreMode::Dissimilarity).unwrap();
        let ids = |r: &oclbcp::ident::Ranking| r.ranked.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }
}

#[test]
fn perfect_and_adversarial_cmc() {
    let c = 5;
    let gallery: Vec<_> = (0..c).map(|i| entry(&format!("s{i}"), one_hot(c, i), one_hot(c, i))).collect();
    let perfect: Vec<_> = (0..c).map(|i| probe(&format!("s{i}"), one_hot(c, i), one_hot(c, i))).collect();
    let rates = cmc_rates(&gallery, &perfect, ScoreMode::Similarity).unwrap();
    assert_eq!(rates, vec![1.0; c]);

    // probes orthogonal to their own subject and equally close to the rest
    let anti = |i: usize| (0..c).map(|j| if i == j { 0.0 } else { 1.0 }).collect::<Vec<_>>();
    let worst: Vec<_> = (0..c).map(|i| probe(&format!("s{i}"), anti(i), anti(i))).collect();
    let rates = cmc_rates(&gallery, &worst, ScoreMode::Similarity).unwrap();
    assert_eq!(rates[0], 0.0);
    assert_eq!(rates[c - 2], 0.0);
    assert_eq!(rates[c - 1], 1.0);
}

#[test]
fn unenrolled_probe_is_an_error() {
    let gallery = [entry("a", vec![1.0], vec![1.0])];
    let p = probe("b", vec![1.0], vec![1.0]);
    assert!(cmc_rates(&gallery, &[p], ScoreMode::Similarity).is_err());
    let unlabelled = Probe {
        true_id: None,
        left: vec![1.0],
        right: vec![1.0],
    };
    assert!(cmc_rates(&gallery, &[unlabelled], ScoreMode::Similarity).is_err());
}

#[test]
fn score_table_rows_match_identify() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gallery: Vec<_> = (0..4).map(|i| entry(&format!("s{i}"), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3))).collect();
    let probes: Vec<_> = (0..7).map(|_| probe("s1", rand_vec(&mut rng, 3), rand_vec(&mut rng, 3))).collect();
    let t = ScoreTable::compute(&gallery, &probes, ScoreMode::Similarity).unwrap();
    for (i, p) in probes.iter().enumerate() {
        assert_eq!(t.ranking(i), identify(&gallery, p, ScoreMode::Similarity).unwrap());
    }
}

proptest! {
    #[test]
    fn cmc_is_monotone_and_ends_at_one(seed in any::<u64>(), subjects in 2usize..9, probes_per in 1usize..4, reps in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let runs: Vec<_> = (0..reps)
            .map(|_| {
                let g: Vec<_> = (0..subjects).map(|i| entry(&format!("s{i}"), rand_vec(&mut rng, 4), rand_vec(&mut rng, 4))).collect();
                let p: Vec<_> = (0..subjects * probes_per)
                    .map(|i| probe(&format!("s{}", i % subjects), rand_vec(&mut rng, 4), rand_vec(&mut rng, 4)))
                    .collect();
                (g, p)
            })
            .collect();
        let curve = CmcCurve::evaluate(&runs, ScoreMode::Similarity).unwrap();
        prop_assert_eq!(curve.ranks(), subjects);
        for r in &curve.repetitions {
            prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*r.last().unwrap(), 1.0);
        }
        prop_assert!(curve.mean.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        prop_assert!((curve.rate(subjects) - 1.0).abs() < 1e-15);
    }
}
