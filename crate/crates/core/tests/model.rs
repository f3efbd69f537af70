use oclbcp::encoder::{DescriptorEncoder, EncodedPair, EncoderConfig};
use oclbcp::ident::{identify, GalleryEntry, Probe, ScoreMode};
use oclbcp::image::ColorImage;
use oclbcp::model::{train, Arch, DualStreamModel, ModelConfig, ModelManifest, Side, TrainExample};
use oclbcp::nn::gradcheck::check_params;
use oclbcp::nn::{Graph, OptimizerConfig, ParamStore, Tensor};
use oclbcp::palette::ColorPalette;
use oclbcp::dataset::{synth_images, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn palette() -> &'static ColorPalette {
    static P: OnceLock<ColorPalette> = OnceLock::new();
    P.get_or_init(|| ColorPalette::build().unwrap())
}

fn rand_input(rng: &mut ChaCha8Rng, s: usize) -> Tensor<f64> {
    Tensor::from_vec(&[1, 3, s, s], (0..3 * s * s).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn rand_image(rng: &mut ChaCha8Rng, s: usize) -> ColorImage {
    ColorImage::new(s, s, (0..s * s * 3).map(|_| rng.random()).collect()).unwrap()
}

fn zero_param<T: oclbcp::nn::Real>(m: &mut DualStreamModel<T>, name: &str) {
    let id = m.store().id(name).unwrap();
    m.store_mut().value_mut(id).data_mut().iter_mut().for_each(|v| *v = T::default());
}

fn loss_of(model: &DualStreamModel<f64>, store: &ParamStore<f64>, rgb: &Tensor<f64>, desc: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    let mut g = Graph::new(store);
    let (r, d) = (g.input(rgb.clone()).unwrap(), g.input(desc.clone()).unwrap());
    let vars = model.forward_graph(&mut g, r, d).unwrap();
    let l = model.total_loss(&mut g, &vars, y).unwrap();
    g.value(l).item()
}

#[test]
fn miniature_network_passes_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut model = DualStreamModel::<f64>::new(ModelConfig::miniature(2), Side::Left, 4).unwrap();
    // zero biases leave a 2-channel stack sitting on ReLU kinks
    let ids: Vec<_> = model.store().ids().collect();
    for id in ids {
        if model.store().name(id).ends_with(".b") {
            let b = model.store_mut().value_mut(id).data_mut();
            b.iter_mut().for_each(|v| *v = rng.random_range(0.05..0.3));
        }
    }
    let (rgb, desc) = (rand_input(&mut rng, 8), rand_input(&mut rng, 8));
    let y = Tensor::from_vec(&[1, 2], vec![0.0, 1.0]).unwrap();
    let f = model.fusion_features(&rgb, &desc).unwrap();
    assert!(f.f1.iter().chain(&f.f2).any(|&v| v > 0.0), "stack must not be dead");

    let mut g = Graph::new(model.store());
    let (r, d) = (g.input(rgb.clone()).unwrap(), g.input(desc.clone()).unwrap());
    let vars = model.forward_graph(&mut g, r, d).unwrap();
    let l = model.total_loss(&mut g, &vars, &y).unwrap();
    let grads = g.backward(l).unwrap().into_params();
    assert_eq!(grads.len(), model.store().len(), "every parameter receives a gradient");

    let mut store = model.store().clone();
    let worst = check_params(&mut store, &grads, 1e-5, |s| Ok(loss_of(&model, s, &rgb, &desc, &y))).unwrap();
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn trunk_is_read_once_per_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = DualStreamModel::<f64>::new(ModelConfig::miniature(3), Side::Right, 0).unwrap();
    let mut g = Graph::new(model.store());
    let (r, d) = (g.input(rand_input(&mut rng, 8)).unwrap(), g.input(rand_input(&mut rng, 8)).unwrap());
    model.forward_graph(&mut g, r, d).unwrap();
    let read = g.params_read();
    for id in model.trunk_params() {
        assert_eq!(read.iter().filter(|&&r| r == id).count(), 1, "{}", model.store().name(id));
    }
}

#[test]
fn fusion_algebra_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = DualStreamModel::<f64>::new(ModelConfig::miniature(3), Side::Left, 8).unwrap();
    for _ in 0..5 {
        let (a, b) = (rand_input(&mut rng, 8), rand_input(&mut rng, 8));
        let same = model.fusion_features(&a, &a).unwrap();
        assert_eq!(same.f1, same.f2);
        for i in 0..same.f1.len() {
            assert!((same.z_max[i] - same.f1[i]).abs() < 1e-6);
            assert!((same.z_sum[i] - 2.0 * same.f1[i]).abs() < 1e-6);
        }
        let ab = model.fusion_features(&a, &b).unwrap();
        let ba = model.fusion_features(&b, &a).unwrap();
        for i in 0..ab.f1.len() {
            assert!(ab.z_max[i] >= ab.f1[i] && ab.z_max[i] >= ab.f2[i]);
            assert!((ab.z_max[i] - ba.z_max[i]).abs() < 1e-6);
            assert!((ab.z_sum[i] - ba.z_sum[i]).abs() < 1e-6);
        }
        let (o_ab, o_ba) = (model.forward_tensors(&a, &b).unwrap(), model.forward_tensors(&b, &a).unwrap());
        for (x, y) in o_ab.combined().iter().zip(o_ba.combined()) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn heads_are_distributions_and_embed_sums_to_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = DualStreamModel::<f32>::new(ModelConfig::desk(7), Side::Left, 1).unwrap();
    let (a, b) = (rand_image(&mut rng, 80), rand_image(&mut rng, 80));
    let out = model.forward(&a, &b).unwrap();
    assert_eq!(out.o_max.len(), 7);
    assert!((out.o_max.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    assert!((out.o_sum.as_ref().unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let o = model.embed(&a, &b).unwrap();
    assert!((o.iter().sum::<f64>() - 2.0).abs() < 1e-6);
    assert!(o.iter().all(|&v| v > 0.0 && v < 2.0));
}

#[test]
fn uniform_heads_give_known_loss_and_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (classes, loss) in [(2usize, 2.0 * 2f64.ln()), (4, 2.0 * 4f64.ln())] {
        let mut model = DualStreamModel::<f64>::new(ModelConfig::miniature(classes), Side::Left, 3).unwrap();
        for n in ["out_max.w", "out_max.b", "out_sum.w", "out_sum.b"] {
            zero_param(&mut model, n);
        }
        let (a, b) = (rand_input(&mut rng, 8), rand_input(&mut rng, 8));
        let mut y = vec![0.0; classes];
        y[1] = 1.0;
        let y = Tensor::from_vec(&[1, classes], y).unwrap();
        assert!((loss_of(&model, model.store(), &a, &b, &y) - loss).abs() < 1e-12);
        let o = model.forward_tensors(&a, &b).unwrap().combined();
        assert!(o.iter().all(|&v| (v - 2.0 / classes as f64).abs() < 1e-12));
    }
}

#[test]
fn wrong_side_example_is_rejected() {
    let mut model = DualStreamModel::<f32>::new(ModelConfig::desk(2), Side::Left, 0).unwrap();
    let img = ColorImage::filled(80, 80, [10, 20, 30]);
    let ex = |side| TrainExample {
        input: EncodedPair {
            rgb: img.clone(),
            descriptor: img.clone(),
        },
        label: 0,
        side,
    };
    let opt = OptimizerConfig {
        epochs: 1,
        ..Default::default()
    };
    assert!(train(&mut model, &[ex(Side::Left), ex(Side::Right)], &opt, 0).is_err());
    assert!(train(&mut model, &[], &opt, 0).is_err());
    let bad_label = TrainExample { label: 2, ..ex(Side::Left) };
    assert!(train(&mut model, &[bad_label], &opt, 0).is_err());
}

fn synth_examples(classes: usize, per_class: usize, seed: u64, side: Side) -> Vec<TrainExample> {
    let enc = DescriptorEncoder::new(palette(), EncoderConfig::default());
    let imgs = synth_images(&SynthConfig::new(classes, per_class, seed)).unwrap();
    let mut out = vec![];
    for (label, pairs) in imgs.iter().enumerate() {
        for (l, r) in pairs {
            let img = if side == Side::Left { l } else { r };
            out.push(TrainExample {
                input: enc.prepare(img).unwrap(),
                label,
                side,
            });
        }
    }
    out
}

#[test]
fn overfits_a_small_synthetic_set() {
    let examples = synth_examples(5, 8, 21, Side::Right);
    let opt = OptimizerConfig {
        epochs: 50,
        ..Default::default()
    };
    let mut model = DualStreamModel::<f32>::new(ModelConfig::desk(5), Side::Right, 2).unwrap();
    let report = train(&mut model, &examples, &opt, 2).unwrap();
    let l = &report.epoch_losses;
    for e in 5..l.len() - 10 {
        assert!(l[e + 10] <= l[e], "loss rose from epoch {e} to {}: {} -> {}", e + 10, l[e], l[e + 10]);
    }
    for ex in &examples {
        let o = model.embed(&ex.input.rgb, &ex.input.descriptor).unwrap();
        let best = (0..o.len()).max_by(|&a, &b| o[a].total_cmp(&o[b])).unwrap();
        assert_eq!(best, ex.label);
    }

    // same seed, same log
    let mut again = DualStreamModel::<f32>::new(ModelConfig::desk(5), Side::Right, 2).unwrap();
    let short = OptimizerConfig { epochs: 3, ..opt };
    let r1 = train(&mut again, &examples, &short, 9).unwrap();
    let mut again2 = DualStreamModel::<f32>::new(ModelConfig::desk(5), Side::Right, 2).unwrap();
    let r2 = train(&mut again2, &examples, &short, 9).unwrap();
    assert_eq!(r1.epoch_losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r2.epoch_losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn save_load_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let examples = synth_examples(2, 2, 1, Side::Left);
    let mut model = DualStreamModel::<f32>::new(ModelConfig::desk(2).with_arch(Arch::DualStream), Side::Left, 5).unwrap();
    let opt = OptimizerConfig {
        epochs: 1,
        ..Default::default()
    };
    train(&mut model, &examples, &opt, 0).unwrap();
    let manifest = ModelManifest {
        side: Side::Left,
        model: model.config().clone(),
        encoder: EncoderConfig::default(),
        optimizer: opt,
        palette_sha256: palette().sha256(),
        seed: 5,
        class_ids: vec!["a".into(), "b".into()],
    };
    model.save(&path, &manifest).unwrap();
    let (loaded, m2) = DualStreamModel::<f32>::load(&path).unwrap();
    assert_eq!(m2, manifest);
    let x = &examples[0].input;
    let (a, b) = (model.embed(&x.rgb, &x.descriptor).unwrap(), loaded.embed(&x.rgb, &x.descriptor).unwrap());
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(loaded.store().step(), model.store().step());
}

#[test]
fn identify_with_a_trained_style_gallery() {
    // probe equal to an enrolled subject's vectors is decided for that subject
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gallery: Vec<GalleryEntry> = (0..6)
        .map(|i| GalleryEntry {
            id: format!("s{i}"),
            left: (0..6).map(|_| rng.random::<f64>() + 0.01).collect(),
            right: (0..6).map(|_| rng.random::<f64>() + 0.01).collect(),
        })
        .collect();
    for g in &gallery {
        let p = Probe {
            true_id: None,
            left: g.left.clone(),
            right: g.right.clone(),
        };
        let r = identify(&gallery, &p, ScoreMode::Similarity).unwrap();
        assert_eq!(r.decision(), g.id);
        assert!((r.ranked[0].1 - 2.0).abs() < 1e-12);
    }
}
