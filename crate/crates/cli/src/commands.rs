use crate::config::{pick, require, FileConfig};
use crate::{ArchArg, EncodeArgs, EncoderFlags, EvalArgs, Format, PaletteArgs, Scale, SplitArgs, SubjectSet, SynthArgs, TrainArgs};
use anyhow::{bail, ensure, Context, Result};
use oclbcp::dataset::{synth_generate, DatasetManifest, SplitConfig, SynthConfig};
use oclbcp::encoder::{DescriptorEncoder, EncoderConfig};
use oclbcp::ident::{cmc_svg, ScoreMode};
use oclbcp::image::{load_color, ButterworthConfig};
use oclbcp::model::{Arch, DualStreamModel, ModelConfig, ModelManifest, Side};
use oclbcp::nn::OptimizerConfig;
use oclbcp::palette::{build_distance_matrix, classical_mds, distance_correlation, ColorPalette, PALETTE_DIMS};
use oclbcp::pipeline;
use rand_chacha::rand_core::SeedableRng;
use serde::Serialize;
use std::path::{Path, PathBuf};

const DEFAULT_SEED: u64 = 0;

fn log_resolved(command: &str, config: &impl Serialize) -> Result<()> {
    log::info!("{command}: resolved config {}", serde_json::to_string(config)?);
    Ok(())
}

fn load_palette(flag: Option<PathBuf>, file: &FileConfig) -> Result<(PathBuf, ColorPalette)> {
    let path = require(flag, file.palette.clone(), "palette")?;
    let p = ColorPalette::load(&path).with_context(|| format!("loading palette {}", path.display()))?;
    Ok((path, p))
}

fn encoder_config(f: &EncoderFlags, file: &FileConfig) -> Result<EncoderConfig> {
    let d = EncoderConfig::default();
    let cfg = EncoderConfig {
        butterworth: ButterworthConfig {
            order: pick(f.butterworth_order, file.butterworth_order, d.butterworth.order),
            cutoff: pick(f.butterworth_cutoff, file.butterworth_cutoff, d.butterworth.cutoff),
            high_boost: pick(f.butterworth_high_boost, file.butterworth_high_boost, d.butterworth.high_boost),
            low_gain: pick(f.butterworth_low_gain, file.butterworth_low_gain, d.butterworth.low_gain),
        },
        ltp_threshold: pick(f.ltp_threshold, file.ltp_threshold, d.ltp_threshold),
        input_size: d.input_size,
    };
    cfg.butterworth.validate()?;
    ensure!(
        cfg.ltp_threshold >= 0.0 && cfg.ltp_threshold.is_finite(),
        "LTP threshold must be a non-negative number"
    );
    Ok(cfg)
}

pub fn palette(a: PaletteArgs) -> Result<()> {
    ensure!(a.dims == PALETTE_DIMS, "--dims must be {PALETTE_DIMS} (one per colour channel), got {}", a.dims);
    #[derive(Serialize)]
    struct Resolved<'a> {
        out: &'a Path,
        dims: usize,
        swatch: Option<&'a Path>,
    }
    log_resolved("palette", &Resolved { out: &a.out, dims: a.dims, swatch: a.swatch.as_deref() })?;
    let d = build_distance_matrix();
    let emb = classical_mds(d.as_slice(), 256, a.dims)?;
    let r = distance_correlation(d.as_slice(), &emb);
    let p = ColorPalette::from_embedding(&emb);
    p.save(&a.out)?;
    if let Some(sw) = &a.swatch {
        oclbcp::image::save_png(&p.swatch(16), sw)?;
    }
    println!("distance correlation {r:.6}");
    println!("sha256 {}", p.sha256());
    Ok(())
}

pub fn encode(a: EncodeArgs, file: &FileConfig) -> Result<()> {
    let cfg = encoder_config(&a.encoder, file)?;
    let (palette_path, pal) = load_palette(a.palette, file)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        input: &'a Path,
        palette: &'a Path,
        out: &'a Path,
        encoder: &'a EncoderConfig,
    }
    log_resolved("encode", &Resolved { input: &a.input, palette: &palette_path, out: &a.out, encoder: &cfg })?;
    let img = load_color(&a.input)?;
    let enc = DescriptorEncoder::new(&pal, cfg);
    let codes = enc.code_map(&img)?;
    if let Some(p) = &a.codes {
        codes.save_png(p)?;
    }
    oclbcp::image::save_png(&oclbcp::palette::colorize(&codes, &pal), &a.out)?;
    Ok(())
}

fn dataset_manifest(path: &Path) -> Result<DatasetManifest> {
    if path.is_dir() {
        Ok(DatasetManifest::scan(path)?)
    } else {
        DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
    }
}

pub fn split(a: SplitArgs, file: &FileConfig) -> Result<()> {
    let root = require(a.dataset, file.dataset.clone(), "dataset")?;
    let manifest = DatasetManifest::scan(&root)?;
    let n = manifest.subjects.len();
    let cfg = SplitConfig {
        train_subject_count: pick(a.train_subjects, file.train_subjects, n * 3 / 5),
        repetitions: pick(a.repetitions, file.repetitions, 3),
        seed: pick(a.seed, file.seed, DEFAULT_SEED),
    };
    #[derive(Serialize)]
    struct Resolved<'a> {
        dataset: &'a Path,
        out: &'a Path,
        split: &'a SplitConfig,
    }
    log_resolved("split", &Resolved { dataset: &root, out: &a.out, split: &cfg })?;
    let m = manifest.make_splits(&cfg)?;
    m.save(&a.out)?;
    let s = m.splits.as_ref().expect("just split");
    println!(
        "{} subjects, {} images: {} train, {} test, {} repetitions",
        n,
        m.image_count(),
        s.train.len(),
        s.test.len(),
        s.repetitions.len()
    );
    Ok(())
}

pub fn train(a: TrainArgs, file: &FileConfig, threads: Option<usize>) -> Result<()> {
    let dataset = require(a.dataset, file.dataset.clone(), "dataset")?;
    let (palette_path, pal) = load_palette(a.palette, file)?;
    let enc_cfg = encoder_config(&a.encoder, file)?;
    let manifest = dataset_manifest(&dataset)?;
    let ids = match &manifest.splits {
        Some(s) => s.train.clone(),
        None => manifest.subject_ids(),
    };
    ensure!(ids.len() >= 2, "need at least 2 training subjects, found {}", ids.len());

    let d = OptimizerConfig::default();
    let opt = OptimizerConfig {
        initial_lr: pick(a.lr, file.lr, d.initial_lr),
        epochs: pick(a.epochs, file.epochs, d.epochs),
        batch_size: pick(a.batch_size, file.batch_size, d.batch_size),
        ..d
    };
    opt.validate()?;
    let scale = match (a.scale, file.scale.as_deref()) {
        (Some(s), _) => s,
        (None, None | Some("desk")) => Scale::Desk,
        (None, Some("paper")) => Scale::Paper,
        (None, Some(other)) => bail!("scale must be desk or paper, got {other:?}"),
    };
    let arch = match (a.arch, file.arch.as_deref()) {
        (Some(ArchArg::Dual), _) | (None, None | Some("dual")) => Arch::DualStream,
        (Some(ArchArg::Rgb), _) | (None, Some("rgb")) => Arch::RgbOnly,
        (Some(ArchArg::Descriptor), _) | (None, Some("descriptor")) => Arch::DescriptorOnly,
        (None, Some(other)) => bail!("arch must be dual, rgb or descriptor, got {other:?}"),
    };
    let model_cfg = match scale {
        Scale::Desk => ModelConfig::desk(ids.len()),
        Scale::Paper => ModelConfig::paper(ids.len()),
    }
    .with_arch(arch);
    let side: Side = a.side.into();
    let seed = pick(a.seed, file.seed, DEFAULT_SEED);

    let manifest_out = ModelManifest {
        side,
        model: model_cfg.clone(),
        encoder: enc_cfg.clone(),
        optimizer: opt.clone(),
        palette_sha256: pal.sha256(),
        seed,
        class_ids: ids.clone(),
    };
    #[derive(Serialize)]
    struct Resolved<'a> {
        dataset: &'a Path,
        palette: &'a Path,
        out: &'a Path,
        threads: Option<usize>,
        workers: usize,
        parameters: usize,
        #[serde(flatten)]
        model: &'a ModelManifest,
    }
    log_resolved(
        "train",
        &Resolved {
            dataset: &dataset,
            palette: &palette_path,
            out: &a.out,
            threads,
            workers: oclbcp::parallel::current_threads(),
            parameters: model_cfg.param_count(),
            model: &manifest_out,
        },
    )?;

    let enc = DescriptorEncoder::new(&pal, enc_cfg);
    let (model, report) = pipeline::train_side::<f32>(&manifest, &ids, side, &enc, model_cfg, &opt, seed)?;
    model.save(&a.out, &manifest_out)?;
    let last = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("trained {side} model on {} subjects, final loss {last:.6}", ids.len());
    Ok(())
}

fn load_model(path: &Path, expected: Side, palette_sha: &str) -> Result<(DualStreamModel<f32>, ModelManifest)> {
    let (m, manifest) =
        DualStreamModel::<f32>::load(path).with_context(|| format!("loading model {}", path.display()))?;
    ensure!(
        manifest.side == expected,
        "{} is a {} model, expected {expected}",
        path.display(),
        manifest.side
    );
    ensure!(
        manifest.palette_sha256 == palette_sha,
        "{} was trained with a different palette",
        path.display()
    );
    Ok((m, manifest))
}

pub fn eval(a: EvalArgs, file: &FileConfig, threads: Option<usize>) -> Result<()> {
    let dataset = require(a.dataset, file.dataset.clone(), "dataset")?;
    let left_path = require(a.model_left, file.model_left.clone(), "model-left")?;
    let right_path = require(a.model_right, file.model_right.clone(), "model-right")?;
    let (palette_path, pal) = load_palette(a.palette, file)?;
    let manifest = dataset_manifest(&dataset)?;
    let sha = pal.sha256();
    let (left, lm) = load_model(&left_path, Side::Left, &sha)?;
    let (right, rm) = load_model(&right_path, Side::Right, &sha)?;
    ensure!(lm.encoder == rm.encoder, "left and right models use different encoder settings");

    let seed = pick(a.seed, file.seed, DEFAULT_SEED);
    let repetitions = pick(a.repetitions, file.repetitions, 3);
    let reps = match (&manifest.splits, a.subjects) {
        (Some(s), SubjectSet::Test) => s.repetitions.clone(),
        (Some(s), SubjectSet::Train) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            manifest.partition_subjects(&s.train, repetitions, &mut rng)?
        }
        (None, _) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            manifest.partition_subjects(&manifest.subject_ids(), repetitions, &mut rng)?
        }
    };
    let mode = if a.dissimilarity { ScoreMode::Dissimilarity } else { ScoreMode::Similarity };
    #[derive(Serialize)]
    struct Resolved<'a> {
        dataset: &'a Path,
        model_left: &'a Path,
        model_right: &'a Path,
        palette: &'a Path,
        out: &'a Path,
        format: &'a str,
        subjects: &'a str,
        repetitions: usize,
        seed: u64,
        mode: ScoreMode,
        threads: Option<usize>,
    }
    log_resolved(
        "eval",
        &Resolved {
            dataset: &dataset,
            model_left: &left_path,
            model_right: &right_path,
            palette: &palette_path,
            out: &a.out,
            format: if a.format == Format::Csv { "csv" } else { "svg" },
            subjects: if a.subjects == SubjectSet::Test { "test" } else { "train" },
            repetitions: reps.len(),
            seed,
            mode,
            threads,
        },
    )?;

    let enc = DescriptorEncoder::new(&pal, lm.encoder.clone());
    let curve = pipeline::evaluate(&manifest, &reps, &left, &right, &enc, mode)?;
    match a.format {
        Format::Csv => {
            let f = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            curve.write_csv(f)?;
        }
        Format::Svg => {
            std::fs::write(&a.out, cmc_svg(&curve, "CMC"))
                .with_context(|| format!("writing {}", a.out.display()))?;
        }
    }
    let k = curve.ranks().min(5);
    println!(
        "rank-1 {:.4} [{:.4}, {:.4}]  rank-{k} {:.4}  over {} repetitions",
        curve.mean[0],
        curve.ci_low[0],
        curve.ci_high[0],
        curve.rate(k),
        curve.repetitions.len()
    );
    Ok(())
}

pub fn synth(a: SynthArgs, file: &FileConfig) -> Result<()> {
    let cfg = SynthConfig::new(
        pick(a.classes, file.classes, 5),
        pick(a.per_class, file.per_class, 8),
        pick(a.seed, file.seed, DEFAULT_SEED),
    );
    #[derive(Serialize)]
    struct Resolved<'a> {
        out: &'a Path,
        classes: usize,
        per_class: usize,
        seed: u64,
    }
    log_resolved("synth", &Resolved { out: &a.out, classes: cfg.classes, per_class: cfg.per_class, seed: cfg.seed })?;
    let m = synth_generate(&a.out, &cfg)?;
    println!("{} subjects, {} images", m.subjects.len(), m.image_count());
    Ok(())
}
