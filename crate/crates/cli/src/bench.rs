//! The reference benchmark: every method trained on one synthetic corpus per
//! seed, scored by strong-test span F1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use seqlab_core::gazetteer::{self, weak_label_quality, WeakLabelQuality};
use seqlab_core::pipeline::{evaluate_model, run_pipeline_with, Components, STAGE_NOISE_AWARE};
use seqlab_core::synth::{self, SynthCorpus, SynthSpec};
use seqlab_core::training::{self, TrainConfig, WslMode};
use seqlab_core::{CrfModel, LabelSeq, Result, WeakExample};

pub const STRONG_ONLY: &str = "strong-only";
pub const WSL: &str = "wsl";
pub const NEEDLE: &str = "needle";
pub const NEEDLE_NO_FT: &str = "needle-no-ft";
pub const NO_NAL: &str = "needle-no-nal";
pub const NO_WLC_NAL: &str = "needle-no-wlc-nal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub weak_quality: WeakLabelQuality,
    pub weak_sentences: usize,
    /// Test span F1 ×100 per method.
    pub f1: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seeds: Vec<SeedResult>,
    pub mean_f1: BTreeMap<String, f64>,
}

/// Weak examples for the degraded gazetteer over the pool, plus the
/// quality of weak labels over the whole pool.
pub fn weak_data(corpus: &SynthCorpus, spec: &SynthSpec) -> Result<(Vec<WeakExample>, WeakLabelQuality)> {
    let degraded = synth::degrade(&corpus.gazetteer, &corpus.tags, spec.coverage, spec.bias, spec.seed)?;
    let matcher = gazetteer::compile(&degraded, &corpus.tags)?;
    let sentences: Vec<_> = corpus.pool.iter().map(|e| e.sentence.clone()).collect();
    let all = matcher.annotate_all(&sentences, true);
    let weak_labels: Vec<LabelSeq> = all.iter().map(|(_, l)| l.clone()).collect();
    let gold: Vec<LabelSeq> = corpus.pool.iter().map(|e| e.gold.clone()).collect();
    let quality = weak_label_quality(&weak_labels, &gold, &corpus.tags)?;
    let weak = matcher
        .annotate_all(&sentences, false)
        .into_iter()
        .map(|(k, l)| WeakExample::new(sentences[k].clone(), l, &corpus.tags))
        .collect::<Result<Vec<_>>>()?;
    Ok((weak, quality))
}

pub fn run_seed(seed: u64, base: &TrainConfig) -> Result<SeedResult> {
    let spec = SynthSpec::reference(seed);
    let c = synth::generate(&spec)?;
    let (weak, weak_quality) = weak_data(&c, &spec)?;
    let cfg = TrainConfig { seed, ..base.clone() };
    let score = |m: &CrfModel| evaluate_model(m, &c.test).map(|x| 100.0 * x.span_f1);
    let mut f1 = BTreeMap::new();

    let strong = training::train_supervised(
        &c.tags,
        &c.train,
        &TrainConfig {
            epochs: cfg.init_epochs + cfg.finetune_epochs,
            ..cfg.clone()
        },
    )?;
    f1.insert(STRONG_ONLY.to_string(), score(&strong.model)?);
    let wsl = training::train_wsl(
        &c.tags,
        &c.train,
        &weak,
        &TrainConfig {
            epochs: cfg.noise_aware_epochs,
            ..cfg.clone()
        },
        WslMode::Plain,
    )?;
    f1.insert(WSL.to_string(), score(&wsl.model)?);

    let variants = [
        (NEEDLE, Components::default()),
        (
            NO_NAL,
            Components {
                completion: true,
                noise_aware: false,
            },
        ),
        (
            NO_WLC_NAL,
            Components {
                completion: false,
                noise_aware: false,
            },
        ),
    ];
    for (name, components) in variants {
        let mut no_ft = None;
        let (model, _) = run_pipeline_with(&c.tags, &c.train, &c.dev, &weak, &cfg, components, |e, m| {
            if name == NEEDLE && e.name == STAGE_NOISE_AWARE {
                no_ft = Some(score(m));
            }
        })?;
        f1.insert(name.to_string(), score(&model)?);
        if let Some(v) = no_ft {
            f1.insert(NEEDLE_NO_FT.to_string(), v?);
        }
    }
    Ok(SeedResult {
        seed,
        weak_quality,
        weak_sentences: weak.len(),
        f1,
    })
}

pub fn run(seeds: &[u64], base: &TrainConfig) -> Result<BenchReport> {
    let seeds = seeds.iter().map(|&s| run_seed(s, base)).collect::<Result<Vec<_>>>()?;
    let mut mean_f1 = BTreeMap::new();
    for r in &seeds {
        for (k, v) in &r.f1 {
            *mean_f1.entry(k.clone()).or_insert(0.0) += v / seeds.len() as f64;
        }
    }
    Ok(BenchReport { seeds, mean_f1 })
}
