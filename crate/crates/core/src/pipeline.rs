//! Staged training: initial supervised model, weak label completion,
//! calibration, noise-aware training, and fine-tuning, optionally repeated
//! for a second round.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calibration::{self, CalibrationTable};
use crate::completion::{self, CompletionReport};
use crate::eval::{self, Metrics};
use crate::tags::{LabelSeq, Sentence, StrongExample, TagSet, WeakExample};
use crate::training::{self, CalibrationSplit, TrainConfig};
use crate::{CrfModel, Error, Result};

pub const STAGE_INIT: &str = "init-train";
pub const STAGE_COMPLETE: &str = "complete";
pub const STAGE_CALIBRATE: &str = "calibrate";
pub const STAGE_NOISE_AWARE: &str = "noise-aware";
pub const STAGE_FINETUNE: &str = "finetune";

/// Component switches for ablations. The full method has both on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    /// Replace `O` weak labels with model predictions.
    pub completion: bool,
    /// Weight weak terms by calibrated confidence; off means plain `nll`.
    pub noise_aware: bool,
}

impl Default for Components {
    fn default() -> Self {
        Self {
            completion: true,
            noise_aware: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub table: CalibrationTable,
    pub mean_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub name: String,
    pub round: usize,
    pub dev: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completion: Option<CompletionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub rounds: usize,
    pub components: Components,
    /// The weak pool was empty, so every stage trained on strong data only.
    pub degenerate: bool,
    pub stages: Vec<StageEntry>,
}

/// Decodes every sentence.
pub fn predict_all<'a>(model: &CrfModel, sentences: impl IntoIterator<Item = &'a Sentence>) -> Vec<LabelSeq> {
    sentences.into_iter().map(|s| model.decode(s)).collect()
}

/// Span, token and sentence metrics of `model` on gold data.
pub fn evaluate_model(model: &CrfModel, gold: &[StrongExample]) -> Result<Metrics> {
    let pred = predict_all(model, gold.iter().map(|e| &e.sentence));
    let gold: Vec<LabelSeq> = gold.iter().map(|e| e.gold.clone()).collect();
    eval::evaluate(&pred, &gold, &model.tags)
}

/// Runs the staged pipeline. `observe` sees every stage entry together
/// with the model after that stage.
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline_with(
    tags: &TagSet,
    strong_train: &[StrongExample],
    strong_dev: &[StrongExample],
    weak_raw: &[WeakExample],
    cfg: &TrainConfig,
    components: Components,
    mut observe: impl FnMut(&StageEntry, &CrfModel),
) -> Result<(CrfModel, StageReport)> {
    cfg.validate()?;
    if strong_train.is_empty() {
        return Err(Error::EmptyDataset("strong training set"));
    }
    if strong_dev.is_empty() {
        return Err(Error::EmptyDataset("strong dev set"));
    }
    let mut report = StageReport {
        rounds: cfg.stage2_rounds,
        components,
        degenerate: weak_raw.is_empty(),
        stages: Vec::new(),
    };
    let mut push = |report: &mut StageReport, entry: StageEntry, model: &CrfModel| {
        observe(&entry, model);
        report.stages.push(entry);
    };
    let entry = |name: &str, round: usize, model: &CrfModel| -> Result<StageEntry> {
        Ok(StageEntry {
            name: name.to_string(),
            round,
            dev: evaluate_model(model, strong_dev)?,
            loss_trace: None,
            completion: None,
            calibration: None,
        })
    };

    let init_cfg = TrainConfig {
        epochs: cfg.init_epochs,
        ..cfg.for_stage("stage/init")
    };
    let init = training::train_supervised(tags, strong_train, &init_cfg)?;
    let mut model = init.model;
    let mut e = entry(STAGE_INIT, 1, &model)?;
    e.loss_trace = Some(init.loss_trace);
    push(&mut report, e, &model);

    for round in 1..=cfg.stage2_rounds {
        let tag = |stage: &str| alloc::format!("stage/{stage}/round{round}");

        let (mut completed, completion) = if components.completion {
            completion::complete_dataset(weak_raw, &model, cfg.drop_mismatches)?
        } else {
            let passthrough = weak_raw
                .iter()
                .map(|ex| WeakExample {
                    corrected: Some(ex.weak.clone()),
                    ..ex.clone()
                })
                .collect();
            (passthrough, CompletionReport::default())
        };
        let mut e = entry(STAGE_COMPLETE, round, &model)?;
        e.completion = Some(completion);
        push(&mut report, e, &model);

        let mut e = entry(STAGE_CALIBRATE, round, &model)?;
        if components.noise_aware {
            let split = match cfg.calibration_split {
                CalibrationSplit::Dev => strong_dev,
                CalibrationSplit::Train => strong_train,
            };
            let table = calibration::fit(&model, split, cfg.num_bins)?;
            calibration::attach_confidences(&table, &model, &mut completed);
            let mean_confidence = if completed.is_empty() {
                0.0
            } else {
                completed.iter().filter_map(|x| x.confidence).sum::<f64>() / completed.len() as f64
            };
            e.calibration = Some(CalibrationSummary { table, mean_confidence });
        } else {
            for ex in &mut completed {
                ex.confidence = Some(1.0);
            }
        }
        push(&mut report, e, &model);

        let na = training::train_noise_aware(
            model,
            strong_train,
            &completed,
            &cfg.for_stage(&tag(STAGE_NOISE_AWARE)),
            cfg.noise_aware_epochs,
        )?;
        model = na.model;
        let mut e = entry(STAGE_NOISE_AWARE, round, &model)?;
        e.loss_trace = Some(na.loss_trace);
        push(&mut report, e, &model);

        let ft = training::continue_supervised(
            model,
            strong_train,
            &cfg.for_stage(&tag(STAGE_FINETUNE)),
            cfg.finetune_epochs,
        )?;
        model = ft.model;
        let mut e = entry(STAGE_FINETUNE, round, &model)?;
        e.loss_trace = Some(ft.loss_trace);
        push(&mut report, e, &model);
    }
    Ok((model, report))
}

pub fn run_pipeline(
    tags: &TagSet,
    strong_train: &[StrongExample],
    strong_dev: &[StrongExample],
    weak_raw: &[WeakExample],
    cfg: &TrainConfig,
) -> Result<(CrfModel, StageReport)> {
    run_pipeline_with(
        tags,
        strong_train,
        strong_dev,
        weak_raw,
        cfg,
        Components::default(),
        |_, _| {},
    )
}
