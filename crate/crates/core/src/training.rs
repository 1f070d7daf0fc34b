//! Training objectives, the optimizer loop and the single-stage trainers.
//!
//! Every trainer reduces to [`optimize`]: a list of per-sentence loss terms
//! is shuffled each epoch, cut into mini-batches, and each batch's mean
//! gradient is applied with SGD or Adam. Gradients are summed in batch order
//! and encoder rows are reduced in feature-id order, so a seed fixes the
//! result bit for bit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::calibration::DEFAULT_BINS;
use crate::crf::{self, CrfGrad, Mask};
use crate::encoder::{SentenceFeatures, SparseGrad, DEFAULT_HASH_BITS};
use crate::rng;
use crate::tags::{LabelSeq, Sentence, StrongExample, TagSet, WeakExample};
use crate::{CrfModel, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Which labeled split fits the calibration table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationSplit {
    Dev,
    Train,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Epochs of standalone trainers (`train`, baselines).
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Weak-sample weight γ of weighted WSL.
    pub wsl_weight: Option<f64>,
    pub optimizer: Optimizer,
    pub stage2_rounds: usize,
    pub drop_mismatches: bool,
    pub num_bins: usize,
    pub hash_bits: u32,
    pub init_epochs: usize,
    pub noise_aware_epochs: usize,
    pub finetune_epochs: usize,
    pub calibration_split: CalibrationSplit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5.0,
            epochs: 5,
            batch_size: 32,
            seed: 0,
            wsl_weight: None,
            optimizer: Optimizer::Sgd,
            stage2_rounds: 1,
            drop_mismatches: false,
            num_bins: DEFAULT_BINS,
            hash_bits: DEFAULT_HASH_BITS,
            init_epochs: 5,
            noise_aware_epochs: 3,
            finetune_epochs: 10,
            calibration_split: CalibrationSplit::Dev,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be a finite non-negative number");
        }
        if self.epochs == 0 || self.init_epochs == 0 || self.noise_aware_epochs == 0 || self.finetune_epochs == 0 {
            return fail("epoch counts must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if let Some(g) = self.wsl_weight {
            if !(g >= 0.0 && g.is_finite()) {
                return fail("wsl_weight must be a finite non-negative number");
            }
        }
        if !(1..=2).contains(&self.stage2_rounds) {
            return fail("stage2_rounds must be 1 or 2");
        }
        if self.num_bins == 0 {
            return fail("num_bins must be positive");
        }
        if !(1..=26).contains(&self.hash_bits) {
            return fail("hash_bits must lie in 1..=26");
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 {
                return fail("adam moments must lie in [0, 1) and eps must be positive");
            }
        }
        Ok(())
    }

    /// Copy with a seed derived for `stage`.
    pub fn for_stage(&self, stage: &str) -> Self {
        Self {
            seed: rng::derive(self.seed, stage),
            ..self.clone()
        }
    }
}

/// What a single sentence contributes to the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `weight · nll(labels)`.
    Nll { labels: LabelSeq, weight: f64 },
    /// `p̂ · nll(labels) + (1 − p̂) · ℓ⁻(labels)`.
    NoiseAware { labels: LabelSeq, confidence: f64 },
    /// `weight · (log Z − log Z_allowed)`.
    Partial { allowed: Vec<bool>, weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub features: SentenceFeatures,
    pub target: Target,
}

impl Term {
    pub fn nll(model: &CrfModel, sentence: &Sentence, labels: LabelSeq, weight: f64) -> Self {
        Self {
            features: model.featurize(sentence),
            target: Target::Nll { labels, weight },
        }
    }
}

/// Loss of one term and its CRF gradient (mask off).
pub fn term_loss_grad(model: &CrfModel, term: &Term) -> Result<(f64, CrfGrad)> {
    let em = model.encoder.emissions_from(&term.features);
    let tr = &model.transitions;
    match &term.target {
        Target::Nll { labels, weight } => {
            let (loss, mut g) = crf::grad_nll(&em, tr, labels, Mask::Off)?;
            g.scale(*weight);
            Ok((weight * loss, g))
        }
        Target::NoiseAware { labels, confidence } => {
            let (nll, unl, gn, gu) = crf::grad_nll_and_unlikelihood(&em, tr, labels, Mask::Off)?;
            let p = *confidence;
            let mut g = gn;
            g.scale(p);
            g.add_scaled(&gu, 1.0 - p);
            Ok((p * nll + (1.0 - p) * unl, g))
        }
        Target::Partial { allowed, weight } => {
            let (loss, mut g) = crf::grad_constrained_nll(&em, tr, Mask::Off, allowed)?;
            g.scale(*weight);
            Ok((weight * loss, g))
        }
    }
}

/// Noise-aware loss of a completed weak example.
pub fn noise_aware_loss(model: &CrfModel, ex: &WeakExample) -> Result<f64> {
    let (labels, p) = match (&ex.corrected, ex.confidence) {
        (Some(c), Some(p)) => (c, p),
        _ => return Err(Error::IncompleteWeakExample(0)),
    };
    let em = model.emissions(&ex.sentence);
    let nll = crf::nll(&em, &model.transitions, labels, Mask::Off)?;
    let unl = crf::log_unlikelihood(&em, &model.transitions, labels, Mask::Off)?;
    Ok(p * nll + (1.0 - p) * unl)
}

struct OptimizerState {
    kind: Optimizer,
    step: i32,
    enc_m: Vec<f64>,
    enc_v: Vec<f64>,
    crf_m: Vec<f64>,
    crf_v: Vec<f64>,
}

impl OptimizerState {
    fn new(kind: Optimizer, model: &CrfModel) -> Self {
        let l = model.num_labels();
        let (enc, crf) = match kind {
            Optimizer::Sgd => (0, 0),
            Optimizer::Adam { .. } => (model.encoder.weights().len(), l * l + 2 * l),
        };
        Self {
            kind,
            step: 0,
            enc_m: vec![0.0; enc],
            enc_v: vec![0.0; enc],
            crf_m: vec![0.0; crf],
            crf_v: vec![0.0; crf],
        }
    }

    /// Applies one update. Encoder rows without gradient are left untouched
    /// (moments included), which keeps a step proportional to the active
    /// features.
    fn apply(&mut self, model: &mut CrfModel, lr: f64, enc: &SparseGrad, crf: &CrfGrad) {
        let l = model.num_labels();
        self.step += 1;
        match self.kind {
            Optimizer::Sgd => {
                let w = model.encoder.weights_mut();
                for (&f, g) in &enc.rows {
                    for (wi, gi) in w[f as usize * l..(f as usize + 1) * l].iter_mut().zip(g) {
                        *wi -= lr * gi;
                    }
                }
                let (trans, start, stop) = model.transitions.scores_mut();
                let params = trans.iter_mut().chain(start.iter_mut()).chain(stop.iter_mut());
                let grads = crf.trans.iter().chain(&crf.start).chain(&crf.stop);
                for (p, g) in params.zip(grads) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let bc1 = 1.0 - libm::pow(beta1, f64::from(self.step));
                let bc2 = 1.0 - libm::pow(beta2, f64::from(self.step));
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let mh = *m / bc1;
                    let vh = *v / bc2;
                    *p -= lr * mh / (libm::sqrt(vh) + eps);
                };
                let w = model.encoder.weights_mut();
                for (&f, g) in &enc.rows {
                    let r = f as usize * l..(f as usize + 1) * l;
                    for (((p, m), v), &gi) in w[r.clone()]
                        .iter_mut()
                        .zip(&mut self.enc_m[r.clone()])
                        .zip(&mut self.enc_v[r])
                        .zip(g)
                    {
                        update(p, m, v, gi);
                    }
                }
                let (trans, start, stop) = model.transitions.scores_mut();
                let params = trans.iter_mut().chain(start.iter_mut()).chain(stop.iter_mut());
                let grads = crf.trans.iter().chain(&crf.start).chain(&crf.stop);
                for (((p, m), v), &g) in params.zip(&mut self.crf_m).zip(&mut self.crf_v).zip(grads) {
                    update(p, m, v, g);
                }
            }
        }
    }
}

/// Mini-batch optimization of the mean loss over `terms`. Returns the mean
/// loss of each epoch, measured before each batch's update.
pub fn optimize(model: &mut CrfModel, terms: &[Term], cfg: &TrainConfig, epochs: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    if terms.is_empty() {
        return Err(Error::EmptyDataset("training set"));
    }
    let l = model.num_labels();
    let mut state = OptimizerState::new(cfg.optimizer, model);
    let mut shuffle = rng::stream(rng::derive(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..terms.len()).collect();
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut enc = SparseGrad::default();
            let mut crf_grad = CrfGrad::zeros(0, l);
            let mut batch_loss = 0.0;
            for &k in batch {
                let term = &terms[k];
                let (loss, g) = term_loss_grad(model, term)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, batch: b });
                }
                batch_loss += loss;
                enc.accumulate(&term.features, &g.em, l, 1.0);
                for (a, v) in crf_grad
                    .trans
                    .iter_mut()
                    .chain(&mut crf_grad.start)
                    .chain(&mut crf_grad.stop)
                    .zip(g.trans.iter().chain(&g.start).chain(&g.stop))
                {
                    *a += v;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            enc.scale(inv);
            crf_grad.scale(inv);
            state.apply(model, cfg.learning_rate, &enc, &crf_grad);
            epoch_loss += batch_loss;
        }
        trace.push(epoch_loss / terms.len() as f64);
    }
    Ok(trace)
}

/// A trained model with the per-epoch mean losses that produced it.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CrfModel,
    pub loss_trace: Vec<f64>,
}

fn strong_terms(model: &CrfModel, data: &[StrongExample]) -> Vec<Term> {
    data.iter()
        .map(|ex| Term::nll(model, &ex.sentence, ex.gold.clone(), 1.0))
        .collect()
}

fn fresh_model(tags: &TagSet, cfg: &TrainConfig) -> Result<CrfModel> {
    cfg.validate()?;
    CrfModel::new(tags.clone(), cfg.hash_bits, rng::derive(cfg.seed, "init"))
}

/// Mean negative log-likelihood on strong data from a fresh model.
pub fn train_supervised(tags: &TagSet, data: &[StrongExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("strong training set"));
    }
    let model = fresh_model(tags, cfg)?;
    continue_supervised(model, data, cfg, cfg.epochs)
}

/// Mean negative log-likelihood on strong data, starting from `model`.
pub fn continue_supervised(
    mut model: CrfModel,
    data: &[StrongExample],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("strong training set"));
    }
    let terms = strong_terms(&model, data);
    let loss_trace = optimize(&mut model, &terms, cfg, epochs)?;
    Ok(TrainOutcome { model, loss_trace })
}

/// Strong `nll` terms and weak noise-aware terms over one shuffled pool,
/// starting from `model`.
pub fn train_noise_aware(
    mut model: CrfModel,
    strong: &[StrongExample],
    weak: &[WeakExample],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainOutcome> {
    let mut terms = strong_terms(&model, strong);
    for (k, ex) in weak.iter().enumerate() {
        let (labels, confidence) = match (&ex.corrected, ex.confidence) {
            (Some(c), Some(p)) => (c.clone(), p),
            _ => return Err(Error::IncompleteWeakExample(k)),
        };
        labels.validate(ex.sentence.len(), &model.tags)?;
        terms.push(Term {
            features: model.featurize(&ex.sentence),
            target: Target::NoiseAware { labels, confidence },
        });
    }
    let loss_trace = optimize(&mut model, &terms, cfg, epochs)?;
    Ok(TrainOutcome { model, loss_trace })
}

/// How raw weak labels enter a weakly supervised baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WslMode {
    /// Weak labels as if they were gold.
    Plain,
    /// Weak terms scaled by `cfg.wsl_weight`.
    Weighted,
    /// `O` weak labels left unconstrained; entity labels pinned.
    Partial,
}

/// Builds the WSL objective's terms. Zero-weight terms are left out.
pub fn wsl_terms(
    model: &CrfModel,
    strong: &[StrongExample],
    weak: &[WeakExample],
    cfg: &TrainConfig,
    mode: WslMode,
) -> Result<Vec<Term>> {
    let gamma = match mode {
        WslMode::Weighted => cfg
            .wsl_weight
            .ok_or_else(|| Error::Config("weighted WSL needs wsl_weight".into()))?,
        _ => 1.0,
    };
    let mut terms = strong_terms(model, strong);
    if gamma == 0.0 {
        return Ok(terms);
    }
    let l = model.num_labels();
    for ex in weak {
        ex.weak.validate(ex.sentence.len(), &model.tags)?;
        let target = match mode {
            WslMode::Plain | WslMode::Weighted => Target::Nll {
                labels: ex.weak.clone(),
                weight: gamma,
            },
            WslMode::Partial => Target::Partial {
                allowed: crf::pin_entities(&ex.weak, l),
                weight: 1.0,
            },
        };
        terms.push(Term {
            features: model.featurize(&ex.sentence),
            target,
        });
    }
    Ok(terms)
}

/// Weakly supervised baseline on strong plus raw weak data, from a fresh
/// model.
pub fn train_wsl(
    tags: &TagSet,
    strong: &[StrongExample],
    weak: &[WeakExample],
    cfg: &TrainConfig,
    mode: WslMode,
) -> Result<TrainOutcome> {
    let mut model = fresh_model(tags, cfg)?;
    let terms = wsl_terms(&model, strong, weak, cfg, mode)?;
    let loss_trace = optimize(&mut model, &terms, cfg, cfg.epochs)?;
    Ok(TrainOutcome { model, loss_trace })
}

/// Self-training: a supervised model pseudo-labels `unlabeled`, then
/// training continues on strong plus pseudo-labeled data.
pub fn self_train(
    tags: &TagSet,
    strong: &[StrongExample],
    unlabeled: &[Sentence],
    cfg: &TrainConfig,
) -> Result<(TrainOutcome, Vec<LabelSeq>)> {
    let first = train_supervised(tags, strong, cfg)?;
    if unlabeled.is_empty() {
        return Ok((first, Vec::new()));
    }
    let mut model = first.model;
    let pseudo: Vec<LabelSeq> = unlabeled.iter().map(|s| model.decode(s)).collect();
    let mut terms = strong_terms(&model, strong);
    for (s, labels) in unlabeled.iter().zip(&pseudo) {
        terms.push(Term::nll(&model, s, labels.clone(), 1.0));
    }
    let mut trace = first.loss_trace;
    trace.extend(optimize(&mut model, &terms, &cfg.for_stage("sst/pseudo"), cfg.epochs)?);
    Ok((
        TrainOutcome {
            model,
            loss_trace: trace,
        },
        pseudo,
    ))
}
