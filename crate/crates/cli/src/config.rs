//! Flat `key = value` configuration files. `#` starts a comment line; keys
//! may repeat only where noted.

use std::path::Path;

use seqlab_core::synth::{EntityVocab, SynthSpec};
use seqlab_core::training::{CalibrationSplit, Optimizer, TrainConfig};
use sha2::{Digest, Sha256};

use crate::error::{FormatError, IoError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, FormatError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| FormatError::at(k + 1, format!("expected `key = value`, got {l:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(FormatError::at(k + 1, "empty key"));
        }
        out.push(Entry {
            line: k + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn value<T: std::str::FromStr>(e: &Entry) -> Result<T, FormatError> {
    e.value
        .parse()
        .map_err(|_| FormatError::at(e.line, format!("invalid value {:?} for `{}`", e.value, e.key)))
}

fn flag(e: &Entry) -> Result<bool, FormatError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(FormatError::at(
            e.line,
            format!("invalid boolean {:?} for `{}`", e.value, e.key),
        )),
    }
}

fn single(entries: &[Entry], repeatable: &[&str]) -> Result<(), FormatError> {
    let mut seen = std::collections::BTreeSet::new();
    for e in entries {
        if !repeatable.contains(&e.key.as_str()) && !seen.insert(e.key.as_str()) {
            return Err(FormatError::at(e.line, format!("duplicate key `{}`", e.key)));
        }
    }
    Ok(())
}

/// Applies entries on top of `base`. Unknown keys are errors.
pub fn train_config(entries: &[Entry], base: TrainConfig) -> Result<TrainConfig, FormatError> {
    single(entries, &[])?;
    let mut c = base;
    let (mut b1, mut b2, mut eps) = match c.optimizer {
        Optimizer::Adam { beta1, beta2, eps } => (beta1, beta2, eps),
        Optimizer::Sgd => match Optimizer::adam() {
            Optimizer::Adam { beta1, beta2, eps } => (beta1, beta2, eps),
            Optimizer::Sgd => unreachable!(),
        },
    };
    let mut adam = matches!(c.optimizer, Optimizer::Adam { .. });
    for e in entries {
        match e.key.as_str() {
            "learning_rate" => c.learning_rate = value(e)?,
            "epochs" => c.epochs = value(e)?,
            "batch_size" => c.batch_size = value(e)?,
            "seed" => c.seed = value(e)?,
            "wsl_weight" | "gamma" => c.wsl_weight = Some(value(e)?),
            "optimizer" => {
                adam = match e.value.as_str() {
                    "sgd" => false,
                    "adam" => true,
                    _ => return Err(FormatError::at(e.line, format!("unknown optimizer {:?}", e.value))),
                }
            }
            "adam_beta1" => b1 = value(e)?,
            "adam_beta2" => b2 = value(e)?,
            "adam_eps" => eps = value(e)?,
            "stage2_rounds" | "rounds" => c.stage2_rounds = value(e)?,
            "drop_mismatches" => c.drop_mismatches = flag(e)?,
            "num_bins" | "bins" => c.num_bins = value(e)?,
            "hash_bits" => c.hash_bits = value(e)?,
            "init_epochs" => c.init_epochs = value(e)?,
            "noise_aware_epochs" => c.noise_aware_epochs = value(e)?,
            "finetune_epochs" => c.finetune_epochs = value(e)?,
            "calibration_split" => {
                c.calibration_split = match e.value.as_str() {
                    "dev" => CalibrationSplit::Dev,
                    "train" => CalibrationSplit::Train,
                    _ => return Err(FormatError::at(e.line, format!("unknown split {:?}", e.value))),
                }
            }
            _ => return Err(FormatError::at(e.line, format!("unknown key `{}`", e.key))),
        }
    }
    c.optimizer = if adam {
        Optimizer::Adam {
            beta1: b1,
            beta2: b2,
            eps,
        }
    } else {
        Optimizer::Sgd
    };
    Ok(c)
}

/// `type = name:heads:compounds` and `template = ...` repeat; the first
/// occurrence of either replaces the reference list.
pub fn synth_spec(entries: &[Entry], base: SynthSpec) -> Result<SynthSpec, FormatError> {
    single(entries, &["type", "template"])?;
    let mut s = base;
    let (mut types, mut templates) = (Vec::new(), Vec::new());
    for e in entries {
        match e.key.as_str() {
            "type" => {
                let parts: Vec<&str> = e.value.split(':').collect();
                let bad = || FormatError::at(e.line, format!("expected `name:heads:compounds`, got {:?}", e.value));
                let [name, heads, compounds] = parts[..] else {
                    return Err(bad());
                };
                types.push(EntityVocab {
                    name: name.to_string(),
                    heads: heads.parse().map_err(|_| bad())?,
                    compounds: compounds.parse().map_err(|_| bad())?,
                });
            }
            "template" => templates.push(e.value.clone()),
            "strong_train" => s.strong_train = value(e)?,
            "strong_dev" => s.strong_dev = value(e)?,
            "strong_test" => s.strong_test = value(e)?,
            "weak_pool" => s.weak_pool = value(e)?,
            "seed" => s.seed = value(e)?,
            "coverage" => s.coverage = value(e)?,
            "bias" => s.bias = value(e)?,
            _ => return Err(FormatError::at(e.line, format!("unknown key `{}`", e.key))),
        }
    }
    if !types.is_empty() {
        s.entity_types = types;
    }
    if !templates.is_empty() {
        s.templates = templates;
    }
    Ok(s)
}

pub fn read(path: &Path) -> Result<Vec<Entry>, IoError> {
    let text = crate::fsio::read_text(path)?;
    parse(&text).map_err(|e| IoError::format(path, e))
}

/// Hex SHA-256 of the configuration's canonical JSON.
pub fn config_hash<T: serde::Serialize>(cfg: &T) -> String {
    let json = serde_json::to_vec(cfg).expect("configurations serialize to JSON");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}
