//! Weak label completion and BIO-mismatch diagnostics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tags::{LabelKind, LabelSeq, TagSet, WeakExample};
use crate::{CrfModel, Error, Result};

/// Keeps every non-`O` weak label and fills `O` positions from the
/// prediction.
pub fn complete(weak: &[usize], predicted: &[usize]) -> Result<LabelSeq> {
    if weak.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: weak.len(),
            got: predicted.len(),
        });
    }
    Ok(LabelSeq(
        weak.iter()
            .zip(predicted)
            .map(|(&w, &p)| if w == 0 { p } else { w })
            .collect(),
    ))
}

/// Share of tokens carrying a non-`O` label; 0 for an empty sequence.
pub fn matched_fraction(weak: &[usize]) -> f64 {
    if weak.is_empty() {
        return 0.0;
    }
    weak.iter().filter(|&&l| l != 0).count() as f64 / weak.len() as f64
}

/// Positions of `I-e` labels not preceded by `B-e` or `I-e`.
pub fn find_bio_mismatches(labels: &[usize], tags: &TagSet) -> Vec<usize> {
    (0..labels.len())
        .filter(|&i| {
            tags.decompose(labels[i]).0 == LabelKind::I
                && !tags.transition_allowed(i.checked_sub(1).map(|p| labels[p]), labels[i])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub sentences: usize,
    pub mismatched_sentences: usize,
    pub mismatch_rate: f64,
    pub dropped: usize,
    pub weak_matched_fraction: f64,
    pub corrected_matched_fraction: f64,
}

/// Decodes every weak sentence with `model`, fills in `predicted` and
/// `corrected`, and optionally drops sentences whose corrected labels are
/// BIO-invalid. Order is preserved.
pub fn complete_dataset(
    weak: &[WeakExample],
    model: &CrfModel,
    drop_mismatches: bool,
) -> Result<(Vec<WeakExample>, CompletionReport)> {
    let mut out = Vec::with_capacity(weak.len());
    let mut report = CompletionReport {
        sentences: weak.len(),
        ..Default::default()
    };
    let (mut weak_tokens, mut corrected_tokens, mut total) = (0usize, 0usize, 0usize);
    for ex in weak {
        let predicted = model.decode(&ex.sentence);
        let corrected = complete(&ex.weak, &predicted)?;
        total += ex.weak.len();
        weak_tokens += ex.weak.iter().filter(|&&l| l != 0).count();
        corrected_tokens += corrected.iter().filter(|&&l| l != 0).count();
        let valid = model.tags.is_bio_valid(&corrected);
        if !valid {
            report.mismatched_sentences += 1;
            if drop_mismatches {
                report.dropped += 1;
                continue;
            }
        }
        out.push(WeakExample {
            sentence: ex.sentence.clone(),
            weak: ex.weak.clone(),
            predicted: Some(predicted),
            corrected: Some(corrected),
            confidence: None,
        });
    }
    if report.sentences > 0 {
        report.mismatch_rate = report.mismatched_sentences as f64 / report.sentences as f64;
    }
    if total > 0 {
        report.weak_matched_fraction = weak_tokens as f64 / total as f64;
        report.corrected_matched_fraction = corrected_tokens as f64 / total as f64;
    }
    Ok((out, report))
}
