//! Span extraction and evaluation metrics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tags::{LabelKind, LabelSeq, TagSet};
use crate::{Error, Result};

/// An entity span `[start, end]` (inclusive) of the entity type at index `ty`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub ty: usize,
}

/// Spans of a label sequence, in order.
///
/// `B-e` opens a span, `I-e` extends an open span of type `e`, and `O` closes
/// it. An `I-e` with no open span of type `e` opens a new one, so BIO-invalid
/// sequences still decode.
pub fn extract_spans(labels: &[usize], tags: &TagSet) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, &l) in labels.iter().enumerate() {
        match tags.decompose(l) {
            (LabelKind::I, Some(t)) if open.is_some_and(|s| s.ty == t) => {
                if let Some(s) = open.as_mut() {
                    s.end = i;
                }
            }
            (LabelKind::B | LabelKind::I, Some(t)) => {
                spans.extend(open.take());
                open = Some(Span {
                    start: i,
                    end: i,
                    ty: t,
                });
            }
            _ => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// Renders non-overlapping spans as a BIO label sequence of length `len`.
pub fn spans_to_labels(spans: &[Span], len: usize, tags: &TagSet) -> Result<LabelSeq> {
    let mut labels = vec![0; len];
    let mut taken = vec![false; len];
    for s in spans {
        if s.start > s.end || s.end >= len || s.ty >= tags.entity_types().len() {
            return Err(Error::Dimension(format!("span {s:?} does not fit {len} tokens")));
        }
        for i in s.start..=s.end {
            if taken[i] {
                return Err(Error::Dimension(format!("span {s:?} overlaps another span")));
            }
            taken[i] = true;
            let kind = if i == s.start { LabelKind::B } else { LabelKind::I };
            labels[i] = tags.label_of_index(kind, s.ty);
        }
    }
    Ok(LabelSeq(labels))
}

/// Span counts and scores of one entity type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    pub gold: usize,
    pub pred: usize,
    pub correct: usize,
}

/// Degenerate-case markers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    /// No spans were predicted; precision is reported as 0.
    pub zero_predicted: bool,
    /// The gold data has no spans; recall is reported as 0.
    pub zero_gold: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub span_p: f64,
    pub span_r: f64,
    pub span_f1: f64,
    pub token_acc: f64,
    pub sentence_acc: f64,
    pub per_type: BTreeMap<String, TypeMetrics>,
    pub flags: MetricFlags,
}

fn prf(correct: usize, pred: usize, gold: usize) -> (f64, f64, f64) {
    let p = if pred == 0 { 0.0 } else { correct as f64 / pred as f64 };
    let r = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

fn check_aligned(pred: &[LabelSeq], gold: &[LabelSeq]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::Misaligned(format!(
            "{} predicted sentences, {} gold",
            pred.len(),
            gold.len()
        )));
    }
    for (k, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::Misaligned(format!(
                "sentence {k}: {} predicted labels, {} gold",
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Micro-averaged exact-match span precision, recall and F1, plus token and
/// sentence accuracy.
pub fn evaluate(pred: &[LabelSeq], gold: &[LabelSeq], tags: &TagSet) -> Result<Metrics> {
    check_aligned(pred, gold)?;
    let nt = tags.entity_types().len();
    let (mut n_pred, mut n_gold, mut n_correct) = (vec![0usize; nt], vec![0usize; nt], vec![0usize; nt]);
    for (p, g) in pred.iter().zip(gold) {
        let ps = extract_spans(p, tags);
        let gs = extract_spans(g, tags);
        for s in &ps {
            n_pred[s.ty] += 1;
        }
        for s in &gs {
            n_gold[s.ty] += 1;
        }
        // Both lists are sorted by start and non-overlapping.
        let (mut i, mut j) = (0, 0);
        while i < ps.len() && j < gs.len() {
            match ps[i].start.cmp(&gs[j].start) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    if ps[i] == gs[j] {
                        n_correct[ps[i].ty] += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let sum = |v: &[usize]| v.iter().sum::<usize>();
    let (span_p, span_r, span_f1) = prf(sum(&n_correct), sum(&n_pred), sum(&n_gold));
    let per_type = tags
        .entity_types()
        .iter()
        .enumerate()
        .map(|(t, name)| {
            let (p, r, f1) = prf(n_correct[t], n_pred[t], n_gold[t]);
            let m = TypeMetrics {
                p,
                r,
                f1,
                gold: n_gold[t],
                pred: n_pred[t],
                correct: n_correct[t],
            };
            (name.clone(), m)
        })
        .collect();
    Ok(Metrics {
        span_p,
        span_r,
        span_f1,
        token_acc: token_accuracy(pred, gold)?,
        sentence_acc: sentence_accuracy(pred, gold)?,
        per_type,
        flags: MetricFlags {
            zero_predicted: sum(&n_pred) == 0,
            zero_gold: sum(&n_gold) == 0,
        },
    })
}

/// Fraction of tokens whose labels agree; 0 for an empty dataset.
pub fn token_accuracy(pred: &[LabelSeq], gold: &[LabelSeq]) -> Result<f64> {
    check_aligned(pred, gold)?;
    let total: usize = gold.iter().map(LabelSeq::len).sum();
    let same: usize = pred
        .iter()
        .zip(gold)
        .map(|(p, g)| p.iter().zip(g.iter()).filter(|(a, b)| a == b).count())
        .sum();
    Ok(if total == 0 { 0.0 } else { same as f64 / total as f64 })
}

/// Fraction of sentences whose whole label sequence agrees.
pub fn sentence_accuracy(pred: &[LabelSeq], gold: &[LabelSeq]) -> Result<f64> {
    check_aligned(pred, gold)?;
    let same = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(if gold.is_empty() {
        0.0
    } else {
        same as f64 / gold.len() as f64
    })
}

/// Span counts per entity type for one label source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub source: String,
    pub spans: BTreeMap<String, usize>,
    pub total_spans: usize,
    pub o_tokens: usize,
}

/// Side-by-side entity counts for several label sources over the same text.
pub fn label_distribution(sources: &[(&str, &[LabelSeq])], tags: &TagSet) -> Vec<DistributionRow> {
    sources
        .iter()
        .map(|(name, seqs)| {
            let mut counts = vec![0usize; tags.entity_types().len()];
            let mut o_tokens = 0;
            for seq in seqs.iter() {
                for s in extract_spans(seq, tags) {
                    counts[s.ty] += 1;
                }
                o_tokens += seq.iter().filter(|&&l| l == 0).count();
            }
            DistributionRow {
                source: String::from(*name),
                total_spans: counts.iter().sum(),
                spans: tags.entity_types().iter().cloned().zip(counts).collect(),
                o_tokens,
            }
        })
        .collect()
}
