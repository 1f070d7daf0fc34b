//! Confidence of completed weak labels.
//!
//! The decoded path's confidence comes from histogram binning of its
//! per-token log-posterior on a labeled validation set. A completed
//! sentence mixes that with full trust in the matched tokens, weighted by
//! the matched-token fraction, and is capped at [`SMOOTHING_CAP`].

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::completion::matched_fraction;
use crate::crf::{self, Mask};
use crate::tags::{Sentence, StrongExample, WeakExample};
use crate::{CrfModel, Error, Result};

/// Upper bound applied to every combined confidence.
pub const SMOOTHING_CAP: f64 = 0.95;

pub const DEFAULT_BINS: usize = 10;

/// Identifies how binned scores are computed.
pub const SCORE_DEFINITION: &str = "viterbi-log-posterior-per-token";

/// `(s(ŷ) − log Z) / N` for the BIO-constrained Viterbi path `ŷ`, with `Z`
/// the unmasked partition function. Always `≤ 0`.
pub fn prediction_score(model: &CrfModel, sentence: &Sentence) -> f64 {
    let em = model.emissions(sentence);
    let (_, score) = crf::viterbi(&em, &model.transitions, Mask::Bio).expect("model dimensions are consistent");
    let log_z = crf::log_partition(&em, &model.transitions, Mask::Off).expect("model dimensions are consistent");
    ((score - log_z) / sentence.len() as f64).min(0.0)
}

/// Histogram bins over prediction scores with the exact-match rate of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    /// `B + 1` strictly increasing edges, `−∞` first and `+∞` last. Bin `b`
    /// covers `[edges[b], edges[b + 1])`.
    #[serde(with = "edge_list")]
    pub edges: Vec<f64>,
    pub confidences: Vec<f64>,
    pub counts: Vec<usize>,
    pub score_definition: String,
}

impl CalibrationTable {
    pub fn num_bins(&self) -> usize {
        self.confidences.len()
    }

    pub fn bin_of(&self, score: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|&e| e <= score)
    }

    /// Confidence of the bin containing `score`.
    pub fn predict_confidence(&self, score: f64) -> f64 {
        self.confidences[self.bin_of(score)]
    }

    /// Checks the structural invariants, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        let b = self.confidences.len();
        let ok = b >= 1
            && self.edges.len() == b + 1
            && self.counts.len() == b
            && self.edges[0] == f64::NEG_INFINITY
            && self.edges[b] == f64::INFINITY
            && self.edges.windows(2).all(|w| w[0] < w[1])
            && self.confidences.iter().all(|c| (0.0..=1.0).contains(c));
        if ok {
            Ok(())
        } else {
            Err(Error::Config("malformed calibration table".into()))
        }
    }
}

/// Equal-frequency binning of validation prediction scores; each bin's
/// confidence is the share of its sentences decoded exactly right.
///
/// Bin boundaries sit at the first score of each group, so a group boundary
/// that falls between two equal scores is dropped and the neighbouring bins
/// merge.
pub fn fit(model: &CrfModel, validation: &[StrongExample], num_bins: usize) -> Result<CalibrationTable> {
    if validation.is_empty() {
        return Err(Error::EmptyDataset("calibration validation set"));
    }
    if num_bins == 0 {
        return Err(Error::Config("number of bins must be at least 1".into()));
    }
    let samples: Vec<(f64, bool)> = validation
        .iter()
        .map(|ex| {
            let score = prediction_score(model, &ex.sentence);
            (score, model.decode(&ex.sentence) == ex.gold)
        })
        .collect();
    Ok(fit_scores(&samples, num_bins))
}

/// Binning on precomputed `(score, exact_match)` pairs.
pub fn fit_scores(samples: &[(f64, bool)], num_bins: usize) -> CalibrationTable {
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.0).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let bins = num_bins.min(n).max(1);
    let (base, extra) = (n / bins, n % bins);
    let mut edges = alloc::vec![f64::NEG_INFINITY];
    let mut pos = 0;
    for b in 0..bins - 1 {
        pos += base + usize::from(b < extra);
        let (left, right) = (sorted[pos - 1], sorted[pos]);
        if left < right {
            edges.push(right);
        }
    }
    edges.push(f64::INFINITY);
    let nb = edges.len() - 1;
    let mut table = CalibrationTable {
        edges,
        confidences: alloc::vec![0.0; nb],
        counts: alloc::vec![0; nb],
        score_definition: String::from(SCORE_DEFINITION),
    };
    let mut hits = alloc::vec![0usize; nb];
    for &(score, correct) in samples {
        let b = table.bin_of(score);
        table.counts[b] += 1;
        hits[b] += usize::from(correct);
    }
    for ((conf, &count), &hit) in table.confidences.iter_mut().zip(&table.counts).zip(&hits) {
        if count > 0 {
            *conf = hit as f64 / count as f64;
        }
    }
    table
}

/// `min(0.95, r·1 + (1 − r)·p_pred)` for matched fraction `r`.
pub fn combined_confidence(matched: f64, p_pred: f64) -> f64 {
    SMOOTHING_CAP.min(matched + (1.0 - matched) * p_pred)
}

/// Sets the confidence of every completed weak example.
pub fn attach_confidences(table: &CalibrationTable, model: &CrfModel, examples: &mut [WeakExample]) {
    for ex in examples {
        let p_pred = table.predict_confidence(prediction_score(model, &ex.sentence));
        ex.confidence = Some(combined_confidence(matched_fraction(&ex.weak), p_pred));
    }
}

mod edge_list {
    use alloc::vec::Vec;
    use core::fmt;

    use serde::de::{self, SeqAccess, Visitor};
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(edges: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(edges.len()))?;
        for &e in edges {
            if e == f64::NEG_INFINITY {
                seq.serialize_element("-inf")?;
            } else if e == f64::INFINITY {
                seq.serialize_element("+inf")?;
            } else {
                seq.serialize_element(&e)?;
            }
        }
        seq.end()
    }

    struct Edge(f64);

    impl<'de> de::Deserialize<'de> for Edge {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct V;
            impl Visitor<'_> for V {
                type Value = Edge;

                fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                    f.write_str("a number, \"-inf\" or \"+inf\"")
                }

                fn visit_f64<E: de::Error>(self, v: f64) -> Result<Edge, E> {
                    Ok(Edge(v))
                }

                fn visit_i64<E: de::Error>(self, v: i64) -> Result<Edge, E> {
                    Ok(Edge(v as f64))
                }

                fn visit_u64<E: de::Error>(self, v: u64) -> Result<Edge, E> {
                    Ok(Edge(v as f64))
                }

                fn visit_str<E: de::Error>(self, v: &str) -> Result<Edge, E> {
                    match v {
                        "-inf" => Ok(Edge(f64::NEG_INFINITY)),
                        "+inf" | "inf" => Ok(Edge(f64::INFINITY)),
                        _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                    }
                }
            }
            d.deserialize_any(V)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        struct Seq;
        impl<'de> Visitor<'de> for Seq {
            type Value = Vec<f64>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of bin edges")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
                let mut out = Vec::new();
                while let Some(Edge(e)) = seq.next_element()? {
                    out.push(e);
                }
                Ok(out)
            }
        }
        d.deserialize_seq(Seq)
    }
}
