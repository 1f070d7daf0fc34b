//! Hashed lexical features and the linear emission layer.
//!
//! Each token fires a small set of template features (identity, lowercase
//! form, affixes, shape, neighbouring words, bias), hashed into `2^bits`
//! buckets. Emissions are the sum of the weight rows of the active buckets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use rand::Rng;
use twox_hash::XxHash64;

use crate::crf::EmissionMatrix;
use crate::rng;
use crate::tags::Sentence;
use crate::{Error, Result};

/// Version tag of the feature templates below. Models record it so a
/// template change cannot silently reinterpret stored weights.
pub const TEMPLATE_VERSION: &str = "lex-window-v1";

pub const DEFAULT_HASH_BITS: u32 = 18;

const HASH_SEED: u64 = 0x5EC1_AB00_F00D_0001;

#[derive(Clone, Copy)]
#[repr(u8)]
enum Template {
    Bias = 0,
    Word,
    Lower,
    Prefix2,
    Prefix3,
    Suffix2,
    Suffix3,
    Shape,
    PrevWord,
    NextWord,
}

const BOUNDARY_PREV: &str = "\u{2}<s>";
const BOUNDARY_NEXT: &str = "\u{3}</s>";

fn hash_feature(t: Template, value: &str, mask: u64) -> u32 {
    let mut h = XxHash64::with_seed(HASH_SEED);
    h.write_u8(t as u8);
    h.write(value.as_bytes());
    (h.finish() & mask) as u32
}

fn shape(token: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for c in token.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if last != Some(s) {
            out.push(s);
            last = Some(s);
        }
    }
    out
}

fn lower(token: &str) -> String {
    token.to_lowercase()
}

/// Feature ids of token `i`, sorted and de-duplicated. Reads only tokens
/// `i − 1`, `i` and `i + 1`.
pub fn extract_features(sentence: &Sentence, i: usize, hash_bits: u32) -> Vec<u32> {
    let tokens = sentence.tokens();
    let mask = (1u64 << hash_bits) - 1;
    let tok = tokens[i].as_str();
    let low = lower(tok);
    let chars: Vec<char> = low.chars().collect();
    let mut ids = Vec::with_capacity(10);
    ids.push(hash_feature(Template::Bias, "", mask));
    ids.push(hash_feature(Template::Word, tok, mask));
    ids.push(hash_feature(Template::Lower, &low, mask));
    for (t, k, from_end) in [
        (Template::Prefix2, 2, false),
        (Template::Prefix3, 3, false),
        (Template::Suffix2, 2, true),
        (Template::Suffix3, 3, true),
    ] {
        if chars.len() >= k {
            let affix: String = if from_end {
                chars[chars.len() - k..].iter().collect()
            } else {
                chars[..k].iter().collect()
            };
            ids.push(hash_feature(t, &affix, mask));
        }
    }
    ids.push(hash_feature(Template::Shape, &shape(tok), mask));
    let prev = if i == 0 {
        String::from(BOUNDARY_PREV)
    } else {
        lower(&tokens[i - 1])
    };
    ids.push(hash_feature(Template::PrevWord, &prev, mask));
    let next = tokens
        .get(i + 1)
        .map_or_else(|| String::from(BOUNDARY_NEXT), |t| lower(t));
    ids.push(hash_feature(Template::NextWord, &next, mask));
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Feature ids of every token of a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceFeatures {
    pub ids: Vec<Vec<u32>>,
}

impl SentenceFeatures {
    pub fn new(sentence: &Sentence, hash_bits: u32) -> Self {
        Self {
            ids: (0..sentence.len())
                .map(|i| extract_features(sentence, i, hash_bits))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Weight table `2^bits × L` over hashed features.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    hash_bits: u32,
    num_labels: usize,
    weights: Vec<f64>,
}

impl EncoderModel {
    pub fn zeros(hash_bits: u32, num_labels: usize) -> Result<Self> {
        if !(1..=26).contains(&hash_bits) {
            return Err(Error::Config(alloc::format!("hash bits {hash_bits} outside 1..=26")));
        }
        Ok(Self {
            hash_bits,
            num_labels,
            weights: vec![0.0; (1usize << hash_bits) * num_labels],
        })
    }

    /// Weights drawn uniformly from `(−0.01, 0.01)`.
    pub fn random(hash_bits: u32, num_labels: usize, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(hash_bits, num_labels)?;
        let mut r = rng::stream(seed);
        for w in &mut m.weights {
            *w = r.random_range(-0.01..0.01);
        }
        Ok(m)
    }

    pub fn from_weights(hash_bits: u32, num_labels: usize, weights: Vec<f64>) -> Result<Self> {
        let m = Self::zeros(hash_bits, num_labels)?;
        if weights.len() != m.weights.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} weights for a {}×{num_labels} table",
                weights.len(),
                1usize << hash_bits
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Dimension("non-finite encoder weight".into()));
        }
        Ok(Self { weights, ..m })
    }

    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }

    pub fn num_features(&self) -> usize {
        1 << self.hash_bits
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    #[inline]
    pub fn row(&self, feature: u32) -> &[f64] {
        let f = feature as usize;
        &self.weights[f * self.num_labels..(f + 1) * self.num_labels]
    }

    pub fn featurize(&self, sentence: &Sentence) -> SentenceFeatures {
        SentenceFeatures::new(sentence, self.hash_bits)
    }

    pub fn emissions(&self, sentence: &Sentence) -> EmissionMatrix {
        self.emissions_from(&self.featurize(sentence))
    }

    /// `em[i, l] = Σ_{f ∈ features(i)} weight[f, l]`.
    pub fn emissions_from(&self, feats: &SentenceFeatures) -> EmissionMatrix {
        let l = self.num_labels;
        let mut em = EmissionMatrix::zeros(feats.len(), l);
        for (i, ids) in feats.ids.iter().enumerate() {
            let row = em.row_mut(i);
            for &f in ids {
                for (e, w) in row.iter_mut().zip(self.row(f)) {
                    *e += w;
                }
            }
        }
        em
    }
}

/// Sparse gradient over encoder rows, keyed by feature id so reduction order
/// is fixed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    pub rows: BTreeMap<u32, Vec<f64>>,
}

impl SparseGrad {
    /// Chain rule through the emission layer: `dW[f, l] += scale · dEm[i, l]`
    /// for every feature `f` active at token `i`.
    pub fn accumulate(&mut self, feats: &SentenceFeatures, d_em: &[f64], num_labels: usize, scale: f64) {
        for (i, ids) in feats.ids.iter().enumerate() {
            let g = &d_em[i * num_labels..(i + 1) * num_labels];
            for &f in ids {
                let row = self.rows.entry(f).or_insert_with(|| vec![0.0; num_labels]);
                for (r, v) in row.iter_mut().zip(g) {
                    *r += scale * v;
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for row in self.rows.values_mut() {
            for v in row {
                *v *= s;
            }
        }
    }
}
