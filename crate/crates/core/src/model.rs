use alloc::vec::Vec;

use rand::Rng;

use crate::crf::{self, EmissionMatrix, Mask, TransitionTable};
use crate::encoder::{EncoderModel, SentenceFeatures, TEMPLATE_VERSION};
use crate::rng;
use crate::tags::{LabelSeq, Sentence, TagSet};
use crate::{Error, Result};

/// Feature encoder plus CRF head over one tag set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub tags: TagSet,
    pub encoder: EncoderModel,
    pub transitions: TransitionTable,
}

impl CrfModel {
    /// Encoder and CRF weights drawn from `uniform(−0.01, 0.01)`.
    pub fn new(tags: TagSet, hash_bits: u32, seed: u64) -> Result<Self> {
        let l = tags.num_labels();
        let encoder = EncoderModel::random(hash_bits, l, rng::derive(seed, "init/encoder"))?;
        let mut r = rng::stream(rng::derive(seed, "init/crf"));
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-0.01..0.01)).collect() };
        let trans = draw(l * l);
        let start = draw(l);
        let stop = draw(l);
        let transitions = TransitionTable::for_tags(&tags).with_scores(trans, start, stop)?;
        Ok(Self {
            tags,
            encoder,
            transitions,
        })
    }

    pub fn from_parts(tags: TagSet, encoder: EncoderModel, transitions: TransitionTable) -> Result<Self> {
        let l = tags.num_labels();
        if encoder.num_labels() != l || transitions.num_labels() != l {
            return Err(Error::Dimension(alloc::format!(
                "tag set has {l} labels, encoder {}, transitions {}",
                encoder.num_labels(),
                transitions.num_labels()
            )));
        }
        Ok(Self {
            tags,
            encoder,
            transitions,
        })
    }

    pub fn template_version(&self) -> &'static str {
        TEMPLATE_VERSION
    }

    pub fn num_labels(&self) -> usize {
        self.tags.num_labels()
    }

    pub fn featurize(&self, sentence: &Sentence) -> SentenceFeatures {
        self.encoder.featurize(sentence)
    }

    pub fn emissions(&self, sentence: &Sentence) -> EmissionMatrix {
        self.encoder.emissions(sentence)
    }

    /// BIO-constrained Viterbi decode.
    pub fn decode(&self, sentence: &Sentence) -> LabelSeq {
        self.decode_with_score(sentence).0
    }

    pub fn decode_with_score(&self, sentence: &Sentence) -> (LabelSeq, f64) {
        let em = self.emissions(sentence);
        crf::viterbi(&em, &self.transitions, Mask::Bio).expect("model dimensions are consistent")
    }

    /// Unmasked negative log-likelihood of `labels`.
    pub fn nll(&self, sentence: &Sentence, labels: &[usize]) -> Result<f64> {
        crf::nll(&self.emissions(sentence), &self.transitions, labels, Mask::Off)
    }
}
