//! BIO label space, sentences, label sequences and dataset examples.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Position of a label within the BIO schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    O,
    B,
    I,
}

/// The label space `{O} ∪ {B-e, I-e}` over an ordered list of entity types.
///
/// Ids are laid out as `O = 0`, then `B-e₁, I-e₁, B-e₂, I-e₂, …` in
/// declaration order, so `B` ids are odd and `I` ids are even.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet {
    types: Vec<String>,
}

impl TagSet {
    pub fn new<I, S>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidTagSet("empty type name".to_string()));
            }
            if t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidTagSet(format!("type name `{t}` contains whitespace")));
            }
            if types[..i].contains(t) {
                return Err(Error::InvalidTagSet(format!("duplicate type name `{t}`")));
            }
        }
        Ok(Self { types })
    }

    pub fn entity_types(&self) -> &[String] {
        &self.types
    }

    /// Number of labels, `2·|types| + 1`.
    pub fn num_labels(&self) -> usize {
        2 * self.types.len() + 1
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    /// Label id for `kind` of entity type `type_name` (ignored for `O`).
    pub fn label_of(&self, kind: LabelKind, type_name: &str) -> Result<usize> {
        match kind {
            LabelKind::O => Ok(0),
            _ => {
                let t = self
                    .type_index(type_name)
                    .ok_or_else(|| Error::UnknownType(type_name.to_string()))?;
                Ok(self.label_of_index(kind, t))
            }
        }
    }

    /// Label id for `kind` of the entity type at position `type_index`.
    pub fn label_of_index(&self, kind: LabelKind, type_index: usize) -> usize {
        match kind {
            LabelKind::O => 0,
            LabelKind::B => 1 + 2 * type_index,
            LabelKind::I => 2 + 2 * type_index,
        }
    }

    /// Kind and entity-type index of a label id; `None` type for `O`.
    pub fn decompose(&self, id: usize) -> (LabelKind, Option<usize>) {
        if id == 0 {
            (LabelKind::O, None)
        } else if id % 2 == 1 {
            (LabelKind::B, Some((id - 1) / 2))
        } else {
            (LabelKind::I, Some((id - 2) / 2))
        }
    }

    /// Kind and entity-type name of a label id.
    pub fn name_of(&self, id: usize) -> Result<(LabelKind, Option<&str>)> {
        self.check_id(id)?;
        let (kind, t) = self.decompose(id);
        Ok((kind, t.map(|t| self.types[t].as_str())))
    }

    /// Renders a label id as `O`, `B-type` or `I-type`.
    pub fn render(&self, id: usize) -> Result<String> {
        Ok(match self.name_of(id)? {
            (LabelKind::O, _) => "O".to_string(),
            (LabelKind::B, Some(t)) => format!("B-{t}"),
            (LabelKind::I, Some(t)) => format!("I-{t}"),
            _ => unreachable!("entity labels always carry a type"),
        })
    }

    /// Parses `O`, `B-type` or `I-type`.
    pub fn parse(&self, label: &str) -> Result<usize> {
        if label == "O" {
            return Ok(0);
        }
        let (kind, t) = match label.split_once('-') {
            Some(("B", t)) => (LabelKind::B, t),
            Some(("I", t)) => (LabelKind::I, t),
            _ => return Err(Error::UnknownType(label.to_string())),
        };
        self.label_of(kind, t)
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.num_labels() {
            Ok(())
        } else {
            Err(Error::LabelOutOfRange {
                id,
                num_labels: self.num_labels(),
            })
        }
    }

    /// Whether label `next` may follow label `prev` (`None` = sentence start).
    pub fn transition_allowed(&self, prev: Option<usize>, next: usize) -> bool {
        match self.decompose(next) {
            (LabelKind::I, Some(t)) => match prev {
                Some(p) => matches!(self.decompose(p), (LabelKind::B | LabelKind::I, Some(pt)) if pt == t),
                None => false,
            },
            _ => true,
        }
    }

    /// True iff every `I-e` follows a `B-e` or `I-e` of the same type.
    pub fn is_bio_valid(&self, labels: &[usize]) -> bool {
        let mut prev = None;
        for &l in labels {
            if !self.transition_allowed(prev, l) {
                return false;
            }
            prev = Some(l);
        }
        true
    }
}

impl TryFrom<Vec<String>> for TagSet {
    type Error = Error;

    fn try_from(types: Vec<String>) -> Result<Self> {
        TagSet::new(types)
    }
}

impl From<TagSet> for Vec<String> {
    fn from(tags: TagSet) -> Self {
        tags.types
    }
}

/// A pre-tokenized sentence of at least one token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::InvalidSentence("no tokens".to_string()));
        }
        if let Some(t) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidSentence(format!("bad token `{t}`")));
        }
        Ok(Self { tokens })
    }

    /// Splits on single spaces.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(text.split(' '))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<String>> for Sentence {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Sentence::new(tokens)
    }
}

impl From<Sentence> for Vec<String> {
    fn from(s: Sentence) -> Self {
        s.tokens
    }
}

/// A sequence of label ids. BIO validity is checked, not enforced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSeq(pub Vec<usize>);

impl LabelSeq {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn all_o(len: usize) -> Self {
        Self(alloc::vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Checks that the sequence fits `len` tokens and `tags`.
    pub fn validate(&self, len: usize, tags: &TagSet) -> Result<()> {
        if self.0.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: self.0.len(),
            });
        }
        self.0.iter().try_for_each(|&id| tags.check_id(id))
    }

    pub fn parse(labels: &[&str], tags: &TagSet) -> Result<Self> {
        labels
            .iter()
            .map(|l| tags.parse(l))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn render(&self, tags: &TagSet) -> Result<Vec<String>> {
        self.0.iter().map(|&id| tags.render(id)).collect()
    }
}

impl From<Vec<usize>> for LabelSeq {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl core::ops::Deref for LabelSeq {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// A sentence with human-annotated gold labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongExample {
    pub sentence: Sentence,
    pub gold: LabelSeq,
}

impl StrongExample {
    pub fn new(sentence: Sentence, gold: LabelSeq, tags: &TagSet) -> Result<Self> {
        gold.validate(sentence.len(), tags)?;
        if !tags.is_bio_valid(&gold) {
            return Err(Error::InvalidSentence("gold labels are not BIO-valid".to_string()));
        }
        Ok(Self { sentence, gold })
    }
}

/// A weakly labeled sentence and what the pipeline derives from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakExample {
    pub sentence: Sentence,
    pub weak: LabelSeq,
    pub predicted: Option<LabelSeq>,
    pub corrected: Option<LabelSeq>,
    pub confidence: Option<f64>,
}

impl WeakExample {
    pub fn new(sentence: Sentence, weak: LabelSeq, tags: &TagSet) -> Result<Self> {
        weak.validate(sentence.len(), tags)?;
        Ok(Self {
            sentence,
            weak,
            predicted: None,
            corrected: None,
            confidence: None,
        })
    }
}
