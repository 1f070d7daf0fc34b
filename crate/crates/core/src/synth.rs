//! Synthetic labeled corpora and degraded gazetteers.
//!
//! Sentences come from templates such as `buy {product} online` whose typed
//! slots are filled from per-type vocabularies. Every type owns single-token
//! head entries and two-token compound entries (`modifier head`) built on
//! its own heads, so a gazetteer that lost a compound but kept its head
//! produces a boundary error, the way real dictionaries do. Vocabularies are
//! disjoint across types and from template words, and slots are never
//! adjacent, so the full gazetteer labels every generated sentence exactly.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gazetteer::{Gazetteer, GazetteerEntry};
use crate::rng::{self, Stream};
use crate::tags::{LabelKind, LabelSeq, Sentence, StrongExample, TagSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityVocab {
    pub name: String,
    /// Single-token entries.
    pub heads: usize,
    /// Two-token `modifier head` entries.
    pub compounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub entity_types: Vec<EntityVocab>,
    /// Space-separated patterns; `{type}` marks a slot.
    pub templates: Vec<String>,
    pub strong_train: usize,
    pub strong_dev: usize,
    pub strong_test: usize,
    pub weak_pool: usize,
    pub seed: u64,
    /// Probability that a gazetteer entry survives degradation.
    pub coverage: f64,
    /// Probability that a surviving entry is re-typed.
    pub bias: f64,
}

const REFERENCE_TEMPLATES: &[&str] = &[
    "buy {product} online",
    "{product} for sale",
    "official {brand} store",
    "{brand} brand outlet",
    "shirt in {color} color",
    "paint it {color} please",
    "made from {material} fabric",
    "pure {material} blend",
    "{style} style outfit",
    "dress in {style} fashion",
    "{product} by {brand}",
    "{color} colored {product}",
    "{product} made of {material}",
    "{style} look with {color} accents",
    "{brand} label {product}",
    "cheap {brand} deals",
    "cheap {product} deals",
    "cheap {style} deals",
    "best {color} for summer",
    "best {material} for summer",
    "best {product} for summer",
    "show me {brand}",
    "show me {color}",
    "show me {material}",
    "new {style} arrivals",
    "new {brand} arrivals",
    "top rated {product} and {material}",
    "compare {brand} with {brand}",
    "looking for {color} or {color}",
    "i want {style} and {product}",
    "what is on sale today",
    "track my order please",
];

impl SynthSpec {
    /// The shipped benchmark: 5 types, 500/1000/1000 strong sentences, a
    /// 20000-sentence weak pool, coverage 0.5 and bias 0.05.
    pub fn reference(seed: u64) -> Self {
        let types = ["brand", "color", "material", "product", "style"];
        Self {
            entity_types: types
                .iter()
                .map(|t| EntityVocab {
                    name: t.to_string(),
                    heads: 300,
                    compounds: 90,
                })
                .collect(),
            templates: REFERENCE_TEMPLATES.iter().map(|t| t.to_string()).collect(),
            strong_train: 500,
            strong_dev: 1000,
            strong_test: 1000,
            weak_pool: 20000,
            seed,
            coverage: 0.5,
            bias: 0.05,
        }
    }

    pub fn tags(&self) -> Result<TagSet> {
        TagSet::new(self.entity_types.iter().map(|t| t.name.clone()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.coverage) || !(0.0..=1.0).contains(&self.bias) {
            return fail("coverage and bias must lie in [0, 1]".into());
        }
        let total = self.strong_train + self.strong_dev + self.strong_test + self.weak_pool;
        if total > 0 && self.templates.is_empty() {
            return fail("template pool is empty".into());
        }
        let tags = self.tags()?;
        for t in &self.entity_types {
            if t.heads == 0 && t.compounds > 0 {
                return fail(format!("type `{}` has compounds but no heads", t.name));
            }
        }
        for tpl in &self.templates {
            let parts = parse_template(tpl, &tags)?;
            if parts.windows(2).any(|w| matches!(w, [Part::Slot(_), Part::Slot(_)])) {
                return fail(format!("template `{tpl}` has adjacent slots"));
            }
            for p in &parts {
                if let Part::Slot(t) = p {
                    if self.entity_types[*t].heads == 0 {
                        return fail(format!("template `{tpl}` uses a type with no vocabulary"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Word(String),
    Slot(usize),
}

fn parse_template(tpl: &str, tags: &TagSet) -> Result<Vec<Part>> {
    let parts: Vec<Part> = tpl
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(|w| match w.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            Some(t) => tags
                .type_index(t)
                .map(Part::Slot)
                .ok_or_else(|| Error::UnknownType(t.to_string())),
            None => Ok(Part::Word(w.to_string())),
        })
        .collect::<Result<_>>()?;
    if parts.is_empty() {
        return Err(Error::Config(format!("empty template `{tpl}`")));
    }
    Ok(parts)
}

/// Generated corpus. `pool` carries the hidden gold of the weak pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub tags: TagSet,
    pub train: Vec<StrongExample>,
    pub dev: Vec<StrongExample>,
    pub test: Vec<StrongExample>,
    pub pool: Vec<StrongExample>,
    pub gazetteer: Gazetteer,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn random_word(r: &mut Stream) -> String {
    let syllables = r.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[r.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[r.random_range(0..VOWELS.len())] as char);
    }
    w
}

/// Entries per type, as token sequences; heads first, then compounds.
fn build_vocab(spec: &SynthSpec, r: &mut Stream) -> Vec<Vec<Vec<String>>> {
    let mut used: BTreeSet<String> = spec
        .templates
        .iter()
        .flat_map(|t| t.split(' '))
        .filter(|w| !w.starts_with('{'))
        .map(String::from)
        .collect();
    let mut fresh = |r: &mut Stream| loop {
        let w = random_word(r);
        if used.insert(w.clone()) {
            return w;
        }
    };
    spec.entity_types
        .iter()
        .map(|t| {
            let heads: Vec<String> = (0..t.heads).map(|_| fresh(r)).collect();
            let mut entries: Vec<Vec<String>> = heads.iter().map(|h| alloc::vec![h.clone()]).collect();
            for _ in 0..t.compounds {
                let head = heads[r.random_range(0..heads.len())].clone();
                entries.push(alloc::vec![fresh(r), head]);
            }
            entries
        })
        .collect()
}

fn sample_sentence(
    templates: &[Vec<Part>],
    vocab: &[Vec<Vec<String>>],
    tags: &TagSet,
    r: &mut Stream,
) -> StrongExample {
    let tpl = &templates[r.random_range(0..templates.len())];
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for part in tpl {
        match part {
            Part::Word(w) => {
                tokens.push(w.clone());
                labels.push(0);
            }
            Part::Slot(t) => {
                let entries = &vocab[*t];
                let entry = &entries[r.random_range(0..entries.len())];
                for (k, tok) in entry.iter().enumerate() {
                    tokens.push(tok.clone());
                    let kind = if k == 0 { LabelKind::B } else { LabelKind::I };
                    labels.push(tags.label_of_index(kind, *t));
                }
            }
        }
    }
    let sentence = Sentence::new(tokens).expect("generated tokens are non-empty words");
    StrongExample::new(sentence, LabelSeq(labels), tags).expect("generated labels are BIO-valid")
}

/// Generates all splits and the full gazetteer, deterministically per seed.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let tags = spec.tags()?;
    let mut r = rng::stream(rng::derive(spec.seed, "synth/corpus"));
    let vocab = build_vocab(spec, &mut r);
    let templates: Vec<Vec<Part>> = spec
        .templates
        .iter()
        .map(|t| parse_template(t, &tags))
        .collect::<Result<_>>()?;
    let mut split = |n: usize| -> Vec<StrongExample> {
        (0..n)
            .map(|_| sample_sentence(&templates, &vocab, &tags, &mut r))
            .collect()
    };
    let train = split(spec.strong_train);
    let dev = split(spec.strong_dev);
    let test = split(spec.strong_test);
    let pool = split(spec.weak_pool);
    let entries = vocab
        .iter()
        .zip(tags.entity_types())
        .flat_map(|(entries, ty)| {
            entries.iter().map(move |surface| GazetteerEntry {
                surface: surface.clone(),
                ty: ty.clone(),
            })
        })
        .collect();
    let gazetteer = Gazetteer::new(entries, &tags, true)?;
    Ok(SynthCorpus {
        tags,
        train,
        dev,
        test,
        pool,
        gazetteer,
    })
}

/// Keeps each entry with probability `coverage`; a kept entry is re-typed
/// to a uniformly chosen different type with probability `bias`.
pub fn degrade(gaz: &Gazetteer, tags: &TagSet, coverage: f64, bias: f64, seed: u64) -> Result<Gazetteer> {
    if !(0.0..=1.0).contains(&coverage) || !(0.0..=1.0).contains(&bias) {
        return Err(Error::Config("coverage and bias must lie in [0, 1]".into()));
    }
    let mut r = rng::stream(rng::derive(seed, "synth/degrade"));
    let types = tags.entity_types();
    let mut kept = Vec::new();
    for e in gaz.entries() {
        let keep = r.random::<f64>() < coverage;
        let retype = r.random::<f64>() < bias;
        let pick = r.random_range(0..types.len().max(2) - 1);
        if !keep {
            continue;
        }
        let mut entry = e.clone();
        if retype && types.len() > 1 {
            let own = tags.type_index(&e.ty).ok_or_else(|| Error::UnknownType(e.ty.clone()))?;
            let other = if pick >= own { pick + 1 } else { pick };
            entry.ty = types[other].clone();
        }
        kept.push(entry);
    }
    Gazetteer::new(kept, tags, gaz.case_insensitive())
}
