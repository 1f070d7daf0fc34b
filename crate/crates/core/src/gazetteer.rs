//! Weak labels from exact gazetteer matches over token sequences.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eval::{self, Span};
use crate::tags::{LabelSeq, Sentence, TagSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub surface: Vec<String>,
    pub ty: String,
}

impl GazetteerEntry {
    pub fn new(surface: &str, ty: &str) -> Self {
        Self {
            surface: surface.split(' ').map(String::from).collect(),
            ty: ty.to_string(),
        }
    }
}

/// A validated dictionary of surface forms and their entity types.
///
/// Duplicate `(surface, type)` pairs are collapsed; a surface that maps to
/// two different types is rejected. With `case_insensitive` set, surfaces
/// that differ only in case count as the same surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    case_insensitive: bool,
}

fn normalize(token: &str, case_insensitive: bool) -> String {
    if case_insensitive {
        token.to_lowercase()
    } else {
        token.to_string()
    }
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>, tags: &TagSet, case_insensitive: bool) -> Result<Self> {
        let mut seen: BTreeMap<Vec<String>, String> = BTreeMap::new();
        let mut kept = Vec::with_capacity(entries.len());
        for e in entries {
            if e.surface.is_empty()
                || e.surface
                    .iter()
                    .any(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            {
                return Err(Error::InvalidEntry(format!("bad surface {:?}", e.surface)));
            }
            if tags.type_index(&e.ty).is_none() {
                return Err(Error::UnknownType(e.ty));
            }
            let key: Vec<String> = e.surface.iter().map(|t| normalize(t, case_insensitive)).collect();
            match seen.get(&key) {
                Some(ty) if *ty == e.ty => continue,
                Some(ty) => {
                    return Err(Error::ConflictingSurface {
                        surface: e.surface.join(" "),
                        first: ty.clone(),
                        second: e.ty,
                    })
                }
                None => {
                    seen.insert(key, e.ty.clone());
                    kept.push(e);
                }
            }
        }
        Ok(Self {
            entries: kept,
            case_insensitive,
        })
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn case_insensitive(&self) -> bool {
        self.case_insensitive
    }
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<String, u32>,
    ty: Option<usize>,
}

/// Token trie compiled from a gazetteer.
#[derive(Debug, Clone)]
pub struct Matcher {
    nodes: Vec<Node>,
    case_insensitive: bool,
    tags: TagSet,
}

/// Compiles a gazetteer into a matcher over `tags`.
pub fn compile(gaz: &Gazetteer, tags: &TagSet) -> Result<Matcher> {
    let mut nodes = alloc::vec![Node::default()];
    for e in &gaz.entries {
        let ty = tags.type_index(&e.ty).ok_or_else(|| Error::UnknownType(e.ty.clone()))?;
        let mut cur = 0usize;
        for tok in &e.surface {
            let key = normalize(tok, gaz.case_insensitive);
            cur = match nodes[cur].children.get(&key) {
                Some(&next) => next as usize,
                None => {
                    let next = nodes.len();
                    nodes.push(Node::default());
                    nodes[cur].children.insert(key, next as u32);
                    next
                }
            };
        }
        match nodes[cur].ty {
            Some(prev) if prev != ty => {
                return Err(Error::ConflictingSurface {
                    surface: e.surface.join(" "),
                    first: tags.entity_types()[prev].clone(),
                    second: e.ty.clone(),
                })
            }
            _ => nodes[cur].ty = Some(ty),
        }
    }
    Ok(Matcher {
        nodes,
        case_insensitive: gaz.case_insensitive,
        tags: tags.clone(),
    })
}

impl Matcher {
    pub fn tags(&self) -> &TagSet {
        &self.tags
    }

    /// Longest surface starting at token `start`, as `(end_exclusive, type)`.
    fn longest_at(&self, tokens: &[String], start: usize) -> Option<(usize, usize)> {
        let mut cur = 0usize;
        let mut best = None;
        for (k, tok) in tokens[start..].iter().enumerate() {
            let next = if self.case_insensitive {
                self.nodes[cur].children.get(&tok.to_lowercase())
            } else {
                self.nodes[cur].children.get(tok)
            };
            match next {
                Some(&n) => {
                    cur = n as usize;
                    if let Some(ty) = self.nodes[cur].ty {
                        best = Some((start + k + 1, ty));
                    }
                }
                None => break,
            }
        }
        best
    }

    /// Leftmost-longest, non-overlapping matches scanned left to right.
    pub fn find_spans(&self, sentence: &Sentence) -> Vec<Span> {
        let tokens = sentence.tokens();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.longest_at(tokens, i) {
                Some((end, ty)) => {
                    spans.push(Span {
                        start: i,
                        end: end - 1,
                        ty,
                    });
                    i = end;
                }
                None => i += 1,
            }
        }
        spans
    }

    /// Weak BIO labels: matched spans as `B-type I-type …`, all else `O`.
    pub fn annotate(&self, sentence: &Sentence) -> LabelSeq {
        eval::spans_to_labels(&self.find_spans(sentence), sentence.len(), &self.tags)
            .expect("matcher spans never overlap")
    }

    /// Annotates every sentence, returning `(index, labels)` pairs. Sentences
    /// without a match are skipped unless `keep_unmatched` is set.
    pub fn annotate_all(&self, sentences: &[Sentence], keep_unmatched: bool) -> Vec<(usize, LabelSeq)> {
        sentences
            .iter()
            .enumerate()
            .filter_map(|(k, s)| {
                let labels = self.annotate(s);
                (keep_unmatched || labels.iter().any(|&l| l != 0)).then_some((k, labels))
            })
            .collect()
    }
}

/// Span-level quality of weak labels against gold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLabelQuality {
    pub precision: f64,
    pub recall: f64,
    /// No weak spans at all; precision is reported as 0.
    pub zero_predicted: bool,
}

pub fn weak_label_quality(weak: &[LabelSeq], gold: &[LabelSeq], tags: &TagSet) -> Result<WeakLabelQuality> {
    let m = eval::evaluate(weak, gold, tags)?;
    Ok(WeakLabelQuality {
        precision: m.span_p,
        recall: m.span_r,
        zero_predicted: m.flags.zero_predicted,
    })
}
