//! Two-column CoNLL: `token<TAB>label` per line, a blank line between
//! sentences.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use seqlab_core::{LabelSeq, Sentence, StrongExample, TagSet};

use crate::error::{FormatError, IoError};

/// One sentence as read, labels still as strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    /// 1-based line of the first token.
    pub line: usize,
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

pub fn parse(text: &str) -> Result<Vec<RawSentence>, FormatError> {
    let mut out = Vec::new();
    let mut cur: Option<RawSentence> = None;
    let mut blank_run = 0usize;
    for (k, raw) in text.split('\n').enumerate() {
        let line = k + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.is_empty() {
            if let Some(s) = cur.take() {
                out.push(s);
            }
            blank_run += 1;
            continue;
        }
        if blank_run > 1 && !out.is_empty() {
            return Err(FormatError::at(line - 1, "empty sentence (consecutive blank lines)"));
        }
        blank_run = 0;
        let (token, label) = l
            .split_once('\t')
            .ok_or_else(|| FormatError::at(line, format!("expected `token<TAB>label`, got {l:?}")))?;
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(FormatError::at(line, format!("bad token {token:?}")));
        }
        if label.is_empty() || label.contains('\t') || label.chars().any(char::is_whitespace) {
            return Err(FormatError::at(line, format!("bad label {label:?}")));
        }
        let s = cur.get_or_insert_with(|| RawSentence {
            line,
            tokens: Vec::new(),
            labels: Vec::new(),
        });
        s.tokens.push(token.to_string());
        s.labels.push(label.to_string());
    }
    out.extend(cur);
    Ok(out)
}

/// Entity types mentioned by `B-`/`I-` labels, sorted.
pub fn scan_types(sentences: &[RawSentence]) -> BTreeSet<String> {
    sentences
        .iter()
        .flat_map(|s| &s.labels)
        .filter_map(|l| l.strip_prefix("B-").or_else(|| l.strip_prefix("I-")))
        .map(String::from)
        .collect()
}

/// Resolves labels against `tags`. Sequences need not be BIO-valid.
pub fn resolve(sentences: &[RawSentence], tags: &TagSet) -> Result<Vec<(Sentence, LabelSeq)>, FormatError> {
    sentences
        .iter()
        .map(|s| {
            let labels = s
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    tags.parse(l)
                        .map_err(|_| FormatError::at(s.line + i, format!("unknown label {l:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let sentence = Sentence::new(s.tokens.iter().map(String::as_str))
                .map_err(|e| FormatError::at(s.line, e.to_string()))?;
            Ok((sentence, LabelSeq(labels)))
        })
        .collect()
}

/// Resolves and requires BIO-valid gold labels.
pub fn resolve_strong(sentences: &[RawSentence], tags: &TagSet) -> Result<Vec<StrongExample>, FormatError> {
    let resolved = resolve(sentences, tags)?;
    resolved
        .into_iter()
        .zip(sentences)
        .map(|((s, y), raw)| StrongExample::new(s, y, tags).map_err(|e| FormatError::at(raw.line, e.to_string())))
        .collect()
}

pub fn render<'a>(items: impl IntoIterator<Item = (&'a Sentence, &'a LabelSeq)>, tags: &TagSet) -> String {
    let mut out = String::new();
    for (k, (s, y)) in items.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for (tok, &l) in s.tokens().iter().zip(y.iter()) {
            let name = tags.render(l).expect("labels were validated against the tag set");
            let _ = writeln!(out, "{tok}\t{name}");
        }
    }
    out
}

pub fn read(path: &Path) -> Result<Vec<RawSentence>, IoError> {
    let text = crate::fsio::read_text(path)?;
    parse(&text).map_err(|e| IoError::format(path, e))
}

pub fn read_strong(path: &Path, tags: &TagSet) -> Result<Vec<StrongExample>, IoError> {
    resolve_strong(&read(path)?, tags).map_err(|e| IoError::format(path, e))
}

pub fn read_labeled(path: &Path, tags: &TagSet) -> Result<Vec<(Sentence, LabelSeq)>, IoError> {
    resolve(&read(path)?, tags).map_err(|e| IoError::format(path, e))
}

pub fn write<'a>(
    path: &Path,
    items: impl IntoIterator<Item = (&'a Sentence, &'a LabelSeq)>,
    tags: &TagSet,
) -> Result<(), IoError> {
    crate::fsio::write_atomic(path, render(items, tags).as_bytes())
}

pub fn write_strong(path: &Path, data: &[StrongExample], tags: &TagSet) -> Result<(), IoError> {
    write(path, data.iter().map(|e| (&e.sentence, &e.gold)), tags)
}
