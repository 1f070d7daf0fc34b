//! Gazetteer files: `surface form<TAB>type` per line, `#` comments.

use std::path::Path;

use seqlab_core::gazetteer::{Gazetteer, GazetteerEntry};
use seqlab_core::TagSet;

use crate::error::{FormatError, IoError};

pub fn parse(text: &str) -> Result<Vec<GazetteerEntry>, FormatError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (surface, ty) = l
            .split_once('\t')
            .ok_or_else(|| FormatError::at(line, format!("expected `surface<TAB>type`, got {l:?}")))?;
        if surface.is_empty() || surface.split(' ').any(str::is_empty) || ty.is_empty() || ty.contains('\t') {
            return Err(FormatError::at(line, format!("malformed entry {l:?}")));
        }
        out.push(GazetteerEntry::new(surface, ty));
    }
    Ok(out)
}

pub fn render(gaz: &Gazetteer) -> String {
    let mut out = String::new();
    for e in gaz.entries() {
        out.push_str(&e.surface.join(" "));
        out.push('\t');
        out.push_str(&e.ty);
        out.push('\n');
    }
    out
}

pub fn read(path: &Path, tags: &TagSet, case_insensitive: bool) -> Result<Gazetteer, IoError> {
    let text = crate::fsio::read_text(path)?;
    let entries = parse(&text).map_err(|e| IoError::format(path, e))?;
    Gazetteer::new(entries, tags, case_insensitive).map_err(|e| IoError::model(path, e.to_string()))
}

pub fn write(path: &Path, gaz: &Gazetteer) -> Result<(), IoError> {
    crate::fsio::write_atomic(path, render(gaz).as_bytes())
}
