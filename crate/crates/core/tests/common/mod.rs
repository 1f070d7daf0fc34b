#![allow(dead_code)]

use rand::Rng;
use seqlab_core::crf::{EmissionMatrix, Mask, TransitionTable};
use seqlab_core::rng::Stream;
use seqlab_core::TagSet;

pub fn uniform(r: &mut Stream, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// Random emissions and transitions. BIO instances use one entity type
/// (3 labels); unmasked ones use 1 to 4 labels.
pub fn instance(r: &mut Stream, max_len: usize, mask: Mask) -> (EmissionMatrix, TransitionTable) {
    let n = r.random_range(1..=max_len);
    let (l, base) = match mask {
        Mask::Off => {
            let l = r.random_range(1..=4);
            (l, TransitionTable::zeros(l))
        }
        Mask::Bio => {
            let tags = TagSet::new(["x"]).unwrap();
            (tags.num_labels(), TransitionTable::for_tags(&tags))
        }
    };
    let em = EmissionMatrix::new(n, l, uniform(r, n * l, 2.0)).unwrap();
    let tr = base
        .with_scores(uniform(r, l * l, 2.0), uniform(r, l, 2.0), uniform(r, l, 2.0))
        .unwrap();
    (em, tr)
}

pub fn random_path(r: &mut Stream, len: usize, l: usize) -> Vec<usize> {
    (0..len).map(|_| r.random_range(0..l)).collect()
}

/// Every row keeps at least one label.
pub fn random_allowed(r: &mut Stream, len: usize, l: usize) -> Vec<bool> {
    let mut a = Vec::with_capacity(len * l);
    for _ in 0..len {
        let keep = r.random_range(0..l);
        a.extend((0..l).map(|j| j == keep || r.random_bool(0.5)));
    }
    a
}

/// `|a − n| ≤ tol · max(|a|, |n|)`, or both below the finite-difference
/// noise floor.
pub fn close_rel(a: f64, n: f64, tol: f64) -> bool {
    let d = (a - n).abs();
    d <= tol * a.abs().max(n.abs()) || d <= 1e-8
}
