//! Exhaustive reference implementations for small CRF instances, used to
//! check the dynamic programs. Cost is `O(L^N · N)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::crf::{EmissionMatrix, Mask, TransitionTable};
use crate::math::{exp, ln};

/// Every label path of length `len` over `num_labels` labels, in
/// lexicographic order.
pub fn all_paths(len: usize, num_labels: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut y = vec![0; len];
    if num_labels == 0 {
        return out;
    }
    loop {
        out.push(y.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            y[i] += 1;
            if y[i] < num_labels {
                break;
            }
            y[i] = 0;
        }
    }
}

/// Path score summed term by term; `None` when the mask forbids the path.
pub fn path_score(em: &EmissionMatrix, tr: &TransitionTable, y: &[usize], mask: Mask) -> Option<f64> {
    if mask == Mask::Bio && (!tr.is_start_allowed(y[0]) || y.windows(2).any(|w| !tr.is_allowed(w[0], w[1]))) {
        return None;
    }
    let mut s = tr.start()[y[0]] + tr.stop()[y[y.len() - 1]];
    for (i, &l) in y.iter().enumerate() {
        s += em.get(i, l);
    }
    for w in y.windows(2) {
        s += tr.trans(w[0], w[1]);
    }
    Some(s)
}

fn in_allowed(y: &[usize], allowed: Option<&[bool]>, l: usize) -> bool {
    allowed.is_none_or(|a| y.iter().enumerate().all(|(i, &yi)| a[i * l + yi]))
}

/// `(path, score)` for every admissible path.
pub fn scored_paths(
    em: &EmissionMatrix,
    tr: &TransitionTable,
    mask: Mask,
    allowed: Option<&[bool]>,
) -> Vec<(Vec<usize>, f64)> {
    let l = em.num_labels();
    all_paths(em.len(), l)
        .into_iter()
        .filter(|y| in_allowed(y, allowed, l))
        .filter_map(|y| path_score(em, tr, &y, mask).map(|s| (y, s)))
        .collect()
}

fn log_sum(scores: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = scores.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + ln(scores.map(|s| exp(s - max)).sum::<f64>())
}

pub fn log_partition(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> f64 {
    log_sum(scored_paths(em, tr, mask, None).iter().map(|p| p.1))
}

pub fn constrained_log_partition(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask, allowed: &[bool]) -> f64 {
    log_sum(scored_paths(em, tr, mask, Some(allowed)).iter().map(|p| p.1))
}

/// Best path and score; the first path in lexicographic order wins ties.
pub fn viterbi(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> Option<(Vec<usize>, f64)> {
    scored_paths(em, tr, mask, None)
        .into_iter()
        .fold(None, |best: Option<(Vec<usize>, f64)>, (y, s)| match best {
            Some((_, b)) if b >= s => best,
            _ => Some((y, s)),
        })
}

/// Token marginals `N × L` and pairwise marginals `(N − 1) × L × L`.
pub fn marginals(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> (Vec<f64>, Vec<f64>) {
    let (n, l) = (em.len(), em.num_labels());
    let paths = scored_paths(em, tr, mask, None);
    let log_z = log_sum(paths.iter().map(|p| p.1));
    let mut token = vec![0.0; n * l];
    let mut pair = vec![0.0; n.saturating_sub(1) * l * l];
    for (y, s) in &paths {
        let p = exp(s - log_z);
        for (i, &yi) in y.iter().enumerate() {
            token[i * l + yi] += p;
        }
        for (i, w) in y.windows(2).enumerate() {
            pair[(i * l + w[0]) * l + w[1]] += p;
        }
    }
    (token, pair)
}

/// Central difference `(f(x + h) − f(x − h)) / 2h` of `f` along the
/// coordinate that `set` overwrites.
pub fn central_difference<S>(
    state: &mut S,
    h: f64,
    get: impl Fn(&S) -> f64,
    set: impl Fn(&mut S, f64),
    f: impl Fn(&S) -> f64,
) -> f64 {
    let x = get(state);
    set(state, x + h);
    let up = f(state);
    set(state, x - h);
    let down = f(state);
    set(state, x);
    (up - down) / (2.0 * h)
}
