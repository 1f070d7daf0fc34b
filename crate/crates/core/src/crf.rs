//! Linear-chain CRF inference and loss kernels.
//!
//! Everything runs in log space. A path `y` over `N` tokens scores
//!
//! ```text
//! s(y) = start[y₀] + em[0, y₀] + Σᵢ (trans[yᵢ₋₁, yᵢ] + em[i, yᵢ]) + stop[y_{N-1}]
//! ```
//!
//! and has probability `exp(s(y) − log Z)`. The BIO transition mask is a
//! switch ([`Mask`]): decoding runs with it on so decoded paths are always
//! BIO-valid, while supplied label sequences are scored with it off because
//! completed weak labels may break the BIO chain and still need a finite loss.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, log_sum_exp};
use crate::tags::{LabelSeq, TagSet};
use crate::{Error, Result};

/// Floor on `1 − P(y)` used by the unlikelihood loss.
pub const UNLIKELIHOOD_EPS: f64 = 1e-6;

/// Whether BIO-invalid transitions are forbidden.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mask {
    Off,
    Bio,
}

/// Per-token label log-potentials, `N × L`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    len: usize,
    num_labels: usize,
    scores: Vec<f64>,
}

impl EmissionMatrix {
    pub fn new(len: usize, num_labels: usize, scores: Vec<f64>) -> Result<Self> {
        if len == 0 || num_labels == 0 {
            return Err(Error::Dimension("emission matrix must be non-empty".into()));
        }
        if scores.len() != len * num_labels {
            return Err(Error::Dimension(format!(
                "{} scores for a {len}×{num_labels} matrix",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Dimension("non-finite emission score".into()));
        }
        Ok(Self {
            len,
            num_labels,
            scores,
        })
    }

    pub fn zeros(len: usize, num_labels: usize) -> Self {
        Self {
            len,
            num_labels,
            scores: vec![0.0; len * num_labels],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let l = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != l) {
            return Err(Error::Dimension("ragged emission rows".into()));
        }
        Self::new(rows.len(), l, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn get(&self, i: usize, label: usize) -> f64 {
        self.scores[i * self.num_labels + label]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.scores[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.scores
    }
}

/// Transition, start and stop scores plus the BIO mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    num_labels: usize,
    trans: Vec<f64>,
    start: Vec<f64>,
    stop: Vec<f64>,
    allowed: Vec<bool>,
    start_allowed: Vec<bool>,
}

impl TransitionTable {
    /// Zero scores and a mask that allows everything.
    pub fn zeros(num_labels: usize) -> Self {
        Self {
            num_labels,
            trans: vec![0.0; num_labels * num_labels],
            start: vec![0.0; num_labels],
            stop: vec![0.0; num_labels],
            allowed: vec![true; num_labels * num_labels],
            start_allowed: vec![true; num_labels],
        }
    }

    /// Zero scores with the BIO mask of `tags`.
    pub fn for_tags(tags: &TagSet) -> Self {
        let l = tags.num_labels();
        let mut t = Self::zeros(l);
        for j in 0..l {
            t.start_allowed[j] = tags.transition_allowed(None, j);
            for i in 0..l {
                t.allowed[i * l + j] = tags.transition_allowed(Some(i), j);
            }
        }
        t
    }

    /// Replaces all scores, keeping the mask.
    pub fn with_scores(mut self, trans: Vec<f64>, start: Vec<f64>, stop: Vec<f64>) -> Result<Self> {
        let l = self.num_labels;
        if trans.len() != l * l || start.len() != l || stop.len() != l {
            return Err(Error::Dimension(format!("transition scores do not fit {l} labels")));
        }
        if trans.iter().chain(&start).chain(&stop).any(|s| !s.is_finite()) {
            return Err(Error::Dimension("non-finite transition score".into()));
        }
        self.trans = trans;
        self.start = start;
        self.stop = stop;
        Ok(self)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.num_labels + to]
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn stop(&self) -> &[f64] {
        &self.stop
    }

    pub fn trans_scores(&self) -> &[f64] {
        &self.trans
    }

    pub fn is_allowed(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.num_labels + to]
    }

    pub fn is_start_allowed(&self, label: usize) -> bool {
        self.start_allowed[label]
    }

    /// Mutable views of `(trans, start, stop)` for optimizers.
    pub fn scores_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.trans, &mut self.start, &mut self.stop)
    }

    #[inline]
    fn masked_trans(&self, from: usize, to: usize, mask: Mask) -> f64 {
        let k = from * self.num_labels + to;
        if mask == Mask::Bio && !self.allowed[k] {
            f64::NEG_INFINITY
        } else {
            self.trans[k]
        }
    }

    #[inline]
    fn masked_start(&self, label: usize, mask: Mask) -> f64 {
        if mask == Mask::Bio && !self.start_allowed[label] {
            f64::NEG_INFINITY
        } else {
            self.start[label]
        }
    }
}

fn check_dims(em: &EmissionMatrix, tr: &TransitionTable) -> Result<()> {
    if em.num_labels != tr.num_labels {
        return Err(Error::Dimension(format!(
            "emissions have {} labels, transitions {}",
            em.num_labels, tr.num_labels
        )));
    }
    Ok(())
}

fn check_path(em: &EmissionMatrix, y: &[usize]) -> Result<()> {
    if y.len() != em.len {
        return Err(Error::LengthMismatch {
            expected: em.len,
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= em.num_labels) {
        return Err(Error::LabelOutOfRange {
            id: bad,
            num_labels: em.num_labels,
        });
    }
    Ok(())
}

fn check_mask_path(tr: &TransitionTable, y: &[usize], mask: Mask) -> Result<()> {
    if mask == Mask::Off {
        return Ok(());
    }
    if !tr.start_allowed[y[0]] {
        return Err(Error::MaskedTransition(0));
    }
    for i in 1..y.len() {
        if !tr.is_allowed(y[i - 1], y[i]) {
            return Err(Error::MaskedTransition(i));
        }
    }
    Ok(())
}

/// Unmasked score `s(y)` of a label path.
pub fn sequence_score(em: &EmissionMatrix, tr: &TransitionTable, y: &[usize]) -> Result<f64> {
    check_dims(em, tr)?;
    check_path(em, y)?;
    let mut s = tr.start[y[0]] + em.get(0, y[0]);
    for i in 1..y.len() {
        s = s + tr.trans(y[i - 1], y[i]) + em.get(i, y[i]);
    }
    Ok(s + tr.stop[y[y.len() - 1]])
}

/// Forward and backward log-messages over a (possibly constrained) lattice.
struct Lattice {
    n: usize,
    l: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_z: f64,
}

impl Lattice {
    fn forward(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask, allowed: Option<&[bool]>) -> Self {
        let (n, l) = (em.len, em.num_labels);
        let open = |i: usize, j: usize| allowed.is_none_or(|a| a[i * l + j]);
        let mut alpha = vec![f64::NEG_INFINITY; n * l];
        for (j, a) in alpha[..l].iter_mut().enumerate() {
            if open(0, j) {
                *a = tr.masked_start(j, mask) + em.get(0, j);
            }
        }
        let mut buf = vec![0.0; l];
        for i in 1..n {
            for j in 0..l {
                if !open(i, j) {
                    continue;
                }
                for k in 0..l {
                    buf[k] = alpha[(i - 1) * l + k] + tr.masked_trans(k, j, mask);
                }
                alpha[i * l + j] = log_sum_exp(&buf) + em.get(i, j);
            }
        }
        for j in 0..l {
            buf[j] = alpha[(n - 1) * l + j] + tr.stop[j];
        }
        let log_z = log_sum_exp(&buf);
        Self {
            n,
            l,
            alpha,
            beta: Vec::new(),
            log_z,
        }
    }

    fn backward(&mut self, em: &EmissionMatrix, tr: &TransitionTable, mask: Mask, allowed: Option<&[bool]>) {
        let (n, l) = (self.n, self.l);
        let open = |i: usize, j: usize| allowed.is_none_or(|a| a[i * l + j]);
        let mut beta = vec![f64::NEG_INFINITY; n * l];
        for j in 0..l {
            if open(n - 1, j) {
                beta[(n - 1) * l + j] = tr.stop[j];
            }
        }
        let mut buf = vec![0.0; l];
        for i in (0..n - 1).rev() {
            for k in 0..l {
                if !open(i, k) {
                    continue;
                }
                for j in 0..l {
                    buf[j] = tr.masked_trans(k, j, mask) + em.get(i + 1, j) + beta[(i + 1) * l + j];
                }
                beta[i * l + k] = log_sum_exp(&buf);
            }
        }
        self.beta = beta;
    }

    fn marginals(&self, em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> Marginals {
        let (n, l) = (self.n, self.l);
        let mut token = vec![0.0; n * l];
        for (t, (a, b)) in token.iter_mut().zip(self.alpha.iter().zip(&self.beta)) {
            let v = a + b - self.log_z;
            *t = if v == f64::NEG_INFINITY { 0.0 } else { exp(v) };
        }
        let mut pairwise = vec![0.0; n.saturating_sub(1) * l * l];
        for i in 0..n.saturating_sub(1) {
            for k in 0..l {
                let a = self.alpha[i * l + k];
                if a == f64::NEG_INFINITY {
                    continue;
                }
                for j in 0..l {
                    let v =
                        a + tr.masked_trans(k, j, mask) + em.get(i + 1, j) + self.beta[(i + 1) * l + j] - self.log_z;
                    if v != f64::NEG_INFINITY {
                        pairwise[(i * l + k) * l + j] = exp(v);
                    }
                }
            }
        }
        Marginals {
            len: n,
            num_labels: l,
            token,
            pairwise,
        }
    }
}

/// Posterior marginals from forward-backward.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    len: usize,
    num_labels: usize,
    token: Vec<f64>,
    pairwise: Vec<f64>,
}

impl Marginals {
    /// `P(yᵢ = label)`.
    #[inline]
    pub fn token(&self, i: usize, label: usize) -> f64 {
        self.token[i * self.num_labels + label]
    }

    pub fn token_row(&self, i: usize) -> &[f64] {
        &self.token[i * self.num_labels..(i + 1) * self.num_labels]
    }

    /// `P(yᵢ = from, yᵢ₊₁ = to)` for `i < N − 1`.
    #[inline]
    pub fn pairwise(&self, i: usize, from: usize, to: usize) -> f64 {
        self.pairwise[(i * self.num_labels + from) * self.num_labels + to]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }
}

/// `log Σ_y exp(s(y))` by the forward algorithm.
pub fn log_partition(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> Result<f64> {
    check_dims(em, tr)?;
    Ok(Lattice::forward(em, tr, mask, None).log_z)
}

fn check_allowed(em: &EmissionMatrix, allowed: &[bool]) -> Result<()> {
    let l = em.num_labels;
    if allowed.len() != em.len * l {
        return Err(Error::Dimension(format!(
            "allowed mask has {} cells, expected {}",
            allowed.len(),
            em.len * l
        )));
    }
    match allowed.chunks(l).position(|row| !row.contains(&true)) {
        Some(i) => Err(Error::EmptyAllowedSet(i)),
        None => Ok(()),
    }
}

/// Log-sum over the paths whose label at each position lies in `allowed`
/// (`N × L`, row-major).
pub fn constrained_log_partition(
    em: &EmissionMatrix,
    tr: &TransitionTable,
    mask: Mask,
    allowed: &[bool],
) -> Result<f64> {
    check_dims(em, tr)?;
    check_allowed(em, allowed)?;
    Ok(Lattice::forward(em, tr, mask, Some(allowed)).log_z)
}

/// Token and pairwise posteriors.
pub fn marginals(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> Result<Marginals> {
    check_dims(em, tr)?;
    let mut lat = Lattice::forward(em, tr, mask, None);
    lat.backward(em, tr, mask, None);
    Ok(lat.marginals(em, tr, mask))
}

/// Highest-scoring path and its score. Ties go to the lower label id.
pub fn viterbi(em: &EmissionMatrix, tr: &TransitionTable, mask: Mask) -> Result<(LabelSeq, f64)> {
    check_dims(em, tr)?;
    let (n, l) = (em.len, em.num_labels);
    let mut delta = vec![f64::NEG_INFINITY; n * l];
    let mut back = vec![0usize; n * l];
    for (j, d) in delta[..l].iter_mut().enumerate() {
        *d = tr.masked_start(j, mask) + em.get(0, j);
    }
    for i in 1..n {
        for j in 0..l {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for k in 0..l {
                let v = delta[(i - 1) * l + k] + tr.masked_trans(k, j, mask);
                if v > best {
                    best = v;
                    arg = k;
                }
            }
            delta[i * l + j] = best + em.get(i, j);
            back[i * l + j] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for j in 0..l {
        let v = delta[(n - 1) * l + j] + tr.stop[j];
        if v > best {
            best = v;
            last = j;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[i * l + path[i]];
    }
    Ok((LabelSeq(path), best))
}

/// Negative log-likelihood `log Z − s(y)`.
pub fn nll(em: &EmissionMatrix, tr: &TransitionTable, y: &[usize], mask: Mask) -> Result<f64> {
    let score = sequence_score(em, tr, y)?;
    check_mask_path(tr, y, mask)?;
    let log_z = log_partition(em, tr, mask)?;
    Ok((log_z - score).max(0.0))
}

fn clamped_log_prob(nll: f64) -> f64 {
    (-nll).min(libm::log1p(-UNLIKELIHOOD_EPS))
}

fn unlikelihood_from_log_prob(log_p: f64) -> f64 {
    -ln(-libm::expm1(log_p))
}

/// Negative log-unlikelihood `−log(1 − P(y))`, with `P(y) ≤ 1 − ε`.
pub fn log_unlikelihood(em: &EmissionMatrix, tr: &TransitionTable, y: &[usize], mask: Mask) -> Result<f64> {
    let nll = nll(em, tr, y, mask)?;
    Ok(unlikelihood_from_log_prob(clamped_log_prob(nll)))
}

/// Gradient of a loss with respect to emissions and transition scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfGrad {
    pub len: usize,
    pub num_labels: usize,
    /// `N × L`, row-major.
    pub em: Vec<f64>,
    /// `L × L`, row-major (`from`, `to`).
    pub trans: Vec<f64>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

impl CrfGrad {
    pub fn zeros(len: usize, num_labels: usize) -> Self {
        Self {
            len,
            num_labels,
            em: vec![0.0; len * num_labels],
            trans: vec![0.0; num_labels * num_labels],
            start: vec![0.0; num_labels],
            stop: vec![0.0; num_labels],
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &CrfGrad, scale: f64) {
        debug_assert_eq!((self.len, self.num_labels), (other.len, other.num_labels));
        let pairs = self
            .em
            .iter_mut()
            .zip(&other.em)
            .chain(self.trans.iter_mut().zip(&other.trans))
            .chain(self.start.iter_mut().zip(&other.start))
            .chain(self.stop.iter_mut().zip(&other.stop));
        for (a, b) in pairs {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self
            .em
            .iter_mut()
            .chain(&mut self.trans)
            .chain(&mut self.start)
            .chain(&mut self.stop)
        {
            *v *= s;
        }
    }

    /// Adds `scale` times the expected feature counts under `m`.
    fn add_expectation(&mut self, m: &Marginals, scale: f64) {
        let (n, l) = (self.len, self.num_labels);
        for (g, p) in self.em.iter_mut().zip(&m.token) {
            *g += scale * p;
        }
        for j in 0..l {
            self.start[j] += scale * m.token(0, j);
            self.stop[j] += scale * m.token(n - 1, j);
        }
        for i in 0..n.saturating_sub(1) {
            let block = &m.pairwise[i * l * l..(i + 1) * l * l];
            for (g, p) in self.trans.iter_mut().zip(block) {
                *g += scale * p;
            }
        }
    }

    /// Adds `scale` times the feature counts of path `y`.
    fn add_path(&mut self, y: &[usize], scale: f64) {
        let l = self.num_labels;
        for (i, &yi) in y.iter().enumerate() {
            self.em[i * l + yi] += scale;
        }
        self.start[y[0]] += scale;
        self.stop[y[y.len() - 1]] += scale;
        for w in y.windows(2) {
            self.trans[w[0] * l + w[1]] += scale;
        }
    }
}

/// `nll` and its gradient, `marginals − one-hot(y)`.
pub fn grad_nll(em: &EmissionMatrix, tr: &TransitionTable, y: &[usize], mask: Mask) -> Result<(f64, CrfGrad)> {
    let score = sequence_score(em, tr, y)?;
    check_mask_path(tr, y, mask)?;
    let mut lat = Lattice::forward(em, tr, mask, None);
    lat.backward(em, tr, mask, None);
    let m = lat.marginals(em, tr, mask);
    let mut g = CrfGrad::zeros(em.len, em.num_labels);
    g.add_expectation(&m, 1.0);
    g.add_path(y, -1.0);
    Ok(((lat.log_z - score).max(0.0), g))
}

/// `log_unlikelihood` and its gradient, `P/(1−P) · (one-hot(y) − marginals)`
/// with the same clamp on `P`.
pub fn grad_log_unlikelihood(
    em: &EmissionMatrix,
    tr: &TransitionTable,
    y: &[usize],
    mask: Mask,
) -> Result<(f64, CrfGrad)> {
    let (nll, mut g) = grad_nll(em, tr, y, mask)?;
    let log_p = clamped_log_prob(nll);
    let p = exp(log_p);
    g.scale(-p / (1.0 - p));
    Ok((unlikelihood_from_log_prob(log_p), g))
}

/// Both losses from one forward-backward pass, as `(nll, unlikelihood,
/// grad_nll, grad_unlikelihood)`.
pub fn grad_nll_and_unlikelihood(
    em: &EmissionMatrix,
    tr: &TransitionTable,
    y: &[usize],
    mask: Mask,
) -> Result<(f64, f64, CrfGrad, CrfGrad)> {
    let (nll, g) = grad_nll(em, tr, y, mask)?;
    let log_p = clamped_log_prob(nll);
    let p = exp(log_p);
    let mut gu = g.clone();
    gu.scale(-p / (1.0 - p));
    Ok((nll, unlikelihood_from_log_prob(log_p), g, gu))
}

/// Marginal negative log-likelihood of the constrained path set,
/// `log Z − log Z_allowed`, and its gradient
/// `marginals − constrained marginals`.
pub fn grad_constrained_nll(
    em: &EmissionMatrix,
    tr: &TransitionTable,
    mask: Mask,
    allowed: &[bool],
) -> Result<(f64, CrfGrad)> {
    check_dims(em, tr)?;
    check_allowed(em, allowed)?;
    let mut full = Lattice::forward(em, tr, mask, None);
    full.backward(em, tr, mask, None);
    let mut part = Lattice::forward(em, tr, mask, Some(allowed));
    if part.log_z == f64::NEG_INFINITY {
        return Err(Error::EmptyAllowedSet(0));
    }
    part.backward(em, tr, mask, Some(allowed));
    let mut g = CrfGrad::zeros(em.len, em.num_labels);
    g.add_expectation(&full.marginals(em, tr, mask), 1.0);
    g.add_expectation(&part.marginals(em, tr, mask), -1.0);
    Ok(((full.log_z - part.log_z).max(0.0), g))
}

/// Allowed-label mask pinning every non-`O` position to its label and
/// leaving `O` positions unconstrained.
pub fn pin_entities(labels: &[usize], num_labels: usize) -> Vec<bool> {
    let mut allowed = vec![true; labels.len() * num_labels];
    for (i, &y) in labels.iter().enumerate() {
        if y != 0 {
            for (j, a) in allowed[i * num_labels..(i + 1) * num_labels].iter_mut().enumerate() {
                *a = j == y;
            }
        }
    }
    allowed
}
