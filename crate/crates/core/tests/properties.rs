mod common;

use proptest::prelude::*;
use seqlab_core::calibration::{self, SMOOTHING_CAP};
use seqlab_core::completion;
use seqlab_core::crf::{self, EmissionMatrix, Mask, TransitionTable};
use seqlab_core::encoder::EncoderModel;
use seqlab_core::eval::{self, extract_spans, spans_to_labels};
use seqlab_core::{rng, LabelSeq, Sentence, TagSet};

fn tags() -> TagSet {
    TagSet::new(["a", "b", "c"]).unwrap()
}

fn labels(max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    let l = tags().num_labels();
    prop::collection::vec(0..l, 1..=max_len)
}

/// BIO-valid sequences built from spans.
fn valid_labels(max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    labels(max_len).prop_map(|raw| {
        let t = tags();
        let spans = extract_spans(&raw, &t);
        spans_to_labels(&spans, raw.len(), &t).unwrap().0
    })
}

fn pair(max_len: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=max_len).prop_flat_map(|n| {
        let l = tags().num_labels();
        (prop::collection::vec(0..l, n), prop::collection::vec(0..l, n))
    })
}

#[test]
fn completion_never_overwrites_entities_on_1e4_pairs() {
    use rand::Rng;
    let l = tags().num_labels();
    let mut r = rng::stream(2024);
    for _ in 0..10_000 {
        let n = r.random_range(1..=12);
        let weak: Vec<usize> = (0..n)
            .map(|_| if r.random_bool(0.6) { 0 } else { r.random_range(1..l) })
            .collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..l)).collect();
        let c = completion::complete(&weak, &pred).unwrap();
        for i in 0..n {
            assert_eq!(c[i], if weak[i] != 0 { weak[i] } else { pred[i] });
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn completion_keeps_entities((weak, pred) in pair(10)) {
        let c = completion::complete(&weak, &pred).unwrap();
        for i in 0..weak.len() {
            if weak[i] != 0 {
                prop_assert_eq!(c[i], weak[i]);
            } else {
                prop_assert_eq!(c[i], pred[i]);
            }
        }
        prop_assert!(completion::matched_fraction(&c) >= completion::matched_fraction(&weak));
    }

    #[test]
    fn span_round_trip(y in valid_labels(12)) {
        let t = tags();
        prop_assert!(t.is_bio_valid(&y));
        let back = spans_to_labels(&extract_spans(&y, &t), y.len(), &t).unwrap();
        prop_assert_eq!(back.0, y);
    }

    #[test]
    fn precision_recall_swap((p, g) in pair(10), (p2, g2) in pair(10)) {
        let t = tags();
        let pred = vec![LabelSeq(p), LabelSeq(p2)];
        let gold = vec![LabelSeq(g), LabelSeq(g2)];
        let a = eval::evaluate(&pred, &gold, &t).unwrap();
        let b = eval::evaluate(&gold, &pred, &t).unwrap();
        prop_assert_eq!(a.span_p, b.span_r);
        prop_assert_eq!(a.span_r, b.span_p);
        prop_assert_eq!(a.span_f1, b.span_f1);
        for m in [&a, &b] {
            prop_assert!((0.0..=1.0).contains(&m.span_f1));
            prop_assert!(m.span_f1 <= m.span_p.max(m.span_r) + 1e-15);
            prop_assert!((0.0..=1.0).contains(&m.token_acc) && (0.0..=1.0).contains(&m.sentence_acc));
        }
    }

    #[test]
    fn perfect_prediction_scores_one(y in valid_labels(10)) {
        let t = tags();
        let m = eval::evaluate(&[LabelSeq(y.clone())], &[LabelSeq(y.clone())], &t).unwrap();
        prop_assert_eq!(m.token_acc, 1.0);
        prop_assert_eq!(m.sentence_acc, 1.0);
        if y.iter().any(|&l| l != 0) {
            prop_assert_eq!(m.span_f1, 1.0);
        }
    }

    #[test]
    fn token_shift_invariance(seed in any::<u64>(), shift in -5.0f64..5.0, pos in 0usize..6) {
        let mut r = rng::stream(seed);
        let (em, tr) = common::instance(&mut r, 6, Mask::Off);
        let i = pos % em.len();
        let mut shifted = em.clone();
        for v in shifted.row_mut(i) {
            *v += shift;
        }
        let z0 = crf::log_partition(&em, &tr, Mask::Off).unwrap();
        let z1 = crf::log_partition(&shifted, &tr, Mask::Off).unwrap();
        prop_assert!((z1 - z0 - shift).abs() < 1e-9);
        let m0 = crf::marginals(&em, &tr, Mask::Off).unwrap();
        let m1 = crf::marginals(&shifted, &tr, Mask::Off).unwrap();
        for k in 0..em.len() {
            for (a, b) in m0.token_row(k).iter().zip(m1.token_row(k)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
        let (p0, _) = crf::viterbi(&em, &tr, Mask::Off).unwrap();
        let (p1, _) = crf::viterbi(&shifted, &tr, Mask::Off).unwrap();
        prop_assert_eq!(p0, p1);
    }

    #[test]
    fn emissions_are_linear_in_weights(seed in any::<u64>(), a in -2.0f64..2.0) {
        let l = tags().num_labels();
        let bits = 7;
        let mut r = rng::stream(seed);
        let w1 = common::uniform(&mut r, (1 << bits) * l, 1.0);
        let w2 = common::uniform(&mut r, (1 << bits) * l, 1.0);
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + y).collect();
        let s = Sentence::from_text("cheap red shoes by acme").unwrap();
        let e1 = EncoderModel::from_weights(bits, l, w1).unwrap().emissions(&s);
        let e2 = EncoderModel::from_weights(bits, l, w2).unwrap().emissions(&s);
        let em = EncoderModel::from_weights(bits, l, mix).unwrap().emissions(&s);
        for ((x, y), z) in e1.as_slice().iter().zip(e2.as_slice()).zip(em.as_slice()) {
            prop_assert!((a * x + y - z).abs() < 1e-9);
        }
    }

    #[test]
    fn combined_confidence_is_monotone(r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let (rl, rh) = (r1.min(r2), r1.max(r2));
        let (pl, ph) = (p1.min(p2), p1.max(p2));
        let c = calibration::combined_confidence;
        prop_assert!(c(rl, pl) <= c(rh, pl));
        prop_assert!(c(rl, pl) <= c(rl, ph));
        prop_assert!(c(rh, ph) <= SMOOTHING_CAP);
        prop_assert!(c(rl, pl) >= 0.0);
    }

    #[test]
    fn equal_frequency_bins(scores in prop::collection::vec(-10.0f64..0.0, 1..300), bins in 1usize..15, seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng::stream(seed);
        let samples: Vec<(f64, bool)> = scores.iter().map(|&s| (s, r.random_bool(0.5))).collect();
        let t = calibration::fit_scores(&samples, bins);
        t.validate().unwrap();
        prop_assert_eq!(t.counts.iter().sum::<usize>(), samples.len());
        let mut distinct = scores.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() == scores.len() {
            prop_assert_eq!(t.num_bins(), bins.min(scores.len()));
            let (lo, hi) = (t.counts.iter().min().unwrap(), t.counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
        for &(s, _) in &samples {
            let c = t.predict_confidence(s);
            prop_assert!((0.0..=1.0).contains(&c));
        }
        for b in 0..t.num_bins() {
            let hits = samples.iter().filter(|&&(s, ok)| ok && t.bin_of(s) == b).count();
            prop_assert_eq!(t.confidences[b], hits as f64 / t.counts[b] as f64);
        }
    }

    #[test]
    fn single_bin_is_global_rate(flags in prop::collection::vec(any::<bool>(), 1..200), seed in any::<u64>()) {
        let mut r = rng::stream(seed);
        let samples: Vec<(f64, bool)> = flags.iter().map(|&f| (common::uniform(&mut r, 1, 5.0)[0], f)).collect();
        let t = calibration::fit_scores(&samples, 1);
        let rate = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
        prop_assert_eq!(t.confidences.clone(), vec![rate]);
        prop_assert_eq!(t.predict_confidence(f64::NEG_INFINITY), rate);
        prop_assert_eq!(t.predict_confidence(1e300), rate);
    }

    #[test]
    fn bio_mask_paths_are_valid(seed in any::<u64>()) {
        let mut r = rng::stream(seed);
        let (em, tr) = common::instance(&mut r, 6, Mask::Bio);
        let (y, _) = crf::viterbi(&em, &tr, Mask::Bio).unwrap();
        prop_assert!(TagSet::new(["x"]).unwrap().is_bio_valid(&y));
    }
}

#[test]
fn single_token_partition_is_log_sum_exp() {
    let em = EmissionMatrix::from_rows(&[&[0.5, -1.0, 2.0]]).unwrap();
    let tr = TransitionTable::zeros(3);
    let z = crf::log_partition(&em, &tr, Mask::Off).unwrap();
    let want = (0.5f64.exp() + (-1.0f64).exp() + 2.0f64.exp()).ln();
    assert!((z - want).abs() < 1e-12);
}
