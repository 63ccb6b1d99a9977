//! One-vs-rest soft-margin linear SVM trained by stochastic subgradient
//! descent on the hinge loss.
//!
//! Per binary problem the objective is `(lambda/2)||w||^2 + (1/n) sum
//! hinge_i` with `lambda = 1 / (C * n)` and step size `1/(lambda * t)`; the
//! bias is unregularized. Training is deterministic given the seed, and the
//! classifier reports a stratified-holdout accuracy (`ac`) measured before
//! the final fit on all data.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper<F> {
    /// Soft-margin cost.
    pub c: F,
    /// Passes over the training data.
    pub epochs: usize,
    pub seed: u64,
    /// Stratified holdout fraction used to measure `ac`; `None` skips the
    /// holdout and reports training accuracy instead.
    pub holdout: Option<F>,
}

impl<F: Scalar> Default for SvmHyper<F> {
    fn default() -> Self {
        SvmHyper {
            c: F::one(),
            epochs: 10,
            seed: 42,
            holdout: Some(F::of_f64(0.2)),
        }
    }
}

/// Trained one-vs-rest linear classifier over a fixed author set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier<F> {
    /// Class labels, sorted; weight/bias rows align with this order.
    pub classes: Vec<String>,
    pub weights: Vec<Vec<F>>,
    pub biases: Vec<F>,
    pub epochs: usize,
    pub c: F,
    /// Stratified-holdout accuracy in [0, 1] (the `ac` of this node).
    pub holdout_accuracy: F,
}

impl<F: Scalar> LinearClassifier<F> {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Per-class decision values `w_i . x + b_i`.
    pub fn decision(&self, x: &[F]) -> Vec<F> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + *b)
            .collect()
    }

    /// Argmax class and its decision value; ties go to the lexicographically
    /// smaller class.
    pub fn predict(&self, x: &[F]) -> (&str, F) {
        let scores = self.decision(x);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = i;
            }
        }
        (&self.classes[best], scores[best])
    }

    /// Fraction of (vector, label) pairs predicted correctly.
    pub fn accuracy_on(&self, vectors: &[Vec<F>], labels: &[&str]) -> F {
        if vectors.is_empty() {
            return F::zero();
        }
        let correct = vectors
            .iter()
            .zip(labels)
            .filter(|(v, l)| self.predict(v).0 == **l)
            .count();
        F::ratio(correct, vectors.len())
    }
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        s = s + *x * *y;
    }
    s
}

/// One binary Pegasos run; `y` holds +1/-1 per example.
fn train_binary<F: Scalar>(
    vectors: &[Vec<F>],
    y: &[F],
    lambda: F,
    epochs: usize,
    seed: u64,
) -> (Vec<F>, F) {
    let n = vectors.len();
    let dim = vectors[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // w is kept as scale * v to make the shrink step O(1).
    let mut scale = F::one();
    let mut v = vec![F::zero(); dim];
    let mut bias = F::zero();
    let mut order: Vec<usize> = (0..n).collect();
    let mut t: u64 = 1;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let tf = F::of_f64(t as f64);
            let eta = F::one() / (lambda * tf);
            let margin = y[i] * (scale * dot(&v, &vectors[i]) + bias);
            scale = scale * (F::one() - F::one() / tf);
            if margin < F::one() {
                let g = eta * y[i] / scale;
                for (vj, xj) in v.iter_mut().zip(&vectors[i]) {
                    *vj = *vj + g * *xj;
                }
                bias = bias + eta * y[i];
            }
        }
    }
    (v.into_iter().map(|x| x * scale).collect(), bias)
}

fn fit_all_classes<F: Scalar>(
    vectors: &[Vec<F>],
    label_ids: &[usize],
    classes: &[String],
    hyper: &SvmHyper<F>,
) -> (Vec<Vec<F>>, Vec<F>) {
    let lambda = F::one() / (hyper.c * F::of_usize(vectors.len()));
    let rows: Vec<(Vec<F>, F)> = (0..classes.len())
        .into_par_iter()
        .map(|ci| {
            let y: Vec<F> = label_ids
                .iter()
                .map(|&l| if l == ci { F::one() } else { -F::one() })
                .collect();
            train_binary(
                vectors,
                &y,
                lambda,
                hyper.epochs,
                derive_seed(hyper.seed, &[ci as u64]),
            )
        })
        .collect();
    rows.into_iter().unzip()
}

/// Train a one-vs-rest linear SVM. Requires at least two distinct labels.
pub fn train_linear_svm<F: Scalar>(
    vectors: &[Vec<F>],
    labels: &[&str],
    hyper: &SvmHyper<F>,
) -> Result<LinearClassifier<F>> {
    if vectors.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} vectors vs {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    if vectors.is_empty() {
        return Err(Error::validation("cannot train a classifier on no data"));
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::validation(
            "vectors must share one nonzero dimension",
        ));
    }
    let mut classes: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::validation(
            "training needs at least two distinct authors (single-author data belongs in a pure leaf)",
        ));
    }
    let label_ids: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(&l.to_string()).unwrap())
        .collect();

    // Measure ac on a stratified holdout, then refit on everything.
    let holdout_accuracy = match hyper.holdout {
        Some(frac) => holdout_accuracy(vectors, &label_ids, &classes, hyper, frac),
        None => None,
    };

    let (weights, biases) = fit_all_classes(vectors, &label_ids, &classes, hyper);
    let clf = LinearClassifier {
        classes,
        weights,
        biases,
        epochs: hyper.epochs,
        c: hyper.c,
        holdout_accuracy: F::zero(),
    };
    let labels_ref: Vec<&str> = labels.to_vec();
    let ac = holdout_accuracy.unwrap_or_else(|| clf.accuracy_on(vectors, &labels_ref));
    Ok(LinearClassifier {
        holdout_accuracy: ac,
        ..clf
    })
}

/// Stratified 80/20-style split; `None` when the holdout comes up empty
/// (callers fall back to training accuracy).
fn holdout_accuracy<F: Scalar>(
    vectors: &[Vec<F>],
    label_ids: &[usize],
    classes: &[String],
    hyper: &SvmHyper<F>,
    frac: F,
) -> Option<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(hyper.seed, &[0x4f1d]));
    let mut train_idx: Vec<usize> = Vec::new();
    let mut held_idx: Vec<usize> = Vec::new();
    for ci in 0..classes.len() {
        let mut members: Vec<usize> = (0..vectors.len()).filter(|&i| label_ids[i] == ci).collect();
        members.shuffle(&mut rng);
        let held = ((F::of_usize(members.len()) * frac).floor()).into_f64() as usize;
        held_idx.extend_from_slice(&members[..held]);
        train_idx.extend_from_slice(&members[held..]);
    }
    if held_idx.is_empty() {
        return None;
    }
    held_idx.sort();
    train_idx.sort();

    let sub_vectors: Vec<Vec<F>> = train_idx.iter().map(|&i| vectors[i].clone()).collect();
    let sub_ids: Vec<usize> = train_idx.iter().map(|&i| label_ids[i]).collect();
    let (weights, biases) = fit_all_classes(&sub_vectors, &sub_ids, classes, hyper);
    let clf = LinearClassifier {
        classes: classes.to_vec(),
        weights,
        biases,
        epochs: hyper.epochs,
        c: hyper.c,
        holdout_accuracy: F::zero(),
    };
    let correct = held_idx
        .iter()
        .filter(|&&i| clf.predict(&vectors[i]).0 == classes[label_ids[i]])
        .count();
    Some(F::ratio(correct, held_idx.len()))
}
