//! Evaluation harness: stratified cross-validation, accuracy metrics, the
//! five-experiment ablation suite, and the unknown-author gate.
//!
//! Experiments: (1) baseline stylometric features + flat SVM, (2) + extended
//! features, (3) baseline + selected content features, (4) extended +
//! content, (5) extended + content classified by the cluster model. The
//! codebook and the feature standardization are always rebuilt from the
//! training folds only.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccm::{train_ccm, CcmHyper, CcmModel};
use crate::content::{build_codebook, Codebook};
use crate::corpus::{CleanedEmail, Corpus};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::scale::Scaler;
use crate::seeding::derive_seed;
use crate::stats::{chi_square_sf, exact_permutation_p, kruskal_wallis_h};
use crate::stylometry::{
    extract_extended, extract_stylometric, FeatureSchema, StyloConfig,
};
use crate::svm::{train_linear_svm, SvmHyper};

/// Fold index per email, aligned with `corpus.emails`. Folds are disjoint,
/// cover the corpus, and hold each author's emails within +-1 of each other.
pub fn stratified_folds(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::validation("cross-validation needs at least 2 folds"));
    }
    if folds > corpus.len() {
        return Err(Error::validation(format!(
            "{folds} folds exceed the corpus size {}",
            corpus.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[5]));
    let mut assignment = vec![0usize; corpus.len()];
    for author in &corpus.authors {
        let mut indices: Vec<usize> = corpus
            .emails
            .iter()
            .enumerate()
            .filter(|(_, e)| &e.author == author)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        let start = rng.gen_range(0..folds);
        for (j, &i) in indices.iter().enumerate() {
            assignment[i] = (start + j) % folds;
        }
    }
    Ok(assignment)
}

/// One-vs-rest confusion counts summed over all authors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    /// Tally one decision against every author class.
    pub fn record(&mut self, authors: &[String], actual: &str, predicted: &str) {
        for a in authors {
            match (a == actual, a == predicted) {
                (true, true) => self.true_pos += 1,
                (false, false) => self.true_neg += 1,
                (false, true) => self.false_pos += 1,
                (true, false) => self.false_neg += 1,
            }
        }
    }
}

/// `(TP + TN) / (TP + TN + FP + FN) * 100`.
pub fn accuracy<F: Scalar>(counts: &ConfusionCounts) -> Result<F> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::validation("accuracy needs at least one decision"));
    }
    Ok(F::ratio(
        (counts.true_pos + counts.true_neg) as usize,
        total as usize,
    ) * F::of_f64(100.0))
}

/// Cluster-weighted accuracy `(1/n) * sum |c_i| * ac_i`, as a percentage.
pub fn ccm_accuracy<F: Scalar>(cluster_rows: &[(usize, F)], n: usize) -> Result<F> {
    let total: usize = cluster_rows.iter().map(|(size, _)| size).sum();
    if total != n {
        return Err(Error::validation(format!(
            "cluster sizes sum to {total}, expected n = {n}"
        )));
    }
    if n == 0 {
        return Err(Error::validation("ccm_accuracy needs at least one email"));
    }
    for (_, ac) in cluster_rows {
        if *ac < F::zero() || *ac > F::one() {
            return Err(Error::validation("cluster accuracies must lie in [0, 1]"));
        }
    }
    let sum: F = cluster_rows
        .iter()
        .map(|(size, ac)| F::of_usize(*size) * *ac)
        .sum();
    Ok(sum / F::of_usize(n) * F::of_f64(100.0))
}

/// Harness parameters shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams<F> {
    pub folds: usize,
    pub seed: u64,
    pub top_terms: usize,
    pub min_term_freq: usize,
    pub svm_c: F,
    pub svm_epochs: usize,
    pub k_override: Option<usize>,
    pub max_depth: usize,
    pub merge_jaccard: F,
}

impl<F: Scalar> Default for EvalParams<F> {
    fn default() -> Self {
        EvalParams {
            folds: 10,
            seed: 42,
            top_terms: 1000,
            min_term_freq: 3,
            svm_c: F::one(),
            svm_epochs: 10,
            k_override: None,
            max_depth: 5,
            merge_jaccard: F::of_f64(0.5),
        }
    }
}

/// Feature set and model of one experiment row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub id: u8,
    pub extended: bool,
    pub content: bool,
    pub clustered: bool,
}

impl ExperimentSpec {
    pub fn lookup(id: u8) -> Result<ExperimentSpec> {
        let (extended, content, clustered) = match id {
            1 => (false, false, false),
            2 => (true, false, false),
            3 => (false, true, false),
            4 => (true, true, false),
            5 => (true, true, true),
            other => {
                return Err(Error::validation(format!(
                    "unknown experiment id {other} (valid: 1..=5)"
                )))
            }
        };
        Ok(ExperimentSpec {
            id,
            extended,
            content,
            clustered,
        })
    }

    pub fn feature_set(&self) -> &'static str {
        match (self.extended, self.content) {
            (false, false) => "baseline",
            (true, false) => "baseline+extended",
            (false, true) => "baseline+content",
            (true, true) => "baseline+extended+content",
        }
    }

    pub fn model_name(&self) -> &'static str {
        if self.clustered {
            "ccm"
        } else {
            "svm"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow<F> {
    pub leaf: u32,
    pub size: usize,
    /// Accuracy within the cluster, in [0, 1].
    pub accuracy: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport<F> {
    pub fold: usize,
    pub test_size: usize,
    pub correct: usize,
    pub accuracy_pct: F,
    pub cluster_rows: Vec<ClusterRow<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    pub experiment: u8,
    pub feature_set: String,
    pub model: String,
    pub n_authors: usize,
    pub n_emails: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport<F>>,
    /// Mean of the fold accuracies, in percent.
    pub aggregate_pct: F,
    /// One-vs-rest counts summed over authors and folds.
    pub confusion: ConfusionCounts,
    /// Plain multiclass tally over all folds.
    pub multiclass_correct: usize,
    pub multiclass_total: usize,
}

impl<F: Scalar> EvalReport<F> {
    /// Check the report's internal identities: per fold the cluster-weighted
    /// accuracy reproduces the pooled accuracy, and the aggregate is the mean
    /// of fold accuracies.
    pub fn validate(&self) -> Result<()> {
        let tol = F::of_f64(1e-9);
        for fold in &self.folds {
            let rows: Vec<(usize, F)> = fold
                .cluster_rows
                .iter()
                .map(|r| (r.size, r.accuracy))
                .collect();
            let weighted = ccm_accuracy(&rows, fold.test_size)?;
            let pooled = F::ratio(fold.correct, fold.test_size) * F::of_f64(100.0);
            if (weighted - pooled).abs() > tol {
                return Err(Error::validation(format!(
                    "fold {}: cluster-weighted accuracy {weighted} differs from pooled {pooled}",
                    fold.fold
                )));
            }
            if (pooled - fold.accuracy_pct).abs() > tol {
                return Err(Error::validation(format!(
                    "fold {}: stored accuracy {} differs from pooled {pooled}",
                    fold.fold, fold.accuracy_pct
                )));
            }
        }
        let mean: F = self.folds.iter().map(|f| f.accuracy_pct).sum::<F>()
            / F::of_usize(self.folds.len());
        if (mean - self.aggregate_pct).abs() > tol {
            return Err(Error::validation(format!(
                "aggregate {} differs from fold mean {mean}",
                self.aggregate_pct
            )));
        }
        Ok(())
    }
}

struct FoldOutcome<F> {
    fold: usize,
    /// (actual author, predicted author, leaf id) per test email.
    decisions: Vec<(String, String, u32)>,
    _marker: std::marker::PhantomData<F>,
}

/// Run the requested experiments under stratified cross-validation.
pub fn run_experiment_suite<F: Scalar>(
    corpus: &Corpus,
    experiments: &[u8],
    params: &EvalParams<F>,
) -> Result<Vec<EvalReport<F>>> {
    let specs: Vec<ExperimentSpec> = experiments
        .iter()
        .map(|&id| ExperimentSpec::lookup(id))
        .collect::<Result<_>>()?;
    let config = StyloConfig::default();
    let assignment = stratified_folds(corpus, params.folds, params.seed)?;

    // The stylometric sections do not depend on the fold; extract them once.
    let stylo: Vec<Vec<F>> = corpus
        .emails
        .par_iter()
        .map(|e| extract_stylometric::<F>(e, &config))
        .collect();
    let extended: Vec<Vec<F>> = corpus
        .emails
        .par_iter()
        .map(|e| extract_extended::<F>(e, &config))
        .collect();

    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let outcomes: Vec<FoldOutcome<F>> = (0..params.folds)
            .into_par_iter()
            .map(|fold| run_fold(corpus, &assignment, fold, spec, params, &config, &stylo, &extended))
            .collect::<Result<_>>()?;
        reports.push(summarize(corpus, spec, params, outcomes)?);
    }
    Ok(reports)
}

#[allow(clippy::too_many_arguments)]
fn run_fold<F: Scalar>(
    corpus: &Corpus,
    assignment: &[usize],
    fold: usize,
    spec: ExperimentSpec,
    params: &EvalParams<F>,
    config: &StyloConfig,
    stylo: &[Vec<F>],
    extended: &[Vec<F>],
) -> Result<FoldOutcome<F>> {
    let train_idx: Vec<usize> = (0..corpus.len()).filter(|&i| assignment[i] != fold).collect();
    let test_idx: Vec<usize> = (0..corpus.len()).filter(|&i| assignment[i] == fold).collect();
    let train_corpus = corpus.subset(&train_idx)?;

    let codebook: Option<Codebook<F>> = if spec.content {
        Some(build_codebook(
            &train_corpus,
            params.top_terms,
            params.min_term_freq,
        )?)
    } else {
        None
    };

    let decisions: Vec<(String, String, u32)> = if spec.clustered {
        let cb = codebook.as_ref().expect("experiment 5 selects content features");
        let schema = FeatureSchema::build(config, spec.extended, Some(cb));
        let hyper = CcmHyper {
            k_override: params.k_override,
            max_depth: params.max_depth,
            seed: derive_seed(params.seed, &[6, spec.id as u64, fold as u64]),
            svm_c: params.svm_c,
            svm_epochs: params.svm_epochs,
            merge_jaccard: params.merge_jaccard,
        };
        let model = train_ccm(&train_corpus, &schema, cb, config, &hyper)?;
        test_idx
            .iter()
            .map(|&i| {
                let email = &corpus.emails[i];
                let p = model.predict_email(email)?;
                Ok((email.author.clone(), p.author, p.leaf))
            })
            .collect::<Result<_>>()?
    } else {
        // Flat SVM over the fold: compose the cached stylometric sections
        // with this fold's content weights.
        let compose = |i: usize| -> Vec<F> {
            let mut v = stylo[i].clone();
            if spec.extended {
                v.extend_from_slice(&extended[i]);
            }
            if let Some(cb) = &codebook {
                v.extend(cb.email_weights(&corpus.emails[i]));
            }
            v
        };
        let train_vecs: Vec<Vec<F>> = train_idx.iter().map(|&i| compose(i)).collect();
        let scaler = Scaler::fit(&train_vecs)?;
        let train_std = scaler.transform_all(&train_vecs);
        let labels: Vec<&str> = train_idx
            .iter()
            .map(|&i| corpus.emails[i].author.as_str())
            .collect();
        let svm = SvmHyper {
            c: params.svm_c,
            epochs: params.svm_epochs,
            seed: derive_seed(params.seed, &[6, spec.id as u64, fold as u64]),
            holdout: None,
        };
        let clf = train_linear_svm(&train_std, &labels, &svm)?;
        test_idx
            .iter()
            .map(|&i| {
                let x = scaler.transform(&compose(i));
                let (author, _) = clf.predict(&x);
                (corpus.emails[i].author.clone(), author.to_string(), 0u32)
            })
            .collect()
    };

    Ok(FoldOutcome {
        fold,
        decisions,
        _marker: std::marker::PhantomData,
    })
}

fn summarize<F: Scalar>(
    corpus: &Corpus,
    spec: ExperimentSpec,
    params: &EvalParams<F>,
    outcomes: Vec<FoldOutcome<F>>,
) -> Result<EvalReport<F>> {
    let mut confusion = ConfusionCounts::default();
    let mut folds = Vec::with_capacity(outcomes.len());
    let mut correct_total = 0usize;
    let mut n_total = 0usize;

    for outcome in outcomes {
        let test_size = outcome.decisions.len();
        let correct = outcome
            .decisions
            .iter()
            .filter(|(actual, pred, _)| actual == pred)
            .count();
        // Cluster rows over the test emails routed to each leaf.
        let mut per_leaf: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for (actual, pred, leaf) in &outcome.decisions {
            let e = per_leaf.entry(*leaf).or_insert((0, 0));
            e.0 += 1;
            if actual == pred {
                e.1 += 1;
            }
            confusion.record(&corpus.authors, actual, pred);
        }
        let cluster_rows: Vec<ClusterRow<F>> = per_leaf
            .into_iter()
            .map(|(leaf, (size, ok))| ClusterRow {
                leaf,
                size,
                accuracy: F::ratio(ok, size),
            })
            .collect();
        correct_total += correct;
        n_total += test_size;
        folds.push(FoldReport {
            fold: outcome.fold,
            test_size,
            correct,
            accuracy_pct: F::ratio(correct, test_size) * F::of_f64(100.0),
            cluster_rows,
        });
    }

    let aggregate_pct =
        folds.iter().map(|f| f.accuracy_pct).sum::<F>() / F::of_usize(folds.len());
    let report = EvalReport {
        experiment: spec.id,
        feature_set: spec.feature_set().to_string(),
        model: spec.model_name().to_string(),
        n_authors: corpus.authors.len(),
        n_emails: corpus.len(),
        seed: params.seed,
        folds,
        aggregate_pct,
        confusion,
        multiclass_correct: correct_total,
        multiclass_total: n_total,
    };
    report.validate()?;
    Ok(report)
}

/// Verdict of the unknown-author gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Known,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwOutcome<F> {
    pub verdict: Verdict,
    pub h: F,
    pub p_value: f64,
    /// Whether the exact permutation tail was used (pooled sample <= 12).
    pub exact: bool,
}

/// Minimum training emails the gate requires for the assigned author.
pub const KW_MIN_TRAINING_EMAILS: usize = 5;

/// Kruskal-Wallis gate: pools the email's selected content-feature values
/// against the assigned author's training emails and flags the email as
/// coming from an unknown author when the two rank distributions differ at
/// level `alpha`.
pub fn kruskal_wallis_unknown<F: Scalar>(
    model: &CcmModel<F>,
    assigned_author: &str,
    email: &CleanedEmail,
    alpha: f64,
) -> Result<KwOutcome<F>> {
    let width = model.content_width();
    if width == 0 {
        return Err(Error::Inconclusive(
            "model has no content features to compare".into(),
        ));
    }
    let profiles = model
        .author_profiles
        .get(assigned_author)
        .ok_or_else(|| Error::validation(format!("author {assigned_author:?} not in model")))?;
    if profiles.len() < KW_MIN_TRAINING_EMAILS {
        return Err(Error::Inconclusive(format!(
            "author {assigned_author:?} has {} training emails; the gate needs {}",
            profiles.len(),
            KW_MIN_TRAINING_EMAILS
        )));
    }

    let group1 = model.content_values(email)?;
    let mut group2: Vec<F> = Vec::with_capacity(profiles.len() * width);
    for p in profiles {
        group2.extend(p.to_dense(width));
    }

    let h = kruskal_wallis_h(&[group1.as_slice(), group2.as_slice()])?;
    let pooled = group1.len() + group2.len();
    let (p_value, exact) = if pooled <= 12 {
        (exact_permutation_p(&group1, &group2)?, true)
    } else {
        (chi_square_sf(h.into_f64(), 1.0), false)
    };
    Ok(KwOutcome {
        verdict: if p_value < alpha {
            Verdict::Unknown
        } else {
            Verdict::Known
        },
        h,
        p_value,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_synthetic_corpus;

    #[test]
    fn folds_are_disjoint_covering_and_stratified() {
        let c = generate_synthetic_corpus(10, 10, 1).unwrap();
        let assignment = stratified_folds(&c, 10, 42).unwrap();
        assert_eq!(assignment.len(), 100);
        // 10 authors x 10 emails over 10 folds: each fold gets exactly one
        // email per author.
        for fold in 0..10 {
            for author in &c.authors {
                let n = c
                    .emails
                    .iter()
                    .zip(&assignment)
                    .filter(|(e, &f)| &e.author == author && f == fold)
                    .count();
                assert_eq!(n, 1);
            }
        }
    }

    #[test]
    fn author_with_fewer_emails_than_folds() {
        let mut c = generate_synthetic_corpus(3, 12, 2).unwrap();
        // Trim one author down to 7 emails.
        let victim = c.authors[0].clone();
        let mut kept = 0;
        c.emails.retain(|e| {
            if e.author == victim {
                kept += 1;
                kept <= 7
            } else {
                true
            }
        });
        let assignment = stratified_folds(&c, 10, 3).unwrap();
        let mut fold_counts = vec![0usize; 10];
        for (e, &f) in c.emails.iter().zip(&assignment) {
            if e.author == victim {
                fold_counts[f] += 1;
            }
        }
        assert_eq!(fold_counts.iter().sum::<usize>(), 7);
        assert!(fold_counts.iter().all(|&n| n <= 1));
    }

    #[test]
    fn folds_validation_errors() {
        let c = generate_synthetic_corpus(2, 3, 1).unwrap();
        assert!(stratified_folds(&c, 1, 0).is_err());
        assert!(stratified_folds(&c, 7, 0).is_err());
    }

    #[test]
    fn accuracy_formula() {
        let all = ConfusionCounts {
            true_pos: 3,
            true_neg: 7,
            false_pos: 0,
            false_neg: 0,
        };
        assert_eq!(accuracy::<f64>(&all).unwrap(), 100.0);
        let none = ConfusionCounts {
            true_pos: 0,
            true_neg: 0,
            false_pos: 2,
            false_neg: 2,
        };
        assert_eq!(accuracy::<f64>(&none).unwrap(), 0.0);
        let three_of_four = ConfusionCounts {
            true_pos: 2,
            true_neg: 1,
            false_pos: 1,
            false_neg: 0,
        };
        assert_eq!(accuracy::<f64>(&three_of_four).unwrap(), 75.0);
        assert!(accuracy::<f64>(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn ccm_accuracy_formula() {
        let rows = [(60usize, 0.9f64), (40, 0.8)];
        assert!((ccm_accuracy::<f64>(&rows, 100).unwrap() - 86.0).abs() < 1e-12);
        let single = [(25usize, 0.72f64)];
        assert!((ccm_accuracy::<f64>(&single, 25).unwrap() - 72.0).abs() < 1e-12);
        assert!(ccm_accuracy::<f64>(&rows, 99).is_err());
    }

    #[test]
    fn ccm_accuracy_matches_pooled_counting() {
        // Pooled-count oracle: label 100 simulated decisions, group them
        // into clusters, and compare Eq-12 weighting with direct counting.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let k = rng.gen_range(1..6);
            let mut rows = Vec::new();
            let mut correct = 0usize;
            let mut n = 0usize;
            for _ in 0..k {
                let size = rng.gen_range(1..30);
                let ok = rng.gen_range(0..=size);
                rows.push((size, ok as f64 / size as f64));
                correct += ok;
                n += size;
            }
            let weighted = ccm_accuracy::<f64>(&rows, n).unwrap();
            let pooled = correct as f64 / n as f64 * 100.0;
            assert!((weighted - pooled).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_experiment_id_rejected() {
        let c = generate_synthetic_corpus(3, 6, 1).unwrap();
        let err = run_experiment_suite::<f64>(&c, &[9], &EvalParams::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn suite_reports_are_deterministic_and_valid() {
        let c = generate_synthetic_corpus(4, 12, 3).unwrap();
        let params = EvalParams {
            folds: 4,
            seed: 11,
            ..EvalParams::default()
        };
        let a = run_experiment_suite::<f64>(&c, &[1, 5], &params).unwrap();
        let b = run_experiment_suite::<f64>(&c, &[1, 5], &params).unwrap();
        assert_eq!(a, b);
        for report in &a {
            report.validate().unwrap();
            assert_eq!(report.folds.len(), 4);
            assert_eq!(report.multiclass_total, c.len());
        }
        assert_eq!(a[0].feature_set, "baseline");
        assert_eq!(a[0].model, "svm");
        assert_eq!(a[1].feature_set, "baseline+extended+content");
        assert_eq!(a[1].model, "ccm");
    }

    fn kw_model() -> (Corpus, CcmModel<f64>) {
        let corpus = generate_synthetic_corpus(4, 20, 17).unwrap();
        let config = StyloConfig::default();
        let cb = build_codebook::<f64>(&corpus, 1000, 3).unwrap();
        let schema = FeatureSchema::build(&config, true, Some(&cb));
        let model = train_ccm(&corpus, &schema, &cb, &config, &CcmHyper::default()).unwrap();
        (corpus, model)
    }

    #[test]
    fn kw_identical_email_is_known_with_zero_h() {
        let (corpus, model) = kw_model();
        let email = &corpus.emails[0];
        let out = kruskal_wallis_unknown(&model, &email.author, email, 0.05).unwrap();
        assert_eq!(out.verdict, Verdict::Known);
        // The email is one of the pooled training emails, so H is tiny.
        assert!(out.h < 3.0, "H = {}", out.h);
    }

    #[test]
    fn kw_needs_enough_training_emails() {
        let corpus = generate_synthetic_corpus(4, 3, 17).unwrap();
        let config = StyloConfig::default();
        let cb = build_codebook::<f64>(&corpus, 1000, 2).unwrap();
        let schema = FeatureSchema::build(&config, true, Some(&cb));
        let model = train_ccm(&corpus, &schema, &cb, &config, &CcmHyper::default()).unwrap();
        let email = &corpus.emails[0];
        let err = kruskal_wallis_unknown(&model, &email.author, email, 0.05).unwrap_err();
        assert!(matches!(err, Error::Inconclusive(_)));
    }
}
