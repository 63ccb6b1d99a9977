//! Content features: tf-idf term weights and Info-Gain term selection.
//!
//! Terms are lowercased alphabetic word tokens. `tf(t,e) = f(t,e) / |e|`
//! where `|e|` is the email's word-token count; `idf(t) = log2(|E| / (1 +
//! df(t)))`; the codebook keeps the `top_k` surviving terms ranked by the
//! information gain of the author label given the term's presence.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{content_terms, hex_string, CleanedEmail, Corpus};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// A selected content term with its corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookTerm<F> {
    pub term: String,
    pub document_frequency: usize,
    /// Information gain of the author label given term presence, in bits.
    pub ig_score: F,
}

/// The selected content vocabulary, ordered by descending info gain
/// (ties broken lexicographically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook<F> {
    pub terms: Vec<CodebookTerm<F>>,
    /// Size of the corpus the codebook was built from (the `|E|` of idf).
    pub n_emails: usize,
    /// Hash of corpus fingerprint and selection parameters.
    pub version: String,
}

impl<F: Scalar> Codebook<F> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// tf-idf weight per codebook term for one email, in codebook order.
    /// Terms absent from the email contribute 0.
    pub fn email_weights(&self, email: &CleanedEmail) -> Vec<F> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in content_terms(&email.tokens) {
            *counts.entry(t).or_default() += 1;
        }
        self.terms
            .iter()
            .map(|t| {
                let f = counts.get(&t.term).copied().unwrap_or(0);
                if f == 0 {
                    F::zero()
                } else {
                    tfidf(f, email.word_count, self.n_emails, t.document_frequency)
                }
            })
            .collect()
    }
}

/// `tf(t,e) = f(t,e) / |e|`; 0 when the email has no words.
pub fn tf<F: Scalar>(count_in_email: usize, email_words: usize) -> F {
    F::ratio(count_in_email, email_words)
}

/// `idf(t) = log2(|E| / (1 + df(t)))`. Negative when `df + 1 > |E|`.
pub fn idf<F: Scalar>(n_emails: usize, document_frequency: usize) -> F {
    (F::of_usize(n_emails) / F::of_usize(1 + document_frequency)).log2()
}

/// `tfidf(t,e) = tf(t,e) * idf(t)`.
pub fn tfidf<F: Scalar>(
    count_in_email: usize,
    email_words: usize,
    n_emails: usize,
    document_frequency: usize,
) -> F {
    tf::<F>(count_in_email, email_words) * idf::<F>(n_emails, document_frequency)
}

struct TermStats {
    /// Total occurrences across the corpus.
    corpus_freq: usize,
    /// Email indices containing the term, ascending.
    postings: Vec<usize>,
}

fn collect_term_stats(corpus: &Corpus) -> BTreeMap<String, TermStats> {
    let mut stats: BTreeMap<String, TermStats> = BTreeMap::new();
    for (i, email) in corpus.emails.iter().enumerate() {
        let mut in_email: BTreeMap<String, usize> = BTreeMap::new();
        for t in content_terms(&email.tokens) {
            *in_email.entry(t).or_default() += 1;
        }
        for (term, n) in in_email {
            let e = stats.entry(term).or_insert(TermStats {
                corpus_freq: 0,
                postings: Vec::new(),
            });
            e.corpus_freq += n;
            e.postings.push(i);
        }
    }
    stats
}

/// Vocabulary (terms with corpus frequency >= `min_corpus_freq`, sorted) and
/// per-email term -> tf-idf maps over that vocabulary.
pub fn compute_tfidf<F: Scalar>(
    corpus: &Corpus,
    min_corpus_freq: usize,
) -> Result<(Vec<String>, Vec<BTreeMap<String, F>>)> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot compute tf-idf on an empty corpus"));
    }
    let stats = collect_term_stats(corpus);
    let n = corpus.len();
    let vocabulary: Vec<String> = stats
        .iter()
        .filter(|(_, s)| s.corpus_freq >= min_corpus_freq)
        .map(|(t, _)| t.clone())
        .collect();

    let mut weights: Vec<BTreeMap<String, F>> = vec![BTreeMap::new(); n];
    for (i, email) in corpus.emails.iter().enumerate() {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in content_terms(&email.tokens) {
            *counts.entry(t).or_default() += 1;
        }
        for (term, f) in counts {
            if let Some(s) = stats.get(&term) {
                if s.corpus_freq >= min_corpus_freq {
                    weights[i].insert(term, tfidf(f, email.word_count, n, s.postings.len()));
                }
            }
        }
    }
    Ok((vocabulary, weights))
}

/// Shannon entropy in bits of a count distribution; `0 log 0 = 0`.
pub fn entropy<F: Scalar>(counts: &[usize]) -> F {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return F::zero();
    }
    let mut h = F::zero();
    for &c in counts {
        if c > 0 {
            let p = F::ratio(c, total);
            h = h - p * p.log2();
        }
    }
    h
}

/// Info gain of the author label given one term's per-email values,
/// binarized to presence (`value != 0`). Returns bits.
pub fn info_gain<F: Scalar>(values: &[F], labels: &[&str]) -> Result<F> {
    if values.len() != labels.len() {
        return Err(Error::validation(format!(
            "info_gain: {} values vs {} labels",
            values.len(),
            labels.len()
        )));
    }
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    let m = ids.len();
    let label_ids: Vec<usize> = labels.iter().map(|l| ids[l]).collect();
    let present: Vec<bool> = values.iter().map(|v| *v != F::zero()).collect();
    Ok(info_gain_presence(&present, &label_ids, m))
}

fn info_gain_presence<F: Scalar>(present: &[bool], label_ids: &[usize], m: usize) -> F {
    let n = present.len();
    let mut author_counts = vec![0usize; m];
    let mut present_counts = vec![0usize; m];
    for (&p, &l) in present.iter().zip(label_ids) {
        author_counts[l] += 1;
        if p {
            present_counts[l] += 1;
        }
    }
    let absent_counts: Vec<usize> = author_counts
        .iter()
        .zip(&present_counts)
        .map(|(a, p)| a - p)
        .collect();
    let n_present: usize = present_counts.iter().sum();
    let n_absent = n - n_present;

    let h_a = entropy::<F>(&author_counts);
    let h_cond = F::ratio(n_present, n) * entropy::<F>(&present_counts)
        + F::ratio(n_absent, n) * entropy::<F>(&absent_counts);
    h_a - h_cond
}

/// Rank surviving terms by info gain and keep the best `top_k`.
pub fn build_codebook<F: Scalar>(
    corpus: &Corpus,
    top_k: usize,
    min_corpus_freq: usize,
) -> Result<Codebook<F>> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot build a codebook from an empty corpus"));
    }
    let stats = collect_term_stats(corpus);
    let label_ids = corpus.label_indices();
    let m = corpus.authors.len();
    let n = corpus.len();

    let surviving: Vec<(&String, &TermStats)> = stats
        .iter()
        .filter(|(_, s)| s.corpus_freq >= min_corpus_freq)
        .collect();

    let mut scored: Vec<CodebookTerm<F>> = surviving
        .par_iter()
        .map(|(term, s)| {
            let mut present = vec![false; n];
            for &i in &s.postings {
                present[i] = true;
            }
            CodebookTerm {
                term: (*term).clone(),
                document_frequency: s.postings.len(),
                ig_score: info_gain_presence(&present, &label_ids, m),
            }
        })
        .collect();

    scored.sort_by(|a, b| {
        b.ig_score
            .partial_cmp(&a.ig_score)
            .expect("info gain is finite")
            .then_with(|| a.term.cmp(&b.term))
    });
    scored.truncate(top_k);

    let mut hasher = Sha256::new();
    hasher.update(corpus.fingerprint().as_bytes());
    hasher.update(format!(":{top_k}:{min_corpus_freq}").as_bytes());

    Ok(Codebook {
        terms: scored,
        n_emails: n,
        version: hex_string(&hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RawEmail, ReferenceType};

    fn corpus_of(bodies: &[(&str, &str)]) -> Corpus {
        let raws: Vec<RawEmail> = bodies
            .iter()
            .enumerate()
            .map(|(i, (author, body))| RawEmail {
                id: format!("e{i}"),
                author: author.to_string(),
                subject: None,
                reference_type: ReferenceType::None,
                body: body.to_string(),
            })
            .collect();
        Corpus::from_raw(&raws).unwrap()
    }

    #[test]
    fn tf_idf_arithmetic() {
        assert!((tf::<f64>(2, 10) - 0.2).abs() < 1e-12);
        assert!((idf::<f64>(100, 99) - 0.0).abs() < 1e-12);
        // tf = 0.2, |E| = 8, df = 1 -> 0.2 * log2(8/2) = 0.4
        assert!((tfidf::<f64>(2, 10, 8, 1) - 0.4).abs() < 1e-12);
        // Email with no words: tf contributions are 0, no division.
        assert_eq!(tf::<f64>(0, 0), 0.0);
    }

    #[test]
    fn idf_non_increasing_in_df() {
        let n = 50;
        let mut prev = f64::INFINITY;
        for df in 0..=n {
            let v = idf::<f64>(n, df);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn min_corpus_freq_excludes_rare_terms() {
        // "rare" appears twice in the whole corpus -> excluded at threshold 3.
        let c = corpus_of(&[
            ("a", "common words common rare"),
            ("b", "common words common rare"),
            ("b", "common words common"),
        ]);
        let (vocab, _) = compute_tfidf::<f64>(&c, 3).unwrap();
        assert!(vocab.contains(&"common".to_string()));
        assert!(vocab.contains(&"words".to_string()));
        assert!(!vocab.contains(&"rare".to_string()));
    }

    #[test]
    fn identical_emails_have_negative_idf_and_zero_ig() {
        let c = corpus_of(&[("a", "same text"), ("a", "same text"), ("b", "same text"), ("b", "same text")]);
        let (vocab, weights) = compute_tfidf::<f64>(&c, 1).unwrap();
        let n = c.len();
        let expected = (n as f64 / (1 + n) as f64).log2();
        assert!(expected < 0.0);
        for term in &vocab {
            let w = weights[0][term];
            let tf = 1.0 / 2.0;
            assert!((w - tf * expected).abs() < 1e-12);
        }
        let cb = build_codebook::<f64>(&c, 10, 1).unwrap();
        for t in &cb.terms {
            assert!(t.ig_score.abs() < 1e-12);
        }
    }

    #[test]
    fn info_gain_perfect_split_is_one_bit() {
        // 2 authors x 4 emails; term present exactly in author 1's emails.
        let values = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b"];
        let ig = info_gain::<f64>(&values, &labels).unwrap();
        assert!((ig - 1.0).abs() < 1e-12);
    }

    #[test]
    fn info_gain_uninformative_term_is_zero() {
        let values = [0.3; 8];
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b"];
        let ig = info_gain::<f64>(&values, &labels).unwrap();
        assert!(ig.abs() < 1e-12);
    }

    #[test]
    fn info_gain_mixed_presence() {
        // 2 authors x 4 emails; present in 3 of author 1's and 1 of author
        // 2's. Frozen from the probability-table oracle.
        let values = [1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b"];
        let ig = info_gain::<f64>(&values, &labels).unwrap();
        assert!((ig - 0.188_721_875_540_867_2).abs() < 1e-12, "{ig}");
    }

    #[test]
    fn info_gain_length_mismatch_is_error() {
        assert!(info_gain::<f64>(&[1.0], &["a", "b"]).is_err());
    }

    #[test]
    fn codebook_keeps_top_k_with_lexicographic_ties() {
        // All terms appear >= 3 times; two authors with fully disjoint
        // vocabulary give every term the same (maximal) info gain, so the
        // tiebreak is purely lexicographic.
        let c = corpus_of(&[
            ("a", "zebra apple zebra apple zebra apple"),
            ("a", "zebra apple"),
            ("b", "mango kiwi mango kiwi mango kiwi"),
            ("b", "mango kiwi"),
        ]);
        let cb = build_codebook::<f64>(&c, 3, 3).unwrap();
        let terms: Vec<&str> = cb.terms.iter().map(|t| t.term.as_str()).collect();
        assert_eq!(terms, vec!["apple", "kiwi", "mango"]);
        for w in cb.terms.windows(2) {
            assert!(w[0].ig_score >= w[1].ig_score);
        }
    }

    #[test]
    fn codebook_smaller_vocabulary_keeps_everything() {
        let c = corpus_of(&[
            ("a", "alpha beta alpha beta alpha beta"),
            ("b", "alpha beta alpha beta"),
        ]);
        let cb = build_codebook::<f64>(&c, 1000, 3).unwrap();
        assert_eq!(cb.len(), 2);
    }

    #[test]
    fn codebook_empty_when_nothing_survives() {
        let c = corpus_of(&[("a", "one two"), ("b", "three four")]);
        let cb = build_codebook::<f64>(&c, 1000, 3).unwrap();
        assert!(cb.is_empty());
    }

    #[test]
    fn codebook_is_permutation_invariant() {
        let emails = [
            ("a", "alpha beta gamma alpha"),
            ("b", "delta beta delta beta"),
            ("a", "alpha gamma gamma alpha"),
            ("b", "delta delta beta gamma"),
        ];
        let c1 = corpus_of(&emails);
        let mut rev = emails;
        rev.reverse();
        let c2 = corpus_of(&rev);
        let cb1 = build_codebook::<f64>(&c1, 10, 2).unwrap();
        let cb2 = build_codebook::<f64>(&c2, 10, 2).unwrap();
        let t1: Vec<_> = cb1.terms.iter().map(|t| (&t.term, t.document_frequency)).collect();
        let t2: Vec<_> = cb2.terms.iter().map(|t| (&t.term, t.document_frequency)).collect();
        assert_eq!(t1, t2);
        for (a, b) in cb1.terms.iter().zip(&cb2.terms) {
            assert!((a.ig_score - b.ig_score).abs() < 1e-12);
        }
    }

    #[test]
    fn email_weights_align_with_codebook_order() {
        let c = corpus_of(&[
            ("a", "alpha beta alpha beta alpha beta"),
            ("b", "alpha beta alpha beta"),
        ]);
        let cb = build_codebook::<f64>(&c, 1000, 3).unwrap();
        let w = cb.email_weights(&c.emails[0]);
        assert_eq!(w.len(), cb.len());
        // Both terms present: tf = 3/6, idf = log2(2/3) < 0.
        for x in &w {
            assert!((x - 0.5 * (2.0f64 / 3.0).log2()).abs() < 1e-12);
        }
    }
}
