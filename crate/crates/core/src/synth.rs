//! Deterministic synthetic email corpus.
//!
//! Each author gets a style: a private 50-word topic vocabulary (pseudo-words
//! over a shared syllable inventory, globally unique), a personal frequency
//! profile over a shared function-word pool, and habits for greetings,
//! farewells, terminal punctuation, sentence length, capitalization, time
//! format, and mobile signatures. Everything is drawn from the seed; the
//! same arguments always produce byte-identical corpora.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RawEmail, ReferenceType};
use crate::error::Result;
use crate::seeding::derive_seed;
use crate::stylometry::StyloConfig;

const TOPIC_WORDS_PER_AUTHOR: usize = 50;
const FILLER_WORDS: [&str; 50] = [
    "meeting", "project", "report", "update", "team", "plan", "call", "note", "week", "month",
    "review", "send", "check", "look", "work", "start", "finish", "good", "new", "old", "item",
    "list", "next", "last", "issue", "case", "point", "part", "side", "line", "page", "file",
    "name", "data", "form", "task", "goal", "step", "talk", "word", "number", "order", "group",
    "change", "result", "today", "morning", "afternoon", "question", "answer",
];

/// Per-author generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStyle {
    pub author: String,
    pub greeting: Option<String>,
    pub greeting_prob: f64,
    pub greeting_comma: bool,
    pub farewell: Option<String>,
    pub farewell_prob: f64,
    pub farewell_comma: bool,
    /// Weights over terminal marks `. ! ?` for non-final sentences.
    pub terminal_weights: [f64; 3],
    /// Probability the final sentence carries no terminal mark.
    pub final_none_prob: f64,
    /// Frequency profile over the shared function-word pool.
    pub function_word_weights: Vec<f64>,
    /// Private topic vocabulary; disjoint across authors.
    pub topic_vocab: Vec<String>,
    pub topic_weights: Vec<f64>,
    /// Fraction of words drawn from the topic vocabulary.
    pub content_ratio: f64,
    pub mean_sentence_len: f64,
    pub mean_sentences: f64,
    pub capitalization_prob: f64,
    pub mobile_signature_prob: f64,
    /// Habitual time mention: digital ("2:30") or spelled ("2 o'clock").
    pub time_style: Option<(bool, f64)>,
    pub repeat_word_prob: f64,
    pub multi_paragraph_prob: f64,
}

impl SyntheticStyle {
    /// Number of parameters in which two styles differ.
    pub fn differing_parameters(&self, other: &SyntheticStyle) -> usize {
        let mut n = 0;
        n += usize::from(self.greeting != other.greeting);
        n += usize::from(self.greeting_prob != other.greeting_prob);
        n += usize::from(self.greeting_comma != other.greeting_comma);
        n += usize::from(self.farewell != other.farewell);
        n += usize::from(self.farewell_prob != other.farewell_prob);
        n += usize::from(self.farewell_comma != other.farewell_comma);
        n += usize::from(self.terminal_weights != other.terminal_weights);
        n += usize::from(self.final_none_prob != other.final_none_prob);
        n += usize::from(self.function_word_weights != other.function_word_weights);
        n += usize::from(self.topic_vocab != other.topic_vocab);
        n += usize::from(self.topic_weights != other.topic_weights);
        n += usize::from(self.content_ratio != other.content_ratio);
        n += usize::from(self.mean_sentence_len != other.mean_sentence_len);
        n += usize::from(self.mean_sentences != other.mean_sentences);
        n += usize::from(self.capitalization_prob != other.capitalization_prob);
        n += usize::from(self.mobile_signature_prob != other.mobile_signature_prob);
        n += usize::from(self.time_style != other.time_style);
        n += usize::from(self.repeat_word_prob != other.repeat_word_prob);
        n += usize::from(self.multi_paragraph_prob != other.multi_paragraph_prob);
        n
    }
}

/// The shared pool styles draw non-topic words from: the bundled function
/// words plus common filler nouns.
pub fn shared_word_pool() -> Vec<String> {
    let mut pool = StyloConfig::default().function_words;
    pool.extend(FILLER_WORDS.iter().map(|s| s.to_string()));
    pool
}

fn syllables() -> Vec<String> {
    let consonants = ['b', 'c', 'd', 'f', 'g', 'h', 'j', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'w', 'z'];
    let vowels = ['a', 'e', 'i', 'o', 'u'];
    let mut out = Vec::with_capacity(consonants.len() * vowels.len());
    for c in consonants {
        for v in vowels {
            out.push(format!("{c}{v}"));
        }
    }
    out
}

/// Draw per-author styles. Author `i`'s style depends only on (seed, i), so
/// growing the corpus keeps earlier authors' styles fixed.
pub fn generate_styles(n_authors: usize, seed: u64) -> Vec<SyntheticStyle> {
    let syl = syllables();
    let pool = shared_word_pool();
    let mut used: std::collections::BTreeSet<String> = pool.iter().cloned().collect();
    let greetings = StyloConfig::default().greetings;
    let farewells = StyloConfig::default().farewells;

    (0..n_authors)
        .map(|a| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3, a as u64]));
            let mut topic_vocab = Vec::with_capacity(TOPIC_WORDS_PER_AUTHOR);
            while topic_vocab.len() < TOPIC_WORDS_PER_AUTHOR {
                let w = format!(
                    "{}{}{}",
                    syl[rng.gen_range(0..syl.len())],
                    syl[rng.gen_range(0..syl.len())],
                    syl[rng.gen_range(0..syl.len())]
                );
                if used.insert(w.clone()) {
                    topic_vocab.push(w);
                }
            }
            // Mild per-author perturbation of a shared Zipf profile: strong
            // enough for stylometry to work with, weak enough that content
            // features still add measurable accuracy.
            let sigma = 0.25;
            let lognorm: Normal<f64> = Normal::new(0.0, sigma).unwrap();
            let function_word_weights: Vec<f64> = (0..pool.len())
                .map(|r| (1.0 / (r as f64 + 3.0)) * lognorm.sample(&mut rng).exp())
                .collect();
            let topic_weights: Vec<f64> = (0..TOPIC_WORDS_PER_AUTHOR)
                .map(|r| 1.0 / (r as f64 + 2.0))
                .collect();

            SyntheticStyle {
                author: format!("author{a:02}"),
                greeting: if rng.gen_bool(0.85) {
                    Some(greetings[rng.gen_range(0..greetings.len())].clone())
                } else {
                    None
                },
                greeting_prob: rng.gen_range(0.4..0.7),
                greeting_comma: rng.gen_bool(0.5),
                farewell: if rng.gen_bool(0.85) {
                    Some(farewells[rng.gen_range(0..farewells.len())].clone())
                } else {
                    None
                },
                farewell_prob: rng.gen_range(0.4..0.7),
                farewell_comma: rng.gen_bool(0.5),
                terminal_weights: [rng.gen_range(4.0..8.0), rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5)],
                final_none_prob: rng.gen_range(0.0..0.25),
                function_word_weights,
                topic_vocab,
                topic_weights,
                content_ratio: rng.gen_range(0.2..0.4),
                mean_sentence_len: rng.gen_range(10.0..14.0),
                mean_sentences: rng.gen_range(7.0..11.0),
                capitalization_prob: rng.gen_range(0.25..0.75),
                mobile_signature_prob: if rng.gen_bool(0.35) {
                    rng.gen_range(0.2..0.7)
                } else {
                    0.0
                },
                time_style: if rng.gen_bool(0.4) {
                    Some((rng.gen_bool(0.5), rng.gen_range(0.1..0.4)))
                } else {
                    None
                },
                repeat_word_prob: rng.gen_range(0.0..0.15),
                multi_paragraph_prob: rng.gen_range(0.0..0.6),
            }
        })
        .collect()
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// One email body from a style and an email-specific RNG.
pub fn synthetic_body(style: &SyntheticStyle, pool: &[String], rng: &mut ChaCha8Rng) -> String {
    let fw_dist = WeightedIndex::new(&style.function_word_weights).expect("positive weights");
    let topic_dist = WeightedIndex::new(&style.topic_weights).expect("positive weights");
    let sent_count_dist = Normal::new(style.mean_sentences, 1.5).unwrap();
    let sent_len_dist = Normal::new(style.mean_sentence_len, 2.5).unwrap();

    let n_sentences = (sent_count_dist.sample(rng).round() as i64).max(1) as usize;
    let mut sentences: Vec<String> = Vec::with_capacity(n_sentences);
    for s in 0..n_sentences {
        let len = (sent_len_dist.sample(rng).round() as i64).max(2) as usize;
        let mut words: Vec<String> = Vec::with_capacity(len);
        while words.len() < len {
            let w = if rng.gen_bool(style.content_ratio) {
                style.topic_vocab[topic_dist.sample(rng)].clone()
            } else {
                pool[fw_dist.sample(rng)].clone()
            };
            if !words.is_empty() && rng.gen_bool(style.repeat_word_prob) {
                let prev = words.last().unwrap().clone();
                words.push(prev);
                continue;
            }
            words.push(w);
        }
        if let Some((digital, prob)) = style.time_style {
            if rng.gen_bool(prob) {
                let hour = rng.gen_range(1..12);
                let stamp = if digital {
                    format!("{hour}:{:02}", rng.gen_range(0..60))
                } else {
                    format!("{hour} o'clock")
                };
                let at = rng.gen_range(0..=words.len());
                words.insert(at, stamp);
            }
        }
        if rng.gen_bool(style.capitalization_prob) {
            words[0] = capitalize(&words[0]);
        }
        let is_last = s + 1 == n_sentences;
        let terminal = if is_last && rng.gen_bool(style.final_none_prob) {
            None
        } else {
            let marks = ['.', '!', '?'];
            let dist = WeightedIndex::new(style.terminal_weights).expect("positive weights");
            Some(marks[dist.sample(rng)])
        };
        let mut sentence = words.join(" ");
        if let Some(t) = terminal {
            sentence.push(t);
        }
        sentences.push(sentence);
    }

    // Group sentences into one or two paragraphs.
    let mut paragraphs: Vec<String> = Vec::new();
    if sentences.len() >= 4 && rng.gen_bool(style.multi_paragraph_prob) {
        let cut = rng.gen_range(1..sentences.len());
        paragraphs.push(sentences[..cut].join(" "));
        paragraphs.push(sentences[cut..].join(" "));
    } else {
        paragraphs.push(sentences.join(" "));
    }

    let mut parts: Vec<String> = Vec::new();
    if let Some(g) = &style.greeting {
        if rng.gen_bool(style.greeting_prob) {
            let mut line = capitalize(g);
            if style.greeting_comma {
                line.push(',');
            }
            parts.push(line);
        }
    }
    parts.push(paragraphs.join("\n\n"));
    if let Some(f) = &style.farewell {
        if rng.gen_bool(style.farewell_prob) {
            let mut line = capitalize(f);
            if style.farewell_comma {
                line.push(',');
            }
            parts.push(line);
        }
    }
    if style.mobile_signature_prob > 0.0 && rng.gen_bool(style.mobile_signature_prob) {
        parts.push("Sent from my phone".to_string());
    }
    parts.join("\n")
}

/// Raw emails for `n_authors x emails_per_author`, grouped by author.
pub fn generate_synthetic_raws(
    n_authors: usize,
    emails_per_author: usize,
    seed: u64,
) -> Vec<RawEmail> {
    let styles = generate_styles(n_authors, seed);
    let pool = shared_word_pool();
    let mut out = Vec::with_capacity(n_authors * emails_per_author);
    for (a, style) in styles.iter().enumerate() {
        for e in 0..emails_per_author {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4, a as u64, e as u64]));
            out.push(RawEmail {
                id: format!("a{a:02}e{e:04}"),
                author: style.author.clone(),
                subject: None,
                reference_type: ReferenceType::None,
                body: synthetic_body(style, &pool, &mut rng),
            });
        }
    }
    out
}

/// A fresh email from one author's style, outside the training index range.
pub fn synthetic_email(style: &SyntheticStyle, author_idx: usize, email_idx: usize, seed: u64) -> RawEmail {
    let pool = shared_word_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[4, author_idx as u64, email_idx as u64],
    ));
    RawEmail {
        id: format!("a{author_idx:02}e{email_idx:04}"),
        author: style.author.clone(),
        subject: None,
        reference_type: ReferenceType::None,
        body: synthetic_body(style, &pool, &mut rng),
    }
}

/// Generate and clean a synthetic corpus.
pub fn generate_synthetic_corpus(
    n_authors: usize,
    emails_per_author: usize,
    seed: u64,
) -> Result<Corpus> {
    Corpus::from_raw(&generate_synthetic_raws(n_authors, emails_per_author, seed))
}
