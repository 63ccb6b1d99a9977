//! Stylometric feature extraction.
//!
//! Three classic groups (lexical, structural, syntactic) plus an extended
//! group of habit features (ending punctuation, repeated words, time
//! format, greeting/farewell punctuation, capitalization). Content slots
//! are filled from a [`Codebook`] with tf-idf weights.
//!
//! Every ratio is normalized by its documented base — characters for
//! character features, words for word features — and degenerate bases
//! (empty body, no sentences) yield 0, never an error.

use std::collections::HashMap;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::content::Codebook;
use crate::corpus::{is_word_token, tokenize, CleanedEmail};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Characters counted as "special" in the lexical group. Disjoint from the
/// syntactic punctuation list so the two groups do not overlap.
pub const SPECIAL_CHARS: [char; 20] = [
    '~', '@', '#', '$', '%', '^', '&', '*', '_', '=', '+', '[', ']', '{', '}', '/', '\\', '|',
    '<', '>',
];

/// Punctuation marks whose normalized frequencies form the syntactic group.
pub const PUNCTUATION_MARKS: [char; 11] = ['.', ',', ';', ':', '?', '!', '\'', '"', '-', '(', ')'];

/// The five marks tracked by the ending-punctuation features, in index order.
pub const LAST_PUNCT_MARKS: [char; 5] = ['.', '?', ',', '!', ';'];

fn special_name(c: char) -> &'static str {
    match c {
        '~' => "tilde",
        '@' => "at",
        '#' => "hash",
        '$' => "dollar",
        '%' => "percent",
        '^' => "caret",
        '&' => "amp",
        '*' => "star",
        '_' => "underscore",
        '=' => "equals",
        '+' => "plus",
        '[' => "lbracket",
        ']' => "rbracket",
        '{' => "lbrace",
        '}' => "rbrace",
        '/' => "slash",
        '\\' => "backslash",
        '|' => "pipe",
        '<' => "lt",
        '>' => "gt",
        _ => unreachable!("not a special char"),
    }
}

fn punct_name(c: char) -> &'static str {
    match c {
        '.' => "period",
        ',' => "comma",
        ';' => "semicolon",
        ':' => "colon",
        '?' => "question",
        '!' => "exclam",
        '\'' => "apostrophe",
        '"' => "quote",
        '-' => "hyphen",
        '(' => "lparen",
        ')' => "rparen",
        _ => unreachable!("not a tracked punctuation mark"),
    }
}

const LAST_PUNCT_NAMES: [&str; 5] = ["period", "question", "comma", "exclam", "semicolon"];

/// Lexicon configuration: function words, greetings, farewells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyloConfig {
    pub function_words: Vec<String>,
    pub greetings: Vec<String>,
    pub farewells: Vec<String>,
}

fn parse_lexicon(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl Default for StyloConfig {
    fn default() -> Self {
        StyloConfig {
            function_words: parse_lexicon(include_str!("../data/function_words.txt")),
            greetings: parse_lexicon(include_str!("../data/greetings.txt")),
            farewells: parse_lexicon(include_str!("../data/farewells.txt")),
        }
    }
}

impl StyloConfig {
    /// Load lexicons from plain-text files (one entry per line, `#` comments);
    /// `None` falls back to the bundled list.
    pub fn from_files(
        function_words: Option<&Path>,
        greetings: Option<&Path>,
        farewells: Option<&Path>,
    ) -> Result<Self> {
        let mut cfg = StyloConfig::default();
        if let Some(p) = function_words {
            cfg.function_words = parse_lexicon(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
        }
        if let Some(p) = greetings {
            cfg.greetings = parse_lexicon(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
        }
        if let Some(p) = farewells {
            cfg.farewells = parse_lexicon(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
        }
        for (name, lex) in [
            ("function word", &cfg.function_words),
            ("greeting", &cfg.greetings),
            ("farewell", &cfg.farewells),
        ] {
            if lex.is_empty() {
                return Err(Error::validation(format!("{name} lexicon is empty")));
            }
        }
        Ok(cfg)
    }
}

/// Feature group tags, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Lexical,
    Structural,
    Syntactic,
    Extended,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub group: FeatureGroup,
}

/// Ordered, named feature layout. Fixed for a trained model's lifetime; the
/// content section is bound to the codebook it was built against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<FeatureEntry>,
    pub codebook_version: Option<String>,
}

impl FeatureSchema {
    /// Build a schema: lexical + structural + syntactic, optionally the
    /// extended group, optionally a content section bound to `codebook`.
    pub fn build<F: Scalar>(
        config: &StyloConfig,
        extended: bool,
        codebook: Option<&Codebook<F>>,
    ) -> FeatureSchema {
        let mut entries = Vec::new();
        let mut push = |name: String, group: FeatureGroup| {
            entries.push(FeatureEntry { name, group })
        };

        use FeatureGroup::*;
        push("char_count".into(), Lexical);
        push("digit_ratio".into(), Lexical);
        push("space_ratio".into(), Lexical);
        for c in 'a'..='z' {
            push(format!("char_freq_{c}"), Lexical);
        }
        for c in SPECIAL_CHARS {
            push(format!("special_freq_{}", special_name(c)), Lexical);
        }
        push("word_count".into(), Lexical);
        push("avg_word_len".into(), Lexical);
        push("avg_sentence_len".into(), Lexical);
        push("short_word_ratio".into(), Lexical);

        push("paragraph_count".into(), Structural);
        push("sentences_per_paragraph".into(), Structural);
        push("indent_tab_count".into(), Structural);
        push("indent_space_count".into(), Structural);
        for g in &config.greetings {
            push(format!("greeting_{}", sanitize(g)), Structural);
        }

        for w in &config.function_words {
            push(format!("fw_{}", sanitize(w)), Syntactic);
        }
        for c in PUNCTUATION_MARKS {
            push(format!("punct_freq_{}", punct_name(c)), Syntactic);
        }

        if extended {
            for f in &config.farewells {
                push(format!("farewell_{}", sanitize(f)), Extended);
            }
            for n in LAST_PUNCT_NAMES {
                push(format!("last_punct_{n}"), Extended);
            }
            for n in LAST_PUNCT_NAMES {
                push(format!("top_punct_{n}"), Extended);
            }
            push("mobile_signature".into(), Extended);
            push("repeated_word_run".into(), Extended);
            push("repeated_word_run_count".into(), Extended);
            push("time_digital".into(), Extended);
            push("time_spelled".into(), Extended);
            push("single_sentence".into(), Extended);
            push("questioning".into(), Extended);
            push("farewell_punct_before".into(), Extended);
            push("farewell_punct_after".into(), Extended);
            push("greeting_punct_after".into(), Extended);
            push("incomplete_sentence_punct_ratio".into(), Extended);
            push("sentence_cap_ratio".into(), Extended);
        }

        if let Some(cb) = codebook {
            for t in &cb.terms {
                push(format!("term_{}", t.term), Content);
            }
        }

        FeatureSchema {
            entries,
            codebook_version: codebook.map(|cb| cb.version.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_group(&self, group: FeatureGroup) -> bool {
        self.entries.iter().any(|e| e.group == group)
    }

    /// Contiguous index range of a group (empty range when absent).
    pub fn group_range(&self, group: FeatureGroup) -> Range<usize> {
        let start = self.entries.iter().position(|e| e.group == group);
        match start {
            None => 0..0,
            Some(s) => {
                let e = self.entries.iter().rposition(|e| e.group == group).unwrap();
                s..e + 1
            }
        }
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// One email's dense feature values, aligned to a [`FeatureSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<F> {
    pub email_id: String,
    pub values: Vec<F>,
}

/// One-hot over {. ? , ! ;} for the final non-whitespace character of the
/// body; all zeros when it is none of the five.
pub fn last_punctuation<F: Scalar>(body: &str) -> [F; 5] {
    let mut out = [F::zero(); 5];
    if let Some(c) = body.chars().rev().find(|c| !c.is_whitespace()) {
        if let Some(i) = LAST_PUNCT_MARKS.iter().position(|&m| m == c) {
            out[i] = F::one();
        }
    }
    out
}

struct Sentence {
    tokens: Vec<String>,
    words: usize,
    terminal: Option<char>,
    first_word_upper: Option<bool>,
}

impl Sentence {
    fn punct_tokens(&self) -> usize {
        self.tokens.len() - self.words
    }
}

struct TextStats {
    total_chars: usize,
    tokens: Vec<String>,
    words: Vec<String>,
    sentences: Vec<Sentence>,
    paragraphs: usize,
    indent_tab: usize,
    indent_space: usize,
    head_lines: Vec<String>,
    tail_lines: Vec<String>,
}

fn is_terminal(tok: &str) -> bool {
    matches!(tok, "." | "!" | "?")
}

fn analyze(body: &str) -> TextStats {
    let body = body.trim_end();
    let lines: Vec<&str> = body.lines().collect();

    // Paragraphs are blank-line separated runs of lines.
    let mut paragraphs: Vec<Vec<&str>> = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in &lines {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                paragraphs.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        paragraphs.push(cur);
    }

    let mut indent_tab = 0;
    let mut indent_space = 0;
    let mut sentences = Vec::new();
    for para in &paragraphs {
        match para[0].chars().next() {
            Some('\t') => indent_tab += 1,
            Some(' ') => indent_space += 1,
            _ => {}
        }
        let mut sent = Sentence {
            tokens: Vec::new(),
            words: 0,
            terminal: None,
            first_word_upper: None,
        };
        for tok in tokenize(&para.join("\n")) {
            let word = is_word_token(&tok);
            if word {
                if sent.words == 0 {
                    sent.first_word_upper =
                        Some(tok.chars().next().is_some_and(|c| c.is_uppercase()));
                }
                sent.words += 1;
            }
            let terminal = is_terminal(&tok);
            sent.tokens.push(tok.clone());
            if terminal && sent.words > 0 {
                sent.terminal = tok.chars().next();
                sentences.push(std::mem::replace(
                    &mut sent,
                    Sentence {
                        tokens: Vec::new(),
                        words: 0,
                        terminal: None,
                        first_word_upper: None,
                    },
                ));
            }
        }
        if sent.words > 0 {
            sentences.push(sent);
        }
    }

    let tokens = tokenize(body);
    let words: Vec<String> = tokens.iter().filter(|t| is_word_token(t)).cloned().collect();
    let nonblank: Vec<String> = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.to_string())
        .collect();
    let head_lines = nonblank.iter().take(2).cloned().collect();
    let tail_lines = nonblank
        .iter()
        .rev()
        .take(4)
        .rev()
        .cloned()
        .collect();

    TextStats {
        total_chars: body.chars().count(),
        tokens,
        words,
        sentences,
        paragraphs: paragraphs.len(),
        indent_tab,
        indent_space,
        head_lines,
        tail_lines,
    }
}

/// Lexical + structural + syntactic values, in schema order.
pub fn extract_stylometric<F: Scalar>(email: &CleanedEmail, config: &StyloConfig) -> Vec<F> {
    let body = email.body.trim_end();
    let st = analyze(body);
    let mut out: Vec<F> = Vec::new();

    // Lexical.
    let total = st.total_chars;
    out.push(F::of_usize(total));
    let digits = body.chars().filter(|c| c.is_ascii_digit()).count();
    out.push(F::ratio(digits, total));
    let spaces = body.chars().filter(|&c| c == ' ').count();
    out.push(F::ratio(spaces, total));
    let mut letter_counts = [0usize; 26];
    for c in body.chars() {
        if let Some(l) = c.to_lowercase().next() {
            if l.is_ascii_lowercase() {
                letter_counts[(l as u8 - b'a') as usize] += 1;
            }
        }
    }
    for n in letter_counts {
        out.push(F::ratio(n, total));
    }
    for sc in SPECIAL_CHARS {
        let n = body.chars().filter(|&c| c == sc).count();
        out.push(F::ratio(n, total));
    }
    let n_words = st.words.len();
    out.push(F::of_usize(n_words));
    let word_chars: usize = st.words.iter().map(|w| w.chars().count()).sum();
    out.push(F::ratio(word_chars, n_words));
    out.push(F::ratio(n_words, st.sentences.len()));
    let short = st.words.iter().filter(|w| w.chars().count() <= 3).count();
    out.push(F::ratio(short, n_words));

    // Structural.
    out.push(F::of_usize(st.paragraphs));
    out.push(F::ratio(st.sentences.len(), st.paragraphs));
    out.push(F::of_usize(st.indent_tab));
    out.push(F::of_usize(st.indent_space));
    let head_tokens = lower_word_tokens(&st.head_lines);
    for g in &config.greetings {
        let present = head_tokens.iter().any(|t| t == g);
        out.push(if present { F::one() } else { F::zero() });
    }

    // Syntactic.
    let mut word_counts: HashMap<String, usize> = HashMap::new();
    for w in &st.words {
        *word_counts.entry(w.to_lowercase()).or_default() += 1;
    }
    for fw in &config.function_words {
        let n = word_counts.get(fw).copied().unwrap_or(0);
        out.push(F::ratio(n, n_words));
    }
    for p in PUNCTUATION_MARKS {
        let n = body.chars().filter(|&c| c == p).count();
        out.push(F::ratio(n, total));
    }

    out
}

fn lower_word_tokens(lines: &[String]) -> Vec<String> {
    let text = lines.join("\n");
    tokenize(&text)
        .into_iter()
        .filter(|t| is_word_token(t))
        .map(|t| t.to_lowercase())
        .collect()
}

fn digital_time_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d{1,2}:\d{2}\b").unwrap())
}

fn spelled_time_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b\d{1,2}\s*o'?\s*clock\b").unwrap())
}

/// Occurrences of a (possibly multi-word) lexicon entry in a token window.
/// Returns (start, end) token index ranges of matches.
fn find_phrase(tokens: &[String], phrase: &str) -> Vec<(usize, usize)> {
    let parts: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
    if parts.is_empty() {
        return Vec::new();
    }
    let mut hits = Vec::new();
    for i in 0..tokens.len() {
        if i + parts.len() <= tokens.len()
            && (0..parts.len()).all(|j| tokens[i + j].to_lowercase() == parts[j])
        {
            hits.push((i, i + parts.len()));
        }
    }
    hits
}

/// Extended-group values, in schema order.
pub fn extract_extended<F: Scalar>(email: &CleanedEmail, config: &StyloConfig) -> Vec<F> {
    let body = email.body.trim_end();
    let st = analyze(body);
    let flag = |b: bool| if b { F::one() } else { F::zero() };
    let mut out: Vec<F> = Vec::new();

    // Farewell usage in the last 4 non-blank lines.
    let tail_tokens = tokenize(&st.tail_lines.join("\n"));
    for f in &config.farewells {
        out.push(flag(!find_phrase(&tail_tokens, f).is_empty()));
    }

    out.extend(last_punctuation::<F>(body));

    // Most frequent of the five tracked marks; ties resolved in mark order.
    let counts: Vec<usize> = LAST_PUNCT_MARKS
        .iter()
        .map(|&m| body.chars().filter(|&c| c == m).count())
        .collect();
    let best = counts.iter().copied().max().unwrap_or(0);
    let top = if best == 0 {
        None
    } else {
        counts.iter().position(|&n| n == best)
    };
    for i in 0..5 {
        out.push(flag(top == Some(i)));
    }

    let lower = body.to_lowercase();
    out.push(flag(
        lower.contains("sent from my ") || lower.contains("sent from mobile"),
    ));

    // Runs of >= 2 identical consecutive word tokens (punctuation skipped).
    let words_lc: Vec<String> = st.words.iter().map(|w| w.to_lowercase()).collect();
    let mut runs = 0usize;
    let mut i = 0;
    while i < words_lc.len() {
        let mut j = i + 1;
        while j < words_lc.len() && words_lc[j] == words_lc[i] {
            j += 1;
        }
        if j - i >= 2 {
            runs += 1;
        }
        i = j;
    }
    out.push(flag(runs > 0));
    out.push(F::of_usize(runs));

    out.push(flag(digital_time_re().is_match(body)));
    out.push(flag(spelled_time_re().is_match(body)));

    let single = st.sentences.len() == 1;
    out.push(flag(single));
    out.push(flag(single && st.sentences[0].terminal == Some('?')));

    // Punctuation adjacent to farewells / after greetings, within their
    // position windows (farewell: last 4 lines, greeting: first 2 lines).
    let mut before = false;
    let mut after = false;
    for f in &config.farewells {
        for (s, e) in find_phrase(&tail_tokens, f) {
            if s > 0 && !is_word_token(&tail_tokens[s - 1]) {
                before = true;
            }
            if e < tail_tokens.len() && !is_word_token(&tail_tokens[e]) {
                after = true;
            }
        }
    }
    out.push(flag(before));
    out.push(flag(after));

    let head_tokens = tokenize(&st.head_lines.join("\n"));
    let mut greet_after = false;
    for g in &config.greetings {
        for (_, e) in find_phrase(&head_tokens, g) {
            if e < head_tokens.len() && !is_word_token(&head_tokens[e]) {
                greet_after = true;
            }
        }
    }
    out.push(flag(greet_after));

    // Share of punctuation tokens sitting in sentences that never reached a
    // terminal mark.
    let total_punct: usize = st.sentences.iter().map(Sentence::punct_tokens).sum();
    let incomplete_punct: usize = st
        .sentences
        .iter()
        .filter(|s| s.terminal.is_none())
        .map(Sentence::punct_tokens)
        .sum();
    out.push(F::ratio(incomplete_punct, total_punct));

    let caps = st
        .sentences
        .iter()
        .filter(|s| s.first_word_upper == Some(true))
        .count();
    out.push(F::ratio(caps, st.sentences.len()));

    out
}

/// Concatenate the schema's groups for one email. The content section is
/// filled with tf-idf values of codebook terms present in the email.
pub fn assemble_vector<F: Scalar>(
    email: &CleanedEmail,
    schema: &FeatureSchema,
    codebook: Option<&Codebook<F>>,
    config: &StyloConfig,
) -> Result<FeatureVector<F>> {
    match (&schema.codebook_version, codebook) {
        (None, None) => {}
        (Some(v), Some(cb)) if *v == cb.version => {}
        (Some(_), None) | (None, Some(_)) => {
            return Err(Error::validation(
                "schema has a content section but no matching codebook was supplied (or vice versa)",
            ))
        }
        (Some(v), Some(cb)) => {
            return Err(Error::validation(format!(
                "schema is bound to codebook version {v} but got {}",
                cb.version
            )))
        }
    }

    let mut values = extract_stylometric::<F>(email, config);
    if schema.has_group(FeatureGroup::Extended) {
        values.extend(extract_extended::<F>(email, config));
    }
    if let Some(cb) = codebook {
        values.extend(cb.email_weights(email));
    }
    if values.len() != schema.len() {
        return Err(Error::validation(format!(
            "assembled {} values for a schema of width {}",
            values.len(),
            schema.len()
        )));
    }
    Ok(FeatureVector {
        email_id: email.id.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{clean_email, RawEmail, ReferenceType};

    fn email(body: &str) -> CleanedEmail {
        clean_email(&RawEmail {
            id: "t".into(),
            author: "zz-nobody".into(),
            subject: None,
            reference_type: ReferenceType::None,
            body: body.into(),
        })
        .unwrap()
    }

    fn cfg() -> StyloConfig {
        StyloConfig::default()
    }

    fn value(schema: &FeatureSchema, values: &[f64], name: &str) -> f64 {
        let i = schema
            .entries
            .iter()
            .position(|e| e.name == name)
            .unwrap_or_else(|| panic!("no feature {name}"));
        values[i]
    }

    fn baseline(body: &str) -> (FeatureSchema, Vec<f64>) {
        let schema = FeatureSchema::build::<f64>(&cfg(), false, None);
        let v = extract_stylometric::<f64>(&email(body), &cfg());
        assert_eq!(v.len(), schema.len());
        (schema, v)
    }

    fn extended(body: &str) -> (FeatureSchema, Vec<f64>) {
        let schema = FeatureSchema::build::<f64>(&cfg(), true, None);
        let e = email(body);
        let mut v = extract_stylometric::<f64>(&e, &cfg());
        v.extend(extract_extended::<f64>(&e, &cfg()));
        assert_eq!(v.len(), schema.len());
        (schema, v)
    }

    #[test]
    fn short_word_ratio_counts_words_of_at_most_three_chars() {
        let (s, v) = baseline("Hi Bob. See you at 2.");
        assert_eq!(value(&s, &v, "short_word_ratio"), 1.0);
        assert_eq!(value(&s, &v, "word_count"), 6.0);
    }

    #[test]
    fn digit_ratio_uses_character_base() {
        // 20 characters, 2 digits.
        let body = "ab cd ef gh ij kl 12";
        assert_eq!(body.chars().count(), 20);
        let (s, v) = baseline(body);
        assert!((value(&s, &v, "digit_ratio") - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_body_yields_all_zero_stylometrics() {
        let (_, v) = baseline("");
        assert!(v.iter().all(|&x| x == 0.0));
        let e = email("");
        let ext = extract_extended::<f64>(&e, &cfg());
        assert!(ext.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn last_punctuation_one_hot() {
        assert_eq!(last_punctuation::<f64>("the meeting."), [1., 0., 0., 0., 0.]);
        assert_eq!(last_punctuation::<f64>("ok?"), [0., 1., 0., 0., 0.]);
        assert_eq!(last_punctuation::<f64>("well,"), [0., 0., 1., 0., 0.]);
        assert_eq!(last_punctuation::<f64>("now!"), [0., 0., 0., 1., 0.]);
        assert_eq!(last_punctuation::<f64>("hmm;"), [0., 0., 0., 0., 1.]);
        assert_eq!(last_punctuation::<f64>("thanks"), [0., 0., 0., 0., 0.]);
        assert_eq!(last_punctuation::<f64>(""), [0., 0., 0., 0., 0.]);
        // Trailing whitespace is ignored.
        assert_eq!(last_punctuation::<f64>("done.  \n"), [1., 0., 0., 0., 0.]);
    }

    #[test]
    fn repeated_word_run_detected_across_punctuation() {
        let (s, v) = extended("yes, yes, yes");
        assert_eq!(value(&s, &v, "repeated_word_run"), 1.0);
        assert_eq!(value(&s, &v, "repeated_word_run_count"), 1.0);
        let (s2, v2) = extended("no repeats here at all");
        assert_eq!(value(&s2, &v2, "repeated_word_run"), 0.0);
    }

    #[test]
    fn time_format_flags() {
        let (s, v) = extended("Meet at 2:00");
        assert_eq!(value(&s, &v, "time_digital"), 1.0);
        assert_eq!(value(&s, &v, "time_spelled"), 0.0);
        let (s2, v2) = extended("Meet at 2 o'clock");
        assert_eq!(value(&s2, &v2, "time_digital"), 0.0);
        assert_eq!(value(&s2, &v2, "time_spelled"), 1.0);
    }

    #[test]
    fn single_sentence_question_flags() {
        let (s, v) = extended("Where are you?");
        assert_eq!(value(&s, &v, "single_sentence"), 1.0);
        assert_eq!(value(&s, &v, "questioning"), 1.0);
        let (s2, v2) = extended("Where are you? I am here.");
        assert_eq!(value(&s2, &v2, "single_sentence"), 0.0);
        assert_eq!(value(&s2, &v2, "questioning"), 0.0);
    }

    #[test]
    fn greeting_and_farewell_features() {
        let body = "Hi,\nthe report is ready for review today\nRegards,";
        let (s, v) = extended(body);
        assert_eq!(value(&s, &v, "greeting_hi"), 1.0);
        assert_eq!(value(&s, &v, "greeting_hello"), 0.0);
        assert_eq!(value(&s, &v, "greeting_punct_after"), 1.0);
        assert_eq!(value(&s, &v, "farewell_regards"), 1.0);
        assert_eq!(value(&s, &v, "farewell_punct_after"), 1.0);
        assert_eq!(value(&s, &v, "farewell_punct_before"), 0.0);
    }

    #[test]
    fn greeting_outside_first_two_lines_ignored() {
        let body = "one\ntwo\nhello there\nfour";
        let (s, v) = extended(body);
        assert_eq!(value(&s, &v, "greeting_hello"), 0.0);
    }

    #[test]
    fn sentence_capitalization_ratio() {
        let (s, v) = extended("Good point. we agree. Will do.");
        let got = value(&s, &v, "sentence_cap_ratio");
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn most_frequent_punctuation_one_hot_sums_to_at_most_one() {
        let (s, v) = extended("a, b, c. d!");
        let total: f64 = LAST_PUNCT_NAMES
            .iter()
            .map(|n| value(&s, &v, &format!("top_punct_{n}")))
            .sum();
        assert_eq!(total, 1.0);
        assert_eq!(value(&s, &v, "top_punct_comma"), 1.0);
        let (s2, v2) = extended("no marks here");
        let total2: f64 = LAST_PUNCT_NAMES
            .iter()
            .map(|n| value(&s2, &v2, &format!("top_punct_{n}")))
            .sum();
        assert_eq!(total2, 0.0);
    }

    #[test]
    fn mobile_signature_flag() {
        let (s, v) = extended("On my way.\nSent from my iPhone");
        assert_eq!(value(&s, &v, "mobile_signature"), 1.0);
    }

    #[test]
    fn trailing_whitespace_changes_nothing() {
        let a = extract_stylometric::<f64>(&email("Hello there. Bye."), &cfg());
        let b = extract_stylometric::<f64>(&email("Hello there. Bye.   \n\n  "), &cfg());
        assert_eq!(a, b);
        let a = extract_extended::<f64>(&email("Hello there. Bye."), &cfg());
        let b = extract_extended::<f64>(&email("Hello there. Bye. \t\n"), &cfg());
        assert_eq!(a, b);
    }

    #[test]
    fn structural_counts() {
        let body = "First para. Two sentences here.\n\n\tIndented second para.\n\n  spaced third";
        let (s, v) = baseline(body);
        assert_eq!(value(&s, &v, "paragraph_count"), 3.0);
        assert_eq!(value(&s, &v, "indent_tab_count"), 1.0);
        assert_eq!(value(&s, &v, "indent_space_count"), 1.0);
        let spp = value(&s, &v, "sentences_per_paragraph");
        assert!((spp - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn function_word_frequencies_normalized_by_words() {
        let (s, v) = baseline("the cat and the dog");
        assert!((value(&s, &v, "fw_the") - 0.4).abs() < 1e-12);
        assert!((value(&s, &v, "fw_and") - 0.2).abs() < 1e-12);
        assert_eq!(value(&s, &v, "fw_of"), 0.0);
    }

    #[test]
    fn incomplete_sentence_punct_ratio() {
        // Complete sentence holds "," and "."; the incomplete one holds ":".
        let body = "Yes, agreed.\n\nitems: pending";
        let (s, v) = extended(body);
        let got = value(&s, &v, "incomplete_sentence_punct_ratio");
        assert!((got - 1.0 / 3.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn schema_group_layout() {
        let schema = FeatureSchema::build::<f64>(&cfg(), true, None);
        use FeatureGroup::*;
        let lex = schema.group_range(Lexical);
        let st = schema.group_range(Structural);
        let sy = schema.group_range(Syntactic);
        let ex = schema.group_range(Extended);
        assert_eq!(lex.start, 0);
        assert_eq!(lex.end, st.start);
        assert_eq!(st.end, sy.start);
        assert_eq!(sy.end, ex.start);
        assert_eq!(ex.end, schema.len());
        assert!(!schema.has_group(Content));
        // Names unique.
        let mut names: Vec<_> = schema.entries.iter().map(|e| &e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), schema.len());
    }
}
