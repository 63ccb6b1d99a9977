//! Email corpus loading, cleaning, and tokenization.
//!
//! Raw emails come from a JSONL file or an author-per-directory layout.
//! Cleaning keeps only sender-authored text: quoted replies, forwarded
//! payloads, and trailing signatures are stripped; forwards whose
//! sender-added text is empty or just "FYI" are dropped entirely.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header reference type of a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceType {
    #[default]
    None,
    Re,
    Fwd,
}

/// One message as loaded, before cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEmail {
    pub id: String,
    pub author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default)]
    pub reference_type: ReferenceType,
    pub body: String,
}

/// One message after cleaning: sender-authored body only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanedEmail {
    pub id: String,
    pub author: String,
    pub body: String,
    pub tokens: Vec<String>,
    /// Number of word tokens (punctuation tokens excluded).
    pub word_count: usize,
}

impl CleanedEmail {
    /// Re-wrap as a raw email. The referenced/forwarded content is already
    /// gone, so the reference type is `None`.
    pub fn as_raw(&self) -> RawEmail {
        RawEmail {
            id: self.id.clone(),
            author: self.author.clone(),
            subject: None,
            reference_type: ReferenceType::None,
            body: self.body.clone(),
        }
    }
}

/// A cleaned, labeled email collection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub emails: Vec<CleanedEmail>,
    /// Distinct author labels in first-appearance order.
    pub authors: Vec<String>,
}

impl Corpus {
    /// Clean raw emails (dropping deleted ones) and assemble a corpus.
    pub fn from_raw(raws: &[RawEmail]) -> Result<Corpus> {
        let emails: Vec<CleanedEmail> = raws.iter().filter_map(clean_email).collect();
        Corpus::from_cleaned(emails)
    }

    pub fn from_cleaned(emails: Vec<CleanedEmail>) -> Result<Corpus> {
        if emails.is_empty() {
            return Err(Error::validation(
                "corpus is empty after cleaning: no emails retained",
            ));
        }
        let mut authors = Vec::new();
        let mut seen = BTreeSet::new();
        for e in &emails {
            if e.author.is_empty() {
                return Err(Error::validation(format!(
                    "email {} has an empty author label",
                    e.id
                )));
            }
            if seen.insert(e.author.clone()) {
                authors.push(e.author.clone());
            }
        }
        Ok(Corpus { emails, authors })
    }

    pub fn len(&self) -> usize {
        self.emails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emails.is_empty()
    }

    /// Index of an author label in `authors`.
    pub fn author_index(&self, author: &str) -> Option<usize> {
        self.authors.iter().position(|a| a == author)
    }

    /// Per-email author indices, aligned with `emails`.
    pub fn label_indices(&self) -> Vec<usize> {
        self.emails
            .iter()
            .map(|e| self.author_index(&e.author).expect("author is registered"))
            .collect()
    }

    /// Sub-corpus of the given email indices (authors recomputed).
    pub fn subset(&self, indices: &[usize]) -> Result<Corpus> {
        let emails = indices.iter().map(|&i| self.emails[i].clone()).collect();
        Corpus::from_cleaned(emails)
    }

    /// Hex digest over ids, authors, and bodies; stable corpus identity for
    /// model files and codebook versions.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for e in &self.emails {
            h.update(e.id.as_bytes());
            h.update([0]);
            h.update(e.author.as_bytes());
            h.update([0]);
            h.update(e.body.as_bytes());
            h.update([0xff]);
        }
        hex_string(&h.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// On-disk layout of a raw corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `{id?, author, subject?, reference_type?, body}`.
    Jsonl,
    /// `corpus/<author>/<n>.txt`, body per file.
    AuthorDirs,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "author-dirs" => Ok(CorpusFormat::AuthorDirs),
            other => Err(Error::validation(format!(
                "unknown corpus format {other:?} (expected \"jsonl\" or \"author-dirs\")"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    #[serde(default)]
    id: Option<String>,
    author: String,
    #[serde(default)]
    subject: Option<String>,
    #[serde(default)]
    reference_type: ReferenceType,
    body: String,
}

/// Load raw emails from disk. Output order equals input record order; ids
/// default to the line number (JSONL) or `author/filename` (author dirs).
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<RawEmail>> {
    let raws = match format {
        CorpusFormat::Jsonl => load_jsonl(path)?,
        CorpusFormat::AuthorDirs => load_author_dirs(path)?,
    };
    let mut seen = BTreeSet::new();
    for r in &raws {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::validation(format!(
                "duplicate email id {:?} in {}",
                r.id,
                path.display()
            )));
        }
    }
    Ok(raws)
}

fn load_jsonl(path: &Path) -> Result<Vec<RawEmail>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let file_name = path.display().to_string();
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: file_name.clone(),
            line: lineno,
            message: e.to_string(),
        })?;
        if rec.author.is_empty() {
            return Err(Error::Parse {
                file: file_name.clone(),
                line: lineno,
                message: "field \"author\" must be non-empty".into(),
            });
        }
        out.push(RawEmail {
            id: rec.id.unwrap_or_else(|| lineno.to_string()),
            author: rec.author,
            subject: rec.subject,
            reference_type: rec.reference_type,
            body: rec.body,
        });
    }
    Ok(out)
}

fn load_author_dirs(path: &Path) -> Result<Vec<RawEmail>> {
    let mut authors: Vec<_> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?
        .into_iter()
        .filter(|d| d.path().is_dir())
        .map(|d| d.path())
        .collect();
    authors.sort();
    let mut out = Vec::new();
    for dir in authors {
        let author = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::validation(format!("non-UTF8 author directory under {}", path.display())))?
            .to_string();
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(&dir, e))?
            .into_iter()
            .map(|d| d.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        for file in files {
            let body = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            out.push(RawEmail {
                id: format!("{author}/{name}"),
                author: author.clone(),
                subject: None,
                reference_type: ReferenceType::None,
                body,
            });
        }
    }
    Ok(out)
}

fn on_wrote_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^On .+ wrote:$").unwrap())
}

fn original_message_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-{2,}\s*Original Message\s*-{2,}$").unwrap())
}

fn forwarded_message_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(-{2,}\s*Forwarded message\s*-{2,}|Begin forwarded message:?|From:\s.*)$")
            .unwrap()
    })
}

/// True for lines that mark referenced (quoted) text.
pub fn is_quote_marker(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('>') || original_message_re().is_match(line.trim()) || on_wrote_re().is_match(line.trim())
}

/// Remove referenced text from a reply body: every quoted (`>`) line, and
/// everything from the first reply marker to the end.
fn strip_quoted(body: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    let cut = lines
        .iter()
        .position(|l| original_message_re().is_match(l.trim()) || on_wrote_re().is_match(l.trim()))
        .unwrap_or(lines.len());
    lines[..cut]
        .iter()
        .filter(|l| !l.trim_start().starts_with('>'))
        .copied()
        .collect::<Vec<_>>()
        .join("\n")
}

/// Sender-added text before the first forwarded-payload marker.
fn forwarded_prefix(body: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    let cut = lines
        .iter()
        .position(|l| {
            forwarded_message_re().is_match(l.trim())
                || original_message_re().is_match(l.trim())
                || l.trim_start().starts_with('>')
        })
        .unwrap_or(lines.len());
    lines[..cut].join("\n")
}

/// Remove a trailing signature block: everything after the last delimiter
/// line (`--` or an em dash), or the smallest trailing block of at most 4
/// lines whose text contains the sender's name. The name rule needs at
/// least 3 characters, or short labels would match almost any text.
fn strip_signature(body: &str, author: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    if let Some(pos) = lines
        .iter()
        .rposition(|l| matches!(l.trim_end(), "--" | "\u{2014}"))
    {
        return lines[..pos].join("\n");
    }
    if author.chars().count() < 3 {
        return body.to_string();
    }
    // Ignore trailing blank lines, then try the shortest name-bearing suffix.
    let mut end = lines.len();
    while end > 0 && lines[end - 1].trim().is_empty() {
        end -= 1;
    }
    let author_lc = author.to_lowercase();
    for k in 1..=4usize.min(end) {
        let tail = lines[end - k..end].join("\n").to_lowercase();
        if tail.contains(&author_lc) {
            return lines[..end - k].join("\n");
        }
    }
    body.to_string()
}

/// Apply the cleaning rules. Returns `None` when the email is deleted: a
/// forward whose sender-added text is empty or equals "FYI".
pub fn clean_email(raw: &RawEmail) -> Option<CleanedEmail> {
    let body = raw.body.replace("\r\n", "\n").replace('\r', "\n");
    let body = match raw.reference_type {
        ReferenceType::Re => strip_quoted(&body),
        ReferenceType::Fwd => {
            let prefix = forwarded_prefix(&body);
            let t = prefix.trim();
            if t.is_empty() || t.eq_ignore_ascii_case("fyi") {
                return None;
            }
            prefix
        }
        ReferenceType::None => body,
    };
    // Signature stripping runs to a fixpoint so cleaning is idempotent.
    let mut body = body;
    loop {
        let next = strip_signature(&body, &raw.author);
        let next = next.trim_end().to_string();
        if next == body {
            break;
        }
        body = next;
    }
    let tokens = tokenize(&body);
    let word_count = tokens.iter().filter(|t| is_word_token(t)).count();
    Some(CleanedEmail {
        id: raw.id.clone(),
        author: raw.author.clone(),
        body,
        tokens,
        word_count,
    })
}

/// Cleaning variant for prediction inputs: never deletes. A forward with no
/// sender-added text yields an empty body instead.
pub fn clean_for_prediction(raw: &RawEmail) -> CleanedEmail {
    clean_email(raw).unwrap_or_else(|| CleanedEmail {
        id: raw.id.clone(),
        author: raw.author.clone(),
        body: String::new(),
        tokens: Vec::new(),
        word_count: 0,
    })
}

/// True when a character belongs to a word token.
fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// True when a token is a word token (letters/digits/apostrophes), as
/// opposed to a single-character punctuation token.
pub fn is_word_token(token: &str) -> bool {
    token.chars().next().is_some_and(is_word_char)
}

pub(crate) struct TokenSpan<'a> {
    pub text: &'a str,
    pub preceded_by_gap: bool,
}

pub(crate) fn token_spans(body: &str) -> Vec<TokenSpan<'_>> {
    let mut spans = Vec::new();
    let mut chars = body.char_indices().peekable();
    let mut gap = false;
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            gap = true;
            chars.next();
        } else if is_word_char(c) {
            let mut end = start + c.len_utf8();
            chars.next();
            while let Some(&(i, c2)) = chars.peek() {
                if is_word_char(c2) {
                    end = i + c2.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            spans.push(TokenSpan {
                text: &body[start..end],
                preceded_by_gap: gap,
            });
            gap = false;
        } else {
            let end = start + c.len_utf8();
            chars.next();
            spans.push(TokenSpan {
                text: &body[start..end],
                preceded_by_gap: gap,
            });
            gap = false;
        }
    }
    spans
}

/// Split a body into tokens: word tokens are maximal runs of
/// letters/digits/apostrophes (case preserved), every other non-whitespace
/// character becomes its own punctuation token.
pub fn tokenize(body: &str) -> Vec<String> {
    token_spans(body)
        .into_iter()
        .map(|s| s.text.to_string())
        .collect()
}

/// Lowercased alphabetic word tokens: the view content-term selection uses.
pub fn content_terms(tokens: &[String]) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !t.is_empty() && t.chars().all(|c| c.is_alphabetic()))
        .map(|t| t.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, author: &str, rt: ReferenceType, body: &str) -> RawEmail {
        RawEmail {
            id: id.into(),
            author: author.into(),
            subject: None,
            reference_type: rt,
            body: body.into(),
        }
    }

    #[test]
    fn tokenize_splits_words_and_punctuation() {
        assert_eq!(tokenize("Hello, world!"), vec!["Hello", ",", "world", "!"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("2:00 pm"), vec!["2", ":", "00", "pm"]);
        assert_eq!(tokenize("don't"), vec!["don't"]);
    }

    #[test]
    fn content_terms_are_lowercase_alphabetic() {
        let toks = tokenize("Hello, 2 worlds don't!");
        assert_eq!(content_terms(&toks), vec!["hello", "worlds"]);
    }

    #[test]
    fn fwd_with_fyi_prefix_is_deleted() {
        let e = raw(
            "1",
            "alice",
            ReferenceType::Fwd,
            "FYI\n---------- Forwarded message ----------\nFrom: Bob\noriginal",
        );
        assert!(clean_email(&e).is_none());
        let e2 = raw("2", "alice", ReferenceType::Fwd, "fyi");
        assert!(clean_email(&e2).is_none());
        let e3 = raw(
            "3",
            "alice",
            ReferenceType::Fwd,
            "\n-----Original Message-----\nFrom: Bob\nbody",
        );
        assert!(clean_email(&e3).is_none());
    }

    #[test]
    fn fwd_with_real_prefix_keeps_sender_text() {
        let e = raw(
            "1",
            "alice",
            ReferenceType::Fwd,
            "Please review the numbers below.\n-----Original Message-----\nFrom: Bob\npayload",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "Please review the numbers below.");
    }

    #[test]
    fn re_quoted_block_is_removed() {
        let e = raw(
            "1",
            "alice",
            ReferenceType::Re,
            "Thanks!\n> On Mon, Bob wrote:\n> original text",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "Thanks!");
    }

    #[test]
    fn re_marker_cuts_to_end() {
        let e = raw(
            "1",
            "alice",
            ReferenceType::Re,
            "Sounds good.\nOn Mon, Jan 2, 2006 at 3:04 PM, Bob wrote:\nquoted stuff\nmore quoted",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "Sounds good.");
        let e2 = raw(
            "2",
            "alice",
            ReferenceType::Re,
            "Agreed\n-----Original Message-----\nFrom: bob\nbody",
        );
        assert_eq!(clean_email(&e2).unwrap().body, "Agreed");
    }

    #[test]
    fn re_removes_interleaved_quote_lines() {
        let e = raw(
            "1",
            "alice",
            ReferenceType::Re,
            "> are you coming?\nYes.\n> at noon?\nAt noon.",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "Yes.\nAt noon.");
    }

    #[test]
    fn signature_after_delimiter_is_removed() {
        let e = raw(
            "1",
            "Alice Smith",
            ReferenceType::None,
            "See you.\n--\nAlice Smith",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "See you.");
    }

    #[test]
    fn trailing_name_block_is_removed() {
        let e = raw(
            "1",
            "Alice Smith",
            ReferenceType::None,
            "Meeting moved to three.\nBest,\nalice smith",
        );
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "Meeting moved to three.\nBest,");
    }

    #[test]
    fn empty_cleaned_body_is_retained() {
        let e = raw("1", "alice", ReferenceType::None, "");
        let c = clean_email(&e).unwrap();
        assert_eq!(c.body, "");
        assert_eq!(c.word_count, 0);
    }

    #[test]
    fn cleaning_is_idempotent() {
        let bodies = [
            "See you.\n--\nAlice Smith",
            "Tell Alice Smith hi\nAlice Smith",
            "Plain text, no signature",
            "a\nb\nc\nAlice Smith\nAlice Smith",
        ];
        for body in bodies {
            let e = raw("1", "Alice Smith", ReferenceType::None, body);
            if let Some(once) = clean_email(&e) {
                let twice = clean_email(&once.as_raw()).unwrap();
                assert_eq!(once.body, twice.body, "body {body:?}");
                assert_eq!(once.tokens, twice.tokens);
            }
        }
    }

    #[test]
    fn corpus_orders_authors_by_first_appearance() {
        let raws = vec![
            raw("1", "bob", ReferenceType::None, "x"),
            raw("2", "alice", ReferenceType::None, "y"),
            raw("3", "bob", ReferenceType::None, "z"),
        ];
        let c = Corpus::from_raw(&raws).unwrap();
        assert_eq!(c.authors, vec!["bob", "alice"]);
        assert_eq!(c.label_indices(), vec![0, 1, 0]);
    }

    #[test]
    fn jsonl_load_preserves_order_and_reports_bad_lines() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"author":"a","body":"one"}}"#).unwrap();
        writeln!(f, r#"{{"author":"b","body":"two","reference_type":"re"}}"#).unwrap();
        writeln!(f, r#"{{"id":"x","author":"a","body":"three"}}"#).unwrap();
        drop(f);
        let raws = load_corpus(&path, CorpusFormat::Jsonl).unwrap();
        assert_eq!(raws.len(), 3);
        assert_eq!(raws[0].id, "1");
        assert_eq!(raws[1].reference_type, ReferenceType::Re);
        assert_eq!(raws[2].id, "x");

        let bad = dir.path().join("bad.jsonl");
        let mut f = fs::File::create(&bad).unwrap();
        writeln!(f, r#"{{"author":"a","body":"one"}}"#).unwrap();
        writeln!(f, r#"{{"body":"missing author"}}"#).unwrap();
        drop(f);
        let err = load_corpus(&bad, CorpusFormat::Jsonl).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "error should name line 2: {msg}");
        assert!(msg.contains("author"), "error should name the field: {msg}");
    }

    #[test]
    fn jsonl_empty_file_gives_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        assert!(load_corpus(&path, CorpusFormat::Jsonl).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"id":"same","author":"a","body":"one"}}"#).unwrap();
        writeln!(f, r#"{{"id":"same","author":"b","body":"two"}}"#).unwrap();
        drop(f);
        assert!(matches!(
            load_corpus(&path, CorpusFormat::Jsonl),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn author_dirs_layout_loads_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for (author, n, body) in [("bob", "1.txt", "hi"), ("alice", "1.txt", "yo"), ("alice", "2.txt", "ok")] {
            let d = dir.path().join(author);
            fs::create_dir_all(&d).unwrap();
            fs::write(d.join(n), body).unwrap();
        }
        let raws = load_corpus(dir.path(), CorpusFormat::AuthorDirs).unwrap();
        let ids: Vec<_> = raws.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["alice/1.txt", "alice/2.txt", "bob/1.txt"]);
    }

    #[test]
    fn missing_path_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/corpus.jsonl"), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
