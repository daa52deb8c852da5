//! Tokenization and the graded expression store.
//!
//! A corpus is reduced to counts: every contiguous n-gram of length `1..=max_grade`
//! that stays inside one sentence, plus symmetric-window co-occurrence counts for
//! single words. Expressions never cross a sentence boundary; the end-of-sequence
//! marker is the grade-0 unit and never appears inside an expression.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved id of the end-of-sequence symbol. It lives outside the word id range.
pub const EOS_ID: u32 = u32::MAX;
pub const EOS_SURFACE: &str = "<eos>";

pub const DEFAULT_WINDOW_RADIUS: usize = 2;
pub const DEFAULT_MAX_GRADE: usize = 2 * DEFAULT_WINDOW_RADIUS + 1;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub id: u32,
}

/// Words in first-occurrence order; the position of a word is its id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for w in words {
            let w = w.into();
            if vocab.index.contains_key(&w) {
                return Err(Error::Snapshot(format!("duplicate vocabulary entry `{w}`")));
            }
            vocab.intern(&w);
        }
        Ok(vocab)
    }

    pub fn intern(&mut self, surface: &str) -> u32 {
        if let Some(&id) = self.index.get(surface) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(surface.to_owned());
        self.index.insert(surface.to_owned(), id);
        id
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> Option<&str> {
        if id == EOS_ID {
            return Some(EOS_SURFACE);
        }
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn eos(&self) -> Token {
        Token {
            surface: EOS_SURFACE.to_owned(),
            id: EOS_ID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub sentence_terminators: Vec<char>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            sentence_terminators: vec!['.', '!', '?'],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tokenized {
    pub vocab: Vocabulary,
    pub sentences: Vec<Vec<Token>>,
}

impl Tokenized {
    pub fn surfaces(&self) -> Vec<Vec<&str>> {
        self.sentences
            .iter()
            .map(|s| s.iter().map(|t| t.surface.as_str()).collect())
            .collect()
    }
}

/// Split on whitespace, end sentences at terminators, drop every other
/// non-alphanumeric character.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Tokenized {
    let mut out = Tokenized::default();
    let mut sentence: Vec<Token> = Vec::new();
    let mut word = String::new();

    fn flush(word: &mut String, sentence: &mut Vec<Token>, vocab: &mut Vocabulary) {
        if !word.is_empty() {
            let id = vocab.intern(word);
            sentence.push(Token {
                surface: std::mem::take(word),
                id,
            });
        }
    }

    for ch in text.chars() {
        if config.sentence_terminators.contains(&ch) {
            flush(&mut word, &mut sentence, &mut out.vocab);
            if !sentence.is_empty() {
                out.sentences.push(std::mem::take(&mut sentence));
            }
        } else if ch.is_whitespace() {
            flush(&mut word, &mut sentence, &mut out.vocab);
        } else if ch.is_alphanumeric() {
            if config.lowercase {
                word.extend(ch.to_lowercase());
            } else {
                word.push(ch);
            }
        }
    }
    flush(&mut word, &mut sentence, &mut out.vocab);
    if !sentence.is_empty() {
        out.sentences.push(sentence);
    }
    out
}

/// A contiguous run of word ids. The empty expression stands for `<eos>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Expression(pub Vec<u32>);

impl Expression {
    pub fn new(ids: Vec<u32>) -> Self {
        Self(ids)
    }

    pub fn eos() -> Self {
        Self(Vec::new())
    }

    pub fn word(id: u32) -> Self {
        Self(vec![id])
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    /// Grade ℓ(x): the number of words.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Contiguous containment `other ≤ self`.
    pub fn contains(&self, other: &Expression) -> bool {
        if other.len() > self.len() {
            return false;
        }
        if other.is_empty() {
            return true;
        }
        self.0.windows(other.len()).any(|w| w == other.0.as_slice())
    }

    pub fn concat(&self, other: &Expression) -> Expression {
        let mut ids = Vec::with_capacity(self.len() + other.len());
        ids.extend_from_slice(&self.0);
        ids.extend_from_slice(&other.0);
        Expression(ids)
    }

    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|id| id.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn from_key(key: &str) -> Result<Self> {
        key.split(' ')
            .map(|part| {
                part.parse::<u32>()
                    .map_err(|_| Error::Snapshot(format!("bad expression key `{key}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Expression)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub anchor: Expression,
    pub grade: Option<usize>,
    pub members: BTreeSet<Expression>,
}

impl Neighborhood {
    pub fn contains(&self, e: &Expression) -> bool {
        self.members.contains(e)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The graded expression space with occurrence counts. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedCorpus {
    vocab: Vocabulary,
    max_grade: usize,
    window_radius: usize,
    /// `counts[n - 1]` holds the grade-n expressions.
    counts: Vec<BTreeMap<Expression, u64>>,
    window_cooc: BTreeMap<(u32, u32), u64>,
}

impl GradedCorpus {
    pub fn build(sentences: &[Vec<Token>], max_grade: usize, window_radius: usize) -> Result<Self> {
        if max_grade < 1 {
            return Err(Error::InvalidParameter("max grade must be at least 1".into()));
        }
        if window_radius < 1 {
            return Err(Error::InvalidParameter("window radius must be at least 1".into()));
        }

        let mut words: Vec<Option<String>> = Vec::new();
        for t in sentences.iter().flatten() {
            let idx = t.id as usize;
            if t.id == EOS_ID {
                return Err(Error::InvalidParameter("<eos> cannot occur inside a sentence".into()));
            }
            if idx >= words.len() {
                words.resize(idx + 1, None);
            }
            match &words[idx] {
                Some(w) if *w != t.surface => {
                    return Err(Error::InvalidParameter(format!(
                        "token id {} used for both `{}` and `{}`",
                        t.id, w, t.surface
                    )))
                }
                _ => words[idx] = Some(t.surface.clone()),
            }
        }
        let vocab = Vocabulary::from_words(
            words
                .into_iter()
                .enumerate()
                .map(|(i, w)| w.unwrap_or_else(|| format!("<unused{i}>"))),
        )?;

        let mut counts = vec![BTreeMap::new(); max_grade];
        let mut window_cooc = BTreeMap::new();
        for sentence in sentences {
            let ids: Vec<u32> = sentence.iter().map(|t| t.id).collect();
            for start in 0..ids.len() {
                for n in 1..=max_grade.min(ids.len() - start) {
                    let e = Expression(ids[start..start + n].to_vec());
                    *counts[n - 1].entry(e).or_insert(0) += 1;
                }
                let lo = start.saturating_sub(window_radius);
                let hi = (start + window_radius).min(ids.len() - 1);
                for ctx in lo..=hi {
                    if ctx != start {
                        *window_cooc.entry((ids[start], ids[ctx])).or_insert(0) += 1;
                    }
                }
            }
        }

        Ok(Self {
            vocab,
            max_grade,
            window_radius,
            counts,
            window_cooc,
        })
    }

    pub fn from_text(
        text: &str,
        config: &TokenizerConfig,
        max_grade: usize,
        window_radius: usize,
    ) -> Result<Self> {
        let tokenized = tokenize(text, config);
        Self::build(&tokenized.sentences, max_grade, window_radius)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn max_grade(&self) -> usize {
        self.max_grade
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    /// Occurrence count C(e); zero for expressions not in the corpus.
    pub fn count(&self, e: &Expression) -> u64 {
        if e.is_empty() || e.len() > self.max_grade {
            return 0;
        }
        self.counts[e.len() - 1].get(e).copied().unwrap_or(0)
    }

    pub fn contains(&self, e: &Expression) -> bool {
        self.count(e) > 0
    }

    /// Stored expressions of one grade with their counts, in id order.
    pub fn grade(&self, n: usize) -> impl Iterator<Item = (&Expression, u64)> {
        let table = if n >= 1 && n <= self.max_grade {
            Some(&self.counts[n - 1])
        } else {
            None
        };
        table.into_iter().flat_map(|t| t.iter().map(|(e, &c)| (e, c)))
    }

    pub fn grade_size(&self, n: usize) -> usize {
        if n >= 1 && n <= self.max_grade {
            self.counts[n - 1].len()
        } else {
            0
        }
    }

    pub fn expressions(&self) -> impl Iterator<Item = (&Expression, u64)> {
        self.counts.iter().flat_map(|t| t.iter().map(|(e, &c)| (e, c)))
    }

    /// Total number of word tokens (the sum of grade-1 counts).
    pub fn token_count(&self) -> u64 {
        self.counts[0].values().sum()
    }

    pub fn word_count(&self, id: u32) -> u64 {
        self.count(&Expression::word(id))
    }

    /// X_ij: occurrences of word `context` within the window around an occurrence of `center`.
    pub fn cooc(&self, center: u32, context: u32) -> u64 {
        self.window_cooc.get(&(center, context)).copied().unwrap_or(0)
    }

    pub fn cooc_entries(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.window_cooc.iter().map(|(&k, &v)| (k, v))
    }

    /// Parse a space-separated phrase of known words.
    pub fn parse(&self, phrase: &str) -> Result<Expression> {
        let tokenized = tokenize(phrase, &TokenizerConfig {
            lowercase: true,
            sentence_terminators: Vec::new(),
        });
        let mut ids = Vec::new();
        for t in tokenized.sentences.iter().flatten() {
            ids.push(
                self.vocab
                    .id(&t.surface)
                    .ok_or_else(|| Error::UnknownWord(t.surface.clone()))?,
            );
        }
        Ok(Expression(ids))
    }

    pub fn render(&self, e: &Expression) -> String {
        if e.is_empty() {
            return EOS_SURFACE.to_owned();
        }
        e.0.iter()
            .map(|&id| self.vocab.surface(id).unwrap_or("?").to_owned())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// U_x, or U_x^n when `grade` is given: stored expressions containing `x`.
    pub fn neighborhood(&self, x: &Expression, grade: Option<usize>) -> Result<Neighborhood> {
        if !self.contains(x) {
            return Err(Error::UnknownExpression(self.render(x)));
        }
        let grades: Vec<usize> = match grade {
            Some(n) => vec![n],
            None => (x.len()..=self.max_grade).collect(),
        };
        let members = grades
            .into_iter()
            .flat_map(|n| self.grade(n))
            .filter(|(e, _)| e.contains(x))
            .map(|(e, _)| e.clone())
            .collect();
        Ok(Neighborhood {
            anchor: x.clone(),
            grade,
            members,
        })
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            format_version: SNAPSHOT_VERSION,
            max_grade: self.max_grade,
            window_radius: self.window_radius,
            vocab: self.vocab.words.clone(),
            counts: self
                .counts
                .iter()
                .map(|t| t.iter().map(|(e, &c)| (e.key(), c)).collect())
                .collect(),
            window_cooc: self
                .window_cooc
                .iter()
                .map(|(&(i, j), &c)| (format!("{i} {j}"), c))
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        if snapshot.format_version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported format version {}",
                snapshot.format_version
            )));
        }
        if snapshot.counts.len() != snapshot.max_grade {
            return Err(Error::Snapshot(format!(
                "{} count tables for max grade {}",
                snapshot.counts.len(),
                snapshot.max_grade
            )));
        }
        let vocab = Vocabulary::from_words(snapshot.vocab)?;
        let n_words = vocab.len() as u32;
        let mut counts = Vec::with_capacity(snapshot.max_grade);
        for (g, table) in snapshot.counts.into_iter().enumerate() {
            let mut parsed = BTreeMap::new();
            for (key, c) in table {
                let e = Expression::from_key(&key)?;
                if e.len() != g + 1 || e.0.iter().any(|&id| id >= n_words) || c == 0 {
                    return Err(Error::Snapshot(format!("bad entry `{key}` in grade {}", g + 1)));
                }
                parsed.insert(e, c);
            }
            counts.push(parsed);
        }
        let mut window_cooc = BTreeMap::new();
        for (key, c) in snapshot.window_cooc {
            let e = Expression::from_key(&key)?;
            match e.0.as_slice() {
                &[i, j] if i < n_words && j < n_words => {
                    window_cooc.insert((i, j), c);
                }
                _ => return Err(Error::Snapshot(format!("bad co-occurrence key `{key}`"))),
            }
        }
        Ok(Self {
            vocab,
            max_grade: snapshot.max_grade,
            window_radius: snapshot.window_radius,
            counts,
            window_cooc,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_snapshot(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of a [`GradedCorpus`]. Count tables are keyed by space-joined token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub max_grade: usize,
    pub window_radius: usize,
    pub vocab: Vec<String>,
    pub counts: Vec<BTreeMap<String, u64>>,
    pub window_cooc: BTreeMap<String, u64>,
}
