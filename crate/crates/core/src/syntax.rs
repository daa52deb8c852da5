//! Extension probabilities between expressions: p(t|g) = C(t)/C(g) when `g`
//! sits contiguously inside `t`, zero otherwise. Computed from raw counts with
//! no smoothing, so chains compose exactly.

use num_rational::Ratio;

use crate::corpus::{Expression, GradedCorpus};
use crate::error::{Error, Result};
use crate::markov::{ExprSet, Kind, ProbMatrix};

pub type CountRatio = Ratio<u64>;

fn require_known(corpus: &GradedCorpus, g: &Expression) -> Result<u64> {
    match corpus.count(g) {
        0 => Err(Error::UnknownExpression(corpus.render(g))),
        c => Ok(c),
    }
}

/// p(t|g) as an exact ratio of counts.
pub fn extension_ratio(corpus: &GradedCorpus, g: &Expression, t: &Expression) -> Result<CountRatio> {
    let cg = require_known(corpus, g)?;
    if g == t {
        return Ok(Ratio::from_integer(1));
    }
    if g.len() >= t.len() || !t.contains(g) {
        return Ok(Ratio::from_integer(0));
    }
    Ok(Ratio::new(corpus.count(t), cg))
}

pub fn extension_prob(corpus: &GradedCorpus, g: &Expression, t: &Expression) -> Result<f64> {
    extension_ratio(corpus, g, t).map(ratio_to_f64)
}

pub fn ratio_to_f64(r: CountRatio) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Which side of the conditioning expression the new word is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// p(gw|g): the word follows.
    Forward,
    /// p(wg|g): the word precedes.
    Backward,
}

/// One-word extensions of an expression with their probabilities. Entries sum to at
/// most 1; the missing mass belongs to sentence ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionRow {
    pub source: Expression,
    pub direction: Direction,
    /// `(word id, p)` in word-id order, zero entries omitted.
    pub entries: Vec<(u32, CountRatio)>,
}

impl ExtensionRow {
    pub fn get(&self, word: u32) -> CountRatio {
        self.entries
            .iter()
            .find(|(w, _)| *w == word)
            .map(|(_, p)| *p)
            .unwrap_or_else(|| Ratio::from_integer(0))
    }

    pub fn total(&self) -> CountRatio {
        self.entries
            .iter()
            .fold(Ratio::from_integer(0), |acc, (_, p)| acc + p)
    }

    /// A 1 × |vocabulary| probabilistic matrix with the source as its only row.
    pub fn to_prob_matrix(&self, corpus: &GradedCorpus) -> Result<ProbMatrix> {
        let n = corpus.vocab().len();
        let mut row = vec![0.0; n];
        for &(w, p) in &self.entries {
            row[w as usize] = ratio_to_f64(p);
        }
        ProbMatrix::new(
            ExprSet::from_expressions("source", std::slice::from_ref(&self.source), corpus.vocab()),
            ExprSet::vocabulary(corpus.vocab()),
            nalgebra::DMatrix::from_row_slice(1, n, &row),
            Kind::Probabilistic,
        )
    }
}

fn distribution(corpus: &GradedCorpus, g: &Expression, direction: Direction) -> Result<ExtensionRow> {
    let cg = require_known(corpus, g)?;
    let mut entries = Vec::new();
    for w in 0..corpus.vocab().len() as u32 {
        let word = Expression::word(w);
        let t = match direction {
            Direction::Forward => g.concat(&word),
            Direction::Backward => word.concat(g),
        };
        let c = corpus.count(&t);
        if c > 0 {
            entries.push((w, Ratio::new(c, cg)));
        }
    }
    Ok(ExtensionRow {
        source: g.clone(),
        direction,
        entries,
    })
}

pub fn forward_distribution(corpus: &GradedCorpus, g: &Expression) -> Result<ExtensionRow> {
    distribution(corpus, g, Direction::Forward)
}

pub fn backward_distribution(corpus: &GradedCorpus, g: &Expression) -> Result<ExtensionRow> {
    distribution(corpus, g, Direction::Backward)
}
