//! Same-grade similarity through extension probabilities, and completion of a
//! two-sided context by its most probable middle word.

use num_rational::Ratio;

use crate::corpus::{Expression, GradedCorpus};
use crate::error::{Error, Result};
use crate::markov::{Element, ExprSet, Kind, ProbMatrix, STOCHASTIC_TOL};
use crate::syntax::{extension_ratio, ratio_to_f64, CountRatio};

/// Which contexts g the similarity infimum ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContextDomain {
    /// Every stored expression. Any g = b term drives the value to 0 for a ≠ b.
    All,
    /// Stored expressions of one grade.
    Grade(usize),
    /// Stored expressions extending both a and b.
    #[default]
    CommonExtensions,
}

/// p(a‖b) = inf_g min{p(g|a)/p(g|b), 1}, skipping contexts with p(g|b) = 0.
///
/// Over a fixed domain an empty infimum is 1. Under common extensions a pair
/// without any shared extension scores 0.
pub fn similarity_ratio(
    corpus: &GradedCorpus,
    a: &Expression,
    b: &Expression,
    domain: ContextDomain,
) -> Result<CountRatio> {
    if a.len() != b.len() {
        return Err(Error::GradeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    for e in [a, b] {
        if !corpus.contains(e) {
            return Err(Error::UnknownExpression(corpus.render(e)));
        }
    }
    let one = Ratio::from_integer(1);
    if a == b {
        return Ok(one);
    }

    let grades = match domain {
        ContextDomain::Grade(n) => n..=n,
        _ => 1..=corpus.max_grade(),
    };
    let mut best = one;
    let mut seen = false;
    for n in grades {
        for (g, _) in corpus.grade(n) {
            if domain == ContextDomain::CommonExtensions && !(g.contains(a) && g.contains(b)) {
                continue;
            }
            let denom = extension_ratio(corpus, b, g)?;
            if denom == Ratio::from_integer(0) {
                continue;
            }
            seen = true;
            let ratio = extension_ratio(corpus, a, g)? / denom;
            if ratio < best {
                best = ratio;
            }
        }
    }
    if domain == ContextDomain::CommonExtensions && !seen {
        return Ok(Ratio::from_integer(0));
    }
    Ok(best)
}

pub fn similarity(corpus: &GradedCorpus, a: &Expression, b: &Expression, domain: ContextDomain) -> Result<f64> {
    similarity_ratio(corpus, a, b, domain).map(ratio_to_f64)
}

/// Weights bounding the two halves of a context, both in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColimitWeights {
    pub left: f64,
    pub right: f64,
}

impl Default for ColimitWeights {
    fn default() -> Self {
        Self { left: 1.0, right: 1.0 }
    }
}

impl ColimitWeights {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        for w in [left, right] {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidParameter(format!("colimit weight {w} outside (0, 1]")));
            }
        }
        Ok(Self { left, right })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    /// g⁻ w g⁺.
    pub expression: Expression,
    pub middle: u32,
    /// p(t‖g±) = C(t) / Σ_v C(g⁻ v g⁺).
    pub probability: CountRatio,
    /// min{p(t|g⁻)/W(1), p(t|g⁺)/W(2), 1}.
    pub score: f64,
}

impl Completion {
    pub fn probability_f64(&self) -> f64 {
        ratio_to_f64(self.probability)
    }
}

/// Stored `(middle word, C(g⁻ w g⁺))` pairs in word-id order.
fn candidates(corpus: &GradedCorpus, left: &Expression, right: &Expression) -> Result<Vec<(u32, u64)>> {
    let need = left.len() + right.len() + 1;
    if need > corpus.max_grade() {
        return Err(Error::InsufficientGrade {
            need,
            have: corpus.max_grade(),
        });
    }
    let found: Vec<(u32, u64)> = (0..corpus.vocab().len() as u32)
        .filter_map(|w| {
            let t = left.concat(&Expression::word(w)).concat(right);
            match corpus.count(&t) {
                0 => None,
                c => Some((w, c)),
            }
        })
        .collect();
    if found.is_empty() {
        return Err(Error::NoCompletion {
            left: corpus.render(left),
            right: corpus.render(right),
        });
    }
    Ok(found)
}

/// The maximum-probability completion of `left _ right`. Ties on the weighted score
/// fall back to raw probability, then to the lexicographically smallest middle word.
pub fn weighted_colimit(
    corpus: &GradedCorpus,
    left: &Expression,
    right: &Expression,
    weights: ColimitWeights,
) -> Result<Completion> {
    let found = candidates(corpus, left, right)?;
    let total: u64 = found.iter().map(|&(_, c)| c).sum();
    let side = |g: &Expression, w: f64, c: u64| -> f64 {
        if g.is_empty() {
            return 1.0;
        }
        c as f64 / corpus.count(g) as f64 / w
    };

    let mut best: Option<Completion> = None;
    for (w, c) in found {
        let score = side(left, weights.left, c)
            .min(side(right, weights.right, c))
            .min(1.0);
        let candidate = Completion {
            expression: left.concat(&Expression::word(w)).concat(right),
            middle: w,
            probability: Ratio::new(c, total),
            score,
        };
        best = Some(match best {
            None => candidate,
            Some(current) => {
                let better = (candidate.score, candidate.probability) > (current.score, current.probability)
                    || ((candidate.score, candidate.probability) == (current.score, current.probability)
                        && corpus.vocab().surface(w) < corpus.vocab().surface(current.middle));
                if better {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    Ok(best.expect("candidate set is non-empty"))
}

/// p(w|g±) over middle words, as exact ratios in word-id order.
pub fn completion_ratios(corpus: &GradedCorpus, left: &Expression, right: &Expression) -> Result<Vec<(u32, CountRatio)>> {
    let found = candidates(corpus, left, right)?;
    let total: u64 = found.iter().map(|&(_, c)| c).sum();
    Ok(found.into_iter().map(|(w, c)| (w, Ratio::new(c, total))).collect())
}

/// The completion distribution as a 1 × |vocabulary| row-stochastic matrix.
pub fn completion_distribution(corpus: &GradedCorpus, left: &Expression, right: &Expression) -> Result<ProbMatrix> {
    let ratios = completion_ratios(corpus, left, right)?;
    let mut row = vec![0.0; corpus.vocab().len()];
    for (w, p) in ratios {
        row[w as usize] = ratio_to_f64(p);
    }
    // float rounding of the individual ratios can leave the sum a few ulps off 1
    let sum: f64 = row.iter().sum();
    let kind = if (sum - 1.0).abs() <= STOCHASTIC_TOL {
        Kind::RowStochastic
    } else {
        Kind::Probabilistic
    };
    let label = format!("{} _ {}", corpus.render(left), corpus.render(right));
    let source = ExprSet::new(label.clone(), vec![Element::expr(label.split(' '))])?;
    ProbMatrix::new(
        source,
        ExprSet::vocabulary(corpus.vocab()),
        nalgebra::DMatrix::from_row_slice(1, row.len(), &row),
        kind,
    )
}
