//! Concrete semantic spaces built from window statistics, and the similarity
//! matrices derived from them.

use nalgebra::DMatrix;

use crate::corpus::{GradedCorpus, DEFAULT_WINDOW_RADIUS};
use crate::error::{Error, Result};
use crate::markov::{ExprSet, Kind, ProbMatrix, SemanticSpace};

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoocSpec {
    pub window_radius: usize,
    /// Add-α smoothing on counts.
    pub alpha: f64,
}

impl Default for CoocSpec {
    fn default() -> Self {
        Self {
            window_radius: DEFAULT_WINDOW_RADIUS,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl CoocSpec {
    pub fn new(window_radius: usize, alpha: f64) -> Result<Self> {
        let spec = Self { window_radius, alpha };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.window_radius == 0 {
            return Err(Error::InvalidParameter("window radius must be at least 1".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("smoothing {} must be a finite value >= 0", self.alpha)));
        }
        Ok(())
    }
}

/// A constructed space plus the words whose rows had no data and fell back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltSpace {
    pub space: SemanticSpace,
    pub fallback_rows: Vec<String>,
}

fn normalize_rows(counts: DMatrix<f64>, alpha: f64, corpus: &GradedCorpus) -> Result<BuiltSpace> {
    let n = counts.nrows();
    let mut values = counts.add_scalar(alpha);
    let mut fallback_rows = Vec::new();
    for r in 0..n {
        let sum: f64 = values.row(r).iter().sum();
        if sum > 0.0 {
            values.row_mut(r).iter_mut().for_each(|v| *v /= sum);
        } else {
            values.row_mut(r).fill(1.0 / n as f64);
            fallback_rows.push(corpus.vocab().words()[r].clone());
        }
    }
    let set = ExprSet::vocabulary(corpus.vocab());
    let space = SemanticSpace::new(ProbMatrix::new(set.clone(), set, values, Kind::RowStochastic)?)?;
    Ok(BuiltSpace { space, fallback_rows })
}

fn check_corpus(corpus: &GradedCorpus, spec: &CoocSpec) -> Result<()> {
    spec.validate()?;
    if corpus.vocab().is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if corpus.window_radius() != spec.window_radius {
        return Err(Error::WindowMismatch {
            need: spec.window_radius,
            have: corpus.window_radius(),
        });
    }
    Ok(())
}

/// Raw window co-occurrence counts X as a dense matrix.
pub fn cooc_matrix(corpus: &GradedCorpus) -> DMatrix<f64> {
    let n = corpus.vocab().len();
    let mut x = DMatrix::zeros(n, n);
    for ((i, j), c) in corpus.cooc_entries() {
        x[(i as usize, j as usize)] = c as f64;
    }
    x
}

/// P_ij = (X_ij + α) / Σ_k (X_ik + α).
pub fn glove_space(corpus: &GradedCorpus, spec: &CoocSpec) -> Result<BuiltSpace> {
    check_corpus(corpus, spec)?;
    normalize_rows(cooc_matrix(corpus), spec.alpha, corpus)
}

/// Context-position counts inside the full windows centred on each word: for every
/// stored grade-(2k+1) expression t with middle word w_i, each non-centre word of t
/// adds C(t) to row i.
pub fn window_context_counts(corpus: &GradedCorpus, window_radius: usize) -> Result<DMatrix<f64>> {
    let grade = 2 * window_radius + 1;
    if corpus.max_grade() < grade {
        return Err(Error::InsufficientGrade {
            need: grade,
            have: corpus.max_grade(),
        });
    }
    let n = corpus.vocab().len();
    let mut counts = DMatrix::zeros(n, n);
    for (t, c) in corpus.grade(grade) {
        let ids = t.ids();
        let centre = ids[window_radius] as usize;
        for (pos, &w) in ids.iter().enumerate() {
            if pos != window_radius {
                counts[(centre, w as usize)] += c as f64;
            }
        }
    }
    Ok(counts)
}

/// Q_ij: the smoothed share of w_j among context positions of full windows around w_i.
pub fn w2v_space(corpus: &GradedCorpus, spec: &CoocSpec) -> Result<BuiltSpace> {
    check_corpus(corpus, spec)?;
    let counts = window_context_counts(corpus, spec.window_radius)?;
    let empty: Vec<usize> = (0..counts.nrows()).filter(|&r| counts.row(r).sum() == 0.0).collect();
    let mut built = normalize_rows(counts, spec.alpha, corpus)?;
    // with α > 0 an empty row is already α-uniform; record it either way
    built.fallback_rows = empty.into_iter().map(|r| corpus.vocab().words()[r].clone()).collect();
    Ok(built)
}

/// A symmetric, unit-diagonal matrix over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub labels: ExprSet,
    pub values: DMatrix<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.values - self.values.transpose()).amax()
    }

    pub fn max_diagonal_error(&self) -> f64 {
        self.values.diagonal().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn word(space: &ProbMatrix, i: usize) -> String {
    space.domain().elements()[i].name()
}

/// S_ik = P_ii P_kk / (P_ik P_ki).
pub fn similarity_s(space: &SemanticSpace) -> Result<SimilarityMatrix> {
    let p = space.values();
    let n = p.nrows();
    let mut s = DMatrix::identity(n, n);
    for i in 0..n {
        for k in i + 1..n {
            let cross = p[(i, k)] * p[(k, i)];
            if cross == 0.0 {
                return Err(Error::ZeroEntry(word(space, i), word(space, k)));
            }
            let v = p[(i, i)] * p[(k, k)] / cross;
            s[(i, k)] = v;
            s[(k, i)] = v;
        }
    }
    Ok(SimilarityMatrix {
        labels: space.domain().clone(),
        values: s,
    })
}

/// T_ij = (P_ij + P_ji) / (P_ii + P_jj).
pub fn similarity_t(space: &SemanticSpace) -> Result<SimilarityMatrix> {
    let p = space.values();
    let n = p.nrows();
    let mut t = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let diag = p[(i, i)] + p[(j, j)];
            if diag == 0.0 {
                return Err(Error::ZeroEntry(word(space, i), word(space, j)));
            }
            let v = (p[(i, j)] + p[(j, i)]) / diag;
            t[(i, j)] = v;
            t[(j, i)] = v;
        }
    }
    Ok(SimilarityMatrix {
        labels: space.domain().clone(),
        values: t,
    })
}

/// H(Q) = −Σ_i m_i Σ_j Q_ij ln Q_ij, with 0 ln 0 = 0.
pub fn entropy(q: &ProbMatrix, weights: &[f64]) -> f64 {
    let mut h = 0.0;
    for (i, &m) in weights.iter().enumerate() {
        let row: f64 = q
            .values()
            .row(i)
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| v * v.ln())
            .sum();
        h -= m * row;
    }
    h
}

/// Word occurrence counts m_i in vocabulary order.
pub fn word_weights(corpus: &GradedCorpus) -> Vec<f64> {
    (0..corpus.vocab().len() as u32)
        .map(|w| corpus.word_count(w) as f64)
        .collect()
}

pub fn corpus_entropy(q: &ProbMatrix, corpus: &GradedCorpus) -> f64 {
    entropy(q, &word_weights(corpus))
}
