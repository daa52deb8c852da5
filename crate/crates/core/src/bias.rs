//! Bias of a word towards one member of a word pair, and the projection that
//! removes it for a single triple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Kind, ProbMatrix, SemanticSpace};
use crate::spaces::{similarity_s, similarity_t};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityChoice {
    #[default]
    S,
    T,
}

/// b_i(k, j) for target i and pair (k, j).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasQuery {
    pub target: String,
    pub pair: (String, String),
    #[serde(default)]
    pub similarity: SimilarityChoice,
}

impl BiasQuery {
    pub fn new(target: &str, k: &str, j: &str, similarity: SimilarityChoice) -> Self {
        Self {
            target: target.to_owned(),
            pair: (k.to_owned(), j.to_owned()),
            similarity,
        }
    }

    /// Every target against every pair, targets outermost.
    pub fn cross(targets: &[String], pairs: &[(String, String)], similarity: SimilarityChoice) -> Vec<Self> {
        targets
            .iter()
            .flat_map(|t| pairs.iter().map(move |(k, j)| Self::new(t, k, j, similarity)))
            .collect()
    }

    fn resolve(&self, space: &SemanticSpace) -> Result<(usize, usize, usize)> {
        let i = space.word_index(&self.target)?;
        let k = space.word_index(&self.pair.0)?;
        let j = space.word_index(&self.pair.1)?;
        if i == k || i == j || k == j {
            return Err(Error::InvalidParameter(format!(
                "bias needs three distinct words, got {} / ({}, {})",
                self.target, self.pair.0, self.pair.1
            )));
        }
        Ok((i, k, j))
    }
}

/// The seven entries of P a score depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contributions {
    pub p_ii: f64,
    pub p_kk: f64,
    pub p_jj: f64,
    pub p_ik: f64,
    pub p_ki: f64,
    pub p_ij: f64,
    pub p_ji: f64,
}

impl Contributions {
    fn read(p: &ProbMatrix, (i, k, j): (usize, usize, usize)) -> Self {
        Self {
            p_ii: p.get(i, i),
            p_kk: p.get(k, k),
            p_jj: p.get(j, j),
            p_ik: p.get(i, k),
            p_ki: p.get(k, i),
            p_ij: p.get(i, j),
            p_ji: p.get(j, i),
        }
    }
}

fn s_entry(space: &SemanticSpace, a: usize, b: usize) -> Result<f64> {
    let (paa, pbb, pab, pba) = (space.get(a, a), space.get(b, b), space.get(a, b), space.get(b, a));
    let cross = pab * pba;
    if cross == 0.0 {
        return Err(Error::ZeroEntry(space.words()[a].clone(), space.words()[b].clone()));
    }
    Ok(paa * pbb / cross)
}

fn t_entry(space: &SemanticSpace, a: usize, b: usize) -> Result<f64> {
    let diag = space.get(a, a) + space.get(b, b);
    if diag == 0.0 {
        return Err(Error::ZeroEntry(space.words()[a].clone(), space.words()[b].clone()));
    }
    Ok((space.get(a, b) + space.get(b, a)) / diag)
}

fn score_at(space: &SemanticSpace, (i, k, j): (usize, usize, usize), choice: SimilarityChoice) -> Result<f64> {
    let entry = match choice {
        SimilarityChoice::S => s_entry,
        SimilarityChoice::T => t_entry,
    };
    let (sik, sij) = (entry(space, i, k)?, entry(space, i, j)?);
    if sij == 0.0 {
        return Err(Error::ZeroEntry(space.words()[i].clone(), space.words()[j].clone()));
    }
    Ok(sik / sij)
}

/// b_i(k, j) = S_ik / S_ij (or the same quotient of T).
pub fn bias_score(space: &SemanticSpace, q: &BiasQuery) -> Result<f64> {
    score_at(space, q.resolve(space)?, q.similarity)
}

/// The whole S or T matrix.
pub fn similarity_matrix(space: &SemanticSpace, choice: SimilarityChoice) -> Result<crate::spaces::SimilarityMatrix> {
    match choice {
        SimilarityChoice::S => similarity_s(space),
        SimilarityChoice::T => similarity_t(space),
    }
}

/// sqrt(ln S_ab), 0 when S_ab < 1.
fn pair_distance(space: &SemanticSpace, a: usize, b: usize) -> Result<f64> {
    let s = s_entry(space, a, b)?;
    Ok(if s > 1.0 { s.ln().sqrt() } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub query: BiasQuery,
    pub score: f64,
    pub contributions: Contributions,
    pub post_score: Option<f64>,
    pub post_contributions: Option<Contributions>,
    /// (d_ik, d_ij) before and after.
    pub distances: (f64, f64),
    pub post_distances: Option<(f64, f64)>,
    pub renormalized: bool,
    /// Largest change of any other audited score caused by the projection.
    pub max_induced_drift: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DebiasOptions {
    /// Rescale the touched rows back to unit sums afterwards.
    pub renormalize: bool,
    /// Other triples whose scores are tracked for drift.
    pub audited: Vec<BiasQuery>,
}

/// Rescale the cross entries of one triple so that p_kk/(p_ik p_ki) = p_jj/(p_ij p_ji).
///
/// With r_k = p_ik p_ki / p_kk and r_j = p_ij p_ji / p_jj, both products are moved to
/// the geometric mean c = sqrt(r_k r_j): each of p_ik, p_ki is multiplied by
/// sqrt(c / r_k) and each of p_ij, p_ji by sqrt(c / r_j). Diagonals stay fixed.
pub fn debias(space: &SemanticSpace, q: &BiasQuery, options: &DebiasOptions) -> Result<(SemanticSpace, BiasReport)> {
    if q.similarity != SimilarityChoice::S {
        return Err(Error::Unsupported("debiasing is defined for the S similarity only".into()));
    }
    let idx @ (i, k, j) = q.resolve(space)?;
    let score = score_at(space, idx, q.similarity)?;
    let before = Contributions::read(space, idx);
    for (name, v) in [("p_kk", before.p_kk), ("p_jj", before.p_jj)] {
        if v == 0.0 {
            return Err(Error::ZeroEntry(name.into(), q.target.clone()));
        }
    }
    let r_k = before.p_ik * before.p_ki / before.p_kk;
    let r_j = before.p_ij * before.p_ji / before.p_jj;
    let c = (r_k * r_j).sqrt();
    let f_k = (c / r_k).sqrt();
    let f_j = (c / r_j).sqrt();

    let mut values = space.values().clone();
    values[(i, k)] *= f_k;
    values[(k, i)] *= f_k;
    values[(i, j)] *= f_j;
    values[(j, i)] *= f_j;
    if options.renormalize {
        for r in [i, k, j] {
            let sum: f64 = values.row(r).sum();
            values.row_mut(r).iter_mut().for_each(|v| *v /= sum);
        }
    }
    let kind = if options.renormalize { Kind::RowStochastic } else { Kind::Probabilistic };
    let m = space.matrix();
    let adjusted = SemanticSpace::new(ProbMatrix::new(m.domain().clone(), m.codomain().clone(), values, kind)?)?;

    let mut drift: Option<f64> = None;
    for other in &options.audited {
        if other.resolve(space).ok() == Some(idx) && other.similarity == q.similarity {
            continue;
        }
        let (a, b) = (bias_score(space, other), bias_score(&adjusted, other));
        if let (Ok(a), Ok(b)) = (a, b) {
            drift = Some(drift.unwrap_or(0.0).max((a - b).abs()));
        }
    }

    let report = BiasReport {
        query: q.clone(),
        score,
        contributions: before,
        post_score: Some(score_at(&adjusted, idx, q.similarity)?),
        post_contributions: Some(Contributions::read(&adjusted, idx)),
        distances: (pair_distance(space, i, k)?, pair_distance(space, i, j)?),
        post_distances: Some((pair_distance(&adjusted, i, k)?, pair_distance(&adjusted, i, j)?)),
        renormalized: options.renormalize,
        max_induced_drift: drift,
    };
    Ok((adjusted, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub query: BiasQuery,
    pub score: Option<f64>,
    pub error: Option<String>,
}

/// Score every query; rows are ordered by |ln b| descending with failed rows last.
pub fn bias_audit(space: &SemanticSpace, queries: &[BiasQuery]) -> Vec<AuditRow> {
    let mut rows: Vec<AuditRow> = queries
        .iter()
        .map(|q| match bias_score(space, q) {
            Ok(b) => AuditRow {
                query: q.clone(),
                score: Some(b),
                error: None,
            },
            Err(e) => AuditRow {
                query: q.clone(),
                score: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let key = |r: &AuditRow| r.score.map(|b| b.ln().abs()).unwrap_or(f64::NEG_INFINITY);
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::ExprSet;
    use nalgebra::DMatrix;

    fn space(n: usize, v: &[f64]) -> SemanticSpace {
        let set = ExprSet::indexed("W", n);
        SemanticSpace::new(ProbMatrix::new(set.clone(), set, DMatrix::from_row_slice(n, n, v), Kind::Probabilistic).unwrap()).unwrap()
    }

    // words s0 (target), s1 (k), s2 (j)
    fn biased() -> SemanticSpace {
        // p_kk = p_jj = 0.2, p_ik p_ki = 0.01, p_ij p_ji = 0.02
        space(3, &[0.4, 0.1, 0.2, 0.1, 0.2, 0.3, 0.1, 0.3, 0.2])
    }

    fn q(choice: SimilarityChoice) -> BiasQuery {
        BiasQuery::new("s0", "s1", "s2", choice)
    }

    #[test]
    fn hand_computed_score() {
        let b = bias_score(&biased(), &q(SimilarityChoice::S)).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
        let rev = BiasQuery::new("s0", "s2", "s1", SimilarityChoice::S);
        assert!((b * bias_score(&biased(), &rev).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_space_is_unbiased() {
        let p = space(3, &[0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.3, 0.3, 0.4]);
        for c in [SimilarityChoice::S, SimilarityChoice::T] {
            assert_eq!(bias_score(&p, &q(c)).unwrap(), 1.0);
        }
    }

    #[test]
    fn debias_equalizes() {
        let (after, report) = debias(&biased(), &q(SimilarityChoice::S), &DebiasOptions::default()).unwrap();
        assert!((report.post_score.unwrap() - 1.0).abs() <= 1e-12);
        let (dik, dij) = report.post_distances.unwrap();
        assert!((dik - dij).abs() <= 1e-9);
        let (b, a) = (report.contributions, report.post_contributions.unwrap());
        assert!(((a.p_ik * a.p_ki) * (a.p_ij * a.p_ji) - (b.p_ik * b.p_ki) * (b.p_ij * b.p_ji)).abs() < 1e-15);
        assert_eq!(after.kind(), Kind::Probabilistic);
        // untouched entries are bit-identical
        for (r, c) in [(0, 0), (1, 1), (2, 2), (1, 2), (2, 1)] {
            assert_eq!(after.get(r, c).to_bits(), biased().get(r, c).to_bits());
        }
    }

    #[test]
    fn unbiased_input_is_unchanged() {
        let p = space(3, &[0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.3, 0.3, 0.4]);
        let (after, _) = debias(&p, &q(SimilarityChoice::S), &DebiasOptions::default()).unwrap();
        assert_eq!(after.values(), p.values());
    }

    #[test]
    fn renormalization_reports_drift() {
        let p = space(4, &[0.4, 0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.4, 0.1, 0.3, 0.2, 0.4, 0.25, 0.25, 0.25, 0.25]);
        let options = DebiasOptions {
            renormalize: true,
            audited: vec![BiasQuery::new("s1", "s0", "s3", SimilarityChoice::S), q(SimilarityChoice::S)],
        };
        let (after, report) = debias(&p, &q(SimilarityChoice::S), &options).unwrap();
        assert_eq!(after.kind(), Kind::RowStochastic);
        assert!(report.renormalized);
        assert!(report.max_induced_drift.unwrap() > 0.0);
    }

    #[test]
    fn t_cannot_be_debiased() {
        assert!(matches!(
            debias(&biased(), &q(SimilarityChoice::T), &DebiasOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn audit_orders_and_reports_errors() {
        let p = biased();
        let queries = vec![
            BiasQuery::new("s0", "s1", "nope", SimilarityChoice::S),
            BiasQuery::new("s2", "s0", "s1", SimilarityChoice::S),
            q(SimilarityChoice::S),
        ];
        let rows = bias_audit(&p, &queries);
        assert_eq!(rows.len(), 3);
        assert!(rows[0].score.unwrap().ln().abs() >= rows[1].score.unwrap().ln().abs());
        assert!(rows[2].error.as_deref().unwrap().contains("nope"));
        assert!(bias_audit(&p, &[]).is_empty());
    }

    #[test]
    fn distinct_words_required() {
        assert!(bias_score(&biased(), &BiasQuery::new("s0", "s0", "s1", SimilarityChoice::S)).is_err());
    }
}
