//! Configurations of labelled points, distance constructions, MDS, trainers and
//! the divergences that compare them.

mod divergence;
mod experiment;
mod glove;
mod mds;
mod procrustes;
mod softmax;

pub use divergence::{kl_embedding_divergence, Divergence, KlDivergence, StressDivergence};
pub use experiment::{equivalence_experiment, w2v_dissimilarities, REPORT_FORMAT_VERSION, EquivalenceReport, ExperimentConfig, GloveLeg, W2vLeg};
pub use glove::{glove_train, glove_train_counts, glove_train_observed, GloveHyper, GloveModel, GloveObjective, GloveParams};
pub use mds::{classical_mds, smacof, smacof_from, stress, ClassicalMds, SmacofOptions, SmacofResult};
pub use procrustes::{procrustes, Procrustes};
pub use softmax::{softmax_train, softmax_train_q, SoftmaxHyper, SoftmaxModel, SoftmaxObjective};

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::markov::SemanticSpace;
use crate::spaces::similarity_s;

/// Labelled points in Euclidean space, one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    labels: Vec<String>,
    points: DMatrix<f64>,
}

impl Configuration {
    pub fn new(labels: Vec<String>, points: DMatrix<f64>) -> Result<Self> {
        if labels.len() != points.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.nrows()
            )));
        }
        Ok(Self { labels, points })
    }

    /// Points labelled `s0, s1, ...`.
    pub fn unlabeled(points: DMatrix<f64>) -> Self {
        Self {
            labels: (0..points.nrows()).map(|i| format!("s{i}")).collect(),
            points,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn distances(&self) -> DMatrix<f64> {
        euclidean_distances(&self.points)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["word".to_owned()];
        header.extend((0..self.dim()).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.points.row(i).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise Euclidean distances between the rows of `points`.
pub fn euclidean_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (points.row(i) - points.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// A semantic space paired with a configuration over the same words.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub source: SemanticSpace,
    pub target: Configuration,
}

impl Embedding {
    pub fn new(source: SemanticSpace, target: Configuration) -> Result<Self> {
        if source.words() != target.labels() {
            return Err(Error::ShapeMismatch("space and configuration label different words".into()));
        }
        Ok(Self { source, target })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveDistance {
    pub values: DMatrix<f64>,
    /// Off-diagonal entries (ordered pairs) with S < 1, set to distance 0.
    pub clamped: usize,
}

/// (d_GV)_ik = sqrt(ln S_ik).
pub fn glove_distance(space: &SemanticSpace) -> Result<GloveDistance> {
    let s = similarity_s(space)?;
    let n = s.len();
    let mut values = DMatrix::zeros(n, n);
    let mut clamped = 0;
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let v = s.get(i, k);
            if !(v > 0.0) {
                return Err(Error::ZeroEntry(space.words()[i].clone(), space.words()[k].clone()));
            }
            if v < 1.0 {
                clamped += 1;
            } else {
                values[(i, k)] = v.ln().sqrt();
            }
        }
    }
    Ok(GloveDistance { values, clamped })
}

/// Strict upper-triangle entries, row by row.
pub fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| m[(i, j)])).collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// ‖a − b‖_F / ‖b‖_F.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
