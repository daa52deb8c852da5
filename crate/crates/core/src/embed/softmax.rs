use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::glove::{descend, DEFAULT_SEED};
use super::Configuration;
use crate::corpus::GradedCorpus;
use crate::error::{Error, Result};
use crate::spaces::{w2v_space, word_weights, CoocSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftmaxHyper {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    /// Stop once D_KL(Q‖S) per occurrence is at most this.
    pub kl_tolerance: f64,
}

impl Default for SoftmaxHyper {
    fn default() -> Self {
        Self {
            dim: 12,
            learning_rate: 0.5,
            epochs: 5000,
            seed: DEFAULT_SEED,
            init_scale: 0.1,
            kl_tolerance: 1e-3,
        }
    }
}

/// Occurrence-weighted cross-entropy H(Q, S) / M with S_ij = softmax_j(v_iᵀv_j)
/// and M = Σ_i m_i.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxObjective {
    pub q: DMatrix<f64>,
    pub weights: DVector<f64>,
}

impl SoftmaxObjective {
    pub fn new(q: DMatrix<f64>, weights: &[f64]) -> Result<Self> {
        if q.nrows() != q.ncols() || weights.len() != q.nrows() {
            return Err(Error::ShapeMismatch("Q must be square with one weight per row".into()));
        }
        if weights.iter().any(|&m| !(m >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("row weights must be >= 0 with a positive total".into()));
        }
        Ok(Self {
            q,
            weights: DVector::from_column_slice(weights),
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.sum()
    }

    /// −ln S_ij computed through log-sum-exp.
    fn neg_log_softmax(v: &DMatrix<f64>) -> DMatrix<f64> {
        let logits = v * v.transpose();
        let mut out = logits.clone();
        for (i, row) in logits.row_iter().enumerate() {
            let max = row.max();
            let lse = max + row.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            for j in 0..row.len() {
                out[(i, j)] = lse - row[j];
            }
        }
        out
    }

    pub fn softmax(v: &DMatrix<f64>) -> DMatrix<f64> {
        Self::neg_log_softmax(v).map(|x| (-x).exp())
    }

    fn weighted_rows(&self, per_entry: DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..per_entry.nrows() {
            total += self.weights[i] * per_entry.row(i).sum();
        }
        total / self.total_weight()
    }

    pub fn value(&self, v: &DMatrix<f64>) -> f64 {
        self.weighted_rows(Self::neg_log_softmax(v).component_mul(&self.q))
    }

    /// ∂/∂v of [`value`](Self::value): G v + Gᵀ v with G_ij = m_i (S_ij − Q_ij) / M.
    pub fn gradient(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.total_weight();
        let mut g = Self::softmax(v) - &self.q;
        for i in 0..g.nrows() {
            let w = self.weights[i] / m;
            g.row_mut(i).iter_mut().for_each(|x| *x *= w);
        }
        &g * v + g.transpose() * v
    }

    /// Occurrence-weighted entropy of Q per occurrence.
    pub fn entropy(&self) -> f64 {
        self.weighted_rows(self.q.map(|x| if x > 0.0 { -x * x.ln() } else { 0.0 }))
    }

    /// D_KL(Q‖S) per occurrence: cross-entropy minus entropy.
    pub fn kl(&self, v: &DMatrix<f64>) -> f64 {
        self.value(v) - self.entropy()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub labels: Vec<String>,
    pub vectors: DMatrix<f64>,
    pub objective: SoftmaxObjective,
    /// Cross-entropy per occurrence, initial value then one entry per epoch.
    pub cross_entropy_trace: Vec<f64>,
    /// D_KL(Q‖S) per occurrence, aligned with the cross-entropy trace.
    pub kl_trace: Vec<f64>,
}

impl SoftmaxModel {
    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.labels.clone(), self.vectors.clone()).expect("one vector per label")
    }

    pub fn final_kl(&self) -> f64 {
        *self.kl_trace.last().expect("trace holds the initial value")
    }

    /// Corpus-summed cross-entropy per epoch.
    pub fn total_cross_entropy_trace(&self) -> Vec<f64> {
        let m = self.objective.total_weight();
        self.cross_entropy_trace.iter().map(|c| c * m).collect()
    }
}

fn step(v: &DMatrix<f64>, g: &DMatrix<f64>, lr: f64) -> DMatrix<f64> {
    v - g * lr
}

pub fn softmax_train_q(q: &DMatrix<f64>, weights: &[f64], labels: Vec<String>, hyper: &SoftmaxHyper) -> Result<SoftmaxModel> {
    let n = q.nrows();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} words", labels.len())));
    }
    if hyper.dim == 0 || hyper.dim > n {
        return Err(Error::DimensionTooLarge { dim: hyper.dim, n });
    }
    if !(hyper.learning_rate >= 0.0) {
        return Err(Error::InvalidParameter("learning rate must be >= 0".into()));
    }
    let objective = SoftmaxObjective::new(q.clone(), weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let normal = Normal::new(0.0, hyper.init_scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let init = DMatrix::from_fn(n, hyper.dim, |_, _| normal.sample(&mut rng));
    let h = objective.entropy();
    let (vectors, cross_entropy_trace, _) = descend(
        init,
        hyper.learning_rate,
        hyper.epochs,
        |v| objective.value(v),
        |v| objective.gradient(v),
        step,
        h + hyper.kl_tolerance,
        |_, _| {},
    )?;
    let kl_trace = cross_entropy_trace.iter().map(|c| c - h).collect();
    Ok(SoftmaxModel {
        labels,
        vectors,
        objective,
        cross_entropy_trace,
        kl_trace,
    })
}

/// Train tied word vectors against the corpus window distribution Q.
pub fn softmax_train(corpus: &GradedCorpus, spec: &CoocSpec, hyper: &SoftmaxHyper) -> Result<SoftmaxModel> {
    let q = w2v_space(corpus, spec)?.space;
    softmax_train_q(q.values(), &word_weights(corpus), corpus.vocab().words().to_vec(), hyper)
}
