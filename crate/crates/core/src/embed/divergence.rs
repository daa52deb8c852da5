use nalgebra::DMatrix;

use super::{stress, Embedding};
use crate::error::{Error, Result};

/// A non-negative functional on embeddings. Two embeddings are compared through
/// the absolute difference of their values, which is zero on identical inputs and
/// satisfies the triangle inequality.
pub trait Divergence {
    fn name(&self) -> &str;

    fn value(&self, e: &Embedding) -> Result<f64>;

    fn between(&self, e: &Embedding, f: &Embedding) -> Result<f64> {
        Ok((self.value(e)? - self.value(f)?).abs())
    }
}

/// Σ_{i<j} p_ij |ln p_ij + d_ij|.
pub fn kl_embedding_divergence(p: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<f64> {
    if p.shape() != d.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} probabilities vs {:?} distances", p.shape(), d.shape())));
    }
    let n = p.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let pij = p[(i, j)];
            if !(pij > 0.0 && pij <= 1.0) {
                return Err(Error::ZeroEntry(i.to_string(), j.to_string()));
            }
            total += pij * (pij.ln() + d[(i, j)]).abs();
        }
    }
    Ok(total)
}

/// KL-style divergence between the source probabilities and the target distances.
#[derive(Debug, Clone, Copy, Default)]
pub struct KlDivergence;

impl Divergence for KlDivergence {
    fn name(&self) -> &str {
        "kl"
    }

    fn value(&self, e: &Embedding) -> Result<f64> {
        kl_embedding_divergence(e.source.values(), &e.target.distances())
    }
}

/// Stress of the target configuration against fixed dissimilarities.
#[derive(Debug, Clone)]
pub struct StressDivergence {
    pub dissimilarities: DMatrix<f64>,
}

impl Divergence for StressDivergence {
    fn name(&self) -> &str {
        "stress"
    }

    fn value(&self, e: &Embedding) -> Result<f64> {
        if self.dissimilarities.nrows() != e.target.len() {
            return Err(Error::ShapeMismatch("dissimilarities do not match the configuration".into()));
        }
        Ok(stress(e.target.points(), &self.dissimilarities))
    }
}
