//! Seeded synthetic corpora for experiments and tests.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{GradedCorpus, TokenizerConfig};
use crate::error::{Error, Result};

/// A Markov chain over `vocab` words whose transition preferences come from
/// points on the unit sphere: T_ij ∝ exp(concentration · z_i·z_j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCorpusSpec {
    pub vocab: usize,
    pub latent_dim: usize,
    pub concentration: f64,
    pub sentence_len: usize,
    pub tokens: usize,
    pub seed: u64,
}

impl Default for MarkovCorpusSpec {
    fn default() -> Self {
        Self {
            vocab: 12,
            latent_dim: 6,
            concentration: 4.0,
            sentence_len: 20,
            tokens: 20_000,
            seed: 42,
        }
    }
}

impl MarkovCorpusSpec {
    pub fn word(&self, i: usize) -> String {
        let width = (self.vocab.max(2) - 1).to_string().len();
        format!("w{i:0width$}")
    }

    /// Latent points and the transition matrix they induce.
    pub fn chain(&self, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut z: DMatrix<f64> = DMatrix::from_fn(self.vocab, self.latent_dim, |_, _| StandardNormal.sample(rng));
        for mut row in z.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        let mut t = (&z * z.transpose()).map(|s| (self.concentration * s).exp());
        for mut row in t.row_iter_mut() {
            let sum = row.sum();
            row /= sum;
        }
        (z, t)
    }

    /// Sentences of word surfaces.
    pub fn sentences(&self) -> Result<Vec<Vec<String>>> {
        if self.vocab == 0 || self.sentence_len == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidParameter("synthetic corpus needs a vocabulary, latent space and sentence length".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (_, t) = self.chain(&mut rng);
        let rows: Vec<WeightedIndex<f64>> = t
            .row_iter()
            .map(|r| WeightedIndex::new(r.iter().copied()).map_err(|e| Error::InvalidParameter(e.to_string())))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        let mut produced = 0;
        while produced < self.tokens {
            let mut s = Vec::with_capacity(self.sentence_len);
            let mut w = rng.random_range(0..self.vocab);
            s.push(self.word(w));
            for _ in 1..self.sentence_len {
                w = rows[w].sample(&mut rng);
                s.push(self.word(w));
            }
            produced += self.sentence_len;
            out.push(s);
        }
        Ok(out)
    }

    /// One sentence per line, each terminated by a full stop.
    pub fn text(&self) -> Result<String> {
        let mut text = String::new();
        for s in self.sentences()? {
            text.push_str(&s.join(" "));
            text.push_str(" .\n");
        }
        Ok(text)
    }

    pub fn corpus(&self, max_grade: usize, window_radius: usize) -> Result<GradedCorpus> {
        GradedCorpus::from_text(&self.text()?, &TokenizerConfig::default(), max_grade, window_radius)
    }
}

/// A random row-stochastic matrix with strictly positive entries.
pub fn random_stochastic(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.01..1.0));
    for mut row in m.row_iter_mut() {
        let sum = row.sum();
        row /= sum;
    }
    m
}
