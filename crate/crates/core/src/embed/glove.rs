use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Configuration;
use crate::corpus::GradedCorpus;
use crate::error::{Error, Result};
use crate::spaces::{cooc_matrix, CoocSpec};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GloveHyper {
    pub dim: usize,
    pub x_max: f64,
    pub power: f64,
    /// Initial step; adapted by backtracking.
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Standard deviation of the initial vectors.
    pub init_scale: f64,
}

impl Default for GloveHyper {
    fn default() -> Self {
        Self {
            dim: 12,
            x_max: 100.0,
            power: 0.75,
            learning_rate: 0.01,
            iterations: 20_000,
            seed: DEFAULT_SEED,
            init_scale: 0.1,
        }
    }
}

/// Word vectors v, context vectors ṽ and the two bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveParams {
    pub v: DMatrix<f64>,
    pub v_ctx: DMatrix<f64>,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
}

impl GloveParams {
    pub fn random(n: usize, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let v = DMatrix::from_fn(n, dim, |_, _| normal.sample(&mut rng));
        let v_ctx = DMatrix::from_fn(n, dim, |_, _| normal.sample(&mut rng));
        Self {
            v,
            v_ctx,
            a: DVector::zeros(n),
            b: DVector::zeros(n),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.v
            .iter()
            .chain(self.v_ctx.iter())
            .chain(self.a.iter())
            .chain(self.b.iter())
            .copied()
            .collect()
    }

    pub fn from_flat(n: usize, dim: usize, flat: &[f64]) -> Self {
        let m = n * dim;
        Self {
            v: DMatrix::from_column_slice(n, dim, &flat[..m]),
            v_ctx: DMatrix::from_column_slice(n, dim, &flat[m..2 * m]),
            a: DVector::from_column_slice(&flat[2 * m..2 * m + n]),
            b: DVector::from_column_slice(&flat[2 * m + n..]),
        }
    }

    /// self − step · g
    fn descend(&self, g: &GloveParams, step: f64) -> Self {
        Self {
            v: &self.v - &g.v * step,
            v_ctx: &self.v_ctx - &g.v_ctx * step,
            a: &self.a - &g.a * step,
            b: &self.b - &g.b * step,
        }
    }

    /// v_iᵀṽ_j + a_i + b_j.
    pub fn fitted(&self) -> DMatrix<f64> {
        let mut m = &self.v * self.v_ctx.transpose();
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += self.a[i] + self.b[j];
            }
        }
        m
    }
}

/// J = Σ_ij W_ij (v_iᵀṽ_j + a_i + b_j − ln X_ij)².
#[derive(Debug, Clone, PartialEq)]
pub struct GloveObjective {
    pub weights: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl GloveObjective {
    /// W_ij = min((X_ij/x_max)^power, 1); zero counts get zero weight.
    pub fn from_counts(x: &DMatrix<f64>, x_max: f64, power: f64) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(Error::ShapeMismatch("co-occurrence matrix must be square".into()));
        }
        if x.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter("co-occurrence counts must be finite and >= 0".into()));
        }
        let weights = x.map(|c| if c > 0.0 { (c / x_max).powf(power).min(1.0) } else { 0.0 });
        let targets = x.map(|c| if c > 0.0 { c.ln() } else { 0.0 });
        Ok(Self { weights, targets })
    }

    fn residuals(&self, p: &GloveParams) -> DMatrix<f64> {
        p.fitted() - &self.targets
    }

    pub fn value(&self, p: &GloveParams) -> f64 {
        self.residuals(p)
            .iter()
            .zip(self.weights.iter())
            .map(|(e, w)| w * e * e)
            .sum()
    }

    pub fn gradient(&self, p: &GloveParams) -> GloveParams {
        let g = self.residuals(p).component_mul(&self.weights) * 2.0;
        GloveParams {
            v: &g * &p.v_ctx,
            v_ctx: g.transpose() * &p.v,
            a: DVector::from_iterator(g.nrows(), g.row_iter().map(|r| r.sum())),
            b: DVector::from_iterator(g.ncols(), g.column_iter().map(|c| c.sum())),
        }
    }

    /// Weighted root-mean-square of the fit residuals.
    pub fn weighted_rmse(&self, p: &GloveParams) -> f64 {
        let w: f64 = self.weights.sum();
        (self.value(p) / w).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub labels: Vec<String>,
    pub params: GloveParams,
    pub objective: GloveObjective,
    /// Objective after every iteration, starting with the initial value.
    pub loss_trace: Vec<f64>,
    pub final_learning_rate: f64,
}

impl GloveModel {
    /// (v + ṽ) / 2.
    pub fn vectors(&self) -> DMatrix<f64> {
        (&self.params.v + &self.params.v_ctx) * 0.5
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.labels.clone(), self.vectors()).expect("one vector per label")
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace holds the initial loss")
    }
}

const GROWTH: f64 = 1.1;

/// Full-batch gradient descent with backtracking: a step that does not lower the
/// objective is retried at half the rate, so the loss trace never increases.
/// Stops early once the loss reaches `target`.
pub(crate) fn descend<P, F, G, O>(
    init: P,
    hyper_lr: f64,
    iterations: usize,
    value: F,
    gradient: G,
    step: fn(&P, &P, f64) -> P,
    target: f64,
    mut observe: O,
) -> Result<(P, Vec<f64>, f64)>
where
    F: Fn(&P) -> f64,
    G: Fn(&P) -> P,
    O: FnMut(usize, &P),
{
    let mut params = init;
    let mut loss = value(&params);
    if !loss.is_finite() {
        return Err(Error::Diverged { iteration: 0 });
    }
    let mut lr = hyper_lr;
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(loss);
    observe(0, &params);
    for iteration in 1..=iterations {
        let g = gradient(&params);
        loop {
            let candidate = step(&params, &g, lr);
            let next = value(&candidate);
            if next <= loss {
                params = candidate;
                loss = next;
                lr *= GROWTH;
                break;
            }
            if lr == 0.0 {
                // even a null step fails: the gradient itself is not finite
                return Err(Error::Diverged { iteration });
            }
            lr *= 0.5;
        }
        trace.push(loss);
        observe(iteration, &params);
        if loss <= target {
            break;
        }
    }
    Ok((params, trace, lr))
}

/// Train on a given (already smoothed) co-occurrence matrix.
pub fn glove_train_counts(x: &DMatrix<f64>, labels: Vec<String>, hyper: &GloveHyper) -> Result<GloveModel> {
    glove_train_observed(x, labels, hyper, |_, _| {})
}

/// As [`glove_train_counts`], calling `observe` with the parameters after every
/// iteration (iteration 0 is the initial point).
pub fn glove_train_observed<O>(x: &DMatrix<f64>, labels: Vec<String>, hyper: &GloveHyper, observe: O) -> Result<GloveModel>
where
    O: FnMut(usize, &GloveParams),
{
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} words", labels.len())));
    }
    if hyper.dim == 0 || hyper.dim > n {
        return Err(Error::DimensionTooLarge { dim: hyper.dim, n });
    }
    if !(hyper.learning_rate >= 0.0) || !(hyper.x_max > 0.0) {
        return Err(Error::InvalidParameter("learning rate must be >= 0 and x_max > 0".into()));
    }
    let objective = GloveObjective::from_counts(x, hyper.x_max, hyper.power)?;
    let init = GloveParams::random(n, hyper.dim, hyper.init_scale, hyper.seed);
    let (params, loss_trace, final_learning_rate) = descend(
        init,
        hyper.learning_rate,
        hyper.iterations,
        |p| objective.value(p),
        |p| objective.gradient(p),
        GloveParams::descend,
        f64::NEG_INFINITY,
        observe,
    )?;
    Ok(GloveModel {
        labels,
        params,
        objective,
        loss_trace,
        final_learning_rate,
    })
}

/// Train on the corpus window counts with add-α smoothing.
pub fn glove_train(corpus: &GradedCorpus, spec: &CoocSpec, hyper: &GloveHyper) -> Result<GloveModel> {
    if corpus.vocab().is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if corpus.window_radius() != spec.window_radius {
        return Err(Error::WindowMismatch {
            need: spec.window_radius,
            have: corpus.window_radius(),
        });
    }
    let x = cooc_matrix(corpus).add_scalar(spec.alpha);
    glove_train_counts(&x, corpus.vocab().words().to_vec(), hyper)
}
