//! Side-by-side runs of the trainers and metric MDS on the same corpus.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    euclidean_distances, glove_distance, glove_train_observed, pearson, procrustes, relative_frobenius, smacof,
    softmax_train_q, upper_triangle, GloveHyper, SmacofOptions, SoftmaxHyper,
};
use crate::corpus::GradedCorpus;
use crate::error::{Error, Result};
use crate::spaces::{cooc_matrix, glove_space, w2v_space, word_weights, CoocSpec};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub spec: CoocSpec,
    pub dim: usize,
    pub glove: GloveHyper,
    pub softmax: SoftmaxHyper,
    pub smacof: SmacofOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spec: CoocSpec::default(),
            dim: 12,
            glove: GloveHyper::default(),
            softmax: SoftmaxHyper::default(),
            smacof: SmacofOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GloveLeg {
    /// Correlation of the upper-triangle distances, GloVe vs metric MDS.
    pub pearson_r: f64,
    /// ‖D_glove − D_mds‖_F / ‖D_mds‖_F.
    pub relative_frobenius: f64,
    /// Orthogonal-alignment error of the GloVe vectors onto the MDS configuration.
    pub procrustes_error: f64,
    /// Largest |‖u_i − u_j‖ − d_ij| / d_ij over pairs with d_ij > 0, GloVe vectors.
    pub max_relative_distance_gap: f64,
    /// The same for the metric MDS configuration.
    pub mds_max_relative_distance_gap: f64,
    /// Ordered pairs whose similarity fell below 1 and were given distance 0.
    pub clamped_pairs: usize,
    pub smacof_stress_trace: Vec<f64>,
    pub glove_loss_trace: Vec<f64>,
    /// Σ_{i≠j} (d_ij − ‖u_i − u_j‖)² for the GloVe vectors u at each iteration.
    pub distance_objective_trace: Vec<f64>,
    /// Σ_{i≠j} (d_ij² − ‖u_i − u_j‖²)² at each iteration.
    pub squared_distance_objective_trace: Vec<f64>,
    /// |distance objective − final MDS stress²| at each iteration.
    pub stress_gap_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct W2vLeg {
    /// H(Q), occurrence-weighted and summed over the corpus.
    pub entropy_total: f64,
    pub smacof_stress_trace: Vec<f64>,
    pub final_stress: f64,
    /// D_KL(Q‖S) per occurrence after each epoch.
    pub kl_trace: Vec<f64>,
    /// |D_W2V(e) − (stress(e) + H(Q))| with corpus-summed cross-entropy D_W2V.
    pub divergence_trace: Vec<f64>,
    pub final_kl: f64,
    /// First epoch of the window checked for monotone decrease.
    pub monotone_from: usize,
    pub monotone_tail: bool,
    pub fallback_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub format_version: u32,
    pub vocab: Vec<String>,
    pub tokens: u64,
    pub dim: usize,
    pub glove: GloveLeg,
    pub w2v: W2vLeg,
}

fn pair_sums(d: &DMatrix<f64>, realized: &DMatrix<f64>) -> (f64, f64) {
    let n = d.nrows();
    let (mut plain, mut squared) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let gap = d[(i, j)] - realized[(i, j)];
                plain += gap * gap;
                let sq = d[(i, j)].powi(2) - realized[(i, j)].powi(2);
                squared += sq * sq;
            }
        }
    }
    (plain, squared)
}

fn glove_leg(corpus: &GradedCorpus, cfg: &ExperimentConfig) -> Result<GloveLeg> {
    let p = glove_space(corpus, &cfg.spec)?.space;
    let d = glove_distance(&p)?;
    let mds = smacof(&d.values, cfg.dim, cfg.smacof)?;
    let floor = mds.final_stress().powi(2);

    let x = cooc_matrix(corpus).add_scalar(cfg.spec.alpha);
    let hyper = GloveHyper { dim: cfg.dim, ..cfg.glove };
    let mut distance_objective_trace = Vec::with_capacity(hyper.iterations + 1);
    let mut squared_distance_objective_trace = Vec::with_capacity(hyper.iterations + 1);
    let model = glove_train_observed(&x, corpus.vocab().words().to_vec(), &hyper, |_, params| {
        let u = (&params.v + &params.v_ctx) * 0.5;
        let (plain, squared) = pair_sums(&d.values, &euclidean_distances(&u));
        distance_objective_trace.push(plain);
        squared_distance_objective_trace.push(squared);
    })?;

    let vectors = model.vectors();
    let dg = euclidean_distances(&vectors);
    let dm = euclidean_distances(&mds.points);
    let max_gap = |realized: &DMatrix<f64>| {
        upper_triangle(realized)
            .into_iter()
            .zip(upper_triangle(&d.values))
            .filter(|&(_, b)| b > 0.0)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max)
    };
    Ok(GloveLeg {
        pearson_r: pearson(&upper_triangle(&dg), &upper_triangle(&dm)),
        relative_frobenius: relative_frobenius(&dg, &dm),
        procrustes_error: procrustes(&vectors, &mds.points)?.relative_error,
        max_relative_distance_gap: max_gap(&dg),
        mds_max_relative_distance_gap: max_gap(&dm),
        clamped_pairs: d.clamped,
        smacof_stress_trace: mds.stress_trace,
        glove_loss_trace: model.loss_trace,
        stress_gap_trace: distance_objective_trace.iter().map(|o| (o - floor).abs()).collect(),
        distance_objective_trace,
        squared_distance_objective_trace,
    })
}

/// d_ij = −ln(c (Q_ij + Q_ji) / 2) with c scaling the largest off-diagonal entry to 1.
pub fn w2v_dissimilarities(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let sym = (q + q.transpose()) * 0.5;
    let mut max: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max = max.max(sym[(i, j)]);
            }
        }
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = sym[(i, j)] / max;
                if !(v > 0.0) {
                    return Err(Error::ZeroEntry(i.to_string(), j.to_string()));
                }
                d[(i, j)] = -v.ln();
            }
        }
    }
    Ok(d)
}

/// Fraction of epochs, at the start of training, excluded from the monotonicity check.
const WARMUP_FRACTION: f64 = 0.2;

fn w2v_leg(corpus: &GradedCorpus, cfg: &ExperimentConfig) -> Result<W2vLeg> {
    let built = w2v_space(corpus, &cfg.spec)?;
    let q = built.space.values().clone();
    let d = w2v_dissimilarities(&q)?;
    let mds = smacof(&d, cfg.dim, cfg.smacof)?;

    let hyper = SoftmaxHyper { dim: cfg.dim, ..cfg.softmax };
    let model = softmax_train_q(&q, &word_weights(corpus), corpus.vocab().words().to_vec(), &hyper)?;
    let m = model.objective.total_weight();
    let entropy_total = model.objective.entropy() * m;
    let stress = &mds.stress_trace;
    let divergence_trace: Vec<f64> = model
        .total_cross_entropy_trace()
        .iter()
        .enumerate()
        .map(|(e, ce)| (ce - (stress[e.min(stress.len() - 1)] + entropy_total)).abs())
        .collect();

    let epochs = divergence_trace.len() - 1;
    let monotone_from = (epochs as f64 * WARMUP_FRACTION).ceil() as usize;
    let monotone_tail = divergence_trace[monotone_from..]
        .windows(2)
        .all(|w| w[1] <= w[0]);
    Ok(W2vLeg {
        entropy_total,
        final_stress: mds.final_stress(),
        smacof_stress_trace: mds.stress_trace,
        final_kl: model.final_kl(),
        kl_trace: model.kl_trace,
        divergence_trace,
        monotone_from,
        monotone_tail,
        fallback_rows: built.fallback_rows,
    })
}

/// GloVe against metric MDS on d_GV, and softmax against metric MDS on −ln Q.
pub fn equivalence_experiment(corpus: &GradedCorpus, cfg: &ExperimentConfig) -> Result<EquivalenceReport> {
    Ok(EquivalenceReport {
        format_version: REPORT_FORMAT_VERSION,
        vocab: corpus.vocab().words().to_vec(),
        tokens: corpus.token_count(),
        dim: cfg.dim,
        glove: glove_leg(corpus, cfg)?,
        w2v: w2v_leg(corpus, cfg)?,
    })
}
