use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use catsem::corpus::{DEFAULT_MAX_GRADE, DEFAULT_WINDOW_RADIUS};
use catsem::spaces::DEFAULT_ALPHA;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Plain-text corpus, or a snapshot written by `ingest` (*.json).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,

    /// Longest stored expression. Ignored when loading a snapshot.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_GRADE)]
    pub max_grade: usize,

    /// Co-occurrence window radius. Ignored when loading a snapshot.
    #[arg(long, global = true, default_value_t = DEFAULT_WINDOW_RADIUS)]
    pub window: usize,

    /// Add-α smoothing of co-occurrence counts.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Embedding dimension; defaults to min(12, vocabulary size).
    #[arg(long, global = true)]
    pub dim: Option<usize>,

    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Output directory for reports and CSV files.
    #[arg(long, global = true, default_value = "catsem-out")]
    pub out: PathBuf,

    /// Leave wall-clock timings out of reports so reruns are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// Row-normalized smoothed window co-occurrences.
    Glove,
    /// Context-position distribution from stored centered expressions.
    W2v,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    All,
    Grade,
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Glove,
    W2v,
    Mds,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Build the graded corpus and save a snapshot.
    Ingest,
    /// Most probable middle word for LEFT _ RIGHT, plus the full distribution.
    Complete {
        left: String,
        right: String,
        /// Colimit weights W(1) W(2), each in (0, 1].
        #[arg(long, num_args = 2, value_names = ["W1", "W2"])]
        weights: Option<Vec<f64>>,
    },
    /// Yoneda similarity between two same-grade expressions, both directions.
    Similarity {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = DomainKind::Common)]
        domain: DomainKind,
        /// Grade for `--domain grade`.
        #[arg(long)]
        grade: Option<usize>,
    },
    /// Export a semantic space and its S or T similarity matrix.
    Space {
        #[arg(long, value_enum, default_value_t = SpaceKind::Glove)]
        space: SpaceKind,
        #[arg(long, value_enum, default_value_t = SimilarityKind::S)]
        kind: SimilarityKind,
    },
    /// Train or fit an embedding and write its coordinates.
    Embed {
        #[arg(long, value_enum, default_value_t = EmbedMethod::Glove)]
        method: EmbedMethod,
        /// Iterations (GloVe) or epochs (softmax).
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// GloVe and softmax trainers against metric MDS; exits 4 if a threshold is missed.
    Equivalence {
        /// Without --corpus, generate a Markov-chain corpus with this many tokens.
        #[arg(long, default_value_t = 20_000)]
        tokens: usize,
        /// Vocabulary of the generated corpus.
        #[arg(long, default_value_t = 12)]
        vocab: usize,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 0.99)]
        min_pearson: f64,
        #[arg(long, default_value_t = 0.05)]
        max_frobenius: f64,
        #[arg(long, default_value_t = 1e-2)]
        max_kl: f64,
    },
    /// Score bias queries, one `target k j [s|t]` per line.
    Audit {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_enum, default_value_t = SpaceKind::Glove)]
        space: SpaceKind,
        /// Also equalize each S query and report the result.
        #[arg(long)]
        debias: bool,
        /// Rescale the touched rows to unit sums after debiasing.
        #[arg(long)]
        renormalize: bool,
    },
    /// Push a point distribution through a semantic space.
    Telephone {
        #[arg(long)]
        start: String,
        #[arg(long, value_enum, default_value_t = SpaceKind::Glove)]
        space: SpaceKind,
        /// Fixed number of steps; iterate to a fixed point when absent.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Re-run the command recorded in a report.
    #[serde(skip)]
    Replay { report: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Complete { .. } => "complete",
            Command::Similarity { .. } => "similarity",
            Command::Space { .. } => "space",
            Command::Embed { .. } => "embed",
            Command::Equivalence { .. } => "equivalence",
            Command::Audit { .. } => "audit",
            Command::Telephone { .. } => "telephone",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Everything a run depends on, echoed into its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub global: GlobalArgs,
    pub command: Command,
    /// Value of CATSEM_THREADS, if set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threads: Option<usize>,
}
