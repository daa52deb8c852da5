use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use catsem::bias::{bias_audit, debias, AuditRow, BiasQuery, BiasReport, DebiasOptions, SimilarityChoice};
use catsem::corpus::{GradedCorpus, TokenizerConfig};
use catsem::embed::{
    equivalence_experiment, glove_distance, glove_train, smacof, softmax_train, Configuration, EquivalenceReport,
    ExperimentConfig, GloveHyper, SmacofOptions, SoftmaxHyper,
};
use catsem::markov::{telephone_fixed_point, telephone_steps, Element, ExprSet, ProbMatrix, FIXED_POINT_MAX_STEPS, FIXED_POINT_TOL};
use catsem::spaces::{corpus_entropy, glove_space, similarity_s, similarity_t, w2v_space, BuiltSpace, CoocSpec, SimilarityMatrix};
use catsem::synthetic::MarkovCorpusSpec;
use catsem::yoneda::{completion_distribution, completion_ratios, similarity, weighted_colimit, ColimitWeights, ContextDomain};
use catsem::{Error, ErrorClass};

use crate::config::{Command, DomainKind, EmbedMethod, GlobalArgs, RunConfig, SimilarityKind, SpaceKind};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// A failed run: message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn corpus(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn query(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Corpus => 2,
            ErrorClass::Query => 3,
            ErrorClass::Numeric => 4,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Report<'a, T> {
    format_version: u32,
    command: &'static str,
    config: &'a RunConfig,
    result: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<u128>,
}

struct Run<'a> {
    config: &'a RunConfig,
    started: Instant,
}

impl Run<'_> {
    fn g(&self) -> &GlobalArgs {
        &self.config.global
    }

    fn out(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        fs::create_dir_all(&self.g().out)?;
        Ok(BufWriter::new(File::create(self.g().out.join(name))?))
    }

    fn report<T: Serialize>(&self, result: T) -> Outcome {
        let report = Report {
            format_version: REPORT_FORMAT_VERSION,
            command: self.config.command.name(),
            config: self.config,
            result,
            elapsed_ms: (!self.g().deterministic).then(|| self.started.elapsed().as_millis()),
        };
        let mut w = self.out("report.json")?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(Error::Json)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn matrix(&self, name: &str, m: &ProbMatrix) -> Outcome {
        m.write_csv(self.out(&format!("{name}.csv"))?)?;
        let mut w = self.out(&format!("{name}.meta.json"))?;
        serde_json::to_writer_pretty(&mut w, &m.sidecar()).map_err(Error::Json)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn corpus(&self) -> Result<GradedCorpus, Failure> {
        let path = self.g().corpus.as_deref().ok_or_else(|| Failure::corpus("--corpus is required"))?;
        load_corpus(path, self.g())
    }
}

fn load_corpus(path: &Path, g: &GlobalArgs) -> Result<GradedCorpus, Failure> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Failure::corpus(format!("{}: {e}", p.display())));
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(GradedCorpus::from_json(&read(path)?)?);
    }
    Ok(GradedCorpus::from_text(&read(path)?, &TokenizerConfig::default(), g.max_grade, g.window)?)
}

fn cooc_spec(corpus: &GradedCorpus, g: &GlobalArgs) -> Result<CoocSpec, Failure> {
    Ok(CoocSpec::new(corpus.window_radius(), g.alpha)?)
}

fn dim(g: &GlobalArgs, n: usize) -> usize {
    g.dim.unwrap_or(n.min(12))
}

fn build_space(kind: SpaceKind, corpus: &GradedCorpus, spec: &CoocSpec) -> Result<BuiltSpace, Failure> {
    Ok(match kind {
        SpaceKind::Glove => glove_space(corpus, spec)?,
        SpaceKind::W2v => w2v_space(corpus, spec)?,
    })
}

pub fn run(config: &RunConfig) -> Outcome {
    let run = Run {
        config,
        started: Instant::now(),
    };
    match &config.command {
        Command::Ingest => ingest(&run),
        Command::Complete { left, right, weights } => complete(&run, left, right, weights.as_deref()),
        Command::Similarity { a, b, domain, grade } => yoneda_similarity(&run, a, b, *domain, *grade),
        Command::Space { space, kind } => export_space(&run, *space, *kind),
        Command::Embed { method, iterations } => embed(&run, *method, *iterations),
        Command::Equivalence { .. } => equivalence(&run),
        Command::Audit {
            queries,
            space,
            debias,
            renormalize,
        } => audit(&run, queries, *space, *debias, *renormalize),
        Command::Telephone { start, space, steps } => telephone(&run, start, *space, *steps),
        Command::Replay { .. } => Err(Failure::query("a replayed report cannot itself be a replay")),
    }
}

#[derive(Serialize)]
struct GradeRow {
    grade: usize,
    expressions: usize,
    occurrences: u64,
}

#[derive(Serialize)]
struct IngestResult {
    snapshot: String,
    tokens: u64,
    vocab: usize,
    max_grade: usize,
    window_radius: usize,
    grades: Vec<GradeRow>,
}

fn ingest(run: &Run) -> Outcome {
    let corpus = run.corpus()?;
    let mut w = run.out("corpus.json")?;
    w.write_all(corpus.to_json()?.as_bytes())?;
    w.flush()?;
    let grades: Vec<GradeRow> = (1..=corpus.max_grade())
        .map(|n| GradeRow {
            grade: n,
            expressions: corpus.grade_size(n),
            occurrences: corpus.grade(n).map(|(_, c)| c).sum(),
        })
        .collect();
    println!("vocab {}", corpus.vocab().len());
    println!("tokens {}", corpus.token_count());
    for r in &grades {
        println!("grade {}: {} expressions, {} occurrences", r.grade, r.expressions, r.occurrences);
    }
    run.report(IngestResult {
        snapshot: "corpus.json".into(),
        tokens: corpus.token_count(),
        vocab: corpus.vocab().len(),
        max_grade: corpus.max_grade(),
        window_radius: corpus.window_radius(),
        grades,
    })
}

#[derive(Serialize)]
struct MiddleWord {
    word: String,
    probability: String,
    value: f64,
}

#[derive(Serialize)]
struct CompleteResult {
    expression: String,
    middle: String,
    probability: String,
    value: f64,
    score: f64,
    weights: (f64, f64),
    distribution: Vec<MiddleWord>,
}

fn complete(run: &Run, left: &str, right: &str, weights: Option<&[f64]>) -> Outcome {
    let corpus = run.corpus()?;
    let (l, r) = (corpus.parse(left)?, corpus.parse(right)?);
    let weights = match weights {
        Some(&[a, b]) => ColimitWeights::new(a, b)?,
        Some(_) => return Err(Failure::query("--weights takes exactly two values")),
        None => ColimitWeights::default(),
    };
    let best = weighted_colimit(&corpus, &l, &r, weights)?;
    let surface = |id: u32| corpus.vocab().surface(id).unwrap_or("?").to_owned();
    let distribution: Vec<MiddleWord> = completion_ratios(&corpus, &l, &r)?
        .into_iter()
        .map(|(w, p)| MiddleWord {
            word: surface(w),
            probability: p.to_string(),
            value: *p.numer() as f64 / *p.denom() as f64,
        })
        .collect();

    println!("{}  p={:?}", corpus.render(&best.expression), best.probability_f64());
    for m in &distribution {
        println!("  {}  {} ({:?})", m.word, m.probability, m.value);
    }
    run.matrix("completion", &completion_distribution(&corpus, &l, &r)?)?;
    run.report(CompleteResult {
        expression: corpus.render(&best.expression),
        middle: surface(best.middle),
        probability: best.probability.to_string(),
        value: best.probability_f64(),
        score: best.score,
        weights: (weights.left, weights.right),
        distribution,
    })
}

#[derive(Serialize)]
struct SimilarityResult {
    a: String,
    b: String,
    a_given_b: f64,
    b_given_a: f64,
}

fn yoneda_similarity(run: &Run, a: &str, b: &str, domain: DomainKind, grade: Option<usize>) -> Outcome {
    let corpus = run.corpus()?;
    let (ea, eb) = (corpus.parse(a)?, corpus.parse(b)?);
    let domain = match (domain, grade) {
        (DomainKind::All, _) => ContextDomain::All,
        (DomainKind::Common, _) => ContextDomain::CommonExtensions,
        (DomainKind::Grade, Some(n)) => ContextDomain::Grade(n),
        (DomainKind::Grade, None) => return Err(Failure::query("--domain grade needs --grade")),
    };
    let ab = similarity(&corpus, &ea, &eb, domain)?;
    let ba = similarity(&corpus, &eb, &ea, domain)?;
    println!("p({a} | {b}) = {ab:?}");
    println!("p({b} | {a}) = {ba:?}");
    run.report(SimilarityResult {
        a: corpus.render(&ea),
        b: corpus.render(&eb),
        a_given_b: ab,
        b_given_a: ba,
    })
}

fn write_similarity<W: Write>(out: W, m: &SimilarityMatrix) -> Outcome {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    let labels = m.labels.names();
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(Error::Csv)?;
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend((0..m.len()).map(|j| format!("{:?}", m.get(i, j))));
        w.write_record(&rec).map_err(Error::Csv)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpaceResult {
    words: Vec<String>,
    fallback_rows: Vec<String>,
    max_asymmetry: f64,
    max_diagonal_error: f64,
    entropy: f64,
}

fn similarity_of(space: &catsem::markov::SemanticSpace, kind: SimilarityKind) -> Result<SimilarityMatrix, Failure> {
    Ok(match kind {
        SimilarityKind::S => similarity_s(space)?,
        SimilarityKind::T => similarity_t(space)?,
    })
}

fn export_space(run: &Run, kind: SpaceKind, sim: SimilarityKind) -> Outcome {
    let corpus = run.corpus()?;
    let built = build_space(kind, &corpus, &cooc_spec(&corpus, run.g())?)?;
    let m = similarity_of(&built.space, sim)?;
    run.matrix("space", built.space.matrix())?;
    write_similarity(run.out("similarity.csv")?, &m)?;
    println!("{} words, {} fallback rows", built.space.len(), built.fallback_rows.len());
    run.report(SpaceResult {
        words: built.space.words(),
        entropy: corpus_entropy(built.space.matrix(), &corpus),
        fallback_rows: built.fallback_rows,
        max_asymmetry: m.max_asymmetry(),
        max_diagonal_error: m.max_diagonal_error(),
    })
}

#[derive(Serialize)]
struct EmbedResult {
    method: EmbedMethod,
    dim: usize,
    final_value: f64,
    steps: usize,
}

fn write_trace(run: &Run, name: &str, columns: &[(&str, &[f64])]) -> Outcome {
    let mut w = csv::Writer::from_writer(run.out(name)?);
    let mut header = vec!["step"];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header).map_err(Error::Csv)?;
    let len = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    for s in 0..len {
        let mut rec = vec![s.to_string()];
        rec.extend(columns.iter().map(|(_, c)| c.get(s).map(|v| format!("{v:?}")).unwrap_or_default()));
        w.write_record(&rec).map_err(Error::Csv)?;
    }
    w.flush()?;
    Ok(())
}

fn embed(run: &Run, method: EmbedMethod, iterations: Option<usize>) -> Outcome {
    let g = run.g();
    let corpus = run.corpus()?;
    let spec = cooc_spec(&corpus, g)?;
    let d = dim(g, corpus.vocab().len());
    let (config, trace): (Configuration, Vec<f64>) = match method {
        EmbedMethod::Glove => {
            let defaults = GloveHyper::default();
            let hyper = GloveHyper {
                dim: d,
                seed: g.seed,
                iterations: iterations.unwrap_or(defaults.iterations),
                ..defaults
            };
            let model = glove_train(&corpus, &spec, &hyper)?;
            (model.configuration(), model.loss_trace)
        }
        EmbedMethod::W2v => {
            let defaults = SoftmaxHyper::default();
            let hyper = SoftmaxHyper {
                dim: d,
                seed: g.seed,
                epochs: iterations.unwrap_or(defaults.epochs),
                ..defaults
            };
            let model = softmax_train(&corpus, &spec, &hyper)?;
            (model.configuration(), model.kl_trace)
        }
        EmbedMethod::Mds => {
            let space = glove_space(&corpus, &spec)?.space;
            let dist = glove_distance(&space)?;
            let defaults = SmacofOptions::default();
            let options = SmacofOptions {
                max_iter: iterations.unwrap_or(defaults.max_iter),
                ..defaults
            };
            let fit = smacof(&dist.values, d, options)?;
            (Configuration::new(space.words(), fit.points)?, fit.stress_trace)
        }
    };
    config.write_csv(run.out("embedding.csv")?)?;
    let column = match method {
        EmbedMethod::Glove => "loss",
        EmbedMethod::W2v => "kl",
        EmbedMethod::Mds => "stress",
    };
    write_trace(run, "trace.csv", &[(column, &trace)])?;
    let final_value = *trace.last().unwrap_or(&f64::NAN);
    println!("{column} {final_value:?} after {} steps", trace.len().saturating_sub(1));
    run.report(EmbedResult {
        method,
        dim: d,
        final_value,
        steps: trace.len().saturating_sub(1),
    })
}

#[derive(Serialize)]
struct EquivalenceResult {
    #[serde(flatten)]
    report: EquivalenceReport,
    violations: Vec<String>,
}

fn equivalence(run: &Run) -> Outcome {
    let g = run.g();
    let Command::Equivalence {
        tokens,
        vocab,
        iterations,
        epochs,
        min_pearson,
        max_frobenius,
        max_kl,
    } = run.config.command
    else {
        unreachable!("dispatched on the equivalence command")
    };
    let corpus = match &g.corpus {
        Some(path) => load_corpus(path, g)?,
        None => MarkovCorpusSpec {
            vocab,
            tokens,
            seed: g.seed,
            ..MarkovCorpusSpec::default()
        }
        .corpus(g.max_grade, g.window)?,
    };
    let mut cfg = ExperimentConfig {
        spec: cooc_spec(&corpus, g)?,
        dim: dim(g, corpus.vocab().len()),
        ..ExperimentConfig::default()
    };
    cfg.glove.seed = g.seed;
    cfg.softmax.seed = g.seed;
    if let Some(n) = iterations {
        cfg.glove.iterations = n;
    }
    if let Some(n) = epochs {
        cfg.softmax.epochs = n;
    }
    let report = equivalence_experiment(&corpus, &cfg)?;

    let mut violations = Vec::new();
    if !(report.glove.pearson_r >= min_pearson) {
        violations.push(format!("pearson r {} < {min_pearson}", report.glove.pearson_r));
    }
    if !(report.glove.relative_frobenius <= max_frobenius) {
        violations.push(format!("relative frobenius {} > {max_frobenius}", report.glove.relative_frobenius));
    }
    if !report.w2v.monotone_tail {
        violations.push(format!("divergence increases after epoch {}", report.w2v.monotone_from));
    }
    if !(report.w2v.final_kl <= max_kl) {
        violations.push(format!("final KL {} > {max_kl}", report.w2v.final_kl));
    }

    let gl = &report.glove;
    write_trace(
        run,
        "glove_traces.csv",
        &[
            ("loss", &gl.glove_loss_trace),
            ("distance_objective", &gl.distance_objective_trace),
            ("squared_distance_objective", &gl.squared_distance_objective_trace),
            ("stress_gap", &gl.stress_gap_trace),
            ("smacof_stress", &gl.smacof_stress_trace),
        ],
    )?;
    let w2 = &report.w2v;
    write_trace(
        run,
        "w2v_traces.csv",
        &[
            ("kl", &w2.kl_trace),
            ("divergence", &w2.divergence_trace),
            ("smacof_stress", &w2.smacof_stress_trace),
        ],
    )?;
    println!("glove: pearson r {:?}, relative frobenius {:?}", gl.pearson_r, gl.relative_frobenius);
    println!("w2v: final KL {:?}, monotone tail {}", w2.final_kl, w2.monotone_tail);
    for v in &violations {
        eprintln!("threshold violated: {v}");
    }
    let failed = !violations.is_empty();
    run.report(EquivalenceResult { report, violations })?;
    if failed {
        return Err(Failure::numeric("equivalence thresholds not met"));
    }
    Ok(())
}

fn parse_queries(text: &str) -> Result<Vec<BiasQuery>, Failure> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let similarity = match fields.get(3).copied() {
            None | Some("s") | Some("S") => SimilarityChoice::S,
            Some("t") | Some("T") => SimilarityChoice::T,
            Some(other) => return Err(Failure::query(format!("line {}: unknown similarity `{other}`", n + 1))),
        };
        if !(3..=4).contains(&fields.len()) {
            return Err(Failure::query(format!("line {}: expected `target k j [s|t]`", n + 1)));
        }
        out.push(BiasQuery::new(fields[0], fields[1], fields[2], similarity));
    }
    Ok(out)
}

#[derive(Serialize)]
struct AuditResult {
    rows: Vec<AuditRow>,
    debiased: Vec<BiasReport>,
}

fn audit(run: &Run, queries: &Path, kind: SpaceKind, do_debias: bool, renormalize: bool) -> Outcome {
    let text = fs::read_to_string(queries).map_err(|e| Failure::corpus(format!("{}: {e}", queries.display())))?;
    let queries = parse_queries(&text)?;
    let corpus = run.corpus()?;
    let space = build_space(kind, &corpus, &cooc_spec(&corpus, run.g())?)?.space;
    let rows = bias_audit(&space, &queries);

    let mut debiased = Vec::new();
    if do_debias {
        let options = DebiasOptions {
            renormalize,
            audited: queries.clone(),
        };
        for q in queries.iter().filter(|q| q.similarity == SimilarityChoice::S) {
            if let Ok((_, report)) = debias(&space, q, &options) {
                debiased.push(report);
            }
        }
    }

    let mut w = csv::Writer::from_writer(run.out("audit.csv")?);
    w.write_record(["target", "k", "j", "similarity", "score", "error"]).map_err(Error::Csv)?;
    for r in &rows {
        let sim = match r.query.similarity {
            SimilarityChoice::S => "s",
            SimilarityChoice::T => "t",
        };
        w.write_record([
            r.query.target.as_str(),
            &r.query.pair.0,
            &r.query.pair.1,
            sim,
            &r.score.map(|s| format!("{s:?}")).unwrap_or_default(),
            r.error.as_deref().unwrap_or(""),
        ])
        .map_err(Error::Csv)?;
    }
    w.flush()?;
    for r in &rows {
        match (r.score, &r.error) {
            (Some(b), _) => println!("{} ({}, {})  b={b:?}", r.query.target, r.query.pair.0, r.query.pair.1),
            (None, e) => println!("{} ({}, {})  error: {}", r.query.target, r.query.pair.0, r.query.pair.1, e.as_deref().unwrap_or("")),
        }
    }
    run.report(AuditResult { rows, debiased })
}

#[derive(Serialize)]
struct TelephoneOutcome {
    start: String,
    argmax: String,
    steps: usize,
    converged: bool,
    distribution: Vec<(String, f64)>,
}

fn telephone(run: &Run, start: &str, kind: SpaceKind, steps: Option<usize>) -> Outcome {
    let corpus = run.corpus()?;
    let space = build_space(kind, &corpus, &cooc_spec(&corpus, run.g())?)?.space;
    let set: ExprSet = space.matrix().domain().clone();
    let origin = ProbMatrix::point(set.clone(), &Element::parse(start))?;
    let result = match steps {
        Some(n) => telephone_steps(space.matrix(), &origin, n)?,
        None => telephone_fixed_point(space.matrix(), &origin, FIXED_POINT_TOL, FIXED_POINT_MAX_STEPS)?,
    };
    let dist = ProbMatrix::distribution(set.clone(), &result.distribution)?;
    run.matrix("distribution", &dist)?;
    println!("{} after {} steps{}", result.argmax.name(), result.steps, if result.converged { "" } else { " (not converged)" });
    run.report(TelephoneOutcome {
        start: start.to_owned(),
        argmax: result.argmax.name(),
        steps: result.steps,
        converged: result.converged,
        distribution: set.names().into_iter().zip(result.distribution).collect(),
    })
}
