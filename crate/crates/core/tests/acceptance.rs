//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use catsem::bias::{bias_score, debias, BiasQuery, DebiasOptions, SimilarityChoice};
use catsem::corpus::{Expression, GradedCorpus, TokenizerConfig};
use catsem::embed::{
    classical_mds, equivalence_experiment, euclidean_distances, procrustes, smacof, stress, Configuration, Divergence,
    Embedding, ExperimentConfig, GloveObjective, GloveParams, KlDivergence, SmacofOptions, SoftmaxObjective,
    StressDivergence,
};
use catsem::markov::{
    telephone_fixed_point, tensor_objects, Element, ExprSet, ProbMatrix, SemanticSpace, FIXED_POINT_MAX_STEPS,
    FIXED_POINT_TOL,
};
use catsem::spaces::{glove_space, similarity_s, similarity_t, CoocSpec};
use catsem::syntax::extension_ratio;
use catsem::synthetic::{random_stochastic, MarkovCorpusSpec};
use catsem::yoneda::{weighted_colimit, ColimitWeights};

type Check = Result<String, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {:.2?}, limit {limit:?}", t));
    }
    Ok(t)
}

fn count_in(sentences: &[Vec<String>], pattern: &[&str]) -> u64 {
    sentences
        .iter()
        .flat_map(|s| s.windows(pattern.len()))
        .filter(|w| w.iter().zip(pattern).all(|(a, b)| a == b))
        .count() as u64
}

fn colimit_oracle() -> Check {
    let spec = MarkovCorpusSpec {
        tokens: 5_000,
        ..MarkovCorpusSpec::default()
    };
    let sentences = spec.sentences().map_err(fail)?;
    let corpus = spec.corpus(5, 2).map_err(fail)?;
    let stored: Vec<Expression> = (3..=5).flat_map(|n| corpus.grade(n).map(|(e, _)| e.clone())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    for _ in 0..100 {
        let t = stored[rng.random_range(0..stored.len())].ids();
        let m = rng.random_range(1..t.len() - 1);
        let (left, right) = (Expression::new(t[..m].to_vec()), Expression::new(t[m + 1..].to_vec()));
        let got = weighted_colimit(&corpus, &left, &right, ColimitWeights::default()).map_err(fail)?;

        let surfaces = |e: &Expression| -> Vec<String> { e.ids().iter().map(|&i| corpus.vocab().surface(i).unwrap().to_owned()).collect() };
        let (ls, rs) = (surfaces(&left), surfaces(&right));
        let mut total = 0;
        let mut best: Option<(u64, String)> = None;
        let mut words = corpus.vocab().words().to_vec();
        words.sort();
        for w in &words {
            let pattern: Vec<&str> = ls.iter().chain([w]).chain(&rs).map(String::as_str).collect();
            let c = count_in(&sentences, &pattern);
            total += c;
            if c > 0 && best.as_ref().is_none_or(|(bc, _)| c > *bc) {
                best = Some((c, pattern.join(" ")));
            }
        }
        let (c, expr) = best.ok_or("oracle found no candidate for a stored context")?;
        if corpus.render(&got.expression) != expr || got.probability != Ratio::new(c, total) {
            return Err(format!(
                "context {} _ {}: got {} p={}, oracle {expr} p={c}/{total}",
                ls.join(" "),
                rs.join(" "),
                corpus.render(&got.expression),
                got.probability
            ));
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("100 contexts match brute force in {t:.2?}"))
}

fn small_corpora() -> Vec<String> {
    let mut out: Vec<String> = ["a b c. a b d.", "a b c. a b c. a d c.", "a x. b x. b y.", "a b a b. b a b a. a a b."]
        .map(String::from)
        .to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words = ["a", "b", "c", "d"];
    for _ in 0..20 {
        let mut text = String::new();
        for _ in 0..rng.random_range(2..5) {
            let len = rng.random_range(2..7);
            let s: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
            text.push_str(&s.join(" "));
            text.push_str(". ");
        }
        out.push(text);
    }
    out
}

fn chain_equality() -> Check {
    let mut chains = 0u64;
    for text in small_corpora() {
        let corpus = GradedCorpus::from_text(&text, &TokenizerConfig::default(), 6, 1).map_err(fail)?;
        let stored: Vec<Expression> = corpus.expressions().map(|(e, _)| e.clone()).collect();
        for x in &stored {
            for y in stored.iter().filter(|y| y.contains(x)) {
                for z in stored.iter().filter(|z| z.contains(y)) {
                    let xy = extension_ratio(&corpus, x, y).map_err(fail)?;
                    let yz = extension_ratio(&corpus, y, z).map_err(fail)?;
                    let xz = extension_ratio(&corpus, x, z).map_err(fail)?;
                    if xy * yz != xz {
                        return Err(format!(
                            "`{text}`: p({}|{})·p({}|{}) = {} but p({}|{}) = {xz}",
                            corpus.render(y),
                            corpus.render(x),
                            corpus.render(z),
                            corpus.render(y),
                            xy * yz,
                            corpus.render(z),
                            corpus.render(x)
                        ));
                    }
                    chains += 1;
                }
            }
        }
    }
    Ok(format!("{chains} stored chains over 24 corpora, exact"))
}

fn random_subset(rng: &mut ChaCha8Rng, pool: &ExprSet, label: &str) -> ExprSet {
    let k = rng.random_range(1..=pool.len().min(8));
    let mut picked: Vec<Element> = Vec::new();
    while picked.len() < k {
        let e = pool.elements()[rng.random_range(0..pool.len())].clone();
        if !picked.contains(&e) {
            picked.push(e);
        }
    }
    ExprSet::new(label, picked).expect("distinct elements")
}

fn random_prob(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ProbMatrix {
    let (d, c) = (ExprSet::indexed("A", rows), ExprSet::indexed("B", cols));
    if rng.random_bool(0.5) {
        ProbMatrix::row_stochastic(d, c, random_stochastic(rng, rows, cols)).unwrap()
    } else {
        let v = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..=1.0));
        ProbMatrix::probabilistic(d, c, v).unwrap()
    }
}

fn monoidal_laws() -> Check {
    let corpus = MarkovCorpusSpec {
        tokens: 5_000,
        ..MarkovCorpusSpec::default()
    }
    .corpus(5, 2)
    .map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pools = [ExprSet::graded(&corpus, 1), ExprSet::graded(&corpus, 2)];
    let sorted = |s: ExprSet| s.sorted_names();
    for _ in 0..200 {
        let [x, y, z] = ["X", "Y", "Z"].map(|l| {
            let pool = &pools[rng.random_range(0..2)];
            random_subset(&mut rng, pool, l)
        });
        let left = tensor_objects(&corpus, &tensor_objects(&corpus, &x, &y).map_err(fail)?, &z).map_err(fail)?;
        let right = tensor_objects(&corpus, &x, &tensor_objects(&corpus, &y, &z).map_err(fail)?).map_err(fail)?;
        if sorted(left) != sorted(right) {
            return Err("tensor of objects is not associative".into());
        }
        let unit = ExprSet::unit();
        if tensor_objects(&corpus, &unit, &x).map_err(fail)?.elements() != x.elements()
            || tensor_objects(&corpus, &x, &unit).map_err(fail)?.elements() != x.elements()
        {
            return Err("unit law fails on objects".into());
        }
    }
    let l1 = &pools[0];
    if sorted(tensor_objects(&corpus, l1, l1).map_err(fail)?) != sorted(pools[1].clone()) {
        return Err("L1 ⊗ L1 differs from the stored grade-2 piece".into());
    }

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n: Vec<usize> = (0..4).map(|_| rng.random_range(1..=6)).collect();
        let f = ProbMatrix::row_stochastic(ExprSet::indexed("A", n[0]), ExprSet::indexed("B", n[1]), random_stochastic(&mut rng, n[0], n[1])).unwrap();
        let g = ProbMatrix::row_stochastic(ExprSet::indexed("B", n[1]), ExprSet::indexed("C", n[2]), random_stochastic(&mut rng, n[1], n[2])).unwrap();
        let h = ProbMatrix::row_stochastic(ExprSet::indexed("C", n[2]), ExprSet::indexed("D", n[3]), random_stochastic(&mut rng, n[2], n[3])).unwrap();
        let a = f.compose(&g).and_then(|fg| fg.compose(&h)).map_err(fail)?;
        let b = g.compose(&h).and_then(|gh| f.compose(&gh)).map_err(fail)?;
        worst = worst.max((a.values() - b.values()).amax());
    }
    if worst > 1e-12 {
        return Err(format!("associativity gap {worst:e} > 1e-12"));
    }

    for _ in 0..1000 {
        let n: Vec<usize> = (0..3).map(|_| rng.random_range(1..=6)).collect();
        let f = random_prob(&mut rng, n[0], n[1]);
        let g = random_prob(&mut rng, n[1], n[2]);
        let g = ProbMatrix::new(f.codomain().clone(), g.codomain().clone(), g.values().clone(), g.kind()).map_err(fail)?;
        let fg = f.compose(&g).map_err(fail)?;
        if fg.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("{:?} ∘ {:?} left [0, 1]", f.kind(), g.kind()));
        }
        let id = ProbMatrix::identity(f.domain().clone());
        if id.compose(&f).map_err(fail)?.values() != f.values() {
            return Err("identity is not a left unit".into());
        }
    }
    Ok(format!("200 object triples exact, associativity gap {worst:.1e}, 1000 mixed pairs closed"))
}

fn similarity_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=10);
        let set = ExprSet::indexed("W", n);
        let space = SemanticSpace::new(ProbMatrix::row_stochastic(set.clone(), set, random_stochastic(&mut rng, n, n)).unwrap()).unwrap();
        for m in [similarity_s(&space).map_err(fail)?, similarity_t(&space).map_err(fail)?] {
            worst = worst.max(m.max_asymmetry()).max(m.max_diagonal_error());
        }
    }
    if worst > 1e-12 {
        return Err(format!("asymmetry or diagonal error {worst:e} > 1e-12"));
    }
    Ok(format!("1000 spaces, worst deviation {worst:.1e}"))
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

fn mds_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let (mut worst_stress, mut worst_align): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let planted = normal_matrix(&mut rng, 10, 3, 1.0);
        let d = euclidean_distances(&planted);
        let init = classical_mds(&d, 3).map_err(fail)?;
        let fit = smacof(&d, 3, SmacofOptions::default()).map_err(fail)?;
        worst_stress = worst_stress.max(stress(&fit.points, &d)).max(stress(&init.points, &d));
        worst_align = worst_align.max(procrustes(&fit.points, &planted).map_err(fail)?.relative_error);
    }
    let t = within(Duration::from_secs(10), start)?;
    if worst_stress > 1e-6 || worst_align > 1e-6 {
        return Err(format!("stress {worst_stress:e}, procrustes {worst_align:e}"));
    }
    Ok(format!("50 trials, stress ≤ {worst_stress:.1e}, procrustes ≤ {worst_align:.1e}, {t:.2?}"))
}

fn relative_gap(analytic: &[f64], f: impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let h = 1e-6;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = f(&probe);
        probe[k] = x[k] - h;
        let down = f(&probe);
        probe[k] = x[k];
        let fd = (up - down) / (2.0 * h);
        num += (fd - analytic[k]).powi(2);
        den += analytic[k].powi(2);
    }
    num.sqrt() / den.sqrt().max(1e-300)
}

fn gradient_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, dim) = (6, 3);
    let (mut glove_worst, mut softmax_worst): (f64, f64) = (0.0, 0.0);
    for trial in 0..20 {
        let x = DMatrix::from_fn(n, n, |_, _| rng.random_range(0..40) as f64 + 1.0);
        let obj = GloveObjective::from_counts(&x, 20.0, 0.75).map_err(fail)?;
        let p = GloveParams::random(n, dim, 0.5, 100 + trial);
        let g = obj.gradient(&p).to_flat();
        let value = |flat: &[f64]| obj.value(&GloveParams::from_flat(n, dim, flat));
        glove_worst = glove_worst.max(relative_gap(&g, value, &p.to_flat()));

        let q = random_stochastic(&mut rng, n, n);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..50.0)).collect();
        let obj = SoftmaxObjective::new(q, &weights).map_err(fail)?;
        let v = normal_matrix(&mut rng, n, dim, 0.5);
        let g: Vec<f64> = obj.gradient(&v).iter().copied().collect();
        let value = |flat: &[f64]| obj.value(&DMatrix::from_column_slice(n, dim, flat));
        softmax_worst = softmax_worst.max(relative_gap(&g, value, v.as_slice()));
    }
    if glove_worst > 1e-5 || softmax_worst > 1e-5 {
        return Err(format!("relative errors glove {glove_worst:e}, softmax {softmax_worst:e}"));
    }
    Ok(format!("20 points each, glove {glove_worst:.1e}, softmax {softmax_worst:.1e}"))
}

fn equivalence() -> Result<(catsem::embed::EquivalenceReport, Duration), String> {
    let corpus = MarkovCorpusSpec::default().corpus(5, 2).map_err(fail)?;
    let cfg = ExperimentConfig {
        spec: CoocSpec::new(2, 1.0).map_err(fail)?,
        dim: 12,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let report = equivalence_experiment(&corpus, &cfg).map_err(fail)?;
    Ok((report, start.elapsed()))
}

fn glove_leg(run: &Result<(catsem::embed::EquivalenceReport, Duration), String>) -> Check {
    let (report, t) = run.as_ref().map_err(Clone::clone)?;
    let g = &report.glove;
    let detail = format!("pearson r {:.4}, relative frobenius {:.2}%, {t:.2?}", g.pearson_r, 100.0 * g.relative_frobenius);
    if g.pearson_r >= 0.99 && g.relative_frobenius <= 0.05 && *t < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn w2v_leg(run: &Result<(catsem::embed::EquivalenceReport, Duration), String>) -> Check {
    let (report, _) = run.as_ref().map_err(Clone::clone)?;
    let w = &report.w2v;
    let epochs = w.divergence_trace.len() - 1;
    let detail = format!(
        "divergence non-increasing from epoch {} of {epochs}: {}, final KL {:.2e}",
        w.monotone_from, w.monotone_tail, w.final_kl
    );
    let from = (epochs as f64 * 0.2).ceil() as usize;
    let monotone = w.divergence_trace[from..].windows(2).all(|p| p[1] <= p[0]);
    if monotone && w.final_kl <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Two-word sentences fixing every window count; all probabilities are dyadic.
const PLANTED: &[(&str, usize)] = &[
    ("nurse nurse", 4),
    ("nurse she", 4),
    ("nurse he", 2),
    ("nurse the", 2),
    ("she she", 4),
    ("she he", 2),
    ("she the", 2),
    ("he he", 4),
    ("he the", 4),
    ("the the", 4),
];

fn bias_round_trip() -> Check {
    let text: String = PLANTED
        .iter()
        .flat_map(|(s, n)| std::iter::repeat_n(format!("{s}.\n"), *n))
        .collect();
    let corpus = GradedCorpus::from_text(&text, &TokenizerConfig::default(), 3, 1).map_err(fail)?;
    let space = glove_space(&corpus, &CoocSpec::new(1, 0.0).map_err(fail)?).map_err(fail)?.space;
    let q = BiasQuery::new("nurse", "she", "he", SimilarityChoice::S);
    let b = bias_score(&space, &q).map_err(fail)?;

    // hand count: radius-1 windows inside each sentence, both directions
    let mut x: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut rows: BTreeMap<&str, u64> = BTreeMap::new();
    for (s, n) in PLANTED {
        let w: Vec<&str> = s.split(' ').collect();
        for (a, c) in [(w[0], w[1]), (w[1], w[0])] {
            *x.entry((a, c)).or_default() += *n as u64;
            *rows.entry(a).or_default() += *n as u64;
        }
    }
    let p = |a: &str, c: &str| Ratio::new(x[&(a, c)], rows[a]);
    let s = |a: &str, c: &str| p(a, a) * p(c, c) / (p(a, c) * p(c, a));
    let oracle = s("nurse", "she") / s("nurse", "he");
    let oracle_f = *oracle.numer() as f64 / *oracle.denom() as f64;
    if oracle != Ratio::new(1, 4) || b != oracle_f {
        return Err(format!("score {b:?}, hand count {oracle}"));
    }

    let (_, report) = debias(&space, &q, &DebiasOptions::default()).map_err(fail)?;
    let post = report.post_score.expect("debias reports a post score");
    let (dik, dij) = report.post_distances.expect("debias reports post distances");
    if (post - 1.0).abs() > 1e-12 || (dik - dij).abs() > 1e-9 {
        return Err(format!("after debias b = {post:?}, d_ik = {dik:?}, d_ij = {dij:?}"));
    }
    Ok(format!("b = {b} = {oracle} exactly; after debias |b − 1| = {:.1e}, |d_ik − d_ij| = {:.1e}", (post - 1.0).abs(), (dik - dij).abs()))
}

fn stationary_oracle(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    let svd = (p.transpose() - DMatrix::<f64>::identity(n, n)).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let idx = svd.singular_values.imin();
    let v: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let sum: f64 = v.iter().sum();
    v.iter().map(|x| x / sum).collect()
}

fn telephone_stationarity() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let p = random_stochastic(&mut rng, 20, 20);
        let set = ExprSet::indexed("S", 20);
        let space = ProbMatrix::row_stochastic(set.clone(), set.clone(), p.clone()).map_err(fail)?;
        let start = ProbMatrix::point(set, &Element::parse("s0")).map_err(fail)?;
        let fixed = telephone_fixed_point(&space, &start, FIXED_POINT_TOL, FIXED_POINT_MAX_STEPS).map_err(fail)?;
        if !fixed.converged {
            return Err(format!("seed {seed}: no fixed point after {} steps", fixed.steps));
        }
        let oracle = stationary_oracle(&p);
        let l1: f64 = fixed.distribution.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum();
        worst = worst.max(l1);
    }
    if worst > 1e-8 {
        return Err(format!("L1 gap {worst:e} > 1e-8"));
    }
    Ok(format!("10 random 20-state chains, L1 gap ≤ {worst:.1e}"))
}

fn random_embedding(rng: &mut ChaCha8Rng, n: usize) -> Embedding {
    let set = ExprSet::indexed("W", n);
    let space = SemanticSpace::new(ProbMatrix::row_stochastic(set.clone(), set, random_stochastic(rng, n, n)).unwrap()).unwrap();
    let scale = rng.random_range(0.1..3.0);
    Embedding::new(space, Configuration::unlabeled(normal_matrix(rng, n, 2, scale))).unwrap()
}

fn divergence_laws() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 6;
    let stress = StressDivergence {
        dissimilarities: euclidean_distances(&normal_matrix(&mut rng, n, 2, 1.0)),
    };
    let divergences: [&dyn Divergence; 2] = [&KlDivergence, &stress];
    let mut triples = 0;
    for _ in 0..500 {
        let [e, f, g] = [(); 3].map(|_| random_embedding(&mut rng, n));
        for d in divergences {
            if d.between(&e, &e).map_err(fail)? != 0.0 {
                return Err(format!("{}: D(E‖E) ≠ 0", d.name()));
            }
            let (eg, ef, fg) = (d.between(&e, &g).map_err(fail)?, d.between(&e, &f).map_err(fail)?, d.between(&f, &g).map_err(fail)?);
            let scale = [&e, &f, &g].iter().map(|x| d.value(x).unwrap().abs()).fold(0.0, f64::max);
            if eg > ef + fg + 4.0 * f64::EPSILON * scale {
                return Err(format!("{}: triangle inequality fails, {eg} > {ef} + {fg}", d.name()));
            }
        }
        triples += 1;
    }
    Ok(format!("D(E‖E) = 0 and triangle inequality over {triples} triples, kl and stress"))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Check)> = vec![
        ("colimit oracle equivalence", colimit_oracle()),
        ("chain equality", chain_equality()),
        ("monoidal laws", monoidal_laws()),
        ("similarity-matrix contract", similarity_contract()),
        ("MDS recovery", mds_recovery()),
        ("gradient checks", gradient_checks()),
    ];
    let run = equivalence();
    results.push(("equivalence, GloVe leg", glove_leg(&run)));
    results.push(("equivalence, W2V leg", w2v_leg(&run)));
    results.push(("bias round-trip", bias_round_trip()));
    results.push(("telephone stationarity", telephone_stationarity()));
    results.push(("divergence laws", divergence_laws()));

    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
