//! Labeled probabilistic matrices between sets of expressions.
//!
//! Rows are indexed by the source (conditioning) element and columns by the
//! target, so a row-stochastic matrix has unit row sums. Composition of two
//! row-stochastic matrices is the matrix product; as soon as one factor is merely
//! probabilistic each row of the product is divided by the ceiling of the left
//! factor's row sum, which keeps every entry inside [0, 1].

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{Expression, GradedCorpus, Vocabulary, EOS_SURFACE};
use crate::error::{Error, Result};

/// Row sums of a row-stochastic matrix must be within this of 1.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub const MATRIX_FORMAT_VERSION: u32 = 1;

/// A tuple of expressions, each a list of surface tokens. Plain expressions are
/// 1-tuples; Cartesian products build longer tuples. The unit `<eos>` is the
/// 1-tuple holding the empty expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(Vec<Vec<String>>);

impl Element {
    pub fn expr<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Self(vec![tokens.into_iter().map(Into::into).collect()])
    }

    pub fn unit() -> Self {
        Self(vec![Vec::new()])
    }

    pub fn from_expression(e: &Expression, vocab: &Vocabulary) -> Self {
        Self::expr(e.ids().iter().map(|&id| {
            vocab
                .surface(id)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("#{id}"))
        }))
    }

    pub fn tuple(parts: &[&Element]) -> Self {
        Self(parts.iter().flat_map(|e| e.0.iter().cloned()).collect())
    }

    pub fn components(&self) -> &[Vec<String>] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_empty()
    }

    /// The single expression of a 1-tuple.
    pub fn as_expression(&self) -> Option<&[String]> {
        match self.0.as_slice() {
            [e] => Some(e),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        self.0
            .iter()
            .map(|e| {
                if e.is_empty() {
                    EOS_SURFACE.to_owned()
                } else {
                    e.join(" ")
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }

    pub fn parse(name: &str) -> Self {
        Self(
            name.split(" | ")
                .map(|part| {
                    if part == EOS_SURFACE {
                        Vec::new()
                    } else {
                        part.split(' ').filter(|s| !s.is_empty()).map(str::to_owned).collect()
                    }
                })
                .collect(),
        )
    }

    fn ids(&self, corpus: &GradedCorpus) -> Result<Expression> {
        let tokens = self
            .as_expression()
            .ok_or_else(|| Error::Unsupported(format!("`{}` is a tuple, not an expression", self.name())))?;
        tokens
            .iter()
            .map(|t| corpus.vocab().id(t).ok_or_else(|| Error::UnknownWord(t.clone())))
            .collect::<Result<Vec<_>>>()
            .map(Expression::new)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// An object: an ordered set of distinct elements. The order fixes matrix indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprSet {
    label: String,
    elements: Vec<Element>,
}

impl ExprSet {
    pub fn new(label: impl Into<String>, elements: Vec<Element>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &elements {
            if !seen.insert(e) {
                return Err(Error::InvalidParameter(format!("duplicate element `{e}`")));
            }
        }
        Ok(Self {
            label: label.into(),
            elements,
        })
    }

    /// Single-token elements `s0, s1, ...` for matrices that are not tied to a corpus.
    pub fn indexed(label: impl Into<String>, n: usize) -> Self {
        Self {
            label: label.into(),
            elements: (0..n).map(|i| Element::expr([format!("s{i}")])).collect(),
        }
    }

    pub fn from_expressions(label: impl Into<String>, exprs: &[Expression], vocab: &Vocabulary) -> Self {
        let mut elements = Vec::with_capacity(exprs.len());
        for e in exprs {
            let el = Element::from_expression(e, vocab);
            if !elements.contains(&el) {
                elements.push(el);
            }
        }
        Self {
            label: label.into(),
            elements,
        }
    }

    /// L¹: the vocabulary in id order.
    pub fn vocabulary(vocab: &Vocabulary) -> Self {
        Self {
            label: "L1".into(),
            elements: vocab.words().iter().map(|w| Element::expr([w.as_str()])).collect(),
        }
    }

    /// Lⁿ: all stored grade-n expressions.
    pub fn graded(corpus: &GradedCorpus, n: usize) -> Self {
        if n == 0 {
            return Self::unit();
        }
        let exprs: Vec<Expression> = corpus.grade(n).map(|(e, _)| e.clone()).collect();
        Self::from_expressions(format!("L{n}"), &exprs, corpus.vocab())
    }

    /// L⁰ = {<eos>}, the tensor unit.
    pub fn unit() -> Self {
        Self {
            label: "L0".into(),
            elements: vec![Element::unit()],
        }
    }

    /// A tensor product with no concatenations in the corpus.
    pub fn is_degenerate(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.elements.len() == 1 && self.elements[0].is_unit()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.elements.iter().map(Element::name).collect()
    }

    pub fn index_of(&self, e: &Element) -> Option<usize> {
        self.elements.iter().position(|x| x == e)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index_of(&Element::parse(name))
    }

    pub fn sorted_names(&self) -> Vec<String> {
        let mut n = self.names();
        n.sort();
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    RowStochastic,
    Probabilistic,
}

/// A morphism domain → codomain: rows indexed by the domain, columns by the codomain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    domain: ExprSet,
    codomain: ExprSet,
    values: DMatrix<f64>,
    kind: Kind,
}

impl ProbMatrix {
    pub fn new(domain: ExprSet, codomain: ExprSet, values: DMatrix<f64>, kind: Kind) -> Result<Self> {
        if values.nrows() != domain.len() || values.ncols() != codomain.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for {} -> {} ({} x {} elements)",
                values.nrows(),
                values.ncols(),
                domain.label(),
                codomain.label(),
                domain.len(),
                codomain.len()
            )));
        }
        for r in 0..values.nrows() {
            for c in 0..values.ncols() {
                let v = values[(r, c)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::EntryOutOfRange { row: r, col: c, value: v });
                }
            }
            if kind == Kind::RowStochastic {
                let sum: f64 = values.row(r).iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NotStochastic { row: r, sum });
                }
            }
        }
        Ok(Self {
            domain,
            codomain,
            values,
            kind,
        })
    }

    pub fn row_stochastic(domain: ExprSet, codomain: ExprSet, values: DMatrix<f64>) -> Result<Self> {
        Self::new(domain, codomain, values, Kind::RowStochastic)
    }

    pub fn probabilistic(domain: ExprSet, codomain: ExprSet, values: DMatrix<f64>) -> Result<Self> {
        Self::new(domain, codomain, values, Kind::Probabilistic)
    }

    pub fn identity(set: ExprSet) -> Self {
        let n = set.len();
        Self {
            domain: set.clone(),
            codomain: set,
            values: DMatrix::identity(n, n),
            kind: Kind::RowStochastic,
        }
    }

    /// A distribution on `set`, as a morphism out of the unit object.
    pub fn distribution(set: ExprSet, probs: &[f64]) -> Result<Self> {
        Self::row_stochastic(ExprSet::unit(), set, DMatrix::from_row_slice(1, probs.len(), probs))
    }

    /// The point mass on one element.
    pub fn point(set: ExprSet, element: &Element) -> Result<Self> {
        let idx = set
            .index_of(element)
            .ok_or_else(|| Error::UnknownExpression(element.name()))?;
        let mut probs = vec![0.0; set.len()];
        probs[idx] = 1.0;
        Self::distribution(set, &probs)
    }

    pub fn domain(&self) -> &ExprSet {
        &self.domain
    }

    pub fn codomain(&self) -> &ExprSet {
        &self.codomain
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows()).map(|r| self.values.row(r).iter().sum()).collect()
    }

    /// True for the identity of an object: same labels on both sides, exact 0/1 diagonal.
    pub fn is_identity(&self) -> bool {
        self.domain.elements == self.codomain.elements && self.values == DMatrix::identity(self.nrows(), self.ncols())
    }

    /// `self` then `next`: the composite domain(self) → codomain(next).
    pub fn compose(&self, next: &ProbMatrix) -> Result<ProbMatrix> {
        if self.codomain.len() != next.domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {} -> {} ({}) with {} -> {} ({})",
                self.domain.label(),
                self.codomain.label(),
                self.codomain.len(),
                next.domain.label(),
                next.codomain.label(),
                next.domain.len()
            )));
        }
        if let Some(pos) = self
            .codomain
            .elements
            .iter()
            .zip(&next.domain.elements)
            .position(|(a, b)| a != b)
        {
            return Err(Error::LabelMismatch(pos));
        }

        // The ceiling rule alone would halve rows summing into (1, 2] when composed
        // with an identity, so identities are passed through untouched.
        if next.is_identity() {
            return Ok(ProbMatrix {
                codomain: next.codomain.clone(),
                ..self.clone()
            });
        }
        if self.is_identity() {
            return Ok(ProbMatrix {
                domain: self.domain.clone(),
                ..next.clone()
            });
        }

        let mut values = &self.values * &next.values;
        let kind = if self.kind == Kind::RowStochastic && next.kind == Kind::RowStochastic {
            Kind::RowStochastic
        } else {
            if self.kind == Kind::Probabilistic {
                for (r, sum) in self.row_sums().into_iter().enumerate() {
                    let ceiling = ceil_with_tolerance(sum).max(1.0);
                    values.row_mut(r).iter_mut().for_each(|v| *v /= ceiling);
                }
            }
            Kind::Probabilistic
        };
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(ProbMatrix {
            domain: self.domain.clone(),
            codomain: next.codomain.clone(),
            values,
            kind,
        })
    }

    /// Compose a chain left to right: `fs[0]` first.
    pub fn compose_chain(fs: &[ProbMatrix]) -> Result<ProbMatrix> {
        let (first, rest) = fs
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty composition chain".into()))?;
        rest.iter().try_fold(first.clone(), |acc, f| acc.compose(f))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.codomain.names());
        w.write_record(&header)?;
        for (r, name) in self.domain.names().into_iter().enumerate() {
            let mut rec = vec![name];
            rec.extend(self.values.row(r).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> MatrixSidecar {
        MatrixSidecar {
            format_version: MATRIX_FORMAT_VERSION,
            kind: self.kind,
            domain: SetLabels::of(&self.domain),
            codomain: SetLabels::of(&self.codomain),
        }
    }

    pub fn read_csv<R: Read>(input: R, sidecar: &MatrixSidecar) -> Result<Self> {
        if sidecar.format_version != MATRIX_FORMAT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported matrix format version {}",
                sidecar.format_version
            )));
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
        if header != sidecar.codomain.elements {
            return Err(Error::Snapshot("column labels disagree with sidecar".into()));
        }
        let mut names = Vec::new();
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut fields = rec.iter();
            names.push(fields.next().unwrap_or_default().to_owned());
            for f in fields {
                data.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::Snapshot(format!("bad number `{f}`")))?,
                );
            }
        }
        if names != sidecar.domain.elements {
            return Err(Error::Snapshot("row labels disagree with sidecar".into()));
        }
        if data.len() != names.len() * header.len() {
            return Err(Error::Snapshot("ragged matrix rows".into()));
        }
        ProbMatrix::new(
            sidecar.domain.to_set()?,
            sidecar.codomain.to_set()?,
            DMatrix::from_row_slice(names.len(), header.len(), &data),
            sidecar.kind,
        )
    }
}

fn ceil_with_tolerance(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= STOCHASTIC_TOL {
        nearest
    } else {
        x.ceil()
    }
}

/// JSON metadata written next to a matrix CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub format_version: u32,
    pub kind: Kind,
    pub domain: SetLabels,
    pub codomain: SetLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetLabels {
    pub label: String,
    pub elements: Vec<String>,
}

impl SetLabels {
    fn of(set: &ExprSet) -> Self {
        Self {
            label: set.label().to_owned(),
            elements: set.names(),
        }
    }

    fn to_set(&self) -> Result<ExprSet> {
        ExprSet::new(self.label.clone(), self.elements.iter().map(|n| Element::parse(n)).collect())
    }
}

/// A square vocabulary-indexed endomorphism of L¹.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticSpace(ProbMatrix);

impl SemanticSpace {
    pub fn new(m: ProbMatrix) -> Result<Self> {
        if m.domain.elements != m.codomain.elements {
            return Err(Error::ShapeMismatch("a semantic space must be an endomorphism".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ProbMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ProbMatrix {
        self.0
    }

    pub fn words(&self) -> Vec<String> {
        self.0.domain.names()
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn word_index(&self, word: &str) -> Result<usize> {
        self.0
            .domain
            .position(word)
            .ok_or_else(|| Error::UnknownWord(word.to_owned()))
    }
}

impl Deref for SemanticSpace {
    type Target = ProbMatrix;

    fn deref(&self) -> &ProbMatrix {
        &self.0
    }
}

/// X ⊗ Y: corpus expressions made of an element of X followed directly by one of Y.
/// The empty result is the degenerate product (see [`ExprSet::is_degenerate`]).
pub fn tensor_objects(corpus: &GradedCorpus, x: &ExprSet, y: &ExprSet) -> Result<ExprSet> {
    Ok(tensor_pairs(corpus, x, y)?.0)
}

type SplitIndex = HashMap<Element, (usize, usize)>;

fn tensor_pairs(corpus: &GradedCorpus, x: &ExprSet, y: &ExprSet) -> Result<(ExprSet, SplitIndex)> {
    let label = format!("{}⊗{}", x.label(), y.label());
    let mut elements = Vec::new();
    let mut split: SplitIndex = HashMap::new();
    let mut ambiguous = None;
    for (i, a) in x.elements().iter().enumerate() {
        let ea = a.ids(corpus)?;
        for (j, b) in y.elements().iter().enumerate() {
            let eb = b.ids(corpus)?;
            let joined = ea.concat(&eb);
            if !joined.is_empty() && !corpus.contains(&joined) {
                continue;
            }
            let el = Element::from_expression(&joined, corpus.vocab());
            let el = if joined.is_empty() { Element::unit() } else { el };
            match split.get(&el) {
                Some(&prev) if prev != (i, j) => ambiguous = Some(el.name()),
                Some(_) => {}
                None => {
                    split.insert(el.clone(), (i, j));
                    elements.push(el);
                }
            }
        }
    }
    let set = ExprSet { label, elements };
    if let Some(name) = ambiguous {
        return Err(Error::AmbiguousSplit(name));
    }
    Ok((set, split))
}

/// p ⊗ q on (A⊗X) → (B⊗Y): the entry for `ax → by` is p(b|a)·q(y|x).
pub fn tensor_morphisms(corpus: &GradedCorpus, p: &ProbMatrix, q: &ProbMatrix) -> Result<ProbMatrix> {
    let (source, source_split) = tensor_pairs(corpus, p.domain(), q.domain())?;
    let (target, target_split) = tensor_pairs(corpus, p.codomain(), q.codomain())?;
    for set in [&source, &target] {
        if set.is_degenerate() {
            return Err(Error::EmptyTensor(set.label().to_owned()));
        }
    }
    let mut values = DMatrix::zeros(source.len(), target.len());
    for (r, s) in source.elements().iter().enumerate() {
        let (a, x) = source_split[s];
        for (c, t) in target.elements().iter().enumerate() {
            let (b, y) = target_split[t];
            values[(r, c)] = p.get(a, b) * q.get(x, y);
        }
    }
    let stochastic = p.kind() == Kind::RowStochastic
        && q.kind() == Kind::RowStochastic
        && (0..values.nrows()).all(|r| (values.row(r).sum() - 1.0).abs() <= STOCHASTIC_TOL);
    let kind = if stochastic {
        Kind::RowStochastic
    } else {
        Kind::Probabilistic
    };
    ProbMatrix::new(source, target, values, kind)
}

/// p ⊠ q: the Kronecker product on Cartesian products of the objects.
pub fn cartesian_product(p: &ProbMatrix, q: &ProbMatrix) -> ProbMatrix {
    let product = |a: &ExprSet, b: &ExprSet| ExprSet {
        label: format!("{}×{}", a.label(), b.label()),
        elements: a
            .elements()
            .iter()
            .flat_map(|x| b.elements().iter().map(move |y| Element::tuple(&[x, y])))
            .collect(),
    };
    let kind = if p.kind() == Kind::RowStochastic && q.kind() == Kind::RowStochastic {
        Kind::RowStochastic
    } else {
        Kind::Probabilistic
    };
    ProbMatrix {
        domain: product(p.domain(), q.domain()),
        codomain: product(p.codomain(), q.codomain()),
        values: p.values().kronecker(q.values()),
        kind,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelephoneResult {
    pub distribution: Vec<f64>,
    pub argmax: Element,
    pub steps: usize,
    pub converged: bool,
}

fn argmax(set: &ExprSet, probs: &[f64]) -> Element {
    let mut best: Option<(f64, &Element)> = None;
    for (p, e) in probs.iter().zip(set.elements()) {
        best = match best {
            Some((bp, be)) if *p < bp || (*p == bp && e.name() >= be.name()) => Some((bp, be)),
            _ => Some((*p, e)),
        };
    }
    best.map(|(_, e)| e.clone()).unwrap_or_else(Element::unit)
}

/// Pass a start distribution through a chain of morphisms.
pub fn telephone(chain: &[ProbMatrix], start: &ProbMatrix) -> Result<TelephoneResult> {
    let mut acc = start.clone();
    for f in chain {
        acc = acc.compose(f)?;
    }
    let distribution: Vec<f64> = acc.values().row(0).iter().copied().collect();
    Ok(TelephoneResult {
        argmax: argmax(acc.codomain(), &distribution),
        distribution,
        steps: chain.len(),
        converged: true,
    })
}

/// Apply one endomorphism `steps` times.
pub fn telephone_steps(space: &ProbMatrix, start: &ProbMatrix, steps: usize) -> Result<TelephoneResult> {
    let chain = vec![space.clone(); steps];
    telephone(&chain, start)
}

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_STEPS: usize = 10_000;

/// Iterate an endomorphism until successive distributions differ by less than
/// `tol` in L1, or `max_steps` is reached.
pub fn telephone_fixed_point(
    space: &ProbMatrix,
    start: &ProbMatrix,
    tol: f64,
    max_steps: usize,
) -> Result<TelephoneResult> {
    let mut acc = start.clone();
    let mut converged = false;
    let mut steps = 0;
    while steps < max_steps {
        let next = acc.compose(space)?;
        steps += 1;
        let change: f64 = (next.values() - acc.values()).iter().map(|d| d.abs()).sum();
        acc = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    let distribution: Vec<f64> = acc.values().row(0).iter().copied().collect();
    Ok(TelephoneResult {
        argmax: argmax(acc.codomain(), &distribution),
        distribution,
        steps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizerConfig;

    fn set(n: usize) -> ExprSet {
        ExprSet::indexed("X", n)
    }

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn tc1() -> GradedCorpus {
        GradedCorpus::from_text("a b c. a b d.", &TokenizerConfig::default(), 3, 1).unwrap()
    }

    fn words(corpus: &GradedCorpus, ws: &[&str]) -> ExprSet {
        let exprs: Vec<_> = ws.iter().map(|w| corpus.parse(w).unwrap()).collect();
        ExprSet::from_expressions(ws.join(","), &exprs, corpus.vocab())
    }

    #[test]
    fn compose_with_identity() {
        let f = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.5, 0.5, 0.2, 0.8])).unwrap();
        let id = ProbMatrix::identity(set(2));
        assert_eq!(f.compose(&id).unwrap(), f);
        assert_eq!(id.compose(&f).unwrap(), f);
    }

    #[test]
    fn compose_probabilistic_uses_ceiling() {
        let f = ProbMatrix::probabilistic(set(2), set(2), m(2, 2, &[1.0; 4])).unwrap();
        let g = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.5; 4])).unwrap();
        let h = f.compose(&g).unwrap();
        assert_eq!(h.values(), &m(2, 2, &[0.5; 4]));
        assert_eq!(h.kind(), Kind::Probabilistic);
    }

    #[test]
    fn stochastic_product_is_stochastic() {
        let f = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.5, 0.5, 0.2, 0.8])).unwrap();
        let g = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.1, 0.9, 0.7, 0.3])).unwrap();
        let h = f.compose(&g).unwrap();
        assert_eq!(h.kind(), Kind::RowStochastic);
        for s in h.row_sums() {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn literal_ceiling_rule_breaks_identity() {
        // Applied literally, a row summing to 1.5 would be halved by composing with the
        // identity. The short-circuit keeps the identity law.
        let f = ProbMatrix::probabilistic(set(2), set(2), m(2, 2, &[1.0, 0.5, 0.0, 0.3])).unwrap();
        let literal = f.values() * DMatrix::<f64>::identity(2, 2) / 2.0;
        assert_ne!(literal.row(0), f.values().row(0));
        assert_eq!(f.compose(&ProbMatrix::identity(set(2))).unwrap(), f);
    }

    #[test]
    fn compose_rejects_mismatched_objects() {
        let f = ProbMatrix::identity(set(2));
        let g = ProbMatrix::identity(set(3));
        assert!(matches!(f.compose(&g), Err(Error::ShapeMismatch(_))));
        let other = ProbMatrix::identity(ExprSet::new("Y", vec![Element::expr(["s0"]), Element::expr(["t"])]).unwrap());
        assert!(matches!(f.compose(&other), Err(Error::LabelMismatch(1))));
    }

    #[test]
    fn constructor_validates() {
        assert!(matches!(
            ProbMatrix::row_stochastic(set(1), set(2), m(1, 2, &[0.5, 0.6])),
            Err(Error::NotStochastic { .. })
        ));
        assert!(matches!(
            ProbMatrix::probabilistic(set(1), set(2), m(1, 2, &[1.5, 0.0])),
            Err(Error::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            ProbMatrix::probabilistic(set(1), set(2), m(2, 2, &[0.0; 4])),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn tensor_objects_on_tc1() {
        let c = tc1();
        let ab = tensor_objects(&c, &words(&c, &["a"]), &words(&c, &["b"])).unwrap();
        assert_eq!(ab.names(), vec!["a b"]);
        let cd = tensor_objects(&c, &words(&c, &["c"]), &words(&c, &["d"])).unwrap();
        assert!(cd.is_degenerate());
        let x = words(&c, &["a", "b"]);
        assert_eq!(tensor_objects(&c, &x, &ExprSet::unit()).unwrap().elements(), x.elements());
        assert_eq!(tensor_objects(&c, &ExprSet::unit(), &x).unwrap().elements(), x.elements());
        assert!(tensor_objects(&c, &ExprSet::unit(), &ExprSet::unit()).unwrap().is_unit());
    }

    #[test]
    fn tensor_morphism_entries_multiply() {
        let c = tc1();
        let a = words(&c, &["a"]);
        let b = words(&c, &["b"]);
        let p = ProbMatrix::probabilistic(a.clone(), a.clone(), m(1, 1, &[0.5])).unwrap();
        let q = ProbMatrix::probabilistic(b.clone(), b.clone(), m(1, 1, &[0.4])).unwrap();
        let pq = tensor_morphisms(&c, &p, &q).unwrap();
        assert_eq!(pq.domain().names(), vec!["a b"]);
        assert!((pq.get(0, 0) - 0.2).abs() < 1e-15);

        let id = tensor_morphisms(&c, &ProbMatrix::identity(words(&c, &["a", "b"])), &ProbMatrix::identity(ExprSet::graded(&c, 1))).unwrap();
        assert!(id.is_identity());

        let cc = words(&c, &["c"]);
        let dd = words(&c, &["d"]);
        assert!(matches!(
            tensor_morphisms(&c, &ProbMatrix::identity(cc), &ProbMatrix::identity(dd)),
            Err(Error::EmptyTensor(_))
        ));
    }

    #[test]
    fn tensor_detects_ambiguous_splits() {
        let c = tc1();
        let x = words(&c, &["a", "a b"]);
        let y = words(&c, &["b c", "c"]);
        assert!(matches!(tensor_objects(&c, &x, &y), Err(Error::AmbiguousSplit(_))));
    }

    #[test]
    fn kronecker_examples() {
        let id2 = ProbMatrix::identity(set(2));
        assert!(cartesian_product(&id2, &id2).values() == &DMatrix::<f64>::identity(4, 4));
        let q = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.3, 0.7, 0.6, 0.4])).unwrap();
        let one = ProbMatrix::identity(set(1));
        assert_eq!(cartesian_product(&one, &q).values(), q.values());
        let p = ProbMatrix::row_stochastic(set(1), set(2), m(1, 2, &[0.5, 0.5])).unwrap();
        let r = ProbMatrix::row_stochastic(set(1), set(2), m(1, 2, &[0.3, 0.7])).unwrap();
        let pr = cartesian_product(&p, &r);
        let expect = [0.15, 0.35, 0.15, 0.35];
        for (a, b) in pr.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(pr.kind(), Kind::RowStochastic);
        assert_eq!(pr.codomain().names()[1], "s0 | s1");
    }

    #[test]
    fn telephone_examples() {
        let swap = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let start = ProbMatrix::distribution(set(2), &[1.0, 0.0]).unwrap();
        let r = telephone_steps(&swap, &start, 2).unwrap();
        assert_eq!(r.distribution, vec![1.0, 0.0]);
        assert_eq!(r.argmax.name(), "s0");
        let r = telephone_steps(&ProbMatrix::identity(set(2)), &start, 7).unwrap();
        assert_eq!(r.distribution, vec![1.0, 0.0]);
        // periodic chain never settles
        let r = telephone_fixed_point(&swap, &start, FIXED_POINT_TOL, 100).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn telephone_tie_break_is_lexicographic() {
        let s = ExprSet::new("W", vec![Element::expr(["zeta"]), Element::expr(["alpha"])]).unwrap();
        let start = ProbMatrix::distribution(s.clone(), &[0.5, 0.5]).unwrap();
        let r = telephone(&[], &start).unwrap();
        assert_eq!(r.argmax.name(), "alpha");
    }

    #[test]
    fn point_start() {
        let s = set(3);
        let start = ProbMatrix::point(s.clone(), &Element::expr(["s2"])).unwrap();
        assert_eq!(start.values().row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
        assert!(ProbMatrix::point(s, &Element::expr(["nope"])).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = ProbMatrix::row_stochastic(set(2), set(2), m(2, 2, &[0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0])).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(",s0,s1\n"));
        let sidecar: MatrixSidecar = serde_json::from_str(&serde_json::to_string(&f.sidecar()).unwrap()).unwrap();
        let back = ProbMatrix::read_csv(buf.as_slice(), &sidecar).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn element_names_round_trip() {
        for e in [
            Element::unit(),
            Element::expr(["a", "b"]),
            Element::tuple(&[&Element::expr(["a"]), &Element::expr(["b", "c"])]),
        ] {
            assert_eq!(Element::parse(&e.name()), e);
        }
    }

    #[test]
    fn semantic_space_must_be_square() {
        let f = ProbMatrix::probabilistic(set(1), set(2), m(1, 2, &[0.5, 0.5])).unwrap();
        assert!(SemanticSpace::new(f).is_err());
        assert!(SemanticSpace::new(ProbMatrix::identity(set(2))).is_ok());
    }
}
