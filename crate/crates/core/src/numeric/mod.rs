//! Exact finite-measure evaluation of expressions and the numeric checks
//! built on it.

mod appendix_a;
mod model;

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::combinatorics::factorial;
use crate::error::{check_bound, invalid, Error, Result};
use crate::expr::{Bracket, Expression};
use crate::ordering::{admissible_partitions, canonical_factor_order, OrderingMapKind};

pub use appendix_a::{appendix_a_demo, AppendixAOptions, AppendixAReport, ContinuousReport};
pub use model::{
    anticommuting_model, build_commuting_model, build_random_model, build_split_model, CMatrix,
    OperatorModel, Sample, SplitModel, WEIGHT_SUM_TOL,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_DIM: usize = 4;
pub const DEFAULT_SAMPLES: usize = 3;
/// Largest cumulant bracket the evaluator expands.
pub const MAX_EVAL_CUMULANT: usize = 8;

/// Largest entry modulus.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Evaluates brackets on one model under one map, caching every moment and
/// cumulant it computes.
pub struct Evaluator<'a> {
    model: &'a OperatorModel,
    map: OrderingMapKind,
    moments: HashMap<Vec<usize>, CMatrix>,
    cumulants: HashMap<Vec<usize>, CMatrix>,
    // canonically ordered block lists of {1..s}, per size s
    partitions: HashMap<usize, Vec<Vec<Vec<usize>>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a OperatorModel, map: OrderingMapKind) -> Result<Self> {
        if map == OrderingMapKind::Grassmann {
            return Err(invalid(
                "Grassmann brackets are evaluated on Fock states, not operator models",
            ));
        }
        Ok(Self {
            model,
            map,
            moments: HashMap::new(),
            cumulants: HashMap::new(),
            partitions: HashMap::new(),
        })
    }

    fn sorted(atoms: &[usize]) -> Result<Vec<usize>> {
        let mut s = atoms.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("bracket {atoms:?} repeats an atom")));
        }
        Ok(s)
    }

    /// Computes, in parallel, every moment the given brackets will need.
    pub fn prefetch<'b>(&mut self, brackets: impl IntoIterator<Item = &'b Bracket>) -> Result<()> {
        let mut need: BTreeSet<Vec<usize>> = BTreeSet::new();
        for b in brackets {
            let atoms = Self::sorted(b.atoms())?;
            if b.is_cumulant() && atoms.len() > 1 {
                check_bound("evaluated cumulant size", atoms.len(), 1, MAX_EVAL_CUMULANT)?;
                for k in 1..=atoms.len() {
                    need.extend(atoms.iter().copied().combinations(k));
                }
            } else {
                need.insert(atoms);
            }
        }
        need.retain(|s| !self.moments.contains_key(s));
        let model = self.model;
        let computed: Vec<(Vec<usize>, Result<CMatrix>)> = need
            .into_par_iter()
            .map(|s| {
                let m = model.raw_moment(&s);
                (s, m)
            })
            .collect();
        for (s, m) in computed {
            self.moments.insert(s, m?);
        }
        Ok(())
    }

    /// `⟨a_1 ⋯ a_m⟩` with the atoms in ascending (time-ordered) sequence.
    pub fn moment(&mut self, atoms: &[usize]) -> Result<CMatrix> {
        let s = Self::sorted(atoms)?;
        if let Some(m) = self.moments.get(&s) {
            return Ok(m.clone());
        }
        let m = self.model.raw_moment(&s)?;
        self.moments.insert(s, m.clone());
        Ok(m)
    }

    fn ordered_partitions(&mut self, size: usize) -> Result<&Vec<Vec<Vec<usize>>>> {
        if !self.partitions.contains_key(&size) {
            let mut lists = Vec::new();
            for p in admissible_partitions(size, self.map)? {
                if p.len() < 2 {
                    continue;
                }
                let factors: Vec<Bracket> =
                    p.blocks().iter().map(|b| Bracket::cumulant(b)).collect();
                let ordered = canonical_factor_order(&factors, self.map)?;
                lists.push(ordered.iter().map(|b| b.atoms().to_vec()).collect());
            }
            self.partitions.insert(size, lists);
        }
        Ok(&self.partitions[&size])
    }

    /// `κ(S) = μ(S) − Σ_{π admissible, |π|>1} Π_{B∈π} κ(B)`, blocks in the
    /// map's canonical order.
    pub fn cumulant(&mut self, atoms: &[usize]) -> Result<CMatrix> {
        let s = Self::sorted(atoms)?;
        if s.len() == 1 {
            return self.moment(&s);
        }
        if let Some(k) = self.cumulants.get(&s) {
            return Ok(k.clone());
        }
        check_bound("evaluated cumulant size", s.len(), 1, MAX_EVAL_CUMULANT)?;
        let mut k = self.moment(&s)?;
        let lists = self.ordered_partitions(s.len())?.clone();
        let d = self.model.dim();
        for blocks in lists {
            let mut prod = CMatrix::identity(d, d);
            for b in blocks {
                let atoms: Vec<usize> = b.iter().map(|&i| s[i - 1]).collect();
                prod = &prod * &self.cumulant(&atoms)?;
            }
            k -= prod;
        }
        self.cumulants.insert(s, k.clone());
        Ok(k)
    }

    pub fn bracket(&mut self, b: &Bracket) -> Result<CMatrix> {
        if b.is_cumulant() {
            self.cumulant(b.atoms())
        } else {
            self.moment(b.atoms())
        }
    }

    /// Value of one term without its coefficient.
    pub fn product(&mut self, factors: &[Bracket]) -> Result<CMatrix> {
        let d = self.model.dim();
        let mut prod = CMatrix::identity(d, d);
        for b in factors {
            prod = &prod * &self.bracket(b)?;
        }
        Ok(prod)
    }

    pub fn expression(&mut self, expr: &Expression) -> Result<CMatrix> {
        self.prefetch(expr.terms().iter().flat_map(|t| t.factors.iter()))?;
        let d = self.model.dim();
        let mut acc = CMatrix::zeros(d, d);
        for t in expr.terms() {
            acc += self.product(&t.factors)? * coeff_f64(&t.coeff);
        }
        Ok(acc)
    }
}

fn coeff_f64(c: &crate::expr::Coeff) -> Complex64 {
    Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0)
}

/// Evaluates `expr` on `model`. Moment brackets are ordered averages;
/// cumulant brackets follow the map's recursive definition; factors
/// multiply in their stored order.
pub fn evaluate(expr: &Expression, model: &OperatorModel, map: OrderingMapKind) -> Result<CMatrix> {
    Evaluator::new(model, map)?.expression(expr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub label: String,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl VerificationReport {
    fn from_diagnostics(diagnostics: Vec<Diagnostic>, tolerance: f64) -> Self {
        let max_abs = diagnostics
            .iter()
            .map(|d| d.abs_deviation)
            .fold(0.0, f64::max);
        let max_rel = diagnostics
            .iter()
            .map(|d| d.rel_deviation)
            .fold(0.0, f64::max);
        Self {
            max_abs_deviation: max_abs,
            max_rel_deviation: max_rel,
            tolerance,
            pass: max_rel <= tolerance,
            diagnostics,
        }
    }
}

fn relative(abs: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}

fn deviation(label: String, lhs: &CMatrix, rhs: &CMatrix) -> Diagnostic {
    let abs = max_norm(&(lhs - rhs));
    let scale = max_norm(lhs).max(max_norm(rhs));
    Diagnostic {
        label,
        abs_deviation: abs,
        rel_deviation: relative(abs, scale),
    }
}

/// Compares both sides entrywise. Diagnostics list the difference first,
/// then the norm of every term (deviation fields hold that norm).
pub fn verify_identity(
    lhs: &Expression,
    rhs: &Expression,
    model: &OperatorModel,
    map: OrderingMapKind,
    tol: f64,
) -> Result<VerificationReport> {
    if lhs.atoms() != rhs.atoms() {
        return Err(invalid(format!(
            "sides cover different atoms: {:?} vs {:?}",
            lhs.atoms(),
            rhs.atoms()
        )));
    }
    let mut ev = Evaluator::new(model, map)?;
    let l = ev.expression(lhs)?;
    let r = ev.expression(rhs)?;
    let main = deviation("lhs - rhs".into(), &l, &r);
    let mut report = VerificationReport::from_diagnostics(vec![main], tol);
    for (side, e) in [("lhs", lhs), ("rhs", rhs)] {
        for t in e.terms() {
            let v = max_norm(&(ev.product(&t.factors)? * coeff_f64(&t.coeff)));
            let one = Expression::from_terms([(t.coeff.clone(), t.factors.clone())])
                .with_product_symbol(e.product_symbol());
            report.diagnostics.push(Diagnostic {
                label: format!("{side} term {one}"),
                abs_deviation: v,
                rel_deviation: v,
            });
        }
    }
    Ok(report)
}

/// Checks that every cumulant over atoms from both groups vanishes.
///
/// All subsets of `1..=n` with at least one atom from each group are
/// evaluated on the joint model; deviations are relative to the largest
/// moment over a single group. Group A must be a contiguous run at
/// either end of `1..=n`.
pub fn verify_cluster_property(
    n: usize,
    map: OrderingMapKind,
    model: &SplitModel,
    tol: f64,
) -> Result<VerificationReport> {
    check_bound("cluster property order", n, 2, MAX_EVAL_CUMULANT)?;
    if n > model.n_atoms() {
        return Err(invalid(format!(
            "order {n} exceeds the model's {} atoms",
            model.n_atoms()
        )));
    }
    let in_a = (1..=n).filter(|&x| model.in_group_a(x)).count();
    if in_a == 0 || in_a == n {
        return Err(Error::InvalidSplit(format!(
            "atoms 1..={n} all lie in one group"
        )));
    }
    if !model.is_contiguous_within(n) {
        let why = if map == OrderingMapKind::Tto {
            "TTO needs group A to be a contiguous run of times at one end; \
             an interleaved split is not a time-ordered factorization"
        } else {
            "both groups act on one space, so interleaved products of \
             independent samples do not factor; group A must be a contiguous \
             run at one end"
        };
        return Err(Error::InvalidSplit(why.into()));
    }
    let joint = model.joint()?;
    let mut ev = Evaluator::new(&joint, map)?;
    let subsets: Vec<Vec<usize>> = (1..=n).flat_map(|k| (1..=n).combinations(k)).collect();
    let (mixed, pure): (Vec<_>, Vec<_>) = subsets.into_iter().partition(|s| {
        let a = s.iter().filter(|&&x| model.in_group_a(x)).count();
        a > 0 && a < s.len()
    });
    let mut scale: f64 = 0.0;
    for s in &pure {
        scale = scale.max(max_norm(&ev.moment(s)?));
    }
    let all: Vec<Bracket> = mixed.iter().map(|s| Bracket::cumulant(s)).collect();
    ev.prefetch(all.iter())?;
    let mut diags = Vec::with_capacity(mixed.len());
    for b in &all {
        let abs = max_norm(&ev.cumulant(b.atoms())?);
        diags.push(Diagnostic {
            label: b.to_string(),
            abs_deviation: abs,
            rel_deviation: relative(abs, scale),
        });
    }
    Ok(VerificationReport::from_diagnostics(diags, tol))
}

/// Multisets of size `k` from `atoms`, each with its multinomial count
/// `k! / Π mult!`, as ascending sequences.
fn weighted_multisets(atoms: &[usize], k: usize) -> Vec<(Vec<usize>, f64)> {
    atoms
        .iter()
        .copied()
        .combinations_with_replacement(k)
        .map(|seq| {
            let denom: u128 = seq
                .iter()
                .dedup_with_count()
                .map(|(c, _)| factorial(c))
                .product();
            let w = (factorial(k) / denom) as f64;
            (seq, w)
        })
        .collect()
}

/// Checks `{A^k ⊗ B^m} = {A^k} ⊗ {B^m}` for all `k, m ≥ 1`, `k + m ≤ order`,
/// where `A` and `B` are the sums of the atoms of each group and `{·}`
/// orders every product by time (repeated atoms are equal-time and
/// commute with themselves). The groups must be contiguous so that every
/// ordered word is an A-block next to a B-block.
pub fn verify_unconnected_factorization(
    order: usize,
    model: &SplitModel,
    tol: f64,
) -> Result<VerificationReport> {
    check_bound("factorization order", order, 2, 6)?;
    let n = model.n_atoms();
    if !model.is_contiguous_within(n) {
        return Err(Error::InvalidSplit(
            "factorization check needs contiguous groups".into(),
        ));
    }
    let a: Vec<usize> = model.group_a().iter().copied().collect();
    let b: Vec<usize> = model.group_b().into_iter().collect();
    let (early, late) = if a[0] < b[0] { (&a, &b) } else { (&b, &a) };
    let a_first = a[0] < b[0];
    let joint = model.joint()?;
    let d = joint.dim();
    let power = |atoms: &[usize], k: usize| -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(d, d);
        for (seq, w) in weighted_multisets(atoms, k) {
            acc += joint.raw_moment(&seq)? * Complex64::new(w, 0.0);
        }
        Ok(acc)
    };
    let mut diags = Vec::new();
    for total in 2..=order {
        for k in 1..total {
            let m = total - k;
            let (ke, kl) = if a_first { (k, m) } else { (m, k) };
            let mut lhs = CMatrix::zeros(d, d);
            for (se, we) in weighted_multisets(early, ke) {
                for (sl, wl) in weighted_multisets(late, kl) {
                    let word: Vec<usize> = se.iter().chain(sl.iter()).copied().collect();
                    lhs += joint.raw_moment(&word)? * Complex64::new(we * wl, 0.0);
                }
            }
            let rhs = power(early, ke)? * power(late, kl)?;
            diags.push(deviation(format!("(k,m)=({k},{m})"), &lhs, &rhs));
        }
    }
    Ok(VerificationReport::from_diagnostics(diags, tol))
}
