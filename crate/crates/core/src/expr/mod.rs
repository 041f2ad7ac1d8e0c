//! Formal sums of ordered products of moment/cumulant brackets.
//!
//! A [`Bracket`] is `⟨i·j·…⟩` (moment) or `⟨i·j·…⟩_c` (cumulant) over
//! opaque indexed atoms. A [`Term`] is a rational coefficient times an
//! ordered product of brackets, read left to right as operator
//! composition. Factor order is significant: the only reorderings ever
//! applied are the ones the active ordering map prescribes during
//! [`canonicalize`].

mod text;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Result};
use crate::ordering::{self, OrderingMapKind};

pub use text::{parse, parse_json, render, Format};

/// Exact rational coefficient.
pub type Coeff = BigRational;

pub fn rational(num: i64, den: i64) -> Coeff {
    BigRational::new(num.into(), den.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BracketKind {
    Moment,
    Cumulant,
}

/// An average over an ordered list of distinct atoms.
///
/// Field order matters: brackets compare by atoms first, then kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bracket {
    atoms: Vec<usize>,
    kind: BracketKind,
}

impl Bracket {
    pub fn new(kind: BracketKind, atoms: Vec<usize>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("empty bracket"));
        }
        if atoms.contains(&0) {
            return Err(invalid("atom indices are 1-based"));
        }
        let distinct: BTreeSet<_> = atoms.iter().collect();
        if distinct.len() != atoms.len() {
            return Err(invalid(format!(
                "repeated atom index inside bracket {atoms:?}"
            )));
        }
        Ok(Self { atoms, kind })
    }

    pub fn moment(atoms: &[usize]) -> Self {
        Self::new(BracketKind::Moment, atoms.to_vec()).expect("valid moment bracket")
    }

    pub fn cumulant(atoms: &[usize]) -> Self {
        Self::new(BracketKind::Cumulant, atoms.to_vec()).expect("valid cumulant bracket")
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn kind(&self) -> BracketKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_atom(&self) -> usize {
        *self.atoms.iter().min().expect("non-empty")
    }

    pub fn max_atom(&self) -> usize {
        *self.atoms.iter().max().expect("non-empty")
    }

    pub fn is_cumulant(&self) -> bool {
        self.kind == BracketKind::Cumulant
    }

    /// Atoms sorted ascending; a singleton cumulant becomes a moment.
    pub fn normalized(&self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.sort_unstable();
        let kind = if atoms.len() == 1 {
            BracketKind::Moment
        } else {
            self.kind
        };
        Self { atoms, kind }
    }

    pub fn with_kind(&self, kind: BracketKind) -> Self {
        Self {
            atoms: self.atoms.clone(),
            kind,
        }
    }

    /// Replace each atom `a` by `mapping[a - 1]`.
    pub fn relabeled(&self, mapping: &[usize]) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&a| mapping[a - 1]).collect(),
            kind: self.kind,
        }
    }

    fn same_atom_set(&self, other: &Bracket) -> bool {
        let mut a = self.atoms.clone();
        let mut b = other.atoms.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.atoms.iter().join("."))?;
        if self.kind == BracketKind::Cumulant {
            f.write_str("_c")?;
        }
        Ok(())
    }
}

/// Product symbol used when rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProductSymbol {
    /// `*`, operator composition.
    #[default]
    Tensor,
    /// `^`, Grassmann wedge.
    Wedge,
}

impl ProductSymbol {
    pub fn for_map(map: OrderingMapKind) -> Self {
        match map {
            OrderingMapKind::Grassmann => ProductSymbol::Wedge,
            _ => ProductSymbol::Tensor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Coeff,
    pub factors: Vec<Bracket>,
}

impl Term {
    pub fn atoms(&self) -> BTreeSet<usize> {
        self.factors
            .iter()
            .flat_map(|b| b.atoms.iter().copied())
            .collect()
    }
}

/// Graded lexicographic order on factor sequences: fewer factors first,
/// then bracket by bracket.
pub fn cmp_products(a: &[Bracket], b: &[Bracket]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ProductKey(Vec<Bracket>);

impl Ord for ProductKey {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_products(&self.0, &other.0)
    }
}

impl PartialOrd for ProductKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Accumulates terms, merging identical factor sequences.
#[derive(Debug, Default)]
pub struct TermAccumulator {
    terms: BTreeMap<ProductKey, Coeff>,
}

impl TermAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, coeff: Coeff, factors: Vec<Bracket>) {
        if coeff.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(ProductKey(factors))
            .or_insert_with(Coeff::zero);
        *entry += coeff;
    }

    pub fn finish(self, product: ProductSymbol) -> Expression {
        let terms = self
            .terms
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, coeff)| Term {
                coeff,
                factors: k.0,
            })
            .collect();
        Expression { terms, product }
    }
}

/// A rational linear combination of bracket products.
///
/// Terms are always merged (no repeated factor sequence), free of zero
/// coefficients, and sorted by [`cmp_products`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Expression {
    terms: Vec<Term>,
    product: ProductSymbol,
}

impl Expression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn bracket(b: Bracket) -> Self {
        Self::from_terms([(Coeff::one(), vec![b])])
    }

    /// Builds a merged, sorted expression; factor order is kept as given.
    pub fn from_terms(terms: impl IntoIterator<Item = (Coeff, Vec<Bracket>)>) -> Self {
        let mut acc = TermAccumulator::new();
        for (c, f) in terms {
            acc.add(c, f);
        }
        acc.finish(ProductSymbol::Tensor)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn product_symbol(&self) -> ProductSymbol {
        self.product
    }

    pub fn with_product_symbol(mut self, product: ProductSymbol) -> Self {
        self.product = product;
        self
    }

    /// Coefficient of an exact factor sequence (zero if absent).
    pub fn coefficient(&self, factors: &[Bracket]) -> Coeff {
        self.terms
            .binary_search_by(|t| cmp_products(&t.factors, factors))
            .map(|i| self.terms[i].coeff.clone())
            .unwrap_or_else(|_| Coeff::zero())
    }

    pub fn atoms(&self) -> BTreeSet<usize> {
        self.terms.iter().flat_map(Term::atoms).collect()
    }

    pub fn add(&self, other: &Expression) -> Expression {
        self.linear_combination(other, Coeff::one())
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.linear_combination(other, -Coeff::one())
    }

    fn linear_combination(&self, other: &Expression, k: Coeff) -> Expression {
        let mut acc = TermAccumulator::new();
        for t in &self.terms {
            acc.add(t.coeff.clone(), t.factors.clone());
        }
        for t in &other.terms {
            acc.add(&t.coeff * &k, t.factors.clone());
        }
        acc.finish(self.product)
    }

    pub fn scale(&self, k: &Coeff) -> Expression {
        let mut acc = TermAccumulator::new();
        for t in &self.terms {
            acc.add(&t.coeff * k, t.factors.clone());
        }
        acc.finish(self.product)
    }

    /// Product `self ⊗ other`, distributing over both sums; factor order is
    /// concatenation.
    pub fn mul(&self, other: &Expression) -> Expression {
        let mut acc = TermAccumulator::new();
        for a in &self.terms {
            for b in &other.terms {
                let mut f = a.factors.clone();
                f.extend(b.factors.iter().cloned());
                acc.add(&a.coeff * &b.coeff, f);
            }
        }
        acc.finish(self.product)
    }

    /// Replace atom `a` by `mapping[a - 1]` everywhere.
    pub fn relabeled(&self, mapping: &[usize]) -> Expression {
        let mut acc = TermAccumulator::new();
        for t in &self.terms {
            acc.add(
                t.coeff.clone(),
                t.factors.iter().map(|b| b.relabeled(mapping)).collect(),
            );
        }
        acc.finish(self.product)
    }

    /// Drops every term that satisfies `pred`.
    pub fn without_terms(&self, pred: impl Fn(&Term) -> bool) -> Expression {
        let mut acc = TermAccumulator::new();
        for t in self.terms.iter().filter(|t| !pred(t)) {
            acc.add(t.coeff.clone(), t.factors.clone());
        }
        acc.finish(self.product)
    }

    /// Literal bulk substitution: every bracket for which `f` returns a
    /// replacement is replaced in place and products are distributed. No
    /// reordering happens here.
    pub fn substitute_with(&self, f: impl Fn(&Bracket) -> Option<Expression>) -> Expression {
        let mut acc = TermAccumulator::new();
        for t in &self.terms {
            // partial products: (coeff, factors)
            let mut partial: Vec<(Coeff, Vec<Bracket>)> = vec![(t.coeff.clone(), Vec::new())];
            for b in &t.factors {
                match f(b) {
                    None => {
                        for p in &mut partial {
                            p.1.push(b.clone());
                        }
                    }
                    Some(rep) => {
                        let mut next = Vec::with_capacity(partial.len() * rep.len());
                        for (c, fs) in &partial {
                            for r in &rep.terms {
                                let mut g = fs.clone();
                                g.extend(r.factors.iter().cloned());
                                next.push((c * &r.coeff, g));
                            }
                        }
                        partial = next;
                    }
                }
            }
            for (c, fs) in partial {
                acc.add(c, fs);
            }
        }
        acc.finish(self.product)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, Format::Text))
    }
}

/// Brings an expression to its canonical form under `map`.
///
/// Every bracket is sorted ascending (singleton cumulants become moments),
/// factors are reordered by the map's rule where the map applies, like
/// terms are merged and zero terms dropped. Idempotent.
///
/// Under PTO and TTO the map acts on products of cumulant densities only:
/// a term is reordered when it holds at least one multi-atom cumulant
/// bracket and no multi-atom moment bracket. Products of moments are
/// literal operator compositions and keep their order. Classical and
/// Grassmann products commute, so every term is reordered.
pub fn canonicalize(expr: &Expression, map: OrderingMapKind) -> Result<Expression> {
    let mut acc = TermAccumulator::new();
    for t in &expr.terms {
        for b in &t.factors {
            // brackets built through `Bracket::new` are already checked; this
            // guards hand-assembled ones
            Bracket::new(b.kind, b.atoms.clone())?;
        }
        let factors: Vec<Bracket> = t.factors.iter().map(Bracket::normalized).collect();
        let factors = match map {
            OrderingMapKind::Classical => ordering::order_factors(&factors, map)?,
            OrderingMapKind::Grassmann => ordering::grassmann_representative(&factors),
            OrderingMapKind::Pto | OrderingMapKind::Tto => {
                if is_cumulant_product(&factors) {
                    ordering::order_factors(&factors, map)?
                } else {
                    factors
                }
            }
        };
        acc.add(t.coeff.clone(), factors);
    }
    Ok(acc.finish(ProductSymbol::for_map(map)))
}

/// True when the product lies in the co-domain of the time-ordering `M_O`
/// maps: some multi-atom cumulant bracket and no multi-atom moment bracket.
pub fn is_cumulant_product(factors: &[Bracket]) -> bool {
    let multi = |k| factors.iter().any(|b| b.len() > 1 && b.kind == k);
    multi(BracketKind::Cumulant) && !multi(BracketKind::Moment)
}

/// Structural equality of canonical forms. Expressions that cannot be
/// canonicalized under `map` compare unequal.
pub fn equal(a: &Expression, b: &Expression, map: OrderingMapKind) -> bool {
    match (canonicalize(a, map), canonicalize(b, map)) {
        (Ok(x), Ok(y)) => x.terms == y.terms,
        _ => false,
    }
}

/// Replaces every occurrence of `target` in `expr` by `replacement`,
/// distributes products and canonicalizes under `map`.
///
/// Each term of `replacement` must cover exactly the atoms of `target`.
/// Occurrences are matched on canonical form, so `⟨2·1⟩_c` matches
/// `⟨1·2⟩_c`.
pub fn substitute(
    expr: &Expression,
    target: &Bracket,
    replacement: &Expression,
    map: OrderingMapKind,
) -> Result<Expression> {
    let want: BTreeSet<usize> = target.atoms.iter().copied().collect();
    for t in replacement.terms() {
        if t.atoms() != want {
            return Err(invalid(format!(
                "replacement term over atoms {:?} does not match target atoms {:?}",
                t.atoms(),
                want
            )));
        }
    }
    let target_n = target.normalized();
    let substituted = expr.substitute_with(|b| {
        let bn = b.normalized();
        (bn.kind == target_n.kind && bn.same_atom_set(&target_n)).then(|| replacement.clone())
    });
    canonicalize(&substituted, map)
}
