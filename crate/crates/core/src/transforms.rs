//! Moment ↔ cumulant transforms under each ordering map.

use std::fmt;

use itertools::Itertools;
use num_traits::{One, Zero};

use crate::combinatorics::{
    block_permutations_first_fixed, enumerate_interval_compositions, enumerate_set_partitions,
    enumerate_size_profiles, factorial, SizeProfile,
};
use crate::error::{check_bound, invalid, Result};
use crate::expr::{
    canonicalize, Bracket, BracketKind, Coeff, Expression, ProductSymbol, Term, TermAccumulator,
};
use crate::ordering::{
    admissible_partitions, canonical_factor_order, grassmann_representative, order_factors,
    OrderingMapKind,
};

/// Largest order for the symbolic inversions.
pub const MAX_INVERSION_N: usize = 8;
/// Largest order for `moments_from_cumulants` (TTO has far fewer terms).
pub const MAX_MOMENTS_N: usize = 10;
pub const MAX_MOMENTS_TTO_N: usize = 16;
pub const MAX_TTO_DIRECT_N: usize = 16;
/// Largest order and grid size for generating components.
pub const MAX_COMPONENT_N: usize = 8;

/// Closed forms available for the cumulant side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionFormula {
    Recursive,
    PtoDirect,
    TtoDirect,
    Roerdnik,
}

impl InversionFormula {
    pub fn name(self) -> &'static str {
        match self {
            InversionFormula::Recursive => "recursive",
            InversionFormula::PtoDirect => "pto-direct",
            InversionFormula::TtoDirect => "tto-direct",
            InversionFormula::Roerdnik => "roerdnik",
        }
    }
}

impl std::str::FromStr for InversionFormula {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            InversionFormula::Recursive,
            InversionFormula::PtoDirect,
            InversionFormula::TtoDirect,
            InversionFormula::Roerdnik,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| invalid(format!("unknown inversion formula {s:?}")))
    }
}

fn full(n: usize, kind: BracketKind) -> Bracket {
    Bracket::new(kind, (1..=n).collect()).expect("1..n is a valid atom list")
}

fn block_bracket(kind: BracketKind, atoms: &[usize]) -> Bracket {
    Bracket::new(kind, atoms.to_vec())
        .expect("partition blocks are valid atom lists")
        .normalized()
}

/// `⟨1·…·n⟩` as a sum over admissible partitions of canonically ordered
/// cumulant products, each with coefficient 1. Grassmann terms are merged
/// into size profiles.
pub fn moments_from_cumulants(n: usize, map: OrderingMapKind) -> Result<Expression> {
    let cap = if map == OrderingMapKind::Tto {
        MAX_MOMENTS_TTO_N
    } else {
        MAX_MOMENTS_N
    };
    check_bound("moments_from_cumulants", n, 1, cap)?;
    let mut acc = TermAccumulator::new();
    if map == OrderingMapKind::Tto {
        for c in enumerate_interval_compositions(n)? {
            let factors = c
                .blocks()
                .iter()
                .map(|b| block_bracket(BracketKind::Cumulant, b))
                .collect();
            acc.add(Coeff::one(), factors);
        }
    } else {
        for p in admissible_partitions(n, map)? {
            let factors: Vec<Bracket> = p
                .blocks()
                .iter()
                .map(|b| block_bracket(BracketKind::Cumulant, b))
                .collect();
            let factors = match map {
                OrderingMapKind::Grassmann => grassmann_representative(&factors),
                _ => canonical_factor_order(&factors, map)?,
            };
            acc.add(Coeff::one(), factors);
        }
    }
    canonicalize(&acc.finish(ProductSymbol::for_map(map)), map)
}

/// `K_1 … K_n` by triangular inversion: `K_k = ⟨1..k⟩ − (M_k − κ_k)` with
/// every lower cumulant replaced by its own expansion over its atoms.
fn recursive_table(n: usize, map: OrderingMapKind) -> Result<Vec<Expression>> {
    check_bound("cumulants_from_moments", n, 1, MAX_INVERSION_N)?;
    let mut table: Vec<Expression> = Vec::with_capacity(n);
    for k in 1..=n {
        let moments = moments_from_cumulants(k, map)?;
        let top = full(k, BracketKind::Cumulant).normalized();
        let rest = moments.without_terms(|t| t.factors.len() == 1 && t.factors[0] == top);
        let expanded = rest.substitute_with(|b| {
            (b.is_cumulant() && b.len() > 1).then(|| table[b.len() - 1].relabeled(b.atoms()))
        });
        let kk = Expression::bracket(full(k, BracketKind::Moment))
            .with_product_symbol(ProductSymbol::for_map(map))
            .sub(&expanded);
        table.push(canonicalize(&kk, map)?);
    }
    Ok(table)
}

/// The `n`-cumulant in terms of moments by triangular inversion of
/// [`moments_from_cumulants`].
pub fn cumulants_from_moments_recursive(n: usize, map: OrderingMapKind) -> Result<Expression> {
    Ok(recursive_table(n, map)?.pop().expect("n >= 1"))
}

/// PTO inversion: every partition, every block order with the block of 1
/// leftmost, sign `(−1)^(|π|−1)`.
pub fn cumulants_from_moments_pto_direct(n: usize) -> Result<Expression> {
    check_bound("pto_direct", n, 1, MAX_INVERSION_N)?;
    let mut acc = TermAccumulator::new();
    for p in enumerate_set_partitions(n)? {
        let sign = if p.len() % 2 == 1 {
            Coeff::one()
        } else {
            -Coeff::one()
        };
        for order in block_permutations_first_fixed(&p) {
            let factors = order
                .iter()
                .map(|b| block_bracket(BracketKind::Moment, b))
                .collect();
            acc.add(sign.clone(), factors);
        }
    }
    Ok(acc.finish(ProductSymbol::Tensor))
}

/// TTO inversion: one term per interval composition, sign `(−1)^(p+1)`.
pub fn cumulants_from_moments_tto_direct(n: usize) -> Result<Expression> {
    check_bound("tto_direct", n, 1, MAX_TTO_DIRECT_N)?;
    let mut acc = TermAccumulator::new();
    for c in enumerate_interval_compositions(n)? {
        let sign = if c.parts() % 2 == 1 {
            Coeff::one()
        } else {
            -Coeff::one()
        };
        let factors = c
            .blocks()
            .iter()
            .map(|b| block_bracket(BracketKind::Moment, b))
            .collect();
        acc.add(sign, factors);
    }
    Ok(acc.finish(ProductSymbol::Tensor))
}

/// The PTO cumulant written through TTO cumulants.
///
/// Every permutation of `1..n` that starts with 1 is cut into maximal
/// ascending runs; each run becomes a cumulant bracket, the brackets keep the
/// permutation's order and the term carries `(−1)^(p+1)` for `p` runs. The
/// brackets are meant to be evaluated as TTO cumulants.
pub fn cumulants_from_moments_roerdnik(n: usize) -> Result<Expression> {
    check_bound("roerdnik", n, 1, MAX_INVERSION_N)?;
    let mut terms = Vec::new();
    for tail in (2..=n).permutations(n - 1) {
        let perm: Vec<usize> = std::iter::once(1).chain(tail).collect();
        let mut runs: Vec<Vec<usize>> = vec![vec![perm[0]]];
        for w in perm.windows(2) {
            if w[0] < w[1] {
                runs.last_mut().expect("nonempty").push(w[1]);
            } else {
                runs.push(vec![w[1]]);
            }
        }
        let sign = if runs.len() % 2 == 1 {
            Coeff::one()
        } else {
            -Coeff::one()
        };
        let factors = runs
            .iter()
            .map(|r| block_bracket(BracketKind::Cumulant, r))
            .collect();
        terms.push((sign, factors));
    }
    Ok(Expression::from_terms(terms))
}

/// Dispatches to one of the inversion formulas; the direct formulas only
/// exist for their own map.
pub fn cumulants_from_moments(
    n: usize,
    map: OrderingMapKind,
    formula: InversionFormula,
) -> Result<Expression> {
    match (formula, map) {
        (InversionFormula::Recursive, _) => cumulants_from_moments_recursive(n, map),
        (InversionFormula::PtoDirect, OrderingMapKind::Pto) => cumulants_from_moments_pto_direct(n),
        (InversionFormula::TtoDirect, OrderingMapKind::Tto) => cumulants_from_moments_tto_direct(n),
        (InversionFormula::Roerdnik, OrderingMapKind::Pto) => cumulants_from_moments_roerdnik(n),
        (f, m) => Err(invalid(format!(
            "formula {} is not defined for map {m}",
            f.name()
        ))),
    }
}

/// Replaces every multi-atom cumulant bracket by its recursive moment
/// expansion over the bracket's atoms, then canonicalizes.
pub fn expand_cumulants(expr: &Expression, map: OrderingMapKind) -> Result<Expression> {
    let top = expr
        .terms()
        .iter()
        .flat_map(|t| t.factors.iter())
        .filter(|b| b.is_cumulant())
        .map(Bracket::len)
        .max()
        .unwrap_or(0);
    if top < 2 {
        return canonicalize(expr, map);
    }
    let table = recursive_table(top, map)?;
    let out = expr.substitute_with(|b| {
        let b = b.normalized();
        (b.is_cumulant() && b.len() > 1).then(|| table[b.len() - 1].relabeled(b.atoms()))
    });
    canonicalize(&out, map)
}

/// Replaces every multi-atom moment bracket by its cumulant expansion over
/// the bracket's atoms, then canonicalizes.
pub fn expand_moments(expr: &Expression, map: OrderingMapKind) -> Result<Expression> {
    let top = expr
        .terms()
        .iter()
        .flat_map(|t| t.factors.iter())
        .filter(|b| !b.is_cumulant())
        .map(Bracket::len)
        .max()
        .unwrap_or(0);
    let table: Vec<Expression> = (1..=top)
        .map(|k| moments_from_cumulants(k, map))
        .collect::<Result<_>>()?;
    let out = expr.substitute_with(|b| {
        let b = b.normalized();
        (!b.is_cumulant() && b.len() > 1).then(|| table[b.len() - 1].relabeled(b.atoms()))
    });
    canonicalize(&out, map)
}

/// Order-`n` component of the moment generating function.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingComponent {
    pub order: usize,
    /// Size profiles with their weights `Π_r 1/s_r!` (or the collected
    /// weights of a word expansion).
    pub profiles: Vec<(SizeProfile, Coeff)>,
    /// The component expanded over a grid of atoms `1..=grid`.
    pub grid: usize,
    pub body: Expression,
}

impl GeneratingComponent {
    pub fn weight(&self, profile: &SizeProfile) -> Coeff {
        self.profiles
            .iter()
            .find(|(p, _)| p == profile)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Coeff::zero)
    }
}

impl fmt::Display for GeneratingComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.profiles.iter().map(|(p, w)| {
            let powers = p
                .iter()
                .rev()
                .map(|(r, s)| {
                    if s == 1 {
                        format!("K{r}")
                    } else {
                        format!("K{r}^{s}")
                    }
                })
                .join(" ");
            let body = if p.parts() == 1 {
                powers
            } else {
                format!("{{{powers}}}")
            };
            if w.is_one() {
                body
            } else {
                format!("{w}*{body}")
            }
        });
        write!(f, "{}", parts.format(" + "))
    }
}

/// Expands the ordered product `𝓚_{r_1} ⋯ 𝓚_{r_m}` over `1..=grid`, where
/// `𝓚_r` sums the cumulant brackets of all ascending `r`-subsets. The map
/// annihilates products that reuse an atom (and, under TTO, interleaved
/// products); survivors are put in canonical order.
fn expand_word(
    sizes: &[usize],
    grid: usize,
    weight: &Coeff,
    map: OrderingMapKind,
    acc: &mut TermAccumulator,
) -> Result<()> {
    fn rec(
        sizes: &[usize],
        grid: usize,
        used: &mut Vec<bool>,
        chosen: &mut Vec<Bracket>,
        out: &mut Vec<Vec<Bracket>>,
    ) {
        let Some((&r, rest)) = sizes.split_first() else {
            out.push(chosen.clone());
            return;
        };
        let free: Vec<usize> = (1..=grid).filter(|&a| !used[a]).collect();
        for subset in free.into_iter().combinations(r) {
            for &a in &subset {
                used[a] = true;
            }
            chosen.push(block_bracket(BracketKind::Cumulant, &subset));
            rec(rest, grid, used, chosen, out);
            chosen.pop();
            for &a in &subset {
                used[a] = false;
            }
        }
    }
    let mut products = Vec::new();
    rec(
        sizes,
        grid,
        &mut vec![false; grid + 1],
        &mut Vec::new(),
        &mut products,
    );
    for factors in products {
        let ordered = match map {
            OrderingMapKind::Grassmann => grassmann_representative(&factors),
            _ => match order_factors(&factors, map) {
                Ok(f) => f,
                Err(crate::Error::Inadmissible { .. }) => continue,
                Err(e) => return Err(e),
            },
        };
        acc.add(weight.clone(), ordered);
    }
    Ok(())
}

fn check_component(n: usize, grid: usize) -> Result<()> {
    check_bound("generating component order", n, 1, MAX_COMPONENT_N)?;
    check_bound("generating component grid", grid, 1, MAX_COMPONENT_N)
}

/// `𝓜_n = Σ_profiles Π_r (1/s_r!) {Π_r 𝓚_r^{s_r}}_{M_O}` on the grid `1..=n`.
pub fn meeron_component(n: usize, map: OrderingMapKind) -> Result<GeneratingComponent> {
    meeron_component_on_grid(n, n, map)
}

pub fn meeron_component_on_grid(
    n: usize,
    grid: usize,
    map: OrderingMapKind,
) -> Result<GeneratingComponent> {
    check_component(n, grid)?;
    let mut profiles = Vec::new();
    let mut acc = TermAccumulator::new();
    for p in enumerate_size_profiles(n)? {
        let denom: u128 = p.iter().map(|(_, s)| factorial(s)).product();
        let w = Coeff::new(1.into(), denom.into());
        expand_word(&p.sizes_descending(), grid, &w, map, &mut acc)?;
        profiles.push((p, w));
    }
    let body = canonicalize(&acc.finish(ProductSymbol::for_map(map)), map)?;
    Ok(GeneratingComponent {
        order: n,
        profiles,
        grid,
        body,
    })
}

/// Order-`n` part of `exp_{M_O}[Σ_r 𝓚_r] = Σ_m (1/m!) {(Σ_r 𝓚_r)^m}_{M_O}`,
/// collected word by word without the multinomial theorem.
pub fn exponential_component(
    n: usize,
    grid: usize,
    map: OrderingMapKind,
) -> Result<GeneratingComponent> {
    check_component(n, grid)?;
    let mut weights: Vec<(SizeProfile, Coeff)> = Vec::new();
    let mut acc = TermAccumulator::new();
    for c in enumerate_interval_compositions(n)? {
        let word = c.block_lengths();
        let w = Coeff::new(1.into(), factorial(word.len()).into());
        expand_word(word, grid, &w, map, &mut acc)?;
        let profile = SizeProfile::new(word.iter().map(|&r| (r, 1)))?;
        match weights.iter_mut().find(|(p, _)| *p == profile) {
            Some((_, total)) => *total += &w,
            None => weights.push((profile, w)),
        }
    }
    let order: Vec<SizeProfile> = enumerate_size_profiles(n)?;
    weights.sort_by_key(|(p, _)| order.iter().position(|q| q == p));
    let body = canonicalize(&acc.finish(ProductSymbol::for_map(map)), map)?;
    Ok(GeneratingComponent {
        order: n,
        profiles: weights,
        grid,
        body,
    })
}

/// `K_n` with every term containing a singleton bracket removed, as when
/// `𝓜_1 = 0`.
pub fn vanishing_mean_simplification(n: usize, map: OrderingMapKind) -> Result<Expression> {
    check_bound("vanishing_mean_simplification", n, 2, 3)?;
    let k = cumulants_from_moments_recursive(n, map)?;
    Ok(k.without_terms(has_singleton))
}

fn has_singleton(t: &Term) -> bool {
    t.factors.iter().any(|b| b.len() == 1)
}
