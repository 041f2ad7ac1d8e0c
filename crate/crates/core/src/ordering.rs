//! The `M_O` ordering maps: which partitions survive and how products of
//! brackets are put in canonical order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::combinatorics::{
    enumerate_interval_compositions, enumerate_set_partitions, permutation_parity, SetPartition,
    MAX_SET_PARTITION_N,
};
use crate::error::{check_bound, invalid, Error, Result};
use crate::expr::Bracket;
use crate::numeric::{max_norm, OperatorModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderingMapKind {
    /// Commuting c-number limit.
    Classical,
    /// Partial time ordering: products ordered by each bracket's first atom.
    Pto,
    /// Total time ordering: only contiguous chains of brackets.
    Tto,
    /// Full antisymmetrization; products commute under the wedge.
    Grassmann,
}

impl OrderingMapKind {
    pub const ALL: [OrderingMapKind; 4] = [
        OrderingMapKind::Classical,
        OrderingMapKind::Pto,
        OrderingMapKind::Tto,
        OrderingMapKind::Grassmann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingMapKind::Classical => "classical",
            OrderingMapKind::Pto => "pto",
            OrderingMapKind::Tto => "tto",
            OrderingMapKind::Grassmann => "grassmann",
        }
    }

    /// Whether products of brackets commute under this map.
    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            OrderingMapKind::Classical | OrderingMapKind::Grassmann
        )
    }
}

impl fmt::Display for OrderingMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown ordering map {s:?}")))
    }
}

/// Set partitions that contribute to the moment expansion under `map`.
///
/// TTO keeps only the `2^(n-1)` partitions into contiguous runs; every other
/// map keeps all `Bell(n)`.
pub fn admissible_partitions(n: usize, map: OrderingMapKind) -> Result<Vec<SetPartition>> {
    match map {
        OrderingMapKind::Tto => {
            check_bound("TTO partitions", n, 1, MAX_SET_PARTITION_N)?;
            let mut parts: Vec<SetPartition> = enumerate_interval_compositions(n)?
                .iter()
                .map(|c| c.to_set_partition())
                .collect();
            parts.sort();
            Ok(parts)
        }
        _ => enumerate_set_partitions(n),
    }
}

/// Puts a product of brackets over disjoint atom sets into the map's
/// canonical order.
///
/// * PTO: ascending by each bracket's minimal atom.
/// * TTO: as PTO, and each bracket's maximal atom must precede the next
///   bracket's minimal atom; interleaved products are rejected.
/// * Classical, Grassmann: size descending, then lexicographic.
pub fn canonical_factor_order(factors: &[Bracket], map: OrderingMapKind) -> Result<Vec<Bracket>> {
    let mut seen = BTreeSet::new();
    for b in factors {
        for &a in b.atoms() {
            if !seen.insert(a) {
                return Err(invalid(format!("atom {a} appears in more than one factor")));
            }
        }
    }
    order_factors(factors, map)
}

pub(crate) fn order_factors(factors: &[Bracket], map: OrderingMapKind) -> Result<Vec<Bracket>> {
    let mut out = factors.to_vec();
    match map {
        OrderingMapKind::Pto => out.sort_by_key(Bracket::min_atom),
        OrderingMapKind::Tto => {
            out.sort_by_key(Bracket::min_atom);
            if let Some(w) = out.windows(2).find(|w| w[0].max_atom() >= w[1].min_atom()) {
                return Err(Error::Inadmissible {
                    map: "tto",
                    detail: format!(
                        "brackets over {:?} and {:?} interleave in time",
                        w[0].atoms(),
                        w[1].atoms()
                    ),
                });
            }
        }
        OrderingMapKind::Classical | OrderingMapKind::Grassmann => {
            out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)))
        }
    }
    Ok(out)
}

/// Grassmann normal form: under full antisymmetrization only the multiset
/// of (size, kind) matters, so factors are sorted and relabeled with
/// consecutive atoms `1, 2, ...` in factor order.
pub fn grassmann_representative(factors: &[Bracket]) -> Vec<Bracket> {
    let mut sorted = factors.to_vec();
    sorted.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.kind().cmp(&b.kind()))
            .then_with(|| a.atoms().cmp(b.atoms()))
    });
    let mut next = 1;
    sorted
        .iter()
        .map(|b| {
            let atoms: Vec<usize> = (next..next + b.len()).collect();
            next += b.len();
            Bracket::new(b.kind(), atoms).expect("consecutive atoms are distinct")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoConstraintReport {
    pub map: OrderingMapKind,
    pub n: usize,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    pub satisfied: bool,
}

/// Relative tolerance for [`check_mo_constraint`].
pub const MO_CONSTRAINT_TOL: f64 = 1e-12;

/// Checks numerically that the full moment `⟨1·…·n⟩` is a fixed point of
/// the map's projection on `model`.
///
/// For the time orderings the projection of a bracket is its ascending
/// rearrangement. Classical symmetrizes over all orders of the atoms,
/// Grassmann antisymmetrizes with permutation signs.
pub fn check_mo_constraint(
    n: usize,
    map: OrderingMapKind,
    model: &OperatorModel,
) -> Result<MoConstraintReport> {
    check_bound("M_O constraint order", n, 1, 8)?;
    let atoms: Vec<usize> = (1..=n).collect();
    for &a in &atoms {
        if !model.has_atom(a) {
            return Err(invalid(format!("model has no assignment for atom {a}")));
        }
    }
    let moment = model.raw_moment(&atoms)?;
    let projected = match map {
        OrderingMapKind::Pto | OrderingMapKind::Tto => {
            let b = Bracket::moment(&atoms).normalized();
            model.raw_moment(b.atoms())?
        }
        OrderingMapKind::Classical | OrderingMapKind::Grassmann => {
            let d = model.dim();
            let mut acc = DMatrix::<Complex64>::zeros(d, d);
            let mut count = 0.0;
            for perm in atoms.iter().copied().permutations(n) {
                let sign = if map == OrderingMapKind::Grassmann {
                    f64::from(permutation_parity(&perm)?)
                } else {
                    1.0
                };
                acc += model.raw_moment(&perm)? * Complex64::new(sign, 0.0);
                count += 1.0;
            }
            acc / Complex64::new(count, 0.0)
        }
    };
    let abs = max_norm(&(&projected - &moment));
    let scale = max_norm(&moment).max(max_norm(&projected));
    let rel = if scale > 0.0 { abs / scale } else { abs };
    Ok(MoConstraintReport {
        map,
        n,
        max_abs_deviation: abs,
        max_rel_deviation: rel,
        satisfied: rel <= MO_CONSTRAINT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::build_random_model;
    use OrderingMapKind::*;

    fn c(a: &[usize]) -> Bracket {
        Bracket::cumulant(a)
    }

    #[test]
    fn map_names() {
        for m in OrderingMapKind::ALL {
            assert_eq!(m.name().parse::<OrderingMapKind>().unwrap(), m);
        }
        assert!("ordered".parse::<OrderingMapKind>().is_err());
    }

    #[test]
    fn admissible_counts() {
        let tto = admissible_partitions(3, Tto).unwrap();
        let shown: Vec<String> = tto.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, vec!["{1}{2}{3}", "{1}{2,3}", "{1,2}{3}", "{1,2,3}"]);
        let pto = admissible_partitions(3, Pto).unwrap();
        assert_eq!(pto.len(), 5);
        assert!(pto.iter().any(|p| p.to_string() == "{1,3}{2}"));
        for m in OrderingMapKind::ALL {
            assert_eq!(admissible_partitions(1, m).unwrap().len(), 1);
        }
        assert!(admissible_partitions(13, Tto).is_err());
    }

    #[test]
    fn tto_partitions_are_pto_partitions() {
        for n in 1..=7 {
            let pto: BTreeSet<_> = admissible_partitions(n, Pto).unwrap().into_iter().collect();
            for p in admissible_partitions(n, Tto).unwrap() {
                assert!(pto.contains(&p));
                assert!(p.is_interval());
            }
        }
    }

    #[test]
    fn factor_order_examples() {
        assert_eq!(
            canonical_factor_order(&[c(&[2, 3]), c(&[1, 4])], Pto).unwrap(),
            vec![c(&[1, 4]), c(&[2, 3])]
        );
        assert_eq!(
            canonical_factor_order(&[c(&[3, 4]), c(&[1, 2])], Tto).unwrap(),
            vec![c(&[1, 2]), c(&[3, 4])]
        );
        assert_eq!(
            canonical_factor_order(&[c(&[3]), c(&[1, 2])], Grassmann).unwrap(),
            vec![c(&[1, 2]), c(&[3])]
        );
        assert!(matches!(
            canonical_factor_order(&[c(&[2, 3]), c(&[1, 4])], Tto),
            Err(Error::Inadmissible { .. })
        ));
        assert!(canonical_factor_order(&[c(&[1, 2]), c(&[2, 3])], Pto).is_err());
    }

    #[test]
    fn factor_order_invariants() {
        for n in 1..=6 {
            for map in [Pto, Tto, Classical] {
                for p in admissible_partitions(n, map).unwrap() {
                    let mut fs: Vec<Bracket> = p.blocks().iter().map(|b| c(b)).collect();
                    fs.reverse();
                    let once = canonical_factor_order(&fs, map).unwrap();
                    assert_eq!(canonical_factor_order(&once, map).unwrap(), once);
                    match map {
                        Pto => assert!(once[0].atoms().contains(&1)),
                        Tto => {
                            let flat: Vec<usize> =
                                once.iter().flat_map(|b| b.atoms().to_vec()).collect();
                            assert_eq!(flat, (1..=n).collect::<Vec<_>>());
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    #[test]
    fn grassmann_representative_merges_profiles() {
        let a = grassmann_representative(&[c(&[3]), c(&[1, 4]), c(&[2])]);
        let b = grassmann_representative(&[c(&[1]), c(&[2]), c(&[3, 4])]);
        assert_eq!(a, b);
        assert_eq!(a, vec![c(&[1, 2]), c(&[3]), c(&[4])]);
    }

    #[test]
    fn mo_constraint_time_orderings() {
        let model = build_random_model(4, 3, 3, 11).unwrap();
        let r = check_mo_constraint(2, Pto, &model).unwrap();
        assert_eq!(r.max_abs_deviation, 0.0);
        let r = check_mo_constraint(3, Tto, &model).unwrap();
        assert!(r.max_abs_deviation < 1e-12);
        assert!(r.satisfied);
    }

    #[test]
    fn mo_constraint_grassmann() {
        let generic = build_random_model(4, 3, 3, 5).unwrap();
        let r = check_mo_constraint(3, Grassmann, &generic).unwrap();
        assert!(!r.satisfied);
        assert!(r.max_rel_deviation > 1e-3);
        // mutually anticommuting atoms satisfy the antisymmetrized constraint
        let pauli = crate::numeric::anticommuting_model();
        let r = check_mo_constraint(3, Grassmann, &pauli).unwrap();
        assert!(r.satisfied, "{r:?}");
        assert!(check_mo_constraint(4, Pto, &pauli).is_err());
    }
}
