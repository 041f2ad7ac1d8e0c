//! Partition-like structures that the expansion formulas sum over.
//!
//! All indices are 1-based. Set partitions keep each block sorted and the
//! blocks sorted by their minimal element, so the block holding `1` always
//! leads.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{check_bound, invalid, Result};

/// Largest `n` accepted by [`enumerate_set_partitions`].
pub const MAX_SET_PARTITION_N: usize = 12;
/// Largest `n` accepted by [`enumerate_interval_compositions`].
pub const MAX_COMPOSITION_N: usize = 24;
/// Largest `n` accepted by profile counting.
pub const MAX_PROFILE_N: usize = 20;

/// A partition of `{1..n}` into non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition from arbitrary blocks, normalizing to canonical order.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(Vec::is_empty) {
            return Err(invalid("set partition contains an empty block"));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.iter().enumerate().any(|(i, &x)| x != i + 1) {
            return Err(invalid(format!(
                "blocks {blocks:?} do not partition 1..{}",
                all.len()
            )));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Number of blocks, `|π|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// True when every block is a contiguous run of indices.
    pub fn is_interval(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.windows(2).all(|w| w[1] == w[0] + 1))
    }

    pub fn profile(&self) -> SizeProfile {
        let mut m = BTreeMap::new();
        for b in &self.blocks {
            *m.entry(b.len()).or_insert(0) += 1;
        }
        SizeProfile { multiplicities: m }
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            write!(f, "{{{}}}", b.iter().join(","))?;
        }
        Ok(())
    }
}

/// An ordered composition of `n` into positive parts; induces contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntervalComposition {
    block_lengths: Vec<usize>,
}

impl IntervalComposition {
    pub fn new(block_lengths: Vec<usize>) -> Result<Self> {
        if block_lengths.is_empty() || block_lengths.contains(&0) {
            return Err(invalid("composition parts must be positive"));
        }
        Ok(Self { block_lengths })
    }

    pub fn block_lengths(&self) -> &[usize] {
        &self.block_lengths
    }

    pub fn n(&self) -> usize {
        self.block_lengths.iter().sum()
    }

    pub fn parts(&self) -> usize {
        self.block_lengths.len()
    }

    /// The contiguous runs `[1..m1], [m1+1..m1+m2], ...`.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut start = 1;
        self.block_lengths
            .iter()
            .map(|&m| {
                let b: Vec<usize> = (start..start + m).collect();
                start += m;
                b
            })
            .collect()
    }

    pub fn to_set_partition(&self) -> SetPartition {
        SetPartition {
            blocks: self.blocks(),
        }
    }
}

/// Block-size multiplicities: `s_r` groups of size `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SizeProfile {
    multiplicities: BTreeMap<usize, usize>,
}

impl SizeProfile {
    /// Zero multiplicities are dropped; a size of zero is rejected.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut multiplicities = BTreeMap::new();
        for (r, s) in pairs {
            if r == 0 {
                return Err(invalid("profile block size must be positive"));
            }
            if s > 0 {
                *multiplicities.entry(r).or_insert(0) += s;
            }
        }
        if multiplicities.is_empty() {
            return Err(invalid("profile is empty"));
        }
        Ok(Self { multiplicities })
    }

    pub fn n(&self) -> usize {
        self.multiplicities.iter().map(|(r, s)| r * s).sum()
    }

    pub fn parts(&self) -> usize {
        self.multiplicities.values().sum()
    }

    pub fn multiplicity(&self, r: usize) -> usize {
        self.multiplicities.get(&r).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (usize, usize)> + '_ {
        self.multiplicities.iter().map(|(&r, &s)| (r, s))
    }

    /// Block sizes in descending order, each repeated by its multiplicity.
    pub fn sizes_descending(&self) -> Vec<usize> {
        self.multiplicities
            .iter()
            .rev()
            .flat_map(|(&r, &s)| std::iter::repeat_n(r, s))
            .collect()
    }
}

impl fmt::Display for SizeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.multiplicities
                .iter()
                .rev()
                .map(|(r, s)| format!("{r}:{s}"))
                .join(",")
        )
    }
}

/// All set partitions of `{1..n}`, in lexicographic order of their
/// restricted-growth strings.
pub fn enumerate_set_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check_bound("set partitions", n, 1, MAX_SET_PARTITION_N)?;
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    grow(1, n, &mut blocks, &mut out);
    Ok(out)
}

fn grow(k: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<SetPartition>) {
    if k > n {
        out.push(SetPartition {
            blocks: blocks.clone(),
        });
        return;
    }
    for i in 0..blocks.len() {
        blocks[i].push(k);
        grow(k + 1, n, blocks, out);
        blocks[i].pop();
    }
    blocks.push(vec![k]);
    grow(k + 1, n, blocks, out);
    blocks.pop();
}

/// All `2^(n-1)` ordered compositions of `n`, grouped by part count and
/// lexicographic within each group: `n=3 → (3),(1,2),(2,1),(1,1,1)`.
pub fn enumerate_interval_compositions(n: usize) -> Result<Vec<IntervalComposition>> {
    check_bound("interval compositions", n, 1, MAX_COMPOSITION_N)?;
    let mut out = Vec::with_capacity(1 << (n - 1));
    for p in 1..=n {
        // choose p-1 cut points among the n-1 gaps
        for cuts in (1..n).combinations(p - 1) {
            let mut lengths = Vec::with_capacity(p);
            let mut prev = 0;
            for &c in &cuts {
                lengths.push(c - prev);
                prev = c;
            }
            lengths.push(n - prev);
            out.push(IntervalComposition {
                block_lengths: lengths,
            });
        }
    }
    Ok(out)
}

/// Every ordering of the partition's blocks that keeps the block containing
/// index 1 leftmost; `(|π|-1)!` orderings, rest permuted lexicographically.
pub fn block_permutations_first_fixed(partition: &SetPartition) -> Vec<Vec<Vec<usize>>> {
    let blocks = partition.blocks();
    let Some((first, rest)) = blocks.split_first() else {
        return Vec::new();
    };
    rest.iter()
        .permutations(rest.len())
        .map(|perm| {
            std::iter::once(first.clone())
                .chain(perm.into_iter().cloned())
                .collect()
        })
        .collect()
}

/// Sign of a permutation of `1..k` given in one-line notation.
pub fn permutation_parity(perm: &[usize]) -> Result<i8> {
    let k = perm.len();
    let mut seen = vec![false; k + 1];
    for &x in perm {
        if x == 0 || x > k || seen[x] {
            return Err(invalid(format!("{perm:?} is not a permutation of 1..{k}")));
        }
        seen[x] = true;
    }
    let inversions = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter(|&(i, j)| perm[i] > perm[j])
        .count();
    Ok(if inversions % 2 == 0 { 1 } else { -1 })
}

/// Number of set partitions of `n` with the given block-size profile:
/// `n! / Π_r (r!)^{s_r} s_r!`.
pub fn partitions_with_profile_count(profile: &SizeProfile) -> Result<u128> {
    let n = profile.n();
    check_bound("profile count", n, 1, MAX_PROFILE_N)?;
    let mut denom: u128 = 1;
    for (r, s) in profile.iter() {
        denom *= factorial(r).pow(s as u32) * factorial(s);
    }
    Ok(factorial(n) / denom)
}

/// All size profiles (integer partitions) of `n`, largest part first.
pub fn enumerate_size_profiles(n: usize) -> Result<Vec<SizeProfile>> {
    check_bound("size profiles", n, 1, MAX_PROFILE_N)?;
    let mut out = Vec::new();
    let mut parts = Vec::new();
    integer_partitions(n, n, &mut parts, &mut out);
    Ok(out
        .into_iter()
        .map(|p: Vec<usize>| SizeProfile::new(p.into_iter().map(|r| (r, 1))).expect("n >= 1"))
        .collect())
}

fn integer_partitions(rem: usize, max: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if rem == 0 {
        out.push(parts.clone());
        return;
    }
    for r in (1..=rem.min(max)).rev() {
        parts.push(r);
        integer_partitions(rem - r, r, parts, out);
        parts.pop();
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bell numbers by the Bell triangle, independent of the enumerator.
    fn bell_triangle(n: usize) -> u128 {
        let mut row = vec![1u128];
        for _ in 1..n {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                let v = next.last().unwrap() + x;
                next.push(v);
            }
            row = next;
        }
        *row.last().unwrap()
    }

    #[test]
    fn bell_counts_match_triangle() {
        for n in 1..=10 {
            let parts = enumerate_set_partitions(n).unwrap();
            assert_eq!(parts.len() as u128, bell_triangle(n), "n = {n}");
            let mut sorted = parts.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), parts.len());
        }
        assert_eq!(bell_triangle(3), 5);
        assert_eq!(bell_triangle(4), 15);
    }

    #[test]
    fn small_partitions() {
        let p1 = enumerate_set_partitions(1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0].blocks(), &[vec![1]]);
        assert_eq!(enumerate_set_partitions(3).unwrap().len(), 5);
        assert_eq!(enumerate_set_partitions(4).unwrap().len(), 15);
        for p in enumerate_set_partitions(6).unwrap() {
            assert!(p.blocks().windows(2).all(|w| w[0][0] < w[1][0]));
            assert_eq!(p.blocks()[0][0], 1);
        }
    }

    #[test]
    fn enumeration_caps_are_errors() {
        assert!(enumerate_set_partitions(0).is_err());
        assert!(enumerate_set_partitions(13).is_err());
        assert!(enumerate_interval_compositions(0).is_err());
        assert!(enumerate_interval_compositions(25).is_err());
    }

    #[test]
    fn compositions() {
        let c3: Vec<Vec<usize>> = enumerate_interval_compositions(3)
            .unwrap()
            .iter()
            .map(|c| c.block_lengths().to_vec())
            .collect();
        assert_eq!(c3, vec![vec![3], vec![1, 2], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(enumerate_interval_compositions(1).unwrap().len(), 1);
        assert_eq!(enumerate_interval_compositions(5).unwrap().len(), 16);
        for n in 1..=12 {
            let all = enumerate_interval_compositions(n).unwrap();
            assert_eq!(all.len(), 1 << (n - 1));
            for p in 1..=n {
                let k = all.iter().filter(|c| c.parts() == p).count() as u128;
                assert_eq!(k, binomial(n - 1, p - 1));
            }
            assert!(all
                .iter()
                .all(|c| c.n() == n && c.to_set_partition().is_interval()));
        }
    }

    #[test]
    fn block_permutations() {
        let p = SetPartition::new(vec![vec![1], vec![2], vec![3]]).unwrap();
        let perms = block_permutations_first_fixed(&p);
        assert_eq!(
            perms,
            vec![
                vec![vec![1], vec![2], vec![3]],
                vec![vec![1], vec![3], vec![2]]
            ]
        );
        let single = SetPartition::new(vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(block_permutations_first_fixed(&single).len(), 1);
        let q = SetPartition::new(vec![vec![2], vec![1, 3], vec![4]]).unwrap();
        let perms = block_permutations_first_fixed(&q);
        assert_eq!(perms.len(), 2);
        assert!(perms.iter().all(|o| o[0] == vec![1, 3]));
    }

    #[test]
    fn parity() {
        assert_eq!(permutation_parity(&[1, 2, 3]).unwrap(), 1);
        assert_eq!(permutation_parity(&[2, 1]).unwrap(), -1);
        assert_eq!(permutation_parity(&[3, 1, 2]).unwrap(), 1);
        assert!(permutation_parity(&[1, 1]).is_err());
        assert!(permutation_parity(&[0, 1]).is_err());
        assert!(permutation_parity(&[1, 3]).is_err());
    }

    #[test]
    fn profile_counts() {
        let c = |pairs: &[(usize, usize)]| {
            partitions_with_profile_count(&SizeProfile::new(pairs.iter().copied()).unwrap())
                .unwrap()
        };
        assert_eq!(c(&[(2, 1), (1, 1)]), 3);
        assert_eq!(c(&[(2, 2)]), 3);
        assert_eq!(c(&[(2, 1), (1, 2)]), 6);
        assert_eq!(c(&[(3, 1), (1, 1)]), 4);
        assert_eq!(c(&[(1, 2)]), 1);
        assert!(SizeProfile::new([(0, 1)]).is_err());
        assert!(partitions_with_profile_count(&SizeProfile::new([(21, 1)]).unwrap()).is_err());
    }

    #[test]
    fn profile_counts_sum_to_bell() {
        for n in 1..=10 {
            let total: u128 = enumerate_size_profiles(n)
                .unwrap()
                .iter()
                .map(|p| partitions_with_profile_count(p).unwrap())
                .sum();
            assert_eq!(total, bell_triangle(n));
            // and each profile count matches the enumerated partitions
            let parts = enumerate_set_partitions(n).unwrap();
            for prof in enumerate_size_profiles(n).unwrap() {
                let k = parts.iter().filter(|p| p.profile() == prof).count() as u128;
                assert_eq!(k, partitions_with_profile_count(&prof).unwrap());
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
            // (a ∘ b)(i) = a(b(i))
            b.iter().map(|&i| a[i - 1]).collect()
        }

        proptest! {
            #[test]
            fn parity_is_multiplicative(
                a in Just((1..=7usize).collect::<Vec<_>>()).prop_shuffle(),
                b in Just((1..=7usize).collect::<Vec<_>>()).prop_shuffle(),
            ) {
                let ab = compose(&a, &b);
                prop_assert_eq!(
                    permutation_parity(&ab).unwrap(),
                    permutation_parity(&a).unwrap() * permutation_parity(&b).unwrap()
                );
            }
        }
    }
}
