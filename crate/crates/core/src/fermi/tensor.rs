use std::collections::HashMap;

use itertools::Itertools;
use num_complex::Complex64;

use crate::combinatorics::{factorial, permutation_parity};
use crate::error::{check_bound, invalid, Result};

use super::fock::MAX_ORBITALS;

pub const MAX_RANK: usize = 4;

/// A rank-`(p, p)` tensor antisymmetric in its upper and in its lower
/// indices, stored as a matrix over ascending `p`-tuples of orbitals.
/// [`AntisymmetricTensor::get`] recovers any entry with its sign.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricTensor {
    n_orbitals: usize,
    rank: usize,
    tuples: Vec<Vec<usize>>,
    entries: Vec<Complex64>,
}

/// Sorts `idx`, returning the permutation sign; `None` on a repeated index.
pub(crate) fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let ranks: Vec<usize> = idx
        .iter()
        .map(|x| sorted.binary_search(x).expect("present") + 1)
        .collect();
    let sign = permutation_parity(&ranks).expect("ranks form a permutation");
    Some((sorted, f64::from(sign)))
}

impl AntisymmetricTensor {
    pub fn zeros(n_orbitals: usize, rank: usize) -> Result<Self> {
        check_bound("orbital count", n_orbitals, 1, MAX_ORBITALS)?;
        check_bound("tensor rank", rank, 1, MAX_RANK.min(n_orbitals))?;
        let tuples: Vec<Vec<usize>> = (1..=n_orbitals).combinations(rank).collect();
        let len = tuples.len();
        Ok(Self {
            n_orbitals,
            rank,
            tuples,
            entries: vec![Complex64::new(0.0, 0.0); len * len],
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Ascending index tuples, in the order of the stored rows and columns.
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    fn position(&self, t: &[usize]) -> usize {
        self.tuples
            .binary_search_by(|x| x.as_slice().cmp(t))
            .expect("ascending tuple within range")
    }

    /// Entry over ascending tuples, by position.
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.tuples.len() + col]
    }

    pub(crate) fn set_at(&mut self, row: usize, col: usize, z: Complex64) {
        let n = self.tuples.len();
        self.entries[row * n + col] = z;
    }

    /// `T^{upper}_{lower}` for arbitrary index tuples: signed by the sorting
    /// permutations, zero when an index repeats.
    pub fn get(&self, upper: &[usize], lower: &[usize]) -> Result<Complex64> {
        if upper.len() != self.rank || lower.len() != self.rank {
            return Err(invalid(format!(
                "rank-{} tensor indexed with {} upper and {} lower indices",
                self.rank,
                upper.len(),
                lower.len()
            )));
        }
        if let Some(&bad) = upper
            .iter()
            .chain(lower)
            .find(|&&x| x == 0 || x > self.n_orbitals)
        {
            return Err(invalid(format!(
                "orbital {bad} outside 1..={}",
                self.n_orbitals
            )));
        }
        let (Some((u, su)), Some((l, sl))) = (sort_with_sign(upper), sort_with_sign(lower)) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        Ok(self.at(self.position(&u), self.position(&l)) * (su * sl))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_orbitals != other.n_orbitals || self.rank != other.rank {
            return Err(invalid(format!(
                "tensor shapes differ: ({}, rank {}) vs ({}, rank {})",
                self.n_orbitals, self.rank, other.n_orbitals, other.rank
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut out = self.clone();
        for a in &mut out.entries {
            *a *= k;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|T^I_J|` over ascending tuples satisfying `pred(I, J)`.
    pub fn max_abs_where(&self, pred: impl Fn(&[usize], &[usize]) -> bool) -> f64 {
        let mut m: f64 = 0.0;
        for (r, i) in self.tuples.iter().enumerate() {
            for (c, j) in self.tuples.iter().enumerate() {
                if pred(i, j) {
                    m = m.max(self.at(r, c).norm());
                }
            }
        }
        m
    }

    /// `Σ_I T^I_I` over all index tuples, ordered or not: `p!` times the
    /// sum over ascending tuples.
    pub fn trace(&self) -> Complex64 {
        let n = self.tuples.len();
        let diag: Complex64 = (0..n).map(|i| self.at(i, i)).sum();
        diag * factorial(self.rank) as f64
    }

    /// Largest `|T^I_J − conj(T^J_I)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.tuples.len();
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| (self.at(r, c) - self.at(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Entries with modulus above `tol`, as `(upper, lower, value)`.
    pub fn nonzero_entries(&self, tol: f64) -> Vec<(&[usize], &[usize], Complex64)> {
        let mut out = Vec::new();
        for (r, i) in self.tuples.iter().enumerate() {
            for (c, j) in self.tuples.iter().enumerate() {
                let z = self.at(r, c);
                if z.norm() > tol {
                    out.push((i.as_slice(), j.as_slice(), z));
                }
            }
        }
        out
    }
}

/// Normalized Grassmann product
/// `(A∧B)^{I}_{J} = 1/((p+q)!)² Σ_{σ,τ} sgn σ sgn τ A^{σI}_{τJ} B^{σI'}_{τJ'}`,
/// evaluated by grouping the permutations into index subsets:
/// `(p! q! / (p+q)!)² Σ_{S,T} ε(S) ε(T) A^S_T B^{I∖S}_{J∖T}`.
pub fn wedge(a: &AntisymmetricTensor, b: &AntisymmetricTensor) -> Result<AntisymmetricTensor> {
    if a.n_orbitals != b.n_orbitals {
        return Err(invalid(format!(
            "wedge of tensors over {} and {} orbitals",
            a.n_orbitals, b.n_orbitals
        )));
    }
    let (p, q) = (a.rank, b.rank);
    check_bound("wedge rank", p + q, 2, MAX_RANK)?;
    let mut out = AntisymmetricTensor::zeros(a.n_orbitals, p + q)?;
    let norm = (factorial(p) * factorial(q)) as f64 / factorial(p + q) as f64;
    let norm = norm * norm;
    // (positions of S, sign of S·S^c) for every p-subset of p+q slots
    let splits: Vec<(Vec<usize>, Vec<usize>, f64)> = (0..p + q)
        .combinations(p)
        .map(|s| {
            let rest: Vec<usize> = (0..p + q).filter(|x| !s.contains(x)).collect();
            let perm: Vec<usize> = s.iter().chain(&rest).map(|x| x + 1).collect();
            let sign = f64::from(permutation_parity(&perm).expect("permutation"));
            (s, rest, sign)
        })
        .collect();
    let pick = |t: &[usize], pos: &[usize]| -> Vec<usize> { pos.iter().map(|&k| t[k]).collect() };
    let mut index_a: HashMap<Vec<usize>, usize> = HashMap::new();
    for (k, t) in a.tuples.iter().enumerate() {
        index_a.insert(t.clone(), k);
    }
    let mut index_b: HashMap<Vec<usize>, usize> = HashMap::new();
    for (k, t) in b.tuples.iter().enumerate() {
        index_b.insert(t.clone(), k);
    }
    let tuples = out.tuples.clone();
    for (r, upper) in tuples.iter().enumerate() {
        for (c, lower) in tuples.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (su, ru, eu) in &splits {
                let ia = index_a[&pick(upper, su)];
                let ib = index_b[&pick(upper, ru)];
                for (sl, rl, el) in &splits {
                    let ja = index_a[&pick(lower, sl)];
                    let jb = index_b[&pick(lower, rl)];
                    acc += a.at(ia, ja) * b.at(ib, jb) * (eu * el);
                }
            }
            out.set_at(r, c, acc * norm);
        }
    }
    Ok(out)
}

/// Wedge of a nonempty list, folded left to right.
pub fn wedge_all(factors: &[&AntisymmetricTensor]) -> Result<AntisymmetricTensor> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| invalid("wedge of an empty list"))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, t| wedge(&acc, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_tensor(m: usize, p: usize, seed: u64) -> AntisymmetricTensor {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = AntisymmetricTensor::zeros(m, p).unwrap();
        let n = t.tuples().len();
        for r in 0..n {
            for c in 0..n {
                t.set_at(
                    r,
                    c,
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                );
            }
        }
        t
    }

    /// Literal double sum over all `(p+q)!²` permutation pairs.
    fn wedge_brute(
        a: &AntisymmetricTensor,
        b: &AntisymmetricTensor,
        upper: &[usize],
        lower: &[usize],
    ) -> Complex64 {
        let (p, q) = (a.rank(), b.rank());
        let n = p + q;
        let mut acc = Complex64::new(0.0, 0.0);
        for s in (0..n).permutations(n) {
            let ss = permutation_parity(&s.iter().map(|x| x + 1).collect::<Vec<_>>()).unwrap();
            let u: Vec<usize> = s.iter().map(|&k| upper[k]).collect();
            for t in (0..n).permutations(n) {
                let st = permutation_parity(&t.iter().map(|x| x + 1).collect::<Vec<_>>()).unwrap();
                let l: Vec<usize> = t.iter().map(|&k| lower[k]).collect();
                let va = a.get(&u[..p], &l[..p]).unwrap();
                let vb = b.get(&u[p..], &l[p..]).unwrap();
                acc += va * vb * f64::from(ss * st);
            }
        }
        acc / (factorial(n) as f64).powi(2)
    }

    #[test]
    fn signed_access() {
        let t = random_tensor(4, 2, 1);
        let v = t.get(&[1, 3], &[2, 4]).unwrap();
        assert_eq!(t.get(&[3, 1], &[2, 4]).unwrap(), -v);
        assert_eq!(t.get(&[3, 1], &[4, 2]).unwrap(), v);
        assert_eq!(t.get(&[1, 1], &[2, 4]).unwrap(), Complex64::new(0.0, 0.0));
        assert!(t.get(&[1], &[2]).is_err());
        assert!(t.get(&[1, 5], &[2, 3]).is_err());
    }

    #[test]
    fn wedge_matches_permutation_sum() {
        for (p, q, seed) in [(1, 1, 0), (1, 2, 1), (2, 1, 2), (2, 2, 3), (1, 3, 4)] {
            let a = random_tensor(5, p, seed);
            let b = random_tensor(5, q, seed + 100);
            let w = wedge(&a, &b).unwrap();
            for upper in w.tuples().iter().take(4) {
                for lower in w.tuples().iter().rev().take(4) {
                    let want = wedge_brute(&a, &b, upper, lower);
                    let got = w.get(upper, lower).unwrap();
                    assert!((want - got).norm() < 1e-13, "p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn wedge_caps_and_zero() {
        let a = random_tensor(5, 2, 0);
        let b = random_tensor(5, 3, 0);
        assert!(wedge(&a, &b).is_err());
        let c = random_tensor(4, 1, 0);
        assert!(wedge(&a, &c).is_err());
        let z = AntisymmetricTensor::zeros(5, 1).unwrap();
        let e = random_tensor(5, 1, 3);
        assert_eq!(wedge(&e, &z).unwrap().max_abs(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn wedge_commutes(p in 1usize..=2, q in 1usize..=2, seed in any::<u64>()) {
            let a = random_tensor(5, p, seed);
            let b = random_tensor(5, q, seed ^ 0x5555);
            let d = wedge(&a, &b).unwrap().sub(&wedge(&b, &a).unwrap()).unwrap();
            prop_assert!(d.max_abs() < 1e-13);
        }

        #[test]
        fn wedge_associates(seed in any::<u64>()) {
            let a = random_tensor(5, 1, seed);
            let b = random_tensor(5, 1, seed ^ 1);
            let c = random_tensor(5, 2, seed ^ 2);
            let l = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
            let r = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
            prop_assert!(l.sub(&r).unwrap().max_abs() < 1e-13);
        }
    }
}
