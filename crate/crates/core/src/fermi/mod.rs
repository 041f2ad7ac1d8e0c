//! Fermionic Fock-space oracle: reduced density matrices, the Grassmann
//! wedge and RDM cumulants.

mod fock;
mod tensor;

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::combinatorics::{
    binomial, enumerate_size_profiles, factorial, partitions_with_profile_count,
};
use crate::error::{check_bound, invalid, Result};
use crate::expr::Expression;

pub use fock::{bitstring, parse_bitstring, FockVector, MAX_ORBITALS, NORM_TOL};
pub use tensor::{wedge, wedge_all, AntisymmetricTensor, MAX_RANK};

fn check_rank(state: &FockVector, p: usize) -> Result<()> {
    let limit = state
        .particle_number()
        .unwrap_or(state.n_orbitals())
        .min(MAX_RANK)
        .min(state.n_orbitals());
    check_bound("RDM rank", p, 1, limit)
}

/// `a_{j_p} ⋯ a_{j_1} |ψ⟩`.
fn annihilate_all(state: &FockVector, lower: &[usize]) -> FockVector {
    lower.iter().fold(state.clone(), |v, &j| v.apply(j, true))
}

/// `D^{i_1…i_p}_{j_1…j_p} = (1/p!) ⟨ψ| a†_{i_1}⋯a†_{i_p} a_{j_p}⋯a_{j_1} |ψ⟩`
/// by direct operator application, for any index tuples.
pub fn rdm_entry(state: &FockVector, upper: &[usize], lower: &[usize]) -> Result<Complex64> {
    if upper.len() != lower.len() || upper.is_empty() {
        return Err(invalid(
            "RDM entry needs equally many upper and lower indices",
        ));
    }
    for &x in upper.iter().chain(lower) {
        if x == 0 || x > state.n_orbitals() {
            return Err(invalid(format!(
                "orbital {x} outside 1..={}",
                state.n_orbitals()
            )));
        }
    }
    let bra = annihilate_all(state, upper);
    let ket = annihilate_all(state, lower);
    Ok(bra.inner(&ket) / factorial(upper.len()) as f64)
}

/// The `p`-particle RDM, `p ≤ min(4, N)`.
pub fn compute_rdm(state: &FockVector, p: usize) -> Result<AntisymmetricTensor> {
    check_rank(state, p)?;
    let mut out = AntisymmetricTensor::zeros(state.n_orbitals(), p)?;
    let phis: Vec<FockVector> = out
        .tuples()
        .par_iter()
        .map(|t| annihilate_all(state, t))
        .collect();
    let scale = 1.0 / factorial(p) as f64;
    let rows: Vec<Vec<Complex64>> = phis
        .par_iter()
        .map(|bra| phis.iter().map(|ket| bra.inner(ket) * scale).collect())
        .collect();
    for (r, row) in rows.into_iter().enumerate() {
        for (c, z) in row.into_iter().enumerate() {
            out.set_at(r, c, z);
        }
    }
    Ok(out)
}

/// `D_1 … D_max_p`.
pub fn compute_rdms(state: &FockVector, max_p: usize) -> Result<Vec<AntisymmetricTensor>> {
    check_rank(state, max_p)?;
    (1..=max_p).map(|p| compute_rdm(state, p)).collect()
}

/// Wedge of the cumulants `Δ_r` over a size profile, larger ranks first.
fn profile_product(
    sizes: &[usize],
    cumulants: &[AntisymmetricTensor],
) -> Result<AntisymmetricTensor> {
    let factors: Vec<&AntisymmetricTensor> = sizes.iter().map(|&r| &cumulants[r - 1]).collect();
    wedge_all(&factors)
}

/// `Δ_1 … Δ_max_p` by triangular subtraction:
/// `Δ_k = D_k − Σ_{profiles ≠ {k}} c(profile) Δ_{r_1}∧…∧Δ_{r_m}` with `c` the
/// number of set partitions of that profile.
pub fn rdm_cumulants(state: &FockVector, max_p: usize) -> Result<Vec<AntisymmetricTensor>> {
    let rdms = compute_rdms(state, max_p)?;
    cumulants_from_rdms(&rdms)
}

pub fn cumulants_from_rdms(rdms: &[AntisymmetricTensor]) -> Result<Vec<AntisymmetricTensor>> {
    let mut cumulants: Vec<AntisymmetricTensor> = Vec::with_capacity(rdms.len());
    for (i, d) in rdms.iter().enumerate() {
        let k = i + 1;
        let mut delta = d.clone();
        for profile in enumerate_size_profiles(k)? {
            if profile.parts() == 1 {
                continue;
            }
            let count = partitions_with_profile_count(&profile)? as f64;
            let prod = profile_product(&profile.sizes_descending(), &cumulants)?;
            delta = delta.sub(&prod.scale(Complex64::new(count, 0.0)))?;
        }
        cumulants.push(delta);
    }
    Ok(cumulants)
}

/// Evaluates a Grassmann-mode expression with moment brackets of size `r`
/// read as `D_r` and cumulant brackets as `Δ_r`; products are wedges.
pub fn evaluate_grassmann(
    expr: &Expression,
    rdms: &[AntisymmetricTensor],
    cumulants: &[AntisymmetricTensor],
) -> Result<AntisymmetricTensor> {
    let mut acc: Option<AntisymmetricTensor> = None;
    for t in expr.terms() {
        let mut factors = Vec::with_capacity(t.factors.len());
        for b in &t.factors {
            let table = if b.is_cumulant() { cumulants } else { rdms };
            let x = table
                .get(b.len() - 1)
                .ok_or_else(|| invalid(format!("no rank-{} tensor supplied", b.len())))?;
            factors.push(x);
        }
        let c = t
            .coeff
            .to_f64()
            .ok_or_else(|| invalid("coefficient out of range"))?;
        let v = wedge_all(&factors)?.scale(Complex64::new(c, 0.0));
        acc = Some(match acc {
            None => v,
            Some(a) => a.add(&v)?,
        });
    }
    acc.ok_or_else(|| invalid("cannot evaluate the zero expression without a shape"))
}

/// Random product state: `a_electrons` in orbitals `1..=split`,
/// `b_electrons` in the rest, independent random amplitudes on each side.
pub fn product_state(
    n_orbitals: usize,
    split: usize,
    a_electrons: usize,
    b_electrons: usize,
    seed: u64,
) -> Result<FockVector> {
    if split == 0 || split >= n_orbitals {
        return Err(crate::Error::InvalidSplit(format!(
            "split must satisfy 1 <= split < {n_orbitals}, got {split}"
        )));
    }
    let a = FockVector::random(split, a_electrons, seed)?;
    let b = FockVector::random(
        n_orbitals - split,
        b_electrons,
        seed.wrapping_add(0x9e37_79b9),
    )?;
    FockVector::product(&a, &b)
}

/// Outcome of one fermionic check.
#[derive(Debug, Clone, PartialEq)]
pub struct FermiCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl FermiCheck {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: threshold,
            pass: value >= threshold,
        }
    }
}

pub const DETERMINANT_TOL: f64 = 1e-12;
pub const ADDITIVITY_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
/// A product state must show A×B blocks in `D_2` at least this large.
pub const CROSS_BLOCK_FLOOR: f64 = 1e-3;

/// `max |Δ_2|` (and `|Δ_3|` when `N ≥ 3`) for a determinant.
pub fn check_determinant(state: &FockVector) -> Result<Vec<FermiCheck>> {
    let n = state
        .particle_number()
        .ok_or_else(|| invalid("determinant check needs a number-definite state"))?;
    let top = n.min(3).min(MAX_RANK);
    check_bound("determinant electrons", n, 2, MAX_ORBITALS)?;
    let cumulants = rdm_cumulants(state, top)?;
    Ok((2..=top)
        .map(|k| {
            FermiCheck::below(
                format!("max|Delta_{k}|"),
                cumulants[k - 1].max_abs(),
                DETERMINANT_TOL,
            )
        })
        .collect())
}

/// For a state that factorizes over orbitals `1..=split` and the rest:
/// `Δ_2` entries touching both sides vanish while `D_2` cross blocks do not.
pub fn check_additivity(state: &FockVector, split: usize) -> Result<Vec<FermiCheck>> {
    let m = state.n_orbitals();
    if split == 0 || split >= m {
        return Err(crate::Error::InvalidSplit(format!(
            "split must satisfy 1 <= split < {m}, got {split}"
        )));
    }
    let rdms = compute_rdms(state, 2)?;
    let cumulants = cumulants_from_rdms(&rdms)?;
    let mixed = |i: &[usize], j: &[usize]| {
        let all: BTreeSet<usize> = i.iter().chain(j).copied().collect();
        all.iter().any(|&x| x <= split) && all.iter().any(|&x| x > split)
    };
    Ok(vec![
        FermiCheck::below(
            "max|Delta_2| on A x B entries",
            cumulants[1].max_abs_where(mixed),
            ADDITIVITY_TOL,
        ),
        FermiCheck::above(
            "max|D_2| on A x B entries",
            rdms[1].max_abs_where(mixed),
            CROSS_BLOCK_FLOOR,
        ),
    ])
}

/// Rebuilds `D_k` from the extracted cumulants through the Grassmann-mode
/// moment expansion, and re-extracts `Δ_k` through the Grassmann-mode
/// cumulant expansion.
pub fn check_reconstruction(state: &FockVector, max_p: usize) -> Result<Vec<FermiCheck>> {
    use crate::ordering::OrderingMapKind::Grassmann;
    use crate::transforms::{cumulants_from_moments_recursive, moments_from_cumulants};
    let rdms = compute_rdms(state, max_p)?;
    let cumulants = cumulants_from_rdms(&rdms)?;
    let mut out = Vec::new();
    for k in 2..=max_p {
        let m = evaluate_grassmann(&moments_from_cumulants(k, Grassmann)?, &rdms, &cumulants)?;
        out.push(FermiCheck::below(
            format!("max|D_{k} - rebuilt|"),
            m.sub(&rdms[k - 1])?.max_abs(),
            RECONSTRUCTION_TOL,
        ));
        let c = evaluate_grassmann(
            &cumulants_from_moments_recursive(k, Grassmann)?,
            &rdms,
            &cumulants,
        )?;
        out.push(FermiCheck::below(
            format!("max|Delta_{k} - re-extracted|"),
            c.sub(&cumulants[k - 1])?.max_abs(),
            RECONSTRUCTION_TOL,
        ));
    }
    Ok(out)
}

/// `trace D_p = C(N, p)` for `p = 1..=max_p`.
pub fn check_trace(state: &FockVector, max_p: usize) -> Result<Vec<FermiCheck>> {
    let n = state
        .particle_number()
        .ok_or_else(|| invalid("trace check needs a number-definite state"))?;
    let rdms = compute_rdms(state, max_p)?;
    Ok(rdms
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let p = i + 1;
            let want = binomial(n, p) as f64;
            FermiCheck::below(
                format!("|trace D_{p} - C({n},{p})|"),
                (d.trace() - Complex64::new(want, 0.0)).norm(),
                TRACE_TOL,
            )
        })
        .collect())
}
