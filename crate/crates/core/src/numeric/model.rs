use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance on the total probability of a model.
pub const WEIGHT_SUM_TOL: f64 = 1e-14;

/// One point of the sample space: its probability and one matrix per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub weight: f64,
    pub ops: BTreeMap<usize, CMatrix>,
}

/// A finite probability space carrying a `d × d` complex matrix for every
/// atom in every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel {
    dim: usize,
    samples: Vec<Sample>,
}

impl OperatorModel {
    pub fn new(dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("model dimension must be positive"));
        }
        let Some(first) = samples.first() else {
            return Err(invalid("model has no samples"));
        };
        let atoms: BTreeSet<usize> = first.ops.keys().copied().collect();
        if atoms.contains(&0) {
            return Err(invalid("atom indices start at 1"));
        }
        let mut total = 0.0;
        for (k, s) in samples.iter().enumerate() {
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(invalid(format!(
                    "sample {k} has non-positive weight {}",
                    s.weight
                )));
            }
            total += s.weight;
            if s.ops.keys().copied().collect::<BTreeSet<_>>() != atoms {
                return Err(invalid(format!("sample {k} assigns a different atom set")));
            }
            for (a, m) in &s.ops {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(invalid(format!(
                        "sample {k}, atom {a}: expected {dim}x{dim}, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn atoms(&self) -> BTreeSet<usize> {
        self.samples[0].ops.keys().copied().collect()
    }

    pub fn has_atom(&self, a: usize) -> bool {
        self.samples[0].ops.contains_key(&a)
    }

    /// `Σ_k w_k Ω_{a_1}^{(k)} ⋯ Ω_{a_m}^{(k)}` in the given order; atoms may
    /// repeat.
    pub fn raw_moment(&self, atoms: &[usize]) -> Result<CMatrix> {
        for &a in atoms {
            if !self.has_atom(a) {
                return Err(invalid(format!("model has no assignment for atom {a}")));
            }
        }
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for s in &self.samples {
            let mut prod = CMatrix::identity(self.dim, self.dim);
            for a in atoms {
                prod = &prod * &s.ops[a];
            }
            acc += prod * Complex64::new(s.weight, 0.0);
        }
        Ok(acc)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: JsonModel =
            serde_json::from_str(text).map_err(|e| invalid(format!("model JSON: {e}")))?;
        let d = raw.dim;
        let mut samples = Vec::with_capacity(raw.samples.len());
        for (k, s) in raw.samples.into_iter().enumerate() {
            let mut ops = BTreeMap::new();
            for (key, entries) in s.ops {
                let atom: usize = key.parse().map_err(|_| {
                    invalid(format!("sample {k}: atom key {key:?} is not an index"))
                })?;
                if entries.len() != d * d {
                    return Err(invalid(format!(
                        "sample {k}, atom {atom}: expected {} entries, got {}",
                        d * d,
                        entries.len()
                    )));
                }
                let m = CMatrix::from_row_iterator(
                    d,
                    d,
                    entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
                );
                ops.insert(atom, m);
            }
            samples.push(Sample { weight: s.w, ops });
        }
        Self::new(d, samples)
    }

    pub fn to_json_string(&self) -> String {
        let samples = self
            .samples
            .iter()
            .map(|s| JsonSample {
                w: s.weight,
                ops: s
                    .ops
                    .iter()
                    .map(|(a, m)| {
                        let entries = (0..self.dim)
                            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
                            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                            .collect();
                        (a.to_string(), entries)
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&JsonModel {
            dim: self.dim,
            samples,
        })
        .expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())
            .map_err(|e| invalid(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize, Deserialize)]
struct JsonModel {
    dim: usize,
    samples: Vec<JsonSample>,
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    w: f64,
    ops: BTreeMap<String, Vec<[f64; 2]>>,
}

fn check_shape(dim: usize, n_samples: usize) -> Result<()> {
    if dim == 0 || n_samples == 0 {
        return Err(invalid("dimension and sample count must be positive"));
    }
    Ok(())
}

fn uniform_entry(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

fn build_with(
    dim: usize,
    n_atoms: usize,
    n_samples: usize,
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> CMatrix,
) -> Result<OperatorModel> {
    check_shape(dim, n_samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / n_samples as f64;
    let samples = (0..n_samples)
        .map(|_| Sample {
            weight: w,
            ops: (1..=n_atoms).map(|a| (a, draw(&mut rng))).collect(),
        })
        .collect();
    OperatorModel::new(dim, samples)
}

/// Uniform weights; every matrix entry has real and imaginary parts drawn
/// uniformly from `[-1, 1]`. Deterministic in `seed`.
pub fn build_random_model(
    dim: usize,
    n_atoms: usize,
    n_samples: usize,
    seed: u64,
) -> Result<OperatorModel> {
    build_with(dim, n_atoms, n_samples, seed, |rng| {
        CMatrix::from_fn(dim, dim, |_, _| uniform_entry(rng))
    })
}

/// Like [`build_random_model`] but with diagonal matrices, so all
/// assignments commute (the c-number limit).
pub fn build_commuting_model(
    dim: usize,
    n_atoms: usize,
    n_samples: usize,
    seed: u64,
) -> Result<OperatorModel> {
    build_with(dim, n_atoms, n_samples, seed, |rng| {
        let diag: Vec<Complex64> = (0..dim).map(|_| uniform_entry(rng)).collect();
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    })
}

/// Pauli matrices `σx, σy, σz` as atoms 1, 2, 3 on a single sample; they
/// anticommute pairwise.
pub fn anticommuting_model() -> OperatorModel {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let sy = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let sz = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    OperatorModel::new(
        2,
        vec![Sample {
            weight: 1.0,
            ops: BTreeMap::from([(1, sx), (2, sy), (3, sz)]),
        }],
    )
    .expect("Pauli model is valid")
}

/// Two independent models glued as a product measure: atoms in `group_a`
/// take their matrices from `a`, all others from `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitModel {
    a: OperatorModel,
    b: OperatorModel,
    n_atoms: usize,
    group_a: BTreeSet<usize>,
    correlated: bool,
}

impl SplitModel {
    /// Group A is the prefix `1..=split`.
    pub fn new(a: OperatorModel, b: OperatorModel, n_atoms: usize, split: usize) -> Result<Self> {
        if split == 0 || split >= n_atoms {
            return Err(Error::InvalidSplit(format!(
                "split must satisfy 1 <= split < {n_atoms}, got {split}"
            )));
        }
        Self::with_group(a, b, n_atoms, (1..=split).collect())
    }

    /// Arbitrary nonempty proper subset of `1..=n_atoms` as group A.
    pub fn with_group(
        a: OperatorModel,
        b: OperatorModel,
        n_atoms: usize,
        group_a: BTreeSet<usize>,
    ) -> Result<Self> {
        if group_a.is_empty() || group_a.len() >= n_atoms {
            return Err(Error::InvalidSplit(
                "group A must be a nonempty proper subset of the atoms".into(),
            ));
        }
        if let Some(bad) = group_a.iter().find(|&&x| x == 0 || x > n_atoms) {
            return Err(Error::InvalidSplit(format!(
                "atom {bad} is outside 1..={n_atoms}"
            )));
        }
        if a.dim() != b.dim() {
            return Err(invalid("group models differ in dimension"));
        }
        for atom in 1..=n_atoms {
            let m = if group_a.contains(&atom) { &a } else { &b };
            if !m.has_atom(atom) {
                return Err(invalid(format!(
                    "group model has no assignment for atom {atom}"
                )));
            }
        }
        Ok(Self {
            a,
            b,
            n_atoms,
            group_a,
            correlated: false,
        })
    }

    /// Control variant: sample `k` of A is paired with sample `k` of B, so
    /// the two groups are statistically dependent.
    pub fn correlated(mut self) -> Result<Self> {
        if self.a.samples().len() != self.b.samples().len() {
            return Err(invalid("correlated pairing needs equal sample counts"));
        }
        self.correlated = true;
        Ok(self)
    }

    pub fn is_correlated(&self) -> bool {
        self.correlated
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn group_a(&self) -> &BTreeSet<usize> {
        &self.group_a
    }

    pub fn group_b(&self) -> BTreeSet<usize> {
        (1..=self.n_atoms)
            .filter(|x| !self.group_a.contains(x))
            .collect()
    }

    pub fn in_group_a(&self, atom: usize) -> bool {
        self.group_a.contains(&atom)
    }

    pub fn part_a(&self) -> &OperatorModel {
        &self.a
    }

    pub fn part_b(&self) -> &OperatorModel {
        &self.b
    }

    /// Group A occupies a contiguous run at either end of `1..=n`.
    pub fn is_contiguous_within(&self, n: usize) -> bool {
        let a: Vec<usize> = self.group_a.iter().copied().filter(|&x| x <= n).collect();
        let prefix = a.iter().copied().eq(1..=a.len());
        let suffix = a.iter().copied().eq(n + 1 - a.len()..=n);
        prefix || suffix
    }

    /// The joint model on atoms `1..=n_atoms`.
    pub fn joint(&self) -> Result<OperatorModel> {
        let pick = |sa: &Sample, sb: &Sample| -> BTreeMap<usize, CMatrix> {
            (1..=self.n_atoms)
                .map(|atom| {
                    let src = if self.in_group_a(atom) { sa } else { sb };
                    (atom, src.ops[&atom].clone())
                })
                .collect()
        };
        let samples = if self.correlated {
            self.a
                .samples()
                .iter()
                .zip(self.b.samples())
                .map(|(sa, sb)| Sample {
                    weight: sa.weight,
                    ops: pick(sa, sb),
                })
                .collect()
        } else {
            let mut out = Vec::new();
            for sa in self.a.samples() {
                for sb in self.b.samples() {
                    out.push(Sample {
                        weight: sa.weight * sb.weight,
                        ops: pick(sa, sb),
                    });
                }
            }
            out
        };
        OperatorModel::new(self.a.dim(), samples)
    }
}

/// Random product-measure model on atoms `1..=n_atoms` with group A the
/// prefix `1..=split`; the two groups use independent seeds.
pub fn build_split_model(
    dim: usize,
    n_atoms: usize,
    split: usize,
    n_samples: usize,
    seeds: (u64, u64),
) -> Result<SplitModel> {
    let a = build_random_model(dim, n_atoms, n_samples, seeds.0)?;
    let b = build_random_model(dim, n_atoms, n_samples, seeds.1)?;
    SplitModel::new(a, b, n_atoms, split)
}
