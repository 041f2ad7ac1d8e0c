use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_bound, invalid, Error, Result};

pub const MAX_ORBITALS: usize = 12;
pub const NORM_TOL: f64 = 1e-12;

/// A state in the fermionic Fock space over `n_orbitals` spin-orbitals,
/// stored densely. Orbital `k` is bit `k - 1` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    n_orbitals: usize,
    amps: Vec<Complex64>,
}

/// Renders a basis index as a bitstring, orbital 1 leftmost.
pub fn bitstring(n_orbitals: usize, bits: usize) -> String {
    (0..n_orbitals)
        .map(|k| if bits >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a bitstring with orbital 1 leftmost.
pub fn parse_bitstring(s: &str) -> Result<(usize, usize)> {
    let m = s.len();
    check_bound("orbital count", m, 1, MAX_ORBITALS)?;
    let mut bits = 0;
    for (k, ch) in s.chars().enumerate() {
        match ch {
            '1' => bits |= 1 << k,
            '0' => {}
            _ => {
                return Err(invalid(format!(
                    "bitstring {s:?} has a character other than 0/1"
                )))
            }
        }
    }
    Ok((m, bits))
}

impl FockVector {
    /// Checks size and normalization.
    pub fn new(n_orbitals: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_bound("orbital count", n_orbitals, 1, MAX_ORBITALS)?;
        if amps.len() != 1 << n_orbitals {
            return Err(invalid(format!(
                "expected {} amplitudes for {n_orbitals} orbitals, got {}",
                1usize << n_orbitals,
                amps.len()
            )));
        }
        let v = Self { n_orbitals, amps };
        let norm = v.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state has squared norm {norm}, not 1")));
        }
        Ok(v)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(n_orbitals: usize, amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        Self::new(n_orbitals, amps.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis_state(n_orbitals: usize, bits: usize) -> Result<Self> {
        check_bound("orbital count", n_orbitals, 1, MAX_ORBITALS)?;
        if bits >= 1 << n_orbitals {
            return Err(invalid(format!(
                "basis index {bits} needs more than {n_orbitals} orbitals"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_orbitals];
        amps[bits] = Complex64::new(1.0, 0.0);
        Self::new(n_orbitals, amps)
    }

    /// Slater determinant `a†_{o_1} ⋯ a†_{o_N} |vac⟩` up to sign; with the
    /// orbitals occupied, its amplitude is `+1`.
    pub fn determinant(n_orbitals: usize, occupied: &[usize]) -> Result<Self> {
        let mut bits = 0usize;
        for &o in occupied {
            if o == 0 || o > n_orbitals {
                return Err(invalid(format!("orbital {o} outside 1..={n_orbitals}")));
            }
            if bits >> (o - 1) & 1 == 1 {
                return Err(invalid(format!("orbital {o} occupied twice")));
            }
            bits |= 1 << (o - 1);
        }
        Self::basis_state(n_orbitals, bits)
    }

    /// Uniformly random complex amplitudes over all basis states with
    /// `n_electrons` particles, normalized. Deterministic in `seed`.
    pub fn random(n_orbitals: usize, n_electrons: usize, seed: u64) -> Result<Self> {
        check_bound("orbital count", n_orbitals, 1, MAX_ORBITALS)?;
        check_bound("electron count", n_electrons, 0, n_orbitals)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1usize << n_orbitals)
            .map(|bits| {
                if bits.count_ones() as usize == n_electrons {
                    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::normalized(n_orbitals, amps)
    }

    /// `|ψ_A⟩ ⊗ |ψ_B⟩` with A on orbitals `1..=a.n_orbitals()` and B on the
    /// remaining ones; bitstrings concatenate.
    pub fn product(a: &FockVector, b: &FockVector) -> Result<Self> {
        let ma = a.n_orbitals;
        let m = ma + b.n_orbitals;
        check_bound("orbital count", m, 1, MAX_ORBITALS)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
        for (ia, za) in a.amps.iter().enumerate() {
            for (ib, zb) in b.amps.iter().enumerate() {
                amps[ia | ib << ma] = za * zb;
            }
        }
        Self::new(m, amps)
    }

    /// Reads `bitstring re im` lines; `#` starts a comment. All bitstrings
    /// must have the same length and appear at most once.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Input {
            file: file.to_string(),
            line,
            message,
        };
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [bits, re, im] = fields[..] else {
                return Err(err(
                    line,
                    format!("expected `bitstring re im`, got {content:?}"),
                ));
            };
            let (m, b) = parse_bitstring(bits).map_err(|e| err(line, e.to_string()))?;
            if *width.get_or_insert(m) != m {
                return Err(err(
                    line,
                    format!("bitstring length {m} differs from earlier lines"),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(line, format!("{s:?} is not a finite number")))
            };
            let z = Complex64::new(num(re)?, num(im)?);
            if entries.iter().any(|(_, eb, _)| *eb == b) {
                return Err(err(line, format!("bitstring {bits} listed twice")));
            }
            entries.push((line, b, z));
        }
        let Some(m) = width else {
            return Err(err(0, "no amplitudes".into()));
        };
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
        for (_, b, z) in &entries {
            amps[*b] = *z;
        }
        let last = entries.last().map_or(0, |e| e.0);
        Self::new(m, amps).map_err(|e| err(last, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, bits: usize) -> Complex64 {
        self.amps[bits]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// The common particle number of all basis states with nonzero
    /// amplitude, if there is one.
    pub fn particle_number(&self) -> Option<usize> {
        let mut n = None;
        for (bits, z) in self.amps.iter().enumerate() {
            if z.norm_sqr() > 0.0 {
                let k = bits.count_ones() as usize;
                if *n.get_or_insert(k) != k {
                    return None;
                }
            }
        }
        n
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_orbital(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n_orbitals {
            return Err(invalid(format!(
                "orbital {j} outside 1..={}",
                self.n_orbitals
            )));
        }
        Ok(())
    }

    /// `a_j |self⟩`, unnormalized. The sign is the parity of the occupied
    /// orbitals below `j`.
    pub fn apply_annihilation(&self, j: usize) -> Result<FockVector> {
        self.check_orbital(j)?;
        Ok(self.apply(j, true))
    }

    /// `a†_i |self⟩`, unnormalized.
    pub fn apply_creation(&self, i: usize) -> Result<FockVector> {
        self.check_orbital(i)?;
        Ok(self.apply(i, false))
    }

    pub(crate) fn apply(&self, j: usize, annihilate: bool) -> FockVector {
        let bit = 1usize << (j - 1);
        let below = bit - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (bits, z) in self.amps.iter().enumerate() {
            let occupied = bits & bit != 0;
            if occupied != annihilate {
                continue;
            }
            let sign = if (bits & below).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            out[bits ^ bit] += z * sign;
        }
        FockVector {
            n_orbitals: self.n_orbitals,
            amps: out,
        }
    }
}
