//! The ordering pitfall: summing operators at different times before time
//! ordering is not the same as time ordering the expanded sum.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::expr::Coeff;

type QMatrix = DMatrix<Coeff>;

/// Smallest truncation degree accepted; `y²∂x²` needs `x²` in the basis and
/// the demo wants at least one nontrivial fourth-order check.
pub const MIN_DEGREE_CAP: usize = 4;

/// Gauss–Legendre rule on `[-1, 1]`, exact for polynomials of degree ≤ 5.
const GAUSS_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AppendixAOptions {
    /// Replace `C` and `D` by the identity.
    pub commuting: bool,
    /// Also run the continuous case on `[0, t]`.
    pub continuous_t: Option<Coeff>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousReport {
    pub t: Coeff,
    /// Coefficients of `C²`, `CD`, `DC`, `D²` in the ordered double integral.
    pub ordered_coefficients: [Coeff; 4],
    /// Same for the square of the integrated operator.
    pub naive_coefficients: [Coeff; 4],
    /// Exact ordered integral minus `t⁴/4 C² + t³/3 (2CD + DC) + t² D²`.
    pub ordered_residual: Coeff,
    /// `(t²/2 C + tD)²` minus `t⁴/4 C² + t³/2 (CD + DC) + t² D²`.
    pub naive_residual: Coeff,
    /// Gauss–Legendre ordered integral minus the exact one.
    pub quadrature_deviation: f64,
    /// `‖naive − ordered‖`, zero only if `C` and `D` commute on the basis.
    pub naive_minus_ordered: Coeff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixAReport {
    pub degree_cap: usize,
    pub basis_dim: usize,
    pub t1: Coeff,
    pub t2: Coeff,
    pub commuting: bool,
    /// `‖DC − CD‖` on the basis.
    pub commutator_norm: Coeff,
    /// `‖S² − Σ_{i,j} {A(t_i)A(t_j)}_O‖`.
    pub discrepancy_norm: Coeff,
    /// Residual against `(t1 − t2)(DC − CD)`.
    pub corrected_residual: Coeff,
    /// Residual against `(t1 + t2)(DC − CD)`.
    pub printed_residual: Coeff,
    pub continuous: Option<ContinuousReport>,
}

impl AppendixAReport {
    /// Every exact residual vanishes and the quadrature agrees to `1e-12`.
    pub fn pass(&self) -> bool {
        self.corrected_residual.is_zero()
            && self.continuous.as_ref().is_none_or(|c| {
                c.ordered_residual.is_zero()
                    && c.naive_residual.is_zero()
                    && c.quadrature_deviation <= 1e-12
            })
    }
}

fn q(n: i64) -> Coeff {
    Coeff::from_integer(BigInt::from(n))
}

/// Position of `x^a y^b` in the graded basis `a + b ≤ cap`.
fn basis(cap: usize) -> Vec<(usize, usize)> {
    (0..=cap)
        .flat_map(|deg| (0..=deg).rev().map(move |a| (a, deg - a)))
        .collect()
}

fn operator(cap: usize, act: impl Fn(usize, usize) -> Option<(i64, usize, usize)>) -> QMatrix {
    let b = basis(cap);
    let index = |a: usize, bb: usize| b.iter().position(|&m| m == (a, bb));
    let mut m = QMatrix::from_element(b.len(), b.len(), Coeff::zero());
    for (col, &(a, bb)) in b.iter().enumerate() {
        if let Some((c, a2, b2)) = act(a, bb) {
            let row = index(a2, b2).expect("image stays in the basis");
            m[(row, col)] = q(c);
        }
    }
    m
}

/// `C = y∂x` and `D = ∂y` on the monomials of total degree ≤ `cap`. `C`
/// keeps the degree and `D` lowers it, so both act exactly.
fn operators(cap: usize) -> (QMatrix, QMatrix) {
    let c = operator(cap, |a, b| (a > 0).then(|| (a as i64, a - 1, b + 1)));
    let d = operator(cap, |a, b| (b > 0).then(|| (b as i64, a, b - 1)));
    (c, d)
}

fn scale(m: &QMatrix, k: &Coeff) -> QMatrix {
    m.map(|x| x * k)
}

fn norm(m: &QMatrix) -> Coeff {
    m.iter()
        .map(|x| x.abs())
        .fold(Coeff::zero(), |a, b| a.max(b))
}

fn combo(terms: &[(&Coeff, &QMatrix)], n: usize) -> QMatrix {
    let mut acc = QMatrix::from_element(n, n, Coeff::zero());
    for (k, m) in terms {
        acc += scale(m, k);
    }
    acc
}

/// Runs both parts of the ordering demonstration.
///
/// Discrete: with `A(t) = tC + D` and `t1 > t2`, compares the square of the
/// summed operator `S = A(t1) + A(t2)` against the time-ordered double sum
/// `Σ_{i,j} {A(t_i) A(t_j)}_O`, equal times averaged over both orders.
///
/// Continuous: compares `2∫_0^t du1 ∫_0^{u1} du2 A(u1) A(u2)` (integrated
/// exactly and by quadrature) against `(∫_0^t A)²`.
pub fn appendix_a_demo(
    degree_cap: usize,
    t1: &Coeff,
    t2: &Coeff,
    options: &AppendixAOptions,
) -> Result<AppendixAReport> {
    if degree_cap < MIN_DEGREE_CAP {
        return Err(invalid(format!(
            "degree cap {degree_cap} is below {MIN_DEGREE_CAP}; y²∂x² would act trivially"
        )));
    }
    if !(t1 > t2 && !t2.is_negative()) {
        return Err(invalid(format!(
            "need t1 > t2 >= 0, got t1 = {t1}, t2 = {t2}"
        )));
    }
    let (c, d) = if options.commuting {
        let n = basis(degree_cap).len();
        let id = QMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { Coeff::one() } else { Coeff::zero() },
        );
        (id.clone(), id)
    } else {
        operators(degree_cap)
    };
    let n = c.nrows();
    let one = Coeff::one();
    let a_at = |t: &Coeff| combo(&[(t, &c), (&one, &d)], n);
    let a1 = a_at(t1);
    let a2 = a_at(t2);
    // time ordering puts the larger time on the left
    let ordered_pair = |x: &QMatrix, y: &QMatrix, tx: &Coeff, ty: &Coeff| -> QMatrix {
        if tx > ty {
            x * y
        } else if tx < ty {
            y * x
        } else {
            scale(&(x * y + y * x), &Coeff::new(1.into(), 2.into()))
        }
    };
    let times = [(t1, &a1), (t2, &a2)];
    let mut ordered = QMatrix::from_element(n, n, Coeff::zero());
    for (ti, ai) in &times {
        for (tj, aj) in &times {
            ordered += ordered_pair(ai, aj, ti, tj);
        }
    }
    let s = &a1 + &a2;
    let summed_first = &s * &s;
    let discrepancy = &summed_first - &ordered;
    let commutator = &(&d * &c) - &(&c * &d);
    let corrected = scale(&commutator, &(t1 - t2));
    let printed = scale(&commutator, &(t1 + t2));

    let continuous = match &options.continuous_t {
        None => None,
        Some(t) => Some(continuous_case(&c, &d, t)?),
    };
    Ok(AppendixAReport {
        degree_cap,
        basis_dim: n,
        t1: t1.clone(),
        t2: t2.clone(),
        commuting: options.commuting,
        commutator_norm: norm(&commutator),
        discrepancy_norm: norm(&discrepancy),
        corrected_residual: norm(&(&discrepancy - &corrected)),
        printed_residual: norm(&(&discrepancy - &printed)),
        continuous,
    })
}

/// `∫_0^t du1 ∫_0^{u1} du2 u1^a u2^b = t^{a+b+2} / ((b+1)(a+b+2))`.
fn simplex_integral(t: &Coeff, a: u32, b: u32) -> Coeff {
    let e = a + b + 2;
    let denom = q(((b + 1) * e) as i64);
    pow(t, e) / denom
}

fn pow(t: &Coeff, e: u32) -> Coeff {
    (0..e).fold(Coeff::one(), |acc, _| acc * t)
}

fn continuous_case(c: &QMatrix, d: &QMatrix, t: &Coeff) -> Result<ContinuousReport> {
    if !t.is_positive() {
        return Err(invalid(format!("continuous case needs t > 0, got {t}")));
    }
    let n = c.nrows();
    let cc = c * c;
    let cd = c * d;
    let dc = d * c;
    let dd = d * d;
    let two = q(2);
    // (u1 C + D)(u2 C + D) = u1u2 C² + u1 CD + u2 DC + D²
    let ordered_coefficients = [
        &two * simplex_integral(t, 1, 1),
        &two * simplex_integral(t, 1, 0),
        &two * simplex_integral(t, 0, 1),
        &two * simplex_integral(t, 0, 0),
    ];
    let mats = [&cc, &cd, &dc, &dd];
    let assemble = |k: &[Coeff; 4]| {
        combo(
            &[
                (&k[0], mats[0]),
                (&k[1], mats[1]),
                (&k[2], mats[2]),
                (&k[3], mats[3]),
            ],
            n,
        )
    };
    let ordered = assemble(&ordered_coefficients);

    let t2 = pow(t, 2);
    let t3 = pow(t, 3);
    let t4 = pow(t, 4);
    let r = |a: i64, b: i64| Coeff::new(a.into(), b.into());
    let printed_ordered = assemble(&[&t4 * r(1, 4), &t3 * r(2, 3), &t3 * r(1, 3), t2.clone()]);

    let half = r(1, 2);
    let integrated = combo(&[(&(&t2 * &half), c), (t, d)], n);
    let naive = &integrated * &integrated;
    let naive_coefficients = [&t4 * r(1, 4), &t3 * &half, &t3 * &half, t2.clone()];
    let printed_naive = assemble(&naive_coefficients);

    let tf = t.to_f64().unwrap_or(f64::NAN);
    let mut quad = [0.0f64; 4];
    for (x1, w1) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        let u1 = tf * (x1 + 1.0) / 2.0;
        for (x2, w2) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let u2 = u1 * (x2 + 1.0) / 2.0;
            let w = 2.0 * w1 * w2 * (tf / 2.0) * (u1 / 2.0);
            quad[0] += w * u1 * u2;
            quad[1] += w * u1;
            quad[2] += w * u2;
            quad[3] += w;
        }
    }
    let quadrature_deviation = quad
        .iter()
        .zip(&ordered_coefficients)
        .map(|(qv, exact)| (qv - exact.to_f64().unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);

    Ok(ContinuousReport {
        t: t.clone(),
        ordered_residual: norm(&(&ordered - &printed_ordered)),
        naive_residual: norm(&(&naive - &printed_naive)),
        naive_minus_ordered: norm(&(&naive - &ordered)),
        ordered_coefficients,
        naive_coefficients,
        quadrature_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Coeff {
        Coeff::new(a.into(), b.into())
    }

    #[test]
    fn operators_act_on_monomials() {
        let (c, d) = operators(4);
        let b = basis(4);
        let at = |a, bb| b.iter().position(|&m| m == (a, bb)).unwrap();
        // y∂x x²y = 2 x y²
        assert_eq!(c[(at(1, 2), at(2, 1))], q(2));
        // ∂y x y³ = 3 x y²
        assert_eq!(d[(at(1, 2), at(1, 3))], q(3));
        assert_eq!(b.len(), 15);
    }

    #[test]
    fn discrete_printed_form_at_t2_zero() {
        let rep = appendix_a_demo(6, &q(1), &q(0), &AppendixAOptions::default()).unwrap();
        assert!(rep.corrected_residual.is_zero());
        assert!(rep.printed_residual.is_zero());
        assert!(rep.commutator_norm.is_positive());
        assert!(rep.pass());
    }

    #[test]
    fn discrete_general_times() {
        let rep = appendix_a_demo(5, &r(7, 3), &r(1, 2), &AppendixAOptions::default()).unwrap();
        assert!(rep.corrected_residual.is_zero());
        assert!(rep.printed_residual.is_positive());
        assert!(rep.discrepancy_norm.is_positive());
    }

    #[test]
    fn commuting_override() {
        let opts = AppendixAOptions {
            commuting: true,
            continuous_t: Some(q(1)),
        };
        let rep = appendix_a_demo(4, &q(2), &q(1), &opts).unwrap();
        assert!(rep.discrepancy_norm.is_zero());
        assert!(rep.continuous.unwrap().naive_minus_ordered.is_zero());
    }

    #[test]
    fn continuous_coefficients() {
        let opts = AppendixAOptions {
            commuting: false,
            continuous_t: Some(q(1)),
        };
        let rep = appendix_a_demo(4, &q(1), &q(0), &opts).unwrap();
        let c = rep.continuous.clone().unwrap();
        assert_eq!(c.ordered_coefficients, [r(1, 4), r(2, 3), r(1, 3), q(1)]);
        assert_eq!(c.naive_coefficients, [r(1, 4), r(1, 2), r(1, 2), q(1)]);
        assert!(c.ordered_residual.is_zero());
        assert!(c.naive_residual.is_zero());
        assert!(c.naive_minus_ordered.is_positive());
        assert!(c.quadrature_deviation < 1e-14);
        assert!(rep.pass());
    }

    #[test]
    fn bad_inputs() {
        let o = AppendixAOptions::default();
        assert!(appendix_a_demo(3, &q(1), &q(0), &o).is_err());
        assert!(appendix_a_demo(4, &q(0), &q(1), &o).is_err());
        assert!(appendix_a_demo(4, &q(1), &q(-1), &o).is_err());
    }
}
