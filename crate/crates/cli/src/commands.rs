use std::fmt::Write;

use opcumulant::expr::{parse, rational, render, Bracket, BracketKind, Expression, Format};
use opcumulant::fermi::{self, AntisymmetricTensor, FermiCheck, FockVector};
use opcumulant::numeric::{
    appendix_a_demo, build_commuting_model, build_random_model, evaluate, max_norm,
    verify_cluster_property, verify_identity, verify_unconnected_factorization, AppendixAOptions,
    OperatorModel, SplitModel, VerificationReport,
};
use opcumulant::transforms::{
    cumulants_from_moments, cumulants_from_moments_recursive, cumulants_from_moments_roerdnik,
    moments_from_cumulants,
};
use opcumulant::{Error, OrderingMapKind, Result};

use crate::{
    AppendixAArgs, Direction, ExpandArgs, OutputFormat, RdmAction, RdmArgs, RdmCase, VerifyArgs,
    VerifyKind,
};

pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn expand(a: &ExpandArgs) -> Result<Outcome> {
    let expr = match a.direction {
        Direction::Moments => moments_from_cumulants(a.n, a.map)?,
        Direction::Cumulants => cumulants_from_moments(a.n, a.map, a.formula)?,
    };
    let format = match a.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Json => Format::Json,
    };
    Ok(Outcome {
        text: format!("{}\n", render(&expr, format)),
        pass: true,
    })
}

fn full(n: usize, kind: BracketKind) -> Result<Expression> {
    Ok(Expression::bracket(
        Bracket::new(kind, (1..=n).collect())?.normalized(),
    ))
}

fn operator_model(a: &VerifyArgs, commuting: bool) -> Result<OperatorModel> {
    match &a.model {
        Some(path) => OperatorModel::load(path),
        None if commuting => build_commuting_model(a.dim, a.n, a.samples, a.seed),
        None => build_random_model(a.dim, a.n, a.samples, a.seed),
    }
}

fn split_model(a: &VerifyArgs, n_atoms: usize) -> Result<SplitModel> {
    if a.model.is_some() {
        return Err(Error::Validation(
            "--model applies to identity and roerdnik-equivalence only".into(),
        ));
    }
    let ma = build_random_model(a.dim, n_atoms, a.samples, a.seed)?;
    let mb = build_random_model(a.dim, n_atoms, a.samples, a.seed.wrapping_add(1))?;
    let model = match &a.group_a {
        Some(g) => SplitModel::with_group(ma, mb, n_atoms, g.iter().copied().collect())?,
        None => SplitModel::new(ma, mb, n_atoms, a.split.unwrap_or((n_atoms / 2).max(1)))?,
    };
    if a.correlated {
        model.correlated()
    } else {
        Ok(model)
    }
}

fn header(out: &mut String, what: &str, a: &VerifyArgs, extra: &str) {
    let model = match &a.model {
        Some(p) => format!("model={}", p.display()),
        None => format!("dim={} samples={}", a.dim, a.samples),
    };
    let _ = writeln!(
        out,
        "verify {what}: n={} seed={} {model} tol={:e}{extra}",
        a.n, a.seed, a.tol
    );
}

fn report_lines(out: &mut String, label: &str, r: &VerificationReport, verbose: bool) {
    let _ = writeln!(
        out,
        "{label}: max_abs={:.3e} max_rel={:.3e} {}",
        r.max_abs_deviation,
        r.max_rel_deviation,
        verdict(r.pass)
    );
    if verbose {
        for d in &r.diagnostics {
            let _ = writeln!(
                out,
                "  {}: abs={:.3e} rel={:.3e}",
                d.label, d.abs_deviation, d.rel_deviation
            );
        }
    }
}

fn footer(out: &mut String, pass: bool, max_rel: f64, seed: u64) {
    let _ = writeln!(
        out,
        "result: {} (max_rel={max_rel:.3e}, seed={seed})",
        verdict(pass)
    );
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let mut out = String::new();
    let (pass, max_rel) = match a.kind {
        VerifyKind::Identity => {
            header(
                &mut out,
                "identity",
                a,
                &format!(" map={} formula={}", a.map, a.formula.name()),
            );
            let pairs = match (&a.lhs, &a.rhs) {
                (Some(l), Some(r)) => vec![("custom", parse(l)?, parse(r)?)],
                _ => vec![
                    (
                        "moments",
                        moments_from_cumulants(a.n, a.map)?,
                        full(a.n, BracketKind::Moment)?,
                    ),
                    (
                        "cumulants",
                        cumulants_from_moments(a.n, a.map, a.formula)?,
                        full(a.n, BracketKind::Cumulant)?,
                    ),
                ],
            };
            let model = operator_model(a, a.map == OrderingMapKind::Classical)?;
            let mut pass = true;
            let mut worst: f64 = 0.0;
            for (label, lhs, rhs) in pairs {
                let r = verify_identity(&lhs, &rhs, &model, a.map, a.tol)?;
                report_lines(&mut out, label, &r, a.verbose);
                pass &= r.pass;
                worst = worst.max(r.max_rel_deviation);
            }
            (pass, worst)
        }
        VerifyKind::Cluster => {
            let model = split_model(a, a.n)?;
            let groups = format!(
                " map={} group_a={:?} correlated={}",
                a.map,
                model.group_a(),
                a.correlated
            );
            header(&mut out, "cluster", a, &groups);
            let r = verify_cluster_property(a.n, a.map, &model, a.tol)?;
            let _ = writeln!(out, "mixed cumulants checked: {}", r.diagnostics.len());
            report_lines(&mut out, "cluster", &r, a.verbose);
            (r.pass, r.max_rel_deviation)
        }
        VerifyKind::Factorization => {
            let model = split_model(a, a.atoms)?;
            let groups = format!(
                " atoms={} group_a={:?} correlated={}",
                a.atoms,
                model.group_a(),
                a.correlated
            );
            header(&mut out, "factorization", a, &groups);
            let r = verify_unconnected_factorization(a.n, &model, a.tol)?;
            let _ = writeln!(out, "(k, m) pairs checked: {}", r.diagnostics.len());
            report_lines(&mut out, "factorization", &r, a.verbose);
            (r.pass, r.max_rel_deviation)
        }
        VerifyKind::RoerdnikEquivalence => {
            header(&mut out, "roerdnik-equivalence", a, "");
            let model = operator_model(a, false)?;
            let r = evaluate(
                &cumulants_from_moments_roerdnik(a.n)?,
                &model,
                OrderingMapKind::Tto,
            )?;
            let k = evaluate(
                &cumulants_from_moments_recursive(a.n, OrderingMapKind::Pto)?,
                &model,
                OrderingMapKind::Pto,
            )?;
            let abs = max_norm(&(&r - &k));
            let scale = max_norm(&r).max(max_norm(&k));
            let rel = if scale > 0.0 { abs / scale } else { abs };
            let pass = rel <= a.tol;
            let _ = writeln!(
                out,
                "roerdnik (tto) vs recursive (pto): max_abs={abs:.3e} max_rel={rel:.3e} {}",
                verdict(pass)
            );
            (pass, rel)
        }
    };
    footer(&mut out, pass, max_rel, a.seed);
    Ok(Outcome { text: out, pass })
}

pub fn appendix_a(a: &AppendixAArgs) -> Result<Outcome> {
    let options = AppendixAOptions {
        commuting: a.commuting,
        continuous_t: a.continuous.then(|| a.t.clone()),
    };
    let r = appendix_a_demo(a.degree, &a.t1, &a.t2, &options)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "appendix-a: degree={} basis={} t1={} t2={} commuting={}",
        r.degree_cap, r.basis_dim, r.t1, r.t2, r.commuting
    );
    let _ = writeln!(out, "|DC - CD| = {}", r.commutator_norm);
    let _ = writeln!(
        out,
        "|S^2 - sum_ij {{A(ti) A(tj)}}| = {}",
        r.discrepancy_norm
    );
    let _ = writeln!(
        out,
        "evaluations equal: {}",
        r.discrepancy_norm == rational(0, 1)
    );
    let _ = writeln!(
        out,
        "residual vs (t1 + t2)(DC - CD): {}",
        r.printed_residual
    );
    let _ = writeln!(
        out,
        "residual vs (t1 - t2)(DC - CD): {}",
        r.corrected_residual
    );
    if let Some(c) = &r.continuous {
        let _ = writeln!(out, "continuous on [0, {}]:", c.t);
        let _ = writeln!(
            out,
            "  {:<8} {:>10} {:>10} {:>10} {:>10}",
            "", "C^2", "CD", "DC", "D^2"
        );
        for (label, row) in [
            ("ordered", &c.ordered_coefficients),
            ("naive", &c.naive_coefficients),
        ] {
            let _ = writeln!(
                out,
                "  {label:<8} {:>10} {:>10} {:>10} {:>10}",
                row[0].to_string(),
                row[1].to_string(),
                row[2].to_string(),
                row[3].to_string()
            );
        }
        let t3 = &c.t * &c.t * &c.t;
        let _ = writeln!(
            out,
            "  mixed term per t^3: ordered {} vs naive {}",
            &c.ordered_coefficients[2] / &t3,
            &c.naive_coefficients[2] / &t3
        );
        let _ = writeln!(
            out,
            "  residual vs printed ordered form: {}",
            c.ordered_residual
        );
        let _ = writeln!(
            out,
            "  residual vs printed naive form: {}",
            c.naive_residual
        );
        let _ = writeln!(
            out,
            "  quadrature deviation: {:.3e}",
            c.quadrature_deviation
        );
        let _ = writeln!(out, "  |naive - ordered| = {}", c.naive_minus_ordered);
    }
    let pass = r.pass();
    let _ = writeln!(out, "result: {}", verdict(pass));
    Ok(Outcome { text: out, pass })
}

fn default_electrons(a: &RdmArgs) -> usize {
    a.electrons.unwrap_or((a.orbitals / 2).max(1))
}

fn select_state(a: &RdmArgs) -> Result<(FockVector, String)> {
    if let Some(path) = &a.state {
        return Ok((FockVector::load(path)?, format!("file {}", path.display())));
    }
    if let Some(occ) = &a.occupied {
        let list: Vec<String> = occ.iter().map(ToString::to_string).collect();
        let s = FockVector::determinant(a.orbitals, occ)?;
        return Ok((s, format!("determinant {{{}}}", list.join(","))));
    }
    let n = default_electrons(a);
    Ok((
        FockVector::random(a.orbitals, n, a.seed)?,
        format!("random seed={}", a.seed),
    ))
}

fn fixed(x: f64) -> String {
    format!("{:.12}", x + 0.0)
}

fn tuple(t: &[usize]) -> String {
    t.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn print_tensor(out: &mut String, name: &str, d: &AntisymmetricTensor, threshold: f64) {
    let entries = d.nonzero_entries(threshold);
    let _ = writeln!(
        out,
        "# {name}_{} orbitals={} entries={} trace={}",
        d.rank(),
        d.n_orbitals(),
        entries.len(),
        fixed(d.trace().re)
    );
    for (i, j, z) in entries {
        let _ = writeln!(
            out,
            "({}|{})  {}  {}",
            tuple(i),
            tuple(j),
            fixed(z.re),
            fixed(z.im)
        );
    }
}

fn print_checks(out: &mut String, checks: &[FermiCheck]) -> bool {
    for c in checks {
        let _ = writeln!(
            out,
            "{}: {:.3e} (tol {:e}) {}",
            c.name,
            c.value,
            c.tolerance,
            verdict(c.pass)
        );
    }
    checks.iter().all(|c| c.pass)
}

pub fn rdm(a: &RdmArgs) -> Result<Outcome> {
    let mut out = String::new();
    let pass = match a.action {
        RdmAction::Compute | RdmAction::Cumulants => {
            let (state, origin) = select_state(a)?;
            let _ = writeln!(out, "# state: {origin}");
            let (name, t) = if a.action == RdmAction::Compute {
                ("D", fermi::compute_rdm(&state, a.p)?)
            } else {
                (
                    "Delta",
                    fermi::rdm_cumulants(&state, a.p)?
                        .pop()
                        .expect("one tensor per rank"),
                )
            };
            print_tensor(&mut out, name, &t, a.threshold);
            true
        }
        RdmAction::Check => match a.case.expect("clap requires --case for check") {
            RdmCase::Determinant if a.state.is_none() && a.occupied.is_none() => {
                let n = default_electrons(a);
                let _ = writeln!(
                    out,
                    "# all determinants: orbitals={} electrons={n}",
                    a.orbitals
                );
                let mut worst: Vec<FermiCheck> = Vec::new();
                let mut count = 0usize;
                for bits in 0u32..1 << a.orbitals {
                    if bits.count_ones() as usize != n {
                        continue;
                    }
                    let occ: Vec<usize> = (1..=a.orbitals)
                        .filter(|k| bits >> (k - 1) & 1 == 1)
                        .collect();
                    let checks =
                        fermi::check_determinant(&FockVector::determinant(a.orbitals, &occ)?)?;
                    if worst.is_empty() {
                        worst = checks;
                    } else {
                        for (w, c) in worst.iter_mut().zip(checks) {
                            if c.value > w.value || !c.pass {
                                *w = c;
                            }
                        }
                    }
                    count += 1;
                }
                let _ = writeln!(out, "determinants checked: {count}");
                print_checks(&mut out, &worst)
            }
            RdmCase::Determinant => {
                let (state, origin) = select_state(a)?;
                let _ = writeln!(out, "# state: {origin}");
                print_checks(&mut out, &fermi::check_determinant(&state)?)
            }
            RdmCase::Additivity => {
                let split = a.split.unwrap_or(a.orbitals / 2);
                let (state, origin) = if a.state.is_some() || a.occupied.is_some() {
                    select_state(a)?
                } else {
                    let n = default_electrons(a);
                    let na = n.div_ceil(2).min(split);
                    let s = fermi::product_state(a.orbitals, split, na, n - na, a.seed)?;
                    (
                        s,
                        format!("product seed={} electrons={na}+{}", a.seed, n - na),
                    )
                };
                let _ = writeln!(out, "# state: {origin} split={split}");
                print_checks(&mut out, &fermi::check_additivity(&state, split)?)
            }
            RdmCase::Reconstruction => {
                let (state, origin) = select_state(a)?;
                let _ = writeln!(out, "# state: {origin}");
                print_checks(&mut out, &fermi::check_reconstruction(&state, a.p)?)
            }
            RdmCase::Trace => {
                let (state, origin) = select_state(a)?;
                let _ = writeln!(out, "# state: {origin}");
                print_checks(&mut out, &fermi::check_trace(&state, a.p)?)
            }
        },
    };
    let _ = writeln!(out, "result: {}", verdict(pass));
    Ok(Outcome { text: out, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_prints_unsigned() {
        assert_eq!(fixed(-0.0), "0.000000000000");
        assert_eq!(fixed(0.5), "0.500000000000");
    }

    #[test]
    fn tuples_are_comma_separated() {
        assert_eq!(tuple(&[1, 2, 5]), "1,2,5");
    }
}
