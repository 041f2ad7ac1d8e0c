use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use opcumulant::expr::{equal, parse, parse_json};
use opcumulant::transforms::{cumulants_from_moments, moments_from_cumulants, InversionFormula};
use opcumulant::OrderingMapKind;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcumulant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn golden(name: &str) -> String {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "tests",
        "golden",
        &format!("{name}.txt"),
    ]
    .iter()
    .collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check_golden(name: &str, args: &str, code: i32) {
    let o = run(&args.split_whitespace().collect::<Vec<_>>());
    assert_eq!(
        o.status.code(),
        Some(code),
        "{args}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o), golden(name), "{args}");
}

#[test]
fn goldens() {
    let cases = [
        (
            "expand_moments_pto_2",
            "expand --direction moments --n 2 --map pto",
            0,
        ),
        (
            "expand_moments_pto_4",
            "expand --direction moments --n 4 --map pto",
            0,
        ),
        (
            "expand_moments_tto_4",
            "expand --direction moments --n 4 --map tto",
            0,
        ),
        (
            "expand_cumulants_tto_2",
            "expand --direction cumulants --n 2 --map tto",
            0,
        ),
        (
            "expand_cumulants_pto_3",
            "expand --direction cumulants --n 3 --map pto",
            0,
        ),
        (
            "expand_moments_grassmann_4",
            "expand --direction moments --n 4 --map grassmann",
            0,
        ),
        (
            "expand_moments_pto_3_json",
            "expand --direction moments --n 3 --map pto --format json",
            0,
        ),
        (
            "verify_identity_pto_4_seed7",
            "verify identity --n 4 --map pto --seed 7",
            0,
        ),
        (
            "verify_cluster_tto_4_seed7",
            "verify cluster --n 4 --split 2 --map tto --seed 7",
            0,
        ),
        (
            "verify_cluster_correlated_seed7",
            "verify cluster --n 2 --correlated --seed 7",
            1,
        ),
        (
            "demo_appendix_a",
            "demo appendix-a --degree 6 --t1 1 --t2 0",
            0,
        ),
        (
            "demo_appendix_a_continuous",
            "demo appendix-a --continuous --t 1",
            0,
        ),
        (
            "rdm_compute_determinant",
            "rdm compute --p 2 --orbitals 2 --occupied 1,2",
            0,
        ),
        (
            "rdm_check_determinant",
            "rdm check --case determinant --orbitals 6 --electrons 3",
            0,
        ),
        (
            "rdm_check_additivity",
            "rdm check --case additivity --orbitals 8 --split 4",
            0,
        ),
    ];
    for (name, args, code) in cases {
        check_golden(name, args, code);
    }
}

#[test]
fn spec_lines() {
    assert_eq!(
        stdout(&run(&[
            "expand",
            "--direction",
            "moments",
            "--n",
            "2",
            "--map",
            "pto"
        ])),
        "<1.2>_c + <1>*<2>\n"
    );
    assert_eq!(
        stdout(&run(&[
            "expand",
            "--direction",
            "cumulants",
            "--n",
            "2",
            "--map",
            "tto"
        ])),
        "<1.2> + -1*<1>*<2>\n"
    );
    let rdm = stdout(&run(&[
        "rdm",
        "compute",
        "--p",
        "2",
        "--orbitals",
        "2",
        "--occupied",
        "1,2",
    ]));
    assert!(
        rdm.contains("(1,2|1,2)  0.500000000000  0.000000000000"),
        "{rdm}"
    );
}

#[test]
fn expand_output_reparses_to_library_expression() {
    for map in OrderingMapKind::ALL {
        for n in 1..=4 {
            for (direction, lib) in [
                ("moments", moments_from_cumulants(n, map).unwrap()),
                (
                    "cumulants",
                    cumulants_from_moments(n, map, InversionFormula::Recursive).unwrap(),
                ),
            ] {
                let ns = n.to_string();
                let base = [
                    "expand",
                    "--direction",
                    direction,
                    "--n",
                    &ns,
                    "--map",
                    map.name(),
                ];
                let text = stdout(&run(&base));
                assert!(
                    equal(&parse(text.trim()).unwrap(), &lib, map),
                    "{map} {direction} {n}"
                );
                let mut json_args = base.to_vec();
                json_args.extend(["--format", "json"]);
                let json = stdout(&run(&json_args));
                assert!(
                    equal(&parse_json(json.trim()).unwrap(), &lib, map),
                    "{map} {direction} {n} json"
                );
            }
        }
    }
}

#[test]
fn formulas_are_selectable() {
    for (formula, map) in [
        ("pto-direct", "pto"),
        ("tto-direct", "tto"),
        ("roerdnik", "pto"),
    ] {
        let o = run(&[
            "expand",
            "--direction",
            "cumulants",
            "--n",
            "3",
            "--map",
            map,
            "--formula",
            formula,
        ]);
        assert_eq!(o.status.code(), Some(0), "{formula}");
    }
    let o = run(&[
        "expand",
        "--direction",
        "cumulants",
        "--n",
        "3",
        "--map",
        "classical",
        "--formula",
        "tto-direct",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["expand", "--direction", "sideways", "--n", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "expand",
            "--direction",
            "moments",
            "--n",
            "2",
            "--map",
            "weyl"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rdm", "check"]).status.code(), Some(2));
    let o = run(&["expand", "--direction", "moments", "--n", "40"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = 40"));
    assert_eq!(
        run(&["verify", "identity", "--n", "3", "--map", "pto"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["verify", "factorization", "--n", "6", "--correlated"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["demo", "appendix-a", "--degree", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["demo", "appendix-a", "--t1", "0", "--t2", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn tto_interleaved_split_is_explained() {
    let o = run(&[
        "verify",
        "cluster",
        "--n",
        "4",
        "--group-a",
        "1,3",
        "--map",
        "tto",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("contiguous"));
}

#[test]
fn reports_carry_the_seed() {
    for kind in [
        "identity",
        "cluster",
        "factorization",
        "roerdnik-equivalence",
    ] {
        let out = stdout(&run(&["verify", kind, "--n", "4", "--seed", "11"]));
        assert!(out.contains("seed=11"), "{kind}: {out}");
        assert!(out.contains("max_rel="), "{kind}: {out}");
    }
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = [
        "verify", "identity", "--n", "5", "--map", "tto", "--seed", "3",
    ];
    let one = Command::new(env!("CARGO_BIN_EXE_opcumulant"))
        .args(args)
        .env("OPCUMULANT_THREADS", "1")
        .output()
        .unwrap();
    let again = run(&args);
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(run(&args).stdout, again.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_opcumulant"))
        .args(args)
        .env("OPCUMULANT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn state_and_model_files() {
    let mut state = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        state,
        "# two electrons, two determinants\n1100 0.6 0\n0011 0.8 0"
    )
    .unwrap();
    let path = state.path().to_str().unwrap();
    let o = run(&["rdm", "compute", "--p", "1", "--state", path]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(3|3)  0.640000000000  0.000000000000"));
    let o = run(&[
        "rdm",
        "check",
        "--case",
        "reconstruction",
        "--p",
        "2",
        "--state",
        path,
    ]);
    assert_eq!(o.status.code(), Some(0));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "1100 0.6 0\n\n0011 0.8 oops").unwrap();
    let o = run(&["rdm", "compute", "--state", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let model = opcumulant::numeric::build_random_model(3, 3, 2, 5).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    model.save(file.path()).unwrap();
    let o = run(&[
        "verify",
        "identity",
        "--n",
        "3",
        "--map",
        "tto",
        "--model",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
