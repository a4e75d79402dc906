use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, SymmetricEigen};
use qsubspace::{fcidump, schema, Method, RunConfig};
use qsubspace_core::fixtures::random_integrals;
use qsubspace_core::integrals::MolecularIntegrals;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn qsubspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsubspace")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = qsubspace(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn write_fixture(dir: &Path, name: &str, ints: &MolecularIntegrals) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, fcidump::write_fcidump(ints)).unwrap();
    path
}

fn sweep_rows(dir: &Path) -> Vec<Vec<Option<f64>>> {
    let mut r = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|c| if c.is_empty() { None } else { Some(c.parse().unwrap()) }).collect())
        .collect()
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Dense second-quantized Hamiltonian on all `2^{2M}` occupations, built
/// from explicit creation-operator matrices, restricted to the `(N↑, N↓)`
/// block and diagonalized.
fn dense_fci_oracle(ints: &MolecularIntegrals) -> Vec<f64> {
    let m = ints.num_orbitals();
    let modes = 2 * m;
    let dim = 1usize << modes;
    let create = |mode: usize| {
        let mut c = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim {
            if k & (1 << mode) == 0 {
                let sign = if (k & ((1 << mode) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                c[(k | (1 << mode), k)] = sign;
            }
        }
        c
    };
    let cr: Vec<DMatrix<f64>> = (0..modes).map(create).collect();
    let an: Vec<DMatrix<f64>> = cr.iter().map(|c| c.transpose()).collect();
    let mut h = DMatrix::<f64>::identity(dim, dim) * ints.e_nuc();
    for sigma in 0..2 {
        for p in 0..m {
            for r in 0..m {
                h += &cr[p + sigma * m] * &an[r + sigma * m] * ints.h(p, r);
            }
        }
    }
    for s1 in 0..2 {
        for s2 in 0..2 {
            for p in 0..m {
                for r in 0..m {
                    for q in 0..m {
                        for s in 0..m {
                            let v = ints.eri(p, r, q, s);
                            if v != 0.0 {
                                h += &cr[p + s1 * m] * &cr[q + s2 * m] * &an[s + s2 * m] * &an[r + s1 * m] * (0.5 * v);
                            }
                        }
                    }
                }
            }
        }
    }
    let up_mask = (1usize << m) - 1;
    let keep: Vec<usize> = (0..dim)
        .filter(|k| (k & up_mask).count_ones() as usize == ints.num_up() && (k >> m).count_ones() as usize == ints.num_down())
        .collect();
    let block = DMatrix::from_fn(keep.len(), keep.len(), |i, j| h[(keep[i], keep[j])]);
    let mut e: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn unknown_method_exits_2_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let h2 = data("h2.fcidump");
    let out = qsubspace(&["hartree-fock", "--input", h2.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["field"], "method");
    assert_eq!(e["error"]["code"], 2);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(written, e);
}

#[test]
fn fci_matches_golden_file_bit_for_bit() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["fci", "--input", data("h2.fcidump").to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(data("h2.fci.golden.json")).unwrap()).unwrap();
    let got = result(tmp.path());
    let want: Vec<f64> = golden["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let have: Vec<f64> = got["energies"]["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(have.len(), want.len());
    for (a, b) in have.iter().zip(&want) {
        assert_eq!(a.to_bits(), b.to_bits(), "{a} vs golden {b}");
    }
}

#[test]
fn golden_file_agrees_with_dense_oracle() {
    let text = std::fs::read_to_string(data("h2.fcidump")).unwrap();
    let oracle = dense_fci_oracle(&fcidump::parse_fcidump(&text).unwrap());
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(data("h2.fci.golden.json")).unwrap()).unwrap();
    let want = golden["eigenvalues"].as_array().unwrap();
    assert_eq!(oracle.len(), want.len());
    for (o, g) in oracle.iter().zip(want) {
        assert!((o - g.as_f64().unwrap()).abs() < 1e-12, "{o} vs {g}");
    }
}

#[test]
fn qfd_with_1e8_shots_agrees_with_exact_run() {
    let tmp = TempDir::new().unwrap();
    let input = data("h2.fcidump");
    let exact = tmp.path().join("exact");
    let noisy = tmp.path().join("noisy");
    let base = ["qfd", "--input", input.to_str().unwrap(), "--n", "2", "--dt", "1.5", "--start", "random", "--seed", "11"];
    run_ok(&[&base[..], &["--out", exact.to_str().unwrap()]].concat());
    run_ok(&[&base[..], &["--shots", "100000000", "--out", noisy.to_str().unwrap()]].concat());
    let e = result(&exact);
    let s = result(&noisy);
    let lam_min = e["geev"]["overlap_eigenvalues"][0].as_f64().unwrap();
    assert!(lam_min > 0.1, "overlap too ill-conditioned for a 1e-3 comparison: {lam_min}");
    assert_eq!(s["shots"]["shots_per_group"], 100_000_000u64);
    let ev = |r: &Value| -> Vec<f64> { r["energies"]["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
    let (ee, se) = (ev(&e), ev(&s));
    assert!(!se.is_empty() && se.len() <= ee.len());
    for (k, x) in se.iter().enumerate() {
        assert!((x - ee[k]).abs() < 1e-3, "eigenvalue {k}: {x} vs exact {}", ee[k]);
    }
}

#[test]
fn lanczos_sweep_energy_is_nonincreasing() {
    let tmp = TempDir::new().unwrap();
    run_ok(&[
        "lanczos",
        "--input",
        data("rand4.fcidump").to_str().unwrap(),
        "--sweep",
        "n=1:6",
        "--jobs",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let rows = sweep_rows(tmp.path());
    assert_eq!(rows.len(), 6);
    for w in rows.windows(2) {
        assert!(w[1][1].unwrap() <= w[0][1].unwrap() + 1e-12, "{:?} then {:?}", w[0], w[1]);
    }
    for r in &rows {
        assert!(r[2].unwrap() >= -1e-12 && r[2].unwrap() <= r[5].unwrap(), "Kaniel-Paige row {r:?}");
    }
}

#[test]
fn power_krylov_sweep_cond_dominates_bound() {
    let tmp = TempDir::new().unwrap();
    let input = write_fixture(tmp.path(), "sys.fcidump", &random_integrals(3, 2, 1, 8));
    run_ok(&["power-krylov", "--input", input.to_str().unwrap(), "--start", "random", "--sweep", "n=2:7", "--out", tmp.path().to_str().unwrap()]);
    let rows = sweep_rows(tmp.path());
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r[3].unwrap() >= r[5].unwrap(), "cond below bound: {r:?}");
    }
}

#[test]
fn qfd_dt_sweep_error_is_within_epperly_bound() {
    let tmp = TempDir::new().unwrap();
    run_ok(&[
        "qfd",
        "--input",
        data("rand4.fcidump").to_str().unwrap(),
        "--n",
        "5",
        "--sweep",
        "dt=0.1,0.2,0.3,0.5,0.7,1.0",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let rows = sweep_rows(tmp.path());
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let (err, bound) = (r[2].unwrap(), r[5].unwrap());
        assert!(err >= -1e-9 && err <= bound, "dt {}: error {err} bound {bound}", r[0].unwrap());
    }
}

#[test]
fn sweep_table_does_not_depend_on_jobs() {
    let tmp = TempDir::new().unwrap();
    let input = data("rand4.fcidump");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, jobs) in [(&a, "1"), (&b, "4")] {
        run_ok(&["qse", "--input", input.to_str().unwrap(), "--level", "singles", "--sweep", "shots=100,1000,10000", "--seed", "5", "--jobs", jobs, "--out", dir.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(a.join("sweep.csv")).unwrap(), std::fs::read(b.join("sweep.csv")).unwrap());
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, format!("input = {:?}\nmethod = \"fci\"\n[params]\nwidth = 3\n", data("h2.fcidump"))).unwrap();
    let out = qsubspace(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["field"], "width");
}

#[test]
fn incompatible_parameters_exit_2() {
    let h2 = data("h2.fcidump");
    let cases: &[&[&str]] = &[
        &["fci", "--input", h2.to_str().unwrap(), "--dt", "0.1"],
        &["lanczos", "--input", h2.to_str().unwrap(), "--shots", "100"],
        &["qfd", "--input", h2.to_str().unwrap(), "--n", "0"],
        &["fci", "--input", h2.to_str().unwrap(), "--sweep", "dt=0.1,0.2"],
        &["qse", "--input", h2.to_str().unwrap(), "--level", "triples"],
    ];
    for args in cases {
        let out = qsubspace(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(error_json(&out)["error"]["kind"], "usage");
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("input = {:?}\nmethod = \"lanczos\"\nseed = 4\n[params]\nn = 2\n[output]\ndir = {:?}\n", data("rand4.fcidump"), tmp.path().join("a")),
    )
    .unwrap();
    let b = tmp.path().join("b");
    run_ok(&["--config", cfg.to_str().unwrap(), "--n", "4", "--out", b.to_str().unwrap()]);
    let r = result(&b);
    assert_eq!(r["parameters"]["n"], 4.0);
    assert_eq!(r["seed"], 4);
    assert!(!tmp.path().join("a").exists());
}

#[test]
fn io_and_input_errors_have_distinct_codes() {
    let tmp = TempDir::new().unwrap();
    let out = qsubspace(&["fci", "--input", tmp.path().join("missing.fcidump").to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "io");

    let bad = tmp.path().join("bad.fcidump");
    std::fs::write(&bad, "&FCI NORB=1,NELEC=2,MS2=0,\n&END\nabc 1 1 0 0\n").unwrap();
    let out = qsubspace(&["fci", "--input", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("line 3"));
}

#[test]
fn empty_subspace_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    let out = qsubspace(&["lanczos", "--input", data("h2.fcidump").to_str().unwrap(), "--eps", "10", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_json(&out)["error"]["kind"], "numerical");
}

#[test]
fn help_documents_exit_codes() {
    let out = qsubspace(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for code in 0..=6 {
        assert!(text.contains(&format!("  {code}  ")), "exit code {code} missing from help");
    }
}

#[test]
fn every_method_report_validates_against_schema() {
    let tmp = TempDir::new().unwrap();
    let input = write_fixture(tmp.path(), "sys.fcidump", &random_integrals(3, 1, 1, 2));
    let schema = schema::result_schema();
    for method in Method::ALL {
        let dir = tmp.path().join(method.name());
        let mut args = vec![method.name(), "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--matrices", "--dumps"];
        if matches!(method, Method::Qse | Method::Qfd) {
            args.extend(["--shots", "1000"]);
        }
        run_ok(&args);
        let r = result(&dir);
        let violations = schema::validate(&schema, &r);
        assert!(violations.is_empty(), "{}: {violations:?}", method.name());
        assert_eq!(r["method"], method.name());
        assert_eq!(r["generator"], "chacha20");
        assert!(dir.join("hamiltonian.bin").exists());
        match method {
            Method::Davidson => assert!(dir.join("trace.csv").exists()),
            Method::Spectrum => assert!(dir.join("spectrum.csv").exists()),
            Method::Fastforward => assert!(dir.join("amplitudes.txt").exists()),
            _ => {}
        }
    }
}

#[test]
fn run_is_reproducible_from_config_echo() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("first");
    run_ok(&["qse", "--input", data("rand4.fcidump").to_str().unwrap(), "--level", "singles", "--eps-target", "0.05", "--seed", "17", "--out", dir.to_str().unwrap()]);
    let first = result(&dir);
    let mut cfg: RunConfig = serde_json::from_value(first["config"].clone()).unwrap();
    cfg.output.dir = tmp.path().join("second");
    let again = qsubspace::run(&cfg).unwrap();
    assert_eq!(again.report["energies"], first["energies"]);
    assert_eq!(again.report["shots"], first["shots"]);
    assert_eq!(again.report["geev"], first["geev"]);
}

#[test]
fn spectrum_sum_rule_and_fastforward_fidelity_reported() {
    let tmp = TempDir::new().unwrap();
    let input = data("rand4.fcidump");
    let s = tmp.path().join("s");
    run_ok(&["spectrum", "--input", input.to_str().unwrap(), "--out", s.to_str().unwrap()]);
    let r = result(&s);
    assert!(r["diagnostics"]["sum_rule_error"].as_f64().unwrap() < 1e-8);
    let mut csv = csv::Reader::from_path(s.join("spectrum.csv")).unwrap();
    assert_eq!(csv.headers().unwrap(), vec!["omega", "re", "im"]);
    assert_eq!(csv.records().count() as u64, r["spectrum"]["omega_points"].as_u64().unwrap());

    let f = tmp.path().join("f");
    run_ok(&["fastforward", "--input", input.to_str().unwrap(), "--start", "ground", "--time", "100", "--out", f.to_str().unwrap()]);
    let r = result(&f);
    assert!(r["diagnostics"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-6);
    assert_eq!(r["diagnostics"]["warning"], false);
}
