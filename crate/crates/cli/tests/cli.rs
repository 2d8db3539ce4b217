use cablepul::io::read_input;
use cablepul::solver::ground::{pair_modes, ProximityPipeline};
use cablepul::MomSystem;
use cablepul_cli::csv::read_table;
use cablepul_cli::{EXIT_GEOMETRY, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_USAGE};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn input(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cablepul")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_in(dir: &Path, input: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec!["--input", input.to_str().unwrap(), "--output", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_input(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn full_sweep_writes_every_row_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_in(dir.path(), &input("single_core_trio.toml"), &["--sweep", "1:1e6:120:log", "--modes"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let table = read_table(&results).unwrap();
    assert_eq!(table.rows.len(), 120);
    // 6 signal conductors: 21 upper-triangle entries for R and for L.
    assert_eq!(table.header.len(), 1 + 2 * 21);
    let f = table.column("f_hz").unwrap();
    assert_eq!((f[0], f[119]), (1.0, 1e6));
    assert!(dir.path().join("combined_z.csv").exists());
    assert_eq!(read_table(&std::fs::read_to_string(dir.path().join("modes.csv")).unwrap()).unwrap().rows.len(), 120);

    let m = manifest(dir.path());
    assert_eq!(m["frequencies"], 120);
    assert_eq!(m["failures"].as_array().unwrap().len(), 0);
    assert_eq!(m["timings"]["per_frequency_solve_s"].as_array().unwrap().len(), 120);
    assert_eq!(m["resolved"]["reference"], 6);
    assert_eq!(m["resolved"]["auto_return_mu_r"], 1.0);
    assert_eq!(m["resolved"]["ground_model"], "infinite_earth_analytic");
    let sha = m["input_sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    assert!(results.starts_with(&format!("# manifest=manifest.json input_sha256={sha}\n")));
}

#[test]
fn csv_values_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = input("three_shells.toml");
    let (code, err) = run_in(dir.path(), &path, &["--freqs", "50,1000,10000"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let table = read_table(&std::fs::read_to_string(dir.path().join("results.csv")).unwrap()).unwrap();
    let mom = MomSystem::new(&read_input(&path).unwrap().system).unwrap();
    for (k, f) in [50.0, 1e3, 1e4].into_iter().enumerate() {
        let r = mom.solve(f).unwrap();
        assert_eq!(table.column("R_0_1_ohm_per_m").unwrap()[k], r.r[(0, 1)]);
        assert_eq!(table.column("L_2_2_H_per_m").unwrap()[k], r.l[(2, 2)]);
    }
}

#[test]
fn sequential_and_parallel_outputs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let path = input("buried_pair.toml");
    assert_eq!(run_in(a.path(), &path, &["--sequential"]).0, EXIT_OK);
    assert_eq!(run_in(b.path(), &path, &[]).0, EXIT_OK);
    for file in ["results.csv", "combined_z.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    assert_eq!(manifest(a.path())["resolved"]["execution"], "sequential");
}

#[test]
fn combined_pair_modes_in_ohm_per_km() {
    let dir = tempfile::tempdir().unwrap();
    let path = input("buried_pair.toml");
    assert_eq!(run_in(dir.path(), &path, &["--freqs", "10000"]).0, EXIT_OK);
    let t = read_table(&std::fs::read_to_string(dir.path().join("combined_z.csv")).unwrap()).unwrap();
    let sys = read_input(&path).unwrap().system;
    let z = ProximityPipeline::new(&sys).unwrap().correct(1e4).unwrap().combined;
    let (common, lp) = pair_modes(&z);
    assert_eq!(t.column("loop_re_ohm_per_km").unwrap()[0], lp.re * 1e3);
    assert_eq!(t.column("common_im_ohm_per_km").unwrap()[0], common.im * 1e3);
    assert!((t.column("loop_rel_diff_re").unwrap()[0] + 0.2697).abs() < 1e-3);
}

#[test]
fn per_km_units_scale_by_a_thousand() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let path = input("two_wires.json");
    assert_eq!(run_in(a.path(), &path, &["--freqs", "1000"]).0, EXIT_OK);
    assert_eq!(run_in(b.path(), &path, &["--freqs", "1000", "--ohm-per-km"]).0, EXIT_OK);
    let ta = read_table(&std::fs::read_to_string(a.path().join("results.csv")).unwrap()).unwrap();
    let tb = read_table(&std::fs::read_to_string(b.path().join("results.csv")).unwrap()).unwrap();
    let r = ta.column("R_0_0_ohm_per_m").unwrap()[0];
    assert_eq!(tb.column("R_0_0_ohm_per_km").unwrap()[0], r * 1e3);
}

#[test]
fn order_flags_override_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = input("two_wires.json");
    assert_eq!(run_in(dir.path(), &path, &["--freqs", "1000", "--no-proximity"]).0, EXIT_OK);
    let m = manifest(dir.path());
    assert_eq!(m["resolved"]["orders"], serde_json::json!([0, 0]));
    assert_eq!(m["resolved"]["proximity"], false);
    assert_eq!(run_in(dir.path(), &path, &["--freqs", "1000", "--order", "2"]).0, EXIT_OK);
    assert_eq!(manifest(dir.path())["resolved"]["orders"], serde_json::json!([2, 2]));
}

#[test]
fn greens_oracle_output() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_in(dir.path(), &input("two_wires.json"), &["--freqs", "1000", "--order", "3", "--oracle", "quadrature-greens"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let t = read_table(&std::fs::read_to_string(dir.path().join("oracle_greens.csv")).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 14 * 14);
    assert!(t.column("abs_diff").unwrap().iter().all(|&d| d < 1e-11));
}

#[test]
fn filament_oracle_output() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_in(dir.path(), &input("two_wires.json"), &["--freqs", "500,2000", "--oracle", "filament"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let t = read_table(&std::fs::read_to_string(dir.path().join("oracle_filament.csv")).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 2);
    for col in ["R_0_0_rel_diff", "L_0_0_rel_diff"] {
        assert!(t.column(col).unwrap().iter().all(|d| d.abs() < 0.01), "{col}");
    }
    assert!(manifest(dir.path())["timings"]["oracle_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let o = out.to_str().unwrap();

    let missing = d.join("missing.toml");
    assert_eq!(run(&["--input", missing.to_str().unwrap(), "--output", o, "--freqs", "50"]).0, EXIT_IO);

    let wires = input("two_wires.json");
    let w = wires.to_str().unwrap();
    assert_eq!(run(&["--input", w, "--output", o, "--bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["--input", w, "--output", o, "--freqs", "50", "--sweep", "1:2:3:log"]).0, EXIT_USAGE);
    assert_eq!(run(&["--input", w, "--output", o, "--modes"]).0, EXIT_USAGE);
    assert_eq!(run(&["--input", w, "--output", o, "--ground", "analytic"]).0, EXIT_USAGE);
    assert_eq!(run(&["--input", w, "--output", o, "--freqs", "50,-3"]).0, EXIT_PARSE);

    let broken = write_input(d, "broken.toml", "[[conductors]\ntype = ");
    assert_eq!(run_in(&out, &broken, &["--freqs", "50"]).0, EXIT_PARSE);
    let unknown = write_input(
        d,
        "unknown.toml",
        "[[conductors]]\ntype = \"solid\"\nx_m = 0.0\ny_m = 0.0\nouter_radius_m = 0.01\nsigma_S_per_m = 1e7\ncolour = \"red\"\n",
    );
    assert_eq!(run_in(&out, &unknown, &["--freqs", "50"]).0, EXIT_PARSE);
    let overlap = write_input(
        d,
        "overlap.toml",
        "[[conductors]]\ntype = \"solid\"\nx_m = 0.0\ny_m = 0.0\nouter_radius_m = 0.01\nsigma_S_per_m = 1e7\n\n\
         [[conductors]]\ntype = \"solid\"\nx_m = 0.015\ny_m = 0.0\nouter_radius_m = 0.01\nsigma_S_per_m = 1e7\n",
    );
    let (code, err) = run_in(&out, &overlap, &["--freqs", "50"]);
    assert_eq!(code, EXIT_GEOMETRY);
    assert!(err.contains("Overlap"), "{err}");
    let magnetic = write_input(
        d,
        "magnetic.toml",
        "[[conductors]]\ntype = \"solid\"\nx_m = 0.0\ny_m = 0.0\nouter_radius_m = 0.01\nsigma_S_per_m = 1e7\nmu_r = 100.0\n",
    );
    assert_eq!(run_in(&out, &magnetic, &["--freqs", "50"]).0, EXIT_OK);
    assert_eq!(run_in(&out, &magnetic, &["--freqs", "50", "--oracle", "filament"]).0, EXIT_NUMERICAL);
}
