use std::path::Path;
use std::process::Command;

use dhradius::config::{GenFamily, RunConfig, Task, Term};
use dhradius::report::Status;
use dhradius::{read_matrix_market, run, write_matrix_market, ResultReport};
use dhradius_core::brake::BrakeModel;
use dhradius_core::framework::{radius_rj, FrameworkOptions};
use dhradius_core::linalg::{CMat, C64};
use dhradius_core::probgen::{gen_brake_toy, gen_dense, gen_restriction, gen_sparse};
use dhradius_core::Matrix;

fn scalar(x: f64) -> Matrix {
    Matrix::Dense(CMat::from_element(1, 1, C64::new(x, 0.0)))
}

fn config(task: Task, input: &Path) -> RunConfig {
    RunConfig {
        task: Some(task),
        input: Some(input.to_path_buf()),
        ..Default::default()
    }
}

fn generate(dir: &Path, family: GenFamily, n: usize, seed: u64) -> ResultReport {
    run(&RunConfig {
        task: Some(Task::Gen),
        output: Some(dir.to_path_buf()),
        family,
        n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dhradius"))
}

#[test]
fn hinf_of_scalar_lag() {
    let dir = tempfile::tempdir().unwrap();
    for (name, v) in [("A", -1.0), ("B", 1.0), ("C", 1.0)] {
        write_matrix_market(dir.path().join(format!("{name}.mtx")), &scalar(v)).unwrap();
    }
    let rep = run(&config(Task::Hinf, dir.path())).unwrap();
    let h = rep.hinf.unwrap();
    assert!((h.norm - 1.0).abs() <= 1e-12, "{}", h.norm);
    assert_eq!(h.omega, 0.0);
    assert_eq!(rep.status, Status::Ok);
}

#[test]
fn cli_reproduces_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate(dir.path(), GenFamily::Dense, 40, 7).generated.unwrap();
    assert!(files.iter().any(|f| f == "J.mtx"));

    let (sys, pair) = gen_dense(40, 7, 4, 2, 2);
    let want = radius_rj(&sys, &pair, &FrameworkOptions::default()).unwrap();

    let rep = run(&config(Task::RadiusRj, dir.path())).unwrap();
    assert_eq!(rep.radius.unwrap().to_bits(), want.radius.to_bits());
    assert_eq!(rep.omega.unwrap().to_bits(), want.omega.to_bits());
    assert_eq!(rep.iterations, Some(want.iterations));
    assert_eq!(rep.history.len(), want.history.len());
    assert!(rep.history.iter().all(|r| r.wall_time_s.is_some()));

    let out = bin()
        .args(["radius-rj", "--json", "--input"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let via_bin = ResultReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(via_bin.radius.unwrap().to_bits(), want.radius.to_bits());
    assert_eq!(via_bin.interpolation_points.unwrap(), want.interpolation_points);
}

#[test]
fn sweep_rows_match_standalone_runs() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Brake, 5, 3);
    let sweep = run(&RunConfig {
        speeds: vec![1.0, 2.0],
        ..config(Task::Sweep, dir.path())
    })
    .unwrap();
    let rows = sweep.sweep.unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.error.is_none(), "{:?}", row.error);
        let single = run(&RunConfig {
            speed: row.speed,
            ..config(Task::RadiusRj, dir.path())
        })
        .unwrap();
        assert_eq!(row.radius.unwrap().to_bits(), single.radius.unwrap().to_bits());
        assert_eq!(row.iterations, single.iterations);
        assert_eq!(row.subspace_dim, single.subspace_dim);
    }
}

#[test]
fn brake_input_uses_generated_model() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Brake, 6, 5);
    let brake = gen_brake_toy(6, 5, 1.0).unwrap();
    let pair = gen_restriction(12, 2, 2, 6);
    let want = radius_rj(&BrakeModel::new(brake).unwrap(), &pair, &FrameworkOptions::default()).unwrap();
    let rep = run(&config(Task::RadiusRj, dir.path())).unwrap();
    assert_eq!(rep.n, Some(12));
    assert_eq!(rep.radius.unwrap().to_bits(), want.radius.to_bits());
}

#[test]
fn sparse_matrix_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, _) = gen_sparse(80, 13, 4, 8, 2, 2);
    for (name, m) in [("J", sys.j()), ("R", sys.r()), ("Q", sys.q())] {
        let path = dir.path().join(format!("{name}.mtx"));
        write_matrix_market(&path, m).unwrap();
        let back = read_matrix_market(&path).unwrap();
        assert_eq!(back.storage(), m.storage());
        let (a, b) = (back.to_dense(), m.to_dense());
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}

#[test]
fn verify_confirms_computed_radius() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Dense, 30, 4);
    let rep = run(&RunConfig {
        term: Term::R,
        ..config(Task::Verify, dir.path())
    })
    .unwrap();
    let v = rep.verification.unwrap();
    assert!(v.verified);
    assert!(v.residual <= 1e-6 * (1.0 + v.omega.abs()), "{}", v.residual);
    assert!(rep.warnings.is_empty());
}

#[test]
fn structured_verify_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Dense, 20, 2020);
    let out = dir.path().join("out");
    let rep = run(&RunConfig {
        term: Term::Hermitian,
        samples: 200,
        output: Some(out.clone()),
        ..config(Task::Verify, dir.path())
    })
    .unwrap();
    assert_eq!(rep.spectra.as_ref().unwrap().crossings, 0);
    let r = rep.radius.unwrap();

    let rep = run(&RunConfig {
        emit_curve: true,
        curve_points: 50,
        output: Some(out.clone()),
        ..config(Task::RadiusStructured, dir.path())
    })
    .unwrap();
    assert_eq!(rep.radius.unwrap().to_bits(), r.to_bits());
    assert_eq!(
        rep.curves.as_deref(),
        Some(&["curve_full.csv".to_string(), "curve_reduced.csv".to_string()][..])
    );
    let mut rd = csv::Reader::from_path(out.join("curve_full.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["omega", "value"]);
    assert_eq!(rd.records().count(), 50);

    let saved = ResultReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved.radius, rep.radius);
    assert_eq!(saved.config, rep.config);
}

#[test]
fn unstructured_curves_meet_at_interpolation_points() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Dense, 40, 9);
    let out = dir.path().join("out");
    let rep = run(&RunConfig {
        emit_curve: true,
        output: Some(out.clone()),
        ..config(Task::RadiusQ, dir.path())
    })
    .unwrap();
    let read = |name: &str| -> Vec<(f64, f64)> {
        csv::Reader::from_path(out.join(name))
            .unwrap()
            .deserialize()
            .map(|r| r.unwrap())
            .collect()
    };
    let full = read("curve_full.csv");
    let red = read("curve_reduced.csv");
    assert_eq!(full.len(), 400);
    // the reduced σ_max never exceeds the full peak by more than the tolerance
    let peak = 1.0 / rep.radius.unwrap();
    assert!(red.iter().all(|&(_, v)| v <= peak * (1.0 + 1e-6)));
    assert!(full.iter().all(|&(_, v)| v <= peak * (1.0 + 1e-6)));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), GenFamily::Dense, 40, 7);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("task = \"radius-q\"\ninput = {:?}\nell = 2\n", dir.path()),
    )
    .unwrap();
    let out = bin()
        .args(["--json", "--ell", "3", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = ResultReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rep.task, "radius-q");
    assert_eq!(rep.config.ell, Some(3));
    assert_eq!(rep.initial_points.unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // R indefinite: not a DH system
    for (name, v) in [("J", 0.0), ("R", -1.0), ("Q", 1.0), ("B", 1.0)] {
        write_matrix_market(dir.path().join(format!("{name}.mtx")), &scalar(v)).unwrap();
    }
    let st = bin()
        .args(["radius-rj", "--input"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));

    std::fs::write(
        dir.path().join("R.mtx"),
        "%%MatrixMarket matrix array real general\n1 1\nabc\n",
    )
    .unwrap();
    let out = bin().args(["radius-rj", "--input"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R.mtx:3"));

    // lossless scalar system: J = 0, R = 0 puts the eigenvalue on the axis
    write_matrix_market(dir.path().join("R.mtx"), &scalar(0.0)).unwrap();
    let st = bin()
        .args(["radius-rj", "--no-validate", "--input"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(3));

    // one iteration is not enough to converge
    let gen = dir.path().join("g");
    generate(&gen, GenFamily::Dense, 40, 7);
    let st = bin()
        .args(["radius-rj", "--k-max", "1", "--input"])
        .arg(&gen)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(4));
}
