use std::path::Path;
use std::process::{Command, Output};

use frg_cli::config::ExperimentConfig;
use frg_cli::plot::read_trajectory;
use frg_cli::{EXIT_CONFIG, EXIT_POSITIVITY};
use frg_core::assembly::Discretization;
use frg_core::mesh::{Mesh, MeshSpec};
use frg_core::problems::problem;

fn frg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frg")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn zero_final_time_writes_the_interpolant() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frg(&["run", "ex1", "--cells", "16", "--t-final", "0", "--out", "o"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data = read_trajectory(&std::fs::read_to_string(tmp.path().join("o/trajectory.csv")).unwrap()).unwrap();
    assert_eq!(data.samples.len(), 1);
    let prob = problem("mild_compression").unwrap();
    let disc = Discretization::new(Mesh::new(MeshSpec::new(1, 16)).unwrap(), 1, 5).unwrap();
    let r0 = disc.interpolate(|x| prob.initial.eval(x));
    assert_eq!(data.samples[0].1, r0.coeffs);
    for f in ["errors.csv", "meta.txt", "profile.svg"] {
        assert!(tmp.path().join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn metadata_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frg(&["run", "ex3", "--scheme", "dg_plus", "--cells", "16", "--t-final", "0.2", "--out", "a"], tmp.path());
    assert_eq!(code(&o), 0);
    let meta = tmp.path().join("a/meta.txt");
    let mut cfg = ExperimentConfig::load(&meta).unwrap();
    assert_eq!(cfg.cells, 16);
    cfg.output = "b".into();
    std::fs::write(tmp.path().join("b.cfg"), cfg.to_text()).unwrap();
    let o = frg(&["run", "--config", "b.cfg"], tmp.path());
    assert_eq!(code(&o), 0);
    for f in ["trajectory.csv", "errors.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn failure_a_quadrature_switch() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = frg(&["run", "failure_a", "--nq", "11", "--out", "nq11"], tmp.path());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let harsh = frg(&["run", "failure_a", "--nq", "4", "--out", "nq4"], tmp.path());
    assert_eq!(code(&harsh), EXIT_POSITIVITY);
    let meta = std::fs::read_to_string(tmp.path().join("nq4/meta.txt")).unwrap();
    assert!(meta.contains("status = positivity_lost") && meta.contains("failure_time"));
    assert!(tmp.path().join("nq4/trajectory.csv").exists());
}

#[test]
fn configuration_errors_exit_with_their_own_code() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["run", "ex1", "--flux", "lax_friedrichs"][..],
        &["run", "nope"],
        &["run", "ex1", "--order", "3", "--nq", "3"],
        &["run", "ex1", "--cfl", "0"],
        &["plot", "shape", "x.csv", "-o", "x.svg"],
    ] {
        assert_eq!(code(&frg(args, tmp.path())), EXIT_CONFIG, "{args:?}");
    }
    std::fs::write(tmp.path().join("bad.cfg"), "[time]\nspeed = 1\n").unwrap();
    assert_eq!(code(&frg(&["run", "--config", "bad.cfg"], tmp.path())), EXIT_CONFIG);
}

#[test]
fn plot_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for s in ["dg", "dfrg"] {
        let o = frg(&["run", "ex3", "--scheme", s, "--cells", "32", "--t-final", "0.5", "--out", s], tmp.path());
        assert_eq!(code(&o), 0);
    }
    for (kind, inputs) in [
        ("profile", ["dg/trajectory.csv", "dfrg/trajectory.csv"]),
        ("profile_log", ["dg/trajectory.csv", "dfrg/trajectory.csv"]),
        ("error_time", ["dg/errors.csv", "dfrg/errors.csv"]),
    ] {
        let out = format!("{kind}.svg");
        let o = frg(&["plot", kind, inputs[0], inputs[1], "-o", &out], tmp.path());
        assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let svg = std::fs::read_to_string(tmp.path().join(&out)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains(">dg<") && svg.contains(">dfrg<"), "{kind}");
    }
    // errors.csv is not a trajectory
    let o = frg(&["plot", "profile", "dg/errors.csv", "-o", "x.svg"], tmp.path());
    assert_eq!(code(&o), EXIT_CONFIG);
}

#[test]
fn short_sweep_has_no_order_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frg(&["converge", "ex1", "--sweep", "16", "--t-final", "0.1", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(tmp.path().join("c/table.csv")).unwrap();
    assert!(table.starts_with("scheme,m,h,mean_L1,mean_L2,mean_KL,status\n"));
    assert_eq!(table.lines().count(), 4);
    let o = frg(&["plot", "convergence", "c/table.csv", "-o", "c.svg"], tmp.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn oracle_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frg(&["oracle", "--out", "orc"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary = std::fs::read_to_string(tmp.path().join("orc/summary.txt")).unwrap();
    assert!(summary.lines().all(|l| l.starts_with("PASS")));
    let csv = std::fs::read_to_string(tmp.path().join("orc/mle_cell1.csv")).unwrap();
    assert!(csv.starts_with("delta_t,discrepancy\n"));
}

#[test]
fn shipped_configs_match_the_registry() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for p in frg_core::problems::registered_experiments() {
        let cfg = ExperimentConfig::load(&dir.join(format!("{}.cfg", p.id))).unwrap();
        assert_eq!(cfg, ExperimentConfig::from_preset(&p, frg_core::scheme::SchemeKind::Dfrg), "{}", p.id);
        n += 1;
    }
    assert_eq!(n, std::fs::read_dir(&dir).unwrap().count());
}
