//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `cargo test -p frg-cli --test acceptance`.

use std::time::Instant;

use frg_cli::config::ExperimentConfig;
use frg_cli::oracle::{kl_checks, mle_checks};
use frg_cli::run::{simulate, Simulation};
use frg_core::assembly::{DensityState, Discretization, FluxKind, VelocityField, VelocityMode};
use frg_core::mesh::{Mesh, MeshSpec};
use frg_core::metrics::{mean_error_over_time, observed_order};
use frg_core::problems::Velocity;
use frg_core::scheme::{apply_positivity_limiter, SchemeKind, Semidiscretization, LIMITER_EPS};
use frg_core::time::{ssprk3_step, Ssprk3Work};
use rayon::prelude::*;

use SchemeKind::{Dfrg, Dg, DgPlus};

struct Outcome {
    id: usize,
    title: &'static str,
    lines: Vec<(bool, String)>,
    seconds: f64,
}

fn cfg(id: &str, f: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(id, Dfrg).unwrap();
    f(&mut c);
    c
}

fn sim(c: &ExperimentConfig, scheme: SchemeKind, cells: usize) -> Simulation {
    simulate(c, scheme, cells).unwrap_or_else(|e| panic!("{} {scheme} m={cells}: {e}", c.name))
}

fn min_density(s: &Simulation) -> f64 {
    s.errors.iter().map(|e| e.min_density).fold(f64::INFINITY, f64::min)
}

fn max_drift(s: &Simulation) -> f64 {
    let m0 = s.errors[0].mass;
    s.errors.iter().map(|e| ((e.mass - m0) / m0).abs()).fold(0.0, f64::max)
}

fn status(s: &Simulation) -> String {
    match &s.trajectory.failure {
        None => "completed".into(),
        Some(f) => format!("failed at t = {:.4}", f.t.unwrap_or(f64::NAN)),
    }
}

/// Positivity: plain DG goes negative, DFRG completes positive.
fn positivity() -> Vec<(bool, String)> {
    let cases = [
        cfg("ex2_a", |c| c.t_final = 10.0),
        cfg("ex3", |_| {}),
        cfg("ex4_a", |_| {}),
        cfg("ex5", |_| {}),
        cfg("ex6", |_| {}),
    ];
    cases
        .par_iter()
        .map(|c| {
            let (dg, fr) = rayon::join(|| sim(c, Dg, c.cells), || sim(c, Dfrg, c.cells));
            let (dg_min, fr_min) = (min_density(&dg), min_density(&fr));
            let first_negative = dg.errors.iter().find(|e| e.min_density < 0.0).map(|e| e.t);
            let ok = dg_min < 0.0 && fr.trajectory.completed() && fr_min > 0.0;
            let text = format!(
                "{} m={} cfl={} T={}: dg min {dg_min:.3e} (first negative at {first_negative:?}), dfrg {} min {fr_min:.3e}",
                c.name,
                c.cells,
                c.cfl,
                c.t_final,
                status(&fr)
            );
            (ok, text)
        })
        .collect()
}

/// ex2 convergence table: DG KL infinite, DG+ and DFRG finite.
fn infinite_kl() -> Vec<(bool, String)> {
    let c = cfg("ex2_a", |c| c.t_final = 10.0);
    let jobs: Vec<(SchemeKind, usize)> = [Dg, DgPlus, Dfrg].iter().flat_map(|&s| [64, 128, 256].map(|m| (s, m))).collect();
    let rows: Vec<_> = jobs
        .par_iter()
        .map(|&(s, m)| {
            let r = sim(&c, s, m);
            (s, m, r.trajectory.completed(), mean_error_over_time(&r.errors).unwrap().kl)
        })
        .collect();
    let mut out = Vec::new();
    for s in [Dg, DgPlus, Dfrg] {
        let kls: Vec<f64> = rows.iter().filter(|r| r.0 == s).map(|r| r.3).collect();
        let done = rows.iter().filter(|r| r.0 == s).all(|r| r.2);
        let ok = done && if s == Dg { kls.iter().all(|k| *k == f64::INFINITY) } else { kls.iter().all(|k| k.is_finite()) };
        out.push((ok, format!("ex2 T=10 {s}: mean KL at m = 64, 128, 256: {}", kls.iter().map(|k| format!("{k:.4e}")).collect::<Vec<_>>().join(", "))));
    }
    out
}

/// ex1 L2 orders of DG and DFRG and the ratio of their mean errors.
fn matching_rates() -> Vec<(bool, String)> {
    let c = cfg("ex1", |_| {});
    let ms = [32, 64, 128, 256];
    let jobs: Vec<(SchemeKind, usize)> = [Dg, Dfrg].iter().flat_map(|&s| ms.map(|m| (s, m))).collect();
    let l2: Vec<f64> = jobs.par_iter().map(|&(s, m)| mean_error_over_time(&sim(&c, s, m).errors).unwrap().l2).collect();
    let (dg, fr) = l2.split_at(ms.len());
    let orders = |e: &[f64]| -> Vec<f64> { (1..ms.len()).map(|i| observed_order(e[i - 1], e[i], ms[i - 1], ms[i]).unwrap_or(f64::NAN)).collect() };
    let mut out = Vec::new();
    for (name, e) in [("dg", dg), ("dfrg", fr)] {
        let o = orders(e);
        out.push((o.iter().all(|v| (1.5..=2.5).contains(v)), format!("ex1 {name} L2 orders {o:.3?} (want [1.5, 2.5])")));
    }
    let ratios: Vec<f64> = dg.iter().zip(fr).map(|(a, b)| a.max(*b) / a.min(*b)).collect();
    out.push((ratios.iter().all(|r| *r <= 2.0), format!("ex1 mean L2 ratio dg/dfrg per m {ratios:.3?} (want <= 2)")));
    out
}

/// DFRG mass drift on ex1 (T=3) and ex2 (T=10).
fn mass() -> Vec<(bool, String)> {
    [cfg("ex1", |_| {}), cfg("ex2_a", |c| c.t_final = 10.0)]
        .par_iter()
        .map(|c| {
            let s = sim(c, Dfrg, c.cells);
            let d = max_drift(&s);
            (s.trajectory.completed() && d <= 1e-10, format!("{} T={} dfrg max relative mass drift {d:.3e} (want <= 1e-10)", c.name, c.t_final))
        })
        .collect()
}

/// Failure-mode switches: the stated success setting completes; the stated
/// failure setting fails, or a setting twice as harsh does.
fn failure_modes() -> Vec<(bool, String)> {
    let a = |nq: usize| sim(&cfg("failure_a", |c| c.quadrature_points = nq), Dfrg, 50);
    let b = |cfl: f64| sim(&cfg("failure_b", |c| c.cfl = cfl), Dfrg, 50);
    let (a11, a5, a4) = (a(11), a(5), a(4));
    let (b_small, b_stated, b_harsh) = (b(0.0125), b(0.0625), b(0.125));
    let switch = |ok: &Simulation, stated: &Simulation, harsh: &Simulation| {
        let fails = !stated.trajectory.completed() || !harsh.trajectory.completed();
        ok.trajectory.completed() && fails
    };
    vec![
        (
            switch(&a11, &a5, &a4),
            format!("failure_a: nq=11 {}; nq=5 {}; nq=4 {}", status(&a11), status(&a5), status(&a4)),
        ),
        (
            switch(&b_small, &b_stated, &b_harsh),
            format!(
                "failure_b: cfl=0.0125 {}; cfl=0.0625 {}; cfl=0.125 {}",
                status(&b_small),
                status(&b_stated),
                status(&b_harsh)
            ),
        ),
    ]
}

fn checks(v: Vec<frg_cli::oracle::Check>) -> Vec<(bool, String)> {
    v.into_iter().map(|c| (c.passed, format!("{}: {}", c.name, c.detail))).collect()
}

fn mle() -> Vec<(bool, String)> {
    let t = Instant::now();
    let mut out: Vec<_> = checks(mle_checks(None).unwrap())
        .into_iter()
        .filter(|(_, s)| s.starts_with("mle slope") || s.starts_with("mle smallest"))
        .collect();
    let secs = t.elapsed().as_secs_f64();
    out.push((secs <= 30.0, format!("runtime {secs:.2} s (want <= 30 s)")));
    out
}

fn kl_identity() -> Vec<(bool, String)> {
    let t = Instant::now();
    let mut out = checks(kl_checks(None).unwrap());
    let secs = t.elapsed().as_secs_f64();
    out.push((secs <= 60.0, format!("runtime {secs:.2} s (want <= 60 s)")));
    out
}

/// Spot checks of invariants also covered in depth by the unit suites.
fn invariants() -> Vec<(bool, String)> {
    let mut out = Vec::new();

    let d = Discretization::new(Mesh::new(MeshSpec::new(2, 4)).unwrap(), 2, 7).unwrap();
    let r = d.interpolate(|x| (9.0 * x[0]).sin() + (7.0 * x[1]).cos() + 0.2);
    let mut lim = r.coeffs.clone();
    apply_positivity_limiter(&d, &mut lim, LIMITER_EPS);
    let nb = d.n_basis();
    let drift = (0..d.mesh().n_cells())
        .filter(|&c| d.cell_mean(&r.coeffs[c * nb..(c + 1) * nb]) > 0.0)
        .map(|c| (d.cell_mean(&r.coeffs[c * nb..(c + 1) * nb]) - d.cell_mean(&lim[c * nb..(c + 1) * nb])).abs())
        .fold(0.0, f64::max);
    out.push((drift <= 1e-14, format!("limiter cell-mean change {drift:.1e}")));

    let constant = d.interpolate(|_| 1.3);
    let mut rhs = Vec::new();
    for kind in [Dg, Dfrg] {
        let vf = VelocityField::new(&d, Velocity::Constant { dim: 2, value: [1.0, 0.5] }, VelocityMode::Analytic).unwrap();
        let mut semi = Semidiscretization::new(d.clone(), vf, kind, FluxKind::Upwind).unwrap();
        rhs.push(semi.eval(&constant).unwrap());
    }
    let gap = rhs[0].coeffs.iter().zip(&rhs[1].coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push((gap <= 1e-12, format!("dfrg vs dg on a constant state in uniform flow: {gap:.1e}")));

    let err = |n: usize| {
        let mut y = vec![1.0];
        let mut next = vec![0.0];
        let mut work = Ssprk3Work::new(1);
        let h = 1.0 / n as f64;
        for k in 0..n {
            let mut f = |y: &[f64], t: f64, o: &mut [f64]| {
                o[0] = -y[0] + t.cos();
                Ok(())
            };
            ssprk3_step(&mut f, &y, k as f64 * h, h, &mut next, &mut work, &mut |_, _| 0).unwrap();
            std::mem::swap(&mut y, &mut next);
        }
        let t = 1.0f64;
        let exact = 0.5 * (t.cos() + t.sin()) + 0.5 * (-t).exp();
        (y[0] - exact).abs()
    };
    let order = (err(20) / err(40)).log2();
    out.push(((2.7..=3.3).contains(&order), format!("ssprk3 observed order {order:.3}")));

    let state = DensityState::new(vec![1.0; d.n_dofs()], nb);
    let mass = d.total_mass(&state);
    out.push(((mass - 1.0).abs() <= 1e-14, format!("unit density has unit mass ({mass})")));
    out
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Vec<(bool, String)>);
    let list: [Criterion; 8] = [
        (1, "positivity preservation", positivity),
        (2, "infinite KL for plain DG", infinite_kl),
        (3, "matching L1/L2 rates", matching_rates),
        (4, "mass conservation", mass),
        (5, "failure-mode switches", failure_modes),
        (6, "MLE consistency", mle),
        (7, "KL-growth identity", kl_identity),
        (8, "invariant spot checks", invariants),
    ];
    let start = Instant::now();
    let mut results: Vec<Outcome> = list
        .par_iter()
        .map(|&(id, title, f)| {
            let t = Instant::now();
            let lines = f();
            Outcome { id, title, lines, seconds: t.elapsed().as_secs_f64() }
        })
        .collect();
    results.sort_by_key(|o| o.id);
    let mut failed = 0;
    for o in &results {
        let ok = o.lines.iter().all(|l| l.0);
        failed += usize::from(!ok);
        println!("{} criterion {} ({}) [{:.1} s]", if ok { "PASS" } else { "FAIL" }, o.id, o.title, o.seconds);
        for (pass, text) in &o.lines {
            println!("    {} {text}", if *pass { "ok  " } else { "FAIL" });
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
