//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! (written straight to stdout so it shows without `--nocapture`).

use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use zonalsim::averaging::{OperatorKind, OperatorMatrix};
use zonalsim::config::RunConfig;
use zonalsim::dynamics::{Integrator, IntegratorConfig, Scheme};
use zonalsim::kernel::kernel_distance_report;
use zonalsim::propagator::LinearPropagator;
use zonalsim::suites::{
    commutator_baseline, commutator_scan, identity_defects, kernel_round_trip, projection_defects, run_suite, Suite,
    SuiteReport,
};
use zonalsim::{random, CoriolisProfile, Grid, Operators, Params, SurfaceProfile};

fn verdict(n: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} {tag} {title}: {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn exact_ops(g: &Arc<Grid>, eps: f64, delta: f64) -> Operators {
    Operators::new(g, CoriolisProfile::exact(g), Params::new(eps, delta).unwrap())
}

fn config(text: &str, out: &Path) -> RunConfig {
    RunConfig::parse(text).unwrap().with_overrides(Some(out.to_owned()), None)
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn render(reps: &[SuiteReport]) -> String {
    reps.iter().map(|r| r.render("-")).collect()
}

#[test]
fn c01_operator_identities() {
    let t0 = Instant::now();
    let g = Grid::sphere(64, 48).unwrap();
    let mut worst = [0.0f64; 5];
    for seed in 0..20 {
        let f = random::scalar(&g, 12, 1.0, seed);
        let v = random::vector(&g, 12, 1.0, seed + 100);
        for (w, d) in worst.iter_mut().zip(identity_defects(&f, &v)) {
            *w = w.max(d);
        }
    }
    let el = t0.elapsed();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    verdict(
        1,
        "operator identities",
        max <= 1e-8 && el < Duration::from_secs(30),
        format!("max defect {max:.2e} (div grad, curl grad, div J grad, adjoint, Hodge = {}) in {el:.1?}", sci(&worst)),
    );
}

#[test]
fn c02_laplacian_rotation_commutator() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for profile in [SurfaceProfile::sphere(), SurfaceProfile::bump(0.1)] {
        let g = Grid::new(profile, 64, 48).unwrap();
        let ops = exact_ops(&g, 0.1, 0.1);
        for seed in 0..20 {
            let u = random::vector(&g, 12, 1.0, seed);
            worst = worst.max(ops.lap_rotation_residual(&u).l2_norm() / u.hk_norm(2).unwrap());
        }
    }
    let el = t0.elapsed();
    verdict(
        2,
        "[Δ, FJ] identity",
        worst <= 1e-7 && el < Duration::from_secs(60),
        format!("max ‖residual‖₀/‖u‖₂ = {worst:.2e} over sphere and bump:0.1 in {el:.1?}"),
    );
}

#[test]
fn c03_commutator_exact_case() {
    let g = Grid::sphere(64, 48).unwrap();
    let s = random::state(&g, 12, 1.0, 7, 1.0);
    let scan = commutator_scan(&g, &s, &[1e-1, 1e-2, 1e-3]).unwrap();
    let d: Vec<f64> = scan.iter().map(|r| r.1).collect();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = (hi - lo) / hi;
    let baseline = commutator_baseline(&exact_ops(&g, 0.1, 0.1), &s).unwrap();
    verdict(
        3,
        "exact-case commutator is ε-free",
        spread < 0.1 && hi <= 10.0 * baseline,
        format!("defects [{}], spread {:.1}%, baseline {baseline:.3e}, max/baseline {:.2}", sci(&d), 100.0 * spread, hi / baseline),
    );
}

#[test]
fn c04_commutator_perturbed_slope() {
    let g = Grid::sphere(64, 48).unwrap();
    let s = random::state(&g, 12, 1.0, 7, 1.0);
    let scan = commutator_scan(&g, &s, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let eps: Vec<f64> = scan.iter().map(|r| r.0).collect();
    let d: Vec<f64> = scan.iter().map(|r| r.2).collect();
    let fit = zonalsim::blowup::fit_exponent(&eps, &d).unwrap();
    verdict(
        4,
        "perturbed commutator slope",
        (fit.p - 1.0).abs() <= 0.15,
        format!("slope {:.4} over ε ∈ [1e-4, 1e-1], defects [{}]", fit.p, sci(&d)),
    );
}

#[test]
fn c05_kernel_projection() {
    let g = Grid::sphere(64, 48).unwrap();
    let ops = exact_ops(&g, 0.1, 0.1);
    let (mut idem, mut kres, mut cond) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100 {
        let s = random::state(&g, 8, 1.0, seed, 1.0);
        let d = projection_defects(&ops, &s, 1).unwrap();
        idem = idem.max(d.idempotency);
        kres = kres.max(d.kernel_residual);
        cond = cond.max(d.conditions.iter().cloned().fold(0.0, f64::max));
    }
    let (mut rt_c, mut rt_f) = (0.0f64, 0.0f64);
    for seed in 0..20 {
        let (c, f) = kernel_round_trip(&ops, 8, seed).unwrap();
        rt_c = rt_c.max(c);
        rt_f = rt_f.max(f);
    }
    verdict(
        5,
        "kernel projection",
        idem <= 1e-9 && kres <= 1e-7 && cond <= 1e-7 && rt_c <= 1e-7 && rt_f <= 1e-7,
        format!("Π²−Π {idem:.1e}, ‖𝓛Πs‖₀/‖Πs‖₁ {kres:.1e}, conditions {cond:.1e}, round trip {rt_c:.1e}/{rt_f:.1e}"),
    );
}

#[test]
fn c06_distance_estimate() {
    let mut maxima = Vec::new();
    for n2 in [48, 64] {
        let g = Grid::sphere(64, n2).unwrap();
        let ops = exact_ops(&g, 0.1, 0.1);
        let m = (0..100)
            .map(|seed| kernel_distance_report(&ops, &random::state(&g, 8, 1.0, seed, 1.0), 1).unwrap().ratio())
            .fold(0.0f64, f64::max);
        maxima.push(m);
    }
    let stability = (maxima[0] / maxima[1]).max(maxima[1] / maxima[0]);
    verdict(
        6,
        "distance estimate",
        maxima.iter().all(|m| m.is_finite()) && stability <= 2.0,
        format!("max lhs/rhs {:.4e} (n2 = 48), {:.4e} (n2 = 64), factor {stability:.3}", maxima[0], maxima[1]),
    );
}

#[test]
fn c07_linear_flow_isometry() {
    let g = Grid::sphere(16, 16).unwrap();
    let ops = exact_ops(&g, 1e-2, 1e-2);
    let s0 = random::state(&g, 4, 1.0, 1, 1e-6);
    let dense = OperatorMatrix::assemble(&ops, OperatorKind::Full).unwrap();
    let exact = dense.exp(-1.0, &s0);
    let dt = 1e-2;
    let cfg = IntegratorConfig { dt, scheme: Scheme::Imex, t_end: 1.0, stride: 1, nonlinear: false, ..Default::default() };
    let it = Integrator::new(ops.clone(), cfg).unwrap();
    let tr = it.integrate(&s0).unwrap();
    let gap = (tr.last() - &exact).l2_norm() / s0.l2_norm();
    let drift = tr.energy_drift();

    let rk = IntegratorConfig { dt: 5e-5, scheme: Scheme::Rk4, t_end: 1.0, stride: 1000, nonlinear: false, ..Default::default() };
    let rk_drift = Integrator::new(ops, rk).unwrap().integrate(&s0).unwrap().energy_drift();
    verdict(
        7,
        "linear flow isometry",
        drift <= 1e-8 && rk_drift <= 1e-8 && gap <= 10.0 * dt.powi(4),
        format!(
            "energy drift {drift:.1e} (integrating factor), {rk_drift:.1e} (RK4, dt 5e-5); stepped vs eigen {gap:.1e} <= {:.0e}; max |ω| {:.0}",
            10.0 * dt.powi(4),
            it.propagator().max_frequency()
        ),
    );
}

#[test]
fn c08_uniform_bound() {
    let g = Grid::sphere(64, 48).unwrap();
    let mut maxima = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let ops = exact_ops(&g, eps, eps);
        let s0 = random::state(&g, 4, 1.0, 1, 0.5);
        let cfg = IntegratorConfig {
            dt: (eps / 2.0).min(1e-2),
            scheme: Scheme::Imex,
            t_end: 0.5,
            stride: 1,
            ..Default::default()
        };
        maxima.push(Integrator::new(ops, cfg).unwrap().integrate(&s0).unwrap().max_hk());
    }
    let (lo, hi) = maxima.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let var = (hi - lo) / lo;
    verdict(
        8,
        "uniform H³ bound",
        var <= 0.2,
        format!("max_(t≤0.5) ‖s‖₃ = {maxima:.4?} for ε = δ ∈ {{1e-1, 1e-2, 1e-3}}, variation {:.1}%", 100.0 * var),
    );
}

#[test]
fn c09_time_average_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let text = "eps = 0.02\ndelta = 0.02\ncoriolis = exact\nscheme = imex\ndt = 0.005\nstride = 1\n\
                init = random\nlmax = 4\namplitude = 0.5\nseed = 1\neps_scan = 0.02,0.01,0.005\nt_window = 0.5\n";
    let cfg = config(text, dir.path());
    let t0 = Instant::now();
    let reps = run_suite(Suite::Average, &cfg, None).unwrap();
    let per_eps = t0.elapsed() / 3;
    let csv = std::fs::read_to_string(dir.path().join("average/time_average.csv")).unwrap();
    let errs: Vec<String> = csv.lines().skip(3).map(|l| l.split(',').nth(2).unwrap().to_owned()).collect();
    verdict(
        9,
        "zonal time-average scaling",
        reps[0].passed() && per_eps < Duration::from_secs(600),
        format!("err_u {errs:?} for ε = 0.02, 0.01, 0.005; {:?} per ε\n{}", per_eps, render(&reps).trim_end()),
    );
}

#[test]
fn c10_limit_equation() {
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in 1..=3u64 {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "mu = 1\ndelta = 0.1\ncoriolis = exact\ninit = prepared\nlmax = 6\nwave_fraction = 0.03\namplitude = 0.5\n\
             seed = {seed}\ndelta_scan = 0.1,0.03,0.01\nlimit_t = 0.25\ncoarse_n1 = 16\ncoarse_n2 = 12\n"
        );
        let reps = run_suite(Suite::Limit, &config(&text, dir.path()), None).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("limit/limit.csv")).unwrap();
        let errs: Vec<&str> = csv.lines().skip(3).map(|l| l.split(',').nth(2).unwrap()).collect();
        lines.push(format!("seed {seed}: {}", errs.join(" > ")));
        pass &= reps[0].passed();
    }
    verdict(10, "limit equation", pass, format!("‖e^(t𝓛)s(t) − V̄(t)‖ at t = 0.25, δ = 0.1, 0.03, 0.01: {}", lines.join("; ")));
}

#[test]
fn c11_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("eps = 0.1\ndelta = 0.1\nblowup_eps = 1e-2,1e-3,1e-4\nblowup_pde = true\n", dir.path());
    let reps = run_suite(Suite::Blowup, &cfg, None).unwrap();
    let exps = std::fs::read_to_string(dir.path().join("blowup/exponents.csv")).unwrap();
    let fits: Vec<&str> = exps.lines().skip(3).collect();
    verdict(11, "blow-up examples", reps[0].passed(), format!("fits {fits:?}\n{}", render(&reps).trim_end()));
}

#[test]
fn c12_determinism() {
    let text = "eps = 0.1\ndelta = 0.1\nn1 = 16\nn2 = 12\nlmax = 4\nsamples = 4\nt_end = 0.05\nstride = 5\nseed = 11\n";
    let run = |dir: &Path| {
        let cfg = config(text, dir);
        for s in [Suite::VerifyOperators, Suite::VerifyKernel, Suite::Simulate, Suite::Blowup] {
            run_suite(s, &cfg, None).unwrap();
        }
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let mut files = Vec::new();
    let mut same = true;
    for suite in ["verify-operators", "verify-kernel", "simulate", "blowup"] {
        for e in std::fs::read_dir(a.path().join(suite)).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "csv") {
                let rel = p.strip_prefix(a.path()).unwrap().to_owned();
                same &= std::fs::read(&p).unwrap() == std::fs::read(b.path().join(&rel)).unwrap();
                files.push(rel.display().to_string());
            }
        }
    }
    files.sort();
    verdict(12, "determinism", same && files.len() >= 7, format!("{} CSV files byte-identical across two runs: {files:?}", files.len()));
}
