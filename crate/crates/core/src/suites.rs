//! Experiment suites behind the command-line tool.
//!
//! Every suite writes its tables under `<out>/<suite>/` and returns a
//! [`SuiteReport`] listing hard checks. A failing check makes the tool exit
//! with a nonzero status; errors (bad input, blow-up) are returned as `Err`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::averaging::{integrate_limit_equation, zonal_time_average, AveragingWindow};
use crate::blowup::{fit_exponent, oracle_scan, run_example1, run_example2, BlowupRecord, Example, PdeConfig, TorusField};
use crate::config::RunConfig;
use crate::dynamics::{Integrator, IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::fields::{Params, ScalarField, State};
use crate::grid::Grid;
use crate::io::{atomic_write, num, read_snapshot, write_snapshot, CsvTable};
use crate::kernel::{build_kernel_state, kernel_conditions, kernel_distance_report, project_kernel};
use crate::operators::{CoriolisProfile, Operators, Perturbation};
use crate::propagator::{LinearPropagator, ModalPropagator};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    VerifyOperators,
    VerifyKernel,
    Simulate,
    Average,
    Limit,
    Blowup,
    Project,
    All,
}

impl Suite {
    pub const RUNNABLE: [Suite; 6] =
        [Suite::VerifyOperators, Suite::VerifyKernel, Suite::Simulate, Suite::Average, Suite::Limit, Suite::Blowup];

    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyOperators => "verify-operators",
            Self::VerifyKernel => "verify-kernel",
            Self::Simulate => "simulate",
            Self::Average => "average",
            Self::Limit => "limit",
            Self::Blowup => "blowup",
            Self::Project => "project",
            Self::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::VerifyOperators, Self::VerifyKernel, Self::Simulate, Self::Average, Self::Limit, Self::Blowup, Self::Project, Self::All]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_owned()))
    }
}

/// A hard assertion: `value <= limit` (or `>=` when `at_least`).
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub at_least: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: false }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value <= self.limit
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.name().into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self, hash: &str) -> String {
        let mut out = format!("suite {} config_hash={hash}\n", self.suite);
        for c in &self.checks {
            let op = if c.at_least { ">=" } else { "<=" };
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {} = {:.6e} {op} {:.3e}", c.name, c.value, c.limit);
        }
        for n in &self.notes {
            let _ = writeln!(out, "note {n}");
        }
        out
    }

    fn table(&mut self, dir: &Path, file: &str, t: &CsvTable) -> Result<()> {
        let p = dir.join(file);
        t.write(&p)?;
        self.artifacts.push(p);
        Ok(())
    }

    fn finish(mut self, dir: &Path, hash: &str) -> Result<Self> {
        let p = dir.join("report.txt");
        atomic_write(&p, self.render(hash).as_bytes())?;
        self.artifacts.push(p);
        Ok(self)
    }
}

/// Runs one suite (or all runnable ones). `input` is the snapshot read by
/// `project`.
pub fn run_suite(suite: Suite, cfg: &RunConfig, input: Option<&Path>) -> Result<Vec<SuiteReport>> {
    Ok(match suite {
        Suite::All => Suite::RUNNABLE.iter().map(|&s| run_one(s, cfg, None)).collect::<Result<_>>()?,
        s => vec![run_one(s, cfg, input)?],
    })
}

fn run_one(suite: Suite, cfg: &RunConfig, input: Option<&Path>) -> Result<SuiteReport> {
    let dir = cfg.out.join(suite.name());
    let hash = cfg.hash();
    let mut rep = SuiteReport::new(suite);
    match suite {
        Suite::VerifyOperators => verify_operators(cfg, &dir, &hash, &mut rep)?,
        Suite::VerifyKernel => verify_kernel(cfg, &dir, &hash, &mut rep)?,
        Suite::Simulate => simulate(cfg, &dir, &hash, &mut rep)?,
        Suite::Average => average(cfg, &dir, &hash, &mut rep)?,
        Suite::Limit => limit(cfg, &dir, &hash, &mut rep)?,
        Suite::Blowup => blowup(cfg, &dir, &hash, &mut rep)?,
        Suite::Project => {
            let input = input.ok_or_else(|| Error::InvalidConfig("`project` needs an input snapshot".into()))?;
            project(cfg, input, &dir, &hash, &mut rep)?
        }
        Suite::All => unreachable!("expanded by run_suite"),
    }
    rep.finish(&dir, &hash)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Relative defects of the first-order calculus on one pair of fields.
pub fn identity_defects(f: &ScalarField, v: &crate::fields::VectorField) -> [f64; 5] {
    let gf = f.grad();
    let lap = f.laplacian();
    let hd = v.hodge();
    [
        (&gf.div() - &lap).l2_norm() / lap.l2_norm(),
        gf.curl().l2_norm() / gf.l2_norm(),
        f.grad_perp().div().l2_norm() / gf.l2_norm(),
        (gf.inner(v) + f.inner(&v.div())).abs() / (gf.l2_norm() * v.l2_norm()),
        (&(&hd.irr + &hd.inc) - v).l2_norm() / v.l2_norm(),
    ]
}

/// `‖[Δ, 𝓛_∂] s‖₃ / ‖u‖₃`: the commutator part that vanishes identically,
/// so its size is the grid's roundoff floor for commutator norms.
pub fn commutator_baseline(ops: &Operators, s: &State) -> Result<f64> {
    let c = &ops.laplacian(&ops.gravity_part(s)) - &ops.gravity_part(&ops.laplacian(s));
    Ok(c.filter().hk_norm(3)? / s.u.hk_norm(3)?)
}

/// Commutator defects at `ε = δ` for the exact profile and for `cos`
/// perturbed by `ε·sin²cos`: `(eps, exact, perturbed)`.
pub fn commutator_scan(grid: &std::sync::Arc<Grid>, s: &State, eps: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let exact = CoriolisProfile::exact(grid);
    let cos = CoriolisProfile::cos(grid);
    eps.iter()
        .map(|&e| {
            let p = Params::new(e, e)?;
            let d0 = Operators::new(grid, exact.clone(), p).commutator_defect(s, 3)?;
            let pert = CoriolisProfile::perturbed(&cos, grid, Perturbation::Sin2Cos, e);
            let d1 = Operators::new(grid, pert, p).commutator_defect(s, 3)?;
            Ok((e, d0, d1))
        })
        .collect()
}

fn verify_operators(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let g = cfg.grid()?;
    let ops = cfg.operators(&g, cfg.params())?;
    let (lmax, seed0) = (cfg.init.lmax, cfg.init.seed);
    let mut t = CsvTable::new(
        "operator identity defects",
        hash,
        &[
            ("seed", "1"),
            ("div_grad_minus_lap", "rel"),
            ("curl_grad", "rel"),
            ("div_jgrad", "rel"),
            ("adjointness", "rel"),
            ("hodge_reconstruction", "rel"),
            ("lap_fj_commutator", "rel"),
        ],
    );
    let mut worst = [0.0f64; 6];
    for i in 0..cfg.samples as u64 {
        let seed = seed0.wrapping_add(i);
        let f = random::scalar(&g, lmax, cfg.init.decay, seed);
        let v = random::vector(&g, lmax, cfg.init.decay, seed.wrapping_add(7919));
        let d = identity_defects(&f, &v);
        let lap_rot = ops.lap_rotation_residual(&v).l2_norm() / v.hk_norm(2)?;
        let mut row = vec![seed.to_string()];
        for (j, x) in d.iter().chain([lap_rot].iter()).enumerate() {
            worst[j] = worst[j].max(*x);
            row.push(num(*x));
        }
        t.push(row);
    }
    rep.table(dir, "identities.csv", &t)?;
    for (name, w) in ["div_grad_minus_lap", "curl_grad", "div_jgrad", "adjointness", "hodge_reconstruction"].iter().zip(worst) {
        rep.checks.push(Check::at_most(name, w, 1e-8));
    }
    rep.checks.push(Check::at_most("lap_fj_commutator", worst[5], 1e-7));

    let s = random::state(&g, lmax, cfg.init.decay, seed0, 1.0);
    let scan = commutator_scan(&g, &s, &[1e-1, 1e-2, 1e-3, 1e-4])?;
    let baseline = commutator_baseline(&ops, &s)?;
    let mut t = CsvTable::new(
        "commutator defects",
        hash,
        &[("eps", "1"), ("exact_defect", "rel H3"), ("perturbed_defect", "rel H3"), ("baseline", "rel H3")],
    );
    for &(e, d0, d1) in &scan {
        t.push(vec![num(e), num(d0), num(d1), num(baseline)]);
    }
    rep.table(dir, "commutator.csv", &t)?;
    let exact: Vec<f64> = scan[..3].iter().map(|r| r.1).collect();
    let spread = (max_of(exact.iter().copied()) - exact.iter().copied().fold(f64::INFINITY, f64::min))
        / max_of(exact.iter().copied()).max(f64::MIN_POSITIVE);
    rep.checks.push(Check::at_most("exact_defect_spread", spread, 0.1));
    rep.checks.push(Check::at_most("exact_defect_over_baseline", max_of(exact) / baseline, 10.0));
    let eps: Vec<f64> = scan.iter().map(|r| r.0).collect();
    let pert: Vec<f64> = scan.iter().map(|r| r.2).collect();
    let fit = fit_exponent(&eps, &pert)?;
    rep.checks.push(Check::at_most("perturbed_slope_error", (fit.p - 1.0).abs(), 0.15));
    rep.notes.push(format!("perturbed slope {:.6}", fit.p));
    Ok(())
}

/// Kernel and projection defects of one random state.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDefects {
    pub idempotency: f64,
    /// `‖𝓛 Π s‖₀ / ‖Π s‖₁`
    pub kernel_residual: f64,
    pub conditions: [f64; 3],
    pub distance_ratio: f64,
    pub inc_ratio: f64,
}

pub fn projection_defects(ops: &Operators, s: &State, k: i32) -> Result<ProjectionDefects> {
    let p = project_kernel(ops, s);
    let pp = project_kernel(ops, &p);
    let pn = p.l2_norm().max(f64::MIN_POSITIVE);
    let r = kernel_distance_report(ops, s, k)?;
    Ok(ProjectionDefects {
        idempotency: (&pp - &p).l2_norm() / pn,
        kernel_residual: ops.apply_l(&p).l2_norm() / p.hk_norm(1)?.max(f64::MIN_POSITIVE),
        conditions: kernel_conditions(ops, &p)?,
        distance_ratio: r.ratio(),
        inc_ratio: r.inc_ratio(),
    })
}

/// Builds a kernel state from a random zonal stream profile and returns the
/// larger of its characterisation residuals and its projection defect.
pub fn kernel_round_trip(ops: &Operators, lmax: usize, seed: u64) -> Result<(f64, f64)> {
    let phi = random::zonal_scalar(&ops.grid, lmax, 1.0, seed);
    let (ks, _) = build_kernel_state(ops, &phi)?;
    let conds = max_of(kernel_conditions(ops, &ks)?);
    let fixed = (&project_kernel(ops, &ks) - &ks).l2_norm() / ks.l2_norm();
    Ok((conds, fixed))
}

fn max_distance_ratio(ops: &Operators, cfg: &RunConfig) -> Result<f64> {
    let mut m = 0.0f64;
    for i in 0..cfg.samples as u64 {
        let s = random::state(&ops.grid, cfg.init.lmax, cfg.init.decay, cfg.init.seed.wrapping_add(i), 1.0);
        m = m.max(kernel_distance_report(ops, &s, cfg.k.max(1))?.ratio());
    }
    Ok(m)
}

fn verify_kernel(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let g = cfg.grid()?;
    let ops = cfg.operators(&g, cfg.params())?;
    let k = cfg.k.max(1);
    let mut t = CsvTable::new(
        "kernel projection defects",
        hash,
        &[
            ("seed", "1"),
            ("idempotency", "rel L2"),
            ("kernel_residual", "L2/H1"),
            ("div_u", "L2/H1"),
            ("div_fu", "L2/H1"),
            ("gradient_condition", "L2/H1"),
            ("distance_ratio", "1"),
            ("inc_ratio", "1"),
        ],
    );
    let (mut idem, mut kres, mut cond, mut ratio) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..cfg.samples as u64 {
        let seed = cfg.init.seed.wrapping_add(i);
        let s = random::state(&g, cfg.init.lmax, cfg.init.decay, seed, 1.0);
        let d = projection_defects(&ops, &s, k)?;
        idem = idem.max(d.idempotency);
        kres = kres.max(d.kernel_residual);
        cond = cond.max(max_of(d.conditions));
        ratio = ratio.max(d.distance_ratio);
        let mut row = vec![seed.to_string(), num(d.idempotency), num(d.kernel_residual)];
        row.extend(d.conditions.iter().map(|c| num(*c)));
        row.extend([num(d.distance_ratio), num(d.inc_ratio)]);
        t.push(row);
    }
    rep.table(dir, "projection.csv", &t)?;

    let (mut rt_cond, mut rt_fixed) = (0.0f64, 0.0f64);
    for i in 0..cfg.samples.min(10) as u64 {
        let (c, f) = kernel_round_trip(&ops, cfg.init.lmax, cfg.init.seed.wrapping_add(i))?;
        rt_cond = rt_cond.max(c);
        rt_fixed = rt_fixed.max(f);
    }
    let n2_fine = cfg.n2 + cfg.n2 / 3;
    let fine = Grid::new(cfg.profile()?, cfg.n1, n2_fine)?;
    let ratio_fine = max_distance_ratio(&cfg.operators(&fine, cfg.params())?, cfg)?;
    let mut t = CsvTable::new("distance estimate", hash, &[("n2", "1"), ("max_ratio", "1")]);
    t.push(vec![cfg.n2.to_string(), num(ratio)]);
    t.push(vec![n2_fine.to_string(), num(ratio_fine)]);
    rep.table(dir, "distance.csv", &t)?;

    rep.checks.push(Check::at_most("idempotency", idem, 1e-9));
    rep.checks.push(Check::at_most("kernel_residual", kres, 1e-7));
    rep.checks.push(Check::at_most("projected_conditions", cond, 1e-7));
    rep.checks.push(Check::at_most("round_trip_conditions", rt_cond, 1e-7));
    rep.checks.push(Check::at_most("round_trip_fixed_point", rt_fixed, 1e-7));
    let stability = (ratio / ratio_fine).max(ratio_fine / ratio);
    rep.checks.push(Check::at_most("distance_ratio_refinement", stability, 2.0));
    Ok(())
}

fn zonal_means_table(s: &State, hash: &str) -> CsvTable {
    let g = s.grid();
    let mut t = CsvTable::new(
        "zonal means",
        hash,
        &[("colatitude", "rad"), ("u1", "1/time"), ("u2", "1/time"), ("h", "length")],
    );
    let (a, b, c) = (s.u.comp1().zonal_mean(), s.u.comp2().zonal_mean(), s.h.zonal_mean());
    for j in 0..g.n2 {
        t.push(vec![num(g.colat[j]), num(a[j]), num(b[j]), num(c[j])]);
    }
    t
}

fn simulate(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    cfg.require_ratio()?;
    let g = cfg.grid()?;
    let ops = cfg.operators(&g, cfg.params())?;
    let s0 = cfg.initial_state(&ops)?;
    let it = Integrator::new(ops, cfg.integrator.clone())?;
    let tr = it.integrate(&s0)?;
    let mut t = CsvTable::new(
        "diagnostics",
        hash,
        &[("t", "time"), ("h_mean", "length"), ("energy", "L2^2"), ("hk_norm", &format!("H{}", cfg.k))],
    );
    for d in &tr.diagnostics {
        t.push(vec![num(d.t), num(d.h_mean), num(d.energy), num(d.hk)]);
    }
    rep.table(dir, "diagnostics.csv", &t)?;
    for (i, (s, time)) in tr.states.iter().zip(&tr.times).enumerate() {
        let p = dir.join("snapshots").join(format!("state_{i:05}.bin"));
        write_snapshot(&p, s, *time)?;
        rep.artifacts.push(p);
    }
    rep.table(dir, "zonal_means.csv", &zonal_means_table(tr.last(), hash))?;
    rep.checks.push(Check::at_most("h_mean_drift", tr.mean_drift(), 1e-10 * cfg.integrator.t_end.max(1.0)));
    rep.notes.push(format!("max H{} norm {:.6e}", cfg.k, tr.max_hk()));
    Ok(())
}

/// Integrator settings for an `ε`-scan member: the configured step is
/// scaled by `ε / cfg.eps` and the run ends at `t_end`.
fn scan_integrator(cfg: &RunConfig, eps: f64, t_end: f64) -> IntegratorConfig {
    IntegratorConfig { dt: cfg.integrator.dt * eps / cfg.eps, t_end, ..cfg.integrator.clone() }
}

fn average(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let g = cfg.grid()?;
    let mu = cfg.mu();
    let mut t = CsvTable::new(
        "zonal time average",
        hash,
        &[
            ("eps", "1"),
            ("delta", "1"),
            ("err_u", &format!("H{}", (cfg.k - 3).max(0))),
            ("err_h", &format!("H{}", (cfg.k - 2).max(0))),
            ("max_norm", &format!("H{}", cfg.k)),
            ("bound", "1"),
            ("ratio_u", "1"),
            ("ratio_h", "1"),
            ("profile_residual", "1"),
        ],
    );
    let mut errs = Vec::new();
    let mut last = None;
    for &eps in &cfg.eps_scan {
        let ops = cfg.operators(&g, Params::new(eps, mu * eps)?)?;
        let s0 = cfg.initial_state(&ops)?;
        let it = Integrator::new(ops.clone(), scan_integrator(cfg, eps, cfg.t_window))?;
        let tr = it.integrate(&s0)?;
        let r = zonal_time_average(&tr, &ops, cfg.t_window, cfg.k)?;
        t.push(vec![
            num(eps),
            num(mu * eps),
            num(r.err_u),
            num(r.err_h),
            num(r.max_norm),
            num(r.bound),
            num(r.ratio_u()),
            num(r.ratio_h()),
            num(r.profile_residual),
        ]);
        rep.checks.push(Check::at_most(&format!("profile_residual[eps={eps:e}]"), r.profile_residual, 1e-8));
        errs.push((eps, r.err_u));
        last = Some(r);
    }
    rep.table(dir, "time_average.csv", &t)?;
    for w in errs.windows(2) {
        let ((e0, a), (e1, b)) = (w[0], w[1]);
        if (e0 / e1 - 2.0).abs() < 1e-9 {
            let q = b / a;
            rep.checks.push(Check::at_least(&format!("halving_ratio_min[eps={e1:e}]"), q, 0.35));
            rep.checks.push(Check::at_most(&format!("halving_ratio_max[eps={e1:e}]"), q, 0.65));
        }
    }
    if let Some(r) = last {
        let mut p = CsvTable::new("fitted profiles", hash, &[("colatitude", "rad"), ("phi", "length^2/time"), ("psi", "1")]);
        for j in 0..g.n2 {
            p.push(vec![num(g.colat[j]), num(r.profiles.phi[j]), num(r.profiles.psi[j])]);
        }
        rep.table(dir, "profiles.csv", &p)?;
    }
    Ok(())
}

/// Window length and sampling density of the averaged nonlinearity.
pub const LIMIT_WINDOW: f64 = 50.0;
pub const LIMIT_SAMPLES_PER_PERIOD: f64 = 3.0;

/// Solution of the averaged equation at time `t` on `grid` with ratio `mu`.
pub fn limit_state(grid: &std::sync::Arc<Grid>, cfg: &RunConfig, v0: &State, t: f64) -> Result<(State, f64)> {
    let base = cfg.operators(grid, Params::new(1.0 / cfg.mu(), 1.0)?)?;
    let m = ModalPropagator::scaled(&base);
    let win = AveragingWindow::resolving(&m, LIMIT_WINDOW, LIMIT_SAMPLES_PER_PERIOD);
    let tr = integrate_limit_equation(v0, &m, win, t / 10.0, t, 10)?;
    Ok((tr.last().clone(), tr.max_mean_correction()))
}

/// `e^{t𝓛} s_δ(t)` for one member of the `δ`-scan, advanced by the
/// integrating-factor scheme with 50 steps per `δ`.
pub fn filtered_full_state(grid: &std::sync::Arc<Grid>, cfg: &RunConfig, v0: &State, delta: f64, t: f64) -> Result<State> {
    let ops = cfg.operators(grid, Params::new(delta / cfg.mu(), delta)?)?;
    let ic = IntegratorConfig { dt: delta / 50.0, scheme: Scheme::Imex, t_end: t, stride: usize::MAX, ..cfg.integrator.clone() };
    let it = Integrator::new(ops, ic)?;
    let tr = it.integrate(v0)?;
    Ok(it.propagator().propagate(t, tr.last()))
}

fn limit(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let g = cfg.coarse_grid()?;
    let base = cfg.operators(&g, Params::new(1.0 / cfg.mu(), 1.0)?)?;
    let v0 = cfg.initial_state(&base)?;
    let (vbar, corr) = limit_state(&g, cfg, &v0, cfg.limit_t)?;
    let mut t = CsvTable::new(
        "limit comparison",
        hash,
        &[("delta", "1"), ("eps", "1"), ("err_l2", "L2"), ("err_hk", &format!("H{}", cfg.k_prime))],
    );
    let mut errs = Vec::new();
    for &delta in &cfg.delta_scan {
        let w = filtered_full_state(&g, cfg, &v0, delta, cfg.limit_t)?;
        let d = &w - &vbar;
        let hk = if cfg.k_prime >= 1 { d.filter().hk_norm(cfg.k_prime)? } else { d.l2_norm() };
        t.push(vec![num(delta), num(delta / cfg.mu()), num(d.l2_norm()), num(hk)]);
        errs.push(d.l2_norm());
    }
    rep.table(dir, "limit.csv", &t)?;
    let worst_increase = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    rep.checks.push(Check::at_most("error_growth_along_scan", worst_increase, 1.0));
    rep.checks.push(Check::at_most("mean_correction", corr, 1e-10));
    rep.notes.push(format!("mu {} window {LIMIT_WINDOW}", cfg.mu()));
    Ok(())
}

fn example2_grid(eps: f64) -> usize {
    let octaves = (1e-2 / eps).log10().round().max(0.0) as u32;
    1024 << octaves
}

fn blowup(cfg: &RunConfig, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let cols: &[(&str, &str)] = &[
        ("example", "label"),
        ("eps", "1"),
        ("method", "label"),
        ("t_blow", "time"),
        ("resolved", "bool"),
        ("l2_drift", "rel"),
        ("oracle_gap", "rel"),
        ("agreement_window", "time"),
    ];
    let mut times = CsvTable::new("blow-up times", hash, cols);
    let mut fits = CsvTable::new(
        "blow-up exponents",
        hash,
        &[("example", "label"), ("p", "1"), ("ci95_half", "1"), ("points", "1")],
    );
    let push = |t: &mut CsvTable, r: &BlowupRecord| {
        t.push(vec![
            r.example.label().into(),
            num(r.eps),
            r.method.label().into(),
            num(r.t_blow),
            r.resolved.to_string(),
            num(r.l2_drift),
            num(r.oracle_gap),
            num(r.agreement_window),
        ])
    };
    for ex in [Example::Shear, Example::Coriolis] {
        let (recs, fit) = oracle_scan(ex, &cfg.blowup_eps, 1e3)?;
        for r in &recs {
            push(&mut times, r);
        }
        fits.push(vec![ex.label().into(), num(fit.p), num(fit.ci_half), fit.n.to_string()]);
        rep.checks.push(Check::at_most(&format!("{}_exponent_error", ex.label()), (fit.p - 0.5).abs(), 0.1));
        if !cfg.blowup_pde {
            continue;
        }
        for r in &recs {
            let pde = match ex {
                Example::Shear if r.eps >= 1e-2 => {
                    let c = PdeConfig::default();
                    run_example1(r.eps, &TorusField::from_fn(c.nx, c.ny, |x, y| x.sin() - y.sin()), &c)?
                }
                Example::Shear => continue,
                Example::Coriolis => run_example2(r.eps, &PdeConfig { nx: 1, ny: example2_grid(r.eps), ..Default::default() })?,
            };
            push(&mut times, &pde);
            let tag = format!("{}[eps={:e}]", ex.label(), r.eps);
            rep.checks.push(Check::at_most(&format!("{tag}_l2_drift"), pde.l2_drift, 1e-6));
            rep.checks.push(Check::at_most(&format!("{tag}_oracle_gap"), pde.oracle_gap, 0.05));
            rep.checks.push(Check::at_least(&format!("{tag}_agreement_fraction"), pde.agreement_window / r.t_blow, 0.8));
        }
    }
    rep.table(dir, "blowup_times.csv", &times)?;
    rep.table(dir, "exponents.csv", &fits)?;
    Ok(())
}

fn project(cfg: &RunConfig, input: &Path, dir: &Path, hash: &str, rep: &mut SuiteReport) -> Result<()> {
    let (s, time) = read_snapshot(input, None)?;
    let g = s.grid().clone();
    let ops = cfg.operators(&g, cfg.params())?;
    let p = project_kernel(&ops, &s);
    let out = dir.join("projected.bin");
    write_snapshot(&out, &p, time)?;
    rep.artifacts.push(out);
    let k = cfg.k.max(1);
    let r = kernel_distance_report(&ops, &s, k)?;
    let d = projection_defects(&ops, &s, k)?;
    let mut t = CsvTable::new(
        "kernel distance",
        hash,
        &[
            ("k", "1"),
            ("lhs", &format!("H{k}+H{}", k + 1)),
            ("rhs", &format!("H{}", k + 2)),
            ("ratio", "1"),
            ("inc_gap", &format!("H{k}")),
            ("inc_div", &format!("H{}", k + 1)),
            ("idempotency", "rel L2"),
            ("kernel_residual", "L2/H1"),
        ],
    );
    t.push(vec![
        k.to_string(),
        num(r.lhs),
        num(r.rhs),
        num(r.ratio()),
        num(r.inc_gap),
        num(r.inc_div),
        num(d.idempotency),
        num(d.kernel_residual),
    ]);
    rep.table(dir, "distance.csv", &t)?;
    rep.table(dir, "projected_zonal_means.csv", &zonal_means_table(&p, hash))?;
    rep.checks.push(Check::at_most("idempotency", d.idempotency, 1e-9));
    rep.notes.push(format!("kernel residual {:.3e} (aliasing-limited for states that are not band-limited)", d.kernel_residual));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str, out: &Path) -> RunConfig {
        let text = format!("eps = 0.1\ndelta = 0.1\nn1 = 16\nn2 = 12\nlmax = 4\nsamples = 3\n{extra}");
        RunConfig::parse(&text).unwrap().with_overrides(Some(out.to_owned()), None)
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::RUNNABLE.iter().chain(&[Suite::Project, Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn verify_operators_passes_on_sphere() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_suite(Suite::VerifyOperators, &small("", dir.path()), None).unwrap();
        assert!(rep[0].passed(), "{}", rep[0].render("x"));
        let csv = std::fs::read_to_string(dir.path().join("verify-operators/identities.csv")).unwrap();
        assert!(csv.starts_with("# operator identity defects config_hash="));
        assert_eq!(csv.lines().count(), 3 + 3);
    }

    #[test]
    fn simulate_then_project() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small("t_end = 0.02\ndt = 1e-3\nstride = 10\n", dir.path());
        let rep = run_suite(Suite::Simulate, &cfg, None).unwrap();
        assert!(rep[0].passed(), "{}", rep[0].render("x"));
        let snap = dir.path().join("simulate/snapshots/state_00002.bin");
        assert!(snap.exists());
        let rep = run_suite(Suite::Project, &cfg, Some(&snap)).unwrap();
        assert!(rep[0].passed(), "{}", rep[0].render("x"));
        assert!(matches!(run_suite(Suite::Project, &cfg, None), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn simulate_enforces_the_ratio_bound() {
        let dir = tempfile::tempdir().unwrap();
        let text = "eps = 0.01\ndelta = 0.1\nn1 = 16\nn2 = 12\n";
        let cfg = RunConfig::parse(text).unwrap().with_overrides(Some(dir.path().to_owned()), None);
        assert!(matches!(run_suite(Suite::Simulate, &cfg, None), Err(Error::Config(_))));
    }

    #[test]
    fn blowup_table_has_one_row_per_eps() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_suite(Suite::Blowup, &small("", dir.path()), None).unwrap();
        assert!(rep[0].passed(), "{}", rep[0].render("x"));
        let csv = std::fs::read_to_string(dir.path().join("blowup/blowup_times.csv")).unwrap();
        assert_eq!(csv.lines().filter(|l| l.starts_with("example1,")).count(), 3);
        assert!(csv.lines().nth(1).unwrap().contains("t_blow[time]"));
    }

    #[test]
    fn example2_grid_grows_with_stiffness() {
        assert_eq!(example2_grid(1e-2), 1024);
        assert_eq!(example2_grid(1e-3), 2048);
        assert_eq!(example2_grid(1e-4), 4096);
    }
}
