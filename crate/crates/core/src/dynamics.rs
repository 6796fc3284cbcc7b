//! Time integration of the full rotating shallow-water system
//! `∂t s = −B(s) − 𝓛 s`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::grid::{Grid, Spectral};
use crate::operators::Operators;
use crate::propagator::{LinearPropagator, ModalPropagator};

/// Nonzero Christoffel symbols of the diagonal metric, per colatitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelSamples {
    /// `Γ¹₁₂ = Γ¹₂₁ = g1' / (2 g1)`
    pub g1_12: Vec<f64>,
    /// `Γ²₁₁ = −g1' / (2 g2)`
    pub g2_11: Vec<f64>,
    /// `Γ²₂₂ = g2' / (2 g2)`
    pub g2_22: Vec<f64>,
}

impl ChristoffelSamples {
    pub fn new(grid: &Grid) -> Self {
        let m = &grid.metric;
        let n = grid.n2;
        Self {
            g1_12: (0..n).map(|j| m.dg1[j] / (2.0 * m.g1[j])).collect(),
            g2_11: (0..n).map(|j| -m.dg1[j] / (2.0 * m.g2[j])).collect(),
            g2_22: (0..n).map(|j| m.dg2[j] / (2.0 * m.g2[j])).collect(),
        }
    }
}

/// `∂2` of a field whose mode-`m` profile has the parity of `m + shift`.
fn partial2(grid: &Grid, values: &[f64], shift: usize) -> Vec<f64> {
    let s = grid.to_spectral(values);
    let d = Spectral { modes: s.modes.iter().enumerate().map(|(m, b)| grid.d2(m + shift) * b).collect() };
    grid.from_spectral(&d)
}

fn partial1(grid: &Grid, values: &[f64]) -> Vec<f64> {
    grid.from_spectral(&grid.to_spectral(values).d1())
}

/// `∇_u w` through the Christoffel symbols.
pub fn covariant_derivative(u: &VectorField, w: &VectorField) -> VectorField {
    let g = &u.grid;
    let ch = ChristoffelSamples::new(g);
    let d1w1 = partial1(g, &w.c1);
    let d1w2 = partial1(g, &w.c2);
    // g1 w1 is smooth at the poles while w1 itself need not be
    let met = &g.metric;
    let cov1: Vec<f64> = (0..g.len()).map(|k| w.c1[k] * met.g1[k % g.n2]).collect();
    let d2cov1 = partial2(g, &cov1, 0);
    let d2w1: Vec<f64> =
        (0..g.len()).map(|k| (d2cov1[k] - w.c1[k] * met.dg1[k % g.n2]) / met.g1[k % g.n2]).collect();
    let d2w2 = partial2(g, &w.c2, 1);
    let mut out = VectorField::zeros(g);
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let k = g.idx(i, j);
            let (u1, u2, w1, w2) = (u.c1[k], u.c2[k], w.c1[k], w.c2[k]);
            out.c1[k] = u1 * d1w1[k] + u2 * d2w1[k] + ch.g1_12[j] * (u1 * w2 + u2 * w1);
            out.c2[k] = u1 * d1w2[k] + u2 * d2w2[k] + ch.g2_11[j] * u1 * w1 + ch.g2_22[j] * u2 * w2;
        }
    }
    out
}

/// `∇_u w` for `w` given analytically as `(p1, p2) ↦ (w1, w2)` and its
/// partial derivatives, by differentiating the embedded vector and
/// projecting onto the tangent plane.
pub fn extrinsic_covariant_derivative(
    grid: &Arc<Grid>,
    u: impl Fn(f64, f64) -> (f64, f64),
    w: impl Fn(f64, f64) -> (f64, f64),
) -> VectorField {
    let prof = &grid.profile;
    let embed_w = |p1: f64, p2: f64| -> [f64; 3] {
        let (a, b) = w(p1, p2);
        let (t1, t2) = prof.tangent_frame(p1, p2);
        [a * t1[0] + b * t2[0], a * t1[1] + b * t2[1], a * t1[2] + b * t2[2]]
    };
    let h = 1e-5;
    VectorField::from_fn(grid, |p1, p2| {
        let (u1, u2) = u(p1, p2);
        let mut dd = [0.0; 3];
        for c in 0..3 {
            let d1 = (embed_w(p1 + h, p2)[c] - embed_w(p1 - h, p2)[c]) / (2.0 * h);
            let d2 = (embed_w(p1, p2 + h)[c] - embed_w(p1, p2 - h)[c]) / (2.0 * h);
            dd[c] = u1 * d1 + u2 * d2;
        }
        let (t1, t2) = prof.tangent_frame(p1, p2);
        let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        // frame is orthogonal: coefficient = (dd·t_j) / |t_j|²
        (dot(&dd, &t1) / dot(&t1, &t1), dot(&dd, &t2) / dot(&t2, &t2))
    })
}

/// `B(u, h) = (∇_u u, ∇_u h + h div u)`, dealiased. The global mean of the
/// height part vanishes because `div` is the discrete adjoint of `−grad`.
pub fn nonlinearity(s: &State) -> State {
    let u = &s.u;
    let vel = covariant_derivative(u, u);
    let mass = &u.dot(&s.h.grad()) + &s.h.times(&u.div());
    State { u: vel.filter(), h: mass.filter() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Classical explicit Runge–Kutta.
    Rk4,
    /// Integrating-factor Runge–Kutta with the exact linear flow.
    Imex,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk4" => Ok(Self::Rk4),
            "imex" => Ok(Self::Imex),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Snapshot every `stride` steps.
    pub stride: usize,
    /// Fraction of the explicit stability limit allowed for RK4.
    pub safety: f64,
    /// State H^k norm that flags blow-up.
    pub ceiling: f64,
    /// Norm order for diagnostics.
    pub k: i32,
    /// `false` drops `B` (linear flow).
    pub nonlinear: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, scheme: Scheme::Rk4, t_end: 1.0, stride: 10, safety: 0.9, ceiling: 1e8, k: 3, nonlinear: true }
    }
}

/// Per-snapshot diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub h_mean: f64,
    pub energy: f64,
    pub hk: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has the initial state")
    }

    /// `max_t ‖s(t)‖_k` over the snapshots.
    pub fn max_hk(&self) -> f64 {
        self.diagnostics.iter().fold(0.0f64, |a, d| a.max(d.hk))
    }

    /// Largest `|mean h(t) − mean h(0)|`.
    pub fn mean_drift(&self) -> f64 {
        let h0 = self.diagnostics[0].h_mean;
        self.diagnostics.iter().fold(0.0f64, |a, d| a.max((d.h_mean - h0).abs()))
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        self.diagnostics.iter().fold(0.0f64, |a, d| a.max((d.energy - e0).abs() / e0))
    }
}

pub struct Integrator {
    pub ops: Operators,
    pub cfg: IntegratorConfig,
    prop: ModalPropagator,
}

/// Radius of the RK4 stability region on the imaginary axis.
const RK4_IMAG_LIMIT: f64 = 2.828;

impl Integrator {
    pub fn new(ops: Operators, cfg: IntegratorConfig) -> Result<Self> {
        if !(cfg.dt.is_finite() && cfg.dt != 0.0) || cfg.stride == 0 || !(cfg.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt = {}, stride = {}, t_end = {}",
                cfg.dt, cfg.stride, cfg.t_end
            )));
        }
        let prop = ModalPropagator::new(&ops);
        if cfg.scheme == Scheme::Rk4 {
            let limit = cfg.safety * RK4_IMAG_LIMIT / prop.max_frequency();
            if cfg.dt.abs() > limit {
                return Err(Error::InvalidConfig(format!("RK4 dt = {} exceeds stability limit {limit:.3e}", cfg.dt)));
            }
        }
        Ok(Self { ops, cfg, prop })
    }

    pub fn propagator(&self) -> &ModalPropagator {
        &self.prop
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.ops.grid
    }

    /// `−B(s) − 𝓛 s`
    pub fn rhs(&self, s: &State) -> State {
        let ls = self.ops.apply_l(s);
        if self.cfg.nonlinear {
            (&nonlinearity(s) + &ls).scale(-1.0)
        } else {
            ls.scale(-1.0)
        }
    }

    fn forcing(&self, s: &State) -> State {
        if self.cfg.nonlinear {
            nonlinearity(s).scale(-1.0)
        } else {
            State::zeros(self.grid())
        }
    }

    /// `e^{−τ 𝓛}`
    fn lin(&self, tau: f64, s: &State) -> State {
        self.prop.propagate(-tau, s)
    }

    pub fn step(&self, s: &State, dt: f64) -> State {
        match self.cfg.scheme {
            Scheme::Rk4 => {
                let k1 = self.rhs(s);
                let k2 = self.rhs(&s.axpy(0.5 * dt, &k1));
                let k3 = self.rhs(&s.axpy(0.5 * dt, &k2));
                let k4 = self.rhs(&s.axpy(dt, &k3));
                let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
                s.axpy(dt / 6.0, &incr)
            }
            Scheme::Imex => {
                let half = 0.5 * dt;
                let es = self.lin(half, s);
                let k1 = self.forcing(s);
                let k2 = self.forcing(&self.lin(half, &s.axpy(half, &k1)));
                let k3 = self.forcing(&es.axpy(half, &k2));
                let k4 = self.forcing(&self.lin(dt, s).axpy(dt, &self.lin(half, &k3)));
                let mid = self.lin(half, &k2.axpy(1.0, &k3));
                let combo = self.lin(dt, &k1).axpy(2.0, &mid).axpy(1.0, &k4);
                self.lin(dt, s).axpy(dt / 6.0, &combo)
            }
        }
    }

    fn diagnostics(&self, t: f64, s: &State) -> Result<Diagnostics> {
        Ok(Diagnostics { t, h_mean: s.h.mean(), energy: s.energy(), hk: s.hk_norm(self.cfg.k)? })
    }

    /// Integrates from `s0` over `[0, t_end]`; errors with the time of the
    /// first non-finite or over-ceiling snapshot.
    pub fn integrate(&self, s0: &State) -> Result<Trajectory> {
        let dt = self.cfg.dt.abs();
        let n_steps = (self.cfg.t_end / dt).round() as usize;
        let mut traj = Trajectory { times: vec![0.0], states: vec![s0.clone()], diagnostics: vec![] };
        traj.diagnostics.push(self.diagnostics(0.0, s0)?);
        let mut s = s0.clone();
        for n in 1..=n_steps {
            s = self.step(&s, dt);
            let t = n as f64 * dt;
            if !s.is_finite() {
                return Err(Error::BlowupDetected { t, reason: "non-finite state".into() });
            }
            if n % self.cfg.stride == 0 || n == n_steps {
                let d = self.diagnostics(t, &s)?;
                if d.hk > self.cfg.ceiling {
                    return Err(Error::BlowupDetected { t, reason: format!("H^k norm {:.3e} above ceiling", d.hk) });
                }
                traj.times.push(t);
                traj.states.push(s.clone());
                traj.diagnostics.push(d);
            }
        }
        Ok(traj)
    }
}

/// Solid-body rotation `u = ω v_∂1` (a zonal flow).
pub fn solid_body(grid: &Arc<Grid>, omega: f64) -> VectorField {
    VectorField::from_components(ScalarField::constant(grid, omega), ScalarField::zeros(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Params;
    use crate::geometry::SurfaceProfile;
    use crate::kernel::build_kernel_state;
    use crate::operators::CoriolisProfile;
    use crate::random;

    #[test]
    fn christoffel_on_sphere() {
        let g = Grid::sphere(8, 8).unwrap();
        let c = ChristoffelSamples::new(&g);
        for (j, t) in g.colat.iter().enumerate() {
            assert!((c.g1_12[j] - t.cos() / t.sin()).abs() < 1e-13);
            assert!((c.g2_11[j] + t.sin() * t.cos()).abs() < 1e-13);
            assert!(c.g2_22[j].abs() < 1e-15);
        }
    }

    #[test]
    fn solid_body_routes_agree() {
        for prof in [SurfaceProfile::sphere(), SurfaceProfile::bump(0.1)] {
            let g = Grid::new(prof, 16, 16).unwrap();
            let u = solid_body(&g, 1.0);
            let chr = covariant_derivative(&u, &u);
            let ext = extrinsic_covariant_derivative(&g, |_, _| (1.0, 0.0), |_, _| (1.0, 0.0));
            let inv = &u.dot(&u).scale(0.5).grad() + &u.rot_j().mul_scalar(&u.curl());
            let n = ext.l2_norm();
            assert!((&chr - &ext).l2_norm() / n < 1e-8);
            assert!((&inv - &ext).l2_norm() / n < 1e-8);
        }
    }

    #[test]
    fn vector_invariant_matches_christoffel_on_random_fields() {
        let g = Grid::sphere(48, 36).unwrap();
        let u = random::vector(&g, 6, 1.0, 4);
        let chr = covariant_derivative(&u, &u);
        let inv = &u.dot(&u).scale(0.5).grad() + &u.rot_j().mul_scalar(&u.curl());
        assert!((&chr - &inv).l2_norm() / chr.l2_norm() < 1e-12);
        // products stay below the dealiasing cut, so filtering is exact here
        let b = nonlinearity(&State { u: u.clone(), h: ScalarField::zeros(&g) }).u;
        assert!((&chr - &b).l2_norm() / chr.l2_norm() < 1e-12);
    }

    #[test]
    fn trivial_nonlinearity_cases() {
        let g = Grid::sphere(24, 16).unwrap();
        let h = random::scalar(&g, 6, 1.0, 1);
        let b = nonlinearity(&State { u: VectorField::zeros(&g), h: h.clone() });
        assert_eq!(b.l2_norm(), 0.0);
        let u = ScalarField::from_fn(&g, |_, t| t.cos().powi(2)).grad_perp();
        let hz = ScalarField::from_fn(&g, |_, t| t.cos().powi(3));
        let b = nonlinearity(&State { u, h: hz });
        assert!(b.h.l2_norm() < 1e-12);
    }

    fn integrator(eps: f64, delta: f64, scheme: Scheme, dt: f64, nonlinear: bool) -> Integrator {
        let g = Grid::sphere(24, 16).unwrap();
        let ops = Operators::new(&g, CoriolisProfile::cos(&g), Params::new(eps, delta).unwrap());
        let cfg = IntegratorConfig { dt, scheme, t_end: 1.0, stride: 10, nonlinear, ..Default::default() };
        Integrator::new(ops, cfg).unwrap()
    }

    #[test]
    fn mean_of_h_is_invariant_of_rhs() {
        let it = integrator(0.1, 0.1, Scheme::Imex, 0.01, true);
        let s = random::state(it.grid(), 8, 1.0, 3, 1.0);
        assert!(it.rhs(&s).h.area_integral().abs() < 1e-12);
        assert_eq!(it.rhs(&State::zeros(it.grid())).l2_norm(), 0.0);
    }

    #[test]
    fn rk4_rejects_unstable_dt() {
        let g = Grid::sphere(24, 16).unwrap();
        let ops = Operators::new(&g, CoriolisProfile::cos(&g), Params::new(0.01, 0.01).unwrap());
        let cfg = IntegratorConfig { dt: 0.01, ..Default::default() };
        assert!(matches!(Integrator::new(ops, cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn imex_linear_flow_is_exact() {
        let it = integrator(0.01, 0.01, Scheme::Imex, 0.05, false);
        let s = random::state(it.grid(), 8, 1.0, 5, 1.0);
        let tr = it.integrate(&s).unwrap();
        assert!(tr.energy_drift() < 1e-10);
        let exact = it.propagator().propagate(-1.0, &s);
        assert!((&exact - tr.last()).l2_norm() < 1e-10);
    }

    #[test]
    fn rk4_linear_energy_drift_is_fourth_order() {
        let drift = |dt: f64| {
            let it = integrator(1.0, 1.0, Scheme::Rk4, dt, false);
            let s = random::state(it.grid(), 6, 1.0, 6, 1.0);
            it.integrate(&s).unwrap().energy_drift()
        };
        let (a, b) = (drift(0.02), drift(0.01));
        let order = (a / b).log2();
        // RK4 energy error on a skew system is dominated by the O(dt^5)-per-step dissipation term
        assert!(order > 3.5, "{a:e} {b:e}");
    }

    #[test]
    fn kernel_state_stays_steady_at_small_amplitude() {
        let it = integrator(0.1, 0.1, Scheme::Imex, 0.01, true);
        let phi = ScalarField::from_fn(it.grid(), |_, t| t.cos().powi(3));
        let (s, _) = build_kernel_state(&it.ops, &phi).unwrap();
        let a = 1e-3;
        let s = s.scale(a);
        let tr = it.integrate(&s).unwrap();
        let drift = (tr.last() - &s).hk_norm(1).unwrap() / s.hk_norm(1).unwrap();
        assert!(drift < 10.0 * a, "{drift}");
        assert!(tr.mean_drift() < 1e-12);
    }
}
