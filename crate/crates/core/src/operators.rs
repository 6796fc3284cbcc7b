//! The large linear operator, the zero-order corrector and the commutator
//! algebra built from them.
//!
//! All commutators are evaluated by composing the discrete operators on
//! sampled fields.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{Params, ScalarField, State, VectorField};
use crate::grid::Grid;
use crate::quadrature::cumulative_integration;

/// Zonal perturbation shapes `η(p2)` vanishing at both poles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    /// `sin² p2 cos p2`
    Sin2Cos,
    /// `sin⁴ p2`
    Sin4,
}

impl Perturbation {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "sin2cos" => Ok(Self::Sin2Cos),
            "sin4" => Ok(Self::Sin4),
            other => Err(Error::InvalidConfig(format!("unknown perturbation `{other}`"))),
        }
    }

    fn eval(self, t: f64) -> (f64, f64) {
        let (s, c) = t.sin_cos();
        match self {
            Self::Sin2Cos => (s * s * c, 2.0 * s * c * c - s * s * s),
            Self::Sin4 => (s.powi(4), 4.0 * s.powi(3) * c),
        }
    }
}

/// Coriolis parameter `F(p2)` and `∂2 F` at the colatitude nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CoriolisProfile {
    pub name: String,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    /// Constant in `∂2F ≈ C_F √(g1 g2)`.
    pub c_f: f64,
}

impl CoriolisProfile {
    /// `F = cos p2`.
    pub fn cos(grid: &Grid) -> Self {
        Self {
            name: "cos".into(),
            f: grid.colat.iter().map(|t| t.cos()).collect(),
            df: grid.colat.iter().map(|t| -t.sin()).collect(),
            c_f: -1.0,
        }
    }

    /// `F = 1 + C_F ∫_0^{p2} √(g1 g2)` with `C_F` chosen so that `F(π) = -1`.
    pub fn exact(grid: &Grid) -> Self {
        // ∫_0^{p2} √(g1 g2) dp2 = ∫_x^1 R √g2 dx
        let q: Vec<f64> = (0..grid.n2).map(|j| grid.metric.r[j] * grid.metric.g2[j].sqrt()).collect();
        let total: f64 = q.iter().zip(&grid.wx).map(|(a, w)| a * w).sum();
        let c = cumulative_integration(&grid.x, &grid.wx);
        let c_f = -2.0 / total;
        let f = (0..grid.n2)
            .map(|i| {
                let below: f64 = (0..grid.n2).map(|j| c[(i, j)] * q[j]).sum();
                1.0 + c_f * (total - below)
            })
            .collect();
        let df = (0..grid.n2).map(|j| c_f * grid.metric.sqrt_detg[j]).collect();
        Self { name: "exact".into(), f, df, c_f }
    }

    /// `base + size · η`.
    pub fn perturbed(base: &Self, grid: &Grid, eta: Perturbation, size: f64) -> Self {
        let mut out = base.clone();
        for (j, &t) in grid.colat.iter().enumerate() {
            let (e, de) = eta.eval(t);
            out.f[j] += size * e;
            out.df[j] += size * de;
        }
        out.name = format!("{}+{size:e}*{eta:?}", base.name);
        out
    }

    /// Parses `cos`, `exact` or `perturbed:<eta>,<size|eps>` (over `cos`).
    pub fn parse(spec: &str, grid: &Grid, eps: f64) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "cos" => Ok(Self::cos(grid)),
            "exact" => Ok(Self::exact(grid)),
            _ => {
                let rest = spec
                    .strip_prefix("perturbed:")
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown Coriolis profile `{spec}`")))?;
                let (eta, size) = rest.split_once(',').unwrap_or((rest, "eps"));
                let size = match size.trim() {
                    "eps" => eps,
                    s => s.parse().map_err(|_| Error::InvalidConfig(format!("bad perturbation size `{s}`")))?,
                };
                Ok(Self::perturbed(&Self::cos(grid), grid, Perturbation::parse(eta)?, size))
            }
        }
    }

    pub fn field(&self, grid: &Arc<Grid>) -> ScalarField {
        ScalarField::from_zonal(grid, &self.f)
    }

    /// `∇F = (0, ∂2F / g2)`.
    pub fn grad(&self, grid: &Arc<Grid>) -> VectorField {
        let c2: Vec<f64> = (0..grid.n2).map(|j| self.df[j] / grid.metric.g2[j]).collect();
        VectorField::from_components(ScalarField::zeros(grid), ScalarField::from_zonal(grid, &c2))
    }

    /// `((∂2F)√(g1g2) − C_F g1 g2) / g2`.
    pub fn defect_field(&self, grid: &Arc<Grid>) -> ScalarField {
        let m = &grid.metric;
        let d: Vec<f64> =
            (0..grid.n2).map(|j| (self.df[j] * m.sqrt_detg[j] - self.c_f * m.g1[j] * m.g2[j]) / m.g2[j]).collect();
        ScalarField::from_zonal(grid, &d)
    }

    /// Measured `C_F'·ε`: H^k norm of the defect field.
    pub fn defect_norm(&self, grid: &Arc<Grid>, k: u32) -> f64 {
        self.defect_field(grid).hk_norm(k)
    }

    /// Endpoint values extrapolated from the node polynomial.
    pub fn pole_values(&self, grid: &Grid) -> (f64, f64) {
        let eval = |x0: f64| -> f64 {
            // Lagrange interpolation through (x_j, F_j)
            let mut acc = 0.0;
            for j in 0..grid.n2 {
                let mut l = 1.0;
                for k in 0..grid.n2 {
                    if k != j {
                        l *= (x0 - grid.x[k]) / (grid.x[j] - grid.x[k]);
                    }
                }
                acc += l * self.f[j];
            }
            acc
        };
        (eval(1.0), eval(-1.0))
    }
}

/// `a = μ² F²`, `b = 2 μ F` with `μ = δ/ε`.
#[derive(Clone, Debug)]
pub struct CorrectorCoeffs {
    pub a: ScalarField,
    pub b: ScalarField,
    /// `J ∇b`, computed from the analytic `∂2 F`.
    pub jgrad_b: VectorField,
}

/// Linear operators for one grid, Coriolis profile and parameter pair.
#[derive(Clone, Debug)]
pub struct Operators {
    pub grid: Arc<Grid>,
    pub coriolis: CoriolisProfile,
    pub params: Params,
    pub f: ScalarField,
    pub grad_f: VectorField,
    pub jgrad_f: VectorField,
}

impl Operators {
    pub fn new(grid: &Arc<Grid>, coriolis: CoriolisProfile, params: Params) -> Self {
        let f = coriolis.field(grid);
        let grad_f = coriolis.grad(grid);
        let jgrad_f = grad_f.rot_j();
        Self { grid: grid.clone(), coriolis, params, f, grad_f, jgrad_f }
    }

    pub fn with_params(&self, params: Params) -> Self {
        Self { params, ..self.clone() }
    }

    /// `(∇h, div u)`
    pub fn gravity_part(&self, s: &State) -> State {
        State { u: s.h.grad(), h: s.u.div() }
    }

    /// `(F J u, 0)`
    pub fn coriolis_part(&self, s: &State) -> State {
        State { u: s.u.rot_j().mul_scalar(&self.f), h: ScalarField::zeros(&self.grid) }
    }

    /// `(1/δ) 𝓛_∂ + (1/ε) 𝓛_0`
    pub fn apply_l(&self, s: &State) -> State {
        self.gravity_part(s).scale(1.0 / self.params.delta).axpy(1.0 / self.params.eps, &self.coriolis_part(s))
    }

    /// `𝓛_∂ + μ 𝓛_0 = δ 𝓛`
    pub fn apply_l_scaled(&self, s: &State) -> State {
        self.gravity_part(s).axpy(self.params.mu(), &self.coriolis_part(s))
    }

    pub fn corrector(&self) -> CorrectorCoeffs {
        let mu = self.params.mu();
        let a = self.f.map(|v| mu * mu * v * v);
        let b = self.f.scale(2.0 * mu);
        let jgrad_b = self.jgrad_f.scale(2.0 * mu);
        CorrectorCoeffs { a, b, jgrad_b }
    }

    pub fn corrector_diagonal(&self, s: &State, c: &CorrectorCoeffs) -> State {
        State { u: s.u.mul_scalar(&c.a), h: s.h.times(&c.a) }
    }

    pub fn corrector_coupling(&self, s: &State, c: &CorrectorCoeffs) -> State {
        State { u: c.jgrad_b.mul_scalar(&s.h), h: c.jgrad_b.dot(&s.u) }
    }

    pub fn apply_corrector(&self, s: &State, c: &CorrectorCoeffs) -> State {
        &self.corrector_diagonal(s, c) + &self.corrector_coupling(s, c)
    }

    /// `(Δ u, Δ h)`
    pub fn laplacian(&self, s: &State) -> State {
        State { u: s.u.laplacian(), h: s.h.laplacian() }
    }

    pub fn corrected_laplacian(&self, s: &State, c: &CorrectorCoeffs) -> State {
        &self.laplacian(s) - &self.apply_corrector(s, c)
    }

    /// `[Δ − 𝓝, 𝓛] s`
    pub fn commutator(&self, s: &State) -> State {
        let c = self.corrector();
        let lhs = self.corrected_laplacian(&self.apply_l(s), &c);
        let rhs = self.apply_l(&self.corrected_laplacian(s, &c));
        &lhs - &rhs
    }

    /// `ε ‖[Δ − 𝓝, 𝓛] s‖_k / ‖u‖_k`, the commutator norm taken on the
    /// dealiased modes (Laplacian powers amplify roundoff in the unresolved
    /// near-pole modes).
    pub fn commutator_defect(&self, s: &State, k: i32) -> Result<f64> {
        let un = s.u.hk_norm(k)?;
        if un == 0.0 {
            return Err(Error::DegenerateInput("velocity has zero H^k norm".into()));
        }
        Ok(self.params.eps * self.commutator(s).filter().hk_norm(k)? / un)
    }

    /// `‖[Δ, F J] u − (1 + 𝔠_J)(𝒜^s) u‖_k / ‖u‖_{k+2}` on the dealiased modes.
    pub fn lap_rotation_defect(&self, u: &VectorField, k: i32) -> Result<f64> {
        let un = u.hk_norm(k + 2)?;
        if un == 0.0 {
            return Err(Error::DegenerateInput("velocity has zero H^k norm".into()));
        }
        let r = self.lap_rotation_residual(u).filter();
        Ok(if k == 0 { r.l2_norm() } else { r.hk_norm(k)? } / un)
    }

    /// `(J∇F) div v`
    pub fn rotation_coupling(&self, v: &VectorField) -> VectorField {
        self.jgrad_f.mul_scalar(&v.div())
    }

    /// `∇((∇F)·(J v))`
    pub fn rotation_coupling_adj(&self, v: &VectorField) -> VectorField {
        self.grad_f.dot(&v.rot_j()).grad()
    }

    /// `𝒜 + 𝒜*`
    pub fn rotation_coupling_sym(&self, v: &VectorField) -> VectorField {
        &self.rotation_coupling(v) + &self.rotation_coupling_adj(v)
    }

    /// `J⁻¹ op(J v)`
    pub fn conj_by_rotation(&self, op: impl Fn(&VectorField) -> VectorField, v: &VectorField) -> VectorField {
        op(&v.rot_j()).rot_j_inv()
    }

    /// `[Δ, F J] u`
    pub fn lap_fj_commutator(&self, u: &VectorField) -> VectorField {
        let fj = |w: &VectorField| w.rot_j().mul_scalar(&self.f);
        &fj(u).laplacian() - &fj(&u.laplacian())
    }

    /// `[Δ, F J] u − (1 + 𝔠_J)(𝒜^s) u`
    pub fn lap_rotation_residual(&self, u: &VectorField) -> VectorField {
        let as_u = self.rotation_coupling_sym(u);
        let conj = self.conj_by_rotation(|w| self.rotation_coupling_sym(w), u);
        &(&self.lap_fj_commutator(u) - &as_u) - &conj
    }

    /// `−div((𝒜 + 𝒜*) ∇σ)`
    pub fn sym_coupling_div(&self, sigma: &ScalarField) -> ScalarField {
        -self.rotation_coupling_sym(&sigma.grad()).div()
    }

    /// `−div(J 𝒜 ∇σ − 𝒜* J ∇σ)`
    pub fn skew_coupling_div(&self, sigma: &ScalarField) -> ScalarField {
        let g = sigma.grad();
        -(&self.rotation_coupling(&g).rot_j() - &self.rotation_coupling_adj(&g.rot_j())).div()
    }
}

/// Sup-norm distance of `F` from `cos` (zero for the geophysical profile).
pub fn distance_from_cos(c: &CoriolisProfile, grid: &Grid) -> f64 {
    c.f.iter().zip(&grid.colat).fold(0.0f64, |m, (f, t)| m.max((f - t.cos()).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceProfile;
    use crate::random;

    fn ops(grid: &Arc<Grid>, cor: CoriolisProfile, eps: f64, delta: f64) -> Operators {
        Operators::new(grid, cor, Params::new(eps, delta).unwrap())
    }

    #[test]
    fn exact_profile_on_sphere_is_cos() {
        let g = Grid::sphere(16, 16).unwrap();
        let e = CoriolisProfile::exact(&g);
        assert!((e.c_f + 1.0).abs() < 1e-13);
        assert!(distance_from_cos(&e, &g) < 1e-12);
        let (n, s) = e.pole_values(&g);
        assert!((n - 1.0).abs() < 1e-10 && (s + 1.0).abs() < 1e-10);
        assert!(e.defect_norm(&g.clone(), 3) < 1e-12);
    }

    #[test]
    fn exact_profile_on_bump_has_unit_poles() {
        let g = Grid::new(SurfaceProfile::bump(0.1), 16, 32).unwrap();
        let e = CoriolisProfile::exact(&g);
        let (n, s) = e.pole_values(&g);
        assert!((n - 1.0).abs() < 1e-8 && (s + 1.0).abs() < 1e-8, "{n} {s}");
        assert!(e.defect_norm(&g, 0) < 1e-10);
    }

    #[test]
    fn l_is_skew_and_parts_are_skew() {
        let g = Grid::new(SurfaceProfile::bump(0.1), 24, 18).unwrap();
        let o = ops(&g, CoriolisProfile::exact(&g), 0.1, 0.03);
        let s = random::state(&g, 8, 1.0, 1, 1.0);
        let t = random::state(&g, 8, 1.0, 2, 1.0);
        let scale = o.apply_l(&s).l2_norm() * t.l2_norm();
        assert!((o.apply_l(&s).inner(&t) + s.inner(&o.apply_l(&t))).abs() / scale < 1e-12);
        assert!(o.gravity_part(&s).inner(&s).abs() / scale < 1e-12);
        assert!(o.coriolis_part(&s).inner(&s).abs() / scale < 1e-12);
        assert!(o.gravity_part(&s).h.mean().abs() < 1e-12);
        assert_eq!(o.apply_l(&State::zeros(&g)).l2_norm(), 0.0);
    }

    #[test]
    fn corrector_samples_and_self_adjointness() {
        let g = Grid::sphere(24, 18).unwrap();
        let o = ops(&g, CoriolisProfile::cos(&g), 0.1, 0.1);
        let c = o.corrector();
        for j in 0..g.n2 {
            let t = g.colat[j];
            assert!((c.a.at(3, j) - t.cos().powi(2)).abs() < 1e-15);
            assert!((c.b.at(3, j) - 2.0 * t.cos()).abs() < 1e-15);
        }
        let s = random::state(&g, 8, 1.0, 5, 1.0);
        let t = random::state(&g, 8, 1.0, 6, 1.0);
        let lhs = o.apply_corrector(&s, &c).inner(&t);
        let rhs = s.inner(&o.apply_corrector(&t, &c));
        assert!((lhs - rhs).abs() / lhs.abs().max(1.0) < 1e-12);
    }

    #[test]
    fn zero_order_commutators_match_closed_forms() {
        let g = Grid::sphere(32, 24).unwrap();
        let o = ops(&g, CoriolisProfile::cos(&g), 0.2, 0.1);
        let c = o.corrector();
        let s = random::state(&g, 8, 1.0, 3, 1.0);
        let n = s.l2_norm();
        // [N_di, L_0] = 0
        let d = &o.corrector_diagonal(&o.coriolis_part(&s), &c) - &o.coriolis_part(&o.corrector_diagonal(&s, &c));
        assert!(d.l2_norm() / n < 1e-14);
        // [N_di, L_∂] = −(h ∇a, u·∇a)
        let grad_a = c.a.grad();
        let d = &o.corrector_diagonal(&o.gravity_part(&s), &c) - &o.gravity_part(&o.corrector_diagonal(&s, &c));
        let want = State { u: grad_a.mul_scalar(&s.h).scale(-1.0), h: grad_a.dot(&s.u).scale(-1.0) };
        assert!((&d - &want).l2_norm() / want.l2_norm() < 1e-10);
        // [N_ad, L_0] = (F h ∇b, F u·∇b)
        let grad_b = c.b.grad();
        let d = &o.corrector_coupling(&o.coriolis_part(&s), &c) - &o.coriolis_part(&o.corrector_coupling(&s, &c));
        let want = State { u: grad_b.mul_scalar(&s.h.times(&o.f)), h: grad_b.dot(&s.u).times(&o.f) };
        assert!((&d - &want).l2_norm() / want.l2_norm() < 1e-10);
        // h-part of [N_ad, L_∂] vanishes
        let d = &o.corrector_coupling(&o.gravity_part(&s), &c) - &o.gravity_part(&o.corrector_coupling(&s, &c));
        assert!(d.h.l2_norm() / d.u.l2_norm() < 1e-9);
    }

    #[test]
    fn lap_rotation_identity_holds_for_generic_f() {
        let g = Grid::new(SurfaceProfile::bump(0.1), 32, 32).unwrap();
        let cor = CoriolisProfile::perturbed(&CoriolisProfile::cos(&g), &g, Perturbation::Sin2Cos, 0.3);
        let o = ops(&g, cor, 0.1, 0.1);
        let u = random::vector(&g, 8, 1.0, 4);
        let r = o.lap_rotation_residual(&u).l2_norm() / u.hk_norm(2).unwrap();
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn g_and_h_vanish_in_exact_case_only() {
        let g = Grid::sphere(32, 24).unwrap();
        let o = ops(&g, CoriolisProfile::cos(&g), 0.1, 0.1);
        let sigma = random::scalar(&g, 8, 1.0, 9);
        let scale = sigma.hk_norm(4);
        assert!(o.sym_coupling_div(&sigma).l2_norm() / scale < 1e-9);
        assert!(o.skew_coupling_div(&sigma).l2_norm() / scale < 1e-9);
        let p = CoriolisProfile::perturbed(&o.coriolis, &g, Perturbation::Sin4, 0.1);
        let o2 = o.clone();
        let o2 = Operators::new(&o2.grid, p, o2.params);
        assert!(o2.skew_coupling_div(&sigma).l2_norm() / scale > 1e-4);
    }

    #[test]
    fn a_kills_rotated_gradients_and_conj_is_involution() {
        let g = Grid::sphere(24, 18).unwrap();
        let o = ops(&g, CoriolisProfile::cos(&g), 0.1, 0.1);
        let f = random::scalar(&g, 8, 1.0, 2);
        assert!(o.rotation_coupling(&f.grad_perp()).l2_norm() / f.grad().l2_norm() < 1e-10);
        let v = random::vector(&g, 8, 1.0, 3);
        let once = |w: &VectorField| o.conj_by_rotation(|x| o.rotation_coupling_sym(x), w);
        let twice = o.conj_by_rotation(once, &v);
        let direct = o.rotation_coupling_sym(&v);
        assert!((&twice - &direct).l2_norm() / direct.l2_norm() < 1e-13);
    }

    #[test]
    fn commutator_defect_exact_case_small_and_eps_free() {
        let g = Grid::sphere(32, 24).unwrap();
        let s = random::state(&g, 8, 1.0, 7, 1.0);
        let mut vals = Vec::new();
        for eps in [0.1, 0.01, 0.001] {
            let o = ops(&g, CoriolisProfile::cos(&g), eps, eps);
            vals.push(o.commutator_defect(&s, 3).unwrap());
        }
        for v in &vals {
            assert!(*v < 1e-10, "{vals:?}");
        }
        let o = ops(&g, CoriolisProfile::cos(&g), 0.1, 0.1);
        let zero_u = State { u: VectorField::zeros(&g), h: s.h.clone() };
        assert!(matches!(o.commutator_defect(&zero_u, 3), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn commutator_defect_scales_with_perturbation() {
        let g = Grid::sphere(32, 24).unwrap();
        let s = random::state(&g, 8, 1.0, 7, 1.0);
        let mut d = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let cor = CoriolisProfile::perturbed(&CoriolisProfile::cos(&g), &g, Perturbation::Sin2Cos, eps);
            d.push(ops(&g, cor, eps, eps).commutator_defect(&s, 3).unwrap());
        }
        let slope = (d[0] / d[2]).log10() / 2.0;
        assert!((slope - 1.0).abs() < 0.15, "{d:?}");
    }
}
