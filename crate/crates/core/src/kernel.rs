//! Balanced zonal states: the kernel of the large operator, the projection
//! onto it, and the distance estimates.

use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::grid::Grid;
use crate::operators::Operators;
use crate::quadrature::{cumulative_integration, diff_matrix, gauss_legendre};

/// Longitude-independent stream profile `Φ` and height profile `Ψ` with
/// `Ψ' = F Φ'` and `∫_0^π g1 g2 Ψ dp2 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonalProfilePair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Barycentric evaluation of the node interpolant at arbitrary `x`.
fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let mut lam = 1.0;
        for k in 0..n {
            if k != j {
                lam *= nodes[j] - nodes[k];
            }
        }
        let d = x - nodes[j];
        if d == 0.0 {
            return values[j];
        }
        let t = 1.0 / (lam * d);
        num += t * values[j];
        den += t;
    }
    num / den
}

/// `∫_0^π g1 g2 q dp2` for a profile `q` given at the grid nodes, by
/// Gauss quadrature in `p2` on the node interpolant.
pub fn weighted_colat_integral(grid: &Grid, q: &[f64]) -> f64 {
    let (t, w) = gauss_legendre(2 * grid.n2);
    let mut acc = 0.0;
    for (ti, wi) in t.iter().zip(&w) {
        let p2 = 0.5 * std::f64::consts::PI * (ti + 1.0);
        let (s, r, dr) = (p2.sin(), grid.profile.r(p2), grid.profile.deriv(1, p2));
        let g1g2 = s * s * r * r * (r * r + dr * dr);
        acc += wi * g1g2 * interpolate(&grid.x, q, p2.cos());
    }
    acc * 0.5 * std::f64::consts::PI
}

impl ZonalProfilePair {
    /// Integrates `Ψ' = F Φ'` from the north pole and fixes the constant by
    /// the weighted-mean condition.
    pub fn from_phi(grid: &Grid, f: &[f64], phi: &[f64]) -> Self {
        let n = grid.n2;
        let dx = diff_matrix(&grid.x);
        // in x = cos p2: Ψ_x = F Φ_x, so Ψ(x) = -∫_x^1 F Φ_x
        let q: Vec<f64> = (0..n).map(|i| f[i] * (0..n).map(|j| dx[(i, j)] * phi[j]).sum::<f64>()).collect();
        let total: f64 = q.iter().zip(&grid.wx).map(|(a, w)| a * w).sum();
        let c = cumulative_integration(&grid.x, &grid.wx);
        let mut psi: Vec<f64> =
            (0..n).map(|i| -(total - (0..n).map(|j| c[(i, j)] * q[j]).sum::<f64>())).collect();
        let ones = vec![1.0; n];
        let shift = weighted_colat_integral(grid, &psi) / weighted_colat_integral(grid, &ones);
        psi.iter_mut().for_each(|v| *v -= shift);
        Self { phi: phi.to_vec(), psi }
    }

    /// `∫ g1 g2 Ψ dp2` (zero by construction).
    pub fn normalisation_residual(&self, grid: &Grid) -> f64 {
        weighted_colat_integral(grid, &self.psi)
    }

    /// Max nodal defect of `Ψ' − F Φ'` (colatitude derivatives).
    pub fn derivative_residual(&self, grid: &Grid, f: &[f64]) -> f64 {
        let d = grid.d2(0);
        let mut worst = 0.0f64;
        let scale = self.psi.iter().chain(&self.phi).fold(1e-300f64, |m, v| m.max(v.abs()));
        for i in 0..grid.n2 {
            let dpsi: f64 = (0..grid.n2).map(|j| d[(i, j)] * self.psi[j]).sum();
            let dphi: f64 = (0..grid.n2).map(|j| d[(i, j)] * self.phi[j]).sum();
            worst = worst.max((dpsi - f[i] * dphi).abs());
        }
        worst / scale
    }
}

/// Checks that `f` does not vary in longitude and returns its profile.
pub fn zonal_profile(f: &ScalarField) -> Result<Vec<f64>> {
    let mean = f.zonal_mean();
    let g = &f.grid;
    let scale = f.max_abs().max(1e-300);
    let mut var = 0.0f64;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            var = var.max((f.at(i, j) - mean[j]).abs());
        }
    }
    if var > 1e-12 * scale {
        return Err(Error::NotZonal(var / scale));
    }
    Ok(mean)
}

/// `ũ`: zonal average of the `v_∂1` coefficient of the incompressible part.
pub fn zonal_mean_velocity(v: &VectorField) -> VectorField {
    zonal_mean_of(&v.hodge().inc)
}

/// Circulation average of `v` itself (equal to [`zonal_mean_velocity`] up
/// to discretisation, since gradients carry no circulation).
pub fn zonal_mean_of(v: &VectorField) -> VectorField {
    let g = &v.grid;
    let w = v.comp1().zonal_mean();
    VectorField::from_components(ScalarField::from_zonal(g, &w), ScalarField::zeros(g))
}

/// `Π(u, h) = (ũ, −(δ/ε) Δ⁻¹ div(F J ũ))`. Not an orthogonal projection.
pub fn project_kernel(ops: &Operators, s: &State) -> State {
    let ut = zonal_mean_velocity(&s.u);
    let h = height_of(ops, &ut).scale(-ops.params.mu());
    State { u: ut, h }
}

/// `Δ⁻¹ div(F J ũ)`
fn height_of(ops: &Operators, ut: &VectorField) -> ScalarField {
    ut.rot_j().mul_scalar(&ops.f).div().inverse_laplacian_unchecked()
}

/// Kernel element `(J∇Φ, (δ/ε) Ψ)` from a zonal `Φ`, with `h` shifted to
/// zero global mean.
pub fn build_kernel_state(ops: &Operators, phi: &ScalarField) -> Result<(State, ZonalProfilePair)> {
    let profile = zonal_profile(phi)?;
    let grid = &ops.grid;
    let pair = ZonalProfilePair::from_phi(grid, &ops.coriolis.f, &profile);
    let u = phi.grad_perp();
    let h = ScalarField::from_zonal(grid, &pair.psi).remove_mean().scale(ops.params.mu());
    Ok((State { u, h }, pair))
}

/// Terms of the distance estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDistanceReport {
    pub k: i32,
    /// `‖u − ũ‖_k + ‖(ε/δ) h + Δ⁻¹ div(F J ũ)‖_{k+1}`
    pub lhs: f64,
    /// `‖ε 𝓛 s‖_{k+2}`
    pub rhs: f64,
    /// `‖u_inc − ũ‖_k`
    pub inc_gap: f64,
    /// `‖div(F u_inc)‖_{k+1}`
    pub inc_div: f64,
}

impl KernelDistanceReport {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }

    pub fn inc_ratio(&self) -> f64 {
        self.inc_gap / self.inc_div
    }
}

/// Norms are taken on the dealiased modes.
pub fn kernel_distance_report(ops: &Operators, s: &State, k: i32) -> Result<KernelDistanceReport> {
    if k < 1 {
        return Err(Error::BadOrder(k));
    }
    let hd = s.u.hodge();
    let ut = zonal_mean_of(&hd.inc);
    let inv_mu = 1.0 / ops.params.mu();
    let hpart = &s.h.scale(inv_mu) + &height_of(ops, &ut);
    let lhs = (&s.u - &ut).filter().hk_norm(k)? + hpart.filter().hk_norm(k as u32 + 1);
    let rhs = ops.apply_l(s).scale(ops.params.eps).filter().hk_norm(k + 2)?;
    let tol = 1e-10 * s.hk_norm(k)?.max(1e-300);
    if rhs == 0.0 && lhs > tol {
        return Err(Error::DegenerateInput(format!(
            "‖𝓛s‖ = 0 but distance to the kernel is {lhs:e}"
        )));
    }
    let inc_gap = (&hd.inc - &ut).filter().hk_norm(k)?;
    let inc_div = hd.inc.mul_scalar(&ops.f).div().filter().hk_norm(k as u32 + 1);
    Ok(KernelDistanceReport { k, lhs, rhs, inc_gap, inc_div })
}

/// Residuals of the kernel characterisation for a state: `div u`,
/// `div(F u)` and the gradient condition, relative to `‖s‖₁`.
pub fn kernel_conditions(ops: &Operators, s: &State) -> Result<[f64; 3]> {
    let scale = s.hk_norm(1)?.max(1e-300);
    let c1 = s.u.div().l2_norm() / scale;
    let c2 = s.u.mul_scalar(&ops.f).div().l2_norm() / scale;
    let grad = &s.h.scale(1.0 / ops.params.mu()).grad()
        + &s.u.rot_j().mul_scalar(&ops.f).div().inverse_laplacian_unchecked().grad();
    Ok([c1, c2, grad.l2_norm() / scale])
}
