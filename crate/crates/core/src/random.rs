//! Seeded band-limited random fields.
//!
//! Scalars are finite sums `Σ c_lm P̄_l^m(cos p2) e^{i m p1}` evaluated
//! analytically, so the same seed gives the same function on every grid.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fields::{ScalarField, State, VectorField};
use crate::grid::Grid;
use crate::quadrature::assoc_legendre;

/// Zero-mean scalar with associated-Legendre degree `≤ lmax`. Coefficients
/// are standard normal scaled by `(1 + l)^{-decay}`.
pub fn scalar(grid: &Arc<Grid>, lmax: usize, decay: f64, seed: u64) -> ScalarField {
    banded(grid, lmax, lmax, decay, seed)
}

/// Zonal (longitude-independent) variant of [`scalar`].
pub fn zonal_scalar(grid: &Arc<Grid>, lmax: usize, decay: f64, seed: u64) -> ScalarField {
    banded(grid, lmax, 0, decay, seed)
}

fn banded(grid: &Arc<Grid>, lmax: usize, mmax: usize, decay: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (m, l, re, im) drawn in a grid-independent order
    let mut coeffs = Vec::new();
    for m in 0..=mmax {
        for l in m.max(1)..=lmax {
            let amp = (1.0 + l as f64).powf(-decay);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            coeffs.push((m, l, amp * re, if m == 0 { 0.0 } else { amp * im }));
        }
    }
    let g = grid;
    let plm: Vec<Vec<Vec<f64>>> =
        (0..=mmax).map(|m| g.x.iter().map(|&x| assoc_legendre(m, lmax, x)).collect()).collect();
    let mut values = vec![0.0; g.len()];
    for i in 0..g.n1 {
        let phi = g.lon[i];
        for &(m, l, re, im) in &coeffs {
            let (s, c) = (m as f64 * phi).sin_cos();
            // Re[(re + i im) e^{imφ}], doubled for m > 0 to account for -m
            let fac = if m == 0 { 1.0 } else { 2.0 };
            let ang = fac * (re * c - im * s);
            for j in 0..g.n2 {
                values[g.idx(i, j)] += ang * plm[m][j][l - m];
            }
        }
    }
    ScalarField { grid: g.clone(), values }
}

/// `grad a + J grad b` for independent random potentials.
pub fn vector(grid: &Arc<Grid>, lmax: usize, decay: f64, seed: u64) -> VectorField {
    let a = scalar(grid, lmax, decay, seed);
    let b = scalar(grid, lmax, decay, seed ^ 0x9e37_79b9_7f4a_7c15);
    a.grad() + b.grad_perp()
}

/// Random state scaled to the given `L²` size.
pub fn state(grid: &Arc<Grid>, lmax: usize, decay: f64, seed: u64, size: f64) -> State {
    let u = vector(grid, lmax, decay, seed);
    let h = scalar(grid, lmax, decay, seed.wrapping_add(1_000_003));
    let s = State { u, h };
    let n = s.l2_norm();
    if n > 0.0 {
        s.scale(size / n)
    } else {
        s
    }
}

/// Axisymmetric random state scaled to the given `L²` size.
pub fn zonal_state(grid: &Arc<Grid>, lmax: usize, decay: f64, seed: u64, size: f64) -> State {
    let a = zonal_scalar(grid, lmax, decay, seed);
    let b = zonal_scalar(grid, lmax, decay, seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = zonal_scalar(grid, lmax, decay, seed.wrapping_add(1_000_003));
    let s = State { u: a.grad() + b.grad_perp(), h };
    let n = s.l2_norm();
    if n > 0.0 {
        s.scale(size / n)
    } else {
        s
    }
}
