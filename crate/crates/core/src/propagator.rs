//! Exact flow of the large linear operator, one zonal wavenumber at a time.
//!
//! For each `m` the operator is a complex `3 n2` matrix that is skew-adjoint
//! in the diagonal area weight, so after symmetric scaling `i·M` is
//! Hermitian and `e^{tM}` follows from one eigendecomposition.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::fields::{ScalarField, State, VectorField};
use crate::grid::{Grid, Spectral};
use crate::operators::Operators;

/// `s ↦ e^{t 𝓛} s` for some skew operator `𝓛`.
pub trait LinearPropagator {
    fn propagate(&self, t: f64, s: &State) -> State;
    /// Largest `|ω|` among the eigenvalues `iω` of the generator.
    fn max_frequency(&self) -> f64;
}

struct ModeBlock {
    /// `Λ^{1/2}` (diagonal)
    sqrt_w: Vec<f64>,
    vecs: DMatrix<Complex64>,
    vecs_adj: DMatrix<Complex64>,
    /// Eigenvalues of `i S`; the generator has eigenvalues `-i λ`.
    lambda: Vec<f64>,
}

/// Per-wavenumber eigendecomposition of `(1/δ) 𝓛_∂ + (1/ε) 𝓛_0`.
pub struct ModalPropagator {
    grid: Arc<Grid>,
    blocks: Vec<ModeBlock>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex `3 n2` matrix of the operator for wavenumber `m`.
pub fn mode_matrix(ops: &Operators, m: usize) -> DMatrix<Complex64> {
    let g = &ops.grid;
    let n = g.n2;
    let (id, ie) = (1.0 / ops.params.delta, 1.0 / ops.params.eps);
    let mf = m as f64;
    let d = g.d2(m);
    let dt = g.d2_t(m);
    let met = &g.metric;
    let mut a = DMatrix::from_element(3 * n, 3 * n, c(0.0, 0.0));
    for j in 0..n {
        a[(j, 2 * n + j)] = c(0.0, mf / met.g1[j] * id);
        a[(2 * n + j, j)] = c(0.0, mf * id);
        a[(j, n + j)] = c(-ops.coriolis.f[j] * g.rot[j] * ie, 0.0);
        a[(n + j, j)] = c(ops.coriolis.f[j] / g.rot[j] * ie, 0.0);
        for k in 0..n {
            a[(n + j, 2 * n + k)] = c(d[(j, k)] / met.g2[j] * id, 0.0);
            a[(2 * n + j, n + k)] = c(-dt[(j, k)] * g.area_w[k] / g.area_w[j] * id, 0.0);
        }
    }
    a
}

/// Diagonal of the inner-product weight `Λ` for the stacked `(u1, u2, h)`.
pub fn mode_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.n2;
    let mut w = vec![0.0; 3 * n];
    for j in 0..n {
        w[j] = grid.area_w[j] * grid.metric.g1[j];
        w[n + j] = grid.area_w[j] * grid.metric.g2[j];
        w[2 * n + j] = grid.area_w[j];
    }
    w
}

fn stack(s1: &Spectral, s2: &Spectral, sh: &Spectral, m: usize, n: usize) -> DVector<Complex64> {
    let mut v = DVector::from_element(3 * n, c(0.0, 0.0));
    for (b, src) in [s1, s2, sh].iter().enumerate() {
        let blk = &src.modes[m];
        for j in 0..n {
            v[b * n + j] = c(blk[(j, 0)], blk[(j, 1)]);
        }
    }
    v
}

fn unstack(v: &DVector<Complex64>, out: [&mut Spectral; 3], m: usize, n: usize) {
    for (b, dst) in out.into_iter().enumerate() {
        let blk = &mut dst.modes[m];
        for j in 0..n {
            blk[(j, 0)] = v[b * n + j].re;
            blk[(j, 1)] = if m == 0 { 0.0 } else { v[b * n + j].im };
        }
    }
}

impl ModalPropagator {
    pub fn new(ops: &Operators) -> Self {
        let g = &ops.grid;
        let w = mode_weights(g);
        let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let blocks = (0..=g.m_max)
            .map(|m| {
                let a = mode_matrix(ops, m);
                let nn = a.nrows();
                // H = i Λ^{1/2} M Λ^{-1/2}, Hermitian
                let mut h = DMatrix::from_element(nn, nn, c(0.0, 0.0));
                for r in 0..nn {
                    for q in 0..nn {
                        h[(r, q)] = c(0.0, 1.0) * a[(r, q)] * (sqrt_w[r] / sqrt_w[q]);
                    }
                }
                let h = (&h + h.adjoint()) * c(0.5, 0.0);
                let eig = SymmetricEigen::new(h);
                ModeBlock {
                    sqrt_w: sqrt_w.clone(),
                    vecs_adj: eig.eigenvectors.adjoint(),
                    vecs: eig.eigenvectors,
                    lambda: eig.eigenvalues.iter().copied().collect(),
                }
            })
            .collect();
        Self { grid: g.clone(), blocks }
    }

    /// Flow of `𝓛_∂ + μ 𝓛_0 = δ 𝓛`, the generator of the fast time scale.
    pub fn scaled(ops: &Operators) -> Self {
        let mu = ops.params.mu();
        let p = crate::fields::Params { eps: 1.0 / mu, delta: 1.0 };
        Self::new(&ops.with_params(p))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

impl LinearPropagator for ModalPropagator {
    fn propagate(&self, t: f64, s: &State) -> State {
        let g = &self.grid;
        let n = g.n2;
        let (s1, s2) = s.u.spectral();
        let sh = s.h.spectral();
        let mut o1 = Spectral::zeros(n, g.m_max);
        let mut o2 = Spectral::zeros(n, g.m_max);
        let mut oh = Spectral::zeros(n, g.m_max);
        for (m, b) in self.blocks.iter().enumerate() {
            let mut z = stack(&s1, &s2, &sh, m, n);
            for (zi, w) in z.iter_mut().zip(&b.sqrt_w) {
                *zi *= w;
            }
            let mut y = &b.vecs_adj * z;
            for (yi, l) in y.iter_mut().zip(&b.lambda) {
                // S = -i Q λ Q*, so e^{tS} = Q e^{-iλt} Q*
                *yi *= Complex64::from_polar(1.0, -l * t);
            }
            let mut x = &b.vecs * y;
            for (xi, w) in x.iter_mut().zip(&b.sqrt_w) {
                *xi /= w;
            }
            unstack(&x, [&mut o1, &mut o2, &mut oh], m, n);
        }
        State { u: VectorField::from_spectral(g, &o1, &o2), h: ScalarField::from_spectral(g, &oh) }
    }

    fn max_frequency(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.lambda.iter()).fold(0.0f64, |a, l| a.max(l.abs()))
    }
}
