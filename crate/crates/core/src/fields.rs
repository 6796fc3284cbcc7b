//! Scalar and vector fields on a [`Grid`] and the surface calculus on them.
//!
//! Vector fields store the coefficients of the coordinate tangent vectors
//! `v_∂1`, `v_∂2`. `div` is the exact discrete adjoint of `-grad` in the
//! area-weighted inner product, and `curl = -div ∘ J`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral};

/// Relative tolerance on the global mean accepted by the inverse Laplacian.
pub const GAUGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

/// Output of [`VectorField::hodge`].
#[derive(Clone, Debug)]
pub struct Hodge {
    pub irr: VectorField,
    pub inc: VectorField,
    /// `Δ⁻¹ div v`
    pub sigma1: ScalarField,
    /// `Δ⁻¹ curl v`
    pub sigma2: ScalarField,
}

// ---- per-wavenumber kernels --------------------------------------------

fn grad_spec(g: &Grid, f: &Spectral) -> (Spectral, Spectral) {
    let inv_g1: Vec<f64> = g.metric.g1.iter().map(|v| 1.0 / v).collect();
    let inv_g2: Vec<f64> = g.metric.g2.iter().map(|v| 1.0 / v).collect();
    let v1 = f.d1().scale_rows(&inv_g1);
    let v2 = Spectral { modes: f.modes.iter().enumerate().map(|(m, b)| g.d2(m) * b).collect() }
        .scale_rows(&inv_g2);
    (v1, v2)
}

fn div_spec(g: &Grid, v1: &Spectral, v2: &Spectral) -> Spectral {
    let inv_w: Vec<f64> = g.area_w.iter().map(|v| 1.0 / v).collect();
    let wv2 = v2.scale_rows(&g.area_w);
    let meridional =
        Spectral { modes: wv2.modes.iter().enumerate().map(|(m, b)| g.d2_t(m) * b).collect() }.scale_rows(&inv_w);
    v1.d1().sub(&meridional)
}

fn lap_spec(g: &Grid, f: &Spectral) -> Spectral {
    Spectral { modes: f.modes.iter().enumerate().map(|(m, b)| g.lap(m) * b).collect() }
}

fn lap_inv_spec(g: &Grid, f: &Spectral) -> Spectral {
    let n2 = g.n2;
    let modes = f
        .modes
        .iter()
        .enumerate()
        .map(|(m, b)| {
            if m == 0 {
                let mut rhs = DMatrix::zeros(n2 + 1, 2);
                rhs.view_mut((0, 0), (n2, 2)).copy_from(b);
                let sol = g.lap_inv(0) * rhs;
                let mut out = sol.rows(0, n2).into_owned();
                out.column_mut(1).fill(0.0);
                out
            } else {
                g.lap_inv(m) * b
            }
        })
        .collect();
    Spectral { modes }
}

fn filter_spec(g: &Grid, f: &Spectral) -> Spectral {
    let modes = f
        .modes
        .iter()
        .enumerate()
        .map(|(m, b)| match g.filter_block(m) {
            Some(p) => p * b,
            None => DMatrix::zeros(b.nrows(), 2),
        })
        .collect();
    Spectral { modes }
}

// ---- scalar fields ------------------------------------------------------

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f(p1, p2)` at the nodes.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                values[grid.idx(i, j)] = f(grid.lon[i], grid.colat[j]);
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Field constant in longitude with the given per-latitude profile.
    pub fn from_zonal(grid: &Arc<Grid>, profile: &[f64]) -> Self {
        assert_eq!(profile.len(), grid.n2);
        let mut values = vec![0.0; grid.len()];
        for i in 0..grid.n1 {
            values[i * grid.n2..(i + 1) * grid.n2].copy_from_slice(profile);
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_spectral(grid: &Arc<Grid>, s: &Spectral) -> Self {
        Self { grid: grid.clone(), values: grid.from_spectral(s) }
    }

    pub fn spectral(&self) -> Spectral {
        self.grid.to_spectral(&self.values)
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.idx(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Longitude average per latitude.
    pub fn zonal_mean(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; g.n2];
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                out[j] += self.values[g.idx(i, j)];
            }
        }
        out.iter_mut().for_each(|v| *v /= g.n1 as f64);
        out
    }

    pub fn area_integral(&self) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                acc += g.area_w[j] * self.values[g.idx(i, j)];
            }
        }
        acc * g.dlon()
    }

    pub fn mean(&self) -> f64 {
        self.area_integral() / self.grid.total_area()
    }

    /// Mean relative to the L¹ size; zero for the zero field.
    pub fn relative_mean(&self) -> f64 {
        let abs = ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v.abs()).collect() };
        let scale = abs.area_integral();
        if scale == 0.0 {
            0.0
        } else {
            self.area_integral().abs() / scale
        }
    }

    pub fn remove_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid));
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let k = g.idx(i, j);
                acc += g.area_w[j] * self.values[k] * other.values[k];
            }
        }
        acc * g.dlon()
    }

    pub fn try_inner(&self, other: &Self) -> Result<f64> {
        Grid::same(&self.grid, &other.grid)?;
        Ok(self.inner(other))
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "fields live on different grids");
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn times(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip(other, |x, y| x + a * y)
    }

    /// Translation by `k` longitude cells.
    pub fn zonal_shift(&self, k: usize) -> Self {
        let g = &self.grid;
        let mut values = vec![0.0; g.len()];
        for i in 0..g.n1 {
            let src = (i + g.n1 - k % g.n1) % g.n1;
            values[i * g.n2..(i + 1) * g.n2].copy_from_slice(&self.values[src * g.n2..(src + 1) * g.n2]);
        }
        Self { grid: g.clone(), values }
    }

    pub fn grad(&self) -> VectorField {
        let (v1, v2) = grad_spec(&self.grid, &self.spectral());
        VectorField::from_spectral(&self.grid, &v1, &v2)
    }

    /// `J grad f`
    pub fn grad_perp(&self) -> VectorField {
        self.grad().rot_j()
    }

    pub fn laplacian(&self) -> Self {
        Self::from_spectral(&self.grid, &lap_spec(&self.grid, &self.spectral()))
    }

    /// Zero-mean solution of `Δ u = f`; `f` must have zero global mean.
    pub fn inverse_laplacian(&self) -> Result<Self> {
        let rel = self.relative_mean();
        if rel > GAUGE_TOL {
            return Err(Error::GaugeViolation(rel));
        }
        Ok(self.inverse_laplacian_unchecked())
    }

    /// As [`Self::inverse_laplacian`] after projecting out the mean.
    pub fn inverse_laplacian_unchecked(&self) -> Self {
        let s = self.spectral();
        let mut out = Self::from_spectral(&self.grid, &lap_inv_spec(&self.grid, &s));
        // remove roundoff-level mean
        let m = out.mean();
        out.values.iter_mut().for_each(|v| *v -= m);
        out
    }

    /// Dealiasing projection (two-thirds rule in zonal wavenumber and
    /// associated-Legendre degree). Preserves the global mean.
    pub fn filter(&self) -> Self {
        Self::from_spectral(&self.grid, &filter_spec(&self.grid, &self.spectral()))
    }

    /// Sobolev norm of order `s ≥ 0` built from powers of the Laplacian.
    pub fn hk_norm(&self, s: u32) -> f64 {
        self.hk_norm_sq(s).sqrt()
    }

    pub fn hk_norm_sq(&self, s: u32) -> f64 {
        let mut acc = self.inner(self);
        if s == 0 {
            return acc;
        }
        let g = &self.grid;
        let mut p = self.spectral();
        for _ in 0..s / 2 {
            p = lap_spec(g, &p);
        }
        if s % 2 == 0 {
            let f = Self::from_spectral(g, &p);
            acc += f.inner(&f);
        } else {
            let (v1, v2) = grad_spec(g, &p);
            let v = VectorField::from_spectral(g, &v1, &v2);
            acc += v.inner(&v);
        }
        acc
    }
}

// ---- vector fields ------------------------------------------------------

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), c1: vec![0.0; grid.len()], c2: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let (a, b) = f(grid.lon[i], grid.colat[j]);
                let k = grid.idx(i, j);
                out.c1[k] = a;
                out.c2[k] = b;
            }
        }
        out
    }

    pub fn from_components(c1: ScalarField, c2: ScalarField) -> Self {
        assert!(Arc::ptr_eq(&c1.grid, &c2.grid));
        Self { grid: c1.grid, c1: c1.values, c2: c2.values }
    }

    pub fn from_spectral(grid: &Arc<Grid>, s1: &Spectral, s2: &Spectral) -> Self {
        Self { grid: grid.clone(), c1: grid.from_spectral(s1), c2: grid.from_spectral(s2) }
    }

    pub fn spectral(&self) -> (Spectral, Spectral) {
        (self.grid.to_spectral(&self.c1), self.grid.to_spectral(&self.c2))
    }

    pub fn comp1(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.c1.clone() }
    }

    pub fn comp2(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.c2.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.c1.iter().chain(&self.c2).all(|v| v.is_finite())
    }

    pub fn div(&self) -> ScalarField {
        let (s1, s2) = self.spectral();
        ScalarField::from_spectral(&self.grid, &div_spec(&self.grid, &s1, &s2))
    }

    pub fn curl(&self) -> ScalarField {
        self.rot_j().div().scale(-1.0)
    }

    /// Clockwise rotation by `π/2` in the tangent plane.
    pub fn rot_j(&self) -> Self {
        let g = &self.grid;
        let mut out = Self::zeros(g);
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let k = g.idx(i, j);
                out.c1[k] = -g.rot[j] * self.c2[k];
                out.c2[k] = self.c1[k] / g.rot[j];
            }
        }
        out
    }

    /// `J⁻¹ = -J`
    pub fn rot_j_inv(&self) -> Self {
        self.rot_j().scale(-1.0)
    }

    /// Pointwise metric dot product.
    pub fn dot(&self, other: &Self) -> ScalarField {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "fields live on different grids");
        let g = &self.grid;
        let mut values = vec![0.0; g.len()];
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let k = g.idx(i, j);
                values[k] = g.metric.g1[j] * self.c1[k] * other.c1[k] + g.metric.g2[j] * self.c2[k] * other.c2[k];
            }
        }
        ScalarField { grid: g.clone(), values }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.dot(other).area_integral()
    }

    pub fn try_inner(&self, other: &Self) -> Result<f64> {
        Grid::same(&self.grid, &other.grid)?;
        Ok(self.inner(other))
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &f.grid), "fields live on different grids");
        Self {
            grid: self.grid.clone(),
            c1: self.c1.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
            c2: self.c2.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            c1: self.c1.iter().map(|v| v * s).collect(),
            c2: self.c2.iter().map(|v| v * s).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "fields live on different grids");
        Self {
            grid: self.grid.clone(),
            c1: self.c1.iter().zip(&other.c1).map(|(x, y)| x + a * y).collect(),
            c2: self.c2.iter().zip(&other.c2).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn zonal_shift(&self, k: usize) -> Self {
        Self::from_components(self.comp1().zonal_shift(k), self.comp2().zonal_shift(k))
    }

    /// `grad div v + J grad curl v`
    pub fn laplacian(&self) -> Self {
        self.div().grad() + self.curl().grad_perp()
    }

    pub fn hodge(&self) -> Hodge {
        let sigma1 = self.div().inverse_laplacian_unchecked();
        let sigma2 = self.curl().inverse_laplacian_unchecked();
        let irr = sigma1.grad();
        // J⁻¹ grad Δ⁻¹ div(J v) = J grad Δ⁻¹ curl v
        let inc = sigma2.grad_perp();
        Hodge { irr, inc, sigma1, sigma2 }
    }

    /// Dealiasing projection applied to both Hodge potentials.
    pub fn filter(&self) -> Self {
        let a = self.div().filter().inverse_laplacian_unchecked();
        let b = self.curl().filter().inverse_laplacian_unchecked();
        a.grad() + b.grad_perp()
    }

    /// `(‖div v‖²_{k-1} + ‖curl v‖²_{k-1})^{1/2}`, `k ≥ 1`.
    pub fn hk_norm(&self, k: i32) -> Result<f64> {
        Ok(self.hk_norm_sq(k)?.sqrt())
    }

    pub fn hk_norm_sq(&self, k: i32) -> Result<f64> {
        if k < 1 {
            return Err(Error::BadOrder(k));
        }
        let s = (k - 1) as u32;
        Ok(self.div().hk_norm_sq(s) + self.curl().hk_norm_sq(s))
    }
}

macro_rules! impl_ops {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t { self.axpy(1.0, rhs) }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t { self.axpy(-1.0, rhs) }
        }
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t { self.axpy(1.0, &rhs) }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t { self.axpy(-1.0, &rhs) }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t { self.scale(rhs) }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t { self.scale(rhs) }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t { self.scale(-1.0) }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { self.scale(-1.0) }
        }
    };
}

impl_ops!(ScalarField);
impl_ops!(VectorField);

// ---- state ----------------------------------------------------------------

/// Froude number `ε` and Rossby number `δ`; `μ = δ/ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && delta > 0.0 && eps.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("need eps, delta > 0 (got {eps}, {delta})")));
        }
        Ok(Self { eps, delta })
    }

    pub fn mu(&self) -> f64 {
        self.delta / self.eps
    }
}

/// Velocity `u` and height perturbation `h`.
#[derive(Clone, Debug)]
pub struct State {
    pub u: VectorField,
    pub h: ScalarField,
}

impl State {
    pub fn new(u: VectorField, h: ScalarField) -> Result<Self> {
        Grid::same(&u.grid, &h.grid)?;
        Ok(Self { u, h })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { u: VectorField::zeros(grid), h: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.u.grid
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self { u: self.u.axpy(a, &other.u), h: self.h.axpy(a, &other.h) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { u: self.u.scale(s), h: self.h.scale(s) }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.u.inner(&other.u) + self.h.inner(&other.h)
    }

    /// `‖u‖² + ‖h‖²`
    pub fn energy(&self) -> f64 {
        self.inner(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().max(0.0).sqrt()
    }

    /// `(‖u‖_k² + ‖h‖_k²)^{1/2}`, `k ≥ 1`.
    pub fn hk_norm(&self, k: i32) -> Result<f64> {
        Ok((self.u.hk_norm_sq(k)? + self.h.hk_norm_sq(k as u32)).sqrt())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.h.is_finite()
    }

    pub fn zonal_shift(&self, k: usize) -> Self {
        Self { u: self.u.zonal_shift(k), h: self.h.zonal_shift(k) }
    }

    pub fn filter(&self) -> Self {
        Self { u: self.u.filter(), h: self.h.filter() }
    }
}

impl_ops!(State);
