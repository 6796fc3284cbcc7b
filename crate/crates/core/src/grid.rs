//! Collocation grid: uniform longitudes with FFT, Gauss colatitudes, and
//! the per-wavenumber matrices every operator is built from.
//!
//! A field's zonal coefficients are kept for `m = 0..=m_max`; the negative
//! wavenumbers follow by conjugation. Each profile is an `n2 × 2` real block
//! (real part, imaginary part) so the real colatitude matrices act on both
//! columns in one product.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{build_metric, MetricSamples, SurfaceProfile};
use crate::quadrature::{assoc_legendre, diff_matrix, gauss_legendre};

/// Zonal Fourier coefficients of a real field, one `n2 × 2` block per `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectral {
    pub modes: Vec<DMatrix<f64>>,
}

impl Spectral {
    pub fn zeros(n2: usize, m_max: usize) -> Self {
        Self { modes: vec![DMatrix::zeros(n2, 2); m_max + 1] }
    }

    /// Multiplies mode `m` by `i m` (longitude derivative).
    pub fn d1(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(m, b)| {
                let mf = m as f64;
                let mut out = DMatrix::zeros(b.nrows(), 2);
                for j in 0..b.nrows() {
                    out[(j, 0)] = -mf * b[(j, 1)];
                    out[(j, 1)] = mf * b[(j, 0)];
                }
                out
            })
            .collect();
        Self { modes }
    }

    /// Multiplies every mode by the colatitude profile `c`.
    pub fn scale_rows(&self, c: &[f64]) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|b| {
                let mut out = b.clone();
                for j in 0..b.nrows() {
                    out[(j, 0)] *= c[j];
                    out[(j, 1)] *= c[j];
                }
                out
            })
            .collect();
        Self { modes }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { modes: self.modes.iter().zip(&other.modes).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { modes: self.modes.iter().zip(&other.modes).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { modes: self.modes.iter().map(|a| a * s).collect() }
    }
}

/// Immutable grid plus operator caches. Shared behind an `Arc` by all fields.
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub m_max: usize,
    pub profile: SurfaceProfile,
    pub metric: MetricSamples,
    /// Longitudes `2π i / n1`.
    pub lon: Vec<f64>,
    /// Colatitude nodes (ascending).
    pub colat: Vec<f64>,
    /// `cos` of the colatitude nodes (descending).
    pub x: Vec<f64>,
    /// Gauss weights in `x`.
    pub wx: Vec<f64>,
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
    /// Area weight per latitude: `Σ_i (2π/n1) W_j f_ij` integrates `f`.
    pub area_w: Vec<f64>,
    /// `√(g2 / g1)`, the rotation's scale factor.
    pub rot: Vec<f64>,
    /// Dealiasing cutoffs: zonal wavenumber and associated-Legendre degree.
    pub m_cut: usize,
    pub deg_cut: usize,
    d_even: DMatrix<f64>,
    d_odd: DMatrix<f64>,
    d_even_t: DMatrix<f64>,
    d_odd_t: DMatrix<f64>,
    lap: Vec<DMatrix<f64>>,
    lap_inv: Vec<DMatrix<f64>>,
    filter: Vec<Option<DMatrix<f64>>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("m_max", &self.m_max)
            .field("profile", &self.profile.name())
            .finish()
    }
}

impl Grid {
    /// Builds a grid with `m_max = n1/2 - 1` (everything below Nyquist).
    pub fn new(profile: SurfaceProfile, n1: usize, n2: usize) -> Result<Arc<Self>> {
        if n1 < 4 {
            return Err(Error::InvalidGrid(format!("n1 = {n1} < 4")));
        }
        Self::with_m_max(profile, n1, n2, (n1 - 2) / 2)
    }

    pub fn sphere(n1: usize, n2: usize) -> Result<Arc<Self>> {
        Self::new(SurfaceProfile::sphere(), n1, n2)
    }

    pub fn with_m_max(profile: SurfaceProfile, n1: usize, n2: usize, m_max: usize) -> Result<Arc<Self>> {
        if n1 < 2 * m_max + 2 {
            return Err(Error::InvalidGrid(format!("n1 = {n1} < 2 m_max + 2 = {}", 2 * m_max + 2)));
        }
        if n2 < 4 {
            return Err(Error::InvalidGrid(format!("n2 = {n2} < 4")));
        }
        let (x, wx) = gauss_legendre(n2);
        let colat: Vec<f64> = x.iter().map(|x| x.acos()).collect();
        let metric = build_metric(&profile, &colat)?;
        let sin: Vec<f64> = colat.iter().map(|t| t.sin()).collect();
        let cos = x.clone();
        let area_w: Vec<f64> = (0..n2).map(|j| wx[j] * metric.r[j] * metric.g2[j].sqrt()).collect();
        let rot: Vec<f64> = (0..n2).map(|j| (metric.g2[j] / metric.g1[j]).sqrt()).collect();

        let dx = diff_matrix(&x);
        // even parity: f = P(x), df/dp2 = -sin P'
        let mut d_even = dx.clone();
        for i in 0..n2 {
            for j in 0..n2 {
                d_even[(i, j)] *= -sin[i];
            }
        }
        // odd parity: f = sin Q, df/dp2 = cos Q - sin² Q'
        let mut d_odd = DMatrix::zeros(n2, n2);
        for i in 0..n2 {
            for j in 0..n2 {
                d_odd[(i, j)] = -sin[i] * sin[i] * dx[(i, j)] / sin[j];
            }
            d_odd[(i, i)] += cos[i] / sin[i];
        }
        let d_even_t = d_even.transpose();
        let d_odd_t = d_odd.transpose();

        let m_cut = (n1 / 3).min(m_max);
        let deg_cut = 2 * n2 / 3;
        let mut lap = Vec::with_capacity(m_max + 1);
        let mut lap_inv = Vec::with_capacity(m_max + 1);
        let mut filter = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            let (d, dt) = if m % 2 == 0 { (&d_even, &d_even_t) } else { (&d_odd, &d_odd_t) };
            // L = -m²/g1 - W⁻¹ Dᵀ W g2⁻¹ D
            let mut inner = d.clone();
            for i in 0..n2 {
                let s = area_w[i] / metric.g2[i];
                for j in 0..n2 {
                    inner[(i, j)] *= s;
                }
            }
            let mut l = -(dt * inner);
            for i in 0..n2 {
                for j in 0..n2 {
                    l[(i, j)] /= area_w[i];
                }
                l[(i, i)] -= (m * m) as f64 / metric.g1[i];
            }
            let inv = if m == 0 {
                let mut b = DMatrix::zeros(n2 + 1, n2 + 1);
                b.view_mut((0, 0), (n2, n2)).copy_from(&l);
                for i in 0..n2 {
                    b[(i, n2)] = 1.0;
                    b[(n2, i)] = area_w[i];
                }
                b.try_inverse()
            } else {
                l.clone().try_inverse()
            }
            .ok_or_else(|| Error::InvalidGrid(format!("singular Laplacian block m = {m}")))?;
            lap.push(l);
            lap_inv.push(inv);

            filter.push(if m <= m_cut && m <= deg_cut {
                let nb = deg_cut - m + 1;
                let mut b = DMatrix::zeros(n2, nb);
                for j in 0..n2 {
                    for (l, v) in assoc_legendre(m, deg_cut, x[j]).into_iter().enumerate() {
                        b[(j, l)] = v;
                    }
                }
                let mut wb = b.clone();
                for j in 0..n2 {
                    for l in 0..nb {
                        wb[(j, l)] *= area_w[j];
                    }
                }
                let gram = b.transpose() * &wb;
                let gram_inv = gram
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidGrid(format!("singular filter Gram matrix m = {m}")))?;
                Some(&b * gram_inv * wb.transpose())
            } else {
                None
            });
        }

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n1);
        let ifft = planner.plan_fft_inverse(n1);
        Ok(Arc::new(Self {
            n1,
            n2,
            m_max,
            profile,
            metric,
            lon: (0..n1).map(|i| 2.0 * PI * i as f64 / n1 as f64).collect(),
            colat,
            x,
            wx,
            sin,
            cos,
            area_w,
            rot,
            m_cut,
            deg_cut,
            d_even,
            d_odd,
            d_even_t,
            d_odd_t,
            lap,
            lap_inv,
            filter,
            fft,
            ifft,
        }))
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    /// Longitude quadrature weight `2π / n1`.
    pub fn dlon(&self) -> f64 {
        2.0 * PI / self.n1 as f64
    }

    pub fn total_area(&self) -> f64 {
        self.dlon() * self.n1 as f64 * self.area_w.iter().sum::<f64>()
    }

    pub fn to_spectral(&self, values: &[f64]) -> Spectral {
        let (n1, n2) = (self.n1, self.n2);
        let mut out = Spectral::zeros(n2, self.m_max);
        let mut buf = vec![Complex64::new(0.0, 0.0); n1];
        let norm = 1.0 / n1 as f64;
        for j in 0..n2 {
            for i in 0..n1 {
                buf[i] = Complex64::new(values[i * n2 + j], 0.0);
            }
            self.fft.process(&mut buf);
            for (m, block) in out.modes.iter_mut().enumerate() {
                block[(j, 0)] = buf[m].re * norm;
                block[(j, 1)] = if m == 0 { 0.0 } else { buf[m].im * norm };
            }
        }
        out
    }

    pub fn from_spectral(&self, s: &Spectral) -> Vec<f64> {
        let (n1, n2) = (self.n1, self.n2);
        let mut values = vec![0.0; n1 * n2];
        let mut buf = vec![Complex64::new(0.0, 0.0); n1];
        for j in 0..n2 {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (m, block) in s.modes.iter().enumerate() {
                let c = Complex64::new(block[(j, 0)], block[(j, 1)]);
                if m == 0 {
                    buf[0] = Complex64::new(c.re, 0.0);
                } else {
                    buf[m] = c;
                    buf[n1 - m] = c.conj();
                }
            }
            self.ifft.process(&mut buf);
            for i in 0..n1 {
                values[i * n2 + j] = buf[i].re;
            }
        }
        values
    }

    /// Colatitude derivative matrix for zonal wavenumber `m`.
    pub fn d2(&self, m: usize) -> &DMatrix<f64> {
        if m % 2 == 0 {
            &self.d_even
        } else {
            &self.d_odd
        }
    }

    pub fn d2_t(&self, m: usize) -> &DMatrix<f64> {
        if m % 2 == 0 {
            &self.d_even_t
        } else {
            &self.d_odd_t
        }
    }

    /// Laplacian block for wavenumber `m`.
    pub fn lap(&self, m: usize) -> &DMatrix<f64> {
        &self.lap[m]
    }

    /// Inverse Laplacian block; for `m = 0` the bordered `(n2+1)²` inverse.
    pub fn lap_inv(&self, m: usize) -> &DMatrix<f64> {
        &self.lap_inv[m]
    }

    pub fn filter_block(&self, m: usize) -> Option<&DMatrix<f64>> {
        self.filter[m].as_ref()
    }

    pub fn same(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
        if Arc::ptr_eq(a, b) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid::with_m_max(SurfaceProfile::sphere(), 8, 8, 4), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::sphere(8, 2), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn sphere_area_is_4pi() {
        let g = Grid::sphere(16, 12).unwrap();
        assert!((g.total_area() - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn fft_roundtrip_and_known_coefficients() {
        let g = Grid::sphere(16, 6).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, j) = (k / g.n2, k % g.n2);
                1.0 + 3.0 * (2.0 * g.lon[i]).cos() * g.x[j] - (5.0 * g.lon[i]).sin()
            })
            .collect();
        let s = g.to_spectral(&v);
        assert!((s.modes[0][(0, 0)] - 1.0).abs() < 1e-14);
        assert!((s.modes[2][(3, 0)] - 1.5 * g.x[3]).abs() < 1e-14);
        // -sin(5φ) = Re(i e^{5iφ}) with f̂_5 = i/2
        assert!((s.modes[5][(1, 1)] - 0.5).abs() < 1e-14);
        let back = g.from_spectral(&s);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_block_symmetric_in_area_weight() {
        let g = Grid::new(SurfaceProfile::bump(0.1), 16, 10).unwrap();
        for m in 0..=g.m_max {
            let l = g.lap(m);
            for i in 0..g.n2 {
                for j in 0..g.n2 {
                    let a = g.area_w[i] * l[(i, j)];
                    let b = g.area_w[j] * l[(j, i)];
                    assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "m={m}");
                }
            }
        }
    }

    #[test]
    fn filter_is_idempotent_projection() {
        let g = Grid::sphere(24, 18).unwrap();
        for m in 0..=g.m_max {
            if let Some(p) = g.filter_block(m) {
                let pp = p * p;
                assert!((pp - p).norm() < 1e-11 * (1.0 + p.norm()));
            }
        }
        assert!(g.filter_block(g.m_max).is_none());
    }
}
