//! Gauss–Legendre nodes and the 1-D collocation matrices built on them.
//!
//! Everything here works in `x = cos p2 ∈ (-1, 1)`; nodes are returned in
//! descending `x` so that colatitude increases with the index.

use nalgebra::DMatrix;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes (descending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess, then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Barycentric differentiation matrix in `x` for interpolation at `nodes`.
pub fn diff_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut lam = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                lam[j] *= nodes[j] - nodes[k];
            }
        }
        lam[j] = 1.0 / lam[j];
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (lam[j] / lam[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Matrix `C` with `(C q)_i = ∫_{-1}^{x_i} q(x) dx` for the degree `n-1`
/// interpolant of `q` through the Gauss nodes `x` (weights `w`).
pub fn cumulative_integration(x: &[f64], w: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    // Legendre values P_k(x_i), k = 0..=n
    let mut p = DMatrix::zeros(n, n + 1);
    for i in 0..n {
        let (mut a, mut b) = (1.0, x[i]);
        p[(i, 0)] = a;
        p[(i, 1)] = b;
        for k in 2..=n {
            let kf = k as f64;
            let c = ((2.0 * kf - 1.0) * x[i] * b - (kf - 1.0) * a) / kf;
            a = b;
            b = c;
            p[(i, k)] = c;
        }
    }
    // antiderivative of P_k from -1, evaluated at x_i
    let mut anti = DMatrix::zeros(n, n);
    for i in 0..n {
        anti[(i, 0)] = x[i] + 1.0;
        for k in 1..n {
            anti[(i, k)] = (p[(i, k + 1)] - p[(i, k - 1)]) / (2.0 * k as f64 + 1.0);
        }
    }
    // coefficient map: a_k = (2k+1)/2 Σ_j w_j P_k(x_j) q_j
    let mut coef = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            coef[(k, j)] = (2.0 * k as f64 + 1.0) / 2.0 * w[j] * p[(j, k)];
        }
    }
    anti * coef
}

/// Orthonormal associated Legendre functions `P̄_l^m(x)` for
/// `l = m..=lmax`, normalised so that `∫_{-1}^{1} (P̄_l^m)^2 dx = 1`.
pub fn assoc_legendre(m: usize, lmax: usize, x: f64) -> Vec<f64> {
    if lmax < m {
        return Vec::new();
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (0.5f64).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    let mut out = Vec::with_capacity(lmax - m + 1);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mf = m as f64;
    let p1 = (2.0 * mf + 3.0).sqrt() * x * pmm;
    out.push(p1);
    let (mut a, mut b) = (pmm, p1);
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let alm = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let blm = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let c = alm * (x * b - blm * a);
        out.push(c);
        a = b;
        b = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        for deg in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn diff_matrix_exact_on_polynomials() {
        let (x, _) = gauss_legendre(16);
        let d = diff_matrix(&x);
        let f: Vec<f64> = x.iter().map(|x| x.powi(7) - 3.0 * x * x).collect();
        for i in 0..x.len() {
            let df: f64 = (0..x.len()).map(|j| d[(i, j)] * f[j]).sum();
            let exact = 7.0 * x[i].powi(6) - 6.0 * x[i];
            assert!((df - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn cumulative_integration_matches_antiderivative() {
        let (x, w) = gauss_legendre(10);
        let c = cumulative_integration(&x, &w);
        let q: Vec<f64> = x.iter().map(|x| 3.0 * x * x - 1.0).collect();
        for i in 0..x.len() {
            let v: f64 = (0..x.len()).map(|j| c[(i, j)] * q[j]).sum();
            let exact = x[i].powi(3) - x[i] - ((-1.0f64).powi(3) + 1.0);
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn assoc_legendre_is_orthonormal() {
        let (x, w) = gauss_legendre(24);
        for m in 0..5 {
            let vals: Vec<Vec<f64>> = x.iter().map(|&x| assoc_legendre(m, 12, x)).collect();
            for a in 0..vals[0].len() {
                for b in 0..vals[0].len() {
                    let ip: f64 = (0..x.len()).map(|i| w[i] * vals[i][a] * vals[i][b]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12, "m={m} {a} {b} {ip}");
                }
            }
        }
    }
}
