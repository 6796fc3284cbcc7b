//! Dense operator exponentials on coarse grids, the averaged nonlinearity
//! of the singular limit, and zonal time averages.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::{nonlinearity, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, State, VectorField};
use crate::grid::Grid;
use crate::kernel::{build_kernel_state, ZonalProfilePair};
use crate::operators::Operators;
use crate::propagator::LinearPropagator;

/// Largest state dimension assembled densely.
pub const DIM_CAP: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// `(1/δ) 𝓛_∂ + (1/ε) 𝓛_0`
    Full,
    /// `𝓛_∂ + μ 𝓛_0`
    Scaled,
    /// `Δ − 𝓝`
    Corrected,
    Zero,
}

impl OperatorKind {
    fn is_skew(self) -> bool {
        matches!(self, Self::Full | Self::Scaled | Self::Zero)
    }
}

/// Flattens `(u1, u2, h)` nodal values.
pub fn state_to_vec(s: &State) -> DVector<f64> {
    let n = s.h.values.len();
    let mut v = DVector::zeros(3 * n);
    v.rows_mut(0, n).copy_from_slice(&s.u.c1);
    v.rows_mut(n, n).copy_from_slice(&s.u.c2);
    v.rows_mut(2 * n, n).copy_from_slice(&s.h.values);
    v
}

pub fn vec_to_state(grid: &Arc<Grid>, v: &DVector<f64>) -> State {
    let n = grid.len();
    let mut u = VectorField::zeros(grid);
    u.c1.copy_from_slice(v.rows(0, n).as_slice());
    u.c2.copy_from_slice(v.rows(n, n).as_slice());
    let h = ScalarField { grid: grid.clone(), values: v.rows(2 * n, n).iter().copied().collect() };
    State { u, h }
}

/// Diagonal weight `W` with `x·W·y = ⟨x, y⟩` for flattened states.
pub fn state_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.len();
    let dl = grid.dlon();
    let mut w = vec![0.0; 3 * n];
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let k = grid.idx(i, j);
            let a = dl * grid.area_w[j];
            w[k] = a * grid.metric.g1[j];
            w[n + k] = a * grid.metric.g2[j];
            w[2 * n + k] = a;
        }
    }
    w
}

/// `M = W^{-1/2} Q diag(spec) Q* W^{1/2}` with `Q` unitary.
struct Eigen {
    spec: Vec<Complex64>,
    vecs: DMatrix<Complex64>,
    vecs_adj: DMatrix<Complex64>,
}

pub struct OperatorMatrix {
    pub grid: Arc<Grid>,
    pub kind: OperatorKind,
    pub mat: DMatrix<f64>,
    pub weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    eig: Eigen,
}

impl OperatorMatrix {
    /// Assembles the operator column by column from its action on unit
    /// nodal states, then diagonalises it in the weighted inner product.
    pub fn assemble(ops: &Operators, kind: OperatorKind) -> Result<Self> {
        let grid = ops.grid.clone();
        let dim = 3 * grid.len();
        if dim > DIM_CAP {
            return Err(Error::TooLarge { dim, cap: DIM_CAP });
        }
        let coeffs = ops.corrector();
        let apply = |s: &State| match kind {
            OperatorKind::Full => ops.apply_l(s),
            OperatorKind::Scaled => ops.apply_l_scaled(s),
            OperatorKind::Corrected => ops.corrected_laplacian(s, &coeffs),
            OperatorKind::Zero => State::zeros(&grid),
        };
        let mut mat = DMatrix::zeros(dim, dim);
        let mut e = DVector::zeros(dim);
        for c in 0..dim {
            e[c] = 1.0;
            let col = state_to_vec(&apply(&vec_to_state(&grid, &e)));
            mat.set_column(c, &col);
            e[c] = 0.0;
        }
        let weights = state_weights(&grid);
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let eig = decompose(&mat, &sqrt_w, kind.is_skew());
        Ok(Self { grid, kind, mat, weights, sqrt_w, eig })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Eigenvalues of the matrix (purely imaginary for `𝓛`, real for `Δ − 𝓝`).
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eig.spec
    }

    pub fn apply(&self, s: &State) -> State {
        vec_to_state(&self.grid, &(&self.mat * state_to_vec(s)))
    }

    /// `‖M + W⁻¹ Mᵀ W‖ / ‖M‖`
    pub fn skewness_defect(&self) -> f64 {
        self.adjoint_defect(1.0)
    }

    /// `‖M − W⁻¹ Mᵀ W‖ / ‖M‖`
    pub fn symmetry_defect(&self) -> f64 {
        self.adjoint_defect(-1.0)
    }

    fn adjoint_defect(&self, sign: f64) -> f64 {
        let n = self.dim();
        let w = &self.weights;
        let adj = DMatrix::from_fn(n, n, |r, c| self.mat[(c, r)] * w[c] / w[r]);
        let norm = self.mat.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.mat + adj * sign).norm() / norm
    }

    fn to_eig(&self, s: &State) -> DVector<Complex64> {
        let x = state_to_vec(s);
        let z = DVector::from_iterator(x.len(), x.iter().zip(&self.sqrt_w).map(|(v, w)| Complex64::new(v * w, 0.0)));
        &self.eig.vecs_adj * z
    }

    fn from_eig(&self, y: &DVector<Complex64>) -> State {
        let x = &self.eig.vecs * y;
        let v = DVector::from_iterator(x.len(), x.iter().zip(&self.sqrt_w).map(|(c, w)| c.re / w));
        vec_to_state(&self.grid, &v)
    }

    /// `e^{tM} s`
    pub fn exp(&self, t: f64, s: &State) -> State {
        let mut y = self.to_eig(s);
        for (yi, l) in y.iter_mut().zip(&self.eig.spec) {
            *yi *= (l * t).exp();
        }
        self.from_eig(&y)
    }
}

impl LinearPropagator for OperatorMatrix {
    fn propagate(&self, t: f64, s: &State) -> State {
        self.exp(t, s)
    }

    fn max_frequency(&self) -> f64 {
        self.eig.spec.iter().fold(0.0f64, |a, l| a.max(l.im.abs()))
    }
}

fn decompose(mat: &DMatrix<f64>, sqrt_w: &[f64], skew: bool) -> Eigen {
    let n = mat.nrows();
    // S = W^{1/2} M W^{-1/2}, symmetric or skew in the Euclidean product
    let s = DMatrix::from_fn(n, n, |r, c| mat[(r, c)] * sqrt_w[r] / sqrt_w[c]);
    if skew {
        let h = DMatrix::from_fn(n, n, |r, c| Complex64::new(0.0, 0.5 * (s[(r, c)] - s[(c, r)])));
        let e = SymmetricEigen::new(h);
        // iS = Q λ Q*  ⇒  S = Q (−iλ) Q*
        let spec = e.eigenvalues.iter().map(|l| Complex64::new(0.0, -l)).collect();
        Eigen { spec, vecs_adj: e.eigenvectors.adjoint(), vecs: e.eigenvectors }
    } else {
        let sym = (&s + s.transpose()) * 0.5;
        let e = SymmetricEigen::new(sym);
        let vecs = e.eigenvectors.map(|v| Complex64::new(v, 0.0));
        let spec = e.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect();
        Eigen { spec, vecs_adj: vecs.adjoint(), vecs }
    }
}

/// Windowed conjugation average of the nonlinearity.
#[derive(Clone, Debug)]
pub struct AveragedNonlinearity {
    pub value: State,
    /// Window length.
    pub ell: f64,
    /// `‖B̄_ℓ − B̄_{ℓ/2}‖₀ / ‖B̄_ℓ‖₀` (absolute when `B̄_ℓ = 0`).
    pub residual: f64,
}

/// Window and sampling of the average over `s ∈ [0, ℓ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragingWindow {
    pub ell: f64,
    /// Even number of trapezoid intervals.
    pub n_samples: usize,
}

impl AveragingWindow {
    /// Picks `n_samples` so that the highest frequency of the integrand,
    /// three times the generator's, gets about `per_period` samples per period.
    pub fn resolving<P: LinearPropagator>(m: &P, ell: f64, per_period: f64) -> Self {
        let w = 3.0 * m.max_frequency();
        let n = ((ell * w / std::f64::consts::TAU * per_period).ceil() as usize).max(2);
        Self { ell, n_samples: n + n % 2 }
    }
}

/// `B̄(V̄) ≈ (1/ℓ) ∫₀^ℓ e^{sM} B[e^{−sM} V̄] ds` by the trapezoid rule, with
/// the first-half window reported as a convergence residual.
pub fn averaged_b<P: LinearPropagator>(vbar: &State, m: &P, win: AveragingWindow) -> Result<AveragedNonlinearity> {
    if !(win.ell > 0.0) || win.n_samples < 2 || win.n_samples % 2 != 0 {
        return Err(Error::InvalidConfig(format!("averaging window ℓ = {}, samples = {}", win.ell, win.n_samples)));
    }
    let n = win.n_samples;
    let ds = win.ell / n as f64;
    let mut full = State::zeros(vbar.grid());
    let mut half = State::zeros(vbar.grid());
    for i in 0..=n {
        let s = i as f64 * ds;
        let g = m.propagate(s, &nonlinearity(&m.propagate(-s, vbar)));
        let wf = if i == 0 || i == n { 0.5 } else { 1.0 };
        full = full.axpy(wf * ds / win.ell, &g);
        if i <= n / 2 {
            let wh = if i == 0 || i == n / 2 { 0.5 } else { 1.0 };
            half = half.axpy(wh * 2.0 * ds / win.ell, &g);
        }
    }
    let scale = full.l2_norm();
    let gap = (&full - &half).l2_norm();
    let residual = if scale > 0.0 { gap / scale } else { gap };
    Ok(AveragedNonlinearity { value: full, ell: win.ell, residual })
}

/// Residuals over a sequence of windows, and whether they fail to decrease.
pub fn window_scan<P: LinearPropagator>(vbar: &State, m: &P, ells: &[f64], per_period: f64) -> Result<(Vec<f64>, bool)> {
    let mut res = Vec::with_capacity(ells.len());
    for &ell in ells {
        res.push(averaged_b(vbar, m, AveragingWindow::resolving(m, ell, per_period))?.residual);
    }
    let nonconvergent = res.windows(2).any(|w| w[1] >= w[0]);
    Ok((res, nonconvergent))
}

#[derive(Clone, Debug)]
pub struct LimitTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Size of the mean re-projection applied to `h` at each step.
    pub mean_corrections: Vec<f64>,
}

impl LimitTrajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has the initial state")
    }

    pub fn max_mean_correction(&self) -> f64 {
        self.mean_corrections.iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }
}

/// RK4 for `∂t V̄ + B̄(V̄) = 0`, re-projecting the mean of `h` each step.
pub fn integrate_limit_equation<P: LinearPropagator>(
    v0: &State,
    m: &P,
    win: AveragingWindow,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<LimitTrajectory> {
    if !(dt > 0.0) || stride == 0 {
        return Err(Error::InvalidConfig(format!("dt = {dt}, stride = {stride}")));
    }
    let f = |v: &State| -> Result<State> { Ok(averaged_b(v, m, win)?.value.scale(-1.0)) };
    let n_steps = (t_end / dt).round() as usize;
    let mean0 = v0.h.mean();
    let mut out = LimitTrajectory { times: vec![0.0], states: vec![v0.clone()], mean_corrections: vec![] };
    let mut v = v0.clone();
    for n in 1..=n_steps {
        let k1 = f(&v)?;
        let k2 = f(&v.axpy(0.5 * dt, &k1))?;
        let k3 = f(&v.axpy(0.5 * dt, &k2))?;
        let k4 = f(&v.axpy(dt, &k3))?;
        v = v.axpy(dt / 6.0, &k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4));
        let t = n as f64 * dt;
        if !v.is_finite() {
            return Err(Error::BlowupDetected { t, reason: "non-finite averaged state".into() });
        }
        let corr = v.h.mean() - mean0;
        v.h = v.h.map(|x| x - corr);
        out.mean_corrections.push(corr);
        if n % stride == 0 || n == n_steps {
            out.times.push(t);
            out.states.push(v.clone());
        }
    }
    Ok(out)
}

/// Zonal time-average diagnostics over `[0, T]`.
#[derive(Clone, Debug)]
pub struct TimeAverageReport {
    pub t_window: f64,
    pub avg_u: VectorField,
    /// Average of `(ε/δ) h`.
    pub avg_h: ScalarField,
    pub profiles: ZonalProfilePair,
    /// `‖avg_u − J∇Φ‖` in `H^{k−3}`.
    pub err_u: f64,
    /// `‖avg_h − Ψ‖` in `H^{k−2}` (Ψ shifted to zero mean).
    pub err_h: f64,
    /// Largest `H^k` norm over the window.
    pub max_norm: f64,
    /// `ε (2M/T + M²)`
    pub bound: f64,
    /// `max |Ψ′ − FΦ′|`
    pub profile_residual: f64,
}

impl TimeAverageReport {
    pub fn ratio_u(&self) -> f64 {
        self.err_u / self.bound
    }

    pub fn ratio_h(&self) -> f64 {
        self.err_h / self.bound
    }
}

fn vector_norm(v: &VectorField, order: i32) -> Result<f64> {
    if order <= 0 {
        Ok(v.l2_norm())
    } else {
        v.hk_norm(order)
    }
}

fn scalar_norm(f: &ScalarField, order: i32) -> f64 {
    f.hk_norm(order.max(0) as u32)
}

/// Trapezoid averages of `u` and `(ε/δ) h` over the snapshots with
/// `t ≤ T`, compared against the zonal flow fitted to the averaged velocity.
pub fn zonal_time_average(traj: &Trajectory, ops: &Operators, t_window: f64, k: i32) -> Result<TimeAverageReport> {
    let idx: Vec<usize> = (0..traj.times.len()).filter(|&i| traj.times[i] <= t_window * (1.0 + 1e-12)).collect();
    if idx.len() < 3 {
        return Err(Error::InsufficientData(idx.len()));
    }
    let grid = &ops.grid;
    let t_last = traj.times[*idx.last().unwrap()];
    let mut acc = State::zeros(grid);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = traj.times[b] - traj.times[a];
        acc = acc.axpy(0.5 * dt, &traj.states[a]).axpy(0.5 * dt, &traj.states[b]);
    }
    let avg = acc.scale(1.0 / (t_last - traj.times[idx[0]]));
    let inv_mu = 1.0 / ops.params.mu();
    let avg_h = avg.h.scale(inv_mu);

    let ut = crate::kernel::zonal_mean_velocity(&avg.u);
    let phi = ut.hodge().sigma2;
    let (ks, profiles) = build_kernel_state(ops, &phi)?;
    let err_u = vector_norm(&(&avg.u - &ks.u), k - 3)?;
    let err_h = scalar_norm(&(&avg_h - &ks.h.scale(inv_mu)), k - 2);
    let mut max_norm = 0.0f64;
    for &i in &idx {
        max_norm = max_norm.max(traj.states[i].hk_norm(k)?);
    }
    let bound = ops.params.eps * (2.0 * max_norm / t_last + max_norm * max_norm);
    let profile_residual = profiles.derivative_residual(grid, &ops.coriolis.f);
    Ok(TimeAverageReport {
        t_window: t_last,
        avg_u: avg.u,
        avg_h,
        profiles,
        err_u,
        err_h,
        max_norm,
        bound,
        profile_residual,
    })
}
