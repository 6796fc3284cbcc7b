//! Surfaces of revolution `x = R(p2) (cos p1 sin p2, sin p1 sin p2, cos p2)`,
//! their metric and the pointwise algebra (dot product, rotation `J`).

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum ProfileKind {
    /// `R(p2) = Σ_k a_k cos(k p2) + b_k sin(k p2)`
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
    /// `R(p2) = Σ_i c_i p2^i`
    Polynomial(Vec<f64>),
}

/// Generating radius `R(p2)` of the surface, with closed-form derivatives of
/// every order.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    name: String,
    kind: ProfileKind,
}

impl SurfaceProfile {
    pub fn sphere() -> Self {
        Self {
            name: "sphere".into(),
            kind: ProfileKind::Fourier { cos: vec![1.0], sin: vec![] },
        }
    }

    /// `R = 1 + a sin^4(p2)`; the first three derivatives vanish at the poles.
    pub fn bump(a: f64) -> Self {
        // sin^4 = 3/8 - cos(2p)/2 + cos(4p)/8
        Self {
            name: format!("bump:{a}"),
            kind: ProfileKind::Fourier {
                cos: vec![1.0 + 3.0 * a / 8.0, 0.0, -a / 2.0, 0.0, a / 8.0],
                sin: vec![],
            },
        }
    }

    /// `R = 1 + a sin^2(p2)`; `R''` does not vanish at the poles.
    pub fn sin2(a: f64) -> Self {
        Self {
            name: format!("sin2:{a}"),
            kind: ProfileKind::Fourier { cos: vec![1.0 + a / 2.0, 0.0, -a / 2.0], sin: vec![] },
        }
    }

    pub fn fourier(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { name: "fourier".into(), kind: ProfileKind::Fourier { cos, sin } }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self { name: "poly".into(), kind: ProfileKind::Polynomial(coeffs) }
    }

    /// Parses `sphere`, `bump:<a>`, `sin2:<a>`, `poly:c0,c1,..` or
    /// `fourier:a0,a1,..;b1,b2,..`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (spec, None),
        };
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::InvalidProfile(format!("bad number `{s}`")))
        };
        let list = |s: &str| -> Result<Vec<f64>> {
            s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
        };
        match (head, rest) {
            ("sphere", None) => Ok(Self::sphere()),
            ("bump", Some(a)) => Ok(Self::bump(num(a)?)),
            ("sin2", Some(a)) => Ok(Self::sin2(num(a)?)),
            ("poly", Some(c)) => Ok(Self::polynomial(list(c)?)),
            ("fourier", Some(c)) => {
                let (a, b) = c.split_once(';').unwrap_or((c, ""));
                Ok(Self::fourier(list(a)?, list(b)?))
            }
            _ => Err(Error::InvalidProfile(format!("unknown profile `{spec}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// String accepted by [`SurfaceProfile::parse`] that rebuilds this profile.
    pub fn spec(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            _ if self.name != "fourier" && self.name != "poly" => self.name.clone(),
            ProfileKind::Fourier { cos, sin } => format!("fourier:{};{}", join(cos), join(sin)),
            ProfileKind::Polynomial(c) => format!("poly:{}", join(c)),
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(&self.kind, ProfileKind::Fourier { cos, sin }
            if cos.first() == Some(&1.0) && cos.iter().skip(1).all(|c| *c == 0.0) && sin.iter().all(|s| *s == 0.0))
    }

    pub fn r(&self, p2: f64) -> f64 {
        self.deriv(0, p2)
    }

    /// `d^order R / dp2^order`.
    pub fn deriv(&self, order: u32, p2: f64) -> f64 {
        match &self.kind {
            ProfileKind::Fourier { cos, sin } => {
                let mut acc = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    if *a == 0.0 || (k == 0 && order > 0) {
                        continue;
                    }
                    let kf = k as f64;
                    // d^n cos(kp) = k^n cos(kp + nπ/2)
                    acc += a * kf.powi(order as i32) * (kf * p2 + order as f64 * PI / 2.0).cos();
                }
                for (i, b) in sin.iter().enumerate() {
                    let kf = (i + 1) as f64;
                    acc += b * kf.powi(order as i32) * (kf * p2 + order as f64 * PI / 2.0).sin();
                }
                acc
            }
            ProfileKind::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate() {
                    if (i as u32) < order {
                        continue;
                    }
                    let mut fall = 1.0;
                    for j in 0..order {
                        fall *= (i as u32 - j) as f64;
                    }
                    acc += ci * fall * p2.powi(i as i32 - order as i32);
                }
                acc
            }
        }
    }

    /// Cartesian embedding point of `(p1, p2)`.
    pub fn embed(&self, p1: f64, p2: f64) -> [f64; 3] {
        let r = self.r(p2);
        [r * p1.cos() * p2.sin(), r * p1.sin() * p2.sin(), r * p2.cos()]
    }

    /// Coordinate tangent vectors `v_∂1`, `v_∂2` in R^3.
    pub fn tangent_frame(&self, p1: f64, p2: f64) -> ([f64; 3], [f64; 3]) {
        let r = self.r(p2);
        let dr = self.deriv(1, p2);
        let (s1, c1, s2, c2) = (p1.sin(), p1.cos(), p2.sin(), p2.cos());
        let v1 = [-s1 * s2 * r, c1 * s2 * r, 0.0];
        let v2 = [c1 * c2 * r + c1 * s2 * dr, s1 * c2 * r + s1 * s2 * dr, -s2 * r + c2 * dr];
        (v1, v2)
    }
}

impl fmt::Display for SurfaceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `(a1, a2, a3, a4)` witnessing the chart monotonicity conditions.
    pub witness: Option<[f64; 4]>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Machine-readable `key=value` lines.
    pub fn to_kv_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{}={} # {}\n", c.name, if c.passed { "pass" } else { "fail" }, c.detail));
        }
        if let Some(w) = self.witness {
            out.push_str(&format!("witness={:.6},{:.6},{:.6},{:.6}\n", w[0], w[1], w[2], w[3]));
        }
        out
    }
}

const SCAN_POINTS: usize = 10_000;
const POLE_TOL: f64 = 1e-10;

/// Checks positivity, endpoint values, vanishing pole derivatives up to
/// order `k`, and scans for a chart quadruple `a1 < a2 < π/2 < a3 < a4`.
pub fn validate_surface(profile: &SurfaceProfile, k: u32) -> Result<ValidationReport> {
    let mesh: Vec<f64> = (0..=SCAN_POINTS).map(|i| PI * i as f64 / SCAN_POINTS as f64).collect();
    let r: Vec<f64> = mesh.iter().map(|&p| profile.r(p)).collect();
    if let Some(bad) = r.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidProfile(format!("R({}) is not finite", mesh[bad])));
    }
    let mut checks = Vec::new();
    let rmin = r.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "positivity".into(),
        passed: rmin > 0.0,
        detail: format!("inf R = {rmin:.6e}"),
    });
    let (r0, rpi) = (profile.r(0.0), profile.r(PI));
    checks.push(Check {
        name: "endpoints".into(),
        passed: (r0 - 1.0).abs() < 1e-12 && (rpi - 1.0).abs() < 1e-12,
        detail: format!("R(0) = {r0}, R(pi) = {rpi}"),
    });
    for m in 1..=k {
        let (a, b) = (profile.deriv(m, 0.0), profile.deriv(m, PI));
        checks.push(Check {
            name: format!("pole_derivative_{m}"),
            passed: a.abs() <= POLE_TOL && b.abs() <= POLE_TOL,
            detail: format!("R^({m})(0) = {a:.3e}, R^({m})(pi) = {b:.3e}"),
        });
    }

    // Q = R sin p2 (distance to axis), Z = R cos p2 (height)
    let dq: Vec<f64> =
        mesh.iter().map(|&p| profile.deriv(1, p) * p.sin() + profile.r(p) * p.cos()).collect();
    let dz: Vec<f64> =
        mesh.iter().map(|&p| profile.deriv(1, p) * p.cos() - profile.r(p) * p.sin()).collect();
    let half = SCAN_POINTS / 2;
    let witness = chart_witness(&dq, &dz, half).map(|[i1, i2, i3, i4]| [mesh[i1], mesh[i2], mesh[i3], mesh[i4]]);
    checks.push(Check {
        name: "chart".into(),
        passed: witness.is_some(),
        detail: match witness {
            Some(w) => format!("a = ({:.4}, {:.4}, {:.4}, {:.4})", w[0], w[1], w[2], w[3]),
            None => "no quadruple found on the scan mesh".into(),
        },
    });
    Ok(ValidationReport { checks, witness })
}

fn chart_witness(dq: &[f64], dz: &[f64], half: usize) -> Option<[usize; 4]> {
    let n = dq.len() - 1;
    // largest i2 < half with dq > 0 on [0, i2]
    let mut i2 = None;
    for i in 0..half {
        if dq[i] > 0.0 {
            i2 = Some(i);
        } else {
            break;
        }
    }
    let mut i3 = None;
    for i in (half + 1..=n).rev() {
        if dq[i] < 0.0 {
            i3 = Some(i);
        } else {
            break;
        }
    }
    let (i2, i3) = (i2?, i3?);
    if dz[half] >= 0.0 {
        return None;
    }
    let mut lo = half;
    while lo > 1 && dz[lo - 1] < 0.0 {
        lo -= 1;
    }
    let mut hi = half;
    while hi < n - 1 && dz[hi + 1] < 0.0 {
        hi += 1;
    }
    // keep a1 > 0 and a4 < π strictly
    let i1 = lo.max(1);
    let i4 = hi.min(n - 1);
    (i1 < i2 && i2 < half && half < i3 && i3 < i4).then_some([i1, i2, i3, i4])
}

/// Metric coefficients sampled at colatitude nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSamples {
    pub p2: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub sqrt_detg: Vec<f64>,
    pub dg1: Vec<f64>,
    pub dg2: Vec<f64>,
}

/// Samples `g1 = sin² R²`, `g2 = R² + R'²` and their `p2`-derivatives.
pub fn build_metric(profile: &SurfaceProfile, colat_nodes: &[f64]) -> Result<MetricSamples> {
    let n = colat_nodes.len();
    let mut m = MetricSamples {
        p2: colat_nodes.to_vec(),
        r: Vec::with_capacity(n),
        dr: Vec::with_capacity(n),
        g1: Vec::with_capacity(n),
        g2: Vec::with_capacity(n),
        sqrt_detg: Vec::with_capacity(n),
        dg1: Vec::with_capacity(n),
        dg2: Vec::with_capacity(n),
    };
    for &p in colat_nodes {
        if p <= 0.0 || p >= PI {
            return Err(Error::PoleNode(p));
        }
        let (r, dr, d2r) = (profile.r(p), profile.deriv(1, p), profile.deriv(2, p));
        if !(r.is_finite() && dr.is_finite() && d2r.is_finite()) || r <= 0.0 {
            return Err(Error::InvalidProfile(format!("R({p}) = {r}")));
        }
        let (s, c) = (p.sin(), p.cos());
        let g1 = s * s * r * r;
        let g2 = r * r + dr * dr;
        m.r.push(r);
        m.dr.push(dr);
        m.g1.push(g1);
        m.g2.push(g2);
        m.sqrt_detg.push((g1 * g2).sqrt());
        m.dg1.push(2.0 * s * c * r * r + 2.0 * s * s * r * dr);
        m.dg2.push(2.0 * r * dr + 2.0 * dr * d2r);
    }
    Ok(m)
}

impl MetricSamples {
    pub fn len(&self) -> usize {
        self.p2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p2.is_empty()
    }

    /// Clockwise rotation of `v1 v_∂1 + v2 v_∂2` at node `j`.
    #[inline]
    pub fn rotate_j(&self, j: usize, v1: f64, v2: f64) -> (f64, f64) {
        let ratio = (self.g2[j] / self.g1[j]).sqrt();
        (-ratio * v2, v1 / ratio)
    }

    #[inline]
    pub fn dot(&self, j: usize, v: (f64, f64), w: (f64, f64)) -> f64 {
        self.g1[j] * v.0 * w.0 + self.g2[j] * v.1 * w.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_metric_at_known_nodes() {
        let m = build_metric(&SurfaceProfile::sphere(), &[PI / 2.0, PI / 6.0, PI / 3.0]).unwrap();
        assert!((m.g1[0] - 1.0).abs() < 1e-15 && m.g2[0] == 1.0);
        assert!((m.g1[1] - 0.25).abs() < 1e-15 && m.g2[1] == 1.0);
        // dot(v_∂1, v_∂1) at π/3
        assert!((m.dot(2, (1.0, 0.0), (1.0, 0.0)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pole_node_rejected() {
        assert!(matches!(build_metric(&SurfaceProfile::sphere(), &[0.0, 1.0]), Err(Error::PoleNode(_))));
        assert!(matches!(build_metric(&SurfaceProfile::sphere(), &[1.0, PI]), Err(Error::PoleNode(_))));
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let prof = SurfaceProfile::sin2(0.05);
        let h = 1e-6;
        let p = PI / 4.0;
        let m = build_metric(&prof, &[p - h, p, p + h]).unwrap();
        let fd1 = (m.g1[2] - m.g1[0]) / (2.0 * h);
        let fd2 = (m.g2[2] - m.g2[0]) / (2.0 * h);
        assert!((fd1 - m.dg1[1]).abs() < 1e-8, "{fd1} {}", m.dg1[1]);
        assert!((fd2 - m.dg2[1]).abs() < 1e-8, "{fd2} {}", m.dg2[1]);
        // closed form: R = 1 + 0.05 sin², R' = 0.05 sin 2p
        let r = 1.0 + 0.05 * 0.5;
        let dr = 0.05;
        assert!((m.g1[1] - 0.5 * r * r).abs() < 1e-14);
        assert!((m.g2[1] - (r * r + dr * dr)).abs() < 1e-14);
    }

    #[test]
    fn derivative_orders_agree_with_fd() {
        for prof in [SurfaceProfile::bump(0.1), SurfaceProfile::polynomial(vec![1.0, PI, -1.0])] {
            for order in 0..4 {
                let p = 0.7;
                let h = 1e-5;
                let fd = (prof.deriv(order, p + h) - prof.deriv(order, p - h)) / (2.0 * h);
                assert!((fd - prof.deriv(order + 1, p)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sphere_validates() {
        let rep = validate_surface(&SurfaceProfile::sphere(), 4).unwrap();
        assert!(rep.all_passed(), "{}", rep.to_kv_lines());
        let w = rep.witness.unwrap();
        assert!(0.0 < w[0] && w[0] < w[1] && w[1] < PI / 2.0 && PI / 2.0 < w[2] && w[2] < w[3] && w[3] < PI);
    }

    #[test]
    fn nonzero_pole_slope_fails_first_derivative_check() {
        // 1 + p(π - p) meets R(0) = R(π) = 1 but R'(0) = π
        let prof = SurfaceProfile::polynomial(vec![1.0, PI, -1.0]);
        let rep = validate_surface(&prof, 2).unwrap();
        assert!(rep.check("endpoints").unwrap().passed);
        assert!(!rep.check("pole_derivative_1").unwrap().passed);
    }

    #[test]
    fn sin2_profile_matches_dense_scan() {
        let prof = SurfaceProfile::sin2(0.05);
        let rep = validate_surface(&prof, 2).unwrap();
        assert!(rep.check("pole_derivative_1").unwrap().passed);
        // R'' (0) = 2a ≠ 0
        assert!(!rep.check("pole_derivative_2").unwrap().passed);
        // independent scan: the three monotonicity inequalities at the witness
        let w = rep.witness.expect("chart witness");
        let n = 10_000;
        let dq = |p: f64| prof.deriv(1, p) * p.sin() + prof.r(p) * p.cos();
        let dz = |p: f64| prof.deriv(1, p) * p.cos() - prof.r(p) * p.sin();
        for i in 0..=n {
            let t = i as f64 / n as f64;
            assert!(dq(t * w[1]) > 0.0);
            assert!(dq(w[2] + t * (PI - w[2])) < 0.0);
            assert!(dz(w[0] + t * (w[3] - w[0])) < 0.0);
        }
    }

    #[test]
    fn nonfinite_profile_rejected() {
        let prof = SurfaceProfile::polynomial(vec![f64::NAN]);
        assert!(matches!(validate_surface(&prof, 1), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn rotation_is_isometry_and_squares_to_minus_one() {
        let m = build_metric(&SurfaceProfile::bump(0.2), &[0.3, 1.1, 2.9]).unwrap();
        for j in 0..3 {
            let v = (0.37, -1.2);
            let w = (2.1, 0.4);
            let jv = m.rotate_j(j, v.0, v.1);
            let jw = m.rotate_j(j, w.0, w.1);
            assert!((m.dot(j, jv, jw) - m.dot(j, v, w)).abs() < 1e-14);
            assert!(m.dot(j, jv, v).abs() < 1e-14);
            let jjv = m.rotate_j(j, jv.0, jv.1);
            assert!((jjv.0 + v.0).abs() < 1e-15 && (jjv.1 + v.1).abs() < 1e-15);
        }
        // J v_∂2 = -v_∂1 at the equator of the sphere
        let s = build_metric(&SurfaceProfile::sphere(), &[PI / 2.0]).unwrap();
        let jv = s.rotate_j(0, 0.0, 1.0);
        assert!((jv.0 + 1.0).abs() < 1e-15 && jv.1.abs() < 1e-15);
    }
}
