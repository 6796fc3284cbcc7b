//! Run configuration.
//!
//! One `key = value` pair per line. `#` starts a comment, blank lines are
//! ignored, keys are case-sensitive and may appear once. Lists are
//! comma-separated. Either `eps` or `mu` must be given together with `delta`;
//! with `mu` the Rossby-type parameter is `eps = delta / mu`.
//!
//! | key            | default       | meaning                                          |
//! |----------------|---------------|--------------------------------------------------|
//! | `surface`      | `sphere`      | profile spec (`sphere`, `bump:A`, `poly:..`, ..) |
//! | `coriolis`     | `exact`       | `exact`, `cos`, `perturbed:<eta>[,<size>]`       |
//! | `eps`, `mu`    | required (one)| fast-rotation parameter or ratio `delta/eps`     |
//! | `delta`        | required      | fast-gravity parameter                           |
//! | `n1`, `n2`     | `64`, `48`    | longitudes, colatitudes                          |
//! | `k`            | `3`           | regularity index of the reported norms           |
//! | `k_prime`      | `k - 1`       | norm index of the limit comparison               |
//! | `scheme`       | `rk4`         | `rk4` or `imex`                                  |
//! | `dt`           | `1e-3`        | time step                                        |
//! | `t_end`        | `0.5`         | final time                                       |
//! | `stride`       | `10`          | steps per snapshot                               |
//! | `safety`       | `0.9`         | RK4 stability fraction                           |
//! | `ceiling`      | `1e8`         | H^k norm flagged as blow-up                      |
//! | `nonlinear`    | `true`        | `false` drops the quadratic term                 |
//! | `init`         | `random`      | `random`, `zonal`, `prepared`, `solid_body`      |
//! | `amplitude`    | `0.5`         | L² size of the initial state                     |
//! | `seed`         | `1`           | random seed                                      |
//! | `lmax`         | `8`           | band limit of random data                        |
//! | `decay`        | `1.0`         | spectral decay exponent of random data           |
//! | `wave_fraction`| `0.03`        | non-kernel share of `prepared` data              |
//! | `samples`      | `20`          | random fields per verification suite             |
//! | `ratio_bound`  | `1`           | constant `C` in `delta <= C eps`                 |
//! | `constrained`  | `false`       | enforce `delta <= C eps` for every suite         |
//! | `eps_scan`     | `0.02,0.01,0.005` | time-average suite at fixed `mu`            |
//! | `t_window`     | `0.5`         | time-average window                              |
//! | `delta_scan`   | `0.1,0.03,0.01`  | limit suite at fixed `mu`                     |
//! | `limit_t`      | `0.25`        | limit comparison time                            |
//! | `coarse_n1`, `coarse_n2` | `16`, `12` | grid of the limit suite              |
//! | `blowup_eps`   | `1e-2,1e-3,1e-4` | blow-up exponent scan                        |
//! | `blowup_pde`   | `false`       | also run the PDE corroboration                   |
//! | `out`          | `out`         | output directory                                 |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::dynamics::{IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::fields::{Params, State};
use crate::geometry::SurfaceProfile;
use crate::grid::Grid;
use crate::io::hash_hex;
use crate::kernel::project_kernel;
use crate::operators::{CoriolisProfile, Operators};
use crate::{dynamics, random};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "ZONALSIM_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Random,
    Zonal,
    /// Kernel projection of zonal data plus a small wave part.
    Prepared,
    SolidBody,
}

impl InitKind {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "zonal" => Ok(Self::Zonal),
            "prepared" => Ok(Self::Prepared),
            "solid_body" => Ok(Self::SolidBody),
            _ => Err(format!("unknown init `{s}`")),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Zonal => "zonal",
            Self::Prepared => "prepared",
            Self::SolidBody => "solid_body",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub amplitude: f64,
    pub seed: u64,
    pub lmax: usize,
    pub decay: f64,
    pub wave_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub surface: String,
    pub coriolis: String,
    pub eps: f64,
    pub delta: f64,
    pub n1: usize,
    pub n2: usize,
    pub k: i32,
    pub k_prime: i32,
    pub integrator: IntegratorConfig,
    pub init: InitSpec,
    pub samples: usize,
    pub ratio_bound: f64,
    pub constrained: bool,
    pub eps_scan: Vec<f64>,
    pub t_window: f64,
    pub delta_scan: Vec<f64>,
    pub limit_t: f64,
    pub coarse: (usize, usize),
    pub blowup_eps: Vec<f64>,
    pub blowup_pde: bool,
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "surface", "coriolis", "eps", "mu", "delta", "n1", "n2", "k", "k_prime", "scheme", "dt", "t_end", "stride",
    "safety", "ceiling", "nonlinear", "init", "amplitude", "seed", "lmax", "decay", "wave_fraction", "samples",
    "ratio_bound", "constrained", "eps_scan", "t_window", "delta_scan", "limit_t", "coarse_n1", "coarse_n2",
    "blowup_eps", "blowup_pde", "out",
];

struct Fields {
    map: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Fields {
    fn get<T: FromStr>(&mut self, key: &str, default: T) -> T {
        match self.map.get(key) {
            None => default,
            Some(v) => v.parse().unwrap_or_else(|_| {
                self.errors.push(format!("`{key}`: cannot parse `{v}`"));
                default
            }),
        }
    }

    fn opt(&mut self, key: &str) -> Option<f64> {
        let v = self.map.get(key)?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("`{key}`: cannot parse `{v}`"));
                None
            }
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        let Some(v) = self.map.get(key) else { return default.to_vec() };
        let parsed: std::result::Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match parsed {
            Ok(xs) if !xs.is_empty() => xs,
            _ => {
                self.errors.push(format!("`{key}`: cannot parse list `{v}`"));
                default.to_vec()
            }
        }
    }

    fn positive(&mut self, key: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.errors.push(format!("`{key}` must be positive (got {x})"));
        }
    }
}

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses and validates; every violation found is reported at once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut f = Fields { map: BTreeMap::new(), errors: Vec::new() };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                f.errors.push(format!("line {}: expected `key = value`", no + 1));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                f.errors.push(format!("line {}: unknown key `{k}`", no + 1));
            } else if f.map.insert(k.to_owned(), v.to_owned()).is_some() {
                f.errors.push(format!("line {}: duplicate key `{k}`", no + 1));
            }
        }

        let surface: String = f.get("surface", "sphere".to_owned());
        if let Err(e) = SurfaceProfile::parse(&surface) {
            f.errors.push(format!("`surface`: {e}"));
        }
        let coriolis: String = f.get("coriolis", "exact".to_owned());

        let delta = f.opt("delta");
        let eps = f.opt("eps");
        let mu = f.opt("mu");
        if delta.is_none() && !f.map.contains_key("delta") {
            f.errors.push("missing required key `delta`".into());
        }
        let delta = delta.unwrap_or(f64::NAN);
        let eps = match (eps, mu) {
            (Some(_), Some(_)) => {
                f.errors.push("give either `eps` or `mu`, not both".into());
                f64::NAN
            }
            (Some(e), None) => e,
            (None, Some(m)) => {
                f.positive("mu", m);
                delta / m
            }
            (None, None) => {
                if !f.map.contains_key("eps") && !f.map.contains_key("mu") {
                    f.errors.push("missing required key `eps` (or `mu`)".into());
                }
                f64::NAN
            }
        };
        if f.map.contains_key("delta") {
            f.positive("delta", delta);
        }
        if f.map.contains_key("eps") {
            f.positive("eps", eps);
        }

        let n1: usize = f.get("n1", 64);
        let n2: usize = f.get("n2", 48);
        let k: i32 = f.get("k", 3);
        let k_prime: i32 = f.get("k_prime", k - 1);
        let scheme_s: String = f.get("scheme", "rk4".to_owned());
        let scheme = Scheme::parse(&scheme_s).unwrap_or_else(|e| {
            f.errors.push(format!("`scheme`: {e}"));
            Scheme::Rk4
        });
        let integrator = IntegratorConfig {
            dt: f.get("dt", 1e-3),
            scheme,
            t_end: f.get("t_end", 0.5),
            stride: f.get("stride", 10),
            safety: f.get("safety", 0.9),
            ceiling: f.get("ceiling", 1e8),
            k,
            nonlinear: f.get("nonlinear", true),
        };
        let init_s: String = f.get("init", "random".to_owned());
        let kind = InitKind::parse(&init_s).unwrap_or_else(|e| {
            f.errors.push(format!("`init`: {e}"));
            InitKind::Random
        });
        let init = InitSpec {
            kind,
            amplitude: f.get("amplitude", 0.5),
            seed: f.get("seed", 1),
            lmax: f.get("lmax", 8),
            decay: f.get("decay", 1.0),
            wave_fraction: f.get("wave_fraction", 0.03),
        };
        let cfg = RunConfig {
            surface,
            coriolis,
            eps,
            delta,
            n1,
            n2,
            k,
            k_prime,
            integrator,
            init,
            samples: f.get("samples", 20),
            ratio_bound: f.get("ratio_bound", 1.0),
            constrained: f.get("constrained", false),
            eps_scan: f.list("eps_scan", &[0.02, 0.01, 0.005]),
            t_window: f.get("t_window", 0.5),
            delta_scan: f.list("delta_scan", &[0.1, 0.03, 0.01]),
            limit_t: f.get("limit_t", 0.25),
            coarse: (f.get("coarse_n1", 16), f.get("coarse_n2", 12)),
            blowup_eps: f.list("blowup_eps", &[1e-2, 1e-3, 1e-4]),
            blowup_pde: f.get("blowup_pde", false),
            out: f.get("out", PathBuf::from("out")),
        };

        for (key, v) in [("n1", cfg.n1), ("n2", cfg.n2), ("stride", cfg.integrator.stride), ("samples", cfg.samples)] {
            if v == 0 {
                f.errors.push(format!("`{key}` must be positive"));
            }
        }
        if cfg.coarse.0 == 0 || cfg.coarse.1 == 0 {
            f.errors.push("`coarse_n1` and `coarse_n2` must be positive".into());
        }
        for (key, v) in [
            ("dt", cfg.integrator.dt),
            ("t_end", cfg.integrator.t_end),
            ("safety", cfg.integrator.safety),
            ("ceiling", cfg.integrator.ceiling),
            ("amplitude", cfg.init.amplitude),
            ("ratio_bound", cfg.ratio_bound),
            ("t_window", cfg.t_window),
            ("limit_t", cfg.limit_t),
        ] {
            f.positive(key, v);
        }
        for (key, xs) in [("eps_scan", &cfg.eps_scan), ("delta_scan", &cfg.delta_scan), ("blowup_eps", &cfg.blowup_eps)] {
            if xs.iter().any(|x| !(*x > 0.0)) {
                f.errors.push(format!("`{key}` entries must be positive"));
            }
        }
        if cfg.constrained {
            if let Some(v) = cfg.ratio_violation() {
                f.errors.push(v);
            }
        }
        if f.errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(f.errors))
        }
    }

    fn ratio_violation(&self) -> Option<String> {
        (self.delta > self.ratio_bound * self.eps).then(|| {
            format!("delta = {} exceeds ratio_bound * eps = {}", self.delta, self.ratio_bound * self.eps)
        })
    }

    /// Checks `delta <= C eps`, required by the bounded-norm monitoring suite.
    pub fn require_ratio(&self) -> Result<()> {
        match self.ratio_violation() {
            Some(v) => Err(Error::Config(vec![v])),
            None => Ok(()),
        }
    }

    pub fn mu(&self) -> f64 {
        self.delta / self.eps
    }

    pub fn params(&self) -> Params {
        Params { eps: self.eps, delta: self.delta }
    }

    /// Resolved configuration, one sorted `key = value` per line. The
    /// output directory is left out so that it does not change the hash.
    pub fn canonical(&self) -> String {
        let join = |xs: &[f64]| xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let ic = &self.integrator;
        let mut kv: Vec<(&str, String)> = vec![
            ("surface", self.surface.clone()),
            ("coriolis", self.coriolis.clone()),
            ("eps", format!("{:e}", self.eps)),
            ("delta", format!("{:e}", self.delta)),
            ("n1", self.n1.to_string()),
            ("n2", self.n2.to_string()),
            ("k", self.k.to_string()),
            ("k_prime", self.k_prime.to_string()),
            ("scheme", format!("{:?}", ic.scheme).to_lowercase()),
            ("dt", format!("{:e}", ic.dt)),
            ("t_end", format!("{:e}", ic.t_end)),
            ("stride", ic.stride.to_string()),
            ("safety", format!("{:e}", ic.safety)),
            ("ceiling", format!("{:e}", ic.ceiling)),
            ("nonlinear", ic.nonlinear.to_string()),
            ("init", self.init.kind.label().into()),
            ("amplitude", format!("{:e}", self.init.amplitude)),
            ("seed", self.init.seed.to_string()),
            ("lmax", self.init.lmax.to_string()),
            ("decay", format!("{:e}", self.init.decay)),
            ("wave_fraction", format!("{:e}", self.init.wave_fraction)),
            ("samples", self.samples.to_string()),
            ("ratio_bound", format!("{:e}", self.ratio_bound)),
            ("constrained", self.constrained.to_string()),
            ("eps_scan", join(&self.eps_scan)),
            ("t_window", format!("{:e}", self.t_window)),
            ("delta_scan", join(&self.delta_scan)),
            ("limit_t", format!("{:e}", self.limit_t)),
            ("coarse_n1", self.coarse.0.to_string()),
            ("coarse_n2", self.coarse.1.to_string()),
            ("blowup_eps", join(&self.blowup_eps)),
            ("blowup_pde", self.blowup_pde.to_string()),
        ];
        kv.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn hash(&self) -> String {
        hash_hex(&self.canonical())
    }

    pub fn profile(&self) -> Result<SurfaceProfile> {
        SurfaceProfile::parse(&self.surface)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.profile()?, self.n1, self.n2)
    }

    pub fn coarse_grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.profile()?, self.coarse.0, self.coarse.1)
    }

    pub fn operators(&self, grid: &Arc<Grid>, params: Params) -> Result<Operators> {
        let c = CoriolisProfile::parse(&self.coriolis, grid, params.eps)?;
        Ok(Operators::new(grid, c, params))
    }

    /// Initial state from the configured builtin, scaled to `amplitude` in L².
    pub fn initial_state(&self, ops: &Operators) -> Result<State> {
        let g = &ops.grid;
        let i = &self.init;
        let s = match i.kind {
            InitKind::Random => random::state(g, i.lmax, i.decay, i.seed, 1.0),
            InitKind::Zonal => random::zonal_state(g, i.lmax, i.decay, i.seed, 1.0),
            InitKind::Prepared => {
                let s = random::zonal_state(g, i.lmax, i.decay, i.seed, 1.0);
                let p = project_kernel(ops, &s);
                p.axpy(i.wave_fraction, &(&s - &p))
            }
            InitKind::SolidBody => {
                let u = dynamics::solid_body(g, 1.0);
                State::new(u, crate::fields::ScalarField::zeros(g))?
            }
        };
        let n = s.l2_norm();
        if !(n > 0.0) {
            return Err(Error::DegenerateInput("initial state has zero norm".into()));
        }
        Ok(s.scale(i.amplitude / n))
    }

    /// Applies command-line and environment overrides.
    pub fn with_overrides(mut self, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Ok(dir) = std::env::var(OUT_ENV) {
            if !dir.is_empty() {
                self.out = dir.into();
            }
        }
        if let Some(o) = out {
            self.out = o;
        }
        if let Some(s) = seed {
            self.init.seed = s;
        }
        self
    }
}
