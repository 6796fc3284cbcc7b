use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use zonalsim::blowup::fit_exponent;
use zonalsim::config::RunConfig;
use zonalsim::dynamics::{Integrator, IntegratorConfig, Scheme};
use zonalsim::io::{decode_snapshot, encode_snapshot};
use zonalsim::kernel::project_kernel;
use zonalsim::{random, CoriolisProfile, Grid, Operators, Params, SurfaceProfile};

fn grid() -> &'static Arc<Grid> {
    static G: OnceLock<Arc<Grid>> = OnceLock::new();
    G.get_or_init(|| Grid::new(SurfaceProfile::bump(0.1), 16, 12).unwrap())
}

fn ops(eps: f64, delta: f64) -> Operators {
    let g = grid();
    Operators::new(g, CoriolisProfile::exact(g), Params::new(eps, delta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent(seed in 0u64..10_000, size in 0.1f64..10.0) {
        let o = ops(0.1, 0.1);
        let s = random::state(grid(), 5, 1.0, seed, size);
        let p = project_kernel(&o, &s);
        let pp = project_kernel(&o, &p);
        prop_assert!((&pp - &p).l2_norm() <= 1e-10 * p.l2_norm().max(1e-300));
    }

    #[test]
    fn rotation_operator_is_skew(seed in 0u64..10_000, eps in 1e-3f64..1.0, mu in 0.2f64..5.0) {
        let o = ops(eps, eps * mu);
        let s = random::state(grid(), 5, 1.0, seed, 1.0);
        let ls = o.apply_l(&s);
        prop_assert!(s.inner(&ls).abs() <= 1e-10 * s.l2_norm() * ls.l2_norm());
    }

    #[test]
    fn rhs_keeps_mean_height(seed in 0u64..10_000, eps in 1e-3f64..1.0) {
        let cfg = IntegratorConfig { scheme: Scheme::Imex, ..Default::default() };
        let it = Integrator::new(ops(eps, eps), cfg).unwrap();
        let s = random::state(grid(), 5, 1.0, seed, 1.0);
        let r = it.rhs(&s);
        prop_assert!(r.h.mean().abs() <= 1e-10 * r.l2_norm().max(1.0));
    }

    #[test]
    fn snapshot_round_trip(seed in 0u64..10_000, t in -1e6f64..1e6) {
        let s = random::state(grid(), 4, 1.0, seed, 1.0);
        let (back, t2) = decode_snapshot(&encode_snapshot(&s, t), Some(grid())).unwrap();
        prop_assert_eq!(t2, t);
        prop_assert_eq!(&back.u.c1, &s.u.c1);
        prop_assert_eq!(&back.u.c2, &s.u.c2);
        prop_assert_eq!(&back.h.values, &s.h.values);
    }

    #[test]
    fn truncated_snapshots_are_rejected(seed in 0u64..100, cut in 1usize..64) {
        let s = random::state(grid(), 3, 1.0, seed, 1.0);
        let bytes = encode_snapshot(&s, 0.0);
        prop_assert!(decode_snapshot(&bytes[..bytes.len() - cut], Some(grid())).is_err());
    }

    #[test]
    fn config_hash_ignores_layout(
        order in Just(vec!["eps = 0.1", "delta = 0.05", "seed = 4", "n1 = 32", "scheme = imex"]).prop_shuffle(),
        pad in 0usize..4,
        out in "[a-z]{1,8}",
    ) {
        let base = RunConfig::parse("eps = 0.1\ndelta = 0.05\nseed = 4\nn1 = 32\nscheme = imex\n").unwrap();
        let sp = " ".repeat(pad);
        let text: String = order.iter().map(|l| format!("{sp}{l}{sp}  # note\n\n")).collect::<String>() + &format!("out = {out}\n");
        let cfg = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.hash(), base.hash());
        prop_assert_eq!(cfg.canonical(), base.canonical());
    }

    #[test]
    fn exponent_fit_recovers_power_laws(p in 0.1f64..2.0, c in 0.01f64..100.0) {
        let eps = [1e-1f64, 1e-2, 1e-3, 1e-4];
        let t: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let fit = fit_exponent(&eps, &t).unwrap();
        prop_assert!((fit.p - p).abs() <= 1e-10);
    }
}
