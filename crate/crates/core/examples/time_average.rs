//! Zonal time averages approach the balanced profile as the rotation gets
//! faster.

use zonalsim::averaging::zonal_time_average;
use zonalsim::dynamics::{Integrator, IntegratorConfig, Scheme};
use zonalsim::{random, CoriolisProfile, Grid, Operators, Params};

fn main() -> zonalsim::Result<()> {
    let g = Grid::sphere(32, 24)?;
    let s0 = random::state(&g, 4, 1.0, 1, 0.5);
    for eps in [0.02, 0.01, 0.005] {
        let ops = Operators::new(&g, CoriolisProfile::exact(&g), Params::new(eps, eps)?);
        let cfg = IntegratorConfig { dt: eps / 4.0, scheme: Scheme::Imex, t_end: 0.5, stride: 1, ..Default::default() };
        let traj = Integrator::new(ops.clone(), cfg)?.integrate(&s0)?;
        let rep = zonal_time_average(&traj, &ops, 0.5, 3)?;
        println!(
            "eps {eps:<6} err_u {:.4e} err_h {:.4e} profile residual {:.1e}",
            rep.err_u, rep.err_h, rep.profile_residual
        );
    }
    Ok(())
}
