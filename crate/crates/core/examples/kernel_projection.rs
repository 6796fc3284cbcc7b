//! Projects random states onto the kernel of the rotation operator and
//! reports the distance estimate.

use zonalsim::kernel::{kernel_conditions, kernel_distance_report, project_kernel};
use zonalsim::{random, CoriolisProfile, Grid, Operators, Params};

fn main() -> zonalsim::Result<()> {
    let g = Grid::sphere(32, 24)?;
    let ops = Operators::new(&g, CoriolisProfile::exact(&g), Params::new(0.1, 0.1)?);
    for seed in 0..4 {
        let s = random::state(&g, 6, 1.0, seed, 1.0);
        let p = project_kernel(&ops, &s);
        let again = project_kernel(&ops, &p);
        let idem = (&again - &p).l2_norm() / p.l2_norm();
        let resid = ops.apply_l(&p).l2_norm() / p.hk_norm(1)?;
        let cond = kernel_conditions(&ops, &p)?;
        let rep = kernel_distance_report(&ops, &s, 1)?;
        println!(
            "seed {seed}: idempotency {idem:.1e}, residual {resid:.1e}, conditions {:.1e}, distance lhs/rhs {:.3}",
            cond.iter().cloned().fold(0.0, f64::max),
            rep.ratio()
        );
    }
    Ok(())
}
