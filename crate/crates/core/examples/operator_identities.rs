//! Discrete vector-calculus identities and the exact-case commutator on a
//! Gauss-Legendre grid.

use zonalsim::suites::{commutator_baseline, commutator_scan, identity_defects};
use zonalsim::{random, CoriolisProfile, Grid, Operators, Params};

fn main() -> zonalsim::Result<()> {
    let g = Grid::sphere(32, 24)?;
    let f = random::scalar(&g, 8, 1.0, 1);
    let v = random::vector(&g, 8, 1.0, 2);
    let names = ["div grad - lap", "curl grad", "div J grad", "adjoint", "hodge"];
    for (name, d) in names.iter().zip(identity_defects(&f, &v)) {
        println!("{name:>16}: {d:.3e}");
    }

    let s = random::state(&g, 8, 1.0, 3, 1.0);
    let ops = Operators::new(&g, CoriolisProfile::exact(&g), Params::new(0.1, 0.1)?);
    println!("commutator roundoff baseline: {:.3e}", commutator_baseline(&ops, &s)?);
    println!("{:>8} {:>12} {:>12}", "eps", "exact", "perturbed");
    for (eps, exact, pert) in commutator_scan(&g, &s, &[1e-1, 1e-2, 1e-3])? {
        println!("{eps:>8.0e} {exact:>12.3e} {pert:>12.3e}");
    }
    Ok(())
}
