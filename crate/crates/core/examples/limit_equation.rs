//! Compares the filtered full solution with the averaged limit equation for
//! shrinking aspect ratio.

use zonalsim::config::RunConfig;
use zonalsim::suites::{filtered_full_state, limit_state};

fn main() -> zonalsim::Result<()> {
    let cfg = RunConfig::parse(
        "mu = 1\ndelta = 0.1\ninit = prepared\nlmax = 6\nwave_fraction = 0.03\namplitude = 0.5\ncoarse_n1 = 16\ncoarse_n2 = 12\n",
    )?;
    let g = cfg.coarse_grid()?;
    let ops = cfg.operators(&g, cfg.params())?;
    let v0 = cfg.initial_state(&ops)?;
    let t = 0.25;
    let (vbar, correction) = limit_state(&g, &cfg, &v0, t)?;
    println!("limit state at t = {t}: |V| = {:.6}, mean correction {correction:.1e}", vbar.l2_norm());
    for delta in [0.1, 0.03, 0.01] {
        let full = filtered_full_state(&g, &cfg, &v0, delta, t)?;
        println!("delta {delta:<5} |filtered - limit| = {:.4e}", (&full - &vbar).l2_norm());
    }
    Ok(())
}
