//! Lifespan of the two torus model problems: characteristic oracle scan
//! and one pseudo-spectral run.

use zonalsim::blowup::{oracle_scan, run_example2, Example, PdeConfig};

fn main() -> zonalsim::Result<()> {
    let eps = [1e-2, 1e-3, 1e-4];
    for ex in [Example::Shear, Example::Coriolis] {
        let (recs, fit) = oracle_scan(ex, &eps, 1e3)?;
        let times: Vec<String> = recs.iter().map(|r| format!("{:.4e}", r.t_blow)).collect();
        println!("{}: times [{}], exponent {:.4} ± {:.1e}", ex.label(), times.join(", "), fit.p, fit.ci_half);
    }
    let cfg = PdeConfig { nx: 1, ny: 1024, ..Default::default() };
    let rec = run_example2(1e-2, &cfg)?;
    println!(
        "pde example2 eps 1e-2: t {:.4e} (resolved {}), oracle gap {:.1e} up to t = {:.4e}, L2 drift {:.1e}",
        rec.t_blow, rec.resolved, rec.oracle_gap, rec.agreement_window, rec.l2_drift
    );
    Ok(())
}
