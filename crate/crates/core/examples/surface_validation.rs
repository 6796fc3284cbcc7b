//! Validates a few surface profiles and prints their metric at the equator.

use zonalsim::{build_metric, validate_surface, SurfaceProfile};

fn main() -> zonalsim::Result<()> {
    let profiles = [
        SurfaceProfile::sphere(),
        SurfaceProfile::bump(0.1),
        SurfaceProfile::sin2(0.05),
        SurfaceProfile::polynomial(vec![1.0, 0.0, 0.1]),
    ];
    for p in &profiles {
        let report = validate_surface(p, 3)?;
        println!("== {} ({})", p.spec(), if report.all_passed() { "valid" } else { "rejected" });
        print!("{}", report.to_kv_lines());
        if report.all_passed() {
            let m = build_metric(p, &[std::f64::consts::FRAC_PI_2])?;
            println!("equator metric: {m:?}");
        }
    }
    Ok(())
}
