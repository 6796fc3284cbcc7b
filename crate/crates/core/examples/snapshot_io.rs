//! Writes a state snapshot and a CSV table atomically, then reads them back.

use zonalsim::io::{hash_hex, num, read_snapshot, write_snapshot, CsvTable};
use zonalsim::{random, Grid, SurfaceProfile};

fn main() -> zonalsim::Result<()> {
    let dir = std::env::temp_dir().join(format!("zonalsim-example-{}", std::process::id()));
    let g = Grid::new(SurfaceProfile::bump(0.1), 16, 12)?;
    let s = random::state(&g, 4, 1.0, 5, 1.0);
    let snap = dir.join("state.bin");
    write_snapshot(&snap, &s, 0.5)?;
    let (back, t) = read_snapshot(&snap, Some(&g))?;
    println!("snapshot {} at t = {t}: round-trip error {:.1e}", snap.display(), (&back - &s).l2_norm());

    let mut table = CsvTable::new("example", &hash_hex("seed = 5"), &[("t", "time"), ("energy", "L2^2")]);
    table.push(vec![num(t), num(back.energy())]);
    table.write(&dir.join("example.csv"))?;
    print!("{}", std::fs::read_to_string(dir.join("example.csv"))?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
