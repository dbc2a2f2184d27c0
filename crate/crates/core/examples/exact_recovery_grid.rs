//! Exact-recovery probability over a small (Sx, Sd) grid, written as CSV.
//!
//! cargo run --release --example exact_recovery_grid -- [trials] > grid.csv

use std::env;
use std::io;

use sparsecomb::bench::{run_grid, GridConfig};

fn main() -> sparsecomb::Result<()> {
    let trials = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let cfg = GridConfig {
        m: 100,
        kx: 150,
        kd: 50,
        sx_values: vec![10, 20, 30],
        sd_values: vec![10, 20],
        trials,
        seed: 1,
        ..GridConfig::default()
    };
    let grid = run_grid(&cfg)?;
    grid.write_csv(io::stdout().lock(), false)?;
    for c in grid.cells.iter().filter(|c| c.sx == 30 && c.sd == 20) {
        eprintln!("Sx=30 Sd=20 {:<9} p_exact {:.2}", c.algorithm.name(), c.p_exact);
    }
    Ok(())
}
