//! Mean relative recovery error against SNR for the four pursuits.
//!
//! cargo run --release --example noisy_recovery -- [trials]

use std::env;

use sparsecomb::bench::{run_grid, Algorithm, GridConfig};

fn main() -> sparsecomb::Result<()> {
    let trials = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let snrs = [0.0, 5.0, 15.0, 25.0];
    let cfg = GridConfig {
        sx_values: vec![10],
        sd_values: vec![10],
        snr_db: snrs.iter().map(|&s| Some(s)).collect(),
        trials,
        seed: 2,
        ..GridConfig::default()
    };
    let grid = run_grid(&cfg)?;
    print!("{:<9}", "SNR dB");
    for s in snrs {
        print!("{s:>10}");
    }
    println!();
    for alg in [Algorithm::Omp, Algorithm::CombOmp, Algorithm::Bp, Algorithm::CombBp] {
        print!("{:<9}", alg.name());
        for s in snrs {
            print!("{:>10.4}", grid.get(10, 10, Some(s), alg).map_or(f64::NAN, |c| c.mean_rre));
        }
        println!();
    }
    Ok(())
}
