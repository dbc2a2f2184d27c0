//! Coherence profile of a Gaussian combined dictionary and the sparsity
//! levels each guarantee covers.
//!
//! cargo run --release --example coherence_and_thresholds -- [M] [Kx] [Kd] [seed]

use std::env;

use sparsecomb::bounds::threshold_table;
use sparsecomb::dictgen::gaussian_dictionary;
use sparsecomb::imaging::saturation_dictionary;
use sparsecomb::CombinedDictionary;

fn main() -> sparsecomb::Result<()> {
    let a: Vec<usize> = env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let (m, kx, kd) = (a.first().copied().unwrap_or(100), a.get(1).copied().unwrap_or(100), a.get(2).copied().unwrap_or(100));
    let seed = a.get(3).copied().unwrap_or(0) as u64;

    let gauss = CombinedDictionary::new(gaussian_dictionary(m, kx + kd, seed)?, kx)?;
    for (name, g) in [("gaussian", gauss), ("[-I | DCT 8x8]", saturation_dictionary()?)] {
        let p = g.profile();
        println!("{name}: M={} Kx={} Kd={}", g.rows(), g.kx(), g.kd());
        println!("  mu_x {:.4}  mu_d {:.4}  mu_g {:.4}  mu_m {:.4}", p.mu_x, p.mu_d, p.mu_g, p.mu_m);
        for r in threshold_table(&p, g.kg(), 1) {
            let max = r.max_sg.map_or("unbounded".to_string(), |v| v.to_string());
            println!("  {:<15} {:>9}  (raw {:.3})", r.algorithm.to_string(), max, r.raw_bound);
        }
    }
    Ok(())
}
