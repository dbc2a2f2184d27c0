//! Desk-scale phase transition: the 50% recovery contour of BP and COMB-BP
//! for each measurement count.
//!
//! cargo run --release --example phase_transition -- [trials]

use std::env;

use sparsecomb::bench::{run_phase_transition, Algorithm, PhaseConfig};

fn main() -> sparsecomb::Result<()> {
    let trials = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let cfg = PhaseConfig {
        algorithms: vec![Algorithm::Bp, Algorithm::CombBp],
        trials,
        seed: 3,
        ..PhaseConfig::default()
    };
    let res = run_phase_transition(&cfg)?;
    println!("{:>4} {:>8} {:>8}", "M", "BP", "COMB-BP");
    for &m in &cfg.m_values {
        let bp = res.contour(Algorithm::Bp, m, 0.5).unwrap_or(f64::NAN);
        let comb = res.contour(Algorithm::CombBp, m, 0.5).unwrap_or(f64::NAN);
        println!("{m:>4} {bp:>8.1} {comb:>8.1}");
    }
    Ok(())
}
