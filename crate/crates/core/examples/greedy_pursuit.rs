//! OMP versus COMB-OMP on one planted instance, with the per-iteration trace
//! of the combined pursuit.
//!
//! cargo run --release --example greedy_pursuit -- [Sx] [Sd] [seed]

use std::env;

use sparsecomb::bench::{plant_instance, rre, Algorithm, CoeffModel, TrialSpec};
use sparsecomb::greedy::{comb_omp_trace, omp_solve, CombOmpOptions, StoppingCriteria};

fn main() -> sparsecomb::Result<()> {
    let a: Vec<u64> = env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let spec = TrialSpec {
        m: 60,
        kx: 90,
        kd: 30,
        sx: a.first().copied().unwrap_or(12) as usize,
        sd: a.get(1).copied().unwrap_or(6) as usize,
        coeff_model: CoeffModel::Uniform,
        snr_db: None,
        algorithm: Algorithm::CombOmp,
        seed: a.get(2).copied().unwrap_or(7),
    };
    let inst = plant_instance(&spec)?;
    let stop = StoppingCriteria::for_rows(spec.m);

    let omp = omp_solve(inst.g.dictionary(), &inst.y, &stop)?;
    println!("OMP       {:2} atoms  rre {:.2e}  {:?}", omp.support().len(), rre(&omp.delta, &inst.delta)?, omp.termination);

    let (comb, steps) = comb_omp_trace(&inst.g, &inst.y, &stop, CombOmpOptions::default())?;
    println!("COMB-OMP  {:2} atoms  rre {:.2e}  {:?}", comb.support().len(), rre(&comb.delta, &inst.delta)?, comb.termination);
    for (t, s) in steps.iter().enumerate() {
        let block = if s.selected < inst.g.kx() { "x" } else { "d" };
        let hit = if inst.delta[s.selected] != 0.0 { "" } else { "  (off support)" };
        println!("  {:2}: atom {:3} [{block}] corr {:+.4} residual {:.3e}{hit}", t + 1, s.selected, s.correlation, s.residual_norm);
    }
    Ok(())
}
