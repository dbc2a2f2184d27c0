//! Brute-force sparsest solution of a small combined system, compared with
//! what the pursuits return.
//!
//! cargo run --release --example ml0_oracle -- [seed]

use std::env;

use sparsecomb::bench::{plant_instance, Algorithm, CoeffModel, TrialSpec};
use sparsecomb::convex::{comb_bp_solve, PathSolverConfig};
use sparsecomb::greedy::{comb_omp_solve, CombOmpOptions, StoppingCriteria};
use sparsecomb::oracle::ml0_search;

fn main() -> sparsecomb::Result<()> {
    let seed = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(11);
    let spec = TrialSpec {
        m: 8,
        kx: 6,
        kd: 6,
        sx: 2,
        sd: 1,
        coeff_model: CoeffModel::Uniform,
        snr_db: None,
        algorithm: Algorithm::CombOmp,
        seed,
    };
    let inst = plant_instance(&spec)?;
    let planted: Vec<usize> = (0..inst.delta.len()).filter(|&i| inst.delta[i] != 0.0).collect();
    let ml0 = ml0_search(&inst.g, &inst.y, 4, 1e-9)?;
    println!("planted   {planted:?}");
    println!("ML0       {:?} (size {:?}, unique {})", ml0.solution.support(), ml0.size, ml0.unique);
    let omp = comb_omp_solve(&inst.g, &inst.y, &StoppingCriteria::for_rows(8), CombOmpOptions::default())?;
    println!("COMB-OMP  {:?}", omp.support());
    let bp = comb_bp_solve(&inst.g, &inst.y, &PathSolverConfig::default())?;
    println!("COMB-BP   {:?}", bp.support());
    Ok(())
}
