//! BP, NN-BP and COMB-BP on one planted instance, each checked with the
//! optimality certificate.
//!
//! cargo run --release --example convex_pursuit -- [Sx] [Sd] [seed]

use std::env;

use sparsecomb::bench::{plant_instance, rre, Algorithm, CoeffModel, TrialSpec};
use sparsecomb::convex::{bp_solve, comb_bp_solve, nn_homotopy_solve, verify_kkt, PathSolverConfig};
use sparsecomb::{CombinedDictionary, SparseSolution};

fn main() -> sparsecomb::Result<()> {
    let a: Vec<u64> = env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let spec = TrialSpec {
        m: 60,
        kx: 90,
        kd: 30,
        sx: a.first().copied().unwrap_or(15) as usize,
        sd: a.get(1).copied().unwrap_or(8) as usize,
        coeff_model: CoeffModel::Uniform,
        snr_db: None,
        algorithm: Algorithm::CombBp,
        seed: a.get(2).copied().unwrap_or(3),
    };
    let inst = plant_instance(&spec)?;
    let cfg = PathSolverConfig::default();
    let all_general = CombinedDictionary::new(inst.g.dictionary().clone(), 0)?;
    let all_nonneg = CombinedDictionary::new(inst.g.dictionary().clone(), inst.g.kg())?;

    let report = |name: &str, g: &CombinedDictionary, s: &SparseSolution| -> sparsecomb::Result<()> {
        let kkt = verify_kkt(g, &inst.y, &s.delta, 1e-6)?;
        let l1: f64 = s.delta.iter().map(|v| v.abs()).sum();
        println!(
            "{name:<8} {:3} atoms  l1 {l1:.4}  rre {:.2e}  breakpoints {:3}  kkt {} ({:.1e})",
            s.support().len(),
            rre(&s.delta, &inst.delta)?,
            s.iterations,
            if kkt.certified { "ok" } else { "FAILED" },
            kkt.max_violation
        );
        Ok(())
    };
    report("BP", &all_general, &bp_solve(inst.g.dictionary(), &inst.y, &cfg)?)?;
    report("NN-BP", &all_nonneg, &nn_homotopy_solve(inst.g.dictionary(), &inst.y, &cfg)?)?;
    report("COMB-BP", &inst.g, &comb_bp_solve(&inst.g, &inst.y, &cfg)?)?;
    let l1: f64 = inst.delta.iter().map(|v| v.abs()).sum();
    println!("planted  {:3} atoms  l1 {l1:.4}", spec.sx + spec.sd);
    Ok(())
}
