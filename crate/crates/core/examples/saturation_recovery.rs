//! Pins a fraction of pixels to white and restores the image patchwise with
//! each solver.
//!
//! cargo run --release --example saturation_recovery -- [image.pgm] [fraction] [seed]

use std::env;
use std::time::Instant;

use sparsecomb::bench::Algorithm;
use sparsecomb::imaging::{psnr, recover_image, saturate, GrayImage};

fn main() -> sparsecomb::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/camera256.pgm").to_string());
    let fraction: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let clean = GrayImage::read_pgm(&path)?;
    let (corrupted, _) = saturate(&clean, fraction, seed)?;
    println!("{path}: {}x{}, {:.0}% saturated", clean.width(), clean.height(), fraction * 100.0);
    println!("corrupted  PSNR {:6.2} dB", psnr(&clean, &corrupted)?);
    for alg in [Algorithm::Omp, Algorithm::CombOmp, Algorithm::Bp, Algorithm::CombBp] {
        let t0 = Instant::now();
        let rec = recover_image(&corrupted, alg, 1e-6)?;
        println!(
            "{:<9}  PSNR {:6.2} dB  stalled {:3}  {:.1}s",
            alg.name(),
            psnr(&clean, &rec.image)?,
            rec.stalled_patches,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
