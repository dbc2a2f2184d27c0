//! When is a non-negative solution the only one? Certifies the row-span
//! condition, then tests the feasible set directly for a few sparse signals.
//!
//! cargo run --release --example nonneg_uniqueness -- [seed]

use std::env;

use sparsecomb::bounds::threshold_nonneg;
use sparsecomb::dictgen::{coherence, gaussian_dictionary, is_m_plus};
use sparsecomb::oracle::nn_singleton_check;

fn main() -> sparsecomb::Result<()> {
    let seed = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(19);
    let x = gaussian_dictionary(10, 15, seed)?;
    let cert = is_m_plus(x.matrix(), 1e-9)?;
    let mu = coherence(x.matrix())?;
    println!("row span meets the positive orthant: {} (margin {:.3e})", cert.feasible, cert.margin);
    println!("mu_x {mu:.4}, coherence threshold {:?}", threshold_nonneg(mu)?.max_sg);

    for s in 1..=4 {
        let mut alpha = vec![0.0; 15];
        for (k, a) in alpha.iter_mut().take(s).enumerate() {
            *a = 0.5 + 0.1 * k as f64;
        }
        let y = x.matrix().mul_vec(&alpha);
        let rep = nn_singleton_check(&x, &y, 3, 1e-8)?;
        match rep.witness {
            None if rep.singleton => println!("Sx={s}: singleton"),
            None => println!("Sx={s}: not a singleton (unbounded direction)"),
            Some(w) => {
                let other: Vec<usize> = (0..15).filter(|&i| w[i] > 1e-9).collect();
                println!("Sx={s}: not a singleton, another solution uses atoms {other:?}");
            }
        }
    }
    Ok(())
}
