//! Greedy pursuit: OMP, NN-OMP and COMB-OMP.
//!
//! All three share one engine working on a dictionary split into a leading
//! non-negative block and a trailing general block. Plain OMP is the engine
//! with an empty non-negative block and NN-OMP is the engine with an empty
//! general block and the constrained update.

use serde::{Deserialize, Serialize};

use crate::dictgen::{CombinedDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{dot, lsi_solve, norm2, DenseMatrix, IncrementalQr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingCriteria {
    /// Maximum number of selected atoms `T`.
    pub max_iters: usize,
    /// Stop once `||r||_2 <= residual_tol`.
    pub residual_tol: f64,
}

impl StoppingCriteria {
    pub fn new(max_iters: usize, residual_tol: f64) -> Result<Self> {
        if !(residual_tol >= 0.0) {
            return Err(Error::InvalidArgument("residual_tol must be >= 0".into()));
        }
        if max_iters == 0 && residual_tol == 0.0 {
            return Err(Error::InvalidArgument(
                "need a positive iteration count or residual tolerance".into(),
            ));
        }
        Ok(Self { max_iters, residual_tol })
    }

    /// `T = M`, `eps = 1e-6`.
    pub fn for_rows(m: usize) -> Self {
        Self { max_iters: m, residual_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Residual,
    MaxIters,
    Stalled,
}

/// Coefficients refer to the unit-norm atoms of the dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    pub delta: Vec<f64>,
    /// Selected non-negative-block atoms (global indices).
    pub support_x: Vec<usize>,
    /// Selected general-block atoms (global indices).
    pub support_d: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl SparseSolution {
    pub(crate) fn zeros(k: usize, residual_norm: f64, termination: Termination) -> Self {
        Self {
            delta: vec![0.0; k],
            support_x: Vec::new(),
            support_d: Vec::new(),
            residual_norm,
            iterations: 0,
            termination,
        }
    }

    /// Union of both supports, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.support_x.iter().chain(&self.support_d).copied().collect();
        s.sort_unstable();
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombOmpOptions {
    /// Solve the per-iteration update with the sign constraint on the X block.
    pub constrained_update: bool,
    /// Re-solve the final support with the sign constraint.
    pub debias: bool,
}

/// One iteration of a greedy run.
#[derive(Debug, Clone, PartialEq)]
pub struct PursuitStep {
    pub selected: usize,
    pub correlation: f64,
    pub residual_norm: f64,
    /// `max |g_i^T r|` over the selected atoms after the update.
    pub max_support_correlation: f64,
}

/// Standard OMP selecting by absolute correlation.
pub fn omp_solve(g: &Dictionary, y: &[f64], stop: &StoppingCriteria) -> Result<SparseSolution> {
    pursue(g, 0, y, stop, CombOmpOptions::default(), None)
}

/// OMP selecting the largest positive correlation with an NNLS update.
pub fn nn_omp_solve(x: &Dictionary, y: &[f64], stop: &StoppingCriteria) -> Result<SparseSolution> {
    let opts = CombOmpOptions { constrained_update: true, debias: false };
    pursue(x, x.atoms(), y, stop, opts, None)
}

pub fn comb_omp_solve(
    g: &CombinedDictionary,
    y: &[f64],
    stop: &StoppingCriteria,
    opts: CombOmpOptions,
) -> Result<SparseSolution> {
    pursue(g.dictionary(), g.kx(), y, stop, opts, None)
}

/// [`comb_omp_solve`] that also returns every iteration.
pub fn comb_omp_trace(
    g: &CombinedDictionary,
    y: &[f64],
    stop: &StoppingCriteria,
    opts: CombOmpOptions,
) -> Result<(SparseSolution, Vec<PursuitStep>)> {
    let mut steps = Vec::new();
    let sol = pursue(g.dictionary(), g.kx(), y, stop, opts, Some(&mut steps))?;
    Ok((sol, steps))
}

fn pursue(
    g: &Dictionary,
    kx: usize,
    y: &[f64],
    stop: &StoppingCriteria,
    opts: CombOmpOptions,
    mut trace: Option<&mut Vec<PursuitStep>>,
) -> Result<SparseSolution> {
    let m = g.rows();
    let k = g.atoms();
    if y.len() != m {
        return Err(Error::Dimension(format!("signal has length {}, dictionary has {m} rows", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    let a = g.matrix();

    let mut chosen = vec![false; k];
    // selection order; the QR columns follow it
    let mut order: Vec<usize> = Vec::new();
    let mut coef: Vec<f64> = Vec::new();
    let mut qr = IncrementalQr::new(m);
    let mut r = y.to_vec();
    let mut rnorm = norm2(&r);
    let termination;

    loop {
        if rnorm <= stop.residual_tol {
            termination = Termination::Residual;
            break;
        }
        if order.len() >= stop.max_iters {
            termination = Termination::MaxIters;
            break;
        }
        let corr = a.tr_mul_vec(&r);
        let mut best_x: Option<(usize, f64)> = None;
        for (i, &c) in corr.iter().enumerate().take(kx) {
            if !chosen[i] && best_x.is_none_or(|(_, v)| c.max(0.0) > v) {
                best_x = Some((i, c.max(0.0)));
            }
        }
        let mut best_d: Option<(usize, f64)> = None;
        for (j, &c) in corr.iter().enumerate().skip(kx) {
            if !chosen[j] && best_d.is_none_or(|(_, v)| c.abs() > v) {
                best_d = Some((j, c.abs()));
            }
        }
        let pick = match (best_x, best_d) {
            (Some(bx), Some(bd)) => {
                if bx.1 >= bd.1 {
                    bx
                } else {
                    bd
                }
            }
            (Some(b), None) | (None, Some(b)) => b,
            (None, None) => {
                termination = Termination::Stalled;
                break;
            }
        };
        if !(pick.1 > 0.0) {
            termination = Termination::Stalled;
            break;
        }
        let sel = pick.0;

        let update = if opts.constrained_update {
            constrained_coefficients(a, kx, &order, sel, y)
        } else if qr.push(a.col(sel)) {
            Some(qr.solve(y))
        } else {
            None
        };
        let Some(new_coef) = update else {
            termination = Termination::Stalled;
            break;
        };
        chosen[sel] = true;
        order.push(sel);
        coef = new_coef;
        r = residual(a, y, &order, &coef);
        rnorm = norm2(&r);

        if let Some(t) = trace.as_deref_mut() {
            let max_support_correlation = order
                .iter()
                .map(|&i| dot(a.col(i), &r).abs())
                .fold(0.0, f64::max);
            t.push(PursuitStep {
                selected: sel,
                correlation: pick.1,
                residual_norm: rnorm,
                max_support_correlation,
            });
        }
    }

    let iterations = order.len();
    if opts.debias && !order.is_empty() {
        let (cols, _) = block_ordered(kx, &order);
        let sub = a.select_columns(&cols);
        let nx = cols.iter().filter(|&&i| i < kx).count();
        if let Ok(res) = lsi_solve(&sub, y, nx) {
            order = cols;
            coef = res.solution;
            r = residual(a, y, &order, &coef);
            rnorm = norm2(&r);
        }
    }

    let mut delta = vec![0.0; k];
    for (&i, &c) in order.iter().zip(&coef) {
        delta[i] = c;
    }
    let mut support_x: Vec<usize> = order.iter().copied().filter(|&i| i < kx).collect();
    let mut support_d: Vec<usize> = order.iter().copied().filter(|&i| i >= kx).collect();
    support_x.sort_unstable();
    support_d.sort_unstable();
    Ok(SparseSolution {
        delta,
        support_x,
        support_d,
        residual_norm: rnorm,
        iterations,
        termination,
    })
}

/// Support with X-block atoms first (the order `lsi_solve` expects).
fn block_ordered(kx: usize, order: &[usize]) -> (Vec<usize>, usize) {
    let mut cols: Vec<usize> = order.iter().copied().filter(|&i| i < kx).collect();
    let nx = cols.len();
    cols.extend(order.iter().copied().filter(|&i| i >= kx));
    (cols, nx)
}

/// Sign-constrained least squares over `order + [sel]`, returned in
/// selection order. `None` when the support is rank deficient.
fn constrained_coefficients(
    a: &DenseMatrix,
    kx: usize,
    order: &[usize],
    sel: usize,
    y: &[f64],
) -> Option<Vec<f64>> {
    let mut full = order.to_vec();
    full.push(sel);
    let (cols, nx) = block_ordered(kx, &full);
    let sub = a.select_columns(&cols);
    let res = lsi_solve(&sub, y, nx).ok()?;
    Some(
        full.iter()
            .map(|i| res.solution[cols.iter().position(|c| c == i).unwrap()])
            .collect(),
    )
}

fn residual(a: &DenseMatrix, y: &[f64], cols: &[usize], coef: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (&j, &c) in cols.iter().zip(coef) {
        crate::linalg::axpy(-c, a.col(j), &mut r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictgen::gaussian_dictionary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stop(m: usize) -> StoppingCriteria {
        StoppingCriteria::for_rows(m)
    }

    #[test]
    fn omp_single_atom() {
        let g = gaussian_dictionary(10, 20, 1).unwrap();
        let y = g.atom(7).to_vec();
        let s = omp_solve(&g, &y, &stop(10)).unwrap();
        assert_eq!(s.support(), vec![7]);
        assert!((s.delta[7] - 1.0).abs() < 1e-12);
        assert!(s.residual_norm < 1e-12);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.termination, Termination::Residual);
    }

    #[test]
    fn omp_zero_signal() {
        let g = gaussian_dictionary(10, 20, 1).unwrap();
        let s = omp_solve(&g, &[0.0; 10], &stop(10)).unwrap();
        assert!(s.support().is_empty());
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn nn_omp_examples() {
        let x = Dictionary::identity(4);
        let s = nn_omp_solve(&x, &[0.0, 0.0, 3.0, 0.0], &stop(4)).unwrap();
        assert_eq!(s.support_x, vec![2]);
        assert_eq!(s.delta[2], 3.0);
        let s = nn_omp_solve(&x, &[0.0, 0.0, -1.0, 0.0], &stop(4)).unwrap();
        assert_eq!(s.termination, Termination::Stalled);
        assert!(s.support().is_empty());
    }

    #[test]
    fn comb_omp_orthogonal_blocks() {
        // X = first four unit vectors, D = last four
        let g = CombinedDictionary::new(Dictionary::identity(8), 4).unwrap();
        let mut y = vec![0.0; 8];
        y[3] = 1.0;
        y[5] = 2.0;
        let s = comb_omp_solve(&g, &y, &stop(8), CombOmpOptions::default()).unwrap();
        assert_eq!(s.support_x, vec![3]);
        assert_eq!(s.support_d, vec![5]);
        assert_eq!((s.delta[3], s.delta[5]), (1.0, 2.0));
        assert_eq!(s.residual_norm, 0.0);
    }

    #[test]
    fn comb_omp_stalls_without_general_block() {
        let g = CombinedDictionary::new(Dictionary::identity(5), 5).unwrap();
        let mut y = vec![0.0; 5];
        y[3] = -1.0;
        let s = comb_omp_solve(&g, &y, &stop(5), CombOmpOptions::default()).unwrap();
        assert_eq!(s.termination, Termination::Stalled);
        assert!(s.support().is_empty());
    }

    #[test]
    fn x_block_wins_exact_ties() {
        let g = CombinedDictionary::new(Dictionary::identity(4), 2).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let opts = CombOmpOptions::default();
        let crit = StoppingCriteria::new(1, 0.0).unwrap();
        let s = comb_omp_solve(&g, &y, &crit, opts).unwrap();
        assert_eq!(s.support_x, vec![1]);
        // within a block the lowest index wins
        let y = [1.0, 1.0, 0.0, 0.0];
        let s = comb_omp_solve(&g, &y, &crit, opts).unwrap();
        assert_eq!(s.support_x, vec![0]);
    }

    fn planted(m: usize, kx: usize, kd: usize, sx: usize, sd: usize, seed: u64)
        -> (CombinedDictionary, Vec<f64>) {
        let g = gaussian_dictionary(m, kx + kd, seed).unwrap();
        let g = CombinedDictionary::new(g, kx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let xs = rand::seq::index::sample(&mut rng, kx, sx).into_vec();
        let ds = rand::seq::index::sample(&mut rng, kd, sd).into_vec();
        let mut y = vec![0.0; m];
        for i in xs {
            crate::linalg::axpy(rng.random_range(0.5..2.0), g.dictionary().atom(i), &mut y);
        }
        for j in ds {
            let c: f64 = rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            crate::linalg::axpy(c, g.dictionary().atom(kx + j), &mut y);
        }
        (g, y)
    }

    #[test]
    fn unconstrained_residual_orthogonal_to_support() {
        for seed in 0..20 {
            let (g, y) = planted(30, 40, 40, 3, 3, seed);
            let (_, steps) = comb_omp_trace(&g, &y, &stop(30), CombOmpOptions::default()).unwrap();
            let mut prev = f64::INFINITY;
            let mut seen = std::collections::HashSet::new();
            for s in &steps {
                assert!(s.max_support_correlation <= 1e-9, "{}", s.max_support_correlation);
                assert!(s.residual_norm <= prev + 1e-12);
                assert!(seen.insert(s.selected));
                prev = s.residual_norm;
            }
        }
    }

    #[test]
    fn constrained_and_debiased_are_sign_feasible() {
        for seed in 0..20 {
            let (g, y) = planted(20, 30, 30, 4, 4, seed);
            for opts in [
                CombOmpOptions { constrained_update: true, debias: false },
                CombOmpOptions { constrained_update: false, debias: true },
                CombOmpOptions { constrained_update: true, debias: true },
            ] {
                let (s, steps) = comb_omp_trace(&g, &y, &stop(20), opts).unwrap();
                assert!(s.delta[..30].iter().all(|&v| v >= 0.0));
                if opts.constrained_update {
                    let mut prev = f64::INFINITY;
                    for st in &steps {
                        assert!(st.residual_norm <= prev + 1e-12);
                        prev = st.residual_norm;
                    }
                }
            }
        }
    }

    #[test]
    fn empty_x_block_matches_omp() {
        for seed in 0..10 {
            let d = gaussian_dictionary(20, 40, seed).unwrap();
            let y: Vec<f64> = d.matrix().mul_vec(&{
                let mut v = vec![0.0; 40];
                v[3] = 1.0;
                v[17] = -0.7;
                v[29] = 1.4;
                v
            });
            let g = CombinedDictionary::new(d.clone(), 0).unwrap();
            let a = omp_solve(&d, &y, &stop(20)).unwrap();
            let b = comb_omp_solve(&g, &y, &stop(20), CombOmpOptions::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_d_block_matches_nn_omp() {
        for seed in 0..10 {
            let (g, y) = planted(20, 40, 0, 4, 0, seed);
            let opts = CombOmpOptions { constrained_update: true, debias: false };
            let (_, steps) = comb_omp_trace(&g, &y, &stop(20), opts).unwrap();
            let a = nn_omp_solve(g.dictionary(), &y, &stop(20)).unwrap();
            let b = comb_omp_solve(&g, &y, &stop(20), opts).unwrap();
            assert_eq!(a, b);
            assert_eq!(steps.len(), a.iterations);
        }
    }
}
