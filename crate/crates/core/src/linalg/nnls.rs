use super::matrix::{dot, DenseMatrix};
use super::qr::{residual_norm, ColPivQr};
use super::{default_kkt_tol, LeastSquaresResult};
use crate::error::{Error, Result};

/// Lawson-Hanson active-set NNLS: `min ||b - A x||_2` subject to `x >= 0`.
///
/// Stops when every zero coordinate has gradient component
/// `a_i^T (b - A x) <= tol`. The outer-iteration cap defaults to `3 * cols`.
pub fn nnls_solve(a: &DenseMatrix, b: &[f64], tol: f64) -> Result<LeastSquaresResult> {
    nnls_solve_with_cap(a, b, tol, 3 * a.cols())
}

pub fn nnls_solve_with_cap(
    a: &DenseMatrix,
    b: &[f64],
    tol: f64,
    max_outer: usize,
) -> Result<LeastSquaresResult> {
    if a.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "nnls: A has {} rows but b has {} entries",
            a.rows(),
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("nnls tol must be > 0, got {tol}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }

    let n = a.cols();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut w = gradient(a, b, &x);
    let mut outer = 0;
    // Index rejected by the last inner solve; excluded until x moves.
    let mut blocked: Option<usize> = None;

    loop {
        let pick = (0..n)
            .filter(|&j| !passive[j] && Some(j) != blocked && w[j] > tol)
            .fold(None::<usize>, |best, j| match best {
                Some(k) if w[k] >= w[j] => Some(k),
                _ => Some(j),
            });
        let Some(t) = pick else { break };

        outer += 1;
        if outer > max_outer {
            let residual_norm = residual_norm(a, &x, b);
            return Err(Error::NnlsIterationCap {
                iterations: max_outer,
                best: Box::new(LeastSquaresResult {
                    solution: x,
                    residual_norm,
                    rank_deficient: false,
                }),
            });
        }
        passive[t] = true;

        let mut first_inner = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = passive_solve(a, b, &idx);

            if idx.iter().zip(&z).all(|(_, &zj)| zj > 0.0) {
                for (&j, &zj) in idx.iter().zip(&z) {
                    x[j] = zj;
                }
                blocked = None;
                break;
            }

            let zt = idx
                .iter()
                .position(|&j| j == t)
                .map(|p| z[p])
                .unwrap_or(1.0);
            if first_inner && zt <= 0.0 {
                // The new index cannot move off zero: numerically its
                // gradient was noise. Undo and exclude it.
                passive[t] = false;
                blocked = Some(t);
                break;
            }
            first_inner = false;

            let mut alpha = f64::INFINITY;
            for (&j, &zj) in idx.iter().zip(&z) {
                if zj <= 0.0 {
                    let step = x[j] / (x[j] - zj);
                    if step < alpha {
                        alpha = step;
                    }
                }
            }
            for (&j, &zj) in idx.iter().zip(&z) {
                x[j] += alpha * (zj - x[j]);
            }
            for &j in &idx {
                if x[j] <= f64::EPSILON * 16.0 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !idx.iter().any(|&j| !passive[j]) {
                // alpha was degenerate; force the blocking index out.
                let worst = idx
                    .iter()
                    .zip(&z)
                    .filter(|(_, &zj)| zj <= 0.0)
                    .map(|(&j, _)| j)
                    .next();
                if let Some(j) = worst {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = gradient(a, b, &x);
    }

    let residual_norm = residual_norm(a, &x, b);
    Ok(LeastSquaresResult {
        solution: x,
        residual_norm,
        rank_deficient: false,
    })
}

fn gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect();
    (0..a.cols()).map(|j| dot(a.col(j), &r)).collect()
}

fn passive_solve(a: &DenseMatrix, b: &[f64], idx: &[usize]) -> Vec<f64> {
    let sub = a.select_columns(idx);
    ColPivQr::new(&sub).solve(b)
}

/// Least squares with sign constraints on a leading block:
/// `min ||y - G1 d||_2` subject to `d[..nonneg_count] >= 0`.
///
/// The unconstrained block is eliminated through its normal equations,
/// leaving an NNLS problem on the projected constrained block; the
/// unconstrained coefficients are then recovered by back-substitution.
pub fn lsi_solve(g1: &DenseMatrix, y: &[f64], nonneg_count: usize) -> Result<LeastSquaresResult> {
    let (m, n) = (g1.rows(), g1.cols());
    if m != y.len() {
        return Err(Error::Dimension(format!(
            "lsi: G1 has {m} rows but y has {} entries",
            y.len()
        )));
    }
    if nonneg_count > n {
        return Err(Error::InvalidArgument(format!(
            "lsi: nonneg_count {nonneg_count} exceeds {n} columns"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let full = ColPivQr::new(g1);
    if full.rank() < n {
        return Err(Error::RankDeficient {
            rank: full.rank(),
            cols: n,
        });
    }
    if nonneg_count == 0 {
        let solution = full.solve(y);
        let residual_norm = residual_norm(g1, &solution, y);
        return Ok(LeastSquaresResult {
            solution,
            residual_norm,
            rank_deficient: false,
        });
    }

    let cons: Vec<usize> = (0..nonneg_count).collect();
    let xc = g1.select_columns(&cons);
    if nonneg_count == n {
        let tol = default_kkt_tol(&xc, y);
        return nnls_solve(&xc, y, tol);
    }

    let free: Vec<usize> = (nonneg_count..n).collect();
    let du = g1.select_columns(&free);
    let qr_u = ColPivQr::new(&du);
    let q = qr_u.thin_q();
    let project = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        for k in 0..q.cols() {
            let qk = q.col(k);
            let s = dot(qk, v);
            for (o, qi) in out.iter_mut().zip(qk) {
                *o -= s * qi;
            }
        }
        out
    };

    let mut xt = DenseMatrix::zeros(m, nonneg_count);
    for j in 0..nonneg_count {
        let pj = project(xc.col(j));
        xt.col_mut(j).copy_from_slice(&pj);
    }
    let yt = project(y);
    let tol = default_kkt_tol(&xt, &yt);
    let alpha = nnls_solve(&xt, &yt, tol)?.solution;

    let xa = xc.mul_vec(&alpha);
    let rest: Vec<f64> = y.iter().zip(&xa).map(|(a, b)| a - b).collect();
    let beta = qr_u.solve(&rest);

    let mut solution = alpha;
    solution.extend(beta);
    let residual_norm = residual_norm(g1, &solution, y);
    Ok(LeastSquaresResult {
        solution,
        residual_norm,
        rank_deficient: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_ls;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        DenseMatrix::from_col_major(rows, cols, data).unwrap()
    }

    fn objective(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
        residual_norm(a, x, b)
    }

    fn assert_kkt(a: &DenseMatrix, b: &[f64], x: &[f64], nonneg: usize, tol: f64) {
        let w = gradient(a, b, x);
        for j in 0..x.len() {
            if j < nonneg {
                assert!(x[j] >= 0.0);
                if x[j] > 0.0 {
                    assert!(w[j].abs() <= tol, "passive grad {} at {j}", w[j]);
                } else {
                    assert!(w[j] <= tol, "active grad {} at {j}", w[j]);
                }
            } else {
                assert!(w[j].abs() <= tol, "free grad {} at {j}", w[j]);
            }
        }
    }

    #[test]
    fn clips_negative_part() {
        let r = nnls_solve(&DenseMatrix::identity(2), &[1.0, -1.0], 1e-12).unwrap();
        assert_eq!(r.solution, vec![1.0, 0.0]);
    }

    #[test]
    fn feasible_rhs_is_returned() {
        let r = nnls_solve(&DenseMatrix::identity(3), &[2.0, 3.0, 0.5], 1e-12).unwrap();
        for (x, y) in r.solution.iter().zip([2.0, 3.0, 0.5]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn planted_nonnegative_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = gaussian(10, 5, &mut rng);
            let truth: Vec<f64> = (0..5)
                .map(|j| if j % 2 == 0 { rng.random::<f64>() + 0.1 } else { 0.0 })
                .collect();
            let b = a.mul_vec(&truth);
            let r = nnls_solve(&a, &b, default_kkt_tol(&a, &b)).unwrap();
            for (x, t) in r.solution.iter().zip(&truth) {
                assert!((x - t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn kkt_and_random_feasible_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = gaussian(12, 8, &mut rng);
        let b: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let tol = 1e-9;
        let r = nnls_solve(&a, &b, tol).unwrap();
        assert_kkt(&a, &b, &r.solution, 8, 1e-8);
        let best = objective(&a, &r.solution, &b);
        for _ in 0..100 {
            let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 2.0).collect();
            assert!(best <= objective(&a, &x, &b) + 1e-12);
        }
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = gaussian(10, 6, &mut rng);
        let b = a.mul_vec(&[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        match nnls_solve_with_cap(&a, &b, 1e-12, 1) {
            Err(Error::NnlsIterationCap { iterations, best }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.solution.len(), 6);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn lsi_unconstrained_matches_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = gaussian(12, 6, &mut rng);
        let y: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let a = lsi_solve(&g, &y, 0).unwrap();
        let b = solve_ls(&g, &y).unwrap();
        for (p, q) in a.solution.iter().zip(&b.solution) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn lsi_small_cases() {
        let r = lsi_solve(&DenseMatrix::identity(2), &[-1.0, 2.0], 2).unwrap();
        assert!((r.solution[0]).abs() < 1e-14 && (r.solution[1] - 2.0).abs() < 1e-14);
        let r = lsi_solve(&DenseMatrix::identity(2), &[-1.0, 2.0], 1).unwrap();
        assert!((r.solution[0]).abs() < 1e-14 && (r.solution[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lsi_planted_and_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = gaussian(12, 6, &mut rng);
            let truth: Vec<f64> = (0..6)
                .map(|j| {
                    if j < 3 {
                        rng.random::<f64>() + 0.1
                    } else {
                        rng.random::<f64>() * 2.0 - 1.0
                    }
                })
                .collect();
            let y = g.mul_vec(&truth);
            let r = lsi_solve(&g, &y, 3).unwrap();
            for (x, t) in r.solution.iter().zip(&truth) {
                assert!((x - t).abs() < 1e-8);
            }
            // Noisy right-hand side: KKT of the constrained problem.
            let yn: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
            let r = lsi_solve(&g, &yn, 3).unwrap();
            assert_kkt(&g, &yn, &r.solution, 3, 1e-8);
        }
    }

    #[test]
    fn lsi_rejects_rank_deficient() {
        let c = vec![1.0, 0.0, 0.0];
        let g = DenseMatrix::from_columns(&[c.clone(), c]).unwrap();
        assert!(matches!(
            lsi_solve(&g, &[1.0, 0.0, 0.0], 1),
            Err(Error::RankDeficient { .. })
        ));
    }
}
