use super::matrix::{axpy, dot, norm2, DenseMatrix};
use super::LeastSquaresResult;
use crate::error::{Error, Result};

/// Householder QR with column pivoting, `A P = Q R`.
///
/// Reflectors are stored LAPACK style: `H_k = I - tau_k v_k v_k^T` with
/// `v_k[k] = 1` implicit and the tail kept below the diagonal of `qr`.
#[derive(Debug, Clone)]
pub struct ColPivQr {
    qr: DenseMatrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
    rtol: f64,
}

impl ColPivQr {
    pub fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();
        let max_norm = a.column_norms().into_iter().fold(0.0f64, f64::max);
        let rtol = m.max(n) as f64 * f64::EPSILON * max_norm;

        for k in 0..steps {
            // Pivot on the largest remaining column norm. Norms are
            // recomputed exactly; the matrices here are small.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let nj = norm2(&qr.col(j)[k..]);
                if nj > best_norm {
                    best_norm = nj;
                    best = j;
                }
            }
            if best != k {
                swap_columns(&mut qr, k, best);
                perm.swap(k, best);
            }

            let (beta, t) = householder(&mut qr.col_mut(k)[k..]);
            tau[k] = t;
            if t != 0.0 {
                let v: Vec<f64> = std::iter::once(1.0)
                    .chain(qr.col(k)[k + 1..].iter().copied())
                    .collect();
                for j in k + 1..n {
                    let col = &mut qr.col_mut(j)[k..];
                    let s = t * dot(&v, col);
                    axpy(-s, &v, col);
                }
            }
            qr.set(k, k, beta);
        }

        let mut rank = 0;
        while rank < steps && qr.get(rank, rank).abs() > rtol {
            rank += 1;
        }
        Self {
            qr,
            tau,
            perm,
            rank,
            rtol,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rtol
    }

    /// Column permutation: column `k` of `A P` is column `perm()[k]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.qr.get(i, j)
    }

    /// Overwrites `b` with `Q^T b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let m = self.qr.rows();
        assert_eq!(b.len(), m);
        for k in 0..self.tau.len() {
            self.apply_reflector(k, b);
        }
    }

    /// Overwrites `x` with `Q x`.
    pub fn apply_q(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.qr.rows());
        for k in (0..self.tau.len()).rev() {
            self.apply_reflector(k, x);
        }
    }

    fn apply_reflector(&self, k: usize, x: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let tail = &self.qr.col(k)[k + 1..];
        let s = t * (x[k] + dot(tail, &x[k + 1..]));
        x[k] -= s;
        axpy(-s, tail, &mut x[k + 1..]);
    }

    /// First `rank` columns of `Q`.
    pub fn thin_q(&self) -> DenseMatrix {
        let m = self.qr.rows();
        let mut q = DenseMatrix::zeros(m, self.rank.max(1));
        for j in 0..self.rank {
            let col = q.col_mut(j);
            col[j] = 1.0;
            self.apply_q(col);
        }
        q
    }

    /// Solves the upper-triangular system `R[..r, ..r] x = c[..r]`.
    fn back_substitute(&self, c: &[f64], r: usize) -> Vec<f64> {
        let mut x = c[..r].to_vec();
        for i in (0..r).rev() {
            let mut s = x[i];
            for j in i + 1..r {
                s -= self.qr.get(i, j) * x[j];
            }
            x[i] = s / self.qr.get(i, i);
        }
        x
    }

    /// Minimum-norm least-squares solution of `A x ~ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.qr.cols();
        let r = self.rank;
        let mut c = b.to_vec();
        self.apply_qt(&mut c);
        let z = self.back_substitute(&c, r);
        let mut xp = vec![0.0; n];
        xp[..r].copy_from_slice(&z);

        if r < n && r > 0 {
            // Remove the null-space component of the basic solution. The null
            // space of A P is spanned by the columns of [-R11^{-1} R12; I].
            let nn = n - r;
            let mut basis = DenseMatrix::zeros(n, nn);
            for j in 0..nn {
                let r12: Vec<f64> = (0..r).map(|i| self.qr.get(i, r + j)).collect();
                let w = self.back_substitute(&r12, r);
                let col = basis.col_mut(j);
                for i in 0..r {
                    col[i] = -w[i];
                }
                col[r + j] = 1.0;
            }
            let proj = ColPivQr::new(&basis).solve(&xp);
            let shift = basis.mul_vec(&proj);
            for (a, s) in xp.iter_mut().zip(shift) {
                *a -= s;
            }
        }

        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = xp[k];
        }
        x
    }
}

fn swap_columns(a: &mut DenseMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let tmp = a.col(i).to_vec();
    let other = a.col(j).to_vec();
    a.col_mut(i).copy_from_slice(&other);
    a.col_mut(j).copy_from_slice(&tmp);
}

/// Householder reflector annihilating `x[1..]`. On return `x[1..]` holds the
/// reflector tail; returns `(beta, tau)`.
fn householder(x: &mut [f64]) -> (f64, f64) {
    let x0 = x[0];
    let tail_norm = norm2(&x[1..]);
    if tail_norm == 0.0 {
        return (x0, 0.0);
    }
    let norm = x0.hypot(tail_norm);
    let beta = if x0 >= 0.0 { -norm } else { norm };
    let tau = (beta - x0) / beta;
    let scale = 1.0 / (x0 - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    (beta, tau)
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Minimum-norm least squares via rank-revealing QR.
pub fn solve_ls(a: &DenseMatrix, b: &[f64]) -> Result<LeastSquaresResult> {
    if a.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "solve_ls: A has {} rows but b has {} entries",
            a.rows(),
            b.len()
        )));
    }
    check_finite(b, "right-hand side")?;
    let qr = ColPivQr::new(a);
    let solution = qr.solve(b);
    let residual_norm = residual_norm(a, &solution, b);
    Ok(LeastSquaresResult {
        solution,
        residual_norm,
        rank_deficient: qr.rank() < a.cols(),
    })
}

pub(crate) fn residual_norm(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    b.iter()
        .zip(ax)
        .map(|(bi, ai)| (bi - ai).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `(A^T A)^{-1} A^T` for a full-column-rank `A`.
pub fn pseudoinverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = ColPivQr::new(a);
    let (m, n) = (a.rows(), a.cols());
    if qr.rank() < n {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            cols: n,
        });
    }
    let mut pinv = DenseMatrix::zeros(n, m);
    let mut e = vec![0.0; m];
    for i in 0..m {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[i] = 1.0;
        qr.apply_qt(&mut e);
        let z = qr.back_substitute(&e, n);
        for (k, &p) in qr.perm().iter().enumerate() {
            pinv.set(p, i, z[k]);
        }
    }
    Ok(pinv)
}

/// `I - D1 D1^+`, the projector onto the orthogonal complement of `range(D1)`.
pub fn orthogonal_projector(d1: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = ColPivQr::new(d1);
    if qr.rank() < d1.cols() {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            cols: d1.cols(),
        });
    }
    let q = qr.thin_q();
    let m = d1.rows();
    let mut p = DenseMatrix::identity(m);
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for k in 0..q.cols() {
                s += q.get(i, k) * q.get(j, k);
            }
            let v = p.get(i, j) - s;
            p.set(i, j, v);
            p.set(j, i, v);
        }
    }
    Ok(p)
}

/// Thin QR grown one column at a time (modified Gram-Schmidt with one
/// reorthogonalization pass). Used by the greedy pursuits, whose least-squares
/// update only ever appends an atom.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    rows: usize,
    q: Vec<Vec<f64>>,
    // r[j] holds column j of R (length j + 1)
    r: Vec<Vec<f64>>,
    rel_tol: f64,
}

impl IncrementalQr {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            q: Vec::new(),
            r: Vec::new(),
            rel_tol: 1e-10,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Appends a column. Returns `false` (and leaves the factorization
    /// untouched) when the column is numerically in the span of the
    /// existing ones.
    pub fn push(&mut self, col: &[f64]) -> bool {
        assert_eq!(col.len(), self.rows);
        let norm0 = norm2(col);
        if norm0 == 0.0 || self.q.len() >= self.rows {
            return false;
        }
        let mut v = col.to_vec();
        let mut coeffs = vec![0.0; self.q.len()];
        for _pass in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let s = dot(qk, &v);
                coeffs[k] += s;
                axpy(-s, qk, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv <= self.rel_tol * norm0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        coeffs.push(nv);
        self.q.push(v);
        self.r.push(coeffs);
        true
    }

    /// Least-squares coefficients of `b` on the columns pushed so far.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.q.len();
        let mut x: Vec<f64> = self.q.iter().map(|qk| dot(qk, b)).collect();
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in i + 1..k {
                s -= self.r[j][i] * x[j];
            }
            x[i] = s / self.r[i][i];
        }
        x
    }
}
