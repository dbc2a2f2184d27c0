//! Brute-force ground truth for small instances.

use serde::Serialize;

use crate::dictgen::{is_m_plus, CombinedDictionary, Dictionary, RowSpanCertificate};
use crate::error::{Error, Result};
use crate::greedy::{SparseSolution, Termination};
use crate::linalg::{lsi_solve, nnls_solve, norm2, orthogonal_projector, ColPivQr, DenseMatrix};
use crate::lp;

/// Largest number of supports any enumeration here will visit.
pub const ENUMERATION_GUARD: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ml0Result {
    pub solution: SparseSolution,
    /// Exactly one support of the minimal size fits `y`.
    pub unique: bool,
    /// `None` when no support up to `s_max` fits.
    pub size: Option<usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_guard(n: usize, s_max: usize) -> Result<()> {
    let count: u128 = (0..=s_max.min(n)).map(|s| binomial(n, s)).sum();
    if count > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard { count, guard: ENUMERATION_GUARD });
    }
    Ok(())
}

/// Calls `f` on every `s`-subset of `0..n` in colexicographic order until it
/// returns `false`.
pub fn for_each_colex(n: usize, s: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if s > n {
        return;
    }
    let mut c: Vec<usize> = (0..s).collect();
    loop {
        if !f(&c) {
            return;
        }
        // advance: lowest position that can move up without colliding
        let mut i = 0;
        while i < s && c[i] + 1 == if i + 1 < s { c[i + 1] } else { n } {
            i += 1;
        }
        if i == s {
            return;
        }
        c[i] += 1;
        for (j, v) in c.iter_mut().enumerate().take(i) {
            *v = j;
        }
    }
}

/// Minimum-l0 search: the smallest support (size `<= s_max`) whose
/// sign-constrained least-squares fit leaves a residual `<= tol`.
pub fn ml0_search(g: &CombinedDictionary, y: &[f64], s_max: usize, tol: f64) -> Result<Ml0Result> {
    let a = g.dictionary().matrix();
    let (kg, kx) = (g.kg(), g.kx());
    if y.len() != a.rows() {
        return Err(Error::Dimension("signal length differs from dictionary rows".into()));
    }
    check_guard(kg, s_max)?;
    let ynorm = norm2(y);
    if ynorm <= tol {
        return Ok(Ml0Result {
            solution: SparseSolution::zeros(kg, ynorm, Termination::Residual),
            unique: true,
            size: Some(0),
        });
    }
    for s in 1..=s_max.min(kg) {
        let mut first: Option<(Vec<usize>, Vec<f64>, f64)> = None;
        let mut count = 0usize;
        for_each_colex(kg, s, |supp| {
            let sub = a.select_columns(supp);
            let nx = supp.iter().filter(|&&i| i < kx).count();
            if let Ok(res) = lsi_solve(&sub, y, nx) {
                if res.residual_norm <= tol {
                    count += 1;
                    if first.is_none() {
                        first = Some((supp.to_vec(), res.solution, res.residual_norm));
                    }
                }
            }
            count < 2
        });
        if let Some((supp, coef, res)) = first {
            let mut delta = vec![0.0; kg];
            for (&i, &c) in supp.iter().zip(&coef) {
                delta[i] = c;
            }
            let solution = SparseSolution {
                delta,
                support_x: supp.iter().copied().filter(|&i| i < kx).collect(),
                support_d: supp.iter().copied().filter(|&i| i >= kx).collect(),
                residual_norm: res,
                iterations: s,
                termination: Termination::Residual,
            };
            return Ok(Ml0Result { solution, unique: count == 1, size: Some(s) });
        }
    }
    Ok(Ml0Result {
        solution: SparseSolution::zeros(kg, ynorm, Termination::Stalled),
        unique: false,
        size: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingletonReport {
    pub singleton: bool,
    /// The NNLS solution (empty if the set is empty).
    pub solution: Vec<f64>,
    /// A second non-negative solution, when one was found (absent only when
    /// the set is unbounded in a direction the LP did not return a point for).
    pub witness: Option<Vec<f64>>,
}

/// Distance beyond which two coefficient vectors count as different solutions.
const DISTINCT: f64 = 1e-6;

/// Decides whether `{a >= 0 : X a = y}` is a single point.
///
/// One solution comes from NNLS. A second is searched for among all
/// linearly independent supports of size `<= s_max`, and finally each
/// coordinate's range over the feasible polytope is measured by LP.
pub fn nn_singleton_check(x: &Dictionary, y: &[f64], s_max: usize, tol: f64) -> Result<SingletonReport> {
    let a = x.matrix();
    let k = a.cols();
    check_guard(k, s_max)?;
    let base = nnls_solve(a, y, crate::linalg::default_kkt_tol(a, y))?;
    if base.residual_norm > tol {
        return Ok(SingletonReport { singleton: false, solution: Vec::new(), witness: None });
    }
    let alpha = base.solution;

    let mut witness = None;
    for s in 1..=s_max.min(k) {
        for_each_colex(k, s, |supp| {
            let sub = a.select_columns(supp);
            let qr = ColPivQr::new(&sub);
            if qr.rank() < s {
                return true;
            }
            let coef = qr.solve(y);
            if coef.iter().any(|&c| c < -tol) {
                return true;
            }
            if crate::linalg::residual_norm_of(&sub, &coef, y) > tol {
                return true;
            }
            let mut cand = vec![0.0; k];
            for (&i, &c) in supp.iter().zip(&coef) {
                cand[i] = c.max(0.0);
            }
            let dist = cand.iter().zip(&alpha).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            if dist > DISTINCT {
                witness = Some(cand);
                return false;
            }
            true
        });
        if witness.is_some() {
            return Ok(SingletonReport { singleton: false, solution: alpha, witness });
        }
    }

    let scale = 1.0 + alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..k {
        if let Some([lo, hi]) = lp::coordinate_range(a, y, i)? {
            if hi.value - lo.value > DISTINCT * scale {
                // the end farther from alpha_i is a second solution
                let far = if hi.value - alpha[i] >= alpha[i] - lo.value { hi } else { lo };
                return Ok(SingletonReport { singleton: false, solution: alpha, witness: far.point });
            }
        }
    }
    Ok(SingletonReport { singleton: true, solution: alpha, witness: None })
}

/// Existence of `h` with `h^T X > 0` and `h^T D1 = 0`.
///
/// The returned certificate is feasible when the optimal margin of
/// `h^T x_j >= t` over the unit box exceeds `tol`.
pub fn lemma3_feasibility(x: &DenseMatrix, d1: Option<&DenseMatrix>, tol: f64) -> Result<RowSpanCertificate> {
    let Some(d1) = d1.filter(|d| d.cols() > 0) else {
        return is_m_plus(x, tol);
    };
    if d1.rows() != x.rows() {
        return Err(Error::Dimension("D1 and X row counts differ".into()));
    }
    let qr = ColPivQr::new(d1);
    if qr.rank() < d1.cols() {
        return Err(Error::RankDeficient { rank: qr.rank(), cols: d1.cols() });
    }
    let (margin, h) = lp::max_row_span_margin(x, Some(d1))?;
    Ok(RowSpanCertificate { feasible: margin >= tol, h, margin })
}

/// Projects out a known general support: returns `(P X, P y)` with
/// `P = I - D1 D1^+` for `D1` the selected general atoms.
pub fn reduce_by_known_support(
    g: &CombinedDictionary,
    y: &[f64],
    d_support: &[usize],
) -> Result<(DenseMatrix, Vec<f64>)> {
    let a = g.dictionary().matrix();
    if let Some(&bad) = d_support.iter().find(|&&j| j < g.kx() || j >= g.kg()) {
        return Err(Error::InvalidArgument(format!("index {bad} is not a general-block atom")));
    }
    let xs: Vec<usize> = (0..g.kx()).collect();
    let x = a.select_columns(&xs);
    if d_support.is_empty() {
        return Ok((x, y.to_vec()));
    }
    let p = orthogonal_projector(&a.select_columns(d_support))?;
    Ok((p.matmul(&x), p.mul_vec(y)))
}
