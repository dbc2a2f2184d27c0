//! l1 pursuit: NN-BP, BP and COMB-BP.
//!
//! The core is a homotopy on the non-negative LASSO path
//! `min 0.5 ||y - A a||^2 + lambda 1^T a, a >= 0`, followed from
//! `lambda = max(A^T y)` down to the point where `||y - A a|| = eps`.
//! Signed coefficients are handled by column doubling.

use serde::{Deserialize, Serialize};

use crate::dictgen::{CombinedDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::greedy::{SparseSolution, Termination};
use crate::linalg::{axpy, dot, norm2, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSolverConfig {
    pub residual_tol: f64,
    /// `None` means `4 * min(M, K)` for the dictionary at hand.
    pub max_breakpoints: Option<usize>,
    pub kkt_tol: f64,
    /// When the residual target is met on the final segment of the path
    /// (no join or drop before `lambda = 0`), follow the segment to its end:
    /// that point is the exact equality-constrained solution.
    pub exact_limit: bool,
}

impl Default for PathSolverConfig {
    fn default() -> Self {
        Self { residual_tol: 1e-6, max_breakpoints: None, kkt_tol: 1e-6, exact_limit: true }
    }
}

/// Lower-triangular Cholesky factor of the active Gram matrix, grown one
/// column at a time.
#[derive(Debug, Default)]
struct Cholesky {
    rows: Vec<Vec<f64>>,
}

impl Cholesky {
    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Appends a column with inner products `cross` against the current
    /// columns and squared norm `diag`. Returns false if it is (nearly)
    /// linearly dependent.
    fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        let w = self.forward(cross);
        let d2 = diag - dot(&w, &w);
        if d2 <= 1e-10 * diag {
            return false;
        }
        let mut row = w;
        row.push(d2.sqrt());
        self.rows.push(row);
        true
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut w = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let s = b[i] - dot(&row[..i], &w);
            w.push(s / row[i]);
        }
        w
    }

    /// Solves `L L^T x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        let n = self.len();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.rows[j][i] * x[j];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Join(usize),
    Drop(usize),
    End,
}

/// Output of the path core on a non-negative dictionary.
#[derive(Debug, Clone)]
struct PathOutcome {
    coef: Vec<f64>,
    residual_norm: f64,
    breakpoints: usize,
    termination: Termination,
}

fn path_core(a: &DenseMatrix, y: &[f64], cfg: &PathSolverConfig) -> Result<PathOutcome> {
    let m = a.rows();
    let k = a.cols();
    if y.len() != m {
        return Err(Error::Dimension(format!("signal has length {}, dictionary has {m} rows", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    let eps = cfg.residual_tol;
    let cap = cfg.max_breakpoints.unwrap_or(4 * m.min(k)).max(1);

    let mut coef = vec![0.0; k];
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; k];
    let mut blocked = vec![false; k];
    let mut chol = Cholesky::default();
    let mut r = y.to_vec();
    let mut c = a.tr_mul_vec(&r);
    let mut breakpoints = 0;

    let finish = |coef: Vec<f64>, r: &[f64], breakpoints, termination| PathOutcome {
        coef,
        residual_norm: norm2(r),
        breakpoints,
        termination,
    };

    if norm2(&r) <= eps {
        return Ok(finish(coef, &r, 0, Termination::Residual));
    }
    let (first, mut lambda) = argmax(&c, |_| true);
    if !(lambda > 0.0) {
        return Ok(finish(coef, &r, 0, Termination::Stalled));
    }
    let first = first.unwrap();
    chol.push(&[], dot(a.col(first), a.col(first)));
    active.push(first);
    is_active[first] = true;
    let mut just_joined = Some(first);
    let mut just_dropped: Option<usize> = None;

    loop {
        let d = chol.solve(&vec![1.0; active.len()]);
        let mut u = vec![0.0; m];
        for (&j, &dj) in active.iter().zip(&d) {
            axpy(dj, a.col(j), &mut u);
        }
        let av = a.tr_mul_vec(&u);

        let mut gamma = lambda;
        let mut event = Event::End;
        for j in 0..k {
            if is_active[j] || blocked[j] || Some(j) == just_dropped {
                continue;
            }
            let den = 1.0 - av[j];
            if den > 1e-12 {
                let g = ((lambda - c[j]) / den).max(0.0);
                if g < gamma {
                    gamma = g;
                    event = Event::Join(j);
                }
            }
        }
        for (p, &i) in active.iter().enumerate() {
            if d[p] < 0.0 && Some(i) != just_joined {
                let g = (-coef[i] / d[p]).max(0.0);
                if g < gamma {
                    gamma = g;
                    event = Event::Drop(i);
                }
            }
        }

        // smallest step reaching ||r - gamma u|| = eps
        let rr = dot(&r, &r);
        let ru = dot(&r, &u);
        let uu = dot(&u, &u);
        let eps_step = if ru > 0.0 {
            let disc = ru * ru - uu * (rr - eps * eps);
            (disc >= 0.0).then(|| (rr - eps * eps).max(0.0) / (ru + disc.sqrt()))
        } else {
            None
        };
        let mut reached = eps_step.is_some_and(|s| s <= gamma);
        // events landing on lambda = 0 itself do not change the endpoint
        if reached && cfg.exact_limit && gamma >= lambda * (1.0 - 1e-9) {
            reached = false;
            gamma = lambda;
            event = Event::End;
        }
        if let Some(s) = eps_step.filter(|_| reached) {
            gamma = s;
        }

        for (&j, &dj) in active.iter().zip(&d) {
            coef[j] += gamma * dj;
        }
        lambda -= gamma;
        r = y.to_vec();
        for &j in &active {
            axpy(-coef[j], a.col(j), &mut r);
        }
        c = a.tr_mul_vec(&r);
        breakpoints += 1;

        if reached {
            return Ok(finish(coef, &r, breakpoints, Termination::Residual));
        }
        just_joined = None;
        just_dropped = None;
        match event {
            Event::End => {
                let t = if norm2(&r) <= eps { Termination::Residual } else { Termination::Stalled };
                return Ok(finish(coef, &r, breakpoints, t));
            }
            Event::Join(j) => {
                let cross: Vec<f64> = active.iter().map(|&i| dot(a.col(i), a.col(j))).collect();
                if chol.push(&cross, dot(a.col(j), a.col(j))) {
                    active.push(j);
                    is_active[j] = true;
                    just_joined = Some(j);
                } else {
                    blocked[j] = true;
                }
            }
            Event::Drop(i) => {
                coef[i] = 0.0;
                is_active[i] = false;
                active.retain(|&v| v != i);
                blocked.iter_mut().for_each(|b| *b = false);
                chol = rebuild(a, &active);
                just_dropped = Some(i);
                r = y.to_vec();
                for &j in &active {
                    axpy(-coef[j], a.col(j), &mut r);
                }
                c = a.tr_mul_vec(&r);
            }
        }
        if active.is_empty() {
            let t = if norm2(&r) <= eps { Termination::Residual } else { Termination::Stalled };
            return Ok(finish(coef, &r, breakpoints, t));
        }
        if breakpoints >= cap {
            let partial = finish(coef, &r, breakpoints, Termination::MaxIters);
            return Err(Error::BreakpointCap {
                cap,
                partial: Box::new(to_solution(partial, k, |i| (i, true))),
            });
        }
    }
}

fn rebuild(a: &DenseMatrix, active: &[usize]) -> Cholesky {
    let mut ch = Cholesky::default();
    for (p, &j) in active.iter().enumerate() {
        let cross: Vec<f64> = active[..p].iter().map(|&i| dot(a.col(i), a.col(j))).collect();
        // a set that was factorizable stays factorizable after removing a column
        let ok = ch.push(&cross, dot(a.col(j), a.col(j)));
        debug_assert!(ok);
    }
    ch
}

/// Largest value of `v` over indices passing `keep`, lowest index on ties.
fn argmax(v: &[f64], keep: impl Fn(usize) -> bool) -> (Option<usize>, f64) {
    let mut best = (None, f64::NEG_INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if keep(i) && x > best.1 {
            best = (Some(i), x);
        }
    }
    best
}

/// Folds an augmented coefficient vector of length `aug` into a solution of
/// length `k`. `map(i)` gives the target index and whether the column is a
/// positive copy.
fn to_solution(
    out: PathOutcome,
    k: usize,
    map: impl Fn(usize) -> (usize, bool),
) -> SparseSolution {
    let mut delta = vec![0.0; k];
    for (i, &v) in out.coef.iter().enumerate() {
        let (t, pos) = map(i);
        delta[t] += if pos { v } else { -v };
    }
    SparseSolution {
        delta,
        support_x: Vec::new(),
        support_d: Vec::new(),
        residual_norm: out.residual_norm,
        iterations: out.breakpoints,
        termination: out.termination,
    }
}

fn fill_supports(mut s: SparseSolution, kx: usize) -> SparseSolution {
    s.support_x = (0..kx).filter(|&i| s.delta[i] != 0.0).collect();
    s.support_d = (kx..s.delta.len()).filter(|&i| s.delta[i] != 0.0).collect();
    s
}

fn remap_cap(e: Error, k: usize, kx: usize, map: impl Fn(usize) -> (usize, bool)) -> Error {
    match e {
        Error::BreakpointCap { cap, partial } => {
            let out = PathOutcome {
                coef: partial.delta,
                residual_norm: partial.residual_norm,
                breakpoints: partial.iterations,
                termination: partial.termination,
            };
            Error::BreakpointCap { cap, partial: Box::new(fill_supports(to_solution(out, k, map), kx)) }
        }
        e => e,
    }
}

/// Non-negative basis pursuit: all coefficients constrained `>= 0`.
pub fn nn_homotopy_solve(a: &Dictionary, y: &[f64], cfg: &PathSolverConfig) -> Result<SparseSolution> {
    let k = a.atoms();
    let ident = |i| (i, true);
    path_core(a.matrix(), y, cfg)
        .map(|o| fill_supports(to_solution(o, k, ident), k))
        .map_err(|e| remap_cap(e, k, k, ident))
}

/// Basis pursuit through the doubled dictionary `[G, -G]`.
pub fn bp_solve(g: &Dictionary, y: &[f64], cfg: &PathSolverConfig) -> Result<SparseSolution> {
    let k = g.atoms();
    let aug = g.matrix().hstack(&g.matrix().scale(-1.0))?;
    let fold = move |i: usize| if i < k { (i, true) } else { (i - k, false) };
    path_core(&aug, y, cfg)
        .map(|o| fill_supports(to_solution(o, k, fold), 0))
        .map_err(|e| remap_cap(e, k, 0, fold))
}

/// COMB-BP through the augmented dictionary `[X, D, -D]`.
pub fn comb_bp_solve(g: &CombinedDictionary, y: &[f64], cfg: &PathSolverConfig) -> Result<SparseSolution> {
    let (kx, kg) = (g.kx(), g.kg());
    let aug = augmented(g)?;
    let fold = move |i: usize| if i < kg { (i, true) } else { (i - kg + kx, false) };
    path_core(&aug, y, cfg)
        .map(|o| fill_supports(to_solution(o, kg, fold), kx))
        .map_err(|e| remap_cap(e, kg, kx, fold))
}

fn augmented(g: &CombinedDictionary) -> Result<DenseMatrix> {
    let a = g.dictionary().matrix();
    let d: Vec<usize> = (g.kx()..g.kg()).collect();
    if d.is_empty() {
        return Ok(a.clone());
    }
    a.hstack(&a.select_columns(&d).scale(-1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub certified: bool,
    pub max_violation: f64,
    /// Regularization level implied by the active correlations.
    pub lambda: f64,
}

/// Optimality certificate for `min ||delta||_1 + (1/2 lambda)||y - G delta||^2`
/// with the X block non-negative, at the `lambda` implied by `delta`.
///
/// Violations are measured on correlations `c = G^T (y - G delta)` and
/// compared against `tol * max(1, ||G^T y||_inf)`.
pub fn verify_kkt(g: &CombinedDictionary, y: &[f64], delta: &[f64], tol: f64) -> Result<KktReport> {
    let a = g.dictionary().matrix();
    if delta.len() != a.cols() || y.len() != a.rows() {
        return Err(Error::Dimension("verify_kkt: inconsistent lengths".into()));
    }
    let kx = g.kx();
    let mut r = y.to_vec();
    for (j, &v) in delta.iter().enumerate() {
        if v != 0.0 {
            axpy(-v, a.col(j), &mut r);
        }
    }
    let c = a.tr_mul_vec(&r);
    let sign = |j: usize| if j < kx { 1.0 } else { delta[j].signum() };

    let act: Vec<usize> = (0..delta.len()).filter(|&j| delta[j] != 0.0).collect();
    let lambda = if act.is_empty() {
        let mut l = 0.0f64;
        for (j, &cj) in c.iter().enumerate() {
            l = l.max(if j < kx { cj } else { cj.abs() });
        }
        l
    } else {
        act.iter().map(|&j| c[j] * sign(j)).sum::<f64>() / act.len() as f64
    };

    let mut viol = (-lambda).max(0.0);
    for (j, &cj) in c.iter().enumerate() {
        let v = if delta[j] != 0.0 {
            let mut v = (cj - lambda * sign(j)).abs();
            if j < kx && delta[j] < 0.0 {
                v = v.max(-delta[j]);
            }
            v
        } else if j < kx {
            (cj - lambda).max(0.0)
        } else {
            (cj.abs() - lambda).max(0.0)
        };
        viol = viol.max(v);
    }
    let scale = a.tr_mul_vec(y).iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(KktReport {
        certified: viol <= tol * scale,
        max_violation: viol,
        lambda,
    })
}
