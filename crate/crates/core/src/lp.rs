//! Small linear programs on top of `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Maximizes the margin `t` such that `h^T x_j >= t` for every column `x_j`
/// of `x`, over `h` in the unit box, optionally subject to `h^T d_k = 0` for
/// every column of `orth`. Returns `(t, h)`.
pub(crate) fn max_row_span_margin(
    x: &DenseMatrix,
    orth: Option<&DenseMatrix>,
) -> Result<(f64, Vec<f64>)> {
    let m = x.rows();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let h: Vec<Variable> = (0..m).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for j in 0..x.cols() {
        let mut expr: Vec<(Variable, f64)> = h
            .iter()
            .zip(x.col(j))
            .filter(|(_, &c)| c != 0.0)
            .map(|(&v, &c)| (v, c))
            .collect();
        expr.push((t, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    if let Some(d) = orth {
        if d.rows() != m {
            return Err(Error::Dimension("orthogonality block row mismatch".into()));
        }
        for k in 0..d.cols() {
            let expr: Vec<(Variable, f64)> = h
                .iter()
                .zip(d.col(k))
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            if !expr.is_empty() {
                lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, 0.0);
            }
        }
    }
    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let hv = h.iter().map(|&v| sol[v]).collect();
    Ok((sol[t], hv))
}

/// Extremes of coordinate `i` over `{a >= 0 : X a = y}`, each with a
/// feasible point attaining it. `Ok(None)` means the feasible set is empty;
/// an unbounded end is reported as infinite with no point.
pub(crate) fn coordinate_range(x: &DenseMatrix, y: &[f64], i: usize) -> Result<Option<[Extremum; 2]>> {
    let Some(lo) = extremum(x, y, i, OptimizationDirection::Minimize)? else {
        return Ok(None);
    };
    let hi = extremum(x, y, i, OptimizationDirection::Maximize)?.unwrap_or_else(|| lo.clone());
    Ok(Some([lo, hi]))
}

#[derive(Debug, Clone)]
pub(crate) struct Extremum {
    pub value: f64,
    pub point: Option<Vec<f64>>,
}

fn extremum(x: &DenseMatrix, y: &[f64], i: usize, dir: OptimizationDirection) -> Result<Option<Extremum>> {
    let k = x.cols();
    let mut lp = Problem::new(dir);
    let a: Vec<Variable> = (0..k)
        .map(|j| lp.add_var(if j == i { 1.0 } else { 0.0 }, (0.0, f64::INFINITY)))
        .collect();
    for (r, &yr) in y.iter().enumerate() {
        let expr: Vec<(Variable, f64)> = (0..k)
            .filter(|&j| x.get(r, j) != 0.0)
            .map(|j| (a[j], x.get(r, j)))
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, yr);
    }
    match lp.solve() {
        Ok(sol) => Ok(Some(Extremum { value: sol[a[i]], point: Some(a.iter().map(|&v| sol[v]).collect()) })),
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(minilp::Error::Unbounded) => Ok(Some(Extremum {
            value: match dir {
                OptimizationDirection::Maximize => f64::INFINITY,
                OptimizationDirection::Minimize => f64::NEG_INFINITY,
            },
            point: None,
        })),
    }
}
