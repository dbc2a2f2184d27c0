//! Dictionaries and their coherence quantities.
//!
//! Gaussian dictionaries are drawn with ChaCha8 (64-bit seed) and the
//! Ziggurat normal sampler from `rand_distr`, so every experiment is
//! replayable from its seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::lp;

/// Column-normalized dictionary. Every atom has unit l2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DenseMatrix,
    column_norms: Vec<f64>,
}

impl Dictionary {
    /// Normalizes the columns of `matrix`. Zero columns are rejected.
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        let mut matrix = matrix;
        let mut column_norms = Vec::with_capacity(matrix.cols());
        for j in 0..matrix.cols() {
            let n = norm2(matrix.col(j));
            if n == 0.0 {
                return Err(Error::ZeroColumn(j));
            }
            matrix.col_mut(j).iter_mut().for_each(|v| *v /= n);
            column_norms.push(n);
        }
        Ok(Self {
            matrix,
            column_norms,
        })
    }

    pub fn identity(m: usize) -> Self {
        Self::new(DenseMatrix::identity(m)).expect("identity has no zero column")
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn atoms(&self) -> usize {
        self.matrix.cols()
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        self.matrix.col(j)
    }

    /// `[self | other]`
    pub fn concat(&self, other: &Dictionary) -> Result<Dictionary> {
        Ok(Dictionary {
            matrix: self.matrix.hstack(&other.matrix)?,
            column_norms: self.column_norms.iter().chain(&other.column_norms).copied().collect(),
        })
    }

    pub fn negated(&self) -> Dictionary {
        Dictionary {
            matrix: self.matrix.scale(-1.0),
            column_norms: self.column_norms.clone(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Dictionary {
        Dictionary {
            matrix: self.matrix.select_columns(idx),
            column_norms: idx.iter().map(|&j| self.column_norms[j]).collect(),
        }
    }
}

/// `G = [X | D]` with the first `split` atoms forming the non-negative block.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedDictionary {
    g: Dictionary,
    split: usize,
}

impl CombinedDictionary {
    pub fn new(g: Dictionary, split: usize) -> Result<Self> {
        if split > g.atoms() {
            return Err(Error::InvalidArgument(format!(
                "split {split} exceeds {} atoms",
                g.atoms()
            )));
        }
        Ok(Self { g, split })
    }

    /// Concatenates a non-negative block and a general block.
    pub fn from_blocks(x: &Dictionary, d: &Dictionary) -> Result<Self> {
        Self::new(x.concat(d)?, x.atoms())
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.g
    }

    pub fn kx(&self) -> usize {
        self.split
    }

    pub fn kd(&self) -> usize {
        self.g.atoms() - self.split
    }

    pub fn kg(&self) -> usize {
        self.g.atoms()
    }

    pub fn rows(&self) -> usize {
        self.g.rows()
    }

    pub fn is_nonneg(&self, j: usize) -> bool {
        j < self.split
    }

    /// The non-negative block, if non-empty.
    pub fn x_block(&self) -> Option<Dictionary> {
        (self.split > 0).then(|| self.g.select(&(0..self.split).collect::<Vec<_>>()))
    }

    /// The general block, if non-empty.
    pub fn d_block(&self) -> Option<Dictionary> {
        (self.kd() > 0).then(|| self.g.select(&(self.split..self.kg()).collect::<Vec<_>>()))
    }

    pub fn profile(&self) -> CoherenceProfile {
        let x = self.x_block();
        let d = self.d_block();
        let block = |b: &Option<Dictionary>| {
            b.as_ref()
                .filter(|b| b.atoms() >= 2)
                .map(|b| pairwise_max(b.matrix(), Norming::TwoSided))
                .unwrap_or(0.0)
        };
        let mu_x = block(&x);
        let mu_d = block(&d);
        let sigma_x = x
            .as_ref()
            .filter(|b| b.atoms() >= 2)
            .map(|b| pairwise_max(b.matrix(), Norming::OneSided))
            .unwrap_or(0.0);
        let mu_g = match (&x, &d) {
            (Some(x), Some(d)) => cross_max(x.matrix(), d.matrix()),
            _ => 0.0,
        };
        CoherenceProfile::new(mu_x, mu_d, mu_g, sigma_x)
    }
}

/// Coherence inputs to the recovery thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceProfile {
    pub mu_x: f64,
    pub mu_d: f64,
    pub mu_g: f64,
    pub mu_m: f64,
    pub sigma_x: f64,
}

impl CoherenceProfile {
    pub fn new(mu_x: f64, mu_d: f64, mu_g: f64, sigma_x: f64) -> Self {
        Self {
            mu_x,
            mu_d,
            mu_g,
            mu_m: mu_x.max(mu_d).max(mu_g),
            sigma_x,
        }
    }

    /// Profile for normalized blocks, where `sigma_x == mu_x`.
    pub fn normalized(mu_x: f64, mu_d: f64, mu_g: f64) -> Self {
        Self::new(mu_x, mu_d, mu_g, mu_x)
    }
}

/// Raw `M x K` matrix with i.i.d. N(0, 1) entries, before normalization.
pub fn gaussian_matrix<R: Rng>(m: usize, k: usize, rng: &mut R) -> DenseMatrix {
    let data: Vec<f64> = (0..m * k).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_col_major(m, k, data).expect("gaussian entries are finite")
}

pub fn gaussian_dictionary(m: usize, k: usize, seed: u64) -> Result<Dictionary> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "dictionary must be at least 1x1, got {m}x{k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dictionary::new(gaussian_matrix(m, k, &mut rng))
}

/// Orthonormal 1-D DCT-II matrix; row `k` is the `k`-th basis vector.
pub fn dct1d_matrix(n: usize) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(n, n);
    let nf = n as f64;
    for k in 0..n {
        let s = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for i in 0..n {
            let v = s * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
            c.set(k, i, v);
        }
    }
    c
}

/// Orthonormal 2-D DCT-II basis for `side x side` patches.
///
/// Patches are vectorized row-major (pixel `(r, c)` at `r * side + c`); atom
/// `k1 * side + k2` is the separable image `C[k1][r] * C[k2][c]`.
pub fn dct2d_dictionary(side: usize) -> Result<Dictionary> {
    if side == 0 {
        return Err(Error::InvalidArgument("patch side must be >= 1".into()));
    }
    let c = dct1d_matrix(side);
    let n = side * side;
    let mut d = DenseMatrix::zeros(n, n);
    for k1 in 0..side {
        for k2 in 0..side {
            let col = d.col_mut(k1 * side + k2);
            for r in 0..side {
                for cc in 0..side {
                    col[r * side + cc] = c.get(k1, r) * c.get(k2, cc);
                }
            }
        }
    }
    Dictionary::new(d)
}

#[derive(Clone, Copy)]
enum Norming {
    TwoSided,
    OneSided,
}

fn pairwise_max(a: &DenseMatrix, norming: Norming) -> f64 {
    let k = a.cols();
    let norms = a.column_norms();
    let mut best = 0.0f64;
    for i in 0..k {
        for j in i + 1..k {
            let ip = dot(a.col(i), a.col(j)).abs();
            let v = match norming {
                Norming::TwoSided => ip / (norms[i] * norms[j]),
                Norming::OneSided => (ip / (norms[i] * norms[i])).max(ip / (norms[j] * norms[j])),
            };
            best = best.max(v);
        }
    }
    best
}

fn cross_max(x: &DenseMatrix, d: &DenseMatrix) -> f64 {
    let nx = x.column_norms();
    let nd = d.column_norms();
    let mut best = 0.0f64;
    for i in 0..x.cols() {
        for j in 0..d.cols() {
            best = best.max(dot(x.col(i), d.col(j)).abs() / (nx[i] * nd[j]));
        }
    }
    best
}

fn require_nonzero_columns(a: &DenseMatrix) -> Result<()> {
    match a.column_norms().iter().position(|&n| n == 0.0) {
        Some(j) => Err(Error::ZeroColumn(j)),
        None => Ok(()),
    }
}

/// Two-sided coherence: `max_{i != j} |x_i^T x_j| / (||x_i|| ||x_j||)`.
pub fn coherence(a: &DenseMatrix) -> Result<f64> {
    if a.cols() < 2 {
        return Err(Error::InvalidArgument(
            "coherence needs at least two atoms".into(),
        ));
    }
    require_nonzero_columns(a)?;
    Ok(pairwise_max(a, Norming::TwoSided).min(1.0))
}

/// One-sided coherence: `max_{i != j} |x_i^T x_j| / ||x_i||^2`.
pub fn one_sided_coherence(a: &DenseMatrix) -> Result<f64> {
    if a.cols() < 2 {
        return Err(Error::InvalidArgument(
            "one-sided coherence needs at least two atoms".into(),
        ));
    }
    require_nonzero_columns(a)?;
    Ok(pairwise_max(a, Norming::OneSided))
}

/// Cross-coherence over all pairs `(i, j)`, including `i == j`.
pub fn cross_coherence(x: &DenseMatrix, d: &DenseMatrix) -> Result<f64> {
    if x.rows() != d.rows() {
        return Err(Error::Dimension(format!(
            "cross coherence: {} rows vs {} rows",
            x.rows(),
            d.rows()
        )));
    }
    require_nonzero_columns(x)?;
    require_nonzero_columns(d)?;
    Ok(cross_max(x, d).min(1.0))
}

/// Outcome of a row-span feasibility test.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RowSpanCertificate {
    pub feasible: bool,
    /// `h` maximizing `min_j h^T x_j` over the unit box.
    pub h: Vec<f64>,
    /// `min_j h^T x_j` at the returned `h`.
    pub margin: f64,
}

/// Decides whether the row span of `X` meets the positive orthant, i.e.
/// whether some `h` has `h^T X >= tol` entrywise (with `h` in the unit box).
pub fn is_m_plus(x: &DenseMatrix, tol: f64) -> Result<RowSpanCertificate> {
    let (margin, h) = lp::max_row_span_margin(x, None)?;
    Ok(RowSpanCertificate {
        feasible: margin >= tol,
        h,
        margin,
    })
}

const BINARY_MAGIC: &[u8; 4] = b"SCMX";

/// Writes `rows,cols` then one comma-separated line per row.
pub fn write_matrix_csv(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{},{}\n", a.rows(), a.cols()));
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols()).map(|j| format!("{:e}", a.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Binary layout: `SCMX`, rows (u64 LE), cols (u64 LE), column-major f64 LE.
pub fn write_matrix_binary(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(BINARY_MAGIC)?;
    f.write_all(&(a.rows() as u64).to_le_bytes())?;
    f.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.as_slice() {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads either matrix format, detected from the leading bytes.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::InvalidArgument("matrix file is neither binary nor UTF-8".into()))?;
        parse_csv(&text)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    let header = |r: std::ops::Range<usize>| -> Result<usize> {
        let b: [u8; 8] = bytes
            .get(r)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| Error::InvalidArgument("truncated matrix header".into()))?;
        Ok(u64::from_le_bytes(b) as usize)
    };
    let rows = header(4..12)?;
    let cols = header(12..20)?;
    let body = &bytes[20..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Dimension(format!(
            "binary matrix {rows}x{cols} needs {} bytes, found {}",
            rows * cols * 8,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseMatrix::from_col_major(rows, cols, data)
}

fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad matrix header `{header}`")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::InvalidArgument(format!("bad matrix header `{header}`")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad number on data line {}", i + 1)))?;
        if vals.len() != cols {
            return Err(Error::Dimension(format!(
                "data line {} has {} entries, expected {cols}",
                i + 1,
                vals.len()
            )));
        }
        data.extend(vals);
    }
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "expected {rows} data lines, found {}",
            data.len() / cols.max(1)
        )));
    }
    DenseMatrix::from_row_major(rows, cols, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_coherence(a: &DenseMatrix) -> f64 {
        let mut best = 0.0f64;
        for i in 0..a.cols() {
            for j in 0..a.cols() {
                if i != j {
                    let v = dot(a.col(i), a.col(j)).abs()
                        / (norm2(a.col(i)) * norm2(a.col(j)));
                    best = best.max(v);
                }
            }
        }
        best
    }

    #[test]
    fn gaussian_is_deterministic_and_normalized() {
        let a = gaussian_dictionary(4, 4, 42).unwrap();
        let b = gaussian_dictionary(4, 4, 42).unwrap();
        assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
        let big = gaussian_dictionary(100, 200, 1).unwrap();
        for n in big.matrix().column_norms() {
            assert!((n - 1.0).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let raw = gaussian_matrix(100, 200, &mut rng);
        let mean = raw.as_slice().iter().sum::<f64>() / 20000.0;
        assert!(mean.abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn keeps_the_original_column_norms() {
        let a = DenseMatrix::from_row_major(2, 2, &[3.0, 0.0, 4.0, 2.0]).unwrap();
        let d = Dictionary::new(a).unwrap();
        assert_eq!(d.column_norms(), &[5.0, 2.0]);
        assert_eq!(d.negated().column_norms(), &[5.0, 2.0]);
        assert_eq!(d.concat(&Dictionary::identity(2)).unwrap().column_norms(), &[5.0, 2.0, 1.0, 1.0]);
        assert_eq!(d.select(&[1]).column_norms(), &[2.0]);
    }

    #[test]
    fn dct_basis() {
        let one = dct2d_dictionary(1).unwrap();
        assert_eq!(one.matrix().as_slice(), &[1.0]);
        let d = dct2d_dictionary(8).unwrap();
        assert!(d.matrix().gram().sub(&DenseMatrix::identity(64)).max_abs() < 1e-10);
        let mu_g = cross_coherence(&DenseMatrix::identity(64).scale(-1.0), d.matrix()).unwrap();
        assert!((mu_g - 0.2405).abs() < 1e-4, "{mu_g}");
    }

    #[test]
    fn dct_atoms_are_separable() {
        for n in 1..=8 {
            let d = dct2d_dictionary(n).unwrap();
            let c = dct1d_matrix(n);
            for k1 in 0..n {
                for k2 in 0..n {
                    let atom = d.atom(k1 * n + k2);
                    for r in 0..n {
                        for cc in 0..n {
                            let v = c.get(k1, r) * c.get(k2, cc);
                            assert!((atom[r * n + cc] - v).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(coherence(&DenseMatrix::identity(5)).unwrap(), 0.0);
        let s = 1.0 / 2f64.sqrt();
        let a = DenseMatrix::from_columns(&[vec![1., 0.], vec![0., 1.], vec![s, s]]).unwrap();
        assert!((coherence(&a).unwrap() - s).abs() < 1e-12);
        let g = gaussian_dictionary(20, 40, 3).unwrap();
        assert!((coherence(g.matrix()).unwrap() - brute_coherence(g.matrix())).abs() < 1e-12);
        assert!(coherence(&DenseMatrix::identity(1)).is_err());
    }

    #[test]
    fn one_sided_examples() {
        let g = gaussian_dictionary(10, 15, 4).unwrap();
        let mu = coherence(g.matrix()).unwrap();
        assert!((one_sided_coherence(g.matrix()).unwrap() - mu).abs() < 1e-12);

        let orth = DenseMatrix::from_columns(&[vec![2., 0.], vec![0., 1.]]).unwrap();
        assert_eq!(one_sided_coherence(&orth).unwrap(), 0.0);
        assert_eq!(coherence(&orth).unwrap(), 0.0);

        let skew = DenseMatrix::from_columns(&[vec![1., 0.], vec![1., 1.]]).unwrap();
        assert!((one_sided_coherence(&skew).unwrap() - 1.0).abs() < 1e-12);
        assert!((coherence(&skew).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);

        let zero = DenseMatrix::from_columns(&[vec![1., 0.], vec![0., 0.]]).unwrap();
        assert!(matches!(one_sided_coherence(&zero), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn cross_coherence_examples() {
        let g = gaussian_dictionary(6, 3, 5).unwrap();
        assert!((cross_coherence(g.matrix(), g.matrix()).unwrap() - 1.0).abs() < 1e-12);
        let x = DenseMatrix::from_columns(&[vec![1., 0., 0.]]).unwrap();
        let d = DenseMatrix::from_columns(&[vec![0., 1., 0.], vec![0., 0., 1.]]).unwrap();
        assert_eq!(cross_coherence(&x, &d).unwrap(), 0.0);
        assert!(cross_coherence(&x, &DenseMatrix::identity(2)).is_err());
    }

    #[test]
    fn profile_consistency() {
        let g = gaussian_dictionary(30, 50, 6).unwrap();
        let cd = CombinedDictionary::new(g, 20).unwrap();
        let p = cd.profile();
        assert_eq!(p.mu_m, p.mu_x.max(p.mu_d).max(p.mu_g));
        assert!((p.mu_x - p.sigma_x).abs() < 1e-12);
        let x = cd.x_block().unwrap();
        let d = cd.d_block().unwrap();
        assert!((p.mu_x - coherence(x.matrix()).unwrap()).abs() < 1e-15);
        assert!((p.mu_d - coherence(d.matrix()).unwrap()).abs() < 1e-15);
        assert!((p.mu_g - cross_coherence(x.matrix(), d.matrix()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn m_plus_examples() {
        let x = DenseMatrix::from_row_major(2, 3, &[1., 2., 0.5, -1., 3., 0.]).unwrap();
        let cert = is_m_plus(&x, 1e-9).unwrap();
        assert!(cert.feasible);
        let hx = x.tr_mul_vec(&cert.h);
        assert!(hx.iter().all(|&v| v >= 1e-9));

        let pair = DenseMatrix::from_columns(&[vec![1., 0., 0.], vec![-1., 0., 0.]]).unwrap();
        assert!(!is_m_plus(&pair, 1e-9).unwrap().feasible);
    }

    #[test]
    fn matrix_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = gaussian_dictionary(5, 7, 8).unwrap();
        let csv = dir.path().join("g.csv");
        let bin = dir.path().join("g.bin");
        write_matrix_csv(&csv, g.matrix()).unwrap();
        write_matrix_binary(&bin, g.matrix()).unwrap();
        assert_eq!(&read_matrix(&bin).unwrap(), g.matrix());
        let back = read_matrix(&csv).unwrap();
        assert!(back.sub(g.matrix()).max_abs() == 0.0);
    }
}
