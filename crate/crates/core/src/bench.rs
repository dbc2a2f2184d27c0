//! Monte-Carlo recovery experiments.
//!
//! Every trial draws its own Gaussian dictionary, support and coefficients
//! from a seed derived from the master seed and the trial's coordinates, so
//! all algorithms in a cell see the same instances and results do not depend
//! on the number of worker threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{bp_solve, comb_bp_solve, nn_homotopy_solve, PathSolverConfig};
use crate::dictgen::{gaussian_matrix, CombinedDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::greedy::{
    comb_omp_solve, nn_omp_solve, omp_solve, CombOmpOptions, SparseSolution, StoppingCriteria,
    Termination,
};
use crate::linalg::norm2;

/// RRE below which a recovery counts as exact.
pub const EXACT_RRE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Omp,
    NnOmp,
    CombOmp,
    Bp,
    NnBp,
    CombBp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Omp,
        Algorithm::NnOmp,
        Algorithm::CombOmp,
        Algorithm::Bp,
        Algorithm::NnBp,
        Algorithm::CombBp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::NnOmp => "nn-omp",
            Algorithm::CombOmp => "comb-omp",
            Algorithm::Bp => "bp",
            Algorithm::NnBp => "nn-bp",
            Algorithm::CombBp => "comb-bp",
        }
    }

    pub fn is_greedy(self) -> bool {
        matches!(self, Algorithm::Omp | Algorithm::NnOmp | Algorithm::CombOmp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Ok(match key.to_ascii_lowercase().as_str() {
            "omp" => Algorithm::Omp,
            "nnomp" => Algorithm::NnOmp,
            "combomp" => Algorithm::CombOmp,
            "bp" => Algorithm::Bp,
            "nnbp" => Algorithm::NnBp,
            "combbp" => Algorithm::CombBp,
            _ => return Err(Error::InvalidArgument(format!("unknown algorithm '{s}'"))),
        })
    }
}

/// Knobs shared by every solver call in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Greedy iteration cap; `None` means `M`.
    pub max_iters: Option<usize>,
    pub residual_tol: f64,
    pub omp: CombOmpOptions,
    pub max_breakpoints: Option<usize>,
    /// On noisy instances, stop once the residual is no larger than the
    /// realized noise norm (never below `residual_tol`).
    pub stop_at_noise_level: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: None,
            residual_tol: 1e-6,
            omp: CombOmpOptions::default(),
            max_breakpoints: None,
            stop_at_noise_level: true,
        }
    }
}

impl SolverSettings {
    fn stop(&self, m: usize) -> StoppingCriteria {
        StoppingCriteria { max_iters: self.max_iters.unwrap_or(m), residual_tol: self.residual_tol }
    }

    fn path(&self) -> PathSolverConfig {
        PathSolverConfig {
            residual_tol: self.residual_tol,
            max_breakpoints: self.max_breakpoints,
            ..PathSolverConfig::default()
        }
    }
}

/// Runs `alg` on `y`. The plain solvers ignore the block split: OMP and BP
/// treat every atom as general, NN-OMP and NN-BP every atom as non-negative.
/// A homotopy that hits its breakpoint cap returns its partial solution.
pub fn run_algorithm(
    alg: Algorithm,
    g: &CombinedDictionary,
    y: &[f64],
    settings: &SolverSettings,
) -> Result<SparseSolution> {
    let stop = settings.stop(g.rows());
    let path = settings.path();
    let dict = g.dictionary();
    let out = match alg {
        Algorithm::Omp => omp_solve(dict, y, &stop),
        Algorithm::NnOmp => nn_omp_solve(dict, y, &stop),
        Algorithm::CombOmp => comb_omp_solve(g, y, &stop, settings.omp),
        Algorithm::Bp => bp_solve(dict, y, &path),
        Algorithm::NnBp => nn_homotopy_solve(dict, y, &path),
        Algorithm::CombBp => comb_bp_solve(g, y, &path),
    };
    match out {
        Err(Error::BreakpointCap { partial, .. }) => Ok(*partial),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CoeffModel {
    /// Non-negative entries from `U(0,1)`, general entries from `U(-1,1)`.
    Uniform,
    /// Non-negative entries equal to 1, general entries `+-1`.
    Signs,
}

impl fmt::Display for CoeffModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffModel::Uniform => "UNIFORM",
            CoeffModel::Signs => "SIGNS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub m: usize,
    pub kx: usize,
    pub kd: usize,
    pub sx: usize,
    pub sd: usize,
    pub coeff_model: CoeffModel,
    pub snr_db: Option<f64>,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.kx + self.kd == 0 {
            return Err(Error::InvalidArgument("M and Kx + Kd must be positive".into()));
        }
        if self.sx > self.kx || self.sd > self.kd {
            return Err(Error::InvalidArgument(format!(
                "sparsity ({}, {}) exceeds block sizes ({}, {})",
                self.sx, self.sd, self.kx, self.kd
            )));
        }
        if self.sx + self.sd > self.m {
            return Err(Error::InvalidArgument("Sx + Sd must not exceed M".into()));
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("snr_db must be finite when present".into()));
        }
        Ok(())
    }
}

/// A planted recovery problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub g: CombinedDictionary,
    pub y: Vec<f64>,
    pub delta: Vec<f64>,
    /// `G delta` before noise.
    pub clean: Vec<f64>,
}

impl Instance {
    /// `||y - clean||`.
    pub fn noise_norm(&self) -> f64 {
        self.y.iter().zip(&self.clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Draws the dictionary, supports, coefficients and (optionally) noise
/// scaled to the exact requested SNR.
pub fn plant_instance(spec: &TrialSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let kg = spec.kx + spec.kd;
    let dict = Dictionary::new(gaussian_matrix(spec.m, kg, &mut rng))?;
    let g = CombinedDictionary::new(dict, spec.kx)?;

    let mut delta = vec![0.0; kg];
    for i in rand::seq::index::sample(&mut rng, spec.kx, spec.sx) {
        delta[i] = match spec.coeff_model {
            CoeffModel::Uniform => rng.random::<f64>(),
            CoeffModel::Signs => 1.0,
        };
    }
    for j in rand::seq::index::sample(&mut rng, spec.kd, spec.sd) {
        delta[spec.kx + j] = match spec.coeff_model {
            CoeffModel::Uniform => rng.random_range(-1.0..1.0),
            CoeffModel::Signs => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
    }
    let clean = g.dictionary().matrix().mul_vec(&delta);
    let mut y = clean.clone();
    if let Some(snr) = spec.snr_db {
        let noise: Vec<f64> = (0..spec.m).map(|_| rng.sample(StandardNormal)).collect();
        let nn = norm2(&noise);
        let target = norm2(&clean) / 10f64.powf(snr / 20.0);
        if nn > 0.0 {
            for (yi, ni) in y.iter_mut().zip(&noise) {
                *yi += ni * target / nn;
            }
        }
    }
    Ok(Instance { g, y, delta, clean })
}

/// Relative recovery error `||hat - truth||^2 / ||truth||^2`.
pub fn rre(hat: &[f64], truth: &[f64]) -> Result<f64> {
    if hat.len() != truth.len() {
        return Err(Error::Dimension("rre: length mismatch".into()));
    }
    let den: f64 = truth.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument("rre: true vector is zero".into()));
    }
    let num: f64 = hat.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub rre: f64,
    pub exact: bool,
    pub wall_time: Duration,
    pub termination: Termination,
}

/// Times one solver call on a planted instance.
pub fn solve_instance(
    spec: &TrialSpec,
    inst: &Instance,
    settings: &SolverSettings,
) -> Result<TrialRecord> {
    let mut settings = *settings;
    if settings.stop_at_noise_level && spec.snr_db.is_some() {
        settings.residual_tol = settings.residual_tol.max(inst.noise_norm());
    }
    let t0 = Instant::now();
    let sol = run_algorithm(spec.algorithm, &inst.g, &inst.y, &settings)?;
    let wall_time = t0.elapsed();
    let e = rre(&sol.delta, &inst.delta)?;
    Ok(TrialRecord { spec: *spec, rre: e, exact: e < EXACT_RRE, wall_time, termination: sol.termination })
}

pub fn run_trial(spec: &TrialSpec, settings: &SolverSettings) -> Result<TrialRecord> {
    solve_instance(spec, &plant_instance(spec)?, settings)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed from the master seed and the trial coordinates.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(master), |h, &k| mix(h ^ mix(k)))
}

/// Aggregated outcome of one (cell, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Kx")]
    pub kx: usize,
    #[serde(rename = "Kd")]
    pub kd: usize,
    #[serde(rename = "Sx")]
    pub sx: usize,
    #[serde(rename = "Sd")]
    pub sd: usize,
    pub coeff_model: CoeffModel,
    pub snr_db: Option<f64>,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub p_exact: f64,
    pub mean_rre: f64,
    pub mean_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
}

impl GridResult {
    pub fn get(&self, sx: usize, sd: usize, snr_db: Option<f64>, alg: Algorithm) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.sx == sx && c.sd == sd && c.snr_db == snr_db && c.algorithm == alg)
    }

    /// Writes the cells as CSV; `timing` controls whether `mean_ms` is
    /// filled in (wall times are not reproducible byte for byte).
    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            let mut row = c.clone();
            if !timing {
                row.mean_ms = None;
            }
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// An exact- or noisy-recovery grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub m: usize,
    pub kx: usize,
    pub kd: usize,
    pub sx_values: Vec<usize>,
    pub sd_values: Vec<usize>,
    /// One grid per entry; `None` is the noiseless case.
    pub snr_db: Vec<Option<f64>>,
    pub coeff_model: CoeffModel,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub threads: usize,
    pub timing: bool,
    pub solver: SolverSettings,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            m: 100,
            kx: 100,
            kd: 100,
            sx_values: vec![5, 10, 15, 20],
            sd_values: vec![5, 10, 15, 20],
            snr_db: vec![None],
            coeff_model: CoeffModel::Uniform,
            trials: 100,
            algorithms: vec![Algorithm::Omp, Algorithm::CombOmp, Algorithm::Bp, Algorithm::CombBp],
            seed: 0,
            threads: 0,
            timing: false,
            solver: SolverSettings::default(),
        }
    }
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

#[derive(Default, Clone, Copy)]
struct Acc {
    n: usize,
    exact: usize,
    rre: f64,
    time: Duration,
}

impl Acc {
    fn add(&mut self, r: &TrialRecord) {
        self.n += 1;
        self.exact += r.exact as usize;
        self.rre += r.rre;
        self.time += r.wall_time;
    }

    fn p_exact(&self) -> f64 {
        self.exact as f64 / self.n.max(1) as f64
    }

    fn mean_rre(&self) -> f64 {
        self.rre / self.n.max(1) as f64
    }

    fn mean_ms(&self) -> f64 {
        self.time.as_secs_f64() * 1e3 / self.n.max(1) as f64
    }
}

/// Runs every (Sx, Sd, SNR) cell for every algorithm. Instances depend on
/// `(seed, Sx, Sd, trial)` only, so the noise realisation of a trial is the
/// same direction at every SNR.
pub fn run_grid(cfg: &GridConfig) -> Result<GridResult> {
    if cfg.sx_values.is_empty() || cfg.sd_values.is_empty() || cfg.snr_db.is_empty() {
        return Err(Error::InvalidArgument("grid ranges must be nonempty".into()));
    }
    if cfg.algorithms.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidArgument("need at least one algorithm and one trial".into()));
    }
    let mut jobs = Vec::new();
    for &snr in &cfg.snr_db {
        for &sx in &cfg.sx_values {
            for &sd in &cfg.sd_values {
                let spec = TrialSpec {
                    m: cfg.m,
                    kx: cfg.kx,
                    kd: cfg.kd,
                    sx,
                    sd,
                    coeff_model: cfg.coeff_model,
                    snr_db: snr,
                    algorithm: cfg.algorithms[0],
                    seed: 0,
                };
                spec.validate()?;
                for t in 0..cfg.trials {
                    let seed = derive_seed(cfg.seed, &[sx as u64, sd as u64, t as u64]);
                    jobs.push(TrialSpec { seed, ..spec });
                }
            }
        }
    }
    let pool = thread_pool(cfg.threads)?;
    let records: Vec<Vec<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|spec| {
                let inst = plant_instance(spec)?;
                cfg.algorithms
                    .iter()
                    .map(|&algorithm| solve_instance(&TrialSpec { algorithm, ..*spec }, &inst, &cfg.solver))
                    .collect()
            })
            .collect::<Result<_>>()
    })?;

    let mut cells = Vec::new();
    for (chunk_idx, chunk) in records.chunks(cfg.trials).enumerate() {
        let spec = jobs[chunk_idx * cfg.trials];
        for (a, &algorithm) in cfg.algorithms.iter().enumerate() {
            let mut acc = Acc::default();
            for trial in chunk {
                acc.add(&trial[a]);
            }
            cells.push(CellResult {
                m: spec.m,
                kx: spec.kx,
                kd: spec.kd,
                sx: spec.sx,
                sd: spec.sd,
                coeff_model: spec.coeff_model,
                snr_db: spec.snr_db,
                algorithm,
                trials: acc.n,
                p_exact: acc.p_exact(),
                mean_rre: acc.mean_rre(),
                mean_ms: Some(acc.mean_ms()),
            });
        }
    }
    Ok(GridResult { cells })
}

/// A phase-transition sweep over measurement count and sparsity factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseConfig {
    pub kg: usize,
    pub kx: usize,
    pub m_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub coeff_model: CoeffModel,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub threads: usize,
    pub timing: bool,
    pub solver: SolverSettings,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            kg: 100,
            kx: 50,
            m_values: (1..=10).map(|i| 10 * i).collect(),
            rho_values: (1..=20).map(|i| 0.05 * i as f64).collect(),
            coeff_model: CoeffModel::Uniform,
            trials: 100,
            algorithms: vec![Algorithm::Omp, Algorithm::CombOmp, Algorithm::Bp, Algorithm::CombBp],
            seed: 0,
            threads: 0,
            timing: false,
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Kx")]
    pub kx: usize,
    #[serde(rename = "Kd")]
    pub kd: usize,
    pub rho: f64,
    #[serde(rename = "Sg")]
    pub sg: usize,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub p_exact: f64,
    pub mean_rre: f64,
    pub mean_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourPoint {
    pub algorithm: Algorithm,
    #[serde(rename = "M")]
    pub m: usize,
    pub level: f64,
    #[serde(rename = "Sg")]
    pub sg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub cells: Vec<PhaseCell>,
    pub contours: Vec<ContourPoint>,
}

pub const CONTOUR_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

impl PhaseResult {
    pub fn contour(&self, alg: Algorithm, m: usize, level: f64) -> Option<f64> {
        self.contours
            .iter()
            .find(|c| c.algorithm == alg && c.m == m && c.level == level)
            .map(|c| c.sg)
    }

    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            let mut row = c.clone();
            if !timing {
                row.mean_ms = None;
            }
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_contours_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.contours {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sparsity at which the success probability of one `M` column falls
/// through `level`, linearly interpolated between neighbouring points.
/// Points must be ordered by increasing `Sg`. A column that never drops
/// below the level reports its largest `Sg`; one that starts below it
/// reports its first.
pub fn contour_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let Some(first_below) = points.iter().position(|&(_, p)| p < level) else {
        return points.last().map(|&(s, _)| s);
    };
    if first_below == 0 {
        return Some(points[0].0);
    }
    let (s0, p0) = points[first_below - 1];
    let (s1, p1) = points[first_below];
    Some(s0 + (p0 - level) / (p0 - p1) * (s1 - s0))
}

pub fn run_phase_transition(cfg: &PhaseConfig) -> Result<PhaseResult> {
    if cfg.kx > cfg.kg || cfg.m_values.is_empty() || cfg.rho_values.is_empty() {
        return Err(Error::InvalidArgument("invalid phase-transition ranges".into()));
    }
    if cfg.algorithms.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidArgument("need at least one algorithm and one trial".into()));
    }
    if cfg.rho_values.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidArgument("rho must lie in (0, 1]".into()));
    }
    let kd = cfg.kg - cfg.kx;
    let mut jobs = Vec::new();
    for &m in &cfg.m_values {
        for (ri, &rho) in cfg.rho_values.iter().enumerate() {
            let sg = ((rho * m as f64).round() as usize).min(cfg.kg);
            for t in 0..cfg.trials {
                jobs.push((m, ri, rho, sg, t));
            }
        }
    }
    let pool = thread_pool(cfg.threads)?;
    let records: Vec<Vec<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, ri, _, sg, t)| {
                let seed = derive_seed(cfg.seed, &[m as u64, ri as u64, t as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tau: f64 = rng.random();
                // keep both blocks within their sizes
                let sx = ((tau * sg as f64).floor() as usize).clamp(sg.saturating_sub(kd), cfg.kx.min(sg));
                let spec = TrialSpec {
                    m,
                    kx: cfg.kx,
                    kd,
                    sx,
                    sd: sg - sx,
                    coeff_model: cfg.coeff_model,
                    snr_db: None,
                    algorithm: cfg.algorithms[0],
                    seed: rng.random(),
                };
                let inst = plant_instance(&spec)?;
                cfg.algorithms
                    .iter()
                    .map(|&algorithm| solve_instance(&TrialSpec { algorithm, ..spec }, &inst, &cfg.solver))
                    .collect()
            })
            .collect::<Result<_>>()
    })?;

    let mut cells = Vec::new();
    for (chunk_idx, chunk) in records.chunks(cfg.trials).enumerate() {
        let (m, _, rho, sg, _) = jobs[chunk_idx * cfg.trials];
        for (a, &algorithm) in cfg.algorithms.iter().enumerate() {
            let mut acc = Acc::default();
            for trial in chunk {
                acc.add(&trial[a]);
            }
            cells.push(PhaseCell {
                m,
                kx: cfg.kx,
                kd,
                rho,
                sg,
                algorithm,
                trials: acc.n,
                p_exact: acc.p_exact(),
                mean_rre: acc.mean_rre(),
                mean_ms: Some(acc.mean_ms()),
            });
        }
    }

    let mut contours = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &m in &cfg.m_values {
            let mut pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.algorithm == algorithm && c.m == m)
                .map(|c| (c.sg as f64, c.p_exact))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for level in CONTOUR_LEVELS {
                if let Some(sg) = contour_crossing(&pts, level) {
                    contours.push(ContourPoint { algorithm, m, level, sg });
                }
            }
        }
    }
    Ok(PhaseResult { cells, contours })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> TrialSpec {
        TrialSpec {
            m: 20,
            kx: 30,
            kd: 10,
            sx: 2,
            sd: 2,
            coeff_model: CoeffModel::Uniform,
            snr_db: None,
            algorithm: Algorithm::CombOmp,
            seed: 42,
        }
    }

    #[test]
    fn rre_examples() {
        assert_eq!(rre(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rre(&[0.0, 0.0], &[3.0, -4.0]).unwrap(), 1.0);
        assert_eq!(rre(&[1.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(rre(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn signs_model_fixes_nonneg_coefficients() {
        let s = TrialSpec { coeff_model: CoeffModel::Signs, ..spec() };
        let inst = plant_instance(&s).unwrap();
        let x: Vec<f64> = inst.delta[..30].iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(x, vec![1.0, 1.0]);
        assert!(inst.delta[30..].iter().all(|&v| v == 0.0 || v.abs() == 1.0));
    }

    #[test]
    fn noiseless_signal_is_exactly_g_delta() {
        let inst = plant_instance(&spec()).unwrap();
        assert_eq!(inst.y, inst.g.dictionary().matrix().mul_vec(&inst.delta));
    }

    #[test]
    fn zero_db_noise_matches_signal_energy() {
        let inst = plant_instance(&TrialSpec { snr_db: Some(0.0), ..spec() }).unwrap();
        let n: Vec<f64> = inst.y.iter().zip(&inst.clean).map(|(a, b)| a - b).collect();
        let ratio = norm2(&n) / norm2(&inst.clean);
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_easy_cell_is_exact() {
        let cfg = GridConfig {
            m: 30,
            kx: 30,
            kd: 30,
            sx_values: vec![1],
            sd_values: vec![0],
            trials: 1,
            algorithms: vec![Algorithm::CombOmp, Algorithm::CombBp],
            ..GridConfig::default()
        };
        let g = run_grid(&cfg).unwrap();
        assert!(g.cells.iter().all(|c| c.p_exact == 1.0));
    }

    #[test]
    fn grid_is_independent_of_thread_count() {
        let base = GridConfig {
            m: 20,
            kx: 20,
            kd: 20,
            sx_values: vec![2, 4],
            sd_values: vec![2],
            trials: 8,
            seed: 9,
            ..GridConfig::default()
        };
        let mut a = Vec::new();
        run_grid(&GridConfig { threads: 1, ..base.clone() }).unwrap().write_csv(&mut a, false).unwrap();
        let mut b = Vec::new();
        run_grid(&GridConfig { threads: 4, ..base }).unwrap().write_csv(&mut b, false).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("M,Kx,Kd,Sx,Sd,coeff_model,snr_db,algorithm,trials,p_exact,mean_rre,mean_ms\n"));
    }

    #[test]
    fn contour_interpolation() {
        let pts = [(1.0, 1.0), (2.0, 0.8), (3.0, 0.2), (4.0, 0.0)];
        assert!((contour_crossing(&pts, 0.5).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(contour_crossing(&[(1.0, 1.0), (2.0, 0.9)], 0.5), Some(2.0));
        assert_eq!(contour_crossing(&[(3.0, 0.1), (4.0, 0.0)], 0.5), Some(3.0));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("COMB_OMP".parse::<Algorithm>().unwrap(), Algorithm::CombOmp);
        assert!("lasso".parse::<Algorithm>().is_err());
    }

    proptest! {
        #[test]
        fn derived_seeds_differ_by_key(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
            prop_assume!(a != b);
            prop_assert_ne!(derive_seed(master, &[a]), derive_seed(master, &[b]));
        }

        #[test]
        fn snr_scaling_is_exact(snr in -10.0f64..40.0, seed in any::<u64>()) {
            let inst = plant_instance(&TrialSpec { snr_db: Some(snr), seed, ..spec() }).unwrap();
            let n: Vec<f64> = inst.y.iter().zip(&inst.clean).map(|(a, b)| a - b).collect();
            let got = 20.0 * (norm2(&inst.clean) / norm2(&n)).log10();
            prop_assert!((got - snr).abs() < 1e-9);
        }
    }
}
