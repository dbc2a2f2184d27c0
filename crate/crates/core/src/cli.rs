//! Command-line front end.
//!
//! Every subcommand resolves a JSON-serializable config (defaults, then the
//! `--config` file, then flags), writes it to `<out-dir>/<command>.config.json`
//! when an output directory is given, and prints machine-readable results on
//! standard output. Progress goes to standard error.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{
    run_algorithm, run_grid, run_phase_transition, Algorithm, CoeffModel, GridConfig, PhaseConfig,
    SolverSettings,
};
use crate::bounds::{threshold_table, ThresholdReport};
use crate::dictgen::{read_matrix, CoherenceProfile, CombinedDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::greedy::CombOmpOptions;
use crate::imaging::{psnr, recover_image, saturate, saturation_dictionary, GrayImage, ImageReport};
use crate::linalg::DenseMatrix;
use crate::oracle::{lemma3_feasibility, ml0_search, nn_singleton_check};

#[derive(Debug, Parser)]
#[command(name = "sparsecomb", version, about = "Non-negative and combined sparse recovery")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files and the resolved config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON config; flags take precedence over its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherence profile of a combined dictionary.
    Coherence(CoherenceArgs),
    /// Deterministic sparsity thresholds.
    Thresholds(ThresholdArgs),
    /// Recover one signal.
    Recover(RecoverArgs),
    /// Noiseless recovery grid over (Sx, Sd).
    ExactRecovery(GridArgs),
    /// Recovery grid at several SNRs.
    NoisyRecovery(GridArgs),
    /// Recovery probability over (M, rho).
    PhaseTransition(PhaseArgs),
    /// Saturate an image and restore it.
    ImageRecover(ImageArgs),
    /// Brute-force checks on small instances, reported as JSON.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct CoherenceArgs {
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Number of leading non-negative atoms.
    #[arg(long)]
    split: Option<usize>,
    /// Use the 8x8 saturation dictionary [-I | DCT].
    #[arg(long)]
    image_dictionary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
enum TableFormat {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_g: Option<f64>,
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    split: Option<usize>,
    /// Search cap for the integer thresholds.
    #[arg(long)]
    s_max: Option<usize>,
    /// Known general support size for the reduced threshold.
    #[arg(long)]
    sd: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<TableFormat>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    signal: Option<PathBuf>,
    #[arg(long)]
    split: Option<usize>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    constrained_update: bool,
    #[arg(long)]
    debias: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    kx: Option<usize>,
    #[arg(long)]
    kd: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sx: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sd: Option<Vec<usize>>,
    /// SNR values in dB (noisy-recovery only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long, value_parser = parse_coeff_model)]
    coeff_model: Option<CoeffModel>,
    /// Fill in the mean_ms column (makes output timing dependent).
    #[arg(long)]
    timing: bool,
    /// Stop noisy solves at the fixed residual tolerance instead of the
    /// realized noise norm.
    #[arg(long)]
    fixed_eps: bool,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[arg(long)]
    kg: Option<usize>,
    #[arg(long)]
    kx: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long, value_parser = parse_coeff_model)]
    coeff_model: Option<CoeffModel>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct ImageArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output PGM (default: <out-dir>/recovered.pgm).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    saturation: Option<f64>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
enum OracleMode {
    #[default]
    Ml0,
    Singleton,
    RowSpan,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    signal: Option<PathBuf>,
    #[arg(long)]
    split: Option<usize>,
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<OracleMode>,
    /// Matrix whose columns the row-span certificate must annihilate.
    #[arg(long)]
    orth: Option<PathBuf>,
}

fn parse_coeff_model(s: &str) -> std::result::Result<CoeffModel, String> {
    match s.to_ascii_lowercase().as_str() {
        "uniform" => Ok(CoeffModel::Uniform),
        "signs" => Ok(CoeffModel::Signs),
        _ => Err(format!("unknown coefficient model '{s}' (uniform, signs)")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
struct CoherenceConfig {
    dict: Option<PathBuf>,
    split: usize,
    image_dictionary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct ThresholdConfig {
    mu_x: Option<f64>,
    mu_d: Option<f64>,
    mu_g: Option<f64>,
    dict: Option<PathBuf>,
    split: usize,
    s_max: usize,
    sd: usize,
    format: TableFormat,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { mu_x: None, mu_d: None, mu_g: None, dict: None, split: 0, s_max: 1000, sd: 1, format: TableFormat::Text }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RecoverConfig {
    dict: Option<PathBuf>,
    signal: Option<PathBuf>,
    split: usize,
    algorithm: Algorithm,
    solver: SolverSettings,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self { dict: None, signal: None, split: 0, algorithm: Algorithm::CombOmp, solver: SolverSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct ImageConfig {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    saturation: f64,
    algorithm: Algorithm,
    eps: f64,
    seed: u64,
    threads: usize,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self { input: None, output: None, saturation: 0.1, algorithm: Algorithm::CombBp, eps: 1e-6, seed: 0, threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct OracleConfig {
    dict: Option<PathBuf>,
    signal: Option<PathBuf>,
    orth: Option<PathBuf>,
    split: usize,
    s_max: usize,
    tol: f64,
    mode: OracleMode,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { dict: None, signal: None, orth: None, split: 0, s_max: 3, tol: 1e-8, mode: OracleMode::Ml0 }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            return 1;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(C::default()),
    }
}

fn echo_config<C: Serialize>(cli: &Cli, name: &str, cfg: &C) -> Result<()> {
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(cfg)?;
        text.push('\n');
        fs::write(dir.join(format!("{name}.config.json")), text)?;
    }
    Ok(())
}

/// Writes `bytes` to `out` and, with an output directory, to `dir/file`.
fn emit(cli: &Cli, out: &mut dyn Write, file: &str, bytes: &[u8]) -> Result<()> {
    out.write_all(bytes)?;
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), bytes)?;
    }
    Ok(())
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    names.iter().map(|s| s.parse()).collect()
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Error::InvalidArgument(format!("missing {flag}")))
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(Error::Dimension(format!(
            "signal file holds a {}x{} matrix, expected a vector",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.into_vec())
}

fn load_combined(path: &Path, split: usize) -> Result<CombinedDictionary> {
    CombinedDictionary::new(Dictionary::new(read_matrix(path)?)?, split)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Coherence(a) => {
            let mut cfg: CoherenceConfig = load_config(cfg_path)?;
            cfg.dict = a.dict.clone().or(cfg.dict);
            cfg.split = a.split.unwrap_or(cfg.split);
            cfg.image_dictionary |= a.image_dictionary;
            echo_config(cli, "coherence", &cfg)?;
            let g = if cfg.image_dictionary {
                saturation_dictionary()?
            } else {
                load_combined(require(&cfg.dict, "--dict")?, cfg.split)?
            };
            let p = g.profile();
            let text = format!(
                "mu_x,mu_d,mu_g,mu_m,sigma_x\n{},{},{},{},{}\n",
                p.mu_x, p.mu_d, p.mu_g, p.mu_m, p.sigma_x
            );
            emit(cli, out, "coherence.csv", text.as_bytes())
        }
        Command::Thresholds(a) => {
            let mut cfg: ThresholdConfig = load_config(cfg_path)?;
            cfg.mu_x = a.mu_x.or(cfg.mu_x);
            cfg.mu_d = a.mu_d.or(cfg.mu_d);
            cfg.mu_g = a.mu_g.or(cfg.mu_g);
            cfg.dict = a.dict.clone().or(cfg.dict);
            cfg.split = a.split.unwrap_or(cfg.split);
            cfg.s_max = a.s_max.unwrap_or(cfg.s_max);
            cfg.sd = a.sd.unwrap_or(cfg.sd);
            cfg.format = a.format.unwrap_or(cfg.format);
            echo_config(cli, "thresholds", &cfg)?;
            let prof = match (cfg.mu_x, cfg.mu_d, cfg.mu_g, &cfg.dict) {
                (Some(x), Some(d), Some(g), _) => {
                    for (n, v) in [("mu-x", x), ("mu-d", d), ("mu-g", g)] {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::InvalidArgument(format!("--{n} must lie in [0, 1]")));
                        }
                    }
                    CoherenceProfile::normalized(x, d, g)
                }
                (_, _, _, Some(p)) => load_combined(p, cfg.split)?.profile(),
                _ => {
                    return Err(Error::InvalidArgument(
                        "give --mu-x, --mu-d and --mu-g, or --dict".into(),
                    ))
                }
            };
            let rows = threshold_table(&prof, cfg.s_max, cfg.sd);
            let text = match cfg.format {
                TableFormat::Text => threshold_text(&rows),
                TableFormat::Csv => threshold_csv(&rows)?,
            };
            let file = if cfg.format == TableFormat::Csv { "thresholds.csv" } else { "thresholds.txt" };
            emit(cli, out, file, text.as_bytes())
        }
        Command::Recover(a) => {
            let mut cfg: RecoverConfig = load_config(cfg_path)?;
            cfg.dict = a.dict.clone().or(cfg.dict);
            cfg.signal = a.signal.clone().or(cfg.signal);
            cfg.split = a.split.unwrap_or(cfg.split);
            if let Some(s) = &a.algorithm {
                cfg.algorithm = s.parse()?;
            }
            cfg.solver.residual_tol = a.eps.unwrap_or(cfg.solver.residual_tol);
            cfg.solver.max_iters = a.max_iters.or(cfg.solver.max_iters);
            cfg.solver.omp = CombOmpOptions {
                constrained_update: a.constrained_update || cfg.solver.omp.constrained_update,
                debias: a.debias || cfg.solver.omp.debias,
            };
            echo_config(cli, "recover", &cfg)?;
            let g = load_combined(require(&cfg.dict, "--dict")?, cfg.split)?;
            let y = read_vector(require(&cfg.signal, "--signal")?)?;
            let sol = run_algorithm(cfg.algorithm, &g, &y, &cfg.solver)?;
            let _ = writeln!(
                err,
                "{}: {} atoms, residual {:e}, {:?}",
                cfg.algorithm,
                sol.support().len(),
                sol.residual_norm,
                sol.termination
            );
            let norms = g.dictionary().column_norms();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["index", "value", "block"])?;
            for i in sol.support() {
                let block = if i < g.kx() { "x" } else { "d" };
                // coefficients of the columns as given, not the normalized atoms
                w.write_record([i.to_string(), (sol.delta[i] / norms[i]).to_string(), block.to_string()])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            emit(cli, out, "solution.csv", &bytes)
        }
        Command::ExactRecovery(a) | Command::NoisyRecovery(a) => {
            let noisy = matches!(cli.command, Command::NoisyRecovery(_));
            let mut cfg: GridConfig = if cfg_path.is_some() {
                load_config(cfg_path)?
            } else {
                let mut c = GridConfig::default();
                if noisy {
                    c.snr_db = vec![Some(0.0), Some(5.0), Some(15.0), Some(25.0)];
                }
                c
            };
            cfg.m = a.m.unwrap_or(cfg.m);
            cfg.kx = a.kx.unwrap_or(cfg.kx);
            cfg.kd = a.kd.unwrap_or(cfg.kd);
            cfg.sx_values = a.sx.clone().unwrap_or(cfg.sx_values);
            cfg.sd_values = a.sd.clone().unwrap_or(cfg.sd_values);
            if let Some(s) = &a.snr {
                if !noisy {
                    return Err(Error::InvalidArgument("--snr applies to noisy-recovery".into()));
                }
                cfg.snr_db = s.iter().map(|&v| Some(v)).collect();
            }
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            if let Some(names) = &a.algorithms {
                cfg.algorithms = parse_algorithms(names)?;
            }
            cfg.coeff_model = a.coeff_model.unwrap_or(cfg.coeff_model);
            cfg.timing |= a.timing;
            if a.fixed_eps {
                cfg.solver.stop_at_noise_level = false;
            }
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.threads = cli.threads.unwrap_or(cfg.threads);
            let name = if noisy { "noisy_recovery" } else { "exact_recovery" };
            echo_config(cli, name, &cfg)?;
            let _ = writeln!(
                err,
                "{name}: {} cells x {} trials x {} algorithms",
                cfg.sx_values.len() * cfg.sd_values.len() * cfg.snr_db.len(),
                cfg.trials,
                cfg.algorithms.len()
            );
            let grid = run_grid(&cfg)?;
            let mut bytes = Vec::new();
            grid.write_csv(&mut bytes, cfg.timing)?;
            emit(cli, out, &format!("{name}.csv"), &bytes)
        }
        Command::PhaseTransition(a) => {
            let mut cfg: PhaseConfig = load_config(cfg_path)?;
            cfg.kg = a.kg.unwrap_or(cfg.kg);
            cfg.kx = a.kx.unwrap_or(cfg.kx);
            cfg.m_values = a.m.clone().unwrap_or(cfg.m_values);
            cfg.rho_values = a.rho.clone().unwrap_or(cfg.rho_values);
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            if let Some(names) = &a.algorithms {
                cfg.algorithms = parse_algorithms(names)?;
            }
            cfg.coeff_model = a.coeff_model.unwrap_or(cfg.coeff_model);
            cfg.timing |= a.timing;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.threads = cli.threads.unwrap_or(cfg.threads);
            echo_config(cli, "phase_transition", &cfg)?;
            let _ = writeln!(
                err,
                "phase_transition: {} x {} cells x {} trials",
                cfg.m_values.len(),
                cfg.rho_values.len(),
                cfg.trials
            );
            let res = run_phase_transition(&cfg)?;
            let mut bytes = Vec::new();
            res.write_csv(&mut bytes, cfg.timing)?;
            emit(cli, out, "phase_transition.csv", &bytes)?;
            if let Some(dir) = &cli.out_dir {
                let mut c = Vec::new();
                res.write_contours_csv(&mut c)?;
                fs::write(dir.join("phase_contours.csv"), c)?;
            }
            Ok(())
        }
        Command::ImageRecover(a) => {
            let mut cfg: ImageConfig = load_config(cfg_path)?;
            cfg.input = a.input.clone().or(cfg.input);
            cfg.output = a.output.clone().or(cfg.output);
            cfg.saturation = a.saturation.unwrap_or(cfg.saturation);
            if let Some(s) = &a.algorithm {
                cfg.algorithm = s.parse()?;
            }
            cfg.eps = a.eps.unwrap_or(cfg.eps);
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.threads = cli.threads.unwrap_or(cfg.threads);
            echo_config(cli, "image_recover", &cfg)?;
            let clean = GrayImage::read_pgm(require(&cfg.input, "--input")?)?;
            let (corrupted, mask) = saturate(&clean, cfg.saturation, cfg.seed)?;
            let pool = crate::bench::thread_pool(cfg.threads)?;
            let rec = pool.install(|| recover_image(&corrupted, cfg.algorithm, cfg.eps))?;
            let report = ImageReport {
                algorithm: cfg.algorithm,
                saturation: cfg.saturation,
                seed: cfg.seed,
                saturated_pixels: mask.iter().filter(|&&m| m).count(),
                psnr_corrupted: psnr(&clean, &corrupted)?,
                psnr_recovered: psnr(&clean, &rec.image)?,
                stalled_patches: rec.stalled_patches,
            };
            let output = cfg.output.clone().or_else(|| cli.out_dir.as_ref().map(|d| d.join("recovered.pgm")));
            if let Some(p) = output {
                rec.image.write_pgm(p)?;
            }
            if let Some(dir) = &cli.out_dir {
                corrupted.write_pgm(dir.join("corrupted.pgm"))?;
            }
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            emit(cli, out, "image_report.json", text.as_bytes())
        }
        Command::OracleCheck(a) => {
            let mut cfg: OracleConfig = load_config(cfg_path)?;
            cfg.dict = a.dict.clone().or(cfg.dict);
            cfg.signal = a.signal.clone().or(cfg.signal);
            cfg.orth = a.orth.clone().or(cfg.orth);
            cfg.split = a.split.unwrap_or(cfg.split);
            cfg.s_max = a.s_max.unwrap_or(cfg.s_max);
            cfg.tol = a.tol.unwrap_or(cfg.tol);
            cfg.mode = a.mode.unwrap_or(cfg.mode);
            echo_config(cli, "oracle_check", &cfg)?;
            let dict_path = require(&cfg.dict, "--dict")?;
            let json = match cfg.mode {
                OracleMode::Ml0 => {
                    let g = load_combined(dict_path, cfg.split)?;
                    let y = read_vector(require(&cfg.signal, "--signal")?)?;
                    let r = ml0_search(&g, &y, cfg.s_max, cfg.tol)?;
                    serde_json::json!({
                        "mode": "ml0",
                        "size": r.size,
                        "unique": r.unique,
                        "support": r.solution.support(),
                        "residual_norm": r.solution.residual_norm,
                        "delta": r.solution.delta,
                    })
                }
                OracleMode::Singleton => {
                    let x = Dictionary::new(read_matrix(dict_path)?)?;
                    let y = read_vector(require(&cfg.signal, "--signal")?)?;
                    let r = nn_singleton_check(&x, &y, cfg.s_max, cfg.tol)?;
                    serde_json::json!({
                        "mode": "singleton",
                        "singleton": r.singleton,
                        "solution": r.solution,
                        "witness": r.witness,
                    })
                }
                OracleMode::RowSpan => {
                    let x: DenseMatrix = read_matrix(dict_path)?;
                    let orth = cfg.orth.as_ref().map(read_matrix).transpose()?;
                    let c = lemma3_feasibility(&x, orth.as_ref(), cfg.tol)?;
                    serde_json::json!({
                        "mode": "row-span",
                        "feasible": c.feasible,
                        "margin": c.margin,
                        "h": c.h,
                    })
                }
            };
            let mut text = serde_json::to_string_pretty(&json)?;
            text.push('\n');
            emit(cli, out, "oracle_check.json", text.as_bytes())
        }
    }
}

fn max_sg_text(r: &ThresholdReport) -> String {
    r.max_sg.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

fn threshold_text(rows: &[ThresholdReport]) -> String {
    let mut s = format!("{:<16}{:>8}{:>14}\n", "algorithm", "max_sg", "raw_bound");
    for r in rows {
        s.push_str(&format!("{:<16}{:>8}{:>14.6}\n", r.algorithm.to_string(), max_sg_text(r), r.raw_bound));
    }
    let p = rows.first().map(|r| r.inputs);
    if let Some(p) = rows.iter().find(|r| r.inputs.mu_g > 0.0).map(|r| r.inputs).or(p) {
        s.push_str(&format!(
            "mu_x={} mu_d={} mu_g={} mu_m={}\n",
            p.mu_x, p.mu_d, p.mu_g, p.mu_m
        ));
    }
    s
}

fn threshold_csv(rows: &[ThresholdReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "max_sg", "raw_bound", "mu_x", "mu_d", "mu_g", "mu_m", "sd"])?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            max_sg_text(r),
            r.raw_bound.to_string(),
            r.inputs.mu_x.to_string(),
            r.inputs.mu_d.to_string(),
            r.inputs.mu_g.to_string(),
            r.inputs.mu_m.to_string(),
            r.sd.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
