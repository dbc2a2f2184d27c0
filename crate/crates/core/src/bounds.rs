//! Deterministic sparsity thresholds and coherence-based recovery predicates.
//!
//! Every threshold uses strict-inequality semantics: `max_sg` is the largest
//! integer strictly below `raw_bound`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dictgen::CoherenceProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ThresholdKind {
    /// Singleton non-negative solution set.
    NnUnique,
    /// Full column rank of `[X1 D1]`.
    FullRankPair,
    /// NN-BP on the system reduced by a known general support.
    ReducedNn,
    CombBp,
    CombOmp,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdKind::NnUnique => "NN-UNIQUE",
            ThresholdKind::FullRankPair => "FULL-RANK-PAIR",
            ThresholdKind::ReducedNn => "REDUCED-NN",
            ThresholdKind::CombBp => "COMB-BP",
            ThresholdKind::CombOmp => "COMB-OMP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub algorithm: ThresholdKind,
    /// Largest guaranteed sparsity; `None` when the bound is unbounded.
    pub max_sg: Option<usize>,
    pub raw_bound: f64,
    pub inputs: CoherenceProfile,
    pub sd: Option<usize>,
}

impl ThresholdReport {
    fn from_raw(algorithm: ThresholdKind, raw_bound: f64, inputs: CoherenceProfile) -> Self {
        Self {
            algorithm,
            max_sg: strict_floor(raw_bound),
            raw_bound,
            inputs,
            sd: None,
        }
    }

    /// `max_sg` with the unbounded case mapped to `usize::MAX`.
    pub fn max_sg_or_max(&self) -> usize {
        self.max_sg.unwrap_or(usize::MAX)
    }
}

/// Largest integer strictly below `raw`.
fn strict_floor(raw: f64) -> Option<usize> {
    if raw.is_infinite() {
        return None;
    }
    if raw <= 0.0 {
        return Some(0);
    }
    Some((raw.ceil() - 1.0).max(0.0) as usize)
}

fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `0.5 (1 + 1/mu)`, or infinity for `mu == 0`.
fn half_one_plus_inverse(mu: f64) -> f64 {
    if mu == 0.0 {
        f64::INFINITY
    } else {
        0.5 * (1.0 + 1.0 / mu)
    }
}

/// Sparsity below which the non-negative solution set is a singleton
/// (dictionary in M+): `Sx < 0.5 (1 + 1/mu_x)`.
pub fn threshold_nonneg(mu_x: f64) -> Result<ThresholdReport> {
    check_unit("mu_x", mu_x)?;
    Ok(ThresholdReport::from_raw(
        ThresholdKind::NnUnique,
        half_one_plus_inverse(mu_x),
        CoherenceProfile::normalized(mu_x, 0.0, 0.0),
    ))
}

/// `Sx Sd < [1 - mu_x (Sx - 1)]^+ [1 - mu_d (Sd - 1)]^+ / mu_g^2`.
pub fn full_rank_condition(sx: usize, sd: usize, prof: &CoherenceProfile) -> bool {
    let (sx, sd) = (sx as f64, sd as f64);
    let num = positive_part(1.0 - prof.mu_x * (sx - 1.0)) * positive_part(1.0 - prof.mu_d * (sd - 1.0));
    let lhs = sx * sd;
    if prof.mu_g == 0.0 {
        return num > 0.0;
    }
    lhs < num / (prof.mu_g * prof.mu_g)
}

/// Reduced-system quantity for a known general support of size `sd`:
/// `0.5 [1 - mu_d (Sd - 1)]^+ (1 + mu_x) / (mu_x [1 - mu_d (Sd - 1)]^+ + Sd mu_g^2)`.
///
/// It is stated as a bound on the coherence of `P_D X`, but it reduces to
/// `0.5 (1 + 1/mu_x)` for `mu_g = 0` and behaves as a bound on `Sx`: it
/// never exceeds `0.5 (1 + 1/mu)` with `mu` the measured coherence of
/// `P_D X`. [`threshold_reduced_nn`] uses it that way.
pub fn coherence_bound_reduced(sd: usize, prof: &CoherenceProfile) -> Result<f64> {
    let sdf = sd as f64;
    if prof.mu_d > 0.0 && sdf >= 1.0 + 1.0 / prof.mu_d {
        return Err(Error::InvalidArgument(format!(
            "Sd = {sd} violates Sd < 1 + 1/mu_d = {}",
            1.0 + 1.0 / prof.mu_d
        )));
    }
    let b = positive_part(1.0 - prof.mu_d * (sdf - 1.0));
    let den = prof.mu_x * b + sdf * prof.mu_g * prof.mu_g;
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * b * (1.0 + prof.mu_x) / den)
}

/// Guaranteed `Sx` for NN-BP on the system reduced by a known general
/// support of size `sd`.
pub fn threshold_reduced_nn(sd: usize, prof: &CoherenceProfile) -> Result<ThresholdReport> {
    let raw = coherence_bound_reduced(sd, prof)?;
    let mut r = ThresholdReport::from_raw(ThresholdKind::ReducedNn, raw, *prof);
    r.sd = Some(sd);
    Ok(r)
}

/// `(1 + mu_d)(2 Sx mu_d + Sd (mu_g + mu_d)) + 2 Sx Sd (mu_g^2 - mu_d^2) < (1 + mu_d)^2`.
pub fn comb_bp_condition(sx: usize, sd: usize, prof: &CoherenceProfile) -> bool {
    comb_bp_lhs(sx as f64, sd as f64, prof) < (1.0 + prof.mu_d).powi(2)
}

fn comb_bp_lhs(sx: f64, sd: f64, p: &CoherenceProfile) -> f64 {
    (1.0 + p.mu_d) * (2.0 * sx * p.mu_d + sd * (p.mu_g + p.mu_d))
        + 2.0 * sx * sd * (p.mu_g * p.mu_g - p.mu_d * p.mu_d)
}

/// Largest `S <= s_max` such that [`comb_bp_condition`] holds for every
/// split `Sx + Sd = S` (and for every smaller total).
pub fn threshold_comb_bp(prof: &CoherenceProfile, s_max: usize) -> ThresholdReport {
    let mut best = 0;
    for s in 1..=s_max {
        if (0..=s).all(|sx| comb_bp_condition(sx, s - sx, prof)) {
            best = s;
        } else {
            break;
        }
    }
    ThresholdReport {
        algorithm: ThresholdKind::CombBp,
        max_sg: Some(best),
        raw_bound: comb_bp_raw_bound(prof),
        inputs: *prof,
        sd: None,
    }
}

/// Real-valued total sparsity at which the worst real split first meets
/// the COMB-BP condition with equality.
fn comb_bp_raw_bound(prof: &CoherenceProfile) -> f64 {
    let rhs = (1.0 + prof.mu_d).powi(2);
    let worst = |s: f64| -> f64 {
        // Quadratic in sx along sx + sd = s; check both ends and the vertex.
        let f = |sx: f64| comb_bp_lhs(sx, s - sx, prof);
        let mut m = f(0.0).max(f(s));
        let quad = -2.0 * (prof.mu_g * prof.mu_g - prof.mu_d * prof.mu_d);
        if quad < 0.0 {
            let lin = (1.0 + prof.mu_d) * (2.0 * prof.mu_d - prof.mu_g - prof.mu_d)
                + 2.0 * s * (prof.mu_g * prof.mu_g - prof.mu_d * prof.mu_d);
            let v = -lin / (2.0 * quad);
            if v > 0.0 && v < s {
                m = m.max(f(v));
            }
        }
        m
    };
    let mut hi = 1.0;
    while worst(hi) < rhs {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst(mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `Sg < 0.5 (1 + 1/mu_m)`.
pub fn threshold_comb_omp(prof: &CoherenceProfile) -> ThresholdReport {
    ThresholdReport::from_raw(ThresholdKind::CombOmp, half_one_plus_inverse(prof.mu_m), *prof)
}

/// First-selection condition `(Sx - 1) mu_d + Sd mu_g < 1/2`.
pub fn comb_omp_first_step_condition(sx: usize, sd: usize, prof: &CoherenceProfile) -> bool {
    assert!(sx >= 1, "first-step condition needs Sx >= 1");
    (sx as f64 - 1.0) * prof.mu_d + sd as f64 * prof.mu_g < 0.5
}

/// `(Sx mu_d + Sd mu_g) / (1 - (Sx mu_d + Sd mu_g - mu_d)) < 1`, false when
/// the denominator is not positive.
pub fn comb_omp_full_condition(sx: usize, sd: usize, prof: &CoherenceProfile) -> bool {
    let num = sx as f64 * prof.mu_d + sd as f64 * prof.mu_g;
    let den = 1.0 - (num - prof.mu_d);
    if den <= 0.0 {
        return false;
    }
    num / den < 1.0
}

/// Largest `S <= s_max` with [`full_rank_condition`] true for every split.
pub fn threshold_full_rank(prof: &CoherenceProfile, s_max: usize) -> ThresholdReport {
    let mut best = 0;
    for s in 1..=s_max {
        if (0..=s).all(|sx| full_rank_condition(sx, s - sx, prof)) {
            best = s;
        } else {
            break;
        }
    }
    ThresholdReport {
        algorithm: ThresholdKind::FullRankPair,
        max_sg: Some(best),
        raw_bound: best as f64 + 1.0,
        inputs: *prof,
        sd: None,
    }
}

/// All thresholds for one coherence profile, in table order.
pub fn threshold_table(prof: &CoherenceProfile, s_max: usize, sd: usize) -> Vec<ThresholdReport> {
    let mut out = Vec::new();
    if let Ok(r) = threshold_nonneg(prof.mu_x) {
        out.push(r);
    }
    out.push(threshold_full_rank(prof, s_max));
    if let Ok(r) = threshold_reduced_nn(sd, prof) {
        out.push(r);
    }
    out.push(threshold_comb_bp(prof, s_max));
    out.push(threshold_comb_omp(prof));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prof(mu_x: f64, mu_d: f64, mu_g: f64) -> CoherenceProfile {
        CoherenceProfile::normalized(mu_x, mu_d, mu_g)
    }

    #[test]
    fn nonneg_threshold_examples() {
        let r = threshold_nonneg(0.01).unwrap();
        assert!((r.raw_bound - 50.5).abs() < 1e-12);
        assert_eq!(r.max_sg, Some(50));
        let r = threshold_nonneg(1.0).unwrap();
        assert_eq!((r.raw_bound, r.max_sg), (1.0, Some(0)));
        let r = threshold_nonneg(1.0 / 3.0).unwrap();
        assert!((r.raw_bound - 2.0).abs() < 1e-12);
        assert_eq!(r.max_sg, Some(1));
        let r = threshold_nonneg(0.0).unwrap();
        assert!(r.raw_bound.is_infinite() && r.max_sg.is_none());
        assert!(threshold_nonneg(1.5).is_err());
    }

    #[test]
    fn full_rank_examples() {
        assert!(full_rank_condition(1, 1, &prof(0.0, 0.0, 0.5)));
        assert!(full_rank_condition(0, 7, &prof(0.3, 0.1, 0.9)));
        assert!(full_rank_condition(4, 0, &prof(0.2, 0.1, 0.9)));
        assert!(full_rank_condition(5, 5, &prof(0.05, 0.05, 0.05)));
        // 289 against (0.2 * 0.2) / 0.0025 = 16
        assert!(!full_rank_condition(17, 17, &prof(0.05, 0.05, 0.05)));
    }

    #[test]
    fn reduced_bound_examples() {
        let p = prof(0.2, 0.1, 0.0);
        let b = coherence_bound_reduced(2, &p).unwrap();
        assert!((b - 0.5 * (1.0 / 0.2 + 1.0)).abs() < 1e-12);
        let b = coherence_bound_reduced(1, &prof(0.01, 0.01, 0.01)).unwrap();
        assert!((b - 0.5 * 1.01 / 0.0101).abs() < 1e-9);
        assert!((b - 50.0).abs() < 1e-9);
        assert!(coherence_bound_reduced(11, &prof(0.1, 0.1, 0.1)).is_err());
    }

    #[test]
    fn comb_bp_condition_examples() {
        assert!(comb_bp_condition(0, 0, &prof(0.3, 0.4, 0.5)));
        let img = prof(0.0, 0.0, 0.2405);
        assert!(!comb_bp_condition(1, 3, &img));
        assert!(comb_bp_condition(2, 1, &img));
    }

    #[test]
    fn image_setup_thresholds() {
        let img = prof(0.0, 0.0, 0.2405);
        assert_eq!(threshold_comb_bp(&img, 100).max_sg, Some(3));
        let r = threshold_comb_omp(&img);
        assert!((r.raw_bound - 2.579).abs() < 1e-3);
        assert_eq!(r.max_sg, Some(2));
        assert_eq!(threshold_comb_omp(&prof(0.01, 0.0, 0.0)).max_sg, Some(50));
        assert_eq!(threshold_comb_omp(&prof(1.0, 0.0, 0.0)).max_sg, Some(0));
        assert_eq!(ThresholdKind::CombOmp.to_string(), "COMB-OMP");
        let raw = threshold_comb_bp(&img, 100).raw_bound;
        assert!(raw > 3.0 && raw <= 4.0, "{raw}");
    }

    #[test]
    fn first_step_examples() {
        assert!(comb_omp_first_step_condition(1, 0, &prof(0.9, 0.9, 0.9)));
        assert!(comb_omp_first_step_condition(25, 25, &prof(0.0, 0.01, 0.01)));
        assert!(!comb_omp_first_step_condition(26, 26, &prof(0.0, 0.01, 0.01)));
    }

    #[test]
    fn full_condition_examples() {
        let p = prof(0.0, 0.1, 0.1);
        assert!(comb_omp_full_condition(1, 1, &p));
        assert!(comb_omp_full_condition(0, 0, &p));
        assert!(!comb_omp_full_condition(30, 30, &p));
    }

    #[test]
    fn full_implies_first_step_on_grid() {
        let mus: Vec<f64> = (1..=10).map(|k| 0.005 * k as f64).collect();
        for &md in &mus {
            for &mg in &mus {
                let p = prof(0.0, md, mg);
                for sx in 1..=40 {
                    for sd in 1..=40 {
                        if comb_omp_full_condition(sx, sd, &p) {
                            assert!(comb_omp_first_step_condition(sx, sd, &p));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn strictness_never_claims_boundary() {
        // raw bound exactly 3 => 3 is not guaranteed
        let r = threshold_nonneg(0.2).unwrap();
        assert!((r.raw_bound - 3.0).abs() < 1e-12);
        assert_eq!(r.max_sg, Some(2));
    }

    proptest! {
        #[test]
        fn thresholds_monotone_in_coherence(
            mx in 0.001f64..0.5, md in 0.001f64..0.5, mg in 0.001f64..0.5,
            bump in 0.0f64..0.3, which in 0usize..3,
        ) {
            let base = prof(mx, md, mg);
            let mut b = [mx, md, mg];
            b[which] = (b[which] + bump).min(1.0);
            let bumped = prof(b[0], b[1], b[2]);
            prop_assert!(threshold_comb_omp(&bumped).max_sg_or_max() <= threshold_comb_omp(&base).max_sg_or_max());
            prop_assert!(threshold_comb_bp(&bumped, 500).max_sg <= threshold_comb_bp(&base, 500).max_sg);
            prop_assert!(threshold_nonneg(b[0]).unwrap().max_sg <= threshold_nonneg(mx).unwrap().max_sg);
            prop_assert!(threshold_full_rank(&bumped, 500).max_sg <= threshold_full_rank(&base, 500).max_sg);
        }

        #[test]
        fn comb_omp_never_exceeds_comb_bp(
            md in 0.001f64..0.6, mg in 0.001f64..0.6, frac in 0.0f64..=1.0,
        ) {
            let p = prof(md * frac, md, mg);
            let omp = threshold_comb_omp(&p).max_sg.unwrap();
            let bp = threshold_comb_bp(&p, 1000).max_sg.unwrap();
            prop_assert!(omp <= bp, "omp {} > bp {} for {:?}", omp, bp, p);
        }
    }
}
