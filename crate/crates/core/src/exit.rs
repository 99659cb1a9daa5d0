//! EXIT-chart analysis of a multi-edge-type profile on per-source BIAWGN
//! channels, plus the scalar threshold search built on it.
//!
//! All messages are modeled as consistent Gaussian LLRs summarized by their
//! mutual information. One iteration is: variable-to-check extrinsic MI per
//! edge type, check-to-variable extrinsic MI per edge type (through the
//! standard duality 1 - J applied to the complement), then the a-posteriori
//! MI per source. Decoding converges when every source's APP MI reaches
//! 1 - eps_conv; it stalls when the APP vector stops moving.

use crate::ensemble::MultiEdgeProfile;
use crate::error::{Error, Result};
use crate::mi::JKind;
use serde::Serialize;

/// How extrinsic MI is averaged across degree classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Mix the per-degree-class MI values: I = sum_k w_k J(sigma_k). This is
    /// the rule that reproduces the reference thresholds and is the default.
    #[default]
    MiMixture,
    /// Average the LLR variances across classes and apply J once:
    /// I = J(sqrt(sum_k w_k sigma_k^2)). Kept selectable for comparison; it
    /// shifts thresholds visibly.
    VarianceAverage,
}

#[derive(Debug, Clone)]
pub struct ExitConfig {
    pub j: JKind,
    pub rule: UpdateRule,
    /// Converged when min_m I_app(m) >= 1 - eps_conv.
    pub eps_conv: f64,
    /// Stalled when no source's I_app moved by eps_stall in one iteration.
    pub eps_stall: f64,
    pub max_iters: usize,
    /// Record one `IterationRecord` per source per iteration.
    pub record_trajectory: bool,
}

impl Default for ExitConfig {
    fn default() -> Self {
        ExitConfig {
            j: JKind::default(),
            rule: UpdateRule::default(),
            eps_conv: 1e-4,
            eps_stall: 1e-7,
            max_iters: 5000,
            record_trajectory: false,
        }
    }
}

/// State of one source after one iteration. `source` is 1-based to match
/// the reporting convention.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub source: usize,
    pub i_ev1: f64,
    pub i_ev2: f64,
    pub i_ec1: f64,
    pub i_ec2: f64,
    pub i_app: f64,
}

#[derive(Debug, Clone)]
pub struct ExitOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Final APP MI per source.
    pub final_app: Vec<f64>,
    /// Empty unless `record_trajectory` was set.
    pub trajectory: Vec<IterationRecord>,
}

// ---------------------------------------------------------------------------
// Packed working form
// ---------------------------------------------------------------------------

struct Entry3 {
    w: f64,
    d1: f64,
    d2: f64,
}

struct PackedSource {
    /// Variable entries weighted by type-1 edge fraction.
    l1: Vec<Entry3>,
    /// Variable entries with d2 > 0, weighted by type-2 edge fraction.
    l2: Vec<Entry3>,
    /// Variable entries weighted across both edge types, for the APP mix.
    la: Vec<Entry3>,
    /// Lower checks: (type-1 edge fraction, d1).
    r1: Vec<(f64, f64)>,
    /// Upper checks seen from this source: edge fraction plus the check's
    /// full degree vector.
    r2: Vec<(f64, Vec<f64>)>,
}

fn pack(profile: &MultiEdgeProfile) -> Vec<PackedSource> {
    let ep = profile.edge_perspective();
    (0..profile.sources)
        .map(|m| {
            let all: f64 = profile.vars[m]
                .iter()
                .map(|e| e.coeff * (e.d1 + e.d2) as f64)
                .sum();
            let l1 = profile.vars[m]
                .iter()
                .zip(&ep.lam1[m])
                .map(|(e, &w)| Entry3 { w, d1: e.d1 as f64, d2: e.d2 as f64 })
                .collect();
            let l2 = profile.vars[m]
                .iter()
                .zip(&ep.lam2[m])
                .filter(|(e, _)| e.d2 > 0)
                .map(|(e, &w)| Entry3 { w, d1: e.d1 as f64, d2: e.d2 as f64 })
                .collect();
            let la = profile.vars[m]
                .iter()
                .map(|e| Entry3 {
                    w: e.coeff * (e.d1 + e.d2) as f64 / all,
                    d1: e.d1 as f64,
                    d2: e.d2 as f64,
                })
                .collect();
            let r1 = profile.lowers[m]
                .iter()
                .zip(&ep.rho1[m])
                .map(|(e, &w)| (w, e.d1 as f64))
                .collect();
            let r2 = profile
                .uppers
                .iter()
                .zip(&ep.rho2[m])
                .filter(|(e, _)| e.degrees[m] > 0)
                .map(|(e, &w)| (w, e.degrees.iter().map(|&d| d as f64).collect()))
                .collect();
            PackedSource { l1, l2, la, r1, r2 }
        })
        .collect()
}

/// Combine per-class (weight, squared LLR std) pairs into one MI under the
/// chosen rule.
fn combine(rule: UpdateRule, j: JKind, terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    match rule {
        UpdateRule::MiMixture => terms.map(|(w, arg)| w * j.j_fast(arg.sqrt())).sum(),
        UpdateRule::VarianceAverage => {
            let mean: f64 = terms.map(|(w, arg)| w * arg).sum();
            j.j_fast(mean.sqrt())
        }
    }
}

// ---------------------------------------------------------------------------
// Iteration
// ---------------------------------------------------------------------------

/// Runs the iterative analysis for one noise point, `sigmas[m]` being the
/// channel noise std seen by source m's variables.
pub fn run_exit(
    profile: &MultiEdgeProfile,
    sigmas: &[f64],
    cfg: &ExitConfig,
) -> Result<ExitOutcome> {
    profile.validate()?;
    if sigmas.len() != profile.sources {
        return Err(Error::Domain(format!(
            "expected {} noise values, got {}",
            profile.sources,
            sigmas.len()
        )));
    }
    if sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::Domain("channel noise must be positive".into()));
    }
    if !(cfg.eps_conv > 0.0) || !(cfg.eps_stall > 0.0) || cfg.max_iters == 0 {
        return Err(Error::Domain(
            "tolerances must be positive and max_iters nonzero".into(),
        ));
    }

    let m_cnt = profile.sources;
    let packed = pack(profile);
    let (j, rule) = (cfg.j, cfg.rule);
    // Squared std of the channel LLR.
    let ach2: Vec<f64> = sigmas.iter().map(|s| (2.0 / s).powi(2)).collect();

    let mut iav1 = vec![0.0; m_cnt];
    let mut iav2 = vec![0.0; m_cnt];
    let mut iapp = vec![0.0; m_cnt];
    let mut prev = vec![0.0; m_cnt];
    let mut trajectory = Vec::new();

    let inv2 = |mi: f64| {
        let s = j.j_inv_fast(mi);
        s * s
    };

    for it in 1..=cfg.max_iters {
        let a1: Vec<f64> = iav1.iter().map(|&x| inv2(x)).collect();
        let a2: Vec<f64> = iav2.iter().map(|&x| inv2(x)).collect();

        // Variable-to-check extrinsic MI per type.
        let mut iev1 = Vec::with_capacity(m_cnt);
        let mut iev2 = Vec::with_capacity(m_cnt);
        for m in 0..m_cnt {
            let p = &packed[m];
            iev1.push(combine(
                rule,
                j,
                p.l1
                    .iter()
                    .map(|e| (e.w, (e.d1 - 1.0) * a1[m] + e.d2 * a2[m] + ach2[m])),
            ));
            iev2.push(if p.l2.is_empty() {
                0.0
            } else {
                combine(
                    rule,
                    j,
                    p.l2
                        .iter()
                        .map(|e| (e.w, (e.d2 - 1.0) * a2[m] + e.d1 * a1[m] + ach2[m])),
                )
            });
        }

        // Check-to-variable extrinsic MI, through the complement duality.
        let b1: Vec<f64> = iev1.iter().map(|&x| inv2(1.0 - x)).collect();
        let b2: Vec<f64> = iev2.iter().map(|&x| inv2(1.0 - x)).collect();
        let mut iec1 = Vec::with_capacity(m_cnt);
        let mut iec2 = Vec::with_capacity(m_cnt);
        for m in 0..m_cnt {
            let p = &packed[m];
            iec1.push(if p.r1.is_empty() {
                0.0
            } else {
                1.0 - combine(rule, j, p.r1.iter().map(|&(w, d1)| (w, (d1 - 1.0) * b1[m])))
            });
            iec2.push(if p.r2.is_empty() {
                0.0
            } else {
                // A check spends one socket on the outgoing edge; the rest
                // of its sockets, across all sources, feed the update.
                1.0 - combine(
                    rule,
                    j,
                    p.r2.iter().map(|(w, deg)| {
                        let full: f64 = deg.iter().zip(&b2).map(|(d, b)| d * b).sum();
                        (*w, full - b2[m])
                    }),
                )
            });
        }
        iav1 = iec1;
        iav2 = iec2;

        // APP MI per source from the fresh check messages.
        let na1: Vec<f64> = iav1.iter().map(|&x| inv2(x)).collect();
        let na2: Vec<f64> = iav2.iter().map(|&x| inv2(x)).collect();
        for m in 0..m_cnt {
            iapp[m] = combine(
                rule,
                j,
                packed[m]
                    .la
                    .iter()
                    .map(|e| (e.w, e.d1 * na1[m] + e.d2 * na2[m] + ach2[m])),
            );
        }

        if cfg.record_trajectory {
            for m in 0..m_cnt {
                trajectory.push(IterationRecord {
                    iteration: it,
                    source: m + 1,
                    i_ev1: iev1[m],
                    i_ev2: iev2[m],
                    i_ec1: iav1[m],
                    i_ec2: iav2[m],
                    i_app: iapp[m],
                });
            }
        }

        let worst = iapp.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst >= 1.0 - cfg.eps_conv {
            return Ok(ExitOutcome {
                converged: true,
                iterations: it,
                final_app: iapp,
                trajectory,
            });
        }
        let moved = iapp
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved < cfg.eps_stall {
            return Ok(ExitOutcome {
                converged: false,
                iterations: it,
                final_app: iapp,
                trajectory,
            });
        }
        prev.copy_from_slice(&iapp);
    }
    Ok(ExitOutcome {
        converged: false,
        iterations: cfg.max_iters,
        final_app: iapp,
        trajectory,
    })
}

// ---------------------------------------------------------------------------
// Threshold search
// ---------------------------------------------------------------------------

/// Harmonic-style combination of per-source noise levels: the single figure
/// the designs maximize. sqrt(1 / sum_m sigma_m^-2).
pub fn sigma_sys(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() || sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::Domain(
            "sigma_sys needs a nonempty list of positive values".into(),
        ));
    }
    Ok((1.0 / sigmas.iter().map(|s| s.powi(-2)).sum::<f64>()).sqrt())
}

#[derive(Debug, Clone)]
pub struct ThresholdResult {
    /// Largest scale t (to within `tol`) at which the profile converges on
    /// the ray sigma = t * weights.
    pub t_star: f64,
    /// The noise point t_star * weights.
    pub sigmas: Vec<f64>,
    pub sigma_sys: f64,
}

/// Bisects the convergence boundary along the ray `t * weights`.
///
/// The bracket starts at [0.5, 1.5]: the low end halves until it converges
/// (down to 1e-3) and the high end grows by 1.25x until it fails (up to 16);
/// a ray with no boundary in that range is an error.
pub fn threshold_search(
    profile: &MultiEdgeProfile,
    weights: &[f64],
    tol: f64,
    cfg: &ExitConfig,
) -> Result<ThresholdResult> {
    if weights.len() != profile.sources
        || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite())
    {
        return Err(Error::Domain(
            "threshold weights must be positive, one per source".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("threshold tolerance must be positive".into()));
    }
    let mut cfg = cfg.clone();
    cfg.record_trajectory = false;
    let converges = |t: f64| -> Result<bool> {
        let sigmas: Vec<f64> = weights.iter().map(|w| t * w).collect();
        Ok(run_exit(profile, &sigmas, &cfg)?.converged)
    };

    let mut lo = 0.5;
    while !converges(lo)? {
        lo *= 0.5;
        if lo < 1e-3 {
            return Err(Error::NoBracket(
                "no convergent point found down to scale 1e-3".into(),
            ));
        }
    }
    let mut hi = lo.max(1.5);
    while converges(hi)? {
        hi *= 1.25;
        if hi > 16.0 {
            return Err(Error::NoBracket(
                "still convergent at scale 16, no failure boundary".into(),
            ));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let sigmas: Vec<f64> = weights.iter().map(|w| t_star * w).collect();
    let sigma_sys = sigma_sys(&sigmas)?;
    Ok(ThresholdResult { t_star, sigmas, sigma_sys })
}
