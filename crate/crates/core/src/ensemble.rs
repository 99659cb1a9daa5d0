//! Multi-edge-type degree profiles for M sources sharing one relay.
//!
//! Each source m contributes a block of n variable nodes. Two edge types
//! exist per source: type 1 edges go to that source's private lower checks
//! (decoded at the relay), type 2 edges go to the shared upper checks that
//! carry the relay's network-coded parity. A variable entry (coeff, d1, d2)
//! says a `coeff` fraction of source m's variables have d1 type-1 sockets
//! and d2 type-2 sockets; lower check entries (coeff, d1) and shared upper
//! check entries (coeff, [d2_1, ..., d2_M]) are fractions of n as well.

use crate::capacity::RateTriple;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Fraction `coeff` of a source's variables with d1 lower and d2 upper
/// sockets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarNodeEntry {
    pub coeff: f64,
    pub d1: usize,
    pub d2: usize,
}

/// Fraction `coeff` of a source's private relay checks with degree d1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerCheckEntry {
    pub coeff: f64,
    pub d1: usize,
}

/// Fraction `coeff` of shared destination checks with `degrees[m]` sockets
/// toward source m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperCheckEntry {
    pub coeff: f64,
    pub degrees: Vec<usize>,
}

/// Rates and thresholds a profile's author claims for one source; `verify`
/// recomputes and compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredRates {
    pub r_plus: Option<f64>,
    pub r_minus: Option<f64>,
    pub sigma_plus: Option<f64>,
    pub sigma_minus: Option<f64>,
}

impl DeclaredRates {
    pub fn is_empty(&self) -> bool {
        self.r_plus.is_none()
            && self.r_minus.is_none()
            && self.sigma_plus.is_none()
            && self.sigma_minus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiEdgeProfile {
    pub sources: usize,
    /// Variable entries per source.
    pub vars: Vec<Vec<VarNodeEntry>>,
    /// Lower (relay) check entries per source.
    pub lowers: Vec<Vec<LowerCheckEntry>>,
    /// Shared upper (destination) check entries; every degree vector has
    /// `sources` components.
    pub uppers: Vec<UpperCheckEntry>,
    /// Author-declared figures per source, empty by default.
    pub declared: Vec<DeclaredRates>,
}

// ---------------------------------------------------------------------------
// Structural validation
// ---------------------------------------------------------------------------

impl MultiEdgeProfile {
    /// Checks shape and sign conventions; numeric balance lives in
    /// `check_constraints`.
    pub fn validate(&self) -> Result<()> {
        if self.sources == 0 {
            return Err(Error::Semantic("profile needs at least one source".into()));
        }
        if self.vars.len() != self.sources
            || self.lowers.len() != self.sources
            || self.declared.len() != self.sources
        {
            return Err(Error::Semantic(format!(
                "per-source lists must all have length {}",
                self.sources
            )));
        }
        for (m, vars) in self.vars.iter().enumerate() {
            if vars.is_empty() {
                return Err(Error::Semantic(format!(
                    "source {} has no variable entries",
                    m + 1
                )));
            }
            for e in vars {
                if !e.coeff.is_finite() || e.coeff < 0.0 {
                    return Err(Error::Semantic(format!(
                        "source {} variable coefficient {} out of range",
                        m + 1,
                        e.coeff
                    )));
                }
                if e.d1 == 0 {
                    return Err(Error::Semantic(format!(
                        "source {} has a variable with no lower sockets",
                        m + 1
                    )));
                }
            }
        }
        for (m, lowers) in self.lowers.iter().enumerate() {
            for e in lowers {
                if !e.coeff.is_finite() || e.coeff < 0.0 || e.d1 == 0 {
                    return Err(Error::Semantic(format!(
                        "source {} has an invalid lower check entry",
                        m + 1
                    )));
                }
            }
        }
        for e in &self.uppers {
            if e.degrees.len() != self.sources {
                return Err(Error::Semantic(format!(
                    "upper check degree vector has {} components, expected {}",
                    e.degrees.len(),
                    self.sources
                )));
            }
            if !e.coeff.is_finite() || e.coeff < 0.0 {
                return Err(Error::Semantic(
                    "upper check coefficient out of range".into(),
                ));
            }
            if e.degrees.iter().all(|&d| d == 0) {
                return Err(Error::Semantic(
                    "upper check connects to no source".into(),
                ));
            }
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // Rate algebra
    // -----------------------------------------------------------------------

    /// Total type-1 sockets per variable-node block of source m,
    /// sum of coeff * d1.
    pub fn var_sockets1(&self, m: usize) -> f64 {
        self.vars[m].iter().map(|e| e.coeff * e.d1 as f64).sum()
    }

    /// Total type-2 sockets per variable-node block of source m.
    pub fn var_sockets2(&self, m: usize) -> f64 {
        self.vars[m].iter().map(|e| e.coeff * e.d2 as f64).sum()
    }

    /// Type-1 sockets offered by source m's lower checks.
    pub fn lower_sockets(&self, m: usize) -> f64 {
        self.lowers[m].iter().map(|e| e.coeff * e.d1 as f64).sum()
    }

    /// Type-2 sockets the shared checks offer toward source m.
    pub fn upper_sockets(&self, m: usize) -> f64 {
        self.uppers
            .iter()
            .map(|e| e.coeff * e.degrees[m] as f64)
            .sum()
    }

    /// Design rates for source m. r_plus = 1 - (lower check fraction) is
    /// what the relay decodes; r_one charges each shared check to source m
    /// in proportion to its share of that check's sockets; r_minus is the
    /// remainder the destination decodes directly.
    pub fn rates(&self, m: usize) -> Result<RateTriple> {
        if m >= self.sources {
            return Err(Error::Domain(format!(
                "source index {m} out of range for {} sources",
                self.sources
            )));
        }
        let lower_mass: f64 = self.lowers[m].iter().map(|e| e.coeff).sum();
        let r_plus = 1.0 - lower_mass;
        let r_one: f64 = self
            .uppers
            .iter()
            .map(|e| {
                let total: usize = e.degrees.iter().sum();
                e.coeff * e.degrees[m] as f64 / total as f64
            })
            .sum();
        Ok(RateTriple {
            r_plus,
            r_one,
            r_minus: r_plus - r_one,
        })
    }

    /// Sum of the per-source destination rates.
    pub fn total_rate(&self) -> Result<f64> {
        (0..self.sources).try_fold(0.0, |acc, m| Ok(acc + self.rates(m)?.r_minus))
    }

    // -----------------------------------------------------------------------
    // Consistency report
    // -----------------------------------------------------------------------

    /// Numeric residuals of the design constraints. The lower-degree
    /// marginal of the variable table is defined by summing over d2, so its
    /// consistency is reported with residual zero by construction; the
    /// normalization and the two socket balances carry real residuals.
    pub fn check_constraints(&self) -> ConstraintReport {
        let mut items = Vec::new();
        for m in 0..self.sources {
            let label = m + 1;
            let mass: f64 = self.vars[m].iter().map(|e| e.coeff).sum();
            items.push(ConstraintItem {
                name: format!("source {label} variable coefficients sum to 1"),
                residual: (mass - 1.0).abs(),
            });
            items.push(ConstraintItem {
                name: format!("source {label} lower-degree marginal consistency"),
                residual: 0.0,
            });
            items.push(ConstraintItem {
                name: format!("source {label} lower socket balance"),
                residual: (self.lower_sockets(m) - self.var_sockets1(m)).abs(),
            });
            items.push(ConstraintItem {
                name: format!("source {label} upper socket balance"),
                residual: (self.upper_sockets(m) - self.var_sockets2(m)).abs(),
            });
        }
        ConstraintReport { items }
    }

    // -----------------------------------------------------------------------
    // Edge perspective
    // -----------------------------------------------------------------------

    /// Per-entry edge fractions, each list parallel to the profile's entry
    /// list. Type-i fractions are normalized by that source's type-i socket
    /// total; a type with no sockets gets all-zero fractions.
    pub fn edge_perspective(&self) -> EdgePerspective {
        let mut p = EdgePerspective {
            lam1: Vec::with_capacity(self.sources),
            lam2: Vec::with_capacity(self.sources),
            rho1: Vec::with_capacity(self.sources),
            rho2: Vec::with_capacity(self.sources),
        };
        for m in 0..self.sources {
            let s1 = self.var_sockets1(m);
            let s2 = self.var_sockets2(m);
            p.lam1.push(
                self.vars[m]
                    .iter()
                    .map(|e| if s1 > 0.0 { e.coeff * e.d1 as f64 / s1 } else { 0.0 })
                    .collect(),
            );
            p.lam2.push(
                self.vars[m]
                    .iter()
                    .map(|e| if s2 > 0.0 { e.coeff * e.d2 as f64 / s2 } else { 0.0 })
                    .collect(),
            );
            let c1 = self.lower_sockets(m);
            p.rho1.push(
                self.lowers[m]
                    .iter()
                    .map(|e| if c1 > 0.0 { e.coeff * e.d1 as f64 / c1 } else { 0.0 })
                    .collect(),
            );
            let c2 = self.upper_sockets(m);
            p.rho2.push(
                self.uppers
                    .iter()
                    .map(|e| {
                        if c2 > 0.0 {
                            e.coeff * e.degrees[m] as f64 / c2
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            );
        }
        p
    }

    // -----------------------------------------------------------------------
    // Derived profiles
    // -----------------------------------------------------------------------

    /// The relay's view of source m: the variable table marginalized over
    /// d2 plus that source's lower checks, as a single-source profile with
    /// no shared checks.
    pub fn lower_graph(&self, m: usize) -> Result<MultiEdgeProfile> {
        if m >= self.sources {
            return Err(Error::Domain(format!(
                "source index {m} out of range for {} sources",
                self.sources
            )));
        }
        let mut by_d1: BTreeMap<usize, f64> = BTreeMap::new();
        for e in &self.vars[m] {
            *by_d1.entry(e.d1).or_insert(0.0) += e.coeff;
        }
        let vars = by_d1
            .into_iter()
            .map(|(d1, coeff)| VarNodeEntry { coeff, d1, d2: 0 })
            .collect();
        Ok(MultiEdgeProfile {
            sources: 1,
            vars: vec![vars],
            lowers: vec![self.lowers[m].clone()],
            uppers: Vec::new(),
            declared: vec![DeclaredRates::default()],
        })
    }

    /// The non-cooperative baseline: every shared check is split into M
    /// per-source checks so that no check mixes edge types, while every
    /// variable table stays untouched. An entry (c, [d_1, ..., d_M]) with
    /// total degree D becomes, for each source m with d_m > 0, an entry
    /// (c d_m / D) with degree vector D at position m. This preserves each
    /// source's upper socket count, its rate share, and the total check
    /// mass, and is idempotent on already-separate profiles.
    pub fn build_separate_variant(&self) -> Result<MultiEdgeProfile> {
        self.validate()?;
        let mut split: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in &self.uppers {
            let total: usize = e.degrees.iter().sum();
            for (m, &d) in e.degrees.iter().enumerate() {
                if d > 0 {
                    *split.entry((m, total)).or_insert(0.0) += e.coeff * d as f64 / total as f64;
                }
            }
        }
        let uppers = split
            .into_iter()
            .map(|((m, total), coeff)| {
                let mut degrees = vec![0; self.sources];
                degrees[m] = total;
                UpperCheckEntry { coeff, degrees }
            })
            .collect();
        Ok(MultiEdgeProfile {
            sources: self.sources,
            vars: self.vars.clone(),
            lowers: self.lowers.clone(),
            uppers,
            declared: vec![DeclaredRates::default(); self.sources],
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintItem {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub items: Vec<ConstraintItem>,
}

impl ConstraintReport {
    pub fn max_residual(&self) -> f64 {
        self.items.iter().fold(0.0, |a, i| a.max(i.residual))
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    /// Worst item, for error messages.
    pub fn worst(&self) -> Option<&ConstraintItem> {
        self.items
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// Edge fractions per entry; lam are variable-side, rho check-side, with
/// suffix 1 for lower edges and 2 for shared-check edges.
#[derive(Debug, Clone)]
pub struct EdgePerspective {
    pub lam1: Vec<Vec<f64>>,
    pub lam2: Vec<Vec<f64>>,
    pub rho1: Vec<Vec<f64>>,
    pub rho2: Vec<Vec<f64>>,
}
