//! Differential-evolution search over degree-profile coefficients.
//!
//! The lower graphs are fixed; the search variables are each source's
//! variable-node coefficients (over a fixed grid of degree pairs) and the
//! shared upper check coefficients. Every candidate is repaired onto the
//! equality constraints (normalization, both socket balances, and the
//! per-source relay-share targets) by a minimum-norm projection with
//! nonnegativity enforced by freezing, so fitness only ever sees feasible
//! profiles. Fitness is the system noise figure sigma_sys returned by
//! `threshold_search` along a fixed direction.

use crate::ensemble::{
    DeclaredRates, LowerCheckEntry, MultiEdgeProfile, UpperCheckEntry, VarNodeEntry,
};
use crate::error::{Error, Result};
use crate::exit::{threshold_search, ExitConfig};
use crate::linalg::project_affine;
use crate::stream::stream_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SearchSpec {
    /// Fixed lower graph per source.
    pub lowers: Vec<Vec<LowerCheckEntry>>,
    /// Allowed lower degrees per source for variable entries.
    pub d1_sets: Vec<Vec<usize>>,
    /// Allowed upper degrees for variable entries (shared across sources;
    /// 0 means an entry with no upper sockets).
    pub d2_values: Vec<usize>,
    /// Candidate shared-check degree vectors, each with one entry per
    /// source.
    pub upper_degrees: Vec<Vec<usize>>,
    /// Relay share target per source (the r_one each source must draw from
    /// the shared checks).
    pub r1_targets: Vec<f64>,
    /// Direction of the threshold ray in noise space.
    pub weights: Vec<f64>,
    /// Forwarded-rate budget the targets must fit in, when known.
    pub relay_budget: Option<f64>,
    /// Raw genomes seeded into the initial population ahead of the uniform
    /// member, typically from [`SearchSpec::genome_of`] on a known profile.
    /// Each is repaired first.
    pub warm_starts: Vec<Vec<f64>>,
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    /// Mutation factor.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    /// Threshold bisection tolerance during the search.
    pub fitness_tol: f64,
    /// Threshold bisection tolerance for the returned profile.
    pub final_tol: f64,
    pub exit: ExitConfig,
}

impl SearchSpec {
    /// A search space with the default budget: population 40, 200
    /// generations, mutation 0.7, crossover 0.9, bisection 1e-3 during the
    /// search and 1e-4 for the final answer. Degree sets are sorted and
    /// deduplicated.
    pub fn new(
        lowers: Vec<Vec<LowerCheckEntry>>,
        d1_sets: Vec<Vec<usize>>,
        d2_values: Vec<usize>,
        upper_degrees: Vec<Vec<usize>>,
        r1_targets: Vec<f64>,
        weights: Vec<f64>,
    ) -> Self {
        let dedup = |mut v: Vec<usize>| {
            v.sort_unstable();
            v.dedup();
            v
        };
        SearchSpec {
            lowers,
            d1_sets: d1_sets.into_iter().map(dedup).collect(),
            d2_values: dedup(d2_values),
            upper_degrees,
            r1_targets,
            weights,
            relay_budget: None,
            warm_starts: Vec::new(),
            population: 40,
            generations: 200,
            seed: 1,
            f: 0.7,
            cr: 0.9,
            fitness_tol: 1e-3,
            final_tol: 1e-4,
            exit: ExitConfig::default(),
        }
    }

    pub fn sources(&self) -> usize {
        self.lowers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m_cnt = self.sources();
        if m_cnt == 0 {
            return Err(Error::Domain("search needs at least one source".into()));
        }
        if self.d1_sets.len() != m_cnt
            || self.r1_targets.len() != m_cnt
            || self.weights.len() != m_cnt
        {
            return Err(Error::Domain(
                "d1 sets, relay targets and weights must have one entry per source".into(),
            ));
        }
        for (m, lowers) in self.lowers.iter().enumerate() {
            if lowers.iter().any(|e| e.coeff < 0.0 || e.d1 == 0) {
                return Err(Error::Domain(format!(
                    "source {} has an invalid lower check entry",
                    m + 1
                )));
            }
        }
        for (m, set) in self.d1_sets.iter().enumerate() {
            if set.is_empty() || set.contains(&0) {
                return Err(Error::Domain(format!(
                    "source {} needs a nonempty d1 set without 0",
                    m + 1
                )));
            }
        }
        if self.d2_values.is_empty() {
            return Err(Error::Domain("the d2 value set must be nonempty".into()));
        }
        for deg in &self.upper_degrees {
            if deg.len() != m_cnt || deg.iter().all(|&d| d == 0) {
                return Err(Error::Domain(
                    "every shared-check degree vector needs one entry per source and a positive degree".into(),
                ));
            }
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Domain("threshold weights must be positive".into()));
        }
        for (m, &t) in self.r1_targets.iter().enumerate() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Domain("relay share targets must be >= 0".into()));
            }
            if t > 0.0 {
                if !self.upper_degrees.iter().any(|deg| deg[m] > 0) {
                    return Err(Error::Infeasible(format!(
                        "source {} has a relay share target but no shared-check degree toward it",
                        m + 1
                    )));
                }
                if !self.d2_values.iter().any(|&d| d > 0) {
                    return Err(Error::Infeasible(format!(
                        "source {} has a relay share target but the d2 set has no positive degree",
                        m + 1
                    )));
                }
            }
        }
        if let Some(budget) = self.relay_budget {
            let total: f64 = self.r1_targets.iter().sum();
            if total > budget + 1e-12 {
                return Err(Error::Infeasible(format!(
                    "relay share targets total {total}, exceeding the forwarded-rate budget {budget}"
                )));
            }
        }
        if self.population < 4 {
            return Err(Error::Domain(
                "differential evolution needs a population of at least 4".into(),
            ));
        }
        if self.warm_starts.len() >= self.population {
            return Err(Error::Domain(
                "warm starts must leave room in the population".into(),
            ));
        }
        if self.warm_starts.iter().any(|w| w.len() != self.genome_len()) {
            return Err(Error::Domain(format!(
                "warm starts must have {} coefficients",
                self.genome_len()
            )));
        }
        if self.generations == 0
            || !(self.f > 0.0 && self.f <= 2.0)
            || !(0.0..=1.0).contains(&self.cr)
            || !(self.fitness_tol > 0.0)
            || !(self.final_tol > 0.0)
        {
            return Err(Error::Domain("search knobs out of range".into()));
        }
        Ok(())
    }

    /// Coefficients per genome: one per (source, d1, d2) grid point plus
    /// one per shared-check degree vector.
    pub fn genome_len(&self) -> usize {
        let vars: usize = self
            .d1_sets
            .iter()
            .map(|s| s.len() * self.d2_values.len())
            .sum();
        vars + self.upper_degrees.len()
    }

    fn var_block(&self, m: usize) -> (usize, usize) {
        let start: usize = self.d1_sets[..m]
            .iter()
            .map(|s| s.len() * self.d2_values.len())
            .sum();
        (start, self.d1_sets[m].len() * self.d2_values.len())
    }

    fn upper_block(&self) -> usize {
        self.genome_len() - self.upper_degrees.len()
    }

    fn lower_sockets(&self, m: usize) -> f64 {
        self.lowers[m].iter().map(|e| e.coeff * e.d1 as f64).sum()
    }

    /// Equality constraints as dense rows over the genome.
    fn constraint_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>, Vec<String>) {
        let len = self.genome_len();
        let ustart = self.upper_block();
        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut names = Vec::new();
        for m in 0..self.sources() {
            let (start, _) = self.var_block(m);
            let mut norm = vec![0.0; len];
            let mut d1_row = vec![0.0; len];
            let mut d2_row = vec![0.0; len];
            let mut j = start;
            for &d1 in &self.d1_sets[m] {
                for &d2 in &self.d2_values {
                    norm[j] = 1.0;
                    d1_row[j] = d1 as f64;
                    d2_row[j] = d2 as f64;
                    j += 1;
                }
            }
            let mut r1_row = vec![0.0; len];
            for (u, deg) in self.upper_degrees.iter().enumerate() {
                let total: usize = deg.iter().sum();
                d2_row[ustart + u] = -(deg[m] as f64);
                r1_row[ustart + u] = deg[m] as f64 / total as f64;
            }
            rows.push(norm);
            b.push(1.0);
            names.push(format!("source {} variable coefficients sum to 1", m + 1));
            rows.push(d1_row);
            b.push(self.lower_sockets(m));
            names.push(format!("source {} lower socket balance", m + 1));
            rows.push(d2_row);
            b.push(0.0);
            names.push(format!("source {} upper socket balance", m + 1));
            rows.push(r1_row);
            b.push(self.r1_targets[m]);
            names.push(format!("source {} relay share target", m + 1));
        }
        (rows, b, names)
    }

    /// Builds the profile a genome describes. Coefficients are clamped at
    /// zero; entries for every grid point are kept, including zero-mass
    /// ones.
    pub fn profile_from_genome(&self, x: &[f64]) -> MultiEdgeProfile {
        let m_cnt = self.sources();
        let ustart = self.upper_block();
        let mut vars = Vec::with_capacity(m_cnt);
        for m in 0..m_cnt {
            let (start, _) = self.var_block(m);
            let mut list = Vec::new();
            let mut j = start;
            for &d1 in &self.d1_sets[m] {
                for &d2 in &self.d2_values {
                    list.push(VarNodeEntry { coeff: x[j].max(0.0), d1, d2 });
                    j += 1;
                }
            }
            vars.push(list);
        }
        let uppers = self
            .upper_degrees
            .iter()
            .enumerate()
            .map(|(u, deg)| UpperCheckEntry {
                coeff: x[ustart + u].max(0.0),
                degrees: deg.clone(),
            })
            .collect();
        MultiEdgeProfile {
            sources: m_cnt,
            vars,
            lowers: self.lowers.clone(),
            uppers,
            declared: vec![DeclaredRates::default(); m_cnt],
        }
    }

    /// Maps a profile's coefficients onto this search space's genome
    /// layout, for warm starts. Every positive-mass entry must lie on the
    /// search grid; the profile's lower graphs are ignored in favor of the
    /// fixed ones here.
    pub fn genome_of(&self, profile: &MultiEdgeProfile) -> Result<Vec<f64>> {
        if profile.sources != self.sources() {
            return Err(Error::Domain(format!(
                "profile has {} sources, spec has {}",
                profile.sources,
                self.sources()
            )));
        }
        let mut x = vec![0.0; self.genome_len()];
        for m in 0..self.sources() {
            let (start, _) = self.var_block(m);
            for e in &profile.vars[m] {
                if e.coeff == 0.0 {
                    continue;
                }
                let i = self.d1_sets[m].iter().position(|&d| d == e.d1);
                let j = self.d2_values.iter().position(|&d| d == e.d2);
                let (Some(i), Some(j)) = (i, j) else {
                    return Err(Error::Domain(format!(
                        "source {} degree pair ({}, {}) is outside the search grid",
                        m + 1,
                        e.d1,
                        e.d2
                    )));
                };
                x[start + i * self.d2_values.len() + j] += e.coeff;
            }
        }
        let ustart = self.upper_block();
        for e in &profile.uppers {
            if e.coeff == 0.0 {
                continue;
            }
            let Some(u) = self.upper_degrees.iter().position(|d| *d == e.degrees) else {
                return Err(Error::Domain(format!(
                    "shared-check degrees {:?} are outside the search grid",
                    e.degrees
                )));
            };
            x[ustart + u] += e.coeff;
        }
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// Repair
// ---------------------------------------------------------------------------

/// Residuals the repaired genome must reach.
pub const REPAIR_TOL: f64 = 1e-6;

fn repair_genome(raw: &[f64], spec: &SearchSpec) -> Result<Vec<f64>> {
    if raw.len() != spec.genome_len() {
        return Err(Error::Domain(format!(
            "genome has {} coefficients, spec needs {}",
            raw.len(),
            spec.genome_len()
        )));
    }
    if raw.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "repair input coefficients must be nonnegative".into(),
        ));
    }
    // Rescale each source's variable block to unit mass before projecting.
    let mut x0 = raw.to_vec();
    for m in 0..spec.sources() {
        let (start, n) = spec.var_block(m);
        let mass: f64 = x0[start..start + n].iter().sum();
        if mass <= 0.0 {
            return Err(Error::Infeasible(format!(
                "source {} variable coefficients have no mass",
                m + 1
            )));
        }
        for v in &mut x0[start..start + n] {
            *v /= mass;
        }
    }

    let (rows, b, names) = spec.constraint_rows();
    let mut frozen = vec![false; x0.len()];
    for _ in 0..=x0.len() {
        let Some(x) = project_affine(&x0, &rows, &b, &frozen) else {
            return Err(Error::Infeasible(
                "feasibility projection has no solution on the given degree support".into(),
            ));
        };
        let mut new_frozen = false;
        for (j, &v) in x.iter().enumerate() {
            if v < -1e-10 && !frozen[j] {
                frozen[j] = true;
                new_frozen = true;
            }
        }
        if !new_frozen {
            let cleaned: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
            // Freezing and clamping can leave residuals; name the worst
            // constraint if they exceed the contract.
            for (i, row) in rows.iter().enumerate() {
                let got: f64 = row.iter().zip(&cleaned).map(|(a, c)| a * c).sum();
                if (got - b[i]).abs() > REPAIR_TOL {
                    return Err(Error::Infeasible(format!(
                        "constraint '{}' unreachable on the given degree support (residual {:.3e})",
                        names[i],
                        (got - b[i]).abs()
                    )));
                }
            }
            return Ok(cleaned);
        }
    }
    Err(Error::Infeasible(
        "feasibility projection kept hitting the nonnegativity boundary".into(),
    ))
}

/// Projects raw nonnegative coefficients onto the search space's equality
/// constraints and returns the resulting profile. The output passes
/// `check_constraints` within `REPAIR_TOL`.
pub fn repair(raw: &[f64], spec: &SearchSpec) -> Result<MultiEdgeProfile> {
    spec.validate()?;
    let genome = repair_genome(raw, spec)?;
    let profile = spec.profile_from_genome(&genome);
    let report = profile.check_constraints();
    if !report.pass(REPAIR_TOL) {
        let worst = report.worst().expect("nonempty report");
        return Err(Error::Infeasible(format!(
            "repair left constraint '{}' at residual {:.3e}",
            worst.name, worst.residual
        )));
    }
    Ok(profile)
}

// ---------------------------------------------------------------------------
// Differential evolution
// ---------------------------------------------------------------------------

/// One line of the JSON-lines audit log.
#[derive(Debug, Clone, Serialize)]
pub struct GenerationAudit {
    pub generation: usize,
    pub best_sigma_sys: f64,
    /// Mean over members with a finite fitness.
    pub mean_sigma_sys: f64,
    /// Members whose threshold search bracketed successfully.
    pub feasible: usize,
    /// Hex digest of the generation's random stream seed.
    pub stream: String,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub profile: MultiEdgeProfile,
    /// sigma_sys of `profile` at the final bisection tolerance.
    pub sigma_sys: f64,
    pub t_star: f64,
    pub audit: Vec<GenerationAudit>,
}

struct Member {
    genome: Vec<f64>,
    fitness: f64,
}

/// Maximizes sigma_sys over the given search space. Deterministic per
/// seed; every intermediate profile is feasible by construction.
pub fn optimize(spec: &SearchSpec) -> Result<OptimizeOutcome> {
    spec.validate()?;
    let uniform = vec![1.0; spec.genome_len()];
    let seed_genome = repair_genome(&uniform, spec)?;

    let evaluate = |genome: &[f64], tol: f64| -> Result<f64> {
        let profile = spec.profile_from_genome(genome);
        match threshold_search(&profile, &spec.weights, tol, &spec.exit) {
            Ok(th) => Ok(th.sigma_sys),
            Err(Error::NoBracket(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let audit_line = |generation: usize, members: &[Member]| {
        let finite: Vec<f64> = members
            .iter()
            .map(|c| c.fitness)
            .filter(|f| f.is_finite())
            .collect();
        GenerationAudit {
            generation,
            best_sigma_sys: members
                .iter()
                .map(|c| c.fitness)
                .fold(f64::NEG_INFINITY, f64::max),
            mean_sigma_sys: finite.iter().sum::<f64>() / finite.len().max(1) as f64,
            feasible: finite.len(),
            stream: format!("{:016x}", stream_seed(spec.seed, generation as u64, 0)),
        }
    };

    // Degenerate search space: nothing upper-side to place, so the repaired
    // seed is the answer.
    if spec.upper_degrees.is_empty() && spec.r1_targets.iter().all(|&t| t == 0.0) {
        let profile = spec.profile_from_genome(&seed_genome);
        let th = threshold_search(&profile, &spec.weights, spec.final_tol, &spec.exit)?;
        let members = [Member {
            genome: seed_genome,
            fitness: th.sigma_sys,
        }];
        return Ok(OptimizeOutcome {
            profile,
            sigma_sys: th.sigma_sys,
            t_star: th.t_star,
            audit: vec![audit_line(0, &members)],
        });
    }

    // Initial population: warm starts, then the uniform seed, then repaired
    // random draws falling back to the seed when a draw cannot be repaired.
    let len = spec.genome_len();
    let mut population = Vec::with_capacity(spec.population);
    for idx in 0..spec.population {
        let genome = if idx < spec.warm_starts.len() {
            repair_genome(&spec.warm_starts[idx], spec)?
        } else if idx == spec.warm_starts.len() {
            seed_genome.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, 0, idx as u64));
            let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
            repair_genome(&raw, spec).unwrap_or_else(|_| seed_genome.clone())
        };
        let fitness = evaluate(&genome, spec.fitness_tol)?;
        population.push(Member { genome, fitness });
    }
    let mut audit = vec![audit_line(0, &population)];

    for generation in 1..=spec.generations {
        let mut next = Vec::with_capacity(spec.population);
        for idx in 0..spec.population {
            let mut rng =
                ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, generation as u64, idx as u64));
            let mut pick = || loop {
                let r = rng.random_range(0..spec.population);
                if r != idx {
                    return r;
                }
            };
            let (r1, mut r2, mut r3) = (pick(), pick(), pick());
            while r2 == r1 {
                r2 = pick();
            }
            while r3 == r1 || r3 == r2 {
                r3 = pick();
            }
            let forced = rng.random_range(0..len);
            let target = &population[idx];
            let mut trial = Vec::with_capacity(len);
            for j in 0..len {
                let mutant = population[r1].genome[j]
                    + spec.f * (population[r2].genome[j] - population[r3].genome[j]);
                let take = j == forced || rng.random::<f64>() < spec.cr;
                trial.push(if take {
                    mutant.max(0.0)
                } else {
                    target.genome[j]
                });
            }
            let accepted = match repair_genome(&trial, spec) {
                Ok(genome) => {
                    let fitness = evaluate(&genome, spec.fitness_tol)?;
                    if fitness >= target.fitness {
                        Some(Member { genome, fitness })
                    } else {
                        None
                    }
                }
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            };
            next.push(accepted.unwrap_or_else(|| Member {
                genome: target.genome.clone(),
                fitness: target.fitness,
            }));
        }
        population = next;
        audit.push(audit_line(generation, &population));
    }

    let best = population
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.fitness.total_cmp(&b.fitness).then(ib.cmp(ia)))
        .map(|(_, c)| c)
        .expect("population is nonempty");
    let profile = spec.profile_from_genome(&best.genome);
    let th = threshold_search(&profile, &spec.weights, spec.final_tol, &spec.exit)?;
    Ok(OptimizeOutcome {
        profile,
        sigma_sys: th.sigma_sys,
        t_star: th.t_star,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn reference_spec() -> SearchSpec {
        let p = fixtures::two_source();
        SearchSpec::new(
            p.lowers.clone(),
            vec![vec![2, 3, 6, 7, 20], vec![2, 3, 6, 7, 20]],
            vec![0, 1, 2, 3, 7, 14, 21],
            vec![vec![3, 3]],
            vec![0.2, 0.2],
            vec![0.970555, 1.1899],
        )
    }

    #[test]
    fn repair_keeps_a_near_feasible_profile_close() {
        let spec = reference_spec();
        let p = fixtures::two_source();
        let raw = spec.genome_of(&p).unwrap();
        let fixed = repair_genome(&raw, &spec).unwrap();
        // The reference coefficients carry ~2e-4 of socket imbalance and
        // ~4e-5 of normalization error, so repair moves them, but only by
        // that order of magnitude.
        let worst = raw
            .iter()
            .zip(&fixed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 5e-5, "repair moved a coefficient by {worst}");
        let profile = spec.profile_from_genome(&fixed);
        assert!(profile.check_constraints().pass(REPAIR_TOL));
        assert!((profile.rates(0).unwrap().r_one - 0.2).abs() < 1e-9);
    }

    #[test]
    fn repair_makes_uniform_coefficients_feasible() {
        let spec = reference_spec();
        let profile = repair(&vec![1.0; spec.genome_len()], &spec).unwrap();
        assert!(profile.check_constraints().pass(REPAIR_TOL));
        for m in 0..2 {
            assert!((profile.rates(m).unwrap().r_one - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn genome_mapping_requires_grid_support() {
        let spec = reference_spec();
        let p = fixtures::two_source();
        let x = spec.genome_of(&p).unwrap();
        assert_eq!(x.len(), spec.genome_len());
        let back = spec.profile_from_genome(&x);
        for m in 0..2 {
            let total: f64 = back.vars[m].iter().map(|e| e.coeff).sum();
            let orig: f64 = p.vars[m].iter().map(|e| e.coeff).sum();
            assert!((total - orig).abs() < 1e-12);
        }
        let mut narrow = reference_spec();
        narrow.d2_values = vec![0, 1, 2, 3, 7, 14];
        assert!(matches!(narrow.genome_of(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn warm_start_is_kept_when_it_stays_best() {
        let p = fixtures::two_source();
        let mut spec = reference_spec();
        spec.population = 4;
        spec.generations = 1;
        spec.seed = 3;
        spec.fitness_tol = 5e-3;
        spec.final_tol = 2e-3;
        spec.warm_starts = vec![spec.genome_of(&p).unwrap()];
        let out = optimize(&spec).unwrap();
        // The reference design is far better than anything one generation
        // of mutation finds from uniform mass, so it must survive.
        let warm = repair(&spec.warm_starts[0], &spec).unwrap();
        let moved = out.profile.vars[0]
            .iter()
            .zip(&warm.vars[0])
            .map(|(a, b)| (a.coeff - b.coeff).abs())
            .fold(0.0, f64::max);
        assert!(moved < 1e-2, "warm start drifted by {moved}");
        assert!(out.sigma_sys > 0.7);
    }

    #[test]
    fn repair_rejects_bad_input() {
        let spec = reference_spec();
        let mut raw = vec![1.0; spec.genome_len()];
        raw[0] = -0.5;
        assert!(matches!(repair(&raw, &spec), Err(Error::Domain(_))));
        assert!(repair(&[1.0, 2.0], &spec).is_err());
    }

    #[test]
    fn relay_target_without_support_is_infeasible() {
        let mut spec = reference_spec();
        spec.d2_values = vec![0];
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));

        let mut spec = reference_spec();
        spec.upper_degrees = vec![];
        assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));

        let mut spec = reference_spec();
        spec.relay_budget = Some(0.3);
        let err = spec.validate().unwrap_err();
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn degenerate_search_returns_the_lower_only_profile() {
        let p = fixtures::two_source();
        let mut spec = SearchSpec::new(
            vec![p.lowers[0].clone()],
            vec![vec![2, 3, 6]],
            vec![0],
            vec![],
            vec![0.0],
            vec![1.0],
        );
        spec.final_tol = 1e-3;
        let out = optimize(&spec).unwrap();
        assert!(out.profile.uppers.is_empty());
        assert_eq!(out.audit.len(), 1);
        assert_eq!(
            out.profile,
            repair(&vec![1.0; spec.genome_len()], &spec).unwrap()
        );
        assert!(out.sigma_sys > 0.0);
    }

    #[test]
    fn small_search_is_monotone_and_deterministic() {
        let p = fixtures::two_source();
        let mut spec = SearchSpec::new(
            p.lowers.clone(),
            vec![vec![2, 3, 6], vec![2, 3, 6]],
            vec![0, 1, 3],
            vec![vec![3, 3]],
            vec![0.2, 0.2],
            vec![0.970555, 1.1899],
        );
        spec.population = 6;
        spec.generations = 3;
        spec.seed = 42;
        spec.fitness_tol = 5e-3;
        spec.final_tol = 2e-3;
        let a = optimize(&spec).unwrap();
        assert_eq!(a.audit.len(), 4);
        let mut prev = f64::NEG_INFINITY;
        for line in &a.audit {
            assert!(
                line.best_sigma_sys >= prev,
                "best fitness regressed at generation {}",
                line.generation
            );
            prev = line.best_sigma_sys;
        }
        assert!(a.profile.check_constraints().pass(REPAIR_TOL));
        for m in 0..2 {
            assert!((a.profile.rates(m).unwrap().r_one - 0.2).abs() < 1e-3);
        }
        let b = optimize(&spec).unwrap();
        assert_eq!(a.profile, b.profile);
        assert_eq!(a.sigma_sys.to_bits(), b.sigma_sys.to_bits());
    }
}
