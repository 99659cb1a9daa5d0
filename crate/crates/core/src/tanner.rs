//! Finite-length code realizations and belief-propagation simulation.
//!
//! A profile is instantiated as a joint Tanner graph: each source gets its
//! own block of variable nodes and private lower checks, and the shared
//! upper checks connect variable nodes across sources. Upper checks are not
//! code constraints; their parities are side information forwarded over the
//! reliable relay branch, so the decoder treats them as checks with a known
//! target parity. Codewords therefore live in the product of the lower
//! codes.

use crate::ensemble::MultiEdgeProfile;
use crate::error::{Error, Result};
use crate::stream::{splitmix64, stream_seed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Messages and totals are clamped to this LLR magnitude.
pub const LLR_CLAMP: f64 = 50.0;
/// Decoding gives up after this many iterations without a new minimum in
/// the unsatisfied-check count. Progressing decoders lower the count every
/// few iterations; trapped ones plateau long before any realistic cap.
const FAIL_WINDOW: usize = 100;

// ---------------------------------------------------------------------------
// Graph sampling
// ---------------------------------------------------------------------------

/// A sampled joint Tanner graph. Variable ids are `source * n + i`; check
/// ids list every source's lower checks first, then the shared upper
/// checks.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    pub sources: usize,
    /// Variable nodes per source.
    pub n: usize,
    /// Lower check count per source.
    pub lower_counts: Vec<usize>,
    pub upper_count: usize,
    var_source: Vec<u32>,
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    var_start: Vec<usize>,
    var_edge: Vec<u32>,
}

impl TannerGraph {
    pub fn total_vars(&self) -> usize {
        self.sources * self.n
    }

    pub fn check_count(&self) -> usize {
        self.check_start.len() - 1
    }

    /// First upper-check id; ids below it are lower checks.
    pub fn upper_offset(&self) -> usize {
        self.check_count() - self.upper_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_var.len()
    }

    pub fn source_of(&self, var: usize) -> usize {
        self.var_source[var] as usize
    }

    fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_start[c]..self.check_start[c + 1]
    }

    /// Edge ids incident to variable `v`.
    pub fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edge[self.var_start[v]..self.var_start[v + 1]]
    }

    /// Realized (lower, upper) edge counts of variable `v`.
    pub fn var_degrees(&self, v: usize) -> (usize, usize) {
        let upper_at = self.upper_offset();
        let mut lower = 0;
        let mut upper = 0;
        for &e in self.var_edges(v) {
            let c = self.check_start.partition_point(|&s| s <= e as usize) - 1;
            if c < upper_at {
                lower += 1;
            } else {
                upper += 1;
            }
        }
        (lower, upper)
    }

    /// Parity of every check under the given assignment.
    pub fn check_parities(&self, bits: &[bool]) -> Vec<bool> {
        assert_eq!(bits.len(), self.total_vars());
        (0..self.check_count())
            .map(|c| {
                self.edge_var[self.check_edges(c)]
                    .iter()
                    .fold(false, |p, &v| p ^ bits[v as usize])
            })
            .collect()
    }
}

/// The upper-check parities of an assignment: the network-coded bits the
/// relay forwards to the destination.
pub fn relay_parity(g: &TannerGraph, bits: &[bool]) -> Vec<bool> {
    g.check_parities(bits)[g.upper_offset()..].to_vec()
}

/// Integer node counts summing exactly to `total`, by largest remainder.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut have: usize = counts.iter().sum();
    let mut i = 0;
    while have < total {
        counts[order[i % order.len()]] += 1;
        have += 1;
        i += 1;
    }
    // A slightly over-unit weight sum can overshoot; trim from the smallest
    // fractional parts.
    let mut j = order.len();
    while have > total {
        j = if j == 0 { order.len() - 1 } else { j - 1 };
        if counts[order[j]] > 0 {
            counts[order[j]] -= 1;
            have -= 1;
        }
    }
    counts
}

/// Spreads `want` extra sockets (or removals, when negative) one at a time
/// over the checks selected by `eligible`.
fn adjust_sockets(
    degs: &mut [usize],
    mut want: i64,
    eligible: impl Fn(usize) -> bool,
) -> Result<()> {
    let slots: Vec<usize> = (0..degs.len()).filter(|&i| eligible(i)).collect();
    if slots.is_empty() && want != 0 {
        return Err(Error::Precondition(
            "socket imbalance with no checks to absorb it".into(),
        ));
    }
    let mut i = 0;
    let mut stuck = 0;
    while want != 0 {
        let k = slots[i % slots.len()];
        i += 1;
        if want > 0 {
            degs[k] += 1;
            want -= 1;
            stuck = 0;
        } else if degs[k] > 1 {
            degs[k] -= 1;
            want += 1;
            stuck = 0;
        } else {
            stuck += 1;
            if stuck > slots.len() {
                return Err(Error::Precondition(
                    "socket imbalance larger than the available check degrees".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Pairs variable sockets with a shuffled list of check sockets, then swaps
/// away repeated (variable, check) pairs for a few rounds.
fn wire_bundle(
    vars: &[u32],
    checks: &mut [u32],
    rng: &mut ChaCha8Rng,
    edges: &mut Vec<(u32, u32)>,
) {
    debug_assert_eq!(vars.len(), checks.len());
    if vars.is_empty() {
        return;
    }
    checks.shuffle(rng);
    for _ in 0..50 {
        let mut seen = std::collections::HashSet::with_capacity(vars.len());
        let mut dups = Vec::new();
        for i in 0..vars.len() {
            if !seen.insert((vars[i], checks[i])) {
                dups.push(i);
            }
        }
        if dups.is_empty() {
            break;
        }
        for i in dups {
            let j = rng.random_range(0..checks.len());
            checks.swap(i, j);
        }
    }
    // Any pair still repeated is kept; it only weakens that one check.
    edges.extend(vars.iter().copied().zip(checks.iter().copied()));
}

/// Samples an `n`-variables-per-source realization of the profile with the
/// configuration model. Node counts follow the coefficients by largest
/// remainder; rounding leftovers are absorbed by giving a few checks one
/// socket more or less than their nominal degree.
pub fn sample_graph(profile: &MultiEdgeProfile, n: usize, seed: u64) -> Result<TannerGraph> {
    profile.validate()?;
    if n < 100 {
        return Err(Error::Precondition(
            "graph sampling needs at least 100 variable nodes per source".into(),
        ));
    }
    let m_cnt = profile.sources;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));

    // Variable nodes: per-source degree pair of every node.
    let mut var_d1 = vec![Vec::new(); m_cnt];
    let mut var_d2 = vec![Vec::new(); m_cnt];
    for m in 0..m_cnt {
        let weights: Vec<f64> = profile.vars[m].iter().map(|e| e.coeff).collect();
        let counts = apportion(n, &weights);
        for (e, &c) in profile.vars[m].iter().zip(&counts) {
            for _ in 0..c {
                var_d1[m].push(e.d1);
                var_d2[m].push(e.d2);
            }
        }
    }

    // Check nodes, with integer degrees adjusted to match the variable
    // socket totals exactly.
    let mut lower_degs = vec![Vec::new(); m_cnt];
    for m in 0..m_cnt {
        for e in &profile.lowers[m] {
            let mut count = (e.coeff * n as f64).round() as usize;
            if count == 0 && e.coeff > 0.0 {
                count = 1;
            }
            lower_degs[m].extend(std::iter::repeat_n(e.d1, count));
        }
        let have: i64 = lower_degs[m].iter().map(|&d| d as i64).sum();
        let need: i64 = var_d1[m].iter().map(|&d| d as i64).sum();
        if need > 0 && lower_degs[m].is_empty() {
            return Err(Error::Precondition(format!(
                "source {} has lower sockets but no lower checks",
                m + 1
            )));
        }
        adjust_sockets(&mut lower_degs[m], need - have, |_| true)?;
    }
    let mut upper_degs: Vec<Vec<usize>> = Vec::new();
    for e in &profile.uppers {
        let mut count = (e.coeff * n as f64).round() as usize;
        if count == 0 && e.coeff > 0.0 {
            count = 1;
        }
        upper_degs.extend(std::iter::repeat_n(e.degrees.clone(), count));
    }
    for m in 0..m_cnt {
        let have: i64 = upper_degs.iter().map(|d| d[m] as i64).sum();
        let need: i64 = var_d2[m].iter().map(|&d| d as i64).sum();
        if need > 0 && !upper_degs.iter().any(|d| d[m] > 0) {
            return Err(Error::Precondition(format!(
                "source {} has upper sockets but no shared checks toward it",
                m + 1
            )));
        }
        let mut col: Vec<usize> = upper_degs.iter().map(|d| d[m]).collect();
        let snapshot = col.clone();
        adjust_sockets(&mut col, need - have, |i| snapshot[i] > 0)?;
        for (d, c) in upper_degs.iter_mut().zip(col) {
            d[m] = c;
        }
    }

    // Global ids.
    let lower_counts: Vec<usize> = lower_degs.iter().map(Vec::len).collect();
    let lower_offsets: Vec<usize> = lower_counts
        .iter()
        .scan(0, |acc, &c| {
            let at = *acc;
            *acc += c;
            Some(at)
        })
        .collect();
    let upper_offset: usize = lower_counts.iter().sum();
    let check_count = upper_offset + upper_degs.len();

    // Wire each edge bundle independently.
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for m in 0..m_cnt {
        let mut vs = Vec::new();
        for (i, &d) in var_d1[m].iter().enumerate() {
            vs.extend(std::iter::repeat_n((m * n + i) as u32, d));
        }
        let mut cs = Vec::new();
        for (i, &d) in lower_degs[m].iter().enumerate() {
            cs.extend(std::iter::repeat_n((lower_offsets[m] + i) as u32, d));
        }
        wire_bundle(&vs, &mut cs, &mut rng, &mut edges);
    }
    for m in 0..m_cnt {
        let mut vs = Vec::new();
        for (i, &d) in var_d2[m].iter().enumerate() {
            vs.extend(std::iter::repeat_n((m * n + i) as u32, d));
        }
        let mut cs = Vec::new();
        for (i, degs) in upper_degs.iter().enumerate() {
            cs.extend(std::iter::repeat_n((upper_offset + i) as u32, degs[m]));
        }
        wire_bundle(&vs, &mut cs, &mut rng, &mut edges);
    }

    // Compressed adjacency, edges grouped by check.
    let mut check_start = vec![0usize; check_count + 1];
    for &(_, c) in &edges {
        check_start[c as usize + 1] += 1;
    }
    for i in 1..=check_count {
        check_start[i] += check_start[i - 1];
    }
    let mut fill = check_start.clone();
    let mut edge_var = vec![0u32; edges.len()];
    for &(v, c) in &edges {
        edge_var[fill[c as usize]] = v;
        fill[c as usize] += 1;
    }
    let total_vars = m_cnt * n;
    let mut var_start = vec![0usize; total_vars + 1];
    for &v in &edge_var {
        var_start[v as usize + 1] += 1;
    }
    for i in 1..=total_vars {
        var_start[i] += var_start[i - 1];
    }
    let mut vfill = var_start.clone();
    let mut var_edge = vec![0u32; edges.len()];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edge[vfill[v as usize]] = e as u32;
        vfill[v as usize] += 1;
    }
    let var_source = (0..total_vars).map(|v| (v / n) as u32).collect();

    Ok(TannerGraph {
        sources: m_cnt,
        n,
        lower_counts,
        upper_count: upper_degs.len(),
        var_source,
        check_start,
        edge_var,
        var_start,
        var_edge,
    })
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

// Fixed-step interpolation tables for the check update. Both curves are
// smooth and the steps are fine enough that the interpolation error
// (< 1e-7) is far below the message noise BP tolerates.
const TANH_STEP: f64 = 50.0 / 65536.0;
const ATANH_CUT: f64 = 0.875;
const ATANH_STEP: f64 = ATANH_CUT / 8192.0;

fn check_tables() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static TABLES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let tanh: Vec<f64> = (0..=65536 + 1)
            .map(|i| (0.5 * i as f64 * TANH_STEP).tanh())
            .collect();
        let atanh: Vec<f64> = (0..=8192 + 1)
            .map(|i| (i as f64 * ATANH_STEP).min(ATANH_CUT).atanh())
            .collect();
        (tanh, atanh)
    })
}

/// tanh(|m|/2) for |m| <= LLR_CLAMP, by table.
#[inline]
fn tanh_half(table: &[f64], mag: f64) -> f64 {
    let t = mag / TANH_STEP;
    let i = t as usize;
    let frac = t - i as f64;
    table[i] + frac * (table[i + 1] - table[i])
}

/// 2 atanh(|p|), clamped: table below ATANH_CUT, exact log form above.
#[inline]
fn two_atanh(table: &[f64], mag: f64) -> f64 {
    if mag < ATANH_CUT {
        let t = mag / ATANH_STEP;
        let i = t as usize;
        let frac = t - i as f64;
        2.0 * (table[i] + frac * (table[i + 1] - table[i]))
    } else {
        (((1.0 + mag) / (1.0 - mag)).ln()).min(LLR_CLAMP)
    }
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub bits: Vec<bool>,
    /// Whether the hard decisions met every check target.
    pub converged: bool,
    pub iterations: usize,
    /// Checks still missing their target when decoding stopped.
    pub unsatisfied: usize,
}

/// Sum-product decoding with a check-serial schedule: each check update
/// reads the freshest variable totals, which reaches the same fixed points
/// as a flooding schedule in roughly half the sweeps. `upper_parity` holds
/// the forwarded target parity of each upper check; lower checks must come
/// out even. Stops as soon as the hard decisions satisfy every target, or
/// once the unsatisfied-check count stops improving.
///
/// Messages at the clamp are a fixed point of the update (tanh at half the
/// clamp rounds to 1), so checks whose inputs all sit at the clamp are
/// resolved with sign arithmetic alone; the result is identical to the
/// full update.
pub fn bp_decode(
    g: &TannerGraph,
    channel_llr: &[f64],
    upper_parity: &[bool],
    max_iters: usize,
) -> DecodeOutcome {
    assert_eq!(channel_llr.len(), g.total_vars());
    assert_eq!(upper_parity.len(), g.upper_count);
    let nc = g.check_count();
    let nv = g.total_vars();
    let upper_at = g.upper_offset();
    let target = |c: usize| c >= upper_at && upper_parity[c - upper_at];
    let (tanh_table, atanh_table) = check_tables();

    // Invariant: totals[v] = channel_llr[v] + sum of msg_cv into v.
    let mut msg_cv = vec![0.0f64; g.edge_count()];
    let mut totals = channel_llr.to_vec();

    let max_deg = (0..nc).map(|c| g.check_edges(c).len()).max().unwrap_or(0);
    let mut in_buf = vec![0.0f64; max_deg];
    let mut tanh_buf = vec![0.0f64; max_deg];
    let mut suffix = vec![0.0f64; max_deg + 1];
    let mut bits = vec![false; nv];
    let mut best_unsat = usize::MAX;
    let mut final_unsat = usize::MAX;
    let mut last_gain = 0usize;
    let mut iterations = 0;

    for iter in 1..=max_iters {
        iterations = iter;
        for c in 0..nc {
            let es = g.check_edges(c);
            let k = es.len();
            let mut all_clamped = true;
            let mut negatives = if target(c) { 1u32 } else { 0 };
            for (i, e) in es.clone().enumerate() {
                let m = (totals[g.edge_var[e] as usize] - msg_cv[e])
                    .clamp(-LLR_CLAMP, LLR_CLAMP);
                in_buf[i] = m;
                all_clamped &= m.abs() == LLR_CLAMP;
                negatives += u32::from(m < 0.0);
            }
            if all_clamped {
                for (i, e) in es.enumerate() {
                    let flips = negatives - u32::from(in_buf[i] < 0.0);
                    let out = if flips % 2 == 0 { LLR_CLAMP } else { -LLR_CLAMP };
                    totals[g.edge_var[e] as usize] += out - msg_cv[e];
                    msg_cv[e] = out;
                }
                continue;
            }
            for i in 0..k {
                tanh_buf[i] = tanh_half(tanh_table, in_buf[i].abs());
            }
            suffix[k] = 1.0;
            for i in (0..k).rev() {
                suffix[i] = suffix[i + 1] * tanh_buf[i];
            }
            let mut prefix = 1.0;
            for (i, e) in es.enumerate() {
                let others = prefix * suffix[i + 1];
                let flips = negatives - u32::from(in_buf[i] < 0.0);
                let mag = two_atanh(atanh_table, others.min(1.0));
                let out = if flips % 2 == 0 { mag } else { -mag };
                totals[g.edge_var[e] as usize] += out - msg_cv[e];
                msg_cv[e] = out;
                prefix *= tanh_buf[i];
            }
        }
        // Decisions and syndrome. totals already hold the posterior LLRs.
        for v in 0..nv {
            bits[v] = totals[v] < 0.0;
        }
        let mut unsat = 0usize;
        for c in 0..nc {
            let mut parity = false;
            for e in g.check_edges(c) {
                parity ^= bits[g.edge_var[e] as usize];
            }
            unsat += usize::from(parity != target(c));
        }
        final_unsat = unsat;
        if unsat == 0 {
            return DecodeOutcome {
                bits,
                converged: true,
                iterations,
                unsatisfied: 0,
            };
        }
        if unsat < best_unsat {
            best_unsat = unsat;
            last_gain = iter;
        } else if iter - last_gain >= FAIL_WINDOW {
            break;
        }
    }
    DecodeOutcome {
        bits,
        converged: false,
        iterations,
        unsatisfied: final_unsat,
    }
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// GF(2) row-reduced encoder for one source's lower code, built from the
/// sampled graph so it matches the realization exactly (parallel edges
/// cancel). Row reduction is cubic; meant for modest block lengths.
struct Encoder {
    free: Vec<usize>,
    /// (pivot column, free columns with a 1) per reduced row.
    rows: Vec<(usize, Vec<usize>)>,
}

impl Encoder {
    fn for_source(g: &TannerGraph, m: usize) -> Encoder {
        let n = g.n;
        let words = n.div_ceil(64);
        let offset: usize = g.lower_counts[..m].iter().sum();
        let mut mat: Vec<Vec<u64>> = Vec::with_capacity(g.lower_counts[m]);
        for c in offset..offset + g.lower_counts[m] {
            let mut row = vec![0u64; words];
            for &v in &g.edge_var[g.check_edges(c)] {
                let local = v as usize - m * n;
                row[local / 64] ^= 1u64 << (local % 64);
            }
            mat.push(row);
        }
        let bit = |row: &[u64], col: usize| row[col / 64] >> (col % 64) & 1 == 1;
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(p) = (r..mat.len()).find(|&i| bit(&mat[i], col)) else {
                continue;
            };
            mat.swap(r, p);
            for i in 0..mat.len() {
                if i != r && bit(&mat[i], col) {
                    let (a, b) = if i < r {
                        let (lo, hi) = mat.split_at_mut(r);
                        (&mut lo[i], &hi[0])
                    } else {
                        let (lo, hi) = mat.split_at_mut(i);
                        (&mut hi[0], &lo[r])
                    };
                    for (x, y) in a.iter_mut().zip(b) {
                        *x ^= y;
                    }
                }
            }
            pivots.push(col);
            r += 1;
            if r == mat.len() {
                break;
            }
        }
        let is_pivot = {
            let mut mask = vec![false; n];
            for &p in &pivots {
                mask[p] = true;
            }
            mask
        };
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let rows = pivots
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let ones = free.iter().copied().filter(|&c| bit(&mat[i], c)).collect();
                (p, ones)
            })
            .collect();
        Encoder { free, rows }
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut bits = vec![false; n];
        for &c in &self.free {
            bits[c] = rng.random::<bool>();
        }
        for (pivot, ones) in &self.rows {
            bits[*pivot] = ones.iter().fold(false, |p, &c| p ^ bits[c]);
        }
        bits
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodewordMode {
    /// Send the all-zero codeword every trial.
    #[default]
    AllZero,
    /// Sample a random codeword of each lower code per trial. Builds a
    /// row-reduced encoder first, which is only practical for modest `n`.
    Random,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub trials: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub mode: CodewordMode,
    /// Stop launching trials once this many bit errors have been counted
    /// (0 disables). The completed trial still counts in full.
    pub early_stop_errors: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: 100,
            max_iters: 200,
            seed: 1,
            mode: CodewordMode::AllZero,
            early_stop_errors: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimReport {
    /// Trials actually run (less than requested only under early stop).
    pub trials: usize,
    pub bits_per_trial: usize,
    pub bit_errors: u64,
    pub frame_errors: usize,
    pub converged_trials: usize,
    pub mean_iterations: f64,
    pub ber: f64,
    /// 95% Wilson interval for the bit error rate.
    pub ci: (f64, f64),
    /// Per-source tallies; a source's frame errs when its block has an
    /// erroneous bit.
    pub per_source_bit_errors: Vec<u64>,
    pub per_source_ber: Vec<f64>,
    pub per_source_frame_errors: Vec<usize>,
    /// Bit errors of each trial, for paired comparisons across runs with
    /// the same seed.
    pub per_trial_bit_errors: Vec<u32>,
}

/// 95% Wilson score interval for `errors` successes in `total` draws.
pub fn wilson_95(errors: u64, total: u64) -> (f64, f64) {
    let z = 1.959964;
    let n = total as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte-Carlo transmission over per-source Gaussian channels with noise
/// deviations `sigmas`. Trial `t` draws from the sub-stream `(1, t)` of
/// the seed, so runs with the same seed are paired trial by trial.
pub fn simulate_ber(g: &TannerGraph, sigmas: &[f64], cfg: &SimConfig) -> Result<SimReport> {
    if sigmas.len() != g.sources {
        return Err(Error::Precondition(format!(
            "{} noise deviations for {} sources",
            sigmas.len(),
            g.sources
        )));
    }
    if sigmas.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("noise deviations must be positive".into()));
    }
    if cfg.trials == 0 || cfg.max_iters == 0 {
        return Err(Error::Domain("trials and max_iters must be positive".into()));
    }
    let encoders: Vec<Encoder> = match cfg.mode {
        CodewordMode::AllZero => Vec::new(),
        CodewordMode::Random => (0..g.sources).map(|m| Encoder::for_source(g, m)).collect(),
    };

    let total_vars = g.total_vars();
    let mut bit_errors = 0u64;
    let mut frame_errors = 0usize;
    let mut converged_trials = 0usize;
    let mut iter_sum = 0usize;
    let mut per_trial = Vec::with_capacity(cfg.trials);
    let mut src_bits = vec![0u64; g.sources];
    let mut src_frames = vec![0usize; g.sources];
    let mut llr = vec![0.0f64; total_vars];
    let zero = vec![false; total_vars];
    let no_parity = vec![false; g.upper_count];

    for t in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, 1, t as u64));
        let (sent, parity) = match cfg.mode {
            CodewordMode::AllZero => (zero.clone(), no_parity.clone()),
            CodewordMode::Random => {
                let mut bits = Vec::with_capacity(total_vars);
                for enc in &encoders {
                    bits.extend(enc.sample(g.n, &mut rng));
                }
                let parity = relay_parity(g, &bits);
                (bits, parity)
            }
        };
        for v in 0..total_vars {
            let sigma = sigmas[g.source_of(v)];
            let x = if sent[v] { -1.0 } else { 1.0 };
            let noise: f64 = rng.sample(StandardNormal);
            llr[v] = 2.0 * (x + sigma * noise) / (sigma * sigma);
        }
        let out = bp_decode(g, &llr, &parity, cfg.max_iters);
        let mut errors = 0usize;
        for m in 0..g.sources {
            let block = m * g.n..(m + 1) * g.n;
            let wrong = out.bits[block.clone()]
                .iter()
                .zip(&sent[block])
                .filter(|(a, b)| a != b)
                .count();
            src_bits[m] += wrong as u64;
            src_frames[m] += usize::from(wrong > 0);
            errors += wrong;
        }
        bit_errors += errors as u64;
        if errors > 0 {
            frame_errors += 1;
        }
        if out.converged {
            converged_trials += 1;
        }
        iter_sum += out.iterations;
        per_trial.push(errors as u32);
        if cfg.early_stop_errors > 0 && bit_errors >= cfg.early_stop_errors {
            break;
        }
    }

    let trials = per_trial.len();
    let total_bits = (trials * total_vars) as u64;
    let block_bits = (trials * g.n) as u64;
    Ok(SimReport {
        trials,
        bits_per_trial: total_vars,
        bit_errors,
        frame_errors,
        converged_trials,
        mean_iterations: iter_sum as f64 / trials as f64,
        ber: bit_errors as f64 / total_bits as f64,
        ci: wilson_95(bit_errors, total_bits),
        per_source_ber: src_bits.iter().map(|&b| b as f64 / block_bits as f64).collect(),
        per_source_bit_errors: src_bits,
        per_source_frame_errors: src_frames,
        per_trial_bit_errors: per_trial,
    })
}
