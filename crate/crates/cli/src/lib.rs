//! Command-line front door. Every subcommand reads text inputs, runs one
//! library operation, and emits plot-ready CSV or profile text. Identical
//! arguments and seeds produce byte-identical output.
//!
//! Exit codes: 0 on success, 2 on usage or syntax errors, 1 on everything
//! else (domain, semantic, infeasibility, i/o).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use relay_ldpc::capacity::{optimize_alpha, RelayLinkParams};
use relay_ldpc::ensemble::{DeclaredRates, LowerCheckEntry, MultiEdgeProfile};
use relay_ldpc::exit::{run_exit, threshold_search, ExitConfig, UpdateRule};
use relay_ldpc::mi::JKind;
use relay_ldpc::optimizer::{optimize, SearchSpec};
use relay_ldpc::profile_io::{parse, serialize, verify, ProfileDocument};
use relay_ldpc::tanner::{sample_graph, simulate_ber, wilson_95, CodewordMode, SimConfig};
use relay_ldpc::{Error, Result};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "relay-ldpc",
    version,
    about = "Workbench for network-coded multi-edge-type LDPC profiles on a relay uplink"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rates of the decode-and-forward relay link, optimizing the source's
    /// power split unless the params file fixes one.
    Capacity {
        /// JSON file with p, p1, n1, n2 and optionally alpha.
        params: PathBuf,
        /// Emit a CSV sweep over this many alpha steps instead of a single row.
        #[arg(long)]
        sweep: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a profile document against its own declared figures.
    Verify { profile: PathBuf },
    /// Iteration-by-iteration MI trajectory at a fixed noise point.
    Exit {
        profile: PathBuf,
        /// Per-source channel noise deviations, comma separated.
        #[arg(long)]
        sigmas: String,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps_conv: f64,
        #[arg(long, value_enum, default_value_t = RuleOpt::Mixture)]
        rule: RuleOpt,
        #[arg(long, value_enum, default_value_t = JOpt::Quadrature)]
        j: JOpt,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Largest decodable noise scale along a per-source ray.
    Threshold {
        profile: PathBuf,
        /// Ray direction: one positive weight per source, comma separated.
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = RuleOpt::Mixture)]
        rule: RuleOpt,
        #[arg(long, value_enum, default_value_t = JOpt::Quadrature)]
        j: JOpt,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search for a profile maximizing the joint decoding threshold.
    Optimize {
        /// JSON search space; see the README for the schema.
        search: PathBuf,
        /// Where to write the best profile (stdout otherwise).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Where to write per-generation progress as JSON lines.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Overrides the seed in the search file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo transmission over a sampled code graph.
    Simulate {
        profile: PathBuf,
        /// Codeword bits per source.
        #[arg(long)]
        n: usize,
        /// Per-source channel noise deviations, comma separated.
        #[arg(long)]
        sigmas: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        graph_seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Send random codewords instead of the all-zero word.
        #[arg(long)]
        random_codewords: bool,
        /// Stop launching trials once this many bit errors accumulate.
        #[arg(long, default_value_t = 0)]
        early_stop: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit the non-cooperative variant of a profile: every shared check
    /// split into per-source checks.
    Separate {
        profile: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleOpt {
    /// Mix per-degree-class MI values.
    Mixture,
    /// Average LLR variances across classes.
    Variance,
}

impl From<RuleOpt> for UpdateRule {
    fn from(r: RuleOpt) -> Self {
        match r {
            RuleOpt::Mixture => UpdateRule::MiMixture,
            RuleOpt::Variance => UpdateRule::VarianceAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum JOpt {
    /// Gauss-Hermite evaluation of the defining integral.
    Quadrature,
    /// Two-piece curve fit.
    ClosedForm,
}

impl From<JOpt> for JKind {
    fn from(j: JOpt) -> Self {
        match j {
            JOpt::Quadrature => JKind::Quadrature,
            JOpt::ClosedForm => JKind::ClosedForm,
        }
    }
}

pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Syntax { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Capacity { params, sweep, output } => cmd_capacity(&params, sweep, output.as_deref()),
        Cmd::Verify { profile } => cmd_verify(&profile),
        Cmd::Exit { profile, sigmas, max_iters, eps_conv, rule, j, output } => {
            cmd_exit(&profile, &sigmas, max_iters, eps_conv, rule, j, output.as_deref())
        }
        Cmd::Threshold { profile, weights, tol, rule, j, output } => {
            cmd_threshold(&profile, &weights, tol, rule, j, output.as_deref())
        }
        Cmd::Optimize { search, output, audit, seed } => {
            cmd_optimize(&search, output.as_deref(), audit.as_deref(), seed)
        }
        Cmd::Simulate {
            profile,
            n,
            sigmas,
            trials,
            seed,
            graph_seed,
            max_iters,
            random_codewords,
            early_stop,
            output,
        } => cmd_simulate(
            &profile,
            n,
            &sigmas,
            trials,
            seed,
            graph_seed,
            max_iters,
            random_codewords,
            early_stop,
            output.as_deref(),
        ),
        Cmd::Separate { profile, output } => cmd_separate(&profile, output.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// 9 significant digits, the workbench-wide CSV precision.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_profile(path: &Path) -> Result<MultiEdgeProfile> {
    parse(&fs::read_to_string(path)?)?.to_profile()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("{what}: cannot parse `{t}` as a number")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ParamsFile {
    p: f64,
    #[serde(default)]
    p1: f64,
    n1: f64,
    #[serde(default)]
    n2: f64,
    #[serde(default)]
    alpha: Option<f64>,
}

fn cmd_capacity(path: &Path, sweep: Option<usize>, output: Option<&Path>) -> Result<()> {
    let pf: ParamsFile = read_json(path)?;
    let row = |a: f64| -> Result<String> {
        let r = RelayLinkParams::new(pf.p, pf.p1, pf.n1, pf.n2, a)?.rates();
        Ok(format!(
            "{},{},{},{},{}",
            sig9(a),
            sig9(r.r_plus),
            sig9(r.r_one),
            sig9(r.r_minus),
            sig9(r.achievable())
        ))
    };

    let mut text = String::new();
    let _ = writeln!(text, "# p={} p1={} n1={} n2={}", pf.p, pf.p1, pf.n1, pf.n2);
    if pf.alpha.is_none() || sweep.is_some() {
        if pf.alpha.is_none() {
            let opt = optimize_alpha(pf.p, pf.p1, pf.n1, pf.n2)?;
            let _ = writeln!(
                text,
                "# optimum: alpha={} rate={}",
                sig9(opt.alpha),
                sig9(opt.rate)
            );
        }
    } else {
        let _ = writeln!(text, "# fixed power split");
    }
    text.push_str("alpha,r_plus,r_one,r_minus,achievable\n");
    match sweep {
        Some(0) => {
            return Err(Error::Precondition("--sweep needs at least one step".into()));
        }
        Some(k) => {
            for i in 0..=k {
                text.push_str(&row(i as f64 / k as f64)?);
                text.push('\n');
            }
        }
        None => {
            let a = match pf.alpha {
                Some(a) => a,
                None => optimize_alpha(pf.p, pf.p1, pf.n1, pf.n2)?.alpha,
            };
            text.push_str(&row(a)?);
            text.push('\n');
        }
    }
    emit(output, &text)
}

fn cmd_verify(path: &Path) -> Result<()> {
    let doc = parse(&fs::read_to_string(path)?)?;
    let report = verify(&doc)?;
    println!("profile: {}", path.display());
    println!(
        "constraints: max residual {:.3e}",
        report.constraints.max_residual()
    );
    for item in &report.constraints.items {
        println!("  {}: {:.3e}", item.name, item.residual);
    }
    for s in &report.sources {
        let c = s.computed;
        println!(
            "source {}: r_plus {} r_one {} r_minus {}",
            s.source,
            sig9(c.r_plus),
            sig9(c.r_one),
            sig9(c.r_minus)
        );
        for r in &s.rate_residuals {
            println!("  {} off by {:.3e}", r.name, r.residual);
        }
    }
    println!("total rate: {}", sig9(report.total_rate));
    if let Some(s) = report.sigma_sys_declared {
        println!("declared noise figure: {}", sig9(s));
    }
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    if report.pass {
        Ok(())
    } else {
        Err(Error::Semantic(
            "declared figures disagree with the computed ones".into(),
        ))
    }
}

fn cmd_exit(
    path: &Path,
    sigmas: &str,
    max_iters: usize,
    eps_conv: f64,
    rule: RuleOpt,
    j: JOpt,
    output: Option<&Path>,
) -> Result<()> {
    let profile = load_profile(path)?;
    let sig = parse_list(sigmas, "--sigmas")?;
    let cfg = ExitConfig {
        j: j.into(),
        rule: rule.into(),
        eps_conv,
        max_iters,
        record_trajectory: true,
        ..ExitConfig::default()
    };
    let out = run_exit(&profile, &sig, &cfg)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "# profile={} sigmas={} rule={:?} j={:?} eps_conv={} max_iters={}",
        path.display(),
        sigmas,
        cfg.rule,
        cfg.j,
        eps_conv,
        max_iters
    );
    text.push_str("iteration,source,i_ev1,i_ev2,i_ec1,i_ec2,i_app\n");
    for r in &out.trajectory {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.source,
            sig9(r.i_ev1),
            sig9(r.i_ev2),
            sig9(r.i_ec1),
            sig9(r.i_ec2),
            sig9(r.i_app)
        );
    }
    let finals: Vec<String> = out.final_app.iter().map(|&v| sig9(v)).collect();
    let _ = writeln!(
        text,
        "# converged={} iterations={} final_app={}",
        out.converged,
        out.iterations,
        finals.join(",")
    );
    emit(output, &text)
}

fn cmd_threshold(
    path: &Path,
    weights: &str,
    tol: f64,
    rule: RuleOpt,
    j: JOpt,
    output: Option<&Path>,
) -> Result<()> {
    let profile = load_profile(path)?;
    let w = parse_list(weights, "--weights")?;
    let cfg = ExitConfig {
        j: j.into(),
        rule: rule.into(),
        ..ExitConfig::default()
    };
    let res = threshold_search(&profile, &w, tol, &cfg)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "# profile={} weights={} tol={} rule={:?} j={:?}",
        path.display(),
        weights,
        tol,
        cfg.rule,
        cfg.j
    );
    let mut header = String::from("t_star,sigma_sys");
    let mut row = format!("{},{}", sig9(res.t_star), sig9(res.sigma_sys));
    for (m, s) in res.sigmas.iter().enumerate() {
        let _ = write!(header, ",sigma_{}", m + 1);
        let _ = write!(row, ",{}", sig9(*s));
    }
    let _ = writeln!(text, "{header}");
    let _ = writeln!(text, "{row}");
    emit(output, &text)
}

#[derive(Deserialize)]
struct LowerEntryFile {
    coeff: f64,
    d1: usize,
}

#[derive(Deserialize)]
struct SearchFile {
    lowers: Vec<Vec<LowerEntryFile>>,
    d1_sets: Vec<Vec<usize>>,
    d2_values: Vec<usize>,
    upper_degrees: Vec<Vec<usize>>,
    r1_targets: Vec<f64>,
    weights: Vec<f64>,
    #[serde(default)]
    relay_budget: Option<f64>,
    #[serde(default)]
    population: Option<usize>,
    #[serde(default)]
    generations: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    fitness_tol: Option<f64>,
    #[serde(default)]
    final_tol: Option<f64>,
    /// Profiles whose genomes seed the initial population.
    #[serde(default)]
    warm_profiles: Vec<PathBuf>,
}

fn cmd_optimize(
    path: &Path,
    output: Option<&Path>,
    audit: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let sf: SearchFile = read_json(path)?;
    let lowers = sf
        .lowers
        .iter()
        .map(|src| {
            src.iter()
                .map(|e| LowerCheckEntry { coeff: e.coeff, d1: e.d1 })
                .collect()
        })
        .collect();
    let mut spec = SearchSpec::new(
        lowers,
        sf.d1_sets,
        sf.d2_values,
        sf.upper_degrees,
        sf.r1_targets,
        sf.weights,
    );
    spec.relay_budget = sf.relay_budget;
    if let Some(v) = sf.population {
        spec.population = v;
    }
    if let Some(v) = sf.generations {
        spec.generations = v;
    }
    if let Some(v) = sf.seed {
        spec.seed = v;
    }
    if let Some(v) = sf.fitness_tol {
        spec.fitness_tol = v;
    }
    if let Some(v) = sf.final_tol {
        spec.final_tol = v;
    }
    if let Some(v) = seed {
        spec.seed = v;
    }
    for wp in &sf.warm_profiles {
        let warm = load_profile(wp)?;
        let genome = spec.genome_of(&warm)?;
        spec.warm_starts.push(genome);
    }

    let out = optimize(&spec)?;
    if let Some(ap) = audit {
        let mut lines = String::new();
        for a in &out.audit {
            lines.push_str(&serde_json::to_string(a).expect("audit record serializes"));
            lines.push('\n');
        }
        fs::write(ap, lines)?;
    }

    let mut best = out.profile;
    for m in 0..best.sources {
        let rt = best.rates(m)?;
        best.declared[m] = DeclaredRates {
            r_plus: Some(rt.r_plus),
            r_minus: Some(rt.r_minus),
            sigma_plus: None,
            sigma_minus: Some(out.t_star * spec.weights[m]),
        };
    }
    let mut text = format!(
        "# searched {} generations, population {}, seed {}\n# sigma_sys={} t_star={}\n",
        spec.generations,
        spec.population,
        spec.seed,
        sig9(out.sigma_sys),
        sig9(out.t_star)
    );
    text.push_str(&serialize(&ProfileDocument::from_profile(&best)?));
    emit(output, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    n: usize,
    sigmas: &str,
    trials: usize,
    seed: u64,
    graph_seed: u64,
    max_iters: usize,
    random_codewords: bool,
    early_stop: u64,
    output: Option<&Path>,
) -> Result<()> {
    let profile = load_profile(path)?;
    let sig = parse_list(sigmas, "--sigmas")?;
    let g = sample_graph(&profile, n, graph_seed)?;
    let cfg = SimConfig {
        trials,
        max_iters,
        seed,
        mode: if random_codewords {
            CodewordMode::Random
        } else {
            CodewordMode::AllZero
        },
        early_stop_errors: early_stop,
    };
    let rep = simulate_ber(&g, &sig, &cfg)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "# profile={} n={} trials={} seed={} graph_seed={} sigmas={} max_iters={} mode={:?}",
        path.display(),
        n,
        trials,
        seed,
        graph_seed,
        sigmas,
        max_iters,
        cfg.mode
    );
    let _ = writeln!(
        text,
        "# converged_trials={} of {} mean_iterations={:.3}",
        rep.converged_trials, rep.trials, rep.mean_iterations
    );
    text.push_str("source,bits,bit_errors,ber,ci_lo,ci_hi,frame_errors,fer\n");
    let per_bits = (rep.trials * n) as u64;
    for m in 0..profile.sources {
        let ci = wilson_95(rep.per_source_bit_errors[m], per_bits);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            m + 1,
            per_bits,
            rep.per_source_bit_errors[m],
            sig9(rep.per_source_ber[m]),
            sig9(ci.0),
            sig9(ci.1),
            rep.per_source_frame_errors[m],
            sig9(rep.per_source_frame_errors[m] as f64 / rep.trials as f64)
        );
    }
    let _ = writeln!(
        text,
        "all,{},{},{},{},{},{},{}",
        (rep.trials * rep.bits_per_trial) as u64,
        rep.bit_errors,
        sig9(rep.ber),
        sig9(rep.ci.0),
        sig9(rep.ci.1),
        rep.frame_errors,
        sig9(rep.frame_errors as f64 / rep.trials as f64)
    );
    emit(output, &text)
}

fn cmd_separate(path: &Path, output: Option<&Path>) -> Result<()> {
    let sv = load_profile(path)?.build_separate_variant()?;
    let text = serialize(&ProfileDocument::from_profile(&sv)?);
    emit(output, &text)
}
