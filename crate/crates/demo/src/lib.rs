//! Browser bindings for the profile workbench. Each export takes plain
//! scalars or profile text and returns a JSON string: either the payload
//! documented on the function, or `{"error": "..."}` on any failure, so the
//! page can report problems without catching exceptions.
//!
//! The crate also builds as a plain library, which is how its tests run.

use relay_ldpc::capacity::{optimize_alpha, RelayLinkParams};
use relay_ldpc::ensemble::MultiEdgeProfile;
use relay_ldpc::exit::{run_exit, sigma_sys, ExitConfig};
use relay_ldpc::profile_io::parse;
use relay_ldpc::Result;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// The two-source reference profile bundled with the library, for
/// preloading the page's profile editor.
#[wasm_bindgen]
pub fn bundled_profile() -> String {
    include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/profiles/two_source.profile"
    ))
    .to_string()
}

fn jsonify(result: Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn load(profile_text: &str) -> Result<MultiEdgeProfile> {
    parse(profile_text)?.to_profile()
}

fn capped_exit(max_iters: usize) -> ExitConfig {
    ExitConfig {
        max_iters,
        ..ExitConfig::default()
    }
}

/// Iteration-by-iteration MI trajectory at one noise point.
///
/// Payload: `{converged, iterations, sigma_sys, final_app: [..],
/// trajectory: [{iteration, source, i_app}, ..]}`.
#[wasm_bindgen]
pub fn exit_trajectory(profile_text: &str, sigma1: f64, sigma2: f64) -> String {
    jsonify((|| {
        let profile = load(profile_text)?;
        let sigmas: Vec<f64> = match profile.sources {
            1 => vec![sigma1],
            2 => vec![sigma1, sigma2],
            m => {
                return Err(relay_ldpc::Error::Domain(format!(
                    "the demo handles 1 or 2 sources, profile has {m}"
                )))
            }
        };
        let cfg = ExitConfig {
            record_trajectory: true,
            ..capped_exit(5000)
        };
        let out = run_exit(&profile, &sigmas, &cfg)?;
        let trajectory: Vec<Value> = out
            .trajectory
            .iter()
            .map(|r| json!({"iteration": r.iteration, "source": r.source, "i_app": r.i_app}))
            .collect();
        Ok(json!({
            "converged": out.converged,
            "iterations": out.iterations,
            "sigma_sys": sigma_sys(&sigmas)?,
            "final_app": out.final_app,
            "trajectory": trajectory,
        }))
    })())
}

/// Convergence of a two-source profile over a noise grid.
///
/// Payload: `{s1: [..], s2: [..], converged: [[bool; s1]; s2],
/// declared: [sigma1, sigma2] | null}`; `converged[i][j]` is the outcome at
/// `(s1[j], s2[i])`.
#[wasm_bindgen]
pub fn convergence_map(
    profile_text: &str,
    s1_min: f64,
    s1_max: f64,
    s2_min: f64,
    s2_max: f64,
    steps: usize,
) -> String {
    jsonify((|| {
        let profile = load(profile_text)?;
        if profile.sources != 2 {
            return Err(relay_ldpc::Error::Domain(
                "the convergence map needs a two-source profile".into(),
            ));
        }
        if !(2..=200).contains(&steps) {
            return Err(relay_ldpc::Error::Precondition(
                "steps must be between 2 and 200".into(),
            ));
        }
        if !(s1_min > 0.0 && s1_max > s1_min && s2_min > 0.0 && s2_max > s2_min) {
            return Err(relay_ldpc::Error::Precondition(
                "noise ranges must be positive and increasing".into(),
            ));
        }
        let cfg = capped_exit(2000);
        let axis = |lo: f64, hi: f64| -> Vec<f64> {
            (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        let s1 = axis(s1_min, s1_max);
        let s2 = axis(s2_min, s2_max);
        let mut rows = Vec::with_capacity(steps);
        for &b in &s2 {
            let mut row = Vec::with_capacity(steps);
            for &a in &s1 {
                row.push(run_exit(&profile, &[a, b], &cfg)?.converged);
            }
            rows.push(row);
        }
        let declared = profile
            .declared
            .iter()
            .map(|d| d.sigma_minus)
            .collect::<Option<Vec<f64>>>();
        Ok(json!({"s1": s1, "s2": s2, "converged": rows, "declared": declared}))
    })())
}

/// Decode-and-forward rates of the relay link as the source's power split
/// sweeps from all-relay to all-direct.
///
/// Payload: `{alpha: [..], r_plus: [..], relayed: [..] (r_one + r_minus),
/// achievable: [..], best: {alpha, rate}}`.
#[wasm_bindgen]
pub fn power_split(p: f64, p1: f64, n1: f64, n2: f64, steps: usize) -> String {
    jsonify((|| {
        if !(2..=2000).contains(&steps) {
            return Err(relay_ldpc::Error::Precondition(
                "steps must be between 2 and 2000".into(),
            ));
        }
        let mut alpha = Vec::with_capacity(steps);
        let mut r_plus = Vec::with_capacity(steps);
        let mut relayed = Vec::with_capacity(steps);
        let mut achievable = Vec::with_capacity(steps);
        for i in 0..steps {
            let a = i as f64 / (steps - 1) as f64;
            let r = RelayLinkParams::new(p, p1, n1, n2, a)?.rates();
            alpha.push(a);
            r_plus.push(r.r_plus);
            relayed.push(r.r_one + r.r_minus);
            achievable.push(r.achievable());
        }
        let best = optimize_alpha(p, p1, n1, n2)?;
        Ok(json!({
            "alpha": alpha,
            "r_plus": r_plus,
            "relayed": relayed,
            "achievable": achievable,
            "best": {"alpha": best.alpha, "rate": best.rate},
        }))
    })())
}
