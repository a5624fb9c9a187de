//! Browser bindings. Every export takes plain numbers and returns a JSON
//! string; failures come back as `{"error": "..."}`.

use scg::bnb::BnbOptions;
use scg::cutgen::{CutMode, GenConfigCuts};
use scg::data::{generate_synthetic, GenConfig};
use scg::pipeline::{run_method, screen, CutSettings, Method};
use scg::{ProblemInstance, RelaxOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest dimension the page accepts.
pub const MAX_D: usize = 300;
/// Node budget per solve so a tab never hangs.
pub const NODE_LIMIT: usize = 20_000;

fn instance(d: usize, n: usize, k: usize, seed: u64, gamma: f64) -> scg::Result<ProblemInstance> {
    if d > MAX_D {
        return Err(scg::ScgError::Input(format!(
            "d = {d} exceeds the demo limit of {MAX_D}"
        )));
    }
    let cfg = GenConfig {
        d,
        n,
        rho: 0.5,
        snr: 3.5,
        k0: k.min(d),
        seed,
    };
    generate_synthetic(&cfg)?.dataset.instance(gamma, k)
}

fn respond(v: scg::Result<Value>) -> String {
    v.unwrap_or_else(|e| json!({ "error": e.to_string() })).to_string()
}

fn no_cuts() -> CutSettings {
    CutSettings {
        inclusive: None,
        exclusive: None,
    }
}

/// Relaxation weights, bounds and single-variable fixings at one `γ`.
#[wasm_bindgen]
pub fn weights(d: usize, n: usize, k: usize, seed: u32, gamma: f64) -> String {
    respond((|| {
        let inst = instance(d, n, k, seed.into(), gamma)?;
        let sc = screen(&inst, &RelaxOptions::default(), None, &no_cuts())?;
        Ok(json!({
            "w_hat": sc.relax.w_hat,
            "z_hat": sc.relax.z_hat,
            "beta_hat": sc.relax.beta_hat,
            "v_conic": sc.relax.v_conic,
            "v_ub": sc.bounds.v_ub,
            "gap": sc.bounds.gap,
            "c_threshold": sc.bounds.c_threshold,
            "ub_support": sc.ub_support,
            "fix_zero": sc.fixings.fix_zero,
            "fix_one": sc.fixings.fix_one,
        }))
    })())
}

/// Inclusive and exclusive screening cuts at one `γ`.
#[wasm_bindgen]
pub fn cuts(d: usize, n: usize, k: usize, seed: u32, gamma: f64, max_len_inc: usize, max_len_exc: usize) -> String {
    respond((|| {
        let inst = instance(d, n, k, seed.into(), gamma)?;
        let settings = CutSettings {
            inclusive: Some(GenConfigCuts {
                max_len: max_len_inc,
                ..GenConfigCuts::inclusive_default(k)
            }),
            exclusive: Some(GenConfigCuts {
                max_len: max_len_exc,
                ..GenConfigCuts::exclusive_default(d, k)
            }),
        };
        let sc = screen(&inst, &RelaxOptions::default(), None, &settings)?;
        let family = |mode: CutMode| {
            let batch = match mode {
                CutMode::Inclusive => sc.inclusive.as_ref(),
                CutMode::Exclusive => sc.exclusive.as_ref(),
            };
            let text: Vec<String> = batch
                .map(|b| b.cuts.iter().map(|c| c.to_string()).collect())
                .unwrap_or_default();
            json!({ "mode": mode.to_string(), "cuts": text, "meta": batch.map(|b| &b.meta) })
        };
        Ok(json!({
            "gap": sc.bounds.gap,
            "c_threshold": sc.bounds.c_threshold,
            "ssr_fixed": sc.fixings.len(),
            "inclusive": family(CutMode::Inclusive),
            "exclusive": family(CutMode::Exclusive),
        }))
    })())
}

/// Branch and bound with no screening, with fixings and with cuts.
#[wasm_bindgen]
pub fn compare(d: usize, n: usize, k: usize, seed: u32, gamma: f64, target_gap: f64) -> String {
    respond((|| {
        let inst = instance(d, n, k, seed.into(), gamma)?;
        let bnb = BnbOptions {
            target_gap,
            node_limit: Some(NODE_LIMIT),
            ..BnbOptions::default()
        };
        let settings = CutSettings::defaults(d, k);
        let mut rows = Vec::new();
        for method in [Method::Plain, Method::Ssr, Method::Scg] {
            let run = run_method(&inst, method, &bnb, &settings, &RelaxOptions::default())?;
            let mut row = run.result.to_json(true);
            row["method"] = json!(method);
            row["n_inc"] = json!(run.n_inc);
            row["n_exc"] = json!(run.n_exc);
            rows.push(row);
        }
        Ok(Value::Array(rows))
    })())
}
