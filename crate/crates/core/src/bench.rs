//! Benchmark sweeps: the SSR-then-SCG protocol over datasets and `γ` values.
//!
//! For each `(dataset, γ)` cell SSR runs first under the configured limits.
//! SCG then gets the SSR solve time as its time limit and targets
//! `max(Gap_SSR − 0.1%, target_gap)`. With timing disabled the SSR node
//! count replaces the time limit so results stay reproducible.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bnb::BnbOptions;
use crate::cutgen::{CutMode, GenConfigCuts};
use crate::data::{compute_gamma0, generate_synthetic, load_csv, GenConfig};
use crate::error::{input_err, Result};
use crate::model::Dataset;
use crate::oracle::{enumerate_optimal_with_budget, support_count, verify_cut_safety, DEFAULT_BUDGET};
use crate::pipeline::{run_method, CutSettings, Method, MethodRun};
use crate::relaxation::RelaxOptions;

/// Gap reduction SCG must achieve over SSR.
pub const GAP_EPS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Synthetic { id: String, synthetic: GenConfig },
    Files { id: String, x: PathBuf, y: PathBuf },
}

impl DatasetSpec {
    pub fn id(&self) -> &str {
        match self {
            DatasetSpec::Synthetic { id, .. } | DatasetSpec::Files { id, .. } => id,
        }
    }

    /// Loads the data; relative file paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<Dataset> {
        match self {
            DatasetSpec::Synthetic { synthetic, .. } => Ok(generate_synthetic(synthetic)?.dataset),
            DatasetSpec::Files { x, y, .. } => load_csv(&base.join(x), &base.join(y)),
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ssr, Method::Scg]
}

fn default_gap() -> f64 {
    crate::bnb::DEFAULT_TARGET_GAP
}

fn default_true() -> bool {
    true
}

fn default_inc_len() -> usize {
    2
}

fn default_exc_len() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutConfig {
    /// `None` means the default budget `k`.
    #[serde(default)]
    pub inc_max_cuts: Option<usize>,
    #[serde(default = "default_inc_len")]
    pub inc_max_len: usize,
    /// `None` means the default budget `d − k`.
    #[serde(default)]
    pub exc_max_cuts: Option<usize>,
    #[serde(default = "default_exc_len")]
    pub exc_max_len: usize,
}

impl Default for CutConfig {
    fn default() -> Self {
        CutConfig {
            inc_max_cuts: None,
            inc_max_len: default_inc_len(),
            exc_max_cuts: None,
            exc_max_len: default_exc_len(),
        }
    }
}

impl CutConfig {
    pub fn settings(&self, d: usize, k: usize) -> CutSettings {
        CutSettings {
            inclusive: Some(GenConfigCuts {
                mode: CutMode::Inclusive,
                max_cuts: self.inc_max_cuts.unwrap_or(k),
                max_len: self.inc_max_len,
            }),
            exclusive: Some(GenConfigCuts {
                mode: CutMode::Exclusive,
                max_cuts: self.exc_max_cuts.unwrap_or(d - k),
                max_len: self.exc_max_len,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetSpec>,
    pub gammas: Vec<f64>,
    /// Multiply each `γ` by the dataset's `γ₀`.
    #[serde(default)]
    pub gamma_relative: bool,
    pub k: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub cuts: CutConfig,
    #[serde(default = "default_gap")]
    pub target_gap: f64,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub node_limit: Option<usize>,
    /// Record wall times; off makes the CSV reproducible byte for byte.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Verify cut safety against the oracle when the instance is small.
    #[serde(default = "default_true")]
    pub oracle_check: bool,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(text)?;
        if cfg.datasets.is_empty() || cfg.gammas.is_empty() || cfg.methods.is_empty() {
            return input_err("bench config needs datasets, gammas and methods");
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Safety {
    Verified,
    Violated,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub dataset: String,
    pub gamma: f64,
    pub method: Method,
    pub n_inc: usize,
    pub n_exc: usize,
    pub l_inc: Option<f64>,
    pub l_exc: Option<f64>,
    pub none_added: bool,
    /// Seconds.
    pub t_pre: f64,
    /// Seconds.
    pub t_sol: f64,
    pub mip_gap: Option<f64>,
    pub nodes: usize,
    pub status: String,
    pub v_primal: Option<f64>,
    pub safety: Safety,
    /// `(t_SSR − t_SCG) / t_SSR`, on SCG rows only.
    pub rt_gap: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn record(id: &str, gamma: f64, run: &MethodRun, timing: bool, safety: Safety) -> BenchRecord {
    let secs = |d: Duration| if timing { d.as_secs_f64() } else { 0.0 };
    BenchRecord {
        dataset: id.to_string(),
        gamma,
        method: run.method,
        n_inc: run.n_inc,
        n_exc: run.n_exc,
        l_inc: run.l_inc,
        l_exc: run.l_exc,
        none_added: run.method != Method::Plain && run.n_inc + run.n_exc == 0,
        t_pre: secs(run.t_pre),
        t_sol: secs(run.result.wall_time),
        mip_gap: finite(run.result.mip_gap),
        nodes: run.result.nodes_explored,
        status: run.result.status.to_string(),
        v_primal: finite(run.result.v_primal),
        safety,
        rt_gap: None,
    }
}

fn check_safety(cfg: &BenchConfig, inst: &crate::model::ProblemInstance, run: &MethodRun) -> Result<Safety> {
    if !cfg.oracle_check || run.method == Method::Plain {
        return Ok(Safety::Skipped);
    }
    if support_count(inst.d(), inst.k()) > DEFAULT_BUDGET {
        return Ok(Safety::Skipped);
    }
    let oracle = enumerate_optimal_with_budget(inst, crate::oracle::DEFAULT_TOL_OPT, DEFAULT_BUDGET)?;
    Ok(if verify_cut_safety(&run.cuts, &oracle, inst.d()).is_safe() {
        Safety::Verified
    } else {
        Safety::Violated
    })
}

/// Runs the sweep. Records come out in dataset, `γ`, method order.
pub fn run_benchmark(cfg: &BenchConfig, base: &Path) -> Result<Vec<BenchRecord>> {
    let relax_opts = RelaxOptions::default();
    let limits = BnbOptions {
        target_gap: cfg.target_gap,
        node_limit: cfg.node_limit,
        time_limit: if cfg.timing {
            cfg.time_limit_s.map(Duration::from_secs_f64)
        } else {
            None
        },
        ..BnbOptions::default()
    };
    let mut records = Vec::new();
    for spec in &cfg.datasets {
        let data = spec.load(base)?;
        if cfg.k == 0 || cfg.k > data.d() {
            return input_err(format!(
                "k = {} invalid for dataset {} with d = {}",
                cfg.k,
                spec.id(),
                data.d()
            ));
        }
        let gamma0 = if cfg.gamma_relative {
            compute_gamma0(&data.x, cfg.k)?
        } else {
            1.0
        };
        let settings = cfg.cuts.settings(data.d(), cfg.k);
        for &g in &cfg.gammas {
            let gamma = g * gamma0;
            let inst = data.instance(gamma, cfg.k)?;
            let mut ssr: Option<MethodRun> = None;
            for &method in &cfg.methods {
                let mut opts = limits.clone();
                if let (Method::Scg, Some(prev)) = (method, &ssr) {
                    let gap_ssr = if prev.result.mip_gap.is_finite() {
                        prev.result.mip_gap
                    } else {
                        1.0
                    };
                    opts.target_gap = (gap_ssr - GAP_EPS).max(cfg.target_gap);
                    if cfg.timing {
                        opts.time_limit = Some(prev.result.wall_time);
                    } else {
                        opts.node_limit = Some(prev.result.nodes_explored.max(1));
                    }
                }
                let run = match run_method(&inst, method, &opts, &settings, &relax_opts) {
                    Ok(run) => run,
                    Err(e) => {
                        log::warn!("{} gamma={gamma} {method}: {e}", spec.id());
                        continue;
                    }
                };
                let safety = check_safety(cfg, &inst, &run)?;
                let mut rec = record(spec.id(), gamma, &run, cfg.timing, safety);
                if method == Method::Scg && cfg.timing {
                    if let Some(prev) = &ssr {
                        let t_ssr = prev.result.wall_time.as_secs_f64();
                        if t_ssr > 0.0 {
                            rec.rt_gap = Some((t_ssr - run.result.wall_time.as_secs_f64()) / t_ssr);
                        }
                    }
                }
                records.push(rec);
                if method == Method::Ssr {
                    ssr = Some(run);
                }
            }
        }
    }
    Ok(records)
}

pub fn write_csv(records: &[BenchRecord], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut buf = Vec::new();
    if records.is_empty() {
        return Ok(String::new());
    }
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
