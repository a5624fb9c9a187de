//! Root screening followed by branch and bound, for each solve method.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::bnb::{apply_fixings, solve_from, BnbNode, BnbOptions, SolveResult};
use crate::cutgen::{generate_cuts_ctx, CutBatch, GenConfigCuts};
use crate::error::Result;
use crate::index::IndexSet;
use crate::model::ProblemInstance;
use crate::relaxation::{
    make_bounds, solve_relaxation_lenient, upper_bound, BoundsContext, Fixings, RelaxOptions, RelaxationSolution,
};
use crate::scg::{ssr_screen_ctx, ScreenContext, ScreeningCut, SsrFixings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Ssr,
    Scg,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Plain => "plain",
            Method::Ssr => "ssr",
            Method::Scg => "scg",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plain" => Ok(Method::Plain),
            "ssr" => Ok(Method::Ssr),
            "scg" => Ok(Method::Scg),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// Which cut families to generate; `None` skips a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSettings {
    pub inclusive: Option<GenConfigCuts>,
    pub exclusive: Option<GenConfigCuts>,
}

impl CutSettings {
    pub fn defaults(d: usize, k: usize) -> Self {
        CutSettings {
            inclusive: Some(GenConfigCuts::inclusive_default(k)),
            exclusive: Some(GenConfigCuts::exclusive_default(d, k)),
        }
    }
}

/// Everything derived from the root relaxation.
#[derive(Clone, Debug, Serialize)]
pub struct Screening {
    pub relax: RelaxationSolution,
    pub bounds: BoundsContext,
    pub ub_support: IndexSet,
    pub fixings: SsrFixings,
    pub inclusive: Option<CutBatch>,
    pub exclusive: Option<CutBatch>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Screening {
    /// Inclusive cuts followed by exclusive cuts.
    pub fn cuts(&self) -> Vec<ScreeningCut> {
        let mut out = Vec::new();
        for batch in [&self.inclusive, &self.exclusive].into_iter().flatten() {
            out.extend(batch.cuts.iter().cloned());
        }
        out
    }

    pub fn n_inc(&self) -> usize {
        self.inclusive.as_ref().map_or(0, |b| b.cuts.len())
    }

    pub fn n_exc(&self) -> usize {
        self.exclusive.as_ref().map_or(0, |b| b.cuts.len())
    }
}

/// Solves the root relaxation, forms the bounds and runs both screening
/// procedures. `v_ub` replaces the rounding heuristic when given.
pub fn screen(
    inst: &ProblemInstance,
    relax_opts: &RelaxOptions,
    v_ub: Option<f64>,
    settings: &CutSettings,
) -> Result<Screening> {
    let start = Instant::now();
    let fix = Fixings::free(inst.d(), inst.k());
    let relax = solve_relaxation_lenient(inst, &fix, None, relax_opts)?;
    let (heuristic, ub_support) = upper_bound(inst, &relax);
    let bounds = make_bounds(inst, &relax, v_ub.unwrap_or(heuristic));
    let ctx = ScreenContext::from_bounds(&relax.w_hat, &bounds)?;
    let fixings = ssr_screen_ctx(&ctx);
    let inclusive = settings.inclusive.as_ref().map(|c| generate_cuts_ctx(&ctx, c));
    let exclusive = settings.exclusive.as_ref().map(|c| generate_cuts_ctx(&ctx, c));
    Ok(Screening {
        relax,
        bounds,
        ub_support,
        fixings,
        inclusive,
        exclusive,
        elapsed: start.elapsed(),
    })
}

/// Outcome of one method on one instance.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub result: SolveResult,
    pub screening: Option<Screening>,
    pub t_pre: Duration,
    pub n_inc: usize,
    pub n_exc: usize,
    pub l_inc: Option<f64>,
    pub l_exc: Option<f64>,
    /// Cuts (or singleton cuts for fixings) handed to the search.
    pub cuts: Vec<ScreeningCut>,
}

/// Fixings written as singleton cuts.
pub fn fixings_as_cuts(f: &SsrFixings) -> Vec<ScreeningCut> {
    let mut out = Vec::with_capacity(f.len());
    for j in f.fix_one.iter() {
        out.push(ScreeningCut::new(IndexSet::empty(), IndexSet::new([j])).expect("singleton"));
    }
    for j in f.fix_zero.iter() {
        out.push(ScreeningCut::new(IndexSet::new([j]), IndexSet::empty()).expect("singleton"));
    }
    out
}

pub fn run_method(
    inst: &ProblemInstance,
    method: Method,
    bnb: &BnbOptions,
    settings: &CutSettings,
    relax_opts: &RelaxOptions,
) -> Result<MethodRun> {
    match method {
        Method::Plain => {
            let result = solve_from(inst, &BnbNode::root(), &[], bnb)?;
            Ok(MethodRun {
                method,
                result,
                screening: None,
                t_pre: Duration::ZERO,
                n_inc: 0,
                n_exc: 0,
                l_inc: None,
                l_exc: None,
                cuts: Vec::new(),
            })
        }
        Method::Ssr => {
            let none = CutSettings {
                inclusive: None,
                exclusive: None,
            };
            let sc = screen(inst, relax_opts, None, &none)?;
            let root = apply_fixings(inst, &sc.fixings.fix_zero, &sc.fixings.fix_one)?;
            let result = solve_from(inst, &root, &[], bnb)?;
            let (n_inc, n_exc) = (sc.fixings.fix_one.len(), sc.fixings.fix_zero.len());
            Ok(MethodRun {
                method,
                result,
                t_pre: sc.elapsed,
                n_inc,
                n_exc,
                l_inc: (n_inc > 0).then_some(1.0),
                l_exc: (n_exc > 0).then_some(1.0),
                cuts: fixings_as_cuts(&sc.fixings),
                screening: Some(sc),
            })
        }
        Method::Scg => {
            let sc = screen(inst, relax_opts, None, settings)?;
            let cuts = sc.cuts();
            let result = solve_from(inst, &BnbNode::root(), &cuts, bnb)?;
            Ok(MethodRun {
                method,
                result,
                t_pre: sc.elapsed,
                n_inc: sc.n_inc(),
                n_exc: sc.n_exc(),
                l_inc: sc.inclusive.as_ref().and_then(CutBatch::average_len),
                l_exc: sc.exclusive.as_ref().and_then(CutBatch::average_len),
                cuts,
                screening: Some(sc),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::diag3;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::from_one_based(v).unwrap()
    }

    #[test]
    fn diag3_screening() {
        let inst = diag3();
        let sc = screen(&inst, &RelaxOptions::default(), None, &CutSettings::defaults(3, 1)).unwrap();
        assert_eq!(sc.fixings.fix_zero, set(&[3]));
        assert!(sc.fixings.fix_one.is_empty());
        // ŵ₁ and ŵ₂ tie in exact arithmetic, so compare as sets.
        let cuts = sc.cuts();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].n, set(&[1, 2]));
        assert!(cuts[0].s.is_empty());
        assert_eq!(sc.n_exc(), 0);
    }

    #[test]
    fn three_methods_agree_on_diag3() {
        let inst = diag3();
        let bnb = BnbOptions {
            target_gap: 0.0,
            ..BnbOptions::default()
        };
        let settings = CutSettings::defaults(3, 1);
        for m in [Method::Plain, Method::Ssr, Method::Scg] {
            let run = run_method(&inst, m, &bnb, &settings, &RelaxOptions::default()).unwrap();
            assert!((run.result.v_primal - 9.5).abs() < 1e-9, "{m}");
            assert_eq!(run.result.support(), set(&[1]));
        }
    }

    #[test]
    fn override_changes_the_gap() {
        let inst = diag3();
        let sc = screen(
            &inst,
            &RelaxOptions::default(),
            Some(100.0),
            &CutSettings::defaults(3, 1),
        )
        .unwrap();
        assert_eq!(sc.bounds.v_ub, 100.0);
        assert!(sc.cuts().is_empty());
        assert!(sc.fixings.is_empty());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Plain, Method::Ssr, Method::Scg] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("cplex".parse::<Method>().is_err());
    }
}
