//! Query-level driver for the branch-and-bound solver: local search seeds
//! the incumbent, optional message-passing ranges tighten the boxes, and
//! conditional queries go through the fractional scheme.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::build::{build_multilinear_program, BuildOutput};
use super::decomp::{RangeMap, StepEntry};
use super::fractional::{build_fractional_program, solve_fractional};
use super::solve::{rl_solve, SolveLimits};
use super::MlpError;
use crate::model::{Bound, CredalNetwork, Diagnostics, IntervalResult, Query, SolveStatus};
use crate::util::Clock;

/// Options for one RL inference.
#[derive(Debug, Clone, Copy)]
pub struct RlOptions {
    pub epsilon: f64,
    pub limits: SolveLimits,
    /// Seed for the local-search warm start.
    pub seed: u64,
    /// Hill-climbing restarts for the warm start (0 disables it).
    pub restarts: usize,
}

impl Default for RlOptions {
    fn default() -> Self {
        RlOptions {
            epsilon: 1e-6,
            limits: SolveLimits::default(),
            seed: 0,
            restarts: crate::oracle::DEFAULT_RESTARTS,
        }
    }
}

/// Enclosing ranges for the decomposition variables of both plan kinds, as
/// produced by the A/R++ message pass.
#[derive(Debug, Clone, Default)]
pub struct ArRanges {
    pub sliced: RangeMap,
    pub evidence: RangeMap,
}

fn var_ranges(
    intermediates: &BTreeMap<StepEntry, usize>,
    ranges: &RangeMap,
) -> BTreeMap<usize, (f64, f64)> {
    let mut out = BTreeMap::new();
    for (key, &(lo, hi)) in ranges {
        if let Some(&var) = intermediates.get(key) {
            out.insert(var, (lo, hi));
        }
    }
    out
}

fn warm_start(
    net: &CredalNetwork,
    query: &Query,
    bound: Bound,
    opts: &RlOptions,
) -> Option<f64> {
    if opts.restarts == 0 {
        return None;
    }
    crate::oracle::local_search_bound(net, query, bound, opts.restarts, opts.seed)
        .ok()
        .map(|(v, _)| v)
}

/// Lower/upper bounds on the query through the RL method. Marginal queries
/// solve the decomposition directly; conditional queries solve the
/// fractional program.
pub fn rl_infer(
    net: &CredalNetwork,
    query: &Query,
    opts: &RlOptions,
    clock: &dyn Clock,
    ranges: Option<&ArRanges>,
) -> Result<IntervalResult, MlpError> {
    query.check(net)?;
    let mut diagnostics = Diagnostics::default();
    let mut status = SolveStatus::Exact;
    let mut gap = 0.0f64;

    let (lower, upper) = if query.evidence.is_empty() {
        let mut solve_one = |bound: Bound| -> Result<f64, MlpError> {
            let BuildOutput { mp, intermediates, .. } =
                build_multilinear_program(net, query, bound)?;
            let var_r = ranges.map(|r| var_ranges(&intermediates, &r.sliced));
            let warm = warm_start(net, query, bound, opts);
            let rep = rl_solve(&mp, var_r.as_ref(), opts.epsilon, opts.limits, clock, warm)?;
            diagnostics.branches += rep.branches;
            diagnostics.iterations += 1;
            gap = gap.max(rep.gap);
            if rep.status == SolveStatus::Anytime {
                status = SolveStatus::Anytime;
            }
            Ok(rep.best_bound)
        };
        (solve_one(Bound::Lower)?, solve_one(Bound::Upper)?)
    } else {
        let fp = build_fractional_program(net, query)?;
        let mut solve_one = |bound: Bound| -> Result<f64, MlpError> {
            let var_r = ranges.map(|r| {
                let mut m = var_ranges(&fp.numerator_intermediates, &r.sliced);
                m.extend(var_ranges(&fp.denominator_intermediates, &r.evidence));
                m
            });
            let warm = warm_start(net, query, bound, opts);
            let rep = solve_fractional(
                &fp,
                bound,
                opts.epsilon,
                opts.limits,
                clock,
                var_r.as_ref(),
                warm,
            )?;
            diagnostics.branches += rep.branches;
            diagnostics.iterations += rep.iterations;
            gap = gap.max((rep.outer - rep.inner).abs());
            if rep.status == SolveStatus::Anytime {
                status = SolveStatus::Anytime;
            }
            Ok(rep.outer)
        };
        (solve_one(Bound::Lower)?, solve_one(Bound::Upper)?)
    };

    diagnostics.gap = gap;
    diagnostics.elapsed_ms = clock.elapsed_ms();
    Ok(IntervalResult {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
        status,
        diagnostics,
    })
}

/// Ranges derived from interval passes, exposed for tests that splice
/// hand-made maps into [`rl_infer`].
pub fn join_ranges(
    intermediates: &BTreeMap<StepEntry, usize>,
    ranges: &RangeMap,
) -> BTreeMap<usize, (f64, f64)> {
    var_ranges(intermediates, ranges)
}
