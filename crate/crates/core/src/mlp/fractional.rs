//! Conditional bounds as fractional programs solved by a sequence of
//! multilinear programs: bisection on the level `lambda`, testing the sign
//! of `opt [P(x,e) - lambda P(e)]`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::build::Session;
use super::decomp::{DecompositionPlan, PlanKind, StepEntry};
use super::program::{MpConstraint, MpVar, MultilinearProgram, PolyExpr, Sense};
use super::solve::{rl_solve, SolveLimits};
use super::MlpError;
use crate::model::{Bound, CredalNetwork, Query, SolveStatus};
use crate::util::Clock;

/// Numerator and denominator programs over one shared variable space.
#[derive(Debug, Clone)]
pub struct FractionalProgram {
    pub vars: Vec<MpVar>,
    pub constraints: Vec<MpConstraint>,
    pub definitions: Vec<(usize, PolyExpr)>,
    /// `P(target = x, evidence)`
    pub numerator: PolyExpr,
    /// `P(evidence)`
    pub denominator: PolyExpr,
    pub numerator_plan: DecompositionPlan,
    pub denominator_plan: DecompositionPlan,
    pub numerator_intermediates: BTreeMap<StepEntry, usize>,
    pub denominator_intermediates: BTreeMap<StepEntry, usize>,
}

/// Builds `P(x, e)` and `P(e)` in one session so the credal parameters are
/// shared while each side keeps its own intermediates.
pub fn build_fractional_program(
    net: &CredalNetwork,
    query: &Query,
) -> Result<FractionalProgram, MlpError> {
    query.check(net)?;
    let num_plan = DecompositionPlan::build(net, query, PlanKind::TargetSliced);
    let den_plan = DecompositionPlan::build(net, query, PlanKind::EvidenceOnly);
    let mut session = Session::new(net);
    let (num_entries, num_inter) = session.interpret(&num_plan);
    debug_assert_eq!(num_entries.len(), 1);
    let numerator = num_entries.into_iter().next().unwrap();
    let (den_entries, den_inter) = session.interpret(&den_plan);
    let mut denominator = PolyExpr::default();
    for e in &den_entries {
        denominator.add(e);
    }
    Ok(FractionalProgram {
        vars: session.vars,
        constraints: session.constraints,
        definitions: session.definitions,
        numerator,
        denominator,
        numerator_plan: num_plan,
        denominator_plan: den_plan,
        numerator_intermediates: num_inter,
        denominator_intermediates: den_inter,
    })
}

impl FractionalProgram {
    /// The program `opt [numerator - lambda * denominator]`.
    pub fn level_program(&self, lambda: f64, sense: Sense) -> MultilinearProgram {
        let mut objective = self.numerator.clone();
        let mut scaled = self.denominator.clone();
        scaled.scale(-lambda);
        objective.add(&scaled);
        MultilinearProgram {
            vars: self.vars.clone(),
            objective,
            constraints: self.constraints.clone(),
            sense,
            definitions: self.definitions.clone(),
        }
    }

    fn denominator_program(&self, sense: Sense) -> MultilinearProgram {
        MultilinearProgram {
            vars: self.vars.clone(),
            objective: self.denominator.clone(),
            constraints: self.constraints.clone(),
            sense,
            definitions: self.definitions.clone(),
        }
    }
}

/// Report of a fractional solve: `outer` encloses the true conditional bound
/// from the safe side, `inner` from the achievable side.
#[derive(Debug, Clone)]
pub struct FractionalReport {
    pub outer: f64,
    pub inner: f64,
    pub iterations: u64,
    pub branches: u64,
    pub status: SolveStatus,
}

/// Bounds `P(x | e)` in the given direction by bisection on `lambda` over
/// `[0, 1]`: the level map `g(lambda) = opt [P(x,e) - lambda P(e)]` is
/// monotone nonincreasing and its root is the requested conditional bound.
///
/// When a level solve cannot certify the sign of `g`, the bracket still
/// shrinks: `|g| <= gap` at the midpoint implies the root is within
/// `gap / min P(e)` of it. `warm_ratio`, when given, must be an achieved
/// conditional value; it tightens the bracket from the inner side.
#[allow(clippy::too_many_arguments)]
pub fn solve_fractional(
    fp: &FractionalProgram,
    bound: Bound,
    epsilon: f64,
    limits: SolveLimits,
    clock: &dyn Clock,
    ranges: Option<&BTreeMap<usize, (f64, f64)>>,
    warm_ratio: Option<f64>,
) -> Result<FractionalReport, MlpError> {
    if fp.denominator.is_constant() && fp.numerator.is_constant() {
        let d = fp.denominator.constant;
        if d <= 0.0 {
            return Err(MlpError::ZeroProbabilityEvidence);
        }
        let r = fp.numerator.constant / d;
        return Ok(FractionalReport {
            outer: r,
            inner: r,
            iterations: 1,
            branches: 0,
            status: SolveStatus::Exact,
        });
    }

    let sense = match bound {
        Bound::Upper => Sense::Maximize,
        Bound::Lower => Sense::Minimize,
    };

    let mut branches = 0u64;

    // Certified bounds on P(e): reject zero-probability evidence and keep a
    // lower bound for the ambiguous-sign shrink.
    let den_floor = {
        let rep = rl_solve(
            &fp.denominator_program(Sense::Maximize),
            ranges,
            1e-8,
            limits,
            clock,
            None,
        )?;
        branches += rep.branches;
        if rep.best_bound <= 0.0 {
            return Err(MlpError::ZeroProbabilityEvidence);
        }
        let rep = rl_solve(
            &fp.denominator_program(Sense::Minimize),
            ranges,
            1e-8,
            limits,
            clock,
            None,
        )?;
        branches += rep.branches;
        rep.best_bound.max(0.0)
    };

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    match (bound, warm_ratio) {
        (Bound::Upper, Some(w)) => lo = lo.max(w.min(1.0)),
        (Bound::Lower, Some(w)) => hi = hi.min(w.max(0.0)),
        _ => {}
    }

    // Certifying a sign at the midpoint needs the level gap below
    // |g(mid)| ~ P(e) * bracket/2; there is no point demanding more than
    // what the target bracket width requires.
    let eps_floor = (0.25 * den_floor * epsilon).max(1e-12);
    // `limits.max_branches` is the total budget across every level solve;
    // each level additionally gets a cap so one step cannot blow up.
    // Certificates stay sound because outer bounds and incumbents are valid
    // at any cap.
    const LEVEL_BRANCH_CAP: u64 = 4000;
    let mut last_point: Option<Vec<f64>> = None;

    let mut iterations = 0u64;
    let mut status = SolveStatus::Exact;
    while hi - lo > epsilon {
        iterations += 1;
        if iterations > 200 {
            status = SolveStatus::Anytime;
            break;
        }
        if limits.max_millis.is_some_and(|m| clock.elapsed_ms() >= m) {
            status = SolveStatus::Anytime;
            break;
        }
        let level_budget = match limits.max_branches {
            Some(total) => {
                let remaining = total.saturating_sub(branches);
                if remaining == 0 {
                    status = SolveStatus::Anytime;
                    break;
                }
                remaining.min(LEVEL_BRANCH_CAP)
            }
            None => LEVEL_BRANCH_CAP,
        };
        let level_limits =
            SolveLimits { max_branches: Some(level_budget), max_millis: limits.max_millis };
        let mid = 0.5 * (lo + hi);
        let inner_eps = (0.25 * den_floor * (hi - lo)).max(eps_floor);
        let mp = fp.level_program(mid, sense);
        // a feasible point from an earlier level is feasible here too
        let warm_g = last_point.as_ref().map(|p| mp.objective.eval(p));
        let rep = rl_solve(&mp, ranges, inner_eps, level_limits, clock, warm_g)?;
        branches += rep.branches;
        let outer_side = rep.best_bound;
        let inner_side = rep.incumbent.unwrap_or(rep.best_bound);
        // an achieved ratio tightens the bracket from the inner side
        if let Some(point) = &rep.incumbent_point {
            let d = fp.denominator.eval(point);
            if d > 0.0 {
                let r = (fp.numerator.eval(point) / d).clamp(0.0, 1.0);
                match bound {
                    Bound::Upper => lo = lo.max(r).min(hi),
                    Bound::Lower => hi = hi.min(r).max(lo),
                }
            }
            last_point = Some(point.clone());
        }
        if hi - lo <= epsilon {
            break;
        }
        // sign certificates: the true g(mid) lies between the two sides
        let (g_hi, g_lo) = match bound {
            Bound::Upper => (outer_side, inner_side),
            Bound::Lower => (inner_side, outer_side),
        };
        if g_hi < 0.0 {
            // g(mid) certified negative: root is left of mid
            hi = hi.min(mid);
        } else if g_lo > 0.0 {
            lo = lo.max(mid).min(hi);
        } else {
            // ambiguous within the solver gap: certified shrink through the
            // denominator floor, since |mid - root| <= |g(mid)| / min P(e)
            let g_mag = g_hi.max(-g_lo).max(0.0);
            let radius = if den_floor > 0.0 { g_mag / den_floor } else { f64::INFINITY };
            let new_lo = lo.max(mid - radius);
            let new_hi = hi.min(mid + radius);
            let shrunk = (new_hi - new_lo) < 0.9 * (hi - lo);
            lo = new_lo;
            hi = new_hi.max(lo);
            if !shrunk && rep.gap <= inner_eps * 1.01 {
                // the solver resolved as far as asked and the sign is still
                // open: the bracket cannot be certified tighter
                status = SolveStatus::Anytime;
                break;
            }
        }
    }

    let (outer, inner) = match bound {
        Bound::Upper => (hi, lo),
        Bound::Lower => (lo, hi),
    };
    Ok(FractionalReport { outer, inner, iterations, branches, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::model::{
        CredalNetwork, Direction, LocalCredalSpec, Query, SeparateVertexForm, Variable,
    };
    use crate::util::NoClock;

    fn interval_net() -> CredalNetwork {
        CredalNetwork {
            variables: vec![Variable::boolean("x"), Variable::boolean("y")],
            parents: vec![vec![], vec![0]],
            local: vec![
                LocalCredalSpec::SeparateVertices(SeparateVertexForm {
                    columns: vec![vec![vec![0.2, 0.8], vec![0.7, 0.3]]],
                }),
                LocalCredalSpec::SeparateVertices(SeparateVertexForm {
                    columns: vec![
                        vec![vec![0.8, 0.2]],
                        vec![vec![0.1, 0.9], vec![0.3, 0.7]],
                    ],
                }),
            ],
        }
    }

    #[test]
    fn singleton_conditional_is_one_shot() {
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x"), Variable::boolean("y")],
            parents: vec![vec![], vec![0]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
            ],
        };
        let q = Query::conditional(0, 0, vec![(1, 0)]);
        let fp = build_fractional_program(&net, &q).unwrap();
        let rep = solve_fractional(
            &fp,
            crate::model::Bound::Upper,
            1e-9,
            SolveLimits::default(),
            &NoClock,
            None,
            None,
        )
        .unwrap();
        let expect = crate::oracle::ve_marginal(&net, &q).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((rep.outer - expect).abs() < 1e-9);
    }

    #[test]
    fn conditional_bounds_match_enumeration() {
        let net = interval_net();
        let q = Query {
            target: (0, 0),
            evidence: vec![(1, 0)],
            direction: Direction::Both,
        };
        let exact = crate::oracle::exact_bounds_enumeration(&net, &q).unwrap();
        let fp = build_fractional_program(&net, &q).unwrap();
        for (bound, want) in
            [(crate::model::Bound::Lower, exact.lower), (crate::model::Bound::Upper, exact.upper)]
        {
            let rep = solve_fractional(
                &fp,
                bound,
                1e-7,
                SolveLimits::default(),
                &NoClock,
                None,
                None,
            )
            .unwrap();
            assert!(
                (rep.outer - want).abs() < 1e-5,
                "{bound:?}: outer {} vs exact {want}",
                rep.outer
            );
        }
    }

    #[test]
    fn level_map_is_nonincreasing() {
        let net = interval_net();
        let q = Query::conditional(0, 0, vec![(1, 0)]);
        let fp = build_fractional_program(&net, &q).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0] {
            let mp = fp.level_program(lambda, Sense::Maximize);
            let rep =
                rl_solve(&mp, None, 1e-9, SolveLimits::default(), &NoClock, None).unwrap();
            assert!(rep.best_bound <= last + 1e-9);
            last = rep.best_bound;
        }
    }
}
