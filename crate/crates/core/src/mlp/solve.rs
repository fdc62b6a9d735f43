//! Branch-and-bound over linear relaxations.
//!
//! Each node solves the LP relaxation for its boxes; the LP optimum is an
//! outer bound, LP points repaired to feasibility update the incumbent, and
//! branching splits the box of the variable showing the largest gap between
//! an artificial product variable and the product it stands for.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;

use super::linearize::linearize;
use super::lp::{solve_lp, LpStatus};
use super::program::{MultilinearProgram, Sense, VarKind};
use super::MlpError;
use crate::model::SolveStatus;
use crate::util::Clock;

/// Resource limits for one solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveLimits {
    pub max_branches: Option<u64>,
    pub max_millis: Option<u64>,
}

/// Outcome of a branch-and-bound run (always in the program's own sense:
/// `best_bound` is the outer bound, `incumbent` the best feasible value).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub best_bound: f64,
    pub incumbent: Option<f64>,
    pub incumbent_point: Option<Vec<f64>>,
    pub gap: f64,
    pub branches: u64,
    pub status: SolveStatus,
}

struct Node {
    bound: f64,
    boxes: Vec<(f64, f64)>,
    id: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        // best bound first; older node wins ties for determinism
        self.bound
            .partial_cmp(&other.bound)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(other.id.cmp(&self.id))
    }
}

/// Solves the program to `epsilon` (absolute) or until a limit fires.
///
/// `ranges`, when given, must enclose the feasible projection of each
/// variable; they tighten the root boxes. `warm` seeds the incumbent with a
/// known feasible objective value (e.g. from local search).
pub fn rl_solve(
    mp: &MultilinearProgram,
    ranges: Option<&alloc::collections::BTreeMap<usize, (f64, f64)>>,
    epsilon: f64,
    limits: SolveLimits,
    clock: &dyn Clock,
    warm: Option<f64>,
) -> Result<BoundReport, MlpError> {
    // Work in max sense; flip for minimization.
    let flip = mp.sense == Sense::Minimize;
    let mut work = mp.clone();
    if flip {
        work.objective.scale(-1.0);
        work.sense = Sense::Maximize;
    }
    let warm = warm.map(|w| if flip { -w } else { w });

    let mut root_boxes: Vec<(f64, f64)> = work.vars.iter().map(|v| (v.lo, v.hi)).collect();
    if let Some(r) = ranges {
        for (&j, &(lo, hi)) in r {
            root_boxes[j].0 = root_boxes[j].0.max(lo);
            root_boxes[j].1 = root_boxes[j].1.min(hi);
        }
    }

    let link_tol = (0.1 * epsilon).clamp(1e-12, 1e-9);
    let mut incumbent: Option<(f64, Vec<f64>)> = warm.map(|w| (w, vec![]));
    let mut branches: u64 = 0;
    let mut next_id: u64 = 1;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    heap.push(Node { bound: f64::INFINITY, boxes: root_boxes, id: 0 });
    // max over bounds of nodes that are finished but may still hold values
    let mut closed_bound = f64::NEG_INFINITY;
    let mut status = SolveStatus::Exact;
    let mut root = true;

    let final_bound = loop {
        let Some(node) = heap.pop() else {
            // every region is closed
            break closed_bound;
        };
        if let Some((inc, _)) = &incumbent {
            if node.bound - inc <= epsilon {
                break node.bound.max(closed_bound);
            }
        }

        let relax = linearize(&work, &node.boxes);
        let sol = solve_lp(&relax.lp);
        match sol.status {
            LpStatus::Infeasible => {
                if root {
                    return Err(MlpError::InconsistentConstraints);
                }
                continue; // no feasible point in this region
            }
            LpStatus::Unbounded | LpStatus::Stalled => return Err(MlpError::LpFailure),
            LpStatus::Optimal => {}
        }
        root = false;
        let node_bound = sol.value.min(node.bound);

        // the repaired LP point is a feasible incumbent candidate
        if let Some(candidate) = repair_point(&work, &sol.point) {
            let value = work.objective.eval(&candidate);
            if incumbent.as_ref().is_none_or(|(v, _)| value > *v) {
                incumbent = Some((value, candidate));
            }
        }

        if let Some((inc, _)) = &incumbent {
            if node_bound - inc <= epsilon {
                closed_bound = closed_bound.max(node_bound);
                continue;
            }
        }

        // branch on the variable behind the worst linearization mismatch
        let mismatch = relax.worst_mismatch(&sol.point);
        let tight = match &mismatch {
            None => true,
            Some((_, gap)) => *gap <= link_tol,
        };
        if tight {
            // the relaxation is (numerically) exact on this region
            closed_bound = closed_bound.max(node_bound);
            if let Some(candidate) = repair_point(&work, &sol.point) {
                let value = work.objective.eval(&candidate);
                if incumbent.as_ref().is_none_or(|(v, _)| value > *v) {
                    incumbent = Some((value, candidate));
                }
            }
            continue;
        }
        let (vars, _) = mismatch.unwrap();
        let branch_var = vars
            .iter()
            .copied()
            .max_by(|&x, &y| {
                let wx = node.boxes[x].1 - node.boxes[x].0;
                let wy = node.boxes[y].1 - node.boxes[y].0;
                wx.partial_cmp(&wy)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(y.cmp(&x)) // prefer the lower index on ties
            })
            .expect("nonempty multiset");
        let (lo, hi) = node.boxes[branch_var];
        if hi - lo <= 1e-12 {
            // box cannot shrink further; accept the node bound as closed
            closed_bound = closed_bound.max(node_bound);
            continue;
        }
        // limits stop tree growth, never the root bound itself
        if limits.max_branches.is_some_and(|m| branches >= m)
            || limits.max_millis.is_some_and(|m| clock.elapsed_ms() >= m)
        {
            status = SolveStatus::Anytime;
            let open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
            break node_bound.max(closed_bound).max(open);
        }
        let mid = 0.5 * (lo + hi);
        branches += 1;
        for half in [(lo, mid), (mid, hi)] {
            let mut boxes = node.boxes.clone();
            boxes[branch_var] = half;
            heap.push(Node { bound: node_bound, boxes, id: next_id });
            next_id += 1;
        }
    };

    let Some((inc_value, inc_point)) = incumbent else {
        return Err(MlpError::NoFeasiblePoint);
    };
    let best_bound = final_bound.max(inc_value);
    let gap = (best_bound - inc_value).max(0.0);
    if gap > epsilon && status == SolveStatus::Exact {
        status = SolveStatus::Anytime;
    }
    let (best_bound, inc_value) =
        if flip { (-best_bound, -inc_value) } else { (best_bound, inc_value) };
    Ok(BoundReport {
        best_bound,
        incumbent: Some(inc_value),
        incumbent_point: if inc_point.is_empty() { None } else { Some(inc_point) },
        gap,
        branches,
        status,
    })
}

/// Projects an LP point onto the feasible set where that is cheap: convex
/// weights are clamped and renormalized, credal parameters clamped to their
/// boxes, and intermediates recomputed from the definitions. Returns None
/// when the result still violates a constraint.
fn repair_point(mp: &MultilinearProgram, lp_point: &[f64]) -> Option<Vec<f64>> {
    let mut point: Vec<f64> = lp_point[..mp.vars.len()].to_vec();
    // clamp credal parameters
    for (j, var) in mp.vars.iter().enumerate() {
        match var.kind {
            VarKind::Credal(_) | VarKind::Weight { .. } | VarKind::TableWeight { .. } => {
                point[j] = point[j].clamp(var.lo, var.hi);
            }
            _ => {}
        }
    }
    // renormalize weight groups
    let mut groups: alloc::collections::BTreeMap<(usize, usize, bool), Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (j, var) in mp.vars.iter().enumerate() {
        match var.kind {
            VarKind::Weight { var: v, column, .. } => {
                groups.entry((v, column, false)).or_default().push(j)
            }
            VarKind::TableWeight { var: v, .. } => {
                groups.entry((v, 0, true)).or_default().push(j)
            }
            _ => {}
        }
    }
    for (_, members) in groups {
        let sum: f64 = members.iter().map(|&j| point[j]).sum();
        if sum <= 0.0 {
            let u = 1.0 / members.len() as f64;
            for &j in &members {
                point[j] = u;
            }
        } else {
            for &j in &members {
                point[j] /= sum;
            }
        }
    }
    mp.propagate_definitions(&mut point);
    if mp.max_violation(&point) <= 1e-7 {
        Some(point)
    } else {
        None
    }
}
