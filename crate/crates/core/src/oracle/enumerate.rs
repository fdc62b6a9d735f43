//! Exhaustive enumeration over vertex selections and the hill-climbing
//! inner-bound search.
//!
//! A vertex selection fixes one extreme distribution per column of every
//! separately specified local set (or one whole table for extensively
//! specified ones); each selection pins a single Bayesian network, so bounds
//! over the strong extension are min/max of variable elimination over all
//! selections.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use super::factor::{min_degree_order, ve_target_distribution};
use super::OracleError;
use crate::model::{
    Bound, CredalNetwork, Diagnostics, IntervalResult, LocalCredalSpec, Query, SolveStatus,
};

/// Default cap on the number of vertex combinations the oracle enumerates.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Default number of hill-climbing restarts.
pub const DEFAULT_RESTARTS: usize = 10;

/// Vertex lists of one variable's local credal set.
#[derive(Debug, Clone)]
pub enum VarVertices {
    /// `[column][vertex][value]` — one independent choice per column.
    PerColumn(Vec<Vec<Vec<f64>>>),
    /// `[table][column][value]` — one choice for the whole table.
    Tables(Vec<Vec<Vec<f64>>>),
}

impl VarVertices {
    fn slot_counts(&self) -> Vec<usize> {
        match self {
            VarVertices::PerColumn(cols) => cols.iter().map(|c| c.len()).collect(),
            VarVertices::Tables(tables) => vec![tables.len()],
        }
    }

    fn entry(&self, choices: &[usize], column: usize, value: usize) -> f64 {
        match self {
            VarVertices::PerColumn(cols) => cols[column][choices[column]][value],
            VarVertices::Tables(tables) => tables[choices[0]][column][value],
        }
    }
}

/// One chosen extreme distribution per column (or per table) of every
/// variable. For separately specified variables `choices[var]` has one entry
/// per column; for extensively specified ones it has a single entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSelection {
    pub choices: Vec<Vec<usize>>,
}

/// Extracts the vertex lists of every local set, converting constraint-form
/// columns through the polytope enumerator.
pub fn vertex_lists(net: &CredalNetwork) -> Result<Vec<VarVertices>, OracleError> {
    let mut out = Vec::with_capacity(net.num_vars());
    for var in 0..net.num_vars() {
        let v = match &net.local[var] {
            LocalCredalSpec::SeparateVertices(f) => VarVertices::PerColumn(f.columns.clone()),
            LocalCredalSpec::ExtensiveVertices(f) => VarVertices::Tables(f.tables.clone()),
            LocalCredalSpec::Constraints(f) => {
                let mut cols = Vec::with_capacity(f.boxes.len());
                for c in 0..f.boxes.len() {
                    cols.push(crate::model::hrep_to_vrep(f, var, c)?);
                }
                VarVertices::PerColumn(cols)
            }
        };
        out.push(v);
    }
    Ok(out)
}

struct Search<'a> {
    net: CredalNetwork,
    query: Query,
    lists: Vec<VarVertices>,
    order: Vec<usize>,
    /// (var, slot) pairs with more than one vertex, in index order.
    slots: Vec<(usize, usize, usize)>,
    /// Old-to-new variable map of the pruning step.
    keep: Vec<usize>,
    original: &'a CredalNetwork,
}

impl<'a> Search<'a> {
    fn prepare(net: &'a CredalNetwork, query: &Query) -> Result<Self, OracleError> {
        query.check(net)?;
        let mut seeds = vec![query.target.0];
        seeds.extend(query.evidence.iter().map(|&(v, _)| v));
        let keep = net.ancestral_closure(seeds);
        let (sub, map) = net.restrict(&keep);
        let query = Query {
            target: (map[query.target.0].unwrap(), query.target.1),
            evidence: query
                .evidence
                .iter()
                .map(|&(v, x)| (map[v].unwrap(), x))
                .collect(),
            direction: query.direction,
        };
        let lists = vertex_lists(&sub)?;

        let mut scopes = Vec::with_capacity(sub.num_vars());
        for var in 0..sub.num_vars() {
            let mut scope: Vec<usize> = sub.parents[var].clone();
            scope.push(var);
            scope.retain(|v| !query.evidence.iter().any(|&(e, _)| e == *v));
            scopes.push(scope);
        }
        let elim: Vec<usize> = (0..sub.num_vars())
            .filter(|&v| v != query.target.0)
            .collect();
        let order = min_degree_order(&scopes, &elim, sub.num_vars());

        let mut slots = Vec::new();
        for (var, list) in lists.iter().enumerate() {
            for (slot, count) in list.slot_counts().into_iter().enumerate() {
                if count == 0 {
                    // validation reports this; treat as unsupported here
                    return Err(OracleError::Unsupported(
                        crate::model::ConvertError::InfeasibleSpec,
                    ));
                }
                slots.push((var, slot, count));
            }
        }
        Ok(Search { net: sub, query, lists, order, slots, keep, original: net })
    }

    fn combination_count(&self) -> u128 {
        let mut total: u128 = 1;
        for &(_, _, count) in &self.slots {
            total = total.saturating_mul(count as u128);
        }
        total
    }

    fn fresh_choices(&self) -> Vec<Vec<usize>> {
        self.lists.iter().map(|l| vec![0usize; l.slot_counts().len()]).collect()
    }

    /// `P(target | evidence)` under the given choices; None when the
    /// evidence has probability zero under them.
    fn value(&self, choices: &[Vec<usize>]) -> Option<f64> {
        let view = SelectionView { lists: &self.lists, choices };
        let dist = ve_target_distribution(&self.net, &view, &self.query, Some(&self.order));
        let joint = dist[self.query.target.1];
        let pe: f64 = dist.iter().sum();
        if pe <= 0.0 {
            None
        } else {
            Some(joint / pe)
        }
    }

    /// Maps pruned-network choices back to the original variable indices;
    /// barren variables keep vertex 0 everywhere.
    fn to_original(&self, choices: Vec<Vec<usize>>) -> VertexSelection {
        let full = vertex_lists(self.original).expect("already converted");
        let mut out: Vec<Vec<usize>> =
            full.iter().map(|l| vec![0usize; l.slot_counts().len()]).collect();
        for (new, &old) in self.keep.iter().enumerate() {
            out[old] = choices[new].clone();
        }
        VertexSelection { choices: out }
    }
}

/// Reads table entries through a selection without materializing the tables.
struct SelectionView<'a> {
    lists: &'a [VarVertices],
    choices: &'a [Vec<usize>],
}

impl super::factor::TableSource for SelectionView<'_> {
    fn entry(&self, var: usize, column: usize, value: usize) -> f64 {
        self.lists[var].entry(&self.choices[var], column, value)
    }
}

/// Exact lower/upper bounds by enumerating every vertex selection, with the
/// default combination cap.
pub fn exact_bounds_enumeration(
    net: &CredalNetwork,
    query: &Query,
) -> Result<IntervalResult, OracleError> {
    exact_bounds_enumeration_with_cap(net, query, DEFAULT_ENUM_CAP)
}

/// Exact bounds over the strong extension of a separately specified network.
/// Conditional queries take the ratio per selection; selections that zero
/// the evidence are skipped (the conditional is undefined for them).
pub fn exact_bounds_enumeration_with_cap(
    net: &CredalNetwork,
    query: &Query,
    cap: u128,
) -> Result<IntervalResult, OracleError> {
    let search = Search::prepare(net, query)?;
    let combinations = search.combination_count();
    if combinations > cap {
        return Err(OracleError::TooLargeForOracle { combinations, cap });
    }

    let mut choices = search.fresh_choices();
    let mut flat: Vec<usize> = vec![0; search.slots.len()];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut evaluated: u64 = 0;
    loop {
        for (i, &(var, slot, _)) in search.slots.iter().enumerate() {
            choices[var][slot] = flat[i];
        }
        if let Some(v) = search.value(&choices) {
            lo = lo.min(v);
            hi = hi.max(v);
            evaluated += 1;
        }
        // advance the mixed-radix counter
        let mut done = true;
        for i in (0..flat.len()).rev() {
            flat[i] += 1;
            if flat[i] < search.slots[i].2 {
                done = false;
                break;
            }
            flat[i] = 0;
        }
        if done {
            break;
        }
    }
    if evaluated == 0 {
        return Err(OracleError::UndefinedConditional);
    }
    Ok(IntervalResult {
        lower: lo,
        upper: hi,
        status: SolveStatus::Exact,
        diagnostics: Diagnostics { gap: 0.0, iterations: evaluated, branches: 0, elapsed_ms: 0 },
    })
}

/// `P(target | evidence)` under one explicit vertex selection of the full
/// network.
pub fn evaluate_selection(
    net: &CredalNetwork,
    query: &Query,
    selection: &VertexSelection,
) -> Result<f64, OracleError> {
    query.check(net)?;
    let lists = vertex_lists(net)?;
    let view = SelectionView { lists: &lists, choices: &selection.choices };
    let dist = ve_target_distribution(net, &view, query, None);
    let joint = dist[query.target.1];
    let pe: f64 = dist.iter().sum();
    if pe <= 0.0 {
        return Err(OracleError::UndefinedConditional);
    }
    Ok(joint / pe)
}

/// Steepest-ascent hill climbing over vertex selections: one column move at
/// a time, ties broken by the lowest column index, with seeded random
/// restarts. The returned value is attained by the returned selection, hence
/// a valid inner bound.
pub fn local_search_bound(
    net: &CredalNetwork,
    query: &Query,
    bound: Bound,
    restarts: usize,
    seed: u64,
) -> Result<(f64, VertexSelection), OracleError> {
    let search = Search::prepare(net, query)?;
    let sign = match bound {
        Bound::Upper => 1.0,
        Bound::Lower => -1.0,
    };
    let score = |v: Option<f64>| v.map(|x| sign * x);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;

    for restart in 0..restarts.max(1) {
        let mut choices = search.fresh_choices();
        if restart > 0 {
            for &(var, slot, count) in &search.slots {
                choices[var][slot] = (rng.next_u64() % count as u64) as usize;
            }
        }
        let mut current = score(search.value(&choices));
        loop {
            let mut improved = false;
            let mut best_move: Option<(usize, usize, f64)> = None;
            for (i, &(var, slot, count)) in search.slots.iter().enumerate() {
                let home = choices[var][slot];
                for k in 0..count {
                    if k == home {
                        continue;
                    }
                    choices[var][slot] = k;
                    let cand = score(search.value(&choices));
                    if let Some(c) = cand {
                        let beats_current = match current {
                            Some(cur) => c > cur,
                            None => true,
                        };
                        let beats_best = match best_move {
                            Some((_, _, b)) => c > b,
                            None => beats_current,
                        };
                        if beats_current && beats_best {
                            best_move = Some((i, k, c));
                        }
                    }
                }
                choices[var][slot] = home;
            }
            if let Some((i, k, value)) = best_move {
                let (var, slot, _) = search.slots[i];
                choices[var][slot] = k;
                current = Some(value);
                improved = true;
            }
            if !improved {
                break;
            }
        }
        if let Some(cur) = current {
            let replace = match &best {
                Some((b, _)) => cur > *b,
                None => true,
            };
            if replace {
                best = Some((cur, choices.clone()));
            }
        }
    }

    let (scored, choices) = best.ok_or(OracleError::UndefinedConditional)?;
    Ok((sign * scored, search.to_original(choices)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, LocalCredalSpec, SeparateVertexForm, Variable};

    fn interval_net() -> CredalNetwork {
        // X -> Y, P(x) in {0.2, 0.7}, p(y|x)=0.8, p(y|!x) in {0.1, 0.3}
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
    fn two_node_bounds_by_enumeration() {
        let res = exact_bounds_enumeration(&interval_net(), &Query::marginal(1, 0)).unwrap();
        assert!((res.lower - 0.24).abs() < 1e-12);
        assert!((res.upper - 0.65).abs() < 1e-12);
        assert_eq!(res.status, SolveStatus::Exact);
        assert_eq!(res.diagnostics.iterations, 4);
    }

    #[test]
    fn singleton_collapses_to_point() {
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x")],
            parents: vec![vec![]],
            local: vec![LocalCredalSpec::singleton(vec![vec![0.4, 0.6]])],
        };
        let res = exact_bounds_enumeration(&net, &Query::marginal(0, 0)).unwrap();
        assert_eq!(res.lower, res.upper);
        assert!((res.lower - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let err = exact_bounds_enumeration_with_cap(&interval_net(), &Query::marginal(1, 0), 3)
            .unwrap_err();
        assert!(matches!(err, OracleError::TooLargeForOracle { combinations: 4, cap: 3 }));
    }

    #[test]
    fn local_search_on_singleton_is_exact() {
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x")],
            parents: vec![vec![]],
            local: vec![LocalCredalSpec::singleton(vec![vec![0.4, 0.6]])],
        };
        let (v, _) = local_search_bound(&net, &Query::marginal(0, 0), Bound::Upper, 1, 7).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn local_search_attains_enumeration_bounds_here() {
        let net = interval_net();
        let q = Query::marginal(1, 0);
        let exact = exact_bounds_enumeration(&net, &q).unwrap();
        let (up, sel_up) = local_search_bound(&net, &q, Bound::Upper, 5, 11).unwrap();
        let (lo, sel_lo) = local_search_bound(&net, &q, Bound::Lower, 5, 11).unwrap();
        assert!((up - exact.upper).abs() < 1e-12);
        assert!((lo - exact.lower).abs() < 1e-12);
        // returned values are attained by the returned selections
        assert!((evaluate_selection(&net, &q, &sel_up).unwrap() - up).abs() < 1e-12);
        assert!((evaluate_selection(&net, &q, &sel_lo).unwrap() - lo).abs() < 1e-12);
    }

    #[test]
    fn conditional_enumeration_takes_ratio() {
        let net = interval_net();
        let q = Query {
            target: (0, 0),
            evidence: vec![(1, 0)],
            direction: Direction::Both,
        };
        let res = exact_bounds_enumeration(&net, &q).unwrap();
        // P(x|y) per selection: px*0.8 / (px*0.8 + (1-px)*q)
        let vals = [
            (0.2, 0.1),
            (0.2, 0.3),
            (0.7, 0.1),
            (0.7, 0.3),
        ]
        .map(|(px, q)| px * 0.8 / (px * 0.8 + (1.0 - px) * q));
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((res.lower - lo).abs() < 1e-12);
        assert!((res.upper - hi).abs() < 1e-12);
    }
}
