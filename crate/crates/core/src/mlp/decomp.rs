//! The shared elimination plan behind the MP decomposition and the
//! elimination-tree message passes.
//!
//! Both the symbolic MP builder and the interval evaluators must agree on
//! bucket contents, elimination order, and entry indexing, so all of them
//! interpret this one structure.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{CredalNetwork, Query};
use crate::oracle::Factor;
use crate::util::{config_index, decode_config};

/// Whether the target variable is fixed to its queried value or kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    /// Target fixed: the plan computes the scalar `P(target = x, evidence)`.
    TargetSliced,
    /// Target kept: the plan computes the vector `P(target, evidence)`.
    EvidenceOnly,
}

/// A live factor: either the (sliced) CPT of a variable or the result of an
/// earlier elimination step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanSource {
    Cpt(usize),
    Step(usize),
}

/// The sliced CPT factor of one relevant variable.
#[derive(Debug, Clone)]
pub struct PlanFactor {
    pub var: usize,
    pub scope: Vec<usize>,
    pub cards: Vec<usize>,
}

/// One elimination: multiply `inputs`, sum out `eliminated`.
#[derive(Debug, Clone)]
pub struct PlanStep {
    pub eliminated: usize,
    pub inputs: Vec<PlanSource>,
    pub scope: Vec<usize>,
    pub cards: Vec<usize>,
}

/// Identifies one entry of one intermediate elimination function; the key
/// under which range maps are exchanged between solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StepEntry {
    pub step: u32,
    pub entry: u32,
}

/// Per-intermediate-entry ranges, as produced by the A/R++ pass.
pub type RangeMap = alloc::collections::BTreeMap<StepEntry, (f64, f64)>;

#[derive(Debug, Clone)]
pub struct DecompositionPlan {
    pub kind: PlanKind,
    /// Per-variable fixed value (evidence, plus the target when sliced).
    pub slice: Vec<Option<usize>>,
    /// Variables inside the ancestral closure of target and evidence.
    pub relevant: Vec<usize>,
    pub factors: Vec<PlanFactor>,
    pub steps: Vec<PlanStep>,
    /// Factors still alive after the last step; their product is the result.
    pub final_inputs: Vec<PlanSource>,
    /// Scope of the result: empty or `[target]`.
    pub result_scope: Vec<usize>,
}

impl DecompositionPlan {
    pub fn build(net: &CredalNetwork, query: &Query, kind: PlanKind) -> Self {
        let (tvar, tval) = query.target;
        let mut seeds = vec![tvar];
        seeds.extend(query.evidence.iter().map(|&(v, _)| v));
        let relevant = net.ancestral_closure(seeds);

        let mut slice = vec![None; net.num_vars()];
        for &(v, x) in &query.evidence {
            slice[v] = Some(x);
        }
        if kind == PlanKind::TargetSliced {
            slice[tvar] = Some(tval);
        }

        let mut factors = Vec::with_capacity(relevant.len());
        for &var in &relevant {
            let mut scope: Vec<usize> = net.parents[var].clone();
            scope.push(var);
            scope.sort_unstable();
            scope.retain(|&v| slice[v].is_none());
            let cards: Vec<usize> = scope.iter().map(|&v| net.cardinality(v)).collect();
            factors.push(PlanFactor { var, scope, cards });
        }

        let to_eliminate: Vec<usize> = relevant
            .iter()
            .copied()
            .filter(|&v| v != tvar && slice[v].is_none())
            .collect();
        let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.scope.clone()).collect();
        let order =
            crate::oracle::min_degree_order(&scopes, &to_eliminate, net.num_vars());

        let mut alive: Vec<(PlanSource, Vec<usize>)> = factors
            .iter()
            .enumerate()
            .map(|(i, f)| (PlanSource::Cpt(i), f.scope.clone()))
            .collect();
        let mut steps: Vec<PlanStep> = Vec::with_capacity(order.len());
        for &var in &order {
            let mut inputs = Vec::new();
            let mut union: Vec<usize> = Vec::new();
            alive.retain(|(src, scope)| {
                if scope.contains(&var) {
                    inputs.push(*src);
                    for &v in scope {
                        if !union.contains(&v) {
                            union.push(v);
                        }
                    }
                    false
                } else {
                    true
                }
            });
            debug_assert!(!inputs.is_empty(), "every variable has its own CPT factor");
            union.retain(|&v| v != var);
            union.sort_unstable();
            let cards = union.iter().map(|&v| net.cardinality(v)).collect();
            let step =
                PlanStep { eliminated: var, inputs, scope: union.clone(), cards };
            alive.push((PlanSource::Step(steps.len()), union));
            steps.push(step);
        }

        let final_inputs: Vec<PlanSource> = alive.iter().map(|&(src, _)| src).collect();
        let result_scope = match kind {
            PlanKind::TargetSliced => vec![],
            PlanKind::EvidenceOnly => vec![tvar],
        };
        DecompositionPlan { kind, slice, relevant, factors, steps, final_inputs, result_scope }
    }

    pub fn scope_of(&self, src: PlanSource) -> (&[usize], &[usize]) {
        match src {
            PlanSource::Cpt(i) => (&self.factors[i].scope, &self.factors[i].cards),
            PlanSource::Step(i) => (&self.steps[i].scope, &self.steps[i].cards),
        }
    }

    /// Numeric interpretation: evaluates every step over concrete tables and
    /// returns (per-step entry values, result vector). The result vector has
    /// one entry for `TargetSliced` plans.
    pub fn eval_numeric<T: crate::oracle::TableSource + ?Sized>(
        &self,
        net: &CredalNetwork,
        tables: &T,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let cpt_table = |i: usize| -> Factor {
            let pf = &self.factors[i];
            sliced_cpt_factor(net, pf.var, &self.slice, |c, x| tables.entry(pf.var, c, x))
        };
        let mut step_values: Vec<Vec<f64>> = Vec::with_capacity(self.steps.len());
        let mut step_factors: Vec<Factor> = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let mut product = Factor::scalar(1.0);
            for &src in &step.inputs {
                let f = match src {
                    PlanSource::Cpt(i) => cpt_table(i),
                    PlanSource::Step(i) => step_factors[i].clone(),
                };
                product = product.multiply(&f);
            }
            let reduced = product.sum_out(step.eliminated);
            debug_assert_eq!(reduced.scope, step.scope);
            step_values.push(reduced.table.clone());
            step_factors.push(reduced);
        }
        let mut result = Factor::scalar(1.0);
        for &src in &self.final_inputs {
            let f = match src {
                PlanSource::Cpt(i) => cpt_table(i),
                PlanSource::Step(i) => step_factors[i].clone(),
            };
            result = result.multiply(&f);
        }
        debug_assert_eq!(result.scope, self.result_scope);
        (step_values, result.table)
    }
}

/// Builds the CPT factor of `var` with all sliced variables fixed.
pub(crate) fn sliced_cpt_factor(
    net: &CredalNetwork,
    var: usize,
    slice: &[Option<usize>],
    mut entry: impl FnMut(usize, usize) -> f64,
) -> Factor {
    let mut full_scope: Vec<usize> = net.parents[var].clone();
    full_scope.push(var);
    full_scope.sort_unstable();
    let scope: Vec<usize> = full_scope.iter().copied().filter(|&v| slice[v].is_none()).collect();
    let cards: Vec<usize> = scope.iter().map(|&v| net.cardinality(v)).collect();
    let parent_cards = net.parent_cards(var);
    let total: usize = cards.iter().product();
    let mut table = vec![0.0; total];
    let mut cfg = vec![0usize; scope.len()];
    let mut parent_vals = vec![0usize; net.parents[var].len()];
    for (idx, slot) in table.iter_mut().enumerate() {
        decode_config(idx, &cards, &mut cfg);
        let value_of = |v: usize| -> usize {
            if let Some(fixed) = slice[v] {
                fixed
            } else {
                let pos = scope.iter().position(|&s| s == v).unwrap();
                cfg[pos]
            }
        };
        for (k, &p) in net.parents[var].iter().enumerate() {
            parent_vals[k] = value_of(p);
        }
        let column = config_index(&parent_vals, &parent_cards);
        *slot = entry(column, value_of(var));
    }
    Factor { scope, cards, table }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalCredalSpec, Variable};
    use crate::oracle::singleton_tables;

    fn chain3() -> CredalNetwork {
        CredalNetwork {
            variables: vec![
                Variable::boolean("a"),
                Variable::boolean("b"),
                Variable::boolean("c"),
            ],
            parents: vec![vec![], vec![0], vec![1]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
                LocalCredalSpec::singleton(vec![vec![0.6, 0.4], vec![0.2, 0.8]]),
            ],
        }
    }

    #[test]
    fn sliced_plan_reproduces_ve() {
        let net = chain3();
        let q = Query::marginal(2, 0);
        let plan = DecompositionPlan::build(&net, &q, PlanKind::TargetSliced);
        let tables = singleton_tables(&net).unwrap();
        let (_, result) = plan.eval_numeric(&net, &tables);
        assert_eq!(result.len(), 1);
        let expect = crate::oracle::ve_marginal(&net, &q).unwrap();
        assert!((result[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn evidence_only_plan_gives_target_vector() {
        let net = chain3();
        let q = Query::conditional(2, 0, vec![(0, 1)]);
        let plan = DecompositionPlan::build(&net, &q, PlanKind::EvidenceOnly);
        let tables = singleton_tables(&net).unwrap();
        let (_, result) = plan.eval_numeric(&net, &tables);
        assert_eq!(result.len(), 2);
        let (joint, pe) = crate::oracle::ve_joint_and_evidence(&net, &q).unwrap();
        assert!((result[0] - joint).abs() < 1e-12);
        assert!((result.iter().sum::<f64>() - pe).abs() < 1e-12);
    }

    #[test]
    fn chain_plan_eliminates_in_topological_order() {
        let net = chain3();
        let plan =
            DecompositionPlan::build(&net, &Query::marginal(2, 0), PlanKind::TargetSliced);
        let order: Vec<usize> = plan.steps.iter().map(|s| s.eliminated).collect();
        assert_eq!(order, vec![0, 1]);
    }
}
