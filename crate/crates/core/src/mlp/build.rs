//! Symbolic interpretation of the elimination plan: turns a credal query
//! into an explicit multilinear program with one artificial variable per
//! intermediate-function entry, keeping every term at degree two or less.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::decomp::{DecompositionPlan, PlanKind, PlanSource, StepEntry};
use super::program::{MpConstraint, MpVar, MultilinearProgram, PolyExpr, Sense, VarKind};
use crate::model::{
    Bound, CredalNetwork, LocalCredalSpec, Query, QueryError, RelOp, VERTEX_TOL,
};
use crate::util::decode_config;

#[derive(Debug, Clone, PartialEq)]
pub enum MlpError {
    Query(QueryError),
    /// The root linear relaxation is infeasible: the constraints are
    /// inconsistent.
    InconsistentConstraints,
    /// The LP solver gave up; results would be unreliable.
    LpFailure,
    /// No feasible point was found for an incumbent.
    NoFeasiblePoint,
    /// Evidence upper bound is zero: conditioning undefined.
    ZeroProbabilityEvidence,
}

impl core::fmt::Display for MlpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MlpError::Query(e) => write!(f, "{e}"),
            MlpError::InconsistentConstraints => {
                write!(f, "constraints are inconsistent (infeasible root relaxation)")
            }
            MlpError::LpFailure => write!(f, "linear solver failed"),
            MlpError::NoFeasiblePoint => write!(f, "no feasible point found"),
            MlpError::ZeroProbabilityEvidence => {
                write!(f, "evidence has zero upper probability")
            }
        }
    }
}

impl From<QueryError> for MlpError {
    fn from(e: QueryError) -> Self {
        MlpError::Query(e)
    }
}

/// A symbolic factor: per-entry polynomial expressions plus interval bounds
/// carried along for variable boxes.
#[derive(Debug, Clone)]
struct SymFactor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    entries: Vec<PolyExpr>,
    bounds: Vec<(f64, f64)>,
}

impl SymFactor {
    fn max_entry_degree(&self) -> usize {
        self.entries.iter().map(|e| e.degree()).max().unwrap_or(0)
    }
}

/// Variable/constraint store shared across one or more plan interpretations
/// (the fractional builder reuses it for numerator and denominator).
pub(crate) struct Session<'a> {
    net: &'a CredalNetwork,
    pub vars: Vec<MpVar>,
    pub constraints: Vec<MpConstraint>,
    pub definitions: Vec<(usize, PolyExpr)>,
    /// (var, column, value) -> entry expression, for lazily created columns.
    entry_cache: BTreeMap<(usize, usize), Vec<PolyExpr>>,
    entry_bounds: BTreeMap<(usize, usize), Vec<(f64, f64)>>,
    /// constraint-form variables already created eagerly, per network var
    credal_done: BTreeMap<usize, Vec<Vec<Option<usize>>>>,
}

impl<'a> Session<'a> {
    pub(crate) fn new(net: &'a CredalNetwork) -> Self {
        Session {
            net,
            vars: Vec::new(),
            constraints: Vec::new(),
            definitions: Vec::new(),
            entry_cache: BTreeMap::new(),
            entry_bounds: BTreeMap::new(),
            credal_done: BTreeMap::new(),
        }
    }

    fn new_var(&mut self, name: alloc::string::String, lo: f64, hi: f64, kind: VarKind) -> usize {
        self.vars.push(MpVar { name, lo, hi, kind });
        self.vars.len() - 1
    }

    /// Entry expressions of one CPT column, creating weight or credal
    /// variables (plus simplex rows) on first touch.
    fn column(&mut self, var: usize, column: usize) -> (&Vec<PolyExpr>, &Vec<(f64, f64)>) {
        if !self.entry_cache.contains_key(&(var, column)) {
            let card = self.net.cardinality(var);
            let (exprs, bounds): (Vec<PolyExpr>, Vec<(f64, f64)>) = match &self.net.local[var] {
                LocalCredalSpec::SeparateVertices(f) => {
                    let verts = &f.columns[column];
                    if verts.len() == 1 {
                        (0..card)
                            .map(|x| (PolyExpr::constant(verts[0][x]), (verts[0][x], verts[0][x])))
                            .unzip()
                    } else {
                        let ws: Vec<usize> = (0..verts.len())
                            .map(|k| {
                                self.new_var(
                                    format!("w[{var}][c{column}][k{k}]"),
                                    0.0,
                                    1.0,
                                    VarKind::Weight { var, column, vertex: k },
                                )
                            })
                            .collect();
                        let mut simplex = PolyExpr::default();
                        for &w in &ws {
                            simplex.add_term(1.0, vec![w]);
                        }
                        self.constraints.push(MpConstraint {
                            expr: simplex,
                            op: RelOp::Eq,
                            rhs: 1.0,
                        });
                        (0..card)
                            .map(|x| {
                                let mut e = PolyExpr::default();
                                let mut lo = f64::INFINITY;
                                let mut hi = f64::NEG_INFINITY;
                                for (k, &w) in ws.iter().enumerate() {
                                    e.add_term(verts[k][x], vec![w]);
                                    lo = lo.min(verts[k][x]);
                                    hi = hi.max(verts[k][x]);
                                }
                                (e, (lo, hi))
                            })
                            .unzip()
                    }
                }
                LocalCredalSpec::ExtensiveVertices(f) => {
                    if f.tables.len() == 1 {
                        (0..card)
                            .map(|x| {
                                let v = f.tables[0][column][x];
                                (PolyExpr::constant(v), (v, v))
                            })
                            .unzip()
                    } else {
                        let ws = self.table_weights(var, f.tables.len());
                        (0..card)
                            .map(|x| {
                                let mut e = PolyExpr::default();
                                let mut lo = f64::INFINITY;
                                let mut hi = f64::NEG_INFINITY;
                                for (t, &w) in ws.iter().enumerate() {
                                    let v = f.tables[t][column][x];
                                    e.add_term(v, vec![w]);
                                    lo = lo.min(v);
                                    hi = hi.max(v);
                                }
                                (e, (lo, hi))
                            })
                            .unzip()
                    }
                }
                LocalCredalSpec::Constraints(_) => {
                    let ids = self.credal_columns(var);
                    let form = match &self.net.local[var] {
                        LocalCredalSpec::Constraints(f) => f,
                        _ => unreachable!(),
                    };
                    (0..card)
                        .map(|x| {
                            let (lo, hi) = form.boxes[column][x];
                            match ids[column][x] {
                                None => (PolyExpr::constant(lo), (lo, lo)),
                                Some(id) => (PolyExpr::var(id), (lo, hi)),
                            }
                        })
                        .unzip()
                }
            };
            self.entry_cache.insert((var, column), exprs);
            self.entry_bounds.insert((var, column), bounds);
        }
        (&self.entry_cache[&(var, column)], &self.entry_bounds[&(var, column)])
    }

    /// Table-level convex weights for an extensively specified set, created
    /// once per variable.
    fn table_weights(&mut self, var: usize, tables: usize) -> Vec<usize> {
        let existing: Vec<usize> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| matches!(v.kind, VarKind::TableWeight { var: tv, .. } if tv == var))
            .map(|(i, _)| i)
            .collect();
        if !existing.is_empty() {
            return existing;
        }
        let ws: Vec<usize> = (0..tables)
            .map(|t| {
                self.new_var(
                    format!("tw[{var}][t{t}]"),
                    0.0,
                    1.0,
                    VarKind::TableWeight { var, table: t },
                )
            })
            .collect();
        let mut simplex = PolyExpr::default();
        for &w in &ws {
            simplex.add_term(1.0, vec![w]);
        }
        self.constraints.push(MpConstraint { expr: simplex, op: RelOp::Eq, rhs: 1.0 });
        ws
    }

    /// Eagerly creates every parameter variable of a constraint-form spec,
    /// with its simplex rows and the user's multilinear constraints.
    fn credal_columns(&mut self, var: usize) -> Vec<Vec<Option<usize>>> {
        if let Some(ids) = self.credal_done.get(&var) {
            return ids.clone();
        }
        let form = match &self.net.local[var] {
            LocalCredalSpec::Constraints(f) => f.clone(),
            _ => unreachable!("credal_columns on non-constraint spec"),
        };
        let card = self.net.cardinality(var);
        let mut ids: Vec<Vec<Option<usize>>> = Vec::with_capacity(form.boxes.len());
        for (c, col) in form.boxes.iter().enumerate() {
            let mut col_ids = Vec::with_capacity(card);
            for (x, &(lo, hi)) in col.iter().enumerate() {
                if (hi - lo).abs() <= VERTEX_TOL {
                    col_ids.push(None);
                } else {
                    let id = self.new_var(
                        format!("theta[{var}][v{x}|c{c}]"),
                        lo,
                        hi,
                        VarKind::Credal(crate::model::ParamId { var, value: x, column: c }),
                    );
                    col_ids.push(Some(id));
                }
            }
            // simplex over the column, constants folded into the rhs
            let mut expr = PolyExpr::default();
            let mut rhs = 1.0;
            let mut any_var = false;
            for (x, id) in col_ids.iter().enumerate() {
                match id {
                    Some(v) => {
                        expr.add_term(1.0, vec![*v]);
                        any_var = true;
                    }
                    None => rhs -= form.boxes[c][x].0,
                }
            }
            if any_var {
                self.constraints.push(MpConstraint { expr, op: RelOp::Eq, rhs });
            }
            ids.push(col_ids);
        }
        // user constraints of this spec
        for cons in &form.constraints {
            let mut expr = PolyExpr::default();
            let mut rhs = cons.rhs;
            for (coef, params) in &cons.terms {
                let mut c = *coef;
                let mut vars = Vec::new();
                for p in params {
                    debug_assert_eq!(p.var, var, "constraint params belong to the owning spec");
                    match ids[p.column][p.value] {
                        Some(id) => vars.push(id),
                        None => c *= form.boxes[p.column][p.value].0,
                    }
                }
                if vars.is_empty() {
                    rhs -= c;
                } else {
                    expr.add_term(c, vars);
                }
            }
            self.constraints.push(MpConstraint { expr, op: cons.relation, rhs });
        }
        self.credal_done.insert(var, ids.clone());
        ids
    }

    fn sym_cpt(&mut self, plan: &DecompositionPlan, factor_idx: usize) -> SymFactor {
        let pf = &plan.factors[factor_idx];
        let var = pf.var;
        let scope = pf.scope.clone();
        let cards = pf.cards.clone();
        let parent_cards = self.net.parent_cards(var);
        let parents = self.net.parents[var].clone();
        let total: usize = cards.iter().product();
        let mut entries = Vec::with_capacity(total);
        let mut bounds = Vec::with_capacity(total);
        let mut cfg = vec![0usize; scope.len()];
        let mut parent_vals = vec![0usize; parents.len()];
        for idx in 0..total {
            decode_config(idx, &cards, &mut cfg);
            let value_of = |v: usize| -> usize {
                if let Some(fixed) = plan.slice[v] {
                    fixed
                } else {
                    cfg[scope.iter().position(|&s| s == v).unwrap()]
                }
            };
            for (k, &p) in parents.iter().enumerate() {
                parent_vals[k] = value_of(p);
            }
            let column = crate::util::config_index(&parent_vals, &parent_cards);
            let x = value_of(var);
            let (exprs, bnds) = self.column(var, column);
            entries.push(exprs[x].clone());
            bounds.push(bnds[x]);
        }
        SymFactor { scope, cards, entries, bounds }
    }

    fn sym_multiply(&self, a: &SymFactor, b: &SymFactor) -> SymFactor {
        let mut scope = a.scope.clone();
        for &v in &b.scope {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        scope.sort_unstable();
        let cards: Vec<usize> = scope.iter().map(|&v| self.net.cardinality(v)).collect();
        let total: usize = cards.iter().product();
        let mut entries = Vec::with_capacity(total);
        let mut bounds = Vec::with_capacity(total);
        let mut cfg = vec![0usize; scope.len()];
        for idx in 0..total {
            decode_config(idx, &cards, &mut cfg);
            let pick = |f: &SymFactor| -> usize {
                let vals: Vec<usize> = f
                    .scope
                    .iter()
                    .map(|&v| cfg[scope.iter().position(|&s| s == v).unwrap()])
                    .collect();
                crate::util::config_index(&vals, &f.cards)
            };
            let (ia, ib) = (pick(a), pick(b));
            entries.push(a.entries[ia].mul(&b.entries[ib]));
            let (la, ha) = a.bounds[ia];
            let (lb, hb) = b.bounds[ib];
            bounds.push((la * lb, ha * hb));
        }
        SymFactor { scope, cards, entries, bounds }
    }

    fn sym_sum_out(&self, f: &SymFactor, var: usize) -> SymFactor {
        let pos = f.scope.iter().position(|&v| v == var).expect("var in scope");
        let mut scope = f.scope.clone();
        scope.remove(pos);
        let mut cards = f.cards.clone();
        let var_card = cards.remove(pos);
        let total: usize = cards.iter().product();
        let mut entries = vec![PolyExpr::default(); total];
        let mut bounds = vec![(0.0, 0.0); total];
        let mut cfg = vec![0usize; scope.len()];
        let mut full = vec![0usize; f.scope.len()];
        for (idx, (entry, bound)) in entries.iter_mut().zip(bounds.iter_mut()).enumerate() {
            decode_config(idx, &cards, &mut cfg);
            full[..pos].copy_from_slice(&cfg[..pos]);
            full[pos + 1..].copy_from_slice(&cfg[pos..]);
            for v in 0..var_card {
                full[pos] = v;
                let i = crate::util::config_index(&full, &f.cards);
                entry.add(&f.entries[i]);
                bound.0 += f.bounds[i].0;
                bound.1 += f.bounds[i].1;
            }
        }
        SymFactor { scope, cards, entries, bounds }
    }

    /// Replaces every non-constant entry by a fresh variable, recording the
    /// defining equality.
    fn materialize(
        &mut self,
        f: SymFactor,
        key: Option<u32>,
        intermediates: &mut BTreeMap<StepEntry, usize>,
    ) -> SymFactor {
        let mut entries = Vec::with_capacity(f.entries.len());
        for (i, e) in f.entries.into_iter().enumerate() {
            if e.is_constant() {
                entries.push(e);
                continue;
            }
            let (lo, hi) = f.bounds[i];
            let (name, kind) = match key {
                Some(step) => (
                    format!("phi[s{step}][e{i}]"),
                    VarKind::Intermediate { step, entry: i as u32 },
                ),
                None => (format!("prod[{}]", self.vars.len()), VarKind::ProductEntry),
            };
            let id = self.new_var(name, lo.max(0.0), hi, kind);
            if let Some(step) = key {
                intermediates.insert(StepEntry { step, entry: i as u32 }, id);
            }
            let mut cons = e.clone();
            cons.add_term(-1.0, vec![id]);
            self.constraints.push(MpConstraint { expr: cons, op: RelOp::Eq, rhs: 0.0 });
            self.definitions.push((id, e));
            entries.push(PolyExpr::var(id));
        }
        SymFactor { scope: f.scope, cards: f.cards, entries, bounds: f.bounds }
    }

    /// Multiplies a bucket, inserting product-entry variables whenever a
    /// product would exceed degree two.
    fn bucket_product(
        &mut self,
        mut factors: Vec<SymFactor>,
        intermediates: &mut BTreeMap<StepEntry, usize>,
    ) -> SymFactor {
        factors.sort_by_key(|f| f.max_entry_degree());
        let mut iter = factors.into_iter();
        let mut running = iter.next().expect("nonempty bucket");
        for next in iter {
            if running.max_entry_degree() + next.max_entry_degree() > 2 {
                running = self.materialize(running, None, intermediates);
            }
            running = self.sym_multiply(&running, &next);
        }
        running
    }

    /// Interprets the whole plan; returns the result-factor expressions (one
    /// per entry of the result scope) and the intermediate-variable map.
    pub(crate) fn interpret(
        &mut self,
        plan: &DecompositionPlan,
    ) -> (Vec<PolyExpr>, BTreeMap<StepEntry, usize>) {
        let mut intermediates = BTreeMap::new();
        let mut step_results: Vec<SymFactor> = Vec::with_capacity(plan.steps.len());
        for (k, step) in plan.steps.iter().enumerate() {
            let inputs: Vec<SymFactor> = step
                .inputs
                .iter()
                .map(|src| match src {
                    PlanSource::Cpt(i) => self.sym_cpt(plan, *i),
                    PlanSource::Step(i) => step_results[*i].clone(),
                })
                .collect();
            let product = self.bucket_product(inputs, &mut intermediates);
            let summed = self.sym_sum_out(&product, step.eliminated);
            debug_assert_eq!(summed.scope, step.scope);
            let materialized = self.materialize(summed, Some(k as u32), &mut intermediates);
            step_results.push(materialized);
        }
        let finals: Vec<SymFactor> = plan
            .final_inputs
            .iter()
            .map(|src| match src {
                PlanSource::Cpt(i) => self.sym_cpt(plan, *i),
                PlanSource::Step(i) => step_results[*i].clone(),
            })
            .collect();
        let result = self.bucket_product(finals, &mut intermediates);
        debug_assert_eq!(result.scope, plan.result_scope);
        (result.entries, intermediates)
    }
}

/// A built program plus the plan it came from and the map from
/// intermediate-entry keys to program variables (for range injection).
#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub mp: MultilinearProgram,
    pub plan: DecompositionPlan,
    pub intermediates: BTreeMap<StepEntry, usize>,
}

/// Builds the multilinear program for `P(target = x, evidence)` with the
/// requested optimization direction. Evidence is absorbed into the factors;
/// conditional bounds go through the fractional solver instead.
pub fn build_multilinear_program(
    net: &CredalNetwork,
    query: &Query,
    bound: Bound,
) -> Result<BuildOutput, MlpError> {
    query.check(net)?;
    let plan = DecompositionPlan::build(net, query, PlanKind::TargetSliced);
    let mut session = Session::new(net);
    let (entries, intermediates) = session.interpret(&plan);
    debug_assert_eq!(entries.len(), 1);
    let mp = MultilinearProgram {
        vars: session.vars,
        objective: entries.into_iter().next().unwrap(),
        constraints: session.constraints,
        sense: match bound {
            Bound::Upper => Sense::Maximize,
            Bound::Lower => Sense::Minimize,
        },
        definitions: session.definitions,
    };
    Ok(BuildOutput { mp, plan, intermediates })
}

/// The fully expanded form of the query objective: one product term per
/// configuration of the summed-out variables.
#[derive(Debug, Clone)]
pub struct FlattenedObjective {
    pub expr: PolyExpr,
    /// Number of configuration terms with a nonvanishing product.
    pub terms: usize,
    /// Number of network variables each term sums over.
    pub summed_vars: usize,
}

/// Expands `P(target = x, evidence)` without any decomposition: the
/// single-polynomial form whose size the decomposition avoids.
pub fn flatten_objective(
    net: &CredalNetwork,
    query: &Query,
) -> Result<FlattenedObjective, MlpError> {
    query.check(net)?;
    let plan = DecompositionPlan::build(net, query, PlanKind::TargetSliced);
    let mut session = Session::new(net);
    let free: Vec<usize> =
        plan.relevant.iter().copied().filter(|&v| plan.slice[v].is_none()).collect();
    let cards: Vec<usize> = free.iter().map(|&v| net.cardinality(v)).collect();
    let total: usize = cards.iter().product();
    let mut expr = PolyExpr::default();
    let mut terms = 0usize;
    let mut cfg = vec![0usize; free.len()];
    for idx in 0..total {
        decode_config(idx, &cards, &mut cfg);
        let value_of = |v: usize| -> Option<usize> {
            plan.slice[v].or_else(|| free.iter().position(|&f| f == v).map(|i| cfg[i]))
        };
        let mut product = PolyExpr::constant(1.0);
        for &var in &plan.relevant {
            let parent_vals: Vec<usize> =
                net.parents[var].iter().map(|&p| value_of(p).unwrap()).collect();
            let column = crate::util::config_index(&parent_vals, &net.parent_cards(var));
            let x = value_of(var).unwrap();
            let (exprs, _) = session.column(var, column);
            product = product.mul(&exprs[x]);
        }
        if !(product.is_constant() && product.constant == 0.0) {
            terms += 1;
        }
        expr.add(&product);
    }
    Ok(FlattenedObjective { expr, terms, summed_vars: free.len() })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{ConstraintForm, Variable};

    /// The ternary chain A -> B -> C -> D -> E with every parameter free in
    /// a small box around a base table.
    pub(crate) fn ternary_chain() -> CredalNetwork {
        let labels = |_: usize| vec!["0".into(), "1".into(), "2".into()];
        let names = ["a", "b", "c", "d", "e"];
        let mut variables = Vec::new();
        let mut parents = Vec::new();
        let mut local = Vec::new();
        for (i, name) in names.iter().enumerate() {
            variables.push(Variable::new(*name, labels(i)));
            parents.push(if i == 0 { vec![] } else { vec![i - 1] });
            let columns = if i == 0 { 1 } else { 3 };
            let base = [
                [0.5, 0.3, 0.2],
                [0.2, 0.5, 0.3],
                [0.3, 0.2, 0.5],
            ];
            let boxes: Vec<Vec<(f64, f64)>> = (0..columns)
                .map(|c| {
                    (0..3)
                        .map(|x| {
                            let p = base[c % 3][x];
                            ((p - 0.1f64).max(0.0), (p + 0.1f64).min(1.0))
                        })
                        .collect()
                })
                .collect();
            local.push(LocalCredalSpec::Constraints(ConstraintForm {
                boxes,
                constraints: vec![],
            }));
        }
        CredalNetwork { variables, parents, local }
    }

    #[test]
    fn chain_decomposition_has_thirty_nonlinear_terms() {
        let net = ternary_chain();
        let out =
            build_multilinear_program(&net, &Query::marginal(4, 0), Bound::Upper).unwrap();
        assert_eq!(out.mp.nonlinear_term_count(), 30);
        assert_eq!(out.mp.max_degree(), 2);
    }

    #[test]
    fn chain_flattened_form_has_81_terms_over_4_summed_vars() {
        let net = ternary_chain();
        let flat = flatten_objective(&net, &Query::marginal(4, 0)).unwrap();
        assert_eq!(flat.terms, 81);
        assert_eq!(flat.summed_vars, 4);
    }

    #[test]
    fn single_interval_root_is_linear() {
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x")],
            parents: vec![vec![]],
            local: vec![LocalCredalSpec::Constraints(ConstraintForm {
                boxes: vec![vec![(0.2, 0.7), (0.3, 0.8)]],
                constraints: vec![],
            })],
        };
        let out =
            build_multilinear_program(&net, &Query::marginal(0, 0), Bound::Upper).unwrap();
        assert_eq!(out.mp.nonlinear_term_count(), 0);
        assert_eq!(out.mp.max_degree(), 1);
    }

    #[test]
    fn definitions_propagate_to_ve_value() {
        // decomposition fidelity on a singleton network
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x"), Variable::boolean("y")],
            parents: vec![vec![], vec![0]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
            ],
        };
        let q = Query::marginal(1, 0);
        let out = build_multilinear_program(&net, &q, Bound::Upper).unwrap();
        let mut point = vec![0.0; out.mp.vars.len()];
        out.mp.propagate_definitions(&mut point);
        let v = out.mp.objective.eval(&point);
        let expect = crate::oracle::ve_marginal(&net, &q).unwrap();
        assert!((v - expect).abs() < 1e-12);
    }
}
