//! Formula evaluation against parent configurations and the grounding of a
//! relational network into a propositional one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    check_synergy, synergy_row, AtomPattern, Binder, BinderConstraint, CombineKind, Domain,
    FormulaNode, GroundAtom, RelationalCredalNetwork, RelationalError, Term,
};
use crate::model::{
    ConstraintForm, CredalNetwork, LocalCredalSpec, MultilinearConstraint, ParamId, RelOp,
    SeparateVertexForm, Variable, VERTEX_TOL,
};

/// One column's contribution produced by formula evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum RowBound {
    /// `p(x = true | column)` lies in `[lower, upper]`, freely per column.
    Interval { lower: f64, upper: f64 },
    /// The column equals the shared leak parameter of synergy `instance`.
    Leak { instance: usize, lower: f64, upper: f64 },
}

impl RowBound {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            RowBound::Interval { lower, upper } => (lower, upper),
            RowBound::Leak { lower, upper, .. } => (lower, upper),
        }
    }
}

/// Grounded conditional model of one atom: its parent atoms (in order of
/// first appearance in the formula) and one row per parent configuration
/// (last parent fastest, value index 0 = true).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedCpt {
    pub parents: Vec<GroundAtom>,
    pub rows: Vec<RowBound>,
}

type Bindings = BTreeMap<String, String>;

struct Walker<'a> {
    rnet: &'a RelationalCredalNetwork,
    domain: &'a Domain,
    owner: usize,
}

/// Cumulative-synergy instance discovered during parent collection,
/// identified by its branch path from the formula root.
struct CsInstance {
    path: Vec<bool>,
    links: Vec<(GroundAtom, f64)>,
    leak: (f64, f64),
}

impl<'a> Walker<'a> {
    fn resolve(&self, term: &Term, bindings: &Bindings) -> Result<String, RelationalError> {
        match term {
            Term::Var(v) => bindings
                .get(v)
                .cloned()
                .ok_or_else(|| RelationalError::UnboundVariable(v.clone())),
            Term::Const(c) => {
                if self.domain.objects.contains(c) {
                    Ok(c.clone())
                } else {
                    Err(RelationalError::UnknownObject(c.clone()))
                }
            }
        }
    }

    fn ground_pattern(
        &self,
        pattern: &AtomPattern,
        bindings: &Bindings,
    ) -> Result<GroundAtom, RelationalError> {
        let Some(rel) = self.rnet.relation_index(&pattern.relation) else {
            return Err(RelationalError::UnknownRelation(pattern.relation.clone()));
        };
        if !self.rnet.parents[self.owner].contains(&rel) {
            return Err(RelationalError::MentionedNotParent {
                relation: self.rnet.relations[self.owner].name.clone(),
                mentioned: pattern.relation.clone(),
            });
        }
        let expected = self.rnet.relations[rel].arity;
        if pattern.args.len() != expected {
            return Err(RelationalError::ArityMismatch {
                relation: pattern.relation.clone(),
                expected,
                found: pattern.args.len(),
            });
        }
        let mut args = Vec::with_capacity(pattern.args.len());
        for t in &pattern.args {
            args.push(self.resolve(t, bindings)?);
        }
        Ok(GroundAtom { relation: pattern.relation.clone(), args })
    }

    fn binder_objects(
        &self,
        binder: &Binder,
        bindings: &Bindings,
    ) -> Result<Vec<String>, RelationalError> {
        let mut out = Vec::new();
        'objects: for o in &self.domain.objects {
            for c in &binder.constraints {
                let (want_eq, term) = match c {
                    BinderConstraint::Eq(t) => (true, t),
                    BinderConstraint::Ne(t) => (false, t),
                };
                let resolved = self.resolve(term, bindings)?;
                if (o == &resolved) != want_eq {
                    continue 'objects;
                }
            }
            out.push(o.clone());
        }
        Ok(out)
    }

    /// Expands a combine node's inputs over its binder; each item keeps its
    /// own bindings.
    fn expand(
        &self,
        inputs: &'a [FormulaNode],
        binder: &Option<Binder>,
        bindings: &Bindings,
    ) -> Result<Vec<(&'a FormulaNode, Bindings)>, RelationalError> {
        let mut items = Vec::new();
        match binder {
            None => {
                for input in inputs {
                    items.push((input, bindings.clone()));
                }
            }
            Some(b) => {
                for input in inputs {
                    for o in self.binder_objects(b, bindings)? {
                        let mut inner = bindings.clone();
                        inner.insert(b.var.clone(), o);
                        items.push((input, inner));
                    }
                }
            }
        }
        Ok(items)
    }

    /// First pass: registers parent atoms in order of first appearance,
    /// records synergy instances, and checks structural rules.
    fn collect(
        &self,
        node: &'a FormulaNode,
        bindings: &Bindings,
        inside_combine: bool,
        path: &mut Vec<bool>,
        parents: &mut Vec<GroundAtom>,
        seen: &mut BTreeSet<GroundAtom>,
        synergies: &mut Vec<CsInstance>,
    ) -> Result<(), RelationalError> {
        match node {
            FormulaNode::Constant(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(RelationalError::OutOfRange(*p));
                }
                Ok(())
            }
            FormulaNode::IntervalConstant(l, u) => {
                if !(0.0..=1.0).contains(l) || !(0.0..=1.0).contains(u) || l > u {
                    return Err(RelationalError::InvalidInterval(*l, *u));
                }
                Ok(())
            }
            FormulaNode::Atom(pattern) => {
                let atom = self.ground_pattern(pattern, bindings)?;
                if seen.insert(atom.clone()) {
                    parents.push(atom);
                }
                Ok(())
            }
            FormulaNode::Indicator { condition, then_branch, else_branch } => {
                let atom = self.ground_pattern(condition, bindings)?;
                if seen.insert(atom.clone()) {
                    parents.push(atom);
                }
                path.push(true);
                self.collect(then_branch, bindings, inside_combine, path, parents, seen, synergies)?;
                path.pop();
                path.push(false);
                self.collect(else_branch, bindings, inside_combine, path, parents, seen, synergies)?;
                path.pop();
                Ok(())
            }
            FormulaNode::Combine { kind, inputs, binder, leak } => {
                let items = self.expand(inputs, binder, bindings)?;
                if *kind == CombineKind::CumulativeSynergy {
                    if inside_combine {
                        return Err(RelationalError::NestedSynergy);
                    }
                    let leak = leak.ok_or(RelationalError::MissingLeak)?;
                    let mut links = Vec::with_capacity(items.len());
                    for (item, item_bindings) in &items {
                        let (cond, p) = as_link(item)?;
                        let atom = self.ground_pattern(cond, item_bindings)?;
                        if seen.insert(atom.clone()) {
                            parents.push(atom.clone());
                        }
                        links.push((atom, p));
                    }
                    check_synergy(
                        &links.iter().map(|&(_, p)| p).collect::<Vec<_>>(),
                        leak,
                    )?;
                    synergies.push(CsInstance { path: path.clone(), links, leak });
                    Ok(())
                } else {
                    for (item, item_bindings) in &items {
                        self.collect(item, item_bindings, true, path, parents, seen, synergies)?;
                    }
                    Ok(())
                }
            }
        }
    }

    /// Second pass: evaluates the formula under one truth assignment of the
    /// parent atoms, yielding interval bounds or a reference to a synergy
    /// leak row. Interval combination is exact because every combination
    /// kind is monotone in each argument.
    fn eval(
        &self,
        node: &FormulaNode,
        bindings: &Bindings,
        assign: &BTreeMap<GroundAtom, bool>,
        path: &mut Vec<bool>,
        synergies: &[CsInstance],
    ) -> Result<EvalRow, RelationalError> {
        match node {
            FormulaNode::Constant(p) => Ok(EvalRow::Interval(*p, *p)),
            FormulaNode::IntervalConstant(l, u) => Ok(EvalRow::Interval(*l, *u)),
            FormulaNode::Atom(pattern) => {
                let atom = self.ground_pattern(pattern, bindings)?;
                let v = assign[&atom];
                Ok(if v { EvalRow::Interval(1.0, 1.0) } else { EvalRow::Interval(0.0, 0.0) })
            }
            FormulaNode::Indicator { condition, then_branch, else_branch } => {
                let atom = self.ground_pattern(condition, bindings)?;
                let taken = assign[&atom];
                path.push(taken);
                let r = self.eval(
                    if taken { then_branch } else { else_branch },
                    bindings,
                    assign,
                    path,
                    synergies,
                );
                path.pop();
                r
            }
            FormulaNode::Combine { kind, inputs, binder, .. } => {
                if *kind == CombineKind::CumulativeSynergy {
                    let idx = synergies
                        .iter()
                        .position(|s| s.path == *path)
                        .expect("synergy instance registered during collection");
                    let inst = &synergies[idx];
                    let active: Vec<f64> = inst
                        .links
                        .iter()
                        .filter(|(atom, _)| assign[atom])
                        .map(|&(_, p)| p)
                        .collect();
                    if active.is_empty() {
                        return Ok(EvalRow::LeakRow(idx));
                    }
                    let (lo, hi) = synergy_row(&active, inst.leak);
                    return Ok(EvalRow::Interval(lo, hi));
                }
                let items = self.expand(inputs, binder, bindings)?;
                let mut los = Vec::with_capacity(items.len());
                let mut his = Vec::with_capacity(items.len());
                for (item, item_bindings) in &items {
                    match self.eval(item, item_bindings, assign, path, synergies)? {
                        EvalRow::Interval(l, u) => {
                            los.push(l);
                            his.push(u);
                        }
                        EvalRow::LeakRow(_) => return Err(RelationalError::NestedSynergy),
                    }
                }
                let lo = combine_point(*kind, &los)?;
                let hi = combine_point(*kind, &his)?;
                Ok(EvalRow::Interval(lo, hi))
            }
        }
    }
}

enum EvalRow {
    Interval(f64, f64),
    LeakRow(usize),
}

fn as_link(node: &FormulaNode) -> Result<(&AtomPattern, f64), RelationalError> {
    if let FormulaNode::Indicator { condition, then_branch, else_branch } = node {
        if let (FormulaNode::Constant(p), FormulaNode::Constant(z)) =
            (then_branch.as_ref(), else_branch.as_ref())
        {
            if *z == 0.0 {
                return Ok((condition, *p));
            }
        }
    }
    Err(RelationalError::MalformedSynergyLink)
}

/// Pointwise combination; applied separately to lower and upper ends, which
/// is exact since all kinds are nondecreasing in every argument.
fn combine_point(kind: CombineKind, values: &[f64]) -> Result<f64, RelationalError> {
    match kind {
        CombineKind::NoisyOr => super::noisy_or(values),
        CombineKind::Min => values
            .iter()
            .cloned()
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .ok_or(RelationalError::EmptyCombination(kind)),
        CombineKind::Max => values
            .iter()
            .cloned()
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .ok_or(RelationalError::EmptyCombination(kind)),
        CombineKind::Mean => {
            if values.is_empty() {
                Err(RelationalError::EmptyCombination(kind))
            } else {
                Ok(values.iter().sum::<f64>() / values.len() as f64)
            }
        }
        CombineKind::CumulativeSynergy => unreachable!("handled by caller"),
    }
}

/// Evaluates the formula of `atom`'s relation for every configuration of its
/// ground parents.
pub fn eval_formula(
    rnet: &RelationalCredalNetwork,
    atom: &GroundAtom,
    domain: &Domain,
) -> Result<GroundedCpt, RelationalError> {
    let Some(rel) = rnet.relation_index(&atom.relation) else {
        return Err(RelationalError::UnknownRelation(atom.relation.clone()));
    };
    let relation = &rnet.relations[rel];
    if atom.args.len() != relation.arity {
        return Err(RelationalError::ArityMismatch {
            relation: atom.relation.clone(),
            expected: relation.arity,
            found: atom.args.len(),
        });
    }
    for a in &atom.args {
        if !domain.objects.contains(a) {
            return Err(RelationalError::UnknownObject(a.clone()));
        }
    }
    let formula = &rnet.formulas[rel];
    let mut bindings = Bindings::new();
    for (param, arg) in formula.params.iter().zip(&atom.args) {
        bindings.insert(param.clone(), arg.clone());
    }

    let walker = Walker { rnet, domain, owner: rel };
    let mut parents = Vec::new();
    let mut seen = BTreeSet::new();
    let mut synergies = Vec::new();
    walker.collect(
        &formula.body,
        &bindings,
        false,
        &mut Vec::new(),
        &mut parents,
        &mut seen,
        &mut synergies,
    )?;

    let m = parents.len();
    let mut rows = Vec::with_capacity(1 << m);
    for col in 0..(1usize << m) {
        let mut assign = BTreeMap::new();
        for (i, p) in parents.iter().enumerate() {
            // value index 0 = true, last parent fastest
            assign.insert(p.clone(), (col >> (m - 1 - i)) & 1 == 0);
        }
        let row = walker.eval(&formula.body, &bindings, &assign, &mut Vec::new(), &synergies)?;
        rows.push(match row {
            EvalRow::Interval(lo, hi) => RowBound::Interval { lower: lo, upper: hi },
            EvalRow::LeakRow(idx) => {
                let (lo, hi) = synergies[idx].leak;
                RowBound::Leak { instance: idx, lower: lo, upper: hi }
            }
        });
    }
    Ok(GroundedCpt { parents, rows })
}

/// Grounds the relational network over `domain` into the propositional
/// credal network covering the ancestral closure of `targets`.
///
/// Known facts become clamped observed nodes with point distributions; every
/// other atom gets the local credal set its formula describes. Node order is
/// topological with atom-name tie-breaks, so identical inputs always yield
/// the identical network.
pub fn ground(
    rnet: &RelationalCredalNetwork,
    domain: &Domain,
    targets: &[GroundAtom],
) -> Result<CredalNetwork, RelationalError> {
    if !targets.is_empty() && domain.objects.is_empty() {
        return Err(RelationalError::EmptyDomain);
    }
    for (atom, _) in &domain.facts {
        let Some(rel) = rnet.relation_index(&atom.relation) else {
            return Err(RelationalError::UnknownRelation(atom.relation.clone()));
        };
        if atom.args.len() != rnet.relations[rel].arity {
            return Err(RelationalError::ArityMismatch {
                relation: atom.relation.clone(),
                expected: rnet.relations[rel].arity,
                found: atom.args.len(),
            });
        }
    }

    // Ancestral closure, facts truncating ancestry.
    let mut cpts: BTreeMap<GroundAtom, Option<GroundedCpt>> = BTreeMap::new();
    let mut work: Vec<GroundAtom> = targets.to_vec();
    while let Some(atom) = work.pop() {
        if cpts.contains_key(&atom) {
            continue;
        }
        if domain.facts.contains_key(&atom) {
            let Some(rel) = rnet.relation_index(&atom.relation) else {
                return Err(RelationalError::UnknownRelation(atom.relation.clone()));
            };
            if atom.args.len() != rnet.relations[rel].arity {
                return Err(RelationalError::ArityMismatch {
                    relation: atom.relation.clone(),
                    expected: rnet.relations[rel].arity,
                    found: atom.args.len(),
                });
            }
            cpts.insert(atom, None);
            continue;
        }
        let cpt = eval_formula(rnet, &atom, domain)?;
        work.extend(cpt.parents.iter().cloned());
        cpts.insert(atom, Some(cpt));
    }

    // Deterministic topological order: repeatedly take the name-smallest
    // atom whose parents are all placed.
    let mut order: Vec<GroundAtom> = Vec::with_capacity(cpts.len());
    let mut placed: BTreeSet<GroundAtom> = BTreeSet::new();
    while placed.len() < cpts.len() {
        let next = cpts
            .iter()
            .filter(|(a, _)| !placed.contains(*a))
            .find(|(_, cpt)| {
                cpt.as_ref().map_or(true, |c| c.parents.iter().all(|p| placed.contains(p)))
            })
            .map(|(a, _)| a.clone())
            .expect("ground graph is acyclic because the relation DAG is");
        placed.insert(next.clone());
        order.push(next);
    }

    let index: BTreeMap<&GroundAtom, usize> =
        order.iter().enumerate().map(|(i, a)| (a, i)).collect();

    let mut variables = Vec::with_capacity(order.len());
    let mut parents = Vec::with_capacity(order.len());
    let mut local = Vec::with_capacity(order.len());
    for (i, atom) in order.iter().enumerate() {
        variables.push(Variable::boolean(format!("{atom}")));
        match &cpts[atom] {
            None => {
                let truth = domain.facts[atom];
                parents.push(vec![]);
                local.push(LocalCredalSpec::singleton(vec![if truth {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }]));
            }
            Some(cpt) => {
                parents.push(cpt.parents.iter().map(|p| index[p]).collect::<Vec<_>>());
                local.push(spec_from_rows(&cpt.rows, i));
            }
        }
    }
    Ok(CredalNetwork { variables, parents, local })
}

/// Builds the local spec of one grounded node. When a synergy leak spans a
/// single column the columns stay separately specified (interval vertices);
/// a leak shared by several columns forces constraint form with equality
/// coupling between those columns.
fn spec_from_rows(rows: &[RowBound], var_index: usize) -> LocalCredalSpec {
    let mut leak_columns: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (c, row) in rows.iter().enumerate() {
        if let RowBound::Leak { instance, .. } = row {
            leak_columns.entry(*instance).or_default().push(c);
        }
    }
    let coupled = leak_columns.values().any(|cols| cols.len() > 1);

    if !coupled {
        let columns = rows
            .iter()
            .map(|row| {
                let (lo, hi) = row.bounds();
                if (hi - lo).abs() <= VERTEX_TOL {
                    vec![vec![lo, 1.0 - lo]]
                } else {
                    vec![vec![lo, 1.0 - lo], vec![hi, 1.0 - hi]]
                }
            })
            .collect();
        return LocalCredalSpec::SeparateVertices(SeparateVertexForm { columns });
    }

    let boxes = rows
        .iter()
        .map(|row| {
            let (lo, hi) = row.bounds();
            vec![(lo, hi), (1.0 - hi, 1.0 - lo)]
        })
        .collect();
    let mut constraints = Vec::new();
    for cols in leak_columns.values() {
        for &c in &cols[1..] {
            constraints.push(MultilinearConstraint {
                terms: vec![
                    (1.0, vec![ParamId { var: var_index, value: 0, column: cols[0] }]),
                    (-1.0, vec![ParamId { var: var_index, value: 0, column: c }]),
                ],
                relation: RelOp::Eq,
                rhs: 0.0,
            });
        }
    }
    LocalCredalSpec::Constraints(ConstraintForm { boxes, constraints })
}
