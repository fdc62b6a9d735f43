//! Core data model: propositional credal networks, local credal-set
//! representations, queries, and interval results.

mod polytope;
mod validate;

pub use polytope::{hrep_to_vrep, hrep_to_vrep_with_limit, ConvertError, DEFAULT_COLUMN_LIMIT};
pub use validate::{
    qualitative_influence_constraints, validate_network, QualitativeError, ValidationReport,
    Violation,
};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Tolerance below which two vertices (or a column sum and 1) are considered
/// equal. Chosen well below the 4-decimal precision of any reported interval.
pub const VERTEX_TOL: f64 = 1e-9;

/// A finite-valued network variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    /// Ordered value names; the cardinality is `labels.len()`.
    pub labels: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Self {
        Variable { name: name.into(), labels }
    }

    /// A two-valued variable with labels `true`, `false`.
    ///
    /// By convention value index 0 is "true"; relational grounding and the
    /// qualitative/synergy constructors rely on this.
    pub fn boolean(name: impl Into<String>) -> Self {
        Variable::new(name, vec!["true".into(), "false".into()])
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// Canonical name of one conditional-probability parameter
/// `p(X = value | parent configuration #column)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId {
    pub var: usize,
    pub value: usize,
    pub column: usize,
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta[{}][v{}|c{}]", self.var, self.value, self.column)
    }
}

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Ge,
    Le,
    Eq,
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelOp::Ge => write!(f, ">="),
            RelOp::Le => write!(f, "<="),
            RelOp::Eq => write!(f, "="),
        }
    }
}

/// A multilinear constraint `sum_t coef_t * prod(params_t) (relop) rhs`.
///
/// Each term carries a coefficient and a multiset of parameter identifiers;
/// degree-1 terms are plain linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearConstraint {
    pub terms: Vec<(f64, Vec<ParamId>)>,
    pub relation: RelOp,
    pub rhs: f64,
}

impl MultilinearConstraint {
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, p)| p.len()).max().unwrap_or(0)
    }
}

/// Local credal specification for one variable.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalCredalSpec {
    /// One nonempty vertex list per parent configuration; the credal sets of
    /// distinct columns are unrelated.
    SeparateVertices(SeparateVertexForm),
    /// A nonempty list of whole conditional tables; the table is the unit of
    /// choice, so columns are coupled.
    ExtensiveVertices(ExtensiveVertexForm),
    /// Box bounds per parameter plus multilinear constraints, with the
    /// simplex equality per column implicit.
    Constraints(ConstraintForm),
}

/// `columns[c][k][x]` is the probability of value `x` under the `k`-th vertex
/// of column `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparateVertexForm {
    pub columns: Vec<Vec<Vec<f64>>>,
}

/// `tables[t][c][x]`: the `t`-th table, column `c`, value `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensiveVertexForm {
    pub tables: Vec<Vec<Vec<f64>>>,
}

/// `boxes[c][x]` is the `[lower, upper]` box of `p(X = x | column c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintForm {
    pub boxes: Vec<Vec<(f64, f64)>>,
    pub constraints: Vec<MultilinearConstraint>,
}

impl LocalCredalSpec {
    /// Number of parent configurations this spec covers.
    pub fn column_count(&self) -> usize {
        match self {
            LocalCredalSpec::SeparateVertices(f) => f.columns.len(),
            LocalCredalSpec::ExtensiveVertices(f) => {
                f.tables.first().map(|t| t.len()).unwrap_or(0)
            }
            LocalCredalSpec::Constraints(f) => f.boxes.len(),
        }
    }

    /// A spec whose every column admits exactly one distribution.
    pub fn is_singleton(&self) -> bool {
        match self {
            LocalCredalSpec::SeparateVertices(f) => f.columns.iter().all(|c| c.len() == 1),
            LocalCredalSpec::ExtensiveVertices(f) => f.tables.len() == 1,
            LocalCredalSpec::Constraints(f) => f
                .boxes
                .iter()
                .all(|col| col.iter().all(|(l, u)| (u - l).abs() <= VERTEX_TOL)),
        }
    }

    /// Point-distribution spec: one vertex per column.
    pub fn singleton(columns: Vec<Vec<f64>>) -> Self {
        LocalCredalSpec::SeparateVertices(SeparateVertexForm {
            columns: columns.into_iter().map(|c| vec![c]).collect(),
        })
    }
}

/// A credal network: a DAG over finite variables with one local credal
/// specification per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalNetwork {
    pub variables: Vec<Variable>,
    /// `parents[i]` lists the parent indices of variable `i`, in the order
    /// that defines its column indexing (last parent fastest).
    pub parents: Vec<Vec<usize>>,
    pub local: Vec<LocalCredalSpec>,
}

impl CredalNetwork {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.variables[var].cardinality()
    }

    pub fn parent_cards(&self, var: usize) -> Vec<usize> {
        self.parents[var].iter().map(|&p| self.cardinality(p)).collect()
    }

    /// Number of parent configurations (columns) of `var`'s CPT.
    pub fn column_count(&self, var: usize) -> usize {
        self.parent_cards(var).iter().product()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn children(&self, var: usize) -> Vec<usize> {
        (0..self.num_vars())
            .filter(|&c| self.parents[c].contains(&var))
            .collect()
    }

    /// Topological order (Kahn's algorithm, lowest index first among ready
    /// nodes), or None if the parent relation has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.num_vars();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(&next) = ready.iter().min() {
            ready.retain(|&x| x != next);
            order.push(next);
            for c in 0..n {
                if self.parents[c].contains(&next) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        ready.push(c);
                    }
                }
            }
        }
        if order.len() == n {
            Some(order)
        } else {
            None
        }
    }

    /// True when the underlying undirected graph is acyclic (a forest).
    pub fn is_polytree(&self) -> bool {
        let n = self.num_vars();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut Vec<usize>, mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for child in 0..n {
            for &p in &self.parents[child] {
                let (a, b) = (find(&mut uf, p), find(&mut uf, child));
                if a == b {
                    return false;
                }
                uf[a] = b;
            }
        }
        true
    }

    /// True when every variable has exactly two values.
    pub fn is_boolean(&self) -> bool {
        self.variables.iter().all(|v| v.cardinality() == 2)
    }

    /// Indices of `target ∪ evidence` and all their ancestors. Variables
    /// outside this set are barren for the query and can be ignored.
    pub fn ancestral_closure(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let n = self.num_vars();
        let mut mark = vec![false; n];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if mark[v] {
                continue;
            }
            mark[v] = true;
            stack.extend(self.parents[v].iter().copied());
        }
        (0..n).filter(|&i| mark[i]).collect()
    }

    /// The restriction of the network to `keep` (which must be closed under
    /// parents). Returns the subnetwork and the old-to-new index map.
    pub fn restrict(&self, keep: &[usize]) -> (CredalNetwork, Vec<Option<usize>>) {
        let mut map = vec![None; self.num_vars()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = Some(new);
        }
        let net = CredalNetwork {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            parents: keep
                .iter()
                .map(|&i| self.parents[i].iter().map(|&p| map[p].expect("closed")).collect())
                .collect(),
            local: keep.iter().map(|&i| self.local[i].clone()).collect(),
        };
        (net, map)
    }
}

/// Which bound(s) a query asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
    Both,
}

/// A single probability bound direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

/// An inference request: bounds on `P(target.0 = target.1 | evidence)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub target: (usize, usize),
    pub evidence: Vec<(usize, usize)>,
    pub direction: Direction,
}

impl Query {
    pub fn marginal(var: usize, value: usize) -> Self {
        Query { target: (var, value), evidence: Vec::new(), direction: Direction::Both }
    }

    pub fn conditional(var: usize, value: usize, evidence: Vec<(usize, usize)>) -> Self {
        Query { target: (var, value), evidence, direction: Direction::Both }
    }

    /// Checks the query against a network: target not in evidence, indices
    /// and values in range, no duplicate evidence variables.
    pub fn check(&self, net: &CredalNetwork) -> Result<(), QueryError> {
        let (tv, tx) = self.target;
        if tv >= net.num_vars() || tx >= net.cardinality(tv) {
            return Err(QueryError::OutOfRange);
        }
        for (i, &(ev, ex)) in self.evidence.iter().enumerate() {
            if ev >= net.num_vars() || ex >= net.cardinality(ev) {
                return Err(QueryError::OutOfRange);
            }
            if ev == tv {
                return Err(QueryError::TargetInEvidence);
            }
            if self.evidence[..i].iter().any(|&(v, _)| v == ev) {
                return Err(QueryError::DuplicateEvidence);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryError {
    OutOfRange,
    TargetInEvidence,
    DuplicateEvidence,
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::OutOfRange => write!(f, "query variable or value out of range"),
            QueryError::TargetInEvidence => write!(f, "target variable appears in evidence"),
            QueryError::DuplicateEvidence => write!(f, "evidence assigns a variable twice"),
        }
    }
}

/// How an [`IntervalResult`] should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The interval is the exact answer (up to the declared tolerance).
    Exact,
    /// The interval encloses the exact answer.
    Outer,
    /// Best interval available when the algorithm stopped.
    Anytime,
}

/// Solver diagnostics attached to every interval answer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub gap: f64,
    pub iterations: u64,
    pub branches: u64,
    pub elapsed_ms: u64,
}

/// `[lower, upper]` probability bounds with a status tag.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub status: SolveStatus,
    pub diagnostics: Diagnostics,
}

impl IntervalResult {
    pub fn exact(lower: f64, upper: f64) -> Self {
        IntervalResult { lower, upper, status: SolveStatus::Exact, diagnostics: Default::default() }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when `self` contains `other` with `slack` of tolerance.
    pub fn contains(&self, other: &IntervalResult, slack: f64) -> bool {
        self.lower <= other.lower + slack && other.upper <= self.upper + slack
    }
}

use crate::util::config_index;

/// Column index of a parent configuration given in the parent order of `var`.
pub fn column_of(net: &CredalNetwork, var: usize, parent_values: &[usize]) -> usize {
    config_index(parent_values, &net.parent_cards(var))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_chain() -> CredalNetwork {
        CredalNetwork {
            variables: vec![Variable::boolean("x"), Variable::boolean("y")],
            parents: vec![vec![], vec![0]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
            ],
        }
    }

    #[test]
    fn topo_and_polytree() {
        let net = two_chain();
        assert_eq!(net.topo_order().unwrap(), vec![0, 1]);
        assert!(net.is_polytree());
        assert!(net.is_boolean());
    }

    #[test]
    fn cycle_has_no_topo_order() {
        let mut net = two_chain();
        net.parents[0] = vec![1];
        net.local[0] = LocalCredalSpec::singleton(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(net.topo_order().is_none());
    }

    #[test]
    fn query_check_rejects_target_in_evidence() {
        let net = two_chain();
        let q = Query::conditional(1, 0, vec![(1, 1)]);
        assert_eq!(q.check(&net), Err(QueryError::TargetInEvidence));
    }

    #[test]
    fn ancestral_closure_drops_barren() {
        let net = two_chain();
        assert_eq!(net.ancestral_closure([0]), vec![0]);
        assert_eq!(net.ancestral_closure([1]), vec![0, 1]);
    }

    #[test]
    fn column_order_last_parent_fastest() {
        let net = CredalNetwork {
            variables: vec![
                Variable::boolean("a"),
                Variable::new("b", vec!["0".into(), "1".into(), "2".into()]),
                Variable::boolean("c"),
            ],
            parents: vec![vec![], vec![], vec![0, 1]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.5, 0.5]]),
                LocalCredalSpec::singleton(vec![vec![0.2, 0.3, 0.5]]),
                LocalCredalSpec::singleton(vec![vec![0.5, 0.5]; 6]),
            ],
        };
        assert_eq!(column_of(&net, 2, &[0, 0]), 0);
        assert_eq!(column_of(&net, 2, &[0, 2]), 2);
        assert_eq!(column_of(&net, 2, &[1, 0]), 3);
    }
}
