//! Relational credal networks: a vocabulary of relations, a DAG over them,
//! and one probability formula per relation. Grounding expands the formulas
//! over a finite domain into a propositional [`CredalNetwork`].
//!
//! [`CredalNetwork`]: crate::model::CredalNetwork

mod ground;

pub use ground::{eval_formula, ground, GroundedCpt, RowBound};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::ConstraintForm;

/// A relation symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

/// A term in a formula: a variable bound by the owning relation's parameter
/// list (or by a binder), or a domain constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

/// An atom pattern `relation(term, ...)` inside a formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomPattern {
    pub relation: String,
    pub args: Vec<Term>,
}

/// A fully instantiated atom, e.g. `alarm(G)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundAtom {
    pub relation: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(relation: impl Into<String>, args: Vec<String>) -> Self {
        GroundAtom { relation: relation.into(), args }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.relation);
        }
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Combination functions over expanded subformulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineKind {
    NoisyOr,
    Min,
    Max,
    Mean,
    CumulativeSynergy,
}

/// Constraint on a binder variable `u` relative to the owner's arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinderConstraint {
    Eq(Term),
    Ne(Term),
}

/// Binder of a combination function: `u` ranges over all domain objects
/// satisfying every constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binder {
    pub var: String,
    pub constraints: Vec<BinderConstraint>,
}

/// A probability formula.
#[derive(Debug, Clone, PartialEq)]
pub enum FormulaNode {
    Constant(f64),
    IntervalConstant(f64, f64),
    /// `if (condition) then_branch else else_branch`; the condition atom
    /// becomes a parent of the grounded node.
    Indicator {
        condition: AtomPattern,
        then_branch: alloc::boxed::Box<FormulaNode>,
        else_branch: alloc::boxed::Box<FormulaNode>,
    },
    /// The truth value of a parent atom, as a 0/1 probability.
    Atom(AtomPattern),
    Combine {
        kind: CombineKind,
        inputs: Vec<FormulaNode>,
        binder: Option<Binder>,
        /// Leak interval; required for `CumulativeSynergy`.
        leak: Option<(f64, f64)>,
    },
}

impl FormulaNode {
    /// Convenience for the ubiquitous `(parent ? p : 0)` link shape.
    pub fn link(condition: AtomPattern, p: f64) -> Self {
        FormulaNode::Indicator {
            condition,
            then_branch: alloc::boxed::Box::new(FormulaNode::Constant(p)),
            else_branch: alloc::boxed::Box::new(FormulaNode::Constant(0.0)),
        }
    }
}

/// Formula of one relation, with named parameters for its arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub params: Vec<String>,
    pub body: FormulaNode,
}

/// The relational network: vocabulary, relation-level DAG, one formula per
/// relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalCredalNetwork {
    pub relations: Vec<Relation>,
    /// `parents[r]` lists the relations the formula of `r` may mention.
    pub parents: Vec<Vec<usize>>,
    pub formulas: Vec<Formula>,
}

impl RelationalCredalNetwork {
    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }
}

/// A finite set of named constants plus known ground facts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Domain {
    pub objects: Vec<String>,
    pub facts: alloc::collections::BTreeMap<GroundAtom, bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelationalError {
    OutOfRange(f64),
    InvalidInterval(f64, f64),
    MissingLeak,
    /// The leak upper bound exceeds the smallest link probability.
    LeakExceedsLink { leak_upper: f64, min_link: f64 },
    EmptyCombination(CombineKind),
    UnboundVariable(String),
    UnknownRelation(String),
    UnknownObject(String),
    ArityMismatch { relation: String, expected: usize, found: usize },
    /// Cumulative synergy nested inside another combination function.
    NestedSynergy,
    /// A synergy input is not of the form `(parent ? p : 0)`.
    MalformedSynergyLink,
    /// A formula mentions a relation that is not a declared parent.
    MentionedNotParent { relation: String, mentioned: String },
    EmptyDomain,
}

impl fmt::Display for RelationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationalError::OutOfRange(p) => write!(f, "probability {p} outside [0, 1]"),
            RelationalError::InvalidInterval(l, u) => {
                write!(f, "interval [{l}, {u}] is not a subinterval of [0, 1]")
            }
            RelationalError::MissingLeak => {
                write!(f, "cumulative synergy requires a leak interval")
            }
            RelationalError::LeakExceedsLink { leak_upper, min_link } => write!(
                f,
                "leak upper bound {leak_upper} exceeds smallest link probability {min_link}"
            ),
            RelationalError::EmptyCombination(kind) => {
                write!(f, "{kind:?} over an empty set of subformulas has no identity")
            }
            RelationalError::UnboundVariable(v) => write!(f, "unbound variable {v}"),
            RelationalError::UnknownRelation(r) => write!(f, "unknown relation {r}"),
            RelationalError::UnknownObject(o) => write!(f, "unknown object {o}"),
            RelationalError::ArityMismatch { relation, expected, found } => {
                write!(f, "relation {relation} expects {expected} arguments, got {found}")
            }
            RelationalError::NestedSynergy => {
                write!(f, "cumulative synergy cannot be nested inside another combination")
            }
            RelationalError::MalformedSynergyLink => {
                write!(f, "cumulative synergy inputs must have the form (parent ? p : 0)")
            }
            RelationalError::MentionedNotParent { relation, mentioned } => write!(
                f,
                "formula of {relation} mentions {mentioned}, which is not a declared parent"
            ),
            RelationalError::EmptyDomain => write!(f, "empty domain with nonempty targets"),
        }
    }
}

/// `NoisyOR{p_i} = 1 - prod_i (1 - p_i)`. The empty combination is 0.
pub fn noisy_or(links: &[f64]) -> Result<f64, RelationalError> {
    let mut not_any = 1.0;
    for &p in links {
        if !(0.0..=1.0).contains(&p) {
            return Err(RelationalError::OutOfRange(p));
        }
        not_any *= 1.0 - p;
    }
    Ok(1.0 - not_any)
}

/// Lower/upper bounds of one cumulative-synergy row given the link values of
/// the active parents. No active parent means the leak row.
pub(crate) fn synergy_row(active: &[f64], leak: (f64, f64)) -> (f64, f64) {
    match active.len() {
        0 => leak,
        1 => (active[0], active[0]),
        _ => {
            let m = active.iter().cloned().fold(0.0f64, f64::max);
            (m, 1.0)
        }
    }
}

/// Checks a leak interval against link probabilities per the
/// cumulative-synergy model (the leak may not exceed any link).
pub(crate) fn check_synergy(links: &[f64], leak: (f64, f64)) -> Result<(), RelationalError> {
    let (lo, hi) = leak;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(RelationalError::InvalidInterval(lo, hi));
    }
    let mut min_link = 1.0f64;
    for &p in links {
        if !(0.0..=1.0).contains(&p) {
            return Err(RelationalError::OutOfRange(p));
        }
        min_link = min_link.min(p);
    }
    if !links.is_empty() && hi > min_link + 1e-12 {
        return Err(RelationalError::LeakExceedsLink { leak_upper: hi, min_link });
    }
    Ok(())
}

/// The full column set of a cumulative-synergy model for a Boolean child
/// with the given links: the all-false column equals the leak parameter, a
/// single active parent pins its link value, and any other column is bounded
/// below by the largest active link. Columns are ordered with the last
/// listed parent fastest; value index 0 means "true".
pub fn cumulative_synergy_constraints(
    links: &[(GroundAtom, f64)],
    leak: (f64, f64),
) -> Result<ConstraintForm, RelationalError> {
    let ps: Vec<f64> = links.iter().map(|&(_, p)| p).collect();
    check_synergy(&ps, leak)?;
    let n = links.len();
    let columns = 1usize << n;
    let mut boxes = Vec::with_capacity(columns);
    for col in 0..columns {
        let active: Vec<f64> = (0..n)
            .filter(|i| (col >> (n - 1 - i)) & 1 == 0) // value 0 = true
            .map(|i| ps[i])
            .collect();
        let (lo, hi) = synergy_row(&active, leak);
        boxes.push(vec![(lo, hi), (1.0 - hi, 1.0 - lo)]);
    }
    Ok(ConstraintForm { boxes, constraints: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_or_basics() {
        assert!((noisy_or(&[0.9, 0.2]).unwrap() - 0.92).abs() < 1e-12);
        assert_eq!(noisy_or(&[]).unwrap(), 0.0);
        assert_eq!(noisy_or(&[1.0, 0.5]).unwrap(), 1.0);
        assert!(noisy_or(&[1.2]).is_err());
    }

    #[test]
    fn synergy_holmes_columns() {
        let b = GroundAtom::new("burglary", vec!["G".into()]);
        let q = GroundAtom::new("earthquake", vec!["LA".into()]);
        let form = cumulative_synergy_constraints(&[(b, 0.9), (q, 0.2)], (0.0, 0.1)).unwrap();
        // columns over (b, q), q fastest, value 0 = true:
        // col0 = (b,q), col1 = (b,!q), col2 = (!b,q), col3 = (!b,!q)
        assert_eq!(form.boxes[0][0], (0.9, 1.0));
        assert_eq!(form.boxes[1][0], (0.9, 0.9));
        assert_eq!(form.boxes[2][0], (0.2, 0.2));
        assert_eq!(form.boxes[3][0], (0.0, 0.1));
    }

    #[test]
    fn synergy_single_link_no_otherwise_rows() {
        let b = GroundAtom::new("b", vec![]);
        let form = cumulative_synergy_constraints(&[(b, 0.5)], (0.0, 0.0)).unwrap();
        assert_eq!(form.boxes.len(), 2);
        assert_eq!(form.boxes[0][0], (0.5, 0.5)); // b true
        assert_eq!(form.boxes[1][0], (0.0, 0.0)); // b false -> leak
    }

    #[test]
    fn synergy_leak_above_min_link_rejected() {
        let b = GroundAtom::new("b", vec![]);
        let q = GroundAtom::new("q", vec![]);
        let err = cumulative_synergy_constraints(&[(b, 0.9), (q, 0.2)], (0.3, 0.4)).unwrap_err();
        assert!(matches!(err, RelationalError::LeakExceedsLink { .. }));
    }

    #[test]
    fn ground_atom_display() {
        let a = GroundAtom::new("lives-in", vec!["G".into(), "LA".into()]);
        assert_eq!(alloc::format!("{a}"), "lives-in(G,LA)");
        let b = GroundAtom::new("rain", vec![]);
        assert_eq!(alloc::format!("{b}"), "rain");
    }
}
