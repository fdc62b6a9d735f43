//! Shared fixtures for integration tests.

use credal_core::relational::{
    AtomPattern, Binder, BinderConstraint, CombineKind, Domain, Formula, FormulaNode, GroundAtom,
    Relation, RelationalCredalNetwork, Term,
};
use std::collections::BTreeMap;

pub fn pat(rel: &str, args: &[Term]) -> AtomPattern {
    AtomPattern { relation: rel.into(), args: args.to_vec() }
}

pub fn var(name: &str) -> Term {
    Term::Var(name.into())
}

pub fn cst(name: &str) -> Term {
    Term::Const(name.into())
}

#[allow(dead_code)]
pub fn atom(rel: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(rel, args.iter().map(|a| a.to_string()).collect())
}

/// The Holmes model with imprecise priors, cumulative synergy for LA
/// residents, and the plain burglary link for everyone else.
pub fn holmes() -> (RelationalCredalNetwork, Domain) {
    let relations = vec![
        Relation { name: "lives-in".into(), arity: 2 },
        Relation { name: "burglary".into(), arity: 1 },
        Relation { name: "earthquake".into(), arity: 1 },
        Relation { name: "alarm".into(), arity: 1 },
    ];
    let formulas = vec![
        Formula {
            params: vec!["v".into(), "city".into()],
            body: FormulaNode::IntervalConstant(0.05, 0.15),
        },
        Formula { params: vec!["v".into()], body: FormulaNode::IntervalConstant(0.001, 0.01) },
        Formula { params: vec!["city".into()], body: FormulaNode::IntervalConstant(0.01, 0.1) },
        Formula {
            params: vec!["v".into()],
            body: FormulaNode::Indicator {
                condition: pat("lives-in", &[var("v"), cst("LA")]),
                then_branch: Box::new(FormulaNode::Combine {
                    kind: CombineKind::CumulativeSynergy,
                    inputs: vec![
                        FormulaNode::link(pat("burglary", &[var("v")]), 0.9),
                        FormulaNode::link(pat("earthquake", &[cst("LA")]), 0.2),
                    ],
                    binder: None,
                    leak: Some((0.0, 0.1)),
                }),
                else_branch: Box::new(FormulaNode::link(pat("burglary", &[var("v")]), 0.9)),
            },
        },
    ];
    let rnet = RelationalCredalNetwork {
        relations,
        parents: vec![vec![], vec![], vec![], vec![0, 1, 2]],
        formulas,
    };
    let mut facts = BTreeMap::new();
    facts.insert(GroundAtom::new("lives-in", vec!["G".into(), "LA".into()]), true);
    let domain = Domain { objects: vec!["G".into(), "H".into(), "LA".into()], facts };
    (rnet, domain)
}

/// Keeps `_binder_helpers` referenced so every test file can use the helpers
/// it needs without unused warnings.
#[allow(dead_code)]
pub fn binder(varname: &str, constraints: Vec<BinderConstraint>) -> Binder {
    Binder { var: varname.into(), constraints }
}
