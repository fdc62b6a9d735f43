mod common {

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
}
use credal_core::mlp::{rl_solve, SolveLimits};
use credal_core::model::{Bound, Query};
use credal_core::relational::ground;
use credal_core::util::NoClock;
use common::{atom, holmes};




fn main() {
    let (rnet, domain) = holmes();
    let net = ground(&rnet, &domain, &[atom("alarm", &["G"]), atom("alarm", &["H"])]).unwrap();
    let t = net.var_index("alarm(G)").unwrap();
    let e = net.var_index("earthquake(LA)").unwrap();
    let q = Query::conditional(t, 0, vec![(e, 0)]);
    let fp = credal_core::mlp::build_fractional_program(&net, &q).unwrap();
    // replicate the upper-bound bisection with tracing
    let den_floor = 0.01f64;
    let epsilon = 1e-5f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let eps_floor = (0.25 * den_floor * epsilon).max(1e-12);
    let mut last_point: Option<Vec<f64>> = None;
    for it in 0..40 {
        if hi - lo <= epsilon { println!("converged"); break; }
        let mid = 0.5 * (lo + hi);
        let inner_eps = (0.25 * den_floor * (hi - lo)).max(eps_floor);
        let mp = fp.level_program(mid, credal_core::mlp::Sense::Maximize);
        let warm = last_point.as_ref().map(|p: &Vec<f64>| mp.objective.eval(p));
        let limits = SolveLimits { max_branches: Some(4000), max_millis: None };
        let rep = rl_solve(&mp, None, inner_eps, limits, &NoClock, warm).unwrap();
        let mut jumped = lo;
        if let Some(point) = &rep.incumbent_point {
            let d = fp.denominator.eval(point);
            if d > 0.0 { jumped = (fp.numerator.eval(point) / d).clamp(0.0, 1.0); }
            last_point = Some(point.clone());
        }
        println!("it {it}: [{lo:.6}, {hi:.6}] mid {mid:.6} eps {inner_eps:.2e} bound {:+.4e} inc {:+.4e} gap {:.2e} br {} jump {:.6}",
            rep.best_bound, rep.incumbent.unwrap(), rep.gap, rep.branches, jumped);
        if let Some(point) = &rep.incumbent_point {
            let d = fp.denominator.eval(point);
            if d > 0.0 { lo = lo.max((fp.numerator.eval(point) / d).clamp(0.0, 1.0)).min(hi); }
        }
        if rep.best_bound < 0.0 { hi = hi.min(mid); }
        else if rep.incumbent.unwrap() > 0.0 { lo = lo.max(mid).min(hi); }
        else {
            let g_mag = rep.best_bound.max(-rep.incumbent.unwrap()).max(0.0);
            let radius = g_mag / den_floor;
            lo = lo.max(mid - radius);
            hi = hi.min(mid + radius).max(lo);
            println!("   ambiguous: radius {radius:.2e}");
        }
    }
    println!("final [{lo:.6}, {hi:.6}]");
}
