//! Multilinear programs: boxed variables, a multilinear objective, and
//! multilinear constraints.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ParamId, RelOp};

/// What an MP variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// A free conditional-probability parameter of a constraint-form column.
    Credal(ParamId),
    /// Convex weight of one vertex of a separately specified column.
    Weight { var: usize, column: usize, vertex: usize },
    /// Convex weight of one whole table of an extensively specified set.
    TableWeight { var: usize, table: usize },
    /// Value of one entry of an intermediate elimination function.
    Intermediate { step: u32, entry: u32 },
    /// Entry of a pairwise product factor introduced to keep degree <= 2.
    ProductEntry,
}

#[derive(Debug, Clone)]
pub struct MpVar {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub kind: VarKind,
}

/// `coef * prod(vars)`; `vars` is a sorted multiset of variable indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub vars: Vec<usize>,
}

/// A multilinear polynomial `constant + sum of terms`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyExpr {
    pub constant: f64,
    pub terms: Vec<Term>,
}

impl PolyExpr {
    pub fn constant(c: f64) -> Self {
        PolyExpr { constant: c, terms: vec![] }
    }

    pub fn var(v: usize) -> Self {
        PolyExpr { constant: 0.0, terms: vec![Term { coef: 1.0, vars: vec![v] }] }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.vars.len()).max().unwrap_or(0)
    }

    pub fn add(&mut self, other: &PolyExpr) {
        self.constant += other.constant;
        self.terms.extend(other.terms.iter().cloned());
        self.normalize();
    }

    pub fn add_term(&mut self, coef: f64, mut vars: Vec<usize>) {
        vars.sort_unstable();
        self.terms.push(Term { coef, vars });
        self.normalize();
    }

    pub fn scale(&mut self, s: f64) {
        self.constant *= s;
        for t in &mut self.terms {
            t.coef *= s;
        }
        if s == 0.0 {
            self.terms.clear();
        }
    }

    pub fn mul(&self, other: &PolyExpr) -> PolyExpr {
        let mut out = PolyExpr::constant(self.constant * other.constant);
        for t in &other.terms {
            out.terms.push(Term { coef: t.coef * self.constant, vars: t.vars.clone() });
        }
        for t in &self.terms {
            if other.constant != 0.0 {
                out.terms.push(Term { coef: t.coef * other.constant, vars: t.vars.clone() });
            }
            for u in &other.terms {
                let mut vars = t.vars.clone();
                vars.extend(u.vars.iter().copied());
                vars.sort_unstable();
                out.terms.push(Term { coef: t.coef * u.coef, vars });
            }
        }
        out.normalize();
        out
    }

    /// Merges duplicate multisets and drops vanished terms.
    pub fn normalize(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.vars.clone()).or_insert(0.0) += t.coef;
        }
        self.terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(vars, coef)| Term { coef, vars })
            .collect();
    }

    /// Evaluates with true products at the given point.
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let mut p = t.coef;
            for &j in &t.vars {
                p *= point[j];
            }
            v += p;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpConstraint {
    pub expr: PolyExpr,
    pub op: RelOp,
    pub rhs: f64,
}

impl MpConstraint {
    pub fn violation(&self, point: &[f64]) -> f64 {
        let v = self.expr.eval(point);
        match self.op {
            RelOp::Le => (v - self.rhs).max(0.0),
            RelOp::Ge => (self.rhs - v).max(0.0),
            RelOp::Eq => (v - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// The optimization object: `max/min objective` subject to boxes and
/// multilinear constraints.
#[derive(Debug, Clone)]
pub struct MultilinearProgram {
    pub vars: Vec<MpVar>,
    pub objective: PolyExpr,
    pub constraints: Vec<MpConstraint>,
    pub sense: Sense,
    /// `(var, expr)` pairs defining each intermediate variable from earlier
    /// ones, in dependency order; used to propagate a credal-parameter point
    /// into a full feasible point.
    pub definitions: Vec<(usize, PolyExpr)>,
}

impl MultilinearProgram {
    /// `maxdegree`: the largest term degree over objective and constraints.
    pub fn max_degree(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| c.expr.degree())
            .chain(core::iter::once(self.objective.degree()))
            .max()
            .unwrap_or(0)
    }

    /// Number of nonlinear terms (degree >= 2) over objective and
    /// constraints.
    pub fn nonlinear_term_count(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| &c.expr)
            .chain(core::iter::once(&self.objective))
            .map(|e| e.terms.iter().filter(|t| t.vars.len() >= 2).count())
            .sum()
    }

    /// Fills intermediate variables from the definitions, assuming the
    /// non-intermediate entries of `point` are already set.
    pub fn propagate_definitions(&self, point: &mut [f64]) {
        for (v, expr) in &self.definitions {
            point[*v] = expr.eval(point);
        }
    }

    /// Largest constraint violation at the point (with true products).
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, var) in self.vars.iter().enumerate() {
            worst = worst.max(var.lo - point[j]).max(point[j] - var.hi);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(point));
        }
        worst
    }

    /// Plain-text dump: one `var` line per variable, one term per line in
    /// the objective, one line per constraint.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Maximize => "maximize\n",
            Sense::Minimize => "minimize\n",
        });
        for (i, v) in self.vars.iter().enumerate() {
            out.push_str(&format!("var x{i} [{}, {}] {}\n", v.lo, v.hi, v.name));
        }
        out.push_str("objective\n");
        dump_expr(&mut out, &self.objective);
        for c in &self.constraints {
            out.push_str(&format!("subject to {} {}\n", c.op, c.rhs));
            dump_expr(&mut out, &c.expr);
        }
        out
    }
}

fn dump_expr(out: &mut String, e: &PolyExpr) {
    if e.constant != 0.0 || e.terms.is_empty() {
        out.push_str(&format!("  {}\n", e.constant));
    }
    for t in &e.terms {
        out.push_str(&format!("  {}", t.coef));
        for v in &t.vars {
            out.push_str(&format!(" x{v}"));
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_normalize() {
        // (1 + 2a)(3 + b) = 3 + b + 6a + 2ab
        let mut left = PolyExpr::constant(1.0);
        left.add_term(2.0, vec![0]);
        let mut right = PolyExpr::constant(3.0);
        right.add_term(1.0, vec![1]);
        let p = left.mul(&right);
        assert_eq!(p.constant, 3.0);
        assert_eq!(p.terms.len(), 3);
        assert!((p.eval(&[0.5, 0.25]) - (3.0 + 0.25 + 3.0 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn duplicate_terms_merge() {
        let mut e = PolyExpr::default();
        e.add_term(1.0, vec![1, 0]);
        e.add_term(2.0, vec![0, 1]);
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].coef, 3.0);
        assert_eq!(e.terms[0].vars, vec![0, 1]);
    }

    #[test]
    fn degree_and_counts() {
        let mut obj = PolyExpr::default();
        obj.add_term(1.0, vec![0, 1]);
        obj.add_term(1.0, vec![2]);
        let mp = MultilinearProgram {
            vars: vec![],
            objective: obj,
            constraints: vec![],
            sense: Sense::Maximize,
            definitions: vec![],
        };
        assert_eq!(mp.max_degree(), 2);
        assert_eq!(mp.nonlinear_term_count(), 1);
    }
}
