//! Report-style network validation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{CredalNetwork, LocalCredalSpec, ParamId, VERTEX_TOL};

/// One violated invariant, with enough context to print.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Cycle,
    DuplicateLabels { var: usize },
    TooFewLabels { var: usize },
    ColumnCountMismatch { var: usize, expected: usize, found: usize },
    EmptyVertexList { var: usize, column: usize },
    WrongDistributionLength { var: usize, column: usize, expected: usize, found: usize },
    EntryOutOfRange { var: usize, column: usize, value: f64 },
    ColumnSum { var: usize, column: usize, sum: f64 },
    BoxInverted { var: usize, column: usize, value: usize },
    BoxOutOfRange { var: usize, column: usize, value: usize },
    UnknownParameter { var: usize, param: ParamId },
    DuplicateParent { var: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle => write!(f, "parent relation contains a cycle"),
            Violation::DuplicateLabels { var } => {
                write!(f, "variable {var}: duplicate value labels")
            }
            Violation::TooFewLabels { var } => {
                write!(f, "variable {var}: fewer than 2 values")
            }
            Violation::ColumnCountMismatch { var, expected, found } => write!(
                f,
                "variable {var}: spec covers {found} parent configurations, expected {expected}"
            ),
            Violation::EmptyVertexList { var, column } => {
                write!(f, "variable {var}, column {column}: empty vertex list")
            }
            Violation::WrongDistributionLength { var, column, expected, found } => write!(
                f,
                "variable {var}, column {column}: distribution has {found} entries, expected {expected}"
            ),
            Violation::EntryOutOfRange { var, column, value } => write!(
                f,
                "variable {var}, column {column}: probability {value} outside [0, 1]"
            ),
            Violation::ColumnSum { var, column, sum } => {
                write!(f, "variable {var}, column {column}: column sums to {sum}, not 1")
            }
            Violation::BoxInverted { var, column, value } => write!(
                f,
                "variable {var}, column {column}, value {value}: box lower bound exceeds upper"
            ),
            Violation::BoxOutOfRange { var, column, value } => write!(
                f,
                "variable {var}, column {column}, value {value}: box not contained in [0, 1]"
            ),
            Violation::UnknownParameter { var, param } => {
                write!(f, "variable {var}: constraint references unknown parameter {param}")
            }
            Violation::DuplicateParent { var } => {
                write!(f, "variable {var}: duplicate parent")
            }
        }
    }
}

/// The full list of violated invariants; empty iff the network is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn lines(&self) -> Vec<String> {
        self.violations.iter().map(|v| format!("{v}")).collect()
    }
}

/// Checks every structural invariant and returns all violations found.
pub fn validate_network(net: &CredalNetwork) -> ValidationReport {
    let mut out = Vec::new();
    let n = net.num_vars();

    for (i, v) in net.variables.iter().enumerate() {
        if v.cardinality() < 2 {
            out.push(Violation::TooFewLabels { var: i });
        }
        for (a, la) in v.labels.iter().enumerate() {
            if v.labels[..a].contains(la) {
                out.push(Violation::DuplicateLabels { var: i });
                break;
            }
        }
    }

    for i in 0..n {
        for (k, p) in net.parents[i].iter().enumerate() {
            if net.parents[i][..k].contains(p) {
                out.push(Violation::DuplicateParent { var: i });
                break;
            }
        }
    }

    if net.topo_order().is_none() {
        out.push(Violation::Cycle);
    }

    for var in 0..n {
        let card = net.cardinality(var);
        let columns = net.column_count(var);
        let spec = &net.local[var];
        if spec.column_count() != columns {
            out.push(Violation::ColumnCountMismatch {
                var,
                expected: columns,
                found: spec.column_count(),
            });
            continue;
        }
        match spec {
            LocalCredalSpec::SeparateVertices(form) => {
                for (c, verts) in form.columns.iter().enumerate() {
                    if verts.is_empty() {
                        out.push(Violation::EmptyVertexList { var, column: c });
                    }
                    for dist in verts {
                        check_distribution(var, c, dist, card, &mut out);
                    }
                }
            }
            LocalCredalSpec::ExtensiveVertices(form) => {
                if form.tables.is_empty() {
                    out.push(Violation::EmptyVertexList { var, column: 0 });
                }
                for table in &form.tables {
                    if table.len() != columns {
                        out.push(Violation::ColumnCountMismatch {
                            var,
                            expected: columns,
                            found: table.len(),
                        });
                        continue;
                    }
                    for (c, dist) in table.iter().enumerate() {
                        check_distribution(var, c, dist, card, &mut out);
                    }
                }
            }
            LocalCredalSpec::Constraints(form) => {
                for (c, col) in form.boxes.iter().enumerate() {
                    if col.len() != card {
                        out.push(Violation::WrongDistributionLength {
                            var,
                            column: c,
                            expected: card,
                            found: col.len(),
                        });
                        continue;
                    }
                    for (x, &(lo, hi)) in col.iter().enumerate() {
                        if lo > hi + VERTEX_TOL {
                            out.push(Violation::BoxInverted { var, column: c, value: x });
                        }
                        if lo < -VERTEX_TOL || hi > 1.0 + VERTEX_TOL {
                            out.push(Violation::BoxOutOfRange { var, column: c, value: x });
                        }
                    }
                }
                for cons in &form.constraints {
                    for (_, params) in &cons.terms {
                        for p in params {
                            if !param_exists(net, *p) {
                                out.push(Violation::UnknownParameter { var, param: *p });
                            }
                        }
                    }
                }
            }
        }
    }

    ValidationReport { violations: out }
}

fn check_distribution(
    var: usize,
    column: usize,
    dist: &[f64],
    card: usize,
    out: &mut Vec<Violation>,
) {
    if dist.len() != card {
        out.push(Violation::WrongDistributionLength {
            var,
            column,
            expected: card,
            found: dist.len(),
        });
        return;
    }
    for &p in dist {
        if !(-VERTEX_TOL..=1.0 + VERTEX_TOL).contains(&p) || !p.is_finite() {
            out.push(Violation::EntryOutOfRange { var, column, value: p });
        }
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > VERTEX_TOL {
        out.push(Violation::ColumnSum { var, column, sum });
    }
}

fn param_exists(net: &CredalNetwork, p: ParamId) -> bool {
    p.var < net.num_vars()
        && p.value < net.cardinality(p.var)
        && p.column < net.column_count(p.var)
}

/// Qualitative positive influence of Boolean parent `y` on Boolean child `x`:
/// one linear constraint `p(x | y, z) - p(x | not-y, z) >= 0` per
/// configuration `z` of the other parents. Value index 0 is "true".
pub fn qualitative_influence_constraints(
    net: &CredalNetwork,
    edge: (usize, usize),
) -> Result<Vec<super::MultilinearConstraint>, QualitativeError> {
    let (y, x) = edge;
    if net.cardinality(x) != 2 || net.cardinality(y) != 2 {
        return Err(QualitativeError::NotBoolean);
    }
    let Some(ypos) = net.parents[x].iter().position(|&p| p == y) else {
        return Err(QualitativeError::NotAParent);
    };
    let cards = net.parent_cards(x);
    let mut rest_cards = cards.clone();
    rest_cards.remove(ypos);
    let rest_total: usize = rest_cards.iter().product();

    let mut constraints = Vec::with_capacity(rest_total);
    let mut rest = alloc::vec![0usize; rest_cards.len()];
    for idx in 0..rest_total {
        crate::util::decode_config(idx, &rest_cards, &mut rest);
        let mut with_y = rest.clone();
        with_y.insert(ypos, 0); // y true
        let mut without_y = rest.clone();
        without_y.insert(ypos, 1); // y false
        let c_true = crate::util::config_index(&with_y, &cards);
        let c_false = crate::util::config_index(&without_y, &cards);
        constraints.push(super::MultilinearConstraint {
            terms: alloc::vec![
                (1.0, alloc::vec![ParamId { var: x, value: 0, column: c_true }]),
                (-1.0, alloc::vec![ParamId { var: x, value: 0, column: c_false }]),
            ],
            relation: super::RelOp::Ge,
            rhs: 0.0,
        });
    }
    Ok(constraints)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualitativeError {
    NotBoolean,
    NotAParent,
}

impl fmt::Display for QualitativeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QualitativeError::NotBoolean => {
                write!(f, "qualitative influences require Boolean variables")
            }
            QualitativeError::NotAParent => write!(f, "influence source is not a parent"),
        }
    }
}
