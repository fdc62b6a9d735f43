//! Vertex enumeration for one column of a constraint-form credal set.
//!
//! The polytope is `{theta : sum theta = 1, boxes, column constraints}` in the
//! column's value space. Vertices are found by the classic basis enumeration:
//! every vertex is the unique solution of `d` active constraint rows, so all
//! combinations of rows are solved and filtered for feasibility.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{ConstraintForm, RelOp, VERTEX_TOL};
use crate::util::solve_dense;

/// Default cap on the column dimension accepted for conversion.
pub const DEFAULT_COLUMN_LIMIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvertError {
    /// Column cardinality exceeds the enumeration limit.
    ColumnTooLarge { cardinality: usize, limit: usize },
    /// A constraint couples this column with another column or variable.
    CrossColumnCoupling,
    /// A constraint restricted to this column has degree above 1.
    NonlinearColumn,
    /// The column polytope is empty.
    InfeasibleSpec,
}

impl fmt::Display for ConvertError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvertError::ColumnTooLarge { cardinality, limit } => write!(
                f,
                "column cardinality {cardinality} exceeds vertex-enumeration limit {limit}"
            ),
            ConvertError::CrossColumnCoupling => {
                write!(f, "constraints couple several columns; conversion refused")
            }
            ConvertError::NonlinearColumn => {
                write!(f, "nonlinear constraint within a column; conversion refused")
            }
            ConvertError::InfeasibleSpec => write!(f, "column credal set is empty"),
        }
    }
}

struct Row {
    coeffs: Vec<f64>,
    op: RelOp,
    rhs: f64,
}

impl Row {
    fn satisfied(&self, point: &[f64]) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(point).map(|(c, x)| c * x).sum();
        match self.op {
            RelOp::Eq => (lhs - self.rhs).abs() <= VERTEX_TOL,
            RelOp::Ge => lhs >= self.rhs - VERTEX_TOL,
            RelOp::Le => lhs <= self.rhs + VERTEX_TOL,
        }
    }
}

/// Extreme points of one column's credal set, using the default dimension
/// limit. See [`hrep_to_vrep_with_limit`].
pub fn hrep_to_vrep(
    form: &ConstraintForm,
    var: usize,
    column: usize,
) -> Result<Vec<Vec<f64>>, ConvertError> {
    hrep_to_vrep_with_limit(form, var, column, DEFAULT_COLUMN_LIMIT)
}

/// Enumerates the extreme points of `{simplex ∩ boxes ∩ column constraints}`
/// for the given column. Constraints mentioning any parameter of this column
/// must be linear and must not reference other columns. Points are returned
/// sorted lexicographically, deduplicated to `1e-9`.
pub fn hrep_to_vrep_with_limit(
    form: &ConstraintForm,
    var: usize,
    column: usize,
    limit: usize,
) -> Result<Vec<Vec<f64>>, ConvertError> {
    let d = form.boxes[column].len();
    if d > limit {
        return Err(ConvertError::ColumnTooLarge { cardinality: d, limit });
    }

    let mut eq_rows: Vec<Row> = Vec::new();
    let mut ineq_rows: Vec<Row> = Vec::new();

    // Simplex equality.
    eq_rows.push(Row { coeffs: vec![1.0; d], op: RelOp::Eq, rhs: 1.0 });

    // Box bounds.
    for (x, &(lo, hi)) in form.boxes[column].iter().enumerate() {
        let mut c = vec![0.0; d];
        c[x] = 1.0;
        ineq_rows.push(Row { coeffs: c.clone(), op: RelOp::Ge, rhs: lo });
        ineq_rows.push(Row { coeffs: c, op: RelOp::Le, rhs: hi });
    }

    // Column constraints.
    for cons in &form.constraints {
        let touches = cons
            .terms
            .iter()
            .flat_map(|(_, ps)| ps.iter())
            .any(|p| p.var == var && p.column == column);
        if !touches {
            continue;
        }
        let mut coeffs = vec![0.0; d];
        for (coef, params) in &cons.terms {
            if params.len() != 1 {
                return Err(ConvertError::NonlinearColumn);
            }
            let p = params[0];
            if p.var != var || p.column != column {
                return Err(ConvertError::CrossColumnCoupling);
            }
            coeffs[p.value] += coef;
        }
        match cons.relation {
            RelOp::Eq => eq_rows.push(Row { coeffs, op: RelOp::Eq, rhs: cons.rhs }),
            op => ineq_rows.push(Row { coeffs, op, rhs: cons.rhs }),
        }
    }

    let feasible = |p: &[f64]| {
        eq_rows.iter().all(|r| r.satisfied(p)) && ineq_rows.iter().all(|r| r.satisfied(p))
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let push_candidate = |point: Vec<f64>, vertices: &mut Vec<Vec<f64>>| {
        if !feasible(&point) {
            return;
        }
        let dup = vertices.iter().any(|v| {
            v.iter().zip(&point).all(|(a, b)| (a - b).abs() <= VERTEX_TOL)
        });
        if !dup {
            vertices.push(point);
        }
    };

    // Active sets: all equality rows plus enough inequalities to pin a point.
    let need = d.saturating_sub(eq_rows.len());
    if eq_rows.len() >= d {
        // Over-determined equality system; solve any d-subset and verify.
        for combo in combinations(eq_rows.len(), d) {
            if let Some(p) = solve_active(&eq_rows, &combo, &[], &[], d) {
                push_candidate(p, &mut vertices);
            }
        }
    } else {
        let eq_idx: Vec<usize> = (0..eq_rows.len()).collect();
        for combo in combinations(ineq_rows.len(), need) {
            if let Some(p) = solve_active(&eq_rows, &eq_idx, &ineq_rows, &combo, d) {
                push_candidate(p, &mut vertices);
            }
        }
    }

    if vertices.is_empty() {
        return Err(ConvertError::InfeasibleSpec);
    }
    vertices.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(vertices)
}

fn solve_active(
    eq_rows: &[Row],
    eq_pick: &[usize],
    ineq_rows: &[Row],
    ineq_pick: &[usize],
    d: usize,
) -> Option<Vec<f64>> {
    let mut a = Vec::with_capacity(d * d);
    let mut b = Vec::with_capacity(d);
    for &i in eq_pick {
        a.extend_from_slice(&eq_rows[i].coeffs);
        b.push(eq_rows[i].rhs);
    }
    for &i in ineq_pick {
        a.extend_from_slice(&ineq_rows[i].coeffs);
        b.push(ineq_rows[i].rhs);
    }
    debug_assert_eq!(b.len(), d);
    solve_dense(&a, &b, d, 1e-12)
}

/// All k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MultilinearConstraint, ParamId};

    fn boxed(boxes: Vec<Vec<(f64, f64)>>) -> ConstraintForm {
        ConstraintForm { boxes, constraints: Vec::new() }
    }

    #[test]
    fn boolean_interval_endpoints() {
        let form = boxed(vec![vec![(0.2, 0.7), (0.0, 1.0)]]);
        let verts = hrep_to_vrep(&form, 0, 0).unwrap();
        assert_eq!(verts.len(), 2);
        assert!((verts[0][0] - 0.2).abs() < 1e-12 && (verts[0][1] - 0.8).abs() < 1e-12);
        assert!((verts[1][0] - 0.7).abs() < 1e-12 && (verts[1][1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ternary_simplex_unit_vectors() {
        let form = boxed(vec![vec![(0.0, 1.0); 3]]);
        let verts = hrep_to_vrep(&form, 0, 0).unwrap();
        assert_eq!(verts.len(), 3);
        for v in &verts {
            assert!(v.iter().filter(|&&x| (x - 1.0).abs() < 1e-9).count() == 1);
            assert!(v.iter().filter(|&&x| x.abs() < 1e-9).count() == 2);
        }
    }

    #[test]
    fn boolean_with_extra_halfspace() {
        // theta_x in [0.1, 0.9] and theta_x >= 0.5
        let mut form = boxed(vec![vec![(0.1, 0.9), (0.0, 1.0)]]);
        form.constraints.push(MultilinearConstraint {
            terms: vec![(1.0, vec![ParamId { var: 0, value: 0, column: 0 }])],
            relation: RelOp::Ge,
            rhs: 0.5,
        });
        let verts = hrep_to_vrep(&form, 0, 0).unwrap();
        assert_eq!(verts.len(), 2);
        assert!((verts[0][0] - 0.5).abs() < 1e-9 && (verts[0][1] - 0.5).abs() < 1e-9);
        assert!((verts[1][0] - 0.9).abs() < 1e-9 && (verts[1][1] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn empty_polytope_is_an_error() {
        let mut form = boxed(vec![vec![(0.0, 0.2), (0.0, 1.0)]]);
        form.constraints.push(MultilinearConstraint {
            terms: vec![(1.0, vec![ParamId { var: 0, value: 0, column: 0 }])],
            relation: RelOp::Ge,
            rhs: 0.5,
        });
        assert_eq!(hrep_to_vrep(&form, 0, 0), Err(ConvertError::InfeasibleSpec));
    }

    #[test]
    fn cross_column_refused() {
        let mut form = boxed(vec![vec![(0.0, 1.0); 2], vec![(0.0, 1.0); 2]]);
        form.constraints.push(MultilinearConstraint {
            terms: vec![
                (1.0, vec![ParamId { var: 0, value: 0, column: 0 }]),
                (-1.0, vec![ParamId { var: 0, value: 0, column: 1 }]),
            ],
            relation: RelOp::Eq,
            rhs: 0.0,
        });
        assert_eq!(hrep_to_vrep(&form, 0, 0), Err(ConvertError::CrossColumnCoupling));
    }

    #[test]
    fn nonlinear_refused() {
        let mut form = boxed(vec![vec![(0.0, 1.0); 2]]);
        let p = ParamId { var: 0, value: 0, column: 0 };
        form.constraints.push(MultilinearConstraint {
            terms: vec![(1.0, vec![p, p])],
            relation: RelOp::Le,
            rhs: 0.5,
        });
        assert_eq!(hrep_to_vrep(&form, 0, 0), Err(ConvertError::NonlinearColumn));
    }

    #[test]
    fn vertices_satisfy_all_rows() {
        let mut form = boxed(vec![vec![(0.1, 0.6), (0.05, 0.9), (0.0, 0.8)]]);
        form.constraints.push(MultilinearConstraint {
            terms: vec![
                (1.0, vec![ParamId { var: 0, value: 0, column: 0 }]),
                (1.0, vec![ParamId { var: 0, value: 1, column: 0 }]),
            ],
            relation: RelOp::Le,
            rhs: 0.85,
        });
        let verts = hrep_to_vrep(&form, 0, 0).unwrap();
        assert!(!verts.is_empty());
        for v in &verts {
            let s: f64 = v.iter().sum();
            assert!((s - 1.0).abs() <= 1e-9);
            assert!(v[0] >= 0.1 - 1e-9 && v[0] <= 0.6 + 1e-9);
            assert!(v[1] >= 0.05 - 1e-9 && v[1] <= 0.9 + 1e-9);
            assert!(v[2] <= 0.8 + 1e-9 && v[2] >= -1e-9);
            assert!(v[0] + v[1] <= 0.85 + 1e-9);
        }
    }

    #[test]
    fn column_limit_enforced() {
        let form = boxed(vec![vec![(0.0, 1.0); 5]]);
        assert!(matches!(
            hrep_to_vrep(&form, 0, 0),
            Err(ConvertError::ColumnTooLarge { cardinality: 5, limit: 4 })
        ));
    }
}
