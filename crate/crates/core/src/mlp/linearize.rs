//! Linear relaxation of a multilinear program: each product of variables is
//! replaced by an artificial variable tied to its factors by bilinear
//! envelope rows over the current boxes; higher-degree products are composed
//! pairwise. Artificial functions are created only for terms already present
//! in the program.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::lp::{LpProblem, LpRow};
use super::program::{MultilinearProgram, PolyExpr};
use crate::model::RelOp;

/// The relaxation: original variables first, then one LP column per product
/// multiset.
#[derive(Debug, Clone)]
pub struct LinearRelaxation {
    pub lp: LpProblem,
    /// product multiset (sorted variable ids) -> LP column
    pub products: BTreeMap<Vec<usize>, usize>,
    pub num_mp_vars: usize,
}

impl LinearRelaxation {
    /// LP column of a term's variable multiset.
    pub fn column_of(&self, vars: &[usize]) -> usize {
        match vars.len() {
            1 => vars[0],
            _ => self.products[vars],
        }
    }

    /// Worst absolute mismatch between each artificial column and the true
    /// product of its factors at an LP point, restricted to the products
    /// that appear in the program. Returns the offending multiset.
    pub fn worst_mismatch(&self, point: &[f64]) -> Option<(Vec<usize>, f64)> {
        let mut worst: Option<(Vec<usize>, f64)> = None;
        for (vars, &col) in &self.products {
            let mut true_product = 1.0;
            for &v in vars {
                true_product *= point[v];
            }
            let gap = (point[col] - true_product).abs();
            match &worst {
                Some((_, g)) if *g >= gap => {}
                _ => worst = Some((vars.clone(), gap)),
            }
        }
        worst
    }
}

/// Builds the relaxation of `mp` over the given variable boxes (which must
/// be at least as tight as the variables' own bounds).
pub fn linearize(mp: &MultilinearProgram, boxes: &[(f64, f64)]) -> LinearRelaxation {
    let n = mp.vars.len();
    let mut lp = LpProblem::new(n);
    for j in 0..n {
        lp.bounds[j] = boxes[j];
    }
    let mut products: BTreeMap<Vec<usize>, usize> = BTreeMap::new();

    // envelope of w = u * v over the boxes of columns u and v
    fn envelope(lp: &mut LpProblem, w: usize, u: usize, v: usize) {
        let (lu, uu) = lp.bounds[u];
        let (lv, uv) = lp.bounds[v];
        if u == v {
            // w = u^2: secants and tangents at the box ends
            lp.rows.push(LpRow {
                coeffs: vec![(u, -2.0 * lu), (w, 1.0)],
                op: RelOp::Ge,
                rhs: -lu * lu,
            });
            lp.rows.push(LpRow {
                coeffs: vec![(u, -2.0 * uu), (w, 1.0)],
                op: RelOp::Ge,
                rhs: -uu * uu,
            });
            lp.rows.push(LpRow {
                coeffs: vec![(u, -(lu + uu)), (w, 1.0)],
                op: RelOp::Le,
                rhs: -lu * uu,
            });
            return;
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let coeff = |cu: f64, cv: f64, cw: f64| -> Vec<(usize, f64)> {
            let (ca, cb) = if u < v { (cu, cv) } else { (cv, cu) };
            vec![(a, ca), (b, cb), (w, cw)]
        };
        // w >= lv*u + lu*v - lu*lv
        lp.rows.push(LpRow { coeffs: coeff(-lv, -lu, 1.0), op: RelOp::Ge, rhs: -lu * lv });
        // w >= uv*u + uu*v - uu*uv
        lp.rows.push(LpRow { coeffs: coeff(-uv, -uu, 1.0), op: RelOp::Ge, rhs: -uu * uv });
        // w <= uv*u + lu*v - lu*uv
        lp.rows.push(LpRow { coeffs: coeff(-uv, -lu, 1.0), op: RelOp::Le, rhs: -lu * uv });
        // w <= lv*u + uu*v - uu*lv
        lp.rows.push(LpRow { coeffs: coeff(-lv, -uu, 1.0), op: RelOp::Le, rhs: -uu * lv });
    }

    fn product_box(bu: (f64, f64), bv: (f64, f64)) -> (f64, f64) {
        let corners =
            [bu.0 * bv.0, bu.0 * bv.1, bu.1 * bv.0, bu.1 * bv.1];
        let mut lo = corners[0];
        let mut hi = corners[0];
        for &c in &corners[1..] {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }

    // product column for a multiset, composing pairwise for degree > 2
    fn column_for(
        lp: &mut LpProblem,
        products: &mut BTreeMap<Vec<usize>, usize>,
        vars: &[usize],
    ) -> usize {
        debug_assert!(vars.len() >= 2);
        if let Some(&c) = products.get(vars) {
            return c;
        }
        let col = if vars.len() == 2 {
            let w = lp.num_vars;
            lp.num_vars += 1;
            lp.bounds.push(product_box(lp.bounds[vars[0]], lp.bounds[vars[1]]));
            lp.objective.push(0.0);
            envelope(lp, w, vars[0], vars[1]);
            w
        } else {
            let rest = column_for(lp, products, &vars[1..]);
            let w = lp.num_vars;
            lp.num_vars += 1;
            lp.bounds.push(product_box(lp.bounds[vars[0]], lp.bounds[rest]));
            lp.objective.push(0.0);
            envelope(lp, w, vars[0], rest);
            w
        };
        products.insert(vars.to_vec(), col);
        col
    }

    // linearized expression: term multisets become columns
    let linearized = |lp: &mut LpProblem,
                          products: &mut BTreeMap<Vec<usize>, usize>,
                          e: &PolyExpr|
     -> Vec<(usize, f64)> {
        let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
        for t in &e.terms {
            let col = if t.vars.len() == 1 {
                t.vars[0]
            } else {
                column_for(lp, products, &t.vars)
            };
            *coeffs.entry(col).or_insert(0.0) += t.coef;
        }
        coeffs.into_iter().collect()
    };

    for c in &mp.constraints {
        let coeffs = linearized(&mut lp, &mut products, &c.expr);
        lp.rows.push(LpRow { coeffs, op: c.op, rhs: c.rhs - c.expr.constant });
    }
    let obj = linearized(&mut lp, &mut products, &mp.objective);
    for (col, coef) in obj {
        lp.objective[col] = coef;
    }

    LinearRelaxation { lp, products, num_mp_vars: n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::program::{MpVar, Sense, VarKind};
    use super::super::solve_lp;

    fn bilinear_mp() -> MultilinearProgram {
        let vars = vec![
            MpVar { name: "a".into(), lo: 0.0, hi: 1.0, kind: VarKind::ProductEntry },
            MpVar { name: "b".into(), lo: 0.0, hi: 1.0, kind: VarKind::ProductEntry },
        ];
        let mut obj = PolyExpr::default();
        obj.add_term(1.0, vec![0, 1]);
        MultilinearProgram {
            vars,
            objective: obj,
            constraints: vec![],
            sense: Sense::Maximize,
            definitions: vec![],
        }
    }

    #[test]
    fn envelope_exact_at_box_corners() {
        let mp = bilinear_mp();
        let relax = linearize(&mp, &[(0.0, 1.0), (0.0, 1.0)]);
        // maximize the product column directly: at the (1,1) corner the
        // envelope forces the artificial to 1
        let sol = solve_lp(&relax.lp);
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!((sol.point[0] - 1.0).abs() < 1e-9);
        assert!((sol.point[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_box_pins_product_to_scaled_factor() {
        let mp = bilinear_mp();
        let relax = linearize(&mp, &[(0.4, 0.4), (0.0, 1.0)]);
        let w = relax.column_of(&[0, 1]);
        // check w = 0.4 * b across sampled b by fixing b with bounds
        for b in [0.0, 0.3, 1.0] {
            let mut lp = relax.lp.clone();
            lp.bounds[1] = (b, b);
            lp.objective = vec![0.0; lp.num_vars];
            lp.objective[w] = 1.0;
            let up = solve_lp(&lp);
            lp.objective[w] = -1.0;
            let dn = solve_lp(&lp);
            assert!((up.value - 0.4 * b).abs() < 1e-9);
            assert!((-dn.value - 0.4 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn envelopes_bracket_true_products_on_samples() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let lo1 = rng.random_range(0.0..0.5);
            let b1 = (lo1, lo1 + rng.random_range(0.1..0.5));
            let lo2 = rng.random_range(0.0..0.5);
            let b2 = (lo2, lo2 + rng.random_range(0.1..0.5));
            let mp = bilinear_mp();
            let relax = linearize(&mp, &[b1, b2]);
            for _ in 0..20 {
                let u = rng.random_range(b1.0..=b1.1);
                let v = rng.random_range(b2.0..=b2.1);
                // the point (u, v, u*v) satisfies every envelope row
                let point = vec![u, v, u * v];
                assert!(super::super::lp::max_violation(&relax.lp, &point) < 1e-9);
            }
        }
    }

    #[test]
    fn higher_degree_composes_pairwise() {
        let vars = (0..3)
            .map(|i| MpVar {
                name: alloc::format!("v{i}"),
                lo: 0.0,
                hi: 1.0,
                kind: VarKind::ProductEntry,
            })
            .collect();
        let mut obj = PolyExpr::default();
        obj.add_term(1.0, vec![0, 1, 2]);
        let mp = MultilinearProgram {
            vars,
            objective: obj,
            constraints: vec![],
            sense: Sense::Maximize,
            definitions: vec![],
        };
        let relax = linearize(&mp, &[(0.0, 1.0); 3]);
        assert!(relax.products.contains_key([0usize, 1, 2].as_slice()));
        assert!(relax.products.contains_key([1usize, 2].as_slice()));
        let sol = solve_lp(&relax.lp);
        assert!((sol.value - 1.0).abs() < 1e-9);
    }
}
