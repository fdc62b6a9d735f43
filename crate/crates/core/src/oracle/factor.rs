//! Dense factors and the variable elimination loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{CredalNetwork, Query};
use crate::util::{config_index, decode_config};

/// A nonnegative table over an ordered subset of variables. The table is laid
/// out with the last scope variable fastest, matching the column convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub cards: Vec<usize>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn scalar(value: f64) -> Self {
        Factor { scope: vec![], cards: vec![], table: vec![value] }
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    /// Builds the CPT factor of `var`: scope is `parents ∪ {var}` sorted
    /// ascending, entries read through `entry(column, value)`.
    pub fn from_cpt(
        net: &CredalNetwork,
        var: usize,
        entry: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut scope: Vec<usize> = net.parents[var].clone();
        scope.push(var);
        scope.sort_unstable();
        let cards: Vec<usize> = scope.iter().map(|&v| net.cardinality(v)).collect();
        let parent_cards = net.parent_cards(var);
        let total: usize = cards.iter().product();
        let mut table = vec![0.0; total];
        let mut cfg = vec![0usize; scope.len()];
        let mut parent_vals = vec![0usize; net.parents[var].len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            decode_config(idx, &cards, &mut cfg);
            for (k, &p) in net.parents[var].iter().enumerate() {
                let pos = scope.binary_search(&p).expect("parent in scope");
                parent_vals[k] = cfg[pos];
            }
            let vpos = scope.binary_search(&var).expect("var in scope");
            let column = config_index(&parent_vals, &parent_cards);
            *slot = entry(column, cfg[vpos]);
        }
        Factor { scope, cards, table }
    }

    /// Fixes `var = value`, dropping it from the scope.
    pub fn reduce(&self, var: usize, value: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut new_scope = self.scope.clone();
        new_scope.remove(pos);
        let mut new_cards = self.cards.clone();
        new_cards.remove(pos);
        let total: usize = new_cards.iter().product();
        let mut table = vec![0.0; total];
        let mut cfg = vec![0usize; new_scope.len()];
        let mut full = vec![0usize; self.scope.len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            decode_config(idx, &new_cards, &mut cfg);
            full[..pos].copy_from_slice(&cfg[..pos]);
            full[pos] = value;
            full[pos + 1..].copy_from_slice(&cfg[pos..]);
            *slot = self.table[config_index(&full, &self.cards)];
        }
        Factor { scope: new_scope, cards: new_cards, table }
    }

    /// Pointwise product over the union of scopes.
    pub fn multiply(&self, other: &Factor) -> Factor {
        if self.scope.is_empty() {
            let mut out = other.clone();
            for v in &mut out.table {
                *v *= self.table[0];
            }
            return out;
        }
        if other.scope.is_empty() {
            return other.multiply(self);
        }
        let mut scope: Vec<usize> = self.scope.clone();
        for &v in &other.scope {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        scope.sort_unstable();
        let cards: Vec<usize> = scope
            .iter()
            .map(|&v| {
                self.scope
                    .iter()
                    .position(|&s| s == v)
                    .map(|i| self.cards[i])
                    .unwrap_or_else(|| {
                        let i = other.scope.iter().position(|&s| s == v).unwrap();
                        other.cards[i]
                    })
            })
            .collect();
        let map_a: Vec<usize> =
            self.scope.iter().map(|&v| scope.iter().position(|&s| s == v).unwrap()).collect();
        let map_b: Vec<usize> =
            other.scope.iter().map(|&v| scope.iter().position(|&s| s == v).unwrap()).collect();
        let total: usize = cards.iter().product();
        let mut table = vec![0.0; total];
        let mut cfg = vec![0usize; scope.len()];
        let mut ca = vec![0usize; self.scope.len()];
        let mut cb = vec![0usize; other.scope.len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            decode_config(idx, &cards, &mut cfg);
            for (k, &m) in map_a.iter().enumerate() {
                ca[k] = cfg[m];
            }
            for (k, &m) in map_b.iter().enumerate() {
                cb[k] = cfg[m];
            }
            *slot = self.table[config_index(&ca, &self.cards)]
                * other.table[config_index(&cb, &other.cards)];
        }
        Factor { scope, cards, table }
    }

    /// Sums `var` out of the scope.
    pub fn sum_out(&self, var: usize) -> Factor {
        let pos = self.scope.iter().position(|&v| v == var).expect("var in scope");
        let mut new_scope = self.scope.clone();
        new_scope.remove(pos);
        let mut new_cards = self.cards.clone();
        new_cards.remove(pos);
        let total: usize = new_cards.iter().product();
        let mut table = vec![0.0; total];
        let card = self.cards[pos];
        let mut cfg = vec![0usize; new_scope.len()];
        let mut full = vec![0usize; self.scope.len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            decode_config(idx, &new_cards, &mut cfg);
            full[..pos].copy_from_slice(&cfg[..pos]);
            full[pos + 1..].copy_from_slice(&cfg[pos..]);
            let mut s = 0.0;
            for v in 0..card {
                full[pos] = v;
                s += self.table[config_index(&full, &self.cards)];
            }
            *slot = s;
        }
        Factor { scope: new_scope, cards: new_cards, table }
    }
}

/// Greedy min-degree elimination order for `elim` over the interaction graph
/// of the given scopes. Ties go to the lowest variable index, which keeps
/// every caller deterministic.
pub fn min_degree_order(scopes: &[Vec<usize>], elim: &[usize], num_vars: usize) -> Vec<usize> {
    let mut adj = vec![alloc::collections::BTreeSet::new(); num_vars];
    for scope in scopes {
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    let mut remaining: alloc::collections::BTreeSet<usize> = elim.iter().copied().collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let &next = remaining
            .iter()
            .min_by_key(|&&v| (adj[v].iter().filter(|n| remaining.contains(n)).count(), v))
            .unwrap();
        remaining.remove(&next);
        order.push(next);
        let neighbors: Vec<usize> = adj[next].iter().copied().collect();
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &n in &neighbors {
            adj[n].remove(&next);
        }
        adj[next].clear();
    }
    order
}

/// Read access to the conditional tables of every variable.
pub trait TableSource {
    fn entry(&self, var: usize, column: usize, value: usize) -> f64;
}

impl TableSource for [Vec<Vec<f64>>] {
    fn entry(&self, var: usize, column: usize, value: usize) -> f64 {
        self[var][column][value]
    }
}

impl TableSource for Vec<Vec<Vec<f64>>> {
    fn entry(&self, var: usize, column: usize, value: usize) -> f64 {
        self[var][column][value]
    }
}

/// Runs variable elimination and returns the unnormalized distribution
/// `P(target = x, evidence)` over the target's values.
///
/// Variables outside the ancestral closure of `target ∪ evidence` are barren
/// and are skipped. `order`, when given, must cover exactly the eliminated
/// variables.
pub fn ve_target_distribution<T: TableSource + ?Sized>(
    net: &CredalNetwork,
    tables: &T,
    query: &Query,
    order: Option<&[usize]>,
) -> Vec<f64> {
    let (tvar, _) = query.target;
    let mut seeds = vec![tvar];
    seeds.extend(query.evidence.iter().map(|&(v, _)| v));
    let relevant = net.ancestral_closure(seeds);

    let mut factors: Vec<Factor> = Vec::with_capacity(relevant.len());
    for &var in &relevant {
        let mut f = Factor::from_cpt(net, var, &mut |c, x| tables.entry(var, c, x));
        for &(ev, ex) in &query.evidence {
            f = f.reduce(ev, ex);
        }
        factors.push(f);
    }

    let elim: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => {
            let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.scope.clone()).collect();
            let to_elim: Vec<usize> =
                relevant.iter().copied().filter(|&v| v != tvar).collect();
            min_degree_order(&scopes, &to_elim, net.num_vars())
        }
    };

    for &var in &elim {
        let mut bucket = Factor::scalar(1.0);
        let mut rest = Vec::with_capacity(factors.len());
        let mut found = false;
        for f in factors {
            if f.scope.contains(&var) {
                bucket = bucket.multiply(&f);
                found = true;
            } else {
                rest.push(f);
            }
        }
        factors = rest;
        if found {
            factors.push(bucket.sum_out(var));
        }
    }

    let mut result = Factor::scalar(1.0);
    for f in &factors {
        result = result.multiply(f);
    }
    debug_assert!(result.scope == [tvar] || result.scope.is_empty());
    if result.scope.is_empty() {
        // Target got disconnected only if it had no factor, which cannot
        // happen: its own CPT always mentions it.
        unreachable!("target eliminated");
    }
    result.table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalCredalSpec, Variable};

    #[test]
    fn multiply_and_sum_out() {
        let a = Factor { scope: vec![0], cards: vec![2], table: vec![0.3, 0.7] };
        let b =
            Factor { scope: vec![0, 1], cards: vec![2, 2], table: vec![0.8, 0.2, 0.1, 0.9] };
        let prod = a.multiply(&b);
        assert_eq!(prod.scope, vec![0, 1]);
        let marg = prod.sum_out(0);
        assert_eq!(marg.scope, vec![1]);
        assert!((marg.table[0] - 0.31).abs() < 1e-12);
        assert!((marg.table[1] - 0.69).abs() < 1e-12);
    }

    #[test]
    fn reduce_slices() {
        let f = Factor { scope: vec![0, 1], cards: vec![2, 2], table: vec![0.8, 0.2, 0.1, 0.9] };
        let r = f.reduce(0, 1);
        assert_eq!(r.scope, vec![1]);
        assert_eq!(r.table, vec![0.1, 0.9]);
    }

    #[test]
    fn min_degree_prefers_leaves() {
        // chain scopes: {0,1},{1,2},{2,3}
        let scopes = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
        let order = min_degree_order(&scopes, &[0, 1, 2], 4);
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn barren_nodes_are_skipped() {
        // x -> y, also barren z; query on x must ignore y and z entirely.
        let net = CredalNetwork {
            variables: vec![
                Variable::boolean("x"),
                Variable::boolean("y"),
                Variable::boolean("z"),
            ],
            parents: vec![vec![], vec![0], vec![]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
                LocalCredalSpec::singleton(vec![vec![0.5, 0.5]]),
            ],
        };
        let tables = crate::oracle::singleton_tables(&net).unwrap();
        let dist = ve_target_distribution(&net, &tables, &Query::marginal(0, 0), None);
        assert!((dist[0] - 0.3).abs() < 1e-12);
        assert!((dist[1] - 0.7).abs() < 1e-12);
    }
}
