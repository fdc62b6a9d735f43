//! Ground-truth inference: Bayesian variable elimination over singleton
//! networks, exhaustive vertex enumeration over the strong extension, and the
//! hill-climbing search used to seed the global solver.

mod enumerate;
mod factor;

pub use enumerate::{
    evaluate_selection, exact_bounds_enumeration, exact_bounds_enumeration_with_cap,
    local_search_bound, vertex_lists, VarVertices, VertexSelection, DEFAULT_ENUM_CAP,
    DEFAULT_RESTARTS,
};
pub use factor::{min_degree_order, ve_target_distribution, Factor, TableSource};

use alloc::vec::Vec;
use core::fmt;

use crate::model::{ConvertError, CredalNetwork, LocalCredalSpec, Query, QueryError};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// The network has non-singleton local sets where a single distribution
    /// is required.
    NotSingleton { var: usize },
    /// `P(evidence) = 0`: the conditional is undefined.
    UndefinedConditional,
    /// The number of vertex combinations exceeds the enumeration cap.
    TooLargeForOracle { combinations: u128, cap: u128 },
    /// A constraint-form spec cannot be converted to vertices.
    Unsupported(ConvertError),
    Query(QueryError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::NotSingleton { var } => {
                write!(f, "variable {var} has a non-singleton local credal set")
            }
            OracleError::UndefinedConditional => {
                write!(f, "evidence has probability zero; conditional undefined")
            }
            OracleError::TooLargeForOracle { combinations, cap } => {
                write!(f, "vertex-combination count {combinations} exceeds oracle cap {cap}")
            }
            OracleError::Unsupported(e) => write!(f, "unsupported local spec: {e}"),
            OracleError::Query(e) => write!(f, "{e}"),
        }
    }
}

impl From<QueryError> for OracleError {
    fn from(e: QueryError) -> Self {
        OracleError::Query(e)
    }
}

impl From<ConvertError> for OracleError {
    fn from(e: ConvertError) -> Self {
        OracleError::Unsupported(e)
    }
}

/// Extracts the single conditional table of each variable, or reports the
/// first non-singleton one.
pub(crate) fn singleton_tables(net: &CredalNetwork) -> Result<Vec<Vec<Vec<f64>>>, OracleError> {
    let mut out = Vec::with_capacity(net.num_vars());
    for var in 0..net.num_vars() {
        let spec = &net.local[var];
        if !spec.is_singleton() {
            return Err(OracleError::NotSingleton { var });
        }
        let table = match spec {
            LocalCredalSpec::SeparateVertices(f) => {
                f.columns.iter().map(|col| col[0].clone()).collect()
            }
            LocalCredalSpec::ExtensiveVertices(f) => f.tables[0].clone(),
            LocalCredalSpec::Constraints(f) => f
                .boxes
                .iter()
                .map(|col| col.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect())
                .collect(),
        };
        out.push(table);
    }
    Ok(out)
}

/// `P(target | evidence)` for a network whose local sets are all singletons.
///
/// With empty evidence this is the plain marginal. Errors when the evidence
/// has probability zero.
pub fn ve_marginal(net: &CredalNetwork, query: &Query) -> Result<f64, OracleError> {
    let (joint, pe) = ve_joint_and_evidence(net, query)?;
    if pe <= 0.0 {
        return Err(OracleError::UndefinedConditional);
    }
    Ok(joint / pe)
}

/// The pair `(P(target, evidence), P(evidence))`, for fractional callers.
pub fn ve_joint_and_evidence(
    net: &CredalNetwork,
    query: &Query,
) -> Result<(f64, f64), OracleError> {
    query.check(net)?;
    let tables = singleton_tables(net)?;
    let dist = factor::ve_target_distribution(net, &tables, query, None);
    let joint = dist[query.target.1];
    let pe: f64 = dist.iter().sum();
    Ok((joint, pe))
}

/// Same as [`ve_marginal`] but with a caller-chosen elimination order over
/// the non-target, non-evidence variables; used to check order independence.
pub fn ve_marginal_with_order(
    net: &CredalNetwork,
    query: &Query,
    order: &[usize],
) -> Result<f64, OracleError> {
    query.check(net)?;
    let tables = singleton_tables(net)?;
    let dist = factor::ve_target_distribution(net, &tables, query, Some(order));
    let joint = dist[query.target.1];
    let pe: f64 = dist.iter().sum();
    if pe <= 0.0 {
        return Err(OracleError::UndefinedConditional);
    }
    Ok(joint / pe)
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalCredalSpec, Variable};
    use alloc::vec;

    fn chain() -> CredalNetwork {
        // x -> y with p(x)=0.3, p(y|x)=0.8, p(y|!x)=0.1
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
    fn chain_marginal() {
        let p = ve_marginal(&chain(), &Query::marginal(1, 0)).unwrap();
        assert!((p - 0.31).abs() < 1e-12);
    }

    #[test]
    fn deterministic_identity_copies_prior() {
        let net = CredalNetwork {
            variables: vec![Variable::boolean("x"), Variable::boolean("y")],
            parents: vec![vec![], vec![0]],
            local: vec![
                LocalCredalSpec::singleton(vec![vec![0.3, 0.7]]),
                LocalCredalSpec::singleton(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            ],
        };
        let p = ve_marginal(&net, &Query::marginal(1, 0)).unwrap();
        assert!((p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn conditional_matches_ratio() {
        let net = chain();
        let q = Query::conditional(0, 0, vec![(1, 0)]);
        let p = ve_marginal(&net, &q).unwrap();
        assert!((p - 0.24 / 0.31).abs() < 1e-12);
        let (joint, pe) = ve_joint_and_evidence(&net, &q).unwrap();
        assert!((joint - 0.24).abs() < 1e-12);
        assert!((pe - 0.31).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_is_error() {
        let mut net = chain();
        net.local[0] = LocalCredalSpec::singleton(vec![vec![1.0, 0.0]]);
        net.local[1] = LocalCredalSpec::singleton(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let q = Query::conditional(0, 0, vec![(1, 1)]);
        assert_eq!(ve_marginal(&net, &q), Err(OracleError::UndefinedConditional));
    }

    #[test]
    fn rejects_non_singleton() {
        let mut net = chain();
        net.local[0] = LocalCredalSpec::SeparateVertices(crate::model::SeparateVertexForm {
            columns: vec![vec![vec![0.3, 0.7], vec![0.4, 0.6]]],
        });
        assert_eq!(
            ve_marginal(&net, &Query::marginal(1, 0)),
            Err(OracleError::NotSingleton { var: 0 })
        );
    }
}
