//! Exact evaluation of standard and bipartite modularity, plus incremental
//! deltas for solver moves.
//!
//! For a division C of a graph with m edges, the two quality functions are
//!
//! ```text
//! Q   = sum over communities of ( m_C/m - (D_C/2m)^2 )
//! Q_b = sum over communities of ( m_C/m - R_C*B_C/m^2 )
//! ```
//!
//! where m_C counts edges inside the community, D_C is its total degree sum
//! and R_C, B_C are the degree sums of its red and blue members. Everything
//! here is exact rational arithmetic; floating point appears only in the
//! display helpers.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::graph::{all_community_stats, BipartiteGraph, Division, GraphError, VertexId};

/// Exact arbitrary-precision fraction, always in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModularityError {
    /// The defining formulas divide by m, so graphs without edges are
    /// rejected rather than given a conventional value.
    #[error("modularity is undefined on a graph with no edges")]
    EmptyEdgeSet,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn require_edges(g: &BipartiteGraph) -> Result<u64, ModularityError> {
    let m = g.edge_count() as u64;
    if m == 0 {
        return Err(ModularityError::EmptyEdgeSet);
    }
    Ok(m)
}

/// Barber's bipartite modularity of `d`, exact.
pub fn bipartite_modularity(g: &BipartiteGraph, d: &Division) -> Result<Rational, ModularityError> {
    let m = require_edges(g)?;
    let stats = all_community_stats(g, d)?;
    let mut score = BigInt::zero();
    for s in &stats {
        score += BigInt::from(u128::from(s.edges_within) * u128::from(m));
        score -= BigInt::from(u128::from(s.red_degree_sum) * u128::from(s.blue_degree_sum));
    }
    Ok(Rational::new(score, BigInt::from(m) * BigInt::from(m)))
}

/// Newman-Girvan modularity of `d`, exact. Evaluated on the same bipartite
/// graph type; the null model just ignores the coloring.
pub fn standard_modularity(g: &BipartiteGraph, d: &Division) -> Result<Rational, ModularityError> {
    let m = require_edges(g)?;
    let stats = all_community_stats(g, d)?;
    let mut score = BigInt::zero();
    for s in &stats {
        let degree_sum = u128::from(s.degree_sum());
        score += BigInt::from(4 * u128::from(s.edges_within) * u128::from(m));
        score -= BigInt::from(degree_sum * degree_sum);
    }
    Ok(Rational::new(
        score,
        BigInt::from(4u32) * BigInt::from(m) * BigInt::from(m),
    ))
}

/// The move-delta formula, in units of 1/m^2.
///
/// Moving a vertex of degree `deg` whose edges into its current and target
/// communities number `e_cur` and `e_tgt`, where the two communities hold
/// `opp_cur` and `opp_tgt` total degree of the opposite color:
/// delta * m^2 = (e_tgt - e_cur) * m + deg * (opp_cur - opp_tgt).
pub(crate) fn move_delta_scaled(
    deg: u64,
    e_cur: u64,
    e_tgt: u64,
    opp_cur: u64,
    opp_tgt: u64,
    m: u64,
) -> i128 {
    let edge_part = (i128::from(e_tgt) - i128::from(e_cur)) * i128::from(m);
    let null_part = i128::from(deg) * (i128::from(opp_cur) - i128::from(opp_tgt));
    edge_part + null_part
}

/// The merge-delta formula, in units of 1/m^2:
/// delta * m^2 = cut * m - (R1*B2 + R2*B1).
pub(crate) fn merge_delta_scaled(
    r1: u64,
    b1: u64,
    r2: u64,
    b2: u64,
    cut: u64,
    m: u64,
) -> i128 {
    let cross = i128::from(r1) * i128::from(b2) + i128::from(r2) * i128::from(b1);
    i128::from(cut) * i128::from(m) - cross
}

pub(crate) fn scaled_to_rational(scaled: i128, m: u64) -> Rational {
    Rational::new(BigInt::from(scaled), BigInt::from(m) * BigInt::from(m))
}

/// Change in Q_b when `v` moves to community `target`, computed from the two
/// touched communities only. `target == d.community_count()` opens a fresh
/// community. Equals `Q_b(after) - Q_b(before)` exactly.
pub fn delta_move(
    g: &BipartiteGraph,
    d: &Division,
    v: VertexId,
    target: usize,
) -> Result<Rational, ModularityError> {
    let m = require_edges(g)?;
    d.matches_graph(g)?;
    let current = d.community_of(v)?;
    if target > d.community_count() {
        return Err(GraphError::UnknownCommunity(target).into());
    }
    if target == current {
        return Ok(Rational::zero());
    }

    let mut e_cur = 0u64;
    let mut e_tgt = 0u64;
    for &w in g.neighbors(v) {
        let c = d.assignment()[w.index()];
        if c == current {
            e_cur += 1;
        } else if c == target {
            e_tgt += 1;
        }
    }
    let opposite = g.color(v).opposite();
    let opp_sum = |c: usize| -> u64 {
        if c >= d.community_count() {
            return 0; // fresh community
        }
        d.members(c)
            .expect("validated community")
            .iter()
            .filter(|&&w| g.color(w) == opposite)
            .map(|&w| g.neighbors(w).len() as u64)
            .sum()
    };
    let scaled = move_delta_scaled(
        g.neighbors(v).len() as u64,
        e_cur,
        e_tgt,
        opp_sum(current),
        opp_sum(target),
        m,
    );
    Ok(scaled_to_rational(scaled, m))
}

/// Change in Q_b when communities `c1` and `c2` are replaced by their union:
/// cut(c1,c2)/m - (R1*B2 + R2*B1)/m^2.
pub fn delta_merge(
    g: &BipartiteGraph,
    d: &Division,
    c1: usize,
    c2: usize,
) -> Result<Rational, ModularityError> {
    let m = require_edges(g)?;
    d.matches_graph(g)?;
    if c1 == c2 {
        return Err(GraphError::UnknownCommunity(c2).into());
    }
    let s1 = crate::graph::community_stats(g, d, c1)?;
    let s2 = crate::graph::community_stats(g, d, c2)?;
    // Count cut edges from the smaller side.
    let (from, other) = if d.members(c1)?.len() <= d.members(c2)?.len() {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let mut cut = 0u64;
    for &v in d.members(from)? {
        for &w in g.neighbors(v) {
            if d.assignment()[w.index()] == other {
                cut += 1;
            }
        }
    }
    let scaled = merge_delta_scaled(
        s1.red_degree_sum,
        s1.blue_degree_sum,
        s2.red_degree_sum,
        s2.blue_degree_sum,
        cut,
        m,
    );
    Ok(scaled_to_rational(scaled, m))
}

/// Render a rational as `p/q`, always with the explicit denominator.
pub fn render_exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Display-only decimal rendering with six significant digits, truncated
/// toward zero. Computed by exact integer division so the printed digits are
/// a true prefix of the decimal expansion.
pub fn render_decimal(r: &Rational) -> String {
    if r.is_zero() {
        return "0.000000".to_string();
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let num = r.numer().abs();
    let den = r.denom().clone();
    let int_part = &num / &den;
    let int_digits = if int_part.is_zero() {
        0
    } else {
        int_part.to_string().len()
    };
    if int_digits >= 6 {
        return format!("{sign}{int_part}");
    }
    // For |r| < 1, skip leading zeros after the point so six significant
    // digits survive; cap the scan for vanishingly small values.
    let mut leading_zeros = 0usize;
    if int_part.is_zero() {
        let mut rem = &num % &den;
        while leading_zeros < 30 {
            rem *= 10;
            if &rem / &den > BigInt::zero() {
                break;
            }
            leading_zeros += 1;
        }
    }
    let decimals = if int_digits > 0 {
        6 - int_digits
    } else {
        6 + leading_zeros
    };
    let scale = BigInt::from(10u32).pow(decimals as u32);
    let scaled = &num * &scale / &den;
    let frac = &scaled % &scale;
    format!("{sign}{int_part}.{frac:0>width$}", width = decimals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexId;
    use num_traits::One;

    fn two_disjoint_edges() -> BipartiteGraph {
        // r0-b1, r2-b3
        BipartiteGraph::new(
            vec![VertexId(0), VertexId(2)],
            vec![VertexId(1), VertexId(3)],
            vec![(VertexId(0), VertexId(1)), (VertexId(2), VertexId(3))],
        )
        .unwrap()
    }

    fn half() -> Rational {
        Rational::new(BigInt::from(1), BigInt::from(2))
    }

    #[test]
    fn trivial_divisions_score_zero() {
        let g = two_disjoint_edges();
        let whole = bipartite_modularity(&g, &Division::single_community(4)).unwrap();
        assert!(whole.is_zero());
        let singles = bipartite_modularity(&g, &Division::singletons(4)).unwrap();
        assert!(singles.is_zero());
        let q = standard_modularity(&g, &Division::single_community(4)).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn per_edge_division_scores_one_half() {
        let g = two_disjoint_edges();
        let d = Division::new(vec![0, 0, 1, 1]);
        assert_eq!(bipartite_modularity(&g, &d).unwrap(), half());
        assert_eq!(standard_modularity(&g, &d).unwrap(), half());
    }

    #[test]
    fn single_edge_split_standard_is_minus_half() {
        let g = BipartiteGraph::new(
            vec![VertexId(0)],
            vec![VertexId(1)],
            vec![(VertexId(0), VertexId(1))],
        )
        .unwrap();
        let d = Division::singletons(2);
        assert_eq!(standard_modularity(&g, &d).unwrap(), -half());
        assert!(bipartite_modularity(&g, &d).unwrap().is_zero());
    }

    #[test]
    fn empty_edge_set_rejected() {
        let g = BipartiteGraph::new(vec![VertexId(0)], vec![VertexId(1)], vec![]).unwrap();
        assert_eq!(
            bipartite_modularity(&g, &Division::singletons(2)).unwrap_err(),
            ModularityError::EmptyEdgeSet
        );
    }

    #[test]
    fn delta_move_matches_full_recomputation() {
        let g = two_disjoint_edges();
        let d = Division::new(vec![0, 1, 1, 2]);
        let before = bipartite_modularity(&g, &d).unwrap();
        for v in 0..4 {
            for target in 0..=d.community_count() {
                let delta = delta_move(&g, &d, VertexId(v), target).unwrap();
                let moved = d.with_vertex_moved(VertexId(v), target).unwrap();
                let after = bipartite_modularity(&g, &moved).unwrap();
                assert_eq!(delta, &after - &before, "v={v} target={target}");
            }
        }
    }

    #[test]
    fn delta_move_to_own_community_is_zero() {
        let g = two_disjoint_edges();
        let d = Division::new(vec![0, 0, 1, 1]);
        let delta = delta_move(&g, &d, VertexId(2), 1).unwrap();
        assert!(delta.is_zero());
    }

    #[test]
    fn delta_merge_examples() {
        let g = two_disjoint_edges();
        let d = Division::new(vec![0, 0, 1, 1]);
        // Merging the two per-edge communities: 0 - (1*1 + 1*1)/4 = -1/2.
        assert_eq!(delta_merge(&g, &d, 0, 1).unwrap(), -half());
        // Full recomputation agrees.
        let merged = d.with_merged(0, 1).unwrap();
        let direct = bipartite_modularity(&g, &merged).unwrap()
            - bipartite_modularity(&g, &d).unwrap();
        assert_eq!(delta_merge(&g, &d, 0, 1).unwrap(), direct);
        // No cut edges, disjoint colors ({r0} with {b3}):
        // delta = -(R1*B2 + R2*B1)/m^2 = -1/4.
        let d = Division::singletons(4);
        let expected = scaled_to_rational(-1, 2);
        assert_eq!(delta_merge(&g, &d, 0, 3).unwrap(), expected);
        let moved = d.with_merged(0, 3).unwrap();
        let direct = bipartite_modularity(&g, &moved).unwrap()
            - bipartite_modularity(&g, &d).unwrap();
        assert_eq!(delta_merge(&g, &d, 0, 3).unwrap(), direct);
    }

    #[test]
    fn render_formats() {
        assert_eq!(render_exact(&Rational::zero()), "0/1");
        assert_eq!(render_exact(&half()), "1/2");
        assert_eq!(render_decimal(&half()), "0.500000");
        assert_eq!(render_decimal(&-half()), "-0.500000");
        assert_eq!(render_decimal(&Rational::zero()), "0.000000");
        let k = Rational::new(BigInt::from(123895), BigInt::from(160801));
        assert_eq!(render_decimal(&k), "0.770486");
        assert_eq!(render_decimal(&Rational::one()), "1.00000");
    }
}
