//! Maximization of bipartite modularity: exhaustive enumeration for tiny
//! graphs and deterministic heuristics for everything else.
//!
//! All value bookkeeping runs on integer numerators over the common
//! denominator m^2, so comparisons are exact; the reported value is always
//! re-derived from a full [`bipartite_modularity`] evaluation of the final
//! division.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{all_community_stats, BipartiteGraph, Color, Division, VertexId};
use crate::modularity::{
    bipartite_modularity, merge_delta_scaled, move_delta_scaled, scaled_to_rational,
    ModularityError, Rational,
};
use crate::rng::SplitMix64;

/// Largest vertex count accepted by [`brute_force_max`]; Bell(12) is about
/// 4.2 million partitions.
pub const BRUTE_FORCE_VERTEX_LIMIT: usize = 12;

/// Sweep cap for [`label_propagation`].
pub const LABEL_PROPAGATION_SWEEP_LIMIT: u64 = 100;

/// Default round cap for [`alternating_optimize`].
pub const ALTERNATING_DEFAULT_ROUNDS: u64 = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Method {
    BruteForce,
    Greedy,
    LabelPropagation,
    Alternating,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BruteForce => write!(f, "brute"),
            Method::Greedy => write!(f, "greedy"),
            Method::LabelPropagation => write!(f, "lp"),
            Method::Alternating => write!(f, "alt"),
        }
    }
}

/// Outcome of a solver run. `value` always equals
/// `bipartite_modularity(graph, division)` exactly.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SolveResult {
    pub division: Division,
    pub value: Rational,
    pub method: Method,
    pub iterations: u64,
    pub seed: Option<u64>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("graph with {vertices} vertices exceeds the exhaustive limit of {limit}")]
    GraphTooLarge { vertices: usize, limit: usize },
    #[error(transparent)]
    Modularity(#[from] ModularityError),
}

/// Visit every partition of `0..n` exactly once, encoded as restricted
/// growth strings in lexicographic order: `labels[0] == 0` and each later
/// entry is at most `1 + max(previous entries)`, which is precisely the
/// canonical community numbering used by [`Division`].
pub(crate) fn for_each_partition<F: FnMut(&[usize])>(n: usize, mut visit: F) {
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut labels = vec![0usize; n];
    let mut prefix_max = vec![0usize; n]; // prefix_max[i] = max(labels[..i]), i >= 1
    loop {
        visit(&labels);
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(labels[i - 1]);
        }
        let mut bump = None;
        for i in (1..n).rev() {
            if labels[i] <= prefix_max[i] {
                bump = Some(i);
                break;
            }
        }
        match bump {
            Some(i) => {
                labels[i] += 1;
                for l in &mut labels[i + 1..] {
                    *l = 0;
                }
            }
            None => break,
        }
    }
}

fn require_edges(g: &BipartiteGraph) -> Result<u64, SolverError> {
    let m = g.edge_count() as u64;
    if m == 0 {
        return Err(SolverError::Modularity(ModularityError::EmptyEdgeSet));
    }
    Ok(m)
}

/// Globally maximal Q_b by exhaustive enumeration of all divisions.
///
/// Ties are broken toward the lexicographically smallest canonical form,
/// which the enumeration order delivers for free.
pub fn brute_force_max(g: &BipartiteGraph) -> Result<SolveResult, SolverError> {
    let m = require_edges(g)?;
    let n = g.vertex_count();
    if n > BRUTE_FORCE_VERTEX_LIMIT {
        return Err(SolverError::GraphTooLarge {
            vertices: n,
            limit: BRUTE_FORCE_VERTEX_LIMIT,
        });
    }

    let degrees: Vec<u64> = (0..n).map(|v| g.neighbors(VertexId(v)).len() as u64).collect();
    let reds: Vec<bool> = (0..n).map(|v| g.color(VertexId(v)) == Color::Red).collect();
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|&(r, b)| (r.index(), b.index()))
        .collect();

    let mut red_sum = vec![0i128; n];
    let mut blue_sum = vec![0i128; n];
    let mut within = vec![0i128; n];
    let mut best_score = i128::MIN;
    let mut best: Vec<usize> = Vec::new();
    let mut visited = 0u64;

    for_each_partition(n, |labels| {
        visited += 1;
        let communities = labels.iter().copied().max().unwrap_or(0) + 1;
        for c in 0..communities {
            red_sum[c] = 0;
            blue_sum[c] = 0;
            within[c] = 0;
        }
        for v in 0..n {
            if reds[v] {
                red_sum[labels[v]] += i128::from(degrees[v]);
            } else {
                blue_sum[labels[v]] += i128::from(degrees[v]);
            }
        }
        for &(u, w) in &edges {
            if labels[u] == labels[w] {
                within[labels[u]] += 1;
            }
        }
        let mut score = 0i128;
        for c in 0..communities {
            score += within[c] * i128::from(m) - red_sum[c] * blue_sum[c];
        }
        if score > best_score {
            best_score = score;
            best = labels.to_vec();
        }
    });

    let division = Division::new(best);
    let value = bipartite_modularity(g, &division)?;
    debug_assert_eq!(value, scaled_to_rational(best_score, m));
    Ok(SolveResult {
        division,
        value,
        method: Method::BruteForce,
        iterations: visited,
        seed: None,
    })
}

/// Agglomerative merging from all singletons: repeatedly apply the merge with
/// the largest strictly positive delta, smallest community index pair first
/// on ties. Only pairs joined by at least one edge can have a positive delta,
/// so those are the only candidates examined.
pub fn greedy_agglomerative(g: &BipartiteGraph) -> Result<SolveResult, SolverError> {
    let m = require_edges(g)?;
    let n = g.vertex_count();
    let mut division = Division::singletons(n);
    let mut merges = 0u64;

    loop {
        let stats = all_community_stats(g, &division).map_err(ModularityError::from)?;
        let mut cuts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(r, b) in g.edges() {
            let cr = division.assignment()[r.index()];
            let cb = division.assignment()[b.index()];
            if cr != cb {
                *cuts.entry((cr.min(cb), cr.max(cb))).or_insert(0) += 1;
            }
        }
        let mut best: Option<(i128, (usize, usize))> = None;
        for (&pair, &cut) in &cuts {
            let s1 = &stats[pair.0];
            let s2 = &stats[pair.1];
            let delta = merge_delta_scaled(
                s1.red_degree_sum,
                s1.blue_degree_sum,
                s2.red_degree_sum,
                s2.blue_degree_sum,
                cut,
                m,
            );
            if delta > 0 && best.is_none_or(|(b, _)| delta > b) {
                best = Some((delta, pair));
            }
        }
        match best {
            Some((_, (c1, c2))) => {
                division = division.with_merged(c1, c2).map_err(ModularityError::from)?;
                merges += 1;
            }
            None => break,
        }
    }

    let value = bipartite_modularity(g, &division)?;
    Ok(SolveResult {
        division,
        value,
        method: Method::Greedy,
        iterations: merges,
        seed: None,
    })
}

/// Seeded label propagation. Each sweep visits the vertices in a fresh
/// seeded random order; a vertex moves to the neighboring community with the
/// largest strictly positive delta (smallest community label on ties).
/// Stops after a sweep without moves or after
/// [`LABEL_PROPAGATION_SWEEP_LIMIT`] sweeps.
pub fn label_propagation(g: &BipartiteGraph, seed: u64) -> Result<SolveResult, SolverError> {
    let m = require_edges(g)?;
    let n = g.vertex_count();
    let mut labels: Vec<usize> = (0..n).collect();
    // Degree sums per community label, by color. Labels never leave 0..n.
    let mut red_sum = vec![0u64; n];
    let mut blue_sum = vec![0u64; n];
    for v in 0..n {
        let deg = g.neighbors(VertexId(v)).len() as u64;
        match g.color(VertexId(v)) {
            Color::Red => red_sum[v] = deg,
            Color::Blue => blue_sum[v] = deg,
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sweeps = 0u64;
    let mut accumulated = 0i128; // running sum of accepted deltas, in 1/m^2

    while sweeps < LABEL_PROPAGATION_SWEEP_LIMIT {
        sweeps += 1;
        rng.shuffle(&mut order);
        let mut moved = false;
        for &vi in &order {
            let v = VertexId(vi);
            let current = labels[vi];
            let mut incident: BTreeMap<usize, u64> = BTreeMap::new();
            for &w in g.neighbors(v) {
                *incident.entry(labels[w.index()]).or_insert(0) += 1;
            }
            let e_cur = incident.get(&current).copied().unwrap_or(0);
            let deg = g.neighbors(v).len() as u64;
            let red = g.color(v) == Color::Red;
            let opp = |c: usize| if red { blue_sum[c] } else { red_sum[c] };
            let mut best: Option<(i128, usize)> = None;
            for (&c, &e_c) in &incident {
                if c == current {
                    continue;
                }
                let delta = move_delta_scaled(deg, e_cur, e_c, opp(current), opp(c), m);
                if delta > 0 && best.is_none_or(|(b, _)| delta > b) {
                    best = Some((delta, c));
                }
            }
            if let Some((delta, target)) = best {
                labels[vi] = target;
                if red {
                    red_sum[current] -= deg;
                    red_sum[target] += deg;
                } else {
                    blue_sum[current] -= deg;
                    blue_sum[target] += deg;
                }
                accumulated += delta;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let division = Division::new(labels);
    let value = bipartite_modularity(g, &division)?;
    // Q_b of all singletons is 0, so the folded deltas equal the final value.
    debug_assert_eq!(value, scaled_to_rational(accumulated, m));
    Ok(SolveResult {
        division,
        value,
        method: Method::LabelPropagation,
        iterations: sweeps,
        seed: Some(seed),
    })
}

/// Alternating reassignment: with blue assignments fixed, every red vertex
/// (ascending id) is reassigned to its delta-optimal community, fresh
/// communities allowed, then symmetrically for blue. Stops at a fixpoint or
/// after `max_rounds` full rounds.
///
/// A strictly positive best delta always wins, smallest community index on
/// ties. When the best achievable delta is exactly zero and splitting off as
/// a fresh singleton attains it, the vertex takes that zero-cost split; this
/// is what lets the optimizer leave plateaus such as the single-community
/// division, where every one-vertex change has delta zero. Q_b never
/// decreases in either case.
pub fn alternating_optimize(
    g: &BipartiteGraph,
    init: &Division,
    max_rounds: u64,
) -> Result<SolveResult, SolverError> {
    let m = require_edges(g)?;
    init.matches_graph(g).map_err(ModularityError::from)?;
    let n = g.vertex_count();

    let mut labels: Vec<usize> = init.assignment().to_vec();
    let mut community_count = init.community_count();
    // Invariant: the stat vectors keep one zeroed spare slot at index
    // `community_count` so the fresh-community candidate can be scored
    // without special cases.
    let mut red_sum = vec![0u64; community_count + 1];
    let mut blue_sum = vec![0u64; community_count + 1];
    let mut member_count = vec![0u64; community_count + 1];
    for (v, &c) in labels.iter().enumerate() {
        let deg = g.neighbors(VertexId(v)).len() as u64;
        member_count[c] += 1;
        match g.color(VertexId(v)) {
            Color::Red => red_sum[c] += deg,
            Color::Blue => blue_sum[c] += deg,
        }
    }

    let initial = bipartite_modularity(g, init)?;
    let mut accumulated = 0i128;
    let mut rounds = 0u64;

    while rounds < max_rounds {
        rounds += 1;
        let mut any_move = false;
        for phase in [Color::Red, Color::Blue] {
            for vi in 0..n {
                let v = VertexId(vi);
                if g.color(v) != phase {
                    continue;
                }
                let current = labels[vi];
                let deg = g.neighbors(v).len() as u64;
                let red = phase == Color::Red;
                let mut incident: BTreeMap<usize, u64> = BTreeMap::new();
                for &w in g.neighbors(v) {
                    *incident.entry(labels[w.index()]).or_insert(0) += 1;
                }
                let e_cur = incident.get(&current).copied().unwrap_or(0);
                let opp = |c: usize| if red { blue_sum[c] } else { red_sum[c] };
                let fresh = community_count;
                let mut best: Option<(i128, usize)> = None;
                for c in 0..=fresh {
                    if c == current {
                        continue;
                    }
                    let e_c = if c == fresh {
                        0
                    } else {
                        incident.get(&c).copied().unwrap_or(0)
                    };
                    let delta = move_delta_scaled(deg, e_cur, e_c, opp(current), opp(c), m);
                    if delta > 0 && best.is_none_or(|(b, _)| delta > b) {
                        best = Some((delta, c));
                    }
                }
                let target = match best {
                    Some((delta, c)) => Some((delta, c)),
                    None => {
                        // Zero-cost split: leave for a fresh community when
                        // that ties the optimum and actually changes the
                        // partition.
                        let delta =
                            move_delta_scaled(deg, e_cur, 0, opp(current), 0, m);
                        if delta == 0 && member_count[current] > 1 {
                            Some((0, fresh))
                        } else {
                            None
                        }
                    }
                };
                if let Some((delta, c)) = target {
                    labels[vi] = c;
                    member_count[current] -= 1;
                    member_count[c] += 1;
                    if red {
                        red_sum[current] -= deg;
                        red_sum[c] += deg;
                    } else {
                        blue_sum[current] -= deg;
                        blue_sum[c] += deg;
                    }
                    if c == fresh {
                        community_count += 1;
                        red_sum.push(0);
                        blue_sum.push(0);
                        member_count.push(0);
                    }
                    accumulated += delta;
                    any_move = true;
                }
            }
        }
        if !any_move {
            break;
        }
    }

    let division = Division::new(labels);
    let value = bipartite_modularity(g, &division)?;
    debug_assert_eq!(value, &initial + scaled_to_rational(accumulated, m));
    Ok(SolveResult {
        division,
        value,
        method: Method::Alternating,
        iterations: rounds,
        seed: None,
    })
}
