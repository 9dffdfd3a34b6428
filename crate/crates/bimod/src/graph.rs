//! Bipartite graphs, divisions into communities, and per-community counts.
//!
//! Graphs and divisions are immutable values: all invariants are checked at
//! construction and every operation afterwards is a pure function, so they can
//! be shared freely across threads.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Dense vertex index, unique within a graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Side of the bipartition a vertex belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::Red => write!(f, "red"),
            Color::Blue => write!(f, "blue"),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} appears in both color sets")]
    OverlappingColors(VertexId),
    #[error("vertex ids are not dense: {vertices} vertices declared but id {missing} is absent")]
    NotDense { vertices: usize, missing: usize },
    #[error("edge ({0}, {1}) joins two {2} vertices")]
    SameColorEdge(VertexId, VertexId, Color),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown community index {0}")]
    UnknownCommunity(usize),
    #[error("vertex {0} assigned to more than one community")]
    DuplicateAssignment(VertexId),
    #[error("vertex {0} is not assigned to any community")]
    UnassignedVertex(VertexId),
    #[error("division covers {division} vertices but the graph has {graph}")]
    DivisionMismatch { division: usize, graph: usize },
}

/// Undirected bipartite graph over dense vertex ids.
///
/// Every edge joins one red and one blue vertex; edges are stored both as a
/// membership set and as adjacency lists, built once at construction.
#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    colors: Vec<Color>,
    adjacency: Vec<Vec<VertexId>>,
    edge_set: HashSet<(usize, usize)>,
    /// Edges normalized to (red, blue), sorted for deterministic iteration.
    edges: Vec<(VertexId, VertexId)>,
    /// Position of each vertex among the vertices of its own color.
    color_ordinal: Vec<usize>,
    reds: Vec<VertexId>,
    blues: Vec<VertexId>,
}

impl BipartiteGraph {
    /// Build a graph from explicit red and blue vertex sets.
    ///
    /// The union of `red` and `blue` must be exactly `0..n`. Edges may list
    /// their endpoints in either order.
    pub fn new(
        red: Vec<VertexId>,
        blue: Vec<VertexId>,
        edges: Vec<(VertexId, VertexId)>,
    ) -> Result<Self, GraphError> {
        let n = red.len() + blue.len();
        let mut colors: Vec<Option<Color>> = vec![None; n];
        for (list, color) in [(&red, Color::Red), (&blue, Color::Blue)] {
            for &v in list {
                if v.index() >= n {
                    return Err(GraphError::NotDense {
                        vertices: n,
                        missing: n.saturating_sub(1),
                    });
                }
                match colors[v.index()] {
                    None => colors[v.index()] = Some(color),
                    Some(_) => return Err(GraphError::OverlappingColors(v)),
                }
            }
        }
        let colors: Vec<Color> = colors
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or(GraphError::NotDense { vertices: n, missing: i }))
            .collect::<Result<_, _>>()?;
        Self::from_colors(colors, &edges)
    }

    /// Build a graph from a per-vertex color table.
    pub fn from_colors(
        colors: Vec<Color>,
        edges: &[(VertexId, VertexId)],
    ) -> Result<Self, GraphError> {
        let n = colors.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_set = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u.index() >= n || v.index() >= n {
                let missing = if u.index() >= n { u } else { v };
                return Err(GraphError::UnknownVertex(missing));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if colors[u.index()] == colors[v.index()] {
                return Err(GraphError::SameColorEdge(u, v, colors[u.index()]));
            }
            let (r, b) = if colors[u.index()] == Color::Red { (u, v) } else { (v, u) };
            if !edge_set.insert((r.index(), b.index())) {
                return Err(GraphError::DuplicateEdge(r, b));
            }
            normalized.push((r, b));
            adjacency[r.index()].push(b);
            adjacency[b.index()].push(r);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        normalized.sort_unstable();

        let mut color_ordinal = vec![0usize; n];
        let mut reds = Vec::new();
        let mut blues = Vec::new();
        for (i, &c) in colors.iter().enumerate() {
            match c {
                Color::Red => {
                    color_ordinal[i] = reds.len();
                    reds.push(VertexId(i));
                }
                Color::Blue => {
                    color_ordinal[i] = blues.len();
                    blues.push(VertexId(i));
                }
            }
        }

        Ok(BipartiteGraph {
            colors,
            adjacency,
            edge_set,
            edges: normalized,
            color_ordinal,
            reds,
            blues,
        })
    }

    /// Re-check every structural invariant. Construction already enforces
    /// them, so this exists for defense on deserialized or FFI-supplied data.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        for &(r, b) in &self.edges {
            if r == b {
                return Err(GraphError::SelfLoop(r));
            }
            if self.color(r) == self.color(b) {
                return Err(GraphError::SameColorEdge(r, b, self.color(r)));
            }
            if !seen.insert((r, b)) {
                return Err(GraphError::DuplicateEdge(r, b));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.colors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn red_count(&self) -> usize {
        self.reds.len()
    }

    pub fn blue_count(&self) -> usize {
        self.blues.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.colors.len()
    }

    /// Color of `v`. Panics if `v` is not a vertex of this graph.
    pub fn color(&self, v: VertexId) -> Color {
        self.colors[v.index()]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.colors.len()).map(VertexId)
    }

    pub fn red_vertices(&self) -> &[VertexId] {
        &self.reds
    }

    pub fn blue_vertices(&self) -> &[VertexId] {
        &self.blues
    }

    /// Edges as (red, blue) pairs in ascending order.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        if !self.contains(u) || !self.contains(v) {
            return false;
        }
        let (r, b) = if self.color(u) == Color::Red { (u, v) } else { (v, u) };
        self.edge_set.contains(&(r.index(), b.index()))
    }

    /// Number of incident edges.
    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        if !self.contains(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        Ok(self.adjacency[v.index()].len())
    }

    /// Position of `v` among the vertices of its own color, in id order.
    /// This is the index used by the text file format (`r3`, `b7`).
    pub fn color_ordinal(&self, v: VertexId) -> usize {
        self.color_ordinal[v.index()]
    }

    pub fn vertex_by_color_ordinal(&self, color: Color, ordinal: usize) -> Option<VertexId> {
        match color {
            Color::Red => self.reds.get(ordinal).copied(),
            Color::Blue => self.blues.get(ordinal).copied(),
        }
    }
}

/// Structural equality: same red/blue counts and the same edge relation in
/// per-color coordinates. Two graphs that interleave their global ids
/// differently but wire the same bipartite structure compare equal, which is
/// what the file format round-trip preserves.
impl PartialEq for BipartiteGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.red_count() != other.red_count() || self.blue_count() != other.blue_count() {
            return false;
        }
        if self.edge_count() != other.edge_count() {
            return false;
        }
        let key = |g: &BipartiteGraph| {
            let mut pairs: Vec<(usize, usize)> = g
                .edges
                .iter()
                .map(|&(r, b)| (g.color_ordinal(r), g.color_ordinal(b)))
                .collect();
            pairs.sort_unstable();
            pairs
        };
        key(self) == key(other)
    }
}

impl Eq for BipartiteGraph {}

/// A total assignment of vertices to communities, stored in canonical form:
/// communities are renumbered 0, 1, 2, ... by their smallest member, so two
/// divisions describe the same partition iff they compare equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Division {
    assignment: Vec<usize>,
    members: Vec<Vec<VertexId>>,
}

impl Division {
    /// Canonicalize an arbitrary label vector into a division. Labels may be
    /// any usize values; only the partition they induce matters.
    pub fn new(labels: Vec<usize>) -> Division {
        let mut remap: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::with_capacity(labels.len().min(64));
        let mut assignment = Vec::with_capacity(labels.len());
        let mut members: Vec<Vec<VertexId>> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            let next = members.len();
            let c = *remap.entry(label).or_insert(next);
            if c == next {
                members.push(Vec::new());
            }
            assignment.push(c);
            members[c].push(VertexId(i));
        }
        Division { assignment, members }
    }

    /// Division from explicit member lists over vertices `0..n`.
    /// Every vertex must appear exactly once.
    pub fn from_communities(n: usize, groups: &[Vec<VertexId>]) -> Result<Division, GraphError> {
        let mut labels = vec![usize::MAX; n];
        for (c, group) in groups.iter().enumerate() {
            for &v in group {
                if v.index() >= n {
                    return Err(GraphError::UnknownVertex(v));
                }
                if labels[v.index()] != usize::MAX {
                    return Err(GraphError::DuplicateAssignment(v));
                }
                labels[v.index()] = c;
            }
        }
        for (i, &label) in labels.iter().enumerate() {
            if label == usize::MAX {
                return Err(GraphError::UnassignedVertex(VertexId(i)));
            }
        }
        Ok(Division::new(labels))
    }

    pub fn single_community(n: usize) -> Division {
        Division::new(vec![0; n])
    }

    pub fn singletons(n: usize) -> Division {
        Division::new((0..n).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.members.len()
    }

    pub fn community_of(&self, v: VertexId) -> Result<usize, GraphError> {
        self.assignment
            .get(v.index())
            .copied()
            .ok_or(GraphError::UnknownVertex(v))
    }

    /// Members of community `c`, ascending by vertex id.
    pub fn members(&self, c: usize) -> Result<&[VertexId], GraphError> {
        self.members
            .get(c)
            .map(|m| m.as_slice())
            .ok_or(GraphError::UnknownCommunity(c))
    }

    pub fn communities(&self) -> &[Vec<VertexId>] {
        &self.members
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// New division with `v` moved to community `target`.
    /// `target == community_count()` opens a fresh community.
    pub fn with_vertex_moved(&self, v: VertexId, target: usize) -> Result<Division, GraphError> {
        if v.index() >= self.assignment.len() {
            return Err(GraphError::UnknownVertex(v));
        }
        if target > self.members.len() {
            return Err(GraphError::UnknownCommunity(target));
        }
        let mut labels = self.assignment.clone();
        // A fresh community needs a label distinct from all current ones;
        // community count never exceeds vertex count so this stays in range.
        labels[v.index()] = target;
        Ok(Division::new(labels))
    }

    /// New division with communities `c1` and `c2` merged.
    pub fn with_merged(&self, c1: usize, c2: usize) -> Result<Division, GraphError> {
        if c1 >= self.members.len() {
            return Err(GraphError::UnknownCommunity(c1));
        }
        if c2 >= self.members.len() {
            return Err(GraphError::UnknownCommunity(c2));
        }
        let mut labels = self.assignment.clone();
        for l in &mut labels {
            if *l == c2 {
                *l = c1;
            }
        }
        Ok(Division::new(labels))
    }

    pub fn matches_graph(&self, g: &BipartiteGraph) -> Result<(), GraphError> {
        if self.assignment.len() != g.vertex_count() {
            return Err(GraphError::DivisionMismatch {
                division: self.assignment.len(),
                graph: g.vertex_count(),
            });
        }
        Ok(())
    }
}

/// Exact per-community counts: edges inside the community and the degree sums
/// of its red and blue members.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CommunityStats {
    pub edges_within: u64,
    pub red_degree_sum: u64,
    pub blue_degree_sum: u64,
}

impl CommunityStats {
    pub fn degree_sum(&self) -> u64 {
        self.red_degree_sum + self.blue_degree_sum
    }
}

/// Counts for one community of a division.
pub fn community_stats(
    g: &BipartiteGraph,
    d: &Division,
    c: usize,
) -> Result<CommunityStats, GraphError> {
    d.matches_graph(g)?;
    let members = d.members(c)?;
    let mut stats = CommunityStats {
        edges_within: 0,
        red_degree_sum: 0,
        blue_degree_sum: 0,
    };
    for &v in members {
        let deg = g.neighbors(v).len() as u64;
        match g.color(v) {
            Color::Red => {
                stats.red_degree_sum += deg;
                // Count each intra-community edge once, from its red endpoint.
                for &w in g.neighbors(v) {
                    if d.assignment[w.index()] == c {
                        stats.edges_within += 1;
                    }
                }
            }
            Color::Blue => stats.blue_degree_sum += deg,
        }
    }
    debug_assert!(stats.edges_within <= stats.red_degree_sum.min(stats.blue_degree_sum));
    Ok(stats)
}

/// Counts for every community in one pass over the graph.
pub fn all_community_stats(
    g: &BipartiteGraph,
    d: &Division,
) -> Result<Vec<CommunityStats>, GraphError> {
    d.matches_graph(g)?;
    let mut stats = vec![
        CommunityStats {
            edges_within: 0,
            red_degree_sum: 0,
            blue_degree_sum: 0,
        };
        d.community_count()
    ];
    for v in g.vertices() {
        let c = d.assignment[v.index()];
        let deg = g.neighbors(v).len() as u64;
        match g.color(v) {
            Color::Red => stats[c].red_degree_sum += deg,
            Color::Blue => stats[c].blue_degree_sum += deg,
        }
    }
    for &(r, b) in g.edges() {
        let cr = d.assignment[r.index()];
        if cr == d.assignment[b.index()] {
            stats[cr].edges_within += 1;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> BipartiteGraph {
        // r0 - b1 - r2
        BipartiteGraph::new(
            vec![VertexId(0), VertexId(2)],
            vec![VertexId(1)],
            vec![(VertexId(0), VertexId(1)), (VertexId(2), VertexId(1))],
        )
        .unwrap()
    }

    #[test]
    fn single_edge_is_valid() {
        let g = BipartiteGraph::new(
            vec![VertexId(0)],
            vec![VertexId(1)],
            vec![(VertexId(0), VertexId(1))],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.color(VertexId(0)), Color::Red);
        g.validate().unwrap();
    }

    #[test]
    fn same_color_edge_rejected() {
        let err = BipartiteGraph::new(
            vec![VertexId(0), VertexId(1)],
            vec![VertexId(2)],
            vec![(VertexId(0), VertexId(1))],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::SameColorEdge(_, _, Color::Red)));
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = BipartiteGraph::new(
            vec![VertexId(0)],
            vec![VertexId(1)],
            vec![(VertexId(0), VertexId(1)), (VertexId(1), VertexId(0))],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(VertexId(0), VertexId(1)));
    }

    #[test]
    fn overlapping_color_sets_rejected() {
        let err = BipartiteGraph::new(vec![VertexId(0)], vec![VertexId(0)], vec![]).unwrap_err();
        assert_eq!(err, GraphError::OverlappingColors(VertexId(0)));
    }

    #[test]
    fn degree_counts_incident_edges() {
        let g = path_graph();
        assert_eq!(g.degree(VertexId(1)).unwrap(), 2);
        assert_eq!(g.degree(VertexId(0)).unwrap(), 1);
        assert!(g.degree(VertexId(7)).is_err());
        // Isolated vertex.
        let g = BipartiteGraph::new(vec![VertexId(0)], vec![VertexId(1)], vec![]).unwrap();
        assert_eq!(g.degree(VertexId(0)).unwrap(), 0);
    }

    #[test]
    fn canonicalization_uses_smallest_member_order() {
        let d = Division::new(vec![5, 5, 2, 5, 2]);
        assert_eq!(d.assignment(), &[0, 0, 1, 0, 1]);
        assert_eq!(d.community_count(), 2);
        // Idempotent.
        let again = Division::new(d.assignment().to_vec());
        assert_eq!(again, d);
    }

    #[test]
    fn whole_graph_stats() {
        let g = path_graph();
        let d = Division::single_community(3);
        let s = community_stats(&g, &d, 0).unwrap();
        assert_eq!(s.edges_within, 2);
        assert_eq!(s.red_degree_sum, 2);
        assert_eq!(s.blue_degree_sum, 2);
        assert!(community_stats(&g, &d, 1).is_err());
    }

    #[test]
    fn singleton_red_vertex_stats() {
        // Red hub of degree 3 alone in its community.
        let g = BipartiteGraph::new(
            vec![VertexId(0)],
            vec![VertexId(1), VertexId(2), VertexId(3)],
            vec![
                (VertexId(0), VertexId(1)),
                (VertexId(0), VertexId(2)),
                (VertexId(0), VertexId(3)),
            ],
        )
        .unwrap();
        let d = Division::new(vec![0, 1, 1, 1]);
        let s = community_stats(&g, &d, 0).unwrap();
        assert_eq!((s.edges_within, s.red_degree_sum, s.blue_degree_sum), (0, 3, 0));
    }

    #[test]
    fn stats_partition_the_edge_set() {
        let g = path_graph();
        for labels in [vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 2], vec![0, 1, 0]] {
            let d = Division::new(labels);
            let stats = all_community_stats(&g, &d).unwrap();
            let within: u64 = stats.iter().map(|s| s.edges_within).sum();
            let red: u64 = stats.iter().map(|s| s.red_degree_sum).sum();
            let blue: u64 = stats.iter().map(|s| s.blue_degree_sum).sum();
            let cut = g.edge_count() as u64 - within;
            assert_eq!(within + cut, g.edge_count() as u64);
            assert_eq!(red, g.edge_count() as u64);
            assert_eq!(blue, g.edge_count() as u64);
        }
    }

    #[test]
    fn moved_and_merged_divisions() {
        let d = Division::new(vec![0, 0, 1]);
        let moved = d.with_vertex_moved(VertexId(0), 1).unwrap();
        assert_eq!(moved.assignment(), &[0, 1, 0]);
        let fresh = d.with_vertex_moved(VertexId(1), 2).unwrap();
        assert_eq!(fresh.assignment(), &[0, 1, 2]);
        let merged = d.with_merged(0, 1).unwrap();
        assert_eq!(merged.assignment(), &[0, 0, 0]);
        assert!(d.with_merged(0, 9).is_err());
    }

    #[test]
    fn structural_equality_ignores_interleaving() {
        // Same structure, different global layouts.
        let a = BipartiteGraph::new(
            vec![VertexId(0), VertexId(2)],
            vec![VertexId(1)],
            vec![(VertexId(0), VertexId(1)), (VertexId(2), VertexId(1))],
        )
        .unwrap();
        let b = BipartiteGraph::new(
            vec![VertexId(0), VertexId(1)],
            vec![VertexId(2)],
            vec![(VertexId(0), VertexId(2)), (VertexId(1), VertexId(2))],
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
