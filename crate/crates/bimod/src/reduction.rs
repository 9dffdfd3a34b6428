//! From number partitioning to bipartite modularity: instance validation,
//! gadget generation, the exact decision threshold, and a structured search
//! over canonical divisions.
//!
//! A 3-PARTITION instance is a multiset of 3k integers strictly between b/4
//! and b/2 whose total is k*b; the question is whether it splits into k
//! triples of sum b. The gadget maps such an instance to a bipartite graph
//! built from k complete bipartite blocks ("bicliques") of a red and a blue
//! vertices each, one red/blue element-vertex pair per integer, and one
//! degree-anchoring star per element vertex. The instance is a yes-instance
//! exactly when some division of the gadget reaches the threshold `K(A)`
//! computed here, and over the canonical divisions that equivalence is
//! decidable by direct enumeration.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::graph::{BipartiteGraph, Color, Division, VertexId};
use crate::modularity::Rational;
use crate::solvers::{brute_force_max, SolverError};

/// Largest graph accepted by [`decide_bimodularity`]; Bell(10) partitions
/// are still enumerable in well under a second.
pub const DECISION_VERTEX_LIMIT: usize = 10;

/// Largest k for which [`structured_search`] enumerates all k^(3k)
/// assignments (3^9 = 19683).
pub const SEARCH_K_LIMIT: usize = 3;

/// Guard against instances whose gadget arithmetic would not fit in the
/// checked 128-bit evaluators.
const MAX_TOTAL: u64 = 1_000_000_000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("expected {expected} elements (3k), found {found}")]
    WrongElementCount { expected: usize, found: usize },
    #[error("element sum {sum} is not divisible by k = {k}")]
    SumNotDivisible { sum: u64, k: usize },
    #[error("element a_{index} = {value} lies outside the open window (b/4, b/2) with b = {b}")]
    ElementOutOfWindow { index: usize, value: u64, b: u64 },
    #[error("element sum {sum} exceeds the supported limit {limit}")]
    SumTooLarge { sum: u128, limit: u64 },
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("instance is not normalized: 7 does not divide a = {a} (apply normalize first)")]
    NotNormalized { a: u64 },
    #[error("assignment has {found} entries, expected {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("assignment entry {index} names biclique {value}, but k = {k}")]
    AssignmentOutOfRange { index: usize, value: usize, k: usize },
    #[error("k = {k} exceeds the structured search limit of {limit}")]
    SearchSpaceTooLarge { k: usize, limit: usize },
    #[error("arithmetic overflow while evaluating the closed form")]
    Overflow,
}

/// The multiset A = {a_1, ..., a_3k} with its derived quantities
/// a = sum(A) and b = a/k. Validated on construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ThreePartitionInstance {
    k: usize,
    elements: Vec<u64>,
}

impl ThreePartitionInstance {
    /// Validate divisibility, the strict window b/4 < a_i < b/2, and the
    /// element count.
    pub fn new(k: usize, elements: Vec<u64>) -> Result<Self, InstanceError> {
        if k == 0 {
            return Err(InstanceError::ZeroK);
        }
        if elements.len() != 3 * k {
            return Err(InstanceError::WrongElementCount {
                expected: 3 * k,
                found: elements.len(),
            });
        }
        let sum: u128 = elements.iter().map(|&a| u128::from(a)).sum();
        if sum > u128::from(MAX_TOTAL) {
            return Err(InstanceError::SumTooLarge { sum, limit: MAX_TOTAL });
        }
        let sum = sum as u64;
        if !sum.is_multiple_of(k as u64) {
            return Err(InstanceError::SumNotDivisible { sum, k });
        }
        let b = sum / (k as u64);
        for (index, &value) in elements.iter().enumerate() {
            // Strict bounds: 4*a_i > b and 2*a_i < b.
            if 4 * value <= b || 2 * value >= b {
                return Err(InstanceError::ElementOutOfWindow { index, value, b });
            }
        }
        Ok(ThreePartitionInstance { k, elements })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> u64 {
        self.elements[i]
    }

    /// a = sum of all elements.
    pub fn total(&self) -> u64 {
        self.elements.iter().sum()
    }

    /// b = a/k, the required triple sum.
    pub fn target_sum(&self) -> u64 {
        self.total() / self.k as u64
    }

    /// The star construction needs a^2 divisible by 7, i.e. 7 | a.
    pub fn is_normalized(&self) -> bool {
        self.total().is_multiple_of(7)
    }

    /// Multiply every element by 7 unless 7 already divides a. Scaling
    /// preserves divisibility, the window constraints, and partitionability,
    /// so the returned instance decides the same question. Idempotent.
    pub fn normalize(&self) -> ThreePartitionInstance {
        if self.is_normalized() {
            return self.clone();
        }
        ThreePartitionInstance {
            k: self.k,
            elements: self.elements.iter().map(|&a| 7 * a).collect(),
        }
    }

    fn require_normalized(&self) -> Result<(), ReductionError> {
        if !self.is_normalized() {
            return Err(ReductionError::NotNormalized { a: self.total() });
        }
        Ok(())
    }

    /// Number of leaves per star, a^2/7.
    pub fn star_leaves(&self) -> Result<u64, ReductionError> {
        self.require_normalized()?;
        let a = u128::from(self.total());
        Ok((a * a / 7) as u64)
    }

    /// Gadget order: n = (6/7)ka^2 + 2ka + 12k.
    pub fn vertex_count(&self) -> Result<u64, ReductionError> {
        self.require_normalized()?;
        let a = u128::from(self.total());
        let k = self.k as u128;
        Ok((6 * k * a * a / 7 + 2 * k * a + 12 * k) as u64)
    }

    /// Gadget size: m = (13/7)ka^2 + 2ka + 9k.
    pub fn edge_count(&self) -> Result<u64, ReductionError> {
        self.require_normalized()?;
        let a = u128::from(self.total());
        let k = self.k as u128;
        Ok((13 * k * a * a / 7 + 2 * k * a + 9 * k) as u64)
    }

    /// Edges crossing between communities in every canonical division:
    /// 2a(k-1) + 6k, independent of the assignment.
    pub fn cut_edge_count(&self) -> u64 {
        let a = self.total();
        let k = self.k as u64;
        2 * a * (k - 1) + 6 * k
    }

    /// Edges inside communities in every canonical division.
    pub fn intra_edge_count(&self) -> Result<u64, ReductionError> {
        Ok(self.edge_count()? - self.cut_edge_count())
    }

    /// The decision threshold
    /// K(A) = 1 - (2a(k-1)+6k)/m - (k(a^2+2a+6)^2 + (6/7)ka^2((1/7)a^2+1))/m^2,
    /// i.e. the bipartite modularity every canonical division of a
    /// yes-instance attains and no division of a no-instance reaches
    /// (over canonical divisions).
    pub fn threshold(&self) -> Result<Rational, ReductionError> {
        self.require_normalized()?;
        let a = BigInt::from(self.total());
        let k = BigInt::from(self.k);
        let m = BigInt::from(self.edge_count()?);
        let m_intra = BigInt::from(self.intra_edge_count()?);
        let leaves = BigInt::from(self.star_leaves()?);
        let biclique_degree_sum = &a * &a + 2u32 * &a + 6u32;
        let numerator = &m_intra * &m
            - &k * &biclique_degree_sum * &biclique_degree_sum
            - 6u32 * &k * &leaves * (&leaves + 1u32);
        Ok(Rational::new(numerator, &m * &m))
    }
}

/// Which element a star hangs off: X_i stars serve the red element x_i (one
/// blue internal vertex, red leaves); Y_i stars mirror that for y_i.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StarFamily {
    X,
    Y,
}

impl StarFamily {
    pub fn internal_color(self) -> Color {
        match self {
            StarFamily::X => Color::Blue,
            StarFamily::Y => Color::Red,
        }
    }

    pub fn leaf_color(self) -> Color {
        self.internal_color().opposite()
    }
}

impl fmt::Display for StarFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StarFamily::X => write!(f, "X"),
            StarFamily::Y => write!(f, "Y"),
        }
    }
}

/// Structural role of a gadget vertex. Indices are 0-based here; the
/// human-readable labels are 1-based to match the usual drawing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Role {
    Biclique { t: usize, color: Color, j: usize },
    Element { i: usize, color: Color },
    StarInternal { family: StarFamily, i: usize },
    StarLeaf { family: StarFamily, i: usize, j: usize },
}

impl Role {
    pub fn label(&self) -> String {
        match *self {
            Role::Biclique { t, color: Color::Red, j } => format!("K{}.r{}", t + 1, j + 1),
            Role::Biclique { t, color: Color::Blue, j } => format!("K{}.b{}", t + 1, j + 1),
            Role::Element { i, color: Color::Red } => format!("x{}", i + 1),
            Role::Element { i, color: Color::Blue } => format!("y{}", i + 1),
            Role::StarInternal { family, i } => format!("{}{}.int", family, i + 1),
            Role::StarLeaf { family, i, j } => format!("{}{}.leaf{}", family, i + 1, j + 1),
        }
    }

    /// Inverse of [`Role::label`].
    pub fn parse(s: &str) -> Option<Role> {
        // Leading 1-based index, converted to 0-based, plus the remainder.
        fn leading_index(s: &str) -> Option<(usize, &str)> {
            let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
            let idx: usize = s.get(..end)?.parse().ok()?;
            if idx == 0 {
                return None;
            }
            Some((idx - 1, &s[end..]))
        }
        match s.chars().next()? {
            'K' => {
                let (t, rest) = leading_index(s.strip_prefix('K')?)?;
                let rest = rest.strip_prefix('.')?;
                let color = match rest.chars().next()? {
                    'r' => Color::Red,
                    'b' => Color::Blue,
                    _ => return None,
                };
                let (j, rest) = leading_index(&rest[1..])?;
                rest.is_empty().then_some(Role::Biclique { t, color, j })
            }
            'x' => {
                let (i, rest) = leading_index(s.strip_prefix('x')?)?;
                rest.is_empty().then_some(Role::Element { i, color: Color::Red })
            }
            'y' => {
                let (i, rest) = leading_index(s.strip_prefix('y')?)?;
                rest.is_empty().then_some(Role::Element { i, color: Color::Blue })
            }
            c @ ('X' | 'Y') => {
                let family = if c == 'X' { StarFamily::X } else { StarFamily::Y };
                let (i, rest) = leading_index(&s[1..])?;
                if rest == ".int" {
                    return Some(Role::StarInternal { family, i });
                }
                let (j, rest) = leading_index(rest.strip_prefix(".leaf")?)?;
                rest.is_empty().then_some(Role::StarLeaf { family, i, j })
            }
            _ => None,
        }
    }
}

/// Fixed vertex id layout of a gadget: bicliques first (per block: the a red
/// vertices then the a blue ones), then element vertices x_1..x_3k and
/// y_1..y_3k, then the X stars (internal vertex followed by its leaves) and
/// the Y stars. Roles are decodable from the id alone.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GadgetLayout {
    pub k: usize,
    pub a: usize,
    pub leaves: usize,
}

impl GadgetLayout {
    pub fn of(inst: &ThreePartitionInstance) -> Result<GadgetLayout, ReductionError> {
        Ok(GadgetLayout {
            k: inst.k(),
            a: inst.total() as usize,
            leaves: inst.star_leaves()? as usize,
        })
    }

    pub fn triples(&self) -> usize {
        3 * self.k
    }

    pub fn biclique_red(&self, t: usize, j: usize) -> VertexId {
        VertexId(t * 2 * self.a + j)
    }

    pub fn biclique_blue(&self, t: usize, j: usize) -> VertexId {
        VertexId(t * 2 * self.a + self.a + j)
    }

    fn elements_base(&self) -> usize {
        2 * self.k * self.a
    }

    pub fn element_x(&self, i: usize) -> VertexId {
        VertexId(self.elements_base() + i)
    }

    pub fn element_y(&self, i: usize) -> VertexId {
        VertexId(self.elements_base() + self.triples() + i)
    }

    fn stars_base(&self) -> usize {
        self.elements_base() + 2 * self.triples()
    }

    fn star_base(&self, family: StarFamily, i: usize) -> usize {
        let family_offset = match family {
            StarFamily::X => 0,
            StarFamily::Y => self.triples() * (self.leaves + 1),
        };
        self.stars_base() + family_offset + i * (self.leaves + 1)
    }

    pub fn star_internal(&self, family: StarFamily, i: usize) -> VertexId {
        VertexId(self.star_base(family, i))
    }

    pub fn star_leaf(&self, family: StarFamily, i: usize, j: usize) -> VertexId {
        VertexId(self.star_base(family, i) + 1 + j)
    }

    pub fn vertex_count(&self) -> usize {
        self.stars_base() + 2 * self.triples() * (self.leaves + 1)
    }

    pub fn role_of(&self, v: VertexId) -> Role {
        let id = v.index();
        let bicliques_end = self.elements_base();
        if id < bicliques_end {
            let t = id / (2 * self.a);
            let off = id % (2 * self.a);
            if off < self.a {
                Role::Biclique { t, color: Color::Red, j: off }
            } else {
                Role::Biclique { t, color: Color::Blue, j: off - self.a }
            }
        } else if id < bicliques_end + self.triples() {
            Role::Element { i: id - bicliques_end, color: Color::Red }
        } else if id < self.stars_base() {
            Role::Element {
                i: id - bicliques_end - self.triples(),
                color: Color::Blue,
            }
        } else {
            let off = id - self.stars_base();
            let span = self.triples() * (self.leaves + 1);
            let (family, off) = if off < span {
                (StarFamily::X, off)
            } else {
                (StarFamily::Y, off - span)
            };
            let i = off / (self.leaves + 1);
            let j = off % (self.leaves + 1);
            if j == 0 {
                Role::StarInternal { family, i }
            } else {
                Role::StarLeaf { family, i, j: j - 1 }
            }
        }
    }
}

/// A generated gadget: the bipartite graph plus the role of every vertex and
/// the instance it was built from.
#[derive(Clone, Debug)]
pub struct GadgetGraph {
    graph: BipartiteGraph,
    roles: Vec<Role>,
    instance: ThreePartitionInstance,
    pub(crate) layout: GadgetLayout,
}

impl GadgetGraph {
    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn instance(&self) -> &ThreePartitionInstance {
        &self.instance
    }

    pub fn role(&self, v: VertexId) -> Role {
        self.roles[v.index()]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn element_x(&self, i: usize) -> VertexId {
        self.layout.element_x(i)
    }

    pub fn element_y(&self, i: usize) -> VertexId {
        self.layout.element_y(i)
    }

    pub fn star_internal(&self, family: StarFamily, i: usize) -> VertexId {
        self.layout.star_internal(family, i)
    }

    /// All vertices of biclique t, reds first.
    pub fn biclique_vertices(&self, t: usize) -> impl Iterator<Item = VertexId> + '_ {
        let a = self.layout.a;
        (0..2 * a).map(move |off| VertexId(t * 2 * a + off))
    }

    /// Internal vertex plus leaves of one star.
    pub fn star_vertices(&self, family: StarFamily, i: usize) -> impl Iterator<Item = VertexId> {
        let base = self.layout.star_internal(family, i).index();
        let size = self.layout.leaves + 1;
        (base..base + size).map(VertexId)
    }
}

/// Generate the gadget for a valid normalized instance.
///
/// Biclique-to-element attachment is deterministic: within each biclique the
/// a blue vertices are consumed in index order by x_1, x_2, ... so that each
/// blue biclique vertex meets exactly one red element vertex, and
/// symmetrically for the red side and y_i.
pub fn build_gadget(inst: &ThreePartitionInstance) -> Result<GadgetGraph, ReductionError> {
    inst.require_normalized()?;
    let layout = GadgetLayout::of(inst)?;
    let n = layout.vertex_count();
    debug_assert_eq!(n as u64, inst.vertex_count()?);

    let mut colors = Vec::with_capacity(n);
    let mut roles = Vec::with_capacity(n);
    for id in 0..n {
        let role = layout.role_of(VertexId(id));
        colors.push(match role {
            Role::Biclique { color, .. } | Role::Element { color, .. } => color,
            Role::StarInternal { family, .. } => family.internal_color(),
            Role::StarLeaf { family, .. } => family.leaf_color(),
        });
        roles.push(role);
    }

    let mut edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(inst.edge_count()? as usize);
    let a = layout.a;
    let k = layout.k;

    // Step 1: complete bipartite blocks.
    for t in 0..k {
        for r in 0..a {
            for b in 0..a {
                edges.push((layout.biclique_red(t, r), layout.biclique_blue(t, b)));
            }
        }
    }
    // Step 3: each x_i takes a_i blue vertices in every biclique, in index
    // order; same for y_i on the red side.
    for t in 0..k {
        let mut offset = 0usize;
        for i in 0..layout.triples() {
            let quota = inst.element(i) as usize;
            for j in offset..offset + quota {
                edges.push((layout.element_x(i), layout.biclique_blue(t, j)));
                edges.push((layout.element_y(i), layout.biclique_red(t, j)));
            }
            offset += quota;
        }
        debug_assert_eq!(offset, a);
    }
    // Step 4: pair edges.
    for i in 0..layout.triples() {
        edges.push((layout.element_x(i), layout.element_y(i)));
    }
    // Steps 5 and 6: stars and their anchor edges.
    for family in [StarFamily::X, StarFamily::Y] {
        for i in 0..layout.triples() {
            let internal = layout.star_internal(family, i);
            for j in 0..layout.leaves {
                edges.push((internal, layout.star_leaf(family, i, j)));
            }
            let element = match family {
                StarFamily::X => layout.element_x(i),
                StarFamily::Y => layout.element_y(i),
            };
            edges.push((element, internal));
        }
    }

    debug_assert_eq!(edges.len() as u64, inst.edge_count()?);
    let graph = BipartiteGraph::from_colors(colors, &edges)
        .expect("gadget construction yields a valid bipartite graph");
    Ok(GadgetGraph {
        graph,
        roles,
        instance: inst.clone(),
        layout,
    })
}

/// A total mapping from element indices to biclique indices (0-based).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TripleAssignment {
    mapping: Vec<usize>,
}

impl TripleAssignment {
    pub fn new(inst: &ThreePartitionInstance, mapping: Vec<usize>) -> Result<Self, ReductionError> {
        if mapping.len() != 3 * inst.k() {
            return Err(ReductionError::AssignmentLength {
                expected: 3 * inst.k(),
                found: mapping.len(),
            });
        }
        for (index, &value) in mapping.iter().enumerate() {
            if value >= inst.k() {
                return Err(ReductionError::AssignmentOutOfRange {
                    index,
                    value,
                    k: inst.k(),
                });
            }
        }
        Ok(TripleAssignment { mapping })
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn biclique_of(&self, i: usize) -> usize {
        self.mapping[i]
    }

    /// True iff every biclique receives exactly three elements summing to b.
    pub fn is_balanced(&self, inst: &ThreePartitionInstance) -> bool {
        let mut counts = vec![0usize; inst.k()];
        let mut sums = vec![0u64; inst.k()];
        for (i, &t) in self.mapping.iter().enumerate() {
            counts[t] += 1;
            sums[t] += inst.element(i);
        }
        let b = inst.target_sum();
        counts.iter().all(|&c| c == 3) && sums.iter().all(|&s| s == b)
    }
}

/// The division {C_1, ..., C_k, X_1, ..., X_3k, Y_1, ..., Y_3k}: biclique t
/// together with its assigned element pairs forms C_t, and every star is its
/// own community. Always exactly 7k communities; the assignment need not be
/// balanced.
pub fn canonical_division(
    inst: &ThreePartitionInstance,
    assignment: &TripleAssignment,
) -> Result<Division, ReductionError> {
    inst.require_normalized()?;
    if assignment.mapping.len() != 3 * inst.k() {
        return Err(ReductionError::AssignmentLength {
            expected: 3 * inst.k(),
            found: assignment.mapping.len(),
        });
    }
    let layout = GadgetLayout::of(inst)?;
    let n = layout.vertex_count();
    let labels = (0..n)
        .map(|id| match layout.role_of(VertexId(id)) {
            Role::Biclique { t, .. } => t,
            Role::Element { i, .. } => assignment.biclique_of(i),
            Role::StarInternal { family, i } | Role::StarLeaf { family, i, .. } => {
                let family_offset = match family {
                    StarFamily::X => 0,
                    StarFamily::Y => layout.triples(),
                };
                layout.k + family_offset + i
            }
        })
        .collect();
    Ok(Division::new(labels))
}

fn checked_mul(a: i128, b: i128) -> Result<i128, ReductionError> {
    a.checked_mul(b).ok_or(ReductionError::Overflow)
}

/// Q_b of the canonical division for `assignment`, times m^2, via the closed
/// form: m_intra*m - sum_t R_t^2 - 6k*L*(L+1), where
/// R_t = a(a+1) + sum over elements assigned to t of (k*a_i + 2) and
/// L = a^2/7. No gadget is materialized.
fn assignment_value_scaled(
    inst: &ThreePartitionInstance,
    mapping: &[usize],
) -> Result<i128, ReductionError> {
    let a = i128::from(inst.total());
    let k = i128::from(inst.k() as u64);
    let m = i128::from(inst.edge_count()?);
    let leaves = i128::from(inst.star_leaves()?);

    let mut red_sums = vec![checked_mul(a, a + 1)?; inst.k()];
    for (i, &t) in mapping.iter().enumerate() {
        red_sums[t] += k * i128::from(inst.element(i)) + 2;
    }
    let mut total = checked_mul(i128::from(inst.intra_edge_count()?), m)?;
    for r in red_sums {
        total -= checked_mul(r, r)?;
    }
    total -= checked_mul(6 * k * leaves, leaves + 1)?;
    Ok(total)
}

fn scaled_value_to_rational(inst: &ThreePartitionInstance, scaled: i128) -> Result<Rational, ReductionError> {
    let m = BigInt::from(inst.edge_count()?);
    Ok(Rational::new(BigInt::from(scaled), &m * &m))
}

/// Q_b of the canonical division for one assignment, by the closed form.
pub fn assignment_value(
    inst: &ThreePartitionInstance,
    assignment: &TripleAssignment,
) -> Result<Rational, ReductionError> {
    inst.require_normalized()?;
    if assignment.mapping.len() != 3 * inst.k() {
        return Err(ReductionError::AssignmentLength {
            expected: 3 * inst.k(),
            found: assignment.mapping.len(),
        });
    }
    let scaled = assignment_value_scaled(inst, &assignment.mapping)?;
    scaled_value_to_rational(inst, scaled)
}

/// Result of the structured search over canonical divisions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SearchOutcome {
    /// Lexicographically smallest maximizing assignment.
    pub best: TripleAssignment,
    /// Q_b of the best canonical division, exact.
    pub value: Rational,
    /// True iff `value` equals the threshold K(A), which holds iff the
    /// instance is a yes-instance of 3-PARTITION.
    pub decision: bool,
    /// Number of assignments evaluated, k^(3k).
    pub evaluated: u64,
}

/// Maximize Q_b over all canonical divisions by enumerating every
/// element-to-biclique assignment with the closed-form evaluator.
pub fn structured_search(inst: &ThreePartitionInstance) -> Result<SearchOutcome, ReductionError> {
    inst.require_normalized()?;
    if inst.k() > SEARCH_K_LIMIT {
        return Err(ReductionError::SearchSpaceTooLarge {
            k: inst.k(),
            limit: SEARCH_K_LIMIT,
        });
    }
    let slots = 3 * inst.k();
    let k = inst.k();
    let mut mapping = vec![0usize; slots];
    let mut best_scaled = i128::MIN;
    let mut best_mapping = mapping.clone();
    let mut evaluated = 0u64;
    loop {
        evaluated += 1;
        let scaled = assignment_value_scaled(inst, &mapping)?;
        if scaled > best_scaled {
            best_scaled = scaled;
            best_mapping = mapping.clone();
        }
        // Advance the odometer; the leftmost slot is the most significant
        // digit, so assignments appear in lexicographic order.
        let mut pos = slots;
        let mut exhausted = false;
        loop {
            if pos == 0 {
                exhausted = true;
                break;
            }
            pos -= 1;
            mapping[pos] += 1;
            if mapping[pos] < k {
                break;
            }
            mapping[pos] = 0;
        }
        if exhausted {
            break;
        }
    }

    let threshold = inst.threshold()?;
    let value = scaled_value_to_rational(inst, best_scaled)?;
    let decision = value == threshold;
    let best = TripleAssignment::new(inst, best_mapping)?;
    debug_assert_eq!(decision, best.is_balanced(inst));
    Ok(SearchOutcome {
        best,
        value,
        decision,
        evaluated,
    })
}

/// Exhaustive decision for tiny graphs: does any division reach `threshold`?
pub fn decide_bimodularity(g: &BipartiteGraph, threshold: &Rational) -> Result<bool, SolverError> {
    if g.vertex_count() > DECISION_VERTEX_LIMIT {
        return Err(SolverError::GraphTooLarge {
            vertices: g.vertex_count(),
            limit: DECISION_VERTEX_LIMIT,
        });
    }
    let best = brute_force_max(g)?;
    Ok(best.value >= *threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modularity::bipartite_modularity;

    fn fig1() -> ThreePartitionInstance {
        ThreePartitionInstance::new(2, vec![2, 2, 2, 2, 3, 3]).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(fig1().is_normalized());
        assert_eq!(fig1().target_sum(), 7);

        let err = ThreePartitionInstance::new(1, vec![1, 2, 2]).unwrap_err();
        assert_eq!(
            err,
            InstanceError::ElementOutOfWindow { index: 0, value: 1, b: 5 }
        );

        let ok = ThreePartitionInstance::new(2, vec![3, 3, 3, 3, 3, 3]).unwrap();
        assert_eq!(ok.target_sum(), 9);

        assert!(matches!(
            ThreePartitionInstance::new(2, vec![2, 2, 2, 2, 3]).unwrap_err(),
            InstanceError::WrongElementCount { expected: 6, found: 5 }
        ));
        assert!(matches!(
            ThreePartitionInstance::new(2, vec![2, 2, 3, 2, 3, 3]).unwrap_err(),
            InstanceError::SumNotDivisible { sum: 15, k: 2 }
        ));
    }

    #[test]
    fn normalization() {
        assert_eq!(fig1().normalize(), fig1());
        let inst = ThreePartitionInstance::new(1, vec![3, 3, 4]).unwrap();
        let norm = inst.normalize();
        assert_eq!(norm.elements(), &[21, 21, 28]);
        assert_eq!(norm.total(), 70);
        assert!(norm.is_normalized());
        assert_eq!(norm.normalize(), norm);
    }

    #[test]
    fn count_formulas() {
        assert_eq!(fig1().vertex_count().unwrap(), 416);
        assert_eq!(fig1().edge_count().unwrap(), 802);
        let inst = ThreePartitionInstance::new(1, vec![2, 3, 2]).unwrap();
        assert_eq!(inst.vertex_count().unwrap(), 68);
        assert_eq!(inst.edge_count().unwrap(), 114);
        let raw = ThreePartitionInstance::new(1, vec![3, 3, 4]).unwrap();
        assert!(raw.vertex_count().is_err());
    }

    #[test]
    fn gadget_matches_counts_and_degrees() {
        let gadget = build_gadget(&fig1()).unwrap();
        let g = gadget.graph();
        assert_eq!(g.vertex_count() as u64, fig1().vertex_count().unwrap());
        assert_eq!(g.edge_count() as u64, fig1().edge_count().unwrap());
        let a = fig1().total();
        let k = fig1().k() as u64;
        let leaves = fig1().star_leaves().unwrap();
        for v in g.vertices() {
            let deg = g.degree(v).unwrap() as u64;
            let expected = match gadget.role(v) {
                Role::Biclique { .. } => a + 1,
                Role::Element { i, .. } => k * fig1().element(i) + 2,
                Role::StarInternal { .. } => leaves + 1,
                Role::StarLeaf { .. } => 1,
            };
            assert_eq!(deg, expected, "role {:?}", gadget.role(v));
        }
        // Spot checks from the construction: a+1 = 15, k*a_5+2 = 8, L+1 = 29.
        assert_eq!(a + 1, 15);
        assert_eq!(g.degree(gadget.element_x(4)).unwrap(), 8);
        assert_eq!(leaves + 1, 29);
    }

    #[test]
    fn roles_round_trip_through_labels() {
        let gadget = build_gadget(&fig1()).unwrap();
        for v in gadget.graph().vertices() {
            let role = gadget.role(v);
            assert_eq!(Role::parse(&role.label()), Some(role), "{}", role.label());
        }
        assert_eq!(Role::parse("K1.r3").unwrap().label(), "K1.r3");
        assert_eq!(Role::parse("notarole"), None);
        assert_eq!(Role::parse("x0"), None);
    }

    #[test]
    fn threshold_values() {
        let k_fig1 = fig1().threshold().unwrap();
        assert_eq!(
            k_fig1,
            Rational::new(BigInt::from(123895), BigInt::from(160801))
        );
        let inst = ThreePartitionInstance::new(1, vec![2, 3, 2]).unwrap();
        assert_eq!(
            inst.threshold().unwrap(),
            Rational::new(BigInt::from(2405), BigInt::from(4332))
        );
    }

    #[test]
    fn canonical_division_shape_and_value() {
        let inst = fig1();
        let gadget = build_gadget(&inst).unwrap();
        // Elements {1,2,5} -> K_1 and {3,4,6} -> K_2, in 1-based terms.
        let balanced = TripleAssignment::new(&inst, vec![0, 0, 1, 1, 0, 1]).unwrap();
        assert!(balanced.is_balanced(&inst));
        let d = canonical_division(&inst, &balanced).unwrap();
        assert_eq!(d.community_count(), 7 * inst.k());
        let q = bipartite_modularity(gadget.graph(), &d).unwrap();
        assert_eq!(q, inst.threshold().unwrap());

        // Unbalanced: sums 6 and 8 miss the threshold by 8/m^2 exactly
        // (red degree sums 228 and 232 against the balanced 230).
        let unbalanced = TripleAssignment::new(&inst, vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!(!unbalanced.is_balanced(&inst));
        let d = canonical_division(&inst, &unbalanced).unwrap();
        let q = bipartite_modularity(gadget.graph(), &d).unwrap();
        let m = BigInt::from(inst.edge_count().unwrap());
        let deficit = Rational::new(BigInt::from(8), &m * &m);
        assert_eq!(q, inst.threshold().unwrap() - deficit);
        assert!(q < inst.threshold().unwrap());
    }

    #[test]
    fn closed_form_agrees_with_full_evaluation_everywhere() {
        let inst = fig1();
        let gadget = build_gadget(&inst).unwrap();
        // All 64 assignments at Fig-1 scale.
        for bits in 0..64u32 {
            let mapping: Vec<usize> = (0..6).map(|i| ((bits >> i) & 1) as usize).collect();
            let assignment = TripleAssignment::new(&inst, mapping).unwrap();
            let closed = assignment_value(&inst, &assignment).unwrap();
            let d = canonical_division(&inst, &assignment).unwrap();
            let full = bipartite_modularity(gadget.graph(), &d).unwrap();
            assert_eq!(closed, full, "assignment {:?}", assignment.mapping());
        }
    }

    #[test]
    fn structured_search_decides_fig1_yes() {
        let outcome = structured_search(&fig1()).unwrap();
        assert!(outcome.decision);
        assert_eq!(outcome.value, fig1().threshold().unwrap());
        assert_eq!(outcome.evaluated, 64);
        assert!(outcome.best.is_balanced(&fig1()));
    }

    #[test]
    fn structured_search_decides_no_instance() {
        // No triple containing the 7 can sum to b = 16, so after
        // normalization this stays a no-instance.
        let raw = ThreePartitionInstance::new(2, vec![5, 5, 5, 5, 5, 7]).unwrap();
        let inst = raw.normalize();
        assert_eq!(inst.total(), 224);
        let outcome = structured_search(&inst).unwrap();
        assert!(!outcome.decision);
        assert!(outcome.value < inst.threshold().unwrap());
    }

    #[test]
    fn structured_search_small_yes_instances() {
        let inst = ThreePartitionInstance::new(2, vec![3, 3, 3, 3, 3, 3]).unwrap().normalize();
        let outcome = structured_search(&inst).unwrap();
        assert!(outcome.decision);

        let inst = ThreePartitionInstance::new(1, vec![2, 3, 2]).unwrap();
        let outcome = structured_search(&inst).unwrap();
        assert!(outcome.decision);
        assert_eq!(outcome.evaluated, 1);
    }

    #[test]
    fn decide_bimodularity_on_tiny_graphs() {
        let g = BipartiteGraph::new(
            vec![VertexId(0), VertexId(2)],
            vec![VertexId(1), VertexId(3)],
            vec![(VertexId(0), VertexId(1)), (VertexId(2), VertexId(3))],
        )
        .unwrap();
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        assert!(decide_bimodularity(&g, &half).unwrap());
        let above = Rational::new(BigInt::from(501), BigInt::from(1000));
        assert!(!decide_bimodularity(&g, &above).unwrap());
        assert!(decide_bimodularity(&g, &Rational::new(BigInt::from(0), BigInt::from(1))).unwrap());
    }
}
