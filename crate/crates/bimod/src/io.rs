//! Text formats: graph edge lists, JSON divisions, JSON instances and
//! assignments, and one-way DOT export for gadgets.
//!
//! Renderers are byte-stable (fixed ordering everywhere) and `parse(render)`
//! is the identity on the value. Graph files index vertices per color
//! (`r3`, `b7`); a parsed graph therefore lays out its global ids reds
//! first, and division files refer to vertices by label, so they transfer
//! between layouts.
//!
//! ```text
//! bipartite <n_red> <n_blue> <m>
//! # role r0 K1.r1        (optional; all vertices or none)
//! r0 b0
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{BipartiteGraph, Color, Division, VertexId};
use crate::reduction::{GadgetGraph, Role, StarFamily, ThreePartitionInstance, TripleAssignment};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: Some(line), message: message.into() }
    }

    fn anywhere(message: impl Into<String>) -> ParseError {
        ParseError { line: None, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {}: {}", line, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Per-color positional label: `r3` for the fourth red vertex in id order.
fn positional_label(g: &BipartiteGraph, v: VertexId) -> String {
    match g.color(v) {
        Color::Red => format!("r{}", g.color_ordinal(v)),
        Color::Blue => format!("b{}", g.color_ordinal(v)),
    }
}

/// Render a graph, with one `# role` line per vertex when roles are given.
pub fn render_graph(g: &BipartiteGraph, roles: Option<&[Role]>) -> String {
    let mut out = format!(
        "bipartite {} {} {}\n",
        g.red_count(),
        g.blue_count(),
        g.edge_count()
    );
    if let Some(roles) = roles {
        // Reds then blues, by per-color position: the same graph renders to
        // the same bytes regardless of its global id layout.
        for v in g.red_vertices().iter().chain(g.blue_vertices()) {
            out.push_str(&format!(
                "# role {} {}\n",
                positional_label(g, *v),
                roles[v.index()].label()
            ));
        }
    }
    for &(r, b) in g.edges() {
        out.push_str(&format!(
            "r{} b{}\n",
            g.color_ordinal(r),
            g.color_ordinal(b)
        ));
    }
    out
}

fn parse_positional(token: &str, line: usize) -> Result<(Color, usize), ParseError> {
    let (color, digits) = match token.split_at(1.min(token.len())) {
        ("r", rest) => (Color::Red, rest),
        ("b", rest) => (Color::Blue, rest),
        _ => {
            return Err(ParseError::at(
                line,
                format!("expected r<idx> or b<idx>, found {token:?}"),
            ))
        }
    };
    let idx: usize = digits
        .parse()
        .map_err(|_| ParseError::at(line, format!("bad vertex index in {token:?}")))?;
    Ok((color, idx))
}

/// Parse a graph file. Role lines must either cover every vertex or be
/// absent entirely. The parsed graph numbers red vertices 0..n_red and blue
/// vertices after them.
pub fn parse_graph(text: &str) -> Result<(BipartiteGraph, Option<Vec<Role>>), ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::anywhere("empty graph file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "bipartite" {
        return Err(ParseError::at(1, "expected header: bipartite <n_red> <n_blue> <m>"));
    }
    let parse_count = |s: &str, what: &str| -> Result<usize, ParseError> {
        s.parse()
            .map_err(|_| ParseError::at(1, format!("bad {what} count {s:?}")))
    };
    let n_red = parse_count(fields[1], "red vertex")?;
    let n_blue = parse_count(fields[2], "blue vertex")?;
    let m = parse_count(fields[3], "edge")?;
    let n = n_red + n_blue;

    let to_vertex = |color: Color, idx: usize, line: usize| -> Result<VertexId, ParseError> {
        match color {
            Color::Red if idx < n_red => Ok(VertexId(idx)),
            Color::Blue if idx < n_blue => Ok(VertexId(n_red + idx)),
            Color::Red => Err(ParseError::at(
                line,
                format!("red index {idx} out of range (n_red = {n_red})"),
            )),
            Color::Blue => Err(ParseError::at(
                line,
                format!("blue index {idx} out of range (n_blue = {n_blue})"),
            )),
        }
    };

    let mut roles: Vec<Option<Role>> = vec![None; n];
    let mut role_lines = 0usize;
    let mut edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(m);
    let mut seen = HashMap::new();
    for (line, raw) in lines {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("# role ") {
            let mut parts = rest.split_whitespace();
            let (vertex_token, role_token) = match (parts.next(), parts.next(), parts.next()) {
                (Some(v), Some(r), None) => (v, r),
                _ => return Err(ParseError::at(line, "expected: # role <vertex> <role>")),
            };
            let (color, idx) = parse_positional(vertex_token, line)?;
            let v = to_vertex(color, idx, line)?;
            let role = Role::parse(role_token)
                .ok_or_else(|| ParseError::at(line, format!("bad role {role_token:?}")))?;
            if roles[v.index()].replace(role).is_some() {
                return Err(ParseError::at(line, format!("duplicate role for {vertex_token}")));
            }
            role_lines += 1;
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (red_token, blue_token) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(ParseError::at(line, "expected edge line: r<idx> b<idx>")),
        };
        let (rc, ri) = parse_positional(red_token, line)?;
        let (bc, bi) = parse_positional(blue_token, line)?;
        if rc != Color::Red || bc != Color::Blue {
            return Err(ParseError::at(line, "edge lines must read r<idx> b<idx>"));
        }
        let r = to_vertex(Color::Red, ri, line)?;
        let b = to_vertex(Color::Blue, bi, line)?;
        if let Some(first) = seen.insert((r, b), line) {
            return Err(ParseError::at(
                line,
                format!("duplicate edge {red_token} {blue_token} (first on line {first})"),
            ));
        }
        edges.push((r, b));
    }
    if edges.len() != m {
        return Err(ParseError::anywhere(format!(
            "header declares {m} edges but {} were listed",
            edges.len()
        )));
    }

    let mut colors = vec![Color::Red; n];
    for c in colors.iter_mut().skip(n_red) {
        *c = Color::Blue;
    }
    let graph = BipartiteGraph::from_colors(colors, &edges)
        .map_err(|e| ParseError::anywhere(e.to_string()))?;

    let roles = if role_lines == 0 {
        None
    } else if role_lines == n {
        Some(roles.into_iter().map(|r| r.expect("counted")).collect())
    } else {
        return Err(ParseError::anywhere(format!(
            "role lines cover {role_lines} of {n} vertices; annotate all or none"
        )));
    };
    Ok((graph, roles))
}

/// Vertex label used in division files: the role label when roles are
/// available, otherwise the plain global vertex id.
fn division_key(roles: Option<&[Role]>, v: VertexId) -> String {
    match roles {
        Some(roles) => roles[v.index()].label(),
        None => v.to_string(),
    }
}

/// Render a division as a JSON object mapping vertex labels to community
/// indices, one entry per line in vertex id order.
pub fn render_division(g: &BipartiteGraph, d: &Division, roles: Option<&[Role]>) -> String {
    let mut out = String::from("{\n");
    let n = g.vertex_count();
    for v in g.vertices() {
        let comma = if v.index() + 1 == n { "" } else { "," };
        out.push_str(&format!(
            "  \"{}\": {}{}\n",
            division_key(roles, v),
            d.assignment()[v.index()],
            comma
        ));
    }
    out.push_str("}\n");
    out
}

/// Parse a division file against a graph (and its role table, when labels
/// are role-based). Every vertex must be assigned exactly once.
pub fn parse_division(
    text: &str,
    g: &BipartiteGraph,
    roles: Option<&[Role]>,
) -> Result<Division, ParseError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ParseError::at(e.line(), e.to_string()))?;
    let map = value
        .as_object()
        .ok_or_else(|| ParseError::anywhere("division file must be a JSON object"))?;

    let role_index: HashMap<String, VertexId> = match roles {
        Some(roles) => roles
            .iter()
            .enumerate()
            .map(|(i, r)| (r.label(), VertexId(i)))
            .collect(),
        None => HashMap::new(),
    };

    let n = g.vertex_count();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (key, community) in map {
        let v = if !key.is_empty() && key.chars().all(|c| c.is_ascii_digit()) {
            let id: usize = key
                .parse()
                .map_err(|_| ParseError::anywhere(format!("bad vertex id {key:?}")))?;
            if id >= n {
                return Err(ParseError::anywhere(format!(
                    "vertex id {id} out of range (graph has {n} vertices)"
                )));
            }
            VertexId(id)
        } else if let Some(&v) = role_index.get(key) {
            v
        } else {
            return Err(ParseError::anywhere(format!("unknown vertex label {key:?}")));
        };
        let c = community.as_u64().ok_or_else(|| {
            ParseError::anywhere(format!(
                "community of {key:?} must be a nonnegative integer"
            ))
        })? as usize;
        if labels[v.index()].replace(c).is_some() {
            return Err(ParseError::anywhere(format!("vertex {key:?} assigned twice")));
        }
    }
    let mut resolved = Vec::with_capacity(n);
    for (i, label) in labels.into_iter().enumerate() {
        match label {
            Some(c) => resolved.push(c),
            None => {
                return Err(ParseError::anywhere(format!(
                    "vertex {} is not assigned to any community",
                    division_key(roles, VertexId(i))
                )))
            }
        }
    }
    Ok(Division::new(resolved))
}

/// Instance file: `{"k": 2, "elements": [2,2,2,2,3,3]}`.
#[derive(serde::Serialize, serde::Deserialize)]
struct InstanceFile {
    k: usize,
    elements: Vec<u64>,
}

pub fn render_instance(inst: &ThreePartitionInstance) -> String {
    let file = InstanceFile {
        k: inst.k(),
        elements: inst.elements().to_vec(),
    };
    let mut s = serde_json::to_string(&file).expect("instance serializes");
    s.push('\n');
    s
}

pub fn parse_instance(text: &str) -> Result<ThreePartitionInstance, ParseError> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| ParseError::at(e.line(), e.to_string()))?;
    ThreePartitionInstance::new(file.k, file.elements)
        .map_err(|e| ParseError::anywhere(e.to_string()))
}

/// Assignment file: a JSON array of 3k biclique indices, 1-based.
pub fn render_assignment(t: &TripleAssignment) -> String {
    let one_based: Vec<usize> = t.mapping().iter().map(|&b| b + 1).collect();
    let mut s = serde_json::to_string(&one_based).expect("assignment serializes");
    s.push('\n');
    s
}

pub fn parse_assignment(
    text: &str,
    inst: &ThreePartitionInstance,
) -> Result<TripleAssignment, ParseError> {
    let one_based: Vec<usize> = serde_json::from_str(text)
        .map_err(|e| ParseError::at(e.line(), e.to_string()))?;
    let mut mapping = Vec::with_capacity(one_based.len());
    for (i, b) in one_based.into_iter().enumerate() {
        if b == 0 {
            return Err(ParseError::anywhere(format!(
                "assignment entry {} is 0; biclique indices are 1-based",
                i + 1
            )));
        }
        mapping.push(b - 1);
    }
    TripleAssignment::new(inst, mapping).map_err(|e| ParseError::anywhere(e.to_string()))
}

fn dot_node(out: &mut String, role: &Role, color: Color) {
    let fill = match color {
        Color::Red => "red",
        Color::Blue => "lightblue",
    };
    out.push_str(&format!("    \"{}\" [fillcolor={}];\n", role.label(), fill));
}

/// One-way DOT export: vertices carry their role labels, red/blue fill
/// colors, and clusters group each biclique, the element pairs, and each
/// star.
pub fn render_dot(gadget: &GadgetGraph) -> String {
    let g = gadget.graph();
    let inst = gadget.instance();
    let mut out = String::from("graph gadget {\n  node [style=filled];\n");
    for t in 0..inst.k() {
        out.push_str(&format!(
            "  subgraph cluster_K{} {{\n    label=\"K{}\";\n",
            t + 1,
            t + 1
        ));
        for v in gadget.biclique_vertices(t) {
            dot_node(&mut out, &gadget.role(v), g.color(v));
        }
        out.push_str("  }\n");
    }
    out.push_str("  subgraph cluster_elements {\n    label=\"elements\";\n");
    for i in 0..3 * inst.k() {
        dot_node(&mut out, &gadget.role(gadget.element_x(i)), Color::Red);
        dot_node(&mut out, &gadget.role(gadget.element_y(i)), Color::Blue);
    }
    out.push_str("  }\n");
    for family in [StarFamily::X, StarFamily::Y] {
        for i in 0..3 * inst.k() {
            out.push_str(&format!(
                "  subgraph cluster_{}{} {{\n    label=\"{}{}\";\n",
                family,
                i + 1,
                family,
                i + 1
            ));
            for v in gadget.star_vertices(family, i) {
                dot_node(&mut out, &gadget.role(v), g.color(v));
            }
            out.push_str("  }\n");
        }
    }
    for &(r, b) in g.edges() {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\";\n",
            gadget.role(r).label(),
            gadget.role(b).label()
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::build_gadget;

    fn two_disjoint_edges() -> BipartiteGraph {
        BipartiteGraph::new(
            vec![VertexId(0), VertexId(2)],
            vec![VertexId(1), VertexId(3)],
            vec![(VertexId(0), VertexId(1)), (VertexId(2), VertexId(3))],
        )
        .unwrap()
    }

    fn fig1() -> ThreePartitionInstance {
        ThreePartitionInstance::new(2, vec![2, 2, 2, 2, 3, 3]).unwrap()
    }

    #[test]
    fn graph_round_trip_plain() {
        let g = two_disjoint_edges();
        let text = render_graph(&g, None);
        assert!(text.starts_with("bipartite 2 2 2\n"));
        let (parsed, roles) = parse_graph(&text).unwrap();
        assert_eq!(parsed, g);
        assert!(roles.is_none());
        // Render is stable under re-rendering the parsed value.
        assert_eq!(render_graph(&parsed, None), text);
    }

    #[test]
    fn graph_round_trip_with_roles() {
        let gadget = build_gadget(&fig1()).unwrap();
        let text = render_graph(gadget.graph(), Some(gadget.roles()));
        let (parsed, roles) = parse_graph(&text).unwrap();
        let roles = roles.expect("gadget file carries roles");
        assert_eq!(&parsed, gadget.graph());
        assert_eq!(roles.len(), parsed.vertex_count());
        // Roles land on the structurally matching vertices.
        for v in gadget.graph().vertices() {
            let ordinal = gadget.graph().color_ordinal(v);
            let twin = parsed
                .vertex_by_color_ordinal(gadget.graph().color(v), ordinal)
                .unwrap();
            assert_eq!(roles[twin.index()], gadget.role(v));
        }
        assert_eq!(render_graph(&parsed, Some(&roles)), text);
    }

    #[test]
    fn graph_parse_errors_carry_line_numbers() {
        let err = parse_graph("bipartite 1 1 2\nr0 b0\nr0 b0\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("duplicate edge"));

        let err = parse_graph("bipartite 1 1 1\nr7 b0\n").unwrap_err();
        assert_eq!(err.line, Some(2));

        let err = parse_graph("bipartite 1 1 1\nb0 r0\n").unwrap_err();
        assert_eq!(err.line, Some(2));

        let err = parse_graph("nonsense\n").unwrap_err();
        assert_eq!(err.line, Some(1));

        let err = parse_graph("bipartite 1 1 2\nr0 b0\n").unwrap_err();
        assert!(err.to_string().contains("declares 2 edges"));
    }

    #[test]
    fn division_round_trip_plain_and_roled() {
        let g = two_disjoint_edges();
        let d = Division::new(vec![0, 0, 1, 1]);
        let text = render_division(&g, &d, None);
        let parsed = parse_division(&text, &g, None).unwrap();
        assert_eq!(parsed, d);
        assert_eq!(render_division(&g, &parsed, None), text);

        let gadget = build_gadget(&fig1()).unwrap();
        let assignment = TripleAssignment::new(&fig1(), vec![0, 0, 1, 1, 0, 1]).unwrap();
        let d = crate::reduction::canonical_division(&fig1(), &assignment).unwrap();
        let text = render_division(gadget.graph(), &d, Some(gadget.roles()));
        assert!(text.contains("\"x5\""));
        let parsed = parse_division(&text, gadget.graph(), Some(gadget.roles())).unwrap();
        assert_eq!(parsed, d);
    }

    #[test]
    fn division_parse_rejects_partial_and_unknown() {
        let g = two_disjoint_edges();
        let err = parse_division("{\"0\": 0}", &g, None).unwrap_err();
        assert!(err.to_string().contains("not assigned"));
        let err = parse_division("{\"zebra\": 0}", &g, None).unwrap_err();
        assert!(err.to_string().contains("unknown vertex label"));
        let err = parse_division("not json", &g, None).unwrap_err();
        assert!(err.line.is_some());
    }

    #[test]
    fn instance_and_assignment_round_trips() {
        let inst = fig1();
        let text = render_instance(&inst);
        assert_eq!(text, "{\"k\":2,\"elements\":[2,2,2,2,3,3]}\n");
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert!(parse_instance("{\"k\":1,\"elements\":[1,2,2]}").is_err());

        let t = TripleAssignment::new(&inst, vec![0, 0, 1, 1, 0, 1]).unwrap();
        let text = render_assignment(&t);
        assert_eq!(text, "[1,1,2,2,1,2]\n");
        assert_eq!(parse_assignment(&text, &inst).unwrap(), t);
        assert!(parse_assignment("[0,1,2,2,1,2]", &inst).is_err());
        assert!(parse_assignment("[3,1,2,2,1,2]", &inst).is_err());
    }

    #[test]
    fn dot_export_mentions_roles_and_clusters() {
        let gadget = build_gadget(&fig1()).unwrap();
        let dot = render_dot(&gadget);
        assert!(dot.starts_with("graph gadget {"));
        for needle in [
            "subgraph cluster_K1",
            "subgraph cluster_K2",
            "subgraph cluster_elements",
            "subgraph cluster_X1",
            "subgraph cluster_Y6",
            "\"x5\" [fillcolor=red]",
            "\"X1.int\" [fillcolor=lightblue]",
            "\"x1\" -- \"y1\";",
        ] {
            assert!(dot.contains(needle), "missing {needle}");
        }
    }
}
