//! Multi-relational directed graphs and sparse node-value assignments.
//!
//! An edge `(src, p, dst)` points from `src` to `dst`, so from the point of
//! view of `dst` the neighbor `src` is reached in the forward orientation of
//! `p` and from the point of view of `src` the neighbor `dst` is reached in
//! the reverse orientation. Relations flagged symmetric store each undirected
//! pair once and are expanded to both orientations whenever edges are
//! iterated.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRef {
    pub label: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRef {
    pub name: String,
    pub index: usize,
    pub symmetric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub relation: usize,
    pub dst: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// The neighbor points at the queried node: `r(node, neighbor) = p`.
    Forward,
    /// The queried node points at the neighbor: `r(node, neighbor) = p^-1`.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incident {
    pub neighbor: usize,
    pub relation: usize,
    pub orientation: Orientation,
}

/// Symmetry declaration for one relation, as read from the metadata file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub symmetric: bool,
}

impl RelationDecl {
    pub fn new(name: impl Into<String>, symmetric: bool) -> Self {
        Self {
            name: name.into(),
            symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRelationalGraph {
    nodes: Vec<NodeRef>,
    node_lookup: HashMap<String, usize>,
    relations: Vec<RelationRef>,
    relation_lookup: HashMap<String, usize>,
    edges: Vec<Edge>,
    edges_by_relation: Vec<Vec<usize>>,
    incidence_offsets: Vec<usize>,
    incidence: Vec<Incident>,
}

enum EdgeRejection {
    SelfLoop,
    Duplicate,
}

/// Incremental constructor. Nodes and relations keep first-registration order.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<String>,
    node_lookup: HashMap<String, usize>,
    relations: Vec<(String, bool)>,
    relation_lookup: HashMap<String, usize>,
    edges: Vec<Edge>,
    seen: HashSet<(usize, usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `label` if new and returns its index.
    pub fn add_node(&mut self, label: &str) -> usize {
        if let Some(&idx) = self.node_lookup.get(label) {
            return idx;
        }
        let idx = self.nodes.len();
        self.nodes.push(label.to_owned());
        self.node_lookup.insert(label.to_owned(), idx);
        idx
    }

    /// Registers `name` if new and returns its index. The symmetry flag of an
    /// already registered relation is left untouched.
    pub fn add_relation(&mut self, name: &str, symmetric: bool) -> usize {
        if let Some(&idx) = self.relation_lookup.get(name) {
            return idx;
        }
        let idx = self.relations.len();
        self.relations.push((name.to_owned(), symmetric));
        self.relation_lookup.insert(name.to_owned(), idx);
        idx
    }

    fn try_add_edge(
        &mut self,
        src: usize,
        relation: usize,
        dst: usize,
    ) -> std::result::Result<(), EdgeRejection> {
        if src == dst {
            return Err(EdgeRejection::SelfLoop);
        }
        let key = if self.relations[relation].1 {
            (src.min(dst), relation, src.max(dst))
        } else {
            (src, relation, dst)
        };
        if !self.seen.insert(key) {
            return Err(EdgeRejection::Duplicate);
        }
        self.edges.push(Edge { src, relation, dst });
        Ok(())
    }

    /// Adds an edge pointed from `src` to `dst`, registering unknown labels.
    pub fn add_edge(&mut self, src: &str, relation: &str, dst: &str) -> Result<()> {
        let s = self.add_node(src);
        let d = self.add_node(dst);
        let r = match self.relation_lookup.get(relation) {
            Some(&r) => r,
            None => self.add_relation(relation, false),
        };
        self.try_add_edge(s, r, d).map_err(|e| match e {
            EdgeRejection::SelfLoop => Error::InvalidParameter(format!("self-loop on `{src}`")),
            EdgeRejection::Duplicate => {
                Error::InvalidParameter(format!("duplicate edge `{src}` -[{relation}]-> `{dst}`"))
            }
        })
    }

    /// Index-based variant of [`GraphBuilder::add_edge`]; both endpoints and
    /// the relation must already be registered.
    pub fn add_edge_by_index(&mut self, src: usize, relation: usize, dst: usize) -> Result<()> {
        let n = self.nodes.len();
        if src >= n || dst >= n || relation >= self.relations.len() {
            return Err(Error::InvalidParameter(format!(
                "edge ({src}, {relation}, {dst}) references an unregistered node or relation"
            )));
        }
        self.try_add_edge(src, relation, dst).map_err(|e| match e {
            EdgeRejection::SelfLoop => {
                Error::InvalidParameter(format!("self-loop on node index {src}"))
            }
            EdgeRejection::Duplicate => {
                Error::InvalidParameter(format!("duplicate edge ({src}, {relation}, {dst})"))
            }
        })
    }

    pub fn contains_edge(&self, src: usize, relation: usize, dst: usize) -> bool {
        let key = if self.relations[relation].1 {
            (src.min(dst), relation, src.max(dst))
        } else {
            (src, relation, dst)
        };
        self.seen.contains(&key)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn build(self) -> MultiRelationalGraph {
        let nodes: Vec<NodeRef> = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(index, label)| NodeRef { label, index })
            .collect();
        let relations: Vec<RelationRef> = self
            .relations
            .into_iter()
            .enumerate()
            .map(|(index, (name, symmetric))| RelationRef {
                name,
                index,
                symmetric,
            })
            .collect();

        let mut edges_by_relation = vec![Vec::new(); relations.len()];
        for (id, e) in self.edges.iter().enumerate() {
            edges_by_relation[e.relation].push(id);
        }

        // Incidence in edge-insertion order; forward entries precede reverse
        // entries for the two orientations of a symmetric edge.
        let n = nodes.len();
        let mut degree = vec![0usize; n];
        for e in &self.edges {
            let per_endpoint = if relations[e.relation].symmetric {
                2
            } else {
                1
            };
            degree[e.src] += per_endpoint;
            degree[e.dst] += per_endpoint;
        }
        let mut incidence_offsets = Vec::with_capacity(n + 1);
        incidence_offsets.push(0);
        for d in &degree {
            incidence_offsets.push(incidence_offsets.last().unwrap() + d);
        }
        let mut cursor = incidence_offsets[..n].to_vec();
        let mut incidence = vec![
            Incident {
                neighbor: 0,
                relation: 0,
                orientation: Orientation::Forward,
            };
            incidence_offsets[n]
        ];
        let mut push = |at: usize, inc: Incident| {
            incidence[cursor[at]] = inc;
            cursor[at] += 1;
        };
        for e in &self.edges {
            let fwd = |neighbor| Incident {
                neighbor,
                relation: e.relation,
                orientation: Orientation::Forward,
            };
            let rev = |neighbor| Incident {
                neighbor,
                relation: e.relation,
                orientation: Orientation::Reverse,
            };
            if relations[e.relation].symmetric {
                push(e.src, fwd(e.dst));
                push(e.src, rev(e.dst));
                push(e.dst, fwd(e.src));
                push(e.dst, rev(e.src));
            } else {
                push(e.dst, fwd(e.src));
                push(e.src, rev(e.dst));
            }
        }

        MultiRelationalGraph {
            nodes,
            node_lookup: self.node_lookup,
            relations,
            relation_lookup: self.relation_lookup,
            edges: self.edges,
            edges_by_relation,
            incidence_offsets,
            incidence,
        }
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses `relation,symmetric` lines. A literal `relation,symmetric` header
/// row is accepted.
pub fn parse_relation_decls<I, S>(lines: I) -> Result<Vec<RelationDecl>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out: Vec<RelationDecl> = Vec::new();
    for (i, raw) in lines.into_iter().enumerate() {
        let line_no = i + 1;
        let line = raw.as_ref().trim_end_matches('\r');
        if is_skippable(line) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(Error::Malformed {
                line: line_no,
                message: "expected `relation,symmetric`".into(),
            });
        }
        if out.is_empty() && fields == ["relation", "symmetric"] {
            continue;
        }
        let symmetric = match fields[1] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Malformed {
                    line: line_no,
                    message: format!("symmetric flag must be `true` or `false`, got `{other}`"),
                })
            }
        };
        if out.iter().any(|d| d.name == fields[0]) {
            return Err(Error::DuplicateRelation {
                line: line_no,
                relation: fields[0].to_owned(),
            });
        }
        out.push(RelationDecl::new(fields[0], symmetric));
    }
    Ok(out)
}

/// Parses `src<TAB>relation<TAB>dst` lines into a graph.
///
/// Relations not mentioned in `decls` are asymmetric. Declared relations
/// that never occur in the edge list are registered after the ones that do,
/// in declaration order.
pub fn parse_edges<I, S>(lines: I, decls: &[RelationDecl]) -> Result<MultiRelationalGraph>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let symmetric: HashMap<&str, bool> = decls
        .iter()
        .map(|d| (d.name.as_str(), d.symmetric))
        .collect();
    let mut b = GraphBuilder::new();
    for (i, raw) in lines.into_iter().enumerate() {
        let line_no = i + 1;
        let line = raw.as_ref().trim_end_matches(['\r', '\n']);
        if is_skippable(line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Malformed {
                line: line_no,
                message: "expected `src<TAB>relation<TAB>dst`".into(),
            });
        }
        let (src, rel, dst) = (fields[0], fields[1], fields[2]);
        if src == dst {
            return Err(Error::SelfLoop {
                line: line_no,
                node: src.to_owned(),
            });
        }
        let s = b.add_node(src);
        let d = b.add_node(dst);
        let r = b.add_relation(rel, symmetric.get(rel).copied().unwrap_or(false));
        if b.try_add_edge(s, r, d).is_err() {
            return Err(Error::DuplicateEdge {
                line: line_no,
                src: src.to_owned(),
                relation: rel.to_owned(),
                dst: dst.to_owned(),
            });
        }
    }
    if b.edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    for d in decls {
        b.add_relation(&d.name, d.symmetric);
    }
    Ok(b.build())
}

impl MultiRelationalGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Number of stored edges; a symmetric edge counts once.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed edges after symmetric expansion.
    pub fn directed_edge_count(&self) -> usize {
        self.edges
            .iter()
            .map(|e| {
                if self.relations[e.relation].symmetric {
                    2
                } else {
                    1
                }
            })
            .sum()
    }

    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    pub fn relations(&self) -> &[RelationRef] {
        &self.relations
    }

    pub fn node(&self, index: usize) -> &NodeRef {
        &self.nodes[index]
    }

    pub fn relation(&self, index: usize) -> &RelationRef {
        &self.relations[index]
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.node_lookup.get(label).copied()
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relation_lookup.get(name).copied()
    }

    /// Stored edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Stored edges of one relation, in insertion order.
    pub fn edges_of(&self, relation: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges_by_relation[relation]
            .iter()
            .map(move |&id| &self.edges[id])
    }

    /// Directed edges after symmetric expansion: a symmetric `(a, b)` yields
    /// `(a, b)` followed by `(b, a)`.
    pub fn directed_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().flat_map(move |&e| {
            let mirrored = self.relations[e.relation].symmetric.then_some(Edge {
                src: e.dst,
                relation: e.relation,
                dst: e.src,
            });
            std::iter::once(e).chain(mirrored)
        })
    }

    /// Directed edges of one relation after symmetric expansion.
    pub fn directed_edges_of(&self, relation: usize) -> impl Iterator<Item = Edge> + '_ {
        let symmetric = self.relations[relation].symmetric;
        self.edges_of(relation).flat_map(move |&e| {
            let mirrored = symmetric.then_some(Edge {
                src: e.dst,
                relation: e.relation,
                dst: e.src,
            });
            std::iter::once(e).chain(mirrored)
        })
    }

    /// Neighbors of `node` with relation and orientation, in edge-insertion
    /// order.
    pub fn incident(&self, node: usize) -> &[Incident] {
        &self.incidence[self.incidence_offsets[node]..self.incidence_offsets[node + 1]]
    }

    /// Same node registry, only the edges of `relation`.
    pub fn restrict_to_relation(&self, relation: usize) -> MultiRelationalGraph {
        let mut b = GraphBuilder::new();
        for n in &self.nodes {
            b.add_node(&n.label);
        }
        let rel = &self.relations[relation];
        b.add_relation(&rel.name, rel.symmetric);
        for e in self.edges_of(relation) {
            b.try_add_edge(e.src, 0, e.dst)
                .unwrap_or_else(|_| unreachable!("edges were validated at construction"));
        }
        b.build()
    }

    /// Connected components of the undirected union of all edges, each
    /// sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[start] = id;
            stack.push(start);
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for inc in self.incident(v) {
                    if comp[inc.neighbor] == usize::MAX {
                        comp[inc.neighbor] = id;
                        stack.push(inc.neighbor);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Edge lines that [`parse_edges`] reads back into an identical graph
    /// (given [`MultiRelationalGraph::relation_decl_lines`]).
    pub fn to_edge_lines(&self) -> Vec<String> {
        self.edges
            .iter()
            .map(|e| {
                format!(
                    "{}\t{}\t{}",
                    self.nodes[e.src].label,
                    self.relations[e.relation].name,
                    self.nodes[e.dst].label
                )
            })
            .collect()
    }

    pub fn relation_decl_lines(&self) -> Vec<String> {
        self.relations
            .iter()
            .map(|r| format!("{},{}", r.name, r.symmetric))
            .collect()
    }

    pub fn relation_decls(&self) -> Vec<RelationDecl> {
        self.relations
            .iter()
            .map(|r| RelationDecl::new(r.name.clone(), r.symmetric))
            .collect()
    }
}

/// Values attached to a subset of nodes (the labeled set U).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValueMap {
    values: Vec<Option<f64>>,
}

impl NodeValueMap {
    pub fn new(node_count: usize) -> Self {
        Self {
            values: vec![None; node_count],
        }
    }

    /// Every node valued.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        let mut m = Self::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.insert(i, v)?;
        }
        Ok(m)
    }

    pub fn insert(&mut self, node: usize, value: f64) -> Result<()> {
        if node >= self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: node + 1,
            });
        }
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "value for node {node} is not finite"
            )));
        }
        self.values[node] = Some(value);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.values.get(node).copied().flatten()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.get(node).is_some()
    }

    pub fn labeled_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.labeled_count() == 0
    }

    /// `(node, value)` pairs in ascending node order.
    pub fn labeled(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
    }

    pub fn labeled_set(&self) -> Vec<usize> {
        self.labeled().map(|(i, _)| i).collect()
    }

    /// Keeps only the entries whose node is in `nodes`.
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        let mut out = Self::new(self.values.len());
        for &n in nodes {
            out.values[n] = self.values[n];
        }
        out
    }

    /// `(min, max)` over the labeled values.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.labeled().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Applies `f` to every labeled value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new(self.values.len());
        for (i, v) in self.labeled() {
            out.insert(i, f(v))?;
        }
        Ok(out)
    }

    pub fn to_lines(&self, graph: &MultiRelationalGraph) -> Vec<String> {
        self.labeled()
            .map(|(i, v)| format!("{},{}", graph.node(i).label, v))
            .collect()
    }
}

/// Parses `node,value` lines against the node registry of `graph`. A literal
/// `node,value` header row is accepted.
pub fn parse_values<I, S>(lines: I, graph: &MultiRelationalGraph) -> Result<NodeValueMap>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut map = NodeValueMap::new(graph.node_count());
    let mut first = true;
    for (i, raw) in lines.into_iter().enumerate() {
        let line_no = i + 1;
        let line = raw.as_ref().trim_end_matches(['\r', '\n']);
        if is_skippable(line) {
            continue;
        }
        if std::mem::take(&mut first) && line.trim() == "node,value" {
            continue;
        }
        let Some((label, value)) = line.rsplit_once(',') else {
            return Err(Error::Malformed {
                line: line_no,
                message: "expected `node,value`".into(),
            });
        };
        let label = label.trim();
        let value = value.trim();
        let Some(node) = graph.node_index(label) else {
            return Err(Error::UnknownNode {
                line: line_no,
                node: label.to_owned(),
            });
        };
        let parsed: f64 = match value.parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                return Err(Error::InvalidValue {
                    line: line_no,
                    raw: value.to_owned(),
                })
            }
        };
        if map.contains(node) {
            return Err(Error::DuplicateValue {
                line: line_no,
                node: label.to_owned(),
            });
        }
        map.insert(node, parsed)?;
    }
    Ok(map)
}
