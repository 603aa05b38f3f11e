//! The simulation model described as a network of its own parts.
//!
//! The root `ABM` contains five categories (procedures, breeds, globals,
//! patches, experiments); each category contains its members, breeds
//! contain their attributes and experiments their inputs. Procedures are
//! additionally linked to the procedures they depend on. The graph is
//! undirected and static.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Root,
    Category,
    Procedure,
    Breed,
    Attribute,
    Global,
    Patch,
    Experiment,
    ExperimentParam,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Category => "category",
            NodeKind::Procedure => "procedure",
            NodeKind::Breed => "breed",
            NodeKind::Attribute => "attribute",
            NodeKind::Global => "global",
            NodeKind::Patch => "patch",
            NodeKind::Experiment => "experiment",
            NodeKind::ExperimentParam => "experiment-param",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Containment,
    Dependency,
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

/// Simple undirected graph; node ids are `0..nodes.len()`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl ModelGraph {
    pub fn add_node(&mut self, label: &str, kind: NodeKind) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            label: label.to_string(),
            kind,
        });
        id
    }

    /// Add an edge; self-loops and repeated pairs are rejected.
    pub fn add_edge(&mut self, u: usize, v: usize, kind: EdgeKind) -> Result<()> {
        if u == v {
            return Err(Error::Domain(format!("self-loop on node {u}")));
        }
        if u >= self.nodes.len() || v >= self.nodes.len() {
            return Err(Error::Domain(format!("edge {u}-{v} names a missing node")));
        }
        let (a, b) = (u.min(v), u.max(v));
        if self.edges.iter().any(|e| e.a == a && e.b == b) {
            return Err(Error::Domain(format!("duplicate edge {a}-{b}")));
        }
        self.edges.push(Edge { a, b, kind });
        Ok(())
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }
}

const PROCEDURES: &[&str] = &[
    "setup",
    "setup-patches",
    "place-schools",
    "setup-schools",
    "setup-public-school",
    "setup-private-school",
    "setup-students",
    "calculate-class",
    "get-enrolled-ses",
    "calculate-rank-ses",
    "get-enrolled-tip",
    "induct-teacher",
    "make-nieb",
    "go",
    "make-student-nibr",
];

/// Declared procedure dependencies. `make-nieb` names itself as its own
/// dependency (read as the per-student placement routine) and `go` names an
/// undefined `get-admission` (read as the two enrollment procedures).
const DEPENDENCIES: &[(&str, &str)] = &[
    ("setup", "setup-patches"),
    ("setup", "setup-schools"),
    ("setup", "setup-students"),
    ("setup-schools", "place-schools"),
    ("setup-schools", "setup-private-school"),
    ("setup-schools", "setup-public-school"),
    ("get-enrolled-ses", "calculate-class"),
    ("get-enrolled-ses", "calculate-rank-ses"),
    ("get-enrolled-tip", "calculate-class"),
    ("make-nieb", "make-student-nibr"),
    ("go", "get-enrolled-ses"),
    ("go", "get-enrolled-tip"),
];

const STUDENT_ATTRIBUTES: &[&str] = &["growth-rate", "wealth", "grades", "school", "home-work", "expenditure"];

const SCHOOL_ATTRIBUTES: &[&str] = &[
    "teachers",
    "students",
    "rank",
    "sector",
    "position",
    "fee",
    "income",
    "req-home-work",
    "class-work",
    "projected-cost",
    "class",
    "grade-award-scheme",
    "TIP",
];

const GLOBALS: &[&str] = &[
    // inputs
    "class-size",
    "TIP",
    "growth-rate",
    "public-school-fee",
    "private-school-fee",
    "required-home-hours-public",
    "required-home-hours-private",
    "home-work-cost",
    "public-school-rec-time",
    "private-school-rec-time",
    // outputs
    "growth-grades",
    "wealth-grades",
    "students-count",
    "teachers-count",
    "avg-cost",
];

const PATCHES: &[&str] = &["min-x", "max-x", "min-y", "max-y", "origin"];

const EXPERIMENTS: &[(&str, &[&str])] = &[
    (
        "very-class-size",
        &["schools", "student", "public-school-class", "private-school-class", "TIP"],
    ),
    (
        "very-home-study-hours",
        &[
            "schools",
            "student",
            "public-school-home-study-hours",
            "private-school-home-study-hours",
            "TIP",
        ],
    ),
];

/// The network of this simulation model.
pub fn build_model_graph() -> ModelGraph {
    let mut g = ModelGraph::default();
    let contain = |g: &mut ModelGraph, parent: usize, label: &str, kind: NodeKind| {
        let id = g.add_node(label, kind);
        g.add_edge(parent, id, EdgeKind::Containment).expect("fresh node");
        id
    };

    let root = g.add_node("ABM", NodeKind::Root);
    let procedures = contain(&mut g, root, "Procedures", NodeKind::Category);
    let breeds = contain(&mut g, root, "Breeds", NodeKind::Category);
    let globals = contain(&mut g, root, "Globals", NodeKind::Category);
    let patches = contain(&mut g, root, "Patches", NodeKind::Category);
    let experiments = contain(&mut g, root, "Experiments", NodeKind::Category);

    let proc_ids: Vec<usize> = PROCEDURES
        .iter()
        .map(|p| contain(&mut g, procedures, p, NodeKind::Procedure))
        .collect();
    let proc_id = |name: &str| proc_ids[PROCEDURES.iter().position(|p| *p == name).expect("known procedure")];
    for (from, to) in DEPENDENCIES {
        g.add_edge(proc_id(from), proc_id(to), EdgeKind::Dependency)
            .expect("dependency pairs are distinct");
    }

    for (breed, attrs) in [("Student", STUDENT_ATTRIBUTES), ("School", SCHOOL_ATTRIBUTES)] {
        let b = contain(&mut g, breeds, breed, NodeKind::Breed);
        for a in attrs {
            contain(&mut g, b, a, NodeKind::Attribute);
        }
    }
    for name in GLOBALS {
        contain(&mut g, globals, name, NodeKind::Global);
    }
    for name in PATCHES {
        contain(&mut g, patches, name, NodeKind::Patch);
    }
    for (name, inputs) in EXPERIMENTS {
        let e = contain(&mut g, experiments, name, NodeKind::Experiment);
        for input in *inputs {
            contain(&mut g, e, input, NodeKind::ExperimentParam);
        }
    }
    g
}

/// Brandes' betweenness on an unweighted undirected graph given as
/// neighbour lists. Each unordered pair is counted once.
pub fn betweenness_adj(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut cb = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = -1);
        delta.iter_mut().for_each(|x| *x = 0.0);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    // every unordered pair was seen from both ends
    cb.iter_mut().for_each(|x| *x /= 2.0);
    cb
}

pub fn betweenness(graph: &ModelGraph) -> Vec<f64> {
    betweenness_adj(&graph.adjacency())
}

pub fn degree_centrality(graph: &ModelGraph) -> Vec<usize> {
    let mut deg = vec![0; graph.nodes.len()];
    for e in &graph.edges {
        deg[e.a] += 1;
        deg[e.b] += 1;
    }
    deg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Betweenness,
    Degree,
}

impl std::str::FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betweenness" => Ok(Measure::Betweenness),
            "degree" => Ok(Measure::Degree),
            other => Err(Error::UnknownMeasure(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityRow {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
    pub betweenness: f64,
    /// Betweenness over the number of pairs not involving the node.
    pub betweenness_normalized: f64,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport {
    pub rows: Vec<CentralityRow>,
}

impl CentralityReport {
    pub fn values(&self, measure: Measure) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match measure {
                Measure::Betweenness => r.betweenness,
                Measure::Degree => r.degree as f64,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,label,kind,betweenness,betweenness_normalized,degree\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id,
                r.label,
                r.kind.as_str(),
                r.betweenness,
                r.betweenness_normalized,
                r.degree
            );
        }
        out
    }
}

pub fn centrality(graph: &ModelGraph) -> CentralityReport {
    let b = betweenness(graph);
    let d = degree_centrality(graph);
    let n = graph.nodes.len() as f64;
    let pairs = (n - 1.0) * (n - 2.0) / 2.0;
    let rows = graph
        .nodes
        .iter()
        .map(|node| CentralityRow {
            id: node.id,
            label: node.label.clone(),
            kind: node.kind,
            betweenness: b[node.id],
            betweenness_normalized: if pairs > 0.0 { b[node.id] / pairs } else { 0.0 },
            degree: d[node.id],
        })
        .collect();
    CentralityReport { rows }
}

fn unit_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz document; nodes are filled from blue (lowest `measure`) to red
/// (highest) and widened in proportion.
pub fn to_dot(graph: &ModelGraph, report: &CentralityReport, measure: &str) -> Result<String> {
    let m: Measure = measure.parse()?;
    let scaled = unit_scale(&report.values(m));
    let mut out = String::from("graph ABM {\n  node [shape=ellipse, style=filled, fontcolor=white];\n");
    for (node, t) in graph.nodes.iter().zip(&scaled) {
        let red = (255.0 * t).round() as u8;
        let blue = 255 - red;
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", fillcolor=\"#{red:02x}00{blue:02x}\", width={:.3}];",
            node.id,
            dot_escape(&node.label),
            0.75 + 1.5 * t
        );
    }
    let mut edges = graph.edges.clone();
    edges.sort();
    for e in &edges {
        let style = match e.kind {
            EdgeKind::Containment => "",
            EdgeKind::Dependency => " [style=dashed]",
        };
        let _ = writeln!(out, "  n{} -- n{}{style};", e.a, e.b);
    }
    out.push_str("}\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// GraphML with a label and both centralities per node.
pub fn to_graphml(graph: &ModelGraph, report: &CentralityReport) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n  \
         <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n  \
         <key id=\"betweenness\" for=\"node\" attr.name=\"betweenness\" attr.type=\"double\"/>\n  \
         <key id=\"degree\" for=\"node\" attr.name=\"degree\" attr.type=\"double\"/>\n  \
         <key id=\"kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n  \
         <graph id=\"ABM\" edgedefault=\"undirected\">\n",
    );
    for (node, row) in graph.nodes.iter().zip(&report.rows) {
        let _ = writeln!(
            out,
            "    <node id=\"n{}\"><data key=\"label\">{}</data><data key=\"betweenness\">{}</data><data key=\"degree\">{}</data></node>",
            node.id,
            xml_escape(&node.label),
            row.betweenness,
            row.degree
        );
    }
    let mut edges = graph.edges.clone();
    edges.sort();
    for (i, e) in edges.iter().enumerate() {
        let kind = match e.kind {
            EdgeKind::Containment => "containment",
            EdgeKind::Dependency => "dependency",
        };
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\"><data key=\"kind\">{kind}</data></edge>",
            e.a, e.b
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Indented outline of the containment tree: depth first from `ABM`,
/// children sorted by label, two spaces per level.
pub fn tree_emit(graph: &ModelGraph) -> Result<String> {
    let root = graph
        .nodes
        .iter()
        .find(|n| n.kind == NodeKind::Root && n.label == "ABM")
        .ok_or_else(|| Error::NotATree("no ABM root".into()))?
        .id;
    let mut children = vec![Vec::new(); graph.nodes.len()];
    for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::Containment) {
        children[e.a].push(e.b);
        children[e.b].push(e.a);
    }
    let mut out = String::new();
    let mut seen = vec![false; graph.nodes.len()];
    // (node, parent, depth)
    let mut stack = vec![(root, usize::MAX, 0usize)];
    while let Some((v, parent, depth)) = stack.pop() {
        if seen[v] {
            return Err(Error::NotATree(format!("cycle through `{}`", graph.nodes[v].label)));
        }
        seen[v] = true;
        let _ = writeln!(out, "{}{}", "  ".repeat(depth), graph.nodes[v].label);
        let mut kids: Vec<usize> = children[v].iter().copied().filter(|&c| c != parent).collect();
        kids.sort_by(|&x, &y| graph.nodes[x].label.cmp(&graph.nodes[y].label).then(x.cmp(&y)));
        for &c in kids.iter().rev() {
            stack.push((c, v, depth + 1));
        }
    }
    if let Some(orphan) = seen.iter().position(|s| !s) {
        return Err(Error::NotATree(format!(
            "`{}` is not contained under ABM",
            graph.nodes[orphan].label
        )));
    }
    Ok(out)
}

/// Equal-width bins over `[min, max]`; the maximum falls in the last bin and
/// a constant input puts everything in the first.
pub fn histogram_counts(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let bins = bins.max(1);
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = if width > 0.0 {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let low = lo + width * k as f64;
            let high = if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 };
            (low, high, c)
        })
        .collect()
}

pub fn histogram(report: &CentralityReport, measure: &str, bins: usize) -> Result<String> {
    let m: Measure = measure.parse()?;
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let mut out = String::from("bin_low,bin_high,count\n");
    for (lo, hi, c) in histogram_counts(&report.values(m), bins) {
        let _ = writeln!(out, "{lo},{hi},{c}");
    }
    Ok(out)
}

/// Labels of the `k` nodes with the highest values (ties by id).
pub fn top_k(report: &CentralityReport, measure: Measure, k: usize) -> Vec<String> {
    let values = report.values(measure);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| report.rows[i].label.clone()).collect()
}

/// Edge set of a graph as unordered id pairs.
pub fn edge_pairs(graph: &ModelGraph) -> BTreeSet<(usize, usize)> {
    graph.edges.iter().map(|e| (e.a, e.b)).collect()
}
