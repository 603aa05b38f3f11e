use std::collections::{BTreeMap, BTreeSet, VecDeque};

use pssm_core::network::{
    betweenness, betweenness_adj, build_model_graph, centrality, degree_centrality, edge_pairs, histogram_counts,
    to_dot, to_graphml, tree_emit, EdgeKind, ModelGraph, NodeKind,
};
use proptest::prelude::*;

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Exact rational `num/den`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Q(u128, u128);

impl Q {
    fn add(self, o: Q) -> Q {
        let (n, d) = (self.0 * o.1 + o.0 * self.1, self.1 * o.1);
        let g = gcd(n, d).max(1);
        Q(n / g, d / g)
    }
}

fn bfs(adj: &[Vec<usize>], s: usize) -> (Vec<Option<usize>>, Vec<u128>) {
    let mut dist = vec![None; adj.len()];
    let mut paths = vec![0u128; adj.len()];
    dist[s] = Some(0);
    paths[s] = 1;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        let dv = dist[v].unwrap();
        for &w in &adj[v] {
            match dist[w] {
                None => {
                    dist[w] = Some(dv + 1);
                    paths[w] = paths[v];
                    q.push_back(w);
                }
                Some(dw) if dw == dv + 1 => paths[w] += paths[v],
                _ => {}
            }
        }
    }
    (dist, paths)
}

/// Sum over unordered pairs {s,t} of the share of shortest s-t paths
/// through each node, as exact fractions.
fn brute_betweenness(adj: &[Vec<usize>]) -> Vec<Q> {
    let n = adj.len();
    let all: Vec<_> = (0..n).map(|s| bfs(adj, s)).collect();
    let mut out = vec![Q(0, 1); n];
    for s in 0..n {
        for t in s + 1..n {
            let Some(dst) = all[s].0[t] else { continue };
            for v in (0..n).filter(|&v| v != s && v != t) {
                if let (Some(a), Some(b)) = (all[s].0[v], all[v].0[t]) {
                    if a + b == dst {
                        out[v] = out[v].add(Q(all[s].1[v] * all[v].1[t], all[s].1[t]));
                    }
                }
            }
        }
    }
    out
}

fn same(value: f64, q: Q) -> bool {
    // the float equals the fraction when it is the closest double to it
    value == q.0 as f64 / q.1 as f64 || (value * q.1 as f64 - q.0 as f64).abs() < 1e-9
}

fn adjacency(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Random connected graph: a random spanning tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (2usize..=8).prop_flat_map(|n| {
        let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
        let extra = proptest::collection::vec((0..n, 0..n), 0..n * 2);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                edges.insert((p, i + 1));
            }
            for (a, b) in extra {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            (n, edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn betweenness_matches_path_enumeration((n, edges) in connected_graph()) {
        let adj = adjacency(n, &edges);
        let fast = betweenness_adj(&adj);
        let slow = brute_betweenness(&adj);
        for v in 0..n {
            prop_assert!(same(fast[v], slow[v]), "node {v}: {} vs {:?}", fast[v], slow[v]);
        }
    }

    #[test]
    fn leaves_carry_no_betweenness((n, edges) in connected_graph()) {
        let adj = adjacency(n, &edges);
        let b = betweenness_adj(&adj);
        for v in (0..n).filter(|&v| adj[v].len() == 1) {
            prop_assert_eq!(b[v], 0.0);
        }
    }

    #[test]
    fn a_pendant_leaf_never_lowers_betweenness((n, edges) in connected_graph(), at in 0usize..8) {
        let at = at % n;
        let before = betweenness_adj(&adjacency(n, &edges));
        let mut grown = edges.clone();
        grown.insert((at, n));
        let after = betweenness_adj(&adjacency(n + 1, &grown));
        for v in 0..n {
            prop_assert!(after[v] >= before[v] - 1e-12);
        }
        prop_assert_eq!(after[n], 0.0);
    }
}

#[test]
fn model_graph_census() {
    let g = build_model_graph();
    assert_eq!(g.nodes.len(), 74);
    assert_eq!(g.edges.len(), 85);
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &g.nodes {
        *kinds.entry(n.kind.as_str()).or_default() += 1;
    }
    let mut expect: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, c) in [
        (NodeKind::Root, 1),
        (NodeKind::Category, 5),
        (NodeKind::Procedure, 15),
        (NodeKind::Breed, 2),
        (NodeKind::Attribute, 19),
        (NodeKind::Global, 15),
        (NodeKind::Patch, 5),
        (NodeKind::Experiment, 2),
        (NodeKind::ExperimentParam, 10),
    ] {
        expect.insert(k.as_str(), c);
    }
    assert_eq!(kinds, expect);
    let deps = g.edges.iter().filter(|e| e.kind == EdgeKind::Dependency).count();
    assert_eq!(deps, 12);
    assert!(g.is_connected());
    assert_eq!(g.nodes.iter().filter(|n| n.label == "ABM").count(), 1);
}

#[test]
fn degrees_sum_to_twice_the_edges() {
    let g = build_model_graph();
    assert_eq!(degree_centrality(&g).iter().sum::<usize>(), 2 * g.edges.len());
}

#[test]
fn model_graph_betweenness_matches_enumeration() {
    let g = build_model_graph();
    let fast = betweenness(&g);
    let slow = brute_betweenness(&g.adjacency());
    for (v, (f, s)) in fast.iter().zip(&slow).enumerate() {
        assert!(same(*f, *s), "{}: {f} vs {s:?}", g.nodes[v].label);
    }
}

#[test]
fn graph_rejects_loops_and_duplicates() {
    let mut g = ModelGraph::default();
    let a = g.add_node("a", NodeKind::Root);
    let b = g.add_node("b", NodeKind::Category);
    assert!(g.add_edge(a, a, EdgeKind::Containment).is_err());
    g.add_edge(a, b, EdgeKind::Containment).unwrap();
    assert!(g.add_edge(b, a, EdgeKind::Dependency).is_err());
    assert!(g.add_edge(a, 7, EdgeKind::Containment).is_err());
}

#[test]
fn graphml_round_trips() {
    let g = build_model_graph();
    let report = centrality(&g);
    let text = to_graphml(&g, &report);
    let doc = roxmltree::Document::parse(&text).unwrap();
    let graph = doc.descendants().find(|n| n.has_tag_name("graph")).unwrap();
    assert_eq!(graph.attribute("edgedefault"), Some("undirected"));

    let mut labels = BTreeMap::new();
    for node in graph.children().filter(|n| n.has_tag_name("node")) {
        let id = node.attribute("id").unwrap().to_string();
        let data: BTreeMap<&str, &str> = node
            .children()
            .filter(|d| d.has_tag_name("data"))
            .map(|d| (d.attribute("key").unwrap(), d.text().unwrap_or("")))
            .collect();
        let idx: usize = id[1..].parse().unwrap();
        assert_eq!(data["label"], g.nodes[idx].label);
        assert_eq!(data["betweenness"].parse::<f64>().unwrap(), report.rows[idx].betweenness);
        assert_eq!(data["degree"].parse::<usize>().unwrap(), report.rows[idx].degree);
        labels.insert(id, data["label"].to_string());
    }
    assert_eq!(labels.len(), g.nodes.len());

    let mut pairs = BTreeSet::new();
    for e in graph.children().filter(|n| n.has_tag_name("edge")) {
        let s: usize = e.attribute("source").unwrap()[1..].parse().unwrap();
        let t: usize = e.attribute("target").unwrap()[1..].parse().unwrap();
        pairs.insert((s.min(t), s.max(t)));
    }
    assert_eq!(pairs, edge_pairs(&g));
}

/// Minimal reader for the subset of DOT that the exporter writes.
fn parse_dot(text: &str) -> (BTreeMap<String, BTreeMap<String, String>>, BTreeSet<(String, String)>) {
    let mut nodes = BTreeMap::new();
    let mut edges = BTreeSet::new();
    let body = text.trim();
    assert!(body.starts_with("graph ") && body.ends_with('}'));
    for stmt in body[body.find('{').unwrap() + 1..body.len() - 1].split(";\n") {
        let stmt = stmt.trim().trim_end_matches(';');
        if stmt.is_empty() || stmt.starts_with("node ") {
            continue;
        }
        let (head, attrs) = match stmt.find('[') {
            Some(i) => (stmt[..i].trim(), &stmt[i + 1..stmt.rfind(']').unwrap()]),
            None => (stmt, ""),
        };
        if let Some((a, b)) = head.split_once("--") {
            let (a, b) = (a.trim().to_string(), b.trim().to_string());
            edges.insert((a.clone().min(b.clone()), a.max(b)));
            continue;
        }
        let mut map = BTreeMap::new();
        let mut rest = attrs;
        while let Some(eq) = rest.find('=') {
            let key = rest[..eq].trim().trim_start_matches(',').trim().to_string();
            let after = rest[eq + 1..].trim_start();
            let (value, tail) = if let Some(stripped) = after.strip_prefix('"') {
                let end = stripped.find('"').unwrap();
                (stripped[..end].to_string(), &stripped[end + 1..])
            } else {
                let end = after.find(',').unwrap_or(after.len());
                (after[..end].trim().to_string(), &after[end..])
            };
            map.insert(key, value);
            rest = tail;
        }
        nodes.insert(head.to_string(), map);
    }
    (nodes, edges)
}

#[test]
fn dot_is_isomorphic_to_the_graph() {
    let g = build_model_graph();
    let report = centrality(&g);
    let (nodes, edges) = parse_dot(&to_dot(&g, &report, "betweenness").unwrap());
    assert_eq!(nodes.len(), g.nodes.len());
    for n in &g.nodes {
        assert_eq!(nodes[&format!("n{}", n.id)]["label"], n.label);
    }
    let want: BTreeSet<(String, String)> = g
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (format!("n{}", e.a), format!("n{}", e.b));
            (a.clone().min(b.clone()), a.max(b))
        })
        .collect();
    assert_eq!(edges, want);

    let root = &nodes[&format!("n{}", g.find("ABM").unwrap())];
    assert_eq!(root["fillcolor"], "#ff0000", "the most central node is red");
    assert!(to_dot(&g, &report, "closeness").is_err());
}

#[test]
fn tree_outline_covers_every_node_once() {
    let g = build_model_graph();
    let text = tree_emit(&g).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ABM");
    assert_eq!(lines.len(), g.nodes.len());
    let mut names: Vec<&str> = lines.iter().map(|l| l.trim()).collect();
    let mut labels: Vec<&str> = g.nodes.iter().map(|n| n.label.as_str()).collect();
    names.sort_unstable();
    labels.sort_unstable();
    assert_eq!(names, labels);
    assert!(lines.iter().any(|l| *l == "  Procedures"));
}

#[test]
fn histogram_bins_partition_the_values() {
    let g = build_model_graph();
    let b = betweenness(&g);
    for bins in [1, 3, 10, 25] {
        let h = histogram_counts(&b, bins);
        assert_eq!(h.len(), bins);
        assert_eq!(h.iter().map(|x| x.2).sum::<usize>(), b.len());
        assert!(h.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
