//! The tripartite graph of a corner-free set: one triangle per pair
//! `(x, y)` on the vertices `x`, `y`, `x + y`, triangle counting, the
//! exactly-one-triangle-per-edge verifier, density reports and file formats.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::additive::{check_triple_condition, CornerSet, TripleMode, Witness};
use crate::error::{Error, Result};
use crate::lattice::PointSet;
use crate::probability::{theory_curves, TheoryCurves};

/// Vertex parts labelled by lattice points, and one triple per pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleSystem {
    /// Sorted labels of `V1`, `V2`, `V3`; ids are assigned in this order.
    pub parts: [PointSet; 3],
    pub triples: Vec<[u64; 3]>,
}

impl TripleSystem {
    pub fn offsets(&self) -> [u64; 3] {
        let s = self.parts.each_ref().map(|p| p.len() as u64);
        [0, s[0], s[0] + s[1]]
    }
}

/// Anything with vertex ids `0..order` and sorted, deduplicated edges `u < v`.
pub trait EdgeList: Sync {
    fn order(&self) -> u64;
    fn edges(&self) -> &[(u64, u64)];
}

/// A graph whose vertices split into three consecutive id ranges, every edge
/// joining two different ranges. Ids at or above the three ranges are
/// isolated padding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripartiteGraph {
    part_sizes: [u64; 3],
    edges: Vec<(u64, u64)>,
    padded_order: u64,
}

impl TripartiteGraph {
    pub fn new(part_sizes: [u64; 3], edges: Vec<(u64, u64)>, padded_order: u64) -> Result<Self> {
        let used: u64 = part_sizes.iter().sum();
        if padded_order < used {
            return Err(Error::invalid(format!("padded order {padded_order} below part total {used}")));
        }
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        let g = TripartiteGraph {
            part_sizes,
            edges,
            padded_order,
        };
        for &(u, v) in &g.edges {
            match (g.part_of(u), g.part_of(v)) {
                (Some(a), Some(b)) if u < v && a != b => {}
                _ => return Err(Error::invalid(format!("edge {u}-{v} does not join two parts"))),
            }
        }
        Ok(g)
    }

    pub fn part_sizes(&self) -> [u64; 3] {
        self.part_sizes
    }

    pub fn padded_order(&self) -> u64 {
        self.padded_order
    }

    /// The part holding `v`, or `None` for padding and out-of-range ids.
    pub fn part_of(&self, v: u64) -> Option<usize> {
        let mut acc = 0;
        for (i, &s) in self.part_sizes.iter().enumerate() {
            acc += s;
            if v < acc {
                return Some(i);
            }
        }
        None
    }

    /// Adds isolated vertices up to `order`.
    pub fn padded(mut self, order: u64) -> Result<Self> {
        if order < self.part_sizes.iter().sum() {
            return Err(Error::invalid(format!("cannot pad to {order}: below part total")));
        }
        self.padded_order = order;
        Ok(self)
    }
}

impl EdgeList for TripartiteGraph {
    fn order(&self) -> u64 {
        self.padded_order
    }

    fn edges(&self) -> &[(u64, u64)] {
        &self.edges
    }
}

/// An arbitrary simple graph, mostly for exercising verifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    order: u64,
    edges: Vec<(u64, u64)>,
}

impl SimpleGraph {
    pub fn new(order: u64, edges: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut e: Vec<(u64, u64)> = edges
            .into_iter()
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        e.sort_unstable();
        e.dedup();
        if let Some(&(u, v)) = e.iter().find(|&&(u, v)| u == v || v >= order) {
            return Err(Error::invalid(format!("bad edge {u}-{v} for order {order}")));
        }
        Ok(SimpleGraph { order, edges: e })
    }

    pub fn complete(order: u64) -> Self {
        let edges = (0..order).flat_map(|u| (u + 1..order).map(move |v| (u, v))).collect();
        SimpleGraph { order, edges }
    }
}

impl EdgeList for SimpleGraph {
    fn order(&self) -> u64 {
        self.order
    }

    fn edges(&self) -> &[(u64, u64)] {
        &self.edges
    }
}

/// The graph of `a`: parts `f1(A) = {x}`, `f2(A) = {y}`, `f3(A) = {x + y}`
/// and the triangle `{x, y, x + y}` for every pair. With `check`, the triple
/// condition is verified first and a violation is returned as its witness.
pub fn build_tripartite(a: &CornerSet, check: bool) -> Result<(TripleSystem, TripartiteGraph)> {
    if check {
        check_triple_condition(a, TripleMode::Indexed)??;
    }
    let parts = a.projections();
    let sizes = parts.each_ref().map(|p| p.len() as u64);
    let off = [0, sizes[0], sizes[0] + sizes[1]];
    let mut triples = Vec::with_capacity(a.len());
    let mut edges = Vec::with_capacity(3 * a.len());
    let mut sum = vec![0i64; a.dim()];
    for (x, y) in a.iter() {
        for k in 0..sum.len() {
            sum[k] = x[k] + y[k];
        }
        let id = |i: usize, p: &[i64]| off[i] + parts[i].position(p).expect("projection contains image") as u64;
        let t = [id(0, x), id(1, y), id(2, &sum)];
        edges.extend([(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]);
        triples.push(t);
    }
    let graph = TripartiteGraph::new(sizes, edges, sizes.iter().sum())?;
    Ok((TripleSystem { parts, triples }, graph))
}

// forward adjacency: neighbours w > u, sorted
fn forward_adjacency<G: EdgeList + ?Sized>(g: &G) -> Vec<Vec<u64>> {
    let mut adj = vec![Vec::new(); g.order() as usize];
    for &(u, v) in g.edges() {
        adj[u as usize].push(v);
    }
    adj
}

fn full_adjacency<G: EdgeList + ?Sized>(g: &G) -> Vec<Vec<u64>> {
    let mut adj = vec![Vec::new(); g.order() as usize];
    for &(u, v) in g.edges() {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

fn intersect_into(a: &[u64], b: &[u64], out: &mut Vec<u64>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// All triangles `u < v < w`, sorted.
pub fn count_triangles<G: EdgeList + ?Sized>(g: &G) -> (u64, Vec<[u64; 3]>) {
    let fwd = forward_adjacency(g);
    let list: Vec<[u64; 3]> = (0..fwd.len())
        .into_par_iter()
        .flat_map_iter(|u| {
            let mut found = Vec::new();
            let mut common = Vec::new();
            for &v in &fwd[u] {
                common.clear();
                intersect_into(&fwd[u], &fwd[v as usize], &mut common);
                found.extend(common.iter().map(|&w| [u as u64, v, w]));
            }
            found
        })
        .collect();
    (list.len() as u64, list)
}

/// Checks that every edge lies in exactly one triangle.
pub fn verify_edge_disjoint<G: EdgeList + ?Sized>(g: &G) -> std::result::Result<(), Witness> {
    let (_, triangles) = count_triangles(g);
    let edges = g.edges();
    let mut hits = vec![0u32; edges.len()];
    let slot = |u: u64, v: u64| edges.binary_search(&(u, v)).expect("triangle edge present");
    for t in &triangles {
        for (u, v) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            hits[slot(u, v)] += 1;
        }
    }
    match hits.iter().position(|&h| h != 1) {
        None => Ok(()),
        Some(i) => {
            let (u, v) = edges[i];
            let on_edge = triangles
                .iter()
                .filter(|t| t.contains(&u) && t.contains(&v))
                .copied()
                .collect();
            Err(Witness::Diamond {
                edge: (u, v),
                triangles: on_edge,
            })
        }
    }
}

/// Checks `samples` edges drawn uniformly (with replacement) from `seed`.
pub fn verify_edges_sampled<G: EdgeList + ?Sized>(g: &G, samples: usize, seed: u64) -> std::result::Result<(), Witness> {
    let edges = g.edges();
    if edges.is_empty() {
        return Ok(());
    }
    let adj = full_adjacency(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut common = Vec::new();
    for _ in 0..samples {
        let (u, v) = edges[rng.random_range(0..edges.len())];
        common.clear();
        intersect_into(&adj[u as usize], &adj[v as usize], &mut common);
        if common.len() != 1 {
            let triangles = common
                .iter()
                .map(|&w| {
                    let mut t = [u, v, w];
                    t.sort_unstable();
                    t
                })
                .collect();
            return Err(Witness::Diamond { edge: (u, v), triangles });
        }
    }
    Ok(())
}

/// Checks that the triples are exactly the triangles of `g` and that their
/// edges are exactly the edges of `g`.
pub fn verify_triples(g: &TripartiteGraph, triples: &[[u64; 3]]) -> Result<()> {
    let mut listed: Vec<[u64; 3]> = triples
        .iter()
        .map(|t| {
            let mut s = *t;
            s.sort_unstable();
            s
        })
        .collect();
    listed.sort_unstable();
    if let Some(w) = listed.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Inconsistent(format!("triple {:?} listed twice", w[0])));
    }
    let mut from_triples: Vec<(u64, u64)> = listed
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])])
        .collect();
    from_triples.sort_unstable();
    from_triples.dedup();
    if from_triples != g.edges() {
        return Err(Error::Inconsistent("edge set differs from the union of triple edges".into()));
    }
    let (_, triangles) = count_triangles(g);
    if triangles != listed {
        return Err(Error::Inconsistent(format!(
            "graph has {} triangles but {} triples",
            triangles.len(),
            listed.len()
        )));
    }
    Ok(())
}

/// How thoroughly a graph is checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    #[default]
    Full,
    Sampled,
    Off,
}

/// Edges checked per graph in [`VerifyLevel::Sampled`].
pub const SAMPLED_EDGES: usize = 1000;

/// Runs the verifier selected by `level`.
pub fn verify_graph<G: EdgeList + ?Sized>(g: &G, level: VerifyLevel, seed: u64) -> std::result::Result<(), Witness> {
    match level {
        VerifyLevel::Full => verify_edge_disjoint(g),
        VerifyLevel::Sampled => verify_edges_sampled(g, SAMPLED_EDGES, seed),
        VerifyLevel::Off => Ok(()),
    }
}

/// An exact nonnegative fraction together with its decimal value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
    pub value: f64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        let g = num_integer::gcd(num, den).max(1);
        Fraction {
            num: num / g,
            den: den / g,
            value: num as f64 / den as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub kind: String,
    pub dim: usize,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift_trials: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub a0: u64,
    pub classes_present: usize,
    pub color: u64,
    pub a: u64,
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub order: u64,
    pub part_sizes: [u64; 3],
    pub edges: u64,
    pub triangles: u64,
    pub verify: VerifyLevel,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub params: ReportParams,
    pub counts: ReportCounts,
    pub graph: GraphSummary,
    /// `e(G) / (3n)^2`.
    pub eta_lower: Fraction,
    /// `|A| / (9 n^2)`, a third of `eta_lower` for a verified graph.
    pub eta_conservative: Fraction,
    /// Exponential parts only; polynomial factors in `D` are dropped.
    pub theory: TheoryCurves,
    pub epsilon: f64,
    pub delta_bound: f64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null", default)]
    pub diagnostics: serde_json::Value,
}

/// Inputs to a [`DensityReport`] beyond the graph itself.
#[derive(Clone, Debug)]
pub struct ReportContext {
    pub params: ReportParams,
    pub counts: ReportCounts,
    pub verify: VerifyLevel,
    pub diagnostics: serde_json::Value,
}

/// Verifies `g` per the context, pads it to order `3n` and measures its
/// density. Fails if a part exceeds `n` or verification fails.
pub fn density_report(g: &TripartiteGraph, n: u64, ctx: ReportContext) -> Result<(TripartiteGraph, DensityReport)> {
    if n == 0 {
        return Err(Error::invalid("density report needs n >= 1"));
    }
    if let Some(s) = g.part_sizes().iter().find(|&&s| s > n) {
        return Err(Error::invalid(format!("part of size {s} exceeds n = {n}")));
    }
    let seed = ctx.params.seed.unwrap_or(0);
    verify_graph(g, ctx.verify, seed)?;
    let (triangles, _) = count_triangles(g);
    let order = 3 * n;
    let padded = g.clone().padded(order)?;
    let edges = g.edges().len() as u64;
    let sq = order.checked_mul(order).ok_or(Error::Overflow("order squared"))?;
    let eta_lower = Fraction::new(edges, sq);
    let eta_conservative = Fraction::new(ctx.counts.a, 9 * n * n);
    let report = DensityReport {
        theory: theory_curves(ctx.params.dim.max(1), n as f64),
        params: ctx.params,
        counts: ctx.counts,
        graph: GraphSummary {
            order,
            part_sizes: g.part_sizes(),
            edges,
            triangles,
            verify: ctx.verify,
            verified: ctx.verify != VerifyLevel::Off,
        },
        epsilon: eta_lower.value / 3.0,
        eta_lower,
        eta_conservative,
        delta_bound: 1.0 / order as f64,
        diagnostics: ctx.diagnostics,
    };
    Ok((padded, report))
}

// ----------------------------------------------------------------------------
// Files
// ----------------------------------------------------------------------------

/// Renders the edge-list text format.
pub fn format_edge_list(g: &TripartiteGraph, triples: &[[u64; 3]]) -> String {
    let s = g.part_sizes();
    let mut out = String::with_capacity(16 * (g.edges().len() + triples.len()) + 64);
    let _ = writeln!(
        out,
        "rs-graph {} {} {} {} {} {}",
        s[0],
        s[1],
        s[2],
        g.padded_order(),
        g.edges().len(),
        triples.len()
    );
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    for t in triples {
        let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
    }
    out
}

/// Parses the edge-list text format; errors carry 1-based line numbers.
pub fn parse_edge_list(text: &str) -> Result<(TripartiteGraph, Vec<[u64; 3]>)> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "rs-graph" {
        return Err(perr(1, format!("expected header 'rs-graph <v1> <v2> <v3> <order> <edges> <triples>', got '{header}'")));
    }
    let nums = fields[1..]
        .iter()
        .map(|f| f.parse::<u64>().map_err(|e| perr(1, format!("bad header field '{f}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let (sizes, order, n_edges, n_triples) = ([nums[0], nums[1], nums[2]], nums[3], nums[4], nums[5]);
    let used: u64 = sizes.iter().sum();
    if order < used {
        return Err(perr(1, format!("order {order} below part total {used}")));
    }
    let part_of = |v: u64| {
        let mut acc = 0;
        sizes.iter().position(|&s| {
            acc += s;
            v < acc
        })
    };

    let mut edges = Vec::new();
    let mut triples = Vec::new();
    let mut last = 1;
    for (no, line) in lines {
        last = no;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let ids = toks[1..]
            .iter()
            .map(|t| t.parse::<u64>().map_err(|e| perr(no, format!("bad id '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        match (toks[0], ids.as_slice()) {
            ("e", &[u, v]) => {
                if u >= v {
                    return Err(perr(no, format!("edge {u} {v} not in increasing order")));
                }
                match (part_of(u), part_of(v)) {
                    (Some(a), Some(b)) if a != b => {}
                    _ => return Err(perr(no, format!("edge {u} {v} does not join two parts"))),
                }
                if !triples.is_empty() {
                    return Err(perr(no, "edge line after triple lines".into()));
                }
                edges.push((u, v));
            }
            ("t", &[a, b, c]) => {
                if part_of(a) != Some(0) || part_of(b) != Some(1) || part_of(c) != Some(2) {
                    return Err(perr(no, format!("triple {a} {b} {c} not one vertex per part")));
                }
                triples.push([a, b, c]);
            }
            _ => return Err(perr(no, format!("unrecognized line '{line}'"))),
        }
    }
    if edges.len() as u64 != n_edges || triples.len() as u64 != n_triples {
        return Err(perr(
            last,
            format!(
                "header declares {n_edges} edges and {n_triples} triples, found {} and {}",
                edges.len(),
                triples.len()
            ),
        ));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(perr(1, "edges not sorted or duplicated".into()));
    }
    let g = TripartiteGraph::new(sizes, edges, order)?;
    Ok((g, triples))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_edge_list(g: &TripartiteGraph, triples: &[[u64; 3]], path: &Path) -> Result<()> {
    write_file(path, format_edge_list(g, triples).as_bytes())
}

pub fn read_edge_list(path: &Path) -> Result<(TripartiteGraph, Vec<[u64; 3]>)> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_edge_list(&text)
}

/// Pretty JSON with a trailing newline.
pub fn report_json(report: &DensityReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report(report: &DensityReport, path: &Path) -> Result<()> {
    write_file(path, report_json(report).as_bytes())
}

pub fn read_report(path: &Path) -> Result<DensityReport> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_triangles<G: EdgeList>(g: &G) -> Vec<[u64; 3]> {
        let e = g.edges();
        let has = |u, v| e.binary_search(&(u, v)).is_ok();
        let n = g.order();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                for w in v + 1..n {
                    if has(u, v) && has(u, w) && has(v, w) {
                        out.push([u, v, w]);
                    }
                }
            }
        }
        out
    }

    fn three_pairs() -> CornerSet {
        CornerSet::from_ints(&[(1, 1), (1, 2), (2, 2)])
    }

    fn ctx(n: u64, a: u64) -> ReportContext {
        ReportContext {
            params: ReportParams {
                kind: "test".into(),
                dim: 1,
                n,
                m: None,
                radius: None,
                seed: None,
                shift_trials: None,
            },
            counts: ReportCounts { a, ..Default::default() },
            verify: VerifyLevel::Full,
            diagnostics: serde_json::Value::Null,
        }
    }

    #[test]
    fn single_pair() {
        let (ts, g) = build_tripartite(&CornerSet::from_ints(&[(4, 7)]), true).unwrap();
        assert_eq!(g.part_sizes(), [1, 1, 1]);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(ts.triples, vec![[0, 1, 2]]);
        assert_eq!(count_triangles(&g).0, 1);
        assert!(verify_edge_disjoint(&g).is_ok());
        let (_, rep) = density_report(&g, 1, ctx(1, 1)).unwrap();
        assert_eq!((rep.eta_lower.num, rep.eta_lower.den), (1, 3));
    }

    #[test]
    fn three_pair_example() {
        let (ts, g) = build_tripartite(&three_pairs(), true).unwrap();
        assert_eq!(g.part_sizes(), [2, 2, 3]);
        assert_eq!(ts.parts[2].flat(), &[2, 3, 4]);
        assert_eq!(g.edges().len(), 9);
        assert_eq!(ts.triples.len(), 3);
        let (count, list) = count_triangles(&g);
        assert_eq!(count, 3);
        assert_eq!(list, brute_triangles(&g));
        assert!(verify_edge_disjoint(&g).is_ok());
        assert!(verify_triples(&g, &ts.triples).is_ok());
        let (padded, rep) = density_report(&g, 3, ctx(3, 3)).unwrap();
        assert_eq!(padded.padded_order(), 9);
        assert_eq!((rep.eta_lower.num, rep.eta_lower.den), (1, 9));
        assert!(rep.eta_lower.value >= rep.eta_conservative.value);
        assert_eq!(rep.graph.edges, 3 * rep.graph.triangles);
        assert!(density_report(&g, 2, ctx(2, 3)).is_err());
    }

    #[test]
    fn corner_rejected_by_built_in_check() {
        let a = CornerSet::from_ints(&[(1, 1), (2, 1), (1, 2)]);
        match build_tripartite(&a, true) {
            Err(Error::Verification(w)) => assert!(w.confirms_pairs(&a)),
            other => panic!("expected witness, got {other:?}"),
        }
        // unchecked build shows the extra triangle
        let (_, g) = build_tripartite(&a, false).unwrap();
        assert!(matches!(verify_edge_disjoint(&g), Err(Witness::Diamond { .. })));
    }

    #[test]
    fn k4_is_rejected() {
        let k4 = SimpleGraph::complete(4);
        assert_eq!(count_triangles(&k4).0, 4);
        match verify_edge_disjoint(&k4) {
            Err(Witness::Diamond { edge, triangles }) => {
                assert_eq!(edge, (0, 1));
                assert_eq!(triangles, vec![[0, 1, 2], [0, 1, 3]]);
            }
            other => panic!("{other:?}"),
        }
        assert!(verify_edges_sampled(&k4, 10, 1).is_err());
        let tri = SimpleGraph::complete(3);
        assert!(verify_edge_disjoint(&tri).is_ok());
        let path = SimpleGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        match verify_edge_disjoint(&path) {
            Err(Witness::Diamond { triangles, .. }) => assert!(triangles.is_empty()),
            other => panic!("{other:?}"),
        }
        assert_eq!(count_triangles(&SimpleGraph::new(5, []).unwrap()).0, 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let (ts, g) = build_tripartite(&three_pairs(), true).unwrap();
        let g = g.padded(9).unwrap();
        let text = format_edge_list(&g, &ts.triples);
        assert!(text.starts_with("rs-graph 2 2 3 9 9 3\n"));
        let (g2, t2) = parse_edge_list(&text).unwrap();
        assert_eq!(g2, g);
        assert_eq!(t2, ts.triples);
    }

    #[test]
    fn edge_list_errors() {
        let (ts, g) = build_tripartite(&three_pairs(), true).unwrap();
        let text = format_edge_list(&g, &ts.triples);
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_edge_list(&truncated), Err(Error::Parse { line: 5, .. })));
        let bad = text.replace("e 0 2", "e 2 0");
        assert!(matches!(parse_edge_list(&bad), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("graph 1 2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn triples_must_match_triangles() {
        let (ts, g) = build_tripartite(&three_pairs(), true).unwrap();
        assert!(verify_triples(&g, &ts.triples[..2]).is_err());
        let mut dup = ts.triples.clone();
        dup.push(dup[0]);
        assert!(verify_triples(&g, &dup).is_err());
    }
}
