//! Weighted digraphs, admissibility validation, root sets, and the
//! supporting-set machinery.
//!
//! An edge `i -> j` with weight `c_ij` means agent `i` takes opinions from
//! agent `j`. The *outgoing* neighbors of `i` are the agents it listens to;
//! the *incoming* neighbors are the agents that listen to it. A root is a
//! vertex that every other vertex can reach along directed edges.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of an outgoing weight row from 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Appraisals at or below this magnitude are treated as zero by the
/// boundary analysis.
pub const ZERO_TOL: f64 = 1e-12;

/// Upper bound on any single weight (no dominant neighbor).
pub const MAX_WEIGHT: f64 = 0.5;

/// A network as read from disk, before any admissibility checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    pub n: usize,
    /// `(src, dst, weight)` triples.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("edge #{index}: weight {weight} is not finite")]
    NonFinite { index: usize, weight: f64 },
}

impl RawNetwork {
    /// Parses the `{"n": .., "edges": [[src, dst, weight], ..]}` format.
    /// Errors from the JSON layer carry line and column.
    pub fn from_json_str(text: &str) -> Result<Self, ParseError> {
        let raw: RawNetwork = serde_json::from_str(text)?;
        if let Some((index, &(_, _, weight))) =
            raw.edges.iter().enumerate().find(|(_, e)| !e.2.is_finite())
        {
            return Err(ParseError::NonFinite { index, weight });
        }
        Ok(raw)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("network serialization is infallible")
    }
}

/// A single admissibility defect found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Defect {
    #[error("network has no vertices")]
    Empty,
    #[error("edge {src}->{dst} references a vertex outside 0..{n}")]
    IndexOutOfRange { src: usize, dst: usize, n: usize },
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} has out-degree {degree}, at least 2 required")]
    OutDegreeTooSmall { vertex: usize, degree: usize },
    #[error("outgoing weights of vertex {0} sum to {1}, expected 1")]
    RowSumViolation(usize, f64),
    #[error("weight of edge {0}->{1} is {2}, outside (0, 1/2]")]
    WeightOutOfRange(usize, usize, f64),
    #[error("graph is not rooted: condensation has {sinks} sink components")]
    NotRooted { sinks: usize },
    #[error("root set has {0} vertices, at least 3 required")]
    TooFewRoots(usize),
}

/// Every defect of a rejected network, in discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub defects: Vec<Defect>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid network: ")?;
        for (k, d) in self.defects.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// Errors from queries against a valid model with a state or vertex argument.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("state has length {got}, network has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target vertex {vertex} has appraisal {value}, expected 0")]
    TargetNotZero { vertex: usize, value: f64 },
}

/// A validated network. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    n: usize,
    out_adj: Vec<Vec<(usize, f64)>>,
    in_adj: Vec<Vec<(usize, f64)>>,
    roots: Vec<usize>,
    is_root: Vec<bool>,
}

/// Checks every admissibility condition and collects all defects found.
pub fn validate_network(raw: &RawNetwork) -> Result<NetworkModel, ValidationError> {
    let n = raw.n;
    if n == 0 {
        return Err(ValidationError {
            defects: vec![Defect::Empty],
        });
    }
    let mut defects = Vec::new();
    let mut seen = BTreeSet::new();
    let mut indices_ok = true;
    for &(src, dst, w) in &raw.edges {
        if src >= n || dst >= n {
            defects.push(Defect::IndexOutOfRange { src, dst, n });
            indices_ok = false;
            continue;
        }
        if src == dst {
            defects.push(Defect::SelfLoop(src));
        } else if !seen.insert((src, dst)) {
            defects.push(Defect::DuplicateEdge(src, dst));
        }
        if !(w > 0.0 && w <= MAX_WEIGHT) {
            defects.push(Defect::WeightOutOfRange(src, dst, w));
        }
    }
    if !indices_ok {
        return Err(ValidationError { defects });
    }

    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for &(src, dst, w) in &raw.edges {
        out_adj[src].push((dst, w));
        in_adj[dst].push((src, w));
    }
    for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
        list.sort_by_key(|e| e.0);
    }
    for (i, row) in out_adj.iter().enumerate() {
        if row.len() < 2 {
            defects.push(Defect::OutDegreeTooSmall {
                vertex: i,
                degree: row.len(),
            });
        }
        let sum: f64 = row.iter().map(|&(_, w)| w).sum();
        if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
            defects.push(Defect::RowSumViolation(i, sum));
        }
    }

    let targets: Vec<Vec<usize>> = out_adj
        .iter()
        .map(|row| row.iter().map(|&(j, _)| j).collect())
        .collect();
    let roots = match root_set_of_adjacency(&targets) {
        Ok(roots) => {
            if roots.len() < 3 {
                defects.push(Defect::TooFewRoots(roots.len()));
            }
            roots
        }
        Err(d) => {
            defects.push(d);
            Vec::new()
        }
    };

    if !defects.is_empty() {
        return Err(ValidationError { defects });
    }
    let mut is_root = vec![false; n];
    for &r in &roots {
        is_root[r] = true;
    }
    Ok(NetworkModel {
        n,
        out_adj,
        in_adj,
        roots,
        is_root,
    })
}

/// Root set of a raw network: the unique sink component of its
/// condensation. Edges with out-of-range endpoints are ignored.
pub fn root_set(raw: &RawNetwork) -> Result<Vec<usize>, Defect> {
    if raw.n == 0 {
        return Err(Defect::Empty);
    }
    let mut adj = vec![Vec::new(); raw.n];
    for &(s, d, _) in &raw.edges {
        if s < raw.n && d < raw.n {
            adj[s].push(d);
        }
    }
    root_set_of_adjacency(&adj)
}

fn root_set_of_adjacency(adj: &[Vec<usize>]) -> Result<Vec<usize>, Defect> {
    let (comp, ncomp) = tarjan_scc(adj);
    let mut is_sink = vec![true; ncomp];
    for (u, targets) in adj.iter().enumerate() {
        for &w in targets {
            if comp[u] != comp[w] {
                is_sink[comp[u]] = false;
            }
        }
    }
    let sinks: Vec<usize> = (0..ncomp).filter(|&c| is_sink[c]).collect();
    if sinks.len() != 1 {
        return Err(Defect::NotRooted { sinks: sinks.len() });
    }
    Ok((0..adj.len()).filter(|&v| comp[v] == sinks[0]).collect())
}

/// Iterative Tarjan. Returns the component index of every vertex and the
/// number of components.
fn tarjan_scc(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;

    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        index[start] = next;
        low[start] = next;
        next += 1;
        stack.push(start);
        on_stack[start] = true;
        frames.push((start, 0));

        while let Some(&(v, pos)) = frames.last() {
            if pos < adj[v].len() {
                frames.last_mut().unwrap().1 += 1;
                let w = adj[v][pos];
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    (comp, ncomp)
}

impl NetworkModel {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Outgoing neighbors `j` of `i` with weights `c_ij`, sorted by `j`.
    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out_adj[i]
    }

    /// Incoming neighbors `j` of `i` with weights `c_ji`, sorted by `j`.
    pub fn in_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.in_adj[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.is_root[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.out_adj[i]
            .binary_search_by(|e| e.0.cmp(&j))
            .ok()
            .map(|k| self.out_adj[i][k].1)
    }

    /// All edges as `(src, dst, weight)`, ordered by `(src, dst)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn to_raw(&self) -> RawNetwork {
        RawNetwork {
            n: self.n,
            edges: self.edges().collect(),
        }
    }

    pub(crate) fn check_vertex(&self, vertex: usize) -> Result<(), QueryError> {
        if vertex < self.n {
            Ok(())
        } else {
            Err(QueryError::VertexOutOfRange { vertex, n: self.n })
        }
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<(), QueryError> {
        if len == self.n {
            Ok(())
        } else {
            Err(QueryError::DimensionMismatch {
                expected: self.n,
                got: len,
            })
        }
    }

    /// The subnetwork induced by the roots, relabelled `0..k` in increasing
    /// order of the original index. Roots only listen to roots, so the
    /// induced network is admissible and strongly connected.
    pub fn root_subnetwork(&self) -> (NetworkModel, Vec<usize>) {
        let map = self.roots.clone();
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &r) in map.iter().enumerate() {
            new_index[r] = k;
        }
        let edges = self
            .edges()
            .filter(|&(i, j, _)| self.is_root[i] && self.is_root[j])
            .map(|(i, j, w)| (new_index[i], new_index[j], w))
            .collect();
        let raw = RawNetwork {
            n: map.len(),
            edges,
        };
        let sub = validate_network(&raw).expect("root block of an admissible network is admissible");
        (sub, map)
    }

    /// `S_{V'}`: every vertex with a path into some member of `targets`,
    /// together with the targets themselves.
    pub fn supporting_union(&self, targets: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &t in targets {
            if !mark[t] {
                mark[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.in_adj[v] {
                if !mark[u] {
                    mark[u] = true;
                    queue.push_back(u);
                }
            }
        }
        mark
    }
}

/// Supporting set of a target vertex, split into breadth-first layers along
/// reversed edges, with the path coefficient of every member.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportStructure {
    target: usize,
    differences: Vec<Vec<usize>>,
    depth: Vec<Option<usize>>,
    alpha: Vec<f64>,
}

impl SupportStructure {
    pub fn target(&self) -> usize {
        self.target
    }

    /// `D_i(k)` for `k = 0..=K`, where `K` is the last nonempty layer.
    pub fn differences(&self) -> &[Vec<usize>] {
        &self.differences
    }

    /// `D_i(k)`; empty past the last layer.
    pub fn difference(&self, k: usize) -> &[usize] {
        self.differences.get(k).map_or(&[], Vec::as_slice)
    }

    /// `S_i(k)`, sorted.
    pub fn layer(&self, k: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .differences
            .iter()
            .take(k + 1)
            .flatten()
            .copied()
            .collect();
        s.sort_unstable();
        s
    }

    /// `S_i`, sorted.
    pub fn support(&self) -> Vec<usize> {
        self.layer(self.differences.len())
    }

    /// Index of the last nonempty layer.
    pub fn max_depth(&self) -> usize {
        self.differences.len() - 1
    }

    /// Length of the shortest path from `j` to the target.
    pub fn depth_of(&self, j: usize) -> Option<usize> {
        self.depth.get(j).copied().flatten()
    }

    /// `α_ji`, with `α_ii = 1` for the empty path.
    pub fn alpha(&self, j: usize) -> Option<f64> {
        self.depth_of(j).map(|_| self.alpha[j])
    }

    /// `(j, α_ji)` for every `j ≠ i` in the supporting set, by layer.
    pub fn alpha_entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.differences
            .iter()
            .skip(1)
            .flatten()
            .map(|&j| (j, self.alpha[j]))
    }
}

/// Builds the layers `S_i(k)` and the coefficients `α_ji` by the layered
/// recursion `α_ji = Σ c_jj' α_j'i` over `j' ∈ V_j^- ∩ D_i(k-1)`.
pub fn support_structure(model: &NetworkModel, target: usize) -> Result<SupportStructure, QueryError> {
    model.check_vertex(target)?;
    let n = model.n();
    let mut depth = vec![None; n];
    let mut alpha = vec![0.0; n];
    depth[target] = Some(0);
    alpha[target] = 1.0;
    let mut differences = vec![vec![target]];

    loop {
        let k = differences.len();
        let prev = &differences[k - 1];
        let mut fresh = BTreeSet::new();
        for &v in prev {
            for &(u, _) in model.in_edges(v) {
                if depth[u].is_none() {
                    fresh.insert(u);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for &j in &fresh {
            depth[j] = Some(k);
        }
        for &j in &fresh {
            alpha[j] = model
                .out_edges(j)
                .iter()
                .filter(|&&(jp, _)| depth[jp] == Some(k - 1))
                .map(|&(jp, c)| c * alpha[jp])
                .sum();
        }
        differences.push(fresh.into_iter().collect());
    }

    Ok(SupportStructure {
        target,
        differences,
        depth,
        alpha,
    })
}

/// Every simple directed path `from -> .. -> to` with exactly `length` edges,
/// by exhaustive depth-first search. Lexicographic order.
pub fn enumerate_paths(model: &NetworkModel, from: usize, to: usize, length: usize) -> Vec<Vec<usize>> {
    fn extend(
        model: &NetworkModel,
        to: usize,
        remaining: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        if remaining == 0 {
            if v == to {
                out.push(path.clone());
            }
            return;
        }
        if v == to {
            return;
        }
        for &(w, _) in model.out_edges(v) {
            if used[w] {
                continue;
            }
            used[w] = true;
            path.push(w);
            extend(model, to, remaining - 1, path, used, out);
            path.pop();
            used[w] = false;
        }
    }

    let mut out = Vec::new();
    if length == 0 || from == to || from >= model.n() || to >= model.n() {
        return out;
    }
    let mut used = vec![false; model.n()];
    used[from] = true;
    let mut path = vec![from];
    extend(model, to, length, &mut path, &mut used, &mut out);
    out
}

/// Product of edge weights along a vertex sequence.
pub fn path_weight(model: &NetworkModel, path: &[usize]) -> f64 {
    path.windows(2)
        .map(|e| model.weight(e[0], e[1]).expect("path follows edges"))
        .product()
}

/// A shortest path into a zero-appraisal vertex from a positive one, through
/// zero-appraisal vertices only. `vertices` runs from the positive start to
/// the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportingPath {
    pub length: usize,
    pub vertices: Vec<usize>,
}

/// Finds the critical supporting path for `target` at state `x`, or `None`
/// if no positive vertex feeds the target through zero vertices. Ties are
/// broken by the lexicographically smallest vertex sequence.
pub fn critical_supporting_path(
    model: &NetworkModel,
    x: &[f64],
    target: usize,
) -> Result<Option<SupportingPath>, QueryError> {
    model.check_dim(x.len())?;
    model.check_vertex(target)?;
    if x[target].abs() > ZERO_TOL {
        return Err(QueryError::TargetNotZero {
            vertex: target,
            value: x[target],
        });
    }
    let is_zero = |v: usize| x[v].abs() <= ZERO_TOL;

    let mut dist = vec![None; model.n()];
    dist[target] = Some(0usize);
    let mut queue = VecDeque::from([target]);
    let mut best: Option<(usize, usize)> = None;
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        if let Some((k, _)) = best {
            if d >= k {
                break;
            }
        }
        for &(u, _) in model.in_edges(v) {
            if dist[u].is_some() {
                continue;
            }
            dist[u] = Some(d + 1);
            if is_zero(u) {
                queue.push_back(u);
            } else {
                best = match best {
                    Some((k, s)) if k < d + 1 || (k == d + 1 && s < u) => Some((k, s)),
                    _ => Some((d + 1, u)),
                };
            }
        }
    }

    let Some((length, start)) = best else {
        return Ok(None);
    };
    let mut vertices = vec![start];
    let mut cur = start;
    for step in (0..length).rev() {
        cur = model
            .out_edges(cur)
            .iter()
            .map(|&(w, _)| w)
            .find(|&w| dist[w] == Some(step) && is_zero(w))
            .expect("breadth-first distances admit a descent");
        vertices.push(cur);
    }
    debug_assert_eq!(cur, target);
    Ok(Some(SupportingPath { length, vertices }))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn k3_is_valid_with_all_roots() {
        let m = k3();
        assert_eq!(m.roots(), &[0, 1, 2]);
        assert_eq!(m.edge_count(), 6);
    }

    #[test]
    fn leaf_is_not_a_root() {
        let m = k3_leaf();
        assert_eq!(m.roots(), &[0, 1, 2]);
        assert!(!m.is_root(3));
    }

    #[test]
    fn heavy_weight_rejected() {
        let mut raw = k3_raw();
        raw.edges[0].2 = 0.6;
        raw.edges[1].2 = 0.4;
        let err = validate_network(&raw).unwrap_err();
        assert!(err.defects.contains(&Defect::WeightOutOfRange(0, 1, 0.6)));
    }

    #[test]
    fn structural_defects_all_reported() {
        let raw = RawNetwork {
            n: 3,
            edges: vec![(0, 0, 0.5), (0, 1, 0.5), (0, 1, 0.5), (1, 2, 1.0)],
        };
        let err = validate_network(&raw).unwrap_err();
        assert!(err.defects.contains(&Defect::SelfLoop(0)));
        assert!(err.defects.contains(&Defect::DuplicateEdge(0, 1)));
        assert!(err.defects.contains(&Defect::OutDegreeTooSmall { vertex: 1, degree: 1 }));
        assert!(err.defects.contains(&Defect::OutDegreeTooSmall { vertex: 2, degree: 0 }));
        assert!(err.defects.contains(&Defect::RowSumViolation(2, 0.0)));
        assert!(err.defects.contains(&Defect::WeightOutOfRange(1, 2, 1.0)));
    }

    #[test]
    fn out_of_range_index_short_circuits() {
        let raw = RawNetwork {
            n: 2,
            edges: vec![(0, 5, 0.5)],
        };
        let err = validate_network(&raw).unwrap_err();
        assert_eq!(err.defects, vec![Defect::IndexOutOfRange { src: 0, dst: 5, n: 2 }]);
    }

    #[test]
    fn row_sum_off_by_small_amount_rejected() {
        let mut raw = k3_raw();
        raw.edges[0].2 = 0.5 - 1e-9;
        let err = validate_network(&raw).unwrap_err();
        assert!(matches!(err.defects[0], Defect::RowSumViolation(0, _)));
    }

    #[test]
    fn two_disjoint_triangles_not_rooted() {
        let mut edges = Vec::new();
        for base in [0, 3] {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        edges.push((base + i, base + j, 0.5));
                    }
                }
            }
        }
        let raw = RawNetwork { n: 6, edges };
        assert_eq!(root_set(&raw), Err(Defect::NotRooted { sinks: 2 }));
        let err = validate_network(&raw).unwrap_err();
        assert_eq!(err.defects, vec![Defect::NotRooted { sinks: 2 }]);
    }

    #[test]
    fn root_set_of_cycles() {
        let raw = RawNetwork {
            n: 4,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        };
        assert_eq!(root_set(&raw).unwrap(), vec![0, 1, 2, 3]);
        let raw = RawNetwork {
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
        };
        assert_eq!(root_set(&raw).unwrap(), vec![0, 1]);
    }

    #[test]
    fn two_roots_are_too_few() {
        // 0 <-> 1 form the sink; 2 listens to both. 0 and 1 have out-degree 1,
        // which is reported alongside.
        let raw = RawNetwork {
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 0, 1.0), (2, 0, 0.5), (2, 1, 0.5)],
        };
        let err = validate_network(&raw).unwrap_err();
        assert!(err.defects.contains(&Defect::TooFewRoots(2)));
    }

    #[test]
    fn k3_support_structure() {
        let s = support_structure(&k3(), 0).unwrap();
        assert_eq!(s.difference(0), &[0]);
        assert_eq!(s.difference(1), &[1, 2]);
        assert_eq!(s.alpha(1), Some(0.5));
        assert_eq!(s.alpha(2), Some(0.5));
        assert_eq!(s.layer(1), vec![0, 1, 2]);
        assert_eq!(s.support(), vec![0, 1, 2]);
        assert_eq!(s.max_depth(), 1);
    }

    #[test]
    fn isolated_target_has_trivial_support() {
        let s = support_structure(&k3_leaf(), 3).unwrap();
        assert_eq!(s.support(), vec![3]);
        assert_eq!(s.alpha_entries().count(), 0);
        assert_eq!(s.alpha(3), Some(1.0));
        assert_eq!(s.alpha(0), None);
    }

    #[test]
    fn chain_alpha_matches_path_sum() {
        let m = chain();
        let s = support_structure(&m, 3).unwrap();
        assert_eq!(s.difference(1), &[4]);
        assert_eq!(s.difference(2), &[5]);
        assert_eq!(s.difference(3), &[6]);
        // 6 -> 5 -> 4 -> 3, each weight 1/2.
        assert_eq!(s.alpha(6), Some(0.125));
        for (j, a) in s.alpha_entries() {
            let k = s.depth_of(j).unwrap();
            let sum: f64 = enumerate_paths(&m, j, 3, k).iter().map(|p| path_weight(&m, p)).sum();
            assert!((a - sum).abs() <= 1e-12);
        }
    }

    #[test]
    fn support_of_invalid_vertex() {
        assert!(matches!(
            support_structure(&k3(), 7),
            Err(QueryError::VertexOutOfRange { vertex: 7, n: 3 })
        ));
    }

    #[test]
    fn k3_paths() {
        let m = k3();
        assert_eq!(enumerate_paths(&m, 1, 0, 1), vec![vec![1, 0]]);
        assert_eq!(enumerate_paths(&m, 1, 0, 2), vec![vec![1, 2, 0]]);
        assert!(enumerate_paths(&m, 1, 0, 3).is_empty());
        for k in 1..4 {
            assert!(enumerate_paths(&m, 2, 2, k).is_empty());
        }
    }

    #[test]
    fn critical_path_k3() {
        let p = critical_supporting_path(&k3(), &[0.0, 0.5, 0.5], 0).unwrap().unwrap();
        assert_eq!(p.length, 1);
        assert_eq!(p.vertices, vec![1, 0]);
    }

    #[test]
    fn critical_path_absent_for_isolated_leaf() {
        let third = 1.0 / 3.0;
        let p = critical_supporting_path(&k3_leaf(), &[third, third, third, 0.0], 3).unwrap();
        assert!(p.is_none());
    }

    #[test]
    fn critical_path_along_chain() {
        let m = chain();
        let x = [0.3, 0.3, 0.2, 0.0, 0.0, 0.0, 0.2];
        let p = critical_supporting_path(&m, &x, 3).unwrap().unwrap();
        assert_eq!(p.length, 3);
        assert_eq!(p.vertices, vec![6, 5, 4, 3]);
        // With 5 positive the path shortens to 2.
        let x = [0.3, 0.3, 0.2, 0.0, 0.0, 0.2, 0.0];
        let p = critical_supporting_path(&m, &x, 3).unwrap().unwrap();
        assert_eq!(p.vertices, vec![5, 4, 3]);
    }

    #[test]
    fn critical_path_rejects_positive_target() {
        let err = critical_supporting_path(&k3(), &[0.2, 0.4, 0.4], 0).unwrap_err();
        assert!(matches!(err, QueryError::TargetNotZero { vertex: 0, .. }));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let raw = RawNetwork::from_json_str(r#"{"n": 3, "edges": [[0,1,0.5],[0,2,0.5]]}"#).unwrap();
        assert_eq!(raw.edges.len(), 2);
        assert_eq!(RawNetwork::from_json_str(&raw.to_json_string()).unwrap(), raw);

        let err = RawNetwork::from_json_str("{\"n\": 3}").unwrap_err().to_string();
        assert!(err.contains("missing field `edges`") && err.contains("line 1"), "{err}");
        let err = RawNetwork::from_json_str("{\"n\": 3,\n \"edges\": [[0, 1, NaN]]}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(RawNetwork::from_json_str(r#"{"n": 3, "edges": [[0, 1, 1e999]]}"#).is_err());
        assert!(RawNetwork::from_json_str(r#"{"n": 3, "edges": [], "x": 1}"#).is_err());
    }

    #[test]
    fn root_subnetwork_relabels() {
        let (sub, map) = chain().root_subnetwork();
        assert_eq!(map, vec![0, 1, 2]);
        assert_eq!(sub, k3());
    }
}
