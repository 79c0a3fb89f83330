//! Leaf orderings for the near-field graph and their quality metrics.
//!
//! An ordering is a sequence `order` with `order[k]` the original leaf placed
//! (and eliminated) at step `k`. Ties are always broken by the lowest
//! original index, so every algorithm is deterministic.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::cluster::{ClusterTree, NearFieldGraph};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderingKind {
    None,
    CuthillMcKee,
    ReverseCuthillMcKee,
    King,
    Sloan,
}

impl OrderingKind {
    pub const ALL: [OrderingKind; 5] = [
        OrderingKind::None,
        OrderingKind::CuthillMcKee,
        OrderingKind::ReverseCuthillMcKee,
        OrderingKind::King,
        OrderingKind::Sloan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingKind::None => "none",
            OrderingKind::CuthillMcKee => "cm",
            OrderingKind::ReverseCuthillMcKee => "rcm",
            OrderingKind::King => "king",
            OrderingKind::Sloan => "sloan",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderingKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ordering '{s}' (expected none, cm, rcm, king or sloan)")))
    }
}

/// A permutation of the leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafOrdering {
    order: Vec<usize>,
    kind: OrderingKind,
}

impl LeafOrdering {
    /// Validates that `order` is a bijection on `0..order.len()`.
    pub fn new(order: Vec<usize>, kind: OrderingKind) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &v in &order {
            if v >= order.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("ordering is not a permutation (entry {v})")));
            }
        }
        Ok(Self { order, kind })
    }

    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect(), kind: OrderingKind::None }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `order()[k]` is the original leaf at step `k`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `position()[v]` is the step of original leaf `v`.
    pub fn position(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (k, &v) in self.order.iter().enumerate() {
            pos[v] = k;
        }
        pos
    }

    pub fn kind(&self) -> OrderingKind {
        self.kind
    }
}

/// Runs the named algorithm.
pub fn order_leaves(kind: OrderingKind, g: &NearFieldGraph) -> LeafOrdering {
    match kind {
        OrderingKind::None => LeafOrdering::identity(g.vertex_count()),
        OrderingKind::CuthillMcKee => cuthill_mckee(g),
        OrderingKind::ReverseCuthillMcKee => reverse_cuthill_mckee(g),
        OrderingKind::King => king(g),
        OrderingKind::Sloan => sloan(g),
    }
}

/// BFS levels from `root`.
fn level_structure(g: &NearFieldGraph, root: usize) -> Vec<Vec<usize>> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    dist[root] = 0;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().expect("non-empty") {
            for &w in g.neighbours(v) {
                if dist[w] == usize::MAX {
                    dist[w] = levels.len();
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn bfs_distances(g: &NearFieldGraph, root: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    for (d, level) in level_structure(g, root).into_iter().enumerate() {
        for v in level {
            dist[v] = d;
        }
    }
    dist
}

fn min_degree_vertex(g: &NearFieldGraph, vs: &[usize]) -> usize {
    *vs.iter().min_by_key(|&&v| (g.degree(v), v)).expect("non-empty level")
}

/// Pseudo-peripheral pair `(start, end)` of the component containing `seed`,
/// by repeated BFS from a minimum-degree vertex of the last level.
pub fn pseudo_peripheral_pair(g: &NearFieldGraph, seed: usize) -> (usize, usize) {
    let mut start = seed;
    let mut levels = level_structure(g, start);
    loop {
        let end = min_degree_vertex(g, levels.last().expect("non-empty"));
        let from_end = level_structure(g, end);
        if from_end.len() > levels.len() {
            start = end;
            levels = from_end;
        } else {
            return (start, end);
        }
    }
}

/// Connected components, each sorted, ordered by smallest member.
fn components(g: &NearFieldGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    for v in 0..g.vertex_count() {
        if seen[v] {
            continue;
        }
        let mut comp: Vec<usize> = level_structure(g, v).into_iter().flatten().collect();
        for &w in &comp {
            seen[w] = true;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Seed for the peripheral search: lowest-degree vertex, lowest index on ties.
fn component_seed(g: &NearFieldGraph, comp: &[usize]) -> usize {
    min_degree_vertex(g, comp)
}

/// Cuthill-McKee: BFS from a pseudo-peripheral vertex, visiting the
/// neighbours of each vertex in increasing degree.
pub fn cuthill_mckee(g: &NearFieldGraph) -> LeafOrdering {
    let n = g.vertex_count();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for comp in components(g) {
        let (start, _) = pseudo_peripheral_pair(g, component_seed(g, &comp));
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = g.neighbours(v).iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_unstable_by_key(|&w| (g.degree(w), w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    LeafOrdering { order, kind: OrderingKind::CuthillMcKee }
}

pub fn reverse_cuthill_mckee(g: &NearFieldGraph) -> LeafOrdering {
    let mut order = cuthill_mckee(g).order;
    order.reverse();
    LeafOrdering { order, kind: OrderingKind::ReverseCuthillMcKee }
}

/// King's ordering: grows the numbered set one vertex at a time, choosing
/// from the front the vertex that brings the fewest new vertices into it.
pub fn king(g: &NearFieldGraph) -> LeafOrdering {
    let n = g.vertex_count();
    // 0 = untouched, 1 = in front, 2 = numbered.
    let mut state = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    for comp in components(g) {
        let (start, _) = pseudo_peripheral_pair(g, component_seed(g, &comp));
        let mut front = vec![start];
        state[start] = 1;
        while !front.is_empty() {
            let (idx, _) = front
                .iter()
                .enumerate()
                .map(|(k, &v)| (k, (g.neighbours(v).iter().filter(|&&w| state[w] == 0).count(), v)))
                .min_by_key(|&(_, key)| key)
                .expect("non-empty front");
            let v = front.swap_remove(idx);
            state[v] = 2;
            order.push(v);
            for &w in g.neighbours(v) {
                if state[w] == 0 {
                    state[w] = 1;
                    front.push(w);
                }
            }
        }
    }
    LeafOrdering { order, kind: OrderingKind::King }
}

/// Weight on the current-degree term.
pub const SLOAN_W1: i64 = 2;
/// Weight on the distance to the end vertex.
pub const SLOAN_W2: i64 = 1;

/// Sloan's profile and wavefront reduction with the given weights.
pub fn sloan_weighted(g: &NearFieldGraph, w1: i64, w2: i64) -> LeafOrdering {
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum S {
        Inactive,
        Preactive,
        Active,
        Post,
    }
    let n = g.vertex_count();
    let mut status = vec![S::Inactive; n];
    let mut priority = vec![0i64; n];
    let mut order = Vec::with_capacity(n);
    for comp in components(g) {
        let (start, end) = pseudo_peripheral_pair(g, component_seed(g, &comp));
        let dist = bfs_distances(g, end);
        for &v in &comp {
            priority[v] = w2 * dist[v] as i64 - w1 * (g.degree(v) as i64 + 1);
        }
        let mut queue = vec![start];
        status[start] = S::Preactive;
        while !queue.is_empty() {
            let (idx, _) = queue
                .iter()
                .enumerate()
                .map(|(k, &v)| (k, (std::cmp::Reverse(priority[v]), v)))
                .min_by_key(|&(_, key)| key)
                .expect("non-empty queue");
            let v = queue.swap_remove(idx);
            if status[v] == S::Preactive {
                for &w in g.neighbours(v) {
                    priority[w] += w1;
                    if status[w] == S::Inactive {
                        status[w] = S::Preactive;
                        queue.push(w);
                    }
                }
            }
            status[v] = S::Post;
            order.push(v);
            for &w in g.neighbours(v) {
                if status[w] != S::Preactive {
                    continue;
                }
                status[w] = S::Active;
                priority[w] += w1;
                for &x in g.neighbours(w) {
                    if status[x] == S::Post {
                        continue;
                    }
                    priority[x] += w1;
                    if status[x] == S::Inactive {
                        status[x] = S::Preactive;
                        queue.push(x);
                    }
                }
            }
        }
    }
    LeafOrdering { order, kind: OrderingKind::Sloan }
}

pub fn sloan(g: &NearFieldGraph) -> LeafOrdering {
    sloan_weighted(g, SLOAN_W1, SLOAN_W2)
}

/// Bandwidth, profile and wavefront of a graph under an ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderingMetrics {
    /// `max |pos(u) - pos(v)|` over edges.
    pub bandwidth: usize,
    /// Sum over rows of the distance from the diagonal to the first entry.
    pub profile: usize,
    /// Largest number of active vertices at any step.
    pub max_wavefront: usize,
    /// Sum of the wavefront over all steps.
    pub total_wavefront: usize,
}

pub fn metrics(g: &NearFieldGraph, ordering: &LeafOrdering) -> OrderingMetrics {
    let pos = ordering.position();
    let n = g.vertex_count();
    let mut bandwidth = 0;
    let mut profile = 0;
    // A vertex joins the front at the first step one of its neighbours (or
    // itself) is numbered, and leaves it once it is numbered itself.
    let mut enter = vec![0usize; n];
    for v in 0..n {
        let first = g.neighbours(v).iter().map(|&w| pos[w]).min().unwrap_or(pos[v]).min(pos[v]);
        profile += pos[v] - first;
        enter[v] = first;
        for &w in g.neighbours(v) {
            bandwidth = bandwidth.max(pos[v].abs_diff(pos[w]));
        }
    }
    let mut delta = vec![0isize; n + 1];
    for v in 0..n {
        delta[enter[v]] += 1;
        delta[pos[v] + 1] -= 1;
    }
    let (mut cur, mut max_wavefront, mut total_wavefront) = (0isize, 0usize, 0usize);
    for d in &delta[..n] {
        cur += d;
        max_wavefront = max_wavefront.max(cur as usize);
        total_wavefront += cur as usize;
    }
    OrderingMetrics { bandwidth, profile, max_wavefront, total_wavefront }
}

/// A leaf ordering together with the unknown permutation it induces.
#[derive(Clone, Debug)]
pub struct OrderingResult {
    pub leaves: LeafOrdering,
    /// `unknowns[p]` is the basis index at position `p` once leaves are
    /// regrouped in the new order.
    pub unknowns: Vec<usize>,
    /// New leaf number of each original leaf.
    pub leaf_position: Vec<usize>,
}

/// Regroups the unknowns of `tree` by the new leaf order.
pub fn apply_ordering(ordering: &LeafOrdering, tree: &ClusterTree) -> Result<OrderingResult> {
    if ordering.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch { expected: tree.leaf_count(), got: ordering.len() });
    }
    let unknowns = ordering.order().iter().flat_map(|&l| tree.indices(tree.leaves()[l]).iter().copied()).collect();
    Ok(OrderingResult { leaves: ordering.clone(), unknowns, leaf_position: ordering.position() })
}
