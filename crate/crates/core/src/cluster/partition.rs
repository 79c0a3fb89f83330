use std::fmt::Write as _;
use std::path::Path;

use super::tree::{ClusterNode, ClusterTree};
use crate::error::{Error, Result};

/// Default admissibility parameter. With the gap metric below this is the
/// smallest round value that makes every non-touching pair of equal cubes
/// admissible (the threshold is `sqrt(3) / (2 - sqrt(3))`, about 6.46), so
/// the near zone of a leaf is itself plus its up to 26 touching neighbours.
pub const DEFAULT_ETA: f64 = 6.5;

/// Gap between two cubes: center distance minus both half-diagonals, floored at 0.
pub fn cube_gap(t: &ClusterNode, s: &ClusterNode) -> f64 {
    let half_diag = |n: &ClusterNode| 3f64.sqrt() * n.half_width;
    // Summed first so the result is symmetric in (t, s) to the last bit.
    (t.center.distance(s.center) - (half_diag(t) + half_diag(s))).max(0.0)
}

/// `min(dia_t, dia_s) <= eta * gap(t, s)`.
pub fn admissible(t: &ClusterNode, s: &ClusterNode, eta: f64) -> bool {
    let gap = cube_gap(t, s);
    gap > 0.0 && t.diameter().min(s.diameter()) <= eta * gap
}

/// An admissible node pair stored in low-rank form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FarBlock {
    pub t: usize,
    pub s: usize,
    pub level: usize,
}

/// Near (dense, leaf-pair) and far (admissible node-pair) blocks covering N x N.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    /// Leaf pairs, sorted; contains `(s, t)` whenever it contains `(t, s)`.
    near: Vec<(usize, usize)>,
    /// Node pairs, sorted.
    far: Vec<FarBlock>,
    /// Per leaf, the sorted leaves it interacts with densely (itself included).
    neighbours: Vec<Vec<usize>>,
    eta: f64,
}

impl BlockPartition {
    /// Dual-tree traversal from the root pair: admissible pairs become far
    /// blocks, leaf-leaf pairs that are not admissible become near blocks,
    /// and everything else is refined (the non-leaf side, or both).
    pub fn build(tree: &ClusterTree, eta: f64) -> Self {
        let mut near = Vec::new();
        let mut far = Vec::new();
        let mut stack = vec![(tree.root(), tree.root())];
        while let Some((t, s)) = stack.pop() {
            let (nt, ns) = (tree.node(t), tree.node(s));
            if admissible(nt, ns, eta) {
                far.push(FarBlock { t, s, level: nt.level.max(ns.level) });
            } else if nt.is_leaf() && ns.is_leaf() {
                near.push((nt.leaf.expect("leaf"), ns.leaf.expect("leaf")));
            } else if nt.is_leaf() {
                stack.extend(ns.children.iter().map(|&c| (t, c)));
            } else if ns.is_leaf() {
                stack.extend(nt.children.iter().map(|&c| (c, s)));
            } else {
                for &ct in &nt.children {
                    stack.extend(ns.children.iter().map(|&cs| (ct, cs)));
                }
            }
        }
        near.sort_unstable();
        far.sort_unstable();
        let mut neighbours = vec![Vec::new(); tree.leaf_count()];
        for &(t, s) in &near {
            neighbours[t].push(s);
        }
        Self { near, far, neighbours, eta }
    }

    pub fn near(&self) -> &[(usize, usize)] {
        &self.near
    }

    pub fn far(&self) -> &[FarBlock] {
        &self.far
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn leaf_count(&self) -> usize {
        self.neighbours.len()
    }

    /// Leaves in the near zone of `leaf`, including itself, sorted.
    pub fn neighbours(&self, leaf: usize) -> &[usize] {
        &self.neighbours[leaf]
    }

    pub fn is_near(&self, t: usize, s: usize) -> bool {
        self.neighbours[t].binary_search(&s).is_ok()
    }

    /// Sum of `rows * cols` over all blocks; equals `N^2` for a valid partition.
    pub fn covered_entries(&self, tree: &ClusterTree) -> usize {
        let near: usize = self.near.iter().map(|&(t, s)| tree.leaf_range(t).len() * tree.leaf_range(s).len()).sum();
        let far: usize = self.far.iter().map(|b| tree.node(b.t).len() * tree.node(b.s).len()).sum();
        near + far
    }

    /// Number of stored entries in the dense near field.
    pub fn near_entries(&self, tree: &ClusterTree) -> usize {
        self.near.iter().map(|&(t, s)| tree.leaf_range(t).len() * tree.leaf_range(s).len()).sum()
    }

    /// Leaf graph with an edge per off-diagonal near pair.
    pub fn near_field_graph(&self) -> NearFieldGraph {
        let adj = self
            .neighbours
            .iter()
            .enumerate()
            .map(|(t, ns)| ns.iter().copied().filter(|&s| s != t).collect())
            .collect();
        NearFieldGraph { adj }
    }
}

/// Undirected simple graph over leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearFieldGraph {
    adj: Vec<Vec<usize>>,
}

impl NearFieldGraph {
    /// Builds a graph from an edge list; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        Ok(Self { adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (a, ns) in self.adj.iter().enumerate() {
            e.extend(ns.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        e
    }
}

/// One line of a pattern dump.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternEntry {
    /// Leaf index for near blocks, node id for far blocks.
    pub t: usize,
    pub s: usize,
    pub far: bool,
    pub level: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlockPartition {
    pub fn pattern(&self, tree: &ClusterTree) -> Vec<PatternEntry> {
        let mut out = Vec::with_capacity(self.near.len() + self.far.len());
        for &(t, s) in &self.near {
            out.push(PatternEntry {
                t,
                s,
                far: false,
                level: tree.leaf_node(t).level,
                rows: tree.leaf_range(t).len(),
                cols: tree.leaf_range(s).len(),
            });
        }
        for b in &self.far {
            out.push(PatternEntry {
                t: b.t,
                s: b.s,
                far: true,
                level: b.level,
                rows: tree.node(b.t).len(),
                cols: tree.node(b.s).len(),
            });
        }
        out
    }
}

/// Text form: one `t s near|far level rows cols` line per block.
pub fn write_pattern(entries: &[PatternEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        let kind = if e.far { "far" } else { "near" };
        let _ = writeln!(s, "{} {} {} {} {} {}", e.t, e.s, kind, e.level, e.rows, e.cols);
    }
    s
}

pub fn parse_pattern(text: &str, path: &Path) -> Result<Vec<PatternEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<usize>().map_err(|_| err(format!("cannot parse `{}`", f[k])));
        let far = match f[2] {
            "near" => false,
            "far" => true,
            other => return Err(err(format!("unknown block kind `{other}`"))),
        };
        out.push(PatternEntry { t: num(0)?, s: num(1)?, far, level: num(3)?, rows: num(4)?, cols: num(5)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::tree::DEFAULT_MAX_LEVEL;
    use crate::geom::Vec3;
    use crate::mesh::{build_rwg, generate_cube, generate_plate};

    fn cube_node(center: Vec3, half: f64) -> ClusterNode {
        ClusterNode { center, half_width: half, level: 0, range: 0..1, parent: None, children: vec![], leaf: None }
    }

    #[test]
    fn admissibility_examples() {
        let a = cube_node(Vec3::ZERO, 0.5);
        assert!(!admissible(&a, &a, 100.0));
        let far = cube_node(Vec3::new(4.0, 0.0, 0.0), 0.5);
        assert!((cube_gap(&a, &far) - (4.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!(admissible(&a, &far, 1.0));
        let touching = cube_node(Vec3::new(1.0, 0.0, 0.0), 0.5);
        assert_eq!(cube_gap(&a, &touching), 0.0);
        assert!(!admissible(&a, &touching, 1e6));
    }

    #[test]
    fn default_eta_separates_touching_from_next_ring() {
        let a = cube_node(Vec3::ZERO, 0.5);
        let corner = cube_node(Vec3::new(1.0, 1.0, 1.0), 0.5);
        let next = cube_node(Vec3::new(2.0, 0.0, 0.0), 0.5);
        assert!(!admissible(&a, &corner, DEFAULT_ETA));
        assert!(admissible(&a, &next, DEFAULT_ETA));
    }

    fn check_partition(tree: &ClusterTree, p: &BlockPartition, eta: f64) {
        let n = tree.dim();
        assert_eq!(p.covered_entries(tree), n * n);
        for &(t, s) in p.near() {
            assert!(p.is_near(s, t));
            assert!(!admissible(tree.leaf_node(t), tree.leaf_node(s), eta));
        }
        for b in p.far() {
            assert!(admissible(tree.node(b.t), tree.node(b.s), eta));
        }
        // No entry is covered twice: mark every (row leaf, column leaf) cell.
        let leaves = tree.leaf_count();
        let mut mark = vec![0u8; leaves * leaves];
        let leaves_under = |id: usize| -> Vec<usize> {
            let node = tree.node(id);
            (0..leaves).filter(|&l| {
                let r = tree.leaf_range(l);
                r.start >= node.range.start && r.end <= node.range.end
            })
            .collect()
        };
        for &(t, s) in p.near() {
            mark[t * leaves + s] += 1;
        }
        for b in p.far() {
            for t in leaves_under(b.t) {
                for s in leaves_under(b.s) {
                    mark[t * leaves + s] += 1;
                }
            }
        }
        assert!(mark.iter().all(|&m| m == 1));
    }

    #[test]
    fn partition_is_exact_for_several_eta() {
        let basis = build_rwg(&generate_plate(3.0, 2.0, 8, 300e6).unwrap()).unwrap();
        let tree = ClusterTree::from_basis(&basis, 40, DEFAULT_MAX_LEVEL).unwrap();
        for eta in [0.5, 1.0, 2.0, DEFAULT_ETA] {
            check_partition(&tree, &BlockPartition::build(&tree, eta), eta);
        }
        let basis = build_rwg(&generate_cube(1.0, 8, 300e6).unwrap()).unwrap();
        let tree = ClusterTree::from_basis(&basis, 60, DEFAULT_MAX_LEVEL).unwrap();
        for eta in [0.5, 1.0, 2.0, DEFAULT_ETA] {
            check_partition(&tree, &BlockPartition::build(&tree, eta), eta);
        }
    }

    #[test]
    fn single_leaf_tree() {
        let pts = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        let tree = ClusterTree::build(&pts, 10, 5).unwrap();
        let p = BlockPartition::build(&tree, 1.0);
        assert_eq!(p.near(), &[(0, 0)]);
        assert!(p.far().is_empty());
    }

    #[test]
    fn cube_leaves_have_at_most_26_neighbours() {
        let basis = build_rwg(&generate_cube(2.0, 8, 300e6).unwrap()).unwrap();
        let tree = ClusterTree::from_basis(&basis, 30, DEFAULT_MAX_LEVEL).unwrap();
        let p = BlockPartition::build(&tree, DEFAULT_ETA);
        let g = p.near_field_graph();
        assert!(g.max_degree() <= 26, "max degree {}", g.max_degree());
        for v in 0..g.vertex_count() {
            for &w in g.neighbours(v) {
                assert!(g.neighbours(w).contains(&v));
                assert_ne!(v, w);
            }
        }
    }

    #[test]
    fn strip_graph_is_path_like() {
        let pts: Vec<Vec3> = (0..64).map(|i| Vec3::new(i as f64 + 0.5, 0.25, 0.25)).collect();
        let tree = ClusterTree::build(&pts, 4, 20).unwrap();
        let g = BlockPartition::build(&tree, DEFAULT_ETA).near_field_graph();
        assert!(g.max_degree() <= 2);
        assert_eq!(g.edge_count(), tree.leaf_count() - 1);
    }

    #[test]
    fn partition_is_deterministic() {
        let basis = build_rwg(&generate_plate(2.0, 2.0, 8, 300e6).unwrap()).unwrap();
        let a = ClusterTree::from_basis(&basis, 30, DEFAULT_MAX_LEVEL).unwrap();
        let b = ClusterTree::from_basis(&basis, 30, DEFAULT_MAX_LEVEL).unwrap();
        assert_eq!(a.perm(), b.perm());
        let (pa, pb) = (BlockPartition::build(&a, 1.0), BlockPartition::build(&b, 1.0));
        assert_eq!(pa.near(), pb.near());
        assert_eq!(pa.far(), pb.far());
    }

    #[test]
    fn pattern_round_trip() {
        let basis = build_rwg(&generate_plate(2.0, 2.0, 8, 300e6).unwrap()).unwrap();
        let tree = ClusterTree::from_basis(&basis, 30, DEFAULT_MAX_LEVEL).unwrap();
        let p = BlockPartition::build(&tree, DEFAULT_ETA);
        let entries = p.pattern(&tree);
        assert_eq!(entries.iter().filter(|e| !e.far).count(), p.near().len());
        let back = parse_pattern(&write_pattern(&entries), Path::new("p.txt")).unwrap();
        assert_eq!(back, entries);
        assert!(parse_pattern("1 2 mid 0 1 1\n", Path::new("p.txt")).is_err());
    }

    #[test]
    fn graph_from_edges_drops_loops_and_duplicates() {
        let g = NearFieldGraph::from_edges(4, &[(0, 1), (1, 0), (2, 2), (2, 3)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbours(2), &[3]);
        assert!(NearFieldGraph::from_edges(2, &[(0, 5)]).is_err());
    }
}
