use std::ops::Range;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::RwgBasis;

/// Default maximum number of unknowns per leaf.
pub const DEFAULT_LEAF_SIZE: usize = 100;
/// Depth cap used when no explicit level limit is given.
pub const DEFAULT_MAX_LEVEL: usize = 20;

/// An axis-aligned cube of the octree.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterNode {
    pub center: Vec3,
    pub half_width: f64,
    pub level: usize,
    /// Range of positions in tree order.
    pub range: Range<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Leaf number in tree order, for leaves.
    pub leaf: Option<usize>,
}

impl ClusterNode {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Cube diagonal.
    pub fn diameter(&self) -> f64 {
        2.0 * 3f64.sqrt() * self.half_width
    }
}

/// Octree over basis positions. Unknowns are renumbered into "tree order", in
/// which every node covers a contiguous range.
#[derive(Clone, Debug)]
pub struct ClusterTree {
    nodes: Vec<ClusterNode>,
    /// `perm[p]` is the basis index at tree position `p`.
    perm: Vec<usize>,
    /// `position[i]` is the tree position of basis `i`.
    position: Vec<usize>,
    leaves: Vec<usize>,
    leaf_size: usize,
    max_level: usize,
}

impl ClusterTree {
    /// Recursively splits the padded bounding cube of `points` into octants,
    /// dropping empty children, until a node holds at most `leaf_size` points
    /// or reaches `max_level`.
    pub fn build(points: &[Vec3], leaf_size: usize, max_level: usize) -> Result<Self> {
        if leaf_size == 0 {
            return Err(Error::InvalidArgument("leaf size must be at least 1".into()));
        }
        let n = points.len();
        let (center, half) = bounding_cube(points);
        let mut tree = Self {
            nodes: vec![ClusterNode {
                center,
                half_width: half,
                level: 0,
                range: 0..n,
                parent: None,
                children: Vec::new(),
                leaf: None,
            }],
            perm: (0..n).collect(),
            position: Vec::new(),
            leaves: Vec::new(),
            leaf_size,
            max_level,
        };
        tree.split(0, points);
        tree.position = vec![0; n];
        for (p, &i) in tree.perm.iter().enumerate() {
            tree.position[i] = p;
        }
        Ok(tree)
    }

    /// Tree over RWG edge midpoints.
    pub fn from_basis(basis: &RwgBasis, leaf_size: usize, max_level: usize) -> Result<Self> {
        Self::build(&basis.midpoints(), leaf_size, max_level)
    }

    fn split(&mut self, id: usize, points: &[Vec3]) {
        let (range, level, center, half) = {
            let node = &self.nodes[id];
            (node.range.clone(), node.level, node.center, node.half_width)
        };
        if range.len() <= self.leaf_size || level >= self.max_level {
            self.nodes[id].leaf = Some(self.leaves.len());
            self.leaves.push(id);
            return;
        }
        let octant = |p: Vec3| -> usize {
            (p.x >= center.x) as usize | ((p.y >= center.y) as usize) << 1 | ((p.z >= center.z) as usize) << 2
        };
        let mut buckets: [Vec<usize>; 8] = Default::default();
        for &i in &self.perm[range.clone()] {
            buckets[octant(points[i])].push(i);
        }
        let mut start = range.start;
        let mut children = Vec::new();
        for (o, bucket) in buckets.iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            self.perm[start..start + bucket.len()].copy_from_slice(bucket);
            let sign = |bit: usize| if o & bit != 0 { 0.5 } else { -0.5 };
            let c = center + Vec3::new(sign(1), sign(2), sign(4)) * half;
            children.push(self.nodes.len());
            self.nodes.push(ClusterNode {
                center: c,
                half_width: 0.5 * half,
                level: level + 1,
                range: start..start + bucket.len(),
                parent: Some(id),
                children: Vec::new(),
                leaf: None,
            });
            start += bucket.len();
        }
        self.nodes[id].children = children.clone();
        for c in children {
            self.split(c, points);
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ClusterNode {
        &self.nodes[id]
    }

    /// Node ids of the leaves, in tree order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_node(&self, leaf: usize) -> &ClusterNode {
        &self.nodes[self.leaves[leaf]]
    }

    /// Tree-order positions covered by a leaf.
    pub fn leaf_range(&self, leaf: usize) -> Range<usize> {
        self.leaf_node(leaf).range.clone()
    }

    /// Basis indices held by a node.
    pub fn indices(&self, id: usize) -> &[usize] {
        &self.perm[self.nodes[id].range.clone()]
    }

    /// Tree position to basis index.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Basis index to tree position.
    pub fn position(&self) -> &[usize] {
        &self.position
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Deepest level present.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Number of nodes per level, from the root down.
    pub fn nodes_per_level(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth() + 1];
        for n in &self.nodes {
            counts[n.level] += 1;
        }
        counts
    }

    /// Gathers a basis-ordered vector into tree order.
    pub fn to_tree_order<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| x[i]).collect()
    }

    /// Scatters a tree-ordered vector back to basis order.
    pub fn to_basis_order<T: Copy + Default>(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); y.len()];
        for (p, &i) in self.perm.iter().enumerate() {
            out[i] = y[p];
        }
        out
    }
}

fn bounding_cube(points: &[Vec3]) -> (Vec3, f64) {
    if points.is_empty() {
        return (Vec3::ZERO, 1.0);
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let center = (lo + hi) * 0.5;
    let extent = (hi - lo).max_abs();
    let scale = lo.max_abs().max(hi.max_abs()).max(f64::MIN_POSITIVE);
    // Pad so no point sits exactly on the outer boundary.
    let half = (0.5 * extent * (1.0 + 1e-10)).max(1e-12 * scale);
    (center, half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rwg, generate_plate};

    fn plate_tree(leaf: usize) -> (ClusterTree, usize) {
        let basis = build_rwg(&generate_plate(5.0, 5.0, 9, 300e6).unwrap()).unwrap();
        (ClusterTree::from_basis(&basis, leaf, DEFAULT_MAX_LEVEL).unwrap(), basis.len())
    }

    #[test]
    fn small_set_is_a_single_leaf() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let t = ClusterTree::build(&pts, 10, DEFAULT_MAX_LEVEL).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.leaf_count(), 1);
    }

    #[test]
    fn leaves_partition_the_unknowns() {
        let (t, n) = plate_tree(100);
        let mut seen = vec![0; n];
        let mut next = 0;
        for leaf in 0..t.leaf_count() {
            let r = t.leaf_range(leaf);
            assert_eq!(r.start, next);
            next = r.end;
            assert!(r.len() <= 100);
            for &i in t.indices(t.leaves()[leaf]) {
                seen[i] += 1;
            }
        }
        assert_eq!(next, n);
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn children_partition_parent() {
        let (t, _) = plate_tree(50);
        for node in t.nodes() {
            if node.is_leaf() {
                continue;
            }
            let mut start = node.range.start;
            for &c in &node.children {
                let child = t.node(c);
                assert_eq!(child.range.start, start);
                assert!(!child.is_empty());
                assert_eq!(child.level, node.level + 1);
                start = child.range.end;
            }
            assert_eq!(start, node.range.end);
        }
    }

    #[test]
    fn planar_geometry_grows_fourfold_per_level() {
        let (t, _) = plate_tree(30);
        let counts = t.nodes_per_level();
        for l in 1..counts.len() - 1 {
            if counts[l] >= 4 {
                let g = counts[l + 1] as f64 / counts[l] as f64;
                assert!((3.5..=4.5).contains(&g), "level {l}: growth {g}");
            }
        }
    }

    #[test]
    fn level_cap_stops_recursion() {
        let (t, _) = plate_tree(1);
        let capped = ClusterTree::build(
            &(0..1000).map(|i| Vec3::new(i as f64, (i * 7 % 13) as f64, 0.0)).collect::<Vec<_>>(),
            1,
            2,
        )
        .unwrap();
        assert_eq!(capped.depth(), 2);
        assert!(t.depth() > 2);
    }

    #[test]
    fn permutation_round_trip() {
        let (t, n) = plate_tree(64);
        let x: Vec<usize> = (0..n).collect();
        assert_eq!(t.to_basis_order(&t.to_tree_order(&x)), x);
        for i in 0..n {
            assert_eq!(t.perm()[t.position()[i]], i);
        }
    }

    #[test]
    fn zero_leaf_size_is_rejected() {
        assert!(ClusterTree::build(&[Vec3::ZERO], 0, 4).is_err());
    }
}
