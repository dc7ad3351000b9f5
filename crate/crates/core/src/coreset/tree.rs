//! Sliding-window coreset tree.
//!
//! Leaves hold chunk coresets in arrival order; every inner node has two or
//! three children, all leaves sit at the same depth, and each inner node
//! caches the merge of its children. Appending a newest leaf or removing the
//! oldest one touches only the nodes on the path to that end of the tree
//! (plus at most one sibling per level), so both cost `O(log n)` merges.

use nalgebra::{DMatrix, DMatrixView};

use super::ScatterCoreset;
use crate::{Error, Result};

#[derive(Debug, Clone)]
enum Node {
    Leaf { coreset: ScatterCoreset, span: u64 },
    Inner(Inner),
}

#[derive(Debug, Clone)]
struct Inner {
    children: Vec<Node>,
    cache: ScatterCoreset,
    span: u64,
}

impl Node {
    fn coreset(&self) -> &ScatterCoreset {
        match self {
            Node::Leaf { coreset, .. } => coreset,
            Node::Inner(inner) => &inner.cache,
        }
    }

    fn span(&self) -> u64 {
        match self {
            Node::Leaf { span, .. } => *span,
            Node::Inner(inner) => inner.span,
        }
    }
}

impl Inner {
    fn from_children(children: Vec<Node>, recomputations: &mut u64) -> Inner {
        let mut inner = Inner {
            cache: children[0].coreset().clone(),
            span: 0,
            children,
        };
        inner.recompute(recomputations);
        inner
    }

    fn recompute(&mut self, recomputations: &mut u64) {
        self.cache = ScatterCoreset::merge_all(self.children.iter().map(Node::coreset))
            .expect("children share d");
        self.span = self.children.iter().map(Node::span).sum();
        *recomputations += 1;
    }
}

/// Returns a new right sibling when `node` overflowed and had to split.
fn push_back(node: &mut Node, leaf: Node, recomputations: &mut u64) -> Option<Node> {
    let inner = match node {
        Node::Leaf { .. } => return Some(leaf),
        Node::Inner(inner) => inner,
    };
    let last = inner.children.last_mut().expect("inner nodes have children");
    if let Some(sibling) = push_back(last, leaf, recomputations) {
        inner.children.push(sibling);
    }
    if inner.children.len() == 4 {
        let right = inner.children.split_off(2);
        inner.recompute(recomputations);
        return Some(Node::Inner(Inner::from_children(right, recomputations)));
    }
    inner.recompute(recomputations);
    None
}

/// Removes and returns the oldest leaf below `inner`. On return `inner` may
/// hold a single child; its parent repairs that and `inner`'s cache is then
/// stale.
fn pop_front(inner: &mut Inner, recomputations: &mut u64) -> Node {
    let removed = match &mut inner.children[0] {
        Node::Leaf { .. } => inner.children.remove(0),
        Node::Inner(first) => {
            let removed = pop_front(first, recomputations);
            if first.children.len() == 1 {
                repair_front(inner, recomputations);
            }
            removed
        }
    };
    if inner.children.len() >= 2 {
        inner.recompute(recomputations);
    }
    removed
}

/// `inner.children[0]` has one child left: borrow from or fold into its
/// right sibling.
fn repair_front(inner: &mut Inner, recomputations: &mut u64) {
    let (head, tail) = inner.children.split_at_mut(1);
    let (Node::Inner(first), Node::Inner(sibling)) = (&mut head[0], &mut tail[0]) else {
        unreachable!("siblings of an inner node are inner nodes");
    };
    if sibling.children.len() == 3 {
        let moved = sibling.children.remove(0);
        first.children.push(moved);
        first.recompute(recomputations);
        sibling.recompute(recomputations);
    } else {
        let orphan = first.children.pop().expect("one child left");
        sibling.children.insert(0, orphan);
        sibling.recompute(recomputations);
        inner.children.remove(0);
    }
}

/// Coreset tree supporting newest-leaf insertion and oldest-leaf deletion,
/// with an optional bound on the number of samples kept.
#[derive(Debug, Clone)]
pub struct CoresetWindowTree {
    d: usize,
    leaf_capacity: usize,
    window_length: Option<u64>,
    root: Option<Node>,
    leaves: usize,
    absorbed_total: u64,
    recomputations: u64,
}

impl CoresetWindowTree {
    /// `leaf_capacity` only affects [`insert_samples`](Self::insert_samples),
    /// which cuts a sample block into leaves of at most that many samples.
    pub fn new(d: usize, leaf_capacity: usize, window_length: Option<u64>) -> Result<Self> {
        if d == 0 || leaf_capacity == 0 {
            return Err(Error::Spec("tree needs d >= 1 and leaf_capacity >= 1".into()));
        }
        if window_length == Some(0) {
            return Err(Error::Spec("window_length must be positive".into()));
        }
        Ok(CoresetWindowTree {
            d,
            leaf_capacity,
            window_length,
            root: None,
            leaves: 0,
            absorbed_total: 0,
            recomputations: 0,
        })
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn window_length(&self) -> Option<u64> {
        self.window_length
    }

    pub fn live_leaves(&self) -> usize {
        self.leaves
    }

    /// Samples represented by the live leaves.
    pub fn live_span(&self) -> u64 {
        self.root.as_ref().map_or(0, Node::span)
    }

    /// Samples ever inserted, evicted ones included.
    pub fn absorbed_total(&self) -> u64 {
        self.absorbed_total
    }

    /// Cumulative count of inner-node cache recomputations.
    pub fn recomputations(&self) -> u64 {
        self.recomputations
    }

    /// Edges from the root to any leaf; 0 for a single leaf or empty tree.
    pub fn height(&self) -> usize {
        let mut h = 0;
        let mut node = self.root.as_ref();
        while let Some(Node::Inner(inner)) = node {
            h += 1;
            node = inner.children.first();
        }
        h
    }

    pub fn root(&self) -> ScatterCoreset {
        match &self.root {
            Some(node) => node.coreset().clone(),
            None => ScatterCoreset::new(self.d).expect("d >= 1 checked at construction"),
        }
    }

    pub fn root_scatter(&self) -> DMatrix<f64> {
        match &self.root {
            Some(node) => node.coreset().scatter(),
            None => DMatrix::zeros(self.d, self.d),
        }
    }

    /// Append `chunk` as the newest leaf covering `span` samples, then evict
    /// oldest leaves while the live span exceeds the window. Returns the
    /// number of leaves evicted.
    pub fn insert(&mut self, chunk: ScatterCoreset, span: u64) -> Result<usize> {
        if chunk.channels() != self.d {
            return Err(Error::Dimension {
                context: "CoresetWindowTree::insert",
                expected: self.d,
                found: chunk.channels(),
            });
        }
        if span == 0 {
            return Err(Error::Spec("chunk span must be at least one sample".into()));
        }
        let leaf = Node::Leaf { coreset: chunk, span };
        self.root = Some(match self.root.take() {
            None => leaf,
            Some(mut root) => match push_back(&mut root, leaf, &mut self.recomputations) {
                None => root,
                Some(sibling) => Node::Inner(Inner::from_children(vec![root, sibling], &mut self.recomputations)),
            },
        });
        self.leaves += 1;
        self.absorbed_total += span;

        let mut evicted = 0;
        if let Some(window) = self.window_length {
            while self.live_span() > window {
                self.delete_oldest()?;
                evicted += 1;
            }
        }
        Ok(evicted)
    }

    /// Cut a `d x m` block into leaves of at most `leaf_capacity` samples.
    pub fn insert_samples(&mut self, x: DMatrixView<'_, f64>) -> Result<usize> {
        let mut evicted = 0;
        let mut start = 0;
        while start < x.ncols() {
            let n = self.leaf_capacity.min(x.ncols() - start);
            let chunk = ScatterCoreset::from_samples(x.columns(start, n))?;
            evicted += self.insert(chunk, n as u64)?;
            start += n;
        }
        Ok(evicted)
    }

    /// Remove the oldest leaf and return its coreset.
    pub fn delete_oldest(&mut self) -> Result<ScatterCoreset> {
        let root = self.root.take().ok_or(Error::EmptyStructure("CoresetWindowTree"))?;
        let (removed, rest) = match root {
            leaf @ Node::Leaf { .. } => (leaf, None),
            Node::Inner(mut inner) => {
                let removed = pop_front(&mut inner, &mut self.recomputations);
                let rest = if inner.children.len() == 1 {
                    inner.children.pop()
                } else {
                    Some(Node::Inner(inner))
                };
                (removed, rest)
            }
        };
        self.root = rest;
        self.leaves -= 1;
        match removed {
            Node::Leaf { coreset, .. } => Ok(coreset),
            Node::Inner(_) => unreachable!("pop_front returns leaves"),
        }
    }

    /// Check the 2-3 shape, uniform leaf depth and cached spans.
    pub fn check_structure(&self) -> std::result::Result<(), String> {
        fn walk(node: &Node, depth: usize, leaf_depth: &mut Option<usize>, leaves: &mut usize) -> std::result::Result<u64, String> {
            match node {
                Node::Leaf { span, .. } => {
                    *leaves += 1;
                    match leaf_depth {
                        None => *leaf_depth = Some(depth),
                        Some(d) if *d != depth => return Err(format!("leaf at depth {depth}, expected {d}")),
                        Some(_) => {}
                    }
                    Ok(*span)
                }
                Node::Inner(inner) => {
                    if !(2..=3).contains(&inner.children.len()) {
                        return Err(format!("inner node with {} children", inner.children.len()));
                    }
                    let mut span = 0;
                    for c in &inner.children {
                        span += walk(c, depth + 1, leaf_depth, leaves)?;
                    }
                    if span != inner.span {
                        return Err(format!("cached span {} but children cover {span}", inner.span));
                    }
                    let samples: u64 = inner.children.iter().map(|c| c.coreset().sample_count()).sum();
                    if samples != inner.cache.sample_count() {
                        return Err("cached sample count is stale".into());
                    }
                    Ok(span)
                }
            }
        }
        let mut leaves = 0;
        if let Some(root) = &self.root {
            walk(root, 0, &mut None, &mut leaves)?;
        }
        if leaves != self.leaves {
            return Err(format!("counted {leaves} leaves, tracked {}", self.leaves));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_scatter, rel_frobenius};
    use std::collections::VecDeque;

    fn sample(i: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(d, 1, |r, _| (((i * 13 + r * 5) % 23) as f64 - 11.0) / 4.0)
    }

    fn naive(live: &VecDeque<DMatrix<f64>>, d: usize) -> DMatrix<f64> {
        live.iter().fold(DMatrix::zeros(d, d), |acc, x| acc + dense_scatter(x.as_view()))
    }

    #[test]
    fn one_leaf_round_trip() {
        let mut tree = CoresetWindowTree::new(3, 1, None).unwrap();
        let chunk = ScatterCoreset::from_samples(sample(1, 3).as_view()).unwrap();
        tree.insert(chunk.clone(), 1).unwrap();
        assert_eq!(tree.root_scatter(), chunk.scatter());
        tree.delete_oldest().unwrap();
        assert!(tree.root_scatter().norm() <= 1e-12);
        assert!(matches!(tree.delete_oldest(), Err(Error::EmptyStructure(_))));
    }

    #[test]
    fn interleaved_inserts_and_deletes() {
        let d = 4;
        let mut tree = CoresetWindowTree::new(d, 1, None).unwrap();
        let mut live = VecDeque::new();
        let mut next = 0;
        for step in 0..700 {
            let delete = step % 7 == 3 || step % 7 == 5;
            if delete && !live.is_empty() {
                let before = tree.recomputations();
                let n = tree.live_leaves();
                tree.delete_oldest().unwrap();
                live.pop_front();
                let bound = 3 * (n as f64).log2().ceil() as u64;
                assert!(tree.recomputations() - before <= bound, "step {step}");
            } else {
                let x = sample(next, d);
                next += 1;
                tree.insert(ScatterCoreset::from_samples(x.as_view()).unwrap(), 1).unwrap();
                live.push_back(x);
            }
            tree.check_structure().unwrap();
            assert_eq!(tree.live_leaves(), live.len());
            let want = naive(&live, d);
            assert!(rel_frobenius(&tree.root_scatter(), &want) <= 1e-10, "step {step}");
            if tree.live_leaves() > 1 {
                assert!(tree.height() <= (tree.live_leaves() as f64).log2().floor() as usize);
            }
        }
    }

    #[test]
    fn window_keeps_suffix() {
        let d = 3;
        let mut tree = CoresetWindowTree::new(d, 1, Some(100)).unwrap();
        let mut all = Vec::new();
        for i in 0..1000 {
            let x = sample(i, d);
            tree.insert(ScatterCoreset::from_samples(x.as_view()).unwrap(), 1).unwrap();
            all.push(x);
        }
        assert_eq!(tree.live_span(), 100);
        assert_eq!(tree.absorbed_total(), 1000);
        let tail: VecDeque<_> = all[900..].iter().cloned().collect();
        assert!(rel_frobenius(&tree.root_scatter(), &naive(&tail, d)) <= 1e-10);
    }

    #[test]
    fn insert_samples_respects_leaf_capacity() {
        let x = DMatrix::from_fn(2, 25, |r, c| (r + c) as f64);
        let mut tree = CoresetWindowTree::new(2, 10, None).unwrap();
        tree.insert_samples(x.as_view()).unwrap();
        assert_eq!(tree.live_leaves(), 3);
        assert_eq!(tree.live_span(), 25);
        assert!(rel_frobenius(&tree.root_scatter(), &dense_scatter(x.as_view())) <= 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CoresetWindowTree::new(0, 1, None).is_err());
        assert!(CoresetWindowTree::new(2, 1, Some(0)).is_err());
        let mut tree = CoresetWindowTree::new(2, 1, None).unwrap();
        assert!(matches!(tree.insert(ScatterCoreset::new(3).unwrap(), 1), Err(Error::Dimension { .. })));
        assert!(tree.insert(ScatterCoreset::new(2).unwrap(), 0).is_err());
    }
}
