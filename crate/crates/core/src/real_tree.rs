//! Finite rooted trees with positive real edge lengths.

use thiserror::Error;

use crate::rand_tree::DiscreteTree;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealTreeError {
    #[error("empty tree")]
    Empty,
    #[error("inconsistent lengths: {0}")]
    Shape(String),
    #[error("expected exactly one root, found {0}")]
    Roots(usize),
    #[error("edge above node {node} has non-positive or non-finite length {length}")]
    BadLength { node: usize, length: f64 },
    #[error("parent array contains a cycle")]
    Cycle,
}

/// Rooted tree; node `v` hangs below `parent(v)` at distance `edge_length(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTree {
    parent: Vec<usize>,
    edge_length: Vec<f64>,
    height: Vec<f64>,
    /// Grid index represented by the node, if any.
    label: Vec<Option<usize>>,
    /// Grid mass carried by the node.
    weight: Vec<f64>,
    root: usize,
    child_start: Vec<usize>,
    child_list: Vec<usize>,
    order: Vec<usize>,
}

impl RealTree {
    /// `parent[root] = None`; the root's edge length is ignored.
    pub fn new(parent: &[Option<usize>], edge_length: &[f64]) -> Result<Self, RealTreeError> {
        let n = parent.len();
        Self::from_parts(
            parent.iter().map(|p| p.unwrap_or(NONE)).collect(),
            edge_length.to_vec(),
            vec![None; n],
            vec![0.0; n],
        )
    }

    pub(crate) fn from_parts(
        parent: Vec<usize>,
        mut edge_length: Vec<f64>,
        label: Vec<Option<usize>>,
        weight: Vec<f64>,
    ) -> Result<Self, RealTreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(RealTreeError::Empty);
        }
        if edge_length.len() != n || label.len() != n || weight.len() != n {
            return Err(RealTreeError::Shape(format!(
                "{n} parents, {} lengths",
                edge_length.len()
            )));
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v] == NONE).collect();
        if roots.len() != 1 {
            return Err(RealTreeError::Roots(roots.len()));
        }
        let root = roots[0];
        edge_length[root] = 0.0;
        let mut counts = vec![0usize; n + 1];
        for v in 0..n {
            if v == root {
                continue;
            }
            if parent[v] >= n {
                return Err(RealTreeError::Shape(format!("parent {} out of range", parent[v])));
            }
            let l = edge_length[v];
            if !(l > 0.0 && l.is_finite()) {
                return Err(RealTreeError::BadLength { node: v, length: l });
            }
            counts[parent[v] + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let child_start = counts.clone();
        let mut fill = counts;
        let mut child_list = vec![0; n - 1];
        for v in 0..n {
            if v != root {
                child_list[fill[parent[v]]] = v;
                fill[parent[v]] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        order.push(root);
        let mut height = vec![0.0; n];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &c in &child_list[child_start[v]..child_start[v + 1]] {
                height[c] = height[v] + edge_length[c];
                order.push(c);
            }
            i += 1;
        }
        if order.len() != n {
            return Err(RealTreeError::Cycle);
        }
        Ok(Self {
            parent,
            edge_length,
            height,
            label,
            weight,
            root,
            child_start,
            child_list,
            order,
        })
    }

    /// Unit edge lengths.
    pub fn from_discrete(tree: &DiscreteTree) -> Self {
        let parent: Vec<Option<usize>> = tree.parents();
        let lengths = vec![1.0; tree.n()];
        Self::new(&parent, &lengths).expect("discrete trees are valid")
    }

    pub fn single() -> Self {
        Self::new(&[None], &[0.0]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != self.root).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.child_list[self.child_start[v]..self.child_start[v + 1]]
    }

    pub fn edge_length(&self, v: usize) -> f64 {
        self.edge_length[v]
    }

    /// Distance from the root.
    pub fn height(&self, v: usize) -> f64 {
        self.height[v]
    }

    pub fn max_height(&self) -> f64 {
        self.height.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.edge_length.iter().sum()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.label[v]
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weight[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Root first, every parent before its children.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.children(v).is_empty()).collect()
    }

    pub fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while v != self.root {
            v = self.parent[v];
            d += 1;
        }
        d
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.parent[a];
            da -= 1;
        }
        while db > da {
            b = self.parent[b];
            db -= 1;
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.height[a] + self.height[b] - 2.0 * self.height[self.lca(a, b)]
    }
}
