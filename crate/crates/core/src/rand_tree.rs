//! Conditioned Galton–Watson trees and exact tree-metric primitives.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;

const NONE: usize = usize::MAX;
const LAW_TOL: f64 = 1e-12;
/// Rejection attempts before the sampler gives up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),
    #[error("tree size must be at least 1")]
    ZeroSize,
    #[error("size n={n} has zero probability: n-1 must be a multiple of {period}")]
    UnsupportedSize { n: usize, period: u64 },
    #[error("rejection budget of {attempts} attempts exceeded for n={n}")]
    BudgetExceeded { n: usize, attempts: u64 },
    #[error("contour of a single-vertex tree is degenerate")]
    DegeneratePath,
    #[error("invalid parent array: {0}")]
    InvalidParents(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
}

/// Offspring distribution family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Poisson1,
    /// `P(k) = p (1 - p)^k`; critical only for `p = 1/2`.
    Geometric(f64),
    /// `P(0) = P(2) = 1/2`.
    BinaryHalf,
    Table(Vec<f64>),
}

/// A validated critical offspring law.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    kind: LawKind,
    mean: f64,
    variance: f64,
    period: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl OffspringLaw {
    pub fn new(kind: LawKind) -> Result<Self, TreeError> {
        let (mean, variance, period) = match &kind {
            LawKind::Poisson1 => (1.0, 1.0, 1),
            LawKind::Geometric(p) => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(TreeError::InvalidLaw(format!("geometric p={p} outside (0,1)")));
                }
                ((1.0 - p) / p, (1.0 - p) / (p * p), 1)
            }
            LawKind::BinaryHalf => (1.0, 1.0, 2),
            LawKind::Table(pmf) => {
                if pmf.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
                    return Err(TreeError::InvalidLaw("negative or non-finite mass".into()));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > LAW_TOL {
                    return Err(TreeError::InvalidLaw(format!("pmf sums to {total}")));
                }
                let mean: f64 = pmf.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
                let second: f64 = pmf.iter().enumerate().map(|(k, q)| (k * k) as f64 * q).sum();
                let period = pmf
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| q > 0.0)
                    .fold(0u64, |g, (k, _)| gcd(g, k as u64));
                (mean, second - mean * mean, period.max(1))
            }
        };
        if (mean - 1.0).abs() > LAW_TOL {
            return Err(TreeError::InvalidLaw(format!("mean {mean} is not 1")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(TreeError::InvalidLaw(format!("variance {variance} must be positive")));
        }
        Ok(Self {
            kind,
            mean,
            variance,
            period,
        })
    }

    pub fn poisson1() -> Self {
        Self::new(LawKind::Poisson1).expect("valid law")
    }

    pub fn geometric_half() -> Self {
        Self::new(LawKind::Geometric(0.5)).expect("valid law")
    }

    pub fn binary_half() -> Self {
        Self::new(LawKind::BinaryHalf).expect("valid law")
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `P(xi = k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        match &self.kind {
            LawKind::Poisson1 => {
                let lf: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
                (-1.0 - lf).exp()
            }
            LawKind::Geometric(p) => p * (1.0 - p).powi(k as i32),
            LawKind::BinaryHalf => {
                if k == 0 || k == 2 {
                    0.5
                } else {
                    0.0
                }
            }
            LawKind::Table(pmf) => pmf.get(k).copied().unwrap_or(0.0),
        }
    }

    /// Lattice period of the support; sizes with `(n - 1) % period != 0` are impossible.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn supports_size(&self, n: usize) -> bool {
        n >= 1 && (n as u64 - 1) % self.period == 0
    }

    fn sampler(&self) -> OffspringSampler {
        match &self.kind {
            LawKind::Poisson1 => OffspringSampler::Poisson(Poisson::new(1.0).expect("rate 1")),
            LawKind::Geometric(p) => OffspringSampler::Geometric(Geometric::new(*p).expect("valid p")),
            LawKind::BinaryHalf => OffspringSampler::Binary,
            LawKind::Table(pmf) => {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = pmf
                    .iter()
                    .map(|q| {
                        acc += q;
                        acc
                    })
                    .collect();
                if let Some(last) = cdf.last_mut() {
                    *last = f64::INFINITY;
                }
                OffspringSampler::Table(cdf)
            }
        }
    }
}

enum OffspringSampler {
    Poisson(Poisson<f64>),
    Geometric(Geometric),
    Binary,
    Table(Vec<f64>),
}

impl OffspringSampler {
    #[inline]
    fn draw(&self, rng: &mut SimRng) -> usize {
        match self {
            OffspringSampler::Poisson(d) => d.sample(rng) as usize,
            OffspringSampler::Geometric(d) => d.sample(rng) as usize,
            OffspringSampler::Binary => 2 * usize::from(rng.random::<bool>()),
            OffspringSampler::Table(cdf) => {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c <= u)
            }
        }
    }
}

/// Rooted finite tree with child and neighbour lists in CSR form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteTree {
    parent: Vec<usize>,
    root: usize,
    child_start: Vec<usize>,
    child_list: Vec<usize>,
    adj_start: Vec<usize>,
    adj_list: Vec<usize>,
}

impl DiscreteTree {
    /// Builds a tree from a parent array; `None` marks the root. Child order
    /// is ascending vertex id.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self, TreeError> {
        let n = parents.len();
        if n == 0 {
            return Err(TreeError::ZeroSize);
        }
        let mut root = NONE;
        let mut parent = vec![NONE; n];
        for (v, p) in parents.iter().enumerate() {
            match *p {
                None if root == NONE => root = v,
                None => return Err(TreeError::InvalidParents("more than one root".into())),
                Some(p) if p >= n => {
                    return Err(TreeError::InvalidParents(format!("parent {p} out of range")))
                }
                Some(p) if p == v => {
                    return Err(TreeError::InvalidParents(format!("vertex {v} is its own parent")))
                }
                Some(p) => parent[v] = p,
            }
        }
        if root == NONE {
            return Err(TreeError::InvalidParents("no root".into()));
        }
        let tree = Self::build(parent, root);
        if tree.bfs_order().len() != n {
            return Err(TreeError::InvalidParents("cycle: not every vertex reaches the root".into()));
        }
        Ok(tree)
    }

    fn build(parent: Vec<usize>, root: usize) -> Self {
        let n = parent.len();
        let mut counts = vec![0usize; n + 1];
        for (v, &p) in parent.iter().enumerate() {
            if v != root {
                counts[p + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let child_start = counts.clone();
        let mut fill = counts;
        let mut child_list = vec![0; n.saturating_sub(1)];
        for (v, &p) in parent.iter().enumerate() {
            if v != root {
                child_list[fill[p]] = v;
                fill[p] += 1;
            }
        }
        let mut adj_start = vec![0usize; n + 1];
        for v in 0..n {
            let deg = child_start[v + 1] - child_start[v] + usize::from(v != root);
            adj_start[v + 1] = adj_start[v] + deg;
        }
        let mut adj_list = vec![0; adj_start[n]];
        for v in 0..n {
            let mut k = adj_start[v];
            if v != root {
                adj_list[k] = parent[v];
                k += 1;
            }
            for &c in &child_list[child_start[v]..child_start[v + 1]] {
                adj_list[k] = c;
                k += 1;
            }
        }
        Self {
            parent,
            root,
            child_start,
            child_list,
            adj_start,
            adj_list,
        }
    }

    pub fn single() -> Self {
        Self::build(vec![NONE], 0)
    }

    /// Path `0 - 1 - ... - (n-1)` rooted at 0.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        let parent = (0..n).map(|v| if v == 0 { NONE } else { v - 1 }).collect();
        Self::build(parent, 0)
    }

    /// Star with centre 0 (the root) and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let parent = (0..=leaves).map(|v| if v == 0 { NONE } else { 0 }).collect();
        Self::build(parent, 0)
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

    pub fn parents(&self) -> Vec<Option<usize>> {
        (0..self.n()).map(|v| self.parent(v)).collect()
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.child_list[self.child_start[v]..self.child_start[v + 1]]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj_list[self.adj_start[v]..self.adj_start[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_start[v + 1] - self.adj_start[v]
    }

    /// Non-root vertices paired with their parents.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).filter(|&v| v != self.root).map(|v| (self.parent[v], v))
    }

    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n());
        order.push(self.root);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            order.extend_from_slice(self.children(v));
            i += 1;
        }
        order
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.n()];
        for v in self.bfs_order() {
            for &c in self.children(v) {
                depth[c] = depth[v] + 1;
            }
        }
        depth
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Graph distances from `src` by breadth-first search.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![NONE; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if dist[w] == NONE {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Depth-first preorder following child order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children(v).iter().rev());
        }
        order
    }
}

/// Cyclic shift that turns an offspring vector summing to `n - 1` into a
/// valid Łukasiewicz sequence.
pub fn cycle_lemma_shift(xi: &[usize]) -> usize {
    let n = xi.len();
    let mut s: i64 = 0;
    let mut min = i64::MAX;
    let mut arg = 0;
    for (k, &x) in xi.iter().enumerate() {
        s += x as i64 - 1;
        if s < min {
            min = s;
            arg = k + 1;
        }
    }
    arg % n
}

/// True when every proper prefix of the walk `sum (xi_i - 1)` stays nonnegative
/// and the full sum is -1.
pub fn is_lukasiewicz(xi: &[usize]) -> bool {
    let mut s: i64 = 0;
    for (k, &x) in xi.iter().enumerate() {
        s += x as i64 - 1;
        if s < 0 {
            return k + 1 == xi.len() && s == -1;
        }
    }
    false
}

/// Decodes a Łukasiewicz sequence into a tree whose vertex ids are the
/// depth-first preorder.
pub fn decode_lukasiewicz(xi: &[usize]) -> Result<DiscreteTree, TreeError> {
    if !is_lukasiewicz(xi) {
        return Err(TreeError::InvalidParents("not a Łukasiewicz sequence".into()));
    }
    let n = xi.len();
    let mut parent = vec![NONE; n];
    let mut stack: Vec<(usize, usize)> = vec![(0, xi[0])];
    for (v, &k) in xi.iter().enumerate().skip(1) {
        while stack.last().is_some_and(|&(_, rem)| rem == 0) {
            stack.pop();
        }
        let top = stack.last_mut().expect("valid sequence keeps the stack nonempty");
        parent[v] = top.0;
        top.1 -= 1;
        stack.push((v, k));
    }
    Ok(DiscreteTree::build(parent, 0))
}

/// Offspring vector of a tree listed in depth-first preorder.
pub fn lukasiewicz_of(tree: &DiscreteTree) -> Vec<usize> {
    tree.preorder().into_iter().map(|v| tree.children(v).len()).collect()
}

/// Offspring counts `(xi_1, ..., xi_n)` conditioned on summing to `n - 1`, by
/// rejection on i.i.d. draws.
pub fn sample_offspring_by_rejection(
    law: &OffspringLaw,
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<usize>, TreeError> {
    check_size(law, n)?;
    let sampler = law.sampler();
    let target = n - 1;
    let mut xi = vec![0usize; n];
    for _ in 0..REJECTION_BUDGET {
        let mut sum = 0usize;
        let mut ok = true;
        for slot in xi.iter_mut() {
            *slot = sampler.draw(rng);
            sum += *slot;
            if sum > target {
                ok = false;
                break;
            }
        }
        if ok && sum == target {
            return Ok(xi);
        }
    }
    Err(TreeError::BudgetExceeded {
        n,
        attempts: REJECTION_BUDGET,
    })
}

fn check_size(law: &OffspringLaw, n: usize) -> Result<(), TreeError> {
    if n == 0 {
        return Err(TreeError::ZeroSize);
    }
    if !law.supports_size(n) {
        return Err(TreeError::UnsupportedSize {
            n,
            period: law.period(),
        });
    }
    Ok(())
}

fn rotate_and_decode(mut xi: Vec<usize>) -> DiscreteTree {
    let shift = cycle_lemma_shift(&xi);
    xi.rotate_left(shift);
    decode_lukasiewicz(&xi).expect("cycle lemma yields a valid sequence")
}

/// Galton–Watson tree conditioned on exactly `n` vertices. Vertex 0 is the
/// ancestor and ids follow depth-first order.
pub fn sample_conditioned_gw(
    law: &OffspringLaw,
    n: usize,
    rng: &mut SimRng,
) -> Result<DiscreteTree, TreeError> {
    check_size(law, n)?;
    let xi = match law.kind() {
        // i.i.d. Poisson(1) given the total is multinomial with equal cells.
        LawKind::Poisson1 => {
            let mut xi = vec![0usize; n];
            for _ in 0..n - 1 {
                xi[rng.random_range(0..n)] += 1;
            }
            xi
        }
        _ => sample_offspring_by_rejection(law, n, rng)?,
    };
    Ok(rotate_and_decode(xi))
}

/// Same law as [`sample_conditioned_gw`], always via the rejection sampler.
pub fn sample_conditioned_gw_by_rejection(
    law: &OffspringLaw,
    n: usize,
    rng: &mut SimRng,
) -> Result<DiscreteTree, TreeError> {
    Ok(rotate_and_decode(sample_offspring_by_rejection(law, n, rng)?))
}

/// Constant-time LCA via Euler tour and sparse table.
#[derive(Debug, Clone)]
pub struct TreeMetricIndex {
    depth: Vec<usize>,
    first: Vec<usize>,
    euler: Vec<usize>,
    table: Vec<Vec<usize>>,
}

impl TreeMetricIndex {
    pub fn new(tree: &DiscreteTree) -> Self {
        let n = tree.n();
        let depth = tree.depths();
        let mut first = vec![0; n];
        let euler = Self::euler_tour_of(tree);
        for (i, &v) in euler.iter().enumerate().rev() {
            first[v] = i;
        }
        let m = euler.len();
        let mut table = vec![euler.clone()];
        let mut k = 1;
        while (1 << k) <= m {
            let prev = &table[k - 1];
            let half = 1 << (k - 1);
            let row: Vec<usize> = (0..=m - (1 << k))
                .map(|i| {
                    let (a, b) = (prev[i], prev[i + half]);
                    if depth[a] <= depth[b] {
                        a
                    } else {
                        b
                    }
                })
                .collect();
            table.push(row);
            k += 1;
        }
        Self {
            depth,
            first,
            euler,
            table,
        }
    }

    fn euler_tour_of(tree: &DiscreteTree) -> Vec<usize> {
        let mut euler = Vec::with_capacity(2 * tree.n() - 1);
        let mut stack: Vec<(usize, usize)> = vec![(tree.root(), 0)];
        euler.push(tree.root());
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            let kids = tree.children(v);
            if next < kids.len() {
                top.1 += 1;
                let c = kids[next];
                euler.push(c);
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    euler.push(p);
                }
            }
        }
        euler
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn euler_tour(&self) -> &[usize] {
        &self.euler
    }

    pub fn lca(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (self.first[u], self.first[v]);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let len = b - a + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let row = &self.table[k];
        let (x, y) = (row[a], row[b + 1 - (1 << k)]);
        if self.depth[x] <= self.depth[y] {
            x
        } else {
            y
        }
    }

    pub fn distance(&self, u: usize, v: usize) -> usize {
        self.depth[u] + self.depth[v] - 2 * self.depth[self.lca(u, v)]
    }

    /// The vertex common to the three geodesics between `x`, `y` and `z`.
    pub fn branch_point(&self, x: usize, y: usize, z: usize) -> usize {
        [self.lca(x, y), self.lca(y, z), self.lca(z, x)]
            .into_iter()
            .max_by_key(|&v| self.depth[v])
            .expect("three candidates")
    }

    /// True when `w` lies on the geodesic from `u` to `v`.
    pub fn on_path(&self, u: usize, v: usize, w: usize) -> bool {
        self.distance(u, w) + self.distance(w, v) == self.distance(u, v)
    }
}

pub fn graph_distance(index: &TreeMetricIndex, u: usize, v: usize) -> usize {
    index.distance(u, v)
}

pub fn branch_point(index: &TreeMetricIndex, x: usize, y: usize, z: usize) -> usize {
    index.branch_point(x, y, z)
}

/// Diameter by double breadth-first search.
pub fn diameter(tree: &DiscreteTree) -> usize {
    let d0 = tree.bfs_distances(tree.root());
    let far = argmax(&d0);
    let d1 = tree.bfs_distances(far);
    d1[argmax(&d1)]
}

fn argmax(xs: &[usize]) -> usize {
    xs.iter()
        .enumerate()
        .max_by_key(|&(i, &d)| (d, std::cmp::Reverse(i)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Minimum number of vertices whose closed `r`-balls cover the tree.
pub fn covering_number(tree: &DiscreteTree, r: usize) -> usize {
    let n = tree.n();
    if r == 0 {
        return n;
    }
    let depth = tree.depths();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(depth[v]));
    let mut covered = vec![false; n];
    let mut dist = vec![NONE; n];
    let mut touched = Vec::new();
    let mut centers = 0;
    for v in order {
        if covered[v] {
            continue;
        }
        let mut c = v;
        for _ in 0..r {
            match tree.parent(c) {
                Some(p) => c = p,
                None => break,
            }
        }
        centers += 1;
        dist[c] = 0;
        touched.push(c);
        let mut queue = VecDeque::from([c]);
        while let Some(u) = queue.pop_front() {
            covered[u] = true;
            if dist[u] == r {
                continue;
            }
            for &w in tree.neighbors(u) {
                if dist[w] == NONE {
                    dist[w] = dist[u] + 1;
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        for u in touched.drain(..) {
            dist[u] = NONE;
        }
    }
    centers
}

/// Depth-first contour of a tree with at least two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContourPath {
    values: Vec<usize>,
}

impl ContourPath {
    pub fn from_values(values: Vec<usize>) -> Result<Self, TreeError> {
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(TreeError::InvalidContour(format!("length {}", values.len())));
        }
        if values[0] != 0 || *values.last().unwrap() != 0 {
            return Err(TreeError::InvalidContour("must start and end at 0".into()));
        }
        if values.windows(2).any(|w| w[0].abs_diff(w[1]) != 1) {
            return Err(TreeError::InvalidContour("steps must be +-1".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Number of vertices of the coded tree.
    pub fn n(&self) -> usize {
        (self.values.len() - 1) / 2 + 1
    }

    pub fn max(&self) -> usize {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// `n^{-1/2} C(2(n-1)t)` with linear interpolation, `t` in `[0, 1]`.
    pub fn normalized(&self, t: f64) -> f64 {
        let n = self.n() as f64;
        let s = 2.0 * (n - 1.0) * t.clamp(0.0, 1.0);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        let v = self.values[i] as f64 * (1.0 - frac) + self.values[i + 1] as f64 * frac;
        v / n.sqrt()
    }

    /// Rebuilds the coded tree with depth-first ids.
    pub fn to_tree(&self) -> DiscreteTree {
        let mut parent = vec![NONE; self.n()];
        let mut stack = vec![0usize];
        let mut next = 1;
        for w in self.values.windows(2) {
            if w[1] > w[0] {
                parent[next] = *stack.last().unwrap();
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
            }
        }
        DiscreteTree::build(parent, 0)
    }
}

pub fn contour_path(tree: &DiscreteTree) -> Result<ContourPath, TreeError> {
    if tree.n() < 2 {
        return Err(TreeError::DegeneratePath);
    }
    let index = TreeMetricIndex::new(tree);
    let values = index.euler_tour().iter().map(|&v| index.depth(v)).collect();
    Ok(ContourPath { values })
}

pub fn normalized_contour(tree: &DiscreteTree, t: f64) -> Result<f64, TreeError> {
    Ok(contour_path(tree)?.normalized(t))
}

/// Canonical string of the unordered rooted shape; equal strings mean
/// isomorphic rooted trees.
pub fn canonical_form(tree: &DiscreteTree) -> String {
    let order = tree.bfs_order();
    let mut code: Vec<String> = vec![String::new(); tree.n()];
    for &v in order.iter().rev() {
        let mut kids: Vec<String> = tree
            .children(v)
            .iter()
            .map(|&c| std::mem::take(&mut code[c]))
            .collect();
        kids.sort();
        code[v] = format!("({})", kids.concat());
    }
    std::mem::take(&mut code[tree.root()])
}

/// All rooted unordered trees on `n` vertices, one representative each.
pub fn enumerate_rooted_trees(n: usize) -> Vec<DiscreteTree> {
    if n == 0 {
        return Vec::new();
    }
    let mut seen = std::collections::BTreeMap::new();
    let mut xi = vec![0usize; n];
    enumerate_sequences(&mut xi, 0, 0, &mut |seq| {
        let t = decode_lukasiewicz(seq).expect("valid sequence");
        seen.entry(canonical_form(&t)).or_insert(t);
    });
    seen.into_values().collect()
}

/// Visits every Łukasiewicz sequence of length `xi.len()`.
pub fn enumerate_sequences(
    xi: &mut [usize],
    pos: usize,
    open: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    let n = xi.len();
    // `open` counts pending child slots after `pos` entries
    let remaining = n - pos;
    if pos == n {
        if open == 0 {
            visit(xi);
        }
        return;
    }
    if pos > 0 && open == 0 {
        return;
    }
    let slots = if pos == 0 { 1 } else { open };
    // after placing k children here: slots - 1 + k pending, must fit in remaining - 1
    for k in 0..remaining {
        let pending = slots - 1 + k;
        if pending > remaining - 1 {
            break;
        }
        if pending == 0 && remaining > 1 {
            continue;
        }
        xi[pos] = k;
        enumerate_sequences(xi, pos + 1, pending, visit);
    }
}
