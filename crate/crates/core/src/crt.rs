//! Brownian excursions, the trees they code, the Williams decomposition and
//! the tip field of the BESQ snake.
//!
//! Excursions are standard Brownian excursions of duration 1, so the excursion
//! measure satisfies `n(sup > e) = 1/(2e)`. Trees coded by an excursion use
//! `d(s, t) = z(s) + z(t) - 2 min z` times a metric factor (1 for lifetime
//! units, 2 for the CRT metric).

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::besq::{besq_hits_zero, BesqClock};
use crate::real_tree::{RealTree, RealTreeError, NONE};
use crate::rng::{replicate, SimRng, Streams};
use crate::stats::{least_squares, Estimate, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrtError {
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("invalid excursion: {0}")]
    InvalidPath(String),
    #[error("index {index} outside grid 0..={m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("indices must be strictly increasing")]
    UnsortedIndices,
    #[error("need at least one index")]
    NoIndices,
    #[error("parameters must satisfy 0 < {name}, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("v grid and estimates must be nonempty, increasing and of equal length")]
    BadGrid,
    #[error(transparent)]
    Tree(#[from] RealTreeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn positive(name: &'static str, value: f64) -> Result<(), CrtError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CrtError::NonPositive { name, value })
    }
}

/// Nonnegative path on the grid `k / m`, zero at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionPath {
    values: Vec<f64>,
}

impl ExcursionPath {
    pub fn from_values(values: Vec<f64>) -> Result<Self, CrtError> {
        if values.len() < 3 {
            return Err(CrtError::GridTooSmall(values.len().saturating_sub(1)));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
            return Err(CrtError::InvalidPath("endpoints must be 0".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(CrtError::InvalidPath("values must be finite and nonnegative".into()));
        }
        Ok(Self { values })
    }

    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.m() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation at `t` in `[0, 1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let s = t.clamp(0.0, 1.0) * self.m() as f64;
        let i = (s.floor() as usize).min(self.m() - 1);
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoid area under the path.
    pub fn area(&self) -> f64 {
        let inner: f64 = self.values[1..self.m()].iter().sum();
        inner * self.dt()
    }

    /// `z(s) + z(t) - 2 min_{[s, t]} z` for grid indices.
    pub fn d_zeta(&self, s: usize, t: usize) -> f64 {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let min = self.values[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
        self.values[s] + self.values[t] - 2.0 * min
    }
}

/// Standard excursion of duration 1 on an `m`-grid: a Brownian bridge
/// rotated at its first minimum.
pub fn sample_excursion_conditioned(m: usize, rng: &mut SimRng) -> Result<ExcursionPath, CrtError> {
    if m < 2 {
        return Err(CrtError::GridTooSmall(m));
    }
    let sd = (1.0 / m as f64).sqrt();
    let mut walk = Vec::with_capacity(m + 1);
    walk.push(0.0f64);
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = StandardNormal.sample(rng);
        acc += sd * z;
        walk.push(acc);
    }
    let end = walk[m];
    for (k, w) in walk.iter_mut().enumerate() {
        *w -= end * k as f64 / m as f64;
    }
    walk[m] = 0.0;
    let mut argmin = 0;
    for k in 1..m {
        if walk[k] < walk[argmin] {
            argmin = k;
        }
    }
    let low = walk[argmin];
    let mut values: Vec<f64> = (0..=m).map(|k| walk[(argmin + k) % m] - low).collect();
    values[0] = 0.0;
    values[m] = 0.0;
    Ok(ExcursionPath { values })
}

/// Which grid points span the reduced tree.
#[derive(Debug, Clone, PartialEq)]
pub enum GridPoints {
    /// Every index `0..m` (index `m` is identified with 0).
    All,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTree {
    pub tree: RealTree,
    /// Node carrying each requested grid index.
    pub node_of: Vec<usize>,
    pub indices: Vec<usize>,
}

/// Tree spanned by grid points under `metric_factor * d_zeta`. Points at
/// distance zero share a node; each node's weight counts its grid points.
pub fn reduced_tree_from_excursion(
    path: &ExcursionPath,
    points: &GridPoints,
    metric_factor: f64,
) -> Result<ReducedTree, CrtError> {
    positive("metric_factor", metric_factor)?;
    let m = path.m();
    let indices: Vec<usize> = match points {
        GridPoints::All => (0..m).collect(),
        GridPoints::Indices(ix) => ix.clone(),
    };
    if indices.is_empty() {
        return Err(CrtError::NoIndices);
    }
    if let Some(&bad) = indices.iter().find(|&&i| i > m) {
        return Err(CrtError::IndexOutOfRange { index: bad, m });
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CrtError::UnsortedIndices);
    }
    let z = path.values();
    // grid values interleaved with the minima between neighbours; for
    // contiguous indices every minimum equals a neighbour and is skipped
    let k = indices.len();
    let stride = if indices.windows(2).all(|w| w[1] == w[0] + 1) { 1 } else { 2 };
    let mut a = Vec::with_capacity(stride * k);
    for (i, &s) in indices.iter().enumerate() {
        a.push(z[s]);
        if stride == 2 && i + 1 < k {
            let t = indices[i + 1];
            a.push(z[s..=t].iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    let len = a.len();
    let mut rep: Vec<usize> = (0..len).collect();
    let mut left = vec![NONE; len];
    let mut stack: Vec<usize> = Vec::new();
    for p in 0..len {
        while stack.last().is_some_and(|&q| a[q] > a[p]) {
            stack.pop();
        }
        if let Some(&q) = stack.last() {
            if a[q] == a[p] {
                rep[p] = rep[q];
                stack.pop();
            }
        }
        left[p] = stack.last().copied().unwrap_or(NONE);
        stack.push(p);
    }
    let mut right = vec![NONE; len];
    stack.clear();
    for p in (0..len).rev() {
        while stack.last().is_some_and(|&q| a[q] >= a[p]) {
            stack.pop();
        }
        right[p] = stack.last().copied().unwrap_or(NONE);
        stack.push(p);
    }
    let mut node = vec![NONE; len];
    let mut count = 0;
    for p in 0..len {
        if rep[p] == p {
            node[p] = count;
            count += 1;
        }
    }
    let mut parent = vec![NONE; count];
    let mut edge = vec![0.0; count];
    let mut label = vec![None; count];
    let mut weight = vec![0.0; count];
    for p in 0..len {
        let id = node[rep[p]];
        if p % stride == 0 {
            weight[id] += 1.0;
            label[id].get_or_insert(indices[p / stride]);
        }
        if rep[p] != p {
            continue;
        }
        let up = match (left[p], right[p]) {
            (NONE, NONE) => continue,
            (l, NONE) => l,
            (NONE, r) => r,
            (l, r) => {
                if a[l] >= a[r] {
                    l
                } else {
                    r
                }
            }
        };
        parent[id] = node[rep[up]];
        edge[id] = metric_factor * (a[p] - a[up]);
    }
    let tree = RealTree::from_parts(parent, edge, label, weight)?;
    let node_of = (0..k).map(|i| node[rep[stride * i]]).collect();
    Ok(ReducedTree {
        tree,
        node_of,
        indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// Subtree grafted on a spine: `position` is the distance from the spine's
/// top, `height` the subtree's height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpineAtom {
    pub position: f64,
    pub height: f64,
    pub side: Side,
}

/// Mean number of spine atoms with height above `a` on a spine of length `h`.
pub fn expected_atoms_above(h: f64, a: f64) -> f64 {
    if a >= h {
        0.0
    } else {
        0.5 * (h / a - 1.0 - (h / a).ln())
    }
}

/// Atoms of height in `(lower, position]` along a spine of length `h`, with
/// intensity `(1/2) dx u^{-2} du` summed over both sides.
pub fn sample_spine_atoms(h: f64, lower: f64, rng: &mut SimRng) -> Vec<SpineAtom> {
    let mean = expected_atoms_above(h, lower);
    if mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..count)
        .map(|_| {
            // height density proportional to u^{-2} (h - u) on (lower, h)
            let height = loop {
                let inv = rng.random_range(1.0 / h..1.0 / lower);
                let u = 1.0 / inv;
                if rng.random::<f64>() * h < h - u {
                    break u;
                }
            };
            SpineAtom {
                position: rng.random_range(height..=h),
                height,
                side: if rng.random::<bool>() {
                    Side::Left
                } else {
                    Side::Right
                },
            }
        })
        .collect()
}

/// One spine of the skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct Spine {
    pub length: f64,
    pub generation: usize,
    pub parent: Option<usize>,
    pub base: usize,
    pub top: usize,
    pub atoms: Vec<SpineAtom>,
}

/// Spine of height `h` with every grafted subtree of height above `eps`,
/// expanded recursively.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsSkeleton {
    pub tree: RealTree,
    pub spines: Vec<Spine>,
    /// Spine containing the edge above each non-root node.
    pub spine_of: Vec<usize>,
    /// Distance from each node to the top of its spine.
    pub top_gap: Vec<f64>,
    pub h: f64,
    pub eps: f64,
}

impl WilliamsSkeleton {
    /// Largest spine length per generation.
    pub fn max_height_by_generation(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.spines {
            if out.len() <= s.generation {
                out.resize(s.generation + 1, 0.0);
            }
            out[s.generation] = out[s.generation].max(s.length);
        }
        out
    }

    /// Total spine length at distance at least `eps` below its top.
    pub fn length_below_eps(&self) -> f64 {
        self.spines.iter().map(|s| (s.length - self.eps).max(0.0)).sum()
    }
}

pub fn sample_williams_skeleton(h: f64, eps: f64, rng: &mut SimRng) -> Result<WilliamsSkeleton, CrtError> {
    positive("h", h)?;
    positive("eps", eps)?;
    let mut parent = vec![NONE];
    let mut length = vec![0.0];
    let mut spine_of = vec![NONE];
    let mut top_gap = vec![h];
    let mut spines: Vec<Spine> = Vec::new();
    // (base node, spine length, generation, parent spine)
    let mut queue = vec![(0usize, h, 0usize, None)];
    let mut next = 0;
    while next < queue.len() {
        let (base, len, generation, up) = queue[next];
        let id = next;
        next += 1;
        let mut atoms = sample_spine_atoms(len, eps, rng);
        atoms.sort_by(|a, b| b.position.total_cmp(&a.position));
        let mut at = base;
        let mut pos = 0.0;
        let mut add = |dist: f64, at: &mut usize, pos: &mut f64| {
            if dist > *pos {
                parent.push(*at);
                length.push(dist - *pos);
                spine_of.push(id);
                top_gap.push(len - dist);
                *at = parent.len() - 1;
                *pos = dist;
            }
        };
        for atom in &atoms {
            add(len - atom.position, &mut at, &mut pos);
            queue.push((at, atom.height, generation + 1, Some(id)));
        }
        add(len, &mut at, &mut pos);
        spines.push(Spine {
            length: len,
            generation,
            parent: up,
            base,
            top: at,
            atoms,
        });
    }
    let n = parent.len();
    let tree = RealTree::from_parts(parent, length, vec![None; n], vec![0.0; n])?;
    Ok(WilliamsSkeleton {
        tree,
        spines,
        spine_of,
        top_gap,
        h,
        eps,
    })
}

/// Small subtree hanging off the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentAtom {
    /// Lower end of the skeleton edge carrying the atom.
    pub node: usize,
    /// Distance from `node` up the edge to the attachment point.
    pub offset: f64,
    /// Distance from the attachment point to the top of its spine.
    pub h_x: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSample {
    /// Atoms of the process with heights in `[min_height, min(h_x, eps)]`.
    pub atoms: Vec<ComponentAtom>,
    /// Atoms of the homogeneous process with heights in `[min_height, eps]`
    /// that dominates it; `atoms` is the thinned subset.
    pub dominating: Vec<ComponentAtom>,
}

/// Heights of the subtrees below `eps` attached to the skeleton, with
/// intensity `(1/2) dx u^{-2} du` on `min_height <= u <= min(h_x, eps)`.
pub fn sample_poisson_components(
    skeleton: &WilliamsSkeleton,
    min_height: f64,
    rng: &mut SimRng,
) -> Result<ComponentSample, CrtError> {
    positive("min_height", min_height)?;
    let eps = skeleton.eps;
    let mut atoms = Vec::new();
    let mut dominating = Vec::new();
    if min_height >= eps {
        return Ok(ComponentSample { atoms, dominating });
    }
    let rate = 0.5 * (1.0 / min_height - 1.0 / eps);
    let tree = &skeleton.tree;
    for &v in &tree.bfs_order()[1..] {
        let len = tree.edge_length(v);
        let count = Poisson::new(rate * len).expect("positive").sample(rng) as usize;
        for _ in 0..count {
            let offset = rng.random_range(0.0..len);
            let inv = rng.random_range(1.0 / eps..=1.0 / min_height);
            let atom = ComponentAtom {
                node: v,
                offset,
                h_x: skeleton.top_gap[v] + offset,
                height: 1.0 / inv,
            };
            dominating.push(atom);
            if atom.height <= atom.h_x {
                atoms.push(atom);
            }
        }
    }
    Ok(ComponentSample { atoms, dominating })
}

/// Probability that the tip field, a `BESQ^0(v)` indexed by the lifetime-unit
/// tree of a fresh unit excursion on an `m`-grid, vanishes somewhere.
pub fn estimate_zero_hit_probability(
    v: f64,
    m: usize,
    replicas: usize,
    streams: &Streams,
) -> Result<Estimate, CrtError> {
    if v < 0.0 || !v.is_finite() {
        return Err(CrtError::NonPositive { name: "v", value: v });
    }
    if m < 2 {
        return Err(CrtError::GridTooSmall(m));
    }
    let hits: Vec<Result<f64, CrtError>> = replicate(streams, m as u64, replicas, |rng, _| {
        Ok(f64::from(u8::from(snake_hits_zero(v, m, rng)?)))
    });
    let hits: Vec<f64> = hits.into_iter().collect::<Result<_, _>>()?;
    Ok(Estimate::of(&hits))
}

/// One replica of [`estimate_zero_hit_probability`].
pub fn snake_hits_zero(v: f64, m: usize, rng: &mut SimRng) -> Result<bool, CrtError> {
    let path = sample_excursion_conditioned(m, rng)?;
    let reduced = reduced_tree_from_excursion(&path, &GridPoints::All, 1.0)?;
    Ok(besq_hits_zero(&reduced.tree, v, BesqClock::MetricDistance, rng))
}

/// Pieces of the estimate of `int_0^inf F(v) dv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnakeIntegral {
    /// `[0, v_0]`, using `F(0) = 1`.
    pub head: f64,
    /// Trapezoid rule over the supplied grid.
    pub body: f64,
    /// Beyond the last grid point, from an exponential fit to the last points.
    pub tail: f64,
    pub tail_rate: Option<f64>,
    pub total: f64,
}

/// Number of trailing grid points used for the tail fit.
pub const TAIL_FIT_POINTS: usize = 3;

pub fn snake_integral(vs: &[f64], fs: &[f64]) -> Result<SnakeIntegral, CrtError> {
    if vs.is_empty() || vs.len() != fs.len() || vs[0] <= 0.0 || vs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CrtError::BadGrid);
    }
    let head = 0.5 * vs[0] * (1.0 + fs[0]);
    let body = crate::stats::trapezoid_integral(vs, fs)?;
    let k = vs.len();
    let tail_pts: Vec<(f64, f64)> = (k.saturating_sub(TAIL_FIT_POINTS)..k)
        .filter(|&i| fs[i] > 0.0)
        .map(|i| (vs[i], fs[i].ln()))
        .collect();
    let mut tail_rate = None;
    let mut tail = 0.0;
    if tail_pts.len() >= 2 && fs[k - 1] > 0.0 {
        let (x, y): (Vec<f64>, Vec<f64>) = tail_pts.into_iter().unzip();
        let (slope, _) = least_squares(&x, &y);
        if slope < 0.0 {
            tail_rate = Some(-slope);
            tail = fs[k - 1] / -slope;
        }
    }
    Ok(SnakeIntegral {
        head,
        body,
        tail,
        tail_rate,
        total: head + body + tail,
    })
}

/// `int_0^inf F(v) dv` implied by `u(x) = 2/x`.
pub fn snake_integral_target() -> f64 {
    2.0 * (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::{ks_distance, Estimate};

    #[test]
    fn excursion_shape() {
        let mut rng = seeded(1);
        assert!(sample_excursion_conditioned(1, &mut rng).is_err());
        for m in [2usize, 3, 17, 1024] {
            let e = sample_excursion_conditioned(m, &mut rng).unwrap();
            assert_eq!(e.values().len(), m + 1);
            assert_eq!(e.values()[0], 0.0);
            assert_eq!(e.values()[m], 0.0);
            assert!(e.values().iter().all(|&v| v >= 0.0));
            assert!(ExcursionPath::from_values(e.values().to_vec()).is_ok());
        }
    }

    // grid extremes of a Gaussian walk miss the continuous ones by BETA * sqrt(dt)
    const BETA: f64 = 0.5825971579390106;

    #[test]
    fn excursion_marginals() {
        let mut rng = seeded(2);
        let m = 1024;
        let (mut mid, mut area, mut top) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..20_000 {
            let e = sample_excursion_conditioned(m, &mut rng).unwrap();
            mid.push(e.value_at(0.5));
            area.push(e.area());
            top.push(e.max());
        }
        let pi = std::f64::consts::PI;
        let shift = BETA / (m as f64).sqrt();
        assert!(Estimate::of(&mid).z_against((2.0 / pi).sqrt() - shift).abs() < 4.0);
        assert!(Estimate::of(&area).z_against((pi / 8.0).sqrt() - shift).abs() < 4.0);
        assert!(Estimate::of(&top).z_against((pi / 2.0).sqrt() - 2.0 * shift).abs() < 4.0);
    }

    #[test]
    fn max_height_resolution() {
        let mut rng = seeded(3);
        let mut sample = |m: usize, k: usize| -> Vec<f64> {
            (0..k).map(|_| sample_excursion_conditioned(m, &mut rng).unwrap().max()).collect()
        };
        let coarse = sample(1 << 8, 4000);
        let mid = sample(1 << 10, 4000);
        let fine = sample(1 << 14, 4000);
        let far = ks_distance(&coarse, &fine).unwrap();
        let near = ks_distance(&mid, &fine).unwrap();
        assert!(near < far);
        assert!(near < 0.08);
    }

    fn toy() -> ExcursionPath {
        ExcursionPath::from_values(vec![0.0, 1.0, 0.5, 2.0, 0.5, 1.5, 0.0]).unwrap()
    }

    #[test]
    fn two_point_tree_is_a_path() {
        let e = toy();
        for factor in [1.0, 2.0] {
            let r = reduced_tree_from_excursion(&e, &GridPoints::Indices(vec![1, 3]), factor).unwrap();
            let (u, w) = (r.node_of[0], r.node_of[1]);
            assert!((r.tree.distance(u, w) - factor * e.d_zeta(1, 3)).abs() < 1e-12);
            assert_eq!(r.tree.n(), 3);
        }
    }

    #[test]
    fn full_grid_tree() {
        let e = toy();
        let r = reduced_tree_from_excursion(&e, &GridPoints::All, 1.0).unwrap();
        // points 2 and 4 share height 0.5 with nothing lower between
        assert_eq!(r.node_of[2], r.node_of[4]);
        assert_eq!(r.tree.weight(r.node_of[2]), 2.0);
        let total: f64 = r.tree.weights().iter().sum();
        assert_eq!(total, 6.0);
        for s in 0..6 {
            for t in 0..6 {
                let d = r.tree.distance(r.node_of[s], r.node_of[t]);
                assert!((d - e.d_zeta(s, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_path_is_a_point() {
        let e = ExcursionPath::from_values(vec![0.0; 5]).unwrap();
        let r = reduced_tree_from_excursion(&e, &GridPoints::All, 2.0).unwrap();
        assert_eq!(r.tree.n(), 1);
    }

    #[test]
    fn bad_indices() {
        let e = toy();
        assert!(reduced_tree_from_excursion(&e, &GridPoints::Indices(vec![]), 1.0).is_err());
        assert!(reduced_tree_from_excursion(&e, &GridPoints::Indices(vec![3, 1]), 1.0).is_err());
        assert!(reduced_tree_from_excursion(&e, &GridPoints::Indices(vec![9]), 1.0).is_err());
    }

    #[test]
    fn reduced_distances_and_four_point() {
        let mut rng = seeded(4);
        for _ in 0..50 {
            let e = sample_excursion_conditioned(512, &mut rng).unwrap();
            let k = rng.random_range(2..=8);
            let mut ix: Vec<usize> = (0..k).map(|_| rng.random_range(0..=512)).collect();
            ix.sort();
            ix.dedup();
            let factor = if rng.random::<bool>() { 1.0 } else { 2.0 };
            let r = reduced_tree_from_excursion(&e, &GridPoints::Indices(ix.clone()), factor).unwrap();
            let d = |i: usize, j: usize| r.tree.distance(r.node_of[i], r.node_of[j]);
            for i in 0..ix.len() {
                for j in 0..ix.len() {
                    assert!((d(i, j) - factor * e.d_zeta(ix[i], ix[j])).abs() < 1e-12);
                }
            }
            let q = ix.len();
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        for w in 0..q {
                            let mut s = [d(a, b) + d(c, w), d(a, c) + d(b, w), d(a, w) + d(b, c)];
                            s.sort_by(f64::total_cmp);
                            assert!((s[2] - s[1]).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn williams_spine_only() {
        let mut rng = seeded(5);
        let s = sample_williams_skeleton(1.0, 1.0, &mut rng).unwrap();
        assert_eq!(s.tree.n(), 2);
        assert_eq!(s.spines.len(), 1);
        let s = sample_williams_skeleton(1.0, 2.0, &mut rng).unwrap();
        assert_eq!(s.tree.n(), 2);
        assert!(sample_williams_skeleton(0.0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn williams_structure() {
        let mut rng = seeded(6);
        for _ in 0..200 {
            let s = sample_williams_skeleton(1.0, 0.05, &mut rng).unwrap();
            assert!((s.tree.max_height() - 1.0).abs() < 1e-12);
            for sp in &s.spines {
                for a in &sp.atoms {
                    assert!(a.height > 0.05 && a.height <= a.position && a.position <= sp.length);
                }
            }
            for v in 1..s.tree.n() {
                assert!(s.top_gap[v] >= -1e-12);
            }
        }
    }

    #[test]
    fn spine_atom_count_mean() {
        let mut rng = seeded(7);
        let counts: Vec<f64> = (0..50_000)
            .map(|_| sample_spine_atoms(1.0, 0.1, &mut rng).len() as f64)
            .collect();
        let target = expected_atoms_above(1.0, 0.1);
        assert!((target - 3.348707).abs() < 1e-6);
        assert!(Estimate::of(&counts).z_against(target).abs() < 4.0);
    }

    #[test]
    fn spine_height_second_moment() {
        let mut rng = seeded(8);
        let (h, delta) = (1.0, 1e-3);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| sample_spine_atoms(h, delta, &mut rng).iter().map(|a| a.height * a.height).sum())
            .collect();
        let target = h * h / 4.0 - (delta * h / 2.0 - delta * delta / 4.0);
        assert!(Estimate::of(&xs).z_against(target).abs() < 4.0);
    }

    #[test]
    fn components_band_count_and_domination() {
        let mut rng = seeded(9);
        let (eps, a) = (0.1, 0.02);
        let mut diffs = Vec::new();
        for _ in 0..20_000 {
            let s = sample_williams_skeleton(1.0, eps, &mut rng).unwrap();
            let c = sample_poisson_components(&s, a, &mut rng).unwrap();
            assert!(c.atoms.len() <= c.dominating.len());
            assert!(c.atoms.iter().all(|x| x.height <= x.h_x && x.height <= eps && x.height >= a));
            let band = c.atoms.iter().filter(|x| x.h_x >= eps).count() as f64;
            diffs.push(band - 0.5 * s.length_below_eps() * (1.0 / a - 1.0 / eps));
        }
        assert!(Estimate::of(&diffs).z_against(0.0).abs() < 4.0);
    }

    #[test]
    fn zero_hit_small() {
        let s = Streams::new(1, "snake");
        let f0 = estimate_zero_hit_probability(0.0, 64, 10, &s).unwrap();
        assert_eq!(f0.mean, 1.0);
        let lo = estimate_zero_hit_probability(0.25, 256, 2000, &s.child("a")).unwrap();
        let hi = estimate_zero_hit_probability(4.0, 256, 2000, &s.child("b")).unwrap();
        assert!(lo.mean > hi.mean);
    }

    #[test]
    fn integral_pieces() {
        let vs = [1.0, 2.0, 3.0];
        let fs: Vec<f64> = vs.iter().map(|v: &f64| (-v).exp()).collect();
        let s = snake_integral(&vs, &fs).unwrap();
        assert!((s.tail_rate.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.tail - (-3.0f64).exp()).abs() < 1e-12);
        assert!((s.head - 0.5 * (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!(snake_integral(&[0.0, 1.0], &[1.0, 0.5]).is_err());
        assert!((snake_integral_target() - 5.0132565).abs() < 1e-6);
    }
}
