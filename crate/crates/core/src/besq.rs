//! Squared Bessel processes: exact transitions, an Euler–Maruyama oracle and
//! tree-indexed fields.

use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::real_tree::RealTree;
use crate::rng::SimRng;

/// Exact draw of `X_{dt}` for `BESQ^dim(x)`: `2 dt Gamma(N + dim/2)` with
/// `N ~ Poisson(x / (2 dt))`.
pub fn besq_transition(x: f64, dt: f64, dim: f64, rng: &mut SimRng) -> f64 {
    debug_assert!(dt > 0.0 && x >= 0.0 && dim >= 0.0);
    let rate = x / (2.0 * dt);
    let n = if rate > 0.0 {
        Poisson::new(rate).expect("finite positive rate").sample(rng)
    } else {
        0.0
    };
    let shape = n + 0.5 * dim;
    if shape == 0.0 {
        return 0.0;
    }
    2.0 * dt * Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

/// Explicit Euler scheme for `dX = dim dt + 2 sqrt(X) dB`, absorbed at zero
/// for `dim = 0` and clamped at zero otherwise. Returns the path on the step
/// grid, including the starting value.
pub fn euler_maruyama_besq(x: f64, step: f64, horizon: f64, dim: f64, rng: &mut SimRng) -> Vec<f64> {
    let steps = (horizon / step).round() as usize;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(x);
    let mut v = x;
    let sq = step.sqrt();
    for _ in 0..steps {
        v = em_step(v, step, sq, dim, rng);
        path.push(v);
    }
    path
}

/// Endpoint of [`euler_maruyama_besq`] without storing the path.
pub fn euler_maruyama_endpoint(x: f64, step: f64, horizon: f64, dim: f64, rng: &mut SimRng) -> f64 {
    let steps = (horizon / step).round() as usize;
    let sq = step.sqrt();
    let mut v = x;
    for _ in 0..steps {
        if v == 0.0 && dim == 0.0 {
            break;
        }
        v = em_step(v, step, sq, dim, rng);
    }
    v
}

#[inline]
fn em_step(v: f64, step: f64, sq: f64, dim: f64, rng: &mut SimRng) -> f64 {
    if v == 0.0 && dim == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    (v + dim * step + 2.0 * v.sqrt() * sq * z).max(0.0)
}

/// How edge lengths translate into BESQ time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BesqClock {
    /// Time equals edge length.
    MetricDistance,
    /// Time equals half the edge length, for trees measured in resistance.
    HalfResistance,
}

impl BesqClock {
    pub fn factor(self) -> f64 {
        match self {
            BesqClock::MetricDistance => 1.0,
            BesqClock::HalfResistance => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeBesqField {
    pub values: Vec<f64>,
    pub clock: BesqClock,
    pub dim: f64,
}

/// Tree-indexed `BESQ^dim(z0)`: each child is an independent transition from
/// its parent's value over the clock-scaled edge length.
pub fn tree_indexed_besq(
    tree: &RealTree,
    z0: f64,
    dim: f64,
    clock: BesqClock,
    rng: &mut SimRng,
) -> TreeBesqField {
    let mut values = vec![0.0; tree.n()];
    values[tree.root()] = z0;
    let f = clock.factor();
    for &v in &tree.bfs_order()[1..] {
        let p = tree.parent(v).expect("non-root");
        values[v] = besq_transition(values[p], f * tree.edge_length(v), dim, rng);
    }
    TreeBesqField { values, clock, dim }
}

/// True when the tree-indexed `BESQ^0(z0)` vanishes somewhere; stops at the
/// first zero.
pub fn besq_hits_zero(tree: &RealTree, z0: f64, clock: BesqClock, rng: &mut SimRng) -> bool {
    if z0 == 0.0 {
        return true;
    }
    let mut values = vec![0.0; tree.n()];
    values[tree.root()] = z0;
    let f = clock.factor();
    for &v in &tree.bfs_order()[1..] {
        let p = tree.parent(v).expect("non-root");
        let x = besq_transition(values[p], f * tree.edge_length(v), 0.0, rng);
        if x == 0.0 {
            return true;
        }
        values[v] = x;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroStatistics {
    pub hit_zero: bool,
    /// Fraction of grid mass sitting at zero.
    pub zero_mass: f64,
    pub zero_nodes: usize,
}

/// Zero-set summary; node masses come from the tree's grid weights, or are
/// uniform when the tree carries none.
pub fn zero_statistics(field: &TreeBesqField, tree: &RealTree) -> ZeroStatistics {
    let total: f64 = tree.weights().iter().sum();
    let uniform = total <= 0.0;
    let mut mass = 0.0;
    let mut nodes = 0;
    for (v, &x) in field.values.iter().enumerate() {
        if x == 0.0 {
            nodes += 1;
            mass += if uniform { 1.0 } else { tree.weight(v) };
        }
    }
    let denom = if uniform { tree.n() as f64 } else { total };
    ZeroStatistics {
        hit_zero: nodes > 0,
        zero_mass: mass / denom,
        zero_nodes: nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::{ks_distance, Estimate};

    #[test]
    fn zero_start_stays_zero() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert_eq!(besq_transition(0.0, 1.0, 0.0, &mut rng), 0.0);
        }
        assert!(euler_maruyama_besq(0.0, 0.01, 1.0, 0.0, &mut rng).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn absorption_probability() {
        let mut rng = seeded(2);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| f64::from(u8::from(besq_transition(1.0, 1.0, 0.0, &mut rng) == 0.0)))
            .collect();
        let z = Estimate::of(&xs).z_against((-0.5f64).exp());
        assert!(z.abs() < 4.0, "z={z}");
    }

    #[test]
    fn transition_moments() {
        let mut rng = seeded(3);
        for (x, dt, dim) in [(1.0, 1.0, 0.0), (0.7, 0.3, 2.0), (2.0, 0.5, 3.0), (0.0, 2.0, 2.0)] {
            let xs: Vec<f64> = (0..100_000).map(|_| besq_transition(x, dt, dim, &mut rng)).collect();
            let mean = x + dim * dt;
            let var = 4.0 * dt * x + 2.0 * dim * dt * dt;
            assert!(Estimate::of(&xs).z_against(mean).abs() < 4.0);
            let sq: Vec<f64> = xs.iter().map(|v| (v - mean).powi(2)).collect();
            let zv = Estimate::of(&sq).z_against(var);
            assert!(zv.abs() < 4.0, "({x},{dt},{dim}) z={zv}");
        }
    }

    #[test]
    fn laplace_transform() {
        let mut rng = seeded(4);
        let (x, t, dim, lambda) = (1.3, 0.8, 1.5, 0.7);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| (-lambda * besq_transition(x, t, dim, &mut rng)).exp())
            .collect();
        let s = 1.0 + 2.0 * lambda * t;
        let target = s.powf(-dim / 2.0) * (-lambda * x / s).exp();
        assert!(Estimate::of(&xs).z_against(target).abs() < 4.0);
    }

    #[test]
    fn euler_agrees_with_exact() {
        let mut rng = seeded(5);
        let em: Vec<f64> = (0..4000).map(|_| euler_maruyama_endpoint(1.0, 1e-3, 1.0, 2.0, &mut rng)).collect();
        let ex: Vec<f64> = (0..40_000).map(|_| besq_transition(1.0, 1.0, 2.0, &mut rng)).collect();
        assert!(ks_distance(&em, &ex).unwrap() < 0.04);
        assert!(Estimate::of(&em).z_against(3.0).abs() < 4.0);
        let path = euler_maruyama_besq(1.0, 0.25, 1.0, 0.0, &mut rng);
        assert_eq!(path.len(), 5);
    }

    fn cherry() -> RealTree {
        // root - b (length 0.5), b - leaf1 (0.7), b - leaf2 (0.4)
        RealTree::new(&[None, Some(0), Some(1), Some(1)], &[0.0, 0.5, 0.7, 0.4]).unwrap()
    }

    #[test]
    fn tree_field_basics() {
        let t = cherry();
        let mut rng = seeded(6);
        let f = tree_indexed_besq(&t, 0.0, 0.0, BesqClock::MetricDistance, &mut rng);
        assert!(f.values.iter().all(|&v| v == 0.0));
        let s = zero_statistics(&f, &t);
        assert!(s.hit_zero && s.zero_mass == 1.0);
        let positive = TreeBesqField {
            values: vec![1.0; 4],
            clock: BesqClock::MetricDistance,
            dim: 0.0,
        };
        let s = zero_statistics(&positive, &t);
        assert!(!s.hit_zero && s.zero_mass == 0.0);
        assert!(besq_hits_zero(&t, 0.0, BesqClock::MetricDistance, &mut rng));
    }

    #[test]
    fn zero_set_is_descendant_closed() {
        let t = cherry();
        let mut rng = seeded(7);
        for _ in 0..2000 {
            let f = tree_indexed_besq(&t, 0.3, 0.0, BesqClock::MetricDistance, &mut rng);
            for v in 1..4 {
                if f.values[t.parent(v).unwrap()] == 0.0 {
                    assert_eq!(f.values[v], 0.0);
                }
            }
        }
    }

    #[test]
    fn single_edge_marginal() {
        let t = RealTree::new(&[None, Some(0)], &[0.0, 0.8]).unwrap();
        let mut rng = seeded(8);
        let a: Vec<f64> = (0..20_000)
            .map(|_| tree_indexed_besq(&t, 1.0, 0.0, BesqClock::HalfResistance, &mut rng).values[1])
            .collect();
        let b: Vec<f64> = (0..20_000).map(|_| besq_transition(1.0, 0.4, 0.0, &mut rng)).collect();
        assert!(ks_distance(&a, &b).unwrap() < 0.03);
    }

    #[test]
    fn leaves_conditionally_uncorrelated() {
        // partial correlation of the two leaves given the branch value
        let t = cherry();
        let mut rng = seeded(9);
        let draws: Vec<[f64; 3]> = (0..100_000)
            .map(|_| {
                let f = tree_indexed_besq(&t, 1.0, 0.0, BesqClock::MetricDistance, &mut rng);
                [f.values[1], f.values[2], f.values[3]]
            })
            .collect();
        // E[leaf | b] = b, so residuals leaf - b are conditionally centred and independent
        let prods: Vec<f64> = draws.iter().map(|d| (d[1] - d[0]) * (d[2] - d[0])).collect();
        assert!(Estimate::of(&prods).z_against(0.0).abs() < 4.0);
    }

    #[test]
    fn additivity() {
        let t = cherry();
        let mut rng = seeded(10);
        let n = 60_000;
        let sums: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a = tree_indexed_besq(&t, 0.4, 0.0, BesqClock::MetricDistance, &mut rng);
                let b = tree_indexed_besq(&t, 0.6, 2.0, BesqClock::MetricDistance, &mut rng);
                a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect()
            })
            .collect();
        let single: Vec<Vec<f64>> = (0..n)
            .map(|_| tree_indexed_besq(&t, 1.0, 2.0, BesqClock::MetricDistance, &mut rng).values)
            .collect();
        for v in 0..4 {
            for p in [1, 2] {
                let a: Vec<f64> = sums.iter().map(|s| s[v].powi(p)).collect();
                let b: Vec<f64> = single.iter().map(|s| s[v].powi(p)).collect();
                let z = Estimate::of(&a).z_versus(&Estimate::of(&b));
                assert!(z.abs() < 4.0, "node {v} moment {p}: z={z}");
            }
        }
    }

    #[test]
    fn markov_branching_resample() {
        // regenerating the subtree below the branch point from its value
        let t = cherry();
        let sub = RealTree::new(&[None, Some(0), Some(0)], &[0.0, 0.7, 0.4]).unwrap();
        let mut rng = seeded(11);
        let mut direct = vec![Vec::new(); 2];
        let mut resampled = vec![Vec::new(); 2];
        for _ in 0..60_000 {
            let f = tree_indexed_besq(&t, 1.0, 0.0, BesqClock::MetricDistance, &mut rng);
            direct[0].push(f.values[2]);
            direct[1].push(f.values[3]);
            let g = tree_indexed_besq(&sub, f.values[1], 0.0, BesqClock::MetricDistance, &mut rng);
            resampled[0].push(g.values[1]);
            resampled[1].push(g.values[2]);
        }
        for k in 0..2 {
            let z = Estimate::of(&direct[k]).z_versus(&Estimate::of(&resampled[k]));
            assert!(z.abs() < 4.0);
        }
    }
}
