//! Random walks on trees: cover times, local times and exact small-instance
//! oracles.
//!
//! Local times are occupation times divided by the speed measure `mu`:
//! `mu(v) = 1` for [`LocalMeasure::Counting`] and `mu(v) = deg(v)` for
//! [`LocalMeasure::Conductance`]. With unit conductances the effective
//! resistance between two vertices is their graph distance.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rand_tree::{DiscreteTree, TreeMetricIndex};
use crate::rng::SimRng;

/// Default cap on the number of jumps in one simulation.
pub const STEP_BUDGET: u64 = 10_000_000_000;
/// Largest tree accepted by [`expected_cover_exact_small`].
pub const MAX_EXACT_COVER_N: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("step budget of {budget} jumps exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("vertex {v} out of range for a tree on {n} vertices")]
    InvalidVertex { v: usize, n: usize },
    #[error("exact cover oracle supports n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("lambda too large: the killed Feynman-Kac system is not positive definite")]
    LambdaTooLarge,
    #[error("marks and lambdas differ in length ({marks} vs {lambdas})")]
    LengthMismatch { marks: usize, lambdas: usize },
    #[error("singular linear system")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    /// One jump per unit of time.
    DiscreteTime,
    /// Unit-mean exponential holding time before each jump.
    ConstantSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalMeasure {
    Counting,
    Conductance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkMode {
    pub kind: WalkKind,
    pub measure: LocalMeasure,
}

impl WalkMode {
    pub const DISCRETE: WalkMode = WalkMode {
        kind: WalkKind::DiscreteTime,
        measure: LocalMeasure::Counting,
    };
    pub const CONSTANT_SPEED: WalkMode = WalkMode {
        kind: WalkKind::ConstantSpeed,
        measure: LocalMeasure::Conductance,
    };

    pub fn new(kind: WalkKind, measure: LocalMeasure) -> Self {
        Self { kind, measure }
    }
}

/// `mu(v)` for the chosen measure.
pub fn speed_measure(tree: &DiscreteTree, measure: LocalMeasure, v: usize) -> f64 {
    match measure {
        LocalMeasure::Counting => 1.0,
        LocalMeasure::Conductance => tree.degree(v) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverRecord {
    pub tau_cov: f64,
    pub tau_cov_plus: f64,
    /// Jumps made up to `tau_cov` and `tau_cov_plus`.
    pub jumps_cov: u64,
    pub jumps_cov_plus: u64,
    pub start: usize,
    pub last_covered: usize,
    /// Local times at `tau_cov` and `tau_cov_plus`, when requested.
    pub local_times_cov: Option<Vec<f64>>,
    pub local_times_cov_plus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub hit_time: f64,
    pub jumps: u64,
    /// Local times at the hitting time, one per requested mark.
    pub local_times: Vec<f64>,
}

fn check_vertex(tree: &DiscreteTree, v: usize) -> Result<(), WalkError> {
    if v < tree.n() {
        Ok(())
    } else {
        Err(WalkError::InvalidVertex { v, n: tree.n() })
    }
}

/// Neighbour lists packed for the inner loop: `slot[v] = offset << 32 | degree`.
struct Jumps {
    slot: Vec<u64>,
    adj: Vec<u32>,
}

impl Jumps {
    fn new(tree: &DiscreteTree) -> Self {
        let mut slot = Vec::with_capacity(tree.n());
        let mut adj = Vec::with_capacity(2 * tree.n());
        for v in 0..tree.n() {
            let nb = tree.neighbors(v);
            slot.push((adj.len() as u64) << 32 | nb.len() as u64);
            adj.extend(nb.iter().map(|&w| w as u32));
        }
        Self { slot, adj }
    }

    #[inline(always)]
    fn next(&self, v: usize, rng: &mut SimRng) -> usize {
        let s = self.slot[v];
        let off = (s >> 32) as usize;
        let deg = s as u32;
        self.adj[off + bounded_u32(rng, deg) as usize] as usize
    }
}

/// Unbiased draw from `0..range` (Lemire's multiply-and-reject).
#[inline(always)]
fn bounded_u32(rng: &mut SimRng, range: u32) -> u32 {
    let mut m = u64::from(rng.next_u32()) * u64::from(range);
    if (m as u32) < range {
        let threshold = range.wrapping_neg() % range;
        while (m as u32) < threshold {
            m = u64::from(rng.next_u32()) * u64::from(range);
        }
    }
    (m >> 32) as u32
}

/// Walk state advanced one jump at a time.
struct Walker<'a> {
    tree: &'a DiscreteTree,
    jumps_table: Jumps,
    kind: WalkKind,
    v: usize,
    time: f64,
    jumps: u64,
    budget: u64,
    occupation: Option<Vec<f64>>,
}

impl<'a> Walker<'a> {
    fn new(tree: &'a DiscreteTree, kind: WalkKind, start: usize, budget: u64, record: bool) -> Self {
        Self {
            tree,
            jumps_table: Jumps::new(tree),
            kind,
            v: start,
            time: 0.0,
            jumps: 0,
            budget,
            occupation: record.then(|| vec![0.0; tree.n()]),
        }
    }

    #[inline(always)]
    fn step(&mut self, rng: &mut SimRng) -> Result<usize, WalkError> {
        if self.jumps >= self.budget {
            return Err(WalkError::BudgetExceeded {
                budget: self.budget,
            });
        }
        let hold = match self.kind {
            WalkKind::DiscreteTime => 1.0,
            WalkKind::ConstantSpeed => Exp1.sample(rng),
        };
        if let Some(occ) = self.occupation.as_mut() {
            occ[self.v] += hold;
        }
        self.time += hold;
        self.v = self.jumps_table.next(self.v, rng);
        self.jumps += 1;
        Ok(self.v)
    }

    fn local_times(&self, measure: LocalMeasure) -> Option<Vec<f64>> {
        self.occupation.as_ref().map(|occ| {
            occ.iter()
                .enumerate()
                .map(|(v, o)| o / speed_measure(self.tree, measure, v))
                .collect()
        })
    }
}

/// Runs one walk until every vertex is visited and the walk is back at `start`.
pub fn run_cover(
    tree: &DiscreteTree,
    mode: WalkMode,
    start: usize,
    record_local_times: bool,
    rng: &mut SimRng,
) -> Result<CoverRecord, WalkError> {
    run_cover_with_budget(tree, mode, start, record_local_times, STEP_BUDGET, rng)
}

pub fn run_cover_with_budget(
    tree: &DiscreteTree,
    mode: WalkMode,
    start: usize,
    record_local_times: bool,
    budget: u64,
    rng: &mut SimRng,
) -> Result<CoverRecord, WalkError> {
    check_vertex(tree, start)?;
    if mode.kind == WalkKind::DiscreteTime && !record_local_times {
        return discrete_cover(tree, start, budget, rng);
    }
    let n = tree.n();
    let mut walker = Walker::new(tree, mode.kind, start, budget, record_local_times);
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut uncovered = n - 1;
    let mut last_covered = start;
    while uncovered > 0 {
        let v = walker.step(rng)?;
        if !visited[v] {
            visited[v] = true;
            uncovered -= 1;
            last_covered = v;
        }
    }
    let tau_cov = walker.time;
    let jumps_cov = walker.jumps;
    let local_times_cov = walker.local_times(mode.measure);
    while walker.v != start {
        walker.step(rng)?;
    }
    Ok(CoverRecord {
        tau_cov,
        tau_cov_plus: walker.time,
        jumps_cov,
        jumps_cov_plus: walker.jumps,
        start,
        last_covered,
        local_times_cov,
        local_times_cov_plus: walker.local_times(mode.measure),
    })
}

fn discrete_cover(
    tree: &DiscreteTree,
    start: usize,
    budget: u64,
    rng: &mut SimRng,
) -> Result<CoverRecord, WalkError> {
    let table = Jumps::new(tree);
    let mut visited = vec![false; tree.n()];
    visited[start] = true;
    let mut uncovered = tree.n() - 1;
    let mut last_covered = start;
    let mut v = start;
    let mut jumps = 0u64;
    while uncovered > 0 {
        if jumps >= budget {
            return Err(WalkError::BudgetExceeded { budget });
        }
        v = table.next(v, rng);
        jumps += 1;
        if !visited[v] {
            visited[v] = true;
            uncovered -= 1;
            last_covered = v;
        }
    }
    let jumps_cov = jumps;
    while v != start {
        if jumps >= budget {
            return Err(WalkError::BudgetExceeded { budget });
        }
        v = table.next(v, rng);
        jumps += 1;
    }
    Ok(CoverRecord {
        tau_cov: jumps_cov as f64,
        tau_cov_plus: jumps as f64,
        jumps_cov,
        jumps_cov_plus: jumps,
        start,
        last_covered,
        local_times_cov: None,
        local_times_cov_plus: None,
    })
}

/// Runs one walk from `start` until it first hits `target`, returning the
/// local times at `marks` at that moment.
pub fn run_until_hit(
    tree: &DiscreteTree,
    mode: WalkMode,
    start: usize,
    target: usize,
    marks: &[usize],
    rng: &mut SimRng,
) -> Result<HitRecord, WalkError> {
    check_vertex(tree, start)?;
    check_vertex(tree, target)?;
    for &m in marks {
        check_vertex(tree, m)?;
    }
    let mut walker = Walker::new(tree, mode.kind, start, STEP_BUDGET, true);
    while walker.v != target {
        walker.step(rng)?;
    }
    let lt = walker.local_times(mode.measure).expect("recording enabled");
    Ok(HitRecord {
        hit_time: walker.time,
        jumps: walker.jumps,
        local_times: marks.iter().map(|&m| lt[m]).collect(),
    })
}

/// Checks the discrete cover identity on a record carrying local times at
/// `tau_cov`: every vertex except the last one covered has positive local
/// time, and the last one has none.
pub fn cover_identity_holds(record: &CoverRecord) -> bool {
    let Some(lt) = record.local_times_cov.as_ref() else {
        return false;
    };
    if lt.len() == 1 {
        return record.tau_cov == 0.0;
    }
    lt.iter().enumerate().all(|(v, &l)| {
        if v == record.last_covered {
            l == 0.0
        } else {
            l > 0.0
        }
    })
}

/// `E_v[tau_y]` for every `v`. Holding times have unit mean in both walk
/// kinds, so the answer does not depend on the mode.
pub fn hitting_times_to(tree: &DiscreteTree, y: usize) -> Result<Vec<f64>, WalkError> {
    check_vertex(tree, y)?;
    let n = tree.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for v in 0..n {
        a[(v, v)] = 1.0;
        if v == y {
            continue;
        }
        let nb = tree.neighbors(v);
        let p = 1.0 / nb.len() as f64;
        for &w in nb {
            a[(v, w)] -= p;
        }
        b[v] = 1.0;
    }
    let h = a.lu().solve(&b).ok_or(WalkError::Singular)?;
    Ok(h.iter().copied().collect())
}

pub fn expected_hitting_exact(
    tree: &DiscreteTree,
    _mode: WalkMode,
    x: usize,
    y: usize,
) -> Result<f64, WalkError> {
    check_vertex(tree, x)?;
    Ok(hitting_times_to(tree, y)?[x])
}

/// Exact `E[tau_cov]` from `start` by dynamic programming over visited sets.
pub fn expected_cover_exact_small(
    tree: &DiscreteTree,
    _mode: WalkMode,
    start: usize,
) -> Result<f64, WalkError> {
    check_vertex(tree, start)?;
    let n = tree.n();
    if n > MAX_EXACT_COVER_N {
        return Err(WalkError::TooLarge {
            n,
            max: MAX_EXACT_COVER_N,
        });
    }
    if n == 1 {
        return Ok(0.0);
    }
    let full = (1usize << n) - 1;
    // f[set * n + v]: expected remaining cover time at v having visited `set`
    let mut f = vec![0.0f64; (full + 1) * n];
    let mut sets: Vec<usize> = (1..full)
        .filter(|&s| s >> start & 1 == 1 && connected(tree, s))
        .collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for set in sets {
        let members: Vec<usize> = (0..n).filter(|&v| set >> v & 1 == 1).collect();
        let k = members.len();
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in members.iter().enumerate() {
            pos[v] = i;
        }
        let mut a = DMatrix::<f64>::identity(k, k);
        let mut b = DVector::<f64>::from_element(k, 1.0);
        for (i, &v) in members.iter().enumerate() {
            let nb = tree.neighbors(v);
            let p = 1.0 / nb.len() as f64;
            for &w in nb {
                if set >> w & 1 == 1 {
                    a[(i, pos[w])] -= p;
                } else {
                    let bigger = set | 1 << w;
                    b[i] += p * f[bigger * n + w];
                }
            }
        }
        let sol = a.lu().solve(&b).ok_or(WalkError::Singular)?;
        for (i, &v) in members.iter().enumerate() {
            f[set * n + v] = sol[i];
        }
    }
    Ok(f[(1 << start) * n + start])
}

fn connected(tree: &DiscreteTree, set: usize) -> bool {
    let first = set.trailing_zeros() as usize;
    let mut seen = 1usize << first;
    let mut stack = vec![first];
    while let Some(v) = stack.pop() {
        for &w in tree.neighbors(v) {
            if set >> w & 1 == 1 && seen >> w & 1 == 0 {
                seen |= 1 << w;
                stack.push(w);
            }
        }
    }
    seen == set
}

/// `E_x[exp(sum_i lambda_i L_{tau_y}(z_i))]` for the constant-speed walk,
/// solved from the killed Feynman–Kac system.
pub fn mgf_local_times_exact(
    tree: &DiscreteTree,
    measure: LocalMeasure,
    x: usize,
    y: usize,
    marks: &[usize],
    lambdas: &[f64],
) -> Result<f64, WalkError> {
    if marks.len() != lambdas.len() {
        return Err(WalkError::LengthMismatch {
            marks: marks.len(),
            lambdas: lambdas.len(),
        });
    }
    check_vertex(tree, x)?;
    check_vertex(tree, y)?;
    for &m in marks {
        check_vertex(tree, m)?;
    }
    if x == y {
        return Ok(1.0);
    }
    let n = tree.n();
    let mut theta = vec![0.0; n];
    for (&z, &l) in marks.iter().zip(lambdas) {
        theta[z] += l / speed_measure(tree, measure, z);
    }
    // Unknowns are the vertices other than y, which is relabelled away.
    let idx = |v: usize| if v < y { v } else { v - 1 };
    let m = n - 1;
    let mut k = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for v in (0..n).filter(|&v| v != y) {
        let deg = tree.degree(v) as f64;
        k[(idx(v), idx(v))] = deg * (1.0 - theta[v]);
        for &w in tree.neighbors(v) {
            if w == y {
                b[idx(v)] = 1.0;
            } else {
                k[(idx(v), idx(w))] = -1.0;
            }
        }
    }
    let chol = k.cholesky().ok_or(WalkError::LambdaTooLarge)?;
    Ok(chol.solve(&b)[idx(x)])
}

/// Potential density of the walk killed at `y`: `R(y, b(y, z, w))`.
pub fn green_killed(index: &TreeMetricIndex, y: usize, z: usize, w: usize) -> f64 {
    index.distance(y, index.branch_point(y, z, w)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_tree::{enumerate_rooted_trees, sample_conditioned_gw, OffspringLaw};
    use crate::rng::seeded;
    use crate::stats::Estimate;
    use rand::Rng;

    fn random_tree(n: usize, seed: u64) -> DiscreteTree {
        sample_conditioned_gw(&OffspringLaw::poisson1(), n, &mut seeded(seed)).unwrap()
    }

    /// `E_z[occupation of w before tau_y]` from a fresh linear solve.
    fn expected_occupation(tree: &DiscreteTree, y: usize, z: usize, w: usize) -> f64 {
        let n = tree.n();
        let mut a = DMatrix::<f64>::identity(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for v in (0..n).filter(|&v| v != y) {
            for &u in tree.neighbors(v) {
                a[(v, u)] -= 1.0 / tree.degree(v) as f64;
            }
            if v == w {
                b[v] = 1.0;
            }
        }
        a.lu().solve(&b).unwrap()[z]
    }

    #[test]
    fn two_vertex_cover_is_forced() {
        let t = DiscreteTree::path(2);
        let mut rng = seeded(1);
        for _ in 0..10 {
            let r = run_cover(&t, WalkMode::DISCRETE, 0, true, &mut rng).unwrap();
            assert_eq!((r.tau_cov, r.tau_cov_plus), (1.0, 2.0));
            assert_eq!(r.last_covered, 1);
            assert!(cover_identity_holds(&r));
        }
    }

    #[test]
    fn single_vertex_cover_is_zero() {
        let r = run_cover(&DiscreteTree::single(), WalkMode::DISCRETE, 0, true, &mut seeded(0)).unwrap();
        assert_eq!((r.tau_cov, r.tau_cov_plus), (0.0, 0.0));
        assert!(cover_identity_holds(&r));
    }

    #[test]
    fn recording_does_not_change_the_path() {
        let t = random_tree(40, 5);
        for seed in 0..5 {
            let a = run_cover(&t, WalkMode::DISCRETE, 0, false, &mut seeded(seed)).unwrap();
            let b = run_cover(&t, WalkMode::DISCRETE, 0, true, &mut seeded(seed)).unwrap();
            assert_eq!((a.tau_cov, a.tau_cov_plus, a.last_covered), (b.tau_cov, b.tau_cov_plus, b.last_covered));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let t = DiscreteTree::path(50);
        let err = run_cover_with_budget(&t, WalkMode::DISCRETE, 0, false, 10, &mut seeded(0));
        assert_eq!(err, Err(WalkError::BudgetExceeded { budget: 10 }));
    }

    #[test]
    fn invalid_vertices_rejected() {
        let t = DiscreteTree::path(3);
        assert!(run_cover(&t, WalkMode::DISCRETE, 3, false, &mut seeded(0)).is_err());
        assert!(hitting_times_to(&t, 7).is_err());
    }

    #[test]
    fn cover_identity_every_replica() {
        let mut rng = seeded(2);
        for seed in 0..20 {
            let t = random_tree(30, seed);
            for mode in [WalkMode::DISCRETE, WalkMode::CONSTANT_SPEED] {
                let r = run_cover(&t, mode, 0, true, &mut rng).unwrap();
                assert!(cover_identity_holds(&r));
                assert!(r.tau_cov_plus >= r.tau_cov);
                let lt = r.local_times_cov_plus.unwrap();
                assert!(lt.iter().all(|&l| l > 0.0));
            }
        }
    }

    #[test]
    fn occupation_sums_to_elapsed_time() {
        let t = random_tree(25, 4);
        let r = run_cover(&t, WalkMode::new(WalkKind::ConstantSpeed, LocalMeasure::Counting), 0, true, &mut seeded(3)).unwrap();
        let total: f64 = r.local_times_cov_plus.unwrap().iter().sum();
        assert!((total - r.tau_cov_plus).abs() < 1e-9 * r.tau_cov_plus);
    }

    #[test]
    fn hitting_examples() {
        let p2 = DiscreteTree::path(2);
        let sum = expected_hitting_exact(&p2, WalkMode::DISCRETE, 0, 1).unwrap()
            + expected_hitting_exact(&p2, WalkMode::DISCRETE, 1, 0).unwrap();
        assert!((sum - 2.0).abs() < 1e-12);
        let p3 = DiscreteTree::path(3);
        assert!((expected_hitting_exact(&p3, WalkMode::DISCRETE, 0, 2).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn commute_identity() {
        let mut rng = seeded(9);
        for seed in 0..10 {
            let t = random_tree(20 + 18 * seed as usize, seed);
            let ix = TreeMetricIndex::new(&t);
            let n = t.n();
            for _ in 0..5 {
                let x = rng.random_range(0..n);
                let y = rng.random_range(0..n);
                let hx = hitting_times_to(&t, y).unwrap();
                let hy = hitting_times_to(&t, x).unwrap();
                let expect = 2.0 * (n - 1) as f64 * ix.distance(x, y) as f64;
                assert!((hx[x] + hy[y] - expect).abs() < 1e-9 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn exact_cover_examples() {
        let p2 = DiscreteTree::path(2);
        assert!((expected_cover_exact_small(&p2, WalkMode::DISCRETE, 0).unwrap() - 1.0).abs() < 1e-12);
        let p3 = DiscreteTree::path(3);
        assert!((expected_cover_exact_small(&p3, WalkMode::DISCRETE, 1).unwrap() - 5.0).abs() < 1e-12);
        // from an end of the 3-path the cover time is the hitting time of the other end
        assert!((expected_cover_exact_small(&p3, WalkMode::DISCRETE, 0).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(
            expected_cover_exact_small(&DiscreteTree::path(15), WalkMode::DISCRETE, 0),
            Err(WalkError::TooLarge { .. })
        ));
    }

    #[test]
    fn exact_cover_star() {
        // coupon collector on k leaves, two steps per attempt, minus the final return
        for k in 1..=6usize {
            let harmonic: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
            let expect = 2.0 * k as f64 * harmonic - 1.0;
            let got = expected_cover_exact_small(&DiscreteTree::star(k), WalkMode::DISCRETE, 0).unwrap();
            assert!((got - expect).abs() < 1e-10, "k={k}: {got} vs {expect}");
        }
    }

    #[test]
    fn cover_mc_matches_dp_small() {
        let mut rng = seeded(10);
        for t in enumerate_rooted_trees(5) {
            let exact = expected_cover_exact_small(&t, WalkMode::DISCRETE, 0).unwrap();
            let xs: Vec<f64> = (0..20_000)
                .map(|_| run_cover(&t, WalkMode::DISCRETE, 0, false, &mut rng).unwrap().tau_cov)
                .collect();
            let z = Estimate::of(&xs).z_against(exact);
            assert!(z.abs() < 4.0, "z={z}");
        }
    }

    #[test]
    fn hit_local_time_example() {
        let t = DiscreteTree::path(3);
        let mut rng = seeded(11);
        let r = run_until_hit(&t, WalkMode::CONSTANT_SPEED, 0, 0, &[1, 2], &mut rng).unwrap();
        assert_eq!(r.hit_time, 0.0);
        assert_eq!(r.local_times, vec![0.0, 0.0]);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| run_until_hit(&t, WalkMode::CONSTANT_SPEED, 2, 0, &[2], &mut rng).unwrap().local_times[0])
            .collect();
        let z = Estimate::of(&xs).z_against(2.0);
        assert!(z.abs() < 4.0, "z={z}");
    }

    #[test]
    fn green_matches_linear_solve() {
        let mut rng = seeded(12);
        for seed in 0..20 {
            let t = random_tree(25, 100 + seed);
            let ix = TreeMetricIndex::new(&t);
            let (y, z, w) = (
                rng.random_range(0..t.n()),
                rng.random_range(0..t.n()),
                rng.random_range(0..t.n()),
            );
            let occ = expected_occupation(&t, y, z, w);
            let lt = occ / speed_measure(&t, LocalMeasure::Conductance, w);
            assert!((green_killed(&ix, y, z, w) - lt).abs() < 1e-9);
        }
        let p3 = DiscreteTree::path(3);
        let ix = TreeMetricIndex::new(&p3);
        assert_eq!(green_killed(&ix, 0, 2, 2), 2.0);
        assert_eq!(green_killed(&ix, 0, 0, 2), 0.0);
    }

    #[test]
    fn hit_mean_matches_green() {
        let mut rng = seeded(13);
        for seed in 0..5 {
            let t = random_tree(12, 200 + seed);
            let ix = TreeMetricIndex::new(&t);
            let (x, y, w) = (
                rng.random_range(0..t.n()),
                rng.random_range(0..t.n()),
                rng.random_range(0..t.n()),
            );
            let xs: Vec<f64> = (0..20_000)
                .map(|_| run_until_hit(&t, WalkMode::CONSTANT_SPEED, x, y, &[w], &mut rng).unwrap().local_times[0])
                .collect();
            let z = Estimate::of(&xs).z_against(green_killed(&ix, y, x, w));
            assert!(z.abs() < 4.0, "z={z}");
        }
    }

    #[test]
    fn mgf_examples() {
        let p3 = DiscreteTree::path(3);
        let m = mgf_local_times_exact(&p3, LocalMeasure::Conductance, 2, 0, &[1], &[0.0]).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
        for lambda in [-2.0, -0.5, 0.3, 0.9] {
            let m = mgf_local_times_exact(&p3, LocalMeasure::Conductance, 2, 0, &[1], &[lambda]).unwrap();
            assert!((m - 1.0 / (1.0 - lambda)).abs() < 1e-12, "{lambda}");
        }
        assert_eq!(
            mgf_local_times_exact(&p3, LocalMeasure::Conductance, 2, 0, &[1], &[1.5]),
            Err(WalkError::LambdaTooLarge)
        );
    }

    #[test]
    fn mgf_matches_monte_carlo() {
        let t = random_tree(8, 31);
        let marks = [3usize, 5, 7];
        let lambdas = [0.05, -0.1, 0.08];
        let exact = mgf_local_times_exact(&t, LocalMeasure::Conductance, 6, 1, &marks, &lambdas).unwrap();
        let mut rng = seeded(14);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let r = run_until_hit(&t, WalkMode::CONSTANT_SPEED, 6, 1, &marks, &mut rng).unwrap();
                r.local_times.iter().zip(&lambdas).map(|(l, k)| l * k).sum::<f64>().exp()
            })
            .collect();
        let z = Estimate::of(&xs).z_against(exact);
        assert!(z.abs() < 4.0, "z={z} exact={exact}");
    }
}
