//! Tree-indexed Gaussian fields, the determinant formula for local-time
//! moment generating functions, and the isomorphism check.
//!
//! All matrices are in resistance units of the unit-conductance tree, so a
//! resistance equals a graph distance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rand_tree::{covering_number, diameter, DiscreteTree, TreeMetricIndex};
use crate::rng::{replicate, SimRng, Streams};
use crate::stats::{Estimate, Moments};
use crate::walk::{run_until_hit, WalkError, WalkMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("mark {0} coincides with the killing vertex")]
    MarkAtKill(usize),
    #[error("expected {expected} lambdas, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("lambda too large: det(I - Sigma Lambda) = {0} is not positive")]
    LambdaTooLarge(f64),
    #[error("tree needs at least {min} vertices, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("need at least {min} replicas, got {got}")]
    TooFewReplicas { min: usize, got: usize },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFieldSample {
    pub values: Vec<f64>,
    pub root: usize,
    pub scale: f64,
}

/// Centered Gaussian field with `G(root) = 0` and independent `N(0, scale)`
/// increments along edges, so `Cov(G_w, G_z) = scale * R(root, b(root, w, z))`.
pub fn sample_tree_gaussian(
    tree: &DiscreteTree,
    root: usize,
    scale: f64,
    rng: &mut SimRng,
) -> Result<GaussianFieldSample, FieldError> {
    if !(scale > 0.0) {
        return Err(FieldError::BadScale(scale));
    }
    Ok(GaussianFieldSample {
        values: field_values(tree, root, scale.sqrt(), rng),
        root,
        scale,
    })
}

fn field_values(tree: &DiscreteTree, root: usize, sd: f64, rng: &mut SimRng) -> Vec<f64> {
    let n = tree.n();
    let mut values = vec![f64::NAN; n];
    values[root] = 0.0;
    let mut queue = vec![root];
    let mut i = 0;
    while i < queue.len() {
        let v = queue[i];
        i += 1;
        for &w in tree.neighbors(v) {
            if values[w].is_nan() {
                let z: f64 = StandardNormal.sample(rng);
                values[w] = values[v] + sd * z;
                queue.push(w);
            }
        }
    }
    values
}

/// `Sigma` and `Sigma_hat` for a start `x`, a killing vertex `y` and marks.
///
/// Marks are stored sorted by `R(y, b(x, y, z))`, marks on the geodesic from
/// `x` to `y` first among ties, then grouped by off-path component.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrices {
    pub sigma: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    /// Marks in matrix order.
    pub marks: Vec<usize>,
    /// `order[k]` is the input position of the mark in row `k`.
    pub order: Vec<usize>,
    /// Off-path component of each row; `None` for marks on the geodesic.
    pub component: Vec<Option<usize>>,
    pub x: usize,
    pub y: usize,
}

impl SigmaMatrices {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Row indices of each off-path component, in matrix order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for (k, c) in self.component.iter().enumerate() {
            if let Some(c) = *c {
                match out.iter_mut().find(|(id, _)| *id == c) {
                    Some((_, rows)) => rows.push(k),
                    None => out.push((c, vec![k])),
                }
            }
        }
        out.into_iter().map(|(_, rows)| rows).collect()
    }

    /// `Sigma_hat` restricted to the rows and columns of one component.
    pub fn sigma_tilde(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.sigma_hat[(rows[i], rows[j])])
    }

    /// Lambdas given in input order, rearranged into matrix order.
    pub fn lambda_diag(&self, lambdas: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        if lambdas.len() != self.len() {
            return Err(FieldError::LengthMismatch {
                expected: self.len(),
                got: lambdas.len(),
            });
        }
        let mut d = DMatrix::zeros(self.len(), self.len());
        for (k, &i) in self.order.iter().enumerate() {
            d[(k, k)] = lambdas[i];
        }
        Ok(d)
    }
}

pub fn build_sigma_matrices(
    index: &TreeMetricIndex,
    x: usize,
    y: usize,
    marks: &[usize],
) -> Result<SigmaMatrices, FieldError> {
    if let Some(&z) = marks.iter().find(|&&z| z == y) {
        return Err(FieldError::MarkAtKill(z));
    }
    let m = marks.len();
    let foot: Vec<usize> = marks.iter().map(|&z| index.branch_point(x, y, z)).collect();
    let on_path: Vec<bool> = marks.iter().zip(&foot).map(|(&z, &b)| z == b).collect();
    // marks sharing a foot lie in one component when their geodesic avoids it
    let mut comp: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        if on_path[i] || comp[i].is_some() {
            continue;
        }
        comp[i] = Some(i);
        for j in i + 1..m {
            if !on_path[j]
                && comp[j].is_none()
                && foot[j] == foot[i]
                && index.branch_point(foot[i], marks[i], marks[j]) != foot[i]
            {
                comp[j] = Some(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| {
        (
            index.distance(y, foot[i]),
            !on_path[i],
            comp[i].unwrap_or(i),
            i,
        )
    });
    let sorted: Vec<usize> = order.iter().map(|&i| marks[i]).collect();
    let sigma = DMatrix::from_fn(m, m, |i, j| {
        index.distance(y, index.branch_point(y, sorted[i], sorted[j])) as f64
    });
    let sigma_hat = DMatrix::from_fn(m, m, |i, j| {
        sigma[(i, j)] - index.distance(y, foot[order[j]]) as f64
    });
    Ok(SigmaMatrices {
        sigma,
        sigma_hat,
        marks: sorted,
        order: order.clone(),
        component: order.iter().map(|&i| comp[i]).collect(),
        x,
        y,
    })
}

/// Uniform `x` and `y` and between 1 and `max_marks` marks away from `y`.
pub fn random_configuration(
    tree: &DiscreteTree,
    rng: &mut SimRng,
    max_marks: usize,
) -> (usize, usize, Vec<usize>) {
    let n = tree.n();
    let y = rng.random_range(0..n);
    let x = rng.random_range(0..n);
    if n == 1 {
        return (x, y, Vec::new());
    }
    let k = rng.random_range(1..=max_marks.max(1));
    let marks = (0..k)
        .map(|_| loop {
            let z = rng.random_range(0..n);
            if z != y {
                break z;
            }
        })
        .collect();
    (x, y, marks)
}

/// Lambdas drawn uniformly from `[-1/Sigma_ii, 0.9/(M Sigma_ii)]`, in the
/// marks' input order; `det(I - Sigma Lambda)` stays positive.
pub fn admissible_lambdas(m: &SigmaMatrices, rng: &mut SimRng) -> Vec<f64> {
    let k = m.len();
    (0..k)
        .map(|i| {
            let row = m.order.iter().position(|&o| o == i).expect("permutation");
            let s = m.sigma[(row, row)].max(1.0);
            rng.random_range(-1.0 / s..=0.9 / (k as f64 * s))
        })
        .collect()
}

/// `det(I - Sigma_hat Lambda) / det(I - Sigma Lambda)`, lambdas in input order.
pub fn mgf_determinant(m: &SigmaMatrices, lambdas: &[f64]) -> Result<f64, FieldError> {
    let lam = m.lambda_diag(lambdas)?;
    let id = DMatrix::<f64>::identity(m.len(), m.len());
    let den = (&id - &m.sigma * &lam).determinant();
    if !(den > 0.0) {
        return Err(FieldError::LambdaTooLarge(den));
    }
    Ok((&id - &m.sigma_hat * &lam).determinant() / den)
}

/// Per-mark comparison of the two sides of the isomorphism identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkComparison {
    pub mark: usize,
    pub lhs_mean: Estimate,
    pub rhs_mean: Estimate,
    pub lhs_second: Estimate,
    pub rhs_second: Estimate,
    pub z_first: f64,
    pub z_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsomorphismReport {
    pub x: usize,
    pub y: usize,
    pub replicas: usize,
    pub marks: Vec<MarkComparison>,
}

impl IsomorphismReport {
    pub fn max_abs_z(&self) -> f64 {
        self.marks
            .iter()
            .flat_map(|m| [m.z_first.abs(), m.z_second.abs()])
            .fold(0.0, f64::max)
    }
}

pub const MIN_ISOMORPHISM_REPLICAS: usize = 10_000;

/// Monte Carlo check of
/// `L_{tau_y}(z) + (G_z - G_b)^2 + (G'_z - G'_b)^2 = G_z^2 + G'_z^2` in law,
/// `b = b(x, y, z)`, using the constant-speed walk and two independent
/// fields of scale 1/2 rooted at `y`. Each side uses its own draws.
pub fn check_isomorphism(
    tree: &DiscreteTree,
    x: usize,
    y: usize,
    marks: &[usize],
    replicas: usize,
    streams: &Streams,
) -> Result<IsomorphismReport, FieldError> {
    if replicas < MIN_ISOMORPHISM_REPLICAS {
        return Err(FieldError::TooFewReplicas {
            min: MIN_ISOMORPHISM_REPLICAS,
            got: replicas,
        });
    }
    let index = TreeMetricIndex::new(tree);
    let feet: Vec<usize> = marks.iter().map(|&z| index.branch_point(x, y, z)).collect();
    let sd = 0.5f64.sqrt();
    let rows: Vec<Result<(Vec<f64>, Vec<f64>), WalkError>> =
        replicate(streams, tree.n() as u64, replicas, |rng, _| {
            let hit = run_until_hit(tree, WalkMode::CONSTANT_SPEED, x, y, marks, rng)?;
            let g1 = field_values(tree, y, sd, rng);
            let g2 = field_values(tree, y, sd, rng);
            let h1 = field_values(tree, y, sd, rng);
            let h2 = field_values(tree, y, sd, rng);
            let lhs = marks
                .iter()
                .zip(&feet)
                .zip(&hit.local_times)
                .map(|((&z, &b), &l)| l + (g1[z] - g1[b]).powi(2) + (g2[z] - g2[b]).powi(2))
                .collect();
            let rhs = marks.iter().map(|&z| h1[z].powi(2) + h2[z].powi(2)).collect();
            Ok((lhs, rhs))
        });
    let mut acc = vec![[Moments::default(); 4]; marks.len()];
    for row in rows {
        let (lhs, rhs) = row?;
        for (k, a) in acc.iter_mut().enumerate() {
            a[0].push(lhs[k]);
            a[1].push(rhs[k]);
            a[2].push(lhs[k] * lhs[k]);
            a[3].push(rhs[k] * rhs[k]);
        }
    }
    let est = |m: &Moments| Estimate {
        mean: m.mean,
        stderr: m.stderr(),
        count: m.count,
    };
    let cmp = marks
        .iter()
        .zip(&acc)
        .map(|(&mark, a)| {
            let (l1, r1, l2, r2) = (est(&a[0]), est(&a[1]), est(&a[2]), est(&a[3]));
            MarkComparison {
                mark,
                z_first: l1.z_versus(&r1),
                z_second: l2.z_versus(&r2),
                lhs_mean: l1,
                rhs_mean: r1,
                lhs_second: l2,
                rhs_second: r2,
            }
        })
        .collect();
    Ok(IsomorphismReport {
        x,
        y,
        replicas,
        marks: cmp,
    })
}

pub const MIN_GFF_REPLICAS: usize = 1000;

/// Monte Carlo estimate of `E[max_v G(v)]` for the field with
/// `Cov(G_v, G_w) = d(root, b(root, v, w))`.
pub fn gff_max_expectation(
    tree: &DiscreteTree,
    root: usize,
    replicas: usize,
    streams: &Streams,
) -> Result<Estimate, FieldError> {
    if replicas < MIN_GFF_REPLICAS {
        return Err(FieldError::TooFewReplicas {
            min: MIN_GFF_REPLICAS,
            got: replicas,
        });
    }
    let maxima = replicate(streams, tree.n() as u64, replicas, |rng, _| {
        field_values(tree, root, 1.0, rng)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(Estimate::of(&maxima))
}

/// One scale of the chaining functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdnpTerm {
    pub i: u32,
    pub radius: usize,
    pub covering: usize,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdnpBound {
    pub n: usize,
    pub diameter: usize,
    pub terms: Vec<BdnpTerm>,
    /// `sum_i sqrt(2^-i ln A_i)`.
    pub functional: f64,
    /// `functional * n * D`.
    pub bound: f64,
}

/// `sum_{i=1}^{K} sqrt(2^-i ln A_i)` with `A_i` the covering number at
/// radius `floor(2^-i D)` and `K = max(1, floor(log2 ln n))`.
pub fn bdnp_bound(tree: &DiscreteTree) -> Result<BdnpBound, FieldError> {
    let n = tree.n();
    if n < 4 {
        return Err(FieldError::TooSmall { n, min: 4 });
    }
    let d = diameter(tree);
    let k = ((n as f64).ln().log2().floor() as u32).max(1);
    let terms: Vec<BdnpTerm> = (1..=k)
        .map(|i| {
            let radius = d >> i;
            let covering = covering_number(tree, radius);
            BdnpTerm {
                i,
                radius,
                covering,
                term: bdnp_term(i, covering),
            }
        })
        .collect();
    let functional = terms.iter().map(|t| t.term).sum();
    Ok(BdnpBound {
        n,
        diameter: d,
        terms,
        functional,
        bound: functional * n as f64 * d as f64,
    })
}

pub fn bdnp_term(i: u32, covering: usize) -> f64 {
    (0.5f64.powi(i as i32) * (covering as f64).ln()).sqrt()
}
