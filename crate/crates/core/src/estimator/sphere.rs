//! Maximization of weighted indicator sums over the unit sphere.
//!
//! K = 2 is exact (one circle sweep). For K ≥ 3 a coarse-to-fine grid picks
//! starting points, then coordinate ascent along great circles refines them;
//! each great-circle step is itself an exact 1-D sweep, so the search moves
//! between arcs rather than probing points. The result is a local optimum
//! that dominates every point probed on the way, not a certified global one.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{self, domain};

use super::sweep::{arc_containing, maximize_on_circle, ArcTerm, TrigQuad};

/// Coarse-to-fine grid settings for K ≥ 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub points_per_level: usize,
    pub levels: usize,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self { points_per_level: 720, levels: 3 }
    }
}

/// `½ (b − center)' matrix (b − center)`, `matrix` symmetric row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub matrix: Vec<f64>,
    pub center: Vec<f64>,
}

impl Quadratic {
    pub fn value(&self, b: &[f64]) -> f64 {
        let k = self.center.len();
        let d: Vec<f64> = b.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        let mut s = 0.0;
        for r in 0..k {
            for c in 0..k {
                s += d[r] * self.matrix[r * k + c] * d[c];
            }
        }
        0.5 * s
    }
}

/// `Σ_j w_j 1[v_j'b > 0] (+ quadratic)` over `‖b‖ = 1`.
#[derive(Debug, Clone)]
pub struct SphereObjective {
    k: usize,
    weights: Vec<f64>,
    vectors: Vec<f64>,
    quad: Option<Quadratic>,
}

impl SphereObjective {
    pub fn new(k: usize, weights: Vec<f64>, vectors: Vec<f64>, quad: Option<Quadratic>) -> Self {
        assert_eq!(weights.len() * k, vectors.len());
        Self { k, weights, vectors, quad }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.k..(j + 1) * self.k]
    }

    pub fn step_value(&self, b: &[f64]) -> f64 {
        (0..self.weights.len())
            .filter(|&j| dot(self.vector(j), b) > 0.0)
            .map(|j| self.weights[j])
            .sum()
    }

    pub fn value(&self, b: &[f64]) -> f64 {
        self.step_value(b) + self.quad.as_ref().map_or(0.0, |q| q.value(b))
    }

    fn tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.weights.iter().map(|w| w.abs()).sum::<f64>())
    }

    /// Step terms restricted to the great circle `cos θ · p + sin θ · q`.
    pub fn circle_terms(&self, p: &[f64], q: &[f64]) -> Vec<ArcTerm> {
        (0..self.weights.len())
            .map(|j| {
                let v = self.vector(j);
                ArcTerm { weight: self.weights[j], z: [dot(v, p), dot(v, q)] }
            })
            .collect()
    }

    fn circle_quad(&self, p: &[f64], q: &[f64]) -> Option<TrigQuad> {
        self.quad.as_ref().map(|quad| TrigQuad::from_quadratic_form(&quad.matrix, &quad.center, p, q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereMax {
    pub b: Vec<f64>,
    pub value: f64,
    /// The step part is constant over the sphere (as far as the search saw).
    pub constant: bool,
    /// Number of points or great circles examined.
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn unit(k: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; k];
    e[j] = 1.0;
    e
}

/// Orthonormal basis of the tangent space at unit vector `c`.
fn tangent_basis(c: &[f64]) -> Vec<Vec<f64>> {
    let k = c.len();
    // Drop the axis most aligned with c, Gram-Schmidt the rest.
    let skip = (0..k).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs())).unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    for j in (0..k).filter(|&j| j != skip) {
        let mut v = unit(k, j);
        for u in std::iter::once(c).chain(basis.iter().map(|b| b.as_slice())) {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        }
        normalize(&mut v);
        basis.push(v);
    }
    basis
}

fn rotate(b: &[f64], u: &[f64], theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut out: Vec<f64> = b.iter().zip(u).map(|(x, y)| c * x + s * y).collect();
    normalize(&mut out);
    out
}

fn random_tangent(c: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..c.len()).map(|_| StandardNormal.sample(rng)).collect();
        let p = dot(&v, c);
        v.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
        if dot(&v, &v) > 1e-12 {
            normalize(&mut v);
            return v;
        }
    }
}

fn global_points(k: usize, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    if k == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|j| {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * j as f64;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    } else {
        (0..count)
            .map(|_| {
                let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                normalize(&mut v);
                v
            })
            .collect()
    }
}

/// Deterministic grid of `count` unit directions: equally spaced angles for
/// K = 2, a Fibonacci lattice for K = 3, seeded Gaussian draws otherwise.
pub fn direction_grid(k: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => global_points(k, count, &mut crate::rng::stream(seed, crate::rng::domain::SEARCH, 0)),
    }
}

fn cap_points(center: &[f64], radius: f64, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let k = center.len();
    let basis = tangent_basis(center);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|j| {
            let (dir, rad) = if k == 3 {
                let a = golden * j as f64;
                let rad = radius * ((j as f64 + 0.5) / count as f64).sqrt();
                let d: Vec<f64> = (0..k).map(|m| a.cos() * basis[0][m] + a.sin() * basis[1][m]).collect();
                (d, rad)
            } else {
                let d = random_tangent(center, rng);
                let u: f64 = rng.random();
                (d, radius * u.powf(1.0 / (k - 1) as f64))
            };
            rotate(center, &dir, rad)
        })
        .collect()
}

/// Ranks candidates by value (descending), stable on index.
fn top_candidates(obj: &SphereObjective, points: Vec<Vec<f64>>, keep: usize) -> Vec<(Vec<f64>, f64)> {
    use rayon::prelude::*;
    let values: Vec<f64> = points.par_iter().map(|b| obj.value(b)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.into_iter().map(|j| (points[j].clone(), values[j])).collect()
}

/// Coordinate ascent along great circles through `b`.
fn great_circle_ascent(obj: &SphereObjective, mut b: Vec<f64>, mut value: f64, rng: &mut impl Rng, evals: &mut usize) -> (Vec<f64>, f64) {
    let tol = obj.tolerance();
    for _ in 0..200 {
        let mut improved = false;
        let mut dirs = tangent_basis(&b);
        dirs.push(random_tangent(&b, rng));
        dirs.push(random_tangent(&b, rng));
        for u in dirs {
            let u = {
                // re-orthogonalize against the current point
                let mut v = u;
                let p = dot(&v, &b);
                v.iter_mut().zip(&b).for_each(|(x, y)| *x -= p * y);
                if dot(&v, &v) < 1e-20 {
                    continue;
                }
                normalize(&mut v);
                v
            };
            let terms = obj.circle_terms(&b, &u);
            let quad = obj.circle_quad(&b, &u);
            let m = maximize_on_circle(&terms, quad.as_ref());
            *evals += 1;
            if m.value > value + tol {
                b = rotate(&b, &u, m.theta);
                value = obj.value(&b);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (b, value)
}

/// Moves `b` to the middle of its region of constancy along each axis of
/// the tangent space (step-only objectives).
fn center_in_region(obj: &SphereObjective, mut b: Vec<f64>) -> Vec<f64> {
    let target = obj.step_value(&b);
    for _ in 0..2 {
        for u in tangent_basis(&b) {
            let terms = obj.circle_terms(&b, &u);
            if let Some((lo, hi)) = arc_containing(&terms, 0.0) {
                if hi - lo < std::f64::consts::TAU {
                    let candidate = rotate(&b, &u, 0.5 * (lo + hi));
                    if obj.step_value(&candidate) == target {
                        b = candidate;
                    }
                }
            }
        }
    }
    b
}

pub fn maximize_on_sphere(obj: &SphereObjective, grid: &BetaGrid, seed: u64) -> SphereMax {
    let k = obj.k();
    match k {
        0 => panic!("empty parameter vector"),
        1 => {
            let (vp, vm) = (obj.value(&[1.0]), obj.value(&[-1.0]));
            let constant = (obj.step_value(&[1.0]) - obj.step_value(&[-1.0])).abs() <= obj.tolerance();
            let (b, value) = if vm > vp + obj.tolerance() { (vec![-1.0], vm) } else { (vec![1.0], vp) };
            SphereMax { b, value, constant, evaluations: 2 }
        }
        2 => {
            let terms = obj.circle_terms(&[1.0, 0.0], &[0.0, 1.0]);
            let quad = obj.circle_quad(&[1.0, 0.0], &[0.0, 1.0]);
            let m = maximize_on_circle(&terms, quad.as_ref());
            let b = if m.constant && quad.is_none() { vec![1.0, 0.0] } else { vec![m.theta.cos(), m.theta.sin()] };
            let value = obj.value(&b);
            SphereMax { b, value, constant: m.constant, evaluations: m.pieces }
        }
        _ => search_high_dim(obj, grid, seed),
    }
}

fn search_high_dim(obj: &SphereObjective, grid: &BetaGrid, seed: u64) -> SphereMax {
    const KEEP: usize = 8;
    const STARTS: usize = 4;
    let k = obj.k();
    let mut rng = rng::stream(seed, domain::SEARCH, 0);
    let mut evals = 0;

    let level0 = global_points(k, grid.points_per_level, &mut rng);
    evals += level0.len();
    let (step_min, step_max) = level0.iter().map(|b| obj.step_value(b)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut pool = top_candidates(obj, level0, KEEP);

    let spacing = std::f64::consts::PI * (grid.points_per_level as f64).powf(-1.0 / (k - 1) as f64);
    for level in 1..grid.levels {
        let radius = 2.0 * spacing / 4f64.powi(level as i32 - 1);
        let per_center = (grid.points_per_level / pool.len()).max(4);
        let mut points: Vec<Vec<f64>> = pool.iter().map(|(b, _)| b.clone()).collect();
        for (c, _) in &pool {
            points.extend(cap_points(c, radius, per_center, &mut rng));
        }
        evals += points.len();
        pool = top_candidates(obj, points, KEEP);
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let tol = obj.tolerance();
    for (start, v0) in pool.into_iter().take(STARTS) {
        let (b, v) = great_circle_ascent(obj, start, v0, &mut rng, &mut evals);
        if best.as_ref().is_none_or(|(_, bv)| v > bv + tol) {
            best = Some((b, v));
        }
    }
    let (mut b, _) = best.expect("at least one start");
    let constant = step_max - step_min <= tol && obj.step_value(&b) - step_min <= tol;
    if obj.quad.is_none() {
        if constant {
            b = unit(k, 0);
        } else {
            b = center_in_region(obj, b);
        }
    }
    let value = obj.value(&b);
    SphereMax { b, value, constant, evaluations: evals }
}
