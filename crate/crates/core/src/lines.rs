//! Reducing points in `R^d` to points on lines.
//!
//! [`approx_cluster`] gives an unconstrained clustering whose cost serves as
//! the OPT estimate. [`build_lines`] then finds a small set of lines whose
//! projection cost `Σ d^z'(x, nearest line)` fits a budget:
//!
//! - k-means: line-Lloyd (assign to the nearest line, refit each line by its
//!   principal direction) with `m = 1, 2, 4, …` lines until the budget holds;
//! - k-median: rays from the approximate centers, first along each
//!   cluster's principal direction, then toward the point with the largest
//!   residual, falling back to an explicit net of directions for a center
//!   once its ray count reaches the net size.
//!
//! [`project`] maps every point to its nearest line.

use std::borrow::Borrow;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Objective, Point};
use crate::line_coreset::LineDataset;
use crate::par;

/// Assumed approximation factor of [`approx_cluster`] when sizing the
/// fallback direction net (net resolution `ε/(3c)`).
pub const NET_APPROX_FACTOR: f64 = 10.0;

/// Nets larger than this are never materialized.
pub const MAX_NET_SIZE: usize = 1 << 20;

const LLOYD_ROUNDS: usize = 50;
const LINE_LLOYD_ROUNDS: usize = 10;
const LINE_LLOYD_TOL: f64 = 1e-4;

/// A line through `origin` with unit `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Point,
    pub direction: Vec<f64>,
}

impl Line {
    /// Normalizes `direction`; a zero direction becomes the first axis.
    pub fn new(origin: Point, direction: Vec<f64>) -> Self {
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        let direction = if norm > 0.0 && norm.is_finite() {
            direction.iter().map(|d| d / norm).collect()
        } else {
            axis(origin.dim())
        };
        Line { origin, direction }
    }

    /// Signed position of the orthogonal projection of `p`.
    #[inline]
    pub fn position(&self, p: &Point) -> f64 {
        p.coords()
            .iter()
            .zip(self.origin.coords())
            .zip(&self.direction)
            .map(|((x, o), d)| (x - o) * d)
            .sum()
    }

    /// Squared distance from `p` to the line.
    #[inline]
    pub fn residual_sq(&self, p: &Point) -> f64 {
        let t = self.position(p);
        p.coords()
            .iter()
            .zip(self.origin.coords())
            .zip(&self.direction)
            .map(|((x, o), d)| {
                let r = x - o - t * d;
                r * r
            })
            .sum()
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.origin.offset(&self.direction, t)
    }
}

fn axis(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
    v
}

/// Per-point projection: nearest line, position along it and residual
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub line: usize,
    pub position: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMap {
    pub entries: Vec<Projection>,
}

impl ProjectionMap {
    /// `Σ residual^z'` with `z' = z`.
    pub fn cost(&self, z: Objective) -> f64 {
        self.entries
            .iter()
            .map(|e| z.cost_from_sq(e.residual * e.residual))
            .sum()
    }
}

/// An unconstrained clustering used as an OPT upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxClustering {
    pub centers: CenterSet,
    pub cost: f64,
    pub assignment: Vec<usize>,
}

fn assign(points: &[Point], centers: &[Point]) -> Vec<(usize, f64)> {
    par::map_slice(points, |p| {
        let mut best = (0, f64::INFINITY);
        for (i, c) in centers.iter().enumerate() {
            let d2 = p.dist_sq(c);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    })
}

fn seed_centers(points: &[Point], k: usize, z: Objective, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist_sq(&points[chosen[0]])).collect();
    while chosen.len() < k {
        let w: Vec<f64> = d2.iter().map(|&d| z.cost_from_sq(d)).collect();
        let total: f64 = w.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &wi) in w.iter().enumerate() {
                if wi > 0.0 {
                    if r < wi {
                        pick = i;
                        break;
                    }
                    r -= wi;
                    pick = i;
                }
            }
            pick
        } else {
            // Every point coincides with a chosen center.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.dist_sq(&points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn coordinate_median(points: &[Point], members: &[usize], dim: usize) -> Point {
    let mut coords = Vec::with_capacity(dim);
    let mut buf: Vec<f64> = Vec::with_capacity(members.len());
    for j in 0..dim {
        buf.clear();
        buf.extend(members.iter().map(|&i| points[i].coords()[j]));
        buf.sort_by(f64::total_cmp);
        let m = buf.len();
        coords.push(if m % 2 == 1 {
            buf[m / 2]
        } else {
            0.5 * (buf[m / 2 - 1] + buf[m / 2])
        });
    }
    Point::new(coords)
}

fn lloyd(points: &[Point], k: usize, z: Objective, seed: u64, rounds: usize) -> ApproxClustering {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points[0].dim();
    let mut centers = seed_centers(points, k, z, &mut rng);
    let mut best: Option<ApproxClustering> = None;
    for _ in 0..rounds.max(1) {
        let a = assign(points, &centers);
        let cost: f64 = a.iter().map(|&(_, d2)| z.cost_from_sq(d2)).sum();
        let improved = best
            .as_ref()
            .is_none_or(|b| cost < b.cost * (1.0 - 1e-9));
        if improved {
            best = Some(ApproxClustering {
                centers: CenterSet {
                    centers: centers.clone(),
                },
                cost,
                assignment: a.iter().map(|x| x.0).collect(),
            });
        } else {
            break;
        }
        let mut members = vec![Vec::new(); k];
        for (i, &(c, _)) in a.iter().enumerate() {
            members[c].push(i);
        }
        for (c, m) in centers.iter_mut().zip(&members) {
            if m.is_empty() {
                continue;
            }
            *c = match z {
                Objective::KMeans => {
                    let mut acc = vec![0.0; dim];
                    for &i in m {
                        for (a, x) in acc.iter_mut().zip(points[i].coords()) {
                            *a += x;
                        }
                    }
                    Point::new(acc.into_iter().map(|a| a / m.len() as f64).collect())
                }
                Objective::KMedian => coordinate_median(points, m, dim),
            };
        }
    }
    best.expect("at least one round")
}

/// k-means++-style seeding followed by Lloyd rounds (means for k-means,
/// coordinate-wise medians for k-median). Deterministic in `seed`.
pub fn approx_cluster(points: &[Point], k: usize, z: Objective, seed: u64) -> Result<ApproxClustering> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }
    Ok(lloyd(points, k, z, seed, LLOYD_ROUNDS))
}

/// Line through the weighted centroid along the top principal direction,
/// which minimizes `Σ w·d²(x, line)`.
pub fn fit_principal_line<P: Borrow<Point>>(points: &[P], weights: &[f64]) -> Line {
    let dim = points.first().map_or(0, |p| p.borrow().dim());
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; dim];
    for (p, &w) in points.iter().zip(weights) {
        for (m, x) in mean.iter_mut().zip(p.borrow().coords()) {
            *m += w * x;
        }
    }
    if total > 0.0 {
        mean.iter_mut().for_each(|m| *m /= total);
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for (p, &w) in points.iter().zip(weights) {
        let c: Vec<f64> = p.borrow().coords().iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += w * c[i] * c[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    let origin = Point::new(mean);
    if dim == 0 || cov.iter().all(|&v| v == 0.0) {
        return Line::new(origin, axis(dim));
    }
    let eig = SymmetricEigen::new(cov);
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    let mut dir: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    // Fix the sign so the result does not depend on the eigen solver.
    if let Some(lead) = dir.iter().copied().find(|v| v.abs() > 1e-12) {
        if lead < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Line::new(origin, dir)
}

/// Index of the nearest line (lowest on ties) and the squared residual.
fn nearest_line(lines: &[Line], p: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, l) in lines.iter().enumerate() {
        let r = l.residual_sq(p);
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

/// `Σ d^z(x, nearest line)`.
pub fn projection_cost(points: &[Point], lines: &[Line], z: Objective) -> f64 {
    par::map_slice(points, |p| z.cost_from_sq(nearest_line(lines, p).1))
        .into_iter()
        .sum()
}

/// One step of the line-count schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineAttempt {
    pub lines: usize,
    pub cost: f64,
}

/// Lines meeting a projection budget, with the attempts that led there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCover {
    pub lines: Vec<Line>,
    pub cost: f64,
    pub budget: f64,
    pub attempts: Vec<LineAttempt>,
}

/// Finds lines with `Σ d^z(x, nearest line) ≤ budget` (see module docs).
pub fn build_lines(
    points: &[Point],
    k: usize,
    z: Objective,
    budget: f64,
    epsilon: f64,
    seed: u64,
) -> Result<LineCover> {
    let approx = approx_cluster(points, k.min(points.len()).max(1), z, seed)?;
    build_lines_from(points, &approx, z, budget, epsilon, seed)
}

/// [`build_lines`] with a precomputed approximate clustering.
pub fn build_lines_from(
    points: &[Point],
    approx: &ApproxClustering,
    z: Objective,
    budget: f64,
    epsilon: f64,
    seed: u64,
) -> Result<LineCover> {
    if !(budget > 0.0) {
        return Err(Error::InvalidParam(format!(
            "projection budget must be positive, got {budget}"
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    match z {
        Objective::KMeans => Ok(line_lloyd_cover(points, budget, seed)),
        Objective::KMedian => Ok(adaptive_rays(points, approx, budget, epsilon)),
    }
}

fn refit(points: &[Point], lines: &mut [Line]) -> f64 {
    let a = par::map_slice(points, |p| nearest_line(lines, p));
    let mut members: Vec<Vec<&Point>> = vec![Vec::new(); lines.len()];
    for (p, &(l, _)) in points.iter().zip(&a) {
        members[l].push(p);
    }
    let fitted = par::map_slice(&members, |m| {
        (!m.is_empty()).then(|| fit_principal_line(m, &vec![1.0; m.len()]))
    });
    for (l, f) in lines.iter_mut().zip(fitted) {
        if let Some(f) = f {
            *l = f;
        }
    }
    projection_cost(points, lines, Objective::KMeans)
}

fn seed_lines(points: &[Point], m: usize, seed: u64) -> Vec<Line> {
    if m == 1 {
        return vec![fit_principal_line(points, &vec![1.0; points.len()])];
    }
    let init = lloyd(points, m, Objective::KMeans, seed, LINE_LLOYD_ROUNDS);
    let mut members: Vec<Vec<&Point>> = vec![Vec::new(); m];
    for (p, &c) in points.iter().zip(&init.assignment) {
        members[c].push(p);
    }
    members
        .iter()
        .zip(&init.centers.centers)
        .map(|(mem, c)| {
            if mem.is_empty() {
                Line::new(c.clone(), axis(c.dim()))
            } else {
                fit_principal_line(mem, &vec![1.0; mem.len()])
            }
        })
        .collect()
}

fn line_lloyd_cover(points: &[Point], budget: f64, seed: u64) -> LineCover {
    let n = points.len();
    let mut attempts = Vec::new();
    let mut m = 1;
    loop {
        let mut lines = seed_lines(points, m, seed);
        let mut cost = projection_cost(points, &lines, Objective::KMeans);
        for _ in 0..LINE_LLOYD_ROUNDS {
            if cost <= budget {
                break;
            }
            let mut next = lines.clone();
            let c = refit(points, &mut next);
            if c < cost {
                let gain = (cost - c) / cost;
                lines = next;
                cost = c;
                if gain < LINE_LLOYD_TOL {
                    break;
                }
            } else {
                break;
            }
        }
        attempts.push(LineAttempt { lines: m, cost });
        if cost <= budget || m >= n {
            return LineCover {
                lines,
                cost,
                budget,
                attempts,
            };
        }
        m = (2 * m).min(n);
    }
}

/// Size of the direction net at resolution `delta` in `dim` dimensions, or
/// `None` if it exceeds [`MAX_NET_SIZE`].
pub fn net_size(dim: usize, delta: f64) -> Option<usize> {
    if dim <= 1 {
        return Some(2);
    }
    let per_axis = grid_points_per_axis(dim, delta);
    let mut size = 2 * dim;
    for _ in 0..dim - 1 {
        size = size.checked_mul(per_axis)?;
        if size > MAX_NET_SIZE {
            return None;
        }
    }
    Some(size)
}

fn grid_points_per_axis(dim: usize, delta: f64) -> usize {
    // Grid spacing h on each cube face puts every face point within
    // h·√(d-1)/2 of a grid point; radial projection onto the sphere is
    // 1-Lipschitz outside the unit ball, so h = 2δ/√(d-1) gives a δ-net.
    let h = 2.0 * delta / ((dim - 1) as f64).sqrt();
    (2.0 / h).ceil() as usize + 1
}

/// A `delta`-net of the unit sphere in `R^dim`: every unit vector is within
/// `delta` of some returned unit vector. Built from grids on the faces of
/// the cube `[-1,1]^dim`, projected radially.
pub fn sphere_net(dim: usize, delta: f64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || !(delta > 0.0) {
        return Err(Error::InvalidParam("sphere net needs dim ≥ 1 and delta > 0".into()));
    }
    if net_size(dim, delta).is_none() {
        return Err(Error::InvalidParam(format!(
            "a {delta}-net in {dim} dimensions exceeds {MAX_NET_SIZE} directions"
        )));
    }
    if dim == 1 {
        return Ok(vec![vec![1.0], vec![-1.0]]);
    }
    let g = grid_points_per_axis(dim, delta);
    let step = 2.0 / (g - 1) as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim - 1];
    for face_axis in 0..dim {
        for sign in [1.0, -1.0] {
            idx.iter_mut().for_each(|i| *i = 0);
            loop {
                let mut v = Vec::with_capacity(dim);
                let mut free = idx.iter();
                for a in 0..dim {
                    if a == face_axis {
                        v.push(sign);
                    } else {
                        v.push(-1.0 + step * *free.next().expect("dim-1 free axes") as f64);
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(v.into_iter().map(|x| x / norm).collect());
                // odometer over the free coordinates
                let mut carry = true;
                for i in idx.iter_mut() {
                    if !carry {
                        break;
                    }
                    *i += 1;
                    if *i == g {
                        *i = 0;
                    } else {
                        carry = false;
                    }
                }
                if carry {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn adaptive_rays(points: &[Point], approx: &ApproxClustering, budget: f64, epsilon: f64) -> LineCover {
    let centers = &approx.centers.centers;
    let dim = points[0].dim();
    let mut members: Vec<Vec<&Point>> = vec![Vec::new(); centers.len()];
    for (p, &c) in points.iter().zip(&approx.assignment) {
        members[c].push(p);
    }

    let mut lines: Vec<Line> = Vec::new();
    let mut rays_of = vec![0usize; centers.len()];
    for (i, (c, m)) in centers.iter().zip(&members).enumerate() {
        if m.is_empty() {
            continue;
        }
        let dir = fit_principal_line(m, &vec![1.0; m.len()]).direction;
        lines.push(Line::new(c.clone(), dir));
        rays_of[i] += 1;
    }
    let mut resid: Vec<f64> = par::map_slice(points, |p| nearest_line(&lines, p).1);
    let mut cost: f64 = resid.iter().map(|r| r.sqrt()).sum();
    let mut attempts = vec![LineAttempt {
        lines: lines.len(),
        cost,
    }];

    let cap = net_size(dim, epsilon / (3.0 * NET_APPROX_FACTOR)).unwrap_or(usize::MAX);
    let mut netted = vec![false; centers.len()];
    while cost > budget {
        let (far, _) = resid
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &r)| if r > b.1 { (i, r) } else { b });
        let owner = approx.assignment[far];
        let center = &centers[owner];
        let before = lines.len();
        if rays_of[owner] >= cap && !netted[owner] {
            netted[owner] = true;
            if let Ok(net) = sphere_net(dim, epsilon / (3.0 * NET_APPROX_FACTOR)) {
                lines.extend(net.into_iter().map(|d| Line::new(center.clone(), d)));
            }
        }
        if lines.len() == before {
            let dir: Vec<f64> = points[far]
                .coords()
                .iter()
                .zip(center.coords())
                .map(|(x, c)| x - c)
                .collect();
            // The farthest point sits on the center only if every residual
            // is zero, in which case cost ≤ budget already held.
            lines.push(Line::new(center.clone(), dir));
        }
        rays_of[owner] += lines.len() - before;
        let added = &lines[before..];
        let updates = par::map_range(points.len(), |i| {
            added
                .iter()
                .map(|l| l.residual_sq(&points[i]))
                .fold(resid[i], f64::min)
        });
        resid = updates;
        cost = resid.iter().map(|r| r.sqrt()).sum();
        if lines.len().is_power_of_two() {
            attempts.push(LineAttempt {
                lines: lines.len(),
                cost,
            });
        }
    }
    if attempts.last().is_none_or(|a| a.lines != lines.len()) {
        attempts.push(LineAttempt {
            lines: lines.len(),
            cost,
        });
    }
    LineCover {
        lines,
        cost,
        budget,
        attempts,
    }
}

/// Projects every point onto its nearest line (lowest index on ties).
/// Returns one [`LineDataset`] per line (possibly empty) and the per-point
/// projection map.
pub fn project(points: &[Point], lines: &[Line]) -> Result<(Vec<LineDataset>, ProjectionMap)> {
    if lines.is_empty() {
        return Err(Error::InvalidParam("need at least one line".into()));
    }
    let entries: Vec<Projection> = par::map_slice(points, |p| {
        let (line, r2) = nearest_line(lines, p);
        Projection {
            line,
            position: lines[line].position(p),
            residual: r2.sqrt(),
        }
    });
    let mut positions = vec![Vec::new(); lines.len()];
    let mut sources = vec![Vec::new(); lines.len()];
    for (i, e) in entries.iter().enumerate() {
        positions[e.line].push(e.position);
        sources[e.line].push(i);
    }
    let datasets = lines
        .iter()
        .zip(positions.into_iter().zip(sources))
        .map(|(l, (pos, src))| LineDataset::new(pos, l.origin.clone(), l.direction.clone(), src))
        .collect::<Result<Vec<_>>>()?;
    Ok((datasets, ProjectionMap { entries }))
}
