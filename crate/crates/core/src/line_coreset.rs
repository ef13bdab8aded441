//! Coresets for points lying on a line.
//!
//! Sorted positions are cut greedily, left to right, into maximal batches
//! whose moment error stays within a threshold `ξ`. For k-median each batch
//! is replaced by its mean with weight `|B|` and `ξ = ε·OPT/(30k)`; for
//! k-means each batch is replaced by two weighted points matching its
//! weight, mean and second moment, with `ξ = ε²·OPT/(200k²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GroupProfile, Objective, Point, WeightedPointSet};

/// Points on a line in `R^d`, as sorted scalar positions plus the map back
/// to `R^d`: position `t` lifts to `origin + t·direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineDataset {
    positions: Vec<f64>,
    origin: Point,
    direction: Vec<f64>,
    source_indices: Vec<usize>,
}

impl LineDataset {
    /// Sorts `positions` (carrying `source_indices` along) and normalizes
    /// `direction`.
    pub fn new(
        positions: Vec<f64>,
        origin: Point,
        direction: Vec<f64>,
        source_indices: Vec<usize>,
    ) -> Result<Self> {
        if positions.len() != source_indices.len() {
            return Err(Error::InvalidParam(format!(
                "{} positions but {} source indices",
                positions.len(),
                source_indices.len()
            )));
        }
        if origin.dim() != direction.len() {
            return Err(Error::DimensionMismatch {
                expected: origin.dim(),
                got: direction.len(),
            });
        }
        if let Some(&bad) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite position {bad}")));
        }
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParam("line direction must be nonzero".into()));
        }
        let direction = direction.iter().map(|d| d / norm).collect();
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
        Ok(LineDataset {
            positions: order.iter().map(|&i| positions[i]).collect(),
            source_indices: order.iter().map(|&i| source_indices[i]).collect(),
            origin,
            direction,
        })
    }

    /// Positions on the real line (`d = 1`, origin 0).
    pub fn from_positions(positions: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, Point::new(vec![0.0]), vec![1.0], (0..n).collect())
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn lift(&self, t: f64) -> Point {
        self.origin.offset(&self.direction, t)
    }
}

/// A contiguous run `start..end` of a [`LineDataset`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
    /// `Δ_z` of the batch, computed exactly at close.
    pub err: f64,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    // Shifted to the first element to keep the sum small.
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// `Δ_z` of unit-weight positions, by direct summation.
pub fn batch_error(xs: &[f64], z: Objective) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mu = mean_of(xs);
    match z {
        Objective::KMedian => xs.iter().map(|x| (x - mu).abs()).sum(),
        Objective::KMeans => xs.iter().map(|x| (x - mu) * (x - mu)).sum(),
    }
}

/// Running `Δ_z` of a growing prefix `xs[start..=j]` in O(1) (z = 2) or
/// O(log n) (z = 1) per step, from sums shifted to `xs[start]`.
struct RunningError<'a> {
    xs: &'a [f64],
    z: Objective,
    start: usize,
    shift: f64,
    /// Prefix sums of `xs[i] - shift` over `start..i`, z = 1 only.
    prefix: Vec<f64>,
    s1: f64,
    s2: f64,
}

impl<'a> RunningError<'a> {
    fn new(xs: &'a [f64], z: Objective) -> Self {
        RunningError {
            xs,
            z,
            start: 0,
            shift: 0.0,
            prefix: Vec::new(),
            s1: 0.0,
            s2: 0.0,
        }
    }

    fn reset(&mut self, start: usize) {
        self.start = start;
        self.shift = self.xs[start];
        self.prefix.clear();
        self.prefix.push(0.0);
        self.s1 = 0.0;
        self.s2 = 0.0;
    }

    fn push(&mut self, j: usize) {
        let y = self.xs[j] - self.shift;
        self.s1 += y;
        self.s2 += y * y;
        if self.z == Objective::KMedian {
            self.prefix.push(self.s1);
        }
    }

    /// `Δ_z` of `xs[start..=j]` after pushing `j`.
    fn value(&self, j: usize) -> f64 {
        let n = (j + 1 - self.start) as f64;
        let mu = self.s1 / n;
        match self.z {
            Objective::KMeans => (self.s2 - self.s1 * mu).max(0.0),
            Objective::KMedian => {
                let window = &self.xs[self.start..=j];
                let left = window.partition_point(|&x| x - self.shift <= mu);
                let sum_left = self.prefix[left];
                let sum_right = self.s1 - sum_left;
                let n_left = left as f64;
                let n_right = n - n_left;
                ((mu * n_left - sum_left) + (sum_right - mu * n_right)).max(0.0)
            }
        }
    }
}

/// Greedy left-to-right batches: a batch keeps growing while its `Δ_z` stays
/// `≤ xi` and closes as soon as the next point would push it above `xi`.
pub fn partition_batches(line: &LineDataset, xi: f64, z: Objective) -> Vec<Batch> {
    let xs = line.positions();
    let mut out = Vec::new();
    if xs.is_empty() {
        return out;
    }
    let close = |start: usize, end: usize| {
        let w = &xs[start..end];
        Batch {
            start,
            end,
            mean: mean_of(w),
            err: batch_error(w, z),
        }
    };

    let mut run = RunningError::new(xs, z);
    let mut start = 0;
    run.reset(0);
    run.push(0);
    for j in 1..xs.len() {
        run.push(j);
        let mut delta = run.value(j);
        if (delta - xi).abs() <= 1e-9 * xi.abs() {
            delta = batch_error(&xs[start..=j], z);
        }
        if delta > xi {
            out.push(close(start, j));
            start = j;
            run.reset(j);
            run.push(j);
        }
    }
    out.push(close(start, xs.len()));
    out
}

/// Position and weight of one coreset point on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPosition {
    pub position: f64,
    pub weight: f64,
}

/// A one-dimensional coreset and the number of batches it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCoreset {
    pub entries: Vec<WeightedPosition>,
    pub batches: usize,
    pub xi: f64,
}

impl LineCoreset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Lifts the coreset back to `R^d` along `line`, as a single-profile set.
    pub fn to_weighted_set(&self, line: &LineDataset) -> WeightedPointSet {
        let mut s = WeightedPointSet::empty(vec![
            GroupProfile::new(vec![0]).expect("nonempty profile")
        ]);
        for e in &self.entries {
            s.push(line.lift(e.position), e.weight, 0);
        }
        s
    }
}

fn check_line_params(k: usize, opt_estimate: f64, epsilon: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    if !(opt_estimate >= 0.0) || !opt_estimate.is_finite() {
        return Err(Error::NonPositiveOpt(opt_estimate));
    }
    Ok(())
}

/// Handles the cases that need no batching: empty input, and a line whose
/// points all coincide (which is the only legal input for `OPT = 0`).
fn degenerate(line: &LineDataset, opt_estimate: f64) -> Result<Option<LineCoreset>> {
    let xs = line.positions();
    if xs.is_empty() {
        return Ok(Some(LineCoreset {
            entries: Vec::new(),
            batches: 0,
            xi: 0.0,
        }));
    }
    if xs[0] == xs[xs.len() - 1] {
        return Ok(Some(LineCoreset {
            entries: vec![WeightedPosition {
                position: xs[0],
                weight: xs.len() as f64,
            }],
            batches: 1,
            xi: 0.0,
        }));
    }
    if opt_estimate <= 0.0 {
        return Err(Error::NonPositiveOpt(opt_estimate));
    }
    Ok(None)
}

/// Fair k-median coreset of a line: one point per batch, at the batch mean,
/// weighted by the batch size; `ξ = ε·OPT/(30k)`.
pub fn median_line_coreset(
    line: &LineDataset,
    k: usize,
    opt_estimate: f64,
    epsilon: f64,
) -> Result<LineCoreset> {
    check_line_params(k, opt_estimate, epsilon)?;
    if let Some(c) = degenerate(line, opt_estimate)? {
        return Ok(c);
    }
    let xi = epsilon * opt_estimate / (30.0 * k as f64);
    let batches = partition_batches(line, xi, Objective::KMedian);
    Ok(LineCoreset {
        entries: batches
            .iter()
            .map(|b| WeightedPosition {
                position: b.mean,
                weight: b.len() as f64,
            })
            .collect(),
        batches: batches.len(),
        xi,
    })
}

/// Replaces unit-weight positions by at most two weighted points inside
/// `[min, max]` with the same total weight, mean and `Δ₂`.
///
/// `q1 = min`, `q2 = μ + σ²/(μ - q1)`; Bhatia–Davis (`σ² ≤ (μ-min)(max-μ)`)
/// keeps `q2 ≤ max`.
pub fn two_point_moment_match(batch: &[f64]) -> Vec<WeightedPosition> {
    if batch.is_empty() {
        return Vec::new();
    }
    let n = batch.len() as f64;
    let mu = mean_of(batch);
    let var = batch.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    let lo = batch.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = batch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let below = mu - lo;
    if !(var > 0.0) || !(below > 0.0) {
        return vec![WeightedPosition {
            position: mu,
            weight: n,
        }];
    }
    let q1 = lo;
    let q2 = (mu + var / below).min(hi);
    let w1 = n * (q2 - mu) / (q2 - q1);
    let w2 = n - w1;
    [
        WeightedPosition {
            position: q1,
            weight: w1,
        },
        WeightedPosition {
            position: q2,
            weight: w2,
        },
    ]
    .into_iter()
    .filter(|e| e.weight > 0.0)
    .collect()
}

/// Fair k-means coreset of a line: each batch becomes its two-point moment
/// match; `ξ = ε²·OPT/(200k²)`.
pub fn means_line_coreset(
    line: &LineDataset,
    k: usize,
    opt_estimate: f64,
    epsilon: f64,
) -> Result<LineCoreset> {
    check_line_params(k, opt_estimate, epsilon)?;
    if let Some(c) = degenerate(line, opt_estimate)? {
        return Ok(c);
    }
    let kf = k as f64;
    let xi = epsilon * epsilon * opt_estimate / (200.0 * kf * kf);
    let batches = partition_batches(line, xi, Objective::KMeans);
    let xs = line.positions();
    Ok(LineCoreset {
        entries: batches
            .iter()
            .flat_map(|b| two_point_moment_match(&xs[b.start..b.end]))
            .collect(),
        batches: batches.len(),
        xi,
    })
}

/// Dispatches on `z`.
pub fn line_coreset(
    line: &LineDataset,
    k: usize,
    opt_estimate: f64,
    epsilon: f64,
    z: Objective,
) -> Result<LineCoreset> {
    match z {
        Objective::KMedian => median_line_coreset(line, k, opt_estimate, epsilon),
        Objective::KMeans => means_line_coreset(line, k, opt_estimate, epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ld(xs: &[f64]) -> LineDataset {
        LineDataset::from_positions(xs.to_vec()).unwrap()
    }

    fn ranges(b: &[Batch]) -> Vec<(usize, usize)> {
        b.iter().map(|b| (b.start, b.end)).collect()
    }

    #[test]
    fn batches_example() {
        let b = partition_batches(&ld(&[0.0, 1.0, 2.0, 10.0]), 0.5, Objective::KMeans);
        assert_eq!(ranges(&b), vec![(0, 2), (2, 3), (3, 4)]);
        assert_eq!(b[0].err, 0.5);
        assert_eq!(b[0].mean, 0.5);
    }

    #[test]
    fn batches_large_threshold_and_ties() {
        let xs = [3.0, -1.0, 7.0, 2.5, 100.0];
        for z in [Objective::KMedian, Objective::KMeans] {
            assert_eq!(partition_batches(&ld(&xs), 1e9, z).len(), 1);
            assert_eq!(partition_batches(&ld(&[4.0; 6]), 0.0, z).len(), 1);
        }
    }

    #[test]
    fn z1_batches_close_strictly_above_threshold() {
        // Δ₁({0,1}) = 1, Δ₁({0,1,2}) = 2, Δ₁({2,3}) = 1.
        let b = partition_batches(&ld(&[0.0, 1.0, 2.0, 3.0]), 1.0, Objective::KMedian);
        assert_eq!(ranges(&b), vec![(0, 2), (2, 4)]);
    }

    #[test]
    fn sorts_positions_and_keeps_sources() {
        let l = LineDataset::new(
            vec![3.0, 1.0, 2.0],
            Point::new(vec![1.0, 1.0]),
            vec![0.0, 2.0],
            vec![10, 11, 12],
        )
        .unwrap();
        assert_eq!(l.positions(), &[1.0, 2.0, 3.0]);
        assert_eq!(l.source_indices(), &[11, 12, 10]);
        assert_eq!(l.direction(), &[0.0, 1.0]);
        assert_eq!(l.lift(2.0).coords(), &[1.0, 3.0]);
    }

    #[test]
    fn median_coreset_example() {
        let eps = 0.5;
        // ξ = ε·OPT/(30k) = 0.5 with k = 1.
        let opt = 15.0 / eps;
        let c = median_line_coreset(&ld(&[0.0, 1.0, 2.0, 10.0]), 1, opt, eps).unwrap();
        let got: Vec<(f64, f64)> = c.entries.iter().map(|e| (e.position, e.weight)).collect();
        // Δ₁({0,1}) = 1 > 0.5, so the z = 1 batches are singletons here.
        assert_eq!(c.xi, 0.5);
        assert_eq!(got, vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (10.0, 1.0)]);
        let c = median_line_coreset(&ld(&[0.0, 1.0, 2.0, 10.0]), 1, 2.0 * opt, eps).unwrap();
        let got: Vec<(f64, f64)> = c.entries.iter().map(|e| (e.position, e.weight)).collect();
        assert_eq!(got, vec![(0.5, 2.0), (2.0, 1.0), (10.0, 1.0)]);
    }

    #[test]
    fn single_and_coincident_points() {
        let c = median_line_coreset(&ld(&[4.0]), 2, 0.0, 0.3).unwrap();
        assert_eq!(c.entries, vec![WeightedPosition { position: 4.0, weight: 1.0 }]);
        let c = means_line_coreset(&ld(&[2.0; 5]), 2, 0.0, 0.3).unwrap();
        assert_eq!(c.entries, vec![WeightedPosition { position: 2.0, weight: 5.0 }]);
    }

    #[test]
    fn zero_opt_with_spread_is_rejected() {
        assert!(matches!(
            median_line_coreset(&ld(&[0.0, 1.0]), 1, 0.0, 0.3),
            Err(Error::NonPositiveOpt(_))
        ));
        assert!(means_line_coreset(&ld(&[0.0, 1.0]), 1, -1.0, 0.3).is_err());
        assert!(means_line_coreset(&ld(&[0.0, 1.0]), 1, 1.0, 1.5).is_err());
    }

    #[test]
    fn two_point_examples() {
        let m = two_point_moment_match(&[0.0, 0.0, 4.0]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].position, 0.0);
        assert!((m[0].weight - 2.0).abs() < 1e-12);
        assert!((m[1].position - 4.0).abs() < 1e-12);
        assert!((m[1].weight - 1.0).abs() < 1e-12);

        assert_eq!(
            two_point_moment_match(&[7.0; 4]),
            vec![WeightedPosition { position: 7.0, weight: 4.0 }]
        );

        let m = two_point_moment_match(&[-1.0, 1.0]);
        assert_eq!(
            m,
            vec![
                WeightedPosition { position: -1.0, weight: 1.0 },
                WeightedPosition { position: 1.0, weight: 1.0 }
            ]
        );
    }

    #[test]
    fn means_coreset_on_one_batch() {
        let c = means_line_coreset(&ld(&[0.0, 0.0, 4.0]), 1, 1e6, 0.5).unwrap();
        assert_eq!(c.batches, 1);
        assert_eq!(c.entries, two_point_moment_match(&[0.0, 0.0, 4.0]));
    }

    fn sorted_positions() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 1..40).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #[test]
        fn batches_tile_and_respect_threshold(xs in sorted_positions(), xi in 0.01f64..200.0) {
            for z in [Objective::KMedian, Objective::KMeans] {
                let b = partition_batches(&ld(&xs), xi, z);
                prop_assert_eq!(b[0].start, 0);
                prop_assert_eq!(b.last().unwrap().end, xs.len());
                for w in b.windows(2) {
                    prop_assert_eq!(w[0].end, w[1].start);
                    // maximality: extending by one point exceeds xi
                    prop_assert!(batch_error(&xs[w[0].start..=w[0].end], z) > xi * (1.0 - 1e-9));
                }
                for bb in &b {
                    prop_assert!(bb.err <= xi * (1.0 + 1e-9));
                }
            }
        }

        #[test]
        fn moment_match_preserves_moments(xs in sorted_positions()) {
            let m = two_point_moment_match(&xs);
            let n = xs.len() as f64;
            let w: f64 = m.iter().map(|e| e.weight).sum();
            let mu = xs.iter().sum::<f64>() / n;
            let d2: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
            let mu_m = m.iter().map(|e| e.weight * e.position).sum::<f64>() / w;
            let d2_m: f64 = m.iter().map(|e| e.weight * (e.position - mu_m).powi(2)).sum();
            let scale = 1.0 + xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            prop_assert!((w - n).abs() <= 1e-9 * n);
            prop_assert!((mu_m - mu).abs() <= 1e-9 * scale);
            prop_assert!((d2_m - d2).abs() <= 1e-9 * d2.max(scale * scale));
            for e in &m {
                prop_assert!(e.position >= xs[0] && e.position <= xs[xs.len() - 1]);
                prop_assert!(e.weight > 0.0);
            }
        }
    }
}
