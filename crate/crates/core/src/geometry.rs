//! Points, group profiles, datasets and weighted point sets, plus the two
//! moments every construction is built on: the weighted mean and the moment
//! error `Δ_z(S) = Σ w(p)·d^z(p, mean(S))`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point) -> f64 {
        dist_sq(&self.0, &other.0)
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// `self + t·dir`
    pub fn offset(&self, dir: &[f64], t: f64) -> Point {
        Point(self.0.iter().zip(dir).map(|(o, d)| o + t * d).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Which clustering objective: `z = 1` (k-median) or `z = 2` (k-means).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Objective {
    KMedian,
    KMeans,
}

impl Objective {
    pub fn z(self) -> u8 {
        match self {
            Objective::KMedian => 1,
            Objective::KMeans => 2,
        }
    }

    /// `d^z` given the squared distance.
    #[inline]
    pub fn cost_from_sq(self, d2: f64) -> f64 {
        match self {
            Objective::KMedian => d2.sqrt(),
            Objective::KMeans => d2,
        }
    }

    #[inline]
    pub fn cost(self, a: &Point, b: &Point) -> f64 {
        self.cost_from_sq(a.dist_sq(b))
    }
}

impl TryFrom<u8> for Objective {
    type Error = Error;

    fn try_from(z: u8) -> Result<Self> {
        match z {
            1 => Ok(Objective::KMedian),
            2 => Ok(Objective::KMeans),
            other => Err(Error::InvalidParam(format!("z must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Objective> for u8 {
    fn from(o: Objective) -> u8 {
        o.z()
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::KMedian => f.write_str("k-median"),
            Objective::KMeans => f.write_str("k-means"),
        }
    }
}

/// The set of groups a point belongs to. Stored sorted and deduplicated, so
/// structural equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupProfile(Vec<usize>);

impl GroupProfile {
    pub fn new(mut groups: Vec<usize>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidParam("group profile must be nonempty".into()));
        }
        groups.sort_unstable();
        groups.dedup();
        Ok(GroupProfile(groups))
    }

    pub fn groups(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, group: usize) -> bool {
        self.0.binary_search(&group).is_ok()
    }
}

/// `n` points in `R^d`, each tagged with one of `Γ` distinct group profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<Point>,
    pub profile_of: Vec<usize>,
    pub profiles: Vec<GroupProfile>,
    pub num_groups: usize,
}

impl Dataset {
    /// Builds a dataset from per-point group memberships, deduplicating
    /// profiles in order of first appearance.
    pub fn from_memberships(
        points: Vec<Point>,
        memberships: Vec<Vec<usize>>,
        num_groups: usize,
    ) -> Result<Self> {
        if points.len() != memberships.len() {
            return Err(Error::InvalidParam(format!(
                "{} points but {} membership lists",
                points.len(),
                memberships.len()
            )));
        }
        let mut index: HashMap<GroupProfile, usize> = HashMap::new();
        let mut profiles = Vec::new();
        let mut profile_of = Vec::with_capacity(points.len());
        for groups in memberships {
            let profile = GroupProfile::new(groups)?;
            if let Some(&g) = profile.groups().iter().find(|&&g| g >= num_groups) {
                return Err(Error::InvalidParam(format!(
                    "group {g} out of range for {num_groups} groups"
                )));
            }
            let id = *index.entry(profile.clone()).or_insert_with(|| {
                profiles.push(profile);
                profiles.len() - 1
            });
            profile_of.push(id);
        }
        Ok(Dataset {
            points,
            profile_of,
            profiles,
            num_groups,
        })
    }

    /// A dataset where every point belongs to the single group 0.
    pub fn single_group(points: Vec<Point>) -> Self {
        let n = points.len();
        Dataset {
            points,
            profile_of: vec![0; n],
            profiles: vec![GroupProfile(vec![0])],
            num_groups: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    pub fn num_profiles(&self) -> usize {
        self.profiles.len()
    }

    /// Point indices of each profile class `X^(t)`.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.profiles.len()];
        for (i, &t) in self.profile_of.iter().enumerate() {
            classes[t].push(i);
        }
        classes
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.profiles.len()];
        for &t in &self.profile_of {
            sizes[t] += 1;
        }
        sizes
    }

    /// The dataset restricted to the given profiles, renumbered in the order
    /// given. Group indices are preserved.
    pub fn restrict_to_profiles(&self, keep: &[usize]) -> Dataset {
        let mut remap = vec![usize::MAX; self.profiles.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut points = Vec::new();
        let mut profile_of = Vec::new();
        for (p, &t) in self.points.iter().zip(&self.profile_of) {
            if remap[t] != usize::MAX {
                points.push(p.clone());
                profile_of.push(remap[t]);
            }
        }
        Dataset {
            points,
            profile_of,
            profiles: keep.iter().map(|&t| self.profiles[t].clone()).collect(),
            num_groups: self.num_groups,
        }
    }

    /// The dataset as a weighted set with unit weights.
    pub fn to_weighted(&self) -> WeightedPointSet {
        WeightedPointSet {
            points: self.points.clone(),
            weights: vec![1.0; self.points.len()],
            profile_of: self.profile_of.clone(),
            profiles: self.profiles.clone(),
        }
    }
}

/// Problems found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonFiniteCoordinate { point: usize, dim: usize },
    DimensionMismatch { point: usize, expected: usize, got: usize },
    DanglingProfile { point: usize, profile: usize },
    EmptyProfile { profile: usize },
    GroupOutOfRange { profile: usize, group: usize },
    UnusedProfile { profile: usize },
    LengthMismatch { points: usize, profile_ids: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteCoordinate { point, dim } => {
                write!(f, "point {point}: non-finite coordinate {dim}")
            }
            Violation::DimensionMismatch {
                point,
                expected,
                got,
            } => write!(f, "point {point}: dimension {got}, expected {expected}"),
            Violation::DanglingProfile { point, profile } => {
                write!(f, "point {point}: profile id {profile} out of range")
            }
            Violation::EmptyProfile { profile } => write!(f, "profile {profile} has no groups"),
            Violation::GroupOutOfRange { profile, group } => {
                write!(f, "profile {profile}: group {group} out of range")
            }
            Violation::UnusedProfile { profile } => write!(f, "profile {profile} has no points"),
            Violation::LengthMismatch {
                points,
                profile_ids,
            } => write!(f, "{points} points but {profile_ids} profile ids"),
        }
    }
}

/// Lists every structural problem in `data`; an empty list means valid.
pub fn validate_dataset(data: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if data.points.len() != data.profile_of.len() {
        out.push(Violation::LengthMismatch {
            points: data.points.len(),
            profile_ids: data.profile_of.len(),
        });
    }
    let d = data.dim();
    for (i, p) in data.points.iter().enumerate() {
        if p.dim() != d || d == 0 {
            out.push(Violation::DimensionMismatch {
                point: i,
                expected: d,
                got: p.dim(),
            });
        }
        if let Some(dim) = p.coords().iter().position(|c| !c.is_finite()) {
            out.push(Violation::NonFiniteCoordinate { point: i, dim });
        }
    }
    let mut used = vec![false; data.profiles.len()];
    for (i, &t) in data.profile_of.iter().enumerate() {
        match used.get_mut(t) {
            Some(u) => *u = true,
            None => out.push(Violation::DanglingProfile {
                point: i,
                profile: t,
            }),
        }
    }
    for (t, profile) in data.profiles.iter().enumerate() {
        if profile.groups().is_empty() {
            out.push(Violation::EmptyProfile { profile: t });
        }
        for &g in profile.groups() {
            if g >= data.num_groups {
                out.push(Violation::GroupOutOfRange { profile: t, group: g });
            }
        }
        if !used[t] {
            out.push(Violation::UnusedProfile { profile: t });
        }
    }
    out
}

/// A weighted point set, e.g. a coreset. Profile ids index into `profiles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPointSet {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub profile_of: Vec<usize>,
    pub profiles: Vec<GroupProfile>,
}

impl WeightedPointSet {
    pub fn empty(profiles: Vec<GroupProfile>) -> Self {
        WeightedPointSet {
            points: Vec::new(),
            weights: Vec::new(),
            profile_of: Vec::new(),
            profiles,
        }
    }

    pub fn push(&mut self, point: Point, weight: f64, profile: usize) {
        self.points.push(point);
        self.weights.push(weight);
        self.profile_of.push(profile);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Total weight of each profile.
    pub fn profile_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.profiles.len()];
        for (&t, &x) in self.profile_of.iter().zip(&self.weights) {
            w[t] += x;
        }
        w
    }

    /// Point indices of each profile class.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.profiles.len()];
        for (i, &t) in self.profile_of.iter().enumerate() {
            classes[t].push(i);
        }
        classes
    }

    pub fn weighted_mean(&self) -> Result<Point> {
        weighted_mean(&self.points, &self.weights)
    }

    pub fn moment_error(&self, z: Objective) -> Result<f64> {
        moment_error(&self.points, &self.weights, z)
    }
}

/// `k` centers; they need not be data points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterSet {
    pub centers: Vec<Point>,
}

impl CenterSet {
    pub fn new(centers: Vec<Point>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidParam("need at least one center".into()));
        }
        Ok(CenterSet { centers })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Index of and squared distance to the nearest center (lowest index on ties).
    pub fn nearest(&self, p: &Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d2 = p.dist_sq(c);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    /// Unconstrained cost `Σ w·d^z(x, C)`.
    pub fn cost(&self, points: &[Point], weights: Option<&[f64]>, z: Objective) -> f64 {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| weights.map_or(1.0, |w| w[i]) * z.cost_from_sq(self.nearest(p).1))
            .sum()
    }
}

/// Construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetParams {
    pub epsilon: f64,
    pub k: usize,
    pub z: Objective,
    pub seed: u64,
    #[serde(default = "default_budget_scale")]
    pub projection_budget_scale: f64,
}

fn default_budget_scale() -> f64 {
    1.0
}

impl CoresetParams {
    pub fn new(epsilon: f64, k: usize, z: Objective, seed: u64) -> Self {
        CoresetParams {
            epsilon,
            k,
            z,
            seed,
            projection_budget_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if !(self.projection_budget_scale > 0.0 && self.projection_budget_scale.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "projection budget scale must be positive, got {}",
                self.projection_budget_scale
            )));
        }
        Ok(())
    }
}

/// Weight-normalized centroid `Σ w·p / Σ w`.
pub fn weighted_mean(points: &[Point], weights: &[f64]) -> Result<Point> {
    let total: f64 = weights.iter().sum();
    if points.is_empty() || !(total > 0.0) {
        return Err(Error::EmptySet);
    }
    let mut acc = vec![0.0; points[0].dim()];
    for (p, &w) in points.iter().zip(weights) {
        for (a, c) in acc.iter_mut().zip(p.coords()) {
            *a += w * c;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(Point(acc))
}

/// `Δ_z(S) = Σ w(p)·d^z(p, mean(S))`.
pub fn moment_error(points: &[Point], weights: &[f64], z: Objective) -> Result<f64> {
    let mean = weighted_mean(points, weights)?;
    Ok(points
        .iter()
        .zip(weights)
        .map(|(p, &w)| w * z.cost(p, &mean))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[&[f64]]) -> Vec<Point> {
        v.iter().map(|c| Point::new(c.to_vec())).collect()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() < 1e-12
    }

    #[test]
    fn mean_examples() {
        let m = weighted_mean(&pts(&[&[0.0], &[2.0]]), &[1.0, 1.0]).unwrap();
        assert_eq!(m.coords(), &[1.0]);
        let m = weighted_mean(&pts(&[&[0.0], &[4.0]]), &[3.0, 1.0]).unwrap();
        assert_eq!(m.coords(), &[1.0]);
        let m = weighted_mean(&pts(&[&[5.0, 5.0]]), &[2.0]).unwrap();
        assert_eq!(m.coords(), &[5.0, 5.0]);
    }

    #[test]
    fn mean_of_empty_or_weightless_set_fails() {
        assert!(matches!(weighted_mean(&[], &[]), Err(Error::EmptySet)));
        let e = weighted_mean(&pts(&[&[1.0]]), &[0.0]).unwrap_err();
        assert_eq!(e.to_string(), "empty set");
        assert!(moment_error(&[], &[], Objective::KMeans).is_err());
    }

    #[test]
    fn moment_error_examples() {
        let p = pts(&[&[0.0], &[2.0]]);
        assert_eq!(moment_error(&p, &[1.0, 1.0], Objective::KMedian).unwrap(), 2.0);
        assert_eq!(moment_error(&p, &[1.0, 1.0], Objective::KMeans).unwrap(), 2.0);
        let p = pts(&[&[0.0], &[4.0]]);
        let e = moment_error(&p, &[2.0, 1.0], Objective::KMeans).unwrap();
        assert!((e - 32.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn validate_examples() {
        let d = Dataset::from_memberships(
            pts(&[&[0.0, 1.0], &[1.0, 1.0], &[2.0, 0.0]]),
            vec![vec![0], vec![1], vec![0]],
            2,
        )
        .unwrap();
        assert!(validate_dataset(&d).is_empty());

        let mut bad = d.clone();
        bad.points[1] = Point::new(vec![f64::NAN, 0.0]);
        let v = validate_dataset(&bad);
        assert_eq!(v, vec![Violation::NonFiniteCoordinate { point: 1, dim: 0 }]);

        let mut bad = d.clone();
        bad.profile_of[2] = 5;
        let v = validate_dataset(&bad);
        assert_eq!(v, vec![Violation::DanglingProfile { point: 2, profile: 5 }]);
    }

    #[test]
    fn profiles_dedupe_as_sets() {
        let d = Dataset::from_memberships(
            pts(&[&[0.0], &[1.0], &[2.0]]),
            vec![vec![1, 0], vec![0, 1, 1], vec![2]],
            3,
        )
        .unwrap();
        assert_eq!(d.num_profiles(), 2);
        assert_eq!(d.profile_of, vec![0, 0, 1]);
        assert_eq!(d.profiles[0].groups(), &[0, 1]);
        assert!(GroupProfile::new(vec![]).is_err());
        assert!(Dataset::from_memberships(pts(&[&[0.0]]), vec![vec![3]], 2).is_err());
    }

    #[test]
    fn objective_serde_roundtrip() {
        let s = serde_json::to_string(&Objective::KMeans).unwrap();
        assert_eq!(s, "2");
        let o: Objective = serde_json::from_str("1").unwrap();
        assert_eq!(o, Objective::KMedian);
        assert!(serde_json::from_str::<Objective>("3").is_err());
    }

    fn weighted_set(dim: usize) -> impl Strategy<Value = (Vec<Point>, Vec<f64>)> {
        prop::collection::vec(
            (prop::collection::vec(-100.0f64..100.0, dim), 0.1f64..10.0),
            1..20,
        )
        .prop_map(|v| {
            let (p, w): (Vec<_>, Vec<_>) = v.into_iter().map(|(c, w)| (Point::new(c), w)).unzip();
            (p, w)
        })
    }

    proptest! {
        #[test]
        fn mean_is_translation_equivariant(
            (p, w) in weighted_set(3),
            t in prop::collection::vec(-50.0f64..50.0, 3),
        ) {
            let m = weighted_mean(&p, &w).unwrap();
            let shifted: Vec<Point> = p.iter().map(|x| x.offset(&t, 1.0)).collect();
            let ms = weighted_mean(&shifted, &w).unwrap();
            for i in 0..3 {
                prop_assert!((ms.coords()[i] - m.coords()[i] - t[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn moment_error_translation_and_scaling(
            (p, w) in weighted_set(2),
            t in prop::collection::vec(-50.0f64..50.0, 2),
            s in 0.1f64..10.0,
        ) {
            for z in [Objective::KMedian, Objective::KMeans] {
                // Rounding in the mean leaves residues proportional to the
                // coordinates' magnitude, not to the error itself.
                let mag = |q: &[Point]| -> f64 {
                    q.iter().zip(&w).map(|(x, &wi)| wi * z.cost(x, &Point::zeros(2))).sum()
                };
                let base = moment_error(&p, &w, z).unwrap();
                let shifted: Vec<Point> = p.iter().map(|x| x.offset(&t, 1.0)).collect();
                let got = moment_error(&shifted, &w, z).unwrap();
                prop_assert!((got - base).abs() <= 1e-9 * (mag(&p) + mag(&shifted)));
                let scaled: Vec<Point> = p
                    .iter()
                    .map(|x| Point::new(x.coords().iter().map(|c| c * s).collect()))
                    .collect();
                let factor = if z == Objective::KMeans { s * s } else { s };
                let got = moment_error(&scaled, &w, z).unwrap();
                prop_assert!((got - factor * base).abs() <= 1e-9 * mag(&scaled));
            }
        }

        #[test]
        fn parallel_axis_identity((p, w) in weighted_set(2), split in 0usize..20) {
            prop_assume!(p.len() >= 2);
            let cut = 1 + split % (p.len() - 1);
            let (p1, p2) = p.split_at(cut);
            let (w1, w2) = w.split_at(cut);
            let mu = weighted_mean(&p, &w).unwrap();
            let mu1 = weighted_mean(p1, w1).unwrap();
            let mu2 = weighted_mean(p2, w2).unwrap();
            let rhs = moment_error(p1, w1, Objective::KMeans).unwrap()
                + moment_error(p2, w2, Objective::KMeans).unwrap()
                + w1.iter().sum::<f64>() * mu1.dist_sq(&mu)
                + w2.iter().sum::<f64>() * mu2.dist_sq(&mu);
            let lhs = moment_error(&p, &w, Objective::KMeans).unwrap();
            prop_assert!(rel_close(lhs, rhs, 1e-9), "{} vs {}", lhs, rhs);
        }
    }
}
