//! End-to-end coreset construction.
//!
//! Each profile class `X^(t)` is summarized independently and the results
//! are unioned; a coreset for every class under per-profile constraints is
//! a coreset for the whole dataset. Within a class:
//!
//! 1. approximate unconstrained clustering → OPT estimate;
//! 2. lines whose projection cost fits the budget
//!    (`ε·OPT/3` for k-median, `ε²·OPT/100` for k-means);
//! 3. projection onto the nearest line;
//! 4. a one-dimensional coreset per line, lifted back to `R^d`.
//!
//! Also here: the uniform-sampling baseline and the coreset file format
//! (CSV `weight,profile,feature_0,…` plus a JSON sidecar holding profiles,
//! parameters and the build log).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CoresetParams, Dataset, GroupProfile, Objective, Point, WeightedPointSet};
use crate::line_coreset::line_coreset;
use crate::lines::{approx_cluster, build_lines_from, project, LineAttempt};
use crate::par;

/// How a profile class was summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileStrategy {
    /// At most `k` points: copied with unit weight.
    Verbatim,
    /// Zero clustering cost: identical points merged.
    Deduplicated,
    /// Lines, projection and line coresets.
    Lines,
    /// Uniform sample.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBuildLog {
    pub profile: usize,
    pub groups: Vec<usize>,
    pub points: usize,
    pub strategy: ProfileStrategy,
    pub opt_estimate: f64,
    pub budget: f64,
    pub projection_cost: f64,
    pub attempts: Vec<LineAttempt>,
    pub batches_per_line: Vec<usize>,
    pub output_points: usize,
    pub elapsed_ms: f64,
}

impl ProfileBuildLog {
    fn new(profile: usize, groups: &GroupProfile, points: usize, strategy: ProfileStrategy) -> Self {
        ProfileBuildLog {
            profile,
            groups: groups.groups().to_vec(),
            points,
            strategy,
            opt_estimate: 0.0,
            budget: 0.0,
            projection_cost: 0.0,
            attempts: Vec::new(),
            batches_per_line: Vec::new(),
            output_points: 0,
            elapsed_ms: 0.0,
        }
    }

    pub fn lines(&self) -> usize {
        self.batches_per_line.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuildMethod {
    Fair { params: CoresetParams },
    Uniform { total_size: usize, seed: u64 },
}

/// A coreset together with how it was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetArtifact {
    pub points: WeightedPointSet,
    pub method: BuildMethod,
    pub build_log: Vec<ProfileBuildLog>,
    /// SHA-256 of the source dataset, see [`dataset_checksum`].
    pub source_checksum: String,
}

impl CoresetArtifact {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn params(&self) -> Option<&CoresetParams> {
        match &self.method {
            BuildMethod::Fair { params } => Some(params),
            BuildMethod::Uniform { .. } => None,
        }
    }

    /// Copy with all timings zeroed, for comparing builds.
    pub fn without_timings(&self) -> Self {
        let mut a = self.clone();
        a.build_log.iter_mut().for_each(|l| l.elapsed_ms = 0.0);
        a
    }

    pub fn total_elapsed_ms(&self) -> f64 {
        self.build_log.iter().map(|l| l.elapsed_ms).sum()
    }
}

/// SHA-256 over dimensions, coordinates, profile ids and profiles.
pub fn dataset_checksum(d: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((d.len() as u64).to_le_bytes());
    h.update((d.dim() as u64).to_le_bytes());
    for p in &d.points {
        for c in p.coords() {
            h.update(c.to_le_bytes());
        }
    }
    for &t in &d.profile_of {
        h.update((t as u64).to_le_bytes());
    }
    for prof in &d.profiles {
        h.update((prof.groups().len() as u64).to_le_bytes());
        for &g in prof.groups() {
            h.update((g as u64).to_le_bytes());
        }
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Per-profile seed derived from the group set, so a class gets the same
/// seed whatever other classes the dataset holds.
pub fn profile_seed(seed: u64, profile: &GroupProfile) -> u64 {
    let mut x = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &g in profile.groups() {
        x = splitmix(x ^ (g as u64).wrapping_add(1));
    }
    splitmix(x)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Projection budget for the line cover.
pub fn projection_budget(params: &CoresetParams, opt_estimate: f64) -> f64 {
    let eps = params.epsilon;
    let base = match params.z {
        Objective::KMedian => eps * opt_estimate / 3.0,
        Objective::KMeans => eps * eps * opt_estimate / 100.0,
    };
    base * params.projection_budget_scale
}

fn deduplicate(points: &[Point]) -> Vec<(Point, f64)> {
    let mut groups: BTreeMap<Vec<u64>, (usize, f64)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = p.coords().iter().map(|c| c.to_bits()).collect();
        groups.entry(key).or_insert((i, 0.0)).1 += 1.0;
    }
    let mut out: Vec<(usize, f64)> = groups.into_values().collect();
    out.sort_unstable_by_key(|e| e.0);
    out.into_iter().map(|(i, w)| (points[i].clone(), w)).collect()
}

/// Coreset of one profile class.
fn build_class(
    points: &[Point],
    profile: usize,
    groups: &GroupProfile,
    params: &CoresetParams,
) -> Result<(Vec<(Point, f64)>, ProfileBuildLog)> {
    let start = Instant::now();
    let n = points.len();
    let k = params.k;
    let z = params.z;
    let seed = profile_seed(params.seed, groups);

    let (out, mut log) = if n <= k {
        let out: Vec<(Point, f64)> = points.iter().map(|p| (p.clone(), 1.0)).collect();
        (out, ProfileBuildLog::new(profile, groups, n, ProfileStrategy::Verbatim))
    } else {
        let approx = approx_cluster(points, k, z, seed)?;
        let opt = approx.cost;
        if opt == 0.0 {
            let mut log = ProfileBuildLog::new(profile, groups, n, ProfileStrategy::Deduplicated);
            log.opt_estimate = 0.0;
            (deduplicate(points), log)
        } else {
            let mut log = ProfileBuildLog::new(profile, groups, n, ProfileStrategy::Lines);
            log.opt_estimate = opt;
            log.budget = projection_budget(params, opt);
            let cover = build_lines_from(points, &approx, z, log.budget, params.epsilon, seed)?;
            log.projection_cost = cover.cost;
            log.attempts = cover.attempts;
            let (line_sets, _) = project(points, &cover.lines)?;
            let per_line = par::try_map_range(line_sets.len(), |i| {
                line_coreset(&line_sets[i], k, opt, params.epsilon, z)
            })?;
            let mut out = Vec::new();
            for (ls, lc) in line_sets.iter().zip(&per_line) {
                log.batches_per_line.push(lc.batches);
                out.extend(lc.entries.iter().map(|e| (ls.lift(e.position), e.weight)));
            }
            (out, log)
        }
    };
    log.output_points = out.len();
    log.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((out, log))
}

/// Builds an ε-coreset for fair (k, z)-clustering of `data`.
pub fn build_fair_coreset(data: &Dataset, params: &CoresetParams) -> Result<CoresetArtifact> {
    params.validate()?;
    let classes = data.classes();
    if let Some(t) = classes.iter().position(Vec::is_empty) {
        return Err(Error::EmptyProfile(t));
    }
    let parts = par::try_map_range(classes.len(), |t| {
        let pts: Vec<Point> = classes[t].iter().map(|&i| data.points[i].clone()).collect();
        build_class(&pts, t, &data.profiles[t], params)
    })?;

    let mut points = WeightedPointSet::empty(data.profiles.clone());
    let mut build_log = Vec::with_capacity(parts.len());
    for (t, (out, log)) in parts.into_iter().enumerate() {
        for (p, w) in out {
            points.push(p, w, t);
        }
        build_log.push(log);
    }
    Ok(CoresetArtifact {
        points,
        method: BuildMethod::Fair {
            params: params.clone(),
        },
        build_log,
        source_checksum: dataset_checksum(data),
    })
}

/// Per-class sample sizes proportional to class sizes by largest
/// remainder, at least one per class, summing to `total`.
pub fn allocate_sizes(class_sizes: &[usize], total: usize) -> Result<Vec<usize>> {
    let gamma = class_sizes.len();
    let n: usize = class_sizes.iter().sum();
    if total < gamma {
        return Err(Error::InvalidParam(format!(
            "uniform size {total} is smaller than the {gamma} profile classes"
        )));
    }
    let total = total.min(n);
    let quotas: Vec<f64> = class_sizes
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..gamma).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total - sizes.iter().sum::<usize>();
    for &t in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if sizes[t] < class_sizes[t] {
            sizes[t] += 1;
            left -= 1;
        }
    }
    // Every class gets at least one sample, taken from the largest.
    for t in 0..gamma {
        if sizes[t] == 0 && class_sizes[t] > 0 {
            let donor = (0..gamma)
                .filter(|&u| sizes[u] > 1)
                .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
                .ok_or_else(|| Error::InvalidParam("cannot give every class a sample".into()))?;
            sizes[donor] -= 1;
            sizes[t] = 1;
        }
    }
    Ok(sizes)
}

/// Uniform sample of `total_size` points, stratified by profile; each
/// sample point of class `t` weighs `n_t / s_t`.
pub fn uniform_coreset(data: &Dataset, total_size: usize, seed: u64) -> Result<CoresetArtifact> {
    let start = Instant::now();
    let classes = data.classes();
    if let Some(t) = classes.iter().position(Vec::is_empty) {
        return Err(Error::EmptyProfile(t));
    }
    let sizes = allocate_sizes(&data.class_sizes(), total_size)?;
    let mut points = WeightedPointSet::empty(data.profiles.clone());
    let mut build_log = Vec::with_capacity(classes.len());
    for (t, class) in classes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(profile_seed(seed, &data.profiles[t]));
        let s = sizes[t];
        let mut picked = index::sample(&mut rng, class.len(), s).into_vec();
        picked.sort_unstable();
        let w = class.len() as f64 / s as f64;
        for i in picked {
            points.push(data.points[class[i]].clone(), w, t);
        }
        let mut log = ProfileBuildLog::new(t, &data.profiles[t], class.len(), ProfileStrategy::Uniform);
        log.output_points = s;
        build_log.push(log);
    }
    if let Some(first) = build_log.first_mut() {
        first.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(CoresetArtifact {
        points,
        method: BuildMethod::Uniform { total_size, seed },
        build_log,
        source_checksum: dataset_checksum(data),
    })
}

/// Sidecar JSON next to a coreset CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    profiles: Vec<GroupProfile>,
    method: BuildMethod,
    build_log: Vec<ProfileBuildLog>,
    source_checksum: String,
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the coreset CSV and its JSON sidecar.
pub fn save_coreset(a: &CoresetArtifact, path: &Path) -> Result<()> {
    let d = a.points.dim();
    let mut out = String::from("weight,profile");
    for j in 0..d {
        let _ = write!(out, ",feature_{j}");
    }
    out.push('\n');
    for ((p, &w), &t) in a.points.points.iter().zip(&a.points.weights).zip(&a.points.profile_of) {
        out.push_str(&fmt_f64(w));
        let _ = write!(out, ",{t}");
        for c in p.coords() {
            out.push(',');
            out.push_str(&fmt_f64(*c));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    let side = Sidecar {
        profiles: a.points.profiles.clone(),
        method: a.method.clone(),
        build_log: a.build_log.clone(),
        source_checksum: a.source_checksum.clone(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Parses the coreset CSV body: `(points, weights, profile ids)`.
pub fn parse_coreset_csv(text: &str) -> Result<(Vec<Point>, Vec<f64>, Vec<usize>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::NoHeader)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "weight" || cols[1] != "profile" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header weight,profile,<features>, found {header:?}"),
        });
    }
    let d = cols.len() - 2;
    let (mut points, mut weights, mut profiles) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} columns, found {}", cols.len(), fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("not a number: {s:?}"),
            })
        };
        let w = num(fields[0])?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("weight must be positive, found {w}"),
            });
        }
        let t = fields[1].parse::<usize>().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("not a profile id: {:?}", fields[1]),
        })?;
        let coords = fields[2..].iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?;
        debug_assert_eq!(coords.len(), d);
        points.push(Point::new(coords));
        weights.push(w);
        profiles.push(t);
    }
    Ok((points, weights, profiles))
}

/// Reads a coreset written by [`save_coreset`].
pub fn load_coreset(path: &Path) -> Result<CoresetArtifact> {
    let text = fs::read_to_string(path)?;
    let (points, weights, profile_of) = parse_coreset_csv(&text)?;
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if let Some((i, &t)) = profile_of.iter().enumerate().find(|(_, &t)| t >= side.profiles.len()) {
        return Err(Error::Parse {
            line: i + 2,
            message: format!("profile id {t} but only {} profiles", side.profiles.len()),
        });
    }
    Ok(CoresetArtifact {
        points: WeightedPointSet {
            points,
            weights,
            profile_of,
            profiles: side.profiles,
        },
        method: side.method,
        build_log: side.build_log,
        source_checksum: side.source_checksum,
    })
}

/// Checks an artifact against its source dataset; returns the problems found.
pub fn validate_artifact(a: &CoresetArtifact, data: &Dataset) -> Vec<String> {
    let mut problems = Vec::new();
    let checksum = dataset_checksum(data);
    if checksum != a.source_checksum {
        problems.push(format!(
            "source checksum mismatch: artifact {}, dataset {checksum}",
            a.source_checksum
        ));
    }
    if a.points.dim() != 0 && a.points.dim() != data.dim() {
        problems.push(format!(
            "dimension {} differs from dataset dimension {}",
            a.points.dim(),
            data.dim()
        ));
    }
    if let Some(i) = a.points.weights.iter().position(|w| !(*w > 0.0)) {
        problems.push(format!("point {i} has non-positive weight"));
    }
    let sizes = data.class_sizes();
    let weights = a.points.profile_weights();
    for (t, prof) in a.points.profiles.iter().enumerate() {
        match data.profiles.iter().position(|p| p == prof) {
            Some(u) => {
                let n = sizes[u] as f64;
                if (weights[t] - n).abs() > 1e-9 * n.max(1.0) {
                    problems.push(format!(
                        "profile {:?}: weight {} but {} source points",
                        prof.groups(),
                        weights[t],
                        n
                    ));
                }
            }
            None => problems.push(format!("profile {:?} absent from dataset", prof.groups())),
        }
    }
    for log in &a.build_log {
        if log.strategy == ProfileStrategy::Lines && log.projection_cost > log.budget {
            problems.push(format!(
                "profile {}: projection cost {} exceeds budget {}",
                log.profile, log.projection_cost, log.budget
            ));
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0], [6.0, 1.0], [2.0, 7.0]];
        let mut points = Vec::new();
        let mut groups = Vec::new();
        for i in 0..n {
            let c = centers[i % 3];
            points.push(Point::new(vec![
                c[0] + rng.random::<f64>() * 2.0 - 1.0,
                c[1] + rng.random::<f64>() * 2.0 - 1.0,
            ]));
            groups.push(vec![usize::from(rng.random::<f64>() < 0.4)]);
        }
        Dataset::from_memberships(points, groups, 2).unwrap()
    }

    #[test]
    fn isolated_points_are_their_own_coreset() {
        let d = Dataset::from_memberships(
            vec![Point::new(vec![0.0, 0.0]), Point::new(vec![5.0, 1.0]), Point::new(vec![2.0, 2.0])],
            vec![vec![0], vec![0], vec![1]],
            2,
        )
        .unwrap();
        for z in [Objective::KMedian, Objective::KMeans] {
            let a = build_fair_coreset(&d, &CoresetParams::new(0.3, 3, z, 1)).unwrap();
            assert_eq!(a.points.points, d.points);
            assert_eq!(a.points.weights, vec![1.0; 3]);
        }
    }

    #[test]
    fn weights_are_conserved() {
        let d = blobs(400, 3);
        for z in [Objective::KMedian, Objective::KMeans] {
            let a = build_fair_coreset(&d, &CoresetParams::new(0.3, 3, z, 9)).unwrap();
            let w = a.points.profile_weights();
            for (t, &n) in d.class_sizes().iter().enumerate() {
                assert!((w[t] - n as f64).abs() <= 1e-9 * n as f64);
            }
            assert!(a.len() < d.len());
            assert!(validate_artifact(&a, &d).is_empty());
            for log in &a.build_log {
                assert!(log.projection_cost <= log.budget);
                let bound: usize = log.batches_per_line.iter().map(|b| 2 * b).sum();
                assert!(log.output_points <= bound);
            }
        }
    }

    #[test]
    fn coincident_points_deduplicate() {
        let pts = vec![Point::new(vec![1.0]); 5]
            .into_iter()
            .chain(vec![Point::new(vec![3.0]); 4])
            .collect();
        let d = Dataset::single_group(pts);
        let a = build_fair_coreset(&d, &CoresetParams::new(0.2, 2, Objective::KMeans, 0)).unwrap();
        assert_eq!(a.points.weights, vec![5.0, 4.0]);
        assert_eq!(a.build_log[0].strategy, ProfileStrategy::Deduplicated);
    }

    #[test]
    fn rejects_empty_class_and_bad_params() {
        let mut d = blobs(20, 1);
        d.profiles.push(GroupProfile::new(vec![1, 0]).unwrap());
        assert!(matches!(
            build_fair_coreset(&d, &CoresetParams::new(0.2, 2, Objective::KMeans, 0)),
            Err(Error::EmptyProfile(2))
        ));
        let d = blobs(20, 1);
        assert!(build_fair_coreset(&d, &CoresetParams::new(1.2, 2, Objective::KMeans, 0)).is_err());
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(allocate_sizes(&[90, 10], 10).unwrap(), vec![9, 1]);
        assert_eq!(allocate_sizes(&[98, 2], 10).unwrap(), vec![9, 1]);
        assert_eq!(allocate_sizes(&[5, 5, 5], 3).unwrap(), vec![1, 1, 1]);
        assert_eq!(allocate_sizes(&[3, 4], 100).unwrap(), vec![3, 4]);
        assert!(allocate_sizes(&[3, 4], 1).is_err());
    }

    #[test]
    fn uniform_examples() {
        let pts: Vec<Point> = (0..100).map(|i| Point::new(vec![i as f64])).collect();
        let groups: Vec<Vec<usize>> = (0..100).map(|i| vec![usize::from(i >= 90)]).collect();
        let d = Dataset::from_memberships(pts, groups, 2).unwrap();
        let u = uniform_coreset(&d, 10, 4).unwrap();
        assert_eq!(u.len(), 10);
        let mut per = [0, 0];
        for (&t, &w) in u.points.profile_of.iter().zip(&u.points.weights) {
            per[t] += 1;
            assert_eq!(w, 10.0);
        }
        assert_eq!(per, [9, 1]);

        let full = uniform_coreset(&d, 100, 4).unwrap();
        assert_eq!(full.points.weights, vec![1.0; 100]);
        let mut got: Vec<f64> = full.points.points.iter().map(|p| p.coords()[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, (0..100).map(|i| i as f64).collect::<Vec<_>>());

        let single = Dataset::single_group((0..7).map(|i| Point::new(vec![i as f64])).collect());
        let one = uniform_coreset(&single, 1, 0).unwrap();
        assert_eq!(one.points.weights, vec![7.0]);
        assert!(uniform_coreset(&d, 1, 0).is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let d = blobs(120, 5);
        let a = build_fair_coreset(&d, &CoresetParams::new(0.25, 3, Objective::KMedian, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_coreset(&a, &path).unwrap();
        assert_eq!(load_coreset(&path).unwrap(), a);
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(parse_coreset_csv(""), Err(Error::NoHeader)));
        assert_eq!(parse_coreset_csv("").unwrap_err().to_string(), "no header");
        let e = parse_coreset_csv("weight,profile,feature_0\n1,0,2.5\n1,0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_coreset_csv("weight,profile,feature_0\nx,0,2.5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn fmt_is_lossless() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
