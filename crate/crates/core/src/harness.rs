//! Benchmark driver: CSV ingestion, normalization, random `(F, C)`
//! sampling, empirical error, and report emission.
//!
//! Sampling choices (the report header records them):
//!
//! - `F`: for each profile of mass `n_t`, a uniformly random composition of
//!   `n_t` into `k` nonnegative integer parts.
//! - `C`: `k` distinct data points, uniformly without replacement.
//! - Trial `i` draws from a ChaCha stream selected by `i` under the run
//!   seed, so every method sees the same samples and the result does not
//!   depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairflow::{objective_value, ProfileConstraint};
use crate::geometry::{CenterSet, CoresetParams, Dataset, Objective, Point, WeightedPointSet};
use crate::par;
use crate::pipeline::{build_fair_coreset, fmt_f64, uniform_coreset, CoresetArtifact};

pub const DEFAULT_TRIALS: usize = 500;

/// Benchmark configuration; every field has a CLI flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub input: PathBuf,
    pub features: Vec<String>,
    #[serde(default)]
    pub groups: Vec<String>,
    pub k: usize,
    pub z: Objective,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub projection_budget_scale: f64,
    /// Report base path; `.json` and `.csv` are appended.
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_scale() -> f64 {
    1.0
}

/// The parts of [`BenchConfig`] that do not concern file I/O.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub k: usize,
    pub z: Objective,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub projection_budget_scale: f64,
}

impl BenchConfig {
    pub fn settings(&self) -> BenchSettings {
        BenchSettings {
            k: self.k,
            z: self.z,
            epsilons: self.epsilons.clone(),
            trials: self.trials,
            seed: self.seed,
            projection_budget_scale: self.projection_budget_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()
    }
}

impl BenchSettings {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParam("trials must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParam("need at least one epsilon".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidParam(format!("epsilon {e} outside (0,1)")));
        }
        Ok(())
    }
}

/// A dataset read from CSV, with the labels of its groups.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    /// `column=value` for every group index.
    pub group_labels: Vec<String>,
    pub dropped_rows: usize,
}

/// Reads numeric `features` and categorical `groups` columns. Each distinct
/// value of each group column becomes a group; a row's profile is the set of
/// its values across the group columns. Rows with a missing or non-numeric
/// selected value are dropped and counted. With no group columns every row
/// belongs to one group.
pub fn load_csv(path: &Path, features: &[String], groups: &[String]) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &String| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::ColumnNotFound(name.clone()))
    };
    if features.is_empty() {
        return Err(Error::InvalidParam("need at least one feature column".into()));
    }
    let fcols = features.iter().map(col).collect::<Result<Vec<_>>>()?;
    let gcols = groups.iter().map(col).collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(Vec<f64>, Vec<String>)> = Vec::new();
    let mut dropped = 0;
    for rec in reader.records() {
        let rec = rec?;
        let coords: Option<Vec<f64>> = fcols
            .iter()
            .map(|&c| {
                rec.get(c)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|x| x.is_finite())
            })
            .collect();
        let cats: Option<Vec<String>> = gcols
            .iter()
            .map(|&c| rec.get(c).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()))
            .collect();
        match (coords, cats) {
            (Some(c), Some(g)) => rows.push((c, g)),
            _ => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::NoRows(path.to_path_buf()));
    }

    // Group indices: columns in the order given, values sorted within each.
    let mut values: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); gcols.len()];
    for (_, cats) in &rows {
        for (set, v) in values.iter_mut().zip(cats) {
            set.insert(v.as_str());
        }
    }
    let mut group_of: Vec<BTreeMap<&str, usize>> = Vec::new();
    let mut labels = Vec::new();
    for (name, set) in groups.iter().zip(&values) {
        let mut m = BTreeMap::new();
        for v in set {
            m.insert(*v, labels.len());
            labels.push(format!("{name}={v}"));
        }
        group_of.push(m);
    }
    if groups.is_empty() {
        labels.push("all".to_string());
    }
    let memberships: Vec<Vec<usize>> = rows
        .iter()
        .map(|(_, cats)| {
            if cats.is_empty() {
                vec![0]
            } else {
                cats.iter().zip(&group_of).map(|(v, m)| m[v.as_str()]).collect()
            }
        })
        .collect();
    let num_groups = labels.len();
    let points = rows.into_iter().map(|(c, _)| Point::new(c)).collect();
    let group_labels = labels;
    let dataset = Dataset::from_memberships(points, memberships, num_groups)?;
    Ok(LoadedDataset {
        dataset,
        group_labels,
        dropped_rows: dropped,
    })
}

/// Maps every feature affinely onto `[0, 1]`; constant features become 0.
pub fn normalize_minmax(data: &Dataset) -> Dataset {
    let d = data.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in &data.points {
        for (j, &x) in p.coords().iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    let mut out = data.clone();
    for p in &mut out.points {
        for (j, x) in p.coords_mut().iter_mut().enumerate() {
            let span = hi[j] - lo[j];
            *x = if span > 0.0 { (*x - lo[j]) / span } else { 0.0 };
        }
    }
    out
}

/// Uniformly random composition of `n` into `k` nonnegative parts
/// (stars and bars).
pub fn random_composition<R: Rng + ?Sized>(n: u64, k: usize, rng: &mut R) -> Vec<u64> {
    if k == 1 {
        return vec![n];
    }
    let slots = n as usize + k - 1;
    let mut bars = index::sample(rng, slots, k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        // bar i sits at slot b; the stars before it and after bar i-1
        parts.push((b - prev - usize::from(i > 0)) as u64);
        prev = b;
    }
    parts.push((slots - prev - 1) as u64);
    parts
}

/// A random feasible constraint: each profile mass split by a uniform
/// random composition.
pub fn sample_constraint_with<R: Rng + ?Sized>(masses: &[u64], k: usize, rng: &mut R) -> Result<ProfileConstraint> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be positive".into()));
    }
    let mut quotas = vec![vec![0.0; masses.len()]; k];
    for (t, &n) in masses.iter().enumerate() {
        for (i, part) in random_composition(n, k, rng).into_iter().enumerate() {
            quotas[i][t] = part as f64;
        }
    }
    ProfileConstraint::new(quotas)
}

/// Profile masses of a weighted set, rounded to integers.
pub fn integral_masses(s: &WeightedPointSet) -> Vec<u64> {
    s.profile_weights().iter().map(|w| w.round() as u64).collect()
}

pub fn sample_constraint(s: &WeightedPointSet, k: usize, seed: u64) -> Result<ProfileConstraint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_constraint_with(&integral_masses(s), k, &mut rng)
}

pub fn sample_centers_with<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Result<CenterSet> {
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }
    let idx = index::sample(rng, points.len(), k);
    CenterSet::new(idx.iter().map(|i| points[i].clone()).collect())
}

/// `k` distinct data points chosen uniformly without replacement.
pub fn sample_centers(data: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_centers_with(&data.points, k, &mut rng)
}

/// The `(F, C)` pair of trial `trial` under `seed`.
pub fn sample_trial(data: &Dataset, masses: &[u64], k: usize, seed: u64, trial: usize) -> Result<(ProfileConstraint, CenterSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let f = sample_constraint_with(masses, k, &mut rng)?;
    let c = sample_centers_with(&data.points, k, &mut rng)?;
    Ok((f, c))
}

/// Empirical error of one candidate over the sampled trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_err: f64,
    /// `None` for trials skipped because `K_z(X, F, C) = 0`.
    pub errors: Vec<Option<f64>>,
    pub skipped: usize,
    pub t_x_ms: f64,
    pub t_s_ms: f64,
}

/// `(K(X), T_X, [(K(S), T_S)])` of one trial.
type TrialEval = (f64, f64, Vec<(f64, f64)>);

/// `|K_z(S,F,C) / K_z(X,F,C) − 1|` for each candidate over shared trials.
pub fn empirical_errors(
    x: &Dataset,
    candidates: &[&WeightedPointSet],
    k: usize,
    z: Objective,
    trials: usize,
    seed: u64,
) -> Result<Vec<ErrorSummary>> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be at least 1".into()));
    }
    for s in candidates {
        if s.profiles != x.profiles {
            return Err(Error::InvalidParam(
                "coreset profiles differ from the dataset's".into(),
            ));
        }
    }
    let xs = x.to_weighted();
    let masses: Vec<u64> = x.class_sizes().iter().map(|&n| n as u64).collect();
    let per_trial = par::try_map_range(trials, |trial| -> Result<TrialEval> {
        let (f, c) = sample_trial(x, &masses, k, seed, trial)?;
        let t0 = Instant::now();
        let kx = objective_value(&xs, &f, &c, z)?;
        let tx = t0.elapsed().as_secs_f64() * 1e3;
        let mut evals = Vec::with_capacity(candidates.len());
        for s in candidates {
            let t1 = Instant::now();
            let ks = objective_value(s, &f, &c, z)?;
            evals.push((ks, t1.elapsed().as_secs_f64() * 1e3));
        }
        Ok((kx, tx, evals))
    })?;

    let t_x_ms = per_trial.iter().map(|r| r.1).sum::<f64>() / trials as f64;
    let mut out = Vec::with_capacity(candidates.len());
    for ci in 0..candidates.len() {
        let mut errors = Vec::with_capacity(trials);
        let mut skipped = 0;
        let mut max_err: f64 = 0.0;
        let mut t_s = 0.0;
        for (kx, _, evals) in &per_trial {
            let (ks, ts) = evals[ci];
            t_s += ts;
            if *kx == 0.0 {
                skipped += 1;
                errors.push(None);
            } else {
                let e = (ks / kx - 1.0).abs();
                max_err = max_err.max(e);
                errors.push(Some(e));
            }
        }
        if skipped == trials {
            return Err(Error::AllTrialsDegenerate(trials));
        }
        out.push(ErrorSummary {
            max_err,
            errors,
            skipped,
            t_x_ms,
            t_s_ms: t_s / trials as f64,
        });
    }
    Ok(out)
}

/// Empirical error of a single coreset `s` against `x`.
pub fn empirical_error(
    x: &Dataset,
    s: &WeightedPointSet,
    k: usize,
    z: Objective,
    trials: usize,
    seed: u64,
) -> Result<ErrorSummary> {
    Ok(empirical_errors(x, &[s], k, z, trials, seed)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub n: usize,
    pub d: usize,
    pub groups: usize,
    pub profiles: usize,
    pub k: usize,
    pub z: Objective,
    pub trials: usize,
    pub seed: u64,
    pub normalized: bool,
    pub dropped_rows: usize,
    pub parallel: bool,
    pub sampling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub size: usize,
    pub uniform_size: usize,
    pub err_ours: f64,
    pub err_uniform: f64,
    pub t_s_ms: f64,
    pub t_s_uniform_ms: f64,
    pub t_c_ms: f64,
    pub t_x_ms: f64,
    pub trials: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub header: ReportHeader,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Copy with all timing fields zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.t_s_ms = 0.0;
            row.t_s_uniform_ms = 0.0;
            row.t_c_ms = 0.0;
            row.t_x_ms = 0.0;
        }
        r
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "epsilon,size,uniform_size,err_ours,err_uniform,t_s_ms,t_s_uniform_ms,t_c_ms,t_x_ms,trials,skipped\n",
        );
        for r in &self.rows {
            let nums = [
                fmt_f64(r.epsilon),
                r.size.to_string(),
                r.uniform_size.to_string(),
                fmt_f64(r.err_ours),
                fmt_f64(r.err_uniform),
                fmt_f64(r.t_s_ms),
                fmt_f64(r.t_s_uniform_ms),
                fmt_f64(r.t_c_ms),
                fmt_f64(r.t_x_ms),
                r.trials.to_string(),
                r.skipped.to_string(),
            ];
            s.push_str(&nums.join(","));
            s.push('\n');
        }
        s
    }

    /// Writes `<base>.json` and `<base>.csv`.
    pub fn write(&self, base: &Path) -> Result<()> {
        let with_ext = |ext: &str| {
            let mut s = base.as_os_str().to_owned();
            s.push(ext);
            PathBuf::from(s)
        };
        fs::write(with_ext(".json"), serde_json::to_string_pretty(self)?)?;
        fs::write(with_ext(".csv"), self.to_csv())?;
        Ok(())
    }
}

const SAMPLING_NOTE: &str = "F: uniform random composition per profile; C: k distinct data points \
uniformly without replacement; samples shared across methods and epsilons (trial i uses ChaCha stream i)";

/// Coresets built for one epsilon.
pub struct BenchBuild {
    pub epsilon: f64,
    pub ours: CoresetArtifact,
    pub uniform: CoresetArtifact,
    pub t_c_ms: f64,
}

/// Builds our coreset and the size-matched uniform baseline for one ε.
pub fn build_pair(data: &Dataset, settings: &BenchSettings, epsilon: f64) -> Result<BenchBuild> {
    let mut params = CoresetParams::new(epsilon, settings.k, settings.z, settings.seed);
    params.projection_budget_scale = settings.projection_budget_scale;
    let t0 = Instant::now();
    let ours = build_fair_coreset(data, &params)?;
    let t_c_ms = t0.elapsed().as_secs_f64() * 1e3;
    let size = ours.len().max(data.num_profiles());
    let uniform = uniform_coreset(data, size, settings.seed)?;
    Ok(BenchBuild {
        epsilon,
        ours,
        uniform,
        t_c_ms,
    })
}

/// Runs the benchmark protocol on an in-memory dataset.
pub fn run_benchmark_on(data: &Dataset, settings: &BenchSettings) -> Result<BenchReport> {
    settings.validate()?;
    let builds = settings
        .epsilons
        .iter()
        .map(|&e| build_pair(data, settings, e))
        .collect::<Result<Vec<_>>>()?;
    let mut candidates: Vec<&WeightedPointSet> = Vec::new();
    for b in &builds {
        candidates.push(&b.ours.points);
        candidates.push(&b.uniform.points);
    }
    let summaries = empirical_errors(data, &candidates, settings.k, settings.z, settings.trials, settings.seed)?;
    let rows = builds
        .iter()
        .zip(summaries.chunks(2))
        .map(|(b, s)| BenchRow {
            epsilon: b.epsilon,
            size: b.ours.len(),
            uniform_size: b.uniform.len(),
            err_ours: s[0].max_err,
            err_uniform: s[1].max_err,
            t_s_ms: s[0].t_s_ms,
            t_s_uniform_ms: s[1].t_s_ms,
            t_c_ms: b.t_c_ms,
            t_x_ms: s[0].t_x_ms,
            trials: settings.trials,
            skipped: s[0].skipped,
        })
        .collect();
    Ok(BenchReport {
        header: ReportHeader {
            n: data.len(),
            d: data.dim(),
            groups: data.num_groups,
            profiles: data.num_profiles(),
            k: settings.k,
            z: settings.z,
            trials: settings.trials,
            seed: settings.seed,
            normalized: false,
            dropped_rows: 0,
            parallel: par::is_parallel(),
            sampling: SAMPLING_NOTE.to_string(),
        },
        rows,
    })
}

/// Loads the configured CSV and runs the benchmark; writes the report if an
/// output path is set.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let loaded = load_csv(&config.input, &config.features, &config.groups)?;
    let data = if config.normalize {
        normalize_minmax(&loaded.dataset)
    } else {
        loaded.dataset
    };
    let mut report = run_benchmark_on(&data, &config.settings())?;
    report.header.normalized = config.normalize;
    report.header.dropped_rows = loaded.dropped_rows;
    if let Some(out) = &config.output {
        report.write(out)?;
    }
    Ok(report)
}

/// Reads a constraint CSV with header and rows `cluster,profile,mass`.
pub fn load_constraint_csv(path: &Path, k: usize, num_profiles: usize) -> Result<ProfileConstraint> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 columns, found {}", rec.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let cluster = rec[0].trim().parse::<usize>().map_err(|_| bad("cluster"))?;
        let profile = rec[1].trim().parse::<usize>().map_err(|_| bad("profile"))?;
        let mass = rec[2].trim().parse::<f64>().map_err(|_| bad("mass"))?;
        entries.push((cluster, profile, mass));
    }
    ProfileConstraint::from_entries(k, num_profiles, &entries)
}

/// Reads a centers CSV: a header, then one row of feature values per center.
pub fn load_centers_csv(path: &Path) -> Result<CenterSet> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut centers = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let coords = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 2,
                    message: format!("not a number: {s:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        centers.push(Point::new(coords));
    }
    CenterSet::new(centers)
}

/// Two-dimensional Gaussian mixture with `profiles` single-group profiles
/// whose proportions differ across mixture components.
pub fn synthetic_mixture(n: usize, profiles: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components: [([f64; 2], f64, f64); 5] = [
        ([0.0, 0.0], 1.0, 0.30),
        ([8.0, 1.0], 0.6, 0.25),
        ([3.0, 9.0], 1.5, 0.20),
        ([11.0, 8.0], 0.8, 0.15),
        ([-6.0, 6.0], 2.0, 0.10),
    ];
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let profiles = profiles.max(1);
    let mut points = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let mut ci = components.len() - 1;
        for (i, c) in components.iter().enumerate() {
            if u < c.2 {
                ci = i;
                break;
            }
            u -= c.2;
        }
        let (mu, sd, _) = components[ci];
        points.push(Point::new(vec![
            mu[0] + sd * unit.sample(&mut rng),
            mu[1] + sd * unit.sample(&mut rng),
        ]));
        // Profile skews with the component so classes are not exchangeable.
        let bias = (ci as f64 + 1.0) / (components.len() as f64 + 1.0);
        let g = if rng.random::<f64>() < bias {
            0
        } else {
            rng.random_range(0..profiles)
        };
        groups.push(vec![g]);
    }
    Dataset::from_memberships(points, groups, profiles).expect("valid memberships")
}

/// Writes a dataset as CSV with columns `x0..x{d-1},group`.
pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    header.push("group".into());
    w.write_record(&header)?;
    for (p, &t) in data.points.iter().zip(&data.profile_of) {
        let mut rec: Vec<String> = p.coords().iter().map(|&c| fmt_f64(c)).collect();
        let label = data.profiles[t]
            .groups()
            .iter()
            .map(|g| format!("g{g}"))
            .collect::<Vec<_>>()
            .join("+");
        rec.push(label);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
