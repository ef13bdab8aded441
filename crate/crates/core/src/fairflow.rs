//! The fair-clustering objective `K_z(S, F, C)` under profile-level
//! assignment constraints.
//!
//! A constraint fixes, for every cluster `i` and profile `t`, how much mass
//! of profile `t` goes to center `c_i`. Because the quotas are given per
//! profile, the optimal assignment splits into one independent
//! transportation problem per profile; the objective is their sum.
//! Group-level constraints are recovered with [`group_level_view`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset, GroupProfile, Objective, Point, WeightedPointSet};
use crate::par;
use crate::transport::{solve_transportation, CostMatrix, BALANCE_TOL};

/// Points allowed in [`brute_force_objective`].
/// Below this many points the per-profile solves run sequentially.
const PARALLEL_MIN_POINTS: usize = 512;

pub const BRUTE_FORCE_LIMIT: usize = 12;

/// A `k × Γ` matrix of nonnegative quotas: `quotas[i][t]` is the mass of
/// profile `t` assigned to cluster `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstraint {
    quotas: Vec<Vec<f64>>,
}

impl ProfileConstraint {
    pub fn new(quotas: Vec<Vec<f64>>) -> Result<Self> {
        let cols = quotas.first().map_or(0, Vec::len);
        if quotas.is_empty() {
            return Err(Error::InvalidParam("constraint needs at least one cluster".into()));
        }
        for (i, row) in quotas.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidParam(format!(
                    "constraint row {i} has {} profiles, expected {cols}",
                    row.len()
                )));
            }
            if let Some(&q) = row.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
                return Err(Error::InvalidParam(format!("invalid quota {q} in row {i}")));
            }
        }
        Ok(ProfileConstraint { quotas })
    }

    /// Builds a `k × Γ` constraint from sparse `(cluster, profile, mass)` entries.
    pub fn from_entries(k: usize, num_profiles: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut quotas = vec![vec![0.0; num_profiles]; k];
        for &(i, t, m) in entries {
            if i >= k || t >= num_profiles {
                return Err(Error::InvalidParam(format!(
                    "entry ({i}, {t}) outside a {k}x{num_profiles} constraint"
                )));
            }
            quotas[i][t] += m;
        }
        Self::new(quotas)
    }

    pub fn k(&self) -> usize {
        self.quotas.len()
    }

    pub fn num_profiles(&self) -> usize {
        self.quotas[0].len()
    }

    #[inline]
    pub fn quota(&self, cluster: usize, profile: usize) -> f64 {
        self.quotas[cluster][profile]
    }

    pub fn quotas(&self) -> &[Vec<f64>] {
        &self.quotas
    }

    /// Quotas of profile `t` across clusters.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.quotas.iter().map(|r| r[t]).collect()
    }

    /// `Σ_i quotas[i][t]` for every profile.
    pub fn profile_totals(&self) -> Vec<f64> {
        (0..self.num_profiles())
            .map(|t| self.quotas.iter().map(|r| r[t]).sum())
            .collect()
    }

    /// Nonzero entries as `(cluster, profile, mass)`.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.quotas.iter().enumerate() {
            for (t, &m) in row.iter().enumerate() {
                if m != 0.0 {
                    out.push((i, t, m));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanFlow {
    pub point: usize,
    pub cluster: usize,
    pub mass: f64,
}

/// An optimal fractional assignment and its cost `Σ mass·d^z(point, center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub flows: Vec<PlanFlow>,
    pub objective: f64,
}

fn check_shapes(num_profiles: usize, f: &ProfileConstraint, c: &CenterSet) -> Result<()> {
    if f.k() != c.k() {
        return Err(Error::InvalidParam(format!(
            "constraint has {} clusters but {} centers were given",
            f.k(),
            c.k()
        )));
    }
    if f.num_profiles() != num_profiles {
        return Err(Error::InvalidParam(format!(
            "constraint covers {} profiles, the point set has {num_profiles}",
            f.num_profiles()
        )));
    }
    Ok(())
}

fn check_feasible(t: usize, mass: f64, quota: f64) -> Result<()> {
    let scale = mass.max(quota);
    if (mass - quota).abs() > BALANCE_TOL * scale {
        return Err(Error::InfeasibleConstraint(format!(
            "profile {t} has mass {mass} but its quotas sum to {quota}"
        )));
    }
    Ok(())
}

/// Cost matrix `d^z(point, center)` for the given point indices.
fn cost_matrix(points: &[Point], idx: &[usize], c: &CenterSet, z: Objective) -> Result<CostMatrix> {
    let k = c.k();
    let mut data = Vec::with_capacity(idx.len() * k);
    for &p in idx {
        for center in &c.centers {
            data.push(z.cost(&points[p], center));
        }
    }
    CostMatrix::new(idx.len(), k, data)
}

/// Exact `K_z(S, F, C)` with an optimal (fractional) assignment.
///
/// Fails with [`Error::InfeasibleConstraint`] when some profile's quotas do
/// not sum to its mass in `S`; callers that want the textbook convention
/// map that to `+∞`.
pub fn evaluate_objective(
    s: &WeightedPointSet,
    f: &ProfileConstraint,
    c: &CenterSet,
    z: Objective,
) -> Result<AssignmentPlan> {
    check_shapes(s.profiles.len(), f, c)?;
    let classes = s.classes();
    for (t, class) in classes.iter().enumerate() {
        let mass: f64 = class.iter().map(|&p| s.weights[p]).sum();
        check_feasible(t, mass, f.column(t).iter().sum())?;
    }

    let parallel = s.len() >= PARALLEL_MIN_POINTS;
    let parts = par::try_map_range_if(parallel, classes.len(), |t| -> Result<(Vec<PlanFlow>, f64)> {
        let idx = &classes[t];
        if idx.is_empty() {
            return Ok((Vec::new(), 0.0));
        }
        let costs = cost_matrix(&s.points, idx, c, z)?;
        let supplies: Vec<f64> = idx.iter().map(|&p| s.weights[p]).collect();
        let sol = solve_transportation(&costs, &supplies, &f.column(t))?;
        let flows = sol
            .flows
            .iter()
            .map(|fl| PlanFlow {
                point: idx[fl.source],
                cluster: fl.sink,
                mass: fl.mass,
            })
            .collect::<Vec<_>>();
        Ok((flows, sol.cost))
    })?;

    let mut plan = AssignmentPlan {
        flows: Vec::new(),
        objective: 0.0,
    };
    for (flows, cost) in parts {
        plan.flows.extend(flows);
        plan.objective += cost;
    }
    Ok(plan)
}

/// Shorthand for `evaluate_objective(..).objective`.
pub fn objective_value(
    s: &WeightedPointSet,
    f: &ProfileConstraint,
    c: &CenterSet,
    z: Objective,
) -> Result<f64> {
    evaluate_objective(s, f, c, z).map(|p| p.objective)
}

fn integral_quotas(f: &ProfileConstraint) -> Result<Vec<Vec<u64>>> {
    f.quotas()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(t, &q)| {
                    let r = q.round();
                    if (q - r).abs() > 1e-9 * q.abs().max(1.0) {
                        Err(Error::NonIntegral {
                            cluster: i,
                            profile: t,
                            value: q,
                        })
                    } else {
                        Ok(r as u64)
                    }
                })
                .collect()
        })
        .collect()
}

/// Minimum over every integral assignment of the points of `x` respecting
/// `f`, by exhaustive search. Test oracle; limited to
/// [`BRUTE_FORCE_LIMIT`] points.
pub fn brute_force_objective(
    x: &Dataset,
    f: &ProfileConstraint,
    c: &CenterSet,
    z: Objective,
) -> Result<f64> {
    if x.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::OracleGuard {
            n: x.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    check_shapes(x.num_profiles(), f, c)?;
    let quotas = integral_quotas(f)?;
    let sizes = x.class_sizes();
    for (t, &n_t) in sizes.iter().enumerate() {
        let total: u64 = quotas.iter().map(|r| r[t]).sum();
        check_feasible(t, n_t as f64, total as f64)?;
    }

    let k = c.k();
    let costs: Vec<Vec<f64>> = x
        .points
        .iter()
        .map(|p| c.centers.iter().map(|cc| z.cost(p, cc)).collect())
        .collect();
    if k == 1 {
        return Ok(costs.iter().map(|r| r[0]).sum());
    }

    struct Search<'a> {
        costs: &'a [Vec<f64>],
        profile_of: &'a [usize],
        left: Vec<Vec<u64>>,
        best: f64,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, acc: f64) {
            if i == self.costs.len() {
                self.best = self.best.min(acc);
                return;
            }
            let t = self.profile_of[i];
            for j in 0..self.left.len() {
                if self.left[j][t] > 0 {
                    self.left[j][t] -= 1;
                    self.go(i + 1, acc + self.costs[i][j]);
                    self.left[j][t] += 1;
                }
            }
        }
    }
    let mut search = Search {
        costs: &costs,
        profile_of: &x.profile_of,
        left: quotas,
        best: f64::INFINITY,
    };
    search.go(0, 0.0);
    Ok(search.best)
}

/// Group-level view `F_group[i][j] = Σ_{t : j ∈ profile t} quotas[i][t]` of
/// an integral profile constraint.
pub fn group_level_view(
    f: &ProfileConstraint,
    profiles: &[GroupProfile],
    num_groups: usize,
) -> Result<Vec<Vec<u64>>> {
    if profiles.len() != f.num_profiles() {
        return Err(Error::InvalidParam(format!(
            "{} profiles for a constraint over {}",
            profiles.len(),
            f.num_profiles()
        )));
    }
    let quotas = integral_quotas(f)?;
    let mut out = vec![vec![0u64; num_groups]; f.k()];
    for (i, row) in quotas.iter().enumerate() {
        for (t, &q) in row.iter().enumerate() {
            for &g in profiles[t].groups() {
                if g >= num_groups {
                    return Err(Error::InvalidParam(format!(
                        "group {g} out of range for {num_groups} groups"
                    )));
                }
                out[i][g] += q;
            }
        }
    }
    Ok(out)
}
