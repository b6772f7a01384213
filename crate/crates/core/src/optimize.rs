//! Constrained minimization `min h(z) s.t. g_i(z) <= 0` over a search box,
//! with a derivative-free descent whose moves follow `w(z) + δ·η(t, w(z))`,
//! an exhaustive grid oracle, and checks of the local/global optimality theorems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::FunctionDef;
use crate::grid;
use crate::invexity::{step, CheckError, ClassId, Family, Instance, Mode};
use crate::sampling::{
    delta_grid, random_point, sample_pairs, CheckConfig, DeltaInterval, Domain, EtaMode, PointPair,
};
use crate::theorems::{ClaimCheck, ClusterSummary, TheoremId, TheoremReport, TheoremStatus};

/// Start points and descent randomness use separate seeds derived from the run seed.
const START_SALT: u64 = 0x5354_4152_5453;
const ETA_HALVINGS: i32 = 12;
const MIN_STEP_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OptProblem {
    pub h: FunctionDef,
    /// Feasible iff every constraint is `<= 0`.
    pub constraints: Vec<FunctionDef>,
    pub eta: FunctionDef,
    pub w: FunctionDef,
    /// Its sampling box is the search box.
    pub search_box: Domain,
}

impl OptProblem {
    pub fn new(
        h: FunctionDef,
        constraints: Vec<FunctionDef>,
        eta: FunctionDef,
        w: FunctionDef,
        search_box: Domain,
    ) -> Result<Self, CheckError> {
        let n = search_box.dim;
        Instance::new(Some(h.clone()), eta.clone(), w.clone(), search_box.clone())?;
        for (i, g) in constraints.iter().enumerate() {
            if g.two_point || g.arity != n || !g.is_scalar() {
                return Err(CheckError::Shape {
                    name: format!("g{}", i + 1),
                    expected: format!("a scalar function on R^{n}"),
                });
            }
        }
        Ok(OptProblem {
            h,
            constraints,
            eta,
            w,
            search_box,
        })
    }

    pub fn dim(&self) -> usize {
        self.search_box.dim
    }

    /// `max_i max(g_i(z), 0)`; NaN constraints count as infinitely violated.
    pub fn residual(&self, z: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|g| {
                let v = g.eval_scalar(z).expect("validated arity");
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v.max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        self.h.eval_scalar(z).expect("validated arity")
    }

    fn in_box(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(&self.search_box.sampling_box)
            .all(|(x, b)| *x >= b.lo && *x <= b.hi)
    }

    pub fn instance(&self) -> Instance {
        Instance::new(
            Some(self.h.clone()),
            self.eta.clone(),
            self.w.clone(),
            self.search_box.clone(),
        )
        .expect("validated in new")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub eps_feas: f64,
    pub eps_decrease: f64,
    pub local_global_tol: f64,
    pub max_iters: usize,
    pub stall_limit: usize,
    pub starts: usize,
    pub cluster_tol: f64,
    pub cluster_radius: f64,
    /// Oracle grid resolution; by default 4001, 201 or 61 points per axis in 1-3 dimensions.
    pub points_per_axis: Option<usize>,
    /// Sampling settings for the class checks, and the run seed.
    pub check: CheckConfig,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            eps_feas: 1e-9,
            eps_decrease: 1e-12,
            local_global_tol: 1e-6,
            max_iters: 10_000,
            stall_limit: 500,
            starts: 16,
            cluster_tol: crate::theorems::CLUSTER_TOL,
            cluster_radius: crate::theorems::CLUSTER_RADIUS,
            points_per_axis: None,
            check: CheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    OptimalVsOracle,
    LocalOnly,
    Infeasible,
}

/// One descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub start: Vec<f64>,
    /// `None` when no feasible point was reached.
    pub point: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub accepted_moves: usize,
    pub iterations: usize,
    /// Objective after each accepted move.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub best_point: Option<Vec<f64>>,
    pub best_value: Option<f64>,
    pub residual: Option<f64>,
    pub starts: usize,
    pub trace_lengths: Vec<usize>,
    pub endpoints: Vec<Endpoint>,
    /// Largest distance among endpoints within `local_global_tol` of the best.
    pub spread: Option<f64>,
    pub oracle_value: Option<f64>,
    /// Oracle near-minimizer cluster (grid points within `cluster_tol`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterSummary>,
    pub status: SolveStatus,
}

impl SolveResult {
    fn empty(status: SolveStatus) -> Self {
        SolveResult {
            best_point: None,
            best_value: None,
            residual: None,
            starts: 0,
            trace_lengths: Vec::new(),
            endpoints: Vec::new(),
            spread: None,
            oracle_value: None,
            cluster: None,
            status,
        }
    }
}

/// Exhaustive scan of the search box grid. Dimension at most 3.
pub fn brute_force_min(problem: &OptProblem, points_per_axis: usize) -> Result<SolveResult, CheckError> {
    brute_force_with(problem, points_per_axis, crate::theorems::CLUSTER_TOL)
}

fn brute_force_with(
    problem: &OptProblem,
    per_axis: usize,
    cluster_tol: f64,
) -> Result<SolveResult, CheckError> {
    let dim = problem.dim();
    if dim > grid::MAX_GRID_DIM {
        return Err(CheckError::Precondition(format!(
            "the grid oracle supports at most {} dimensions, got {dim}",
            grid::MAX_GRID_DIM
        )));
    }
    if per_axis < 2 {
        return Err(CheckError::Precondition(
            "points per axis must be at least 2".into(),
        ));
    }
    let sbox = &problem.search_box.sampling_box;
    // Infeasible or NaN grid points get +inf.
    let values = grid::scan(sbox, per_axis, |z| {
        let v = problem.value(z);
        if problem.residual(z) <= 0.0 && !v.is_nan() {
            v
        } else {
            f64::INFINITY
        }
    });
    let Some((best, &min)) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
    else {
        return Ok(SolveResult::empty(SolveStatus::Infeasible));
    };
    let near: Vec<Vec<f64>> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + cluster_tol)
        .map(|(i, _)| grid::grid_point(sbox, per_axis, i))
        .collect();
    let point = grid::grid_point(sbox, per_axis, best);
    let mut out = SolveResult::empty(SolveStatus::OptimalVsOracle);
    out.residual = Some(problem.residual(&point));
    out.best_point = Some(point.clone());
    out.best_value = Some(min);
    out.oracle_value = Some(min);
    let diameter = grid::diameter(&near);
    let tightest = grid::cluster_ladder(sbox, per_axis, &values, min, cluster_tol)
        .into_iter()
        .map(|(_, d)| d)
        .fold(diameter, f64::min);
    out.cluster = Some(ClusterSummary {
        grid_box: sbox.clone(),
        points_per_axis: per_axis,
        min_value: min,
        argmin: point,
        size: near.len(),
        diameter,
        tightest_diameter: tightest,
    });
    Ok(out)
}

/// Oracle near-minimizers (needed by the solution-set check).
fn oracle_cluster(problem: &OptProblem, per_axis: usize, min: f64, tol: f64) -> Vec<Vec<f64>> {
    let sbox = &problem.search_box.sampling_box;
    grid::scan(sbox, per_axis, |z| {
        let v = problem.value(z);
        (problem.residual(z) <= 0.0 && v <= min + tol).then(|| z.to_vec())
    })
    .into_iter()
    .flatten()
    .collect()
}

fn descend(problem: &OptProblem, start: &[f64], config: &OptConfig, stream: u64) -> Endpoint {
    let mut rng = ChaCha8Rng::seed_from_u64(config.check.seed);
    rng.set_stream(stream);
    let sbox = &problem.search_box.sampling_box;
    let mut cur = start.to_vec();
    let mut cur_val = problem.value(&cur);
    let mut feasible = problem.residual(&cur) <= config.eps_feas && !cur_val.is_nan();
    let mut steps: Vec<f64> = sbox.iter().map(|b| 0.1 * b.width()).collect();
    let min_steps: Vec<f64> = sbox.iter().map(|b| MIN_STEP_FRACTION * b.width()).collect();
    let mut trace = Vec::new();
    let mut stall = 0;
    let mut iterations = 0;

    // Feasible, inside the box and (once feasible) strictly better.
    let accept = |cand: &[f64], feasible: bool, cur_val: f64| -> Option<f64> {
        if !problem.in_box(cand) || problem.residual(cand) > config.eps_feas {
            return None;
        }
        let v = problem.value(cand);
        if v.is_nan() || (feasible && !(v <= cur_val - config.eps_decrease)) {
            return None;
        }
        Some(v)
    };

    while iterations < config.max_iters && stall < config.stall_limit {
        iterations += 1;
        let target: Vec<f64> = sbox
            .iter()
            .map(|b| b.lo + b.width() * rng.random::<f64>())
            .collect();
        let base = problem.w.eval(&cur).expect("validated arity");
        let dir = problem.eta.eval_pair(&target, &base).expect("validated arity");
        let mut moved = (0..=ETA_HALVINGS).find_map(|k| {
            let cand = step(&base, &dir, 0.5f64.powi(k));
            accept(&cand, feasible, cur_val).map(|v| (cand, v))
        });
        if moved.is_none() {
            'axes: for i in 0..cur.len() {
                for sign in [-1.0, 1.0] {
                    let mut cand = cur.clone();
                    cand[i] = (cur[i] + sign * steps[i]).clamp(sbox[i].lo, sbox[i].hi);
                    if let Some(v) = accept(&cand, feasible, cur_val) {
                        moved = Some((cand, v));
                        break 'axes;
                    }
                }
                steps[i] = (0.5 * steps[i]).max(min_steps[i]);
            }
        }
        match moved {
            Some((next, v)) => {
                cur = next;
                cur_val = v;
                feasible = true;
                trace.push(v);
                stall = 0;
            }
            None => stall += 1,
        }
    }
    Endpoint {
        start: start.to_vec(),
        point: feasible.then(|| cur.clone()),
        value: feasible.then_some(cur_val),
        accepted_moves: trace.len(),
        iterations,
        trace,
    }
}

fn result_from(problem: &OptProblem, endpoints: Vec<Endpoint>, config: &OptConfig) -> SolveResult {
    let best = endpoints
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.value.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = SolveResult::empty(SolveStatus::Infeasible);
    out.starts = endpoints.len();
    out.trace_lengths = endpoints.iter().map(|e| e.accepted_moves).collect();
    if let Some((i, v)) = best {
        let point = endpoints[i].point.clone().expect("feasible endpoint");
        out.residual = Some(problem.residual(&point));
        out.best_point = Some(point);
        out.best_value = Some(v);
        out.status = SolveStatus::LocalOnly;
        let near: Vec<Vec<f64>> = endpoints
            .iter()
            .filter(|e| e.value.is_some_and(|x| x <= v + config.local_global_tol))
            .filter_map(|e| e.point.clone())
            .collect();
        out.spread = Some(grid::diameter(&near));
    }
    out.endpoints = endpoints;
    out
}

/// Descent from `start` with the stream of start 0.
pub fn local_descent(problem: &OptProblem, start: &[f64], config: &OptConfig) -> SolveResult {
    result_from(problem, vec![descend(problem, start, config, 0)], config)
}

/// Seeded start point number `index` in the search box.
pub fn start_point(problem: &OptProblem, config: &OptConfig, index: usize) -> Vec<f64> {
    random_point(&problem.search_box, config.check.seed ^ START_SALT, index as u64)
}

/// Best of `starts` seeded descents, compared with the grid oracle when the
/// dimension allows it.
pub fn multistart_solve(
    problem: &OptProblem,
    config: &OptConfig,
    starts: usize,
) -> Result<SolveResult, CheckError> {
    if starts == 0 {
        return Err(CheckError::Precondition("at least one start is required".into()));
    }
    let endpoints: Vec<Endpoint> = (0..starts)
        .into_par_iter()
        .map(|i| descend(problem, &start_point(problem, config, i), config, i as u64))
        .collect();
    let mut out = result_from(problem, endpoints, config);
    if problem.dim() <= grid::MAX_GRID_DIM {
        let oracle = brute_force_with(problem, per_axis(problem, config), config.cluster_tol)?;
        out.oracle_value = oracle.oracle_value;
        out.cluster = oracle.cluster;
        if let (Some(best), Some(o)) = (out.best_value, out.oracle_value) {
            if best <= o + config.local_global_tol {
                out.status = SolveStatus::OptimalVsOracle;
            }
        }
    }
    Ok(out)
}

fn per_axis(problem: &OptProblem, config: &OptConfig) -> usize {
    config
        .points_per_axis
        .unwrap_or_else(|| grid::default_points_per_axis(problem.dim()))
}

fn gated(label: &str, gate: bool, holds: bool, checked: usize) -> ClaimCheck {
    ClaimCheck {
        claim: format!("{label} [{}]", if gate { "gate passed" } else { "gate not met" }),
        consistent: holds,
        samples_checked: checked,
        witness: None,
    }
}

/// Check on one problem:
/// (a) every descent endpoint reaches the oracle value when `h` is w-preinvex
///     or w-pre-pseudo-invex (w-lifted);
/// (b) the oracle minimizer cluster is a singleton when `h` is strictly w-preinvex;
/// (c) generated points between oracle minimizers stay feasible and minimal
///     when `h` is w-prequasi-invex and the feasible set is w-invex on samples.
///
/// A conclusion only counts when its gate passed.
pub fn verify_optimality_theorems(
    problem: &OptProblem,
    config: &OptConfig,
) -> Result<TheoremReport, CheckError> {
    let check = &config.check;
    check.validate()?;
    let inst = problem.instance();
    let pairs = sample_pairs(&problem.search_box, check);
    let class = |f| inst.check_on(ClassId::w(f), &pairs, check);
    let pre = class(Family::Preinvex)?;
    let strict = class(Family::StrictPreinvex)?;
    let quasi = class(Family::Prequasi)?;
    let (pseudo, _) = inst.check_pre_pseudo_on(&pairs, &check.with_eta_mode(EtaMode::WLifted))?;

    // The feasible set's w-invexity on feasible sample pairs.
    let tol = config.eps_feas;
    let dgrid = delta_grid(check, DeltaInterval::Closed);
    let feasible_pairs: Vec<&PointPair> = pairs
        .iter()
        .filter(|p| problem.residual(&p.z1) <= tol && problem.residual(&p.z2) <= tol)
        .collect();
    let set_fail = feasible_pairs.par_iter().find_first(|p| {
        dgrid.iter().any(|&d| {
            let g = inst.generated_point(Mode::W, &p.z1, &p.z2, d);
            problem.residual(&g) > tol
        })
    });
    let feasible_set = ClaimCheck {
        claim: "feasible set is w-invex".into(),
        consistent: set_fail.is_none() && !feasible_pairs.is_empty(),
        samples_checked: feasible_pairs.len() * dgrid.len(),
        witness: None,
    };

    let solve = multistart_solve(problem, config, config.starts)?;
    let Some(oracle) = solve.oracle_value else {
        let mut r = TheoremReport::new(
            TheoremId::Optimality,
            Vec::new(),
            gated("oracle available", false, false, 0),
        );
        r.status = TheoremStatus::RefutedHypothesis;
        r.vacuous = true;
        r.notes.push("no feasible grid point".into());
        return Ok(r);
    };

    // (a)
    let gate_a = pre.is_consistent() || pseudo.is_consistent();
    let stuck: Vec<&Endpoint> = solve
        .endpoints
        .iter()
        .filter(|e| e.value.is_some_and(|v| v > oracle + config.local_global_tol))
        .collect();
    let reached = solve.endpoints.iter().filter(|e| e.value.is_some()).count();
    let claim_a = gated(
        "(a) every local endpoint is global",
        gate_a,
        stuck.is_empty() && reached > 0,
        reached,
    );

    // (b)
    let gate_b = strict.is_consistent();
    let cluster = solve.cluster.clone().expect("oracle ran");
    let claim_b = gated(
        "(b) minimizer cluster is a singleton",
        gate_b,
        cluster.tightest_diameter <= config.cluster_radius,
        cluster.size,
    );

    // (c)
    let gate_c = quasi.is_consistent() && feasible_set.consistent;
    let near = oracle_cluster(problem, per_axis(problem, config), oracle, config.cluster_tol);
    let stride = near.len().div_ceil(64).max(1);
    let ends: Vec<&Vec<f64>> = near.iter().step_by(stride).collect();
    let bad_c = ends
        .par_iter()
        .flat_map_iter(|a| ends.iter().map(move |b| (*a, *b)))
        .filter(|(a, b)| {
            dgrid.iter().any(|&d| {
                let g = inst.generated_point(Mode::W, a, b, d);
                let v = problem.value(&g);
                problem.residual(&g) > tol || !(v <= oracle + config.cluster_tol)
            })
        })
        .count();
    let claim_c = gated(
        "(c) solution set is w-invex",
        gate_c,
        bad_c == 0,
        ends.len() * ends.len() * dgrid.len(),
    );

    let gates = [(gate_a, &claim_a), (gate_b, &claim_b), (gate_c, &claim_c)];
    let any_gate = gates.iter().any(|(g, _)| *g);
    let failed = gates.iter().any(|(g, c)| *g && !c.consistent);
    let mut report = TheoremReport::new(
        TheoremId::Optimality,
        vec![
            ClaimCheck::from_verdict(pre.key.to_string(), &pre),
            ClaimCheck::from_verdict(pseudo.key.to_string(), &pseudo),
            ClaimCheck::from_verdict(strict.key.to_string(), &strict),
            ClaimCheck::from_verdict(quasi.key.to_string(), &quasi),
            feasible_set,
        ],
        ClaimCheck {
            claim: "every conclusion whose gate passed holds".into(),
            consistent: !failed,
            samples_checked: solve.endpoints.len(),
            witness: None,
        },
    );
    report.side_checks = vec![claim_a, claim_b, claim_c];
    report.cluster = Some(cluster);
    report.status = if failed {
        TheoremStatus::CounterexampleToImplication
    } else if any_gate {
        TheoremStatus::Supported
    } else {
        TheoremStatus::RefutedHypothesis
    };
    report.vacuous = !any_gate;
    for e in &stuck {
        report.notes.push(format!(
            "descent from {:?} stopped at {:?} with value {} above the oracle value {oracle}",
            e.start,
            e.point.as_deref().unwrap_or(&[]),
            e.value.unwrap_or(f64::NAN)
        ));
    }

    // Strict local/global needs η(z1, w(z2)) != 0 for z1 != w(z2).
    let zero_eta = pairs
        .iter()
        .filter(|p| {
            let base = inst.base(Mode::W, &p.z2);
            p.z1 != base && inst.eta_at(&p.z1, &base).iter().all(|x| *x == 0.0)
        })
        .count();
    report.notes.push(format!(
        "sampled pairs with z1 != w(z2) but zero direction: {zero_eta} of {}",
        pairs.len()
    ));
    report.notes.push(
        "solution-set check uses the direction eta(z1, w(z2)) throughout; one source proof swaps the arguments"
            .into(),
    );
    Ok(report)
}
