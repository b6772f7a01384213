//! Numerical checks of the structural theorems on concrete `(h, η, w, X)`
//! instances, plus the closure constructors those theorems are about.
//!
//! Each check runs its hypotheses and conclusion on one shared sample set and
//! reports a [`TheoremReport`]. Like the class checks, a supported status is
//! evidence on samples only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{parse, BinOp, Expr, FunctionDef};
use crate::grid;
use crate::invexity::{chord, CheckError, ClassId, Counterexample, Family, Instance, Relation, Verdict};
use crate::sampling::{
    delta_grid, sample_pairs, CheckConfig, DeltaInterval, Domain, EtaMode, Interval, PointPair,
};

/// Near-minimizers are grid points within this of the grid minimum.
pub const CLUSTER_TOL: f64 = 1e-6;
/// A near-minimizer set counts as a singleton when its diameter is at most this.
pub const CLUSTER_RADIUS: f64 = 1e-3;
/// At most this many per-sample mismatches are listed; all are counted.
const MAX_LISTED: usize = 32;
/// Near-minimizers used as pair endpoints in the argmin check.
const MAX_CLUSTER_PAIRS: usize = 64;
const PHI_GRID: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    Epigraph,
    LevelSet,
    ArgminSet,
    Scale,
    Sum,
    WeightedSum,
    Compose,
    PseudoImplication,
    Optimality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremStatus {
    Supported,
    RefutedHypothesis,
    CounterexampleToImplication,
}

/// A point of the epigraph `{(z, α) : h(z) <= α}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiPoint {
    pub z: Vec<f64>,
    pub level: f64,
}

impl EpiPoint {
    pub fn new(h: &FunctionDef, z: Vec<f64>, level: f64, tol: f64) -> Result<Self, CheckError> {
        let value = h.eval_scalar(&z)?;
        if !(level >= value - tol) {
            return Err(CheckError::Precondition(format!(
                "level {level} is below h(z) = {value}"
            )));
        }
        Ok(EpiPoint { z, level })
    }
}

/// One checked claim (a hypothesis or a conclusion) and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub claim: String,
    pub consistent: bool,
    pub samples_checked: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
}

impl ClaimCheck {
    pub fn from_verdict(claim: impl Into<String>, v: &Verdict) -> Self {
        ClaimCheck {
            claim: claim.into(),
            consistent: v.is_consistent(),
            samples_checked: v.samples_checked,
            witness: v.shrunk().cloned(),
        }
    }

    fn of_class(v: &Verdict) -> Self {
        ClaimCheck::from_verdict(v.key.to_string(), v)
    }
}

/// Counts for a per-sample equivalence or implication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub agree: usize,
    pub disagree: usize,
}

impl Agreement {
    pub fn rate(&self) -> f64 {
        let total = self.agree + self.disagree;
        if total == 0 {
            1.0
        } else {
            self.agree as f64 / total as f64
        }
    }

    fn add(&mut self, other: Agreement) {
        self.agree += other.agree;
        self.disagree += other.disagree;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMismatch {
    pub kind: String,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Grid estimate of the minimum and the near-minimizer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub grid_box: Vec<Interval>,
    pub points_per_axis: usize,
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub size: usize,
    pub diameter: f64,
    /// Smallest diameter when the tolerance is tightened down to exact ties;
    /// flat minima look wide at a fixed value tolerance.
    pub tightest_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub hypotheses: Vec<ClaimCheck>,
    pub conclusion: ClaimCheck,
    /// Related checks reported alongside, not part of the implication.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub side_checks: Vec<ClaimCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Agreement>,
    pub mismatches: Vec<SampleMismatch>,
    pub mismatch_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterSummary>,
    pub status: TheoremStatus,
    /// No sample met the theorem's preconditions.
    pub vacuous: bool,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub(crate) fn new(theorem: TheoremId, hypotheses: Vec<ClaimCheck>, conclusion: ClaimCheck) -> Self {
        TheoremReport {
            theorem,
            hypotheses,
            conclusion,
            side_checks: Vec::new(),
            agreement: None,
            mismatches: Vec::new(),
            mismatch_count: 0,
            cluster: None,
            status: TheoremStatus::Supported,
            vacuous: false,
            notes: Vec::new(),
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|c| c.consistent)
    }

    /// Derive the status; `iff` also treats a consistent conclusion under a
    /// refuted hypothesis as a counterexample (to the converse).
    fn decide(&mut self, iff: bool) {
        let hyp = self.hypotheses_hold();
        let concl = self.conclusion.consistent;
        self.status = if hyp && !concl {
            TheoremStatus::CounterexampleToImplication
        } else if iff && !hyp && concl && self.hypotheses.len() == 1 {
            self.notes
                .push("conclusion held while the hypothesis failed: converse refuted".into());
            TheoremStatus::CounterexampleToImplication
        } else if !hyp {
            TheoremStatus::RefutedHypothesis
        } else {
            TheoremStatus::Supported
        };
    }

    fn push_mismatches(&mut self, found: Vec<SampleMismatch>) {
        self.mismatch_count += found.len();
        let room = MAX_LISTED.saturating_sub(self.mismatches.len());
        self.mismatches.extend(found.into_iter().take(room));
    }

    pub fn is_counterexample(&self) -> bool {
        self.status == TheoremStatus::CounterexampleToImplication
    }
}

fn mismatch(kind: &str, p: &PointPair, delta: f64, lhs: f64, rhs: f64) -> SampleMismatch {
    SampleMismatch {
        kind: kind.into(),
        z1: p.z1.clone(),
        z2: p.z2.clone(),
        delta,
        lhs,
        rhs,
    }
}

fn record(
    p: &PointPair,
    delta: f64,
    gen: Vec<f64>,
    lhs: f64,
    rhs: f64,
    relation: Relation,
) -> Counterexample {
    Counterexample {
        z1: p.z1.clone(),
        z2: p.z2.clone(),
        delta,
        generated_point: gen,
        lhs,
        rhs,
        violation: lhs - rhs,
        relation,
    }
}

/// Per-pair scan results merged in pair order.
#[derive(Default)]
struct Scan {
    checked: usize,
    agreement: Agreement,
    mismatches: Vec<SampleMismatch>,
    first_failure: Option<Counterexample>,
}

impl Scan {
    fn merge(parts: Vec<Scan>) -> Scan {
        let mut out = Scan::default();
        for s in parts {
            out.checked += s.checked;
            out.agreement.add(s.agreement);
            out.mismatches.extend(s.mismatches);
            if out.first_failure.is_none() {
                out.first_failure = s.first_failure;
            }
        }
        out
    }

    fn fail(&mut self, cx: Counterexample) {
        if self.first_failure.is_none() {
            self.first_failure = Some(cx);
        }
    }

    fn claim(&self, claim: impl Into<String>) -> ClaimCheck {
        ClaimCheck {
            claim: claim.into(),
            consistent: self.first_failure.is_none(),
            samples_checked: self.checked,
            witness: self.first_failure.clone(),
        }
    }
}

fn scan_pairs<F>(pairs: &[PointPair], f: F) -> Scan
where
    F: Fn(&PointPair) -> Scan + Sync + Send,
{
    Scan::merge(pairs.par_iter().map(f).collect())
}

fn instance(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<Instance, CheckError> {
    config.validate()?;
    Instance::new(Some(h.clone()), eta.clone(), w.clone(), domain.clone())
}

/// `epi(h)` is w-invex for the lifted maps `(z, α) ↦ (w(z), α)` and
/// `η((z1, α), (y, β)) = (η(z1, y), α - β)` iff `h` is w-preinvex.
///
/// Levels are `h(z) + {0, 1}`. The per-sample agreement compares the direct
/// preinvex inequality with membership of the lifted point at offsets `(0, 0)`.
pub fn epigraph_check(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let inst = instance(h, eta, w, domain, config)?;
    epigraph_on(&inst, &sample_pairs(domain, config), config)
}

fn epigraph_on(
    inst: &Instance,
    pairs: &[PointPair],
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let set = inst.check_on(ClassId::w(Family::SetInvex), pairs, config)?;
    let pre = inst.check_on(ClassId::w(Family::Preinvex), pairs, config)?;
    let grid = delta_grid(config, DeltaInterval::Closed);
    let class = ClassId::w(Family::Preinvex);
    let tol = config.tol_weak;

    let scan = scan_pairs(pairs, |p| {
        let mut s = Scan::default();
        let (h1, h2) = (inst.h_at(&p.z1), inst.h_at(&p.z2));
        for &d in &grid {
            let Some((direct, violated)) = inst.evaluate(class, &p.z1, &p.z2, d, config) else {
                continue;
            };
            let gen = direct.generated_point.clone();
            let value = direct.lhs;
            let dist = inst.domain.distance(&gen);
            s.checked += 1;
            if dist > config.tol_membership {
                s.fail(record(
                    p,
                    d,
                    gen,
                    dist,
                    0.0,
                    Relation::Member(config.tol_membership),
                ));
                continue;
            }
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                let level = chord(h1 + a, h2 + b, d);
                let inside = value <= level + tol;
                if !inside {
                    s.fail(record(p, d, gen.clone(), value, level, Relation::Le(tol)));
                }
                if (a, b) == (0.0, 0.0) {
                    if inside != !violated {
                        s.agreement.disagree += 1;
                        s.mismatches.push(mismatch("equivalence", p, d, value, level));
                    } else {
                        s.agreement.agree += 1;
                    }
                    if !inside {
                        s.mismatches
                            .push(mismatch("outside-epigraph", p, d, value, level));
                    }
                }
            }
        }
        s
    });

    let mut report = TheoremReport::new(
        TheoremId::Epigraph,
        vec![ClaimCheck::of_class(&pre)],
        scan.claim("epi(h) is w-invex for the lifted maps"),
    );
    report.side_checks.push(ClaimCheck::of_class(&set));
    report.agreement = Some(scan.agreement);
    report.push_mismatches(scan.mismatches);
    report.vacuous = scan.checked == 0;
    report.decide(true);
    Ok(report)
}

/// Level sets `M_α = {z ∈ X : h(z) <= α}` of a w-prequasi-invex function are
/// w-invex; with `α = max{h(z1), h(z2)}` per pair this is an equivalence with
/// the prequasi inequality, reported as per-sample agreement.
pub fn level_set_check(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    alpha: f64,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let inst = instance(h, eta, w, domain, config)?;
    level_set_on(&inst, &sample_pairs(domain, config), alpha, config)
}

fn level_set_on(
    inst: &Instance,
    pairs: &[PointPair],
    alpha: f64,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let set = inst.check_on(ClassId::w(Family::SetInvex), pairs, config)?;
    let quasi = inst.check_on(ClassId::w(Family::Prequasi), pairs, config)?;
    let grid = delta_grid(config, DeltaInterval::Closed);
    let class = ClassId::w(Family::Prequasi);
    let tol = config.tol_weak;

    let scan = scan_pairs(pairs, |p| {
        let mut s = Scan::default();
        let (h1, h2) = (inst.h_at(&p.z1), inst.h_at(&p.z2));
        let qualifies = h1 <= alpha && h2 <= alpha;
        for &d in &grid {
            let Some((direct, violated)) = inst.evaluate(class, &p.z1, &p.z2, d, config) else {
                continue;
            };
            let value = direct.lhs;
            // Per-pair level: the iff form.
            let level = h1.max(h2);
            if (value <= level + tol) != !violated {
                s.agreement.disagree += 1;
                s.mismatches.push(mismatch("equivalence", p, d, value, level));
            } else {
                s.agreement.agree += 1;
            }
            if !qualifies {
                continue;
            }
            s.checked += 1;
            let gen = direct.generated_point;
            let dist = inst.domain.distance(&gen);
            if dist > config.tol_membership {
                s.mismatches.push(mismatch("outside-domain", p, d, dist, 0.0));
                s.fail(record(
                    p,
                    d,
                    gen,
                    dist,
                    0.0,
                    Relation::Member(config.tol_membership),
                ));
            } else if value > alpha + tol {
                s.mismatches
                    .push(mismatch("outside-level-set", p, d, value, alpha));
                s.fail(record(p, d, gen, value, alpha, Relation::Le(tol)));
            }
        }
        s
    });

    let mut report = TheoremReport::new(
        TheoremId::LevelSet,
        vec![ClaimCheck::of_class(&set), ClaimCheck::of_class(&quasi)],
        scan.claim(format!("level set at {alpha} is w-invex")),
    );
    report.agreement = Some(scan.agreement);
    report.push_mismatches(scan.mismatches);
    report.vacuous = scan.checked == 0;
    if report.vacuous {
        report
            .notes
            .push(format!("no sampled pair lies in the level set at {alpha}"));
    }
    report.decide(false);
    Ok(report)
}

/// The set of minimizers of a w-preinvex `h` over a w-invex `X` is w-invex,
/// and a singleton when `h` is strictly w-preinvex.
///
/// The minimum is a grid estimate over the sampling box.
pub fn argmin_set_check(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let inst = instance(h, eta, w, domain, config)?;
    argmin_on(&inst, &sample_pairs(domain, config), config)
}

fn argmin_on(
    inst: &Instance,
    pairs: &[PointPair],
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let set = inst.check_on(ClassId::w(Family::SetInvex), pairs, config)?;
    let pre = inst.check_on(ClassId::w(Family::Preinvex), pairs, config)?;
    let strict = inst.check_on(ClassId::w(Family::StrictPreinvex), pairs, config)?;
    let hyps = vec![ClaimCheck::of_class(&set), ClaimCheck::of_class(&pre)];
    let dim = inst.dim();
    if dim > grid::MAX_GRID_DIM {
        let mut report = TheoremReport::new(
            TheoremId::ArgminSet,
            hyps,
            ClaimCheck {
                claim: "minimizer set is w-invex".into(),
                consistent: true,
                samples_checked: 0,
                witness: None,
            },
        );
        report.vacuous = true;
        report
            .notes
            .push(format!("grid estimate skipped in dimension {dim}"));
        report.decide(false);
        return Ok(report);
    }

    let per_axis = grid::default_points_per_axis(dim);
    let sbox = &inst.domain.sampling_box;
    let values = grid::scan(sbox, per_axis, |z| inst.h_at(z));
    let (best_index, nu) = values.iter().enumerate().filter(|(_, v)| !v.is_nan()).fold(
        (usize::MAX, f64::INFINITY),
        |acc, (i, &v)| {
            if v < acc.1 {
                (i, v)
            } else {
                acc
            }
        },
    );
    let near: Vec<Vec<f64>> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= nu + CLUSTER_TOL)
        .map(|(i, _)| grid::grid_point(sbox, per_axis, i))
        .collect();
    let diameter = grid::diameter(&near);
    let tightest = grid::cluster_ladder(sbox, per_axis, &values, nu, CLUSTER_TOL)
        .into_iter()
        .map(|(_, d)| d)
        .fold(diameter, f64::min);

    // Evenly thinned near-minimizers as pair endpoints.
    let stride = near.len().div_ceil(MAX_CLUSTER_PAIRS).max(1);
    let ends: Vec<&Vec<f64>> = near.iter().step_by(stride).collect();
    let cluster_pairs: Vec<PointPair> = ends
        .iter()
        .flat_map(|a| {
            ends.iter().map(move |b| PointPair {
                z1: (*a).clone(),
                z2: (*b).clone(),
            })
        })
        .collect();
    let dgrid = delta_grid(config, DeltaInterval::Closed);
    let scan = scan_pairs(&cluster_pairs, |p| {
        let mut s = Scan::default();
        for &d in &dgrid {
            let gen = inst.generated_point(crate::invexity::Mode::W, &p.z1, &p.z2, d);
            let value = inst.h_at(&gen);
            if value.is_nan() {
                continue;
            }
            s.checked += 1;
            let dist = inst.domain.distance(&gen);
            if dist > config.tol_membership {
                s.mismatches.push(mismatch("outside-domain", p, d, dist, 0.0));
                s.fail(record(
                    p,
                    d,
                    gen,
                    dist,
                    0.0,
                    Relation::Member(config.tol_membership),
                ));
            } else if value > nu + CLUSTER_TOL {
                s.mismatches.push(mismatch("not-near-minimal", p, d, value, nu));
                s.fail(record(p, d, gen, value, nu, Relation::Le(CLUSTER_TOL)));
            }
        }
        s
    });

    let mut report = TheoremReport::new(TheoremId::ArgminSet, hyps, scan.claim("minimizer set is w-invex"));
    report.push_mismatches(scan.mismatches);
    report.vacuous = near.is_empty();
    report.cluster = (!near.is_empty()).then(|| ClusterSummary {
        grid_box: sbox.clone(),
        points_per_axis: per_axis,
        min_value: nu,
        argmin: grid::grid_point(sbox, per_axis, best_index),
        size: near.len(),
        diameter,
        tightest_diameter: tightest,
    });
    let singleton = tightest <= CLUSTER_RADIUS;
    report.side_checks.push(ClaimCheck::of_class(&strict));
    report.side_checks.push(ClaimCheck {
        claim: "minimizer set is a singleton".into(),
        consistent: singleton,
        samples_checked: near.len(),
        witness: None,
    });
    report.decide(false);
    if strict.is_consistent() && report.hypotheses_hold() && !singleton {
        report.status = TheoremStatus::CounterexampleToImplication;
        report.notes.push(format!(
            "strictly w-preinvex on samples but the minimizer cluster has diameter {diameter}"
        ));
    }
    Ok(report)
}

fn positive(k: f64) -> Result<f64, CheckError> {
    if k > 0.0 && k.is_finite() {
        Ok(k)
    } else {
        Err(CheckError::Precondition(format!(
            "coefficient must be positive and finite, got {k}"
        )))
    }
}

fn scalar_arity(fs: &[&FunctionDef]) -> Result<usize, CheckError> {
    let n = fs[0].arity;
    if fs.iter().any(|f| f.two_point || !f.is_scalar() || f.arity != n) {
        return Err(CheckError::Shape {
            name: "h".into(),
            expected: format!("scalar functions of the same arity {n}"),
        });
    }
    Ok(n)
}

/// `k·h` for `k > 0`.
pub fn scale(h: &FunctionDef, k: f64) -> Result<FunctionDef, CheckError> {
    weighted_sum(&[(h.clone(), k)]).map(|f| f.with_name(format!("{k}*{}", h.name)))
}

/// `h1 + h2`.
pub fn sum(h1: &FunctionDef, h2: &FunctionDef) -> Result<FunctionDef, CheckError> {
    let n = scalar_arity(&[h1, h2])?;
    let e = Expr::binary(BinOp::Add, h1.outputs[0].clone(), h2.outputs[0].clone());
    Ok(FunctionDef::from_exprs(
        format!("{}+{}", h1.name, h2.name),
        n,
        false,
        vec![e],
    )?)
}

/// `Σ k_i·h_i` with every `k_i > 0`.
pub fn weighted_sum(terms: &[(FunctionDef, f64)]) -> Result<FunctionDef, CheckError> {
    if terms.is_empty() {
        return Err(CheckError::Precondition("weighted sum of no terms".into()));
    }
    let fs: Vec<&FunctionDef> = terms.iter().map(|(f, _)| f).collect();
    let n = scalar_arity(&fs)?;
    let mut acc: Option<Expr> = None;
    for (f, k) in terms {
        let term = Expr::binary(BinOp::Mul, Expr::Num(positive(*k)?), f.outputs[0].clone());
        acc = Some(match acc {
            None => term,
            Some(a) => Expr::binary(BinOp::Add, a, term),
        });
    }
    let name = fs.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join("+");
    Ok(FunctionDef::from_exprs(
        format!("weighted({name})"),
        n,
        false,
        vec![acc.expect("non-empty")],
    )?)
}

/// `phi ∘ h` for a scalar `phi` of one variable.
pub fn compose(phi: &FunctionDef, h: &FunctionDef) -> Result<FunctionDef, CheckError> {
    if phi.two_point || phi.arity != 1 || !phi.is_scalar() {
        return Err(CheckError::Shape {
            name: "phi".into(),
            expected: "a scalar function of one variable".into(),
        });
    }
    let n = scalar_arity(&[h])?;
    let e = phi.outputs[0].substitute(&[h.outputs[0].clone()]);
    Ok(FunctionDef::from_exprs(
        format!("{}({})", phi.name, h.name),
        n,
        false,
        vec![e],
    )?)
}

/// A closure construction whose class membership follows from its parts'.
#[derive(Debug, Clone)]
pub enum Closure {
    Scale { h: FunctionDef, k: f64 },
    Sum { h1: FunctionDef, h2: FunctionDef },
    WeightedSum { terms: Vec<(FunctionDef, f64)> },
    Compose { phi: FunctionDef, h: FunctionDef },
}

impl Closure {
    pub fn build(&self) -> Result<FunctionDef, CheckError> {
        match self {
            Closure::Scale { h, k } => scale(h, *k),
            Closure::Sum { h1, h2 } => sum(h1, h2),
            Closure::WeightedSum { terms } => weighted_sum(terms),
            Closure::Compose { phi, h } => compose(phi, h),
        }
    }

    pub fn components(&self) -> Vec<&FunctionDef> {
        match self {
            Closure::Scale { h, .. } | Closure::Compose { h, .. } => vec![h],
            Closure::Sum { h1, h2 } => vec![h1, h2],
            Closure::WeightedSum { terms } => terms.iter().map(|(f, _)| f).collect(),
        }
    }

    pub fn theorem(&self) -> TheoremId {
        match self {
            Closure::Scale { .. } => TheoremId::Scale,
            Closure::Sum { .. } => TheoremId::Sum,
            Closure::WeightedSum { .. } => TheoremId::WeightedSum,
            Closure::Compose { .. } => TheoremId::Compose,
        }
    }
}

/// Sample-check that `phi` is non-decreasing (and convex when `convex`) on a
/// uniform grid over `[lo, hi]`.
fn phi_hypotheses(phi: &FunctionDef, lo: f64, hi: f64, convex: bool) -> Vec<ClaimCheck> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let t: Vec<f64> = (0..PHI_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (PHI_GRID - 1) as f64)
        .collect();
    let v: Vec<f64> = t
        .iter()
        .map(|&x| phi.eval_scalar(&[x]).unwrap_or(f64::NAN))
        .collect();
    let tol = |a: f64| 1e-9 * a.abs().max(1.0);
    let point = |i: usize, lhs: f64, rhs: f64| Counterexample {
        z1: vec![t[i]],
        z2: vec![t[i + 1]],
        delta: 0.0,
        generated_point: vec![t[i]],
        lhs,
        rhs,
        violation: lhs - rhs,
        relation: Relation::Le(tol(rhs)),
    };
    let increasing = (0..PHI_GRID - 1)
        .find(|&i| !(v[i] <= v[i + 1] + tol(v[i])))
        .map(|i| point(i, v[i], v[i + 1]));
    let mut out = vec![ClaimCheck {
        claim: format!("phi non-decreasing on [{lo}, {hi}]"),
        consistent: increasing.is_none(),
        samples_checked: PHI_GRID,
        witness: increasing,
    }];
    if convex {
        let bad = (1..PHI_GRID - 1)
            .find(|&i| !(2.0 * v[i] <= v[i - 1] + v[i + 1] + tol(v[i])))
            .map(|i| point(i, 2.0 * v[i], v[i - 1] + v[i + 1]));
        out.push(ClaimCheck {
            claim: format!("phi convex on [{lo}, {hi}]"),
            consistent: bad.is_none(),
            samples_checked: PHI_GRID,
            witness: bad,
        });
    }
    out
}

/// Check a closure construction in `family` (w-preinvex or w-prequasi-invex)
/// on the samples its parts are checked on.
///
/// The per-sample agreement counts samples where every part satisfied its
/// inequality, split by whether the construction did too.
pub fn closure_check(
    closure: &Closure,
    family: Family,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    config.validate()?;
    let built = closure.build()?;
    let inst = Instance::new(Some(built), eta.clone(), w.clone(), domain.clone())?;
    closure_on(closure, family, &inst, &sample_pairs(domain, config), config)
}

fn closure_on(
    closure: &Closure,
    family: Family,
    construct: &Instance,
    pairs: &[PointPair],
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let class = ClassId::w(family);
    if !matches!(family, Family::Preinvex | Family::Prequasi) {
        return Err(CheckError::UnsupportedClass(class));
    }
    let parts: Vec<Instance> = closure
        .components()
        .into_iter()
        .map(|f| construct.with_h(f.clone()))
        .collect::<Result<_, _>>()?;
    let mut hyps = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let v = part.check_on(class, pairs, config)?;
        hyps.push(ClaimCheck::from_verdict(format!("part {} is {class}", i + 1), &v));
    }
    if let Closure::Compose { phi, .. } = closure {
        let (lo, hi) = pairs
            .iter()
            .flat_map(|p| [parts[0].h_at(&p.z1), parts[0].h_at(&p.z2)])
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        if lo.is_finite() {
            let pad = 0.1 * (hi - lo);
            hyps.extend(phi_hypotheses(
                phi,
                lo - pad,
                hi + pad,
                family == Family::Preinvex,
            ));
        }
    }
    let conclusion = construct.check_on(class, pairs, config)?;

    let grid = delta_grid(config, class.interval());
    let scan = scan_pairs(pairs, |p| {
        let mut s = Scan::default();
        for &d in &grid {
            let premises = parts
                .iter()
                .all(|part| matches!(part.evaluate(class, &p.z1, &p.z2, d, config), Some((_, false))));
            if !premises {
                continue;
            }
            match construct.evaluate(class, &p.z1, &p.z2, d, config) {
                Some((_, false)) => s.agreement.agree += 1,
                Some((cx, true)) => {
                    s.agreement.disagree += 1;
                    s.mismatches.push(mismatch("implication", p, d, cx.lhs, cx.rhs));
                }
                None => {}
            }
        }
        s
    });

    let mut report = TheoremReport::new(
        closure.theorem(),
        hyps,
        ClaimCheck::from_verdict(
            format!(
                "{} is {class}",
                construct.h.as_ref().map_or("", |h| h.name.as_str())
            ),
            &conclusion,
        ),
    );
    report.agreement = Some(scan.agreement);
    report.push_mismatches(scan.mismatches);
    report.vacuous = conclusion.is_vacuous();
    report.decide(false);
    Ok(report)
}

/// A w-preinvex `h` is w-pre-pseudo-invex with `b(z1, z2) = h(z2) - h(z1)`.
///
/// Checked in the w-lifted base (the one the implication's argument uses).
/// The class itself is also run in the as-written base and reported as a side
/// check, since the two bases can disagree.
pub fn pseudo_implication_check(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let inst = instance(h, eta, w, domain, config)?;
    pseudo_on(&inst, &sample_pairs(domain, config), config)
}

fn pseudo_on(
    inst: &Instance,
    pairs: &[PointPair],
    config: &CheckConfig,
) -> Result<TheoremReport, CheckError> {
    let pre = inst.check_on(ClassId::w(Family::Preinvex), pairs, config)?;
    let lifted_cfg = config.with_eta_mode(EtaMode::WLifted);
    let (lifted, bounds) = inst.check_pre_pseudo_on(pairs, &lifted_cfg)?;
    let (written, _) = inst.check_pre_pseudo_on(pairs, &config.with_eta_mode(EtaMode::AsWritten))?;
    let grid = delta_grid(config, DeltaInterval::Open);
    let tol = config.tol_weak;

    let scan = scan_pairs(pairs, |p| {
        let mut s = Scan::default();
        let (h1, h2) = (inst.h_at(&p.z1), inst.h_at(&p.z2));
        if !(h1 < h2 - config.tol_strict) {
            return s;
        }
        let b = h2 - h1;
        for &d in &grid {
            let gen = inst.generated_point(crate::invexity::Mode::W, &p.z1, &p.z2, d);
            let value = inst.h_at(&gen);
            if value.is_nan() {
                continue;
            }
            s.checked += 1;
            let bound = h2 - d * (1.0 - d) * b;
            if value > bound + tol {
                s.mismatches.push(mismatch("b-witness", p, d, value, bound));
                s.fail(record(p, d, gen, value, bound, Relation::Le(tol)));
            }
        }
        s
    });

    let b_claim = scan.claim("b = h(z2) - h(z1) satisfies the pseudo inequality");
    let conclusion = ClaimCheck {
        claim: lifted.key.to_string(),
        consistent: lifted.is_consistent() && b_claim.consistent,
        samples_checked: lifted.samples_checked,
        witness: lifted.shrunk().cloned().or(b_claim.witness.clone()),
    };
    let mut report = TheoremReport::new(
        TheoremId::PseudoImplication,
        vec![ClaimCheck::of_class(&pre)],
        conclusion,
    );
    report.side_checks.push(b_claim);
    report.side_checks.push(ClaimCheck::of_class(&written));
    report.push_mismatches(scan.mismatches);
    report.vacuous = bounds.qualifying_pairs == 0;
    if let Some(inf) = bounds.infimum {
        report.notes.push(format!(
            "w-lifted: {} qualifying pairs, smallest admissible b {inf}",
            bounds.qualifying_pairs
        ));
    }
    if written.is_refuted() != lifted.is_refuted() {
        report.notes.push(format!(
            "base point matters: as-written is {}, w-lifted is {}",
            outcome_word(&written),
            outcome_word(&lifted)
        ));
    }
    report.decide(false);
    Ok(report)
}

fn outcome_word(v: &Verdict) -> &'static str {
    if v.is_refuted() {
        "refuted"
    } else {
        "consistent"
    }
}

/// Every theorem check on one instance and one sample set.
///
/// The level-set check uses `α = h(center of the sampling box)`; closures use
/// `3h`, `h + h`, `1·h + 2·h` and `exp(h)`.
pub fn theorem_suite(inst: &Instance, config: &CheckConfig) -> Result<Vec<TheoremReport>, CheckError> {
    theorem_suite_at(inst, config, None)
}

/// [`theorem_suite`] with an explicit level for the level-set check.
pub fn theorem_suite_at(
    inst: &Instance,
    config: &CheckConfig,
    alpha: Option<f64>,
) -> Result<Vec<TheoremReport>, CheckError> {
    config.validate()?;
    let h = inst
        .h
        .clone()
        .ok_or(CheckError::MissingObjective(ClassId::w(Family::Preinvex)))?;
    let pairs = sample_pairs(&inst.domain, config);
    let center: Vec<f64> = inst.domain.sampling_box.iter().map(Interval::center).collect();
    let alpha = alpha.unwrap_or_else(|| inst.h_at(&center));
    let phi = parse("exp(z1)", 1)?.with_name("exp");

    let mut out = vec![
        epigraph_on(inst, &pairs, config)?,
        level_set_on(inst, &pairs, alpha, config)?,
        argmin_on(inst, &pairs, config)?,
    ];
    let closures = [
        Closure::Scale { h: h.clone(), k: 3.0 },
        Closure::Sum {
            h1: h.clone(),
            h2: h.clone(),
        },
        Closure::WeightedSum {
            terms: vec![(h.clone(), 1.0), (h.clone(), 2.0)],
        },
        Closure::Compose { phi, h: h.clone() },
    ];
    for c in &closures {
        let construct = inst.with_h(c.build()?)?;
        out.push(closure_on(c, Family::Preinvex, &construct, &pairs, config)?);
    }
    out.push(pseudo_on(inst, &pairs, config)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_two_point;

    fn maps(w: &str) -> (FunctionDef, FunctionDef, FunctionDef) {
        (
            parse("z1", 1).unwrap().with_name("h"),
            parse_two_point("z1 - y1 - 6", 1).unwrap(),
            parse(w, 1).unwrap(),
        )
    }

    fn line(lo: f64, hi: f64) -> Domain {
        Domain::full_space(vec![Interval::new(lo, hi)]).unwrap()
    }

    #[test]
    fn epigraph_example_point() {
        let (h, eta, w) = maps("z1 - 7");
        let inst = Instance::new(Some(h.clone()), eta, w, line(-10.0, 10.0)).unwrap();
        let gen = inst.generated_point(crate::invexity::Mode::W, &[0.0], &[0.0], 0.5);
        assert_eq!(gen, vec![-6.5]);
        assert!(EpiPoint::new(&h, gen.clone(), 0.0, 1e-9).is_ok());
        assert!(EpiPoint::new(&h, gen, -7.0, 1e-9).is_err());
    }

    #[test]
    fn epigraph_minus7_supported() {
        let (h, eta, w) = maps("z1 - 7");
        let r = epigraph_check(&h, &eta, &w, &line(-10.0, 10.0), &CheckConfig::default()).unwrap();
        assert_eq!(r.status, TheoremStatus::Supported);
        let a = r.agreement.unwrap();
        assert_eq!(a.disagree, 0);
        assert!(a.agree >= 10_000);
    }

    #[test]
    fn epigraph_plus6_mismatches_follow_preinvex() {
        let (h, _, w) = maps("z1 + 6");
        let eta = parse_two_point("z1 - y1 + 6", 1).unwrap();
        let cfg = CheckConfig::default();
        let r = epigraph_check(&h, &eta, &w, &line(-10.0, 10.0), &cfg).unwrap();
        assert_eq!(r.status, TheoremStatus::RefutedHypothesis);
        assert_eq!(r.agreement.unwrap().disagree, 0);
        assert!(r.mismatch_count > 0);
        let inst = Instance::new(Some(h), eta, w, line(-10.0, 10.0)).unwrap();
        for m in r.mismatches.iter().filter(|m| m.kind == "outside-epigraph") {
            let (_, violated) = inst
                .evaluate(ClassId::w(Family::Preinvex), &m.z1, &m.z2, m.delta, &cfg)
                .unwrap();
            assert!(violated);
        }
    }

    #[test]
    fn constant_h_epigraph_holds() {
        let (_, eta, w) = maps("z1 - 7");
        let h = parse("2", 1).unwrap();
        let r = epigraph_check(&h, &eta, &w, &line(-10.0, 10.0), &CheckConfig::default()).unwrap();
        assert!(r.conclusion.consistent);
    }

    #[test]
    fn level_sets() {
        let (h, eta, w) = maps("z1 - 7");
        let cfg = CheckConfig::default();
        let r = level_set_check(&h, &eta, &w, &line(-10.0, 10.0), 0.0, &cfg).unwrap();
        assert_eq!(r.status, TheoremStatus::Supported);
        assert_eq!(r.agreement.unwrap().disagree, 0);
        assert!(!r.vacuous);
        let r = level_set_check(&h, &eta, &w, &line(-10.0, 10.0), -100.0, &cfg).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.status, TheoremStatus::Supported);
    }

    #[test]
    fn argmin_cluster() {
        let (h, eta, w) = maps("z1 - 7");
        let dom = Domain::boxed(vec![Interval::new(1.0, 10.0)]).unwrap();
        let r = argmin_set_check(&h, &eta, &w, &dom, &CheckConfig::default()).unwrap();
        let c = r.cluster.unwrap();
        assert_eq!((c.min_value, c.argmin.clone(), c.size), (1.0, vec![1.0], 1));
        assert_eq!(c.diameter, 0.0);

        let q = parse("z1^5", 1).unwrap();
        let dom = Domain::boxed(vec![Interval::new(-2.0, 2.0)]).unwrap();
        let r = argmin_set_check(&q, &eta, &w, &dom, &CheckConfig::default()).unwrap();
        let c = r.cluster.unwrap();
        assert_eq!((c.min_value, c.argmin), (-32.0, vec![-2.0]));
    }

    #[test]
    fn constructors() {
        let (h, _, _) = maps("z1");
        let k = scale(&h, 3.0).unwrap();
        assert_eq!(k.eval_scalar(&[2.0]).unwrap(), 6.0);
        assert!(scale(&h, 0.0).is_err());
        assert!(scale(&h, -1.0).is_err());
        let s = weighted_sum(&[(h.clone(), 1.0), (h.clone(), 2.0)]).unwrap();
        assert_eq!(s.eval_scalar(&[2.0]).unwrap(), 6.0);
        let e = compose(&parse("exp(z1)", 1).unwrap(), &sum(&h, &h).unwrap()).unwrap();
        assert_eq!(e.eval_scalar(&[0.5]).unwrap(), 1f64.exp());
        let two = parse("z1 + z2", 2).unwrap();
        assert!(sum(&h, &two).is_err());
    }

    #[test]
    fn suite_on_minus7() {
        let (h, eta, w) = maps("z1 - 7");
        let inst = Instance::new(Some(h), eta, w, line(-10.0, 10.0)).unwrap();
        let reports = theorem_suite(&inst, &CheckConfig::default()).unwrap();
        assert_eq!(reports.len(), 8);
        for r in &reports {
            assert!(!r.is_counterexample(), "{:?}", r.theorem);
        }
        let pseudo = reports.last().unwrap();
        assert_eq!(pseudo.status, TheoremStatus::Supported);
        assert!(!pseudo.side_checks[1].consistent, "as-written base refutes");
        for r in &reports[3..7] {
            assert!(r.conclusion.consistent, "{:?}", r.theorem);
            assert_eq!(r.agreement.unwrap().disagree, 0);
        }
    }

    #[test]
    fn compose_with_decreasing_phi_fails_hypothesis() {
        let (h, eta, w) = maps("z1 - 7");
        let c = Closure::Compose {
            phi: parse("-z1", 1).unwrap(),
            h,
        };
        let r = closure_check(
            &c,
            Family::Preinvex,
            &eta,
            &w,
            &line(-10.0, 10.0),
            &CheckConfig::default(),
        )
        .unwrap();
        assert_eq!(r.status, TheoremStatus::RefutedHypothesis);
    }

    #[test]
    fn quintic_quasi_composition() {
        let h = parse("z1^5", 1).unwrap();
        let eta = parse_two_point("z1 - y1 - 6", 1).unwrap();
        let w = parse("z1 - 6", 1).unwrap();
        let c = Closure::Compose {
            phi: parse("z1 + 1", 1).unwrap(),
            h,
        };
        let r = closure_check(
            &c,
            Family::Prequasi,
            &eta,
            &w,
            &line(-4000.0, 4000.0),
            &CheckConfig::default(),
        )
        .unwrap();
        assert!(r.conclusion.consistent);
        assert_eq!(r.status, TheoremStatus::Supported);
    }

    #[test]
    fn pseudo_implication_refuted_hypothesis_for_plus6() {
        let (h, _, w) = maps("z1 + 6");
        let eta = parse_two_point("z1 - y1 + 6", 1).unwrap();
        let r = pseudo_implication_check(&h, &eta, &w, &line(-10.0, 10.0), &CheckConfig::default()).unwrap();
        assert_eq!(r.status, TheoremStatus::RefutedHypothesis);
    }
}
