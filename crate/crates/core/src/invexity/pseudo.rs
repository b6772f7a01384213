//! The pre-pseudo-invex class and its `b` witness search.
//!
//! For a pair with `h(z1) < h(z2)` the class asks for some `b > 0` with
//! `h(g) <= h(z2) + δ(δ-1)·b` on the open δ interval. Since `δ(δ-1) < 0` there,
//! the largest admissible constant is
//! `min_δ (h(z2) - h(g)) / (δ(1-δ))`, and the pair refutes the class exactly
//! when that bound is not positive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shrink::shrink;
use super::{step, CheckError, Counterexample, Instance, Outcome, Relation, Verdict, VerdictKey};
use crate::expr::FunctionDef;
use crate::sampling::{
    delta_grid, sample_pairs, CheckConfig, DeltaInterval, Domain, EtaMode, Interval, PointPair,
};

/// `(bound, checked, skipped)` per pair; `bound` is `(required_b, delta)`,
/// `None` for pairs that do not qualify.
type PairScan = (Option<(f64, f64)>, usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub pair_index: usize,
    /// Supremum of admissible `b` for this pair on the δ grid.
    pub required_b: f64,
    /// δ attaining the minimum.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoWitnessReport {
    pub eta_mode: EtaMode,
    /// Pairs with `h(z1) < h(z2) - tol_strict`.
    pub qualifying_pairs: usize,
    /// Smallest per-pair bound; `None` when no pair qualifies.
    pub infimum: Option<f64>,
    pub pairs_with_no_positive_b: usize,
    #[serde(skip)]
    pub pair_bounds: Vec<PairBound>,
}

impl Instance {
    /// Generated point of the pseudo class: the η argument is always `w(z2)`,
    /// the base is `z2` or `w(z2)` depending on `mode`.
    fn pseudo_point(&self, mode: EtaMode, z1: &[f64], z2: &[f64], delta: f64) -> Vec<f64> {
        let wz2 = self.w.eval(z2).expect("validated arity");
        let eta = self.eta_at(z1, &wz2);
        match mode {
            EtaMode::AsWritten => step(z2, &eta, delta),
            EtaMode::WLifted => step(&wz2, &eta, delta),
        }
    }

    /// One pseudo sample; `None` when the pair does not qualify or values are NaN.
    pub(crate) fn pseudo_eval(
        &self,
        mode: EtaMode,
        z1: &[f64],
        z2: &[f64],
        delta: f64,
        config: &CheckConfig,
    ) -> Option<(Counterexample, bool)> {
        let h1 = self.h_at(z1);
        let h2 = self.h_at(z2);
        if !(h1 < h2 - config.tol_strict) {
            return None;
        }
        let generated_point = self.pseudo_point(mode, z1, z2, delta);
        let lhs = self.h_at(&generated_point);
        // The definitional bound with the smallest positive b we accept.
        let rhs = h2 - delta * (1.0 - delta) * config.tol_strict;
        if lhs.is_nan() || rhs.is_nan() {
            return None;
        }
        let relation = Relation::Lt(0.0);
        let violated = relation.is_violated(lhs, rhs);
        Some((
            Counterexample {
                z1: z1.to_vec(),
                z2: z2.to_vec(),
                delta,
                generated_point,
                lhs,
                rhs,
                violation: lhs - rhs,
                relation,
            },
            violated,
        ))
    }

    pub(crate) fn pseudo_sample(
        &self,
        mode: EtaMode,
        z1: &[f64],
        z2: &[f64],
        delta: f64,
        config: &CheckConfig,
    ) -> Option<Counterexample> {
        self.pseudo_eval(mode, z1, z2, delta, config)
            .and_then(|(cx, violated)| violated.then_some(cx))
    }

    /// `(min over the open grid of (h(z2) - h(g)) / (δ(1-δ)), argmin δ, NaN count)`,
    /// or `None` when every grid value is NaN.
    fn pair_bound(&self, mode: EtaMode, z1: &[f64], z2: &[f64], grid: &[f64]) -> (Option<(f64, f64)>, usize) {
        let h2 = self.h_at(z2);
        let mut best: Option<(f64, f64)> = None;
        let mut nan = 0;
        for &d in grid {
            let g = self.pseudo_point(mode, z1, z2, d);
            let b = (h2 - self.h_at(&g)) / (d * (1.0 - d));
            if b.is_nan() {
                nan += 1;
                continue;
            }
            if best.is_none_or(|(v, _)| b < v) {
                best = Some((b, d));
            }
        }
        (best, nan)
    }

    pub fn required_b(&self, z1: &[f64], z2: &[f64], config: &CheckConfig) -> Result<f64, CheckError> {
        let h1 = self.h_at(z1);
        let h2 = self.h_at(z2);
        if !(h1 < h2 - config.tol_strict) {
            return Err(CheckError::Precondition(format!(
                "required_b needs h(z1) < h(z2) - tol_strict, got h(z1) = {h1}, h(z2) = {h2}"
            )));
        }
        let grid = delta_grid(config, DeltaInterval::Open);
        Ok(self
            .pair_bound(config.eta_mode, z1, z2, &grid)
            .0
            .map_or(f64::NAN, |(b, _)| b))
    }

    pub fn check_pre_pseudo_on(
        &self,
        pairs: &[PointPair],
        config: &CheckConfig,
    ) -> Result<(Verdict, PseudoWitnessReport), CheckError> {
        config.validate()?;
        let key = VerdictKey::pseudo(config.eta_mode);
        self.objective(key.class)?;
        let mode = config.eta_mode;
        let grid = delta_grid(config, DeltaInterval::Open);
        let tol = config.tol_strict;

        let scans: Vec<PairScan> = pairs
            .par_iter()
            .map(|p| {
                let (h1, h2) = (self.h_at(&p.z1), self.h_at(&p.z2));
                if h1.is_nan() || h2.is_nan() {
                    return (None, 0, grid.len());
                }
                if !(h1 < h2 - tol) {
                    return (None, 0, 0);
                }
                let (best, nan) = self.pair_bound(mode, &p.z1, &p.z2, &grid);
                (best, grid.len() - nan, nan)
            })
            .collect();

        let mut report = PseudoWitnessReport {
            eta_mode: mode,
            qualifying_pairs: 0,
            infimum: None,
            pairs_with_no_positive_b: 0,
            pair_bounds: Vec::new(),
        };
        let mut checked = 0;
        let mut skipped = 0;
        let mut first: Option<(usize, f64)> = None;
        for (i, (bound, c, s)) in scans.into_iter().enumerate() {
            checked += c;
            skipped += s;
            let Some((b, d)) = bound else { continue };
            report.qualifying_pairs += 1;
            report.pair_bounds.push(PairBound {
                pair_index: i,
                required_b: b,
                delta: d,
            });
            if report.infimum.is_none_or(|inf| b < inf) {
                report.infimum = Some(b);
            }
            if b <= tol {
                report.pairs_with_no_positive_b += 1;
                if first.is_none() {
                    first = Some((i, d));
                }
            }
        }

        let outcome = match first {
            None => Outcome::ConsistentOnSamples,
            Some((i, d)) => {
                let p = &pairs[i];
                let witness = self
                    .pseudo_sample(mode, &p.z1, &p.z2, d, config)
                    .expect("bound <= tol_strict implies a violation at its δ");
                let shrunk = shrink(&witness, &grid, &self.domain.sampling_box, |a, b, d| {
                    self.pseudo_sample(mode, a, b, d, config)
                });
                Outcome::Refuted { witness, shrunk }
            }
        };
        let verdict = Verdict {
            key,
            outcome,
            samples_checked: checked,
            samples_skipped: skipped,
            low_confidence: 2 * skipped > checked + skipped,
            sampling_box: self.domain.sampling_box.clone(),
            config: config.clone(),
        };
        Ok((verdict, report))
    }

    pub fn check_pre_pseudo(
        &self,
        config: &CheckConfig,
    ) -> Result<(Verdict, PseudoWitnessReport), CheckError> {
        let pairs = sample_pairs(&self.domain, config);
        self.check_pre_pseudo_on(&pairs, config)
    }
}

/// Largest constant `b` admissible for the pair `(z1, z2)` on the open δ grid,
/// in `config.eta_mode`.
pub fn required_b(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    z1: &[f64],
    z2: &[f64],
    config: &CheckConfig,
) -> Result<f64, CheckError> {
    let n = z1.len();
    if n == 0 || z2.len() != n {
        return Err(CheckError::Precondition(
            "z1 and z2 must be non-empty and of equal length".into(),
        ));
    }
    let domain = Domain::full_space(vec![Interval::new(-1.0, 1.0); n]).expect("unit box is valid");
    let inst = Instance::new(Some(h.clone()), eta.clone(), w.clone(), domain)?;
    inst.required_b(z1, z2, config)
}

pub fn check_pre_pseudo(
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<(Verdict, PseudoWitnessReport), CheckError> {
    Instance::new(Some(h.clone()), eta.clone(), w.clone(), domain.clone())?.check_pre_pseudo(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_two_point};

    fn minus7() -> (FunctionDef, FunctionDef, FunctionDef) {
        (
            parse("z1", 1).unwrap(),
            parse_two_point("z1 - y1 - 6", 1).unwrap(),
            parse("z1 - 7", 1).unwrap(),
        )
    }

    fn cfg(mode: EtaMode) -> CheckConfig {
        CheckConfig::default().with_eta_mode(mode)
    }

    /// Independent closed form for the minus7 maps: w-lifted numerator is
    /// `7 - 0.5·δ` at (0, 0.5); the as-written one is `-0.5·δ`.
    fn oracle(mode: EtaMode, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&d| match mode {
                EtaMode::WLifted => (7.0 - 0.5 * d) / (d * (1.0 - d)),
                EtaMode::AsWritten => -0.5 / (1.0 - d),
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn required_b_matches_closed_form() {
        let (h, eta, w) = minus7();
        let grid = delta_grid(&CheckConfig::default(), DeltaInterval::Open);
        let lifted = required_b(&h, &eta, &w, &[0.0], &[0.5], &cfg(EtaMode::WLifted)).unwrap();
        assert!((lifted - oracle(EtaMode::WLifted, &grid)).abs() < 1e-9);
        assert!((lifted - 27.0).abs() < 0.1, "{lifted}");
        let written = required_b(&h, &eta, &w, &[0.0], &[0.5], &cfg(EtaMode::AsWritten)).unwrap();
        assert!((written - oracle(EtaMode::AsWritten, &grid)).abs() < 1e-9);
        assert!(written < 0.0);
    }

    #[test]
    fn required_b_precondition() {
        let (h, eta, w) = minus7();
        assert!(matches!(
            required_b(&h, &eta, &w, &[1.0], &[0.5], &CheckConfig::default()),
            Err(CheckError::Precondition(_))
        ));
    }

    #[test]
    fn minus7_pseudo_depends_on_base_point() {
        let (h, eta, w) = minus7();
        let dom = Domain::full_space(vec![Interval::new(-10.0, 10.0)]).unwrap();
        let (v, rep) = check_pre_pseudo(&h, &eta, &w, &dom, &cfg(EtaMode::WLifted)).unwrap();
        assert!(v.is_consistent());
        assert!(rep.infimum.unwrap() > 0.0);
        assert_eq!(rep.pairs_with_no_positive_b, 0);

        let (v, rep) = check_pre_pseudo(&h, &eta, &w, &dom, &cfg(EtaMode::AsWritten)).unwrap();
        let cx = v.witness().unwrap();
        let gap = cx.z2[0] - cx.z1[0];
        assert!(gap > 0.0 && gap <= 1.0, "gap {gap}");
        assert!(rep.pairs_with_no_positive_b > 0);
    }

    #[test]
    fn constant_h_is_vacuous() {
        let h = parse("4", 1).unwrap();
        let (_, eta, w) = minus7();
        let dom = Domain::full_space(vec![Interval::new(-10.0, 10.0)]).unwrap();
        let (v, rep) = check_pre_pseudo(&h, &eta, &w, &dom, &CheckConfig::default()).unwrap();
        assert!(v.is_consistent());
        assert_eq!(rep.qualifying_pairs, 0);
        assert_eq!(rep.infimum, None);
    }
}
