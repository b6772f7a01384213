use rayon::prelude::*;

use super::shrink::shrink;
use super::{
    chord, step, ulp_tol, CheckError, ClassId, Counterexample, Family, Instance, Outcome, Relation, Verdict,
    VerdictKey,
};
use crate::expr::FunctionDef;
use crate::sampling::{delta_grid, sample_pairs, CheckConfig, DeltaInterval, Domain, PointPair};

/// Which pairs a check applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Restrict {
    All,
    /// `z1 != z2`
    Distinct,
    /// `h(z1) != h(z2)`
    DistinctValues,
}

/// A concrete inequality check: the class, plus the δ interval and pair
/// restriction it runs with (normally derived from the class).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Spec {
    pub class: ClassId,
    pub interval: DeltaInterval,
    pub restrict: Restrict,
}

impl Spec {
    pub fn of(class: ClassId) -> Spec {
        let restrict = match class.family {
            Family::StrictPreinvex | Family::StrictPrequasi => Restrict::Distinct,
            Family::SemistrictPrequasi => Restrict::DistinctValues,
            _ => Restrict::All,
        };
        Spec {
            class,
            interval: class.interval(),
            restrict,
        }
    }

    fn relation(&self, config: &CheckConfig) -> Relation {
        match self.class.family {
            Family::SetInvex => Relation::Member(config.tol_membership),
            _ if self.class.is_strict() => Relation::Lt(config.tol_strict),
            _ => Relation::Le(config.tol_weak),
        }
    }
}

pub(crate) enum SampleEval {
    NotApplicable,
    Skipped,
    Evaluated { record: Counterexample, violated: bool },
}

/// Per-pair values that do not depend on δ.
struct Prepared {
    base: Vec<f64>,
    eta: Vec<f64>,
    h1: f64,
    h2: f64,
}

impl Instance {
    fn prepare(&self, spec: &Spec, z1: &[f64], z2: &[f64]) -> Option<Prepared> {
        let (h1, h2) = if spec.class.family == Family::SetInvex {
            (0.0, 0.0)
        } else {
            (self.h_at(z1), self.h_at(z2))
        };
        match spec.restrict {
            Restrict::All => {}
            Restrict::Distinct if z1 != z2 => {}
            Restrict::DistinctValues if h1 != h2 => {}
            _ => return None,
        }
        let base = self.base(spec.class.mode, z2);
        let eta = self.eta_at(z1, &base);
        Some(Prepared { base, eta, h1, h2 })
    }

    fn eval_prepared(
        &self,
        spec: &Spec,
        prep: &Prepared,
        z1: &[f64],
        z2: &[f64],
        delta: f64,
        config: &CheckConfig,
    ) -> SampleEval {
        let generated_point = step(&prep.base, &prep.eta, delta);
        let relation = spec.relation(config);
        let (lhs, rhs) = if spec.class.family == Family::SetInvex {
            if generated_point.iter().any(|x| x.is_nan()) {
                return SampleEval::Skipped;
            }
            (self.domain.distance(&generated_point), 0.0)
        } else {
            let (h1, h2) = (prep.h1, prep.h2);
            let lhs = self.h_at(&generated_point);
            if lhs.is_nan() || h1.is_nan() || h2.is_nan() {
                return SampleEval::Skipped;
            }
            let rhs = match spec.class.family {
                Family::Preinvex | Family::StrictPreinvex => chord(h1, h2, delta),
                _ => h1.max(h2),
            };
            (lhs, rhs)
        };
        if rhs.is_nan() {
            return SampleEval::Skipped;
        }
        let violated = relation.is_violated(lhs, rhs);
        SampleEval::Evaluated {
            record: Counterexample {
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
        }
    }

    pub(crate) fn eval_spec(
        &self,
        spec: &Spec,
        z1: &[f64],
        z2: &[f64],
        delta: f64,
        config: &CheckConfig,
    ) -> SampleEval {
        match self.prepare(spec, z1, z2) {
            Some(prep) => self.eval_prepared(spec, &prep, z1, z2, delta, config),
            None => SampleEval::NotApplicable,
        }
    }

    /// Evaluate one sample of a class check; `Some((record, violated))` unless
    /// the pair is excluded by the class or a side is NaN.
    pub fn evaluate(
        &self,
        class: ClassId,
        z1: &[f64],
        z2: &[f64],
        delta: f64,
        config: &CheckConfig,
    ) -> Option<(Counterexample, bool)> {
        match self.eval_spec(&Spec::of(class), z1, z2, delta, config) {
            SampleEval::Evaluated { record, violated } => Some((record, violated)),
            _ => None,
        }
    }

    pub(crate) fn run_spec(&self, spec: Spec, pairs: &[PointPair], config: &CheckConfig) -> Verdict {
        struct Scan {
            checked: usize,
            skipped: usize,
            first: Option<Counterexample>,
        }
        let grid = delta_grid(config, spec.interval);
        let scans: Vec<Scan> = pairs
            .par_iter()
            .map(|p| {
                let mut scan = Scan {
                    checked: 0,
                    skipped: 0,
                    first: None,
                };
                let Some(prep) = self.prepare(&spec, &p.z1, &p.z2) else {
                    return scan;
                };
                for &d in &grid {
                    match self.eval_prepared(&spec, &prep, &p.z1, &p.z2, d, config) {
                        SampleEval::Evaluated { record, violated } => {
                            scan.checked += 1;
                            if violated && scan.first.is_none() {
                                scan.first = Some(record);
                            }
                        }
                        SampleEval::Skipped => scan.skipped += 1,
                        SampleEval::NotApplicable => {}
                    }
                }
                scan
            })
            .collect();

        let checked = scans.iter().map(|s| s.checked).sum();
        let skipped = scans.iter().map(|s| s.skipped).sum();
        let first = scans.into_iter().find_map(|s| s.first);
        let outcome = match first {
            None => Outcome::ConsistentOnSamples,
            Some(witness) => {
                let shrunk = shrink(&witness, &grid, &self.domain.sampling_box, |a, b, d| {
                    match self.eval_spec(&spec, a, b, d, config) {
                        SampleEval::Evaluated {
                            record,
                            violated: true,
                        } => Some(record),
                        _ => None,
                    }
                });
                Outcome::Refuted { witness, shrunk }
            }
        };
        Verdict {
            key: VerdictKey::class(spec.class),
            outcome,
            samples_checked: checked,
            samples_skipped: skipped,
            low_confidence: 2 * skipped > checked + skipped,
            sampling_box: self.domain.sampling_box.clone(),
            config: config.clone(),
        }
    }

    /// Run a class check on the given pairs.
    pub fn check_on(
        &self,
        class: ClassId,
        pairs: &[PointPair],
        config: &CheckConfig,
    ) -> Result<Verdict, CheckError> {
        config.validate()?;
        match class.family {
            Family::PrePseudo => return Err(CheckError::UnsupportedClass(class)),
            Family::SetInvex => {}
            _ => {
                self.objective(class)?;
            }
        }
        Ok(self.run_spec(Spec::of(class), pairs, config))
    }

    pub fn check(&self, class: ClassId, config: &CheckConfig) -> Result<Verdict, CheckError> {
        let pairs = sample_pairs(&self.domain, config);
        self.check_on(class, &pairs, config)
    }

    /// Recompute a counterexample from its stored `(z1, z2, δ)` and confirm it
    /// still violates with the same values.
    pub fn reverify(&self, key: VerdictKey, cx: &Counterexample, config: &CheckConfig) -> bool {
        let fresh = match key.eta_mode {
            Some(mode) => self.pseudo_sample(mode, &cx.z1, &cx.z2, cx.delta, config),
            None => match self.eval_spec(&Spec::of(key.class), &cx.z1, &cx.z2, cx.delta, config) {
                SampleEval::Evaluated {
                    record,
                    violated: true,
                } => Some(record),
                _ => None,
            },
        };
        let Some(fresh) = fresh else {
            return false;
        };
        let close = |a: f64, b: f64| (a - b).abs() <= ulp_tol(a.abs().max(b.abs()));
        close(fresh.lhs, cx.lhs)
            && close(fresh.rhs, cx.rhs)
            && close(fresh.violation, cx.violation)
            && fresh.generated_point.len() == cx.generated_point.len()
            && fresh
                .generated_point
                .iter()
                .zip(&cx.generated_point)
                .all(|(a, b)| close(*a, *b))
    }
}

/// Sampled check that `X` is (w-)invex: every generated point stays in `X`.
///
/// Classical mode ignores `w` and uses the identity.
pub fn check_set_invex(
    domain: &Domain,
    eta: &FunctionDef,
    w: &FunctionDef,
    mode: super::Mode,
    config: &CheckConfig,
) -> Result<Verdict, CheckError> {
    let inst = Instance::new(None, eta.clone(), w.clone(), domain.clone())?;
    inst.check(ClassId::new(Family::SetInvex, mode), config)
}

pub fn check_class(
    class: ClassId,
    h: &FunctionDef,
    eta: &FunctionDef,
    w: &FunctionDef,
    domain: &Domain,
    config: &CheckConfig,
) -> Result<Verdict, CheckError> {
    let inst = Instance::new(Some(h.clone()), eta.clone(), w.clone(), domain.clone())?;
    inst.check(class, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_two_point};
    use crate::invexity::Mode;
    use crate::sampling::Interval;

    fn line(lo: f64, hi: f64) -> Domain {
        Domain::full_space(vec![Interval::new(lo, hi)]).unwrap()
    }

    fn inst(h: &str, eta: &str, w: &str, domain: Domain) -> Instance {
        Instance::new(
            Some(parse(h, 1).unwrap()),
            parse_two_point(eta, 1).unwrap(),
            parse(w, 1).unwrap(),
            domain,
        )
        .unwrap()
    }

    #[test]
    fn halfline_set_is_w_invex_but_not_invex() {
        let dom = Domain::half_lines(vec![0.0], vec![Interval::new(0.0, 100.0)]).unwrap();
        let eta = parse_two_point("z1*(y1-2)", 1).unwrap();
        let w = parse("z1+2", 1).unwrap();
        let cfg = CheckConfig::default();
        let v = check_set_invex(&dom, &eta, &w, Mode::W, &cfg).unwrap();
        assert!(v.is_consistent());
        assert!(v.samples_checked >= 10_000);

        let v = check_set_invex(&dom, &eta, &w, Mode::Classical, &cfg).unwrap();
        let cx = v.witness().unwrap();
        // 0 + δ·z1·(0 - 2) leaves [0, inf) for any z1, δ > 0.
        assert_eq!(cx.z2, vec![0.0]);
        assert!(cx.generated_point[0] < 0.0);
        assert_eq!(cx.violation, -cx.generated_point[0]);
        // Hand-derived point: z1 = 1, z2 = 0, δ = 1 gives -2.
        let inst = Instance::new(None, eta, w, dom).unwrap();
        let (rec, violated) = inst
            .evaluate(ClassId::classical(Family::SetInvex), &[1.0], &[0.0], 1.0, &cfg)
            .unwrap();
        assert!(violated);
        assert_eq!(rec.generated_point, vec![-2.0]);
    }

    #[test]
    fn full_space_is_always_invex() {
        let dom = Domain::full_space(vec![Interval::new(-5.0, 5.0); 2]).unwrap();
        let eta = parse_two_point("z1^3 - y2; exp(z2) * y1", 2).unwrap();
        let w = parse("z2; -z1", 2).unwrap();
        let v = check_set_invex(&dom, &eta, &w, Mode::W, &CheckConfig::default()).unwrap();
        assert!(v.is_consistent());
    }

    #[test]
    fn minus7_point_values() {
        let i = inst("z1", "z1 - y1 - 6", "z1 - 7", line(-10.0, 10.0));
        let (rec, violated) = i
            .evaluate(
                ClassId::w(Family::Preinvex),
                &[2.0],
                &[3.0],
                0.5,
                &CheckConfig::default(),
            )
            .unwrap();
        assert!(!violated);
        assert_eq!(rec.generated_point, vec![-4.0]);
        assert_eq!((rec.lhs, rec.rhs), (-4.0, 2.5));
        let v = i
            .check(ClassId::w(Family::Preinvex), &CheckConfig::default())
            .unwrap();
        assert!(v.is_consistent());
    }

    #[test]
    fn plus6_refuted_with_constant_violation() {
        let i = inst("z1", "z1 - y1 + 6", "z1 + 6", line(-10.0, 10.0));
        let v = i
            .check(ClassId::w(Family::Preinvex), &CheckConfig::default())
            .unwrap();
        let s = v.shrunk().unwrap();
        assert_eq!((s.z1[0], s.z2[0], s.delta), (0.0, 0.0, 0.0));
        assert!((s.lhs - 6.0).abs() < 1e-12 && s.rhs == 0.0);
        assert!((s.violation - 6.0).abs() < 1e-9);
    }

    #[test]
    fn quintic_classes() {
        let dom = line(-4000.0, 4000.0);
        let i = inst("z1^5", "z1 - y1 - 6", "z1 - 6", dom);
        let cfg = CheckConfig::default();
        assert!(i
            .check(ClassId::w(Family::Prequasi), &cfg)
            .unwrap()
            .is_consistent());
        let v = i.check(ClassId::w(Family::Preinvex), &cfg).unwrap();
        assert!(v.witness().unwrap().violation >= 1e15);
        assert!(v.shrunk().unwrap().violation >= 1e15);
        // On a small box the violation stays modest.
        let small = i.with_domain(line(-10.0, 10.0)).unwrap();
        let v = small.check(ClassId::w(Family::Preinvex), &cfg).unwrap();
        assert!(v.witness().map_or(0.0, |c| c.violation) < 3e4);
        // A witness at moderate magnitude, evaluated directly.
        let (rec, violated) = i
            .evaluate(ClassId::w(Family::Preinvex), &[-2000.0], &[-1000.0], 0.5, &cfg)
            .unwrap();
        assert!(violated);
        assert_eq!(rec.generated_point, vec![-1506.0]);
        assert!(
            (rec.violation - 8.753155130272224e15).abs() < 1e3,
            "{}",
            rec.violation
        );
    }

    #[test]
    fn piecewise_prequasi() {
        let dom = Domain::half_lines(vec![0.0], vec![Interval::new(0.0, 100.0)]).unwrap();
        let i = inst("piecewise(z1<11, 11, -11)", "z1^2 + y1^2 + 11", "z1 + 11", dom);
        let cfg = CheckConfig::default();
        let (rec, _) = i
            .evaluate(ClassId::w(Family::Prequasi), &[3.0], &[5.0], 0.5, &cfg)
            .unwrap();
        assert_eq!(rec.generated_point, vec![154.0]);
        assert_eq!((rec.lhs, rec.rhs), (-11.0, 11.0));
        let v = i.check(ClassId::w(Family::Prequasi), &cfg).unwrap();
        assert!(v.is_consistent() && v.samples_checked >= 10_000);
    }

    #[test]
    fn constant_h_weak_hold_strict_fail() {
        let i = inst("3", "z1 - y1", "z1", line(-1.0, 1.0));
        let cfg = CheckConfig::default();
        for f in [Family::Preinvex, Family::Prequasi] {
            assert!(i.check(ClassId::w(f), &cfg).unwrap().is_consistent());
        }
        for f in [Family::StrictPreinvex, Family::StrictPrequasi] {
            let v = i.check(ClassId::w(f), &cfg).unwrap();
            let cx = v.witness().unwrap();
            assert_eq!(cx.lhs, cx.rhs);
            assert_ne!(cx.z1, cx.z2);
        }
        let semi = i.check(ClassId::w(Family::SemistrictPrequasi), &cfg).unwrap();
        assert!(semi.is_consistent() && semi.is_vacuous());
    }

    #[test]
    fn nan_samples_are_skipped_and_flagged() {
        let i = inst("ln(z1)", "z1 - y1", "z1", line(-10.0, 1.0));
        let v = i
            .check(ClassId::w(Family::Prequasi), &CheckConfig::default())
            .unwrap();
        assert!(v.samples_skipped > 0);
        assert!(v.low_confidence);
    }

    #[test]
    fn witnesses_reverify() {
        let i = inst("z1^5", "z1 - y1 - 6", "z1 - 6", line(-4000.0, 4000.0));
        let cfg = CheckConfig::default();
        let v = i.check(ClassId::w(Family::Preinvex), &cfg).unwrap();
        assert!(i.reverify(v.key, v.witness().unwrap(), &cfg));
        assert!(i.reverify(v.key, v.shrunk().unwrap(), &cfg));
        let mut bad = v.shrunk().unwrap().clone();
        bad.delta = 0.0;
        assert!(!i.reverify(v.key, &bad, &cfg));
    }

    #[test]
    fn pseudo_class_rejected_here() {
        let i = inst("z1", "z1 - y1", "z1", line(-1.0, 1.0));
        assert!(matches!(
            i.check(ClassId::w(Family::PrePseudo), &CheckConfig::default()),
            Err(CheckError::UnsupportedClass(_))
        ));
    }

    #[test]
    fn shape_errors() {
        let dom = line(-1.0, 1.0);
        let h2 = parse("z1 + z2", 2).unwrap();
        let eta = parse_two_point("z1 - y1", 1).unwrap();
        let w = parse("z1", 1).unwrap();
        assert!(matches!(
            check_class(
                ClassId::w(Family::Preinvex),
                &h2,
                &eta,
                &w,
                &dom,
                &CheckConfig::default()
            ),
            Err(CheckError::Shape { .. })
        ));
        let eta_one_point = parse("z1", 1).unwrap();
        assert!(Instance::new(None, eta_one_point, w, dom).is_err());
    }
}
