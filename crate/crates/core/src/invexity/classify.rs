use serde::{Deserialize, Serialize};

use super::check::{Restrict, Spec};
use super::{CheckError, ClassId, Family, Instance, Mode, PseudoWitnessReport, Verdict, VerdictKey};
use crate::sampling::{sample_pairs, CheckConfig, DeltaInterval};

/// One implication of the class lattice, evaluated on shared samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeEdge {
    pub stronger: String,
    pub weaker: String,
    pub stronger_consistent: bool,
    pub weaker_consistent: bool,
    /// False when the stronger class held on the samples but the weaker did not.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Set checks, w-mode then classical.
    pub set_verdicts: Vec<Verdict>,
    /// Function-class verdicts; empty when no objective was given.
    pub class_verdicts: Vec<Verdict>,
    pub pseudo: Option<Verdict>,
    pub pseudo_bounds: Option<PseudoWitnessReport>,
    pub lattice: Vec<LatticeEdge>,
    /// Some lattice edge failed on the samples, which points to a checker bug.
    pub internal_error: bool,
}

impl ClassReport {
    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.set_verdicts
            .iter()
            .chain(&self.class_verdicts)
            .chain(&self.pseudo)
    }

    pub fn get(&self, key: VerdictKey) -> Option<&Verdict> {
        self.verdicts().find(|v| v.key == key)
    }

    pub fn class(&self, class: ClassId) -> Option<&Verdict> {
        self.get(VerdictKey::class(class))
    }

    pub fn any_refuted(&self) -> bool {
        self.verdicts().any(Verdict::is_refuted)
    }
}

/// Run every applicable check on one shared set of sample pairs.
///
/// The pseudo class runs only in `config.eta_mode`.
pub fn classify(instance: &Instance, config: &CheckConfig) -> Result<ClassReport, CheckError> {
    config.validate()?;
    let pairs = sample_pairs(&instance.domain, config);
    let set_verdicts = [Mode::W, Mode::Classical]
        .into_iter()
        .map(|m| instance.check_on(ClassId::new(Family::SetInvex, m), &pairs, config))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = ClassReport {
        set_verdicts,
        class_verdicts: Vec::new(),
        pseudo: None,
        pseudo_bounds: None,
        lattice: Vec::new(),
        internal_error: false,
    };
    if instance.h.is_none() {
        return Ok(report);
    }

    report.class_verdicts = ClassId::function_classes()
        .into_iter()
        .map(|c| instance.check_on(c, &pairs, config))
        .collect::<Result<Vec<_>, _>>()?;
    let (pv, bounds) = instance.check_pre_pseudo_on(&pairs, config)?;
    report.pseudo = Some(pv);
    report.pseudo_bounds = Some(bounds);

    for mode in [Mode::W, Mode::Classical] {
        let id = |f| ClassId::new(f, mode);
        let consistent = |f| report.class(id(f)).is_some_and(Verdict::is_consistent);
        let edge = |s: Family, w: Family| LatticeEdge {
            stronger: id(s).label(),
            weaker: id(w).label(),
            stronger_consistent: consistent(s),
            weaker_consistent: consistent(w),
            holds: !consistent(s) || consistent(w),
        };
        let mut edges = vec![
            edge(Family::Preinvex, Family::Prequasi),
            edge(Family::StrictPreinvex, Family::StrictPrequasi),
            edge(Family::StrictPrequasi, Family::SemistrictPrequasi),
        ];
        // Strict preinvexity only constrains distinct pairs on the open grid,
        // so compare it with preinvexity restricted the same way.
        let restricted = instance.run_spec(
            Spec {
                class: id(Family::Preinvex),
                interval: DeltaInterval::Open,
                restrict: Restrict::Distinct,
            },
            &pairs,
            config,
        );
        let s = consistent(Family::StrictPreinvex);
        edges.push(LatticeEdge {
            stronger: id(Family::StrictPreinvex).label(),
            weaker: format!("{} (open grid, distinct pairs)", id(Family::Preinvex).label()),
            stronger_consistent: s,
            weaker_consistent: restricted.is_consistent(),
            holds: !s || restricted.is_consistent(),
        });
        report.lattice.extend(edges);
    }
    report.internal_error = report.lattice.iter().any(|e| !e.holds);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_two_point};
    use crate::sampling::{Domain, EtaMode, Interval};

    #[test]
    fn minus7_report() {
        let dom = Domain::full_space(vec![Interval::new(-10.0, 10.0)]).unwrap();
        let inst = Instance::new(
            Some(parse("z1", 1).unwrap()),
            parse_two_point("z1 - y1 - 6", 1).unwrap(),
            parse("z1 - 7", 1).unwrap(),
            dom,
        )
        .unwrap();
        let cfg = CheckConfig::default().with_eta_mode(EtaMode::WLifted);
        let r = classify(&inst, &cfg).unwrap();
        assert_eq!(r.set_verdicts.len(), 2);
        assert_eq!(r.class_verdicts.len(), 10);
        assert!(!r.internal_error);
        assert!(
            !r.any_refuted(),
            "{:?}",
            r.verdicts()
                .filter(|v| v.is_refuted())
                .map(|v| v.key)
                .collect::<Vec<_>>()
        );
        assert_eq!(r.lattice.len(), 8);
        assert!(r.get(VerdictKey::pseudo(EtaMode::WLifted)).is_some());
    }

    #[test]
    fn no_objective_only_sets() {
        let dom = Domain::half_lines(vec![0.0], vec![Interval::new(0.0, 100.0)]).unwrap();
        let inst = Instance::new(
            None,
            parse_two_point("z1 * (y1 - 2)", 1).unwrap(),
            parse("z1 + 2", 1).unwrap(),
            dom,
        )
        .unwrap();
        let r = classify(&inst, &CheckConfig::default()).unwrap();
        assert!(r.class_verdicts.is_empty() && r.pseudo.is_none());
        assert!(r.set_verdicts[0].is_consistent());
        assert!(r.set_verdicts[1].is_refuted());
    }
}
