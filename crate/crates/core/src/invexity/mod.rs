//! Sampling checkers for the invexity class hierarchy.
//!
//! Every checker either refutes membership with a concrete witness or reports
//! that the defining inequality held on every sample. A consistent verdict is
//! never a proof: the definitions quantify over all of `X × X × [0, 1]`.
//!
//! All checks evaluate the generated point `base + δ·η(z1, base)` where
//! `base = w(z2)` in w-mode and `base = z2` in classical mode (identity `w`).

mod check;
mod classify;
mod pseudo;
mod shrink;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, FunctionDef};
use crate::sampling::{CheckConfig, ConfigError, DeltaInterval, Domain, EtaMode, Interval};

pub use check::{check_class, check_set_invex};
pub use classify::{classify, ClassReport, LatticeEdge};
pub use pseudo::{check_pre_pseudo, required_b, PairBound, PseudoWitnessReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("`{name}` must be {expected}")]
    Shape { name: String, expected: String },
    #[error("class {0} needs an objective function")]
    MissingObjective(ClassId),
    #[error("class {0} is not available in this operation")]
    UnsupportedClass(ClassId),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SetInvex,
    Preinvex,
    StrictPreinvex,
    Prequasi,
    StrictPrequasi,
    SemistrictPrequasi,
    PrePseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Identity `w`.
    Classical,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId {
    pub family: Family,
    pub mode: Mode,
}

impl ClassId {
    pub const fn new(family: Family, mode: Mode) -> Self {
        ClassId { family, mode }
    }

    pub const fn w(family: Family) -> Self {
        ClassId::new(family, Mode::W)
    }

    pub const fn classical(family: Family) -> Self {
        ClassId::new(family, Mode::Classical)
    }

    pub fn is_valid(&self) -> bool {
        !(self.family == Family::PrePseudo && self.mode == Mode::Classical)
    }

    /// Strict families compare with `<`, restrict the pairs, and use the open δ grid.
    pub fn is_strict(&self) -> bool {
        matches!(
            self.family,
            Family::StrictPreinvex | Family::StrictPrequasi | Family::SemistrictPrequasi
        )
    }

    pub fn interval(&self) -> DeltaInterval {
        if self.is_strict() || self.family == Family::PrePseudo {
            DeltaInterval::Open
        } else {
            DeltaInterval::Closed
        }
    }

    /// The function classes handled by [`check_class`], both modes.
    pub fn function_classes() -> Vec<ClassId> {
        let families = [
            Family::Preinvex,
            Family::StrictPreinvex,
            Family::Prequasi,
            Family::StrictPrequasi,
            Family::SemistrictPrequasi,
        ];
        [Mode::W, Mode::Classical]
            .into_iter()
            .flat_map(|m| families.into_iter().map(move |f| ClassId::new(f, m)))
            .collect()
    }

    pub fn label(&self) -> String {
        let base = match self.family {
            Family::SetInvex => "invex-set",
            Family::Preinvex => "preinvex",
            Family::StrictPreinvex => "strictly-preinvex",
            Family::Prequasi => "prequasi-invex",
            Family::StrictPrequasi => "strictly-prequasi-invex",
            Family::SemistrictPrequasi => "semistrictly-prequasi-invex",
            Family::PrePseudo => "pre-pseudo-invex",
        };
        match self.mode {
            Mode::W => format!("w-{base}"),
            Mode::Classical => base.to_string(),
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ClassId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mode, base) = match s.strip_prefix("w-") {
            Some(rest) => (Mode::W, rest),
            None => (Mode::Classical, s),
        };
        let family = match base {
            "invex-set" => Family::SetInvex,
            "preinvex" => Family::Preinvex,
            "strictly-preinvex" => Family::StrictPreinvex,
            "prequasi-invex" => Family::Prequasi,
            "strictly-prequasi-invex" => Family::StrictPrequasi,
            "semistrictly-prequasi-invex" => Family::SemistrictPrequasi,
            "pre-pseudo-invex" => Family::PrePseudo,
            _ => return Err(format!("unknown class `{s}`")),
        };
        let id = ClassId::new(family, mode);
        if !id.is_valid() {
            return Err(format!("class `{s}` exists only in w-mode"));
        }
        Ok(id)
    }
}

impl Serialize for ClassId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ClassId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Identifies one verdict: a class plus, for the pseudo class, where its
/// generated point is based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VerdictKey {
    pub class: ClassId,
    pub eta_mode: Option<EtaMode>,
}

impl VerdictKey {
    pub fn class(class: ClassId) -> Self {
        VerdictKey {
            class,
            eta_mode: None,
        }
    }

    pub fn pseudo(eta_mode: EtaMode) -> Self {
        VerdictKey {
            class: ClassId::w(Family::PrePseudo),
            eta_mode: Some(eta_mode),
        }
    }
}

impl fmt::Display for VerdictKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.eta_mode {
            Some(m) => write!(f, "{}@{}", self.class, m.label()),
            None => write!(f, "{}", self.class),
        }
    }
}

impl FromStr for VerdictKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('@') {
            Some((c, m)) => {
                let class: ClassId = c.parse()?;
                if class.family != Family::PrePseudo {
                    return Err(format!("eta mode only applies to the pseudo class: `{s}`"));
                }
                Ok(VerdictKey {
                    class,
                    eta_mode: Some(m.parse()?),
                })
            }
            None => Ok(VerdictKey::class(s.parse()?)),
        }
    }
}

impl Serialize for VerdictKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for VerdictKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How `lhs` and `rhs` of a counterexample were compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tol", rename_all = "kebab-case")]
pub enum Relation {
    /// Refuted when `lhs > rhs + tol`.
    Le(f64),
    /// Refuted when `lhs >= rhs - tol`.
    Lt(f64),
    /// Refuted when the distance `lhs` to the domain exceeds `tol`; `rhs` is 0.
    Member(f64),
}

impl Relation {
    pub fn is_violated(&self, lhs: f64, rhs: f64) -> bool {
        match *self {
            Relation::Le(tol) => lhs > rhs + tol,
            Relation::Lt(tol) => lhs >= rhs - tol,
            Relation::Member(tol) => lhs > tol,
        }
    }

    /// Distance past the refutation threshold (non-negative when violated).
    pub fn excess(&self, violation: f64) -> f64 {
        match *self {
            Relation::Le(tol) | Relation::Member(tol) => violation - tol,
            Relation::Lt(tol) => violation + tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub delta: f64,
    pub generated_point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; for set checks the distance of the generated point to the domain.
    pub violation: f64,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    Refuted {
        /// First violation in sample order.
        witness: Counterexample,
        /// `witness` after moving δ and the points toward simpler values.
        shrunk: Counterexample,
    },
    /// The inequality held on every evaluated sample. Not a proof.
    ConsistentOnSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub key: VerdictKey,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Evaluated (pair, δ) samples, excluding skipped ones.
    pub samples_checked: usize,
    /// Samples where either side evaluated to NaN.
    pub samples_skipped: usize,
    /// More than half of the attempted samples were skipped.
    pub low_confidence: bool,
    pub sampling_box: Vec<Interval>,
    pub config: CheckConfig,
}

impl Verdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self.outcome, Outcome::Refuted { .. })
    }

    pub fn is_consistent(&self) -> bool {
        !self.is_refuted()
    }

    pub fn witness(&self) -> Option<&Counterexample> {
        match &self.outcome {
            Outcome::Refuted { witness, .. } => Some(witness),
            Outcome::ConsistentOnSamples => None,
        }
    }

    pub fn shrunk(&self) -> Option<&Counterexample> {
        match &self.outcome {
            Outcome::Refuted { shrunk, .. } => Some(shrunk),
            Outcome::ConsistentOnSamples => None,
        }
    }

    /// No sample passed the class preconditions.
    pub fn is_vacuous(&self) -> bool {
        self.samples_checked == 0
    }
}

/// `(h, η, w, X)` after shape validation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub h: Option<FunctionDef>,
    pub eta: FunctionDef,
    pub w: FunctionDef,
    pub domain: Domain,
}

impl Instance {
    pub fn new(
        h: Option<FunctionDef>,
        eta: FunctionDef,
        w: FunctionDef,
        domain: Domain,
    ) -> Result<Self, CheckError> {
        let n = domain.dim;
        if !eta.two_point || eta.dim() != n || eta.outputs.len() != n {
            return Err(CheckError::Shape {
                name: "eta".into(),
                expected: format!("a two-point map R^{n} x R^{n} -> R^{n}"),
            });
        }
        if w.two_point || w.arity != n || w.outputs.len() != n {
            return Err(CheckError::Shape {
                name: "w".into(),
                expected: format!("a map R^{n} -> R^{n}"),
            });
        }
        if let Some(h) = &h {
            if h.two_point || h.arity != n || !h.is_scalar() {
                return Err(CheckError::Shape {
                    name: "h".into(),
                    expected: format!("a scalar function on R^{n}"),
                });
            }
        }
        Ok(Instance { h, eta, w, domain })
    }

    pub fn with_h(&self, h: FunctionDef) -> Result<Self, CheckError> {
        Instance::new(Some(h), self.eta.clone(), self.w.clone(), self.domain.clone())
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self, CheckError> {
        Instance::new(self.h.clone(), self.eta.clone(), self.w.clone(), domain)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub(crate) fn objective(&self, class: ClassId) -> Result<&FunctionDef, CheckError> {
        self.h.as_ref().ok_or(CheckError::MissingObjective(class))
    }

    /// `w(z)` in w-mode, `z` in classical mode.
    pub fn base(&self, mode: Mode, z: &[f64]) -> Vec<f64> {
        match mode {
            Mode::Classical => z.to_vec(),
            Mode::W => self.w.eval(z).expect("validated arity"),
        }
    }

    pub fn eta_at(&self, z1: &[f64], y: &[f64]) -> Vec<f64> {
        self.eta.eval_pair(z1, y).expect("validated arity")
    }

    /// `base(z2) + δ·η(z1, base(z2))`.
    pub fn generated_point(&self, mode: Mode, z1: &[f64], z2: &[f64], delta: f64) -> Vec<f64> {
        let base = self.base(mode, z2);
        let eta = self.eta_at(z1, &base);
        step(&base, &eta, delta)
    }

    pub fn h_at(&self, z: &[f64]) -> f64 {
        self.h
            .as_ref()
            .expect("objective present")
            .eval_scalar(z)
            .expect("validated arity")
    }
}

pub(crate) fn step(base: &[f64], direction: &[f64], delta: f64) -> Vec<f64> {
    base.iter().zip(direction).map(|(b, d)| b + delta * d).collect()
}

/// `δ·a + (1-δ)·b`, clamped to `[min(a, b), max(a, b)]`.
///
/// The exact value lies in that range; clamping removes roundoff that would
/// otherwise break the pointwise lattice between classes.
pub fn chord(a: f64, b: f64, delta: f64) -> f64 {
    (delta * a + (1.0 - delta) * b).clamp(a.min(b), a.max(b))
}

/// Absolute agreement bound for recomputed values of magnitude `scale`.
pub(crate) fn ulp_tol(scale: f64) -> f64 {
    8.0 * f64::EPSILON * scale.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for id in ClassId::function_classes() {
            assert_eq!(id.label().parse::<ClassId>().unwrap(), id);
        }
        assert_eq!(
            "w-invex-set".parse::<ClassId>().unwrap(),
            ClassId::w(Family::SetInvex)
        );
        assert!("pre-pseudo-invex".parse::<ClassId>().is_err());
        let key = VerdictKey::pseudo(EtaMode::WLifted);
        assert_eq!(key.to_string(), "w-pre-pseudo-invex@w-lifted");
        assert_eq!(key.to_string().parse::<VerdictKey>().unwrap(), key);
        assert!("w-preinvex@w-lifted".parse::<VerdictKey>().is_err());
    }

    #[test]
    fn relations() {
        assert!(Relation::Le(1e-9).is_violated(1.0, 0.0));
        assert!(!Relation::Le(1e-9).is_violated(1e-10, 0.0));
        assert!(Relation::Lt(1e-12).is_violated(1.0, 1.0));
        assert!(!Relation::Lt(1e-12).is_violated(0.0, 1.0));
        assert!(Relation::Member(1e-9).is_violated(2.0, 0.0));
    }
}
