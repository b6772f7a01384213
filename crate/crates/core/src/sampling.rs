//! Domains, deterministic sample generation and δ grids.
//!
//! Unbounded domains are only ever explored inside their sampling box, so every
//! verdict produced from these samples is relative to that box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain dimension must be positive")]
    ZeroDimension,
    #[error("expected {expected} bounds, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate interval [{lo}, {hi}] in coordinate {coord}")]
    Degenerate { coord: usize, lo: f64, hi: f64 },
    #[error("sampling box coordinate {coord} [{lo}, {hi}] leaves the domain")]
    BoxOutsideDomain { coord: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("pair_samples must be positive")]
    NoPairs,
    #[error("delta_points must be at least 2, got {0}")]
    DeltaPoints(usize),
    #[error("delta_margin must lie in [0, 0.5), got {0}")]
    DeltaMargin(f64),
    #[error("tolerance `{0}` must be finite and non-negative")]
    Tolerance(&'static str),
}

/// Per-coordinate closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    Box {
        bounds: Vec<Interval>,
    },
    /// Product of half-lines `[lower_i, inf)`.
    HalfLines {
        lower: Vec<f64>,
    },
    FullSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: DomainKind,
    pub sampling_box: Vec<Interval>,
}

impl Domain {
    /// A closed box that is also its own sampling box.
    pub fn boxed(bounds: Vec<Interval>) -> Result<Self, DomainError> {
        let sampling_box = bounds.clone();
        Self::new(DomainKind::Box { bounds }, sampling_box)
    }

    pub fn half_lines(lower: Vec<f64>, sampling_box: Vec<Interval>) -> Result<Self, DomainError> {
        Self::new(DomainKind::HalfLines { lower }, sampling_box)
    }

    pub fn full_space(sampling_box: Vec<Interval>) -> Result<Self, DomainError> {
        Self::new(DomainKind::FullSpace, sampling_box)
    }

    pub fn new(kind: DomainKind, sampling_box: Vec<Interval>) -> Result<Self, DomainError> {
        let dim = sampling_box.len();
        if dim == 0 {
            return Err(DomainError::ZeroDimension);
        }
        let kind_dim = match &kind {
            DomainKind::Box { bounds } => Some(bounds.len()),
            DomainKind::HalfLines { lower } => Some(lower.len()),
            DomainKind::FullSpace => None,
        };
        if let Some(k) = kind_dim {
            if k != dim {
                return Err(DomainError::DimensionMismatch {
                    expected: dim,
                    got: k,
                });
            }
        }
        if let DomainKind::Box { bounds } = &kind {
            for (coord, b) in bounds.iter().enumerate() {
                if !(b.lo < b.hi) {
                    return Err(DomainError::Degenerate {
                        coord,
                        lo: b.lo,
                        hi: b.hi,
                    });
                }
            }
        }
        let domain = Domain {
            dim,
            kind,
            sampling_box,
        };
        for (coord, b) in domain.sampling_box.iter().enumerate() {
            if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(DomainError::Degenerate {
                    coord,
                    lo: b.lo,
                    hi: b.hi,
                });
            }
            if domain.coord_excess(coord, b.lo) > 0.0 || domain.coord_excess(coord, b.hi) > 0.0 {
                return Err(DomainError::BoxOutsideDomain {
                    coord,
                    lo: b.lo,
                    hi: b.hi,
                });
            }
        }
        Ok(domain)
    }

    /// Same domain kind, different sampling box.
    pub fn with_sampling_box(&self, sampling_box: Vec<Interval>) -> Result<Self, DomainError> {
        Self::new(self.kind.clone(), sampling_box)
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, DomainKind::Box { .. })
    }

    pub fn center(&self) -> Vec<f64> {
        self.sampling_box.iter().map(Interval::center).collect()
    }

    fn coord_excess(&self, coord: usize, x: f64) -> f64 {
        if x.is_nan() {
            return f64::INFINITY;
        }
        match &self.kind {
            DomainKind::Box { bounds } => {
                let b = bounds[coord];
                (b.lo - x).max(x - b.hi).max(0.0)
            }
            DomainKind::HalfLines { lower } => (lower[coord] - x).max(0.0),
            DomainKind::FullSpace => {
                if x.is_finite() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Largest per-coordinate distance from `point` to the domain (0 inside).
    pub fn distance(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim, "point dimension");
        (0..self.dim)
            .map(|i| self.coord_excess(i, point[i]))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        self.distance(point) <= tol
    }

    pub fn in_sampling_box(&self, point: &[f64], tol: f64) -> bool {
        point
            .iter()
            .zip(&self.sampling_box)
            .all(|(x, b)| *x >= b.lo - tol && *x <= b.hi + tol)
    }
}

/// Where the pseudo-invexity check places its generated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMode {
    /// `z2 + δ·η(z1, w(z2))`
    AsWritten,
    /// `w(z2) + δ·η(z1, w(z2))`, the point used by every other class.
    WLifted,
}

impl EtaMode {
    pub fn label(self) -> &'static str {
        match self {
            EtaMode::AsWritten => "as-written",
            EtaMode::WLifted => "w-lifted",
        }
    }

    pub fn other(self) -> EtaMode {
        match self {
            EtaMode::AsWritten => EtaMode::WLifted,
            EtaMode::WLifted => EtaMode::AsWritten,
        }
    }
}

impl std::str::FromStr for EtaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as-written" => Ok(EtaMode::AsWritten),
            "w-lifted" => Ok(EtaMode::WLifted),
            _ => Err(format!(
                "unknown eta mode `{s}` (expected as-written or w-lifted)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub pair_samples: usize,
    pub delta_points: usize,
    /// Exclusion buffer at both ends of the open δ interval.
    pub delta_margin: f64,
    /// Slack for `<=` checks.
    pub tol_weak: f64,
    /// Required margin for `<` checks.
    pub tol_strict: f64,
    pub tol_membership: f64,
    pub seed: u64,
    pub eta_mode: EtaMode,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            pair_samples: 2000,
            delta_points: 33,
            delta_margin: 1e-3,
            tol_weak: 1e-9,
            tol_strict: 1e-12,
            tol_membership: 1e-9,
            seed: 0,
            eta_mode: EtaMode::AsWritten,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pair_samples == 0 {
            return Err(ConfigError::NoPairs);
        }
        if self.delta_points < 2 {
            return Err(ConfigError::DeltaPoints(self.delta_points));
        }
        if !(0.0..0.5).contains(&self.delta_margin) {
            return Err(ConfigError::DeltaMargin(self.delta_margin));
        }
        for (name, v) in [
            ("tol_weak", self.tol_weak),
            ("tol_strict", self.tol_strict),
            ("tol_membership", self.tol_membership),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Tolerance(name));
            }
        }
        Ok(())
    }

    pub fn with_eta_mode(&self, eta_mode: EtaMode) -> Self {
        CheckConfig {
            eta_mode,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaInterval {
    /// `[0, 1]`
    Closed,
    /// `(0, 1)`, approximated by `[margin, 1 - margin]`.
    Open,
}

pub fn delta_grid(config: &CheckConfig, interval: DeltaInterval) -> Vec<f64> {
    let k = config.delta_points.max(2);
    let (lo, hi) = match interval {
        DeltaInterval::Closed => (0.0, 1.0),
        DeltaInterval::Open => (config.delta_margin, 1.0 - config.delta_margin),
    };
    let last = (k - 1) as f64;
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == k - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / last
            }
        })
        .collect()
}

/// Corners of the sampling box in binary order (bit `i` set selects `hi` of coordinate `i`).
fn corners(domain: &Domain) -> Vec<Vec<f64>> {
    let n = domain.dim;
    (0..1usize << n)
        .map(|mask| {
            domain
                .sampling_box
                .iter()
                .enumerate()
                .map(|(i, b)| if mask >> i & 1 == 1 { b.hi } else { b.lo })
                .collect()
        })
        .collect()
}

/// Uniform point in the sampling box drawn from the stream `(seed, index)`.
pub fn random_point(domain: &Domain, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    draw(domain, &mut rng)
}

fn draw(domain: &Domain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    domain
        .sampling_box
        .iter()
        .map(|b| b.lo + b.width() * rng.random::<f64>())
        .collect()
}

/// Structured pairs first (corner diagonals, center diagonal, corner-to-corner,
/// center-to-corner), then seeded random pairs until `pair_samples` is reached.
///
/// Random pair `i` is drawn from its own generator stream, so any pair can be
/// regenerated in isolation.
pub fn sample_pairs(domain: &Domain, config: &CheckConfig) -> Vec<PointPair> {
    let total = config.pair_samples;
    let mut pairs = Vec::with_capacity(total);
    let center = domain.center();

    // The full corner diagonal only when it fits; otherwise it would crowd out
    // every other stratum.
    let corner_list = if domain.dim < usize::BITS as usize - 1 && (1usize << domain.dim) <= total {
        corners(domain)
    } else {
        Vec::new()
    };
    for c in &corner_list {
        pairs.push(PointPair {
            z1: c.clone(),
            z2: c.clone(),
        });
    }
    let structured_cap = (total / 2).max(pairs.len() + 1).min(total);
    let push = |pairs: &mut Vec<PointPair>, z1: &Vec<f64>, z2: &Vec<f64>| {
        if pairs.len() < structured_cap {
            pairs.push(PointPair {
                z1: z1.clone(),
                z2: z2.clone(),
            });
        }
    };
    push(&mut pairs, &center, &center);
    for (i, a) in corner_list.iter().enumerate() {
        for (j, b) in corner_list.iter().enumerate() {
            if i != j {
                push(&mut pairs, a, b);
            }
        }
    }
    for c in &corner_list {
        push(&mut pairs, &center, c);
        push(&mut pairs, c, &center);
    }

    let mut stream = 0u64;
    while pairs.len() < total {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        stream += 1;
        let z1 = draw(domain, &mut rng);
        let z2 = draw(domain, &mut rng);
        pairs.push(PointPair { z1, z2 });
    }
    pairs
}
