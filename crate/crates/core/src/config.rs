//! INI run configurations.
//!
//! ```ini
//! [run]
//! dim = 1
//!
//! [functions]
//! h = "z1"
//! eta = "z1 - y1 - 6"
//! w = "z1 - 7"
//!
//! [domain]
//! kind = full-space
//! sampling_box = "-10,10"
//!
//! [check]
//! seed = 0
//! eta_mode = as-written
//!
//! [problem]
//! h = "z1 + 5"
//! g1 = "1 - z1"
//! box = "-10,10"
//! ```
//!
//! Expression values are double-quoted and taken verbatim. Boxes are written
//! `lo,hi;lo,hi;...`, one interval per coordinate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ini::{Ini, ParseOption};
use thiserror::Error;

use crate::expr::{parse, parse_two_point, ExprError, FunctionDef};
use crate::invexity::{CheckError, ClassId, Instance};
use crate::optimize::OptProblem;
use crate::sampling::{CheckConfig, Domain, DomainError, DomainKind, EtaMode, Interval};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing `{key}` in [{section}]")]
    Missing { section: String, key: String },
    #[error("invalid `{key}` in [{section}]: {message}")]
    Invalid {
        section: String,
        key: String,
        message: String,
    },
    #[error("function `{name}`: {source}")]
    Function { name: String, source: ExprError },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

fn invalid(section: &str, key: &str, message: impl Into<String>) -> ConfigFileError {
    ConfigFileError::Invalid {
        section: section.into(),
        key: key.into(),
        message: message.into(),
    }
}

/// Parse `lo,hi;lo,hi;...`.
pub fn parse_box(text: &str) -> Result<Vec<Interval>, String> {
    text.split(';')
        .map(|part| {
            let (lo, hi) = part
                .split_once(',')
                .ok_or_else(|| format!("interval `{}` is not `lo,hi`", part.trim()))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{}` is not a number", s.trim()))
            };
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo < hi) {
                return Err(format!("interval `{}` is empty", part.trim()));
            }
            Ok(Interval::new(lo, hi))
        })
        .collect()
}

pub fn format_box(b: &[Interval]) -> String {
    b.iter()
        .map(|i| format!("{},{}", i.lo, i.hi))
        .collect::<Vec<_>>()
        .join(";")
}

fn format_list(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub h: String,
    pub constraints: Vec<String>,
    pub search_box: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    /// Catalog id when the file was exported from a fixture.
    pub fixture: Option<String>,
    pub h: Option<String>,
    pub eta: String,
    /// Identity when absent.
    pub w: Option<String>,
    pub domain: Domain,
    pub check: CheckConfig,
    /// Target of the `check` command.
    pub class: Option<ClassId>,
    /// Level for the level-set theorem.
    pub alpha: Option<f64>,
    pub problem: Option<ProblemSpec>,
    pub output: Option<String>,
}

/// Parsed maps of a configuration.
#[derive(Debug, Clone)]
pub struct Maps {
    pub h: Option<FunctionDef>,
    pub eta: FunctionDef,
    pub w: FunctionDef,
}

struct Sections {
    ini: Ini,
}

impl Sections {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key).map(str::trim)
    }

    fn require(&self, section: &str, key: &str) -> Result<&str, ConfigFileError> {
        self.get(section, key).ok_or_else(|| ConfigFileError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigFileError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|v| v.parse::<T>().map_err(|e| invalid(section, key, e.to_string())))
            .transpose()
    }

    fn boxed(&self, section: &str, key: &str) -> Result<Option<Vec<Interval>>, ConfigFileError> {
        self.get(section, key)
            .map(|v| parse_box(v).map_err(|e| invalid(section, key, e)))
            .transpose()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let opt = ParseOption {
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| ConfigFileError::Syntax(e.to_string()))?;
        let s = Sections { ini };

        let dim: usize = s.parsed("run", "dim")?.ok_or_else(|| ConfigFileError::Missing {
            section: "run".into(),
            key: "dim".into(),
        })?;
        if dim == 0 {
            return Err(invalid("run", "dim", "must be at least 1"));
        }

        let sampling_box = s.boxed("domain", "sampling_box")?;
        let kind = match s.get("domain", "kind").unwrap_or("full-space") {
            "full-space" => DomainKind::FullSpace,
            "box" => DomainKind::Box {
                bounds: s
                    .boxed("domain", "bounds")?
                    .ok_or_else(|| ConfigFileError::Missing {
                        section: "domain".into(),
                        key: "bounds".into(),
                    })?,
            },
            "half-lines" => {
                let lower = s
                    .require("domain", "lower")?
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid("domain", "lower", e.to_string()))?;
                DomainKind::HalfLines { lower }
            }
            other => return Err(invalid("domain", "kind", format!("unknown kind `{other}`"))),
        };
        let sampling_box = match (sampling_box, &kind) {
            (Some(b), _) => b,
            (None, DomainKind::Box { bounds }) => bounds.clone(),
            (None, _) => {
                return Err(ConfigFileError::Missing {
                    section: "domain".into(),
                    key: "sampling_box".into(),
                })
            }
        };
        let domain = Domain::new(kind, sampling_box)?;
        if domain.dim != dim {
            return Err(invalid(
                "domain",
                "sampling_box",
                format!("expected {dim} intervals"),
            ));
        }

        let mut check = CheckConfig::default();
        macro_rules! field {
            ($key:literal, $field:ident) => {
                if let Some(v) = s.parsed("check", $key)? {
                    check.$field = v;
                }
            };
        }
        field!("seed", seed);
        field!("pair_samples", pair_samples);
        field!("delta_points", delta_points);
        field!("delta_margin", delta_margin);
        field!("tol_weak", tol_weak);
        field!("tol_strict", tol_strict);
        field!("tol_membership", tol_membership);
        if let Some(m) = s.parsed::<EtaMode>("check", "eta_mode")? {
            check.eta_mode = m;
        }
        check
            .validate()
            .map_err(|e| invalid("check", "*", e.to_string()))?;

        let problem = match s.get("problem", "h") {
            None => None,
            Some(h) => {
                let constraints = (1..)
                    .map_while(|i| s.get("problem", &format!("g{i}")).map(str::to_string))
                    .collect();
                let search_box = s
                    .boxed("problem", "box")?
                    .unwrap_or_else(|| domain.sampling_box.clone());
                Some(ProblemSpec {
                    h: h.to_string(),
                    constraints,
                    search_box,
                })
            }
        };

        let cfg = RunConfig {
            dim,
            fixture: s.get("run", "fixture").map(str::to_string),
            h: s.get("functions", "h").map(str::to_string),
            eta: s.require("functions", "eta")?.to_string(),
            w: s.get("functions", "w").map(str::to_string),
            domain,
            check,
            class: s.parsed("check", "class")?,
            alpha: s.parsed("theorems", "alpha")?,
            problem,
            output: s.get("output", "path").map(str::to_string),
        };
        cfg.maps()?;
        if cfg.problem.is_some() {
            cfg.opt_problem()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigFileError::Syntax(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    fn function(&self, name: &str, text: &str) -> Result<FunctionDef, ConfigFileError> {
        let wrap = |source| ConfigFileError::Function {
            name: name.into(),
            source,
        };
        let f = if name == "eta" {
            parse_two_point(text, self.dim)
        } else {
            parse(text, self.dim)
        };
        Ok(f.map_err(wrap)?.with_name(name))
    }

    pub fn maps(&self) -> Result<Maps, ConfigFileError> {
        Ok(Maps {
            h: self.h.as_deref().map(|t| self.function("h", t)).transpose()?,
            eta: self.function("eta", &self.eta)?,
            w: match &self.w {
                Some(t) => self.function("w", t)?,
                None => FunctionDef::identity(self.dim).with_name("w"),
            },
        })
    }

    pub fn instance(&self) -> Result<Instance, ConfigFileError> {
        let m = self.maps()?;
        Ok(Instance::new(m.h, m.eta, m.w, self.domain.clone())?)
    }

    /// The `[problem]` section with this configuration's η and w.
    pub fn opt_problem(&self) -> Result<Option<OptProblem>, ConfigFileError> {
        let Some(p) = &self.problem else {
            return Ok(None);
        };
        let m = self.maps()?;
        let h = self.function("problem.h", &p.h)?;
        let gs = p
            .constraints
            .iter()
            .enumerate()
            .map(|(i, g)| self.function(&format!("g{}", i + 1), g))
            .collect::<Result<Vec<_>, _>>()?;
        let search = Domain::boxed(p.search_box.clone())?;
        Ok(Some(OptProblem::new(h, gs, m.eta, m.w, search)?))
    }

    /// Sections as key/value maps, in file order of keys; used as the report's config echo.
    pub fn sections(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut put = |sec: &str, key: &str, val: String| {
            out.entry(sec.into()).or_default().insert(key.into(), val);
        };
        put("run", "dim", self.dim.to_string());
        if let Some(f) = &self.fixture {
            put("run", "fixture", f.clone());
        }
        if let Some(h) = &self.h {
            put("functions", "h", h.clone());
        }
        put("functions", "eta", self.eta.clone());
        if let Some(w) = &self.w {
            put("functions", "w", w.clone());
        }
        match &self.domain.kind {
            DomainKind::FullSpace => put("domain", "kind", "full-space".into()),
            DomainKind::Box { bounds } => {
                put("domain", "kind", "box".into());
                put("domain", "bounds", format_box(bounds));
            }
            DomainKind::HalfLines { lower } => {
                put("domain", "kind", "half-lines".into());
                put("domain", "lower", format_list(lower));
            }
        }
        put("domain", "sampling_box", format_box(&self.domain.sampling_box));
        let c = &self.check;
        put("check", "seed", c.seed.to_string());
        put("check", "pair_samples", c.pair_samples.to_string());
        put("check", "delta_points", c.delta_points.to_string());
        put("check", "delta_margin", c.delta_margin.to_string());
        put("check", "tol_weak", c.tol_weak.to_string());
        put("check", "tol_strict", c.tol_strict.to_string());
        put("check", "tol_membership", c.tol_membership.to_string());
        put("check", "eta_mode", c.eta_mode.label().into());
        if let Some(class) = self.class {
            put("check", "class", class.label());
        }
        if let Some(a) = self.alpha {
            put("theorems", "alpha", a.to_string());
        }
        if let Some(p) = &self.problem {
            put("problem", "h", p.h.clone());
            for (i, g) in p.constraints.iter().enumerate() {
                put("problem", &format!("g{}", i + 1), g.clone());
            }
            put("problem", "box", format_box(&p.search_box));
        }
        if let Some(o) = &self.output {
            put("output", "path", o.clone());
        }
        out
    }

    /// Render as INI text; [`RunConfig::parse`] reads it back unchanged.
    pub fn to_ini(&self) -> String {
        const ORDER: [&str; 7] = [
            "run",
            "functions",
            "domain",
            "check",
            "theorems",
            "problem",
            "output",
        ];
        const QUOTED: [&str; 12] = [
            "h",
            "eta",
            "w",
            "g1",
            "g2",
            "g3",
            "g4",
            "g5",
            "bounds",
            "sampling_box",
            "box",
            "lower",
        ];
        let sections = self.sections();
        let mut text = String::new();
        for name in ORDER {
            let Some(kv) = sections.get(name) else { continue };
            if !text.is_empty() {
                text.push('\n');
            }
            writeln!(text, "[{name}]").unwrap();
            for (k, v) in kv {
                if QUOTED.contains(&k.as_str()) || k.starts_with('g') {
                    writeln!(text, "{k} = \"{v}\"").unwrap();
                } else {
                    writeln!(text, "{k} = {v}").unwrap();
                }
            }
        }
        text
    }
}
