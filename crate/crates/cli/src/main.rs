use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use winvex_core::catalog::{find_fixture, list_fixtures, Fixture};
use winvex_core::config::{parse_box, RunConfig};
use winvex_core::invexity::{classify, ClassId, Family, Mode};
use winvex_core::optimize::{multistart_solve, verify_optimality_theorems, OptConfig, SolveStatus};
use winvex_core::report::{render_json, reverify_json, Report, Subject};
use winvex_core::sampling::{EtaMode, Interval};
use winvex_core::theorems::theorem_suite_at;

const EXIT_OK: u8 = 0;
const EXIT_REFUTED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "winvex",
    version,
    about = "Sample-based checks for generalized invexity classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// INI config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load a catalog fixture's config instead of a file.
    #[arg(long, conflicts_with = "config")]
    fixture: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampled point pairs.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "delta-points")]
    delta_points: Option<usize>,
    /// Sampling box, e.g. "-10,10;0,5".
    #[arg(long = "box", value_parser = parse_box_arg, allow_hyphen_values = true)]
    sampling_box: Option<SamplingBox>,
    #[arg(long = "eta-mode", value_parser = parse_eta_mode)]
    eta_mode: Option<EtaMode>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check one class.
    Check {
        #[arg(long, value_parser = parse_class)]
        class: Option<ClassId>,
        #[command(flatten)]
        common: Common,
    },
    /// Check every class on one shared sample set.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Check that the domain is invex under the configured maps.
    SetCheck {
        /// `w` uses the configured w; `classical` uses the identity.
        #[arg(long, default_value = "w", value_parser = parse_mode)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Run the theorem checks.
    Theorems {
        /// Level for the level-set check.
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the configured program and check the optimality theorems.
    Optimize {
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in fixtures.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Re-render a saved report.
    Report {
        path: PathBuf,
        /// Re-check every counterexample using only the report.
        #[arg(long)]
        reverify: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List {
        #[arg(long)]
        json: bool,
    },
    Run {
        ids: Vec<String>,
        #[arg(long, conflicts_with = "ids")]
        all: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write each fixture as a config file.
    Export {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

#[derive(Clone)]
struct SamplingBox(Vec<Interval>);

fn parse_box_arg(s: &str) -> Result<SamplingBox, String> {
    parse_box(s).map(SamplingBox)
}

fn parse_eta_mode(s: &str) -> Result<EtaMode, String> {
    s.parse::<EtaMode>().map_err(|e| e.to_string())
}

fn parse_class(s: &str) -> Result<ClassId, String> {
    s.parse::<ClassId>().map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "w" => Ok(Mode::W),
        "classical" => Ok(Mode::Classical),
        other => Err(format!("unknown mode `{other}` (expected w or classical)")),
    }
}

/// Failure with the exit code to report.
struct Failure(u8, String);

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, e.to_string())
}

type Outcome = Result<u8, Failure>;

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let mut rc = match (&self.config, &self.fixture) {
            (Some(path), _) => {
                RunConfig::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
            (None, Some(id)) => find_fixture(id).map_err(usage)?.to_run_config(),
            (None, None) => return Err(usage("one of --config or --fixture is required")),
        };
        self.apply(&mut rc)?;
        Ok(rc)
    }

    /// Flags override the config.
    fn apply(&self, rc: &mut RunConfig) -> Result<(), Failure> {
        if let Some(s) = self.seed {
            rc.check.seed = s;
        }
        if let Some(n) = self.samples {
            rc.check.pair_samples = n;
        }
        if let Some(n) = self.delta_points {
            rc.check.delta_points = n;
        }
        if let Some(m) = self.eta_mode {
            rc.check.eta_mode = m;
        }
        if let Some(b) = &self.sampling_box {
            rc.domain = rc.domain.with_sampling_box(b.0.clone()).map_err(usage)?;
        }
        rc.check.validate().map_err(usage)?;
        Ok(())
    }

    fn source(rc: &RunConfig) -> String {
        rc.fixture.clone().unwrap_or_else(|| "config".into())
    }

    fn emit(&self, report: &Report, rc_out: Option<&str>) -> Result<(), Failure> {
        let json = report.to_json();
        let out = self.out.clone().or_else(|| rc_out.map(PathBuf::from));
        if let Some(path) = out {
            fs::write(&path, &json).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
        if self.json {
            print!("{json}");
        } else {
            print!("{}", render_json(&json).map_err(usage)?);
        }
        Ok(())
    }
}

fn exit_for(refuted: bool) -> u8 {
    if refuted {
        EXIT_REFUTED
    } else {
        EXIT_OK
    }
}

fn new_report(command: &str, rc: &RunConfig) -> Report {
    let mut r = Report::new(command, rc.check.seed);
    r.echo(None, rc);
    r
}

fn cmd_check(class: Option<ClassId>, common: &Common) -> Outcome {
    let rc = common.load()?;
    let class = class.or(rc.class).unwrap_or_else(|| ClassId::w(Family::Preinvex));
    let inst = rc.instance().map_err(usage)?;
    let source = Common::source(&rc);
    let mut report = new_report("check", &rc);
    let refuted = if class.family == Family::PrePseudo {
        let (v, bounds) = inst.check_pre_pseudo(&rc.check).map_err(usage)?;
        if let Some(inf) = bounds.infimum {
            report
                .notes
                .push(format!("infimum of required b over qualifying pairs: {inf}"));
        }
        let r = v.is_refuted();
        report.add_verdict(&source, &Subject::of(&rc), v);
        r
    } else {
        let v = inst.check(class, &rc.check).map_err(usage)?;
        let r = v.is_refuted();
        report.add_verdict(&source, &Subject::of(&rc), v);
        r
    };
    add_fixture_note(&mut report, &rc);
    common.emit(&report, rc.output.as_deref())?;
    Ok(exit_for(refuted))
}

fn add_fixture_note(report: &mut Report, rc: &RunConfig) {
    if let Some(f) = rc.fixture.as_deref().and_then(|id| find_fixture(id).ok()) {
        if let Some(n) = f.discrepancy_note {
            report.notes.push(format!("{}: {n}", f.id));
        }
    }
}

fn cmd_classify(common: &Common) -> Outcome {
    let rc = common.load()?;
    let inst = rc.instance().map_err(usage)?;
    let cr = classify(&inst, &rc.check).map_err(usage)?;
    let source = Common::source(&rc);
    let subject = Subject::of(&rc);
    let mut report = new_report("classify", &rc);
    let refuted = cr.any_refuted();
    if cr.internal_error {
        report
            .notes
            .push("lattice inconsistency between class verdicts".into());
    }
    for e in cr.lattice.iter().filter(|e| !e.holds) {
        report
            .notes
            .push(format!("lattice edge {} => {} violated", e.stronger, e.weaker));
    }
    if let Some(inf) = cr.pseudo_bounds.as_ref().and_then(|b| b.infimum) {
        report
            .notes
            .push(format!("infimum of required b over qualifying pairs: {inf}"));
    }
    for v in cr.verdicts() {
        report.add_verdict(&source, &subject, v.clone());
    }
    add_fixture_note(&mut report, &rc);
    common.emit(&report, rc.output.as_deref())?;
    Ok(if cr.internal_error {
        EXIT_REFUTED
    } else {
        exit_for(refuted)
    })
}

fn cmd_set_check(mode: Mode, common: &Common) -> Outcome {
    let rc = common.load()?;
    let inst = rc.instance().map_err(usage)?;
    let class = match mode {
        Mode::W => ClassId::w(Family::SetInvex),
        Mode::Classical => ClassId::classical(Family::SetInvex),
    };
    let v = inst.check(class, &rc.check).map_err(usage)?;
    let refuted = v.is_refuted();
    let mut report = new_report("set-check", &rc);
    report.add_verdict(&Common::source(&rc), &Subject::of(&rc), v);
    common.emit(&report, rc.output.as_deref())?;
    Ok(exit_for(refuted))
}

fn cmd_theorems(alpha: Option<f64>, common: &Common) -> Outcome {
    let rc = common.load()?;
    let inst = rc.instance().map_err(usage)?;
    let reports = theorem_suite_at(&inst, &rc.check, alpha.or(rc.alpha)).map_err(usage)?;
    let source = Common::source(&rc);
    let mut report = new_report("theorems", &rc);
    let failed = reports.iter().any(|t| t.is_counterexample());
    for t in reports {
        report.add_theorem(&source, t);
    }
    common.emit(&report, rc.output.as_deref())?;
    Ok(exit_for(failed))
}

fn cmd_optimize(starts: usize, common: &Common) -> Outcome {
    let rc = common.load()?;
    let problem = rc
        .opt_problem()
        .map_err(usage)?
        .ok_or_else(|| usage("the config has no [problem] section"))?;
    let opt = OptConfig {
        starts,
        check: rc.check.clone(),
        ..OptConfig::default()
    };
    let solved = multistart_solve(&problem, &opt, starts).map_err(usage)?;
    let verified = verify_optimality_theorems(&problem, &opt).map_err(usage)?;
    let source = Common::source(&rc);
    let mut report = new_report("optimize", &rc);
    let failed = verified.is_counterexample() || solved.status == SolveStatus::Infeasible;
    report.add_solve(&source, solved);
    report.add_theorem(&source, verified);
    common.emit(&report, rc.output.as_deref())?;
    Ok(exit_for(failed))
}

fn cmd_catalog_run(ids: &[String], all: bool, common: &Common) -> Outcome {
    let fixtures: Vec<Fixture> = if all || ids.is_empty() {
        list_fixtures()
    } else {
        ids.iter()
            .map(|id| find_fixture(id).map_err(usage))
            .collect::<Result<_, _>>()?
    };
    let seed = common.seed.unwrap_or(fixtures.first().map_or(0, |f| f.seed));
    let command = if all || ids.is_empty() {
        "catalog run --all".to_string()
    } else {
        format!("catalog run {}", ids.join(" "))
    };
    let mut report = Report::new(command, seed);
    let mut mismatch = false;
    for f in &fixtures {
        let mut rc = f.to_run_config();
        common.apply(&mut rc)?;
        let run = f.run_with(&rc).map_err(usage)?;
        mismatch |= !run.all_match;
        report.echo(Some(&f.id), &rc);
        report.add_fixture(&Subject::of(&rc), run);
    }
    common.emit(&report, None)?;
    Ok(exit_for(mismatch))
}

fn cmd_catalog_list(json: bool) -> Outcome {
    let fixtures = list_fixtures();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&fixtures).expect("serializable")
        );
    } else {
        for f in fixtures {
            let w = f.w.as_deref().unwrap_or("identity");
            let h = f.h.as_deref().unwrap_or("-");
            let note = if f.discrepancy_note.is_some() {
                "  [discrepancy]"
            } else {
                ""
            };
            println!("{:<24} h = {h} | eta = {} | w = {w}{note}", f.id, f.eta);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_catalog_export(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    for (name, text) in winvex_core::catalog::export_configs() {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_report(path: &Path, reverify: bool, json: bool) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if !reverify {
        if json {
            print!("{text}");
        } else {
            print!("{}", render_json(&text).map_err(usage)?);
        }
        return Ok(EXIT_OK);
    }
    let results = reverify_json(&text).map_err(usage)?;
    let failed = results.iter().filter(|r| !r.ok).count();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&results).expect("serializable")
        );
    } else {
        for r in &results {
            let tag = if r.ok { "ok  " } else { "FAIL" };
            println!("{tag} #{} [{}] {} ({})", r.index, r.source, r.key, r.which);
        }
        println!(
            "{} of {} counterexamples re-verified",
            results.len() - failed,
            results.len()
        );
    }
    Ok(exit_for(failed > 0))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { class, common } => cmd_check(class, &common),
        Command::Classify { common } => cmd_classify(&common),
        Command::SetCheck { mode, common } => cmd_set_check(mode, &common),
        Command::Theorems { alpha, common } => cmd_theorems(alpha, &common),
        Command::Optimize { starts, common } => cmd_optimize(starts, &common),
        Command::Catalog { action } => match action {
            CatalogAction::List { json } => cmd_catalog_list(json),
            CatalogAction::Run { ids, all, common } => cmd_catalog_run(&ids, all, &common),
            CatalogAction::Export { dir } => cmd_catalog_export(&dir),
        },
        Command::Report { path, reverify, json } => cmd_report(&path, reverify, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("winvex: {msg}");
            ExitCode::from(code)
        }
    }
}
