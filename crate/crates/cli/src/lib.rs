//! Argument parsing and command dispatch for the `laguerre` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use laguerre::autgroup::verify_axioms;
use laguerre::{Axiom, Budget, Circle, DeltaGroup, Fe, GroupSpace, Pencil, Plane, Point, Report, Status, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "laguerre",
    version,
    about = "Finite Laguerre planes, pencil groups and their skewaffine spaces"
)]
pub struct Cli {
    /// Print reports as a JSON array.
    #[arg(long, global = true)]
    pub json: bool,
    /// Record wall-clock time per report in `elapsed_ms` (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Laguerre plane axioms.
    Plane {
        #[command(subcommand)]
        action: PlaneAction,
    },
    /// Axioms A1-A3 for a pencil and its group.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Axioms of the group space of the canonical pencil.
    Skewaffine {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// The statement catalog.
    Theorems {
        #[command(subcommand)]
        action: TheoremAction,
    },
    /// Write a structure as JSON.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
pub enum PlaneAction {
    Verify(QArgs),
}

#[derive(Debug, Subcommand)]
pub enum GroupAction {
    Verify {
        #[command(flatten)]
        q: QArgs,
        /// `canonical`, `p:x,y` or `ideal:a@K:a,b,c`; an optional `@K:a,b,c`
        /// suffix picks the circle for `p:x,y` (default `(0,0,y)`).
        #[arg(long, default_value = "canonical")]
        pencil: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpaceAction {
    /// T, Des and Pap default to `sample:1e6` for q > 5, everything else is exhaustive.
    Verify {
        #[command(flatten)]
        q: QArgs,
        /// Axiom name (L1, L2, P1, P2, T, V, Pgm, Des, Pap) or `all`.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        axiom: Vec<String>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum TheoremAction {
    /// Every check is exhaustive; `--budget` applies to the T4.2 sweep.
    Run {
        #[command(flatten)]
        q: QArgs,
        /// Catalog id (e.g. P2.1) or `all`.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        id: Vec<String>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// List the catalog.
    List,
}

#[derive(Debug, Args)]
pub struct QArgs {
    /// Field order; a comma-separated list runs each.
    #[arg(long = "q", required = true, value_delimiter = ',')]
    pub q: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// `exhaustive` or `sample:K` (K may be written 1e6).
    #[arg(long)]
    pub budget: Option<String>,
    /// Seed for sampled budgets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum What {
    Plane,
    Group,
    Space,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long = "q")]
    pub q: u32,
    #[arg(long, value_enum)]
    pub what: What,
    #[arg(long)]
    pub out: PathBuf,
}

/// A configuration problem: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

/// Parses `canonical`, `p:x,y[@K:a,b,c]` or `ideal:a[@K:a,b,c]`.
pub fn parse_pencil(s: &str) -> Result<Pencil, UsageError> {
    if s == "canonical" {
        return Ok(Pencil::canonical());
    }
    let (head, circle) = match s.split_once("@K:") {
        Some((h, k)) => (h, Some(k)),
        None => (s, None),
    };
    let nums = |t: &str, n: usize| -> Result<Vec<u32>, UsageError> {
        let v: Vec<u32> = t
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| UsageError(format!("bad numbers {t:?} in pencil {s:?}")))?;
        if v.len() != n {
            return Err(UsageError(format!("expected {n} numbers in {t:?}")));
        }
        Ok(v)
    };
    let (point, default) = if let Some(xy) = head.strip_prefix("p:") {
        let v = nums(xy, 2)?;
        (Point::affine(v[0], v[1]), Circle::new(0, 0, v[1]))
    } else if let Some(a) = head.strip_prefix("ideal:") {
        let v = nums(a, 1)?;
        (Point::ideal(v[0]), Circle::new(v[0], 0, 0))
    } else {
        return Err(UsageError(format!("unknown pencil {s:?}")));
    };
    let circle = match circle {
        Some(k) => {
            let v = nums(k, 3)?;
            Circle::new(v[0], v[1], v[2])
        }
        None => default,
    };
    Ok(Pencil { point, circle })
}

fn budget_for(args: &BudgetArgs, fallback: Budget) -> Result<Budget, UsageError> {
    Ok(match &args.budget {
        Some(s) => Budget::parse(s, args.seed)?,
        None => match fallback {
            Budget::Sample { cases, .. } => Budget::Sample { cases, seed: args.seed },
            b => b,
        },
    })
}

fn timed(timing: bool, f: impl FnOnce() -> Report) -> Report {
    let start = Instant::now();
    let mut r = f();
    r.elapsed_ms = timing.then(|| start.elapsed().as_millis() as u64);
    r
}

fn plane_reports(qs: &[u32], timing: bool) -> Result<Vec<Report>, UsageError> {
    let planes: Vec<Plane> = qs.iter().map(|&q| Plane::new(q)).collect::<Result<_, _>>()?;
    Ok(planes.par_iter().map(|p| timed(timing, || p.verify_axioms())).collect())
}

fn group_reports(qs: &[u32], pencil: &str, timing: bool) -> Result<Vec<Report>, UsageError> {
    let mut out = Vec::new();
    for &q in qs {
        let plane = Plane::new(q)?;
        let pencil = parse_pencil(pencil)?;
        let inside = |p: Point| plane.contains_point(p);
        let circle_ok = [pencil.circle.a, pencil.circle.b, pencil.circle.c]
            .iter()
            .all(|&Fe(v)| v < q);
        if !inside(pencil.point) || !circle_ok || !plane.incident(pencil.point, pencil.circle) {
            return Err(UsageError(format!(
                "pencil point {} must lie on {} in GF({q})",
                pencil.point, pencil.circle
            )));
        }
        let group = DeltaGroup::build(&plane, &pencil).ok();
        let start = Instant::now();
        let mut reports = verify_axioms(&plane, &pencil, group.as_ref());
        if timing {
            let ms = start.elapsed().as_millis() as u64;
            reports.iter_mut().for_each(|r| r.elapsed_ms = Some(ms));
        }
        out.extend(reports);
    }
    Ok(out)
}

fn parse_axioms(names: &[String]) -> Result<Vec<Axiom>, UsageError> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(Axiom::ALL.to_vec());
    }
    let mut v: Vec<Axiom> = names.iter().map(|n| n.parse::<Axiom>()).collect::<Result<_, _>>()?;
    v.sort_by_key(|a| Axiom::ALL.iter().position(|b| b == a));
    v.dedup();
    Ok(v)
}

fn space_reports(qs: &[u32], axioms: &[String], budget: &BudgetArgs, timing: bool) -> Result<Vec<Report>, UsageError> {
    let axioms = parse_axioms(axioms)?;
    let mut spaces = Vec::new();
    for &q in qs {
        let plane = Plane::new(q)?;
        let group = DeltaGroup::canonical(&plane)?;
        spaces.push(GroupSpace::build(&plane, &group)?);
    }
    let mut jobs = Vec::new();
    for &a in &axioms {
        for (i, &q) in qs.iter().enumerate() {
            jobs.push((a, i, budget_for(budget, Budget::default_for(a, q))?));
        }
    }
    Ok(jobs
        .par_iter()
        .map(|&(a, i, b)| timed(timing, || spaces[i].check_axiom(a, b)))
        .collect())
}

fn parse_ids(names: &[String]) -> Result<Vec<laguerre::CheckId>, UsageError> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(laguerre::CheckId::ALL.to_vec());
    }
    let mut v: Vec<laguerre::CheckId> = names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?;
    v.sort();
    v.dedup();
    Ok(v)
}

fn theorem_reports(qs: &[u32], ids: &[String], budget: &BudgetArgs, timing: bool) -> Result<Vec<Report>, UsageError> {
    let ids = parse_ids(ids)?;
    let budget = budget_for(budget, Budget::Exhaustive)?;
    let suites: Vec<Suite> = qs.par_iter().map(|&q| Suite::new(q)).collect::<Result<_, _>>()?;
    let jobs: Vec<(laguerre::CheckId, usize)> =
        ids.iter().flat_map(|&id| (0..qs.len()).map(move |i| (id, i))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(id, i)| timed(timing, || suites[i].check(id, budget)))
        .collect())
}

fn export(args: &ExportArgs) -> Result<String, UsageError> {
    let plane = Plane::new(args.q)?;
    let json = match args.what {
        What::Plane => serde_json::to_string_pretty(&plane.export())?,
        What::Group => serde_json::to_string_pretty(&DeltaGroup::canonical(&plane)?.export())?,
        What::Space => {
            let group = DeltaGroup::canonical(&plane)?;
            serde_json::to_string_pretty(&GroupSpace::build(&plane, &group)?.export())?
        }
    };
    fs::write(&args.out, json + "\n")?;
    Ok(format!("wrote {}", args.out.display()))
}

fn print_reports(out: &mut dyn Write, reports: &[Report], json: bool) -> std::io::Result<()> {
    if json {
        serde_json::to_writer_pretty(&mut *out, reports)?;
        return writeln!(out);
    }
    for r in reports {
        writeln!(out, "{r}")?;
    }
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    writeln!(
        out,
        "{} reports: {} pass, {} fail, {} report_only, {} error",
        reports.len(),
        count(Status::Pass),
        count(Status::Fail),
        count(Status::ReportOnly),
        count(Status::Error)
    )
}

/// Exit code for a batch of reports.
pub fn exit_code(reports: &[Report]) -> i32 {
    if reports.iter().all(|r| r.status.is_ok()) {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

/// Runs a parsed command, writing to `out` and `err`; returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let reports = match &cli.command {
        Command::Plane {
            action: PlaneAction::Verify(q),
        } => plane_reports(&q.q, cli.timing),
        Command::Group {
            action: GroupAction::Verify { q, pencil },
        } => group_reports(&q.q, pencil, cli.timing),
        Command::Skewaffine {
            action: SpaceAction::Verify { q, axiom, budget },
        } => space_reports(&q.q, axiom, budget, cli.timing),
        Command::Theorems {
            action: TheoremAction::Run { q, id, budget },
        } => theorem_reports(&q.q, id, budget, cli.timing),
        Command::Theorems {
            action: TheoremAction::List,
        } => {
            for &id in laguerre::CheckId::ALL {
                let _ = writeln!(out, "{:<5} {}", id.as_str(), id.summary());
            }
            return EXIT_OK;
        }
        Command::Export(args) => match export(args) {
            Ok(msg) => {
                let _ = writeln!(out, "{msg}");
                return EXIT_OK;
            }
            Err(e) => Err(e),
        },
    };
    match reports {
        Ok(reports) => {
            if let Err(e) = print_reports(out, &reports, cli.json) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            exit_code(&reports)
        }
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

/// Parses `argv` (program name first) and runs it.
pub fn cli_run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_syntax() {
        assert_eq!(parse_pencil("canonical").unwrap(), Pencil::canonical());
        let p = parse_pencil("p:1,2").unwrap();
        assert_eq!((p.point, p.circle), (Point::affine(1, 2), Circle::new(0, 0, 2)));
        let p = parse_pencil("ideal:3@K:3,1,4").unwrap();
        assert_eq!((p.point, p.circle), (Point::ideal(3), Circle::new(3, 1, 4)));
        assert!(parse_pencil("p:1").is_err());
        assert!(parse_pencil("line:1,2").is_err());
    }

    #[test]
    fn budget_override_keeps_seed() {
        let args = BudgetArgs { budget: None, seed: 9 };
        let b = budget_for(&args, Budget::Sample { cases: 10, seed: 0 }).unwrap();
        assert_eq!(b, Budget::Sample { cases: 10, seed: 9 });
        let args = BudgetArgs {
            budget: Some("sample:1e3".into()),
            seed: 4,
        };
        assert_eq!(
            budget_for(&args, Budget::Exhaustive).unwrap(),
            Budget::Sample { cases: 1000, seed: 4 }
        );
    }
}
