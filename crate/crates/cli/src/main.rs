use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chain_geometry::chains::{chain_through, frame_round_trip, parameter_grid, write_csv, ChainManifest, FlagPoint};
use chain_geometry::graded_lie::{build_algebra, Family};
use chain_geometry::groups::rationalize;
use chain_geometry::hodge::{table_report, CochainComplex};
use chain_geometry::par::Execution;
use chain_geometry::reconstruct::round_trip_report;
use chain_geometry::verify::{run_all, Check, Report, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "chains", version, about = "Verification harness for chains of parabolic contact structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum CommandKind {
    Verify,
    Tables,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every verification suite for one family and emit a JSON report.
    Verify(Common),
    /// Harmonic-curvature tables of the algebra and of its path extension.
    Tables(Common),
    /// Sample a chain in the big-cell chart and write it as CSV.
    Chain(Common),
    /// Round-trip the cubic tensor over random fibers.
    Reconstruct(Common),
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Lagrangean,
    Cr,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    #[arg(long, value_enum, default_value = "lagrangean")]
    family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t_max: f64,
    /// Comma-separated coordinates over g-2 ⊕ g-1 (g-2 first).
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Tolerance override, `name=value` (condition1, hausdorff, reconstruction).
    #[arg(long = "tol", value_parser = parse_tol)]
    tolerances: Vec<(String, f64)>,
    /// Disable the data-parallel kernels.
    #[arg(long)]
    sequential: bool,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad tolerance value: {e}"))?;
    if v.is_nan() || v <= 0.0 {
        return Err("tolerances must be positive".into());
    }
    Ok((k.to_string(), v))
}

/// Outcome of a command: exit code and diagnostics.
enum Failure {
    Usage(String),
    Failed(String),
}

impl Common {
    fn family(&self) -> Family {
        match self.family {
            FamilyArg::Lagrangean => Family::Lagrangean { n: self.n },
            FamilyArg::Cr => Family::Cr { p: self.p, q: self.q },
        }
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn validate(&self) -> Result<(Family, Tolerances), Failure> {
        let family = self.family();
        family.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        if self.samples == 0 {
            return Err(Failure::Usage("--samples must be positive".into()));
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err(Failure::Usage("need finite --t-min < --t-max".into()));
        }
        let mut tol = Tolerances::default();
        for (k, v) in &self.tolerances {
            tol.set(k, *v).map_err(Failure::Usage)?;
        }
        Ok((family, tol))
    }

    fn config(&self, kind: CommandKind) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["command"] = serde_json::to_value(kind).expect("command serializes");
        v
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Failed(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Failure::Failed(e.to_string()))
}

fn summarize(checks: &[Check]) {
    for c in checks.iter().filter(|c| !c.passed()) {
        eprintln!("FAIL {}{}", c.anchor, c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default());
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    eprintln!("{passed}/{} checks passed", checks.len());
}

fn run_verify(args: &Common) -> Result<(), Failure> {
    let (family, tol) = args.validate()?;
    let checks = run_all(family, args.samples, args.seed, &tol, args.exec());
    let report = Report::new(args.config(CommandKind::Verify), checks);
    emit_json(&args.out, &report)?;
    summarize(&report.checks);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Failed("some checks failed".into()))
    }
}

fn run_tables(args: &Common) -> Result<(), Failure> {
    let (family, _) = args.validate()?;
    if family.is_complex() {
        return Err(Failure::Usage("reference tables exist for the lagrangean family only".into()));
    }
    let Family::Lagrangean { n } = family else { unreachable!() };
    let mut reports = Vec::new();
    for f in [family, Family::Path { m: 2 * n }] {
        let alg = build_algebra(f).map_err(|e| Failure::Usage(e.to_string()))?;
        let report = table_report(&CochainComplex::new(alg), args.exec()).map_err(|e| Failure::Failed(e.to_string()))?;
        reports.push(report);
    }
    emit_json(&args.out, &serde_json::json!({ "config": args.config(CommandKind::Tables), "tables": reports }))?;
    if reports.iter().all(|r| r.matches_reference) {
        Ok(())
    } else {
        Err(Failure::Failed("harmonic table differs from the reference".into()))
    }
}

fn parse_direction(raw: Option<&str>, n: usize) -> Result<Vec<f64>, Failure> {
    let mut v = vec![0.0; 2 * n + 1];
    v[0] = 1.0;
    let Some(raw) = raw else {
        return Ok(v);
    };
    let parsed: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let parsed = parsed.map_err(|e| Failure::Usage(format!("bad --direction: {e}")))?;
    if parsed.len() != 2 * n + 1 || parsed.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Usage(format!("--direction needs {} finite coordinates", 2 * n + 1)));
    }
    Ok(parsed)
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn run_chain(args: &Common) -> Result<(), Failure> {
    let (family, _) = args.validate()?;
    let Family::Lagrangean { n } = family else {
        return Err(Failure::Usage("chart export is available for the lagrangean family only".into()));
    };
    let coords = parse_direction(args.direction.as_deref(), n)?;
    let alg = build_algebra(family).map_err(|e| Failure::Usage(e.to_string()))?;
    let negative: Vec<usize> = alg.grade_indices(-2).into_iter().chain(alg.grade_indices(-1)).collect();
    let mut full = vec![0.0; alg.dim()];
    for (&i, &x) in negative.iter().zip(&coords) {
        full[i] = x;
    }
    let xi = alg.element(rationalize(&full));
    let base = FlagPoint::base(family);
    let curve = chain_through(&base, &xi).map_err(|e| Failure::Failed(e.to_string()))?;
    if !frame_round_trip(&curve, &base, &xi) {
        return Err(Failure::Failed("frame normalization did not round-trip".into()));
    }
    let ts = parameter_grid(args.t_min, args.t_max, args.samples);
    let mut w = writer(&args.out)?;
    write_csv(&mut w, &curve, &ts, args.exec()).map_err(|e| Failure::Failed(e.to_string()))?;
    w.flush().map_err(|e| Failure::Failed(e.to_string()))?;
    if let Some(out) = &args.out {
        let manifest = ChainManifest::new(&curve, [args.t_min, args.t_max], args.samples);
        emit_json(&Some(manifest_path(out)), &manifest)?;
    }
    Ok(())
}

fn run_reconstruct(args: &Common) -> Result<(), Failure> {
    let (family, tol) = args.validate()?;
    let report = round_trip_report(family, args.samples, args.seed).map_err(|e| Failure::Failed(e.to_string()))?;
    emit_json(&args.out, &report)?;
    let worst = report.subspace_angles.iter().copied().fold(0.0, f64::max);
    eprintln!("{} fibers, worst error {worst:.3e}", report.subspace_angles.len());
    if worst <= tol.reconstruction {
        Ok(())
    } else {
        Err(Failure::Failed(format!("round-trip error {worst:.3e} above tolerance")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => run_verify(a),
        Command::Tables(a) => run_tables(a),
        Command::Chain(a) => run_chain(a),
        Command::Reconstruct(a) => run_reconstruct(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
