//! `tuckercheb` command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use log::warn;

use tuckercheb::approximator::{deserialize, serialize};
use tuckercheb::study::{self, bench_function, rank_degree_study, BenchRow, FitCheck, BENCH_HEADER};
use tuckercheb::{approximate, catalog, ConstructorConfig, Error, FuncExpr, TuckerApproximant};

const EXIT_GENERIC: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_NAN: u8 = 4;
const EXIT_NOT_CERTIFIED: u8 = 5;

#[derive(Parser)]
#[command(
    name = "tuckercheb",
    version,
    about = "Functional Tucker approximation of functions on [-1,1]^3"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an approximant of an expression or catalog function.
    Approx(ApproxArgs),
    /// Evaluate a stored approximant.
    Eval(EvalArgs),
    /// Experiments.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Approximate several catalog functions and report evaluation counts.
    Bench(BenchArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Expression in x, y, z, e.g. "exp(x*y)*cos(z)".
    #[arg(long, group = "source")]
    expr: Option<String>,
    /// Catalog function name (runge3, expdist, coshinv, spike, logmix,
    /// separable-demo, degenerate-tanh, shifted-inv(EPS)).
    #[arg(long = "fn", group = "source")]
    function: Option<String>,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    source: Source,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Binary approximant file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON to write; defaults to the --out path with extension .json.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("where").required(true).args(["points", "at"])))]
struct EvalArgs {
    /// Approximant file written by `approx --out`.
    #[arg(long = "in")]
    input: PathBuf,
    /// CSV of points, one `x,y,z` per row; a header row is optional.
    #[arg(long)]
    points: Option<PathBuf>,
    /// A single point.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    at: Option<Vec<f64>>,
    /// Also evaluate this expression and report |f - approximant|.
    #[arg(long)]
    compare_expr: Option<String>,
    /// CSV output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Degree and HOSVD rank of 1/(x+y+z+3+eps) for several eps.
    Rankdeg(RankDegArgs),
}

#[derive(Args)]
struct RankDegArgs {
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Grid points per mode for the HOSVD rank.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// CSV output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "runge3,expdist,coshinv,spike")]
    fns: Vec<String>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV report file; without it the CSV goes to stdout and the table to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Parse { .. } | Error::Format { .. } | Error::UnsupportedVersion { .. }) => EXIT_PARSE,
            Some(Error::NonFinite { .. }) => EXIT_NAN,
            _ => EXIT_GENERIC,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn parse_failure(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_PARSE,
        error,
    }
}

fn resolve_source(src: &Source) -> Result<(String, FuncExpr), Failure> {
    match (&src.expr, &src.function) {
        (Some(e), _) => Ok((e.clone(), FuncExpr::parse(e)?)),
        (None, Some(name)) => {
            let entry = catalog::lookup(name)?;
            let e = entry.parse()?;
            Ok((entry.name, e))
        }
        (None, None) => unreachable!("clap requires a source"),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_approx(args: &ApproxArgs) -> CmdResult {
    let (label, expr) = resolve_source(&args.source)?;
    let cfg = ConstructorConfig {
        tol: args.tol,
        seed: args.seed,
        ..Default::default()
    };
    let a = approximate(|x, y, z| expr.eval(x, y, z), &cfg)?;
    let s = &a.stats;
    if let Some(out) = &args.out {
        write_file(out, &serialize(&a.approximant))?;
    }
    let stats_path = args
        .stats
        .clone()
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(p) = &stats_path {
        write_file(p, s.to_json().as_bytes())?;
    }

    println!("function        {label}");
    println!("tol             {:e}", s.tol);
    println!("ranks           {:?}", s.ranks);
    println!("degrees         {:?}", s.degrees);
    println!("coarse dims     {:?}", s.coarse_dims);
    println!("restarts        {}", s.restarts);
    println!(
        "evaluations     {} total, {} distinct",
        s.total_calls, s.distinct_points
    );
    for (name, c) in [
        ("fiber selection", s.phases.fiber_selection),
        ("refinement", s.phases.refinement),
        ("core", s.phases.core),
        ("verification", s.phases.verification),
    ] {
        println!("  {name:<14} {} total, {} distinct", c.total, c.distinct);
    }
    println!("vscale          {:e}", s.vscale);
    println!(
        "Halton error    {:.3e} (threshold {:.3e})",
        s.halton_error,
        cfg.acceptance_factor * s.tol * s.vscale
    );
    if s.unresolved.iter().any(|&u| u) {
        println!("unresolved      {:?}", s.unresolved);
    }
    if s.certified {
        println!("status          certified");
        Ok(0)
    } else {
        println!("status          NOT certified");
        warn!("tolerance not certified after {} restarts", s.restarts);
        Ok(EXIT_NOT_CERTIFIED)
    }
}

fn read_points(path: &Path) -> Result<Vec<[f64; 3]>, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut pts = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_failure(anyhow!("{}: malformed CSV: {e}", path.display())))?;
        if rec.len() != 3 {
            return Err(parse_failure(anyhow!(
                "{} row {}: expected 3 columns x,y,z, found {}",
                path.display(),
                row + 1,
                rec.len()
            )));
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => pts.push([v[0], v[1], v[2]]),
            Err(_) if row == 0 => continue,
            Err(e) => return Err(parse_failure(anyhow!("{} row {}: {e}", path.display(), row + 1))),
        }
    }
    Ok(pts)
}

fn load_approximant(path: &Path) -> Result<TuckerApproximant, Failure> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    deserialize(&bytes)
        .with_context(|| format!("{} is not a valid approximant", path.display()))
        .map_err(Failure::from)
}

fn cmd_eval(args: &EvalArgs) -> CmdResult {
    let a = load_approximant(&args.input)?;
    let exact = args.compare_expr.as_deref().map(FuncExpr::parse).transpose()?;
    let points = match (&args.at, &args.points) {
        (Some(p), _) => vec![[p[0], p[1], p[2]]],
        (None, Some(path)) => read_points(path)?,
        (None, None) => unreachable!("clap requires --at or --points"),
    };
    let outside = points
        .iter()
        .filter(|p| p.iter().any(|c| !(-1.0..=1.0).contains(c)))
        .count();
    if outside > 0 {
        warn!("{outside} point(s) lie outside [-1,1]^3; values are extrapolated");
    }

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["x", "y", "z", "value"];
    if exact.is_some() {
        header.extend(["exact", "abs_error"]);
    }
    w.write_record(&header).context("writing CSV")?;
    for [x, y, z] in points {
        let v = a.evaluate(x, y, z);
        let mut rec = vec![format!("{x:?}"), format!("{y:?}"), format!("{z:?}"), format!("{v:?}")];
        if let Some(e) = &exact {
            let f = e.eval(x, y, z);
            rec.push(format!("{f:?}"));
            rec.push(format!("{:?}", (f - v).abs()));
        }
        w.write_record(&rec).context("writing CSV")?;
    }
    w.flush().context("writing CSV")?;
    Ok(0)
}

fn cmd_rankdeg(args: &RankDegArgs) -> CmdResult {
    let rows = rank_degree_study(&args.eps_list, args.tol, args.grid)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r).context("writing CSV")?;
    }
    w.flush().context("writing CSV")?;
    drop(w);

    if rows.len() >= 2 {
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let rank = FitCheck::new(
            &rows.iter().map(|r| r.rank as f64).collect::<Vec<_>>(),
            &eps.iter().map(|&e| study::rank_model(e)).collect::<Vec<_>>(),
        );
        let degree = FitCheck::new(
            &rows.iter().map(|r| r.degree as f64).collect::<Vec<_>>(),
            &eps.iter().map(|&e| study::degree_model(e)).collect::<Vec<_>>(),
        );
        eprintln!(
            "rank   ~ {:.3} |log eps|          (data/fit in [{:.2}, {:.2}])",
            rank.constant, rank.min_ratio, rank.max_ratio
        );
        eprintln!(
            "degree ~ {:.3} / log(1+sqrt eps)  (data/fit in [{:.2}, {:.2}])",
            degree.constant, degree.min_ratio, degree.max_ratio
        );
    }
    Ok(0)
}

fn print_bench_table(out: &mut dyn Write, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(
        out,
        "{:<18} {:<14} {:>3} {:>16} {:>22} {:>11} {:>11} {:>10} {:>9}",
        "function", "status", "rs", "ranks", "degrees", "total", "distinct", "halton", "ms"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<18} {:<14} {:>3} {:>16} {:>22} {:>11} {:>11} {:>10.2e} {:>9}",
            r.function,
            r.status,
            r.restarts,
            format!("{},{},{}", r.rank1, r.rank2, r.rank3),
            format!("{},{},{}", r.degree1, r.degree2, r.degree3),
            r.total_calls,
            r.distinct_points,
            r.halton_error,
            r.wall_ms
        )?;
        if !r.message.is_empty() {
            writeln!(out, "    {}", r.message)?;
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let cfg = ConstructorConfig {
        tol: args.tol,
        seed: args.seed,
        ..Default::default()
    };
    cfg.validate()?;
    let rows: Vec<BenchRow> = args.fns.iter().map(|name| bench_function(name, &cfg)).collect();

    let csv_sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(csv_sink);
    w.write_record(BENCH_HEADER).context("writing CSV")?;
    for r in &rows {
        w.serialize(r).context("writing CSV")?;
    }
    w.flush().context("writing CSV")?;
    drop(w);

    let table = if args.out.is_some() {
        print_bench_table(&mut io::stdout().lock(), &rows)
    } else {
        print_bench_table(&mut io::stderr().lock(), &rows)
    };
    table.context("writing table")?;

    if rows.iter().any(|r| r.status == "error") {
        Ok(EXIT_GENERIC)
    } else if rows.iter().any(|r| r.status != "certified") {
        Ok(EXIT_NOT_CERTIFIED)
    } else {
        Ok(0)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Approx(a) => cmd_approx(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Study(StudyCommand::Rankdeg(a)) => cmd_rankdeg(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
