use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mixvote::bench::{bench_mes, BenchSize};
use mixvote::generate::{gen_construction, ConstructionSpec};
use mixvote::groups::Limits;
use mixvote::harmonic::{gpav_score, DEFAULT_TOL};
use mixvote::io::{
    allocation_from_json, allocation_to_json, canonical_instance_json, instance_from_json, instance_to_json,
    script_from_json, AllocationFile, LedgerFile, MetadataFile, PavSolutionFile, TraceFile,
};
use mixvote::oracle::{oracle_discretized_opt, oracle_min_max_avg, oracle_no_ejr_beta, EnumerationConfig, Objective};
use mixvote::rational::{self, Rational};
use mixvote::rules::pav::DEFAULT_EPS;
use mixvote::rules::{generalized_mes, generalized_pav, greedy_ejr_m, mnw_indivisible, TieBreaker};
use mixvote::verify::{margin_rational, DegreeBound, Mode, Verifier};
use mixvote::{Error, Instance};

const EXIT_AXIOM_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

#[derive(Parser)]
#[command(name = "mixvote", version, about = "Proportional collective choice over cake and indivisible goods")]
struct Cli {
    /// Worker threads for parallel enumeration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output location: a directory for `run` and `bench`, the instance file for `gen`,
    /// the report file for `verify`, `audit` and `oracle`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Lift enumeration caps.
    #[arg(long, global = true)]
    force: bool,
    /// Absolute tolerance for harmonic numbers.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    harmonic_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an allocation rule.
    Run(RunArgs),
    /// Check an allocation against an axiom.
    Verify(VerifyArgs),
    /// Report the worst average satisfaction relative to a degree bound.
    Audit(AuditArgs),
    /// Generate an instance and its metadata sidecar.
    Gen(GenArgs),
    /// Brute-force checks on small instances.
    Oracle(OracleArgs),
    /// Time Generalized MES on seeded random instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Greedy,
    Gmes,
    Gpav,
    Mnw,
}

impl Rule {
    fn name(self) -> &'static str {
        match self {
            Rule::Greedy => "greedy",
            Rule::Gmes => "gmes",
            Rule::Gpav => "gpav",
            Rule::Mnw => "mnw",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreak {
    Default,
    Script,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    rule: Rule,
    #[arg(long)]
    instance: PathBuf,
    /// GreedyEJR-M tie-breaking.
    #[arg(long, value_enum, default_value = "default")]
    tie_break: TieBreak,
    /// Script file for `--tie-break script`.
    #[arg(long)]
    script: Option<PathBuf>,
    /// GPAV optimality tolerance.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axiom {
    EjrM,
    #[value(name = "ejr-1")]
    Ejr1,
    EjrBeta,
    CakeEjr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Weak,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Weak => Mode::Weak,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    axiom: Axiom,
    #[arg(long, value_parser = parse_rational)]
    beta: Option<Rational>,
    #[arg(long, value_enum, default_value = "strict")]
    mode: ModeArg,
    /// Slack on strict inequalities, for allocations computed in floating point.
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    allocation: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    EjrM,
    #[value(name = "ejr-1")]
    Ejr1,
    Gpav,
    MesUpper,
}

impl From<BoundArg> for DegreeBound {
    fn from(b: BoundArg) -> DegreeBound {
        match b {
            BoundArg::EjrM => DegreeBound::EjrM,
            BoundArg::Ejr1 => DegreeBound::Ejr1,
            BoundArg::Gpav => DegreeBound::Gpav,
            BoundArg::MesUpper => DegreeBound::MesUpper,
        }
    }
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    bound: BoundArg,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    allocation: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Fig1,
    Prop1,
    Prop4,
    Thm4,
    Thm6,
    Appendix,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    construction: ConstructionArg,
    #[arg(long, value_parser = parse_rational)]
    t: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    eps: Option<Rational>,
    #[arg(long)]
    n: Option<usize>,
    /// Integer β for prop4.
    #[arg(long)]
    beta: Option<usize>,
    /// β′ in (0, 1) for prop1.
    #[arg(long, value_parser = parse_rational)]
    beta_prime: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    gamma: Option<Rational>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    delta: Option<Rational>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    cake_atoms: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    alpha: Option<Rational>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    NoEjrBeta,
    MinMaxAvg,
    Opt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Gpav,
    Nash,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    grid: usize,
    #[arg(long, value_parser = parse_rational)]
    beta: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    t: Option<Rational>,
    #[arg(long, value_enum, default_value = "weak")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "gpav")]
    objective: ObjectiveArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated `NxMxATOMS` triples.
    #[arg(long, default_value = "1000x100x100", value_delimiter = ',', value_parser = parse_size)]
    sizes: Vec<BenchSize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_rational(text: &str) -> Result<Rational, String> {
    rational::parse(text).map_err(|e| e.to_string())
}

fn parse_size(triple: &str) -> Result<BenchSize, String> {
    let parts: Vec<usize> = triple
        .split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{triple:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [n, m, atoms] => Ok(BenchSize { n, m, atoms }),
        _ => Err(format!("{triple:?} is not of the form NxMxATOMS")),
    }
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_capacity() { EXIT_CAPACITY } else { EXIT_USAGE };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

struct Context {
    argv: Vec<String>,
    out: Option<PathBuf>,
    limits: Limits,
    harmonic_tol: f64,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, format!("{text}\n")).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(instance_from_json(&read(path)?)?)
}

fn instance_digest(inst: &Instance) -> String {
    format!("{:x}", Sha256::digest(canonical_instance_json(inst).as_bytes()))
}

/// Writes to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

/// Prints the report and, when an output file is configured, writes it there too.
fn emit(ctx: &Context, report: &Value) -> Result<(), Failure> {
    let text = pretty(report);
    say(&text);
    if let Some(path) = &ctx.out {
        write(path, &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    command: Vec<String>,
    instance_digest: String,
    outputs: Value,
    summary: Value,
    timing_ms: f64,
    version: &'static str,
}

fn run(ctx: &Context, args: &RunArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let rule = args.rule.name();
    let allocation_path = dir.join(format!("{rule}_out.json"));
    let start = Instant::now();
    let mut outputs = json!({ "allocation": allocation_path.display().to_string() });
    let mut summary = serde_json::Map::new();
    let (allocation, sidecar_name, sidecar) = match args.rule {
        Rule::Greedy => {
            let tie_breaker = match (args.tie_break, &args.script) {
                (TieBreak::Default, None) => TieBreaker::Default,
                (TieBreak::Script, Some(path)) => TieBreaker::Script(script_from_json(&inst, &read(path)?)?),
                (TieBreak::Script, None) => return Err(usage("--tie-break script needs --script FILE")),
                (TieBreak::Default, Some(_)) => return Err(usage("--script needs --tie-break script")),
            };
            let (allocation, trace) = greedy_ejr_m(&inst, &tie_breaker, &ctx.limits)?;
            let t_stars: Vec<String> = trace.rounds.iter().map(|r| rational::format(&r.t_star)).collect();
            summary.insert("t_star".into(), json!(t_stars));
            (allocation, "trace", pretty(&TraceFile::from_trace(&inst, &trace)))
        }
        Rule::Gmes => {
            let (allocation, ledger) = generalized_mes(&inst);
            summary.insert("total_paid".into(), json!(rational::format(&ledger.total_paid())));
            (allocation, "ledger", pretty(&LedgerFile::from_ledger(&inst, &ledger)))
        }
        Rule::Gpav => {
            let solution = generalized_pav(&inst, args.eps, ctx.harmonic_tol, &ctx.limits)?;
            summary.insert("score".into(), json!(solution.score));
            summary.insert("optimality_gap".into(), json!(solution.optimality_gap));
            let allocation = solution.allocation.clone();
            (allocation, "solution", pretty(&PavSolutionFile::from_solution(&solution)))
        }
        Rule::Mnw => {
            let winners = mnw_indivisible(&inst, &ctx.limits)?;
            let files: Vec<AllocationFile> = winners.iter().map(|b| AllocationFile::from_bundle(&inst, b)).collect();
            summary.insert("optimal_count".into(), json!(winners.len()));
            (winners[0].clone(), "all", pretty(&files))
        }
    };
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let sidecar_path = dir.join(format!("{rule}_{sidecar_name}.json"));
    outputs[sidecar_name] = json!(sidecar_path.display().to_string());
    write(&allocation_path, &allocation_to_json(&inst, &allocation))?;
    write(&sidecar_path, &sidecar)?;

    let utilities: Vec<String> = inst.utilities(&allocation).iter().map(rational::format).collect();
    summary.insert("allocation".into(), json!(AllocationFile::from_bundle(&inst, &allocation)));
    summary.insert("utilities".into(), json!(utilities));
    if !matches!(args.rule, Rule::Gpav) {
        summary.insert("gpav_score".into(), json!(gpav_score(&inst, &allocation, ctx.harmonic_tol)?));
    }
    let report = RunReport {
        command: ctx.argv.clone(),
        instance_digest: instance_digest(&inst),
        outputs,
        summary: Value::Object(summary),
        timing_ms,
        version: env!("CARGO_PKG_VERSION"),
    };
    let text = pretty(&report);
    say(&text);
    write(&dir.join(format!("{rule}_report.json")), &text)?;
    Ok(0)
}

fn verify(ctx: &Context, args: &VerifyArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let allocation = allocation_from_json(&inst, &read(&args.allocation)?)?;
    let margin = margin_rational(args.margin)?;
    let verifier = Verifier::new(&inst, &ctx.limits)?;
    let report = match args.axiom {
        Axiom::EjrM => verifier.ejr_m(&allocation)?,
        Axiom::Ejr1 => verifier.ejr_1(&allocation, &margin)?,
        Axiom::CakeEjr => verifier.cake_ejr(&allocation)?,
        Axiom::EjrBeta => {
            let beta = args.beta.as_ref().ok_or_else(|| usage("--axiom ejr-beta needs --beta"))?;
            verifier.ejr_beta(&allocation, beta, args.mode.into(), &margin)?
        }
    };
    let pass = report.pass;
    emit(
        ctx,
        &json!({
            "instance_digest": instance_digest(&inst),
            "report": report,
        }),
    )?;
    Ok(if pass { 0 } else { EXIT_AXIOM_FAIL })
}

fn audit(ctx: &Context, args: &AuditArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let allocation = allocation_from_json(&inst, &read(&args.allocation)?)?;
    let report = Verifier::new(&inst, &ctx.limits)?.audit(&allocation, &args.bound.into())?;
    emit(
        ctx,
        &json!({
            "instance_digest": instance_digest(&inst),
            "report": report,
        }),
    )?;
    Ok(0)
}

fn need<T: Clone>(value: &Option<T>, flag: &str, construction: &str) -> Result<T, Failure> {
    value
        .clone()
        .ok_or_else(|| usage(format!("--construction {construction} needs --{flag}")))
}

fn gen(ctx: &Context, args: &GenArgs) -> Outcome {
    let spec = match args.construction {
        ConstructionArg::Fig1 => ConstructionSpec::Fig1,
        ConstructionArg::Prop1 => ConstructionSpec::Prop1 {
            beta_prime: need(&args.beta_prime, "beta-prime", "prop1")?,
            n: need(&args.n, "n", "prop1")?,
        },
        ConstructionArg::Prop4 => ConstructionSpec::Prop4 {
            beta: need(&args.beta, "beta", "prop4")?,
        },
        ConstructionArg::Thm4 => ConstructionSpec::Thm4 {
            t: need(&args.t, "t", "thm4")?,
            n: need(&args.n, "n", "thm4")?,
            delta: need(&args.delta, "delta", "thm4")?,
            eps: need(&args.eps, "eps", "thm4")?,
        },
        ConstructionArg::Thm6 => ConstructionSpec::Thm6 {
            t: need(&args.t, "t", "thm6")?,
            n: need(&args.n, "n", "thm6")?,
            eps: args.eps.clone(),
        },
        ConstructionArg::Appendix => ConstructionSpec::Appendix {
            t: need(&args.t, "t", "appendix")?,
            eps: need(&args.eps, "eps", "appendix")?,
            gamma: need(&args.gamma, "gamma", "appendix")?,
            q: need(&args.q, "q", "appendix")?,
        },
        ConstructionArg::Random => ConstructionSpec::Random {
            n: need(&args.n, "n", "random")?,
            m: args.m.unwrap_or(0),
            cake_atoms: args.cake_atoms.unwrap_or(0),
            alpha: need(&args.alpha, "alpha", "random")?,
            density: args.density.unwrap_or(0.5),
            seed: args.seed.unwrap_or(0),
        },
    };
    let construction = gen_construction(&spec)?;
    let path = ctx
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", spec.name())));
    let meta_path = path.with_extension("meta.json");
    write(&path, &instance_to_json(&construction.instance))?;
    write(&meta_path, &pretty(&MetadataFile::from_construction(&construction)))?;
    let inst = &construction.instance;
    say(&pretty(&json!({
            "construction": spec.name(),
            "instance": path.display().to_string(),
            "metadata": meta_path.display().to_string(),
            "instance_digest": instance_digest(inst),
            "n": inst.n(),
            "m": inst.m(),
            "cake_length": rational::format(inst.cake_length()),
            "alpha": rational::format(inst.alpha()),
    })));
    Ok(0)
}

fn oracle(ctx: &Context, args: &OracleArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let cfg = EnumerationConfig::with_grid(args.grid);
    let result = match args.check {
        Check::NoEjrBeta => {
            let beta = args.beta.as_ref().ok_or_else(|| usage("--check no-ejr-beta needs --beta"))?;
            let impossible = oracle_no_ejr_beta(&inst, beta, args.mode.into(), &cfg, &ctx.limits)?;
            json!({ "impossible": impossible })
        }
        Check::MinMaxAvg => {
            let t = args.t.as_ref().ok_or_else(|| usage("--check min-max-avg needs --t"))?;
            let value = oracle_min_max_avg(&inst, t, &cfg, &ctx.limits)?;
            json!({ "min_max_avg": value.map_or_else(|| "inf".to_string(), |v| rational::format(&v)) })
        }
        Check::Opt => {
            let objective = match args.objective {
                ObjectiveArg::Gpav => Objective::Gpav,
                ObjectiveArg::Nash => Objective::Nash,
            };
            let (bundle, value) = oracle_discretized_opt(&inst, objective, &cfg, ctx.harmonic_tol, &ctx.limits)?;
            json!({
                "allocation": AllocationFile::from_bundle(&inst, &bundle),
                "score": value,
            })
        }
    };
    emit(
        ctx,
        &json!({
            "instance_digest": instance_digest(&inst),
            "grid": args.grid,
            "result": result,
        }),
    )?;
    Ok(0)
}

fn bench(ctx: &Context, args: &BenchArgs) -> Outcome {
    let rows = bench_mes(&args.sizes, args.seed)?;
    for r in &rows {
        eprintln!(
            "n={:<6} m={:<5} atoms={:<5} {:>10.1} ms  {:>6} purchases (bound {})",
            r.n, r.m, r.atoms, r.millis, r.iterations, r.iteration_bound
        );
    }
    let report = json!({ "seed": args.seed, "rows": rows });
    let text = pretty(&report);
    say(&text);
    if let Some(dir) = &ctx.out {
        write(&dir.join("bench_report.json"), &text)?;
    }
    Ok(0)
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Outcome {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    if !(cli.harmonic_tol > 0.0) {
        return Err(usage("--harmonic-tol must be positive"));
    }
    let ctx = Context {
        argv,
        out: cli.out,
        limits: if cli.force { Limits::forced() } else { Limits::default() },
        harmonic_tol: cli.harmonic_tol,
    };
    match &cli.command {
        Command::Run(a) => run(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Audit(a) => audit(&ctx, a),
        Command::Gen(a) => gen(&ctx, a),
        Command::Oracle(a) => oracle(&ctx, a),
        Command::Bench(a) => bench(&ctx, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli, argv.into_iter().skip(1).collect()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
