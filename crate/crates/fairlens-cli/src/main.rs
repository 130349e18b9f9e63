//! Command-line front end for the fairlens toolkit: learn a causal graph,
//! certify a cohort against it, repair what fails, and render reports.
//!
//! Exit codes follow one contract across subcommands: 0 means success (and,
//! for audits, a certified cohort), 2 means the audit found discrimination
//! (or a repair failed to recertify), and 1 means any error — bad flags,
//! unreadable files, invalid configuration. Stdout carries human-readable
//! summaries; all machine-readable output goes to files under `--out`, and
//! every file is byte-deterministic for fixed inputs and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairlens::audit::{certify, AuditConfig, AuditReport};
use fairlens::data::{Dataset, Schema};
use fairlens::learn::{pc_learn_with, LearnLog, PcConfig, TierSpec};
use fairlens::repair::{mdata_repair, mgraph_repair, naive_repair, RepairMethod, RepairResult};
use fairlens::{Dag, Error, Result};

#[derive(Parser)]
#[command(
    name = "fairlens",
    version,
    about = "Audit and repair tabular cohorts for causal discrimination",
    after_help = "Environment:\n  FAIRLENS_THREADS  cap worker threads (1 forces sequential execution)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a causal graph from data with the tiered PC algorithm
    Learn(LearnCmd),
    /// Audit a cohort and write the certification report
    Certify(AuditCmd),
    /// Repair a cohort, recertify it, and write the outputs
    Repair(RepairCmd),
    /// Audit a cohort and print the full per-subpopulation report
    Report(AuditCmd),
}

/// Input data shared by every subcommand.
#[derive(Args)]
struct InputArgs {
    /// Cohort CSV: header row, comma-separated, UTF-8
    #[arg(long, value_name = "FILE")]
    data: PathBuf,

    /// Schema sidecar JSON (attribute domains plus audit roles)
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,

    /// Output directory for generated files
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

/// Where the causal graph comes from: a file, or structure learning.
#[derive(Args)]
struct GraphArgs {
    /// Causal graph JSON; omit to learn one from the data
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,

    /// Tier constraints for learning (arcs never point into earlier tiers)
    #[arg(long, value_name = "FILE")]
    tiers: Option<PathBuf>,

    /// Significance level for the conditional-independence tests
    #[arg(long, value_name = "ALPHA", default_value_t = 0.01)]
    ci_alpha: f64,

    /// Cap on the PC conditioning-set size
    #[arg(long, value_name = "DEPTH")]
    pc_max_depth: Option<usize>,
}

/// Audit thresholds shared by certify, repair, and report.
#[derive(Args)]
struct ThresholdArgs {
    /// Discrimination threshold tau on |delta_p| per subpopulation
    #[arg(long, default_value_t = 0.05)]
    tau: f64,

    /// Confidence level for the relaxed criterion (omit to skip it)
    #[arg(long)]
    alpha: Option<f64>,

    /// Skip subpopulations where either group has fewer rows than this
    #[arg(long, value_name = "ROWS", default_value_t = 1)]
    min_support: u64,

    /// Refuse to run when the graph lacks the protected -> decision arc
    #[arg(long)]
    strict_arc: bool,
}

#[derive(Args)]
struct LearnCmd {
    #[command(flatten)]
    input: InputArgs,

    /// Tier constraints (arcs never point into earlier tiers)
    #[arg(long, value_name = "FILE")]
    tiers: Option<PathBuf>,

    /// Significance level for the conditional-independence tests
    #[arg(long, value_name = "ALPHA", default_value_t = 0.01)]
    ci_alpha: f64,

    /// Cap on the PC conditioning-set size
    #[arg(long, value_name = "DEPTH")]
    pc_max_depth: Option<usize>,
}

#[derive(Args)]
struct AuditCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args)]
struct RepairCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,

    /// Repair method: mgraph (CPT-level), mdata (row-level), or naive
    #[arg(long, value_name = "METHOD")]
    method: String,

    /// Seed for every random choice the repair makes
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here as "errors"; keep their
            // success status while real usage mistakes exit 1.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Learn(cmd) => cmd_learn(cmd),
        Command::Certify(cmd) => cmd_certify(cmd, false),
        Command::Report(cmd) => cmd_certify(cmd, true),
        Command::Repair(cmd) => cmd_repair(cmd),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fairlens: error: {e}");
            ExitCode::from(1)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn ensure_out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io { path: path.into(), source })
}

fn load_dataset(input: &InputArgs) -> Result<Dataset> {
    let schema = match &input.schema {
        Some(path) => Some(Schema::load(path)?),
        None => None,
    };
    Dataset::load_csv(&input.data, schema.as_ref())
}

fn load_tiers(path: &Option<PathBuf>) -> Result<TierSpec> {
    match path {
        Some(p) => TierSpec::load(p),
        None => Ok(TierSpec::unconstrained()),
    }
}

fn run_pc(
    data: &Dataset,
    tiers: &Option<PathBuf>,
    ci_alpha: f64,
    pc_max_depth: Option<usize>,
) -> Result<(Dag, LearnLog)> {
    let tiers = load_tiers(tiers)?;
    let config = PcConfig { alpha: ci_alpha, max_depth: pc_max_depth, ..PcConfig::default() };
    pc_learn_with(data, &tiers, &config)
}

/// Load the graph file when given, otherwise learn one and persist both the
/// graph and its learning log next to the other outputs.
fn resolve_graph(data: &Dataset, args: &GraphArgs, out: &Path) -> Result<Dag> {
    if let Some(path) = &args.graph {
        return Dag::load(path);
    }
    let (dag, log) = run_pc(data, &args.tiers, args.ci_alpha, args.pc_max_depth)?;
    let graph_path = out.join("graph.json");
    let log_path = out.join("learn_log.json");
    dag.save(&graph_path)?;
    log.save(&log_path)?;
    println!(
        "learned graph: {} nodes, {} arcs ({} CI tests); wrote {} and {}",
        dag.nodes().len(),
        dag.arcs().len(),
        log.n_ci_tests,
        graph_path.display(),
        log_path.display()
    );
    Ok(dag)
}

fn audit_config(args: &ThresholdArgs) -> Result<AuditConfig> {
    // The CLI insists on tau strictly inside (0, 1): tau = 1 never rejects
    // anything and is always a configuration mistake at the command line.
    if !(args.tau > 0.0 && args.tau < 1.0) {
        return Err(Error::Config(format!("tau must be in (0, 1), got {}", args.tau)));
    }
    AuditConfig { tau: args.tau, alpha: args.alpha, min_support: args.min_support }.validated()
}

fn check_strict_arc(data: &Dataset, graph: &Dag, strict: bool) -> Result<()> {
    if !strict {
        return Ok(());
    }
    let roles = data.schema().roles()?;
    if !graph.has_arc(&roles.protected, &roles.decision) {
        return Err(Error::Config(format!(
            "--strict-arc: the graph has no {} -> {} arc",
            roles.protected, roles.decision
        )));
    }
    Ok(())
}

fn verdict_code(certified: bool) -> ExitCode {
    if certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

fn cmd_learn(cmd: LearnCmd) -> Result<ExitCode> {
    ensure_out_dir(&cmd.input.out)?;
    let data = load_dataset(&cmd.input)?;
    let (dag, log) = run_pc(&data, &cmd.tiers, cmd.ci_alpha, cmd.pc_max_depth)?;

    let graph_path = cmd.input.out.join("graph.json");
    let log_path = cmd.input.out.join("learn_log.json");
    dag.save(&graph_path)?;
    log.save(&log_path)?;

    println!(
        "learned graph from {} rows x {} attributes: {} arcs, {} CI tests (alpha = {})",
        data.n_rows(),
        data.schema().attributes().len(),
        dag.arcs().len(),
        log.n_ci_tests,
        log.alpha
    );
    println!("wrote {} and {}", graph_path.display(), log_path.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// certify / report
// ---------------------------------------------------------------------------

fn cmd_certify(cmd: AuditCmd, detailed: bool) -> Result<ExitCode> {
    ensure_out_dir(&cmd.input.out)?;
    let config = audit_config(&cmd.thresholds)?;
    let data = load_dataset(&cmd.input)?;
    let graph = resolve_graph(&data, &cmd.graph, &cmd.input.out)?;
    check_strict_arc(&data, &graph, cmd.thresholds.strict_arc)?;

    let report = certify(&data, &graph, &config)?;
    let report_path = cmd.input.out.join("report.json");
    report.save(&report_path)?;

    if detailed {
        print_detailed_report(&report);
    } else {
        print_summary_line(&report);
    }
    println!("wrote {}", report_path.display());
    Ok(verdict_code(report.certified))
}

fn print_summary_line(report: &AuditReport) {
    let violations = report.violations().count();
    if report.certified {
        println!(
            "certified: {} subpopulations within tau = {} ({} skipped for support)",
            report.findings.len(),
            report.tau,
            report.skipped
        );
    } else {
        println!(
            "discrimination found: {} of {} subpopulations exceed tau = {}",
            violations,
            report.findings.len(),
            report.tau
        );
    }
}

fn print_detailed_report(report: &AuditReport) {
    println!("audit of Q = {{{}}} at tau = {}", report.q_set.join(", "), report.tau);
    println!("{:<40} {:>10} {:>12} {:>12}  flag", "subpopulation", "delta_p", "c-: e+/n", "c+: e+/n");
    for f in &report.findings {
        println!(
            "{:<40} {:>+10.4} {:>12} {:>12}  {}",
            f.q.to_string(),
            f.delta_p,
            format!("{}/{}", f.support.n_cn_ep, f.support.n_cn()),
            format!("{}/{}", f.support.n_cp_ep, f.support.n_cp()),
            if f.violating { "VIOLATING" } else { "ok" }
        );
    }
    if report.skipped > 0 {
        println!("skipped for support: {}", report.skipped);
    }
    if let Some(r) = &report.relaxed {
        println!(
            "relaxed criterion: mean {:+.6}, variance {:.6}, bound {:.4} at alpha = {} -> {}",
            r.mean,
            r.variance,
            r.bound,
            r.alpha,
            if r.claimed { "claimed" } else { "not claimed" }
        );
    }
    println!("verdict: {}", if report.certified { "certified" } else { "NOT certified" });
}

// ---------------------------------------------------------------------------
// repair
// ---------------------------------------------------------------------------

fn cmd_repair(cmd: RepairCmd) -> Result<ExitCode> {
    ensure_out_dir(&cmd.input.out)?;
    let config = audit_config(&cmd.thresholds)?;
    let method: RepairMethod = cmd.method.parse()?;
    let data = load_dataset(&cmd.input)?;
    let graph = resolve_graph(&data, &cmd.graph, &cmd.input.out)?;
    check_strict_arc(&data, &graph, cmd.thresholds.strict_arc)?;

    let result = match method {
        RepairMethod::MGraph => mgraph_repair(&data, &graph, &config, cmd.seed)?,
        RepairMethod::MData => mdata_repair(&data, &graph, &config, cmd.seed)?,
        RepairMethod::Naive => naive_repair(&data, &graph, &config, cmd.seed)?,
    };

    let csv_path = cmd.input.out.join("repaired.csv");
    let manifest_path = cmd.input.out.join("manifest.json");
    result.dataset.save_csv(&csv_path)?;
    write_text(&manifest_path, &manifest_json(&result, &config))?;

    println!(
        "{} repair (seed {}): {} rows modified, d = {:.6}, chi2 = {:.4}",
        result.method.label(),
        result.seed,
        result.utility.n_modified,
        result.utility.euclidean_d,
        result.utility.chi_squared
    );
    println!(
        "recertification: {}",
        if result.recertified.certified { "certified" } else { "NOT certified" }
    );
    println!("wrote {} and {}", csv_path.display(), manifest_path.display());
    Ok(verdict_code(result.recertified.certified))
}

/// The repair manifest: what ran, what it cost, what changed, and the
/// recertification verdict. Sorted keys and shortest-round-trip floats keep
/// the bytes reproducible for fixed inputs and seed.
fn manifest_json(result: &RepairResult, config: &AuditConfig) -> String {
    let flips: Vec<serde_json::Value> = result
        .flips
        .iter()
        .map(|f| {
            serde_json::json!({
                "q": f.q,
                "requested": f.requested,
                "flipped": f.flipped,
                "residual": f.residual,
            })
        })
        .collect();
    let cpt = match (&result.original_cpt, &result.modified_cpt) {
        (Some(before), Some(after)) => serde_json::json!({
            "node": after.node,
            "parents": after.parent_order,
            "before": before.table,
            "after": after.table,
        }),
        _ => serde_json::Value::Null,
    };
    let recertified: serde_json::Value = serde_json::from_str(&result.recertified.to_json())
        .expect("report JSON is valid by construction");
    let v = serde_json::json!({
        "method": result.method.label(),
        "tau": config.tau,
        "alpha": config.alpha,
        "min_support": config.min_support,
        "seed": result.seed,
        "utility": result.utility.to_json_value(),
        "flips": flips,
        "cpt": cpt,
        "recertified": recertified,
    });
    serde_json::to_string_pretty(&v).expect("manifest serialization is infallible")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body).map_err(|source| Error::Io { path: path.into(), source })
}
