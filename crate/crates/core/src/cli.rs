//! The `probcfg` command line.
//!
//! Exit codes: 0 on success, 1 on user errors (bad flags, unreadable or
//! malformed input), 2 on semantic errors (undefined normalization,
//! evaluation failures, non-convergence under `--strict`).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::adequacy::check_adequacy;
use crate::analysis::Analysis;
use crate::convergence::{ConvergenceReport, StopRule, DEFAULT_MAX_K};
use crate::denotational::{normalized_semantics, raw_semantics, Expectation};
use crate::fixpoint::Engine;
use crate::pcfg::{NodeId, Pcfg};
use crate::rational::parse_tolerance;
use crate::sampler::{sample_program_parallel, DEFAULT_STEP_BOUND};
use crate::store::Dist;
use crate::syntax::{parse_program, Program, Universe};
use crate::translate::translate_program;

#[derive(Parser, Debug)]
#[command(name = "probcfg", version, about = "Exact semantics of probabilistic programs and their control-flow graphs")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a program or graph.
    Check(Source),
    /// Translate a program to its control-flow graph.
    Translate {
        #[arg(long)]
        program: PathBuf,
        /// Remove single-successor skip nodes.
        #[arg(long)]
        simplify: bool,
        /// Graphviz output (the default unless --json is given).
        #[arg(long)]
        dot: bool,
    },
    /// Postdominators, first proper postdominators, cycle-inducing nodes and LAP.
    Analyze(Source),
    /// Run the fixed-point semantics of a graph on an input distribution.
    Run {
        #[command(flatten)]
        source: Source,
        /// Input distribution; defaults to the point mass at the all-zero store.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        iteration: Iteration,
        /// Evaluate between a postdominator pair `v,v2` instead of Start and End.
        #[arg(long, value_parser = parse_pair)]
        at: Option<(NodeId, NodeId)>,
        /// Stream `k,mass` for every iterate to stderr.
        #[arg(long)]
        trace_k: bool,
    },
    /// Expected return value of a program.
    Expect {
        #[arg(long)]
        program: PathBuf,
        #[command(flatten)]
        iteration: Iteration,
        /// Report the unnormalized expectation.
        #[arg(long, conflicts_with = "normalized")]
        raw: bool,
        /// Divide by the probability of passing all observations (the default).
        #[arg(long)]
        normalized: bool,
    },
    /// Check that both semantics agree on a program.
    Adequacy {
        #[arg(long)]
        program: PathBuf,
        /// Input distribution; defaults to the point mass at the all-zero store.
        #[arg(long)]
        dist: Option<PathBuf>,
        #[command(flatten)]
        iteration: Iteration,
    },
    /// Estimate by forward rejection sampling.
    Sample {
        #[arg(long)]
        program: PathBuf,
        #[arg(short = 'n', long = "runs", default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEP_BOUND)]
        step_bound: u64,
    },
}

#[derive(Args, Debug)]
struct Source {
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
    program: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Remove single-successor skip nodes from a translated program.
    #[arg(long)]
    simplify: bool,
}

#[derive(Args, Debug)]
struct Iteration {
    /// Tolerance, exact: `1e-9`, `0.001` or `1/1000`.
    #[arg(long, default_value = "1e-9", value_parser = parse_tol)]
    tol: BigRational,
    #[arg(long, default_value_t = DEFAULT_MAX_K)]
    max_k: usize,
    /// Exit with code 2 unless the iteration converged.
    #[arg(long)]
    strict: bool,
}

impl Iteration {
    fn rule(&self) -> StopRule {
        StopRule::new(self.tol.clone(), self.max_k)
    }

    fn exit_code(&self, converged: bool) -> i32 {
        if self.strict && !converged {
            2
        } else {
            0
        }
    }
}

fn parse_tol(s: &str) -> Result<BigRational, String> {
    parse_tolerance(s).ok_or_else(|| format!("`{s}` is not a positive decimal or fraction"))
}

fn parse_pair(s: &str) -> Result<(NodeId, NodeId), String> {
    let (a, b) = s.split_once(',').ok_or("expected `v,v2`")?;
    let node = |t: &str| t.trim().parse::<NodeId>().map_err(|e| format!("`{t}`: {e}"));
    Ok((node(a)?, node(b)?))
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn user(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn semantic(message: impl ToString) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        user(format!("write failed: {e}"))
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{shown}");
                1
            } else {
                let _ = write!(out, "{shown}");
                0
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let json = cli.json;
    match &cli.command {
        Command::Check(src) => check(src, json, out, err),
        Command::Translate { program, simplify, dot: _ } => {
            let g = translate_program(&load_program(program)?);
            let g = if *simplify { g.compress_skips() } else { g };
            if json {
                write!(out, "{}", g.to_json_string())?;
            } else {
                write!(out, "{}", g.to_dot())?;
            }
            Ok(0)
        }
        Command::Analyze(src) => analyze(src, json, out),
        Command::Run { source, input, iteration, at, trace_k } => {
            run_graph(source, input.as_deref(), iteration, *at, *trace_k, json, out, err)
        }
        Command::Expect { program, iteration, raw, normalized: _ } => {
            expect(&load_program(program)?, iteration, *raw, json, out)
        }
        Command::Adequacy { program, dist, iteration } => adequacy(program, dist.as_deref(), iteration, json, out),
        Command::Sample { program, n, seed, step_bound } => {
            let p = load_program(program)?;
            let report = sample_program_parallel(&p, *n, *seed, *step_bound).map_err(semantic)?;
            if json {
                print_json(out, &report.to_json(&p.universe))?;
            } else {
                writeln!(out, "runs: {} (seed {})", report.n_total, report.seed)?;
                writeln!(out, "accepted: {}", report.n_accepted)?;
                writeln!(out, "rejected by observe: {}", report.n_rejected_observe)?;
                writeln!(out, "step bound hit: {}", report.n_step_bound_hit)?;
                writeln!(out, "acceptance rate: {}", report.acceptance_rate())?;
                match &report.empirical_normalized_expectation {
                    Some(m) => writeln!(out, "mean return value: {m} (~{:.6})", crate::rational::to_f64(m))?,
                    None => writeln!(out, "mean return value: undefined (no run accepted)")?,
                }
            }
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn load_graph_file(path: &Path) -> Result<Pcfg, Failure> {
    Pcfg::from_json(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn violations_message(path: &Path, g: &Pcfg) -> Option<String> {
    let v = g.validate();
    (!v.is_empty()).then(|| {
        let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        format!("{}: invalid graph: {}", path.display(), list.join("; "))
    })
}

fn load_source(src: &Source) -> Result<Pcfg, Failure> {
    let g = match (&src.program, &src.graph) {
        (Some(p), _) => translate_program(&load_program(p)?),
        (None, Some(path)) => {
            let g = load_graph_file(path)?;
            if let Some(m) = violations_message(path, &g) {
                return Err(user(m));
            }
            g
        }
        (None, None) => return Err(user("one of --program or --graph is required")),
    };
    Ok(if src.simplify { g.compress_skips() } else { g })
}

fn load_dist(path: &Path, universe: &Universe) -> Result<Dist, Failure> {
    let (u, d) = Dist::from_json(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))?;
    if &u != universe {
        return Err(user(format!(
            "{}: distribution is over ({}) but the program declares ({})",
            path.display(),
            u.names().join(", "),
            universe.names().join(", ")
        )));
    }
    if d.mass().value() > &BigRational::from_integer(1.into()) {
        return Err(user(format!("{}: total weight exceeds 1", path.display())));
    }
    Ok(d)
}

fn print_json(out: &mut dyn Write, v: &Value) -> io::Result<()> {
    writeln!(out, "{}", serde_json::to_string(v).expect("json serialization"))
}

fn check(src: &Source, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if let Some(path) = &src.program {
        let p = load_program(path)?;
        let g = translate_program(&p);
        let g = if src.simplify { g.compress_skips() } else { g };
        let warnings = p.reads_before_write();
        if json {
            print_json(
                out,
                &json!({
                    "ok": true,
                    "kind": "program",
                    "universe": p.universe.names(),
                    "nodes": g.len(),
                    "read_before_assignment": warnings,
                }),
            )?;
        } else {
            for w in &warnings {
                writeln!(err, "warning: `{w}` may be read before it is assigned; it starts at 0")?;
            }
            writeln!(out, "ok: program over ({}), {} graph nodes", p.universe.names().join(", "), g.len())?;
        }
        return Ok(0);
    }
    let path = src.graph.as_ref().ok_or_else(|| user("one of --program or --graph is required"))?;
    let g = load_graph_file(path)?;
    let violations: Vec<String> = g.validate().iter().map(|v| v.to_string()).collect();
    if json {
        print_json(out, &json!({"ok": violations.is_empty(), "kind": "graph", "nodes": g.len(), "violations": violations}))?;
    } else if violations.is_empty() {
        writeln!(out, "ok: graph with {} nodes and {} edges", g.len(), g.edge_count())?;
    } else {
        for v in &violations {
            writeln!(err, "{}: {v}", path.display())?;
        }
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn analyze(src: &Source, json: bool, out: &mut dyn Write) -> Outcome {
    let g = load_source(src)?;
    let a = Analysis::new(&g).map_err(semantic)?;
    let laps = a.lap_table(&g).map_err(semantic)?;
    let u = g.universe();
    if json {
        let nodes: Vec<Value> = g
            .nodes()
            .map(|(v, n)| {
                json!({
                    "id": v,
                    "kind": n.label.kind(),
                    "text": n.label.text(u),
                    "postdominators": a.pd().of(v),
                    "fppd": a.fppd(v),
                    "cycle_inducing": a.is_cycle_inducing(v),
                })
            })
            .collect();
        let lap: Vec<Value> = laps.iter().map(|((v, w), n)| json!({"from": v, "to": w, "lap": n})).collect();
        print_json(out, &json!({"nodes": nodes, "cycle_inducing": a.cycle_inducing(), "lap": lap}))?;
        return Ok(0);
    }
    let rows: Vec<(String, String, String, String)> = g
        .nodes()
        .map(|(v, n)| {
            (
                v.to_string(),
                n.label.text(u),
                a.fppd(v).map_or("-".into(), |w| w.to_string()),
                if a.is_cycle_inducing(v) { "yes".into() } else { "no".into() },
            )
        })
        .collect();
    let width = rows.iter().map(|r| r.1.chars().count()).max().unwrap_or(0).max(5);
    writeln!(out, "{:<5} {:<width$}  {:<5} cycle-inducing", "node", "label", "fppd")?;
    for (v, label, f, c) in rows {
        writeln!(out, "{v:<5} {label:<width$}  {f:<5} {c}")?;
    }
    writeln!(out)?;
    writeln!(out, "{:<5} {:<5} lap", "from", "to")?;
    for ((v, w), n) in laps {
        writeln!(out, "{v:<5} {w:<5} {n}")?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run_graph(
    src: &Source,
    input: Option<&Path>,
    iteration: &Iteration,
    at: Option<(NodeId, NodeId)>,
    trace_k: bool,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let g = load_source(src)?;
    let d0 = match input {
        Some(path) => load_dist(path, g.universe())?,
        None => Dist::point(g.universe().bottom()),
    };
    let (v, v2) = at.unwrap_or((g.start(), g.end()));
    for n in [v, v2] {
        if !g.contains(n) {
            return Err(user(format!("node {n} does not exist")));
        }
    }
    let engine = Engine::new(g).map_err(semantic)?;
    let rule = iteration.rule();
    let (d, report) = if trace_k {
        writeln!(err, "k,mass")?;
        engine.omega_traced(v, v2, &d0, &rule, |k, dk| {
            let _ = writeln!(err, "{k},{}", dk.mass());
        })
    } else {
        engine.omega(v, v2, &d0, &rule)
    }
    .map_err(semantic)?;
    let canonical = d.to_canonical_json(engine.graph().universe());
    if json {
        let dist: Value = serde_json::from_str(&canonical).expect("canonical JSON parses");
        print_json(out, &json!({"dist": dist, "mass": d.mass().to_string(), "report": report.to_json()}))?;
    } else {
        writeln!(out, "{canonical}")?;
        writeln!(out, "mass {}; {report}", d.mass())?;
    }
    Ok(iteration.exit_code(report.converged))
}

fn report_fields(report: &ConvergenceReport) -> Value {
    json!({
        "converged": report.converged,
        "iterations": report.iterations_used,
        "criterion": report.criterion.name(),
        "residual": report.residual.to_string(),
        "budget_exhausted": report.budget_exhausted,
    })
}

fn expect(p: &Program, iteration: &Iteration, raw: bool, json: bool, out: &mut dyn Write) -> Outcome {
    let rule = iteration.rule();
    let (value, numerator, denominator, report) = if raw {
        let (n, d, report) = raw_semantics(p, &rule).map_err(semantic)?;
        (n.clone(), n, d, report)
    } else {
        let n = normalized_semantics(p, &rule).map_err(semantic)?;
        (n.value, n.numerator, n.denominator, n.report)
    };
    if json {
        let mut v = json!({
            "value": value.to_string(),
            "numerator": numerator.to_string(),
            "denominator": denominator.to_string(),
        });
        let fields = report_fields(&report);
        let (Value::Object(m), Value::Object(extra)) = (&mut v, fields) else { unreachable!() };
        m.extend(extra);
        print_json(out, &v)?;
    } else {
        writeln!(out, "{value}")?;
        writeln!(out, "numerator {numerator}, denominator {denominator}")?;
        writeln!(out, "{report}")?;
    }
    Ok(iteration.exit_code(report.converged))
}

fn adequacy(program: &Path, dist: Option<&Path>, iteration: &Iteration, json: bool, out: &mut dyn Write) -> Outcome {
    let p = load_program(program)?;
    let d = match dist {
        Some(path) => load_dist(path, &p.universe)?,
        None => Dist::point(p.universe.bottom()),
    };
    let f = Expectation::Expr(p.ret.clone());
    let res = check_adequacy(&p.body, &p.universe, &f, &d, &iteration.rule()).map_err(semantic)?;
    if json {
        print_json(out, &res.to_json())?;
    } else {
        writeln!(out, "lhs {}", res.lhs)?;
        writeln!(out, "rhs {}", res.rhs)?;
        writeln!(out, "difference {} (allowed {})", res.abs_diff, res.slack)?;
        writeln!(out, "graph: {}", res.graph_report)?;
        writeln!(out, "denotational: {}", res.denot_report)?;
        writeln!(out, "{}", if res.passed() { "agree" } else { "DISAGREE" })?;
    }
    if res.both_converged && !res.passed() {
        return Ok(2);
    }
    Ok(iteration.exit_code(res.both_converged))
}
