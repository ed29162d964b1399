//! Command-line entry point.
//!
//! Exit codes: 0 all checks pass; 1 a contract or monitor violation was
//! found; 2 spec error (parse failure, type errors, executability misuse);
//! 3 usage or configuration error.

use crate::analysis::{analyze_spec, default_sut_type};
use crate::corpus::graph_check::{check_path_flavored, BfsFlavor, SearchFailure, SearchOptions};
use crate::corpus::{find_impl, registry};
use crate::eval::reachability_oracle;
use crate::graph::GraphModel;
use crate::parser::parse_interface;
use crate::printer::pretty_print;
use crate::report::{analysis_human, Report};
use crate::stm::{test as stm_test, GenConfig, StmError};
use crate::typecheck::{typecheck, TypedSpec};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_SPEC_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "speclite",
    version,
    about = "Parse, analyze, and dynamically verify behavioral interface specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a spec file and dump its structure.
    Parse {
        /// Path to a `.mli.spec` file.
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Typecheck, classify executability, and report tester compatibility.
    Analyze {
        spec: PathBuf,
        /// SUT type name for compatibility analysis (default: the first
        /// declared type).
        #[arg(long)]
        sut_type: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Random state-machine testing of an implementation against a spec.
    Test {
        spec: PathBuf,
        /// Implementation registry key (see `list-impls`).
        #[arg(long = "impl")]
        impl_name: String,
        #[command(flatten)]
        gen: GenFlags,
        /// Read GenConfig defaults from a JSON file (flags win).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the graph path checker with the oracle cross-check.
    Path {
        /// Graph file: `vertices: a b c` then `edge: a b` lines.
        graph: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Evaluate the search-invariant monitors at every loop head.
        #[arg(long)]
        monitors: bool,
        /// Search variant: check_path, mutant_G1, or mutant_G2.
        #[arg(long = "impl", default_value = "check_path")]
        impl_name: String,
        #[arg(long)]
        json: bool,
    },
    /// List the built-in implementations.
    ListImpls,
}

#[derive(Args)]
struct GenFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    int_min: Option<i64>,
    #[arg(long)]
    int_max: Option<i64>,
}

pub fn cli_main<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let args = std::iter::once("speclite".to_string()).chain(argv);
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through the error path.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Cmd::Parse { spec, json } => cmd_parse(&spec, json),
        Cmd::Analyze {
            spec,
            sut_type,
            json,
        } => cmd_analyze(&spec, sut_type.as_deref(), json),
        Cmd::Test {
            spec,
            impl_name,
            gen,
            config,
            json,
        } => cmd_test(&spec, &impl_name, &gen, config.as_deref(), json),
        Cmd::Path {
            graph,
            from,
            to,
            monitors,
            impl_name,
            json,
        } => cmd_path(&graph, &from, &to, monitors, &impl_name, json),
        Cmd::ListImpls => {
            for e in registry() {
                println!("{:16} {}", e.name, e.description);
            }
            EXIT_OK
        }
    }
}

fn read_spec_file(path: &Path, report: &mut Report) -> Result<TypedSpec, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_USAGE);
        }
    };
    let parsed = match parse_interface(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            report.push_parse_error(&e);
            return Err(EXIT_SPEC_ERROR);
        }
    };
    match typecheck(parsed) {
        Ok(ts) => Ok(ts),
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {}: {e}", path.display());
            }
            report.push_type_errors(&errors);
            Err(EXIT_SPEC_ERROR)
        }
    }
}

fn emit(report: &mut Report, started: Instant, json: bool, human: &str) {
    report.elapsed_ms = started.elapsed().as_millis();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report.to_json()).expect("report serializes")
        );
    } else {
        print!("{human}");
    }
}

fn cmd_parse(spec_path: &Path, json: bool) -> i32 {
    let started = Instant::now();
    let mut report = Report::new("parse");
    report.config = json!({ "spec": spec_path.display().to_string() });

    let text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", spec_path.display());
            return EXIT_USAGE;
        }
    };
    match parse_interface(&text) {
        Ok(parsed) => {
            let decls: Vec<_> = parsed
                .decls
                .iter()
                .map(|d| {
                    json!({
                        "name": d.name(),
                        "kind": match d {
                            crate::ast::Decl::Type(_) => "type",
                            crate::ast::Decl::Val(_) => "val",
                            crate::ast::Decl::Exn(_) => "exception",
                            crate::ast::Decl::Pred(_) => "predicate",
                        },
                    })
                })
                .collect();
            let pretty = pretty_print(&parsed);
            report.parse = Some(json!({
                "declarations": parsed.decls.len(),
                "decls": decls,
                "pretty": pretty,
                "ast": serde_json::to_value(&parsed).expect("ast serializes"),
            }));
            emit(&mut report, started, json, &pretty);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}: {e}", spec_path.display());
            report.push_parse_error(&e);
            if json {
                emit(&mut report, started, true, "");
            }
            EXIT_SPEC_ERROR
        }
    }
}

fn cmd_analyze(spec_path: &Path, sut_type: Option<&str>, json: bool) -> i32 {
    let started = Instant::now();
    let mut report = Report::new("analyze");

    let ts = match read_spec_file(spec_path, &mut report) {
        Ok(ts) => ts,
        Err(code) => {
            if json {
                emit(&mut report, started, true, "");
            }
            return code;
        }
    };
    let sut = sut_type
        .map(str::to_string)
        .or_else(|| default_sut_type(&ts))
        .unwrap_or_else(|| "t".to_string());
    report.config = json!({
        "spec": spec_path.display().to_string(),
        "sut_type": sut,
    });
    let analysis = analyze_spec(&ts, &sut, &BTreeSet::new());
    let human = analysis_human(&analysis);
    report.analysis = Some(analysis);
    emit(&mut report, started, json, &human);
    EXIT_OK
}

fn build_config(gen: &GenFlags, config_path: Option<&Path>) -> Result<GenConfig, i32> {
    let mut config = GenConfig::default();
    // Environment override of the default seed; explicit flags win.
    if let Ok(value) = std::env::var("SPECLITE_SEED") {
        match value.parse() {
            Ok(seed) => config.seed = seed,
            Err(_) => {
                eprintln!("error: SPECLITE_SEED is not an integer: {value}");
                return Err(EXIT_USAGE);
            }
        }
    }
    if let Some(path) = config_path {
        let env_seed = config.seed;
        let text = std::fs::read_to_string(path).map_err(|e| {
            eprintln!("error: cannot read {}: {e}", path.display());
            EXIT_USAGE
        })?;
        config = serde_json::from_str(&text).map_err(|e| {
            eprintln!("error: bad config {}: {e}", path.display());
            EXIT_USAGE
        })?;
        if !text.contains("\"seed\"") {
            config.seed = env_seed;
        }
    }
    if let Some(seed) = gen.seed {
        config.seed = seed;
    }
    if let Some(count) = gen.count {
        config.trace_count = count;
    }
    if let Some(len) = gen.max_len {
        config.max_trace_len = len;
    }
    if let Some(lo) = gen.int_min {
        config.int_range.0 = lo;
    }
    if let Some(hi) = gen.int_max {
        config.int_range.1 = hi;
    }
    if config.int_range.0 > config.int_range.1
        || config.max_trace_len == 0
        || config.trace_count == 0
    {
        eprintln!("error: empty generation domain");
        return Err(EXIT_USAGE);
    }
    Ok(config)
}

fn cmd_test(
    spec_path: &Path,
    impl_name: &str,
    gen: &GenFlags,
    config_path: Option<&Path>,
    json: bool,
) -> i32 {
    let started = Instant::now();
    let mut report = Report::new("test");

    let Some(entry) = find_impl(impl_name) else {
        eprintln!(
            "error: unknown implementation `{impl_name}`; available: {}",
            registry()
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
                .join(", ")
        );
        return EXIT_USAGE;
    };
    let config = match build_config(gen, config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let ts = match read_spec_file(spec_path, &mut report) {
        Ok(ts) => ts,
        Err(code) => {
            if json {
                emit(&mut report, started, true, "");
            }
            return code;
        }
    };

    // Every operation the tester could drive must be one the adapter
    // understands; a mismatched spec/impl pairing fails up front.
    for decl in ts.ast.val_decls() {
        let testable = ts.val_infos.get(&decl.name).is_some_and(|info| {
            info.has_contract
                && crate::analysis::stm_compatibility(info, entry.sut_type).is_compatible()
        });
        if testable && !entry.ops.contains(&decl.name.as_str()) {
            eprintln!(
                "error: implementation `{impl_name}` has no operation `{}`;                  it implements: {}",
                decl.name,
                entry.ops.join(", ")
            );
            return EXIT_USAGE;
        }
    }

    report.config = json!({
        "spec": spec_path.display().to_string(),
        "impl": impl_name,
        "sut_type": entry.sut_type,
        "seed": config.seed,
        "trace_count": config.trace_count,
        "max_trace_len": config.max_trace_len,
        "int_range": [config.int_range.0, config.int_range.1],
    });
    report.analysis = Some(analyze_spec(&ts, entry.sut_type, &BTreeSet::new()));

    match stm_test(&ts, entry.sut_type, &entry.make, &config) {
        Ok(result) => {
            let passed = result.passed();
            let mut human = format!(
                "test: impl {impl_name}, seed {}, {} trace(s)\n",
                config.seed, config.trace_count
            );
            human.push_str(&format!(
                "traces run: {}, passed: {}\n",
                result.traces_run, result.pass_count
            ));
            if let Some(f) = &result.failure {
                human.push_str(&format!(
                    "trace {} failed at command {}: {}\n",
                    f.trace_index, f.command_index, f.verdict
                ));
            }
            if let Some(s) = &result.shrunk {
                human.push_str(&format!(
                    "shrunk ({} command(s)): {}\n",
                    s.trace.len(),
                    s.trace.render()
                ));
                human.push_str(&format!("shrunk verdict: {}\n", s.verdict));
            }
            human.push_str(if passed { "PASS\n" } else { "FAIL\n" });
            report.test = Some(result);
            emit(&mut report, started, json, &human);
            if passed {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(e @ (StmError::NoCompatibleConstructor | StmError::NonExecutableOperation { .. })) => {
            eprintln!("error: {e}");
            EXIT_SPEC_ERROR
        }
        Err(StmError::Engine(e)) => {
            eprintln!("error: engine failure: {e}");
            EXIT_SPEC_ERROR
        }
    }
}

fn flavor_by_name(name: &str) -> Option<BfsFlavor> {
    match name {
        "check_path" | "reference" => Some(BfsFlavor::Reference),
        "mutant_G1" => Some(BfsFlavor::ForgetMark),
        "mutant_G2" => Some(BfsFlavor::SkipFirstSuccessor),
        _ => None,
    }
}

fn cmd_path(
    graph_path: &Path,
    from: &str,
    to: &str,
    monitors: bool,
    impl_name: &str,
    json: bool,
) -> i32 {
    let started = Instant::now();
    let mut report = Report::new("path");

    let Some(flavor) = flavor_by_name(impl_name) else {
        eprintln!(
            "error: unknown path implementation `{impl_name}`; \
             available: check_path, mutant_G1, mutant_G2"
        );
        return EXIT_USAGE;
    };
    let text = match std::fs::read_to_string(graph_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", graph_path.display());
            return EXIT_USAGE;
        }
    };
    let graph = match GraphModel::from_text(&text) {
        Ok(g) => Rc::new(g),
        Err(e) => {
            eprintln!("error: {}: {e}", graph_path.display());
            return EXIT_SPEC_ERROR;
        }
    };
    let Some(v1) = graph.vertex_by_label(from) else {
        eprintln!("error: unknown vertex `{from}`");
        return EXIT_USAGE;
    };
    let Some(v2) = graph.vertex_by_label(to) else {
        eprintln!("error: unknown vertex `{to}`");
        return EXIT_USAGE;
    };

    report.config = json!({
        "graph": graph_path.display().to_string(),
        "from": from,
        "to": to,
        "impl": impl_name,
        "monitors": monitors,
    });

    let opts = SearchOptions {
        monitors,
        ghost: monitors,
        step_budget: None,
    };
    let outcome = check_path_flavored(flavor, &graph, v1, v2, opts);
    let oracle = reachability_oracle(&graph, v1, v2);

    let (result_json, failure_json, human, code) = match outcome {
        Ok(result) => {
            let agreement = result == oracle;
            let human = format!(
                "check_path {from} -> {to}: {result}\noracle: {oracle}\nagreement: {}\n",
                if agreement {
                    "yes"
                } else {
                    "NO (cross-check failed)"
                }
            );
            (
                json!(result),
                serde_json::Value::Null,
                human,
                if agreement { EXIT_OK } else { EXIT_VIOLATION },
            )
        }
        Err(failure) => {
            let human = format!("check_path {from} -> {to}: FAILED\n{failure}\noracle: {oracle}\n");
            let fj = match &failure {
                SearchFailure::PreViolation => json!({ "kind": "pre-violation" }),
                SearchFailure::MonitorViolation {
                    name,
                    iteration,
                    detail,
                } => json!({
                    "kind": "monitor-violation",
                    "monitor": name,
                    "iteration": iteration,
                    "detail": detail,
                }),
                SearchFailure::BudgetExceeded { budget } => json!({
                    "kind": "budget-exceeded",
                    "budget": budget,
                }),
            };
            (serde_json::Value::Null, fj, human, EXIT_VIOLATION)
        }
    };
    report.path = Some(json!({
        "from": from,
        "to": to,
        "result": result_json,
        "oracle": oracle,
        "failure": failure_json,
    }));
    emit(&mut report, started, json, &human);
    code
}
