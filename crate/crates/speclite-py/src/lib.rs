//! Python bindings: parse and analyze specs, run the state-machine tester
//! against the built-in implementations, and drive the graph path checker.
//!
//! Structured results come back as JSON strings; decode with `json.loads`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;
use speclite::analysis::{analyze_spec, default_sut_type};
use speclite::corpus::graph_check::{check_path_flavored, BfsFlavor, SearchOptions};
use speclite::corpus::{find_impl, registry, spec_text, SpecKind};
use speclite::eval::reachability_oracle;
use speclite::graph::GraphModel;
use speclite::printer::pretty_print;
use speclite::report::analysis_json;
use speclite::stm::{test as stm_test, GenConfig};
use speclite::typecheck::{typecheck, TypedSpec};
use std::collections::BTreeSet;
use std::rc::Rc;

fn value_err(msg: impl Into<String>) -> PyErr {
    PyValueError::new_err(msg.into())
}

/// A parsed and typechecked specification interface.
#[pyclass(frozen)]
struct Spec {
    inner: TypedSpec,
}

#[pymethods]
impl Spec {
    /// Parse and typecheck interface text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Spec> {
        let parsed = speclite::parse_interface(text).map_err(|e| value_err(e.to_string()))?;
        let inner = typecheck(parsed).map_err(|errors| {
            let lines: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
            value_err(lines.join("\n"))
        })?;
        Ok(Spec { inner })
    }

    /// Canonical pretty-printed form; re-parses to the same structure.
    fn pretty(&self) -> String {
        pretty_print(&self.inner.ast)
    }

    /// Declarations as (name, kind) pairs, in source order.
    fn declarations(&self) -> Vec<(String, String)> {
        self.inner
            .ast
            .decls
            .iter()
            .map(|d| {
                let kind = match d {
                    speclite::ast::Decl::Type(_) => "type",
                    speclite::ast::Decl::Val(_) => "val",
                    speclite::ast::Decl::Exn(_) => "exception",
                    speclite::ast::Decl::Pred(_) => "predicate",
                };
                (d.name().to_string(), kind.to_string())
            })
            .collect()
    }

    /// Per-declaration executability and tester compatibility, as JSON.
    #[pyo3(signature = (sut_type=None))]
    fn analyze(&self, sut_type: Option<&str>) -> String {
        let sut = sut_type
            .map(str::to_string)
            .or_else(|| default_sut_type(&self.inner))
            .unwrap_or_else(|| "t".to_string());
        let analysis = analyze_spec(&self.inner, &sut, &BTreeSet::new());
        analysis_json(&analysis).to_string()
    }
}

/// Built-in implementations as (name, description) pairs.
#[pyfunction]
fn implementations() -> Vec<(String, String)> {
    registry()
        .into_iter()
        .map(|e| (e.name.to_string(), e.description.to_string()))
        .collect()
}

/// Text of a built-in corpus spec: queue, queue_exec, hashtbl,
/// hashtbl_full, or graph.
#[pyfunction]
fn corpus_spec(name: &str) -> PyResult<String> {
    let kind = match name {
        "queue" => SpecKind::QueueFig1,
        "queue_exec" => SpecKind::QueueExec,
        "hashtbl" => SpecKind::HashtblFig3,
        "hashtbl_full" => SpecKind::HashtblFull,
        "graph" => SpecKind::Graph,
        other => return Err(value_err(format!("unknown corpus spec `{other}`"))),
    };
    Ok(spec_text(kind).to_string())
}

/// State-machine test of a built-in implementation against a spec.
/// Returns the test report as JSON.
#[pyfunction]
#[pyo3(signature = (spec, impl_name, seed=0, count=1000, max_len=20))]
fn run_test(
    spec: &Spec,
    impl_name: &str,
    seed: u64,
    count: usize,
    max_len: usize,
) -> PyResult<String> {
    let entry = find_impl(impl_name)
        .ok_or_else(|| value_err(format!("unknown implementation `{impl_name}`")))?;
    let config = GenConfig {
        seed,
        trace_count: count,
        max_trace_len: max_len,
        ..GenConfig::default()
    };
    let report = stm_test(&spec.inner, entry.sut_type, &entry.make, &config)
        .map_err(|e| value_err(e.to_string()))?;
    Ok(report.to_json().to_string())
}

/// Run the path checker (optionally a mutant flavor) with the oracle
/// cross-check. Returns JSON: result, oracle, agreement, failure.
#[pyfunction]
#[pyo3(signature = (graph_text, from_vertex, to_vertex, monitors=false, flavor="check_path"))]
fn check_path(
    graph_text: &str,
    from_vertex: &str,
    to_vertex: &str,
    monitors: bool,
    flavor: &str,
) -> PyResult<String> {
    let flavor = match flavor {
        "check_path" | "reference" => BfsFlavor::Reference,
        "mutant_G1" => BfsFlavor::ForgetMark,
        "mutant_G2" => BfsFlavor::SkipFirstSuccessor,
        other => return Err(value_err(format!("unknown flavor `{other}`"))),
    };
    let graph = Rc::new(GraphModel::from_text(graph_text).map_err(|e| value_err(e.to_string()))?);
    let v1 = graph
        .vertex_by_label(from_vertex)
        .ok_or_else(|| value_err(format!("unknown vertex `{from_vertex}`")))?;
    let v2 = graph
        .vertex_by_label(to_vertex)
        .ok_or_else(|| value_err(format!("unknown vertex `{to_vertex}`")))?;
    let opts = SearchOptions {
        monitors,
        ghost: monitors,
        step_budget: None,
    };
    let oracle = reachability_oracle(&graph, v1, v2);
    let out = match check_path_flavored(flavor, &graph, v1, v2, opts) {
        Ok(result) => json!({
            "result": result,
            "oracle": oracle,
            "agreement": result == oracle,
            "failure": serde_json::Value::Null,
        }),
        Err(failure) => json!({
            "result": serde_json::Value::Null,
            "oracle": oracle,
            "agreement": false,
            "failure": failure.to_string(),
        }),
    };
    Ok(out.to_string())
}

#[pymodule]
fn speclite_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spec>()?;
    m.add_function(wrap_pyfunction!(implementations, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_spec, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(check_path, m)?)?;
    m.add("__version__", speclite::report::TOOL_VERSION)?;
    Ok(())
}
