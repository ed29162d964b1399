//! Breadth-first path checking over a graph model, with runtime monitors
//! for the search invariants.
//!
//! The monitors are specification terms evaluated at every loop head
//! against the live search state, with `has_path` backed by the native
//! reachability oracle:
//!
//! - marked-subset: every marked vertex lies in the graph domain;
//! - correctness: every marked vertex is reachable from the source;
//! - completeness: while the search runs, any reachable target is still
//!   reachable from some vertex waiting in the queue.
//!
//! The completeness witness is produced constructively: scanning a known
//! source-to-target path for the first vertex that is marked but not yet
//! visited must land inside the queue frontier.

use crate::analysis::TermTables;
use crate::ast::Term;
use crate::eval::{eval, oracle_witness_path, EvalCtx, EvalEnv};
use crate::graph::{GraphModel, VertexId};
use crate::parser::parse_term;
use crate::typecheck::{typecheck_term, LogicalType, TypedSpec, TypedTerm};
use crate::value::{ModelState, Value};
use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::rc::Rc;
use std::sync::OnceLock;
use thiserror::Error;

/// Which search variant to run; the non-reference ones are the graph
/// mutants of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfsFlavor {
    Reference,
    /// G1: newly discovered successors are enqueued but never marked;
    /// may revisit vertices forever on cyclic graphs.
    ForgetMark,
    /// G2: skips the first successor of every visited vertex.
    SkipFirstSuccessor,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    /// Evaluate the loop-head monitors (forces ghost state on).
    pub monitors: bool,
    /// Maintain the ghost `visited` set even without monitors.
    pub ghost: bool,
    /// Loop-iteration budget; `None` picks 10 * |dom|^2.
    pub step_budget: Option<u64>,
}

impl SearchOptions {
    pub fn with_monitors() -> Self {
        SearchOptions {
            monitors: true,
            ghost: true,
            step_budget: None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SearchFailure {
    #[error("precondition violated: source vertex not in the graph domain")]
    PreViolation,
    #[error("monitor `{name}` violated at loop iteration {iteration}: {detail}")]
    MonitorViolation {
        name: String,
        iteration: u64,
        detail: String,
    },
    #[error("step budget of {budget} iterations exceeded")]
    BudgetExceeded { budget: u64 },
}

/// The monitor terms, parsed and typechecked once against the graph spec.
struct Monitors {
    spec: &'static TypedSpec,
    terms: Vec<(&'static str, Term, TypedTerm)>,
}

static MONITORS: OnceLock<Monitors> = OnceLock::new();

const MONITOR_SOURCES: [(&str, &str); 3] = [
    (
        "marked-subset",
        "forall v. Fset.mem v marked -> Fset.mem v graph.dom",
    ),
    (
        "correctness",
        "forall v. Fset.mem v marked -> has_path v1 v graph",
    ),
    (
        "completeness",
        "has_path v1 v2 graph -> exists_ w. Seq.mem w q && has_path w v2 graph",
    ),
];

fn monitors() -> &'static Monitors {
    MONITORS.get_or_init(|| {
        let spec = super::typed_spec(super::SpecKind::Graph);
        let vertex = LogicalType::Named {
            name: crate::typecheck::VERTEX_TYPE.to_string(),
            args: vec![],
        };
        let bindings = [
            (
                "graph",
                LogicalType::Named {
                    name: "gt".to_string(),
                    args: vec![],
                },
            ),
            ("v1", vertex.clone()),
            ("v2", vertex.clone()),
            ("marked", LogicalType::fset(vertex.clone())),
            ("visited", LogicalType::fset(vertex.clone())),
            ("q", LogicalType::seq(vertex)),
        ];
        let terms = MONITOR_SOURCES
            .iter()
            .map(|(name, src)| {
                let term = parse_term(src).expect("monitor source parses");
                let typed = typecheck_term(spec, &bindings, &term).expect("monitor typechecks");
                (*name, term, typed)
            })
            .collect();
        Monitors { spec, terms }
    })
}

/// First vertex along `v1 :: witness_path` that is marked but not yet
/// visited — the bridge out of the explored region. `None` means the
/// monitor state does not match its precondition.
pub fn intermediate_value(
    visited: &BTreeSet<VertexId>,
    marked: &BTreeSet<VertexId>,
    v1: VertexId,
    witness_path: &[VertexId],
) -> Option<VertexId> {
    std::iter::once(v1)
        .chain(witness_path.iter().copied())
        .find(|v| marked.contains(v) && !visited.contains(v))
}

struct SearchState {
    marked: BTreeSet<VertexId>,
    visited: BTreeSet<VertexId>,
    queue: VecDeque<VertexId>,
}

/// Breadth-first reachability from `v1` to `v2`, per the search variant.
pub fn check_path_flavored(
    flavor: BfsFlavor,
    graph: &Rc<GraphModel>,
    v1: VertexId,
    v2: VertexId,
    opts: SearchOptions,
) -> Result<bool, SearchFailure> {
    if !graph.contains(v1) {
        return Err(SearchFailure::PreViolation);
    }
    let ghost = opts.ghost || opts.monitors;
    let n = graph.dom().len() as u64;
    let budget = opts.step_budget.unwrap_or(10 * n * n);

    let mut st = SearchState {
        marked: BTreeSet::new(),
        visited: BTreeSet::new(),
        queue: VecDeque::new(),
    };
    st.marked.insert(v1);
    st.queue.push_back(v1);

    let monitor_ctx = if opts.monitors {
        let m = monitors();
        let oracle: BTreeSet<String> = ["has_path".to_string()].into();
        let ctx = EvalCtx::with_oracles(m.spec, oracle);
        // The graph never changes during the search; the target witness
        // path is fixed for the whole run.
        let target_reachable = ctx.reachable(graph, v1).contains(&v2);
        let witness = target_reachable
            .then(|| oracle_witness_path(graph, v1, v2).expect("path exists when reachable"));
        Some((m, ctx, witness))
    } else {
        None
    };

    let mut iteration: u64 = 0;
    loop {
        if let Some((m, ctx, witness)) = &monitor_ctx {
            run_monitors(m, ctx, graph, v1, v2, &st, iteration, witness.as_deref())?;
        }
        if iteration >= budget {
            return Err(SearchFailure::BudgetExceeded { budget });
        }
        iteration += 1;

        let Some(v) = st.queue.pop_front() else {
            return Ok(false);
        };
        if v == v2 {
            return Ok(true);
        }
        if ghost {
            st.visited.insert(v);
        }
        let mut successors = graph.successors(v);
        if flavor == BfsFlavor::SkipFirstSuccessor {
            let _ = successors.next();
        }
        for s in successors {
            if !st.marked.contains(&s) {
                if flavor != BfsFlavor::ForgetMark {
                    st.marked.insert(s);
                }
                st.queue.push_back(s);
            }
        }
    }
}

/// The reference path checker.
pub fn check_path(
    graph: &Rc<GraphModel>,
    v1: VertexId,
    v2: VertexId,
    opts: SearchOptions,
) -> Result<bool, SearchFailure> {
    check_path_flavored(BfsFlavor::Reference, graph, v1, v2, opts)
}

#[allow(clippy::too_many_arguments)]
fn run_monitors(
    m: &Monitors,
    ctx: &EvalCtx,
    graph: &Rc<GraphModel>,
    v1: VertexId,
    v2: VertexId,
    st: &SearchState,
    iteration: u64,
    witness: Option<&[VertexId]>,
) -> Result<(), SearchFailure> {
    let violation = |name: &str, detail: String| SearchFailure::MonitorViolation {
        name: name.to_string(),
        iteration,
        detail,
    };

    // The corpus marks before enqueuing, so the queue carries no
    // duplicates and always equals marked \ visited.
    let queue_set: BTreeSet<VertexId> = st.queue.iter().copied().collect();
    if queue_set.len() != st.queue.len() {
        return Err(violation(
            "queue-frontier",
            "queue contains duplicate vertices".to_string(),
        ));
    }
    let frontier: BTreeSet<VertexId> = st.marked.difference(&st.visited).copied().collect();
    if queue_set != frontier {
        return Err(violation(
            "queue-frontier",
            format!(
                "queue {:?} differs from marked \\ visited {:?}",
                queue_set, frontier
            ),
        ));
    }

    // Spec-term monitors.
    let models = ModelState::new();
    for (name, term, typed) in &m.terms {
        let mut env = EvalEnv::new(&models);
        bind_search_state(&mut env, graph, v1, v2, st);
        match eval(ctx, tables_of(typed), &mut env, term) {
            Ok(Value::Bool(true)) => {}
            Ok(_) => {
                return Err(violation(name, "invariant evaluated to false".to_string()));
            }
            Err(e) => {
                return Err(violation(name, format!("evaluation failed: {e}")));
            }
        }
    }

    // Constructive completeness witness.
    if let Some(witness) = witness {
        match intermediate_value(&st.visited, &st.marked, v1, witness) {
            Some(w) => {
                if !st.queue.contains(&w) {
                    return Err(violation(
                        "completeness-witness",
                        format!("bridge vertex v{w} is not in the queue frontier"),
                    ));
                }
                if !ctx.reachable(graph, w).contains(&v2) {
                    return Err(violation(
                        "completeness-witness",
                        format!("bridge vertex v{w} cannot reach the target"),
                    ));
                }
            }
            None => {
                return Err(violation(
                    "completeness-witness",
                    "no marked-but-unvisited vertex on the witness path".to_string(),
                ));
            }
        }
    }
    Ok(())
}

fn tables_of(t: &TypedTerm) -> TermTables<'_> {
    t.tables()
}

fn bind_search_state(
    env: &mut EvalEnv,
    graph: &Rc<GraphModel>,
    v1: VertexId,
    v2: VertexId,
    st: &SearchState,
) {
    env.push("graph", Value::Graph(graph.clone()));
    env.push("v1", Value::Vertex(v1));
    env.push("v2", Value::Vertex(v2));
    env.push(
        "marked",
        Value::set(st.marked.iter().map(|v| Value::Vertex(*v))),
    );
    env.push(
        "visited",
        Value::set(st.visited.iter().map(|v| Value::Vertex(*v))),
    );
    env.push("q", Value::seq(st.queue.iter().map(|v| Value::Vertex(*v))));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::reachability_oracle;

    fn chain() -> Rc<GraphModel> {
        Rc::new(GraphModel::new([0, 1, 2], [(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn trivial_self_path() {
        let g = chain();
        assert_eq!(check_path(&g, 1, 1, SearchOptions::default()), Ok(true));
    }

    #[test]
    fn chain_is_connected_forward_only() {
        let g = chain();
        assert_eq!(check_path(&g, 0, 2, SearchOptions::default()), Ok(true));
        assert_eq!(check_path(&g, 2, 0, SearchOptions::default()), Ok(false));
    }

    #[test]
    fn separate_components_unreachable() {
        let g = Rc::new(GraphModel::new([0, 1], []).unwrap());
        assert_eq!(check_path(&g, 0, 1, SearchOptions::default()), Ok(false));
    }

    #[test]
    fn source_outside_domain_is_a_precondition_violation() {
        let g = chain();
        assert_eq!(
            check_path(&g, 9, 0, SearchOptions::default()),
            Err(SearchFailure::PreViolation)
        );
    }

    #[test]
    fn monitors_pass_on_reference_search() {
        let g = chain();
        for v1 in 0..3 {
            for v2 in 0..3 {
                let r = check_path(&g, v1, v2, SearchOptions::with_monitors()).unwrap();
                assert_eq!(r, reachability_oracle(&g, v1, v2));
            }
        }
    }

    #[test]
    fn ghost_state_has_no_runtime_implications() {
        let g = chain();
        for v1 in 0..3 {
            for v2 in 0..3 {
                let plain = check_path(&g, v1, v2, SearchOptions::default());
                let ghost = check_path(
                    &g,
                    v1,
                    v2,
                    SearchOptions {
                        ghost: true,
                        ..SearchOptions::default()
                    },
                );
                let monitored = check_path(&g, v1, v2, SearchOptions::with_monitors());
                assert_eq!(plain, ghost);
                assert_eq!(plain, monitored);
            }
        }
    }

    #[test]
    fn intermediate_value_examples() {
        // v1 marked but not visited, empty path: the bridge is v1 itself.
        let marked: BTreeSet<u32> = [0].into();
        let visited = BTreeSet::new();
        assert_eq!(intermediate_value(&visited, &marked, 0, &[]), Some(0));

        // chain 0->1->2, visited {0}, frontier {1}, witness [1, 2].
        let marked: BTreeSet<u32> = [0, 1].into();
        let visited: BTreeSet<u32> = [0].into();
        assert_eq!(intermediate_value(&visited, &marked, 0, &[1, 2]), Some(1));

        // chain 0->1->2->3, visited {0,1}, frontier {2}, witness [1,2,3].
        let marked: BTreeSet<u32> = [0, 1, 2].into();
        let visited: BTreeSet<u32> = [0, 1].into();
        assert_eq!(
            intermediate_value(&visited, &marked, 0, &[1, 2, 3]),
            Some(2)
        );
    }

    #[test]
    fn skip_first_successor_misses_paths() {
        let g = chain();
        let r = check_path_flavored(
            BfsFlavor::SkipFirstSuccessor,
            &g,
            0,
            2,
            SearchOptions::default(),
        );
        assert_eq!(r, Ok(false));
        assert!(reachability_oracle(&g, 0, 2));
    }

    #[test]
    fn forget_mark_exceeds_budget_on_cycles() {
        // 0 -> 1 -> 2 -> 1 with unreachable target 3.
        let g = Rc::new(GraphModel::new([0, 1, 2, 3], [(0, 1), (1, 2), (2, 1)]).unwrap());
        let r = check_path_flavored(BfsFlavor::ForgetMark, &g, 0, 3, SearchOptions::default());
        assert_eq!(r, Err(SearchFailure::BudgetExceeded { budget: 10 * 16 }));
    }

    #[test]
    fn forget_mark_trips_monitors() {
        let g = chain();
        let r = check_path_flavored(
            BfsFlavor::ForgetMark,
            &g,
            0,
            2,
            SearchOptions::with_monitors(),
        );
        // Either a monitor fires or the result still matches; on this chain
        // the frontier consistency breaks as soon as an unmarked vertex is
        // enqueued.
        assert!(
            matches!(r, Err(SearchFailure::MonitorViolation { .. })),
            "{r:?}"
        );
    }
}
