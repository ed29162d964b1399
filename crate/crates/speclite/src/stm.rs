//! State-machine random testing: generate seeded command traces over the
//! compatible operations of a spec, run them through the contract-checking
//! engine, and shrink failing traces to 1-minimal counterexamples.

use crate::analysis::{classify_predicates, classify_val, stm_compatibility, StmVerdict};
use crate::eval::EvalCtx;
use crate::rac::{check_call, CallArg, EngineError, ImplAdapter, Verdict};
use crate::typecheck::{LogicalType, TypedSpec};
use crate::value::{InstanceId, ModelState, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;
use thiserror::Error;

/// Domains used to instantiate the SUT's type parameters, positionally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenType {
    Int,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub trace_count: usize,
    pub max_trace_len: usize,
    /// Inclusive bounds for generated integers.
    pub int_range: (i64, i64),
    /// Domain for the SUT's first type parameter (keys/elements).
    pub key_type: GenType,
    /// Domain for the SUT's second type parameter (values).
    pub value_type: GenType,
    /// Per-operation weights; unlisted operations weigh 1.
    pub weights: BTreeMap<String, u32>,
    /// Allow extra constructor commands creating additional SUT slots.
    pub allow_multiple_suts: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            trace_count: 1000,
            max_trace_len: 20,
            int_range: (-100, 100),
            key_type: GenType::Int,
            value_type: GenType::Bool,
            weights: BTreeMap::new(),
            allow_multiple_suts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceArg {
    Value(Value),
    /// Reference to the SUT created by the n-th constructor command.
    Slot(usize),
}

impl TraceArg {
    fn to_json(&self) -> serde_json::Value {
        match self {
            TraceArg::Value(v) => v.to_json(),
            TraceArg::Slot(i) => json!({ "slot": i }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub op: String,
    pub args: Vec<TraceArg>,
}

impl Command {
    fn to_json(&self) -> serde_json::Value {
        json!({
            "op": self.op,
            "args": self.args.iter().map(TraceArg::to_json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub commands: Vec<Command>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.commands.iter().map(Command::to_json).collect())
    }

    pub fn render(&self) -> String {
        self.commands
            .iter()
            .map(|c| {
                let args: Vec<String> = c
                    .args
                    .iter()
                    .map(|a| match a {
                        TraceArg::Value(v) => v.to_string(),
                        TraceArg::Slot(i) => format!("<sut{i}>"),
                    })
                    .collect();
                if args.is_empty() {
                    c.op.clone()
                } else {
                    format!("{} {}", c.op, args.join(" "))
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StmError {
    #[error("no state-machine-compatible constructor in the spec")]
    NoCompatibleConstructor,
    #[error("operation `{op}` is compatible but not executable")]
    NonExecutableOperation { op: String },
    #[error("engine error: {0}")]
    Engine(#[from] EngineError),
}

/// One operation eligible for trace generation.
struct OpShape {
    name: String,
    constructor: bool,
    /// Per parameter: `None` for the SUT position, a generated type
    /// otherwise; optional parameters are omitted (generated as unit).
    params: Vec<OpParam>,
}

enum OpParam {
    Sut,
    Omitted,
    Gen(LogicalType),
}

fn instantiate(ty: &LogicalType, params: &HashMap<String, GenType>) -> LogicalType {
    match ty {
        LogicalType::Param(p) => match params.get(p) {
            Some(GenType::Int) | None => LogicalType::Int,
            Some(GenType::Bool) => LogicalType::Bool,
        },
        LogicalType::Tuple(ts) => {
            LogicalType::Tuple(ts.iter().map(|t| instantiate(t, params)).collect())
        }
        LogicalType::List(t) => LogicalType::list(instantiate(t, params)),
        LogicalType::Seq(t) => LogicalType::seq(instantiate(t, params)),
        _ => ty.clone(),
    }
}

fn op_shapes(
    spec: &TypedSpec,
    sut_type: &str,
    config: &GenConfig,
) -> Result<Vec<OpShape>, StmError> {
    let domains = [config.key_type, config.value_type];
    let pred_verdicts = classify_predicates(spec, &BTreeSet::new());
    let mut out = Vec::new();
    for decl in spec.ast.val_decls() {
        let Some(info) = spec.val_infos.get(&decl.name) else {
            continue;
        };
        if !info.has_contract {
            continue;
        }
        let StmVerdict::Compatible { constructor } = stm_compatibility(info, sut_type) else {
            continue;
        };
        match classify_val(spec, decl, &BTreeSet::new(), &pred_verdicts) {
            Some(v) if v.is_executable() => {}
            _ => {
                return Err(StmError::NonExecutableOperation {
                    op: decl.name.clone(),
                })
            }
        }

        // Positional type-parameter instantiation from the SUT occurrence.
        let sut_occurrence = info
            .params
            .iter()
            .map(|p| &p.ty)
            .chain(std::iter::once(&info.result_ty))
            .find_map(|ty| match ty.head_named() {
                Some((name, args)) if name == sut_type => Some(args),
                _ => None,
            });
        let mut param_domains: HashMap<String, GenType> = HashMap::new();
        if let Some(args) = sut_occurrence {
            for (i, arg) in args.iter().enumerate() {
                if let LogicalType::Param(p) = arg {
                    param_domains.insert(p.clone(), *domains.get(i).unwrap_or(&GenType::Int));
                }
            }
        }

        let params = info
            .params
            .iter()
            .map(|p| {
                if matches!(p.ty.head_named(), Some((n, _)) if n == sut_type) {
                    OpParam::Sut
                } else if p.optional {
                    OpParam::Omitted
                } else {
                    OpParam::Gen(instantiate(&p.ty, &param_domains))
                }
            })
            .collect();
        out.push(OpShape {
            name: decl.name.clone(),
            constructor,
            params,
        });
    }
    if !out.iter().any(|o| o.constructor) {
        return Err(StmError::NoCompatibleConstructor);
    }
    Ok(out)
}

fn gen_value(rng: &mut ChaCha8Rng, ty: &LogicalType, config: &GenConfig) -> Value {
    match ty {
        LogicalType::Int => Value::Int(rng.random_range(config.int_range.0..=config.int_range.1)),
        LogicalType::Bool => Value::Bool(rng.random_bool(0.5)),
        LogicalType::Unit => Value::Unit,
        LogicalType::Tuple(ts) => {
            Value::Tuple(ts.iter().map(|t| gen_value(rng, t, config)).collect())
        }
        LogicalType::List(t) | LogicalType::Seq(t) => {
            let len = rng.random_range(0..=3);
            Value::Seq((0..len).map(|_| gen_value(rng, t, config)).collect())
        }
        _ => Value::Unit,
    }
}

fn weighted_pick<'a>(
    rng: &mut ChaCha8Rng,
    pool: &'a [&OpShape],
    weights: &BTreeMap<String, u32>,
) -> &'a OpShape {
    let total: u64 = pool
        .iter()
        .map(|o| u64::from(*weights.get(&o.name).unwrap_or(&1)))
        .sum();
    let mut roll = rng.random_range(0..total.max(1));
    for op in pool {
        let w = u64::from(*weights.get(&op.name).unwrap_or(&1));
        if roll < w {
            return op;
        }
        roll -= w;
    }
    pool.last().expect("non-empty pool")
}

/// Generate the `index`-th trace for a configuration. Deterministic in
/// `(config.seed, index)`.
pub fn generate_trace(
    spec: &TypedSpec,
    sut_type: &str,
    config: &GenConfig,
    index: u64,
) -> Result<Trace, StmError> {
    let shapes = op_shapes(spec, sut_type, config)?;
    Ok(generate_with_shapes(&shapes, config, index))
}

fn generate_with_shapes(shapes: &[OpShape], config: &GenConfig, index: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);

    let constructors: Vec<&OpShape> = shapes.iter().filter(|o| o.constructor).collect();
    let others: Vec<&OpShape> = shapes.iter().filter(|o| !o.constructor).collect();
    let pool: Vec<&OpShape> = if config.allow_multiple_suts {
        shapes.iter().collect()
    } else {
        others.clone()
    };

    let target_len = rng.random_range(1..=config.max_trace_len.max(1));
    let mut commands = Vec::with_capacity(target_len);
    let mut slots = 0usize;

    let first = weighted_pick(&mut rng, &constructors, &config.weights);
    commands.push(emit(&mut rng, first, &mut slots, config));

    while commands.len() < target_len && !pool.is_empty() {
        let op = weighted_pick(&mut rng, &pool, &config.weights);
        commands.push(emit(&mut rng, op, &mut slots, config));
    }
    Trace { commands }
}

fn emit(rng: &mut ChaCha8Rng, op: &OpShape, slots: &mut usize, config: &GenConfig) -> Command {
    let args = op
        .params
        .iter()
        .map(|p| match p {
            OpParam::Sut => TraceArg::Slot(rng.random_range(0..(*slots).max(1))),
            OpParam::Omitted => TraceArg::Value(Value::Unit),
            OpParam::Gen(ty) => TraceArg::Value(gen_value(rng, ty, config)),
        })
        .collect();
    if op.constructor {
        *slots += 1;
    }
    Command {
        op: op.name.clone(),
        args,
    }
}

/// Result of running one trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Index and verdict of the first failing command, if any.
    pub failure: Option<(usize, Verdict)>,
    pub final_state: ModelState,
    /// Instance ids per slot, in creation order.
    pub slots: Vec<InstanceId>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Run a trace against an adapter, threading the model state and stopping
/// at the first non-pass verdict.
pub fn run_trace(
    spec: &TypedSpec,
    trace: &Trace,
    adapter: &mut dyn ImplAdapter,
) -> Result<RunOutcome, EngineError> {
    let ctx = EvalCtx::new(spec);
    let mut state = ModelState::new();
    let mut slots: Vec<InstanceId> = Vec::new();
    for (i, cmd) in trace.commands.iter().enumerate() {
        let args: Vec<CallArg> = cmd
            .args
            .iter()
            .map(|a| match a {
                TraceArg::Value(v) => Ok(CallArg::Value(v.clone())),
                TraceArg::Slot(s) => slots
                    .get(*s)
                    .copied()
                    .map(CallArg::Sut)
                    .ok_or_else(|| EngineError::BadCall(format!("slot {s} not yet created"))),
            })
            .collect::<Result<_, _>>()?;
        let report = check_call(&ctx, &cmd.op, adapter, &state, &args)?;
        state = report.state;
        if let Some(id) = report.created {
            slots.push(id);
        }
        if !report.verdict.is_pass() {
            return Ok(RunOutcome {
                failure: Some((i, report.verdict)),
                final_state: state,
                slots,
            });
        }
    }
    Ok(RunOutcome {
        failure: None,
        final_state: state,
        slots,
    })
}

/// Shrinking candidates for one argument value, stepping toward
/// zero/false/empty.
pub fn reductions(v: &Value) -> Vec<Value> {
    match v {
        Value::Int(n) => {
            let mut out = Vec::new();
            if *n != 0 {
                out.push(Value::Int(0));
                let half = n / 2;
                if half != *n {
                    out.push(Value::Int(half));
                }
                let step = n - n.signum();
                out.push(Value::Int(step));
            }
            out.sort();
            out.dedup();
            out.retain(|c| c != v);
            out
        }
        Value::Bool(true) => vec![Value::Bool(false)],
        Value::Seq(items) if !items.is_empty() => {
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut shorter = items.clone();
                shorter.remove(i);
                out.push(Value::Seq(shorter));
            }
            for (i, item) in items.iter().enumerate() {
                for r in reductions(item) {
                    let mut next = items.clone();
                    next[i] = r;
                    out.push(Value::Seq(next));
                }
            }
            out
        }
        Value::Tuple(items) => {
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                for r in reductions(item) {
                    let mut next = items.clone();
                    next[i] = r;
                    out.push(Value::Tuple(next));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Operations whose result is a declared SUT type (so running them mints
/// a new slot).
fn constructor_ops(spec: &TypedSpec) -> BTreeSet<String> {
    spec.val_infos
        .values()
        .filter(|info| {
            matches!(info.result_ty.head_named(),
                Some((name, _)) if spec.type_infos.contains_key(name))
        })
        .map(|info| info.name.clone())
        .collect()
}

/// Remove command `index`, remapping slot references. `None` when a later
/// command references the removed constructor's slot.
fn delete_command(trace: &Trace, index: usize, ctors: &BTreeSet<String>) -> Option<Trace> {
    let removed_slot: Option<usize> = {
        let mut next_slot = 0;
        let mut slot = None;
        for (i, c) in trace.commands.iter().enumerate() {
            let is_ctor = ctors.contains(&c.op);
            if i == index {
                if is_ctor {
                    slot = Some(next_slot);
                }
                break;
            }
            if is_ctor {
                next_slot += 1;
            }
        }
        slot
    };
    let mut commands = Vec::with_capacity(trace.len() - 1);
    for (i, c) in trace.commands.iter().enumerate() {
        if i == index {
            continue;
        }
        let mut cmd = c.clone();
        if let Some(rs) = removed_slot {
            for arg in &mut cmd.args {
                if let TraceArg::Slot(s) = arg {
                    match (*s).cmp(&rs) {
                        std::cmp::Ordering::Equal => return None,
                        std::cmp::Ordering::Greater => *s -= 1,
                        std::cmp::Ordering::Less => {}
                    }
                }
            }
        }
        commands.push(cmd);
    }
    let shrunk = Trace { commands };
    well_formed(&shrunk, ctors).then_some(shrunk)
}

fn well_formed(trace: &Trace, ctors: &BTreeSet<String>) -> bool {
    let mut slots = 0usize;
    for c in &trace.commands {
        for a in &c.args {
            if let TraceArg::Slot(s) = a {
                if *s >= slots {
                    return false;
                }
            }
        }
        if ctors.contains(&c.op) {
            slots += 1;
        }
    }
    true
}

/// Shrink a failing trace: command-deletion passes before single-argument
/// reduction passes, repeated to a fixpoint. The result still fails with
/// the same verdict variant and is 1-minimal for those moves.
pub fn shrink(
    spec: &TypedSpec,
    trace: &Trace,
    make_adapter: &dyn Fn() -> Box<dyn ImplAdapter>,
    target_variant: &'static str,
) -> Trace {
    let fails = |t: &Trace| -> bool {
        let mut adapter = make_adapter();
        matches!(
            run_trace(spec, t, adapter.as_mut()),
            Ok(RunOutcome { failure: Some((_, v)), .. }) if v.variant_name() == target_variant
        )
    };

    let ctors = constructor_ops(spec);
    let mut current = trace.clone();
    'outer: loop {
        for i in 0..current.len() {
            if let Some(candidate) = delete_command(&current, i, &ctors) {
                if fails(&candidate) {
                    current = candidate;
                    continue 'outer;
                }
            }
        }
        for (ci, cmd) in current.commands.iter().enumerate() {
            for (ai, arg) in cmd.args.iter().enumerate() {
                let TraceArg::Value(v) = arg else { continue };
                for r in reductions(v) {
                    let mut candidate = current.clone();
                    candidate.commands[ci].args[ai] = TraceArg::Value(r);
                    if fails(&candidate) {
                        current = candidate;
                        continue 'outer;
                    }
                }
            }
        }
        return current;
    }
}

/// No single deletion nor any single argument reduction of `trace` still
/// fails with the target variant.
pub fn is_one_minimal(
    spec: &TypedSpec,
    trace: &Trace,
    make_adapter: &dyn Fn() -> Box<dyn ImplAdapter>,
    target_variant: &'static str,
) -> bool {
    let fails = |t: &Trace| -> bool {
        let mut adapter = make_adapter();
        matches!(
            run_trace(spec, t, adapter.as_mut()),
            Ok(RunOutcome { failure: Some((_, v)), .. }) if v.variant_name() == target_variant
        )
    };
    let ctors = constructor_ops(spec);
    for i in 0..trace.len() {
        if let Some(candidate) = delete_command(trace, i, &ctors) {
            if fails(&candidate) {
                return false;
            }
        }
    }
    for (ci, cmd) in trace.commands.iter().enumerate() {
        for (ai, arg) in cmd.args.iter().enumerate() {
            let TraceArg::Value(v) = arg else { continue };
            for r in reductions(v) {
                let mut candidate = trace.clone();
                candidate.commands[ci].args[ai] = TraceArg::Value(r);
                if fails(&candidate) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct FailureInfo {
    pub trace_index: u64,
    pub trace: Trace,
    pub command_index: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct TestReport {
    pub seed: u64,
    pub traces_run: u64,
    pub pass_count: u64,
    pub failure: Option<FailureInfo>,
    pub shrunk: Option<FailureInfo>,
    pub elapsed_ms: u128,
}

impl TestReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let failure_json = |f: &FailureInfo| {
            json!({
                "trace_index": f.trace_index,
                "trace": f.trace.to_json(),
                "command_index": f.command_index,
                "verdict": f.verdict.to_json(),
            })
        };
        json!({
            "seed": self.seed,
            "traces_run": self.traces_run,
            "pass_count": self.pass_count,
            "failure": self.failure.as_ref().map(failure_json),
            "shrunk": self.shrunk.as_ref().map(failure_json),
        })
    }
}

/// Run `config.trace_count` generated traces, stopping at (and shrinking)
/// the first failure. Deterministic for a fixed configuration, up to the
/// wall-clock field.
pub fn test(
    spec: &TypedSpec,
    sut_type: &str,
    make_adapter: &dyn Fn() -> Box<dyn ImplAdapter>,
    config: &GenConfig,
) -> Result<TestReport, StmError> {
    let started = Instant::now();
    let shapes = op_shapes(spec, sut_type, config)?;

    let mut pass_count = 0u64;
    let mut traces_run = 0u64;
    let mut failure = None;
    let mut shrunk = None;

    for index in 0..config.trace_count as u64 {
        let trace = generate_with_shapes(&shapes, config, index);
        let mut adapter = make_adapter();
        let outcome = run_trace(spec, &trace, adapter.as_mut())?;
        traces_run += 1;
        match outcome.failure {
            None => pass_count += 1,
            Some((command_index, verdict)) => {
                let variant = verdict.variant_name();
                let minimal = shrink(spec, &trace, make_adapter, variant);
                let mut shrunk_adapter = make_adapter();
                let shrunk_outcome = run_trace(spec, &minimal, shrunk_adapter.as_mut())?;
                let (sc, sv) = shrunk_outcome
                    .failure
                    .expect("shrunk trace re-fails by construction");
                failure = Some(FailureInfo {
                    trace_index: index,
                    trace,
                    command_index,
                    verdict,
                });
                shrunk = Some(FailureInfo {
                    trace_index: index,
                    trace: minimal,
                    command_index: sc,
                    verdict: sv,
                });
                break;
            }
        }
    }

    Ok(TestReport {
        seed: config.seed,
        traces_run,
        pass_count,
        failure,
        shrunk,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::queue::{LinkedQueueAdapter, QueueMutation, TwoListQueueAdapter};
    use crate::corpus::{typed_spec, SpecKind};

    fn queue_spec() -> &'static TypedSpec {
        typed_spec(SpecKind::QueueExec)
    }

    fn two_list_factory() -> Box<dyn ImplAdapter> {
        Box::new(TwoListQueueAdapter::reference())
    }

    #[test]
    fn traces_begin_with_a_constructor() {
        let config = GenConfig {
            seed: 42,
            ..GenConfig::default()
        };
        for index in 0..50 {
            let t = generate_trace(queue_spec(), "t", &config, index).unwrap();
            assert_eq!(t.commands[0].op, "create", "trace {index}");
            assert!(!t.is_empty());
        }
    }

    #[test]
    fn transfer_never_appears_in_generated_traces() {
        // The full queue spec declares transfer, which is incompatible.
        let spec = typed_spec(SpecKind::QueueFig1);
        let config = GenConfig::default();
        for index in 0..100 {
            let t = generate_trace(spec, "t", &config, index).unwrap();
            assert!(t.commands.iter().all(|c| c.op != "transfer"));
        }
    }

    #[test]
    fn max_len_one_gives_single_constructor_traces() {
        let config = GenConfig {
            max_trace_len: 1,
            ..GenConfig::default()
        };
        for index in 0..20 {
            let t = generate_trace(queue_spec(), "t", &config, index).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t.commands[0].op, "create");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GenConfig {
            seed: 7,
            ..GenConfig::default()
        };
        for index in 0..20 {
            let a = generate_trace(queue_spec(), "t", &config, index).unwrap();
            let b = generate_trace(queue_spec(), "t", &config, index).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn no_constructor_is_a_config_error() {
        let src = "type 'a t\n(*@ mutable model elems : 'a list *)\nval pop : 'a t -> 'a\n(*@ x = pop q\n    modifies q\n    ensures x :: q.elems = old q.elems *)";
        let spec =
            crate::typecheck::typecheck(crate::parser::parse_interface(src).unwrap()).unwrap();
        let err = generate_trace(&spec, "t", &GenConfig::default(), 0).unwrap_err();
        assert_eq!(err, StmError::NoCompatibleConstructor);
    }

    #[test]
    fn push_then_pop_runs_clean() {
        let trace = Trace {
            commands: vec![
                Command {
                    op: "create".into(),
                    args: vec![TraceArg::Value(Value::Unit)],
                },
                Command {
                    op: "push".into(),
                    args: vec![TraceArg::Value(Value::Int(1)), TraceArg::Slot(0)],
                },
                Command {
                    op: "pop".into(),
                    args: vec![TraceArg::Slot(0)],
                },
            ],
        };
        let mut adapter = TwoListQueueAdapter::reference();
        let out = run_trace(queue_spec(), &trace, &mut adapter).unwrap();
        assert!(out.passed());
        let id = out.slots[0];
        assert_eq!(out.final_state.get(id, "elems"), Some(&Value::Seq(vec![])));
    }

    #[test]
    fn pop_on_fresh_queue_passes_via_raises_clause() {
        let trace = Trace {
            commands: vec![
                Command {
                    op: "create".into(),
                    args: vec![TraceArg::Value(Value::Unit)],
                },
                Command {
                    op: "pop".into(),
                    args: vec![TraceArg::Slot(0)],
                },
            ],
        };
        let mut adapter = TwoListQueueAdapter::reference();
        let out = run_trace(queue_spec(), &trace, &mut adapter).unwrap();
        assert!(out.passed());
    }

    #[test]
    fn reference_queue_1000_traces_all_pass() {
        let config = GenConfig {
            seed: 7,
            trace_count: 1000,
            ..GenConfig::default()
        };
        let report = test(queue_spec(), "t", &two_list_factory, &config).unwrap();
        assert!(report.passed(), "failure: {:?}", report.failure);
        assert_eq!(report.pass_count, 1000);
        assert_eq!(report.traces_run, 1000);
    }

    #[test]
    fn pop_default_mutant_shrinks_to_create_pop() {
        let config = GenConfig {
            seed: 7,
            trace_count: 5000,
            ..GenConfig::default()
        };
        let factory = || -> Box<dyn ImplAdapter> {
            Box::new(TwoListQueueAdapter::new(QueueMutation::PopEmptyDefault))
        };
        let report = test(queue_spec(), "t", &factory, &config).unwrap();
        let shrunk = report.shrunk.expect("mutant must be detected");
        assert_eq!(shrunk.trace.len(), 2, "shrunk: {}", shrunk.trace.render());
        assert_eq!(shrunk.trace.commands[0].op, "create");
        assert_eq!(shrunk.trace.commands[1].op, "pop");
        assert_eq!(shrunk.verdict.variant_name(), "post-violation");
    }

    #[test]
    fn pop_no_remove_mutant_shrinks_small() {
        let config = GenConfig {
            seed: 11,
            trace_count: 5000,
            ..GenConfig::default()
        };
        let factory = || -> Box<dyn ImplAdapter> {
            Box::new(TwoListQueueAdapter::new(QueueMutation::PopNoRemove))
        };
        let report = test(queue_spec(), "t", &factory, &config).unwrap();
        let shrunk = report.shrunk.expect("mutant must be detected");
        assert!(shrunk.trace.len() <= 4, "shrunk: {}", shrunk.trace.render());
        assert!(is_one_minimal(
            queue_spec(),
            &shrunk.trace,
            &factory,
            shrunk.verdict.variant_name()
        ));
    }

    #[test]
    fn shrunk_traces_refail_and_are_one_minimal() {
        for (mutation, seed) in [
            (QueueMutation::PushPrepends, 3u64),
            (QueueMutation::PopEmptyDefault, 5),
            (QueueMutation::IsEmptyFalse, 9),
        ] {
            let factory =
                move || -> Box<dyn ImplAdapter> { Box::new(TwoListQueueAdapter::new(mutation)) };
            let config = GenConfig {
                seed,
                trace_count: 5000,
                ..GenConfig::default()
            };
            let report = test(queue_spec(), "t", &factory, &config).unwrap();
            let shrunk = report.shrunk.expect("mutant detected");
            let variant = shrunk.verdict.variant_name();
            let mut adapter = factory();
            let rerun = run_trace(queue_spec(), &shrunk.trace, adapter.as_mut()).unwrap();
            assert_eq!(rerun.failure.map(|(_, v)| v.variant_name()), Some(variant));
            assert!(is_one_minimal(
                queue_spec(),
                &shrunk.trace,
                &factory,
                variant
            ));
        }
    }

    #[test]
    fn already_minimal_trace_is_a_shrink_fixpoint() {
        let trace = Trace {
            commands: vec![
                Command {
                    op: "create".into(),
                    args: vec![TraceArg::Value(Value::Unit)],
                },
                Command {
                    op: "pop".into(),
                    args: vec![TraceArg::Slot(0)],
                },
            ],
        };
        let factory = || -> Box<dyn ImplAdapter> {
            Box::new(TwoListQueueAdapter::new(QueueMutation::PopEmptyDefault))
        };
        let shrunk = shrink(queue_spec(), &trace, &factory, "post-violation");
        assert_eq!(shrunk, trace);
    }

    #[test]
    fn generator_covers_all_small_queue_shapes() {
        // Across a 1000-seed sweep with max_trace_len = 4, every shape of
        // length <= 3 must appear: [create] and [create; x...] over
        // {push, pop, is_empty}.
        let mut expected: BTreeSet<Vec<String>> = BTreeSet::new();
        let ops = ["push", "pop", "is_empty"];
        expected.insert(vec!["create".into()]);
        for a in ops {
            expected.insert(vec!["create".into(), a.into()]);
            for b in ops {
                expected.insert(vec!["create".into(), a.into(), b.into()]);
            }
        }
        let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
        for seed in 0..1000 {
            let config = GenConfig {
                seed,
                max_trace_len: 4,
                ..GenConfig::default()
            };
            let t = generate_trace(queue_spec(), "t", &config, 0).unwrap();
            if t.len() <= 3 {
                seen.insert(t.commands.iter().map(|c| c.op.clone()).collect());
            }
        }
        let missing: Vec<_> = expected.difference(&seen).collect();
        assert!(missing.is_empty(), "missing shapes: {missing:?}");
    }

    /// Direct interpretation of the queue contracts: create gives the
    /// empty model, push appends, pop removes the head or leaves the empty
    /// model unchanged, is_empty observes.
    fn reference_executor(trace: &Trace) -> Vec<Value> {
        let mut model: Vec<Value> = Vec::new();
        for cmd in &trace.commands {
            match cmd.op.as_str() {
                "create" => model.clear(),
                "push" => {
                    if let Some(TraceArg::Value(v)) =
                        cmd.args.iter().find(|a| matches!(a, TraceArg::Value(_)))
                    {
                        model.push(v.clone());
                    }
                }
                "pop" => {
                    if !model.is_empty() {
                        model.remove(0);
                    }
                }
                "is_empty" => {}
                other => panic!("unexpected op {other}"),
            }
        }
        model
    }

    #[test]
    fn run_trace_model_matches_reference_executor() {
        for seed in 0..300 {
            let config = GenConfig {
                seed,
                max_trace_len: 5,
                ..GenConfig::default()
            };
            let trace = generate_trace(queue_spec(), "t", &config, 0).unwrap();
            let mut adapter = TwoListQueueAdapter::reference();
            let out = run_trace(queue_spec(), &trace, &mut adapter).unwrap();
            assert!(out.passed());
            let id = out.slots[0];
            let got = out.final_state.get(id, "elems").unwrap();
            assert_eq!(*got, Value::Seq(reference_executor(&trace)));
        }
    }

    #[test]
    fn linked_queue_agrees_with_two_list_on_traces() {
        for seed in 0..200 {
            let config = GenConfig {
                seed,
                max_trace_len: 8,
                ..GenConfig::default()
            };
            let trace = generate_trace(queue_spec(), "t", &config, 0).unwrap();
            let mut a = TwoListQueueAdapter::reference();
            let mut b = LinkedQueueAdapter::new();
            let out_a = run_trace(queue_spec(), &trace, &mut a).unwrap();
            let out_b = run_trace(queue_spec(), &trace, &mut b).unwrap();
            assert!(out_a.passed() && out_b.passed());
            assert_eq!(out_a.final_state, out_b.final_state);
        }
    }

    #[test]
    fn report_json_is_deterministic() {
        let config = GenConfig {
            seed: 7,
            trace_count: 50,
            ..GenConfig::default()
        };
        let a = test(queue_spec(), "t", &two_list_factory, &config).unwrap();
        let b = test(queue_spec(), "t", &two_list_factory, &config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn reductions_move_toward_zero() {
        assert_eq!(
            reductions(&Value::Int(8)),
            vec![Value::Int(0), Value::Int(4), Value::Int(7)]
        );
        assert_eq!(
            reductions(&Value::Int(-3)),
            vec![Value::Int(-2), Value::Int(-1), Value::Int(0)]
        );
        assert!(reductions(&Value::Int(0)).is_empty());
        assert_eq!(reductions(&Value::Bool(true)), vec![Value::Bool(false)]);
        assert!(reductions(&Value::Bool(false)).is_empty());
    }
}

#[cfg(test)]
mod multi_sut_tests {
    use super::*;
    use crate::corpus::queue::TwoListQueueAdapter;
    use crate::corpus::{typed_spec, SpecKind};

    #[test]
    fn multiple_sut_slots_generate_and_run_clean() {
        let spec = typed_spec(SpecKind::QueueExec);
        let config = GenConfig {
            seed: 13,
            trace_count: 300,
            allow_multiple_suts: true,
            ..GenConfig::default()
        };
        let mut saw_second_constructor = false;
        for index in 0..300u64 {
            let trace = generate_trace(spec, "t", &config, index).unwrap();
            let ctor_count = trace.commands.iter().filter(|c| c.op == "create").count();
            if ctor_count > 1 {
                saw_second_constructor = true;
            }
            let mut adapter = TwoListQueueAdapter::reference();
            let out = run_trace(spec, &trace, &mut adapter).unwrap();
            assert!(out.passed(), "trace {index}: {:?}", out.failure);
        }
        assert!(
            saw_second_constructor,
            "multi-SUT mode never created a second slot"
        );
    }
}

#[cfg(test)]
mod hashtbl_mutant_tests {
    use super::*;
    use crate::corpus::hashtbl::{BucketHashtblAdapter, HashtblMutation};
    use crate::corpus::{typed_spec, SpecKind};

    #[test]
    fn mem_always_true_shrinks_to_create_mem() {
        let spec = typed_spec(SpecKind::HashtblFull);
        let factory = || -> Box<dyn ImplAdapter> {
            Box::new(BucketHashtblAdapter::new(HashtblMutation::MemAlwaysTrue))
        };
        let config = GenConfig {
            seed: 7,
            trace_count: 5000,
            ..GenConfig::default()
        };
        let report = test(spec, "t", &factory, &config).unwrap();
        let shrunk = report.shrunk.expect("H2 detected");
        let ops: Vec<&str> = shrunk
            .trace
            .commands
            .iter()
            .map(|c| c.op.as_str())
            .collect();
        assert_eq!(ops, ["create", "mem"], "shrunk: {}", shrunk.trace.render());
        assert_eq!(shrunk.verdict.variant_name(), "post-violation");
    }
}
