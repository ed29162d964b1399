//! Runtime contract checking: wrap one implementation call with
//! precondition checks, an `old`-state snapshot, model advancement from
//! determinate postconditions, exception matching, frame verification,
//! and type-invariant checks.

use crate::ast::{CmpOp, Term, TermKind, TypeDecl, ValDecl};
use crate::eval::{eval, EvalCtx, EvalEnv, SpecErrorKind, SpecRuntimeError};
use crate::span::Span;
use crate::typecheck::ChainMode;
use crate::value::{InstanceId, ModelState, Value};
use serde_json::json;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// One argument position of a checked call: either a plain logical value
/// or a handle to a live SUT instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallArg {
    Value(Value),
    Sut(InstanceId),
}

impl CallArg {
    fn to_value(&self) -> Value {
        match self {
            CallArg::Value(v) => v.clone(),
            CallArg::Sut(id) => Value::Instance(*id),
        }
    }
}

/// What an adapter operation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterOutcome {
    /// Normal return (use `Value::Unit` for unit results).
    Value(Value),
    /// A constructor created a fresh instance.
    NewInstance(InstanceId),
    /// The call raised the named exception.
    Raised(String),
}

/// A candidate implementation driven as a black box: constructors mint
/// opaque instance handles, operations act on them.
pub trait ImplAdapter {
    fn call(&mut self, op: &str, args: &[CallArg]) -> AdapterOutcome;

    /// Representation invariant of one instance, checked against the
    /// logical model after each passing call. `None` when the adapter does
    /// not expose one.
    fn rep_invariant(
        &self,
        instance: InstanceId,
        models: &ModelState,
    ) -> Option<Result<(), String>> {
        let _ = (instance, models);
        None
    }
}

/// Outcome classification for one checked call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    PreViolation {
        clause: Span,
    },
    PostViolation {
        clause: Span,
        old_models: ModelState,
        new_models: ModelState,
        args: Vec<Value>,
        result: Option<Value>,
    },
    ModifiesViolation {
        instance: InstanceId,
        field: String,
    },
    RaisesViolation {
        exn: String,
        clause: Span,
    },
    UnexpectedException {
        exn: String,
    },
    TypeInvariantViolation {
        type_name: String,
        instance: InstanceId,
        detail: String,
    },
    SpecError {
        kind: SpecErrorKind,
        span: Span,
        message: String,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PreViolation { .. } => "pre-violation",
            Verdict::PostViolation { .. } => "post-violation",
            Verdict::ModifiesViolation { .. } => "modifies-violation",
            Verdict::RaisesViolation { .. } => "raises-violation",
            Verdict::UnexpectedException { .. } => "unexpected-exception",
            Verdict::TypeInvariantViolation { .. } => "type-invariant-violation",
            Verdict::SpecError { .. } => "spec-runtime-error",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let span_json = |s: &Span| json!({ "line": s.line, "col": s.col });
        match self {
            Verdict::Pass => json!({ "verdict": "pass" }),
            Verdict::PreViolation { clause } => json!({
                "verdict": "pre-violation",
                "clause": span_json(clause),
            }),
            Verdict::PostViolation {
                clause,
                old_models,
                new_models,
                args,
                result,
            } => json!({
                "verdict": "post-violation",
                "clause": span_json(clause),
                "old_models": old_models.to_json(),
                "new_models": new_models.to_json(),
                "args": args.iter().map(Value::to_json).collect::<Vec<_>>(),
                "result": result.as_ref().map(Value::to_json),
            }),
            Verdict::ModifiesViolation { instance, field } => json!({
                "verdict": "modifies-violation",
                "instance": instance,
                "field": field,
            }),
            Verdict::RaisesViolation { exn, clause } => json!({
                "verdict": "raises-violation",
                "exception": exn,
                "clause": span_json(clause),
            }),
            Verdict::UnexpectedException { exn } => json!({
                "verdict": "unexpected-exception",
                "exception": exn,
            }),
            Verdict::TypeInvariantViolation {
                type_name,
                instance,
                detail,
            } => json!({
                "verdict": "type-invariant-violation",
                "type": type_name,
                "instance": instance,
                "detail": detail,
            }),
            Verdict::SpecError {
                kind,
                span,
                message,
            } => json!({
                "verdict": "spec-runtime-error",
                "kind": format!("{kind:?}"),
                "clause": span_json(span),
                "message": message,
            }),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::PreViolation { clause } => {
                write!(f, "precondition violated (clause at {clause})")
            }
            Verdict::PostViolation { clause, result, .. } => {
                write!(f, "postcondition violated (clause at {clause}")?;
                if let Some(r) = result {
                    write!(f, ", result {r}")?;
                }
                write!(f, ")")
            }
            Verdict::ModifiesViolation { instance, field } => write!(
                f,
                "frame violated: sut#{instance}.{field} changed outside the modifies clause"
            ),
            Verdict::RaisesViolation { exn, clause } => {
                write!(
                    f,
                    "raises condition for {exn} violated (clause at {clause})"
                )
            }
            Verdict::UnexpectedException { exn } => {
                write!(f, "unexpected exception {exn}")
            }
            Verdict::TypeInvariantViolation {
                type_name,
                instance,
                detail,
            } => {
                write!(
                    f,
                    "type invariant of {type_name} violated on sut#{instance}: {detail}"
                )
            }
            Verdict::SpecError {
                kind,
                span,
                message,
            } => {
                write!(f, "spec runtime error ({kind:?}) at {span}: {message}")
            }
        }
    }
}

/// Result of one checked call.
#[derive(Debug, Clone)]
pub struct CallReport {
    pub verdict: Verdict,
    pub state: ModelState,
    pub result: Option<Value>,
    /// Fresh instance id when the call was a constructor.
    pub created: Option<InstanceId>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("aliased SUT arguments at positions {0:?}")]
    Alias(Vec<usize>),
    #[error("{0}")]
    BadCall(String),
}

/// Distinct-instance check over the SUT argument positions.
pub fn check_alias(args: &[CallArg]) -> Result<(), EngineError> {
    let mut seen: Vec<(usize, InstanceId)> = Vec::new();
    let mut offending = Vec::new();
    for (i, arg) in args.iter().enumerate() {
        if let CallArg::Sut(id) = arg {
            if let Some((j, _)) = seen.iter().find(|(_, other)| other == id) {
                if offending.is_empty() {
                    offending.push(*j);
                }
                offending.push(i);
            }
            seen.push((i, *id));
        }
    }
    if offending.is_empty() {
        Ok(())
    } else {
        Err(EngineError::Alias(offending))
    }
}

/// The role a postcondition conjunct plays.
enum ClauseRole<'t> {
    /// `p.field = rhs`: assign the right side (evaluated over the
    /// pre-state and arguments) to the model field.
    Update {
        param: &'t str,
        field: &'t str,
        rhs: UpdateRhs<'t>,
    },
    Check(&'t Term),
}

enum UpdateRhs<'t> {
    Term(&'t Term),
    /// Tail of an equality chain `p.field = a = b`: the assigned value is
    /// `a`, and `a = b` remains as a check.
    ChainTerm(&'t Term),
}

/// Split a clause into top-level conjuncts.
fn conjuncts(term: &Term) -> Vec<&Term> {
    match &term.kind {
        TermKind::Binary {
            op: crate::ast::BinOp::And,
            lhs,
            rhs,
        } => {
            let mut out = conjuncts(lhs);
            out.extend(conjuncts(rhs));
            out
        }
        _ => vec![term],
    }
}

/// Does `old <...result...>` appear anywhere in the term?
fn old_captures_result(term: &Term, result: &str) -> bool {
    term.any_subterm(&mut |t| {
        matches!(&t.kind, TermKind::Old(inner)
            if inner.any_subterm(&mut |s| matches!(&s.kind, TermKind::Var(v) if v == result)))
    })
}

fn classify_clause<'t>(
    ctx: &EvalCtx,
    conjunct: &'t Term,
    sut_params: &BTreeSet<String>,
    result_name: Option<&str>,
    constructor_result: Option<&str>,
) -> ClauseRole<'t> {
    if let TermKind::Compare { first, rest } = &conjunct.kind {
        let mode = ctx.spec.chain_mode(conjunct.id);
        if mode == ChainMode::Conjunction && !rest.is_empty() && rest[0].0 == CmpOp::Eq {
            if let TermKind::Field { base, field } = &first.kind {
                if let TermKind::Var(p) = &base.kind {
                    let updatable =
                        sut_params.contains(p.as_str()) || constructor_result == Some(p.as_str());
                    let rhs_ok = match result_name {
                        Some(r) => !old_captures_result(&rest[0].1, r),
                        None => true,
                    };
                    if updatable && rhs_ok && rest.len() == 1 {
                        return ClauseRole::Update {
                            param: p,
                            field,
                            rhs: UpdateRhs::Term(&rest[0].1),
                        };
                    }
                    if updatable && rhs_ok && rest.len() > 1 {
                        // `p.f = a = b ...`: assign `a`, keep the chain as
                        // a check too.
                        return ClauseRole::Update {
                            param: p,
                            field,
                            rhs: UpdateRhs::ChainTerm(&rest[0].1),
                        };
                    }
                }
            }
        }
    }
    ClauseRole::Check(conjunct)
}

struct CallShape<'s> {
    val: &'s ValDecl,
    param_names: Vec<Option<String>>,
    sut_params: BTreeSet<String>,
    /// (param name, instance, type name) per SUT argument.
    sut_instances: Vec<(String, InstanceId, String)>,
    result_name: Option<String>,
    result_type_name: Option<String>,
    expects_new_instance: bool,
}

/// Check one call to `op` against its contract.
///
/// Preconditions are evaluated on the pre-state; on success the adapter is
/// invoked, determinate postconditions advance the model, remaining
/// clauses are checked, unmodified fields are compared against the
/// snapshot, and type invariants are re-established.
pub fn check_call(
    ctx: &EvalCtx,
    op: &str,
    adapter: &mut dyn ImplAdapter,
    state: &ModelState,
    args: &[CallArg],
) -> Result<CallReport, EngineError> {
    let shape = call_shape(ctx, op, args)?;
    check_alias(args)?;

    let contract = shape.val.contract.as_ref().expect("checked in call_shape");

    // Step 1: preconditions on the pre-state; a failure means the call is
    // not forwarded.
    {
        let mut env = EvalEnv::new(state);
        bind_args(&mut env, &shape, args);
        for clause in &contract.requires {
            match eval(ctx, ctx.spec.tables(), &mut env, clause) {
                Ok(Value::Bool(true)) => {}
                Ok(_) => {
                    return Ok(CallReport {
                        verdict: Verdict::PreViolation {
                            clause: clause.span,
                        },
                        state: state.clone(),
                        result: None,
                        created: None,
                    });
                }
                Err(e) => return Ok(spec_error_report(state, e)),
            }
        }
    }

    // Step 2: snapshot the pre-state for `old` and the frame check.
    let snapshot = state.clone();

    // Step 3: invoke the implementation.
    let outcome = adapter.call(op, args);

    let mut new_state = snapshot.clone();
    let mut created = None;

    let (raised, result_value) = match outcome {
        AdapterOutcome::Raised(exn) => (Some(exn), None),
        AdapterOutcome::NewInstance(id) => {
            if !shape.expects_new_instance {
                return Err(EngineError::BadCall(format!(
                    "operation `{op}` returned a new instance but its result type is not a declared SUT type"
                )));
            }
            if state.instances().contains(&id) {
                return Err(EngineError::BadCall(format!(
                    "adapter reused instance id {id}"
                )));
            }
            created = Some(id);
            (None, Some(Value::Instance(id)))
        }
        AdapterOutcome::Value(v) => {
            if shape.expects_new_instance {
                return Err(EngineError::BadCall(format!(
                    "constructor `{op}` returned a plain value instead of an instance"
                )));
            }
            (None, Some(v))
        }
    };

    let writable = writable_fields(ctx, &shape, created);

    match raised {
        None => {
            // Step 4: split postconditions into model updates and checks.
            let constructor_result = if created.is_some() {
                shape.result_name.as_deref()
            } else {
                None
            };
            let mut checks: Vec<&Term> = Vec::new();
            let mut updates = Vec::new();
            for clause in &contract.ensures {
                for conjunct in conjuncts(clause) {
                    match classify_clause(
                        ctx,
                        conjunct,
                        &shape.sut_params,
                        shape.result_name.as_deref(),
                        constructor_result,
                    ) {
                        ClauseRole::Update { param, field, rhs } => {
                            updates.push((param, field, rhs, conjunct))
                        }
                        ClauseRole::Check(t) => checks.push(t),
                    }
                }
            }

            // Apply updates: right sides see the pre-state.
            for (param, field, rhs, conjunct) in updates {
                let instance = match instance_of(&shape, param, created) {
                    Some(id) => id,
                    None => {
                        return Err(EngineError::BadCall(format!(
                            "model update targets unknown parameter `{param}`"
                        )))
                    }
                };
                let (rhs_term, keep_check) = match rhs {
                    UpdateRhs::Term(t) => (t, false),
                    UpdateRhs::ChainTerm(t) => (t, true),
                };
                let value = {
                    let mut env = EvalEnv::with_old(&snapshot, &snapshot);
                    bind_args(&mut env, &shape, args);
                    bind_result(&mut env, &shape, &result_value);
                    match eval(ctx, ctx.spec.tables(), &mut env, rhs_term) {
                        Ok(v) => v,
                        Err(e) => return Ok(spec_error_report(state, e)),
                    }
                };
                new_state.set(instance, field, value);
                if keep_check {
                    checks.push(conjunct);
                }
            }

            // New instances must have every model field initialized.
            if let Some(id) = created {
                if let Some(tname) = &shape.result_type_name {
                    if let Some(info) = ctx.spec.type_infos.get(tname) {
                        for m in &info.models {
                            if new_state.get(id, &m.name).is_none() {
                                return Ok(spec_error_report(
                                    state,
                                    SpecRuntimeError {
                                        kind: SpecErrorKind::Internal,
                                        span: contract.span,
                                        message: format!(
                                            "constructor contract leaves model field `{}` uninitialized",
                                            m.name
                                        ),
                                    },
                                ));
                            }
                        }
                    }
                }
            }

            // Evaluate the remaining postconditions.
            for clause in checks {
                let mut env = EvalEnv::with_old(&new_state, &snapshot);
                bind_args(&mut env, &shape, args);
                bind_result(&mut env, &shape, &result_value);
                match eval(ctx, ctx.spec.tables(), &mut env, clause) {
                    Ok(Value::Bool(true)) => {}
                    Ok(_) => {
                        return Ok(CallReport {
                            verdict: Verdict::PostViolation {
                                clause: clause.span,
                                old_models: snapshot.clone(),
                                new_models: new_state.clone(),
                                args: args.iter().map(CallArg::to_value).collect(),
                                result: result_value.clone(),
                            },
                            state: new_state,
                            result: result_value,
                            created,
                        });
                    }
                    Err(e) => return Ok(spec_error_report(state, e)),
                }
            }
        }
        Some(exn) => {
            // Step 5: exceptional return. The model stays at the pre-state
            // unless a determinate raises conjunct updates it.
            let Some(clause) = contract.raises.iter().find(|r| r.exn == exn) else {
                return Ok(CallReport {
                    verdict: Verdict::UnexpectedException { exn },
                    state: new_state,
                    result: None,
                    created: None,
                });
            };
            let mut checks: Vec<&Term> = Vec::new();
            for conjunct in conjuncts(&clause.condition) {
                match classify_clause(
                    ctx,
                    conjunct,
                    &shape.sut_params,
                    shape.result_name.as_deref(),
                    None,
                ) {
                    ClauseRole::Update { param, field, rhs } => {
                        let instance = match instance_of(&shape, param, created) {
                            Some(id) => id,
                            None => {
                                return Err(EngineError::BadCall(format!(
                                    "model update targets unknown parameter `{param}`"
                                )))
                            }
                        };
                        let (rhs_term, keep_check) = match rhs {
                            UpdateRhs::Term(t) => (t, false),
                            UpdateRhs::ChainTerm(t) => (t, true),
                        };
                        let value = {
                            let mut env = EvalEnv::with_old(&snapshot, &snapshot);
                            bind_args(&mut env, &shape, args);
                            match eval(ctx, ctx.spec.tables(), &mut env, rhs_term) {
                                Ok(v) => v,
                                Err(e) => return Ok(spec_error_report(state, e)),
                            }
                        };
                        new_state.set(instance, field, value);
                        if keep_check {
                            checks.push(conjunct);
                        }
                    }
                    ClauseRole::Check(t) => checks.push(t),
                }
            }
            for check in checks {
                let mut env = EvalEnv::with_old(&new_state, &snapshot);
                bind_args(&mut env, &shape, args);
                match eval(ctx, ctx.spec.tables(), &mut env, check) {
                    Ok(Value::Bool(true)) => {}
                    Ok(_) => {
                        return Ok(CallReport {
                            verdict: Verdict::RaisesViolation {
                                exn,
                                clause: check.span,
                            },
                            state: new_state,
                            result: None,
                            created: None,
                        });
                    }
                    Err(e) => return Ok(spec_error_report(state, e)),
                }
            }
        }
    }

    // Step 6: frame check. Everything outside the modifies set must equal
    // the snapshot, field by field.
    let keys: BTreeSet<(InstanceId, String)> = new_state
        .iter()
        .map(|(k, _)| k.clone())
        .chain(snapshot.iter().map(|(k, _)| k.clone()))
        .collect();
    for (instance, field) in keys {
        if writable.contains(&(instance, field.clone())) {
            continue;
        }
        if new_state.get(instance, &field) != snapshot.get(instance, &field) {
            return Ok(CallReport {
                verdict: Verdict::ModifiesViolation { instance, field },
                state: new_state,
                result: result_value,
                created,
            });
        }
    }

    // Step 7: type invariants and adapter representation invariants on
    // every instance the call touched.
    let mut touched: Vec<(String, InstanceId)> = shape
        .sut_instances
        .iter()
        .map(|(_, id, tname)| (tname.clone(), *id))
        .collect();
    if let (Some(id), Some(tname)) = (created, &shape.result_type_name) {
        touched.push((tname.clone(), id));
    }
    for (type_name, instance) in &touched {
        if let Some(decl) = ctx.spec.ast.find_type(type_name) {
            if let Some(verdict) = check_type_invariant(ctx, decl, *instance, &new_state, &snapshot)
            {
                return Ok(CallReport {
                    verdict,
                    state: new_state,
                    result: result_value,
                    created,
                });
            }
        }
        if let Some(Err(detail)) = adapter.rep_invariant(*instance, &new_state) {
            return Ok(CallReport {
                verdict: Verdict::TypeInvariantViolation {
                    type_name: type_name.clone(),
                    instance: *instance,
                    detail,
                },
                state: new_state,
                result: result_value,
                created,
            });
        }
    }

    Ok(CallReport {
        verdict: Verdict::Pass,
        state: new_state,
        result: result_value,
        created,
    })
}

fn check_type_invariant(
    ctx: &EvalCtx,
    decl: &TypeDecl,
    instance: InstanceId,
    state: &ModelState,
    snapshot: &ModelState,
) -> Option<Verdict> {
    let inv = decl.invariant.as_ref()?;
    let mut env = EvalEnv::with_old(state, snapshot);
    env.push(&inv.binder, Value::Instance(instance));
    match eval(ctx, ctx.spec.tables(), &mut env, &inv.body) {
        Ok(Value::Bool(true)) => None,
        Ok(_) => Some(Verdict::TypeInvariantViolation {
            type_name: decl.name.clone(),
            instance,
            detail: "declared type invariant evaluated to false".to_string(),
        }),
        Err(e) => Some(Verdict::SpecError {
            kind: e.kind,
            span: e.span,
            message: e.message,
        }),
    }
}

fn spec_error_report(state: &ModelState, e: SpecRuntimeError) -> CallReport {
    CallReport {
        verdict: Verdict::SpecError {
            kind: e.kind,
            span: e.span,
            message: e.message,
        },
        state: state.clone(),
        result: None,
        created: None,
    }
}

fn call_shape<'s>(
    ctx: &EvalCtx<'s>,
    op: &str,
    args: &[CallArg],
) -> Result<CallShape<'s>, EngineError> {
    let val = ctx
        .spec
        .ast
        .find_val(op)
        .ok_or_else(|| EngineError::BadCall(format!("unknown operation `{op}`")))?;
    if val.contract.is_none() {
        return Err(EngineError::BadCall(format!(
            "operation `{op}` has no contract"
        )));
    }
    let info = ctx
        .spec
        .val_infos
        .get(op)
        .ok_or_else(|| EngineError::BadCall(format!("unknown operation `{op}`")))?;
    if args.len() != info.params.len() {
        return Err(EngineError::BadCall(format!(
            "operation `{op}` expects {} argument(s), got {}",
            info.params.len(),
            args.len()
        )));
    }

    let mut sut_params = BTreeSet::new();
    let mut sut_instances = Vec::new();
    for (p, arg) in info.params.iter().zip(args) {
        if let CallArg::Sut(id) = arg {
            let Some((tname, _)) = p.ty.head_named() else {
                return Err(EngineError::BadCall(format!(
                    "instance passed for non-SUT parameter of `{op}`"
                )));
            };
            if let Some(name) = &p.name {
                sut_params.insert(name.clone());
                sut_instances.push((name.clone(), *id, tname.to_string()));
            }
        }
    }

    let result_type_name = info
        .result_ty
        .head_named()
        .map(|(n, _)| n.to_string())
        .filter(|n| ctx.spec.type_infos.contains_key(n));

    Ok(CallShape {
        val,
        param_names: info.params.iter().map(|p| p.name.clone()).collect(),
        sut_params,
        sut_instances,
        result_name: info.result_name.clone(),
        result_type_name: result_type_name.clone(),
        expects_new_instance: result_type_name.is_some(),
    })
}

fn bind_args(env: &mut EvalEnv, shape: &CallShape, args: &[CallArg]) {
    for (name, arg) in shape.param_names.iter().zip(args) {
        if let Some(n) = name {
            env.push(n, arg.to_value());
        }
    }
}

fn bind_result(env: &mut EvalEnv, shape: &CallShape, result: &Option<Value>) {
    if let (Some(name), Some(v)) = (&shape.result_name, result) {
        env.push(name, v.clone());
    }
}

fn instance_of(shape: &CallShape, param: &str, created: Option<InstanceId>) -> Option<InstanceId> {
    if let Some((_, id, _)) = shape.sut_instances.iter().find(|(n, _, _)| n == param) {
        return Some(*id);
    }
    if shape.result_name.as_deref() == Some(param) {
        return created;
    }
    None
}

fn writable_fields(
    ctx: &EvalCtx,
    shape: &CallShape,
    created: Option<InstanceId>,
) -> BTreeSet<(InstanceId, String)> {
    let mut out = BTreeSet::new();
    let contract = shape.val.contract.as_ref().expect("contract present");
    for target in &contract.modifies {
        let Some(instance) = instance_of(shape, &target.param, created) else {
            continue;
        };
        let tname = shape
            .sut_instances
            .iter()
            .find(|(n, _, _)| *n == target.param)
            .map(|(_, _, t)| t.clone());
        match &target.field {
            Some(f) => {
                out.insert((instance, f.clone()));
            }
            None => {
                if let Some(info) = tname.and_then(|t| ctx.spec.type_infos.get(&t)) {
                    for m in info.models.iter().filter(|m| m.mutable) {
                        out.insert((instance, m.name.clone()));
                    }
                }
            }
        }
    }
    if let (Some(id), Some(tname)) = (created, &shape.result_type_name) {
        if let Some(info) = ctx.spec.type_infos.get(tname) {
            for m in &info.models {
                out.insert((id, m.name.clone()));
            }
        }
    }
    out
}
