//! Evaluation of executable specification terms, plus the graph-reachability
//! oracles used by the case corpus.

use crate::analysis::{bounded_plan, DomainExpr, TermTables};
use crate::ast::{BinOp, CmpOp, QuantKind, Term, TermKind};
use crate::graph::{GraphModel, VertexId};
use crate::span::Span;
use crate::typecheck::{ChainMode, StdFn, SymbolRef, TypedSpec};
use crate::value::{FunKind, FunValue, ModelState, Value};
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SpecErrorKind {
    HeadOfEmpty,
    TailOfEmpty,
    IndexOutOfBounds,
    DivisionByZero,
    Overflow,
    /// Engine misuse: unbound variable, unbounded quantifier at runtime,
    /// uninitialized model field. Indicates a bug in the caller, not in
    /// the specification or the implementation under test.
    Internal,
}

/// A specification defect observed while evaluating a clause. Reported as a
/// spec error, never as an implementation violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecRuntimeError {
    pub kind: SpecErrorKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for SpecRuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "spec runtime error at {}: {}", self.span, self.message)
    }
}

pub type EvalResult = Result<Value, SpecRuntimeError>;

fn err(kind: SpecErrorKind, span: Span, message: impl Into<String>) -> SpecRuntimeError {
    SpecRuntimeError {
        kind,
        span,
        message: message.into(),
    }
}

type ReachCache = HashMap<(usize, VertexId), Rc<BTreeSet<VertexId>>>;

/// Shared evaluation context: the spec (for predicate bodies), the set of
/// predicates backed by native oracles, and a memo of reachable sets.
pub struct EvalCtx<'a> {
    pub spec: &'a TypedSpec,
    pub oracle_backed: BTreeSet<String>,
    reach_cache: RefCell<ReachCache>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(spec: &'a TypedSpec) -> Self {
        EvalCtx {
            spec,
            oracle_backed: BTreeSet::new(),
            reach_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn with_oracles(spec: &'a TypedSpec, oracle_backed: BTreeSet<String>) -> Self {
        EvalCtx {
            spec,
            oracle_backed,
            reach_cache: RefCell::new(HashMap::new()),
        }
    }

    /// Memoized reachable set per (graph, source).
    pub fn reachable(&self, g: &Rc<GraphModel>, from: VertexId) -> Rc<BTreeSet<VertexId>> {
        let key = (Rc::as_ptr(g) as usize, from);
        if let Some(hit) = self.reach_cache.borrow().get(&key) {
            return hit.clone();
        }
        let set = Rc::new(reachable_set(g, from));
        self.reach_cache.borrow_mut().insert(key, set.clone());
        set
    }
}

/// Variable bindings and the model-state view for one clause evaluation.
pub struct EvalEnv<'a> {
    bindings: Vec<(String, Value)>,
    pub models: &'a ModelState,
    pub old_models: Option<&'a ModelState>,
    in_old: bool,
}

impl<'a> EvalEnv<'a> {
    pub fn new(models: &'a ModelState) -> Self {
        EvalEnv {
            bindings: Vec::new(),
            models,
            old_models: None,
            in_old: false,
        }
    }

    pub fn with_old(models: &'a ModelState, old: &'a ModelState) -> Self {
        EvalEnv {
            bindings: Vec::new(),
            models,
            old_models: Some(old),
            in_old: false,
        }
    }

    pub fn bind(mut self, name: &str, value: Value) -> Self {
        self.bindings.push((name.to_string(), value));
        self
    }

    pub fn push(&mut self, name: &str, value: Value) {
        self.bindings.push((name.to_string(), value));
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    fn view(&self) -> &ModelState {
        if self.in_old {
            self.old_models.expect("old snapshot present")
        } else {
            self.models
        }
    }
}

/// Evaluate a typed term. The term must have classified executable; hitting
/// an unbounded quantifier here is an internal error.
pub fn eval(ctx: &EvalCtx, tables: TermTables, env: &mut EvalEnv, term: &Term) -> EvalResult {
    use TermKind::*;
    match &term.kind {
        Int(n) => Ok(Value::Int(*n)),
        Bool(b) => Ok(Value::Bool(*b)),
        Unit => Ok(Value::Unit),
        EmptyList => Ok(Value::Seq(Vec::new())),
        Var(name) => match tables.symbol(term.id) {
            Some(SymbolRef::Predicate(p)) => Ok(Value::Fun(FunValue {
                kind: FunKind::Predicate(p.clone()),
                args: Vec::new(),
            })),
            Some(SymbolRef::Stdlib(f)) => Ok(Value::Fun(FunValue {
                kind: FunKind::Std(*f),
                args: Vec::new(),
            })),
            _ => env.lookup(name).cloned().ok_or_else(|| {
                err(
                    SpecErrorKind::Internal,
                    term.span,
                    format!("unbound variable `{name}`"),
                )
            }),
        },
        Tuple(items) => {
            let mut vs = Vec::with_capacity(items.len());
            for item in items {
                vs.push(eval(ctx, tables, env, item)?);
            }
            Ok(Value::Tuple(vs))
        }
        ListLit(items) => {
            let mut vs = Vec::with_capacity(items.len());
            for item in items {
                vs.push(eval(ctx, tables, env, item)?);
            }
            Ok(Value::Seq(vs))
        }
        Cons(h, t) => {
            let hv = eval(ctx, tables, env, h)?;
            let tv = eval(ctx, tables, env, t)?;
            match tv {
                Value::Seq(mut items) => {
                    items.insert(0, hv);
                    Ok(Value::Seq(items))
                }
                other => Err(err(
                    SpecErrorKind::Internal,
                    t.span,
                    format!("cons onto non-sequence value {other}"),
                )),
            }
        }
        Append(a, b) => {
            let av = eval(ctx, tables, env, a)?;
            let bv = eval(ctx, tables, env, b)?;
            match (av, bv) {
                (Value::Seq(mut xs), Value::Seq(ys)) => {
                    xs.extend(ys);
                    Ok(Value::Seq(xs))
                }
                _ => Err(err(
                    SpecErrorKind::Internal,
                    term.span,
                    "append over non-sequence values",
                )),
            }
        }
        Compare { first, rest } => eval_chain(ctx, tables, env, term, first, rest),
        Binary { op, lhs, rhs } => match op {
            BinOp::And => {
                if !eval_bool(ctx, tables, env, lhs)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(eval_bool(ctx, tables, env, rhs)?))
            }
            BinOp::Or => {
                if eval_bool(ctx, tables, env, lhs)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(eval_bool(ctx, tables, env, rhs)?))
            }
            BinOp::Implies => {
                if !eval_bool(ctx, tables, env, lhs)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(eval_bool(ctx, tables, env, rhs)?))
            }
            BinOp::Iff => {
                let l = eval_bool(ctx, tables, env, lhs)?;
                let r = eval_bool(ctx, tables, env, rhs)?;
                Ok(Value::Bool(l == r))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                let l = eval_int(ctx, tables, env, lhs)?;
                let r = eval_int(ctx, tables, env, rhs)?;
                arith(*op, l, r, term.span).map(Value::Int)
            }
        },
        Not(t) => Ok(Value::Bool(!eval_bool(ctx, tables, env, t)?)),
        Neg(t) => {
            let v = eval_int(ctx, tables, env, t)?;
            v.checked_neg()
                .map(Value::Int)
                .ok_or_else(|| err(SpecErrorKind::Overflow, term.span, "integer overflow"))
        }
        If {
            cond,
            then_branch,
            else_branch,
        } => {
            if eval_bool(ctx, tables, env, cond)? {
                eval(ctx, tables, env, then_branch)
            } else {
                eval(ctx, tables, env, else_branch)
            }
        }
        Let { name, value, body } => {
            let v = eval(ctx, tables, env, value)?;
            env.push(name, v);
            let result = eval(ctx, tables, env, body);
            env.bindings.pop();
            result
        }
        App { func, arg } => {
            let fv = eval(ctx, tables, env, func)?;
            let av = eval(ctx, tables, env, arg)?;
            apply(ctx, env, fv, av, term.span)
        }
        Field { base, field } => {
            let bv = eval(ctx, tables, env, base)?;
            match bv {
                Value::Instance(id) => env.view().get(id, field).cloned().ok_or_else(|| {
                    err(
                        SpecErrorKind::Internal,
                        term.span,
                        format!("model field `{field}` not initialized on sut#{id}"),
                    )
                }),
                Value::Graph(g) => match field.as_str() {
                    "dom" => Ok(Value::set(g.dom().iter().map(|v| Value::Vertex(*v)))),
                    "succ" => Ok(Value::Fun(FunValue {
                        kind: FunKind::GraphSucc(g),
                        args: Vec::new(),
                    })),
                    other => Err(err(
                        SpecErrorKind::Internal,
                        term.span,
                        format!("graphs have no model field `{other}`"),
                    )),
                },
                other => Err(err(
                    SpecErrorKind::Internal,
                    term.span,
                    format!("model access on non-instance value {other}"),
                )),
            }
        }
        Index { base, index } => {
            let bv = eval(ctx, tables, env, base)?;
            let i = eval_int(ctx, tables, env, index)?;
            match bv {
                Value::Seq(items) => {
                    if i < 0 || i as usize >= items.len() {
                        Err(err(
                            SpecErrorKind::IndexOutOfBounds,
                            term.span,
                            format!("index {i} out of bounds for length {}", items.len()),
                        ))
                    } else {
                        Ok(items[i as usize].clone())
                    }
                }
                other => Err(err(
                    SpecErrorKind::Internal,
                    term.span,
                    format!("indexing non-sequence value {other}"),
                )),
            }
        }
        Old(inner) => {
            if env.old_models.is_none() {
                return Err(err(
                    SpecErrorKind::Internal,
                    term.span,
                    "`old` evaluated without a pre-state snapshot",
                ));
            }
            let saved = env.in_old;
            env.in_old = true;
            let result = eval(ctx, tables, env, inner);
            env.in_old = saved;
            result
        }
        Quant { kind, .. } => {
            let Some(plan) = bounded_plan(tables, term) else {
                return Err(err(
                    SpecErrorKind::Internal,
                    term.span,
                    "unbounded quantifier reached evaluation",
                ));
            };
            let out = eval_bounded(ctx, tables, env, *kind, &plan, 0)?;
            Ok(Value::Bool(out))
        }
    }
}

fn eval_bool(
    ctx: &EvalCtx,
    tables: TermTables,
    env: &mut EvalEnv,
    term: &Term,
) -> Result<bool, SpecRuntimeError> {
    match eval(ctx, tables, env, term)? {
        Value::Bool(b) => Ok(b),
        other => Err(err(
            SpecErrorKind::Internal,
            term.span,
            format!("expected a boolean, got {other}"),
        )),
    }
}

fn eval_int(
    ctx: &EvalCtx,
    tables: TermTables,
    env: &mut EvalEnv,
    term: &Term,
) -> Result<i64, SpecRuntimeError> {
    match eval(ctx, tables, env, term)? {
        Value::Int(n) => Ok(n),
        other => Err(err(
            SpecErrorKind::Internal,
            term.span,
            format!("expected an integer, got {other}"),
        )),
    }
}

fn arith(op: BinOp, l: i64, r: i64, span: Span) -> Result<i64, SpecRuntimeError> {
    let out = match op {
        BinOp::Add => l.checked_add(r),
        BinOp::Sub => l.checked_sub(r),
        BinOp::Mul => l.checked_mul(r),
        BinOp::Div => {
            if r == 0 {
                return Err(err(SpecErrorKind::DivisionByZero, span, "division by zero"));
            }
            l.checked_div(r)
        }
        BinOp::Mod => {
            if r == 0 {
                return Err(err(SpecErrorKind::DivisionByZero, span, "division by zero"));
            }
            l.checked_rem(r)
        }
        _ => unreachable!("non-arithmetic op"),
    };
    out.ok_or_else(|| err(SpecErrorKind::Overflow, span, "integer overflow"))
}

fn cmp_pair(op: CmpOp, a: &Value, b: &Value, span: Span) -> Result<bool, SpecRuntimeError> {
    match op {
        CmpOp::Eq => Ok(a == b),
        CmpOp::Ne => Ok(a != b),
        _ => match (a, b) {
            (Value::Int(x), Value::Int(y)) => Ok(match op {
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
                _ => unreachable!(),
            }),
            _ => Err(err(
                SpecErrorKind::Internal,
                span,
                "ordered comparison over non-integers",
            )),
        },
    }
}

fn eval_chain(
    ctx: &EvalCtx,
    tables: TermTables,
    env: &mut EvalEnv,
    chain: &Term,
    first: &Term,
    rest: &[(CmpOp, Term)],
) -> EvalResult {
    let firstv = eval(ctx, tables, env, first)?;
    match tables.chain_mode(chain.id) {
        ChainMode::Conjunction => {
            let mut prev = firstv;
            for (op, operand) in rest {
                let cur = eval(ctx, tables, env, operand)?;
                if !cmp_pair(*op, &prev, &cur, chain.span)? {
                    return Ok(Value::Bool(false));
                }
                prev = cur;
            }
            Ok(Value::Bool(true))
        }
        ChainMode::BoolEquation => {
            let lhs = firstv
                .as_bool()
                .ok_or_else(|| err(SpecErrorKind::Internal, first.span, "expected a boolean"))?;
            let mut tail = true;
            let mut prev = eval(ctx, tables, env, &rest[0].1)?;
            for (op, operand) in &rest[1..] {
                let cur = eval(ctx, tables, env, operand)?;
                if !cmp_pair(*op, &prev, &cur, chain.span)? {
                    tail = false;
                    break;
                }
                prev = cur;
            }
            Ok(Value::Bool(lhs == tail))
        }
    }
}

fn fun_arity(ctx: &EvalCtx, kind: &FunKind) -> usize {
    match kind {
        FunKind::Std(f) => match f {
            StdFn::ListHd
            | StdFn::ListTl
            | StdFn::ListRev
            | StdFn::Fst
            | StdFn::Snd
            | StdFn::SeqLength => 1,
            StdFn::ListMem
            | StdFn::ListMap
            | StdFn::ListRemoveAssoc
            | StdFn::SeqMem
            | StdFn::FsetMem => 2,
        },
        FunKind::Predicate(name) => ctx
            .spec
            .ast
            .find_pred(name)
            .map(|p| p.params.len())
            .unwrap_or(0),
        FunKind::GraphSucc(_) => 1,
    }
}

fn apply(ctx: &EvalCtx, env: &mut EvalEnv, f: Value, arg: Value, span: Span) -> EvalResult {
    let Value::Fun(mut fv) = f else {
        return Err(err(
            SpecErrorKind::Internal,
            span,
            format!("applying non-function value {f}"),
        ));
    };
    fv.args.push(arg);
    if fv.args.len() < fun_arity(ctx, &fv.kind) {
        return Ok(Value::Fun(fv));
    }
    match fv.kind {
        FunKind::Std(f) => call_std(ctx, env, f, fv.args, span),
        FunKind::GraphSucc(g) => match fv.args.pop() {
            Some(Value::Vertex(v)) => Ok(Value::set(
                g.successor_set(v).into_iter().map(Value::Vertex),
            )),
            _ => Err(err(
                SpecErrorKind::Internal,
                span,
                "successor map applied to a non-vertex",
            )),
        },
        FunKind::Predicate(name) => call_predicate(ctx, env, &name, fv.args, span),
    }
}

fn call_std(
    ctx: &EvalCtx,
    env: &mut EvalEnv,
    f: StdFn,
    mut args: Vec<Value>,
    span: Span,
) -> EvalResult {
    let internal = |msg: &str| err(SpecErrorKind::Internal, span, msg);
    match f {
        StdFn::ListMem | StdFn::SeqMem => {
            let coll = args.pop().unwrap();
            let x = args.pop().unwrap();
            match coll {
                Value::Seq(items) => Ok(Value::Bool(items.contains(&x))),
                _ => Err(internal("membership test over a non-sequence")),
            }
        }
        StdFn::FsetMem => {
            let coll = args.pop().unwrap();
            let x = args.pop().unwrap();
            match coll {
                Value::Set(items) => Ok(Value::Bool(items.contains(&x))),
                // `mem` is also usable on sequences in spec practice.
                Value::Seq(items) => Ok(Value::Bool(items.contains(&x))),
                _ => Err(internal("membership test over a non-set")),
            }
        }
        StdFn::ListMap => {
            let coll = args.pop().unwrap();
            let f = args.pop().unwrap();
            let Value::Seq(items) = coll else {
                return Err(internal("List.map over a non-sequence"));
            };
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(apply(ctx, env, f.clone(), item, span)?);
            }
            Ok(Value::Seq(out))
        }
        StdFn::ListHd => match args.pop().unwrap() {
            Value::Seq(items) => items.first().cloned().ok_or_else(|| {
                err(
                    SpecErrorKind::HeadOfEmpty,
                    span,
                    "List.hd of the empty list",
                )
            }),
            _ => Err(internal("List.hd of a non-sequence")),
        },
        StdFn::ListTl => match args.pop().unwrap() {
            Value::Seq(items) => {
                if items.is_empty() {
                    Err(err(
                        SpecErrorKind::TailOfEmpty,
                        span,
                        "List.tl of the empty list",
                    ))
                } else {
                    Ok(Value::Seq(items[1..].to_vec()))
                }
            }
            _ => Err(internal("List.tl of a non-sequence")),
        },
        StdFn::ListRev => match args.pop().unwrap() {
            Value::Seq(mut items) => {
                items.reverse();
                Ok(Value::Seq(items))
            }
            _ => Err(internal("List.rev of a non-sequence")),
        },
        StdFn::ListRemoveAssoc => {
            let coll = args.pop().unwrap();
            let key = args.pop().unwrap();
            let Value::Seq(items) = coll else {
                return Err(internal("List.remove_assoc over a non-sequence"));
            };
            let mut out = Vec::with_capacity(items.len());
            let mut removed = false;
            for item in items {
                if !removed {
                    if let Value::Tuple(kv) = &item {
                        if kv.first() == Some(&key) {
                            removed = true;
                            continue;
                        }
                    }
                }
                out.push(item);
            }
            Ok(Value::Seq(out))
        }
        StdFn::Fst | StdFn::Snd => match args.pop().unwrap() {
            Value::Tuple(items) if items.len() >= 2 => {
                let idx = if f == StdFn::Fst { 0 } else { 1 };
                Ok(items[idx].clone())
            }
            _ => Err(internal("projection from a non-pair")),
        },
        StdFn::SeqLength => match args.pop().unwrap() {
            Value::Seq(items) => Ok(Value::Int(items.len() as i64)),
            _ => Err(internal("Seq.length of a non-sequence")),
        },
    }
}

fn call_predicate(
    ctx: &EvalCtx,
    env: &mut EvalEnv,
    name: &str,
    args: Vec<Value>,
    span: Span,
) -> EvalResult {
    if ctx.oracle_backed.contains(name) {
        return call_native(ctx, name, &args, span);
    }
    let Some(decl) = ctx.spec.ast.find_pred(name) else {
        return Err(err(
            SpecErrorKind::Internal,
            span,
            format!("undefined predicate `{name}`"),
        ));
    };
    let saved = std::mem::take(&mut env.bindings);
    for ((pname, _), v) in decl.params.iter().zip(args) {
        env.bindings.push((pname.clone(), v));
    }
    let result = eval(ctx, ctx.spec.tables(), env, &decl.body);
    env.bindings = saved;
    result
}

/// Native implementations for oracle-backed predicates.
fn call_native(ctx: &EvalCtx, name: &str, args: &[Value], span: Span) -> EvalResult {
    let bad = || {
        err(
            SpecErrorKind::Internal,
            span,
            format!("bad arguments for native `{name}`"),
        )
    };
    match name {
        "has_path" => match args {
            [Value::Vertex(v1), Value::Vertex(v2), Value::Graph(g)] => {
                Ok(Value::Bool(ctx.reachable(g, *v1).contains(v2)))
            }
            _ => Err(bad()),
        },
        "is_path" => match args {
            [Value::Vertex(v1), Value::Vertex(v2), Value::Seq(p), Value::Graph(g)] => {
                let mut path = Vec::with_capacity(p.len());
                for v in p {
                    match v {
                        Value::Vertex(x) => path.push(*x),
                        _ => return Err(bad()),
                    }
                }
                Ok(Value::Bool(eval_is_path(g, *v1, *v2, &path)))
            }
            _ => Err(bad()),
        },
        "edge" => match args {
            [Value::Vertex(v1), Value::Vertex(v2), Value::Graph(g)] => {
                Ok(Value::Bool(g.edge(*v1, *v2)))
            }
            _ => Err(bad()),
        },
        other => Err(err(
            SpecErrorKind::Internal,
            span,
            format!("no native implementation for `{other}`"),
        )),
    }
}

fn eval_bounded(
    ctx: &EvalCtx,
    tables: TermTables,
    env: &mut EvalEnv,
    kind: QuantKind,
    plan: &crate::analysis::BoundedPlan<'_>,
    depth: usize,
) -> Result<bool, SpecRuntimeError> {
    if depth == plan.binders.len() {
        return eval_bool(ctx, tables, env, plan.body);
    }
    let (name, dom) = &plan.binders[depth];
    let values = enumerate_domain(ctx, tables, env, dom)?;
    for v in values {
        env.push(name, v);
        let sub = eval_bounded(ctx, tables, env, kind, plan, depth + 1);
        env.bindings.pop();
        match (kind, sub?) {
            (QuantKind::Forall, false) => return Ok(false),
            (QuantKind::Exists, true) => return Ok(true),
            _ => {}
        }
    }
    Ok(kind == QuantKind::Forall)
}

fn enumerate_domain(
    ctx: &EvalCtx,
    tables: TermTables,
    env: &mut EvalEnv,
    dom: &DomainExpr<'_>,
) -> Result<Vec<Value>, SpecRuntimeError> {
    let elements = |v: Value, span: Span| -> Result<Vec<Value>, SpecRuntimeError> {
        match v {
            Value::Seq(items) => Ok(items),
            Value::Set(items) => Ok(items.into_iter().collect()),
            other => Err(err(
                SpecErrorKind::Internal,
                span,
                format!("quantifier domain is not a collection: {other}"),
            )),
        }
    };
    match dom {
        DomainExpr::Collection(t) => {
            let v = eval(ctx, tables, env, t)?;
            elements(v, t.span)
        }
        DomainExpr::Union(a, b) => {
            let va = eval(ctx, tables, env, a)?;
            let vb = eval(ctx, tables, env, b)?;
            let mut set: BTreeSet<Value> = elements(va, a.span)?.into_iter().collect();
            set.extend(elements(vb, b.span)?);
            Ok(set.into_iter().collect())
        }
        DomainExpr::IntRange {
            lo,
            lo_strict,
            hi,
            hi_inclusive,
        } => {
            let lo_v = eval_int(ctx, tables, env, lo)?;
            let hi_v = eval_int(ctx, tables, env, hi)?;
            // A strict bound at the integer boundary makes the range empty.
            let lo_v = if *lo_strict {
                match lo_v.checked_add(1) {
                    Some(v) => v,
                    None => return Ok(Vec::new()),
                }
            } else {
                lo_v
            };
            let hi_v = if *hi_inclusive {
                hi_v
            } else {
                match hi_v.checked_sub(1) {
                    Some(v) => v,
                    None => return Ok(Vec::new()),
                }
            };
            Ok((lo_v..=hi_v).map(Value::Int).collect())
        }
    }
}

// ---------------------------------------------------------------------------
// Graph oracles
// ---------------------------------------------------------------------------

/// Path predicate: `p` lists the vertices after `v1`, ending at `v2`; the
/// empty path relates a vertex to itself.
pub fn eval_is_path(g: &GraphModel, v1: VertexId, v2: VertexId, p: &[VertexId]) -> bool {
    if p.is_empty() {
        return v1 == v2;
    }
    g.edge(v1, p[0])
        && *p.last().unwrap() == v2
        && g.contains(v1)
        && p.windows(2).all(|w| g.edge(w[0], w[1]))
}

/// All vertices reachable from `from`, computed as an exhaustive fixpoint
/// over the successor map.
pub fn reachable_set(g: &GraphModel, from: VertexId) -> BTreeSet<VertexId> {
    let mut reach: BTreeSet<VertexId> = BTreeSet::new();
    reach.insert(from);
    loop {
        let mut added = false;
        for u in reach.clone() {
            for w in g.successors(u) {
                if reach.insert(w) {
                    added = true;
                }
            }
        }
        if !added {
            return reach;
        }
    }
}

/// Independent reachability decision used to cross-check the search
/// implementation.
pub fn reachability_oracle(g: &GraphModel, v1: VertexId, v2: VertexId) -> bool {
    reachable_set(g, v1).contains(&v2)
}

/// A concrete witness path from `v1` to `v2` (vertices after `v1`,
/// inclusive of `v2`), if one exists. Breadth-first over the successor map.
pub fn oracle_witness_path(g: &GraphModel, v1: VertexId, v2: VertexId) -> Option<Vec<VertexId>> {
    if v1 == v2 {
        return Some(Vec::new());
    }
    let mut parent: HashMap<VertexId, VertexId> = HashMap::new();
    let mut frontier = vec![v1];
    let mut seen: BTreeSet<VertexId> = BTreeSet::new();
    seen.insert(v1);
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for u in frontier {
            for w in g.successors(u) {
                if seen.insert(w) {
                    parent.insert(w, u);
                    if w == v2 {
                        let mut path = vec![w];
                        let mut cur = u;
                        while cur != v1 {
                            path.push(cur);
                            cur = parent[&cur];
                        }
                        path.reverse();
                        return Some(path);
                    }
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_interface, parse_term};
    use crate::typecheck::{typecheck, typecheck_term, LogicalType, TypedSpec};

    fn queue_exec() -> TypedSpec {
        typecheck(parse_interface(include_str!("../specs/queue_exec.mli.spec")).unwrap()).unwrap()
    }

    fn eval_clause(
        spec: &TypedSpec,
        term: &Term,
        models: &ModelState,
        old: &ModelState,
        bindings: &[(&str, Value)],
    ) -> EvalResult {
        let ctx = EvalCtx::new(spec);
        let mut env = EvalEnv::with_old(models, old);
        for (n, v) in bindings {
            env.push(n, v.clone());
        }
        eval(&ctx, spec.tables(), &mut env, term)
    }

    #[test]
    fn raises_clause_on_empty_queue_holds() {
        let spec = queue_exec();
        let pop = spec.ast.find_val("pop").unwrap();
        let clause = &pop.contract.as_ref().unwrap().raises[0].condition;
        let mut models = ModelState::new();
        models.set(0, "elems", Value::Seq(vec![]));
        let old = models.clone();
        let result = eval_clause(&spec, clause, &models, &old, &[("t", Value::Instance(0))]);
        assert_eq!(result.unwrap(), Value::Bool(true));
    }

    #[test]
    fn fig1_pop_check_clause_holds() {
        // x :: q.elems = old q.elems with x=1, current [2], old [1; 2].
        let spec =
            typecheck(parse_interface(include_str!("../specs/queue.mli.spec")).unwrap()).unwrap();
        let pop = spec.ast.find_val("pop").unwrap();
        let clause = &pop.contract.as_ref().unwrap().ensures[0];
        let mut models = ModelState::new();
        models.set(0, "elems", Value::int_list([2]));
        let mut old = ModelState::new();
        old.set(0, "elems", Value::int_list([1, 2]));
        let result = eval_clause(
            &spec,
            clause,
            &models,
            &old,
            &[("q", Value::Instance(0)), ("x", Value::Int(1))],
        );
        assert_eq!(result.unwrap(), Value::Bool(true));
    }

    #[test]
    fn head_of_empty_is_a_spec_error() {
        let spec = queue_exec();
        let term = parse_term("List.hd [] = 0").unwrap();
        let tt = typecheck_term(&spec, &[], &term).unwrap();
        let ctx = EvalCtx::new(&spec);
        let models = ModelState::new();
        let mut env = EvalEnv::new(&models);
        let e = eval(&ctx, tt.tables(), &mut env, &term).unwrap_err();
        assert_eq!(e.kind, SpecErrorKind::HeadOfEmpty);
    }

    #[test]
    fn division_by_zero_reported() {
        let spec = queue_exec();
        let term = parse_term("1 / 0 = 1").unwrap();
        let tt = typecheck_term(&spec, &[], &term).unwrap();
        let ctx = EvalCtx::new(&spec);
        let models = ModelState::new();
        let mut env = EvalEnv::new(&models);
        let e = eval(&ctx, tt.tables(), &mut env, &term).unwrap_err();
        assert_eq!(e.kind, SpecErrorKind::DivisionByZero);
    }

    #[test]
    fn bounded_forall_over_range() {
        let spec = queue_exec();
        let term = parse_term("forall i. 0 <= i < 5 -> i * i < 25").unwrap();
        let tt = typecheck_term(&spec, &[], &term).unwrap();
        let ctx = EvalCtx::new(&spec);
        let models = ModelState::new();
        let mut env = EvalEnv::new(&models);
        assert_eq!(
            eval(&ctx, tt.tables(), &mut env, &term).unwrap(),
            Value::Bool(true)
        );
    }

    #[test]
    fn bounded_exists_over_list() {
        let spec = queue_exec();
        let term = parse_term("exists x. List.mem x l && x = 3").unwrap();
        let tt =
            typecheck_term(&spec, &[("l", LogicalType::list(LogicalType::Int))], &term).unwrap();
        let ctx = EvalCtx::new(&spec);
        let models = ModelState::new();
        let mut env = EvalEnv::new(&models);
        env.push("l", Value::int_list([1, 2, 3]));
        assert_eq!(
            eval(&ctx, tt.tables(), &mut env, &term).unwrap(),
            Value::Bool(true)
        );
    }

    #[test]
    fn quantifier_duality_on_bounded_domains() {
        let spec = queue_exec();
        let cases = [
            (
                "forall x. List.mem x l -> x < 4",
                "exists x. List.mem x l && not (x < 4)",
            ),
            (
                "forall i. 0 <= i < 6 -> i mod 2 = 0",
                "exists i. 0 <= i < 6 && not (i mod 2 = 0)",
            ),
        ];
        for (fa, ex) in cases {
            for items in [vec![], vec![1], vec![2, 4], vec![0, 2, 4]] {
                let list = Value::int_list(items.clone());
                let mut out = Vec::new();
                for src in [fa, ex] {
                    let term = parse_term(src).unwrap();
                    let tt =
                        typecheck_term(&spec, &[("l", LogicalType::list(LogicalType::Int))], &term)
                            .unwrap();
                    let ctx = EvalCtx::new(&spec);
                    let models = ModelState::new();
                    let mut env = EvalEnv::new(&models);
                    env.push("l", list.clone());
                    out.push(eval(&ctx, tt.tables(), &mut env, &term).unwrap());
                }
                let (f, e) = (out[0].as_bool().unwrap(), out[1].as_bool().unwrap());
                assert_eq!(f, !e, "duality failed for {fa} on {items:?}");
            }
        }
    }

    fn chain_graph() -> GraphModel {
        // a=0 -> b=1 -> c=2
        GraphModel::new([0, 1, 2], [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn is_path_examples() {
        let g = chain_graph();
        assert!(eval_is_path(&g, 0, 0, &[]));
        assert!(eval_is_path(&g, 0, 2, &[1, 2]));
        assert!(!eval_is_path(&g, 0, 2, &[2]));
    }

    #[test]
    fn reachability_examples() {
        let g = chain_graph();
        assert!(reachability_oracle(&g, 0, 0));
        assert!(reachability_oracle(&g, 0, 2));
        assert!(!reachability_oracle(&g, 2, 0));

        let isolated = GraphModel::new([0, 1], []).unwrap();
        assert!(!reachability_oracle(&isolated, 0, 1));

        let cycle = GraphModel::new([0, 1], [(0, 1), (1, 0)]).unwrap();
        assert!(reachability_oracle(&cycle, 1, 0));
    }

    /// Brute force: enumerate all vertex sequences up to `max_len` and ask
    /// whether any satisfies the path predicate.
    fn brute_force_has_path(g: &GraphModel, v1: VertexId, v2: VertexId, max_len: usize) -> bool {
        let verts: Vec<VertexId> = g.dom().iter().copied().collect();
        fn go(
            g: &GraphModel,
            v1: VertexId,
            v2: VertexId,
            verts: &[VertexId],
            prefix: &mut Vec<VertexId>,
            remaining: usize,
        ) -> bool {
            if eval_is_path(g, v1, v2, prefix) {
                return true;
            }
            if remaining == 0 {
                return false;
            }
            for v in verts {
                prefix.push(*v);
                if go(g, v1, v2, verts, prefix, remaining - 1) {
                    prefix.pop();
                    return true;
                }
                prefix.pop();
            }
            false
        }
        go(g, v1, v2, &verts, &mut Vec::new(), max_len)
    }

    #[test]
    fn oracle_agrees_with_brute_force_path_enumeration() {
        // Exhaustive over all graphs with up to 3 vertices.
        for n in 1..=3u32 {
            let masks = 1u64 << (n * n);
            for mask in 0..masks {
                let g = GraphModel::from_mask(n, mask);
                for v1 in 0..n {
                    for v2 in 0..n {
                        let expected = brute_force_has_path(&g, v1, v2, n as usize);
                        assert_eq!(
                            reachability_oracle(&g, v1, v2),
                            expected,
                            "n={n} mask={mask} v1={v1} v2={v2}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_matches_path_enumeration_on_sampled_larger_graphs() {
        // Sequence enumeration is exponential, so 4- and 5-vertex graphs
        // are sampled from a seeded grid instead of enumerated.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x15);
        for n in 4..=5u32 {
            for _ in 0..120 {
                let density = rand::Rng::random_range(&mut rng, 0.0..=1.0);
                let g = GraphModel::random(&mut rng, n, density);
                for v1 in 0..n {
                    for v2 in 0..n {
                        let expected = brute_force_has_path(&g, v1, v2, n as usize);
                        assert_eq!(
                            reachability_oracle(&g, v1, v2),
                            expected,
                            "n={n} v1={v1} v2={v2}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn witness_path_realizes_is_path() {
        let g = chain_graph();
        let p = oracle_witness_path(&g, 0, 2).unwrap();
        assert!(eval_is_path(&g, 0, 2, &p));
        assert_eq!(oracle_witness_path(&g, 2, 0), None);
        assert_eq!(oracle_witness_path(&g, 1, 1), Some(vec![]));
    }

    #[test]
    fn eval_is_deterministic() {
        let spec = queue_exec();
        let term = parse_term("forall x. List.mem x l -> x + 1 > x").unwrap();
        let tt =
            typecheck_term(&spec, &[("l", LogicalType::list(LogicalType::Int))], &term).unwrap();
        let ctx = EvalCtx::new(&spec);
        let models = ModelState::new();
        let mut results = Vec::new();
        for _ in 0..3 {
            let mut env = EvalEnv::new(&models);
            env.push("l", Value::int_list([5, -3, 9]));
            results.push(eval(&ctx, tt.tables(), &mut env, &term).unwrap());
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }
}
