//! Type checking of interfaces: resolves every term node to a logical type
//! and every name to a symbol, and enforces the contract well-formedness
//! rules (`old` placement, modifies targets, header arity).

use crate::ast::*;
use crate::span::Span;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Types of specification terms. `list` and `seq` both denote finite
/// sequences and unify with each other; they are kept apart only for
/// display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogicalType {
    Int,
    Bool,
    Unit,
    Tuple(Vec<LogicalType>),
    List(Box<LogicalType>),
    Seq(Box<LogicalType>),
    FSet(Box<LogicalType>),
    /// Maps double as function types: a model `succ : V.t -> V.t fset`
    /// and the stdlib symbol `fst` both have `Map` types.
    Map(Box<LogicalType>, Box<LogicalType>),
    /// A declared or builtin abstract type, e.g. `'a t`, `gt`, `V.t`.
    Named {
        name: String,
        args: Vec<LogicalType>,
    },
    /// A rigid, declaration-bound type variable.
    Param(String),
    /// An inference variable.
    Var(u32),
}

impl LogicalType {
    pub fn list(t: LogicalType) -> Self {
        LogicalType::List(Box::new(t))
    }
    pub fn seq(t: LogicalType) -> Self {
        LogicalType::Seq(Box::new(t))
    }
    pub fn fset(t: LogicalType) -> Self {
        LogicalType::FSet(Box::new(t))
    }
    pub fn map(a: LogicalType, b: LogicalType) -> Self {
        LogicalType::Map(Box::new(a), Box::new(b))
    }

    pub fn head_named(&self) -> Option<(&str, &[LogicalType])> {
        match self {
            LogicalType::Named { name, args } => Some((name, args)),
            _ => None,
        }
    }

    pub fn contains_map(&self) -> bool {
        match self {
            LogicalType::Map(..) => true,
            LogicalType::Tuple(ts) => ts.iter().any(|t| t.contains_map()),
            LogicalType::List(t) | LogicalType::Seq(t) | LogicalType::FSet(t) => t.contains_map(),
            LogicalType::Named { args, .. } => args.iter().any(|t| t.contains_map()),
            _ => false,
        }
    }
}

impl fmt::Display for LogicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalType::Int => write!(f, "int"),
            LogicalType::Bool => write!(f, "bool"),
            LogicalType::Unit => write!(f, "unit"),
            LogicalType::Tuple(ts) => {
                let parts: Vec<String> = ts.iter().map(|t| format!("{t}")).collect();
                write!(f, "({})", parts.join(" * "))
            }
            LogicalType::List(t) => write!(f, "{t} list"),
            LogicalType::Seq(t) => write!(f, "{t} seq"),
            LogicalType::FSet(t) => write!(f, "{t} fset"),
            LogicalType::Map(a, b) => write!(f, "({a} -> {b})"),
            LogicalType::Named { name, args } => match args.len() {
                0 => write!(f, "{name}"),
                1 => write!(f, "{} {name}", args[0]),
                _ => {
                    let parts: Vec<String> = args.iter().map(|t| format!("{t}")).collect();
                    write!(f, "({}) {name}", parts.join(", "))
                }
            },
            LogicalType::Param(p) => write!(f, "'{p}"),
            LogicalType::Var(v) => write!(f, "'_{v}"),
        }
    }
}

/// Builtin abstract types available without declaration. `V.t` is the
/// vertex type of the graph case study: opaque, ordered, hashable.
pub const VERTEX_TYPE: &str = "V.t";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StdFn {
    ListMem,
    ListMap,
    ListHd,
    ListTl,
    ListRev,
    ListRemoveAssoc,
    Fst,
    Snd,
    SeqLength,
    SeqMem,
    FsetMem,
}

impl StdFn {
    pub fn name(self) -> &'static str {
        match self {
            StdFn::ListMem => "List.mem",
            StdFn::ListMap => "List.map",
            StdFn::ListHd => "List.hd",
            StdFn::ListTl => "List.tl",
            StdFn::ListRev => "List.rev",
            StdFn::ListRemoveAssoc => "List.remove_assoc",
            StdFn::Fst => "fst",
            StdFn::Snd => "snd",
            StdFn::SeqLength => "Seq.length",
            StdFn::SeqMem => "Seq.mem",
            StdFn::FsetMem => "Fset.mem",
        }
    }

    fn lookup(name: &str) -> Option<StdFn> {
        Some(match name {
            "List.mem" => StdFn::ListMem,
            "List.map" => StdFn::ListMap,
            "List.hd" => StdFn::ListHd,
            "List.tl" => StdFn::ListTl,
            "List.rev" => StdFn::ListRev,
            "List.remove_assoc" => StdFn::ListRemoveAssoc,
            "fst" => StdFn::Fst,
            "snd" => StdFn::Snd,
            "Seq.length" => StdFn::SeqLength,
            "Seq.mem" => StdFn::SeqMem,
            "Fset.mem" | "mem" => StdFn::FsetMem,
            _ => return None,
        })
    }
}

/// What a `Var` term node resolves to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolRef {
    /// Contract parameter, result, invariant binder, or let/quantifier binder.
    Local,
    Predicate(String),
    Stdlib(StdFn),
}

/// How a comparison chain is read; see `a = b = c` vs `b = q.elems = []`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    /// `a = b = c` means `a = b && b = c`.
    Conjunction,
    /// `b = <chain>` means `b = (conjunction of the tail)`, for bool `b`.
    BoolEquation,
}

#[derive(Debug, Clone)]
pub struct ModelInfo {
    pub name: String,
    pub mutable: bool,
    /// Field type over the declaration's `Param`s.
    pub ty: LogicalType,
}

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub name: String,
    pub params: Vec<String>,
    pub models: Vec<ModelInfo>,
}

impl TypeInfo {
    pub fn model(&self, name: &str) -> Option<&ModelInfo> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn has_mutable_model(&self) -> bool {
        self.models.iter().any(|m| m.mutable)
    }

    /// Instantiate a model field's type at the given type arguments.
    pub fn model_type_at(&self, field: &str, args: &[LogicalType]) -> Option<LogicalType> {
        let m = self.model(field)?;
        let mut subst = HashMap::new();
        for (p, a) in self.params.iter().zip(args) {
            subst.insert(p.clone(), a.clone());
        }
        Some(substitute_params(&m.ty, &subst))
    }
}

#[derive(Debug, Clone)]
pub struct ValParamInfo {
    pub name: Option<String>,
    pub ty: LogicalType,
    pub optional: bool,
}

#[derive(Debug, Clone)]
pub struct ValInfo {
    pub name: String,
    pub params: Vec<ValParamInfo>,
    pub result_name: Option<String>,
    pub result_ty: LogicalType,
    pub has_contract: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TypeErrorKind {
    Mismatch,
    UnknownSymbol,
    OldOutsidePostcondition,
    OldOfPureTerm,
    HeaderMismatch,
    BadModifies,
    UnknownException,
    CannotInfer,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypeError {
    pub decl: String,
    pub span: Span,
    pub kind: TypeErrorKind,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "in `{}` at {}: {}", self.decl, self.span, self.message)
    }
}

/// A typechecked interface: the AST plus resolved types, symbols, and
/// chain readings for every term node.
#[derive(Debug, Clone)]
pub struct TypedSpec {
    pub ast: SpecInterface,
    pub types: HashMap<NodeId, LogicalType>,
    pub symbols: HashMap<NodeId, SymbolRef>,
    pub chain_modes: HashMap<NodeId, ChainMode>,
    pub type_infos: BTreeMap<String, TypeInfo>,
    pub val_infos: BTreeMap<String, ValInfo>,
    pub exn_names: BTreeSet<String>,
    /// Predicate names in declaration order.
    pub pred_order: Vec<String>,
}

impl TypedSpec {
    pub fn node_type(&self, id: NodeId) -> LogicalType {
        self.types.get(&id).cloned().unwrap_or(LogicalType::Unit)
    }

    pub fn symbol(&self, id: NodeId) -> Option<&SymbolRef> {
        self.symbols.get(&id)
    }

    pub fn chain_mode(&self, id: NodeId) -> ChainMode {
        self.chain_modes
            .get(&id)
            .copied()
            .unwrap_or(ChainMode::Conjunction)
    }
}

/// Typecheck a parsed interface. All errors are collected.
pub fn typecheck(spec: SpecInterface) -> Result<TypedSpec, Vec<TypeError>> {
    let mut cx = Checker::new();

    // First pass: collect type declarations so later vals can reference them.
    for decl in &spec.decls {
        match decl {
            Decl::Type(t) => cx.register_type(t),
            Decl::Exn(e) => {
                cx.exn_names.insert(e.name.clone());
            }
            _ => {}
        }
    }

    // Second pass: check bodies in declaration order.
    for decl in &spec.decls {
        match decl {
            Decl::Type(t) => cx.check_type_decl(t),
            Decl::Val(v) => cx.check_val_decl(v),
            Decl::Exn(_) => {}
            Decl::Pred(p) => cx.check_pred_decl(p),
        }
    }

    if !cx.errors.is_empty() {
        return Err(cx.errors);
    }

    let types = cx
        .node_types
        .iter()
        .map(|(id, t)| (*id, cx.unifier.resolve(t)))
        .collect();

    Ok(TypedSpec {
        ast: spec,
        types,
        symbols: cx.node_symbols,
        chain_modes: cx.chain_modes,
        type_infos: cx.type_infos,
        val_infos: cx.val_infos,
        exn_names: cx.exn_names,
        pred_order: cx.pred_order,
    })
}

/// Typecheck a standalone term against an environment of named bindings,
/// reusing an already-checked spec's types and predicates. Used for
/// monitors and by tests.
pub fn typecheck_term(
    spec: &TypedSpec,
    bindings: &[(&str, LogicalType)],
    term: &Term,
) -> Result<TypedTerm, Vec<TypeError>> {
    let mut cx = Checker::new();
    cx.type_infos = spec.type_infos.clone();
    cx.exn_names = spec.exn_names.clone();
    cx.pred_order = spec.pred_order.clone();
    for p in spec.ast.pred_decls() {
        let params: Vec<LogicalType> = p
            .params
            .iter()
            .map(|(_, ty)| cx.convert_type(ty, "monitor"))
            .collect();
        cx.pred_sigs.insert(p.name.clone(), params);
    }

    let mut scope = Scope::new();
    for (name, ty) in bindings {
        scope.bind(name, ty.clone());
    }
    let ty = cx.infer(term, &mut scope, "monitor", OldPolicy::Forbidden);
    cx.expect_unify(&ty, &LogicalType::Bool, term.span, "monitor");
    if !cx.errors.is_empty() {
        return Err(cx.errors);
    }
    let types = cx
        .node_types
        .iter()
        .map(|(id, t)| (*id, cx.unifier.resolve(t)))
        .collect();
    Ok(TypedTerm {
        types,
        symbols: cx.node_symbols,
        chain_modes: cx.chain_modes,
    })
}

/// Side tables for a term checked outside a spec (monitors).
#[derive(Debug, Clone)]
pub struct TypedTerm {
    pub types: HashMap<NodeId, LogicalType>,
    pub symbols: HashMap<NodeId, SymbolRef>,
    pub chain_modes: HashMap<NodeId, ChainMode>,
}

fn substitute_params(ty: &LogicalType, subst: &HashMap<String, LogicalType>) -> LogicalType {
    match ty {
        LogicalType::Param(p) => subst.get(p).cloned().unwrap_or_else(|| ty.clone()),
        LogicalType::Tuple(ts) => {
            LogicalType::Tuple(ts.iter().map(|t| substitute_params(t, subst)).collect())
        }
        LogicalType::List(t) => LogicalType::list(substitute_params(t, subst)),
        LogicalType::Seq(t) => LogicalType::seq(substitute_params(t, subst)),
        LogicalType::FSet(t) => LogicalType::fset(substitute_params(t, subst)),
        LogicalType::Map(a, b) => {
            LogicalType::map(substitute_params(a, subst), substitute_params(b, subst))
        }
        LogicalType::Named { name, args } => LogicalType::Named {
            name: name.clone(),
            args: args.iter().map(|t| substitute_params(t, subst)).collect(),
        },
        _ => ty.clone(),
    }
}

// ---------------------------------------------------------------------------
// Unification
// ---------------------------------------------------------------------------

struct Unifier {
    subst: HashMap<u32, LogicalType>,
    trail: Vec<u32>,
    next_var: u32,
}

impl Unifier {
    fn new() -> Self {
        Unifier {
            subst: HashMap::new(),
            trail: Vec::new(),
            next_var: 0,
        }
    }

    fn fresh(&mut self) -> LogicalType {
        let v = self.next_var;
        self.next_var += 1;
        LogicalType::Var(v)
    }

    fn snapshot(&self) -> usize {
        self.trail.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.subst.remove(&v);
        }
    }

    /// Follow variable bindings one level.
    fn shallow(&self, ty: &LogicalType) -> LogicalType {
        let mut cur = ty.clone();
        while let LogicalType::Var(v) = cur {
            match self.subst.get(&v) {
                Some(t) => cur = t.clone(),
                None => return LogicalType::Var(v),
            }
        }
        cur
    }

    /// Fully substitute.
    fn resolve(&self, ty: &LogicalType) -> LogicalType {
        let t = self.shallow(ty);
        match t {
            LogicalType::Tuple(ts) => {
                LogicalType::Tuple(ts.iter().map(|x| self.resolve(x)).collect())
            }
            LogicalType::List(x) => LogicalType::list(self.resolve(&x)),
            LogicalType::Seq(x) => LogicalType::seq(self.resolve(&x)),
            LogicalType::FSet(x) => LogicalType::fset(self.resolve(&x)),
            LogicalType::Map(a, b) => LogicalType::map(self.resolve(&a), self.resolve(&b)),
            LogicalType::Named { name, args } => LogicalType::Named {
                name,
                args: args.iter().map(|x| self.resolve(x)).collect(),
            },
            other => other,
        }
    }

    fn occurs(&self, v: u32, ty: &LogicalType) -> bool {
        match self.shallow(ty) {
            LogicalType::Var(w) => w == v,
            LogicalType::Tuple(ts) => ts.iter().any(|t| self.occurs(v, t)),
            LogicalType::List(t) | LogicalType::Seq(t) | LogicalType::FSet(t) => self.occurs(v, &t),
            LogicalType::Map(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            LogicalType::Named { args, .. } => args.iter().any(|t| self.occurs(v, t)),
            _ => false,
        }
    }

    fn bind(&mut self, v: u32, ty: LogicalType) -> Result<(), ()> {
        if let LogicalType::Var(w) = ty {
            if w == v {
                return Ok(());
            }
        }
        if self.occurs(v, &ty) {
            return Err(());
        }
        self.subst.insert(v, ty);
        self.trail.push(v);
        Ok(())
    }

    fn unify(&mut self, a: &LogicalType, b: &LogicalType) -> Result<(), ()> {
        let a = self.shallow(a);
        let b = self.shallow(b);
        use LogicalType::*;
        match (a, b) {
            (Var(v), t) | (t, Var(v)) => self.bind(v, t),
            (Int, Int) | (Bool, Bool) | (Unit, Unit) => Ok(()),
            (Param(p), Param(q)) if p == q => Ok(()),
            (Tuple(xs), Tuple(ys)) if xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(&ys) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
            // list and seq are interchangeable finite sequences.
            (List(x), List(y)) | (Seq(x), Seq(y)) | (List(x), Seq(y)) | (Seq(x), List(y)) => {
                self.unify(&x, &y)
            }
            (FSet(x), FSet(y)) => self.unify(&x, &y),
            (Map(a1, b1), Map(a2, b2)) => {
                self.unify(&a1, &a2)?;
                self.unify(&b1, &b2)
            }
            (Named { name: n1, args: x }, Named { name: n2, args: y })
                if n1 == n2 && x.len() == y.len() =>
            {
                for (a, b) in x.iter().zip(&y) {
                    self.unify(a, b)?;
                }
                Ok(())
            }
            _ => Err(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Scopes
// ---------------------------------------------------------------------------

struct Scope {
    frames: Vec<(String, LogicalType)>,
}

impl Scope {
    fn new() -> Self {
        Scope { frames: Vec::new() }
    }

    fn bind(&mut self, name: &str, ty: LogicalType) {
        self.frames.push((name.to_string(), ty));
    }

    fn pop(&mut self, n: usize) {
        self.frames.truncate(self.frames.len() - n);
    }

    fn lookup(&self, name: &str) -> Option<&LogicalType> {
        self.frames
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum OldPolicy {
    /// requires clauses, invariants, predicate bodies.
    Forbidden,
    /// ensures and raises clauses.
    Allowed,
}

// ---------------------------------------------------------------------------
// The checker
// ---------------------------------------------------------------------------

struct Checker {
    unifier: Unifier,
    errors: Vec<TypeError>,
    node_types: HashMap<NodeId, LogicalType>,
    node_symbols: HashMap<NodeId, SymbolRef>,
    chain_modes: HashMap<NodeId, ChainMode>,
    type_infos: BTreeMap<String, TypeInfo>,
    val_infos: BTreeMap<String, ValInfo>,
    exn_names: BTreeSet<String>,
    /// Predicate parameter types, over that predicate's rigid params.
    pred_sigs: BTreeMap<String, Vec<LogicalType>>,
    pred_order: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            unifier: Unifier::new(),
            errors: Vec::new(),
            node_types: HashMap::new(),
            node_symbols: HashMap::new(),
            chain_modes: HashMap::new(),
            type_infos: BTreeMap::new(),
            val_infos: BTreeMap::new(),
            exn_names: BTreeSet::new(),
            pred_sigs: BTreeMap::new(),
            pred_order: Vec::new(),
        }
    }

    fn error(&mut self, decl: &str, span: Span, kind: TypeErrorKind, message: String) {
        self.errors.push(TypeError {
            decl: decl.to_string(),
            span,
            kind,
            message,
        });
    }

    fn expect_unify(
        &mut self,
        actual: &LogicalType,
        expected: &LogicalType,
        span: Span,
        decl: &str,
    ) {
        if self.unifier.unify(actual, expected).is_err() {
            let expected = self.unifier.resolve(expected);
            let actual = self.unifier.resolve(actual);
            self.error(
                decl,
                span,
                TypeErrorKind::Mismatch,
                format!("expected `{expected}`, found `{actual}`"),
            );
        }
    }

    // ---- declarations ----

    fn register_type(&mut self, t: &TypeDecl) {
        let params: Vec<String> = t.params.iter().map(|p| p.name.clone()).collect();
        let param_set: BTreeSet<String> = params.iter().cloned().collect();
        let models = t
            .models
            .iter()
            .map(|m| ModelInfo {
                name: m.name.clone(),
                mutable: m.mutable,
                ty: self.convert_type(&m.ty, &t.name),
            })
            .collect::<Vec<_>>();

        // Model types may only use the declaration's own type parameters.
        for m in &t.models {
            let mut used = BTreeSet::new();
            collect_type_vars(&m.ty, &mut used);
            for v in used.difference(&param_set) {
                self.error(
                    &t.name,
                    m.span,
                    TypeErrorKind::UnknownSymbol,
                    format!("type variable `'{v}` is not bound by the declaration"),
                );
            }
        }

        // Model-field names must be unique within a type.
        let mut seen = BTreeSet::new();
        for m in &t.models {
            if !seen.insert(m.name.clone()) {
                self.error(
                    &t.name,
                    m.span,
                    TypeErrorKind::Mismatch,
                    format!("duplicate model field `{}`", m.name),
                );
            }
        }

        self.type_infos.insert(
            t.name.clone(),
            TypeInfo {
                name: t.name.clone(),
                params,
                models,
            },
        );
    }

    fn check_type_decl(&mut self, t: &TypeDecl) {
        let Some(inv) = &t.invariant else { return };
        let info = self.type_infos.get(&t.name).cloned().expect("registered");
        let self_ty = LogicalType::Named {
            name: t.name.clone(),
            args: info
                .params
                .iter()
                .map(|p| LogicalType::Param(p.clone()))
                .collect(),
        };
        let mut scope = Scope::new();
        scope.bind(&inv.binder, self_ty);
        let ty = self.infer(&inv.body, &mut scope, &t.name, OldPolicy::Forbidden);
        self.expect_unify(&ty, &LogicalType::Bool, inv.body.span, &t.name);
    }

    fn check_val_decl(&mut self, v: &ValDecl) {
        let param_tys: Vec<LogicalType> = v
            .params
            .iter()
            .map(|p| self.convert_type(&p.ty, &v.name))
            .collect();
        let result_ty = self.convert_type(&v.result, &v.name);

        let Some(contract) = &v.contract else {
            self.val_infos.insert(
                v.name.clone(),
                ValInfo {
                    name: v.name.clone(),
                    params: v
                        .params
                        .iter()
                        .zip(&param_tys)
                        .map(|(p, ty)| ValParamInfo {
                            name: None,
                            ty: ty.clone(),
                            optional: p.optional,
                        })
                        .collect(),
                    result_name: None,
                    result_ty,
                    has_contract: false,
                },
            );
            return;
        };

        // Header consistency.
        if contract.header.fn_name != v.name {
            self.error(
                &v.name,
                contract.span,
                TypeErrorKind::HeaderMismatch,
                format!(
                    "contract header names `{}` but the declaration is `{}`",
                    contract.header.fn_name, v.name
                ),
            );
        }
        if contract.header.params.len() != v.params.len() {
            self.error(
                &v.name,
                contract.span,
                TypeErrorKind::HeaderMismatch,
                format!(
                    "contract header has {} parameter(s) but the type has {}",
                    contract.header.params.len(),
                    v.params.len()
                ),
            );
        }
        for (hp, (p, _)) in contract
            .header
            .params
            .iter()
            .zip(v.params.iter().zip(&param_tys))
        {
            if hp.optional != p.optional {
                self.error(
                    &v.name,
                    contract.span,
                    TypeErrorKind::HeaderMismatch,
                    "optional-parameter markers in header and type disagree".to_string(),
                );
            }
            if let (Some(hn), Some(label)) = (&hp.name, &p.label) {
                if hn != label {
                    self.error(
                        &v.name,
                        contract.span,
                        TypeErrorKind::HeaderMismatch,
                        format!("header names parameter `{hn}` but its label is `{label}`"),
                    );
                }
            }
        }
        let result_is_unit = matches!(self.unifier.shallow(&result_ty), LogicalType::Unit);
        match (&contract.header.result, result_is_unit) {
            (None, false) => self.error(
                &v.name,
                contract.span,
                TypeErrorKind::HeaderMismatch,
                "contract header must name the result for a non-unit function".to_string(),
            ),
            (Some(_), true) => self.error(
                &v.name,
                contract.span,
                TypeErrorKind::HeaderMismatch,
                "contract header names a result but the function returns unit".to_string(),
            ),
            _ => {}
        }

        // Parameter scope.
        let mut scope = Scope::new();
        let mut names: Vec<Option<String>> = Vec::new();
        for (hp, ty) in contract.header.params.iter().zip(&param_tys) {
            if let Some(n) = &hp.name {
                scope.bind(n, ty.clone());
            }
            names.push(hp.name.clone());
        }

        for r in &contract.requires {
            let ty = self.infer(r, &mut scope, &v.name, OldPolicy::Forbidden);
            self.expect_unify(&ty, &LogicalType::Bool, r.span, &v.name);
        }

        // modifies targets must be parameters with mutable models.
        for m in &contract.modifies {
            let Some(pty) = scope.lookup(&m.param).cloned() else {
                self.error(
                    &v.name,
                    m.span,
                    TypeErrorKind::BadModifies,
                    format!("modifies target `{}` is not a parameter", m.param),
                );
                continue;
            };
            let resolved = self.unifier.shallow(&pty);
            let Some((tname, _)) = resolved.head_named() else {
                self.error(
                    &v.name,
                    m.span,
                    TypeErrorKind::BadModifies,
                    format!("modifies target `{}` has no model fields", m.param),
                );
                continue;
            };
            let Some(info) = self.type_infos.get(tname).cloned() else {
                self.error(
                    &v.name,
                    m.span,
                    TypeErrorKind::BadModifies,
                    format!("modifies target `{}` has unknown type `{tname}`", m.param),
                );
                continue;
            };
            match &m.field {
                None => {
                    if !info.has_mutable_model() {
                        self.error(
                            &v.name,
                            m.span,
                            TypeErrorKind::BadModifies,
                            format!(
                                "modifies target `{}` names a type without mutable model fields",
                                m.param
                            ),
                        );
                    }
                }
                Some(f) => match info.model(f) {
                    Some(mi) if mi.mutable => {}
                    Some(_) => self.error(
                        &v.name,
                        m.span,
                        TypeErrorKind::BadModifies,
                        format!("model field `{f}` is not mutable"),
                    ),
                    None => self.error(
                        &v.name,
                        m.span,
                        TypeErrorKind::BadModifies,
                        format!("type `{tname}` has no model field `{f}`"),
                    ),
                },
            }
        }

        // Result in scope for postconditions.
        if let Some(r) = &contract.header.result {
            scope.bind(r, result_ty.clone());
        }

        for e in &contract.ensures {
            let ty = self.infer(e, &mut scope, &v.name, OldPolicy::Allowed);
            self.expect_unify(&ty, &LogicalType::Bool, e.span, &v.name);
        }
        for r in &contract.raises {
            if !self.exn_names.contains(&r.exn) {
                self.error(
                    &v.name,
                    r.span,
                    TypeErrorKind::UnknownException,
                    format!("exception `{}` is not declared", r.exn),
                );
            }
            let ty = self.infer(&r.condition, &mut scope, &v.name, OldPolicy::Allowed);
            self.expect_unify(&ty, &LogicalType::Bool, r.condition.span, &v.name);
        }

        self.val_infos.insert(
            v.name.clone(),
            ValInfo {
                name: v.name.clone(),
                params: names
                    .into_iter()
                    .zip(param_tys)
                    .zip(&v.params)
                    .map(|((name, ty), p)| ValParamInfo {
                        name,
                        ty,
                        optional: p.optional,
                    })
                    .collect(),
                result_name: contract.header.result.clone(),
                result_ty,
                has_contract: true,
            },
        );
    }

    fn check_pred_decl(&mut self, p: &PredDecl) {
        let param_tys: Vec<LogicalType> = p
            .params
            .iter()
            .map(|(_, ty)| self.convert_type(ty, &p.name))
            .collect();

        let mut scope = Scope::new();
        for ((name, _), ty) in p.params.iter().zip(&param_tys) {
            scope.bind(name, ty.clone());
        }
        let ty = self.infer(&p.body, &mut scope, &p.name, OldPolicy::Forbidden);
        self.expect_unify(&ty, &LogicalType::Bool, p.body.span, &p.name);

        self.pred_sigs.insert(p.name.clone(), param_tys);
        self.pred_order.push(p.name.clone());
    }

    // ---- types ----

    fn convert_type(&mut self, ty: &TypeExpr, decl: &str) -> LogicalType {
        match ty {
            // Type variables are rigid: bound either by the enclosing type
            // declaration or implicitly by the val/predicate.
            TypeExpr::Var { name, .. } => LogicalType::Param(name.clone()),
            TypeExpr::Tuple(items) => {
                LogicalType::Tuple(items.iter().map(|t| self.convert_type(t, decl)).collect())
            }
            TypeExpr::Arrow(a, b) => {
                LogicalType::map(self.convert_type(a, decl), self.convert_type(b, decl))
            }
            TypeExpr::Named { name, args } => {
                let conv_args: Vec<LogicalType> =
                    args.iter().map(|t| self.convert_type(t, decl)).collect();
                match (name.as_str(), conv_args.len()) {
                    ("int", 0) => LogicalType::Int,
                    ("bool", 0) => LogicalType::Bool,
                    ("unit", 0) => LogicalType::Unit,
                    ("list", 1) => LogicalType::list(conv_args.into_iter().next().unwrap()),
                    ("seq", 1) => LogicalType::seq(conv_args.into_iter().next().unwrap()),
                    ("fset", 1) => LogicalType::fset(conv_args.into_iter().next().unwrap()),
                    _ => {
                        let known_arity = if name == VERTEX_TYPE {
                            Some(0)
                        } else {
                            self.type_infos.get(name).map(|i| i.params.len())
                        };
                        match known_arity {
                            Some(n) if n == conv_args.len() => {}
                            Some(n) => self.error(
                                decl,
                                Span::dummy(),
                                TypeErrorKind::Mismatch,
                                format!(
                                    "type `{name}` expects {n} argument(s), got {}",
                                    conv_args.len()
                                ),
                            ),
                            None => self.error(
                                decl,
                                Span::dummy(),
                                TypeErrorKind::UnknownSymbol,
                                format!("unknown type `{name}`"),
                            ),
                        }
                        LogicalType::Named {
                            name: name.clone(),
                            args: conv_args,
                        }
                    }
                }
            }
        }
    }

    fn instantiate_stdlib(&mut self, f: StdFn) -> LogicalType {
        use LogicalType as T;
        let a = self.unifier.fresh();
        let b = self.unifier.fresh();
        match f {
            StdFn::ListMem => T::map(a.clone(), T::map(T::list(a), T::Bool)),
            StdFn::ListMap => T::map(T::map(a.clone(), b.clone()), T::map(T::list(a), T::list(b))),
            StdFn::ListHd => T::map(T::list(a.clone()), a),
            StdFn::ListTl => T::map(T::list(a.clone()), T::list(a)),
            StdFn::ListRev => T::map(T::list(a.clone()), T::list(a)),
            StdFn::ListRemoveAssoc => {
                let pair = T::Tuple(vec![a.clone(), b]);
                T::map(a, T::map(T::list(pair.clone()), T::list(pair)))
            }
            StdFn::Fst => T::map(T::Tuple(vec![a.clone(), b]), a),
            StdFn::Snd => T::map(T::Tuple(vec![a, b.clone()]), b),
            StdFn::SeqLength => T::map(T::seq(a), T::Int),
            StdFn::SeqMem => T::map(a.clone(), T::map(T::seq(a), T::Bool)),
            StdFn::FsetMem => T::map(a.clone(), T::map(T::fset(a), T::Bool)),
        }
    }

    fn instantiate_predicate(&mut self, name: &str) -> LogicalType {
        let sig = self.pred_sigs.get(name).cloned().unwrap_or_default();
        // Replace the predicate's rigid params with fresh variables.
        let mut vars: HashMap<String, LogicalType> = HashMap::new();
        let mut inst = Vec::new();
        for ty in &sig {
            inst.push(self.freshen(ty, &mut vars));
        }
        let mut acc = LogicalType::Bool;
        for ty in inst.into_iter().rev() {
            acc = LogicalType::map(ty, acc);
        }
        acc
    }

    fn freshen(
        &mut self,
        ty: &LogicalType,
        vars: &mut HashMap<String, LogicalType>,
    ) -> LogicalType {
        match ty {
            LogicalType::Param(p) => vars
                .entry(p.clone())
                .or_insert_with(|| self.unifier.fresh())
                .clone(),
            LogicalType::Tuple(ts) => {
                LogicalType::Tuple(ts.iter().map(|t| self.freshen(t, vars)).collect())
            }
            LogicalType::List(t) => LogicalType::list(self.freshen(t, vars)),
            LogicalType::Seq(t) => LogicalType::seq(self.freshen(t, vars)),
            LogicalType::FSet(t) => LogicalType::fset(self.freshen(t, vars)),
            LogicalType::Map(a, b) => {
                LogicalType::map(self.freshen(a, vars), self.freshen(b, vars))
            }
            LogicalType::Named { name, args } => LogicalType::Named {
                name: name.clone(),
                args: args.iter().map(|t| self.freshen(t, vars)).collect(),
            },
            _ => ty.clone(),
        }
    }

    // ---- terms ----

    fn record(&mut self, id: NodeId, ty: LogicalType) -> LogicalType {
        self.node_types.insert(id, ty.clone());
        ty
    }

    fn infer(&mut self, term: &Term, scope: &mut Scope, decl: &str, old: OldPolicy) -> LogicalType {
        use TermKind::*;
        let ty = match &term.kind {
            Int(_) => LogicalType::Int,
            Bool(_) => LogicalType::Bool,
            Unit => LogicalType::Unit,
            EmptyList => LogicalType::list(self.unifier.fresh()),
            Var(name) => {
                if let Some(ty) = scope.lookup(name) {
                    let ty = ty.clone();
                    self.node_symbols.insert(term.id, SymbolRef::Local);
                    ty
                } else if self.pred_sigs.contains_key(name) {
                    self.node_symbols
                        .insert(term.id, SymbolRef::Predicate(name.clone()));
                    self.instantiate_predicate(name)
                } else if let Some(f) = StdFn::lookup(name) {
                    self.node_symbols.insert(term.id, SymbolRef::Stdlib(f));
                    self.instantiate_stdlib(f)
                } else {
                    self.error(
                        decl,
                        term.span,
                        TypeErrorKind::UnknownSymbol,
                        format!("unknown symbol `{name}`"),
                    );
                    self.unifier.fresh()
                }
            }
            Tuple(items) => LogicalType::Tuple(
                items
                    .iter()
                    .map(|t| self.infer(t, scope, decl, old))
                    .collect(),
            ),
            ListLit(items) => {
                let el = self.unifier.fresh();
                for item in items {
                    let ty = self.infer(item, scope, decl, old);
                    self.expect_unify(&ty, &el, item.span, decl);
                }
                LogicalType::list(el)
            }
            Cons(h, t) => {
                let hty = self.infer(h, scope, decl, old);
                let tty = self.infer(t, scope, decl, old);
                self.expect_unify(&tty, &LogicalType::list(hty.clone()), t.span, decl);
                LogicalType::list(hty)
            }
            Append(a, b) => {
                let aty = self.infer(a, scope, decl, old);
                let bty = self.infer(b, scope, decl, old);
                let el = self.unifier.fresh();
                self.expect_unify(&aty, &LogicalType::list(el.clone()), a.span, decl);
                self.expect_unify(&bty, &LogicalType::list(el.clone()), b.span, decl);
                LogicalType::list(el)
            }
            Compare { first, rest } => {
                self.check_chain(term, first, rest, scope, decl, old);
                LogicalType::Bool
            }
            Binary { op, lhs, rhs } => {
                let lty = self.infer(lhs, scope, decl, old);
                let rty = self.infer(rhs, scope, decl, old);
                match op {
                    BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff => {
                        self.expect_unify(&lty, &LogicalType::Bool, lhs.span, decl);
                        self.expect_unify(&rty, &LogicalType::Bool, rhs.span, decl);
                        LogicalType::Bool
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                        self.expect_unify(&lty, &LogicalType::Int, lhs.span, decl);
                        self.expect_unify(&rty, &LogicalType::Int, rhs.span, decl);
                        LogicalType::Int
                    }
                }
            }
            Not(t) => {
                let ty = self.infer(t, scope, decl, old);
                self.expect_unify(&ty, &LogicalType::Bool, t.span, decl);
                LogicalType::Bool
            }
            Neg(t) => {
                let ty = self.infer(t, scope, decl, old);
                self.expect_unify(&ty, &LogicalType::Int, t.span, decl);
                LogicalType::Int
            }
            If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cty = self.infer(cond, scope, decl, old);
                self.expect_unify(&cty, &LogicalType::Bool, cond.span, decl);
                let tty = self.infer(then_branch, scope, decl, old);
                let ety = self.infer(else_branch, scope, decl, old);
                self.expect_unify(&ety, &tty, else_branch.span, decl);
                tty
            }
            Let { name, value, body } => {
                let vty = self.infer(value, scope, decl, old);
                scope.bind(name, vty);
                let bty = self.infer(body, scope, decl, old);
                scope.pop(1);
                bty
            }
            App { func, arg } => {
                let fty = self.infer(func, scope, decl, old);
                let aty = self.infer(arg, scope, decl, old);
                let res = self.unifier.fresh();
                let want = LogicalType::map(aty, res.clone());
                if self.unifier.unify(&fty, &want).is_err() {
                    let fty = self.unifier.resolve(&fty);
                    self.error(
                        decl,
                        term.span,
                        TypeErrorKind::Mismatch,
                        format!("cannot apply a value of type `{fty}`"),
                    );
                }
                res
            }
            Field { base, field } => {
                let bty = self.infer(base, scope, decl, old);
                let resolved = self.unifier.shallow(&bty);
                match resolved.head_named() {
                    Some((tname, args)) => {
                        let info = self.type_infos.get(tname).cloned();
                        match info.and_then(|i| i.model_type_at(field, args)) {
                            Some(ty) => ty,
                            None => {
                                self.error(
                                    decl,
                                    term.span,
                                    TypeErrorKind::UnknownSymbol,
                                    format!("type `{tname}` has no model field `{field}`"),
                                );
                                self.unifier.fresh()
                            }
                        }
                    }
                    None => {
                        let shown = self.unifier.resolve(&bty);
                        self.error(
                            decl,
                            term.span,
                            TypeErrorKind::CannotInfer,
                            format!("model access on a value of type `{shown}`"),
                        );
                        self.unifier.fresh()
                    }
                }
            }
            Index { base, index } => {
                let bty = self.infer(base, scope, decl, old);
                let ity = self.infer(index, scope, decl, old);
                self.expect_unify(&ity, &LogicalType::Int, index.span, decl);
                let el = self.unifier.fresh();
                self.expect_unify(&bty, &LogicalType::seq(el.clone()), base.span, decl);
                el
            }
            Old(inner) => {
                if old == OldPolicy::Forbidden {
                    self.error(
                        decl,
                        term.span,
                        TypeErrorKind::OldOutsidePostcondition,
                        "`old` may only appear in ensures and raises clauses".to_string(),
                    );
                }
                let mentions_state = inner.any_subterm(&mut |t| {
                    matches!(t.kind, TermKind::Field { .. })
                        || matches!(&t.kind, TermKind::Var(n) if scope.lookup(n).is_some())
                });
                if !mentions_state {
                    self.error(
                        decl,
                        term.span,
                        TypeErrorKind::OldOfPureTerm,
                        "`old` must apply to a term mentioning a model or parameter".to_string(),
                    );
                }
                self.infer(inner, scope, decl, old)
            }
            Quant { binders, body, .. } => {
                for b in binders {
                    let v = self.unifier.fresh();
                    scope.bind(b, v);
                }
                let bty = self.infer(body, scope, decl, old);
                self.expect_unify(&bty, &LogicalType::Bool, body.span, decl);
                scope.pop(binders.len());
                LogicalType::Bool
            }
        };
        self.record(term.id, ty)
    }

    /// Comparison chains. A chain of length one is an ordinary comparison.
    /// Longer chains are conjunctions of adjacent comparisons; when that
    /// reading is ill-typed and the head is a bool compared with `=`, the
    /// chain is a boolean equation `first = (tail conjunction)`.
    fn check_chain(
        &mut self,
        chain: &Term,
        first: &Term,
        rest: &[(CmpOp, Term)],
        scope: &mut Scope,
        decl: &str,
        old: OldPolicy,
    ) {
        let ftype = self.infer(first, scope, decl, old);
        let tail_types: Vec<LogicalType> = rest
            .iter()
            .map(|(_, t)| self.infer(t, scope, decl, old))
            .collect();

        let ops: Vec<CmpOp> = rest.iter().map(|(op, _)| *op).collect();
        let operands: Vec<&LogicalType> = std::iter::once(&ftype).chain(&tail_types).collect();

        // Conjunction reading: each adjacent pair compatible with its op.
        let mark = self.unifier.snapshot();
        let mut ok = true;
        for (i, op) in ops.iter().enumerate() {
            let (a, b) = (operands[i], operands[i + 1]);
            let pair_ok = match op {
                CmpOp::Eq | CmpOp::Ne => self.unifier.unify(a, b).is_ok(),
                _ => {
                    self.unifier.unify(a, &LogicalType::Int).is_ok()
                        && self.unifier.unify(b, &LogicalType::Int).is_ok()
                }
            };
            if !pair_ok {
                ok = false;
                break;
            }
        }
        if ok {
            self.chain_modes.insert(chain.id, ChainMode::Conjunction);
            return;
        }
        self.unifier.rollback(mark);

        // Boolean-equation reading: `b = (tail chain)`.
        if rest.len() >= 2 && ops[0] == CmpOp::Eq {
            let mark = self.unifier.snapshot();
            let mut ok = self.unifier.unify(&ftype, &LogicalType::Bool).is_ok();
            if ok {
                for (i, op) in ops.iter().enumerate().skip(1) {
                    let (a, b) = (operands[i], operands[i + 1]);
                    let pair_ok = match op {
                        CmpOp::Eq | CmpOp::Ne => self.unifier.unify(a, b).is_ok(),
                        _ => {
                            self.unifier.unify(a, &LogicalType::Int).is_ok()
                                && self.unifier.unify(b, &LogicalType::Int).is_ok()
                        }
                    };
                    if !pair_ok {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.chain_modes.insert(chain.id, ChainMode::BoolEquation);
                return;
            }
            self.unifier.rollback(mark);
        }

        let shown: Vec<String> = operands
            .iter()
            .map(|t| format!("`{}`", self.unifier.resolve(t)))
            .collect();
        self.error(
            decl,
            chain.span,
            TypeErrorKind::Mismatch,
            format!(
                "comparison chain over incompatible types: {}",
                shown.join(", ")
            ),
        );
        self.chain_modes.insert(chain.id, ChainMode::Conjunction);
    }
}

fn collect_type_vars(ty: &TypeExpr, out: &mut BTreeSet<String>) {
    match ty {
        TypeExpr::Var { name, .. } => {
            out.insert(name.clone());
        }
        TypeExpr::Tuple(ts) => ts.iter().for_each(|t| collect_type_vars(t, out)),
        TypeExpr::Arrow(a, b) => {
            collect_type_vars(a, out);
            collect_type_vars(b, out);
        }
        TypeExpr::Named { args, .. } => args.iter().for_each(|t| collect_type_vars(t, out)),
    }
}


#[cfg(test)]
mod edge_tests {
    use super::*;
    use crate::parser::parse_interface;

    #[test]
    fn dotted_modifies_of_immutable_field_rejected() {
        let src = "type gt\n(*@ model dom : V.t fset\n    mutable model tag : int *)\nval f : gt -> unit\n(*@ f g\n    modifies g.dom *)";
        let errs = typecheck(parse_interface(src).unwrap()).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.kind == TypeErrorKind::BadModifies && e.message.contains("not mutable")));
    }

    #[test]
    fn duplicate_model_fields_rejected() {
        let src = "type 'a t\n(*@ mutable model elems : 'a list\n    mutable model elems : int *)";
        let errs = typecheck(parse_interface(src).unwrap()).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.message.contains("duplicate model field")));
    }

    #[test]
    fn unbound_type_variable_in_model_rejected() {
        let src = "type t\n(*@ mutable model elems : 'a list *)";
        let errs = typecheck(parse_interface(src).unwrap()).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.message.contains("not bound by the declaration")));
    }
}
