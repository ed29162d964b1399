//! Executability classification and state-machine-testing compatibility.
//!
//! A term is executable when every quantifier it contains matches one of
//! the bounded shapes below and no map-typed value has to be materialized.
//! Accepted bounded shapes (guards peel off one binder at a time, left to
//! right; bounds may mention earlier binders):
//!
//! - `forall x. List.mem x l -> P` (also `Seq.mem`, `Fset.mem`, `mem`)
//! - `forall i. a <= i < b -> P` (any mix of `<`/`<=`)
//! - `exists x. List.mem x l && P`, `exists i. a <= i < b && P`
//! - `forall x. M1 x <-> M2 x` for two membership tests (checked over the
//!   union of both collections)

use crate::ast::*;
use crate::span::Span;
use crate::typecheck::{ChainMode, LogicalType, StdFn, SymbolRef, TypedSpec, TypedTerm, ValInfo};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// A borrowed view of the typechecker's per-node side tables, so spec
/// clauses and standalone monitor terms share one code path.
#[derive(Clone, Copy)]
pub struct TermTables<'a> {
    pub types: &'a HashMap<NodeId, LogicalType>,
    pub symbols: &'a HashMap<NodeId, SymbolRef>,
    pub chain_modes: &'a HashMap<NodeId, ChainMode>,
}

impl TypedSpec {
    pub fn tables(&self) -> TermTables<'_> {
        TermTables {
            types: &self.types,
            symbols: &self.symbols,
            chain_modes: &self.chain_modes,
        }
    }
}

impl TypedTerm {
    pub fn tables(&self) -> TermTables<'_> {
        TermTables {
            types: &self.types,
            symbols: &self.symbols,
            chain_modes: &self.chain_modes,
        }
    }
}

impl<'a> TermTables<'a> {
    pub fn node_type(&self, id: NodeId) -> Option<&'a LogicalType> {
        self.types.get(&id)
    }

    pub fn symbol(&self, id: NodeId) -> Option<&'a SymbolRef> {
        self.symbols.get(&id)
    }

    pub fn chain_mode(&self, id: NodeId) -> ChainMode {
        self.chain_modes
            .get(&id)
            .copied()
            .unwrap_or(ChainMode::Conjunction)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExecReason {
    UnboundedExistential,
    UnboundedUniversal,
    NonExecutableMapType,
    AbstractPredicate(String),
}

impl ExecReason {
    pub fn label(&self) -> String {
        match self {
            ExecReason::UnboundedExistential => "unbounded-existential".to_string(),
            ExecReason::UnboundedUniversal => "unbounded-universal".to_string(),
            ExecReason::NonExecutableMapType => "non-executable-map-type".to_string(),
            ExecReason::AbstractPredicate(p) => format!("abstract-predicate:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecVerdict {
    Executable,
    NonExecutable(Vec<(Span, ExecReason)>),
}

impl ExecVerdict {
    pub fn is_executable(&self) -> bool {
        matches!(self, ExecVerdict::Executable)
    }

    fn merge(self, other: ExecVerdict) -> ExecVerdict {
        match (self, other) {
            (ExecVerdict::Executable, v) | (v, ExecVerdict::Executable) => v,
            (ExecVerdict::NonExecutable(mut a), ExecVerdict::NonExecutable(b)) => {
                a.extend(b);
                ExecVerdict::NonExecutable(a)
            }
        }
    }
}

/// How a bounded quantifier enumerates one binder.
#[derive(Debug, Clone, Copy)]
pub enum DomainExpr<'t> {
    /// Elements of a list/seq/fset value.
    Collection(&'t Term),
    /// Union of two collections (the `M1 <-> M2` shape).
    Union(&'t Term, &'t Term),
    /// Integer range; `lo`/`hi` adjusted by the strictness flags.
    IntRange {
        lo: &'t Term,
        lo_strict: bool,
        hi: &'t Term,
        hi_inclusive: bool,
    },
}

#[derive(Debug, Clone)]
pub struct BoundedPlan<'t> {
    pub binders: Vec<(&'t str, DomainExpr<'t>)>,
    /// The quantifier's entire body; guards evaluate as part of it.
    pub body: &'t Term,
}

/// Recognize a quantifier's bounded shape, if any.
pub fn bounded_plan<'t>(tables: TermTables<'_>, term: &'t Term) -> Option<BoundedPlan<'t>> {
    let TermKind::Quant {
        kind,
        binders,
        body,
    } = &term.kind
    else {
        return None;
    };

    // `forall x. M1 x <-> M2 x` over two membership tests.
    if *kind == QuantKind::Forall && binders.len() == 1 {
        if let TermKind::Binary {
            op: BinOp::Iff,
            lhs,
            rhs,
        } = &body.kind
        {
            if let (Some(c1), Some(c2)) = (
                membership_collection(tables, lhs, &binders[0]),
                membership_collection(tables, rhs, &binders[0]),
            ) {
                return Some(BoundedPlan {
                    binders: vec![(binders[0].as_str(), DomainExpr::Union(c1, c2))],
                    body,
                });
            }
        }
    }

    let mut remaining: &Term = body;
    let mut doms = Vec::new();
    for (i, b) in binders.iter().enumerate() {
        let (guard, rest) = match (kind, &remaining.kind) {
            (
                QuantKind::Forall,
                TermKind::Binary {
                    op: BinOp::Implies,
                    lhs,
                    rhs,
                },
            ) => (lhs.as_ref(), rhs.as_ref()),
            (
                QuantKind::Exists,
                TermKind::Binary {
                    op: BinOp::And,
                    lhs,
                    rhs,
                },
            ) => (lhs.as_ref(), rhs.as_ref()),
            _ => return None,
        };
        // The guard's bound may mention earlier binders but not this one
        // or any later one.
        let later = &binders[i..];
        let dom = domain_of_guard(tables, guard, b, later)?;
        doms.push((b.as_str(), dom));
        remaining = rest;
    }
    Some(BoundedPlan {
        binders: doms,
        body,
    })
}

/// `List.mem x coll` / `Seq.mem x coll` / `Fset.mem x coll` where `x` is
/// the binder and `coll` does not mention it.
fn membership_collection<'t>(
    tables: TermTables<'_>,
    guard: &'t Term,
    binder: &str,
) -> Option<&'t Term> {
    let (head, args) = guard.app_spine();
    if args.len() != 2 {
        return None;
    }
    match tables.symbol(head.id) {
        Some(SymbolRef::Stdlib(StdFn::ListMem | StdFn::SeqMem | StdFn::FsetMem)) => {}
        _ => return None,
    }
    match &args[0].kind {
        TermKind::Var(v) if v == binder => {}
        _ => return None,
    }
    if args[1].free_vars().iter().any(|v| v == binder) {
        return None;
    }
    Some(args[1])
}

fn domain_of_guard<'t>(
    tables: TermTables<'_>,
    guard: &'t Term,
    binder: &str,
    forbidden: &[String],
) -> Option<DomainExpr<'t>> {
    let mentions_forbidden = |t: &Term| {
        t.free_vars()
            .iter()
            .any(|v| forbidden.iter().any(|f| f == v))
    };

    if let Some(coll) = membership_collection(tables, guard, binder) {
        if mentions_forbidden(coll) {
            return None;
        }
        return Some(DomainExpr::Collection(coll));
    }

    // `a <= i < b` (any mix of strict/inclusive).
    if let TermKind::Compare { first, rest } = &guard.kind {
        if rest.len() == 2 && tables.chain_mode(guard.id) == ChainMode::Conjunction {
            let (op1, mid) = &rest[0];
            let (op2, hi) = &rest[1];
            let lo = first.as_ref();
            let ops_ok =
                matches!(op1, CmpOp::Le | CmpOp::Lt) && matches!(op2, CmpOp::Le | CmpOp::Lt);
            let mid_is_binder = matches!(&mid.kind, TermKind::Var(v) if v == binder);
            if ops_ok && mid_is_binder && !mentions_forbidden(lo) && !mentions_forbidden(hi) {
                return Some(DomainExpr::IntRange {
                    lo,
                    lo_strict: *op1 == CmpOp::Lt,
                    hi,
                    hi_inclusive: *op2 == CmpOp::Le,
                });
            }
        }
    }
    None
}

/// Classify one typed term. `oracle_backed` predicates evaluate natively
/// and count as executable; `pred_verdicts` holds the verdicts of
/// already-classified predicates.
pub fn classify_term(
    tables: TermTables<'_>,
    term: &Term,
    oracle_backed: &BTreeSet<String>,
    pred_verdicts: &BTreeMap<String, ExecVerdict>,
) -> ExecVerdict {
    let mut reasons: Vec<(Span, ExecReason)> = Vec::new();
    walk(
        tables,
        term,
        false,
        oracle_backed,
        pred_verdicts,
        &mut reasons,
    );
    if reasons.is_empty() {
        ExecVerdict::Executable
    } else {
        ExecVerdict::NonExecutable(reasons)
    }
}

fn walk(
    tables: TermTables<'_>,
    term: &Term,
    allow_map: bool,
    oracle: &BTreeSet<String>,
    preds: &BTreeMap<String, ExecVerdict>,
    reasons: &mut Vec<(Span, ExecReason)>,
) {
    if !allow_map {
        if let Some(LogicalType::Map(..)) = tables.node_type(term.id) {
            reasons.push((term.span, ExecReason::NonExecutableMapType));
        }
    }

    match &term.kind {
        TermKind::Quant { kind, body, .. } => match bounded_plan(tables, term) {
            Some(plan) => {
                for (_, dom) in &plan.binders {
                    match dom {
                        DomainExpr::Collection(c) => walk(tables, c, false, oracle, preds, reasons),
                        DomainExpr::Union(a, b) => {
                            walk(tables, a, false, oracle, preds, reasons);
                            walk(tables, b, false, oracle, preds, reasons);
                        }
                        DomainExpr::IntRange { lo, hi, .. } => {
                            walk(tables, lo, false, oracle, preds, reasons);
                            walk(tables, hi, false, oracle, preds, reasons);
                        }
                    }
                }
                walk(tables, body, false, oracle, preds, reasons);
            }
            None => {
                let reason = match kind {
                    QuantKind::Forall => ExecReason::UnboundedUniversal,
                    QuantKind::Exists => ExecReason::UnboundedExistential,
                };
                reasons.push((term.span, reason));
                walk(tables, body, false, oracle, preds, reasons);
            }
        },
        TermKind::Var(name) => {
            if let Some(SymbolRef::Predicate(p)) = tables.symbol(term.id) {
                if !oracle.contains(p) {
                    match preds.get(p) {
                        Some(ExecVerdict::Executable) => {}
                        Some(ExecVerdict::NonExecutable(_)) => {
                            reasons.push((term.span, ExecReason::AbstractPredicate(p.clone())))
                        }
                        None => {
                            reasons.push((term.span, ExecReason::AbstractPredicate(name.clone())))
                        }
                    }
                }
            }
        }
        TermKind::App { func, arg } => {
            walk(tables, func, true, oracle, preds, reasons);
            // The function argument of `List.map` may be function-typed.
            let head_is_map = matches!(
                &func.kind,
                TermKind::Var(_)
                    if matches!(tables.symbol(func.id), Some(SymbolRef::Stdlib(StdFn::ListMap)))
            );
            walk(tables, arg, head_is_map, oracle, preds, reasons);
        }
        _ => {
            term.for_each_child(&mut |c| walk(tables, c, false, oracle, preds, reasons));
        }
    }
}

/// Classify every predicate of a spec in declaration order.
pub fn classify_predicates(
    spec: &TypedSpec,
    oracle_backed: &BTreeSet<String>,
) -> BTreeMap<String, ExecVerdict> {
    let mut verdicts = BTreeMap::new();
    for name in &spec.pred_order {
        if let Some(p) = spec.ast.find_pred(name) {
            let v = classify_term(spec.tables(), &p.body, oracle_backed, &verdicts);
            verdicts.insert(name.clone(), v);
        }
    }
    verdicts
}

/// Classify all clauses of one val's contract, merged.
pub fn classify_val(
    spec: &TypedSpec,
    val: &ValDecl,
    oracle_backed: &BTreeSet<String>,
    pred_verdicts: &BTreeMap<String, ExecVerdict>,
) -> Option<ExecVerdict> {
    let contract = val.contract.as_ref()?;
    let mut verdict = ExecVerdict::Executable;
    let clauses = contract
        .requires
        .iter()
        .chain(&contract.ensures)
        .chain(contract.raises.iter().map(|r| &r.condition));
    for clause in clauses {
        verdict = verdict.merge(classify_term(
            spec.tables(),
            clause,
            oracle_backed,
            pred_verdicts,
        ));
    }
    Some(verdict)
}

// ---------------------------------------------------------------------------
// State-machine-testing compatibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StmReason {
    MultipleSutParameters,
    NoSutParameter,
    HigherOrderParameter,
    NonGeneratableParameter(String),
}

impl StmReason {
    pub fn label(&self) -> String {
        match self {
            StmReason::MultipleSutParameters => "multiple SUT parameters".to_string(),
            StmReason::NoSutParameter => "no SUT parameter".to_string(),
            StmReason::HigherOrderParameter => "higher-order parameter".to_string(),
            StmReason::NonGeneratableParameter(t) => {
                format!("non-generatable parameter of type {t}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmVerdict {
    Compatible { constructor: bool },
    Incompatible(StmReason),
}

impl StmVerdict {
    pub fn is_compatible(&self) -> bool {
        matches!(self, StmVerdict::Compatible { .. })
    }
}

fn is_sut(ty: &LogicalType, sut_type: &str) -> bool {
    matches!(ty.head_named(), Some((name, _)) if name == sut_type)
}

/// Values the trace generator can produce once type parameters are
/// instantiated from the configured domains.
fn generatable(ty: &LogicalType) -> bool {
    match ty {
        LogicalType::Int | LogicalType::Bool | LogicalType::Unit | LogicalType::Param(_) => true,
        LogicalType::Tuple(ts) => ts.iter().all(generatable),
        LogicalType::List(t) | LogicalType::Seq(t) => generatable(t),
        _ => false,
    }
}

/// Decide whether one operation fits the single-SUT state-machine tester.
pub fn stm_compatibility(val: &ValInfo, sut_type: &str) -> StmVerdict {
    let mut sut_params = 0usize;
    for p in &val.params {
        if is_sut(&p.ty, sut_type) {
            sut_params += 1;
        }
    }
    let result_is_sut = is_sut(&val.result_ty, sut_type);

    if sut_params >= 2 || (sut_params >= 1 && result_is_sut) {
        return StmVerdict::Incompatible(StmReason::MultipleSutParameters);
    }
    if sut_params == 0 && !result_is_sut {
        return StmVerdict::Incompatible(StmReason::NoSutParameter);
    }
    for p in &val.params {
        if is_sut(&p.ty, sut_type) || p.optional {
            continue;
        }
        if matches!(p.ty, LogicalType::Map(..)) {
            return StmVerdict::Incompatible(StmReason::HigherOrderParameter);
        }
        if !generatable(&p.ty) {
            return StmVerdict::Incompatible(StmReason::NonGeneratableParameter(p.ty.to_string()));
        }
    }
    StmVerdict::Compatible {
        constructor: result_is_sut,
    }
}

// ---------------------------------------------------------------------------
// Whole-spec analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DeclAnalysis {
    pub name: String,
    pub kind: &'static str,
    pub exec: Option<ExecVerdict>,
    pub stm: Option<StmVerdict>,
}

/// Per-declaration executability and compatibility report.
pub fn analyze_spec(
    spec: &TypedSpec,
    sut_type: &str,
    oracle_backed: &BTreeSet<String>,
) -> Vec<DeclAnalysis> {
    let pred_verdicts = classify_predicates(spec, oracle_backed);
    let mut out = Vec::new();
    for decl in &spec.ast.decls {
        match decl {
            Decl::Type(t) => {
                let exec = t.invariant.as_ref().map(|inv| {
                    classify_term(spec.tables(), &inv.body, oracle_backed, &pred_verdicts)
                });
                out.push(DeclAnalysis {
                    name: t.name.clone(),
                    kind: "type",
                    exec,
                    stm: None,
                });
            }
            Decl::Val(v) => {
                let exec = classify_val(spec, v, oracle_backed, &pred_verdicts);
                let stm = spec
                    .val_infos
                    .get(&v.name)
                    .map(|info| stm_compatibility(info, sut_type));
                out.push(DeclAnalysis {
                    name: v.name.clone(),
                    kind: "val",
                    exec,
                    stm,
                });
            }
            Decl::Exn(e) => out.push(DeclAnalysis {
                name: e.name.clone(),
                kind: "exception",
                exec: None,
                stm: None,
            }),
            Decl::Pred(p) => out.push(DeclAnalysis {
                name: p.name.clone(),
                kind: "predicate",
                exec: pred_verdicts.get(&p.name).cloned(),
                stm: None,
            }),
        }
    }
    out
}

/// Default SUT type for a spec: the first declared abstract type.
pub fn default_sut_type(spec: &TypedSpec) -> Option<String> {
    spec.ast.type_decls().next().map(|t| t.name.clone())
}


#[cfg(test)]
mod monitor_classification_tests {
    use super::*;
    use crate::parser::{parse_interface, parse_term};
    use crate::typecheck::{typecheck, typecheck_term, LogicalType, VERTEX_TYPE};

    /// The completeness invariant is non-executable only because of the
    /// nested reachability predicate; backing that predicate with the
    /// native oracle makes it executable.
    #[test]
    fn completeness_invariant_executability_hinges_on_has_path() {
        let spec =
            typecheck(parse_interface(include_str!("../specs/graph.mli.spec")).unwrap()).unwrap();
        let term =
            parse_term("has_path v1 v2 graph -> exists_ w. Seq.mem w q && has_path w v2 graph")
                .unwrap();
        let vertex = LogicalType::Named {
            name: VERTEX_TYPE.to_string(),
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
            ("q", LogicalType::seq(vertex)),
        ];
        let typed = typecheck_term(&spec, &bindings, &term).unwrap();

        let no_oracle = BTreeSet::new();
        let preds = classify_predicates(&spec, &no_oracle);
        match classify_term(typed.tables(), &term, &no_oracle, &preds) {
            ExecVerdict::NonExecutable(reasons) => {
                assert!(
                    reasons.iter().all(
                        |(_, r)| matches!(r, ExecReason::AbstractPredicate(p) if p == "has_path")
                    ),
                    "only the nested predicate blocks execution: {reasons:?}"
                );
            }
            v => panic!("expected non-executable, got {v:?}"),
        }

        let oracle: BTreeSet<String> = ["has_path".to_string()].into();
        let preds = classify_predicates(&spec, &oracle);
        assert!(classify_term(typed.tables(), &term, &oracle, &preds).is_executable());
    }
}
