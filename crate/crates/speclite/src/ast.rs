//! Abstract syntax for specification interface files.
//!
//! An interface is a sequence of host declarations (`type`, `val`,
//! `exception`) each annotated by a spec comment `(*@ ... *)`, plus
//! standalone `(*@ predicate ... *)` definitions. Terms carry a node id
//! (used by the typechecker to attach resolved types) and a source span;
//! both are ignored by structural equality.

use crate::span::Span;
use serde::Serialize;

pub type NodeId = u32;

/// A parsed interface: declarations in source order.
#[derive(Debug, Clone, Serialize)]
pub struct SpecInterface {
    pub decls: Vec<Decl>,
}

impl SpecInterface {
    pub fn type_decls(&self) -> impl Iterator<Item = &TypeDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Type(t) => Some(t),
            _ => None,
        })
    }

    pub fn val_decls(&self) -> impl Iterator<Item = &ValDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Val(v) => Some(v),
            _ => None,
        })
    }

    pub fn exn_decls(&self) -> impl Iterator<Item = &ExnDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Exn(e) => Some(e),
            _ => None,
        })
    }

    pub fn pred_decls(&self) -> impl Iterator<Item = &PredDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Pred(p) => Some(p),
            _ => None,
        })
    }

    pub fn find_type(&self, name: &str) -> Option<&TypeDecl> {
        self.type_decls().find(|t| t.name == name)
    }

    pub fn find_val(&self, name: &str) -> Option<&ValDecl> {
        self.val_decls().find(|v| v.name == name)
    }

    pub fn find_pred(&self, name: &str) -> Option<&PredDecl> {
        self.pred_decls().find(|p| p.name == name)
    }

    /// Structural equality: spans and node ids do not participate.
    pub fn structurally_equal(&self, other: &SpecInterface) -> bool {
        self.decls.len() == other.decls.len()
            && self
                .decls
                .iter()
                .zip(&other.decls)
                .all(|(a, b)| a.structurally_equal(b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Decl {
    Type(TypeDecl),
    Val(ValDecl),
    Exn(ExnDecl),
    Pred(PredDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Type(t) => &t.name,
            Decl::Val(v) => &v.name,
            Decl::Exn(e) => &e.name,
            Decl::Pred(p) => &p.name,
        }
    }

    fn structurally_equal(&self, other: &Decl) -> bool {
        match (self, other) {
            (Decl::Type(a), Decl::Type(b)) => a.structurally_equal(b),
            (Decl::Val(a), Decl::Val(b)) => a.structurally_equal(b),
            (Decl::Exn(a), Decl::Exn(b)) => {
                a.name == b.name
                    && match (&a.payload, &b.payload) {
                        (None, None) => true,
                        (Some(x), Some(y)) => x.structurally_equal(y),
                        _ => false,
                    }
            }
            (Decl::Pred(a), Decl::Pred(b)) => a.structurally_equal(b),
            _ => false,
        }
    }
}

/// `type 'a t` plus its model fields and optional invariant.
#[derive(Debug, Clone, Serialize)]
pub struct TypeDecl {
    pub name: String,
    pub params: Vec<TypeParam>,
    pub models: Vec<ModelField>,
    pub invariant: Option<TypeInvariant>,
    pub span: Span,
}

/// A declaration-bound type parameter; `bang` records the variance marker
/// in `(!'a, !'b) t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeParam {
    pub name: String,
    pub bang: bool,
}

impl TypeDecl {
    fn structurally_equal(&self, other: &TypeDecl) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.models.len() == other.models.len()
            && self.models.iter().zip(&other.models).all(|(a, b)| {
                a.name == b.name && a.mutable == b.mutable && a.ty.structurally_equal(&b.ty)
            })
            && match (&self.invariant, &other.invariant) {
                (None, None) => true,
                (Some(a), Some(b)) => a.binder == b.binder && a.body.structurally_equal(&b.body),
                _ => false,
            }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelField {
    pub name: String,
    pub mutable: bool,
    pub ty: TypeExpr,
    pub span: Span,
}

/// `with x invariant <term>` attached to a type declaration.
#[derive(Debug, Clone, Serialize)]
pub struct TypeInvariant {
    pub binder: String,
    pub body: Term,
    pub span: Span,
}

/// `val name : <arrow type>` plus its contract.
#[derive(Debug, Clone, Serialize)]
pub struct ValDecl {
    pub name: String,
    pub params: Vec<ParamType>,
    pub result: TypeExpr,
    pub contract: Option<Contract>,
    pub span: Span,
}

impl ValDecl {
    fn structurally_equal(&self, other: &ValDecl) -> bool {
        self.name == other.name
            && self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(a, b)| {
                a.label == b.label && a.optional == b.optional && a.ty.structurally_equal(&b.ty)
            })
            && self.result.structurally_equal(&other.result)
            && match (&self.contract, &other.contract) {
                (None, None) => true,
                (Some(a), Some(b)) => a.structurally_equal(b),
                _ => false,
            }
    }
}

/// One parameter position in a `val` arrow type. `?random: bool` gives
/// `label = Some("random")`, `optional = true`.
#[derive(Debug, Clone, Serialize)]
pub struct ParamType {
    pub label: Option<String>,
    pub optional: bool,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExnDecl {
    pub name: String,
    pub payload: Option<TypeExpr>,
    pub span: Span,
}

/// Standalone `(*@ predicate name (params) = body *)`.
#[derive(Debug, Clone, Serialize)]
pub struct PredDecl {
    pub name: String,
    pub params: Vec<(String, TypeExpr)>,
    pub body: Term,
    pub span: Span,
}

impl PredDecl {
    fn structurally_equal(&self, other: &PredDecl) -> bool {
        self.name == other.name
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.0 == b.0 && a.1.structurally_equal(&b.1))
            && self.body.structurally_equal(&other.body)
    }
}

/// A function contract: header naming result and parameters, then clauses.
#[derive(Debug, Clone, Serialize)]
pub struct Contract {
    pub header: ContractHeader,
    pub requires: Vec<Term>,
    pub ensures: Vec<Term>,
    pub modifies: Vec<ModifiesTarget>,
    pub raises: Vec<RaisesClause>,
    pub span: Span,
}

impl Contract {
    fn structurally_equal(&self, other: &Contract) -> bool {
        let terms_eq = |xs: &[Term], ys: &[Term]| {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys)
                    .all(|(a, b): (&Term, &Term)| a.structurally_equal(b))
        };
        self.header == other.header
            && terms_eq(&self.requires, &other.requires)
            && terms_eq(&self.ensures, &other.ensures)
            && self.modifies.len() == other.modifies.len()
            && self
                .modifies
                .iter()
                .zip(&other.modifies)
                .all(|(a, b)| a.param == b.param && a.field == b.field)
            && self.raises.len() == other.raises.len()
            && self
                .raises
                .iter()
                .zip(&other.raises)
                .all(|(a, b)| a.exn == b.exn && a.condition.structurally_equal(&b.condition))
    }
}

/// `x = pop q` gives `result = Some("x")`, `fn_name = "pop"`, params `[q]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractHeader {
    pub result: Option<String>,
    pub fn_name: String,
    pub params: Vec<HeaderParam>,
}

/// A parameter name in a contract header. `()` is the anonymous unit
/// parameter; `?random` carries the optional marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeaderParam {
    pub name: Option<String>,
    pub optional: bool,
}

/// Target of a `modifies` clause: a parameter or a dotted model field.
#[derive(Debug, Clone, Serialize)]
pub struct ModifiesTarget {
    pub param: String,
    pub field: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaisesClause {
    pub exn: String,
    pub condition: Term,
    pub span: Span,
}

/// Surface type expressions.
#[derive(Debug, Clone, Serialize)]
pub enum TypeExpr {
    /// `'a`; `bang` records the variance marker in `!'a`.
    Var {
        name: String,
        bang: bool,
    },
    /// `int`, `'a list`, `('a, 'b) t`, `V.t` — a head name with arguments.
    Named {
        name: String,
        args: Vec<TypeExpr>,
    },
    Tuple(Vec<TypeExpr>),
    /// `t1 -> t2`: a map in model positions, the function arrow in `val` types.
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn named(name: &str) -> TypeExpr {
        TypeExpr::Named {
            name: name.to_string(),
            args: Vec::new(),
        }
    }

    pub fn structurally_equal(&self, other: &TypeExpr) -> bool {
        match (self, other) {
            (TypeExpr::Var { name: a, bang: ab }, TypeExpr::Var { name: b, bang: bb }) => {
                a == b && ab == bb
            }
            (TypeExpr::Named { name: a, args: xs }, TypeExpr::Named { name: b, args: ys }) => {
                a == b
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| x.structurally_equal(y))
            }
            (TypeExpr::Tuple(xs), TypeExpr::Tuple(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.structurally_equal(y))
            }
            (TypeExpr::Arrow(a1, r1), TypeExpr::Arrow(a2, r2)) => {
                a1.structurally_equal(a2) && r1.structurally_equal(r2)
            }
            _ => false,
        }
    }
}

/// A specification term.
#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub id: NodeId,
    pub span: Span,
    pub kind: TermKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    And,
    Or,
    Implies,
    Iff,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "->",
            BinOp::Iff => "<->",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuantKind {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Serialize)]
pub enum TermKind {
    Int(i64),
    Bool(bool),
    Unit,
    EmptyList,
    /// A variable, parameter, binder, or (possibly qualified) symbol name.
    Var(String),
    Tuple(Vec<Term>),
    ListLit(Vec<Term>),
    Cons(Box<Term>, Box<Term>),
    Append(Box<Term>, Box<Term>),
    /// A comparison chain `a = b = c` or `0 <= i < n`. A single comparison
    /// is a chain with one tail element.
    Compare {
        first: Box<Term>,
        rest: Vec<(CmpOp, Term)>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Term>,
        rhs: Box<Term>,
    },
    Not(Box<Term>),
    Neg(Box<Term>),
    If {
        cond: Box<Term>,
        then_branch: Box<Term>,
        else_branch: Box<Term>,
    },
    Let {
        name: String,
        value: Box<Term>,
        body: Box<Term>,
    },
    /// Curried application `f x`.
    App {
        func: Box<Term>,
        arg: Box<Term>,
    },
    /// Model access `x.field`.
    Field {
        base: Box<Term>,
        field: String,
    },
    /// Sequence index `l[i]`.
    Index {
        base: Box<Term>,
        index: Box<Term>,
    },
    Old(Box<Term>),
    Quant {
        kind: QuantKind,
        binders: Vec<String>,
        body: Box<Term>,
    },
}

impl Term {
    pub fn structurally_equal(&self, other: &Term) -> bool {
        use TermKind::*;
        match (&self.kind, &other.kind) {
            (Int(a), Int(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (Unit, Unit) => true,
            (EmptyList, EmptyList) => true,
            (Var(a), Var(b)) => a == b,
            (Tuple(xs), Tuple(ys)) | (ListLit(xs), ListLit(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.structurally_equal(y))
            }
            (Cons(h1, t1), Cons(h2, t2)) | (Append(h1, t1), Append(h2, t2)) => {
                h1.structurally_equal(h2) && t1.structurally_equal(t2)
            }
            (
                Compare {
                    first: f1,
                    rest: r1,
                },
                Compare {
                    first: f2,
                    rest: r2,
                },
            ) => {
                f1.structurally_equal(f2)
                    && r1.len() == r2.len()
                    && r1
                        .iter()
                        .zip(r2)
                        .all(|((o1, t1), (o2, t2))| o1 == o2 && t1.structurally_equal(t2))
            }
            (
                Binary {
                    op: o1,
                    lhs: l1,
                    rhs: r1,
                },
                Binary {
                    op: o2,
                    lhs: l2,
                    rhs: r2,
                },
            ) => o1 == o2 && l1.structurally_equal(l2) && r1.structurally_equal(r2),
            (Not(a), Not(b)) | (Neg(a), Neg(b)) | (Old(a), Old(b)) => a.structurally_equal(b),
            (
                If {
                    cond: c1,
                    then_branch: t1,
                    else_branch: e1,
                },
                If {
                    cond: c2,
                    then_branch: t2,
                    else_branch: e2,
                },
            ) => {
                c1.structurally_equal(c2) && t1.structurally_equal(t2) && e1.structurally_equal(e2)
            }
            (
                Let {
                    name: n1,
                    value: v1,
                    body: b1,
                },
                Let {
                    name: n2,
                    value: v2,
                    body: b2,
                },
            ) => n1 == n2 && v1.structurally_equal(v2) && b1.structurally_equal(b2),
            (App { func: f1, arg: a1 }, App { func: f2, arg: a2 }) => {
                f1.structurally_equal(f2) && a1.structurally_equal(a2)
            }
            (
                Field {
                    base: b1,
                    field: f1,
                },
                Field {
                    base: b2,
                    field: f2,
                },
            ) => f1 == f2 && b1.structurally_equal(b2),
            (
                Index {
                    base: b1,
                    index: i1,
                },
                Index {
                    base: b2,
                    index: i2,
                },
            ) => b1.structurally_equal(b2) && i1.structurally_equal(i2),
            (
                Quant {
                    kind: k1,
                    binders: bs1,
                    body: b1,
                },
                Quant {
                    kind: k2,
                    binders: bs2,
                    body: b2,
                },
            ) => k1 == k2 && bs1 == bs2 && b1.structurally_equal(b2),
            _ => false,
        }
    }

    /// Application spine: `f x y` gives `(f, [x, y])`; non-applications
    /// give `(self, [])`.
    pub fn app_spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let TermKind::App { func, arg } = &cur.kind {
            args.push(arg.as_ref());
            cur = func;
        }
        args.reverse();
        (cur, args)
    }

    /// Does any subterm satisfy `pred`?
    pub fn any_subterm(&self, pred: &mut dyn FnMut(&Term) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        let mut found = false;
        self.for_each_child(&mut |c| {
            if !found && c.any_subterm(pred) {
                found = true;
            }
        });
        found
    }

    /// Visit direct children.
    pub fn for_each_child(&self, f: &mut dyn FnMut(&Term)) {
        use TermKind::*;
        match &self.kind {
            Int(_) | Bool(_) | Unit | EmptyList | Var(_) => {}
            Tuple(xs) | ListLit(xs) => xs.iter().for_each(f),
            Cons(a, b) | Append(a, b) => {
                f(a);
                f(b);
            }
            Compare { first, rest } => {
                f(first);
                rest.iter().for_each(|(_, t)| f(t));
            }
            Binary { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Not(t) | Neg(t) | Old(t) => f(t),
            If {
                cond,
                then_branch,
                else_branch,
            } => {
                f(cond);
                f(then_branch);
                f(else_branch);
            }
            Let { value, body, .. } => {
                f(value);
                f(body);
            }
            App { func, arg } => {
                f(func);
                f(arg);
            }
            Field { base, .. } => f(base),
            Index { base, index } => {
                f(base);
                f(index);
            }
            Quant { body, .. } => f(body),
        }
    }

    /// Free variables (names not bound by let/quantifier binders within).
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound: Vec<String> = Vec::new();
        fn go(t: &Term, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match &t.kind {
                TermKind::Var(name) => {
                    if !bound.iter().any(|b| b == name) && !out.iter().any(|o| o == name) {
                        out.push(name.clone());
                    }
                }
                TermKind::Let { name, value, body } => {
                    go(value, bound, out);
                    bound.push(name.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                TermKind::Quant { binders, body, .. } => {
                    let n = binders.len();
                    bound.extend(binders.iter().cloned());
                    go(body, bound, out);
                    bound.truncate(bound.len() - n);
                }
                _ => t.for_each_child(&mut |c| go(c, bound, out)),
            }
        }
        go(self, &mut bound, &mut out);
        out
    }
}
