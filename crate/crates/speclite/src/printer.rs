//! Pretty-printer. Output re-parses to a structurally identical interface.

use crate::ast::*;

/// Render a whole interface back to source text.
pub fn pretty_print(spec: &SpecInterface) -> String {
    let mut out = String::new();
    for (i, decl) in spec.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match decl {
            Decl::Type(t) => print_type_decl(&mut out, t),
            Decl::Val(v) => print_val_decl(&mut out, v),
            Decl::Exn(e) => {
                out.push_str(&format!("exception {}", e.name));
                if let Some(p) = &e.payload {
                    out.push_str(" of ");
                    out.push_str(&type_to_string(p, 0));
                }
                out.push('\n');
            }
            Decl::Pred(p) => print_pred_decl(&mut out, p),
        }
    }
    out
}

/// Render one term (used by reports and diagnostics).
pub fn term_to_string(term: &Term) -> String {
    let mut s = String::new();
    print_term(&mut s, term, 0, true);
    s
}

/// Render a type expression.
pub fn type_to_string(ty: &TypeExpr, ctx: u8) -> String {
    // Type precedence: arrow 0 < tuple 1 < application 2 < atom 3.
    let (text, prec) = match ty {
        TypeExpr::Var { name, bang } => {
            let mark = if *bang { "!" } else { "" };
            (format!("{mark}'{name}"), 3)
        }
        TypeExpr::Named { name, args } => match args.len() {
            0 => (name.clone(), 3),
            1 => (format!("{} {}", type_to_string(&args[0], 3), name), 2),
            _ => {
                let inner: Vec<String> = args.iter().map(|a| type_to_string(a, 0)).collect();
                (format!("({}) {}", inner.join(", "), name), 2)
            }
        },
        TypeExpr::Tuple(items) => {
            let inner: Vec<String> = items.iter().map(|t| type_to_string(t, 2)).collect();
            (inner.join(" * "), 1)
        }
        TypeExpr::Arrow(lhs, rhs) => (
            format!("{} -> {}", type_to_string(lhs, 1), type_to_string(rhs, 0)),
            0,
        ),
    };
    if prec < ctx {
        format!("({text})")
    } else {
        text
    }
}

fn print_type_decl(out: &mut String, t: &TypeDecl) {
    out.push_str("type ");
    match t.params.len() {
        0 => {}
        1 if !t.params[0].bang => {
            out.push_str(&format!("'{} ", t.params[0].name));
        }
        _ => {
            let parts: Vec<String> = t
                .params
                .iter()
                .map(|p| format!("{}'{}", if p.bang { "!" } else { "" }, p.name))
                .collect();
            out.push_str(&format!("({}) ", parts.join(", ")));
        }
    }
    out.push_str(&t.name);
    out.push('\n');

    if t.models.is_empty() && t.invariant.is_none() {
        return;
    }
    let mut lines = Vec::new();
    for m in &t.models {
        let mutability = if m.mutable { "mutable " } else { "" };
        lines.push(format!(
            "{}model {} : {}",
            mutability,
            m.name,
            type_to_string(&m.ty, 0)
        ));
    }
    if let Some(inv) = &t.invariant {
        lines.push(format!(
            "with {} invariant {}",
            inv.binder,
            term_to_string(&inv.body)
        ));
    }
    print_spec_block(out, &lines);
}

fn print_val_decl(out: &mut String, v: &ValDecl) {
    out.push_str(&format!("val {} : ", v.name));
    let mut parts = Vec::new();
    for p in &v.params {
        let prefix = match (&p.label, p.optional) {
            (Some(l), true) => format!("?{l}: "),
            (Some(l), false) => format!("{l}: "),
            (None, _) => String::new(),
        };
        parts.push(format!("{}{}", prefix, type_to_string(&p.ty, 1)));
    }
    parts.push(type_to_string(&v.result, 1));
    out.push_str(&parts.join(" -> "));
    out.push('\n');

    if let Some(c) = &v.contract {
        let mut lines = Vec::new();
        let mut header = String::new();
        if let Some(r) = &c.header.result {
            header.push_str(r);
            header.push_str(" = ");
        }
        header.push_str(&c.header.fn_name);
        for p in &c.header.params {
            header.push(' ');
            match &p.name {
                Some(n) if p.optional => header.push_str(&format!("?{n}")),
                Some(n) => header.push_str(n),
                None => header.push_str("()"),
            }
        }
        lines.push(header);
        for r in &c.requires {
            lines.push(format!("requires {}", term_to_string(r)));
        }
        if !c.modifies.is_empty() {
            let targets: Vec<String> = c
                .modifies
                .iter()
                .map(|m| match &m.field {
                    Some(f) => format!("{}.{}", m.param, f),
                    None => m.param.clone(),
                })
                .collect();
            lines.push(format!("modifies {}", targets.join(", ")));
        }
        for e in &c.ensures {
            lines.push(format!("ensures {}", term_to_string(e)));
        }
        for r in &c.raises {
            lines.push(format!(
                "raises {} -> {}",
                r.exn,
                term_to_string(&r.condition)
            ));
        }
        print_spec_block(out, &lines);
    }
}

fn print_pred_decl(out: &mut String, p: &PredDecl) {
    // Regroup adjacent parameters with identical types: `(v1 v2: V.t)`.
    let mut groups: Vec<(Vec<&str>, &TypeExpr)> = Vec::new();
    for (name, ty) in &p.params {
        match groups.last_mut() {
            Some((names, gty)) if gty.structurally_equal(ty) => names.push(name),
            _ => groups.push((vec![name.as_str()], ty)),
        }
    }
    let params: Vec<String> = groups
        .iter()
        .map(|(names, ty)| format!("({}: {})", names.join(" "), type_to_string(ty, 0)))
        .collect();
    let lines = vec![format!(
        "predicate {} {} = {}",
        p.name,
        params.join(" "),
        term_to_string(&p.body)
    )];
    print_spec_block(out, &lines);
}

fn print_spec_block(out: &mut String, lines: &[String]) {
    out.push_str("(*@ ");
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push_str("\n    ");
        }
        out.push_str(line);
    }
    out.push_str(" *)\n");
}

// Term precedence levels, loosest to tightest. Constructs that extend
// maximally right (quantifier, let, if) are level 0 and get parenthesized
// anywhere that is not a rightmost position.
fn prec(term: &Term) -> u8 {
    use TermKind::*;
    match &term.kind {
        Quant { .. } | Let { .. } | If { .. } => 0,
        Binary {
            op: BinOp::Implies, ..
        }
        | Binary { op: BinOp::Iff, .. } => 1,
        Binary { op: BinOp::Or, .. } => 2,
        Binary { op: BinOp::And, .. } => 3,
        Compare { .. } => 4,
        Append(..) => 5,
        Cons(..) => 6,
        Binary { op: BinOp::Add, .. } | Binary { op: BinOp::Sub, .. } => 7,
        Binary { op: BinOp::Mul, .. }
        | Binary { op: BinOp::Div, .. }
        | Binary { op: BinOp::Mod, .. } => 8,
        Neg(..) | Not(..) | Old(..) => 9,
        Int(n) if *n < 0 => 9,
        App { .. } => 10,
        Field { .. } | Index { .. } => 11,
        _ => 12,
    }
}

fn print_term(out: &mut String, term: &Term, ctx: u8, rightmost: bool) {
    use TermKind::*;
    let p = prec(term);
    // Level-0 constructs extend maximally right: they parse unparenthesized
    // in any rightmost operand position below the application level.
    let needs_parens = if p == 0 {
        !rightmost || ctx > 9
    } else {
        p < ctx
    };
    if needs_parens {
        out.push('(');
    }
    // Inside parentheses everything is rightmost again.
    let rm = rightmost || needs_parens;

    match &term.kind {
        Int(n) => out.push_str(&n.to_string()),
        Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Unit => out.push_str("()"),
        EmptyList => out.push_str("[]"),
        Var(name) => out.push_str(name),
        Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_term(out, item, 0, true);
            }
            out.push(')');
        }
        ListLit(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                print_term(out, item, 0, true);
            }
            out.push(']');
        }
        Cons(h, t) => {
            print_term(out, h, 7, false);
            out.push_str(" :: ");
            print_term(out, t, 6, rm);
        }
        Append(a, b) => {
            print_term(out, a, 6, false);
            out.push_str(" @ ");
            print_term(out, b, 5, rm);
        }
        Compare { first, rest } => {
            print_term(out, first, 5, false);
            for (i, (op, operand)) in rest.iter().enumerate() {
                out.push_str(&format!(" {} ", op.symbol()));
                let last = i + 1 == rest.len();
                print_term(out, operand, 5, rm && last);
            }
        }
        Binary { op, lhs, rhs } => {
            let (lctx, rctx) = match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => (p, p + 1),
                _ => (p + 1, p),
            };
            print_term(out, lhs, lctx, false);
            out.push_str(&format!(" {} ", op.symbol()));
            print_term(out, rhs, rctx, rm);
        }
        Not(t) => {
            out.push_str("not ");
            print_term(out, t, 10, false);
        }
        Neg(t) => {
            out.push('-');
            print_term(out, t, 9, false);
        }
        If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            print_term(out, cond, 0, true);
            out.push_str(" then ");
            print_term(out, then_branch, 0, true);
            out.push_str(" else ");
            print_term(out, else_branch, 0, rm);
        }
        Let { name, value, body } => {
            out.push_str(&format!("let {name} = "));
            print_term(out, value, 0, true);
            out.push_str(" in ");
            print_term(out, body, 0, rm);
        }
        App { func, arg } => {
            print_term(out, func, 10, false);
            out.push(' ');
            print_term(out, arg, 11, false);
        }
        Field { base, field } => {
            print_term(out, base, 11, false);
            out.push_str(&format!(".{field}"));
        }
        Index { base, index } => {
            print_term(out, base, 11, false);
            out.push('[');
            print_term(out, index, 0, true);
            out.push(']');
        }
        Old(t) => {
            out.push_str("old ");
            print_term(out, t, 11, false);
        }
        Quant {
            kind,
            binders,
            body,
        } => {
            let kw = match kind {
                QuantKind::Forall => "forall",
                QuantKind::Exists => "exists_",
            };
            out.push_str(&format!("{kw} {}. ", binders.join(", ")));
            print_term(out, body, 0, rm);
        }
    }

    if needs_parens {
        out.push(')');
    }
}
