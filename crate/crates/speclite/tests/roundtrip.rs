//! Parser laws over the spec corpus: pretty-print round-trips, parse
//! determinism, and error locality under single-token corruption.

use proptest::prelude::*;
use speclite::ast::{BinOp, CmpOp, QuantKind, Term, TermKind};
use speclite::lexer::{lex_range, LineMap, Tok};
use speclite::parser::{parse_interface, parse_term};
use speclite::printer::{pretty_print, term_to_string};
use speclite::span::Span;

const CORPUS: [(&str, &str); 5] = [
    ("queue.mli.spec", include_str!("../specs/queue.mli.spec")),
    (
        "queue_exec.mli.spec",
        include_str!("../specs/queue_exec.mli.spec"),
    ),
    (
        "hashtbl.mli.spec",
        include_str!("../specs/hashtbl.mli.spec"),
    ),
    (
        "hashtbl_full.mli.spec",
        include_str!("../specs/hashtbl_full.mli.spec"),
    ),
    ("graph.mli.spec", include_str!("../specs/graph.mli.spec")),
];

#[test]
fn corpus_files_roundtrip() {
    for (name, src) in CORPUS {
        let first = parse_interface(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = pretty_print(&first);
        let second = parse_interface(&printed)
            .unwrap_or_else(|e| panic!("{name}: printed form failed to parse: {e}\n{printed}"));
        assert!(
            first.structurally_equal(&second),
            "{name}: round-trip changed structure:\n{printed}"
        );
    }
}

#[test]
fn optional_marker_survives_roundtrip() {
    let src = include_str!("../specs/hashtbl.mli.spec");
    let printed = pretty_print(&parse_interface(src).unwrap());
    assert!(printed.contains("?random:"), "printed:\n{printed}");
    assert!(printed.contains("(!'a, !'b) t"), "printed:\n{printed}");
}

#[test]
fn parse_is_deterministic() {
    for (_, src) in CORPUS {
        let a = parse_interface(src).unwrap();
        let b = parse_interface(src).unwrap();
        assert!(a.structurally_equal(&b));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}

/// Replace each token of each corpus file with a garbage token; whenever
/// the result fails to parse, the reported span must sit at or after the
/// corruption point.
#[test]
fn parse_errors_point_at_or_after_corruption() {
    for (name, src) in CORPUS {
        let map = LineMap::new(src);
        let host_tokens = lex_range(src, 0, src.len(), &map, false).unwrap();
        let mut corruption_points: Vec<Span> = Vec::new();
        for t in &host_tokens {
            match t.tok {
                Tok::Eof => {}
                Tok::SpecBlock { start, end } => {
                    let inner = lex_range(src, start, end, &map, true).unwrap();
                    for it in inner {
                        if it.tok != Tok::Eof {
                            corruption_points.push(it.span);
                        }
                    }
                }
                _ => corruption_points.push(t.span),
            }
        }
        let mut checked = 0;
        for span in corruption_points {
            for garbage in ["]", ")", "=", "forall"] {
                let mut corrupted = String::with_capacity(src.len());
                corrupted.push_str(&src[..span.start]);
                corrupted.push_str(garbage);
                corrupted.push_str(&src[span.end..]);
                if let Err(e) = parse_interface(&corrupted) {
                    checked += 1;
                    assert!(
                        e.span.start >= span.start,
                        "{name}: `{garbage}` at byte {} reported at byte {} ({e})",
                        span.start,
                        e.span.start
                    );
                }
            }
        }
        assert!(
            checked > 40,
            "{name}: corruption produced only {checked} parse errors"
        );
    }
}

// ---------------------------------------------------------------------------
// Generated-term round-trips
// ---------------------------------------------------------------------------

fn leaf_term() -> impl Strategy<Value = TermKind> {
    prop_oneof![
        (0i64..1000).prop_map(TermKind::Int),
        any::<bool>().prop_map(TermKind::Bool),
        Just(TermKind::Unit),
        Just(TermKind::EmptyList),
        prop_oneof![Just("x"), Just("y"), Just("q"), Just("foo")]
            .prop_map(|s| TermKind::Var(s.to_string())),
    ]
}

fn dummy(kind: TermKind) -> Term {
    Term {
        id: 0,
        span: Span::dummy(),
        kind,
    }
}

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = leaf_term().prop_map(dummy);
    leaf.prop_recursive(5, 64, 4, |inner| {
        let var = prop_oneof![Just("x"), Just("y"), Just("z")];
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| dummy(TermKind::Cons(Box::new(a), Box::new(b)))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| dummy(TermKind::Append(Box::new(a), Box::new(b)))),
            (
                prop_oneof![
                    Just(BinOp::And),
                    Just(BinOp::Or),
                    Just(BinOp::Implies),
                    Just(BinOp::Iff),
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Mod)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, lhs, rhs)| dummy(TermKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                })),
            (
                inner.clone(),
                proptest::collection::vec(
                    (
                        prop_oneof![
                            Just(CmpOp::Eq),
                            Just(CmpOp::Ne),
                            Just(CmpOp::Lt),
                            Just(CmpOp::Le),
                            Just(CmpOp::Gt),
                            Just(CmpOp::Ge)
                        ],
                        inner.clone()
                    ),
                    1..3
                )
            )
                .prop_map(|(first, rest)| dummy(TermKind::Compare {
                    first: Box::new(first),
                    rest,
                })),
            inner
                .clone()
                .prop_map(|t| dummy(TermKind::Not(Box::new(t)))),
            inner
                .clone()
                .prop_map(|t| dummy(TermKind::Neg(Box::new(t)))),
            inner
                .clone()
                .prop_map(|t| dummy(TermKind::Old(Box::new(t)))),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| dummy(
                TermKind::If {
                    cond: Box::new(c),
                    then_branch: Box::new(t),
                    else_branch: Box::new(e),
                }
            )),
            (var.clone(), inner.clone(), inner.clone()).prop_map(|(n, v, b)| dummy(
                TermKind::Let {
                    name: n.to_string(),
                    value: Box::new(v),
                    body: Box::new(b),
                }
            )),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| dummy(TermKind::App {
                func: Box::new(f),
                arg: Box::new(a),
            })),
            (inner.clone(), var.clone()).prop_map(|(b, f)| dummy(TermKind::Field {
                base: Box::new(b),
                field: f.to_string(),
            })),
            (inner.clone(), inner.clone()).prop_map(|(b, i)| dummy(TermKind::Index {
                base: Box::new(b),
                index: Box::new(i),
            })),
            proptest::collection::vec(inner.clone(), 2..4)
                .prop_map(|items| dummy(TermKind::Tuple(items))),
            proptest::collection::vec(inner.clone(), 1..4)
                .prop_map(|items| dummy(TermKind::ListLit(items))),
            (
                prop_oneof![Just(QuantKind::Forall), Just(QuantKind::Exists)],
                proptest::collection::vec(var, 1..3),
                inner
            )
                .prop_map(|(kind, binders, body)| dummy(TermKind::Quant {
                    kind,
                    binders: binders.into_iter().map(str::to_string).collect(),
                    body: Box::new(body),
                })),
        ]
    })
}

proptest! {
    /// Printing any term and reparsing it yields the same structure.
    #[test]
    fn generated_terms_roundtrip(term in term_strategy()) {
        let printed = term_to_string(&term);
        let reparsed = parse_term(&printed)
            .unwrap_or_else(|e| panic!("printed `{printed}` failed to parse: {e}"));
        prop_assert!(
            term.structurally_equal(&reparsed),
            "round-trip changed structure: {printed}"
        );
    }
}

proptest! {
    /// Bounded quantifier duality: `forall x in D. P(x)` equals
    /// `not (exists x in D. not P(x))` over arbitrary finite domains.
    #[test]
    fn quantifier_duality_over_random_lists(
        items in proptest::collection::vec(-50i64..50, 0..12),
        pivot in -50i64..50,
    ) {
        use speclite::eval::{eval, EvalCtx, EvalEnv};
        use speclite::typecheck::{typecheck_term, typecheck, LogicalType};
        use speclite::value::{ModelState, Value};

        let spec = typecheck(
            parse_interface(include_str!("../specs/queue_exec.mli.spec")).unwrap()
        ).unwrap();
        let forall_src = format!("forall x. List.mem x l -> x < {pivot}");
        let exists_src = format!("exists x. List.mem x l && not (x < {pivot})");
        let mut results = Vec::new();
        for src in [forall_src, exists_src] {
            let term = parse_term(&src).unwrap();
            let typed = typecheck_term(
                &spec,
                &[("l", LogicalType::list(LogicalType::Int))],
                &term,
            ).unwrap();
            let ctx = EvalCtx::new(&spec);
            let models = ModelState::new();
            let mut env = EvalEnv::new(&models);
            env.push("l", Value::int_list(items.clone()));
            results.push(eval(&ctx, typed.tables(), &mut env, &term).unwrap());
        }
        let fa = results[0] == Value::Bool(true);
        let ex = results[1] == Value::Bool(true);
        prop_assert_eq!(fa, !ex);
    }
}

/// Evaluating the parsed `is_path` predicate through the interpreter
/// agrees with the native path predicate on sampled graphs and sequences.
#[test]
fn interpreted_is_path_matches_native_predicate() {
    use rand::{Rng, SeedableRng};
    use speclite::corpus::{typed_spec, SpecKind};
    use speclite::eval::{eval, eval_is_path, EvalCtx, EvalEnv};
    use speclite::graph::GraphModel;
    use speclite::typecheck::{typecheck_term, LogicalType, VERTEX_TYPE};
    use speclite::value::{ModelState, Value};
    use std::rc::Rc;

    let spec = typed_spec(SpecKind::Graph);
    let term = parse_term("is_path v1 v2 p g").unwrap();
    let vertex = LogicalType::Named {
        name: VERTEX_TYPE.to_string(),
        args: vec![],
    };
    let typed = typecheck_term(
        spec,
        &[
            ("v1", vertex.clone()),
            ("v2", vertex.clone()),
            ("p", LogicalType::seq(vertex)),
            (
                "g",
                LogicalType::Named {
                    name: "gt".to_string(),
                    args: vec![],
                },
            ),
        ],
        &term,
    )
    .unwrap();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1507);
    let mut agree = 0u32;
    for _ in 0..400 {
        let n = rng.random_range(1..=6u32);
        let density = rng.random_range(0.0..=1.0);
        let g = Rc::new(GraphModel::random(&mut rng, n, density));
        let v1 = rng.random_range(0..n);
        let v2 = rng.random_range(0..n);
        let len = rng.random_range(0..=4usize);
        let path: Vec<u32> = (0..len).map(|_| rng.random_range(0..n)).collect();

        let native = eval_is_path(&g, v1, v2, &path);

        let ctx = EvalCtx::new(spec);
        let models = ModelState::new();
        let mut env = EvalEnv::new(&models);
        env.push("v1", Value::Vertex(v1));
        env.push("v2", Value::Vertex(v2));
        env.push("p", Value::seq(path.iter().map(|v| Value::Vertex(*v))));
        env.push("g", Value::Graph(g.clone()));
        let interpreted = eval(&ctx, typed.tables(), &mut env, &term).unwrap();
        assert_eq!(interpreted, Value::Bool(native), "path {path:?} in {g:?}");
        agree += 1;
    }
    assert_eq!(agree, 400);
}

proptest! {
    /// The parser returns a result on arbitrary input; it never panics,
    /// including on non-ASCII text and unterminated constructs.
    #[test]
    fn parser_total_on_arbitrary_input(fragments in proptest::collection::vec(
        prop_oneof![
            Just("type".to_string()),
            Just("val".to_string()),
            Just("(*@".to_string()),
            Just("*)".to_string()),
            Just("ensures".to_string()),
            Just("forall".to_string()),
            Just("q.elems".to_string()),
            Just("=".to_string()),
            Just("[".to_string()),
            Just("]".to_string()),
            Just("->".to_string()),
            Just("'a".to_string()),
            Just("::".to_string()),
            Just("9223372036854775807".to_string()),
            Just("99999999999999999999".to_string()),
            "[a-z]{1,4}".prop_map(|s| s),
            "\\PC{0,3}".prop_map(|s| s),
        ],
        0..24,
    )) {
        let source = fragments.join(" ");
        let _ = parse_interface(&source);
        let _ = parse_term(&source);
    }
}
