//! Recursive descent parser for interface files.
//!
//! Host declarations (`type`, `val`, `exception`) are parsed first; each
//! `(*@ ... *)` block immediately following a declaration is re-lexed and
//! parsed as that declaration's annotation. Standalone spec blocks must be
//! `predicate` definitions.

use crate::ast::*;
use crate::lexer::{lex_range, LexError, LineMap, Tok, Token};
use crate::span::Span;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("parse error at {span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError {
            message: e.message,
            span: e.span,
        }
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Parse a complete interface file.
pub fn parse_interface(source: &str) -> ParseResult<SpecInterface> {
    let map = LineMap::new(source);
    let tokens = lex_range(source, 0, source.len(), &map, false)?;
    let mut ids = IdGen { next: 0 };
    let mut host = HostParser {
        source,
        map: &map,
        tokens,
        pos: 0,
        ids: &mut ids,
    };
    host.parse_interface()
}

/// Parse a single term, for monitors and tests.
pub fn parse_term(source: &str) -> ParseResult<Term> {
    let map = LineMap::new(source);
    let tokens = lex_range(source, 0, source.len(), &map, true)?;
    let mut ids = IdGen { next: 0 };
    let mut p = TermParser {
        tokens,
        pos: 0,
        ids: &mut ids,
    };
    let term = p.parse_term()?;
    p.expect_eof()?;
    Ok(term)
}

struct IdGen {
    next: NodeId,
}

impl IdGen {
    fn fresh(&mut self) -> NodeId {
        let id = self.next;
        self.next += 1;
        id
    }
}

struct HostParser<'a> {
    source: &'a str,
    map: &'a LineMap,
    tokens: Vec<Token>,
    pos: usize,
    ids: &'a mut IdGen,
}

impl<'a> HostParser<'a> {
    fn parse_interface(&mut self) -> ParseResult<SpecInterface> {
        let mut decls = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::KwType => decls.push(Decl::Type(self.parse_type_decl()?)),
                Tok::KwVal => decls.push(Decl::Val(self.parse_val_decl()?)),
                Tok::KwException => decls.push(Decl::Exn(self.parse_exn_decl()?)),
                Tok::SpecBlock { start, end } => {
                    self.advance();
                    let mut sp = self.spec_parser(start, end)?;
                    if sp.peek() == &Tok::KwPredicate {
                        let pred = sp.parse_predicate()?;
                        sp.expect_eof()?;
                        decls.push(Decl::Pred(pred));
                    } else {
                        return Err(ParseError {
                            message: "expected a declaration; a spec comment here must define \
                                      a predicate or immediately follow the declaration it \
                                      annotates"
                                .to_string(),
                            span: sp.peek_span(),
                        });
                    }
                }
                other => {
                    return Err(ParseError {
                        message: format!(
                            "expected `type`, `val`, `exception`, or a spec comment, found {}",
                            other.describe()
                        ),
                        span: self.peek_span(),
                    });
                }
            }
        }
        Ok(SpecInterface { decls })
    }

    fn spec_parser(&mut self, start: usize, end: usize) -> ParseResult<TermParser<'_>> {
        let tokens = lex_range(self.source, start, end, self.map, true)?;
        Ok(TermParser {
            tokens,
            pos: 0,
            ids: self.ids,
        })
    }

    fn parse_type_decl(&mut self) -> ParseResult<TypeDecl> {
        let start = self.peek_span();
        self.expect(Tok::KwType)?;

        let mut params = Vec::new();
        match self.peek().clone() {
            Tok::TyVar(v) => {
                self.advance();
                params.push(TypeParam {
                    name: v,
                    bang: false,
                });
            }
            Tok::LParen => {
                self.advance();
                loop {
                    let bang = self.eat(Tok::Bang);
                    match self.peek().clone() {
                        Tok::TyVar(v) => {
                            self.advance();
                            params.push(TypeParam { name: v, bang });
                        }
                        other => {
                            return Err(ParseError {
                                message: format!(
                                    "expected type variable, found {}",
                                    other.describe()
                                ),
                                span: self.peek_span(),
                            });
                        }
                    }
                    if !self.eat(Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            _ => {}
        }

        let name = self.parse_type_name()?;
        let mut span = start.merge(self.prev_span());

        let mut models = Vec::new();
        let mut invariant = None;
        while let Tok::SpecBlock { start: s, end: e } = *self.peek() {
            // A following predicate definition belongs to the top level.
            {
                let probe = self.spec_parser(s, e)?;
                if probe.peek() == &Tok::KwPredicate {
                    break;
                }
            }
            let block_span = self.peek_span();
            self.advance();
            span = span.merge(block_span);
            let mut sp = self.spec_parser(s, e)?;
            sp.parse_type_annotations(&mut models, &mut invariant)?;
            sp.expect_eof()?;
        }

        Ok(TypeDecl {
            name,
            params,
            models,
            invariant,
            span,
        })
    }

    fn parse_val_decl(&mut self) -> ParseResult<ValDecl> {
        let start = self.peek_span();
        self.expect(Tok::KwVal)?;
        let name = self.parse_ident()?;
        self.expect(Tok::Colon)?;

        // Arrow components; the last one is the result type.
        let mut components: Vec<ParamType> = Vec::new();
        loop {
            let (label, optional) = if self.eat(Tok::Question) {
                let l = self.parse_ident()?;
                self.expect(Tok::Colon)?;
                (Some(l), true)
            } else {
                (None, false)
            };
            let ty = self.parse_type_nonarrow()?;
            components.push(ParamType {
                label,
                optional,
                ty,
            });
            if !self.eat(Tok::Arrow) {
                break;
            }
        }
        let result = components.pop().expect("at least one type component");
        if result.label.is_some() {
            // A labeled component can never be the result.
            return Err(ParseError {
                message: "expected `->` and a result type after the labeled parameter".to_string(),
                span: self.peek_span(),
            });
        }
        let mut span = start.merge(self.prev_span());

        let contract = if let Tok::SpecBlock { start: s, end: e } = *self.peek() {
            let block_span = self.peek_span();
            self.advance();
            span = span.merge(block_span);
            let mut sp = self.spec_parser(s, e)?;
            let c = sp.parse_contract()?;
            sp.expect_eof()?;
            Some(c)
        } else {
            None
        };

        Ok(ValDecl {
            name,
            params: components,
            result: result.ty,
            contract,
            span,
        })
    }

    fn parse_exn_decl(&mut self) -> ParseResult<ExnDecl> {
        let start = self.peek_span();
        self.expect(Tok::KwException)?;
        let name = self.parse_ident()?;
        let payload = if self.eat(Tok::KwOf) {
            Some(self.parse_type_nonarrow()?)
        } else {
            None
        };
        Ok(ExnDecl {
            name,
            payload,
            span: start.merge(self.prev_span()),
        })
    }

    /// Type expression without a top-level arrow (one arrow component).
    /// Arrows inside parentheses are fine.
    fn parse_type_nonarrow(&mut self) -> ParseResult<TypeExpr> {
        let mut ty = TypeParsing::parse_tuple_type(self)?;
        // Model positions allow arrows (maps); `val` components are split on
        // arrows by the caller, so reject stray arrows here by not consuming.
        let _ = &mut ty;
        Ok(ty)
    }

    fn parse_type_name(&mut self) -> ParseResult<String> {
        TypeParsing::parse_qualified_name(self)
    }

    fn parse_ident(&mut self) -> ParseResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => Err(ParseError {
                message: format!("expected identifier, found {}", other.describe()),
                span: self.peek_span(),
            }),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        if self.pos > 0 {
            self.tokens[self.pos - 1].span
        } else {
            Span::dummy()
        }
    }

    fn advance(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> ParseResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(ParseError {
                message: format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.peek().describe()
                ),
                span: self.peek_span(),
            })
        }
    }
}

/// Shared type-expression parsing over any token cursor.
trait TokenCursor {
    fn cur(&self) -> &Tok;
    fn cur_span(&self) -> Span;
    fn bump(&mut self);

    fn eat_tok(&mut self, tok: Tok) -> bool {
        if *self.cur() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_tok(&mut self, tok: Tok) -> ParseResult<()> {
        if *self.cur() == tok {
            self.bump();
            Ok(())
        } else {
            Err(ParseError {
                message: format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.cur().describe()
                ),
                span: self.cur_span(),
            })
        }
    }
}

impl TokenCursor for HostParser<'_> {
    fn cur(&self) -> &Tok {
        self.peek()
    }
    fn cur_span(&self) -> Span {
        self.peek_span()
    }
    fn bump(&mut self) {
        self.advance()
    }
}

impl TokenCursor for TermParser<'_> {
    fn cur(&self) -> &Tok {
        self.peek()
    }
    fn cur_span(&self) -> Span {
        self.peek_span()
    }
    fn bump(&mut self) {
        self.advance()
    }
}

struct TypeParsing;

impl TypeParsing {
    /// Full type: tuples and arrows. Used for model fields and predicate
    /// parameters, where an arrow means a map.
    fn parse_type<C: TokenCursor>(c: &mut C) -> ParseResult<TypeExpr> {
        let lhs = Self::parse_tuple_type(c)?;
        if c.eat_tok(Tok::Arrow) {
            let rhs = Self::parse_type(c)?;
            Ok(TypeExpr::Arrow(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn parse_tuple_type<C: TokenCursor>(c: &mut C) -> ParseResult<TypeExpr> {
        let first = Self::parse_app_type(c)?;
        if *c.cur() != Tok::Star {
            return Ok(first);
        }
        let mut items = vec![first];
        while c.eat_tok(Tok::Star) {
            items.push(Self::parse_app_type(c)?);
        }
        Ok(TypeExpr::Tuple(items))
    }

    /// Postfix constructor application: `'a list`, `V.t fset`, `('a, 'b) t`.
    fn parse_app_type<C: TokenCursor>(c: &mut C) -> ParseResult<TypeExpr> {
        let mut args: Vec<TypeExpr> = Vec::new();
        let head = match c.cur().clone() {
            Tok::TyVar(v) => {
                c.bump();
                Some(TypeExpr::Var {
                    name: v,
                    bang: false,
                })
            }
            Tok::Bang => {
                c.bump();
                match c.cur().clone() {
                    Tok::TyVar(v) => {
                        c.bump();
                        Some(TypeExpr::Var {
                            name: v,
                            bang: true,
                        })
                    }
                    other => {
                        return Err(ParseError {
                            message: format!(
                                "expected type variable after `!`, found {}",
                                other.describe()
                            ),
                            span: c.cur_span(),
                        });
                    }
                }
            }
            Tok::LParen => {
                c.bump();
                let mut inner = vec![Self::parse_type(c)?];
                while c.eat_tok(Tok::Comma) {
                    inner.push(Self::parse_type(c)?);
                }
                c.expect_tok(Tok::RParen)?;
                if inner.len() == 1 {
                    Some(inner.pop().unwrap())
                } else {
                    // `('a, 'b)` must be constructor arguments.
                    args = inner;
                    None
                }
            }
            Tok::Ident(_) => {
                let name = Self::parse_qualified_name(c)?;
                Some(TypeExpr::Named { name, args: vec![] })
            }
            other => {
                return Err(ParseError {
                    message: format!("expected a type, found {}", other.describe()),
                    span: c.cur_span(),
                });
            }
        };

        let mut acc = match head {
            Some(ty) => ty,
            None => {
                // Multi-argument constructor: a name must follow.
                let name = Self::parse_qualified_name(c)?;
                TypeExpr::Named {
                    name,
                    args: std::mem::take(&mut args),
                }
            }
        };

        while let Tok::Ident(_) = c.cur() {
            let name = Self::parse_qualified_name(c)?;
            acc = TypeExpr::Named {
                name,
                args: vec![acc],
            };
        }
        Ok(acc)
    }

    /// `t`, `V.t`, `List.t` — dotted names joined into one.
    fn parse_qualified_name<C: TokenCursor>(c: &mut C) -> ParseResult<String> {
        let mut name = match c.cur().clone() {
            Tok::Ident(s) => {
                c.bump();
                s
            }
            other => {
                return Err(ParseError {
                    message: format!("expected type name, found {}", other.describe()),
                    span: c.cur_span(),
                });
            }
        };
        while *c.cur() == Tok::Dot {
            c.bump();
            match c.cur().clone() {
                Tok::Ident(s) => {
                    c.bump();
                    name.push('.');
                    name.push_str(&s);
                }
                other => {
                    return Err(ParseError {
                        message: format!("expected name after `.`, found {}", other.describe()),
                        span: c.cur_span(),
                    });
                }
            }
        }
        Ok(name)
    }
}

/// Parser over the tokens of one spec block (or a standalone term).
struct TermParser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ids: &'a mut IdGen,
}

impl<'a> TermParser<'a> {
    // ---- annotation-level grammar ----

    fn parse_type_annotations(
        &mut self,
        models: &mut Vec<ModelField>,
        invariant: &mut Option<TypeInvariant>,
    ) -> ParseResult<()> {
        loop {
            match self.peek().clone() {
                Tok::KwMutable | Tok::KwModel => {
                    let start = self.peek_span();
                    let mutable = self.eat(Tok::KwMutable);
                    self.expect(Tok::KwModel)?;
                    let name = self.parse_ident()?;
                    self.expect(Tok::Colon)?;
                    let ty = TypeParsing::parse_type(self)?;
                    models.push(ModelField {
                        name,
                        mutable,
                        ty,
                        span: start.merge(self.prev_span()),
                    });
                }
                Tok::KwWith => {
                    let start = self.peek_span();
                    self.advance();
                    let binder = self.parse_ident()?;
                    self.expect(Tok::KwInvariant)?;
                    let body = self.parse_term()?;
                    if invariant.is_some() {
                        return Err(ParseError {
                            message: "duplicate type invariant".to_string(),
                            span: start,
                        });
                    }
                    *invariant = Some(TypeInvariant {
                        binder,
                        body,
                        span: start.merge(self.prev_span()),
                    });
                }
                Tok::Eof => return Ok(()),
                other => {
                    return Err(ParseError {
                        message: format!(
                            "expected `model`, `mutable model`, or `with ... invariant`, \
                             found {}",
                            other.describe()
                        ),
                        span: self.peek_span(),
                    });
                }
            }
        }
    }

    fn parse_contract(&mut self) -> ParseResult<Contract> {
        let start = self.peek_span();

        // Header: `[result =] name params`.
        let first = self.parse_ident()?;
        let (result, fn_name) = if self.eat(Tok::Eq) {
            (Some(first), self.parse_ident()?)
        } else {
            (None, first)
        };

        let mut params = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    self.advance();
                    params.push(HeaderParam {
                        name: Some(name),
                        optional: false,
                    });
                }
                Tok::Question => {
                    self.advance();
                    let name = self.parse_ident()?;
                    params.push(HeaderParam {
                        name: Some(name),
                        optional: true,
                    });
                }
                Tok::LParen => {
                    self.advance();
                    self.expect(Tok::RParen)?;
                    params.push(HeaderParam {
                        name: None,
                        optional: false,
                    });
                }
                _ => break,
            }
        }

        let mut contract = Contract {
            header: ContractHeader {
                result,
                fn_name,
                params,
            },
            requires: Vec::new(),
            ensures: Vec::new(),
            modifies: Vec::new(),
            raises: Vec::new(),
            span: start,
        };

        loop {
            match self.peek().clone() {
                Tok::KwRequires => {
                    self.advance();
                    contract.requires.push(self.parse_term()?);
                }
                Tok::KwEnsures => {
                    self.advance();
                    contract.ensures.push(self.parse_term()?);
                }
                Tok::KwModifies => {
                    self.advance();
                    loop {
                        let tstart = self.peek_span();
                        let param = self.parse_ident()?;
                        let field = if self.eat(Tok::Dot) {
                            let f = self.parse_ident()?;
                            if *self.peek() == Tok::Dot {
                                return Err(ParseError {
                                    message: "modifies targets deeper than one model field \
                                              are not supported"
                                        .to_string(),
                                    span: self.peek_span(),
                                });
                            }
                            Some(f)
                        } else {
                            None
                        };
                        contract.modifies.push(ModifiesTarget {
                            param,
                            field,
                            span: tstart.merge(self.prev_span()),
                        });
                        if !self.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::KwRaises => {
                    let rstart = self.peek_span();
                    self.advance();
                    let exn = self.parse_ident()?;
                    self.expect(Tok::Arrow)?;
                    let condition = self.parse_term()?;
                    contract.raises.push(RaisesClause {
                        exn,
                        condition,
                        span: rstart.merge(self.prev_span()),
                    });
                }
                Tok::Eof => break,
                other => {
                    return Err(ParseError {
                        message: format!(
                            "expected `requires`, `ensures`, `modifies`, or `raises`, found {}",
                            other.describe()
                        ),
                        span: self.peek_span(),
                    });
                }
            }
        }
        contract.span = contract.span.merge(self.prev_span());
        Ok(contract)
    }

    fn parse_predicate(&mut self) -> ParseResult<PredDecl> {
        let start = self.peek_span();
        self.expect(Tok::KwPredicate)?;
        let name = self.parse_ident()?;
        let mut params = Vec::new();
        while self.eat(Tok::LParen) {
            let mut names = vec![self.parse_ident()?];
            while let Tok::Ident(_) = self.peek() {
                names.push(self.parse_ident()?);
            }
            self.expect(Tok::Colon)?;
            let ty = TypeParsing::parse_type(self)?;
            self.expect(Tok::RParen)?;
            for n in names {
                params.push((n, ty.clone()));
            }
        }
        self.expect(Tok::Eq)?;
        let body = self.parse_term()?;
        Ok(PredDecl {
            name,
            params,
            body,
            span: start.merge(self.prev_span()),
        })
    }

    // ---- term grammar, loosest binding first ----
    //
    // application > unary minus / not / old > * / mod > + - > :: > @
    // > comparison chains > && > || > -> / <->
    // Quantifiers, let, and if extend maximally to the right.

    fn parse_term(&mut self) -> ParseResult<Term> {
        self.parse_implies()
    }

    fn parse_implies(&mut self) -> ParseResult<Term> {
        let lhs = self.parse_or()?;
        let op = match self.peek() {
            Tok::Arrow => BinOp::Implies,
            Tok::Iff => BinOp::Iff,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.parse_implies()?;
        Ok(self.mk_binary(op, lhs, rhs))
    }

    fn parse_or(&mut self) -> ParseResult<Term> {
        let lhs = self.parse_and()?;
        if *self.peek() == Tok::OrOr {
            self.advance();
            let rhs = self.parse_or()?;
            Ok(self.mk_binary(BinOp::Or, lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_and(&mut self) -> ParseResult<Term> {
        let lhs = self.parse_compare()?;
        if *self.peek() == Tok::AndAnd {
            self.advance();
            let rhs = self.parse_and()?;
            Ok(self.mk_binary(BinOp::And, lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_compare(&mut self) -> ParseResult<Term> {
        let first = self.parse_append()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.peek() {
                Tok::Eq => CmpOp::Eq,
                Tok::Ne => CmpOp::Ne,
                Tok::Lt => CmpOp::Lt,
                Tok::Le => CmpOp::Le,
                Tok::Gt => CmpOp::Gt,
                Tok::Ge => CmpOp::Ge,
                _ => break,
            };
            self.advance();
            let operand = self.parse_append()?;
            rest.push((op, operand));
        }
        if rest.is_empty() {
            return Ok(first);
        }
        let span = first
            .span
            .merge(rest.last().map(|(_, t)| t.span).unwrap_or(first.span));
        Ok(Term {
            id: self.ids.fresh(),
            span,
            kind: TermKind::Compare {
                first: Box::new(first),
                rest,
            },
        })
    }

    fn parse_append(&mut self) -> ParseResult<Term> {
        let lhs = self.parse_cons()?;
        if *self.peek() == Tok::At {
            self.advance();
            let rhs = self.parse_append()?;
            let span = lhs.span.merge(rhs.span);
            Ok(Term {
                id: self.ids.fresh(),
                span,
                kind: TermKind::Append(Box::new(lhs), Box::new(rhs)),
            })
        } else {
            Ok(lhs)
        }
    }

    fn parse_cons(&mut self) -> ParseResult<Term> {
        let lhs = self.parse_addsub()?;
        if *self.peek() == Tok::ColonColon {
            self.advance();
            let rhs = self.parse_cons()?;
            let span = lhs.span.merge(rhs.span);
            Ok(Term {
                id: self.ids.fresh(),
                span,
                kind: TermKind::Cons(Box::new(lhs), Box::new(rhs)),
            })
        } else {
            Ok(lhs)
        }
    }

    fn parse_addsub(&mut self) -> ParseResult<Term> {
        let mut lhs = self.parse_muldiv()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_muldiv()?;
            lhs = self.mk_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_muldiv(&mut self) -> ParseResult<Term> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::KwMod => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = self.mk_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> ParseResult<Term> {
        let start = self.peek_span();
        match self.peek().clone() {
            Tok::Minus => {
                self.advance();
                let operand = self.parse_unary()?;
                let span = start.merge(operand.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Neg(Box::new(operand)),
                })
            }
            Tok::KwNot => {
                self.advance();
                let operand = self.parse_app()?;
                let span = start.merge(operand.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Not(Box::new(operand)),
                })
            }
            Tok::KwOld => {
                self.advance();
                let operand = self.parse_postfix()?;
                let span = start.merge(operand.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Old(Box::new(operand)),
                })
            }
            Tok::KwForall | Tok::KwExists => {
                let kind = if *self.peek() == Tok::KwForall {
                    QuantKind::Forall
                } else {
                    QuantKind::Exists
                };
                self.advance();
                let mut binders = vec![self.parse_ident()?];
                while self.eat(Tok::Comma) {
                    binders.push(self.parse_ident()?);
                }
                self.expect(Tok::Dot)?;
                let body = self.parse_term()?;
                let span = start.merge(body.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Quant {
                        kind,
                        binders,
                        body: Box::new(body),
                    },
                })
            }
            Tok::KwLet => {
                self.advance();
                let name = self.parse_ident()?;
                self.expect(Tok::Eq)?;
                let value = self.parse_term()?;
                self.expect(Tok::KwIn)?;
                let body = self.parse_term()?;
                let span = start.merge(body.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Let {
                        name,
                        value: Box::new(value),
                        body: Box::new(body),
                    },
                })
            }
            Tok::KwIf => {
                self.advance();
                let cond = self.parse_term()?;
                self.expect(Tok::KwThen)?;
                let then_branch = self.parse_term()?;
                self.expect(Tok::KwElse)?;
                let else_branch = self.parse_term()?;
                let span = start.merge(else_branch.span);
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::If {
                        cond: Box::new(cond),
                        then_branch: Box::new(then_branch),
                        else_branch: Box::new(else_branch),
                    },
                })
            }
            _ => self.parse_app(),
        }
    }

    fn parse_app(&mut self) -> ParseResult<Term> {
        let mut acc = self.parse_postfix()?;
        loop {
            let starts_arg = matches!(
                self.peek(),
                Tok::Ident(_)
                    | Tok::Int(_)
                    | Tok::KwTrue
                    | Tok::KwFalse
                    | Tok::LParen
                    | Tok::LBracket
            );
            if !starts_arg {
                break;
            }
            let arg = self.parse_postfix()?;
            let span = acc.span.merge(arg.span);
            acc = Term {
                id: self.ids.fresh(),
                span,
                kind: TermKind::App {
                    func: Box::new(acc),
                    arg: Box::new(arg),
                },
            };
        }
        Ok(acc)
    }

    fn parse_postfix(&mut self) -> ParseResult<Term> {
        let mut acc = self.parse_primary()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                    let field = self.parse_ident()?;
                    let span = acc.span.merge(self.prev_span());
                    acc = Term {
                        id: self.ids.fresh(),
                        span,
                        kind: TermKind::Field {
                            base: Box::new(acc),
                            field,
                        },
                    };
                }
                // Indexing requires the bracket glued to its base (`l[i]`);
                // a spaced `[` starts a list literal instead.
                Tok::LBracket if self.peek_span().start == self.prev_span().end => {
                    self.advance();
                    let index = self.parse_term()?;
                    self.expect(Tok::RBracket)?;
                    let span = acc.span.merge(self.prev_span());
                    acc = Term {
                        id: self.ids.fresh(),
                        span,
                        kind: TermKind::Index {
                            base: Box::new(acc),
                            index: Box::new(index),
                        },
                    };
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_primary(&mut self) -> ParseResult<Term> {
        let start = self.peek_span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(self.leaf(start, TermKind::Int(n)))
            }
            Tok::KwTrue => {
                self.advance();
                Ok(self.leaf(start, TermKind::Bool(true)))
            }
            Tok::KwFalse => {
                self.advance();
                Ok(self.leaf(start, TermKind::Bool(false)))
            }
            Tok::Ident(name) => {
                self.advance();
                // Uppercase heads take a qualified-name chain: `List.mem`.
                let mut full = name;
                if full.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    while *self.peek() == Tok::Dot {
                        self.advance();
                        let part = self.parse_ident()?;
                        full.push('.');
                        full.push_str(&part);
                    }
                }
                let span = start.merge(self.prev_span());
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::Var(full),
                })
            }
            Tok::LParen => {
                self.advance();
                if self.eat(Tok::RParen) {
                    let span = start.merge(self.prev_span());
                    return Ok(self.leaf(span, TermKind::Unit));
                }
                let first = self.parse_term()?;
                if self.eat(Tok::Comma) {
                    let mut items = vec![first];
                    loop {
                        items.push(self.parse_term()?);
                        if !self.eat(Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    let span = start.merge(self.prev_span());
                    Ok(Term {
                        id: self.ids.fresh(),
                        span,
                        kind: TermKind::Tuple(items),
                    })
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(first)
                }
            }
            Tok::LBracket => {
                self.advance();
                if self.eat(Tok::RBracket) {
                    let span = start.merge(self.prev_span());
                    return Ok(self.leaf(span, TermKind::EmptyList));
                }
                let mut items = vec![self.parse_term()?];
                while self.eat(Tok::Semi) || self.eat(Tok::Comma) {
                    items.push(self.parse_term()?);
                }
                self.expect(Tok::RBracket)?;
                let span = start.merge(self.prev_span());
                Ok(Term {
                    id: self.ids.fresh(),
                    span,
                    kind: TermKind::ListLit(items),
                })
            }
            other => Err(ParseError {
                message: format!("expected a term, found {}", other.describe()),
                span: start,
            }),
        }
    }

    fn leaf(&mut self, span: Span, kind: TermKind) -> Term {
        Term {
            id: self.ids.fresh(),
            span,
            kind,
        }
    }

    fn mk_binary(&mut self, op: BinOp, lhs: Term, rhs: Term) -> Term {
        let span = lhs.span.merge(rhs.span);
        Term {
            id: self.ids.fresh(),
            span,
            kind: TermKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        }
    }

    fn parse_ident(&mut self) -> ParseResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => Err(ParseError {
                message: format!("expected identifier, found {}", other.describe()),
                span: self.peek_span(),
            }),
        }
    }

    fn expect_eof(&mut self) -> ParseResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(ParseError {
                message: format!("unexpected {}", self.peek().describe()),
                span: self.peek_span(),
            })
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        if self.pos > 0 {
            self.tokens[self.pos - 1].span
        } else {
            Span::dummy()
        }
    }

    fn advance(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> ParseResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(ParseError {
                message: format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.peek().describe()
                ),
                span: self.peek_span(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::TermKind;

    #[test]
    fn empty_input_parses_to_zero_declarations() {
        let spec = parse_interface("").unwrap();
        assert!(spec.decls.is_empty());
    }

    #[test]
    fn type_decl_with_model() {
        let spec = parse_interface("type 'a t\n(*@ mutable model elems : 'a list *)").unwrap();
        let t = spec.find_type("t").unwrap();
        assert_eq!(t.params.len(), 1);
        assert_eq!(t.models.len(), 1);
        assert_eq!(t.models[0].name, "elems");
        assert!(t.models[0].mutable);
    }

    #[test]
    fn val_decl_with_contract() {
        let src = "val push : 'a t -> 'a -> unit\n(*@ push q x\n    modifies q\n    ensures q.elems = old q.elems @ [x] *)";
        let spec = parse_interface(src).unwrap();
        let v = spec.find_val("push").unwrap();
        assert_eq!(v.params.len(), 2);
        let c = v.contract.as_ref().unwrap();
        assert_eq!(c.header.fn_name, "push");
        assert_eq!(c.ensures.len(), 1);
        assert_eq!(c.modifies.len(), 1);
        assert_eq!(c.modifies[0].param, "q");
    }

    #[test]
    fn optional_parameter_marker() {
        let src = "val create : ?random: bool -> int -> ('a, 'b) t\n(*@ h = create ?random size\n    ensures h.contents = [] *)";
        let spec = parse_interface(src).unwrap();
        let v = spec.find_val("create").unwrap();
        assert!(v.params[0].optional);
        assert_eq!(v.params[0].label.as_deref(), Some("random"));
        let c = v.contract.as_ref().unwrap();
        assert!(c.header.params[0].optional);
    }

    #[test]
    fn comparison_chain_parses_flat() {
        let t = parse_term("old q.elems = [] = q.elems").unwrap();
        match &t.kind {
            TermKind::Compare { rest, .. } => assert_eq!(rest.len(), 2),
            other => panic!("expected comparison chain, got {other:?}"),
        }
    }

    #[test]
    fn implication_is_right_associative() {
        let t = parse_term("a -> b -> c").unwrap();
        match &t.kind {
            TermKind::Binary { op, rhs, .. } => {
                assert_eq!(*op, crate::ast::BinOp::Implies);
                assert!(matches!(rhs.kind, TermKind::Binary { .. }));
            }
            other => panic!("expected implication, got {other:?}"),
        }
    }

    #[test]
    fn quantifier_body_extends_right() {
        let t =
            parse_term("mem v1 g.dom && forall i. 0 <= i < n - 1 -> edge l[i] l[i+1] g").unwrap();
        match &t.kind {
            TermKind::Binary { op, rhs, .. } => {
                assert_eq!(*op, crate::ast::BinOp::And);
                assert!(matches!(rhs.kind, TermKind::Quant { .. }));
            }
            other => panic!("expected conjunction, got {other:?}"),
        }
    }

    #[test]
    fn old_binds_tighter_than_append() {
        let t = parse_term("old q.elems @ [x]").unwrap();
        match &t.kind {
            TermKind::Append(lhs, _) => assert!(matches!(lhs.kind, TermKind::Old(_))),
            other => panic!("expected append, got {other:?}"),
        }
    }

    #[test]
    fn application_args_take_postfix_chains() {
        let t = parse_term("edge l[i] l[i+1] g").unwrap();
        let (head, args) = t.app_spine();
        assert!(matches!(&head.kind, TermKind::Var(v) if v == "edge"));
        assert_eq!(args.len(), 3);
        assert!(matches!(args[0].kind, TermKind::Index { .. }));
    }

    #[test]
    fn deep_modifies_paths_rejected() {
        let src = "val f : 'a t -> unit\n(*@ f q\n    modifies q.elems.deeper *)";
        let err = parse_interface(src).unwrap_err();
        assert!(err.message.contains("deeper"));
    }

    #[test]
    fn error_carries_position() {
        let err = parse_interface("type 'a t\nval : int").unwrap_err();
        assert_eq!(err.span.line, 2);
    }
}

#[cfg(test)]
mod payload_tests {
    use super::*;
    use crate::printer::pretty_print;

    #[test]
    fn exception_payload_parses_and_roundtrips() {
        let src = "exception Overflowed of int\nexception Plain";
        let spec = parse_interface(src).unwrap();
        let exns: Vec<_> = spec.exn_decls().collect();
        assert_eq!(exns.len(), 2);
        assert!(exns[0].payload.is_some());
        assert!(exns[1].payload.is_none());
        let printed = pretty_print(&spec);
        let reparsed = parse_interface(&printed).unwrap();
        assert!(spec.structurally_equal(&reparsed), "{printed}");
    }
}
