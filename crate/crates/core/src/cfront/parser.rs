//! Recursive-descent parser for the supported C subset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{TokKind, Token};
use super::types::TypeDesc;
use super::{builtin_typedef, ParseError};

/// A parsed translation unit before the single-function check.
#[derive(Debug, Clone)]
pub struct RawUnit {
    pub preamble: Vec<PreambleItem>,
    pub functions: Vec<FunctionDef>,
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: NodeId,
    typedefs: Vec<HashSet<String>>,
}

type PResult<T> = Result<T, ParseError>;

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "signed", "unsigned", "float", "double", "struct",
    "union", "enum", "_Bool", "const", "volatile", "static", "extern", "typedef", "register",
    "inline", "__inline", "__inline__", "restrict", "__restrict", "auto", "_Complex",
];

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "goto", "asm", "__asm__", "__asm", "_Generic", "_Static_assert", "__attribute__",
    "__extension__", "__typeof__", "typeof", "_Alignas", "_Atomic", "_Thread_local",
    "__builtin_va_list", "va_list",
];

impl Parser {
    pub fn new(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0, next_id: 0, typedefs: vec![HashSet::new()] }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, s: &str) -> bool {
        self.peek().is(s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        let message = if t.kind == TokKind::Eof {
            format!("{} (found end of input)", message.into())
        } else {
            format!("{} (found `{}`)", message.into(), t.text)
        };
        Err(ParseError::Syntax { line: t.line, message })
    }

    fn unsupported<T>(&self, construct: impl Into<String>) -> PResult<T> {
        Err(ParseError::Unsupported { construct: construct.into(), line: self.peek().line })
    }

    fn expect(&mut self, s: &str) -> PResult<Token> {
        if self.at(s) {
            Ok(self.bump())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<Token> {
        if self.peek().kind == TokKind::Ident && !is_keyword(&self.peek().text) {
            Ok(self.bump())
        } else {
            self.err("expected identifier")
        }
    }

    fn id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn span_from(&self, start_tok: usize) -> SourceSpan {
        let first = &self.toks[start_tok];
        let last_idx = self.pos.saturating_sub(1).max(start_tok);
        SourceSpan { line: first.line, start: first.start, end: self.toks[last_idx].end }
    }

    fn is_typedef_name(&self, name: &str) -> bool {
        self.typedefs.iter().any(|s| s.contains(name)) || builtin_typedef(name).is_some()
    }

    fn starts_type(&self, t: &Token) -> bool {
        t.kind == TokKind::Ident
            && (TYPE_KEYWORDS.contains(&t.text.as_str()) || self.is_typedef_name(&t.text))
    }

    // ---- translation unit ----

    pub fn parse_unit(&mut self) -> PResult<RawUnit> {
        let mut preamble = Vec::new();
        let mut functions = Vec::new();
        while self.peek().kind != TokKind::Eof {
            let t = self.peek().clone();
            if t.kind == TokKind::Directive {
                self.bump();
                preamble.push(parse_directive(&t)?);
                continue;
            }
            if self.eat(";") {
                continue;
            }
            let start = self.pos;
            let spec = self.decl_spec()?;
            if self.eat(";") {
                preamble.push(PreambleItem::Decl(Declaration { spec, items: vec![] }));
                continue;
            }
            let decl = self.declarator()?;
            if self.at("(") {
                if spec.storage == Some(Storage::Typedef) {
                    return self.unsupported("function typedef");
                }
                functions.push(self.function_rest(start, spec, decl)?);
                continue;
            }
            let decl = self.declaration_rest(spec, decl)?;
            self.expect(";")?;
            preamble.push(PreambleItem::Decl(decl));
        }
        Ok(RawUnit { preamble, functions })
    }

    fn function_rest(&mut self, start: usize, spec: DeclSpec, decl: Declarator) -> PResult<FunctionDef> {
        if !decl.dims.is_empty() {
            return self.err("function returning array");
        }
        self.expect("(")?;
        let mut params = Vec::new();
        let mut void_params = false;
        if self.at("void") && self.peek_at(1).is(")") {
            self.bump();
            void_params = true;
        } else if !self.at(")") {
            loop {
                if self.at("...") {
                    return self.unsupported("variadic function");
                }
                let pspec = self.decl_spec()?;
                let pdecl = if self.peek_past_pointers_is(&[",", ")"]) {
                    // unnamed parameter, only valid in a prototype
                    let start = self.pos;
                    let pointers = self.pointer_quals();
                    Declarator { name: String::new(), pointers, dims: vec![], span: self.span_from(start) }
                } else {
                    self.declarator()?
                };
                for d in pdecl.dims.iter().skip(1) {
                    if d.as_ref().is_some_and(|e| !matches!(e.kind, ExprKind::IntLit { .. })) {
                        return self.unsupported("variable-length array parameter");
                    }
                }
                if let Some(Some(d)) = pdecl.dims.first() {
                    if !matches!(d.kind, ExprKind::IntLit { .. }) {
                        return self.unsupported("variable-length array parameter");
                    }
                }
                params.push(Param { spec: pspec, decl: pdecl });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if self.at(";") {
            return self.unsupported("function prototype");
        }
        if !self.at("{") {
            return self.err("expected function body");
        }
        if params.iter().any(|p| p.decl.name.is_empty()) {
            return self.err("parameter name omitted");
        }
        self.typedefs.push(HashSet::new());
        let body = self.block()?;
        self.typedefs.pop();
        Ok(FunctionDef {
            spec,
            ret_pointers: decl.pointers,
            name: decl.name,
            params,
            void_params,
            body,
            span: self.span_from(start),
            ret_ty: TypeDesc::Void,
            param_tys: vec![],
            next_id: self.next_id,
        })
    }

    // ---- declarations ----

    fn decl_spec(&mut self) -> PResult<DeclSpec> {
        let mut storage = None;
        let mut inline = false;
        let mut quals = Vec::new();
        let mut words: Vec<String> = Vec::new();
        let mut base: Option<BaseType> = None;
        loop {
            let t = self.peek().clone();
            if t.kind != TokKind::Ident {
                break;
            }
            match t.text.as_str() {
                "static" | "extern" | "typedef" | "register" => {
                    if storage.is_some() {
                        return self.err("multiple storage classes");
                    }
                    storage = Some(match t.text.as_str() {
                        "static" => Storage::Static,
                        "extern" => Storage::Extern,
                        "typedef" => Storage::Typedef,
                        _ => Storage::Register,
                    });
                    self.bump();
                }
                "auto" | "restrict" | "__restrict" => {
                    self.bump();
                }
                "inline" | "__inline" | "__inline__" => {
                    inline = true;
                    self.bump();
                }
                "const" => {
                    self.bump();
                    if !quals.contains(&Qualifier::Const) {
                        quals.push(Qualifier::Const);
                    }
                }
                "volatile" => {
                    self.bump();
                    if !quals.contains(&Qualifier::Volatile) {
                        quals.push(Qualifier::Volatile);
                    }
                }
                "void" | "char" | "short" | "int" | "long" | "signed" | "unsigned" | "float"
                | "double" => {
                    if base.is_some() {
                        return self.err("conflicting type specifiers");
                    }
                    words.push(t.text.clone());
                    self.bump();
                }
                "struct" => {
                    if base.is_some() || !words.is_empty() {
                        return self.err("conflicting type specifiers");
                    }
                    self.bump();
                    base = Some(self.struct_spec()?);
                }
                "union" => return self.unsupported("union"),
                "enum" => return self.unsupported("enum"),
                "_Bool" => return self.unsupported("_Bool"),
                "_Complex" => return self.unsupported("_Complex"),
                name if base.is_none() && words.is_empty() && self.is_typedef_name(name) => {
                    base = Some(BaseType::Named(name.to_string()));
                    self.bump();
                }
                name if UNSUPPORTED_KEYWORDS.contains(&name) => return self.unsupported(name),
                _ => break,
            }
        }
        let base = match base {
            Some(b) => b,
            None if words.is_empty() => return self.err("expected type specifier"),
            None => BaseType::Builtin(self.builtin(&words)?),
        };
        Ok(DeclSpec { storage, inline, quals, base })
    }

    fn builtin(&self, words: &[String]) -> PResult<Builtin> {
        let count = |w: &str| words.iter().filter(|x| *x == w).count();
        let signed = count("signed");
        let unsigned = count("unsigned");
        let longs = count("long");
        let shorts = count("short");
        let ints = count("int");
        let chars = count("char");
        let voids = count("void");
        let floats = count("float");
        let doubles = count("double");
        if signed + unsigned > 1 || ints > 1 || chars > 1 || shorts > 1 || longs > 2 {
            return self.err("invalid type specifier combination");
        }
        if voids + floats + doubles > 0 {
            if words.len() == 1 {
                return Ok(if voids == 1 {
                    Builtin::Void
                } else if floats == 1 {
                    Builtin::Float
                } else {
                    Builtin::Double
                });
            }
            if doubles == 1 && longs == 1 && words.len() == 2 {
                return self.unsupported("long double");
            }
            return self.err("invalid type specifier combination");
        }
        use Builtin::*;
        Ok(match (chars, shorts, longs, unsigned == 1, signed == 1) {
            (1, 0, 0, false, false) if ints == 0 => Char,
            (1, 0, 0, false, true) if ints == 0 => SChar,
            (1, 0, 0, true, _) if ints == 0 => UChar,
            (0, 1, 0, u, _) => {
                if u {
                    UShort
                } else {
                    Short
                }
            }
            (0, 0, 0, u, _) => {
                if u {
                    UInt
                } else {
                    Int
                }
            }
            (0, 0, 1, u, _) => {
                if u {
                    ULong
                } else {
                    Long
                }
            }
            (0, 0, 2, u, _) => {
                if u {
                    ULongLong
                } else {
                    LongLong
                }
            }
            _ => return self.err("invalid type specifier combination"),
        })
    }

    fn struct_spec(&mut self) -> PResult<BaseType> {
        let tag = if self.peek().kind == TokKind::Ident && !self.at("{") {
            Some(self.ident()?.text)
        } else {
            None
        };
        if !self.eat("{") {
            if tag.is_none() {
                return self.err("expected struct tag or body");
            }
            return Ok(BaseType::Struct { tag, fields: None });
        }
        let mut fields = Vec::new();
        while !self.eat("}") {
            let spec = self.decl_spec()?;
            if spec.storage.is_some() {
                return self.err("storage class in struct field");
            }
            let mut declarators = Vec::new();
            loop {
                let d = self.declarator()?;
                if self.at(":") {
                    return self.unsupported("bit-field");
                }
                for dim in &d.dims {
                    if dim.is_none() {
                        return self.unsupported("flexible array member");
                    }
                }
                declarators.push(d);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(";")?;
            fields.push(FieldDecl { spec, declarators });
        }
        if fields.is_empty() {
            return self.err("empty struct");
        }
        Ok(BaseType::Struct { tag, fields: Some(fields) })
    }

    fn pointer_quals(&mut self) -> Vec<Vec<Qualifier>> {
        let mut ptrs = Vec::new();
        while self.eat("*") {
            let mut q = Vec::new();
            loop {
                if self.eat("const") {
                    q.push(Qualifier::Const);
                } else if self.eat("volatile") {
                    q.push(Qualifier::Volatile);
                } else if self.eat("restrict") || self.eat("__restrict") {
                } else {
                    break;
                }
            }
            ptrs.push(q);
        }
        ptrs
    }

    fn peek_past_pointers_is(&self, what: &[&str]) -> bool {
        let mut n = 0;
        while matches!(self.peek_at(n).text.as_str(), "*" | "const" | "volatile" | "restrict" | "__restrict")
        {
            n += 1;
        }
        what.iter().any(|w| self.peek_at(n).is(w))
    }

    fn declarator(&mut self) -> PResult<Declarator> {
        let start = self.pos;
        let pointers = self.pointer_quals();
        if self.at("(") {
            return self.unsupported("parenthesized declarator (function pointer)");
        }
        let name = self.ident()?.text;
        let mut dims = Vec::new();
        while self.eat("[") {
            if self.eat("]") {
                dims.push(None);
            } else {
                dims.push(Some(self.cond_expr()?));
                self.expect("]")?;
            }
        }
        Ok(Declarator { name, pointers, dims, span: self.span_from(start) })
    }

    fn declaration_rest(&mut self, spec: DeclSpec, first: Declarator) -> PResult<Declaration> {
        let mut items = Vec::new();
        let mut decl = first;
        loop {
            let init = if self.eat("=") {
                if spec.storage == Some(Storage::Typedef) {
                    return self.err("typedef with initializer");
                }
                Some(self.initializer()?)
            } else {
                None
            };
            if spec.storage == Some(Storage::Typedef) {
                self.typedefs.last_mut().unwrap().insert(decl.name.clone());
            }
            items.push(InitDeclarator { decl, init });
            if !self.eat(",") {
                break;
            }
            decl = self.declarator()?;
        }
        Ok(Declaration { spec, items })
    }

    fn initializer(&mut self) -> PResult<Initializer> {
        if self.eat("{") {
            let mut items = Vec::new();
            while !self.at("}") {
                if self.at(".") || self.at("[") {
                    return self.unsupported("designated initializer");
                }
                items.push(self.initializer()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            Ok(Initializer::List(items))
        } else {
            Ok(Initializer::Expr(self.assign_expr()?))
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let spec = self.decl_spec()?;
        if spec.storage.is_some() {
            return self.err("storage class in type name");
        }
        let pointers = self.pointer_quals();
        if self.at("[") || self.at("(") {
            return self.unsupported("complex abstract declarator");
        }
        Ok(TypeName { spec, pointers })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.at("}") {
            if self.peek().kind == TokKind::Eof {
                return self.err("expected `}`");
            }
            items.push(self.statement()?);
        }
        self.bump();
        Ok(Block { items })
    }

    fn stmt(&mut self, start: usize, kind: StmtKind) -> Stmt {
        let id = self.id();
        Stmt { id, kind, span: self.span_from(start) }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let t = self.peek().clone();
        if t.kind == TokKind::Directive {
            return self.unsupported("preprocessor directive inside function");
        }
        if t.kind == TokKind::Ident {
            if UNSUPPORTED_KEYWORDS.contains(&t.text.as_str()) {
                return self.unsupported(t.text.clone());
            }
            if !is_keyword(&t.text) && self.peek_at(1).is(":") {
                return self.unsupported("label");
            }
            match t.text.as_str() {
                "if" => {
                    self.bump();
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let then = Box::new(self.statement()?);
                    let els =
                        if self.eat("else") { Some(Box::new(self.statement()?)) } else { None };
                    return Ok(self.stmt(start, StmtKind::If { cond, then, els }));
                }
                "while" => {
                    self.bump();
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let body = Box::new(self.statement()?);
                    return Ok(self.stmt(start, StmtKind::While { cond, body }));
                }
                "do" => {
                    self.bump();
                    let body = Box::new(self.statement()?);
                    self.expect("while")?;
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    self.expect(";")?;
                    return Ok(self.stmt(start, StmtKind::DoWhile { body, cond }));
                }
                "for" => {
                    self.bump();
                    self.expect("(")?;
                    self.typedefs.push(HashSet::new());
                    let init = if self.eat(";") {
                        ForInit::None
                    } else if self.starts_type(&self.peek().clone()) {
                        let spec = self.decl_spec()?;
                        let first = self.declarator()?;
                        let d = self.declaration_rest(spec, first)?;
                        self.expect(";")?;
                        ForInit::Decl(d)
                    } else {
                        let e = self.expr()?;
                        self.expect(";")?;
                        ForInit::Expr(e)
                    };
                    let cond = if self.at(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    let step = if self.at(")") { None } else { Some(self.expr()?) };
                    self.expect(")")?;
                    let body = Box::new(self.statement()?);
                    self.typedefs.pop();
                    return Ok(self.stmt(start, StmtKind::For { init, cond, step, body }));
                }
                "switch" => {
                    self.bump();
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let body = Box::new(self.statement()?);
                    return Ok(self.stmt(start, StmtKind::Switch { cond, body }));
                }
                "case" => {
                    self.bump();
                    let e = self.cond_expr()?;
                    if self.at("...") {
                        return self.unsupported("case range");
                    }
                    self.expect(":")?;
                    return Ok(self.stmt(start, StmtKind::Case(e)));
                }
                "default" => {
                    self.bump();
                    self.expect(":")?;
                    return Ok(self.stmt(start, StmtKind::Default));
                }
                "break" => {
                    self.bump();
                    self.expect(";")?;
                    return Ok(self.stmt(start, StmtKind::Break));
                }
                "continue" => {
                    self.bump();
                    self.expect(";")?;
                    return Ok(self.stmt(start, StmtKind::Continue));
                }
                "return" => {
                    self.bump();
                    let e = if self.at(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    return Ok(self.stmt(start, StmtKind::Return(e)));
                }
                "else" => return self.err("`else` without `if`"),
                _ => {}
            }
            if self.starts_type(&t) {
                let spec = self.decl_spec()?;
                if self.eat(";") {
                    return Ok(self.stmt(start, StmtKind::Decl(Declaration { spec, items: vec![] })));
                }
                let first = self.declarator()?;
                if self.at("(") {
                    return self.unsupported("nested function declaration");
                }
                let d = self.declaration_rest(spec, first)?;
                self.expect(";")?;
                return Ok(self.stmt(start, StmtKind::Decl(d)));
            }
        }
        if self.at("{") {
            self.typedefs.push(HashSet::new());
            let b = self.block()?;
            self.typedefs.pop();
            return Ok(self.stmt(start, StmtKind::Compound(b)));
        }
        if self.eat(";") {
            return Ok(self.stmt(start, StmtKind::Empty));
        }
        let e = self.expr()?;
        self.expect(";")?;
        Ok(self.stmt(start, StmtKind::Expr(e)))
    }

    // ---- expressions ----

    fn mk(&mut self, start: usize, kind: ExprKind) -> Expr {
        let id = self.id();
        Expr { id, kind, span: self.span_from(start), ty: TypeDesc::Void }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let mut lhs = self.assign_expr()?;
        while self.eat(",") {
            let rhs = self.assign_expr()?;
            lhs = self.mk(
                start,
                ExprKind::Binary { op: BinaryOp::Comma, lhs: Box::new(lhs), rhs: Box::new(rhs) },
            );
        }
        Ok(lhs)
    }

    fn assign_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let lhs = self.cond_expr()?;
        let t = self.peek().clone();
        if t.kind == TokKind::Punct {
            let op = match t.text.as_str() {
                "=" => Some(None),
                "+=" | "-=" | "*=" | "/=" | "%=" | "<<=" | ">>=" | "&=" | "^=" | "|=" => {
                    Some(BinaryOp::from_punct(&t.text[..t.text.len() - 1]))
                }
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let rhs = self.assign_expr()?;
                return Ok(self.mk(start, ExprKind::Assign { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }));
            }
        }
        Ok(lhs)
    }

    fn cond_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let cond = self.binary(BinaryOp::LogOr.precedence())?;
        if self.eat("?") {
            let then = self.expr()?;
            self.expect(":")?;
            let els = self.cond_expr()?;
            return Ok(self.mk(
                start,
                ExprKind::Cond { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
            ));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.pos;
        let mut lhs = self.cast_expr()?;
        loop {
            let t = self.peek();
            if t.kind != TokKind::Punct {
                break;
            }
            let Some(op) = BinaryOp::from_punct(&t.text) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk(start, ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) });
        }
        Ok(lhs)
    }

    fn cast_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        if self.at("(") && self.starts_type(&self.peek_at(1).clone()) {
            self.bump();
            let to = self.type_name()?;
            self.expect(")")?;
            if self.at("{") {
                return self.unsupported("compound literal");
            }
            let e = self.cast_expr()?;
            return Ok(self.mk(start, ExprKind::Cast { to, expr: Box::new(e) }));
        }
        self.unary_expr()
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let t = self.peek().clone();
        if t.kind == TokKind::Punct {
            let op = match t.text.as_str() {
                "++" => Some(UnaryOp::PreInc),
                "--" => Some(UnaryOp::PreDec),
                "+" => Some(UnaryOp::Plus),
                "-" => Some(UnaryOp::Neg),
                "!" => Some(UnaryOp::Not),
                "~" => Some(UnaryOp::BitNot),
                "*" => Some(UnaryOp::Deref),
                "&" => Some(UnaryOp::AddrOf),
                "&&" => return self.unsupported("label address"),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let operand = if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec) {
                    self.unary_expr()?
                } else {
                    self.cast_expr()?
                };
                return Ok(self.mk(start, ExprKind::Unary { op, operand: Box::new(operand) }));
            }
        }
        if self.at("sizeof") {
            self.bump();
            if self.at("(") && self.starts_type(&self.peek_at(1).clone()) {
                self.bump();
                let tn = self.type_name()?;
                self.expect(")")?;
                return Ok(self.mk(start, ExprKind::SizeofType(tn)));
            }
            let e = self.unary_expr()?;
            return Ok(self.mk(start, ExprKind::SizeofExpr(Box::new(e))));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let mut e = self.primary()?;
        loop {
            if self.eat("[") {
                let index = self.expr()?;
                self.expect("]")?;
                e = self.mk(start, ExprKind::Index { base: Box::new(e), index: Box::new(index) });
            } else if self.at("(") {
                let callee = match &e.kind {
                    ExprKind::Ident(name) => name.clone(),
                    _ => return self.unsupported("call through expression"),
                };
                self.bump();
                let mut args = Vec::new();
                if !self.at(")") {
                    loop {
                        args.push(self.assign_expr()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                e = self.mk(start, ExprKind::Call { callee, args });
            } else if self.at(".") || self.at("->") {
                let arrow = self.bump().text == "->";
                let field = self.ident()?.text;
                e = self.mk(start, ExprKind::Member { base: Box::new(e), field, arrow });
            } else if self.eat("++") {
                e = self.mk(start, ExprKind::PostInc(Box::new(e)));
            } else if self.eat("--") {
                e = self.mk(start, ExprKind::PostDec(Box::new(e)));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let t = self.peek().clone();
        match t.kind {
            TokKind::Ident => {
                if UNSUPPORTED_KEYWORDS.contains(&t.text.as_str()) {
                    return self.unsupported(t.text.clone());
                }
                if is_keyword(&t.text) {
                    return self.err("expected expression");
                }
                self.bump();
                Ok(self.mk(start, ExprKind::Ident(t.text)))
            }
            TokKind::Int => {
                self.bump();
                let value = parse_int_literal(&t.text).ok_or_else(|| ParseError::Syntax {
                    line: t.line,
                    message: format!("invalid integer literal `{}`", t.text),
                })?;
                Ok(self.mk(start, ExprKind::IntLit { text: t.text, value }))
            }
            TokKind::Float => {
                self.bump();
                Ok(self.mk(start, ExprKind::FloatLit(t.text)))
            }
            TokKind::Char => {
                self.bump();
                let value = parse_char_literal(&t.text).ok_or_else(|| ParseError::Syntax {
                    line: t.line,
                    message: format!("invalid character literal {}", t.text),
                })?;
                Ok(self.mk(start, ExprKind::CharLit { text: t.text, value }))
            }
            TokKind::Str => {
                self.bump();
                if self.peek().kind == TokKind::Str {
                    return self.unsupported("string literal concatenation");
                }
                Ok(self.mk(start, ExprKind::StrLit(t.text)))
            }
            TokKind::Punct if t.text == "(" => {
                self.bump();
                if self.at("{") {
                    return self.unsupported("statement expression");
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(self.mk(start, ExprKind::Paren(Box::new(e))))
            }
            _ => self.err("expected expression"),
        }
    }
}

fn parse_directive(t: &Token) -> PResult<PreambleItem> {
    let body = t.text[1..].trim_start();
    if let Some(rest) = body.strip_prefix("include") {
        let rest = rest.trim();
        let (system, name) = if let Some(n) = rest.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
            (true, n)
        } else if let Some(n) = rest.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
            (false, n)
        } else {
            return Err(ParseError::Syntax { line: t.line, message: "malformed #include".into() });
        };
        return Ok(PreambleItem::Include { header: name.trim().to_string(), system });
    }
    let word = body.split_whitespace().next().unwrap_or("");
    Err(ParseError::Unsupported { construct: format!("preprocessor directive #{word}"), line: t.line })
}

pub fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "if" | "else"
            | "while"
            | "do"
            | "for"
            | "switch"
            | "case"
            | "default"
            | "break"
            | "continue"
            | "return"
            | "sizeof"
            | "goto"
    ) || TYPE_KEYWORDS.contains(&s)
}

pub fn parse_int_literal(text: &str) -> Option<u128> {
    let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
    let suffix = &text[digits.len()..].to_ascii_lowercase();
    if !matches!(suffix.as_str(), "" | "u" | "l" | "ul" | "lu" | "ll" | "ull" | "llu") {
        return None;
    }
    let v = if let Some(h) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        u128::from_str_radix(h, 16).ok()?
    } else if digits.len() > 1 && digits.starts_with('0') {
        u128::from_str_radix(&digits[1..], 8).ok()?
    } else {
        digits.parse::<u128>().ok()?
    };
    (v <= u64::MAX as u128).then_some(v)
}

/// Value of a character constant (type `int`, plain `char` is signed).
pub fn parse_char_literal(text: &str) -> Option<i128> {
    let inner = text.strip_prefix('\'')?.strip_suffix('\'')?;
    let bytes = inner.as_bytes();
    let v: u32 = if bytes.first() == Some(&b'\\') {
        let rest = &inner[1..];
        match rest.as_bytes().first()? {
            b'n' => 10,
            b't' => 9,
            b'r' => 13,
            b'0'..=b'7' => u32::from_str_radix(rest, 8).ok()?,
            b'x' => u32::from_str_radix(&rest[1..], 16).ok()?,
            b'\\' => 92,
            b'\'' => 39,
            b'"' => 34,
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            b'?' => 63,
            _ => return None,
        }
    } else if bytes.len() == 1 {
        bytes[0] as u32
    } else {
        return None;
    };
    if v > 0xff {
        return None;
    }
    Some(v as u8 as i8 as i128)
}
