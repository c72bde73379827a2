//! Front end for the supported C subset: single-function translation units.
//!
//! Parsing always normalizes. The text is parsed, printed canonically and
//! parsed again, so every span and line number in a [`SourceUnit`] refers to
//! the canonical text stored in `original_text`.

pub mod analysis;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod typeck;
pub mod types;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use ast::*;
pub use typeck::{Semantics, SymKind, Symbol};
use types::{IntType, TypeDesc};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("unsupported construct at line {line}: {construct}")]
    Unsupported { construct: String, line: u32 },
    #[error("expected exactly one function definition, found {count}")]
    NotSingleFunction { count: usize },
}

/// Typedef names provided by the allowlisted headers.
pub fn builtin_typedef(name: &str) -> Option<IntType> {
    Some(match name {
        "int8_t" => IntType::I8,
        "int16_t" => IntType::I16,
        "int32_t" => IntType::I32,
        "int64_t" | "intptr_t" | "ptrdiff_t" | "intmax_t" | "ssize_t" => IntType::I64,
        "uint8_t" => IntType::U8,
        "uint16_t" => IntType::U16,
        "uint32_t" => IntType::U32,
        "uint64_t" | "uintptr_t" | "size_t" | "uintmax_t" => IntType::U64,
        _ => return None,
    })
}

/// Headers a snippet may include.
pub const ALLOWED_HEADERS: &[&str] = &["stdint.h", "stdlib.h", "string.h", "stddef.h", "limits.h"];

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub preamble: Vec<PreambleItem>,
    pub function: FunctionDef,
    /// Canonical text; all spans index into it.
    pub original_text: String,
    pub sema: Semantics,
}

fn parse_raw(text: &str) -> Result<parser::RawUnit, ParseError> {
    let toks = lexer::tokenize(text)?;
    parser::Parser::new(toks).parse_unit()
}

pub fn parse_function(text: &str) -> Result<SourceUnit, ParseError> {
    let raw = parse_raw(text)?;
    if raw.functions.len() != 1 {
        return Err(ParseError::NotSingleFunction { count: raw.functions.len() });
    }
    let canonical = printer::print_parts(&raw.preamble, &raw.functions[0]);
    parse_canonical(canonical)
}

/// Parse text that is already in canonical form.
fn parse_canonical(canonical: String) -> Result<SourceUnit, ParseError> {
    let mut raw = parse_raw(&canonical)?;
    let mut function = raw.functions.pop().expect("canonical text has one function");
    let sema = typeck::Checker::check(&mut raw.preamble, &mut function)?;
    Ok(SourceUnit { preamble: raw.preamble, function, original_text: canonical, sema })
}

pub fn print_unit(unit: &SourceUnit) -> String {
    printer::print_parts(&unit.preamble, &unit.function)
}

impl SourceUnit {
    /// Rebuild a unit from modified parts, re-deriving spans and types.
    pub fn from_parts(preamble: Vec<PreambleItem>, function: FunctionDef) -> Result<SourceUnit, ParseError> {
        parse_canonical(printer::print_parts(&preamble, &function))
    }

    pub fn name(&self) -> &str {
        &self.function.name
    }

    pub fn text_of(&self, span: SourceSpan) -> &str {
        &self.original_text[span.start..span.end]
    }

    /// Number of lines in the canonical text.
    pub fn line_count(&self) -> usize {
        self.original_text.lines().count()
    }

    pub fn includes(&self) -> Vec<(&str, bool)> {
        self.preamble
            .iter()
            .filter_map(|p| match p {
                PreambleItem::Include { header, system } => Some((header.as_str(), *system)),
                _ => None,
            })
            .collect()
    }

    /// How to spell the pointee type of pointer parameter `i`, unqualified,
    /// e.g. `char` for `const char *s`.
    pub fn param_pointee_text(&self, i: usize) -> Option<String> {
        let p = self.function.params.get(i)?;
        let mut ptrs = p.decl.pointers.clone();
        if p.decl.dims.is_empty() {
            ptrs.pop()?;
        }
        let mut spec = p.spec.clone();
        spec.storage = None;
        spec.quals.clear();
        Some(printer::print_type_name(&TypeName { spec, pointers: ptrs }))
    }

    /// The function's signature as (parameter types, return type).
    pub fn signature(&self) -> Signature {
        Signature { params: self.function.param_tys.clone(), ret: self.function.ret_ty.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub params: Vec<TypeDesc>,
    pub ret: TypeDesc,
}

impl Signature {
    pub fn involves_float(&self) -> bool {
        self.ret.involves_float() || self.params.iter().any(|p| p.involves_float())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExprContext {
    Rvalue,
    LvalueTarget,
    AddressOfOperand,
    SizeofOperand,
    /// The structure operand of `.`; it is neither read as a whole nor written.
    Designator,
}

/// Every basic expression in the function body, in source order, with the
/// context it appears in. Library constants are not variables and are skipped.
pub fn enumerate_basic_exprs(unit: &SourceUnit) -> Vec<(&Expr, ExprContext)> {
    let mut out = Vec::new();
    for s in &unit.function.body.items {
        s.visit(&mut |s| {
            let exprs = match &s.kind {
                StmtKind::Case(_) => vec![],
                _ => s.own_exprs(),
            };
            for e in exprs {
                walk_ctx(unit, e, ExprContext::Rvalue, false, &mut out);
            }
        });
    }
    out
}

/// Basic expressions inside `e` (itself included), with their contexts.
pub fn basic_exprs_of<'a>(unit: &SourceUnit, e: &'a Expr) -> Vec<(&'a Expr, ExprContext)> {
    let mut out = Vec::new();
    walk_ctx(unit, e, ExprContext::Rvalue, false, &mut out);
    out
}

fn walk_ctx<'a>(
    unit: &SourceUnit,
    e: &'a Expr,
    ctx: ExprContext,
    unevaluated: bool,
    out: &mut Vec<(&'a Expr, ExprContext)>,
) {
    use ExprContext::*;
    let ctx = if unevaluated { SizeofOperand } else { ctx };
    let basic = match &e.kind {
        ExprKind::Ident(_) => {
            unit.sema.symbol_of(e).is_some_and(|s| !matches!(s.kind, SymKind::Library | SymKind::Function))
        }
        _ => e.is_basic(),
    };
    if basic {
        out.push((e, ctx));
    }
    let mut go = |c: &'a Expr, ctx: ExprContext, unev: bool| walk_ctx(unit, c, ctx, unev, out);
    match &e.kind {
        ExprKind::Paren(x) => go(x, ctx, unevaluated),
        ExprKind::Assign { lhs, rhs, .. } => {
            go(lhs, LvalueTarget, unevaluated);
            go(rhs, Rvalue, unevaluated);
        }
        ExprKind::Unary { op: UnaryOp::PreInc | UnaryOp::PreDec, operand }
        | ExprKind::PostInc(operand)
        | ExprKind::PostDec(operand) => go(operand, LvalueTarget, unevaluated),
        ExprKind::Unary { op: UnaryOp::AddrOf, operand } => go(operand, AddressOfOperand, unevaluated),
        ExprKind::SizeofExpr(x) => go(x, SizeofOperand, true),
        ExprKind::Member { base, arrow: false, .. } => {
            // `.` on an lvalue designates storage; the field's context decides
            go(base, Designator, unevaluated)
        }
        _ => {
            for c in e.children() {
                go(c, Rvalue, unevaluated);
            }
        }
    }
}

/// Prefix every file-scope symbol (variables, typedef names, struct tags and
/// the function) with `<prefix>_`.
pub fn rename_globals(unit: &SourceUnit, prefix: &str) -> SourceUnit {
    let globals: HashSet<String> = unit
        .sema
        .symbols
        .iter()
        .filter(|s| matches!(s.kind, SymKind::Global | SymKind::Function))
        .map(|s| s.name.clone())
        .collect();
    let r = Renamer {
        prefix,
        sema: &unit.sema,
        globals,
        typedefs: unit.sema.file_typedefs.iter().cloned().collect(),
        tags: unit.sema.file_tags.iter().cloned().collect(),
    };
    let mut preamble = unit.preamble.clone();
    for item in &mut preamble {
        if let PreambleItem::Decl(d) = item {
            r.spec(&mut d.spec);
            for it in &mut d.items {
                it.decl.name = r.name(&it.decl.name);
                if let Some(i) = &mut it.init {
                    r.init(i);
                }
            }
        }
    }
    let mut f = unit.function.clone();
    r.spec(&mut f.spec);
    f.name = r.name(&f.name);
    for p in &mut f.params {
        r.spec(&mut p.spec);
    }
    for s in &mut f.body.items {
        r.stmt(s);
    }
    SourceUnit::from_parts(preamble, f).expect("renaming preserves validity")
}

struct Renamer<'a> {
    prefix: &'a str,
    sema: &'a Semantics,
    globals: HashSet<String>,
    typedefs: HashSet<String>,
    tags: HashSet<String>,
}

impl Renamer<'_> {
    fn name(&self, n: &str) -> String {
        format!("{}_{}", self.prefix, n)
    }

    fn spec(&self, s: &mut DeclSpec) {
        match &mut s.base {
            BaseType::Named(n) if self.typedefs.contains(n) => *n = self.name(n),
            BaseType::Struct { tag, fields } => {
                if let Some(t) = tag {
                    if self.tags.contains(t) {
                        *t = self.name(t);
                    }
                }
                for f in fields.iter_mut().flatten() {
                    self.spec(&mut f.spec);
                }
            }
            _ => {}
        }
    }

    fn init(&self, i: &mut Initializer) {
        match i {
            Initializer::Expr(e) => self.expr(e),
            Initializer::List(items) => items.iter_mut().for_each(|i| self.init(i)),
        }
    }

    fn decl(&self, d: &mut Declaration) {
        self.spec(&mut d.spec);
        for it in &mut d.items {
            if let Some(i) = &mut it.init {
                self.init(i);
            }
        }
    }

    fn expr(&self, e: &mut Expr) {
        let global = self
            .sema
            .symbol_of(e)
            .is_some_and(|s| matches!(s.kind, SymKind::Global | SymKind::Function));
        match &mut e.kind {
            ExprKind::Ident(n) if global && self.globals.contains(n) => *n = self.name(n),
            ExprKind::Call { callee, .. } if global => *callee = self.name(callee),
            ExprKind::Cast { to, .. } | ExprKind::SizeofType(to) => self.spec(&mut to.spec),
            _ => {}
        }
        for c in e.children_mut() {
            self.expr(c);
        }
    }

    fn stmt(&self, s: &mut Stmt) {
        match &mut s.kind {
            StmtKind::Compound(b) => b.items.iter_mut().for_each(|s| self.stmt(s)),
            StmtKind::Decl(d) => self.decl(d),
            StmtKind::Expr(e) | StmtKind::Case(e) => self.expr(e),
            StmtKind::Return(e) => e.iter_mut().for_each(|e| self.expr(e)),
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.stmt(then);
                els.iter_mut().for_each(|e| self.stmt(e));
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } | StmtKind::Switch { cond, body } => {
                self.expr(cond);
                self.stmt(body);
            }
            StmtKind::For { init, cond, step, body } => {
                match init {
                    ForInit::Expr(e) => self.expr(e),
                    ForInit::Decl(d) => self.decl(d),
                    ForInit::None => {}
                }
                cond.iter_mut().for_each(|e| self.expr(e));
                step.iter_mut().for_each(|e| self.expr(e));
                self.stmt(body);
            }
            StmtKind::Empty | StmtKind::Default | StmtKind::Break | StmtKind::Continue => {}
        }
    }
}

#[cfg(test)]
mod tests;
