//! Small syntactic facts about expressions shared by the profiler and the
//! synthesizer.

use super::ast::*;

/// Subexpressions (including `e`) evaluated every time `e` is evaluated:
/// everything except `?:` arms, right operands of `&&`/`||` and `sizeof`
/// operands.
pub fn unconditional_subexprs(e: &Expr) -> Vec<&Expr> {
    fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
        out.push(e);
        match &e.kind {
            ExprKind::Cond { cond, .. } => go(cond, out),
            ExprKind::Binary { op: BinaryOp::LogAnd | BinaryOp::LogOr, lhs, .. } => go(lhs, out),
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => {}
            _ => e.children().into_iter().for_each(|c| go(c, out)),
        }
    }
    let mut out = Vec::new();
    go(e, &mut out);
    out
}

/// The operand written by an assignment or increment, if `e` is one.
pub fn written_operand(e: &Expr) -> Option<&Expr> {
    match &e.kind {
        ExprKind::Assign { lhs, .. } => Some(lhs),
        ExprKind::Unary { op: UnaryOp::PreInc | UnaryOp::PreDec, operand } => Some(operand),
        ExprKind::PostInc(x) | ExprKind::PostDec(x) => Some(x),
        _ => None,
    }
}

/// For `x`, `x.f`, `x.f.g` (parentheses allowed) the identifier `x`.
pub fn plain_root(e: &Expr) -> Option<&Expr> {
    let e = e.unparen();
    match &e.kind {
        ExprKind::Ident(_) => Some(e),
        ExprKind::Member { base, arrow: false, .. } => plain_root(base),
        _ => None,
    }
}

/// The variable whose storage an lvalue designates directly, looking through
/// `.`, `[]` and parentheses. `p->x` and `*p` yield `None`.
pub fn storage_root(e: &Expr) -> Option<&Expr> {
    let e = e.unparen();
    match &e.kind {
        ExprKind::Ident(_) => Some(e),
        ExprKind::Member { base, arrow: false, .. } => storage_root(base),
        ExprKind::Index { base, .. } => storage_root(base),
        _ => None,
    }
}

/// Every expression in `e` (pre-order), including unevaluated ones.
pub fn all_subexprs(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    e.visit(&mut |x| out.push(x));
    out
}
