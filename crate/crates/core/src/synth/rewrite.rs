//! Value-preserving rewrites of a single matched expression.
//!
//! Every arithmetic form is checked exactly in the C type it is evaluated in,
//! so nothing generated here can overflow or change the value it stands for.

use serde::Serialize;

use super::analysis::{MatchedExpr, Var};
use super::choose::{Choice, Chooser};
use crate::cfront::types::IntType;

pub const OPS: [char; 3] = ['+', '-', '^'];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("{value} is not representable in {ty}")]
    Unrepresentable { value: i128, ty: IntType },
    #[error("rewrite skipped: {0}")]
    SkipRewrite(String),
}

/// `x op k`, or `None` if it leaves the range of `w`.
pub fn apply(op: char, x: i128, k: i128, w: IntType) -> Option<i128> {
    let v = match op {
        '+' => x + k,
        '-' => x - k,
        '^' => x ^ k,
        _ => return None,
    };
    (w.contains(x) && w.contains(k) && w.contains(v)).then_some(v)
}

/// The literal `k` with `x op k == target` in type `w`, if there is one.
pub fn solve(op: char, x: i128, target: i128, w: IntType) -> Option<i128> {
    let k = match op {
        '+' => target - x,
        '-' => x - target,
        '^' => x ^ target,
        _ => return None,
    };
    (apply(op, x, k, w) == Some(target)).then_some(k)
}

/// The operators among `ops` that turn `r` into `val` in type `work`, each
/// with its literal.
pub fn massage(r: i128, val: i128, work: IntType, ops: &[char]) -> Vec<(char, i128)> {
    ops.iter().filter_map(|&op| solve(op, r, val, work).map(|k| (op, k))).collect()
}

/// A generated expression and the type C gives it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthExpr {
    pub text: String,
    pub ty: IntType,
    pub value: i128,
}

/// An expression over `vars` equal to `target`, to be converted to `slot`.
/// Prefers a variable holding the value, then `x op k`, then a literal.
pub fn synthesize_expression(
    vars: &[Var],
    target: i128,
    slot: IntType,
    chooser: &mut dyn Chooser,
) -> Result<SynthExpr, RewriteError> {
    if !slot.contains(target) {
        return Err(RewriteError::Unrepresentable { value: target, ty: slot });
    }
    let exact: Vec<&Var> = vars.iter().filter(|v| v.value == target).collect();
    if !exact.is_empty() {
        let v = exact[chooser.pick(Choice::Variable, exact.len(), &|i| exact[i].name.clone())];
        return Ok(SynthExpr { text: v.name.clone(), ty: v.ty.promote(), value: target });
    }
    let forms: Vec<(&Var, Vec<(char, i128)>)> = vars
        .iter()
        .map(|v| (v, massage(v.value, target, v.ty.promote(), &OPS)))
        .filter(|(_, ops)| !ops.is_empty())
        .collect();
    if forms.is_empty() {
        return Ok(SynthExpr { text: slot.literal(target), ty: slot.promote(), value: target });
    }
    let (v, ops) = &forms[chooser.pick(Choice::Variable, forms.len(), &|i| forms[i].0.name.clone())];
    let (op, k) = ops[chooser.pick(Choice::Operator, ops.len(), &|i| ops[i].0.to_string())];
    let w = v.ty.promote();
    Ok(SynthExpr { text: format!("{} {op} {}", v.name, w.literal(k)), ty: w, value: target })
}

/// What a rewritten expression evaluates to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicted {
    /// The expression's single profiled value.
    Value(i128),
    /// Whatever the original expression evaluates to; the added term is zero.
    Unchanged,
}

impl std::fmt::Display for Predicted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Predicted::Value(v) => write!(f, "{v}"),
            Predicted::Unchanged => f.write_str("="),
        }
    }
}

/// Generated C text in which some sub-expressions are checked by the audit
/// build against the value they were generated to have.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Code {
    Text(String),
    Checked { inner: Vec<Code>, ty: IntType, expect: i128 },
}

pub fn text(s: impl Into<String>) -> Code {
    Code::Text(s.into())
}

pub fn checked(inner: Vec<Code>, ty: IntType, expect: i128) -> Code {
    Code::Checked { inner, ty, expect }
}

/// Plain C text.
pub fn render(code: &[Code]) -> String {
    let mut out = String::new();
    for c in code {
        match c {
            Code::Text(s) => out.push_str(s),
            Code::Checked { inner, .. } => out.push_str(&render(inner)),
        }
    }
    out
}

/// C text with every check expanded to `__LF_CHECK(id, e, expect)`; ids
/// come from `next` in pre-order.
pub fn render_audit(code: &[Code], next: &mut usize) -> String {
    let mut out = String::new();
    for c in code {
        match c {
            Code::Text(s) => out.push_str(s),
            Code::Checked { inner, ty, expect } => {
                let id = *next;
                *next += 1;
                let e = render_audit(inner, next);
                out.push_str(&format!("__LF_CHECK({id}, {e}, {})", ty.literal(*expect)));
            }
        }
    }
    out
}

/// Number of checks in `code`.
pub fn check_count(code: &[Code]) -> usize {
    code.iter()
        .map(|c| match c {
            Code::Text(_) => 0,
            Code::Checked { inner, .. } => 1 + check_count(inner),
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteKind {
    Call,
    GlobalRead,
    GlobalWrite,
}

#[derive(Debug, Clone)]
pub struct Rewrite {
    pub kind: RewriteKind,
    /// Replacement for the expression, or for `GlobalWrite` the statement to
    /// insert after its statement.
    pub code: Vec<Code>,
    pub predicted: Predicted,
}

/// The callee side of a call insertion: name, parameter types, the profiled
/// input and return value.
#[derive(Debug, Clone)]
pub struct CallTarget<'a> {
    pub name: &'a str,
    pub params: Vec<IntType>,
    pub inputs: Vec<i128>,
    pub ret: IntType,
    pub output: i128,
}

fn cast(to: IntType, from: IntType, mut code: Vec<Code>) -> Vec<Code> {
    if to != from {
        code.insert(0, text(format!("({})(", to.c_name())));
        code.push(text(")"));
    }
    code
}

/// Replace `m` by a call that reproduces its value: `call op k` when `m` is
/// stable, `m + (T)(call - r)` otherwise.
pub fn syn_func_call(m: &MatchedExpr, callee: &CallTarget<'_>, chooser: &mut dyn Chooser) -> Result<Rewrite, RewriteError> {
    let t = m.ty.promote();
    let w = callee.ret.promote();
    let forms = match m.stable() {
        Some(val) => {
            let forms = massage(callee.output, val, w, &OPS);
            if forms.is_empty() {
                return Err(RewriteError::SkipRewrite(format!("no operator turns {} into {val} within {w}", callee.output)));
            }
            Some((val, forms))
        }
        None => None,
    };
    let mut call = vec![text(format!("{}(", callee.name))];
    for (i, (&slot, &target)) in callee.params.iter().zip(&callee.inputs).enumerate() {
        let a = synthesize_expression(&m.vars, target, slot, chooser)?;
        if i > 0 {
            call.push(text(", "));
        }
        call.push(checked(vec![text(a.text)], a.ty, a.value));
    }
    call.push(text(")"));

    match forms {
        Some((val, forms)) => {
            let (op, k) = forms[chooser.pick(Choice::Operator, forms.len(), &|i| forms[i].0.to_string())];
            call.push(text(format!(" {op} {}", w.literal(k))));
            let code = vec![checked(cast(t, w, call), t, val)];
            Ok(Rewrite { kind: RewriteKind::Call, code, predicted: Predicted::Value(val) })
        }
        None => {
            call.insert(0, text(format!("({})(", t.c_name())));
            call.push(text(format!(" - {})", w.literal(callee.output))));
            let code = vec![text(format!("{} + ", m.text)), checked(call, t, 0)];
            Ok(Rewrite { kind: RewriteKind::Call, code, predicted: Predicted::Unchanged })
        }
    }
}

/// A generator-owned global: only ever read, or written with its own value,
/// until the driver's final mixing step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GlobalVar {
    pub name: String,
    pub ty: IntType,
    pub init: i128,
}

/// Rewrite `m` in terms of `g`. A stable `m` becomes `g op k` (read) or is
/// left alone while `g = g + (m - val);` follows its statement (write). An
/// unstable `m` becomes `m + (g - init)`.
pub fn syn_global(m: &MatchedExpr, g: &GlobalVar, chooser: &mut dyn Chooser) -> Result<Rewrite, RewriteError> {
    let t = m.ty.promote();
    let w = g.ty.promote();
    let Some(val) = m.stable() else {
        let adj = vec![text(format!("{} - {}", g.name, w.literal(g.init)))];
        let (adj, ty) = if IntType::usual_conversion(t, w) == t { (adj, w) } else { (cast(t, w, adj), t) };
        let code = vec![text(format!("{} + (", m.text)), checked(adj, ty, 0), text(")")];
        return Ok(Rewrite { kind: RewriteKind::GlobalRead, code, predicted: Predicted::Unchanged });
    };
    let reads = massage(g.init, val, w, &OPS);
    let write = m.write_at.is_some() && (reads.is_empty() || chooser.flip(Choice::WriteGlobal, 0.5, &m.text));
    if write {
        let diff = vec![checked(vec![text(m.text.clone())], m.ty, val), text(format!(" - {}", m.ty.literal(val)))];
        let diff = if t == w { diff } else { cast(w, t, diff) };
        let mut code = vec![text(format!("{0} = {0} + (", g.name))];
        code.extend(diff);
        code.push(text(");"));
        return Ok(Rewrite { kind: RewriteKind::GlobalWrite, code, predicted: Predicted::Value(val) });
    }
    if reads.is_empty() {
        return Err(RewriteError::SkipRewrite(format!("{} cannot reach {val} within {w}", g.name)));
    }
    let (op, k) = reads[chooser.pick(Choice::Operator, reads.len(), &|i| reads[i].0.to_string())];
    let read = vec![text(format!("{} {op} {}", g.name, w.literal(k)))];
    let code = vec![checked(cast(t, w, read), t, val)];
    Ok(Rewrite { kind: RewriteKind::GlobalRead, code, predicted: Predicted::Value(val) })
}
