//! Canonical printer. Output is K&R style with 4-space indentation and every
//! control-flow body braced; expressions print on a single line.

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

fn expr(out: &mut String, e: &Expr) {
    use ExprKind::*;
    match &e.kind {
        Ident(n) => out.push_str(n),
        IntLit { text, .. } | CharLit { text, .. } => out.push_str(text),
        FloatLit(t) | StrLit(t) => out.push_str(t),
        Paren(inner) => {
            out.push('(');
            expr(out, inner);
            out.push(')');
        }
        Unary { op, operand } => {
            let op = op.as_str();
            let inner = print_expr(operand);
            out.push_str(op);
            if inner.starts_with(op.chars().last().unwrap()) {
                out.push(' ');
            }
            out.push_str(&inner);
        }
        PostInc(x) => {
            expr(out, x);
            out.push_str("++");
        }
        PostDec(x) => {
            expr(out, x);
            out.push_str("--");
        }
        Binary { op: BinaryOp::Comma, lhs, rhs } => {
            expr(out, lhs);
            out.push_str(", ");
            expr(out, rhs);
        }
        Binary { op, lhs, rhs } => {
            expr(out, lhs);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            expr(out, rhs);
        }
        Assign { op, lhs, rhs } => {
            expr(out, lhs);
            out.push(' ');
            if let Some(op) = op {
                out.push_str(op.as_str());
            }
            out.push_str("= ");
            expr(out, rhs);
        }
        Cond { cond, then, els } => {
            expr(out, cond);
            out.push_str(" ? ");
            expr(out, then);
            out.push_str(" : ");
            expr(out, els);
        }
        Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a);
            }
            out.push(')');
        }
        Index { base, index } => {
            expr(out, base);
            out.push('[');
            expr(out, index);
            out.push(']');
        }
        Member { base, field, arrow } => {
            expr(out, base);
            out.push_str(if *arrow { "->" } else { "." });
            out.push_str(field);
        }
        Cast { to, expr: x } => {
            out.push('(');
            type_name(out, to, 0);
            out.push(')');
            expr(out, x);
        }
        SizeofExpr(x) => {
            out.push_str("sizeof");
            if !matches!(x.kind, Paren(_)) {
                out.push(' ');
            }
            expr(out, x);
        }
        SizeofType(t) => {
            out.push_str("sizeof(");
            type_name(out, t, 0);
            out.push(')');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn type_name(out: &mut String, t: &TypeName, depth: usize) {
    decl_spec(out, &t.spec, depth);
    if !t.pointers.is_empty() {
        out.push(' ');
        pointers(out, &t.pointers);
        // `int *const` ends in a qualifier followed by a space
        if out.ends_with(' ') {
            out.pop();
        }
    }
}

pub fn print_type_name(t: &TypeName) -> String {
    let mut out = String::new();
    type_name(&mut out, t, 0);
    out
}

fn pointers(out: &mut String, ptrs: &[Vec<Qualifier>]) {
    for q in ptrs {
        out.push('*');
        for q in q {
            out.push_str(q.as_str());
            out.push(' ');
        }
    }
}

fn decl_spec(out: &mut String, spec: &DeclSpec, depth: usize) {
    if let Some(s) = spec.storage {
        out.push_str(s.as_str());
        out.push(' ');
    }
    if spec.inline {
        out.push_str("inline ");
    }
    for q in &spec.quals {
        out.push_str(q.as_str());
        out.push(' ');
    }
    match &spec.base {
        BaseType::Builtin(b) => out.push_str(b.as_str()),
        BaseType::Named(n) => out.push_str(n),
        BaseType::Struct { tag, fields } => {
            out.push_str("struct");
            if let Some(t) = tag {
                out.push(' ');
                out.push_str(t);
            }
            if let Some(fields) = fields {
                out.push_str(" {\n");
                for f in fields {
                    indent(out, depth + 1);
                    decl_spec(out, &f.spec, depth + 1);
                    for (i, d) in f.declarators.iter().enumerate() {
                        out.push_str(if i == 0 { " " } else { ", " });
                        declarator(out, d);
                    }
                    out.push_str(";\n");
                }
                indent(out, depth);
                out.push('}');
            }
        }
    }
}

fn declarator(out: &mut String, d: &Declarator) {
    pointers(out, &d.pointers);
    out.push_str(&d.name);
    for dim in &d.dims {
        out.push('[');
        if let Some(e) = dim {
            expr(out, e);
        }
        out.push(']');
    }
}

fn initializer(out: &mut String, i: &Initializer) {
    match i {
        Initializer::Expr(e) => expr(out, e),
        Initializer::List(items) => {
            out.push('{');
            for (n, i) in items.iter().enumerate() {
                if n > 0 {
                    out.push_str(", ");
                }
                initializer(out, i);
            }
            out.push('}');
        }
    }
}

/// A declaration without the trailing semicolon.
fn declaration(out: &mut String, d: &Declaration, depth: usize) {
    decl_spec(out, &d.spec, depth);
    for (i, item) in d.items.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { ", " });
        declarator(out, &item.decl);
        if let Some(init) = &item.init {
            out.push_str(" = ");
            initializer(out, init);
        }
    }
}

pub fn print_declaration(d: &Declaration) -> String {
    let mut s = String::new();
    declaration(&mut s, d, 0);
    s.push(';');
    s
}

/// Items of a braced body: a compound statement contributes its items directly.
fn body(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Compound(b) => block_items(out, b, depth),
        _ => stmt(out, s, depth),
    }
}

fn block_items(out: &mut String, b: &Block, depth: usize) {
    for s in &b.items {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Compound(b) => {
            out.push_str("{\n");
            block_items(out, b, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Decl(d) => {
            declaration(out, d, depth);
            out.push_str(";\n");
        }
        StmtKind::Expr(e) => {
            expr(out, e);
            out.push_str(";\n");
        }
        StmtKind::Empty => out.push_str(";\n"),
        StmtKind::If { .. } => {
            let mut cur = s;
            loop {
                let StmtKind::If { cond, then, els } = &cur.kind else { unreachable!() };
                out.push_str("if (");
                expr(out, cond);
                out.push_str(") {\n");
                body(out, then, depth + 1);
                indent(out, depth);
                match els {
                    None => {
                        out.push_str("}\n");
                        break;
                    }
                    Some(e) if matches!(e.kind, StmtKind::If { .. }) => {
                        out.push_str("} else ");
                        cur = e;
                    }
                    Some(e) => {
                        out.push_str("} else {\n");
                        body(out, e, depth + 1);
                        indent(out, depth);
                        out.push_str("}\n");
                        break;
                    }
                }
            }
        }
        StmtKind::While { cond, body: b } => {
            out.push_str("while (");
            expr(out, cond);
            out.push_str(") {\n");
            body(out, b, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::DoWhile { body: b, cond } => {
            out.push_str("do {\n");
            body(out, b, depth + 1);
            indent(out, depth);
            out.push_str("} while (");
            expr(out, cond);
            out.push_str(");\n");
        }
        StmtKind::For { init, cond, step, body: b } => {
            out.push_str("for (");
            match init {
                ForInit::None => {}
                ForInit::Expr(e) => expr(out, e),
                ForInit::Decl(d) => declaration(out, d, depth),
            }
            out.push(';');
            if let Some(c) = cond {
                out.push(' ');
                expr(out, c);
            }
            out.push(';');
            if let Some(st) = step {
                out.push(' ');
                expr(out, st);
            }
            out.push_str(") {\n");
            body(out, b, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Switch { cond, body: b } => {
            out.push_str("switch (");
            expr(out, cond);
            out.push_str(") {\n");
            body(out, b, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Case(e) => {
            out.push_str("case ");
            expr(out, e);
            out.push_str(":\n");
        }
        StmtKind::Default => out.push_str("default:\n"),
        StmtKind::Break => out.push_str("break;\n"),
        StmtKind::Continue => out.push_str("continue;\n"),
        StmtKind::Return(e) => {
            out.push_str("return");
            if let Some(e) = e {
                out.push(' ');
                expr(out, e);
            }
            out.push_str(";\n");
        }
    }
}

pub fn print_stmt(s: &Stmt, depth: usize) -> String {
    let mut out = String::new();
    stmt(&mut out, s, depth);
    out
}

pub fn print_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    decl_spec(&mut out, &f.spec, 0);
    out.push(' ');
    pointers(&mut out, &f.ret_pointers);
    out.push_str(&f.name);
    out.push('(');
    if f.void_params {
        out.push_str("void");
    }
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        decl_spec(&mut out, &p.spec, 0);
        out.push(' ');
        declarator(&mut out, &p.decl);
    }
    out.push_str(") {\n");
    block_items(&mut out, &f.body, 1);
    out.push_str("}\n");
    out
}

pub fn print_preamble(items: &[PreambleItem]) -> String {
    let mut out = String::new();
    for item in items {
        match item {
            PreambleItem::Include { header, system: true } => {
                out.push_str(&format!("#include <{header}>\n"))
            }
            PreambleItem::Include { header, system: false } => {
                out.push_str(&format!("#include \"{header}\"\n"))
            }
            PreambleItem::Decl(d) => {
                declaration(&mut out, d, 0);
                out.push_str(";\n");
            }
        }
    }
    out
}

pub fn print_parts(preamble: &[PreambleItem], f: &FunctionDef) -> String {
    let mut out = print_preamble(preamble);
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(&print_function(f));
    out
}
