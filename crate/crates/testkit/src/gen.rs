//! Deterministic random numeric C functions, used to stock large fixture
//! databases. Every function takes and returns integers, and its arithmetic
//! keeps signed values small so most inputs run without undefined behavior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
struct Ty {
    name: &'static str,
    signed: bool,
    /// Modulus keeping values of this type small when it is signed.
    bound: u32,
}

const TYPES: [Ty; 10] = [
    Ty { name: "int", signed: true, bound: 10007 },
    Ty { name: "unsigned int", signed: false, bound: 0 },
    Ty { name: "long", signed: true, bound: 10007 },
    Ty { name: "unsigned long", signed: false, bound: 0 },
    Ty { name: "short", signed: true, bound: 1009 },
    Ty { name: "unsigned short", signed: false, bound: 0 },
    Ty { name: "signed char", signed: true, bound: 101 },
    Ty { name: "unsigned char", signed: false, bound: 0 },
    Ty { name: "long long", signed: true, bound: 10007 },
    Ty { name: "unsigned long long", signed: false, bound: 0 },
];

struct Var {
    name: String,
    ty: Ty,
    param: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<Var>,
    /// Loop counters in scope; readable, never assigned.
    counters: Vec<String>,
    table: Option<(String, usize)>,
    out: String,
    next: usize,
}

impl Gen {
    fn ty(&mut self) -> Ty {
        TYPES[self.rng.random_range(0..TYPES.len())]
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn leaf(&mut self) -> String {
        let r = self.rng.random_range(0..10);
        if r < 2 || self.vars.is_empty() {
            return self.rng.random_range(0..100).to_string();
        }
        if r == 2 && !self.counters.is_empty() {
            let i = self.rng.random_range(0..self.counters.len());
            return self.counters[i].clone();
        }
        if r == 3 {
            if let Some((t, n)) = self.table.clone() {
                let idx = self.expr(1);
                return format!("{t}[({idx}) & {}]", n - 1);
            }
        }
        let v = &self.vars[self.rng.random_range(0..self.vars.len())];
        if v.param && v.ty.signed {
            // raw inputs may be extreme; fold them into a small range first
            format!("({} % 1000)", v.name)
        } else {
            v.name.clone()
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.3) {
            return self.leaf();
        }
        match self.rng.random_range(0..12) {
            0..=5 => {
                let op = ["+", "-", "^", "&", "|", "+"][self.rng.random_range(0..6)];
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("{a} {op} {b}")
            }
            6 => {
                let a = self.expr(depth - 1);
                format!("({a}) * {}", self.rng.random_range(2..8))
            }
            7 => {
                let a = self.expr(depth - 1);
                let op = ["/", "%"][self.rng.random_range(0..2)];
                format!("({a}) {op} {}", self.rng.random_range(1..14))
            }
            8 => {
                let a = self.expr(depth - 1);
                format!("({a}) >> {}", self.rng.random_range(0..8))
            }
            9 => {
                let c = self.cond(depth - 1);
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("({c}) ? ({a}) : ({b})")
            }
            10 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                let op = ["<", ">", "<=", ">=", "==", "!="][self.rng.random_range(0..6)];
                format!("({a} {op} {b})")
            }
            _ => {
                let a = self.expr(depth - 1);
                format!("~({a})")
            }
        }
    }

    fn cond(&mut self, depth: u32) -> String {
        let a = self.expr(depth);
        match self.rng.random_range(0..3) {
            0 => format!("({a}) & 1"),
            1 => format!("{a} > {}", self.rng.random_range(0..60)),
            _ => {
                let b = self.expr(depth);
                format!("{a} != {b}")
            }
        }
    }

    /// `e` converted so a variable of type `t` stays in range.
    fn fit(&self, t: Ty, e: String) -> String {
        if t.signed {
            format!("({e}) % {}", t.bound)
        } else {
            e
        }
    }

    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn stmts(&mut self, indent: usize, count: usize, depth: u32) {
        for _ in 0..count {
            self.stmt(indent, depth);
        }
    }

    fn assignable(&mut self) -> Option<usize> {
        let locals: Vec<usize> = (0..self.vars.len()).filter(|&i| !self.vars[i].param).collect();
        if locals.is_empty() {
            return None;
        }
        Some(locals[self.rng.random_range(0..locals.len())])
    }

    fn stmt(&mut self, indent: usize, depth: u32) {
        let r = self.rng.random_range(0..10);
        match r {
            0..=3 => {
                let Some(i) = self.assignable() else { return self.stmt(indent, depth) };
                let e = self.expr(3);
                let (name, ty) = (self.vars[i].name.clone(), self.vars[i].ty);
                let accumulate = ty.signed && self.rng.random_bool(0.5);
                let e = self.fit(ty, if accumulate { format!("{name} + {e}") } else { e });
                if !ty.signed && self.rng.random_bool(0.4) {
                    let op = ["+=", "^=", "-=", "|="][self.rng.random_range(0..4)];
                    self.line(indent, &format!("{name} {op} {e};"));
                } else {
                    self.line(indent, &format!("{name} = {e};"));
                }
            }
            4 | 5 if depth > 0 => {
                let c = self.cond(2);
                self.line(indent, &format!("if ({c}) {{"));
                let n = self.rng.random_range(1..3);
                self.stmts(indent + 1, n, depth - 1);
                if self.rng.random_bool(0.5) {
                    self.line(indent, "} else {");
                    let n = self.rng.random_range(1..3);
                    self.stmts(indent + 1, n, depth - 1);
                }
                self.line(indent, "}");
            }
            6 if depth > 0 => {
                let i = self.fresh("i");
                let n = self.rng.random_range(1..7);
                self.line(indent, &format!("for (int {i} = 0; {i} < {n}; {i}++) {{"));
                self.counters.push(i);
                let k = self.rng.random_range(1..3);
                self.stmts(indent + 1, k, depth - 1);
                self.counters.pop();
                self.line(indent, "}");
            }
            7 if depth > 0 => {
                let k = self.fresh("k");
                let n = self.rng.random_range(1..5);
                self.line(indent, &format!("int {k} = {n};"));
                self.line(indent, &format!("while ({k} > 0) {{"));
                self.counters.push(k.clone());
                self.stmt(indent + 1, depth - 1);
                self.counters.pop();
                self.line(indent + 1, &format!("{k}--;"));
                self.line(indent, "}");
            }
            _ => {
                let ty = self.ty();
                let name = self.fresh("v");
                let e = self.expr(3);
                let e = self.fit(ty, e);
                self.line(indent, &format!("{} {name} = {e};", ty.name));
                // declarations inside nested blocks go out of scope with them
                if indent == 1 {
                    self.vars.push(Var { name, ty, param: false });
                }
            }
        }
    }
}

/// The C text of function number `index` from generator stream `seed`. Its
/// name is `gen_<seed>_<index>`.
pub fn numeric_function(seed: u64, index: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        vars: vec![],
        counters: vec![],
        table: None,
        out: String::new(),
        next: 0,
    };
    let name = format!("gen_{seed}_{index}");
    if g.rng.random_bool(0.25) {
        let n = [2usize, 4, 8][g.rng.random_range(0..3)];
        let vals: Vec<String> = (0..n).map(|_| g.rng.random_range(0..200).to_string()).collect();
        let t = format!("tbl_{name}");
        g.out.push_str(&format!("static const int {t}[{n}] = {{{}}};\n\n", vals.join(", ")));
        g.table = Some((t, n));
    }
    let ret = g.ty();
    let params: Vec<(String, Ty)> = (0..g.rng.random_range(1..5)).map(|i| (format!("p{i}"), g.ty())).collect();
    let plist: Vec<String> = params.iter().map(|(n, t)| format!("{} {n}", t.name)).collect();
    g.out.push_str(&format!("{} {name}({}) {{\n", ret.name, plist.join(", ")));
    for (n, t) in params {
        g.vars.push(Var { name: n, ty: t, param: true });
    }
    for _ in 0..g.rng.random_range(1..3) {
        let ty = g.ty();
        let name = g.fresh("v");
        let e = g.expr(2);
        let e = g.fit(ty, e);
        g.line(1, &format!("{} {name} = {e};", ty.name));
        g.vars.push(Var { name, ty, param: false });
    }
    let n = g.rng.random_range(3..9);
    g.stmts(1, n, 2);
    let e = g.expr(3);
    let e = g.fit(ret, e);
    g.line(1, &format!("return {e};"));
    g.out.push_str("}\n");
    g.out
}

/// `count` functions from stream `seed`, as `(file name, text)` pairs.
pub fn numeric_corpus(seed: u64, count: u64) -> Vec<(String, String)> {
    (0..count).map(|i| (format!("gen_{seed}_{i}.c"), numeric_function(seed, i))).collect()
}

/// A stub response wrapping `code` the way a chat model would.
pub fn stub_response(code: &str) -> String {
    format!("Here is the rewritten function.\n\n```c\n{}```\n", code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(numeric_function(3, 7), numeric_function(3, 7));
        assert_ne!(numeric_function(3, 7), numeric_function(3, 8));
        assert!(numeric_function(3, 7).contains("gen_3_7("));
    }

    #[test]
    fn balanced_braces() {
        for i in 0..50 {
            let f = numeric_function(1, i);
            assert_eq!(f.matches('{').count(), f.matches('}').count(), "{f}");
        }
    }
}
