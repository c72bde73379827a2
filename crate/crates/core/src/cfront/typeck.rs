//! Name resolution and expression typing.

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::types::{IntType, TypeDesc};
use super::{builtin_typedef, ParseError};

type PResult<T> = Result<T, ParseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymKind {
    Global,
    Function,
    Param,
    Local,
    Library,
}

#[derive(Debug, Clone)]
pub struct Symbol {
    pub name: String,
    pub kind: SymKind,
    pub ty: TypeDesc,
    pub is_static: bool,
    pub has_init: bool,
    /// Declaring statement, for locals.
    pub decl_stmt: Option<NodeId>,
    /// Declared directly in a `switch` body, where a jump may skip the initializer.
    pub in_switch_body: bool,
    pub param_index: Option<usize>,
    /// Known value for library constants and constant-initialized scalar globals.
    pub const_value: Option<i128>,
}

#[derive(Debug, Clone, Default)]
pub struct RecordDef {
    pub fields: Vec<(String, TypeDesc)>,
    pub complete: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Semantics {
    pub symbols: Vec<Symbol>,
    /// Identifier and call expressions to the symbol they name.
    pub resolution: HashMap<NodeId, usize>,
    pub records: BTreeMap<String, RecordDef>,
    /// Symbols visible (innermost per name) at the start of each statement.
    pub visible: HashMap<NodeId, Vec<usize>>,
    pub file_typedefs: Vec<String>,
    pub file_tags: Vec<String>,
    pub function_symbol: usize,
}

impl Semantics {
    pub fn symbol_of(&self, e: &Expr) -> Option<&Symbol> {
        self.resolution.get(&e.id).map(|&i| &self.symbols[i])
    }

    pub fn size_of(&self, t: &TypeDesc) -> Option<u64> {
        Some(layout(&self.records, t)?.0)
    }
}

const LIB_FUNCS: &[&str] = &["malloc", "realloc", "free", "memset", "memcpy", "abs"];

fn lib_constant(name: &str) -> Option<(IntType, i128)> {
    use IntType as T;
    let v = |t: T, max: bool| (t, if max { t.max() } else { t.min() });
    Some(match name {
        "INT8_MIN" => v(T::I8, false),
        "INT8_MAX" => v(T::I8, true),
        "INT16_MIN" => v(T::I16, false),
        "INT16_MAX" => v(T::I16, true),
        "INT32_MIN" | "INT_MIN" => v(T::I32, false),
        "INT32_MAX" | "INT_MAX" => v(T::I32, true),
        "INT64_MIN" | "LONG_MIN" | "LLONG_MIN" => v(T::I64, false),
        "INT64_MAX" | "LONG_MAX" | "LLONG_MAX" => v(T::I64, true),
        "UINT8_MAX" | "UCHAR_MAX" => (T::I32, 255),
        "UINT16_MAX" | "USHRT_MAX" => (T::I32, 65535),
        "UINT32_MAX" | "UINT_MAX" => v(T::U32, true),
        "UINT64_MAX" | "ULONG_MAX" | "ULLONG_MAX" | "SIZE_MAX" => v(T::U64, true),
        "CHAR_BIT" => (T::I32, 8),
        "SCHAR_MIN" | "CHAR_MIN" => (T::I32, -128),
        "SCHAR_MAX" | "CHAR_MAX" => (T::I32, 127),
        "SHRT_MIN" => (T::I32, -32768),
        "SHRT_MAX" => (T::I32, 32767),
        _ => return None,
    })
}

fn lib_func_type(name: &str) -> TypeDesc {
    match name {
        "abs" => TypeDesc::int(IntType::I32),
        "free" => TypeDesc::Void,
        _ => TypeDesc::pointer(TypeDesc::Void),
    }
}

pub fn builtin_type(b: Builtin) -> TypeDesc {
    use Builtin::*;
    match b {
        Void => TypeDesc::Void,
        Char | SChar => TypeDesc::int(IntType::I8),
        UChar => TypeDesc::int(IntType::U8),
        Short => TypeDesc::int(IntType::I16),
        UShort => TypeDesc::int(IntType::U16),
        Int => TypeDesc::int(IntType::I32),
        UInt => TypeDesc::int(IntType::U32),
        Long | LongLong => TypeDesc::int(IntType::I64),
        ULong | ULongLong => TypeDesc::int(IntType::U64),
        Float => TypeDesc::Float32,
        Double => TypeDesc::Float64,
    }
}

/// (size, align) under LP64.
fn layout(records: &BTreeMap<String, RecordDef>, t: &TypeDesc) -> Option<(u64, u64)> {
    Some(match t {
        TypeDesc::Int { int } => (int.bits as u64 / 8, int.bits as u64 / 8),
        TypeDesc::Float32 => (4, 4),
        TypeDesc::Float64 => (8, 8),
        TypeDesc::Void => return None,
        TypeDesc::Pointer { .. } => (8, 8),
        TypeDesc::Array { elem, len } => {
            let (s, a) = layout(records, elem)?;
            (s * len, a)
        }
        TypeDesc::Record { tag } => {
            let r = records.get(tag)?;
            if !r.complete {
                return None;
            }
            let (mut size, mut align) = (0u64, 1u64);
            for (_, ft) in &r.fields {
                let (s, a) = layout(records, ft)?;
                size = size.div_ceil(a) * a + s;
                align = align.max(a);
            }
            (size.div_ceil(align) * align, align)
        }
    })
}

/// Type of an integer literal under C's literal typing rules for LP64.
pub fn int_literal_type(text: &str, value: u128) -> Option<IntType> {
    let lower = text.to_ascii_lowercase();
    let unsigned = lower.contains('u');
    let long = lower.contains('l');
    let decimal = !(lower.starts_with('0') && lower.len() > 1);
    let cands: &[IntType] = match (unsigned, long, decimal) {
        (false, false, true) => &[IntType::I32, IntType::I64],
        (false, false, false) => &[IntType::I32, IntType::U32, IntType::I64, IntType::U64],
        (true, false, _) => &[IntType::U32, IntType::U64],
        (false, true, true) => &[IntType::I64],
        (false, true, false) => &[IntType::I64, IntType::U64],
        (true, true, _) => &[IntType::U64],
    };
    cands.iter().copied().find(|t| t.contains(value as i128))
}

#[derive(Default)]
struct Scope {
    vars: HashMap<String, usize>,
    typedefs: HashMap<String, TypeDesc>,
    tags: HashMap<String, String>,
}

pub struct Checker {
    sema: Semantics,
    scopes: Vec<Scope>,
    anon: u32,
    ret_ty: TypeDesc,
}

fn syntax<T>(line: u32, message: impl Into<String>) -> PResult<T> {
    Err(ParseError::Syntax { line, message: message.into() })
}

impl Checker {
    pub fn check(preamble: &mut [PreambleItem], f: &mut FunctionDef) -> PResult<Semantics> {
        let mut ck = Checker {
            sema: Semantics::default(),
            scopes: vec![Scope::default()],
            anon: 0,
            ret_ty: TypeDesc::Void,
        };
        for item in preamble.iter_mut() {
            if let PreambleItem::Decl(d) = item {
                ck.declaration(d, f.span.line, None, false, true)?;
            }
        }
        let file = &ck.scopes[0];
        ck.sema.file_typedefs = file.typedefs.keys().cloned().collect();
        ck.sema.file_typedefs.sort();
        ck.sema.file_tags = file.tags.keys().cloned().collect();
        ck.sema.file_tags.sort();
        ck.function(f)?;
        Ok(ck.sema)
    }

    fn add_symbol(&mut self, sym: Symbol, line: u32) -> PResult<usize> {
        let scope = self.scopes.last_mut().unwrap();
        if scope.vars.contains_key(&sym.name) && self.scopes.len() > 1 {
            return syntax(line, format!("redefinition of `{}`", sym.name));
        }
        let id = self.sema.symbols.len();
        self.scopes.last_mut().unwrap().vars.insert(sym.name.clone(), id);
        self.sema.symbols.push(sym);
        Ok(id)
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes.iter().rev().find_map(|s| s.vars.get(name).copied())
    }

    fn lookup_typedef(&self, name: &str) -> Option<TypeDesc> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.typedefs.get(name).cloned())
            .or_else(|| builtin_typedef(name).map(TypeDesc::int))
    }

    fn visible_now(&self) -> Vec<usize> {
        let mut names: HashMap<&str, usize> = HashMap::new();
        for s in &self.scopes {
            for (n, &id) in &s.vars {
                names.insert(n, id);
            }
        }
        let mut v: Vec<usize> = names.into_values().collect();
        v.sort_unstable();
        v
    }

    fn function(&mut self, f: &mut FunctionDef) -> PResult<()> {
        let line = f.span.line;
        let mut ret = self.base_type(&f.spec, line)?;
        for _ in &f.ret_pointers {
            ret = TypeDesc::pointer(ret);
        }
        if matches!(ret, TypeDesc::Array { .. }) {
            return syntax(line, "function returning array");
        }
        if f.spec.storage.is_some_and(|s| s != Storage::Static) {
            return syntax(line, "invalid storage class for function");
        }
        f.ret_ty = ret.clone();
        self.ret_ty = ret.clone();
        self.sema.function_symbol = self.add_symbol(
            Symbol {
                name: f.name.clone(),
                kind: SymKind::Function,
                ty: ret,
                is_static: f.spec.storage == Some(Storage::Static),
                has_init: true,
                decl_stmt: None,
                in_switch_body: false,
                param_index: None,
                const_value: None,
            },
            line,
        )?;
        self.scopes.push(Scope::default());
        let mut tys = Vec::new();
        for (i, p) in f.params.iter_mut().enumerate() {
            if p.spec.storage.is_some_and(|s| s != Storage::Register) {
                return syntax(line, "invalid storage class for parameter");
            }
            let mut t = self.full_type(&p.spec, &mut p.decl, line)?;
            if let TypeDesc::Array { elem, .. } = t {
                t = TypeDesc::Pointer { elem };
            }
            if t == TypeDesc::Void {
                return syntax(line, "parameter of type void");
            }
            tys.push(t.clone());
            self.add_symbol(
                Symbol {
                    name: p.decl.name.clone(),
                    kind: SymKind::Param,
                    ty: t,
                    is_static: false,
                    has_init: true,
                    decl_stmt: None,
                    in_switch_body: false,
                    param_index: Some(i),
                    const_value: None,
                },
                line,
            )?;
        }
        f.param_tys = tys;
        // the body shares the parameter scope
        for s in &mut f.body.items {
            self.stmt(s, false)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn base_type(&mut self, spec: &DeclSpec, line: u32) -> PResult<TypeDesc> {
        match &spec.base {
            BaseType::Builtin(b) => Ok(builtin_type(*b)),
            BaseType::Named(n) => match self.lookup_typedef(n) {
                Some(t) => Ok(t),
                None => syntax(line, format!("unknown type name `{n}`")),
            },
            BaseType::Struct { tag, fields } => self.struct_type(tag.as_deref(), fields.as_ref(), line),
        }
    }

    fn struct_type(
        &mut self,
        tag: Option<&str>,
        fields: Option<&Vec<FieldDecl>>,
        line: u32,
    ) -> PResult<TypeDesc> {
        let Some(fields) = fields else {
            let tag = tag.unwrap();
            if let Some(key) = self.scopes.iter().rev().find_map(|s| s.tags.get(tag)) {
                return Ok(TypeDesc::Record { tag: key.clone() });
            }
            // forward reference: usable only through pointers until completed
            let key = self.fresh_key(tag);
            self.scopes.last_mut().unwrap().tags.insert(tag.to_string(), key.clone());
            self.sema.records.insert(key.clone(), RecordDef::default());
            return Ok(TypeDesc::Record { tag: key });
        };
        let key = match tag {
            Some(t) => {
                let local = self.scopes.last().unwrap().tags.get(t).cloned();
                match local {
                    Some(k) if !self.sema.records[&k].complete => k,
                    Some(_) => return syntax(line, format!("redefinition of `struct {t}`")),
                    None => {
                        if self.scopes.len() > 1 && self.scopes[0].tags.contains_key(t) {
                            return Err(ParseError::Unsupported {
                                construct: format!("local struct shadowing file-scope `struct {t}`"),
                                line,
                            });
                        }
                        let k = self.fresh_key(t);
                        self.scopes.last_mut().unwrap().tags.insert(t.to_string(), k.clone());
                        k
                    }
                }
            }
            None => {
                self.anon += 1;
                format!("__anon{}", self.anon)
            }
        };
        self.sema.records.insert(key.clone(), RecordDef::default());
        let mut out = Vec::new();
        for f in fields {
            for d in &f.declarators {
                let mut d = d.clone();
                let t = self.full_type(&f.spec, &mut d, line)?;
                if layout(&self.sema.records, &t).is_none() {
                    return syntax(line, format!("field `{}` has incomplete type", d.name));
                }
                if out.iter().any(|(n, _)| n == &d.name) {
                    return syntax(line, format!("duplicate member `{}`", d.name));
                }
                out.push((d.name.clone(), t));
            }
        }
        self.sema.records.insert(key.clone(), RecordDef { fields: out, complete: true });
        Ok(TypeDesc::Record { tag: key })
    }

    fn fresh_key(&self, tag: &str) -> String {
        if !self.sema.records.contains_key(tag) {
            return tag.to_string();
        }
        (2..).map(|n| format!("{tag}#{n}")).find(|k| !self.sema.records.contains_key(k)).unwrap()
    }

    fn full_type(&mut self, spec: &DeclSpec, d: &mut Declarator, line: u32) -> PResult<TypeDesc> {
        let base = self.base_type(spec, line)?;
        self.apply_declarator(base, d, None, line)
    }

    /// Wrap `base` in the declarator's pointers and array dimensions; `init_len`
    /// sizes a leading `[]` from an initializer.
    fn apply_declarator(
        &mut self,
        base: TypeDesc,
        d: &mut Declarator,
        init_len: Option<u64>,
        line: u32,
    ) -> PResult<TypeDesc> {
        let mut t = base;
        for _ in &d.pointers {
            t = TypeDesc::pointer(t);
        }
        let mut lens = Vec::new();
        for (i, dim) in d.dims.iter_mut().enumerate() {
            match dim {
                // parameters adjust `[]` to a pointer, the length is irrelevant
                None if i == 0 => lens.push(init_len.unwrap_or(1)),
                None => return syntax(line, "array has incomplete element type"),
                Some(e) => {
                    self.expr(e)?;
                    let Some(n) = self.const_eval(e) else {
                        return Err(ParseError::Unsupported {
                            construct: "variable-length array".into(),
                            line: e.span.line,
                        });
                    };
                    if n <= 0 {
                        return syntax(line, "array size must be positive");
                    }
                    lens.push(n as u64);
                }
            }
        }
        for len in lens.into_iter().rev() {
            t = TypeDesc::Array { elem: Box::new(t), len };
        }
        Ok(t)
    }

    fn declaration(
        &mut self,
        d: &mut Declaration,
        line: u32,
        stmt: Option<NodeId>,
        in_switch: bool,
        file_scope: bool,
    ) -> PResult<()> {
        // resolving the base also defines any record written in the specifier
        let base = self.base_type(&d.spec, line)?;
        if d.items.is_empty() {
            return Ok(());
        }
        if d.spec.storage == Some(Storage::Extern) {
            return Err(ParseError::Unsupported { construct: "extern declaration".into(), line });
        }
        let is_typedef = d.spec.storage == Some(Storage::Typedef);
        let is_static = d.spec.storage == Some(Storage::Static);
        for item in &mut d.items {
            let init_len = match &item.init {
                Some(Initializer::List(items)) => Some(items.len().max(1) as u64),
                Some(Initializer::Expr(e)) if matches!(e.kind, ExprKind::StrLit(_)) => {
                    Some(string_len(e) + 1)
                }
                _ => None,
            };
            let t = self.apply_declarator(base.clone(), &mut item.decl, init_len, line)?;
            if is_typedef {
                if self.scopes.len() > 1 && self.scopes[0].typedefs.contains_key(&item.decl.name) {
                    return Err(ParseError::Unsupported {
                        construct: format!("local typedef shadowing `{}`", item.decl.name),
                        line,
                    });
                }
                self.scopes.last_mut().unwrap().typedefs.insert(item.decl.name.clone(), t);
                continue;
            }
            if t == TypeDesc::Void {
                return syntax(line, format!("variable `{}` declared void", item.decl.name));
            }
            if layout(&self.sema.records, &t).is_none() {
                return syntax(line, format!("`{}` has incomplete type", item.decl.name));
            }
            let id = self.add_symbol(
                Symbol {
                    name: item.decl.name.clone(),
                    kind: if file_scope { SymKind::Global } else { SymKind::Local },
                    ty: t.clone(),
                    is_static,
                    has_init: item.init.is_some(),
                    decl_stmt: stmt,
                    in_switch_body: in_switch,
                    param_index: None,
                    const_value: None,
                },
                line,
            )?;
            if let Some(init) = &mut item.init {
                self.initializer(init)?;
                if let (Initializer::Expr(e), Some(it)) = (&*init, t.as_int()) {
                    if file_scope || is_static {
                        self.sema.symbols[id].const_value = self.const_eval(e).map(|v| it.wrap(v));
                    }
                }
            } else if file_scope && t.as_int().is_some() {
                self.sema.symbols[id].const_value = Some(0);
            }
        }
        Ok(())
    }

    fn initializer(&mut self, i: &mut Initializer) -> PResult<()> {
        match i {
            Initializer::Expr(e) => self.expr(e),
            Initializer::List(items) => items.iter_mut().try_for_each(|i| self.initializer(i)),
        }
    }

    fn stmt(&mut self, s: &mut Stmt, in_switch: bool) -> PResult<()> {
        self.sema.visible.insert(s.id, self.visible_now());
        let line = s.span.line;
        let id = s.id;
        match &mut s.kind {
            StmtKind::Compound(b) => {
                self.scopes.push(Scope::default());
                for s in &mut b.items {
                    self.stmt(s, false)?;
                }
                self.scopes.pop();
            }
            StmtKind::Decl(d) => self.declaration(d, line, Some(id), in_switch, false)?,
            StmtKind::Expr(e) => self.expr(e)?,
            StmtKind::Empty | StmtKind::Break | StmtKind::Continue | StmtKind::Default => {}
            StmtKind::If { cond, then, els } => {
                self.scalar_cond(cond)?;
                self.sub_stmt(then)?;
                if let Some(e) = els {
                    self.sub_stmt(e)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.scalar_cond(cond)?;
                self.sub_stmt(body)?;
            }
            StmtKind::DoWhile { body, cond } => {
                self.sub_stmt(body)?;
                self.scalar_cond(cond)?;
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(Scope::default());
                match init {
                    ForInit::None => {}
                    ForInit::Expr(e) => self.expr(e)?,
                    ForInit::Decl(d) => self.declaration(d, line, Some(id), false, false)?,
                }
                if let Some(c) = cond {
                    self.scalar_cond(c)?;
                }
                if let Some(st) = step {
                    self.expr(st)?;
                }
                self.sub_stmt(body)?;
                self.scopes.pop();
            }
            StmtKind::Switch { cond, body } => {
                self.expr(cond)?;
                if cond.ty.as_int().is_none() {
                    return syntax(line, "switch quantity is not an integer");
                }
                match &mut body.kind {
                    StmtKind::Compound(b) => {
                        self.sema.visible.insert(body.id, self.visible_now());
                        self.scopes.push(Scope::default());
                        for s in &mut b.items {
                            self.stmt(s, true)?;
                        }
                        self.scopes.pop();
                    }
                    _ => self.sub_stmt(body)?,
                }
            }
            StmtKind::Case(e) => {
                self.expr(e)?;
                if self.const_eval(e).is_none() {
                    return syntax(line, "case label is not an integer constant");
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e)?;
                    if self.ret_ty == TypeDesc::Void {
                        return syntax(line, "return with a value in void function");
                    }
                }
            }
        }
        Ok(())
    }

    /// A statement in a nested position gets its own scope.
    fn sub_stmt(&mut self, s: &mut Stmt) -> PResult<()> {
        self.scopes.push(Scope::default());
        let r = self.stmt(s, false);
        self.scopes.pop();
        r
    }

    fn scalar_cond(&mut self, e: &mut Expr) -> PResult<()> {
        self.expr(e)?;
        if !e.ty.decay().is_scalar() {
            return syntax(e.span.line, "used non-scalar value where a condition is required");
        }
        Ok(())
    }

    fn expr(&mut self, e: &mut Expr) -> PResult<()> {
        use ExprKind::*;
        let line = e.span.line;
        let ty = match &mut e.kind {
            Ident(name) => {
                if let Some(id) = self.lookup(name) {
                    self.sema.resolution.insert(e.id, id);
                    let sym = &self.sema.symbols[id];
                    if sym.kind == SymKind::Function {
                        return Err(ParseError::Unsupported {
                            construct: "function designator used as value".into(),
                            line,
                        });
                    }
                    sym.ty.clone()
                } else if let Some((t, v)) = lib_constant(name) {
                    let id = self.library_symbol(name, TypeDesc::int(t), Some(v));
                    self.sema.resolution.insert(e.id, id);
                    TypeDesc::int(t)
                } else if name == "NULL" {
                    let id = self.library_symbol(name, TypeDesc::pointer(TypeDesc::Void), Some(0));
                    self.sema.resolution.insert(e.id, id);
                    TypeDesc::pointer(TypeDesc::Void)
                } else {
                    return syntax(line, format!("use of undeclared identifier `{name}`"));
                }
            }
            IntLit { text, value } => match int_literal_type(text, *value) {
                Some(t) => TypeDesc::int(t),
                None => return syntax(line, format!("integer literal `{text}` is too large")),
            },
            FloatLit(t) => {
                let l = t.to_ascii_lowercase();
                if l.ends_with('l') {
                    return Err(ParseError::Unsupported { construct: "long double".into(), line });
                }
                if l.ends_with('f') && !l.starts_with("0x") || l.starts_with("0x") && l.ends_with('f') {
                    TypeDesc::Float32
                } else {
                    TypeDesc::Float64
                }
            }
            CharLit { .. } => TypeDesc::int(IntType::I32),
            StrLit(_) => TypeDesc::Array { elem: Box::new(TypeDesc::int(IntType::I8)), len: string_len(e) + 1 },
            Paren(x) => {
                self.expr(x)?;
                x.ty.clone()
            }
            Unary { op, operand } => {
                self.expr(operand)?;
                let t = operand.ty.decay();
                match op {
                    UnaryOp::Plus | UnaryOp::Neg => match t.as_int() {
                        Some(i) => TypeDesc::int(i.promote()),
                        None if t.is_float() => t,
                        None => return syntax(line, "wrong type argument to unary operator"),
                    },
                    UnaryOp::BitNot => match t.as_int() {
                        Some(i) => TypeDesc::int(i.promote()),
                        None => return syntax(line, "wrong type argument to bit-complement"),
                    },
                    UnaryOp::Not => {
                        if !t.is_scalar() {
                            return syntax(line, "wrong type argument to unary exclamation mark");
                        }
                        TypeDesc::int(IntType::I32)
                    }
                    UnaryOp::Deref => match t {
                        TypeDesc::Pointer { elem } if *elem != TypeDesc::Void => *elem,
                        _ => return syntax(line, "invalid type argument of unary `*`"),
                    },
                    UnaryOp::AddrOf => TypeDesc::pointer(operand.ty.clone()),
                    UnaryOp::PreInc | UnaryOp::PreDec => {
                        if !operand.ty.is_scalar() {
                            return syntax(line, "wrong type argument to increment");
                        }
                        operand.ty.clone()
                    }
                }
            }
            PostInc(x) | PostDec(x) => {
                self.expr(x)?;
                if !x.ty.is_scalar() {
                    return syntax(line, "wrong type argument to increment");
                }
                x.ty.clone()
            }
            Binary { op, lhs, rhs } => {
                self.expr(lhs)?;
                self.expr(rhs)?;
                binary_type(*op, &lhs.ty.decay(), &rhs.ty.decay())
                    .ok_or_else(|| ParseError::Syntax {
                        line,
                        message: format!("invalid operands to binary `{}`", op.as_str()),
                    })?
            }
            Assign { op, lhs, rhs } => {
                self.expr(lhs)?;
                self.expr(rhs)?;
                if matches!(lhs.ty, TypeDesc::Array { .. }) {
                    return syntax(line, "assignment to expression with array type");
                }
                if let Some(op) = op {
                    if binary_type(*op, &lhs.ty, &rhs.ty.decay()).is_none() {
                        return syntax(line, format!("invalid operands to `{}=`", op.as_str()));
                    }
                }
                lhs.ty.clone()
            }
            Cond { cond, then, els } => {
                self.expr(cond)?;
                self.expr(then)?;
                self.expr(els)?;
                let (a, b) = (then.ty.decay(), els.ty.decay());
                match (a.as_int(), b.as_int()) {
                    (Some(x), Some(y)) => TypeDesc::int(IntType::usual_conversion(x, y)),
                    _ if a.is_arith() && b.is_arith() => float_result(&a, &b),
                    _ => a,
                }
            }
            Call { callee, args } => {
                for a in args.iter_mut() {
                    self.expr(a)?;
                }
                match self.lookup(callee) {
                    Some(id) if self.sema.symbols[id].kind == SymKind::Function => {
                        self.sema.resolution.insert(e.id, id);
                        self.sema.symbols[id].ty.clone()
                    }
                    Some(_) => return syntax(line, format!("called object `{callee}` is not a function")),
                    None if LIB_FUNCS.contains(&callee.as_str()) => {
                        let t = lib_func_type(callee);
                        let id = self.library_symbol(callee, t.clone(), None);
                        self.sema.resolution.insert(e.id, id);
                        t
                    }
                    None => return syntax(line, format!("call to undeclared function `{callee}`")),
                }
            }
            Index { base, index } => {
                self.expr(base)?;
                self.expr(index)?;
                let (b, i) = (base.ty.decay(), index.ty.decay());
                let elem = match (&b, &i) {
                    (TypeDesc::Pointer { elem }, t) if t.as_int().is_some() => elem.as_ref().clone(),
                    (t, TypeDesc::Pointer { elem }) if t.as_int().is_some() => elem.as_ref().clone(),
                    _ => return syntax(line, "subscripted value is neither array nor pointer"),
                };
                if elem == TypeDesc::Void {
                    return syntax(line, "dereferencing void pointer");
                }
                elem
            }
            Member { base, field, arrow } => {
                self.expr(base)?;
                let rec = match (&base.ty, *arrow) {
                    (TypeDesc::Record { tag }, false) => tag.clone(),
                    (TypeDesc::Pointer { elem }, true) => match elem.as_ref() {
                        TypeDesc::Record { tag } => tag.clone(),
                        _ => return syntax(line, "invalid type argument of `->`"),
                    },
                    _ => return syntax(line, format!("request for member `{field}` in non-struct")),
                };
                let Some(def) = self.sema.records.get(&rec).filter(|r| r.complete) else {
                    return syntax(line, "dereferencing pointer to incomplete type");
                };
                match def.fields.iter().find(|(n, _)| n == field) {
                    Some((_, t)) => t.clone(),
                    None => return syntax(line, format!("no member named `{field}`")),
                }
            }
            Cast { to, expr: x } => {
                self.expr(x)?;
                let t = self.type_name(to, line)?;
                if !(t == TypeDesc::Void || t.is_scalar() && x.ty.decay().is_scalar()) {
                    return syntax(line, "invalid cast");
                }
                t
            }
            SizeofExpr(x) => {
                self.expr(x)?;
                TypeDesc::int(IntType::U64)
            }
            SizeofType(tn) => {
                self.type_name(tn, line)?;
                TypeDesc::int(IntType::U64)
            }
        };
        e.ty = ty;
        Ok(())
    }

    fn library_symbol(&mut self, name: &str, ty: TypeDesc, const_value: Option<i128>) -> usize {
        if let Some(i) =
            self.sema.symbols.iter().position(|s| s.kind == SymKind::Library && s.name == name)
        {
            return i;
        }
        self.sema.symbols.push(Symbol {
            name: name.to_string(),
            kind: SymKind::Library,
            ty,
            is_static: false,
            has_init: true,
            decl_stmt: None,
            in_switch_body: false,
            param_index: None,
            const_value,
        });
        self.sema.symbols.len() - 1
    }

    pub fn type_name(&mut self, tn: &TypeName, line: u32) -> PResult<TypeDesc> {
        if let BaseType::Struct { fields: Some(_), .. } = tn.spec.base {
            return Err(ParseError::Unsupported { construct: "struct definition in type name".into(), line });
        }
        let mut t = self.base_type(&tn.spec, line)?;
        for _ in &tn.pointers {
            t = TypeDesc::pointer(t);
        }
        Ok(t)
    }

    /// Integer constant expression evaluation, with the types already assigned.
    fn const_eval(&self, e: &Expr) -> Option<i128> {
        use ExprKind::*;
        let v = match &e.kind {
            IntLit { value, .. } => *value as i128,
            CharLit { value, .. } => *value,
            Paren(x) => self.const_eval(x)?,
            Ident(_) => {
                let sym = self.sema.symbol_of(e)?;
                if sym.kind != SymKind::Library {
                    return None;
                }
                sym.const_value?
            }
            Unary { op, operand } => {
                let v = self.const_eval(operand)?;
                match op {
                    UnaryOp::Plus => v,
                    UnaryOp::Neg => -v,
                    UnaryOp::BitNot => !v,
                    UnaryOp::Not => (v == 0) as i128,
                    _ => return None,
                }
            }
            Binary { op, lhs, rhs } => {
                let (a, b) = (self.const_eval(lhs)?, self.const_eval(rhs)?);
                use BinaryOp::*;
                match op {
                    Add => a + b,
                    Sub => a - b,
                    Mul => a.checked_mul(b)?,
                    Div => a.checked_div(b)?,
                    Rem => a.checked_rem(b)?,
                    Shl => a.checked_shl(u32::try_from(b).ok().filter(|&s| s < 64)?)?,
                    Shr => a >> u32::try_from(b).ok().filter(|&s| s < 64)?,
                    Lt => (a < b) as i128,
                    Gt => (a > b) as i128,
                    Le => (a <= b) as i128,
                    Ge => (a >= b) as i128,
                    Eq => (a == b) as i128,
                    Ne => (a != b) as i128,
                    BitAnd => a & b,
                    BitOr => a | b,
                    BitXor => a ^ b,
                    LogAnd => (a != 0 && b != 0) as i128,
                    LogOr => (a != 0 || b != 0) as i128,
                    Comma => return None,
                }
            }
            Cond { cond, then, els } => {
                if self.const_eval(cond)? != 0 {
                    self.const_eval(then)?
                } else {
                    self.const_eval(els)?
                }
            }
            Cast { expr, .. } => self.const_eval(expr)?,
            SizeofType(_) | SizeofExpr(_) => {
                let t = match &e.kind {
                    SizeofExpr(x) => x.ty.clone(),
                    SizeofType(tn) => {
                        let mut t = match &tn.spec.base {
                            BaseType::Builtin(b) => builtin_type(*b),
                            BaseType::Named(n) => self.lookup_typedef(n)?,
                            BaseType::Struct { tag: Some(t), .. } => TypeDesc::Record {
                                tag: self.scopes.iter().rev().find_map(|s| s.tags.get(t))?.clone(),
                            },
                            _ => return None,
                        };
                        for _ in &tn.pointers {
                            t = TypeDesc::pointer(t);
                        }
                        t
                    }
                    _ => unreachable!(),
                };
                self.sema.size_of(&t)? as i128
            }
            _ => return None,
        };
        e.ty.as_int().map(|t| t.wrap(v))
    }
}

fn string_len(e: &Expr) -> u64 {
    let ExprKind::StrLit(t) = &e.kind else { return 0 };
    let inner = &t[1..t.len() - 1];
    let mut n = 0;
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('x') => {
                    while chars.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                        chars.next();
                    }
                }
                Some(d) if d.is_digit(8) => {
                    for _ in 0..2 {
                        if chars.peek().is_some_and(|c| c.is_digit(8)) {
                            chars.next();
                        }
                    }
                }
                _ => {}
            }
        }
        n += 1;
    }
    n
}

fn float_result(a: &TypeDesc, b: &TypeDesc) -> TypeDesc {
    if *a == TypeDesc::Float64 || *b == TypeDesc::Float64 {
        TypeDesc::Float64
    } else if a.is_float() || b.is_float() {
        TypeDesc::Float32
    } else {
        unreachable!()
    }
}

/// Result type of a binary operator over decayed operand types.
pub fn binary_type(op: BinaryOp, a: &TypeDesc, b: &TypeDesc) -> Option<TypeDesc> {
    use BinaryOp::*;
    let int = TypeDesc::int(IntType::I32);
    match op {
        Comma => Some(b.clone()),
        LogAnd | LogOr => (a.is_scalar() && b.is_scalar()).then_some(int),
        Lt | Gt | Le | Ge | Eq | Ne => {
            let ok = (a.is_arith() && b.is_arith())
                || matches!((a, b), (TypeDesc::Pointer { .. }, TypeDesc::Pointer { .. }))
                || (matches!(a, TypeDesc::Pointer { .. }) && b.as_int().is_some())
                || (matches!(b, TypeDesc::Pointer { .. }) && a.as_int().is_some());
            ok.then_some(int)
        }
        Shl | Shr => {
            b.as_int()?;
            Some(TypeDesc::int(a.as_int()?.promote()))
        }
        Rem | BitAnd | BitOr | BitXor => {
            Some(TypeDesc::int(IntType::usual_conversion(a.as_int()?, b.as_int()?)))
        }
        Mul | Div => match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Some(TypeDesc::int(IntType::usual_conversion(x, y))),
            _ if a.is_arith() && b.is_arith() => Some(float_result(a, b)),
            _ => None,
        },
        Add | Sub => match (a, b) {
            _ if a.as_int().is_some() && b.as_int().is_some() => Some(TypeDesc::int(
                IntType::usual_conversion(a.as_int().unwrap(), b.as_int().unwrap()),
            )),
            _ if a.is_arith() && b.is_arith() => Some(float_result(a, b)),
            (TypeDesc::Pointer { .. }, t) if t.as_int().is_some() => Some(a.clone()),
            (t, TypeDesc::Pointer { .. }) if t.as_int().is_some() && op == Add => Some(b.clone()),
            (TypeDesc::Pointer { .. }, TypeDesc::Pointer { .. }) if op == Sub => {
                Some(TypeDesc::int(IntType::I64))
            }
            _ => None,
        },
    }
}
