use serde::{Deserialize, Serialize};

use super::types::TypeDesc;

pub type NodeId = u32;

/// Byte range into the unit's canonical text plus the 1-based line of `start`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Plus,
    Neg,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
}

impl UnaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaryOp::Plus => "+",
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
            UnaryOp::PreInc => "++",
            UnaryOp::PreDec => "--",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Mul,
    Div,
    Rem,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    LogAnd,
    LogOr,
    Comma,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Mul => "*",
            Div => "/",
            Rem => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitXor => "^",
            BitOr => "|",
            LogAnd => "&&",
            LogOr => "||",
            Comma => ",",
        }
    }

    /// Binding power; larger binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Comma => 1,
            LogOr => 4,
            LogAnd => 5,
            BitOr => 6,
            BitXor => 7,
            BitAnd => 8,
            Eq | Ne => 9,
            Lt | Gt | Le | Ge => 10,
            Shl | Shr => 11,
            Add | Sub => 12,
            Mul | Div | Rem => 13,
        }
    }

    pub fn from_punct(s: &str) -> Option<BinaryOp> {
        use BinaryOp::*;
        Some(match s {
            "*" => Mul,
            "/" => Div,
            "%" => Rem,
            "+" => Add,
            "-" => Sub,
            "<<" => Shl,
            ">>" => Shr,
            "<" => Lt,
            ">" => Gt,
            "<=" => Le,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "&" => BitAnd,
            "^" => BitXor,
            "|" => BitOr,
            "&&" => LogAnd,
            "||" => LogOr,
            _ => return None,
        })
    }

    pub fn is_comparison(self) -> bool {
        use BinaryOp::*;
        matches!(self, Lt | Gt | Le | Ge | Eq | Ne)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
    pub span: SourceSpan,
    pub ty: TypeDesc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    IntLit { text: String, value: u128 },
    FloatLit(String),
    CharLit { text: String, value: i128 },
    StrLit(String),
    Paren(Box<Expr>),
    Unary { op: UnaryOp, operand: Box<Expr> },
    PostInc(Box<Expr>),
    PostDec(Box<Expr>),
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    /// `lhs = rhs` when `op` is `None`, otherwise the compound form `lhs op= rhs`.
    Assign { op: Option<BinaryOp>, lhs: Box<Expr>, rhs: Box<Expr> },
    Cond { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Call { callee: String, args: Vec<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
    Member { base: Box<Expr>, field: String, arrow: bool },
    Cast { to: TypeName, expr: Box<Expr> },
    SizeofExpr(Box<Expr>),
    SizeofType(TypeName),
}

impl Expr {
    /// Variables, array accesses, pointer dereferences and field accesses.
    pub fn is_basic(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Ident(_)
                | ExprKind::Index { .. }
                | ExprKind::Member { .. }
                | ExprKind::Unary { op: UnaryOp::Deref, .. }
        )
    }

    /// Strip any number of enclosing parentheses.
    pub fn unparen(&self) -> &Expr {
        match &self.kind {
            ExprKind::Paren(e) => e.unparen(),
            _ => self,
        }
    }

    /// Direct children in evaluation-agnostic source order.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Ident(_) | IntLit { .. } | FloatLit(_) | CharLit { .. } | StrLit(_) | SizeofType(_) => {
                vec![]
            }
            Paren(e) | Unary { operand: e, .. } | PostInc(e) | PostDec(e) | SizeofExpr(e) => {
                vec![e]
            }
            Cast { expr, .. } => vec![expr],
            Binary { lhs, rhs, .. } | Assign { lhs, rhs, .. } => vec![lhs, rhs],
            Cond { cond, then, els } => vec![cond, then, els],
            Call { args, .. } => args.iter().collect(),
            Index { base, index } => vec![base, index],
            Member { base, .. } => vec![base],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        use ExprKind::*;
        match &mut self.kind {
            Ident(_) | IntLit { .. } | FloatLit(_) | CharLit { .. } | StrLit(_) | SizeofType(_) => {
                vec![]
            }
            Paren(e) | Unary { operand: e, .. } | PostInc(e) | PostDec(e) | SizeofExpr(e) => {
                vec![e]
            }
            Cast { expr, .. } => vec![expr],
            Binary { lhs, rhs, .. } | Assign { lhs, rhs, .. } => vec![lhs, rhs],
            Cond { cond, then, els } => vec![cond, then, els],
            Call { args, .. } => args.iter_mut().collect(),
            Index { base, index } => vec![base, index],
            Member { base, .. } => vec![base],
        }
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qualifier {
    Const,
    Volatile,
}

impl Qualifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Qualifier::Const => "const",
            Qualifier::Volatile => "volatile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Static,
    Extern,
    Typedef,
    Register,
}

impl Storage {
    pub fn as_str(self) -> &'static str {
        match self {
            Storage::Static => "static",
            Storage::Extern => "extern",
            Storage::Typedef => "typedef",
            Storage::Register => "register",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Void,
    Char,
    SChar,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Long,
    ULong,
    LongLong,
    ULongLong,
    Float,
    Double,
}

impl Builtin {
    pub fn as_str(self) -> &'static str {
        use Builtin::*;
        match self {
            Void => "void",
            Char => "char",
            SChar => "signed char",
            UChar => "unsigned char",
            Short => "short",
            UShort => "unsigned short",
            Int => "int",
            UInt => "unsigned int",
            Long => "long",
            ULong => "unsigned long",
            LongLong => "long long",
            ULongLong => "unsigned long long",
            Float => "float",
            Double => "double",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseType {
    Builtin(Builtin),
    /// A typedef name, either from the unit or from an allowlisted header.
    Named(String),
    Struct { tag: Option<String>, fields: Option<Vec<FieldDecl>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclSpec {
    pub storage: Option<Storage>,
    pub inline: bool,
    pub quals: Vec<Qualifier>,
    pub base: BaseType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub spec: DeclSpec,
    pub declarators: Vec<Declarator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    /// One entry per `*`, holding the qualifiers written after it.
    pub pointers: Vec<Vec<Qualifier>>,
    /// Array dimensions, outermost first. `None` is `[]`.
    pub dims: Vec<Option<Expr>>,
    pub span: SourceSpan,
}

/// A type as written in a cast or `sizeof`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub spec: DeclSpec,
    pub pointers: Vec<Vec<Qualifier>>,
}

impl TypeName {
    /// `int32_t` and friends.
    pub fn int(t: super::types::IntType) -> TypeName {
        TypeName {
            spec: DeclSpec {
                storage: None,
                inline: false,
                quals: vec![],
                base: BaseType::Named(t.c_name().to_string()),
            },
            pointers: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Initializer>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitDeclarator {
    pub decl: Declarator,
    pub init: Option<Initializer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub spec: DeclSpec,
    pub items: Vec<InitDeclarator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Compound(Block),
    Decl(Declaration),
    Expr(Expr),
    Empty,
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: ForInit, cond: Option<Expr>, step: Option<Expr>, body: Box<Stmt> },
    Switch { cond: Expr, body: Box<Stmt> },
    Case(Expr),
    Default,
    Break,
    Continue,
    Return(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    None,
    Expr(Expr),
    Decl(Declaration),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub items: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub spec: DeclSpec,
    pub decl: Declarator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub spec: DeclSpec,
    pub ret_pointers: Vec<Vec<Qualifier>>,
    pub name: String,
    pub params: Vec<Param>,
    /// Written as `f(void)` rather than `f()`.
    pub void_params: bool,
    pub body: Block,
    pub span: SourceSpan,
    pub ret_ty: TypeDesc,
    pub param_tys: Vec<TypeDesc>,
    /// First id not used by any node in this function.
    pub next_id: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreambleItem {
    Include { header: String, system: bool },
    Decl(Declaration),
}

impl Stmt {
    /// Expressions held directly by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Expr(e) | StmtKind::Case(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::If { cond, .. }
            | StmtKind::While { cond, .. }
            | StmtKind::DoWhile { cond, .. }
            | StmtKind::Switch { cond, .. } => vec![cond],
            StmtKind::For { init, cond, step, .. } => {
                let mut v = vec![];
                if let ForInit::Expr(e) = init {
                    v.push(e);
                }
                v.extend(cond.iter());
                v.extend(step.iter());
                v
            }
            StmtKind::Decl(d) => d.init_exprs(),
            _ => vec![],
        }
    }

    /// Nested statements, in source order.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Compound(b) => b.items.iter().collect(),
            StmtKind::If { then, els, .. } => {
                let mut v = vec![then.as_ref()];
                v.extend(els.iter().map(|b| b.as_ref()));
                v
            }
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::Switch { body, .. } => vec![body],
            _ => vec![],
        }
    }

    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

impl Declaration {
    /// Every expression appearing in an initializer, in source order.
    pub fn init_exprs(&self) -> Vec<&Expr> {
        fn collect<'a>(init: &'a Initializer, out: &mut Vec<&'a Expr>) {
            match init {
                Initializer::Expr(e) => out.push(e),
                Initializer::List(items) => items.iter().for_each(|i| collect(i, out)),
            }
        }
        let mut out = vec![];
        for item in &self.items {
            if let Some(init) = &item.init {
                collect(init, &mut out);
            }
        }
        out
    }
}

impl Block {
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.items {
            s.visit(f);
        }
    }
}

/// Mutable pre-order walk over every expression in a statement tree, including
/// initializers and array dimensions.
pub fn walk_exprs_mut(stmt: &mut Stmt, f: &mut dyn FnMut(&mut Expr) -> bool) {
    fn expr(e: &mut Expr, f: &mut dyn FnMut(&mut Expr) -> bool) {
        if f(e) {
            for c in e.children_mut() {
                expr(c, f);
            }
        }
    }
    fn init(i: &mut Initializer, f: &mut dyn FnMut(&mut Expr) -> bool) {
        match i {
            Initializer::Expr(e) => expr(e, f),
            Initializer::List(items) => items.iter_mut().for_each(|i| init(i, f)),
        }
    }
    fn decl(d: &mut Declaration, f: &mut dyn FnMut(&mut Expr) -> bool) {
        for item in &mut d.items {
            if let Some(i) = &mut item.init {
                init(i, f);
            }
        }
    }
    match &mut stmt.kind {
        StmtKind::Compound(b) => b.items.iter_mut().for_each(|s| walk_exprs_mut(s, f)),
        StmtKind::Decl(d) => decl(d, f),
        StmtKind::Expr(e) | StmtKind::Case(e) => expr(e, f),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                expr(e, f)
            }
        }
        StmtKind::If { cond, then, els } => {
            expr(cond, f);
            walk_exprs_mut(then, f);
            if let Some(e) = els {
                walk_exprs_mut(e, f);
            }
        }
        StmtKind::While { cond, body } => {
            expr(cond, f);
            walk_exprs_mut(body, f);
        }
        StmtKind::DoWhile { body, cond } => {
            walk_exprs_mut(body, f);
            expr(cond, f);
        }
        StmtKind::For { init: fi, cond, step, body } => {
            match fi {
                ForInit::Expr(e) => expr(e, f),
                ForInit::Decl(d) => decl(d, f),
                ForInit::None => {}
            }
            if let Some(c) = cond {
                expr(c, f);
            }
            if let Some(s) = step {
                expr(s, f);
            }
            walk_exprs_mut(body, f);
        }
        StmtKind::Switch { cond, body } => {
            expr(cond, f);
            walk_exprs_mut(body, f);
        }
        StmtKind::Empty | StmtKind::Default | StmtKind::Break | StmtKind::Continue => {}
    }
}

/// Find the compound block that directly contains statement `target` and
/// apply `f` to it with the statement's index.
pub fn with_parent_block_mut<R>(
    block: &mut Block,
    target: NodeId,
    f: &mut dyn FnMut(&mut Block, usize) -> R,
) -> Option<R> {
    if let Some(pos) = block.items.iter().position(|s| s.id == target) {
        return Some(f(block, pos));
    }
    for s in &mut block.items {
        if let Some(r) = stmt_parent_block_mut(s, target, f) {
            return Some(r);
        }
    }
    None
}

fn stmt_parent_block_mut<R>(
    stmt: &mut Stmt,
    target: NodeId,
    f: &mut dyn FnMut(&mut Block, usize) -> R,
) -> Option<R> {
    match &mut stmt.kind {
        StmtKind::Compound(b) => with_parent_block_mut(b, target, f),
        StmtKind::If { then, els, .. } => stmt_parent_block_mut(then, target, f)
            .or_else(|| els.as_mut().and_then(|e| stmt_parent_block_mut(e, target, f))),
        StmtKind::While { body, .. }
        | StmtKind::DoWhile { body, .. }
        | StmtKind::For { body, .. }
        | StmtKind::Switch { body, .. } => stmt_parent_block_mut(body, target, f),
        _ => None,
    }
}
