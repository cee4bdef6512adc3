
use crate::binding::Slot;
use crate::params::ParameterSpec;

/// A dimension in a state declaration. `SetSize` resolves to the current
/// block's set size, `NActions` to the paradigm's response count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dim {
    Lit(usize),
    SetSize,
    NActions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateInit {
    Scalar(f64),
    Vector(Dim, f64),
    Matrix(Dim, Dim, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub init: StateInit,
}

/// A resolved variable reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarRef {
    Param(usize),
    State(usize),
    Local(usize),
    Binding(Slot),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub target: VarRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Exp,
    Log,
    Abs,
    Min,
    Max,
    Pow,
    Sum,
    Argmax,
    Softmax,
    Clamp,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Pow => "pow",
            Builtin::Sum => "sum",
            Builtin::Argmax => "argmax",
            Builtin::Softmax => "softmax",
            Builtin::Clamp => "clamp",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "exp" => Some(Builtin::Exp),
            "log" => Some(Builtin::Log),
            "abs" => Some(Builtin::Abs),
            "min" => Some(Builtin::Min),
            "max" => Some(Builtin::Max),
            "pow" => Some(Builtin::Pow),
            "sum" => Some(Builtin::Sum),
            "argmax" => Some(Builtin::Argmax),
            "softmax" => Some(Builtin::Softmax),
            "clamp" => Some(Builtin::Clamp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Ident),
    Index { base: Ident, indices: Vec<Expr> },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
    VecLit(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        target: Ident,
        indices: Vec<Expr>,
        op: AssignOp,
        value: Expr,
    },
    If {
        cond: Cond,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Choose {
        var: Ident,
        probs: Expr,
    },
}

/// A parsed, validated model program. Equality ignores the stored source
/// text so a program and its reprinted form compare equal.
#[derive(Debug, Clone)]
pub struct ModelProgram {
    pub params: ParameterSpec,
    pub reset_per_block: bool,
    pub state: Vec<StateDecl>,
    pub trial: Vec<Stmt>,
    pub n_locals: usize,
    /// Decision slots of the `choose` statements, in program order.
    pub choose_slots: Vec<Slot>,
    /// Every trial-binding slot the program reads or decides.
    pub used_slots: Vec<Slot>,
    pub source: String,
}

impl PartialEq for ModelProgram {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.reset_per_block == other.reset_per_block
            && self.state == other.state
            && self.trial == other.trial
            && self.n_locals == other.n_locals
            && self.choose_slots == other.choose_slots
            && self.used_slots == other.used_slots
    }
}
