//! Closed-form scalar fields `f: Rⁿ → R` (n = 2, 3).
//!
//! Expressions are parsed into a small syntax tree, then compiled to a flat
//! instruction tape. The same tape is evaluated over plain floats, over
//! second-order forward-mode jets ([`Jet2`]) and over intervals
//! ([`Interval`]), so the value, the exact gradient and Hessian, and a
//! conservative range bound all come from one code path.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)*
//! atom     := number | 'x' | 'y' | 'z' | ('exp' | 'sqrt') '(' expr ')' | '(' expr ')'
//! exponent := integer | '(' expr ')'      (must denote a non-negative integer constant)
//! ```
//!
//! `^` chains left to right, so `x^2^3` is `(x^2)^3`.

mod interval;
mod jet;
mod parse;
mod tape;

use std::fmt;

pub use interval::Interval;
pub use jet::Jet2;

use crate::Vec3;
use tape::Tape;

/// Syntax tree of a scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Variable index: 0 = x, 1 = y, 2 = z.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Reason an evaluation left the smooth domain of the expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    SqrtOfNegative,
    /// `sqrt` at zero has no derivative.
    SqrtAtZero,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::DivisionByZero => write!(f, "division by zero"),
            DomainKind::SqrtOfNegative => write!(f, "square root of a negative number"),
            DomainKind::SqrtAtZero => write!(f, "square root is not differentiable at zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a non-negative integer")]
    NonIntegerExponent { offset: usize },
    #[error("variable `{name}` is not available with arity {arity}")]
    ArityMismatch { name: String, arity: usize },
    #[error("unsupported arity {0}, expected 2 or 3")]
    UnsupportedArity(usize),
    #[error("{kind} in `{subexpr}`")]
    Domain { kind: DomainKind, subexpr: String },
}

pub const VARIABLE_NAMES: [&str; 3] = ["x", "y", "z"];

/// A parsed, immutable scalar field together with its compiled tape.
#[derive(Debug, Clone)]
pub struct ScalarField {
    ast: Expr,
    arity: usize,
    source: String,
    tape: Tape,
}

/// Parse `text` as a field of `arity` variables.
pub fn parse(text: &str, arity: usize) -> Result<ScalarField, ExprError> {
    if !(2..=3).contains(&arity) {
        return Err(ExprError::UnsupportedArity(arity));
    }
    let ast = parse::parse_expr(text, arity)?;
    Ok(ScalarField::from_ast(ast, arity, text.to_string()))
}

impl ScalarField {
    pub fn from_ast(ast: Expr, arity: usize, source: String) -> Self {
        let tape = Tape::compile(&ast);
        ScalarField { ast, arity, source, tape }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source_text(&self) -> &str {
        &self.source
    }

    /// Canonical text of the expression; parses back to the same tree.
    pub fn unparse(&self) -> String {
        self.ast.to_string()
    }

    /// Value only. `sqrt(0)` is allowed here since no derivative is taken.
    pub fn value(&self, p: &Vec3) -> Result<f64, ExprError> {
        let vars = [p.x, p.y, p.z];
        self.tape.run(&vars).map_err(|e| self.domain_error(e))
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval2(&self, p: &Vec3) -> Result<Jet2, ExprError> {
        let vars = [
            Jet2::variable(p.x, 0),
            Jet2::variable(p.y, 1),
            Jet2::variable(p.z, 2),
        ];
        let mut j = self.tape.run(&vars).map_err(|e| self.domain_error(e))?;
        j.truncate_to(self.arity);
        Ok(j)
    }

    /// Conservative enclosure of the field over an axis-aligned box.
    /// `Err` means the box lies wholly outside the domain of the field.
    pub fn range(&self, lo: &Vec3, hi: &Vec3) -> Result<Interval, ExprError> {
        let vars = [
            Interval::new(lo.x, hi.x),
            Interval::new(lo.y, hi.y),
            Interval::new(lo.z, hi.z),
        ];
        self.tape.run(&vars).map_err(|e| self.domain_error(e))
    }

    /// Evaluate many points reusing one scratch buffer. Points outside the
    /// domain yield `NaN`.
    pub fn values_into(&self, points: &[Vec3], out: &mut Vec<f64>) {
        let mut scratch = Vec::with_capacity(self.tape.len());
        out.clear();
        out.extend(points.iter().map(|p| {
            self.tape
                .run_with(&[p.x, p.y, p.z], &mut scratch)
                .unwrap_or(f64::NAN)
        }));
    }

    fn domain_error(&self, (kind, instr): (DomainKind, usize)) -> ExprError {
        ExprError::Domain { kind, subexpr: self.tape.subexpr(instr).to_string() }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.ast == other.ast
    }
}

/// Arithmetic shared by every evaluation domain of the tape.
pub(crate) trait Scalar: Copy {
    fn constant(c: f64) -> Self;
    fn neg(self) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Result<Self, DomainKind>;
    fn exp(self) -> Self;
    fn sqrt(self) -> Result<Self, DomainKind>;

    /// Integer power by repeated squaring; no log/exp rewriting, so negative
    /// bases stay exact.
    fn powi(self, k: u32) -> Self {
        let mut result: Option<Self> = None;
        let mut base = self;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = Some(match result {
                    Some(r) => r.mul(base),
                    None => base,
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(base);
            }
        }
        result.unwrap_or_else(|| Self::constant(1.0))
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn neg(self) -> Self {
        -self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Result<Self, DomainKind> {
        if o == 0.0 {
            Err(DomainKind::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Result<Self, DomainKind> {
        if self < 0.0 {
            Err(DomainKind::SqrtOfNegative)
        } else {
            Ok(f64::sqrt(self))
        }
    }
}

// Precedence levels used by the printer.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
            Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
            Expr::Neg(..) => PREC_NEG,
            // Printed with a leading minus, so it binds like a negation.
            Expr::Const(c) if c.is_sign_negative() => PREC_NEG,
            Expr::Pow(..) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Sqrt(a) => a.max_variable(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_variable().max(b.max_variable())
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "{}", VARIABLE_NAMES[*i]),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_NEG)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { '+' } else { '-' };
                write_child(f, a, PREC_ADD)?;
                write!(f, " {op} ")?;
                write_child(f, b, PREC_ADD + 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Mul(..)) { '*' } else { '/' };
                write_child(f, a, PREC_MUL)?;
                write!(f, "{op}")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Expr::Pow(a, k) => {
                write_child(f, a, PREC_POW)?;
                write!(f, "^{k}")
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}
