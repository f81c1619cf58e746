use super::{DomainKind, Expr, Scalar};

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Var(u8),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, u32),
    Exp(u32),
    Sqrt(u32),
}

/// Post-order instruction list; slot `i` holds the value of instruction `i`
/// and the last slot is the result.
#[derive(Debug, Clone)]
pub(super) struct Tape {
    code: Vec<Instr>,
    text: Vec<String>,
}

impl Tape {
    pub(super) fn compile(ast: &Expr) -> Self {
        let mut tape = Tape { code: Vec::new(), text: Vec::new() };
        tape.emit(ast);
        tape
    }

    fn emit(&mut self, e: &Expr) -> u32 {
        let instr = match e {
            Expr::Const(c) => Instr::Const(*c),
            Expr::Var(i) => Instr::Var(*i as u8),
            Expr::Neg(a) => Instr::Neg(self.emit(a)),
            Expr::Add(a, b) => Instr::Add(self.emit(a), self.emit(b)),
            Expr::Sub(a, b) => Instr::Sub(self.emit(a), self.emit(b)),
            Expr::Mul(a, b) => Instr::Mul(self.emit(a), self.emit(b)),
            Expr::Div(a, b) => Instr::Div(self.emit(a), self.emit(b)),
            Expr::Pow(a, k) => Instr::Pow(self.emit(a), *k),
            Expr::Exp(a) => Instr::Exp(self.emit(a)),
            Expr::Sqrt(a) => Instr::Sqrt(self.emit(a)),
        };
        self.code.push(instr);
        self.text.push(e.to_string());
        (self.code.len() - 1) as u32
    }

    pub(super) fn len(&self) -> usize {
        self.code.len()
    }

    pub(super) fn subexpr(&self, i: usize) -> &str {
        &self.text[i]
    }

    pub(super) fn run<T: Scalar>(&self, vars: &[T; 3]) -> Result<T, (DomainKind, usize)> {
        let mut slots = Vec::with_capacity(self.code.len());
        self.run_with(vars, &mut slots)
    }

    pub(super) fn run_with<T: Scalar>(
        &self,
        vars: &[T; 3],
        slots: &mut Vec<T>,
    ) -> Result<T, (DomainKind, usize)> {
        slots.clear();
        for (i, instr) in self.code.iter().enumerate() {
            let s = |k: u32| slots[k as usize];
            let v = match *instr {
                Instr::Const(c) => T::constant(c),
                Instr::Var(j) => vars[j as usize],
                Instr::Neg(a) => s(a).neg(),
                Instr::Add(a, b) => s(a).add(s(b)),
                Instr::Sub(a, b) => s(a).sub(s(b)),
                Instr::Mul(a, b) => s(a).mul(s(b)),
                Instr::Div(a, b) => s(a).div(s(b)).map_err(|k| (k, i))?,
                Instr::Pow(a, k) => s(a).powi(k),
                Instr::Exp(a) => s(a).exp(),
                Instr::Sqrt(a) => s(a).sqrt().map_err(|k| (k, i))?,
            };
            slots.push(v);
        }
        Ok(*slots.last().expect("non-empty tape"))
    }
}
