use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {message} in `{subexpr}`")]
    Domain { message: &'static str, subexpr: String },
    #[error("symbol `{0}` has no value")]
    Unbound(String),
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div(u32),
    Pow(i32, u32),
    Func(Func, u32),
}

/// Stack-machine form of an [`Expr`] bound to an ordered variable list.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    nodes: Vec<Arc<Expr>>,
    nvars: usize,
    depth: usize,
}

impl CompiledExpr {
    pub fn new(e: &Expr, vars: &[&str]) -> Result<Self, EvalError> {
        let mut c = CompiledExpr { ops: Vec::new(), nodes: Vec::new(), nvars: vars.len(), depth: 0 };
        let mut depth = 0;
        c.emit(e, vars, &mut depth)?;
        Ok(c)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    fn push(&mut self, op: Op, depth: &mut usize, delta: isize) {
        self.ops.push(op);
        *depth = (*depth as isize + delta) as usize;
        self.depth = self.depth.max(*depth);
    }

    fn node(&mut self, e: &Expr) -> u32 {
        self.nodes.push(Arc::new(e.clone()));
        (self.nodes.len() - 1) as u32
    }

    fn emit(&mut self, e: &Expr, vars: &[&str], depth: &mut usize) -> Result<(), EvalError> {
        match e {
            Expr::Const(q) => self.push(Op::Const(*q.numer() as f64 / *q.denom() as f64), depth, 1),
            Expr::Float(v) => self.push(Op::Const(*v), depth, 1),
            Expr::Pi => self.push(Op::Const(std::f64::consts::PI), depth, 1),
            Expr::Sym(s) => {
                let i = vars.iter().position(|v| **v == **s).ok_or_else(|| EvalError::Unbound(s.to_string()))?;
                self.push(Op::Var(i), depth, 1)
            }
            Expr::Neg(a) => {
                self.emit(a, vars, depth)?;
                self.push(Op::Neg, depth, 0)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.emit(a, vars, depth)?;
                self.emit(b, vars, depth)?;
                let op = match e {
                    Expr::Add(..) => Op::Add,
                    Expr::Sub(..) => Op::Sub,
                    Expr::Mul(..) => Op::Mul,
                    _ => Op::Div(self.node(e)),
                };
                self.push(op, depth, -1)
            }
            Expr::Pow(a, k) => {
                self.emit(a, vars, depth)?;
                let k = i32::try_from(*k).unwrap_or(if *k > 0 { i32::MAX } else { i32::MIN });
                let n = self.node(e);
                self.push(Op::Pow(k, n), depth, 0)
            }
            Expr::Func(f, a) => {
                self.emit(a, vars, depth)?;
                let n = self.node(e);
                self.push(Op::Func(*f, n), depth, 0)
            }
        }
        Ok(())
    }

    fn domain(&self, node: u32, message: &'static str) -> EvalError {
        EvalError::Domain { message, subexpr: self.nodes[node as usize].to_string() }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() < self.nvars {
            return Err(EvalError::Arity { expected: self.nvars, got: point.len() });
        }
        let mut st: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(v) => st.push(v),
                Op::Var(i) => st.push(point[i]),
                Op::Neg => {
                    let v = st.pop().expect("stack");
                    st.push(-v);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div(_) => {
                    let b = st.pop().expect("stack");
                    let a = st.pop().expect("stack");
                    st.push(match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div(n) => {
                            if b == 0.0 {
                                return Err(self.domain(n, "division by zero"));
                            }
                            a / b
                        }
                        _ => unreachable!(),
                    });
                }
                Op::Pow(k, n) => {
                    let a = st.pop().expect("stack");
                    if k < 0 && a == 0.0 {
                        return Err(self.domain(n, "division by zero"));
                    }
                    st.push(a.powi(k));
                }
                Op::Func(f, n) => {
                    let a = st.pop().expect("stack");
                    match f {
                        Func::Log if a <= 0.0 => return Err(self.domain(n, "log of non-positive value")),
                        Func::Sqrt if a < 0.0 => return Err(self.domain(n, "sqrt of negative value")),
                        _ => {}
                    }
                    st.push(f.apply_f64(a));
                }
            }
        }
        Ok(st.pop().expect("non-empty program"))
    }
}
