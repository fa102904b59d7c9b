use crate::frontend::{BinOp, Expr, UnOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
}

/// Evaluate over the environment; booleans are 0/1 and any nonzero value is true.
pub fn eval(e: &Expr, env: &[i64]) -> Result<i64, EvalError> {
    Ok(match e {
        Expr::Int(v) => *v,
        Expr::Bool(b) => *b as i64,
        Expr::Var(x) => env[*x],
        Expr::Unary(UnOp::Neg, a) => eval(a, env)?.checked_neg().ok_or(EvalError::Overflow)?,
        Expr::Unary(UnOp::Not, a) => (eval(a, env)? == 0) as i64,
        Expr::Binary(BinOp::And, a, b) => (eval(a, env)? != 0 && eval(b, env)? != 0) as i64,
        Expr::Binary(BinOp::Or, a, b) => (eval(a, env)? != 0 || eval(b, env)? != 0) as i64,
        Expr::Binary(op, a, b) => {
            let (x, y) = (eval(a, env)?, eval(b, env)?);
            let ovf = EvalError::Overflow;
            match op {
                BinOp::Add => x.checked_add(y).ok_or(ovf)?,
                BinOp::Sub => x.checked_sub(y).ok_or(ovf)?,
                BinOp::Mul => x.checked_mul(y).ok_or(ovf)?,
                BinOp::Div | BinOp::Mod if y == 0 => return Err(EvalError::DivisionByZero),
                BinOp::Div => x.checked_div(y).ok_or(ovf)?,
                BinOp::Mod => x.checked_rem(y).ok_or(ovf)?,
                BinOp::Eq => (x == y) as i64,
                BinOp::Ne => (x != y) as i64,
                BinOp::Lt => (x < y) as i64,
                BinOp::Le => (x <= y) as i64,
                BinOp::Gt => (x > y) as i64,
                BinOp::Ge => (x >= y) as i64,
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

pub fn eval_bool(e: &Expr, env: &[i64]) -> Result<bool, EvalError> {
    Ok(eval(e, env)? != 0)
}
