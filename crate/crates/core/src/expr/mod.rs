//! Coefficient expressions: parsing, evaluation and exact derivatives up to
//! second order.
//!
//! The grammar is documented on [`parse_expression`]. Derivatives are carried
//! through every primitive with truncated Taylor arithmetic, so they are exact
//! up to floating-point rounding.

mod ast;
pub mod jet;
mod parser;

use std::collections::HashMap;
use std::sync::Arc;

pub use ast::{var_name, Expr, Func};
pub use jet::{Dual, Jet, Number, MAX_DIM};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("coordinate '{name}' at byte {pos} is out of range for screen dimension {n}")]
    IndexOutOfRange { pos: usize, name: String, n: usize },
    #[error("dimension {0} exceeds the supported maximum")]
    DimensionTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number (or of zero where a derivative is needed)")]
    SqrtOfNegative,
    #[error("exponential overflow")]
    Overflow,
    #[error("point has {got} coordinates, expected {want}")]
    PointDimension { got: usize, want: usize },
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A chart point `(x, y1, .., yn, z)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// Real-valued function of the chart coordinates.
///
/// Immutable after construction and cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Arc<Expr>,
    n: usize,
}

impl ScalarField {
    pub fn new(expr: Expr, n: usize) -> Self {
        ScalarField { expr: Arc::new(expr), n }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(0.0, n)
    }

    pub fn constant(c: f64, n: usize) -> Self {
        Self::new(Expr::Const(c), n)
    }

    pub fn coordinate(k: usize, n: usize) -> Self {
        Self::new(Expr::Var(k), n)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Screen dimension of the chart this field lives on.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of chart coordinates, `n + 2`.
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    pub fn is_constant(&self) -> bool {
        self.expr.is_constant()
    }

    pub fn is_zero(&self) -> bool {
        self.expr.simplify().is_zero()
    }

    pub fn depends_on(&self, k: usize) -> bool {
        self.expr.depends_on(k)
    }

    pub fn render(&self) -> String {
        self.expr.render(self.n)
    }

    /// Symbolic partial derivative; `None` if it involves `smoothstep`.
    pub fn diff(&self, k: usize) -> Option<ScalarField> {
        self.expr.diff(k).map(|e| ScalarField::new(e, self.n))
    }

    /// `c * self`, simplified.
    pub fn scaled(&self, c: f64) -> ScalarField {
        let e = Expr::Mul(Box::new(Expr::Const(c)), Box::new((*self.expr).clone()));
        ScalarField::new(e.simplify(), self.n)
    }

    /// `self + other`, simplified.
    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        let e = Expr::Add(Box::new((*self.expr).clone()), Box::new((*other.expr).clone()));
        ScalarField::new(e.simplify(), self.n)
    }

    /// `self - other`, simplified.
    pub fn minus(&self, other: &ScalarField) -> ScalarField {
        let e = Expr::Sub(Box::new((*self.expr).clone()), Box::new((*other.expr).clone()));
        ScalarField::new(e.simplify(), self.n)
    }

    /// `self * other`, simplified.
    pub fn times(&self, other: &ScalarField) -> ScalarField {
        let e = Expr::Mul(Box::new((*self.expr).clone()), Box::new((*other.expr).clone()));
        ScalarField::new(e.simplify(), self.n)
    }

    fn check_point(&self, p: &Point) -> Result<(), EvalError> {
        if p.dim() != self.dim() {
            return Err(EvalError::PointDimension { got: p.dim(), want: self.dim() });
        }
        if !p.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(())
    }

    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        self.check_point(p)?;
        if let Expr::Const(c) = *self.expr {
            return Ok(c);
        }
        eval_generic(&self.expr, p.coords())
    }

    /// Value and gradient.
    pub fn dual(&self, p: &Point) -> Result<Dual, EvalError> {
        self.check_point(p)?;
        let d = self.dim();
        if let Expr::Const(c) = *self.expr {
            return Ok(Dual::lift(c, d));
        }
        let vars: Vec<Dual> = (0..d).map(|k| Dual::variable(p.0[k], k, d)).collect();
        eval_generic(&self.expr, &vars)
    }

    /// Value, gradient and Hessian.
    pub fn jet(&self, p: &Point) -> Result<Jet, EvalError> {
        self.check_point(p)?;
        let d = self.dim();
        if let Expr::Const(c) = *self.expr {
            return Ok(Jet::lift(c, d));
        }
        let vars: Vec<Jet> = (0..d).map(|k| Jet::variable(p.0[k], k, d)).collect();
        eval_generic(&self.expr, &vars)
    }

    /// Exact partial derivative for a multi-index of length 0, 1 or 2.
    ///
    /// # Panics
    /// If `idx` has more than two entries or an entry is not a coordinate index.
    pub fn partial(&self, p: &Point, idx: &[usize]) -> Result<f64, EvalError> {
        assert!(idx.len() <= 2, "derivatives above second order are not supported");
        assert!(idx.iter().all(|&k| k < self.dim()), "coordinate index out of range");
        match idx {
            [] => self.eval(p),
            [i] => Ok(self.dual(p)?.g[*i]),
            [i, j] => Ok(self.jet(p)?.hess(*i, *j)),
            _ => unreachable!(),
        }
    }
}

/// Tree-walking evaluation over any [`Number`] type.
pub fn eval_generic<T: Number>(e: &Expr, vars: &[T]) -> Result<T, EvalError> {
    let dim = vars.len();
    Ok(match e {
        Expr::Const(c) => T::lift(*c, dim),
        Expr::Pi => T::lift(std::f64::consts::PI, dim),
        Expr::Var(k) => vars[*k],
        Expr::Neg(a) => eval_generic(a, vars)?.neg(),
        Expr::Add(a, b) => eval_generic(a, vars)?.add(eval_generic(b, vars)?),
        Expr::Sub(a, b) => eval_generic(a, vars)?.sub(eval_generic(b, vars)?),
        Expr::Mul(a, b) => eval_generic(a, vars)?.mul(eval_generic(b, vars)?),
        Expr::Div(a, b) => eval_generic(a, vars)?.div(eval_generic(b, vars)?)?,
        Expr::Pow(a, k) => eval_generic(a, vars)?.powi(*k)?,
        Expr::Call(f, a) => {
            let u = eval_generic(a, vars)?;
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp()?,
                Func::Sqrt => u.sqrt()?,
                Func::Smoothstep => u.smoothstep(),
            }
        }
    })
}

/// Parses `src` over the coordinates of a chart with screen dimension `n`.
///
/// Grammar (EBNF):
///
/// ```text
/// expr   = term { ("+" | "-") term } ;
/// term   = unary { ("*" | "/") unary } ;
/// unary  = "-" unary | power ;
/// power  = atom [ "^" [ "-" ] integer ] ;
/// atom   = number | "pi" | coord | func "(" expr ")" | "(" expr ")" ;
/// coord  = "x" | "y1" .. "yn" | "z" ;   (* "y" is accepted for y1 when n = 1 *)
/// func   = "sin" | "cos" | "exp" | "sqrt" | "smoothstep" ;
/// ```
pub fn parse_expression(src: &str, n: usize) -> Result<ScalarField, ParseError> {
    parse_with_defs(src, n, &HashMap::new())
}

/// Like [`parse_expression`], additionally resolving the named sub-expressions
/// in `defs` (each substituted as a parenthesised subtree).
pub fn parse_with_defs(
    src: &str,
    n: usize,
    defs: &HashMap<String, Expr>,
) -> Result<ScalarField, ParseError> {
    if n + 2 > MAX_DIM {
        return Err(ParseError::DimensionTooLarge(n));
    }
    let e = parser::Parser::new(src, n, defs)?.parse()?;
    Ok(ScalarField::new(e, n))
}

/// Parses a list of `(name, source)` definitions in order; later definitions
/// may refer to earlier ones.
pub fn parse_defs(
    items: &[(String, String)],
    n: usize,
) -> Result<HashMap<String, Expr>, ParseError> {
    let mut defs = HashMap::new();
    for (name, src) in items {
        let f = parse_with_defs(src, n, &defs)?;
        defs.insert(name.clone(), f.expr().clone());
    }
    Ok(defs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point(v.to_vec())
    }

    #[test]
    fn zero_field() {
        let f = parse_expression("0", 2).unwrap();
        assert!(f.is_zero());
        assert_eq!(f.eval(&pt(&[0.3, 1.0, -2.0, 5.0])).unwrap(), 0.0);
        assert_eq!(f.partial(&pt(&[0.3, 1.0, -2.0, 5.0]), &[1, 3]).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_and_second_derivative() {
        // n = 1: coordinates (x, y, z)
        let f = parse_expression("x^2*z", 1).unwrap();
        let p = pt(&[2.0, 0.0, 3.0]);
        assert_eq!(f.eval(&p).unwrap(), 12.0);
        assert_eq!(f.partial(&p, &[0, 0]).unwrap(), 6.0);
        assert_eq!(f.partial(&p, &[1]).unwrap(), 0.0);
        assert_eq!(f.partial(&p, &[0, 2]).unwrap(), 4.0);
    }

    #[test]
    fn sin_half_pi() {
        let f = parse_expression("sin(pi/2)", 2).unwrap();
        assert_eq!(f.eval(&pt(&[0.0; 4])).unwrap(), 1.0);
    }

    #[test]
    fn substitution_of_named_definitions() {
        let defs = parse_defs(&[("f".into(), "sin(2*pi*y1)*cos(2*pi*z)".into())], 2).unwrap();
        let g = parse_with_defs("y1 + f + 1", 2, &defs).unwrap();
        let p = pt(&[0.0, 0.1, 0.4, 0.3]);
        let f_val = (2.0 * std::f64::consts::PI * 0.1).sin() * (2.0 * std::f64::consts::PI * 0.3).cos();
        assert!((g.eval(&p).unwrap() - (0.1 + f_val + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_expression("x + w", 2),
            Err(ParseError::UnknownIdentifier { pos: 4, name: "w".into() })
        );
        assert!(matches!(
            parse_expression("y3 * 2", 2),
            Err(ParseError::IndexOutOfRange { pos: 0, .. })
        ));
        assert!(matches!(parse_expression("x +", 2), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_expression("x ^ 1.5", 2), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expression("(x", 2), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expression("", 2), Err(ParseError::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expression("x $ z", 2), Err(ParseError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn bare_y_only_for_one_dimensional_screen() {
        assert_eq!(parse_expression("y", 1).unwrap().expr(), &Expr::Var(1));
        assert!(parse_expression("y", 2).is_err());
    }

    #[test]
    fn domain_errors() {
        let p = pt(&[0.0, 0.0, 0.0, 0.0]);
        let d = parse_expression("1/x", 2).unwrap();
        assert_eq!(d.eval(&p), Err(EvalError::DivisionByZero));
        let s = parse_expression("sqrt(x - 1)", 2).unwrap();
        assert_eq!(s.eval(&p), Err(EvalError::SqrtOfNegative));
        // value exists at zero, derivatives do not
        let s0 = parse_expression("sqrt(x)", 2).unwrap();
        assert_eq!(s0.eval(&p), Ok(0.0));
        assert_eq!(s0.partial(&p, &[0]), Err(EvalError::SqrtOfNegative));
        let neg = parse_expression("x^-1", 2).unwrap();
        assert_eq!(neg.eval(&p), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn render_reparses_to_same_tree() {
        for src in [
            "-x^2 + y1*(y2 - z)/(1 + x^2)",
            "(-x)^3 - -y1",
            "sin(2*pi*y1)*cos(2*pi*z) + exp(-x)",
            "x - (y1 - z)",
            "x/(y1/z)",
            "(x^2)^-3",
            "smoothstep(-2*z - 1)*y2^2",
            "1.5e-7*x",
        ] {
            let a = parse_expression(src, 2).unwrap();
            let printed = a.render();
            let b = parse_expression(&printed, 2).unwrap();
            assert_eq!(a.expr(), b.expr(), "{src} -> {printed}");
        }
    }

    #[test]
    fn symbolic_derivative_of_potential() {
        let phi = parse_expression("3*y1", 2).unwrap();
        assert_eq!(phi.diff(1).unwrap().expr(), &Expr::Const(3.0));
        assert!(phi.diff(2).unwrap().is_zero());
        let s = parse_expression("smoothstep(z)", 2).unwrap();
        assert!(s.diff(3).is_none());
        assert!(s.diff(0).unwrap().is_zero());
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let f = parse_expression("sin(x*y1)*exp(z/(2 + y2^2)) + sqrt(1 + x^2*z^2)", 2).unwrap();
        let p = pt(&[0.3, -0.7, 1.1, 0.45]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(f.partial(&p, &[i, j]).unwrap(), f.partial(&p, &[j, i]).unwrap());
            }
        }
    }
}
