use std::fmt;

/// Unary primitives understood by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    /// Smooth monotone transition: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
    Smoothstep,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Smoothstep => "smoothstep",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "smoothstep" => Func::Smoothstep,
            _ => return None,
        })
    }
}

/// Expression tree over the chart coordinates.
///
/// Variable `k` is the k-th chart coordinate in the order `(x, y1, .., yn, z)`,
/// so `Var(0)` is `x` and `Var(n + 1)` is `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(k: usize) -> Expr {
        Expr::Var(k)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// True when `Var(k)` occurs anywhere in the tree.
    pub fn depends_on(&self, k: usize) -> bool {
        match self {
            Expr::Const(_) | Expr::Pi => false,
            Expr::Var(j) => *j == k,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(k),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(k) || b.depends_on(k)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::Pi => None,
            Expr::Var(j) => Some(*j),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(i), Some(j)) => Some(i.max(j)),
                    (i, j) => i.or(j),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to `Var(k)`, lightly simplified.
    ///
    /// Returns `None` when a `smoothstep` argument depends on `Var(k)`; the
    /// grammar has no closed form for the mollifier's derivative.
    pub fn diff(&self, k: usize) -> Option<Expr> {
        use Expr::*;
        let d = match self {
            Const(_) | Pi => Const(0.0),
            Var(j) => Const(if *j == k { 1.0 } else { 0.0 }),
            Neg(a) => Neg(Box::new(a.diff(k)?)),
            Add(a, b) => Add(Box::new(a.diff(k)?), Box::new(b.diff(k)?)),
            Sub(a, b) => Sub(Box::new(a.diff(k)?), Box::new(b.diff(k)?)),
            Mul(a, b) => Add(
                Box::new(Mul(Box::new(a.diff(k)?), b.clone())),
                Box::new(Mul(a.clone(), Box::new(b.diff(k)?))),
            ),
            Div(a, b) => Sub(
                Box::new(Div(Box::new(a.diff(k)?), b.clone())),
                Box::new(Div(
                    Box::new(Mul(a.clone(), Box::new(b.diff(k)?))),
                    Box::new(Pow(b.clone(), 2)),
                )),
            ),
            Pow(a, n) => match *n {
                0 => Const(0.0),
                1 => a.diff(k)?,
                n => Mul(
                    Box::new(Mul(Box::new(Const(n as f64)), Box::new(Pow(a.clone(), n - 1)))),
                    Box::new(a.diff(k)?),
                ),
            },
            Call(f, a) => {
                if !a.depends_on(k) {
                    return Some(Const(0.0));
                }
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(Box::new(Call(Func::Sin, a.clone()))),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Sqrt => Div(Box::new(Const(0.5)), Box::new(Call(Func::Sqrt, a.clone()))),
                    Func::Smoothstep => return None,
                };
                Mul(Box::new(outer), Box::new(a.diff(k)?))
            }
        };
        Some(d.simplify())
    }

    /// Constant folding and removal of additive/multiplicative identities.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Pi | Var(_) => self.clone(),
            Neg(a) => match a.simplify() {
                Const(c) => Const(-c),
                Neg(inner) => *inner,
                s => Neg(Box::new(s)),
            },
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x + y),
                (s, t) if s.is_zero() => t,
                (s, t) if t.is_zero() => s,
                (s, t) => Add(Box::new(s), Box::new(t)),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x - y),
                (s, t) if t.is_zero() => s,
                (s, t) if s.is_zero() => Neg(Box::new(t)).simplify(),
                (s, t) => Sub(Box::new(s), Box::new(t)),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x * y),
                (s, t) if s.is_zero() || t.is_zero() => Const(0.0),
                (s, t) if s.is_one() => t,
                (s, t) if t.is_one() => s,
                (s, t) => Mul(Box::new(s), Box::new(t)),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) if y != 0.0 => Const(x / y),
                (s, _) if s.is_zero() => Const(0.0),
                (s, t) if t.is_one() => s,
                (s, t) => Div(Box::new(s), Box::new(t)),
            },
            Pow(a, n) => match (a.simplify(), *n) {
                (_, 0) => Const(1.0),
                (s, 1) => s,
                (Const(x), n) if x != 0.0 || n > 0 => Const(x.powi(n)),
                (s, n) => Pow(Box::new(s), n),
            },
            Call(f, a) => Call(*f, Box::new(a.simplify())),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Pi | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    /// Renders the tree in the input grammar. `n` is the screen dimension,
    /// needed only to name the last coordinate `z`.
    pub fn render(&self, n: usize) -> String {
        let mut s = String::new();
        self.write(&mut s, n);
        s
    }

    fn write_child(&self, out: &mut String, n: usize, min_prec: u8) {
        if self.precedence() < min_prec {
            out.push('(');
            self.write(out, n);
            out.push(')');
        } else {
            self.write(out, n);
        }
    }

    fn write(&self, out: &mut String, n: usize) {
        use std::fmt::Write;
        match self {
            Expr::Const(c) => {
                let _ = write!(out, "{c}");
            }
            Expr::Pi => out.push_str("pi"),
            Expr::Var(k) => out.push_str(&var_name(*k, n)),
            Expr::Neg(a) => {
                out.push('-');
                a.write_child(out, n, 3);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_child(out, n, 1);
                out.push_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " });
                b.write_child(out, n, 2);
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_child(out, n, 2);
                out.push_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" });
                b.write_child(out, n, 3);
            }
            Expr::Pow(a, k) => {
                a.write_child(out, n, 5);
                let _ = write!(out, "^{k}");
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, n);
                out.push(')');
            }
        }
    }
}

/// Coordinate name for index `k` in a chart with screen dimension `n`.
pub fn var_name(k: usize, n: usize) -> String {
    if k == 0 {
        "x".to_string()
    } else if k == n + 1 {
        "z".to_string()
    } else {
        format!("y{k}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Without the dimension, render coordinates generically.
        fn go(e: &Expr, out: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Var(k) => write!(out, "v{k}"),
                Expr::Const(c) => write!(out, "{c}"),
                Expr::Pi => write!(out, "pi"),
                Expr::Neg(a) => {
                    write!(out, "-(")?;
                    go(a, out)?;
                    write!(out, ")")
                }
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    let op = match e {
                        Expr::Add(..) => "+",
                        Expr::Sub(..) => "-",
                        Expr::Mul(..) => "*",
                        _ => "/",
                    };
                    write!(out, "(")?;
                    go(a, out)?;
                    write!(out, " {op} ")?;
                    go(b, out)?;
                    write!(out, ")")
                }
                Expr::Pow(a, k) => {
                    write!(out, "(")?;
                    go(a, out)?;
                    write!(out, ")^{k}")
                }
                Expr::Call(func, a) => {
                    write!(out, "{}(", func.name())?;
                    go(a, out)?;
                    write!(out, ")")
                }
            }
        }
        go(self, f)
    }
}
