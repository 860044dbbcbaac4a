//! A small expression language for user-supplied real functions.
//!
//! Expressions are parsed against an explicit set of declared variable
//! names, evaluate in IEEE doubles, and differentiate symbolically. The
//! grammar is plain infix with `^ > unary- > *,/ > +,-`, parentheses and
//! `f(expr)` function application for `sin, cos, sinh, cosh, exp, ln,
//! sqrt`. There is no implicit multiplication: `2s` is a syntax error.
//!
//! Exponents of `^` must fold to a numeric constant at parse time, which
//! keeps differentiation elementary (`d f^n = n f^{n-1} f'`).

mod parse;

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} does not fold to a constant")]
    NonConstantExponent { offset: usize },
    #[error("domain error: {msg}")]
    Domain { msg: String },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Base raised to a parse-time constant.
    Pow(Box<Node>, f64),
    Func(Func, Box<Node>),
}

/// A parsed expression together with its declared variable names.
///
/// Immutable after construction; evaluation and differentiation are pure.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    vars: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parse `text` against the declared variable set.
    pub fn parse(text: &str, variables: &[&str]) -> Result<Expr, ExprError> {
        let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let root = parse::parse(text, &vars)?;
        Ok(Expr { vars, root })
    }

    /// A constant expression with no variables.
    pub fn constant(value: f64) -> Expr {
        Expr {
            vars: Vec::new(),
            root: Node::Num(value),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Evaluate with one value per declared variable, in declaration order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        assert_eq!(
            values.len(),
            self.vars.len(),
            "binding count must match declared variables"
        );
        let y = eval_node(&self.root, values)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Exact symbolic derivative with respect to the named variable.
    ///
    /// Only literal arithmetic is folded; no other simplification is done.
    pub fn differentiate(&self, var: &str) -> Expr {
        let idx = self
            .vars
            .iter()
            .position(|name| name == var)
            .unwrap_or(usize::MAX);
        let root = if idx == usize::MAX {
            Node::Num(0.0)
        } else {
            diff_node(&self.root, idx)
        };
        Expr {
            vars: self.vars.clone(),
            root,
        }
    }
}

fn eval_node(node: &Node, vals: &[f64]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(x) => *x,
        Node::Var(i) => vals[*i],
        Node::Neg(a) => -eval_node(a, vals)?,
        Node::Add(a, b) => eval_node(a, vals)? + eval_node(b, vals)?,
        Node::Sub(a, b) => eval_node(a, vals)? - eval_node(b, vals)?,
        Node::Mul(a, b) => eval_node(a, vals)? * eval_node(b, vals)?,
        Node::Div(a, b) => {
            let den = eval_node(b, vals)?;
            if den == 0.0 {
                return Err(ExprError::Domain {
                    msg: "division by zero".into(),
                });
            }
            eval_node(a, vals)? / den
        }
        Node::Pow(base, e) => {
            let b = eval_node(base, vals)?;
            if e.fract() != 0.0 && b <= 0.0 {
                return Err(ExprError::Domain {
                    msg: format!("{b}^{e}: non-integer exponent needs a positive base"),
                });
            }
            b.powf(*e)
        }
        Node::Func(f, a) => {
            let x = eval_node(a, vals)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Exp => x.exp(),
                Func::Ln => {
                    if x <= 0.0 {
                        return Err(ExprError::Domain {
                            msg: format!("ln({x}) is undefined"),
                        });
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(ExprError::Domain {
                            msg: format!("sqrt({x}) is undefined"),
                        });
                    }
                    x.sqrt()
                }
            }
        }
    })
}

// Folding constructors: collapse literal arithmetic so that repeated
// differentiation does not balloon the tree.

fn num(x: f64) -> Node {
    Node::Num(x)
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) if (x + y).is_finite() => return num(x + y),
        (Node::Num(x), _) if *x == 0.0 => return b,
        (_, Node::Num(y)) if *y == 0.0 => return a,
        _ => {}
    }
    Node::Add(Box::new(a), Box::new(b))
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) if (x - y).is_finite() => return num(x - y),
        (_, Node::Num(y)) if *y == 0.0 => return a,
        (Node::Num(x), _) if *x == 0.0 => return neg(b),
        _ => {}
    }
    Node::Sub(Box::new(a), Box::new(b))
}

fn neg(a: Node) -> Node {
    match &a {
        Node::Num(x) => return num(-x),
        Node::Neg(inner) => return (**inner).clone(),
        _ => {}
    }
    Node::Neg(Box::new(a))
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) if (x * y).is_finite() => return num(x * y),
        (Node::Num(x), _) if *x == 0.0 => return num(0.0),
        (_, Node::Num(y)) if *y == 0.0 => return num(0.0),
        (Node::Num(x), _) if *x == 1.0 => return b,
        (_, Node::Num(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Node::Mul(Box::new(a), Box::new(b))
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), _) if *x == 0.0 => return num(0.0),
        (_, Node::Num(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Node::Div(Box::new(a), Box::new(b))
}

fn diff_node(node: &Node, var: usize) -> Node {
    match node {
        Node::Num(_) => num(0.0),
        Node::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(diff_node(a, var)),
        Node::Add(a, b) => add(diff_node(a, var), diff_node(b, var)),
        Node::Sub(a, b) => sub(diff_node(a, var), diff_node(b, var)),
        Node::Mul(a, b) => add(
            mul(diff_node(a, var), (**b).clone()),
            mul((**a).clone(), diff_node(b, var)),
        ),
        Node::Div(a, b) => {
            // (a/b)' = a'/b - a b'/b^2
            let da = diff_node(a, var);
            let db = diff_node(b, var);
            sub(
                div(da, (**b).clone()),
                div(
                    mul((**a).clone(), db),
                    Node::Pow(Box::new((**b).clone()), 2.0),
                ),
            )
        }
        Node::Pow(base, e) => {
            if *e == 0.0 {
                return num(0.0);
            }
            let db = diff_node(base, var);
            let inner = if *e == 1.0 {
                num(1.0)
            } else if *e == 2.0 {
                mul(num(2.0), (**base).clone())
            } else {
                mul(num(*e), Node::Pow(Box::new((**base).clone()), e - 1.0))
            };
            mul(inner, db)
        }
        Node::Func(f, a) => {
            let da = diff_node(a, var);
            let outer = match f {
                Func::Sin => Node::Func(Func::Cos, a.clone()),
                Func::Cos => neg(Node::Func(Func::Sin, a.clone())),
                Func::Sinh => Node::Func(Func::Cosh, a.clone()),
                Func::Cosh => Node::Func(Func::Sinh, a.clone()),
                Func::Exp => Node::Func(Func::Exp, a.clone()),
                Func::Ln => return div(da, (**a).clone()),
                Func::Sqrt => return div(da, mul(num(2.0), Node::Func(Func::Sqrt, a.clone()))),
            };
            mul(outer, da)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Num(x) => {
            if *x < 0.0 {
                write!(f, "({x})")
            } else {
                write!(f, "{x}")
            }
        }
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let op = match node {
                Node::Add(..) => '+',
                Node::Sub(..) => '-',
                Node::Mul(..) => '*',
                _ => '/',
            };
            write!(f, "(")?;
            write_node(f, a, vars)?;
            write!(f, "{op}")?;
            write_node(f, b, vars)?;
            write!(f, ")")
        }
        Node::Pow(base, e) => {
            write!(f, "(")?;
            write_node(f, base, vars)?;
            if *e < 0.0 {
                write!(f, "^({e})")?;
            } else {
                write!(f, "^{e}")?;
            }
            write!(f, ")")
        }
        Node::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, vars)?;
            write!(f, ")")
        }
    }
}
