use std::fmt;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

/// Positions never take part in structural equality.
impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// `^`: integer power when the right side is an integer literal and
    /// the left side is not a form, wedge otherwise.
    Caret,
    /// `∧`: always a wedge.
    Wedge,
}

impl BinOp {
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Caret | BinOp::Wedge => 3,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinOp::Caret | BinOp::Wedge)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Caret => "^",
            BinOp::Wedge => "∧",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    /// Non-negative literal; negation is a separate node.
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// `[..][..]`: one coefficient list per factor.
    Algebra(Vec<Vec<Expr>>),
}

/// Untyped expression tree as written.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Value of an integer literal, possibly negated.
    pub fn as_int(&self) -> Option<i32> {
        match &self.kind {
            ExprKind::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Some(*v as i32),
            ExprKind::Neg(e) => e.as_int().map(|n| -n),
            _ => None,
        }
    }

    /// Binding strength of the outermost node; atoms bind tightest.
    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Bin(op, _, _) => op.precedence(),
            ExprKind::Neg(_) => 2,
            _ => 4,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (n, e) in items.iter().enumerate() {
        if n > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

/// Prints with the fewest parentheses that reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Ident(s) => write!(f, "{s}"),
            ExprKind::Neg(e) => {
                write!(f, "-")?;
                e.write_child(f, e.precedence() < 3)
            }
            ExprKind::Bin(op, a, b) => {
                let p = op.precedence();
                let left = if op.right_assoc() {
                    a.precedence() <= p
                } else {
                    a.precedence() < p
                };
                // a negated right operand is read by the unary rule unparenthesized
                let right = !matches!(b.kind, ExprKind::Neg(_))
                    && if op.right_assoc() {
                        b.precedence() < p
                    } else {
                        b.precedence() <= p
                    };
                a.write_child(f, left)?;
                match op {
                    BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                    _ => write!(f, "{}", op.symbol())?,
                }
                b.write_child(f, right)
            }
            ExprKind::Call(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
            ExprKind::Algebra(parts) => {
                for p in parts {
                    write!(f, "[")?;
                    write_list(f, p)?;
                    write!(f, "]")?;
                }
                Ok(())
            }
        }
    }
}
