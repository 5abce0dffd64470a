//! Elaboration of expression trees into typed field values.

use std::f64::consts::PI;
use std::fmt;

use super::expr::{BinOp, Expr, ExprKind, Pos};
use super::Diagnostic;
use crate::field::ScalarExpr;
use crate::forms::{AlgebraExpr, FormExpr, ValueSpace};
use crate::group_field::GroupExpr;
use crate::lie::{Algebra, Factor};

/// A typed field expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(ScalarExpr),
    Algebra(AlgebraExpr),
    Group(GroupExpr),
    Form(FormExpr),
}

impl Value {
    pub fn type_name(&self) -> String {
        match self {
            Value::Scalar(_) => "scalar".into(),
            Value::Algebra(_) => "algebra element".into(),
            Value::Group(_) => "group element".into(),
            Value::Form(f) => match f.space {
                ValueSpace::Real => format!("real {}-form", f.degree),
                _ => format!("algebra-valued {}-form", f.degree),
            },
        }
    }

    /// The 𝔤-valued 1-form this value denotes; the scalar `0` is the zero
    /// connection.
    pub fn as_connection(&self, algebra: Algebra) -> Option<FormExpr> {
        match self {
            Value::Form(f) if f.degree == 1 && f.space == ValueSpace::Lie(algebra) => Some(f.clone()),
            Value::Form(f) if f.terms.is_empty() && f.degree == 1 => {
                Some(FormExpr::zero(1, ValueSpace::Lie(algebra)))
            }
            Value::Scalar(s) if s.is_zero() => Some(FormExpr::zero(1, ValueSpace::Lie(algebra))),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.type_name())
    }
}

/// What identifiers and literals mean: the algebra and the torus dimension.
#[derive(Clone, Copy, Debug)]
pub struct Env {
    pub algebra: Algebra,
    pub dim: usize,
}

fn error(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        source: None,
        line: pos.line,
        column: pos.column,
        message: message.into(),
        expected: Vec::new(),
    }
}

fn coordinate(name: &str) -> Option<usize> {
    match name {
        "x" => Some(0),
        "y" => Some(1),
        "z" => Some(2),
        "w" => Some(3),
        _ => {
            let n: usize = name.strip_prefix('x')?.parse().ok()?;
            (1..=4).contains(&n).then(|| n - 1)
        }
    }
}

/// `i`, `j`, `k` of factor 1, `i2`, `j2`, `k2` of factor 2, and so on.
fn basis(name: &str) -> Option<(usize, usize)> {
    let mut chars = name.chars();
    let index = match chars.next()? {
        'i' => 0,
        'j' => 1,
        'k' => 2,
        _ => return None,
    };
    let rest = chars.as_str();
    if rest.is_empty() {
        return Some((0, index));
    }
    let n: usize = rest.parse().ok()?;
    (n >= 1).then(|| (n - 1, index))
}

impl Env {
    pub fn identifiers(&self) -> Vec<String> {
        let mut out: Vec<String> = ["pi", "r", "id"].iter().map(|s| s.to_string()).collect();
        for a in 0..self.dim {
            out.push(format!("x{}", a + 1));
            out.push(format!("dx{}", a + 1));
        }
        for (n, f) in self.algebra.factors().iter().enumerate() {
            let suffix = if n == 0 { String::new() } else { (n + 1).to_string() };
            for b in ["i", "j", "k"].iter().take(f.algebra_dim()) {
                out.push(format!("{b}{suffix}"));
            }
        }
        out
    }

    fn axis(&self, name: &str, pos: Pos) -> Result<usize, Diagnostic> {
        let a = coordinate(name).expect("checked by caller");
        if a >= self.dim {
            return Err(error(
                pos,
                format!("coordinate '{name}' does not exist on a {}-torus", self.dim),
            ));
        }
        Ok(a)
    }

    fn ident(&self, name: &str, pos: Pos) -> Result<Value, Diagnostic> {
        if name == "pi" {
            return Ok(Value::Scalar(ScalarExpr::Const(PI)));
        }
        if name == "r" {
            return Ok(Value::Scalar(ScalarExpr::Radius));
        }
        if name == "id" {
            return Ok(Value::Group(GroupExpr::Identity));
        }
        if coordinate(name).is_some() {
            return Ok(Value::Scalar(ScalarExpr::var(self.axis(name, pos)?)));
        }
        if let Some(rest) = name.strip_prefix('d') {
            if coordinate(rest).is_some() {
                return Ok(Value::Form(FormExpr::differential(self.axis(rest, pos)?)));
            }
        }
        if let Some((factor, index)) = basis(name) {
            return AlgebraExpr::basis(self.algebra, factor, index)
                .map(Value::Algebra)
                .map_err(|e| error(pos, e.to_string()));
        }
        let known = self.identifiers();
        Err(Diagnostic {
            expected: known,
            ..error(pos, format!("unknown identifier '{name}'"))
        })
    }

    fn scalar(&self, e: &Expr, what: &str) -> Result<ScalarExpr, Diagnostic> {
        match self.eval(e)? {
            Value::Scalar(s) => Ok(s),
            v => Err(error(e.pos, format!("{what} must be a scalar, found {v}"))),
        }
    }

    fn constant(&self, e: &Expr, what: &str) -> Result<f64, Diagnostic> {
        self.scalar(e, what)?
            .as_const()
            .ok_or_else(|| error(e.pos, format!("{what} must be a constant")))
    }

    fn group(&self, e: &Expr, what: &str) -> Result<GroupExpr, Diagnostic> {
        match self.eval(e)? {
            Value::Group(g) => Ok(g),
            v => Err(error(e.pos, format!("{what} must be a group element, found {v}"))),
        }
    }

    fn call(&self, name: &str, args: &[Expr], pos: Pos) -> Result<Value, Diagnostic> {
        let s = |n: usize| self.scalar(&args[n], &format!("argument {} of {name}", n + 1));
        Ok(match name {
            "sin" => Value::Scalar(ScalarExpr::sin(s(0)?)),
            "cos" => Value::Scalar(ScalarExpr::cos(s(0)?)),
            "exp" => Value::Scalar(ScalarExpr::exp(s(0)?)),
            "bump" => {
                let r0 = self.constant(&args[1], "the inner radius of bump")?;
                let r1 = self.constant(&args[2], "the outer radius of bump")?;
                if !(0.0 <= r0 && r0 < r1) {
                    return Err(error(pos, format!("bump radii must satisfy 0 <= r0 < r1, got {r0}, {r1}")));
                }
                Value::Scalar(ScalarExpr::bump(s(0)?, r0, r1))
            }
            "qexp" => match self.eval(&args[0])? {
                Value::Algebra(a) => Value::Group(GroupExpr::Qexp(a)),
                v => return Err(error(args[0].pos, format!("qexp needs an algebra element, found {v}"))),
            },
            "conj" => Value::Group(GroupExpr::conj(
                self.group(&args[0], "argument 1 of conj")?,
                self.group(&args[1], "argument 2 of conj")?,
            )),
            "pow" => {
                let n = args[1]
                    .as_int()
                    .ok_or_else(|| error(args[1].pos, "the exponent of pow must be an integer literal"))?;
                Value::Group(GroupExpr::pow(self.group(&args[0], "argument 1 of pow")?, n))
            }
            "inv" => Value::Group(GroupExpr::inv(self.group(&args[0], "argument of inv")?)),
            "quat" => {
                if self.algebra.factors() != [Factor::Su2] {
                    return Err(error(pos, "quat needs a single su2 factor"));
                }
                Value::Group(GroupExpr::quat([s(0)?, s(1)?, s(2)?, s(3)?]))
            }
            _ => unreachable!("the parser rejects unknown functions"),
        })
    }

    fn algebra_literal(&self, parts: &[Vec<Expr>], pos: Pos) -> Result<Value, Diagnostic> {
        let factors = self.algebra.factors();
        if parts.len() != factors.len() {
            return Err(error(
                pos,
                format!("expected {} bracket group(s), one per factor, got {}", factors.len(), parts.len()),
            ));
        }
        let mut coords = Vec::new();
        for (part, f) in parts.iter().zip(factors) {
            if part.len() != f.algebra_dim() {
                return Err(error(
                    part[0].pos,
                    format!("a {f} factor takes {} coefficient(s), got {}", f.algebra_dim(), part.len()),
                ));
            }
            for e in part {
                coords.push(self.scalar(e, "an algebra coefficient")?);
            }
        }
        Ok(Value::Algebra(AlgebraExpr {
            algebra: self.algebra,
            coords,
        }))
    }

    fn binary(&self, op: BinOp, a: &Expr, b: &Expr, pos: Pos) -> Result<Value, Diagnostic> {
        use Value as V;
        let mismatch = |x: &Value, y: &Value| {
            error(pos, format!("'{}' is not defined for {x} and {y}", op.symbol()))
        };
        let form_err = |e: crate::Error| error(pos, e.to_string());
        if op == BinOp::Caret {
            if let Some(n) = b.as_int() {
                match self.eval(a)? {
                    V::Scalar(s) => return Ok(V::Scalar(ScalarExpr::pow(s, n))),
                    V::Group(g) => return Ok(V::Group(GroupExpr::pow(g, n))),
                    V::Form(f) => return Err(mismatch(&V::Form(f), &V::Scalar(ScalarExpr::Const(n as f64)))),
                    v => return Err(error(pos, format!("cannot raise an {v} to a power"))),
                }
            }
        }
        let (x, y) = (self.eval(a)?, self.eval(b)?);
        Ok(match (op, x, y) {
            (BinOp::Add, V::Scalar(p), V::Scalar(q)) => V::Scalar(ScalarExpr::add(p, q)),
            (BinOp::Sub, V::Scalar(p), V::Scalar(q)) => V::Scalar(ScalarExpr::sub(p, q)),
            (BinOp::Mul, V::Scalar(p), V::Scalar(q)) => V::Scalar(ScalarExpr::mul(p, q)),
            (BinOp::Div, V::Scalar(p), V::Scalar(q)) => V::Scalar(ScalarExpr::div(p, q)),
            (BinOp::Add, V::Algebra(p), V::Algebra(q)) => V::Algebra(p.add(&q).map_err(form_err)?),
            (BinOp::Sub, V::Algebra(p), V::Algebra(q)) => V::Algebra(p.add(&q.neg()).map_err(form_err)?),
            (BinOp::Mul, V::Scalar(s), V::Algebra(p)) | (BinOp::Mul, V::Algebra(p), V::Scalar(s)) => {
                V::Algebra(p.scale(&s))
            }
            (BinOp::Div, V::Algebra(p), V::Scalar(s)) => V::Algebra(p.scale(&ScalarExpr::div(ScalarExpr::one(), s))),
            (BinOp::Mul, V::Group(g), V::Group(h)) => V::Group(GroupExpr::mul(g, h)),
            (BinOp::Add, V::Form(p), V::Form(q)) => V::Form(p.add(&q).map_err(form_err)?),
            (BinOp::Sub, V::Form(p), V::Form(q)) => V::Form(p.add(&q.neg()).map_err(form_err)?),
            (BinOp::Mul, V::Scalar(s), V::Form(p)) | (BinOp::Mul, V::Form(p), V::Scalar(s)) => V::Form(p.scale(&s)),
            (BinOp::Div, V::Form(p), V::Scalar(s)) => V::Form(p.scale(&ScalarExpr::div(ScalarExpr::one(), s))),
            (BinOp::Mul, V::Algebra(x), V::Form(p)) | (BinOp::Mul, V::Form(p), V::Algebra(x)) => {
                V::Form(p.times_algebra(&x).map_err(form_err)?)
            }
            (BinOp::Caret | BinOp::Wedge, V::Form(p), V::Form(q)) => V::Form(p.wedge(&q).map_err(form_err)?),
            (BinOp::Mul, x @ V::Form(_), y @ V::Form(_)) => {
                return Err(error(pos, format!("'*' is not defined for {x} and {y}; use '^' for the wedge product")))
            }
            (_, x, y) => return Err(mismatch(&x, &y)),
        })
    }

    /// Elaborates an expression in this environment.
    pub fn eval(&self, e: &Expr) -> Result<Value, Diagnostic> {
        match &e.kind {
            ExprKind::Num(v) => Ok(Value::Scalar(ScalarExpr::Const(*v))),
            ExprKind::Ident(name) => self.ident(name, e.pos),
            ExprKind::Neg(a) => match self.eval(a)? {
                Value::Scalar(s) => Ok(Value::Scalar(ScalarExpr::neg(s))),
                Value::Algebra(x) => Ok(Value::Algebra(x.neg())),
                Value::Form(f) => Ok(Value::Form(f.neg())),
                Value::Group(_) => Err(error(e.pos, "a group element cannot be negated; use inv(..)")),
            },
            ExprKind::Bin(op, a, b) => self.binary(*op, a, b, e.pos),
            ExprKind::Call(name, args) => self.call(name, args, e.pos),
            ExprKind::Algebra(parts) => self.algebra_literal(parts, e.pos),
        }
    }
}

/// Warns when the radial coordinate `r` appears where it is not smooth.
/// `r` itself has a kink at the centre; it is safe as the first argument
/// of `bump` and elsewhere only alongside some `bump(r, r0, r1)` with
/// `r0 > 0`, the radial-collapse idiom `(1 - bump(r, ..)) / r`.
pub fn radius_warnings(e: &Expr) -> Vec<String> {
    fn walk(e: &Expr, inside_bump: bool, bare: &mut Vec<Pos>, guarded: &mut bool) {
        match &e.kind {
            ExprKind::Ident(n) if n == "r" && !inside_bump => bare.push(e.pos),
            ExprKind::Call(name, args) if name == "bump" => {
                let direct_r = matches!(&args[0].kind, ExprKind::Ident(n) if n == "r");
                let positive = matches!(args[1].kind, ExprKind::Num(v) if v > 0.0);
                if direct_r && positive {
                    *guarded = true;
                }
                walk(&args[0], true, bare, guarded);
                for a in &args[1..] {
                    walk(a, inside_bump, bare, guarded);
                }
            }
            ExprKind::Neg(a) => walk(a, inside_bump, bare, guarded),
            ExprKind::Bin(_, a, b) => {
                walk(a, inside_bump, bare, guarded);
                walk(b, inside_bump, bare, guarded);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| walk(a, inside_bump, bare, guarded)),
            ExprKind::Algebra(parts) => parts.iter().flatten().for_each(|a| walk(a, inside_bump, bare, guarded)),
            ExprKind::Num(_) | ExprKind::Ident(_) => {}
        }
    }
    let (mut bare, mut guarded) = (Vec::new(), false);
    walk(e, false, &mut bare, &mut guarded);
    if guarded {
        return Vec::new();
    }
    bare.iter()
        .map(|p| {
            format!(
                "{}:{}: r is not smooth at the centre outside bump(r, r0, r1); spectral accuracy may be lost",
                p.line, p.column
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parser::parse_expr;

    fn env(algebra: Algebra) -> Env {
        Env { algebra, dim: 3 }
    }

    fn eval(text: &str, algebra: Algebra) -> Result<Value, Diagnostic> {
        env(algebra).eval(&parse_expr(text).unwrap())
    }

    #[test]
    fn types_follow_the_operands() {
        let su2 = Algebra::su2();
        assert!(matches!(eval("sin(x)^2 + pi", su2), Ok(Value::Scalar(_))));
        assert!(matches!(eval("[x, 0, 1]*2", su2), Ok(Value::Algebra(_))));
        assert!(matches!(eval("qexp(i*x) * conj(id, qexp(j))^-2", su2), Ok(Value::Group(_))));
        match eval("i*sin(x)*dy + k*dz", su2).unwrap() {
            Value::Form(f) => assert_eq!((f.degree, f.space), (1, ValueSpace::Lie(su2))),
            v => panic!("{v}"),
        }
        match eval("dx^dy∧dz", su2).unwrap() {
            Value::Form(f) => assert_eq!((f.degree, f.space), (3, ValueSpace::Real)),
            v => panic!("{v}"),
        }
    }

    #[test]
    fn qexp_of_zero_is_the_identity_field() {
        let g = match eval("qexp([0,0,0])", Algebra::su2()).unwrap() {
            Value::Group(g) => g,
            v => panic!("{v}"),
        };
        let u = g.eval(Algebra::su2(), &[0.3, 1.0, 2.0]);
        assert_eq!(u.value(), crate::lie::GroupElement::identity(Algebra::su2()));
    }

    #[test]
    fn type_errors_point_at_the_operator() {
        let d = eval("x + dx", Algebra::su2()).unwrap_err();
        assert_eq!((d.line, d.column), (1, 3));
        assert!(eval("dx*dy", Algebra::su2()).unwrap_err().message.contains("wedge"));
        assert!(eval("j", Algebra::u1()).is_err());
        assert!(eval("w", Algebra::su2()).unwrap_err().message.contains("3-torus"));
        assert!(eval("[1,2]", Algebra::su2()).is_err());
        assert!(eval("qexp(x)", Algebra::su2()).is_err());
        assert!(eval("bump(r, x, 2)", Algebra::su2()).is_err());
        assert!(eval("(i*dx)^(j*dy)", Algebra::su2()).is_err());
        let d = eval("foo", Algebra::su2()).unwrap_err();
        assert!(d.expected.contains(&"x3".to_string()) && d.expected.contains(&"k".to_string()));
    }

    #[test]
    fn second_factor_basis_names() {
        let alg = Algebra::su2_su2();
        match eval("j2", alg).unwrap() {
            Value::Algebra(a) => assert_eq!(a.coords[4], ScalarExpr::one()),
            v => panic!("{v}"),
        }
        assert!(eval("i3", alg).is_err());
    }

    #[test]
    fn radius_outside_bump_warns() {
        let p = |t: &str| radius_warnings(&parse_expr(t).unwrap());
        assert_eq!(p("qexp([pi*bump(r,1,3), 0, 0])").len(), 0);
        assert_eq!(p("pi*(1 - bump(r, 0.3, 3.1))/r*(x - pi)").len(), 0);
        assert_eq!(p("sin(r)").len(), 1);
        assert_eq!(p("r*bump(r, 0, 2)").len(), 1);
    }
}
