//! Lexer and precedence-climbing parser for field expressions.
//!
//! ```text
//! expr    := unary (binop unary)*            precedence: + - < * / < ^ ∧
//! unary   := "-" power | primary              ^ and ∧ associate to the right
//! primary := number | ident | ident "(" expr ("," expr)* ")"
//!          | "(" expr ")" | ("[" expr ("," expr)* "]")+
//! ```

use super::expr::{BinOp, Expr, ExprKind, Pos};
use super::Diagnostic;

/// Known functions and their arities.
pub const FUNCTIONS: &[(&str, usize)] = &[
    ("bump", 3),
    ("conj", 2),
    ("cos", 1),
    ("exp", 1),
    ("inv", 1),
    ("pow", 2),
    ("qexp", 1),
    ("quat", 4),
    ("sin", 1),
];

const OPERAND: &[&str] = &["(", "-", "[", "identifier", "number"];
const OPERATORS: &[&str] = &["*", "+", "-", "/", "^", "∧"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(BinOp),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(op) => format!("'{}'", op.symbol()),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }

    /// Name used in expected-token sets.
    fn class(&self) -> &'static str {
        match self {
            Tok::Num(_) => "number",
            Tok::Ident(_) => "identifier",
            Tok::Op(op) => op.symbol(),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::End => "end of input",
        }
    }
}

fn diagnostic(pos: Pos, message: String, expected: &[&str]) -> Diagnostic {
    let mut expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
    expected.sort();
    expected.dedup();
    Diagnostic {
        source: None,
        line: pos.line,
        column: pos.column,
        message,
        expected,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        let start = i;
        let tok = match c {
            '\n' => {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {
                column += 1;
                i += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '0'..='9' | '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Num(v),
                    _ => return Err(diagnostic(pos, format!("malformed number '{s}'"), &["number"])),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            _ => {
                i += 1;
                match c {
                    '+' => Tok::Op(BinOp::Add),
                    '-' | '−' => Tok::Op(BinOp::Sub),
                    '*' => Tok::Op(BinOp::Mul),
                    '/' => Tok::Op(BinOp::Div),
                    '^' => Tok::Op(BinOp::Caret),
                    '∧' => Tok::Op(BinOp::Wedge),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    _ => {
                        return Err(diagnostic(
                            pos,
                            format!("unexpected character '{c}'"),
                            &[OPERAND, OPERATORS, &[")", "]", ","]].concat(),
                        ))
                    }
                }
            }
        };
        column += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Pos) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let (tok, pos) = self.peek();
        diagnostic(*pos, format!("unexpected {}", tok.describe()), expected)
    }

    /// Consumes `want` or reports it together with everything an operand
    /// could have continued with.
    fn expect(&mut self, want: Tok, also: &[&str]) -> Result<(), Diagnostic> {
        if self.peek().0 == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[OPERATORS, also, &[want.class()]].concat()))
        }
    }

    fn binary(&mut self, min: u8) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let (Tok::Op(op), pos) = self.peek().clone() else {
                return Ok(lhs);
            };
            if op.precedence() < min {
                return Ok(lhs);
            }
            self.bump();
            let next = if op.right_assoc() {
                op.precedence()
            } else {
                op.precedence() + 1
            };
            let rhs = self.binary(next)?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if let (Tok::Op(BinOp::Sub), pos) = self.peek().clone() {
            self.bump();
            let e = self.binary(BinOp::Caret.precedence())?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos));
        }
        self.primary()
    }

    /// Comma-separated expressions up to `close`.
    fn list(&mut self, close: Tok) -> Result<Vec<Expr>, Diagnostic> {
        let mut items = vec![self.binary(0)?];
        while self.peek().0 == Tok::Comma {
            self.bump();
            items.push(self.binary(0)?);
        }
        self.expect(close, &[","])?;
        Ok(items)
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let (tok, pos) = self.peek().clone();
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Num(v), pos))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().0 != Tok::LParen {
                    return Ok(Expr::new(ExprKind::Ident(name), pos));
                }
                let Some(&(_, arity)) = FUNCTIONS.iter().find(|f| f.0 == name) else {
                    let names: Vec<&str> = FUNCTIONS.iter().map(|f| f.0).collect();
                    return Err(diagnostic(pos, format!("unknown function '{name}'"), &names));
                };
                self.bump();
                let args = self.list(Tok::RParen)?;
                if args.len() != arity {
                    return Err(diagnostic(
                        pos,
                        format!("{name} takes {arity} argument(s), got {}", args.len()),
                        &[],
                    ));
                }
                Ok(Expr::new(ExprKind::Call(name, args), pos))
            }
            Tok::LParen => {
                self.bump();
                let e = self.binary(0)?;
                self.expect(Tok::RParen, &[])?;
                Ok(e)
            }
            Tok::LBracket => {
                let mut parts = Vec::new();
                while self.peek().0 == Tok::LBracket {
                    self.bump();
                    parts.push(self.list(Tok::RBracket)?);
                }
                Ok(Expr::new(ExprKind::Algebra(parts), pos))
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }
}

/// Parses one field expression. Either the whole text is an expression or
/// the result is a diagnostic; there is no partial result.
pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.binary(0)?;
    if p.peek().0 != Tok::End {
        return Err(p.unexpected(&[OPERATORS, &["end of input"]].concat()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(text: &str) -> String {
        format!("{}", parse_expr(text).unwrap())
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(shape("1+2*3^2^x"), "1 + 2*3^2^x");
        assert_eq!(shape("(1+2)*3"), "(1 + 2)*3");
        assert_eq!(shape("-x^2"), "-x^2");
        assert_eq!(shape("(-x)^2"), "(-x)^2");
        assert_eq!(shape("a - (b - c)"), "a - (b - c)");
        assert_eq!(shape("a - b - c"), "a - b - c");
        assert_eq!(shape("(dx^dy)^dz"), "(dx^dy)^dz");
        assert_eq!(shape("x*-y"), "x*-y");
    }

    #[test]
    fn literals_calls_and_comments() {
        let e = parse_expr("qexp([0,0,0]) # the identity\n").unwrap();
        assert_eq!(e.to_string(), "qexp([0, 0, 0])");
        assert_eq!(shape("[x][1, 2, 3]"), "[x][1, 2, 3]");
        assert_eq!(shape("2.5e-3*x"), "0.0025*x");
        assert_eq!(shape("dx ∧ dy"), "dx∧dy");
    }

    #[test]
    fn diagnostics_carry_position_and_expected_set() {
        let d = parse_expr("sin(x) +\n  * y").unwrap_err();
        assert_eq!((d.line, d.column), (2, 3));
        assert_eq!(d.expected, ["(", "-", "[", "identifier", "number"]);

        let d = parse_expr("sin(x").unwrap_err();
        assert!(d.expected.contains(&")".to_string()) && d.expected.contains(&"+".to_string()));

        let d = parse_expr("foo(x)").unwrap_err();
        assert!(d.message.contains("unknown function") && d.expected.contains(&"sin".to_string()));

        let d = parse_expr("bump(r, 1)").unwrap_err();
        assert!(d.message.contains("takes 3"));

        let d = parse_expr("x y").unwrap_err();
        assert_eq!((d.line, d.column), (1, 3));
        assert!(d.expected.contains(&"end of input".to_string()));

        assert!(parse_expr("x $ y").is_err());
        assert!(parse_expr("1e999").is_err());
        assert!(parse_expr("").is_err());
    }
}
