use super::{BinOp, Expr, ExprError, Func, Node};

/// Parses `text` over variables `x1..x{n_vars}` with no parameters.
pub fn parse(text: &str, n_vars: usize) -> Result<Expr, ExprError> {
    parse_with_params(text, n_vars, &[])
}

/// Parses `text`, accepting the identifiers in `params` as named bindings.
pub fn parse_with_params(text: &str, n_vars: usize, params: &[&str]) -> Result<Expr, ExprError> {
    if n_vars == 0 {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "expression needs at least one variable slot".into(),
        });
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        n_vars,
        params,
        end: text.len(),
    };
    if p.tokens.is_empty() {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ExprError::Syntax {
            offset: t.offset,
            message: format!("unexpected {}", t.kind.describe()),
        });
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
            let mut integral = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let kind = if integral {
                match s.parse::<i64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => Tok::Num(s.parse().map_err(|_| ExprError::Syntax {
                        offset: start,
                        message: format!("malformed number `{s}`"),
                    })?),
                }
            } else {
                Tok::Num(s.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{s}`"),
                })?)
            };
            out.push(Token { kind, offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap()),
                })
            }
        };
        out.push(Token { kind, offset: start });
        i += c.len_utf8();
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    n_vars: usize,
    params: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<(char, usize)> {
        match self.peek() {
            Some(Token {
                kind: Tok::Op(c),
                offset,
            }) if ops.contains(c) => {
                let r = (*c, *offset);
                self.pos += 1;
                Some(r)
            }
            _ => None,
        }
    }

    fn eof_error(&self, what: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.end,
            message: format!("unexpected end of input, expected {what}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some((c, offset)) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some((c, offset)) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if let Some((_, offset)) = self.eat_op(&['-']) {
            let inner = self.unary()?;
            return Ok(Expr::new(Node::Neg(Box::new(inner)), offset));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while let Some((_, offset)) = self.eat_op(&['^']) {
            let negative = self.eat_op(&['-']).is_some();
            let exp = match self.next() {
                Some(Token { kind: Tok::Int(k), .. }) if k <= i32::MAX as i64 => k as i32,
                Some(t) => {
                    return Err(ExprError::Syntax {
                        offset: t.offset,
                        message: "exponent must be an integer literal".into(),
                    })
                }
                None => return Err(self.eof_error("integer exponent")),
            };
            let exp = if negative { -exp } else { exp };
            base = Expr::new(Node::Pow(Box::new(base), exp), offset);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.next() else {
            return Err(self.eof_error("an operand"));
        };
        let offset = tok.offset;
        match tok.kind {
            Tok::Num(v) => Ok(Expr::new(Node::Num(v), offset)),
            Tok::Int(v) => Ok(Expr::new(Node::Num(v as f64), offset)),
            Tok::LParen => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token { kind: Tok::RParen, .. }) => Ok(e),
                    Some(t) => Err(ExprError::Syntax {
                        offset: t.offset,
                        message: format!("expected `)`, found {}", t.kind.describe()),
                    }),
                    None => Err(self.eof_error("`)`")),
                }
            }
            Tok::Ident(name) => self.identifier(name, offset),
            other => Err(ExprError::Syntax {
                offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        let is_call = matches!(self.peek(), Some(Token { kind: Tok::LParen, .. }));
        if is_call {
            let func = Func::from_name(&name).ok_or(ExprError::UnknownFunction {
                offset,
                name: name.clone(),
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            match self.next() {
                Some(Token { kind: Tok::RParen, .. }) => {}
                Some(t) => {
                    return Err(ExprError::Syntax {
                        offset: t.offset,
                        message: format!("expected `)`, found {}", t.kind.describe()),
                    })
                }
                None => return Err(self.eof_error("`)`")),
            }
            return Ok(Expr::new(Node::Call(func, Box::new(arg)), offset));
        }
        if self.params.contains(&name.as_str()) {
            return Ok(Expr::new(Node::Param(name), offset));
        }
        if name == "pi" {
            return Ok(Expr::new(Node::Pi, offset));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.n_vars {
                    return Err(ExprError::VariableOutOfRange {
                        offset,
                        index,
                        n_vars: self.n_vars,
                    });
                }
                return Ok(Expr::new(Node::Var(index - 1), offset));
            }
        }
        if Func::from_name(&name).is_some() {
            return Err(ExprError::Syntax {
                offset,
                message: format!("function `{name}` needs a parenthesized argument"),
            });
        }
        Err(ExprError::UnknownIdentifier { offset, name })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_offset() {
        match parse("x1 + * x2", 2) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse("(x1 + x2", 2) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_range_is_checked() {
        assert!(matches!(
            parse("x9", 8),
            Err(ExprError::VariableOutOfRange {
                index: 9,
                n_vars: 8,
                ..
            })
        ));
        assert!(matches!(parse("x0", 8), Err(ExprError::VariableOutOfRange { .. })));
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(parse("sinh(x1)", 1), Err(ExprError::UnknownFunction { .. })));
        assert!(matches!(parse("2*alpha", 1), Err(ExprError::UnknownIdentifier { .. })));
        assert!(parse_with_params("2*alpha", 1, &["alpha"]).is_ok());
    }

    #[test]
    fn non_integer_exponent_rejected() {
        assert!(matches!(parse("x1^2.5", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("x1^x1", 1), Err(ExprError::Syntax { .. })));
        assert!(parse("x1^-2", 1).is_ok());
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(parse("2 x1", 1).is_err());
        assert!(parse("2(x1)", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 * 2E2", 1).unwrap();
        let v = e.eval_f64(&[0.0], &Default::default()).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn empty_rejected() {
        assert!(parse("   ", 1).is_err());
        assert!(parse("x1", 0).is_err());
    }
}
