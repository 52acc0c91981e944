//! Recursive-descent parser for the kernel DSL.
//!
//! ```text
//! kernel  := "kernel" IDENT "(" [IDENT ("," IDENT)*] ")" "qubits" UINT "{" (instr ";")* "}"
//! instr   := GATE ["(" pexpr ")"] operand+
//! operand := "q" UINT
//! pexpr   := FLOAT | IDENT
//! ```
//!
//! `//` starts a comment that runs to the end of the line.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GateKind, Instruction, Kernel, KernelError, ParamExpr};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number { text: String, value: f64 },
    Punct(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("{s:?}"),
            Tok::Number { text, .. } => format!("number {text}"),
            Tok::Punct(c) => format!("'{c}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, KernelError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    loop {
        // whitespace and comments
        while i < bytes.len() {
            match bytes[i] {
                b'\n' => {
                    i += 1;
                    line += 1;
                    line_start = i;
                }
                b if b.is_ascii_whitespace() => i += 1,
                b'/' if bytes.get(i + 1) == Some(&b'/') => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                }
                _ => break,
            }
        }
        let col = src[line_start..i].chars().count() + 1;
        if i >= bytes.len() {
            out.push(Spanned {
                tok: Tok::Eof,
                line,
                col,
            });
            return Ok(out);
        }
        let start = i;
        let b = bytes[i];
        let tok = if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if b.is_ascii_digit() || matches!(b, b'.' | b'+' | b'-') {
            let mut cur = crate::lex::Cursor::new(&src[start..]);
            let n = cur.number().ok_or_else(|| KernelError::Syntax {
                line,
                col,
                message: "malformed number".into(),
            })?;
            i = start + cur.pos();
            Tok::Number {
                text: src[start..i].to_string(),
                value: n.value,
            }
        } else if matches!(b, b'(' | b')' | b'{' | b'}' | b';' | b',') {
            i += 1;
            Tok::Punct(b as char)
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(KernelError::Syntax {
                line,
                col,
                message: format!("unexpected character {ch:?}"),
            });
        };
        out.push(Spanned { tok, line, col });
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, at: &Spanned, message: String) -> KernelError {
        KernelError::Syntax {
            line: at.line,
            col: at.col,
            message,
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<Spanned, KernelError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(t)
        } else {
            Err(self.error(&t, format!("expected '{c}', found {}", t.tok.describe())))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Spanned), KernelError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t)),
            other => Err(self.error(&t, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), KernelError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            other => Err(self.error(&t, format!("expected '{kw}', found {}", other.describe()))),
        }
    }

    fn uint(&mut self, what: &str) -> Result<usize, KernelError> {
        let t = self.next();
        match &t.tok {
            Tok::Number { text, .. } if text.bytes().all(|b| b.is_ascii_digit()) => text
                .parse()
                .map_err(|_| self.error(&t, format!("{what} too large"))),
            other => Err(self.error(&t, format!("expected {what}, found {}", other.describe()))),
        }
    }
}

fn located(at: &Spanned, e: KernelError) -> KernelError {
    KernelError::At {
        line: at.line,
        col: at.col,
        source: Box::new(e),
    }
}

fn operand(p: &Parser, t: &Spanned) -> Result<usize, KernelError> {
    if let Tok::Ident(s) = &t.tok {
        if let Some(digits) = s.strip_prefix('q') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return digits
                    .parse()
                    .map_err(|_| p.error(t, "qubit index too large".into()));
            }
        }
    }
    Err(p.error(
        t,
        format!("expected qubit operand q<N>, found {}", t.tok.describe()),
    ))
}

/// Parses and validates one kernel definition.
pub fn parse_kernel(src: &str) -> Result<Kernel, KernelError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let header = p.peek().clone();
    p.keyword("kernel")?;
    let (name, _) = p.ident("kernel name")?;
    p.expect_punct('(')?;
    let mut params = Vec::new();
    if !p.eat_punct(')') {
        loop {
            let (param, _) = p.ident("parameter name")?;
            params.push(param);
            if p.eat_punct(')') {
                break;
            }
            p.expect_punct(',')?;
        }
    }
    p.keyword("qubits")?;
    let num_qubits = p.uint("qubit count")?;
    let mut kernel =
        Kernel::new(name, params, num_qubits, Vec::new()).map_err(|e| located(&header, e))?;
    p.expect_punct('{')?;

    let mut measured = BTreeSet::new();
    loop {
        if p.eat_punct('}') {
            break;
        }
        let start = p.peek().clone();
        let (gate_name, _) = p.ident("gate name or '}'")?;
        let kind = GateKind::from_name(&gate_name)
            .ok_or_else(|| p.error(&start, format!("unknown gate {gate_name:?}")))?;
        let param = if p.eat_punct('(') {
            let t = p.next();
            let expr = match &t.tok {
                Tok::Number { value, .. } => ParamExpr::Literal(*value),
                Tok::Ident(s) => ParamExpr::Named(s.clone()),
                other => {
                    return Err(p.error(&t, format!("expected angle, found {}", other.describe())))
                }
            };
            p.expect_punct(')')?;
            Some(expr)
        } else {
            None
        };
        let mut qubits = Vec::new();
        while !matches!(p.peek().tok, Tok::Punct(';') | Tok::Punct('}') | Tok::Eof) {
            let t = p.next();
            qubits.push(operand(&p, &t)?);
        }
        if qubits.is_empty() {
            let t = p.peek().clone();
            return Err(p.error(&t, format!("{kind} needs at least one qubit operand")));
        }
        p.expect_punct(';')?;
        let instr = Instruction::new(kind, qubits, param).map_err(|e| located(&start, e))?;
        kernel
            .push_checked(instr, &mut measured)
            .map_err(|e| located(&start, e))?;
    }
    let t = p.next();
    if t.tok != Tok::Eof {
        return Err(p.error(
            &t,
            format!("unexpected {} after kernel body", t.tok.describe()),
        ));
    }
    Ok(kernel)
}
