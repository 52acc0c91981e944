//! Byte cursor shared by the observable parsers.

use alloc::string::String;

#[derive(Clone)]
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

/// A scanned floating point literal.
pub(crate) struct Number {
    pub value: f64,
    /// True when the literal had a fractional part or an exponent.
    pub is_real: bool,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    pub fn bump(&mut self) {
        self.pos += 1;
    }

    pub fn is_eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    pub fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Scans `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`.
    pub fn number(&mut self) -> Option<Number> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        if matches!(bytes.get(i), Some(b'+') | Some(b'-')) {
            i += 1;
        }
        let int_start = i;
        while matches!(bytes.get(i), Some(b) if b.is_ascii_digit()) {
            i += 1;
        }
        let mut digits = i - int_start;
        let mut is_real = false;
        if bytes.get(i) == Some(&b'.') {
            let frac_start = i + 1;
            let mut j = frac_start;
            while matches!(bytes.get(j), Some(b) if b.is_ascii_digit()) {
                j += 1;
            }
            if digits > 0 || j > frac_start {
                digits += j - frac_start;
                is_real = true;
                i = j;
            }
        }
        if digits == 0 {
            return None;
        }
        if matches!(bytes.get(i), Some(b'e') | Some(b'E')) {
            let mut j = i + 1;
            if matches!(bytes.get(j), Some(b'+') | Some(b'-')) {
                j += 1;
            }
            let exp_start = j;
            while matches!(bytes.get(j), Some(b) if b.is_ascii_digit()) {
                j += 1;
            }
            if j > exp_start {
                is_real = true;
                i = j;
            }
        }
        let value = self.src[start..i].parse::<f64>().ok()?;
        self.pos = i;
        Some(Number { value, is_real })
    }

    pub fn uint(&mut self) -> Option<usize> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        match self.src[start..self.pos].parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = start;
                None
            }
        }
    }

    /// Short excerpt of the remaining input for error messages.
    pub fn excerpt(&self) -> String {
        self.src[self.pos..].chars().take(12).collect()
    }
}

/// Formats an f64 as the shortest text that parses back to the same value.
pub(crate) fn fmt_f64(v: f64) -> String {
    // -0.0 prints as "-0"; the canonical form drops the sign.
    let v = if v == 0.0 { 0.0 } else { v };
    alloc::format!("{v}")
}
