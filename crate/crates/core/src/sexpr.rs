//! A minimal s-expression reader shared by the invariant language and the
//! FSM source parser. Supports atoms, parenthesized lists, the `'` quote
//! prefix and `;` line comments.

use std::fmt;

use thiserror::Error;

/// 1-based line and column of a character in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
    Quote { inner: Box<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom { pos, .. } | Sexp::List { pos, .. } | Sexp::Quote { pos, .. } => *pos,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            _ => None,
        }
    }

    /// Strips one leading quote, if present.
    pub fn unquote(&self) -> &Sexp {
        match self {
            Sexp::Quote { inner, .. } => inner,
            other => other,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Sexp::Atom { .. } => "an atom",
            Sexp::List { .. } => "a list",
            Sexp::Quote { .. } => "a quoted form",
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexp>, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::new(pos, "unclosed parenthesis")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List { items, pos }));
                        }
                        Some(_) => items.push(self.read()?.expect("input is not exhausted")),
                    }
                }
            }
            ')' => Err(SyntaxError::new(pos, "unexpected `)`")),
            '\'' => {
                self.bump();
                match self.read()? {
                    Some(inner) => Ok(Some(Sexp::Quote {
                        inner: Box::new(inner),
                        pos,
                    })),
                    None => Err(SyntaxError::new(pos, "quote with nothing after it")),
                }
            }
            '"' => Err(SyntaxError::new(pos, "string literals are not supported")),
            _ => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '\'' | ';' | '"') {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom { text, pos }))
            }
        }
    }
}

/// Reads every top-level form in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut forms = Vec::new();
    while let Some(form) = reader.read()? {
        forms.push(form);
    }
    Ok(forms)
}

/// Reads exactly one form.
pub fn read_one(text: &str) -> Result<Sexp, SyntaxError> {
    let mut forms = read_all(text)?.into_iter();
    let first = forms
        .next()
        .ok_or_else(|| SyntaxError::new(Pos { line: 1, column: 1 }, "empty input"))?;
    if let Some(extra) = forms.next() {
        return Err(SyntaxError::new(
            extra.pos(),
            "unexpected text after the expression",
        ));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_quoted_lists() {
        let forms = read_all("(define x '((S a F)))  ; comment\n'y").unwrap();
        assert_eq!(forms.len(), 2);
        let list = forms[0].as_list().unwrap();
        assert_eq!(list[0].as_atom(), Some("define"));
        assert!(matches!(list[2], Sexp::Quote { .. }));
        assert_eq!(forms[1].pos(), Pos { line: 2, column: 1 });
    }

    #[test]
    fn reports_positions() {
        let err = read_all("(a\n  (b c)").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 1 });
        let err = read_all("(a))").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 4 });
        let err = read_one("(a) b").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 5 });
    }
}
