use std::fmt;

pub const KEYWORDS: &[&str] = &[
    "true", "not", "and", "or", "until", "eventually", "always", "freeze", "exists", "forall", "at",
    "in", "class", "inclass", "S", "abs", "REAL", "FAKE", "T",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    Operator,
    Punctuation,
}

/// 1-based line and column of a token's first character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, lexeme: &str) -> bool {
        self.lexeme == lexeme && self.kind != TokenKind::Identifier
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lexical error at {span}: unexpected character {found:?}")]
pub struct LexError {
    pub span: Span,
    pub found: char,
}

/// Splits `input` into tokens. `#` starts a comment running to end of line.
pub fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let start = i;
        let kind = if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            i = scan_number(&chars, i);
            TokenKind::Number
        } else {
            let next = chars.get(i + 1).copied();
            let width = match (c, next) {
                ('<', Some('=')) | ('>', Some('=')) | ('=', Some('=')) | ('!', Some('=')) | ('-', Some('>')) => 2,
                ('<', _) | ('>', _) | ('-', _) | ('+', _) => 1,
                ('(', _) | (')', _) | (',', _) | ('.', _) => 1,
                _ => return Err(LexError { span, found: c }),
            };
            i += width;
            if matches!(c, '(' | ')' | ',' | '.') {
                TokenKind::Punctuation
            } else {
                TokenKind::Operator
            }
        };
        let lexeme: String = chars[start..i].iter().collect();
        col += i - start;
        tokens.push(Token { kind, lexeme, span });
    }
    Ok(tokens)
}

/// digits ("." digits)? ([eE] [+-]? digits)?
fn scan_number(chars: &[char], mut i: usize) -> usize {
    let digits = |mut j: usize| {
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    i = digits(i);
    if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
        i = digits(i + 1);
    }
    if matches!(chars.get(i), Some('e') | Some('E')) {
        let mut j = i + 1;
        if matches!(chars.get(j), Some('+') | Some('-')) {
            j += 1;
        }
        if chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
            i = digits(j);
        }
    }
    i
}
