use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Numeric, string, char or text-block literal. Contents are irrelevant.
    Literal,
    Punct(char),
    /// Multi-character operators kept whole so `->`, `::`, `...` do not split.
    Op(&'static str),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based line.
    pub line: u32,
    /// 1-based column, in chars.
    pub col: u32,
}

impl Token {
    pub fn is_punct(&self, c: char) -> bool {
        self.tok == Tok::Punct(c)
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.tok {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_ident(&self, s: &str) -> bool {
        self.ident() == Some(s)
    }
}

const OPS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1u32, 1u32);
    let mut i = 0;

    // advance over chars[i..j], tracking position
    let step = |i: &mut usize, n: usize, line: &mut u32, col: &mut u32| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            step(&mut i, 1, &mut line, &mut col);
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                step(&mut i, 1, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && next == Some('*') {
            let (l0, c0) = (line, col);
            step(&mut i, 2, &mut line, &mut col);
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(l0, c0, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    step(&mut i, 2, &mut line, &mut col);
                    break;
                }
                step(&mut i, 1, &mut line, &mut col);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c == '"' {
            let block = next == Some('"') && chars.get(i + 2) == Some(&'"');
            if block {
                step(&mut i, 3, &mut line, &mut col);
                loop {
                    if i >= chars.len() {
                        return Err(ParseError::new(l0, c0, "unterminated text block"));
                    }
                    if chars[i] == '\\' {
                        let n = 2.min(chars.len() - i);
                        step(&mut i, n, &mut line, &mut col);
                        continue;
                    }
                    if chars[i] == '"'
                        && chars.get(i + 1) == Some(&'"')
                        && chars.get(i + 2) == Some(&'"')
                    {
                        step(&mut i, 3, &mut line, &mut col);
                        break;
                    }
                    step(&mut i, 1, &mut line, &mut col);
                }
            } else {
                lex_quoted(&chars, &mut i, &mut line, &mut col, '"', &step)?;
            }
            out.push(Token { tok: Tok::Literal, line: l0, col: c0 });
            continue;
        }
        if c == '\'' {
            lex_quoted(&chars, &mut i, &mut line, &mut col, '\'', &step)?;
            out.push(Token { tok: Tok::Literal, line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) {
            let hex = c == '0' && matches!(next, Some('x' | 'X'));
            while i < chars.len() {
                let d = chars[i];
                // a sign never starts a number, so chars[i - 1] exists
                let exp_sign = (d == '+' || d == '-')
                    && (matches!(chars[i - 1], 'p' | 'P')
                        || (!hex && matches!(chars[i - 1], 'e' | 'E')));
                if d.is_ascii_alphanumeric() || d == '_' || d == '.' || exp_sign {
                    step(&mut i, 1, &mut line, &mut col);
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Literal, line: l0, col: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                step(&mut i, 1, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(word), line: l0, col: c0 });
            continue;
        }
        if let Some(op) = OPS.iter().find(|op| {
            op.chars().enumerate().all(|(k, oc)| chars.get(i + k) == Some(&oc))
        }) {
            step(&mut i, op.chars().count(), &mut line, &mut col);
            out.push(Token { tok: Tok::Op(op), line: l0, col: c0 });
            continue;
        }
        if "{}()[];,.<>=+-*/%!~?:&|^@".contains(c) {
            step(&mut i, 1, &mut line, &mut col);
            out.push(Token { tok: Tok::Punct(c), line: l0, col: c0 });
            continue;
        }
        return Err(ParseError::new(l0, c0, format!("unexpected character {c:?}")));
    }
    Ok(out)
}

fn lex_quoted(
    chars: &[char],
    i: &mut usize,
    line: &mut u32,
    col: &mut u32,
    close: char,
    step: &impl Fn(&mut usize, usize, &mut u32, &mut u32),
) -> Result<(), ParseError> {
    let (l0, c0) = (*line, *col);
    step(i, 1, line, col);
    loop {
        match chars.get(*i) {
            None | Some('\n') => {
                return Err(ParseError::new(l0, c0, "unterminated literal"));
            }
            Some('\\') => {
                if chars.get(*i + 1).is_none_or(|&c| c == '\n') {
                    return Err(ParseError::new(l0, c0, "unterminated literal"));
                }
                step(i, 2, line, col);
            }
            Some(&c) if c == close => {
                step(i, 1, line, col);
                return Ok(());
            }
            Some(_) => step(i, 1, line, col),
        }
    }
}
