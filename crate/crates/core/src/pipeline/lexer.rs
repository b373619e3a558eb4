use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Unsigned decimal literal with its source text.
    Number(f64, String),
    Str(String),
    Pipe,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Colon,
    Question,
    Dot,
    DotDot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Le,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, s) => format!("number {s}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::Pipe => "|",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Comma => ",",
        Tok::Semicolon => ";",
        Tok::Colon => ":",
        Tok::Question => "?",
        Tok::Dot => ".",
        Tok::DotDot => "..",
        Tok::Assign => "=",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Bang => "!",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        let push = |out: &mut Vec<Token>, tok: Tok| out.push(Token { tok, line: start_line, column: start_col });
        let next = chars.get(i + 1).copied();
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && (chars[j].is_alphabetic() || chars[j] == '_') {
                // tokens like `3D`
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push(&mut out, Tok::Ident(text));
                advance(j - i, &mut i, &mut col);
                continue;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let value = text.parse::<f64>().map_err(|e| ParseError::new(line, col, format!("bad number: {e}")))?;
            push(&mut out, Tok::Number(value, text));
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            push(&mut out, Tok::Ident(text));
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c == '\'' {
            let mut j = i + 1;
            let mut s = String::new();
            let (mut l, mut cc) = (line, col + 1);
            loop {
                match chars.get(j) {
                    None => return Err(ParseError::new(start_line, start_col, "unterminated string")),
                    Some('\'') => break,
                    Some('\\') if matches!(chars.get(j + 1), Some('\'') | Some('\\')) => {
                        s.push(chars[j + 1]);
                        j += 2;
                        cc += 2;
                    }
                    Some('\n') => {
                        s.push('\n');
                        j += 1;
                        l += 1;
                        cc = 1;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                        cc += 1;
                    }
                }
            }
            push(&mut out, Tok::Str(s));
            i = j + 1;
            line = l;
            col = cc + 1;
            continue;
        }
        let two = |a: char, b: char| c == a && next == Some(b);
        let (tok, len) = if two('.', '.') {
            (Tok::DotDot, 2)
        } else if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two('!', '=') {
            (Tok::NotEq, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else if two('&', '&') {
            (Tok::AndAnd, 2)
        } else if two('|', '|') {
            (Tok::OrOr, 2)
        } else {
            let t = match c {
                '|' => Tok::Pipe,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ';' => Tok::Semicolon,
                ':' => Tok::Colon,
                '?' => Tok::Question,
                '.' => Tok::Dot,
                '=' => Tok::Assign,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '!' => Tok::Bang,
                '+' => Tok::Plus,
                '-' | '\u{2212}' => Tok::Minus,
                '*' | '\u{00d7}' => Tok::Star,
                '/' | '\u{00f7}' => Tok::Slash,
                other => return Err(ParseError::new(line, col, format!("unexpected character `{other}`"))),
            };
            (t, 1)
        };
        push(&mut out, tok);
        advance(len, &mut i, &mut col);
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_and_numbers() {
        assert_eq!(
            toks("2..3"),
            vec![Tok::Number(2.0, "2".into()), Tok::DotDot, Tok::Number(3.0, "3".into()), Tok::Eof]
        );
        assert_eq!(toks("0.25")[0], Tok::Number(0.25, "0.25".into()));
    }

    #[test]
    fn three_d_is_an_identifier() {
        assert_eq!(toks("log(3D)")[2], Tok::Ident("3D".into()));
    }

    #[test]
    fn strings_and_positions() {
        let t = tokenize("filter(\n  id == 'it\\'s')").unwrap();
        assert_eq!(t[2].tok, Tok::Ident("id".into()));
        assert_eq!((t[2].line, t[2].column), (2, 3));
        assert_eq!(t[4].tok, Tok::Str("it's".into()));
        assert!(tokenize("filter('open").is_err());
        let err = tokenize("a # b").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(toks("a × b ÷ c")[1], Tok::Star);
        assert_eq!(toks("a × b ÷ c")[3], Tok::Slash);
    }
}
