use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Char(char),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

// Longest first so that `->` wins over `-`.
const PUNCT: &[&str] = &[
    "::", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "{",
    "}", "(", ")", "[", "]", ";", ",", ".", "=", "<", ">", "+", "-", "*", "/", "%", "!", "&",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
                at_line_start = true;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        // Preprocessor lines are ignored.
        if c == '#' && at_line_start {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        at_line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(Diagnostic::syntax(l, c0, "unterminated comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }

        let (tl, tc) = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            let n: i64 = s
                .parse()
                .ok()
                .filter(|n| *n <= i64::from(i32::MAX) + 1)
                .ok_or_else(|| Diagnostic::syntax(tl, tc, format!("integer literal {s} out of range")))?;
            Tok::Int(n)
        } else if c == '\'' {
            bump!();
            let before = i;
            let ch = read_char(&chars, &mut i, tl, tc)?;
            col += (i - before) as u32;
            if chars.get(i) != Some(&'\'') {
                return Err(Diagnostic::syntax(tl, tc, "unterminated character literal"));
            }
            bump!();
            Tok::Char(ch)
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(Diagnostic::syntax(tl, tc, "unterminated string literal"))
                    }
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some(_) => {
                        let before = i;
                        s.push(read_char(&chars, &mut i, tl, tc)?);
                        col += (i - before) as u32;
                    }
                }
            }
            Tok::Str(s)
        } else if let Some(p) = PUNCT.iter().find(|p| {
            p.chars().enumerate().all(|(k, pc)| chars.get(i + k) == Some(&pc))
        }) {
            for _ in 0..p.len() {
                bump!();
            }
            Tok::Punct(p)
        } else {
            return Err(Diagnostic::syntax(tl, tc, format!("unexpected character `{c}`")));
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Reads one possibly escaped character; advances `i` without touching the
/// caller's column counter.
fn read_char(chars: &[char], i: &mut usize, line: u32, col: u32) -> Result<char, Diagnostic> {
    let c = *chars
        .get(*i)
        .ok_or_else(|| Diagnostic::syntax(line, col, "unexpected end of input in literal"))?;
    *i += 1;
    if c != '\\' {
        return Ok(c);
    }
    let e = *chars
        .get(*i)
        .ok_or_else(|| Diagnostic::syntax(line, col, "unexpected end of input in escape"))?;
    *i += 1;
    Ok(match e {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        other => {
            return Err(Diagnostic::syntax(line, col, format!("unknown escape `\\{other}`")));
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_comparisons() {
        assert_eq!(
            toks("p->next == q"),
            vec![
                Tok::Ident("p".into()),
                Tok::Punct("->"),
                Tok::Ident("next".into()),
                Tok::Punct("=="),
                Tok::Ident("q".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn char_escapes() {
        assert_eq!(toks(r"'\0' 'Z'"), vec![Tok::Char('\0'), Tok::Char('Z'), Tok::Eof]);
    }

    #[test]
    fn positions_skip_comments_and_includes() {
        let t = tokenize("#include <x>\n// hi\n  int /* c */ x;").unwrap();
        assert_eq!((t[0].line, t[0].col), (3, 3));
        assert_eq!((t[1].line, t[1].col), (3, 15));
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("\"abc").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
    }
}
