use super::diag::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Identifier or dotted name (`android.content.Context`, `$r0`, `<init>`).
    Ident(String),
    Int(i64),
    Long(i64),
    Double(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Colon,
    ColonEq,
    Semi,
    Comma,
    Eq,
    At,
    Dot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Splits source text into tokens. Lexing never fails as a whole: bad
/// characters produce a diagnostic and are skipped.
pub fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let push = |toks: &mut Vec<Token>, tok| toks.push(Token { tok, line: tl, col: tc });

        // `<init>` and `<clinit>` are method names, not brackets.
        if c == '<' {
            let rest: String = chars[i..chars.len().min(i + 8)].iter().collect();
            let special = ["<init>", "<clinit>"].into_iter().find(|s| rest.starts_with(s));
            if let Some(s) = special {
                for _ in 0..s.len() {
                    bump!();
                }
                push(&mut toks, Tok::Ident(s.to_string()));
                continue;
            }
        }

        if ident_start(c) {
            let mut s = String::new();
            loop {
                while i < chars.len() && ident_char(chars[i]) {
                    s.push(chars[i]);
                    bump!();
                }
                // continue a dotted name only when another identifier follows
                if i + 1 < chars.len() && chars[i] == '.' && ident_start(chars[i + 1]) {
                    s.push('.');
                    bump!();
                } else {
                    break;
                }
            }
            push(&mut toks, Tok::Ident(s));
            continue;
        }

        if c.is_ascii_digit() || (c == '-' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit())
        {
            let mut s = String::new();
            s.push(c);
            bump!();
            let mut is_float = false;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_digit() {
                    s.push(d);
                } else if d == '.' && !is_float && i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    is_float = true;
                    s.push(d);
                } else if (d == 'e' || d == 'E')
                    && i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_digit() || chars[i + 1] == '-' || chars[i + 1] == '+')
                {
                    is_float = true;
                    s.push(d);
                    bump!();
                    s.push(chars[i]);
                } else {
                    break;
                }
                bump!();
            }
            let tok = if !is_float && i < chars.len() && (chars[i] == 'L' || chars[i] == 'l') {
                bump!();
                s.parse::<i64>().ok().map(Tok::Long)
            } else if is_float {
                s.parse::<f64>().ok().map(Tok::Double)
            } else {
                s.parse::<i64>().ok().map(Tok::Int)
            };
            match tok {
                Some(t) => push(&mut toks, t),
                None => diags.push(Diagnostic::syntax(tl, tc, format!("malformed number `{s}`"))),
            }
            continue;
        }

        if c == '"' {
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                let d = chars[i];
                if d == '"' {
                    bump!();
                    closed = true;
                    break;
                }
                if d == '\\' && i + 1 < chars.len() {
                    bump!();
                    let e = chars[i];
                    match e {
                        'n' => s.push('\n'),
                        't' => s.push('\t'),
                        'r' => s.push('\r'),
                        '"' => s.push('"'),
                        '\\' => s.push('\\'),
                        other => {
                            diags.push(Diagnostic::syntax(line, col, format!("unknown escape `\\{other}`")));
                            s.push(other);
                        }
                    }
                    bump!();
                    continue;
                }
                s.push(d);
                bump!();
            }
            if closed {
                push(&mut toks, Tok::Str(s));
            } else {
                diags.push(Diagnostic::syntax(tl, tc, "unterminated string literal"));
            }
            continue;
        }

        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '@' => Tok::At,
            '.' => Tok::Dot,
            ':' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    bump!();
                    bump!();
                    push(&mut toks, Tok::ColonEq);
                    continue;
                }
                Tok::Colon
            }
            other => {
                diags.push(Diagnostic::syntax(tl, tc, format!("unexpected character `{other}`")));
                bump!();
                continue;
            }
        };
        bump!();
        push(&mut toks, tok);
    }
    (toks, diags)
}
