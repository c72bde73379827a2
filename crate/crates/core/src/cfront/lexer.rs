use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Int,
    Float,
    Char,
    Str,
    Punct,
    /// A whole preprocessor line, e.g. `#include <stdint.h>`.
    Directive,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub line: u32,
}

impl Token {
    pub fn is(&self, s: &str) -> bool {
        matches!(self.kind, TokKind::Punct | TokKind::Ident) && self.text == s
    }
}

const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "(", ")", "[", "]", "{", "}", ";", ",", ".", "?",
    ":", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~", "<", ">", "=",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut at_line_start = true;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let open_line = line;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::Syntax {
                        line: open_line,
                        message: "unterminated comment".into(),
                    });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == b'#' {
            if !at_line_start {
                return Err(ParseError::Syntax { line, message: "stray '#'".into() });
            }
            while i < bytes.len() && bytes[i] != b'\n' {
                if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                    return Err(ParseError::Unsupported {
                        construct: "multi-line preprocessor directive".into(),
                        line,
                    });
                }
                i += 1;
            }
            toks.push(Token {
                kind: TokKind::Directive,
                text: src[start..i].trim_end().to_string(),
                start,
                end: start + src[start..i].trim_end().len(),
                line,
            });
            continue;
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(tok(TokKind::Ident, src, start, i, line));
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let (end, is_float) = scan_number(bytes, i);
            i = end;
            let kind = if is_float { TokKind::Float } else { TokKind::Int };
            toks.push(tok(kind, src, start, i, line));
            continue;
        }
        if c == b'\'' || c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'\n' {
                    break;
                }
                i += 1;
            }
            if i >= bytes.len() || bytes[i] != c {
                return Err(ParseError::Syntax { line, message: "unterminated literal".into() });
            }
            i += 1;
            let kind = if c == b'\'' { TokKind::Char } else { TokKind::Str };
            toks.push(tok(kind, src, start, i, line));
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                toks.push(tok(TokKind::Punct, src, start, i, line));
            }
            None => {
                return Err(ParseError::Syntax {
                    line,
                    message: format!("unexpected character {:?}", c as char),
                })
            }
        }
    }
    // end of input is reported on the last line that holds a token
    let line = toks.last().map_or(line, |t| t.line);
    toks.push(Token { kind: TokKind::Eof, text: String::new(), start: src.len(), end: src.len(), line });
    Ok(toks)
}

fn tok(kind: TokKind, src: &str, start: usize, end: usize, line: u32) -> Token {
    Token { kind, text: src[start..end].to_string(), start, end, line }
}

fn scan_number(b: &[u8], mut i: usize) -> (usize, bool) {
    let mut is_float = false;
    if b[i] == b'0' && matches!(b.get(i + 1), Some(b'x' | b'X')) {
        i += 2;
        while i < b.len() && b[i].is_ascii_hexdigit() {
            i += 1;
        }
        if i < b.len() && (b[i] == b'.' || b[i] == b'p' || b[i] == b'P') {
            is_float = true;
            while i < b.len()
                && (b[i].is_ascii_hexdigit() || matches!(b[i], b'.' | b'p' | b'P'))
            {
                if matches!(b[i], b'p' | b'P') && matches!(b.get(i + 1), Some(b'+' | b'-')) {
                    i += 1;
                }
                i += 1;
            }
        }
    } else {
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i < b.len() && b[i] == b'.' {
            is_float = true;
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < b.len() && matches!(b[i], b'e' | b'E') {
            is_float = true;
            i += 1;
            if i < b.len() && matches!(b[i], b'+' | b'-') {
                i += 1;
            }
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    while i < b.len() && matches!(b[i], b'u' | b'U' | b'l' | b'L' | b'f' | b'F') {
        i += 1;
    }
    (i, is_float)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_lines() {
        let toks = tokenize("int x = 0x1fU;\n// c\n/* a\n b */ x <<= 2.5e3f;").unwrap();
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["int", "x", "=", "0x1fU", ";", "x", "<<=", "2.5e3f", ";", ""]);
        assert_eq!(toks[5].line, 4);
        assert_eq!(toks[7].kind, TokKind::Float);
    }

    #[test]
    fn directive_line() {
        let toks = tokenize("#include <stdint.h>\nint a;").unwrap();
        assert_eq!(toks[0].kind, TokKind::Directive);
        assert_eq!(toks[0].text, "#include <stdint.h>");
        assert_eq!(toks[1].line, 2);
    }

    #[test]
    fn unterminated_comment_is_error() {
        assert!(tokenize("int a; /* oops").is_err());
    }
}
