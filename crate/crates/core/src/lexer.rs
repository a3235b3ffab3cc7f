//! Tokenizer for the supported Verilog subset.

use crate::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsized decimal number, e.g. `42`.
    Number(u64),
    /// Sized literal `8'hff`: (width, value).
    Sized(u32, u64),
    Keyword(&'static str),
    /// `$signed` / `$unsigned`.
    System(String),
    // punctuation / operators
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    At,
    Question,
    Assign, // =
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Caret,
    Tilde,
    Bang,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    EqEq,
    EqEqEq,
    NotEq,
    NotEqEq,
    Lt,
    Le, // also the non-blocking assign token
    Gt,
    Ge,
    Shl,
    Shr,
}

pub const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "wire",
    "reg",
    "signed",
    "assign",
    "always",
    "initial",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "endcase",
    "default",
    "for",
    "posedge",
    "negedge",
    "or",
];

/// Recognized Verilog keywords that are outside the subset. Reported as
/// UnsupportedConstruct rather than a generic syntax error.
pub const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "generate",
    "endgenerate",
    "function",
    "endfunction",
    "task",
    "endtask",
    "while",
    "repeat",
    "forever",
    "wait",
    "casez",
    "casex",
    "inout",
    "integer",
    "real",
    "genvar",
    "parameter",
    "localparam",
    "fork",
    "join",
    "specify",
    "endspecify",
    "primitive",
    "endprimitive",
];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            tokens.push(Token {
                tok: $tok,
                line,
                col,
                end_line: line,
                end_col: col + ($len as u32) - 1,
            });
            i += $len;
            col += $len as u32;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if i + 1 < chars.len() && chars[i + 1] == '/' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if i + 1 < chars.len() && chars[i + 1] == '*' => {
                i += 2;
                col += 2;
                loop {
                    if i + 1 >= chars.len() {
                        return Err(ParseError::syntax(line, col, "closing */"));
                    }
                    if chars[i] == '*' && chars[i + 1] == '/' {
                        i += 2;
                        col += 2;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
            }
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '[' => push!(Tok::LBracket, 1),
            ']' => push!(Tok::RBracket, 1),
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            ';' => push!(Tok::Semi, 1),
            ':' => push!(Tok::Colon, 1),
            ',' => push!(Tok::Comma, 1),
            '@' => push!(Tok::At, 1),
            '?' => push!(Tok::Question, 1),
            '+' => push!(Tok::Plus, 1),
            '-' => push!(Tok::Minus, 1),
            '*' => push!(Tok::Star, 1),
            '/' => push!(Tok::Slash, 1),
            '%' => push!(Tok::Percent, 1),
            '^' => push!(Tok::Caret, 1),
            '~' => push!(Tok::Tilde, 1),
            '&' => {
                if i + 1 < chars.len() && chars[i + 1] == '&' {
                    push!(Tok::AmpAmp, 2)
                } else {
                    push!(Tok::Amp, 1)
                }
            }
            '|' => {
                if i + 1 < chars.len() && chars[i + 1] == '|' {
                    push!(Tok::PipePipe, 2)
                } else {
                    push!(Tok::Pipe, 1)
                }
            }
            '=' => {
                if i + 2 < chars.len() && chars[i + 1] == '=' && chars[i + 2] == '=' {
                    push!(Tok::EqEqEq, 3)
                } else if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push!(Tok::EqEq, 2)
                } else {
                    push!(Tok::Assign, 1)
                }
            }
            '!' => {
                if i + 2 < chars.len() && chars[i + 1] == '=' && chars[i + 2] == '=' {
                    push!(Tok::NotEqEq, 3)
                } else if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push!(Tok::NotEq, 2)
                } else {
                    push!(Tok::Bang, 1)
                }
            }
            '<' => {
                if i + 1 < chars.len() && chars[i + 1] == '<' {
                    push!(Tok::Shl, 2)
                } else if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push!(Tok::Le, 2)
                } else {
                    push!(Tok::Lt, 1)
                }
            }
            '>' => {
                if i + 2 < chars.len() && chars[i + 1] == '>' && chars[i + 2] == '>' {
                    return Err(ParseError::unsupported(">>>", line, col));
                }
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    push!(Tok::Shr, 2)
                } else if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push!(Tok::Ge, 2)
                } else {
                    push!(Tok::Gt, 1)
                }
            }
            '$' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let len = i - start;
                i = start;
                if name == "$signed" || name == "$unsigned" {
                    push!(Tok::System(name), len);
                } else {
                    return Err(ParseError::unsupported(&name, line, col));
                }
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                // Peek for a based literal: <width>'<base><digits>
                let mut j = i;
                while j < chars.len() && (chars[j] == ' ' || chars[j] == '\t') {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '\'' {
                    let width: u32 = digits
                        .parse()
                        .map_err(|_| ParseError::syntax(line, col, "literal width"))?;
                    if width == 0 || width > 64 {
                        return Err(ParseError::syntax(line, col, "literal width in 1..=64"));
                    }
                    j += 1;
                    if j >= chars.len() {
                        return Err(ParseError::syntax(line, col, "literal base"));
                    }
                    let base_c = chars[j].to_ascii_lowercase();
                    if base_c == 's' {
                        return Err(ParseError::unsupported("signed literal", line, col));
                    }
                    let radix = match base_c {
                        'h' => 16,
                        'd' => 10,
                        'b' => 2,
                        'o' => 8,
                        _ => return Err(ParseError::syntax(line, col, "literal base h/d/b/o")),
                    };
                    j += 1;
                    let vstart = j;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    let vdigits: String = chars[vstart..j].iter().filter(|c| **c != '_').collect();
                    if vdigits.is_empty() {
                        return Err(ParseError::syntax(line, col, "literal digits"));
                    }
                    if vdigits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z')) {
                        return Err(ParseError::unsupported("x/z literal", line, col));
                    }
                    let value = u64::from_str_radix(&vdigits, radix)
                        .map_err(|_| ParseError::syntax(line, col, "literal value"))?;
                    let masked = if width == 64 {
                        value
                    } else {
                        value & ((1u64 << width) - 1)
                    };
                    let len = j - start;
                    i = start;
                    push!(Tok::Sized(width, masked), len);
                } else {
                    let value: u64 = digits
                        .parse()
                        .map_err(|_| ParseError::syntax(line, col, "decimal literal"))?;
                    let len = i - start;
                    i = start;
                    push!(Tok::Number(value), len);
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let len = i - start;
                i = start;
                if let Some(kw) = KEYWORDS.iter().find(|k| **k == word) {
                    push!(Tok::Keyword(kw), len);
                } else if UNSUPPORTED_KEYWORDS.contains(&word.as_str()) {
                    return Err(ParseError::unsupported(&word, line, col));
                } else {
                    push!(Tok::Ident(word), len);
                }
            }
            _ => return Err(ParseError::syntax(line, col, "token")),
        }
    }
    Ok(tokens)
}
