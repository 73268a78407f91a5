use super::PrototxtError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Integer { value: i64, lexeme: String },
    Real { value: f64, lexeme: String },
    Str { value: String, lexeme: String },
    Colon,
    LBrace,
    RBrace,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    /// Whitespace and comments preceding the token, verbatim.
    pub leading: String,
    pub line: usize,
    pub column: usize,
}

pub(crate) struct Lexer<'a> {
    src: &'a str,
    /// Byte offset of the next unread character.
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump_char(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> PrototxtError {
        PrototxtError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// Consume whitespace and `#` comments, returning them verbatim.
    fn take_trivia(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if c == ' ' || c == '\t' || c == '\r' || c == '\n' {
                self.bump_char();
            } else if c == '#' {
                while let Some(c) = self.peek_char() {
                    if c == '\n' {
                        break;
                    }
                    self.bump_char();
                }
            } else {
                break;
            }
        }
        self.src[start..self.pos].to_string()
    }

    pub fn next_token(&mut self) -> Result<Token, PrototxtError> {
        let leading = self.take_trivia();
        let (line, column) = (self.line, self.column);
        let token = |kind| Token {
            kind,
            leading: leading.clone(),
            line,
            column,
        };

        let Some(c) = self.peek_char() else {
            return Ok(token(TokenKind::Eof));
        };
        match c {
            ':' => {
                self.bump_char();
                Ok(token(TokenKind::Colon))
            }
            '{' => {
                self.bump_char();
                Ok(token(TokenKind::LBrace))
            }
            '}' => {
                self.bump_char();
                Ok(token(TokenKind::RBrace))
            }
            '"' | '\'' => {
                let kind = self.lex_string(line, column)?;
                Ok(token(kind))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while let Some(c) = self.peek_char() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.bump_char();
                    } else {
                        break;
                    }
                }
                Ok(token(TokenKind::Ident(self.src[start..self.pos].to_string())))
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let kind = self.lex_number(line, column)?;
                Ok(token(kind))
            }
            c => Err(self.error(line, column, format!("unexpected character `{c}`"))),
        }
    }

    fn lex_number(&mut self, line: usize, column: usize) -> Result<TokenKind, PrototxtError> {
        let start = self.pos;
        let mut digits = 0usize;
        let mut is_real = false;

        if matches!(self.peek_char(), Some('+') | Some('-')) {
            self.bump_char();
        }
        while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
            self.bump_char();
            digits += 1;
        }
        if self.peek_char() == Some('.') {
            is_real = true;
            self.bump_char();
            while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
                self.bump_char();
                digits += 1;
            }
        }
        if matches!(self.peek_char(), Some('e') | Some('E')) {
            is_real = true;
            self.bump_char();
            if matches!(self.peek_char(), Some('+') | Some('-')) {
                self.bump_char();
            }
            let mut exp_digits = 0usize;
            while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
                self.bump_char();
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(self.error(line, column, "malformed number: empty exponent"));
            }
        }
        if digits == 0 {
            return Err(self.error(line, column, "malformed number"));
        }

        let lexeme = self.src[start..self.pos].to_string();
        if !is_real {
            if let Ok(value) = lexeme.parse::<i64>() {
                return Ok(TokenKind::Integer { value, lexeme });
            }
            // falls through for integers beyond i64 range
        }
        let value = lexeme
            .parse::<f64>()
            .map_err(|_| self.error(line, column, format!("malformed number `{lexeme}`")))?;
        Ok(TokenKind::Real { value, lexeme })
    }

    fn lex_string(&mut self, line: usize, column: usize) -> Result<TokenKind, PrototxtError> {
        let start = self.pos;
        let quote = self.bump_char().expect("string start");
        let mut value = String::new();
        loop {
            match self.peek_char() {
                None => return Err(self.error(line, column, "unterminated string")),
                Some('\n') => return Err(self.error(line, column, "unterminated string")),
                Some('\\') => {
                    self.bump_char();
                    let Some(esc) = self.bump_char() else {
                        return Err(self.error(line, column, "unterminated string"));
                    };
                    match esc {
                        'n' => value.push('\n'),
                        't' => value.push('\t'),
                        'r' => value.push('\r'),
                        '0'..='7' => {
                            let mut code = esc as u32 - '0' as u32;
                            for _ in 0..2 {
                                match self.peek_char() {
                                    Some(d @ '0'..='7') => {
                                        self.bump_char();
                                        code = code * 8 + (d as u32 - '0' as u32);
                                    }
                                    _ => break,
                                }
                            }
                            value.push(char::from_u32(code).unwrap_or('\u{FFFD}'));
                        }
                        other => value.push(other),
                    }
                }
                Some(c) if c == quote => {
                    self.bump_char();
                    break;
                }
                Some(c) => {
                    self.bump_char();
                    value.push(c);
                }
            }
        }
        let lexeme = self.src[start..self.pos].to_string();
        Ok(TokenKind::Str { value, lexeme })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_tokens(src: &str) -> Vec<TokenKind> {
        let mut lexer = Lexer::new(src);
        let mut out = Vec::new();
        loop {
            let t = lexer.next_token().unwrap();
            let done = t.kind == TokenKind::Eof;
            out.push(t.kind);
            if done {
                return out;
            }
        }
    }

    #[test]
    fn lexes_field_line() {
        let toks = all_tokens("num_output: 81");
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("num_output".into()),
                TokenKind::Colon,
                TokenKind::Integer {
                    value: 81,
                    lexeme: "81".into()
                },
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn trivia_carries_comments() {
        let mut lexer = Lexer::new("# header\nname: 'x'");
        let t = lexer.next_token().unwrap();
        assert_eq!(t.leading, "# header\n");
        assert_eq!(t.kind, TokenKind::Ident("name".into()));
    }

    #[test]
    fn real_number_forms() {
        for (src, expected) in [("0.5", 0.5), ("1e-3", 1e-3), (".5", 0.5), ("100.", 100.0)] {
            match &all_tokens(src)[0] {
                TokenKind::Real { value, lexeme } => {
                    assert_eq!(*value, expected);
                    assert_eq!(lexeme, src);
                }
                other => panic!("{src} lexed as {other:?}"),
            }
        }
    }

    #[test]
    fn string_escapes_decode() {
        match &all_tokens(r#""a\n\t\\\"b\101""#)[0] {
            TokenKind::Str { value, .. } => assert_eq!(value, "a\n\t\\\"bA"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_quoted_string() {
        match &all_tokens(r#"'it\'s'"#)[0] {
            TokenKind::Str { value, lexeme } => {
                assert_eq!(value, "it's");
                assert_eq!(lexeme, r#"'it\'s'"#);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unterminated_string_is_positional_error() {
        let mut lexer = Lexer::new("s: \"abc");
        lexer.next_token().unwrap();
        lexer.next_token().unwrap();
        match lexer.next_token().unwrap_err() {
            PrototxtError::Syntax { line, column, .. } => {
                assert_eq!(line, 1);
                assert_eq!(column, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stray_byte_is_error() {
        let mut lexer = Lexer::new("@");
        assert!(lexer.next_token().is_err());
    }
}
