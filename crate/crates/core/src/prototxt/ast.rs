//! Document model. Every token records the trivia (whitespace and `#`
//! comments) that precedes it, which is what makes serialization lossless.

/// Whitespace and comments preceding a token, verbatim.
pub type Trivia = String;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub entries: Vec<Entry>,
    /// Trivia after the last entry (trailing comments, final newline).
    pub trailing: Trivia,
}

impl Document {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            entry.write(&mut out);
        }
        out.push_str(&self.trailing);
        out
    }
}

/// One `name: value` field or one `name { ... }` message.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub leading: Trivia,
    pub name: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Scalar {
        /// Trivia between the name and `:`.
        pre_colon: Trivia,
        /// Trivia between `:` and the value token.
        pre_value: Trivia,
        value: ScalarValue,
    },
    Message {
        /// `Some(trivia)` when the optional `:` before `{` is present.
        colon: Option<Trivia>,
        /// Trivia before `{`.
        pre_brace: Trivia,
        entries: Vec<Entry>,
        /// Trivia before `}`.
        pre_close: Trivia,
    },
}

impl Entry {
    pub(crate) fn write(&self, out: &mut String) {
        out.push_str(&self.leading);
        out.push_str(&self.name);
        match &self.payload {
            Payload::Scalar {
                pre_colon,
                pre_value,
                value,
            } => {
                out.push_str(pre_colon);
                out.push(':');
                out.push_str(pre_value);
                out.push_str(value.lexeme());
            }
            Payload::Message {
                colon,
                pre_brace,
                entries,
                pre_close,
            } => {
                if let Some(trivia) = colon {
                    out.push_str(trivia);
                    out.push(':');
                }
                out.push_str(pre_brace);
                out.push('{');
                for entry in entries {
                    entry.write(out);
                }
                out.push_str(pre_close);
                out.push('}');
            }
        }
    }

    /// Child entries when this entry is a message.
    pub fn children(&self) -> Option<&[Entry]> {
        match &self.payload {
            Payload::Message { entries, .. } => Some(entries),
            Payload::Scalar { .. } => None,
        }
    }

    pub fn scalar(&self) -> Option<&ScalarValue> {
        match &self.payload {
            Payload::Scalar { value, .. } => Some(value),
            Payload::Message { .. } => None,
        }
    }
}

/// A scalar field value. The original lexeme is kept so untouched fields
/// round-trip exactly; the decoded value is used for matching and rewriting.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Integer { value: i64, lexeme: String },
    Real { value: f64, lexeme: String },
    /// Quoted string; `lexeme` includes the quotes, `value` is unescaped.
    Str { value: String, lexeme: String },
    /// Bare identifier such as `TRAIN`, `true`, `MAX`.
    Ident { lexeme: String },
}

impl ScalarValue {
    /// Integer with the minimal decimal lexeme.
    pub fn integer(value: i64) -> Self {
        ScalarValue::Integer {
            value,
            lexeme: value.to_string(),
        }
    }

    /// Quoted string; the lexeme is generated with `quote` as the delimiter.
    pub fn string(value: &str, quote: char) -> Self {
        ScalarValue::Str {
            value: value.to_string(),
            lexeme: escape_string(value, quote),
        }
    }

    pub fn lexeme(&self) -> &str {
        match self {
            ScalarValue::Integer { lexeme, .. }
            | ScalarValue::Real { lexeme, .. }
            | ScalarValue::Str { lexeme, .. }
            | ScalarValue::Ident { lexeme } => lexeme,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ScalarValue::Integer { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ScalarValue::Str { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Quote character of a string value, if this is one.
    pub fn quote(&self) -> Option<char> {
        match self {
            ScalarValue::Str { lexeme, .. } => lexeme.chars().next(),
            _ => None,
        }
    }
}

/// Quote and escape a string value for emission. Backslash, the delimiter,
/// and the common control characters are escaped; other control characters
/// use three-digit octal escapes.
pub fn escape_string(value: &str, quote: char) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push(quote);
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\{:03o}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}
