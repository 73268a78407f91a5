use super::ast::{Document, Entry, Payload, ScalarValue};
use super::lexer::{Lexer, Token, TokenKind};
use super::PrototxtError;

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(src),
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<&Token, PrototxtError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn bump(&mut self) -> Result<Token, PrototxtError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn parse_document(&mut self) -> Result<Document, PrototxtError> {
        let mut entries = Vec::new();
        loop {
            let tok = self.peek()?;
            match &tok.kind {
                TokenKind::Eof => {
                    let tok = self.bump()?;
                    return Ok(Document {
                        entries,
                        trailing: tok.leading,
                    });
                }
                TokenKind::Ident(_) => entries.push(self.parse_entry()?),
                TokenKind::RBrace => {
                    return Err(syntax(tok, "unexpected `}` outside any message"));
                }
                _ => return Err(syntax(tok, "expected a field name")),
            }
        }
    }

    fn parse_entry(&mut self) -> Result<Entry, PrototxtError> {
        let name_tok = self.bump()?;
        let TokenKind::Ident(name) = name_tok.kind else {
            unreachable!("caller checked for an identifier");
        };
        let next = self.bump()?;
        let payload = match next.kind {
            TokenKind::Colon => {
                let value_tok = self.bump()?;
                match value_tok.kind {
                    TokenKind::LBrace => self.parse_message_body(
                        Some(next.leading),
                        value_tok.leading,
                        &name,
                        name_tok.line,
                        name_tok.column,
                    )?,
                    TokenKind::Integer { value, lexeme } => Payload::Scalar {
                        pre_colon: next.leading,
                        pre_value: value_tok.leading,
                        value: ScalarValue::Integer { value, lexeme },
                    },
                    TokenKind::Real { value, lexeme } => Payload::Scalar {
                        pre_colon: next.leading,
                        pre_value: value_tok.leading,
                        value: ScalarValue::Real { value, lexeme },
                    },
                    TokenKind::Str { value, lexeme } => Payload::Scalar {
                        pre_colon: next.leading,
                        pre_value: value_tok.leading,
                        value: ScalarValue::Str { value, lexeme },
                    },
                    TokenKind::Ident(lexeme) => Payload::Scalar {
                        pre_colon: next.leading,
                        pre_value: value_tok.leading,
                        value: ScalarValue::Ident { lexeme },
                    },
                    _ => {
                        return Err(syntax(
                            &value_tok,
                            format!("expected a value after `{name}:`"),
                        ))
                    }
                }
            }
            TokenKind::LBrace => {
                self.parse_message_body(None, next.leading, &name, name_tok.line, name_tok.column)?
            }
            _ => {
                return Err(syntax(
                    &next,
                    format!("expected `:` or `{{` after field name `{name}`"),
                ))
            }
        };
        Ok(Entry {
            leading: name_tok.leading,
            name,
            payload,
        })
    }

    fn parse_message_body(
        &mut self,
        colon: Option<String>,
        pre_brace: String,
        name: &str,
        open_line: usize,
        open_column: usize,
    ) -> Result<Payload, PrototxtError> {
        let mut entries = Vec::new();
        loop {
            let tok = self.peek()?;
            match &tok.kind {
                TokenKind::RBrace => {
                    let tok = self.bump()?;
                    return Ok(Payload::Message {
                        colon,
                        pre_brace,
                        entries,
                        pre_close: tok.leading,
                    });
                }
                TokenKind::Ident(_) => entries.push(self.parse_entry()?),
                TokenKind::Eof => {
                    return Err(PrototxtError::Syntax {
                        line: open_line,
                        column: open_column,
                        message: format!("unclosed message `{name}` (missing `}}`)"),
                    });
                }
                _ => return Err(syntax(tok, format!("expected a field or `}}` in `{name}`"))),
            }
        }
    }
}

fn syntax(tok: &Token, message: impl Into<String>) -> PrototxtError {
    PrototxtError::Syntax {
        line: tok.line,
        column: tok.column,
        message: message.into(),
    }
}

/// Parse protobuf text format into a lossless [`Document`].
pub fn parse_prototxt(src: &str) -> Result<Document, PrototxtError> {
    Parser::new(src).parse_document()
}

/// Like [`parse_prototxt`] but validates UTF-8 first, so arbitrary byte
/// input yields an error instead of a panic.
pub fn parse_prototxt_bytes(bytes: &[u8]) -> Result<Document, PrototxtError> {
    let src = std::str::from_utf8(bytes).map_err(|e| PrototxtError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    parse_prototxt(src)
}

#[cfg(test)]
mod tests {
    use super::super::serialize_prototxt;
    use super::*;

    #[test]
    fn smallest_document() {
        let doc = parse_prototxt("name: \"VGG_CNN_M_1024\"").unwrap();
        assert_eq!(doc.entries.len(), 1);
        let e = &doc.entries[0];
        assert_eq!(e.name, "name");
        assert_eq!(e.scalar().unwrap().as_str(), Some("VGG_CNN_M_1024"));
    }

    #[test]
    fn nested_message_matches_hand_built_tree() {
        let src = "layer { name: \"cls_score\" inner_product_param { num_output: 81 } }";
        let doc = parse_prototxt(src).unwrap();
        let expected = Document {
            entries: vec![Entry {
                leading: String::new(),
                name: "layer".into(),
                payload: Payload::Message {
                    colon: None,
                    pre_brace: " ".into(),
                    entries: vec![
                        Entry {
                            leading: " ".into(),
                            name: "name".into(),
                            payload: Payload::Scalar {
                                pre_colon: String::new(),
                                pre_value: " ".into(),
                                value: ScalarValue::Str {
                                    value: "cls_score".into(),
                                    lexeme: "\"cls_score\"".into(),
                                },
                            },
                        },
                        Entry {
                            leading: " ".into(),
                            name: "inner_product_param".into(),
                            payload: Payload::Message {
                                colon: None,
                                pre_brace: " ".into(),
                                entries: vec![Entry {
                                    leading: " ".into(),
                                    name: "num_output".into(),
                                    payload: Payload::Scalar {
                                        pre_colon: String::new(),
                                        pre_value: " ".into(),
                                        value: ScalarValue::Integer {
                                            value: 81,
                                            lexeme: "81".into(),
                                        },
                                    },
                                }],
                                pre_close: " ".into(),
                            },
                        },
                    ],
                    pre_close: " ".into(),
                },
            }],
            trailing: String::new(),
        };
        assert_eq!(doc, expected);
    }

    #[test]
    fn unclosed_message_reports_opening_line() {
        match parse_prototxt("layer {").unwrap_err() {
            PrototxtError::Syntax { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("layer"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stray_closing_brace_is_error() {
        assert!(parse_prototxt("}").is_err());
        assert!(parse_prototxt("a: 1\n}").is_err());
    }

    #[test]
    fn empty_document_round_trips() {
        let doc = parse_prototxt("").unwrap();
        assert!(doc.entries.is_empty());
        assert_eq!(serialize_prototxt(&doc), "");
    }

    #[test]
    fn colon_before_brace_accepted() {
        let src = "param : {\n  x: 1\n}\n";
        let doc = parse_prototxt(src).unwrap();
        assert_eq!(serialize_prototxt(&doc), src);
        match &doc.entries[0].payload {
            Payload::Message { colon, .. } => assert_eq!(colon.as_deref(), Some(" ")),
            _ => panic!("expected message"),
        }
    }

    #[test]
    fn repeated_fields_keep_order() {
        let doc = parse_prototxt("top: 'a'\ntop: 'b'\n").unwrap();
        let names: Vec<_> = doc
            .entries
            .iter()
            .map(|e| e.scalar().unwrap().as_str().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn byte_identical_round_trip_with_comments() {
        let src = "\
# Network head
layer {
  name: \"cls_score\"   # classification output
  type: \"InnerProduct\"
  inner_product_param {
    num_output: 81
  }
}
# trailing note
";
        let doc = parse_prototxt(src).unwrap();
        assert_eq!(serialize_prototxt(&doc), src);
        let again = parse_prototxt(&serialize_prototxt(&doc)).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn enum_and_bool_values() {
        let src = "phase: TRAIN\nbias_term: false\n";
        let doc = parse_prototxt(src).unwrap();
        assert!(matches!(
            doc.entries[0].scalar().unwrap(),
            ScalarValue::Ident { .. }
        ));
        assert_eq!(serialize_prototxt(&doc), src);
    }

    #[test]
    fn invalid_utf8_is_positioned_error() {
        let bytes = b"name: \"a\xff\"";
        match parse_prototxt_bytes(bytes).unwrap_err() {
            PrototxtError::InvalidUtf8 { offset } => assert_eq!(offset, 8),
            other => panic!("{other:?}"),
        }
    }
}
