//! The run configuration file: a flat YAML subset carrying `CAT_IDS` and
//! run options.
//!
//! Only `KEY: scalar` and `KEY: [v1, v2, ...]` lines are supported, plus `#`
//! comments and blank lines. That is the shape the training configs use; a
//! full YAML engine would add nothing but ambiguity here. Unrecognized keys
//! are preserved so they can be echoed back verbatim.

use thiserror::Error;

pub const KEY_CAT_IDS: &str = "CAT_IDS";
pub const KEY_SEED: &str = "SEED";
pub const KEY_DEMO_COUNT: &str = "DEMO_COUNT";

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_DEMO_COUNT: usize = 5;

/// Parsed configuration. `cat_ids` keeps the user's file order; sorting for
/// label assignment happens later in [`crate::subset::make_category_map`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetConfig {
    pub cat_ids: Vec<u64>,
    pub seed: u64,
    pub demo_count: usize,
    /// Unrecognized keys with their raw scalar values, in file order.
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error: missing required keyword `{}`", KEY_CAT_IDS)]
    MissingCatIds,
    #[error("config error on line {line}: `{}` list is empty", KEY_CAT_IDS)]
    EmptyCatIds { line: usize },
    #[error("config error on line {line}: duplicate category id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("config error on line {line}: `{value}` is not a positive integer")]
    NotAnInteger { line: usize, value: String },
    #[error("config error on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("config error on line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
}

fn strip_comment(line: &str) -> &str {
    // `#` starts a comment at line start or after whitespace.
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1] == b' ' || bytes[i - 1] == b'\t') {
            return &line[..i];
        }
    }
    line
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_u64(raw: &str, line: usize) -> Result<u64, ConfigError> {
    raw.trim().parse::<u64>().map_err(|_| ConfigError::NotAnInteger {
        line,
        value: raw.trim().to_string(),
    })
}

fn parse_id_list(raw: &str, line: usize) -> Result<Vec<u64>, ConfigError> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| ConfigError::Malformed {
            line,
            message: format!("expected an inline list like `[1, 2]`, got `{raw}`"),
        })?;
    let inner = inner.trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    let mut ids = Vec::new();
    for part in inner.split(',') {
        let id = parse_u64(part, line)?;
        if id < 1 {
            return Err(ConfigError::NotAnInteger {
                line,
                value: part.trim().to_string(),
            });
        }
        ids.push(id);
    }
    Ok(ids)
}

/// Parse a configuration file.
///
/// Errors are positioned by 1-based line number; `CAT_IDS` must be present,
/// non-empty, and duplicate-free.
pub fn parse_config(text: &str) -> Result<SubsetConfig, ConfigError> {
    let mut cat_ids: Option<(usize, Vec<u64>)> = None;
    let mut seed = DEFAULT_SEED;
    let mut demo_count = DEFAULT_DEMO_COUNT;
    let mut extra: Vec<(String, String)> = Vec::new();
    let mut seen_keys: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            return Err(ConfigError::Malformed {
                line: line_no,
                message: "nested structures are not supported".into(),
            });
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(ConfigError::Malformed {
                line: line_no,
                message: format!("expected `KEY: value`, got `{}`", line.trim()),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !is_key(key) {
            return Err(ConfigError::Malformed {
                line: line_no,
                message: format!("`{key}` is not a valid key"),
            });
        }
        if seen_keys.iter().any(|k| k == key) {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        seen_keys.push(key.to_string());

        match key {
            KEY_CAT_IDS => {
                let ids = parse_id_list(value, line_no)?;
                let mut seen = std::collections::BTreeSet::new();
                for &id in &ids {
                    if !seen.insert(id) {
                        return Err(ConfigError::DuplicateId { line: line_no, id });
                    }
                }
                cat_ids = Some((line_no, ids));
            }
            KEY_SEED => seed = parse_u64(value, line_no)?,
            KEY_DEMO_COUNT => {
                demo_count = parse_u64(value, line_no)? as usize;
                if demo_count < 1 {
                    return Err(ConfigError::Malformed {
                        line: line_no,
                        message: format!("`{KEY_DEMO_COUNT}` must be >= 1"),
                    });
                }
            }
            _ => extra.push((key.to_string(), value.to_string())),
        }
    }

    match cat_ids {
        None => Err(ConfigError::MissingCatIds),
        Some((line, ids)) if ids.is_empty() => Err(ConfigError::EmptyCatIds { line }),
        Some((_, cat_ids)) => Ok(SubsetConfig {
            cat_ids,
            seed,
            demo_count,
            extra,
        }),
    }
}

/// Render a config back to text. `parse_config(render_config(c)) == c` for
/// every valid config.
pub fn render_config(cfg: &SubsetConfig) -> String {
    let ids: Vec<String> = cfg.cat_ids.iter().map(|id| id.to_string()).collect();
    let mut out = format!("{KEY_CAT_IDS}: [{}]\n", ids.join(", "));
    out.push_str(&format!("{KEY_SEED}: {}\n", cfg.seed));
    out.push_str(&format!("{KEY_DEMO_COUNT}: {}\n", cfg.demo_count));
    for (k, v) in &cfg.extra {
        out.push_str(&format!("{k}: {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_list() {
        let cfg = parse_config("CAT_IDS: [7, 11]\n").unwrap();
        assert_eq!(cfg.cat_ids, vec![7, 11]);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.demo_count, 5);
        assert!(cfg.extra.is_empty());
    }

    #[test]
    fn file_order_is_kept() {
        let cfg = parse_config("CAT_IDS: [11, 7]\n").unwrap();
        assert_eq!(cfg.cat_ids, vec![11, 7]);
    }

    #[test]
    fn empty_list_is_an_error() {
        match parse_config("CAT_IDS: []\n") {
            Err(ConfigError::EmptyCatIds { line }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_keyword_is_an_error() {
        assert!(matches!(
            parse_config("SEED: 3\n"),
            Err(ConfigError::MissingCatIds)
        ));
        let msg = parse_config("").unwrap_err().to_string();
        assert!(msg.contains("CAT_IDS"), "{msg}");
    }

    #[test]
    fn duplicate_id_is_an_error() {
        assert!(matches!(
            parse_config("CAT_IDS: [7, 7]\n"),
            Err(ConfigError::DuplicateId { id: 7, .. })
        ));
    }

    #[test]
    fn non_integer_reports_line_number() {
        match parse_config("# header\nCAT_IDS: [7, eleven]\n") {
            Err(ConfigError::NotAnInteger { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "eleven");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_preserved() {
        let cfg = parse_config("CAT_IDS: [7]\nEXP_DIR: foo\n").unwrap();
        assert_eq!(cfg.cat_ids, vec![7]);
        assert_eq!(cfg.extra, vec![("EXP_DIR".to_string(), "foo".to_string())]);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = parse_config("# choose ids\n\nCAT_IDS: [1, 3] # person, car\nSEED: 9\n").unwrap();
        assert_eq!(cfg.cat_ids, vec![1, 3]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn nested_lines_are_rejected() {
        let err = parse_config("CAT_IDS: [1]\nTRAIN:\n  HAS_RPN: True\n").unwrap_err();
        match err {
            ConfigError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_cat_ids_is_rejected() {
        assert!(matches!(
            parse_config("CAT_IDS: 7\n"),
            Err(ConfigError::Malformed { .. })
        ));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        assert!(matches!(
            parse_config("CAT_IDS: [1]\nCAT_IDS: [2]\n"),
            Err(ConfigError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn render_round_trips() {
        let cfg = SubsetConfig {
            cat_ids: vec![11, 7, 3],
            seed: 42,
            demo_count: 2,
            extra: vec![("EXP_DIR".into(), "runs/exp1".into())],
        };
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }
}
