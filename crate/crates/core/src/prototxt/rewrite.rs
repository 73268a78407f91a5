//! Category-count rewrites for Faster R-CNN style network definitions.
//!
//! Three kinds of sites depend on the number of selected categories K:
//!   * `cls_score` classification head: `num_output = K + 1` (background
//!     takes one slot),
//!   * `bbox_pred` regression head: `num_output = 4 * (K + 1)`,
//!   * scripted data layers: the `'num_classes': N` token inside
//!     `python_param.param_str`.
//!
//! Layers are matched by their `name` field, not by position, and the
//! `param_str` edit is a token-level substring replacement that leaves every
//! other character of the string alone.

use super::ast::{escape_string, Document, Entry, Payload, ScalarValue};
use super::PrototxtError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RewriteRule {
    ClsScoreNumOutput,
    BboxPredNumOutput,
    ParamStrNumClasses,
}

impl RewriteRule {
    /// Stable key used in machine-readable reports.
    pub fn key(&self) -> &'static str {
        match self {
            RewriteRule::ClsScoreNumOutput => "cls_score",
            RewriteRule::BboxPredNumOutput => "bbox_pred",
            RewriteRule::ParamStrNumClasses => "param_str",
        }
    }
}

/// One planned edit: the entry at `path` (entry indices from the document
/// root) gets `new_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSite {
    pub rule: RewriteRule,
    pub path: Vec<usize>,
    pub new_value: ScalarValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewritePlan {
    pub k: usize,
    pub sites: Vec<PlannedSite>,
}

impl RewritePlan {
    pub fn count(&self, rule: RewriteRule) -> usize {
        self.sites.iter().filter(|s| s.rule == rule).count()
    }
}

/// Applied-site counts per rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RewriteCounts {
    pub cls_score: usize,
    pub bbox_pred: usize,
    pub param_str: usize,
}

impl RewriteCounts {
    pub fn total(&self) -> usize {
        self.cls_score + self.bbox_pred + self.param_str
    }
}

const TOKEN: &str = "'num_classes':";

/// Replace the integer following every `'num_classes':` token. Returns
/// `None` when the token (followed by an integer) does not occur.
fn replace_num_classes(s: &str, new_count: i64) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    let mut found = false;
    while let Some(idx) = rest.find(TOKEN) {
        let after = idx + TOKEN.len();
        out.push_str(&rest[..after]);
        rest = &rest[after..];
        let ws = rest.len() - rest.trim_start_matches([' ', '\t']).len();
        let digits = rest[ws..]
            .bytes()
            .take_while(|b| b.is_ascii_digit())
            .count();
        if digits == 0 {
            continue;
        }
        found = true;
        out.push_str(&rest[..ws]);
        out.push_str(&new_count.to_string());
        rest = &rest[ws + digits..];
    }
    if !found {
        return None;
    }
    out.push_str(rest);
    Some(out)
}

/// Extract the integer after every `'num_classes':` token.
fn extract_num_classes(s: &str) -> Vec<i64> {
    let mut counts = Vec::new();
    let mut rest = s;
    while let Some(idx) = rest.find(TOKEN) {
        rest = &rest[idx + TOKEN.len()..];
        let trimmed = rest.trim_start_matches([' ', '\t']);
        let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
        if let Ok(v) = digits.parse::<i64>() {
            counts.push(v);
        }
    }
    counts
}

/// The string value of a direct child scalar field, e.g. a layer's `name`.
fn child_str<'e>(entry: &'e Entry, field: &str) -> Option<&'e str> {
    entry
        .children()?
        .iter()
        .find(|c| c.name == field)
        .and_then(|c| c.scalar())
        .and_then(|v| v.as_str())
}

fn walk<'d>(
    entries: &'d [Entry],
    path: &mut Vec<usize>,
    visit: &mut impl FnMut(&'d Entry, &[usize]),
) {
    for (i, entry) in entries.iter().enumerate() {
        path.push(i);
        visit(entry, path);
        if let Some(children) = entry.children() {
            walk(children, path, visit);
        }
        path.pop();
    }
}

/// Locate every rewrite site for K selected categories. Planning never
/// fails; an empty plan surfaces as an error at apply time.
pub fn plan_rewrites(doc: &Document, k: usize) -> RewritePlan {
    assert!(k >= 1, "k must be at least 1");
    let classes = (k + 1) as i64;
    let mut sites = Vec::new();

    let mut path = Vec::new();
    walk(&doc.entries, &mut path, &mut |entry, path| {
        if entry.name == "layer" {
            let Some(layer_name) = child_str(entry, "name") else {
                return;
            };
            let rule = match layer_name {
                "cls_score" => Some((RewriteRule::ClsScoreNumOutput, classes)),
                "bbox_pred" => Some((RewriteRule::BboxPredNumOutput, 4 * classes)),
                _ => None,
            };
            let Some((rule, target)) = rule else { return };
            let children = entry.children().expect("layer is a message");
            for (i, child) in children.iter().enumerate() {
                if child.name != "inner_product_param" {
                    continue;
                }
                let Some(grandchildren) = child.children() else {
                    continue;
                };
                for (j, field) in grandchildren.iter().enumerate() {
                    if field.name == "num_output" && field.scalar().is_some() {
                        let mut site_path = path.to_vec();
                        site_path.push(i);
                        site_path.push(j);
                        sites.push(PlannedSite {
                            rule,
                            path: site_path,
                            new_value: ScalarValue::integer(target),
                        });
                    }
                }
            }
        } else if entry.name == "python_param" {
            let Some(children) = entry.children() else {
                return;
            };
            for (i, child) in children.iter().enumerate() {
                let Some(value) = child.scalar() else { continue };
                if child.name != "param_str" {
                    continue;
                }
                let Some(current) = value.as_str() else { continue };
                let Some(new_value) = replace_num_classes(current, classes) else {
                    continue;
                };
                let quote = value.quote().unwrap_or('"');
                // Patch the raw lexeme when the token is visible in it, so
                // the original escaping style survives; otherwise re-escape.
                let interior = &value.lexeme()[1..value.lexeme().len() - 1];
                let lexeme = match replace_num_classes(interior, classes) {
                    Some(patched) => format!("{quote}{patched}{quote}"),
                    None => escape_string(&new_value, quote),
                };
                let mut site_path = path.to_vec();
                site_path.push(i);
                sites.push(PlannedSite {
                    rule: RewriteRule::ParamStrNumClasses,
                    path: site_path,
                    new_value: ScalarValue::Str {
                        value: new_value,
                        lexeme,
                    },
                });
            }
        }
    });

    RewritePlan { k, sites }
}

fn entry_at_mut<'d>(doc: &'d mut Document, path: &[usize]) -> Option<&'d mut Entry> {
    let (&first, rest) = path.split_first()?;
    let mut entry = doc.entries.get_mut(first)?;
    for &idx in rest {
        let Payload::Message { entries, .. } = &mut entry.payload else {
            return None;
        };
        entry = entries.get_mut(idx)?;
    }
    Some(entry)
}

/// Execute a plan produced from `doc`. A plan with no sites is the error
/// case: silently rewriting nothing is exactly the failure mode the
/// automatic rewrite exists to remove.
pub fn apply_rewrites(
    doc: &Document,
    plan: &RewritePlan,
) -> Result<(Document, RewriteCounts), PrototxtError> {
    if plan.sites.is_empty() {
        return Err(PrototxtError::NoRewriteTargets);
    }
    let mut out = doc.clone();
    let mut counts = RewriteCounts::default();
    for site in &plan.sites {
        let entry = entry_at_mut(&mut out, &site.path).expect("plan does not match document");
        let Payload::Scalar { value, .. } = &mut entry.payload else {
            panic!("plan does not match document: {:?} is not a scalar", site.path);
        };
        *value = site.new_value.clone();
        match site.rule {
            RewriteRule::ClsScoreNumOutput => counts.cls_score += 1,
            RewriteRule::BboxPredNumOutput => counts.bbox_pred += 1,
            RewriteRule::ParamStrNumClasses => counts.param_str += 1,
        }
    }
    Ok((out, counts))
}

/// Values found by [`verify_consistency`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    /// `num_output` of every `cls_score` layer (all equal).
    pub cls_score_outputs: Vec<i64>,
    pub bbox_pred_outputs: Vec<i64>,
    pub param_str_class_counts: Vec<i64>,
}

impl VerifyReport {
    /// The common class count (K + 1).
    pub fn num_classes(&self) -> i64 {
        self.cls_score_outputs[0]
    }
}

/// Check the cross-site relationship: every `bbox_pred` output must equal
/// `4 * num_output(cls_score)` and every `param_str` class count must equal
/// `num_output(cls_score)`.
pub fn verify_consistency(doc: &Document) -> Result<VerifyReport, PrototxtError> {
    let mut cls = Vec::new();
    let mut bbox = Vec::new();
    let mut params = Vec::new();

    let mut path = Vec::new();
    walk(&doc.entries, &mut path, &mut |entry, _| {
        if entry.name == "layer" {
            let target = match child_str(entry, "name") {
                Some("cls_score") => Some(&mut cls),
                Some("bbox_pred") => Some(&mut bbox),
                _ => None,
            };
            let Some(target) = target else { return };
            let Some(children) = entry.children() else {
                return;
            };
            for child in children {
                if child.name != "inner_product_param" {
                    continue;
                }
                let Some(grandchildren) = child.children() else {
                    continue;
                };
                for field in grandchildren {
                    if field.name == "num_output" {
                        if let Some(v) = field.scalar().and_then(|s| s.as_i64()) {
                            target.push(v);
                        }
                    }
                }
            }
        } else if entry.name == "python_param" {
            let Some(children) = entry.children() else {
                return;
            };
            for child in children {
                if child.name == "param_str" {
                    if let Some(s) = child.scalar().and_then(|v| v.as_str()) {
                        params.extend(extract_num_classes(s));
                    }
                }
            }
        }
    });

    if cls.is_empty() {
        return Err(PrototxtError::Inconsistent {
            message: "no `cls_score` layer with a `num_output` found".into(),
        });
    }
    let n = cls[0];
    if cls.iter().any(|&v| v != n) {
        return Err(PrototxtError::Inconsistent {
            message: format!("cls_score outputs disagree: {cls:?}"),
        });
    }
    for &b in &bbox {
        if b != 4 * n {
            return Err(PrototxtError::Inconsistent {
                message: format!("bbox_pred num_output is {b}, expected {} (4 x {n})", 4 * n),
            });
        }
    }
    for &p in &params {
        if p != n {
            return Err(PrototxtError::Inconsistent {
                message: format!("param_str class count is {p}, expected {n}"),
            });
        }
    }
    Ok(VerifyReport {
        cls_score_outputs: cls,
        bbox_pred_outputs: bbox,
        param_str_class_counts: params,
    })
}
