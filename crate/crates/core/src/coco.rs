//! COCO-format instances files: in-memory model, parsing with validation,
//! and deterministic re-serialization.
//!
//! Only the fields the pipeline needs are modeled. Unknown top-level keys
//! (`info`, `licenses`, ...) are preserved verbatim and re-emitted; unknown
//! per-record keys are dropped with a warning. Segmentation data is carried
//! opaquely and re-emitted unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Number, Value};
use thiserror::Error;

/// Axis-aligned box in `[x, y, width, height]` pixel convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// True when the box has strictly positive extent on both axes.
    pub fn is_positive(&self) -> bool {
        self.w > 0.0 && self.h > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: u64,
    pub name: String,
    pub supercategory: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub area: f64,
    pub iscrowd: bool,
    /// Opaque segmentation payload, re-emitted unchanged when present.
    pub segmentation: Option<Value>,
}

/// In-memory model of a COCO instances file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
    pub categories: Vec<Category>,
    /// Unrecognized top-level keys, preserved in file order.
    pub extra: Vec<(String, Value)>,
}

/// A dangling annotation reference found during validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingRef {
    pub annotation_id: u64,
    pub field: &'static str,
    pub target: u64,
}

fn render_dangling(refs: &[DanglingRef]) -> String {
    refs.iter()
        .map(|r| {
            format!(
                "annotation {} references missing {} {}",
                r.annotation_id, r.field, r.target
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum CocoError {
    #[error("JSON parse error at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: missing required key `{key}`{context}")]
    MissingKey { key: &'static str, context: String },
    #[error("schema error: {message}")]
    Schema { message: String },
    #[error("integrity error: duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("integrity error: duplicate category name `{name}`")]
    DuplicateName { name: String },
    #[error("integrity error: {}", render_dangling(.refs))]
    DanglingReferences { refs: Vec<DanglingRef> },
}

/// Non-fatal findings emitted while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// An unmodeled per-record key was dropped. `count` is the number of
    /// records in `section` that carried it.
    UnknownKey {
        section: &'static str,
        key: String,
        count: usize,
    },
    /// A bounding box with zero width or height was accepted at parse time.
    /// Such boxes are rejected again if they reach evaluation.
    DegenerateBox { annotation_id: u64 },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::UnknownKey {
                section,
                key,
                count,
            } => write!(
                f,
                "dropped unknown key `{key}` from {count} record(s) in `{section}`"
            ),
            ParseWarning::DegenerateBox { annotation_id } => {
                write!(f, "annotation {annotation_id} has a zero-area bounding box")
            }
        }
    }
}

/// Result of [`parse_dataset`]: the validated dataset plus any warnings.
#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    pub warnings: Vec<ParseWarning>,
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0usize;
    let mut current = 1usize;
    for (i, b) in bytes.iter().enumerate() {
        if current == line {
            offset = i;
            break;
        }
        if *b == b'\n' {
            current += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(bytes.len())
}

fn schema(message: impl Into<String>) -> CocoError {
    CocoError::Schema {
        message: message.into(),
    }
}

/// Integer that is exactly representable in the JSON number: rejects
/// fractional values and values beyond 2^53.
fn exact_integer(value: &Value, what: &str) -> Result<i64, CocoError> {
    let n = value
        .as_number()
        .ok_or_else(|| schema(format!("{what} must be a number")))?;
    if let Some(i) = n.as_i64() {
        return Ok(i);
    }
    if let Some(f) = n.as_f64() {
        if f.fract() == 0.0 && f.abs() <= 9_007_199_254_740_992.0 {
            return Ok(f as i64);
        }
    }
    Err(schema(format!(
        "{what} must be an exactly representable integer, got {n}"
    )))
}

fn positive_id(value: &Value, what: &str) -> Result<u64, CocoError> {
    let i = exact_integer(value, what)?;
    if i < 1 {
        return Err(schema(format!("{what} must be >= 1, got {i}")));
    }
    Ok(i as u64)
}

fn finite_f64(value: &Value, what: &str) -> Result<f64, CocoError> {
    let f = value
        .as_f64()
        .ok_or_else(|| schema(format!("{what} must be a number")))?;
    if !f.is_finite() {
        return Err(schema(format!("{what} must be finite")));
    }
    Ok(f)
}

fn require<'a>(
    obj: &'a Map<String, Value>,
    key: &'static str,
    context: &str,
) -> Result<&'a Value, CocoError> {
    obj.get(key).ok_or_else(|| CocoError::MissingKey {
        key,
        context: format!(" in {context}"),
    })
}

struct UnknownKeys {
    counts: BTreeMap<(&'static str, String), usize>,
}

impl UnknownKeys {
    fn new() -> Self {
        UnknownKeys {
            counts: BTreeMap::new(),
        }
    }

    fn record(&mut self, section: &'static str, obj: &Map<String, Value>, known: &[&str]) {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                *self.counts.entry((section, key.clone())).or_insert(0) += 1;
            }
        }
    }

    fn into_warnings(self) -> Vec<ParseWarning> {
        self.counts
            .into_iter()
            .map(|((section, key), count)| ParseWarning::UnknownKey {
                section,
                key,
                count,
            })
            .collect()
    }
}

fn parse_bbox(value: &Value, context: &str) -> Result<BBox, CocoError> {
    let arr = value
        .as_array()
        .ok_or_else(|| schema(format!("bbox in {context} must be an array")))?;
    if arr.len() != 4 {
        return Err(schema(format!(
            "bbox in {context} must have 4 elements, got {}",
            arr.len()
        )));
    }
    let mut vals = [0.0f64; 4];
    for (i, v) in arr.iter().enumerate() {
        vals[i] = finite_f64(v, &format!("bbox[{i}] in {context}"))?;
    }
    let [x, y, w, h] = vals;
    if x < 0.0 || y < 0.0 {
        return Err(schema(format!(
            "bbox in {context} has negative origin ({x}, {y})"
        )));
    }
    if w < 0.0 || h < 0.0 {
        return Err(schema(format!(
            "bbox in {context} has negative extent ({w}, {h})"
        )));
    }
    Ok(BBox { x, y, w, h })
}

fn parse_iscrowd(value: &Value, context: &str) -> Result<bool, CocoError> {
    match value {
        Value::Bool(b) => Ok(*b),
        Value::Number(_) => match exact_integer(value, &format!("iscrowd in {context}"))? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(schema(format!(
                "iscrowd in {context} must be 0 or 1, got {other}"
            ))),
        },
        _ => Err(schema(format!("iscrowd in {context} must be 0 or 1"))),
    }
}

const IMAGE_KEYS: &[&str] = &["id", "file_name", "width", "height"];
const ANNOTATION_KEYS: &[&str] = &[
    "id",
    "image_id",
    "category_id",
    "bbox",
    "area",
    "iscrowd",
    "segmentation",
];
const CATEGORY_KEYS: &[&str] = &["id", "name", "supercategory"];

/// Parse and validate a COCO instances file.
///
/// Record order is preserved. Referential integrity (annotation ->
/// image/category) and id/name uniqueness are enforced; violations are
/// integrity errors, not warnings.
pub fn parse_dataset(bytes: &[u8]) -> Result<ParsedDataset, CocoError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| CocoError::Json {
        offset: byte_offset(bytes, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(mut root) = root else {
        return Err(schema("top-level JSON value must be an object"));
    };

    let images_value = root.shift_remove("images").ok_or(CocoError::MissingKey {
        key: "images",
        context: String::new(),
    })?;
    let annotations_value = root
        .shift_remove("annotations")
        .ok_or(CocoError::MissingKey {
            key: "annotations",
            context: String::new(),
        })?;
    let categories_value = root
        .shift_remove("categories")
        .ok_or(CocoError::MissingKey {
            key: "categories",
            context: String::new(),
        })?;
    let extra: Vec<(String, Value)> = root.into_iter().collect();

    let mut unknown = UnknownKeys::new();
    let mut warnings = Vec::new();

    let images = parse_images(&images_value, &mut unknown)?;
    let categories = parse_categories(&categories_value, &mut unknown)?;
    let annotations = parse_annotations(&annotations_value, &mut unknown, &mut warnings)?;

    let mut image_ids = BTreeSet::new();
    for img in &images {
        if !image_ids.insert(img.id) {
            return Err(CocoError::DuplicateId {
                kind: "image",
                id: img.id,
            });
        }
    }
    let mut category_ids = BTreeSet::new();
    let mut category_names = BTreeSet::new();
    for cat in &categories {
        if !category_ids.insert(cat.id) {
            return Err(CocoError::DuplicateId {
                kind: "category",
                id: cat.id,
            });
        }
        if !category_names.insert(cat.name.clone()) {
            return Err(CocoError::DuplicateName {
                name: cat.name.clone(),
            });
        }
    }
    let mut annotation_ids = BTreeSet::new();
    let mut dangling = Vec::new();
    for ann in &annotations {
        if !annotation_ids.insert(ann.id) {
            return Err(CocoError::DuplicateId {
                kind: "annotation",
                id: ann.id,
            });
        }
        if !image_ids.contains(&ann.image_id) {
            dangling.push(DanglingRef {
                annotation_id: ann.id,
                field: "image",
                target: ann.image_id,
            });
        }
        if !category_ids.contains(&ann.category_id) {
            dangling.push(DanglingRef {
                annotation_id: ann.id,
                field: "category",
                target: ann.category_id,
            });
        }
    }
    if !dangling.is_empty() {
        return Err(CocoError::DanglingReferences { refs: dangling });
    }

    warnings.extend(unknown.into_warnings());
    Ok(ParsedDataset {
        dataset: Dataset {
            images,
            annotations,
            categories,
            extra,
        },
        warnings,
    })
}

fn parse_images(value: &Value, unknown: &mut UnknownKeys) -> Result<Vec<ImageRecord>, CocoError> {
    let arr = value
        .as_array()
        .ok_or_else(|| schema("`images` must be an array"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let context = format!("images[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| schema(format!("{context} must be an object")))?;
        let id = positive_id(require(obj, "id", &context)?, &format!("id in {context}"))?;
        let file_name = require(obj, "file_name", &context)?
            .as_str()
            .ok_or_else(|| schema(format!("file_name in {context} must be a string")))?
            .to_string();
        if file_name.is_empty() {
            return Err(schema(format!("file_name in {context} must be non-empty")));
        }
        let width = parse_pixels(require(obj, "width", &context)?, "width", &context)?;
        let height = parse_pixels(require(obj, "height", &context)?, "height", &context)?;
        unknown.record("images", obj, IMAGE_KEYS);
        out.push(ImageRecord {
            id,
            file_name,
            width,
            height,
        });
    }
    Ok(out)
}

fn parse_pixels(value: &Value, field: &str, context: &str) -> Result<u32, CocoError> {
    let i = exact_integer(value, &format!("{field} in {context}"))?;
    if i < 1 || i > u32::MAX as i64 {
        return Err(schema(format!(
            "{field} in {context} must be a positive pixel count, got {i}"
        )));
    }
    Ok(i as u32)
}

fn parse_categories(value: &Value, unknown: &mut UnknownKeys) -> Result<Vec<Category>, CocoError> {
    let arr = value
        .as_array()
        .ok_or_else(|| schema("`categories` must be an array"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let context = format!("categories[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| schema(format!("{context} must be an object")))?;
        let id = positive_id(require(obj, "id", &context)?, &format!("id in {context}"))?;
        let name = require(obj, "name", &context)?
            .as_str()
            .ok_or_else(|| schema(format!("name in {context} must be a string")))?
            .to_string();
        if name.is_empty() {
            return Err(schema(format!("name in {context} must be non-empty")));
        }
        let supercategory = match obj.get("supercategory") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| schema(format!("supercategory in {context} must be a string")))?
                .to_string(),
            None => String::new(),
        };
        unknown.record("categories", obj, CATEGORY_KEYS);
        out.push(Category {
            id,
            name,
            supercategory,
        });
    }
    Ok(out)
}

fn parse_annotations(
    value: &Value,
    unknown: &mut UnknownKeys,
    warnings: &mut Vec<ParseWarning>,
) -> Result<Vec<Annotation>, CocoError> {
    let arr = value
        .as_array()
        .ok_or_else(|| schema("`annotations` must be an array"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let context = format!("annotations[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| schema(format!("{context} must be an object")))?;
        let id = positive_id(require(obj, "id", &context)?, &format!("id in {context}"))?;
        let image_id = positive_id(
            require(obj, "image_id", &context)?,
            &format!("image_id in {context}"),
        )?;
        let category_id = positive_id(
            require(obj, "category_id", &context)?,
            &format!("category_id in {context}"),
        )?;
        let bbox = parse_bbox(require(obj, "bbox", &context)?, &context)?;
        let area = finite_f64(
            require(obj, "area", &context)?,
            &format!("area in {context}"),
        )?;
        if area < 0.0 {
            return Err(schema(format!("area in {context} must be >= 0")));
        }
        let iscrowd = parse_iscrowd(require(obj, "iscrowd", &context)?, &context)?;
        let segmentation = obj.get("segmentation").cloned();
        unknown.record("annotations", obj, ANNOTATION_KEYS);
        if !bbox.is_positive() {
            warnings.push(ParseWarning::DegenerateBox { annotation_id: id });
        }
        out.push(Annotation {
            id,
            image_id,
            category_id,
            bbox,
            area,
            iscrowd,
            segmentation,
        });
    }
    Ok(out)
}

fn number(f: f64) -> Value {
    // Finite by construction everywhere this is called.
    Value::Number(Number::from_f64(f).expect("finite float"))
}

/// Serialize a dataset back to COCO JSON. Preserved top-level extras come
/// first (in original order), then `images`, `annotations`, `categories`.
/// Output is pretty-printed with a deterministic key order and ends with a
/// newline.
pub fn serialize_dataset(d: &Dataset) -> Vec<u8> {
    let mut root = Map::new();
    for (k, v) in &d.extra {
        root.insert(k.clone(), v.clone());
    }

    let images: Vec<Value> = d
        .images
        .iter()
        .map(|img| {
            let mut o = Map::new();
            o.insert("id".into(), Value::from(img.id));
            o.insert("file_name".into(), Value::from(img.file_name.clone()));
            o.insert("width".into(), Value::from(img.width));
            o.insert("height".into(), Value::from(img.height));
            Value::Object(o)
        })
        .collect();
    root.insert("images".into(), Value::Array(images));

    let annotations: Vec<Value> = d
        .annotations
        .iter()
        .map(|ann| {
            let mut o = Map::new();
            o.insert("id".into(), Value::from(ann.id));
            o.insert("image_id".into(), Value::from(ann.image_id));
            o.insert("category_id".into(), Value::from(ann.category_id));
            o.insert(
                "bbox".into(),
                Value::Array(vec![
                    number(ann.bbox.x),
                    number(ann.bbox.y),
                    number(ann.bbox.w),
                    number(ann.bbox.h),
                ]),
            );
            o.insert("area".into(), number(ann.area));
            o.insert("iscrowd".into(), Value::from(ann.iscrowd as u8));
            if let Some(seg) = &ann.segmentation {
                o.insert("segmentation".into(), seg.clone());
            }
            Value::Object(o)
        })
        .collect();
    root.insert("annotations".into(), Value::Array(annotations));

    let categories: Vec<Value> = d
        .categories
        .iter()
        .map(|cat| {
            let mut o = Map::new();
            o.insert("id".into(), Value::from(cat.id));
            o.insert("name".into(), Value::from(cat.name.clone()));
            o.insert(
                "supercategory".into(),
                Value::from(cat.supercategory.clone()),
            );
            Value::Object(o)
        })
        .collect();
    root.insert("categories".into(), Value::Array(categories));

    let mut out = serde_json::to_vec_pretty(&Value::Object(root)).expect("JSON serialization");
    out.push(b'\n');
    out
}

/// All categories of the dataset, sorted ascending by id.
pub fn list_categories(d: &Dataset) -> Vec<Category> {
    let mut cats = d.categories.clone();
    cats.sort_by_key(|c| c.id);
    cats
}
