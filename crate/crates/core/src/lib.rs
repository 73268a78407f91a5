//! Support tooling for fine-tuning object detectors on MS COCO category
//! subsets: instances-file ingestion and validation, subset filtering with
//! contiguous label remapping, Caffe prototxt rewriting, reproducible demo
//! image selection, and COCO-protocol detection evaluation.

pub mod coco;
pub mod config;
pub mod eval;
pub mod prototxt;
pub mod rng;
pub mod subset;

pub use coco::{parse_dataset, serialize_dataset, Annotation, BBox, Category, Dataset, ImageRecord};
pub use config::SubsetConfig;
pub use eval::{evaluate, Detection, EvalReport};
pub use subset::{filter_dataset, make_category_map, select_demo_images, CategoryMap};
