//! Category-subset handling: contiguous label maps, dataset filtering, and
//! seeded demo-image selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::coco::{Dataset, ImageRecord};
use crate::rng::{sample_without_replacement, SplitMix64};

/// Bijection from the selected original category ids to the contiguous
/// training labels `1..=K`. Label `0` is reserved for the background class,
/// so `num_classes == K + 1`. Ascending original id maps to ascending label,
/// which makes the assignment reproducible from the id list alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    selected_ids: Vec<u64>,
    label_of: BTreeMap<u64, u32>,
}

impl CategoryMap {
    /// Selected original ids in ascending order.
    pub fn selected_ids(&self) -> &[u64] {
        &self.selected_ids
    }

    /// Contiguous label for an original category id, if selected.
    pub fn label_of(&self, category_id: u64) -> Option<u32> {
        self.label_of.get(&category_id).copied()
    }

    pub fn contains(&self, category_id: u64) -> bool {
        self.label_of.contains_key(&category_id)
    }

    /// Number of selected categories (K).
    pub fn len(&self) -> usize {
        self.selected_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_ids.is_empty()
    }

    /// K + 1, counting the reserved background label.
    pub fn num_classes(&self) -> u32 {
        self.selected_ids.len() as u32 + 1
    }

    /// JSON artifact carrying the labeling, e.g.
    /// `{"selected_ids":[1,3],"labels":{"1":1,"3":2},"num_classes":3}`.
    /// Label keys appear in ascending id order.
    pub fn to_json(&self) -> String {
        let mut labels = serde_json::Map::new();
        for (id, label) in &self.label_of {
            labels.insert(id.to_string(), serde_json::Value::from(*label));
        }
        let doc = serde_json::json!({
            "selected_ids": self.selected_ids,
            "labels": labels,
            "num_classes": self.num_classes(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON serialization");
        s.push('\n');
        s
    }
}

/// Outcome counts of a filtering pass. Kept + dropped always equals the
/// input cardinality for each record kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub images_kept: usize,
    pub images_dropped: usize,
    pub annotations_kept: usize,
    pub annotations_dropped: usize,
}

#[derive(Debug, Error)]
pub enum SubsetError {
    #[error("config error: category id list is empty")]
    EmptySelection,
    #[error("config error: duplicate category id {0}")]
    DuplicateCategoryId(u64),
    #[error("unknown category id {0}; run `list-categories` to see valid ids")]
    UnknownCategoryId(u64),
    #[error("empty subset: no image has an annotation in the selected categories")]
    EmptySubset,
    #[error("cannot select {requested} demo images: only {eligible} eligible")]
    NotEnoughEligible { requested: usize, eligible: usize },
}

/// Build the contiguous label map for `cat_ids` over dataset `d`.
///
/// Ids may arrive in any order; they are sorted ascending before labels are
/// assigned. Every id must name an existing category.
pub fn make_category_map(d: &Dataset, cat_ids: &[u64]) -> Result<CategoryMap, SubsetError> {
    if cat_ids.is_empty() {
        return Err(SubsetError::EmptySelection);
    }
    let known: BTreeSet<u64> = d.categories.iter().map(|c| c.id).collect();
    let mut seen = BTreeSet::new();
    for &id in cat_ids {
        if !seen.insert(id) {
            return Err(SubsetError::DuplicateCategoryId(id));
        }
        if !known.contains(&id) {
            return Err(SubsetError::UnknownCategoryId(id));
        }
    }
    let selected_ids: Vec<u64> = seen.into_iter().collect();
    let label_of = selected_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32 + 1))
        .collect();
    Ok(CategoryMap {
        selected_ids,
        label_of,
    })
}

/// Reduce `d` to the selected categories.
///
/// Keeps exactly the images with at least one in-subset annotation, the
/// annotations of selected categories, and the selected category records.
/// Original category ids are preserved (the output stays valid COCO); the
/// contiguous relabeling lives in the [`CategoryMap`] artifact. Relative
/// record order is unchanged, and a resulting dataset with zero images is an
/// error rather than a silently empty training set.
pub fn filter_dataset(d: &Dataset, m: &CategoryMap) -> Result<(Dataset, FilterReport), SubsetError> {
    let eligible: BTreeSet<u64> = d
        .annotations
        .iter()
        .filter(|a| m.contains(a.category_id))
        .map(|a| a.image_id)
        .collect();
    if eligible.is_empty() {
        return Err(SubsetError::EmptySubset);
    }

    let images: Vec<ImageRecord> = d
        .images
        .iter()
        .filter(|img| eligible.contains(&img.id))
        .cloned()
        .collect();
    let annotations: Vec<_> = d
        .annotations
        .iter()
        .filter(|a| m.contains(a.category_id))
        .cloned()
        .collect();
    let categories: Vec<_> = d
        .categories
        .iter()
        .filter(|c| m.contains(c.id))
        .cloned()
        .collect();

    let report = FilterReport {
        images_kept: images.len(),
        images_dropped: d.images.len() - images.len(),
        annotations_kept: annotations.len(),
        annotations_dropped: d.annotations.len() - annotations.len(),
    };
    Ok((
        Dataset {
            images,
            annotations,
            categories,
            extra: d.extra.clone(),
        },
        report,
    ))
}

/// Draw `n` distinct images that contain at least one object of a selected
/// category, uniformly without replacement.
///
/// Deterministic for a fixed `(d, m, n, seed)`: the eligible set is taken in
/// dataset image order and shuffled with [`SplitMix64`].
pub fn select_demo_images(
    d: &Dataset,
    m: &CategoryMap,
    n: usize,
    seed: u64,
) -> Result<Vec<ImageRecord>, SubsetError> {
    assert!(n >= 1, "n must be positive");
    let with_target: BTreeSet<u64> = d
        .annotations
        .iter()
        .filter(|a| m.contains(a.category_id))
        .map(|a| a.image_id)
        .collect();
    let eligible: Vec<&ImageRecord> = d
        .images
        .iter()
        .filter(|img| with_target.contains(&img.id))
        .collect();
    if eligible.len() < n {
        return Err(SubsetError::NotEnoughEligible {
            requested: n,
            eligible: eligible.len(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let picks = sample_without_replacement(eligible.len(), n, &mut rng);
    Ok(picks.into_iter().map(|i| eligible[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coco::{Annotation, BBox, Category};

    fn cat(id: u64, name: &str) -> Category {
        Category {
            id,
            name: name.into(),
            supercategory: String::new(),
        }
    }

    fn img(id: u64, file_name: &str) -> ImageRecord {
        ImageRecord {
            id,
            file_name: file_name.into(),
            width: 100,
            height: 100,
        }
    }

    fn ann(id: u64, image_id: u64, category_id: u64) -> Annotation {
        Annotation {
            id,
            image_id,
            category_id,
            bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
            area: 100.0,
            iscrowd: false,
            segmentation: None,
        }
    }

    /// Two images: A has a person, B has a dog.
    fn two_image_dataset() -> Dataset {
        Dataset {
            images: vec![img(1, "a.jpg"), img(2, "b.jpg")],
            annotations: vec![ann(1, 1, 1), ann(2, 2, 18)],
            categories: vec![cat(1, "person"), cat(18, "dog")],
            extra: vec![],
        }
    }

    #[test]
    fn map_sorts_ids_and_counts_background() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[18, 1]).unwrap();
        assert_eq!(m.selected_ids(), &[1, 18]);
        assert_eq!(m.label_of(1), Some(1));
        assert_eq!(m.label_of(18), Some(2));
        assert_eq!(m.label_of(3), None);
        assert_eq!(m.num_classes(), 3);
    }

    #[test]
    fn map_rejects_empty_unknown_and_duplicates() {
        let d = two_image_dataset();
        assert!(matches!(
            make_category_map(&d, &[]),
            Err(SubsetError::EmptySelection)
        ));
        match make_category_map(&d, &[999]) {
            Err(SubsetError::UnknownCategoryId(id)) => assert_eq!(id, 999),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            make_category_map(&d, &[1, 1]),
            Err(SubsetError::DuplicateCategoryId(1))
        ));
    }

    #[test]
    fn unknown_id_error_mentions_list_categories() {
        let d = two_image_dataset();
        let msg = make_category_map(&d, &[999]).unwrap_err().to_string();
        assert!(msg.contains("list-categories"), "{msg}");
    }

    #[test]
    fn filter_keeps_only_subset_images() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        let (filtered, report) = filter_dataset(&d, &m).unwrap();
        assert_eq!(filtered.images.len(), 1);
        assert_eq!(filtered.images[0].id, 1);
        assert_eq!(filtered.annotations.len(), 1);
        assert_eq!(filtered.categories.len(), 1);
        assert_eq!(
            report,
            FilterReport {
                images_kept: 1,
                images_dropped: 1,
                annotations_kept: 1,
                annotations_dropped: 1,
            }
        );
    }

    #[test]
    fn filter_with_all_categories_is_identity() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[1, 18]).unwrap();
        let (filtered, report) = filter_dataset(&d, &m).unwrap();
        assert_eq!(filtered, d);
        assert_eq!(report.images_dropped, 0);
        assert_eq!(report.annotations_dropped, 0);
    }

    #[test]
    fn filter_keeps_image_but_drops_out_of_subset_annotation() {
        // One image holding both a person and a dog; subset = person.
        let d = Dataset {
            images: vec![img(1, "a.jpg")],
            annotations: vec![ann(1, 1, 1), ann(2, 1, 18)],
            categories: vec![cat(1, "person"), cat(18, "dog")],
            extra: vec![],
        };
        let m = make_category_map(&d, &[1]).unwrap();
        let (filtered, report) = filter_dataset(&d, &m).unwrap();
        assert_eq!(filtered.images.len(), 1);
        assert_eq!(filtered.annotations.len(), 1);
        assert_eq!(filtered.annotations[0].category_id, 1);
        assert_eq!(report.annotations_dropped, 1);
    }

    #[test]
    fn filter_empty_subset_is_error() {
        let d = Dataset {
            images: vec![img(1, "a.jpg")],
            annotations: vec![ann(1, 1, 18)],
            categories: vec![cat(1, "person"), cat(18, "dog")],
            extra: vec![],
        };
        let m = make_category_map(&d, &[1]).unwrap();
        assert!(matches!(
            filter_dataset(&d, &m),
            Err(SubsetError::EmptySubset)
        ));
    }

    #[test]
    fn filter_is_idempotent() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        let (once, _) = filter_dataset(&d, &m).unwrap();
        let (twice, report) = filter_dataset(&once, &m).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.images_dropped, 0);
        assert_eq!(report.annotations_dropped, 0);
    }

    #[test]
    fn crowd_annotations_count_toward_eligibility() {
        let mut d = two_image_dataset();
        d.annotations[0].iscrowd = true;
        let m = make_category_map(&d, &[1]).unwrap();
        let (filtered, _) = filter_dataset(&d, &m).unwrap();
        assert_eq!(filtered.images.len(), 1);
        assert!(filtered.annotations[0].iscrowd);
    }

    #[test]
    fn select_single_candidate() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[1]).unwrap();
        for seed in [0, 1, 42, u64::MAX] {
            let picked = select_demo_images(&d, &m, 1, seed).unwrap();
            assert_eq!(picked.len(), 1);
            assert_eq!(picked[0].id, 1);
        }
    }

    #[test]
    fn select_is_deterministic() {
        let d = Dataset {
            images: (1..=10).map(|i| img(i, &format!("{i}.jpg"))).collect(),
            annotations: (1..=10).map(|i| ann(i, i, 1)).collect(),
            categories: vec![cat(1, "person")],
            extra: vec![],
        };
        let m = make_category_map(&d, &[1]).unwrap();
        let a = select_demo_images(&d, &m, 4, 7).unwrap();
        let b = select_demo_images(&d, &m, 4, 7).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<u64> = a.iter().map(|i| i.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn select_rejects_oversized_request() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[1, 18]).unwrap();
        match select_demo_images(&d, &m, 3, 0) {
            Err(SubsetError::NotEnoughEligible {
                requested,
                eligible,
            }) => {
                assert_eq!(requested, 3);
                assert_eq!(eligible, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn category_map_json_shape() {
        let d = two_image_dataset();
        let m = make_category_map(&d, &[18, 1]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["selected_ids"], serde_json::json!([1, 18]));
        assert_eq!(v["labels"]["1"], 1);
        assert_eq!(v["labels"]["18"], 2);
        assert_eq!(v["num_classes"], 3);
    }
}
