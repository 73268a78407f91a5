//! Seeded random instances for cross-checking the evaluator and the filter.
//!
//! Box coordinates are small integers, so IoU and overlap ratios are exact
//! rational computations in f64 and the naive and optimized evaluators must
//! agree bit for bit. Scores come from a coarse lattice to exercise the
//! tie-breaking rules.

use cocoft_core::coco::{Annotation, BBox, Category, Dataset, ImageRecord};
use cocoft_core::eval::Detection;
use cocoft_core::rng::SplitMix64;
use cocoft_core::subset::{make_category_map, CategoryMap};

const CATEGORY_POOL: [(u64, &str); 3] = [(1, "person"), (3, "car"), (7, "train")];

/// Random evaluation instance: up to 5 images, up to 4 ground truths and 6
/// detections per image, up to 3 categories, random crowd flags.
pub fn random_eval_instance(seed: u64) -> (Dataset, Vec<Detection>, CategoryMap) {
    let mut r = SplitMix64::new(seed);

    let n_cats = 1 + r.next_below(3) as usize;
    let categories: Vec<Category> = CATEGORY_POOL[..n_cats]
        .iter()
        .map(|&(id, name)| Category {
            id,
            name: name.into(),
            supercategory: String::new(),
        })
        .collect();
    let cat_ids: Vec<u64> = categories.iter().map(|c| c.id).collect();

    let n_images = 1 + r.next_below(5) as usize;
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut detections = Vec::new();
    let mut next_ann_id = 1u64;

    for i in 0..n_images {
        let image_id = (i + 1) as u64;
        images.push(ImageRecord {
            id: image_id,
            file_name: format!("img_{image_id}.jpg"),
            width: 64,
            height: 64,
        });

        let n_gt = r.next_below(5) as usize;
        for _ in 0..n_gt {
            let bbox = random_box(&mut r);
            annotations.push(Annotation {
                id: next_ann_id,
                image_id,
                category_id: cat_ids[r.next_below(cat_ids.len() as u64) as usize],
                bbox,
                area: bbox.w * bbox.h,
                iscrowd: r.next_below(4) == 0,
                segmentation: None,
            });
            next_ann_id += 1;
        }

        let n_det = r.next_below(7) as usize;
        for _ in 0..n_det {
            detections.push(Detection {
                image_id,
                category_id: cat_ids[r.next_below(cat_ids.len() as u64) as usize],
                bbox: random_box(&mut r),
                // coarse score lattice so ties are common
                score: r.next_below(20) as f64 / 20.0,
            });
        }
    }

    let dataset = Dataset {
        images,
        annotations,
        categories,
        extra: vec![],
    };

    // score either every category or a random nonempty prefix
    let scored = 1 + r.next_below(cat_ids.len() as u64) as usize;
    let map = make_category_map(&dataset, &cat_ids[..scored]).expect("generated ids are valid");
    (dataset, detections, map)
}

fn random_box(r: &mut SplitMix64) -> BBox {
    BBox::new(
        r.next_below(40) as f64,
        r.next_below(40) as f64,
        (1 + r.next_below(24)) as f64,
        (1 + r.next_below(24)) as f64,
    )
}

/// Random filtering instance: a dataset of up to 20 images and up to 10
/// categories (some of them unused), plus a nested pair of category id
/// selections `small` ⊆ `large` for monotonicity checks.
pub fn random_filter_instance(seed: u64) -> (Dataset, Vec<u64>, Vec<u64>) {
    let mut r = SplitMix64::new(seed);

    let n_cats = 1 + r.next_below(10) as usize;
    let categories: Vec<Category> = (0..n_cats)
        .map(|i| Category {
            id: (i as u64 + 1) * 3, // non-contiguous ids
            name: format!("cat{}", (i as u64 + 1) * 3),
            supercategory: String::new(),
        })
        .collect();
    let cat_ids: Vec<u64> = categories.iter().map(|c| c.id).collect();

    let n_images = 1 + r.next_below(20) as usize;
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut next_ann_id = 1u64;
    for i in 0..n_images {
        let image_id = (i + 1) as u64;
        images.push(ImageRecord {
            id: image_id,
            file_name: format!("img_{image_id}.jpg"),
            width: 32,
            height: 32,
        });
        let n_ann = r.next_below(4) as usize; // images may be empty
        for _ in 0..n_ann {
            let bbox = BBox::new(0.0, 0.0, 4.0, 4.0);
            annotations.push(Annotation {
                id: next_ann_id,
                image_id,
                category_id: cat_ids[r.next_below(cat_ids.len() as u64) as usize],
                bbox,
                area: 16.0,
                iscrowd: r.next_below(5) == 0,
                segmentation: None,
            });
            next_ann_id += 1;
        }
    }

    let large_len = 1 + r.next_below(cat_ids.len() as u64) as usize;
    let large: Vec<u64> = cat_ids[..large_len].to_vec();
    let small_len = 1 + r.next_below(large_len as u64) as usize;
    let small: Vec<u64> = large[..small_len].to_vec();

    (
        Dataset {
            images,
            annotations,
            categories,
            extra: vec![],
        },
        small,
        large,
    )
}
