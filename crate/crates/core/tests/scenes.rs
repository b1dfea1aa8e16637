use aggsynth::augment::{apply, AugmentConfig, AugmentParams};
use aggsynth::compose::{generate_scene, ComposeContext, OcclusionVariant, Scene, Stage, StageSpec};
use aggsynth::geometry::farthest_pair;
use aggsynth::library::AssetCatalog;
use aggsynth::metadata::{decode_metadata, encode_metadata, ImageRecord};
use aggsynth::psd::PsdSpec;
use aggsynth::render::rasterize_graymap;
use aggsynth::rle::decode_mask;
use aggsynth::sieve::{classify_size, SizeClass};
use aggsynth::synthetic::synthetic_catalog_for;
use proptest::prelude::*;
use std::sync::OnceLock;

const MM_PER_PX: f64 = 0.1;

fn catalog() -> &'static AssetCatalog {
    static CATALOG: OnceLock<AssetCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let classes: Vec<SizeClass> = [1, 2, 3, 4, 5].map(|k| SizeClass::new(k).unwrap()).to_vec();
        synthetic_catalog_for(MM_PER_PX, 3, 5, &classes).unwrap()
    })
}

fn class(k: u8) -> SizeClass {
    SizeClass::new(k).unwrap()
}

fn scene(stage: &StageSpec, psd: &PsdSpec, seed: u64, image: u64) -> Scene {
    let aug = AugmentConfig::default();
    let ctx = ComposeContext {
        catalog: catalog(),
        width: 256,
        height: 256,
        augment: &aug,
        master_seed: seed,
        image_index: image,
        background_id: "flat-000000",
    };
    generate_scene(&ctx, stage, psd, OcclusionVariant::Heavy).unwrap()
}

/// Paint decoded amodal masks in z order on a fresh raster and count the
/// pixels each instance keeps. Instances above `max_layer` are skipped.
fn repaint(record: &ImageRecord, max_layer: u8) -> (Vec<u32>, Vec<u64>) {
    let mut top = vec![0u32; (record.width * record.height) as usize];
    for inst in record.instances.iter().filter(|i| i.layer <= max_layer) {
        let mask = decode_mask(&inst.rle, record.width, record.height).unwrap();
        for (i, &b) in mask.bits().iter().enumerate() {
            if b {
                top[i] = inst.instance_id;
            }
        }
    }
    let mut visible = vec![0u64; record.instances.len() + 1];
    for &id in &top {
        visible[id as usize] += 1;
    }
    (top, visible)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn l1_scenes_never_overlap(seed in any::<u64>()) {
        let stage = StageSpec::new(Stage::L1, vec![class(2)]);
        let s = scene(&stage, &PsdSpec::Uniform { total_count: 400 }, seed, 0);
        let record = ImageRecord::from_scene("l1", &s, MM_PER_PX);
        let amodal: u64 = record.instances.iter().map(|i| i.amodal_area).sum();
        let (_, visible) = repaint(&record, u8::MAX);
        prop_assert_eq!(amodal, visible[1..].iter().sum::<u64>());
        prop_assert!(record.instances.iter().all(|i| i.visibility == 1.0));
        prop_assert_eq!(rasterize_graymap(&s).unwrap().nonzero_count(), amodal);
    }

    #[test]
    fn l2_repaint_reproduces_visibility(seed in any::<u64>()) {
        let stage = StageSpec::new(Stage::L2, vec![class(3)]);
        let s = scene(&stage, &PsdSpec::Uniform { total_count: 60 }, seed, 1);
        s.check().unwrap();
        let record = ImageRecord::from_scene("l2", &s, MM_PER_PX);
        let (top, visible) = repaint(&record, u8::MAX);
        for inst in &record.instances {
            prop_assert_eq!(inst.visible_area, visible[inst.instance_id as usize]);
            prop_assert!(inst.visibility >= 0.6 && inst.visibility <= 1.0);
        }
        let g = rasterize_graymap(&s).unwrap();
        prop_assert!(g.ids().iter().zip(&top).all(|(&a, &b)| a as u32 == b));
        let back = decode_metadata(&encode_metadata(&record).unwrap()).unwrap();
        prop_assert_eq!(back, record);
    }

    #[test]
    fn l3_floor_binds_within_layers(seed in any::<u64>()) {
        let stage = StageSpec::new(Stage::L3, vec![class(1), class(2), class(4), class(5)]);
        let psd = PsdSpec::Gaussian { mean_class: 2.0, std_class: 1.5, total_count: 120 };
        let s = scene(&stage, &psd, seed, 2);
        s.check().unwrap();
        let record = ImageRecord::from_scene("l3", &s, MM_PER_PX);
        let (_, full) = repaint(&record, u8::MAX);
        for layer in 0..=1u8 {
            let (_, within) = repaint(&record, layer);
            for inst in record.instances.iter().filter(|i| i.layer == layer) {
                prop_assert_eq!(inst.layer_visible_area, within[inst.instance_id as usize]);
                prop_assert!(inst.layer_visibility >= 0.6);
                prop_assert_eq!(inst.visible_area, full[inst.instance_id as usize]);
            }
        }
        for pair in record.instances.windows(2) {
            prop_assert!(pair[0].z < pair[1].z && pair[0].layer <= pair[1].layer);
        }
        record.check_graymap(&rasterize_graymap(&s).unwrap()).unwrap();
    }

    #[test]
    fn rigid_augmentation_keeps_size_class(pick in 0usize..15, flip_h: bool, flip_v: bool, turns in 0u32..4) {
        let asset = catalog().iter().nth(pick).unwrap();
        let p = AugmentParams {
            flip_h,
            flip_v,
            rotation_deg: 90.0 * turns as f64,
            hue_shift: 5.0,
            sat_scale: 1.1,
            val_scale: 0.9,
        };
        let out = apply(asset, &p);
        let d = farthest_pair(&out.mask).unwrap();
        prop_assert_eq!(d, farthest_pair(&asset.mask).unwrap());
        prop_assert_eq!(classify_size(d * MM_PER_PX).unwrap(), asset.size_class);
    }
}

#[test]
fn scenes_are_deterministic() {
    let stage = StageSpec::new(Stage::L3, vec![class(1), class(2), class(4)]);
    let psd = PsdSpec::Random { total_count: 80 };
    let a = scene(&stage, &psd, 99, 4);
    let b = scene(&stage, &psd, 99, 4);
    assert_eq!(a, b);
    let c = scene(&stage, &psd, 99, 5);
    assert_ne!(a, c);
}

#[test]
fn upper_layer_may_hide_lower_layer_entirely() {
    let stage = StageSpec::new(Stage::L3, vec![class(1), class(5)]);
    let mut seen_hidden = false;
    for seed in 0..20 {
        let s = scene(&stage, &PsdSpec::Explicit { counts: [40, 0, 0, 0, 8, 0, 0, 0] }, seed, 0);
        for inst in &s.instances {
            assert!(inst.layer_visibility >= 0.6);
            seen_hidden |= inst.visible_area == 0;
        }
    }
    assert!(seen_hidden, "expected at least one fully covered layer-0 instance");
}
