//! Scene composition: sample per-class counts, pick and augment assets, and
//! place them on the canvas under the stage's overlap rules.
//!
//! * `L1` throws darts and rejects any overlap.
//! * `L2` places one class with occlusion, keeping every earlier instance at
//!   or above the visibility floor.
//! * `L3` buckets classes into layers and composes them bottom-up; the floor
//!   only binds instances of the layer being placed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{sample_params, transform_mask, AugmentConfig, AugmentParams};
use crate::error::{Error, Result};
use crate::geometry::{BinaryMask, MaskRegion};
use crate::library::{AssetCatalog, ParticleAsset};
use crate::psd::{class_mask, pair_occlusion_variant, sample_psd_over, PsdSpec};
use crate::seed::{derive_instance_seed, rng_from_seed};
use crate::sieve::{ClassCounts, SizeClass, CLASS_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    L1,
    L2,
    L3,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::L1 => "L1",
            Stage::L2 => "L2",
            Stage::L3 => "L3",
        })
    }
}

/// Whether a scene uses the sampled counts or the halved counts of its
/// low-occlusion partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionVariant {
    #[default]
    Heavy,
    Low,
}

fn default_floor() -> f64 {
    0.6
}

fn default_attempts() -> u32 {
    50
}

fn default_patience() -> u32 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub stage: Stage,
    pub classes: Vec<SizeClass>,
    #[serde(default = "default_floor")]
    pub visibility_floor: f64,
    /// Position retries per instance before it is recorded as shortfall.
    #[serde(default = "default_attempts")]
    pub max_place_attempts: u32,
    /// Consecutive rejections after which an L1 canvas counts as saturated.
    #[serde(default = "default_patience")]
    pub l1_saturation_patience: u32,
}

impl StageSpec {
    pub fn new(stage: Stage, classes: Vec<SizeClass>) -> Self {
        Self {
            stage,
            classes,
            visibility_floor: default_floor(),
            max_place_attempts: default_attempts(),
            l1_saturation_patience: default_patience(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::param("classes", "must not be empty"));
        }
        let mut seen = [false; CLASS_COUNT];
        for c in &self.classes {
            if std::mem::replace(&mut seen[c.slot()], true) {
                return Err(Error::param("classes", format!("class {} listed twice", c.index())));
            }
        }
        if matches!(self.stage, Stage::L1 | Stage::L2) && self.classes.len() != 1 {
            return Err(Error::param("classes", format!("{} takes exactly one class", self.stage)));
        }
        if !(self.visibility_floor > 0.0 && self.visibility_floor <= 1.0) {
            return Err(Error::param("visibility_floor", "must lie in (0, 1]"));
        }
        if self.max_place_attempts == 0 {
            return Err(Error::param("max_place_attempts", "must be positive"));
        }
        if self.l1_saturation_patience == 0 {
            return Err(Error::param("l1_saturation_patience", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedInstance {
    pub instance_id: u32,
    pub asset_id: String,
    pub class: SizeClass,
    pub augment: AugmentParams,
    /// Canvas position of the top-left pixel of `mask`.
    pub position: (u32, u32),
    pub layer: u8,
    pub z: u32,
    /// Amodal mask trimmed to its bounding box.
    pub mask: BinaryMask,
    pub amodal_area: u64,
    pub visible_area: u64,
    pub visibility: f64,
    /// Visible area once its own layer was complete, before higher layers
    /// landed on top.
    pub layer_visible_area: u64,
    pub layer_visibility: f64,
}

impl PlacedInstance {
    pub fn region(&self) -> MaskRegion {
        MaskRegion::new(self.position.0, self.position.1, self.mask.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub stage: Stage,
    pub width: u32,
    pub height: u32,
    pub background_id: String,
    pub seed: u64,
    pub instances: Vec<PlacedInstance>,
    pub target_counts: ClassCounts,
    pub psd_histogram: ClassCounts,
    pub shortfall: ClassCounts,
}

impl Scene {
    /// Structural invariants: dense ids, z order, layer order, histogram and
    /// shortfall bookkeeping.
    pub fn check(&self) -> Result<()> {
        let mut histogram = [0u32; CLASS_COUNT];
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.instance_id as usize != i + 1 || inst.z as usize != i {
                return Err(Error::InconsistentScene(format!("instance {} out of order", inst.instance_id)));
            }
            if i > 0 && self.instances[i - 1].layer > inst.layer {
                return Err(Error::InconsistentScene(format!(
                    "instance {} sits below a lower layer",
                    inst.instance_id
                )));
            }
            let (x, y) = inst.position;
            if x as u64 + inst.mask.width() as u64 > self.width as u64
                || y as u64 + inst.mask.height() as u64 > self.height as u64
            {
                return Err(Error::InconsistentScene(format!(
                    "instance {} leaves the canvas",
                    inst.instance_id
                )));
            }
            histogram[inst.class.slot()] += 1;
        }
        if histogram != self.psd_histogram {
            return Err(Error::InconsistentScene("histogram does not match instances".into()));
        }
        for c in 0..CLASS_COUNT {
            if self.psd_histogram[c] + self.shortfall[c] != self.target_counts[c] && self.stage != Stage::L1 {
                return Err(Error::InconsistentScene(format!("class {} counts do not add up", c + 1)));
            }
        }
        Ok(())
    }
}

/// Everything a scene needs besides its stage and PSD.
#[derive(Debug, Clone, Copy)]
pub struct ComposeContext<'a> {
    pub catalog: &'a AssetCatalog,
    pub width: u32,
    pub height: u32,
    pub augment: &'a AugmentConfig,
    pub master_seed: u64,
    pub image_index: u64,
    pub background_id: &'a str,
}

impl ComposeContext<'_> {
    fn slot_rng(&self, slot: u64) -> rand_chacha::ChaCha8Rng {
        rng_from_seed(derive_instance_seed(self.master_seed, self.image_index, slot))
    }

    fn scene_seed(&self) -> u64 {
        derive_instance_seed(self.master_seed, self.image_index, 0)
    }
}

struct Candidate<'a> {
    asset: &'a ParticleAsset,
    params: AugmentParams,
    mask: BinaryMask,
    runs: Vec<(u32, u32, u32)>,
    area: u64,
}

impl<'a> Candidate<'a> {
    fn new(asset: &'a ParticleAsset, params: AugmentParams) -> Self {
        let full = transform_mask(&asset.mask, &params);
        let bbox = full.bbox().expect("assets are never empty");
        let mask = full.crop(bbox).expect("bbox inside mask");
        let runs = mask.runs();
        let area = mask.area();
        Self {
            asset,
            params,
            mask,
            runs,
            area,
        }
    }

    fn sample_position<R: Rng>(&self, rng: &mut R, width: u32, height: u32) -> Option<(u32, u32)> {
        let (w, h) = (self.mask.width(), self.mask.height());
        if w > width || h > height {
            return None;
        }
        Some((rng.random_range(0..=width - w), rng.random_range(0..=height - h)))
    }
}

/// Mutable placement state: a top-id raster plus per-instance visible counts.
struct Board {
    width: u32,
    height: u32,
    top: Vec<u32>,
    instances: Vec<PlacedInstance>,
    cover: Vec<u64>,
    touched: Vec<usize>,
}

impl Board {
    fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            top: vec![0; width as usize * height as usize],
            instances: Vec::new(),
            cover: Vec::new(),
            touched: Vec::new(),
        }
    }

    fn pixels<'c>(&self, cand: &'c Candidate, pos: (u32, u32)) -> impl Iterator<Item = usize> + 'c {
        let w = self.width as usize;
        cand.runs.iter().flat_map(move |&(row, x, len)| {
            let start = (pos.1 + row) as usize * w + (pos.0 + x) as usize;
            start..start + len as usize
        })
    }

    fn overlaps_any(&self, cand: &Candidate, pos: (u32, u32)) -> bool {
        self.pixels(cand, pos).any(|i| self.top[i] != 0)
    }

    /// Would every instance of `layer` keep visibility at or above `floor`
    /// with the candidate on top?
    fn keeps_floor(&mut self, cand: &Candidate, pos: (u32, u32), layer: u8, floor: f64) -> bool {
        self.cover.resize(self.instances.len(), 0);
        let w = self.width as usize;
        for &(row, x, len) in &cand.runs {
            let start = (pos.1 + row) as usize * w + (pos.0 + x) as usize;
            for &id in &self.top[start..start + len as usize] {
                if id != 0 {
                    let j = id as usize - 1;
                    if self.cover[j] == 0 {
                        self.touched.push(j);
                    }
                    self.cover[j] += 1;
                }
            }
        }
        let mut ok = true;
        for &j in &self.touched {
            let inst = &self.instances[j];
            if inst.layer == layer && !meets_floor(inst.visible_area - self.cover[j], inst.amodal_area, floor) {
                ok = false;
            }
            self.cover[j] = 0;
        }
        self.touched.clear();
        ok
    }

    fn commit(&mut self, cand: Candidate, pos: (u32, u32), layer: u8) {
        let id = self.instances.len() as u32 + 1;
        let w = self.width as usize;
        for &(row, x, len) in &cand.runs {
            let start = (pos.1 + row) as usize * w + (pos.0 + x) as usize;
            for slot in &mut self.top[start..start + len as usize] {
                if *slot != 0 {
                    self.instances[*slot as usize - 1].visible_area -= 1;
                }
                *slot = id;
            }
        }
        self.instances.push(PlacedInstance {
            instance_id: id,
            asset_id: cand.asset.asset_id.clone(),
            class: cand.asset.size_class,
            augment: cand.params,
            position: pos,
            layer,
            z: id - 1,
            mask: cand.mask,
            amodal_area: cand.area,
            visible_area: cand.area,
            visibility: 1.0,
            layer_visible_area: cand.area,
            layer_visibility: 1.0,
        });
    }

    /// Freeze the within-layer visibility of instances `from..`.
    fn close_layer(&mut self, from: usize) {
        for inst in &mut self.instances[from..] {
            inst.layer_visible_area = inst.visible_area;
            inst.layer_visibility = ratio(inst.visible_area, inst.amodal_area);
        }
    }

    fn finish(mut self) -> Vec<PlacedInstance> {
        for inst in &mut self.instances {
            inst.visibility = ratio(inst.visible_area, inst.amodal_area);
        }
        self.instances
    }
}

/// The acceptance test shared by composition and audits.
pub fn meets_floor(visible: u64, amodal: u64, floor: f64) -> bool {
    ratio(visible, amodal) >= floor
}

fn ratio(visible: u64, amodal: u64) -> f64 {
    if amodal == 0 {
        0.0
    } else {
        visible as f64 / amodal as f64
    }
}

fn pick<'a, R: Rng>(catalog: &'a AssetCatalog, class: SizeClass, rng: &mut R) -> &'a ParticleAsset {
    let pool = catalog.pool(class);
    &pool[rng.random_range(0..pool.len())]
}

fn check_pools(catalog: &AssetCatalog, counts: &ClassCounts) -> Result<()> {
    for class in SizeClass::all() {
        if counts[class.slot()] > 0 && catalog.pool(class).is_empty() {
            return Err(Error::EmptyPool(class.index()));
        }
    }
    Ok(())
}

fn only_class(stage: &StageSpec, counts: &ClassCounts) -> Result<SizeClass> {
    stage.validate()?;
    let class = stage.classes[0];
    if stage.classes.len() != 1 {
        return Err(Error::param("classes", "expected a single class"));
    }
    if let Some(c) = (0..CLASS_COUNT).find(|&c| c != class.slot() && counts[c] > 0) {
        return Err(Error::param("counts", format!("class {} is not part of the stage", c + 1)));
    }
    Ok(class)
}

fn empty_scene(ctx: &ComposeContext, stage: Stage, counts: &ClassCounts) -> Result<Scene> {
    if ctx.width == 0 || ctx.height == 0 {
        return Err(Error::InvalidDimensions {
            width: ctx.width,
            height: ctx.height,
        });
    }
    ctx.augment.validate()?;
    Ok(Scene {
        stage,
        width: ctx.width,
        height: ctx.height,
        background_id: ctx.background_id.to_string(),
        seed: ctx.scene_seed(),
        instances: Vec::new(),
        target_counts: *counts,
        psd_histogram: [0; CLASS_COUNT],
        shortfall: [0; CLASS_COUNT],
    })
}

fn histogram(instances: &[PlacedInstance]) -> ClassCounts {
    let mut h = [0u32; CLASS_COUNT];
    for inst in instances {
        h[inst.class.slot()] += 1;
    }
    h
}

/// Non-overlapping dart throwing. The class count is a budget: throwing stops
/// once it is met or after `l1_saturation_patience` rejections in a row.
/// Attempt `k` draws from the seed stream of slot `k`.
pub fn compose_l1(ctx: &ComposeContext, counts: &ClassCounts, stage: &StageSpec) -> Result<Scene> {
    let class = only_class(stage, counts)?;
    let mut scene = empty_scene(ctx, Stage::L1, counts)?;
    check_pools(ctx.catalog, counts)?;
    let budget = counts[class.slot()];
    let mut board = Board::new(ctx.width, ctx.height);
    let mut misses = 0u32;
    let mut attempt = 0u64;
    while (board.instances.len() as u32) < budget && misses < stage.l1_saturation_patience {
        attempt += 1;
        let mut rng = ctx.slot_rng(attempt);
        let asset = pick(ctx.catalog, class, &mut rng);
        let cand = Candidate::new(asset, sample_params(&mut rng, ctx.augment));
        match cand.sample_position(&mut rng, board.width, board.height) {
            Some(pos) if !board.overlaps_any(&cand, pos) => {
                board.commit(cand, pos, class.layer());
                misses = 0;
            }
            _ => misses += 1,
        }
    }
    scene.instances = board.finish();
    scene.psd_histogram = histogram(&scene.instances);
    scene.shortfall[class.slot()] = budget - scene.psd_histogram[class.slot()];
    Ok(scene)
}

/// Single-class occluded placement.
pub fn compose_l2(ctx: &ComposeContext, counts: &ClassCounts, stage: &StageSpec) -> Result<Scene> {
    only_class(stage, counts)?;
    let mut scene = empty_scene(ctx, Stage::L2, counts)?;
    check_pools(ctx.catalog, counts)?;
    let mut order_rng = ctx.slot_rng(0);
    compose_layered(ctx, counts, stage, &mut scene, &mut order_rng);
    Ok(scene)
}

/// Multi-class layered placement, smaller classes at the bottom.
pub fn compose_l3(ctx: &ComposeContext, counts: &ClassCounts, stage: &StageSpec) -> Result<Scene> {
    stage.validate()?;
    let allowed = class_mask(&stage.classes);
    if let Some(c) = (0..CLASS_COUNT).find(|&c| counts[c] > 0 && !allowed[c]) {
        return Err(Error::param("counts", format!("class {} is not part of the stage", c + 1)));
    }
    let mut scene = empty_scene(ctx, Stage::L3, counts)?;
    check_pools(ctx.catalog, counts)?;
    let mut order_rng = ctx.slot_rng(0);
    compose_layered(ctx, counts, stage, &mut scene, &mut order_rng);
    Ok(scene)
}

/// Layers bottom-up; slots shuffled within a layer. Slot `k` (1-based, in
/// placement order) owns seed stream `k`: it draws one asset and one set of
/// augment params, then retries positions only.
fn compose_layered<R: Rng>(
    ctx: &ComposeContext,
    counts: &ClassCounts,
    stage: &StageSpec,
    scene: &mut Scene,
    order_rng: &mut R,
) {
    let mut board = Board::new(ctx.width, ctx.height);
    let mut slot = 0u64;
    let mut layers: Vec<u8> = SizeClass::all()
        .filter(|c| counts[c.slot()] > 0)
        .map(|c| c.layer())
        .collect();
    layers.dedup();
    for layer in layers {
        let mut slots: Vec<SizeClass> = SizeClass::all()
            .filter(|c| c.layer() == layer)
            .flat_map(|c| std::iter::repeat_n(c, counts[c.slot()] as usize))
            .collect();
        slots.shuffle(order_rng);
        let first = board.instances.len();
        for class in slots {
            slot += 1;
            let mut rng = ctx.slot_rng(slot);
            let asset = pick(ctx.catalog, class, &mut rng);
            let cand = Candidate::new(asset, sample_params(&mut rng, ctx.augment));
            let mut placed = None;
            for _ in 0..stage.max_place_attempts {
                let Some(pos) = cand.sample_position(&mut rng, board.width, board.height) else {
                    break;
                };
                if board.keeps_floor(&cand, pos, layer, stage.visibility_floor) {
                    placed = Some(pos);
                    break;
                }
            }
            match placed {
                Some(pos) => board.commit(cand, pos, layer),
                None => scene.shortfall[class.slot()] += 1,
            }
        }
        board.close_layer(first);
    }
    scene.instances = board.finish();
    scene.psd_histogram = histogram(&scene.instances);
}

/// Sample the scene's counts from `psd` (confined to the stage classes),
/// halve them for the low variant, and compose.
pub fn generate_scene(
    ctx: &ComposeContext,
    stage: &StageSpec,
    psd: &PsdSpec,
    variant: OcclusionVariant,
) -> Result<Scene> {
    stage.validate()?;
    let counts = sample_scene_counts(ctx, stage, psd, variant)?;
    match stage.stage {
        Stage::L1 => compose_l1(ctx, &counts, stage),
        Stage::L2 => compose_l2(ctx, &counts, stage),
        Stage::L3 => compose_l3(ctx, &counts, stage),
    }
}

/// The per-class targets [`generate_scene`] would use. The heavy and low
/// variants of one image index share the underlying draw.
pub fn sample_scene_counts(
    ctx: &ComposeContext,
    stage: &StageSpec,
    psd: &PsdSpec,
    variant: OcclusionVariant,
) -> Result<ClassCounts> {
    let mut rng = rng_from_seed(derive_instance_seed(ctx.master_seed, ctx.image_index, u64::MAX));
    let counts = sample_psd_over(psd, &class_mask(&stage.classes), &mut rng)?;
    Ok(match variant {
        OcclusionVariant::Heavy => counts,
        OcclusionVariant::Low => pair_occlusion_variant(&counts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::import_asset;
    use crate::geometry::RefineParams;
    use image::{Rgba, RgbaImage};

    fn square_asset(id: &str, side: u32, mm_per_px: f64) -> ParticleAsset {
        let mask = BinaryMask::from_fn(side, side, |_, _| true).unwrap();
        let cutout = RgbaImage::from_pixel(side, side, Rgba([200, 100, 50, 255]));
        import_asset(id, &cutout, &mask, mm_per_px, &RefineParams::default(), "test").unwrap()
    }

    fn one_square_catalog(side: u32) -> AssetCatalog {
        let asset = square_asset("sq", side, 0.3);
        AssetCatalog::from_assets(0.3, vec![asset]).unwrap()
    }

    fn ctx<'a>(catalog: &'a AssetCatalog, augment: &'a AugmentConfig, size: u32, seed: u64) -> ComposeContext<'a> {
        ComposeContext {
            catalog,
            width: size,
            height: size,
            augment,
            master_seed: seed,
            image_index: 0,
            background_id: "flat",
        }
    }

    fn only(class: SizeClass, n: u32) -> ClassCounts {
        let mut c = [0; CLASS_COUNT];
        c[class.slot()] = n;
        c
    }

    fn repaint(scene: &Scene, upto_layer: Option<u8>) -> Vec<u64> {
        let mut top = vec![0usize; (scene.width * scene.height) as usize];
        for (i, inst) in scene.instances.iter().enumerate() {
            if upto_layer.is_some_and(|l| inst.layer > l) {
                continue;
            }
            for p in inst.mask.foreground() {
                let (x, y) = (inst.position.0 + p.x as u32, inst.position.1 + p.y as u32);
                top[(y * scene.width + x) as usize] = i + 1;
            }
        }
        let mut visible = vec![0u64; scene.instances.len()];
        for id in top.into_iter().filter(|&id| id != 0) {
            visible[id - 1] += 1;
        }
        visible
    }

    #[test]
    fn single_l1_instance() {
        let catalog = one_square_catalog(60);
        let class = catalog.iter().next().unwrap().size_class;
        let aug = AugmentConfig::disabled();
        let stage = StageSpec::new(Stage::L1, vec![class]);
        let scene = compose_l1(&ctx(&catalog, &aug, 128, 1), &only(class, 1), &stage).unwrap();
        assert_eq!(scene.instances.len(), 1);
        assert_eq!(scene.instances[0].visibility, 1.0);
        assert_eq!(scene.instances[0].amodal_area, 60 * 60);
        scene.check().unwrap();
    }

    #[test]
    fn l1_never_overlaps() {
        let catalog = one_square_catalog(30);
        let class = catalog.iter().next().unwrap().size_class;
        let aug = AugmentConfig::default();
        let stage = StageSpec::new(Stage::L1, vec![class]);
        let scene = compose_l1(&ctx(&catalog, &aug, 256, 5), &only(class, 500), &stage).unwrap();
        assert!(scene.instances.len() > 10);
        let total: u64 = scene.instances.iter().map(|i| i.amodal_area).sum();
        let union: u64 = repaint(&scene, None).iter().sum();
        assert_eq!(total, union);
        assert!(scene.instances.iter().all(|i| i.visibility == 1.0));
        assert_eq!(scene.shortfall[class.slot()] as usize, 500 - scene.instances.len());
    }

    #[test]
    fn l2_keeps_floor_and_repaint_matches() {
        let catalog = one_square_catalog(40);
        let class = catalog.iter().next().unwrap().size_class;
        let aug = AugmentConfig::default();
        let stage = StageSpec::new(Stage::L2, vec![class]);
        let scene = compose_l2(&ctx(&catalog, &aug, 200, 9), &only(class, 40), &stage).unwrap();
        scene.check().unwrap();
        let visible = repaint(&scene, None);
        let mut occluded = 0;
        for (inst, &v) in scene.instances.iter().zip(&visible) {
            assert_eq!(inst.visible_area, v);
            assert!(inst.visibility >= 0.6 && inst.visibility <= 1.0);
            occluded += (inst.visibility < 1.0) as usize;
        }
        assert!(occluded > 0, "expected some occlusion");
    }

    #[test]
    fn floor_check_on_constructed_overlap() {
        // lower square 10x10 at origin; a 10x10 candidate shifted 7 px covers
        // 30% of it, shifted 5 px covers 50%
        let mut board = Board::new(40, 40);
        let asset = square_asset("sq", 10, 1.0);
        let cand = || Candidate::new(&asset, AugmentParams::IDENTITY);
        assert_eq!(cand().area, 100);
        board.commit(cand(), (0, 0), 0);
        assert!(board.keeps_floor(&cand(), (7, 0), 0, 0.6));
        assert!(!board.keeps_floor(&cand(), (5, 0), 0, 0.6));
        // different layer: unbounded
        assert!(board.keeps_floor(&cand(), (0, 0), 1, 0.6));
        board.commit(cand(), (7, 0), 0);
        let inst = board.finish();
        assert_eq!(inst[0].visible_area, 70);
        assert_eq!(inst[0].visibility, 0.7);
        assert_eq!(inst[1].visibility, 1.0);
    }

    #[test]
    fn l3_layers_and_within_layer_floor() {
        let mm = 0.1;
        let small = square_asset("small", 45, mm); // ~6.4 mm, class 2
        let big = square_asset("big", 120, mm); // ~17 mm, class 5
        let classes = [small.size_class, big.size_class];
        assert_eq!(classes.map(|c| c.layer()), [0, 1]);
        let catalog = AssetCatalog::from_assets(mm, vec![small, big]).unwrap();
        let aug = AugmentConfig::default();
        let stage = StageSpec::new(Stage::L3, classes.to_vec());
        let mut counts = [0; CLASS_COUNT];
        counts[classes[0].slot()] = 30;
        counts[classes[1].slot()] = 6;
        let scene = compose_l3(&ctx(&catalog, &aug, 300, 2), &counts, &stage).unwrap();
        scene.check().unwrap();
        let full = repaint(&scene, None);
        for layer in [0u8, 1] {
            let within = repaint(&scene, Some(layer));
            for (i, inst) in scene.instances.iter().enumerate().filter(|(_, i)| i.layer == layer) {
                assert_eq!(inst.layer_visible_area, within[i]);
                assert!(inst.layer_visibility >= 0.6);
                assert_eq!(inst.visible_area, full[i]);
            }
        }
        assert!(scene.instances.iter().any(|i| i.visibility < 0.6));
    }

    #[test]
    fn deterministic_and_variant_halves() {
        let catalog = one_square_catalog(20);
        let class = catalog.iter().next().unwrap().size_class;
        let aug = AugmentConfig::default();
        let stage = StageSpec::new(Stage::L2, vec![class]);
        let psd = PsdSpec::Uniform { total_count: 25 };
        let c = ctx(&catalog, &aug, 128, 77);
        let a = generate_scene(&c, &stage, &psd, OcclusionVariant::Heavy).unwrap();
        let b = generate_scene(&c, &stage, &psd, OcclusionVariant::Heavy).unwrap();
        assert_eq!(a, b);
        let low = generate_scene(&c, &stage, &psd, OcclusionVariant::Low).unwrap();
        assert_eq!(low.target_counts[class.slot()], 13);
    }

    #[test]
    fn empty_pool_and_bad_stage() {
        let catalog = one_square_catalog(20);
        let aug = AugmentConfig::default();
        let other = SizeClass::new(8).unwrap();
        let stage = StageSpec::new(Stage::L2, vec![other]);
        let err = compose_l2(&ctx(&catalog, &aug, 64, 1), &only(other, 1), &stage).unwrap_err();
        assert!(matches!(err, Error::EmptyPool(8)));
        let mut bad = StageSpec::new(Stage::L2, vec![other, SizeClass::new(1).unwrap()]);
        assert!(bad.validate().is_err());
        bad = StageSpec::new(Stage::L3, vec![other]);
        bad.visibility_floor = 1.5;
        assert!(bad.validate().is_err());
    }
}
