//! Instance-mask scoring: greedy one-to-one matching by IoU, mIoU over ground
//! truth, and the detection-set score TP / (TP + FP + FN) at IoU thresholds
//! 0.5 to 0.9.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BinaryMask, MaskRegion};
use crate::metadata::read_metadata;
use crate::pgm::read_pgm;
use crate::rle::{decode_region, Run};

/// IoU thresholds in percent.
pub const THRESHOLDS_PCT: [u32; 5] = [50, 60, 70, 80, 90];

/// Instance masks of one image in a shared canvas frame, with optional
/// per-mask confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    width: u32,
    height: u32,
    masks: Vec<MaskRegion>,
    confidences: Option<Vec<f64>>,
}

impl InstanceSet {
    /// Regions must lie inside the canvas; empty regions are dropped.
    pub fn new(width: u32, height: u32, masks: Vec<MaskRegion>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let mut kept = Vec::with_capacity(masks.len());
        for m in masks {
            let f = m.frame();
            if f.right() > width || f.bottom() > height {
                return Err(Error::param("masks", "mask exceeds the canvas"));
            }
            if let Some(t) = m.trimmed() {
                kept.push(t);
            }
        }
        Ok(Self {
            width,
            height,
            masks: kept,
            confidences: None,
        })
    }

    /// Canvas-sized masks, all of the same dimensions.
    pub fn from_canvas_masks(masks: &[BinaryMask]) -> Result<Self> {
        let Some(first) = masks.first() else {
            return Err(Error::param("masks", "cannot infer canvas size from an empty list"));
        };
        for m in masks {
            first.check_same_dims(m)?;
        }
        let regions = masks.iter().filter_map(MaskRegion::from_canvas).collect();
        Self::new(first.width(), first.height(), regions)
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, Vec::new())
    }

    /// Every nonzero id of a graymap is one instance, in id order.
    pub fn from_graymap(g: &crate::pgm::GraymapMask) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            masks: g.regions().into_iter().map(|(_, r)| r).collect(),
            confidences: None,
        }
    }

    pub fn with_confidences(mut self, confidences: Vec<f64>) -> Result<Self> {
        if confidences.len() != self.masks.len() {
            return Err(Error::param("confidences", "need one confidence per mask"));
        }
        if confidences.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param("confidences", "must lie in [0, 1]"));
        }
        self.confidences = Some(confidences);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[MaskRegion] {
        &self.masks
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    fn confidence(&self, i: usize) -> f64 {
        self.confidences.as_ref().map_or(0.0, |c| c[i])
    }

    fn check_same_canvas(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub gt: usize,
    pub pred: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `None` for the any-overlap matching used by mIoU.
    pub threshold: Option<f64>,
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_pred.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gt.len()
    }
}

/// All overlapping gt/pred pairs, sorted in greedy acceptance order.
struct Candidates {
    gt_count: usize,
    pred_count: usize,
    sorted: Vec<MatchPair>,
}

impl Candidates {
    fn new(gt: &InstanceSet, pred: &InstanceSet) -> Result<Self> {
        gt.check_same_canvas(pred)?;
        let mut pairs = overlapping_pairs(gt, pred);
        let rank = content_rank(&pred.masks);
        pairs.sort_by(|a, b| {
            b.iou
                .total_cmp(&a.iou)
                .then_with(|| pred.confidence(b.pred).total_cmp(&pred.confidence(a.pred)))
                .then(a.gt.cmp(&b.gt))
                .then(rank[a.pred].cmp(&rank[b.pred]))
                .then(a.pred.cmp(&b.pred))
        });
        Ok(Self {
            gt_count: gt.len(),
            pred_count: pred.len(),
            sorted: pairs,
        })
    }

    fn greedy(&self, threshold: Option<f64>) -> MatchResult {
        let mut gt_used = vec![false; self.gt_count];
        let mut pred_used = vec![false; self.pred_count];
        let mut pairs = Vec::new();
        for c in &self.sorted {
            if threshold.is_some_and(|t| c.iou < t) {
                // sorted by IoU: nothing further qualifies
                break;
            }
            if gt_used[c.gt] || pred_used[c.pred] {
                continue;
            }
            gt_used[c.gt] = true;
            pred_used[c.pred] = true;
            pairs.push(*c);
        }
        let unused = |used: &[bool]| used.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i).collect();
        MatchResult {
            threshold,
            pairs,
            unmatched_gt: unused(&gt_used),
            unmatched_pred: unused(&pred_used),
        }
    }
}

/// Pairs with positive intersection, found through a coarse grid over the
/// prediction bounding boxes.
fn overlapping_pairs(gt: &InstanceSet, pred: &InstanceSet) -> Vec<MatchPair> {
    const CELL: u32 = 128;
    let cols = gt.width.div_ceil(CELL) as usize;
    let rows = gt.height.div_ceil(CELL) as usize;
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cols * rows];
    let cells = |m: &MaskRegion| {
        let f = m.frame();
        let (c0, c1) = ((f.x / CELL) as usize, ((f.right() - 1) / CELL) as usize);
        let (r0, r1) = ((f.y / CELL) as usize, ((f.bottom() - 1) / CELL) as usize);
        (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| r * cols + c))
    };
    for (j, m) in pred.masks.iter().enumerate() {
        for cell in cells(m) {
            grid[cell].push(j);
        }
    }
    gt.masks
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            let near: BTreeSet<usize> = cells(g).flat_map(|cell| grid[cell].iter().copied()).collect();
            let area = g.area();
            near.into_iter().filter_map(move |j| {
                let p = &pred.masks[j];
                let inter = g.intersection_area(p);
                (inter > 0).then(|| MatchPair {
                    gt: i,
                    pred: j,
                    iou: inter as f64 / (area + p.area() - inter) as f64,
                })
            })
        })
        .collect()
}

/// Rank of each mask under an order that depends only on mask content, so
/// the matching does not depend on prediction order.
fn content_rank(masks: &[MaskRegion]) -> Vec<usize> {
    let key = |m: &MaskRegion| {
        let f = m.frame();
        (f.y, f.x, f.height, f.width, m.area())
    };
    let mut order: Vec<usize> = (0..masks.len()).collect();
    order.sort_by(|&a, &b| {
        key(&masks[a])
            .cmp(&key(&masks[b]))
            .then_with(|| masks[a].mask.bits().cmp(masks[b].mask.bits()))
    });
    let mut rank = vec![0; masks.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Greedy one-to-one matching: pairs with IoU at or above `threshold` are
/// accepted in descending IoU order.
pub fn match_instances(gt: &InstanceSet, pred: &InstanceSet, threshold: f64) -> Result<MatchResult> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param("threshold", "must lie in [0, 1]"));
    }
    Ok(Candidates::new(gt, pred)?.greedy(Some(threshold)))
}

/// Convenience form over canvas-sized masks.
pub fn match_masks(gt: &[BinaryMask], pred: &[BinaryMask], threshold: f64) -> Result<MatchResult> {
    let (gt, pred) = canvas_sets(gt, pred)?;
    match_instances(&gt, &pred, threshold)
}

fn canvas_sets(gt: &[BinaryMask], pred: &[BinaryMask]) -> Result<(InstanceSet, InstanceSet)> {
    let all: Vec<BinaryMask> = gt.iter().chain(pred).cloned().collect();
    let Some(first) = all.first() else {
        return Ok((InstanceSet::empty(1, 1)?, InstanceSet::empty(1, 1)?));
    };
    for m in &all {
        first.check_same_dims(m)?;
    }
    let to_set = |ms: &[BinaryMask]| InstanceSet::new(first.width(), first.height(), ms.iter().filter_map(MaskRegion::from_canvas).collect());
    Ok((to_set(gt)?, to_set(pred)?))
}

/// Σ matched IoU / |GT| with any positive overlap eligible.
pub fn mean_iou(gt: &InstanceSet, pred: &InstanceSet) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let m = Candidates::new(gt, pred)?.greedy(None);
    Ok(m.pairs.iter().map(|p| p.iou).sum::<f64>() / gt.len() as f64)
}

/// TP / (TP + FP + FN) at `threshold`; 1.0 when both sets are empty.
pub fn ap_at(gt: &InstanceSet, pred: &InstanceSet, threshold: f64) -> Result<f64> {
    let m = match_instances(gt, pred, threshold)?;
    Ok(detection_score(m.tp(), m.fp(), m.fn_()))
}

fn detection_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let den = tp + fp + fn_;
    if den == 0 {
        1.0
    } else {
        tp as f64 / den as f64
    }
}

fn fraction(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub threshold_pct: u32,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub image_id: String,
    pub gt_count: usize,
    pub pred_count: usize,
    /// `None` when the image has no ground-truth instances.
    pub miou: Option<f64>,
    pub thresholds: Vec<ThresholdMetrics>,
    /// Ground-truth instances matched at the lowest threshold.
    pub segmented: usize,
}

pub fn evaluate_image(image_id: &str, gt: &InstanceSet, pred: &InstanceSet) -> Result<ImageMetrics> {
    let cands = Candidates::new(gt, pred)?;
    let miou = (!gt.is_empty()).then(|| {
        let m = cands.greedy(None);
        m.pairs.iter().map(|p| p.iou).sum::<f64>() / gt.len() as f64
    });
    let both_empty = if gt.is_empty() && pred.is_empty() { 1.0 } else { 0.0 };
    let thresholds: Vec<ThresholdMetrics> = THRESHOLDS_PCT
        .iter()
        .map(|&pct| {
            let m = cands.greedy(Some(pct as f64 / 100.0));
            let (tp, fp, fn_) = (m.tp(), m.fp(), m.fn_());
            ThresholdMetrics {
                threshold_pct: pct,
                tp,
                fp,
                fn_,
                precision: fraction(tp, tp + fp, both_empty),
                recall: fraction(tp, tp + fn_, both_empty),
                ap: detection_score(tp, fp, fn_),
            }
        })
        .collect();
    Ok(ImageMetrics {
        image_id: image_id.to_string(),
        gt_count: gt.len(),
        pred_count: pred.len(),
        miou,
        segmented: thresholds[0].tp,
        thresholds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub image_count: usize,
    /// Mean over images that have ground truth.
    pub miou: Option<f64>,
    /// Per-threshold means over all images; counts are summed.
    pub thresholds: Vec<ThresholdMetrics>,
    pub segmented: usize,
    pub gt_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `visible` (graymap) or `amodal` (metadata) ground truth.
    pub ground_truth: String,
    pub images: Vec<ImageMetrics>,
    pub aggregate: AggregateMetrics,
}

pub fn aggregate(images: &[ImageMetrics]) -> AggregateMetrics {
    let n = images.len();
    let mean = |f: &dyn Fn(&ImageMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            images.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let with_gt: Vec<f64> = images.iter().filter_map(|m| m.miou).collect();
    let miou = (!with_gt.is_empty()).then(|| with_gt.iter().sum::<f64>() / with_gt.len() as f64);
    let thresholds = THRESHOLDS_PCT
        .iter()
        .enumerate()
        .map(|(k, &pct)| ThresholdMetrics {
            threshold_pct: pct,
            tp: images.iter().map(|m| m.thresholds[k].tp).sum(),
            fp: images.iter().map(|m| m.thresholds[k].fp).sum(),
            fn_: images.iter().map(|m| m.thresholds[k].fn_).sum(),
            precision: mean(&|m| m.thresholds[k].precision),
            recall: mean(&|m| m.thresholds[k].recall),
            ap: mean(&|m| m.thresholds[k].ap),
        })
        .collect();
    AggregateMetrics {
        image_count: n,
        miou,
        thresholds,
        segmented: images.iter().map(|m| m.segmented).sum(),
        gt_total: images.iter().map(|m| m.gt_count).sum(),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v))
}

impl MetricsReport {
    pub fn new(ground_truth: &str, images: Vec<ImageMetrics>) -> Self {
        let aggregate = aggregate(&images);
        Self {
            ground_truth: ground_truth.to_string(),
            images,
            aggregate,
        }
    }

    /// Fixed-width table in percent: image, mIoU, mAP50..mAP90, then
    /// segmented/total ground truth.
    pub fn table(&self) -> String {
        let id_width = self
            .images
            .iter()
            .map(|m| m.image_id.len())
            .chain([5])
            .max()
            .unwrap_or(5);
        let mut out = format!("{:<id_width$}  {:>7}", "image", "mIoU");
        for t in THRESHOLDS_PCT {
            let _ = write!(out, "  {:>7}", format!("mAP{t}"));
        }
        let _ = writeln!(out, "  {:>13}", "segmented");
        let mut row = |id: &str, miou: Option<f64>, aps: Vec<f64>, seg: usize, total: usize| {
            let _ = write!(out, "{id:<id_width$}  {:>7}", pct(miou));
            for ap in aps {
                let _ = write!(out, "  {:>7}", pct(Some(ap)));
            }
            let _ = writeln!(out, "  {:>13}", format!("{seg}/{total}"));
        };
        for m in &self.images {
            row(
                &m.image_id,
                m.miou,
                m.thresholds.iter().map(|t| t.ap).collect(),
                m.segmented,
                m.gt_count,
            );
        }
        let a = &self.aggregate;
        row(
            "mean",
            a.miou,
            a.thresholds.iter().map(|t| t.ap).collect(),
            a.segmented,
            a.gt_total,
        );
        out
    }

    /// One row per image plus a `mean` row; fractions, not percent.
    pub fn csv(&self) -> String {
        let mut out = String::from("image_id,gt_count,pred_count,miou");
        for t in THRESHOLDS_PCT {
            let _ = write!(out, ",ap{t},tp{t},fp{t},fn{t},precision{t},recall{t}");
        }
        out.push('\n');
        let mut row = |id: &str, gt: usize, pred: Option<usize>, miou: Option<f64>, ts: &[ThresholdMetrics]| {
            let pred = pred.map_or(String::new(), |p| p.to_string());
            let miou = miou.map_or(String::new(), |v| v.to_string());
            let _ = write!(out, "{id},{gt},{pred},{miou}");
            for t in ts {
                let _ = write!(out, ",{},{},{},{},{},{}", t.ap, t.tp, t.fp, t.fn_, t.precision, t.recall);
            }
            out.push('\n');
        };
        for m in &self.images {
            row(&m.image_id, m.gt_count, Some(m.pred_count), m.miou, &m.thresholds);
        }
        let a = &self.aggregate;
        row("mean", a.gt_total, None, a.miou, &a.thresholds);
        out
    }
}

/// Per-instance prediction document. Metadata records parse as one too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionDocument {
    pub width: u32,
    pub height: u32,
    pub instances: Vec<PredictionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub rle: Vec<Run>,
    #[serde(default)]
    pub confidence: Option<f64>,
}

impl PredictionDocument {
    pub fn to_instances(&self) -> Result<InstanceSet> {
        let masks = self
            .instances
            .iter()
            .map(|e| decode_region(&e.rle, self.width, self.height))
            .collect::<Result<Vec<_>>>()?;
        let confidences: Vec<Option<f64>> = self
            .instances
            .iter()
            .zip(&masks)
            .filter(|(_, m)| m.is_some())
            .map(|(e, _)| e.confidence)
            .collect();
        let set = InstanceSet::new(self.width, self.height, masks.into_iter().flatten().collect())?;
        if confidences.iter().any(Option::is_some) {
            if confidences.iter().any(Option::is_none) {
                return Err(Error::param("confidence", "present on some instances only"));
            }
            return set.with_confidences(confidences.into_iter().flatten().collect());
        }
        Ok(set)
    }
}

pub fn read_prediction_document(path: impl AsRef<Path>) -> Result<InstanceSet> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_slice(&data);
    let doc: PredictionDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::in_file(
            path,
            Error::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            },
        )
    })?;
    doc.to_instances().map_err(|e| Error::in_file(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Score against amodal masks from the metadata documents instead of the
    /// visible masks in the graymaps.
    pub amodal: bool,
}

/// Image ids of a dataset directory: stems of its `.pgm` files, sorted.
pub fn dataset_ids(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "pgm") && path.is_file() {
            if let Some(stem) = path.file_stem() {
                ids.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

fn load_gt(gt_dir: &Path, id: &str, opts: EvalOptions) -> Result<InstanceSet> {
    if opts.amodal {
        let path = gt_dir.join(format!("{id}.json"));
        let record = read_metadata(&path)?;
        let regions = record.amodal_regions().map_err(|e| Error::in_file(&path, e))?;
        InstanceSet::new(record.width, record.height, regions)
    } else {
        let path = gt_dir.join(format!("{id}.pgm"));
        let g = read_pgm(&path).map_err(|e| Error::in_file(&path, e))?;
        Ok(InstanceSet::from_graymap(&g))
    }
}

fn prediction_path(pred_dir: &Path, id: &str) -> Option<PathBuf> {
    ["pgm", "json"]
        .iter()
        .map(|ext| pred_dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

fn load_pred(path: &Path) -> Result<InstanceSet> {
    if path.extension().is_some_and(|e| e == "pgm") {
        let g = read_pgm(path).map_err(|e| Error::in_file(path, e))?;
        Ok(InstanceSet::from_graymap(&g))
    } else {
        read_prediction_document(path)
    }
}

/// Score every ground-truth image against its prediction (`<id>.pgm`, else
/// `<id>.json`). Extra prediction files are ignored.
pub fn evaluate_dataset(gt_dir: &Path, pred_dir: &Path, opts: EvalOptions) -> Result<MetricsReport> {
    let ids = dataset_ids(gt_dir)?;
    if ids.is_empty() {
        return Err(Error::param(
            "gt",
            format!("no ground-truth graymaps in {}", gt_dir.display()),
        ));
    }
    if !pred_dir.is_dir() {
        return Err(Error::io(
            pred_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "prediction directory not found"),
        ));
    }
    let paths: Vec<Option<PathBuf>> = ids.iter().map(|id| prediction_path(pred_dir, id)).collect();
    let missing: Vec<String> = ids
        .iter()
        .zip(&paths)
        .filter(|(_, p)| p.is_none())
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let images = ids
        .par_iter()
        .zip(paths.par_iter())
        .map(|(id, path)| {
            let path = path.as_ref().expect("checked above");
            let gt = load_gt(gt_dir, id, opts)?;
            let pred = load_pred(path)?;
            if gt.dims() != pred.dims() {
                return Err(Error::in_file(
                    path,
                    Error::DimensionMismatch {
                        left_width: gt.width,
                        left_height: gt.height,
                        right_width: pred.width,
                        right_height: pred.height,
                    },
                ));
            }
            evaluate_image(id, &gt, &pred)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::new(
        if opts.amodal { "amodal" } else { "visible" },
        images,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mask_iou;

    fn rect(w: u32, h: u32, x0: u32, y0: u32, rw: u32, rh: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh).unwrap()
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let gt = vec![rect(64, 64, 0, 0, 10, 10), rect(64, 64, 30, 30, 12, 8)];
        let m = match_masks(&gt, &gt, 0.5).unwrap();
        assert_eq!(m.tp(), 2);
        assert!(m.pairs.iter().all(|p| p.iou == 1.0 && p.gt == p.pred));
        let (g, p) = canvas_sets(&gt, &gt).unwrap();
        assert_eq!(mean_iou(&g, &p).unwrap(), 1.0);
        for t in THRESHOLDS_PCT {
            assert_eq!(ap_at(&g, &p, t as f64 / 100.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn duplicate_prediction_is_false_positive() {
        let gt = vec![rect(32, 32, 4, 4, 10, 10)];
        let pred = vec![gt[0].clone(), gt[0].clone()];
        let m = match_masks(&gt, &pred, 0.5).unwrap();
        assert_eq!((m.tp(), m.fp(), m.fn_()), (1, 1, 0));
        let (g, p) = canvas_sets(&gt, &pred).unwrap();
        assert_eq!(ap_at(&g, &p, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn iou_055_crosses_only_the_first_threshold() {
        // 55 px of a 100 px square: IoU 55 / 100
        let gt = vec![rect(40, 40, 0, 0, 10, 10)];
        let pred = vec![BinaryMask::from_fn(40, 40, |x, y| y * 10 + x < 55 && x < 10 && y < 10).unwrap()];
        assert_eq!(pred[0].area(), 55);
        assert!((mask_iou(&gt[0], &pred[0]).unwrap() - 0.55).abs() < 1e-12);
        let (g, p) = canvas_sets(&gt, &pred).unwrap();
        assert_eq!(ap_at(&g, &p, 0.5).unwrap(), 1.0);
        assert_eq!(ap_at(&g, &p, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn missed_instance_halves_miou() {
        let gt = vec![rect(40, 40, 0, 0, 5, 5), rect(40, 40, 20, 20, 5, 5)];
        let pred = vec![gt[0].clone()];
        let (g, p) = canvas_sets(&gt, &pred).unwrap();
        assert!((mean_iou(&g, &p).unwrap() - 0.5).abs() < 1e-12);
        let none = InstanceSet::empty(40, 40).unwrap();
        assert_eq!(mean_iou(&g, &none).unwrap(), 0.0);
        assert_eq!(ap_at(&g, &none, 0.5).unwrap(), 0.0);
        assert!(matches!(mean_iou(&none, &g), Err(Error::NoGroundTruth)));
        assert_eq!(ap_at(&none, &none, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn matches_exhaustive_assignment_on_toy_case() {
        let gt = vec![rect(64, 64, 2, 2, 12, 12), rect(64, 64, 20, 5, 15, 10), rect(64, 64, 40, 40, 10, 16)];
        let pred = vec![rect(64, 64, 21, 6, 15, 9), rect(64, 64, 40, 42, 11, 15), rect(64, 64, 3, 2, 12, 13)];
        let iou: Vec<Vec<f64>> = gt.iter().map(|g| pred.iter().map(|p| mask_iou(g, p).unwrap()).collect()).collect();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .max_by(|a, b| {
                let s = |p: &[usize; 3]| (0..3).map(|i| iou[i][p[i]]).sum::<f64>();
                s(a).total_cmp(&s(b))
            })
            .unwrap();
        let m = match_masks(&gt, &pred, 0.5).unwrap();
        assert_eq!(m.tp(), 3);
        for pair in &m.pairs {
            assert_eq!(best[pair.gt], pair.pred);
            assert_eq!(pair.iou, iou[pair.gt][pair.pred]);
        }
    }

    #[test]
    fn order_of_predictions_does_not_matter() {
        // two preds tie for one gt with equal IoU
        let gt = vec![rect(32, 32, 10, 10, 10, 10)];
        let a = rect(32, 32, 10, 5, 10, 10);
        let b = rect(32, 32, 10, 15, 10, 10);
        let m1 = match_masks(&gt, &[a.clone(), b.clone()], 0.3).unwrap();
        let m2 = match_masks(&gt, &[b, a], 0.3).unwrap();
        assert_eq!(m1.pairs[0].pred, 0);
        assert_eq!(m2.pairs[0].pred, 1);
    }

    #[test]
    fn background_prediction_lowers_ap_only() {
        let gt = vec![rect(32, 32, 0, 0, 8, 8)];
        let pred = vec![gt[0].clone(), rect(32, 32, 20, 20, 4, 4)];
        let (g, p1) = canvas_sets(&gt, &gt).unwrap();
        let (_, p2) = canvas_sets(&gt, &pred).unwrap();
        assert_eq!(mean_iou(&g, &p1).unwrap(), mean_iou(&g, &p2).unwrap());
        assert!(ap_at(&g, &p2, 0.5).unwrap() < ap_at(&g, &p1, 0.5).unwrap());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(match_masks(&[rect(8, 8, 0, 0, 2, 2)], &[rect(9, 8, 0, 0, 2, 2)], 0.5).is_err());
    }

    #[test]
    fn aggregate_is_unweighted_mean() {
        let gt = vec![rect(32, 32, 0, 0, 8, 8), rect(32, 32, 16, 16, 8, 8)];
        let (g, full) = canvas_sets(&gt, &gt).unwrap();
        let (_, half) = canvas_sets(&gt, &gt[..1]).unwrap();
        let a = evaluate_image("a", &g, &full).unwrap();
        let b = evaluate_image("b", &g, &half).unwrap();
        let report = MetricsReport::new("visible", vec![a, b]);
        assert_eq!(report.aggregate.miou, Some(0.75));
        assert_eq!(report.aggregate.thresholds[0].ap, 0.75);
        assert_eq!(report.aggregate.segmented, 3);
        assert!(report.table().contains("75.00"));
        assert_eq!(report.csv().lines().count(), 4);
    }
}
