//! Dataset statistics from the metadata records: class histograms,
//! shortfall and visibility distribution.

use std::fmt::Write as _;
use std::path::Path;

use aggsynth::eval::dataset_ids;
use aggsynth::metadata::{read_metadata, ImageRecord};
use aggsynth::sieve::{ClassCounts, CLASS_COUNT};
use serde::{Deserialize, Serialize};

use crate::config::input_error;

/// Visibility bins: `[0, 0.1)`, ..., `[0.9, 1.0)`, then exactly `1.0`.
pub const VISIBILITY_BINS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageStats {
    pub image_id: String,
    pub instances: usize,
    pub target_counts: ClassCounts,
    pub histogram: ClassCounts,
    pub shortfall: ClassCounts,
    pub visibility_histogram: [u64; VISIBILITY_BINS],
    pub mean_visibility: Option<f64>,
    /// Instances with no visible pixel left.
    pub hidden: usize,
    pub min_layer_visibility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub images: Vec<ImageStats>,
    pub histogram: ClassCounts,
    pub shortfall: ClassCounts,
    pub visibility_histogram: [u64; VISIBILITY_BINS],
    pub instances: usize,
    pub hidden: usize,
}

fn bin(v: f64) -> usize {
    if v >= 1.0 {
        VISIBILITY_BINS - 1
    } else {
        ((v * 10.0).floor() as usize).min(VISIBILITY_BINS - 2)
    }
}

pub fn image_stats(r: &ImageRecord) -> ImageStats {
    let mut visibility_histogram = [0u64; VISIBILITY_BINS];
    for inst in &r.instances {
        visibility_histogram[bin(inst.visibility)] += 1;
    }
    let n = r.instances.len();
    ImageStats {
        image_id: r.image_id.clone(),
        instances: n,
        target_counts: r.target_counts,
        histogram: r.psd_histogram,
        shortfall: r.shortfall,
        visibility_histogram,
        mean_visibility: (n > 0).then(|| r.instances.iter().map(|i| i.visibility).sum::<f64>() / n as f64),
        hidden: r.instances.iter().filter(|i| i.visible_area == 0).count(),
        min_layer_visibility: r.instances.iter().map(|i| i.layer_visibility).min_by(f64::total_cmp),
    }
}

pub fn dataset_stats(dir: &Path) -> anyhow::Result<StatsReport> {
    if !dir.is_dir() {
        return Err(input_error(format!("{}: not a directory", dir.display())));
    }
    let ids = dataset_ids(dir)?;
    if ids.is_empty() {
        return Err(input_error(format!("no images in {}", dir.display())));
    }
    let images = ids
        .iter()
        .map(|id| Ok(image_stats(&read_metadata(dir.join(format!("{id}.json")))?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut report = StatsReport {
        histogram: [0; CLASS_COUNT],
        shortfall: [0; CLASS_COUNT],
        visibility_histogram: [0; VISIBILITY_BINS],
        instances: 0,
        hidden: 0,
        images: Vec::new(),
    };
    for s in &images {
        for c in 0..CLASS_COUNT {
            report.histogram[c] += s.histogram[c];
            report.shortfall[c] += s.shortfall[c];
        }
        for b in 0..VISIBILITY_BINS {
            report.visibility_histogram[b] += s.visibility_histogram[b];
        }
        report.instances += s.instances;
        report.hidden += s.hidden;
    }
    report.images = images;
    Ok(report)
}

impl StatsReport {
    pub fn table(&self) -> String {
        let w = self.images.iter().map(|s| s.image_id.len()).chain([5]).max().unwrap_or(5);
        let mut out = format!("{:<w$}  {:>6}", "image", "count");
        for c in 1..=CLASS_COUNT {
            let _ = write!(out, "  {:>5}", format!("c{c}"));
        }
        let _ = writeln!(out, "  {:>9}  {:>8}  {:>6}", "shortfall", "mean_vis", "hidden");
        let mut row = |id: &str, n: usize, h: &ClassCounts, short: u32, vis: Option<f64>, hidden: usize| {
            let _ = write!(out, "{id:<w$}  {n:>6}");
            for v in h {
                let _ = write!(out, "  {v:>5}");
            }
            let vis = vis.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(out, "  {short:>9}  {vis:>8}  {hidden:>6}");
        };
        for s in &self.images {
            row(&s.image_id, s.instances, &s.histogram, s.shortfall.iter().sum(), s.mean_visibility, s.hidden);
        }
        let total_vis = {
            let n: usize = self.images.iter().map(|s| s.instances).sum();
            let sum: f64 = self
                .images
                .iter()
                .filter_map(|s| s.mean_visibility.map(|m| m * s.instances as f64))
                .sum();
            (n > 0).then(|| sum / n as f64)
        };
        row("total", self.instances, &self.histogram, self.shortfall.iter().sum(), total_vis, self.hidden);
        out.push_str("\nvisibility  ");
        for b in 0..VISIBILITY_BINS - 1 {
            let _ = write!(out, " {:>3}%", b * 10);
        }
        out.push_str(" =100%\ninstances   ");
        for v in self.visibility_histogram {
            let _ = write!(out, " {v:>4}");
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins() {
        assert_eq!(bin(0.0), 0);
        assert_eq!(bin(0.59999), 5);
        assert_eq!(bin(0.6), 6);
        assert_eq!(bin(0.99999), 9);
        assert_eq!(bin(1.0), 10);
    }
}
