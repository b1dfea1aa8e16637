//! Particle-size distributions over the eight sieve classes.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{ClassCounts, SizeClass, CLASS_COUNT};

/// Target distribution of particle counts per image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsdSpec {
    /// Equal class probabilities.
    Uniform { total_count: u32 },
    /// Class probabilities proportional to a normal density evaluated at the
    /// class numbers 1..=8.
    Gaussian {
        mean_class: f64,
        std_class: f64,
        total_count: u32,
    },
    /// Class probabilities drawn per image from a flat Dirichlet.
    Random { total_count: u32 },
    /// Fixed counts, returned verbatim.
    Explicit { counts: ClassCounts },
}

impl PsdSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PsdSpec::Uniform { total_count } | PsdSpec::Random { total_count } if total_count == 0 => {
                Err(Error::param("total_count", "must be positive"))
            }
            PsdSpec::Gaussian {
                mean_class,
                std_class,
                total_count,
            } => {
                if total_count == 0 {
                    Err(Error::param("total_count", "must be positive"))
                } else if !mean_class.is_finite() {
                    Err(Error::param("mean_class", "must be finite"))
                } else if !(std_class.is_finite() && std_class > 0.0) {
                    Err(Error::param("std_class", "must be positive"))
                } else {
                    Ok(())
                }
            }
            PsdSpec::Explicit { counts } if counts.iter().all(|&c| c == 0) => {
                Err(Error::param("counts", "must have a positive sum"))
            }
            _ => Ok(()),
        }
    }

    pub fn total_count(&self) -> u32 {
        match *self {
            PsdSpec::Uniform { total_count }
            | PsdSpec::Random { total_count }
            | PsdSpec::Gaussian { total_count, .. } => total_count,
            PsdSpec::Explicit { counts } => counts.iter().sum(),
        }
    }
}

/// Class probabilities of a gaussian PSD restricted to `allowed`.
pub fn gaussian_probabilities(mean_class: f64, std_class: f64, allowed: &[bool; CLASS_COUNT]) -> [f64; CLASS_COUNT] {
    let mut p: [f64; CLASS_COUNT] = std::array::from_fn(|i| {
        if allowed[i] {
            let z = (i as f64 + 1.0 - mean_class) / std_class;
            (-0.5 * z * z).exp()
        } else {
            0.0
        }
    });
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        // far tails underflow; fall back to the allowed class nearest the mean
        let nearest = (0..CLASS_COUNT)
            .filter(|&i| allowed[i])
            .min_by(|&a, &b| {
                let da = (a as f64 + 1.0 - mean_class).abs();
                let db = (b as f64 + 1.0 - mean_class).abs();
                da.total_cmp(&db)
            })
            .expect("at least one class allowed");
        p[nearest] = 1.0;
    }
    p
}

/// Multinomial draw via sequential conditional binomials.
pub fn multinomial<R: Rng>(rng: &mut R, total: u32, probs: &[f64; CLASS_COUNT]) -> ClassCounts {
    let mut counts = [0u32; CLASS_COUNT];
    let mut remaining = total as u64;
    let mut mass_left = 1.0f64;
    let last = (0..CLASS_COUNT).rev().find(|&i| probs[i] > 0.0).unwrap_or(CLASS_COUNT - 1);
    for i in 0..CLASS_COUNT {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining as u32;
            break;
        }
        if probs[i] <= 0.0 {
            continue;
        }
        let p = (probs[i] / mass_left).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, p).expect("p in [0, 1]").sample(rng);
        counts[i] = k as u32;
        remaining -= k;
        mass_left -= probs[i];
    }
    counts
}

/// Sample per-class counts over all eight classes.
pub fn sample_psd<R: Rng>(spec: &PsdSpec, rng: &mut R) -> Result<ClassCounts> {
    sample_psd_over(spec, &[true; CLASS_COUNT], rng)
}

/// Sample per-class counts with probability mass confined to the `allowed`
/// classes. Explicit counts are returned verbatim and must not use
/// disallowed classes.
pub fn sample_psd_over<R: Rng>(spec: &PsdSpec, allowed: &[bool; CLASS_COUNT], rng: &mut R) -> Result<ClassCounts> {
    spec.validate()?;
    let n_allowed = allowed.iter().filter(|&&a| a).count();
    if n_allowed == 0 {
        return Err(Error::param("classes", "no class allowed"));
    }
    let probs: [f64; CLASS_COUNT] = match *spec {
        PsdSpec::Explicit { counts } => {
            if let Some(i) = (0..CLASS_COUNT).find(|&i| counts[i] > 0 && !allowed[i]) {
                return Err(Error::param(
                    "counts",
                    format!("class {} is not part of the stage", i + 1),
                ));
            }
            return Ok(counts);
        }
        PsdSpec::Uniform { .. } => {
            std::array::from_fn(|i| if allowed[i] { 1.0 / n_allowed as f64 } else { 0.0 })
        }
        PsdSpec::Gaussian {
            mean_class,
            std_class,
            ..
        } => gaussian_probabilities(mean_class, std_class, allowed),
        PsdSpec::Random { .. } => {
            let draws: [f64; CLASS_COUNT] =
                std::array::from_fn(|i| if allowed[i] { Exp1.sample(rng) } else { 0.0 });
            let total: f64 = draws.iter().sum();
            draws.map(|d| d / total)
        }
    };
    Ok(multinomial(rng, spec.total_count(), &probs))
}

/// Allowed-class mask from a class list.
pub fn class_mask(classes: &[SizeClass]) -> [bool; CLASS_COUNT] {
    let mut allowed = [false; CLASS_COUNT];
    for c in classes {
        allowed[c.slot()] = true;
    }
    allowed
}

/// The low-occlusion partner of a scene: every class count halved, rounding
/// up, so the distribution shape is kept.
pub fn pair_occlusion_variant(counts: &ClassCounts) -> ClassCounts {
    counts.map(|c| c.div_ceil(2))
}
