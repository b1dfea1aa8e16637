use std::path::PathBuf;
use std::process::ExitCode;

use aggsynth::geometry::RefineParams;
use aggsynth::library::AssetCatalog;
use aggsynth::sieve::SizeClass;
use aggsynth_cli::config::GenerationConfig;
use aggsynth_cli::generate::{generate, resolve_catalog, CATALOG_ENV};
use aggsynth_cli::{exit_code, input_error, presets, stats};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aggsynth", version, about = "Synthetic occluded-particle datasets and mask evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine, size and classify cutout/mask pairs into a catalog
    Import {
        /// Directory holding `X.png` cutouts with `X_mask.png` or `X_mask.pgm` masks
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        mm_per_px: f64,
        /// Catalog directory; an existing catalog there is extended
        #[arg(long)]
        out: PathBuf,
        /// Structuring element radius of the default refinement
        #[arg(long, default_value_t = 1)]
        refine_radius: u32,
    },
    /// Generate a dataset from a config file or a preset
    Generate(GenerateArgs),
    /// Score predicted masks against ground truth
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Directory for report.json and report.csv [default: the prediction directory]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against amodal masks from the metadata instead of visible masks
        #[arg(long)]
        amodal: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Color instance ids over an image
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        graymap: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Class and visibility statistics of a generated dataset
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Also write the statistics as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List presets, or print one
    Presets { name: Option<String> },
    /// Write procedural particles for demos and tests
    SynthAssets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        mm_per_px: f64,
        #[arg(long, default_value_t = 4)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated class numbers [default: all]
        #[arg(long, value_delimiter = ',')]
        classes: Vec<u8>,
        /// Write a ready catalog instead of cutout/mask pairs
        #[arg(long)]
        catalog: bool,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Output directory [default: `output_dir` of the config]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = CATALOG_ENV)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Override `image_count`
    #[arg(long)]
    images: Option<u32>,
    /// Override `master_seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Override the canvas size, `WIDTHxHEIGHT`
    #[arg(long)]
    canvas: Option<String>,
}

fn parse_canvas(s: &str) -> anyhow::Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| input_error(format!("--canvas `{s}`: expected WIDTHxHEIGHT")))?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| input_error(format!("--canvas `{s}`: {e}")));
    Ok((parse(w)?, parse(h)?))
}

fn run_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => GenerationConfig::load(path)?,
        (None, Some(name)) => presets::load(name)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(n) = args.images {
        cfg.image_count = n;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(c) = &args.canvas {
        (cfg.canvas_width, cfg.canvas_height) = parse_canvas(c)?;
    }
    cfg.validate()?;
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| input_error("no output directory; pass --out or set `output_dir`"))?;
    let catalog_path = resolve_catalog(args.catalog.as_deref(), &cfg)?;
    let catalog = AssetCatalog::load(&catalog_path, Some(cfg.mm_per_px))?;
    let manifest = generate(&cfg, &catalog, &out, args.jobs)?;
    let total: usize = manifest.images.iter().map(|s| s.instances).sum();
    let shortfall: u32 = manifest.images.iter().map(|s| s.shortfall).sum();
    println!(
        "wrote {} images ({} instances, shortfall {}) to {}",
        manifest.images.len(),
        total,
        shortfall,
        out.display()
    );
    if !manifest.out_of_range.is_empty() {
        eprintln!(
            "warning: instance count outside {:?} for {}",
            cfg.expected_count_range.unwrap_or_default(),
            manifest.out_of_range.join(", ")
        );
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Import {
            src,
            mm_per_px,
            out,
            refine_radius,
        } => {
            let refine = RefineParams {
                radius: refine_radius,
                ..RefineParams::default()
            };
            let summary = aggsynth_cli::import::import_dir(&src, mm_per_px, &out, &refine)?;
            for path in &summary.unpaired {
                eprintln!("warning: unpaired file {}", path.display());
            }
            for (path, reason) in &summary.skipped {
                eprintln!("warning: skipped {}: {reason}", path.display());
            }
            println!("imported {} assets into {}", summary.imported.len(), out.display());
            println!("class  assets");
            for (k, n) in summary.per_class.iter().enumerate() {
                println!("{:>5}  {n:>6}", k + 1);
            }
        }
        Command::Generate(args) => run_generate(args)?,
        Command::Evaluate {
            gt,
            pred,
            out,
            amodal,
            jobs,
        } => {
            let out = out.unwrap_or_else(|| pred.clone());
            let report = aggsynth_cli::evaluate(&gt, &pred, &out, amodal, jobs)?;
            print!("{}", report.table());
        }
        Command::Overlay {
            image,
            graymap,
            out,
            alpha,
        } => aggsynth_cli::overlay_files(&image, &graymap, &out, alpha)?,
        Command::Stats { dataset, json } => {
            let report = stats::dataset_stats(&dataset)?;
            print!("{}", report.table());
            if let Some(path) = json {
                let mut text = serde_json::to_string_pretty(&report)?;
                text.push('\n');
                std::fs::write(&path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            }
        }
        Command::Presets { name: None } => {
            for name in presets::NAMES {
                println!("{name}");
            }
        }
        Command::Presets { name: Some(name) } => {
            let text = presets::text(&name).ok_or_else(|| input_error(format!("unknown preset `{name}`")))?;
            print!("{text}");
        }
        Command::SynthAssets {
            out,
            mm_per_px,
            per_class,
            seed,
            classes,
            catalog,
        } => {
            let classes: Vec<SizeClass> = if classes.is_empty() {
                SizeClass::all().collect()
            } else {
                classes.into_iter().map(SizeClass::new).collect::<Result<_, _>>()?
            };
            let n = aggsynth_cli::synth_assets(&out, mm_per_px, per_class, seed, &classes, catalog)?;
            println!("wrote {n} synthetic particles to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
