//! Command-line interface.
//!
//! Three subcommands: `run` simulates scanpaths and writes JSON + overlay
//! artifacts, `saliency` aggregates scanpath documents into a fixation
//! density PGM, and `features` dumps the per-patch channel maps a stimulus
//! produces. Usage errors exit 2 (via clap); runtime failures exit 1 with a
//! one-line diagnostic.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::artifacts::{
    document_from_trace, normalize_unit, read_scanpath, render_overlay, saliency_from_points,
    write_matrix_text, write_patch_map_pgm, write_scanpath_document,
};
use crate::engine::{prepare_context, run_batch, summarize_saccades, TrialConfig, TrialContext};
use crate::error::{Error, Result};
use crate::foveation::VisibilityProfile;
use crate::raster::{load_gray_image, synthesize_one_over_f, GrayImage};
use crate::response::{BlockinessFile, DistortionProvider, ResponseExponents};
use crate::searchers::SearcherKind;

#[derive(Debug, Parser)]
#[command(
    name = "foveal-search",
    version,
    about = "Foveated Bayesian visual-search simulator: predicts fixation scanpaths"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate fixation scanpaths on a stimulus image.
    Run(RunArgs),
    /// Aggregate scanpath documents into one saliency map PGM.
    Saliency(SaliencyArgs),
    /// Dump per-patch feature channel maps for a stimulus.
    Features(FeaturesArgs),
}

/// Stimulus source: exactly one of a file or a synthesized noise image.
#[derive(Debug, Args)]
struct StimulusArgs {
    /// Stimulus image file (PNG, BMP, or PGM; converted to grayscale).
    #[arg(long, value_name = "FILE", conflicts_with = "synthetic_1of",
          required_unless_present = "synthetic_1of")]
    image: Option<PathBuf>,

    /// Synthesize a 1/f noise stimulus of the given size instead, e.g. 256x256.
    #[arg(long = "synthetic-1of", value_name = "WxH", value_parser = parse_dims)]
    synthetic_1of: Option<(u32, u32)>,
}

impl StimulusArgs {
    /// Loads or synthesizes the stimulus plus a source tag for metadata.
    fn realize(&self, seed: u64) -> Result<(GrayImage, String)> {
        match (&self.image, self.synthetic_1of) {
            (Some(path), None) => Ok((load_gray_image(path)?, path.display().to_string())),
            (None, Some((width, height))) => {
                let image = synthesize_one_over_f(width, height, seed)?;
                Ok((image, format!("1of:{width}x{height}:seed={seed}")))
            }
            _ => unreachable!("clap enforces exactly one stimulus source"),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    stimulus: StimulusArgs,

    /// Fixation selection rule.
    #[arg(long, default_value = "elm", value_name = "map|elm|nelm")]
    searcher: SearcherKind,

    /// Fixations per trial, including the forced center start.
    #[arg(long, default_value_t = 12, value_parser = parse_count)]
    fixations: usize,

    /// Patch side length in pixels.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(2..))]
    patch_size: u32,

    /// Peak detectability at the fovea.
    #[arg(long, default_value_t = 5.0, value_parser = parse_positive)]
    mu: f64,

    /// Detectability falloff scale in pixels.
    #[arg(long, default_value_t = 50.0, value_parser = parse_positive)]
    sigma: f64,

    /// Channel exponents as contrast,luminance,entropy,blockiness.
    #[arg(long, default_value = "1,1,1,1", value_parser = parse_exponents)]
    exponents: ResponseExponents,

    /// Fixations remembered by inhibition of return; 0 disables it.
    #[arg(long, default_value_t = 8)]
    inhibition: usize,

    /// Base seed; trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of independent trials.
    #[arg(long, default_value_t = 1, value_parser = parse_count)]
    trials: usize,

    /// Modulate responses by the blockiness channel.
    #[arg(long)]
    distorted: bool,

    /// Per-patch blockiness values to use instead of the built-in estimator.
    #[arg(long, value_name = "FILE", requires = "distorted")]
    blockiness_map: Option<PathBuf>,

    /// Disable response noise (the observer reads expectations exactly).
    #[arg(long)]
    zero_noise: bool,

    /// Also dump per-step posterior, prior, response, and score maps.
    #[arg(long)]
    dump_steps: bool,

    /// Output directory.
    #[arg(long, env = "FOVEAL_SEARCH_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SaliencyArgs {
    /// Scanpath JSON documents to aggregate.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    traces: Vec<PathBuf>,

    /// Gaussian blur sigma in pixels.
    #[arg(long, default_value_t = 16.0, value_parser = parse_positive)]
    sigma: f64,

    /// Output PGM file.
    #[arg(long, default_value = "saliency.pgm")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[command(flatten)]
    stimulus: StimulusArgs,

    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(2..))]
    patch_size: u32,

    /// Seed for synthetic stimuli.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Channel exponents as contrast,luminance,entropy,blockiness.
    #[arg(long, default_value = "1,1,1,1", value_parser = parse_exponents)]
    exponents: ResponseExponents,

    /// Build the expectation map in distorted (blockiness-modulated) mode.
    #[arg(long)]
    distorted: bool,

    /// Per-patch blockiness values to use instead of the built-in estimator.
    #[arg(long, value_name = "FILE", requires = "distorted")]
    blockiness_map: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "FOVEAL_SEARCH_OUT", default_value = ".")]
    out: PathBuf,
}

fn parse_dims(text: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {text:?}"))?;
    let width: u32 = w.parse().map_err(|_| format!("bad width {w:?}"))?;
    let height: u32 = h.parse().map_err(|_| format!("bad height {h:?}"))?;
    if width == 0 || height == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((width, height))
}

fn parse_count(text: &str) -> std::result::Result<usize, String> {
    let value: usize = text.parse().map_err(|_| format!("not a count: {text:?}"))?;
    if value == 0 {
        return Err("must be at least 1".into());
    }
    Ok(value)
}

fn parse_positive(text: &str) -> std::result::Result<f64, String> {
    let value: f64 = text.parse().map_err(|_| format!("not a number: {text:?}"))?;
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("must be positive and finite, got {text}"))
    }
}

fn parse_exponents(text: &str) -> std::result::Result<ResponseExponents, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected 4 comma-separated exponents (contrast,luminance,entropy,blockiness), got {}",
            parts.len()
        ));
    }
    let mut values = [0.0f64; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("bad exponent {part:?}"))?;
        if !v.is_finite() {
            return Err(format!("exponent {part:?} is not finite"));
        }
        *slot = v;
    }
    Ok(ResponseExponents {
        contrast: values[0],
        luminance: values[1],
        entropy: values[2],
        blockiness: values[3],
    })
}

/// Parses the process arguments; exits with status 2 on usage errors.
pub fn parse() -> Cli {
    Cli::parse()
}

/// Runs a parsed invocation to completion.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Saliency(args) => saliency_command(args),
        Command::Features(args) => features_command(args),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn run_command(args: RunArgs) -> Result<()> {
    let (image, source) = args.stimulus.realize(args.seed)?;
    let profile = VisibilityProfile::new(args.mu, args.sigma, VisibilityProfile::default().floor)?;
    let config = TrialConfig {
        searcher: args.searcher,
        num_fixations: args.fixations,
        patch_size: args.patch_size,
        profile,
        exponents: args.exponents,
        inhibition_depth: args.inhibition,
        distorted: args.distorted,
        zero_noise: args.zero_noise,
        record_steps: args.dump_steps,
        ..TrialConfig::default()
    };
    let file_provider = args.blockiness_map.map(|path| BlockinessFile { path });
    let provider = file_provider
        .as_ref()
        .map(|p| p as &dyn DistortionProvider);
    let ctx = prepare_context(&image, &config, Some(&source), provider)?;

    ensure_dir(&args.out)?;
    if args.stimulus.synthetic_1of.is_some() {
        image.write_pgm(&args.out.join("stimulus.pgm"))?;
    }

    let traces = run_batch(&ctx, args.seed, args.trials)?;
    for (j, trace) in traces.iter().enumerate() {
        let step_maps = if args.dump_steps {
            Some(dump_steps(&args.out, j, trace, &ctx)?)
        } else {
            None
        };
        let document = document_from_trace(trace, step_maps);
        write_scanpath_document(&document, &args.out.join(format!("scanpath_{j:03}.json")))?;
        render_overlay(&image, trace, &args.out.join(format!("overlay_{j:03}.pgm")))?;
        match summarize_saccades(trace, config.inhibition_depth.max(1)) {
            Ok(summary) => println!(
                "trial {j:03}: {} fixations, saccade px mean {:.1} / median {:.1} / max {:.1}",
                trace.fixations.len(),
                summary.mean,
                summary.median,
                summary.max
            ),
            Err(Error::TooFewFixations(_)) => {
                println!("trial {j:03}: 1 fixation");
            }
            Err(other) => return Err(other),
        }
    }
    println!(
        "wrote {} scanpath(s) to {}",
        traces.len(),
        args.out.display()
    );
    Ok(())
}

/// Writes per-step map dumps for one trial; returns their relative paths.
fn dump_steps(
    out: &Path,
    trial: usize,
    trace: &crate::engine::ScanpathTrace,
    ctx: &TrialContext,
) -> Result<Vec<String>> {
    let steps = trace
        .steps
        .as_ref()
        .expect("dump-steps runs record step snapshots");
    let dir_name = format!("steps_{trial:03}");
    let dir = out.join(&dir_name);
    ensure_dir(&dir)?;
    let (cols, rows) = (ctx.grid.cols(), ctx.grid.rows());
    let mut written = Vec::new();
    for snapshot in steps {
        let maps: [(&str, Option<&Vec<f64>>); 4] = [
            ("response", Some(&snapshot.response)),
            ("prior", Some(&snapshot.inhibited_prior)),
            ("posterior", Some(&snapshot.posterior)),
            ("score", snapshot.score_map.as_ref()),
        ];
        for (name, values) in maps {
            let Some(values) = values else { continue };
            let stem = format!("step_{:02}_{name}", snapshot.step);
            let text_name = format!("{dir_name}/{stem}.txt");
            let pgm_name = format!("{dir_name}/{stem}.pgm");
            write_matrix_text(values, cols, &out.join(&text_name))?;
            write_patch_map_pgm(&normalize_unit(values), cols, rows, &out.join(&pgm_name))?;
            written.push(text_name);
            written.push(pgm_name);
        }
    }
    Ok(written)
}

fn saliency_command(args: SaliencyArgs) -> Result<()> {
    let mut documents = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        documents.push(read_scanpath(path)?);
    }
    let dims = (documents[0].image.width, documents[0].image.height);
    for (path, document) in args.traces.iter().zip(&documents) {
        if (document.image.width, document.image.height) != dims {
            return Err(Error::Saliency(format!(
                "{} is {}x{}, but earlier traces are {}x{}",
                path.display(),
                document.image.width,
                document.image.height,
                dims.0,
                dims.1
            )));
        }
    }
    let points: Vec<(f64, f64)> = documents
        .iter()
        .flat_map(|d| d.fixations.iter().map(|f| (f.x, f.y)))
        .collect();
    let map = saliency_from_points(&points, dims, args.sigma)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    map.write_pgm(&args.out)?;
    println!(
        "wrote saliency map ({} fixations from {} trace(s)) to {}",
        points.len(),
        documents.len(),
        args.out.display()
    );
    Ok(())
}

fn features_command(args: FeaturesArgs) -> Result<()> {
    let (image, _source) = args.stimulus.realize(args.seed)?;
    let config = TrialConfig {
        patch_size: args.patch_size,
        exponents: args.exponents,
        distorted: args.distorted,
        ..TrialConfig::default()
    };
    let file_provider = args.blockiness_map.map(|path| BlockinessFile { path });
    let provider = file_provider
        .as_ref()
        .map(|p| p as &dyn DistortionProvider);
    let ctx = prepare_context(&image, &config, None, provider)?;

    ensure_dir(&args.out)?;
    let (cols, rows) = (ctx.grid.cols(), ctx.grid.rows());
    let mut channels: Vec<(&str, &Vec<f64>)> = vec![
        ("contrast", &ctx.features.contrast),
        ("luminance", &ctx.features.luminance),
        ("entropy", &ctx.features.entropy),
        ("expectation", &ctx.expectation.values),
    ];
    if let Some(blockiness) = &ctx.features.blockiness {
        channels.push(("blockiness", blockiness));
    }
    for (name, values) in channels {
        write_matrix_text(values, cols, &args.out.join(format!("{name}.txt")))?;
        write_patch_map_pgm(
            &normalize_unit(values),
            cols,
            rows,
            &args.out.join(format!("{name}.pgm")),
        )?;
    }
    println!(
        "wrote {cols}x{rows} channel maps to {}",
        args.out.display()
    );
    Ok(())
}
