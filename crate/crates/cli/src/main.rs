//! `lii`: batch low-light enhancement, noise estimation and evaluation.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when
//! processing fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lii_core::metrics::illum_diagnostics;
use lii_core::noise::validation_csv;
use lii_core::*;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "lii",
    version,
    about = "Noise-aware illuminance interpolation for low-light images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a PNG, or every PNG in a directory.
    Enhance(EnhanceArgs),
    /// Print the estimated noise level (0..255 scale) as JSON.
    EstimateNoise {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
    /// Synthesise a low-light image from a normal-light one.
    Degrade {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Standard deviation of added Gaussian noise, 0..255 scale.
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare an enhanced image against a reference; prints JSON.
    Evaluate {
        enhanced: PathBuf,
        reference: PathBuf,
        /// Comma-separated subset of psnr, ssim, loe, mse.
        #[arg(long, value_delimiter = ',', default_value = "psnr,ssim,loe,mse")]
        metrics: Vec<String>,
        /// Low-light input; LOE is then measured against it instead of the reference.
        #[arg(long)]
        lowlight: Option<PathBuf>,
        /// Illumination map; with --lowlight adds tv_y and shifted_fidelity.
        #[arg(long, requires = "lowlight")]
        illumination: Option<PathBuf>,
    },
    /// Monte-Carlo accuracy study of the noise estimator; prints CSV.
    ValidateEstimator {
        #[arg(long)]
        corpus: PathBuf,
        /// Reference noise levels, 0..255 scale.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30,40")]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clamp noisy images to [0, 1] before estimating.
        #[arg(long)]
        clamp: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the scaled squared-difference heatmap of two images; prints the MSE.
    Diffmap {
        a: PathBuf,
        b: PathBuf,
        output: PathBuf,
    },
}

#[derive(Args)]
struct EnhanceArgs {
    input: PathBuf,
    output: PathBuf,
    /// `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single config key, e.g. `--set eta=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    variant: Option<Variant>,
    /// Skip the noise-removal stage.
    #[arg(long)]
    no_denoise: bool,
    /// Also write `_u`, `_v` (as 0.5 + v), `_y` and `_alpha` next to each output.
    #[arg(long)]
    dump_intermediates: bool,
    /// Write grayscale inputs back as grayscale.
    #[arg(long)]
    keep_gray: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Processing(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Processing(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Processing(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Enhance(args) => enhance_cmd(args),
        Command::EstimateNoise { input, order } => {
            if !(1..=noise::MAX_ORDER).contains(&order) {
                return Err(usage(anyhow::anyhow!(
                    "--order must be in 1..={}",
                    noise::MAX_ORDER
                )));
            }
            let img = read_png(&input)?;
            let est = estimate_sigma(&img, order)
                .with_context(|| format!("estimating noise of {}", input.display()))?;
            print_json(&est.to_255())
        }
        Command::Degrade {
            input,
            output,
            gamma,
            noise_sigma,
            seed,
        } => {
            if !(gamma >= 0.0 && gamma.is_finite())
                || !(noise_sigma >= 0.0 && noise_sigma.is_finite())
            {
                return Err(usage(anyhow::anyhow!(
                    "--gamma and --noise-sigma must be finite and >= 0"
                )));
            }
            let img = read_png(&input)?;
            let settings = DegradeSettings {
                gamma,
                noise_sigma: noise_sigma / 255.0,
                seed,
            };
            let dark = degrade(&img, &settings)
                .with_context(|| format!("degrading {}", input.display()))?;
            Ok(write_png(&output, &dark)?)
        }
        Command::Evaluate {
            enhanced,
            reference,
            metrics,
            lowlight,
            illumination,
        } => evaluate_cmd(
            &enhanced,
            &reference,
            &metrics,
            lowlight.as_deref(),
            illumination.as_deref(),
        ),
        Command::ValidateEstimator {
            corpus,
            sigmas,
            orders,
            trials,
            seed,
            clamp,
            output,
        } => {
            if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(usage(anyhow::anyhow!("--sigmas must all be > 0")));
            }
            if trials == 0 || orders.iter().any(|n| !(1..=noise::MAX_ORDER).contains(n)) {
                return Err(usage(anyhow::anyhow!(
                    "--trials must be >= 1 and --orders in 1..={}",
                    noise::MAX_ORDER
                )));
            }
            let images = png_files(&corpus)?
                .iter()
                .map(|p| read_png(p))
                .collect::<anyhow::Result<Vec<_>>>()?;
            if images.is_empty() {
                return Err(Failure::Processing(anyhow::anyhow!(
                    "no PNG files in {}",
                    corpus.display()
                )));
            }
            let plan = ValidationPlan {
                sigmas: sigmas.iter().map(|s| s / 255.0).collect(),
                orders,
                trials,
                seed,
                clamp,
            };
            let rows = validate_estimator(&plan, &images).context("validating estimator")?;
            let csv = validation_csv(&rows);
            match output {
                Some(path) => write_atomic(&path, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Diffmap { a, b, output } => {
            let (a_img, b_img) = matched_pair(read_png(&a)?, read_png(&b)?);
            let diff = diff_heatmap(&a_img, &b_img)
                .with_context(|| format!("comparing {} and {}", a.display(), b.display()))?;
            write_png(&output, &diff.map)?;
            print_json(&serde_json::json!({ "mse": diff.mse }))
        }
    }
}

fn build_config(args: &EnhanceArgs) -> CliResult<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(usage)?;
        config
            .apply_str(&text)
            .with_context(|| format!("in {}", path.display()))
            .map_err(usage)?;
    }
    for pair in &args.overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| usage(anyhow::anyhow!("--set expects KEY=VALUE, got {pair:?}")))?;
        config.set(key.trim(), value.trim()).map_err(usage)?;
    }
    if let Some(variant) = args.variant {
        config.variant = variant;
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn enhance_cmd(args: EnhanceArgs) -> CliResult<()> {
    let config = build_config(&args)?;
    let options = EnhanceOptions {
        denoise: !args.no_denoise,
    };

    if args.input.is_dir() {
        let files = png_files(&args.input)?;
        fs::create_dir_all(&args.output)
            .with_context(|| format!("creating {}", args.output.display()))?;
        let failures: Vec<String> = files
            .par_iter()
            .filter_map(|path| {
                let name = path.file_name().expect("listed files have names");
                enhance_one(path, &args.output.join(name), &config, options, &args)
                    .err()
                    .map(|e| format!("{e:#}"))
            })
            .collect();
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("error: {f}");
            }
            return Err(Failure::Processing(anyhow::anyhow!(
                "{} of {} images failed",
                failures.len(),
                files.len()
            )));
        }
        Ok(())
    } else {
        Ok(enhance_one(
            &args.input,
            &args.output,
            &config,
            options,
            &args,
        )?)
    }
}

fn enhance_one(
    input: &Path,
    output: &Path,
    config: &PipelineConfig,
    options: EnhanceOptions,
    args: &EnhanceArgs,
) -> anyhow::Result<()> {
    let x = read_png(input)?;
    let out = enhance_with(&x, config, options)
        .with_context(|| format!("enhancing {}", input.display()))?;
    let shaped = |img: &ImageF| {
        if args.keep_gray && x.channels() == 1 {
            img.to_gray()
        } else {
            img.clone()
        }
    };
    write_png(output, &shaped(&out.s))?;
    if args.dump_intermediates {
        let v = out.v.map(|v| (0.5 + v).clamp(0.0, 1.0));
        for (suffix, img) in [
            ("u", &out.u),
            ("v", &v),
            ("y", &out.y),
            ("alpha", &out.alpha),
        ] {
            write_png(&suffixed(output, suffix), &shaped(img))?;
        }
    }
    Ok(())
}

fn evaluate_cmd(
    enhanced: &Path,
    reference: &Path,
    metrics: &[String],
    lowlight: Option<&Path>,
    illumination: Option<&Path>,
) -> CliResult<()> {
    for m in metrics {
        if !["psnr", "ssim", "loe", "mse"].contains(&m.as_str()) {
            return Err(usage(anyhow::anyhow!(
                "unknown metric {m:?} (expected psnr, ssim, loe or mse)"
            )));
        }
    }
    let (e, r) = matched_pair(read_png(enhanced)?, read_png(reference)?);
    let context = || {
        format!(
            "evaluating {} against {}",
            enhanced.display(),
            reference.display()
        )
    };
    let wants = |name: &str| metrics.iter().any(|m| m == name);

    let mut report = MetricsReport::default();
    if wants("psnr") {
        report.psnr = Some(psnr(&e, &r).with_context(context)?);
    }
    if wants("ssim") {
        report.ssim = Some(ssim(&e, &r).with_context(context)?);
    }
    if wants("mse") {
        report.mse = Some(mse(&e, &r).with_context(context)?);
    }
    let low = lowlight.map(read_png).transpose()?;
    if wants("loe") {
        let value = match &low {
            Some(x) => {
                let (x, e) = matched_pair(x.clone(), e.clone());
                loe(&x, &e)
            }
            None => loe(&r, &e),
        };
        report.loe = Some(value.with_context(context)?);
    }
    if let (Some(x), Some(path)) = (&low, illumination) {
        let (x, y) = matched_pair(x.clone(), read_png(path)?);
        let d = illum_diagnostics(&x, &y).with_context(context)?;
        report.tv_y = Some(d.tv_y);
        report.shifted_fidelity = Some(d.shifted_fidelity);
    }
    print_json(&report)
}

/// Promotes a grayscale image to RGB when the other one is RGB.
fn matched_pair(a: ImageF, b: ImageF) -> (ImageF, ImageF) {
    if a.channels() == b.channels() {
        (a, b)
    } else {
        (a.to_rgb(), b.to_rgb())
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.png"))
}

fn png_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn read_png(path: &Path) -> anyhow::Result<ImageF> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_png(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn write_png(path: &Path, img: &ImageF) -> anyhow::Result<()> {
    let bytes = encode_png(img).with_context(|| format!("encoding {}", path.display()))?;
    write_atomic(path, &bytes)
}

/// Writes through a temporary file in the destination directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string(value).context("serialising JSON")?;
    println!("{text}");
    Ok(())
}
