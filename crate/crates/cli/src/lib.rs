//! The `bren` command line: `separate`, `synth` and `eval`.

pub mod error;
pub mod io;
pub mod meta;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bren::metrics::EvalReport;
use bren::synth::{self, Preset};
use bren::{
    estimate_illumination_gray_world, separate, validate_user_illumination, Connectivity,
    HighNeuterMask, Illumination, SeparationParams, Threshold,
};
use clap::{Args, Parser, Subcommand};

pub use error::CliError;
use io::{gray_image, read_image, read_raw, write_image, BitDepth};
use meta::{sidecar_path, SceneMeta};

#[derive(Debug, Parser)]
#[command(name = "bren", version, about = "Separate diffuse and specular reflection in RGB images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an image into diffuse and specular components.
    Separate(SeparateArgs),
    /// Render a synthetic scene with ground-truth components.
    Synth(SynthArgs),
    /// Compare two images.
    Eval(EvalArgs),
}

/// Illumination source for `separate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IlluminationArg {
    Auto,
    User([f64; 3]),
}

impl FromStr for IlluminationArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(IlluminationArg::Auto);
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("expected `auto` or R,G,B, got `{s}`"))?;
        let e: [f64; 3] = parts
            .try_into()
            .map_err(|_| format!("expected three comma-separated values, got `{s}`"))?;
        Ok(IlluminationArg::User(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("size must look like WxH, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad size `{s}`"));
        Ok(Size {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub diffuse: PathBuf,
    #[arg(long)]
    pub specular: PathBuf,
    /// `auto` for a gray-world estimate, or R,G,B.
    #[arg(long, default_value = "auto")]
    pub illumination: IlluminationArg,
    /// Neuter threshold, or `mean`.
    #[arg(long, default_value = "mean")]
    pub tau: Threshold,
    #[arg(long, default_value_t = 100.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value = "8")]
    pub connectivity: Connectivity,
    /// Treat images as sRGB-encoded.
    #[arg(long)]
    pub srgb: bool,
    #[arg(long)]
    pub dump_neuter: Option<PathBuf>,
    #[arg(long)]
    pub dump_essence: Option<PathBuf>,
    /// Write the high-neuter mask (white = demoted pixels).
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value = "256x256")]
    pub size: Size,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub reference: PathBuf,
    pub candidate: PathBuf,
    /// Restrict the comparison to pixels that are nonzero in this image.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub srgb: bool,
}

/// Parses `args` (including the program name) and runs the command, writing
/// reports to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Separate(a) => cmd_separate(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Eval(a) => cmd_eval(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bren: {e}");
            e.exit_code()
        }
    }
}

fn push_illumination(meta: &mut SceneMeta, e: &Illumination) {
    let [r, g, b] = e.channels();
    meta.push("illumination_r", r)
        .push("illumination_g", g)
        .push("illumination_b", b);
}

pub fn cmd_separate(args: &SeparateArgs) -> Result<(), CliError> {
    let params = SeparationParams {
        tau: args.tau,
        lambda: args.lambda,
        max_iters: args.max_iters,
        epsilon: args.epsilon,
        connectivity: args.connectivity,
    };
    params.validate()?;

    let (image, depth) = read_image(&args.input, args.srgb)?;
    let (illum, source) = match args.illumination {
        IlluminationArg::Auto => (estimate_illumination_gray_world(&image)?, "auto"),
        IlluminationArg::User(e) => (validate_user_illumination(e)?, "user"),
    };
    let result = separate(&image, &illum, &params)?;

    write_image(&args.diffuse, &result.diffuse, depth, args.srgb)?;
    write_image(&args.specular, &result.specular, depth, args.srgb)?;
    if let Some(path) = &args.dump_neuter {
        write_image(path, &gray_image(result.final_neuter.as_grid()), depth, false)?;
    }
    if let Some(path) = &args.dump_essence {
        let vis = result.essence.map(|s| s.map(|v| (0.5 + v / 2.0).clamp(0.0, 1.0)));
        write_image(path, &bren::RadianceImage::from_grid(vis)?, depth, false)?;
    }
    if let Some(path) = &args.mask {
        let vis = result.mask.map(|&m| if m { 1.0 } else { 0.0 });
        write_image(path, &gray_image(&vis), depth, false)?;
    }

    let final_neuter = &result.final_neuter;
    let mut meta = SceneMeta::new();
    meta.push("input", args.input.display())
        .push("illumination_source", source);
    push_illumination(&mut meta, &illum);
    meta.push("tau_resolved", result.tau)
        .push("lambda", params.lambda)
        .push("max_iters", params.max_iters)
        .push("epsilon", params.epsilon)
        .push("connectivity", params.connectivity.count())
        .push("srgb", args.srgb)
        .push("iterations_run", result.iterations_run)
        .push("converged", result.converged)
        .push("clamp_count", result.clamp_count)
        .push("masked_pixels", result.mask.count())
        .push("final_neuter_min", final_neuter.min())
        .push("final_neuter_mean", final_neuter.mean())
        .push(
            "final_neuter_max",
            final_neuter.data().iter().copied().fold(0.0, f64::max),
        );
    meta.write(&sidecar_path(&args.diffuse))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let preset: Preset = args.preset.parse()?;
    let scene = synth::preset_scene(preset, args.size.width, args.size.height, args.seed)?;
    let gt = synth::render(&scene);

    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let composite = args.out_dir.join("composite.ppm");
    write_image(&composite, &gt.composite, BitDepth::Sixteen, false)?;
    write_image(&args.out_dir.join("diffuse_gt.ppm"), &gt.diffuse_gt, BitDepth::Sixteen, false)?;
    write_image(&args.out_dir.join("specular_gt.ppm"), &gt.specular_gt, BitDepth::Sixteen, false)?;

    let mut meta = SceneMeta::new();
    meta.push("preset", preset)
        .push("seed", args.seed)
        .push("width", args.size.width)
        .push("height", args.size.height);
    push_illumination(&mut meta, &scene.illumination());
    meta.push("interface_reflectance", scene.interface_reflectance());
    meta.write(&sidecar_path(&composite))
}

fn read_mask(path: &Path) -> Result<HighNeuterMask, CliError> {
    let raw = read_raw(path)?;
    let data = raw.samples.chunks_exact(3).map(|px| px.iter().any(|&v| v > 0)).collect();
    Ok(HighNeuterMask::new(raw.width, raw.height, data)?)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, _) = read_image(&args.reference, args.srgb)?;
    let (b, _) = read_image(&args.candidate, args.srgb)?;
    let mask = args.mask.as_deref().map(read_mask).transpose()?;
    let report = EvalReport::compare(&a, &b, mask.as_ref())?;

    let mut meta = SceneMeta::new();
    meta.push("rmse", report.rmse)
        .push("psnr", report.psnr)
        .push("max_abs_err", report.max_abs_err)
        .push("compared_pixels", report.compared_pixels);
    write!(out, "{meta}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illumination_arg() {
        assert_eq!("auto".parse::<IlluminationArg>().unwrap(), IlluminationArg::Auto);
        assert_eq!(
            "1,0.5, 0.25".parse::<IlluminationArg>().unwrap(),
            IlluminationArg::User([1.0, 0.5, 0.25])
        );
        assert!("1,2".parse::<IlluminationArg>().is_err());
        assert!("a,b,c".parse::<IlluminationArg>().is_err());
    }

    #[test]
    fn size_arg() {
        assert_eq!("128x64".parse::<Size>().unwrap(), Size { width: 128, height: 64 });
        assert!("128".parse::<Size>().is_err());
        assert!("ax2".parse::<Size>().is_err());
    }

    #[test]
    fn defaults_match_library() {
        let cli = Cli::try_parse_from(["bren", "separate", "in.ppm", "--diffuse", "d.ppm", "--specular", "s.ppm"]).unwrap();
        let Command::Separate(a) = cli.command else { panic!("wrong command") };
        let lib = SeparationParams::default();
        assert_eq!(a.tau, lib.tau);
        assert_eq!(a.lambda, lib.lambda);
        assert_eq!(a.max_iters, lib.max_iters);
        assert_eq!(a.epsilon, lib.epsilon);
        assert_eq!(a.connectivity, lib.connectivity);
        assert_eq!(a.illumination, IlluminationArg::Auto);
        assert!(!a.srgb);
    }
}
