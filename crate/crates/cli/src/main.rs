//! `lfr`: synthesize, estimate disparity, refocus, evaluate, profile and serve light fields.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfr_core::disparity::{plane_sweep_disparity, DisparityEstimationParams, DEFAULT_RANGE};
use lfr_core::lf_data::{
    load_disparity, load_light_field, load_png, read_meta, read_pfm, save_png, save_png_16, synthesize_light_field,
    write_disparity, write_light_field, write_pfm, SyntheticSceneSpec,
};
use lfr_core::optics::{RefocusParams, WeightMap};
use lfr_core::pipeline::{psnr_masked, refocus, run_timing_profile, timings_csv, DisparitySource, PipelineConfig};
use lfr_core::sr::SolverParams;
use lfr_core::LightField;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] lfr_core::Error),
    #[error(transparent)]
    Service(#[from] lfr_service::ServiceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("--{flag}: {reason}")]
    Flag { flag: &'static str, reason: String },
}

type Result<T> = std::result::Result<T, CliError>;

fn flag_err(flag: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Flag {
        flag,
        reason: reason.into(),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Parser)]
#[command(name = "lfr", version, about = "Post-capture refocusing of camera-array light fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fronto-parallel multi-plane dataset with ground truth.
    Synth(SynthArgs),
    /// Estimate the reference-view disparity by plane sweep and write it as PFM.
    Disparity(DisparityArgs),
    /// Refocus a dataset and write the super-resolved result.
    Refocus(RefocusArgs),
    /// PSNR of a result against ground truth over the focused region.
    Eval(EvalArgs),
    /// Time the pipeline over a grid of bokeh intensities and iteration counts.
    Profile(ProfileArgs),
    /// Serve a dataset over HTTP for interactive refocusing.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Side of the square high-resolution frame.
    #[arg(long, default_value_t = 128)]
    hr_size: usize,
    /// View grid as ROWSxCOLS.
    #[arg(long, default_value = "3x3", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Decimation factor between the HR frame and the views.
    #[arg(long, default_value_t = 2)]
    scale: usize,
    /// Planes as `D[@x0,y0,x1,y1];...`, regions in fractions of the frame.
    #[arg(long, default_value = "1;3@0.25,0.25,0.75,0.75", allow_hyphen_values = true)]
    planes: String,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.005)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    channels: usize,
}

#[derive(Args)]
struct DisparityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of disparity hypotheses; defaults to quarter-pixel spacing.
    #[arg(long)]
    n: Option<usize>,
    /// Sweep range as LO:HI; defaults to the dataset's recorded range.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<[f64; 2]>,
    /// Odd side of the cost aggregation window.
    #[arg(long, default_value_t = 7)]
    window: usize,
}

#[derive(Args)]
struct RefocusArgs {
    #[arg(long)]
    input: PathBuf,
    /// Precomputed disparity (PFM) instead of estimating it.
    #[arg(long)]
    disparity: Option<PathBuf>,
    /// Disparity to bring into focus.
    #[arg(long, allow_hyphen_values = true)]
    df: f64,
    /// Bokeh intensity: blur radius per pixel of disparity difference.
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = 2)]
    scale: usize,
    #[arg(long, default_value_t = SolverParams::default().noi)]
    noi: usize,
    #[arg(long, default_value_t = SolverParams::default().step_size)]
    step: f64,
    #[arg(long = "lambda-b", default_value_t = SolverParams::default().lambda_b)]
    lambda_b: f64,
    #[arg(long = "lambda-btv", default_value_t = SolverParams::default().lambda_btv)]
    lambda_btv: f64,
    /// Sigmoid decay of the bokeh weight map.
    #[arg(long, default_value_t = RefocusParams::DEFAULT_DECAY)]
    a: f64,
    /// Sigmoid threshold of the bokeh weight map.
    #[arg(long, default_value_t = RefocusParams::DEFAULT_THRESHOLD)]
    b: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write disparity, radius, weight and bokeh images plus the objective trace here.
    #[arg(long)]
    save_intermediates: Option<PathBuf>,
    /// Halve the step until the objective does not increase.
    #[arg(long)]
    backtracking: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Bokeh weight map (PFM) at the result's resolution.
    #[arg(long)]
    weights: PathBuf,
    /// Pixels with weight below this count as focused.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    k_list: Vec<f64>,
    #[arg(long, default_value = "5,10,20", value_delimiter = ',')]
    noi_list: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Focus disparity; defaults to the middle of the dataset's range.
    #[arg(long, allow_hyphen_values = true)]
    df: Option<f64>,
    #[arg(long, default_value_t = 2)]
    scale: usize,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    disparity: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}` is not ROWSxCOLS"))?;
    let r = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((r, c))
}

fn parse_range(s: &str) -> std::result::Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("`{s}` is not LO:HI"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("HI: {e}"))?;
    if !(lo < hi) {
        return Err(format!("LO must be below HI in `{s}`"));
    }
    Ok([lo, hi])
}

fn synth(args: SynthArgs) -> Result<()> {
    let layers = SyntheticSceneSpec::parse_planes(&args.planes, args.seed)?;
    let (rows, cols) = args.grid;
    let mut spec = SyntheticSceneSpec::new(args.hr_size, rows, cols, args.scale, layers);
    spec.noise_sigma = args.noise;
    spec.seed = args.seed;
    spec.channels = args.channels;
    let scene = synthesize_light_field(&spec)?;
    let lo = spec.layers.iter().map(|l| l.disparity).fold(f64::INFINITY, f64::min);
    let hi = spec.layers.iter().map(|l| l.disparity).fold(f64::NEG_INFINITY, f64::max);
    let range = if lo < hi { [lo, hi] } else { [lo - 1.0, hi + 1.0] };
    write_light_field(&args.out, &scene.lf, spec.offset_step, Some(range))?;
    save_png_16(&scene.hr_reference, &args.out.join("gt.png"))?;
    write_disparity(&args.out.join("gt_disparity.pfm"), &scene.gt_disparity)?;
    write_disparity(&args.out.join("gt_disparity_hr.pfm"), &scene.gt_disparity_hr)?;
    println!(
        "wrote {} views of {}x{} to {}",
        scene.lf.len(),
        scene.lf.height(),
        scene.lf.width(),
        args.out.display()
    );
    Ok(())
}

fn estimation_params(dir: &Path, range: Option<[f64; 2]>) -> Result<DisparityEstimationParams> {
    let range = match range {
        Some(r) => Some(r),
        None => read_meta(dir)?.disparity_range,
    };
    Ok(DisparityEstimationParams::for_range(range))
}

fn disparity(args: DisparityArgs) -> Result<()> {
    let lf = load_light_field(&args.input)?;
    let mut params = estimation_params(&args.input, args.range)?;
    if let Some(n) = args.n {
        params.num_hypotheses = n;
    }
    params.window = args.window;
    let map = plane_sweep_disparity(&lf, &params)?;
    write_disparity(&args.out, &map)?;
    println!(
        "swept {} hypotheses over [{}, {}]; wrote {}",
        params.num_hypotheses,
        params.d_lo,
        params.d_hi,
        args.out.display()
    );
    Ok(())
}

fn disparity_source(lf: &LightField, input: &Path, file: Option<&Path>) -> Result<DisparitySource> {
    Ok(match file {
        Some(path) => DisparitySource::Provided(load_disparity(path)?),
        None if lf.len() == 1 => return Err(lfr_core::Error::EstimationImpossible.into()),
        None => DisparitySource::Estimate(estimation_params(input, None)?),
    })
}

fn refocus_cmd(args: RefocusArgs) -> Result<()> {
    let lf = load_light_field(&args.input)?;
    let source = disparity_source(&lf, &args.input, args.disparity.as_deref())?;
    let refocus_params = RefocusParams {
        focus_disparity: args.df,
        bokeh_intensity: args.k,
        sigmoid_decay: args.a,
        sigmoid_threshold: args.b,
    };
    let mut cfg = PipelineConfig::new(refocus_params, args.scale);
    cfg.solver = SolverParams {
        lambda_b: args.lambda_b,
        lambda_btv: args.lambda_btv,
        step_size: args.step,
        noi: args.noi,
        backtracking: args.backtracking,
        ..SolverParams::default()
    };
    let result = refocus(&lf, &cfg, &source)?;
    save_png(&result.output, &args.out)?;

    if let Some(dir) = &args.save_intermediates {
        create_dir(dir)?;
        write_disparity(&dir.join("disparity.pfm"), &result.disparity)?;
        write_disparity(&dir.join("disparity_hr.pfm"), &result.disparity_hr)?;
        let (h, w) = (result.radius_map.height(), result.radius_map.width());
        write_pfm(&dir.join("radius.pfm"), h, w, result.radius_map.radii())?;
        write_pfm(&dir.join("weights.pfm"), h, w, result.weight_map.weights())?;
        save_png(&result.bokeh_image, &dir.join("bokeh.png"))?;
        let mut trace = String::from("iteration,objective\n");
        for (t, v) in result.objective_trace.iter().enumerate() {
            let _ = writeln!(trace, "{t},{v}");
        }
        write_file(&dir.join("objective.csv"), trace)?;
    }

    let t = result.timings;
    let trace = &result.objective_trace;
    println!(
        "objective {:.6e} -> {:.6e}; disparity {:.3}s, bokeh {:.3}s, sr {:.3}s, total {:.3}s",
        trace[0],
        trace[trace.len() - 1],
        t.disparity,
        t.bokeh,
        t.sr,
        t.total
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let result = load_png(&args.result)?;
    let gt = load_png(&args.gt)?;
    let (h, w, values) = read_pfm(&args.weights)?;
    let weights = WeightMap::new(h, w, values.into_iter().map(f64::from).collect())?;
    let psnr = psnr_masked(&result, &gt, &weights, args.threshold)?;
    println!("psnr_db {psnr:.4}");
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<()> {
    if args.k_list.is_empty() || args.noi_list.is_empty() {
        return Err(flag_err("k-list", "both lists need at least one value"));
    }
    let lf = load_light_field(&args.input)?;
    let params = estimation_params(&args.input, None)?;
    let df = args.df.unwrap_or_else(|| {
        let [lo, hi] = read_meta(&args.input)
            .ok()
            .and_then(|m| m.disparity_range)
            .unwrap_or(DEFAULT_RANGE);
        0.5 * (lo + hi)
    });
    let cfg = PipelineConfig::new(RefocusParams::new(df, args.k_list[0]), args.scale);
    let rows = run_timing_profile(&lf, &cfg, &DisparitySource::Estimate(params), &args.k_list, &args.noi_list)?;
    let csv = timings_csv(&rows);
    write_file(&args.out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    lfr_service::run(&args.input, args.disparity.as_deref(), args.port)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Disparity(a) => disparity(a),
        Command::Refocus(a) => refocus_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Profile(a) => profile(a),
        Command::Serve(a) => serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_range_parsing() {
        assert_eq!(parse_grid("3x5"), Ok((3, 5)));
        assert!(parse_grid("3,5").is_err());
        assert_eq!(parse_range("-1.5:2"), Ok([-1.5, 2.0]));
        assert!(parse_range("2:1").is_err());
        assert!(parse_range("2").is_err());
    }

    #[test]
    fn command_line_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
