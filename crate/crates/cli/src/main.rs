use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infraqa_core::exec::with_thread_cap;
use infraqa_core::io::{
    fmt_sig, load_report_json, load_run_config, load_scenario, read_calibration, read_cloud, read_png,
    report_csv, write_cloud, write_csv_reports, write_png, write_report, write_synthetic,
};
use infraqa_core::ladder::{assign_layers, crop_to_camera_fov, downsample_layers, resample_image};
use infraqa_core::model::{LidarParams, Registration, SensorParams, SensorSpec};
use infraqa_core::pipeline::SetupResult;
use infraqa_core::{Error, Exec, Result};

#[derive(Parser)]
#[command(name = "infraqa", version, about = "Quality assessment of infrastructure sensor setups")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every setup listed in a run configuration.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive lower-resolution sensor data.
    #[command(subcommand)]
    Ladder(LadderCommand),
    /// List the setups a run configuration expands to.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic sequence with known corruption.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the CSV reports from a report.json.
    Report {
        #[arg(long)]
        from: PathBuf,
        /// Defaults to the directory of the JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LadderCommand {
    /// Keep every k-th scan layer of a point cloud.
    Lidar(LidarArgs),
    /// Resample an image to a lower (or higher) height.
    Camera {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct LidarArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Layer count of the source sensor.
    #[arg(long)]
    source_layers: u32,
    #[arg(long)]
    target: u32,
    /// Vertical resolution used to recover layers when the input has no
    /// layer ids.
    #[arg(long, default_value_t = 0.13)]
    vert_res_deg: f64,
    #[arg(long, default_value_t = 40.0)]
    vfov_deg: f64,
    /// Crop to a camera frustum before downsampling.
    #[arg(long, requires = "image_size")]
    crop_calib: Option<PathBuf>,
    /// Camera image size as WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_size)]
    image_size: Option<(u32, u32)>,
}

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| e.to_string());
    Ok((p(w)?, p(h)?))
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("INFRAQA_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Invalid(format!("INFRAQA_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn print_table(results: &[SetupResult]) {
    println!("{:<24} {:>3} {:>11} {:>11} {:>11} {:>11}", "setup", "m", "A_norm", "L_norm", "R_norm", "|Q|");
    for r in results {
        println!(
            "{:<24} {:>3} {:>11} {:>11} {:>11} {:>11}",
            r.setup.sensor_label(),
            r.setup.machine_id,
            fmt_sig(r.q.accuracy_norm),
            fmt_sig(r.q.latency_norm),
            fmt_sig(r.q.reliability_norm),
            fmt_sig(r.q.magnitude)
        );
    }
}

fn ladder_lidar(a: &LidarArgs) -> Result<()> {
    let mut cloud = read_cloud(&a.input)?;
    if let Some(calib) = &a.crop_calib {
        let size = a.image_size.ok_or_else(|| Error::Invalid("--crop-calib needs --image-size".into()))?;
        cloud = crop_to_camera_fov(&cloud, &read_calibration(calib)?, size)?;
    }
    if cloud.layer_ids.is_none() {
        // layer recovery only looks at the vertical resolution
        let spec = SensorSpec::new(
            "source",
            10.0,
            SensorParams::Lidar(LidarParams {
                vertical_layers: a.source_layers,
                hfov_rad: 100f64.to_radians(),
                vfov_rad: a.vfov_deg.to_radians(),
                hor_ang_res_rad: 0.09f64.to_radians(),
                vert_ang_res_rad: a.vert_res_deg.to_radians(),
                range_accuracy_m: 0.03,
            }),
            Registration {
                e_trans_m: 0.0,
                e_rot_rad: 0.0,
            },
            0.0,
        )?;
        cloud = assign_layers(&cloud, &spec)?;
    }
    let out = downsample_layers(&cloud, a.source_layers, a.target)?;
    log::info!("kept {} of {} points", out.len(), cloud.len());
    write_cloud(&a.output, &out)
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Evaluate { config, out } => {
            let cfg = load_run_config(&config)?;
            let results = cfg.evaluate(exec)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            write_report(&dir, &results)?;
            print_table(&results);
            log::info!("wrote {}", dir.display());
        }
        Command::Enumerate { config } => {
            let cfg = load_run_config(&config)?;
            let setups = cfg.plan.setups();
            for s in &setups {
                println!("{s}");
            }
            println!("{} setups", setups.len());
        }
        Command::Synth { scenario, out } => {
            let (cfg, timing) = load_scenario(&scenario)?;
            let log = write_synthetic(&out, &cfg, &timing)?;
            println!("{} frames, {} detections kept", log.frames.len(), log.kept_count());
        }
        Command::Report { from, out } => {
            let results = load_report_json(&from)?;
            let dir = out.unwrap_or_else(|| from.parent().map(Path::to_path_buf).unwrap_or_default());
            write_csv_reports(&dir, &results)?;
            print!("{}", report_csv(&results));
        }
        Command::Ladder(LadderCommand::Lidar(a)) => ladder_lidar(&a)?,
        Command::Ladder(LadderCommand::Camera { input, height, output }) => {
            let img = read_png(&input)?;
            write_png(&output, &resample_image(&img, height, exec)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = thread_cap().and_then(|cap| with_thread_cap(cap, || run(cli)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
