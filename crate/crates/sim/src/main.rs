use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use crossknit_core::pipeline::{write_events_csv, CalibrationTable, Pipeline, PipelineParams};
use crossknit_core::SensorConfig;
use crossknit_sim::demo::{run_arm_demo, run_kuri_demo, write_trajectory_csv};
use crossknit_sim::engine::{dump_frame_voltages, run_scenario, EngineOptions, Sampling};
use crossknit_sim::live::quick_calibration;
use crossknit_sim::protocol::RobotKind;
use crossknit_sim::scenario::Scenario;
use crossknit_sim::service::{serve, ServeOptions};
use crossknit_sim::wire::write_frames;
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "crossknit-sim", version, about = "Knitted crossbar tactile sensor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a scenario file and write the scanned frames in wire format.
    Run {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "frames.bin")]
        out: PathBuf,
        /// Sensor configuration file replacing the named preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        snapshot_sampling: bool,
        /// Node voltages of one frame, as CSV.
        #[arg(long)]
        dump_voltages: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        dump_frame: usize,
        /// Contact events of every frame, as CSV.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Calibration table (JSON); a quick indenter ramp is used otherwise.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Peak uniform readout noise, in ADC codes.
        #[arg(long, default_value_t = 0)]
        noise: u16,
    },
    /// Stream live frames over WebSocket at /ws.
    Serve {
        #[arg(long, default_value = "8x8")]
        preset: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_enum)]
        robot: Option<RobotArg>,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Scripted arm sleeve run: lift, move sideways, grab.
    DemoArm {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scripted Kuri band tour.
    DemoKuri {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RobotArg {
    Arm,
    Kuri,
    None,
}

impl From<RobotArg> for RobotKind {
    fn from(r: RobotArg) -> Self {
        match r {
            RobotArg::Arm => RobotKind::Arm,
            RobotArg::Kuri => RobotKind::Kuri,
            RobotArg::None => RobotKind::None,
        }
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run {
            preset,
            scenario,
            out,
            config,
            snapshot_sampling,
            dump_voltages,
            dump_frame,
            events,
            calibration,
            seed,
            noise,
        } => {
            let scenario = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            if scenario.preset != preset {
                bail!("scenario is for preset {:?}, not {:?}", scenario.preset, preset);
            }
            let config = match config {
                Some(path) => SensorConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
                None => SensorConfig::preset(&preset)?,
            };
            let mut options = EngineOptions::for_config(&config);
            if snapshot_sampling {
                options.sampling = Sampling::Snapshot;
            }
            options.seed = seed;
            options.noise_codes = noise;
            let frames = run_scenario(&scenario, &config, options)?;
            write_frames(&frames, BufWriter::new(File::create(&out)?))?;
            println!("wrote {} frames to {}", frames.len(), out.display());
            if let Some(path) = dump_voltages {
                if dump_frame >= frames.len() {
                    bail!("frame {dump_frame} is past the last frame {}", frames.len().saturating_sub(1));
                }
                dump_frame_voltages(&scenario, &config, &options, dump_frame, BufWriter::new(File::create(&path)?))?;
                println!("wrote node voltages of frame {dump_frame} to {}", path.display());
            }
            if let Some(path) = events {
                let table = match calibration {
                    Some(p) => CalibrationTable::load(&p)?,
                    None => quick_calibration(&config, &options.transfer)?,
                };
                let pipeline = Pipeline::new(config.clone(), PipelineParams::default(), Some(table));
                let mut all = Vec::new();
                for f in &frames {
                    all.extend(pipeline.process(f)?.events);
                }
                write_events_csv(&all, BufWriter::new(File::create(&path)?))?;
                println!("wrote {} events to {}", all.len(), path.display());
            }
        }
        Command::Serve {
            preset,
            port,
            robot,
            time_scale,
            static_dir,
        } => {
            if !(time_scale > 0.0) {
                bail!("time scale must be positive");
            }
            let mut opts = ServeOptions::new(&preset);
            opts.robot = robot.map(Into::into);
            opts.time_scale = time_scale;
            opts.static_dir = static_dir;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(opts, SocketAddr::from(([0, 0, 0, 0], port))))?;
        }
        Command::DemoArm { out } => {
            let report = run_arm_demo()?;
            let p = report.final_position();
            println!(
                "arm: {} frames in {:.2} s, final position ({:.1}, {:.1}, {:.1}) mm, gripper {:?}, target {:?} {}",
                report.trajectory.len(),
                report.elapsed.as_secs_f64(),
                p.x,
                p.y,
                p.z,
                report.final_gripper(),
                report.target_mm,
                if report.reached() { "reached" } else { "missed" }
            );
            if let Some(path) = out {
                write_trajectory_csv(&report.trajectory, File::create(&path)?)?;
            }
            if !report.reached() {
                bail!("target region not reached");
            }
        }
        Command::DemoKuri { out } => {
            let report = run_kuri_demo()?;
            let last = report.trajectory.last().context("no frames")?;
            println!(
                "kuri: {} frames in {:.2} s, final pose ({:.3}, {:.3}) m heading {:.3} rad, head {:?} yaw {}",
                report.trajectory.len(),
                report.elapsed.as_secs_f64(),
                last.x_m,
                last.y_m,
                last.heading_rad,
                last.head_pitch,
                last.head_yaw
            );
            if let Some(path) = out {
                write_trajectory_csv(&report.trajectory, File::create(&path)?)?;
            }
        }
    }
    Ok(())
}
