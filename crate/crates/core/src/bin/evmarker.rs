use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use evmarker::bench::TimingSummary;
use evmarker::dictionary::{generate_dictionary, MarkerDictionary};
use evmarker::error::{Error, Result};
use evmarker::event::packetize;
use evmarker::metrics::{evaluate_ids, fmt_rate, Metrics, PacketIds};
use evmarker::pipeline::{Detector, PacketResult, PipelineConfig};
use evmarker::simulator::{motion_suite, simulate, traversal, Direction, NoiseModel, SimConfig, SuiteNoise};
use evmarker::{dump, io};

#[derive(Parser)]
#[command(name = "evmarker", version, about = "Fiducial marker detection on event-camera streams")]
struct Cli {
    /// Dictionary file; the built-in 6x6 dictionary when omitted.
    #[arg(long, global = true)]
    dict: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Detect markers in an event CSV and print the detection report.
    Detect {
        events: PathBuf,
        /// Ground-truth sidecar; prints frame and pass rates to stderr.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write numbered stage PNGs here.
        #[arg(long)]
        dump_stages: Option<PathBuf>,
        /// Only dump these packet indices (repeatable); all packets otherwise.
        #[arg(long)]
        dump_packet: Vec<usize>,
        /// Flat key=value pipeline configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Process packets on all cores.
        #[arg(long)]
        parallel: bool,
    },
    /// Write simulated events `<prefix>.csv` and truth `<prefix>.truth.csv`.
    Simulate {
        out_prefix: PathBuf,
        /// Write the whole clean (or, with --noise/--jitter, noisy) motion suite.
        #[arg(long)]
        suite: bool,
        #[arg(long, default_value_t = 0)]
        id: usize,
        #[arg(long, value_enum, default_value_t = Dir::Right)]
        direction: Dir,
        /// Speed in px/ms.
        #[arg(long, default_value_t = 1.0)]
        velocity: f64,
        /// Duration in ms; a full traversal of the sensor when omitted.
        #[arg(long)]
        duration: Option<f64>,
        /// Noise events as a fraction of the signal events.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Timestamp jitter standard deviation in us.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = evmarker::simulator::DEFAULT_MARKER_SIDE)]
        side: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Per-stage timing over an event CSV, or over the noisy suite with `suite`.
    Bench {
        events_or_suite: String,
        /// With `suite`, only the first N marker ids.
        #[arg(long)]
        ids: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a rotation-aware marker dictionary.
    GenDict {
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        min_distance: usize,
        #[arg(long, default_value_t = 2_000_000)]
        max_attempts: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Left,
    Right,
    Up,
    Down,
    Diagonal,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Left => Direction::Left,
            Dir::Right => Direction::Right,
            Dir::Up => Direction::Up,
            Dir::Down => Direction::Down,
            Dir::Diagonal => Direction::Diagonal,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), io::read_config)
}

fn print_metrics(m: &Metrics) {
    eprintln!(
        "frames {} detected {} ({}), passes {} detected {} ({}), wrong ids {}",
        m.visible_frames,
        m.detected_frames,
        fmt_rate(m.frame_rate()),
        m.passes,
        m.detected_passes,
        fmt_rate(m.pass_rate()),
        m.wrong_detections
    );
}

fn run(cli: Cli) -> Result<()> {
    let dict = match &cli.dict {
        Some(p) => MarkerDictionary::load(p)?,
        None => MarkerDictionary::builtin(),
    };
    match cli.cmd {
        Cmd::Detect {
            events,
            truth,
            dump_stages,
            dump_packet,
            config,
            out,
            parallel,
        } => {
            let cfg = load_config(config.as_deref())?;
            let (geometry, evs) = io::read_events(&events)?;
            if (geometry.width, geometry.height) != (cfg.width, cfg.height) {
                return Err(Error::Config(format!(
                    "event file is {}x{} but the configuration expects {}x{}",
                    geometry.width, geometry.height, cfg.width, cfg.height
                )));
            }
            let detector = Detector::new(cfg.clone(), dict)?;
            let results = detector.detect_stream(&evs, parallel)?;
            let report = io::format_report(&results);
            match out {
                Some(p) => io::write_text(&p, &report)?,
                None => print!("{report}"),
            }
            if let Some(dir) = dump_stages {
                let packets = packetize(&evs, cfg.window_us, geometry)?;
                let dc = cfg.decoder();
                let mut n = 0;
                for (i, p) in packets.iter().enumerate() {
                    if dump_packet.is_empty() || dump_packet.contains(&i) {
                        let trace = detector.trace_packet(p);
                        n += dump::dump_stages(&dir, i, &trace, dc.n_d, dc.shift, dc.shift_polarity)?.len();
                    }
                }
                eprintln!("wrote {n} stage images to {}", dir.display());
            }
            if let Some(t) = truth {
                let gt = io::read_truth(&t, cfg.window_us)?;
                let ids: Vec<PacketIds> = results.iter().map(PacketIds::from).collect();
                print_metrics(&evaluate_ids(&ids, &gt)?);
            }
        }
        Cmd::Simulate {
            out_prefix,
            suite,
            id,
            direction,
            velocity,
            duration,
            noise,
            jitter,
            side,
            seed,
        } => {
            let noise_model = if noise > 0.0 {
                NoiseModel::FractionOfSignal(noise)
            } else {
                NoiseModel::None
            };
            let configs: Vec<(String, SimConfig)> = if suite {
                let sn = SuiteNoise {
                    jitter_us: jitter,
                    noise: noise_model,
                };
                motion_suite(&dict, sn, seed)
                    .into_iter()
                    .map(|c| (c.name, c.config))
                    .collect()
            } else {
                let geometry = evmarker::event::SensorGeometry::dvs128();
                let mut c = traversal(geometry, id, side, direction.into(), velocity);
                if let Some(d) = duration {
                    c.duration_ms = d;
                }
                c.jitter_us = jitter;
                c.noise = noise_model;
                c.seed = seed;
                vec![(String::new(), c)]
            };
            for (name, c) in configs {
                let sim = simulate(&c, &dict)?;
                let stem = if name.is_empty() {
                    out_prefix.display().to_string()
                } else {
                    format!("{}_{name}", out_prefix.display())
                };
                io::write_events(Path::new(&format!("{stem}.csv")), c.geometry, &sim.events)?;
                io::write_truth(Path::new(&format!("{stem}.truth.csv")), &sim.truth)?;
                eprintln!("{stem}: {} events, {} packets", sim.events.len(), sim.truth.frames.len());
            }
        }
        Cmd::Bench {
            events_or_suite,
            ids,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let detector = Detector::new(cfg, dict.clone())?;
            let mut results: Vec<PacketResult> = Vec::new();
            if events_or_suite == "suite" {
                for case in motion_suite(&dict, SuiteNoise::NOISY, 1) {
                    if ids.is_some_and(|n| case.config.marker_id >= n) {
                        continue;
                    }
                    let sim = simulate(&case.config, &dict)?;
                    results.extend(detector.detect_stream(&sim.events, false)?);
                }
            } else {
                let (_, evs) = io::read_events(Path::new(&events_or_suite))?;
                results = detector.detect_stream(&evs, false)?;
            }
            println!("{}", TimingSummary::from_results(&results));
        }
        Cmd::GenDict {
            out,
            count,
            size,
            seed,
            min_distance,
            max_attempts,
        } => {
            let d = generate_dictionary(count, size, min_distance, seed, max_attempts)?;
            io::write_text(&out, &d.to_text())?;
            eprintln!(
                "wrote {} codes of {size}x{size} bits, min rotation-aware distance {}",
                d.len(),
                d.min_orbit_distance()
            );
        }
    }
    Ok(())
}
