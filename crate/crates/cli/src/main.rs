use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use oscdet::config::PipelineConfig;
use oscdet::design::{write_cascade, write_fir};
use oscdet::detector::write_events_csv;
use oscdet::io::{read_raw_i16, write_raw_i16};
use oscdet::pipeline::{DesignedFilter, Pipeline, PipelineTrace};
use oscdet::synth::{generate, write_annotations_csv, DatasetSpec};
use oscdet::trigger::write_pulses_csv;
use oscdet::validate::{mac_criterion, report_criteria, validate, Criterion};
use oscdet::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "oscdet", version, about = "Oscillation detection and phase-locked triggering")]
struct Cli {
    /// Pipeline configuration (TOML). Overrides --profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in pipeline profile used when no --config is given.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Workstation)]
    profile: Profile,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Where outputs go.
    #[arg(long, global = true, env = "OSCDET_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Workstation,
    Embedded,
    WorkstationFir,
    Dense,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording with annotated tones.
    Synth {
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        /// Use the harder 10 dB, overlapping-tone profile.
        #[arg(long)]
        degraded: bool,
    },
    /// Run the pipeline over a raw i16 recording.
    Run {
        input: PathBuf,
        /// Sample rate of the input; defaults to the configured input rate.
        #[arg(long)]
        rate: Option<u32>,
    },
    /// Validate on the default and degraded synthetic recordings.
    Validate {
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
    },
    /// Count multiply-accumulates per stage.
    Bench {
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
    },
    /// Export quantized coefficients and delay tables.
    Design,
}

fn load_config(cli: &Cli) -> oscdet::Result<PipelineConfig> {
    match &cli.config {
        Some(path) => PipelineConfig::from_toml(&fs::read_to_string(path)?),
        None => Ok(match cli.profile {
            Profile::Workstation => PipelineConfig::workstation(),
            Profile::Embedded => PipelineConfig::embedded(),
            Profile::WorkstationFir => PipelineConfig::workstation_fir(),
            Profile::Dense => PipelineConfig::dense(8.0, 13),
        }),
    }
}

fn create(path: &Path) -> oscdet::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_trace(dir: &Path, trace: &PipelineTrace) -> oscdet::Result<()> {
    for b in &trace.bands {
        b.write_csv(create(&dir.join(format!("band-{}-{}.csv", b.band_id, b.name)))?)?;
    }
    write_events_csv(&trace.events, create(&dir.join("events.csv"))?)?;
    write_pulses_csv(&trace.pulses, create(&dir.join("pulses.csv"))?)?;
    fs::write(dir.join("macs.txt"), trace.macs.to_text())?;
    Ok(())
}

fn filter_text(f: &DesignedFilter) -> String {
    match f {
        DesignedFilter::Iir(c) => write_cascade(c),
        DesignedFilter::Fir(t) => write_fir(t),
    }
}

fn run(cli: &Cli) -> oscdet::Result<bool> {
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out_dir)?;
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Synth { duration, degraded } => {
            let base = if *degraded {
                DatasetSpec::second_profile(cli.seed)
            } else {
                DatasetSpec {
                    seed: cli.seed,
                    ..DatasetSpec::default()
                }
            };
            let spec = DatasetSpec {
                duration_s: *duration,
                ..base
            };
            let data = generate(&spec)?;
            write_raw_i16(&out.join("signal.i16"), &data.signal.samples)?;
            write_annotations_csv(&data.tones, create(&out.join("annotations.csv"))?)?;
            println!(
                "{} samples at {} sps, {} tones -> {}",
                data.signal.len(),
                spec.rate_sps,
                data.tones.len(),
                out.display()
            );
        }
        Command::Run { input, rate } => {
            let x = read_raw_i16(input, rate.unwrap_or(cfg.input_rate_sps))?;
            let trace = Pipeline::new(&cfg)?.run(&x)?;
            write_trace(out, &trace)?;
            println!(
                "{} events, {} pulses, {:.1} MAC/sample -> {}",
                trace.events.len(),
                trace.pulses.len(),
                trace.macs.per_dsp_sample(),
                out.display()
            );
        }
        Command::Validate { duration } => {
            let spec = DatasetSpec {
                seed: cli.seed,
                duration_s: *duration,
                ..DatasetSpec::default()
            };
            let degraded_spec = DatasetSpec {
                duration_s: *duration,
                ..DatasetSpec::second_profile(cli.seed)
            };
            let (default, _) = validate(&cfg, &generate(&spec)?)?;
            let (degraded, _) = validate(&cfg, &generate(&degraded_spec)?)?;
            let mut criteria: Vec<Criterion> = report_criteria(&default, &degraded);
            let bench = Pipeline::new(&PipelineConfig::embedded())?
                .run(&generate(&DatasetSpec {
                    duration_s: duration.min(20.0),
                    ..spec.clone()
                })?
                .signal)?;
            criteria.push(mac_criterion(&bench.macs));

            let mut text = format!("default recording\n{}\ndegraded recording\n{}\n", default.to_text(), degraded.to_text());
            for c in &criteria {
                text.push_str(&c.line());
                text.push('\n');
            }
            fs::write(out.join("validation.txt"), &text)?;
            let json = serde_json::json!({ "default": default, "degraded": degraded, "criteria": criteria });
            fs::write(out.join("validation.json"), serde_json::to_string_pretty(&json).expect("serializable"))?;
            print!("{text}");
            return Ok(criteria.iter().all(|c| c.pass));
        }
        Command::Bench { duration } => {
            let data = generate(&DatasetSpec {
                seed: cli.seed,
                duration_s: *duration,
                ..DatasetSpec::default()
            })?;
            let trace = Pipeline::new(&cfg)?.run(&data.signal)?;
            let text = trace.macs.to_text();
            fs::write(out.join("macs.txt"), &text)?;
            print!("{text}");
        }
        Command::Design => {
            let p = Pipeline::new(&cfg)?;
            if let Some(aa) = &p.chain().anti_alias {
                fs::write(out.join("anti-alias.coef"), filter_text(aa))?;
            }
            for (i, b) in p.config().bands.iter().enumerate() {
                fs::write(out.join(format!("band-{}-{}.coef", b.id, b.name)), filter_text(&p.chain().bands[i]))?;
                if let Some(t) = &p.tables()[i] {
                    fs::write(out.join(format!("band-{}-{}.lut", b.id, b.name)), t.to_text())?;
                }
            }
            fs::write(out.join("config.toml"), p.config().to_toml()?)?;
            println!("{} bands -> {}", p.config().bands.len(), out.display());
        }
    }
    Ok(true)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::OutOfRange { .. } | Error::RateMismatch { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("oscdet: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
