use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lwm::channel::{apply_channel, ChannelRun, ChannelSpec};
use lwm::codec::{embed_with_retry, extract, EmbeddingParams, ModelKey, Watermark};
use lwm::harness::{run_sweep, ExperimentConfig};
use lwm::latent::{GaussianLatent, LatentShape, Seed};
use lwm::rng::derive_bytes;
use lwm::stats::{bit_accuracy, detect, detection_threshold};

/// Lossless latent-noise watermarking toolkit.
#[derive(Debug, Parser)]
#[command(name = "lwm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a latent and write it with a watermark embedded.
    Embed {
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long)]
        seed: u64,
        /// 64 hex characters.
        #[arg(long, value_parser = parse_key)]
        key: ModelKey,
        #[arg(long, default_value = "4x64x64")]
        shape: LatentShape,
        #[arg(long)]
        out: PathBuf,
        /// Watermark bits as a 0/1 string. Random (derived from the seed) if omitted.
        #[arg(long)]
        watermark: Option<PathBuf>,
        /// Where to save the watermark that was embedded.
        #[arg(long)]
        watermark_out: Option<PathBuf>,
    },
    /// Recover the watermark from a latent file.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_key)]
        key: ModelKey,
        #[arg(long, default_value_t = 256)]
        k: usize,
        /// Report path, or `-` for stdout.
        #[arg(long, default_value = "-")]
        report: String,
        /// Expected watermark; adds accuracy and detection lines to the report.
        #[arg(long)]
        watermark: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        fpr: f64,
    },
    /// Pass a latent file through a simulated inversion channel.
    Channel {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        spec: ChannelSpec,
        #[arg(long)]
        trial_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the detection threshold for a watermark length.
    Threshold {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-6)]
        fpr: f64,
    },
    /// Run a sweep described by a config file and write a CSV report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config; `-` for stdout.
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Leave out the wall_time_s column.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn parse_key(s: &str) -> Result<ModelKey, String> {
    ModelKey::from_hex(s).map_err(|e| e.to_string())
}

type Failure = Box<dyn std::error::Error>;

fn read_watermark(path: &Path) -> Result<Watermark, Failure> {
    Ok(fs::read_to_string(path)?.trim().parse()?)
}

fn write_output(dest: &str, text: &str) -> io::Result<()> {
    if dest == "-" {
        io::stdout().write_all(text.as_bytes())
    } else {
        fs::write(dest, text)
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Embed {
            k,
            seed,
            key,
            shape,
            out,
            watermark,
            watermark_out,
        } => {
            let params = EmbeddingParams::new(shape, k)?;
            let m = match watermark {
                Some(path) => read_watermark(&path)?,
                None => Watermark::random(k, derive_bytes("cli-watermark", &[seed, k as u64]))?,
            };
            let (z, used) = embed_with_retry(&m, Seed(seed), &key, &params)?;
            if used != Seed(seed) {
                eprintln!("seed {seed} was too imbalanced; used seed {}", used.value());
            }
            z.write_to(io::BufWriter::new(fs::File::create(&out)?))?;
            if let Some(path) = watermark_out {
                fs::write(path, m.to_file_string())?;
            }
            println!("seed={}", used.value());
        }
        Command::Extract {
            input,
            key,
            k,
            report,
            watermark,
            fpr,
        } => {
            let z = GaussianLatent::read_from(io::BufReader::new(fs::File::open(&input)?))?;
            let params = EmbeddingParams::new(z.shape(), k)?;
            let result = extract(&z, &key, &params)?;
            let mut text = result.to_record();
            if let Some(path) = watermark {
                let m = read_watermark(&path)?;
                let thresh = detection_threshold(k, fpr)?;
                text.push_str(&format!("bit_accuracy={}\n", bit_accuracy(m.bits(), &result.bits)?));
                text.push_str(&format!("tau={}\n", thresh.tau));
                text.push_str(&format!("detected={}\n", detect(m.bits(), &result.bits, &thresh)?));
            }
            write_output(&report, &text)?;
        }
        Command::Channel {
            input,
            spec,
            trial_seed,
            out,
        } => {
            let z = GaussianLatent::read_from(io::BufReader::new(fs::File::open(&input)?))?;
            let noisy = apply_channel(&z, &ChannelRun::new(spec, Seed(trial_seed)));
            noisy.write_to(io::BufWriter::new(fs::File::create(&out)?))?;
        }
        Command::Threshold { k, fpr } => {
            println!("tau={}", detection_threshold(k, fpr)?.tau);
        }
        Command::Sweep {
            config,
            out,
            workers,
            no_timing,
        } => {
            let mut cfg = ExperimentConfig::parse(&fs::read_to_string(&config)?)?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            let dest = out.or(cfg.output_path.clone()).unwrap_or_else(|| "-".into());
            let report = run_sweep(&cfg)?;
            write_output(&dest, &report.to_csv(!no_timing))?;
        }
        Command::Selftest => {
            let checks = lwm::selftest::run()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(format!("{failed} self-test check(s) failed").into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
