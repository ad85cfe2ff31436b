//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataio::{generate_synthetic, load_config, load_dataset, save_dataset, Ablation, RunConfig, SynthSpec};
use crate::featkit::FeatureVector;
use crate::harness::{
    extract_subjects, run_ablation, run_experiment, write_atomic, write_run_dir, read_summary, Experiment,
    RunSummary,
};
use crate::synnet::NetworkSnapshot;
use crate::{featkit, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "synhomeo", version, about = "Continual subject adaptation over a homeostatic synaptic network")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic multi-subject dataset.
    Synth(SynthArgs),
    /// Extract subject-level features to JSON.
    Extract {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretrain on the source subjects and write the initial network snapshot.
    InitNet {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the continual stream and write a run directory.
    RunCl {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several ablation variants on identical data and seeds.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated list of full, no_sc, no_sr.
        #[arg(long, value_delimiter = ',', default_value = "full,no_sc,no_sr")]
        variants: Vec<Ablation>,
    },
    /// Convert a network snapshot to DOT or JSON.
    ExportGraph {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary table of a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    subjects: usize,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u16).range(2..))]
    classes: u16,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long)]
    epoch_len: Option<usize>,
    /// Per-subject log frequency scale spread.
    #[arg(long)]
    freq_scale: Option<f64>,
    /// Per-subject, per-class frequency jitter (Hz).
    #[arg(long)]
    shift: Option<f64>,
    /// Per-subject log gain jitter.
    #[arg(long)]
    gain_shift: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fraction of subjects (in manifest order) used as labelled sources.
    #[arg(long)]
    source_frac: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// full, no_sc or no_sr.
    #[arg(long)]
    ablation: Option<Ablation>,
    /// Override one config key, e.g. `--set top_k=10`. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("source_frac", self.source_frac.map(|v| v.to_string())),
            ("repeats", self.repeats.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("ablation", self.ablation.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::config(o.as_str(), "override must look like key=value"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct SubjectFeatureRecord {
    subject: String,
    n_epochs: usize,
    feature: FeatureVector,
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::new(a.subjects, usize::from(a.classes), a.seed);
    if let Some(v) = a.channels {
        spec.n_channels = v;
    }
    if let Some(v) = a.epochs {
        spec.epochs_per_subject = v;
    }
    if let Some(v) = a.sample_rate {
        spec.sample_rate = v;
    }
    if let Some(v) = a.epoch_len {
        spec.epoch_len = v;
    }
    if let Some(v) = a.freq_scale {
        spec.freq_scale = v;
    }
    if let Some(v) = a.shift {
        spec.shift = v;
    }
    if let Some(v) = a.gain_shift {
        spec.gain_shift = v;
    }
    if let Some(v) = a.noise {
        spec.noise = v;
    }
    let ds = generate_synthetic(&spec)?;
    let manifest = save_dataset(&ds, &a.out)?;
    println!("wrote {} subjects to {}", ds.subjects.len(), manifest.display());
    Ok(())
}

fn extract(data: &Path, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let records = extract_subjects(&ds.subjects)?
        .into_iter()
        .map(|s| {
            Ok(SubjectFeatureRecord {
                n_epochs: s.epoch_features.len(),
                feature: featkit::average_features(&s.epoch_features)?,
                subject: s.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(out, (serde_json::to_string_pretty(&records)? + "\n").as_bytes())?;
    println!("wrote features for {} subjects to {}", records.len(), out.display());
    Ok(())
}

fn init_net(run: &RunArgs, out: &Path) -> Result<()> {
    let cfg = run.resolve()?;
    let ds = load_dataset(&run.data)?;
    let exp = Experiment::prepare(&ds, &cfg)?;
    let (_, net) = exp.pretrain(&cfg)?;
    write_atomic(out, net.snapshot(0).to_json()?.as_bytes())?;
    println!("{} source nodes, {} synapses -> {}", net.len(), net.edge_count(), out.display());
    Ok(())
}

fn run_cl(run: &RunArgs, out: &Path) -> Result<()> {
    let cfg = run.resolve()?;
    let ds = load_dataset(&run.data)?;
    let report = run_experiment(&ds, &cfg)?;
    write_run_dir(out, &cfg, &report)?;
    print!("{}", RunSummary::of(&report).to_table());
    Ok(())
}

fn ablate(run: &RunArgs, out: &Path, variants: &[Ablation]) -> Result<()> {
    let cfg = run.resolve()?;
    let ds = load_dataset(&run.data)?;
    let reports = run_ablation(&ds, &cfg, variants)?;
    let mut csv = String::from("variant,acc_m0,acc_m0_std,acc_mi,acc_mi_std,mf1_m0,mf1_m0_std,mf1_mi,mf1_mi_std\n");
    for r in &reports {
        let mut c = cfg.clone();
        c.ablation = r.ablation;
        write_run_dir(&out.join(r.ablation.name()), &c, r)?;
        if let Some(a) = &r.aggregate {
            csv.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.ablation,
                a.acc_m0.mean,
                a.acc_m0.std,
                a.acc_mi.mean,
                a.acc_mi.std,
                a.mf1_m0.mean,
                a.mf1_m0.std,
                a.mf1_mi.mean,
                a.mf1_mi.std
            ));
        }
        print!("{}", RunSummary::of(r).to_table());
    }
    write_atomic(&out.join("ablation.csv"), csv.as_bytes())
}

fn export_graph(snapshot: &Path, format: GraphFormat, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(snapshot).map_err(|e| Error::io(snapshot, e))?;
    let snap = NetworkSnapshot::from_json(&text).map_err(|e| Error::format(snapshot, e.to_string()))?;
    let body = match format {
        GraphFormat::Dot => snap.to_dot(),
        GraphFormat::Json => snap.to_json()?,
    };
    match out {
        Some(p) => write_atomic(p, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Extract { data, out } => extract(data, out),
        Command::InitNet { run, out } => init_net(run, out),
        Command::RunCl { run, out } => run_cl(run, out),
        Command::Ablate { run, out, variants } => ablate(run, out, variants),
        Command::ExportGraph { snapshot, format, out } => export_graph(snapshot, *format, out.as_deref()),
        Command::Report { run } => {
            print!("{}", read_summary(run)?.to_table());
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
