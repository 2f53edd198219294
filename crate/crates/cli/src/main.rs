use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use binmatch_core::bench::{
    read_pair_list, read_scores, run_benchmark, synth_dataset, write_estimates, write_scores,
    BenchmarkConfig, BuiltinExtractor, DescriptorSource,
};
use binmatch_core::features::{load_descriptor_file, SUPPORTED_BRIEF_BITS};
use binmatch_core::imaging::DEFAULT_MIN_OVERLAP_FRACTION;
use binmatch_core::report::{build_report, write_report};
use binmatch_core::stats::MCNEMAR_Z_CRITICAL;
use binmatch_core::{brute_force_match, MetricId, RansacParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "binmatch", version, about = "Binary descriptor metric benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DescKind {
    Builtin,
    Files,
}

#[derive(Subcommand)]
enum Command {
    /// Score every image pair under every metric.
    Bench(BenchArgs),
    /// Build ANOVA and McNemar tables from a score CSV.
    Report {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = MCNEMAR_Z_CRITICAL)]
        z_critical: f64,
    },
    /// Generate image pairs with known homographies.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        pairs: usize,
        #[arg(long, default_value_t = 320)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match two descriptor files and print the pairs as CSV.
    Match {
        #[arg(long)]
        desc_a: PathBuf,
        #[arg(long)]
        desc_b: PathBuf,
        #[arg(long, default_value = "hamming")]
        metric: MetricId,
        #[arg(long)]
        cross_check: bool,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, value_enum, default_value = "builtin")]
    desc: DescKind,
    /// Comma-separated metric names.
    #[arg(long, default_value = "hamming,jaccard,correlation,dice,yule")]
    metrics: String,
    #[arg(long, default_value_t = 256)]
    nbits: usize,
    #[arg(long, default_value_t = 5000)]
    keypoints: usize,
    #[arg(long, default_value_t = 20)]
    fast_threshold: u8,
    #[arg(long, default_value_t = 0)]
    pattern_seed: u64,
    #[arg(long, default_value_t = 3.0)]
    ransac_thresh: f64,
    #[arg(long, default_value_t = 2000)]
    ransac_iters: usize,
    #[arg(long, default_value_t = 0.995)]
    confidence: f64,
    /// Residual pixels must exceed this value to count.
    #[arg(long, default_value_t = 0)]
    nonzero_threshold: u8,
    #[arg(long, default_value_t = DEFAULT_MIN_OVERLAP_FRACTION)]
    min_overlap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cross_check: bool,
    /// Also write d1/d2/d3 residual images for every score.
    #[arg(long)]
    dump_residuals: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Usage errors exit with status 2, run failures with 1.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<binmatch_core::Error> for Failure {
    fn from(e: binmatch_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let BenchArgs {
        pairs,
        desc,
        metrics,
        nbits,
        keypoints,
        fast_threshold,
        pattern_seed,
        ransac_thresh,
        ransac_iters,
        confidence,
        nonzero_threshold,
        min_overlap,
        seed,
        cross_check,
        dump_residuals,
        out,
    } = args;
    let metrics = MetricId::parse_list(&metrics).map_err(|e| usage(e.to_string()))?;
    if !SUPPORTED_BRIEF_BITS.contains(&nbits) {
        return Err(usage(format!("--nbits must be one of {SUPPORTED_BRIEF_BITS:?}")));
    }
    if keypoints == 0 || fast_threshold == 0 {
        return Err(usage("--keypoints and --fast-threshold must be positive"));
    }
    if !(ransac_thresh > 0.0) || ransac_iters == 0 || !(confidence > 0.0 && confidence < 1.0) {
        return Err(usage("RANSAC threshold, iterations and confidence are out of range"));
    }
    if !(0.0..=1.0).contains(&min_overlap) {
        return Err(usage("--min-overlap must lie in [0, 1]"));
    }
    let pair_list = read_pair_list(&pairs)?;
    if pair_list.is_empty() {
        return Err(usage("pair list is empty"));
    }
    let source = match desc {
        DescKind::Builtin => DescriptorSource::Builtin(BuiltinExtractor {
            n_bits: nbits,
            pattern_seed,
            fast_threshold,
            target_n: keypoints,
        }),
        DescKind::Files => DescriptorSource::Files,
    };
    let mut config = BenchmarkConfig::new(pair_list, source);
    config.metrics = metrics;
    config.ransac = RansacParams {
        reproj_threshold: ransac_thresh,
        max_iters: ransac_iters,
        confidence,
        seed: 0,
    };
    config.nonzero_threshold = nonzero_threshold;
    config.min_overlap_fraction = min_overlap;
    config.cross_check = cross_check;
    config.master_seed = seed;
    config.dump_dir = dump_residuals.then(|| out.join("residuals"));

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let output = run_benchmark(&config).map_err(|e| usage(e.to_string()))?;
    let scores = out.join("scores.csv");
    write_scores(&output.records, BufWriter::new(File::create(&scores).context("scores.csv")?))?;
    let est = out.join("homographies.csv");
    write_estimates(&output.estimates, BufWriter::new(File::create(&est).context("homographies.csv")?))?;

    let ok = output.records.iter().filter(|r| r.status == binmatch_core::bench::Status::Ok).count();
    eprintln!("{ok} of {} records scored; wrote {}", output.records.len(), scores.display());
    if output.all_failed() {
        return Err(Failure::Run(anyhow!("every record failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bench(args) => bench(args),
        Command::Report {
            scores,
            out,
            z_critical,
        } => {
            if !(z_critical > 0.0) {
                return Err(usage("--z-critical must be positive"));
            }
            let file = File::open(&scores).with_context(|| format!("I/O error on {}", scores.display()))?;
            let records = read_scores(file).with_context(|| format!("parsing {}", scores.display()))?;
            let report = build_report(&records)?;
            write_report(&report, &out, z_critical)?;
            for (name, why) in &report.skipped {
                eprintln!("skipped {name}: {why}");
            }
            for d in &report.descriptors {
                if !d.dropped_pairs.is_empty() {
                    eprintln!("{}: dropped incomplete pairs {}", d.descriptor_name, d.dropped_pairs.join(", "));
                }
            }
            eprintln!("wrote {}", out.join("report.md").display());
            Ok(())
        }
        Command::Synth {
            seed,
            pairs,
            size,
            out,
        } => {
            if size < 64 || pairs == 0 {
                return Err(usage("--size must be at least 64 and --pairs at least 1"));
            }
            let list = synth_dataset(seed, pairs, size, &out)?;
            eprintln!("wrote {} pairs to {}", list.len(), out.join("pairs.csv").display());
            Ok(())
        }
        Command::Match {
            desc_a,
            desc_b,
            metric,
            cross_check,
        } => {
            let a = load_descriptor_file(&desc_a).with_context(|| desc_a.display().to_string())?;
            let b = load_descriptor_file(&desc_b).with_context(|| desc_b.display().to_string())?;
            let matches = brute_force_match(&a.descriptors, &b.descriptors, metric, cross_check)?;
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            writeln!(w, "query_idx,train_idx,dist").context("stdout")?;
            for m in &matches {
                writeln!(w, "{},{},{}", m.query_idx, m.train_idx, m.dist).context("stdout")?;
            }
            w.flush().context("stdout")?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
