//! The `octopus` command line.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use super::any::CodecId;
use super::experiments::{
    run_bitsplit_sweep, run_needle, run_rounding_ablation, run_table1, NeedleConfig, SweepConfig, SyntheticProbeConfig,
};
use super::metrics::{cosine, MetricRow};
use super::report::{format_sig6, write_csv, write_json};
use crate::codec::{effective_bits_per_coord, pack_keys, unpack_keys, CodecConfig, OctopusCodec, Rounding};
use crate::lloydmax::{rho_codebook, write_codebook, xi_codebook};

pub const MATRIX_MAGIC: &[u8; 4] = b"OCTM";

#[derive(Debug, Parser)]
#[command(name = "octopus", version, about = "Octahedral triplet key quantizer: codebooks, benchmarks, round trips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the direction and norm codebooks and write them to a directory.
    TrainCodebooks {
        #[arg(long, default_value_t = 128)]
        dim: usize,
        /// Comma-separated bit widths.
        #[arg(long, value_delimiter = ',', required = true)]
        bits: Vec<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Parameter sweeps.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Encode an OCTM f32 matrix, decode it back and print metrics.
    Roundtrip {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bits: u8,
        #[arg(long)]
        qjl: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the packed key stream here.
        #[arg(long)]
        packed: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Output {
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Additional JSON destination.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Reconstruction cosine, MSE and inner-product error on Gaussian keys.
    Table1 {
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        keys: usize,
        #[arg(long, default_value_t = 16)]
        queries: usize,
        #[arg(long, default_value_t = 64)]
        seeds: usize,
        #[arg(long, value_delimiter = ',', default_value = "octopus,octopus-qjl,tq-mse,tq-qjl,polar")]
        codecs: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        bits: Vec<u8>,
        #[arg(long, default_value = "scalar")]
        rounding: String,
        #[command(flatten)]
        output: Output,
    },
    /// Softmax mass on a planted key among Gaussian distractors.
    Needle {
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 2048)]
        distractors: usize,
        #[arg(long, default_value_t = 0.10)]
        noise: f64,
        #[arg(long, default_value_t = 128)]
        seeds: usize,
        #[arg(long, value_delimiter = ',', default_value = "fp32,octopus,octopus-qjl,tq-mse,tq-qjl,polar")]
        codec: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        bits: Vec<u8>,
        #[arg(long, default_value = "local3x3")]
        rounding: String,
        /// Keep the planted key's raw Gaussian norm instead of rescaling it to √dim.
        #[arg(long)]
        raw_needle: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long)]
    keys: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    bits: Option<Vec<u8>>,
    #[command(flatten)]
    output: Output,
}

impl SweepArgs {
    fn apply(&self, mut cfg: SweepConfig) -> SweepConfig {
        cfg.dim = self.dim;
        cfg.n_keys = self.keys.unwrap_or(cfg.n_keys);
        cfg.n_queries = self.queries.unwrap_or(cfg.n_queries);
        cfg.n_seeds = self.seeds.unwrap_or(cfg.n_seeds);
        if let Some(b) = &self.bits {
            cfg.bits = b.clone();
        }
        cfg
    }
}

#[derive(Debug, Subcommand)]
enum SweepCommand {
    /// OCTOPUS MSE over bit splits (b+δ, b−δ).
    Bitsplit(SweepArgs),
    /// OCTOPUS metrics under each direction-rounding mode.
    Rounding(SweepArgs),
}

fn parse_rounding(s: &str) -> anyhow::Result<Rounding> {
    Rounding::parse(s).with_context(|| format!("unknown rounding mode '{s}' (scalar, local2x2, local3x3, full)"))
}

fn parse_codecs(names: &[String]) -> anyhow::Result<Vec<CodecId>> {
    Ok(names.iter().map(|n| CodecId::parse(n.trim())).collect::<crate::Result<_>>()?)
}

fn emit(rows: &[MetricRow], output: &Output) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(rows, BufWriter::new(f))?;
        }
        None => write_csv(rows, io::stdout().lock())?,
    }
    if let Some(path) = &output.json {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_json(rows, BufWriter::new(f))?;
    }
    Ok(())
}

/// Reads an OCTM matrix: magic, u32 rows, u32 cols, row-major f32.
pub fn read_matrix(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 12 || &bytes[0..4] != MATRIX_MAGIC {
        bail!("{} is not an OCTM matrix file", path.display());
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into()?) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into()?) as usize;
    let expected = (rows as u128) * (cols as u128) * 4 + 12;
    if bytes.len() as u128 != expected {
        bail!("{}: {rows}x{cols} matrix needs {expected} bytes, found {}", path.display(), bytes.len());
    }
    Ok(bytes[12..]
        .chunks_exact(4 * cols.max(1))
        .take(rows)
        .map(|row| row.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap()))).collect())
        .collect())
}

pub fn write_matrix(path: &Path, rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&u32::try_from(rows.len())?.to_le_bytes())?;
    w.write_all(&u32::try_from(cols)?.to_le_bytes())?;
    for r in rows {
        for &x in r {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn roundtrip(input: &Path, out: &Path, bits: u8, qjl: bool, seed: u64, packed: Option<&Path>) -> anyhow::Result<()> {
    let keys = read_matrix(input)?;
    let dim = keys.first().map(Vec::len).context("matrix has no rows")?;
    let mut cfg = CodecConfig::nominal(dim, bits)?.with_seed(seed);
    if qjl {
        cfg = cfg.with_qjl(seed.wrapping_add(1));
    }
    let codec = OctopusCodec::standard(cfg)?;
    let states = keys.iter().map(|k| codec.encode(k)).collect::<crate::Result<Vec<_>>>()?;
    let blob = pack_keys(&cfg, &states)?;
    let (_, back) = unpack_keys(&blob)?;
    let decoded = back.iter().map(|s| codec.decode(s)).collect::<crate::Result<Vec<_>>>()?;
    write_matrix(out, &decoded)?;
    if let Some(p) = packed {
        std::fs::write(p, &blob).with_context(|| format!("writing {}", p.display()))?;
    }
    let n = keys.len() as f64;
    let cos = keys.iter().zip(&decoded).map(|(a, b)| cosine(a, b)).sum::<f64>() / n;
    let mse = keys
        .iter()
        .zip(&decoded)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / dim as f64)
        .sum::<f64>()
        / n;
    println!("keys,dim,b_dir,b_nrm,qjl,cos,mse,stream_bytes,bits_per_coord");
    println!(
        "{},{dim},{},{},{qjl},{},{},{},{}",
        keys.len(),
        cfg.b_dir,
        cfg.b_nrm,
        format_sig6(cos),
        format_sig6(mse),
        blob.len(),
        format_sig6(effective_bits_per_coord(&cfg))
    );
    Ok(())
}

fn train_codebooks(dim: usize, bits: &[u8], out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for &b in bits {
        let xi = out.join(format!("xi_b{b}.ocbk"));
        write_codebook(&xi, &*xi_codebook(b)?).with_context(|| format!("writing {}", xi.display()))?;
        let rho = out.join(format!("rho_d{dim}_b{b}.ocbk"));
        write_codebook(&rho, &*rho_codebook(dim, b)?).with_context(|| format!("writing {}", rho.display()))?;
        eprintln!("wrote {} and {}", xi.display(), rho.display());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::TrainCodebooks { dim, bits, out } => train_codebooks(dim, &bits, &out),
        Command::Roundtrip { input, out, bits, qjl, seed, packed } => {
            roundtrip(&input, &out, bits, qjl, seed, packed.as_deref())
        }
        Command::Bench(BenchCommand::Table1 { dim, keys, queries, seeds, codecs, bits, rounding, output }) => {
            let cfg = SyntheticProbeConfig {
                dim,
                n_keys: keys,
                n_queries: queries,
                n_seeds: seeds,
                codecs: parse_codecs(&codecs)?,
                bits,
                rounding: parse_rounding(&rounding)?,
                base_seed: 0,
            };
            emit(&run_table1(&cfg)?, &output)
        }
        Command::Bench(BenchCommand::Needle {
            dim,
            distractors,
            noise,
            seeds,
            codec,
            bits,
            rounding,
            raw_needle,
            output,
        }) => {
            let cfg = NeedleConfig {
                dim,
                distractors,
                noise_fraction: noise,
                n_seeds: seeds,
                rounding: parse_rounding(&rounding)?,
                normalize_needle: !raw_needle,
                base_seed: 0,
            };
            let mut rows = Vec::new();
            for c in parse_codecs(&codec)? {
                if c == CodecId::Fp32 {
                    rows.push(run_needle(&cfg, c, 0)?);
                    continue;
                }
                for &b in &bits {
                    rows.push(run_needle(&cfg, c, b)?);
                }
            }
            emit(&rows, &output)
        }
        Command::Sweep(SweepCommand::Bitsplit(args)) => {
            emit(&run_bitsplit_sweep(&args.apply(SweepConfig::bitsplit()))?, &args.output)
        }
        Command::Sweep(SweepCommand::Rounding(args)) => {
            emit(&run_rounding_ablation(&args.apply(SweepConfig::rounding()))?, &args.output)
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
