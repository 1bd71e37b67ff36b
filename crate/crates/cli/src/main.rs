//! `spinsemi` — command-line front end for the quantization and channel
//! toolkit: verification sweeps with machine-readable CSV reports, channel
//! application on operator files, minimal-output-entropy search, and the
//! counterexample scan.
//!
//! Exit codes: 0 success, 1 assertion failure in a sweep, 2 usage or
//! validation error.

mod config;
mod io;
mod sweeps;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spinsemi_core::channels::Channel;
use spinsemi_core::entropy_opt::{counterexample_scan, min_output_entropy};
use spinsemi_core::halfint::HalfInt;
use spinsemi_core::quantize::berezin_spectrum;

use config::{Config, DEFAULT_CONFIG};
use io::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input, bad flags, failed validation: exit 2.
    Usage(String),
    /// A verified inequality failed: exit 1.
    Assertion(String),
}

impl CliError {
    fn from_core(e: spinsemi_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failure: {m}"),
        }
    }
}

fn parse_halfint(s: &str) -> Result<HalfInt, String> {
    HalfInt::parse(s).ok_or_else(|| format!("'{s}' is not a half-integer (use e.g. 2, 3/2, 1.5)"))
}

#[derive(Parser)]
#[command(name = "spinsemi", version, about = "Equivariant channels and coherent-state quantization on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Berezin-transform eigenvalues of one representation as CSV.
    Spectrum {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
    },
    /// Run a verification sweep; exit code 0 iff every asserted inequality
    /// holds.
    Verify {
        #[arg(value_enum)]
        which: VerifyKind,
        /// JSON sweep configuration; a built-in default is used if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Channel operations on operator files.
    Channel {
        #[command(subcommand)]
        cmd: ChannelCmd,
    },
    /// Entropy optimization.
    Entropy {
        #[command(subcommand)]
        cmd: EntropyCmd,
    },
    /// Parameter scans.
    Scan {
        #[command(subcommand)]
        cmd: ScanCmd,
    },
    /// Dump matrices and sphere functions for external inspection.
    Dump {
        #[command(subcommand)]
        cmd: DumpCmd,
    },
    /// Quantize a coefficient file into an operator file.
    Quantize {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
        /// Coherent-state index; defaults to J.
        #[arg(long = "i", value_parser = parse_halfint)]
        i: Option<HalfInt>,
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DumpCmd {
    /// Write the Husimi function of an operator as a coefficient file.
    Husimi {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
        /// Coherent-state index; defaults to J.
        #[arg(long = "i", value_parser = parse_halfint)]
        i: Option<HalfInt>,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a registry function (e.g. omega_z, band_random(4, 7)) as a
    /// coefficient file.
    Function {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Inversion,
    Products,
    Traces,
    Channels,
    Entropy,
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Apply a channel vertex or mixture to an operator read from a file.
    Apply {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
        #[arg(long = "K", value_parser = parse_halfint)]
        k: HalfInt,
        /// Vertex label M; mutually exclusive with --weights.
        #[arg(long = "M", value_parser = parse_halfint)]
        m: Option<HalfInt>,
        /// Comma-separated weights over M = |K-J| .. K+J in ascending order.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EntropyCmd {
    /// Minimal output entropy over pure input states.
    Minimize {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
        #[arg(long = "K", value_parser = parse_halfint)]
        k: HalfInt,
        /// Comma-separated weights over M = |K-J| .. K+J in ascending order.
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ScanCmd {
    /// Scan the channel simplex for counterexamples to coherent-state
    /// minimality of the output entropy.
    Counterexamples {
        #[arg(long = "J", value_parser = parse_halfint)]
        j: HalfInt,
        /// Largest output spin; all half-integers from 1/2 up are scanned.
        #[arg(long, value_parser = parse_halfint)]
        kmax: HalfInt,
        /// Simplex grid step, e.g. 0.25.
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
}

fn parse_weights(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad weight '{w}'")))
        })
        .collect()
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<(), CliError> {
    // Optional cap on worker threads.
    if let Ok(threads) = std::env::var("SPINSEMI_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Spectrum { j } => {
            if j.is_negative() {
                return Err(CliError::Usage("J must be non-negative".into()));
            }
            let spectrum = berezin_spectrum(j);
            let mut text = String::from("ell,eigenvalue\n");
            for (l, v) in spectrum.eigenvalues.iter().enumerate() {
                text.push_str(&format!("{l},{}\n", fmt(*v)));
            }
            print!("{text}");
            Ok(())
        }
        Command::Verify { which, config, out } => {
            let text = match config {
                Some(path) => std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Usage(format!("cannot read {}: {e}", path.display()))
                })?,
                None => DEFAULT_CONFIG.to_string(),
            };
            let cfg = Config::from_str(&text)?;
            let (report, failures) = match which {
                VerifyKind::Inversion => sweeps::verify_inversion(&cfg)?,
                VerifyKind::Products => sweeps::verify_products(&cfg)?,
                VerifyKind::Traces => sweeps::verify_traces(&cfg)?,
                VerifyKind::Channels => sweeps::verify_channels(&cfg)?,
                VerifyKind::Entropy => sweeps::verify_entropy(&cfg)?,
            };
            emit(&report, out.as_ref())?;
            if failures > 0 {
                return Err(CliError::Assertion(format!(
                    "{failures} inequality check(s) failed"
                )));
            }
            Ok(())
        }
        Command::Channel { cmd } => match cmd {
            ChannelCmd::Apply { j, k, m, weights, rho, out } => {
                let input = io::read_operator(&rho)?;
                if input.nrows() != j.dim() {
                    return Err(CliError::Usage(format!(
                        "operator dimension {} does not match 2J+1 = {}",
                        input.nrows(),
                        j.dim()
                    )));
                }
                let channel = match (m, weights) {
                    (Some(m), None) => Channel::vertex(j, k, m).map_err(CliError::from_core)?,
                    (None, Some(w)) => {
                        let w = parse_weights(&w)?;
                        Channel::new(j, k, &w).map_err(CliError::from_core)?
                    }
                    _ => {
                        return Err(CliError::Usage(
                            "give exactly one of --M or --weights".into(),
                        ))
                    }
                };
                let result = channel.apply(&input).map_err(CliError::from_core)?;
                io::write_operator(&out, &result)
            }
        },
        Command::Entropy { cmd } => match cmd {
            EntropyCmd::Minimize { j, k, weights, restarts, seed } => {
                let w = parse_weights(&weights)?;
                let channel = Channel::new(j, k, &w).map_err(CliError::from_core)?;
                let res =
                    min_output_entropy(&channel, restarts, seed).map_err(CliError::from_core)?;
                #[derive(serde::Serialize)]
                struct Out {
                    value: f64,
                    state: Vec<[f64; 2]>,
                    converged: bool,
                    restarts: usize,
                }
                let payload = Out {
                    value: res.value,
                    state: res.state.iter().map(|z| [z.re, z.im]).collect(),
                    converged: res.all_converged(),
                    restarts: res.runs.len(),
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&payload)
                        .map_err(|e| CliError::Usage(e.to_string()))?
                );
                Ok(())
            }
        },
        Command::Quantize { j, i, function, out } => {
            let text = std::fs::read_to_string(&function).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", function.display()))
            })?;
            let file: io::FunctionFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad function file: {e}")))?;
            let f = file.to_function()?;
            let q = spinsemi_core::quantize::Quantizer::new(j);
            let op = q.op(i.unwrap_or(j), &f).map_err(CliError::from_core)?;
            io::write_operator(&out, &op)
        }
        Command::Dump { cmd } => match cmd {
            DumpCmd::Husimi { j, i, rho, out } => {
                let input = io::read_operator(&rho)?;
                if input.nrows() != j.dim() {
                    return Err(CliError::Usage(format!(
                        "operator dimension {} does not match 2J+1 = {}",
                        input.nrows(),
                        j.dim()
                    )));
                }
                let q = spinsemi_core::quantize::Quantizer::new(j);
                let hus = q
                    .husimi(i.unwrap_or(j), &input, j.twice() as usize)
                    .map_err(CliError::from_core)?;
                let file = io::FunctionFile::from_function(&hus);
                let text = serde_json::to_string_pretty(&file)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                std::fs::write(&out, text)
                    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))
            }
            DumpCmd::Function { name, out } => {
                let f = config::function_by_name(&name)?;
                let file = io::FunctionFile::from_function(&f);
                let text = serde_json::to_string_pretty(&file)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                std::fs::write(&out, text)
                    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))
            }
        },
        Command::Scan { cmd } => match cmd {
            ScanCmd::Counterexamples { j, kmax, step, seed, restarts } => {
                if !(step > 0.0 && step <= 1.0) {
                    return Err(CliError::Usage(format!("bad simplex step {step}")));
                }
                let denominator = (1.0 / step).round() as usize;
                if ((denominator as f64) * step - 1.0).abs() > 1e-9 {
                    return Err(CliError::Usage(format!(
                        "step {step} must divide 1 evenly"
                    )));
                }
                let mut ks = Vec::new();
                let mut kt = 1i64;
                while kt <= kmax.twice() {
                    ks.push(HalfInt::from_twice(kt));
                    kt += 1;
                }
                let rows = counterexample_scan(j, &ks, denominator, restarts, seed)
                    .map_err(CliError::from_core)?;
                let mut text = String::from(
                    "j_twice,k_twice,weights,optimizer,bloch_baseline,family_baseline,gap_bloch,gap_family,flagged,flagged_family,converged\n",
                );
                for r in &rows {
                    let w: Vec<String> = r.weights.iter().map(|x| fmt(*x)).collect();
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        r.j.twice(),
                        r.k.twice(),
                        w.join(";"),
                        fmt(r.optimizer_value),
                        fmt(r.bloch_baseline),
                        fmt(r.family_baseline),
                        fmt(r.gap_bloch),
                        fmt(r.gap_family),
                        r.flagged,
                        r.flagged_family,
                        r.all_converged
                    ));
                }
                print!("{text}");
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Assertion(_) => ExitCode::from(1),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinsemi_core::channels::vertex_labels;

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weights("0.5, 0.25,0.25").unwrap(), vec![0.5, 0.25, 0.25]);
        assert!(parse_weights("a,b").is_err());
    }

    #[test]
    fn halfint_cli_parsing() {
        assert_eq!(parse_halfint("3/2").unwrap().twice(), 3);
        assert_eq!(parse_halfint("2").unwrap().twice(), 4);
        assert!(parse_halfint("0.4").is_err());
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = Config::from_str(DEFAULT_CONFIG).unwrap();
        assert!(cfg.inversion.is_some());
        assert!(cfg.products.is_some());
        assert!(cfg.traces.is_some());
        assert!(cfg.channels.is_some());
        assert!(cfg.entropy.is_some());
    }

    #[test]
    fn vertex_labels_reexport_sanity() {
        // The weight order documented for --weights is ascending M.
        let labels = vertex_labels(HalfInt::from_twice(2), HalfInt::from_twice(4));
        assert_eq!(labels.len(), 3);
        assert!(labels[0] < labels[1] && labels[1] < labels[2]);
    }
}
