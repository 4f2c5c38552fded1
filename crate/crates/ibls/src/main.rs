//! Command-line sketch tool: create/insert/diff/report/stats on sketch
//! files, a minimal length-prefixed TCP exchange (serve/fetch), and the
//! Monte-Carlo bench runners.
//!
//! Exit codes: 0 ok, 2 reconciliation failed, 3 format error, 4 bad key,
//! 5 incompatible sketches.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ibls::error::Error;
use ibls::field::FieldParams2;
use ibls::harness;
use ibls::hashing::{HashSeeds, DEFAULT_MASTER_SEED};
use ibls::signed::{SignedParams, SignedSketch, SignedStatus};
use ibls::sketch::{ReportStatus, Sketch, SketchParams};
use ibls::wire::{self, SketchFile};

const EXIT_RECON_FAILED: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_BAD_KEY: u8 = 4;
const EXIT_INCOMPATIBLE: u8 = 5;

#[derive(Parser)]
#[command(name = "ibls", about = "Set-reconciliation sketches", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create a new empty sketch file.
    Create(CreateArgs),
    /// Insert (or, applied twice, remove) keys into a sketch file.
    #[command(alias = "toggle")]
    Insert {
        file: PathBuf,
        /// Keys, decimal or 0x-prefixed hex.
        keys: Vec<String>,
    },
    /// Combine two sketch files into a difference sketch.
    Diff {
        a_file: PathBuf,
        b_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a sketch file and print the recovered keys.
    Report {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print parameters and fill statistics of a sketch file.
    Stats { file: PathBuf },
    /// Serve a sketch file to fetch peers (one request-response per connection).
    Serve {
        #[arg(long)]
        listen: String,
        file: PathBuf,
    },
    /// Fetch a peer's sketch, diff against a local file, and report.
    Fetch {
        #[arg(long)]
        connect: String,
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Monte-Carlo experiment runners.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Args)]
struct CreateArgs {
    /// Difference capacity D.
    #[arg(long)]
    capacity: u32,
    /// Stash/checksum parameter r (default min(D, max(8, w))).
    #[arg(long)]
    stash: Option<u32>,
    /// Key width in bits (8, 16, 24 or 32).
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Table headroom over the peelability threshold, in thousandths.
    #[arg(long, default_value_t = 100)]
    eps_milli: u16,
    /// Signed (oriented) variant.
    #[arg(long)]
    signed: bool,
    /// Master seed (hex) for the hash functions.
    #[arg(long, value_parser = parse_u64_hex)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Decode success rate at a fixed table-size ratio.
    FailureRate {
        #[arg(long)]
        capacity: u32,
        #[arg(long, default_value_t = 1320)]
        ratio_milli: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long, value_parser = parse_u64_hex, default_value = "0xB000")]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Residual-size tail conditioned on decode failure.
    ResidualTail {
        #[arg(long)]
        capacity: u32,
        #[arg(long, default_value_t = 1250)]
        ratio_milli: u32,
        #[arg(long, default_value_t = 200)]
        target_failures: u64,
        #[arg(long, default_value_t = 100_000)]
        max_trials: u64,
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long, value_parser = parse_u64_hex, default_value = "0xB001")]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Full insert-report pipeline with stash statistics.
    StashPipeline {
        #[arg(long)]
        capacity: u32,
        #[arg(long)]
        stash: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 16)]
        width: u32,
        #[arg(long, default_value_t = 100)]
        eps_milli: u16,
        #[arg(long, value_parser = parse_u64_hex, default_value = "0xB002")]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_u64_hex(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).map_err(|e| e.to_string())
    } else {
        s.parse().map_err(|e: std::num::ParseIntError| e.to_string())
    }
}

fn parse_key(s: &str) -> Result<u64, Error> {
    parse_u64_hex(s).map_err(|e| Error::Range(format!("bad key {s:?}: {e}")))
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::KeyZero | Error::Range(_) => EXIT_BAD_KEY,
        Error::IncompatibleSketch(_) => EXIT_INCOMPATIBLE,
        Error::Format(_) | Error::MalformedTrits | Error::WidthMismatch => EXIT_FORMAT,
        Error::DecodeFailed => EXIT_RECON_FAILED,
        Error::ZeroInverse => EXIT_FORMAT,
        Error::Io(_) => EXIT_FORMAT,
    }
}

fn load(path: &PathBuf) -> Result<SketchFile, Error> {
    let bytes = std::fs::read(path)?;
    wire::deserialize(&bytes)
}

fn store(path: &PathBuf, file: &SketchFile) -> Result<(), Error> {
    std::fs::write(path, wire::serialize(file))?;
    Ok(())
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_for(&err))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Create(args) => {
            let seeds = HashSeeds::from_master(args.seed.unwrap_or(DEFAULT_MASTER_SEED));
            let r = args
                .stash
                .unwrap_or_else(|| SketchParams::default_r(args.capacity, args.width));
            let file = if args.signed {
                SketchFile::Signed(SignedSketch::new(SignedParams::new(
                    args.capacity,
                    r,
                    args.width,
                    args.eps_milli,
                    seeds,
                )?)?)
            } else {
                SketchFile::Unsigned(Sketch::new(SketchParams::new(
                    args.capacity,
                    r,
                    FieldParams2::for_width(args.width)?,
                    args.eps_milli,
                    seeds,
                )?)?)
            };
            store(&args.out, &file)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Insert { file, keys } => {
            let mut sk = load(&file)?;
            for ks in &keys {
                let key = parse_key(ks)?;
                match &mut sk {
                    SketchFile::Unsigned(s) => s.insert(key)?,
                    SketchFile::Signed(s) => s.insert(key)?,
                }
            }
            store(&file, &sk)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Diff { a_file, b_file, out } => {
            let a = load(&a_file)?;
            let b = load(&b_file)?;
            let d = match (&a, &b) {
                (SketchFile::Unsigned(x), SketchFile::Unsigned(y)) => {
                    SketchFile::Unsigned(x.diff(y)?)
                }
                (SketchFile::Signed(x), SketchFile::Signed(y)) => SketchFile::Signed(x.diff(y)?),
                _ => {
                    return Err(Error::IncompatibleSketch(
                        "cannot combine signed with unsigned".into(),
                    ))
                }
            };
            store(&out, &d)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { file, json } => {
            let sk = load(&file)?;
            let (text, ok) = render_report(sk, json);
            println!("{text}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RECON_FAILED)
            })
        }
        Cmd::Stats { file } => {
            let sk = load(&file)?;
            match sk {
                SketchFile::Unsigned(s) => {
                    let p = s.params();
                    let nonzero = s.iblt().cells().iter().filter(|&&c| c != 0).count();
                    println!("variant: unsigned");
                    println!("capacity: {}", p.d);
                    println!("stash: {}", p.r);
                    println!("width: {}", p.field.width());
                    println!("eps_milli: {}", p.eps_milli);
                    println!("cells: {}", s.iblt().n());
                    println!("nonzero_cells: {nonzero}");
                    println!(
                        "fill_ratio: {:.4}",
                        nonzero as f64 / s.iblt().n() as f64
                    );
                }
                SketchFile::Signed(s) => {
                    let p = s.params();
                    let nonzero = s.iblt().cells().iter().filter(|c| !c.is_zero()).count();
                    println!("variant: signed");
                    println!("capacity: {}", p.d);
                    println!("stash: {}", p.r);
                    println!("width: {}", p.key_width);
                    println!("eps_milli: {}", p.eps_milli);
                    println!("cells: {}", s.iblt().n());
                    println!("trits_per_cell: {}", s.iblt().nu());
                    println!("nonzero_cells: {nonzero}");
                    println!(
                        "fill_ratio: {:.4}",
                        nonzero as f64 / s.iblt().n() as f64
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve { listen, file } => {
            let bytes = wire::serialize(&load(&file)?);
            let listener = TcpListener::bind(&listen)?;
            // print the actual address so callers can use port 0
            println!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let mut stream = stream?;
                let len = (bytes.len() as u32).to_le_bytes();
                if stream.write_all(&len).and_then(|_| stream.write_all(&bytes)).is_err() {
                    continue; // peer went away; keep serving
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Fetch { connect, file, json } => {
            let local = load(&file)?;
            let mut stream = TcpStream::connect(&connect)?;
            let mut len_buf = [0u8; 4];
            stream.read_exact(&mut len_buf)?;
            let len = u32::from_le_bytes(len_buf) as usize;
            if len > 1 << 30 {
                return Err(Error::Format("peer announced an absurd length".into()));
            }
            let mut payload = vec![0u8; len];
            stream.read_exact(&mut payload)?;
            let remote = wire::deserialize(&payload)?;
            let diff = match (&local, &remote) {
                (SketchFile::Unsigned(x), SketchFile::Unsigned(y)) => {
                    SketchFile::Unsigned(x.diff(y)?)
                }
                (SketchFile::Signed(x), SketchFile::Signed(y)) => SketchFile::Signed(x.diff(y)?),
                _ => {
                    return Err(Error::IncompatibleSketch(
                        "peer sketch variant differs".into(),
                    ))
                }
            };
            let (text, ok) = render_report(diff, json);
            println!("{text}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RECON_FAILED)
            })
        }
        Cmd::Bench(bench) => run_bench(bench),
    }
}

fn status_name(failed: bool, used_stash: bool) -> &'static str {
    if failed {
        "failed"
    } else if used_stash {
        "stash_corrected"
    } else {
        "iblt_clean"
    }
}

/// Renders a report as text or JSON; the flag is false when reconciliation
/// failed (exit 2).
fn render_report(sk: SketchFile, json: bool) -> (String, bool) {
    match sk {
        SketchFile::Unsigned(mut s) => {
            let out = s.report();
            let failed = out.status == ReportStatus::Failed;
            if json {
                let v = serde_json::json!({
                    "schema": "ibls-report v1",
                    "signed": false,
                    "keys": out.keys.iter().collect::<Vec<_>>(),
                    "status": status_name(failed, out.used_stash),
                    "used_stash": out.used_stash,
                });
                (v.to_string(), !failed)
            } else {
                let mut lines: Vec<String> = out.keys.iter().map(|k| k.to_string()).collect();
                if failed {
                    lines.push("# reconciliation failed; keys above are untrusted".into());
                }
                (lines.join("\n"), !failed)
            }
        }
        SketchFile::Signed(mut s) => {
            let out = s.report();
            let failed = out.status == SignedStatus::Failed;
            if json {
                let v = serde_json::json!({
                    "schema": "ibls-report v1",
                    "signed": true,
                    "keys": out
                        .keys
                        .iter()
                        .map(|(k, s)| serde_json::json!({"key": k, "sign": if *s == 1 {"+"} else {"-"}}))
                        .collect::<Vec<_>>(),
                    "status": status_name(failed, out.used_stash),
                    "used_stash": out.used_stash,
                });
                (v.to_string(), !failed)
            } else {
                let mut lines: Vec<String> = out
                    .keys
                    .iter()
                    .map(|(k, s)| format!("{}{k}", if *s == 1 { '+' } else { '-' }))
                    .collect();
                if failed {
                    lines.push("# reconciliation failed; keys above are untrusted".into());
                }
                (lines.join("\n"), !failed)
            }
        }
    }
}

fn write_csv(path: &Option<PathBuf>, records: &[harness::TrialRecord]) -> Result<(), Error> {
    if let Some(p) = path {
        let mut out = harness::csv_header();
        out.push('\n');
        for r in records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        std::fs::write(p, out)?;
    }
    Ok(())
}

fn run_bench(bench: BenchCmd) -> Result<ExitCode, Error> {
    match bench {
        BenchCmd::FailureRate {
            capacity,
            ratio_milli,
            trials,
            width,
            seed,
            csv,
        } => {
            let records = harness::run_failure_rate(capacity, ratio_milli, width, trials, seed)?;
            write_csv(&csv, &records)?;
            let s = harness::summarize(&records);
            println!("{}", serde_json::to_string_pretty(&s).unwrap());
        }
        BenchCmd::ResidualTail {
            capacity,
            ratio_milli,
            target_failures,
            max_trials,
            width,
            seed,
            csv,
        } => {
            let out = harness::run_residual_tail(
                capacity,
                ratio_milli,
                width,
                target_failures,
                max_trials,
                seed,
            )?;
            write_csv(&csv, &out.records)?;
            let mut residuals: Vec<usize> = out.records.iter().map(|r| r.residual).collect();
            residuals.sort_unstable();
            println!(
                "{}",
                serde_json::json!({
                    "trials_run": out.trials_run,
                    "failures": out.failures,
                    "residuals": residuals,
                })
            );
        }
        BenchCmd::StashPipeline {
            capacity,
            stash,
            trials,
            width,
            eps_milli,
            seed,
            csv,
        } => {
            let r = stash.unwrap_or_else(|| SketchParams::default_r(capacity, width));
            let records =
                harness::run_stash_pipeline(capacity, r, width, eps_milli, trials, seed)?;
            write_csv(&csv, &records)?;
            let s = harness::summarize(&records);
            println!("{}", serde_json::to_string_pretty(&s).unwrap());
        }
    }
    Ok(ExitCode::SUCCESS)
}
