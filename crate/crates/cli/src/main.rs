//! `igs`: BER sweeps, figure presets and cost queries for the IGS detector.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use igs_core::channel::KroneckerSpec;
use igs_core::coding::CodeId;
use igs_core::detect::DetectorKind;
use igs_core::harness::{
    preset, run_point, write_csv, write_gnuplot, Arithmetic, BerRecord, Execution, PresetScale,
    SimConfig,
};
use igs_core::hwmodel::{count_mults, LatencyModel, Schedule};
use igs_core::modem::Modulation;

#[derive(Parser, Debug)]
#[command(name = "igs", version, about = "Massive MIMO soft-output detection laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a BER/FER sweep from a config file and/or flags.
    Sweep(SweepArgs),
    /// Reproduce one of the reference figures.
    Presets(PresetArgs),
    /// Multiplication count and latency estimate.
    Cost(CostArgs),
}

#[derive(Args, Debug)]
struct RunOpts {
    /// CSV output file.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Optional gnuplot data file.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    /// Run frames on the current thread only.
    #[arg(long)]
    sequential: bool,
    /// Suppress per-point progress on stderr.
    #[arg(short, long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// TOML configuration; flags below override its fields.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    modulation: Option<Modulation>,
    #[arg(long)]
    code: Option<CodeId>,
    #[arg(long)]
    detector: Option<DetectorKind>,
    #[arg(short, long)]
    k: Option<usize>,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    zeta_r: Option<f64>,
    #[arg(long)]
    zeta_t: Option<f64>,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    bits_per_frame: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    arith: Option<Arithmetic>,
    /// Bit-error target for early stopping (0 disables).
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    min_bits: Option<u64>,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args, Debug)]
struct PresetArgs {
    /// fig1, fig2, fig3, fig4 or fig14.
    name: String,
    /// quick, desk or full.
    #[arg(long, default_value = "desk")]
    scale: PresetScale,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args, Debug)]
struct CostArgs {
    #[arg(long, default_value_t = 128)]
    n_r: usize,
    #[arg(long, default_value_t = 8)]
    n_t: usize,
    /// Iteration counts to report.
    #[arg(short, long, value_delimiter = ',', default_value = "1,2,3")]
    k: Vec<usize>,
    #[arg(long, default_value = "rescheduled")]
    schedule: Schedule,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(a) => sweep(a),
        Command::Presets(a) => presets(a),
        Command::Cost(a) => cost(a),
    }
}

fn sweep_config(a: &SweepArgs) -> Result<SimConfig> {
    let mut cfg = match &a.config {
        Some(path) => SimConfig::load(path)?,
        None => {
            let (Some(n_r), Some(n_t), Some(det)) = (a.n_r, a.n_t, a.detector) else {
                bail!("without --config, --n-r, --n-t and --detector are required");
            };
            let default_k = if det == DetectorKind::MmseExact { 0 } else { 1 };
            SimConfig::new(n_r, n_t, det, a.k.unwrap_or(default_k))
        }
    };
    macro_rules! set {
        ($($field:ident = $v:expr),* $(,)?) => {$(
            if let Some(v) = $v.clone() { cfg.$field = v; }
        )*};
    }
    set!(
        n_r = a.n_r,
        n_t = a.n_t,
        modulation = a.modulation,
        code = a.code,
        detector = a.detector,
        k = a.k,
        snr_db = a.snr,
        frames = a.frames,
        bits_per_frame = a.bits_per_frame,
        seed = a.seed,
        arithmetic = a.arith,
        target_bit_errors = a.target_errors,
        min_bits = a.min_bits,
    );
    if a.zeta_r.is_some() || a.zeta_t.is_some() {
        let (zr, zt) = cfg.zeta();
        cfg.kronecker = Some(KroneckerSpec::new(a.zeta_r.unwrap_or(zr), a.zeta_t.unwrap_or(zt))?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = sweep_config(&a)?;
    let records = run_curves(std::slice::from_ref(&cfg), &a.run)?;
    finish(&a.run, &records)
}

fn presets(a: PresetArgs) -> Result<()> {
    let curves = preset(&a.name, a.scale)?;
    let records = run_curves(&curves, &a.run)?;
    let run = RunOpts {
        out: a.run.out.or_else(|| Some(PathBuf::from(format!("{}.csv", a.name)))),
        ..a.run
    };
    finish(&run, &records)
}

fn run_curves(curves: &[SimConfig], run: &RunOpts) -> Result<Vec<(String, Vec<BerRecord>)>> {
    let exec = if run.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let mut out = Vec::with_capacity(curves.len());
    for cfg in curves {
        let label = cfg.label();
        let mut records = Vec::with_capacity(cfg.snr_db.len());
        for &snr in &cfg.snr_db {
            let t = Instant::now();
            let r = run_point(cfg, snr, exec)?;
            if !run.quiet {
                eprintln!(
                    "{label:<32} {snr:>6.2} dB  ber {:.3e}  fer {:.3e}  {} errors / {} bits  ({:.1?})",
                    r.ber(),
                    r.fer(),
                    r.bit_errors,
                    r.bits,
                    t.elapsed()
                );
            }
            records.push(r);
        }
        out.push((label, records));
    }
    Ok(out)
}

fn finish(run: &RunOpts, curves: &[(String, Vec<BerRecord>)]) -> Result<()> {
    let all: Vec<BerRecord> = curves.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    match &run.out {
        Some(path) => write_csv(path, &all)?,
        None => {
            igs_core::harness::write_csv_to(std::io::stdout().lock(), &all)
                .context("writing CSV to stdout")?;
        }
    }
    if let Some(path) = &run.gnuplot {
        write_gnuplot(path, curves)?;
    }
    report_paths(run.out.as_deref(), run.gnuplot.as_deref(), run.quiet);
    Ok(())
}

fn report_paths(csv: Option<&Path>, gp: Option<&Path>, quiet: bool) {
    if quiet {
        return;
    }
    for p in [csv, gp].into_iter().flatten() {
        eprintln!("wrote {}", p.display());
    }
}

fn cost(a: CostArgs) -> Result<()> {
    let model = LatencyModel::default();
    println!("n_r,n_t,k,schedule,core_mults,gain_mults,mf,rgm,pu,iscu,gs_iteration,overhead,latency_cycles");
    for &k in &a.k {
        let r = model.estimate(a.n_r, a.n_t, k, a.schedule)?;
        let m = count_mults(a.n_t, k);
        let s = |name: &str| r.per_stage[name];
        println!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.n_r,
            a.n_t,
            k,
            a.schedule,
            m.core,
            m.gains,
            s("mf"),
            s("rgm"),
            s("pu"),
            s("iscu"),
            s("gs_iteration"),
            s("overhead"),
            r.latency_cycles
        );
    }
    Ok(())
}
