use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::BerRecord;
use crate::error::{Error, Result};

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub detector: String,
    pub k: usize,
    pub n_r: usize,
    pub n_t: usize,
    #[serde(rename = "mod")]
    pub modulation: String,
    pub code: String,
    pub zeta_r: f64,
    pub zeta_t: f64,
    pub arith: String,
    pub snr_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub mults: u64,
    /// Empty for detectors without a latency model.
    pub latency_cycles: Option<u64>,
}

impl From<&BerRecord> for CsvRow {
    fn from(r: &BerRecord) -> Self {
        CsvRow {
            detector: r.detector.to_string(),
            k: r.k,
            n_r: r.n_r,
            n_t: r.n_t,
            modulation: r.modulation.to_string(),
            code: r.code.to_string(),
            zeta_r: r.zeta_r,
            zeta_t: r.zeta_t,
            arith: r.arithmetic.to_string(),
            snr_db: r.snr_db,
            bits: r.bits,
            bit_errors: r.bit_errors,
            ber: r.ber(),
            frames: r.frames,
            frame_errors: r.frame_errors,
            fer: r.fer(),
            mults: r.cost.complex_mults,
            latency_cycles: (r.cost.latency_cycles > 0).then_some(r.cost.latency_cycles),
        }
    }
}

/// Header plus one row per record.
pub fn write_csv_to<W: Write>(w: W, records: &[BerRecord]) -> std::result::Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wr.write_record([
            "detector", "k", "n_r", "n_t", "mod", "code", "zeta_r", "zeta_t", "arith", "snr_db",
            "bits", "bit_errors", "ber", "frames", "frame_errors", "fer", "mults",
            "latency_cycles",
        ])?;
    }
    for r in records {
        wr.serialize(CsvRow::from(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(BufWriter::new(file), records).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Whitespace-separated blocks, one per curve, separated by two blank lines
/// so that gnuplot can address them with `index`.
pub fn write_gnuplot(path: &Path, curves: &[(String, Vec<BerRecord>)]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (i, (label, records)) in curves.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n").map_err(io)?;
        }
        writeln!(w, "# {label}").map_err(io)?;
        writeln!(w, "# snr_db ber ber_lo ber_hi fer").map_err(io)?;
        for r in records {
            let (lo, hi) = r.ber_ci95();
            writeln!(w, "{} {:e} {:e} {:e} {:e}", r.snr_db, r.ber(), lo, hi, r.fer()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
