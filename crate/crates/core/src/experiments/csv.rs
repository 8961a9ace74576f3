//! CSV writers for trial records, phase-diagram cells, and convergence tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CellSummary, ConvergenceRow, TrialRecord};
use crate::error::{Error, Result};

pub const TRIAL_HEADER: &str =
    "n,p,beta,trial,seed,connected,phase_sync,freq_sync,final_r,final_diameter,final_freq_spread";
pub const GRID_HEADER: &str = "n,p,beta,freq_sync_fraction,phase_sync_fraction,trials";
pub const CONVERGENCE_HEADER: &str = "n,trials,median,min,q10,q90,max,ads_error";

/// Nine significant digits, in the style of C's `%.9g`.
pub fn fmt_g9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

fn sort_key(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    a.n.cmp(&b.n)
        .then(a.p.total_cmp(&b.p))
        .then(a.beta.total_cmp(&b.beta))
        .then(a.trial.cmp(&b.trial))
}

pub fn write_trials<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| sort_key(a, b));
    writeln!(out, "{TRIAL_HEADER}")?;
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_g9(r.p),
            fmt_g9(r.beta),
            r.trial,
            r.seed,
            flag(r.connected),
            flag(r.phase_sync),
            flag(r.freq_sync),
            fmt_g9(r.final_r),
            fmt_g9(r.final_diameter),
            fmt_g9(r.final_freq_spread),
        )?;
    }
    Ok(())
}

pub fn write_grid<W: Write>(cells: &[CellSummary], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&CellSummary> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.p.total_cmp(&b.p))
            .then(a.beta.total_cmp(&b.beta))
    });
    writeln!(out, "{GRID_HEADER}")?;
    for c in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.n,
            fmt_g9(c.p),
            fmt_g9(c.beta),
            fmt_g9(c.freq_sync_fraction()),
            fmt_g9(c.phase_sync_fraction()),
            c.trials
        )?;
    }
    Ok(())
}

pub fn write_convergence<W: Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.errors.len(),
            fmt_g9(r.median),
            fmt_g9(r.min),
            fmt_g9(r.q10),
            fmt_g9(r.q90),
            fmt_g9(r.max),
            fmt_g9(r.ads_error),
        )?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `write`, attaching the path to any I/O error.
pub fn to_path<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
