//! CSV and JSON formats.
//!
//! CSV files use a header row, comma separators and `.` decimals. Lines
//! starting with `#` are comments; writers put provenance there and readers
//! skip them.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchResult, RateResult};
use crate::covariance::KernelSpec;
use crate::error::{Error, Result};
use crate::finescale::TracePoint;
use crate::fourier::{is_power_of_two, Spectrum};
use crate::signals::ExperimentConfig;

fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn parse_number(field: &str, column: &str, row: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Parse(format!("row {row}: column '{column}' is not a number: '{field}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {row}: column '{column}' is not finite")));
    }
    Ok(v)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

/// Columns of a dataset file. `t` and `y` are required.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetRecord {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub f_true: Option<Vec<f64>>,
    pub blurred: Option<Vec<f64>>,
}

impl DatasetRecord {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn write_dataset_csv<W: Write>(mut out: W, record: &DatasetRecord, comments: &[String]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    let mut header = vec!["t", "y"];
    if record.f_true.is_some() {
        header.push("f_true");
    }
    if record.blurred.is_some() {
        header.push("blurred");
    }
    w.write_record(&header)?;
    for i in 0..record.len() {
        let mut row = vec![record.t[i].to_string(), record.y[i].to_string()];
        if let Some(f) = &record.f_true {
            row.push(f[i].to_string());
        }
        if let Some(b) = &record.blurred {
            row.push(b[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset. The grid must be `tᵢ = i/n` and `n` a power of two.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<DatasetRecord> {
    let mut r = reader(input);
    let headers = r.headers()?.clone();
    let ti = column_index(&headers, "t").ok_or_else(|| Error::Parse("dataset is missing column 't'".into()))?;
    let yi = column_index(&headers, "y").ok_or_else(|| Error::Parse("dataset is missing column 'y'".into()))?;
    let fi = column_index(&headers, "f_true");
    let bi = column_index(&headers, "blurred");
    let mut rec = DatasetRecord {
        f_true: fi.map(|_| Vec::new()),
        blurred: bi.map(|_| Vec::new()),
        ..Default::default()
    };
    for (row, result) in r.records().enumerate() {
        let record = result?;
        let get = |idx: usize, name: &str| -> Result<f64> {
            let field = record
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("row {row}: missing column '{name}'")))?;
            parse_number(field, name, row)
        };
        rec.t.push(get(ti, "t")?);
        rec.y.push(get(yi, "y")?);
        if let (Some(i), Some(v)) = (fi, rec.f_true.as_mut()) {
            v.push(get(i, "f_true")?);
        }
        if let (Some(i), Some(v)) = (bi, rec.blurred.as_mut()) {
            v.push(get(i, "blurred")?);
        }
    }
    let n = rec.len();
    if !is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo { n });
    }
    for (i, t) in rec.t.iter().enumerate() {
        if (t - i as f64 / n as f64).abs() > 1e-9 {
            return Err(Error::Parse(format!("row {i}: t = {t} is not on the grid i/n")));
        }
    }
    Ok(rec)
}

/// Writes `K̃[ℓ]` for `ℓ = 0..n−1` (FFT order) as `ell,re,im`.
pub fn write_kernel_table<W: Write>(out: W, kernel: &KernelSpec, comments: &[String]) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    w.write_record(["ell", "re", "im"])?;
    for (l, c) in kernel.spectrum().as_fft_order().iter().enumerate() {
        w.write_record([l.to_string(), c.re.to_string(), c.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a kernel table. Frequencies may be given signed or in FFT order;
/// each residue modulo `n` (the row count) must appear exactly once and the
/// table must be Hermitian.
pub fn read_kernel_table<R: Read>(input: R, dip: Option<f64>) -> Result<KernelSpec> {
    let mut r = reader(input);
    let headers = r.headers()?.clone();
    let idx = |name: &str| {
        column_index(&headers, name).ok_or_else(|| Error::Parse(format!("kernel table is missing column '{name}'")))
    };
    let (li, ri, ii) = (idx("ell")?, idx("re")?, idx("im")?);
    let mut rows = Vec::new();
    for (row, result) in r.records().enumerate() {
        let record = result?;
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .ok_or_else(|| Error::Parse(format!("row {row}: missing column '{name}'")))
        };
        let ell: i64 = field(li, "ell")?
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: 'ell' is not an integer")))?;
        let re = parse_number(field(ri, "re")?, "re", row)?;
        let im = parse_number(field(ii, "im")?, "im", row)?;
        rows.push((ell, Complex64::new(re, im)));
    }
    let n = rows.len();
    if !is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo { n });
    }
    let mut data = vec![None; n];
    for (ell, c) in rows {
        if ell.unsigned_abs() >= n as u64 {
            return Err(Error::Parse(format!("frequency {ell} out of range for {n} rows")));
        }
        let slot = &mut data[ell.rem_euclid(n as i64) as usize];
        if slot.is_some() {
            return Err(Error::Parse(format!("frequency {ell} appears twice")));
        }
        *slot = Some(c);
    }
    let data: Vec<Complex64> = data.into_iter().map(|c| c.expect("every residue filled")).collect();
    KernelSpec::new(Spectrum::from_fft_order(data), dip)
}

pub fn read_config_json(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// A JSON document with a provenance block ahead of the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    pub provenance: serde_json::Value,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_estimate_csv<W: Write>(
    out: W,
    t: &[f64],
    f_hat: &[f64],
    f_true: Option<&[f64]>,
    y: Option<&[f64]>,
    comments: &[String],
) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    let mut header = vec!["t", "f_hat"];
    if f_true.is_some() {
        header.push("f_true");
    }
    if y.is_some() {
        header.push("y");
    }
    w.write_record(&header)?;
    for i in 0..f_hat.len() {
        let mut row = vec![t[i].to_string(), f_hat[i].to_string()];
        if let Some(f) = f_true {
            row.push(f[i].to_string());
        }
        if let Some(y) = y {
            row.push(y[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_noise_csv<W: Write>(out: W, values: &[f64], comments: &[String]) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    w.write_record(["value"])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TracePoint], comments: &[String]) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    w.write_record(["ell", "magnitude", "cutoff"])?;
    for p in trace {
        w.write_record([p.ell.to_string(), p.magnitude.to_string(), p.cutoff.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per signal, SNR, `α` and method.
pub fn write_bench_csv<W: Write>(out: W, results: &[BenchResult], comments: &[String]) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    w.write_record([
        "signal",
        "snr_db",
        "alpha",
        "method",
        "smoothing",
        "smoothing_value",
        "replications",
        "mean_mse",
        "se",
        "typical_j1",
        "mean_kept",
    ])?;
    for r in results {
        for m in &r.methods {
            w.write_record([
                r.config.signal.to_string(),
                r.config.snr_db.to_string(),
                r.config.alpha.to_string(),
                serde_json::to_value(m.method)?.as_str().unwrap_or_default().to_string(),
                m.smoothing.clone(),
                m.smoothing_value.to_string(),
                r.replications.to_string(),
                m.mean_mse.to_string(),
                m.se.to_string(),
                m.typical_j1.to_string(),
                m.mean_kept.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_rate_csv<W: Write>(out: W, result: &RateResult, comments: &[String]) -> Result<()> {
    let mut out = out;
    write_comments(&mut out, comments)?;
    let mut w = writer(out);
    w.write_record(["n", "mean_mse", "se", "typical_j1"])?;
    for p in &result.points {
        w.write_record([p.n.to_string(), p.mean_mse.to_string(), p.se.to_string(), p.typical_j1.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
