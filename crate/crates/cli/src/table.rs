//! Result tables and their CSV form.
//!
//! Every CSV starts with a `# seed=… config_hash=…` comment line, then a
//! header. Reals are written with 17 significant digits in the style of C's
//! `%.17g`, so they read back to the same bits.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{io_err, CliError};

pub const CURVE_COLUMNS: [&str; 9] = ["model", "n", "sigma", "alpha", "epsilon", "p_hat", "mc_se", "k", "seed"];
pub const SOLVE_COLUMNS: [&str; 7] = ["model", "n", "alpha", "p", "epsilon_solved", "k", "seed"];
pub const SNAPSHOT_COLUMNS: [&str; 9] = ["model", "n", "sigma", "replicate", "psi", "density", "cdf", "psi0", "epsilon"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CurveRow {
    pub model: String,
    pub n: u32,
    pub sigma: Option<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    pub p_hat: f64,
    pub mc_se: f64,
    pub k: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SolveRow {
    pub model: String,
    pub n: u32,
    pub alpha: f64,
    pub p: f64,
    pub epsilon_solved: f64,
    pub k: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SnapshotRow {
    pub model: String,
    pub n: u32,
    pub sigma: Option<f64>,
    pub replicate: u64,
    pub psi: f64,
    pub density: Option<f64>,
    pub cdf: Option<f64>,
    pub psi0: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResultTable {
    Curve(Vec<CurveRow>),
    Solve(Vec<SolveRow>),
    Snapshots(Vec<SnapshotRow>),
}

/// `%.17g`: 17 significant digits, fixed notation for decimal exponents in
/// [-4, 17), trailing zeros removed.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{x:.prec$}", prec = (16 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

impl ResultTable {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            ResultTable::Curve(_) => &CURVE_COLUMNS,
            ResultTable::Solve(_) => &SOLVE_COLUMNS,
            ResultTable::Snapshots(_) => &SNAPSHOT_COLUMNS,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ResultTable::Curve(r) => r.len(),
            ResultTable::Solve(r) => r.len(),
            ResultTable::Snapshots(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn records(&self) -> Vec<Vec<String>> {
        match self {
            ResultTable::Curve(rows) => rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        r.n.to_string(),
                        opt(r.sigma),
                        fmt_real(r.alpha),
                        fmt_real(r.epsilon),
                        fmt_real(r.p_hat),
                        fmt_real(r.mc_se),
                        r.k.to_string(),
                        r.seed.to_string(),
                    ]
                })
                .collect(),
            ResultTable::Solve(rows) => rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        r.n.to_string(),
                        fmt_real(r.alpha),
                        fmt_real(r.p),
                        fmt_real(r.epsilon_solved),
                        r.k.to_string(),
                        r.seed.to_string(),
                    ]
                })
                .collect(),
            ResultTable::Snapshots(rows) => rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        r.n.to_string(),
                        opt(r.sigma),
                        r.replicate.to_string(),
                        fmt_real(r.psi),
                        opt(r.density),
                        opt(r.cdf),
                        fmt_real(r.psi0),
                        fmt_real(r.epsilon),
                    ]
                })
                .collect(),
        }
    }

    pub fn to_csv(&self, seed: u64, config_hash: &str) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        writeln!(buf, "# seed={seed} config_hash={config_hash}").expect("write to memory");
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        let fail = |e: csv::Error| CliError::Io(format!("csv: {e}"));
        w.write_record(self.columns()).map_err(fail)?;
        for rec in self.records() {
            w.write_record(&rec).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))
    }

    pub fn write(&self, path: &Path, seed: u64, config_hash: &str) -> Result<(), CliError> {
        let bytes = self.to_csv(seed, config_hash)?;
        std::fs::write(path, bytes).map_err(|e| io_err(path, e))
    }
}

/// Which table a CSV is expected to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Curve,
    Solve,
    Snapshots,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Curve => &CURVE_COLUMNS,
            Schema::Solve => &SOLVE_COLUMNS,
            Schema::Snapshots => &SNAPSHOT_COLUMNS,
        }
    }
}

fn parse_rows<T: for<'de> Deserialize<'de>>(rdr: &mut csv::Reader<&[u8]>, origin: &Path) -> Result<Vec<T>, CliError> {
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::Config(format!("{}: data row {}: {e}", origin.display(), i + 1))))
        .collect()
}

/// Read a CSV written by [`ResultTable::write`], checking its columns.
pub fn read_table(bytes: &[u8], schema: Schema, origin: &Path) -> Result<ResultTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?
        .clone();
    let expected = schema.columns();
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::Config(format!(
            "{}: columns [{}] do not match; expected [{}]",
            origin.display(),
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(match schema {
        Schema::Curve => ResultTable::Curve(parse_rows(&mut rdr, origin)?),
        Schema::Solve => ResultTable::Solve(parse_rows(&mut rdr, origin)?),
        Schema::Snapshots => ResultTable::Snapshots(parse_rows(&mut rdr, origin)?),
    })
}

pub fn read_table_file(path: &Path, schema: Schema) -> Result<ResultTable, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    read_table(&bytes, schema, path)
}
