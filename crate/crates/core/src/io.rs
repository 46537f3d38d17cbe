//! CSV exchange for sampled kernels and measurement traces.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so every file round-trips bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::quad::{Quantity, Signal, TimeGrid};

pub const MEASUREMENT_COLUMNS: [&str; 5] = ["t", "H", "K", "Theta_f", "Y_f"];
pub const VARIANT_COLUMNS: [&str; 3] = ["t", "variant_HL", "variant_thetaL"];

/// A header plus numeric columns, read whole.
struct Table {
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str, path: &Path) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column `{name}`", path.display())))
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v = field.parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "{}: row {}: invalid number `{field}`",
                    path.display(),
                    line + 2
                ))
            })?;
            col.push(v);
        }
    }
    Ok(Table { header, columns })
}

/// The uniform grid a time column was sampled on. It must start at zero.
fn grid_from_times(t: &[f64], path: &Path) -> Result<TimeGrid> {
    if t.len() < 2 {
        return Err(Error::Parse(format!("{}: need at least two rows", path.display())));
    }
    if t[0] != 0.0 {
        return Err(Error::Parse(format!(
            "{}: time column must start at 0, got {}",
            path.display(),
            t[0]
        )));
    }
    let grid = TimeGrid::new(t[1], t.len() - 1)?;
    for (j, &tj) in t.iter().enumerate() {
        if (tj - grid.t(j)).abs() > 1e-9 * grid.dt().max(grid.t(j)) {
            return Err(Error::Parse(format!(
                "{}: time column is not uniform at row {} (t = {tj}, expected {})",
                path.display(),
                j + 2,
                grid.t(j)
            )));
        }
    }
    Ok(grid)
}

fn write_rows(path: &Path, header: &[&str], grid: &TimeGrid, columns: &[&[f64]]) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for j in 0..grid.len() {
        write!(out, "{}", grid.t(j))?;
        for c in columns {
            write!(out, ",{}", c[j])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a `t,value` file into a kernel-valued signal.
pub fn read_kernel_csv(path: &Path) -> Result<Signal> {
    let table = read_table(path)?;
    let grid = grid_from_times(table.require("t", path)?, path)?;
    let values = table.require("value", path)?.to_vec();
    Signal::new(grid, values, Quantity::Kernel)
}

pub fn write_kernel_csv(path: &Path, signal: &Signal) -> Result<()> {
    write_rows(path, &["t", "value"], signal.grid(), &[signal.values()])
}

/// Main traces, plus the variant columns when the set carries them.
pub fn write_measurements_csv(path: &Path, ms: &MeasurementSet) -> Result<()> {
    let mut header = MEASUREMENT_COLUMNS.to_vec();
    let mut cols = vec![ms.h.values(), ms.k.values(), ms.theta_f.values(), ms.y_f.values()];
    if let (Some(hl), Some(tl)) = (&ms.variant_hl, &ms.variant_theta_l) {
        header.extend_from_slice(&VARIANT_COLUMNS[1..]);
        cols.push(hl.values());
        cols.push(tl.values());
    }
    write_rows(path, &header, ms.grid(), &cols)
}

/// Writes only `t,variant_HL,variant_thetaL`.
pub fn write_variant_csv(path: &Path, ms: &MeasurementSet) -> Result<()> {
    match (&ms.variant_hl, &ms.variant_theta_l) {
        (Some(hl), Some(tl)) => write_rows(path, &VARIANT_COLUMNS, ms.grid(), &[hl.values(), tl.values()]),
        _ => Err(Error::Invalid("measurement set has no variant traces".into())),
    }
}

/// Reads a measurement file. Variant columns are picked up when present;
/// `h_tail` and the noise metadata are not stored in the file and come back
/// as defaults.
pub fn read_measurements_csv(path: &Path) -> Result<MeasurementSet> {
    let table = read_table(path)?;
    let grid = grid_from_times(table.require("t", path)?, path)?;
    let sig = |name: &str, q: Quantity| -> Result<Signal> { Signal::new(grid, table.require(name, path)?.to_vec(), q) };
    let optional = |name: &str| -> Result<Option<Signal>> {
        table
            .column(name)
            .map(|c| Signal::new(grid, c.to_vec(), Quantity::Temperature))
            .transpose()
    };
    Ok(MeasurementSet {
        h: sig("H", Quantity::EnergyTrace)?,
        k: sig("K", Quantity::Flux)?,
        theta_f: sig("Theta_f", Quantity::EnergyTrace)?,
        y_f: sig("Y_f", Quantity::Flux)?,
        variant_hl: optional("variant_HL")?,
        variant_theta_l: optional("variant_thetaL")?,
        h_tail: 0.0,
        noise: Default::default(),
    })
}

/// Reads a variant file and returns `(variant_HL, variant_thetaL)`.
pub fn read_variant_csv(path: &Path) -> Result<(Signal, Signal)> {
    let table = read_table(path)?;
    let grid = grid_from_times(table.require("t", path)?, path)?;
    Ok((
        Signal::new(grid, table.require("variant_HL", path)?.to_vec(), Quantity::Temperature)?,
        Signal::new(
            grid,
            table.require("variant_thetaL", path)?.to_vec(),
            Quantity::Temperature,
        )?,
    ))
}
