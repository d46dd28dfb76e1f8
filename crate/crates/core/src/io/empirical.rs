//! Single-country input-output tables in a plain CSV layout.
//!
//! ```text
//! sector,Agriculture,Manufacturing,FINAL_DEMAND
//! Agriculture,0,1,1
//! Manufacturing,2,0,1
//! VALUE_ADDED,0,2,
//! ```
//!
//! The header names the sectors and holds one `FINAL_DEMAND` column (any
//! position after the label column). Each sector row starts with its name,
//! in header order. The `VALUE_ADDED` row is optional; when absent, value
//! added is derived from the input-side identity.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64};
use crate::linalg::SquareMatrix;
use crate::measures::{rank1_from_table, true_measures};
use crate::model::IoTable;
use crate::stats::ols;

pub const FINAL_DEMAND: &str = "FINAL_DEMAND";
pub const VALUE_ADDED: &str = "VALUE_ADDED";
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unsupported table format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTable {
    pub sector_names: Vec<String>,
    pub flows: SquareMatrix,
    pub final_demand: Vec<f64>,
    pub value_added: Vec<f64>,
    /// Fraction of non-zero entries in the flow block.
    pub density: f64,
}

impl EmpiricalTable {
    pub fn n_sectors(&self) -> usize {
        self.sector_names.len()
    }

    pub fn to_io_table(&self) -> Result<IoTable> {
        IoTable::from_flows(self.flows.clone(), self.final_demand.clone())
    }

    /// Builds a table from parts, checking both accounting identities.
    pub fn new(
        sector_names: Vec<String>,
        flows: SquareMatrix,
        final_demand: Vec<f64>,
        value_added: Option<Vec<f64>>,
        tol: f64,
    ) -> Result<Self> {
        let n = sector_names.len();
        if flows.dim() != n || final_demand.len() != n {
            return Err(Error::Format(format!(
                "{n} sectors but {}x{} flows and {} final demands",
                flows.dim(),
                flows.dim(),
                final_demand.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let x = flows.get(i, j);
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::Format(format!(
                        "flow from `{}` to `{}` is {x}; flows must be non-negative",
                        sector_names[i], sector_names[j]
                    )));
                }
            }
            if !(final_demand[i] >= 0.0 && final_demand[i].is_finite()) {
                return Err(Error::Format(format!(
                    "final demand of `{}` is {}; it must be non-negative",
                    sector_names[i], final_demand[i]
                )));
            }
        }
        let y: Vec<f64> = flows
            .row_sums()
            .iter()
            .zip(&final_demand)
            .map(|(s, f)| s + f)
            .collect();
        let col = flows.col_sums();
        let value_added = match value_added {
            None => y.iter().zip(&col).map(|(yi, c)| yi - c).collect(),
            Some(v) => {
                if v.len() != n {
                    return Err(Error::Format(format!(
                        "{VALUE_ADDED} has {} entries, expected {n}",
                        v.len()
                    )));
                }
                let mut report = Vec::new();
                for i in 0..n {
                    let input_side = col[i] + v[i];
                    let gap = (y[i] - input_side).abs();
                    if !(gap <= tol * y[i].abs().max(input_side.abs())) {
                        report.push(format!(
                            "  row {} (`{}`): output side {} vs input side {} (gap {gap:e})",
                            i + 1,
                            sector_names[i],
                            y[i],
                            input_side
                        ));
                    }
                }
                if !report.is_empty() {
                    return Err(Error::Identity(report.join("\n")));
                }
                v
            }
        };
        let density = if n == 0 {
            0.0
        } else {
            flows.count_nonzero() as f64 / (n * n) as f64
        };
        Ok(EmpiricalTable {
            sector_names,
            flows,
            final_demand,
            value_added,
            density,
        })
    }
}

fn parse_cell(cell: &str, what: impl FnOnce() -> String) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("{}: cannot parse `{cell}` as a number", what())))
}

pub fn read_table<R: Read>(reader: R, tol: f64) -> Result<EmpiricalTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = rows
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    let cols: Vec<String> = header.iter().skip(1).map(|c| c.trim().to_string()).collect();
    let fd_pos = cols
        .iter()
        .position(|c| c == FINAL_DEMAND)
        .ok_or_else(|| Error::Format(format!("header has no `{FINAL_DEMAND}` column")))?;
    if cols.iter().filter(|c| *c == FINAL_DEMAND).count() > 1 {
        return Err(Error::Format(format!("more than one `{FINAL_DEMAND}` column")));
    }
    let sector_cols: Vec<usize> = (0..cols.len()).filter(|&c| c != fd_pos).collect();
    let names: Vec<String> = sector_cols.iter().map(|&c| cols[c].clone()).collect();
    let n = names.len();
    if n == 0 {
        return Err(Error::Format("no sector columns".into()));
    }

    let mut flows = Vec::with_capacity(n);
    let mut final_demand = Vec::with_capacity(n);
    let mut value_added = None;
    for (line, rec) in rows.enumerate() {
        let rec = rec?;
        let line = line + 2;
        let label = rec.get(0).unwrap_or("").trim();
        if label.is_empty() && rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let cell = |c: usize| rec.get(c + 1).unwrap_or("");
        if label == VALUE_ADDED {
            if value_added.is_some() {
                return Err(Error::Format(format!("line {line}: second {VALUE_ADDED} row")));
            }
            if rec.len() < sector_cols.iter().max().unwrap() + 2 {
                return Err(Error::Format(format!(
                    "line {line}: {VALUE_ADDED} row has {} fields, expected one per sector",
                    rec.len() - 1
                )));
            }
            let v = sector_cols
                .iter()
                .zip(&names)
                .map(|(&c, name)| {
                    parse_cell(cell(c), || format!("line {line}, {VALUE_ADDED} of `{name}`"))
                })
                .collect::<Result<Vec<_>>>()?;
            value_added = Some(v);
            continue;
        }
        if rec.len() != cols.len() + 1 {
            return Err(Error::Format(format!(
                "line {line}: {} fields, expected {} (dimension mismatch)",
                rec.len(),
                cols.len() + 1
            )));
        }
        let i = flows.len();
        if i >= n {
            return Err(Error::Format(format!(
                "line {line}: more sector rows than the {n} sectors in the header"
            )));
        }
        if label != names[i] {
            return Err(Error::Format(format!(
                "line {line}: row label `{label}` does not match sector `{}` in column order",
                names[i]
            )));
        }
        let row = sector_cols
            .iter()
            .map(|&c| {
                let v = parse_cell(cell(c), || format!("line {line}, flow `{label}` -> `{}`", cols[c]))?;
                if v < 0.0 {
                    return Err(Error::Format(format!(
                        "line {line}: negative flow {v} from `{label}` to `{}`",
                        cols[c]
                    )));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        flows.push(row);
        final_demand.push(parse_cell(cell(fd_pos), || {
            format!("line {line}, final demand of `{label}`")
        })?);
    }
    if flows.len() != n {
        return Err(Error::Format(format!(
            "{} sector rows for {n} sectors (dimension mismatch)",
            flows.len()
        )));
    }
    EmpiricalTable::new(
        names,
        SquareMatrix::from_rows(&flows)?,
        final_demand,
        value_added,
        tol,
    )
}

pub fn ingest_table(path: &Path, format: TableFormat) -> Result<EmpiricalTable> {
    ingest_table_with_tol(path, format, DEFAULT_IDENTITY_TOL)
}

pub fn ingest_table_with_tol(path: &Path, format: TableFormat, tol: f64) -> Result<EmpiricalTable> {
    match format {
        TableFormat::Csv => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            read_table(std::io::BufReader::new(file), tol)
        }
    }
}

/// Writes `table` in the layout [`read_table`] accepts, value added included.
pub fn write_table<W: Write>(table: &EmpiricalTable, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["sector".to_string()];
    header.extend(table.sector_names.iter().cloned());
    header.push(FINAL_DEMAND.into());
    out.write_record(&header)?;
    for (i, name) in table.sector_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(table.flows.row(i).iter().map(|x| fmt_f64(*x)));
        row.push(fmt_f64(table.final_demand[i]));
        out.write_record(&row)?;
    }
    let mut va = vec![VALUE_ADDED.to_string()];
    va.extend(table.value_added.iter().map(|x| fmt_f64(*x)));
    va.push(String::new());
    out.write_record(&va)?;
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorMeasures {
    pub sector: String,
    pub u1: f64,
    pub d1: f64,
    pub u_tilde: f64,
    pub d_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub n_sectors: usize,
    pub density: f64,
    /// `None` when `U1` does not vary across sectors.
    pub ols_slope: Option<f64>,
    pub ols_intercept: Option<f64>,
    pub pearson_r: Option<f64>,
}

/// Per-sector `U1`, `D1`, `U~`, `D~` and the cross-sector `(U1, D1)` fit.
pub fn measure_empirical(table: &EmpiricalTable) -> Result<(Vec<SectorMeasures>, EmpiricalSummary)> {
    let io = table.to_io_table()?;
    let (u1, d1) = true_measures(&io)?;
    let (ut, dt) = rank1_from_table(&io)?;
    let sectors: Vec<SectorMeasures> = (0..table.n_sectors())
        .map(|i| SectorMeasures {
            sector: table.sector_names[i].clone(),
            u1: u1.values[i],
            d1: d1.values[i],
            u_tilde: ut.values[i],
            d_tilde: dt.values[i],
        })
        .collect();
    let points: Vec<(f64, f64)> = sectors.iter().map(|s| (s.u1, s.d1)).collect();
    let fit = ols(&points).ok();
    Ok((
        sectors,
        EmpiricalSummary {
            n_sectors: table.n_sectors(),
            density: table.density,
            ols_slope: fit.map(|f| f.slope),
            ols_intercept: fit.map(|f| f.intercept),
            pearson_r: fit.map(|f| f.pearson_r),
        },
    ))
}
