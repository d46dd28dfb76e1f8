//! Files in and out: CSV records, JSON summaries, SVG scatters, empirical
//! tables and run configuration.

pub mod config;
pub mod empirical;
pub mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::InstanceRecord;

/// 17 significant digits in scientific notation: locale independent and
/// exact on read-back.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC 4180 writer with LF line endings.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub const RECORD_HEADER: [&str; 6] = ["instance", "U1", "D1", "U_tilde", "D_tilde", "violations"];

pub fn write_records<W: Write>(records: &[InstanceRecord], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(RECORD_HEADER)?;
    for r in records {
        out.write_record([
            r.instance.to_string(),
            fmt_f64(r.u1),
            fmt_f64(r.d1),
            fmt_f64(r.u_tilde),
            fmt_f64(r.d_tilde),
            r.violations.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes a header and rows of already-formatted cells.
pub fn write_rows<W: Write>(header: &[&str], rows: &[Vec<String>], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io("<json>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 123456.789e200, 1.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn records_csv_layout() {
        let rec = InstanceRecord {
            instance: 3,
            u1: 1.5,
            d1: 2.0,
            u_tilde: 1.25,
            d_tilde: 1.75,
            violations: 1,
            attempts: 1,
        };
        let mut buf = Vec::new();
        write_records(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "instance,U1,D1,U_tilde,D_tilde,violations");
        assert_eq!(
            lines.next().unwrap(),
            "3,1.5000000000000000e0,2.0000000000000000e0,1.2500000000000000e0,1.7500000000000000e0,1"
        );
    }
}
