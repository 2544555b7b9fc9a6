//! CSV interfaces for panels, index prices and factor series.
//!
//! Constituent panel: header `date,firm,cap,status`, one row per firm-day,
//! status letters A (active), S (suspended), D (delisted); a firm-day with no
//! row is unlisted (or still delisted after an explicit D row). Index file:
//! header `date,close`. Factor series: header `t,date,ln_p,ln_pe,zeta`, first
//! row is the normalization day with zeta = 0.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market::{ConstituentPanel, FactorSeries, ListingStatus, PanelRow};

/// Supported panel file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelFormat {
    /// Long-form CSV, header `date,firm,cap,status`.
    Csv,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| parse_err(path, line, format!("bad date {s:?}: {e}")))
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != want {
        return Err(parse_err(
            path,
            1,
            format!("expected header {}, got {}", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

/// Load and validate a constituent panel.
pub fn load_panel(path: &Path, format: PanelFormat) -> Result<ConstituentPanel> {
    let PanelFormat::Csv = format;
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["date", "firm", "cap", "status"])?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, got {}", rec.len())));
        }
        let date = parse_date(path, line, &rec[0])?;
        let firm = rec[1].to_string();
        if firm.is_empty() {
            return Err(parse_err(path, line, "empty firm identifier"));
        }
        let cap_field = rec[2].trim();
        let cap = if cap_field.is_empty() {
            None
        } else {
            Some(
                cap_field
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, line, format!("bad cap {cap_field:?}: {e}")))?,
            )
        };
        let status = match &rec[3] {
            "A" => ListingStatus::Active,
            "S" => ListingStatus::Suspended,
            "D" => ListingStatus::Delisted,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    format!("bad status {other:?}: expected A, S or D"),
                ))
            }
        };
        rows.push(PanelRow { date, firm, cap, status, line });
    }
    ConstituentPanel::from_rows(rows, &path.display().to_string())
}

/// Write a panel in the long-form CSV schema. A delisting is written once, on
/// its first day; unlisted days produce no row.
pub fn write_panel_csv(panel: &ConstituentPanel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record(["date", "firm", "cap", "status"])
        .map_err(|e| Error::Validation(e.to_string()))?;
    for i in 0..panel.n_days() {
        for j in 0..panel.n_firms() {
            let status = panel.status(j, i);
            let letter = match status {
                ListingStatus::Active => "A",
                ListingStatus::Suspended => "S",
                ListingStatus::Delisted => {
                    // only the first delisted day is materialized
                    if i > 0 && panel.status(j, i - 1) == ListingStatus::Delisted {
                        continue;
                    }
                    "D"
                }
                ListingStatus::Unlisted => continue,
            };
            let cap = panel.cap(j, i).map(|c| format!("{c}")).unwrap_or_default();
            wtr.write_record([
                panel.dates()[i].format("%Y-%m-%d").to_string().as_str(),
                panel.firms()[j].as_str(),
                cap.as_str(),
                letter,
            ])
            .map_err(|e| Error::Validation(e.to_string()))?;
        }
    }
    wtr.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Read an index price file (`date,close`) into a date-keyed series.
pub fn read_index_csv(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["date", "close"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = parse_date(path, line, &rec[0])?;
        let close: f64 = rec[1]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad close {:?}: {e}", &rec[1])))?;
        if !(close > 0.0) {
            return Err(parse_err(path, line, format!("close must be positive, got {close}")));
        }
        out.push((date, close));
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Write a factor series (`t,date,ln_p,ln_pe,zeta`); the first row is the
/// normalization day `t0` with zeta exactly 0.
pub fn write_factor_csv(series: &FactorSeries, path: &Path) -> Result<()> {
    let mut buf = String::new();
    buf.push_str("t,date,ln_p,ln_pe,zeta\n");
    buf.push_str(&format!(
        "{},{},{},{},0\n",
        series.t0(),
        series.t0_date().format("%Y-%m-%d"),
        series.ln_p0(),
        series.ln_p0(),
    ));
    for k in 0..series.len() {
        buf.push_str(&format!(
            "{},{},{},{},{}\n",
            series.days()[k],
            series.dates()[k].format("%Y-%m-%d"),
            series.ln_p()[k],
            series.ln_pe()[k],
            series.zeta()[k],
        ));
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Read a factor series written by [`write_factor_csv`] (or produced by an
/// equivalent pipeline). The zeta column is checked against `ln_p - ln_pe`
/// and then recomputed so the identity holds to the last bit.
pub fn read_factor_csv(path: &Path) -> Result<FactorSeries> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["t", "date", "ln_p", "ln_pe", "zeta"])?;

    let mut t: Vec<i64> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut ln_p: Vec<f64> = Vec::new();
    let mut ln_pe: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let day: i64 = rec[0]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad day index {:?}: {e}", &rec[0])))?;
        let date = parse_date(path, line, &rec[1])?;
        let p: f64 = rec[2]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad ln_p {:?}: {e}", &rec[2])))?;
        let pe: f64 = rec[3]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad ln_pe {:?}: {e}", &rec[3])))?;
        let z: f64 = rec[4]
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad zeta {:?}: {e}", &rec[4])))?;
        if (z - (p - pe)).abs() > 1e-9 {
            return Err(parse_err(
                path,
                line,
                format!("zeta = {z} inconsistent with ln_p - ln_pe = {}", p - pe),
            ));
        }
        t.push(day);
        dates.push(date);
        ln_p.push(p);
        ln_pe.push(pe);
    }
    if t.len() < 3 {
        return Err(Error::Validation(format!(
            "{}: a factor series needs the normalization row plus at least 2 days",
            path.display()
        )));
    }
    let first_zeta = ln_p[0] - ln_pe[0];
    if first_zeta != 0.0 {
        return Err(Error::Validation(format!(
            "{}: first row must be the normalization day with zeta = 0, got {first_zeta}",
            path.display()
        )));
    }
    FactorSeries::new(
        t[0],
        dates[0],
        ln_p[0],
        t[1..].to_vec(),
        dates[1..].to_vec(),
        ln_p[1..].to_vec(),
        ln_pe[1..].to_vec(),
    )
}
