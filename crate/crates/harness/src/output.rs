//! Sample CSVs and plot data.
//!
//! A sample file has the header `transition,slot,dt,x0,…,x{d-1}` and
//! optionally `y0,…`. Row `n` holds `zₙ`; `slot` and `dt` describe the
//! transition that produced it and are empty on row 0. Reals are written
//! with 17 significant digits, so they read back bit-for-bit.

use std::path::Path;

use xcghmc::ChainRecord;

use crate::error::{HarnessError, Result};
use crate::experiment::SummaryReport;

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_samples(path: &Path, record: &ChainRecord, momenta: bool) -> Result<()> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let w = csv::Writer::from_path(path).map_err(csv_err)?;
    write_samples_to(w, record, momenta, path)
}

/// Writes a sample table to any writer; `origin` only labels errors.
pub fn write_samples_to<W: std::io::Write>(
    mut w: csv::Writer<W>,
    record: &ChainRecord,
    momenta: bool,
    origin: &Path,
) -> Result<()> {
    let csv_err = |source| HarnessError::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let d = record.states[0].dim();
    let mut header = vec![
        "transition".to_string(),
        "slot".to_string(),
        "dt".to_string(),
    ];
    header.extend((0..d).map(|i| format!("x{i}")));
    if momenta {
        header.extend((0..d).map(|i| format!("y{i}")));
    }
    w.write_record(&header).map_err(csv_err)?;

    let mut row = Vec::with_capacity(header.len());
    for (n, z) in record.states.iter().enumerate() {
        row.clear();
        row.push(n.to_string());
        match n.checked_sub(1).map(|i| &record.transitions[i]) {
            Some(t) => {
                row.push(t.slot.to_string());
                row.push(format_real(t.dt));
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        row.extend(z.x().iter().map(|&v| format_real(v)));
        if momenta {
            row.extend(z.y().iter().map(|&v| format_real(v)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(origin, e))
}

/// Contents of a sample CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub slots: Vec<Option<usize>>,
    pub dts: Vec<Option<f64>>,
    pub positions: Vec<Vec<f64>>,
    pub momenta: Option<Vec<Vec<f64>>>,
}

fn parse_err(path: &Path, line: usize, what: impl std::fmt::Display) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        message: format!("record {line}: {what}"),
    }
}

pub fn read_samples(path: &Path) -> Result<SampleTable> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let xs: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with('x'))
        .collect();
    let ys: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with('y'))
        .collect();
    if header.get(1) != Some("slot") || header.get(2) != Some("dt") || xs.is_empty() {
        return Err(parse_err(path, 0, "not a sample file header"));
    }

    let mut table = SampleTable {
        slots: Vec::new(),
        dts: Vec::new(),
        positions: Vec::new(),
        momenta: (!ys.is_empty()).then(Vec::new),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let real = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| parse_err(path, line + 1, format!("{}: {e}", &header[i])))
        };
        table.slots.push(match &rec[1] {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|e| parse_err(path, line + 1, format!("slot: {e}")))?,
            ),
        });
        table.dts.push(if rec[2].is_empty() {
            None
        } else {
            Some(real(2)?)
        });
        table
            .positions
            .push(xs.iter().map(|&i| real(i)).collect::<Result<_>>()?);
        if let Some(m) = table.momenta.as_mut() {
            m.push(ys.iter().map(|&i| real(i)).collect::<Result<_>>()?);
        }
    }
    Ok(table)
}

/// Reads one numeric column from any CSV with a header, skipping empty cells.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let idx = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| {
            HarnessError::spec(
                "column",
                format!("`{column}` not found in {}", path.display()),
            )
        })?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let cell = rec[idx].trim();
        if cell.is_empty() {
            continue;
        }
        out.push(
            cell.parse()
                .map_err(|e| parse_err(path, line + 1, format!("{column}: {e}")))?,
        );
    }
    Ok(out)
}

/// `value,ess_mean,ess_std,ess_stderr` per sweep value; undefined entries are empty.
pub fn plot_data(report: &SummaryReport) -> String {
    let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
    let mut out = String::from("value,ess_mean,ess_std,ess_stderr\n");
    for p in &report.points {
        let a = &p.aggregate;
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_real(p.value),
            opt(a.ess_mean),
            opt(a.ess_std),
            opt(a.ess_stderr)
        ));
    }
    out
}

/// Same as [`plot_data`] from a `summary.json` on disk.
pub fn plot_data_from_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let points = v["points"].as_array().ok_or_else(|| HarnessError::Parse {
        path: path.to_path_buf(),
        message: "missing `points` array".to_string(),
    })?;
    let cell = |x: &serde_json::Value| x.as_f64().map(format_real).unwrap_or_default();
    let mut out = String::from("value,ess_mean,ess_std,ess_stderr\n");
    for p in points {
        let a = &p["aggregate"];
        out.push_str(&format!(
            "{},{},{},{}\n",
            cell(&p["value"]),
            cell(&a["ess_mean"]),
            cell(&a["ess_std"]),
            cell(&a["ess_stderr"])
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
