//! Energy series as CSV: `t,energy,visc_diss,smag_diss,power_in,hminus1_f,hs_<s>...`.
//!
//! Values use Rust's shortest round-trip decimal form, so parsing a file
//! back reproduces every `f64` bit for bit.

use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::ledger::{EnergyRecord, EnergySeries};
use crate::spectral::norms::SobolevOrder;

const FIXED: [&str; 6] = ["t", "energy", "visc_diss", "smag_diss", "power_in", "hminus1_f"];

pub fn header(s_list: &[SobolevOrder]) -> String {
    let mut cols: Vec<String> = FIXED.iter().map(|c| c.to_string()).collect();
    cols.extend(s_list.iter().map(|s| format!("hs_{}", s.value())));
    cols.join(",")
}

pub fn to_csv(series: &EnergySeries) -> String {
    let mut out = header(&series.s_list);
    out.push('\n');
    for r in &series.records {
        let fixed = [r.t, r.energy, r.visc_diss, r.smag_diss, r.power_in, r.hminus1_f];
        let row: Vec<String> = fixed.iter().chain(&r.hs).map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(series: &EnergySeries, path: &Path) -> Result<()> {
    write_atomic(path, to_csv(series).as_bytes())
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<EnergySeries> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let cols: Vec<&str> = head.split(',').collect();
    if cols.len() < FIXED.len() || cols[..FIXED.len()] != FIXED {
        return Err(err(1, format!("header must start with {}", FIXED.join(","))));
    }
    let s_list = cols[FIXED.len()..]
        .iter()
        .map(|c| {
            c.strip_prefix("hs_")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(1, format!("bad column `{c}` (expected hs_<s>)")))
                .and_then(|s| SobolevOrder::new(s).map_err(|e| err(1, e.to_string())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut series = EnergySeries::new(s_list);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let vals = line
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|_| err(line_no, format!("not a number: `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != cols.len() {
            return Err(err(line_no, format!("expected {} fields, found {}", cols.len(), vals.len())));
        }
        series.records.push(EnergyRecord {
            t: vals[0],
            energy: vals[1],
            visc_diss: vals[2],
            smag_diss: vals[3],
            power_in: vals[4],
            hminus1_f: vals[5],
            hs: vals[FIXED.len()..].to_vec(),
        });
    }
    Ok(series)
}

pub fn read_csv(path: &Path) -> Result<EnergySeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}
