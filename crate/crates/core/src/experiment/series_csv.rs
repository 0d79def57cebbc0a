//! Series CSV with the fixed header `t,I,D,N,N_G,extinct_flag`.
//!
//! Floats are written with 17 significant digits so that a read-back series is
//! bit-identical. Undefined frequencies are written as empty fields.

use std::io::{Read, Write};

use crate::diagnostics::{Exponents, FrequencyRecord, FrequencySeries};
use crate::error::{Error, Result};

pub const HEADER: [&str; 6] = ["t", "I", "D", "N", "N_G", "extinct_flag"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_series<W: Write>(series: &FrequencySeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for r in &series.records {
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.i),
            fmt_f64(r.d),
            fmt_opt(r.n),
            fmt_opt(r.n_g),
            if r.extinct { "1" } else { "0" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_to_string(series: &FrequencySeries) -> Result<String> {
    let mut buf = Vec::new();
    write_series(series, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Reads a series; the exponents are not stored in the file and must be supplied.
pub fn read_series<R: Read>(input: R, exponents: Exponents) -> Result<FrequencySeries> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Config(format!("unexpected CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Config(format!("row {line}: cannot parse `{s}`")))
    };
    let opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.trim().is_empty() {
            Ok(None)
        } else {
            num(s, line).map(Some)
        }
    };
    let mut records = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = k + 2;
        if row.len() != HEADER.len() {
            return Err(Error::Config(format!("row {line}: expected {} fields", HEADER.len())));
        }
        let extinct = match row[5].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Config(format!("row {line}: bad extinct_flag `{other}`"))),
        };
        records.push(FrequencyRecord {
            t: num(&row[0], line)?,
            i: num(&row[1], line)?,
            d: num(&row[2], line)?,
            n: opt(&row[3], line)?,
            n_g: opt(&row[4], line)?,
            extinct,
        });
    }
    FrequencySeries::from_records(exponents, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let ex = Exponents::new(2.5, 0.7).unwrap();
        let recs = vec![
            FrequencyRecord::from_energies(0.1, 1.0 / 3.0, -0.7, ex),
            FrequencyRecord::from_energies(0.2, std::f64::consts::PI, -1e-300, ex),
            FrequencyRecord { t: 0.3, i: 0.0, d: 0.0, n: None, n_g: None, extinct: true },
        ];
        let s = FrequencySeries::from_records(ex, recs).unwrap();
        let text = series_to_string(&s).unwrap();
        assert!(text.starts_with("t,I,D,N,N_G,extinct_flag\n"));
        let back = read_series(text.as_bytes(), ex).unwrap();
        assert_eq!(back.records, s.records);
        assert_eq!(back.extinction_time, Some(0.3));
    }

    #[test]
    fn rejects_bad_header() {
        let ex = Exponents::new(2.0, 1.0).unwrap();
        assert!(read_series("t,I,D\n1,2,3\n".as_bytes(), ex).is_err());
    }
}
